//! Synthetic ground-truth sequences.
//!
//! A [`SimilarityWarp`] rotates by `theta`, zooms by `rho` and translates by
//! `(tx, ty)` pixels about the frame centre:
//!
//! ```text
//! x' - cx = rho*( cos(theta)*(x - cx) + sin(theta)*(y - cy)) + tx
//! y' - cy = rho*(-sin(theta)*(x - cx) + cos(theta)*(y - cy)) + ty
//! ```
//!
//! The warped frame takes each output sample from the base frame at the
//! preimage of its position, so a block of the warped frame is predicted from
//! the base frame with the motion field `preimage(p) - p`, which is exactly a
//! four-parameter affine field.
//!
//! Resampling uses a separable 6-tap Lanczos kernel so that synthetic content
//! is never produced by the codec's own interpolation filters.

use crate::error::{Error, Result};
use crate::frame::{Frame, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityWarp {
    /// Rotation in radians.
    pub theta: f64,
    /// Zoom factor.
    pub rho: f64,
    /// Horizontal translation in pixels.
    pub tx: f64,
    /// Vertical translation in pixels.
    pub ty: f64,
}

impl SimilarityWarp {
    pub const IDENTITY: SimilarityWarp = SimilarityWarp {
        theta: 0.0,
        rho: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn new(theta: f64, rho: f64, tx: f64, ty: f64) -> Self {
        SimilarityWarp { theta, rho, tx, ty }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.5..=2.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!("zoom {} outside [0.5, 2]", self.rho)));
        }
        if !(self.theta.abs() <= FRAC_PI_4) {
            return Err(Error::InvalidParameter(format!(
                "rotation {} rad exceeds pi/4",
                self.theta
            )));
        }
        if !self.tx.is_finite() || !self.ty.is_finite() {
            return Err(Error::InvalidParameter("translation must be finite".into()));
        }
        Ok(())
    }

    /// Forward map of a luma position, for a frame centred at `center`.
    pub fn forward(&self, center: (f64, f64), x: f64, y: f64) -> (f64, f64) {
        let (c, s) = (self.theta.cos(), self.theta.sin());
        let (dx, dy) = (x - center.0, y - center.1);
        (
            center.0 + self.rho * (c * dx + s * dy) + self.tx,
            center.1 + self.rho * (-s * dx + c * dy) + self.ty,
        )
    }

    /// Position in the base frame that lands on `(x, y)`.
    pub fn preimage(&self, center: (f64, f64), x: f64, y: f64) -> (f64, f64) {
        let (c, s) = (self.theta.cos(), self.theta.sin());
        let u = x - center.0 - self.tx;
        let w = y - center.1 - self.ty;
        (
            center.0 + (c * u - s * w) / self.rho,
            center.1 + (s * u + c * w) / self.rho,
        )
    }

    /// The warp that undoes this one.
    pub fn inverse(&self) -> SimilarityWarp {
        let (c, s) = (self.theta.cos(), self.theta.sin());
        SimilarityWarp {
            theta: -self.theta,
            rho: 1.0 / self.rho,
            tx: -(c * self.tx - s * self.ty) / self.rho,
            ty: -(s * self.tx + c * self.ty) / self.rho,
        }
    }

    /// `self` applied `k` times.
    pub fn compose_power(&self, k: u32) -> SimilarityWarp {
        let mut acc = SimilarityWarp::IDENTITY;
        for _ in 0..k {
            acc = self.after(&acc);
        }
        acc
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &SimilarityWarp) -> SimilarityWarp {
        let (c, s) = (self.theta.cos(), self.theta.sin());
        SimilarityWarp {
            theta: self.theta + first.theta,
            rho: self.rho * first.rho,
            tx: self.rho * (c * first.tx + s * first.ty) + self.tx,
            ty: self.rho * (-s * first.tx + c * first.ty) + self.ty,
        }
    }

    /// Real-valued quarter-pel motion of the warped frame's pixel `(x, y)`
    /// relative to the base frame.
    pub fn motion_qpel(&self, center: (f64, f64), x: f64, y: f64) -> (f64, f64) {
        let (px, py) = self.preimage(center, x, y);
        (4.0 * (px - x), 4.0 * (py - y))
    }

    /// Ground-truth quarter-pel corner MVs (top-left, top-right) of the
    /// `size`-wide block at `origin` in the warped frame.
    pub fn corner_mvs(&self, center: (f64, f64), origin: (usize, usize), size: usize) -> [(f64, f64); 2] {
        let (x0, y0) = (origin.0 as f64, origin.1 as f64);
        [
            self.motion_qpel(center, x0, y0),
            self.motion_qpel(center, x0 + size as f64 - 1.0, y0),
        ]
    }
}

/// Luma rotation centre of a frame.
pub fn frame_center(width: usize, height: usize) -> (f64, f64) {
    ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
}

const LANCZOS_A: f64 = 3.0;

fn lanczos(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        return 1.0;
    }
    if x.abs() >= LANCZOS_A {
        return 0.0;
    }
    let px = PI * x;
    LANCZOS_A * px.sin() * (px / LANCZOS_A).sin() / (px * px)
}

/// Six normalised weights for taps `floor(pos) - 2 ..= floor(pos) + 3`.
fn lanczos_weights(pos: f64) -> (i64, [f64; 6]) {
    let base = pos.floor();
    let frac = pos - base;
    let mut w = [0.0; 6];
    for (k, wk) in w.iter_mut().enumerate() {
        *wk = lanczos(frac - (k as f64 - 2.0));
    }
    let sum: f64 = w.iter().sum();
    for wk in &mut w {
        *wk /= sum;
    }
    (base as i64 - 2, w)
}

/// Lanczos-3 sample of `plane` at a real position, with edge replication.
pub fn resample(plane: &Plane, x: f64, y: f64) -> f64 {
    let (x0, wx) = lanczos_weights(x);
    let (y0, wy) = lanczos_weights(y);
    let mut acc = 0.0;
    for (j, wyj) in wy.iter().enumerate() {
        if *wyj == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for (i, wxi) in wx.iter().enumerate() {
            row += wxi * plane.at_clamped(x0 + i as i64, y0 + j as i64) as f64;
        }
        acc += wyj * row;
    }
    acc
}

fn to_sample(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Fills a plane where sample `(x, y)` is `base` resampled at `source(x, y)`.
pub fn warp_plane(base: &Plane, source: impl Fn(f64, f64) -> (f64, f64)) -> Plane {
    let mut out = Plane::new(base.width(), base.height());
    for y in 0..base.height() {
        for x in 0..base.width() {
            let (sx, sy) = source(x as f64, y as f64);
            out.set(x, y, to_sample(resample(base, sx, sy)));
        }
    }
    out.pad();
    out
}

/// Warps every plane of `base`. Chroma sample `c` uses half the luma
/// preimage of luma position `2c`.
pub fn synth_affine_pair(base: &Frame, warp: &SimilarityWarp) -> Result<Frame> {
    warp.validate()?;
    Ok(warp_frame(base, warp))
}

fn warp_frame(base: &Frame, warp: &SimilarityWarp) -> Frame {
    let center = frame_center(base.width(), base.height());
    let y = warp_plane(&base.y, |x, y| warp.preimage(center, x, y));
    let chroma = |x: f64, y: f64| {
        let (px, py) = warp.preimage(center, 2.0 * x, 2.0 * y);
        (px / 2.0, py / 2.0)
    };
    let cb = warp_plane(&base.cb, chroma);
    let cr = warp_plane(&base.cr, chroma);
    Frame::from_planes(y, cb, cr, base.poc).expect("warp keeps dimensions")
}

/// Smooth, aperiodic test texture built from random sinusoids.
pub fn textured_frame(width: usize, height: usize, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = texture_plane(width, height, 14, (5.0, 40.0), (24.0, 232.0), &mut rng);
    let (cw, ch) = crate::frame::chroma_dims(width, height);
    let cb = texture_plane(cw, ch, 5, (6.0, 30.0), (80.0, 176.0), &mut rng);
    let cr = texture_plane(cw, ch, 5, (6.0, 30.0), (80.0, 176.0), &mut rng);
    Frame::from_planes(y, cb, cr, 0).expect("consistent dimensions")
}

/// Like [`textured_frame`] with luma wavelengths of 16 to 48 samples, where
/// small-kernel gradient estimates stay close to the true derivative.
pub fn smooth_textured_frame(width: usize, height: usize, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = texture_plane(width, height, 10, (16.0, 48.0), (24.0, 232.0), &mut rng);
    let (cw, ch) = crate::frame::chroma_dims(width, height);
    let cb = texture_plane(cw, ch, 4, (8.0, 24.0), (80.0, 176.0), &mut rng);
    let cr = texture_plane(cw, ch, 4, (8.0, 24.0), (80.0, 176.0), &mut rng);
    Frame::from_planes(y, cb, cr, 0).expect("consistent dimensions")
}

fn texture_plane(
    width: usize,
    height: usize,
    waves: usize,
    wavelength: (f64, f64),
    range: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Plane {
    let comps: Vec<(f64, f64, f64, f64)> = (0..waves)
        .map(|_| {
            let dir = rng.gen_range(0.0..2.0 * PI);
            let lambda = rng.gen_range(wavelength.0..wavelength.1);
            let k = 2.0 * PI / lambda;
            (k * dir.cos(), k * dir.sin(), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.4..1.0))
        })
        .collect();
    let mut values = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            values[y * width + x] = comps
                .iter()
                .map(|&(kx, ky, phase, amp)| amp * (kx * x as f64 + ky * y as f64 + phase).sin())
                .sum();
        }
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { (range.1 - range.0) / (hi - lo) } else { 0.0 };
    let samples: Vec<u8> = values
        .iter()
        .map(|v| to_sample(range.0 + (v - lo) * scale))
        .collect();
    Plane::from_samples(width, height, &samples).expect("consistent dimensions")
}

/// One line of a synthetic-sequence sidecar: the cumulative warp that maps
/// the base frame onto frame `poc`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SidecarEntry {
    pub poc: usize,
    pub warp: SimilarityWarp,
}

pub const SIDECAR_HEADER: &str = "# poc theta_rad rho tx ty";

pub fn format_sidecar(entries: &[SidecarEntry]) -> String {
    let mut out = String::from(SIDECAR_HEADER);
    out.push('\n');
    for e in entries {
        let w = e.warp;
        let _ = writeln!(out, "{} {:e} {:e} {:e} {:e}", e.poc, w.theta, w.rho, w.tx, w.ty);
    }
    out
}

pub fn parse_sidecar(text: &str, path: &Path) -> Result<Vec<SidecarEntry>> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let poc = fields[0].parse().map_err(|e| err(format!("poc: {e}")))?;
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|e| err(format!("{f}: {e}")))?;
        }
        entries.push(SidecarEntry {
            poc,
            warp: SimilarityWarp::new(v[0], v[1], v[2], v[3]),
        });
    }
    Ok(entries)
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Vec<SidecarEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sidecar(&text, path)
}

/// `count` frames where frame `k` is `base` warped by `step` applied `k` times.
pub fn synth_sequence(base: &Frame, step: &SimilarityWarp, count: usize) -> Result<(Vec<Frame>, Vec<SidecarEntry>)> {
    step.validate()?;
    let mut frames = Vec::with_capacity(count);
    let mut entries = Vec::with_capacity(count);
    for k in 0..count {
        let warp = step.compose_power(k as u32);
        // Cumulative warps may leave the single-step parameter range; the
        // resampler itself has no such limit.
        let mut f = if k == 0 { base.clone() } else { warp_frame(base, &warp) };
        f.poc = k;
        frames.push(f);
        entries.push(SidecarEntry { poc: k, warp });
    }
    Ok((frames, entries))
}
