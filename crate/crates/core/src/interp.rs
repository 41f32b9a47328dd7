//! One-step 1/64-pel interpolation and affine motion compensation.
//!
//! Filter rows come from the DCT-based interpolation closed form: the
//! `N`-point DCT-II basis of the tap positions, evaluated at the fractional
//! position and smoothed by a cosine window. Rows are scaled by 64, rounded,
//! then corrected on the tap nearest the fractional position so that each row
//! sums to 64. With a window span of 11 (luma, 8 taps) and 5 (chroma, 4 taps)
//! the half-sample rows come out as `[-1, 4, -11, 40, 40, -11, 4, -1]` and
//! `[-4, 36, 36, -4]`.
//!
//! Separable filtering keeps the horizontal result unshifted in `i32` and
//! applies a single rounding shift of 12 after the vertical pass.

use crate::error::{Error, Result};
use crate::frame::{Block, Frame, Plane};
use crate::model::{div_round, AffineModel, MotionVector, MvPrecision};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const PHASES: usize = 64;
pub const FILTER_SHIFT: u32 = 6;

/// Which tap set to filter with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    /// 8 taps.
    Luma,
    /// 4 taps.
    Chroma,
}

impl FilterKind {
    pub const fn taps(self) -> usize {
        match self {
            FilterKind::Luma => 8,
            FilterKind::Chroma => 4,
        }
    }

    /// Taps left of (above) the integer position.
    pub const fn before(self) -> usize {
        self.taps() / 2 - 1
    }

    /// Taps right of (below) the integer position.
    pub const fn after(self) -> usize {
        self.taps() / 2
    }

    fn window_span(self) -> f64 {
        match self {
            FilterKind::Luma => 11.0,
            FilterKind::Chroma => 5.0,
        }
    }
}

/// Computes one filter row of `num_taps` coefficients (4 or 8) for the
/// fractional offset `phase / 64`.
pub fn generate_dctif_taps(num_taps: usize, phase: usize) -> Result<Vec<i16>> {
    let kind = match num_taps {
        8 => FilterKind::Luma,
        4 => FilterKind::Chroma,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "interpolation filters have 4 or 8 taps, not {num_taps}"
            )))
        }
    };
    if phase >= PHASES {
        return Err(Error::InvalidParameter(format!("phase {phase} outside 0..64")));
    }
    if phase > PHASES / 2 {
        let mut row = dctif_row(kind, PHASES - phase);
        row.reverse();
        return Ok(row);
    }
    Ok(dctif_row(kind, phase))
}

/// Real-valued closed-form coefficients, before scaling and rounding.
pub fn dctif_real(kind: FilterKind, phase: usize) -> Vec<f64> {
    dctif_real_at(kind, phase as f64 / PHASES as f64)
}

/// Closed-form coefficients at any fractional offset `frac` in `[0, 1)`.
pub fn dctif_real_at(kind: FilterKind, frac: f64) -> Vec<f64> {
    let n = kind.taps();
    let nf = n as f64;
    let pos = (n / 2 - 1) as f64 + frac;
    (0..n)
        .map(|m| {
            let basis: f64 = (0..n)
                .map(|k| {
                    let ck2 = if k == 0 { FRAC_1_SQRT_2 * FRAC_1_SQRT_2 } else { 1.0 };
                    let kf = k as f64;
                    ck2 * ((2.0 * m as f64 + 1.0) * kf * PI / (2.0 * nf)).cos()
                        * ((2.0 * pos + 1.0) * kf * PI / (2.0 * nf)).cos()
                })
                .sum();
            let window = (PI * (m as f64 - pos) / kind.window_span()).cos();
            2.0 / nf * basis * window
        })
        .collect()
}

fn dctif_row(kind: FilterKind, phase: usize) -> Vec<i16> {
    debug_assert!(phase <= PHASES / 2);
    let mut row: Vec<i16> = dctif_real(kind, phase)
        .iter()
        .map(|c| (c * PHASES as f64).round() as i16)
        .collect();
    let diff = PHASES as i16 - row.iter().sum::<i16>();
    let left = kind.before();
    if phase == PHASES / 2 {
        // Symmetric row: the sum is even, split the correction.
        row[left] += diff / 2;
        row[left + 1] += diff - diff / 2;
    } else {
        row[left] += diff;
    }
    row
}

/// All 64 phases of the luma and chroma filters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterBank {
    luma: [[i16; 8]; PHASES],
    chroma: [[i16; 4]; PHASES],
}

impl Default for FilterBank {
    fn default() -> Self {
        Self::new()
    }
}

impl FilterBank {
    pub fn new() -> Self {
        let mut luma = [[0i16; 8]; PHASES];
        let mut chroma = [[0i16; 4]; PHASES];
        for p in 0..PHASES {
            luma[p].copy_from_slice(&generate_dctif_taps(8, p).expect("valid phase"));
            chroma[p].copy_from_slice(&generate_dctif_taps(4, p).expect("valid phase"));
        }
        FilterBank { luma, chroma }
    }

    pub fn luma(&self, phase: usize) -> &[i16; 8] {
        &self.luma[phase]
    }

    pub fn chroma(&self, phase: usize) -> &[i16; 4] {
        &self.chroma[phase]
    }

    pub fn row(&self, kind: FilterKind, phase: usize) -> &[i16] {
        match kind {
            FilterKind::Luma => &self.luma[phase],
            FilterKind::Chroma => &self.chroma[phase],
        }
    }
}

/// A rectangle of a plane whose samples share one 1/64-pel MV.
///
/// `x`, `y` and `mv` are in the sample grid of the plane being filtered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McUnit {
    pub x: i64,
    pub y: i64,
    pub width: usize,
    pub height: usize,
    pub mv: MotionVector,
}

/// Interpolated samples and the number of filter applications spent on them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interpolated {
    pub block: Block,
    pub count: u64,
}

/// Filter applications for a `width x height` unit at the given phases.
pub fn interpolation_count(width: usize, height: usize, fx: usize, fy: usize, kind: FilterKind) -> u64 {
    let (w, h) = (width as u64, height as u64);
    match (fx != 0, fy != 0) {
        (false, false) => 0,
        (true, false) | (false, true) => w * h,
        (true, true) => (h + kind.taps() as u64 - 1) * w + h * w,
    }
}

#[inline]
fn split_mv(c: i32) -> (i64, usize) {
    ((c >> FILTER_SHIFT) as i64, (c & (PHASES as i32 - 1)) as usize)
}

/// Interpolates one MC unit. The filter reach must lie inside the padded plane.
pub fn interpolate_unit(reference: &Plane, unit: &McUnit, bank: &FilterBank, kind: FilterKind) -> Result<Interpolated> {
    if unit.mv.prec != MvPrecision::Sixtyfourth {
        return Err(Error::WrongPrecision {
            expected: 64,
            found: unit.mv.prec.denom() as u32,
        });
    }
    if unit.width == 0 || unit.height == 0 {
        return Err(Error::InvalidParameter("empty MC unit".into()));
    }
    let (dx, fx) = split_mv(unit.mv.h);
    let (dy, fy) = split_mv(unit.mv.v);
    let (ix, iy) = (unit.x + dx, unit.y + dy);
    check_reach(reference, ix, iy, unit.width, unit.height, fx, fy, kind)?;
    let mut block = Block::new(unit.width, unit.height);
    let count = filter_block(reference, ix, iy, fx, fy, kind, bank, &mut block.data, unit.width, unit.height, &mut Vec::new());
    Ok(Interpolated { block, count })
}

#[allow(clippy::too_many_arguments)]
fn check_reach(plane: &Plane, ix: i64, iy: i64, w: usize, h: usize, fx: usize, fy: usize, kind: FilterKind) -> Result<()> {
    let m = plane.margin() as i64;
    let (bx, ax) = if fx != 0 { (kind.before() as i64, kind.after() as i64) } else { (0, 0) };
    let (by, ay) = if fy != 0 { (kind.before() as i64, kind.after() as i64) } else { (0, 0) };
    let (x0, x1) = (ix - bx, ix + w as i64 + ax);
    let (y0, y1) = (iy - by, iy + h as i64 + ay);
    let (min_x, max_x) = (-m, plane.width() as i64 + m);
    let (min_y, max_y) = (-m, plane.height() as i64 + m);
    if x0 < min_x || x1 > max_x || y0 < min_y || y1 > max_y {
        return Err(Error::ReachViolation {
            x0,
            x1,
            y0,
            y1,
            min_x,
            max_x,
            min_y,
            max_y,
        });
    }
    Ok(())
}

/// Moves an integer position so the filter window stays inside the padded
/// plane. Because margins replicate the edge, a window lying entirely beyond
/// an edge reads the same samples before and after the move, so the result
/// equals filtering an infinitely replicated plane.
fn clamp_origin(pos: i64, extent: usize, frac: usize, kind: FilterKind, dim: usize, margin: usize) -> i64 {
    let (before, after) = if frac != 0 { (kind.before() as i64, kind.after() as i64) } else { (0, 0) };
    debug_assert!(extent + (before + after) as usize <= margin);
    let lo = before - margin as i64;
    let hi = (dim + margin) as i64 - extent as i64 - after;
    pos.clamp(lo, hi)
}

/// Filters `w x h` samples at integer origin `(ix, iy)`. Reach must already be valid.
#[allow(clippy::too_many_arguments)]
fn filter_block(
    plane: &Plane,
    ix: i64,
    iy: i64,
    fx: usize,
    fy: usize,
    kind: FilterKind,
    bank: &FilterBank,
    out: &mut [u8],
    out_stride: usize,
    h: usize,
    tmp: &mut Vec<i32>,
) -> u64 {
    let w = out_stride;
    let data = plane.data();
    let stride = plane.stride();
    let taps = kind.taps();
    let before = kind.before() as i64;
    let at = |x: i64, y: i64| plane.index(x as isize, y as isize);

    match (fx != 0, fy != 0) {
        (false, false) => {
            for r in 0..h {
                let s = at(ix, iy + r as i64);
                out[r * w..(r + 1) * w].copy_from_slice(&data[s..s + w]);
            }
        }
        (true, false) => {
            let c = bank.row(kind, fx);
            for r in 0..h {
                let s = at(ix - before, iy + r as i64);
                let src = &data[s..s + w + taps - 1];
                for (col, o) in out[r * w..(r + 1) * w].iter_mut().enumerate() {
                    let acc: i32 = c.iter().zip(&src[col..col + taps]).map(|(&k, &p)| k as i32 * p as i32).sum();
                    *o = ((acc + 32) >> FILTER_SHIFT).clamp(0, 255) as u8;
                }
            }
        }
        (false, true) => {
            let c = bank.row(kind, fy);
            for r in 0..h {
                let s = at(ix, iy + r as i64 - before);
                for (col, o) in out[r * w..(r + 1) * w].iter_mut().enumerate() {
                    let acc: i32 = c
                        .iter()
                        .enumerate()
                        .map(|(t, &k)| k as i32 * data[s + t * stride + col] as i32)
                        .sum();
                    *o = ((acc + 32) >> FILTER_SHIFT).clamp(0, 255) as u8;
                }
            }
        }
        (true, true) => {
            let ch = bank.row(kind, fx);
            let cv = bank.row(kind, fy);
            let rows = h + taps - 1;
            tmp.clear();
            tmp.reserve(rows * w);
            for r in 0..rows {
                let s = at(ix - before, iy - before + r as i64);
                let src = &data[s..s + w + taps - 1];
                for col in 0..w {
                    tmp.push(ch.iter().zip(&src[col..col + taps]).map(|(&k, &p)| k as i32 * p as i32).sum());
                }
            }
            for r in 0..h {
                for (col, o) in out[r * w..(r + 1) * w].iter_mut().enumerate() {
                    let acc: i32 = cv
                        .iter()
                        .enumerate()
                        .map(|(t, &k)| k as i32 * tmp[(r + t) * w + col])
                        .sum();
                    *o = ((acc + 2048) >> (2 * FILTER_SHIFT)).clamp(0, 255) as u8;
                }
            }
        }
    }
    interpolation_count(w, h, fx, fy, kind)
}

/// Interpolates a `width x height` block at `(x, y)` displaced by a 1/64 MV,
/// treating the plane as infinitely edge-replicated.
pub fn predict_block(
    plane: &Plane,
    x: i64,
    y: i64,
    width: usize,
    height: usize,
    mv: MotionVector,
    kind: FilterKind,
    bank: &FilterBank,
) -> Interpolated {
    let mut block = Block::new(width, height);
    let count = predict_into(plane, x, y, width, height, mv, kind, bank, &mut block.data, &mut Vec::new());
    Interpolated { block, count }
}

#[allow(clippy::too_many_arguments)]
fn predict_into(
    plane: &Plane,
    x: i64,
    y: i64,
    width: usize,
    height: usize,
    mv: MotionVector,
    kind: FilterKind,
    bank: &FilterBank,
    out: &mut [u8],
    tmp: &mut Vec<i32>,
) -> u64 {
    let mv = mv.to_pel64();
    let (dx, fx) = split_mv(mv.h);
    let (dy, fy) = split_mv(mv.v);
    let m = plane.margin();
    let ix = clamp_origin(x + dx, width, fx, kind, plane.width(), m);
    let iy = clamp_origin(y + dy, height, fy, kind, plane.height(), m);
    filter_block(plane, ix, iy, fx, fy, kind, bank, out, width, height, tmp)
}

/// Interpolation filter variant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FilterMode {
    /// One DCT-based filter pass straight to 1/64 pel.
    #[default]
    OneStep,
    /// Legacy path: DCT-based filter to 1/4 (luma) or 1/8 (chroma) pel,
    /// then bilinear interpolation of the remainder. Kept as a comparison oracle.
    TwoStep,
}

/// Two-step interpolation of a single sample.
fn two_step_sample(plane: &Plane, x: i64, y: i64, mv: MotionVector, kind: FilterKind, bank: &FilterBank, tmp: &mut Vec<i32>) -> (u8, u64) {
    let mv = mv.to_pel64();
    // Luma grid is 1/4 (16 units of 1/64), chroma grid 1/8 (8 units).
    let step: i32 = match kind {
        FilterKind::Luma => 16,
        FilterKind::Chroma => 8,
    };
    let (gx, rx) = (mv.h.div_euclid(step), mv.h.rem_euclid(step));
    let (gy, ry) = (mv.v.div_euclid(step), mv.v.rem_euclid(step));
    let mut count = 0;
    let mut grid = |ox: i32, oy: i32| -> i32 {
        let mut px = [0u8];
        let g = MotionVector::pel64((gx + ox) * step, (gy + oy) * step);
        count += predict_into(plane, x, y, 1, 1, g, kind, bank, &mut px, tmp);
        px[0] as i32
    };
    let a = grid(0, 0);
    if rx == 0 && ry == 0 {
        return (a as u8, count);
    }
    let b = if rx != 0 { grid(1, 0) } else { a };
    let c = if ry != 0 { grid(0, 1) } else { a };
    let d = if rx != 0 && ry != 0 { grid(1, 1) } else if rx != 0 { b } else { c };
    let shift = 2 * step.trailing_zeros();
    let v = (step - rx) * (step - ry) * a + rx * (step - ry) * b + (step - rx) * ry * c + rx * ry * d;
    (((v + (1 << (shift - 1))) >> shift) as u8, count + 1)
}

/// Two-step interpolation of a block; every sample is handled independently.
#[allow(clippy::too_many_arguments)]
pub fn predict_block_two_step(
    plane: &Plane,
    x: i64,
    y: i64,
    width: usize,
    height: usize,
    mv: MotionVector,
    kind: FilterKind,
    bank: &FilterBank,
) -> Interpolated {
    let mut block = Block::new(width, height);
    let mut tmp = Vec::new();
    let mut count = 0;
    for r in 0..height {
        for c in 0..width {
            let (v, n) = two_step_sample(plane, x + c as i64, y + r as i64, mv, kind, bank, &mut tmp);
            block.data[r * width + c] = v;
            count += n;
        }
    }
    Interpolated { block, count }
}

fn pow2_floor(v: u64) -> u64 {
    if v == 0 {
        0
    } else {
        1 << (63 - v.leading_zeros())
    }
}

/// MC unit dimensions for a PU under `model`.
///
/// With the MV spreads `mvd_t` (top-left to top-right) and `mvd_l` (top-left
/// to bottom-left) in pixels and a target precision of 1/8 pel, the raw sizes
/// are `pu / mvd * 1/8`. Each is rounded down to a power of two and clamped to
/// `[4, pu]`; a zero spread keeps the whole PU.
pub fn mc_unit_size(pu_width: usize, pu_height: usize, model: &AffineModel) -> (usize, usize) {
    let (mv0, mv1, mv2) = (model.mv0, model.mv1, model.third_corner());
    let mvd_t = (mv1 - mv0).max_abs() as u64;
    let mvd_l = (mv2 - mv0).max_abs() as u64;
    // pu / (mvd_q / 4) / 8 == pu / (2 * mvd_q)
    let size = |pu: usize, mvd_q: u64| -> usize {
        if mvd_q == 0 {
            return pu;
        }
        let raw = pu as u64 / (2 * mvd_q);
        (pow2_floor(raw) as usize).clamp(4, pu.max(4)).min(pu)
    };
    (size(pu_width, mvd_t), size(pu_height, mvd_l))
}

/// How the PU is tiled into MC units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UnitSizing {
    /// Sizes from [`mc_unit_size`].
    #[default]
    Adaptive,
    /// Fixed luma unit size; `Fixed(1, 1)` is pixel-based MC.
    Fixed(usize, usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct McOptions {
    pub sizing: UnitSizing,
    pub filter: FilterMode,
}

impl McOptions {
    pub fn pixel_based() -> Self {
        McOptions {
            sizing: UnitSizing::Fixed(1, 1),
            filter: FilterMode::OneStep,
        }
    }
}

/// Luma and chroma prediction of one PU with interpolation telemetry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prediction {
    pub y: Block,
    pub cb: Block,
    pub cr: Block,
    /// Luma MC unit size.
    pub unit_size: (usize, usize),
    /// Number of luma MC units.
    pub units: usize,
    pub luma_count: u64,
    pub chroma_count: u64,
}

impl Prediction {
    pub fn interpolation_count(&self) -> u64 {
        self.luma_count + self.chroma_count
    }
}

/// Halves a luma 1/64 MV into chroma 1/64 units.
pub fn chroma_mv(mv: MotionVector) -> MotionVector {
    let mv = mv.to_pel64();
    MotionVector::pel64(div_round(mv.h as i64, 2) as i32, div_round(mv.v as i64, 2) as i32)
}

#[allow(clippy::too_many_arguments)]
fn predict_unit(
    plane: &Plane,
    x: i64,
    y: i64,
    w: usize,
    h: usize,
    mv: MotionVector,
    kind: FilterKind,
    bank: &FilterBank,
    filter: FilterMode,
    out: &mut Block,
    ox: usize,
    oy: usize,
    tmp: &mut Vec<i32>,
) -> u64 {
    match filter {
        FilterMode::OneStep => {
            if w == out.width {
                let start = oy * out.width;
                predict_into(plane, x, y, w, h, mv, kind, bank, &mut out.data[start..start + w * h], tmp)
            } else {
                let mut buf = vec![0u8; w * h];
                let n = predict_into(plane, x, y, w, h, mv, kind, bank, &mut buf, tmp);
                for r in 0..h {
                    out.row_mut(oy + r)[ox..ox + w].copy_from_slice(&buf[r * w..(r + 1) * w]);
                }
                n
            }
        }
        FilterMode::TwoStep => {
            let mut n = 0;
            for r in 0..h {
                for c in 0..w {
                    let (v, k) = two_step_sample(plane, x + c as i64, y + r as i64, mv, kind, bank, tmp);
                    out.data[(oy + r) * out.width + ox + c] = v;
                    n += k;
                }
            }
            n
        }
    }
}

/// Affine motion compensation of the PU described by `model` (its origin and
/// size). Each MC unit uses the model MV at its centre, rounded down to integer
/// coordinates. Chroma units are half the luma unit size (at least one
/// sample) and take the halved MV of the co-located luma position.
pub fn motion_compensate_affine(reference: &Frame, model: &AffineModel, bank: &FilterBank, opts: McOptions) -> Result<Prediction> {
    let s = model.size as usize;
    let (uw, uh) = match opts.sizing {
        UnitSizing::Adaptive => mc_unit_size(s, s, model),
        UnitSizing::Fixed(w, h) => {
            if w == 0 || h == 0 || !s.is_multiple_of(w) || !s.is_multiple_of(h) {
                return Err(Error::InvalidParameter(format!("unit {w}x{h} does not tile a {s}x{s} PU")));
            }
            (w, h)
        }
    };
    let (ox, oy) = (model.origin.0 as i64, model.origin.1 as i64);
    let mut tmp = Vec::new();

    let mut y = Block::new(s, s);
    let mut luma_count = 0;
    for uy in (0..s).step_by(uh) {
        for ux in (0..s).step_by(uw) {
            let mv = model.field_at((ux + (uw - 1) / 2) as i32, (uy + (uh - 1) / 2) as i32);
            luma_count += predict_unit(
                &reference.y, ox + ux as i64, oy + uy as i64, uw, uh, mv, FilterKind::Luma, bank, opts.filter, &mut y, ux, uy, &mut tmp,
            );
        }
    }

    let cs = s / 2;
    let (cw, chh) = ((uw / 2).max(1), (uh / 2).max(1));
    let mut cb = Block::new(cs, cs);
    let mut cr = Block::new(cs, cs);
    let mut chroma_count = 0;
    for cy in (0..cs).step_by(chh) {
        for cx in (0..cs).step_by(cw) {
            let lx = 2 * cx + (2 * cw - 1) / 2;
            let ly = 2 * cy + (2 * chh - 1) / 2;
            let mv = chroma_mv(model.field_at(lx as i32, ly as i32));
            let (px, py) = (ox / 2 + cx as i64, oy / 2 + cy as i64);
            for (plane, out) in [(&reference.cb, &mut cb), (&reference.cr, &mut cr)] {
                chroma_count += predict_unit(plane, px, py, cw, chh, mv, FilterKind::Chroma, bank, opts.filter, out, cx, cy, &mut tmp);
            }
        }
    }

    Ok(Prediction {
        y,
        cb,
        cr,
        unit_size: (uw, uh),
        units: (s / uw) * (s / uh),
        luma_count,
        chroma_count,
    })
}

/// Translational MC of a square PU; one unit covers the whole block.
pub fn motion_compensate_translational(
    reference: &Frame,
    origin: (i32, i32),
    size: u32,
    mv: MotionVector,
    bank: &FilterBank,
    filter: FilterMode,
) -> Result<Prediction> {
    let model = AffineModel::translational(mv.to_qpel_rounded(), size)?.at(origin);
    motion_compensate_affine(
        reference,
        &model,
        bank,
        McOptions {
            sizing: UnitSizing::Adaptive,
            filter,
        },
    )
}

/// Pixel-based luma prediction of a PU plus an `apron` of extrapolated field
/// around it. Output is `(size + 2*apron)` square.
pub fn predict_luma_pixelwise(reference: &Plane, model: &AffineModel, apron: usize, bank: &FilterBank) -> Block {
    let s = model.size as usize;
    let n = s + 2 * apron;
    let mut out = Block::new(n, n);
    let mut tmp = Vec::with_capacity(16);
    let (ox, oy) = (model.origin.0 as i64, model.origin.1 as i64);
    let a = apron as i64;
    for r in 0..n {
        for c in 0..n {
            let (lx, ly) = (c as i64 - a, r as i64 - a);
            let mv = model.field_at(lx as i32, ly as i32);
            let idx = r * n + c;
            predict_into(reference, ox + lx, oy + ly, 1, 1, mv, FilterKind::Luma, bank, &mut out.data[idx..idx + 1], &mut tmp);
        }
    }
    out
}
