//! Motion estimation: a translational baseline, Gauss-Newton affine search
//! and an exhaustive affine oracle for small radii.

use crate::error::{Error, Result};
use crate::frame::{sse, Block, Frame, Plane};
use crate::interp::{predict_block, predict_luma_pixelwise, FilterBank, FilterKind};
use crate::model::{AffineModel, BasisRow, MotionVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    /// Search range in whole pixels around zero displacement.
    pub range: u32,
    pub max_iters_affine: usize,
    /// RD multiplier; the searches here minimise distortion only and carry it
    /// for callers that add rate terms.
    pub lambda: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            range: 64,
            max_iters_affine: 6,
            lambda: 0.0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.range == 0 {
            return Err(Error::InvalidParameter("search range must be at least 1".into()));
        }
        if self.max_iters_affine == 0 {
            return Err(Error::InvalidParameter("max_iters_affine must be at least 1".into()));
        }
        Ok(())
    }

    fn qpel_range(&self) -> i32 {
        self.range as i32 * 4
    }
}

/// Sobel responses over a block, kept as integer sums: the gradient in
/// sample levels per pixel is `gx / 8`, `gy / 8`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<i32>,
    pub gy: Vec<i32>,
}

impl GradientField {
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.gx[i] as f64 / 8.0, self.gy[i] as f64 / 8.0)
    }
}

/// Gradients of the interior of `block`, which carries a one-sample border.
pub fn sobel_gradient(block: &Block) -> GradientField {
    let (w, h) = (block.width - 2, block.height - 2);
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    let p = |x: usize, y: usize| block.at(x, y) as i32;
    for y in 1..=h {
        for x in 1..=w {
            gx.push(p(x + 1, y - 1) + 2 * p(x + 1, y) + p(x + 1, y + 1) - p(x - 1, y - 1) - 2 * p(x - 1, y) - p(x - 1, y + 1));
            gy.push(p(x - 1, y + 1) + 2 * p(x, y + 1) + p(x + 1, y + 1) - p(x - 1, y - 1) - 2 * p(x, y - 1) - p(x + 1, y - 1));
        }
    }
    GradientField { width: w, height: h, gx, gy }
}

/// Normal equations `h * d = rhs` for a corner-MV update `d` in pixels,
/// ordered `[dMV0h, dMV1h, dMV0v, dMV1v]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalSystem {
    pub h: [[f64; 4]; 4],
    pub rhs: [f64; 4],
}

/// Linearised prediction change per pixel of corner motion, scaled by
/// `8 * (s - 1)` so it stays integral.
fn jacobian_row(gx: i32, gy: i32, x: usize, y: usize, size: u32) -> [i64; 4] {
    let [row_h, row_v] = BasisRow::at(x as i32, y as i32, size).matrix();
    let (gx, gy) = (gx as i64, gy as i64);
    std::array::from_fn(|k| gx * row_h[k] + gy * row_v[k])
}

/// Accumulates the Gauss-Newton system over a block. `err` is the residual
/// `cur - pred` in raster order with the dimensions of `grads`; `size` is the
/// block width that defines the corner basis.
pub fn build_normal_system(err: &[i32], grads: &GradientField, size: u32) -> NormalSystem {
    assert_eq!(err.len(), grads.width * grads.height, "residual and gradients must cover the same block");
    let mut h = [[0i64; 4]; 4];
    let mut rhs = [0i64; 4];
    for y in 0..grads.height {
        for x in 0..grads.width {
            let i = y * grads.width + x;
            let r = jacobian_row(grads.gx[i], grads.gy[i], x, y, size);
            let e = err[i] as i64;
            for a in 0..4 {
                rhs[a] += e * r[a];
                for b in a..4 {
                    h[a][b] += r[a] * r[b];
                }
            }
        }
    }
    let scale = 8.0 * (size as f64 - 1.0);
    let mut out = NormalSystem {
        h: [[0.0; 4]; 4],
        rhs: [0.0; 4],
    };
    for a in 0..4 {
        out.rhs[a] = rhs[a] as f64 / scale;
        for b in a..4 {
            let v = h[a][b] as f64 / (scale * scale);
            out.h[a][b] = v;
            out.h[b][a] = v;
        }
    }
    out
}

/// Gaussian elimination with partial pivoting. Returns `None` when a pivot
/// falls below `1e-8` times the largest diagonal magnitude.
pub fn solve_normal_system(sys: &NormalSystem) -> Option<[f64; 4]> {
    let mut m = sys.h;
    let mut b = sys.rhs;
    let diag = (0..4).map(|i| m[i][i].abs()).fold(0.0, f64::max);
    let tol = 1e-8 * diag;
    if diag == 0.0 {
        return None;
    }
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        if m[pivot][col].abs() < tol {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

fn round_half_away(v: f64) -> i32 {
    v.round() as i32
}

fn clamp_model(model: &AffineModel, range_q: i32) -> AffineModel {
    let c = model.corner_vector().map(|v| v.clamp(-range_q, range_q));
    model.from_corner_vector(c)
}

fn block_sse(a: &Block, b: &Block) -> u64 {
    sse(a.region(), b.region()).expect("blocks of equal size")
}

/// SSE of `cur` against the pixel-exact luma prediction of `model`.
pub fn affine_sse(cur: &Block, reference: &Plane, model: &AffineModel, bank: &FilterBank) -> u64 {
    block_sse(cur, &predict_luma_pixelwise(reference, model, 0, bank))
}

/// Outcome of [`affine_me`].
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSearch {
    pub model: AffineModel,
    pub sse: u64,
    /// Gauss-Newton iterations performed.
    pub iterations: usize,
    /// True when the search stopped on a zero update rather than the bound.
    pub converged: bool,
    /// SSE of every model evaluated, in order.
    pub trajectory: Vec<u64>,
}

/// Gradient-based affine motion estimation for the block `cur` located at
/// `start.origin`.
pub fn affine_me(cur: &Block, reference: &Frame, start: &AffineModel, cfg: &SearchConfig, bank: &FilterBank) -> AffineSearch {
    let range_q = cfg.qpel_range();
    let s = start.size as usize;
    let mut model = clamp_model(start, range_q);
    let mut best = (model, u64::MAX);
    let mut trajectory = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters_affine {
        iterations += 1;
        let pred = predict_luma_pixelwise(&reference.y, &model, 1, bank);
        let inner = pred.crop(1, 1, s, s);
        let cost = block_sse(cur, &inner);
        trajectory.push(cost);
        if cost < best.1 {
            best = (model, cost);
        }
        if cost == 0 {
            converged = true;
            break;
        }

        let grads = sobel_gradient(&pred);
        let err: Vec<i32> = cur.data.iter().zip(&inner.data).map(|(&c, &p)| c as i32 - p as i32).collect();
        let Some(d) = solve_normal_system(&build_normal_system(&err, &grads, start.size)) else {
            converged = true;
            break;
        };
        let step = d.map(|px| round_half_away(4.0 * px));
        if step.iter().all(|&v| v == 0) {
            converged = true;
            break;
        }
        let c = model.corner_vector();
        let next = clamp_model(&model.from_corner_vector(std::array::from_fn(|k| c[k] + step[k])), range_q);
        if next == model {
            converged = true;
            break;
        }
        model = next;
        if iterations == cfg.max_iters_affine {
            // The last update has not been scored yet.
            let cost = affine_sse(cur, &reference.y, &model, bank);
            trajectory.push(cost);
            if cost < best.1 {
                best = (model, cost);
            }
        }
    }

    AffineSearch {
        model: best.0,
        sse: best.1,
        iterations,
        converged,
        trajectory,
    }
}

fn translational_cost(cur: &Block, reference: &Plane, origin: (i32, i32), mv: MotionVector, bank: &FilterBank, sad: bool) -> u64 {
    let pred = predict_block(reference, origin.0 as i64, origin.1 as i64, cur.width, cur.height, mv, FilterKind::Luma, bank).block;
    if sad {
        cur.data.iter().zip(&pred.data).map(|(&a, &b)| (a as i32 - b as i32).unsigned_abs() as u64).sum()
    } else {
        block_sse(cur, &pred)
    }
}

/// Integer diamond search followed by half- and quarter-pel refinement.
/// Returns the quarter-pel MV with the lowest SSE and that SSE.
pub fn translational_search(
    cur: &Block,
    reference: &Frame,
    origin: (i32, i32),
    start_mv: MotionVector,
    cfg: &SearchConfig,
    bank: &FilterBank,
) -> (MotionVector, u64) {
    let range = cfg.range as i32;
    let in_range = |h: i32, v: i32| h.abs() <= range && v.abs() <= range;
    let start = start_mv.to_qpel_rounded();
    let mut best = (
        (div_round_i32(start.h, 4).clamp(-range, range)),
        (div_round_i32(start.v, 4).clamp(-range, range)),
    );
    let sad = |h: i32, v: i32| translational_cost(cur, &reference.y, origin, MotionVector::qpel(4 * h, 4 * v), bank, true);
    let mut best_sad = sad(best.0, best.1);

    // Coarse probe on expanding diamonds around the start.
    let centre = best;
    let mut d = 1;
    while d <= range {
        let half = (d / 2).max(1);
        let probes = [(0, -d), (-half, -half), (half, -half), (-d, 0), (d, 0), (-half, half), (half, half), (0, d)];
        for (ph, pv) in probes {
            let (h, v) = (centre.0 + ph, centre.1 + pv);
            if in_range(h, v) {
                let c = sad(h, v);
                if c < best_sad {
                    best = (h, v);
                    best_sad = c;
                }
            }
        }
        d *= 2;
    }
    // Small-diamond descent to a local minimum.
    loop {
        let mut moved = false;
        for (ph, pv) in [(0, -1), (-1, 0), (1, 0), (0, 1)] {
            let (h, v) = (best.0 + ph, best.1 + pv);
            if in_range(h, v) {
                let c = sad(h, v);
                if c < best_sad {
                    best = (h, v);
                    best_sad = c;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }

    let range_q = 4 * range;
    let mut mv = MotionVector::qpel(4 * best.0, 4 * best.1);
    let mut best_sse = translational_cost(cur, &reference.y, origin, mv, bank, false);
    for step in [2, 1] {
        let centre = mv;
        for dv in [-step, 0, step] {
            for dh in [-step, 0, step] {
                let cand = MotionVector::qpel(centre.h + dh, centre.v + dv);
                if (dh == 0 && dv == 0) || cand.h.abs() > range_q || cand.v.abs() > range_q {
                    continue;
                }
                let c = translational_cost(cur, &reference.y, origin, cand, bank, false);
                if c < best_sse {
                    mv = cand;
                    best_sse = c;
                }
            }
        }
    }
    (mv, best_sse)
}

fn div_round_i32(n: i32, d: i32) -> i32 {
    crate::model::div_round(n as i64, d as i64) as i32
}

pub const ORACLE_MAX_RADIUS: u32 = 4;

/// Exhaustive search over every corner-MV pair within `radius` quarter-pel
/// of `center`. Ties go to the smaller total displacement from `center`,
/// then to the lexicographically smaller offset `[d0h, d1h, d0v, d1v]`.
pub fn brute_force_affine_oracle(cur: &Block, reference: &Frame, center: &AffineModel, radius: u32, bank: &FilterBank) -> Result<(AffineModel, u64)> {
    if radius > ORACLE_MAX_RADIUS {
        return Err(Error::InvalidParameter(format!(
            "oracle radius {radius} exceeds {ORACLE_MAX_RADIUS} quarter-pel"
        )));
    }
    let r = radius as i32;
    let base = center.corner_vector();
    let mut best: Option<((u64, i32, [i32; 4]), AffineModel)> = None;
    for d0h in -r..=r {
        for d1h in -r..=r {
            for d0v in -r..=r {
                for d1v in -r..=r {
                    let delta = [d0h, d1h, d0v, d1v];
                    let model = center.from_corner_vector(std::array::from_fn(|k| base[k] + delta[k]));
                    let cost = affine_sse(cur, &reference.y, &model, bank);
                    let l1 = (d0h.abs() + d0v.abs()) + (d1h.abs() + d1v.abs());
                    let key = (cost, l1, delta);
                    if best.as_ref().is_none_or(|(k, _)| key < *k) {
                        best = Some((key, model));
                    }
                }
            }
        }
    }
    let ((cost, _, _), model) = best.expect("at least one candidate");
    Ok((model, cost))
}
