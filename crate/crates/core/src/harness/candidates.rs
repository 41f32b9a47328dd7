//! Spatial neighbour bookkeeping and the two affine predictor lists: the
//! AAMVP corner-pair candidates and the single AMM merge candidate.

use crate::error::{Error, Result};
use crate::model::{div_round, AffineModel, MotionVector};

/// Side of a neighbour-grid cell in luma samples.
pub const CELL: usize = 4;

/// Corner positions and MVs of an affine PU, as exposed to its neighbours:
/// top-left `(x2, y2)`, top-right `(x3, y3)` and bottom-left `(x4, y4)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AffineCorners {
    pub p2: (i32, i32),
    pub mv2: MotionVector,
    pub p3: (i32, i32),
    pub mv3: MotionVector,
    pub p4: (i32, i32),
    pub mv4: MotionVector,
}

impl AffineCorners {
    pub fn of_model(model: &AffineModel) -> Self {
        let (x, y) = model.origin;
        let last = model.size as i32 - 1;
        AffineCorners {
            p2: (x, y),
            mv2: model.mv0,
            p3: (x + last, y),
            mv3: model.mv1,
            p4: (x, y + last),
            mv4: model.third_corner(),
        }
    }
}

/// What a coded 4×4 cell tells later PUs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellInfo {
    /// Quarter-pel MV used for translational prediction and AAMVP pools.
    pub mv: MotionVector,
    /// Corner data of the owning PU when it is affine-coded.
    pub affine: Option<AffineCorners>,
}

/// Coded-state map of a frame at 4×4 granularity.
#[derive(Clone, Debug)]
pub struct NeighborGrid {
    cols: usize,
    rows: usize,
    cells: Vec<Option<CellInfo>>,
}

impl NeighborGrid {
    pub fn new(width: usize, height: usize) -> Self {
        let (cols, rows) = (width.div_ceil(CELL), height.div_ceil(CELL));
        NeighborGrid {
            cols,
            rows,
            cells: vec![None; cols * rows],
        }
    }

    /// Cell covering luma sample `(x, y)`; `None` outside the frame or when
    /// not yet coded.
    pub fn get(&self, x: i32, y: i32) -> Option<&CellInfo> {
        if x < 0 || y < 0 {
            return None;
        }
        let (c, r) = (x as usize / CELL, y as usize / CELL);
        if c >= self.cols || r >= self.rows {
            return None;
        }
        self.cells[r * self.cols + c].as_ref()
    }

    fn for_cells(&mut self, x: usize, y: usize, size: usize, mut f: impl FnMut(&mut Option<CellInfo>, usize, usize)) {
        for r in y / CELL..((y + size) / CELL).min(self.rows) {
            for c in x / CELL..((x + size) / CELL).min(self.cols) {
                f(&mut self.cells[r * self.cols + c], c * CELL, r * CELL);
            }
        }
    }

    /// Marks a translational PU as coded.
    pub fn set_translational(&mut self, x: usize, y: usize, size: usize, mv: MotionVector) {
        self.for_cells(x, y, size, |cell, _, _| *cell = Some(CellInfo { mv, affine: None }));
    }

    /// Marks an affine PU as coded. Each cell's MV is the model field at the
    /// cell centre, rounded to quarter pel.
    pub fn set_affine(&mut self, model: &AffineModel) {
        let corners = AffineCorners::of_model(model);
        let (ox, oy) = (model.origin.0 as usize, model.origin.1 as usize);
        let half = CELL as i32 / 2;
        self.for_cells(ox, oy, model.size as usize, |cell, cx, cy| {
            let mv = model.field_at((cx - ox) as i32 + half, (cy - oy) as i32 + half).to_qpel_rounded();
            *cell = Some(CellInfo {
                mv,
                affine: Some(corners),
            });
        });
    }

    pub fn clear(&mut self, x: usize, y: usize, size: usize) {
        self.for_cells(x, y, size, |cell, _, _| *cell = None);
    }
}

fn median3(a: i32, b: i32, c: i32) -> i32 {
    a.max(b).min(a.min(b).max(c))
}

/// Componentwise median of the left, above and above-right neighbour MVs,
/// with unavailable neighbours counted as zero.
pub fn translational_predictor(grid: &NeighborGrid, x: i32, y: i32, size: i32) -> MotionVector {
    let mv = |px, py| grid.get(px, py).map_or(MotionVector::ZERO, |c| c.mv);
    let (l, a, ar) = (mv(x - 1, y), mv(x, y - 1), mv(x + size, y - 1));
    MotionVector::qpel(median3(l.h, a.h, ar.h), median3(l.v, a.v, ar.v))
}

/// Consistency of a corner MV triple with a four-parameter model.
pub fn dmv_score(mvp0: MotionVector, mvp1: MotionVector, mvp2: MotionVector) -> u32 {
    (((mvp1.h - mvp0.h) - (mvp2.v - mvp0.v)).unsigned_abs()) + ((mvp0.v - mvp1.v) - (mvp2.h - mvp0.h)).unsigned_abs()
}

/// Spatial neighbour positions around a PU at `(x, y)` of side `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Position {
    /// `(x - 1, y - 1)`
    A,
    /// `(x, y - 1)`
    B,
    /// `(x - 1, y)`
    C,
    /// `(x + s - 1, y - 1)`
    D,
    /// `(x + s, y - 1)`
    E,
    /// `(x - 1, y + s - 1)`
    F,
    /// `(x - 1, y + s)`
    G,
}

impl Position {
    pub fn offset(self, x: i32, y: i32, s: i32) -> (i32, i32) {
        match self {
            Position::A => (x - 1, y - 1),
            Position::B => (x, y - 1),
            Position::C => (x - 1, y),
            Position::D => (x + s - 1, y - 1),
            Position::E => (x + s, y - 1),
            Position::F => (x - 1, y + s - 1),
            Position::G => (x - 1, y + s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateSource {
    Spatial { p0: Position, p1: Position },
    TranslationalFiller,
    ZeroFiller,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CandidateTuple {
    pub mvp0: MotionVector,
    pub mvp1: MotionVector,
    pub dmv: u32,
    pub source: CandidateSource,
}

impl CandidateTuple {
    pub fn is_filler(&self) -> bool {
        !matches!(self.source, CandidateSource::Spatial { .. })
    }
}

pub const AAMVP_LIST_LEN: usize = 2;

fn pool(grid: &NeighborGrid, positions: &[Position], x: i32, y: i32, s: i32) -> Vec<(Position, MotionVector)> {
    positions
        .iter()
        .filter_map(|&p| {
            let (px, py) = p.offset(x, y, s);
            grid.get(px, py).map(|c| (p, c.mv))
        })
        .collect()
}

/// The two-entry AAMVP list for the PU at `(x, y)` of side `s`.
pub fn aamvp_candidates(grid: &NeighborGrid, x: i32, y: i32, s: u32) -> [CandidateTuple; AAMVP_LIST_LEN] {
    use Position::*;
    let si = s as i32;
    let p0 = pool(grid, &[A, B, C], x, y, si);
    let p1 = pool(grid, &[D, E], x, y, si);
    let p2 = pool(grid, &[F, G], x, y, si);
    let limit = (si / 2) * 4;

    let mut list: Vec<CandidateTuple> = Vec::new();
    for &(a, m0) in &p0 {
        for &(b, m1) in &p1 {
            let d = m1 - m0;
            if m0 == m1 || d.h.abs() > limit || d.v.abs() > limit {
                continue;
            }
            if list.iter().any(|t| t.mvp0 == m0 && t.mvp1 == m1) {
                continue;
            }
            let dmv = p2.iter().map(|&(_, m2)| dmv_score(m0, m1, m2)).min().unwrap_or(0);
            list.push(CandidateTuple {
                mvp0: m0,
                mvp1: m1,
                dmv,
                source: CandidateSource::Spatial { p0: a, p1: b },
            });
        }
    }
    list.sort_by_key(|t| t.dmv);
    list.truncate(AAMVP_LIST_LEN);

    let tp = translational_predictor(grid, x, y, si);
    let fillers = [
        CandidateTuple {
            mvp0: tp,
            mvp1: tp,
            dmv: 0,
            source: CandidateSource::TranslationalFiller,
        },
        CandidateTuple {
            mvp0: MotionVector::ZERO,
            mvp1: MotionVector::ZERO,
            dmv: 0,
            source: CandidateSource::ZeroFiller,
        },
    ];
    list.extend(fillers.into_iter().take(AAMVP_LIST_LEN - list.len()));
    [list[0], list[1]]
}

/// AMM neighbour positions in scan order: left, above, above-right,
/// below-left, above-left.
pub fn amm_positions(x: i32, y: i32, s: i32) -> [(i32, i32); 5] {
    [(x - 1, y + s - 1), (x + s - 1, y - 1), (x + s, y - 1), (x - 1, y + s), (x - 1, y - 1)]
}

/// First affine-coded neighbour in AMM scan order.
pub fn amm_scan(grid: &NeighborGrid, x: i32, y: i32, s: u32) -> Option<AffineCorners> {
    amm_positions(x, y, s as i32)
        .into_iter()
        .find_map(|(px, py)| grid.get(px, py).and_then(|c| c.affine))
}

/// Unrounded AMM corners: `mv0 = num0 / den0` and `mv1 = num1 / den1`
/// componentwise, as `(h, v)` numerators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AmmExact {
    pub num0: (i64, i64),
    pub den0: i64,
    pub num1: (i64, i64),
    pub den1: i64,
}

/// Exact form of [`amm_derive`]:
///
/// ```text
/// MV0 = MV3 + (y3 - y0) (MV4 - MV2) / (y4 - y2)
/// MV1 = MV0 + (x1 - x0) (MV3 - MV2) / (x3 - x2)
/// ```
pub fn amm_derive_exact(origin: (i32, i32), size: u32, n: &AffineCorners) -> Result<AmmExact> {
    let dy = (n.p4.1 - n.p2.1) as i64;
    let dx = (n.p3.0 - n.p2.0) as i64;
    if dy == 0 || dx == 0 {
        return Err(Error::InvalidParameter(format!("degenerate neighbour corners {n:?}")));
    }
    let (x0, y0) = (origin.0 as i64, origin.1 as i64);
    let x1 = x0 + size as i64 - 1;
    let y3 = n.p3.1 as i64;
    let corner = |mv3: i32, mv4: i32, mv2: i32| {
        let num0 = mv3 as i64 * dy + (y3 - y0) * (mv4 - mv2) as i64;
        let num1 = num0 * dx + (x1 - x0) * (mv3 - mv2) as i64 * dy;
        (num0, num1)
    };
    let (h0, h1) = corner(n.mv3.h, n.mv4.h, n.mv2.h);
    let (v0, v1) = corner(n.mv3.v, n.mv4.v, n.mv2.v);
    Ok(AmmExact {
        num0: (h0, v0),
        den0: dy,
        num1: (h1, v1),
        den1: dy * dx,
    })
}

/// Inherits the neighbour's affine parameters for the PU at `origin`, with
/// the exact corners rounded half away from zero to quarter pel.
pub fn amm_derive(origin: (i32, i32), size: u32, n: &AffineCorners) -> Result<AffineModel> {
    let e = amm_derive_exact(origin, size, n)?;
    let r = |num, den| div_round(num, den) as i32;
    let mv0 = MotionVector::qpel(r(e.num0.0, e.den0), r(e.num0.1, e.den0));
    let mv1 = MotionVector::qpel(r(e.num1.0, e.den1), r(e.num1.1, e.den1));
    Ok(AffineModel::new(mv0, mv1, size)?.at(origin))
}
