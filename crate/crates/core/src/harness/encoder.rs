//! Quadtree mode decision over 64×64 roots.

use crate::error::{Error, Result};
use crate::frame::{psnr, Block, Frame, Psnr};
use crate::harness::bits::{estimate_bits, lambda_from_qp, mvd_bits, rd_cost, Signal};
use crate::harness::candidates::{aamvp_candidates, amm_derive, amm_scan, translational_predictor, NeighborGrid};
use crate::interp::{motion_compensate_affine, predict_block, FilterBank, FilterKind, FilterMode, McOptions, Prediction, UnitSizing};
use crate::model::{AffineModel, MotionVector};
use crate::search::{affine_me, affine_sse, translational_search, SearchConfig};

pub const ROOT_SIZE: u32 = 64;
pub const MIN_SIZE: u32 = 8;
/// Width of the frame border excluded from the non-border area statistics.
pub const BORDER: usize = 16;

/// Prediction modes in decision order; on equal cost the earlier one wins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Translational,
    AmmSkip,
    Amm,
    Aamvp,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Translational, Mode::AmmSkip, Mode::Amm, Mode::Aamvp];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Translational => "translational",
            Mode::AmmSkip => "amm_skip",
            Mode::Amm => "amm",
            Mode::Aamvp => "aamvp",
        }
    }

    pub fn is_affine(self) -> bool {
        self != Mode::Translational
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncoderConfig {
    pub qp: u8,
    pub search: SearchConfig,
    pub enable_affine: bool,
    pub enable_amm: bool,
    /// Emit the output prediction with per-pixel MVs. Mode decisions still
    /// use the adaptive block-based path.
    pub pixel_based_mc: bool,
    /// Use the cascaded quarter-pel + bilinear filter instead of the one-step
    /// 1/64 filter, for decisions and output alike.
    pub two_step_filter: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            qp: 27,
            search: SearchConfig::default(),
            enable_affine: true,
            enable_amm: true,
            pixel_based_mc: false,
            two_step_filter: false,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.qp > 51 {
            return Err(Error::InvalidParameter(format!("qp {} outside 0..=51", self.qp)));
        }
        self.search.validate()
    }

    pub fn lambda(&self) -> f64 {
        lambda_from_qp(self.qp)
    }

    fn filter(&self) -> FilterMode {
        if self.two_step_filter {
            FilterMode::TwoStep
        } else {
            FilterMode::OneStep
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PuMotion {
    Translational(MotionVector),
    Affine(AffineModel),
}

impl PuMotion {
    pub fn as_model(&self, origin: (i32, i32), size: u32) -> AffineModel {
        match *self {
            PuMotion::Translational(mv) => AffineModel {
                mv0: mv,
                mv1: mv,
                size,
                origin,
            },
            PuMotion::Affine(m) => m,
        }
    }
}

/// Gauss-Newton telemetry of an AAMVP PU.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchTrace {
    pub iterations: usize,
    pub converged: bool,
    pub trajectory: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionUnit {
    pub x: usize,
    pub y: usize,
    pub size: u32,
    pub mode: Mode,
    pub motion: PuMotion,
    /// Luma SSE of the decision-path prediction.
    pub sse: u64,
    pub bits: u32,
    pub cost: f64,
    /// AAMVP candidate index used for the MVDs.
    pub candidate: Option<usize>,
    pub search: Option<SearchTrace>,
}

impl PredictionUnit {
    pub fn model(&self) -> AffineModel {
        self.motion.as_model((self.x as i32, self.y as i32), self.size)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeCost {
    pub mode: Mode,
    pub sse: u64,
    pub bits: u32,
    pub cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partition {
    Leaf,
    Split,
}

/// One quadtree node's decision record.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeLog {
    pub x: usize,
    pub y: usize,
    pub size: u32,
    /// Every mode evaluated as a leaf, empty if the node crosses the frame edge.
    pub modes: Vec<ModeCost>,
    pub chosen_mode: Option<Mode>,
    pub leaf_cost: Option<f64>,
    pub split_cost: Option<f64>,
    pub kept: Partition,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameStats {
    pub poc: usize,
    pub pu_count: usize,
    /// Luma area per mode, indexed in [`Mode::ALL`] order.
    pub area: [u64; 4],
    pub non_border_area: [u64; 4],
    pub aamvp_searches: usize,
    pub converged_searches: usize,
    pub mean_iterations: f64,
    pub luma_interpolations: u64,
    pub chroma_interpolations: u64,
    /// Luma SSE of the output prediction.
    pub sse_y: u64,
    pub total_bits: u64,
    pub total_cost: f64,
    pub psnr: Psnr,
}

impl FrameStats {
    pub fn area_fraction(&self, mode: Mode) -> f64 {
        fraction(self.area[mode.index()], self.area.iter().sum())
    }

    pub fn affine_fraction(&self) -> f64 {
        fraction(self.area[1..].iter().sum(), self.area.iter().sum())
    }

    pub fn non_border_affine_fraction(&self) -> f64 {
        fraction(self.non_border_area[1..].iter().sum(), self.non_border_area.iter().sum())
    }
}

fn fraction(part: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        part as f64 / total as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedFrame {
    pub prediction: Frame,
    pub pus: Vec<PredictionUnit>,
    pub nodes: Vec<NodeLog>,
    pub stats: FrameStats,
}

/// Chooses a prediction structure for `cur` against `reference` and renders
/// the resulting prediction.
pub fn encode_frame(cur: &Frame, reference: &Frame, cfg: &EncoderConfig, bank: &FilterBank) -> Result<EncodedFrame> {
    cfg.validate()?;
    if !cur.same_dims(reference) {
        return Err(Error::DimensionMismatch(format!(
            "current {}x{} vs reference {}x{}",
            cur.width(),
            cur.height(),
            reference.width(),
            reference.height()
        )));
    }
    let (w, h) = (cur.width(), cur.height());
    if w == 0 || h == 0 || w % MIN_SIZE as usize != 0 || h % MIN_SIZE as usize != 0 {
        return Err(Error::InvalidParameter(format!("frame {w}x{h} is not a multiple of {MIN_SIZE}")));
    }
    let mut reference = reference.clone();
    reference.pad();

    let mut enc = Encoder {
        cur,
        reference: &reference,
        cfg,
        bank,
        lambda: cfg.lambda(),
        filter: cfg.filter(),
        grid: NeighborGrid::new(w, h),
        nodes: Vec::new(),
    };
    let mut pus = Vec::new();
    for ry in (0..h).step_by(ROOT_SIZE as usize) {
        for rx in (0..w).step_by(ROOT_SIZE as usize) {
            pus.extend(enc.node(rx, ry, ROOT_SIZE)?.1);
        }
    }
    let nodes = std::mem::take(&mut enc.nodes);

    let mut prediction = Frame::new(w, h);
    prediction.poc = cur.poc;
    let (mut luma_interp, mut chroma_interp) = (0, 0);
    for pu in &pus {
        let p = enc.render(pu)?;
        prediction.y.put_block(pu.x, pu.y, &p.y);
        prediction.cb.put_block(pu.x / 2, pu.y / 2, &p.cb);
        prediction.cr.put_block(pu.x / 2, pu.y / 2, &p.cr);
        luma_interp += p.luma_count;
        chroma_interp += p.chroma_count;
    }
    prediction.pad();

    let stats = frame_stats(cur, &prediction, &pus, luma_interp, chroma_interp)?;
    Ok(EncodedFrame {
        prediction,
        pus,
        nodes,
        stats,
    })
}

fn frame_stats(cur: &Frame, prediction: &Frame, pus: &[PredictionUnit], luma_interp: u64, chroma_interp: u64) -> Result<FrameStats> {
    let (w, h) = (cur.width(), cur.height());
    let mut area = [0u64; 4];
    let mut non_border_area = [0u64; 4];
    let overlap = |a0: usize, a1: usize, lo: usize, hi: usize| a1.min(hi).saturating_sub(a0.max(lo)) as u64;
    for pu in pus {
        let s = pu.size as usize;
        area[pu.mode.index()] += (s * s) as u64;
        let inner_w = overlap(pu.x, pu.x + s, BORDER, w.saturating_sub(BORDER));
        let inner_h = overlap(pu.y, pu.y + s, BORDER, h.saturating_sub(BORDER));
        non_border_area[pu.mode.index()] += inner_w * inner_h;
    }
    let traces: Vec<&SearchTrace> = pus.iter().filter_map(|p| p.search.as_ref()).collect();
    let mean_iterations = if traces.is_empty() {
        0.0
    } else {
        traces.iter().map(|t| t.iterations).sum::<usize>() as f64 / traces.len() as f64
    };
    Ok(FrameStats {
        poc: cur.poc,
        pu_count: pus.len(),
        area,
        non_border_area,
        aamvp_searches: traces.len(),
        converged_searches: traces.iter().filter(|t| t.converged).count(),
        mean_iterations,
        luma_interpolations: luma_interp,
        chroma_interpolations: chroma_interp,
        sse_y: crate::frame::sse(cur.y.full_region(), prediction.y.full_region())?,
        total_bits: pus.iter().map(|p| p.bits as u64).sum(),
        total_cost: pus.iter().map(|p| p.cost).sum(),
        psnr: psnr(cur, prediction)?,
    })
}

struct Encoder<'a> {
    cur: &'a Frame,
    reference: &'a Frame,
    cfg: &'a EncoderConfig,
    bank: &'a FilterBank,
    lambda: f64,
    filter: FilterMode,
    grid: NeighborGrid,
    nodes: Vec<NodeLog>,
}

struct Leaf {
    pu: PredictionUnit,
    modes: Vec<ModeCost>,
}

impl Encoder<'_> {
    fn node(&mut self, x: usize, y: usize, size: u32) -> Result<(f64, Vec<PredictionUnit>)> {
        let (w, h) = (self.cur.width(), self.cur.height());
        let s = size as usize;
        let fits = x + s <= w && y + s <= h;

        let leaf = if fits { Some(self.leaf(x, y, size)?) } else { None };
        let split = if size > MIN_SIZE {
            let half = s / 2;
            let mut cost = 0.0;
            let mut pus = Vec::new();
            for (cx, cy) in [(x, y), (x + half, y), (x, y + half), (x + half, y + half)] {
                if cx < w && cy < h {
                    let (c, p) = self.node(cx, cy, size / 2)?;
                    cost += c;
                    pus.extend(p);
                }
            }
            Some((cost, pus))
        } else {
            None
        };

        let leaf_cost = leaf.as_ref().map(|l| l.pu.cost);
        let split_cost = split.as_ref().map(|s| s.0);
        let take_leaf = match (&leaf, &split) {
            (Some(l), Some((c, _))) => l.pu.cost <= *c,
            (Some(_), None) => true,
            _ => false,
        };
        let (kept, cost, pus, modes, chosen) = match (leaf, split) {
            (Some(l), _) if take_leaf => {
                self.grid.clear(x, y, s);
                self.mark(&l.pu);
                let mode = l.pu.mode;
                (Partition::Leaf, l.pu.cost, vec![l.pu], l.modes, Some(mode))
            }
            (leaf, Some((c, pus))) => {
                let (modes, chosen) = leaf.map_or((Vec::new(), None), |l| (l.modes, Some(l.pu.mode)));
                (Partition::Split, c, pus, modes, chosen)
            }
            _ => {
                return Err(Error::InvalidParameter(format!("{s}x{s} node at ({x}, {y}) neither fits nor splits")));
            }
        };
        self.nodes.push(NodeLog {
            x,
            y,
            size,
            modes,
            chosen_mode: chosen,
            leaf_cost,
            split_cost,
            kept,
            cost,
        });
        Ok((cost, pus))
    }

    fn mark(&mut self, pu: &PredictionUnit) {
        match pu.motion {
            PuMotion::Translational(mv) => self.grid.set_translational(pu.x, pu.y, pu.size as usize, mv),
            PuMotion::Affine(m) => self.grid.set_affine(&m),
        }
    }

    /// Decision-path luma SSE of a PU model.
    fn decision_sse(&self, cur: &Block, model: &AffineModel) -> Result<u64> {
        let pred = if model.is_translational() && self.filter == FilterMode::OneStep {
            let (x, y) = model.origin;
            predict_block(&self.reference.y, x as i64, y as i64, cur.width, cur.height, model.mv0, FilterKind::Luma, self.bank).block
        } else {
            let opts = McOptions {
                sizing: UnitSizing::Adaptive,
                filter: self.filter,
            };
            motion_compensate_affine(self.reference, model, self.bank, opts)?.y
        };
        Ok(cur.data.iter().zip(&pred.data).map(|(&a, &b)| ((a as i32 - b as i32) * (a as i32 - b as i32)) as u64).sum())
    }

    fn leaf(&mut self, x: usize, y: usize, size: u32) -> Result<Leaf> {
        let s = size as usize;
        let origin = (x as i32, y as i32);
        let cur = self.cur.y.region(x, y, s, s)?.to_block();
        let lambda = self.lambda;
        let mut modes = Vec::new();
        let mut options: Vec<PredictionUnit> = Vec::new();
        let mut push = |pu: PredictionUnit, modes: &mut Vec<ModeCost>| {
            modes.push(ModeCost {
                mode: pu.mode,
                sse: pu.sse,
                bits: pu.bits,
                cost: pu.cost,
            });
            options.push(pu);
        };
        let unit = |mode, motion, sse, bits, candidate, search| PredictionUnit {
            x,
            y,
            size,
            mode,
            motion,
            sse,
            bits,
            cost: rd_cost(sse, bits, lambda),
            candidate,
            search,
        };

        let tp = translational_predictor(&self.grid, origin.0, origin.1, size as i32);
        let (mv, _) = translational_search(&cur, self.reference, origin, tp, &self.cfg.search, self.bank);
        let t_model = AffineModel::translational(mv, size)?.at(origin);
        let sse = self.decision_sse(&cur, &t_model)?;
        let bits = estimate_bits(&Signal::Translational { mvd: mv - tp });
        push(unit(Mode::Translational, PuMotion::Translational(mv), sse, bits, None, None), &mut modes);

        if self.cfg.enable_affine {
            if self.cfg.enable_amm {
                if let Some(n) = amm_scan(&self.grid, origin.0, origin.1, size) {
                    let model = amm_derive(origin, size, &n)?;
                    let sse = self.decision_sse(&cur, &model)?;
                    for (mode, signal) in [(Mode::AmmSkip, Signal::AmmSkip), (Mode::Amm, Signal::Amm)] {
                        push(unit(mode, PuMotion::Affine(model), sse, estimate_bits(&signal), None, None), &mut modes);
                    }
                }
            }

            let cands = aamvp_candidates(&self.grid, origin.0, origin.1, size);
            let starts = cands
                .iter()
                .map(|c| AffineModel::new(c.mvp0, c.mvp1, size).map(|m| m.at(origin)))
                .chain(std::iter::once(Ok(t_model)))
                .collect::<Result<Vec<_>>>()?;
            let mut start = starts[0];
            let mut start_sse = u64::MAX;
            for m in starts {
                let c = affine_sse(&cur, &self.reference.y, &m, self.bank);
                if c < start_sse {
                    start = m;
                    start_sse = c;
                }
            }
            let found = affine_me(&cur, self.reference, &start, &self.cfg.search, self.bank);
            let model = found.model;
            let (index, mvd_cost) = cands
                .iter()
                .enumerate()
                .map(|(i, c)| (i, mvd_bits(model.mv0 - c.mvp0) + mvd_bits(model.mv1 - c.mvp1)))
                .min_by_key(|&(_, b)| b)
                .expect("candidate list is never empty");
            let c = cands[index];
            let bits = estimate_bits(&Signal::Aamvp {
                mvd0: model.mv0 - c.mvp0,
                mvd1: model.mv1 - c.mvp1,
            });
            debug_assert_eq!(bits, 3 + mvd_cost);
            let sse = self.decision_sse(&cur, &model)?;
            let trace = SearchTrace {
                iterations: found.iterations,
                converged: found.converged,
                trajectory: found.trajectory,
            };
            push(unit(Mode::Aamvp, PuMotion::Affine(model), sse, bits, Some(index), Some(trace)), &mut modes);
        }

        let mut best = 0;
        for (i, pu) in options.iter().enumerate() {
            if pu.cost < options[best].cost {
                best = i;
            }
        }
        Ok(Leaf {
            pu: options.swap_remove(best),
            modes,
        })
    }

    fn render(&self, pu: &PredictionUnit) -> Result<Prediction> {
        let sizing = match pu.motion {
            PuMotion::Affine(_) if self.cfg.pixel_based_mc => UnitSizing::Fixed(1, 1),
            _ => UnitSizing::Adaptive,
        };
        motion_compensate_affine(
            self.reference,
            &pu.model(),
            self.bank,
            McOptions {
                sizing,
                filter: self.filter,
            },
        )
    }
}
