//! Four-parameter affine motion model.
//!
//! A block of width `S` is described by two quarter-pel corner motion vectors:
//! `mv0` at block-local pixel `(0, 0)` and `mv1` at `(S - 1, 0)`. The motion of
//! any pixel `(x, y)` is
//!
//! ```text
//! h(x, y) = a*x + b*y + c
//! v(x, y) = -b*x + a*y + f
//! ```
//!
//! with `a = (mv1.h - mv0.h) / (S - 1)`, `b = -(mv1.v - mv0.v) / (S - 1)`,
//! `c = mv0.h` and `f = mv0.v`. All arithmetic stays in integers with the
//! common denominator `S - 1`; the only rounding is the final quantisation of
//! a per-pixel vector to 1/64 pel.

use crate::error::{Error, Result};
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Fractional precision of a [`MotionVector`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MvPrecision {
    /// 1/4 luma sample: corner and translational vectors.
    Quarter,
    /// 1/64 luma sample: per-pixel and MC-unit vectors.
    Sixtyfourth,
}

impl MvPrecision {
    pub const fn denom(self) -> i32 {
        match self {
            MvPrecision::Quarter => 4,
            MvPrecision::Sixtyfourth => 64,
        }
    }
}

/// Fixed-point 2-D displacement, in units of `1 / prec.denom()` luma samples.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct MotionVector {
    pub h: i32,
    pub v: i32,
    pub prec: MvPrecision,
}

impl fmt::Debug for MotionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})/{}", self.h, self.v, self.prec.denom())
    }
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector::qpel(0, 0);

    pub const fn qpel(h: i32, v: i32) -> Self {
        MotionVector {
            h,
            v,
            prec: MvPrecision::Quarter,
        }
    }

    pub const fn pel64(h: i32, v: i32) -> Self {
        MotionVector {
            h,
            v,
            prec: MvPrecision::Sixtyfourth,
        }
    }

    /// Lossless conversion to 1/64 pel.
    pub const fn to_pel64(self) -> Self {
        match self.prec {
            MvPrecision::Quarter => MotionVector::pel64(self.h * 16, self.v * 16),
            MvPrecision::Sixtyfourth => self,
        }
    }

    /// Quantises to quarter pel with half-away-from-zero rounding.
    pub fn to_qpel_rounded(self) -> Self {
        match self.prec {
            MvPrecision::Quarter => self,
            MvPrecision::Sixtyfourth => MotionVector::qpel(
                div_round(self.h as i64, 16) as i32,
                div_round(self.v as i64, 16) as i32,
            ),
        }
    }

    pub fn is_zero(self) -> bool {
        self.h == 0 && self.v == 0
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> i32 {
        self.h.abs().max(self.v.abs())
    }

    fn same_prec(self, rhs: Self) -> MvPrecision {
        assert_eq!(self.prec, rhs.prec, "mixed-precision motion vector arithmetic");
        self.prec
    }
}

impl Add for MotionVector {
    type Output = MotionVector;
    fn add(self, rhs: Self) -> Self {
        let prec = self.same_prec(rhs);
        MotionVector {
            h: self.h + rhs.h,
            v: self.v + rhs.v,
            prec,
        }
    }
}

impl Sub for MotionVector {
    type Output = MotionVector;
    fn sub(self, rhs: Self) -> Self {
        let prec = self.same_prec(rhs);
        MotionVector {
            h: self.h - rhs.h,
            v: self.v - rhs.v,
            prec,
        }
    }
}

impl Neg for MotionVector {
    type Output = MotionVector;
    fn neg(self) -> Self {
        MotionVector {
            h: -self.h,
            v: -self.v,
            prec: self.prec,
        }
    }
}

/// Integer division rounded half away from zero. `den` must be positive.
pub fn div_round(num: i64, den: i64) -> i64 {
    debug_assert!(den > 0);
    if num >= 0 {
        (2 * num + den) / (2 * den)
    } else {
        -((-2 * num + den) / (2 * den))
    }
}

/// Exact model parameters. `a` and `b` are `a_num / den` and `b_num / den`
/// quarter-pel per pixel; `c` and `f` are quarter-pel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AffineParams {
    pub a_num: i64,
    pub b_num: i64,
    pub c: i64,
    pub f: i64,
    pub den: i64,
}

impl AffineParams {
    pub fn a(&self) -> f64 {
        self.a_num as f64 / self.den as f64
    }

    pub fn b(&self) -> f64 {
        self.b_num as f64 / self.den as f64
    }
}

/// Coefficients of the linear combination `MV(p) = A(p) * [MV0h, MV1h, MV0v, MV1v]^T`,
/// each as a numerator over `den = S - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisRow {
    pub m0: i64,
    pub m1: i64,
    pub n0: i64,
    pub n1: i64,
    pub den: i64,
}

impl BasisRow {
    /// Basis at block-local `(x, y)` for a block of width `size`. Coordinates
    /// outside the block extrapolate the same linear field.
    pub fn at(x: i32, y: i32, size: u32) -> Self {
        let den = size as i64 - 1;
        BasisRow {
            m0: den - x as i64,
            m1: x as i64,
            n0: y as i64,
            n1: -(y as i64),
            den,
        }
    }

    /// The 2x4 matrix `A(p)` scaled by `den`: rows are the horizontal and
    /// vertical components.
    pub fn matrix(&self) -> [[i64; 4]; 2] {
        [
            [self.m0, self.m1, self.n0, self.n1],
            [-self.n0, -self.n1, self.m0, self.m1],
        ]
    }
}

/// Corner-MV representation of a four-parameter affine model for one square block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AffineModel {
    /// Quarter-pel MV of block-local pixel `(0, 0)`.
    pub mv0: MotionVector,
    /// Quarter-pel MV of block-local pixel `(size - 1, 0)`.
    pub mv1: MotionVector,
    /// Block width in luma samples.
    pub size: u32,
    /// Top-left of the block in frame coordinates.
    pub origin: (i32, i32),
}

impl AffineModel {
    pub fn new(mv0: MotionVector, mv1: MotionVector, size: u32) -> Result<Self> {
        if size < 8 || !size.is_power_of_two() {
            return Err(Error::InvalidBlockSize(size));
        }
        for mv in [mv0, mv1] {
            if mv.prec != MvPrecision::Quarter {
                return Err(Error::WrongPrecision {
                    expected: 4,
                    found: mv.prec.denom() as u32,
                });
            }
        }
        Ok(AffineModel {
            mv0,
            mv1,
            size,
            origin: (0, 0),
        })
    }

    /// A model with both corners equal to `mv`.
    pub fn translational(mv: MotionVector, size: u32) -> Result<Self> {
        Self::new(mv, mv, size)
    }

    pub fn at(mut self, origin: (i32, i32)) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_corners(self, mv0: MotionVector, mv1: MotionVector) -> Self {
        AffineModel { mv0, mv1, ..self }
    }

    pub fn is_translational(&self) -> bool {
        self.mv0 == self.mv1
    }

    /// Corner vector `[MV0h, MV1h, MV0v, MV1v]`.
    pub fn corner_vector(&self) -> [i32; 4] {
        [self.mv0.h, self.mv1.h, self.mv0.v, self.mv1.v]
    }

    pub fn from_corner_vector(&self, c: [i32; 4]) -> Self {
        self.with_corners(MotionVector::qpel(c[0], c[2]), MotionVector::qpel(c[1], c[3]))
    }

    pub fn params(&self) -> AffineParams {
        params_from_corner_mvs(self)
    }

    /// Per-pixel MV at block-local `(x, y)` in 1/64 pel.
    pub fn mv_at(&self, x: i32, y: i32) -> Result<MotionVector> {
        mv_at(self, x, y)
    }

    /// Same field as [`mv_at`] without the in-block check.
    pub fn field_at(&self, x: i32, y: i32) -> MotionVector {
        let den = self.size as i64 - 1;
        let (x, y) = (x as i64, y as i64);
        let dh = (self.mv1.h - self.mv0.h) as i64;
        let dv = (self.mv1.v - self.mv0.v) as i64;
        let h_num = dh * x - dv * y + self.mv0.h as i64 * den;
        let v_num = dv * x + dh * y + self.mv0.v as i64 * den;
        MotionVector::pel64(
            div_round(16 * h_num, den) as i32,
            div_round(16 * v_num, den) as i32,
        )
    }

    pub fn third_corner(&self) -> MotionVector {
        derived_third_corner(self)
    }
}

/// Exact `(a, b, c, f)` with denominator `S - 1`.
pub fn params_from_corner_mvs(model: &AffineModel) -> AffineParams {
    AffineParams {
        a_num: (model.mv1.h - model.mv0.h) as i64,
        b_num: -((model.mv1.v - model.mv0.v) as i64),
        c: model.mv0.h as i64,
        f: model.mv0.v as i64,
        den: model.size as i64 - 1,
    }
}

/// MV of block-local pixel `(x, y)` at 1/64 pel, rounded half away from zero.
pub fn mv_at(model: &AffineModel, x: i32, y: i32) -> Result<MotionVector> {
    let s = model.size as i32;
    if !(0..s).contains(&x) || !(0..s).contains(&y) {
        return Err(Error::OutOfBlock {
            x,
            y,
            size: model.size,
        });
    }
    Ok(model.field_at(x, y))
}

/// Quarter-pel MV of the bottom-left pixel `(0, S - 1)` implied by the model.
pub fn derived_third_corner(model: &AffineModel) -> MotionVector {
    let (mv0, mv1) = (model.mv0, model.mv1);
    MotionVector::qpel(mv0.h - (mv1.v - mv0.v), mv0.v + (mv1.h - mv0.h))
}

/// Builds a model from rotation `theta` (radians), zoom `rho`, and a quarter-pel
/// translation `(c, f)`. `a = rho*cos(theta) - 1` and `b = rho*sin(theta)` are
/// converted to quarter-pel per pixel before quantising `mv1`.
pub fn model_from_rotation_zoom(theta: f64, rho: f64, c: i32, f: i32, size: u32) -> Result<AffineModel> {
    if !(rho > 0.0) || !rho.is_finite() || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "zoom factor must be positive and finite, got {rho}"
        )));
    }
    let span = size as f64 - 1.0;
    let a = rho * theta.cos() - 1.0;
    let b = rho * theta.sin();
    let mv1 = MotionVector::qpel(
        (4.0 * a * span).round() as i32 + c,
        (-4.0 * b * span).round() as i32 + f,
    );
    AffineModel::new(MotionVector::qpel(c, f), mv1, size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn model(mv0: (i32, i32), mv1: (i32, i32), s: u32) -> AffineModel {
        AffineModel::new(MotionVector::qpel(mv0.0, mv0.1), MotionVector::qpel(mv1.0, mv1.1), s).unwrap()
    }

    #[test]
    fn div_round_is_half_away_from_zero() {
        assert_eq!(div_round(5, 2), 3);
        assert_eq!(div_round(-5, 2), -3);
        assert_eq!(div_round(4, 3), 1);
        assert_eq!(div_round(-4, 3), -1);
        assert_eq!(div_round(0, 7), 0);
    }

    #[test]
    fn params_examples() {
        let p = model((0, 0), (0, 0), 16).params();
        assert_eq!((p.a_num, p.b_num, p.c, p.f), (0, 0, 0, 0));

        let p = model((0, 0), (15, 0), 16).params();
        assert_eq!(p.den, 15);
        assert_eq!(p.a_num, 15);
        assert_eq!(p.a(), 1.0);
        assert_eq!(p.b_num, 0);

        let p = model((4, -8), (4, -8), 32).params();
        assert_eq!((p.a_num, p.b_num, p.c, p.f), (0, 0, 4, -8));
    }

    #[test]
    fn mv_at_examples() {
        let m = model((0, 0), (15, 0), 16);
        assert_eq!(m.mv_at(15, 0).unwrap(), MotionVector::pel64(240, 0));
        // a = 1 qpel/px, b = 0: v(0, 15) = a * 15 = 15 qpel = 240/64.
        assert_eq!(m.mv_at(0, 15).unwrap(), MotionVector::pel64(0, 240));

        let t = model((4, -8), (4, -8), 8);
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(t.mv_at(x, y).unwrap(), MotionVector::pel64(64, -128));
            }
        }
    }

    #[test]
    fn mv_at_rejects_outside_block() {
        let m = model((0, 0), (15, 0), 16);
        assert!(matches!(m.mv_at(16, 0), Err(Error::OutOfBlock { .. })));
        assert!(m.mv_at(-1, 3).is_err());
        assert!(m.mv_at(0, 16).is_err());
    }

    #[test]
    fn third_corner_examples() {
        assert_eq!(model((0, 0), (15, 0), 16).third_corner(), MotionVector::qpel(0, 15));
        assert_eq!(model((4, -8), (4, -8), 16).third_corner(), MotionVector::qpel(4, -8));
        assert_eq!(model((0, 0), (0, -15), 16).third_corner(), MotionVector::qpel(15, 0));
    }

    #[test]
    fn model_validation() {
        assert!(matches!(
            AffineModel::new(MotionVector::ZERO, MotionVector::ZERO, 12),
            Err(Error::InvalidBlockSize(12))
        ));
        assert!(AffineModel::new(MotionVector::ZERO, MotionVector::ZERO, 4).is_err());
        assert!(matches!(
            AffineModel::new(MotionVector::pel64(0, 0), MotionVector::ZERO, 8),
            Err(Error::WrongPrecision { .. })
        ));
    }

    #[test]
    fn rotation_zoom_examples() {
        let m = model_from_rotation_zoom(0.0, 1.0, 0, 0, 16).unwrap();
        assert_eq!((m.mv0, m.mv1), (MotionVector::ZERO, MotionVector::ZERO));

        let m = model_from_rotation_zoom(0.0, 2.0, 0, 0, 16).unwrap();
        assert_eq!(m.mv1, MotionVector::qpel(60, 0));

        let m = model_from_rotation_zoom(FRAC_PI_2, 1.0, 0, 0, 16).unwrap();
        assert_eq!(m.mv1, MotionVector::qpel(-60, -60));

        assert!(model_from_rotation_zoom(0.3, 0.0, 0, 0, 16).is_err());
        assert!(model_from_rotation_zoom(0.3, -1.0, 0, 0, 16).is_err());
    }

    #[test]
    fn rotation_field_matches_direct_rotation() {
        // x' = cos*x + sin*y, y' = -sin*x + cos*y; MV = (x' - x, y' - y), in 1/64 pel.
        let theta = FRAC_PI_2;
        let m = model_from_rotation_zoom(theta, 1.0, 0, 0, 16).unwrap();
        for &(x, y) in &[(0, 0), (15, 0), (0, 15), (15, 15), (7, 3)] {
            let (xf, yf) = (x as f64, y as f64);
            let dh = theta.cos() * xf + theta.sin() * yf - xf;
            let dv = -theta.sin() * xf + theta.cos() * yf - yf;
            let mv = m.mv_at(x, y).unwrap();
            assert!((mv.h as f64 - 64.0 * dh).abs() <= 0.5 + 1e-9, "h at ({x},{y})");
            assert!((mv.v as f64 - 64.0 * dv).abs() <= 0.5 + 1e-9, "v at ({x},{y})");
        }
    }

    #[test]
    fn basis_matches_field() {
        let m = model((3, -7), (11, 2), 16);
        let mvc = m.corner_vector();
        for (x, y) in [(0, 0), (5, 9), (15, 15), (-1, 16)] {
            let a = BasisRow::at(x, y, 16);
            assert_eq!(a.m0 + a.m1, a.den);
            assert_eq!(a.n0, -a.n1);
            let mat = a.matrix();
            let h: i64 = (0..4).map(|k| mat[0][k] * mvc[k] as i64).sum();
            let v: i64 = (0..4).map(|k| mat[1][k] * mvc[k] as i64).sum();
            let f = m.field_at(x, y);
            assert_eq!(f.h as i64, div_round(16 * h, a.den));
            assert_eq!(f.v as i64, div_round(16 * v, a.den));
        }
    }

    fn arb_model() -> impl Strategy<Value = AffineModel> {
        (3u32..7, -256i32..256, -256i32..256, -64i32..64, -64i32..64).prop_map(|(lg, h0, v0, dh, dv)| {
            model((h0, v0), (h0 + dh, v0 + dv), 1 << lg)
        })
    }

    proptest! {
        #[test]
        fn corner_exactness(m in arb_model()) {
            let s = m.size as i32;
            prop_assert_eq!(m.mv_at(0, 0).unwrap(), m.mv0.to_pel64());
            prop_assert_eq!(m.mv_at(s - 1, 0).unwrap(), m.mv1.to_pel64());
        }

        #[test]
        fn midpoint_linearity(m in arb_model(), px in 0i32..64, py in 0i32..64, qx in 0i32..64, qy in 0i32..64) {
            let s = m.size as i32;
            let (px, py, qx, qy) = (px % s, py % s, qx % s, qy % s);
            prop_assume!((px + qx) % 2 == 0 && (py + qy) % 2 == 0);
            let mid = m.mv_at((px + qx) / 2, (py + qy) / 2).unwrap();
            let p = m.mv_at(px, py).unwrap();
            let q = m.mv_at(qx, qy).unwrap();
            prop_assert!((2 * mid.h - (p.h + q.h)).abs() <= 2);
            prop_assert!((2 * mid.v - (p.v + q.v)).abs() <= 2);
        }

        #[test]
        fn third_corner_closure(m in arb_model()) {
            let mv2 = m.third_corner();
            prop_assert_eq!(m.mv1.h - m.mv0.h, mv2.v - m.mv0.v);
            prop_assert_eq!(m.mv0.v - m.mv1.v, mv2.h - m.mv0.h);
            let p = m.params();
            prop_assert_eq!(mv2.h as i64 - p.c, p.b_num);
            prop_assert_eq!(mv2.v as i64 - p.f, p.a_num);
        }

        #[test]
        fn identity_transform_is_constant(c in -512i32..512, f in -512i32..512, lg in 3u32..7) {
            let s = 1u32 << lg;
            let m = model_from_rotation_zoom(0.0, 1.0, c, f, s).unwrap();
            prop_assert!(m.is_translational());
            for y in 0..s as i32 {
                for x in 0..s as i32 {
                    prop_assert_eq!(m.mv_at(x, y).unwrap(), MotionVector::pel64(16 * c, 16 * f));
                }
            }
        }

        #[test]
        fn qpel_roundtrip(h in -10_000i32..10_000, v in -10_000i32..10_000) {
            let mv = MotionVector::qpel(h, v);
            prop_assert_eq!(mv.to_pel64(), MotionVector::pel64(16 * h, 16 * v));
            prop_assert_eq!(mv.to_pel64().to_qpel_rounded(), mv);
        }
    }
}
