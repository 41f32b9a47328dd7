//! Rate model: fixed-length mode flags plus signed Exp-Golomb motion vector
//! differences. There is no entropy coder; these are code lengths only.

use crate::model::MotionVector;

/// Length of the order-0 Exp-Golomb code for `n`.
pub fn exp_golomb_len(n: u32) -> u32 {
    2 * (u32::BITS - 1 - (n + 1).leading_zeros()) + 1
}

/// Signed mapping `v > 0 -> 2v - 1`, `v <= 0 -> -2v`, then Exp-Golomb.
pub fn signed_exp_golomb_len(v: i32) -> u32 {
    let mapped = if v > 0 { 2 * v as u32 - 1 } else { 2 * v.unsigned_abs() };
    exp_golomb_len(mapped)
}

pub fn mvd_bits(mvd: MotionVector) -> u32 {
    signed_exp_golomb_len(mvd.h) + signed_exp_golomb_len(mvd.v)
}

/// What a PU signals, for rate estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signal {
    Translational { mvd: MotionVector },
    Aamvp { mvd0: MotionVector, mvd1: MotionVector },
    Amm,
    AmmSkip,
}

const AFFINE_FLAG: u32 = 1;
const AAMVP_AMM_FLAG: u32 = 1;
const CANDIDATE_INDEX: u32 = 1;
const SKIP_FLAG: u32 = 1;

pub fn estimate_bits(signal: &Signal) -> u32 {
    match *signal {
        Signal::Translational { mvd } => AFFINE_FLAG + CANDIDATE_INDEX + mvd_bits(mvd),
        Signal::Aamvp { mvd0, mvd1 } => AFFINE_FLAG + AAMVP_AMM_FLAG + CANDIDATE_INDEX + mvd_bits(mvd0) + mvd_bits(mvd1),
        // A single merge candidate needs no index.
        Signal::Amm | Signal::AmmSkip => AFFINE_FLAG + AAMVP_AMM_FLAG + SKIP_FLAG,
    }
}

/// RD multiplier for a quantisation parameter.
pub fn lambda_from_qp(qp: u8) -> f64 {
    0.85 * 2f64.powf((qp as f64 - 12.0) / 3.0)
}

pub fn rd_cost(sse: u64, bits: u32, lambda: f64) -> f64 {
    sse as f64 + lambda * bits as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_lengths() {
        let table: Vec<u32> = (0..8).map(exp_golomb_len).collect();
        assert_eq!(table, [1, 3, 3, 5, 5, 5, 5, 7]);
        assert_eq!(signed_exp_golomb_len(0), 1);
        assert_eq!(signed_exp_golomb_len(1), 3);
        assert_eq!(signed_exp_golomb_len(-1), 3);
        assert_eq!(signed_exp_golomb_len(2), 5);
        assert_eq!(signed_exp_golomb_len(-4), 7);
    }

    #[test]
    fn mode_bit_examples() {
        assert_eq!(estimate_bits(&Signal::AmmSkip), 3);
        let zero = MotionVector::ZERO;
        assert_eq!(estimate_bits(&Signal::Aamvp { mvd0: zero, mvd1: zero }), 7);
        let t = estimate_bits(&Signal::Translational { mvd: MotionVector::qpel(1, 0) });
        assert_eq!(t, 1 + 1 + signed_exp_golomb_len(1) + signed_exp_golomb_len(0));
    }

    #[test]
    fn rd_examples() {
        assert_eq!(rd_cost(123, 0, 5.0), 123.0);
        assert_eq!(rd_cost(0, 10, 16.0), 160.0);
        assert!((lambda_from_qp(27) - 27.2).abs() < 1e-12);
    }
}
