//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and then
//! asserts, so `cargo test --test acceptance -- --nocapture` shows the table.

use std::sync::OnceLock;
use std::time::Instant;

use affinemc::frame::{Block, Frame, Plane};
use affinemc::harness::candidates::{amm_derive, AffineCorners};
use affinemc::harness::{encode_frame, EncodedFrame, EncoderConfig};
use affinemc::interp::{interpolate_unit, FilterBank, FilterKind, McUnit, PHASES};
use affinemc::model::{AffineModel, MotionVector};
use affinemc::search::{
    affine_me, affine_sse, brute_force_affine_oracle, build_normal_system, sobel_gradient, translational_search, SearchConfig,
};
use affinemc::synth::{frame_center, resample, smooth_textured_frame, synth_affine_pair, synth_sequence, SimilarityWarp};
use affinemc::interp::predict_luma_pixelwise;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: &str, pass: bool, detail: impl std::fmt::Display, started: Instant) {
    println!("{id} {} {detail} ({:.2}s)", if pass { "PASS" } else { "FAIL" }, started.elapsed().as_secs_f64());
}

fn q(h: i32, v: i32) -> MotionVector {
    MotionVector::qpel(h, v)
}

#[test]
fn ac01_interpolation_counts() {
    let t = Instant::now();
    let bank = FilterBank::new();
    let plane = Plane::filled(32, 32, 100);
    let half = MotionVector::pel64(32, 32);
    let block = interpolate_unit(&plane, &McUnit { x: 8, y: 8, width: 4, height: 4, mv: half }, &bank, FilterKind::Luma).unwrap();
    let mut pixel = 0;
    for y in 0..4 {
        for x in 0..4 {
            let unit = McUnit { x: 8 + x, y: 8 + y, width: 1, height: 1, mv: half };
            pixel += interpolate_unit(&plane, &unit, &bank, FilterKind::Luma).unwrap().count;
        }
    }
    let pass = block.count == 60 && pixel == 144 && t.elapsed().as_secs_f64() < 1.0;
    verdict("AC1", pass, format!("block {} (want 60), pixel {} (want 144)", block.count, pixel), t);
    assert!(pass);
}

#[test]
fn ac02_filter_bank() {
    let t = Instant::now();
    let bank = FilterBank::new();
    let mut failures = Vec::new();
    if bank.luma(0) != &[0, 0, 0, 64, 0, 0, 0, 0] || bank.chroma(0) != &[0, 64, 0, 0] {
        failures.push("phase 0 not identity".to_string());
    }
    if bank.luma(32) != &[-1, 4, -11, 40, 40, -11, 4, -1] {
        failures.push(format!("luma phase 32 = {:?}", bank.luma(32)));
    }
    for kind in [FilterKind::Luma, FilterKind::Chroma] {
        for p in 0..PHASES {
            let row = bank.row(kind, p);
            if row.iter().map(|&c| c as i32).sum::<i32>() != 64 {
                failures.push(format!("{kind:?} phase {p} sums to {}", row.iter().map(|&c| c as i32).sum::<i32>()));
            }
            if p > 0 {
                let mirror: Vec<i16> = bank.row(kind, PHASES - p).iter().rev().copied().collect();
                if row != mirror.as_slice() {
                    failures.push(format!("{kind:?} phase {p} is not the mirror of {}", PHASES - p));
                }
            }
        }
    }
    let pass = failures.is_empty() && t.elapsed().as_secs_f64() < 1.0;
    verdict("AC2", pass, format!("{} violations {:?}", failures.len(), failures), t);
    assert!(pass);
}

#[test]
fn ac03_model_algebra() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = 0usize;
    for _ in 0..10_000 {
        let size = 8u32 << rng.gen_range(0..4);
        let mv0 = q(rng.gen_range(-512..=512), rng.gen_range(-512..=512));
        let mv1 = mv0 + q(rng.gen_range(-64..=64), rng.gen_range(-64..=64));
        let m = AffineModel::new(mv0, mv1, size).unwrap();
        let last = size as i32 - 1;
        let mut ok = m.mv_at(0, 0).unwrap() == mv0.to_pel64() && m.mv_at(last, 0).unwrap() == mv1.to_pel64();

        // The MV field is linear in position up to the 1/64 rounding.
        let den = last as f64;
        let (dh, dv) = ((mv1.h - mv0.h) as f64, (mv1.v - mv0.v) as f64);
        for _ in 0..8 {
            let (x, y) = (rng.gen_range(0..=last), rng.gen_range(0..=last));
            let exact_h = 16.0 * (dh * x as f64 / den - dv * y as f64 / den + mv0.h as f64);
            let exact_v = 16.0 * (dv * x as f64 / den + dh * y as f64 / den + mv0.v as f64);
            let got = m.mv_at(x, y).unwrap();
            ok &= (got.h as f64 - exact_h).abs() <= 0.5 + 1e-9 && (got.v as f64 - exact_v).abs() <= 0.5 + 1e-9;
        }

        // Four-parameter identities: the bottom-left corner is the top edge
        // rotated by 90 degrees, exactly.
        let mv2 = m.third_corner();
        ok &= mv2.h - mv0.h == -(mv1.v - mv0.v) && mv2.v - mv0.v == mv1.h - mv0.h;
        ok &= m.mv_at(0, last).unwrap() == mv2.to_pel64();
        let p = m.params();
        ok &= p.a_num == (mv1.h - mv0.h) as i64 && p.b_num == -((mv1.v - mv0.v) as i64);
        if !ok {
            failures += 1;
        }
    }
    let pass = failures == 0 && t.elapsed().as_secs_f64() < 5.0;
    verdict("AC3", pass, format!("{failures} failing models of 10000"), t);
    assert!(pass);
}

/// Current block rendered directly from a continuous corner-MV model.
fn render_truth(f: &Frame, origin: (usize, usize), size: usize, truth: [f64; 4]) -> Block {
    let mut cur = Block::new(size, size);
    let den = size as f64 - 1.0;
    for y in 0..size {
        for x in 0..size {
            let (xf, yf) = (x as f64, y as f64);
            let h = ((den - xf) * truth[0] + xf * truth[1] + yf * truth[2] - yf * truth[3]) / den / 4.0;
            let v = (-yf * truth[0] + yf * truth[1] + (den - xf) * truth[2] + xf * truth[3]) / den / 4.0;
            let s = resample(&f.y, origin.0 as f64 + xf + h, origin.1 as f64 + yf + v);
            cur.data[y * size + x] = s.round().clamp(0.0, 255.0) as u8;
        }
    }
    cur
}

#[test]
fn ac04_gradient_vs_finite_differences() {
    let t = Instant::now();
    let bank = FilterBank::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut checked, mut bad, mut bad_blocks) = (0usize, 0usize, 0usize);
    let mut worst = 0f64;
    for trial in 0..200u64 {
        let f = smooth_textured_frame(64, 64, 1000 + trial);
        let origin = (24usize, 24usize);
        let truth: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-8.0..8.0));
        let cur = render_truth(&f, origin, 16, truth);
        // Linearise a few quarter-pel steps away from the truth.
        let c: [i32; 4] = std::array::from_fn(|k| truth[k].round() as i32 + rng.gen_range(-3..=3));
        let model = AffineModel::new(q(c[0], c[2]), q(c[1], c[3]), 16).unwrap().at((origin.0 as i32, origin.1 as i32));
        let pred = predict_luma_pixelwise(&f.y, &model, 1, &bank);
        let inner = pred.crop(1, 1, 16, 16);
        let err: Vec<i32> = cur.data.iter().zip(&inner.data).map(|(&a, &b)| a as i32 - b as i32).collect();
        let rhs = build_normal_system(&err, &sobel_gradient(&pred), 16).rhs;
        let fd: [f64; 4] = std::array::from_fn(|k| {
            let sse_at = |d: i32| {
                let mut cv = c;
                cv[k] += d;
                affine_sse(&cur, &f.y, &model.from_corner_vector(cv), &bank) as f64
            };
            // d SSE / d MV in pixels from a quarter-pel central difference; rhs = -1/2 of it.
            -0.5 * (sse_at(1) - sse_at(-1)) / (2.0 / 4.0)
        });
        let floor = 0.01 * fd.iter().fold(0f64, |m, v| m.max(v.abs()));
        let mut block_bad = false;
        for k in 0..4 {
            if fd[k].abs() > floor {
                checked += 1;
                let rel = (rhs[k] - fd[k]).abs() / fd[k].abs();
                worst = worst.max(rel);
                if rel > 0.10 {
                    bad += 1;
                    block_bad = true;
                }
            }
        }
        bad_blocks += block_bad as usize;
    }
    let pass = bad == 0 && t.elapsed().as_secs_f64() < 30.0;
    verdict(
        "AC4",
        pass,
        format!("{bad}/{checked} components beyond 10% in {bad_blocks}/200 blocks; worst {:.1}%", 100.0 * worst),
        t,
    );
    assert!(pass);
}

#[test]
fn ac05_oracle_gap() {
    let t = Instant::now();
    let bank = FilterBank::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = SearchConfig::default();
    let mut within = 0;
    for trial in 0..100u64 {
        let f = smooth_textured_frame(64, 64, 2000 + trial);
        let c: [i32; 4] = std::array::from_fn(|_| rng.gen_range(-12..=12));
        let center = AffineModel::new(q(c[0], c[2]), q(c[1], c[3]), 8).unwrap().at((28, 28));
        let truth: [f64; 4] = std::array::from_fn(|k| c[k] as f64 + rng.gen_range(-2.0..2.0));
        let cur = render_truth(&f, (28, 28), 8, truth);
        let (_, oracle) = brute_force_affine_oracle(&cur, &f, &center, 2, &bank).unwrap();
        let found = affine_me(&cur, &f, &center, &cfg, &bank);
        if found.sse as f64 <= 1.05 * oracle as f64 {
            within += 1;
        }
    }
    let pass = within >= 95 && t.elapsed().as_secs_f64() < 300.0;
    verdict("AC5", pass, format!("{within}/100 trials within 1.05x of the oracle (need 95)"), t);
    assert!(pass);
}

const SIDE: usize = 256;

struct Sequence {
    name: &'static str,
    frames: Vec<Frame>,
}

fn corpus() -> &'static [Sequence] {
    static CORPUS: OnceLock<Vec<Sequence>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let specs: [(&str, f64, f64, u64); 3] = [("zoom", 0.0, 1.02, 21), ("rotation", 2.0, 1.0, 22), ("rotation+zoom", 2.0, 1.02, 23)];
        specs
            .iter()
            .map(|&(name, deg, rho, seed)| {
                let base = smooth_textured_frame(SIDE, SIDE, seed);
                let (frames, _) = synth_sequence(&base, &SimilarityWarp::new(deg.to_radians(), rho, 0.0, 0.0), 3).unwrap();
                Sequence { name, frames }
            })
            .collect()
    })
}

/// Every (sequence, frame) pair of the corpus encoded with `cfg`.
fn encode_corpus(cfg: &EncoderConfig) -> Vec<(&'static str, EncodedFrame)> {
    let bank = FilterBank::new();
    let mut out = Vec::new();
    for seq in corpus() {
        for pair in seq.frames.windows(2) {
            out.push((seq.name, encode_frame(&pair[1], &pair[0], cfg, &bank).unwrap()));
        }
    }
    out
}

fn full_runs() -> &'static [(&'static str, EncodedFrame)] {
    static RUNS: OnceLock<Vec<(&'static str, EncodedFrame)>> = OnceLock::new();
    RUNS.get_or_init(|| encode_corpus(&EncoderConfig::default()))
}

#[test]
fn ac06_iteration_bound() {
    let t = Instant::now();
    let (mut total, mut converged) = (0usize, 0usize);
    for (_, enc) in full_runs() {
        for pu in &enc.pus {
            if let Some(trace) = &pu.search {
                total += 1;
                converged += (trace.converged && trace.iterations <= 6) as usize;
            }
        }
    }
    let share = converged as f64 / total.max(1) as f64;
    let pass = total > 0 && share >= 0.90 && t.elapsed().as_secs_f64() < 120.0;
    verdict("AC6", pass, format!("{converged}/{total} affine-searched PUs converged within 6 iterations ({:.1}%, need 90%)", 100.0 * share), t);
    assert!(pass);
}

#[test]
fn ac07_parameter_recovery() {
    let t = Instant::now();
    let bank = FilterBank::new();
    let cfg = SearchConfig {
        range: 16,
        ..SearchConfig::default()
    };
    let base = smooth_textured_frame(SIDE, SIDE, 7);
    let warp = SimilarityWarp::new(2f64.to_radians(), 1.02, 0.0, 0.0);
    let cur = synth_affine_pair(&base, &warp).unwrap();
    let center = frame_center(SIDE, SIDE);
    let (mut good, mut n) = (0, 0);
    for by in (32..=192).step_by(32) {
        for bx in (32..=192).step_by(32) {
            let block = cur.y.region(bx, by, 32, 32).unwrap().to_block();
            let origin = (bx as i32, by as i32);
            let (mv, _) = translational_search(&block, &base, origin, MotionVector::ZERO, &cfg, &bank);
            let start = AffineModel::translational(mv, 32).unwrap().at(origin);
            let m = affine_me(&block, &base, &start, &cfg, &bank).model;
            let gt = warp.corner_mvs(center, (bx, by), 32);
            let close = |got: i32, want: f64| (got as f64 - want).abs() <= 1.0;
            n += 1;
            good += (close(m.mv0.h, gt[0].0) && close(m.mv0.v, gt[0].1) && close(m.mv1.h, gt[1].0) && close(m.mv1.v, gt[1].1)) as usize;
        }
    }
    let pass = good * 10 >= n * 9 && t.elapsed().as_secs_f64() < 120.0;
    verdict("AC7", pass, format!("{good}/{n} blocks within one quarter-pel of ground truth"), t);
    assert!(pass);
}

#[test]
fn ac08_prediction_gain() {
    let t = Instant::now();
    let affine: Vec<_> = full_runs().iter().filter(|(name, _)| *name == "zoom").collect();
    let translational = encode_corpus(&EncoderConfig {
        enable_affine: false,
        ..EncoderConfig::default()
    });
    let translational: Vec<_> = translational.iter().filter(|(name, _)| *name == "zoom").collect();
    let sum = |runs: &[&(&str, EncodedFrame)], f: fn(&EncodedFrame) -> u64| runs.iter().map(|(_, e)| f(e)).sum::<u64>();
    let (sse_a, sse_t) = (sum(&affine, |e| e.stats.sse_y), sum(&translational, |e| e.stats.sse_y));
    let (bits_a, bits_t) = (sum(&affine, |e| e.stats.total_bits), sum(&translational, |e| e.stats.total_bits));
    let nb = |f: fn(&EncodedFrame) -> u64| sum(&affine, f) as f64;
    let affine_share = nb(|e| e.stats.non_border_area[1..].iter().sum()) / nb(|e| e.stats.non_border_area.iter().sum());
    let pass = sse_a < sse_t && bits_a <= bits_t && affine_share > 0.5 && t.elapsed().as_secs_f64() < 300.0;
    verdict(
        "AC8",
        pass,
        format!(
            "SSE {sse_a} vs {sse_t}, bits {bits_a} vs {bits_t}, affine non-border area {:.1}%",
            100.0 * affine_share
        ),
        t,
    );
    assert!(pass);
}

#[test]
fn ac09_amm_determinism() {
    let t = Instant::now();
    let corners = |mv2, mv3, mv4| AffineCorners {
        p2: (0, 0),
        mv2,
        p3: (15, 0),
        mv3,
        p4: (0, 15),
        mv4,
    };
    let mv = q(4, -8);
    let degenerate = amm_derive((16, 0), 16, &corners(mv, mv, mv)).unwrap();
    let worked = amm_derive((16, 0), 16, &corners(q(0, 0), q(15, 0), q(0, 15))).unwrap();
    let pass = (degenerate.mv0, degenerate.mv1) == (mv, mv)
        && (worked.mv0, worked.mv1) == (q(15, 0), q(30, 0))
        && t.elapsed().as_secs_f64() < 1.0;
    verdict(
        "AC9",
        pass,
        format!("translational -> {:?} {:?}; worked example -> {:?} {:?}", degenerate.mv0, degenerate.mv1, worked.mv0, worked.mv1),
        t,
    );
    assert!(pass);
}

#[test]
fn ac10_amm_never_increases_cost() {
    let t = Instant::now();
    let without = encode_corpus(&EncoderConfig {
        enable_amm: false,
        ..EncoderConfig::default()
    });
    let mut worse = Vec::new();
    let (mut total_with, mut total_without) = (0.0, 0.0);
    for ((name, with), (_, without)) in full_runs().iter().zip(&without) {
        total_with += with.stats.total_cost;
        total_without += without.stats.total_cost;
        if with.stats.total_cost > without.stats.total_cost {
            worse.push(format!("{name}#{}: {:.0} > {:.0}", with.stats.poc, with.stats.total_cost, without.stats.total_cost));
        }
    }
    let pass = worse.is_empty() && t.elapsed().as_secs_f64() < 300.0;
    verdict(
        "AC10",
        pass,
        format!("total cost {total_with:.0} with AMM vs {total_without:.0} without; frames with higher cost: {worse:?}"),
        t,
    );
    assert!(pass);
}
