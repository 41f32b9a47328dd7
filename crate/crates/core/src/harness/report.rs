//! CSV statistics and PGM mode maps.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::encoder::{FrameStats, Mode, PredictionUnit};

pub const STATS_HEADER: &str = "poc,pus,translational_pct,amm_skip_pct,amm_pct,aamvp_pct,affine_pct,non_border_affine_pct,\
aamvp_searches,converged_searches,mean_iterations,luma_interpolations,chroma_interpolations,sse_y,total_bits,total_cost,\
psnr_y,psnr_cb,psnr_cr";

pub const PUS_HEADER: &str = "poc,x,y,size,mode,mv0_h,mv0_v,mv1_h,mv1_v,sse,bits,cost,candidate,iterations,converged";

fn db(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "inf".to_string()
    }
}

pub fn stats_row(s: &FrameStats) -> String {
    let pct = |m| 100.0 * s.area_fraction(m);
    format!(
        "{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{},{},{:.4},{},{},{},{},{:.3},{},{},{}",
        s.poc,
        s.pu_count,
        pct(Mode::Translational),
        pct(Mode::AmmSkip),
        pct(Mode::Amm),
        pct(Mode::Aamvp),
        100.0 * s.affine_fraction(),
        100.0 * s.non_border_affine_fraction(),
        s.aamvp_searches,
        s.converged_searches,
        s.mean_iterations,
        s.luma_interpolations,
        s.chroma_interpolations,
        s.sse_y,
        s.total_bits,
        s.total_cost,
        db(s.psnr.y),
        db(s.psnr.cb),
        db(s.psnr.cr),
    )
}

pub fn stats_csv(stats: &[FrameStats]) -> String {
    let mut out = String::from(STATS_HEADER);
    out.push('\n');
    for s in stats {
        out.push_str(&stats_row(s));
        out.push('\n');
    }
    out
}

pub fn pus_csv(frames: &[(usize, &[PredictionUnit])]) -> String {
    let mut out = String::from(PUS_HEADER);
    out.push('\n');
    for &(poc, pus) in frames {
        for pu in pus {
            let m = pu.model();
            let opt = |v: Option<String>| v.unwrap_or_default();
            let _ = writeln!(
                out,
                "{poc},{},{},{},{},{},{},{},{},{},{},{:.3},{},{},{}",
                pu.x,
                pu.y,
                pu.size,
                pu.mode.name(),
                m.mv0.h,
                m.mv0.v,
                m.mv1.h,
                m.mv1.v,
                pu.sse,
                pu.bits,
                pu.cost,
                opt(pu.candidate.map(|c| c.to_string())),
                opt(pu.search.as_ref().map(|t| t.iterations.to_string())),
                opt(pu.search.as_ref().map(|t| t.converged.to_string())),
            );
        }
    }
    out
}

/// Gray level of a mode in the PGM map; uncovered samples stay 0.
pub fn mode_gray(mode: Mode) -> u8 {
    match mode {
        Mode::Translational => 64,
        Mode::AmmSkip => 128,
        Mode::Amm => 192,
        Mode::Aamvp => 255,
    }
}

/// Binary (P5) PGM with one gray level per mode.
pub fn mode_map_pgm(width: usize, height: usize, pus: &[PredictionUnit]) -> Vec<u8> {
    let mut pixels = vec![0u8; width * height];
    for pu in pus {
        let g = mode_gray(pu.mode);
        let s = pu.size as usize;
        for y in pu.y..(pu.y + s).min(height) {
            pixels[y * width + pu.x..y * width + (pu.x + s).min(width)].fill(g);
        }
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels);
    out
}

/// Parses a binary PGM written by [`mode_map_pgm`] (no comments, maxval 255).
pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let parse_err = |message: &str| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: message.to_string(),
    };
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err("truncated PGM header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| parse_err("non-ASCII PGM header"))?);
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(parse_err("expected a P5 PGM with maxval 255"));
    }
    let dim = |s: &str| s.parse::<usize>().map_err(|_| parse_err("bad PGM dimension"));
    let (w, h) = (dim(fields[1])?, dim(fields[2])?);
    let data = bytes.get(pos..pos + w * h).ok_or_else(|| parse_err("PGM pixel data too short"))?;
    Ok((w, h, data.to_vec()))
}

pub fn write_file(path: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
