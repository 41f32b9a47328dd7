//! Prediction-run configuration: a flat `key=value` file whose keys match the
//! long flag names, overridden by any flag given on the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::PredictArgs;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub width: usize,
    pub height: usize,
    /// Half-open frame range; the first frame is only a reference.
    pub frames: (usize, Option<usize>),
    pub qp: u8,
    pub range: u32,
    pub enable_affine: bool,
    pub enable_amm: bool,
    pub pixel_based_mc: bool,
    pub two_step_filter: bool,
    pub out: PathBuf,
}

const KEYS: [&str; 11] = [
    "input",
    "width",
    "height",
    "frames",
    "qp",
    "range",
    "no-affine",
    "no-amm",
    "pixel-mc",
    "two-step-filter",
    "out",
];

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, found {line:?}", n + 1);
        };
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key {key:?}", n + 1);
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// `N` for the first N frames, or `START:END`, half-open; `START:` runs to
/// the end of the file.
pub fn parse_frames(s: &str) -> Result<(usize, Option<usize>)> {
    let num = |t: &str| t.trim().parse::<usize>().with_context(|| format!("bad frame number {t:?}"));
    let (start, end) = match s.split_once(':') {
        Some((a, b)) => (num(a)?, if b.trim().is_empty() { None } else { Some(num(b)?) }),
        None => (0, Some(num(s)?)),
    };
    if let Some(end) = end {
        if end < start + 2 {
            bail!("frame range {s:?} holds fewer than two frames");
        }
    }
    Ok((start, end))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => bail!("{key}: expected a boolean, found {v:?}"),
    }
}

impl RunConfig {
    pub fn resolve(args: &PredictArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => load(path)?,
            None => BTreeMap::new(),
        };
        let get = |key: &str| file.get(key).map(String::as_str);
        fn pick<T: std::str::FromStr>(flag: Option<T>, file: Option<&str>, key: &str) -> Result<Option<T>>
        where
            T::Err: std::fmt::Display,
        {
            match (flag, file) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(s)) => s.parse().map(Some).map_err(|e| anyhow::anyhow!("{key}: {e}")),
                (None, None) => Ok(None),
            }
        }
        fn required<T>(v: Option<T>, key: &str) -> Result<T> {
            v.with_context(|| format!("missing required setting {key:?}"))
        }
        let toggle = |flag: bool, key: &str| -> Result<bool> {
            Ok(flag || get(key).map(|v| parse_bool(key, v)).transpose()?.unwrap_or(false))
        };

        let frames = match (&args.frames, get("frames")) {
            (Some(s), _) => parse_frames(s)?,
            (None, Some(s)) => parse_frames(s)?,
            (None, None) => (0, None),
        };
        let cfg = RunConfig {
            input: required(pick(args.input.clone(), get("input"), "input")?, "input")?,
            width: required(pick(args.width, get("width"), "width")?, "width")?,
            height: required(pick(args.height, get("height"), "height")?, "height")?,
            frames,
            qp: pick(args.qp, get("qp"), "qp")?.unwrap_or(27),
            range: pick(args.range, get("range"), "range")?.unwrap_or(64),
            enable_affine: !toggle(args.no_affine, "no-affine")?,
            enable_amm: !toggle(args.no_amm, "no-amm")?,
            pixel_based_mc: toggle(args.pixel_mc, "pixel-mc")?,
            two_step_filter: toggle(args.two_step_filter, "two-step-filter")?,
            out: required(pick(args.out.clone(), get("out"), "out")?, "out")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.qp > 51 {
            bail!("qp {} outside 0..=51", self.qp);
        }
        if self.range == 0 {
            bail!("range must be at least 1");
        }
        if self.width == 0 || self.height == 0 || !self.width.is_multiple_of(8) || !self.height.is_multiple_of(8) {
            bail!("frame size {}x{} must be a non-zero multiple of 8", self.width, self.height);
        }
        Ok(())
    }
}

fn load(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config_text(&text).with_context(|| format!("config {}", path.display()))
}
