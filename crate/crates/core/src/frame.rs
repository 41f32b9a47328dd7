//! 8-bit planar frames with edge-replicated margins, raw I420 I/O and quality metrics.

use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

/// Padding on every side of a plane. Covers a +-64 pel search window plus
/// the 8-tap filter reach.
pub const MARGIN: usize = 80;

/// One 8-bit sample raster surrounded by `margin` samples of edge replication.
#[derive(Clone, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    margin: usize,
    stride: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for Plane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Plane")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("margin", &self.margin)
            .finish()
    }
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Self::with_margin(width, height, MARGIN)
    }

    pub fn with_margin(width: usize, height: usize, margin: usize) -> Self {
        assert!(width > 0 && height > 0, "plane dimensions must be positive");
        assert!(margin >= 8, "margin must cover the filter reach");
        let stride = width + 2 * margin;
        Plane {
            width,
            height,
            margin,
            stride,
            data: vec![0; stride * (height + 2 * margin)],
        }
    }

    /// Builds a padded plane from `width * height` row-major samples.
    pub fn from_samples(width: usize, height: usize, samples: &[u8]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "plane dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} plane",
                samples.len()
            )));
        }
        let mut plane = Plane::new(width, height);
        for (y, row) in samples.chunks_exact(width).enumerate() {
            plane.row_mut(y).copy_from_slice(row);
        }
        plane.pad();
        Ok(plane)
    }

    /// Plane of a constant value.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        let mut p = Plane::new(width, height);
        p.data.fill(value);
        p
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Index into the raw buffer of frame coordinate `(x, y)`; margin
    /// coordinates are negative or beyond the interior.
    #[inline]
    pub fn index(&self, x: isize, y: isize) -> usize {
        let m = self.margin as isize;
        debug_assert!(x >= -m && x < self.width as isize + m);
        debug_assert!(y >= -m && y < self.height as isize + m);
        ((y + m) as usize) * self.stride + (x + m) as usize
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Sample at a frame coordinate inside the padded area.
    #[inline]
    pub fn at(&self, x: isize, y: isize) -> u8 {
        self.data[self.index(x, y)]
    }

    /// Sample at any coordinate, extending the edges indefinitely.
    #[inline]
    pub fn at_clamped(&self, x: i64, y: i64) -> u8 {
        let x = x.clamp(0, self.width as i64 - 1) as usize;
        let y = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[(y + self.margin) * self.stride + x + self.margin]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        let i = self.index(x as isize, y as isize);
        self.data[i] = value;
    }

    /// Interior samples of row `y`.
    pub fn row(&self, y: usize) -> &[u8] {
        let start = (y + self.margin) * self.stride + self.margin;
        &self.data[start..start + self.width]
    }

    pub fn row_mut(&mut self, y: usize) -> &mut [u8] {
        let start = (y + self.margin) * self.stride + self.margin;
        &mut self.data[start..start + self.width]
    }

    /// Interior samples in row-major order.
    pub fn samples(&self) -> Vec<u8> {
        (0..self.height).flat_map(|y| self.row(y).iter().copied()).collect()
    }

    /// Rewrites the margins by nearest-edge replication of the interior.
    pub fn pad(&mut self) {
        let (m, w, h, stride) = (self.margin, self.width, self.height, self.stride);
        for y in m..m + h {
            let row = &mut self.data[y * stride..(y + 1) * stride];
            let (left, right) = (row[m], row[m + w - 1]);
            row[..m].fill(left);
            row[m + w..].fill(right);
        }
        let (top, rest) = self.data.split_at_mut(m * stride);
        let first = &rest[..stride];
        for dst in top.chunks_exact_mut(stride) {
            dst.copy_from_slice(first);
        }
        let last_start = (m + h - 1) * stride;
        let (body, bottom) = self.data.split_at_mut((m + h) * stride);
        let last = &body[last_start..last_start + stride];
        for dst in bottom.chunks_exact_mut(stride) {
            dst.copy_from_slice(last);
        }
    }

    /// View of an interior rectangle.
    pub fn region(&self, x: usize, y: usize, width: usize, height: usize) -> Result<PlaneRegion<'_>> {
        if x + width > self.width || y + height > self.height {
            return Err(Error::DimensionMismatch(format!(
                "region {width}x{height} at ({x}, {y}) exceeds {}x{} plane",
                self.width, self.height
            )));
        }
        Ok(PlaneRegion {
            data: &self.data,
            offset: self.index(x as isize, y as isize),
            stride: self.stride,
            width,
            height,
        })
    }

    pub fn full_region(&self) -> PlaneRegion<'_> {
        self.region(0, 0, self.width, self.height).expect("full region")
    }

    /// Copies `block` into the interior at `(x, y)`, clipping at the plane edge.
    /// Margins are not refreshed; call [`Plane::pad`] afterwards.
    pub fn put_block(&mut self, x: usize, y: usize, block: &Block) {
        for by in 0..block.height.min(self.height.saturating_sub(y)) {
            let w = block.width.min(self.width.saturating_sub(x));
            let src = &block.row(by)[..w];
            self.row_mut(y + by)[x..x + w].copy_from_slice(src);
        }
    }
}

/// A borrowed rectangle of samples.
#[derive(Clone, Copy)]
pub struct PlaneRegion<'a> {
    data: &'a [u8],
    offset: usize,
    stride: usize,
    pub width: usize,
    pub height: usize,
}

impl<'a> PlaneRegion<'a> {
    pub fn row(&self, y: usize) -> &'a [u8] {
        let start = self.offset + y * self.stride;
        &self.data[start..start + self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &'a [u8]> + '_ {
        (0..self.height).map(move |y| self.row(y))
    }

    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.data[self.offset + y * self.stride + x]
    }

    pub fn to_block(&self) -> Block {
        Block {
            width: self.width,
            height: self.height,
            data: self.rows().flatten().copied().collect(),
        }
    }
}

/// An owned, unpadded rectangle of samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Block {
    pub fn new(width: usize, height: usize) -> Self {
        Block {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn row_mut(&mut self, y: usize) -> &mut [u8] {
        &mut self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn region(&self) -> PlaneRegion<'_> {
        PlaneRegion {
            data: &self.data,
            offset: 0,
            stride: self.width,
            width: self.width,
            height: self.height,
        }
    }

    /// Inner rectangle, e.g. to drop an apron.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Block {
        let mut out = Block::new(width, height);
        for r in 0..height {
            out.row_mut(r)
                .copy_from_slice(&self.row(y + r)[x..x + width]);
        }
        out
    }
}

/// Sum of squared differences between two equally sized regions.
pub fn sse(a: PlaneRegion<'_>, b: PlaneRegion<'_>) -> Result<u64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(format!(
            "sse over {}x{} and {}x{} regions",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(a.rows().zip(b.rows()).map(|(ra, rb)| sse_row(ra, rb)).sum())
}

#[inline]
pub(crate) fn sse_row(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as i32 - y as i32;
            (d * d) as u64
        })
        .sum()
}

/// Three planes of an I420 picture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
    pub poc: usize,
}

pub fn chroma_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(2), height.div_ceil(2))
}

/// Bytes of one I420 frame.
pub fn frame_bytes(width: usize, height: usize) -> usize {
    let (cw, ch) = chroma_dims(width, height);
    width * height + 2 * cw * ch
}

impl Frame {
    pub fn new(width: usize, height: usize) -> Self {
        let (cw, ch) = chroma_dims(width, height);
        Frame {
            y: Plane::new(width, height),
            cb: Plane::new(cw, ch),
            cr: Plane::new(cw, ch),
            poc: 0,
        }
    }

    pub fn from_planes(y: Plane, cb: Plane, cr: Plane, poc: usize) -> Result<Self> {
        let (cw, ch) = chroma_dims(y.width(), y.height());
        for c in [&cb, &cr] {
            if c.width() != cw || c.height() != ch {
                return Err(Error::DimensionMismatch(format!(
                    "chroma {}x{} for luma {}x{}",
                    c.width(),
                    c.height(),
                    y.width(),
                    y.height()
                )));
            }
        }
        Ok(Frame { y, cb, cr, poc })
    }

    /// Parses one frame worth of I420 bytes.
    pub fn from_i420(width: usize, height: usize, bytes: &[u8], poc: usize) -> Result<Self> {
        let (cw, ch) = chroma_dims(width, height);
        if bytes.len() != frame_bytes(width, height) {
            return Err(Error::DimensionMismatch(format!(
                "{} bytes for a {width}x{height} I420 frame",
                bytes.len()
            )));
        }
        let (ybytes, rest) = bytes.split_at(width * height);
        let (cbbytes, crbytes) = rest.split_at(cw * ch);
        Frame::from_planes(
            Plane::from_samples(width, height, ybytes)?,
            Plane::from_samples(cw, ch, cbbytes)?,
            Plane::from_samples(cw, ch, crbytes)?,
            poc,
        )
    }

    pub fn to_i420(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(frame_bytes(self.width(), self.height()));
        for p in self.planes() {
            for y in 0..p.height() {
                out.extend_from_slice(p.row(y));
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.y.width()
    }

    pub fn height(&self) -> usize {
        self.y.height()
    }

    pub fn planes(&self) -> [&Plane; 3] {
        [&self.y, &self.cb, &self.cr]
    }

    pub fn planes_mut(&mut self) -> [&mut Plane; 3] {
        [&mut self.y, &mut self.cb, &mut self.cr]
    }

    pub fn pad(&mut self) {
        for p in self.planes_mut() {
            p.pad();
        }
    }

    pub fn same_dims(&self, other: &Frame) -> bool {
        self.width() == other.width() && self.height() == other.height()
    }
}

/// Reads frame `frame_index` of a raw I420 file.
pub fn read_yuv420(path: impl AsRef<Path>, width: usize, height: usize, frame_index: usize) -> Result<Frame> {
    let path = path.as_ref();
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "frame dimensions must be positive, got {width}x{height}"
        )));
    }
    let size = frame_bytes(width, height) as u64;
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let available = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let needed = (frame_index as u64 + 1) * size;
    if available < needed {
        return Err(Error::ShortFile {
            path: path.to_path_buf(),
            frame_index,
            needed,
            available,
        });
    }
    file.seek(SeekFrom::Start(frame_index as u64 * size))
        .map_err(|e| Error::io(path, e))?;
    let mut buf = vec![0u8; size as usize];
    file.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Frame::from_i420(width, height, &buf, frame_index)
}

/// Number of whole frames in a raw I420 file.
pub fn count_yuv420_frames(path: impl AsRef<Path>, width: usize, height: usize) -> Result<usize> {
    let path = path.as_ref();
    let len = std::fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
    Ok((len / frame_bytes(width, height) as u64) as usize)
}

/// Writes frames back to back as raw I420.
pub fn write_yuv420(frames: &[Frame], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(first) = frames.first() {
        if let Some(bad) = frames.iter().find(|f| !f.same_dims(first)) {
            return Err(Error::DimensionMismatch(format!(
                "frame {} is {}x{}, expected {}x{}",
                bad.poc,
                bad.width(),
                bad.height(),
                first.width(),
                first.height()
            )));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for f in frames {
        out.write_all(&f.to_i420()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Per-plane PSNR in dB. Identical planes report `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Psnr {
    pub y: f64,
    pub cb: f64,
    pub cr: f64,
}

pub fn psnr_from_sse(sse: u64, samples: usize) -> f64 {
    if sse == 0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 * samples as f64 / sse as f64).log10()
    }
}

pub fn psnr(a: &Frame, b: &Frame) -> Result<Psnr> {
    if !a.same_dims(b) {
        return Err(Error::DimensionMismatch(format!(
            "psnr of {}x{} and {}x{} frames",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let plane = |p: &Plane, q: &Plane| -> Result<f64> {
        Ok(psnr_from_sse(sse(p.full_region(), q.full_region())?, p.width() * p.height()))
    };
    Ok(Psnr {
        y: plane(&a.y, &b.y)?,
        cb: plane(&a.cb, &b.cb)?,
        cr: plane(&a.cr, &b.cr)?,
    })
}
