//! 8-bit rasters and binary PGM (P5) / PPM (P6) I/O.
//!
//! Only maxval 255 is supported. Headers may carry `#` comments; exactly one
//! whitespace byte separates the maxval from the sample data.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated data: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("invalid raster: {0}")]
    Invalid(String),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

/// Row-major 8-bit raster with one (gray) or three (RGB) interleaved channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::Invalid(format!("dimensions must be positive, got {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(RasterError::Invalid(format!("channels must be 1 or 3, got {channels}")));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| RasterError::Invalid("dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(RasterError::Invalid(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Raster filled with a single value in every sample.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self, RasterError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Samples of the pixel at `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }
}

/// Per-pixel depth levels; only absolute level differences are meaningful.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    levels: Vec<u8>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, levels: Vec<u8>) -> Result<Self, RasterError> {
        let r = Raster::new(width, height, 1, levels)?;
        Self::from_raster(r)
    }

    /// Reinterprets a single-channel raster as depth levels.
    pub fn from_raster(r: Raster) -> Result<Self, RasterError> {
        if r.channels != 1 {
            return Err(RasterError::Invalid(format!("depth map must be single-channel, got {} channels", r.channels)));
        }
        Ok(Self { width: r.width, height: r.height, levels: r.data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn to_raster(&self) -> Raster {
        Raster { width: self.width, height: self.height, channels: 1, data: self.levels.clone() }
    }
}

pub fn load_raster(path: impl AsRef<Path>) -> Result<Raster, RasterError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => RasterError::FileNotFound(path.display().to_string()),
        _ => RasterError::Io(e),
    })?;
    decode_pnm(&bytes)
}

pub fn save_raster(r: &Raster, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    file.write_all(&encode_pnm(r))?;
    file.flush()?;
    Ok(())
}

pub fn encode_pnm(r: &Raster) -> Vec<u8> {
    let magic = if r.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", r.width, r.height).into_bytes();
    out.extend_from_slice(&r.data);
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next_number(&mut self, what: &str) -> Result<usize, RasterError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(RasterError::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| RasterError::MalformedHeader(format!("{what} out of range")))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Raster, RasterError> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(RasterError::MalformedHeader("bad magic, expected P5 or P6".into())),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    match bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        _ => return Err(RasterError::MalformedHeader("bad magic, expected P5 or P6".into())),
    }
    let width = cur.next_number("width")?;
    let height = cur.next_number("height")?;
    let maxval = cur.next_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(RasterError::MalformedHeader(format!("nonpositive dimensions {width}x{height}")));
    }
    if maxval != 255 {
        return Err(RasterError::MalformedHeader(format!("maxval must be 255, got {maxval}")));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(RasterError::MalformedHeader("missing whitespace after maxval".into())),
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| RasterError::MalformedHeader("dimensions overflow".into()))?;
    let body = &bytes[cur.pos..];
    if body.len() < expected {
        return Err(RasterError::TruncatedData { expected, found: body.len() });
    }
    Raster::new(width, height, channels, body[..expected].to_vec())
}

/// Converts RGB to luma with the 0.299/0.587/0.114 weights; gray input is returned unchanged.
pub fn to_grayscale(r: &Raster) -> Raster {
    if r.channels == 1 {
        return r.clone();
    }
    let data = r
        .data
        .chunks_exact(3)
        .map(|px| {
            let y = 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Raster { width: r.width, height: r.height, channels: 1, data }
}
