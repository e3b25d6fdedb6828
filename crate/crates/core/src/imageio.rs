//! Netpbm grayscale (P2/P5) and color (P6) images with 8-bit samples.
//!
//! Output headers are canonical: `"P5\n<cols> <rows>\n255\n"` with no
//! comments, so serialized files are byte-stable.

use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u64),
    #[error("payload truncated: expected {expected} samples, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
    #[error("unexpected data after the pixel payload")]
    TrailingData,
    #[error("format {format:?} cannot hold a {channels}-channel raster")]
    FormatMismatch { format: PnmFormat, channels: usize },
    #[error("raster has {0} channel(s); a 3-channel raster is required")]
    NotColor(usize),
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major 8-bit raster with 1 (gray) or 3 (RGB, interleaved) channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRaster {
    rows: usize,
    cols: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageRaster {
    pub fn new(rows: usize, cols: usize, channels: usize, data: Vec<u8>) -> Result<Self, PnmError> {
        if rows == 0 || cols == 0 {
            return Err(PnmError::InvalidRaster(format!("empty dimensions {rows}x{cols}")));
        }
        if channels != 1 && channels != 3 {
            return Err(PnmError::InvalidRaster(format!("{channels} channels")));
        }
        if data.len() != rows * cols * channels {
            return Err(PnmError::InvalidRaster(format!(
                "{} bytes for {rows}x{cols}x{channels}",
                data.len()
            )));
        }
        Ok(ImageRaster {
            rows,
            cols,
            channels,
            data,
        })
    }

    pub fn gray(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self, PnmError> {
        Self::new(rows, cols, 1, data)
    }

    pub fn filled(rows: usize, cols: usize, value: u8) -> Self {
        Self::gray(rows, cols, vec![value; rows * cols]).expect("non-empty dims")
    }

    /// Gray raster from a per-pixel generator `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::gray(rows, cols, data).expect("non-empty dims")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Sample at `(row, col, channel)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> u8 {
        self.data[(row * self.cols + col) * self.channels + channel]
    }

    /// Gray sample at `(row, col)`.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.cols + col]
    }

    pub fn same_shape(&self, other: &ImageRaster) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.channels == other.channels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnmFormat {
    /// ASCII graymap.
    P2,
    /// Binary graymap.
    P5,
    /// Binary pixmap.
    P6,
}

impl PnmFormat {
    /// Binary format matching the channel count.
    pub fn binary_for(channels: usize) -> PnmFormat {
        if channels == 3 {
            PnmFormat::P6
        } else {
            PnmFormat::P5
        }
    }

    fn channels(self) -> usize {
        match self {
            PnmFormat::P2 | PnmFormat::P5 => 1,
            PnmFormat::P6 => 3,
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn header_uint(&mut self, what: &str) -> Result<u64, PnmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PnmError::MalformedHeader(format!("{what} out of range")))
    }
}

/// Parses a P2, P5 or P6 stream with maxval 255.
pub fn read_pnm(bytes: &[u8]) -> Result<ImageRaster, PnmError> {
    let format = match bytes.get(..2) {
        Some(b"P2") => PnmFormat::P2,
        Some(b"P5") => PnmFormat::P5,
        Some(b"P6") => PnmFormat::P6,
        _ => return Err(PnmError::MalformedHeader("expected magic P2, P5 or P6".into())),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(PnmError::MalformedHeader("magic must be followed by whitespace".into()));
    }
    let cols = cur.header_uint("width")? as usize;
    let rows = cur.header_uint("height")? as usize;
    let maxval = cur.header_uint("maxval")?;
    if cols == 0 || rows == 0 {
        return Err(PnmError::MalformedHeader(format!("zero dimension {cols}x{rows}")));
    }
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval(maxval));
    }
    let channels = format.channels();
    let expected = rows
        .checked_mul(cols)
        .and_then(|p| p.checked_mul(channels))
        .ok_or_else(|| PnmError::MalformedHeader("dimensions overflow".into()))?;

    let data = match format {
        PnmFormat::P5 | PnmFormat::P6 => {
            // exactly one whitespace byte separates maxval from the raster
            match cur.bytes.get(cur.pos) {
                Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                _ => return Err(PnmError::MalformedHeader("missing separator after maxval".into())),
            }
            let payload = &cur.bytes[cur.pos..];
            if payload.len() < expected {
                return Err(PnmError::TruncatedPayload {
                    expected,
                    found: payload.len(),
                });
            }
            if payload[expected..].iter().any(|b| !b.is_ascii_whitespace()) {
                return Err(PnmError::TrailingData);
            }
            payload[..expected].to_vec()
        }
        PnmFormat::P2 => {
            let mut data = Vec::with_capacity(expected);
            let text = &cur.bytes[cur.pos..];
            let mut tokens = text.split(|b| b.is_ascii_whitespace()).filter(|t| !t.is_empty());
            for _ in 0..expected {
                let Some(tok) = tokens.next() else {
                    return Err(PnmError::TruncatedPayload {
                        expected,
                        found: data.len(),
                    });
                };
                let value = std::str::from_utf8(tok)
                    .ok()
                    .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|s| s.parse::<u32>().ok())
                    .ok_or_else(|| {
                        PnmError::MalformedPayload(format!("bad sample `{}`", String::from_utf8_lossy(tok)))
                    })?;
                if value > 255 {
                    return Err(PnmError::MalformedPayload(format!("sample {value} exceeds maxval")));
                }
                data.push(value as u8);
            }
            if tokens.next().is_some() {
                return Err(PnmError::TrailingData);
            }
            data
        }
    };
    ImageRaster::new(rows, cols, channels, data)
}

/// Serializes with a canonical header.
pub fn write_pnm(raster: &ImageRaster, format: PnmFormat) -> Result<Vec<u8>, PnmError> {
    if format.channels() != raster.channels {
        return Err(PnmError::FormatMismatch {
            format,
            channels: raster.channels,
        });
    }
    let magic = match format {
        PnmFormat::P2 => "P2",
        PnmFormat::P5 => "P5",
        PnmFormat::P6 => "P6",
    };
    let mut out = format!("{magic}\n{} {}\n255\n", raster.cols, raster.rows).into_bytes();
    match format {
        PnmFormat::P5 | PnmFormat::P6 => out.extend_from_slice(&raster.data),
        PnmFormat::P2 => {
            for row in raster.data.chunks(raster.cols) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    Ok(out)
}

pub fn read_pnm_file(path: impl AsRef<Path>) -> Result<ImageRaster, PnmError> {
    read_pnm(&fs::read(path)?)
}

/// Writes in the binary format matching the raster's channel count.
pub fn write_pnm_file(path: impl AsRef<Path>, raster: &ImageRaster) -> Result<(), PnmError> {
    let bytes = write_pnm(raster, PnmFormat::binary_for(raster.channels))?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Splits an RGB raster into its R, G and B planes.
pub fn split_channels(raster: &ImageRaster) -> Result<[ImageRaster; 3], PnmError> {
    if raster.channels != 3 {
        return Err(PnmError::NotColor(raster.channels));
    }
    let plane = |c: usize| {
        let data = raster.data.iter().skip(c).step_by(3).copied().collect();
        ImageRaster::gray(raster.rows, raster.cols, data).expect("plane of a valid raster")
    };
    Ok([plane(0), plane(1), plane(2)])
}

/// Interleaves three gray planes of equal size into an RGB raster.
pub fn merge_channels(planes: &[ImageRaster; 3]) -> Result<ImageRaster, PnmError> {
    let [r, g, b] = planes;
    if !(r.channels == 1 && r.same_shape(g) && r.same_shape(b)) {
        return Err(PnmError::InvalidRaster("planes must be gray and equally sized".into()));
    }
    let mut data = Vec::with_capacity(r.data.len() * 3);
    for i in 0..r.data.len() {
        data.extend_from_slice(&[r.data[i], g.data[i], b.data[i]]);
    }
    ImageRaster::new(r.rows, r.cols, 3, data)
}
