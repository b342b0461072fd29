//! Plain PBM (P1) export of simulation states.
//!
//! Frames always show the embedded `n x n` view: compact states are placed
//! through λ, so equal states give identical bytes whatever the backend.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stencil::SimState;
use crate::storage::{Grid, MemoryCap};

/// Largest frame side rendered by default.
pub const DEFAULT_RENDER_CAP: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameFormat {
    #[default]
    Pbm,
}

impl FrameFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FrameFormat::Pbm => "pbm",
        }
    }
}

impl fmt::Display for FrameFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for FrameFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pbm" => Ok(FrameFormat::Pbm),
            _ => Err(Error::Pbm(format!("unsupported frame format {s:?}"))),
        }
    }
}

/// Renders `grid` as a P1 bitmap; cells outside the fractal are 0.
///
/// `max_side` bounds `n`, and the raster itself must fit under `cap`.
pub fn render_pbm(grid: &Grid, max_side: u64, cap: MemoryCap) -> Result<Vec<u8>> {
    let n = grid.map().side();
    if n > max_side {
        return Err(Error::RenderTooLarge { n, cap: max_side });
    }
    let header = format!("P1\n{n} {n}\n");
    let row = n as usize + 1;
    let bytes = header.len() as u128 + n as u128 * row as u128;
    cap.check(bytes)?;

    let mut out = Vec::with_capacity(bytes as usize);
    out.extend_from_slice(header.as_bytes());
    let start = out.len();
    out.resize(bytes as usize, b'0');
    for y in 0..n as usize {
        out[start + y * row + n as usize] = b'\n';
    }
    for e in grid.alive_cells() {
        out[start + e.y as usize * row + e.x as usize] = b'1';
    }
    Ok(out)
}

/// Writes the current front buffer of `state` to `path`.
pub fn export_frame(state: &SimState, path: &Path, format: FrameFormat) -> Result<()> {
    export_frame_with(state, path, format, DEFAULT_RENDER_CAP, MemoryCap::DEFAULT)
}

pub fn export_frame_with(
    state: &SimState,
    path: &Path,
    format: FrameFormat,
    max_side: u64,
    cap: MemoryCap,
) -> Result<()> {
    let bytes = match format {
        FrameFormat::Pbm => render_pbm(state.grid(), max_side, cap)?,
    };
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// A decoded bitmap, row-major, `true` for 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    pub width: u64,
    pub height: u64,
    pub bits: Vec<bool>,
}

impl Bitmap {
    pub fn get(&self, x: u64, y: u64) -> Option<bool> {
        if x < self.width && y < self.height {
            Some(self.bits[(y * self.width + x) as usize])
        } else {
            None
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Largest raster [`parse_pbm`] accepts.
pub const PBM_MAX_PIXELS: u64 = 1 << 28;

/// Decodes a plain PBM (P1) image. Comments and arbitrary whitespace are
/// accepted; pixel digits may be packed or spaced.
pub fn parse_pbm(data: &[u8]) -> Result<Bitmap> {
    let mut tokens = PbmTokens { data, pos: 0 };
    let bad = |m: &str| Error::Pbm(m.to_string());
    if tokens.word() != Some(b"P1".as_slice()) {
        return Err(bad("missing P1 magic"));
    }
    let mut dim = || -> Result<u64> {
        let w = tokens.word().ok_or_else(|| bad("truncated header"))?;
        std::str::from_utf8(w)
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("invalid dimension"))
    };
    let width = dim()?;
    let height = dim()?;
    let pixels = width
        .checked_mul(height)
        .filter(|&p| p <= PBM_MAX_PIXELS)
        .ok_or_else(|| bad("image too large"))?;
    let mut bits = Vec::with_capacity(pixels as usize);
    while (bits.len() as u64) < pixels {
        match tokens.pixel() {
            Some(b'0') => bits.push(false),
            Some(b'1') => bits.push(true),
            Some(_) => return Err(bad("pixel is not 0 or 1")),
            None => return Err(bad("truncated raster")),
        }
    }
    if tokens.pixel().is_some() {
        return Err(bad("trailing data after raster"));
    }
    Ok(Bitmap {
        width,
        height,
        bits,
    })
}

struct PbmTokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> PbmTokens<'a> {
    fn skip_space(&mut self) {
        while let Some(&c) = self.data.get(self.pos) {
            if c == b'#' {
                while self.data.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> Option<&'a [u8]> {
        self.skip_space();
        let start = self.pos;
        while self
            .data
            .get(self.pos)
            .is_some_and(|c| !c.is_ascii_whitespace() && *c != b'#')
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.data[start..self.pos])
    }

    fn pixel(&mut self) -> Option<u8> {
        self.skip_space();
        let c = *self.data.get(self.pos)?;
        self.pos += 1;
        Some(c)
    }
}
