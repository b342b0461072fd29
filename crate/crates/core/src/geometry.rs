//! Level arithmetic, membership and footprint accounting.

use std::fmt;
use std::str::FromStr;

use crate::descriptor::FractalDescriptor;
use crate::error::{Error, Result};

/// Largest supported embedded side; keeps `y * n + x` inside `u64`.
pub const MAX_SIDE: u64 = 1 << 32;
/// Bound on `k^r`.
pub const MAX_CELLS: u64 = 1 << 63;

/// Coordinate in the `n x n` embedded domain, origin top-left, `y` downwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EmbeddedCoord {
    pub x: u64,
    pub y: u64,
}

impl EmbeddedCoord {
    pub const fn new(x: u64, y: u64) -> Self {
        Self { x, y }
    }

    /// Applies a neighbor offset, returning `None` outside `[0, n)^2`.
    #[inline]
    pub fn offset(self, dx: i64, dy: i64, n: u64) -> Option<Self> {
        let x = self.x.checked_add_signed(dx)?;
        let y = self.y.checked_add_signed(dy)?;
        (x < n && y < n).then_some(Self { x, y })
    }
}

impl fmt::Display for EmbeddedCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

/// Parses `x,y` with optional surrounding whitespace.
pub(crate) fn parse_pair(text: &str) -> Result<(u64, u64)> {
    let bad = || Error::InvalidCoordinate(text.to_string());
    let (x, y) = text.split_once(',').ok_or_else(bad)?;
    let x = x.trim().parse().map_err(|_| bad())?;
    let y = y.trim().parse().map_err(|_| bad())?;
    Ok((x, y))
}

impl FromStr for EmbeddedCoord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_pair(s).map(|(x, y)| Self { x, y })
    }
}

/// Storage layout of a cell grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Full `n x n` bounding box.
    Embedded,
    /// Exactly `k^r` cells, in compact row-major order.
    Linear,
    /// `k^(r-m)` dense `rho x rho` mini bounding boxes, `rho = s^m`.
    Blocked { rho: u64 },
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layout::Embedded => f.write_str("embedded"),
            Layout::Linear => f.write_str("linear"),
            Layout::Blocked { rho } => write!(f, "blocked({rho})"),
        }
    }
}

/// Embedded side `n = s^r`, validating that both `n` and `k^r` are in range.
pub fn side(desc: &FractalDescriptor, r: u32) -> Result<u64> {
    let too_large = || Error::LevelTooLarge {
        level: r,
        s: desc.s(),
        k: desc.k(),
    };
    let n = desc.s().checked_pow(r).filter(|&n| n <= MAX_SIDE);
    let cells = desc.k().checked_pow(r).filter(|&c| c < MAX_CELLS);
    match (n, cells) {
        (Some(n), Some(_)) => Ok(n),
        _ => Err(too_large()),
    }
}

/// `k^r`, the number of fractal cells at level `r`.
pub fn cell_count(desc: &FractalDescriptor, r: u32) -> Result<u64> {
    desc.k()
        .checked_pow(r)
        .filter(|&c| c < MAX_CELLS)
        .ok_or(Error::CountOverflow {
            k: desc.k(),
            level: r,
        })
}

/// Membership test: every level's sub-box digit pair must be an occupied replica.
pub fn contains(desc: &FractalDescriptor, r: u32, e: EmbeddedCoord) -> Result<bool> {
    let n = side(desc, r)?;
    if e.x >= n || e.y >= n {
        return Err(Error::EmbeddedOutOfRange { x: e.x, y: e.y, n });
    }
    Ok(contains_unchecked(desc, r, e))
}

#[inline]
pub(crate) fn contains_unchecked(desc: &FractalDescriptor, r: u32, e: EmbeddedCoord) -> bool {
    let s = desc.s();
    let (mut x, mut y) = (e.x, e.y);
    for _ in 0..r {
        if desc.replica_at(x % s, y % s).is_none() {
            return false;
        }
        x /= s;
        y /= s;
    }
    true
}

/// All fractal cells at level `r`, in row-major embedded order.
///
/// Built by replicating the previous level at every replica position, so the
/// cost is `O(k^r log k^r)` rather than a scan of the bounding box.
pub fn enumerate_cells(desc: &FractalDescriptor, r: u32) -> Result<Vec<EmbeddedCoord>> {
    side(desc, r)?;
    let total = cell_count(desc, r)?;
    let mut cells = Vec::with_capacity(total as usize);
    cells.push(EmbeddedCoord::new(0, 0));
    let mut scale = 1u64;
    for _ in 0..r {
        let prev = cells.len();
        for pos in &desc.replicas()[1..] {
            for i in 0..prev {
                let c = cells[i];
                cells.push(EmbeddedCoord::new(
                    c.x + pos.gx * scale,
                    c.y + pos.gy * scale,
                ));
            }
        }
        // Replica 0 may not sit at the origin.
        let first = desc.replicas()[0];
        for c in &mut cells[..prev] {
            c.x += first.gx * scale;
            c.y += first.gy * scale;
        }
        scale *= desc.s();
    }
    cells.sort_unstable_by_key(|c| (c.y, c.x));
    Ok(cells)
}

/// Exponent `m` with `rho = s^m`, requiring `m <= r`.
pub fn block_exponent(desc: &FractalDescriptor, r: u32, rho: u64) -> Result<u32> {
    let n = side(desc, r)?;
    let invalid = || Error::InvalidBlockSize {
        rho,
        s: desc.s(),
        n,
    };
    let mut m = 0;
    let mut p = 1u64;
    while p < rho {
        p = p.checked_mul(desc.s()).ok_or_else(invalid)?;
        m += 1;
    }
    if p != rho || m > r {
        return Err(invalid());
    }
    Ok(m)
}

/// Cells stored by a layout: `s^2r`, `k^r`, or `k^(r-m) * rho^2`.
pub fn stored_cells(desc: &FractalDescriptor, r: u32, layout: Layout) -> Result<u128> {
    let n = side(desc, r)? as u128;
    Ok(match layout {
        Layout::Embedded => n * n,
        Layout::Linear => cell_count(desc, r)? as u128,
        Layout::Blocked { rho } => {
            let m = block_exponent(desc, r, rho)?;
            cell_count(desc, r - m)? as u128 * (rho as u128) * (rho as u128)
        }
    })
}

/// Embedded cells divided by stored cells for `layout`.
pub fn compression_factor(desc: &FractalDescriptor, r: u32, layout: Layout) -> Result<f64> {
    let embedded = stored_cells(desc, r, Layout::Embedded)?;
    let stored = stored_cells(desc, r, layout)?;
    Ok(embedded as f64 / stored as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> FractalDescriptor {
        FractalDescriptor::sierpinski_triangle()
    }

    #[test]
    fn triangle_membership() {
        assert!(contains(&tri(), 2, EmbeddedCoord::new(1, 2)).unwrap());
        assert!(!contains(&tri(), 2, EmbeddedCoord::new(2, 2)).unwrap());
        let carpet = FractalDescriptor::sierpinski_carpet();
        assert!(!contains(&carpet, 1, EmbeddedCoord::new(1, 1)).unwrap());
    }

    #[test]
    fn out_of_range_coordinate() {
        let err = contains(&tri(), 2, EmbeddedCoord::new(4, 0)).unwrap_err();
        assert_eq!(err, Error::EmbeddedOutOfRange { x: 4, y: 0, n: 4 });
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(
            enumerate_cells(&tri(), 0).unwrap(),
            vec![EmbeddedCoord::new(0, 0)]
        );
        assert_eq!(
            enumerate_cells(&tri(), 1).unwrap(),
            vec![
                EmbeddedCoord::new(0, 0),
                EmbeddedCoord::new(1, 0),
                EmbeddedCoord::new(0, 1)
            ]
        );
        let carpet = enumerate_cells(&FractalDescriptor::sierpinski_carpet(), 1).unwrap();
        assert_eq!(carpet.len(), 8);
        assert!(!carpet.contains(&EmbeddedCoord::new(1, 1)));
    }

    #[test]
    fn vicsek_enumeration_respects_offset_first_replica() {
        let v = FractalDescriptor::vicsek();
        let cells = enumerate_cells(&v, 2).unwrap();
        assert_eq!(cells.len(), 25);
        assert!(cells.iter().all(|&c| contains(&v, 2, c).unwrap()));
    }

    #[test]
    fn counts() {
        assert_eq!(cell_count(&tri(), 0).unwrap(), 1);
        assert_eq!(
            cell_count(&FractalDescriptor::sierpinski_carpet(), 2).unwrap(),
            64
        );
        assert_eq!(cell_count(&tri(), 16).unwrap(), 43_046_721);
        assert_eq!(
            cell_count(&tri(), 40).unwrap_err(),
            Error::CountOverflow { k: 3, level: 40 }
        );
    }

    #[test]
    fn level_bounds() {
        assert_eq!(side(&tri(), 32).unwrap(), 1 << 32);
        assert!(matches!(side(&tri(), 33), Err(Error::LevelTooLarge { .. })));
    }

    #[test]
    fn compression_examples() {
        let lin = compression_factor(&tri(), 2, Layout::Linear).unwrap();
        assert!((lin - 16.0 / 9.0).abs() < 1e-12);
        let big = compression_factor(&tri(), 16, Layout::Linear).unwrap();
        assert!((big - 4294967296.0 / 43046721.0).abs() < 1e-9);
        assert!((big - 99.77).abs() < 0.1);
        let blocked = compression_factor(&tri(), 6, Layout::Blocked { rho: 4 }).unwrap();
        assert!((blocked - 4096.0 / 1296.0).abs() < 1e-12);
    }

    #[test]
    fn block_size_must_be_power_of_s() {
        assert_eq!(block_exponent(&tri(), 6, 4).unwrap(), 2);
        assert_eq!(block_exponent(&tri(), 6, 1).unwrap(), 0);
        assert!(matches!(
            block_exponent(&tri(), 6, 6),
            Err(Error::InvalidBlockSize { rho: 6, .. })
        ));
        assert!(matches!(
            block_exponent(&tri(), 2, 8),
            Err(Error::InvalidBlockSize { .. })
        ));
        assert!(matches!(
            compression_factor(&tri(), 6, Layout::Blocked { rho: 3 }),
            Err(Error::InvalidBlockSize { .. })
        ));
    }

    #[test]
    fn coordinate_parsing() {
        assert_eq!(
            "5, 2".parse::<EmbeddedCoord>().unwrap(),
            EmbeddedCoord::new(5, 2)
        );
        assert!("5;2".parse::<EmbeddedCoord>().is_err());
        assert!("-1,2".parse::<EmbeddedCoord>().is_err());
    }
}
