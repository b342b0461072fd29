use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Neighborhood {
    #[default]
    Moore,
    VonNeumann,
}

const VON_NEUMANN: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const MOORE: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (1, -1),
    (-1, -1),
];

impl Neighborhood {
    /// Neighbor offsets `(dx, dy)`; the four axis-aligned ones come first.
    pub fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Neighborhood::Moore => &MOORE,
            Neighborhood::VonNeumann => &VON_NEUMANN,
        }
    }
}

impl FromStr for Neighborhood {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "moore" => Ok(Neighborhood::Moore),
            "von-neumann" | "vonneumann" => Ok(Neighborhood::VonNeumann),
            _ => Err(Error::InvalidRule(s.to_string())),
        }
    }
}

/// Outer-totalistic birth/survival rule over a neighborhood.
///
/// Counts are stored as bitmasks over `0..=8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StencilRule {
    birth: u16,
    survive: u16,
    pub neighborhood: Neighborhood,
}

impl StencilRule {
    pub fn new(birth: &[u8], survive: &[u8], neighborhood: Neighborhood) -> Result<Self> {
        let mask = |counts: &[u8]| -> Result<u16> {
            counts.iter().try_fold(0u16, |m, &c| {
                if c > 8 {
                    Err(Error::InvalidRule(format!("neighbor count {c} exceeds 8")))
                } else {
                    Ok(m | 1 << c)
                }
            })
        };
        Ok(Self {
            birth: mask(birth)?,
            survive: mask(survive)?,
            neighborhood,
        })
    }

    /// Standard Conway rule B3/S23 over the Moore neighborhood.
    pub fn conway() -> Self {
        Self::new(&[3], &[2, 3], Neighborhood::Moore).expect("valid rule")
    }

    /// Builds a rule from raw count bitmasks; bits above 8 are discarded.
    pub fn from_masks(birth: u16, survive: u16, neighborhood: Neighborhood) -> Self {
        Self {
            birth: birth & 0x1ff,
            survive: survive & 0x1ff,
            neighborhood,
        }
    }

    pub fn with_neighborhood(mut self, neighborhood: Neighborhood) -> Self {
        self.neighborhood = neighborhood;
        self
    }

    pub fn birth_counts(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=8u8).filter(|c| self.birth & (1 << c) != 0)
    }

    pub fn survive_counts(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=8u8).filter(|c| self.survive & (1 << c) != 0)
    }

    #[inline]
    pub fn next(&self, alive: bool, count: u32) -> bool {
        let mask = if alive { self.survive } else { self.birth };
        count <= 8 && mask & (1 << count) != 0
    }

    /// Parses `B<digits>/S<digits>`; the neighborhood defaults to Moore.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidRule(text.to_string());
        let (b, s) = text.trim().split_once('/').ok_or_else(bad)?;
        let b = b.strip_prefix(['B', 'b']).ok_or_else(bad)?;
        let s = s.strip_prefix(['S', 's']).ok_or_else(bad)?;
        let digits = |part: &str| -> Result<u16> {
            part.chars().try_fold(0u16, |m, ch| match ch.to_digit(10) {
                Some(d) if d <= 8 => Ok(m | 1 << d),
                _ => Err(bad()),
            })
        };
        Ok(Self {
            birth: digits(b)?,
            survive: digits(s)?,
            neighborhood: Neighborhood::Moore,
        })
    }
}

impl Default for StencilRule {
    fn default() -> Self {
        Self::conway()
    }
}

impl FromStr for StencilRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for StencilRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("B")?;
        for c in self.birth_counts() {
            write!(f, "{c}")?;
        }
        f.write_str("/S")?;
        for c in self.survive_counts() {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
