//! NBB fractal descriptors.
//!
//! A descriptor fixes the replica count `k`, the linear growth factor `s` and
//! the ordered table of replica positions inside the `s x s` sub-box grid.
//! The table order is the replica numbering shared by every map in this
//! crate.
//!
//! Descriptor files are line based:
//!
//! ```text
//! # comment
//! name=sierpinski-triangle
//! k=3
//! s=2
//! replicas=0,0;1,0;0,1
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{DescriptorError, Error, Result};

/// Position of a replica inside the `s x s` sub-box grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReplicaPos {
    pub gx: u64,
    pub gy: u64,
}

impl ReplicaPos {
    pub const fn new(gx: u64, gy: u64) -> Self {
        Self { gx, gy }
    }
}

const NO_REPLICA: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractalDescriptor {
    name: String,
    s: u64,
    replicas: Vec<ReplicaPos>,
    /// `s*s` table, row-major, holding the replica ID of each sub-box.
    slot_ids: Vec<u32>,
}

pub const BUILTIN_NAMES: [&str; 3] = ["sierpinski-triangle", "sierpinski-carpet", "vicsek"];

impl FractalDescriptor {
    /// Builds a descriptor from its replica table; `k` is the table length.
    pub fn new(name: impl Into<String>, s: u64, replicas: Vec<ReplicaPos>) -> Result<Self> {
        Self::validated(name.into(), replicas.len() as u64, s, replicas).map_err(Error::from)
    }

    fn validated(
        name: String,
        k: u64,
        s: u64,
        replicas: Vec<ReplicaPos>,
    ) -> Result<Self, DescriptorError> {
        if s < 2 {
            return Err(DescriptorError::InvalidGrowthFactor(s));
        }
        if k < 1 {
            return Err(DescriptorError::InvalidReplicaCount(k));
        }
        // s is bounded so that the s*s lookup table stays small.
        if s > u16::MAX as u64 || k > s * s {
            return Err(DescriptorError::TooManyReplicas { k, s });
        }
        if replicas.len() as u64 != k {
            return Err(DescriptorError::CountMismatch {
                k,
                listed: replicas.len(),
            });
        }
        let mut slot_ids = vec![NO_REPLICA; (s * s) as usize];
        for (index, pos) in replicas.iter().enumerate() {
            if pos.gx >= s || pos.gy >= s {
                return Err(DescriptorError::ReplicaOutOfGrid {
                    index,
                    gx: pos.gx,
                    gy: pos.gy,
                    s,
                });
            }
            let slot = &mut slot_ids[(pos.gy * s + pos.gx) as usize];
            if *slot != NO_REPLICA {
                return Err(DescriptorError::DuplicateReplica {
                    first: *slot as usize,
                    second: index,
                    gx: pos.gx,
                    gy: pos.gy,
                });
            }
            *slot = index as u32;
        }
        Ok(Self {
            name,
            s,
            replicas,
            slot_ids,
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let p = ReplicaPos::new;
        let (s, replicas) = match name {
            "sierpinski-triangle" => (2, vec![p(0, 0), p(1, 0), p(0, 1)]),
            "sierpinski-carpet" => {
                let cells = (0..3)
                    .flat_map(|gy| (0..3).map(move |gx| p(gx, gy)))
                    .filter(|c| *c != p(1, 1))
                    .collect();
                (3, cells)
            }
            "vicsek" => (3, vec![p(1, 0), p(0, 1), p(1, 1), p(2, 1), p(1, 2)]),
            other => return Err(Error::UnknownFractal(other.to_string())),
        };
        Self::new(name, s, replicas)
    }

    pub fn sierpinski_triangle() -> Self {
        Self::builtin("sierpinski-triangle").expect("built-in descriptor is valid")
    }

    pub fn sierpinski_carpet() -> Self {
        Self::builtin("sierpinski-carpet").expect("built-in descriptor is valid")
    }

    pub fn vicsek() -> Self {
        Self::builtin("vicsek").expect("built-in descriptor is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of replicas per level.
    pub fn k(&self) -> u64 {
        self.replicas.len() as u64
    }

    /// Linear growth factor per level.
    pub fn s(&self) -> u64 {
        self.s
    }

    pub fn replicas(&self) -> &[ReplicaPos] {
        &self.replicas
    }

    /// Replica ID occupying sub-box `(gx, gy)`, if any. Both must be `< s`.
    #[inline]
    pub fn replica_at(&self, gx: u64, gy: u64) -> Option<u32> {
        let id = self.slot_ids[(gy * self.s + gx) as usize];
        (id != NO_REPLICA).then_some(id)
    }

    pub fn hausdorff_dimension(&self) -> f64 {
        (self.k() as f64).ln() / (self.s as f64).ln()
    }

    /// True for the canonical triangle layout, which admits a bitwise replica ID.
    pub fn is_canonical_triangle(&self) -> bool {
        self.s == 2
            && self.replicas
                == [
                    ReplicaPos::new(0, 0),
                    ReplicaPos::new(1, 0),
                    ReplicaPos::new(0, 1),
                ]
    }

    /// Parses the descriptor file format.
    pub fn parse(text: &str) -> Result<Self, DescriptorError> {
        let mut name: Option<String> = None;
        let mut k: Option<u64> = None;
        let mut s: Option<u64> = None;
        let mut replicas: Option<Vec<ReplicaPos>> = None;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(DescriptorError::MalformedLine {
                    line: line_no,
                    text: line.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let duplicate = || DescriptorError::DuplicateKey {
                line: line_no,
                key: key.to_string(),
            };
            match key {
                "name" => {
                    if name.replace(value.to_string()).is_some() {
                        return Err(duplicate());
                    }
                }
                "k" => {
                    if k.replace(parse_int(line_no, "k", value)?).is_some() {
                        return Err(duplicate());
                    }
                }
                "s" => {
                    if s.replace(parse_int(line_no, "s", value)?).is_some() {
                        return Err(duplicate());
                    }
                }
                "replicas" => {
                    if replicas.replace(parse_replicas(line_no, value)?).is_some() {
                        return Err(duplicate());
                    }
                }
                _ => {
                    return Err(DescriptorError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    })
                }
            }
        }

        let name = name.ok_or(DescriptorError::MissingKey("name"))?;
        let k = k.ok_or(DescriptorError::MissingKey("k"))?;
        let s = s.ok_or(DescriptorError::MissingKey("s"))?;
        let replicas = replicas.ok_or(DescriptorError::MissingKey("replicas"))?;
        Self::validated(name, k, s, replicas)
    }
}

fn parse_int(line: usize, key: &'static str, value: &str) -> Result<u64, DescriptorError> {
    value.parse().map_err(|_| DescriptorError::InvalidInteger {
        line,
        key,
        value: value.to_string(),
    })
}

fn parse_replicas(line: usize, value: &str) -> Result<Vec<ReplicaPos>, DescriptorError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(';')
        .map(|pair| {
            let malformed = || DescriptorError::MalformedReplica {
                line,
                text: pair.trim().to_string(),
            };
            let (gx, gy) = pair.split_once(',').ok_or_else(malformed)?;
            let gx = gx.trim().parse().map_err(|_| malformed())?;
            let gy = gy.trim().parse().map_err(|_| malformed())?;
            Ok(ReplicaPos { gx, gy })
        })
        .collect()
}

impl FromStr for FractalDescriptor {
    type Err = DescriptorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

/// Writes the descriptor file format; the output parses back to an equal value.
impl fmt::Display for FractalDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name={}", self.name)?;
        writeln!(f, "k={}", self.k())?;
        writeln!(f, "s={}", self.s)?;
        let list: Vec<String> = self
            .replicas
            .iter()
            .map(|p| format!("{},{}", p.gx, p.gy))
            .collect();
        writeln!(f, "replicas={}", list.join(";"))
    }
}
