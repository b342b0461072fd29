//! Cell-state grids in embedded, linear-compact and blocked-compact layouts.
//!
//! Every layout is addressed with embedded coordinates; the grid resolves the
//! storage slot. One byte per cell, `0` dead and `1` alive.
//!
//! Blocked grids pack `k^(r-m)` mini bounding boxes of `rho x rho` cells
//! (`rho = s^m`). Block order follows the compact map of the coarse fractal
//! at level `r - m`; inside a block cells are row-major. Slots inside a block
//! that are holes of the fractal are filler and stay dead.

use crate::descriptor::FractalDescriptor;
use crate::error::{Error, Result};
use crate::geometry::{self, EmbeddedCoord, Layout};
use crate::maps::FractalMap;

pub const DEAD: u8 = 0;
pub const ALIVE: u8 = 1;

/// Upper bound on the bytes a single grid may allocate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryCap(pub u64);

impl MemoryCap {
    pub const DEFAULT: MemoryCap = MemoryCap(2 << 30);

    pub fn check(self, bytes: u128) -> Result<()> {
        if bytes > self.0 as u128 {
            return Err(Error::MemoryCapExceeded { bytes, cap: self.0 });
        }
        Ok(())
    }
}

impl Default for MemoryCap {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone)]
struct Blocks {
    rho: u64,
    /// Compact map of the coarse fractal at level `r - m`.
    coarse: FractalMap,
    /// Fractal membership of each `rho x rho` local slot, row-major.
    local_mask: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Grid {
    map: FractalMap,
    layout: Layout,
    blocks: Option<Blocks>,
    cells: Vec<u8>,
}

/// Stored-cell count of a layout at level `r`.
pub fn memory_footprint(desc: &FractalDescriptor, r: u32, layout: Layout) -> Result<u128> {
    geometry::stored_cells(desc, r, layout)
}

impl Grid {
    /// Allocates an all-dead grid, refusing footprints above `cap`.
    pub fn new(desc: &FractalDescriptor, r: u32, layout: Layout, cap: MemoryCap) -> Result<Self> {
        let stored = geometry::stored_cells(desc, r, layout)?;
        cap.check(stored)?;
        let len = usize::try_from(stored).map_err(|_| Error::MemoryCapExceeded {
            bytes: stored,
            cap: cap.0,
        })?;
        let map = FractalMap::new(desc, r)?;
        let blocks = match layout {
            Layout::Blocked { rho } => {
                let m = geometry::block_exponent(desc, r, rho)?;
                let mini = FractalMap::new(desc, m)?;
                let local_mask = (0..rho * rho)
                    .map(|i| mini.try_nu(EmbeddedCoord::new(i % rho, i / rho)).is_some())
                    .collect();
                Some(Blocks {
                    rho,
                    coarse: FractalMap::new(desc, r - m)?,
                    local_mask,
                })
            }
            _ => None,
        };
        Ok(Self {
            map,
            layout,
            blocks,
            cells: vec![DEAD; len],
        })
    }

    /// A dead grid with the same descriptor, level and layout.
    pub fn empty_like(&self) -> Self {
        Self {
            map: self.map.clone(),
            layout: self.layout,
            blocks: self.blocks.clone(),
            cells: vec![DEAD; self.cells.len()],
        }
    }

    pub fn map(&self) -> &FractalMap {
        &self.map
    }

    pub fn descriptor(&self) -> &FractalDescriptor {
        self.map.descriptor()
    }

    pub fn level(&self) -> u32 {
        self.map.level()
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Stored cells; one byte each.
    pub fn memory_footprint(&self) -> u64 {
        self.cells.len() as u64
    }

    /// Buffer shape as (width, height) in slots.
    pub fn dims(&self) -> (u64, u64) {
        match (&self.layout, &self.blocks) {
            (Layout::Embedded, _) => (self.map.side(), self.map.side()),
            (Layout::Blocked { rho }, Some(b)) => {
                let (w, h) = b.coarse.compact_dims();
                (w * rho, h * rho)
            }
            _ => self.map.compact_dims(),
        }
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [u8] {
        &mut self.cells
    }

    /// Block side and coarse map of a blocked grid.
    pub fn block_geometry(&self) -> Option<(u64, &FractalMap)> {
        self.blocks.as_ref().map(|b| (b.rho, &b.coarse))
    }

    /// Fractal membership of the local slots of a block, row-major.
    pub fn block_mask(&self) -> Option<&[bool]> {
        self.blocks.as_ref().map(|b| b.local_mask.as_slice())
    }

    /// Buffer index of embedded coordinate `e`.
    pub fn storage_index(&self, e: EmbeddedCoord) -> Result<u64> {
        let n = self.map.side();
        if e.x >= n || e.y >= n {
            return Err(Error::EmbeddedOutOfRange { x: e.x, y: e.y, n });
        }
        match self.layout {
            Layout::Embedded => Ok(e.y * n + e.x),
            Layout::Linear => self
                .map
                .try_nu(e)
                .map(|c| self.map.compact_index(c))
                .ok_or(Error::NotInFractal { x: e.x, y: e.y }),
            Layout::Blocked { .. } => {
                let b = self.blocks.as_ref().expect("blocked grid has block tables");
                let (cx, cy) = (e.x / b.rho, e.y / b.rho);
                let coarse = b
                    .coarse
                    .try_nu(EmbeddedCoord::new(cx, cy))
                    .ok_or(Error::CoarseNotInFractal { x: cx, y: cy })?;
                Ok(blocked_index(b, b.coarse.compact_index(coarse), e))
            }
        }
    }

    /// Buffer index of a fractal cell, `None` when `e` is outside the fractal.
    ///
    /// `e` must lie inside the embedded box.
    #[inline]
    pub fn fractal_slot(&self, e: EmbeddedCoord) -> Option<u64> {
        match self.layout {
            Layout::Embedded => self.map.try_nu(e).map(|_| e.y * self.map.side() + e.x),
            Layout::Linear => self.map.try_nu(e).map(|c| self.map.compact_index(c)),
            Layout::Blocked { .. } => {
                let b = self.blocks.as_ref()?;
                let rho = b.rho;
                if !b.local_mask[((e.y % rho) * rho + e.x % rho) as usize] {
                    return None;
                }
                let coarse = b.coarse.try_nu(EmbeddedCoord::new(e.x / rho, e.y / rho))?;
                Some(blocked_index(b, b.coarse.compact_index(coarse), e))
            }
        }
    }

    /// The fractal cell stored at `slot`, `None` for non-fractal or filler slots.
    #[inline]
    pub fn slot_coord(&self, slot: u64) -> Option<EmbeddedCoord> {
        match self.layout {
            Layout::Embedded => {
                let n = self.map.side();
                let e = EmbeddedCoord::new(slot % n, slot / n);
                self.map.try_nu(e).map(|_| e)
            }
            Layout::Linear => Some(self.map.lambda_unchecked(self.map.compact_coord(slot))),
            Layout::Blocked { .. } => {
                let b = self.blocks.as_ref()?;
                let area = b.rho * b.rho;
                let local = slot % area;
                if !b.local_mask[local as usize] {
                    return None;
                }
                let origin = b
                    .coarse
                    .lambda_unchecked(b.coarse.compact_coord(slot / area));
                Some(EmbeddedCoord::new(
                    origin.x * b.rho + local % b.rho,
                    origin.y * b.rho + local / b.rho,
                ))
            }
        }
    }

    pub fn get(&self, e: EmbeddedCoord) -> Result<bool> {
        let i = self.storage_index(e)?;
        Ok(self.cells[i as usize] == ALIVE)
    }

    pub fn set(&mut self, e: EmbeddedCoord, alive: bool) -> Result<()> {
        let i = self.storage_index(e)?;
        self.cells[i as usize] = if alive { ALIVE } else { DEAD };
        Ok(())
    }

    /// Alive fractal cells, in buffer order.
    pub fn alive_cells(&self) -> impl Iterator<Item = EmbeddedCoord> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == ALIVE)
            .filter_map(|(i, _)| self.slot_coord(i as u64))
    }

    pub fn alive_count(&self) -> u64 {
        self.cells.iter().filter(|&&v| v == ALIVE).count() as u64
    }

    /// True when some slot holding no fractal cell is alive.
    pub fn has_alive_filler(&self) -> bool {
        self.cells
            .iter()
            .enumerate()
            .any(|(i, &v)| v == ALIVE && self.slot_coord(i as u64).is_none())
    }
}

#[inline]
fn blocked_index(b: &Blocks, block: u64, e: EmbeddedCoord) -> u64 {
    block * b.rho * b.rho + (e.y % b.rho) * b.rho + e.x % b.rho
}
