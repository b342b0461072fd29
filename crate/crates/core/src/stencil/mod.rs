//! Game-of-Life style stencil iterations on a fractal.
//!
//! Three backends compute the same cellular automaton:
//!
//! * [`Backend::BoundingBox`] stores the full `n x n` box and scans every
//!   position, evaluating the rule only where the fractal has a cell.
//! * [`Backend::Lambda`] stores the full box but visits exactly the `k^r`
//!   fractal cells, obtained by mapping the compact index domain through λ.
//! * [`Backend::Compact`] stores only the fractal (linear or blocked layout)
//!   and resolves each neighbor by λ, an embedded offset, then ν. ν is
//!   evaluated once per tile or block on the coarse map; positions inside a
//!   tile or block come from a small local table. Filler slots are never
//!   read.
//!
//! Neighbors outside the box or outside the fractal count as dead. All reads
//! come from the front buffer, all writes go to disjoint slots of the back
//! buffer, so results do not depend on how the work is partitioned.

mod rule;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU8, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::descriptor::FractalDescriptor;
use crate::error::{Error, Result};
use crate::geometry::{EmbeddedCoord, Layout};
use crate::maps::{CompactCoord, FractalMap};
use crate::storage::{Grid, MemoryCap, ALIVE, DEAD};

pub use rule::{Neighborhood, StencilRule};

/// Slots handed to one worker at a time.
const CHUNK: usize = 1 << 12;
const ABSENT: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    BoundingBox,
    Lambda,
    /// Fully compact storage; `Some(rho)` selects the blocked layout.
    Compact {
        block: Option<u64>,
    },
}

impl Backend {
    pub fn layout(self) -> Layout {
        match self {
            Backend::BoundingBox | Backend::Lambda => Layout::Embedded,
            Backend::Compact { block: None } => Layout::Linear,
            Backend::Compact { block: Some(rho) } => Layout::Blocked { rho },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::BoundingBox => "bb",
            Backend::Lambda => "lambda",
            Backend::Compact { .. } => "compact",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `bb`, `lambda` or `compact` (linear layout).
impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bb" => Ok(Backend::BoundingBox),
            "lambda" => Ok(Backend::Lambda),
            "compact" | "nu" => Ok(Backend::Compact { block: None }),
            other => Err(Error::InvalidBackend(other.to_string())),
        }
    }
}

/// The neighbor of compact cell `c` at `offset`, or `None` when it falls
/// outside the box or on a hole.
pub fn resolve_neighbor(
    map: &FractalMap,
    c: CompactCoord,
    offset: (i64, i64),
) -> Result<Option<CompactCoord>> {
    let e = map.lambda(c)?;
    Ok(e.offset(offset.0, offset.1, map.side())
        .and_then(|n| map.try_nu(n)))
}

/// Per-cell pseudo random source keyed by seed and embedded coordinate.
///
/// SplitMix64 finalizer applied twice; the same cell draws the same value in
/// every layout.
#[inline]
pub fn cell_random(seed: u64, e: EmbeddedCoord) -> u64 {
    splitmix64(seed ^ splitmix64((e.x << 32) ^ e.y))
}

#[inline]
fn splitmix64(v: u64) -> u64 {
    let mut z = v.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn initially_alive(seed: u64, density: f64, e: EmbeddedCoord) -> bool {
    let unit = (cell_random(seed, e) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    unit < density
}

/// Double-buffered simulation state.
#[derive(Debug, Clone)]
pub struct SimState {
    front: Grid,
    back: Grid,
    iteration: u64,
    backend: Backend,
    cap: MemoryCap,
    neighbor_table: Option<NeighborTable>,
}

#[derive(Debug, Clone)]
struct NeighborTable {
    offsets: Vec<(i64, i64)>,
    slots: Vec<u64>,
}

impl SimState {
    /// All-dead state for `backend`.
    pub fn new(desc: &FractalDescriptor, r: u32, backend: Backend, cap: MemoryCap) -> Result<Self> {
        let front = Grid::new(desc, r, backend.layout(), cap)?;
        let back = front.empty_like();
        Ok(Self {
            front,
            back,
            iteration: 0,
            backend,
            cap,
            neighbor_table: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.front
    }

    pub fn grid_mut(&mut self) -> &mut Grid {
        &mut self.front
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Bytes held by both buffers.
    pub fn memory_footprint(&self) -> u64 {
        self.front.memory_footprint() * 2
    }

    /// Order-independent hash of the alive cell set in embedded coordinates.
    pub fn state_hash(&self) -> u64 {
        state_hash(&self.front)
    }
}

/// Order-independent hash of a grid's alive fractal cells.
///
/// A wrapping sum of per-cell hashes, so it is equal across layouts and
/// partitionings whenever the alive sets are equal.
pub fn state_hash(grid: &Grid) -> u64 {
    grid.cells()
        .par_iter()
        .enumerate()
        .filter(|(_, &v)| v == ALIVE)
        .filter_map(|(i, _)| grid.slot_coord(i as u64))
        .map(|e| splitmix64(((e.x << 32) ^ e.y) ^ 0x5eed_f00d))
        .reduce(|| 0, u64::wrapping_add)
}

/// Seeded random initial state; identical across backends for equal inputs.
pub fn init_state(
    desc: &FractalDescriptor,
    r: u32,
    backend: Backend,
    seed: u64,
    density: f64,
    cap: MemoryCap,
) -> Result<SimState> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidDensity(density));
    }
    let mut state = SimState::new(desc, r, backend, cap)?;
    let shape = &state.back;
    state
        .front
        .cells_mut()
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            let base = (chunk * CHUNK) as u64;
            if shape.layout() == Layout::Linear {
                let map = shape.map();
                let mut c = map.compact_coord(base);
                let mut e = map.lambda_unchecked(c);
                for (i, v) in out.iter_mut().enumerate() {
                    if i > 0 {
                        let next = map.compact_coord(base + i as u64);
                        e = map.lambda_from(c, e, next);
                        c = next;
                    }
                    *v = initially_alive(seed, density, e) as u8;
                }
                return;
            }
            for (i, v) in out.iter_mut().enumerate() {
                if let Some(e) = shape.slot_coord(base + i as u64) {
                    if initially_alive(seed, density, e) {
                        *v = ALIVE;
                    }
                }
            }
        });
    Ok(state)
}

/// Step configuration: rule, neighbor offsets and parallelism.
#[derive(Debug, Clone)]
pub struct Engine {
    rule: StencilRule,
    offsets: Vec<(i64, i64)>,
    neighbor_table: bool,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl Engine {
    pub fn new(rule: StencilRule) -> Self {
        Self {
            rule,
            offsets: rule.neighborhood.offsets().to_vec(),
            neighbor_table: false,
            pool: None,
        }
    }

    pub fn rule(&self) -> &StencilRule {
        &self.rule
    }

    /// Overrides the neighbor offsets derived from the rule's neighborhood.
    ///
    /// Used for custom stencils and for fault injection in the oracle tests.
    pub fn with_offsets(mut self, offsets: Vec<(i64, i64)>) -> Self {
        self.offsets = offsets;
        self
    }

    /// Precomputes the compact backend's neighbor slots (`k^r * |offsets|`
    /// entries) instead of mapping on every step.
    pub fn with_neighbor_table(mut self, enabled: bool) -> Self {
        self.neighbor_table = enabled;
        self
    }

    /// Runs steps on a dedicated pool of `workers` threads.
    pub fn with_workers(mut self, workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))?;
        self.pool = Some(Arc::new(pool));
        Ok(self)
    }

    /// Advances `state` by one iteration.
    pub fn step(&self, state: &mut SimState) -> Result<()> {
        if self.neighbor_table && matches!(state.backend, Backend::Compact { .. }) {
            self.ensure_table(state)?;
        }
        match &self.pool {
            Some(pool) => pool.install(|| self.step_inner(state)),
            None => self.step_inner(state),
        }
        std::mem::swap(&mut state.front, &mut state.back);
        state.iteration += 1;
        Ok(())
    }

    fn ensure_table(&self, state: &mut SimState) -> Result<()> {
        if let Some(t) = &state.neighbor_table {
            if t.offsets == self.offsets {
                return Ok(());
            }
        }
        let grid = &state.front;
        let slots = grid.memory_footprint() as u128;
        state
            .cap
            .check(slots * self.offsets.len() as u128 * std::mem::size_of::<u64>() as u128)?;
        let n = grid.map().side();
        let deg = self.offsets.len();
        let mut table = vec![ABSENT; slots as usize * deg];
        let mut build = || {
            table
                .par_chunks_mut(deg.max(1))
                .enumerate()
                .for_each(|(slot, row)| {
                    if let Some(e) = grid.slot_coord(slot as u64) {
                        for (entry, &(dx, dy)) in row.iter_mut().zip(&self.offsets) {
                            *entry = e
                                .offset(dx, dy, n)
                                .and_then(|nb| grid.fractal_slot(nb))
                                .unwrap_or(ABSENT);
                        }
                    }
                })
        };
        match &self.pool {
            Some(pool) => pool.install(build),
            None => build(),
        }
        state.neighbor_table = Some(NeighborTable {
            offsets: self.offsets.clone(),
            slots: table,
        });
        Ok(())
    }

    fn step_inner(&self, state: &mut SimState) {
        let front = &state.front;
        let back = &mut state.back;
        match state.backend {
            Backend::BoundingBox => self.step_bounding_box(front, back),
            Backend::Lambda => self.step_lambda(front, back),
            Backend::Compact { .. } => match &state.neighbor_table {
                Some(t) if self.neighbor_table && t.offsets == self.offsets => {
                    self.step_compact_table(front, back, &t.slots)
                }
                _ => self.step_compact(front, back),
            },
        }
    }

    /// Scans the whole box row by row, reading embedded adjacency directly.
    fn step_bounding_box(&self, front: &Grid, back: &mut Grid) {
        let map = front.map();
        let n = map.side();
        let cur = front.cells();
        back.cells_mut()
            .par_chunks_mut(n as usize)
            .enumerate()
            .for_each(|(y, row)| {
                let y = y as u64;
                for (x, out) in row.iter_mut().enumerate() {
                    let e = EmbeddedCoord::new(x as u64, y);
                    if map.try_nu(e).is_none() {
                        *out = DEAD;
                        continue;
                    }
                    let count = self
                        .offsets
                        .iter()
                        .filter_map(|&(dx, dy)| e.offset(dx, dy, n))
                        .filter(|nb| cur[(nb.y * n + nb.x) as usize] == ALIVE)
                        .count() as u32;
                    let alive = cur[(y * n) as usize + x] == ALIVE;
                    *out = self.rule.next(alive, count) as u8;
                }
            });
    }

    /// Visits the `k^r` fractal cells via λ; storage stays embedded.
    fn step_lambda(&self, front: &Grid, back: &mut Grid) {
        let map = front.map();
        let n = map.side();
        let cur = front.cells();
        let out = as_atomic(back.cells_mut());
        (0..map.cell_count() as usize)
            .into_par_iter()
            .with_min_len(CHUNK)
            .for_each(|i| {
                let i = i as u64;
                let e = map.lambda_unchecked(map.compact_coord(i));
                let count = self
                    .offsets
                    .iter()
                    .filter_map(|&(dx, dy)| e.offset(dx, dy, n))
                    .filter(|nb| cur[(nb.y * n + nb.x) as usize] == ALIVE)
                    .count() as u32;
                let idx = (e.y * n + e.x) as usize;
                let next = self.rule.next(cur[idx] == ALIVE, count) as u8;
                out[idx].store(next, Ordering::Relaxed);
            });
    }

    /// Visits compact slots; neighbors are resolved through λ and ν.
    fn step_compact(&self, front: &Grid, back: &mut Grid) {
        match front.layout() {
            Layout::Linear => self.step_compact_linear(front, back),
            Layout::Blocked { .. } => self.step_compact_blocked(front, back),
            Layout::Embedded => self.step_compact_generic(front, back),
        }
    }

    fn step_compact_generic(&self, front: &Grid, back: &mut Grid) {
        let n = front.map().side();
        let cur = front.cells();
        back.cells_mut()
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                let base = (chunk * CHUNK) as u64;
                for (i, v) in out.iter_mut().enumerate() {
                    let slot = base + i as u64;
                    let Some(e) = front.slot_coord(slot) else {
                        *v = DEAD;
                        continue;
                    };
                    let count = self
                        .offsets
                        .iter()
                        .filter_map(|&(dx, dy)| e.offset(dx, dy, n))
                        .filter_map(|nb| front.fractal_slot(nb))
                        .filter(|&s| cur[s as usize] == ALIVE)
                        .count() as u32;
                    *v = self.rule.next(cur[slot as usize] == ALIVE, count) as u8;
                }
            });
    }

    /// Linear layout, processed in tiles.
    ///
    /// For even `m`, the cells of one level-`m` sub-fractal occupy an aligned
    /// `k^(m/2) x k^(m/2)` tile of the compact rectangle, and tile positions
    /// follow the coarse level-`(r - m)` map. Neighbor tiles are found with
    /// the coarse ν once per tile; within a tile a precomputed local table
    /// gives each neighbor's tile direction and local compact coordinate.
    fn step_compact_linear(&self, front: &Grid, back: &mut Grid) {
        let map = front.map();
        let desc = map.descriptor();
        let tiles = TileTable::new(desc, map.level(), &self.offsets);
        let coarse =
            FractalMap::new(desc, map.level() - tiles.m).expect("coarse level of a valid map");
        let (w, _) = map.compact_dims();
        let (coarse_w, _) = coarse.compact_dims();
        let coarse_side = coarse.side();
        let cur = front.cells();
        let (t, deg) = (tiles.side as usize, self.offsets.len());
        let span = tiles.span;
        let reach = tiles.reach;
        back.cells_mut()
            .par_chunks_mut(w as usize * t)
            .enumerate()
            .for_each_init(
                || vec![ABSENT; span * span],
                |origins, (ty, out)| {
                    for tx in 0..coarse_w {
                        let cc = CompactCoord::new(tx, ty as u64);
                        let co = coarse.lambda_unchecked(cc);
                        for by in -reach..=reach {
                            for bx in -reach..=reach {
                                let idx = ((by + reach) as usize) * span + (bx + reach) as usize;
                                origins[idx] = co
                                    .offset(bx, by, coarse_side)
                                    .and_then(|nb| coarse.nu_from(co, cc, nb))
                                    .map_or(ABSENT, |c| c.y * t as u64 * w + c.x * t as u64);
                            }
                        }
                        let own = origins[(reach as usize) * span + reach as usize];
                        for local in 0..t * t {
                            let (lx, ly) = (local % t, local / t);
                            let slot = own + ly as u64 * w + lx as u64;
                            let mut count = 0;
                            for entry in &tiles.entries[local * deg..(local + 1) * deg] {
                                let Some((dir, nx, ny)) = entry else { continue };
                                let origin = origins[*dir as usize];
                                if origin != ABSENT {
                                    let nb = origin + *ny as u64 * w + *nx as u64;
                                    count += (cur[nb as usize] == ALIVE) as u32;
                                }
                            }
                            let alive = cur[slot as usize] == ALIVE;
                            out[ly * w as usize + tx as usize * t + lx] =
                                self.rule.next(alive, count) as u8;
                        }
                    }
                },
            );
    }

    /// Blocked layout: neighbors inside a block are plain offsets; those in
    /// adjacent blocks go through the coarse ν once per block.
    fn step_compact_blocked(&self, front: &Grid, back: &mut Grid) {
        let (rho, coarse) = front.block_geometry().expect("blocked grid");
        let mask = front.block_mask().expect("blocked grid");
        let cur = front.cells();
        let area = (rho * rho) as usize;
        let reach = self
            .offsets
            .iter()
            .map(|&(dx, dy)| dx.unsigned_abs().max(dy.unsigned_abs()))
            .max()
            .unwrap_or(0)
            .div_ceil(rho) as i64;
        let span = (2 * reach + 1) as usize;
        let coarse_side = coarse.side();
        back.cells_mut()
            .par_chunks_mut(area)
            .enumerate()
            .for_each_init(
                || vec![ABSENT; span * span],
                |bases, (block, out)| {
                    let cc = coarse.compact_coord(block as u64);
                    let origin = coarse.lambda_unchecked(cc);
                    for by in -reach..=reach {
                        for bx in -reach..=reach {
                            let idx = ((by + reach) as usize) * span + (bx + reach) as usize;
                            bases[idx] = origin
                                .offset(bx, by, coarse_side)
                                .and_then(|nb| coarse.nu_from(origin, cc, nb))
                                .map_or(ABSENT, |c| coarse.compact_index(c) * area as u64);
                        }
                    }
                    let own = block * area;
                    let rho = rho as i64;
                    for (local, v) in out.iter_mut().enumerate() {
                        if !mask[local] {
                            *v = DEAD;
                            continue;
                        }
                        let (lx, ly) = ((local as i64) % rho, (local as i64) / rho);
                        let mut count = 0;
                        for &(dx, dy) in &self.offsets {
                            let (tx, ty) = (lx + dx, ly + dy);
                            let (bx, by) = (tx.div_euclid(rho), ty.div_euclid(rho));
                            let base =
                                bases[((by + reach) as usize) * span + (bx + reach) as usize];
                            if base == ABSENT {
                                continue;
                            }
                            let local = (ty.rem_euclid(rho) * rho + tx.rem_euclid(rho)) as usize;
                            if mask[local] {
                                count += (cur[base as usize + local] == ALIVE) as u32;
                            }
                        }
                        *v = self.rule.next(cur[own + local] == ALIVE, count) as u8;
                    }
                },
            );
    }

    fn step_compact_table(&self, front: &Grid, back: &mut Grid, table: &[u64]) {
        let cur = front.cells();
        let deg = self.offsets.len();
        back.cells_mut()
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                let base = chunk * CHUNK;
                for (i, v) in out.iter_mut().enumerate() {
                    let slot = base + i;
                    if front.slot_coord(slot as u64).is_none() {
                        *v = DEAD;
                        continue;
                    }
                    let count = table[slot * deg..(slot + 1) * deg]
                        .iter()
                        .filter(|&&s| s != ABSENT && cur[s as usize] == ALIVE)
                        .count() as u32;
                    *v = self.rule.next(cur[slot] == ALIVE, count) as u8;
                }
            });
    }
}

/// Largest number of cells in one tile of the linear step.
const TILE_MAX_CELLS: u64 = 4096;

/// Neighbor lookup within one tile of the linear layout.
struct TileTable {
    /// Sub-fractal level of a tile; even.
    m: u32,
    /// Tile side in compact slots, `k^(m/2)`.
    side: u64,
    /// How many tiles away a neighbor can be.
    reach: i64,
    span: usize,
    /// Per local slot and offset: (tile direction, local x, local y).
    entries: Vec<Option<(u32, u32, u32)>>,
}

impl TileTable {
    fn new(desc: &FractalDescriptor, r: u32, offsets: &[(i64, i64)]) -> Self {
        let k = desc.k();
        let mut m = r - r % 2;
        while m > 0 && k.checked_pow(m).is_none_or(|c| c > TILE_MAX_CELLS) {
            m -= 2;
        }
        let local = FractalMap::new(desc, m).expect("tile level below a valid level");
        let rho = local.side() as i64;
        let side = k.pow(m / 2);
        let reach = offsets
            .iter()
            .map(|&(dx, dy)| dx.unsigned_abs().max(dy.unsigned_abs()))
            .max()
            .unwrap_or(0)
            .div_ceil(rho as u64) as i64;
        let span = (2 * reach + 1) as usize;
        let mut entries = Vec::with_capacity((side * side) as usize * offsets.len());
        for i in 0..side * side {
            let le = local.lambda_unchecked(local.compact_coord(i));
            for &(dx, dy) in offsets {
                let (x, y) = (le.x as i64 + dx, le.y as i64 + dy);
                let (bx, by) = (x.div_euclid(rho), y.div_euclid(rho));
                let u = EmbeddedCoord::new(x.rem_euclid(rho) as u64, y.rem_euclid(rho) as u64);
                let dir = ((by + reach) as usize * span + (bx + reach) as usize) as u32;
                entries.push(local.try_nu(u).map(|c| (dir, c.x as u32, c.y as u32)));
            }
        }
        Self {
            m,
            side,
            reach,
            span,
            entries,
        }
    }
}

fn as_atomic(cells: &mut [u8]) -> &[AtomicU8] {
    // SAFETY: AtomicU8 has the size and alignment of u8, and the exclusive
    // borrow rules out any non-atomic access for the lifetime of the view.
    unsafe { &*(cells as *mut [u8] as *const [AtomicU8]) }
}

/// Advances `state` one iteration with default engine settings.
pub fn step(state: &mut SimState, rule: &StencilRule) -> Result<()> {
    Engine::new(*rule).step(state)
}

/// Inputs of [`run_simulation`].
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub backend: Backend,
    pub rule: StencilRule,
    pub steps: u64,
    pub seed: u64,
    pub density: f64,
    pub workers: Option<usize>,
    pub neighbor_table: bool,
    pub cap: MemoryCap,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Compact { block: None },
            rule: StencilRule::conway(),
            steps: 0,
            seed: 0,
            density: 0.5,
            workers: None,
            neighbor_table: false,
            cap: MemoryCap::DEFAULT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub state: SimState,
    pub hash: u64,
    pub alive: u64,
    /// Wall time of each iteration, monotonic clock.
    pub step_times: Vec<Duration>,
}

impl SimOutcome {
    pub fn total_time(&self) -> Duration {
        self.step_times.iter().sum()
    }
}

pub fn run_simulation(desc: &FractalDescriptor, r: u32, config: &SimConfig) -> Result<SimOutcome> {
    let mut state = init_state(
        desc,
        r,
        config.backend,
        config.seed,
        config.density,
        config.cap,
    )?;
    let mut engine = Engine::new(config.rule).with_neighbor_table(config.neighbor_table);
    if let Some(w) = config.workers {
        engine = engine.with_workers(w)?;
    }
    let mut step_times = Vec::with_capacity(config.steps as usize);
    for _ in 0..config.steps {
        let t = Instant::now();
        engine.step(&mut state)?;
        step_times.push(t.elapsed());
    }
    Ok(SimOutcome {
        hash: state.state_hash(),
        alive: state.grid().alive_count(),
        state,
        step_times,
    })
}
