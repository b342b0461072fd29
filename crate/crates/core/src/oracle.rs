//! Brute-force constructions that check the closed-form maps and the stencil
//! backends.
//!
//! The unfolding oracle builds the compact layout level by level from the
//! replica table and the `tau` strides alone; it never calls `nu` or
//! `lambda`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::descriptor::FractalDescriptor;
use crate::error::{Error, Result};
use crate::geometry::{self, EmbeddedCoord};
use crate::maps::{
    replica_id, tau, CompactCoord, FractalMap, Matrix, MmaKernel, ScalarMma, MIN_FRAGMENT_SIDE,
};
use crate::stencil::{init_state, Backend, Engine, SimState, StencilRule};
use crate::storage::MemoryCap;

/// Largest fractal the oracles will enumerate.
pub const ORACLE_MAX_CELLS: u64 = 1 << 20;

/// Compact layout built by direct unfolding.
///
/// Level `mu + 1` is `k` translated copies of level `mu`: replica `i` moves
/// embedded cells by `replicas[i] * s^mu` and compact cells by `i * tau(k, mu)`.
pub fn unfold_compact_oracle(
    desc: &FractalDescriptor,
    r: u32,
) -> Result<BTreeMap<EmbeddedCoord, CompactCoord>> {
    check_size(desc, r)?;
    let mut layout = vec![(EmbeddedCoord::new(0, 0), CompactCoord::new(0, 0))];
    let mut scale = 1u64;
    for mu in 0..r {
        let (tx, ty) = tau(desc.k(), mu);
        let mut next = Vec::with_capacity(layout.len() * desc.k() as usize);
        for (id, pos) in desc.replicas().iter().enumerate() {
            let id = id as u64;
            for &(e, c) in &layout {
                next.push((
                    EmbeddedCoord::new(e.x + pos.gx * scale, e.y + pos.gy * scale),
                    CompactCoord::new(c.x + id * tx, c.y + id * ty),
                ));
            }
        }
        layout = next;
        scale *= desc.s();
    }
    Ok(layout.into_iter().collect())
}

fn check_size(desc: &FractalDescriptor, r: u32) -> Result<u64> {
    let cells = geometry::cell_count(desc, r)?;
    if cells > ORACLE_MAX_CELLS {
        return Err(Error::OracleTooLarge {
            cells,
            limit: ORACLE_MAX_CELLS,
        });
    }
    Ok(cells)
}

/// Replica ID as literally printed for the triangle: `bit_mu(x) + bit_mu(y)`.
///
/// It gives the right and bottom replicas the same ID, so it is not a valid
/// numbering; kept to demonstrate the collision it causes.
pub fn literal_triangle_replica_id(x: u64, y: u64, mu: u32) -> Option<u32> {
    Some((((x >> mu) & 1) + ((y >> mu) & 1)) as u32)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapViolation {
    /// ν disagrees with the unfolding oracle.
    OracleMismatch {
        cell: EmbeddedCoord,
        expected: CompactCoord,
        got: Option<CompactCoord>,
    },
    /// ν lands outside the compact rectangle.
    OutsideRectangle {
        cell: EmbeddedCoord,
        compact: CompactCoord,
    },
    /// Two cells share a compact coordinate.
    Collision {
        compact: CompactCoord,
        first: EmbeddedCoord,
        second: EmbeddedCoord,
    },
    /// λ(ν(e)) != e.
    EmbeddedRoundTrip {
        cell: EmbeddedCoord,
        back: EmbeddedCoord,
    },
    /// ν(λ(c)) != c.
    CompactRoundTrip {
        compact: CompactCoord,
        back: Option<CompactCoord>,
    },
    /// The matrix route disagrees with the scalar route.
    MmaMismatch {
        cell: EmbeddedCoord,
        scalar: Option<CompactCoord>,
        mma: Option<CompactCoord>,
    },
}

impl fmt::Display for MapViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |c: &Option<CompactCoord>| c.map_or("none".to_string(), |c| c.to_string());
        match self {
            MapViolation::OracleMismatch {
                cell,
                expected,
                got,
            } => write!(
                f,
                "oracle mismatch at {cell}: expected {expected}, nu gave {}",
                opt(got)
            ),
            MapViolation::OutsideRectangle { cell, compact } => {
                write!(
                    f,
                    "nu({cell}) = {compact} lies outside the compact rectangle"
                )
            }
            MapViolation::Collision {
                compact,
                first,
                second,
            } => write!(f, "collision at {compact}: {first} and {second}"),
            MapViolation::EmbeddedRoundTrip { cell, back } => {
                write!(f, "lambda(nu({cell})) = {back}")
            }
            MapViolation::CompactRoundTrip { compact, back } => {
                write!(f, "nu(lambda({compact})) = {}", opt(back))
            }
            MapViolation::MmaMismatch { cell, scalar, mma } => write!(
                f,
                "mma mismatch at {cell}: scalar {}, mma {}",
                opt(scalar),
                opt(mma)
            ),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MapReport {
    pub cells_checked: u64,
    pub compact_checked: u64,
    pub violations: Vec<MapViolation>,
}

impl MapReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for MapReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} cells, {} compact coordinates, {} violations",
            if self.passed() { "pass" } else { "FAIL" },
            self.cells_checked,
            self.compact_checked,
            self.violations.len()
        )?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Checks ν against the oracle, bijectivity, both round trips and the MMA route.
pub fn verify_maps(desc: &FractalDescriptor, r: u32) -> Result<MapReport> {
    verify_maps_with(desc, r, |x, y, mu| {
        replica_id(desc, EmbeddedCoord::new(x, y), mu).ok()
    })
}

/// [`verify_maps`] with a caller-supplied replica-ID function.
pub fn verify_maps_with<H>(desc: &FractalDescriptor, r: u32, h: H) -> Result<MapReport>
where
    H: Fn(u64, u64, u32) -> Option<u32>,
{
    check_size(desc, r)?;
    let map = FractalMap::new(desc, r)?;
    let oracle = unfold_compact_oracle(desc, r)?;
    let (w, h_dim) = map.compact_dims();
    let mut report = MapReport::default();
    let mut seen: HashMap<CompactCoord, EmbeddedCoord> = HashMap::with_capacity(oracle.len());
    let tau_rows: Vec<(u64, u64)> = map.tau_table().collect();
    let side = (r as usize).max(MIN_FRAGMENT_SIDE);
    let mut a = Matrix::zeros(side, side);
    for (mu, &(tx, ty)) in tau_rows.iter().enumerate() {
        a.set(0, mu, tx);
        a.set(1, mu, ty);
    }

    for (&cell, &expected) in &oracle {
        report.cells_checked += 1;
        let got = map.nu_with(cell, &h);
        if got != Some(expected) {
            report.violations.push(MapViolation::OracleMismatch {
                cell,
                expected,
                got,
            });
        }
        let mma = mma_nu(&a, cell, r, side, &h, desc.k());
        if mma != got {
            report.violations.push(MapViolation::MmaMismatch {
                cell,
                scalar: got,
                mma,
            });
        }
        let Some(c) = got else { continue };
        if c.x >= w || c.y >= h_dim {
            report
                .violations
                .push(MapViolation::OutsideRectangle { cell, compact: c });
            continue;
        }
        if let Some(&first) = seen.get(&c) {
            report.violations.push(MapViolation::Collision {
                compact: c,
                first,
                second: cell,
            });
        } else {
            seen.insert(c, cell);
        }
        let back = map.lambda_unchecked(c);
        if back != cell {
            report
                .violations
                .push(MapViolation::EmbeddedRoundTrip { cell, back });
        }
    }

    for cy in 0..h_dim {
        for cx in 0..w {
            let compact = CompactCoord::new(cx, cy);
            report.compact_checked += 1;
            let e = map.lambda_unchecked(compact);
            let back = map.nu_with(e, &h);
            if back != Some(compact) {
                report
                    .violations
                    .push(MapViolation::CompactRoundTrip { compact, back });
            }
        }
    }
    Ok(report)
}

fn mma_nu<H>(
    a: &Matrix,
    e: EmbeddedCoord,
    r: u32,
    side: usize,
    h: &H,
    k: u64,
) -> Option<CompactCoord>
where
    H: Fn(u64, u64, u32) -> Option<u32>,
{
    let mut b = Matrix::zeros(side, side);
    for mu in 0..r {
        let id = h(e.x, e.y, mu)?;
        if id as u64 >= k {
            return None;
        }
        b.set(mu as usize, 0, id as u64);
    }
    let d = ScalarMma.mma(a, &b, &Matrix::zeros(side, side)).ok()?;
    Some(CompactCoord::new(d.get(0, 0), d.get(1, 0)))
}

/// First point where the backends disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub iteration: u64,
    pub cell: EmbeddedCoord,
    /// `(backend label, alive)` for every backend at that cell.
    pub states: Vec<(String, bool)>,
}

#[derive(Debug, Clone)]
pub struct StencilReport {
    pub steps_run: u64,
    pub cells: u64,
    pub backends: Vec<String>,
    pub divergence: Option<Divergence>,
}

impl StencilReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

impl fmt::Display for StencilReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.divergence {
            None => writeln!(
                f,
                "pass: {} backends ({}) agree on {} cells over {} steps",
                self.backends.len(),
                self.backends.join(", "),
                self.cells,
                self.steps_run
            ),
            Some(d) => {
                let states: Vec<String> = d
                    .states
                    .iter()
                    .map(|(b, alive)| format!("{b}={}", *alive as u8))
                    .collect();
                writeln!(
                    f,
                    "FAIL: divergence at iteration {} cell {}: {}",
                    d.iteration,
                    d.cell,
                    states.join(" ")
                )
            }
        }
    }
}

/// One participant of a lockstep comparison.
#[derive(Debug, Clone)]
pub struct Participant {
    pub label: String,
    pub backend: Backend,
    pub engine: Engine,
}

impl Participant {
    pub fn new(label: impl Into<String>, backend: Backend, engine: Engine) -> Self {
        Self {
            label: label.into(),
            backend,
            engine,
        }
    }
}

/// The standard participants: bounding box, λ, linear compact and, when the
/// level allows it, blocked compact with `rho = s`.
pub fn standard_participants(
    desc: &FractalDescriptor,
    r: u32,
    rule: StencilRule,
) -> Vec<Participant> {
    let engine = Engine::new(rule);
    let mut list = vec![
        Participant::new("bb", Backend::BoundingBox, engine.clone()),
        Participant::new("lambda", Backend::Lambda, engine.clone()),
        Participant::new("compact", Backend::Compact { block: None }, engine.clone()),
    ];
    if r >= 1 {
        let rho = desc.s();
        list.push(Participant::new(
            format!("compact-blocked{rho}"),
            Backend::Compact { block: Some(rho) },
            engine,
        ));
    }
    list
}

/// Runs the standard backends in lockstep and reports the first divergence.
pub fn verify_stencil(
    desc: &FractalDescriptor,
    r: u32,
    rule: StencilRule,
    seed: u64,
    density: f64,
    steps: u64,
) -> Result<StencilReport> {
    let participants = standard_participants(desc, r, rule);
    verify_stencil_with(desc, r, &participants, seed, density, steps)
}

/// Lockstep comparison over arbitrary participants; the first one is the
/// reference.
pub fn verify_stencil_with(
    desc: &FractalDescriptor,
    r: u32,
    participants: &[Participant],
    seed: u64,
    density: f64,
    steps: u64,
) -> Result<StencilReport> {
    check_size(desc, r)?;
    let cells = geometry::enumerate_cells(desc, r)?;
    let mut states: Vec<SimState> = participants
        .iter()
        .map(|p| init_state(desc, r, p.backend, seed, density, MemoryCap::DEFAULT))
        .collect::<Result<_>>()?;
    let labels: Vec<String> = participants.iter().map(|p| p.label.clone()).collect();
    let mut report = StencilReport {
        steps_run: 0,
        cells: cells.len() as u64,
        backends: labels.clone(),
        divergence: None,
    };
    for iteration in 0..=steps {
        if iteration > 0 {
            for (state, p) in states.iter_mut().zip(participants) {
                p.engine.step(state)?;
            }
            report.steps_run = iteration;
        }
        if let Some(d) = first_divergence(&states, &labels, &cells, iteration)? {
            report.divergence = Some(d);
            break;
        }
    }
    Ok(report)
}

fn first_divergence(
    states: &[SimState],
    labels: &[String],
    cells: &[EmbeddedCoord],
    iteration: u64,
) -> Result<Option<Divergence>> {
    let Some((reference, rest)) = states.split_first() else {
        return Ok(None);
    };
    for &cell in cells {
        let want = reference.grid().get(cell)?;
        let mut differs = false;
        for s in rest {
            if s.grid().get(cell)? != want {
                differs = true;
            }
        }
        if differs {
            let states = states
                .iter()
                .zip(labels)
                .map(|(s, l)| Ok((l.clone(), s.grid().get(cell)?)))
                .collect::<Result<_>>()?;
            return Ok(Some(Divergence {
                iteration,
                cell,
                states,
            }));
        }
    }
    for s in states {
        if s.grid().has_alive_filler() {
            return Err(Error::GridMismatch(format!(
                "{} backend has an alive slot outside the fractal",
                s.backend()
            )));
        }
    }
    Ok(None)
}
