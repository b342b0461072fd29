//! Timing harness comparing the stencil backends.
//!
//! Each configuration gets one warm-up step, then `reps` timed runs of
//! `iters` steps. Mean and standard deviation are taken over the per-run
//! ms/iteration figures. Speedup is the bounding-box mean divided by the
//! row's mean at the same fractal and level. Configurations whose storage
//! exceeds the memory cap are kept as rows marked infeasible.

use std::fmt;
use std::io::{Read, Write};
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::time::Instant;

use crate::descriptor::FractalDescriptor;
use crate::error::{Error, Result};
use crate::geometry::{self, Layout};
use crate::stencil::{init_state, Backend, Engine, StencilRule};
use crate::storage::MemoryCap;

pub const CSV_HEADER: [&str; 11] = [
    "fractal",
    "level",
    "n",
    "backend",
    "block_size",
    "reps",
    "iters",
    "mean_ms",
    "stddev_ms",
    "mem_cells",
    "speedup_vs_bb",
];

const INFEASIBLE: &str = "infeasible";
const NOT_AVAILABLE: &str = "n/a";
const NO_BLOCK: &str = "-";

/// Backend family benchmarked; compact expands into the linear layout plus
/// one blocked row per block size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchBackend {
    BoundingBox,
    Lambda,
    Compact,
}

impl BenchBackend {
    pub const ALL: [BenchBackend; 3] = [
        BenchBackend::BoundingBox,
        BenchBackend::Lambda,
        BenchBackend::Compact,
    ];
}

impl FromStr for BenchBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Backend>()? {
            Backend::BoundingBox => Ok(BenchBackend::BoundingBox),
            Backend::Lambda => Ok(BenchBackend::Lambda),
            Backend::Compact { .. } => Ok(BenchBackend::Compact),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub levels: RangeInclusive<u32>,
    pub backends: Vec<BenchBackend>,
    pub block_sizes: Vec<u64>,
    pub reps: u32,
    pub iters: u32,
    pub cap: MemoryCap,
    pub workers: Option<usize>,
    pub rule: StencilRule,
    pub seed: u64,
    pub density: f64,
}

impl BenchConfig {
    /// Short sweep that finishes in minutes on a desktop CPU.
    pub fn desk() -> Self {
        Self {
            levels: 1..=10,
            backends: BenchBackend::ALL.to_vec(),
            block_sizes: vec![2, 4, 8, 16, 32],
            reps: 5,
            iters: 50,
            cap: MemoryCap::DEFAULT,
            workers: None,
            rule: StencilRule::conway(),
            seed: 42,
            density: 0.5,
        }
    }

    /// 100 runs of 1000 iterations over levels 1 to 16.
    pub fn paper() -> Self {
        Self {
            levels: 1..=16,
            reps: 100,
            iters: 1000,
            ..Self::desk()
        }
    }
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self::desk()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub mean_ms: f64,
    pub stddev_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub fractal: String,
    pub level: u32,
    pub n: u64,
    pub backend: String,
    pub block_size: Option<u64>,
    pub reps: u32,
    pub iters: u32,
    /// `None` when the configuration exceeded the memory cap.
    pub timing: Option<Timing>,
    pub mem_cells: u128,
    pub speedup_vs_bb: Option<f64>,
}

impl BenchRecord {
    pub fn is_feasible(&self) -> bool {
        self.timing.is_some()
    }

    fn to_row(&self) -> [String; 11] {
        let opt = |v: Option<f64>, missing: &str, prec: usize| {
            v.map_or(missing.to_string(), |v| format!("{v:.prec$}"))
        };
        [
            self.fractal.clone(),
            self.level.to_string(),
            self.n.to_string(),
            self.backend.clone(),
            self.block_size
                .map_or(NO_BLOCK.to_string(), |b| b.to_string()),
            self.reps.to_string(),
            self.iters.to_string(),
            opt(self.timing.map(|t| t.mean_ms), INFEASIBLE, 6),
            opt(self.timing.map(|t| t.stddev_ms), INFEASIBLE, 6),
            self.mem_cells.to_string(),
            opt(self.speedup_vs_bb, NOT_AVAILABLE, 4),
        ]
    }

    fn from_row(row: &csv::StringRecord) -> Result<Self> {
        let bad = |field: &str, v: &str| Error::Csv(format!("invalid {field} {v:?}"));
        if row.len() != CSV_HEADER.len() {
            return Err(Error::Csv(format!(
                "expected {} fields, found {}",
                CSV_HEADER.len(),
                row.len()
            )));
        }
        fn num<T: FromStr>(v: &str) -> Option<T> {
            v.parse().ok()
        }
        let field = |i: usize| &row[i];
        let float = |i: usize, missing: &str| -> Result<Option<f64>> {
            let v = field(i);
            if v == missing {
                return Ok(None);
            }
            num::<f64>(v)
                .filter(|f| f.is_finite())
                .map(Some)
                .ok_or_else(|| bad(CSV_HEADER[i], v))
        };
        let mean = float(7, INFEASIBLE)?;
        let stddev = float(8, INFEASIBLE)?;
        let timing = match (mean, stddev) {
            (Some(mean_ms), Some(stddev_ms)) => Some(Timing { mean_ms, stddev_ms }),
            (None, None) => None,
            _ => {
                return Err(Error::Csv(
                    "mean_ms and stddev_ms disagree on feasibility".into(),
                ))
            }
        };
        Ok(Self {
            fractal: field(0).to_string(),
            level: num(field(1)).ok_or_else(|| bad("level", field(1)))?,
            n: num(field(2)).ok_or_else(|| bad("n", field(2)))?,
            backend: field(3).to_string(),
            block_size: match field(4) {
                NO_BLOCK => None,
                v => Some(num(v).ok_or_else(|| bad("block_size", v))?),
            },
            reps: num(field(5)).ok_or_else(|| bad("reps", field(5)))?,
            iters: num(field(6)).ok_or_else(|| bad("iters", field(6)))?,
            timing,
            mem_cells: num(field(9)).ok_or_else(|| bad("mem_cells", field(9)))?,
            speedup_vs_bb: float(10, NOT_AVAILABLE)?,
        })
    }
}

impl fmt::Display for BenchRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_row().join(","))
    }
}

/// Runs every configuration of `config` sequentially.
pub fn run_bench(desc: &FractalDescriptor, config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    run_bench_with(desc, config, |_| {})
}

/// [`run_bench`] that reports each record as soon as it is complete.
pub fn run_bench_with(
    desc: &FractalDescriptor,
    config: &BenchConfig,
    mut progress: impl FnMut(&BenchRecord),
) -> Result<Vec<BenchRecord>> {
    if config.reps == 0 || config.iters == 0 {
        return Err(Error::Csv("reps and iters must be positive".into()));
    }
    let mut engine = Engine::new(config.rule);
    if let Some(w) = config.workers {
        engine = engine.with_workers(w)?;
    }
    let mut records = Vec::new();
    for level in config.levels.clone() {
        let n = geometry::side(desc, level)?;
        let mut bb_mean = None;
        let start = records.len();
        for backend in expand_backends(desc, level, config) {
            let layout = backend.layout();
            let mem_cells = geometry::stored_cells(desc, level, layout)?;
            let timing = measure(desc, level, backend, &engine, config)?;
            if backend == Backend::BoundingBox {
                bb_mean = timing.map(|t| t.mean_ms);
            }
            let record = BenchRecord {
                fractal: desc.name().to_string(),
                level,
                n,
                backend: backend.name().to_string(),
                block_size: match layout {
                    Layout::Blocked { rho } => Some(rho),
                    _ => None,
                },
                reps: config.reps,
                iters: config.iters,
                timing,
                mem_cells,
                speedup_vs_bb: None,
            };
            records.push(record);
        }
        for record in &mut records[start..] {
            record.speedup_vs_bb = match (bb_mean, record.timing) {
                (Some(reference), Some(t)) if t.mean_ms > 0.0 => Some(reference / t.mean_ms),
                (Some(_), Some(_)) => Some(1.0),
                _ => None,
            };
            progress(record);
        }
    }
    Ok(records)
}

/// Concrete backends for one level: block sizes that are not a power of
/// `s` within the domain are left out.
fn expand_backends(desc: &FractalDescriptor, level: u32, config: &BenchConfig) -> Vec<Backend> {
    let mut out = Vec::new();
    for b in &config.backends {
        match b {
            BenchBackend::BoundingBox => out.push(Backend::BoundingBox),
            BenchBackend::Lambda => out.push(Backend::Lambda),
            BenchBackend::Compact => {
                out.push(Backend::Compact { block: None });
                for &rho in &config.block_sizes {
                    if geometry::block_exponent(desc, level, rho).is_ok() {
                        out.push(Backend::Compact { block: Some(rho) });
                    }
                }
            }
        }
    }
    out
}

fn measure(
    desc: &FractalDescriptor,
    level: u32,
    backend: Backend,
    engine: &Engine,
    config: &BenchConfig,
) -> Result<Option<Timing>> {
    let mut state = match init_state(
        desc,
        level,
        backend,
        config.seed,
        config.density,
        config.cap,
    ) {
        Ok(s) => s,
        Err(Error::MemoryCapExceeded { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    engine.step(&mut state)?;
    let mut per_iter = Vec::with_capacity(config.reps as usize);
    for _ in 0..config.reps {
        let t = Instant::now();
        for _ in 0..config.iters {
            engine.step(&mut state)?;
        }
        per_iter.push(t.elapsed().as_secs_f64() * 1e3 / config.iters as f64);
    }
    Ok(Some(summarize(&per_iter)))
}

/// Mean and sample standard deviation.
fn summarize(samples: &[f64]) -> Timing {
    let count = samples.len() as f64;
    let mean_ms = samples.iter().sum::<f64>() / count;
    let stddev_ms = if samples.len() > 1 {
        (samples.iter().map(|v| (v - mean_ms).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    Timing { mean_ms, stddev_ms }
}

pub fn write_bench_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.to_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_bench_csv`]; the header must match exactly.
pub fn read_bench_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut rows = r.records();
    let header = rows
        .next()
        .ok_or_else(|| Error::Csv("empty input".into()))??;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Csv("unexpected header".into()));
    }
    rows.map(|row| BenchRecord::from_row(&row?)).collect()
}

/// Parses `a..b` or `a..=b` (both inclusive) or a single level `a`.
pub fn parse_level_range(text: &str) -> Result<RangeInclusive<u32>> {
    let bad = || Error::InvalidLevelRange(text.to_string());
    let t = text.trim();
    let (a, b) = match t.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (t, t),
    };
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig {
            levels: 2..=3,
            block_sizes: vec![2, 3, 4, 64],
            reps: 2,
            iters: 2,
            ..BenchConfig::desk()
        }
    }

    #[test]
    fn rows_and_speedup() {
        let desc = FractalDescriptor::sierpinski_triangle();
        let records = run_bench(&desc, &small()).unwrap();
        // Per level: bb, lambda, linear, and the valid block sizes.
        let level2: Vec<_> = records.iter().filter(|r| r.level == 2).collect();
        let blocks: Vec<_> = level2.iter().map(|r| r.block_size).collect();
        assert_eq!(blocks, vec![None, None, None, Some(2), Some(4)]);
        assert_eq!(records.iter().filter(|r| r.level == 3).count(), 5);
        for r in &records {
            assert!(r.is_feasible());
            let layout = match (r.backend.as_str(), r.block_size) {
                ("compact", Some(rho)) => Layout::Blocked { rho },
                ("compact", None) => Layout::Linear,
                _ => Layout::Embedded,
            };
            assert_eq!(
                r.mem_cells,
                geometry::stored_cells(&desc, r.level, layout).unwrap()
            );
            if r.backend == "bb" {
                assert_eq!(r.speedup_vs_bb, Some(1.0));
            }
        }
    }

    #[test]
    fn cap_marks_infeasible() {
        let desc = FractalDescriptor::sierpinski_triangle();
        let config = BenchConfig {
            levels: 5..=5,
            block_sizes: vec![],
            cap: MemoryCap(500),
            ..small()
        };
        let records = run_bench(&desc, &config).unwrap();
        let by_backend: Vec<_> = records
            .iter()
            .map(|r| {
                (
                    r.backend.as_str(),
                    r.is_feasible(),
                    r.speedup_vs_bb.is_some(),
                )
            })
            .collect();
        assert_eq!(
            by_backend,
            vec![
                ("bb", false, false),
                ("lambda", false, false),
                ("compact", true, false)
            ]
        );
        assert_eq!(records[0].mem_cells, 1024);
        assert_eq!(records[2].mem_cells, 243);
    }

    #[test]
    fn csv_round_trip() {
        let desc = FractalDescriptor::vicsek();
        let mut records = run_bench(&desc, &small()).unwrap();
        records[0].timing = None;
        records[0].speedup_vs_bb = None;
        let mut buf = Vec::new();
        write_bench_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
        assert!(text.contains(",infeasible,infeasible,"));
        let back = read_bench_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.to_row(), b.to_row());
        }
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(read_bench_csv(&b""[..]).is_err());
        assert!(read_bench_csv(&b"a,b\n"[..]).is_err());
        let header = CSV_HEADER.join(",");
        let bad_rows = [
            "t,1,2,bb,-,1,1,x,0.1,4,1.0",
            "t,1,2,bb,-,1,1,0.1,infeasible,4,1.0",
            "t,1,2,bb,-,1,1,0.1,0.1,4",
            "t,-1,2,bb,-,1,1,0.1,0.1,4,1.0",
            "t,1,2,bb,-,1,1,NaN,0.1,4,1.0",
        ];
        for row in bad_rows {
            let text = format!("{header}\n{row}\n");
            assert!(read_bench_csv(text.as_bytes()).is_err(), "{row}");
        }
        let ok = format!("{header}\nt,1,2,bb,-,1,1,0.5,0.1,4,n/a\n");
        let rec = &read_bench_csv(ok.as_bytes()).unwrap()[0];
        assert_eq!(rec.speedup_vs_bb, None);
        assert_eq!(rec.timing.unwrap().mean_ms, 0.5);
    }

    #[test]
    fn level_ranges() {
        assert_eq!(parse_level_range("1..16").unwrap(), 1..=16);
        assert_eq!(parse_level_range("3..=5").unwrap(), 3..=5);
        assert_eq!(parse_level_range("7").unwrap(), 7..=7);
        for bad in ["", "5..3", "a..b", "1..", "..2", "-1..2"] {
            assert!(parse_level_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn stats() {
        let t = summarize(&[1.0, 3.0]);
        assert_eq!(t.mean_ms, 2.0);
        assert!((t.stddev_ms - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(summarize(&[4.0]).stddev_ms, 0.0);
    }
}
