//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; any failure exits non-zero.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRng, TestRunner};

use compact_fractal::bench::{self, BenchBackend, BenchConfig};
use compact_fractal::geometry::{self, EmbeddedCoord, Layout};
use compact_fractal::maps::{self, CompactCoord, FractalMap};
use compact_fractal::oracle;
use compact_fractal::stencil::{run_simulation, Backend, Neighborhood, SimConfig, StencilRule};
use compact_fractal::{FractalDescriptor, MemoryCap};

type Outcome = Result<String, String>;

fn builtins() -> [(FractalDescriptor, u32); 3] {
    [
        (FractalDescriptor::sierpinski_triangle(), 10),
        (FractalDescriptor::sierpinski_carpet(), 5),
        (FractalDescriptor::vicsek(), 7),
    ]
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn inverse_and_bijection() -> Outcome {
    let mut cells = 0u64;
    for (desc, max_r) in builtins() {
        for r in 0..=max_r {
            let map = FractalMap::new(&desc, r).map_err(|e| e.to_string())?;
            let (w, h) = map.compact_dims();
            let mut image = HashSet::new();
            for e in geometry::enumerate_cells(&desc, r).map_err(|e| e.to_string())? {
                let c = map
                    .nu(e)
                    .map_err(|err| format!("{} r={r}: nu({e}): {err}", desc.name()))?;
                ensure(c.x < w && c.y < h, || {
                    format!("{} r={r}: nu({e}) = {c} outside {w}x{h}", desc.name())
                })?;
                ensure(image.insert(c), || {
                    format!("{} r={r}: nu collides at {c}", desc.name())
                })?;
                let back = map.lambda(c).map_err(|err| err.to_string())?;
                ensure(back == e, || {
                    format!("{} r={r}: lambda(nu({e})) = {back}", desc.name())
                })?;
                cells += 1;
            }
            ensure(image.len() as u64 == w * h, || {
                format!(
                    "{} r={r}: image has {} of {} slots",
                    desc.name(),
                    image.len(),
                    w * h
                )
            })?;
            for cy in 0..h {
                for cx in 0..w {
                    let c = CompactCoord::new(cx, cy);
                    let e = map.lambda(c).map_err(|err| err.to_string())?;
                    let back = map
                        .nu(e)
                        .map_err(|err| format!("{} r={r}: nu(lambda({c})): {err}", desc.name()))?;
                    ensure(back == c, || {
                        format!("{} r={r}: nu(lambda({c})) = {back}", desc.name())
                    })?;
                }
            }
        }
    }
    Ok(format!("{cells} cells, 0 violations"))
}

fn oracle_equivalence() -> Outcome {
    let limits = [
        (FractalDescriptor::sierpinski_triangle(), 8),
        (FractalDescriptor::sierpinski_carpet(), 4),
        (FractalDescriptor::vicsek(), 6),
    ];
    let mut cells = 0;
    for (desc, max_r) in limits {
        for r in 0..=max_r {
            let map = FractalMap::new(&desc, r).map_err(|e| e.to_string())?;
            let expected = oracle::unfold_compact_oracle(&desc, r).map_err(|e| e.to_string())?;
            ensure(expected.len() as u64 == map.cell_count(), || {
                format!("{} r={r}: oracle has {} cells", desc.name(), expected.len())
            })?;
            for (e, c) in &expected {
                let got = map.nu(*e).map_err(|err| err.to_string())?;
                ensure(got == *c, || {
                    format!("{} r={r}: nu({e}) = {got}, oracle {c}", desc.name())
                })?;
                cells += 1;
            }
        }
    }
    Ok(format!("{cells} cells, 0 mismatches"))
}

fn mma_equivalence() -> Outcome {
    let desc = FractalDescriptor::sierpinski_triangle();
    let mut cells = 0;
    for r in 0..=10 {
        let map = FractalMap::new(&desc, r).map_err(|e| e.to_string())?;
        for e in geometry::enumerate_cells(&desc, r).map_err(|e| e.to_string())? {
            let scalar = map.nu(e).map_err(|err| err.to_string())?;
            let mma = maps::nu_via_mma(&desc, r, e).map_err(|err| err.to_string())?;
            ensure(mma == scalar, || {
                format!("r={r}: mma {mma} != nu {scalar} at {e}")
            })?;
            cells += 1;
        }
    }
    Ok(format!("{cells} cells, 0 mismatches"))
}

fn cell_counts() -> Outcome {
    let mut checked = 0;
    for (desc, _) in builtins() {
        for r in 0..=6u32 {
            let cells = geometry::enumerate_cells(&desc, r).map_err(|e| e.to_string())?;
            let expected = desc.k().pow(r);
            ensure(cells.len() as u64 == expected, || {
                format!(
                    "{} r={r}: {} cells, expected {expected}",
                    desc.name(),
                    cells.len()
                )
            })?;
            let n = desc.s().pow(r);
            let brute = (0..n * n)
                .filter(|i| geometry::contains(&desc, r, EmbeddedCoord::new(i % n, i / n)).unwrap())
                .count() as u64;
            ensure(brute == expected, || {
                format!("{} r={r}: box scan found {brute}", desc.name())
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (fractal, level) pairs exact"))
}

fn stencil_equivalence() -> Outcome {
    let tri = FractalDescriptor::sierpinski_triangle();
    let report = oracle::verify_stencil(&tri, 6, StencilRule::conway(), 42, 0.5, 100)
        .map_err(|e| e.to_string())?;
    ensure(report.passed() && report.steps_run == 100, || {
        report.to_string()
    })?;

    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 50,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let strategy = (
        0u16..512,
        0u16..512,
        any::<bool>(),
        any::<u64>(),
        0.0f64..=1.0,
        1u64..=30,
    );
    runner
        .run(&strategy, |(birth, survive, vn, seed, density, steps)| {
            let nb = if vn {
                Neighborhood::VonNeumann
            } else {
                Neighborhood::Moore
            };
            let rule = StencilRule::from_masks(birth, survive, nb);
            let report = oracle::verify_stencil(&tri, 4, rule, seed, density, steps).unwrap();
            prop_assert!(report.passed(), "rule {rule} seed {seed}: {report}");
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "r=6 100 steps over {} backends, plus 50 randomized trials at r=4, 0 divergences",
        report.backends.len()
    ))
}

fn compression_claims() -> Outcome {
    let tri = FractalDescriptor::sierpinski_triangle();
    let factor =
        geometry::compression_factor(&tri, 16, Layout::Linear).map_err(|e| e.to_string())?;
    let exact = 2f64.powi(32) / 3f64.powi(16);
    ensure(
        (factor - 99.77).abs() <= 0.1 && (factor - exact).abs() < 1e-9,
        || format!("factor {factor}, expected {exact}"),
    )?;
    let share = 100.0 / factor;
    ensure((share - 1.0).abs() < 0.01, || {
        format!("compact share {share:.4}%")
    })?;
    let r19 = geometry::compression_factor(&tri, 19, Layout::Linear).map_err(|e| e.to_string())?;
    let gap = (r19 - 234.0).abs() / 234.0;
    ensure((r19 - 236.5).abs() < 0.1 && gap < 0.02, || {
        format!("r=19 factor {r19}")
    })?;
    Ok(format!(
        "r=16 factor {factor:.2} (compact {share:.3}% of box); r=19 factor {r19:.1}, {:.1}% from 234",
        gap * 100.0
    ))
}

fn hausdorff() -> Outcome {
    let want = [1.58, 1.89, 1.46];
    let mut got = Vec::new();
    for ((desc, _), w) in builtins().into_iter().zip(want) {
        let d = desc.hausdorff_dimension();
        ensure((d - w).abs() <= 0.01, || {
            format!("{}: {d:.4} vs {w}", desc.name())
        })?;
        got.push(format!("{}={d:.3}", desc.name()));
    }
    Ok(got.join(" "))
}

fn infeasible_embedded_level() -> Outcome {
    let tri = FractalDescriptor::sierpinski_triangle();
    let config = BenchConfig {
        levels: 16..=16,
        backends: vec![BenchBackend::BoundingBox, BenchBackend::Compact],
        block_sizes: vec![],
        cap: MemoryCap::DEFAULT,
        ..BenchConfig::desk()
    };
    let records = bench::run_bench(&tri, &config).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("bench.csv");
    bench::write_bench_csv(
        &records,
        std::fs::File::create(&path).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let rows = bench::read_bench_csv(std::fs::File::open(&path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let bb = rows.iter().find(|r| r.backend == "bb").ok_or("no bb row")?;
    let nu = rows
        .iter()
        .find(|r| r.backend == "compact" && r.block_size.is_none())
        .ok_or("no compact row")?;
    ensure(!bb.is_feasible() && bb.mem_cells == 1u128 << 32, || {
        format!("bb row: {bb}")
    })?;
    ensure(nu.is_feasible() && nu.mem_cells == 43_046_721, || {
        format!("compact row: {nu}")
    })?;
    Ok(format!(
        "bb infeasible at {} cells; compact ran {} cells at {:.1} ms/iteration ({} reps x {} iters)",
        bb.mem_cells,
        nu.mem_cells,
        nu.timing.unwrap().mean_ms,
        nu.reps,
        nu.iters
    ))
}

fn determinism() -> Outcome {
    let max_workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .max(4);
    let fractals = [
        FractalDescriptor::sierpinski_triangle(),
        FractalDescriptor::sierpinski_carpet(),
        FractalDescriptor::vicsek(),
    ];
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 20,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let strategy = (
        0usize..3,
        2u32..=6,
        0usize..4,
        any::<u64>(),
        0.05f64..0.95,
        1u64..=20,
        any::<bool>(),
    );
    runner
        .run(&strategy, |(f, r, b, seed, density, steps, table)| {
            let desc = &fractals[f];
            let r = if f == 0 { r + 3 } else { r.min(4) };
            let backend = match b {
                0 => Backend::BoundingBox,
                1 => Backend::Lambda,
                2 => Backend::Compact { block: None },
                _ => Backend::Compact {
                    block: Some(desc.s()),
                },
            };
            let config = |workers| SimConfig {
                backend,
                steps,
                seed,
                density,
                workers: Some(workers),
                neighbor_table: table,
                ..SimConfig::default()
            };
            let one = run_simulation(desc, r, &config(1)).unwrap();
            let many = run_simulation(desc, r, &config(max_workers)).unwrap();
            prop_assert_eq!(one.hash, many.hash);
            prop_assert_eq!(one.state.grid().cells(), many.state.grid().cells());
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "20 configs, 1 vs {max_workers} workers, identical hashes"
    ))
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Check, Option<u64>); 9] = [
        (1, "inverse and bijection", inverse_and_bijection, Some(30)),
        (
            2,
            "unfolding oracle equivalence",
            oracle_equivalence,
            Some(30),
        ),
        (3, "matrix form equivalence", mma_equivalence, None),
        (4, "cell count k^r", cell_counts, None),
        (
            5,
            "stencil cross-backend equivalence",
            stencil_equivalence,
            Some(60),
        ),
        (6, "compression factor", compression_claims, None),
        (7, "hausdorff dimensions", hausdorff, None),
        (
            8,
            "embedded r=16 infeasible, compact runs",
            infeasible_embedded_level,
            Some(600),
        ),
        (9, "determinism across worker counts", determinism, None),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (id, name, check, limit) in criteria {
        let label = format!("criterion {id}: {name}");
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > Duration::from_secs(l) => {
                Err(format!("took {:.1}s, limit {l}s", elapsed.as_secs_f64()))
            }
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {label} ({detail}; {:.2}s)", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {label}: {why} ({:.2}s)", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
