//! End-to-end acceptance gates, one report line each:
//!
//! ```text
//! cargo test -p helmtab --test acceptance
//! ```
//!
//! Every gate runs even if an earlier one fails; the process exits non-zero
//! afterwards if any gate did.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use helmtab::bounds::{check_domination, error_sweep_range, sweep_all};
use helmtab::matfill::{
    auto_range, bench_compare, expected_calls, fill_matrix, generate_sphere_mesh, BenchOptions, FillEvaluator,
    QuadratureSpec, SUPPORTED_OUTER,
};
use helmtab::{build_plan, wavenumber, HashIndex, KernelEvaluator, KernelKind, Medium, Method, SamplingConfig};

type Outcome = Result<String, String>;

fn vacuum() -> Medium {
    Medium::vacuum(1.0).unwrap()
}

fn evaluator(r_min: f64, r_max: f64, density: u32, refine: bool) -> KernelEvaluator {
    let cfg = SamplingConfig::new(r_min, r_max).with_density(density).with_refine(refine);
    KernelEvaluator::build(&cfg, &vacuum(), 3).unwrap()
}

fn refinement_gain() -> Outcome {
    let on = sweep_all(&evaluator(1e-4, 1.0, 1000, true), 10_000).map_err(|e| e.to_string())?;
    let off = sweep_all(&evaluator(1e-4, 1.0, 1000, false), 10_000).map_err(|e| e.to_string())?;
    let mut worst = f64::INFINITY;
    let mut detail = Vec::new();
    for (a, b) in on.iter().zip(&off) {
        let g_re = b.report.max_rel_error_re / a.report.max_rel_error_re;
        let g_im = b.report.max_rel_error_im / a.report.max_rel_error_im;
        worst = worst.min(g_re).min(g_im);
        detail.push(format!("{}/{} re {:.1}x im {:.1}x", a.kind.name(), a.method, g_re, g_im));
    }
    let msg = format!(
        "min gain {worst:.1}x (>= 10 required; two orders {}): {}",
        if worst >= 100.0 { "reached" } else { "not reached" },
        detail.join(", ")
    );
    if worst >= 10.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn bound_domination() -> Outcome {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for density in [1000, 10_000] {
        let ev = evaluator(1e-4, 1.0, density, true);
        for kind in KernelKind::ALL {
            for method in [Method::Linear, Method::Lagrange] {
                let rep =
                    check_domination(&ev, kind, method, 100_000, ev.r_min(), ev.r_max()).map_err(|e| e.to_string())?;
                violations += rep.violations;
                worst = worst.max(rep.worst_ratio);
            }
        }
    }
    let msg = format!("8 sweeps x 1e5 probes, {violations} violations, worst error/bound {worst:.3}");
    if violations == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn convergence_order() -> Outcome {
    let err = |density: u32, kind: KernelKind, method: Method| {
        let ev = evaluator(1e-4, 1.0, density, true);
        error_sweep_range(&ev, kind, method, 100_000, 0.1, 1.0).map(|r| r.max_abs_error)
    };
    let lin = err(1000, KernelKind::PlainExp, Method::Linear).map_err(|e| e.to_string())?
        / err(2000, KernelKind::PlainExp, Method::Linear).map_err(|e| e.to_string())?;
    let lag = err(1000, KernelKind::GreenOverR, Method::Lagrange).map_err(|e| e.to_string())?
        / err(2000, KernelKind::GreenOverR, Method::Lagrange).map_err(|e| e.to_string())?;
    let msg = format!("linear {lin:.2}x (>= 3.5), lagrange3 {lag:.2}x (>= 12)");
    if lin >= 3.5 && lag >= 12.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn hash_agreement() -> Outcome {
    let plan = build_plan(&SamplingConfig::new(1e-4, 1.0), &vacuum()).map_err(|e| e.to_string())?;
    let hash = HashIndex::build(&plan).map_err(|e| e.to_string())?;
    let xs = plan.abscissae();
    let last = xs.len() - 2;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut mismatches = 0u64;
    let mut unbracketed = 0u64;
    for _ in 0..1_000_000 {
        let r = rng.gen_range(plan.r_min()..=plan.r_max());
        let j = hash.locate(xs, r).map_err(|e| e.to_string())?;
        let oracle = (xs.partition_point(|&x| x <= r) - 1).min(last);
        mismatches += (j != oracle) as u64;
        let ok = xs[j] <= r && (r < xs[j + 1] || (j == last && r == xs[j + 1]));
        unbracketed += !ok as u64;
    }
    let msg = format!("1e6 radii over {} samples: {mismatches} mismatches, {unbracketed} unbracketed", xs.len());
    if mismatches == 0 && unbracketed == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sphere_bench() -> Result<helmtab::matfill::FillReport, String> {
    let mesh = generate_sphere_mesh(0.5, 2).map_err(|e| e.to_string())?;
    let cfg = SamplingConfig::new(1e-4, 0.0).with_density(10_000);
    let options = BenchOptions { kind: KernelKind::GreenOverR, lagrange_degree: 3, threads: 1, repeats: 5 };
    bench_compare(&mesh, QuadratureSpec::new(4, 3).unwrap(), &vacuum(), &cfg, &options).map_err(|e| e.to_string())
}

fn fill_accuracy(report: &helmtab::matfill::FillReport) -> Outcome {
    let worst = report.max_rel_error_re.max(report.max_rel_error_im);
    let msg = format!(
        "N = {}, max rel error re {:.3e} im {:.3e} (<= 1e-4)",
        report.n_triangles, report.max_rel_error_re, report.max_rel_error_im
    );
    if report.n_triangles == 320 && worst <= 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fill_speedup(report: &helmtab::matfill::FillReport) -> Outcome {
    let msg = format!(
        "analytic {:.4} s, interpolated {:.4} s (table build {:.2}%), speedup {:.3}x (>= 1.15)",
        report.analytic_s,
        report.interp_s,
        100.0 * report.table_build_s / report.interp_s,
        report.speedup
    );
    if report.speedup >= 1.15 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn call_counts() -> Outcome {
    let medium = vacuum();
    let k = wavenumber(&medium).unwrap();
    let mut cases = 0;
    for subdiv in [0, 1, 2] {
        let mesh = generate_sphere_mesh(0.5, subdiv).map_err(|e| e.to_string())?;
        let cfg = auto_range(&mesh, &SamplingConfig::new(1e-4, 0.0));
        let ev = KernelEvaluator::build(&cfg, &medium, 3).map_err(|e| e.to_string())?;
        let specs: Vec<(usize, usize)> = if subdiv == 2 {
            vec![(4, 3)]
        } else {
            SUPPORTED_OUTER.iter().flat_map(|&m| [1, 2, 3, 5].map(|n| (m, n))).collect()
        };
        for (m, n) in specs {
            let spec = QuadratureSpec::new(m, n).unwrap();
            for evaluator in [FillEvaluator::Analytic { k }, FillEvaluator::Interpolated(&ev)] {
                let (_, run) =
                    fill_matrix(&mesh, spec, evaluator, KernelKind::GreenOverR, 1).map_err(|e| e.to_string())?;
                let want = expected_calls(mesh.len() as u64, m as u64, n as u64);
                if run.actual_calls as u128 != want {
                    return Err(format!(
                        "N = {} m = {m} n = {n}: {} calls, expected {want}",
                        mesh.len(),
                        run.actual_calls
                    ));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} fills exact, incl. N = 320 m = 4 n = 3 -> {}", expected_calls(320, 4, 3)))
}

fn determinism_and_nodes() -> Outcome {
    let a = evaluator(1e-4, 1.0, 1000, true);
    let b = evaluator(1e-4, 1.0, 1000, true);
    if a.plan().abscissae() != b.plan().abscissae() {
        return Err("plans differ between builds".into());
    }
    for kind in KernelKind::ALL {
        if a.table(kind).values() != b.table(kind).values() {
            return Err(format!("{} tables differ between builds", kind.name()));
        }
    }
    let sa = sweep_all(&a, 10_000).map_err(|e| e.to_string())?;
    let sb = sweep_all(&b, 10_000).map_err(|e| e.to_string())?;
    if sa != sb {
        return Err("sweep reports differ between runs".into());
    }

    let mesh = generate_sphere_mesh(0.5, 1).unwrap();
    let fill = |ev: &KernelEvaluator| {
        fill_matrix(&mesh, QuadratureSpec::default(), FillEvaluator::Interpolated(ev), KernelKind::GreenOverR, 1)
            .unwrap()
            .0
    };
    if fill(&a) != fill(&b) {
        return Err("interpolated fills differ between runs".into());
    }

    let mut nodes = 0;
    for (i, &x) in a.plan().abscissae().iter().enumerate() {
        for kind in KernelKind::ALL {
            let stored = a.table(kind).values()[i];
            for method in [Method::Linear, Method::Lagrange] {
                let got = a.eval_with(kind, method, x).map_err(|e| e.to_string())?;
                if got != stored {
                    return Err(format!("{} {:?} at node {i} (r = {x:e}): {got} != {stored}", kind.name(), method));
                }
            }
            nodes += 1;
        }
    }
    Ok(format!("plans, tables, sweeps and fills bit-identical; {nodes} node evaluations exact"))
}

fn main() -> ExitCode {
    let mut failed = Vec::new();
    let mut run = |name: &str, limit: Option<Duration>, gate: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = gate();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(msg), Some(limit)) if elapsed > limit => Err(format!("{msg}; took {elapsed:.1?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(msg) => println!("PASS  {name:<28} [{elapsed:>8.2?}] {msg}"),
            Err(msg) => {
                println!("FAIL  {name:<28} [{elapsed:>8.2?}] {msg}");
                failed.push(name.to_string());
            }
        }
    };
    let secs = |s| Some(Duration::from_secs(s));

    run("1 refinement gain", secs(10), &mut refinement_gain);
    run("2 bound domination", secs(30), &mut bound_domination);
    run("3 convergence order", None, &mut convergence_order);
    run("4 hash vs binary search", secs(5), &mut hash_agreement);

    // 5 and 6 share one benchmark run
    let start = Instant::now();
    let bench = sphere_bench();
    let bench_time = start.elapsed();
    run("5 matrix-fill accuracy", None, &mut || match &bench {
        Ok(rep) if bench_time > Duration::from_secs(60) => {
            Err(format!("{}; bench took {bench_time:.1?}", fill_accuracy(rep).unwrap_or_else(|e| e)))
        }
        Ok(rep) => fill_accuracy(rep),
        Err(e) => Err(e.clone()),
    });
    run("6 interpolated speedup", None, &mut || match &bench {
        Ok(rep) => fill_speedup(rep),
        Err(e) => Err(e.clone()),
    });
    run("7 call-count model", None, &mut call_counts);
    run("8 determinism, node hits", None, &mut determinism_and_nodes);

    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
