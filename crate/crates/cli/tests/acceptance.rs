//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use svlasov_cli::{cmd_laws, parse_config, Experiment};
use svlasov_core::diagnostics::{self, characteristic_oracle_transport, max_residual, TheoryCurve};
use svlasov_core::montecarlo::{ms_convergence, run_ensemble, EnsembleConfig, Observable};
use svlasov_core::schemes::{self, SchemeState, Stepper, Trajectory};
use svlasov_core::{
    testcase, Catalog, Field, FieldOnX, IncrementStream, NoiseKind, NoiseSpec, PhaseGrid, SchemeKind,
};

const SEED: u64 = 20240601;
/// Half-width of the Monte Carlo acceptance band, in standard errors.
const N_SE: f64 = 4.0;

type Outcome = Result<String, String>;

struct Problem {
    f0: Field,
    e: FieldOnX,
}

fn problem(nx: usize, nv: usize) -> Problem {
    let g = PhaseGrid::new(nx, nv, 2.0 * PI).unwrap();
    Problem {
        f0: testcase::two_stream(&g),
        e: testcase::cosine_field(&g),
    }
}

fn noise(catalog: Catalog, kind: NoiseKind, f: &Field) -> NoiseSpec {
    NoiseSpec::builtin(catalog, kind, f.grid()).unwrap()
}

/// Largest `|mean − theory| / stderr` over all steps, and whether every step
/// is inside the band.
fn within_band(mean: &[f64], stderr: &[f64], theory: impl Fn(usize) -> f64) -> (bool, f64) {
    let mut ok = true;
    let mut worst = 0.0f64;
    for n in 0..mean.len() {
        let dev = (mean[n] - theory(n)).abs();
        ok &= dev <= N_SE * stderr[n];
        if stderr[n] > 0.0 {
            worst = worst.max(dev / stderr[n]);
        } else if dev > 0.0 {
            worst = f64::INFINITY;
        }
    }
    (ok, worst)
}

fn ensemble(p: &Problem, kind: SchemeKind, spec: &NoiseSpec, m: u64) -> svlasov_core::montecarlo::EnsembleStats {
    let cfg = EnsembleConfig {
        trajectory: Trajectory {
            kind,
            initial: &p.f0,
            e: &p.e,
            noise: Some(spec),
        },
        master_seed: SEED,
        tau: 0.1,
        n_steps: 10,
    };
    run_ensemble(&cfg, m, &[Observable::L2Sq, Observable::Mass]).unwrap()
}

fn trace_formula() -> Outcome {
    let p = problem(200, 401);
    let spec = noise(Catalog::HalfSinV3, NoiseKind::Additive, &p.f0);
    let stats = ensemble(&p, SchemeKind::Additive, &spec, 10_000);
    let law = diagnostics::l2_theory(SchemeKind::Additive, &p.f0, Some(&spec)).unwrap();
    assert!(matches!(law, TheoryCurve::TraceLinear { .. }));
    let l2 = stats.get(Observable::L2Sq).unwrap();
    let (ok, worst) = within_band(&l2.mean, &l2.stderr, |n| law.value(stats.times[n]));
    let msg = format!("max deviation {worst:.2} SE over {} steps", stats.times.len());
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn temporal_factorization() -> Outcome {
    let p = problem(200, 401);
    let tau = 0.1;
    let mut worst = 0.0f64;
    for kind in [SchemeKind::MultIto, SchemeKind::MultStrato] {
        let spec = noise(Catalog::Const(1.0), kind.noise_kind().unwrap(), &p.f0);
        for path in 0..10 {
            let stream = IncrementStream::new(SEED, path, 1, tau);
            let mut st = Stepper::new(kind);
            let mut det = Stepper::new(SchemeKind::Deterministic);
            let mut s = SchemeState::new(p.f0.clone(), tau);
            let mut d = SchemeState::new(p.f0.clone(), tau);
            let mut beta = 0.0;
            for n in 0..20 {
                let db = stream.draw_increments(n);
                beta += db[0];
                s = st.step(s, &p.e, Some(&spec), &db).unwrap();
                d = det.step(d, &p.e, None, &[]).unwrap();
                let factor = match kind {
                    SchemeKind::MultIto => (beta - d.t() / 2.0).exp(),
                    _ => beta.exp(),
                };
                let scale = factor * d.field.max_abs();
                for (a, b) in s.field.values().iter().zip(d.field.values()) {
                    worst = worst.max((a - factor * b).abs() / scale);
                }
            }
        }
    }
    let msg = format!("max relative residual {worst:.2e} (limit 1e-12)");
    if worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Itô and Stratonovich L² laws with `cos_sin_pair` noise, and the Itô mass.
fn multiplicative_laws() -> (Outcome, Outcome, Outcome) {
    let p = problem(200, 401);
    let mut outcomes = Vec::new();
    let mut ito_mass = None;
    for kind in [SchemeKind::MultIto, SchemeKind::MultStrato] {
        let spec = noise(Catalog::CosSinPair, kind.noise_kind().unwrap(), &p.f0);
        let stats = ensemble(&p, kind, &spec, 10_000);
        let law = diagnostics::l2_theory(kind, &p.f0, Some(&spec)).unwrap();
        let l2 = stats.get(Observable::L2Sq).unwrap();
        let (ok, worst) = within_band(&l2.mean, &l2.stderr, |n| law.value(stats.times[n]));
        let msg = format!("{}: max deviation {worst:.2} SE", law.name());
        outcomes.push(if ok { Ok(msg) } else { Err(msg) });
        if kind == SchemeKind::MultIto {
            let mass = stats.get(Observable::Mass).unwrap();
            let m0 = p.f0.mass();
            let (ok, worst) = within_band(&mass.mean, &mass.stderr, |_| m0);
            let msg = format!("max deviation {worst:.2} SE from mass(f0) = {m0:.6}");
            ito_mass = Some(if ok { Ok(msg) } else { Err(msg) });
        }
    }
    let strato = outcomes.pop().unwrap();
    let ito = outcomes.pop().unwrap();
    (ito, strato, ito_mass.unwrap())
}

fn positivity() -> Outcome {
    let p = problem(200, 401);
    let cases = [
        (SchemeKind::MultIto, Catalog::CosSinPair),
        (SchemeKind::MultStrato, Catalog::SinV3),
        (SchemeKind::Transport, Catalog::TransportConst(0.5)),
    ];
    let mut report = Vec::new();
    let mut ok = true;
    for (kind, catalog) in cases {
        let spec = noise(catalog, kind.noise_kind().unwrap(), &p.f0);
        let traj = Trajectory {
            kind,
            initial: &p.f0,
            e: &p.e,
            noise: Some(&spec),
        };
        let mut lowest = f64::INFINITY;
        schemes::run(&traj, &IncrementStream::new(SEED, 0, spec.components(), 0.1), 100, |s| {
            lowest = lowest.min(s.field.min_value());
            Ok(())
        })
        .unwrap();
        ok &= lowest >= 0.0;
        report.push(format!("{kind} min {lowest:.1e}"));
    }
    let msg = report.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Every shift is a whole number of cells: free streaming with `τ·v·nx ∈ ℤ`,
/// a piecewise-constant force with `τE/dv = ±1`, and transport increments
/// rounded to whole velocity cells.
fn transport_exact_norms() -> Outcome {
    let g = PhaseGrid::new(32, 97, 12.0).unwrap();
    let tau = 0.125;
    let f0 = Field::sample(g, |x, v| {
        let bump = (1.0 - v * v / 9.0).max(0.0);
        bump * bump * (1.0 + 0.5 * (2.0 * PI * x).cos())
    })
    .unwrap();
    let e = FieldOnX::from_values((0..32).map(|i| if i < 16 { 2.0 } else { -2.0 }).collect()).unwrap();
    let spec = NoiseSpec::builtin(Catalog::TransportConst(g.dv()), NoiseKind::Transport, &g).unwrap();
    let ps = [1.0, 3.0, 55.0];
    let norms = |f: &Field| -> Vec<u64> { ps.iter().map(|&p| f.lp_norm(p).unwrap().to_bits()).collect() };
    let initial = norms(&f0);
    let mut mismatches = 0;
    for path in 0..5 {
        let stream = IncrementStream::new(SEED, path, 1, tau);
        let mut stepper = Stepper::new(SchemeKind::Transport);
        let mut s = SchemeState::new(f0.clone(), tau);
        for n in 0..10 {
            let cells = (stream.draw_increments(n)[0] / g.dv()).round();
            s = stepper.step(s, &e, Some(&spec), &[cells]).unwrap();
            if norms(&s.field) != initial {
                mismatches += 1;
            }
        }
    }
    let msg = format!("{mismatches} of 50 steps changed a norm bit");
    if mismatches == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn transport_generic_norms() -> Outcome {
    let p = problem(3000, 3001);
    let spec = noise(Catalog::TransportConst(0.5), NoiseKind::Transport, &p.f0);
    let traj = Trajectory {
        kind: SchemeKind::Transport,
        initial: &p.f0,
        e: &p.e,
        noise: Some(&spec),
    };
    let ps = [1.0, 3.0, 55.0];
    let initial: Vec<f64> = ps.iter().map(|&q| p.f0.lp_norm(q).unwrap()).collect();
    let mut drift = [0.0f64; 3];
    for path in 0..3 {
        schemes::run(&traj, &IncrementStream::new(SEED, path, 1, 0.1), 10, |s| {
            for (k, &q) in ps.iter().enumerate() {
                drift[k] = drift[k].max((s.field.lp_norm(q)? / initial[k] - 1.0).abs());
            }
            Ok(())
        })
        .unwrap();
    }
    let msg = format!(
        "max relative drift L1 {:.2e}, L3 {:.2e}, L55 {:.2e} (limit 2e-2)",
        drift[0], drift[1], drift[2]
    );
    if drift.iter().all(|&d| d <= 0.02) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ms_slope(kind: SchemeKind, catalog: Catalog) -> (f64, Vec<(f64, f64)>) {
    let p = problem(100, 201);
    let spec = noise(catalog, kind.noise_kind().unwrap(), &p.f0);
    let traj = Trajectory {
        kind,
        initial: &p.f0,
        e: &p.e,
        noise: Some(&spec),
    };
    let taus: Vec<f64> = (6..=10).map(|k| 2f64.powi(-k)).collect();
    let table = ms_convergence(&traj, SEED, 0.5, &taus, 2f64.powi(-12), 100).unwrap();
    (table.slope, table.rows)
}

/// `(scheme, noise, lowest slope, highest slope)`.
const MS_CASES: [(SchemeKind, Catalog, f64, f64); 6] = [
    (SchemeKind::Additive, Catalog::HalfSinV3, 0.8, 1.2),
    (SchemeKind::MultIto, Catalog::SinV3, 0.8, 1.2),
    (SchemeKind::MultIto, Catalog::CosSinPair, 0.8, 1.2),
    (SchemeKind::MultStrato, Catalog::SinV3, 0.8, 1.2),
    (SchemeKind::MultStrato, Catalog::CosSinPair, 0.8, 1.2),
    (SchemeKind::Transport, Catalog::TransportConst(0.5), 0.4, f64::INFINITY),
];

fn ms_order(kind: SchemeKind, catalog: Catalog, lo: f64, hi: f64) -> Outcome {
    let (slope, rows) = ms_slope(kind, catalog);
    let errors: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.1)).collect();
    let msg = format!("slope {slope:.3} (bounds [{lo}, {hi}]), errors {}", errors.join(" "));
    if (lo..=hi).contains(&slope) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracle_self_convergence() -> Outcome {
    let stream = IncrementStream::new(SEED, 0, 1, 0.1);
    // Golden-ratio sequence over [0, 1) × [−3, 3].
    let probes: Vec<(f64, f64)> = (0..100)
        .map(|k| {
            let k = k as f64;
            ((0.5 + k * 0.618_033_988_749_895).fract(), -3.0 + 6.0 * (0.5 + k * 0.754_877_666_246_693).fract())
        })
        .collect();
    let residual = |nx: usize, nv: usize| {
        let p = problem(nx, nv);
        let spec = noise(Catalog::TransportConst(0.5), NoiseKind::Transport, &p.f0);
        max_residual(&characteristic_oracle_transport(&p.f0, &p.e, &spec, &stream, 10, &probes).unwrap())
    };
    let coarse = residual(200, 401);
    let fine = residual(400, 801);
    let msg = format!("residual 200x401 {coarse:.3e}, 400x801 {fine:.3e}, ratio {:.3} (limit 0.6)", fine / coarse);
    if fine <= 0.6 * coarse {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn laws_determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let run = |threads: usize| {
        let out = dir.path().join(format!("w{threads}"));
        let text = format!(
            "scheme = additive\nnoise = half_sin_v3\nnx = 64\nnv = 129\ntau = 0.1\nT = 1\nsamples = 600\nseed = {SEED}\nout = {}\n",
            out.display()
        );
        let exp = Experiment::new(parse_config(&text).unwrap()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let path = pool.install(|| cmd_laws(&exp)).unwrap();
        fs::read(path).unwrap()
    };
    let runs = [run(1), run(8), run(1), run(8)];
    let same = runs.iter().all(|r| *r == runs[0]);
    let msg = format!("4 runs of {} bytes at 1 and 8 workers", runs[0].len());
    if same {
        Ok(msg)
    } else {
        Err(format!("outputs differ; {msg}"))
    }
}

fn main() {
    let mut failures = 0;
    let mut report = |name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {name}: {msg} [{secs:.0}s]"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg} [{secs:.0}s]");
            }
        }
    };

    let t = Instant::now();
    report("temporal factorization", t, temporal_factorization());
    let t = Instant::now();
    report("positivity", t, positivity());
    let t = Instant::now();
    report("transport norms, integer shifts", t, transport_exact_norms());
    let t = Instant::now();
    report("determinism of laws.csv", t, laws_determinism());
    let t = Instant::now();
    report("characteristic oracle self-convergence", t, oracle_self_convergence());
    let t = Instant::now();
    report("trace formula", t, trace_formula());
    let t = Instant::now();
    let (ito, strato, mass) = multiplicative_laws();
    report("Ito L2 law", t, ito);
    report("Stratonovich L2 law", t, strato);
    report("Ito expected mass", t, mass);
    let t = Instant::now();
    report("transport norms, 3000x3001", t, transport_generic_norms());
    for (kind, catalog, lo, hi) in MS_CASES {
        let t = Instant::now();
        report(&format!("ms order {kind}/{catalog}"), t, ms_order(kind, catalog, lo, hi));
    }

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
