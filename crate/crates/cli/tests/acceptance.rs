//! End-to-end acceptance suite. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use loewner::classify::{
    check_convex, check_halfplane, check_monotone, check_strong, Criterion, Verdict, Witness,
};
use loewner::matcalc::{
    compress, psd_min_eig, rand_hermitian, rand_projection, rand_unitary, schur_complement, trial_rng, MatError,
};
use loewner::measures::{
    extend_at_endpoint, om_to_soc, recover_atom_weight, substitute_square, Atom, DiscreteMeasure, OcRep, OmRep, SocRep,
};
use loewner::processes::{backward_process, main_cycle, star_process, PipelineOptions, RunStatus};
use loewner::transforms::{compose_checked, ComposeMode, TransformError};
use loewner::{CatalogFn, Certificate, CertifyConfig, FunctionExpr, HermitianMatrix, Interval, Projection};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn real(rows: &[&[f64]]) -> HermitianMatrix {
    HermitianMatrix::from_real(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Largest relative deviation `|f − g| / max(|g|, tiny)` over `xs`.
fn max_rel(f: &FunctionExpr, g: impl Fn(f64) -> f64, xs: &[f64]) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for &x in xs {
        let v = f.eval_real(x).map_err(|e| format!("{f} at {x}: {e}"))?;
        let want = g(x);
        worst = worst.max((v - want).abs() / want.abs().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

fn passes(c: &Certificate, what: &str) -> Result<(), String> {
    ensure(c.passed(), || format!("{what}: {:?} {:?} {:?}", c.verdict, c.diagnostic, c.witness.as_ref().map(|w| w.min_eig)))
}

fn measure(atoms: &[(f64, f64)]) -> DiscreteMeasure {
    DiscreteMeasure::new(atoms.iter().map(|&(r, w)| Atom::new(r, w)).collect()).unwrap()
}

fn compression_inequality() -> Outcome {
    let f = FunctionExpr::reciprocal_on(Interval::closed(0.1, 10.0)).unwrap();
    let spectra = Interval::closed(0.1, 10.0);
    let mut worst = f64::INFINITY;
    for i in 0..500u64 {
        let mut rng = trial_rng(2024, i);
        let n = rng.random_range(2..=8);
        let k = rng.random_range(1..n);
        let h = rand_hermitian(&spectra, n, 20.0, &mut rng);
        let p = rand_projection(n, k, &mut rng).unwrap();
        let g = loewner::classify::strong_gap(&f, &h, &p).map_err(|e| e.to_string())?;
        let fh_norm = loewner::matcalc::apply_fn(&f, &h).unwrap().norm();
        ensure(g.min_eig >= -1e-8 * (1.0 + fh_norm), || format!("trial {i}: min eig {}", g.min_eig))?;
        worst = worst.min(g.min_eig);
    }
    let h = real(&[&[1.0, 0.9], &[0.9, 1.0]]);
    let p = Projection::coordinate(2, &[0]).unwrap();
    let g = loewner::classify::strong_gap(&FunctionExpr::reciprocal(), &h, &p).map_err(|e| e.to_string())?;
    ensure(g.min_eig.abs() <= 1e-10, || format!("2x2 case: {}", g.min_eig))?;
    Ok(format!("500 trials, smallest gap {worst:.3e}; 2x2 gap {:.1e}", g.min_eig))
}

fn schur_suite() -> Outcome {
    let (mut agree, mut skipped, mut worst_inv) = (0, 0, 0.0f64);
    for i in 0..500u64 {
        let mut rng = trial_rng(77, i);
        let (k, p, s) = loop {
            let n = rng.random_range(2..=8);
            let rank = rng.random_range(1..n);
            let all_positive = rng.random::<bool>();
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    let m = 0.05 + 2.95 * rng.random::<f64>();
                    if all_positive || rng.random::<f64>() < 0.7 { m } else { -m }
                })
                .collect();
            let k = HermitianMatrix::from_spectrum(&rand_unitary(n, &mut rng), &values);
            let p = rand_projection(n, rank, &mut rng).unwrap();
            match schur_complement(&k, &p) {
                Ok(s) => break (k, p, s),
                Err(MatError::SingularBlock { .. }) => continue,
                Err(e) => return Err(e.to_string()),
            }
        };
        let (mk, ms) = (psd_min_eig(&k), psd_min_eig(&s));
        if mk.abs() < 1e-7 || ms.abs() < 1e-7 {
            skipped += 1;
        } else {
            let tol = 1e-9 * (1.0 + k.norm());
            ensure((mk >= -tol) == (ms >= -tol), || format!("trial {i}: λmin(k) = {mk}, λmin(S) = {ms}"))?;
            agree += 1;
        }
        let corner = compress(&k.inverse().ok_or("k singular")?, &p).map_err(|e| e.to_string())?;
        let s_inv = s.inverse().ok_or("Schur complement singular")?;
        let rel = corner.max_diff(&s_inv) / s_inv.norm();
        ensure(rel < 1e-9, || format!("trial {i}: inverse corner residual {rel:.2e}"))?;
        worst_inv = worst_inv.max(rel);
    }
    Ok(format!("{agree} agreeing, {skipped} boundary skips; worst inverse-corner residual {worst_inv:.2e}"))
}

fn om_round_trip() -> Outcome {
    let interval = Interval::open(0.0, 4.0);
    let xs = interval.grid(200);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for i in 0..50u64 {
        let mut rng = trial_rng(3, i);
        let count = rng.random_range(1..=10);
        let atoms: Vec<(f64, f64)> = (0..count)
            .map(|_| {
                let r = if rng.random::<bool>() { 4.05 + 6.0 * rng.random::<f64>() } else { -0.05 - 6.0 * rng.random::<f64>() };
                (r, 0.01 + 3.0 * rng.random::<f64>())
            })
            .collect();
        let (a, b, x0) = (2.0 * rng.random::<f64>(), 2.0 * rng.random::<f64>() - 1.0, 4.0 * rng.random::<f64>());
        let rep = OmRep::new(a, b, x0.max(1e-3), measure(&atoms), interval).map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let c = 0.01 + 3.98 * rng.random::<f64>();
            let soc = om_to_soc(&rep, c).map_err(|e| e.to_string())?;
            let base = rep.eval(c).unwrap();
            // The reference quotient loses digits when x is very close to c.
            for &x in xs.iter().filter(|x| (*x - c).abs() >= 1e-2) {
                let v = soc.eval(x).unwrap();
                let dq = (rep.eval(x).unwrap() - base) / (x - c);
                let res = (v - dq).abs() / (1.0 + v.abs());
                ensure(res <= 1e-10, || format!("rep {i}, center {c}, x {x}: residual {res:.2e}"))?;
                worst = worst.max(res);
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} points, worst residual {worst:.2e}"))
}

fn quick() -> CertifyConfig {
    CertifyConfig::default().with_trials(300).with_dims(2..=6)
}

fn main_cycle_example() -> Outcome {
    let run = main_cycle(&FunctionExpr::power(0.5), &[1.0, 0.0], 3, PipelineOptions::uncertified());
    ensure(run.status == RunStatus::Completed, || format!("{:?}: {:?}", run.status, run.error))?;
    let f3 = &run.stage(3).unwrap().expr;
    let rel = max_rel(f3, |x| (x.powf(-0.5) - 1.0) / (x.sqrt() - 1.0), &log_grid(0.01, 100.0, 200))?;
    ensure(rel <= 1e-12, || format!("closed form deviates by {rel:.2e}"))?;
    let cfg = quick();
    passes(&check_monotone(f3, &f3.domain(), &cfg), "check_monotone")?;
    passes(&check_halfplane(f3, &CertifyConfig::default()), "check_halfplane")?;
    Ok(format!("f3 = {f3}; deviation {rel:.1e}; monotone and half-plane pass"))
}

fn star_example() -> Outcome {
    let run = star_process(&FunctionExpr::power(0.5), &[1.0, 0.0], 2, PipelineOptions::uncertified());
    let f2 = &run.stage(2).ok_or("no stage 2")?.expr;
    let rel = max_rel(f2, |x| (x.powf(-0.5) - 1.0) / (x - 1.0), &log_grid(0.01, 100.0, 200))?;
    ensure(rel <= 1e-12, || format!("closed form deviates by {rel:.2e}"))?;
    passes(&check_monotone(f2, &f2.domain(), &quick()), "check_monotone")?;
    Ok(format!("deviation {rel:.1e}; monotone passes"))
}

fn backward_examples() -> Outcome {
    let on = Interval::open(0.0, 2.0);
    let xs = on.grid(200);
    let cfg = CertifyConfig::default().with_trials(300);
    let sqrt = FunctionExpr::power(0.5).restrict(Interval::closed(0.0, 2.0)).unwrap();
    let pd = FunctionExpr::catalog(CatalogFn::PowerDifference { alpha: 0.5 });
    let cases: [(&str, FunctionExpr, fn(f64) -> f64); 2] = [
        ("sqrt", sqrt, |x| x / (3.0 - x.sqrt() * (x - 1.0))),
        ("power difference", pd, |x| x / (3.0 - (x - 1.0) * (x.sqrt() - (2.0 - x).sqrt()))),
    ];
    let mut notes = Vec::new();
    for (name, f0, closed) in cases {
        let run = backward_process(&f0, &[1.0, 0.0], &[Some(-3.0), Some(0.0)], 3, PipelineOptions::uncertified());
        ensure(run.status == RunStatus::Completed, || format!("{name}: {:?}", run.error))?;
        let g = &run.stage(-3).unwrap().expr;
        let rel = max_rel(g, closed, &xs)?;
        ensure(rel <= 1e-12, || format!("{name}: closed form deviates by {rel:.2e}"))?;
        passes(&check_monotone(g, &on, &cfg), name)?;
        notes.push(format!("{name} {rel:.1e}"));
    }
    Ok(format!("deviations {}; both monotone", notes.join(", ")))
}

fn termination() -> Outcome {
    let id = main_cycle(&FunctionExpr::identity(), &[1.0, 0.0], 12, PipelineOptions::uncertified());
    ensure(id.status == RunStatus::TerminatedZero, || format!("identity: {:?}", id.status))?;
    ensure(id.stage(3).unwrap().expr.is_zero_on_grid(), || "f3 is not zero".into())?;
    ensure(id.last().index == 4, || format!("identity stopped at {}", id.last().index))?;
    let mobius = FunctionExpr::quotient(vec![1.0, 2.0], vec![1.0, 1.0], Interval::positive()).unwrap();
    let run = main_cycle(&mobius, &[1.0, 0.0], 12, PipelineOptions::uncertified());
    ensure(run.status == RunStatus::TerminatedRational, || format!("mobius: {:?}", run.status))?;
    let (d0, d3) = (run.stage(0).unwrap().rational_degree, run.stage(3).unwrap().rational_degree);
    ensure(d0 == Some(1) && d3 == Some(0), || format!("degrees {d0:?} -> {d3:?}"))?;
    Ok("identity: terminated_zero after f3 = 0; (2x+1)/(x+1): terminated_rational, degree 1 -> 0".into())
}

fn replay_matches(f: &FunctionExpr, w: &Witness, want: f64) -> Result<f64, String> {
    let json = serde_json::to_string(w).map_err(|e| e.to_string())?;
    let back: Witness = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    let got = back.replay(f).map_err(|e| e.to_string())?.min_eig;
    ensure((got - want).abs() <= 1e-10, || format!("{:?} replays to {got}, expected {want}", w.criterion))?;
    Ok(got)
}

fn witness(criterion: Criterion, min_eig: f64) -> Witness {
    Witness { criterion, h1: None, h2: None, h: None, p: None, t: None, nodes: None, z: None, min_eig }
}

fn failing(c: &Certificate, f: &FunctionExpr, what: &str) -> Result<(), String> {
    ensure(c.verdict == Verdict::Fail, || format!("{what}: expected fail, got {:?}", c.verdict))?;
    let w = c.witness.as_ref().ok_or_else(|| format!("{what}: no witness"))?;
    replay_matches(f, w, w.min_eig).map(|_| ())
}

fn negative_controls() -> Outcome {
    let cfg = CertifyConfig::default();
    let sq = FunctionExpr::power(2.0);
    let cube = FunctionExpr::power(3.0);
    let id02 = FunctionExpr::identity().restrict(Interval::open(0.0, 2.0)).unwrap();
    let e1 = Projection::coordinate(2, &[0]).unwrap();

    failing(&check_monotone(&sq, &sq.domain(), &cfg), &sq, "x^2 monotone")?;
    let mut w = witness(Criterion::Monotone, 1.5 - 13f64.sqrt() / 2.0);
    w.h1 = Some(real(&[&[1.0, 1.0], &[1.0, 1.0]]));
    w.h2 = Some(real(&[&[2.0, 1.0], &[1.0, 1.0]]));
    let mono = replay_matches(&sq, &w, w.min_eig)?;
    ensure(mono <= -0.2, || format!("monotone gap {mono}"))?;

    failing(&check_convex(&cube, &cube.domain(), &cfg), &cube, "x^3 convex")?;
    let mut w = witness(Criterion::Davis, -0.125);
    w.h = Some(real(&[&[-0.5, 0.5], &[0.5, 0.5]]));
    w.p = Some(e1.clone());
    let davis = replay_matches(&cube, &w, -0.125)?;

    failing(&check_strong(&id02, &id02.domain(), &cfg), &id02, "x strong")?;
    let mut w = witness(Criterion::Strong, 0.5 - 1.06f64.sqrt());
    w.h = Some(real(&[&[1.0, 0.9], &[0.9, 1.0]]));
    w.p = Some(e1);
    let strong = replay_matches(&id02, &w, w.min_eig)?;
    ensure(strong <= -0.5, || format!("strong gap {strong}"))?;

    failing(&check_halfplane(&sq, &cfg), &sq, "x^2 half-plane")?;
    let mut w = witness(Criterion::HalfPlane, -2.0);
    w.z = Some([-1.0, 1.0]);
    let hp = replay_matches(&sq, &w, -2.0)?;
    Ok(format!("gaps: monotone {mono:.4}, Davis {davis:.4}, strong {strong:.4}, half-plane {hp}"))
}

fn composition() -> Outcome {
    let phi = FunctionExpr::quotient(vec![0.0, 1.0], vec![1.0, 1.0], Interval::open(-1.0, f64::INFINITY)).unwrap();
    let f = FunctionExpr::reciprocal_on(Interval::positive()).unwrap();
    let cfg = CertifyConfig::default();
    let c = compose_checked(&phi, &f, ComposeMode::Strong, &cfg).map_err(|e| e.to_string())?;
    let rel = max_rel(&c.expr, |x| 1.0 / (1.0 + x), &log_grid(0.01, 100.0, 200))?;
    ensure(rel <= 1e-12, || format!("deviation {rel:.2e}"))?;
    passes(&c.certificate, "composite check_strong")?;
    match compose_checked(&FunctionExpr::power(2.0), &f, ComposeMode::Strong, &cfg) {
        Err(TransformError::HypothesisViolated(_)) => {}
        other => return Err(format!("x^2 as outer function was not rejected: {:?}", other.map(|c| c.expr.to_string()))),
    }
    Ok(format!("deviation {rel:.1e}; strong passes; x^2 rejected"))
}

fn quartic() -> Outcome {
    let sq = FunctionExpr::power(2.0);
    let x4 = FunctionExpr::compose_unchecked(&sq, &sq).restrict(Interval::open(-1.0, 1.0)).unwrap();
    let cfg = CertifyConfig::default().with_trials(1000).with_dims(2..=3);
    let c = check_convex(&x4, &x4.domain(), &cfg);
    failing(&c, &x4, "x^4 convex")?;
    let w = c.witness.as_ref().unwrap();
    Ok(format!("{:?} witness found by trial {}, gap {:.3e}", w.criterion, c.trials, w.min_eig))
}

fn poisson() -> Outcome {
    const EPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
    let soc = |atoms: &[(f64, f64)]| {
        FunctionExpr::measure_soc(SocRep::new(0.0, measure(atoms), DiscreteMeasure::empty(), Interval::open(0.0, 1.0)).unwrap())
    };
    let one = soc(&[(2.0, 1.0)]);
    let two = soc(&[(2.0, 1.0), (5.0, 3.0)]);
    let mut out = Vec::new();
    for (f, r, window, w) in [(&one, 2.0, (1.5, 2.5), 1.0), (&two, 2.0, (1.5, 2.5), 1.0), (&two, 5.0, (4.0, 6.0), 3.0)] {
        let rec = recover_atom_weight(f, r, window, &EPS).map_err(|e| e.to_string())?;
        let rel = (rec.weight - w).abs() / w;
        ensure(rel <= 0.01, || format!("atom {r}: {} vs {w}", rec.weight))?;
        out.push(format!("{r}: {:.6}", rec.weight));
    }
    Ok(format!("recovered {}", out.join(", ")))
}

fn endpoint_extension() -> Outcome {
    let rep = SocRep::new(0.3, measure(&[(1.0, 0.7), (3.0, 1.2)]), measure(&[(-1.0, 0.5)]), Interval::open(0.0, 1.0))
        .map_err(|e| e.to_string())?;
    let ext = extend_at_endpoint(&rep, 1.0).map_err(|e| e.to_string())?;
    ensure(ext.delta == 0.7, || format!("delta {}", ext.delta))?;
    let mut worst: f64 = 0.0;
    for x in Interval::open(0.0, 1.0).grid(100) {
        worst = worst.max(ext.residual(x).map_err(|e| e.to_string())?);
    }
    ensure(worst < 1e-12, || format!("residual {worst:.2e}"))?;
    Ok(format!("delta = {}; worst residual {worst:.1e}", ext.delta))
}

fn square_substitution() -> Outcome {
    let phi = OcRep::new(0.0, 0.5, 1.0, 0.0, measure(&[(4.0, 2.0)]), DiscreteMeasure::empty(), Interval::open(-1.0, 4.0))
        .map_err(|e| e.to_string())?;
    let g = substitute_square(&phi).map_err(|e| e.to_string())?;
    let (plus, minus) = (g.nu_plus.atoms(), g.nu_minus.atoms());
    ensure(plus == [Atom::new(2.0, 0.5)] && minus == [Atom::new(-2.0, 0.5)], || format!("{plus:?} {minus:?}"))?;
    let mut worst: f64 = 0.0;
    for x in Interval::open(-2.0, 2.0).grid(200) {
        let (v, want) = (g.eval(x).unwrap(), phi.eval(x * x).unwrap());
        worst = worst.max((v - want).abs() / (1.0 + want.abs()));
    }
    ensure(worst <= 1e-12, || format!("deviation {worst:.2e}"))?;
    Ok(format!("nu atoms (±2, 0.5); worst deviation {worst:.1e}"))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<i32, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_loewner"))
        .args(args)
        .current_dir(dir)
        .env_remove("LOEWNER_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    status.status.code().ok_or_else(|| "terminated by signal".into())
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let specs = [
        ("classify", r#"{"function": {"kind": "power", "params": {"alpha": 0.5}, "domain": {"lo": 0, "hi": 4, "lo_closed": false, "hi_closed": false}}}"#),
        ("pipeline", r#"{"pipeline": {"process": "main", "f0": {"kind": "power", "params": {"alpha": 0.5}}, "points": [1, 0], "steps": 3}}"#),
        ("measure", r#"{"measure": {"kind": "om", "rep": {"a": 0.5, "b": 1, "x0": 1, "atoms_plus": [[3, 2]], "atoms_minus": [[-1, 1]], "interval": {"lo": 0, "hi": 2, "lo_closed": false, "hi_closed": false}}}}"#),
        ("report", r#"{"report": {"inputs": ["classify-a", "pipeline-a"]}}"#),
    ];
    let mut files = 0;
    for (cmd, spec) in specs {
        std::fs::write(dir.join(format!("{cmd}.json")), spec).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let out = format!("{cmd}-{run}");
            let mut args = vec![cmd, "--spec", &format!("{cmd}.json"), "--out", &out, "--seed", "11", "--trials", "60"]
                .into_iter()
                .map(String::from)
                .collect::<Vec<_>>();
            if cmd == "report" {
                args.push("--replay".into());
            }
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            let code = run_cli(&args, dir)?;
            ensure(code == 0, || format!("{cmd} exited with {code}"))?;
            outputs.push(dir_bytes(&dir.join(&out)));
        }
        ensure(outputs[0] == outputs[1], || format!("{cmd}: artifacts differ between runs"))?;
        ensure(!outputs[0].is_empty(), || format!("{cmd}: no artifacts"))?;
        files += outputs[0].len();
    }
    Ok(format!("{files} artifacts byte-identical across two runs of each command"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("compression inequality for 1/x", compression_inequality),
        ("Schur complement facts", schur_suite),
        ("measure round trip of the difference quotient", om_round_trip),
        ("main cycle from sqrt", main_cycle_example),
        ("star process from sqrt", star_example),
        ("backward process examples", backward_examples),
        ("termination", termination),
        ("negative controls with replayable witnesses", negative_controls),
        ("checked composition", composition),
        ("quartic is not operator convex", quartic),
        ("Poisson atom recovery", poisson),
        ("endpoint extension identity", endpoint_extension),
        ("square substitution", square_substitution),
        ("CLI determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                println!("criterion {n:>2} FAIL  {name} ({secs:.1}s): {why}");
                failed.push(n);
            }
        }
    }
    println!("acceptance: {} of 14 passed in {:.1}s", 14 - failed.len(), start.elapsed().as_secs_f64());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
