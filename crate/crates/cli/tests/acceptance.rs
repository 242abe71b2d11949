//! Acceptance gate. Every criterion runs at its stated tolerance and prints
//! one `PASS` or `FAIL` line; the process exits non-zero if any line fails.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use mfrg_cli::experiments::{fermion, lmg, mfrg as trace, mps, verify};
use mfrg_cli::{Kind, RunConfig};
use mfrg_core::entangle::{self, dicke_half_entropy, fermion_half_entropy};
use mfrg_core::mfrg::{LevelSpec, Schedule, StepOptions, StepRecord};
use mfrg_core::model::{build_lmg, build_random_gapped, Bipartition, FermionModel};
use mfrg_core::solve::{fock, solve_dense, solve_fermion, solve_lanczos, solve_lmg_dicke, LanczosOptions};
use mfrg_core::verify::SLACK;
use mfrg_core::GroundState;

type Outcome = Result<(bool, String), String>;

fn cfg(kind: Kind, text: &str) -> Result<RunConfig, String> {
    RunConfig::from_text(kind, text, &Default::default()).map_err(|e| e.to_string())
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Largest LMG size solved densely; beyond it the full-space reference is Lanczos.
const DENSE_MAX_N: usize = 10;

fn dicke_oracle() -> Outcome {
    let (mut de, mut ds) = (0.0f64, 0.0f64);
    for n in [4, 6, 8, 10, 12] {
        for gamma in [0.8, 0.9] {
            for h in [1.2, 1.5, 2.0] {
                let d = solve_lmg_dicke(n, gamma, h).map_err(err)?;
                let GroundState::Dicke(state) = &d.state else { return Err("Dicke solver returned another form".into()) };
                let s_dicke = dicke_half_entropy(state).map_err(err)?;
                let full = build_lmg(n, gamma, h).map_err(err)?;
                // a dense 4096 x 4096 eigensolve alone exceeds the time budget
                let dense = if n <= DENSE_MAX_N {
                    solve_dense(&full)
                } else {
                    solve_lanczos(&full, full.dims(), &LanczosOptions::default())
                }
                .map_err(err)?;
                let v = dense.vector().ok_or("reference solve has no vector")?;
                let s_dense = entangle::entropy(&entangle::schmidt(v, &vec![2; n], &Bipartition::half(n)).map_err(err)?);
                de = de.max((d.e0 - dense.e0).abs());
                ds = ds.max((s_dicke - s_dense).abs());
            }
        }
    }
    Ok((de <= 1e-10 && ds <= 1e-8, format!(
            "max |dE0| = {de:.2e} (tol 1e-10), max |dS| = {ds:.2e} (tol 1e-8); dense for n <= {DENSE_MAX_N}, full-space Lanczos above"
        )))
}

fn fermion_oracle() -> Outcome {
    let (mut de, mut ds, mut dg, mut dp) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    for n in [4, 6, 8] {
        for mu in [0.0, 0.04, 1.0] {
            for kappa in [0.0, 1.0] {
                for s in 0..20 {
                    let seed = fermion::sample_seed(1, n, mu, kappa, s);
                    let model = FermionModel::random(n, kappa, mu, seed).map_err(err)?;
                    let cov = solve_fermion(&model, false).map_err(err)?;
                    let strict = solve_fermion(&model, true).map_err(err)?;
                    let GroundState::Covariance(cs) = &cov.state else { return Err("expected a covariance state".into()) };
                    let half: Vec<usize> = (0..n / 2).collect();
                    let s_cov = fermion_half_entropy(cs, &half).map_err(err)?;
                    let f = fock::solve(&model).map_err(err)?;
                    let s_fock = entangle::entropy(&entangle::schmidt(&f.vector, &vec![2; n], &Bipartition::half(n)).map_err(err)?);
                    de = de.max((cov.e0 - f.e0).abs());
                    ds = ds.max((s_cov - s_fock).abs());
                    dg = dg.max((cov.gap - f.gap).abs());
                    dp = dp.max((strict.gap - f.gap_same_parity).abs());
                    count += 1;
                }
            }
        }
    }
    Ok((
        de <= 1e-8 && ds <= 1e-7 && dg <= 1e-8 && dp <= 1e-8,
        format!("{count} samples: max |dE0| = {de:.2e}, |dS| = {ds:.2e}, |dgap| = {dg:.2e}, |dgap same parity| = {dp:.2e}"),
    ))
}

/// Theorem suite and band structure share one run of the default family.
fn theorem_suite() -> Result<(Outcome, Outcome), String> {
    let reports = verify::reports(&cfg(Kind::Verify, "")?).map_err(err)?;
    let required = [
        "variance_gap",
        "robustness",
        "schmidt_concentration",
        "ml_average",
        "tail_decay",
        "effective_fidelity",
        "effective_gap",
        "eckart_young",
    ];
    let instances: std::collections::BTreeSet<&str> =
        reports.iter().map(|r| r.instance.split('/').next().unwrap_or(&r.instance)).collect();
    let violations = reports.iter().filter(|r| r.is_violation()).count();
    let unexercised: Vec<&str> =
        required.iter().copied().filter(|c| !reports.iter().any(|r| r.check == *c && r.preconditions_met)).collect();
    let met = reports.iter().filter(|r| r.preconditions_met).count();
    let suite = Ok((
        instances.len() == 50 && violations == 0 && unexercised.is_empty(),
        format!(
            "{} instances, {} rows, {met} with preconditions met, {violations} violations, unexercised checks {unexercised:?}",
            instances.len(),
            reports.len()
        ),
    ));

    let bands: Vec<_> = reports.iter().filter(|r| r.check == "band_structure").collect();
    let skipped = bands.iter().filter(|r| !r.preconditions_met).count();
    let worst = bands.iter().map(|r| r.lhs).fold(0.0f64, f64::max);
    let band = Ok((
        !bands.is_empty() && skipped == 0 && worst <= 1e-10,
        format!("{} ladders, {skipped} not built, max |J| beyond k = {worst:.2e} (tol 1e-10)", bands.len()),
    ));
    Ok((suite, band))
}

fn gap_asymptote() -> Outcome {
    let gap = solve_lmg_dicke(500, 0.8, 2.0).map_err(err)?.gap;
    let rel = (gap - 2.19089).abs() / 2.19089;
    Ok((rel <= 0.05, format!("gap(n=500) = {gap:.6}, relative deviation {rel:.4} (tol 0.05)")))
}

fn entropy_growth() -> Outcome {
    let s: Vec<f64> = [50, 100, 200, 400]
        .iter()
        .map(|&n| lmg::solve_point(n, 0.8, 1.5).map(|r| r.entropy_half))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let diffs: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
    let ok = diffs.windows(2).all(|w| w[1] < w[0]);
    Ok((ok, format!("S = {s:.5?}, S(2n) - S(n) = {diffs:.5?}")))
}

fn fermion_saturation() -> Outcome {
    let c = cfg(Kind::Fermion, "samples = 100\n[fermion]\nn = 50, 100, 200\nmu = 0, 1\nkappa = 1\n")?;
    let rows = fermion::rows(&c).map_err(err)?;
    let at = |n: usize, mu: f64| rows.iter().find(|r| r.n == n && r.mu == mu).ok_or(format!("missing row n={n} mu={mu}"));
    let (s50, s100, s200) = (at(50, 1.0)?.mean_entropy, at(100, 1.0)?.mean_entropy, at(200, 1.0)?.mean_entropy);
    let saturating = (s200 - s100).abs() < (s100 - s50).abs();
    let mut gaps = Vec::new();
    let mut ordered = true;
    for n in [50, 100, 200] {
        let (g1, g0) = (at(n, 1.0)?.mean_gap, at(n, 0.0)?.mean_gap);
        ordered &= g1 > g0;
        gaps.push(format!("n={n}: {g1:.4} vs {g0:.4}"));
    }
    Ok((
        saturating && ordered,
        format!("mean S at mu=1: {s50:.5}, {s100:.5}, {s200:.5}; mean gap mu=1 vs mu=0: {}", gaps.join(", ")),
    ))
}

fn single_level(block: usize, z: usize) -> Result<Schedule, String> {
    Schedule::new(vec![LevelSpec::uniform(block, z)], 1).map_err(err)
}

/// Exactness and monotonicity, returning the accepted steps for the next criterion.
fn mfrg_exactness(steps: &mut Vec<StepRecord>) -> Outcome {
    let opts = StepOptions::default();
    let e_exact = solve_lmg_dicke(16, 0.8, 1.5).map_err(err)?.e0;
    let mut fids = Vec::new();
    let mut e_full = f64::NAN;
    for z in 0..=4 {
        let t = trace::trace(build_lmg(16, 0.8, 1.5).map_err(err)?, &single_level(4, z)?, &opts, trace::DEFAULT_EXACT_LIMIT)
            .map_err(err)?;
        let last = t.rows.last().ok_or("empty trace")?;
        if last.level != 1 {
            return Ok((false, format!("z={z} step was refused ({})", t.stop_reason)));
        }
        fids.push(last.fidelity_to_exact.ok_or("no fidelity reported")?);
        if z == 4 {
            e_full = last.e0;
        }
        steps.extend(t.system.trace);
    }
    let monotone = fids.windows(2).all(|w| w[1] >= w[0]);
    let f4 = fids[4];
    let de_lmg = (e_full - e_exact).abs();

    // a random three-body instance, blocks of 4 with z = |L|
    let h = build_random_gapped(8, 2, 3, 7, 3).map_err(err)?;
    let dense = solve_dense(&h).map_err(err)?;
    let t = trace::trace(h, &single_level(4, 4)?, &opts, 0).map_err(err)?;
    let de_rand = (t.rows.last().ok_or("empty trace")?.e0 - dense.e0).abs();
    steps.extend(t.system.trace);

    Ok((
        de_lmg <= 1e-9 && de_rand <= 1e-9 && monotone && (f4 - 1.0).abs() <= 1e-9,
        format!(
            "|dE0| z=|L|: LMG n=16 {de_lmg:.2e}, random n=8 k=3 {de_rand:.2e} (tol 1e-9); fidelity over z=0..4 = {fids:.10?}, |F(4) - 1| = {:.2e}",
            (f4 - 1.0).abs()
        ),
    ))
}

fn lemma8(mut steps: Vec<StepRecord>) -> Outcome {
    // two coarse-grainings in a row, so that later levels are certified too
    let schedule = Schedule::new(vec![LevelSpec::uniform(2, 2), LevelSpec::uniform(2, 2)], 1).map_err(err)?;
    let t = trace::trace(build_lmg(12, 0.8, 1.5).map_err(err)?, &schedule, &StepOptions::default(), 0).map_err(err)?;
    steps.extend(t.system.trace);
    let applicable = steps.iter().filter(|s| s.lemma8.applicable).count();
    let failing: Vec<String> = steps
        .iter()
        .filter(|s| !s.lemma8_holds(SLACK))
        .map(|s| {
            format!(
                "level {}: err {:.3e} vs {:.3e}, gap {:.4} vs {:.4}",
                s.from_level, s.step_error, s.lemma8.fidelity_bound, s.gap_after, s.lemma8.gap_bound
            )
        })
        .collect();
    Ok((
        failing.is_empty() && applicable > 0,
        format!("{} accepted steps, {applicable} with the bounds applicable, failures {failing:?}", steps.len()),
    ))
}

fn mps_compression() -> Outcome {
    let c = cfg(Kind::Mps, "[model]\nkind = lmg\nn = 12\ngamma = 0.8\nh = 1.5\n")?;
    let rows = mps::rows(&c).map_err(err)?;
    let deltas: Vec<f64> = rows.iter().map(|r| r.max_region_lhs_over_size).collect();
    let non_increasing = deltas.windows(2).all(|w| w[1] <= w[0]);
    let margin = rows.iter().map(|r| r.eckart_young_min_margin).fold(f64::INFINITY, f64::min);
    let full = rows.iter().find(|r| r.bond == 64).ok_or("no full-rank row")?.recon_error;
    Ok((
        non_increasing && margin >= -SLACK && full <= 1e-8,
        format!("delta over D = {:?}; min Eckart-Young margin {margin:.2e}; full-rank error {full:.2e} (tol 1e-8)", deltas.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>()),
    ))
}

fn run_binary(args: &[&str], config: &Path, out: &Path, workers: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_mfrg"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg(workers.to_string())
        .stdout(Stdio::null())
        .status()
        .map_err(err)?;
    if !status.success() {
        return Err(format!("mfrg {args:?} exited with {status}"));
    }
    Ok(())
}

fn determinism(root: &Path) -> Outcome {
    let sweeps: [(&str, Kind, &str); 5] = [
        ("lmg-sweep", Kind::Lmg, "[lmg]\nn = 20, 40, 80\ngamma = 0.8, 0.9\nh = 1.5, 2\n"),
        ("fermion-sweep", Kind::Fermion, "samples = 12\n[fermion]\nn = 8, 16\nmu = 0, 1\nkappa = 0.04, 1\n"),
        ("verify", Kind::Verify, "[verify]\ncount = 6\n"),
        ("mfrg-run", Kind::Mfrg, "stop_dim = 1\n[model]\nkind = lmg\nn = 8\ngamma = 0.8\nh = 1.5\n[level.0]\nblock_size = 2\nz = 1\n[level.1]\nblock_size = 2\nz = 2\n"),
        ("mps-compress", Kind::Mps, "[model]\nkind = lmg\nn = 10\ngamma = 0.8\nh = 1.5\n"),
    ];
    let max_workers = std::thread::available_parallelism().map_or(1, |n| n.get()).max(4);
    let mut details = Vec::new();
    let mut ok = true;
    for (cmd, kind, text) in sweeps {
        let dir = root.join(cmd);
        std::fs::create_dir_all(&dir).map_err(err)?;
        let config = dir.join("config.toml");
        std::fs::write(&config, text).map_err(err)?;
        let mut outputs = Vec::new();
        for (i, workers) in [1, max_workers, max_workers].into_iter().enumerate() {
            let out = dir.join(format!("run{i}"));
            run_binary(&[cmd], &config, &out, workers)?;
            outputs.push(std::fs::read(out.join(kind.file_name())).map_err(err)?);
        }
        let same = outputs.windows(2).all(|w| w[0] == w[1]) && !outputs[0].is_empty();
        ok &= same;
        details.push(format!("{cmd} {}", if same { "identical" } else { "DIFFERS" }));
    }
    Ok((ok, format!("workers 1, {max_workers}, {max_workers}: {}", details.join(", "))))
}

struct Gate {
    failures: usize,
}

impl Gate {
    fn report(&mut self, name: &str, budget: Option<Duration>, elapsed: Duration, outcome: Outcome) {
        let secs = elapsed.as_secs_f64();
        let (pass, detail) = match outcome {
            Ok((ok, detail)) => match budget {
                Some(b) if elapsed > b => (false, format!("{detail}; over the {}s budget", b.as_secs())),
                _ => (ok, detail),
            },
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            self.failures += 1;
        }
        println!("{} {name}: {detail} [{secs:.1}s]", if pass { "PASS" } else { "FAIL" });
    }

    fn run(&mut self, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        self.report(name, budget, start.elapsed(), outcome);
    }
}

fn scratch_dir() -> PathBuf {
    std::env::temp_dir().join(format!("mfrg-acceptance-{}", std::process::id()))
}

fn main() {
    let secs = Duration::from_secs;
    let mut gate = Gate { failures: 0 };
    gate.run("oracle equivalence, Dicke", Some(secs(60)), dicke_oracle);
    gate.run("oracle equivalence, fermions", Some(secs(120)), fermion_oracle);

    let start = Instant::now();
    let (suite, band) = match theorem_suite() {
        Ok(pair) => pair,
        Err(e) => (Err(e.clone()), Err(e)),
    };
    let elapsed = start.elapsed();
    gate.report("theorem suite", Some(secs(600)), elapsed, suite);
    gate.report("band structure", None, elapsed, band);

    gate.run("gap asymptote", Some(secs(10)), gap_asymptote);
    gate.run("sub-log entropy growth", Some(secs(60)), entropy_growth);
    gate.run("fermion saturation trend", Some(secs(300)), fermion_saturation);

    let mut steps = Vec::new();
    gate.run("MFRG exactness and monotonicity", Some(secs(300)), || mfrg_exactness(&mut steps));
    gate.run("effective-Hamiltonian bounds on MFRG steps", None, || lemma8(steps));
    gate.run("MPS compression", None, mps_compression);

    let root = scratch_dir();
    gate.run("determinism", None, || determinism(&root));
    let _ = std::fs::remove_dir_all(&root);

    println!("acceptance: {} failing criteria", gate.failures);
    if gate.failures > 0 {
        std::process::exit(1);
    }
}
