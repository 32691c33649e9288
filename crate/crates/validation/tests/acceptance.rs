use std::f64::consts::PI;
use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lvcomp::output::write_records;
use lvcomp::{analyze, run_sweep_parallel};
use lvcomp_core::presets;
use lvcomp_core::{
    assemble_operator, reaction, reaction_jacobian, run_to_equilibrium, survival_summary,
    BoundaryConfig, DiffusionScale, FeatureGroup, FieldState, Grid, Matrix, ModelParams,
    RunOptions, Scenario, SpeciesVector, Stepper, SurvivalCode, SweepMode, SweepRecord, SweepSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20220301;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn code(s: &str) -> SurvivalCode {
    s.parse().unwrap()
}

fn preset(name: &str) -> ModelParams {
    presets::find(name).unwrap().params()
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn ode_grid() -> Grid {
    Grid::new(1, 1, 1.0, BoundaryConfig::all_zero_flux(1)).unwrap()
}

fn sweep(
    mode: SweepMode,
    base: ModelParams,
    scenario: Scenario,
    scale: DiffusionScale,
    runs: usize,
) -> Vec<SweepRecord> {
    let mut s = SweepSpec::new(mode, base, scenario);
    s.run_count = runs;
    s.seed = SEED;
    s.diffusion_scale = scale;
    run_sweep_parallel(&s, None).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (r, u0, tau) = (0.1, 0.5, 0.01);
    let g = ode_grid();
    let p = ModelParams::new(vec![r], Matrix::zeros(1, 1), vec![0.01]).unwrap();
    let mut stepper = Stepper::new(&p, &g, tau, 1e-10).unwrap();
    let mut s = FieldState::uniform(&g, &[u0], tau).unwrap();
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    let mut done = 0;
    for t in [10.0, 50.0, 100.0] {
        let steps = (t / tau).round() as usize;
        while done < steps {
            stepper.advance(&mut s).unwrap();
            done += 1;
        }
        let e = (r * t).exp();
        let exact = u0 * e / (1.0 + u0 * (e - 1.0));
        let rel = (s.species(0)[0] - exact).abs() / exact;
        worst = worst.max(rel);
        write!(detail, "t={t}: rel err {rel:.2e}; ").unwrap();
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-3 && elapsed < Duration::from_secs(1),
        format!("{detail}tol 1e-3; runtime {} (< 1s)", secs(elapsed)),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let p = preset("case-2sp-2");
    let g = ode_grid();
    let s = FieldState::uniform(&g, &[0.5, 0.5], 1.0).unwrap();
    let res = run_to_equilibrium(&p, &g, &s, &RunOptions::default()).unwrap();
    let f = res.final_averages();
    let err = (f[0] - 0.5887).abs().max((f[1] - 0.6441).abs());
    let elapsed = start.elapsed();
    outcome(
        res.converged && err <= 1e-3 && elapsed < Duration::from_secs(1),
        format!(
            "u = ({:.5}, {:.5}) vs (0.5887, 0.6441), max err {err:.2e}, tol 1e-3; runtime {} (< 1s)",
            f[0],
            f[1],
            secs(elapsed)
        ),
    )
}

fn default_run(name: &str, scenario: Scenario) -> (SurvivalCode, Vec<f64>) {
    let p = preset(name);
    let g = scenario.default_grid();
    let init = vec![0.5; p.species_count()];
    let s = FieldState::uniform(&g, &init, 1.0).unwrap();
    let res = run_to_equilibrium(&p, &g, &s, &RunOptions::default()).unwrap();
    (res.survival_code.clone(), res.final_averages().to_vec())
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for scenario in Scenario::ALL {
        let (c1, _) = default_run("case-2sp-1", scenario);
        let (c2, _) = default_run("case-2sp-2", scenario);
        pass &= c1.survivors() == 1 && c2 == code("11");
        write!(detail, "{scenario}: case1 {c1} case2 {c2}; ").unwrap();
    }
    for (name, want) in [("case-3sp-1", 1), ("case-3sp-2", 2), ("case-3sp-3", 3)] {
        let (c, _) = default_run(name, Scenario::OneD);
        pass &= c.survivors() == want;
        write!(detail, "1d {name}: {c} (want {want} survivors); ").unwrap();
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    outcome(pass, format!("{detail}runtime {} (< 60s)", secs(elapsed)))
}

fn criterion_4() -> Outcome {
    let run = |scale: DiffusionScale| {
        let p = preset("case-2sp-2")
            .scale_diffusion(scale.factor())
            .unwrap();
        let g = Scenario::OneD.default_grid();
        let s = FieldState::uniform(&g, &[0.5, 0.5], 1.0).unwrap();
        run_to_equilibrium(&p, &g, &s, &RunOptions::default()).unwrap()
    };
    let regular = run(DiffusionScale::Regular);
    let small = run(DiffusionScale::Small);
    let (fr, fs) = (regular.final_averages(), small.final_averages());
    let survivors: Vec<usize> = (0..2)
        .filter(|&k| regular.survival_code.bits()[k] || small.survival_code.bits()[k])
        .collect();
    let pass = !survivors.is_empty() && survivors.iter().all(|&k| fs[k] > fr[k]);
    outcome(
        pass,
        format!(
            "regular {} {:?}, small {} {:?}; strict ordering on surviving species {:?}",
            regular.survival_code,
            fr.to_vec(),
            small.survival_code,
            fs.to_vec(),
            survivors.iter().map(|k| k + 1).collect::<Vec<_>>()
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let records = sweep(
        SweepMode::RandomDiffusion,
        preset("case-2sp-2"),
        Scenario::OneD,
        DiffusionScale::Regular,
        1000,
    );
    let (mut high, mut high_ok, mut low, mut low_ok) = (0, 0, 0, 0);
    for r in &records {
        let (e1, e2) = (r.diffusion[0], r.diffusion[1]);
        if e1.min(e2) > 0.075 {
            high += 1;
            high_ok += usize::from(r.converged && r.survival_code == code("00"));
        }
        if e1.max(e2) < 0.065 && (e1 - e2).abs() < 0.01 {
            low += 1;
            low_ok += usize::from(r.converged && r.survival_code == code("11"));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        high_ok == high && low_ok == low && elapsed < Duration::from_secs(300),
        format!(
            "min eps > 0.075: {high_ok}/{high} are 00; max eps < 0.065 and |d eps| < 0.01: {low_ok}/{low} are 11; runtime {} (< 300s)",
            secs(elapsed)
        ),
    )
}

struct Sweeps {
    one_d_regular: Vec<SweepRecord>,
    one_d_small: Vec<SweepRecord>,
    elapsed: Duration,
}

fn fraction(records: &[SweepRecord], c: &str) -> (f64, usize) {
    let s = survival_summary(records).unwrap();
    (s.fraction(&code(c)), s.non_converged)
}

fn criterion_6() -> (Outcome, Sweeps) {
    let start = Instant::now();
    let base = preset("case-2sp-2");
    let full = |scenario, scale| sweep(SweepMode::FullRandom, base.clone(), scenario, scale, 2000);
    let one_d_regular = full(Scenario::OneD, DiffusionScale::Regular);
    let two_da_regular = full(Scenario::TwoDA, DiffusionScale::Regular);
    let one_d_small = full(Scenario::OneD, DiffusionScale::Small);
    let elapsed = start.elapsed();

    let (a, nca) = fraction(&one_d_regular, "11");
    let (b, ncb) = fraction(&two_da_regular, "00");
    let (c, ncc) = fraction(&one_d_small, "00");
    let pass = (a - 0.108).abs() <= 0.03
        && (b - 0.689).abs() <= 0.03
        && c < 0.005
        && elapsed < Duration::from_secs(900);
    let o = outcome(
        pass,
        format!(
            "1d regular 11 = {a:.4} (0.108 +- 0.03); 2da regular 00 = {b:.4} (0.689 +- 0.03); 1d small 00 = {c:.4} (< 0.005); non-converged {nca}/{ncb}/{ncc}; runtime {} (< 900s)",
            secs(elapsed)
        ),
    );
    (
        o,
        Sweeps {
            one_d_regular,
            one_d_small,
            elapsed,
        },
    )
}

fn criterion_7() -> Outcome {
    let records = sweep(
        SweepMode::FullRandom,
        preset("case-3sp-1"),
        Scenario::TwoDA,
        DiffusionScale::Regular,
        2000,
    );
    let (f, nc) = fraction(&records, "000");
    outcome(
        (f - 0.58).abs() <= 0.04,
        format!("2da regular 000 = {f:.4} (0.58 +- 0.04); non-converged {nc}"),
    )
}

fn top_labels(records: &[SweepRecord]) -> (f64, Vec<FeatureGroup>, Vec<bool>) {
    let a = analyze(records, 4).unwrap();
    (
        a.report.cumulative_variance,
        a.labels.iter().map(|l| l.group).collect(),
        a.labels.iter().map(|l| l.tie).collect(),
    )
}

fn criterion_8(sweeps: &Sweeps) -> Outcome {
    let (cum, regular, tie_r) = top_labels(&sweeps.one_d_regular);
    let (cum_small, small, tie_s) = top_labels(&sweeps.one_d_small);
    let is_diffusion = |g: &FeatureGroup| matches!(g, FeatureGroup::Diffusion(_));
    let is_growth = |g: &FeatureGroup| matches!(g, FeatureGroup::GrowCompete(_));
    let labels_ok = regular[..2].iter().all(is_diffusion) && small[..2].iter().all(is_growth);
    let cum_ok = (cum - 0.60).abs() <= 0.05;
    let names = |g: &[FeatureGroup]| {
        g.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    };
    let note = match (labels_ok, cum_ok) {
        (true, false) => "; accepted on labels with estimator-discrepancy note",
        _ => "",
    };
    outcome(
        labels_ok,
        format!(
            "regular cum var {cum:.4} (0.60 +- 0.05, {}), labels [{}] ties {:?}; small cum var {cum_small:.4}, labels [{}] ties {:?}{note}",
            if cum_ok { "within" } else { "outside" },
            names(&regular),
            tie_r,
            names(&small),
            tie_s
        ),
    )
}

fn random_params(rng: &mut ChaCha8Rng, m: usize) -> ModelParams {
    let mut draw = |n: usize| {
        (0..n)
            .map(|_| rng.random_range(0.01..0.1))
            .collect::<Vec<f64>>()
    };
    let r = draw(m);
    let a = draw(m * (m - 1));
    let eps = draw(m);
    ModelParams::from_off_diagonal(r, &a, eps).unwrap()
}

fn box_preservation(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for case in 0..200 {
        let m = rng.random_range(2..=3);
        let p = random_params(rng, m);
        let scenario = Scenario::ALL[case % 3];
        let g = scenario
            .grid(if scenario.dim() == 1 { 100 } else { 10 }, 1.0)
            .unwrap();
        let values: Vec<f64> = (0..m * g.cell_count())
            .map(|_| rng.random_range(0.0..=1.0))
            .collect();
        let mut s = FieldState::new(m, g.cell_count(), values, 1.0).unwrap();
        let mut stepper = Stepper::new(&p, &g, 1.0, 1e-10).unwrap();
        for _ in 0..100 {
            stepper.advance(&mut s).unwrap();
            if let Some(v) = s.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(format!("box: run {case} reached {v}"));
            }
        }
    }
    Ok("box 200 runs".into())
}

fn mass_conservation() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for dim in [1, 2] {
        let n = if dim == 1 { 100 } else { 25 };
        let g = Grid::new(dim, n, 1.0, BoundaryConfig::all_zero_flux(dim)).unwrap();
        let p = ModelParams::new(vec![0.0, 0.0], Matrix::zeros(2, 2), vec![0.1, 0.03]).unwrap();
        let cells = g.cell_count();
        let values: Vec<f64> = (0..2 * cells)
            .map(|i| 0.5 + 0.4 * (i as f64 * 0.37).sin())
            .collect();
        let mut s = FieldState::new(2, cells, values, 1.0).unwrap();
        let mass = |s: &FieldState, k: usize| s.species(k).iter().sum::<f64>();
        let m0 = [mass(&s, 0), mass(&s, 1)];
        let mut stepper = Stepper::new(&p, &g, 1.0, 1e-10).unwrap();
        for _ in 0..1000 {
            stepper.advance(&mut s).unwrap();
        }
        for k in 0..2 {
            worst = worst.max((mass(&s, k) - m0[k]).abs() / m0[k]);
        }
    }
    if worst < 1e-9 {
        Ok(format!("mass drift {worst:.1e}"))
    } else {
        Err(format!("mass drift {worst:.1e} (tol 1e-9)"))
    }
}

fn exchangeable_symmetry() -> Result<String, String> {
    let p =
        ModelParams::from_off_diagonal(vec![0.06, 0.06], &[0.04, 0.04], vec![0.02, 0.02]).unwrap();
    for scenario in Scenario::ALL {
        let g = scenario.default_grid();
        let s = FieldState::uniform(&g, &[0.5, 0.5], 1.0).unwrap();
        let opts = RunOptions {
            max_steps: 300,
            ..RunOptions::default()
        };
        let res = run_to_equilibrium(&p, &g, &s, &opts).unwrap();
        if res.final_state.species(0) != res.final_state.species(1) {
            return Err(format!("symmetry broken in {scenario}"));
        }
    }
    Ok("symmetry exact".into())
}

fn operator_checks(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for scenario in Scenario::ALL {
        let g = scenario.default_grid();
        let a = assemble_operator(&g, rng.random_range(0.001..0.1)).unwrap();
        let u: Vec<f64> = (0..g.cell_count())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        if !a.is_symmetric() || a.quadratic_form(&u) <= 0.0 {
            return Err(format!("operator not SPD in {scenario}"));
        }
    }
    for dim in [1, 2] {
        let g = Grid::new(dim, 10, 1.0, BoundaryConfig::all_zero_flux(dim)).unwrap();
        let a = assemble_operator(&g, 0.05).unwrap();
        let u: Vec<f64> = (0..g.cell_count())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        if !a.is_symmetric() || a.quadratic_form(&u) < -1e-15 {
            return Err(format!("zero-flux operator not PSD in {dim}D"));
        }
    }
    Ok("operator SPD/PSD".into())
}

fn spatial_order() -> Result<String, String> {
    let eps = 0.05;
    let err = |n: usize| {
        let g = Scenario::OneD.grid(n, 1.0).unwrap();
        let a = assemble_operator(&g, eps).unwrap();
        let u: Vec<f64> = (0..n).map(|i| (PI * g.cell_center(i).0).sin()).collect();
        let mut au = vec![0.0; n];
        a.apply(&u, &mut au);
        (1..n - 1)
            .map(|i| (au[i] / g.cell_volume() - eps * PI * PI * u[i]).abs())
            .fold(0.0, f64::max)
    };
    let e: Vec<f64> = [50, 100, 200].iter().map(|&n| err(n)).collect();
    let order = e
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::MAX, f64::min);
    if order >= 1.9 {
        Ok(format!("order {order:.3}"))
    } else {
        Err(format!("order {order:.3} (need 1.9)"))
    }
}

fn jacobian(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(2..=3);
        let p = random_params(rng, m);
        let u: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let j = reaction_jacobian(&p, &SpeciesVector(u.clone())).unwrap();
        let h = 1e-5;
        let mut fd = Matrix::zeros(m, m);
        for l in 0..m {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[l] += h;
            dn[l] -= h;
            let fp = reaction(&p, &SpeciesVector(up)).unwrap();
            let fm = reaction(&p, &SpeciesVector(dn)).unwrap();
            for k in 0..m {
                fd[(k, l)] = (fp[k] - fm[k]) / (2.0 * h);
            }
        }
        let scale = j
            .as_slice()
            .iter()
            .fold(0.0f64, |s, v| s.max(v.abs()))
            .max(1e-12);
        worst = worst.max(j.max_abs_diff(&fd) / scale);
    }
    if worst < 1e-6 {
        Ok(format!("jacobian {worst:.1e}"))
    } else {
        Err(format!("jacobian rel err {worst:.1e} (tol 1e-6)"))
    }
}

fn ic_independence() -> Result<String, String> {
    let records = sweep(
        SweepMode::RandomIc,
        preset("case-2sp-2"),
        Scenario::OneD,
        DiffusionScale::Regular,
        50,
    );
    let mut spread: f64 = 0.0;
    for a in &records {
        for b in &records {
            for k in 0..2 {
                spread = spread.max((a.final_averages[k] - b.final_averages[k]).abs());
            }
        }
    }
    let converged = records.iter().all(|r| r.converged);
    if converged && spread < 1e-3 {
        Ok(format!("IC spread {spread:.1e}"))
    } else {
        Err(format!(
            "IC spread {spread:.1e} (tol 1e-3), all converged {converged}"
        ))
    }
}

fn worker_reproducibility() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SweepSpec::new(SweepMode::FullRandom, preset("case-2sp-2"), Scenario::OneD);
    spec.run_count = 40;
    spec.seed = SEED;
    let mut bytes = Vec::new();
    for threads in [1, 2, 4] {
        let path = dir.path().join(format!("records{threads}.csv"));
        write_records(&path, &run_sweep_parallel(&spec, Some(threads)).unwrap()).unwrap();
        bytes.push(std::fs::read(path).unwrap());
    }
    if bytes.windows(2).all(|w| w[0] == w[1]) {
        Ok("records identical for 1/2/4 workers".into())
    } else {
        Err("records differ across worker counts".into())
    }
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let checks = [
        box_preservation(&mut rng),
        mass_conservation(),
        exchangeable_symmetry(),
        operator_checks(&mut rng),
        spatial_order(),
        jacobian(&mut rng),
        ic_independence(),
        worker_reproducibility(),
    ];
    let pass = checks.iter().all(Result::is_ok);
    let detail = checks
        .iter()
        .map(|c| match c {
            Ok(s) => s.clone(),
            Err(s) => format!("FAILED {s}"),
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn report(id: usize, title: &str, o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} {id} {title}: {}", o.detail);
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut record = |id: usize, title: &str, o: Outcome| {
        report(id, title, &o);
        failed += usize::from(!o.pass);
    };
    record(1, "logistic ODE oracle", criterion_1());
    record(2, "coexistence fixed point", criterion_2());
    record(3, "qualitative cases", criterion_3());
    record(4, "diffusion-scale ordering", criterion_4());
    record(5, "extinction threshold", criterion_5());
    let (o6, sweeps) = criterion_6();
    record(6, "two-species survival table", o6);
    record(7, "three-species survival table", criterion_7());
    record(8, "factor structure", criterion_8(&sweeps));
    record(9, "property suites", criterion_9());
    println!(
        "acceptance: {} of 9 criteria failed (shared sweeps {})",
        failed,
        secs(sweeps.elapsed)
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
