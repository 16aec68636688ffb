//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use chemospread::analysis::{
    duhamel_v_oracle, exterior_supremum, interior_infimum, persistence_check, DensityHistory, PersistenceOptions,
};
use chemospread::harness::commands::cmd_sweep;
use chemospread::harness::config::{SweepAxis, SweepConfig};
use chemospread::harness::experiment::{execute, ExecuteOptions, Outcome};
use chemospread::harness::initial::Shape;
use chemospread::harness::verify::persistence_radius_for;
use chemospread::harness::RunConfig;
use chemospread::model::{Boundary, Field, Grid, Params, State, Termination};
use chemospread::solver::{run, DiffusionIntegrator, DtPolicy, FluxScheme, Observer, RunOptions, SchemeConfig};
use chemospread::theory::{self, TheoryBundle};
use chemospread::Result;

const BASE: &str = include_str!("../configs/chemotaxis_1d.json");

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn base_config() -> RunConfig {
    let mut c = RunConfig::from_json_str(BASE).expect("sample config parses");
    c.analysis.calibrate = false;
    c
}

fn fitted_speeds(outcome: &Outcome) -> Vec<(String, f64)> {
    outcome
        .fits
        .iter()
        .filter_map(|f| f.fit.as_ref().map(|fit| (f.direction.clone(), fit.speed)))
        .collect()
}

fn speeds_within(outcome: &Outcome, expected: usize, target: f64, tol: f64) -> (bool, String) {
    let speeds = fitted_speeds(outcome);
    let ok = speeds.len() == expected && speeds.iter().all(|(_, s)| (s - target).abs() / target <= tol);
    let text: Vec<String> = speeds.iter().map(|(d, s)| format!("{d}: {s:.5}")).collect();
    (ok, text.join(", "))
}

fn fisher_baseline() -> Result<Verdict> {
    let mut config = base_config();
    config.params.chi = 0.0;
    let start = Instant::now();
    let outcome = execute(&config, &ExecuteOptions { retain_states: false, snapshot_every: Some(0) })?;
    let secs = start.elapsed().as_secs_f64();
    let (ok, text) = speeds_within(&outcome, 2, 2.0, 0.03);
    verdict(ok && secs <= 60.0, format!("{text}; target 2 +-3%; {secs:.1} s"))
}

struct Trajectory {
    config: RunConfig,
    outcome: Outcome,
}

fn chemotaxis_trajectory() -> Result<Trajectory> {
    let mut config = base_config();
    config.analysis.calibrate = true;
    let outcome = execute(&config, &ExecuteOptions { retain_states: true, snapshot_every: Some(0) })?;
    Ok(Trajectory { config, outcome })
}

fn chemotaxis_speed(traj: &Trajectory) -> Result<Verdict> {
    let (ok, text) = speeds_within(&traj.outcome, 2, 2.0, 0.05);
    let mut config = base_config();
    config.sweep = Some(SweepConfig {
        axes: vec![SweepAxis {
            param: "chi".into(),
            values: vec![0.0, 0.2, 0.4, 0.6],
        }],
    });
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get()).min(4);
    let rows = cmd_sweep(&config, jobs)?;
    let mut speeds = vec![];
    for r in &rows {
        match (r.speed_min, r.speed_max) {
            (Some(lo), Some(hi)) => speeds.extend([lo, hi]),
            _ => return verdict(false, format!("sweep point chi = {} has no speed: {}", r.chi, r.message)),
        }
    }
    let lo = speeds.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = speeds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo;
    verdict(
        ok && spread <= 0.03,
        format!("{text}; chi sweep speeds in [{lo:.5}, {hi:.5}], spread {:.3}%", 100.0 * spread),
    )
}

fn front_classes() -> Result<Verdict> {
    let mut front = base_config();
    front.initial.shape = Shape::FrontLike {
        direction: vec![1.0],
        location: 0.0,
        width: 5.0,
    };
    let mut two = base_config();
    two.initial.shape = Shape::TwoSided {
        direction: vec![1.0],
        half_width: 20.0,
        width: 5.0,
    };
    let opts = ExecuteOptions { retain_states: false, snapshot_every: Some(0) };
    let a = execute(&front, &opts)?;
    let b = execute(&two, &opts)?;
    let (ok_a, text_a) = speeds_within(&a, 1, 2.0, 0.05);
    let (ok_b, text_b) = speeds_within(&b, 2, 2.0, 0.05);
    let s = fitted_speeds(&b);
    let sym = s.len() == 2 && (s[0].1 - s[1].1).abs() / s[0].1.min(s[1].1) <= 0.02;
    verdict(ok_a && ok_b && sym, format!("front-like {text_a}; two-sided {text_b}"))
}

fn dichotomy(traj: &Trajectory) -> Result<Verdict> {
    let config = &traj.config;
    let c = theory::kpp_speed(config.params.a);
    let eps = config.analysis.eps;
    let geometry = config.initial.geometry(1);
    let mut inf = f64::INFINITY;
    for s in traj.outcome.record.states.iter().filter(|s| s.t >= 60.0) {
        inf = inf
            .min(interior_infimum(&s.u, s.t, &geometry, c - eps))
            .min(interior_infimum(&s.v, s.t, &geometry, c - eps));
    }
    let last = traj.outcome.record.states.last().expect("states retained");
    let eu = exterior_supremum(&last.u, last.t, &geometry, c + eps);
    let ev = exterior_supremum(&last.v, last.t, &geometry, c + eps);
    let sup = eu.value.max(ev.value);
    verdict(
        inf > 1e-3 && sup < 1e-3 && !eu.outside_box && last.t == 120.0,
        format!("interior inf over t in [60, 120] = {inf:.6}; exterior sup at t = 120 is {sup:.3e}"),
    )
}

fn supersolution(traj: &Trajectory) -> Result<Verdict> {
    let o = &traj.outcome;
    let Some(cal) = &o.calibration else {
        return verdict(false, "no calibration".into());
    };
    let tau = cal.tau_disc;
    let r = o.residual;
    verdict(
        r.max_natural <= tau && r.max_flipped >= 10.0 * tau,
        format!(
            "max residual {:.3e} (t = {}) vs tau {tau:.3e}; flipped {:.3e} = {:.0} tau; levels {:?}",
            r.max_natural,
            r.t_natural,
            r.max_flipped,
            r.max_flipped / tau,
            cal.levels.iter().map(|l| l.2).collect::<Vec<_>>()
        ),
    )
}

fn envelope(traj: &Trajectory) -> Result<Verdict> {
    let o = &traj.outcome;
    let env = o.envelope.as_ref().expect("envelope built");
    let tau = o.calibration.as_ref().map_or(0.0, |c| c.tau_disc);
    let d_min = theory::envelope_v_coefficient(env.bound_w, traj.config.params.a, 1.0, 1.0);
    verdict(
        env.k == 0.5 && o.envelope_violation <= tau,
        format!(
            "k = {}, c = {}, M = {:.4e}, d = {:.4e} (mu M/(a+lambda) = {:.4e}); max violation {:.3e} vs tau {tau:.3e}",
            env.k, env.speed, env.bound_w, env.bound_v, d_min, o.envelope_violation
        ),
    )
}

fn eigenpairs() -> Result<Verdict> {
    let mut worst_order = f64::INFINITY;
    let mut floor_ok = true;
    let mut endpoint_gap: f64 = 0.0;
    for dim in [1usize, 2] {
        let b = TheoryBundle::new(1.0, dim, 0.5)?;
        let cmax = b.max_frame_speed();
        let steps: Vec<f64> = [100.0, 200.0, 400.0].iter().map(|k| b.ell / k).collect();
        let directions: Vec<Vec<f64>> = if dim == 1 {
            vec![vec![1.0]]
        } else {
            vec![vec![1.0, 0.0], vec![0.6, 0.8]]
        };
        for xi in &directions {
            for c in [0.0, cmax, -cmax] {
                worst_order = worst_order.min(b.eigen_residual_orders(c, xi, &steps, 16, 7)?.min_order());
            }
        }
        let (_, min) = b.min_eigenvalue_on_grid(101)?;
        floor_ok &= min >= b.lambda_floor - 1e-15;
        for c in [cmax, -cmax] {
            endpoint_gap = endpoint_gap.max((b.principal_eigenvalue(c)? - b.lambda_floor).abs());
        }
    }
    verdict(
        worst_order >= 1.9 && floor_ok && endpoint_gap <= 1e-14,
        format!("min order {worst_order:.4}; floor respected {floor_ok}; endpoint gap {endpoint_gap:.1e}"),
    )
}

fn oracle_error(n: usize, dt: f64, diffusion: DiffusionIntegrator) -> Result<f64> {
    let g = Arc::new(Grid::cube(1, 0.0, 2.0 * PI, n, Boundary::Periodic)?);
    let p = Params::new(0.5, 1.0, 1.0, 1.0, 1.0, 1)?;
    let u0 = Field::from_fn(g.clone(), |x| 1.0 + 0.3 * x[0].cos());
    let v0 = Field::from_fn(g.clone(), |x| 0.5 + 0.2 * x[0].sin());
    let initial = State::new(u0, v0.clone(), 0.0)?;
    let scheme = SchemeConfig {
        dt,
        dt_policy: DtPolicy::Fixed,
        diffusion,
        ..SchemeConfig::default()
    };
    let mut history = DensityHistory::starting_at(&initial);
    let options = RunOptions {
        horizon: 1.0,
        cadence: 1.0,
        retain_states: true,
        ..RunOptions::default()
    };
    let record = run(initial, &p, &scheme, &options, &mut [&mut history as &mut dyn Observer])?;
    let last = record.states.last().expect("final state");
    let oracle = duhamel_v_oracle(&v0, &history.times, &history.u, &p)?;
    last.v.max_abs_diff(&oracle)
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect()
}

fn duhamel() -> Result<Verdict> {
    let e_dt = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| oracle_error(1024, dt, DiffusionIntegrator::BackwardEuler))
        .collect::<Result<Vec<_>>>()?;
    let e_dx = [16, 32, 64]
        .iter()
        .map(|&n| oracle_error(n, 1e-4, DiffusionIntegrator::CrankNicolson))
        .collect::<Result<Vec<_>>>()?;
    let o_dt = orders(&e_dt);
    let o_dx = orders(&e_dx);

    // Uniform density at the logistic equilibrium, v0 = 0.
    let g = Arc::new(Grid::cube(1, 0.0, 10.0, 32, Boundary::Periodic)?);
    let p = Params::new(0.5, 1.0, 1.0, 1.0, 1.0, 1)?;
    let closed = |t: f64| p.mu / p.lambda * (1.0 - (-p.lambda * t).exp());
    let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.005).collect();
    let u: Vec<Field> = times.iter().map(|_| Field::constant(g.clone(), 1.0)).collect();
    let oracle = duhamel_v_oracle(&Field::zeros(g.clone()), &times, &u, &p)?;
    let oracle_err = oracle.values().iter().map(|v| (v - closed(2.0)).abs()).fold(0.0, f64::max);
    let initial = State::new(Field::constant(g.clone(), 1.0), Field::zeros(g.clone()), 0.0)?;
    let scheme = SchemeConfig {
        dt: 0.01,
        dt_policy: DtPolicy::Fixed,
        diffusion: DiffusionIntegrator::CrankNicolson,
        ..SchemeConfig::default()
    };
    let options = RunOptions {
        horizon: 2.0,
        cadence: 2.0,
        retain_states: true,
        ..RunOptions::default()
    };
    let record = run(initial, &p, &scheme, &options, &mut [])?;
    let solver_err = record.states.last().unwrap().v.values().iter().map(|v| (v - closed(2.0)).abs()).fold(0.0, f64::max);

    let sci = |v: &[f64]| v.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ");
    let ok = o_dt.iter().all(|&o| o >= 1.0) && o_dx.iter().all(|&o| o >= 1.9) && oracle_err <= 1e-4 && solver_err <= 1e-4;
    verdict(
        ok,
        format!(
            "dt orders {o_dt:.3?} (errors {}); dx orders {o_dx:.3?} (errors {}); closed form: oracle {oracle_err:.1e}, solver {solver_err:.1e}",
            sci(&e_dt),
            sci(&e_dx)
        ),
    )
}

fn moving_frame() -> Result<Verdict> {
    let n = 200;
    let width = 20.0;
    let g = Arc::new(Grid::cube(1, 0.0, width, n, Boundary::Periodic)?);
    let dx = g.dx()[0];
    let k = 2.0 * PI / width;
    let p = Params::new(0.5, 1.0, 1.0, 1.0, 1.0, 1)?;
    let initial = State::new(
        Field::from_fn(g.clone(), |x| 1.0 + 0.5 * (k * x[0]).cos()),
        Field::from_fn(g.clone(), |x| 1.0 + 0.3 * (k * x[0]).sin()),
        0.0,
    )?;
    let horizon = 2.0;
    let c = 1.0;
    let fixed = SchemeConfig {
        dt: dx * dx,
        dt_policy: DtPolicy::Fixed,
        flux: FluxScheme::CentralConservative,
        ..SchemeConfig::default()
    };
    let moving = SchemeConfig {
        frame_speed: c,
        frame_direction: vec![1.0],
        ..fixed.clone()
    };
    let options = RunOptions {
        horizon,
        cadence: horizon,
        retain_states: true,
        ..RunOptions::default()
    };
    let a = run(initial.clone(), &p, &fixed, &options, &mut [])?;
    let b = run(initial, &p, &moving, &options, &mut [])?;
    if a.termination != Termination::HorizonReached || b.termination != Termination::HorizonReached {
        return verdict(false, "a run stopped early".into());
    }
    let fa = a.states.last().unwrap();
    let fb = b.states.last().unwrap();
    // The moving frame sees u(x + c t); c t is a whole number of cells here.
    let shift = (c * horizon / dx).round() as usize;
    let mut err: f64 = 0.0;
    for i in 0..n {
        let j = (i + shift) % n;
        err = err
            .max((fb.u.values()[i] - fa.u.values()[j]).abs())
            .max((fb.v.values()[i] - fa.v.values()[j]).abs());
    }
    let tol = 5.0 * dx * dx * horizon.max(1.0);
    verdict(err <= tol, format!("sup difference {err:.3e} vs {tol:.3e} at dx = {dx}, t = {horizon}"))
}

fn persistence(traj: &Trajectory) -> Result<Verdict> {
    let config = &traj.config;
    let states: Vec<&State> = traj.outcome.record.states.iter().collect();
    let eta = 0.1 * config.params.a / config.params.b;
    let (radius, big_m) = persistence_radius_for(config, &states)?;
    let report = persistence_check(
        &traj.outcome.record,
        &PersistenceOptions {
            eta,
            center: vec![0.0],
            radius,
            earliest: config.analysis.persistence_start,
            burn_in: 5.0,
        },
    )?;
    let Some(delta) = report.delta_meas else {
        return verdict(false, format!("ball supremum never reached {eta}"));
    };
    let t0 = report.trigger.unwrap();
    let settled_min = report.settled_min.unwrap_or(f64::NAN);
    verdict(
        delta > 1e-3 && settled_min >= 0.5 * delta && report.settled(),
        format!(
            "2L = {radius:.4} (M = {big_m:.4}), trigger t = {t0}, delta {delta:.4}, min after burn-in {settled_min:.4}, late floor {:.4}",
            report.late_floor.unwrap_or(f64::NAN)
        ),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, result: Result<Verdict>| {
        let (pass, detail) = match result {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };

    report(1, "fisher_kpp_baseline_speed", fisher_baseline());
    match chemotaxis_trajectory() {
        Ok(traj) => {
            if let Termination::StepFailure { t, message } = &traj.outcome.record.termination {
                eprintln!("chemotaxis trajectory stopped at t = {t}: {message}");
            }
            report(2, "chemotaxis_spreading_speed", chemotaxis_speed(&traj));
            report(3, "front_like_and_two_sided", front_classes());
            report(4, "interior_exterior_dichotomy", dichotomy(&traj));
            report(5, "supersolution_inequality", supersolution(&traj));
            report(6, "exponential_envelope", envelope(&traj));
            report(7, "eigenpair_verification", eigenpairs());
            report(8, "duhamel_oracle", duhamel());
            report(9, "moving_frame_equivalence", moving_frame());
            report(10, "persistence", persistence(&traj));
        }
        Err(e) => {
            for (id, name) in [(2, "chemotaxis_spreading_speed"), (4, "interior_exterior_dichotomy"), (5, "supersolution_inequality"), (6, "exponential_envelope"), (10, "persistence")] {
                report(id, name, Err(chemospread::Error::Domain(format!("trajectory failed: {e}"))));
            }
            report(3, "front_like_and_two_sided", front_classes());
            report(7, "eigenpair_verification", eigenpairs());
            report(8, "duhamel_oracle", duhamel());
            report(9, "moving_frame_equivalence", moving_frame());
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
