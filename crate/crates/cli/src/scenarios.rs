use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use serde_json::Value;

use ptkdv::dynamics::{eps0_exact, evolve, evolve_partial, fit_rightmost_pulse, kdv_soliton, EvolutionConfig, Trajectory};
use ptkdv::fields::{distance, make_grid, sample, Field, Grid, Interpolant, Norm};
use ptkdv::invariants::{drift_report, eps3_energy, eps3_momentum, parts_identity_residual, Method, Quantity};
use ptkdv::waves::{half_width, match_emergent_wave, peak_height, scorer_residual, solve_profile, Profile};

use crate::{Check, Scenario, ScenarioName, Summary};

const FAMILY_HEIGHTS: [f64; 4] = [-2.73802, 2.45839, -2.30305, 2.20797];
#[allow(clippy::approx_constant)]
const FAMILY_WIDTHS: [f64; 4] = [3.15, 3.14, 3.19, 3.26];
const HEIGHT_TOLERANCE: f64 = 1e-3;
const WIDTH_TOLERANCE: f64 = 0.05;
const EDGE_LIMIT: f64 = 1e-10;
const KDV_DRIFT_LIMIT: f64 = 1e-8;
const EPS3_DRIFT_LIMIT: f64 = 1e-6;

struct Ctx<'a> {
    scenario: &'a Scenario,
    dir: PathBuf,
    summary: Summary,
}

impl Ctx<'_> {
    fn p(&self, key: &str) -> f64 {
        self.scenario.parameters[key]
    }

    fn check(&mut self, check: Check) {
        self.summary.checks.push(check);
    }

    fn measure(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.measurements.insert(key.into(), value.into());
    }

    fn note(&mut self, note: impl Into<String>) {
        self.summary.notes.push(note.into());
    }

    fn grid(&self) -> Result<Arc<Grid>> {
        Ok(make_grid(self.p("L"), self.p("N") as usize)?)
    }

    fn write_trajectory(&self, traj: &Trajectory) -> Result<()> {
        traj.write_dir(&self.dir.join("trajectory"))
            .context("writing trajectory")?;
        Ok(())
    }

    /// Drift of `quantity` along `traj`; writes `drift_<quantity>.{csv,json}`.
    fn drift(&mut self, traj: &Trajectory, quantity: Quantity, limit: f64) -> Result<()> {
        let name = format!("drift_{quantity}");
        match drift_report(traj, quantity) {
            Ok(report) => {
                report.write_csv(&self.dir.join(format!("{name}.csv")))?;
                report.write_summary(&self.dir.join(format!("{name}.json")))?;
                self.check(Check::below(&name, report.relative_drift, limit));
            }
            Err(err) => {
                self.note(format!("{name}: {err}"));
                self.check(Check::missing(&name, limit));
            }
        }
        Ok(())
    }

    fn edge_check(&mut self, u0: &Field) {
        self.check(Check::below("initial_edge_magnitude", u0.edge_magnitude(), EDGE_LIMIT));
    }
}

pub(crate) fn run(scenario: &Scenario) -> Result<Summary> {
    let dir = scenario.output_dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = scenario.name;
    let mut ctx = Ctx {
        scenario,
        dir: dir.clone(),
        summary: Summary::new(name.as_str(), name.figure(), scenario.parameters.clone()),
    };
    let outcome = match name {
        ScenarioName::KdvSolitonBirth => kdv_soliton_birth(&mut ctx),
        ScenarioName::Eps0Linear => eps0_linear(&mut ctx),
        ScenarioName::Eps3Solitary => eps3_solitary(&mut ctx),
        ScenarioName::Eps3Birth => eps3_birth(&mut ctx),
        ScenarioName::Eps3PositivePulse => eps3_positive_pulse(&mut ctx),
        ScenarioName::OddFamily => odd_family(&mut ctx),
        ScenarioName::ConservationSuite => conservation_suite(&mut ctx),
    };
    if let Err(err) = outcome {
        ctx.summary.failure = Some(format!("{err:#}"));
    }
    ctx.summary.finish();
    let path = dir.join("summary.json");
    ctx.summary
        .write(&path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(ctx.summary)
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// Caption times up to `t_final`, ending exactly at `t_final`.
fn caption_times(caption: &[f64], t_final: f64) -> Vec<f64> {
    let mut times: Vec<f64> = caption.iter().copied().filter(|&t| t < t_final).collect();
    times.push(t_final);
    times
}

/// `count` equal intervals over `[0, t_final]`.
fn uniform_times(t_final: f64, count: usize) -> Vec<f64> {
    (0..=count).map(|j| t_final * j as f64 / count as f64).collect()
}

fn kdv_soliton_birth(ctx: &mut Ctx) -> Result<()> {
    let grid = ctx.grid()?;
    let u0 = sample(|x| 3.0 * sech(x), &grid, 0.0);
    ctx.edge_check(&u0);
    let t_final = ctx.p("T");
    let times = caption_times(&[0.0, 0.8, 3.5, 7.0, 14.0], t_final);
    let traj = evolve(&u0, &EvolutionConfig::new(1.0, ctx.p("dt"), times)).context("evolving")?;
    ctx.write_trajectory(&traj)?;
    ctx.drift(&traj, Quantity::KdvMomentum, KDV_DRIFT_LIMIT)?;
    ctx.drift(&traj, Quantity::KdvEnergy, KDV_DRIFT_LIMIT)?;
    if t_final >= 14.0 {
        let fit = fit_rightmost_pulse(traj.last()).context("fitting the leading pulse")?;
        ctx.measure("pulse_fit", serde_json::to_value(fit)?);
        ctx.check(Check::below("pulse_fit_rms_relative", fit.rms_residual / fit.amplitude, 0.02));
    } else {
        ctx.note("pulse fit skipped: pulses are not yet separated before t = 14");
    }
    Ok(())
}

fn eps0_linear(ctx: &mut Ctx) -> Result<()> {
    let grid = ctx.grid()?;
    let u0 = sample(|x| 3.0 * sech(x), &grid, 0.0);
    ctx.edge_check(&u0);
    let times = caption_times(&[0.0, 5.0, 10.0, 20.0, 40.0, 80.0], ctx.p("T"));
    // the ε = 0 term is linear, so there is nothing to dealias
    let config = EvolutionConfig::new(0.0, ctx.p("dt"), times).with_dealias(false);
    let traj = evolve(&u0, &config).context("evolving")?;
    ctx.write_trajectory(&traj)?;
    let t_check = 5.0;
    if traj.times().iter().any(|&t| (t - t_check).abs() < 1e-12) {
        let exact = eps0_exact(&u0, t_check).context("evaluating the exact solution")?;
        exact.write_csv(fs::File::create(ctx.dir.join("exact_t5.csv"))?)?;
        let d = distance(traj.at(t_check), &exact, Norm::Linf)?;
        ctx.check(Check::below("linf_vs_exact_t5", d, 1e-6));
    } else {
        ctx.note("comparison with the exact solution needs T ≥ 5");
    }
    let moduli: Vec<Value> = traj.snapshots.iter().map(|s| s.max_abs().into()).collect();
    ctx.measure("max_modulus", moduli);
    Ok(())
}

fn profile_checks(ctx: &mut Ctx, profile: &Profile) -> Result<()> {
    let (n, c) = (profile.n, profile.c);
    let tag = |what: &str| format!("n{n}_{what}");
    let peak = peak_height(profile);
    let width = half_width(profile).ok();
    ctx.measure(&tag("summary"), serde_json::to_value(profile.summary())?);
    let i = (n - 1) as usize;
    if i < FAMILY_HEIGHTS.len() && c == 1.0 {
        ctx.check(Check::within(&tag("peak"), peak, FAMILY_HEIGHTS[i], HEIGHT_TOLERANCE));
        match width {
            Some(w) => ctx.check(Check::within(&tag("half_width"), w, FAMILY_WIDTHS[i], WIDTH_TOLERANCE)),
            None => ctx.check(Check::missing(&tag("half_width"), WIDTH_TOLERANCE)),
        }
    } else if n == 1 {
        // f_c(z) = f_1(√c z): the height does not depend on c
        ctx.check(Check::within(&tag("peak"), peak, FAMILY_HEIGHTS[0], HEIGHT_TOLERANCE));
        if let Some(w) = width {
            let target = FAMILY_WIDTHS[0] / c.sqrt();
            ctx.check(Check::within(&tag("half_width"), w, target, WIDTH_TOLERANCE / c.sqrt()));
        }
    }
    Ok(())
}

fn write_profile(ctx: &Ctx, profile: &Profile, stem: &str) -> Result<()> {
    profile.write_csv(&ctx.dir.join(format!("{stem}.csv")))?;
    profile.write_json(&ctx.dir.join(format!("{stem}.json")))?;
    Ok(())
}

fn eps3_solitary(ctx: &mut Ctx) -> Result<()> {
    let (n, c) = (ctx.p("n") as u32, ctx.p("c"));
    let profile = solve_profile(n, c, ctx.p("tol")).context("solving the profile")?;
    write_profile(ctx, &profile, "profile")?;
    profile_checks(ctx, &profile)?;
    // linear tail: f ~ a e^{-√c z}
    let r = c.sqrt();
    let ratio = profile.value(6.0 / r) / profile.value(5.0 / r);
    let decay = (-1.0f64).exp();
    ctx.check(Check::within("tail_decay_ratio", ratio, decay, 0.02 * decay));
    if n == 1 {
        ctx.check(Check::below("scorer_residual", scorer_residual(&profile)?, 1e-4));
    }
    Ok(())
}

fn eps3_birth(ctx: &mut Ctx) -> Result<()> {
    let grid = ctx.grid()?;
    let u0 = sample(|x| -3.0 * sech(x), &grid, 0.0);
    ctx.edge_check(&u0);
    let t_final = ctx.p("T");
    let times = caption_times(&[0.0, 0.05, 0.25, 0.55, 1.0, 2.0], t_final);
    let (traj, failure) = evolve_partial(&u0, &EvolutionConfig::new(3.0, ctx.p("dt"), times))?;
    ctx.write_trajectory(&traj)?;
    ctx.measure("reached_time", traj.last().time());
    let complete = failure.is_none();
    if let Some(err) = &failure {
        ctx.summary.failure = Some(format!("evolving: {err}"));
        if let ptkdv::Error::BlowUp { time, .. } = err {
            ctx.measure("blow_up_time", *time);
        }
    }
    ctx.check(Check::expect("reached_final_time", complete));
    ctx.drift(&traj, Quantity::Eps3Momentum(Method::Airy), EPS3_DRIFT_LIMIT)?;
    ctx.drift(&traj, Quantity::Eps3Energy(Method::Airy), EPS3_DRIFT_LIMIT)?;
    let name = "wave_mismatch_relative";
    if !complete || traj.snapshots.len() < 2 {
        ctx.check(Check::missing(name, 0.05));
        return Ok(());
    }
    let half = 0.5 * grid.length();
    match match_emergent_wave(&traj, (-half, half)) {
        Ok(m) => {
            ctx.measure("wave_match", serde_json::json!({
                "c_fit": m.c_fit, "mismatch": m.mismatch, "peak": m.peak,
                "position": m.position, "profile_peak": m.profile_peak,
            }));
            ctx.check(Check::below(name, m.mismatch / m.peak.abs(), 0.05));
        }
        Err(err) => {
            ctx.note(format!("wave match: {err}"));
            ctx.check(Check::missing(name, 0.05));
        }
    }
    Ok(())
}

fn eps3_positive_pulse(ctx: &mut Ctx) -> Result<()> {
    let grid = ctx.grid()?;
    let u0 = sample(|x| 3.0 * sech(x), &grid, 0.0);
    ctx.edge_check(&u0);
    let times = caption_times(&[0.0, 6.0, 12.0, 19.0], ctx.p("T"));
    let traj = evolve(&u0, &EvolutionConfig::new(3.0, ctx.p("dt"), times)).context("evolving")?;
    ctx.write_trajectory(&traj)?;
    if traj.snapshots.len() < 2 {
        ctx.note("wave detection needs at least two snapshots");
        ctx.check(Check::expect("no_emergent_wave", false));
        return Ok(());
    }
    let half = 0.5 * grid.length();
    match match_emergent_wave(&traj, (-half, half)) {
        Err(ptkdv::Error::NoWave(why)) => {
            ctx.note(format!("no solitary wave detected: {why}"));
            ctx.check(Check::expect("no_emergent_wave", true));
        }
        Err(err) => return Err(err).context("detecting an emergent wave"),
        Ok(m) => {
            ctx.note(format!("solitary wave detected with speed {:.4}", m.c_fit));
            ctx.check(Check::expect("no_emergent_wave", false));
        }
    }
    Ok(())
}

fn odd_family(ctx: &mut Ctx) -> Result<()> {
    let (count, c, tol) = (ctx.p("n") as u32, ctx.p("c"), ctx.p("tol"));
    let solve = |n: u32| solve_profile(n, c, tol).with_context(|| format!("solving n = {n}"));
    let profiles: Vec<Result<Profile>> = if ctx.scenario.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = (1..=count).map(|n| s.spawn(move || solve(n))).collect();
            handles.into_iter().map(|h| h.join().expect("profile solve panicked")).collect()
        })
    } else {
        (1..=count).map(solve).collect()
    };
    let mut heights = Vec::new();
    for profile in profiles {
        let profile = profile?;
        write_profile(ctx, &profile, &format!("profile_n{}", profile.n))?;
        heights.push(Value::from(peak_height(&profile)));
        profile_checks(ctx, &profile)?;
    }
    ctx.measure("peak_heights", heights);
    Ok(())
}

fn conservation_suite(ctx: &mut Ctx) -> Result<()> {
    kdv_fidelity(ctx).context("KdV soliton run")?;
    eps3_conservation(ctx).context("ε = 3 run")?;
    static_identities(ctx)
}

fn kdv_fidelity(ctx: &mut Ctx) -> Result<()> {
    let grid = make_grid(80.0, 1024)?;
    let c = 1.0;
    let soliton = kdv_soliton(c, 0.0)?;
    let u0 = soliton.sample(&grid, 0.0);
    let t_final = ctx.p("T_kdv");
    let traj = evolve(&u0, &EvolutionConfig::new(1.0, ctx.p("dt_kdv"), uniform_times(t_final, 20)))?;
    traj.write_dir(&ctx.dir.join("kdv_trajectory"))?;
    let last = traj.last();
    let d = distance(last, &soliton.sample(&grid, t_final), Norm::Linf)?;
    ctx.check(Check::below("kdv_soliton_linf", d, 1e-4));
    if t_final > 0.0 {
        let u = last.as_real().expect("KdV runs on a real carrier");
        let j = (0..u.len()).max_by(|&a, &b| u[a].total_cmp(&u[b])).unwrap_or(0);
        let x = Interpolant::new(last)?.refine_extremum(grid.nodes()[j], 2.0 * grid.spacing())?;
        let l = grid.length();
        let lag = (x - c * t_final + 0.5 * l).rem_euclid(l) - 0.5 * l;
        let speed = c + lag / t_final;
        ctx.measure("kdv_speed", speed);
        ctx.check(Check::below("kdv_speed_relative_error", (speed - c).abs() / c, 0.005));
    }
    ctx.drift(&traj, Quantity::KdvMomentum, KDV_DRIFT_LIMIT)?;
    ctx.drift(&traj, Quantity::KdvEnergy, KDV_DRIFT_LIMIT)?;
    Ok(())
}

fn eps3_conservation(ctx: &mut Ctx) -> Result<()> {
    let grid = make_grid(100.0, 2048)?;
    let u0 = sample(|x| -3.0 * sech(x), &grid, 0.0);
    let config = EvolutionConfig::new(3.0, ctx.p("dt_eps3"), uniform_times(ctx.p("T_eps3"), 40));
    let (traj, failure) = evolve_partial(&u0, &config)?;
    traj.write_dir(&ctx.dir.join("eps3_trajectory"))?;
    ctx.measure("eps3_reached_time", traj.last().time());
    if let Some(err) = &failure {
        ctx.summary.failure = Some(format!("ε = 3 run: {err}"));
    }
    ctx.check(Check::expect("eps3_reached_final_time", failure.is_none()));
    ctx.drift(&traj, Quantity::Eps3Momentum(Method::Airy), EPS3_DRIFT_LIMIT)?;
    ctx.drift(&traj, Quantity::Eps3Energy(Method::Airy), EPS3_DRIFT_LIMIT)?;
    Ok(())
}

fn static_identities(ctx: &mut Ctx) -> Result<()> {
    let grid = make_grid(100.0, 2048)?;
    for (label, a) in [("minus", -3.0), ("plus", 3.0)] {
        let u = sample(|x| a * sech(x), &grid, 0.0);
        let rel = |s: f64, z: f64| (s - z).abs() / z.abs().max(f64::MIN_POSITIVE);
        let (ps, pa) = (eps3_momentum(&u, Method::Series)?, eps3_momentum(&u, Method::Airy)?);
        let (es, ea) = (eps3_energy(&u, Method::Series)?, eps3_energy(&u, Method::Airy)?);
        ctx.check(Check::below(&format!("momentum_methods_{label}3sech"), rel(ps, pa), 1e-8));
        ctx.check(Check::below(&format!("energy_methods_{label}3sech"), rel(es, ea), 1e-8));
        ctx.check(Check::expect(&format!("energy_positive_{label}3sech"), ea > 0.0));
    }
    let u = sample(sech, &grid, 0.0);
    for power in [1, 4] {
        let r = parts_identity_residual(&u, power)?;
        ctx.check(Check::below(&format!("parts_identity_N{power}"), r, 1e-8));
    }
    Ok(())
}
