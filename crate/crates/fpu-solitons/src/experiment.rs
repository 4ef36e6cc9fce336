//! Experiment runners behind the command-line interface.
//!
//! Each subcommand maps to one runner that writes CSV/JSON artifacts into
//! the output directory and finishes with `manifest.json` naming every file
//! with its SHA-256 content hash, the config echo, and the check verdicts.
//! Runners iterate in fixed orders and seed nothing from the clock, so the
//! numeric outputs of two runs of the same config are byte-identical (the
//! manifest's wall time is the one intentional exception).

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Kind};
use crate::diagnostics::{fitted_decay_rate, free_decay_bound, interaction_size, Background};
use crate::error::Error;
use crate::field::LatticeField;
use crate::fit;
use crate::integrate::{default_dt, integrate};
use crate::modulation::{track, DecomposeOptions};
use crate::potential::Potential;
use crate::profile::{solve_profile, GridSpec, ProfileFamily};
use crate::shooting::{
    construct_limit, shooting_window, u_plus_sum, validate_forward, SolitonParameters,
    DEFAULT_EPS0, DEFAULT_L0,
};
use crate::weights::{weighted_norm, WeightSpec};
use crate::Result;

/// One artifact written by a runner.
#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// One pass/fail verdict recorded by a runner.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Everything a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub kind: Kind,
    pub out_dir: PathBuf,
    pub files: Vec<FileRecord>,
    pub checks: Vec<CheckRecord>,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Collects artifacts, hashing as it writes.
struct Sink {
    out_dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Sink {
    fn new(out_dir: &Path) -> Result<Sink> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Sink {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.out_dir.join(name), bytes)?;
        let mut h = Sha256::new();
        h.update(bytes);
        self.files.push(FileRecord {
            name: name.to_string(),
            sha256: format!("{:x}", h.finalize()),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| Error::bad_input(format!("{name}: {e}")))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

fn check(checks: &mut Vec<CheckRecord>, name: &str, passed: bool, detail: String) {
    checks.push(CheckRecord {
        name: name.to_string(),
        passed,
        detail,
    });
}

fn wave_params(
    eps: f64,
    k: &[f64],
    gamma: &[f64],
    l0: Option<f64>,
    eps0: Option<f64>,
) -> Result<SolitonParameters> {
    SolitonParameters::with_limits(
        eps,
        k.to_vec(),
        gamma.to_vec(),
        l0.unwrap_or(DEFAULT_L0),
        eps0.unwrap_or(DEFAULT_EPS0),
    )
}

/// A speed family bracketing every prescribed wave with working margin for
/// the modulation Newton iterations.
fn family_for(params: &SolitonParameters, pot: &Potential, tol: f64) -> Result<ProfileFamily> {
    let e1 = params.decay_scale();
    let top = *params.speeds().last().expect("at least one wave");
    let c_lo = 1.0 + (0.75 * e1).powi(2) / 6.0;
    let c_hi = 1.0 + 1.3 * (top - 1.0);
    let grid = GridSpec {
        tol,
        ..GridSpec::default()
    };
    ProfileFamily::build(pot, c_lo, c_hi, 12, &grid)
}

/// Observation times `0, every, 2·every, …` ending exactly at `t_end`.
fn observation_times(t_end: f64, every: f64) -> Vec<f64> {
    let count = (t_end / every).floor() as usize;
    let mut ts: Vec<f64> = (0..=count).map(|j| j as f64 * every).collect();
    if ts.last().map_or(true, |&l| l < t_end - 1e-9 * (1.0 + t_end)) {
        ts.push(t_end);
    }
    ts
}

/// Runs the experiment the config was bound to, inside a worker pool of the
/// resolved size, and writes the manifest.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let started = Instant::now();
    let workers = cfg.workers()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::bad_input(format!("worker pool: {e}")))?;

    let mut sink = Sink::new(out_dir)?;
    let mut checks = Vec::new();
    pool.install(|| match cfg.kind {
        Kind::Profile => run_profile(cfg, &mut sink, &mut checks),
        Kind::Simulate => run_simulate(cfg, &mut sink, &mut checks),
        Kind::Construct => run_construct(cfg, &mut sink, &mut checks),
        Kind::Decompose => run_decompose(cfg, &mut sink, &mut checks),
        Kind::Diagnose => run_diagnose(cfg, &mut sink, &mut checks),
    })?;

    #[derive(Serialize)]
    struct Manifest<'a> {
        command: &'a str,
        package: &'a str,
        version: &'a str,
        workers: usize,
        wall_seconds: f64,
        all_passed: bool,
        checks: &'a [CheckRecord],
        files: &'a [FileRecord],
        config: &'a str,
    }
    let all_passed = checks.iter().all(|c| c.passed);
    let manifest = Manifest {
        command: cfg.kind.name(),
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        workers,
        wall_seconds: started.elapsed().as_secs_f64(),
        all_passed,
        checks: &checks,
        files: &sink.files,
        config: &cfg.echo,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::bad_input(format!("manifest: {e}")))?;
    bytes.push(b'\n');
    std::fs::write(out_dir.join("manifest.json"), &bytes)?;

    Ok(RunOutcome {
        kind: cfg.kind,
        out_dir: out_dir.to_path_buf(),
        files: sink.files,
        checks,
    })
}

fn run_profile(
    cfg: &ExperimentConfig,
    sink: &mut Sink,
    checks: &mut Vec<CheckRecord>,
) -> Result<()> {
    let s = cfg.file.profile.as_ref().expect("validated");
    let c = s
        .c
        .unwrap_or_else(|| crate::profile::c_of_eps(s.eps.expect("validated")));
    let pot = cfg.run.potential()?;
    let grid = GridSpec {
        tol: cfg.run.profile_residual_tol,
        ..GridSpec::default()
    };
    let wave = solve_profile(c, &pot, &grid)?;

    let mut csv = Vec::new();
    wave.write_csv(&mut csv)?;
    sink.write("profile.csv", &csv)?;

    #[derive(Serialize)]
    struct Summary {
        c: f64,
        eps: f64,
        kappa: f64,
        residual: f64,
        amplitude: f64,
        kdv_limit_error: f64,
    }
    sink.write_json(
        "profile.json",
        &Summary {
            c: wave.c,
            eps: wave.eps,
            kappa: wave.kappa,
            residual: wave.residual,
            amplitude: wave.amplitude(),
            kdv_limit_error: wave.kdv_limit_error(),
        },
    )?;
    check(
        checks,
        "profile_residual_within_tolerance",
        wave.residual <= cfg.run.profile_residual_tol,
        format!("residual {:.3e}", wave.residual),
    );
    Ok(())
}

fn run_simulate(
    cfg: &ExperimentConfig,
    sink: &mut Sink,
    checks: &mut Vec<CheckRecord>,
) -> Result<()> {
    let s = cfg.file.simulate.as_ref().expect("validated");
    let pot = cfg.run.potential()?;
    let params = wave_params(s.eps, &s.k, &s.gamma, s.l0, s.eps0)?;
    let family = family_for(&params, &pot, cfg.run.profile_residual_tol)?;
    let (lo, hi) = shooting_window(&params, 0.0, s.t_end);
    let u0 = u_plus_sum(&params, &family, 0.0, lo, hi)?;
    let dt = s.dt.unwrap_or_else(|| default_dt(s.eps));
    let every = s.observe_every.unwrap_or(s.t_end / 8.0);
    let obs = observation_times(s.t_end, every);
    let traj = integrate(&u0, &pot, 0.0, s.t_end, dt, &obs)?;

    let mut csv = Vec::new();
    traj.write_energy_csv(&mut csv)?;
    sink.write("energy.csv", &csv)?;
    for (j, state) in traj.states.iter().enumerate() {
        let mut f = Vec::new();
        state.write_csv(&mut f)?;
        sink.write(&format!("state_{j:04}.csv", j = j), &f)?;
    }

    #[derive(Serialize)]
    struct Summary {
        t_end: f64,
        dt: f64,
        window: (i64, i64),
        snapshots: usize,
        max_drift: f64,
    }
    sink.write_json(
        "simulate.json",
        &Summary {
            t_end: s.t_end,
            dt,
            window: (lo, hi),
            snapshots: traj.states.len(),
            max_drift: traj.max_drift(),
        },
    )?;
    check(
        checks,
        "energy_drift_within_tolerance",
        !traj.drift_warning,
        format!("max relative drift {:.3e}", traj.max_drift()),
    );
    Ok(())
}

fn run_construct(
    cfg: &ExperimentConfig,
    sink: &mut Sink,
    checks: &mut Vec<CheckRecord>,
) -> Result<()> {
    let s = cfg.file.construct.as_ref().expect("validated");
    let pot = cfg.run.potential()?;
    let params = wave_params(s.eps, &s.k, &s.gamma, s.l0, s.eps0)?;
    let family = family_for(&params, &pot, cfg.run.profile_residual_tol)?;
    let dt = s.dt.unwrap_or_else(|| default_dt(s.eps));
    let (limit, report) =
        construct_limit(&params, &family, s.t_start, &s.n_schedule, s.tol, dt)?;

    // One row per pairwise difference, keyed by the earlier terminal time
    // (the abscissa the rate fit uses).
    let mut csv = Vec::new();
    {
        use std::io::Write;
        writeln!(&mut csv, "n,d_n,l2_diff")?;
        for (j, delta) in report.deltas.iter().enumerate() {
            writeln!(
                &mut csv,
                "{:.16e},{:.16e},{:.16e}",
                report.ns[j], report.d_of_n[j], delta
            )?;
        }
    }
    sink.write("shoot_diffs.csv", &csv)?;

    let mut limit_csv = Vec::new();
    limit.write_csv(&mut limit_csv)?;
    sink.write("limit.csv", &limit_csv)?;

    #[derive(Serialize)]
    struct ForwardSummary {
        horizon: f64,
        beta: Option<f64>,
        r_squared: Option<f64>,
        e_at_start: f64,
    }
    #[derive(Serialize)]
    struct Summary {
        ns: Vec<f64>,
        final_delta: f64,
        converged_early: bool,
        rate_slope: Option<f64>,
        rate_r_squared: Option<f64>,
        tol: f64,
        forward: Option<ForwardSummary>,
    }

    let mut forward = None;
    if let Some(horizon) = s.forward_horizon {
        let every = s.observe_every.unwrap_or(horizon / 10.0);
        let fr = validate_forward(&limit, &params, &family, s.t_start, horizon, dt, every)?;
        let mut fcsv = Vec::new();
        {
            use std::io::Write;
            writeln!(&mut fcsv, "t,h_t,l2_err")?;
            for ((t, h), e) in fr.times.iter().zip(&fr.h_of_t).zip(&fr.errors) {
                writeln!(&mut fcsv, "{t:.16e},{h:.16e},{e:.16e}")?;
            }
        }
        sink.write("forward_error.csv", &fcsv)?;
        if let Some(beta) = fr.beta {
            check(
                checks,
                "forward_deviation_decays",
                beta > 0.0,
                format!("beta {beta:.4e}"),
            );
        }
        check(
            checks,
            "forward_errors_finite",
            fr.errors.iter().all(|e| e.is_finite()),
            format!("{} samples", fr.errors.len()),
        );
        forward = Some(ForwardSummary {
            horizon,
            beta: fr.beta,
            r_squared: fr.fit.as_ref().map(|f| f.r_squared),
            e_at_start: fr.e_at_start(),
        });
    }

    if params.n() == 1 {
        let worst = report
            .deltas
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        check(
            checks,
            "one_wave_diffs_tiny",
            worst <= 1e-6,
            format!("max diff {worst:.3e}"),
        );
    }
    if let Some(f) = &report.rate_fit {
        check(
            checks,
            "cauchy_rate_fit_reliable",
            f.reliable() && f.slope < 0.0,
            format!("slope {:.4e}, R^2 {:.4}", f.slope, f.r_squared),
        );
    }

    sink.write_json(
        "construct.json",
        &Summary {
            ns: report.ns.clone(),
            final_delta: report.final_delta(),
            converged_early: report.converged_early,
            rate_slope: report.rate_fit.as_ref().map(|f| f.slope),
            rate_r_squared: report.rate_fit.as_ref().map(|f| f.r_squared),
            tol: s.tol,
            forward,
        },
    )?;
    Ok(())
}

fn run_decompose(
    cfg: &ExperimentConfig,
    sink: &mut Sink,
    checks: &mut Vec<CheckRecord>,
) -> Result<()> {
    let s = cfg.file.decompose.as_ref().expect("validated");
    let pot = cfg.run.potential()?;
    let params = wave_params(s.eps, &s.k, &s.gamma, s.l0, s.eps0)?;
    let family = family_for(&params, &pot, cfg.run.profile_residual_tol)?;
    let (lo, hi) = shooting_window(&params, 0.0, s.t_end);
    let u0 = u_plus_sum(&params, &family, 0.0, lo, hi)?;
    let dt = s.dt.unwrap_or_else(|| default_dt(s.eps));
    let every = s.observe_every.unwrap_or(s.t_end / 10.0);
    let obs = observation_times(s.t_end, every);
    let traj = integrate(&u0, &pot, 0.0, s.t_end, dt, &obs)?;

    let opts = DecomposeOptions {
        orth_tol_rel: cfg.run.orth_tol,
        ..DecomposeOptions::default()
    };
    let series = track(&traj, &params.speeds(), &params.centers(0.0), &family, &opts)?;

    let n = params.n();
    let mut csv = Vec::new();
    {
        use std::io::Write;
        let mut header = String::from("t");
        for i in 1..=n {
            header.push_str(&format!(",c_{i}"));
        }
        for i in 1..=n {
            header.push_str(&format!(",x_{i}"));
        }
        header.push_str(",l2_residual,w_residual,orth_residual_max");
        writeln!(&mut csv, "{header}")?;
        for p in &series.points {
            let (l2, w) = p.residual_norms();
            let mut row = format!("{:.16e}", p.t);
            for i in 0..n {
                row.push_str(&format!(",{:.16e}", p.state.c[i]));
            }
            for i in 0..n {
                row.push_str(&format!(",{:.16e}", p.state.x[i]));
            }
            row.push_str(&format!(
                ",{:.16e},{:.16e},{:.16e}",
                l2,
                w,
                p.state.max_orth_residual()
            ));
            writeln!(&mut csv, "{row}")?;
        }
    }
    sink.write("modulation.csv", &csv)?;

    #[derive(Serialize)]
    struct Summary {
        points: usize,
        truncated: bool,
        speed_drift_max: f64,
    }
    let mut drift = 0.0f64;
    for i in 0..n {
        for v in series.speeds(i) {
            drift = drift.max((v - params.speed(i)).abs());
        }
    }
    sink.write_json(
        "decompose.json",
        &Summary {
            points: series.points.len(),
            truncated: series.truncated,
            speed_drift_max: drift,
        },
    )?;
    check(
        checks,
        "tracking_complete",
        !series.truncated,
        format!("{} points", series.points.len()),
    );
    Ok(())
}

fn run_diagnose(
    cfg: &ExperimentConfig,
    sink: &mut Sink,
    checks: &mut Vec<CheckRecord>,
) -> Result<()> {
    let s = cfg.file.diagnose.as_ref().expect("validated");
    let pot = cfg.run.potential()?;
    match s.experiment.as_str() {
        "interaction" => {
            let eps = s.eps.expect("validated");
            let k = s.k.as_ref().expect("validated");
            let seps = s.separations.as_ref().expect("validated");
            let grid = GridSpec {
                tol: cfg.run.profile_residual_tol,
                ..GridSpec::default()
            };
            let c1 = crate::profile::c_of_eps(k[0] * eps);
            let c2 = crate::profile::c_of_eps(k[1] * eps);
            let w1 = solve_profile(c1, &pot, &grid)?;
            let w2 = solve_profile(c2, &pot, &grid)?;

            let mut rows = Vec::new();
            for &sep in seps {
                let (l1, linf) = interaction_size(&w1.u, &w2.u, sep);
                rows.push((sep, l1, linf));
            }
            let mut csv = Vec::new();
            {
                use std::io::Write;
                writeln!(&mut csv, "sep,l1,linf")?;
                for (sep, l1, linf) in &rows {
                    writeln!(&mut csv, "{sep:.16e},{l1:.16e},{linf:.16e}")?;
                }
            }
            sink.write("interaction.csv", &csv)?;

            let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let f = fit::exponential_fit(&xs, &ys)?;
            #[derive(Serialize)]
            struct Summary {
                slope: f64,
                r_squared: f64,
                two_kappa_c1: f64,
                k1_eps: f64,
            }
            sink.write_json(
                "interaction.json",
                &Summary {
                    slope: f.slope,
                    r_squared: f.r_squared,
                    two_kappa_c1: 2.0 * crate::profile::kappa(c1),
                    k1_eps: k[0] * eps,
                },
            )?;
            check(
                checks,
                "interaction_fit_reliable",
                f.reliable() && f.slope < 0.0,
                format!("slope {:.4e}, R^2 {:.4}", f.slope, f.r_squared),
            );
        }
        "free-decay" => {
            let a = s.a.expect("validated");
            let c = s.c.expect("validated");
            let t_end = s.t_end.expect("validated");
            let dt = s.dt.unwrap_or(0.01);
            let lo = -200i64;
            let hi = (c * t_end).ceil() as i64 + 300;
            let mut seed = LatticeField::zeros(lo, hi);
            for n in -30..=30 {
                let i = (n - lo) as usize;
                let y = n as f64;
                seed.r[i] = (-y * y / 50.0).exp();
                seed.p[i] = 0.5 * (-y * y / 50.0).exp();
            }
            let every = t_end / 75.0;
            let obs = observation_times(t_end, every);
            let run = crate::diagnostics::linearized_evolve(
                &Background::Zero,
                &pot,
                &seed,
                0.0,
                t_end,
                dt,
                &obs,
                None,
            )?;
            let norms: Vec<f64> = run
                .times
                .iter()
                .zip(&run.states)
                .map(|(t, st)| weighted_norm(st, &WeightSpec::x_norm(a, c * t)))
                .collect();
            let mut csv = Vec::new();
            {
                use std::io::Write;
                writeln!(&mut csv, "t,weighted_norm")?;
                for (t, v) in run.times.iter().zip(&norms) {
                    writeln!(&mut csv, "{t:.16e},{v:.16e}")?;
                }
            }
            sink.write("free_decay.csv", &csv)?;

            let (rate, f) = fitted_decay_rate(&run.times, &norms, 0.47 * t_end)?;
            let bound = free_decay_bound(c, a);
            #[derive(Serialize)]
            struct Summary {
                rate: f64,
                bound: f64,
                r_squared: f64,
            }
            sink.write_json(
                "free_decay.json",
                &Summary {
                    rate,
                    bound,
                    r_squared: f.r_squared,
                },
            )?;
            check(
                checks,
                "rate_within_semigroup_bound",
                rate <= bound + 1e-3,
                format!("rate {rate:.4e} vs bound {bound:.4e}"),
            );
        }
        _ => unreachable!("validated"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn run_in_temp(text: &str, kind: Kind) -> (RunOutcome, PathBuf) {
        let dir = std::env::temp_dir().join(format!(
            "fpu-exp-{}-{}",
            kind.name(),
            std::process::id()
        ));
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = ExperimentConfig::from_str(text, "test", kind).unwrap();
        let out = run(&cfg, &dir).unwrap();
        (out, dir)
    }

    #[test]
    fn profile_run_writes_artifacts_and_manifest() {
        let (out, dir) = run_in_temp("[profile]\neps = 0.2\n", Kind::Profile);
        assert!(out.all_passed());
        let names: Vec<&str> = out.files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["profile.csv", "profile.json"]);
        let manifest = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
        assert!(manifest.contains("\"command\": \"profile\""));
        assert!(manifest.contains("profile.csv"));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let text = "[profile]\neps = 0.18\n";
        let (a, dir_a) = run_in_temp(text, Kind::Profile);
        let csv_a = std::fs::read(dir_a.join("profile.csv")).unwrap();
        let (b, dir_b) = run_in_temp(text, Kind::Profile);
        let csv_b = std::fs::read(dir_b.join("profile.csv")).unwrap();
        assert_eq!(csv_a, csv_b);
        assert_eq!(a.files[0].sha256, b.files[0].sha256);
        let _ = std::fs::remove_dir_all(&dir_a);
        let _ = std::fs::remove_dir_all(&dir_b);
    }

    #[test]
    fn interaction_diagnostic_runs_end_to_end() {
        let text = r#"
            [diagnose]
            experiment = "interaction"
            eps = 0.15
            k = [1.0, 2.0]
            separations = [25.0, 35.0, 45.0, 55.0]
        "#;
        let (out, dir) = run_in_temp(text, Kind::Diagnose);
        assert!(out.all_passed(), "checks: {:?}", out.checks);
        let csv = std::fs::read_to_string(dir.join("interaction.csv")).unwrap();
        assert!(csv.starts_with("sep,l1,linf"));
        assert_eq!(csv.lines().count(), 5);
        let _ = std::fs::remove_dir_all(&dir);
    }
}
