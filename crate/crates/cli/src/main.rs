//! `nhbdi`: compute tables, expectations, PMFs, meshes, ensembles and the
//! acceptance suite from a scenario file.

mod svg;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use nhbdi_core::deterministic::{approx_expected_infected, DeterministicSeries};
use nhbdi_core::oracle::forward_solve;
use nhbdi_core::pmf::{self, default_truncation};
use nhbdi_core::simulator::{run_ensemble_with, EnsembleOptions};
use nhbdi_core::validation::{run_all, run_criterion, ValidationConfig, CRITERIA};
use nhbdi_core::{build_table, output, Error, IntegralTable, Overrides, Result, Scenario};
use svg::Series;

/// Event logs are never written for more than this many paths.
const MAX_LOGGED_PATHS: usize = 100;
/// Default truncation for `oracle` when `--k-max` is not given.
const DEFAULT_ORACLE_K: u64 = 1_000;
/// Rows kept in the mesh when `--k-stride` is not given.
const MESH_ROWS: u64 = 1_000;

#[derive(Parser, Debug)]
#[command(name = "nhbdi", version, about = "Time-nonhomogeneous birth-death-immigration infection model")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand, Debug)]
enum Action {
    /// Run one command against a scenario.
    Run(RunArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Scenario file (.json or .toml). Optional for `validate`.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    command: Command,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    k_max: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Duration of λ's transition, in days.
    #[arg(long)]
    delay_d: Option<f64>,
    /// Evaluation time for `pmf` and `oracle`.
    #[arg(long)]
    t: Option<f64>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
    /// Keep every n-th count in the mesh; by default about 1000 rows are kept.
    #[arg(long)]
    k_stride: Option<u64>,
    /// Event logs to write from `simulate` (at most 100).
    #[arg(long, default_value_t = 0)]
    paths: usize,
    /// Comma-separated criteria for `validate`.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Command {
    Table,
    Deterministic,
    Pmf,
    Moments,
    Mesh,
    Simulate,
    Oracle,
    Validate,
}

enum Outcome {
    Ok,
    ValidationFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let Action::Run(args) = cli.action;
    match run(&args) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("NHBDI_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Usage(format!("NHBDI_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn load(args: &RunArgs) -> Result<Scenario> {
    let path = args
        .scenario
        .as_ref()
        .ok_or_else(|| Error::Usage(format!("--scenario is required for {:?}", args.command)))?;
    let mut sc = Scenario::from_path(path)?;
    sc.apply(&Overrides {
        t_end: args.t_end,
        dt: args.dt,
        k_max: args.k_max,
        replications: args.reps,
        seed: args.seed,
        delay_d: args.delay_d,
    })?;
    Ok(sc)
}

fn run(args: &RunArgs) -> Result<Outcome> {
    if args.command == Command::Validate {
        return validate(args);
    }
    let sc = load(args)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let out = Out { dir: &args.out_dir, svg: args.svg };
    match args.command {
        Command::Table => table(&sc, &out),
        Command::Deterministic => deterministic(&sc, &out),
        Command::Pmf => pmf_slice(&sc, args, &out),
        Command::Moments => moments(&sc, &out),
        Command::Mesh => mesh(&sc, args, &out),
        Command::Simulate => simulate(&sc, args, &out),
        Command::Oracle => oracle(&sc, args, &out),
        Command::Validate => unreachable!(),
    }?;
    Ok(Outcome::Ok)
}

struct Out<'a> {
    dir: &'a Path,
    svg: bool,
}

impl Out<'_> {
    fn csv(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        info!("wrote {}", path.display());
        Ok(())
    }

    fn plot(&self, name: &str, make: impl FnOnce() -> String) -> Result<()> {
        if self.svg {
            let path = self.dir.join(name);
            std::fs::write(&path, make())?;
            info!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn days(sc: &Scenario) -> Vec<f64> {
    (0..=sc.t_end.floor() as u64).map(|d| d as f64).collect()
}

fn required_t(args: &RunArgs, sc: &Scenario) -> Result<f64> {
    let t = args.t.ok_or_else(|| Error::Usage(format!("--t is required for {:?}", args.command)))?;
    if !(0.0..=sc.t_end).contains(&t) {
        return Err(Error::Range { t, end: sc.t_end });
    }
    Ok(t)
}

fn table(sc: &Scenario, out: &Out) -> Result<()> {
    let tab = build_table(sc)?;
    out.csv("table.csv", |w| output::write_table(w, &tab))?;
    println!("identity residual max |L-M-(1-e^-s)| = {:.3e}", tab.identity_residual());
    let g = &tab.grid;
    let rate = |r: &nhbdi_core::RateFunction| g.iter().map(|&t| r.value(t)).collect::<Vec<_>>();
    let (lam, mu, nu) = (rate(&sc.lambda), rate(&sc.mu), rate(&sc.nu));
    out.plot("rates.svg", || {
        svg::line_plot(
            "Rates",
            "t (days)",
            "rate per day",
            &[
                Series { label: "lambda", x: g, y: &lam },
                Series { label: "mu", x: g, y: &mu },
                Series { label: "nu", x: g, y: &nu },
            ],
            false,
        )
    })?;
    out.plot("s.svg", || svg::line_plot("s(t)", "t (days)", "s", &[Series { label: "s", x: g, y: &tab.s }], false))?;
    out.plot("sigma.svg", || {
        svg::line_plot("Sigma(t)", "t (days)", "days", &[Series { label: "Sigma", x: g, y: &tab.sigma }], false)
    })?;
    out.plot("lm.svg", || {
        svg::line_plot(
            "L(t) and M(t)",
            "t (days)",
            "",
            &[Series { label: "L", x: g, y: &tab.l_fn }, Series { label: "M", x: g, y: &tab.m_fn }],
            true,
        )
    })
}

fn deterministic(sc: &Scenario, out: &Out) -> Result<()> {
    let tab = build_table(sc)?;
    let det = DeterministicSeries::compute(sc, &tab)?;
    out.csv("deterministic.csv", |w| output::write_deterministic(w, &det))?;
    out.csv("daily.csv", |w| output::write_daily(w, &det.daily))?;
    let peak = (0..det.i_bar.len()).fold(0, |b, i| if det.i_bar[i] > det.i_bar[b] { i } else { b });
    println!("peak of expected infected: {:.6} at t = {}", det.i_bar[peak], det.grid[peak]);
    if let Some(t) = det.grid.iter().zip(&det.i_bar).skip(peak).find(|(_, &v)| v < 1.0).map(|(t, _)| *t) {
        println!("expected infected falls below 1 at t = {t}");
    }
    println!("consistency residual = {:.3e}", det.consistency_residual(sc.i0));
    let approx = match approx_expected_infected(&tab, sc) {
        Ok(a) => Some(a),
        Err(Error::ApproximationInapplicable(why)) => {
            info!("closed-form approximation not available: {why}");
            None
        }
        Err(e) => return Err(e),
    };
    let g = &det.grid;
    out.plot("i_bar.svg", || {
        let mut series = vec![Series { label: "I-bar", x: g, y: &det.i_bar }];
        if let Some(a) = &approx {
            series.push(Series { label: "approximation", x: g, y: &a.i_approx });
        }
        svg::line_plot("Expected infected", "t (days)", "I-bar", &series, false)
    })?;
    let day: Vec<f64> = det.daily.day.iter().map(|&d| d as f64).collect();
    out.plot("daily.svg", || {
        svg::line_plot(
            "Expected daily counts",
            "day",
            "count",
            &[
                Series { label: "new infections", x: &day, y: &det.daily.i_new },
                Series { label: "new recoveries", x: &day, y: &det.daily.r_new },
            ],
            false,
        )
    })
}

fn require_birth_death(sc: &Scenario) -> Result<()> {
    if sc.is_birth_death() {
        Ok(())
    } else {
        Err(Error::ImmigrationNotSupported)
    }
}

fn pmf_slice(sc: &Scenario, args: &RunArgs, out: &Out) -> Result<()> {
    require_birth_death(sc)?;
    let t = required_t(args, sc)?;
    let tab = build_table(sc)?;
    let ab = pmf::alpha_beta(&tab, t)?;
    let k = args.k_max.unwrap_or_else(|| default_truncation(&ab, sc.i0).min(sc.k_max));
    let slice = pmf::pmf(&tab, t, sc.i0, k)?;
    out.csv(&format!("pmf_t{t}.csv"), |w| output::write_pmf(w, &slice))?;
    println!("t = {t}: P_0 = {:.6}, alpha = {:.6}, beta = {:.6}, K = {k}, tail = {:.3e}", slice.p[0], ab.alpha, ab.beta, slice.tail);
    let ks: Vec<f64> = (0..slice.p.len()).map(|k| k as f64).collect();
    out.plot(&format!("pmf_t{t}.svg"), || {
        svg::line_plot(&format!("P_k({t})"), "k", "probability", &[Series { label: "P_k", x: &ks, y: &slice.p }], true)
    })
}

fn moments(sc: &Scenario, out: &Out) -> Result<()> {
    require_birth_death(sc)?;
    let tab = build_table(sc)?;
    let times = days(sc);
    let m = times.iter().map(|&t| pmf::moments(&tab, t, sc.i0)).collect::<Result<Vec<_>>>()?;
    out.csv("moments.csv", |w| output::write_moments(w, &m))?;
    let ab = times.iter().map(|&t| pmf::alpha_beta(&tab, t)).collect::<Result<Vec<_>>>()?;
    out.csv("alpha_beta.csv", |w| {
        writeln!(w, "t,alpha,beta")?;
        for a in &ab {
            writeln!(w, "{},{:e},{:e}", a.t, a.alpha, a.beta)?;
        }
        Ok(())
    })?;
    let cv: Vec<f64> = m.iter().map(|m| m.cv).collect();
    let alpha: Vec<f64> = ab.iter().map(|a| a.alpha).collect();
    let beta: Vec<f64> = ab.iter().map(|a| a.beta).collect();
    out.plot("cv.svg", || {
        svg::line_plot("Coefficient of variation", "t (days)", "c_I", &[Series { label: "c_I", x: &times, y: &cv }], false)
    })?;
    out.plot("alpha_beta.svg", || {
        svg::line_plot(
            "alpha(t) and beta(t)",
            "t (days)",
            "",
            &[Series { label: "alpha", x: &times, y: &alpha }, Series { label: "beta", x: &times, y: &beta }],
            false,
        )
    })
}

fn mesh(sc: &Scenario, args: &RunArgs, out: &Out) -> Result<()> {
    require_birth_death(sc)?;
    let tab: IntegralTable = build_table(sc)?;
    let times = days(sc);
    let k = match args.k_max {
        Some(k) => k,
        None => {
            let mut need = sc.i0;
            for &t in &times {
                need = need.max(default_truncation(&pmf::alpha_beta(&tab, t)?, sc.i0));
            }
            need.min(sc.k_max)
        }
    };
    let stride = args.k_stride.unwrap_or_else(|| k.div_ceil(MESH_ROWS).max(1));
    let grid = pmf::mesh(&tab, &times, k, sc.i0, stride)?;
    out.csv("mesh.csv", |w| output::write_mesh(w, &grid))?;
    let worst_tail = grid.tails.iter().copied().fold(0.0, f64::max);
    println!("mesh: {} counts x {} times, K = {k}, stride {stride}, largest tail beyond K = {worst_tail:.3e}", grid.ks.len(), times.len());
    if worst_tail > 1e-3 {
        warn!("more than 1e-3 of the mass lies beyond K = {k} at some time; raise --k-max");
    }
    out.plot("mesh.svg", || svg::heatmap("P_k(t)", &grid.times, &grid.ks, &grid.z, 12.0))?;
    let rows: Vec<usize> = [0u64, 1, 10, 100].iter().filter_map(|&k| grid.ks.iter().position(|&x| x == k)).collect();
    let labels: Vec<String> = rows.iter().map(|&r| format!("k = {}", grid.ks[r])).collect();
    out.plot("pk_rows.svg", || {
        let series: Vec<Series> =
            rows.iter().zip(&labels).map(|(&r, l)| Series { label: l, x: &grid.times, y: grid.row(r) }).collect();
        svg::line_plot("P_k(t) for fixed k", "t (days)", "probability", &series, true)
    })
}

fn simulate(sc: &Scenario, args: &RunArgs, out: &Out) -> Result<()> {
    let keep = args.paths.min(MAX_LOGGED_PATHS);
    if args.paths > MAX_LOGGED_PATHS {
        warn!("writing event logs for the first {MAX_LOGGED_PATHS} paths only");
    }
    let opts = EnsembleOptions { keep_paths: keep, ..Default::default() };
    let ens = run_ensemble_with(sc, &opts)?;
    let s = &ens.summary;
    out.csv("snapshots.csv", |w| output::write_snapshots(w, s))?;
    out.csv("daily_stats.csv", |w| output::write_daily_stats(w, s))?;
    if keep > 0 {
        out.csv("paths.csv", |w| output::write_paths(w, s.master_seed, &ens.paths))?;
    }
    let last = s.snapshot_times.len() - 1;
    println!(
        "{} paths, seed {}: P(I({})=0) = {:.5}",
        s.replications, s.master_seed, s.snapshot_times[last], s.extinction_fraction[last]
    );
    let day: Vec<f64> = s.daily_new_infections.iter().map(|d| d.day as f64).collect();
    let pick = |f: fn(&nhbdi_core::simulator::DailyStat) -> f64| s.daily_new_infections.iter().map(f).collect::<Vec<f64>>();
    let (mean, q05, q50, q95) = (pick(|d| d.mean), pick(|d| d.q05 as f64), pick(|d| d.q50 as f64), pick(|d| d.q95 as f64));
    out.plot("daily_infections.svg", || {
        svg::line_plot(
            "Daily new infections",
            "day",
            "count",
            &[
                Series { label: "mean", x: &day, y: &mean },
                Series { label: "5%", x: &day, y: &q05 },
                Series { label: "median", x: &day, y: &q50 },
                Series { label: "95%", x: &day, y: &q95 },
            ],
            false,
        )
    })?;
    out.plot("extinction.svg", || {
        svg::line_plot(
            "Share of paths with I(t) = 0",
            "t (days)",
            "fraction",
            &[Series { label: "extinct", x: &s.snapshot_times, y: &s.extinction_fraction }],
            false,
        )
    })
}

fn oracle(sc: &Scenario, args: &RunArgs, out: &Out) -> Result<()> {
    let t = required_t(args, sc)?;
    let k = args.k_max.unwrap_or(DEFAULT_ORACLE_K.min(sc.k_max));
    let d = forward_solve(sc, t, k)?;
    out.csv(&format!("oracle_t{t}.csv"), |w| output::write_oracle(w, &d))?;
    println!("t = {t}: q_0 = {:.6}, mean = {:.6}, leaked = {:.3e}", d.q[0], d.mean(), d.leaked);
    if d.leaked > 1e-6 {
        warn!("leakage {:.3e} exceeds 1e-6; raise --k-max", d.leaked);
    }
    Ok(())
}

fn validate(args: &RunArgs) -> Result<Outcome> {
    let mut ok = true;
    if let Some(path) = &args.scenario {
        let sc = load(args)?;
        let tab = build_table(&sc)?;
        let identity = tab.identity_residual();
        let consistency = DeterministicSeries::compute(&sc, &tab)?.consistency_residual(sc.i0);
        let pass = identity < 1e-8 && consistency < 1e-6;
        ok &= pass;
        println!(
            "[{}] scenario {}: identity residual {identity:.2e}, consistency residual {consistency:.2e}",
            if pass { "PASS" } else { "FAIL" },
            path.display()
        );
    }
    let mut cfg = ValidationConfig::from_env();
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.reps {
        cfg.paths = r;
    }
    let results = if args.only.is_empty() {
        run_all(&cfg)
    } else {
        for id in &args.only {
            if !CRITERIA.iter().any(|c| c.0 == *id) {
                return Err(Error::Usage(format!("no acceptance criterion {id}")));
            }
        }
        args.only.iter().map(|&id| run_criterion(id, &cfg)).collect()
    };
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    ok &= failed == 0;
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    Ok(if ok { Outcome::Ok } else { Outcome::ValidationFailed })
}
