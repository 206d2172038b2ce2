use std::path::{Path, PathBuf};
use std::process::ExitCode;

use attractorkit::config::Fixture;
use attractorkit::covering::{
    box_counting_dimension, build_covering_tree, verify_exponential_attraction, DiagonalSplitMap, PointCloud, SplitMap,
};
use attractorkit::dde::{integrate, steps_per_delay, NormKind};
use attractorkit::pipeline::{self, Analysis};
use attractorkit::sampling::{random_segment_with_norm, rng};
use attractorkit::{Error, FailureKind, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod cloud_file;
mod output;
mod report;

use output::{Axis, Envelope, PlotManifest, Sink};

#[derive(Parser)]
#[command(
    name = "attractorkit",
    version,
    about = "Dimension certificates for exponential attractors of delay equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model file (TOML).
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed alpha instead of the optimized one.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "cut-m")]
    cut_m: Option<usize>,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapKind {
    /// `x -> x/4` on the line.
    Quarter,
    /// The zero map on the line.
    Zero,
    /// `(x, y) -> (x/4, y/8)` with `x` the projected coordinate.
    QuarterEighth,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Max,
    Euclidean,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Max => NormKind::Max,
            NormArg::Euclidean => NormKind::Euclidean,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic roots above the search floor.
    Roots {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Spectral splitting with sampled decay constants.
    Decompose {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Squeezing certificate and dimension bound.
    Certify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// One trajectory from a random history.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Final time; ten delays by default.
        #[arg(long)]
        horizon: Option<f64>,
        /// Norm of the initial history.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Sampled check of both squeezing inequalities.
    SqueezeVerify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Nested covering of a synthetic squeezing map and its attraction rate.
    Cover {
        #[arg(long, value_enum, default_value_t = MapKind::Quarter)]
        map: MapKind,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 6)]
        levels: usize,
        /// Radius of the base ball.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Half-width of the attracted box.
        #[arg(long = "d-half", default_value_t = 3.0)]
        d_half: f64,
        #[arg(long, default_value_t = 0.1)]
        slack: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Box-counting estimate on a point cloud or on attractor samples.
    Boxdim {
        #[arg(long, conflicts_with = "cloud")]
        model: Option<PathBuf>,
        /// CSV file of points, one per row.
        #[arg(long)]
        cloud: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = NormArg::Euclidean)]
        norm: NormArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "cut-m")]
        cut_m: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "eps-ladder", value_delimiter = ',')]
        eps_ladder: Option<Vec<f64>>,
        #[arg(long, default_value_t = 50)]
        trajectories: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Full certification report with every sampled check.
    Report {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long = "eps-ladder", value_delimiter = ',')]
        eps_ladder: Option<Vec<f64>>,
        #[arg(long, default_value_t = 50)]
        trajectories: usize,
    },
}

fn load(path: &Path, seed: Option<u64>, alpha: Option<f64>, cut_m: Option<usize>) -> Result<Fixture> {
    let mut fx = Fixture::load(path)?;
    if let Some(s) = seed {
        fx.analysis.seed = s;
    }
    if let Some(a) = alpha {
        fx.analysis.alpha = Some(a);
    }
    if let Some(m) = cut_m {
        fx.analysis.cut_m = m;
    }
    Ok(fx)
}

impl ModelArgs {
    fn fixture(&self) -> Result<Fixture> {
        load(&self.model, self.seed, self.alpha, self.cut_m)
    }
}

fn csv_table<W: std::io::Write + ?Sized>(w: &mut W, header: &str, rows: &[String]) -> Result<()> {
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

fn roots(m: &ModelArgs, o: &OutArgs, sink: &mut Sink) -> Result<()> {
    let fx = m.fixture()?;
    let spec = pipeline::spectrum(&fx)?;
    let env = Envelope {
        command: "roots",
        seed: None,
        fixture: Some(&fx),
    };
    let report = spec.decomp.report();
    #[derive(Serialize)]
    struct Roots<'a> {
        rho1: f64,
        roots: &'a [attractorkit::spectral::CharacteristicRoot],
        window: Option<attractorkit::spectral::SearchWindow>,
        modes: Option<&'a attractorkit::rds::ModeSpectrum>,
    }
    let body = Roots {
        rho1: spec.decomp.rho1(),
        roots: spec.decomp.roots(),
        window: report.window,
        modes: spec.modes.as_ref(),
    };
    sink.json("roots.json", &env.wrap(&body)?)?;
    if o.format == Format::Csv {
        let rows: Vec<String> = spec
            .decomp
            .roots()
            .iter()
            .map(|r| {
                format!(
                    "{:.15e},{:.15e},{},{:.3e}",
                    r.lambda.re, r.lambda.im, r.multiplicity, r.residual
                )
            })
            .collect();
        sink.write_with("roots.csv", |w| csv_table(w, "re,im,multiplicity,residual", &rows))?;
    }
    Ok(())
}

fn decompose(m: &ModelArgs, o: &OutArgs, sink: &mut Sink) -> Result<()> {
    let fx = m.fixture()?;
    let spec = pipeline::estimate_decay(&fx, pipeline::spectrum(&fx)?)?;
    let env = Envelope {
        command: "decompose",
        seed: Some(fx.analysis.seed),
        fixture: Some(&fx),
    };
    #[derive(Serialize)]
    struct Decomposition<'a> {
        cut_m: usize,
        rho_m: f64,
        report: attractorkit::spectral::DecompositionReport,
        decay: Option<&'a attractorkit::spectral::DecayConstants>,
    }
    let body = Decomposition {
        cut_m: spec.decomp.cut(),
        rho_m: spec.decomp.rho_m(),
        report: spec.decomp.report(),
        decay: spec.decomp.decay(),
    };
    sink.json("decomposition.json", &env.wrap(&body)?)?;
    if o.format == Format::Csv {
        let rows: Vec<String> = spec
            .decomp
            .report()
            .rhos
            .iter()
            .zip(spec.decomp.multiplicities())
            .enumerate()
            .map(|(i, (rho, mult))| format!("{},{:.15e},{}", i + 1, rho, mult))
            .collect();
        sink.write_with("levels.csv", |w| csv_table(w, "level,rho,multiplicity", &rows))?;
    }
    Ok(())
}

fn certify(m: &ModelArgs, o: &OutArgs, sink: &mut Sink) -> Result<()> {
    let fx = m.fixture()?;
    let analysis = pipeline::certify(&fx)?;
    let env = Envelope {
        command: "certify",
        seed: Some(fx.analysis.seed),
        fixture: Some(&fx),
    };
    let c = &analysis.certification;
    sink.json("certificate.json", &env.wrap(c)?)?;
    if o.format == Format::Csv {
        sink.write_with("certificate.csv", |w| {
            csv_table(w, "quantity,value", &report::summary_rows(&analysis))
        })?;
    }
    Ok(())
}

fn simulate(m: &ModelArgs, sink: &mut Sink, horizon: Option<f64>, radius: f64) -> Result<()> {
    let fx = m.fixture()?;
    let system = pipeline::System::build(&fx)?;
    let model = system.delay_model();
    let tau = model.tau();
    let horizon = horizon.unwrap_or(10.0 * tau);
    if !(horizon > 0.0) || !horizon.is_finite() || !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput("horizon and radius must be positive".into()));
    }
    let step = pipeline::step(&fx);
    let nd = steps_per_delay(step, tau)?;
    let phi = random_segment_with_norm(
        &mut rng(fx.analysis.seed, 0),
        tau,
        nd,
        model.dim(),
        system.norm(),
        radius,
    )?;
    let traj = integrate(model, &phi, horizon, step)?;
    sink.write_with("trajectory.csv", |w| traj.write_csv(w))?;
    let last = traj.segment_at(traj.t_final())?;
    #[derive(Serialize)]
    struct Simulation {
        step: f64,
        horizon: f64,
        initial_norm: f64,
        final_norm: f64,
        norm: NormKind,
    }
    let env = Envelope {
        command: "simulate",
        seed: Some(fx.analysis.seed),
        fixture: Some(&fx),
    };
    let body = Simulation {
        step,
        horizon,
        initial_norm: phi.norm(system.norm()),
        final_norm: last.norm(system.norm()),
        norm: system.norm(),
    };
    sink.json("simulation.json", &env.wrap(&body)?)?;
    let series = (1..=model.dim())
        .map(|i| Axis::new(format!("x{i}"), format!("x{i}(t)"), false))
        .collect();
    sink.json(
        "trajectory.plot.json",
        &PlotManifest::new(
            "Trajectory",
            "trajectory.csv",
            "line",
            Axis::new("t", "t", false),
            series,
        ),
    )
}

fn squeeze_verify(m: &ModelArgs, sink: &mut Sink, pairs: Option<usize>) -> Result<()> {
    let mut fx = m.fixture()?;
    if let Some(p) = pairs {
        fx.analysis.pairs = p;
    }
    let analysis = pipeline::certify(&fx)?;
    let v = pipeline::squeeze(&fx, &analysis)?;
    sink.write_with("squeeze.csv", |w| v.write_csv(w))?;
    let env = Envelope {
        command: "squeeze-verify",
        seed: Some(fx.analysis.seed),
        fixture: Some(&fx),
    };
    sink.json("squeeze.json", &env.wrap(&report::SqueezeSummary::from(&v))?)?;
    sink.json(
        "squeeze.plot.json",
        &PlotManifest::new(
            "Squeezing inequalities",
            "squeeze.csv",
            "scatter",
            Axis::new("t", "t", false),
            vec![
                Axis::new("p_measured", "|P(u - v)|", true),
                Axis::new("p_bound", "P bound", true),
                Axis::new("q_measured", "|Q(u - v)|", true),
                Axis::new("q_bound", "Q bound", true),
            ],
        ),
    )
}

#[allow(clippy::too_many_arguments)]
fn cover(map: MapKind, alpha: f64, levels: usize, radius: f64, d_half: f64, slack: f64, sink: &mut Sink) -> Result<()> {
    let split = match map {
        MapKind::Quarter => DiagonalSplitMap::quarter(),
        MapKind::Zero => DiagonalSplitMap::zero(),
        MapKind::QuarterEighth => DiagonalSplitMap::quarter_eighth(),
    };
    if !(radius > 0.0) || !(d_half > 0.0) {
        return Err(Error::InvalidInput("radius and d-half must be positive".into()));
    }
    let constants = split.constants(alpha);
    let dim = split.ambient().len();
    let (base, d) = if dim == 1 {
        (
            PointCloud::lattice(1, NormKind::Max, 801, radius)?,
            PointCloud::lattice(1, NormKind::Max, 121, d_half)?,
        )
    } else {
        (
            PointCloud::lattice(dim, NormKind::Max, 61, radius)?,
            PointCloud::lattice(dim, NormKind::Max, 31, d_half)?,
        )
    };
    let tree = build_covering_tree(&split, &constants, radius, levels, &base)?;
    let attraction = verify_exponential_attraction(&split, &tree, &d, levels, slack)?;
    sink.write_with("tree.json", |w| tree.write_json(w))?;
    sink.write_with("attraction.csv", |w| attraction.write_csv(w))?;
    let env = Envelope {
        command: "cover",
        seed: None,
        fixture: None,
    };
    #[derive(Serialize)]
    struct Cover<'a> {
        map: &'a DiagonalSplitMap,
        levels: Vec<report::LevelSummary>,
        attraction: &'a attractorkit::covering::AttractionReport,
    }
    let body = Cover {
        map: &split,
        levels: tree.levels.iter().map(report::LevelSummary::from).collect(),
        attraction: &attraction,
    };
    sink.json("cover.json", &env.wrap(&body)?)?;
    sink.json(
        "attraction.plot.json",
        &PlotManifest::new(
            "Exponential attraction",
            "attraction.csv",
            "line",
            Axis::new("n", "n", false),
            vec![
                Axis::new("semidistance", "dist(S^n D, E)", true),
                Axis::new("bound", "bound", true),
            ],
        ),
    )
}

#[allow(clippy::too_many_arguments)]
fn boxdim(
    model: Option<&Path>,
    cloud: Option<&Path>,
    norm: NormKind,
    seed: Option<u64>,
    alpha: Option<f64>,
    cut_m: Option<usize>,
    ladder: Option<&[f64]>,
    trajectories: usize,
    sink: &mut Sink,
) -> Result<()> {
    let (value, report) = match (model, cloud) {
        (Some(path), None) => {
            let fx = load(path, seed, alpha, cut_m)?;
            let analysis = pipeline::certify(&fx)?;
            let dim = pipeline::attractor_dimension(&fx, &analysis, trajectories, fx.analysis.seed, ladder)?;
            let env = Envelope {
                command: "boxdim",
                seed: Some(fx.analysis.seed),
                fixture: Some(&fx),
            };
            (env.wrap(&dim)?, dim.report)
        }
        (None, Some(path)) => {
            let ladder = ladder.ok_or_else(|| Error::InvalidInput("--cloud needs --eps-ladder".into()))?;
            let pc = cloud_file::read(path, norm)?;
            let report = box_counting_dimension(&pc, ladder)?;
            let env = Envelope {
                command: "boxdim",
                seed: None,
                fixture: None,
            };
            (env.wrap(&report)?, report)
        }
        _ => return Err(Error::InvalidInput("give exactly one of --model or --cloud".into())),
    };
    sink.json("boxdim.json", &value)?;
    let rows: Vec<String> = report
        .rungs
        .iter()
        .map(|r| format!("{:.15e},{},{}", r.eps, r.count, r.used))
        .collect();
    sink.write_with("boxdim.csv", |w| csv_table(w, "eps,count,used", &rows))?;
    sink.json(
        "boxdim.plot.json",
        &PlotManifest::new(
            "Box counting",
            "boxdim.csv",
            "scatter",
            Axis::new("eps", "eps", true),
            vec![Axis::new("count", "N(eps)", true)],
        ),
    )
}

fn full_report(m: &ModelArgs, o: &OutArgs, ladder: Option<&[f64]>, trajectories: usize, sink: &mut Sink) -> Result<()> {
    let fx = m.fixture()?;
    let analysis: Analysis = pipeline::certify(&fx)?;
    let report = report::CertificationReport::build(&fx, &analysis, ladder, trajectories)?;
    let env = Envelope {
        command: "report",
        seed: Some(fx.analysis.seed),
        fixture: Some(&fx),
    };
    sink.json("report.json", &env.wrap(&report)?)?;
    if o.format == Format::Csv {
        sink.write_with("report.csv", |w| csv_table(w, "quantity,value", &report.rows()))?;
    }
    Ok(())
}

fn run(command: Command) -> Result<Vec<PathBuf>> {
    let out_dir = match &command {
        Command::Roots { out, .. }
        | Command::Decompose { out, .. }
        | Command::Certify { out, .. }
        | Command::Simulate { out, .. }
        | Command::SqueezeVerify { out, .. }
        | Command::Cover { out, .. }
        | Command::Boxdim { out, .. }
        | Command::Report { out, .. } => out.clone(),
    };
    let mut sink = Sink::new(&out_dir.out)?;
    match &command {
        Command::Roots { model, out } => roots(model, out, &mut sink)?,
        Command::Decompose { model, out } => decompose(model, out, &mut sink)?,
        Command::Certify { model, out } => certify(model, out, &mut sink)?,
        Command::Simulate {
            model, horizon, radius, ..
        } => simulate(model, &mut sink, *horizon, *radius)?,
        Command::SqueezeVerify { model, pairs, .. } => squeeze_verify(model, &mut sink, *pairs)?,
        Command::Cover {
            map,
            alpha,
            levels,
            radius,
            d_half,
            slack,
            ..
        } => cover(*map, *alpha, *levels, *radius, *d_half, *slack, &mut sink)?,
        Command::Boxdim {
            model,
            cloud,
            norm,
            seed,
            alpha,
            cut_m,
            eps_ladder,
            trajectories,
            ..
        } => boxdim(
            model.as_deref(),
            cloud.as_deref(),
            (*norm).into(),
            *seed,
            *alpha,
            *cut_m,
            eps_ladder.as_deref(),
            *trajectories,
            &mut sink,
        )?,
        Command::Report {
            model,
            out,
            eps_ladder,
            trajectories,
        } => full_report(model, out, eps_ladder.as_deref(), *trajectories, &mut sink)?,
    }
    Ok(sink.written().to_vec())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("ATTRACTORKIT_THREADS") else {
        return Ok(());
    };
    let n: usize =
        v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            Error::InvalidInput(format!("ATTRACTORKIT_THREADS must be a positive integer, got {v:?}"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(e.to_string()))
}

fn exit_code(kind: FailureKind) -> u8 {
    match kind {
        FailureKind::Hypothesis => 1,
        FailureKind::Numerical => 2,
        FailureKind::Input => 3,
    }
}

fn fail(e: &Error) -> ExitCode {
    let kind = match e.kind() {
        FailureKind::Hypothesis => "hypothesis",
        FailureKind::Numerical => "numerical",
        FailureKind::Input => "input",
    };
    eprintln!(
        "ATTRACTORKIT_FAILURE code={} kind={kind} message={:?}",
        e.code(),
        e.to_string()
    );
    ExitCode::from(exit_code(e.kind()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            if !usage {
                return ExitCode::SUCCESS;
            }
            eprintln!(
                "ATTRACTORKIT_FAILURE code=USAGE kind=input message={:?}",
                e.kind().to_string()
            );
            return ExitCode::from(3);
        }
    };
    if let Err(e) = configure_threads() {
        return fail(&e);
    }
    match run(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
