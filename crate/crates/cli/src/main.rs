use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qjl::buffon::{build_pmf, mc_sample, moment, moment_bounds, tv_distance, BuffonParams};
use qjl::embedding::io::{read_points, SketchFile};
use qjl::embedding::{binary_embed, hamming, l1_estimate, l2_estimate, Projector, RowModel};
use qjl::gdelta::{build_gdelta, lower_bound, upper_bound, DEFAULT_GRID};
use qjl::harness::{check_equivalence, replay, run_experiment, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(
    name = "qjl",
    version,
    about = "Quantized Johnson-Lindenstrauss embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and sampled N-dimensional Buffon distributions
    #[command(subcommand)]
    Buffon(BuffonCmd),
    /// Embed points from a headerless CSV into a sketch file
    Embed(EmbedArgs),
    /// Pairwise distance estimates from a sketch file
    Estimate(EstimateArgs),
    /// The ℓ2/ℓ2 distortion function
    #[command(subcommand)]
    Gdelta(GdeltaCmd),
    /// Distortion sweeps, equivalence checks, tail curves
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Args)]
struct BuffonArgs {
    /// needle length over grid spacing
    #[arg(long)]
    a: f64,
    /// dimension
    #[arg(long)]
    n: u32,
}

#[derive(Subcommand)]
enum BuffonCmd {
    /// Print `k,p_k` as CSV
    Pmf(BuffonArgs),
    /// Print the q-th moment and its bounds
    Moment {
        #[command(flatten)]
        p: BuffonArgs,
        #[arg(long)]
        q: u32,
    },
    /// Geometric Monte Carlo histogram and its distance to the exact pmf
    Mc {
        #[command(flatten)]
        p: BuffonArgs,
        #[arg(long, default_value_t = 1_000_000)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RowArg {
    Gaussian,
    UniformSphere,
}

impl From<RowArg> for RowModel {
    fn from(r: RowArg) -> Self {
        match r {
            RowArg::Gaussian => RowModel::Gaussian,
            RowArg::UniformSphere => RowModel::UniformSphere,
        }
    }
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    row_model: RowArg,
    /// store one-bit sign sketches instead of quantization codes
    #[arg(long)]
    binary: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    L1,
    L2,
    Hamming,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    sketches: PathBuf,
    #[arg(long, value_enum)]
    metric: MetricArg,
    /// grid size of the g table used by the l2 metric
    #[arg(long, default_value_t = DEFAULT_GRID)]
    gdelta_points: usize,
    /// output CSV; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GdeltaCmd {
    /// Tabulate `λ, g_δ(λ)` with its bounds
    Table {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// ℓ1 distortion sweep over M
    Distortion(RunArgs),
    /// ℓ2/ℓ2 distortion sweep over M
    L2(RunArgs),
    /// Empirical tail curves against concentration bounds
    Tails(RunArgs),
    /// Code differences through the embedding against the Buffon pmf
    Equivalence {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-run an experiment from its manifest
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn buffon(cmd: BuffonCmd) -> Result<()> {
    let mut out = csv::Writer::from_writer(io::stdout().lock());
    match cmd {
        BuffonCmd::Pmf(p) => {
            let pmf = build_pmf(BuffonParams::new(p.a, p.n)?)?;
            out.write_record(["k", "p"])?;
            for (k, pk) in pmf.probabilities().iter().enumerate() {
                out.write_record([k.to_string(), pk.to_string()])?;
            }
        }
        BuffonCmd::Moment { p, q } => {
            let params = BuffonParams::new(p.a, p.n)?;
            let m = moment(&build_pmf(params)?, q)?;
            let b = moment_bounds(params, q)?;
            out.write_record(["q", "moment", "lower", "upper"])?;
            out.write_record([
                q.to_string(),
                m.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
            ])?;
        }
        BuffonCmd::Mc { p, count, seed } => {
            let params = BuffonParams::new(p.a, p.n)?;
            let pmf = build_pmf(params)?;
            let hist = mc_sample(params, count, seed)?;
            out.write_record(["k", "count", "frequency", "p"])?;
            let len = hist.counts().len().max(pmf.probabilities().len());
            for k in 0..len {
                let c = hist.counts().get(k).copied().unwrap_or(0);
                out.write_record([
                    k.to_string(),
                    c.to_string(),
                    hist.frequency(k).to_string(),
                    pmf.prob(k).to_string(),
                ])?;
            }
            out.flush()?;
            eprintln!("total variation distance: {}", tv_distance(&hist, &pmf));
        }
    }
    out.flush()?;
    Ok(())
}

fn embed_cmd(a: EmbedArgs) -> Result<()> {
    let points = read_points(&a.points)?;
    let proj = Projector::new(a.m, points.dim(), a.delta, a.seed, a.row_model.into())?;
    let file = if a.binary {
        let signs = points
            .points()
            .iter()
            .map(|x| binary_embed(&proj, x))
            .collect::<qjl::Result<Vec<_>>>()?;
        SketchFile::from_signs(&proj, &signs)?
    } else {
        SketchFile::from_sketches(&proj, qjl::embedding::embed_all(&proj, points.points())?)?
    };
    file.write(&a.out)?;
    eprintln!(
        "wrote {} sketches (M = {}, N = {}) to {}",
        points.len(),
        a.m,
        points.dim(),
        a.out.display()
    );
    Ok(())
}

fn estimate_cmd(a: EstimateArgs) -> Result<()> {
    let file = SketchFile::read(&a.sketches)?;
    let binary = file.header.binary;
    if binary != (a.metric == MetricArg::Hamming) {
        bail!(
            "metric does not match the file: {} holds {} sketches",
            a.sketches.display(),
            if binary { "one-bit" } else { "quantized" }
        );
    }
    let g = match a.metric {
        MetricArg::L2 => Some(build_gdelta(
            file.header.n,
            file.header.delta,
            a.gdelta_points,
        )?),
        _ => None,
    };
    let signs = if binary { Some(file.signs()?) } else { None };
    let mut out = csv::Writer::from_writer(output(a.out.as_deref())?);
    out.write_record(["i", "j", "estimate"])?;
    let s = &file.sketches;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let d = match a.metric {
                MetricArg::L1 => l1_estimate(&s[i], &s[j])?,
                MetricArg::L2 => l2_estimate(&s[i], &s[j], g.as_ref().expect("built above"))?,
                MetricArg::Hamming => {
                    let b = signs.as_ref().expect("binary file");
                    hamming(&b[i], &b[j])?
                }
            };
            out.write_record([i.to_string(), j.to_string(), d.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn gdelta(cmd: GdeltaCmd) -> Result<()> {
    let GdeltaCmd::Table {
        n,
        delta,
        points,
        out,
    } = cmd;
    let g = build_gdelta(n, delta, points)?;
    let mut w = csv::Writer::from_writer(output(out.as_deref())?);
    w.write_record(["lambda", "g", "lower_bound", "upper_bound"])?;
    for (l, v) in g.grid().into_iter().zip(g.values()) {
        w.write_record([
            l.to_string(),
            v.to_string(),
            lower_bound(delta, l).to_string(),
            upper_bound(delta, l).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run(kind: ExperimentKind, a: RunArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let manifest = run_experiment(kind, &cfg)?.emit(&a.out)?;
    eprintln!("manifest: {}", manifest.display());
    Ok(())
}

fn experiment(cmd: ExperimentCmd) -> Result<()> {
    match cmd {
        ExperimentCmd::Distortion(a) => run(ExperimentKind::Distortion, a),
        ExperimentCmd::L2(a) => run(ExperimentKind::L2, a),
        ExperimentCmd::Tails(a) => run(ExperimentKind::Tails, a),
        ExperimentCmd::Equivalence {
            a,
            n,
            samples,
            seed,
        } => {
            let r = check_equivalence(a, n, samples, seed)?;
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["k", "count", "p"])?;
            for k in 0..r.counts.len().max(r.pmf.len()) {
                w.write_record([
                    k.to_string(),
                    r.counts.get(k).copied().unwrap_or(0).to_string(),
                    r.pmf.get(k).copied().unwrap_or(0.0).to_string(),
                ])?;
            }
            w.flush()?;
            eprintln!("total variation distance: {}", r.tv);
            Ok(())
        }
        ExperimentCmd::Replay { manifest, out } => {
            let m = replay(&manifest, &out)?;
            eprintln!("manifest: {}", m.display());
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Buffon(c) => buffon(c),
        Command::Embed(a) => embed_cmd(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::Gdelta(c) => gdelta(c),
        Command::Experiment(c) => experiment(c),
    }
}
