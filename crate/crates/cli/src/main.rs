use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riemet::convergence::{classify_d_convergence, ClassifyOptions, MetricSequence, Verdict};
use riemet::distances::{d_upper, theta_y, DBoundOptions};
use riemet::fiber::{SymTensor, ThetaOptions};
use riemet::field::io::{FieldFile, FileFormat};
use riemet::field::{make_grid, CellMask, GrefSpec, GridDomain, SemimetricField};
use riemet::torus::{cusp_metric, inj_metric, run_probe, Probe, ProbeOptions};

#[derive(Parser)]
#[command(name = "riemet", version, about = "Distances and convergence diagnostics for metric fields on the flat torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Binary,
}

impl From<Format> for FileFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => FileFormat::Text,
            Format::Binary => FileFormat::Binary,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeArg {
    Curvature,
    Distance,
    Diameter,
    Injectivity,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Identity,
    Scaled,
    Zero,
    Cusp,
    Inj,
    /// `k²·I` on the quarter `x, y < 0`, the identity elsewhere.
    Escape,
    /// Blockwise random positive-definite field.
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Integrated fiber distance between two field files.
    Theta {
        a: PathBuf,
        b: PathBuf,
        /// JSON array of booleans selecting the cells to integrate over.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Iteration budget of the path optimizer.
        #[arg(long, default_value_t = 500)]
        budget: usize,
    },
    /// Lower and upper bounds for the L² distance.
    Dbounds {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 500)]
        budget: usize,
    },
    /// Convergence report for a sequence of field files.
    Classify {
        /// Text file listing one field file per line, relative to the manifest.
        manifest: PathBuf,
        limit: PathBuf,
        #[arg(long, value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
        #[arg(long)]
        tol_meas: Option<f64>,
        #[arg(long)]
        tol_vol: Option<f64>,
        #[arg(long, default_value_t = 500)]
        budget: usize,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probe tables for the degenerating torus sequences, as CSV.
    Example1 {
        #[arg(value_enum)]
        probe: ProbeArg,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 256)]
        res: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a field file.
    Generate {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 64)]
        res: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Factor for `scaled`.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes one field file per k, a manifest and the flat limit into a directory.
    Sequence {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 256)]
        res: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Input(String),
    NoConvergence(String),
}

impl From<riemet::Error> for Failure {
    fn from(e: riemet::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_pair(a: &Path, b: &Path) -> Result<(SemimetricField<f64>, SemimetricField<f64>), Failure> {
    let fa = FieldFile::read(a).map_err(|e| Failure::Input(format!("{}: {e}", a.display())))?;
    let fb = FieldFile::read(b).map_err(|e| Failure::Input(format!("{}: {e}", b.display())))?;
    let f0 = fa.to_field::<f64>()?;
    let f1 = fb.to_field_on(f0.domain().clone()).map_err(|e| Failure::Input(format!("{}: {e}", b.display())))?;
    Ok((f0, f1))
}

fn read_mask(path: &Path, len: usize) -> Result<CellMask, Failure> {
    let text = std::fs::read_to_string(path)?;
    let bits: Vec<bool> = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: expected a JSON array of booleans ({e})", path.display())))?;
    if bits.len() != len {
        return Err(Failure::Input(format!("mask has {} entries, field has {len} cells", bits.len())));
    }
    Ok(CellMask::new(bits))
}

fn theta_opts(budget: usize) -> ThetaOptions<f64> {
    ThetaOptions {
        max_iter: budget,
        ..Default::default()
    }
}

fn cmd_theta(a: &Path, b: &Path, mask: Option<&Path>, budget: usize) -> Outcome {
    let (f0, f1) = read_pair(a, b)?;
    let y = match mask {
        Some(p) => read_mask(p, f0.len())?,
        None => CellMask::full(f0.len()),
    };
    let r = theta_y(&f0, &f1, &y, &theta_opts(budget))?;
    let vals: Vec<f64> = y.iter_set().map(|i| r.per_cell.get(i)).collect();
    let (min, max) = vals.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mean = if vals.is_empty() { 0.0 } else { vals.iter().sum::<f64>() / vals.len() as f64 };
    println!("theta\t{}", r.value);
    println!("cells\t{}", vals.len());
    println!("distinct_pairs\t{}", r.distinct_pairs);
    println!("cell_theta_min\t{}", if vals.is_empty() { 0.0 } else { min });
    println!("cell_theta_mean\t{mean}");
    println!("cell_theta_max\t{max}");
    println!("converged\t{}", r.converged);
    if r.converged {
        Ok(())
    } else {
        Err(Failure::NoConvergence("path optimizer hit the iteration budget".into()))
    }
}

fn cmd_dbounds(a: &Path, b: &Path, budget: usize) -> Outcome {
    let (f0, f1) = read_pair(a, b)?;
    let opts = DBoundOptions {
        max_iter: budget,
        theta: theta_opts(budget),
        ..Default::default()
    };
    let r = d_upper(&f0, &f1, &opts)?;
    println!("lower\t{}", r.lower);
    println!("upper\t{}", r.upper);
    println!("gap\t{}", r.gap());
    println!("lower_volume\t{}", r.lower_detail.volume_bound);
    println!("lower_theta\t{}", r.lower_detail.theta_bound);
    println!("theta_m\t{}", r.lower_detail.theta_m);
    println!("witness\t{:?}", r.witness);
    println!("witness_segments\t{}", r.witness_path.segments());
    for (c, len) in &r.candidates {
        println!("candidate\t{c:?}\t{len}");
    }
    println!("iterations\t{}", r.iterations);
    println!("converged\t{}", r.converged);
    if r.converged {
        Ok(())
    } else {
        Err(Failure::NoConvergence("path optimizer hit the iteration budget".into()))
    }
}

fn read_manifest(manifest: &Path) -> Result<Vec<PathBuf>, Failure> {
    let text = std::fs::read_to_string(manifest).map_err(|e| Failure::Input(format!("{}: {e}", manifest.display())))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let paths: Vec<PathBuf> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect();
    if paths.len() < 2 {
        return Err(Failure::Input("manifest must list at least two fields".into()));
    }
    Ok(paths)
}

fn cmd_classify(
    manifest: &Path,
    limit: &Path,
    eps_grid: Option<Vec<f64>>,
    tol_meas: Option<f64>,
    tol_vol: Option<f64>,
    budget: usize,
    out: Option<&Path>,
) -> Outcome {
    let limit_file = FieldFile::read(limit).map_err(|e| Failure::Input(format!("{}: {e}", limit.display())))?;
    let g0 = limit_file.to_field::<f64>()?;
    let terms = read_manifest(manifest)?
        .iter()
        .map(|p| {
            FieldFile::read(p)
                .and_then(|f| f.to_field_on(g0.domain().clone()))
                .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let seq = MetricSequence::new(terms, Some(g0))?;
    let mut opts = ClassifyOptions {
        tol_meas,
        tol_vol,
        theta: theta_opts(budget),
        ..Default::default()
    };
    if let Some(e) = eps_grid {
        opts.eps_grid = e;
    }
    let r = classify_d_convergence(&seq, &opts)?;
    let mut csv = String::from("term");
    for e in &r.eps_grid {
        let _ = write!(csv, ",in_measure_{e}");
    }
    csv.push_str(",l1_density,uniform_measure,theta\n");
    for (i, row) in r.in_measure_gaps.iter().enumerate() {
        let _ = write!(csv, "{i}");
        for v in row {
            let _ = write!(csv, ",{v}");
        }
        let theta = r.theta_gaps.get(i).map_or(String::new(), |t| t.to_string());
        let _ = writeln!(csv, ",{},{},{}", r.l1_density_gaps[i], r.uniform_measure_gaps[i], theta);
    }
    print!("{csv}");
    println!("tol_meas\t{}", r.tol_meas);
    println!("tol_vol\t{}", r.tol_vol);
    println!("basis\t{:?}", r.basis);
    println!(
        "verdict\t{}",
        match r.verdict {
            Verdict::Converged => "Converged",
            Verdict::NotConverged => "NotConverged",
            Verdict::Inconclusive => "Inconclusive",
        }
    );
    if let Some(p) = out {
        std::fs::write(p, csv)?;
    }
    Ok(())
}

fn cmd_example1(probe: ProbeArg, ks: &[usize], res: usize, out: Option<&Path>) -> Outcome {
    let probe = match probe {
        ProbeArg::Curvature => Probe::Curvature,
        ProbeArg::Distance => Probe::Distance,
        ProbeArg::Diameter => Probe::Diameter,
        ProbeArg::Injectivity => Probe::Injectivity,
    };
    let opts = ProbeOptions {
        res,
        ..Default::default()
    };
    let r = run_probe::<f64>(probe, ks, &opts)?;
    let mut csv = format!("k,{}", r.quantity);
    if let Some((name, _)) = &r.secondary {
        let _ = write!(csv, ",{name}");
    }
    csv.push('\n');
    for (i, k) in r.ks.iter().enumerate() {
        let _ = write!(csv, "{k},{}", r.values[i]);
        if let Some((_, v)) = &r.secondary {
            let _ = write!(csv, ",{}", v[i]);
        }
        csv.push('\n');
    }
    let _ = writeln!(csv, "flat,{}", r.flat_value);
    print!("{csv}");
    if let Some(p) = out {
        std::fs::write(p, csv)?;
    }
    Ok(())
}

fn random_field(d: &Arc<GridDomain<f64>>, seed: u64) -> riemet::Result<SemimetricField<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<SymTensor<f64>> = (0..4)
        .map(|_| {
            let (a, c) = (rng.gen_range(-1.0..1.0f64).exp(), rng.gen_range(-1.0..1.0f64).exp());
            let b = rng.gen_range(-0.5..0.5) * (a * c).sqrt();
            SymTensor::from_packed(2, &[a, b, c]).expect("valid packed tensor")
        })
        .collect();
    SemimetricField::from_fn(d.clone(), |p| {
        let q = usize::from(p[0] >= 0.0) * 2 + usize::from(p[1] >= 0.0);
        blocks[q]
    })
}

fn escape_field(d: &Arc<GridDomain<f64>>, k: usize) -> riemet::Result<SemimetricField<f64>> {
    let c = (k * k) as f64;
    SemimetricField::from_fn(d.clone(), |p| {
        if p[0] < 0.0 && p[1] < 0.0 {
            SymTensor::scaled_identity(2, c)
        } else {
            SymTensor::identity(2)
        }
    })
}

fn build(kind: Kind, res: usize, k: usize, scale: f64, seed: u64) -> riemet::Result<SemimetricField<f64>> {
    let d = make_grid::<f64>(2, res, GrefSpec::Identity)?;
    match kind {
        Kind::Identity => Ok(SemimetricField::reference(d)),
        Kind::Scaled => SemimetricField::constant(d, SymTensor::scaled_identity(2, scale)),
        Kind::Zero => Ok(SemimetricField::zero(d)),
        Kind::Cusp => Ok(cusp_metric(&d, k)?.into_semi()),
        Kind::Inj => Ok(inj_metric(&d, k)?.into_semi()),
        Kind::Escape => escape_field(&d, k),
        Kind::Random => random_field(&d, seed),
    }
}

fn cmd_generate(kind: Kind, res: usize, k: usize, scale: f64, seed: u64, format: Format, out: &Path) -> Outcome {
    let f = build(kind, res, k, scale, seed)?;
    FieldFile::from_field(&f).write(out, format.into())?;
    Ok(())
}

fn cmd_sequence(kind: Kind, ks: &[usize], res: usize, format: Format, out: &Path) -> Outcome {
    std::fs::create_dir_all(out)?;
    let ext = match format {
        Format::Text => "json",
        Format::Binary => "rmf",
    };
    let mut manifest = String::new();
    for &k in ks {
        let name = format!("term_k{k}.{ext}");
        let f = build(kind, res, k, 1.0, k as u64)?;
        FieldFile::from_field(&f).write(&out.join(&name), format.into())?;
        let _ = writeln!(manifest, "{name}");
    }
    std::fs::write(out.join("manifest.txt"), manifest)?;
    let flat = build(Kind::Identity, res, 0, 1.0, 0)?;
    FieldFile::from_field(&flat).write(&out.join(format!("limit.{ext}")), format.into())?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Theta { a, b, mask, budget } => cmd_theta(&a, &b, mask.as_deref(), budget),
        Command::Dbounds { a, b, budget } => cmd_dbounds(&a, &b, budget),
        Command::Classify {
            manifest,
            limit,
            eps_grid,
            tol_meas,
            tol_vol,
            budget,
            out,
        } => cmd_classify(&manifest, &limit, eps_grid, tol_meas, tol_vol, budget, out.as_deref()),
        Command::Example1 { probe, k, res, out } => cmd_example1(probe, &k, res, out.as_deref()),
        Command::Generate {
            kind,
            res,
            k,
            scale,
            seed,
            format,
            out,
        } => cmd_generate(kind, res, k, scale, seed, format, &out),
        Command::Sequence { kind, k, res, format, out } => cmd_sequence(kind, &k, res, format, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::NoConvergence(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(3)
        }
    }
}
