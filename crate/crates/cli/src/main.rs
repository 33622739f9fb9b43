//! `ghostbench`: build spaces and operators, certify weak expansion and
//! localization, run the ghost pipelines, and emit deterministic reports.
//!
//! Exit codes: 0 on success, 2 on precondition/config/schema failures, 3 on
//! numerical non-convergence.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ghostbench_core::bandop::{BandOperator, OperatorFile};
use ghostbench_core::certify::{
    ghost_decay, localization_profile, roe_membership_profile, weak_expander_constants,
};
use ghostbench_core::generators::{generate_sequence, Family, GeneratorSpec};
use ghostbench_core::pipeline::{
    block_select, build_block_ghost, build_gap_ghost, kernel_fixed_vectors,
    localized_witness_provider, onl_block_construction,
};
use ghostbench_core::report::{
    block_ghost_csv, compare_csv, construction_summary, decay_csv, ghost_decay_csv,
    localization_csv, roe_csv, run as run_config, svg_line_plot, weak_expander_csv,
    ExperimentConfig,
};
use ghostbench_core::space::{BoxSpace, SpaceFile};
use ghostbench_core::{Error, Result};

#[derive(Parser)]
#[command(name = "ghostbench", version, about = "finite-space ghost-operator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a box space from a deterministic family.
    Gen(GenArgs),
    /// Space utilities: validation and geometry profiles.
    #[command(subcommand)]
    Space(SpaceCommand),
    /// Operator utilities: Laplacians, norms, truncation.
    #[command(subcommand)]
    Op(OpCommand),
    /// Certification solvers.
    #[command(subcommand)]
    Certify(CertifyCommand),
    /// Ghost pipelines.
    #[command(subcommand)]
    Ghost(GhostCommand),
    /// Run a full experiment config and write its report bundle.
    Run(RunArgs),
    /// Compare two CSV reports with identical schemas.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: String,
    /// Comma-separated block sizes (cycle length, torus side, vertex count,
    /// or the prime p for cayley_sl2).
    #[arg(long = "n", value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Degree for random_regular.
    #[arg(long = "d")]
    degree: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum SpaceCommand {
    /// Validate a space file and write it back in canonical form.
    Build {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measured bounded-geometry profile N(R) of the realized space.
    Profile {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OpCommand {
    /// Laplacian at scale R over the realized metric of a space file.
    Laplacian {
        #[arg(long)]
        space: PathBuf,
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral norm of an operator.
    Norm {
        #[arg(long)]
        op: PathBuf,
    },
    /// Zero all entries beyond distance R.
    Truncate {
        #[arg(long)]
        op: PathBuf,
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum CertifyCommand {
    /// Weak-expander constants c_n(R, S) with witnesses.
    We {
        #[arg(long = "box")]
        box_path: PathBuf,
        #[arg(long = "R")]
        r: f64,
        #[arg(long = "S", value_delimiter = ',')]
        s: Vec<f64>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Localization profile loc_S(T) of an operator.
    Onl {
        #[arg(long)]
        op: PathBuf,
        #[arg(long = "S", value_delimiter = ',')]
        s: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-block ghost metrics (max column norm, max entry).
    Decay {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncation-error profile against the band radius.
    Roe {
        #[arg(long)]
        op: PathBuf,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GhostCommand {
    /// Spectral-gap ghost f(Delta_R) with its ledger and decay report.
    Gap {
        #[arg(long = "box")]
        box_path: PathBuf,
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Inductive block construction followed by the high-bump ghost.
    Blocks {
        #[arg(long = "box")]
        box_path: PathBuf,
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        count: usize,
        /// Fixed localization constant; witnesses must certify at most this.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Zero every block outside the given indices.
    Select {
        #[arg(long)]
        ghost: PathBuf,
        #[arg(long, value_delimiter = ',')]
        indices: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
}

/// Ghost operators on disk carry their block structure alongside the entries.
#[derive(Serialize, Deserialize)]
struct GhostFile {
    space: String,
    kind: String,
    kappa: f64,
    eps: f64,
    degree: usize,
    sup_error: f64,
    blocks: Vec<Vec<usize>>,
    entries: Vec<(usize, usize, f64)>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NormNonConvergence { .. } | Error::DegreeCapExceeded { .. } => 3,
        _ => 2,
    }
}

fn load_box(path: &Path) -> Result<BoxSpace> {
    let file: SpaceFile = serde_json::from_slice(&std::fs::read(path)?)?;
    file.to_box()
}

/// Loads an operator file, resolving its space reference relative to the
/// operator file's directory.
fn load_operator(path: &Path) -> Result<(BandOperator, BoxSpace)> {
    let file: OperatorFile = serde_json::from_slice(&std::fs::read(path)?)?;
    let space_path = path.parent().unwrap_or(Path::new(".")).join(&file.space);
    let box_space = load_box(&space_path)?;
    let op = file.to_operator(box_space.realized().clone())?;
    Ok((op, box_space))
}

fn space_ref_for(out: &Path, space: &Path) -> String {
    // Store the space path relative to the operator file when possible.
    match (out.parent(), space.strip_prefix(out.parent().unwrap_or(Path::new(".")))) {
        (_, Ok(rel)) => rel.display().to_string(),
        _ => space.display().to_string(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, serde_json::to_vec_pretty(value)?)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Gen(args) => {
            let spec = GeneratorSpec {
                family: args.family.parse::<Family>()?,
                sizes: args.sizes,
                degree: args.degree,
                seed: args.seed,
            };
            let bx = generate_sequence(&spec)?;
            write_json(&args.out, &SpaceFile::from_box(&bx))?;
            println!(
                "wrote {} ({} blocks, {} points)",
                args.out.display(),
                bx.block_count(),
                bx.realized().len()
            );
            Ok(())
        }
        Command::Space(cmd) => space_command(cmd),
        Command::Op(cmd) => op_command(cmd),
        Command::Certify(cmd) => certify_command(cmd),
        Command::Ghost(cmd) => ghost_command(cmd),
        Command::Run(args) => {
            let config: ExperimentConfig =
                serde_json::from_slice(&std::fs::read(&args.config)?)?;
            let bundle = run_config(&config)?;
            bundle.write_to(&args.out_dir)?;
            for (name, _) in &bundle.files {
                println!("wrote {}", args.out_dir.join(name).display());
            }
            Ok(())
        }
        Command::Compare(args) => {
            let a = std::fs::read_to_string(&args.a)?;
            let b = std::fs::read_to_string(&args.b)?;
            let diff = compare_csv(&a, &b)?;
            if diff.identical {
                println!("identical ({} rows)", diff.rows);
            } else {
                for col in &diff.columns {
                    if col.max_delta > 0.0 || col.mismatches > 0 {
                        println!(
                            "{}: max delta {}, {} mismatched cells",
                            col.name, col.max_delta, col.mismatches
                        );
                    }
                }
            }
            Ok(())
        }
    }
}

fn space_command(cmd: SpaceCommand) -> Result<()> {
    match cmd {
        SpaceCommand::Build { input, out } => {
            let bx = load_box(&input)?;
            write_json(&out, &SpaceFile::from_box(&bx))?;
            println!(
                "validated {} blocks / {} points; wrote {}",
                bx.block_count(),
                bx.realized().len(),
                out.display()
            );
            Ok(())
        }
        SpaceCommand::Profile { space, radii, out } => {
            let bx = load_box(&space)?;
            let profile = bx.realized().geometry_profile(&radii)?;
            let mut csv = String::from("r,n\n");
            for (r, n) in &profile.pairs {
                csv.push_str(&format!("{r},{n}\n"));
            }
            print!("{csv}");
            if let Some(path) = out {
                write_text(&path, &csv)?;
            }
            Ok(())
        }
    }
}

fn op_command(cmd: OpCommand) -> Result<()> {
    match cmd {
        OpCommand::Laplacian { space, r, out } => {
            let bx = load_box(&space)?;
            let op = BandOperator::laplacian(bx.realized().clone(), r)?;
            write_json(&out, &OperatorFile::from_operator(&op, &space_ref_for(&out, &space)))?;
            println!(
                "wrote {} ({} entries, propagation {})",
                out.display(),
                op.nnz(),
                op.propagation()
            );
            Ok(())
        }
        OpCommand::Norm { op } => {
            let (operator, _) = load_operator(&op)?;
            println!("{}", operator.op_norm()?);
            Ok(())
        }
        OpCommand::Truncate { op, r, out } => {
            let (operator, _) = load_operator(&op)?;
            let file: OperatorFile = serde_json::from_slice(&std::fs::read(&op)?)?;
            let truncated = operator.truncate(r)?;
            write_json(&out, &OperatorFile::from_operator(&truncated, &file.space))?;
            println!(
                "wrote {} (propagation {} -> {})",
                out.display(),
                operator.propagation(),
                truncated.propagation()
            );
            Ok(())
        }
    }
}

fn certify_command(cmd: CertifyCommand) -> Result<()> {
    match cmd {
        CertifyCommand::We { box_path, r, s, out_csv, out_json } => {
            let bx = load_box(&box_path)?;
            let report = weak_expander_constants(&bx, r, &s)?;
            let csv = weak_expander_csv(&report);
            print!("{csv}");
            if let Some(path) = out_csv {
                write_text(&path, &csv)?;
            }
            if let Some(path) = out_json {
                write_json(&path, &report)?;
            }
            Ok(())
        }
        CertifyCommand::Onl { op, s, out } => {
            let (operator, _) = load_operator(&op)?;
            let profile = localization_profile(&operator, &s, &op.display().to_string())?;
            let csv = localization_csv(&profile);
            print!("{csv}");
            if let Some(path) = out {
                write_text(&path, &csv)?;
            }
            Ok(())
        }
        CertifyCommand::Decay { op, out } => {
            let (operator, bx) = load_operator(&op)?;
            let report = ghost_decay(&operator, &bx)?;
            let csv = ghost_decay_csv(&report);
            print!("{csv}");
            if let Some(path) = out {
                write_text(&path, &csv)?;
            }
            Ok(())
        }
        CertifyCommand::Roe { op, radii, out } => {
            let (operator, _) = load_operator(&op)?;
            let profile = roe_membership_profile(&operator, &radii)?;
            let csv = roe_csv(&profile);
            print!("{csv}");
            if let Some(path) = out {
                write_text(&path, &csv)?;
            }
            Ok(())
        }
    }
}

fn ghost_command(cmd: GhostCommand) -> Result<()> {
    match cmd {
        GhostCommand::Gap { box_path, r, kappa, eps, out, report } => {
            let bx = load_box(&box_path)?;
            let output = build_gap_ghost(&bx, r, kappa, eps)?;
            let fixed = kernel_fixed_vectors(&output.op, &bx, r, eps)?;
            let ghost_file = GhostFile {
                space: space_ref_for(&out, &box_path),
                kind: "gap".into(),
                kappa,
                eps,
                degree: output.approx.degree(),
                sup_error: output.approx.sup_error,
                blocks: (0..bx.block_count())
                    .map(|b| bx.block_points(b))
                    .collect::<Result<_>>()?,
                entries: output.op.upper_entries(),
            };
            write_json(&out, &ghost_file)?;
            let csv = decay_csv(&output);
            if let Some(path) = &report {
                write_text(path, &csv)?;
                let xs: Vec<f64> = output.ledger.iter().map(|l| l.block as f64).collect();
                let ys: Vec<f64> = output.ledger.iter().map(|l| l.g).collect();
                write_text(
                    &path.with_extension("svg"),
                    &svg_line_plot("max column norm vs block", &xs, &ys),
                )?;
            }
            print!("{csv}");
            println!(
                "degree {} sup_error {} fixed vectors {}/{}",
                output.approx.degree(),
                output.approx.sup_error,
                fixed.fixed_count,
                fixed.rows.len()
            );
            Ok(())
        }
        GhostCommand::Blocks { box_path, r, count, c, eps, out, report } => {
            let bx = load_box(&box_path)?;
            let co = onl_block_construction(&bx, r, count, c, localized_witness_provider)?;
            let output = build_block_ghost(&co, &bx, eps)?;
            let ghost_file = GhostFile {
                space: space_ref_for(&out, &box_path),
                kind: "blocks".into(),
                kappa: co.kappa,
                eps,
                degree: output.approx.degree(),
                sup_error: output.approx.sup_error,
                blocks: co.blocks.iter().map(|b| b.support.clone()).collect(),
                entries: output.op.upper_entries(),
            };
            write_json(&out, &ghost_file)?;
            write_json(
                &out.with_file_name("construction.json"),
                &construction_summary(&co),
            )?;
            let csv = block_ghost_csv(&output);
            if let Some(path) = report {
                write_text(&path, &csv)?;
            }
            print!("{csv}");
            Ok(())
        }
        GhostCommand::Select { ghost, indices, out } => {
            let file: GhostFile = serde_json::from_slice(&std::fs::read(&ghost)?)?;
            let space_path = ghost.parent().unwrap_or(Path::new(".")).join(&file.space);
            let bx = load_box(&space_path)?;
            let op = BandOperator::from_entries(
                Arc::clone(bx.realized()),
                file.entries.iter().copied(),
            )?;
            let selected = block_select(&op, &file.blocks, &indices)?;
            let selected_file = GhostFile {
                space: file.space.clone(),
                kind: format!("{}-select", file.kind),
                kappa: file.kappa,
                eps: file.eps,
                degree: file.degree,
                sup_error: file.sup_error,
                blocks: indices.iter().map(|&i| file.blocks[i].clone()).collect(),
                entries: selected.upper_entries(),
            };
            write_json(&out, &selected_file)?;
            println!(
                "wrote {} ({} of {} blocks kept, norm {})",
                out.display(),
                indices.len(),
                file.blocks.len(),
                selected.op_norm()?
            );
            Ok(())
        }
    }
}
