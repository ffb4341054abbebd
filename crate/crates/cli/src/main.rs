use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use roeforge::colouring::{colour_permutations, decompose_translation, edge_colouring};
use roeforge::families::FamilyManifest;
use roeforge::io::{read_space_file, read_to_string, write_colouring, write_operator};
use roeforge::kazhdan::{self, averaging_from_colouring, gap_report, kazhdan_projection, GapOptions};
use roeforge::scalar::{parse_rational, Rational};
use roeforge::space::FiniteSpace;
use roeforge::transalg::PartialTranslation;
use roeforge::verify;

/// Exit status when the family has no uniform gap below the threshold.
const EXIT_NO_GAP: u8 = 2;

#[derive(Parser)]
#[command(name = "roeforge", version, about = "Spectral gaps of colouring averages on finite metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// List coarse components and their sizes.
    Components {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: TableFormat,
    },
    /// Spectral gap report for the colouring average of a space or family.
    Gap {
        /// Graph file; omit when --family is given.
        input: Option<PathBuf>,
        /// Family manifest (JSON).
        #[arg(long, conflicts_with = "input")]
        family: Option<PathBuf>,
        #[arg(long, default_value = "1")]
        radius: String,
        #[arg(long, default_value_t = kazhdan::DEFAULT_KMAX)]
        kmax: u32,
        #[arg(long, default_value_t = kazhdan::DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Displacement constant used for the rate bound.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, env = "ROEFORGE_JOBS", default_value_t = 0)]
        jobs: usize,
    },
    /// Randomised exact invariant suite.
    Verify {
        /// Graph file to draw cases over; omit for the built-in corpus.
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: TableFormat,
    },
    /// Edge colouring of the tube graph, with optional operator exports.
    Colour {
        input: PathBuf,
        #[arg(long, default_value = "1")]
        radius: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory receiving perm_<i>.op for every colour involution.
        #[arg(long)]
        perms_dir: Option<PathBuf>,
        /// File of `y x` lines (point names) describing a partial
        /// translation; its idempotents f_<i>.op go to --perms-dir.
        #[arg(long, requires = "perms_dir")]
        translation: Option<PathBuf>,
    },
}

type CliResult = Result<ExitCode, String>;

fn parse_radius(text: &str) -> Result<Rational, String> {
    match parse_rational(text) {
        Some(r) if r >= Rational::from_integer(0.into()) => Ok(r),
        _ => Err(format!("invalid radius `{text}`")),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn load_space(path: &Path) -> Result<Arc<FiniteSpace>, String> {
    read_space_file(path).map(Arc::new).map_err(|e| format!("{}: {e}", path.display()))
}

fn components(input: &Path, format: TableFormat) -> CliResult {
    let space = load_space(input)?;
    let sizes = space.component_sizes();
    let text = match format {
        TableFormat::Text => {
            let mut s = String::from("id size\n");
            for (id, size) in sizes.iter().enumerate() {
                s.push_str(&format!("{id} {size}\n"));
            }
            s
        }
        TableFormat::Json => {
            let rows: Vec<_> = sizes.iter().enumerate().map(|(id, size)| json!({"id": id, "size": size})).collect();
            format!("{}\n", serde_json::to_string_pretty(&json!({"space": space.name(), "components": rows})).unwrap())
        }
    };
    emit(None, &text)?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn gap(
    input: Option<&Path>,
    family: Option<&Path>,
    radius: &str,
    kmax: u32,
    threshold: f64,
    c: Option<f64>,
    format: ReportFormat,
    out: Option<&Path>,
    jobs: usize,
) -> CliResult {
    let radius = parse_radius(radius)?;
    if kmax == 0 {
        return Err("--kmax must be at least 1".into());
    }
    if !threshold.is_finite() {
        return Err("--threshold must be finite".into());
    }
    let space = match (input, family) {
        (Some(path), None) => load_space(path)?,
        (None, Some(path)) => {
            let manifest = FamilyManifest::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Arc::new(manifest.build(path.parent()).map_err(|e| format!("{}: {e}", path.display()))?)
        }
        _ => return Err("give either an input file or --family".into()),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| e.to_string())?;
    let report = pool.install(|| {
        let colouring = edge_colouring(&space, &radius).map_err(|e| e.to_string())?;
        let a = averaging_from_colouring(&colouring);
        let p = kazhdan_projection(&space);
        let mut opts = GapOptions::new(kmax);
        opts.threshold = threshold;
        opts.c = c;
        opts.radius = Some(radius.clone());
        gap_report(&a, &p, &opts).map_err(|e| e.to_string())
    })?;
    for d in report.diagnostics.iter().filter(|d| d.no_effective_gap) {
        eprintln!("warning: component {} has no effective gap", d.id);
    }
    let text = match format {
        ReportFormat::Json => format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
        ReportFormat::Csv => report.to_csv(),
    };
    emit(out, &text)?;
    Ok(if report.uniform_gap { ExitCode::SUCCESS } else { ExitCode::from(EXIT_NO_GAP) })
}

fn verify_cmd(input: Option<&Path>, cases: usize, seed: u64, format: TableFormat) -> CliResult {
    let space = input.map(load_space).transpose()?;
    let report = verify::run_suite(space, cases, seed);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = match format {
        TableFormat::Json => format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
        TableFormat::Text => {
            let mut s = format!(
                "{} cases, {} checks, {} failures (seed {})\n",
                report.cases,
                report.checks_run,
                report.failures.len(),
                report.seed
            );
            for f in &report.failures {
                s.push_str(&format!("FAIL {} case {}: {}\n{}", f.check, f.case, f.message, f.counterexample));
            }
            if report.passed() {
                s.push_str("PASS\n");
            }
            s
        }
    };
    emit(None, &text)?;
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn read_translation(path: &Path, space: &Arc<FiniteSpace>) -> Result<PartialTranslation, String> {
    let text = read_to_string(path).map_err(|e| e.to_string())?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [y, x] = tokens[..] else {
            return Err(format!("{}: line {}: expected `<y> <x>`", path.display(), i + 1));
        };
        let idx = |name: &str| {
            space
                .point_index(name)
                .ok_or_else(|| format!("{}: line {}: unknown point `{name}`", path.display(), i + 1))
        };
        pairs.push((idx(y)?, idx(x)?));
    }
    PartialTranslation::new(space, pairs).map_err(|e| format!("{}: {e}", path.display()))
}

fn colour(
    input: &Path,
    radius: &str,
    out: Option<&Path>,
    perms_dir: Option<&Path>,
    translation: Option<&Path>,
) -> CliResult {
    let radius = parse_radius(radius)?;
    let space = load_space(input)?;
    let colouring = edge_colouring(&space, &radius).map_err(|e| e.to_string())?;
    emit(out, &write_colouring(&colouring))?;
    if let Some(dir) = perms_dir {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let write = |name: String, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))
        };
        for (i, p) in colour_permutations(&colouring).iter().enumerate() {
            write(format!("perm_{i}.op"), write_operator(&p.to_op::<Rational>()))?;
        }
        if let Some(tpath) = translation {
            let t = read_translation(tpath, &space)?;
            let dec = decompose_translation(&t, &colouring).map_err(|e| e.to_string())?;
            for i in 0..dec.perms().len() {
                write(format!("f_{i}.op"), write_operator(&dec.idempotent::<Rational>(i)))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Components { input, format } => components(&input, format),
        Command::Gap { input, family, radius, kmax, threshold, c, format, out, jobs } => gap(
            input.as_deref(),
            family.as_deref(),
            &radius,
            kmax,
            threshold,
            c,
            format,
            out.as_deref(),
            jobs,
        ),
        Command::Verify { input, cases, seed, format } => verify_cmd(input.as_deref(), cases, seed, format),
        Command::Colour { input, radius, out, perms_dir, translation } => {
            colour(&input, &radius, out.as_deref(), perms_dir.as_deref(), translation.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the generic error status; 2 means "no gap".
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
