use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use alcurate::config::{parse_generator_spec, set_generator_key, SuiteConfig};
use alcurate::data::Dataset;
use alcurate::datagen::{generate, load_csv, write_csv, GeneratorSpec};
use alcurate::par::Execution;
use alcurate::report::{
    ablation_configs, render_calibration_table, render_rows, render_sampling_table, run_ablation,
    run_rows, RunReport,
};

const OUT_DIR_ENV: &str = "ALCURATE_OUT_DIR";

#[derive(Parser)]
#[command(name = "alcurate", version, about = "Active-learning subset selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic grouped dataset as CSV.
    Generate(GenerateArgs),
    /// Run every configured strategy and print a results table.
    Run(SuiteArgs),
    /// Run the sampling-mode and calibration grids.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator spec file (`key = value` lines).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Subjects per class, comma separated; also sets the class count.
    #[arg(long, value_name = "LIST")]
    subjects_per_class: Option<String>,
    #[arg(long)]
    instances_per_subject: Option<usize>,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    class_separation: Option<f64>,
    #[arg(long)]
    subject_sigma: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV. Defaults to `dataset.csv` in $ALCURATE_OUT_DIR or the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite config file (`key = value` lines). Defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Override any config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// JSON report path. Defaults to `report-<command>.json` in $ALCURATE_OUT_DIR or the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock seconds in the report (makes reruns differ).
    #[arg(long)]
    record_timing: bool,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    suite: SuiteArgs,
    /// Restrict the grids to these methods, comma separated.
    #[arg(long, value_name = "LIST")]
    methods: Option<String>,
}

/// Failure with its exit code: 2 for usage or configuration, 1 for runtime.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl ToString) -> Self {
        Failure { code: 2, message: e.to_string() }
    }

    fn runtime(e: impl ToString) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

fn default_out(out: Option<PathBuf>, file: &str) -> PathBuf {
    out.unwrap_or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_default()
            .join(file)
    })
}

fn create_output(path: &Path) -> Result<File, Failure> {
    File::create(path).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn generate_cmd(args: GenerateArgs) -> Result<(), Failure> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display())))?;
            parse_generator_spec(&text, &p.display().to_string()).map_err(Failure::usage)?
        }
        None => GeneratorSpec::default(),
    };
    let flags: [(&str, Option<String>); 7] = [
        ("subjects_per_class", args.subjects_per_class),
        ("instances_per_subject", args.instances_per_subject.map(|v| v.to_string())),
        ("feature_dim", args.feature_dim.map(|v| v.to_string())),
        ("class_separation", args.class_separation.map(|v| v.to_string())),
        ("subject_sigma", args.subject_sigma.map(|v| v.to_string())),
        ("noise_sigma", args.noise_sigma.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            set_generator_key(&mut spec, key, &v).map_err(Failure::usage)?;
        }
    }
    spec.validate().map_err(Failure::usage)?;
    let out = default_out(args.out, "dataset.csv");
    let file = create_output(&out)?;
    let dataset = generate(&spec).map_err(Failure::runtime)?;
    write_csv(&dataset, file).map_err(Failure::runtime)?;

    let all: Vec<usize> = (0..dataset.len()).collect();
    let subjects = dataset.subjects_by_class();
    println!("wrote {} instances to {}", dataset.len(), out.display());
    println!("class  subjects  instances");
    for (c, n) in dataset.class_counts(&all).iter().enumerate() {
        println!("{c:>5}  {:>8}  {n:>9}", subjects[c].len());
    }
    Ok(())
}

fn load_suite(args: &SuiteArgs) -> Result<(SuiteConfig, Dataset), Failure> {
    let mut suite = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display())))?;
            SuiteConfig::parse(&text, &p.display().to_string()).map_err(Failure::usage)?
        }
        None => SuiteConfig::default(),
    };
    suite
        .apply_overrides(args.overrides.iter().map(String::as_str))
        .map_err(Failure::usage)?;
    if let Some(s) = args.seed {
        suite.seed = s;
    }
    if let Some(r) = args.repeats {
        suite.repeats = r;
    }
    suite.validate().map_err(Failure::usage)?;
    let dataset = load_csv(&args.data).map_err(Failure::usage)?;
    Ok((suite, dataset))
}

fn check_against(dataset: &Dataset, configs: &[alcurate::experiment::ExperimentConfig]) -> Result<(), Failure> {
    configs
        .iter()
        .try_for_each(|c| c.validate_for(dataset))
        .map_err(Failure::usage)
}

fn finish(mut report: RunReport, started: Instant, args: &SuiteArgs, mut file: File, out: &Path) -> Result<(), Failure> {
    if args.record_timing {
        report.wall_clock_seconds = Some(started.elapsed().as_secs_f64());
    }
    file.write_all(report.to_json().as_bytes())
        .map_err(|e| Failure::runtime(format!("writing {}: {e}", out.display())))?;
    eprintln!("report written to {}", out.display());
    Ok(())
}

fn run_cmd(args: SuiteArgs) -> Result<(), Failure> {
    let (suite, dataset) = load_suite(&args)?;
    check_against(&dataset, &suite.row_configs())?;
    let out = default_out(args.out.clone(), "report-run.json");
    let file = create_output(&out)?;
    let started = Instant::now();
    eprintln!(
        "running {} strategies x {} repeats on {} instances",
        suite.rows.len(),
        suite.repeats,
        dataset.len()
    );
    let report = run_rows(&dataset, &suite, Execution::from_jobs(args.jobs)).map_err(Failure::runtime)?;
    print!("{}", render_rows(&report.rows, suite.repeats));
    finish(report, started, &args, file, &out)
}

fn ablate_cmd(args: AblateArgs) -> Result<(), Failure> {
    let AblateArgs { suite: args, methods } = args;
    let (mut suite, dataset) = load_suite(&args)?;
    if let Some(m) = methods {
        suite.set("methods", &m).map_err(Failure::usage)?;
        suite.validate().map_err(Failure::usage)?;
    }
    let configs = ablation_configs(&dataset, &suite);
    check_against(&dataset, &configs)?;
    let out = default_out(args.out.clone(), "report-ablate.json");
    let file = create_output(&out)?;
    let started = Instant::now();
    eprintln!(
        "running {} ablation cells x {} repeats on {} instances",
        configs.len(),
        suite.repeats,
        dataset.len()
    );
    let report =
        run_ablation(&dataset, &suite, Execution::from_jobs(args.jobs)).map_err(Failure::runtime)?;
    let ab = report.ablation.as_ref().expect("ablation report has grids");
    println!("Sampling mode and k");
    print!("{}", render_sampling_table(ab, suite.repeats));
    println!();
    println!("Calibration");
    print!("{}", render_calibration_table(ab, suite.repeats));
    finish(report, started, &args, file, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate_cmd(a),
        Command::Run(a) => run_cmd(a),
        Command::Ablate(a) => ablate_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
