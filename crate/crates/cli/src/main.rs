//! `timexplain`: explain time series classifiers from the command line.
//!
//! Exit codes: 0 success, 2 flag errors, 3 data errors, 4 model errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use timexplain::explain::{explain_classifier, ExplainConfig, ExplainError, FragmentPolicy, DEFAULT_BUDGET, DEFAULT_RUNS};
use timexplain::io::{emit_plot_data, read_explanation, read_ucr, write_explanation, ExplanationDocument, IoError};
use timexplain::mappings::{build_replacement, MappingError, MappingFunction, MappingKind, ReplacementKind, ReplacementStrategy};
use timexplain::models::{protocol, Estimator, ExternalModel, KnnModel, ModelError, SpectrumCentroidModel};
use timexplain::similarity::{build_matrix, Domain};
use timexplain::{Dataset, Impact, SimplifiedInput};

const DEFAULT_K: usize = 5;

#[derive(Debug)]
enum CliError {
    Flag(String),
    Data(String),
    Model(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Flag(_) => 2,
            CliError::Data(_) => 3,
            CliError::Model(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Flag(m) | CliError::Data(m) | CliError::Model(m) => m,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::EmptyTrainingSet | ModelError::MissingLabels | ModelError::EmptyClass(_) => CliError::Data(e.to_string()),
            ModelError::DimensionMismatch { .. } => CliError::Data(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<ExplainError> for CliError {
    fn from(e: ExplainError) -> Self {
        match e {
            ExplainError::InvalidConfig(m) => CliError::Flag(m),
            ExplainError::Model(m) => m.into(),
            ExplainError::OutputShape { .. } => CliError::Model(e.to_string()),
            ExplainError::Mapping(MappingError::FragmentCountOutOfRange { fragments, max }) => {
                CliError::Flag(format!("--fragments {fragments} out of range 1..={max} for this series"))
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<MappingError> for CliError {
    fn from(e: MappingError) -> Self {
        match e {
            MappingError::FragmentCountOutOfRange { fragments, max } => {
                CliError::Flag(format!("--fragments {fragments} out of range 1..={max} for this series"))
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "timexplain", version, about = "Perturbation-based explanations for time series classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explain one test specimen and write an explanation document plus plot data.
    Explain(ExplainArgs),
    /// Median-correlation matrix of explanation documents.
    Compare(CompareArgs),
    /// Write the perturbed specimen h_x(z') for one mask.
    Perturb(PerturbArgs),
    /// Serve a built-in model over the external-model wire protocol.
    ServeModel(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelChoice {
    Knn,
    SpectrumCentroid,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinModel {
    Knn,
    SpectrumCentroid,
}

#[derive(Clone, Copy, ValueEnum)]
enum MappingChoice {
    TimeSlice,
    FreqPatch,
    FreqFilter,
    Statistics,
}

impl From<MappingChoice> for MappingKind {
    fn from(m: MappingChoice) -> Self {
        match m {
            MappingChoice::TimeSlice => MappingKind::TimeSlice,
            MappingChoice::FreqPatch => MappingKind::FreqPatch,
            MappingChoice::FreqFilter => MappingKind::FreqFilter,
            MappingChoice::Statistics => MappingKind::Statistics,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReplacementChoice {
    Zero,
    LocalMean,
    GlobalMean,
    LocalNoise,
    GlobalNoise,
    Sample,
}

impl From<ReplacementChoice> for ReplacementKind {
    fn from(r: ReplacementChoice) -> Self {
        match r {
            ReplacementChoice::Zero => ReplacementKind::Zero,
            ReplacementChoice::LocalMean => ReplacementKind::LocalMean,
            ReplacementChoice::GlobalMean => ReplacementKind::GlobalMean,
            ReplacementChoice::LocalNoise => ReplacementKind::LocalNoise,
            ReplacementChoice::GlobalNoise => ReplacementKind::GlobalNoise,
            ReplacementChoice::Sample => ReplacementKind::Sample,
        }
    }
}

#[derive(Args)]
struct MappingArgs {
    #[arg(long, value_enum, default_value = "time-slice")]
    mapping: MappingChoice,
    #[arg(long, value_enum, default_value = "sample")]
    replacement: ReplacementChoice,
    /// Fragment count, or "auto".
    #[arg(long, default_value = "auto")]
    fragments: FragmentPolicy,
    /// FIR length for the freq-filter mapping (odd, 3..=d).
    #[arg(long)]
    filter_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExplainArgs {
    /// Training set (UCR format); also the reference set for replacements.
    #[arg(long)]
    train: PathBuf,
    /// Test set holding the specimen.
    #[arg(long)]
    test: PathBuf,
    /// 0-based index of the specimen in the test set.
    #[arg(long)]
    specimen: usize,
    #[arg(long, value_enum, default_value = "knn")]
    model: ModelChoice,
    /// Neighbor count for knn, clamped to the training set size.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Shell command launching an external model (stdio transport).
    #[arg(long, conflicts_with = "model_addr")]
    model_cmd: Option<String>,
    /// host:port of an external model server.
    #[arg(long)]
    model_addr: Option<String>,
    /// Seconds to wait for each external model response.
    #[arg(long, default_value_t = 60)]
    model_timeout: u64,
    /// Identifier recorded in the document; defaults to the model choice.
    #[arg(long)]
    model_name: Option<String>,
    #[command(flatten)]
    mapping: MappingArgs,
    /// Coalitions sampled per run.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    /// Average over environment classes (the default for classifiers).
    #[arg(long, overrides_with = "no_env_classes")]
    env_classes: bool,
    /// Explain each output directly against the whole reference set.
    #[arg(long)]
    no_env_classes: bool,
    /// Explanation document path; plot data goes next to it as .csv and .svg.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, num_args = 1.., required = true)]
    explanations: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PerturbArgs {
    /// Reference set for replacements.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    specimen: usize,
    #[command(flatten)]
    mapping: MappingArgs,
    /// One character per fragment, 1 keeps it and 0 disables it.
    #[arg(long)]
    mask: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, value_enum, default_value = "knn")]
    model: BuiltinModel,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Listen on host:port instead of serving stdin/stdout.
    #[arg(long)]
    listen: Option<String>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("TIMEXPLAIN_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Flag(format!("TIMEXPLAIN_THREADS={value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Flag(format!("cannot size the worker pool: {e}")))
}

fn load_pair(train: &Path, test: &Path) -> Result<(Dataset, Dataset), CliError> {
    let train_set = read_ucr(train)?;
    let test_set = read_ucr(test)?;
    if train_set.series_len() != test_set.series_len() {
        return Err(CliError::Data(format!(
            "train series have length {}, test series {}",
            train_set.series_len(),
            test_set.series_len()
        )));
    }
    Ok((train_set, test_set))
}

fn check_specimen(test: &Dataset, index: usize) -> Result<(), CliError> {
    if index >= test.len() {
        return Err(CliError::Data(format!(
            "--specimen {index} out of range: test set has {} series (valid 0..={})",
            test.len(),
            test.len() - 1
        )));
    }
    Ok(())
}

fn knn(train: &Dataset, k: usize) -> Result<KnnModel<f64>, CliError> {
    if k == 0 {
        return Err(CliError::Flag("--k must be at least 1".into()));
    }
    let k = if k > train.len() {
        log::warn!("--k {k} exceeds the {} training series; using {}", train.len(), train.len());
        train.len()
    } else {
        k
    };
    Ok(KnnModel::new(train.clone(), k)?)
}

fn build_model(args: &ExplainArgs, train: &Dataset) -> Result<Box<dyn Estimator<f64>>, CliError> {
    Ok(match args.model {
        ModelChoice::Knn => Box::new(knn(train, args.k)?),
        ModelChoice::SpectrumCentroid => Box::new(SpectrumCentroidModel::new(train)?),
        ModelChoice::External => {
            let timeout = Duration::from_secs(args.model_timeout);
            match (&args.model_cmd, &args.model_addr) {
                (Some(cmd), None) => Box::new(ExternalModel::spawn(cmd, timeout)?),
                (None, Some(addr)) => Box::new(ExternalModel::connect(addr, timeout)?),
                _ => return Err(CliError::Flag("--model external needs --model-cmd or --model-addr".into())),
            }
        }
    })
}

fn model_id(args: &ExplainArgs) -> String {
    args.model_name.clone().unwrap_or_else(|| {
        match args.model {
            ModelChoice::Knn => "knn",
            ModelChoice::SpectrumCentroid => "spectrum-centroid",
            ModelChoice::External => "external",
        }
        .to_string()
    })
}

fn sibling(path: &Path, extension: &str) -> PathBuf {
    path.with_extension(extension)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_explain(args: ExplainArgs) -> Result<(), CliError> {
    let (train, test) = load_pair(&args.train, &args.test)?;
    check_specimen(&test, args.specimen)?;
    if (args.model_cmd.is_some() || args.model_addr.is_some())
        && !matches!(args.model, ModelChoice::External) {
            return Err(CliError::Flag("--model-cmd and --model-addr need --model external".into()));
        }
    let model = build_model(&args, &train)?;
    let mut env_classes = !args.no_env_classes;
    if env_classes && train.labels().is_none() {
        log::warn!("reference set has no labels; explaining without environment classes");
        env_classes = false;
    }
    let cfg = ExplainConfig {
        mapping: args.mapping.mapping.into(),
        fragments: args.mapping.fragments,
        replacement: args.mapping.replacement.into(),
        runs: args.runs,
        budget: args.samples,
        seed: args.mapping.seed,
        environment_classes: env_classes,
        filter_len: args.mapping.filter_len,
    };
    let specimen = &test.series()[args.specimen];
    let outcome = explain_classifier(model.as_ref(), specimen, &cfg, &train)?;
    let doc = ExplanationDocument::from_outcome(
        dataset_name(&args.test),
        args.specimen,
        model_id(&args),
        test.label(args.specimen).map(str::to_string),
        &cfg,
        specimen.len(),
        &outcome,
    );
    write_explanation(&doc, &args.out)?;
    emit_plot_data(&doc, specimen, sibling(&args.out, "csv"), sibling(&args.out, "svg"))?;
    log::info!("{} model queries", outcome.info.model_queries);
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let mut domain: Option<Domain> = None;
    let mut impacts: BTreeMap<(String, String), Impact> = BTreeMap::new();
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    for path in &args.explanations {
        let doc = read_explanation(path)?;
        let here = Domain::from(doc.mapping_kind()?);
        match domain {
            Some(d) if d != here => {
                return Err(CliError::Data(format!("{} is a {here} explanation, earlier documents are {d}", path.display())))
            }
            _ => domain = Some(here),
        }
        let class = doc
            .primary_class()
            .ok_or_else(|| CliError::Data(format!("{} lists no classes", path.display())))?;
        let impact = Impact::new(class.phi.clone(), class.base_value, class.prediction)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let specimen = format!("{}#{}", doc.dataset, doc.specimen_index);
        let count = seen.entry((doc.model.clone(), specimen.clone())).or_insert(0);
        *count += 1;
        let model = if *count == 1 { doc.model.clone() } else { format!("{}#{count}", doc.model) };
        impacts.insert((model, specimen), impact);
    }
    let matrix = build_matrix(&impacts, domain.expect("at least one document")).map_err(|e| CliError::Data(e.to_string()))?;
    std::fs::write(&args.out, matrix.to_csv())
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    Ok(())
}

fn cmd_perturb(args: PerturbArgs) -> Result<(), CliError> {
    let (train, test) = load_pair(&args.train, &args.test)?;
    check_specimen(&test, args.specimen)?;
    let kind: MappingKind = args.mapping.mapping.into();
    let specimen = test.series()[args.specimen].clone();
    let cfg = ExplainConfig { mapping: kind, fragments: args.mapping.fragments, ..Default::default() };
    let fragments = cfg.resolve_fragments(specimen.len());
    let mask = SimplifiedInput::parse(&args.mask).map_err(|e| CliError::Flag(format!("--mask: {e}")))?;
    if mask.len() != fragments {
        return Err(CliError::Flag(format!("--mask has {} bits but the mapping has {fragments} fragments", mask.len())));
    }
    let replacement = if kind.uses_replacement() {
        let strategy = ReplacementStrategy { kind: args.mapping.replacement.into(), reference: &train, rng_seed: args.mapping.seed };
        Some(build_replacement(&strategy, specimen.len())?)
    } else {
        None
    };
    let h = MappingFunction::build(kind, specimen.clone(), fragments, replacement, args.mapping.filter_len)?;
    let perturbed = h.apply(&mask)?;
    let mut out = String::from("t,specimen,perturbed\n");
    for (t, (x, y)) in specimen.values().iter().zip(perturbed.values()).enumerate() {
        writeln!(out, "{t},{x},{y}").expect("write to string");
    }
    std::fs::write(&args.out, out).map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<(), CliError> {
    let train = read_ucr(&args.train)?;
    let model: Box<dyn Estimator<f64>> = match args.model {
        BuiltinModel::Knn => Box::new(knn(&train, args.k)?),
        BuiltinModel::SpectrumCentroid => Box::new(SpectrumCentroidModel::new(&train)?),
    };
    let io_err = |e: std::io::Error| CliError::Model(format!("serving failed: {e}"));
    match &args.listen {
        None => protocol::serve(model.as_ref(), std::io::stdin().lock(), std::io::stdout().lock()).map_err(io_err),
        Some(addr) => {
            let listener = TcpListener::bind(addr).map_err(|e| CliError::Flag(format!("--listen {addr}: {e}")))?;
            let local = listener.local_addr().map_err(io_err)?;
            eprintln!("listening on {local}");
            std::io::stderr().flush().ok();
            for stream in listener.incoming() {
                let stream = stream.map_err(io_err)?;
                let reader = BufReader::new(stream.try_clone().map_err(io_err)?);
                if let Err(e) = protocol::serve(model.as_ref(), reader, stream) {
                    log::warn!("connection ended: {e}");
                }
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Explain(a) => cmd_explain(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::ServeModel(a) => cmd_serve(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.message().replace('\n', " ");
            eprintln!("error: {message}");
            ExitCode::from(e.code())
        }
    }
}
