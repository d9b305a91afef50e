mod bench;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use greyant::abi::AbiDescriptor;
use greyant::corpus;
use greyant::engine::{run_campaign, CampaignConfig, CampaignReport, Mode};
use greyant::mcb::{assemble, ContractModule};
use greyant::plugins::{plugin_by_id, PLUGIN_IDS};

/// Coverage-guided grey-box fuzzer for EOSIO-style contracts.
#[derive(Parser)]
#[command(name = "greyant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuzz one contract with the selected plugins.
    Fuzz(FuzzArgs),
    /// Run the bundled benchmark corpus in both modes.
    Bench(BenchArgs),
    /// Compare greybox and blackbox edge coverage on one contract.
    Coverage(CoverageArgs),
}

#[derive(Args)]
struct ContractArgs {
    /// Contract assembly file, or the id of a bundled contract.
    #[arg(long)]
    contract: String,
    /// ABI file replacing the contract's embedded ABI.
    #[arg(long)]
    abi: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    iterations: u64,
    /// RNG seed. GREYANT_SEED takes precedence when set.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    min_len_override: Option<usize>,
}

#[derive(Args)]
struct FuzzArgs {
    #[command(flatten)]
    contract: ContractArgs,
    /// Plugin id (p1..p6), repeatable, or "all".
    #[arg(long = "plugin", default_value = "all")]
    plugins: Vec<String>,
    #[arg(long, default_value = "greybox")]
    mode: Mode,
    /// Report file. Defaults to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Budget for each paired benchmark contract.
    #[arg(long, default_value_t = 2000)]
    iterations: u64,
    /// Budget for the guarded contract.
    #[arg(long, default_value_t = 50_000)]
    guarded_iterations: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    contract: ContractArgs,
    /// Plugin driving both campaigns. Defaults to the bundled contract's
    /// plugin, or p3 for files.
    #[arg(long)]
    plugin: Option<String>,
}

struct ConfigError(String);

impl<E: std::fmt::Display> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Fuzz(a) => fuzz(a),
        Command::Bench(a) => bench::run(a.seed_from_env(), a.iterations, a.guarded_iterations, a.report.as_deref()),
        Command::Coverage(a) => coverage(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn env_seed(flag: u64) -> u64 {
    std::env::var("GREYANT_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(flag)
}

impl BenchArgs {
    fn seed_from_env(&self) -> u64 {
        env_seed(self.seed)
    }
}

/// Loads the module, falling back to the bundled corpus when no such file
/// exists.
fn load_contract(args: &ContractArgs) -> Result<(Arc<ContractModule>, Option<&'static str>), ConfigError> {
    let path = Path::new(&args.contract);
    let (source, plugin) = if path.exists() {
        (fs::read_to_string(path).map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?, None)
    } else {
        let id = path.file_name().and_then(|s| s.to_str()).unwrap_or("").trim_end_matches(".mcb");
        let c = corpus::bundled(id).ok_or_else(|| ConfigError(format!("no contract file or bundled contract {:?}", args.contract)))?;
        (c.source.to_string(), Some(c.plugin))
    };
    let mut module = assemble(&source).map_err(|e| ConfigError(format!("{}: {e}", args.contract)))?;
    if let Some(abi) = &args.abi {
        let text = fs::read_to_string(abi).map_err(|e| ConfigError(format!("reading {}: {e}", abi.display())))?;
        module.abi = AbiDescriptor::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", abi.display())))?;
        module.validate()?;
    }
    Ok((Arc::new(module), plugin))
}

fn config(args: &ContractArgs, mode: Mode) -> Result<CampaignConfig, ConfigError> {
    if args.iterations == 0 {
        return Err(ConfigError("--iterations must be positive".into()));
    }
    Ok(CampaignConfig {
        mode,
        iterations: args.iterations,
        rng_seed: env_seed(args.seed),
        min_len_override: args.min_len_override,
        ..CampaignConfig::default()
    })
}

fn select_plugins(requested: &[String]) -> Result<Vec<&'static str>, ConfigError> {
    let mut out = Vec::new();
    for p in requested {
        let ids: Vec<&'static str> = if p == "all" {
            PLUGIN_IDS.to_vec()
        } else {
            vec![*PLUGIN_IDS.iter().find(|id| **id == p).ok_or_else(|| ConfigError(format!("unknown plugin {p:?}")))?]
        };
        for id in ids {
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    Ok(out)
}

fn campaign(plugin: &str, module: Arc<ContractModule>, cfg: CampaignConfig) -> Result<CampaignReport, ConfigError> {
    let p = plugin_by_id(plugin).ok_or_else(|| ConfigError(format!("unknown plugin {plugin:?}")))?;
    Ok(run_campaign(p, module, cfg)?)
}

fn write_report(path: Option<&Path>, text: &str) -> Result<(), ConfigError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| ConfigError(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fuzz(args: FuzzArgs) -> Result<u8, ConfigError> {
    let plugins = select_plugins(&args.plugins)?;
    let cfg = config(&args.contract, args.mode)?;
    let (module, _) = load_contract(&args.contract)?;
    let mut text = String::new();
    let mut findings = 0;
    for id in plugins {
        let report = campaign(id, module.clone(), cfg.clone())?;
        findings += report.findings.len();
        text.push_str(&report.to_text());
    }
    write_report(args.report.as_deref(), &text)?;
    Ok(if findings > 0 { 2 } else { 0 })
}

fn coverage(args: CoverageArgs) -> Result<u8, ConfigError> {
    let (module, bundled_plugin) = load_contract(&args.contract)?;
    let plugin = match &args.plugin {
        Some(p) => select_plugins(std::slice::from_ref(p))?.first().copied().unwrap_or("p3"),
        None => bundled_plugin.unwrap_or("p3"),
    };
    let grey = campaign(plugin, module.clone(), config(&args.contract, Mode::Greybox)?)?;
    let black = campaign(plugin, module, config(&args.contract, Mode::Blackbox)?)?;
    println!("greybox|{}", grey.edges);
    println!("blackbox|{}", black.edges);
    println!("delta|{}", bench::percent_delta(grey.edges, black.edges));
    Ok(0)
}
