use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use chlax_cli::config::parse_n_list;
use chlax_cli::runner::builtin_registry;
use chlax_cli::{emit, read_registry, run_with_registry, write_registry, CaseFilter, ConfigError, Format, RunConfig};

/// Symbolic verification of the 2+1 Camassa-Holm Lax pair, its symmetries
/// and similarity reductions.
#[derive(Parser, Debug)]
#[command(name = "chlax", version)]
struct Args {
    /// Hierarchy levels, e.g. `1,2,3`.
    #[arg(long, value_parser = parse_n_list)]
    n: Option<BTreeSet<u32>>,
    /// Levels for symmetry, reduction and appendix checks; defaults to the
    /// values of `--n` not above 2.
    #[arg(long, value_parser = parse_n_list)]
    reduction_n: Option<BTreeSet<u32>>,
    /// Case ids, e.g. `I.1,IV.2`, or `all`.
    #[arg(long = "case", default_value = "all")]
    cases: String,
    #[arg(long, default_value_t = 100)]
    oracle_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output formats: `text`, `latex`, `json` (comma-separated).
    #[arg(long, default_value = "text", value_delimiter = ',')]
    format: Vec<String>,
    /// Run sequentially and stop at the first failing check.
    #[arg(long)]
    fail_fast: bool,
    /// Write the selected case registry to FILE and exit.
    #[arg(long, value_name = "FILE")]
    export_cases: Option<PathBuf>,
    /// Read the case registry from FILE instead of the builtin one.
    #[arg(long, value_name = "FILE")]
    import_cases: Option<PathBuf>,
}

fn config(args: &Args) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(n) = &args.n {
        cfg.n = n.clone();
        cfg.reduction_n = n.iter().copied().filter(|&k| k <= 2).collect();
    }
    if let Some(r) = &args.reduction_n {
        cfg.reduction_n = r.clone();
    }
    cfg.cases = args.cases.parse::<CaseFilter>()?;
    cfg.oracle_samples = args.oracle_samples;
    cfg.seed = args.seed;
    cfg.formats = args.format.iter().map(|f| f.parse::<Format>()).collect::<Result<_, _>>()?;
    cfg.fail_fast = args.fail_fast;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let prepared = config(&args).and_then(|cfg| {
        let registry = match &args.import_cases {
            Some(p) => read_registry(p)?,
            None => builtin_registry(&cfg),
        };
        let ids: Vec<String> = registry.iter().map(|c| c.map.id.clone()).collect();
        cfg.validate(Some(&ids))?;
        Ok((cfg, registry))
    });
    let (cfg, registry) = match prepared {
        Ok(x) => x,
        Err(e) => {
            eprintln!("chlax: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(path) = &args.export_cases {
        let selected: Vec<_> = registry
            .into_iter()
            .filter(|c| cfg.reduction_n.contains(&c.map.n) && cfg.cases.selects(&c.map.id))
            .collect();
        return match write_registry(path, &selected) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("chlax: {e}");
                ExitCode::from(2)
            }
        };
    }
    let report = run_with_registry(&cfg, &registry);
    for f in &cfg.formats {
        print!("{}", emit(&report, *f));
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
