use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use weil_shintani::normmap::DEFAULT_AMBIENT_CAP;
use weil_shintani::verify::{run_check, RunConfig, Sample};
use weil_shintani::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

/// Exact verification of character identities for extended Weil representations.
#[derive(Parser, Debug)]
#[command(name = "verify", version)]
struct Args {
    /// star, gsp, support, orthogonal, parabolic, sl2-torus, homomorphism,
    /// gyoja-bijection, gauss or all
    check: String,
    #[arg(long, default_value_t = 3)]
    p: u32,
    #[arg(long, default_value_t = 1)]
    base_degree: usize,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Comma-separated `i:t` pairs
    #[arg(long, default_value = "1:1", value_delimiter = ',', value_parser = parse_pairs)]
    pairs: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 1)]
    psi_scale: i64,
    /// `all` or a sample size
    #[arg(long, default_value = "all")]
    sample: Sample,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_AMBIENT_CAP)]
    ambient_cap: usize,
    /// Give half of the sampled `star` elements a random Heisenberg component
    #[arg(long)]
    heisenberg: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Directory for cached Weil operators
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn parse_pairs(s: &str) -> Result<(usize, usize), String> {
    let (i, t) = s.split_once(':').ok_or_else(|| format!("expected i:t, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(i)?, parse(t)?))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = RunConfig {
        p: args.p,
        base_degree: args.base_degree,
        n: args.n,
        m: args.m,
        pairs: args.pairs,
        psi_scale: args.psi_scale,
        sample: args.sample,
        seed: args.seed,
        ambient_cap: args.ambient_cap,
        heisenberg: args.heisenberg,
        cache_dir: args.cache_dir,
    };
    if let Some(dir) = &cfg.cache_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: {}", Error::from(e));
            return ExitCode::from(2);
        }
    }
    match run_check(&args.check, &cfg) {
        Ok(report) => {
            match args.format {
                Format::Json => println!("{}", report.to_json()),
                Format::Tsv => print!("{}", report.to_tsv()),
            }
            eprintln!(
                "{}: pass={} fail={} ({:.2}s)",
                report.check, report.summary.pass, report.summary.fail, report.seconds
            );
            if report.is_success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
