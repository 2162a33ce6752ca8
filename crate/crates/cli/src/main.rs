mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use furry_density::grid::GridKind;
use furry_density::report::{digest_of, to_json};
use serde_json::json;

use crate::commands::{Outcome, RunError};
use crate::config::{Command, ConfigError, PotentialSpec, RunConfig};

const THREADS_ENV: &str = "FURRY_THREADS";

#[derive(Parser, Debug)]
#[command(name = "furry", version, about = "Dirac-Coulomb channel densities, traces and Thomas-Fermi screening")]
struct Cli {
    /// Subcommand; may instead come from the config file.
    command: Option<Command>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "furry-out")]
    out: PathBuf,
    /// Worker threads (also FURRY_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Directory of an earlier run to compare byte for byte.
    #[arg(long)]
    compare: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    kappa_max: Option<u32>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    l: Option<u32>,
    #[arg(long, value_parser = parse_kind)]
    grid_kind: Option<GridKind>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    n_points: Option<usize>,
    /// e.g. "cutoff-coulomb:a=0.3,radius=5"
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fit_tail: bool,
    #[arg(long)]
    fit_origin: bool,
    #[arg(long)]
    channels: bool,
    /// Subcommand option, key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn parse_kind(s: &str) -> Result<GridKind, String> {
    match s {
        "log" | "logarithmic" => Ok(GridKind::Logarithmic),
        "uniform" => Ok(GridKind::Uniform),
        _ => Err(format!("unknown grid kind {s:?} (logarithmic, uniform)")),
    }
}

fn option_value(text: &str) -> toml::Value {
    // integers, floats and booleans keep their type; anything else is a string
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

fn resolve(cli: &Cli) -> Result<(Command, RunConfig), ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| ConfigError::new("config", format!("{}: {e}", p.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    let cmd = cli
        .command
        .or(cfg.command)
        .ok_or_else(|| ConfigError::new("command", "no subcommand given on the command line or in the config"))?;
    cfg.command = Some(cmd);
    macro_rules! over {
        ($($dst:expr => $src:expr),* $(,)?) => { $( if let Some(v) = $src.clone() { $dst = Some(v); } )* };
    }
    over!(
        cfg.gamma => cli.gamma, cfg.z => cli.z, cfg.c => cli.c, cfg.seed => cli.seed,
        cfg.cutoffs.kappa => cli.kappa, cfg.cutoffs.n => cli.n,
        cfg.cutoffs.kappa_max => cli.kappa_max, cfg.cutoffs.n_max => cli.n_max, cfg.cutoffs.l => cli.l,
        cfg.grid.kind => cli.grid_kind, cfg.grid.r_min => cli.r_min, cfg.grid.r_max => cli.r_max,
        cfg.grid.n_points => cli.n_points,
    );
    if let Some(p) = &cli.potential {
        cfg.potential = Some(PotentialSpec::parse(p).map_err(|m| ConfigError::new("potential", m))?);
    }
    for (flag, on) in [("fit_tail", cli.fit_tail), ("fit_origin", cli.fit_origin), ("channels", cli.channels)] {
        if on {
            cfg.options.insert(flag.into(), toml::Value::Boolean(true));
        }
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::new("set", format!("{kv:?} is not KEY=VALUE")))?;
        cfg.options.insert(k.trim().replace('-', "_"), option_value(v.trim()));
    }
    cfg.out = Some(cli.out.display().to_string());
    cfg.validate(cmd)?;
    Ok((cmd, cfg))
}

fn threads(cli: &Cli) -> Result<Option<usize>, ConfigError> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => s.trim().parse().map(Some).map_err(|e| ConfigError::new(THREADS_ENV, format!("{s:?}: {e}"))),
        Err(_) => Ok(None),
    }
}

/// Writes every artifact; returns the file names in write order.
fn write_outputs(dir: &Path, cmd: Command, cfg: &RunConfig, digest: &str, outcome: &Outcome) -> std::io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for (suffix, table) in &outcome.tables {
        let name = if suffix.is_empty() { format!("{}.csv", cmd.name()) } else { format!("{}_{suffix}.csv", cmd.name()) };
        let mut t = table.clone();
        t.set_meta("config_digest", digest);
        t.set_meta("command", cmd.name());
        fs::write(dir.join(&name), t.to_csv())?;
        names.push(name);
    }
    let passed = outcome.checks.iter().all(|c| c.passed);
    let doc = json!({
        "command": cmd.name(),
        "config_digest": digest,
        "config": cfg,
        "results": outcome.results,
        "checks": outcome.checks,
        "passed": passed,
    });
    let name = format!("{}.json", cmd.name());
    fs::write(dir.join(&name), to_json(&doc).map_err(std::io::Error::other)?)?;
    names.push(name);
    let mut summary = format!("furry {}  (config digest {})\n", cmd.name(), &digest[..16]);
    for line in &outcome.summary {
        summary.push_str(line);
        summary.push('\n');
    }
    for c in &outcome.checks {
        summary.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    let name = format!("{}_summary.txt", cmd.name());
    fs::write(dir.join(&name), &summary)?;
    names.push(name);
    Ok(names)
}

fn embedded_digest(path: &Path) -> Option<String> {
    let text = fs::read_to_string(path).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("config_digest")?.as_str().map(str::to_string)
}

enum Compare {
    Same,
    DigestMismatch(String),
    Differs(Vec<String>),
}

fn compare(ours: &Path, theirs: &Path, cmd: Command, names: &[String]) -> Compare {
    let json = format!("{}.json", cmd.name());
    let a = embedded_digest(&ours.join(&json));
    let b = embedded_digest(&theirs.join(&json));
    if a.is_none() || a != b {
        return Compare::DigestMismatch(format!(
            "{} has config digest {}, this run {}",
            theirs.join(&json).display(),
            b.as_deref().unwrap_or("<missing>"),
            a.as_deref().unwrap_or("<missing>")
        ));
    }
    let differing: Vec<String> = names.iter().filter(|n| fs::read(ours.join(n)).ok() != fs::read(theirs.join(n)).ok()).cloned().collect();
    if differing.is_empty() {
        Compare::Same
    } else {
        Compare::Differs(differing)
    }
}

fn config_failure(e: &ConfigError) -> ExitCode {
    eprintln!("config error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, cfg) = match resolve(&cli) {
        Ok(x) => x,
        Err(e) => return config_failure(&e),
    };
    match threads(&cli) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: thread pool: {e}");
            }
        }
        Ok(None) => {}
        Err(e) => return config_failure(&e),
    }
    let digest = digest_of(&cfg);
    let outcome = match commands::run(cmd, &cfg) {
        Ok(o) => o,
        Err(RunError::Config(e)) => return config_failure(&e),
        Err(RunError::Numeric(m)) => {
            eprintln!("numerical failure in {}: {m}", cmd.name());
            return ExitCode::from(1);
        }
    };
    let names = match write_outputs(&cli.out, cmd, &cfg, &digest, &outcome) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("cannot write outputs to {}: {e}", cli.out.display());
            return ExitCode::from(1);
        }
    };
    if let Ok(text) = fs::read_to_string(cli.out.join(format!("{}_summary.txt", cmd.name()))) {
        print!("{text}");
    }
    let mut ok = outcome.checks.iter().all(|c| c.passed);
    for c in outcome.checks.iter().filter(|c| !c.passed) {
        eprintln!("invariant failed: {}", c.name);
    }
    if let Some(other) = &cli.compare {
        match compare(&cli.out, other, cmd, &names) {
            Compare::Same => println!("PASS reproducibility: outputs identical to {}", other.display()),
            Compare::DigestMismatch(m) => return config_failure(&ConfigError::new("compare", format!("refusing to compare: {m}"))),
            Compare::Differs(files) => {
                eprintln!("invariant failed: reproducibility ({} differ)", files.join(", "));
                ok = false;
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
