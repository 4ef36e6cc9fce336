//! Command-line front end: a subcommand naming the experiment kind, a config
//! path, and an optional output-directory override. Everything else lives in
//! the config file so the manifest can echo the entire run.

use std::path::PathBuf;
use std::process::ExitCode;

use fpu_solitons::config::{ExperimentConfig, Kind};
use fpu_solitons::experiment;

const USAGE: &str = "usage: fpu-lab <profile|simulate|construct|decompose|diagnose> \
                     <config.toml> [--output-dir DIR]

Runs the named experiment from the config file and writes its artifacts plus
a manifest.json into the output directory. The directory resolves from
--output-dir, then the OUTPUT_DIR environment variable, then the config's
[run] table. WORKERS overrides the worker count the same way.

Exit status: 0 when the run completed with every check passing, 1 when the
run completed but a check failed, 2 on configuration or runtime errors.";

fn parse_args(mut args: Vec<String>) -> Result<(Kind, PathBuf, Option<PathBuf>), String> {
    if args.iter().any(|a| a == "--help" || a == "-h") {
        return Err(USAGE.to_string());
    }
    let mut out_dir = None;
    if let Some(i) = args.iter().position(|a| a == "--output-dir") {
        if i + 1 >= args.len() {
            return Err("--output-dir needs a value".to_string());
        }
        args.remove(i);
        out_dir = Some(PathBuf::from(args.remove(i)));
    }
    if let Some(flag) = args.iter().find(|a| a.starts_with("--")) {
        return Err(format!("unknown flag `{flag}`"));
    }
    match args.len() {
        2 => {
            let kind = Kind::parse(&args[0]).map_err(|e| e.to_string())?;
            Ok((kind, PathBuf::from(&args[1]), out_dir))
        }
        n if n < 2 => Err(format!("missing arguments\n\n{USAGE}")),
        _ => Err(format!("too many arguments\n\n{USAGE}")),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (kind, config_path, out_flag) = match parse_args(args) {
        Ok(parsed) => parsed,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };

    let cfg = match ExperimentConfig::load(&config_path, kind) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let out_dir = cfg.output_dir(out_flag.as_deref());

    match experiment::run(&cfg, &out_dir) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", outcome.out_dir.join(&f.name).display());
            }
            for c in &outcome.checks {
                println!(
                    "check {}: {} ({})",
                    c.name,
                    if c.passed { "pass" } else { "FAIL" },
                    c.detail
                );
            }
            if outcome.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{} failed: {e}", kind.name());
            ExitCode::from(2)
        }
    }
}
