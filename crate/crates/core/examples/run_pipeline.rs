//! Runs the complete batch pipeline on a preset or config file and lists
//! the files it writes.
//!
//! cargo run --release --example run_pipeline -- [preset or config] [out dir]

use std::path::PathBuf;

use pem_plate::config::RunConfig;
use pem_plate::pipeline::cmd_pipeline;

fn main() -> pem_plate::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = RunConfig::load(&args.next().unwrap_or_else(|| "paper-square".into()))?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| cfg.resolve_output(None));
    print!("{}", cmd_pipeline(&cfg, &out)?);
    let mut files: Vec<_> = std::fs::read_dir(&out)
        .map_err(|e| pem_plate::Error::Io { path: out.clone(), message: e.to_string() })?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    files.sort();
    println!("files: {}", files.join(", "));
    Ok(())
}
