//! Run an experiment from a TOML config and list what it wrote.
//!
//! `cargo run --release --example run_config -- configs/sqrt_extend.toml`

use qjacobi::runner::run_file;
use std::path::PathBuf;

fn main() -> qjacobi::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        let dir = std::env::temp_dir().join("qjacobi-example");
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("extend.toml");
        std::fs::write(
            &cfg,
            "task = \"extend\"\nseed = 0\noutput_dir = \"out\"\n\n[boundary]\nkind = \"modes\"\n\
             pieces = [{ k = 2, a0 = [0.0, 0.0], a = [[1.0, 0.0]], b = [[0.0, 1.0]] }]\n",
        )
        .unwrap();
        cfg
    });

    let rep = run_file(&path)?;
    println!("{} -> {}", path.display(), rep.output_dir.display());
    for a in &rep.manifest.artifacts {
        println!("  {}  {}", &a.sha256[..12], a.file);
    }
    for w in &rep.manifest.warnings {
        println!("  warning: {w}");
    }
    println!("success: {}", rep.success);
    Ok(())
}
