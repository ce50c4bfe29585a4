//! The shipped ablation sweep via the harness: runs configurations F
//! through J over a short sequence and prints the aggregate table.
//!
//! Run with: `cargo run --release --example ablation_sweep [out_dir]`

use rayprune::harness::{emit_table, run_sweep, RunConfig};

fn main() -> rayprune::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rayprune-sweep"));

    let mut cfg = RunConfig::parse(
        "scene.frames = 3\n\
         camera.width = 128\n\
         camera.height = 128\n\
         ero.mode = binary\n\
         sweep = F,G,H,I,J\n",
    )?;
    cfg.out_dir = Some(out.clone());

    let reports = run_sweep(&cfg)?;
    let (table, _) = emit_table(&reports)?;
    print!("{table}");
    println!("per-label artifacts in {}", out.display());
    Ok(())
}
