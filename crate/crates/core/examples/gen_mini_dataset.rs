//! Regenerates the bundled mini-dataset: `cargo run --example gen_mini_dataset [out_dir]`.

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/mini"));
    poseval::fixtures::write_mini_dataset(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
