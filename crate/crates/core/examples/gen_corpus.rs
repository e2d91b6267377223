//! Writes the fixture corpus into a directory (default
//! `crates/core/tests/fixtures/corpus`).

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus"));
    std::fs::create_dir_all(&dir)?;
    for (name, bytes) in pdfwm::synth::corpus()? {
        std::fs::write(dir.join(&name), &bytes)?;
        println!("{name} {} bytes", bytes.len());
    }
    Ok(())
}
