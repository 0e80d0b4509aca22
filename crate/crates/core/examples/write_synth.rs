//! Writes a synthetic tagged corpus and labeled train/test files into a
//! directory, for trying the command line without external data.
//!
//! Usage: write_synth <dir> [seed]

use std::path::PathBuf;

use relemb::synth::{generate, SynthConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synth".into()));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    std::fs::create_dir_all(&dir)?;
    let data = generate(&SynthConfig {
        seed,
        ..Default::default()
    });
    data.write_to(&dir)?;
    println!(
        "wrote {} sentences, {} train and {} test instances to {}",
        data.corpus.len(),
        data.train.len(),
        data.test.len(),
        dir.display()
    );
    Ok(())
}
