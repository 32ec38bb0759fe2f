//! Regenerate data/vectors.txt from data/concepts.txt.

use secrisk_core::category::embedding::{generate_vectors, DIM};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let concepts = std::fs::read_to_string(data.join("concepts.txt"))?;
    let out = generate_vectors(&concepts, DIM)?;
    std::fs::write(data.join("vectors.txt"), &out)?;
    eprintln!("wrote {} vectors", out.lines().count() - 1);
    Ok(())
}
