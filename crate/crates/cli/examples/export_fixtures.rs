//! Writes the bundled fixtures as spec files, one `<name>.alg` per fixture:
//!
//! ```text
//! cargo run -p tolim-cli --example export_fixtures -- fixtures/
//! ```
//!
//! The shipped files under `fixtures/` are generated this way; the CLI test
//! suite regenerates them and fails on drift.

use std::path::PathBuf;

use tolim_cli::format::{serialize_algebra_spec, AlgebraSpec};
use tolim_core::fixtures;

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fixtures".into())
        .into();
    std::fs::create_dir_all(&dir).expect("create output directory");
    for fx in fixtures::all_fixtures().expect("fixtures build") {
        let spec = AlgebraSpec {
            algebra: fx.algebra.clone(),
            relations: fx.relations.clone(),
            terms: Vec::new(),
        };
        let path = dir.join(format!("{}.alg", fx.name));
        std::fs::write(&path, serialize_algebra_spec(&spec)).expect("write fixture file");
        println!("wrote {}", path.display());
    }
}
