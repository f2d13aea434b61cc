//! Regenerates the bundled synthetic dataset CSVs from their pinned recipes.
//!
//! Run from the crate directory: `cargo run --example regen_datasets`.
//! Ruspini is real data and is left untouched.

use clusterbench::data::save_dataset;
use clusterbench::suite::{builtin_ids, regenerate_builtin};

fn main() {
    let data_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for id in builtin_ids() {
        if *id == "ruspini" {
            continue;
        }
        let data = regenerate_builtin(id).expect("builtin recipe");
        let path = data_dir.join(format!("{id}.csv"));
        save_dataset(&data, &path).expect("write dataset csv");
        println!("wrote {} ({} points)", path.display(), data.len());
    }
}
