//! Loads the bundled example workbenches for the benchmarks.

use distlaw::dsl::Workbench;

pub fn example(name: &str) -> Workbench {
    Workbench::load(format!("{}/../core/dsl/{name}", env!("CARGO_MANIFEST_DIR"))).expect("bundled example loads")
}
