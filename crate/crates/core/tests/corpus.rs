use std::fs;
use std::path::{Path, PathBuf};

use appell_core::config::RunConfig;
use appell_core::format;

fn seeds(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn fuzz_seeds_are_valid_inputs() {
    for p in seeds("tensor") {
        format::parse_tensor(&fs::read_to_string(&p).unwrap()).unwrap();
    }
    for p in seeds("jet") {
        format::parse_jet(&fs::read_to_string(&p).unwrap()).unwrap();
    }
    for p in seeds("vectorjet") {
        format::parse_vector_jet(&fs::read_to_string(&p).unwrap()).unwrap();
    }
    for p in seeds("moments") {
        format::parse_moments(&fs::read_to_string(&p).unwrap()).unwrap();
    }
    for p in seeds("kernels") {
        format::parse_kernels(&fs::read_to_string(&p).unwrap()).unwrap();
    }
    for p in seeds("config") {
        // relative fixture paths resolve as they do from configs/
        let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let cfg = RunConfig::parse(&fs::read_to_string(&p).unwrap(), &base).unwrap();
        cfg.alpha().unwrap();
    }
}
