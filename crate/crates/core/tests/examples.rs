//! Runs every example binary built alongside the tests.

use std::path::PathBuf;
use std::process::Command;

const EXAMPLES: [&str; 10] = [
    "index_sets",
    "weight_transform",
    "eps_dimension",
    "quadrature_kernels",
    "anova_anchored",
    "norm_equivalence",
    "sobol_sensitivity",
    "truncation",
    "regression",
    "map_regression",
];

fn examples_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("examples")
}

#[test]
fn examples_run() {
    for name in EXAMPLES {
        let path = examples_dir().join(format!("{name}{}", std::env::consts::EXE_SUFFIX));
        assert!(path.exists(), "example {name} was not built at {}", path.display());
        let out = Command::new(&path).output().unwrap();
        assert!(out.status.success(), "{name} failed:\n{}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}
