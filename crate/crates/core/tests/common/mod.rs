//! Helpers and independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod ast_gen;
pub mod ltl_oracle;
pub mod manet_oracle;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use med_core::kernel::eval::Model;
use med_core::kernel::Scope;
use med_core::lang::load;

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn model_path(name: &str) -> PathBuf {
    models_dir().join(name)
}

pub const BUNDLED: [&str; 4] = [
    "toy_counter.evb",
    "manet_buggy.evb",
    "manet_fixed.evb",
    "manet_mutant_joinrange.evb",
];

pub fn model_text(name: &str) -> String {
    std::fs::read_to_string(model_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn model_from_text(text: &str, scope: &[(&str, u32)], max_int: i64) -> Model {
    let sys = load(text).unwrap_or_else(|d| panic!("model does not load: {d:?}"));
    let scope = Scope::new(scope.iter().map(|(k, v)| (k.to_string(), *v))).with_max_int(max_int);
    Model::new(Arc::new(sys), scope, &BTreeMap::new()).expect("model instantiates")
}

pub fn bundled_model(name: &str, scope: &[(&str, u32)], max_int: i64) -> Model {
    model_from_text(&model_text(name), scope, max_int)
}
