//! Bundled models, bundled litmus tests and the golden verdict table.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cat::{parse_model, ModelAst};
use crate::error::ModelError;
use crate::litmus::Expectation;

/// Models shipped with the crate, by name.
pub const BUILTIN: &[(&str, &str)] = &[
    ("sc", include_str!("../models/sc.cat")),
    ("tso", include_str!("../models/tso.cat")),
    ("cpp-ra", include_str!("../models/cpp-ra.cat")),
    ("power", include_str!("../models/power.cat")),
    ("arm", include_str!("../models/arm.cat")),
    ("arm-llh", include_str!("../models/arm-llh.cat")),
    ("power-as-arm", include_str!("../models/power-as-arm.cat")),
];

/// Environment variable naming a directory of `<name>.cat` files that shadow the bundled ones.
pub const MODELS_DIR_VAR: &str = "MEMCAT_MODELS_DIR";

#[derive(Debug, Clone)]
pub struct BuiltinModel {
    pub name: String,
    pub text: String,
    pub ast: ModelAst,
    /// Where the text came from: `bundled` or a file path.
    pub origin: String,
}

impl BuiltinModel {
    pub fn from_text(name: &str, text: &str, origin: &str) -> Result<Self, ModelError> {
        let ast = parse_model(text)?;
        Ok(BuiltinModel { name: name.to_string(), text: text.to_string(), ast, origin: origin.to_string() })
    }
}

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

fn read_model_file(name: &str, path: &Path) -> Result<BuiltinModel, ModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    BuiltinModel::from_text(name, &text, &path.display().to_string())
}

/// Load a bundled model; `MEMCAT_MODELS_DIR/<name>.cat` wins when it exists.
pub fn load_builtin(name: &str) -> Result<BuiltinModel, ModelError> {
    if let Some(dir) = std::env::var_os(MODELS_DIR_VAR) {
        let path = PathBuf::from(dir).join(format!("{name}.cat"));
        if path.is_file() {
            return read_model_file(name, &path);
        }
    }
    let (_, text) =
        BUILTIN.iter().find(|(n, _)| *n == name).ok_or_else(|| ModelError::UnknownModel(name.to_string()))?;
    BuiltinModel::from_text(name, text, "bundled")
}

/// A builtin name, or a path to a model file.
pub fn load_model(spec: &str) -> Result<BuiltinModel, ModelError> {
    let path = Path::new(spec);
    if spec.ends_with(".cat") || path.is_file() {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_string());
        return read_model_file(&name, path);
    }
    load_builtin(spec)
}

/// Directory holding the bundled litmus tests.
pub fn bundled_litmus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("litmus")
}

/// All bundled litmus files as `(file stem, text)`, sorted by name.
pub fn bundled_tests() -> std::io::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(bundled_litmus_dir())? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "litmus") {
            let stem = path.file_stem().expect("file name").to_string_lossy().into_owned();
            out.push((stem, std::fs::read_to_string(&path)?));
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenEntry {
    pub verdict: Expectation,
    /// Where the expected verdict comes from.
    pub source: String,
}

/// test name -> model name -> expected verdict.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenTable(pub BTreeMap<String, BTreeMap<String, GoldenEntry>>);

impl GoldenTable {
    pub fn get(&self, test: &str, model: &str) -> Option<&GoldenEntry> {
        self.0.get(test).and_then(|m| m.get(model))
    }

    pub fn for_model<'a>(&'a self, model: &'a str) -> impl Iterator<Item = (&'a str, &'a GoldenEntry)> + 'a {
        self.0.iter().filter_map(move |(t, m)| m.get(model).map(|e| (t.as_str(), e)))
    }
}

pub fn golden_table() -> GoldenTable {
    serde_json::from_str(include_str!("../litmus/golden.json")).expect("bundled golden table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_models_parse() {
        for name in builtin_names() {
            let m = load_builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(m.ast.check_names(), vec!["sc-per-location", "no-thin-air", "observation", "propagation"], "{name}");
        }
    }

    #[test]
    fn unknown_model() {
        assert!(matches!(load_builtin("alpha"), Err(ModelError::UnknownModel(_))));
    }
}
