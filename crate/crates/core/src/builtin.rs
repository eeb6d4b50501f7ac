//! Built-in game specifications.

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::specfile::{parse_document, LoadedSpec};

const BUILTINS: &[(&str, &str)] = &[
    ("two-arc-population", include_str!("../specs/two-arc-population.json")),
    ("two-arc-splittable", include_str!("../specs/two-arc-splittable.json")),
    ("two-arc-nonsplittable", include_str!("../specs/two-arc-nonsplittable.json")),
    ("three-category", include_str!("../specs/three-category.json")),
    ("parallel-affine", include_str!("../specs/parallel-affine.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

/// The JSON source of a builtin.
pub fn source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<GameSpec> {
    load_document(name).map(|doc| doc.game)
}

pub fn load_document(name: &str) -> Result<LoadedSpec> {
    let text = source(name).ok_or_else(|| {
        Error::SpecFile(format!(
            "unknown builtin `{name}` (available: {})",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    parse_document(text)
}
