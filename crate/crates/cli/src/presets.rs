//! Built-in scenarios, stored as the same JSON documents users write.

use crate::scenario::{load_scenario_str, Scenario};
use crate::{CliError, Result};

const PRESETS: [(&str, &str); 7] = [
    (
        "special-relativity-free",
        include_str!("../presets/special-relativity-free.json"),
    ),
    (
        "newtonian-orbit",
        include_str!("../presets/newtonian-orbit.json"),
    ),
    ("photon-null", include_str!("../presets/photon-null.json")),
    (
        "decaying-orbit",
        include_str!("../presets/decaying-orbit.json"),
    ),
    ("decay-gas", include_str!("../presets/decay-gas.json")),
    (
        "absorbing-gas",
        include_str!("../presets/absorbing-gas.json"),
    ),
    ("photon-gas", include_str!("../presets/photon-gas.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Raw JSON text of a preset.
pub fn source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| CliError::UnknownPreset(name.to_string()))
}

pub fn get(name: &str) -> Result<Scenario> {
    load_scenario_str(source(name)?)
}

pub fn all() -> Result<Vec<Scenario>> {
    names().map(get).collect()
}
