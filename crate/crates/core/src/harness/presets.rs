use super::config::{parse_config, ConfigError, ScenarioConfig};

const PRESETS: &[(&str, &str)] = &[
    ("two_agent_worked", include_str!("../../presets/two_agent_worked.json")),
    (
        "complete_graph_decay",
        include_str!("../../presets/complete_graph_decay.json"),
    ),
    ("mt_all_to_all", include_str!("../../presets/mt_all_to_all.json")),
    (
        "flock_beta_quarter",
        include_str!("../../presets/flock_beta_quarter.json"),
    ),
    ("flock_beta_one", include_str!("../../presets/flock_beta_one.json")),
    (
        "anticipation_quadratic",
        include_str!("../../presets/anticipation_quadratic.json"),
    ),
    (
        "disconnected_clusters",
        include_str!("../../presets/disconnected_clusters.json"),
    ),
    (
        "topological_kernel",
        include_str!("../../presets/topological_kernel.json"),
    ),
    ("consensus", include_str!("../../presets/consensus.json")),
];

/// Names of the bundled scenarios.
pub fn list_presets() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// JSON source of a bundled scenario.
pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Parsed bundled scenario; `None` for an unknown name.
pub fn preset(name: &str) -> Option<Result<ScenarioConfig, ConfigError>> {
    preset_source(name).map(parse_config)
}
