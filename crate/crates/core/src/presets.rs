//! Built-in scenario and experiment-plan presets, embedded from the
//! `presets/` directory so the binaries work from any working directory.

pub const SCENARIO_PRESETS: &[(&str, &str)] = &[
    ("default", include_str!("../presets/default.toml")),
    ("stationary", include_str!("../presets/stationary.toml")),
];

pub const PLAN_PRESETS: &[(&str, &str)] = &[
    (
        "exploration_ablation",
        include_str!("../presets/exploration_ablation.toml"),
    ),
    (
        "epsilon_sweep",
        include_str!("../presets/epsilon_sweep.toml"),
    ),
    ("theta_sweep", include_str!("../presets/theta_sweep.toml")),
    (
        "agent_scaling",
        include_str!("../presets/agent_scaling.toml"),
    ),
    (
        "duration_scaling",
        include_str!("../presets/duration_scaling.toml"),
    ),
];

pub fn scenario(name: &str) -> Option<&'static str> {
    SCENARIO_PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn plan(name: &str) -> Option<&'static str> {
    PLAN_PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn scenario_names() -> Vec<&'static str> {
    SCENARIO_PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn plan_names() -> Vec<&'static str> {
    PLAN_PRESETS.iter().map(|(n, _)| *n).collect()
}
