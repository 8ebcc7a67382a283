//! Configurations shipped with the binary.

pub const MANUFACTURED: &str = include_str!("../presets/manufactured.json");
pub const BOUND_DEMO: &str = include_str!("../presets/bound-demo.json");
pub const ZERO: &str = include_str!("../presets/zero.json");

pub const NAMES: [&str; 3] = ["manufactured", "bound-demo", "zero"];

/// JSON text of the named preset.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "manufactured" => Some(MANUFACTURED),
        "bound-demo" => Some(BOUND_DEMO),
        "zero" => Some(ZERO),
        _ => None,
    }
}
