//! Named parameter presets.
//!
//! The dataset profiles are the per-dataset settings reported for NET on the
//! standard benchmarks. `two-moon` is tuned for the synthetic generator's
//! default shift (30° rotation, noise 0.1) with a two-dimensional embedding.

use crate::solver::HyperParams;

/// `(name, alpha, beta, gamma, k)`.
const PROFILES: &[(&str, f64, f64, f64, usize)] = &[
    ("digit", 1.0, 0.01, 1.0, 20),
    ("face", 0.01, 0.01, 1.0, 20),
    ("coil", 1.0, 1.0, 1.0, 60),
    ("pie", 10.0, 0.001, 0.005, 200),
    ("office-surf", 1.0, 1.0, 1.0, 20),
    ("office-deep", 1.0, 1.0, 1.0, 20),
    ("two-moon", 1.0, 1.0, 0.01, 2),
];

pub fn lookup(name: &str) -> Option<HyperParams> {
    PROFILES
        .iter()
        .find(|p| p.0.eq_ignore_ascii_case(name))
        .map(|&(_, a, b, g, k)| HyperParams::new(a, b, g, k))
}

pub fn names() -> Vec<&'static str> {
    PROFILES.iter().map(|p| p.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_profiles() {
        assert_eq!(lookup("pie"), Some(HyperParams::new(10.0, 0.001, 0.005, 200)));
        assert_eq!(lookup("DIGIT").map(|p| p.k), Some(20));
        assert_eq!(lookup("mnist"), None);
        assert_eq!(names().len(), 7);
    }
}
