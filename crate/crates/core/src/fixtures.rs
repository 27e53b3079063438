//! The two bundled study tables.

/// Interventions tested for changes to total plasma cholesterol (35 studies).
pub const TPC_CSV: &str = include_str!("../../../fixtures/tpc.csv");

/// Interventions tested for changes to atherosclerotic plaque size (28 studies).
pub const PLAQUE_CSV: &str = include_str!("../../../fixtures/plaque.csv");
