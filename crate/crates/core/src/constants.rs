//! Calibrated constants. These are fitted artifacts of this implementation,
//! not values taken from theory; bump `VERSION` whenever one changes.

pub const VERSION: &str = "1";

/// `min_μ M(μ)/min(μ⁴, 1)` over a sweep of `μ ∈ (0, 6]` (attained near `μ = 1`),
/// rounded down.
pub const ENVELOPE_LOW: f64 = 0.3175;

/// `sup_μ M(μ)/min(μ⁴, 1)`, attained as `μ → 0` (`π³ζ(3)`).
pub const ENVELOPE_HIGH: f64 = 37.273;

/// Seed of the 100-triple sweep that calibrates `ENVELOPE_C3`.
pub const CALIBRATION_SEED: u64 = 20_240_901;

/// `C₂` in `C₂⁻¹ ℓ(|z₁−z₂|) ≤ π²ρ ≤ C₂ ℓ(|z₁−z₂|)`.
/// Sweep of d ∈ (0, 8] gives a worst ratio of 2.112 (approached as d → 0, where
/// π²ρ ≈ d²/2).
pub const ENVELOPE_C2: f64 = 2.2;

/// `C₃` for triples, from the calibration sweep.
/// Worst ratio over the sweep is 18.25.
pub const ENVELOPE_C3: f64 = 20.0;

/// `|π²ρ(0, d) − 1| ≤ CLUSTER_C2 · e^{−(d − CLUSTER_DELTA2)²/2}` on `d ∈ [3, 6]`.
/// Fitted with `Δ₂ = 0`: the worst ratio on the sweep is 0.5225, attained at `d = 3`.
pub const CLUSTER_C2: f64 = 0.6;
pub const CLUSTER_DELTA2: f64 = 0.0;
