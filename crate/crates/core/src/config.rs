//! Tunable constants. The regularity theory only asserts that suitable values
//! exist; every one of them is surfaced here and echoed in reports.

use serde::{Deserialize, Serialize};

use crate::fields::CutoffProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Density excess and smallness threshold of the regularity hypotheses.
    pub delta: f64,
    /// Radius fraction on which the graph conclusion is tested.
    pub gamma: f64,
    /// Scale ratio of the excess decay iteration.
    pub eta: f64,
    pub epsilon: f64,
    /// Density gap `a` in the Lipschitz approximation hypotheses.
    pub a: f64,
    /// Absolute constant of the tilt-excess/height inequality.
    pub c_abs: f64,
    /// Dimension constant of the same inequality; `None` means `8 (n + k)`.
    pub c_nk: Option<f64>,
    /// Multiplier of the boundary-layer tolerance `(resolution / sigma) * ratio`.
    pub tol_c: f64,
    /// Smallest radius trusted by monotonicity and density, in resolutions.
    pub reliable_radius_factor: f64,
    /// Absolute constant `c` in the two-point density bound.
    pub claim_c: f64,
    /// Dimension constant `c(n, k)` in the two-point density bound.
    pub claim_c_nk: f64,
    /// Good-set threshold `delta` (compared against `delta * ell^(2n+2)`).
    pub good_set_delta: f64,
    /// Lipschitz constant `ell` of the good-set graph test.
    pub ell: f64,
    pub family: FamilyConfig,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            delta: 0.05,
            gamma: 0.25,
            eta: 0.25,
            epsilon: 1.0 / 16.0,
            a: 1.0 / 8.0,
            c_abs: 8.0,
            c_nk: None,
            tol_c: 4.0,
            reliable_radius_factor: 8.0,
            claim_c: 1.0,
            claim_c_nk: 1.0,
            good_set_delta: 0.1,
            ell: 1.0,
            family: FamilyConfig::default(),
            seed: 0,
        }
    }
}

impl Config {
    pub fn c_nk(&self, n: usize, k: usize) -> f64 {
        self.c_nk.unwrap_or(8.0 * (n + k) as f64)
    }
}

/// Ball and field families used to estimate Hölder constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyConfig {
    /// Smallest ball radius, in resolutions.
    pub min_radius_factor: f64,
    /// Largest ball radius as a fraction of the domain inradius.
    pub max_radius_fraction: f64,
    /// Spacing of ball centers as a multiple of the ball radius.
    pub center_spacing: f64,
    /// Cutoff profile of the radial, coordinate and vertical fields.
    pub profile: CutoffProfile,
    pub random_bumps: usize,
    pub bump_terms: usize,
    pub seed: u64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            min_radius_factor: 48.0,
            max_radius_fraction: 0.25,
            center_spacing: 1.0,
            profile: CutoffProfile::Smooth { sharpness: 4.0 },
            random_bumps: 16,
            bump_terms: 3,
            seed: 0,
        }
    }
}
