//! Monotone odd lattice profiles and their energy.
//!
//! A heteroclinic profile is an odd, non-decreasing sequence `u` with values
//! in `[-1, 1]` and `u_j -> +-1` as `j -> +-infinity`. Two symmetry classes
//! exist: on-site (indices are the integers, a lattice site sits at the
//! center, `u_0 = 0`) and inter-site (indices are the half-integers, the
//! center lies between sites). [`Profile`] stores only the strictly positive
//! part on the truncated set where `u_j = sgn j` for `|j| > N`; the negative
//! part is the structural odd reflection.
//!
//! The governing functional is
//!
//! ```text
//! E(u) = sum_j F(u_j) + beta * sum_j (u_{j+1} - u_j)^2,
//! ```
//!
//! finite because `F(+-1) = 0` and the tails are constant. Standing waves are
//! exactly the zeros of the Gateaux derivative field
//! `G(u)_j = Psi'(u_j^2) u_j - u_j - beta (u_{j+1} + u_{j-1} - 2 u_j)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{NormalizedPotential, PotentialError};
use crate::sum::KahanSum;

/// Errors from profile construction and lattice operators.
#[derive(Debug, Error)]
pub enum LatticeError {
    /// Propagated potential-evaluation failure.
    #[error(transparent)]
    Potential(#[from] PotentialError),
    /// The stored values violate the profile invariants.
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}

/// Which index set the lattice lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    /// Integer indices; `u_0 = 0` is pinned by oddness.
    #[serde(rename = "onsite")]
    OnSite,
    /// Half-integer indices; the symmetry center lies between sites.
    #[serde(rename = "intersite")]
    InterSite,
}

impl std::str::FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "onsite" | "on-site" => Ok(Setting::OnSite),
            "intersite" | "inter-site" => Ok(Setting::InterSite),
            other => Err(format!(
                "unknown setting {other:?} (expected \"onsite\" or \"intersite\")"
            )),
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setting::OnSite => "onsite",
            Setting::InterSite => "intersite",
        })
    }
}

/// Finite representation of a monotone odd profile truncated at half-width `N`.
///
/// Stored values are the positive indices only: `j = 1, ..., N` on-site
/// (`u_0 = 0` implicit), `j = 1/2, ..., N - 1/2` inter-site. Beyond `N` the
/// profile continues with the constant `+1`; negative indices are the odd
/// reflection. Construction validates `0 <= u <= 1` and monotonicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    setting: Setting,
    values: Vec<f64>,
}

impl Profile {
    /// Validates and wraps stored values.
    pub fn new(setting: Setting, values: Vec<f64>) -> Result<Self, LatticeError> {
        if values.is_empty() {
            return Err(LatticeError::InvalidProfile(
                "a profile stores at least one value".to_string(),
            ));
        }
        let mut prev = 0.0f64;
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(LatticeError::InvalidProfile(format!(
                    "value {v:?} at stored index {k} is outside [0, 1]"
                )));
            }
            if v < prev {
                return Err(LatticeError::InvalidProfile(format!(
                    "values decrease at stored index {k} ({prev} -> {v})"
                )));
            }
            prev = v;
        }
        Ok(Self { setting, values })
    }

    /// The index set.
    pub fn setting(&self) -> Setting {
        self.setting
    }

    /// Truncation half-width `N` (number of stored values).
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Stored values for the strictly positive indices, in increasing order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Lattice coordinate of stored slot `k`: `k + 1` on-site, `k + 1/2`
    /// inter-site.
    pub fn position(&self, k: usize) -> f64 {
        match self.setting {
            Setting::OnSite => (k + 1) as f64,
            Setting::InterSite => k as f64 + 0.5,
        }
    }

    /// Full reflected profile as `(j, u_j)` pairs, covering `|j| <= N + margin`
    /// including the constant tails (and `u_0 = 0` on-site).
    pub fn reflected(&self, margin: usize) -> Vec<(f64, f64)> {
        let n = self.n();
        let mut out = Vec::with_capacity(2 * (n + margin) + 1);
        for k in (0..n + margin).rev() {
            let (j, u) = self.site(k);
            out.push((-j, -u));
        }
        if self.setting == Setting::OnSite {
            out.push((0.0, 0.0));
        }
        for k in 0..n + margin {
            out.push(self.site(k));
        }
        out
    }

    /// `(position, value)` of slot `k`, continuing with the `+1` tail past `N`.
    fn site(&self, k: usize) -> (f64, f64) {
        let u = if k < self.n() { self.values[k] } else { 1.0 };
        let j = match self.setting {
            Setting::OnSite => (k + 1) as f64,
            Setting::InterSite => k as f64 + 0.5,
        };
        (j, u)
    }

    /// Neighbors `(u_{j-1}, u_{j+1})` of stored slot `k` under the structural
    /// closures: odd reflection below the center, constant `+1` above `N`.
    pub(crate) fn neighbors(&self, k: usize) -> (f64, f64) {
        let left = if k > 0 {
            self.values[k - 1]
        } else {
            match self.setting {
                Setting::OnSite => 0.0,
                Setting::InterSite => -self.values[0],
            }
        };
        let right = if k + 1 < self.n() {
            self.values[k + 1]
        } else {
            1.0
        };
        (left, right)
    }

    pub(crate) fn from_values_unchecked(setting: Setting, values: Vec<f64>) -> Self {
        debug_assert!(Profile::new(setting, values.clone()).is_ok());
        Self { setting, values }
    }
}

/// The canonical initial guess `u_j = sgn j`: the exact minimizer at
/// `beta = 0`, where the lattice decouples.
pub fn shock_profile(setting: Setting, n: usize) -> Profile {
    assert!(n >= 1, "truncation half-width must be at least 1");
    Profile {
        setting,
        values: vec![1.0; n],
    }
}

/// `E(u)` split into its two parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `f_part + beta * d_part`.
    pub total: f64,
    /// On-site part `sum_j F(u_j)` over the full reflected profile.
    pub f_part: f64,
    /// Interaction part `sum_j (u_{j+1} - u_j)^2` over all bonds, including
    /// the two bonds into the constant tails.
    pub d_part: f64,
    /// Coupling the energy was evaluated at.
    pub beta: f64,
}

/// Evaluates `E(u)` over the full reflected profile.
///
/// Oddness of `u` and evenness of `F` collapse the sums onto the stored half:
/// the `F`-part doubles the stored terms (plus `F(0)` for the on-site center),
/// the `D`-part doubles the one-sided bonds and counts the center bond
/// structure once. Compensated summation keeps the parts accurate to the
/// `1e-12` level needed by truncation-convergence comparisons.
pub fn energy(
    p: &Profile,
    np: &NormalizedPotential,
    beta: f64,
) -> Result<EnergyBreakdown, LatticeError> {
    assert!(beta > 0.0, "coupling beta must be positive");
    let v = p.values();
    let n = p.n();
    let mut f_sum = KahanSum::new();
    for &u in v {
        f_sum.add(np.eval_f(u)?);
    }
    let mut d_sum = KahanSum::new();
    for k in 0..n.saturating_sub(1) {
        let d = v[k + 1] - v[k];
        d_sum.add(d * d);
    }
    let tail = 1.0 - v[n - 1];
    d_sum.add(tail * tail);
    let (f_part, d_part) = match p.setting() {
        Setting::OnSite => {
            let f_part = np.eval_f(0.0)? + 2.0 * f_sum.value();
            d_sum.add(v[0] * v[0]);
            (f_part, 2.0 * d_sum.value())
        }
        Setting::InterSite => {
            let center = 2.0 * v[0];
            (f_sum.value() * 2.0, 2.0 * d_sum.value() + center * center)
        }
    };
    Ok(EnergyBreakdown {
        total: f_part + beta * d_part,
        f_part,
        d_part,
        beta,
    })
}

/// The Gateaux derivative field on the stored indices.
#[derive(Clone, Debug)]
pub struct GradientField {
    /// `G(u)_j` per stored slot.
    pub values: Vec<f64>,
    /// `max_j |G(u)_j|`.
    pub sup_norm: f64,
}

/// `G(u)_j = Psi'(u_j^2) u_j - u_j - beta (u_{j+1} + u_{j-1} - 2 u_j)`,
/// equivalently `F'(u_j)/2 - beta (Delta u)_j`, for each stored index.
///
/// Standing waves are exactly `G(u) = 0`. Neighbors outside the stored range
/// come from odd reflection (below) and the constant tail (above). Note the
/// derivative of the computed energy with respect to a stored coordinate is
/// `4 G_j`: each stored value appears twice in the reflected profile, and `G`
/// carries the factor `1/2` from `F'/2`.
pub fn gateaux_gradient(
    p: &Profile,
    np: &NormalizedPotential,
    beta: f64,
) -> Result<GradientField, LatticeError> {
    assert!(beta > 0.0, "coupling beta must be positive");
    let v = p.values();
    let mut values = Vec::with_capacity(p.n());
    let mut sup: f64 = 0.0;
    for (k, &u) in v.iter().enumerate() {
        let (left, right) = p.neighbors(k);
        let laplacian = right + left - 2.0 * u;
        let g = 0.5 * np.eval_f_prime(u)? - beta * laplacian;
        sup = sup.max(g.abs());
        values.push(g);
    }
    Ok(GradientField {
        values,
        sup_norm: sup,
    })
}

/// Convergence diagnostic: `sup_j |F'(u_j) - 2 beta (Delta u)_j| = 2 sup |G|`
/// over the stored indices. Zero exactly at standing waves.
pub fn residual_sup(p: &Profile, np: &NormalizedPotential, beta: f64) -> Result<f64, LatticeError> {
    Ok(2.0 * gateaux_gradient(p, np, beta)?.sup_norm)
}

/// The staggering transformation `u_j -> (-1)^j u_j` over the stored indices,
/// which maps between the focussing and defocussing problems.
///
/// On the half-integer grid the sign is taken as `(-1)^(j - 1/2)`, so the
/// first stored slot keeps its sign in both settings' spatial order; this is a
/// documented convention, not a canonical choice. The output is a raw sequence
/// (it is not monotone, hence not a [`Profile`]).
pub fn staggering_transform(p: &Profile) -> Vec<f64> {
    p.values()
        .iter()
        .enumerate()
        .map(|(k, &u)| {
            let exponent = match p.setting() {
                Setting::OnSite => k + 1,
                Setting::InterSite => k,
            };
            if exponent % 2 == 1 {
                -u
            } else {
                u
            }
        })
        .collect()
}
