//! Continuum limit: the heteroclinic of `2 beta u'' = F'(u)` by quadrature,
//! epsilon-scaled lattice solves, and their comparison.
//!
//! The first integral `beta (u')^2 = F(u)` (with `u(0) = 0` pinning the
//! phase) turns the connecting orbit into a quadrature,
//!
//! ```text
//! xi(u) = integral_0^u sqrt(beta / F(s)) ds,
//! ```
//!
//! which is tabulated on a grid of `u` values and inverted by monotone cubic
//! interpolation. Because `xi(u)` diverges logarithmically as `u -> 1`, the
//! table stops at `u = 1 - 1e-6` and the far field is extended by the exact
//! linearized tail `1 - w exp(-mu (xi - xi_max))` with
//! `mu = sqrt(F''(1) / (2 beta))`.
//!
//! Lattice profiles at coupling `beta / eps^2` with sites read at positions
//! `xi = eps j` converge to this heteroclinic as `eps -> 0`; [`eps_solve`]
//! measures the sup distance over a fixed window and [`energy_bound_check`]
//! verifies the scaled energy stays below the explicit linear-ramp
//! competitor.

use thiserror::Error;

use crate::lattice::{energy, Profile, Setting};
use crate::minimizer::{minimize, FlowConfig, MinimizeError};
use crate::potential::NormalizedPotential;

/// Errors from continuum-limit computations.
#[derive(Debug, Error)]
pub enum ContinuumError {
    /// `F(eta) <= 0` was sampled strictly inside `(0, 1)`: the heteroclinic
    /// quadrature does not exist.
    #[error("F({eta}) = {f_value} is not positive; the connecting orbit does not exist")]
    HypothesisViolated {
        /// Sample point.
        eta: f64,
        /// Offending value of `F`.
        f_value: f64,
    },
    /// Adaptive quadrature failed to converge on a segment.
    #[error("quadrature did not converge on [{a}, {b}]")]
    QuadratureFailure {
        /// Segment start.
        a: f64,
        /// Segment end.
        b: f64,
    },
    /// The truncated lattice does not cover the analysis window.
    #[error(
        "eps * N = {covered} does not cover the window (need >= {required}); increase n"
    )]
    WindowNotCovered {
        /// `eps * N` actually available.
        covered: f64,
        /// `L + margin` needed.
        required: f64,
    },
    /// Propagated solver failure.
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
}

/// Total quadrature tolerance used by [`limit_profile`].
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-12;

/// Largest tabulated value of `u`; beyond it the exponential tail is exact to
/// the tabulation accuracy.
pub const U_MAX: f64 = 1.0 - 1e-6;

/// Tabulated heteroclinic of `2 beta u'' = F'(u)`, `u(-inf) = -1`,
/// `u(+inf) = 1`, `u(0) = 0`.
///
/// Only the non-negative half is stored; [`eval`](Self::eval) reflects oddly.
#[derive(Clone, Debug)]
pub struct ContinuumSolution {
    xi_grid: Vec<f64>,
    u_values: Vec<f64>,
    beta: f64,
    quadrature_tol: f64,
    /// Far-field decay rate `sqrt(F''(1) / (2 beta))`.
    tail_rate: f64,
    /// Monotone cubic (Fritsch-Carlson) slopes `du/dxi` at the grid points.
    slopes: Vec<f64>,
}

impl ContinuumSolution {
    /// Strictly increasing `xi` sample points (starting at 0).
    pub fn xi_grid(&self) -> &[f64] {
        &self.xi_grid
    }

    /// Profile values at [`xi_grid`](Self::xi_grid) (starting at 0).
    pub fn u_values(&self) -> &[f64] {
        &self.u_values
    }

    /// Coupling the heteroclinic was computed for.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Total quadrature tolerance used to build the table.
    pub fn quadrature_tol(&self) -> f64 {
        self.quadrature_tol
    }

    /// Far-field decay rate `mu = sqrt(F''(1) / (2 beta))`.
    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    /// Evaluates the heteroclinic at any `xi`: odd reflection for `xi < 0`,
    /// monotone cubic interpolation on the table, exponential tail beyond it.
    pub fn eval(&self, xi: f64) -> f64 {
        // Sign-bit test so -0.0 reflects too; total_cmp sorts it before 0.0.
        if xi.is_sign_negative() {
            return -self.eval(-xi);
        }
        let last = self.xi_grid.len() - 1;
        if xi >= self.xi_grid[last] {
            let w = 1.0 - self.u_values[last];
            return 1.0 - w * (-self.tail_rate * (xi - self.xi_grid[last])).exp();
        }
        // Rightmost interval start with xi_grid[k] <= xi.
        let k = match self
            .xi_grid
            .binary_search_by(|probe| probe.total_cmp(&xi))
        {
            Ok(exact) => return self.u_values[exact],
            Err(insert) => insert - 1,
        };
        let h = self.xi_grid[k + 1] - self.xi_grid[k];
        let t = (xi - self.xi_grid[k]) / h;
        let (y0, y1) = (self.u_values[k], self.u_values[k + 1]);
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }
}

/// Fritsch-Carlson slopes for a monotone cubic interpolant through
/// `(x_k, y_k)` with strictly increasing `x` and non-decreasing `y`.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 2);
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let sec: Vec<f64> = y
        .windows(2)
        .zip(&h)
        .map(|(w, &hk)| (w[1] - w[0]) / hk)
        .collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = sec[0];
        d[1] = sec[0];
        return d;
    }
    // Interior: weighted harmonic mean of adjacent secants, zero at local
    // extrema; keeps the interpolant monotone.
    for k in 1..n - 1 {
        if sec[k - 1] * sec[k] <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / sec[k - 1] + w2 / sec[k]);
        }
    }
    // One-sided three-point endpoint formulas with the standard clamps.
    let endpoint = |h0: f64, h1: f64, s0: f64, s1: f64| -> f64 {
        let mut d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if d * s0 <= 0.0 {
            d = 0.0;
        } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
            d = 3.0 * s0;
        }
        d
    };
    d[0] = endpoint(h[0], h[1], sec[0], sec[1]);
    d[n - 1] = endpoint(h[n - 2], h[n - 3], sec[n - 2], sec[n - 3]);
    d
}

/// Evaluation cap per grid segment; exceeding it means the integrand is too
/// rough to quadrate and the segment fails instead of spinning.
const SEGMENT_EVAL_BUDGET: u64 = 200_000;

/// Adaptive Simpson on `[a, b]` with Richardson acceptance. `fa`, `fm`, `fb`
/// are the integrand at the ends and midpoint, `whole` the coarse estimate.
///
/// The integrand `g = sqrt(beta / F)` inherits an absolute error of a few ulps
/// of 1 from `F` (evaluated near its double root by subtraction of O(1)
/// terms), amplified to `dg ~ g^3 * eps_F / (2 beta)`. Near `u = 1` that noise
/// exceeds any fixed tolerance, so halving intervals forever cannot shrink the
/// Richardson difference; acceptance therefore also fires at the
/// Simpson-weighted noise floor of the five sampled values. `noise_scale` is
/// `eps_F / (2 beta)`.
#[allow(clippy::too_many_arguments)]
fn simpson_recurse(
    f: &dyn Fn(f64) -> Result<f64, ContinuumError>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    noise_scale: f64,
    depth: u32,
    evals: &mut u64,
) -> Result<f64, ContinuumError> {
    if depth == 0 || *evals >= SEGMENT_EVAL_BUDGET {
        return Err(ContinuumError::QuadratureFailure { a, b });
    }
    *evals += 2;
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let refined = left + right;
    let noise = noise_scale
        * ((m - a) * (fa.powi(3) + 4.0 * flm.powi(3) + fm.powi(3))
            + (b - m) * (fm.powi(3) + 4.0 * frm.powi(3) + fb.powi(3)))
        / 6.0;
    let diff = (refined - whole).abs();
    if diff <= 15.0 * tol || diff <= noise {
        return Ok(refined + (refined - whole) / 15.0);
    }
    let l = simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, noise_scale, depth - 1, evals)?;
    let r = simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, noise_scale, depth - 1, evals)?;
    Ok(l + r)
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> Result<f64, ContinuumError>,
    a: f64,
    b: f64,
    tol: f64,
    noise_scale: f64,
) -> Result<f64, ContinuumError> {
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3;
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, noise_scale, 60, &mut evals)
}

/// Default `u` grid: uniform core up to 0.90, then geometric refinement of
/// the gap `w = 1 - u` down to `1e-6` (16 points per decade), so the table
/// resolves both the core and the logarithmically stretching tail.
pub fn default_u_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=90).map(|k| 0.01 * k as f64).collect();
    for k in 1..=80 {
        grid.push(1.0 - 0.1 * 10f64.powf(-(k as f64) / 16.0));
    }
    grid
}

/// Tabulates the heteroclinic by adaptive quadrature of
/// `xi(u) = integral_0^u sqrt(beta / F(s)) ds` over each grid segment, with
/// the default total tolerance [`DEFAULT_QUADRATURE_TOL`].
///
/// `u_grid` must be strictly increasing inside `(0, U_MAX]`; the pinned
/// origin `(0, 0)` is prepended automatically.
pub fn limit_profile(
    np: &NormalizedPotential,
    beta: f64,
    u_grid: &[f64],
) -> Result<ContinuumSolution, ContinuumError> {
    limit_profile_with_tol(np, beta, u_grid, DEFAULT_QUADRATURE_TOL)
}

/// [`limit_profile`] with an explicit total quadrature tolerance.
pub fn limit_profile_with_tol(
    np: &NormalizedPotential,
    beta: f64,
    u_grid: &[f64],
    quadrature_tol: f64,
) -> Result<ContinuumSolution, ContinuumError> {
    assert!(beta > 0.0, "coupling beta must be positive");
    assert!(quadrature_tol > 0.0);
    assert!(!u_grid.is_empty(), "u_grid must be non-empty");
    assert!(
        u_grid.windows(2).all(|w| w[0] < w[1]),
        "u_grid must be strictly increasing"
    );
    assert!(
        u_grid[0] > 0.0 && *u_grid.last().unwrap() <= U_MAX,
        "u_grid must lie in (0, 1 - 1e-6]"
    );
    let f2 = np.f_second_at_1();
    assert!(
        f2 > 0.0,
        "far field must be non-degenerate (F''(1) > 0) for the tail extension"
    );
    let integrand = |s: f64| -> Result<f64, ContinuumError> {
        let f = np.eval_f(s).map_err(|_| ContinuumError::HypothesisViolated {
            eta: s,
            f_value: f64::NAN,
        })?;
        if f <= 0.0 {
            return Err(ContinuumError::HypothesisViolated { eta: s, f_value: f });
        }
        Ok((beta / f).sqrt())
    };
    let seg_tol = (quadrature_tol / u_grid.len() as f64).max(1e-15);
    // F carries an absolute error of a few machine epsilons near eta = 1
    // (subtraction of O(1) terms at a double root); 8 eps is a safe bound.
    // Accepting segments at the induced integrand noise floor costs at most
    // ~1e-5 in xi on the last tail decade, which the inverse map damps by
    // w * mu, so the tabulated profile stays accurate to ~1e-11 in u there.
    let noise_scale = 8.0 * f64::EPSILON / (2.0 * beta);
    let mut xi_grid = Vec::with_capacity(u_grid.len() + 1);
    let mut u_values = Vec::with_capacity(u_grid.len() + 1);
    xi_grid.push(0.0);
    u_values.push(0.0);
    let mut xi = 0.0;
    let mut prev = 0.0;
    for &u in u_grid {
        xi += adaptive_simpson(&integrand, prev, u, seg_tol, noise_scale)?;
        xi_grid.push(xi);
        u_values.push(u);
        prev = u;
    }
    let slopes = pchip_slopes(&xi_grid, &u_values);
    Ok(ContinuumSolution {
        xi_grid,
        u_values,
        beta,
        quadrature_tol,
        tail_rate: (f2 / (2.0 * beta)).sqrt(),
        slopes,
    })
}

/// One epsilon-scaled lattice solve compared against the continuum limit.
#[derive(Clone, Debug)]
pub struct EpsRun {
    /// Lattice spacing.
    pub eps: f64,
    /// Converged profile at coupling `beta / eps^2`.
    pub profile: Profile,
    /// `sup |u_eps(xi) - u(xi)|` over stored sites with `|xi| <= L`.
    pub sup_error_on_window: f64,
    /// Window half-width `L`.
    pub window_half_width: f64,
    /// Coupling actually used for the lattice solve.
    pub lattice_beta: f64,
    /// Whether the solve reached its residual tolerance.
    pub converged: bool,
}

/// Tail margin (in `xi` units) required beyond the window: `eps * N` must be
/// at least `L + EPS_WINDOW_MARGIN` so truncation cannot pollute the window.
pub const EPS_WINDOW_MARGIN: f64 = 2.0;

/// Solves the lattice problem at coupling `beta / eps^2` on `n` stored sites
/// and measures the sup distance to `limit` over the window `|xi| <= L`,
/// reading stored site `k` at `xi = eps * position(k)`.
#[allow(clippy::too_many_arguments)]
pub fn eps_solve(
    np: &NormalizedPotential,
    beta: f64,
    eps: f64,
    n: usize,
    setting: Setting,
    cfg: &FlowConfig,
    window_l: f64,
    limit: &ContinuumSolution,
) -> Result<EpsRun, ContinuumError> {
    assert!(eps > 0.0 && beta > 0.0 && window_l > 0.0);
    let covered = eps * n as f64;
    let required = window_l + EPS_WINDOW_MARGIN;
    if covered < required {
        return Err(ContinuumError::WindowNotCovered { covered, required });
    }
    let lattice_beta = beta / (eps * eps);
    let result = minimize(setting, n, np, lattice_beta, cfg)?;
    let mut sup = 0.0f64;
    for (k, &u) in result.profile.values().iter().enumerate() {
        let xi = eps * result.profile.position(k);
        if xi <= window_l {
            sup = sup.max((u - limit.eval(xi)).abs());
        }
    }
    Ok(EpsRun {
        eps,
        profile: result.profile,
        sup_error_on_window: sup,
        window_half_width: window_l,
        lattice_beta,
        converged: result.converged,
    })
}

/// Scaled-energy breakdown of an epsilon run against the linear-ramp
/// competitor.
#[derive(Clone, Copy, Debug)]
pub struct EnergyBoundCheck {
    /// `eps * sum F(u_j)` over the full reflected line.
    pub f_part: f64,
    /// `(beta / eps) * sum (u_{j+1} - u_j)^2` over the full reflected line.
    pub d_eps_part: f64,
    /// `f_part + d_eps_part`.
    pub total: f64,
    /// Same functional on the clamped linear ramp `min(eps * j, 1)`.
    pub competitor_total: f64,
    /// `total <= competitor_total` (minimality over the admissible set).
    pub within_bound: bool,
}

/// Evaluates the scaled energy `E_eps(u) = eps * Sum F + (beta / eps) * Sum
/// diffs^2` of the run's profile and of the explicit ramp competitor on the
/// same truncation. The scaled energy is `eps` times the lattice energy at
/// coupling `beta / eps^2`, so both reuse the lattice energy sum.
pub fn energy_bound_check(
    run: &EpsRun,
    np: &NormalizedPotential,
    beta: f64,
) -> Result<EnergyBoundCheck, ContinuumError> {
    let eps = run.eps;
    let lattice_beta = beta / (eps * eps);
    let e = energy(&run.profile, np, lattice_beta).map_err(MinimizeError::from)?;
    let f_part = eps * e.f_part;
    let d_eps_part = (beta / eps) * e.d_part;
    let p = &run.profile;
    let ramp: Vec<f64> = (0..p.n())
        .map(|k| (eps * p.position(k)).min(1.0))
        .collect();
    let ramp = Profile::new(p.setting(), ramp).map_err(MinimizeError::from)?;
    let e_ramp = energy(&ramp, np, lattice_beta).map_err(MinimizeError::from)?;
    let competitor_total = eps * e_ramp.total;
    let total = f_part + d_eps_part;
    Ok(EnergyBoundCheck {
        f_part,
        d_eps_part,
        total,
        competitor_total,
        within_bound: total <= competitor_total,
    })
}
