//! Oscillator potentials and their normal form.
//!
//! A standing wave with profile `u` and frequency `sigma` solves
//! `sigma u_j = Psi'(u_j^2) u_j - beta (u_{j+1} + u_{j-1} - 2 u_j)`. The wave
//! equation is invariant under simultaneous rescaling of amplitude, time and
//! energy offset, so every admissible potential can be brought into the normal
//! form `sigma = Psi(1) = Psi'(1) = 1` with asymptotic amplitude `1`. All
//! solver mathematics then depends on the potential only through
//!
//! ```text
//! F(eta) = Psi(eta^2) - eta^2,
//! ```
//!
//! which vanishes to second order at `eta = +-1` and is even in `eta`. This
//! module builds [`NormalizedPotential`] from a user-supplied [`PotentialSpec`]
//! (either `Psi` with derivatives or `F` directly), exposes `F`, `F'`, `F''(1)`
//! and the on-site nonlinearity `psi(eta) = Psi'(eta^2) eta`, and checks the
//! two existence hypotheses: `F > 0` on the open interval `(-1, 1)` and
//! `F''(1) > 0`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Shared real-valued function of one real variable.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default slack allowed beyond `|eta| = 1` when evaluating `F` and `F'`.
///
/// Minimizers live in `[-1, 1]`, but intermediate flow iterates may graze the
/// boundary by round-off; evaluation up to `1 + SLACK` is accepted and anything
/// beyond is a domain error.
pub const DOMAIN_SLACK: f64 = 1e-6;

/// Default sample count for hypothesis checking.
pub const DEFAULT_HYPOTHESIS_SAMPLES: usize = 10_000;

/// Relative tolerance for the finite-difference consistency check between a
/// supplied function and its supplied derivative.
const CONSISTENCY_TOL: f64 = 1e-3;

/// `f_positive_interior` requires the sampled interior minimum of `F` to exceed
/// this coefficient times the squared grid spacing. `F` vanishes quadratically
/// at `eta = +-1`, so the smallest legitimate sample value scales like
/// `F''(1)/2 * h^2`; a floor proportional to `h^2` separates that from sign
/// changes without misflagging steep but positive potentials.
const POSITIVITY_FLOOR_COEFF: f64 = 1e-3;

/// Errors from potential construction and evaluation.
#[derive(Debug, Error)]
pub enum PotentialError {
    /// `Psi'(u_inf^2) <= 0`: the wave frequency would be non-positive and the
    /// normalization does not exist.
    #[error("Psi'(u_inf^2) = {value:e} is not positive; cannot normalize to unit frequency")]
    NonPositiveFrequency {
        /// The offending derivative value.
        value: f64,
    },
    /// Evaluation outside `|eta| <= 1 + slack`.
    #[error("eta = {eta:e} lies outside the admissible range |eta| <= 1 + {slack:e}")]
    OutOfDomain {
        /// The rejected argument.
        eta: f64,
        /// The slack that was in effect.
        slack: f64,
    },
    /// Name passed to [`builtin`] does not match any built-in potential.
    #[error("unknown potential {0:?} (expected \"cubic\", \"power:d\", or \"doublewell\")")]
    UnknownName(String),
    /// The supplied spec violates its own invariants.
    #[error("invalid potential spec: {0}")]
    InvalidSpec(String),
    /// A plain-text F table failed to parse or validate.
    #[error("invalid F table: {0}")]
    InvalidTable(String),
}

/// How the potential is supplied.
#[derive(Clone)]
pub enum PotentialInput {
    /// `Psi` with first and second derivative, as functions of `x = |A|^2 >= 0`.
    FromPsi {
        /// `Psi(x)`.
        psi: RealFn,
        /// `Psi'(x)`.
        psi_prime: RealFn,
        /// `Psi''(x)`.
        psi_second: RealFn,
    },
    /// `F` and `F'` directly (already in normal form), plus `F''(1)`.
    FromF {
        /// `F(eta)`; must be even, with `F(+-1) = 0`.
        f: RealFn,
        /// `F'(eta)`; must be odd, with `F'(+-1) = 0`.
        f_prime: RealFn,
        /// `F''(1)`.
        f_second_at_1: f64,
    },
}

impl fmt::Debug for PotentialInput {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialInput::FromPsi { .. } => fm.write_str("FromPsi"),
            PotentialInput::FromF { f_second_at_1, .. } => fm
                .debug_struct("FromF")
                .field("f_second_at_1", f_second_at_1)
                .finish(),
        }
    }
}

/// User-supplied oscillator potential together with the target asymptotic
/// amplitude `u_inf > 0`.
#[derive(Clone, Debug)]
pub struct PotentialSpec {
    input: PotentialInput,
    u_inf: f64,
}

impl PotentialSpec {
    /// Spec from `Psi` and its derivatives.
    pub fn from_psi(psi: RealFn, psi_prime: RealFn, psi_second: RealFn, u_inf: f64) -> Self {
        Self {
            input: PotentialInput::FromPsi {
                psi,
                psi_prime,
                psi_second,
            },
            u_inf,
        }
    }

    /// Spec from `F` directly. The asymptotic amplitude is necessarily `1`
    /// because `F` is already the normalized object.
    pub fn from_f(f: RealFn, f_prime: RealFn, f_second_at_1: f64) -> Self {
        Self {
            input: PotentialInput::FromF {
                f,
                f_prime,
                f_second_at_1,
            },
            u_inf: 1.0,
        }
    }

    /// Target asymptotic amplitude.
    pub fn u_inf(&self) -> f64 {
        self.u_inf
    }

    /// How the potential was supplied.
    pub fn input(&self) -> &PotentialInput {
        &self.input
    }

    /// Checks the supplied functions by sampling: finiteness on `[0, u_inf^2]`
    /// (respectively `[-1-slack, 1+slack]` in `FromF` mode) and consistency of
    /// the supplied derivatives with centered finite differences.
    pub fn validate(&self) -> Result<(), PotentialError> {
        if self.u_inf <= 0.0 || !self.u_inf.is_finite() {
            return Err(PotentialError::InvalidSpec(format!(
                "u_inf = {} must be a positive finite real",
                self.u_inf
            )));
        }
        match &self.input {
            PotentialInput::FromPsi {
                psi,
                psi_prime,
                psi_second,
            } => {
                let x_inf = self.u_inf * self.u_inf;
                // Finiteness of Psi on [0, x_inf]; derivatives are sampled away
                // from 0 since power-law potentials have Psi'' -> infinity there.
                for k in 0..=32 {
                    let x = x_inf * k as f64 / 32.0;
                    if !psi(x).is_finite() {
                        return Err(PotentialError::InvalidSpec(format!(
                            "Psi({x}) is not finite"
                        )));
                    }
                    if k >= 1 && (!psi_prime(x).is_finite() || !psi_second(x).is_finite()) {
                        return Err(PotentialError::InvalidSpec(format!(
                            "Psi'({x}) or Psi''({x}) is not finite"
                        )));
                    }
                }
                let h = 1e-5 * x_inf;
                for k in 1..=8 {
                    let x = x_inf * k as f64 / 9.0;
                    let fd1 = (psi(x + h) - psi(x - h)) / (2.0 * h);
                    let d1 = psi_prime(x);
                    if (fd1 - d1).abs() > CONSISTENCY_TOL * d1.abs().max(1.0) {
                        return Err(PotentialError::InvalidSpec(format!(
                            "Psi'({x}) = {d1:e} disagrees with the finite difference {fd1:e} of Psi"
                        )));
                    }
                    let fd2 = (psi_prime(x + h) - psi_prime(x - h)) / (2.0 * h);
                    let d2 = psi_second(x);
                    if (fd2 - d2).abs() > CONSISTENCY_TOL * d2.abs().max(1.0) {
                        return Err(PotentialError::InvalidSpec(format!(
                            "Psi''({x}) = {d2:e} disagrees with the finite difference {fd2:e} of Psi'"
                        )));
                    }
                }
                Ok(())
            }
            PotentialInput::FromF {
                f,
                f_prime,
                f_second_at_1,
            } => {
                if !f_second_at_1.is_finite() {
                    return Err(PotentialError::InvalidSpec(
                        "F''(1) is not finite".to_string(),
                    ));
                }
                for k in 0..=32 {
                    let eta = -1.0 + 2.0 * k as f64 / 32.0;
                    if !f(eta).is_finite() || !f_prime(eta).is_finite() {
                        return Err(PotentialError::InvalidSpec(format!(
                            "F({eta}) or F'({eta}) is not finite"
                        )));
                    }
                }
                let h = 1e-5;
                for k in 1..=8 {
                    let eta = 0.9 * k as f64 / 8.0;
                    let fd = (f(eta + h) - f(eta - h)) / (2.0 * h);
                    let d = f_prime(eta);
                    if (fd - d).abs() > CONSISTENCY_TOL * d.abs().max(1.0) {
                        return Err(PotentialError::InvalidSpec(format!(
                            "F'({eta}) = {d:e} disagrees with the finite difference {fd:e} of F"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Potential in normal form: `sigma = Psi(1) = Psi'(1) = 1`, asymptote `1`.
///
/// Carries `F`, `F'`, `F''(1)`, the scaling that produced them, and the
/// underlying `Psi`/`Psi'` in normal form (needed by the time integrator).
#[derive(Clone)]
pub struct NormalizedPotential {
    f: RealFn,
    f_prime: RealFn,
    psi_hat: RealFn,
    psi_hat_prime: RealFn,
    f_second_at_1: f64,
    scale_eta: f64,
    scale_tau: f64,
    shift_delta: f64,
    sigma: f64,
    beta_factor: f64,
    slack: f64,
}

impl fmt::Debug for NormalizedPotential {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("NormalizedPotential")
            .field("f_second_at_1", &self.f_second_at_1)
            .field("scale_eta", &self.scale_eta)
            .field("scale_tau", &self.scale_tau)
            .field("shift_delta", &self.shift_delta)
            .field("sigma", &self.sigma)
            .field("beta_factor", &self.beta_factor)
            .finish()
    }
}

impl NormalizedPotential {
    fn check_domain(&self, eta: f64) -> Result<(), PotentialError> {
        if !eta.is_finite() || eta.abs() > 1.0 + self.slack {
            return Err(PotentialError::OutOfDomain {
                eta,
                slack: self.slack,
            });
        }
        Ok(())
    }

    /// `F(eta)`. Evenness is structural: the supplied function is evaluated at
    /// `|eta|`.
    pub fn eval_f(&self, eta: f64) -> Result<f64, PotentialError> {
        self.check_domain(eta)?;
        Ok((self.f)(eta.abs()))
    }

    /// `F'(eta) = 2 Psi'(eta^2) eta - 2 eta`. Oddness is structural.
    pub fn eval_f_prime(&self, eta: f64) -> Result<f64, PotentialError> {
        self.check_domain(eta)?;
        let v = (self.f_prime)(eta.abs());
        Ok(if eta < 0.0 { -v } else { v })
    }

    /// `F''(1) = 4 Psi''(1)`, the curvature controlling the tail decay rate.
    pub fn f_second_at_1(&self) -> f64 {
        self.f_second_at_1
    }

    /// The on-site nonlinearity `psi(eta) = Psi'(eta^2) eta` of the standing
    /// wave equation.
    pub fn psi_nonlinearity(&self, eta: f64) -> Result<f64, PotentialError> {
        self.check_domain(eta)?;
        Ok((self.psi_hat_prime)(eta * eta) * eta)
    }

    /// Normal-form `Psi(x)`, for conserved-quantity sums. Unchecked: the time
    /// integrator may transiently evaluate slightly outside `[0, 1]`.
    pub fn psi_hat(&self, x: f64) -> f64 {
        (self.psi_hat)(x)
    }

    /// Normal-form `Psi'(x)`, the nonlinearity of the full lattice dynamics.
    pub fn psi_hat_prime(&self, x: f64) -> f64 {
        (self.psi_hat_prime)(x)
    }

    /// Amplitude scale `eta` of the normalization (`u_inf` of the input spec).
    pub fn scale_eta(&self) -> f64 {
        self.scale_eta
    }

    /// Time scale `tau = 1/Psi'(u_inf^2)` of the normalization.
    pub fn scale_tau(&self) -> f64 {
        self.scale_tau
    }

    /// Energy shift `delta` chosen so that `Psi(1) = 1` in normal form.
    pub fn shift_delta(&self) -> f64 {
        self.shift_delta
    }

    /// Wave frequency after normalization; always `1`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Multiplier taking the user's coupling to the normalized one:
    /// `beta_normalized = beta_factor * beta`. Equals `scale_tau` because the
    /// rescaling maps `beta` to `tau * beta`.
    pub fn beta_factor(&self) -> f64 {
        self.beta_factor
    }

    /// Domain slack in effect for `eval_f` and friends.
    pub fn slack(&self) -> f64 {
        self.slack
    }
}

/// Brings a [`PotentialSpec`] into normal form.
///
/// In `FromPsi` mode the scaling `tau = 1/Psi'(u_inf^2)`,
/// `Psi(x) -> tau Psi(u_inf^2 x)/u_inf^2 + delta` with
/// `delta = 1 - tau Psi(u_inf^2)/u_inf^2` enforces `Psi(1) = Psi'(1) = 1`; the
/// coupling must be rescaled by the returned `beta_factor = tau`. In `FromF`
/// mode the identity normalization applies and `f` is taken verbatim.
pub fn normalize(spec: &PotentialSpec) -> Result<NormalizedPotential, PotentialError> {
    spec.validate()?;
    let np = match &spec.input {
        PotentialInput::FromPsi {
            psi,
            psi_prime,
            psi_second,
        } => {
            let x_inf = spec.u_inf * spec.u_inf;
            let freq = psi_prime(x_inf);
            if freq <= 0.0 || freq.is_nan() {
                return Err(PotentialError::NonPositiveFrequency { value: freq });
            }
            let tau = 1.0 / freq;
            let delta = 1.0 - tau * psi(x_inf) / x_inf;
            let psi_hat: RealFn = {
                let psi = psi.clone();
                Arc::new(move |x| tau * psi(x_inf * x) / x_inf + delta)
            };
            let psi_hat_prime: RealFn = {
                let psi_prime = psi_prime.clone();
                Arc::new(move |x| tau * psi_prime(x_inf * x))
            };
            let f: RealFn = {
                let psi_hat = psi_hat.clone();
                Arc::new(move |eta| psi_hat(eta * eta) - eta * eta)
            };
            let f_prime: RealFn = {
                let psi_hat_prime = psi_hat_prime.clone();
                Arc::new(move |eta| 2.0 * psi_hat_prime(eta * eta) * eta - 2.0 * eta)
            };
            NormalizedPotential {
                f,
                f_prime,
                psi_hat,
                psi_hat_prime,
                f_second_at_1: 4.0 * tau * x_inf * psi_second(x_inf),
                scale_eta: spec.u_inf,
                scale_tau: tau,
                shift_delta: delta,
                sigma: 1.0,
                beta_factor: tau,
                slack: DOMAIN_SLACK,
            }
        }
        PotentialInput::FromF {
            f,
            f_prime,
            f_second_at_1,
        } => {
            // Reconstruct the normal-form Psi from F(eta) = Psi(eta^2) - eta^2.
            // Near x = 0 the quotient F'(sqrt(x))/(2 sqrt(x)) is replaced by its
            // finite-difference limit.
            let psi_hat: RealFn = {
                let f = f.clone();
                Arc::new(move |x: f64| f(x.max(0.0).sqrt()) + x)
            };
            let psi_hat_prime: RealFn = {
                let f_prime = f_prime.clone();
                Arc::new(move |x: f64| {
                    if x > 1e-12 {
                        let eta = x.sqrt();
                        f_prime(eta) / (2.0 * eta) + 1.0
                    } else {
                        f_prime(1e-6) / 2e-6 + 1.0
                    }
                })
            };
            NormalizedPotential {
                f: f.clone(),
                f_prime: f_prime.clone(),
                psi_hat,
                psi_hat_prime,
                f_second_at_1: *f_second_at_1,
                scale_eta: 1.0,
                scale_tau: 1.0,
                shift_delta: 0.0,
                sigma: 1.0,
                beta_factor: 1.0,
                slack: DOMAIN_SLACK,
            }
        }
    };
    for eta in [1.0f64, -1.0] {
        let fv = np.eval_f(eta)?;
        let fpv = np.eval_f_prime(eta)?;
        if fv.abs() > 1e-10 || fpv.abs() > 1e-10 {
            return Err(PotentialError::InvalidSpec(format!(
                "normalization did not produce F({eta}) = F'({eta}) = 0 \
                 (got F = {fv:e}, F' = {fpv:e}); in FromF mode check that the \
                 supplied F vanishes to second order at +-1"
            )));
        }
    }
    Ok(np)
}

/// Verdicts of the existence hypotheses, from dense sampling of `F`.
#[derive(Clone, Debug)]
pub struct HypothesisReport {
    /// `F > 0` on the sampled open interval `(-1, 1)` (above the resolution
    /// floor).
    pub f_positive_interior: bool,
    /// `F''(1) > 0` (exponential tails exist).
    pub f_second_at_1_positive: bool,
    /// Smallest sampled interior value of `F`.
    pub min_f_interior: f64,
    /// Sample point attaining `min_f_interior`.
    pub argmin_eta: f64,
    /// Interior critical points of `F` with `F < 0`: the plateau heights that
    /// minimizing sequences lock onto when positivity fails. Empty when the
    /// hypotheses hold.
    pub eta_star_roots: Vec<f64>,
}

/// Samples `F` on a uniform grid of `(-1, 1)` and reports the hypothesis
/// verdicts.
///
/// `samples` must be at least 3. Roots of `F'` are located by bisecting sign
/// changes between neighboring samples and kept when `F < 0` there.
pub fn check_hypotheses(np: &NormalizedPotential, samples: usize) -> HypothesisReport {
    assert!(samples >= 3, "hypothesis checking needs at least 3 samples");
    let h = 2.0 / (samples + 1) as f64;
    let mut min_f = f64::INFINITY;
    let mut argmin = 0.0;
    let mut roots = Vec::new();
    let eval = |eta: f64| (np.eval_f(eta).unwrap(), np.eval_f_prime(eta).unwrap());
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..=samples {
        let eta = -1.0 + h * i as f64;
        let (fv, fpv) = eval(eta);
        if fv < min_f {
            min_f = fv;
            argmin = eta;
        }
        if let Some((eta_prev, fp_prev)) = prev {
            if fp_prev == 0.0 {
                push_root(&mut roots, np, eta_prev);
            } else if fp_prev * fpv < 0.0 {
                let root = bisect_f_prime(np, eta_prev, eta);
                push_root(&mut roots, np, root);
            }
        }
        prev = Some((eta, fpv));
    }
    if let Some((eta_last, fp_last)) = prev {
        if fp_last == 0.0 {
            push_root(&mut roots, np, eta_last);
        }
    }
    HypothesisReport {
        f_positive_interior: min_f > POSITIVITY_FLOOR_COEFF * h * h,
        f_second_at_1_positive: np.f_second_at_1() > 0.0,
        min_f_interior: min_f,
        argmin_eta: argmin,
        eta_star_roots: roots,
    }
}

fn push_root(roots: &mut Vec<f64>, np: &NormalizedPotential, root: f64) {
    if np.eval_f(root).unwrap() < 0.0 && roots.iter().all(|r| (r - root).abs() > 1e-9) {
        roots.push(root);
    }
}

fn bisect_f_prime(np: &NormalizedPotential, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = np.eval_f_prime(lo).unwrap();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-14 {
            return mid;
        }
        let fmid = np.eval_f_prime(mid).unwrap();
        if fmid == 0.0 {
            return mid;
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    0.5 * (lo + hi)
}

/// Built-in potentials selectable by name.
///
/// * `"cubic"`: `Psi(x) = x^2/2 + 1/2`, the defocussing cubic lattice; already
///   in normal form with `F(eta) = (eta^2 - 1)^2 / 2`.
/// * `"power:d"` for real `d > 0`: nonlinearity `psi(eta) = eta^(1+d)/(1+d)`,
///   i.e. `Psi'(x) = x^(d/2)/(1+d)`; normalization brings it to
///   `Psi'(x) = x^(d/2)` with `F''(1) = 2d`.
/// * `"doublewell"`: the non-convex example `F(eta) = (eta^2-1)^2 (eta^2-1/4)/2`
///   supplied in `FromF` mode; violates interior positivity (`F(0) = -1/8`).
pub fn builtin(name: &str) -> Result<PotentialSpec, PotentialError> {
    match name {
        "cubic" => Ok(PotentialSpec::from_psi(
            Arc::new(|x| 0.5 * x * x + 0.5),
            Arc::new(|x| x),
            Arc::new(|_| 1.0),
            1.0,
        )),
        "doublewell" => Ok(PotentialSpec::from_f(
            Arc::new(|eta| {
                let a = eta * eta;
                0.5 * (a - 1.0) * (a - 1.0) * (a - 0.25)
            }),
            Arc::new(|eta| {
                let a = eta * eta;
                3.0 * eta * (a - 1.0) * (a - 0.5)
            }),
            3.0,
        )),
        _ => {
            if let Some(d_str) = name.strip_prefix("power:") {
                let d: f64 = d_str
                    .parse()
                    .map_err(|_| PotentialError::UnknownName(name.to_string()))?;
                if !d.is_finite() || d <= 0.0 {
                    return Err(PotentialError::UnknownName(name.to_string()));
                }
                let c = 1.0 / (1.0 + d);
                Ok(PotentialSpec::from_psi(
                    Arc::new(move |x: f64| 2.0 * c * x.powf(0.5 * d + 1.0) / (d + 2.0)),
                    Arc::new(move |x: f64| c * x.powf(0.5 * d)),
                    Arc::new(move |x: f64| c * 0.5 * d * x.powf(0.5 * d - 1.0)),
                    1.0,
                ))
            } else {
                Err(PotentialError::UnknownName(name.to_string()))
            }
        }
    }
}

/// Plain-text table of `(eta, F, F')` rows defining a custom potential by
/// linear interpolation.
///
/// Lines starting with `#` and blank lines are skipped; columns are separated
/// by whitespace or commas. Rows are folded onto `eta >= 0` (evenness of `F`
/// is structural, `F'` flips sign), so tables may cover `[0, 1]` or `[-1, 1]`.
/// The folded abscissae must be strictly increasing after deduplication and
/// reach at least `1`.
#[derive(Clone, Debug)]
pub struct FTable {
    eta: Vec<f64>,
    f: Vec<f64>,
    f_prime: Vec<f64>,
}

impl FTable {
    /// Parses the text form. Limits: at most 100_000 rows.
    pub fn parse(text: &str) -> Result<Self, PotentialError> {
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 3 {
                return Err(PotentialError::InvalidTable(format!(
                    "line {}: expected 3 columns (eta, F, F'), found {}",
                    idx + 1,
                    cols.len()
                )));
            }
            let mut vals = [0.0f64; 3];
            for (v, s) in vals.iter_mut().zip(&cols) {
                *v = s.parse().map_err(|_| {
                    PotentialError::InvalidTable(format!("line {}: bad number {s:?}", idx + 1))
                })?;
                if !v.is_finite() {
                    return Err(PotentialError::InvalidTable(format!(
                        "line {}: non-finite value {s:?}",
                        idx + 1
                    )));
                }
            }
            rows.push((vals[0], vals[1], vals[2]));
            if rows.len() > 100_000 {
                return Err(PotentialError::InvalidTable(
                    "more than 100000 rows".to_string(),
                ));
            }
        }
        // Fold to eta >= 0: F is even, F' is odd.
        for row in &mut rows {
            if row.0 < 0.0 {
                row.0 = -row.0;
                row.2 = -row.2;
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut eta: Vec<f64> = Vec::new();
        let mut f: Vec<f64> = Vec::new();
        let mut f_prime: Vec<f64> = Vec::new();
        for (e, fv, fpv) in rows {
            match eta.last() {
                Some(&last) if e - last < 1e-12 => {
                    // Duplicate abscissa after folding: results must agree.
                    let i = eta.len() - 1;
                    if (f[i] - fv).abs() > 1e-9_f64.max(1e-9 * fv.abs())
                        || (f_prime[i] - fpv).abs() > 1e-9_f64.max(1e-9 * fpv.abs())
                    {
                        return Err(PotentialError::InvalidTable(format!(
                            "rows at eta = +-{e} disagree after evenness folding"
                        )));
                    }
                }
                _ => {
                    eta.push(e);
                    f.push(fv);
                    f_prime.push(fpv);
                }
            }
        }
        if eta.len() < 2 {
            return Err(PotentialError::InvalidTable(
                "need at least two distinct rows".to_string(),
            ));
        }
        if eta[0] > 1e-9 {
            return Err(PotentialError::InvalidTable(
                "table must start at eta = 0 (or cover it via negative rows)".to_string(),
            ));
        }
        // Linear interpolation cannot represent the quadratic zero of F at 1,
        // so a row at eta = 1 itself is required, and it must vanish there.
        match eta.iter().position(|&e| (e - 1.0).abs() <= 1e-9) {
            None => {
                return Err(PotentialError::InvalidTable(
                    "table must contain a row at eta = 1".to_string(),
                ))
            }
            Some(i) => {
                if f[i].abs() > 1e-8 || f_prime[i].abs() > 1e-8 {
                    return Err(PotentialError::InvalidTable(format!(
                        "F and F' must vanish at eta = 1 (got F = {:e}, F' = {:e})",
                        f[i], f_prime[i]
                    )));
                }
            }
        }
        Ok(Self { eta, f, f_prime })
    }

    fn interp(&self, xs: &[f64], a: f64) -> f64 {
        // a >= 0 by the evenness fold in the callers; clamp into the table.
        let n = self.eta.len();
        if a <= self.eta[0] {
            return xs[0];
        }
        if a >= self.eta[n - 1] {
            return xs[n - 1];
        }
        let i = match self.eta.binary_search_by(|e| e.total_cmp(&a)) {
            Ok(i) => return xs[i],
            Err(i) => i,
        };
        let t = (a - self.eta[i - 1]) / (self.eta[i] - self.eta[i - 1]);
        xs[i - 1] + t * (xs[i] - xs[i - 1])
    }

    /// Converts the table into a `FromF` spec. `F''(1)` is estimated from the
    /// slope of the tabulated `F'` on the segment containing `eta = 1`.
    pub fn into_spec(self) -> Result<PotentialSpec, PotentialError> {
        let n = self.eta.len();
        let mut i = match self.eta.binary_search_by(|e| e.total_cmp(&1.0)) {
            Ok(i) => i.max(1),
            Err(i) => i.min(n - 1).max(1),
        };
        if i == n {
            i = n - 1;
        }
        let f_second_at_1 =
            (self.f_prime[i] - self.f_prime[i - 1]) / (self.eta[i] - self.eta[i - 1]);
        let table = Arc::new(self);
        let t1 = table.clone();
        let t2 = table;
        Ok(PotentialSpec::from_f(
            Arc::new(move |eta: f64| t1.interp(&t1.f, eta.abs())),
            Arc::new(move |eta: f64| {
                let v = t2.interp(&t2.f_prime, eta.abs());
                if eta < 0.0 {
                    -v
                } else {
                    v
                }
            }),
            f_second_at_1,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cubic() -> NormalizedPotential {
        normalize(&builtin("cubic").unwrap()).unwrap()
    }

    #[test]
    fn cubic_is_already_normal_form() {
        let np = cubic();
        assert_eq!(np.scale_tau(), 1.0);
        assert_eq!(np.scale_eta(), 1.0);
        assert_eq!(np.shift_delta(), 0.0);
        assert_eq!(np.beta_factor(), 1.0);
        assert_eq!(np.sigma(), 1.0);
        assert_relative_eq!(np.eval_f(0.0).unwrap(), 0.5);
        assert_relative_eq!(np.f_second_at_1(), 4.0);
    }

    #[test]
    fn scaling_halves_doubled_psi() {
        // Psi(x) = x^2 has Psi'(1) = 2, so tau = 1/2 and the normal form is
        // x^2/2 + 1/2; the user's coupling must be halved.
        let spec = PotentialSpec::from_psi(
            Arc::new(|x| x * x),
            Arc::new(|x| 2.0 * x),
            Arc::new(|_| 2.0),
            1.0,
        );
        let np = normalize(&spec).unwrap();
        assert_relative_eq!(np.scale_tau(), 0.5);
        assert_relative_eq!(np.beta_factor(), 0.5);
        assert_relative_eq!(np.shift_delta(), 0.5);
        assert_relative_eq!(np.psi_hat(0.0), 0.5);
        assert_relative_eq!(np.psi_hat(1.0), 1.0);
        assert_relative_eq!(np.psi_hat_prime(1.0), 1.0);
        let grid: Vec<f64> = (0..=20).map(|k| -1.0 + 0.1 * k as f64).collect();
        let cubic = cubic();
        for &eta in &grid {
            assert_relative_eq!(
                np.eval_f(eta).unwrap(),
                cubic.eval_f(eta).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn half_amplitude_scaling_recovers_the_same_normal_form() {
        // Psi(x) = x^2/2 with u_inf = 2: x_inf = 4, Psi'(4) = 4, tau = 1/4.
        let spec = PotentialSpec::from_psi(
            Arc::new(|x| 0.5 * x * x),
            Arc::new(|x| x),
            Arc::new(|_| 1.0),
            2.0,
        );
        let np = normalize(&spec).unwrap();
        assert_relative_eq!(np.scale_tau(), 0.25);
        assert_relative_eq!(np.scale_eta(), 2.0);
        assert_relative_eq!(np.eval_f(1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(np.eval_f_prime(1.0).unwrap(), 0.0, epsilon = 1e-15);
        // F''(1) = 4 tau x_inf Psi''(x_inf) = 4 * (1/4) * 4 * 1 = 4.
        assert_relative_eq!(np.f_second_at_1(), 4.0);
    }

    #[test]
    fn non_positive_frequency_is_rejected() {
        let spec = PotentialSpec::from_psi(
            Arc::new(|x| -x),
            Arc::new(|_| -1.0),
            Arc::new(|_| 0.0),
            1.0,
        );
        match normalize(&spec) {
            Err(PotentialError::NonPositiveFrequency { value }) => assert_eq!(value, -1.0),
            other => panic!("expected NonPositiveFrequency, got {other:?}"),
        }
    }

    #[test]
    fn domain_slack_is_enforced() {
        let np = cubic();
        assert!(np.eval_f(1.0 + 0.5e-6).is_ok());
        assert!(matches!(
            np.eval_f(1.0 + 2e-6),
            Err(PotentialError::OutOfDomain { .. })
        ));
        assert!(matches!(
            np.eval_f_prime(f64::NAN),
            Err(PotentialError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn psi_nonlinearity_matches_hand_values() {
        let np = cubic();
        assert_relative_eq!(np.psi_nonlinearity(1.0).unwrap(), 1.0);
        assert_relative_eq!(np.psi_nonlinearity(0.0).unwrap(), 0.0);
        assert_relative_eq!(np.psi_nonlinearity(0.5).unwrap(), 0.125);
    }

    #[test]
    fn power_law_normal_form() {
        for d in [1.0, 2.0, 3.5] {
            let np = normalize(&builtin(&format!("power:{d}")).unwrap()).unwrap();
            assert_relative_eq!(np.f_second_at_1(), 2.0 * d, epsilon = 1e-10);
            assert_relative_eq!(np.scale_tau(), 1.0 + d);
            // After normalization Psi'(x) = x^(d/2).
            assert_relative_eq!(np.psi_hat_prime(0.25), 0.25f64.powf(0.5 * d), epsilon = 1e-12);
            assert!(np.eval_f(0.5).unwrap() > 0.0);
        }
    }

    #[test]
    fn hypothesis_report_for_cubic_and_doublewell() {
        let report = check_hypotheses(&cubic(), 9999);
        assert!(report.f_positive_interior);
        assert!(report.f_second_at_1_positive);
        assert!(report.eta_star_roots.is_empty());
        assert!(report.min_f_interior > 0.0);

        let dw = normalize(&builtin("doublewell").unwrap()).unwrap();
        let report = check_hypotheses(&dw, 9999);
        assert!(!report.f_positive_interior);
        assert!(report.f_second_at_1_positive);
        assert_relative_eq!(report.min_f_interior, -0.125, epsilon = 1e-6);
        assert!(report.argmin_eta.abs() < 1e-3);
        // The only interior critical point with F < 0 is eta = 0; the points
        // +-1/sqrt(2) are local maxima with F = 1/32 > 0.
        assert_eq!(report.eta_star_roots.len(), 1);
        assert!(report.eta_star_roots[0].abs() < 1e-9);
    }

    #[test]
    fn degenerate_flat_f_fails_both_hypotheses() {
        let spec = PotentialSpec::from_f(Arc::new(|_| 0.0), Arc::new(|_| 0.0), 0.0);
        let np = normalize(&spec).unwrap();
        let report = check_hypotheses(&np, 101);
        assert!(!report.f_positive_interior);
        assert!(!report.f_second_at_1_positive);
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(
            builtin("quartic"),
            Err(PotentialError::UnknownName(_))
        ));
        assert!(matches!(
            builtin("power:-1"),
            Err(PotentialError::UnknownName(_))
        ));
        assert!(matches!(
            builtin("power:abc"),
            Err(PotentialError::UnknownName(_))
        ));
    }

    #[test]
    fn f_table_round_trips_the_cubic() {
        let cubic_np = cubic();
        let mut text = String::from("# eta  F  F'\n");
        for k in 0..=400 {
            let eta = k as f64 / 400.0;
            text.push_str(&format!(
                "{eta} {} {}\n",
                cubic_np.eval_f(eta).unwrap(),
                cubic_np.eval_f_prime(eta).unwrap()
            ));
        }
        let table = FTable::parse(&text).unwrap();
        let np = normalize(&table.into_spec().unwrap()).unwrap();
        for k in 0..=40 {
            let eta = -1.0 + k as f64 / 20.0;
            assert_relative_eq!(
                np.eval_f(eta).unwrap(),
                cubic_np.eval_f(eta).unwrap(),
                epsilon = 1e-4
            );
        }
        assert_relative_eq!(np.f_second_at_1(), 4.0, max_relative = 1e-2);
    }

    #[test]
    fn f_table_rejects_malformed_input() {
        assert!(FTable::parse("").is_err());
        assert!(FTable::parse("0 0.5\n1 0\n").is_err());
        assert!(FTable::parse("0 0.5 0\n0.5 x 0\n").is_err());
        assert!(FTable::parse("0 0.5 0\n0.5 0.2 -0.7\n").is_err()); // does not reach 1
        assert!(FTable::parse("0.5 0.2 -0.7\n1 0 0\n").is_err()); // does not cover 0
    }

    #[test]
    fn normalization_is_idempotent() {
        let spec = PotentialSpec::from_psi(
            Arc::new(|x| x * x + 0.25 * x),
            Arc::new(|x| 2.0 * x + 0.25),
            Arc::new(|_| 2.0),
            1.0,
        );
        let np1 = normalize(&spec).unwrap();
        let again = PotentialSpec::from_psi(
            {
                let np = np1.clone();
                Arc::new(move |x| np.psi_hat(x))
            },
            {
                let np = np1.clone();
                Arc::new(move |x| np.psi_hat_prime(x))
            },
            {
                let np = np1.clone();
                Arc::new(move |x| {
                    let h = 1e-5;
                    (np.psi_hat_prime(x + h) - np.psi_hat_prime(x - h)) / (2.0 * h)
                })
            },
            1.0,
        );
        let np2 = normalize(&again).unwrap();
        assert_relative_eq!(np2.scale_tau(), 1.0, epsilon = 1e-12);
        assert!(np2.shift_delta().abs() < 1e-12);
        for k in 0..=20 {
            let eta = -1.0 + 0.1 * k as f64;
            assert_relative_eq!(
                np1.eval_f(eta).unwrap(),
                np2.eval_f(eta).unwrap(),
                epsilon = 1e-12
            );
        }
    }
}
