//! Heteroclinic standing waves (dark solitons) of the defocussing discrete
//! nonlinear Schrödinger lattice
//!
//! ```text
//! i dA_j/dt = beta (A_{j+1} + A_{j-1} - 2 A_j) - Psi'(|A_j|^2) A_j,   j in Z,
//! ```
//!
//! computed by minimizing the renormalized energy
//!
//! ```text
//! E(u) = Sum_j F(u_j) + beta Sum_j (u_{j+1} - u_j)^2,
//! F(eta) = PsiHat(eta^2) - eta^2,
//! ```
//!
//! over monotone odd profiles frozen to `sgn j` outside a truncation window.
//! A standing wave `A_j(t) = e^{i t} u_j` (unit frequency after
//! normalization) connects the asymptotic states `-1` and `+1`; the two
//! symmetric placements put a lattice site at the interface center (on-site)
//! or straddle it (inter-site).
//!
//! The crate is organized by task:
//!
//! - [`potential`]: nonlinearity definitions, normalization to unit
//!   frequency and asymptotic amplitude, the effective potential `F`,
//!   built-ins, existence-hypothesis checks, and tabulated `F` input.
//! - [`lattice`]: truncated profiles, the energy and its Gateaux gradient,
//!   the shock initial guess, and the staggering transform.
//! - [`minimizer`]: explicit-Euler gradient flow with monotone projection
//!   and clamping, plus truncation sweeps.
//! - [`analysis`]: far-field decay rates (closed form and fitted) and
//!   plateau diagnostics for non-convex `F`.
//! - [`continuum`]: the limiting heteroclinic of `2 beta u'' = F'(u)` by
//!   quadrature and epsilon-scaled lattice solves converging to it.
//! - [`dynamics`]: full complex time evolution validating profiles as
//!   relative equilibria, with windowed conserved quantities.
//! - [`io`]: deterministic CSV/JSON emission and parsing.

#![warn(missing_docs)]

pub mod analysis;
pub mod continuum;
pub mod dynamics;
pub mod io;
pub mod lattice;
pub mod minimizer;
pub mod potential;
mod sum;

pub use analysis::{
    analyze_tail, decay_rate, default_fit_window, fit_tail, kappa_sequence, plateau_diagnostics,
    AnalysisError, DecayEstimate, Plateau, PlateauReport,
};
pub use continuum::{
    default_u_grid, energy_bound_check, eps_solve, limit_profile, limit_profile_with_tol,
    ContinuumError, ContinuumSolution, EnergyBoundCheck, EpsRun,
};
pub use dynamics::{
    conserved_quantities, evolve, evolve_with_samples, stability_limit, ConservationReport,
    DynamicsError, EvolutionSample, LatticeState,
};
pub use io::{format_sci, profile_csv, IoError, ProfileDocument};
pub use lattice::{
    energy, gateaux_gradient, residual_sup, shock_profile, staggering_transform, EnergyBreakdown,
    GradientField, LatticeError, Profile, Setting,
};
pub use minimizer::{
    flow_step, is_strictly_increasing, minimize, n_sweep, stability_threshold, FlowConfig,
    MinimizeError, MinimizeResult, NSweep,
};
pub use potential::{
    builtin, check_hypotheses, normalize, FTable, HypothesisReport, NormalizedPotential,
    PotentialError, PotentialInput, PotentialSpec, RealFn,
};
