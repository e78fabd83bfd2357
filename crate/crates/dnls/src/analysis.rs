//! Tail asymptotics and plateau diagnostics for computed standing waves.
//!
//! Writing `w_j = 1 - u_j` for the gap to the far-field value, a fixed point
//! of the flow satisfies the linearizable recursion
//!
//! ```text
//! w_{j+1} = (2 + delta_j) w_j - w_{j-1},   delta_j -> delta = F''(1) / (2 beta),
//! ```
//!
//! so decaying tails behave like `w_j ~ C kappa^j` with
//! `kappa = 1 / (1 + delta/2 + sqrt(delta (4 + delta)) / 2)` and decay
//! exponent `lambda = -ln kappa = arccosh(1 + delta/2)`.

use thiserror::Error;

use crate::lattice::Profile;
use crate::potential::NormalizedPotential;

/// Errors from tail analysis.
#[derive(Debug, Error)]
pub enum AnalysisError {
    /// `F''(1) <= 0`: the linearization at the far field has no decaying mode.
    #[error("no exponential tail: F''(1) = {f_second_at_1} is not positive")]
    NoExponentialTail {
        /// The offending curvature value.
        f_second_at_1: f64,
    },
    /// Fewer than two tail gaps are resolvable above round-off.
    #[error("tail is degenerate: only {usable} gap(s) above the round-off floor")]
    DegenerateTail {
        /// Number of usable gaps found.
        usable: usize,
    },
    /// The requested fit window retains fewer than four usable points.
    #[error("fit window [{start}, {end}] keeps {kept} point(s); need at least 4")]
    WindowTooSmall {
        /// Window start (stored index).
        start: usize,
        /// Window end (stored index, inclusive).
        end: usize,
        /// Points that survived the round-off filter.
        kept: usize,
    },
    /// No interior local minimum of `F` with `F < 0` exists to seed plateaus.
    #[error("no interior minimum of F with negative value; profiles cannot plateau")]
    NoPlateauCandidates,
}

/// `arccosh(1 + y)` for `y >= 0`, accurate for small `y`.
///
/// The textbook form `ln(x + sqrt(x^2 - 1))` loses all precision as `y -> 0`;
/// this uses `ln_1p` on the shifted argument and a series for tiny `y`.
pub fn arccosh_1p(y: f64) -> f64 {
    assert!(y >= 0.0, "arccosh argument must be >= 1");
    if y < 1e-8 {
        // arccosh(1 + y) = sqrt(2 y) (1 - y/12 + 3 y^2/160 - ...).
        let s = (2.0 * y).sqrt();
        return s * (1.0 - y / 12.0 + 3.0 * y * y / 160.0);
    }
    (y + (y * (y + 2.0)).sqrt()).ln_1p()
}

/// Closed-form tail decay data of a normalized potential at coupling `beta`.
#[derive(Clone, Copy, Debug)]
pub struct DecayEstimate {
    /// `F''(1) / (2 beta)`.
    pub delta: f64,
    /// Exact decay exponent `arccosh(1 + delta/2)`.
    pub lambda_exact: f64,
    /// Exact ratio limit `exp(-lambda)`, computed in the rationalized form
    /// `2 / (2 + delta + sqrt(delta (4 + delta)))` (no cancellation).
    pub kappa_inf: f64,
    /// Least-squares decay exponent fitted from a profile tail, when one was
    /// requested via [`analyze_tail`].
    pub lambda_fit: Option<f64>,
    /// Fit window actually used (stored indices, inclusive).
    pub fit_window: Option<(usize, usize)>,
    /// Largest relative deviation of the empirical ratios `w_{j+1}/w_j` from
    /// `kappa_inf` over the fit window.
    pub max_kappa_deviation: Option<f64>,
}

/// Closed-form decay rate from the linearization at the far field.
pub fn decay_rate(np: &NormalizedPotential, beta: f64) -> Result<DecayEstimate, AnalysisError> {
    assert!(beta > 0.0, "coupling beta must be positive");
    let f2 = np.f_second_at_1();
    if f2 <= 0.0 {
        return Err(AnalysisError::NoExponentialTail { f_second_at_1: f2 });
    }
    let delta = f2 / (2.0 * beta);
    let lambda_exact = arccosh_1p(0.5 * delta);
    let kappa_inf = 2.0 / (2.0 + delta + (delta * (4.0 + delta)).sqrt());
    Ok(DecayEstimate {
        delta,
        lambda_exact,
        kappa_inf,
        lambda_fit: None,
        fit_window: None,
        max_kappa_deviation: None,
    })
}

/// Round-off floor for tail gaps: below `100 eps` the stored values have
/// saturated to `1.0` and carry no tail information.
pub const TAIL_FLOOR: f64 = 100.0 * f64::EPSILON;

/// Empirical ratios `kappa_j = w_{j+1} / w_j` of the tail gaps `w_j = 1 - u_j`.
///
/// The sequence stops at the first gap at or below [`TAIL_FLOOR`]; beyond that
/// point the profile has saturated in double precision. At least two gaps must
/// survive.
pub fn kappa_sequence(p: &Profile) -> Result<Vec<f64>, AnalysisError> {
    let mut gaps = Vec::with_capacity(p.n());
    for &u in p.values() {
        let w = 1.0 - u;
        if w <= TAIL_FLOOR {
            break;
        }
        gaps.push(w);
    }
    if gaps.len() < 2 {
        return Err(AnalysisError::DegenerateTail { usable: gaps.len() });
    }
    Ok(gaps.windows(2).map(|w| w[1] / w[0]).collect())
}

/// Least-squares slope of `ln w_j` against `j` over stored indices
/// `window.0 ..= window.1`, returned as a positive decay exponent.
///
/// Gaps at or below [`TAIL_FLOOR`] inside the window are dropped; at least
/// four points must remain.
pub fn fit_tail(p: &Profile, window: (usize, usize)) -> Result<f64, AnalysisError> {
    let (start, end) = window;
    assert!(start <= end && end < p.n(), "fit window out of range");
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(end - start + 1);
    for j in start..=end {
        let w = 1.0 - p.values()[j];
        if w > TAIL_FLOOR {
            points.push((j as f64, w.ln()));
        }
    }
    let kept = points.len();
    if kept < 4 {
        return Err(AnalysisError::WindowTooSmall { start, end, kept });
    }
    let n = kept as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in &points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    Ok(-(sxy / sxx))
}

/// Default fit window: from 30% of the stored range out to the last gap
/// above `1e-12`, so the fit sees the asymptotic regime but not saturated
/// round-off.
pub fn default_fit_window(p: &Profile) -> Result<(usize, usize), AnalysisError> {
    let v = p.values();
    let mut last = None;
    for (j, &u) in v.iter().enumerate() {
        if 1.0 - u > 1e-12 {
            last = Some(j);
        } else {
            break;
        }
    }
    let end = last.ok_or(AnalysisError::DegenerateTail { usable: 0 })?;
    let start = (3 * p.n()) / 10;
    if start + 3 > end {
        return Err(AnalysisError::WindowTooSmall {
            start,
            end,
            kept: end.saturating_sub(start) + 1,
        });
    }
    Ok((start, end))
}

/// Closed-form decay data augmented with a least-squares fit of the given
/// profile's tail. `window = None` selects [`default_fit_window`].
pub fn analyze_tail(
    p: &Profile,
    np: &NormalizedPotential,
    beta: f64,
    window: Option<(usize, usize)>,
) -> Result<DecayEstimate, AnalysisError> {
    let mut estimate = decay_rate(np, beta)?;
    let window = match window {
        Some(w) => w,
        None => default_fit_window(p)?,
    };
    let lambda_fit = fit_tail(p, window)?;
    let kappas = kappa_sequence(p)?;
    let mut max_dev: f64 = 0.0;
    // Ratio k compares the gaps at stored slots k and k + 1, so it lies in
    // the window iff k >= start and k + 1 <= end.
    for (k, &kappa) in kappas.iter().enumerate() {
        if k >= window.0 && k < window.1 {
            max_dev = max_dev.max((kappa - estimate.kappa_inf).abs() / estimate.kappa_inf);
        }
    }
    estimate.lambda_fit = Some(lambda_fit);
    estimate.fit_window = Some(window);
    estimate.max_kappa_deviation = Some(max_dev);
    Ok(estimate)
}

/// A detected plateau in a profile.
#[derive(Clone, Copy, Debug)]
pub struct Plateau {
    /// Interior level the run sits near (a root of `F'` with `F < 0`).
    pub height: f64,
    /// First stored index of the run.
    pub start_j: usize,
    /// Number of consecutive sites within tolerance of the height.
    pub run_length: usize,
    /// Largest `|u_j - height|` over the run.
    pub max_abs_error: f64,
}

/// Plateau detection report.
#[derive(Clone, Debug)]
pub struct PlateauReport {
    /// Candidate heights: interior critical points of `F` with `F < 0`,
    /// mirrored to negative values (a plateau can sit on either sign).
    pub candidates: Vec<f64>,
    /// Maximal runs of at least `min_run` consecutive stored sites within
    /// `tol` of a candidate height.
    pub plateaus: Vec<Plateau>,
}

/// Scans the stored profile for runs of consecutive sites within `tol` of a
/// candidate height. Candidates are the interior critical points of `F` with
/// negative value and their mirrors `-eta`; when none exist the potential
/// satisfies the positivity hypothesis and profiles cannot plateau.
pub fn plateau_diagnostics(
    p: &Profile,
    np: &NormalizedPotential,
    tol: f64,
    min_run: usize,
) -> Result<PlateauReport, AnalysisError> {
    assert!(tol > 0.0 && min_run >= 1);
    let report = crate::potential::check_hypotheses(np, 10_000);
    if report.eta_star_roots.is_empty() {
        return Err(AnalysisError::NoPlateauCandidates);
    }
    let mut candidates = Vec::with_capacity(2 * report.eta_star_roots.len());
    for &root in &report.eta_star_roots {
        if root.abs() > 1e-12 {
            candidates.push(-root);
        }
        candidates.push(root);
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let v = p.values();
    let mut plateaus = Vec::new();
    for &height in &candidates {
        let mut j = 0;
        while j < v.len() {
            if (v[j] - height).abs() <= tol {
                let start_j = j;
                let mut max_abs_error: f64 = 0.0;
                while j < v.len() && (v[j] - height).abs() <= tol {
                    max_abs_error = max_abs_error.max((v[j] - height).abs());
                    j += 1;
                }
                if j - start_j >= min_run {
                    plateaus.push(Plateau {
                        height,
                        start_j,
                        run_length: j - start_j,
                        max_abs_error,
                    });
                }
            } else {
                j += 1;
            }
        }
    }
    plateaus.sort_by_key(|p| p.start_j);
    Ok(PlateauReport {
        candidates,
        plateaus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Setting;
    use crate::potential::{builtin, normalize};
    use approx::assert_relative_eq;

    fn cubic() -> NormalizedPotential {
        normalize(&builtin("cubic").unwrap()).unwrap()
    }

    #[test]
    fn arccosh_matches_library_form_for_moderate_arguments() {
        for &y in &[0.5, 1.0, 2.0, 10.0, 1e4] {
            let x: f64 = 1.0 + y;
            let reference = (x + (x * x - 1.0).sqrt()).ln();
            assert_relative_eq!(arccosh_1p(y), reference, max_relative = 1e-15);
        }
    }

    #[test]
    fn arccosh_is_accurate_for_tiny_arguments() {
        // arccosh(1 + y) = sqrt(2y) (1 - y/12 + ...); compare against the
        // first two series terms where the naive form has already lost
        // everything.
        for &y in &[1e-12f64, 1e-10, 1e-9] {
            let expected = (2.0 * y).sqrt() * (1.0 - y / 12.0);
            assert_relative_eq!(arccosh_1p(y), expected, max_relative = 1e-12);
        }
        assert_eq!(arccosh_1p(0.0), 0.0);
    }

    #[test]
    fn cubic_rate_at_unit_coupling_matches_closed_form() {
        // delta = 4 / 2 = 2: lambda = arccosh(2) = ln(2 + sqrt(3)) and
        // kappa = 2 - sqrt(3).
        let est = decay_rate(&cubic(), 1.0).unwrap();
        assert_relative_eq!(est.delta, 2.0, max_relative = 1e-12);
        assert_relative_eq!(
            est.lambda_exact,
            (2.0 + 3.0f64.sqrt()).ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(est.kappa_inf, 2.0 - 3.0f64.sqrt(), max_relative = 1e-14);
        // Consistency: kappa = exp(-lambda).
        assert_relative_eq!(
            est.kappa_inf,
            (-est.lambda_exact).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn rate_is_decreasing_in_beta() {
        let np = cubic();
        let mut prev = f64::INFINITY;
        for &beta in &[0.1, 0.5, 1.0, 5.0, 25.0] {
            let est = decay_rate(&np, beta).unwrap();
            assert!(est.lambda_exact < prev);
            prev = est.lambda_exact;
        }
    }

    #[test]
    fn small_and_large_delta_expansions_hold() {
        let np = cubic();
        // Small delta: lambda = sqrt(delta) (1 + O(delta)). F''(1) = 4, so
        // beta = 2e6 gives delta = 1e-6.
        let est = decay_rate(&np, 2e6).unwrap();
        assert_relative_eq!(est.lambda_exact, est.delta.sqrt(), max_relative = 1e-6);
        // Large delta: lambda = ln(delta) + 2/delta (1 + O(1/delta)).
        let est = decay_rate(&np, 2e-6).unwrap();
        assert_relative_eq!(
            est.lambda_exact,
            est.delta.ln() + 2.0 / est.delta,
            max_relative = 1e-10
        );
    }

    #[test]
    fn synthetic_geometric_tail_is_recovered_exactly() {
        // Build w_j = kappa^{j+1} (OnSite stored slots are j = 1..N).
        let kappa: f64 = 0.25;
        let n = 30;
        let values: Vec<f64> = (1..=n).map(|j| 1.0 - kappa.powi(j)).collect();
        let p = Profile::new(Setting::OnSite, values).unwrap();
        let seq = kappa_sequence(&p).unwrap();
        for &k in &seq {
            assert_relative_eq!(k, kappa, max_relative = 1e-9);
        }
        let lambda = fit_tail(&p, (2, 20)).unwrap();
        assert_relative_eq!(lambda, -kappa.ln(), max_relative = 1e-9);
    }

    #[test]
    fn kappa_sequence_stops_at_saturated_tails() {
        // Gaps: 1e-2, 1e-5, 1e-9, 0, 0: the zero-gap entries are cut, and the
        // ratios use only the three live gaps.
        let values = vec![0.99, 1.0 - 1e-5, 1.0 - 1e-9, 1.0, 1.0];
        let p = Profile::new(Setting::OnSite, values).unwrap();
        let seq = kappa_sequence(&p).unwrap();
        assert_eq!(seq.len(), 2);
        assert_relative_eq!(seq[0], 1e-3, max_relative = 1e-10);
    }

    #[test]
    fn degenerate_tails_are_reported() {
        let p = Profile::new(Setting::OnSite, vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            kappa_sequence(&p),
            Err(AnalysisError::DegenerateTail { usable: 0 })
        ));
    }

    #[test]
    fn windows_with_too_few_live_points_are_rejected() {
        let values = vec![0.5, 0.9, 1.0 - 1e-16, 1.0, 1.0, 1.0];
        let p = Profile::new(Setting::OnSite, values).unwrap();
        assert!(matches!(
            fit_tail(&p, (0, 5)),
            Err(AnalysisError::WindowTooSmall { kept: 2, .. })
        ));
    }

    #[test]
    fn flat_curvature_has_no_exponential_tail() {
        // F(eta) = (1 - eta^2)^3 vanishes to third order at 1: F''(1) = 0.
        use crate::potential::PotentialSpec;
        let spec = PotentialSpec::from_f(
            std::sync::Arc::new(|eta: f64| (1.0 - eta * eta).powi(3)),
            std::sync::Arc::new(|eta: f64| -6.0 * eta * (1.0 - eta * eta).powi(2)),
            0.0,
        );
        let np = normalize(&spec).unwrap();
        assert!(matches!(
            decay_rate(&np, 1.0),
            Err(AnalysisError::NoExponentialTail { .. })
        ));
    }

    #[test]
    fn cubic_has_no_plateau_candidates() {
        let np = cubic();
        let p = Profile::new(Setting::OnSite, vec![0.2, 0.4, 0.9]).unwrap();
        assert!(matches!(
            plateau_diagnostics(&p, &np, 1e-3, 3),
            Err(AnalysisError::NoPlateauCandidates)
        ));
    }

    #[test]
    fn doublewell_plateau_at_zero_is_detected() {
        let np = normalize(&builtin("doublewell").unwrap()).unwrap();
        // Synthetic profile hugging the eta* = 0 level for five sites before
        // rising to 1.
        let values = vec![1e-5, 2e-5, 3e-5, 4e-5, 5e-5, 0.3, 0.8, 0.99, 1.0, 1.0];
        let p = Profile::new(Setting::InterSite, values).unwrap();
        let report = plateau_diagnostics(&p, &np, 1e-3, 3).unwrap();
        assert!(report.candidates.iter().any(|c| c.abs() < 1e-9));
        let plateau = report
            .plateaus
            .iter()
            .find(|pl| pl.height.abs() < 1e-9)
            .expect("run at zero not found");
        assert_eq!(plateau.start_j, 0);
        assert_eq!(plateau.run_length, 5);
        assert!(plateau.max_abs_error <= 1e-3);
    }
}
