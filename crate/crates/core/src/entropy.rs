//! Closed-form numerical primitives: entropies, opposing forces, the
//! sigmoid, golden-ratio fixed points, logarithmic spirals, and the
//! Lorentz-factor demo.
//!
//! All logarithms are natural (results in nats). Divergent cases
//! (performance at exactly 0 or 1 where the formula blows up) return
//! typed errors instead of non-finite numbers so downstream arithmetic
//! stays total.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },
    #[error("divergent at performance {perf}: {what}")]
    Divergent { perf: f64, what: &'static str },
    #[error("divergent sample at index {index} (value {value})")]
    DivergentSample { index: usize, value: f64 },
    #[error("fixed-point solver did not converge: last residual {residual:e}")]
    NoConvergence { residual: f64 },
}

pub type Result<T> = std::result::Result<T, EntropyError>;

/// Default residual tolerance for the general-entropy fixed point.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration budget for the fixed-point solver.
pub const DEFAULT_MAX_ITER: usize = 200;

/// Logarithmic spiral parameters for r = a * e^(b * theta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralParams {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub theta: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
}

fn check_unit(value: f64, domain: &'static str) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(EntropyError::Domain { value, domain });
    }
    Ok(())
}

/// One Shannon summand, -p ln p, with 0 ln 0 := 0 by continuity.
fn xlnx(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        -p * p.ln()
    }
}

/// Shannon entropy of a set of outcome probabilities, in nats.
///
/// Does not require the probabilities to sum to one.
pub fn shannon_entropy(probs: &[f64]) -> Result<f64> {
    for &p in probs {
        check_unit(p, "[0, 1]")?;
    }
    Ok(probs.iter().map(|&p| xlnx(p)).sum())
}

/// Solves the general-entropy summand fixed point K = -p(K) ln p(K)
/// for a caller-supplied performance function.
///
/// Damped fixed-point iteration from `guess`, with a bisection
/// fallback on [0, upper] when the iteration stalls. Returns the
/// root the damped iteration is attracted to (0 for collapsing
/// performance functions, the smallest positive sign change
/// otherwise).
pub fn general_entropy_summand<F>(
    perf_fn: F,
    guess: f64,
    upper: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    assert!(tol > 0.0, "tolerance must be positive");
    assert!(upper > 0.0, "bracket upper bound must be positive");

    let target = |k: f64| xlnx(perf_fn(k));
    let residual = |k: f64| k - target(k);

    // Damped iteration: K <- K + 0.5 * (f(K) - K).
    let mut k = guess.clamp(0.0, upper);
    for _ in 0..max_iter {
        let r = residual(k);
        if r.abs() <= tol {
            return Ok(k.max(0.0));
        }
        k = (k - 0.5 * r).clamp(0.0, upper);
    }
    let last = residual(k);
    if last.abs() <= tol {
        return Ok(k.max(0.0));
    }

    // Bisection fallback on the first strict sign change of the grid.
    let n = 512;
    let mut prev_k = 0.0;
    let mut prev_r = residual(0.0);
    if prev_r.abs() <= tol {
        return Ok(0.0);
    }
    for i in 1..=n {
        let ki = upper * i as f64 / n as f64;
        let ri = residual(ki);
        if ri.abs() <= tol {
            return Ok(ki);
        }
        if prev_r.signum() != ri.signum() {
            let (mut lo, mut hi) = (prev_k, ki);
            for _ in 0..max_iter {
                let mid = 0.5 * (lo + hi);
                let rm = residual(mid);
                if rm.abs() <= tol {
                    return Ok(mid);
                }
                if rm.signum() == residual(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mid = 0.5 * (lo + hi);
            if residual(mid).abs() <= tol {
                return Ok(mid);
            }
            return Err(EntropyError::NoConvergence {
                residual: residual(mid),
            });
        }
        prev_k = ki;
        prev_r = ri;
    }
    Err(EntropyError::NoConvergence { residual: last })
}

/// Force A, the confidence in a decision: -E ln(1 - p).
pub fn force_a(perf: f64, e: f64) -> Result<f64> {
    check_unit(perf, "[0, 1)")?;
    check_expectation(e)?;
    if perf == 1.0 {
        return Err(EntropyError::Divergent {
            perf,
            what: "A-force is infinite at perfect performance",
        });
    }
    Ok(-e * (1.0 - perf).ln())
}

/// Force B, the counter-confidence: -E ln(p).
pub fn force_b(perf: f64, e: f64) -> Result<f64> {
    check_unit(perf, "(0, 1]")?;
    check_expectation(e)?;
    if perf == 0.0 {
        return Err(EntropyError::Divergent {
            perf,
            what: "B-force is infinite at zero performance",
        });
    }
    Ok(-e * perf.ln())
}

/// Net force, Force A minus Force B: -E ln((1 - p) / p).
pub fn net_force(perf: f64, e: f64) -> Result<f64> {
    check_unit(perf, "(0, 1)")?;
    check_expectation(e)?;
    if perf == 0.0 || perf == 1.0 {
        return Err(EntropyError::Divergent {
            perf,
            what: "net force is infinite when one force dominates completely",
        });
    }
    Ok(-e * ((1.0 - perf) / perf).ln())
}

fn check_expectation(e: f64) -> Result<()> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(EntropyError::Domain {
            value: e,
            domain: "expectation > 0",
        });
    }
    Ok(())
}

/// The sigmoid 1 / (1 + e^(-K/E)); exact inverse of `net_force` for fixed E.
pub fn sigmoid(k: f64, e: f64) -> Result<f64> {
    check_expectation(e)?;
    if !k.is_finite() {
        return Err(EntropyError::Domain {
            value: k,
            domain: "finite confidence",
        });
    }
    Ok(1.0 / (1.0 + (-k / e).exp()))
}

/// Net force with the expectation tied to the performance itself:
/// -p ln((1 - p) / p).
pub fn net_force_self(perf: f64) -> Result<f64> {
    check_unit(perf, "(0, 1)")?;
    if perf == 0.0 || perf == 1.0 {
        return Err(EntropyError::Divergent {
            perf,
            what: "self-weighted net force diverges at the boundary",
        });
    }
    Ok(-perf * ((1.0 - perf) / perf).ln())
}

/// Mirrored variant of the self-weighted net force:
/// -(1 - p) ln((1 - p) / p). Satisfies m(p) = -net_force_self(1 - p).
pub fn mirrored_net_force_self(perf: f64) -> Result<f64> {
    check_unit(perf, "(0, 1)")?;
    if perf == 0.0 || perf == 1.0 {
        return Err(EntropyError::Divergent {
            perf,
            what: "mirrored net force diverges at the boundary",
        });
    }
    Ok(-(1.0 - perf) * ((1.0 - perf) / perf).ln())
}

/// Roots of p^2 + p - 1 = 0: ((sqrt(5)-1)/2, (-1-sqrt(5))/2).
///
/// The positive root is 1/phi, the reciprocal golden ratio.
pub fn golden_ratio_roots() -> (f64, f64) {
    let s = 5.0_f64.sqrt();
    ((s - 1.0) / 2.0, (-1.0 - s) / 2.0)
}

/// Spiral parameters a = 1 - p and b = -1/p for the net-force spiral.
///
/// Accepts values outside (0, 1) so the golden-ratio algebraic check
/// (p = phi) can be expressed; only p = 0 is rejected.
pub fn spiral_params(perf: f64) -> Result<SpiralParams> {
    if perf == 0.0 || !perf.is_finite() {
        return Err(EntropyError::Divergent {
            perf,
            what: "spiral wrapping parameter b = -1/p diverges",
        });
    }
    Ok(SpiralParams {
        a: 1.0 - perf,
        b: -1.0 / perf,
    })
}

/// Samples the net-force spiral: theta = -p ln(p / (1 - p)),
/// r = (1 - p) e^(-theta / p), one point per performance sample.
pub fn spiral_curve(perf_samples: &[f64]) -> Result<Vec<PolarPoint>> {
    perf_samples
        .iter()
        .enumerate()
        .map(|(index, &p)| {
            if !(p > 0.0 && p < 1.0) {
                return Err(EntropyError::DivergentSample { index, value: p });
            }
            let theta = -p * (p / (1.0 - p)).ln();
            let r = (1.0 - p) * (-theta / p).exp();
            Ok(PolarPoint { theta, r })
        })
        .collect()
}

/// The spiral in Cartesian coordinates plus its reflection through the
/// origin; the two branches of the Yin/Yang figure.
pub fn mirrored_spirals(
    perf_samples: &[f64],
) -> Result<(Vec<CartesianPoint>, Vec<CartesianPoint>)> {
    let polar = spiral_curve(perf_samples)?;
    let branch: Vec<CartesianPoint> = polar
        .iter()
        .map(|p| CartesianPoint {
            x: p.r * p.theta.cos(),
            y: p.r * p.theta.sin(),
        })
        .collect();
    let mirror = branch
        .iter()
        .map(|c| CartesianPoint { x: -c.x, y: -c.y })
        .collect();
    Ok((branch, mirror))
}

/// Inverse Lorentz factor sqrt(1 - (v/c)^2) for v/c in [0, 1).
pub fn lorentz_factor(v_over_c: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&v_over_c) {
        return Err(EntropyError::Domain {
            value: v_over_c,
            domain: "[0, 1)",
        });
    }
    Ok((1.0 - v_over_c * v_over_c).sqrt())
}

/// Perception-corrected performance 1 / (1 + p_observed).
pub fn perception_correction(observed_perf: f64) -> Result<f64> {
    check_unit(observed_perf, "[0, 1]")?;
    Ok(1.0 / (1.0 + observed_perf))
}

/// Observed performance sqrt(p) for a relative speed p.
pub fn observed_performance(relative_speed: f64) -> Result<f64> {
    check_unit(relative_speed, "[0, 1]")?;
    Ok(relative_speed.sqrt())
}

/// Exponential density lambda * e^(-lambda x) for x >= 0.
pub fn exp_density(x: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(EntropyError::Domain {
            value: lambda,
            domain: "lambda > 0",
        });
    }
    Ok(if x < 0.0 { 0.0 } else { lambda * (-lambda * x).exp() })
}

/// Exponential distribution 1 - e^(-lambda k) for k >= 0.
pub fn exp_distribution(k: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(EntropyError::Domain {
            value: lambda,
            domain: "lambda > 0",
        });
    }
    Ok(if k < 0.0 { 0.0 } else { 1.0 - (-lambda * k).exp() })
}
