//! The process catalog: supported Lévy processes, their characteristic
//! exponents, and regularity/ladder-drift classification.
//!
//! The catalog is closed on purpose. Regularity flags, Spitzer indices
//! and ladder closed forms are certified per family; arbitrary
//! Lévy-Khintchine input cannot be validated against the standing
//! assumptions (integrable characteristic function, not compound
//! Poisson, not a drift-shifted subordinator).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unsupported classification: {0}")]
    UnsupportedClassification(String),
}

/// A supported Lévy process with validated parameters.
///
/// `Stable` with `alpha = 2` collapses to `Brownian` at construction
/// (skewness ignored), so downstream code never sees a redundant
/// representation of the same law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    Brownian {
        sigma: f64,
        mu: f64,
    },
    Stable {
        alpha: f64,
        beta: f64,
        scale: f64,
    },
    /// `X_t = S_t - b t` for a stable subordinator `S` with Laplace
    /// exponent `(c λ)^α`, `α ∈ (0,1)`, and drift `b > 0`.
    SubordinatorMinusDrift {
        alpha: f64,
        scale: f64,
        drift_b: f64,
    },
}

impl ProcessSpec {
    pub fn brownian(sigma: f64, mu: f64) -> Result<Self, CatalogError> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(CatalogError::InvalidParameter {
                name: "sigma",
                reason: format!("must be positive and finite, got {sigma}"),
            });
        }
        if !mu.is_finite() {
            return Err(CatalogError::InvalidParameter { name: "mu", reason: "must be finite".into() });
        }
        Ok(ProcessSpec::Brownian { sigma, mu })
    }

    pub fn stable(alpha: f64, beta: f64, scale: f64) -> Result<Self, CatalogError> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(CatalogError::InvalidParameter {
                name: "alpha",
                reason: format!("must lie in (0, 2], got {alpha}"),
            });
        }
        if !(-1.0..=1.0).contains(&beta) || !beta.is_finite() {
            return Err(CatalogError::InvalidParameter {
                name: "beta",
                reason: format!("must lie in [-1, 1], got {beta}"),
            });
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(CatalogError::InvalidParameter {
                name: "scale",
                reason: format!("must be positive and finite, got {scale}"),
            });
        }
        if alpha == 2.0 {
            // Variance of the alpha=2 stable law with scale c is 2 c².
            return Self::brownian(scale * std::f64::consts::SQRT_2, 0.0);
        }
        if alpha < 1.0 && beta.abs() == 1.0 {
            // One-sided bounded-variation corner: the process (or its
            // negative) is a subordinator, which the standing
            // assumptions exclude.
            return Err(CatalogError::InvalidParameter {
                name: "beta",
                reason: format!("|beta| = 1 with alpha = {alpha} < 1 yields a subordinator"),
            });
        }
        Ok(ProcessSpec::Stable { alpha, beta, scale })
    }

    pub fn subordinator_minus_drift(alpha: f64, scale: f64, drift_b: f64) -> Result<Self, CatalogError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CatalogError::InvalidParameter {
                name: "alpha",
                reason: format!("must lie in (0, 1), got {alpha}"),
            });
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(CatalogError::InvalidParameter {
                name: "scale",
                reason: format!("must be positive and finite, got {scale}"),
            });
        }
        if !(drift_b > 0.0) || !drift_b.is_finite() {
            // b = 0 would leave a plain subordinator.
            return Err(CatalogError::InvalidParameter {
                name: "drift_b",
                reason: format!("must be strictly positive, got {drift_b}"),
            });
        }
        Ok(ProcessSpec::SubordinatorMinusDrift { alpha, scale, drift_b })
    }

    /// Characteristic exponent `Ψ` with `E e^{iξX_t} = e^{-tΨ(ξ)}`.
    ///
    /// Total on valid specs; `Ψ(0) = 0`, `Re Ψ ≥ 0` and
    /// `Ψ(-ξ) = conj(Ψ(ξ))`.
    pub fn char_exponent(&self, xi: f64) -> Complex64 {
        match *self {
            ProcessSpec::Brownian { sigma, mu } => {
                Complex64::new(0.5 * sigma * sigma * xi * xi, -mu * xi)
            }
            ProcessSpec::Stable { alpha, beta, scale } => {
                if xi == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let a = (scale * xi.abs()).powf(alpha);
                if alpha == 1.0 {
                    // Continuous-in-ξ form matching the sampler's
                    // parameterization; certified only for beta = 0.
                    let im = beta * std::f64::consts::FRAC_2_PI * xi.signum() * xi.abs().ln();
                    Complex64::new(scale * xi.abs(), scale * xi.abs() * im)
                } else {
                    let skew = -beta * xi.signum() * (std::f64::consts::FRAC_PI_2 * alpha).tan();
                    Complex64::new(a, a * skew)
                }
            }
            ProcessSpec::SubordinatorMinusDrift { alpha, scale, drift_b } => {
                if xi == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                // Ψ(ξ) = (c(-iξ))^α + i b ξ.
                let r = (scale * xi.abs()).powf(alpha);
                let phase = -xi.signum() * std::f64::consts::FRAC_PI_2 * alpha;
                Complex64::new(r * phase.cos(), r * phase.sin() + drift_b * xi)
            }
        }
    }

    /// Lower bound `Re Ψ(ξ) ≥ A |ξ|^p` (exact equality for the whole
    /// catalog); used for truncation of Fourier inversions.
    pub(crate) fn re_exponent_power(&self) -> (f64, f64) {
        match *self {
            ProcessSpec::Brownian { sigma, .. } => (0.5 * sigma * sigma, 2.0),
            ProcessSpec::Stable { alpha, scale, .. } => (scale.powf(alpha), alpha),
            ProcessSpec::SubordinatorMinusDrift { alpha, scale, .. } => {
                (scale.powf(alpha) * (std::f64::consts::FRAC_PI_2 * alpha).cos(), alpha)
            }
        }
    }

    /// Spatial scale of the law at time `t` (used to size grids,
    /// kernel bandwidth floors and start points in σ-scaled units).
    pub fn spatial_scale(&self, t: f64) -> f64 {
        match *self {
            ProcessSpec::Brownian { sigma, .. } => sigma * t.sqrt(),
            ProcessSpec::Stable { alpha, scale, .. } => scale * t.powf(1.0 / alpha),
            ProcessSpec::SubordinatorMinusDrift { alpha, scale, .. } => scale * t.powf(1.0 / alpha),
        }
    }

    /// Spitzer positivity index `ρ = lim_t P(X_t ≥ 0)` where the limit
    /// exists and is non-degenerate for the catalog entry.
    ///
    /// `1/2` for symmetric laws, Zolotarev's
    /// `ρ = 1/2 + (π α)^{-1} arctan(β tan(π α / 2))` for strictly
    /// stable laws, absent otherwise.
    pub fn spitzer_rho(&self) -> Option<f64> {
        match *self {
            ProcessSpec::Brownian { mu, .. } => (mu == 0.0).then_some(0.5),
            ProcessSpec::Stable { alpha, beta, .. } => {
                if alpha == 1.0 && beta != 0.0 {
                    // Not strictly stable; the limit involves a
                    // logarithmic centering we do not certify.
                    None
                } else if beta == 0.0 {
                    Some(0.5)
                } else {
                    let rho = 0.5
                        + (beta * (std::f64::consts::FRAC_PI_2 * alpha).tan()).atan()
                            / (std::f64::consts::PI * alpha);
                    Some(rho)
                }
            }
            ProcessSpec::SubordinatorMinusDrift { .. } => None,
        }
    }

    /// Classify the regularity of the two half-lines and the ladder-time
    /// drifts `d`, `d*` under the κ(1,0) = 1 normalization.
    pub fn classify_regularity(&self) -> Result<RegularityProfile, CatalogError> {
        match *self {
            ProcessSpec::Brownian { .. } => Ok(RegularityProfile {
                upward_regular: true,
                downward_regular: true,
                d: 0.0,
                d_star: 0.0,
                gamma: None,
                rho: self.spitzer_rho(),
            }),
            ProcessSpec::Stable { alpha, beta, .. } => {
                if alpha == 1.0 && beta != 0.0 {
                    return Err(CatalogError::UnsupportedClassification(
                        "stable with alpha = 1 is certified only for beta = 0".into(),
                    ));
                }
                // Unbounded variation (alpha >= 1) or two-sided jumps of
                // infinite activity: both half-lines regular.
                Ok(RegularityProfile {
                    upward_regular: true,
                    downward_regular: true,
                    d: 0.0,
                    d_star: 0.0,
                    gamma: None,
                    rho: self.spitzer_rho(),
                })
            }
            ProcessSpec::SubordinatorMinusDrift { alpha, scale, drift_b } => {
                // Immediate downward drift: (-∞,0) regular. Entry into
                // (0,∞) requires a jump: upward irregular, so the
                // supremum keeps an atom at 0 and d* > 0.
                let c = crate::ladder::smd::Constants::derive(alpha, scale, drift_b);
                Ok(RegularityProfile {
                    upward_regular: false,
                    downward_regular: true,
                    d: 0.0,
                    d_star: c.d_star,
                    gamma: Some(c.gamma_star),
                    rho: None,
                })
            }
        }
    }

    /// Short lowercase tag used in CSV/JSON output.
    pub fn tag(&self) -> &'static str {
        match self {
            ProcessSpec::Brownian { .. } => "brownian",
            ProcessSpec::Stable { .. } => "stable",
            ProcessSpec::SubordinatorMinusDrift { .. } => "subordinator_minus_drift",
        }
    }
}

/// Regularity of the half-lines together with the ladder-time drifts.
///
/// Convention (fixed throughout): `d` is the drift of the upward
/// ladder-time subordinator and `d > 0` iff `(-∞,0)` is NOT regular;
/// dually `d* > 0` iff `(0,∞)` is not regular. The literature varies
/// here; this pairing is what makes `P(sup ≤ 0) = d* n(t<ζ)` come out
/// with `n` attached to the upward side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityProfile {
    pub upward_regular: bool,
    pub downward_regular: bool,
    /// Drift of the upward ladder time τ.
    pub d: f64,
    /// Drift of the downward ladder time τ*.
    pub d_star: f64,
    /// Exponential-weights rate γ of the discrete local time in the
    /// irregular case; `d* = 1/γ` for the side it belongs to.
    pub gamma: Option<f64>,
    /// Spitzer positivity index where certified.
    pub rho: Option<f64>,
}

impl RegularityProfile {
    /// Internal-consistency checks mirroring the type invariants.
    pub fn is_consistent(&self) -> bool {
        let d_ok = (self.d > 0.0) == !self.downward_regular;
        let ds_ok = (self.d_star > 0.0) == !self.upward_regular;
        let one_regular = self.upward_regular || self.downward_regular;
        let gamma_ok = match self.gamma {
            Some(g) => {
                g > 0.0
                    && (
                        // γ pairs with whichever drift is positive.
                        (self.d > 0.0 && (self.d * g - 1.0).abs() < 1e-12)
                            || (self.d_star > 0.0 && (self.d_star * g - 1.0).abs() < 1e-12)
                    )
            }
            None => true,
        };
        d_ok && ds_ok && one_regular && gamma_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cauchy() -> ProcessSpec {
        ProcessSpec::stable(1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn char_exponent_closed_values() {
        let bm = ProcessSpec::brownian(1.0, 0.0).unwrap();
        let v = bm.char_exponent(1.0);
        assert!((v.re - 0.5).abs() < 1e-15 && v.im == 0.0);
        assert_eq!(bm.char_exponent(0.0), Complex64::new(0.0, 0.0));

        let c = cauchy();
        let v = c.char_exponent(2.0);
        assert!((v.re - 2.0).abs() < 1e-15 && v.im.abs() < 1e-15);
    }

    #[test]
    fn stable_alpha2_collapses_to_brownian() {
        let s = ProcessSpec::stable(2.0, 0.7, 1.0).unwrap();
        match s {
            ProcessSpec::Brownian { sigma, mu } => {
                assert!((sigma - std::f64::consts::SQRT_2).abs() < 1e-15);
                assert_eq!(mu, 0.0);
            }
            _ => panic!("expected collapse to Brownian"),
        }
        // Ψ(ξ) = c^2 ξ^2 for the alpha = 2 stable with scale c.
        let v = s.char_exponent(3.0);
        assert!((v.re - 9.0).abs() < 1e-12);
    }

    #[test]
    fn parameter_validation() {
        assert!(ProcessSpec::brownian(0.0, 0.0).is_err());
        assert!(ProcessSpec::stable(2.5, 0.0, 1.0).is_err());
        assert!(ProcessSpec::stable(0.5, 1.0, 1.0).is_err(), "subordinator corner");
        assert!(ProcessSpec::stable(0.5, -1.0, 1.0).is_err());
        assert!(ProcessSpec::stable(1.5, 1.0, 1.0).is_ok(), "spectrally one-sided, alpha > 1");
        assert!(ProcessSpec::subordinator_minus_drift(0.5, 1.0, 0.0).is_err());
        assert!(ProcessSpec::subordinator_minus_drift(1.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn classify_catalog_entries() {
        let bm = ProcessSpec::brownian(1.0, 0.0).unwrap().classify_regularity().unwrap();
        assert!(bm.upward_regular && bm.downward_regular);
        assert_eq!(bm.d, 0.0);
        assert_eq!(bm.d_star, 0.0);
        assert_eq!(bm.rho, Some(0.5));
        assert!(bm.is_consistent());

        let st = ProcessSpec::stable(1.2, 0.0, 1.0).unwrap().classify_regularity().unwrap();
        assert!(st.upward_regular && st.downward_regular && st.rho == Some(0.5));
        assert!(st.is_consistent());

        let smd = ProcessSpec::subordinator_minus_drift(0.5, 1.0, 1.0)
            .unwrap()
            .classify_regularity()
            .unwrap();
        assert!(!smd.upward_regular && smd.downward_regular);
        assert!(smd.d_star > 0.0 && smd.d == 0.0 && smd.rho.is_none());
        // ψ(λ) = λ - √λ gives Φ*(1) = (3+√5)/2 and d* = 2/(3+√5).
        let want = (3.0 - 5.0f64.sqrt()) / 2.0;
        assert!((smd.d_star - want).abs() < 1e-12, "d* = {}", smd.d_star);
        assert!(smd.is_consistent());

        assert!(ProcessSpec::stable(1.0, 0.3, 1.0).unwrap().classify_regularity().is_err());
    }

    #[test]
    fn zolotarev_rho_values() {
        // Spectrally one-sided alpha in (1,2): rho = 1 - 1/alpha and 1/alpha.
        let pos = ProcessSpec::stable(1.5, 1.0, 1.0).unwrap().spitzer_rho().unwrap();
        assert!((pos - (1.0 - 1.0 / 1.5)).abs() < 1e-14);
        let neg = ProcessSpec::stable(1.5, -1.0, 1.0).unwrap().spitzer_rho().unwrap();
        assert!((neg - 1.0 / 1.5).abs() < 1e-14);
        let skew = ProcessSpec::stable(1.5, 0.5, 1.0).unwrap().spitzer_rho().unwrap();
        assert!((skew - 0.4016109215663778).abs() < 1e-12);
        assert!(ProcessSpec::subordinator_minus_drift(0.5, 1.0, 1.0).unwrap().spitzer_rho().is_none());
    }

    proptest! {
        #[test]
        fn hermitian_symmetry_and_nonneg_re(
            case in 0usize..3,
            p1 in 0.05f64..1.95,
            p2 in -0.99f64..0.99,
            p3 in 0.1f64..3.0,
            xi in -50.0f64..50.0,
        ) {
            let spec = match case {
                0 => ProcessSpec::brownian(p3, p2).unwrap(),
                1 => ProcessSpec::stable(p1, p2, p3).unwrap(),
                _ => ProcessSpec::subordinator_minus_drift(p1.min(0.95).max(0.05), p3, p3).unwrap(),
            };
            let a = spec.char_exponent(xi);
            let b = spec.char_exponent(-xi);
            prop_assert!((a.re - b.re).abs() <= 1e-12 * (1.0 + a.re.abs()));
            prop_assert!((a.im + b.im).abs() <= 1e-12 * (1.0 + a.im.abs()));
            prop_assert!(a.re >= 0.0);
            prop_assert!(spec.char_exponent(0.0).norm() == 0.0);
        }
    }
}
