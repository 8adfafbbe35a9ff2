//! Ladder exponents κ, κ*, renewal functions h, h*, the potential
//! density h', and excursion lifetime tails n(t<ζ), n*(t<ζ).
//!
//! All constants are pinned by normalizing the ladder-time exponents to
//! `κ(1,0) = κ*(1,0) = 1`, which forces the Wiener-Hopf product
//! `κ(a,0) κ*(a,0) = a`. Closed forms:
//!
//! * Brownian(σ, μ): both ladder heights are drifts. With
//!   `Φ(a) = (-μ + sqrt(μ² + 2σ²a))/σ²` (first-passage exponent upward)
//!   and its dual `Φ̂`, `κ(a,0) = Φ(a)/Φ(1)` and `h(x) = Φ(1) x`.
//!   Note the frequently quoted `H_t = Φ(1) t` holds for the local time
//!   `L = X̄`; the normalization above instead gives `H_t = t / Φ(1)`,
//!   i.e. `h(x) = Φ(1) x` (for σ=1, μ=0: `h(x) = √2 x`).
//! * Strictly stable with positivity index ρ: `κ(a,0) = a^ρ`,
//!   `n(t<ζ) = t^{-ρ}/Γ(1-ρ)`, `h(x) = C_h x^{αρ}`. The constant `C_h`
//!   has no elementary form; it is calibrated once per spec by Monte
//!   Carlo (see [`crate::session`]) and carried here with its relative
//!   error. An independent quadrature route to the same constant lives
//!   in the test suite.
//! * Subordinator-minus-drift `X = S - bt`: the downward ladder height
//!   creeps, so `h*` is the renewal function of a killed pure drift,
//!   with every constant derived from the root `Φ*(a)` of
//!   `bλ - (cλ)^α = a`. The upward tail `n(t<ζ)` has no closed form and
//!   is attached as a Monte Carlo table by the session.

use crate::process::ProcessSpec;
use crate::special::gamma;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LadderError {
    #[error("{quantity} unavailable for this spec: {reason}")]
    Unavailable { quantity: &'static str, reason: String },
    #[error("stable ladder constants require Monte Carlo calibration")]
    CalibrationRequired,
}

/// Which ladder the quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Upward ladder: κ, h, n(t<ζ).
    Upper,
    /// Downward ladder: κ*, h*, n*(t<ζ).
    Lower,
}

/// How a numeric constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    DerivedConstant,
    McEstimated,
}

/// Calibrated height constants for a stable spec:
/// `h(x) = c_h x^{αρ}`, `h*(x) = c_h_star x^{α(1-ρ)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableCalibration {
    pub c_h: f64,
    pub c_h_star: f64,
    /// Relative 1σ uncertainty attached to each constant.
    pub rel_err: f64,
}

/// Monotone curve tabulated by Monte Carlo, interpolated in log-log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McCurve {
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl McCurve {
    /// Log-log interpolation; clamps to the tabulated range.
    pub fn eval(&self, x: f64) -> f64 {
        let xs = &self.abscissae;
        let n = xs.len();
        assert!(n >= 2, "McCurve needs at least two points");
        if x <= xs[0] {
            return self.values[0];
        }
        if x >= xs[n - 1] {
            return self.values[n - 1];
        }
        let idx = xs.partition_point(|&a| a < x).max(1);
        let (x0, x1) = (xs[idx - 1], xs[idx]);
        let (y0, y1) = (self.values[idx - 1], self.values[idx]);
        if y0 <= 0.0 || y1 <= 0.0 {
            let w = (x - x0) / (x1 - x0);
            return y0 + w * (y1 - y0);
        }
        let w = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
        (y0.ln() + w * (y1.ln() - y0.ln())).exp()
    }

    pub fn stderr_at(&self, x: f64) -> f64 {
        let xs = &self.abscissae;
        let idx = xs.partition_point(|&a| a < x).min(xs.len() - 1);
        self.stderr[idx]
    }
}

/// Structural constants of the subordinator-minus-drift family.
pub mod smd {
    use serde::{Deserialize, Serialize};

    /// Everything derivable by root-solving `ψ(λ) = bλ - (cλ)^α`.
    #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
    pub struct Constants {
        pub alpha: f64,
        pub scale: f64,
        pub drift_b: f64,
        /// `Φ*(1)`: the positive root of `ψ(λ) = 1`.
        pub phi_star_1: f64,
        /// `Φ*(0)`: the positive root of `ψ(λ) = 0` (killing of the
        /// natural downward ladder).
        pub lambda_0: f64,
        /// Drift of the normalized downward ladder height, `1/Φ*(1)`.
        pub c_star: f64,
        /// Killing rate of the normalized downward ladder,
        /// `Φ*(0)/Φ*(1)`.
        pub a_star: f64,
        /// Drift of the downward ladder time, `1/(b Φ*(1))`.
        pub d_star: f64,
        /// Rate of the exponential local-time weights at the discrete
        /// maxima set; `γ* = 1/d*`.
        pub gamma_star: f64,
    }

    impl Constants {
        pub fn derive(alpha: f64, scale: f64, drift_b: f64) -> Self {
            let psi = |lam: f64| drift_b * lam - (scale * lam).powf(alpha);
            // ψ is convex on (0,∞) with ψ(0) = 0; the strictly positive
            // root of ψ = a is unique and lies right of the minimum.
            let lam_min = (alpha * scale.powf(alpha) / drift_b).powf(1.0 / (1.0 - alpha));
            let phi_star = |a: f64| -> f64 {
                let mut lo = lam_min;
                let mut hi = lam_min.max(1.0);
                while psi(hi) < a {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if psi(mid) < a {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            };
            let phi_star_1 = phi_star(1.0);
            let lambda_0 = phi_star(0.0);
            let d_star = 1.0 / (drift_b * phi_star_1);
            Constants {
                alpha,
                scale,
                drift_b,
                phi_star_1,
                lambda_0,
                c_star: 1.0 / phi_star_1,
                a_star: lambda_0 / phi_star_1,
                d_star,
                gamma_star: 1.0 / d_star,
            }
        }

        /// `Φ*(a)`: positive root of `bλ - (cλ)^α = a`.
        pub fn phi_star(&self, a: f64) -> f64 {
            let psi = |lam: f64| self.drift_b * lam - (self.scale * lam).powf(self.alpha);
            let lam_min =
                (self.alpha * self.scale.powf(self.alpha) / self.drift_b).powf(1.0 / (1.0 - self.alpha));
            let mut lo = lam_min;
            let mut hi = lam_min.max((a + 1.0) / self.drift_b * 2.0);
            while psi(hi) < a {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if psi(mid) < a {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            0.5 * (lo + hi)
        }

        /// Normalized downward ladder-time exponent `κ*(a,0)`.
        pub fn kappa_star(&self, a: f64) -> f64 {
            self.phi_star(a) / self.phi_star_1
        }

        /// Renewal function of the killed pure-drift downward ladder:
        /// `h*(x) = (Φ*(1)/Φ*(0)) (1 - e^{-Φ*(0) x})`.
        pub fn h_star(&self, x: f64) -> f64 {
            self.phi_star_1 / self.lambda_0 * (-(-self.lambda_0 * x).exp_m1())
        }

        pub fn h_star_prime(&self, x: f64) -> f64 {
            self.phi_star_1 * (-self.lambda_0 * x).exp()
        }
    }
}

/// Gaver-Stehfest inversion of a Laplace transform sampled on the real
/// axis. Good for 6-8 digits on smooth completely monotone inputs,
/// which is ample for Monte Carlo cross-checks.
pub fn gaver_stehfest<F: Fn(f64) -> f64>(transform: &F, t: f64, n: usize) -> f64 {
    assert!(n % 2 == 0 && n >= 2);
    let ln2t = std::f64::consts::LN_2 / t;
    let mut acc = 0.0;
    for k in 1..=n {
        acc += stehfest_coeff(k, n) * transform(k as f64 * ln2t);
    }
    acc * ln2t
}

fn stehfest_coeff(k: usize, n: usize) -> f64 {
    let m = n / 2;
    let mut sum = 0.0f64;
    let j_lo = k.div_ceil(2);
    let j_hi = k.min(m);
    for j in j_lo..=j_hi {
        let num = (j as f64).powi(m as i32) * factorial(2 * j);
        let den = factorial(m - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k);
        sum += num / den;
    }
    if (k + m) % 2 == 0 {
        sum
    } else {
        -sum
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product::<f64>().max(1.0)
}

#[derive(Debug, Clone)]
enum Form {
    Brownian {
        /// Φ(1) of the upward first-passage exponent.
        phi1: f64,
        /// Dual Φ̂(1).
        phi1_dual: f64,
        sigma: f64,
        mu: f64,
    },
    Stable {
        alpha: f64,
        rho: f64,
        cal: StableCalibration,
    },
    Smd(smd::Constants),
}

/// Ladder quantities of one process under the κ(1,0)=1 normalization.
///
/// Immutable after construction; cheap to clone and safe to share.
#[derive(Debug, Clone)]
pub struct LadderFunctions {
    spec: ProcessSpec,
    form: Form,
    /// Upward excursion-lifetime tail for the subordinator-minus-drift
    /// family, attached by the session (Monte Carlo).
    smd_n_tail: Option<McCurve>,
    /// Upward renewal function for the same family (Monte Carlo).
    smd_h: Option<McCurve>,
}

impl LadderFunctions {
    /// Build the family-specific form. Stable specs (other than the
    /// α = 2 collapse) need calibrated height constants; use
    /// [`LadderFunctions::with_calibration`] or go through the session,
    /// which calibrates and caches.
    pub fn new(spec: ProcessSpec) -> Result<Self, LadderError> {
        match spec {
            ProcessSpec::Brownian { .. } => Self::build(spec, None),
            ProcessSpec::SubordinatorMinusDrift { .. } => Self::build(spec, None),
            ProcessSpec::Stable { .. } => Err(LadderError::CalibrationRequired),
        }
    }

    pub fn with_calibration(spec: ProcessSpec, cal: StableCalibration) -> Result<Self, LadderError> {
        Self::build(spec, Some(cal))
    }

    fn build(spec: ProcessSpec, cal: Option<StableCalibration>) -> Result<Self, LadderError> {
        let form = match spec {
            ProcessSpec::Brownian { sigma, mu } => {
                let s2 = sigma * sigma;
                let phi1 = (-mu + (mu * mu + 2.0 * s2).sqrt()) / s2;
                let phi1_dual = (mu + (mu * mu + 2.0 * s2).sqrt()) / s2;
                Form::Brownian { phi1, phi1_dual, sigma, mu }
            }
            ProcessSpec::Stable { alpha, .. } => {
                let rho = spec.spitzer_rho().ok_or_else(|| LadderError::Unavailable {
                    quantity: "ladder functions",
                    reason: "no certified positivity index for this stable spec".into(),
                })?;
                Form::Stable { alpha, rho, cal: cal.ok_or(LadderError::CalibrationRequired)? }
            }
            ProcessSpec::SubordinatorMinusDrift { alpha, scale, drift_b } => {
                Form::Smd(smd::Constants::derive(alpha, scale, drift_b))
            }
        };
        Ok(LadderFunctions { spec, form, smd_n_tail: None, smd_h: None })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn rho(&self) -> Option<f64> {
        self.spec.spitzer_rho()
    }

    pub fn smd_constants(&self) -> Option<&smd::Constants> {
        match &self.form {
            Form::Smd(c) => Some(c),
            _ => None,
        }
    }

    pub fn calibration(&self) -> Option<StableCalibration> {
        match &self.form {
            Form::Stable { cal, .. } => Some(*cal),
            _ => None,
        }
    }

    /// Attach the Monte Carlo upward tail `n(t<ζ)` (subordinator-minus-
    /// drift only, where no closed form exists).
    pub fn attach_smd_n_tail(&mut self, curve: McCurve) {
        self.smd_n_tail = Some(curve);
    }

    /// Attach the Monte Carlo upward renewal function (same family).
    pub fn attach_smd_h(&mut self, curve: McCurve) {
        self.smd_h = Some(curve);
    }

    /// Upward renewal function h.
    pub fn h(&self, x: f64) -> Result<f64, LadderError> {
        match &self.form {
            Form::Brownian { phi1, .. } => Ok(phi1 * x),
            Form::Stable { alpha, rho, cal } => Ok(cal.c_h * x.powf(alpha * rho)),
            Form::Smd(_) => self
                .smd_h
                .as_ref()
                .map(|c| c.eval(x))
                .ok_or(LadderError::Unavailable {
                    quantity: "h",
                    reason: "no closed form; attach a Monte Carlo table via the session".into(),
                }),
        }
    }

    /// Potential density h' of the upward ladder height.
    pub fn h_prime(&self, x: f64) -> Result<f64, LadderError> {
        match &self.form {
            Form::Brownian { phi1, .. } => Ok(*phi1),
            Form::Stable { alpha, rho, cal } => {
                let p = alpha * rho;
                Ok(cal.c_h * p * x.powf(p - 1.0))
            }
            Form::Smd(_) => Err(LadderError::Unavailable {
                quantity: "h'",
                reason: "upward ladder height has no certified density for this family".into(),
            }),
        }
    }

    /// Downward renewal function h*.
    pub fn h_star(&self, x: f64) -> Result<f64, LadderError> {
        match &self.form {
            Form::Brownian { phi1_dual, .. } => Ok(phi1_dual * x),
            Form::Stable { alpha, rho, cal } => Ok(cal.c_h_star * x.powf(alpha * (1.0 - rho))),
            Form::Smd(c) => Ok(c.h_star(x)),
        }
    }

    pub fn h_star_prime(&self, x: f64) -> Result<f64, LadderError> {
        match &self.form {
            Form::Brownian { phi1_dual, .. } => Ok(*phi1_dual),
            Form::Stable { alpha, rho, cal } => {
                let p = alpha * (1.0 - rho);
                Ok(cal.c_h_star * p * x.powf(p - 1.0))
            }
            Form::Smd(c) => Ok(c.h_star_prime(x)),
        }
    }

    /// Ladder-time exponent κ(a,0) (Upper) or κ*(a,0) (Lower).
    pub fn kappa_time(&self, a: f64, side: Side) -> Result<f64, LadderError> {
        match (&self.form, side) {
            (Form::Brownian { phi1, sigma, mu, .. }, Side::Upper) => {
                let s2 = sigma * sigma;
                Ok(((-mu + (mu * mu + 2.0 * s2 * a).sqrt()) / s2) / phi1)
            }
            (Form::Brownian { phi1_dual, sigma, mu, .. }, Side::Lower) => {
                let s2 = sigma * sigma;
                Ok(((mu + (mu * mu + 2.0 * s2 * a).sqrt()) / s2) / phi1_dual)
            }
            (Form::Stable { rho, .. }, Side::Upper) => Ok(a.powf(*rho)),
            (Form::Stable { rho, .. }, Side::Lower) => Ok(a.powf(1.0 - rho)),
            (Form::Smd(c), Side::Lower) => Ok(c.kappa_star(a)),
            (Form::Smd(c), Side::Upper) => {
                // Via the Wiener-Hopf product; no independent closed form.
                Ok(a / c.kappa_star(a))
            }
        }
    }

    /// Excursion lifetime tail `n(t<ζ)` (Upper) / `n*(t<ζ)` (Lower).
    pub fn excursion_tail(&self, t: f64, side: Side) -> Result<f64, LadderError> {
        assert!(t > 0.0);
        match (&self.form, side) {
            (Form::Brownian { mu, .. }, _) if *mu == 0.0 => Ok(1.0 / (std::f64::consts::PI * t).sqrt()),
            (Form::Brownian { .. }, _) => Err(LadderError::Unavailable {
                quantity: "excursion tail",
                reason: "no certified positivity index for drifted Brownian motion".into(),
            }),
            (Form::Stable { rho, .. }, Side::Upper) => Ok(t.powf(-rho) / gamma(1.0 - rho)),
            (Form::Stable { rho, .. }, Side::Lower) => Ok(t.powf(rho - 1.0) / gamma(*rho)),
            (Form::Smd(_), Side::Upper) => self
                .smd_n_tail
                .as_ref()
                .map(|c| c.eval(t))
                .ok_or(LadderError::Unavailable {
                    quantity: "n(t<zeta)",
                    reason: "no closed form; attach a Monte Carlo table via the session".into(),
                }),
            (Form::Smd(c), Side::Lower) => {
                // Invert (κ*(a,0) - d* a)/a on the real axis.
                let f = |a: f64| (c.kappa_star(a) - c.d_star * a) / a;
                Ok(gaver_stehfest(&f, t, 14))
            }
        }
    }

    /// Provenance of the height constants.
    pub fn height_provenance(&self) -> Provenance {
        match &self.form {
            Form::Brownian { .. } => Provenance::ClosedForm,
            Form::Stable { .. } => Provenance::McEstimated,
            Form::Smd(_) => Provenance::DerivedConstant,
        }
    }

    /// Relative 1σ uncertainty of h / h' (zero for certified forms).
    pub fn height_rel_err(&self) -> f64 {
        match &self.form {
            Form::Stable { cal, .. } => cal.rel_err,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm() -> LadderFunctions {
        LadderFunctions::new(ProcessSpec::brownian(1.0, 0.0).unwrap()).unwrap()
    }

    fn cauchy_cal() -> LadderFunctions {
        // Exact constant 2/√π from the quadrature route; unit tests can
        // use it directly, the session recomputes it by Monte Carlo.
        let c = 2.0 / std::f64::consts::PI.sqrt();
        LadderFunctions::with_calibration(
            ProcessSpec::stable(1.0, 0.0, 1.0).unwrap(),
            StableCalibration { c_h: c, c_h_star: c, rel_err: 0.0 },
        )
        .unwrap()
    }

    #[test]
    fn brownian_closed_forms() {
        let l = bm();
        assert!((l.h(1.0).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-14);
        assert!((l.h_prime(0.3).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-14);
        assert!((l.h(0.0).unwrap()).abs() == 0.0);
        // κ(a,0) = √a, n(t<ζ) = 1/√(πt).
        assert!((l.kappa_time(4.0, Side::Upper).unwrap() - 2.0).abs() < 1e-14);
        assert!((l.kappa_time(1.0, Side::Upper).unwrap() - 1.0).abs() < 1e-14);
        let n1 = l.excursion_tail(1.0, Side::Upper).unwrap();
        assert!((n1 - 0.5641895835477563).abs() < 1e-12);
        let n4 = l.excursion_tail(4.0, Side::Upper).unwrap();
        assert!((n4 - 0.28209479177387814).abs() < 1e-12);
        assert!(l.excursion_tail(2.0, Side::Upper).unwrap() < n1);
    }

    #[test]
    fn drifted_brownian_product_is_exact() {
        let l = LadderFunctions::new(ProcessSpec::brownian(0.8, 0.4).unwrap()).unwrap();
        for a in [0.5, 1.0, 2.0, 7.3] {
            let p = l.kappa_time(a, Side::Upper).unwrap() * l.kappa_time(a, Side::Lower).unwrap();
            assert!((p - a).abs() < 1e-12, "product {p} != {a}");
        }
        assert!(l.excursion_tail(1.0, Side::Upper).is_err());
        // Upward passage is easier with positive drift: h grows slower.
        assert!(l.h(1.0).unwrap() < l.h_star(1.0).unwrap());
    }

    #[test]
    fn stable_ladder_shapes() {
        let l = cauchy_cal();
        // h(x) ∝ x^{1/2}; κκ* = a; n tails with ρ = 1/2.
        let ratio = l.h(4.0).unwrap() / l.h(1.0).unwrap();
        assert!((ratio - 2.0).abs() < 1e-12);
        for a in [0.5, 1.0, 2.0] {
            let p = l.kappa_time(a, Side::Upper).unwrap() * l.kappa_time(a, Side::Lower).unwrap();
            assert!((p - a).abs() < 1e-13);
        }
        let n = l.excursion_tail(1.0, Side::Upper).unwrap();
        assert!((n - 0.5641895835477563).abs() < 1e-12);
        // h/h' = x/(αρ) -> 0 as x -> 0, and x exactly for Brownian.
        let r_small = l.h(1e-3).unwrap() / l.h_prime(1e-3).unwrap();
        let r_big = l.h(1e-1).unwrap() / l.h_prime(1e-1).unwrap();
        assert!(r_small < r_big);
        let b = bm();
        let rb = b.h(1e-3).unwrap() / b.h_prime(1e-3).unwrap();
        assert!((rb - 1e-3).abs() < 1e-16 && rb < 0.01);
    }

    #[test]
    fn regular_variation_slope_of_n_tail() {
        let l = cauchy_cal();
        // log n(t<ζ) is affine in log t with slope -ρ.
        let ts = [1.0f64, 2.0, 4.0, 8.0, 16.0];
        let pts: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| (t.ln(), l.excursion_tail(t, Side::Upper).unwrap().ln()))
            .collect();
        let slope = fit_slope(&pts);
        assert!((slope + 0.5).abs() < 1e-6, "slope {slope}");
    }

    fn fit_slope(pts: &[(f64, f64)]) -> f64 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn subadditivity_of_h() {
        let l = cauchy_cal();
        let grid = [0.1, 0.3, 0.7, 1.3, 2.4];
        for &x in &grid {
            for &y in &grid {
                let lhs = l.h(x + y).unwrap();
                let rhs = l.h(x).unwrap() + l.h(y).unwrap();
                assert!(lhs <= rhs + 1e-12);
            }
        }
    }

    #[test]
    fn smd_constants_golden_ratio_case() {
        // ψ(λ) = λ - √λ: Φ*(1) = (3+√5)/2, Φ*(0) = 1.
        let c = smd::Constants::derive(0.5, 1.0, 1.0);
        let want_phi1 = (3.0 + 5.0f64.sqrt()) / 2.0;
        assert!((c.phi_star_1 - want_phi1).abs() < 1e-12);
        assert!((c.lambda_0 - 1.0).abs() < 1e-12);
        assert!((c.d_star - 1.0 / want_phi1).abs() < 1e-12);
        assert!((c.d_star * c.gamma_star - 1.0).abs() < 1e-14);
        // h*(x) ~ x/c* near zero, saturates at Φ*(1)/Φ*(0).
        let x = 1e-6;
        assert!((c.h_star(x) / (x / c.c_star) - 1.0).abs() < 1e-5);
        assert!(c.h_star(1e3) < c.phi_star_1 / c.lambda_0 + 1e-12);
        // κ*(1,0) = 1 normalization.
        assert!((c.kappa_star(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaver_stehfest_recovers_power_tail() {
        // F(a) = a^{-1/2}  <->  f(t) = t^{-1/2}/Γ(1/2).
        for &t in &[0.25, 1.0, 5.0] {
            let got = gaver_stehfest(&|a: f64| a.powf(-0.5), t, 14);
            let want = t.powf(-0.5) / gamma(0.5);
            assert!(
                ((got - want) / want).abs() < 1e-6,
                "t={t}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn smd_n_star_tail_via_inversion() {
        let spec = ProcessSpec::subordinator_minus_drift(0.5, 1.0, 1.0).unwrap();
        let l = LadderFunctions::new(spec).unwrap();
        let c = *l.smd_constants().unwrap();
        // Decreasing, positive, approaching the killing mass a* at ∞.
        let mut prev = f64::INFINITY;
        for &t in &[0.1, 0.5, 1.0, 5.0, 50.0] {
            let v = l.excursion_tail(t, Side::Lower).unwrap();
            assert!(v > 0.0 && v < prev, "tail not decreasing at t={t}");
            prev = v;
        }
        let far = l.excursion_tail(1e4, Side::Lower).unwrap();
        assert!(
            ((far - c.a_star) / c.a_star).abs() < 1e-3,
            "far tail {far} vs killing mass {}",
            c.a_star
        );
        // Upward side has no closed form until a table is attached.
        assert!(l.excursion_tail(1.0, Side::Upper).is_err());
    }
}
