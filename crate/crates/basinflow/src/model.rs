//! Scalar ingredients of the problem: the reaction nonlinearity `f` with its
//! potential `F(t) = ∫₀ᵗ f`, the nonlocal density `g`, and the saturating
//! diffusion coefficient `a(x, z) = 1 + B(x) h(z)` with `h ≡ 0` for `|z| ≥ K`.
//!
//! The correction term used by the flow is
//!
//! ```text
//! Ψ(x, t, z) = (1/a(x, z) − 1) · f(t),
//! ```
//!
//! which is identically (bitwise) zero whenever `|z| ≥ K`, because `a` is
//! exactly `1.0` there by construction.
//!
//! Evaluations that can overflow `f64` (exponential kinds, large powers)
//! saturate at `e^700` and raise a flag instead of producing infinities; the
//! flag is propagated by the flow and consumed by the classifier as blow-up
//! evidence.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::grid::RectDomain;

/// Natural-log-scale cap for exponent evaluations. `e^700 ≈ 1.01e304` stays
/// well inside `f64` range even after a few additions and stencil scalings.
pub const EXP_CLAMP: f64 = 700.0;

/// Scalar function of one variable, shared and thread-safe.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Function of relative grid coordinates `(ξ, η) ∈ (0,1)²`.
pub type SpatialFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Function of `(ξ, η, z)` used by free-form coefficient models.
pub type CoeffFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter `{name}` = {value} out of range: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("adaptive quadrature did not reach tolerance {requested:.3e} (achieved {achieved:.3e})")]
    QuadratureNonConvergence { requested: f64, achieved: f64 },
    #[error("quadrature result is not finite; integrand overflows on the requested interval")]
    QuadratureOverflow,
    #[error("coefficient profile dips to {floor:.6} <= -1; a(x,z) would lose positivity")]
    CoefficientFloor { floor: f64 },
    #[error("exponent coupling violated: need 2*tau < xi, got tau = {tau}, xi = {xi}")]
    ExponentCoupling { tau: f64, xi: f64 },
    #[error("polynomial exponents must satisfy p, r in (1, q/2); got p = {p}, r = {r}, q = {q}")]
    PolynomialSubcritical { p: f64, r: f64, q: f64 },
}

/// Clamped `exp`: the flag reports that the cap was hit.
fn exp_sat(x: f64) -> (f64, bool) {
    if x > EXP_CLAMP {
        (EXP_CLAMP.exp(), true)
    } else {
        (x.exp(), false)
    }
}

/// `|t|^p` for `p > 0`, saturating instead of overflowing.
fn pow_abs_sat(t: f64, p: f64) -> (f64, bool) {
    if t == 0.0 {
        return (0.0, false);
    }
    let magnitude = p * t.abs().ln();
    if magnitude > EXP_CLAMP {
        (EXP_CLAMP.exp(), true)
    } else {
        (t.abs().powf(p), false)
    }
}

/// Clamp a custom-closure result that escaped to non-finite values.
fn guard_finite(v: f64) -> (f64, bool) {
    if v.is_finite() {
        (v, false)
    } else if v.is_nan() {
        (0.0, true)
    } else {
        (v.signum() * EXP_CLAMP.exp(), true)
    }
}

/// How `F(t) = ∫₀ᵗ f(s) ds` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FMode {
    /// Use the analytic antiderivative (polynomial kinds, custom closures).
    ClosedForm,
    /// Adaptive Simpson quadrature of `f` from 0 to `t`.
    Quadrature,
}

#[derive(Clone)]
pub enum NonlinearityKind {
    /// `f(t) = |t|^{p−1} t + |t|^{r−1} t` — two superlinear power terms.
    Polynomial { p: f64, r: f64 },
    /// `f(t) = |t|^{p−2} t · e^{|t|^τ}` — planar regime with subcritical
    /// exponential growth. `xi` is the growth exponent of the companion
    /// nonlocal density; the pair must satisfy `1 < 2τ < ξ < 2`.
    ExponentialN2 { p: f64, tau: f64, xi: f64 },
    /// Free-form nonlinearity. `antiderivative` must vanish at 0 when given;
    /// otherwise `F` falls back to quadrature.
    Custom {
        f: ScalarFn,
        f_prime: ScalarFn,
        antiderivative: Option<ScalarFn>,
    },
}

impl fmt::Debug for NonlinearityKind {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polynomial { p, r } => write!(w, "Polynomial {{ p: {p}, r: {r} }}"),
            Self::ExponentialN2 { p, tau, xi } => {
                write!(w, "ExponentialN2 {{ p: {p}, tau: {tau}, xi: {xi} }}")
            }
            Self::Custom { .. } => write!(w, "Custom {{ .. }}"),
        }
    }
}

/// Reaction term `f` together with the superquadraticity constant `γ` used by
/// blow-up tests: `f(s)s ≥ (2+γ)F(s) > 0` is expected away from 0.
#[derive(Debug, Clone)]
pub struct NonlinearityModel {
    pub kind: NonlinearityKind,
    pub gamma: f64,
    pub f_mode: FMode,
}

impl NonlinearityModel {
    pub fn polynomial(p: f64, r: f64, gamma: f64) -> Result<Self, ModelError> {
        for (name, value) in [("p", p), ("r", r)] {
            if !(value > 1.0) || !value.is_finite() {
                return Err(ModelError::InvalidParameter {
                    name,
                    value,
                    requirement: "exponent must be finite and > 1",
                });
            }
        }
        Self::check_gamma(gamma, p.min(r) - 1.0)?;
        Ok(Self {
            kind: NonlinearityKind::Polynomial { p, r },
            gamma,
            f_mode: FMode::ClosedForm,
        })
    }

    pub fn exponential_n2(p: f64, tau: f64, xi: f64, gamma: f64) -> Result<Self, ModelError> {
        if !(p > 2.0) || !p.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "p",
                value: p,
                requirement: "exponent must be finite and > 2",
            });
        }
        if !(2.0 * tau > 1.0) {
            return Err(ModelError::InvalidParameter {
                name: "tau",
                value: tau,
                requirement: "need 2*tau > 1",
            });
        }
        if !(xi < 2.0) || !(xi > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "xi",
                value: xi,
                requirement: "need 0 < xi < 2",
            });
        }
        if !(2.0 * tau < xi) {
            return Err(ModelError::ExponentCoupling { tau, xi });
        }
        Self::check_gamma(gamma, p - 2.0)?;
        Ok(Self {
            kind: NonlinearityKind::ExponentialN2 { p, tau, xi },
            gamma,
            f_mode: FMode::Quadrature,
        })
    }

    pub fn custom(
        f: ScalarFn,
        f_prime: ScalarFn,
        antiderivative: Option<ScalarFn>,
        gamma: f64,
    ) -> Result<Self, ModelError> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "gamma",
                value: gamma,
                requirement: "must be finite and > 0",
            });
        }
        let f_mode = if antiderivative.is_some() {
            FMode::ClosedForm
        } else {
            FMode::Quadrature
        };
        Ok(Self {
            kind: NonlinearityKind::Custom {
                f,
                f_prime,
                antiderivative,
            },
            gamma,
            f_mode,
        })
    }

    /// Single power term `f(t) = |t|^{p−1} t`, e.g. the cubic for `p = 3`.
    pub fn pure_power(p: f64, gamma: f64) -> Result<Self, ModelError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "p",
                value: p,
                requirement: "exponent must be finite and > 1",
            });
        }
        Self::check_gamma(gamma, p - 1.0)?;
        let fp = p;
        Self::custom(
            Arc::new(move |t: f64| pow_abs_sat(t, fp).0 * t.signum()),
            Arc::new(move |t: f64| fp * pow_abs_sat(t, fp - 1.0).0),
            Some(Arc::new(move |t: f64| {
                pow_abs_sat(t, fp + 1.0).0 / (fp + 1.0)
            })),
            gamma,
        )
    }

    /// `f ≡ 0`: the pure heat equation, handy as a linear baseline.
    pub fn zero() -> Self {
        Self::custom(
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
            Some(Arc::new(|_| 0.0)),
            1.0,
        )
        .expect("gamma = 1 is valid")
    }

    /// `f(t) = c·t`. Violates both the vanishing-linearization and the
    /// superquadratic hypotheses on purpose; used by verifier tests.
    pub fn linear(c: f64) -> Self {
        Self::custom(
            Arc::new(move |t| c * t),
            Arc::new(move |_| c),
            Some(Arc::new(move |t| 0.5 * c * t * t)),
            1.0,
        )
        .expect("gamma = 1 is valid")
    }

    fn check_gamma(gamma: f64, cap: f64) -> Result<(), ModelError> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "gamma",
                value: gamma,
                requirement: "must be finite and > 0",
            });
        }
        if gamma > cap + 1e-12 {
            return Err(ModelError::InvalidParameter {
                name: "gamma",
                value: gamma,
                requirement: "superquadraticity requires gamma <= min exponent - 1",
            });
        }
        Ok(())
    }

    /// `f(t)`, saturating; the flag reports an overflow clamp.
    pub fn f_eval_flagged(&self, t: f64) -> (f64, bool) {
        match &self.kind {
            NonlinearityKind::Polynomial { p, r } => {
                let (mp, fp) = pow_abs_sat(t, *p);
                let (mr, fr) = pow_abs_sat(t, *r);
                (t.signum() * (mp + mr), fp || fr)
            }
            NonlinearityKind::ExponentialN2 { p, tau, .. } => {
                if t == 0.0 {
                    return (0.0, false);
                }
                let magnitude = (p - 1.0) * t.abs().ln() + t.abs().powf(*tau);
                if magnitude > EXP_CLAMP {
                    (t.signum() * EXP_CLAMP.exp(), true)
                } else {
                    (
                        t.signum() * t.abs().powf(p - 1.0) * t.abs().powf(*tau).exp(),
                        false,
                    )
                }
            }
            NonlinearityKind::Custom { f, .. } => guard_finite(f(t)),
        }
    }

    pub fn f_eval(&self, t: f64) -> f64 {
        self.f_eval_flagged(t).0
    }

    /// Derivative `f'(t)`, saturating at the same cap.
    pub fn f_prime(&self, t: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Polynomial { p, r } => {
                p * pow_abs_sat(t, p - 1.0).0 + r * pow_abs_sat(t, r - 1.0).0
            }
            NonlinearityKind::ExponentialN2 { p, tau, .. } => {
                if t == 0.0 {
                    return 0.0;
                }
                let a = t.abs();
                let magnitude = (p - 2.0) * a.ln() + a.powf(*tau);
                if magnitude > EXP_CLAMP {
                    EXP_CLAMP.exp()
                } else {
                    a.powf(*tau).exp() * a.powf(p - 2.0) * ((p - 1.0) + tau * a.powf(*tau))
                }
            }
            NonlinearityKind::Custom { f_prime, .. } => guard_finite(f_prime(t)).0,
        }
    }

    /// Potential `F(t) = ∫₀ᵗ f(s) ds`.
    pub fn big_f(&self, t: f64) -> Result<f64, ModelError> {
        if t == 0.0 {
            return Ok(0.0);
        }
        if self.f_mode == FMode::ClosedForm {
            match &self.kind {
                NonlinearityKind::Polynomial { p, r } => {
                    return Ok(pow_abs_sat(t, p + 1.0).0 / (p + 1.0)
                        + pow_abs_sat(t, r + 1.0).0 / (r + 1.0));
                }
                NonlinearityKind::Custom {
                    antiderivative: Some(big_f),
                    ..
                } => return Ok(guard_finite(big_f(t)).0),
                _ => {}
            }
        }
        adaptive_simpson(&|s| self.f_eval(s), 0.0, t, 1e-10)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with tolerance scaled by
/// the coarse estimate. Recursion depth is capped; hitting the cap with the
/// interval estimate still out of tolerance is reported as non-convergence.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64, ModelError> {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
        worst: &mut f64,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 {
            *worst = worst.max(delta.abs() / 15.0);
            return left + right + delta / 15.0;
        }
        if delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1, worst)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1, worst)
    }

    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    let tol = rel_tol * whole.abs().max(1.0);
    let mut worst = 0.0;
    let value = recurse(f, a, fa, b, fb, whole, m, fm, tol, 48, &mut worst);
    if !value.is_finite() {
        return Err(ModelError::QuadratureOverflow);
    }
    if worst > tol {
        return Err(ModelError::QuadratureNonConvergence {
            requested: tol,
            achieved: worst,
        });
    }
    Ok(value)
}

#[derive(Clone)]
pub enum NonlocalKind {
    /// `g(t) = |t|^q`, `q ≥ 1`.
    PowerQ { q: f64 },
    /// `g(t) = e^{|t|^ξ}`, `0 < ξ < 2` (subcritical planar growth).
    ExponentialXi { xi: f64 },
    Custom { g: ScalarFn, g_prime: ScalarFn },
}

impl fmt::Debug for NonlocalKind {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerQ { q } => write!(w, "PowerQ {{ q: {q} }}"),
            Self::ExponentialXi { xi } => write!(w, "ExponentialXi {{ xi: {xi} }}"),
            Self::Custom { .. } => write!(w, "Custom {{ .. }}"),
        }
    }
}

/// Density whose integral `z = ∫ g(u) dx` drives the diffusion coefficient.
#[derive(Debug, Clone)]
pub struct NonlocalModel {
    pub kind: NonlocalKind,
}

impl NonlocalModel {
    pub fn power_q(q: f64) -> Result<Self, ModelError> {
        if !(q >= 1.0) || !q.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "q",
                value: q,
                requirement: "must be finite and >= 1",
            });
        }
        Ok(Self {
            kind: NonlocalKind::PowerQ { q },
        })
    }

    pub fn exponential_xi(xi: f64) -> Result<Self, ModelError> {
        if !(xi > 0.0 && xi < 2.0) {
            return Err(ModelError::InvalidParameter {
                name: "xi",
                value: xi,
                requirement: "need 0 < xi < 2",
            });
        }
        Ok(Self {
            kind: NonlocalKind::ExponentialXi { xi },
        })
    }

    pub fn custom(g: ScalarFn, g_prime: ScalarFn) -> Self {
        Self {
            kind: NonlocalKind::Custom { g, g_prime },
        }
    }

    pub fn g_eval_flagged(&self, t: f64) -> (f64, bool) {
        match &self.kind {
            NonlocalKind::PowerQ { q } => pow_abs_sat(t, *q),
            NonlocalKind::ExponentialXi { xi } => exp_sat(t.abs().powf(*xi)),
            NonlocalKind::Custom { g, .. } => guard_finite(g(t)),
        }
    }

    pub fn g_eval(&self, t: f64) -> f64 {
        self.g_eval_flagged(t).0
    }

    pub fn g_prime(&self, t: f64) -> f64 {
        match &self.kind {
            NonlocalKind::PowerQ { q } => {
                if t == 0.0 {
                    0.0
                } else {
                    q * pow_abs_sat(t, q - 1.0).0 * t.signum()
                }
            }
            NonlocalKind::ExponentialXi { xi } => {
                if t == 0.0 {
                    0.0
                } else {
                    let a = t.abs();
                    let (e, _) = exp_sat(a.powf(*xi));
                    e * xi * a.powf(xi - 1.0) * t.signum()
                }
            }
            NonlocalKind::Custom { g_prime, .. } => guard_finite(g_prime(t)).0,
        }
    }
}

/// Spatial factor `B` of the coefficient, evaluated on relative coordinates
/// `(ξ, η) = (x/Lx, y/Ly) ∈ (0,1)²`.
#[derive(Clone)]
pub enum SpatialProfile {
    Zero,
    Const(f64),
    /// `amplitude · sin(πξ) sin(πη)` — vanishes toward the boundary.
    SineBump { amplitude: f64 },
    Custom(SpatialFn),
}

impl SpatialProfile {
    pub fn eval(&self, xi: f64, eta: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Const(c) => *c,
            Self::SineBump { amplitude } => {
                amplitude * (std::f64::consts::PI * xi).sin() * (std::f64::consts::PI * eta).sin()
            }
            Self::Custom(b) => b(xi, eta),
        }
    }
}

impl fmt::Debug for SpatialProfile {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(w, "Zero"),
            Self::Const(c) => write!(w, "Const({c})"),
            Self::SineBump { amplitude } => write!(w, "SineBump {{ amplitude: {amplitude} }}"),
            Self::Custom(_) => write!(w, "Custom(..)"),
        }
    }
}

/// Cutoff factor `h(z)`; must vanish identically for `|z| ≥ K`.
#[derive(Clone)]
pub enum CutoffProfile {
    /// `scale · (1 − (z/K)²)²` inside `(−K, K)`, zero outside. C¹ across ±K.
    QuarticBump { scale: f64 },
    Custom { h: ScalarFn, h_prime: ScalarFn },
}

impl CutoffProfile {
    fn eval(&self, z: f64, k: f64) -> f64 {
        match self {
            Self::QuarticBump { scale } => {
                let w = 1.0 - (z / k) * (z / k);
                scale * w * w
            }
            Self::Custom { h, .. } => h(z),
        }
    }

    fn eval_prime(&self, z: f64, k: f64) -> f64 {
        match self {
            Self::QuarticBump { scale } => {
                let s = z / k;
                -4.0 * scale * (z / (k * k)) * (1.0 - s * s)
            }
            Self::Custom { h_prime, .. } => h_prime(z),
        }
    }
}

impl fmt::Debug for CutoffProfile {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::QuarticBump { scale } => write!(w, "QuarticBump {{ scale: {scale} }}"),
            Self::Custom { .. } => write!(w, "Custom {{ .. }}"),
        }
    }
}

#[derive(Clone)]
pub enum CoefficientForm {
    /// `a = 1 + B(ξ,η) h(z)` with the saturation branch enforced exactly.
    Factored {
        b: SpatialProfile,
        h: CutoffProfile,
    },
    /// Free-form `a(ξ, η, z)` and its z-derivative. Nothing is enforced, so
    /// this form can deliberately violate saturation (verifier test models).
    Custom { a: CoeffFn, a_z: CoeffFn },
}

impl fmt::Debug for CoefficientForm {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Factored { b, h } => write!(w, "Factored {{ b: {b:?}, h: {h:?} }}"),
            Self::Custom { .. } => write!(w, "Custom {{ .. }}"),
        }
    }
}

/// Diffusion coefficient family. `k` is the saturation threshold, `a0` the
/// certified lower bound, `floor` the sampled infimum of `B·h` (must stay
/// above −1 so that `a` remains positive).
#[derive(Debug, Clone)]
pub struct CoefficientModel {
    pub form: CoefficientForm,
    pub k: f64,
    pub a0: f64,
    pub floor: f64,
}

impl CoefficientModel {
    /// `a ≡ 1`: plain heat diffusion, no nonlocal coupling.
    pub fn identity() -> Self {
        Self {
            form: CoefficientForm::Factored {
                b: SpatialProfile::Zero,
                h: CutoffProfile::QuarticBump { scale: 1.0 },
            },
            k: 1.0,
            a0: 1.0,
            floor: 0.0,
        }
    }

    /// Build the factored family and certify its lower bound by sampling
    /// `B·h` on a 33×33 relative lattice × 65 values of `z` in `[−K, K]`.
    pub fn factored(b: SpatialProfile, h: CutoffProfile, k: f64) -> Result<Self, ModelError> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "K",
                value: k,
                requirement: "saturation threshold must be finite and > 0",
            });
        }
        let mut floor = f64::INFINITY;
        let n = 33;
        for i in 1..=n {
            for j in 1..=n {
                let xi = i as f64 / (n + 1) as f64;
                let eta = j as f64 / (n + 1) as f64;
                let bv = b.eval(xi, eta);
                for iz in 0..65 {
                    let z = -k + 2.0 * k * iz as f64 / 64.0;
                    floor = floor.min(bv * h.eval(z, k));
                }
            }
        }
        if !(floor > -1.0) {
            return Err(ModelError::CoefficientFloor { floor });
        }
        Ok(Self {
            form: CoefficientForm::Factored { b, h },
            k,
            a0: 1.0 + floor.min(0.0),
            floor,
        })
    }

    /// Free-form coefficient; the caller certifies the lower bound.
    pub fn custom_raw(a: CoeffFn, a_z: CoeffFn, k: f64, a0: f64) -> Result<Self, ModelError> {
        if !(a0 > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "a0",
                value: a0,
                requirement: "lower bound must be > 0",
            });
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "K",
                value: k,
                requirement: "saturation threshold must be finite and > 0",
            });
        }
        Ok(Self {
            form: CoefficientForm::Custom { a, a_z },
            k,
            a0,
            floor: a0 - 1.0,
        })
    }

    /// `a(ξ, η, z)`. For the factored form this is exactly `1.0` once
    /// `|z| ≥ K` — the comparison, not a tolerance.
    pub fn a_eval(&self, xi: f64, eta: f64, z: f64) -> f64 {
        match &self.form {
            CoefficientForm::Factored { b, h } => {
                if z.abs() >= self.k {
                    1.0
                } else {
                    1.0 + b.eval(xi, eta) * h.eval(z, self.k)
                }
            }
            CoefficientForm::Custom { a, .. } => a(xi, eta, z),
        }
    }

    /// `∂a/∂z`.
    pub fn a_z_eval(&self, xi: f64, eta: f64, z: f64) -> f64 {
        match &self.form {
            CoefficientForm::Factored { b, h } => {
                if z.abs() >= self.k {
                    0.0
                } else {
                    b.eval(xi, eta) * h.eval_prime(z, self.k)
                }
            }
            CoefficientForm::Custom { a_z, .. } => a_z(xi, eta, z),
        }
    }
}

/// Full problem: domain, reaction `f`, nonlocal density `g`, coefficient `a`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: RectDomain,
    pub f: NonlinearityModel,
    pub g: NonlocalModel,
    pub a: CoefficientModel,
}

impl ProblemSpec {
    /// Assemble and cross-validate the pieces. Couplings checked here:
    /// polynomial exponents must sit below `q/2`, and the planar exponential
    /// pair must satisfy `2τ < ξ` against the actual density exponent.
    pub fn new(
        domain: RectDomain,
        f: NonlinearityModel,
        g: NonlocalModel,
        a: CoefficientModel,
    ) -> Result<Self, ModelError> {
        if let (NonlinearityKind::Polynomial { p, r }, NonlocalKind::PowerQ { q }) =
            (&f.kind, &g.kind)
        {
            if !(*p < q / 2.0 && *r < q / 2.0) {
                return Err(ModelError::PolynomialSubcritical {
                    p: *p,
                    r: *r,
                    q: *q,
                });
            }
        }
        if let (NonlinearityKind::ExponentialN2 { tau, .. }, NonlocalKind::ExponentialXi { xi }) =
            (&f.kind, &g.kind)
        {
            if !(2.0 * tau < *xi) {
                return Err(ModelError::ExponentCoupling { tau: *tau, xi: *xi });
            }
        }
        Ok(Self { domain, f, g, a })
    }

    /// Planar exponential family: `f = |t| t e^{|t|^0.6}`, `g = e^{|t|^1.5}`,
    /// sine-bump coefficient. Preset id `example1`.
    pub fn exponential_planar_preset(domain: RectDomain) -> Self {
        let f = NonlinearityModel::exponential_n2(3.0, 0.6, 1.5, 1.0).expect("valid preset");
        let g = NonlocalModel::exponential_xi(1.5).expect("valid preset");
        let a = Self::default_coefficient(1.0);
        Self::new(domain, f, g, a).expect("preset is self-consistent")
    }

    /// Two-power family: `f = |t|^{0.4} t + |t|^{0.2} t`, `g = |t|³`,
    /// sine-bump coefficient. Preset id `example2`.
    pub fn polynomial_preset(domain: RectDomain) -> Self {
        let f = NonlinearityModel::polynomial(1.4, 1.2, 0.2).expect("valid preset");
        let g = NonlocalModel::power_q(3.0).expect("valid preset");
        let a = Self::default_coefficient(1.0);
        Self::new(domain, f, g, a).expect("preset is self-consistent")
    }

    /// `f ≡ 0`: pure heat flow. Preset id `heat`.
    pub fn heat_preset(domain: RectDomain) -> Self {
        Self::new(
            domain,
            NonlinearityModel::zero(),
            NonlocalModel::power_q(2.0).expect("valid preset"),
            CoefficientModel::identity(),
        )
        .expect("preset is self-consistent")
    }

    /// Cubic reaction with plain diffusion. Preset id `cubic`.
    pub fn cubic_preset(domain: RectDomain) -> Self {
        Self::new(
            domain,
            NonlinearityModel::pure_power(3.0, 2.0).expect("valid preset"),
            NonlocalModel::power_q(2.0).expect("valid preset"),
            CoefficientModel::identity(),
        )
        .expect("preset is self-consistent")
    }

    pub fn default_coefficient(k: f64) -> CoefficientModel {
        CoefficientModel::factored(
            SpatialProfile::SineBump { amplitude: 0.5 },
            CutoffProfile::QuarticBump { scale: 1.0 },
            k,
        )
        .expect("sine bump stays above -1")
    }

    /// Correction `Ψ(x, t, z) = (1/a − 1) f(t)`; bitwise zero wherever `a = 1`.
    pub fn psi(&self, xi: f64, eta: f64, t: f64, z: f64) -> f64 {
        self.psi_flagged(xi, eta, t, z).0
    }

    pub fn psi_flagged(&self, xi: f64, eta: f64, t: f64, z: f64) -> (f64, bool) {
        let a = self.a.a_eval(xi, eta, z);
        if a == 1.0 {
            return (0.0, false);
        }
        let (fv, flag) = self.f.f_eval_flagged(t);
        ((1.0 / a - 1.0) * fv, flag)
    }
}

// ---------------------------------------------------------------------------
// Hypothesis verification
// ---------------------------------------------------------------------------

/// Where and how densely the sampling-based verifier probes.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    /// Largest `|t|` probed (log-spaced down to 1e-8).
    pub t_max: f64,
    /// Number of `t` magnitudes per sign.
    pub n_t: usize,
    /// Relative lattice is `n_x × n_x`.
    pub n_x: usize,
    /// Number of `z` probes across `[−2K, 2K]`.
    pub n_z: usize,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self {
            t_max: 1e3,
            n_t: 200,
            n_x: 17,
            n_z: 41,
        }
    }
}

impl SamplePlan {
    fn t_samples(&self) -> Vec<f64> {
        let lo: f64 = 1e-8;
        let ratio = (self.t_max / lo).ln();
        let mut out = Vec::with_capacity(2 * self.n_t);
        for i in 0..self.n_t {
            let m = lo * (ratio * i as f64 / (self.n_t - 1) as f64).exp();
            out.push(m);
            out.push(-m);
        }
        out
    }

    fn z_samples(&self, k: f64) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.n_z)
            .map(|i| -2.0 * k + 4.0 * k * i as f64 / (self.n_z - 1) as f64)
            .collect();
        out.extend_from_slice(&[-2.0 * k, -1.5 * k, -k, k, 1.5 * k, 2.0 * k]);
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup();
        out
    }

    fn x_samples(&self) -> Vec<(f64, f64)> {
        let n = self.n_x;
        let mut out = Vec::with_capacity(n * n);
        for i in 1..=n {
            for j in 1..=n {
                out.push((i as f64 / (n + 1) as f64, j as f64 / (n + 1) as f64));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionVerdict {
    Pass,
    Fail,
    /// The condition involves a limit the sampled range cannot settle.
    Inconclusive,
}

/// Concrete sample demonstrating a failure.
#[derive(Debug, Clone)]
pub struct Witness {
    pub location: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub verdict: ConditionVerdict,
    pub details: String,
    pub constants: Vec<(&'static str, f64)>,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.verdict == ConditionVerdict::Pass)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match c.verdict {
                ConditionVerdict::Pass => "pass",
                ConditionVerdict::Fail => "FAIL",
                ConditionVerdict::Inconclusive => "inconclusive",
            };
            write!(w, "{:26} {:12} {}", c.name, tag, c.details)?;
            for (k, v) in &c.constants {
                write!(w, "  {k} = {v:.6e}")?;
            }
            if let Some(wit) = &c.witness {
                write!(
                    w,
                    "  witness at {}: lhs = {:.6e}, rhs = {:.6e}",
                    wit.location, wit.lhs, wit.rhs
                )?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn pass(name: &'static str, details: String, constants: Vec<(&'static str, f64)>) -> ConditionCheck {
    ConditionCheck {
        name,
        verdict: ConditionVerdict::Pass,
        details,
        constants,
        witness: None,
    }
}

fn fail(name: &'static str, details: String, witness: Witness) -> ConditionCheck {
    ConditionCheck {
        name,
        verdict: ConditionVerdict::Fail,
        details,
        constants: Vec::new(),
        witness: Some(witness),
    }
}

fn inconclusive(name: &'static str, details: String) -> ConditionCheck {
    ConditionCheck {
        name,
        verdict: ConditionVerdict::Inconclusive,
        details,
        constants: Vec::new(),
        witness: None,
    }
}

/// Sampling-based audit of the structural hypotheses. Verdicts apply to the
/// sampled ranges only; conditions that hinge on behaviour at infinity come
/// back `Inconclusive` when the samples cannot settle them.
pub fn verify_conditions(spec: &ProblemSpec, plan: &SamplePlan) -> ConditionReport {
    let ts = plan.t_samples();
    let zs = plan.z_samples(spec.a.k);
    let xs = plan.x_samples();
    let mut checks = Vec::new();

    checks.push(check_coefficient_lower_bound(spec, &xs, &zs));
    checks.push(check_coefficient_saturation(spec, &xs));
    checks.push(check_growth_compatibility(spec, &ts));
    checks.push(check_nonlocal_growth(spec, &ts));
    checks.push(check_nonlinearity_growth(spec, &ts));
    checks.push(check_vanishing_linearization(spec));
    let superquadratic = check_superquadratic(spec, plan);
    let sq_pass = superquadratic.verdict == ConditionVerdict::Pass;
    checks.push(superquadratic);
    checks.push(check_power_coercivity(spec, &ts, sq_pass));

    ConditionReport { checks }
}

fn check_coefficient_lower_bound(
    spec: &ProblemSpec,
    xs: &[(f64, f64)],
    zs: &[f64],
) -> ConditionCheck {
    const NAME: &str = "coefficient_lower_bound";
    let mut min_a = f64::INFINITY;
    let mut at = (0.0, 0.0, 0.0);
    for &(xi, eta) in xs {
        for &z in zs {
            let a = spec.a.a_eval(xi, eta, z);
            if a < min_a {
                min_a = a;
                at = (xi, eta, z);
            }
        }
    }
    if spec.a.a0 > 0.0 && min_a >= spec.a.a0 - 1e-12 && min_a > 0.0 {
        pass(
            NAME,
            "a stays above its declared lower bound on all samples".into(),
            vec![("a0", spec.a.a0), ("min_a", min_a)],
        )
    } else {
        fail(
            NAME,
            format!("a dips below the declared bound a0 = {}", spec.a.a0),
            Witness {
                location: format!("(xi, eta, z) = ({}, {}, {})", at.0, at.1, at.2),
                lhs: min_a,
                rhs: spec.a.a0,
            },
        )
    }
}

fn check_coefficient_saturation(spec: &ProblemSpec, xs: &[(f64, f64)]) -> ConditionCheck {
    const NAME: &str = "coefficient_saturation";
    let k = spec.a.k;
    for &mult in &[1.0, 1.5, 2.0, 10.0] {
        for sign in [-1.0, 1.0] {
            let z = sign * mult * k;
            for &(xi, eta) in xs {
                let a = spec.a.a_eval(xi, eta, z);
                if a != 1.0 {
                    return fail(
                        NAME,
                        "a(x, z) must equal 1 exactly for |z| >= K".into(),
                        Witness {
                            location: format!("(xi, eta, z) = ({xi}, {eta}, {z})"),
                            lhs: a,
                            rhs: 1.0,
                        },
                    );
                }
            }
        }
    }
    pass(
        NAME,
        format!("a == 1 bitwise on all samples with |z| >= K = {k}"),
        vec![],
    )
}

fn check_growth_compatibility(spec: &ProblemSpec, ts: &[f64]) -> ConditionCheck {
    const NAME: &str = "growth_compatibility";
    let mut c_h: f64 = 0.0;
    let mut skipped = 0usize;
    for &t in ts {
        let (g, gflag) = spec.g.g_eval_flagged(t);
        if g < 0.0 {
            return fail(
                NAME,
                "density g must be nonnegative".into(),
                Witness {
                    location: format!("t = {t}"),
                    lhs: g,
                    rhs: 0.0,
                },
            );
        }
        let (f, fflag) = spec.f.f_eval_flagged(t);
        if gflag || fflag {
            skipped += 1;
            continue;
        }
        let lhs = (f * f).max((f * t).abs());
        if !lhs.is_finite() {
            skipped += 1;
            continue;
        }
        c_h = c_h.max(lhs / (g + 1.0));
    }
    if skipped * 2 > ts.len() {
        return inconclusive(
            NAME,
            format!("{skipped} of {} samples overflowed; range too wide", ts.len()),
        );
    }
    pass(
        NAME,
        format!(
            "max(f^2, |f t|) <= C (g + 1) holds on samples ({} overflowed and were skipped)",
            skipped
        ),
        vec![("c_h", c_h)],
    )
}

/// Least-squares slope of `ln y` against `ln |t|` over the largest sampled
/// magnitudes; `None` when fewer than 4 usable points exist.
fn tail_log_slope(pairs: &[(f64, f64)]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(t, y)| *t > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let tail = pts.len().min(40);
    if tail < 4 {
        return None;
    }
    let pts = &pts[pts.len() - tail..];
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Checks that `y(t) e^{−βt²}` eventually declines on the sampled tail for
/// each probe β — the sampled stand-in for subcritical exponential growth.
fn subcritical_tail(ts: &[f64], y: impl Fn(f64) -> (f64, bool)) -> Result<(), String> {
    for &beta in &[0.25, 1.0] {
        let mut pts: Vec<(f64, f64)> = ts
            .iter()
            .filter(|t| **t > 1.0)
            .map(|&t| {
                let (v, flag) = y(t);
                // Work in logs: the damped value itself may underflow.
                let lv = if flag || v <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    v.ln() - beta * t * t
                };
                (t, lv)
            })
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if pts.len() < 8 {
            return Err("too few tail samples".into());
        }
        let last = pts.last().unwrap().1;
        let peak = pts
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(last < peak - 1.0) {
            return Err(format!(
                "damped tail (beta = {beta}) does not decline within the sampled range"
            ));
        }
    }
    Ok(())
}

fn check_nonlocal_growth(spec: &ProblemSpec, ts: &[f64]) -> ConditionCheck {
    const NAME: &str = "nonlocal_growth";
    match &spec.g.kind {
        NonlocalKind::PowerQ { q } => {
            let pairs: Vec<(f64, f64)> = ts
                .iter()
                .filter(|t| **t > 0.0)
                .map(|&t| (t, spec.g.g_eval(t)))
                .collect();
            match tail_log_slope(&pairs) {
                Some(slope) => pass(
                    NAME,
                    format!("power growth; fitted tail exponent vs declared q = {q}"),
                    vec![("q_fit", slope)],
                ),
                None => inconclusive(NAME, "not enough usable samples for a growth fit".into()),
            }
        }
        NonlocalKind::ExponentialXi { xi } => {
            match subcritical_tail(ts, |t| spec.g.g_eval_flagged(t)) {
                Ok(()) => pass(
                    NAME,
                    format!("e^{{|t|^{xi}}} decays under every probed Gaussian damping"),
                    vec![],
                ),
                Err(e) => inconclusive(NAME, e),
            }
        }
        NonlocalKind::Custom { .. } => {
            let pairs: Vec<(f64, f64)> = ts
                .iter()
                .filter(|t| **t > 0.0)
                .map(|&t| (t, spec.g.g_eval(t)))
                .collect();
            match tail_log_slope(&pairs) {
                Some(slope) if slope.is_finite() => pass(
                    NAME,
                    "custom density; tail exponent fitted from samples".into(),
                    vec![("q_fit", slope)],
                ),
                _ => match subcritical_tail(ts, |t| spec.g.g_eval_flagged(t)) {
                    Ok(()) => pass(NAME, "custom density with subcritical tail".into(), vec![]),
                    Err(e) => inconclusive(NAME, e),
                },
            }
        }
    }
}

fn check_nonlinearity_growth(spec: &ProblemSpec, ts: &[f64]) -> ConditionCheck {
    const NAME: &str = "nonlinearity_growth";
    match &spec.f.kind {
        NonlinearityKind::ExponentialN2 { .. } => {
            match subcritical_tail(ts, |t| {
                let (v, flag) = spec.f.f_eval_flagged(t);
                (v.abs(), flag)
            }) {
                Ok(()) => pass(
                    NAME,
                    "f decays under every probed Gaussian damping (planar regime)".into(),
                    vec![],
                ),
                Err(e) => inconclusive(NAME, e),
            }
        }
        _ => {
            let pairs: Vec<(f64, f64)> = ts
                .iter()
                .filter(|t| **t > 0.0)
                .map(|&t| (t, spec.f.f_eval(t).abs()))
                .collect();
            let Some(p_fit) = tail_log_slope(&pairs) else {
                return inconclusive(NAME, "not enough usable samples for a growth fit".into());
            };
            let mut c2: f64 = 0.0;
            for &(t, fv) in &pairs {
                c2 = c2.max(fv / (1.0 + t.powf(p_fit.max(0.0))));
            }
            if let NonlocalKind::PowerQ { q } = spec.g.kind {
                if p_fit > q / 2.0 + 0.02 {
                    return fail(
                        NAME,
                        format!("fitted growth exponent exceeds q/2 = {}", q / 2.0),
                        Witness {
                            location: "tail fit".into(),
                            lhs: p_fit,
                            rhs: q / 2.0,
                        },
                    );
                }
            }
            pass(
                NAME,
                "polynomial-type growth bounded on samples".into(),
                vec![("p_fit", p_fit), ("c2", c2)],
            )
        }
    }
}

fn check_vanishing_linearization(spec: &ProblemSpec) -> ConditionCheck {
    const NAME: &str = "vanishing_linearization";
    // Probe |t| from 1e-1 down to 1e-8, log-spaced, and ask the ratio
    // |f(t)/t| to follow a declining envelope with a decisive overall drop.
    let n = 29;
    let mut ratios = Vec::with_capacity(n);
    for i in 0..n {
        let t = 1e-1 * (10f64).powf(-7.0 * i as f64 / (n - 1) as f64);
        ratios.push((t, (spec.f.f_eval(t) / t).abs()));
    }
    let first = ratios
        .iter()
        .take(3)
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let last = ratios
        .iter()
        .rev()
        .take(3)
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut enveloped = true;
    let mut witness_at = 0.0;
    let mut running = f64::INFINITY;
    for &(t, r) in &ratios {
        if r > running * 1.05 + 1e-300 {
            enveloped = false;
            witness_at = t;
            break;
        }
        running = running.min(r);
    }
    if enveloped && last <= 0.25 * first.max(1e-300) {
        pass(
            NAME,
            "|f(t)/t| declines toward 0 as t -> 0".into(),
            vec![("ratio_at_min_t", last)],
        )
    } else {
        let at = if enveloped { ratios.last().unwrap().0 } else { witness_at };
        fail(
            NAME,
            "|f(t)/t| does not follow a declining envelope toward 0".into(),
            Witness {
                location: format!("t = {at:e}"),
                lhs: last,
                rhs: 0.25 * first,
            },
        )
    }
}

fn check_superquadratic(spec: &ProblemSpec, plan: &SamplePlan) -> ConditionCheck {
    const NAME: &str = "superquadratic_growth";
    let gamma = spec.f.gamma;
    // Quadrature-backed potentials get a reduced range: the check is about
    // structure, not extreme magnitudes.
    let t_cap = match spec.f.f_mode {
        FMode::Quadrature => plan.t_max.min(30.0),
        FMode::ClosedForm => plan.t_max,
    };
    let mut min_margin = f64::INFINITY;
    let mut samples = 0usize;
    for &t in &plan.t_samples() {
        if t == 0.0 || t.abs() > t_cap {
            continue;
        }
        let ft = spec.f.f_eval(t) * t;
        let big_f = match spec.f.big_f(t) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let rhs = (2.0 + gamma) * big_f;
        if !(rhs > 0.0) {
            return fail(
                NAME,
                format!("(2+gamma) F(t) must be positive for t != 0 (gamma = {gamma})"),
                Witness {
                    location: format!("t = {t:e}"),
                    lhs: rhs,
                    rhs: 0.0,
                },
            );
        }
        let slack = 1e-9 * rhs.abs().max(1e-300);
        if ft < rhs - slack {
            return fail(
                NAME,
                format!("f(t)·t >= (2+gamma) F(t) violated (gamma = {gamma})"),
                Witness {
                    location: format!("t = {t:e}"),
                    lhs: ft,
                    rhs,
                },
            );
        }
        min_margin = min_margin.min((ft - rhs) / rhs.abs().max(1e-300));
        samples += 1;
    }
    if samples < 8 {
        return inconclusive(NAME, "too few evaluable samples".into());
    }
    pass(
        NAME,
        format!("f(t)·t >= (2+gamma) F(t) > 0 on {samples} samples"),
        vec![("min_relative_margin", min_margin)],
    )
}

fn check_power_coercivity(spec: &ProblemSpec, ts: &[f64], superquadratic: bool) -> ConditionCheck {
    const NAME: &str = "power_coercivity";
    if !superquadratic {
        return inconclusive(
            NAME,
            "skipped: superquadratic check did not pass, so f(t)·t may change sign".into(),
        );
    }
    let gamma = spec.f.gamma;
    let mut c3: f64 = 0.0;
    for &t in ts {
        if t.abs() < 1.0 {
            continue;
        }
        let (fv, flag) = spec.f.f_eval_flagged(t);
        let ft = fv * t;
        if flag || !(ft > 0.0) {
            continue;
        }
        let (num, nflag) = pow_abs_sat(t, 2.0 + gamma);
        if nflag {
            continue;
        }
        c3 = c3.max(num / ft);
    }
    if c3 == 0.0 {
        return inconclusive(NAME, "no usable samples with |t| >= 1".into());
    }
    let mut c4: f64 = 0.0;
    for &t in ts {
        if t.abs() >= 1.0 || t == 0.0 {
            continue;
        }
        let ft = spec.f.f_eval(t) * t;
        c4 = c4.max(t.abs().powf(2.0 + gamma) - c3 * ft);
    }
    // Re-verify the fitted pair on every sample.
    for &t in ts {
        let (fv, flag) = spec.f.f_eval_flagged(t);
        if flag {
            continue;
        }
        let (lhs, lflag) = pow_abs_sat(t, 2.0 + gamma);
        if lflag {
            continue;
        }
        let rhs = c3 * fv * t + c4;
        if lhs > rhs + 1e-9 * rhs.abs().max(1.0) {
            return fail(
                NAME,
                "fitted (c3, c4) fail to dominate |t|^{2+gamma} on samples".into(),
                Witness {
                    location: format!("t = {t:e}"),
                    lhs,
                    rhs,
                },
            );
        }
    }
    pass(
        NAME,
        "|t|^{2+gamma} <= c3 f(t) t + c4 with fitted constants".into(),
        vec![("c3", c3), ("c4", c4)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RectDomain;

    fn unit_domain() -> RectDomain {
        RectDomain::new(1.0, 1.0, 8, 8).unwrap()
    }

    #[test]
    fn polynomial_point_values() {
        let m = NonlinearityModel::polynomial(3.0, 2.0, 1.0).unwrap();
        assert_eq!(m.f_eval(1.0), 2.0, "|1|^2*1 + |1|^1*1");
        assert_eq!(m.f_eval(0.0), 0.0);
        assert_eq!(m.f_eval(-1.0), -2.0, "odd symmetry");
        let big_f = m.big_f(1.0).unwrap();
        assert!(
            (big_f - (0.25 + 1.0 / 3.0)).abs() < 1e-15,
            "F(1) = 1/4 + 1/3, got {big_f}"
        );
    }

    #[test]
    fn exponential_point_value() {
        // 4 * e^(2^0.6), checked against a 30-digit reference evaluation.
        let m = NonlinearityModel::exponential_n2(3.0, 0.6, 1.5, 1.0).unwrap();
        let expected = 18.210_729_031_743_851_4;
        assert!((m.f_eval(2.0) - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn exponential_potential_by_quadrature() {
        // ∫₀¹ t² e^{t^0.6} dt, 30-digit reference value.
        let m = NonlinearityModel::exponential_n2(3.0, 0.6, 1.5, 1.0).unwrap();
        let expected = 0.774_227_426_885_678_53;
        let got = m.big_f(1.0).unwrap();
        assert!((got - expected).abs() < 1e-10, "got {got}");
    }

    #[test]
    fn quadrature_agrees_with_closed_form_on_polynomial() {
        let mut m = NonlinearityModel::polynomial(1.4, 1.2, 0.2).unwrap();
        let closed = m.big_f(2.5).unwrap();
        m.f_mode = FMode::Quadrature;
        let quad = m.big_f(2.5).unwrap();
        assert!(
            (closed - quad).abs() <= 1e-10 * closed.abs(),
            "closed {closed} vs quadrature {quad}"
        );
    }

    #[test]
    fn density_point_values() {
        let g2 = NonlocalModel::power_q(2.0).unwrap();
        assert_eq!(g2.g_eval(3.0), 9.0);
        let g25 = NonlocalModel::power_q(2.5).unwrap();
        let expected = 5.656_854_249_492_380_2; // 2^2.5
        assert!((g25.g_eval(2.0) - expected).abs() < 1e-14);
        let gx = NonlocalModel::exponential_xi(1.5).unwrap();
        assert_eq!(gx.g_eval(0.0), 1.0);
    }

    #[test]
    fn coefficient_saturates_exactly() {
        let a = ProblemSpec::default_coefficient(2.0);
        assert_eq!(a.a_eval(0.5, 0.5, 2.0), 1.0, "z = K");
        assert_eq!(a.a_eval(0.3, 0.7, -5.0), 1.0, "z beyond -K");
        assert_eq!(a.a_eval(0.5, 0.5, 4.0), 1.0, "z = 2K");
        assert!(a.a_eval(0.5, 0.5, 0.0) > 1.0, "unsaturated bump raises a");
    }

    #[test]
    fn coefficient_matches_linear_cutoff_example() {
        // B = sin(pi x) sin(pi y), h(z) = max(0, 1 - z/K) * 0.5 at x = (1/2, 1/2), z = 0.
        let k = 2.0;
        let h = CutoffProfile::Custom {
            h: Arc::new(move |z: f64| 0.5 * (1.0 - z.abs() / k).max(0.0)),
            h_prime: Arc::new(move |z: f64| {
                if z.abs() >= k {
                    0.0
                } else {
                    -0.5 * z.signum() / k
                }
            }),
        };
        let a = CoefficientModel::factored(SpatialProfile::SineBump { amplitude: 1.0 }, h, k)
            .unwrap();
        assert_eq!(a.a_eval(0.5, 0.5, 0.0), 1.5);
    }

    #[test]
    fn psi_zero_in_saturated_regime_and_identity_coefficient() {
        let spec = ProblemSpec::polynomial_preset(unit_domain());
        let k = spec.a.k;
        // |z| >= K: bitwise zero regardless of t.
        assert_eq!(spec.psi(0.5, 0.5, 3.7, 2.0 * k).to_bits(), 0.0f64.to_bits());
        assert_eq!(spec.psi(0.25, 0.75, -1.3, k).to_bits(), 0.0f64.to_bits());
        // a == 1 identically: zero as well.
        let heat = ProblemSpec::cubic_preset(unit_domain());
        assert_eq!(heat.psi(0.5, 0.5, 2.0, 0.1).to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn psi_matches_hand_value_for_constant_coefficient() {
        // a = 1.5 and f with f(t) = 2 at the probe: psi = (1/1.5 - 1)*2 = -2/3.
        let a = CoefficientModel::custom_raw(
            Arc::new(|_, _, _| 1.5),
            Arc::new(|_, _, _| 0.0),
            1.0,
            1.5,
        )
        .unwrap();
        let spec = ProblemSpec::new(
            unit_domain(),
            NonlinearityModel::polynomial(3.0, 2.0, 1.0).unwrap(),
            NonlocalModel::power_q(7.0).unwrap(),
            a,
        )
        .unwrap();
        let psi = spec.psi(0.5, 0.5, 1.0, 0.0); // f(1) = 2
        assert!((psi - (-2.0 / 3.0)).abs() < 1e-15, "got {psi}");
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(NonlocalModel::power_q(-1.0).is_err());
        assert!(NonlocalModel::power_q(0.5).is_err());
        assert!(NonlinearityModel::polynomial(0.9, 2.0, 0.5).is_err());
        // 2*tau < xi violated: tau = 0.9, xi = 1.7.
        assert!(NonlinearityModel::exponential_n2(3.0, 0.9, 1.7, 1.0).is_err());
        // gamma above min(p, r) - 1.
        assert!(NonlinearityModel::polynomial(1.4, 1.2, 0.5).is_err());
        // Polynomial exponents must sit below q/2.
        let d = unit_domain();
        assert!(matches!(
            ProblemSpec::new(
                d,
                NonlinearityModel::polynomial(1.4, 1.2, 0.2).unwrap(),
                NonlocalModel::power_q(2.0).unwrap(),
                CoefficientModel::identity(),
            ),
            Err(ModelError::PolynomialSubcritical { .. })
        ));
    }

    #[test]
    fn overflow_saturates_with_flag() {
        let m = NonlinearityModel::exponential_n2(3.0, 0.6, 1.5, 1.0).unwrap();
        let (v, flag) = m.f_eval_flagged(1e10);
        assert!(flag, "enormous argument must raise the overflow flag");
        assert!(v.is_finite());
        let g = NonlocalModel::exponential_xi(1.5).unwrap();
        let (gv, gflag) = g.g_eval_flagged(1e6);
        assert!(gflag);
        assert!(gv.is_finite());
    }

    #[test]
    fn preset_hypotheses_pass() {
        let plan = SamplePlan::default();
        for spec in [
            ProblemSpec::polynomial_preset(unit_domain()),
            ProblemSpec::exponential_planar_preset(unit_domain()),
        ] {
            let report = verify_conditions(&spec, &plan);
            assert!(
                report.all_pass(),
                "expected a clean report, got:\n{report}"
            );
        }
    }

    #[test]
    fn negative_density_fails_growth_compatibility() {
        let spec = ProblemSpec::new(
            unit_domain(),
            NonlinearityModel::polynomial(1.4, 1.2, 0.2).unwrap(),
            NonlocalModel::custom(Arc::new(|_| -1.0), Arc::new(|_| 0.0)),
            CoefficientModel::identity(),
        )
        .unwrap();
        let report = verify_conditions(&spec, &SamplePlan::default());
        let check = report.get("growth_compatibility").unwrap();
        assert_eq!(check.verdict, ConditionVerdict::Fail);
        assert!(check.witness.is_some(), "failures must carry a witness");
    }

    #[test]
    fn linear_nonlinearity_fails_superquadratic() {
        let spec = ProblemSpec::new(
            unit_domain(),
            NonlinearityModel::linear(1.0),
            NonlocalModel::power_q(3.0).unwrap(),
            CoefficientModel::identity(),
        )
        .unwrap();
        let report = verify_conditions(&spec, &SamplePlan::default());
        let check = report.get("superquadratic_growth").unwrap();
        assert_eq!(check.verdict, ConditionVerdict::Fail);
        assert!(check.witness.is_some());
    }

    #[test]
    fn non_saturating_coefficient_fails_saturation() {
        let a = CoefficientModel::custom_raw(
            Arc::new(|xi: f64, eta: f64, z: f64| {
                1.0 + 0.5 * (std::f64::consts::PI * xi).sin() * (std::f64::consts::PI * eta).sin()
                    / (1.0 + z * z)
            }),
            Arc::new(|_, _, _| 0.0), // derivative irrelevant for the check
            1.0,
            1.0,
        )
        .unwrap();
        let spec = ProblemSpec::new(
            unit_domain(),
            NonlinearityModel::polynomial(1.4, 1.2, 0.2).unwrap(),
            NonlocalModel::power_q(3.0).unwrap(),
            a,
        )
        .unwrap();
        let report = verify_conditions(&spec, &SamplePlan::default());
        let check = report.get("coefficient_saturation").unwrap();
        assert_eq!(check.verdict, ConditionVerdict::Fail);
        assert!(check.witness.is_some());
    }
}
