//! Decides the fate of a trajectory: decay to zero, finite-time blow-up, or
//! undecided within the horizon.
//!
//! Decay is declared when the H¹ norm falls below a threshold, blow-up when
//! the L² norm crosses a cap, an overflow clamp fires, the log-slope of
//! `‖u‖²` stays above a growth rate twice in a row, or (as a last resort on
//! clearly growing trajectories) the concavity functional flags the tail.
//!
//! The concavity functional is `ℓ(t) = H(t)^{−γ/2}` with
//! `H(t) = ½∫₀ᵗ ‖u(s)‖² ds`: along blow-up trajectories `ℓ` is concave and
//! decreasing toward zero, along decaying ones it flattens out convexly.
//!
//! [`blowup_sufficient`] evaluates an a-priori certificate: blow-up is
//! guaranteed when `‖u₀‖_{H¹} > K*` and `E(u₀) < min(−M̂, −K/(2+γ))`, where
//! `−M̂ = inf {E(v) : ‖v‖_{H¹} = K*}` is estimated by multi-start projected
//! gradient descent on the sphere.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::flow::{
    evolve, FlowError, FlowTrace, StepperConfig, StopRules, TerminalStatus, TraceRow,
};
use crate::grid::{
    energy, laplacian_apply, norm_h1, norm_l2, GridFunction, RectDomain, SpectralBasis,
};
use crate::model::{ModelError, ProblemSpec};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("classifier config invalid: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct ClassifierConfig {
    pub stepper: StepperConfig,
    /// Decay verdict once `‖u‖_{H¹}` drops below this.
    pub eps_decay: f64,
    /// Blow-up verdict once `‖u‖_{L²}` crosses this.
    pub m_blow: f64,
    pub t_max: f64,
    /// Window length (trace rows) for the log-slope growth fit.
    pub growth_window: usize,
    /// Norm level above which the energy should decrease strictly; also the
    /// sphere radius used by the blow-up certificate.
    pub kstar: f64,
    /// A-priori energy-decrease rate floor. Recorded against the empirical
    /// rate in the report; not enforced (no constructive value is available).
    pub delta_e: f64,
}

impl ClassifierConfig {
    /// Defaults for a given grid: `K* = 10·‖e₁‖_{H¹}/‖e₁‖_{L²} = 10·√λ₁`.
    pub fn for_domain(domain: &RectDomain) -> Self {
        let lam1 = crate::grid::eigenvalue(domain, 1, 1);
        Self {
            stepper: StepperConfig {
                sample_stride: 1,
                ..StepperConfig::for_domain(domain)
            },
            eps_decay: 1e-6,
            m_blow: 1e6,
            t_max: 50.0,
            growth_window: 10,
            kstar: 10.0 * lam1.sqrt(),
            delta_e: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        if !(self.eps_decay > 0.0 && self.m_blow > 0.0 && self.eps_decay < 1e-3 * self.m_blow) {
            return Err(ClassifyError::BadConfig(format!(
                "need eps_decay << m_blow, got {} vs {}",
                self.eps_decay, self.m_blow
            )));
        }
        if !(self.t_max > 0.0) {
            return Err(ClassifyError::BadConfig(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if self.growth_window < 5 {
            return Err(ClassifyError::BadConfig(format!(
                "growth_window must be at least 5, got {}",
                self.growth_window
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    DecayToZero,
    BlowUp,
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        w.write_str(match self {
            Self::DecayToZero => "decay_to_zero",
            Self::BlowUp => "blow_up",
            Self::Undecided => "undecided",
        })
    }
}

/// What tipped the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    NormThreshold,
    Overflow,
    Concavity,
    ExpGrowth,
    /// Used by report assembly when the a-priori certificate upgrades an
    /// undecided trajectory; never set by `classify_trajectory` itself.
    SufficientCondition,
}

impl fmt::Display for Trigger {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        w.write_str(match self {
            Self::NormThreshold => "norm_threshold",
            Self::Overflow => "overflow",
            Self::Concavity => "concavity",
            Self::ExpGrowth => "exp_growth",
            Self::SufficientCondition => "sufficient_condition",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub verdict: Verdict,
    /// Detection time for decided verdicts; the horizon for undecided ones.
    pub t_detect: f64,
    pub trigger: Option<Trigger>,
    pub status: TerminalStatus,
    pub energy_u0: f64,
    pub h1_u0: f64,
    /// Worst (smallest) energy-decrease rate observed while `‖u‖_{H¹} > K*`;
    /// `None` when the trajectory never visited that regime.
    pub observed_decrease_rate: Option<f64>,
    pub diagnostic: String,
}

/// Least-squares slope of `ln ‖u‖²` against `t` over the given rows.
fn log_growth_slope(rows: &[TraceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.l2 > 0.0 && r.l2.is_finite())
        .map(|r| (r.t, 2.0 * r.l2.ln()))
        .collect();
    if pts.len() < rows.len() || pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Rate threshold the growth detector fits against.
const GROWTH_SLOPE_MIN: f64 = 0.5;
/// Number of evolve segments; fate checks run between segments and per row.
const SEGMENTS: usize = 64;

/// Classify the trajectory from `u0`. Returns the verdict together with the
/// full (stride-sampled) trace that produced it, so downstream consumers can
/// inspect the evidence. Deterministic: same inputs, same verdict.
pub fn classify_trajectory(
    u0: &GridFunction,
    spec: &ProblemSpec,
    cfg: &ClassifierConfig,
) -> Result<(Classification, FlowTrace), ClassifyError> {
    cfg.validate()?;
    let h1_u0 = norm_h1(u0);
    let energy_u0 = energy(u0, spec).unwrap_or(f64::NAN);

    let mut report = Classification {
        verdict: Verdict::Undecided,
        t_detect: cfg.t_max,
        trigger: None,
        status: TerminalStatus::ReachedTEnd,
        energy_u0,
        h1_u0,
        observed_decrease_rate: None,
        diagnostic: String::new(),
    };

    if h1_u0 <= cfg.eps_decay {
        report.verdict = Verdict::DecayToZero;
        report.t_detect = 0.0;
        report.trigger = Some(Trigger::NormThreshold);
        let out = evolve(spec, u0.clone(), &cfg.stepper, &StopRules::until(0.0))?;
        return Ok((report, out.trace));
    }

    let mut trace = FlowTrace::default();
    let mut u = u0.clone();
    let mut t_base = 0.0;
    let mut growth_hits = 0usize;
    let seg_len = cfg.t_max / SEGMENTS as f64;
    // The cap must certify growth: a datum that starts above m_blow and
    // merely decays slowly is not blowing up, so the trigger arms at 100×
    // the initial size when that is larger.
    let blow_cap = cfg.m_blow.max(100.0 * norm_l2(u0));

    'segments: for seg in 0..SEGMENTS {
        let rules = StopRules {
            t_end: seg_len,
            max_steps: 10_000_000,
            linf_cap: Some(blow_cap),
            stationary_tol: None,
        };
        let out = evolve(spec, u, &cfg.stepper, &rules)?;
        let skip_first = if seg == 0 { 0 } else { 1 };
        for row in out.trace.rows.iter().skip(skip_first) {
            let mut r = *row;
            r.t += t_base;
            trace.rows.push(r);
            if r.l2 >= blow_cap {
                report.verdict = Verdict::BlowUp;
                report.t_detect = r.t;
                report.trigger = Some(Trigger::NormThreshold);
                break 'segments;
            }
            if r.h1 <= cfg.eps_decay {
                report.verdict = Verdict::DecayToZero;
                report.t_detect = r.t;
                report.trigger = Some(Trigger::NormThreshold);
                break 'segments;
            }
            if trace.rows.len() >= cfg.growth_window {
                let tail = &trace.rows[trace.rows.len() - cfg.growth_window..];
                match log_growth_slope(tail) {
                    Some(slope) if slope > GROWTH_SLOPE_MIN => {
                        growth_hits += 1;
                        if growth_hits >= 2 {
                            report.verdict = Verdict::BlowUp;
                            report.t_detect = r.t;
                            report.trigger = Some(Trigger::ExpGrowth);
                            break 'segments;
                        }
                    }
                    _ => growth_hits = 0,
                }
            }
        }
        report.status = out.status;
        match out.status {
            TerminalStatus::Overflow => {
                report.verdict = Verdict::BlowUp;
                report.t_detect = t_base + out.state.t;
                report.trigger = Some(Trigger::Overflow);
                break;
            }
            TerminalStatus::NormCapExceeded => {
                report.verdict = Verdict::BlowUp;
                report.t_detect = t_base + out.state.t;
                report.trigger = Some(Trigger::NormThreshold);
                break;
            }
            TerminalStatus::SolverFailure | TerminalStatus::MaxSteps => {
                // Map a dead solver to blow-up only when the norm history was
                // already monotonically growing; otherwise stay honest.
                let rows = &trace.rows;
                let n = rows.len();
                let growing = n >= 4
                    && rows[n - 3..].windows(2).all(|w| w[1].l2 > w[0].l2)
                    && rows[n - 1].l2 > 2.0 * rows[0].l2;
                if out.status == TerminalStatus::SolverFailure && growing {
                    report.verdict = Verdict::BlowUp;
                    report.t_detect = t_base + out.state.t;
                    report.trigger = Some(Trigger::Overflow);
                    report.diagnostic = "solver failure during monotone norm growth".into();
                } else {
                    report.verdict = Verdict::Undecided;
                    report.t_detect = cfg.t_max;
                    report.diagnostic = format!("stopped early: {}", out.status);
                }
                break;
            }
            _ => {}
        }
        t_base += out.state.t;
        u = out.state.u;
    }

    // Last-resort concavity check: only for trajectories that are clearly
    // growing yet crossed no threshold within the horizon.
    if report.verdict == Verdict::Undecided && report.diagnostic.is_empty() {
        let rows = &trace.rows;
        if rows.len() >= 8 && rows.last().unwrap().l2 > 10.0 * rows[0].l2.max(1e-300) {
            let ind = concavity_indicator(&trace, spec.f.gamma);
            if ind.tail_concave_fraction >= 0.9 {
                report.verdict = Verdict::BlowUp;
                report.t_detect = rows.last().unwrap().t;
                report.trigger = Some(Trigger::Concavity);
            }
        }
    }

    // Empirical strict-decrease rate above K*: worst observed −dE/dt there.
    let mut rate: Option<f64> = None;
    for w in trace.rows.windows(2) {
        let span = w[1].t - w[0].t;
        if span <= 0.0 || !w[0].energy.is_finite() || !w[1].energy.is_finite() {
            continue;
        }
        if w[0].h1 > cfg.kstar && w[1].h1 > cfg.kstar {
            let r = (w[0].energy - w[1].energy) / span;
            rate = Some(match rate {
                Some(old) => old.min(r),
                None => r,
            });
        }
    }
    report.observed_decrease_rate = rate;

    Ok((report, trace))
}

// ---------------------------------------------------------------------------
// Concavity functional
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ConcavityPoint {
    pub t: f64,
    /// `H(t) = ½ ∫₀ᵗ ‖u(s)‖²_{L²} ds` by cumulative trapezoid.
    pub h: f64,
    /// `ℓ(t) = H(t)^{−γ/2}`.
    pub ell: f64,
}

#[derive(Debug, Clone)]
pub struct ConcavityIndicator {
    pub series: Vec<ConcavityPoint>,
    /// Index where the tail window starts (last quarter, at least 5 points).
    pub tail_start: usize,
    /// Fraction of tail triples where `ℓ` is both concave (nonpositive
    /// second difference) and strictly decreasing — the blow-up signature.
    pub tail_concave_fraction: f64,
}

/// Second difference on a nonuniform 3-point stencil.
fn second_difference(t0: f64, y0: f64, t1: f64, y1: f64, t2: f64, y2: f64) -> f64 {
    2.0 * (y0 / ((t1 - t0) * (t2 - t0)) - y1 / ((t1 - t0) * (t2 - t1))
        + y2 / ((t2 - t1) * (t2 - t0)))
}

/// Evaluate the concavity functional along a trace. An identically zero
/// trajectory has `H ≡ 0` and yields an empty series.
pub fn concavity_indicator(trace: &FlowTrace, gamma: f64) -> ConcavityIndicator {
    assert!(gamma > 0.0, "concavity exponent must be positive");
    let rows = &trace.rows;
    let mut series = Vec::with_capacity(rows.len());
    let mut h = 0.0;
    for w in rows.windows(2) {
        let span = w[1].t - w[0].t;
        if span <= 0.0 {
            continue;
        }
        h += 0.25 * span * (w[0].l2 * w[0].l2 + w[1].l2 * w[1].l2);
        if h > 0.0 && h.is_finite() {
            series.push(ConcavityPoint {
                t: w[1].t,
                h,
                ell: h.powf(-gamma / 2.0),
            });
        }
    }
    if series.len() < 3 {
        return ConcavityIndicator {
            series,
            tail_start: 0,
            tail_concave_fraction: 0.0,
        };
    }
    let tail_len = (series.len() / 4).max(5).min(series.len());
    let tail_start = series.len() - tail_len;
    let tail = &series[tail_start..];
    let mut concave = 0usize;
    let mut total = 0usize;
    for w in tail.windows(3) {
        let d2 = second_difference(w[0].t, w[0].ell, w[1].t, w[1].ell, w[2].t, w[2].ell);
        total += 1;
        if d2 <= 0.0 && w[0].ell > w[1].ell && w[1].ell > w[2].ell {
            concave += 1;
        }
    }
    ConcavityIndicator {
        series,
        tail_start,
        tail_concave_fraction: if total == 0 {
            0.0
        } else {
            concave as f64 / total as f64
        },
    }
}

// ---------------------------------------------------------------------------
// Sphere minimization and the blow-up certificate
// ---------------------------------------------------------------------------

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Energy, tolerating quadrature failure (treated as +∞ so the probe loses).
fn energy_or_inf(u: &GridFunction, spec: &ProblemSpec) -> f64 {
    match energy(u, spec) {
        Ok(e) if e.is_finite() => e,
        _ => f64::INFINITY,
    }
}

/// Rescale onto the H¹ sphere of radius `kstar`.
fn project_sphere(u: &GridFunction, kstar: f64) -> Option<GridFunction> {
    let n = norm_h1(u);
    if n <= 0.0 || !n.is_finite() {
        return None;
    }
    Some(u.scaled(kstar / n))
}

/// Projected gradient descent of `E` on the sphere from one start; returns
/// the lowest energy reached.
fn descend_on_sphere(start: &GridFunction, spec: &ProblemSpec, kstar: f64) -> f64 {
    let Some(mut u) = project_sphere(start, kstar) else {
        return f64::INFINITY;
    };
    let mut e = energy_or_inf(&u, spec);
    let mut eta = 0.1;
    for _ in 0..120 {
        let mut grad = laplacian_apply(&u);
        for (g, &v) in grad.values.iter_mut().zip(&u.values) {
            *g -= spec.f.f_eval(v);
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut cand = u.clone();
            cand.axpy(-eta, &grad);
            let Some(cand) = project_sphere(&cand, kstar) else {
                eta *= 0.5;
                continue;
            };
            let e_cand = energy_or_inf(&cand, spec);
            if e_cand < e - 1e-12 * e.abs().max(1.0) {
                u = cand;
                e = e_cand;
                eta *= 1.5;
                improved = true;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
    }
    e
}

/// Estimate `M̂` where `−M̂ = inf {E(v) : ‖v‖_{H¹} = K*}` by multi-start
/// projected gradient descent: the first starts are low eigenmodes (both
/// signs), the rest seeded random fields. Returns `−(lowest energy found)`.
/// Start `i` depends only on `(seed, i)`, so enlarging the budget keeps all
/// earlier probes and can only lower the energy estimate — the reported
/// infimum estimate `−M̂` is nonincreasing in the budget.
pub fn estimate_mhat(spec: &ProblemSpec, kstar: f64, budget: usize, seed: u64) -> f64 {
    assert!(budget >= 1, "need at least one restart");
    assert!(kstar > 0.0, "sphere radius must be positive");
    let domain = spec.domain;
    let basis = SpectralBasis::new(domain).ok();
    let starts: Vec<GridFunction> = (0..budget)
        .map(|i| {
            let seeded = 8usize;
            if i < seeded {
                if let Some(b) = &basis {
                    let mode = b.modes[(i / 2).min(b.modes.len() - 1)];
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    return crate::grid::eigenmode(&domain, mode.k, mode.l)
                        .expect("mode indices from the basis are valid")
                        .scaled(sign);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(GOLDEN));
            GridFunction {
                domain,
                values: (0..domain.n_total())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect(),
            }
        })
        .collect();
    let energies: Vec<f64> = starts
        .par_iter()
        .map(|s| descend_on_sphere(s, spec, kstar))
        .collect();
    let best = energies.into_iter().fold(f64::INFINITY, f64::min);
    -best
}

/// Certificate for the a-priori blow-up condition.
#[derive(Debug, Clone)]
pub struct BlowupCertificate {
    pub kstar: f64,
    pub m_hat_est: f64,
    pub energy_u0: f64,
    pub h1_u0: f64,
    /// `min(−M̂_est, −K/(2+γ))` — the bar `E(u₀)` must clear from below.
    pub energy_bar: f64,
    pub satisfied: bool,
    pub note: String,
}

/// True iff `‖u₀‖_{H¹} > K*` and `E(u₀) < min(−M̂_est, −K/(2+γ))`.
pub fn blowup_sufficient(
    u0: &GridFunction,
    spec: &ProblemSpec,
    cfg: &ClassifierConfig,
    budget: usize,
    seed: u64,
) -> Result<BlowupCertificate, ClassifyError> {
    let energy_u0 = energy(u0, spec)?;
    let h1_u0 = norm_h1(u0);
    let m_hat_est = estimate_mhat(spec, cfg.kstar, budget, seed);
    let energy_bar = (-m_hat_est).min(-spec.a.k / (2.0 + spec.f.gamma));
    let satisfied = h1_u0 > cfg.kstar && energy_u0 < energy_bar;
    let note = if m_hat_est < 0.0 {
        "no negative energy found on the sphere".to_string()
    } else {
        String::new()
    };
    Ok(BlowupCertificate {
        kstar: cfg.kstar,
        m_hat_est,
        energy_u0,
        h1_u0,
        energy_bar,
        satisfied,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{eigenmode, RectDomain};
    use crate::model::NonlinearityModel;

    fn unit(n: usize) -> RectDomain {
        RectDomain::unit(n).unwrap()
    }

    fn quick_cfg(d: &RectDomain, t_max: f64) -> ClassifierConfig {
        let mut cfg = ClassifierConfig::for_domain(d);
        cfg.t_max = t_max;
        cfg
    }

    #[test]
    fn zero_datum_decays_immediately() {
        let d = unit(7);
        let spec = ProblemSpec::polynomial_preset(d);
        let cfg = quick_cfg(&d, 1.0);
        let (c, _) = classify_trajectory(&GridFunction::zeros(d), &spec, &cfg).unwrap();
        assert_eq!(c.verdict, Verdict::DecayToZero);
        assert_eq!(c.t_detect, 0.0);
        assert_eq!(c.trigger, Some(Trigger::NormThreshold));
    }

    #[test]
    fn small_datum_decays() {
        let d = unit(9);
        let spec = ProblemSpec::polynomial_preset(d);
        let cfg = quick_cfg(&d, 5.0);
        let u0 = eigenmode(&d, 1, 1).unwrap().scaled(0.001);
        let (c, trace) = classify_trajectory(&u0, &spec, &cfg).unwrap();
        assert_eq!(c.verdict, Verdict::DecayToZero, "diag: {}", c.diagnostic);
        assert!(c.t_detect > 0.0 && c.t_detect < 5.0);
        // Decaying tails must not look like blow-up to the concavity test.
        let ind = concavity_indicator(&trace, spec.f.gamma);
        assert!(
            ind.tail_concave_fraction <= 0.1,
            "decay misread as concave: fraction = {}",
            ind.tail_concave_fraction
        );
    }

    #[test]
    fn cubic_large_datum_blows_up() {
        let d = unit(9);
        let spec = ProblemSpec::cubic_preset(d);
        let cfg = quick_cfg(&d, 2.0);
        let u0 = eigenmode(&d, 1, 1).unwrap().scaled(50.0);
        let (c, trace) = classify_trajectory(&u0, &spec, &cfg).unwrap();
        assert_eq!(c.verdict, Verdict::BlowUp, "diag: {}", c.diagnostic);
        assert!(c.t_detect.is_finite() && c.t_detect < 2.0);
        assert!(c.trigger.is_some());
        let ind = concavity_indicator(&trace, spec.f.gamma);
        assert!(
            ind.tail_concave_fraction >= 0.9,
            "blow-up tail must be concave: fraction = {}, rows = {}",
            ind.tail_concave_fraction,
            trace.rows.len()
        );
    }

    #[test]
    fn concavity_of_zero_trajectory_is_empty() {
        let d = unit(7);
        let spec = ProblemSpec::heat_preset(d);
        let cfg = quick_cfg(&d, 0.2);
        let (_, trace) = classify_trajectory(&GridFunction::zeros(d), &spec, &cfg).unwrap();
        let ind = concavity_indicator(&trace, 1.0);
        assert!(ind.series.is_empty(), "H stays identically zero");
        assert_eq!(ind.tail_concave_fraction, 0.0);
    }

    #[test]
    fn mhat_on_pure_heat_is_minus_half_kstar_squared() {
        // f ≡ 0: E = ½‖v‖²_{H¹} = K*²/2 everywhere on the sphere.
        let d = unit(7);
        let spec = ProblemSpec::heat_preset(d);
        let kstar = 3.0;
        let m = estimate_mhat(&spec, kstar, 4, 1);
        let want = -kstar * kstar / 2.0;
        assert!(
            (m - want).abs() <= 1e-9 * want.abs(),
            "expected {want}, got {m}"
        );
    }

    #[test]
    fn mhat_never_exceeds_any_single_probe() {
        // A single-mode probe gives an explicit upper bound for inf E.
        let d = unit(9);
        let spec = ProblemSpec::polynomial_preset(d);
        let kstar = 5.0;
        let e1 = eigenmode(&d, 1, 1).unwrap();
        let probe = e1.scaled(kstar / norm_h1(&e1));
        let e_probe = energy(&probe, &spec).unwrap();
        let m = estimate_mhat(&spec, kstar, 8, 7);
        assert!(
            -m <= e_probe + 1e-12 * e_probe.abs().max(1.0),
            "descent must do at least as well as its own seed: inf-est {} vs probe {e_probe}",
            -m
        );
    }

    #[test]
    fn mhat_budget_is_prefix_monotone() {
        let d = unit(9);
        let spec = ProblemSpec::cubic_preset(d);
        let a = estimate_mhat(&spec, 4.0, 4, 42);
        let b = estimate_mhat(&spec, 4.0, 8, 42);
        // More starts can only lower the infimum estimate −M̂.
        assert!(
            -b <= -a + 1e-15,
            "doubling the budget must not raise the energy estimate: {} vs {}",
            -b,
            -a
        );
    }

    #[test]
    fn mhat_is_deterministic() {
        let d = unit(9);
        let spec = ProblemSpec::cubic_preset(d);
        let a = estimate_mhat(&spec, 4.0, 6, 9);
        let b = estimate_mhat(&spec, 4.0, 6, 9);
        assert_eq!(a.to_bits(), b.to_bits(), "same seed, same estimate");
    }

    #[test]
    fn certificate_rejects_nonnegative_energy() {
        let d = unit(9);
        let spec = ProblemSpec::cubic_preset(d);
        let cfg = quick_cfg(&d, 1.0);
        let u0 = eigenmode(&d, 1, 1).unwrap().scaled(0.01);
        let cert = blowup_sufficient(&u0, &spec, &cfg, 4, 1).unwrap();
        assert!(cert.energy_u0 >= 0.0, "tiny data has positive energy");
        assert!(!cert.satisfied);
    }

    #[test]
    fn certificate_accepts_deeply_negative_energy() {
        let d = unit(9);
        let spec = ProblemSpec::cubic_preset(d);
        let cfg = quick_cfg(&d, 1.0);
        let u0 = eigenmode(&d, 1, 1).unwrap().scaled(50.0);
        let cert = blowup_sufficient(&u0, &spec, &cfg, 8, 1).unwrap();
        assert!(
            cert.satisfied,
            "E(50 e1) = {} must clear the bar {}",
            cert.energy_u0, cert.energy_bar
        );
        assert!(cert.h1_u0 > cert.kstar);
        // Consistency invariant: a true certificate forbids a decay verdict.
        let (c, _) = classify_trajectory(&u0, &spec, &cfg).unwrap();
        assert_ne!(c.verdict, Verdict::DecayToZero);
    }

    #[test]
    fn certificate_reduces_to_energy_test_as_k_vanishes() {
        // a ≡ 1 with tiny K: the −K/(2+γ) arm of the bar goes to 0, so the
        // certificate is governed by −M̂ alone.
        let d = unit(9);
        let f = NonlinearityModel::pure_power(3.0, 2.0).unwrap();
        let g = crate::model::NonlocalModel::power_q(2.0).unwrap();
        let a = crate::model::CoefficientModel::factored(
            crate::model::SpatialProfile::Zero,
            crate::model::CutoffProfile::QuarticBump { scale: 1.0 },
            1e-9,
        )
        .unwrap();
        let spec = ProblemSpec::new(d, f, g, a).unwrap();
        let cfg = quick_cfg(&d, 1.0);
        let u0 = eigenmode(&d, 1, 1).unwrap().scaled(50.0);
        let cert = blowup_sufficient(&u0, &spec, &cfg, 8, 1).unwrap();
        let m_hat = estimate_mhat(&spec, cfg.kstar, 8, 1);
        assert!(
            (cert.energy_bar - (-m_hat)).abs() <= 1e-12 * m_hat.abs().max(1.0),
            "for K -> 0 the bar must equal −M̂: bar = {}, −M̂ = {}",
            cert.energy_bar,
            -m_hat
        );
        assert_eq!(cert.satisfied, cert.energy_u0 < -m_hat && cert.h1_u0 > cert.kstar);
    }

    #[test]
    fn classification_replays_identically() {
        let d = unit(9);
        let spec = ProblemSpec::polynomial_preset(d);
        let cfg = quick_cfg(&d, 1.0);
        let u0 = eigenmode(&d, 1, 1).unwrap().scaled(0.05);
        let (c1, t1) = classify_trajectory(&u0, &spec, &cfg).unwrap();
        let (c2, t2) = classify_trajectory(&u0, &spec, &cfg).unwrap();
        assert_eq!(c1.verdict, c2.verdict);
        assert_eq!(c1.t_detect.to_bits(), c2.t_detect.to_bits());
        assert_eq!(t1.to_csv(), t2.to_csv(), "traces must replay byte for byte");
    }
}
