//! Basin-boundary search and steady-state extraction.
//!
//! Along a fixed direction `v`, small multiples decay to zero while large
//! ones blow up; the boundary scalar `s*` between the two regimes is found by
//! geometric bracketing plus bisection on the classifier verdict. Trajectories
//! started just next to `s*·v` hover near a nontrivial stationary state
//! before committing to either fate; the snapshot with the smallest `‖u_t‖`
//! is the ω-limit candidate, which a damped Newton iteration with the full
//! rank-one nonlocal Jacobian term polishes into a verified solution of
//!
//! ```text
//! A u = f(u) + Ψ(·, u, ∫g(u))      (equivalently  a(·, z)·A u = f(u)).
//! ```
//!
//! Probes are deterministic, so reruns reproduce brackets and thresholds
//! bit for bit.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::classify::{classify_trajectory, ClassifierConfig, ClassifyError, Verdict};
use crate::flow::{step_imex, FlowError, FlowState, FlowTrace, StepperConfig};
use crate::grid::{energy, laplacian_apply, norm_h1, norm_l2, z_value, GridFunction};
use crate::model::{ModelError, ProblemSpec};

/// Node-count ceiling for the dense Newton stage (LU is O(n³)).
pub const NEWTON_MAX_NODES: usize = 4096;

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("direction field is zero or non-finite")]
    BadDirection,
    #[error("no upper bracket: every probe up to s = {s_cap:.3e} decayed or stayed undecided")]
    NoUpperBracket { s_cap: f64 },
    #[error("no lower bracket: every probe down to s = {s_floor:.3e} blew up or stayed undecided")]
    NoLowerBracket { s_floor: f64 },
    #[error("bisection inconclusive: a midpoint stayed undecided after full escalation")]
    Inconclusive,
    #[error("omega-limit not captured: best ‖u_t‖ = {best_ut:.3e} above the plateau gate {gate:.3e}; tighten tol_s or extend t_extract")]
    PlateauNotCaptured { best_ut: f64, gate: f64 },
    #[error("candidate is numerically trivial: ‖u‖_H1 = {h1:.3e} <= {eps:.3e}")]
    TrivialCandidate { h1: f64, eps: f64 },
    #[error("grid too large for the dense Newton stage: {n} nodes > {max}")]
    GridTooLarge { n: usize, max: usize },
    #[error("Jacobian numerically singular at Newton iteration {iter}")]
    SingularJacobian { iter: usize },
    #[error("stationary refinement diverged: best residual {residual:.3e} above tol {tol:.3e}")]
    RefineDiverged { residual: f64, tol: f64 },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy)]
pub struct ThresholdConfig {
    /// First probe scalar of the geometric bracket search.
    pub s_init: f64,
    /// Give up on finding blow-up beyond this scalar.
    pub s_cap: f64,
    /// Give up on finding decay below this scalar.
    pub s_floor: f64,
    /// Absolute bisection tolerance on the threshold scalar.
    pub tol_s: f64,
    pub max_iters: usize,
    /// Horizon of the ω-limit march.
    pub t_extract: f64,
    /// Plateau gate: the best snapshot must have
    /// `‖u_t‖ ≤ plateau_tol · ‖u‖_{H¹}`.
    pub plateau_tol: f64,
}

impl ThresholdConfig {
    pub fn default_for(ccfg: &ClassifierConfig) -> Self {
        Self {
            s_init: 1.0,
            s_cap: 1e12,
            s_floor: 1e-12,
            tol_s: 1e-3,
            max_iters: 80,
            t_extract: ccfg.t_max,
            plateau_tol: 1e-2,
        }
    }
}

/// Decide one probe: base classification, then the escalation ladder for
/// undecided verdicts — `T_max × 4`, then additionally `dt ÷ 4`, then the
/// energy-sign heuristic (a trajectory with negative energy cannot decay).
/// `Some(true)` means the blow-up side. `None` survives only when even the
/// final energy is unusable.
fn decide_side(
    u0: &GridFunction,
    spec: &ProblemSpec,
    ccfg: &ClassifierConfig,
) -> Result<(Option<bool>, FlowTrace, usize), ThresholdError> {
    let (c, trace) = classify_trajectory(u0, spec, ccfg)?;
    match c.verdict {
        Verdict::DecayToZero => return Ok((Some(false), trace, 0)),
        Verdict::BlowUp => return Ok((Some(true), trace, 0)),
        Verdict::Undecided => {}
    }
    let mut longer = ccfg.clone();
    longer.t_max *= 4.0;
    let (c, trace) = classify_trajectory(u0, spec, &longer)?;
    match c.verdict {
        Verdict::DecayToZero => return Ok((Some(false), trace, 1)),
        Verdict::BlowUp => return Ok((Some(true), trace, 1)),
        Verdict::Undecided => {}
    }
    let mut finer = longer;
    finer.stepper.dt /= 4.0;
    let (c, trace) = classify_trajectory(u0, spec, &finer)?;
    match c.verdict {
        Verdict::DecayToZero => return Ok((Some(false), trace, 2)),
        Verdict::BlowUp => return Ok((Some(true), trace, 2)),
        Verdict::Undecided => {}
    }
    let e_final = trace.last().map(|r| r.energy).unwrap_or(f64::NAN);
    if e_final.is_finite() {
        // E < 0 is incompatible with decay to zero, so side with blow-up.
        Ok((Some(e_final < 0.0), trace, 3))
    } else {
        Ok((None, trace, 3))
    }
}

/// Geometric bracket of the threshold along the ray `s ↦ s·v`. The direction
/// is used exactly as given (callers normalize), so rescaling `v` by `c`
/// rescales the bracket by `1/c`.
#[derive(Debug, Clone)]
pub struct Bracket {
    pub s_low: f64,
    pub s_high: f64,
    pub decay_trace: FlowTrace,
    pub blowup_trace: FlowTrace,
    pub probes: usize,
}

pub fn bracket_ray(
    v: &GridFunction,
    spec: &ProblemSpec,
    ccfg: &ClassifierConfig,
    tcfg: &ThresholdConfig,
) -> Result<Bracket, ThresholdError> {
    if !v.is_finite() || norm_h1(v) == 0.0 {
        return Err(ThresholdError::BadDirection);
    }
    let mut probes = 0usize;
    let mut low: Option<(f64, FlowTrace)> = None;
    let mut high: Option<(f64, FlowTrace)> = None;

    // Upward sweep: find the first blow-up, remembering the last decay.
    let mut s = tcfg.s_init;
    while s <= tcfg.s_cap {
        let (side, trace, _) = decide_side(&v.scaled(s), spec, ccfg)?;
        probes += 1;
        match side {
            Some(false) => low = Some((s, trace)),
            Some(true) => {
                high = Some((s, trace));
                break;
            }
            None => {}
        }
        s *= 2.0;
    }
    let Some((s_high, blowup_trace)) = high else {
        return Err(ThresholdError::NoUpperBracket { s_cap: tcfg.s_cap });
    };

    // Downward sweep only if the upward one never saw a decay.
    if low.is_none() {
        let mut s = tcfg.s_init * 0.5;
        while s >= tcfg.s_floor {
            let (side, trace, _) = decide_side(&v.scaled(s), spec, ccfg)?;
            probes += 1;
            if side == Some(false) {
                low = Some((s, trace));
                break;
            }
            s *= 0.5;
        }
    }
    let Some((s_low, decay_trace)) = low else {
        return Err(ThresholdError::NoLowerBracket {
            s_floor: tcfg.s_floor,
        });
    };
    Ok(Bracket {
        s_low,
        s_high,
        decay_trace,
        blowup_trace,
        probes,
    })
}

/// Plain bisection driver over an abstract probe. `probe(s)` answers
/// `Some(true)` for the upper (blow-up) side, `Some(false)` for the lower;
/// `None` aborts with the inconclusive flag. Returns the final bracket, the
/// bracket history, and whether the run was inconclusive.
pub fn bisect_scalar(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iters: usize,
    mut probe: impl FnMut(f64) -> Option<bool>,
) -> (f64, f64, Vec<(f64, f64)>, bool) {
    let mut history = vec![(lo, hi)];
    for _ in 0..max_iters {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match probe(mid) {
            Some(true) => hi = mid,
            Some(false) => lo = mid,
            None => return (lo, hi, history, true),
        }
        history.push((lo, hi));
    }
    (lo, hi, history, false)
}

#[derive(Debug, Clone)]
pub struct ThresholdResult {
    pub s_star: f64,
    pub s_low: f64,
    pub s_high: f64,
    pub history: Vec<(f64, f64)>,
    /// Trace of the final decay-side endpoint.
    pub decay_trace: FlowTrace,
    /// Trace of the final blow-up-side endpoint.
    pub blowup_trace: FlowTrace,
    pub escalations: usize,
    pub inconclusive: bool,
}

/// Bisect the classifier verdict inside a valid bracket.
pub fn bisect(
    v: &GridFunction,
    bracket: Bracket,
    spec: &ProblemSpec,
    ccfg: &ClassifierConfig,
    tcfg: &ThresholdConfig,
) -> Result<ThresholdResult, ThresholdError> {
    let mut decay_trace = bracket.decay_trace;
    let mut blowup_trace = bracket.blowup_trace;
    let mut escalations = 0usize;
    let mut probe_err: Option<ThresholdError> = None;
    let (s_low, s_high, history, inconclusive) = bisect_scalar(
        bracket.s_low,
        bracket.s_high,
        tcfg.tol_s,
        tcfg.max_iters,
        |s| match decide_side(&v.scaled(s), spec, ccfg) {
            Ok((side, trace, esc)) => {
                escalations += esc;
                match side {
                    Some(true) => blowup_trace = trace,
                    Some(false) => decay_trace = trace,
                    None => {}
                }
                side
            }
            Err(e) => {
                probe_err = Some(e);
                None
            }
        },
    );
    if let Some(e) = probe_err {
        return Err(e);
    }
    Ok(ThresholdResult {
        s_star: 0.5 * (s_low + s_high),
        s_low,
        s_high,
        history,
        decay_trace,
        blowup_trace,
        escalations,
        inconclusive,
    })
}

// ---------------------------------------------------------------------------
// ω-limit extraction
// ---------------------------------------------------------------------------

/// Quasi-stationary snapshot harvested from a near-threshold trajectory.
#[derive(Debug, Clone)]
pub struct OmegaCandidate {
    pub u: GridFunction,
    pub t_snapshot: f64,
    pub ut_l2: f64,
    pub residual_l2: f64,
    pub h1: f64,
    /// +1: taken on the blow-up side of `s*`; −1: on the decay side.
    pub side: i8,
    /// H¹ distance between the two best plateau snapshots at distinct times,
    /// when two exist — the discrete stand-in for ω-limit well-definedness.
    pub cauchy_gap_h1: Option<f64>,
}

struct Snapshot {
    t: f64,
    ut: f64,
    /// `‖u_t‖ / ‖u‖_H¹` — scale-free stationarity. Near a hovering saddle
    /// this is tiny; on the decay tail `u_t ≈ −λ₁ u` keeps it pinned near
    /// `√λ₁`, so ranking by it cannot be fooled by the state shrinking.
    rel: f64,
    u: GridFunction,
}

/// March one near-threshold trajectory, tracking the state of minimal
/// relative velocity `‖u_t‖ / ‖u‖_H¹` among decisively nontrivial states.
fn march_for_plateau(
    u0: GridFunction,
    spec: &ProblemSpec,
    stepper: &StepperConfig,
    t_extract: f64,
    eps_decay: f64,
    eps_nontrivial: f64,
) -> Result<Vec<Snapshot>, ThresholdError> {
    let mut state = FlowState::init(spec, u0);
    let mut improvements: Vec<Snapshot> = Vec::new();
    let mut best_rel = f64::INFINITY;
    while state.t < t_extract && !state.overflow {
        let next = match step_imex(spec, &state, stepper.dt, stepper) {
            Ok(n) => n,
            // A dying solver ends the march; the plateau (if any) is already
            // banked. Typical on the blow-up side after leaving the saddle.
            Err(FlowError::CgStall { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        let mut diff = next.u.clone();
        diff.axpy(-1.0, &state.u);
        let ut = norm_l2(&diff) / stepper.dt;
        let h1 = norm_h1(&next.u);
        if h1 <= eps_decay {
            break; // committed to decay; nothing more to harvest
        }
        if !next.u.is_finite() {
            break;
        }
        let rel = ut / h1;
        if h1 > eps_nontrivial && rel < best_rel {
            best_rel = rel;
            improvements.push(Snapshot {
                t: next.t,
                ut,
                rel,
                u: next.u.clone(),
            });
            if improvements.len() > 8 {
                improvements.remove(0);
            }
        }
        state = next;
    }
    Ok(improvements)
}

/// Extract the ω-limit candidate for the threshold at `s_star` along `v`:
/// both flanking trajectories `(s* ∓ tol_s)·v` are marched, the snapshot of
/// minimal stationary residual wins.
pub fn extract_omega_limit(
    v: &GridFunction,
    s_star: f64,
    spec: &ProblemSpec,
    ccfg: &ClassifierConfig,
    tcfg: &ThresholdConfig,
) -> Result<OmegaCandidate, ThresholdError> {
    let eps_nontrivial = 10.0 * ccfg.eps_decay;
    let mut best: Option<OmegaCandidate> = None;
    for (side, s) in [(-1i8, s_star - tcfg.tol_s), (1i8, s_star + tcfg.tol_s)] {
        if s <= 0.0 {
            continue;
        }
        let improvements = march_for_plateau(
            v.scaled(s),
            spec,
            &ccfg.stepper,
            tcfg.t_extract,
            ccfg.eps_decay,
            eps_nontrivial,
        )?;
        let Some(last) = improvements.last() else {
            continue;
        };
        // Cauchy witness: the previous improvement at a clearly distinct
        // time whose relative velocity is comparable to the final one.
        let cauchy_gap_h1 = improvements
            .iter()
            .rev()
            .skip(1)
            .find(|s| {
                s.rel <= 2.0 * last.rel.max(1e-300) && (last.t - s.t) >= 5.0 * ccfg.stepper.dt
            })
            .map(|s| {
                let mut d = last.u.clone();
                d.axpy(-1.0, &s.u);
                norm_h1(&d)
            });
        let cand = OmegaCandidate {
            residual_l2: residual_norm(&last.u, spec),
            h1: norm_h1(&last.u),
            u: last.u.clone(),
            t_snapshot: last.t,
            ut_l2: last.ut,
            side,
            cauchy_gap_h1,
        };
        // Rank sides by residual relative to state size; the absolute
        // residual would always vote for whichever side shrank further.
        best = match best {
            Some(b) if b.residual_l2 * cand.h1 <= cand.residual_l2 * b.h1 => Some(b),
            _ => Some(cand),
        };
    }
    let Some(cand) = best else {
        return Err(ThresholdError::TrivialCandidate {
            h1: 0.0,
            eps: eps_nontrivial,
        });
    };
    let gate = tcfg.plateau_tol * cand.h1;
    if cand.ut_l2 > gate {
        return Err(ThresholdError::PlateauNotCaptured {
            best_ut: cand.ut_l2,
            gate,
        });
    }
    Ok(cand)
}

// ---------------------------------------------------------------------------
// Stationary residuals and Newton refinement
// ---------------------------------------------------------------------------

/// Stationary residual in the weighted form: `‖a(·, z)·(A u) − f(u)‖_{L²}`
/// with `z = ∫ g(u)`.
pub fn residual_norm(u: &GridFunction, spec: &ProblemSpec) -> f64 {
    let (z, _) = z_value(u, &spec.g);
    let au = laplacian_apply(u);
    let d = u.domain;
    let mut sum = 0.0;
    for iy in 0..d.ny {
        for ix in 0..d.nx {
            let (xi, eta) = d.rel(ix, iy);
            let a = spec.a.a_eval(xi, eta, z);
            let r = a * au.get(ix, iy) - spec.f.f_eval(u.get(ix, iy));
            sum += r * r;
        }
    }
    (d.cell() * sum).sqrt()
}

/// The same residual assembled through the correction term:
/// `‖a · (A u − f(u) − Ψ(·, u, z))‖_{L²}`. Algebraically identical to
/// [`residual_norm`]; the two differ only by floating-point rounding.
pub fn residual_prime_norm(u: &GridFunction, spec: &ProblemSpec) -> f64 {
    let (z, _) = z_value(u, &spec.g);
    let au = laplacian_apply(u);
    let d = u.domain;
    let mut sum = 0.0;
    for iy in 0..d.ny {
        for ix in 0..d.nx {
            let (xi, eta) = d.rel(ix, iy);
            let a = spec.a.a_eval(xi, eta, z);
            let fv = spec.f.f_eval(u.get(ix, iy));
            let psi = if a == 1.0 { 0.0 } else { (1.0 / a - 1.0) * fv };
            let r = a * (au.get(ix, iy) - fv - psi);
            sum += r * r;
        }
    }
    (d.cell() * sum).sqrt()
}

/// Unweighted residual vector `R(u) = A u − f(u)/a(·, z)` the Newton
/// iteration drives to zero (same zero set as the weighted forms).
fn residual_vector(u: &GridFunction, spec: &ProblemSpec) -> GridFunction {
    let (z, _) = z_value(u, &spec.g);
    let mut r = laplacian_apply(u);
    let d = u.domain;
    for iy in 0..d.ny {
        for ix in 0..d.nx {
            let (xi, eta) = d.rel(ix, iy);
            let a = spec.a.a_eval(xi, eta, z);
            let i = iy * d.nx + ix;
            r.values[i] -= spec.f.f_eval(u.values[i]) / a;
        }
    }
    r
}

/// A verified stationary state.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub u_s: GridFunction,
    pub residual_l2: f64,
    pub energy: f64,
    /// Frozen nonlocal value `∫ g(u_s)`.
    pub z_s: f64,
    /// `‖u_s‖_{H¹}` — must clear the nontriviality gate.
    pub nontriviality: f64,
    pub iterations: usize,
}

/// Dense five-point operator minus the local reaction Jacobian:
/// `M = A − diag(f′(u)/a)`.
fn assemble_core(u: &GridFunction, spec: &ProblemSpec, z: f64) -> DMatrix<f64> {
    let d = u.domain;
    let n = d.n_total();
    let ihx2 = 1.0 / (d.hx() * d.hx());
    let ihy2 = 1.0 / (d.hy() * d.hy());
    let mut m = DMatrix::zeros(n, n);
    for iy in 0..d.ny {
        for ix in 0..d.nx {
            let i = iy * d.nx + ix;
            let (xi, eta) = d.rel(ix, iy);
            let a = spec.a.a_eval(xi, eta, z);
            m[(i, i)] = 2.0 * (ihx2 + ihy2) - spec.f.f_prime(u.values[i]) / a;
            if ix > 0 {
                m[(i, i - 1)] = -ihx2;
            }
            if ix + 1 < d.nx {
                m[(i, i + 1)] = -ihx2;
            }
            if iy > 0 {
                m[(i, i - d.nx)] = -ihy2;
            }
            if iy + 1 < d.ny {
                m[(i, i + d.nx)] = -ihy2;
            }
        }
    }
    m
}

/// Solve `(M + w vᵀ) x = b` given an LU of `M`, via the rank-one update
/// formula. Fails on a numerically singular update denominator.
fn solve_rank_one(
    lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    w: &DVector<f64>,
    v: &DVector<f64>,
    b: &DVector<f64>,
) -> Option<DVector<f64>> {
    let y = lu.solve(b)?;
    if w.amax() == 0.0 {
        return Some(y);
    }
    let q = lu.solve(w)?;
    let denom = 1.0 + v.dot(&q);
    if !denom.is_finite() || denom.abs() < 1e-14 {
        return None;
    }
    Some(&y - &q * (v.dot(&y) / denom))
}

/// Frozen-`z` damped Picard fallback: repeat `u ← (1−ω)u + ω A⁻¹(f(u)/a(·,z))`
/// with `z` refreshed each sweep. Linear solves use CG on the SPD operator.
fn picard_fallback(
    mut u: GridFunction,
    spec: &ProblemSpec,
    tol: f64,
) -> Result<(GridFunction, usize), f64> {
    let omega = 0.5;
    let mut best = residual_norm(&u, spec);
    for iter in 0..80 {
        if best <= tol {
            return Ok((u, iter));
        }
        let (z, _) = z_value(&u, &spec.g);
        let d = u.domain;
        let rhs = GridFunction {
            domain: d,
            values: (0..d.n_total())
                .map(|i| {
                    let (ix, iy) = (i % d.nx, i / d.nx);
                    let (xi, eta) = d.rel(ix, iy);
                    spec.f.f_eval(u.values[i]) / spec.a.a_eval(xi, eta, z)
                })
                .collect(),
        };
        // CG on A x = rhs, warm-started at u.
        let mut x = u.clone();
        let mut r = rhs.clone();
        r.axpy(-1.0, &laplacian_apply(&x));
        let mut p = r.clone();
        let dot = |a: &GridFunction, b: &GridFunction| -> f64 {
            a.values.iter().zip(&b.values).map(|(s, t)| s * t).sum()
        };
        let mut rs = dot(&r, &r);
        let target = 1e-24 * dot(&rhs, &rhs).max(1e-300);
        for _ in 0..600 {
            if rs <= target {
                break;
            }
            let ap = laplacian_apply(&p);
            let alpha = rs / dot(&p, &ap);
            if !alpha.is_finite() {
                break;
            }
            x.axpy(alpha, &p);
            r.axpy(-alpha, &ap);
            let rs_new = dot(&r, &r);
            let beta = rs_new / rs;
            rs = rs_new;
            p.scale(beta);
            p.axpy(1.0, &r);
        }
        let mut u_new = u.scaled(1.0 - omega);
        u_new.axpy(omega, &x);
        if !u_new.is_finite() {
            return Err(best);
        }
        let res = residual_norm(&u_new, spec);
        if res >= best * (1.0 - 1e-9) && res > tol {
            return Err(best.min(res));
        }
        best = best.min(res);
        u = u_new;
    }
    if best <= tol {
        Ok((u, 80))
    } else {
        Err(best)
    }
}

/// Polish a near-stationary candidate into a solution with
/// `‖a·Au − f(u)‖ ≤ tol`. Damped Newton with the analytic Jacobian
/// `A − diag(f′/a) + w vᵀ`, `w = f(u)·a_z/a²`, `v = hx·hy·g′(u)`; a detected
/// singular Jacobian is an error, while stalled damping falls back to the
/// frozen-`z` Picard sweep before giving up.
pub fn newton_refine(
    u0: &GridFunction,
    spec: &ProblemSpec,
    tol: f64,
    eps_nontrivial: f64,
) -> Result<SteadyState, ThresholdError> {
    let h1_in = norm_h1(u0);
    if h1_in <= eps_nontrivial {
        return Err(ThresholdError::TrivialCandidate {
            h1: h1_in,
            eps: eps_nontrivial,
        });
    }
    let n = u0.domain.n_total();
    if n > NEWTON_MAX_NODES {
        return Err(ThresholdError::GridTooLarge {
            n,
            max: NEWTON_MAX_NODES,
        });
    }
    let d = u0.domain;
    let mut u = u0.clone();
    let mut res = residual_norm(&u, spec);
    let mut tol_eff = tol;
    for iter in 0..25 {
        // The residual cancels O(‖f(u)‖)-sized terms, so roundoff pins it
        // above a small multiple of epsilon at that scale; large-amplitude
        // states can never reach a fixed absolute tolerance.
        let f_scale = {
            let mut sum = 0.0;
            for &t in &u.values {
                let fv = spec.f.f_eval(t);
                sum += fv * fv;
            }
            (d.cell() * sum).sqrt()
        };
        tol_eff = tol.max(1e3 * f64::EPSILON * f_scale);
        if res <= tol_eff {
            let h1 = norm_h1(&u);
            if h1 <= eps_nontrivial {
                return Err(ThresholdError::TrivialCandidate {
                    h1,
                    eps: eps_nontrivial,
                });
            }
            let (z_s, _) = z_value(&u, &spec.g);
            return Ok(SteadyState {
                residual_l2: res,
                energy: energy(&u, spec).unwrap_or(f64::NAN),
                z_s,
                nontriviality: h1,
                iterations: iter,
                u_s: u,
            });
        }
        let (z, _) = z_value(&u, &spec.g);
        let m = assemble_core(&u, spec, z);
        let lu = m.lu();
        // Proactive singularity detection: collapsed pivot ratio.
        let pivots = lu.u();
        let mut pmin = f64::INFINITY;
        let mut pmax = 0.0f64;
        for i in 0..n {
            let p = pivots[(i, i)].abs();
            pmin = pmin.min(p);
            pmax = pmax.max(p);
        }
        if !(pmin > 1e-12 * pmax) {
            return Err(ThresholdError::SingularJacobian { iter });
        }
        let w = DVector::from_fn(n, |i, _| {
            let (ix, iy) = (i % d.nx, i / d.nx);
            let (xi, eta) = d.rel(ix, iy);
            let a = spec.a.a_eval(xi, eta, z);
            spec.f.f_eval(u.values[i]) * spec.a.a_z_eval(xi, eta, z) / (a * a)
        });
        let v = DVector::from_fn(n, |i, _| d.cell() * spec.g.g_prime(u.values[i]));
        let r = residual_vector(&u, spec);
        let b = DVector::from_column_slice(&r.values);
        let Some(delta) = solve_rank_one(&lu, &w, &v, &b) else {
            return Err(ThresholdError::SingularJacobian { iter });
        };
        let delta_norm: f64 = delta.norm();
        let u_norm: f64 = u.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !delta_norm.is_finite() || delta_norm > 1e10 * (1.0 + u_norm) {
            return Err(ThresholdError::SingularJacobian { iter });
        }
        // Backtracking damping on the weighted residual.
        let mut accepted = false;
        let mut lambda = 1.0;
        for _ in 0..8 {
            let mut u_try = u.clone();
            for (t, dv) in u_try.values.iter_mut().zip(delta.iter()) {
                *t -= lambda * dv;
            }
            let res_try = residual_norm(&u_try, spec);
            if res_try.is_finite() && res_try < res * (1.0 - 0.25 * lambda) {
                u = u_try;
                res = res_try;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // Newton stalled without a singular Jacobian: try Picard.
            return match picard_fallback(u, spec, tol_eff) {
                Ok((u_fixed, extra)) => {
                    let h1 = norm_h1(&u_fixed);
                    if h1 <= eps_nontrivial {
                        return Err(ThresholdError::TrivialCandidate {
                            h1,
                            eps: eps_nontrivial,
                        });
                    }
                    let res = residual_norm(&u_fixed, spec);
                    let (z_s, _) = z_value(&u_fixed, &spec.g);
                    Ok(SteadyState {
                        residual_l2: res,
                        energy: energy(&u_fixed, spec).unwrap_or(f64::NAN),
                        z_s,
                        nontriviality: h1,
                        iterations: iter + extra,
                        u_s: u_fixed,
                    })
                }
                Err(best) => Err(ThresholdError::RefineDiverged {
                    residual: best,
                    tol: tol_eff,
                }),
            };
        }
    }
    Err(ThresholdError::RefineDiverged {
        residual: res,
        tol: tol_eff,
    })
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SteadyReport {
    pub threshold: ThresholdResult,
    pub candidate_residual: f64,
    pub candidate_ut: f64,
    pub candidate_side: i8,
    pub cauchy_gap_h1: Option<f64>,
    pub steady: SteadyState,
    pub eps_nontrivial: f64,
}

/// bracket → bisect → extract → refine, along direction `v` (normalized
/// internally to unit H¹ norm).
pub fn steady_pipeline(
    v: &GridFunction,
    spec: &ProblemSpec,
    ccfg: &ClassifierConfig,
    tcfg: &ThresholdConfig,
    refine_tol: f64,
) -> Result<SteadyReport, ThresholdError> {
    let nv = norm_h1(v);
    if nv == 0.0 || !nv.is_finite() {
        return Err(ThresholdError::BadDirection);
    }
    let v_hat = v.scaled(1.0 / nv);
    let bracket = bracket_ray(&v_hat, spec, ccfg, tcfg)?;
    let th = bisect(&v_hat, bracket, spec, ccfg, tcfg)?;
    if th.inconclusive {
        return Err(ThresholdError::Inconclusive);
    }
    let cand = extract_omega_limit(&v_hat, th.s_star, spec, ccfg, tcfg)?;
    let eps_nontrivial = 10.0 * ccfg.eps_decay;
    let steady = newton_refine(&cand.u, spec, refine_tol, eps_nontrivial)?;
    Ok(SteadyReport {
        threshold: th,
        candidate_residual: cand.residual_l2,
        candidate_ut: cand.ut_l2,
        candidate_side: cand.side,
        cauchy_gap_h1: cand.cauchy_gap_h1,
        steady,
        eps_nontrivial,
    })
}
