//! Time integration of `u_t + A u = f(u) + Ψ(x, u, z)` with `A = −Δ_h`.
//!
//! The stepper is IMEX backward-Euler: diffusion implicit, reaction explicit,
//!
//! ```text
//! (I + dt A) u⁺ = u + dt (f(u) + Ψ(x, u, z)),
//! ```
//!
//! solved matrix-free by conjugate gradients warm-started at `u`. Steps whose
//! reaction norm jumps by more than a factor of ten are rejected and retried
//! with half the step, which keeps the integrator honest as trajectories
//! accelerate toward blow-up. Overflow clamps in the reaction are treated as
//! a terminal event, not an error: the state is frozen and reported.
//!
//! [`mild_solution`] is an independent reference integrator: Picard iteration
//! on the Duhamel formula in the sine eigenbasis with trapezoid quadrature in
//! time. It shares no code with the stepper beyond the model evaluations, so
//! agreement between the two is meaningful evidence.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{
    energy, laplacian_apply, norm_h1, norm_l2, z_value, GridError, GridFunction, SpectralBasis,
};
use crate::model::{ModelError, ProblemSpec};

/// Reaction magnitudes beyond this are treated as numerical blow-up even
/// before the exponent clamp fires.
pub const REACTION_CAP: f64 = 1e150;

/// Smallest fraction of the base step the retry loop will try: `2⁻⁴⁰`.
pub const MIN_DT_FRACTION: f64 = 9.094947017729282e-13;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("conjugate gradient stalled: residual {residual:.3e} above target {target:.3e} after {iters} iterations")]
    CgStall {
        residual: f64,
        target: f64,
        iters: usize,
    },
    #[error("state contains non-finite values at t = {t}")]
    NonFinite { t: f64 },
    #[error("mild-solution Picard iteration stalled: delta {delta:.3e} above tol {tol:.3e}")]
    PicardStall { delta: f64, tol: f64 },
    #[error("mild-solution oracle overflowed; amplitude out of range for the reference integrator")]
    OracleOverflow,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Instantaneous state of the flow: field, time, nonlocal value, and whether
/// an overflow clamp has fired (a sticky flag).
#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: GridFunction,
    pub t: f64,
    pub z: f64,
    pub overflow: bool,
}

impl FlowState {
    /// Wrap an initial field, computing its nonlocal value.
    pub fn init(spec: &ProblemSpec, u: GridFunction) -> Self {
        let (z, flagged) = z_value(&u, &spec.g);
        Self {
            u,
            t: 0.0,
            z,
            overflow: flagged,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepperConfig {
    /// Base time step; the retry loop may locally shrink it.
    pub dt: f64,
    /// Relative CG tolerance on the linear residual.
    pub solver_tol: f64,
    pub max_cg_iters: usize,
    /// Record every n-th accepted step in the trace (first and last always).
    pub sample_stride: usize,
}

impl StepperConfig {
    /// Stability-flavoured default: `dt = min(h²/4, 1e-3)`. The implicit
    /// diffusion needs no CFL bound; this keeps the explicit reaction and the
    /// O(dt) splitting error in check.
    pub fn for_domain(domain: &crate::grid::RectDomain) -> Self {
        let h = domain.hx().min(domain.hy());
        Self {
            dt: (0.25 * h * h).min(1e-3),
            solver_tol: 1e-10,
            max_cg_iters: 500,
            sample_stride: 10,
        }
    }
}

/// Why [`evolve`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalStatus {
    /// Integrated through the requested horizon.
    ReachedTEnd,
    /// `‖u_t‖ L²` fell below the stationary tolerance.
    Stationary,
    /// An overflow clamp fired in the reaction or density.
    Overflow,
    /// `‖u‖∞` crossed the configured cap.
    NormCapExceeded,
    /// Step budget exhausted before anything else happened.
    MaxSteps,
    /// Step-size underflow in the retry loop or an unrecoverable solver stall.
    SolverFailure,
}

impl fmt::Display for TerminalStatus {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::ReachedTEnd => "reached_t_end",
            Self::Stationary => "stationary",
            Self::Overflow => "overflow",
            Self::NormCapExceeded => "norm_cap_exceeded",
            Self::MaxSteps => "max_steps",
            Self::SolverFailure => "solver_failure",
        };
        w.write_str(s)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StopRules {
    pub t_end: f64,
    pub max_steps: usize,
    /// Stop with [`TerminalStatus::NormCapExceeded`] once `‖u‖∞` crosses this.
    pub linf_cap: Option<f64>,
    /// Stop with [`TerminalStatus::Stationary`] once `‖u_t‖ L²` drops below this.
    pub stationary_tol: Option<f64>,
}

impl StopRules {
    pub fn until(t_end: f64) -> Self {
        Self {
            t_end,
            max_steps: 2_000_000,
            linf_cap: None,
            stationary_tol: None,
        }
    }

    pub fn with_linf_cap(mut self, cap: f64) -> Self {
        self.linf_cap = Some(cap);
        self
    }

    pub fn with_stationary_tol(mut self, tol: f64) -> Self {
        self.stationary_tol = Some(tol);
        self
    }
}

/// One sampled trace record. `lyap_residual` is
/// `(E_k − E_{k−1})/(t_k − t_{k−1}) + ‖u_t‖²` between consecutive records —
/// near zero wherever the flow is an exact gradient flow.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub t: f64,
    pub dt: f64,
    pub l2: f64,
    pub h1: f64,
    pub energy: f64,
    pub ut_l2: f64,
    pub z: f64,
    pub lyap_residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
}

impl FlowTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,dt,l2,h1,energy,ut_l2,z,lyap_residual\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.t, r.dt, r.l2, r.h1, r.energy, r.ut_l2, r.z, r.lyap_residual
            );
        }
        s
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

/// Everything [`evolve`] produces: final state, sampled trace, stop reason,
/// and the number of accepted steps.
#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub state: FlowState,
    pub trace: FlowTrace,
    pub status: TerminalStatus,
    pub steps: usize,
}

/// Discrete dissipation defect between two energy records: zero (to O(dt))
/// along an exact gradient flow, where `dE/dt = −‖u_t‖²`.
pub fn dissipation_residual(e_prev: f64, e_next: f64, dt: f64, ut_l2: f64) -> f64 {
    (e_next - e_prev) / dt + ut_l2 * ut_l2
}

/// Reaction vector `f(u) + Ψ(x, u, z)` with the overflow flag.
fn reaction(spec: &ProblemSpec, u: &GridFunction, z: f64) -> (GridFunction, bool) {
    let d = u.domain;
    let mut flagged = false;
    let mut values = Vec::with_capacity(u.values.len());
    for iy in 0..d.ny {
        for ix in 0..d.nx {
            let (xi, eta) = d.rel(ix, iy);
            let v = u.get(ix, iy);
            let (fv, f_flag) = spec.f.f_eval_flagged(v);
            let a = spec.a.a_eval(xi, eta, z);
            // Ψ = (1/a − 1) f; the factored form returns a == 1.0 exactly in
            // the saturated regime, so the correction vanishes bitwise there.
            let psi = if a == 1.0 { 0.0 } else { (1.0 / a - 1.0) * fv };
            flagged |= f_flag;
            values.push(fv + psi);
        }
    }
    let r = GridFunction { domain: d, values };
    if r.linf() > REACTION_CAP {
        flagged = true;
    }
    (r, flagged)
}

/// Matrix-free CG for `(I + dt A) x = b`, warm-started at `x0`. Returns the
/// solution and the iteration count.
fn cg_solve(
    dt: f64,
    b: &GridFunction,
    x0: &GridFunction,
    tol_rel: f64,
    max_iters: usize,
) -> Result<(GridFunction, usize), FlowError> {
    let apply = |x: &GridFunction| -> GridFunction {
        let mut y = laplacian_apply(x);
        y.scale(dt);
        y.axpy(1.0, x);
        y
    };
    let dot = |a: &GridFunction, b: &GridFunction| -> f64 {
        a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum()
    };
    let mut x = x0.clone();
    let mut r = b.clone();
    r.axpy(-1.0, &apply(&x));
    let b_norm2 = dot(b, b);
    let target = (tol_rel * tol_rel * b_norm2).max(f64::MIN_POSITIVE);
    let mut rs = dot(&r, &r);
    if rs <= target {
        return Ok((x, 0));
    }
    let mut p = r.clone();
    for iter in 1..=max_iters {
        let ap = apply(&p);
        let alpha = rs / dot(&p, &ap);
        if !alpha.is_finite() {
            return Err(FlowError::CgStall {
                residual: rs.sqrt(),
                target: target.sqrt(),
                iters: iter,
            });
        }
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rs_new = dot(&r, &r);
        if rs_new <= target {
            return Ok((x, iter));
        }
        let beta = rs_new / rs;
        rs = rs_new;
        p.scale(beta);
        p.axpy(1.0, &r);
    }
    Err(FlowError::CgStall {
        residual: rs.sqrt(),
        target: target.sqrt(),
        iters: max_iters,
    })
}

/// One IMEX step of size `dt`. When an overflow clamp fires in the reaction,
/// the state comes back unchanged except for the sticky `overflow` flag — the
/// linear solve is skipped so infinities never enter the dot products.
pub fn step_imex(
    spec: &ProblemSpec,
    state: &FlowState,
    dt: f64,
    cfg: &StepperConfig,
) -> Result<FlowState, FlowError> {
    let (rhs, flagged) = reaction(spec, &state.u, state.z);
    if flagged {
        let mut frozen = state.clone();
        frozen.overflow = true;
        return Ok(frozen);
    }
    let mut b = state.u.clone();
    b.axpy(dt, &rhs);
    let (u_next, _iters) = cg_solve(dt, &b, &state.u, cfg.solver_tol, cfg.max_cg_iters)?;
    if !u_next.is_finite() {
        return Err(FlowError::NonFinite { t: state.t + dt });
    }
    let (z, z_flag) = z_value(&u_next, &spec.g);
    Ok(FlowState {
        u: u_next,
        t: state.t + dt,
        z,
        overflow: z_flag,
    })
}

fn energy_or_nan(u: &GridFunction, spec: &ProblemSpec) -> f64 {
    energy(u, spec).unwrap_or(f64::NAN)
}

/// Integrate from `u0` until a stop rule fires. Solver stalls are retried
/// with halved steps down to `dt · 2⁻⁴⁰`; running out of floor is reported as
/// [`TerminalStatus::SolverFailure`] rather than an `Err`, with the trace
/// intact, so callers can still see how far the run got.
pub fn evolve(
    spec: &ProblemSpec,
    u0: GridFunction,
    cfg: &StepperConfig,
    rules: &StopRules,
) -> Result<EvolveOutcome, FlowError> {
    if !u0.is_finite() {
        return Err(FlowError::NonFinite { t: 0.0 });
    }
    let mut state = FlowState::init(spec, u0);
    let mut trace = FlowTrace::default();
    let mut last_energy = energy_or_nan(&state.u, spec);
    let mut last_record_t = 0.0;
    trace.rows.push(TraceRow {
        t: 0.0,
        dt: 0.0,
        l2: norm_l2(&state.u),
        h1: norm_h1(&state.u),
        energy: last_energy,
        ut_l2: 0.0,
        z: state.z,
        lyap_residual: 0.0,
    });

    let record = |state: &FlowState,
                  dt: f64,
                  ut_l2: f64,
                  last_energy: &mut f64,
                  last_record_t: &mut f64,
                  trace: &mut FlowTrace| {
        let e = energy_or_nan(&state.u, spec);
        let span = state.t - *last_record_t;
        let lyap = if span > 0.0 {
            dissipation_residual(*last_energy, e, span, ut_l2)
        } else {
            0.0
        };
        trace.rows.push(TraceRow {
            t: state.t,
            dt,
            l2: norm_l2(&state.u),
            h1: norm_h1(&state.u),
            energy: e,
            ut_l2,
            z: state.z,
            lyap_residual: lyap,
        });
        *last_energy = e;
        *last_record_t = state.t;
    };

    if state.overflow {
        return Ok(EvolveOutcome {
            status: TerminalStatus::Overflow,
            state,
            trace,
            steps: 0,
        });
    }

    let dt_floor = cfg.dt * MIN_DT_FRACTION;
    let mut dt_cur = cfg.dt;
    let mut steps = 0usize;
    let mut status = TerminalStatus::ReachedTEnd;
    let mut f_norm_prev = {
        let (r, _) = reaction(spec, &state.u, state.z);
        norm_l2(&r)
    };

    'outer: while state.t < rules.t_end * (1.0 - 1e-14) {
        if steps >= rules.max_steps {
            status = TerminalStatus::MaxSteps;
            break;
        }
        let dt_step = dt_cur.min(rules.t_end - state.t);
        let mut dt_try = dt_step;
        let next = loop {
            match step_imex(spec, &state, dt_try, cfg) {
                Ok(next) => {
                    if next.overflow {
                        break next;
                    }
                    // Reject the step when the reaction norm explodes across
                    // it; blow-up transients need resolving, not leaping.
                    let (r_next, r_flag) = reaction(spec, &next.u, next.z);
                    if r_flag {
                        let mut frozen = next;
                        frozen.overflow = true;
                        break frozen;
                    }
                    let f_norm_next = norm_l2(&r_next);
                    if f_norm_next > 10.0 * f_norm_prev + 1.0 && dt_try > dt_floor {
                        dt_try *= 0.5;
                        continue;
                    }
                    f_norm_prev = f_norm_next;
                    break next;
                }
                Err(FlowError::CgStall { .. }) if dt_try > dt_floor => {
                    dt_try *= 0.5;
                }
                Err(e) => return Err(e),
            }
            if dt_try <= dt_floor {
                status = TerminalStatus::SolverFailure;
                break 'outer;
            }
        };
        let ut = {
            let mut d = next.u.clone();
            d.axpy(-1.0, &state.u);
            norm_l2(&d) / dt_try
        };
        state = next;
        steps += 1;
        // Gentle step-size recovery after local halvings.
        dt_cur = (dt_try * 2.0).min(cfg.dt);

        if state.overflow {
            record(&state, dt_try, ut, &mut last_energy, &mut last_record_t, &mut trace);
            status = TerminalStatus::Overflow;
            break;
        }
        if let Some(cap) = rules.linf_cap {
            if state.u.linf() > cap {
                record(&state, dt_try, ut, &mut last_energy, &mut last_record_t, &mut trace);
                status = TerminalStatus::NormCapExceeded;
                break;
            }
        }
        if let Some(tol) = rules.stationary_tol {
            if ut <= tol {
                record(&state, dt_try, ut, &mut last_energy, &mut last_record_t, &mut trace);
                status = TerminalStatus::Stationary;
                break;
            }
        }
        let due = steps % cfg.sample_stride.max(1) == 0;
        let at_end = state.t >= rules.t_end * (1.0 - 1e-14);
        if due || at_end {
            record(&state, dt_try, ut, &mut last_energy, &mut last_record_t, &mut trace);
        }
        if at_end {
            status = TerminalStatus::ReachedTEnd;
            break;
        }
    }

    // Make sure the final state is always the last trace row.
    if trace
        .last()
        .map(|r| (r.t - state.t).abs() > 1e-15 * state.t.max(1.0))
        .unwrap_or(true)
    {
        let e = energy_or_nan(&state.u, spec);
        trace.rows.push(TraceRow {
            t: state.t,
            dt: dt_cur,
            l2: norm_l2(&state.u),
            h1: norm_h1(&state.u),
            energy: e,
            ut_l2: f64::NAN,
            z: state.z,
            lyap_residual: f64::NAN,
        });
    }

    Ok(EvolveOutcome {
        state,
        trace,
        status,
        steps,
    })
}

// ---------------------------------------------------------------------------
// Mild-solution reference integrator
// ---------------------------------------------------------------------------

/// Picard iteration on the Duhamel formula in the sine eigenbasis:
///
/// ```text
/// u(t) = e^{−tA} u₀ + ∫₀ᵗ e^{−(t−s)A} [f(u(s)) + Ψ(·, u(s), z(s))] ds
/// ```
///
/// with composite trapezoid quadrature on `nodes` equal intervals. Returns
/// the field at `t_end` and the final Picard increment. Deliberately
/// independent of the stepper: different discretization in both space
/// (spectral) and time (integral equation).
pub fn mild_solution(
    spec: &ProblemSpec,
    u0: &GridFunction,
    t_end: f64,
    nodes: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(GridFunction, f64), FlowError> {
    if t_end == 0.0 {
        return Ok((u0.clone(), 0.0));
    }
    assert!(nodes >= 1, "need at least one time interval");
    let basis = SpectralBasis::new(u0.domain)?;
    let lambdas: Vec<f64> = basis.modes.iter().map(|m| m.lambda).collect();
    let n_modes = lambdas.len();
    let m = nodes;
    let ds = t_end / m as f64;
    let c0 = basis.to_coeffs(u0);

    // Initial iterate: the bare semigroup at every node.
    let mut w: Vec<GridFunction> = (0..=m)
        .map(|j| {
            let t = ds * j as f64;
            let coeffs: Vec<f64> = (0..n_modes)
                .map(|i| c0[i] * (-lambdas[i] * t).exp())
                .collect();
            basis.from_coeffs(&coeffs)
        })
        .collect();

    let mut delta = f64::INFINITY;
    for _ in 0..max_iter {
        // Nonlinear term at each node, in coefficient space.
        let mut n_coeffs: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        for wj in &w {
            let (z, z_flag) = z_value(wj, &spec.g);
            let (r, r_flag) = reaction(spec, wj, z);
            if z_flag || r_flag {
                return Err(FlowError::OracleOverflow);
            }
            n_coeffs.push(basis.to_coeffs(&r));
        }
        let mut new_w = Vec::with_capacity(m + 1);
        delta = 0.0;
        for (j, w_old) in w.iter().enumerate() {
            let t = ds * j as f64;
            let mut coeffs: Vec<f64> = (0..n_modes)
                .map(|i| c0[i] * (-lambdas[i] * t).exp())
                .collect();
            // Trapezoid over s ∈ [0, t]: weights ds/2 at the ends.
            for (jj, nc) in n_coeffs.iter().enumerate().take(j + 1) {
                let s = ds * jj as f64;
                let weight = if jj == 0 || jj == j { 0.5 * ds } else { ds };
                if j == 0 {
                    break;
                }
                let gap = t - s;
                for i in 0..n_modes {
                    coeffs[i] += weight * (-lambdas[i] * gap).exp() * nc[i];
                }
            }
            let w_new = basis.from_coeffs(&coeffs);
            let mut diff = w_new.clone();
            diff.axpy(-1.0, w_old);
            delta = delta.max(norm_l2(&diff));
            new_w.push(w_new);
        }
        w = new_w;
        if delta <= tol {
            return Ok((w.pop().expect("nodes + 1 iterates"), delta));
        }
    }
    Err(FlowError::PicardStall { delta, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{eigenmode, eigenvalue, RectDomain};
    use crate::model::{CoefficientModel, NonlinearityModel, NonlocalModel};

    const EQ_TOL: f64 = 1e-10;

    fn unit(n: usize) -> RectDomain {
        RectDomain::unit(n).unwrap()
    }

    #[test]
    fn heat_step_is_diagonal_in_the_eigenbasis() {
        let d = unit(9);
        let spec = ProblemSpec::heat_preset(d);
        let phi = eigenmode(&d, 1, 1).unwrap();
        let lam = eigenvalue(&d, 1, 1);
        let cfg = StepperConfig::for_domain(&d);
        let dt = 1e-3;
        let state = FlowState::init(&spec, phi.clone());
        let next = step_imex(&spec, &state, dt, &cfg).unwrap();
        let factor = 1.0 / (1.0 + dt * lam);
        for (got, want) in next.u.values.iter().zip(phi.values.iter().map(|v| v * factor)) {
            assert!(
                (got - want).abs() <= EQ_TOL,
                "implicit heat step on an eigenmode must scale it: {got} vs {want}"
            );
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let d = unit(7);
        let spec = ProblemSpec::cubic_preset(d);
        let cfg = StepperConfig::for_domain(&d);
        let state = FlowState::init(&spec, GridFunction::zeros(d));
        let next = step_imex(&spec, &state, 1e-2, &cfg).unwrap();
        assert_eq!(next.u.linf(), 0.0, "f(0) = 0 must keep the origin fixed");
        assert!(!next.overflow);
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let d = unit(7);
        let spec = ProblemSpec::cubic_preset(d);
        let u0 = eigenmode(&d, 2, 1).unwrap().scaled(0.3);
        let out = evolve(
            &spec,
            u0.clone(),
            &StepperConfig::for_domain(&d),
            &StopRules::until(0.0),
        )
        .unwrap();
        assert_eq!(out.status, TerminalStatus::ReachedTEnd);
        assert_eq!(out.steps, 0);
        assert_eq!(out.state.u.values, u0.values);
    }

    #[test]
    fn mild_solution_reproduces_the_heat_semigroup_exactly() {
        let d = unit(9);
        let spec = ProblemSpec::heat_preset(d);
        let phi = eigenmode(&d, 2, 3).unwrap();
        let lam = eigenvalue(&d, 2, 3);
        let t = 0.07;
        let (got, delta) = mild_solution(&spec, &phi, t, 16, 1e-12, 8).unwrap();
        assert!(delta <= 1e-12, "no reaction, Picard must converge at once");
        let factor = (-lam * t).exp();
        for (g, p) in got.values.iter().zip(&phi.values) {
            assert!(
                (g - p * factor).abs() < 1e-12,
                "semigroup action must be exact in the eigenbasis"
            );
        }
    }

    #[test]
    fn evolve_matches_the_mild_solution() {
        let d = unit(9);
        let spec = ProblemSpec::cubic_preset(d);
        let u0 = eigenmode(&d, 1, 1).unwrap().scaled(0.8);
        let mut cfg = StepperConfig::for_domain(&d);
        cfg.dt = 1e-3;
        let t_end = 0.05;
        let out = evolve(&spec, u0.clone(), &cfg, &StopRules::until(t_end)).unwrap();
        assert_eq!(out.status, TerminalStatus::ReachedTEnd);
        let (oracle, _) = mild_solution(&spec, &u0, t_end, 64, 1e-11, 60).unwrap();
        let mut diff = out.state.u.clone();
        diff.axpy(-1.0, &oracle);
        let err = norm_l2(&diff);
        assert!(
            err <= 5.0 * cfg.dt,
            "first-order stepper must track the integral-equation oracle: err = {err:.3e}"
        );
    }

    #[test]
    fn linear_equilibrium_is_stationary() {
        // f(t) = lambda_1 t balances diffusion on the first eigenmode.
        let d = unit(9);
        let lam = eigenvalue(&d, 1, 1);
        let spec = ProblemSpec::new(
            d,
            NonlinearityModel::linear(lam),
            NonlocalModel::power_q(2.0).unwrap(),
            CoefficientModel::identity(),
        )
        .unwrap();
        let u0 = eigenmode(&d, 1, 1).unwrap();
        let cfg = StepperConfig::for_domain(&d);
        let rules = StopRules::until(1.0).with_stationary_tol(1e-8);
        let out = evolve(&spec, u0.clone(), &cfg, &rules).unwrap();
        assert_eq!(out.status, TerminalStatus::Stationary);
        let mut diff = out.state.u.clone();
        diff.axpy(-1.0, &u0);
        assert!(
            norm_l2(&diff) <= 1e-5,
            "equilibrium must not drift: moved {:.3e}",
            norm_l2(&diff)
        );
    }

    #[test]
    fn decay_dissipates_energy() {
        let d = unit(15);
        let spec = ProblemSpec::cubic_preset(d);
        let u0 = eigenmode(&d, 1, 1).unwrap().scaled(0.5);
        let mut cfg = StepperConfig::for_domain(&d);
        cfg.sample_stride = 5;
        let out = evolve(&spec, u0, &cfg, &StopRules::until(0.2)).unwrap();
        assert_eq!(out.status, TerminalStatus::ReachedTEnd);
        let rows = &out.trace.rows;
        assert!(rows.len() > 4, "expected several trace records");
        // dE/dt is steepest at the start; its magnitude bounds the tolerance.
        let scale = rows
            .windows(2)
            .map(|w| ((w[1].energy - w[0].energy) / (w[1].t - w[0].t)).abs())
            .fold(1.0f64, f64::max);
        for w in rows.windows(2) {
            assert!(
                w[1].energy <= w[0].energy + 50.0 * cfg.dt * cfg.dt * scale,
                "gradient flow must dissipate: E({}) = {} -> E({}) = {}",
                w[0].t,
                w[0].energy,
                w[1].t,
                w[1].energy
            );
        }
        // The dissipation identity holds row-to-row up to O(dt).
        let mut residuals: Vec<f64> = rows
            .iter()
            .skip(1)
            .filter(|r| r.ut_l2.is_finite())
            .map(|r| r.lyap_residual.abs())
            .collect();
        residuals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = residuals[residuals.len() / 2];
        assert!(
            median <= 5.0 * cfg.dt * scale.max(1.0),
            "median dissipation defect {median:.3e} too large for dt = {}",
            cfg.dt
        );
    }

    #[test]
    fn blow_up_trips_the_overflow_flag() {
        let d = unit(9);
        let spec = ProblemSpec::cubic_preset(d);
        let u0 = eigenmode(&d, 1, 1).unwrap().scaled(60.0);
        let mut cfg = StepperConfig::for_domain(&d);
        cfg.dt = 1e-3;
        let rules = StopRules::until(10.0);
        let out = evolve(&spec, u0, &cfg, &rules).unwrap();
        assert_eq!(out.status, TerminalStatus::Overflow);
        assert!(out.state.overflow);
        assert!(
            out.state.u.is_finite(),
            "the clamp must keep the state finite"
        );
        assert!(out.state.t < 10.0, "blow-up happens well before the horizon");
    }

    #[test]
    fn norm_cap_stops_growing_solutions() {
        let d = unit(9);
        let spec = ProblemSpec::cubic_preset(d);
        let u0 = eigenmode(&d, 1, 1).unwrap().scaled(50.0);
        let cfg = StepperConfig::for_domain(&d);
        let rules = StopRules::until(10.0).with_linf_cap(1e4);
        let out = evolve(&spec, u0, &cfg, &rules).unwrap();
        assert_eq!(out.status, TerminalStatus::NormCapExceeded);
        assert!(out.state.u.linf() > 1e4);
        assert!(!out.state.overflow, "cap fires long before the clamp");
    }

    #[test]
    fn trace_csv_has_header_and_all_rows() {
        let d = unit(7);
        let spec = ProblemSpec::heat_preset(d);
        let u0 = eigenmode(&d, 1, 1).unwrap();
        let out = evolve(
            &spec,
            u0,
            &StepperConfig::for_domain(&d),
            &StopRules::until(0.01),
        )
        .unwrap();
        let csv = out.trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("t,dt,l2,h1,energy,ut_l2,z,lyap_residual")
        );
        assert_eq!(lines.count(), out.trace.rows.len());
    }
}
