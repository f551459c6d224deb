//! Subcommand drivers: resolve a config, run one pipeline stage-by-stage,
//! emit plot-ready CSV artifacts plus a hashed manifest, and map failures to
//! stable exit codes.
//!
//! Exit codes: `0` success, `1` configuration error, `2` method error (no
//! bracket, inconclusive bisection, failed hypothesis check), `3` numeric
//! failure (dead solver, non-finite values, singular Jacobian).

pub mod config;
pub mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ConfigError, ResolvedRun, RunConfig};
pub use manifest::{RunManifest, MANIFEST_FILE};

use crate::classify::{
    blowup_sufficient, classify_trajectory, concavity_indicator, ClassifyError,
    ConcavityIndicator, Trigger, Verdict,
};
use crate::flow::{evolve, mild_solution, FlowError, StopRules, TerminalStatus};
use crate::grid::{field_to_csv, field_to_string, norm_h1, norm_l2, GridFunction};
use crate::model::{verify_conditions, ConditionVerdict, SamplePlan};
use crate::threshold::{
    bisect, bracket_ray, extract_omega_limit, newton_refine, ThresholdError,
    ThresholdResult,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_METHOD: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Newton stopping tolerance on the weighted stationary residual.
pub const REFINE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Classify,
    Threshold,
    Steady,
    VerifyConditions,
    OracleCheck,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Classify => "classify",
            Self::Threshold => "threshold",
            Self::Steady => "steady",
            Self::VerifyConditions => "verify-conditions",
            Self::OracleCheck => "oracle-check",
        }
    }
}

/// Flag bundle shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct CliArgs {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub set: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl CliArgs {
    /// Merge file + flags into a raw config (flags win).
    pub fn to_config(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.preset {
            cfg.set("preset", p)?;
        }
        for assignment in &self.set {
            cfg.apply_set_flag(assignment)?;
        }
        if let Some(out) = &self.out {
            cfg.set("output.dir", &out.display().to_string())?;
        }
        if let Some(seed) = self.seed {
            cfg.set("seed", &seed.to_string())?;
        }
        Ok(cfg)
    }
}

/// Run one subcommand end to end and return the process exit code. The
/// manifest is written even when a stage fails, so partial artifacts stay
/// accounted for.
pub fn run(sub: Subcommand, args: &CliArgs) -> i32 {
    let cfg = match args.to_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let resolved = match cfg.resolve() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&resolved.output_dir) {
        eprintln!(
            "config error: cannot create output dir {}: {e}",
            resolved.output_dir.display()
        );
        return EXIT_CONFIG;
    }
    let started = Instant::now();
    let mut manifest = RunManifest::new(sub.name(), resolved.echo());
    let code = match sub {
        Subcommand::Simulate => run_simulate(&resolved, &mut manifest),
        Subcommand::Classify => run_classify(&resolved, &mut manifest),
        Subcommand::Threshold => run_threshold(&resolved, &mut manifest),
        Subcommand::Steady => run_steady(&resolved, &mut manifest),
        Subcommand::VerifyConditions => run_verify(&resolved, &mut manifest),
        Subcommand::OracleCheck => run_oracle(&resolved, &mut manifest),
    };
    manifest.exit_code = code;
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    if let Err(e) = manifest.finalize(&resolved.output_dir) {
        eprintln!("cannot write manifest: {e}");
        return if code == EXIT_OK { EXIT_CONFIG } else { code };
    }
    code
}

// ---------------------------------------------------------------------------
// error → exit-code mapping
// ---------------------------------------------------------------------------

fn flow_exit(e: &FlowError) -> i32 {
    match e {
        FlowError::Grid(_) => EXIT_METHOD,
        _ => EXIT_NUMERIC,
    }
}

fn classify_exit(e: &ClassifyError) -> i32 {
    match e {
        ClassifyError::BadConfig(_) => EXIT_CONFIG,
        ClassifyError::Flow(f) => flow_exit(f),
        ClassifyError::Model(_) => EXIT_NUMERIC,
    }
}

fn threshold_exit(e: &ThresholdError) -> i32 {
    use ThresholdError::*;
    match e {
        BadDirection
        | NoUpperBracket { .. }
        | NoLowerBracket { .. }
        | Inconclusive
        | PlateauNotCaptured { .. }
        | TrivialCandidate { .. }
        | GridTooLarge { .. } => EXIT_METHOD,
        SingularJacobian { .. } | RefineDiverged { .. } => EXIT_NUMERIC,
        Classify(c) => classify_exit(c),
        Flow(f) => flow_exit(f),
        Model(_) => EXIT_NUMERIC,
    }
}

// ---------------------------------------------------------------------------
// artifact helpers
// ---------------------------------------------------------------------------

fn write_files(
    m: &mut RunManifest,
    dir: &Path,
    files: Vec<(&'static str, String)>,
) -> Result<(), i32> {
    for (name, content) in files {
        if let Err(e) = std::fs::write(dir.join(name), content) {
            m.stage_error("artifacts", &format!("{name}: {e}"));
            eprintln!("cannot write {name}: {e}");
            return Err(EXIT_CONFIG);
        }
    }
    m.stage_ok("artifacts");
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn threshold_csv(th: &ThresholdResult) -> String {
    let mut s = String::from("s_star,s_low,s_high,iterations,escalations,inconclusive\n");
    let _ = writeln!(
        s,
        "{},{},{},{},{},{}",
        th.s_star,
        th.s_low,
        th.s_high,
        th.history.len().saturating_sub(1),
        th.escalations,
        th.inconclusive
    );
    s
}

fn bracket_history_csv(th: &ThresholdResult) -> String {
    let mut s = String::from("iter,s_low,s_high\n");
    for (i, (lo, hi)) in th.history.iter().enumerate() {
        let _ = writeln!(s, "{i},{lo},{hi}");
    }
    s
}

fn concavity_csv(ind: &ConcavityIndicator) -> String {
    let mut s = String::from("t,h,ell\n");
    for p in &ind.series {
        let _ = writeln!(s, "{},{},{}", p.t, p.h, p.ell);
    }
    s
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn run_simulate(run: &ResolvedRun, m: &mut RunManifest) -> i32 {
    let rules = StopRules::until(run.ccfg.t_max);
    let out = match evolve(&run.spec, run.u0.clone(), &run.ccfg.stepper, &rules) {
        Ok(out) => out,
        Err(e) => {
            m.stage_error("evolve", &e.to_string());
            eprintln!("numeric failure: {e}");
            return flow_exit(&e);
        }
    };
    m.stage_ok("evolve");
    m.record("status", out.status);
    m.record("steps", out.steps);
    m.record("t_final", out.state.t);
    m.record("l2_final", norm_l2(&out.state.u));
    m.record("h1_final", norm_h1(&out.state.u));
    let files = vec![
        ("u_initial.txt", field_to_string(&run.u0)),
        ("trace.csv", out.trace.to_csv()),
        ("u_final.txt", field_to_string(&out.state.u)),
        ("u_final.csv", field_to_csv(&out.state.u)),
    ];
    if let Err(code) = write_files(m, &run.output_dir, files) {
        return code;
    }
    println!(
        "simulate: {} after {} steps at t = {:.6}, l2 = {:.6e}",
        out.status,
        out.steps,
        out.state.t,
        norm_l2(&out.state.u)
    );
    if out.status == TerminalStatus::SolverFailure {
        EXIT_NUMERIC
    } else {
        EXIT_OK
    }
}

fn run_classify(run: &ResolvedRun, m: &mut RunManifest) -> i32 {
    let (c, trace) = match classify_trajectory(&run.u0, &run.spec, &run.ccfg) {
        Ok(x) => x,
        Err(e) => {
            m.stage_error("classify", &e.to_string());
            eprintln!("classification failed: {e}");
            return classify_exit(&e);
        }
    };
    m.stage_ok("classify");
    let cert = match blowup_sufficient(&run.u0, &run.spec, &run.ccfg, run.mhat_budget, run.seed)
    {
        Ok(cert) => cert,
        Err(e) => {
            m.stage_error("certificate", &e.to_string());
            eprintln!("certificate failed: {e}");
            return classify_exit(&e);
        }
    };
    m.stage_ok("certificate");
    let ind = concavity_indicator(&trace, run.spec.f.gamma);

    // The trajectory classifier stays empirical; only here, where the energy
    // certificate is in hand, may an undecided run be upgraded.
    let (verdict, trigger, upgraded) = if c.verdict == Verdict::Undecided && cert.satisfied {
        (Verdict::BlowUp, Some(Trigger::SufficientCondition), true)
    } else {
        (c.verdict, c.trigger, false)
    };

    let mut vcsv = String::from(
        "verdict,t_detect,trigger,status,energy_u0,h1_u0,observed_decrease_rate,\
         concavity_fraction,cert_kstar,cert_m_hat_est,cert_energy_bar,cert_satisfied,upgraded\n",
    );
    let _ = writeln!(
        vcsv,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        verdict,
        c.t_detect,
        trigger.map(|t| t.to_string()).unwrap_or_default(),
        c.status,
        c.energy_u0,
        c.h1_u0,
        opt_num(c.observed_decrease_rate),
        ind.tail_concave_fraction,
        cert.kstar,
        cert.m_hat_est,
        cert.energy_bar,
        cert.satisfied,
        upgraded
    );
    m.record("verdict", verdict);
    m.record("t_detect", c.t_detect);
    m.record("cert_satisfied", cert.satisfied);
    m.record("concavity_fraction", ind.tail_concave_fraction);
    let files = vec![
        ("verdict.csv", vcsv),
        ("trace.csv", trace.to_csv()),
        ("concavity.csv", concavity_csv(&ind)),
    ];
    if let Err(code) = write_files(m, &run.output_dir, files) {
        return code;
    }
    println!(
        "classify: {verdict} (t_detect = {:.6}, certificate satisfied = {})",
        c.t_detect, cert.satisfied
    );
    EXIT_OK
}

fn normalized_direction(run: &ResolvedRun, m: &mut RunManifest) -> Result<GridFunction, i32> {
    let nv = norm_h1(&run.u0);
    if nv == 0.0 || !nv.is_finite() {
        m.stage_error("bracket", "direction field is zero or non-finite");
        eprintln!("method error: direction field is zero or non-finite");
        return Err(EXIT_METHOD);
    }
    Ok(run.u0.scaled(1.0 / nv))
}

fn search_threshold(
    v: &GridFunction,
    run: &ResolvedRun,
    m: &mut RunManifest,
) -> Result<ThresholdResult, i32> {
    let bracket = match bracket_ray(v, &run.spec, &run.ccfg, &run.tcfg) {
        Ok(b) => b,
        Err(e) => {
            m.stage_error("bracket", &e.to_string());
            eprintln!("method error: {e}");
            return Err(threshold_exit(&e));
        }
    };
    m.stage_ok("bracket");
    m.record("bracket_probes", bracket.probes);
    let th = match bisect(v, bracket, &run.spec, &run.ccfg, &run.tcfg) {
        Ok(t) => t,
        Err(e) => {
            m.stage_error("bisect", &e.to_string());
            eprintln!("method error: {e}");
            return Err(threshold_exit(&e));
        }
    };
    m.record("s_star", th.s_star);
    m.record("s_low", th.s_low);
    m.record("s_high", th.s_high);
    m.record("escalations", th.escalations);
    Ok(th)
}

fn run_threshold(run: &ResolvedRun, m: &mut RunManifest) -> i32 {
    let v = match normalized_direction(run, m) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let th = match search_threshold(&v, run, m) {
        Ok(th) => th,
        Err(code) => return code,
    };
    let files = vec![
        ("threshold.csv", threshold_csv(&th)),
        ("bracket_history.csv", bracket_history_csv(&th)),
        ("decay_trace.csv", th.decay_trace.to_csv()),
        ("blowup_trace.csv", th.blowup_trace.to_csv()),
    ];
    if th.inconclusive {
        m.stage_error("bisect", "a midpoint stayed undecided after full escalation");
        let _ = write_files(m, &run.output_dir, files);
        eprintln!("method error: bisection inconclusive (partial outputs retained)");
        return EXIT_METHOD;
    }
    m.stage_ok("bisect");
    if let Err(code) = write_files(m, &run.output_dir, files) {
        return code;
    }
    println!(
        "threshold: s* = {:.8} in [{:.8}, {:.8}] after {} bisections",
        th.s_star,
        th.s_low,
        th.s_high,
        th.history.len().saturating_sub(1)
    );
    EXIT_OK
}

fn run_steady(run: &ResolvedRun, m: &mut RunManifest) -> i32 {
    let v = match normalized_direction(run, m) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let th = match search_threshold(&v, run, m) {
        Ok(th) => th,
        Err(code) => return code,
    };
    let mut files = vec![
        ("threshold.csv", threshold_csv(&th)),
        ("bracket_history.csv", bracket_history_csv(&th)),
        ("decay_trace.csv", th.decay_trace.to_csv()),
        ("blowup_trace.csv", th.blowup_trace.to_csv()),
    ];
    if th.inconclusive {
        m.stage_error("bisect", "a midpoint stayed undecided after full escalation");
        let _ = write_files(m, &run.output_dir, files);
        eprintln!("method error: bisection inconclusive (partial outputs retained)");
        return EXIT_METHOD;
    }
    m.stage_ok("bisect");

    let cand = match extract_omega_limit(&v, th.s_star, &run.spec, &run.ccfg, &run.tcfg) {
        Ok(c) => c,
        Err(e) => {
            m.stage_error("extract", &e.to_string());
            let _ = write_files(m, &run.output_dir, files);
            eprintln!("method error: {e}");
            return threshold_exit(&e);
        }
    };
    m.stage_ok("extract");
    m.record("candidate_ut", cand.ut_l2);
    m.record("candidate_residual", cand.residual_l2);

    let eps_nontrivial = 10.0 * run.ccfg.eps_decay;
    let steady = match newton_refine(&cand.u, &run.spec, REFINE_TOL, eps_nontrivial) {
        Ok(s) => s,
        Err(e) => {
            m.stage_error("refine", &e.to_string());
            files.push(("omega_candidate.txt", field_to_string(&cand.u)));
            let _ = write_files(m, &run.output_dir, files);
            eprintln!("refinement failed: {e}");
            return threshold_exit(&e);
        }
    };
    m.stage_ok("refine");
    m.record("residual_l2", steady.residual_l2);
    m.record("energy", steady.energy);
    m.record("z_s", steady.z_s);
    m.record("h1_norm", steady.nontriviality);
    m.record("newton_iterations", steady.iterations);

    let mut summary = String::from(
        "s_star,s_low,s_high,residual_l2,energy,z_s,h1_norm,newton_iterations,\
         candidate_ut,candidate_side,cauchy_gap_h1,eps_nontrivial\n",
    );
    let _ = writeln!(
        summary,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        th.s_star,
        th.s_low,
        th.s_high,
        steady.residual_l2,
        steady.energy,
        steady.z_s,
        steady.nontriviality,
        steady.iterations,
        cand.ut_l2,
        cand.side,
        opt_num(cand.cauchy_gap_h1),
        eps_nontrivial
    );
    files.push(("steady_summary.csv", summary));
    files.push(("steady_state.txt", field_to_string(&steady.u_s)));
    files.push(("steady_state.csv", field_to_csv(&steady.u_s)));
    if let Err(code) = write_files(m, &run.output_dir, files) {
        return code;
    }
    println!(
        "steady: s* = {:.8}, residual = {:.3e}, h1 = {:.6}, {} Newton iterations",
        th.s_star, steady.residual_l2, steady.nontriviality, steady.iterations
    );
    EXIT_OK
}

fn run_verify(run: &ResolvedRun, m: &mut RunManifest) -> i32 {
    let report = verify_conditions(&run.spec, &SamplePlan::default());
    m.stage_ok("verify");
    let mut csv = String::from(
        "name,verdict,details,witness_location,witness_lhs,witness_rhs,constants\n",
    );
    let mut passed = 0usize;
    for c in &report.checks {
        let verdict = match c.verdict {
            ConditionVerdict::Pass => "pass",
            ConditionVerdict::Fail => "fail",
            ConditionVerdict::Inconclusive => "inconclusive",
        };
        if c.verdict == ConditionVerdict::Pass {
            passed += 1;
        }
        let constants = c
            .constants
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        let (wl, wlhs, wrhs) = match &c.witness {
            Some(w) => (w.location.clone(), w.lhs.to_string(), w.rhs.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            c.name,
            verdict,
            csv_field(&c.details),
            csv_field(&wl),
            wlhs,
            wrhs,
            csv_field(&constants)
        );
    }
    m.record("checks_total", report.checks.len());
    m.record("checks_passed", passed);
    if let Err(code) = write_files(m, &run.output_dir, vec![("conditions.csv", csv)]) {
        return code;
    }
    print!("{report}");
    if report.all_pass() {
        println!("verify-conditions: all {} checks passed", report.checks.len());
        EXIT_OK
    } else {
        eprintln!(
            "verify-conditions: {}/{} checks passed",
            passed,
            report.checks.len()
        );
        EXIT_METHOD
    }
}

fn run_oracle(run: &ResolvedRun, m: &mut RunManifest) -> i32 {
    let t_end = 0.05f64.min(run.ccfg.t_max);
    let mut csv = String::from("t,l2_evolve,l2_mild,l2_diff,rel_diff,picard_delta\n");
    let mut worst_rel = 0.0f64;
    for frac in [0.25, 0.5, 0.75, 1.0] {
        let t = frac * t_end;
        let out = match evolve(
            &run.spec,
            run.u0.clone(),
            &run.ccfg.stepper,
            &StopRules::until(t),
        ) {
            Ok(o) => o,
            Err(e) => {
                m.stage_error("evolve", &e.to_string());
                eprintln!("numeric failure: {e}");
                return flow_exit(&e);
            }
        };
        if out.status != TerminalStatus::ReachedTEnd {
            m.stage_error(
                "evolve",
                &format!("stopped early with status {} at t = {}", out.status, out.state.t),
            );
            eprintln!("method error: trajectory left the comparable regime ({})", out.status);
            return EXIT_METHOD;
        }
        let (mild, picard_delta) = match mild_solution(&run.spec, &run.u0, t, 128, 1e-12, 80) {
            Ok(x) => x,
            Err(e) => {
                m.stage_error("mild_oracle", &e.to_string());
                eprintln!("oracle failure: {e}");
                return flow_exit(&e);
            }
        };
        let mut diff = out.state.u.clone();
        diff.axpy(-1.0, &mild);
        let d = norm_l2(&diff);
        let rel = d / norm_l2(&mild).max(1.0);
        worst_rel = worst_rel.max(rel);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            t,
            norm_l2(&out.state.u),
            norm_l2(&mild),
            d,
            rel,
            picard_delta
        );
    }
    m.stage_ok("compare");
    m.record("worst_rel_diff", worst_rel);
    if let Err(code) = write_files(m, &run.output_dir, vec![("oracle.csv", csv)]) {
        return code;
    }
    // The integrator is first-order in dt; the spectral oracle is far more
    // accurate, so the gap must shrink with dt and never exceed this gate.
    let gate = (100.0 * run.ccfg.stepper.dt).max(1e-6);
    if worst_rel <= gate {
        println!("oracle-check: worst relative gap {worst_rel:.3e} within gate {gate:.3e}");
        EXIT_OK
    } else {
        eprintln!("oracle-check: worst relative gap {worst_rel:.3e} exceeds gate {gate:.3e}");
        EXIT_METHOD
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args_with(dir: &Path, sets: &[&str]) -> CliArgs {
        CliArgs {
            config: None,
            preset: None,
            set: sets.iter().map(|s| s.to_string()).collect(),
            out: Some(dir.to_path_buf()),
            seed: Some(0),
        }
    }

    #[test]
    fn simulate_writes_trace_and_fields() {
        let dir = tempfile::tempdir().unwrap();
        let mut args = args_with(dir.path(), &[
            "grid.nx=9",
            "grid.ny=9",
            "classifier.t_max=0.05",
            "init.scale=0.1",
        ]);
        args.preset = Some("heat".into());
        let code = run(Subcommand::Simulate, &args);
        assert_eq!(code, EXIT_OK);
        for name in ["trace.csv", "u_initial.txt", "u_final.txt", "u_final.csv", MANIFEST_FILE] {
            assert!(dir.path().join(name).exists(), "missing artifact {name}");
        }
        let manifest = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(manifest.contains("stage.evolve = ok"));
        assert!(manifest.contains("exit_code = 0"));
    }

    #[test]
    fn zero_scale_classifies_as_decay_with_exit_zero() {
        let dir = tempfile::tempdir().unwrap();
        let mut args = args_with(dir.path(), &[
            "grid.nx=9",
            "grid.ny=9",
            "init.scale=0",
            "mhat.budget=2",
        ]);
        args.preset = Some("example2".into());
        let code = run(Subcommand::Classify, &args);
        assert_eq!(code, EXIT_OK);
        let verdict = std::fs::read_to_string(dir.path().join("verdict.csv")).unwrap();
        assert!(
            verdict.lines().nth(1).unwrap().starts_with("decay_to_zero"),
            "zero datum must decay: {verdict}"
        );
    }

    #[test]
    fn threshold_on_heat_reports_no_upper_bracket() {
        let dir = tempfile::tempdir().unwrap();
        let mut args = args_with(dir.path(), &[
            "grid.nx=7",
            "grid.ny=7",
            "classifier.t_max=5",
        ]);
        args.preset = Some("heat".into());
        let code = run(Subcommand::Threshold, &args);
        assert_eq!(code, EXIT_METHOD, "linear flow has no blow-up side");
        let manifest = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(manifest.contains("no upper bracket"));
    }

    #[test]
    fn unknown_key_exits_with_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut args = args_with(dir.path(), &["grid.sx=4"]);
        args.preset = Some("heat".into());
        assert_eq!(run(Subcommand::Simulate, &args), EXIT_CONFIG);
    }

    #[test]
    fn verify_conditions_passes_the_polynomial_preset() {
        let dir = tempfile::tempdir().unwrap();
        let mut args = args_with(dir.path(), &["grid.nx=9", "grid.ny=9"]);
        args.preset = Some("example2".into());
        assert_eq!(run(Subcommand::VerifyConditions, &args), EXIT_OK);
        let csv = std::fs::read_to_string(dir.path().join("conditions.csv")).unwrap();
        assert!(csv.contains("coefficient_saturation,pass"));
    }
}
