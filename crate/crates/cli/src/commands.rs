//! Implementations behind the `groupcast` subcommands. Each returns the
//! text destined for stdout, or a [`CommandError`] carrying the process
//! exit code plus a machine-readable JSON payload for stderr.
//!
//! Exit codes: 0 success, 2 unusable instance file (parse or validation
//! diagnostics in the payload), 1 any other failure.

use groupcast_core::bounds::{self, BoundReport};
use groupcast_core::instance::{Field, InstanceRef, Model};
use groupcast_core::oracle::{enumerate_p1, enumerate_p2, OracleBracket};
use groupcast_core::relaxation::{build_sdp1, build_sdp2, extract_solution, RelaxationSolution};
use groupcast_core::rng::StreamKey;
use groupcast_core::rounding::{round_p1, round_p2, RoundedSolution};
use groupcast_core::sdp::{solve, SdpProblem, SolverOptions};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

use crate::experiment::{run_experiment, write_report_files, ExperimentConfig, ModelConfig};
use crate::formats::{
    self, instance_json, parse_instance, pretty, violations_json, ParsedInstance,
};

/// Exit code for an instance file that cannot be used.
pub const EXIT_BAD_INSTANCE: i32 = 2;
/// Exit code for every other failure.
pub const EXIT_FAILURE: i32 = 1;

/// A failed command: exit code plus stderr payload.
#[derive(Debug)]
pub struct CommandError {
    /// Process exit code.
    pub exit_code: i32,
    /// Machine-readable diagnostics, rendered as JSON on stderr.
    pub payload: Value,
}

impl CommandError {
    fn bad_instance(message: impl Into<String>, detail: Value) -> Self {
        Self {
            exit_code: EXIT_BAD_INSTANCE,
            payload: json!({ "error": message.into(), "detail": detail }),
        }
    }

    fn failure(message: impl Into<String>) -> Self {
        Self { exit_code: EXIT_FAILURE, payload: json!({ "error": message.into() }) }
    }
}

/// Parse a field name as it appears on the command line.
pub fn parse_field(name: &str) -> Result<Field, CommandError> {
    match name {
        "real" => Ok(Field::Real),
        "complex" => Ok(Field::Complex),
        other => Err(CommandError::failure(format!(
            "unknown field {other:?} (expected \"real\" or \"complex\")"
        ))),
    }
}

/// Parse a model name as it appears on the command line.
pub fn parse_model(name: &str) -> Result<Model, CommandError> {
    match name {
        "p1" => Ok(Model::P1),
        "p2" => Ok(Model::P2),
        other => Err(CommandError::failure(format!(
            "unknown model {other:?} (expected \"p1\" or \"p2\")"
        ))),
    }
}

/// Expand a `--P` list: a single value broadcasts to all `m` users.
pub fn expand_quotas(p: &[usize], m: usize) -> Result<Vec<usize>, CommandError> {
    match p.len() {
        1 => Ok(vec![p[0]; m]),
        len if len == m => Ok(p.to_vec()),
        len => Err(CommandError::failure(format!(
            "--P lists {len} quotas but M = {m} (give one per user, or one value for all)"
        ))),
    }
}

fn load_instance(path: &Path) -> Result<ParsedInstance, CommandError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CommandError::failure(format!("cannot read {}: {e}", path.display()))
    })?;
    let inst = parse_instance(&text)
        .map_err(|e| CommandError::bad_instance("unusable instance file", json!(e.to_string())))?;
    let violations = inst.violations();
    if !groupcast_core::instance::is_structurally_sound(&violations) {
        return Err(CommandError::bad_instance(
            "instance violates structural invariants",
            violations_json(&violations),
        ));
    }
    Ok(inst)
}

fn solve_relaxation(
    problem: &SdpProblem,
    inst: InstanceRef<'_>,
    dump_sdp: Option<&Path>,
) -> Result<RelaxationSolution, CommandError> {
    if let Some(path) = dump_sdp {
        std::fs::write(path, formats::sdp_dump_json(problem)).map_err(|e| {
            CommandError::failure(format!("cannot write {}: {e}", path.display()))
        })?;
    }
    let sol = solve(problem, &SolverOptions::default())
        .map_err(|e| CommandError::failure(format!("relaxation solve failed: {e}")))?;
    extract_solution(inst, &sol)
        .map_err(|e| CommandError::failure(format!("relaxation solve failed: {e}")))
}

fn solve_output(
    inst: &ParsedInstance,
    relax: &RelaxationSolution,
    rounded: &RoundedSolution,
    bound: &BoundReport,
) -> String {
    let (field, instance_echo) = match inst {
        ParsedInstance::P1(i) => (
            i.field,
            json!({ "model": "p1", "field": i.field.to_string(), "M": i.m(), "N": i.n() }),
        ),
        ParsedInstance::P2(i) => (
            i.field,
            json!({
                "model": "p2", "field": i.field.to_string(), "M": i.m(), "N": i.n(),
                "Q": i.q, "P": i.priorities,
            }),
        ),
    };
    let check = bounds::check_ratio(rounded.objective, relax.objective, bound);
    pretty(&json!({
        "instance": instance_echo,
        "relaxation": {
            "objective": relax.objective,
            "duality_gap": relax.duality_gap,
            "alpha": relax.alpha,
        },
        "rounded": {
            "beta": rounded.beta,
            "w": formats::w_blocks_value(field, &rounded.w_blocks),
            "objective": rounded.objective,
            "trials_used": rounded.trials_used,
            "best_trial": rounded.best_trial,
            "success_events": rounded.success_events,
        },
        "ratio": check.ratio,
        "bound": {
            "mu": bound.mu,
            "alpha_thresh": bound.alpha_thresh,
            "sigma": bound.sigma,
            "satisfied": check.satisfied,
        },
    }))
}

/// `solve-p1` / `solve-p2`: relaxation value, rounded solution, ratio,
/// and the guarantee report, as one JSON document.
pub fn solve_command(
    model: Model,
    instance_path: &Path,
    trials: usize,
    seed: u64,
    dump_sdp: Option<&Path>,
) -> Result<String, CommandError> {
    let inst = load_instance(instance_path)?;
    let key = StreamKey::new(seed, 0);
    match (&inst, model) {
        (ParsedInstance::P1(p1), Model::P1) => {
            let problem = build_sdp1(p1).map_err(|e| CommandError::failure(e.to_string()))?;
            let relax = solve_relaxation(&problem, InstanceRef::P1(p1), dump_sdp)?;
            let rounded = round_p1(p1, &relax, trials, key)
                .map_err(|e| CommandError::failure(e.to_string()))?;
            if !rounded.success {
                return Err(CommandError::failure(format!(
                    "no feasible beamformer in {trials} trials"
                )));
            }
            Ok(solve_output(&inst, &relax, &rounded, &bounds::mu_p1(p1.m(), p1.field)))
        }
        (ParsedInstance::P2(p2), Model::P2) => {
            let problem = build_sdp2(p2).map_err(|e| CommandError::failure(e.to_string()))?;
            let relax = solve_relaxation(&problem, InstanceRef::P2(p2), dump_sdp)?;
            let rounded = round_p2(p2, &relax, trials, key)
                .map_err(|e| CommandError::failure(e.to_string()))?;
            if !rounded.success {
                return Err(CommandError::failure(format!(
                    "no feasible beamformer in {trials} trials"
                )));
            }
            Ok(solve_output(
                &inst,
                &relax,
                &rounded,
                &bounds::mu_p2(&p2.priorities, p2.q, p2.field),
            ))
        }
        (ParsedInstance::P2(_), Model::P1) => Err(CommandError::bad_instance(
            "instance file is for model p2; use solve-p2",
            Value::Null,
        )),
        (ParsedInstance::P1(_), Model::P2) => Err(CommandError::bad_instance(
            "instance file is for model p1; use solve-p1",
            Value::Null,
        )),
    }
}

fn bracket_output(field: Field, bracket: &OracleBracket) -> String {
    pretty(&json!({
        "lower": bracket.lower,
        "upper": bracket.upper,
        "certified": bracket.certified,
        "beta": bracket.argmin_beta,
        "w": formats::w_blocks_value(field, &bracket.best_w),
    }))
}

/// `oracle`: exhaustive bracket of the mixed-binary optimum.
pub fn oracle_command(instance_path: &Path, trials: usize) -> Result<String, CommandError> {
    let inst = load_instance(instance_path)?;
    match &inst {
        ParsedInstance::P1(p1) => {
            let bracket =
                enumerate_p1(p1, trials).map_err(|e| CommandError::failure(e.to_string()))?;
            Ok(bracket_output(p1.field, &bracket))
        }
        ParsedInstance::P2(p2) => {
            let bracket =
                enumerate_p2(p2, trials).map_err(|e| CommandError::failure(e.to_string()))?;
            Ok(bracket_output(p2.field, &bracket))
        }
    }
}

/// `bounds`: the guarantee constants for a problem shape.
pub fn bounds_command(
    model: Model,
    m: usize,
    field: Field,
    q: Option<usize>,
    p: Option<&[usize]>,
) -> Result<String, CommandError> {
    if m < 1 {
        return Err(CommandError::failure("need at least one user"));
    }
    let (report, shape) = match model {
        Model::P1 => {
            if q.is_some() || p.is_some() {
                return Err(CommandError::failure("--Q/--P only apply to model p2"));
            }
            (bounds::mu_p1(m, field), json!({ "model": "p1", "field": field.to_string(), "M": m }))
        }
        Model::P2 => {
            let q = q.ok_or_else(|| CommandError::failure("model p2 needs --Q"))?;
            let p = p.ok_or_else(|| CommandError::failure("model p2 needs --P"))?;
            let quotas = expand_quotas(p, m)?;
            if quotas.iter().any(|&pi| pi < 1 || pi > q) {
                return Err(CommandError::failure(format!(
                    "every quota must lie in 1..={q}"
                )));
            }
            (
                bounds::mu_p2(&quotas, q, field),
                json!({
                    "model": "p2", "field": field.to_string(), "M": m, "Q": q, "P": quotas,
                }),
            )
        }
    };
    let mut out = shape;
    let obj = out.as_object_mut().expect("shape is an object");
    obj.insert("mu".into(), json!(report.mu));
    obj.insert("alpha_thresh".into(), json!(report.alpha_thresh));
    obj.insert("sigma".into(), json!(report.sigma));
    Ok(pretty(&out))
}

/// Arguments of the `experiment` subcommand before resolution.
#[derive(Clone, Debug)]
pub struct ExperimentArgs {
    /// Model name (`p1` / `p2`).
    pub model: String,
    /// Field name (`real` / `complex`).
    pub field: String,
    /// Users.
    pub m: usize,
    /// Channel dimension.
    pub n: usize,
    /// Slot count (p2 only).
    pub q: Option<usize>,
    /// Quotas (p2 only); one value broadcasts.
    pub p: Option<Vec<usize>>,
    /// Realizations.
    pub realizations: usize,
    /// Rounding trials per realization.
    pub trials: usize,
    /// Experiment seed.
    pub seed: u64,
    /// Output directory; falls back to `GROUPCAST_OUTPUT_DIR`, then `.`.
    pub output_dir: Option<PathBuf>,
    /// Worker-pool cap.
    pub threads: Option<usize>,
}

/// Resolve CLI arguments into a full experiment configuration.
pub fn resolve_experiment(args: &ExperimentArgs) -> Result<ExperimentConfig, CommandError> {
    let field = parse_field(&args.field)?;
    if args.m < 1 || args.n < 1 {
        return Err(CommandError::failure("need M >= 1 and N >= 1"));
    }
    if args.realizations < 1 || args.trials < 1 {
        return Err(CommandError::failure("need realizations >= 1 and trials >= 1"));
    }
    let model = match parse_model(&args.model)? {
        Model::P1 => {
            if args.q.is_some() || args.p.is_some() {
                return Err(CommandError::failure("--Q/--P only apply to model p2"));
            }
            ModelConfig::P1
        }
        Model::P2 => {
            let q = args.q.ok_or_else(|| CommandError::failure("model p2 needs --Q"))?;
            let p = args.p.as_deref().ok_or_else(|| CommandError::failure("model p2 needs --P"))?;
            let quotas = expand_quotas(p, args.m)?;
            if quotas.iter().any(|&pi| pi < 1 || pi > q) {
                return Err(CommandError::failure(format!("every quota must lie in 1..={q}")));
            }
            ModelConfig::P2 { q, p: quotas }
        }
    };
    let output_dir = args.output_dir.clone().unwrap_or_else(|| {
        std::env::var_os("GROUPCAST_OUTPUT_DIR").map_or_else(|| PathBuf::from("."), PathBuf::from)
    });
    Ok(ExperimentConfig {
        model,
        field,
        m: args.m,
        n: args.n,
        realizations: args.realizations,
        trials: args.trials,
        seed: args.seed,
        output_dir,
        threads: args.threads,
    })
}

/// `experiment`: run all realizations, persist the report files, and
/// echo the report JSON on stdout.
pub fn experiment_command(args: &ExperimentArgs) -> Result<String, CommandError> {
    let cfg = resolve_experiment(args)?;
    let report = run_experiment(&cfg);
    write_report_files(&report)
        .map_err(|e| CommandError::failure(format!("cannot write report files: {e}")))?;
    Ok(formats::report_json(&report))
}

/// `generate`: draw a random instance and print it in the instance file
/// format (handy for creating oracle/solve inputs).
pub fn generate_command(
    model: Model,
    field: Field,
    m: usize,
    n: usize,
    q: Option<usize>,
    p: Option<&[usize]>,
    seed: u64,
) -> Result<String, CommandError> {
    if m < 1 || n < 1 {
        return Err(CommandError::failure("need M >= 1 and N >= 1"));
    }
    let channels =
        crate::experiment::generate_channels(m, n, field, &mut StreamKey::new(seed, 0).channels());
    let inst = match model {
        Model::P1 => {
            if q.is_some() || p.is_some() {
                return Err(CommandError::failure("--Q/--P only apply to model p2"));
            }
            ParsedInstance::P1(groupcast_core::instance::InstanceP1 { field, channels })
        }
        Model::P2 => {
            let q = q.ok_or_else(|| CommandError::failure("model p2 needs --Q"))?;
            let p = p.ok_or_else(|| CommandError::failure("model p2 needs --P"))?;
            let quotas = expand_quotas(p, m)?;
            if quotas.iter().any(|&pi| pi < 1 || pi > q) {
                return Err(CommandError::failure(format!("every quota must lie in 1..={q}")));
            }
            ParsedInstance::P2(groupcast_core::instance::InstanceP2 {
                field,
                channels,
                q,
                priorities: quotas,
            })
        }
    };
    Ok(instance_json(&inst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_instance(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().expect("temp file");
        f.write_all(text.as_bytes()).expect("write");
        f
    }

    #[test]
    fn solve_p1_unit_channel_has_ratio_one() {
        let f = temp_instance(
            r#"{"model":"p1","field":"real","N":2,"M":1,"channels":[[1.0,0.0]]}"#,
        );
        let out = solve_command(Model::P1, f.path(), 10, 0, None).expect("solve");
        let v: Value = serde_json::from_str(&out).unwrap();
        let ratio = v["ratio"].as_f64().unwrap();
        assert!((ratio - 1.0).abs() <= 1e-6, "ratio = {ratio}");
        // Both slots cost the same for one user; exactly one is chosen.
        let row = v["rounded"]["beta"][0].as_array().unwrap();
        assert_eq!(row[0].as_u64().unwrap() + row[1].as_u64().unwrap(), 1);
        assert!(v["bound"]["satisfied"].as_bool().unwrap());
    }

    #[test]
    fn solve_rejects_model_mismatch_and_bad_files() {
        let p1 = temp_instance(
            r#"{"model":"p1","field":"real","N":2,"M":1,"channels":[[1.0,0.0]]}"#,
        );
        let err = solve_command(Model::P2, p1.path(), 5, 0, None).unwrap_err();
        assert_eq!(err.exit_code, EXIT_BAD_INSTANCE);

        let garbage = temp_instance("not json");
        let err = solve_command(Model::P1, garbage.path(), 5, 0, None).unwrap_err();
        assert_eq!(err.exit_code, EXIT_BAD_INSTANCE);

        let zero = temp_instance(
            r#"{"model":"p1","field":"real","N":2,"M":1,"channels":[[0.0,0.0]]}"#,
        );
        let err = solve_command(Model::P1, zero.path(), 5, 0, None).unwrap_err();
        assert_eq!(err.exit_code, EXIT_BAD_INSTANCE);
        assert!(err.payload["detail"].to_string().contains("ZERO_CHANNEL"));
    }

    #[test]
    fn bounds_p1_m5_real_matches_published_constants() {
        let out = bounds_command(Model::P1, 5, Field::Real, None, None).expect("bounds");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!((v["mu"].as_f64().unwrap() - 429.718).abs() < 5e-3);
        assert!((v["sigma"].as_f64().unwrap() - 0.0758).abs() < 5e-4);
    }

    #[test]
    fn bounds_p2_broadcasts_single_quota() {
        let out =
            bounds_command(Model::P2, 3, Field::Complex, Some(4), Some(&[2])).expect("bounds");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["P"], json!([2, 2, 2]));
        // 4 * sum P_i (Q - P_i + 1) / sqrt(pi) with three users.
        let expect = 4.0 * (3.0 * 2.0 * 3.0) / std::f64::consts::PI.sqrt();
        assert!((v["alpha_thresh"].as_f64().unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn oracle_brackets_the_solve_objective() {
        let f = temp_instance(
            r#"{"model":"p1","field":"real","N":2,"M":2,"channels":[[1.0,0.0],[0.0,1.0]]}"#,
        );
        let oracle = oracle_command(f.path(), 50).expect("oracle");
        let v: Value = serde_json::from_str(&oracle).unwrap();
        assert!(v["certified"].as_bool().unwrap());
        assert!((v["lower"].as_f64().unwrap() - 2.0).abs() < 1e-9);
        assert!((v["upper"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn generate_round_trips_through_the_parser() {
        let out = generate_command(Model::P2, Field::Complex, 3, 2, Some(3), Some(&[1]), 5)
            .expect("generate");
        let parsed = parse_instance(&out).expect("parse");
        let ParsedInstance::P2(p2) = parsed else { panic!("expected p2") };
        assert_eq!(p2.m(), 3);
        assert_eq!(p2.priorities, vec![1, 1, 1]);
    }

    #[test]
    fn experiment_resolution_checks_shape() {
        let base = ExperimentArgs {
            model: "p2".into(),
            field: "real".into(),
            m: 3,
            n: 2,
            q: Some(3),
            p: Some(vec![2]),
            realizations: 1,
            trials: 1,
            seed: 0,
            output_dir: Some(PathBuf::from(".")),
            threads: None,
        };
        let cfg = resolve_experiment(&base).expect("resolve");
        assert!(matches!(cfg.model, ModelConfig::P2 { q: 3, ref p } if p == &vec![2, 2, 2]));

        let mut missing_q = base.clone();
        missing_q.q = None;
        assert_eq!(resolve_experiment(&missing_q).unwrap_err().exit_code, EXIT_FAILURE);

        let mut p1_with_q = base;
        p1_with_q.model = "p1".into();
        assert_eq!(resolve_experiment(&p1_with_q).unwrap_err().exit_code, EXIT_FAILURE);
    }
}
