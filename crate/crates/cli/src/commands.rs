use std::fmt::Write as _;
use std::sync::Arc;

use condiff::conditioning::ConditionedDiffusion;
use condiff::diffusion::{
    check_assumptions, hitting_probability, AssumptionReport, DiffusionError, DiffusionSpec, ScaleSpeed,
    ScaleSpeedOptions, Verdict,
};
use condiff::montecarlo::{
    exact_sampler, ks_statistic, simulate_killed_conditioned, simulate_paths, weighted_expectation,
    EmpiricalDistribution, KillCondSetup, MeanEstimate, MonteCarloError, PathFlag, Record, SimConfig,
};

use crate::cli::Command;

/// Exit codes: 0 success, 1 usage or config, 2 assumption failure,
/// 3 verification failure, 4 degenerate sampling.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Assumption(String),
    Degenerate(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Assumption(_) => 2,
            Failure::Degenerate(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Assumption(m) | Failure::Degenerate(m) => m,
        }
    }
}

impl From<DiffusionError> for Failure {
    fn from(e: DiffusionError) -> Self {
        match e {
            DiffusionError::AssumptionViolated(m) => Failure::Assumption(format!("assumption violated: {m}")),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<MonteCarloError> for Failure {
    fn from(e: MonteCarloError) -> Self {
        match e {
            MonteCarloError::Diffusion(d) => d.into(),
            e @ MonteCarloError::NoAcceptedPaths { .. } => Failure::Degenerate(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

/// What a successful run produced.
pub struct Output {
    pub text: String,
    /// 0, or 2/3 for reports that are printed but count as failures.
    pub exit: u8,
    /// Extra line for stderr.
    pub note: Option<String>,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, exit: 0, note: None }
    }
}

pub struct Context<'a> {
    pub spec: &'a DiffusionSpec,
    pub tol: f64,
    pub seed: u64,
}

/// A test function for the weighted-vs-direct checks.
type TestFn<'a> = Box<dyn Fn(f64) -> f64 + 'a>;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_grid(src: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Config(format!("grid must be lo:hi:n with lo < hi and n >= 2, got '{src}'"));
    let parts: Vec<&str> = src.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && n >= 2) {
        return Err(bad());
    }
    Ok((0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
}

fn report_text(r: &AssumptionReport) -> String {
    let verdict = match r.overall {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
    };
    format!(
        "s_ell_finite={}\ns_infinity_infinite={}\nleft={}\nright={}\noverall={verdict}\n",
        r.s_ell_finite, r.s_infinity_infinite, r.left_verdict, r.right_verdict
    )
}

fn require_assumptions(spec: &DiffusionSpec, tol: f64) -> Result<(), Failure> {
    let r = check_assumptions(spec, tol);
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::Assumption(format!("assumption check failed\n{}", report_text(&r).trim_end())))
    }
}

fn scale_speed(spec: &DiffusionSpec, tol: f64, upper: Option<f64>) -> Result<Arc<ScaleSpeed>, Failure> {
    require_assumptions(spec, tol)?;
    Ok(Arc::new(ScaleSpeed::build(spec, ScaleSpeedOptions { tol, upper })?))
}

/// The conditioned process with its cached grid reaching the explosion cap.
fn conditioned(spec: &DiffusionSpec, tol: f64, cap: f64) -> Result<ConditionedDiffusion, Failure> {
    let upper = spec.ell.is_finite().then_some(cap);
    Ok(ConditionedDiffusion::from_scale_speed(scale_speed(spec, tol, upper)?))
}

fn domain_grid(spec: &DiffusionSpec, grid: &str) -> Result<Vec<f64>, Failure> {
    let xs = parse_grid(grid)?;
    for &x in &xs {
        spec.check_domain(x)?;
    }
    Ok(xs)
}

fn sim_config(spec: &DiffusionSpec, x0: f64, t: f64, dt: f64, paths: u64, seed: u64) -> SimConfig {
    SimConfig::new(spec.ell, x0, t, dt, paths, seed)
}

/// Fills every optional flag with the value the run actually used.
pub fn materialize(cmd: &Command, spec: &DiffusionSpec) -> Command {
    let mut cmd = cmd.clone();
    match &mut cmd {
        Command::Simulate { x0, t, dt, paths, lower_guard, cap, .. } => {
            let start = x0.unwrap_or(spec.w);
            let defaults = sim_config(spec, start, *t, *dt, *paths, 0);
            *x0 = Some(start);
            lower_guard.get_or_insert(defaults.lower_guard);
            cap.get_or_insert(defaults.explosion_cap);
        }
        Command::Verify { x0, .. } => {
            x0.get_or_insert(spec.w);
        }
        _ => {}
    }
    cmd
}

pub fn run(cmd: &Command, ctx: &Context) -> Result<Output, Failure> {
    let Context { spec, tol, seed } = *ctx;
    match cmd {
        Command::Scale { grid } => {
            let xs = domain_grid(spec, grid)?;
            let ss = scale_speed(spec, tol, None)?;
            let mut out = String::from("x,B,s_prime,s,m_prime\n");
            for x in xs {
                let p = ss.point(x)?;
                let row = [x, p.big_b, (-p.big_b).exp(), p.log_s.exp(), ss.m_prime(x)?];
                writeln!(out, "{}", row.map(num).join(",")).unwrap();
            }
            Ok(Output::ok(out))
        }
        Command::Condition { grid } => {
            let xs = domain_grid(spec, grid)?;
            let cd = ConditionedDiffusion::from_scale_speed(scale_speed(spec, tol, None)?);
            let mut out = String::from("x,b,b_tilde,correction\n");
            for x in xs {
                let row = [x, spec.drift(x), cd.b_tilde(x)?, cd.correction(x)?];
                writeln!(out, "{}", row.map(num).join(",")).unwrap();
            }
            Ok(Output::ok(out))
        }
        Command::Simulate { conditioned: cond, x0, t, dt, paths, lower_guard, cap, full_path } => {
            let mut cfg = sim_config(spec, x0.unwrap_or(spec.w), *t, *dt, *paths, seed);
            if let Some(g) = lower_guard {
                cfg.lower_guard = *g;
            }
            if let Some(c) = cap {
                cfg.explosion_cap = *c;
            }
            if *full_path {
                cfg.record = Record::FullPath;
            }
            cfg.validate(spec.ell)?;
            let ensemble = if *cond {
                simulate_paths(&conditioned(spec, tol, cfg.explosion_cap)?, &cfg)?
            } else {
                simulate_paths(spec, &cfg)?
            };
            let mut out = String::new();
            if *full_path {
                out.push_str("path_id,flag,t,value\n");
                for p in &ensemble.paths {
                    let last = p.trajectory.len().saturating_sub(1);
                    for (i, &(t, x)) in p.trajectory.iter().enumerate() {
                        let flag = if i == last { p.flag } else { PathFlag::Alive };
                        writeln!(out, "{},{},{},{}", p.id, flag.as_str(), num(t), num(x)).unwrap();
                    }
                }
            } else {
                out.push_str("value\n");
                for v in ensemble.marginal()?.samples() {
                    writeln!(out, "{}", num(*v)).unwrap();
                }
            }
            let flags = [PathFlag::Alive, PathFlag::HitLowerGuard, PathFlag::Exploded, PathFlag::Aborted];
            let note = std::iter::once(format!("paths={}", ensemble.paths.len()))
                .chain(flags.iter().map(|&f| format!("{}={}", f.as_str(), ensemble.count(f))))
                .collect::<Vec<_>>()
                .join(" ");
            Ok(Output { text: out, exit: 0, note: Some(note) })
        }
        Command::Verify { lambda, a, t, paths, x0, dt, reference_paths, check_paths, ks_threshold } => verify(
            ctx,
            &VerifyArgs {
                lambda: *lambda,
                a: *a,
                t: *t,
                paths: *paths,
                x0: x0.unwrap_or(spec.w),
                dt: *dt,
                reference_paths: *reference_paths,
                check_paths: *check_paths,
                ks_threshold: *ks_threshold,
            },
        ),
        Command::Hitprob { y, z } => {
            let ss = scale_speed(spec, tol, None)?;
            let p = hitting_probability(&ss, *y, *z)?;
            Ok(Output::ok(format!("y={}\nz={}\np={}\n", num(*y), num(*z), num(p))))
        }
        Command::Check => {
            let r = check_assumptions(spec, tol);
            Ok(Output { text: report_text(&r), exit: if r.passed() { 0 } else { 2 }, note: None })
        }
        Command::Replay { .. } => Err(Failure::Config("replay is handled before dispatch".into())),
    }
}

struct VerifyArgs {
    lambda: f64,
    a: f64,
    t: f64,
    paths: u64,
    x0: f64,
    dt: f64,
    reference_paths: u64,
    check_paths: u64,
    ks_threshold: f64,
}

fn verify(ctx: &Context, v: &VerifyArgs) -> Result<Output, Failure> {
    let Context { spec, tol, seed } = *ctx;
    let mut lines: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, val: String| lines.push((k.to_string(), val));
    put("model", spec.name.clone());
    put("lambda", num(v.lambda));
    put("a", num(v.a));
    put("t", num(v.t));
    put("x0", num(v.x0));
    put("dt", num(v.dt));
    put("paths", v.paths.to_string());
    put("seed", seed.to_string());

    let cfg = sim_config(spec, v.x0, v.t.max(v.dt), v.dt, v.paths, seed);
    let setup = KillCondSetup { lambda: v.lambda, a: v.a, t_obs: v.t };
    let cd = conditioned(spec, tol, cfg.explosion_cap)?;
    let killed = simulate_killed_conditioned(spec, &setup, &cfg)?;
    put("accepted", killed.accepted.to_string());
    put("total", killed.total.to_string());
    put("acc_prob", num(killed.acc_prob));

    // The conditioned law itself: exact where a closed form exists.
    let (reference, kind) =
        match spec.preset.as_ref().map(|p| exact_sampler(p, true, v.x0, v.t, v.reference_paths, seed)) {
            Some(Ok(e)) => (e, "exact"),
            Some(Err(MonteCarloError::UnsupportedPreset(_))) | None => {
                let c = SimConfig { n_paths: v.reference_paths, seed: seed.wrapping_add(1), ..cfg };
                let c = SimConfig { t_end: v.t, ..c };
                (simulate_paths(&cd, &c)?.marginal()?, "direct")
            }
            Some(Err(e)) => return Err(e.into()),
        };
    let ks = ks_statistic(&killed.samples, &reference)?;
    let ks_pass = ks < v.ks_threshold;
    put("reference", kind.to_string());
    put("reference_n", reference.len().to_string());
    put("ks", num(ks));
    put("ks_threshold", num(v.ks_threshold));
    put("ks_pass", ks_pass.to_string());

    // Importance-weighted base paths against direct paths of the conditioned process.
    let check_cfg = SimConfig { n_paths: v.check_paths, t_end: v.t, ..cfg };
    let direct: EmpiricalDistribution =
        simulate_paths(&cd, &SimConfig { seed: seed.wrapping_add(2), ..check_cfg })?.marginal()?;
    let m_cap = v.x0 + 2.0 * spec.scale();
    let checks: [(&str, TestFn); 3] = [
        ("one", Box::new(|_| 1.0)),
        ("above_x0", Box::new(move |z| if z > v.x0 { 1.0 } else { 0.0 })),
        ("min_cap", Box::new(move |z: f64| z.min(m_cap))),
    ];
    let mut all_pass = ks_pass;
    for (name, g) in &checks {
        let w = weighted_expectation(cd.scale_speed(), g, &check_cfg)?;
        let d: MeanEstimate = direct.mean_of(g);
        let delta = (w.estimate - d.mean).abs();
        let se = (w.std_error.powi(2) + d.std_error.powi(2)).sqrt();
        let pass = delta <= 3.0 * se || delta <= 1e-12;
        all_pass &= pass;
        put(&format!("weighted_{name}"), num(w.estimate));
        put(&format!("direct_{name}"), num(d.mean));
        put(&format!("delta_{name}"), num(delta));
        put(&format!("se_{name}"), num(se));
        put(&format!("pass_{name}"), pass.to_string());
    }
    put("status", if all_pass { "pass" } else { "fail" }.to_string());
    let text = lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    Ok(Output { text, exit: if all_pass { 0 } else { 3 }, note: Some(killed.summary()) })
}
