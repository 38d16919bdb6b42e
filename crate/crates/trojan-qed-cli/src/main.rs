//! Command-line entry point for the cavity Trojan-state model.
//!
//! Exit codes: 0 success, 1 numerical failure (diagnostic JSON on
//! stderr), 2 usage error.

mod output;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use output::{fmt_f64, Artifact, Format, Provenance};
use trojan_qed::cavity::{derive_mode_constants, CavityConfig, ModeConstants, UnitKind};
use trojan_qed::dynamics::{
    energy_of_branch, equations_of_motion, equilibrium_state, evolve, hamiltonian_rotating,
    omega_branches, Branch, EvolveOptions, PhaseState, SystemParams,
};
use trojan_qed::observables::{
    covariance_from_a, moment_report, squeezing_metrics, uncertainty_check, wigner_slice,
    GridSpec, MomentUnits, Plane,
};
use trojan_qed::quantum::{perturbation_series, solve_ground_state, QuadraticParams, SolveOptions};
use trojan_qed::stability::{stability_map, MapSpec};

/// Published reference values for the dimensionless quantum solve
/// (`--kappa-mode quoted`): q, κ − 1, and γ̄ as quoted for the reference
/// cavity. `consistent` instead derives them from the classical
/// equilibrium of the resolved parameters.
const Q_QUOTED: f64 = 0.95625;
const KAPPA_M1_QUOTED: f64 = 2e-11;
const GBAR_QUOTED: f64 = 0.295_799_884_775_272_9;

#[derive(Parser, Debug)]
#[command(
    name = "trojan-qed",
    version,
    about = "Classical and quantum reports for a Rydberg electron coupled to two cavity modes"
)]
struct Cli {
    /// Cavity geometry config file (JSON or TOML with R_m, L_m).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format; defaults to csv for row data, json for reports.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Relative tolerance for trajectory integration.
    #[arg(long, global = true, value_name = "TOL")]
    tol_ode: Option<f64>,
    /// Convergence tolerance for the quantum Newton solver (informational;
    /// the solver converges to machine-level residuals and this value is
    /// checked against the achieved residual).
    #[arg(long, global = true, value_name = "TOL")]
    tol_newton: Option<f64>,
    /// Quantum parameter source: `quoted` pins (q, κ−1, γ̄) to the
    /// published reference values; `consistent` derives them from the
    /// resolved classical equilibrium.
    #[arg(long, global = true, value_enum)]
    kappa_mode: Option<KappaMode>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KappaMode {
    Consistent,
    Quoted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BranchArg {
    Trojan,
    Anti,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitsArg {
    Natural,
    Orbit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlaneArg {
    /// Counter-rotating mode (Q+, P+).
    Qp,
    /// Co-rotating mode (Q-, P-).
    Qm,
}

/// Physical parameter source shared by most subcommands. Exactly one
/// source per run: cavity geometry (R, L, r0 — the default, at the
/// reference geometry R = 0.32cm, L = 1cm, r0 = 3600a0) or dimensionless
/// (q, gamma, optionally q-tilde).
#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Cavity radius with unit suffix (cm or m), e.g. 0.32cm.
    #[arg(long = "R", value_name = "LEN")]
    r_cavity: Option<String>,
    /// Cavity length with unit suffix (cm or m), e.g. 1cm.
    #[arg(long = "L", value_name = "LEN")]
    l_cavity: Option<String>,
    /// Orbit radius with unit suffix (a0, natural, cm, m), e.g. 3600a0.
    #[arg(long, value_name = "LEN")]
    r0: Option<String>,
    /// Coulomb-to-centrifugal ratio q (dimensionless source).
    #[arg(long)]
    q: Option<f64>,
    /// Atom–field coupling γ (dimensionless source).
    #[arg(long)]
    gamma: Option<f64>,
    /// Coulomb strength q̃ (dimensionless source; defaults to the
    /// reference cavity's value).
    #[arg(long = "q-tilde")]
    q_tilde: Option<f64>,
    /// Equilibrium branch (rotation faster or slower than the mode).
    #[arg(long, value_enum, default_value_t = BranchArg::Trojan)]
    branch: BranchArg,
}

#[derive(Subcommand, Debug, Clone)]
enum Cmd {
    /// Derive mode constants (ω, γ, q̃, field scales) from cavity geometry.
    Cavity {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Report the circulating equilibrium state and its invariants.
    Equilibrium {
        #[command(flatten)]
        params: ParamArgs,
        /// Orbital angle of the equilibrium (radians).
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
    },
    /// Sweep the two rotation-frequency branches over the orbit radius.
    Branches {
        #[command(flatten)]
        params: ParamArgs,
        /// Sweep start, natural length units.
        #[arg(long, default_value_t = 5.0)]
        r0_min: f64,
        /// Sweep end, natural length units.
        #[arg(long, default_value_t = 12.0)]
        r0_max: f64,
        #[arg(long, default_value_t = 400)]
        points: usize,
    },
    /// Integrate a rotating-frame trajectory from a perturbed equilibrium.
    Trajectory {
        #[command(flatten)]
        params: ParamArgs,
        /// End time in natural units (1/ω).
        #[arg(long, default_value_t = 1500.0)]
        t_end: f64,
        /// Initial momentum offsets dx,dy,dz in units of r₀: the launch
        /// momentum is r₀·(dx, κ + dy, dz).
        #[arg(long, value_name = "DX,DY,DZ", default_value = "0,0,0")]
        dp: String,
        /// Sampling interval in natural units.
        #[arg(long, default_value_t = 0.5)]
        sample_dt: f64,
        /// Discard samples before this time.
        #[arg(long, default_value_t = 0.0)]
        sample_start: f64,
    },
    /// Classify equilibrium stability over a grid of cavity radius R and
    /// orbit radius r₀ (the only parallel subcommand).
    StabilityMap {
        /// Smallest cavity radius (cm or m suffix).
        #[arg(long, default_value = "0.25cm")]
        r_min: String,
        /// Largest cavity radius (cm or m suffix).
        #[arg(long, default_value = "0.40cm")]
        r_max: String,
        /// Smallest orbit radius in units of 3600 a₀.
        #[arg(long, default_value_t = 0.8)]
        r0_min: f64,
        /// Largest orbit radius in units of 3600 a₀.
        #[arg(long, default_value_t = 1.2)]
        r0_max: f64,
        /// Grid as COLSxROWS over (R, r₀).
        #[arg(long, default_value = "100x100", value_name = "NXM")]
        grid: String,
        /// Cavity length (cm or m suffix).
        #[arg(long = "L", default_value = "1cm")]
        l_cavity: String,
    },
    /// Solve the Gaussian fundamental state of the coupled system.
    GroundState {
        #[command(flatten)]
        params: ParamArgs,
        /// Also report the perturbative series at orders 0..=2 next to
        /// the exact solution.
        #[arg(long)]
        series: bool,
    },
    /// Second moments, uncertainty products, and squeezing figures of the
    /// fundamental state.
    Moments {
        #[command(flatten)]
        params: ParamArgs,
        /// Electron moments in natural units or units of r₀²κ.
        #[arg(long, value_enum, default_value_t = UnitsArg::Orbit)]
        units: UnitsArg,
    },
    /// Reduced single-mode Wigner function on a grid around the
    /// classical field amplitude.
    Wigner {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = PlaneArg::Qm)]
        plane: PlaneArg,
        #[arg(long, default_value_t = 101)]
        nq: usize,
        #[arg(long, default_value_t = 101)]
        np: usize,
    },
    /// Conserved energy of the circulating solution versus detuning, on
    /// both branches.
    EnergyCurve {
        #[command(flatten)]
        params: ParamArgs,
        /// Largest |κ − 1| of the sweep (log-spaced down to 1e-8).
        #[arg(long, default_value_t = 0.2)]
        kappa_m1_max: f64,
        /// Points per branch half.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Run a canned figure or table configuration by name.
    Preset {
        /// One of: fig1..fig8, table1..table4.
        name: String,
    },
}

enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<trojan_qed::Error> for CliError {
    fn from(e: trojan_qed::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            // Downstream closed the pipe (e.g. `| head`); not a failure.
            std::process::exit(0);
        }
        CliError::Numerical(format!("i/o failure: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("{}", json!({"error": msg, "kind": "numerical"}));
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Cmd::Preset { name } = &cli.cmd {
        let argv = presets::preset_argv(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown preset '{name}'; available: {}",
                presets::NAMES.join(", ")
            ))
        })?;
        let mut inner = Cli::parse_from(argv);
        // Plumbing flags from the outer invocation win over preset values.
        inner.out = cli.out.clone();
        inner.config = cli.config.clone().or(inner.config);
        inner.format = cli.format.or(inner.format);
        inner.tol_ode = cli.tol_ode.or(inner.tol_ode);
        inner.tol_newton = cli.tol_newton.or(inner.tol_newton);
        inner.kappa_mode = cli.kappa_mode.or(inner.kappa_mode);
        return run(inner);
    }

    let tol_ode = cli.tol_ode.unwrap_or(1e-10);
    let tol_newton = cli.tol_newton.unwrap_or(1e-10);
    let kappa_mode = cli.kappa_mode.unwrap_or(KappaMode::Quoted);
    for (name, tol) in [("tol-ode", tol_ode), ("tol-newton", tol_newton)] {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage(format!("--{name} must be positive, got {tol}")));
        }
    }

    let ctx = RunContext { config: cli.config.clone(), tol_ode, tol_newton, kappa_mode };

    let (artifact, config_value, default_format) = match &cli.cmd {
        Cmd::Preset { .. } => unreachable!("handled above"),
        Cmd::Cavity { params } => run_cavity(params, &ctx)?,
        Cmd::Equilibrium { params, phi } => run_equilibrium(params, *phi, &ctx)?,
        Cmd::Branches { params, r0_min, r0_max, points } => {
            run_branches(params, *r0_min, *r0_max, *points, &ctx)?
        }
        Cmd::Trajectory { params, t_end, dp, sample_dt, sample_start } => {
            run_trajectory(params, *t_end, dp, *sample_dt, *sample_start, &ctx)?
        }
        Cmd::StabilityMap { r_min, r_max, r0_min, r0_max, grid, l_cavity } => {
            run_stability_map(r_min, r_max, *r0_min, *r0_max, grid, l_cavity, &ctx)?
        }
        Cmd::GroundState { params, series } => run_ground_state(params, *series, &ctx)?,
        Cmd::Moments { params, units } => run_moments(params, *units, &ctx)?,
        Cmd::Wigner { params, plane, nq, np } => run_wigner(params, *plane, *nq, *np, &ctx)?,
        Cmd::EnergyCurve { params, kappa_m1_max, points } => {
            run_energy_curve(params, *kappa_m1_max, *points, &ctx)?
        }
    };

    let format = cli.format.unwrap_or(default_format);
    let prov = Provenance::new(config_value);
    let bytes = output::render(&artifact, format, &prov);
    output::write_out(&bytes, cli.out.as_deref())?;
    Ok(())
}

struct RunContext {
    config: Option<PathBuf>,
    tol_ode: f64,
    tol_newton: f64,
    kappa_mode: KappaMode,
}

/// A fully resolved physical parameter set.
struct Resolved {
    params: SystemParams,
    /// Present when the run came from cavity geometry.
    mode: Option<ModeConstants>,
    /// JSON description of the resolved source, for provenance.
    source: Value,
}

/// Parse a suffixed length literal. Returns (value, suffix).
fn parse_length(s: &str) -> Result<(f64, &str), CliError> {
    for suffix in ["natural", "a0", "cm", "m"] {
        if let Some(num) = s.strip_suffix(suffix) {
            // Reject "1e-3" matching the bare "m"? "1e-3" has no suffix
            // path because stripping "m" leaves "1e-3" only for "1e-3m".
            let v: f64 = num.trim().parse().map_err(|_| {
                CliError::Usage(format!("invalid length literal '{s}'"))
            })?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("length must be positive: '{s}'")));
            }
            return Ok((v, suffix));
        }
    }
    Err(CliError::Usage(format!(
        "length '{s}' needs a unit suffix (cm, m, a0, natural)"
    )))
}

/// Length literal restricted to SI units, in meters.
fn parse_si_length(s: &str, what: &str) -> Result<f64, CliError> {
    let (v, suffix) = parse_length(s)?;
    match suffix {
        "cm" => Ok(v * 1e-2),
        "m" => Ok(v),
        other => Err(CliError::Usage(format!(
            "{what} must be an SI length (cm or m), got suffix '{other}'"
        ))),
    }
}

fn resolve(params: &ParamArgs, ctx: &RunContext) -> Result<Resolved, CliError> {
    let geometry_given =
        params.r_cavity.is_some() || params.l_cavity.is_some() || params.r0.is_some()
            || ctx.config.is_some();
    let dimensionless_given = params.q.is_some() || params.gamma.is_some();
    if geometry_given && dimensionless_given {
        return Err(CliError::Usage(
            "exactly one parameter source per run: cavity geometry (--R/--L/--r0/--config) \
             or dimensionless (--q/--gamma)"
                .into(),
        ));
    }

    if dimensionless_given {
        let q = params.q.ok_or_else(|| CliError::Usage("--q is required with --gamma".into()))?;
        let gamma = params
            .gamma
            .ok_or_else(|| CliError::Usage("--gamma is required with --q".into()))?;
        let q_tilde = params.q_tilde.unwrap_or_else(reference_q_tilde);
        if params.branch == BranchArg::Anti {
            return Err(CliError::Usage(
                "the anti branch needs the geometry source (--R/--L/--r0)".into(),
            ));
        }
        let sys = SystemParams::from_q_gamma(q, gamma, q_tilde)?;
        let source = json!({
            "kind": "dimensionless",
            "q": q, "gamma": gamma, "q_tilde": q_tilde,
        });
        return Ok(Resolved { params: sys, mode: None, source });
    }

    // Geometry source (the default).
    let cfg = match &ctx.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            CavityConfig::from_config_str(&text)?
        }
        None => {
            let r = params
                .r_cavity
                .as_deref()
                .map(|s| parse_si_length(s, "--R"))
                .transpose()?
                .unwrap_or(0.32e-2);
            let l = params
                .l_cavity
                .as_deref()
                .map(|s| parse_si_length(s, "--L"))
                .transpose()?
                .unwrap_or(1.0e-2);
            CavityConfig::new(r, l)?
        }
    };
    let mc = derive_mode_constants(&cfg)?;
    let r0_literal = params.r0.as_deref().unwrap_or("3600a0");
    let (v, suffix) = parse_length(r0_literal)?;
    let r0_nat = match suffix {
        "natural" => v,
        "a0" => mc.to_natural(v * cfg.constants.a0, UnitKind::Length),
        "cm" => mc.to_natural(v * 1e-2, UnitKind::Length),
        "m" => mc.to_natural(v, UnitKind::Length),
        _ => unreachable!(),
    };
    let branch = match params.branch {
        BranchArg::Trojan => Branch::Trojan,
        BranchArg::Anti => Branch::AntiTrojan,
    };
    let sys = SystemParams::from_geometry(mc.q_tilde, mc.gamma, r0_nat, branch)?;
    let source = json!({
        "kind": "geometry",
        "R_m": cfg.r_cavity, "L_m": cfg.l_cavity,
        "r0": r0_literal, "r0_natural": r0_nat,
        "branch": match branch { Branch::Trojan => "trojan", Branch::AntiTrojan => "anti" },
    });
    Ok(Resolved { params: sys, mode: Some(mc), source })
}

/// Dimensionless quantum parameters per the κ mode.
fn quantum_params(r: &Resolved, ctx: &RunContext) -> Result<QuadraticParams, CliError> {
    match ctx.kappa_mode {
        KappaMode::Quoted => {
            Ok(QuadraticParams::from_q_kappa_m1_gbar(Q_QUOTED, KAPPA_M1_QUOTED, GBAR_QUOTED)?)
        }
        KappaMode::Consistent => Ok(QuadraticParams::from_parts(
            r.params.q,
            r.params.kappa_m1,
            r.params.gamma,
        )?),
    }
}

fn reference_q_tilde() -> f64 {
    derive_mode_constants(&CavityConfig::reference())
        .expect("reference geometry is valid")
        .q_tilde
}

fn config_value(subcommand: &str, ctx: &RunContext, extra: Value) -> Value {
    json!({
        "subcommand": subcommand,
        "tol_ode": ctx.tol_ode,
        "tol_newton": ctx.tol_newton,
        "kappa_mode": match ctx.kappa_mode {
            KappaMode::Quoted => "quoted",
            KappaMode::Consistent => "consistent",
        },
        "args": extra,
    })
}

type RunOutput = (Artifact, Value, Format);

fn run_cavity(params: &ParamArgs, ctx: &RunContext) -> Result<RunOutput, CliError> {
    let r = resolve(params, ctx)?;
    let mc = r
        .mode
        .ok_or_else(|| CliError::Usage("cavity derivation needs the geometry source".into()))?;
    let data = serde_json::to_value(mc).unwrap();
    let cfg = config_value("cavity", ctx, r.source);
    Ok((Artifact::Report(data), cfg, Format::Json))
}

fn run_equilibrium(params: &ParamArgs, phi: f64, ctx: &RunContext) -> Result<RunOutput, CliError> {
    let r = resolve(params, ctx)?;
    let eq = equilibrium_state(&r.params, phi)?;
    let rhs = equations_of_motion(&eq.state, &r.params)?.to_array();
    let residual = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let energy = hamiltonian_rotating(&eq.state, &r.params)?;
    let mut data = json!({
        "state": eq.state,
        "phi": phi,
        "branch": eq.branch,
        "params": r.params,
        "kappa": r.params.kappa(),
        "hamiltonian_rotating": energy,
        "residual_inf_norm": residual,
    });
    if let Some(mc) = &r.mode {
        let field = trojan_qed::dynamics::dressed_field(&r.params, phi, mc)?;
        data["dressed_field_v_per_m"] = json!(field);
    }
    let cfg = config_value("equilibrium", ctx, json!({"source": r.source, "phi": phi}));
    Ok((Artifact::Report(data), cfg, Format::Json))
}

fn run_branches(
    params: &ParamArgs,
    r0_min: f64,
    r0_max: f64,
    points: usize,
    ctx: &RunContext,
) -> Result<RunOutput, CliError> {
    if !(r0_max > r0_min && r0_min > 0.0) || points < 2 {
        return Err(CliError::Usage("branches sweep needs 0 < r0-min < r0-max, points ≥ 2".into()));
    }
    let r = resolve(params, ctx)?;
    let (q_tilde, gamma) = (r.params.q_tilde, r.params.gamma);
    let headers = ["r0", "kappa_trojan", "kappa_anti", "energy_trojan", "energy_anti"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let r0 = r0_min + (r0_max - r0_min) * i as f64 / (points - 1) as f64;
        let (hi, lo) = omega_branches(r0, q_tilde, gamma, 1.0)?;
        let e_hi = energy_of_branch(hi - 1.0, q_tilde, gamma)
            .map(fmt_f64)
            .unwrap_or_default();
        let e_lo = energy_of_branch(lo - 1.0, q_tilde, gamma)
            .map(fmt_f64)
            .unwrap_or_default();
        rows.push(vec![fmt_f64(r0), fmt_f64(hi), fmt_f64(lo), e_hi, e_lo]);
    }
    let cfg = config_value(
        "branches",
        ctx,
        json!({"source": r.source, "r0_min": r0_min, "r0_max": r0_max, "points": points}),
    );
    Ok((Artifact::Table { headers, rows }, cfg, Format::Csv))
}

fn parse_triple(s: &str, what: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{what} must be three comma-separated numbers")))?;
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("{what} must have exactly three components")));
    }
    Ok([parts[0], parts[1], parts[2]])
}

fn run_trajectory(
    params: &ParamArgs,
    t_end: f64,
    dp: &str,
    sample_dt: f64,
    sample_start: f64,
    ctx: &RunContext,
) -> Result<RunOutput, CliError> {
    if !(t_end > 0.0 && sample_dt > 0.0 && sample_start >= 0.0) {
        return Err(CliError::Usage("trajectory times must be positive".into()));
    }
    let [dx, dy, dz] = parse_triple(dp, "--dp")?;
    let r = resolve(params, ctx)?;
    let p = &r.params;
    let eq = equilibrium_state(p, 0.0)?;
    let s0 = PhaseState {
        px: dx * p.r0,
        py: (p.kappa() + dy) * p.r0,
        pz: dz * p.r0,
        ..eq.state
    };
    let opts = EvolveOptions {
        rtol: ctx.tol_ode,
        atol: ctx.tol_ode * 1e-2,
        sample_dt,
        sample_start,
        ..Default::default()
    };
    let traj = evolve(&s0, p, t_end, &opts)?;
    let headers = ["t", "x", "y", "z", "px", "py", "pz", "Qp", "Qm", "Pp", "Pm", "H"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::with_capacity(traj.t.len());
    for (k, t) in traj.t.iter().enumerate() {
        let s = &traj.states[k];
        rows.push(vec![
            fmt_f64(*t),
            fmt_f64(s.x),
            fmt_f64(s.y),
            fmt_f64(s.z),
            fmt_f64(s.px),
            fmt_f64(s.py),
            fmt_f64(s.pz),
            fmt_f64(s.qp),
            fmt_f64(s.qm),
            fmt_f64(s.pp),
            fmt_f64(s.pm),
            fmt_f64(traj.hamiltonian[k]),
        ]);
    }
    let cfg = config_value(
        "trajectory",
        ctx,
        json!({
            "source": r.source, "t_end": t_end, "dp": [dx, dy, dz],
            "sample_dt": sample_dt, "sample_start": sample_start,
        }),
    );
    Ok((Artifact::Table { headers, rows }, cfg, Format::Csv))
}

#[allow(clippy::too_many_arguments)]
fn run_stability_map(
    r_min: &str,
    r_max: &str,
    r0_min: f64,
    r0_max: f64,
    grid: &str,
    l_cavity: &str,
    ctx: &RunContext,
) -> Result<RunOutput, CliError> {
    let r_lo = parse_si_length(r_min, "--r-min")?;
    let r_hi = parse_si_length(r_max, "--r-max")?;
    let l = parse_si_length(l_cavity, "--L")?;
    let (n_r, n_r0) = grid
        .split_once(['x', 'X'])
        .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
        .ok_or_else(|| CliError::Usage(format!("--grid must look like 100x100, got '{grid}'")))?;
    if !(r_hi > r_lo && r0_max > r0_min && r0_min > 0.0) {
        return Err(CliError::Usage("stability-map ranges must be increasing and positive".into()));
    }
    let spec = MapSpec {
        r_cavity: (r_lo, r_hi),
        r0_units: (r0_min, r0_max),
        grid: (n_r, n_r0),
        l_cavity: l,
    };
    let map = stability_map(&spec)?;
    let headers = ["R_m", "r0_3600a0", "status", "max_real_part", "z_mode_freq"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::with_capacity(map.cells.len());
    for cell in &map.cells {
        match &cell.verdict {
            Some(v) => rows.push(vec![
                fmt_f64(cell.r_cavity),
                fmt_f64(cell.r0_units),
                (if v.stable { "stable" } else { "unstable" }).to_string(),
                fmt_f64(v.max_real_part),
                fmt_f64(v.z_mode_freq),
            ]),
            None => rows.push(vec![
                fmt_f64(cell.r_cavity),
                fmt_f64(cell.r0_units),
                "invalid".to_string(),
                String::new(),
                String::new(),
            ]),
        }
    }
    for (r_c, r0_u) in &map.boundary {
        rows.push(vec![
            fmt_f64(*r_c),
            fmt_f64(*r0_u),
            "boundary".to_string(),
            String::new(),
            String::new(),
        ]);
    }
    let cfg = config_value("stability-map", ctx, serde_json::to_value(spec).unwrap());
    Ok((Artifact::Table { headers, rows }, cfg, Format::Csv))
}

fn run_ground_state(params: &ParamArgs, series: bool, ctx: &RunContext) -> Result<RunOutput, CliError> {
    let r = resolve(params, ctx)?;
    let qp = quantum_params(&r, ctx)?;
    let rep = solve_ground_state(&qp, None, &SolveOptions::default())?;
    if rep.residual_norm > ctx.tol_newton {
        return Err(CliError::Numerical(format!(
            "ground-state residual {:.3e} above --tol-newton {:.3e}",
            rep.residual_norm, ctx.tol_newton
        )));
    }
    let mut data = json!({
        "a": rep.a,
        "residual_norm": rep.residual_norm,
        "iterations": rep.iterations,
        "continuation": rep.seed_path,
        "q": qp.q,
        "kappa_m1": qp.kappa_m1,
        "gamma_bar": qp.gamma_bar(),
    });
    if series {
        let mut orders = serde_json::Map::new();
        for order in 0..=2u8 {
            let a = perturbation_series(&qp, order)?;
            orders.insert(format!("order_{order}"), serde_json::to_value(a).unwrap());
        }
        data["series"] = Value::Object(orders);
    }
    let cfg = config_value(
        "ground-state",
        ctx,
        json!({"source": r.source, "series": series}),
    );
    Ok((Artifact::Report(data), cfg, Format::Json))
}

fn run_moments(params: &ParamArgs, units: UnitsArg, ctx: &RunContext) -> Result<RunOutput, CliError> {
    let r = resolve(params, ctx)?;
    let qp = quantum_params(&r, ctx)?;
    let rep = solve_ground_state(&qp, None, &SolveOptions::default())?;
    let cov = covariance_from_a(&rep.a)?;
    let munits = match units {
        UnitsArg::Natural => MomentUnits::Natural,
        UnitsArg::Orbit => MomentUnits::Orbit { r0: r.params.r0, kappa: qp.kappa() },
    };
    let moments = moment_report(&cov, munits);
    let uncertainty = uncertainty_check(&cov, munits);
    let squeezing = squeezing_metrics(&cov);
    let data = json!({
        "units": match units { UnitsArg::Natural => "natural", UnitsArg::Orbit => "orbit" },
        "moments": moments,
        "uncertainty": uncertainty,
        "squeezing": squeezing,
        "symplectic_eigenvalues": cov.symplectic_eigenvalues(),
    });
    let cfg = config_value(
        "moments",
        ctx,
        json!({"source": r.source, "units": match units {
            UnitsArg::Natural => "natural",
            UnitsArg::Orbit => "orbit",
        }}),
    );
    Ok((Artifact::Report(data), cfg, Format::Json))
}

fn run_wigner(
    params: &ParamArgs,
    plane: PlaneArg,
    nq: usize,
    np: usize,
    ctx: &RunContext,
) -> Result<RunOutput, CliError> {
    if nq < 2 || np < 2 {
        return Err(CliError::Usage("wigner grid needs at least 2x2 points".into()));
    }
    let r = resolve(params, ctx)?;
    let qp = quantum_params(&r, ctx)?;
    let rep = solve_ground_state(&qp, None, &SolveOptions::default())?;
    let cov = covariance_from_a(&rep.a)?;
    let eq = equilibrium_state(&r.params, 0.0)?;
    let (pl, center) = match plane {
        PlaneArg::Qp => (Plane::QpPp, (eq.state.qp, eq.state.pp)),
        PlaneArg::Qm => (Plane::QmPm, (eq.state.qm, eq.state.pm)),
    };
    let grid = GridSpec { nq, np, q_half_width: None, p_half_width: None };
    let slice = wigner_slice(&cov, pl, &grid, center)?;
    let headers = ["q_offset", "p_offset", "w"].map(String::from).to_vec();
    let mut rows = Vec::with_capacity(nq * np);
    for (i, qv) in slice.q_axis.iter().enumerate() {
        for (j, pv) in slice.p_axis.iter().enumerate() {
            rows.push(vec![fmt_f64(*qv), fmt_f64(*pv), fmt_f64(slice.w[i][j])]);
        }
    }
    let cfg = config_value(
        "wigner",
        ctx,
        json!({
            "source": r.source,
            "plane": match plane { PlaneArg::Qp => "qp", PlaneArg::Qm => "qm" },
            "nq": nq, "np": np,
            "center": [center.0, center.1],
        }),
    );
    Ok((Artifact::Table { headers, rows }, cfg, Format::Csv))
}

fn run_energy_curve(
    params: &ParamArgs,
    kappa_m1_max: f64,
    points: usize,
    ctx: &RunContext,
) -> Result<RunOutput, CliError> {
    if !(kappa_m1_max > 1e-8) || points < 2 {
        return Err(CliError::Usage(
            "energy-curve needs --kappa-m1-max > 1e-8 and --points ≥ 2".into(),
        ));
    }
    let r = resolve(params, ctx)?;
    let (q_tilde, gamma) = (r.params.q_tilde, r.params.gamma);
    let headers = ["kappa_m1", "branch", "energy"].map(String::from).to_vec();
    let mut rows = Vec::with_capacity(2 * points);
    let log_lo = 1e-8_f64.ln();
    let log_hi = kappa_m1_max.ln();
    // Anti branch first (κ < 1), most negative detuning first, so rows
    // are ordered by κ − 1.
    for i in (0..points).rev() {
        let eps = (log_lo + (log_hi - log_lo) * i as f64 / (points - 1) as f64).exp();
        if let Ok(e) = energy_of_branch(-eps, q_tilde, gamma) {
            rows.push(vec![fmt_f64(-eps), "anti".to_string(), fmt_f64(e)]);
        }
    }
    for i in 0..points {
        let eps = (log_lo + (log_hi - log_lo) * i as f64 / (points - 1) as f64).exp();
        if let Ok(e) = energy_of_branch(eps, q_tilde, gamma) {
            rows.push(vec![fmt_f64(eps), "trojan".to_string(), fmt_f64(e)]);
        }
    }
    let cfg = config_value(
        "energy-curve",
        ctx,
        json!({"source": r.source, "kappa_m1_max": kappa_m1_max, "points": points}),
    );
    Ok((Artifact::Table { headers, rows }, cfg, Format::Csv))
}
