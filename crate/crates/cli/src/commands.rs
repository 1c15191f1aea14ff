//! One function per subcommand: resolve options, compute, write artifacts.

use std::io::BufWriter;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use vfl_core::field::write_vfld;
use vfl_core::regularity::{
    admissible_constant, case3_check, continuity_check, function_valued_check, gamma_domain_check,
    h2_verify, holder_estimate_path, limit_measure, sobolev_check, HolderTarget, RegularityReport,
    DIVERGENCE_MARGIN, STABLE_REL,
};
use vfl_core::resolvent::{default_tol, solve_both};
use vfl_core::verification::{BATCH_PASS_RATE, HARD_FAIL_SIGMA, MIN_REPS, PASS_SIGMA};
use vfl_core::{
    heat_battery, simulate_path, solve_r, solve_s, subordination_check, torus_coefficients,
    yosida_convergence_table, Convention, FracParams, Kernel, NoiseSeed, Regime, SpectralSpec,
    TimeGrid,
};

use crate::config::{
    config_err, parse_mode, parse_spectral, spectral_from, CliError, KernelArg, SymbolArg,
};
use crate::output::Output;
use crate::plot::{Plot, Series};

/// Most points drawn per SVG series.
const PLOT_POINTS: usize = 2000;

fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn kernel_or(arg: &Option<KernelArg>, default: Kernel) -> Result<Kernel, CliError> {
    arg.as_ref().map_or(Ok(default), KernelArg::resolve)
}

fn thin(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let step = points.len().div_ceil(PLOT_POINTS).max(1);
    let last = points.last().copied();
    let mut out: Vec<(f64, f64)> = points.into_iter().step_by(step).collect();
    if let (Some(l), Some(o)) = (last, out.last()) {
        if *o != l {
            out.push(l);
        }
    }
    out
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serialises") + "\n"
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    S,
    R,
    Both,
}

/// Scalar resolvent `s` and kernel resolvent `r` on a uniform grid.
#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventOpts {
    /// constant | linear | exp | linexp | power:<alpha> | table:<csv> | JSON
    #[arg(long)]
    pub kernel: Option<KernelArg>,
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// ch4_plus | ch1_minus
    #[arg(long, value_parser = serde_enum::<Convention>)]
    pub convention: Option<Convention>,
    #[arg(long)]
    pub which: Option<Which>,
}

#[derive(Serialize)]
struct ResolventCfg {
    kernel: Kernel,
    mu: Vec<f64>,
    tmax: f64,
    h: f64,
    tol: f64,
    convention: Convention,
    which: Which,
}

pub fn resolvent(o: ResolventOpts, mut out: Output) -> Result<(), CliError> {
    let kernel = kernel_or(&o.kernel, Kernel::Exponential)?;
    let tol = o.tol.unwrap_or_else(|| default_tol(&kernel));
    let c = ResolventCfg {
        mu: o.mu.unwrap_or_else(|| vec![1.0]),
        tmax: o.tmax.unwrap_or(2.0),
        h: o.h.unwrap_or(1e-3),
        tol,
        convention: o.convention.unwrap_or(Convention::Ch4Plus),
        // r is unbounded at 0 for singular kernels
        which: o.which.unwrap_or(if kernel.is_singular_at_zero() {
            Which::S
        } else {
            Which::Both
        }),
        kernel,
    };
    let grid = TimeGrid::new(c.tmax, c.h)?;
    let res = match c.which {
        Which::S => solve_s(&c.kernel, &c.mu, &grid, c.tol)?,
        Which::R => solve_r(&c.kernel, &c.mu, &grid, c.tol, c.convention)?,
        Which::Both => solve_both(&c.kernel, &c.mu, &grid, c.tol, c.convention)?,
    };
    out.write("resolvent.csv", res.to_csv())?;
    let mut plot = Plot::new(
        format!("resolvents, kernel {}", c.kernel.label()),
        "t",
        "value",
    );
    for (name, values) in [("s", &res.s_values), ("r", &res.r_values)] {
        for (mu, v) in c.mu.iter().zip(values.iter()) {
            let pts = v.iter().enumerate().map(|(i, &y)| (grid.t(i), y)).collect();
            plot = plot.with(Series::new(format!("{name}, mu={mu}"), thin(pts)));
        }
    }
    out.write("resolvent.svg", plot.render())?;
    let summary = json!({
        "kernel": c.kernel.label(),
        "nodes": grid.len(),
        "residual_max": res.residual_max,
        "tol_met": res.residual_max <= c.tol,
    });
    out.write("resolvent.json", pretty(&summary))?;
    println!(
        "resolvent: {} nodes, residual_max = {:e}",
        grid.len(),
        res.residual_max
    );
    out.finish("resolvent", &c, json!({ "tol": c.tol }))
}

/// Subordination residuals `|E_α(-μt^α) - ∫ Φ_γ s_β|` over a `μ × t` table.
#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubordinateOpts {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// 1 (semigroup) or 2 (cosine family)
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Residual bound reported as `pass`.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Serialize)]
struct SubordinateCfg {
    alpha: f64,
    beta: f64,
    mu: Vec<f64>,
    t: Vec<f64>,
    tol: f64,
}

pub fn subordinate(o: SubordinateOpts, mut out: Output) -> Result<(), CliError> {
    let c = SubordinateCfg {
        alpha: o.alpha.unwrap_or(0.5),
        beta: o.beta.unwrap_or(1.0),
        mu: o.mu.unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
        t: o.t.unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
        tol: o.tol.unwrap_or(1e-6),
    };
    let params = FracParams::new(c.alpha, c.beta)?;
    let pairs: Vec<(f64, f64)> =
        c.mu.iter()
            .flat_map(|&m| c.t.iter().map(move |&t| (m, t)))
            .collect();
    let residuals = pairs
        .par_iter()
        .map(|&(m, t)| subordination_check(c.alpha, c.beta, m, t))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut csv = String::from("mu,t,residual\n");
    for (&(m, t), r) in pairs.iter().zip(&residuals) {
        csv.push_str(&format!("{m},{t},{r:.6e}\n"));
    }
    out.write("subordinate.csv", csv)?;
    let max = residuals.iter().copied().fold(0.0, f64::max);
    let rows: Vec<_> = pairs
        .iter()
        .zip(&residuals)
        .map(|(&(m, t), &r)| json!({"mu": m, "t": t, "residual": r}))
        .collect();
    let report = json!({
        "alpha": c.alpha, "beta": c.beta, "gamma": params.gamma,
        "rows": rows, "max_residual": max, "pass": max < c.tol,
    });
    out.write("subordinate.json", pretty(&report))?;
    println!(
        "subordinate: max residual {max:e} ({})",
        if max < c.tol { "pass" } else { "fail" }
    );
    let tol = json!({ "tol": c.tol, "series_terms": params.series_terms, "switch_radius": params.switch_radius });
    out.finish("subordinate", &c, tol)
}

/// Sup distance between `s(·; γ_n)` and `s(·; γ)` for Yosida parameters.
#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YosidaOpts {
    #[arg(long)]
    pub kernel: Option<KernelArg>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Serialize)]
struct YosidaCfg {
    kernel: Kernel,
    gamma: f64,
    n: Vec<u64>,
    tmax: f64,
    h: f64,
    tol: f64,
}

pub fn yosida(o: YosidaOpts, mut out: Output) -> Result<(), CliError> {
    let kernel = kernel_or(&o.kernel, Kernel::Exponential)?;
    let c = YosidaCfg {
        tol: o.tol.unwrap_or_else(|| default_tol(&kernel)),
        gamma: o.gamma.unwrap_or(4.0),
        n: o.n.unwrap_or_else(|| (3..=10).map(|j| 1u64 << j).collect()),
        tmax: o.tmax.unwrap_or(2.0),
        h: o.h.unwrap_or(1e-3),
        kernel,
    };
    let grid = TimeGrid::new(c.tmax, c.h)?;
    let sweep = yosida_convergence_table(&c.kernel, c.gamma, &c.n, &grid, c.tol)?;
    out.write("yosida.csv", sweep.to_csv())?;
    let pts =
        c.n.iter()
            .zip(&sweep.sup_distances)
            .map(|(&n, &d)| (n as f64, d))
            .collect();
    let plot = Plot::new(
        format!(
            "Yosida sweep, kernel {}, gamma {}",
            c.kernel.label(),
            c.gamma
        ),
        "n",
        "sup distance",
    )
    .log_log()
    .with(Series::new("sup |s_n - s|", pts));
    out.write("yosida.svg", plot.render())?;
    let report = json!({
        "kernel": c.kernel.label(), "gamma": c.gamma, "n": c.n,
        "gamma_n": sweep.gamma_n, "sup_distances": sweep.sup_distances,
        "fitted_slope": sweep.fitted_slope, "target_met": sweep.target_met,
        "hypothesis_violated": sweep.hypothesis_violated, "max_abs_s": sweep.max_abs_s,
    });
    out.write("yosida.json", pretty(&report))?;
    println!(
        "yosida: final distance {:e}, slope {}",
        sweep.sup_distances.last().copied().unwrap_or(f64::NAN),
        sweep
            .fitted_slope
            .map_or("n/a".into(), |s| format!("{s:.4}"))
    );
    out.finish("yosida", &c, json!({ "tol": c.tol }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FieldFormat {
    Csv,
    Vfld,
    Both,
}

/// Time-coupled Galerkin path of the torus field.
#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOpts {
    #[arg(long)]
    pub d: Option<usize>,
    /// Decay `γ_n = (1+|n|²)^{-q}`.
    #[arg(long)]
    pub q: Option<f64>,
    /// Torus covariance as JSON (instead of `q`).
    #[arg(long, value_parser = parse_spectral)]
    pub spectral: Option<SpectralSpec>,
    /// Truncation `|n|_∞ <= N`.
    #[arg(long = "N", visible_alias = "n-max")]
    #[serde(rename = "N")]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub kernel: Option<KernelArg>,
    /// laplacian | frac:<alpha> | quad:<entries> | JSON
    #[arg(long)]
    pub symbol: Option<SymbolArg>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    /// zero_initial | stationary
    #[arg(long, value_parser = serde_enum::<Regime>)]
    pub regime: Option<Regime>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replication: Option<u64>,
    #[arg(long)]
    pub format: Option<FieldFormat>,
}

#[derive(Serialize)]
struct SimulateCfg {
    spectral: SpectralSpec,
    #[serde(rename = "N")]
    n_max: usize,
    kernel: Kernel,
    symbol: vfl_core::Symbol,
    tmax: f64,
    h: f64,
    regime: Regime,
    seed: u64,
    replication: u64,
    format: FieldFormat,
}

pub fn simulate(o: SimulateOpts, mut out: Output) -> Result<(), CliError> {
    let d = o
        .spectral
        .as_ref()
        .map_or(o.d.unwrap_or(1), SpectralSpec::dim);
    let q = if o.spectral.is_none() {
        Some(o.q.unwrap_or(1.0))
    } else {
        o.q
    };
    let c = SimulateCfg {
        spectral: spectral_from(o.spectral.as_ref(), d, None, None, q)?,
        n_max: o.n_max.unwrap_or(16),
        kernel: kernel_or(&o.kernel, Kernel::Constant)?,
        symbol: SymbolArg::resolve(o.symbol.as_ref(), d)?,
        tmax: o.tmax.unwrap_or(1.0),
        h: o.h.unwrap_or(1e-3),
        regime: o.regime.unwrap_or(Regime::ZeroInitial),
        seed: o.seed.unwrap_or(0),
        replication: o.replication.unwrap_or(0),
        format: o.format.unwrap_or(FieldFormat::Csv),
    };
    let cov = torus_coefficients(&c.spectral, c.n_max)?;
    let grid = TimeGrid::new(c.tmax, c.h)?;
    let path = simulate_path(
        &cov,
        &c.kernel,
        &c.symbol,
        &grid,
        c.regime,
        NoiseSeed(c.seed),
        c.replication,
    )?;
    if matches!(c.format, FieldFormat::Csv | FieldFormat::Both) {
        out.write("field.csv", path.to_csv())?;
    }
    if matches!(c.format, FieldFormat::Vfld | FieldFormat::Both) {
        let p = out.path("field.vfld");
        let f = std::fs::File::create(&p)
            .map_err(|e| config_err(format!("cannot write {}: {e}", p.display())))?;
        write_vfld(&path, BufWriter::new(f))?;
        out.push_file("field.vfld");
    }
    let last = path.snapshot(grid.len() - 1);
    let summary =
        json!({ "modes": path.modes.len(), "nodes": grid.len(), "final_energy": last.energy() });
    out.write("simulate.json", pretty(&summary))?;
    println!(
        "simulate: {} modes, {} nodes, final energy {:.6e}",
        path.modes.len(),
        grid.len(),
        last.energy()
    );
    out.finish("simulate", &c, json!({}))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RegularityMode {
    FunctionValued,
    Continuity,
    Case3,
    GammaDomain,
    Sobolev,
    H2,
}

/// `s:t` time pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pair(pub [f64; 2]);

impl FromStr for Pair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected s:t, got \"{s}\""))?;
        let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("\"{s}\": {e}"));
        Ok(Pair([p(a)?, p(b)?]))
    }
}

/// Regularity criteria for the stochastic convolution.
#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityOpts {
    pub mode: Option<RegularityMode>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Radial power density `|λ|^{β-d}`.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Finite Gaussian spectral mass.
    #[arg(long)]
    pub mass: Option<f64>,
    /// Torus decay exponent (sobolev).
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, value_parser = parse_spectral)]
    pub spectral: Option<SpectralSpec>,
    #[arg(long)]
    pub kernel: Option<KernelArg>,
    #[arg(long)]
    pub symbol: Option<SymbolArg>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Log-weight exponent (continuity).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Sobolev index.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Symbol order (gamma-domain).
    #[arg(long)]
    pub alpha_s: Option<f64>,
    /// Hölder margin (gamma-domain, h2).
    #[arg(long)]
    pub delta: Option<f64>,
    /// `|n|²` values (h2).
    #[arg(long, value_delimiter = ',')]
    pub n2: Option<Vec<f64>>,
    /// `s:t` pairs (h2).
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<Pair>>,
}

pub fn regularity(o: RegularityOpts, mut out: Output) -> Result<(), CliError> {
    let mode = o
        .mode
        .ok_or_else(|| config_err("regularity needs a mode"))?;
    let d = o
        .spectral
        .as_ref()
        .map_or(o.d.unwrap_or(2), SpectralSpec::dim);
    let t = o.t.unwrap_or(1.0);
    let tolerances = json!({ "stable_rel": STABLE_REL, "divergence_margin": DIVERGENCE_MARGIN });
    let (report, cfg) = match mode {
        RegularityMode::FunctionValued | RegularityMode::Continuity => {
            let spec = spectral_from(o.spectral.as_ref(), d, o.beta, o.mass, o.q)?;
            let sym = SymbolArg::resolve(o.symbol.as_ref(), d)?;
            let k = kernel_or(&o.kernel, Kernel::Constant)?;
            let mut cfg =
                json!({ "mode": mode, "spectral": spec, "symbol": sym, "kernel": k, "t": t });
            let r = if mode == RegularityMode::Continuity {
                let eps = o.eps.unwrap_or(0.1);
                cfg["eps"] = json!(eps);
                continuity_check(&spec, &sym, &k, t, eps)?
            } else {
                function_valued_check(&spec, &sym, &k, t)?
            };
            (r, cfg)
        }
        RegularityMode::Case3 => {
            let beta = o.beta.ok_or_else(|| config_err("case3 needs beta"))?;
            let k = kernel_or(&o.kernel, Kernel::Constant)?;
            let r = case3_check(d, beta, &k, t)?;
            (
                r,
                json!({ "mode": mode, "d": d, "beta": beta, "kernel": k, "t": t }),
            )
        }
        RegularityMode::GammaDomain => {
            let beta = o
                .beta
                .ok_or_else(|| config_err("gamma-domain needs beta"))?;
            let alpha_s = o.alpha_s.unwrap_or(2.0);
            let delta = o.delta.unwrap_or(0.5);
            let r = gamma_domain_check(d, beta, alpha_s, delta)?;
            (
                r,
                json!({ "mode": mode, "d": d, "beta": beta, "alpha_s": alpha_s, "delta": delta }),
            )
        }
        RegularityMode::Sobolev => {
            let d = o
                .spectral
                .as_ref()
                .map_or(o.d.unwrap_or(1), SpectralSpec::dim);
            let q = if o.spectral.is_none() {
                Some(o.q.unwrap_or(1.0))
            } else {
                o.q
            };
            let spec = spectral_from(o.spectral.as_ref(), d, None, None, q)?;
            let alpha = o.alpha.unwrap_or(0.0);
            let r = sobolev_check(&spec, alpha)?;
            (r, json!({ "mode": mode, "spectral": spec, "alpha": alpha }))
        }
        RegularityMode::H2 => return h2(o, out),
    };
    out.write("regularity.json", report.to_json() + "\n")?;
    out.write("regularity.svg", trace_plot(&report).render())?;
    print_verdict(&report);
    out.finish("regularity", &cfg, tolerances)
}

fn trace_plot(r: &RegularityReport) -> Plot {
    let pts = r
        .trace
        .iter()
        .copied()
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    let mut p = Plot::new(
        format!("{} partial values ({})", r.criterion, r.verdict.as_str()),
        "budget",
        "partial value",
    )
    .with(Series::new("partial value", pts));
    if r.trace.iter().all(|p| p.0 > 0.0) {
        p = p.log_x();
    }
    p
}

fn print_verdict(r: &RegularityReport) {
    println!("{}: {}", r.criterion, r.verdict.as_str());
    if let Some(w) = &r.witness {
        println!("  witness: {w}");
    }
    for w in &r.warnings {
        println!("  warning: {w}");
    }
}

fn h2(o: RegularityOpts, mut out: Output) -> Result<(), CliError> {
    let k = kernel_or(&o.kernel, Kernel::Exponential)?;
    let delta = o.delta.unwrap_or(0.5);
    let n2 = o.n2.unwrap_or_else(|| vec![1.0, 4.0, 16.0, 64.0]);
    let pairs: Vec<(f64, f64)> = o.pairs.map_or_else(
        || vec![(0.0, 0.1), (0.5, 0.55), (1.0, 1.02)],
        |p| p.iter().map(|x| (x.0[0], x.0[1])).collect(),
    );
    let r = h2_verify(&k, delta, &n2, &pairs)?;
    out.write("h2.json", r.to_json() + "\n")?;
    println!("h2: {}", r.verdict.as_str());
    if let Some(w) = &r.witness {
        println!("  witness: {w}");
    }
    let cfg = json!({ "mode": RegularityMode::H2, "kernel": k, "delta": delta, "n2": n2, "pairs": pairs });
    out.finish("regularity", &cfg, json!({ "exponent_margin": 0.05 }))
}

/// Limit measure `μ_∞` and its slowly-increasing order.
#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitMeasureOpts {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long, value_parser = parse_spectral)]
    pub spectral: Option<SpectralSpec>,
    #[arg(long)]
    pub kernel: Option<KernelArg>,
    #[arg(long)]
    pub symbol: Option<SymbolArg>,
    #[arg(long)]
    pub k_max: Option<u32>,
}

pub fn limit_measure_cmd(o: LimitMeasureOpts, mut out: Output) -> Result<(), CliError> {
    let d = o
        .spectral
        .as_ref()
        .map_or(o.d.unwrap_or(3), SpectralSpec::dim);
    let spec = spectral_from(o.spectral.as_ref(), d, o.beta, o.mass, None)?;
    let sym = SymbolArg::resolve(o.symbol.as_ref(), d)?;
    let k = kernel_or(&o.kernel, Kernel::Constant)?;
    let k_max = o.k_max.unwrap_or(10);
    let r = limit_measure(&spec, &sym, &k, k_max)?;
    out.write("limit_measure.json", r.to_json() + "\n")?;
    let mut csv = String::from("lambda,v,g_inf,s_limit\n");
    for p in &r.g_infinity {
        let sl = p.s_limit.map_or(String::new(), |x| format!("{x:.15e}"));
        csv.push_str(&format!("{},{:.15e},{:.15e},{sl}\n", p.lambda, p.v, p.g));
    }
    out.write("limit_measure.csv", csv)?;
    let pts = r.g_infinity.iter().map(|p| (p.lambda, p.g)).collect();
    let plot = Plot::new(format!("g_inf, kernel {}", r.kernel), "|lambda|", "g_inf")
        .log_log()
        .with(Series::new("g_inf", pts));
    out.write("limit_measure.svg", plot.render())?;
    println!(
        "limit_measure: {} (k = {})",
        r.verdict.as_str(),
        r.k.map_or("none".into(), |k| k.to_string())
    );
    for w in &r.warnings {
        println!("  warning: {w}");
    }
    let cfg = json!({ "spectral": spec, "symbol": sym, "kernel": k, "k_max": k_max });
    out.finish(
        "limit-measure",
        &cfg,
        json!({ "stable_rel": STABLE_REL, "divergence_margin": DIVERGENCE_MARGIN }),
    )
}

/// `C_b = lim |n|² ∫_0^∞ r(t, -|n|²)² dt` by extrapolation in `1/|n|²`.
#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibleOpts {
    #[arg(long)]
    pub kernel: Option<KernelArg>,
    #[arg(long, value_delimiter = ',')]
    pub n2: Option<Vec<f64>>,
    #[arg(long)]
    pub tol: Option<f64>,
}

pub fn admissible(o: AdmissibleOpts, mut out: Output) -> Result<(), CliError> {
    let k = kernel_or(&o.kernel, Kernel::Exponential)?;
    let n2 =
        o.n2.unwrap_or_else(|| (0..=8).map(|j| 10f64.powf(0.5 * j as f64)).collect());
    let tol = o.tol.unwrap_or(1e-10);
    let r = admissible_constant(&k, &n2, tol)?;
    out.write("admissible.json", r.to_json() + "\n")?;
    out.write("admissible.csv", r.to_csv())?;
    let plot = Plot::new(
        format!("|n|^2 int r^2, kernel {}", r.kernel),
        "|n|^2",
        "value",
    )
    .log_x()
    .with(Series::new("table", r.table.clone()));
    out.write("admissible.svg", plot.render())?;
    println!(
        "admissible: C_b = {:.8} (error estimate {:e})",
        r.c_b, r.error_estimate
    );
    out.finish(
        "admissible",
        &json!({ "kernel": k, "n2": n2, "tol": tol }),
        json!({ "tol": tol }),
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeArg(pub Vec<i64>);

impl FromStr for ModeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_mode(s).map(ModeArg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Zero,
    Mode,
    L2,
}

/// Hölder exponent of a simulated trace from its structure function.
#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderOpts {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long = "N", visible_alias = "n-max")]
    #[serde(rename = "N")]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub kernel: Option<KernelArg>,
    #[arg(long)]
    pub symbol: Option<SymbolArg>,
    #[arg(long, value_parser = serde_enum::<Regime>)]
    pub regime: Option<Regime>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replication: Option<u64>,
    #[arg(long)]
    pub target: Option<TargetKind>,
    /// Mode `n`, comma or semicolon separated.
    #[arg(long = "mode")]
    #[serde(rename = "mode")]
    pub mode_n: Option<ModeArg>,
    #[arg(long)]
    pub component: Option<u8>,
}

pub fn holder(o: HolderOpts, mut out: Output) -> Result<(), CliError> {
    let d = o.d.unwrap_or(1);
    let spec = SpectralSpec::TorusDecay {
        d,
        q: o.q.unwrap_or(1.0),
    };
    let n_max = o.n_max.unwrap_or(4);
    let k = kernel_or(&o.kernel, Kernel::Constant)?;
    let sym = SymbolArg::resolve(o.symbol.as_ref(), d)?;
    let regime = o.regime.unwrap_or(Regime::ZeroInitial);
    let steps = o.steps.unwrap_or(1 << 16);
    let h = o.h.unwrap_or(1.0 / steps as f64);
    let seed = o.seed.unwrap_or(0);
    let rep = o.replication.unwrap_or(0);
    let target = match o.target.unwrap_or(TargetKind::Mode) {
        TargetKind::Zero => HolderTarget::ZeroMode,
        TargetKind::L2 => HolderTarget::L2,
        TargetKind::Mode => {
            let n = o.mode_n.clone().map(|m| m.0).unwrap_or_else(|| {
                let mut n = vec![0; d];
                n[0] = 1;
                n
            });
            HolderTarget::Mode {
                n,
                component: o.component.unwrap_or(1),
            }
        }
    };
    let cov = torus_coefficients(&spec, n_max)?;
    let grid = TimeGrid::with_steps(h, steps)?;
    let path = simulate_path(&cov, &k, &sym, &grid, regime, NoiseSeed(seed), rep)?;
    let e = holder_estimate_path(&path, &target)?;
    out.write(
        "holder.json",
        pretty(&json!({ "target": target, "estimate": e })),
    )?;
    let plot = Plot::new(
        format!("structure function, exponent {:.4}", e.exponent),
        "lag",
        "mean squared increment",
    )
    .log_log()
    .with(Series::new("E|dX|^2", e.structure.clone()));
    out.write("holder.svg", plot.render())?;
    println!("holder: exponent {:.4} +- {:.4}", e.exponent, e.std_error);
    let cfg = json!({
        "spectral": spec, "N": n_max, "kernel": k, "symbol": sym, "regime": regime,
        "steps": steps, "h": h, "seed": seed, "replication": rep, "target": target,
    });
    out.finish("holder", &cfg, json!({}))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Heat,
}

/// Monte Carlo verification battery; exit 3 when the suite fails.
#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOpts {
    pub suite: Option<Suite>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long = "N", visible_alias = "n-max")]
    #[serde(rename = "N")]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn verify(o: VerifyOpts, mut out: Output) -> Result<(), CliError> {
    let suite = o.suite.unwrap_or(Suite::Heat);
    let (d, q, n_max) = (o.d.unwrap_or(1), o.q.unwrap_or(1.0), o.n_max.unwrap_or(64));
    let (t, reps, seed) = (
        o.t.unwrap_or(1.0),
        o.reps.unwrap_or(10_000),
        o.seed.unwrap_or(42),
    );
    let b = heat_battery(d, q, n_max, t, reps, NoiseSeed(seed))?;
    out.write("verify.json", b.to_json() + "\n")?;
    let cfg =
        json!({ "suite": suite, "d": d, "q": q, "N": n_max, "t": t, "reps": reps, "seed": seed });
    let tol = json!({
        "pass_sigma": PASS_SIGMA, "hard_fail_sigma": HARD_FAIL_SIGMA,
        "batch_pass_rate": BATCH_PASS_RATE, "min_reps": MIN_REPS,
    });
    let (v, c) = (&b.variance_summary, &b.correlation_summary);
    println!(
        "verify heat: variances {}/{} (max |z| {:.2}), correlations {}/{} (max |z| {:.2}): {}",
        v.passes,
        v.count,
        v.max_abs_z,
        c.passes,
        c.count,
        c.max_abs_z,
        if b.pass { "pass" } else { "fail" }
    );
    out.finish("verify", &cfg, tol)?;
    if b.pass {
        Ok(())
    } else {
        let w = v
            .witness
            .clone()
            .or_else(|| c.witness.clone())
            .unwrap_or_default();
        Err(CliError::Verify(format!("heat battery failed {w}")))
    }
}
