//! The limit measure `μ_∞(dλ) = [∫_0^∞ s(σ, v(λ))² dσ] μ(dλ)` and its
//! slowly-increasing test `∫ (1 + |λ|²)^{-k} dμ_∞ < ∞`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VflError};
use crate::kernel::Kernel;
use crate::resolvent::s_limit;
use crate::spectral::SpectralSpec;
use crate::symbol::Symbol;

use super::energy::{infinite_energy, infinite_energy_decay, EnergyInterpolant};
use super::radial::{directions, radial_integral};
use super::{inputs_hash, uniform_growth, Density, Verdict, MAX_DOUBLINGS};

/// λ-grid: `|λ| = 2^{j/2}` along the first axis.
const GRID_HALF_OCTAVES: std::ops::RangeInclusive<i32> = -12..=12;
/// Octave range of the `g_∞` table for tabulated kernels.
const TAB_LO: i32 = -6;
const TAB_HI: i32 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GInfinityPoint {
    /// `|λ|` along the first axis.
    pub lambda: f64,
    pub v: f64,
    pub g: f64,
    /// `lim_{t→∞} s(t; v)` where known; the deterministic part's diagnostic.
    pub s_limit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KTrial {
    pub k: u32,
    pub verdict: Verdict,
    pub fitted_exponent: Option<f64>,
    pub value: Option<f64>,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitMeasureReport {
    pub criterion: String,
    pub inputs_hash: String,
    pub kernel: String,
    pub g_infinity: Vec<GInfinityPoint>,
    /// `holds` when some `k <= k_max` makes the weighted mass finite.
    pub verdict: Verdict,
    /// Smallest witnessing `k`.
    pub k: Option<u32>,
    pub k_max: u32,
    pub trials: Vec<KTrial>,
    /// Smallest `k` from exponent comparison, when available.
    pub analytic_k: Option<u32>,
    pub locally_finite: Option<bool>,
    /// `|λ|` at which `s²` was found not integrable on `[0, ∞)`.
    pub tail_non_decaying_at: Option<f64>,
    pub factor: String,
    pub warnings: Vec<String>,
}

impl LimitMeasureReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

enum GInf {
    Exact(Kernel),
    Interp(EnergyInterpolant),
}

impl GInf {
    fn eval(&self, v: f64) -> Result<f64> {
        match self {
            GInf::Exact(k) => infinite_energy(k, v),
            GInf::Interp(t) => Ok(t.eval(v)),
        }
    }
}

fn non_decaying(mut report: LimitMeasureReport, rho: Option<f64>, v: f64) -> LimitMeasureReport {
    report.verdict = Verdict::Fails;
    report.tail_non_decaying_at = rho;
    let at = rho.map_or(String::new(), |r| format!(" at |lambda| = {r}"));
    report.warnings.push(format!(
        "TailNonDecaying: s(t; v) is not square integrable on [0, inf){at} (v = {v})"
    ));
    report
}

/// Evaluates `g_∞` on the λ-grid and searches `k ∈ 1..=k_max`.
pub fn limit_measure(
    spec: &SpectralSpec,
    sym: &Symbol,
    k: &Kernel,
    k_max: u32,
) -> Result<LimitMeasureReport> {
    k.validate()?;
    sym.validate()?;
    if k_max == 0 {
        return Err(invalid("k_max must be at least 1"));
    }
    let density = Density::from_spec(spec)?;
    let d = density.dim();
    if sym.dim() != d {
        return Err(VflError::DimensionMismatch {
            expected: d,
            got: sym.dim(),
        });
    }
    let hash = inputs_hash(&serde_json::json!({
        "criterion": "limit_measure", "spec": spec, "symbol": sym, "kernel": k, "k_max": k_max,
    }));
    let factor = "N(0, Gamma_inf) with Gamma_inf = inverse Fourier transform of mu_inf; \
                  the deterministic factor m_inf is not computed (see s_limit per grid point)"
        .to_string();
    let mut report = LimitMeasureReport {
        criterion: "limit_measure".into(),
        inputs_hash: hash,
        kernel: k.label(),
        g_infinity: Vec::new(),
        verdict: Verdict::Inconclusive,
        k: None,
        k_max,
        trials: Vec::new(),
        analytic_k: None,
        locally_finite: None,
        tail_non_decaying_at: None,
        factor,
        warnings: Vec::new(),
    };

    let g_inf = match k {
        Kernel::Tabulated(_) => {
            report.warnings.push(format!(
                "g_inf interpolated log-log from v = 2^{TAB_LO} .. 2^{TAB_HI} and extended by end slopes"
            ));
            match EnergyInterpolant::build(k, TAB_LO, TAB_HI) {
                Ok(t) => GInf::Interp(t),
                Err(VflError::TailNonDecaying { witness }) => {
                    return Ok(non_decaying(report, None, witness))
                }
                Err(e) => return Err(e),
            }
        }
        _ => GInf::Exact(k.clone()),
    };

    for j in GRID_HALF_OCTAVES {
        let rho = (0.5 * j as f64).exp2();
        let mut lam = vec![0.0; d];
        lam[0] = rho;
        let v = sym.eval(&lam)?;
        if matches!(g_inf, GInf::Interp(_))
            && !(v >= (TAB_LO as f64).exp2() && v <= (TAB_HI as f64).exp2())
        {
            continue;
        }
        match g_inf.eval(v) {
            Ok(g) => report.g_infinity.push(GInfinityPoint {
                lambda: rho,
                v,
                g,
                s_limit: s_limit(k, v),
            }),
            Err(VflError::TailNonDecaying { .. }) => return Ok(non_decaying(report, Some(rho), v)),
            Err(e) => return Err(e),
        }
    }

    // exponent comparison for power-law inputs
    if let (Density::Power { beta, .. }, Some(kappa), Some(p)) =
        (density, infinite_energy_decay(k), uniform_growth(sym))
    {
        if p > 0.0 {
            let q0 = sym.order_at_zero();
            let local = beta - q0 * kappa > 0.0;
            report.locally_finite = Some(local);
            if local {
                // ρ^{β-1-pκ-2k} integrable at ∞
                let need = beta - p * kappa;
                let kk = if need < 0.0 {
                    1
                } else {
                    (need / 2.0).floor() as u32 + 1
                };
                report.analytic_k = Some(kk.max(1));
            }
        }
    }

    let dirs = directions(d, sym.is_isotropic());
    for kk in 1..=k_max {
        let f = |rho: f64| -> Result<f64> {
            let m = density.radial(rho);
            if m == 0.0 {
                return Ok(0.0);
            }
            let mut acc = 0.0;
            for theta in &dirs.points {
                let lam: Vec<f64> = theta.iter().map(|c| c * rho).collect();
                acc += g_inf.eval(sym.eval(&lam)?)?;
            }
            Ok(m * acc * dirs.weight * (1.0 + rho * rho).powi(-(kk as i32)))
        };
        let out = radial_integral(f, MAX_DOUBLINGS)?;
        let inner_divergent = out
            .witness
            .as_deref()
            .is_some_and(|w| w.starts_with("rho -> 0"));
        report.trials.push(KTrial {
            k: kk,
            verdict: out.verdict,
            fitted_exponent: out.exponent_inf,
            value: out.value.is_finite().then_some(out.value),
            witness: out.witness.clone(),
        });
        if out.verdict == Verdict::Holds {
            report.k = Some(kk);
            break;
        }
        if inner_divergent {
            // the weight does not act near 0; larger k cannot help
            report.locally_finite.get_or_insert(false);
            break;
        }
    }
    let numeric = if report.k.is_some() {
        Verdict::Holds
    } else if report.trials.iter().all(|t| t.verdict == Verdict::Fails) {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    report.verdict = match (report.locally_finite, report.analytic_k) {
        (Some(false), _) => Verdict::Fails,
        (_, Some(ak)) if ak <= k_max => Verdict::Holds,
        (_, Some(_)) => Verdict::Fails,
        _ => numeric,
    };
    if let (Some(ak), Some(nk)) = (report.analytic_k, report.k) {
        if ak != nk {
            report.warnings.push(format!(
                "numeric k = {nk} differs from exponent comparison k = {ak}"
            ));
        }
    }
    if report.verdict == Verdict::Holds && report.k.is_none() {
        report.k = report.analytic_k;
    }
    if report.locally_finite == Some(false) {
        report
            .warnings
            .push("mu_inf is not locally finite at lambda = 0".into());
    }
    Ok(report)
}
