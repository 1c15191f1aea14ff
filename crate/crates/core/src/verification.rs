//! Monte Carlo checks of the mode variances and covariance functionals of
//! the simulated field against their analytic values.
//!
//! Replications are independent keyed streams; per-replication values are
//! collected in replication order and summed by a fixed pairwise tree, so
//! results do not depend on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VflError};
use crate::field::{
    mode_variance, torus_coefficients, NoiseSeed, Regime, SnapshotSampler, TorusCovariance,
};
use crate::kernel::Kernel;
use crate::spectral::SpectralSpec;
use crate::symbol::Symbol;

/// Per-test acceptance level in standard errors.
pub const PASS_SIGMA: f64 = 4.0;
/// A single `|z|` above this fails a whole batch.
pub const HARD_FAIL_SIGMA: f64 = 6.0;
/// Required fraction of passes in a batch.
pub const BATCH_PASS_RATE: f64 = 0.95;
pub const MIN_REPS: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub reps: u64,
    pub target: f64,
    pub z: f64,
    pub level: f64,
    pub pass: bool,
}

impl MCResult {
    fn new(label: String, estimate: f64, std_error: f64, reps: u64, target: f64) -> Self {
        let z = if std_error > 0.0 {
            (estimate - target) / std_error
        } else if estimate == target {
            0.0
        } else {
            f64::INFINITY
        };
        MCResult {
            label,
            estimate,
            std_error,
            reps,
            target,
            z,
            level: PASS_SIGMA,
            pass: z.abs() <= PASS_SIGMA,
        }
    }
}

/// Sum by a fixed binary tree over the slice order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        n if n <= 8 => x.iter().sum(),
        n => pairwise_sum(&x[..n / 2]) + pairwise_sum(&x[n / 2..]),
    }
}

fn mean_over_reps(reps: u64, f: impl Fn(u64) -> f64 + Sync + Send) -> f64 {
    let values: Vec<f64> = (0..reps).into_par_iter().map(f).collect();
    pairwise_sum(&values) / reps as f64
}

fn check_reps(reps: u64) -> Result<()> {
    if reps < MIN_REPS {
        return Err(invalid(format!(
            "at least {MIN_REPS} replications are required, got {reps}"
        )));
    }
    Ok(())
}

fn label_mode(n: &[i64]) -> String {
    format!(
        "({})",
        n.iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )
}

/// Estimates `γ_n g(v(n))`, the quantity returned by [`mode_variance`], as half
/// the pooled second moment of `X_n¹` and `X_n²`.
///
/// The standard error is the Gaussian (chi-square) one at the target,
/// `target / √reps`.
#[allow(clippy::too_many_arguments)]
pub fn mc_mode_variance(
    cov: &TorusCovariance,
    k: &Kernel,
    sym: &Symbol,
    n: &[i64],
    t: f64,
    regime: Regime,
    reps: u64,
    seed: NoiseSeed,
) -> Result<MCResult> {
    check_reps(reps)?;
    let sampler = SnapshotSampler::new(cov, k, sym, t, regime)?;
    mode_variance_with(&sampler, cov, k, sym, n, t, regime, reps, seed)
}

#[allow(clippy::too_many_arguments)]
fn mode_variance_with(
    sampler: &SnapshotSampler,
    cov: &TorusCovariance,
    k: &Kernel,
    sym: &Symbol,
    n: &[i64],
    t: f64,
    regime: Regime,
    reps: u64,
    seed: NoiseSeed,
) -> Result<MCResult> {
    if n.len() != cov.d {
        return Err(VflError::DimensionMismatch {
            expected: cov.d,
            got: n.len(),
        });
    }
    let idx = cov
        .index_of(n)
        .ok_or_else(|| invalid(format!("mode {n:?} is outside the truncation")))?;
    let target = mode_variance(
        k,
        sym.eval_lattice(&cov.modes[idx])?,
        cov.gamma[idx],
        t,
        regime,
    )?;
    let estimate = 0.25
        * mean_over_reps(reps, |r| {
            let (a, b) = sampler.draw_mode(idx, seed, r);
            a * a + b * b
        });
    Ok(MCResult::new(
        format!("variance {}", label_mode(n)),
        estimate,
        target / (reps as f64).sqrt(),
        reps,
        target,
    ))
}

/// `φ(θ) = c + Σ [a_n cos(n·θ) + b_n sin(n·θ)]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub constant: f64,
    pub terms: Vec<TrigTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub n: Vec<i64>,
    pub cos: f64,
    pub sin: f64,
}

impl TestFunction {
    pub fn cos(n: Vec<i64>) -> Self {
        TestFunction {
            constant: 0.0,
            terms: vec![TrigTerm {
                n,
                cos: 1.0,
                sin: 0.0,
            }],
        }
    }

    pub fn plus(mut self, other: TestFunction) -> Self {
        self.constant += other.constant;
        self.terms.extend(other.terms);
        self
    }

    /// `(c, a, b)` per representative index; `-n` folds onto `n`.
    fn coefficients(&self, cov: &TorusCovariance) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let mut a = vec![0.0; cov.len()];
        let mut b = vec![0.0; cov.len()];
        let mut c = self.constant;
        for term in &self.terms {
            if term.n.len() != cov.d {
                return Err(VflError::DimensionMismatch {
                    expected: cov.d,
                    got: term.n.len(),
                });
            }
            if term.n.iter().all(|&x| x == 0) {
                c += term.cos;
                continue;
            }
            let idx = cov.index_of(&term.n).ok_or_else(|| {
                invalid(format!(
                    "test function mode {:?} is outside the truncation",
                    term.n
                ))
            })?;
            let flip = if cov.modes[idx] == term.n { 1.0 } else { -1.0 };
            a[idx] += term.cos;
            b[idx] += flip * term.sin;
        }
        Ok((c, a, b))
    }
}

/// `⟨X, φ⟩` with the normalised inner product `(2π)^{-d} ∫_{T^d}`.
fn pairing(
    sampler: &SnapshotSampler,
    coef: &(f64, Vec<f64>, Vec<f64>),
    support: &[usize],
    seed: NoiseSeed,
    r: u64,
) -> f64 {
    let mut acc = if coef.0 != 0.0 {
        coef.0 * sampler.draw_zero(seed, r)
    } else {
        0.0
    };
    for &i in support {
        let (x1, x2) = sampler.draw_mode(i, seed, r);
        acc += 0.5 * (coef.1[i] * x1 + coef.2[i] * x2);
    }
    acc
}

/// Exact `E[⟨X,φ⟩⟨X,ψ⟩]` from [`mode_variance`] (each coefficient has variance
/// twice the mode variance).
fn covariance_target(
    cov: &TorusCovariance,
    k: &Kernel,
    sym: &Symbol,
    t: f64,
    regime: Regime,
    p: &(f64, Vec<f64>, Vec<f64>),
    q: &(f64, Vec<f64>, Vec<f64>),
) -> Result<f64> {
    let mut total = p.0 * q.0 * cov.gamma0 * t;
    for i in 0..cov.len() {
        let w = p.1[i] * q.1[i] + p.2[i] * q.2[i];
        if w != 0.0 {
            total += 0.5
                * w
                * mode_variance(k, sym.eval_lattice(&cov.modes[i])?, cov.gamma[i], t, regime)?;
        }
    }
    Ok(total)
}

/// Empirical `E[⟨X,φ⟩⟨X,ψ⟩]` against the Fourier-domain value.
#[allow(clippy::too_many_arguments)]
pub fn mc_covariance_functional(
    cov: &TorusCovariance,
    k: &Kernel,
    sym: &Symbol,
    t: f64,
    regime: Regime,
    phi: &TestFunction,
    psi: &TestFunction,
    reps: u64,
    seed: NoiseSeed,
) -> Result<MCResult> {
    check_reps(reps)?;
    let sampler = SnapshotSampler::new(cov, k, sym, t, regime)?;
    covariance_with(
        &sampler,
        cov,
        k,
        sym,
        t,
        regime,
        phi,
        psi,
        reps,
        seed,
        "covariance".into(),
    )
}

#[allow(clippy::too_many_arguments)]
fn covariance_with(
    sampler: &SnapshotSampler,
    cov: &TorusCovariance,
    k: &Kernel,
    sym: &Symbol,
    t: f64,
    regime: Regime,
    phi: &TestFunction,
    psi: &TestFunction,
    reps: u64,
    seed: NoiseSeed,
    label: String,
) -> Result<MCResult> {
    let p = phi.coefficients(cov)?;
    let q = psi.coefficients(cov)?;
    let support = |c: &(f64, Vec<f64>, Vec<f64>)| -> Vec<usize> {
        (0..cov.len())
            .filter(|&i| c.1[i] != 0.0 || c.2[i] != 0.0)
            .collect()
    };
    let (sp, sq) = (support(&p), support(&q));
    let target = covariance_target(cov, k, sym, t, regime, &p, &q)?;
    let pp = covariance_target(cov, k, sym, t, regime, &p, &p)?;
    let qq = covariance_target(cov, k, sym, t, regime, &q, &q)?;
    // Gaussian pair: Var(PQ) = E[P²]E[Q²] + E[PQ]²
    let se = ((pp * qq + target * target) / reps as f64).sqrt();
    let estimate = mean_over_reps(reps, |r| {
        pairing(sampler, &p, &sp, seed, r) * pairing(sampler, &q, &sq, seed, r)
    });
    Ok(MCResult::new(label, estimate, se, reps, target))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub count: usize,
    pub passes: usize,
    pub pass_rate: f64,
    pub max_abs_z: f64,
    pub pass: bool,
    pub witness: Option<String>,
}

/// Batch rule: at least 95% of the results within 4σ and none beyond 6σ.
pub fn clt_band_test(results: &[MCResult]) -> Result<BandSummary> {
    if results.len() < 5 {
        return Err(invalid(format!(
            "a band test needs at least 5 results, got {}",
            results.len()
        )));
    }
    let passes = results.iter().filter(|r| r.pass).count();
    let pass_rate = passes as f64 / results.len() as f64;
    let worst = results
        .iter()
        .max_by(|a, b| a.z.abs().total_cmp(&b.z.abs()))
        .expect("nonempty");
    let max_abs_z = worst.z.abs();
    let rate_ok = pass_rate >= BATCH_PASS_RATE;
    let tail_ok = max_abs_z <= HARD_FAIL_SIGMA;
    let witness = if !tail_ok {
        Some(format!(
            "{}: |z| = {:.3} > {HARD_FAIL_SIGMA}",
            worst.label, max_abs_z
        ))
    } else if !rate_ok {
        Some(format!("pass rate {pass_rate:.3} < {BATCH_PASS_RATE}"))
    } else {
        None
    };
    Ok(BandSummary {
        count: results.len(),
        passes,
        pass_rate,
        max_abs_z,
        pass: rate_ok && tail_ok,
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatBattery {
    pub suite: String,
    pub d: usize,
    pub q: f64,
    pub n_max: usize,
    pub t: f64,
    pub reps: u64,
    pub seed: u64,
    pub variances: Vec<MCResult>,
    pub correlations: Vec<MCResult>,
    pub variance_summary: BandSummary,
    pub correlation_summary: BandSummary,
    pub pass: bool,
}

impl HeatBattery {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("battery serialises")
    }
}

/// Heat equation (`a ≡ 1`, `A = Δ`) on `T^d` with `γ_n = (1+|n|²)^{-q}` at `t`:
/// every mode variance, plus the cross covariances of the first coefficients
/// of neighbouring modes and of the two coefficients of each mode (target 0).
pub fn heat_battery(
    d: usize,
    q: f64,
    n_max: usize,
    t: f64,
    reps: u64,
    seed: NoiseSeed,
) -> Result<HeatBattery> {
    check_reps(reps)?;
    let spec = SpectralSpec::TorusDecay { d, q };
    let cov = torus_coefficients(&spec, n_max)?;
    let k = Kernel::Constant;
    let sym = Symbol::laplacian(d);
    let regime = Regime::ZeroInitial;
    let sampler = SnapshotSampler::new(&cov, &k, &sym, t, regime)?;
    let variances = cov
        .modes
        .iter()
        .map(|n| mode_variance_with(&sampler, &cov, &k, &sym, n, t, regime, reps, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut correlations = Vec::new();
    for (i, n) in cov.modes.iter().enumerate() {
        let sin = TestFunction {
            constant: 0.0,
            terms: vec![TrigTerm {
                n: n.clone(),
                cos: 0.0,
                sin: 1.0,
            }],
        };
        let label = format!("cos-sin {}", label_mode(n));
        correlations.push(covariance_with(
            &sampler,
            &cov,
            &k,
            &sym,
            t,
            regime,
            &TestFunction::cos(n.clone()),
            &sin,
            reps,
            seed,
            label,
        )?);
        if let Some(m) = cov.modes.get(i + 1) {
            let label = format!("cos-cos {} {}", label_mode(n), label_mode(m));
            correlations.push(covariance_with(
                &sampler,
                &cov,
                &k,
                &sym,
                t,
                regime,
                &TestFunction::cos(n.clone()),
                &TestFunction::cos(m.clone()),
                reps,
                seed,
                label,
            )?);
        }
    }
    let variance_summary = clt_band_test(&variances)?;
    let correlation_summary = clt_band_test(&correlations)?;
    let pass = variance_summary.pass && correlation_summary.pass;
    Ok(HeatBattery {
        suite: "heat".into(),
        d,
        q,
        n_max,
        t,
        reps,
        seed: seed.0,
        variances,
        correlations,
        variance_summary,
        correlation_summary,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ModeCoefficient;
    use approx::assert_relative_eq;

    fn single_mode(d: usize, n: Vec<i64>, gamma: f64) -> TorusCovariance {
        let spec = SpectralSpec::TorusExplicit {
            d,
            coefficients: vec![ModeCoefficient { n, gamma }],
        };
        torus_coefficients(&spec, 2).unwrap()
    }

    #[test]
    fn heat_mode_variance() {
        let cov = single_mode(1, vec![1], 1.0);
        let r = mc_mode_variance(
            &cov,
            &Kernel::Constant,
            &Symbol::laplacian(1),
            &[1],
            1.0,
            Regime::ZeroInitial,
            10_000,
            NoiseSeed(42),
        )
        .unwrap();
        assert_relative_eq!(r.target, 0.432_332_358, max_relative = 1e-8);
        assert!(r.pass, "{r:?}");
        assert!(r.std_error > 0.0);
    }

    #[test]
    fn zero_coefficient_is_degenerate_pass() {
        let cov = single_mode(1, vec![1], 1.0);
        let r = mc_mode_variance(
            &cov,
            &Kernel::Constant,
            &Symbol::laplacian(1),
            &[2],
            1.0,
            Regime::ZeroInitial,
            1000,
            NoiseSeed(1),
        )
        .unwrap();
        assert_eq!((r.estimate, r.target, r.z), (0.0, 0.0, 0.0));
        assert!(r.pass);
    }

    #[test]
    fn stationary_exponential_mode() {
        let cov = single_mode(1, vec![2], 1.0);
        let r = mc_mode_variance(
            &cov,
            &Kernel::Exponential,
            &Symbol::laplacian(1),
            &[2],
            1.0,
            Regime::Stationary,
            10_000,
            NoiseSeed(42),
        )
        .unwrap();
        // r = e^{-5t}
        assert_relative_eq!(r.target, 0.1, max_relative = 1e-9);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn preconditions() {
        let cov = single_mode(1, vec![1], 1.0);
        let lap = Symbol::laplacian(1);
        assert!(mc_mode_variance(
            &cov,
            &Kernel::Constant,
            &lap,
            &[1],
            1.0,
            Regime::ZeroInitial,
            999,
            NoiseSeed(1)
        )
        .is_err());
        assert!(mc_mode_variance(
            &cov,
            &Kernel::Constant,
            &lap,
            &[7],
            1.0,
            Regime::ZeroInitial,
            1000,
            NoiseSeed(1)
        )
        .is_err());
        let far = TestFunction::cos(vec![9]);
        assert!(mc_covariance_functional(
            &cov,
            &Kernel::Constant,
            &lap,
            1.0,
            Regime::ZeroInitial,
            &far,
            &far,
            1000,
            NoiseSeed(1)
        )
        .is_err());
    }

    #[test]
    fn single_mode_functional_is_scaled_variance() {
        let cov = single_mode(1, vec![1], 1.0);
        let lap = Symbol::laplacian(1);
        let phi = TestFunction::cos(vec![1]);
        let c = mc_covariance_functional(
            &cov,
            &Kernel::Constant,
            &lap,
            1.0,
            Regime::ZeroInitial,
            &phi,
            &phi,
            10_000,
            NoiseSeed(5),
        )
        .unwrap();
        let v = mc_mode_variance(
            &cov,
            &Kernel::Constant,
            &lap,
            &[1],
            1.0,
            Regime::ZeroInitial,
            10_000,
            NoiseSeed(5),
        )
        .unwrap();
        // ⟨X, cos⟩ = X¹/2 and Var X¹ = 2·mode variance
        assert_relative_eq!(c.target, 0.5 * v.target, max_relative = 1e-14);
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn disjoint_and_heat_functionals() {
        let cov = torus_coefficients(&SpectralSpec::TorusDecay { d: 1, q: 1.0 }, 4).unwrap();
        let lap = Symbol::laplacian(1);
        let k = Kernel::Constant;
        let r = mc_covariance_functional(
            &cov,
            &k,
            &lap,
            1.0,
            Regime::ZeroInitial,
            &TestFunction::cos(vec![1]),
            &TestFunction::cos(vec![3]),
            10_000,
            NoiseSeed(9),
        )
        .unwrap();
        assert_eq!(r.target, 0.0);
        assert!(r.pass && r.std_error > 0.0, "{r:?}");

        let phi = TestFunction::cos(vec![1]).plus(TestFunction::cos(vec![2]));
        let psi = TestFunction::cos(vec![1]);
        let r = mc_covariance_functional(
            &cov,
            &k,
            &lap,
            1.0,
            Regime::ZeroInitial,
            &phi,
            &psi,
            10_000,
            NoiseSeed(9),
        )
        .unwrap();
        // ½ γ_1 (1 - e^{-2})/2 with γ_1 = 1/2
        let oracle = 0.5 * 0.5 * -(-2f64).exp_m1() / 2.0;
        assert_relative_eq!(r.target, oracle, max_relative = 1e-10);
        assert!(r.pass, "{r:?}");
        // -n folds onto n with sin flipped
        let neg = TestFunction {
            constant: 0.0,
            terms: vec![TrigTerm {
                n: vec![-1],
                cos: 1.0,
                sin: 0.0,
            }],
        };
        let r2 = mc_covariance_functional(
            &cov,
            &k,
            &lap,
            1.0,
            Regime::ZeroInitial,
            &phi,
            &neg,
            10_000,
            NoiseSeed(9),
        )
        .unwrap();
        assert_eq!(r.estimate, r2.estimate);
    }

    #[test]
    fn band_rules() {
        let ok = |z: f64| MCResult::new("x".into(), z, 1.0, 1000, 0.0);
        let all_zero: Vec<MCResult> = (0..5)
            .map(|_| MCResult::new("z".into(), 0.0, 0.0, 1000, 0.0))
            .collect();
        assert!(clt_band_test(&all_zero).unwrap().pass);
        let mut batch: Vec<MCResult> = (0..20).map(|i| ok(0.1 * i as f64 - 1.0)).collect();
        assert!(clt_band_test(&batch).unwrap().pass);
        batch[3] = ok(7.0);
        let s = clt_band_test(&batch).unwrap();
        assert!(!s.pass);
        assert!(s.witness.unwrap().contains("7.000"));
        // one 5σ miss in 20 is within the 95% rule
        batch[3] = ok(5.0);
        assert!(clt_band_test(&batch).unwrap().pass);
        batch[4] = ok(-5.0);
        assert!(!clt_band_test(&batch).unwrap().pass);
        assert!(clt_band_test(&batch[..4]).is_err());
    }

    #[test]
    fn heat_battery_passes_and_is_deterministic() {
        let a = heat_battery(1, 1.0, 20, 1.0, 10_000, NoiseSeed(42)).unwrap();
        assert!(
            a.pass,
            "{:?} {:?}",
            a.variance_summary, a.correlation_summary
        );
        assert!(a.variance_summary.passes >= 19);
        let b = heat_battery(1, 1.0, 20, 1.0, 10_000, NoiseSeed(42)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| heat_battery(1, 1.0, 20, 1.0, 10_000, NoiseSeed(42)).unwrap());
        assert_eq!(a.to_json(), c.to_json());
    }

    #[test]
    fn z_scores_stable_under_doubling() {
        let cov = torus_coefficients(&SpectralSpec::TorusDecay { d: 1, q: 1.0 }, 3).unwrap();
        let lap = Symbol::laplacian(1);
        for n in 1..=3 {
            let r1 = mc_mode_variance(
                &cov,
                &Kernel::Constant,
                &lap,
                &[n],
                1.0,
                Regime::ZeroInitial,
                5_000,
                NoiseSeed(3),
            )
            .unwrap();
            let r2 = mc_mode_variance(
                &cov,
                &Kernel::Constant,
                &lap,
                &[n],
                1.0,
                Regime::ZeroInitial,
                10_000,
                NoiseSeed(3),
            )
            .unwrap();
            assert!(r1.z.abs() < 4.0 && r2.z.abs() < 4.0);
            assert!(r2.std_error < r1.std_error);
        }
    }

    #[test]
    fn pairwise_sum_matches_plain_sum() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&x), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
