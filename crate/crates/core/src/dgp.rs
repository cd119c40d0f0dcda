//! Seeded synthetic panel generators and the benchmark harness that
//! compares imputation methods on them.
//!
//! All generators treat the last unit for the final `post_periods` periods
//! and add the treatment effect on top of the stored untreated truth, so
//! predictions can be scored against the exact counterfactual.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{default_reg_grid, mc_nnm_cv, scm_fit};
use crate::error::{Error, Result};
use crate::panel::{build_mask, PanelData, TreatmentSpec};
use crate::sampler::{run_mcmc, SamplerConfig};

/// Autoregressive coefficients of the serially dependent factor process.
const DEPENDENT_RHO: [f64; 3] = [0.6, 0.4, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DgpKind {
    /// Three iid Gaussian factors.
    Independent,
    /// Three AR(1) factors with coefficients 0.6, 0.4, 0.2.
    Dependent,
    /// Correlated control units; the treated unit is a weighted sum of the
    /// first three controls plus noise.
    Weighted,
}

impl DgpKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "independent" => Ok(Self::Independent),
            "dependent" => Ok(Self::Dependent),
            "weighted" => Ok(Self::Weighted),
            other => Err(Error::InvalidConfig(format!(
                "unknown generator `{other}`; available: independent, dependent, weighted"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Independent => "independent",
            Self::Dependent => "dependent",
            Self::Weighted => "weighted",
        }
    }
}

/// Specification of one synthetic panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub n_units: usize,
    /// Untreated periods before treatment starts.
    pub pre_periods: usize,
    /// Treated periods at the end of the sample.
    pub post_periods: usize,
    pub atet: f64,
    pub seed: u64,
    /// Noise standard deviation of the treated unit in the weighted
    /// generator.
    pub weighted_noise_sd: f64,
}

impl DgpSpec {
    pub fn new(kind: DgpKind, n_units: usize, pre_periods: usize) -> Self {
        Self {
            kind,
            n_units,
            pre_periods,
            post_periods: 20,
            atet: 10.0,
            seed: 0,
            weighted_noise_sd: 1.0,
        }
    }

    pub fn n_periods(&self) -> usize {
        self.pre_periods + self.post_periods
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_units < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 units, got {}",
                self.n_units
            )));
        }
        if self.pre_periods < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 untreated periods, got {}",
                self.pre_periods
            )));
        }
        if self.post_periods < 1 {
            return Err(Error::InvalidConfig("need at least 1 treated period".into()));
        }
        if self.kind == DgpKind::Weighted && !(self.n_units == 10 || self.n_units == 40) {
            return Err(Error::InvalidConfig(format!(
                "the weighted generator defines unit means only for J in {{10, 40}}, got {}",
                self.n_units
            )));
        }
        if !(self.weighted_noise_sd.is_finite() && self.weighted_noise_sd > 0.0) {
            return Err(Error::InvalidConfig(
                "weighted noise standard deviation must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A generated panel together with the untreated truth at every cell.
#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub panel: PanelData,
    /// Untreated outcomes y(0) for all cells, including treated ones.
    pub truth: DMatrix<f64>,
}

fn iid_normal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Factor paths for the serially dependent generator: each of the three
/// factors follows an AR(1) recursion started from its first innovation.
fn dependent_factor_paths<R: Rng>(t_n: usize, rho: &[f64; 3], rng: &mut R) -> DMatrix<f64> {
    let mut psi = DMatrix::zeros(t_n, 3);
    for t in 0..t_n {
        for k in 0..3 {
            let eps: f64 = StandardNormal.sample(rng);
            psi[(t, k)] = if t == 0 {
                eps
            } else {
                rho[k] * psi[(t - 1, k)] + eps
            };
        }
    }
    psi
}

/// Unit means of the weighted generator's control block.
fn weighted_means(n_units: usize) -> Result<DVector<f64>> {
    let mu = |j: usize| -> f64 {
        // One-based control index.
        match n_units {
            10 => match j {
                1 => 10.0,
                2 => 20.0,
                3 => 30.0,
                4 => 40.0,
                _ => 15.0,
            },
            40 => match j {
                1 => 10.0,
                2 => 20.0,
                3 => 30.0,
                4 => 40.0,
                5..=10 => 15.0,
                11..=20 => 25.0,
                21..=30 => 35.0,
                _ => 45.0,
            },
            _ => f64::NAN,
        }
    };
    if n_units != 10 && n_units != 40 {
        return Err(Error::InvalidConfig(format!(
            "the weighted generator defines unit means only for J in {{10, 40}}, got {n_units}"
        )));
    }
    Ok(DVector::from_fn(n_units - 1, |j, _| mu(j + 1)))
}

fn assemble(spec: &DgpSpec, truth: DMatrix<f64>) -> Result<SyntheticPanel> {
    let (j_n, t_n) = truth.shape();
    let mask = build_mask(
        &TreatmentSpec::SingleUnitBlock {
            unit: j_n - 1,
            start_period: spec.pre_periods,
        },
        j_n,
        t_n,
    )?;
    let mut outcomes = truth.clone();
    for t in spec.pre_periods..t_n {
        outcomes[(j_n - 1, t)] += spec.atet;
    }
    let panel = PanelData::new(
        outcomes,
        mask,
        vec![],
        (0..j_n).map(|j| format!("u{}", j + 1)).collect(),
        (0..t_n).map(|t| format!("{}", t + 1)).collect(),
    )?;
    Ok(SyntheticPanel { panel, truth })
}

fn factor_truth<R: Rng>(
    j_n: usize,
    psi_paths: &DMatrix<f64>,
    rng: &mut R,
) -> (DMatrix<f64>, DMatrix<f64>) {
    // Loadings are drawn after the factor paths; both orders are iid but
    // the order is fixed for reproducibility.
    let phi = iid_normal_matrix(j_n, 3, rng);
    let t_n = psi_paths.nrows();
    let mut truth = &phi * psi_paths.transpose();
    for t in 0..t_n {
        for j in 0..j_n {
            let noise: f64 = StandardNormal.sample(rng);
            truth[(j, t)] += noise;
        }
    }
    (truth, phi)
}

/// Three-factor design with iid standard Gaussian factors and loadings.
pub fn gen_independent(spec: &DgpSpec, rng: &mut impl Rng) -> Result<SyntheticPanel> {
    let t_n = spec.n_periods();
    let psi = iid_normal_matrix(t_n, 3, rng);
    let (truth, _) = factor_truth(spec.n_units, &psi, rng);
    assemble(spec, truth)
}

/// Same design with AR(1) factor dynamics.
pub fn gen_dependent(spec: &DgpSpec, rng: &mut impl Rng) -> Result<SyntheticPanel> {
    let t_n = spec.n_periods();
    let psi = dependent_factor_paths(t_n, &DEPENDENT_RHO, rng);
    let (truth, _) = factor_truth(spec.n_units, &psi, rng);
    assemble(spec, truth)
}

/// Control units drawn from a correlated Gaussian with block-structured
/// means; the last unit is 3·y₁ + 2·y₂ + 1·y₃ plus noise.
pub fn gen_weighted(spec: &DgpSpec, rng: &mut impl Rng) -> Result<SyntheticPanel> {
    let j_n = spec.n_units;
    let t_n = spec.n_periods();
    let mu = weighted_means(j_n)?;
    let n_ctrl = j_n - 1;

    // Covariance: 10 on the diagonal, 0.5 off it.
    let mut sigma = DMatrix::from_element(n_ctrl, n_ctrl, 0.5);
    for i in 0..n_ctrl {
        sigma[(i, i)] = 10.0;
    }
    let chol = Cholesky::new(sigma).expect("covariance is positive definite");
    let l = chol.l();

    let mut truth = DMatrix::zeros(j_n, t_n);
    for t in 0..t_n {
        let z = DVector::from_fn(n_ctrl, |_, _| StandardNormal.sample(rng));
        let draw = &mu + &l * z;
        for j in 0..n_ctrl {
            truth[(j, t)] = draw[j];
        }
        let noise: f64 = StandardNormal.sample(rng);
        truth[(j_n - 1, t)] = 3.0 * truth[(0, t)]
            + 2.0 * truth[(1, t)]
            + truth[(2, t)]
            + spec.weighted_noise_sd * noise;
    }
    assemble(spec, truth)
}

/// Generates a panel according to the spec, seeding an internal generator.
pub fn generate(spec: &DgpSpec) -> Result<SyntheticPanel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        DgpKind::Independent => gen_independent(spec, &mut rng),
        DgpKind::Dependent => gen_dependent(spec, &mut rng),
        DgpKind::Weighted => gen_weighted(spec, &mut rng),
    }
}

/// Imputation method entering the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Simplex-weight synthetic control; also the normalizer.
    Scm,
    /// Nuclear-norm soft-impute with cross-validated penalty.
    McNnm,
    /// The Bayesian matrix-completion sampler.
    Bmc,
    /// Returns the exact truth; a harness test hook.
    Oracle,
}

impl Method {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "scm" => Ok(Self::Scm),
            "mcnnm" => Ok(Self::McNnm),
            "bmc" => Ok(Self::Bmc),
            "oracle" => Ok(Self::Oracle),
            other => Err(Error::UnknownMethod {
                name: other.to_string(),
                available: "scm, mcnnm, bmc, oracle".to_string(),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Scm => "scm",
            Self::McNnm => "mcnnm",
            Self::Bmc => "bmc",
            Self::Oracle => "oracle",
        }
    }
}

/// One benchmark cell: a generator kind with its panel dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkCase {
    pub kind: DgpKind,
    pub n_units: usize,
    pub pre_periods: usize,
}

/// Benchmark harness configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub cases: Vec<BenchmarkCase>,
    pub methods: Vec<Method>,
    pub n_reps: usize,
    pub seed: u64,
    pub post_periods: usize,
    pub atet: f64,
    /// Chain length of the Bayesian method per replication.
    pub bmc_iters: usize,
    pub bmc_burn: usize,
}

impl BenchmarkConfig {
    pub fn new(cases: Vec<BenchmarkCase>, methods: Vec<Method>, n_reps: usize, seed: u64) -> Self {
        Self {
            cases,
            methods,
            n_reps,
            seed,
            post_periods: 20,
            atet: 10.0,
            bmc_iters: 3000,
            bmc_burn: 1000,
        }
    }
}

/// Raw and normalized errors of one method on one replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepMetrics {
    pub case: BenchmarkCase,
    pub method: Method,
    pub rep: usize,
    pub mse_raw: f64,
    pub mae_raw: f64,
    /// Per-replication ratio against the normalizer.
    pub mse: f64,
    pub mae: f64,
    pub time_sec: f64,
}

/// Normalized errors averaged over replications.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub case: BenchmarkCase,
    pub method: Method,
    pub mse: f64,
    pub mae: f64,
    pub time_sec: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
    pub replications: Vec<RepMetrics>,
}

fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    // SplitMix64 over the concatenated parts.
    let mut state = seed;
    for &p in parts {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state = z ^ (z >> 31);
    }
    state
}

/// Predicted untreated outcomes at the treated cells.
fn predict(
    method: Method,
    synth: &SyntheticPanel,
    case: &BenchmarkCase,
    cfg: &BenchmarkConfig,
    method_seed: u64,
) -> Result<Vec<f64>> {
    let panel = &synth.panel;
    let cells = panel.treated_cells();
    match method {
        Method::Oracle => Ok(cells.iter().map(|&(j, t)| synth.truth[(j, t)]).collect()),
        Method::Scm => {
            let treated_unit = panel.n_units() - 1;
            let fit = scm_fit(panel, treated_unit, case.pre_periods)?;
            let series = fit.predict(panel);
            Ok(cells.iter().map(|&(_, t)| series[t]).collect())
        }
        Method::McNnm => {
            let grid = default_reg_grid(panel);
            let mut rng = ChaCha8Rng::seed_from_u64(method_seed);
            let fit = mc_nnm_cv(panel, &grid, 5, &mut rng)?;
            Ok(cells.iter().map(|&(j, t)| fit.completed[(j, t)]).collect())
        }
        Method::Bmc => {
            let mut sampler =
                SamplerConfig::default_for(panel, cfg.bmc_iters, cfg.bmc_burn, method_seed);
            sampler.chain.thin = 1;
            let draws = run_mcmc(panel, &sampler)?;
            let n = draws.n_draws() as f64;
            Ok((0..cells.len())
                .map(|c| draws.y_miss_draws.column(c).sum() / n)
                .collect())
        }
    }
}

/// Runs every replication of every case concurrently and aggregates
/// per-replication normalized errors. The normalizer must be among the
/// methods; within a replication all methods see identical data.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if !cfg.methods.contains(&Method::Scm) {
        return Err(Error::MissingNormalizer("scm".into()));
    }
    if cfg.cases.is_empty() || cfg.n_reps == 0 {
        return Err(Error::InvalidConfig(
            "benchmark needs at least one case and one replication".into(),
        ));
    }

    let mut replications: Vec<RepMetrics> = Vec::new();
    for (case_idx, case) in cfg.cases.iter().enumerate() {
        let reps: Result<Vec<Vec<RepMetrics>>> = (0..cfg.n_reps)
            .into_par_iter()
            .map(|rep| -> Result<Vec<RepMetrics>> {
                let spec = DgpSpec {
                    kind: case.kind,
                    n_units: case.n_units,
                    pre_periods: case.pre_periods,
                    post_periods: cfg.post_periods,
                    atet: cfg.atet,
                    seed: mix_seed(cfg.seed, &[case_idx as u64, rep as u64]),
                    weighted_noise_sd: 1.0,
                };
                let synth = generate(&spec)?;
                let cells = synth.panel.treated_cells();
                let truth: Vec<f64> = cells.iter().map(|&(j, t)| synth.truth[(j, t)]).collect();

                let mut raw: Vec<(Method, f64, f64, f64)> = Vec::new();
                for (m_idx, &method) in cfg.methods.iter().enumerate() {
                    let method_seed =
                        mix_seed(cfg.seed, &[case_idx as u64, rep as u64, 1000 + m_idx as u64]);
                    let start = Instant::now();
                    let pred = predict(method, &synth, case, cfg, method_seed)?;
                    let elapsed = start.elapsed().as_secs_f64();
                    let n = truth.len() as f64;
                    let mse = pred
                        .iter()
                        .zip(&truth)
                        .map(|(p, t)| (p - t).powi(2))
                        .sum::<f64>()
                        / n;
                    let mae = pred
                        .iter()
                        .zip(&truth)
                        .map(|(p, t)| (p - t).abs())
                        .sum::<f64>()
                        / n;
                    raw.push((method, mse, mae, elapsed));
                }
                let (_, scm_mse, scm_mae, _) = *raw
                    .iter()
                    .find(|(m, ..)| *m == Method::Scm)
                    .expect("normalizer present");
                Ok(raw
                    .into_iter()
                    .map(|(method, mse_raw, mae_raw, time_sec)| RepMetrics {
                        case: *case,
                        method,
                        rep,
                        mse_raw,
                        mae_raw,
                        mse: mse_raw / scm_mse,
                        mae: mae_raw / scm_mae,
                        time_sec,
                    })
                    .collect())
            })
            .collect();
        for rep in reps? {
            replications.extend(rep);
        }
    }

    let mut rows = Vec::new();
    for case in &cfg.cases {
        for &method in &cfg.methods {
            let group: Vec<&RepMetrics> = replications
                .iter()
                .filter(|r| r.case == *case && r.method == method)
                .collect();
            let n = group.len() as f64;
            rows.push(BenchmarkRow {
                case: *case,
                method,
                mse: group.iter().map(|r| r.mse).sum::<f64>() / n,
                mae: group.iter().map(|r| r.mae).sum::<f64>() / n,
                time_sec: group.iter().map(|r| r.time_sec).sum::<f64>() / n,
            });
        }
    }
    Ok(BenchmarkReport { rows, replications })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: DgpKind, n_units: usize, pre: usize, seed: u64) -> DgpSpec {
        DgpSpec {
            kind,
            n_units,
            pre_periods: pre,
            post_periods: 20,
            atet: 5.0,
            seed,
            weighted_noise_sd: 1.0,
        }
    }

    #[test]
    fn truth_and_outcomes_differ_exactly_by_the_effect() {
        for kind in [DgpKind::Independent, DgpKind::Dependent, DgpKind::Weighted] {
            let n_units = if kind == DgpKind::Weighted { 10 } else { 5 };
            let synth = generate(&spec(kind, n_units, 10, 3)).unwrap();
            let (j_n, t_n) = synth.truth.shape();
            for j in 0..j_n {
                for t in 0..t_n {
                    let diff = synth.panel.outcomes[(j, t)] - synth.truth[(j, t)];
                    if synth.panel.is_treated(j, t) {
                        assert_eq!(diff, 5.0);
                    } else {
                        assert_eq!(diff, 0.0);
                    }
                }
            }
            assert_eq!(synth.panel.treated_cells().len(), 20);
        }
    }

    #[test]
    fn zero_effect_means_outcomes_equal_truth() {
        let mut s = spec(DgpKind::Independent, 4, 8, 4);
        s.atet = 0.0;
        let synth = generate(&s).unwrap();
        assert_eq!(synth.panel.outcomes, synth.truth);
    }

    #[test]
    fn generators_are_deterministic_under_seed() {
        for kind in [DgpKind::Independent, DgpKind::Dependent, DgpKind::Weighted] {
            let n_units = if kind == DgpKind::Weighted { 10 } else { 6 };
            let a = generate(&spec(kind, n_units, 12, 99)).unwrap();
            let b = generate(&spec(kind, n_units, 12, 99)).unwrap();
            assert_eq!(a.panel.outcomes, b.panel.outcomes);
            assert_eq!(a.truth, b.truth);
        }
    }

    /// Conditional on the loadings, Var(y_{j,t}) = ‖phi_j‖² + 1 for the
    /// independent design.
    #[test]
    fn independent_variance_matches_conditional_oracle() {
        let t_n = 10_000;
        let j_n = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psi = iid_normal_matrix(t_n, 3, &mut rng);
        let (truth, phi) = factor_truth(j_n, &psi, &mut rng);
        for j in 0..j_n {
            let mean = truth.row(j).sum() / t_n as f64;
            let var = truth
                .row(j)
                .iter()
                .map(|y| (y - mean).powi(2))
                .sum::<f64>()
                / (t_n as f64 - 1.0);
            let expected = phi.row(j).norm_squared() + 1.0;
            assert!(
                (var - expected).abs() / expected < 0.05,
                "unit {j}: var {var} vs {expected}"
            );
        }
    }

    /// Exact second moments of the AR recursion started from its first
    /// innovation: Var(psi_t) = (1-rho^{2t})/(1-rho²) and
    /// Cov(psi_t, psi_{t+1}) = rho·Var(psi_t).
    #[test]
    fn dependent_autocorrelation_matches_moment_oracle() {
        let t_n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = dependent_factor_paths(t_n, &DEPENDENT_RHO, &mut rng);
        for (k, &rho) in DEPENDENT_RHO.iter().enumerate() {
            let mut expected_cov = 0.0;
            let mut expected_var = 0.0;
            let mut var_t = 0.0;
            for t in 0..t_n {
                var_t = if t == 0 { 1.0 } else { 1.0 + rho * rho * var_t };
                expected_var += var_t;
                if t + 1 < t_n {
                    expected_cov += rho * var_t;
                }
            }
            expected_var /= t_n as f64;
            expected_cov /= (t_n - 1) as f64;
            let expected_ac = expected_cov / expected_var;

            let mean = psi.column(k).sum() / t_n as f64;
            let var = psi
                .column(k)
                .iter()
                .map(|x| (x - mean).powi(2))
                .sum::<f64>()
                / t_n as f64;
            let cov = (0..t_n - 1)
                .map(|t| (psi[(t, k)] - mean) * (psi[(t + 1, k)] - mean))
                .sum::<f64>()
                / (t_n - 1) as f64;
            let ac = cov / var;
            assert!(
                (ac - expected_ac).abs() < 0.02,
                "factor {k}: autocorrelation {ac} vs {expected_ac}"
            );
        }
    }

    /// With the printed weights and means, E[y_J] = 3·10 + 2·20 + 30 = 100
    /// for the ten-unit design.
    #[test]
    fn weighted_treated_unit_mean_matches_expectation() {
        let mut s = spec(DgpKind::Weighted, 10, 10, 9);
        s.pre_periods = 100_000 - 20;
        let synth = generate(&s).unwrap();
        let t_n = synth.truth.ncols();
        let mean = synth.truth.row(9).sum() / t_n as f64;
        assert!((mean - 100.0).abs() < 0.5, "mean {mean}");
    }

    #[test]
    fn weighted_rejects_unsupported_unit_counts() {
        let err = generate(&spec(DgpKind::Weighted, 12, 10, 1)).unwrap_err();
        assert!(err.to_string().contains("10, 40"), "{err}");
    }

    #[test]
    fn benchmark_normalizer_row_is_exactly_one_and_oracle_zero() {
        let cfg = BenchmarkConfig {
            cases: vec![BenchmarkCase {
                kind: DgpKind::Independent,
                n_units: 5,
                pre_periods: 10,
            }],
            methods: vec![Method::Scm, Method::Oracle],
            n_reps: 3,
            seed: 11,
            post_periods: 8,
            atet: 5.0,
            bmc_iters: 50,
            bmc_burn: 10,
        };
        let report = run_benchmark(&cfg).unwrap();
        for rep in &report.replications {
            match rep.method {
                Method::Scm => {
                    assert_eq!(rep.mse, 1.0);
                    assert_eq!(rep.mae, 1.0);
                }
                Method::Oracle => {
                    assert_eq!(rep.mse, 0.0);
                    assert_eq!(rep.mae, 0.0);
                }
                _ => unreachable!(),
            }
        }
        let scm_row = report
            .rows
            .iter()
            .find(|r| r.method == Method::Scm)
            .unwrap();
        assert_eq!(scm_row.mse, 1.0);
    }

    #[test]
    fn benchmark_requires_the_normalizer() {
        let cfg = BenchmarkConfig::new(
            vec![BenchmarkCase {
                kind: DgpKind::Independent,
                n_units: 5,
                pre_periods: 10,
            }],
            vec![Method::McNnm],
            2,
            1,
        );
        assert!(matches!(
            run_benchmark(&cfg).unwrap_err(),
            Error::MissingNormalizer(_)
        ));
    }

    #[test]
    fn benchmark_is_deterministic_apart_from_timing() {
        let cfg = BenchmarkConfig {
            cases: vec![BenchmarkCase {
                kind: DgpKind::Independent,
                n_units: 5,
                pre_periods: 10,
            }],
            methods: vec![Method::Scm, Method::McNnm],
            n_reps: 4,
            seed: 21,
            post_periods: 6,
            atet: 5.0,
            bmc_iters: 50,
            bmc_burn: 10,
        };
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        for (x, y) in a.replications.iter().zip(&b.replications) {
            assert_eq!(x.method, y.method);
            assert_eq!(x.rep, y.rep);
            assert_eq!(x.mse, y.mse);
            assert_eq!(x.mae, y.mae);
        }
    }

    #[test]
    fn method_parsing_lists_alternatives() {
        assert_eq!(Method::parse("scm").unwrap(), Method::Scm);
        assert_eq!(Method::parse("mcnnm").unwrap(), Method::McNnm);
        assert_eq!(Method::parse("bmc").unwrap(), Method::Bmc);
        let err = Method::parse("magic").unwrap_err();
        assert!(err.to_string().contains("available"), "{err}");
    }
}
