//! Non-Bayesian comparators: simplex-weight synthetic control and
//! nuclear-norm soft-impute matrix completion with cross-validated
//! regularization.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelData;

/// Synthetic-control fit: nonnegative weights over the control units that
/// sum to one, chosen to match the treated unit's pretreatment outcomes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScmFit {
    /// Simplex weights, aligned with `control_units`.
    pub weights: DVector<f64>,
    /// Row indices of the control units in panel order.
    pub control_units: Vec<usize>,
    pub pretreat_rmse: f64,
}

impl ScmFit {
    /// Synthetic outcome series for every period: Σ_j w_j y_{j,t}.
    pub fn predict(&self, panel: &PanelData) -> DVector<f64> {
        let t_n = panel.n_periods();
        let mut pred = DVector::zeros(t_n);
        for (k, &j) in self.control_units.iter().enumerate() {
            for t in 0..t_n {
                pred[t] += self.weights[k] * panel.outcomes[(j, t)];
            }
        }
        pred
    }
}

/// Frank–Wolfe with away steps for min ½‖b − Aw‖² over the probability
/// simplex. Ties in vertex selection break toward the lowest index so the
/// solver is deterministic.
fn simplex_least_squares(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64, max_iter: usize) -> DVector<f64> {
    let n = a.ncols();
    let ata = a.transpose() * a;
    let atb = a.transpose() * b;

    // Start at the best single vertex.
    let mut best = (0usize, f64::INFINITY);
    for i in 0..n {
        let obj = 0.5 * (a.column(i) - b).norm_squared();
        if obj < best.1 {
            best = (i, obj);
        }
    }
    let mut w = DVector::zeros(n);
    w[best.0] = 1.0;

    for _ in 0..max_iter {
        let grad = &ata * &w - &atb;

        // Frank-Wolfe vertex: most negative gradient coordinate.
        let mut s = 0usize;
        for i in 1..n {
            if grad[i] < grad[s] {
                s = i;
            }
        }
        let gap = grad.dot(&w) - grad[s];
        if gap <= tol {
            break;
        }

        // Away vertex: worst active coordinate.
        let mut v = None::<usize>;
        for i in 0..n {
            if w[i] > 1e-14 && v.is_none_or(|cur| grad[i] > grad[cur]) {
                v = Some(i);
            }
        }
        let v = v.unwrap_or(s);

        // Directional derivatives decide between the two moves.
        let fw_slope = grad[s] - grad.dot(&w);
        let away_slope = grad.dot(&w) - grad[v];
        let (mut dir, gamma_max) = if fw_slope <= away_slope {
            let mut d = -w.clone();
            d[s] += 1.0;
            (d, 1.0)
        } else {
            let mut d = w.clone();
            d[v] -= 1.0;
            let alpha = w[v];
            (d, if alpha < 1.0 { alpha / (1.0 - alpha) } else { 0.0 })
        };
        if gamma_max == 0.0 {
            break;
        }

        let curvature = (a * &dir).norm_squared();
        let slope = grad.dot(&dir);
        let gamma = if curvature > 0.0 {
            (-slope / curvature).clamp(0.0, gamma_max)
        } else {
            gamma_max
        };
        if gamma == 0.0 {
            break;
        }
        dir *= gamma;
        w += dir;

        // Keep the iterate exactly feasible.
        let mut total = 0.0;
        for x in w.iter_mut() {
            *x = x.max(0.0);
            total += *x;
        }
        w /= total;
    }
    w
}

/// Fits simplex weights on the pretreatment columns `0..t0` of the panel.
pub fn scm_fit(panel: &PanelData, treated_unit: usize, t0: usize) -> Result<ScmFit> {
    let (j_n, t_n) = panel.outcomes.shape();
    if treated_unit >= j_n {
        return Err(Error::Estimation(format!(
            "treated unit {treated_unit} outside panel with {j_n} units"
        )));
    }
    if t0 < 2 || t0 > t_n {
        return Err(Error::Estimation(format!(
            "need at least 2 pretreatment periods inside the panel, got {t0}"
        )));
    }
    for j in 0..j_n {
        for t in 0..t0 {
            if panel.is_treated(j, t) {
                return Err(Error::Estimation(format!(
                    "pretreatment cell ({j},{t}) is treated"
                )));
            }
        }
    }
    for j in 0..j_n {
        if j != treated_unit && (0..t_n).any(|t| panel.is_treated(j, t)) {
            return Err(Error::Estimation(format!(
                "control unit {j} has treated cells; synthetic control needs a single treated unit"
            )));
        }
    }

    let control_units: Vec<usize> = (0..j_n).filter(|&j| j != treated_unit).collect();
    let mut a = DMatrix::zeros(t0, control_units.len());
    for (k, &j) in control_units.iter().enumerate() {
        for t in 0..t0 {
            a[(t, k)] = panel.outcomes[(j, t)];
        }
    }
    let b = DVector::from_fn(t0, |t, _| panel.outcomes[(treated_unit, t)]);

    let weights = simplex_least_squares(&a, &b, 1e-8, 10_000);
    let residual = &a * &weights - &b;
    let pretreat_rmse = (residual.norm_squared() / t0 as f64).sqrt();
    Ok(ScmFit {
        weights,
        control_units,
        pretreat_rmse,
    })
}

/// Soft-impute fit with the regularization chosen by cross-validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SoftImputeFit {
    /// Completed low-rank matrix.
    pub completed: DMatrix<f64>,
    /// Selected nuclear-norm penalty.
    pub reg: f64,
    /// Held-out MSE per candidate penalty, ascending in the penalty.
    pub cv_curve: Vec<(f64, f64)>,
}

/// Singular-value soft-thresholding of `m` at level `reg`.
fn svt(m: &DMatrix<f64>, reg: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let mut shrunk = svd.singular_values.clone();
    for s in shrunk.iter_mut() {
        *s = (*s - reg).max(0.0);
    }
    let mut scaled = u.clone();
    for (k, col) in scaled.column_iter_mut().enumerate() {
        let mut col = col;
        col *= shrunk[k];
    }
    scaled * vt
}

/// Nuclear norm of `m` (sum of singular values).
pub fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Soft-impute objective: ½‖P_obs(Y − M)‖²_F + reg·‖M‖_*.
pub fn soft_impute_objective(
    y: &DMatrix<f64>,
    observed: &DMatrix<u8>,
    m: &DMatrix<f64>,
    reg: f64,
) -> f64 {
    let mut fit = 0.0;
    for j in 0..y.nrows() {
        for t in 0..y.ncols() {
            if observed[(j, t)] != 0 {
                fit += (y[(j, t)] - m[(j, t)]).powi(2);
            }
        }
    }
    0.5 * fit + reg * nuclear_norm(m)
}

/// Iterates M ← SVT(P_obs(Y) + P_miss(M)) until the relative Frobenius
/// change drops below `tol` or `max_iter` is reached. `observed` marks the
/// cells treated as data; the rest are imputed.
pub fn soft_impute_masked(
    y: &DMatrix<f64>,
    observed: &DMatrix<u8>,
    reg: f64,
    max_iter: usize,
    tol: f64,
    warm_start: Option<&DMatrix<f64>>,
) -> DMatrix<f64> {
    let (j_n, t_n) = y.shape();
    let mut m = warm_start.cloned().unwrap_or_else(|| DMatrix::zeros(j_n, t_n));
    for _ in 0..max_iter {
        let mut filled = m.clone();
        for j in 0..j_n {
            for t in 0..t_n {
                if observed[(j, t)] != 0 {
                    filled[(j, t)] = y[(j, t)];
                }
            }
        }
        let next = svt(&filled, reg);
        let denom = m.norm().max(1e-12);
        let rel = (&next - &m).norm() / denom;
        m = next;
        if rel < tol {
            break;
        }
    }
    m
}

/// Completes the panel's outcome matrix, treating treated cells as missing.
pub fn soft_impute(panel: &PanelData, reg: f64, max_iter: usize, tol: f64) -> Result<DMatrix<f64>> {
    if !(reg.is_finite() && reg >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "nuclear-norm penalty must be nonnegative, got {reg}"
        )));
    }
    let observed = panel.mask.map(|m| u8::from(m == 0));
    Ok(soft_impute_masked(
        &panel.outcomes,
        &observed,
        reg,
        max_iter,
        tol,
        None,
    ))
}

/// Default penalty grid: 20 logarithmically spaced values from 10⁻³·σ₁ to
/// σ₁, where σ₁ is the top singular value of the zero-filled observed
/// matrix.
pub fn default_reg_grid(panel: &PanelData) -> Vec<f64> {
    let mut zero_filled = panel.outcomes.clone();
    for j in 0..panel.n_units() {
        for t in 0..panel.n_periods() {
            if panel.is_treated(j, t) {
                zero_filled[(j, t)] = 0.0;
            }
        }
    }
    let sigma1 = zero_filled.svd(false, false).singular_values[0];
    let n = 20;
    (0..n)
        .map(|i| sigma1 * 1e-3 * 1000f64.powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Five-fold (by default) cross-validation over the penalty grid: observed
/// untreated cells are partitioned at random, each fold is held out in
/// turn, and the penalty minimizing mean held-out MSE wins, ties going to
/// the larger penalty. The final fit uses all observed cells.
pub fn mc_nnm_cv<R: Rng>(
    panel: &PanelData,
    grid: &[f64],
    folds: usize,
    rng: &mut R,
) -> Result<SoftImputeFit> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty penalty grid".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidConfig("need at least 2 folds".into()));
    }
    let mut cells = panel.untreated_cells();
    if cells.len() < 25 {
        return Err(Error::Estimation(format!(
            "cross-validation needs at least 25 observed untreated cells, got {}",
            cells.len()
        )));
    }
    cells.shuffle(rng);
    let fold_of = |idx: usize| idx % folds;

    let observed_all = panel.mask.map(|m| u8::from(m == 0));
    let mut sorted_grid: Vec<f64> = grid.to_vec();
    sorted_grid.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let (cv_iter, cv_tol) = (400, 1e-6);
    let mut warm: Vec<Option<DMatrix<f64>>> = vec![None; folds];
    // Warm-started full-data fits along the same descending path; at small
    // penalties a cold start moves the imputed cells only O(reg) per
    // iteration, so the path is what makes them converge.
    let mut full_fit: Option<DMatrix<f64>> = None;
    let mut fits: Vec<DMatrix<f64>> = Vec::with_capacity(sorted_grid.len());
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(sorted_grid.len());
    let mut best: Option<(usize, f64)> = None;

    for (g, &reg) in sorted_grid.iter().enumerate() {
        let mut total = 0.0;
        let mut count = 0usize;
        for fold in 0..folds {
            let mut observed = observed_all.clone();
            for (idx, &(j, t)) in cells.iter().enumerate() {
                if fold_of(idx) == fold {
                    observed[(j, t)] = 0;
                }
            }
            let fit = soft_impute_masked(
                &panel.outcomes,
                &observed,
                reg,
                cv_iter,
                cv_tol,
                warm[fold].as_ref(),
            );
            for (idx, &(j, t)) in cells.iter().enumerate() {
                if fold_of(idx) == fold {
                    total += (panel.outcomes[(j, t)] - fit[(j, t)]).powi(2);
                    count += 1;
                }
            }
            warm[fold] = Some(fit);
        }
        let mse = total / count as f64;
        curve.push((reg, mse));
        full_fit = Some(soft_impute_masked(
            &panel.outcomes,
            &observed_all,
            reg,
            2000,
            1e-9,
            full_fit.as_ref(),
        ));
        fits.push(full_fit.clone().expect("fit just stored"));
        // Strict improvement keeps the larger penalty on ties (grid is
        // descending here).
        if best.is_none_or(|(_, best_mse)| mse < best_mse) {
            best = Some((g, mse));
        }
    }

    let (best_idx, _) = best.expect("grid is nonempty");
    let reg = sorted_grid[best_idx];
    let completed = fits.swap_remove(best_idx);
    curve.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(SoftImputeFit {
        completed,
        reg,
        cv_curve: curve,
    })
}
