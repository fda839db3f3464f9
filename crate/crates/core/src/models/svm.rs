//! Soft-margin RBF support vector machines trained by sequential minimal
//! optimization, combined one-vs-rest for the three classes. Prediction uses
//! the maximum decision value; `predict_scores` passes the three decision
//! values through a softmax so score rows sum to 1.

use serde::{Deserialize, Serialize};

use super::{softmax_row, NUM_CLASSES};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmSpec {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
    /// Consecutive full passes without an update before stopping.
    pub max_passes: usize,
    /// Hard cap on full passes.
    pub max_iter: usize,
}

impl Default for SvmSpec {
    fn default() -> Self {
        SvmSpec {
            c: 1.0,
            gamma: 0.1,
            tol: 1e-3,
            max_passes: 5,
            max_iter: 2000,
        }
    }
}

/// One binary machine: retained support vectors with their signed weights.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    /// alpha_i * y_i per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    /// Largest KKT violation over the training set at termination.
    pub final_kkt_violation: f64,
}

impl BinarySvm {
    pub fn decision(&self, row: &[f64]) -> f64 {
        let mut sum = self.bias;
        for (sv, coeff) in self.support_vectors.iter().zip(&self.coefficients) {
            sum += coeff * rbf(sv, row, self.gamma);
        }
        sum
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SvmModel {
    /// One machine per class (that class vs the rest), in class order.
    pub machines: Vec<BinarySvm>,
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    (-gamma * d).exp()
}

/// Rows above this count skip the precomputed kernel matrix (n^2 doubles)
/// and evaluate entries on demand instead.
const DENSE_KERNEL_LIMIT: usize = 8192;

enum Kernel<'a> {
    Dense(Vec<Vec<f64>>),
    Lazy { x: &'a [Vec<f64>], gamma: f64 },
}

impl Kernel<'_> {
    fn build(x: &[Vec<f64>], gamma: f64) -> Kernel<'_> {
        if x.len() <= DENSE_KERNEL_LIMIT {
            Kernel::Dense(
                x.iter()
                    .map(|a| x.iter().map(|b| rbf(a, b, gamma)).collect())
                    .collect(),
            )
        } else {
            Kernel::Lazy { x, gamma }
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        match self {
            Kernel::Dense(m) => m[i][j],
            Kernel::Lazy { x, gamma } => rbf(&x[i], &x[j], *gamma),
        }
    }
}

struct SmoState {
    alpha: Vec<f64>,
    b: f64,
}

/// One analytic pair update. Returns true when the pair actually moved.
#[allow(clippy::too_many_arguments)]
fn smo_step(
    state: &mut SmoState,
    i: usize,
    j: usize,
    e_i: f64,
    e_j: f64,
    kernel: &Kernel<'_>,
    y_sign: &[f64],
    c: f64,
) -> bool {
    let (a_i_old, a_j_old) = (state.alpha[i], state.alpha[j]);
    let (lo, hi) = if y_sign[i] != y_sign[j] {
        ((a_j_old - a_i_old).max(0.0), (c + a_j_old - a_i_old).min(c))
    } else {
        ((a_i_old + a_j_old - c).max(0.0), (a_i_old + a_j_old).min(c))
    };
    if lo >= hi {
        return false;
    }
    let eta = 2.0 * kernel.at(i, j) - kernel.at(i, i) - kernel.at(j, j);
    if eta >= 0.0 {
        return false;
    }
    let a_j = (a_j_old - y_sign[j] * (e_i - e_j) / eta).clamp(lo, hi);
    if (a_j - a_j_old).abs() < 1e-8 * (a_j + a_j_old + 1e-8) {
        return false;
    }
    let a_i = a_i_old + y_sign[i] * y_sign[j] * (a_j_old - a_j);
    state.alpha[i] = a_i;
    state.alpha[j] = a_j;
    let b1 = state.b - e_i
        - y_sign[i] * (a_i - a_i_old) * kernel.at(i, i)
        - y_sign[j] * (a_j - a_j_old) * kernel.at(i, j);
    let b2 = state.b - e_j
        - y_sign[i] * (a_i - a_i_old) * kernel.at(i, j)
        - y_sign[j] * (a_j - a_j_old) * kernel.at(j, j);
    state.b = if a_i > 0.0 && a_i < c {
        b1
    } else if a_j > 0.0 && a_j < c {
        b2
    } else {
        0.5 * (b1 + b2)
    };
    true
}

/// SMO on a precomputed kernel matrix. For each KKT violator the partner is
/// chosen by the largest |E_i - E_j| first, then by scanning the remaining
/// points in order, so a violator only stays unresolved when no pair step
/// can improve it. Fully deterministic.
fn smo_binary(spec: &SvmSpec, x: &[Vec<f64>], y_sign: &[f64]) -> BinarySvm {
    let n = x.len();
    let kernel = Kernel::build(x, spec.gamma);
    let mut state = SmoState {
        alpha: vec![0.0f64; n],
        b: 0.0,
    };
    let f = |state: &SmoState, i: usize| -> f64 {
        let mut s = state.b;
        for (j, (&a, &sign)) in state.alpha.iter().zip(y_sign).enumerate() {
            if a != 0.0 {
                s += a * sign * kernel.at(i, j);
            }
        }
        s
    };
    let c = spec.c;
    let mut passes = 0usize;
    let mut iters = 0usize;
    while passes < spec.max_passes && iters < spec.max_iter {
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = f(&state, i) - y_sign[i];
            let r = y_sign[i] * e_i;
            if (r < -spec.tol && state.alpha[i] < c) || (r > spec.tol && state.alpha[i] > 0.0) {
                let errors: Vec<f64> = (0..n).map(|j| f(&state, j) - y_sign[j]).collect();
                let mut candidates: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                candidates.sort_unstable_by(|&a, &b| {
                    (errors[b] - e_i)
                        .abs()
                        .partial_cmp(&(errors[a] - e_i).abs())
                        .unwrap()
                        .then(a.cmp(&b))
                });
                for j in candidates {
                    if smo_step(&mut state, i, j, e_i, errors[j], &kernel, y_sign, c) {
                        changed += 1;
                        break;
                    }
                }
            }
        }
        if changed == 0 {
            passes += 1;
        } else {
            passes = 0;
        }
        iters += 1;
    }
    let alpha = &state.alpha;
    let b = state.b;
    // KKT violations at termination: alpha = 0 wants margin >= 1,
    // 0 < alpha < C wants margin == 1, alpha = C wants margin <= 1.
    let mut max_violation = 0.0f64;
    for i in 0..n {
        let margin = y_sign[i] * f(&state, i);
        let violation = if alpha[i] <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if alpha[i] >= c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        max_violation = max_violation.max(violation);
    }
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for i in 0..n {
        if alpha[i] > 0.0 {
            support_vectors.push(x[i].clone());
            coefficients.push(alpha[i] * y_sign[i]);
        }
    }
    BinarySvm {
        support_vectors,
        coefficients,
        bias: b,
        gamma: spec.gamma,
        final_kkt_violation: max_violation,
    }
}

pub fn fit(spec: &SvmSpec, x: &[Vec<f64>], y: &[usize]) -> SvmModel {
    let machines = (0..NUM_CLASSES)
        .map(|k| {
            let y_sign: Vec<f64> = y
                .iter()
                .map(|&label| if label == k { 1.0 } else { -1.0 })
                .collect();
            smo_binary(spec, x, &y_sign)
        })
        .collect();
    SvmModel { machines }
}

/// Raw one-vs-rest decision values in class order.
pub fn decision_values(model: &SvmModel, row: &[f64]) -> [f64; NUM_CLASSES] {
    std::array::from_fn(|k| model.machines[k].decision(row))
}

pub fn predict_scores(model: &SvmModel, x: &[Vec<f64>]) -> Vec<[f64; NUM_CLASSES]> {
    x.iter()
        .map(|row| softmax_row(&decision_values(model, row)))
        .collect()
}
