//! Sequential minimal optimization for the kernelized soft-margin dual.
//!
//! Works on the minimization form `min 1/2 a'Qa - e'a` with
//! `Q_ij = y_i y_j K(x_i, x_j)`, `0 <= a_i <= C`, `y'a = 0`. The working pair
//! is chosen by maximal violation for `i` and second-order gain for `j`.

use std::rc::Rc;

use log::debug;

use super::kernel::KernelSpec;

const TAU: f64 = 1e-12;

/// LRU cache of kernel rows keyed by training index.
pub(crate) struct KernelCache<'a> {
    data: &'a [Vec<f64>],
    kernel: KernelSpec,
    rows: Vec<Option<Rc<Vec<f64>>>>,
    last_used: Vec<u64>,
    clock: u64,
    resident: usize,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    pub(crate) fn new(data: &'a [Vec<f64>], kernel: KernelSpec, capacity_rows: usize) -> Self {
        KernelCache {
            data,
            kernel,
            rows: vec![None; data.len()],
            last_used: vec![0; data.len()],
            clock: 0,
            resident: 0,
            capacity: capacity_rows.max(2),
        }
    }

    pub(crate) fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if let Some(row) = &self.rows[i] {
            return Rc::clone(row);
        }
        if self.resident >= self.capacity {
            let victim = (0..self.rows.len())
                .filter(|&t| t != i && self.rows[t].is_some())
                .min_by_key(|&t| self.last_used[t]);
            if let Some(v) = victim {
                self.rows[v] = None;
                self.resident -= 1;
            }
        }
        let xi = &self.data[i];
        let row: Rc<Vec<f64>> = Rc::new(
            self.data
                .iter()
                .map(|xj| self.kernel.compute(xi, xj))
                .collect(),
        );
        self.rows[i] = Some(Rc::clone(&row));
        self.resident += 1;
        row
    }
}

pub(crate) struct SmoOutcome {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub violation: f64,
    pub converged: bool,
}

pub(crate) struct SmoProblem<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [f64],
    pub c: f64,
    pub kernel: KernelSpec,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub cache_rows: usize,
}

impl SmoProblem<'_> {
    pub(crate) fn solve(&self) -> SmoOutcome {
        let n = self.x.len();
        let y = self.y;
        let c = self.c;
        let mut cache = KernelCache::new(self.x, self.kernel, self.cache_rows);
        let diag: Vec<f64> = self.x.iter().map(|x| self.kernel.compute(x, x)).collect();
        let mut alpha = vec![0.0; n];
        // gradient of the minimization objective
        let mut grad = vec![-1.0; n];

        let upper = |a: f64| a >= c;
        let lower = |a: f64| a <= 0.0;
        let in_up =
            |t: usize, a: &[f64]| (y[t] > 0.0 && !upper(a[t])) || (y[t] < 0.0 && !lower(a[t]));
        let in_low =
            |t: usize, a: &[f64]| (y[t] > 0.0 && !lower(a[t])) || (y[t] < 0.0 && !upper(a[t]));

        let mut iterations = 0;
        let mut violation = f64::INFINITY;
        let mut converged = false;
        while iterations < self.max_iterations {
            // i: maximal -y_t G_t over I_up
            let mut gmax = f64::NEG_INFINITY;
            let mut i_sel = None;
            for t in 0..n {
                if in_up(t, &alpha) {
                    let v = -y[t] * grad[t];
                    if v > gmax {
                        gmax = v;
                        i_sel = Some(t);
                    }
                }
            }
            let Some(i) = i_sel else {
                converged = true;
                violation = 0.0;
                break;
            };
            let qi = cache.row(i);

            // j: best second-order decrease over I_low, and the min of -y_t G_t
            let mut gmin = f64::INFINITY;
            let mut best_obj = f64::INFINITY;
            let mut j_sel = None;
            for t in 0..n {
                if !in_low(t, &alpha) {
                    continue;
                }
                let v = -y[t] * grad[t];
                if v < gmin {
                    gmin = v;
                }
                let b = gmax - v;
                if b > 0.0 {
                    let mut a = diag[i] + diag[t] - 2.0 * qi[t];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -(b * b) / a;
                    if obj < best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
            violation = gmax - gmin;
            if violation < self.tolerance || j_sel.is_none() {
                converged = true;
                break;
            }
            let j = j_sel.unwrap();
            let qj = cache.row(j);
            iterations += 1;

            let (old_i, old_j) = (alpha[i], alpha[j]);
            let kij = qi[j];
            if y[i] != y[j] {
                let mut quad = diag[i] + diag[j] - 2.0 * kij;
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let mut quad = diag[i] + diag[j] - 2.0 * kij;
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }

            let di = alpha[i] - old_i;
            let dj = alpha[j] - old_j;
            for t in 0..n {
                grad[t] += y[t] * (y[i] * qi[t] * di + y[j] * qj[t] * dj);
            }
        }

        let bias = -compute_rho(&alpha, &grad, y, c);
        debug!("smo: {iterations} iterations, violation {violation:.3e}, converged {converged}");
        SmoOutcome {
            alphas: alpha,
            bias,
            iterations,
            violation,
            converged,
        }
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}
