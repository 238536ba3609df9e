//! Levenberg-Marquardt for small, dense least-squares problems.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use crate::math::*;

pub(crate) struct Solution {
    pub params: Vec<f64>,
    pub cost: f64,
}

/// Minimizes `Σ rᵢ(p)²` starting from `p0`.
///
/// `residuals` fills `r` for parameters `p`; the Jacobian is taken by
/// central differences with steps relative to `scales`.
pub(crate) fn levenberg_marquardt<F>(mut residuals: F, p0: &[f64], scales: &[f64], n: usize, max_iters: usize) -> Solution
where
    F: FnMut(&[f64], &mut [f64]),
{
    let m = p0.len();
    let mut p = p0.to_vec();
    let mut r = alloc::vec![0.0; n];
    let mut trial_r = alloc::vec![0.0; n];
    residuals(&p, &mut r);
    let mut cost: f64 = r.iter().map(|x| x * x).sum();
    let mut lambda = 1e-3;
    let mut jac = DMatrix::<f64>::zeros(n, m);
    let (mut rp, mut rm) = (alloc::vec![0.0; n], alloc::vec![0.0; n]);

    for _ in 0..max_iters {
        for k in 0..m {
            let h = 1e-7 * scales[k].abs().max(p[k].abs());
            let mut q = p.clone();
            q[k] = p[k] + h;
            residuals(&q, &mut rp);
            q[k] = p[k] - h;
            residuals(&q, &mut rm);
            for i in 0..n {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);

        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            residuals(&trial, &mut trial_r);
            let trial_cost: f64 = trial_r.iter().map(|x| x * x).sum();
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel = (cost - trial_cost) / cost.max(1e-300);
                let small_step = step.iter().zip(&p).all(|(s, x)| s.abs() <= 1e-14 * x.abs().max(1e-300));
                p = trial;
                core::mem::swap(&mut r, &mut trial_r);
                cost = trial_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-15 || small_step {
                    return Solution { params: p, cost };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Solution { params: p, cost }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_decay() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-0.7 * x).exp()).collect();
        let sol = levenberg_marquardt(
            |p, r| {
                for i in 0..xs.len() {
                    r[i] = p[0] * (-p[1] * xs[i]).exp() - ys[i];
                }
            },
            &[1.0, 0.1],
            &[1.0, 1.0],
            xs.len(),
            200,
        );
        assert!((sol.params[0] - 3.0).abs() < 1e-9);
        assert!((sol.params[1] - 0.7).abs() < 1e-9);
    }
}
