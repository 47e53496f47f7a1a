//! Two-layer sigmoid network trained on one class split subject to loss
//! budgets on the others.
//!
//! Weights are `W₁` (`hidden × d_in`) followed by `W₂` (`k × hidden`), both
//! row-major, with no biases. The per-sample loss is the mean squared error
//! between the `k` sigmoid outputs and the one-hot label.

use super::dataset::MnpcDataset;
use crate::error::{check_dim, Error, Result};
use crate::problem::ConstrainedProblem;

#[derive(Debug, Clone)]
pub struct NnBudgetProblem {
    num_features: usize,
    hidden: usize,
    classes: Vec<Vec<Vec<f64>>>,
    budgets: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn build_nn_budget(data: &MnpcDataset, hidden: usize, budgets: &[f64]) -> Result<NnBudgetProblem> {
    check_dim("nn budgets", data.num_classes() - 1, budgets.len())?;
    if hidden == 0 {
        return Err(Error::InvalidArgument("hidden layer must be non-empty".into()));
    }
    if budgets.iter().any(|b| b.is_nan()) {
        return Err(Error::InvalidArgument("budgets must not be NaN".into()));
    }
    Ok(NnBudgetProblem {
        num_features: data.num_features(),
        hidden,
        classes: data.by_class()?,
        budgets: budgets.to_vec(),
    })
}

impl NnBudgetProblem {
    fn num_out(&self) -> usize {
        self.classes.len()
    }

    fn first_layer_len(&self) -> usize {
        self.hidden * self.num_features
    }

    /// Average loss over split `c`, optionally accumulating its gradient.
    fn split_loss(&self, w: &[f64], c: usize, mut grad: Option<&mut [f64]>) -> f64 {
        let (d, h, k) = (self.num_features, self.hidden, self.num_out());
        let n1 = self.first_layer_len();
        let (w1, w2) = w.split_at(n1);
        let n = self.classes[c].len() as f64;
        let mut total = 0.0;
        let mut hid = vec![0.0; h];
        let mut out = vec![0.0; k];
        let mut d_out = vec![0.0; k];
        for xi in &self.classes[c] {
            for (a, row) in hid.iter_mut().zip(w1.chunks_exact(d)) {
                *a = sigmoid(row.iter().zip(xi).map(|(p, q)| p * q).sum());
            }
            for (o, row) in out.iter_mut().zip(w2.chunks_exact(h)) {
                *o = sigmoid(row.iter().zip(&hid).map(|(p, q)| p * q).sum());
            }
            let mut loss = 0.0;
            for (o_idx, o) in out.iter().enumerate() {
                let y = if o_idx == c { 1.0 } else { 0.0 };
                loss += (o - y) * (o - y);
                d_out[o_idx] = 2.0 * (o - y) * o * (1.0 - o) / (k as f64 * n);
            }
            total += loss / k as f64;
            if let Some(g) = grad.as_deref_mut() {
                let (g1, g2) = g.split_at_mut(n1);
                for (o_idx, delta) in d_out.iter().enumerate() {
                    for t in 0..h {
                        g2[o_idx * h + t] += delta * hid[t];
                    }
                }
                for t in 0..h {
                    let back: f64 = (0..k).map(|o_idx| w2[o_idx * h + t] * d_out[o_idx]).sum();
                    let delta = back * hid[t] * (1.0 - hid[t]);
                    for (gj, xj) in g1[t * d..(t + 1) * d].iter_mut().zip(xi) {
                        *gj += delta * xj;
                    }
                }
            }
        }
        total / n
    }
}

impl ConstrainedProblem for NnBudgetProblem {
    fn dim(&self) -> usize {
        self.hidden * (self.num_features + self.num_out())
    }

    fn num_constraints(&self) -> usize {
        self.num_out() - 1
    }

    fn objective(&self, w: &[f64]) -> f64 {
        self.split_loss(w, 0, None)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.split_loss(w, 0, Some(&mut g));
        g
    }

    /// An infinite budget yields `−∞`, a constraint that is never active.
    fn constraints(&self, w: &[f64]) -> Vec<f64> {
        (1..self.num_out())
            .map(|i| self.split_loss(w, i, None) - self.budgets[i - 1])
            .collect()
    }

    fn jacobian(&self, w: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut jac = vec![0.0; self.num_constraints() * d];
        for i in 1..self.num_out() {
            self.split_loss(w, i, Some(&mut jac[(i - 1) * d..i * d]));
        }
        jac
    }
}
