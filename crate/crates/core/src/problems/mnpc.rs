//! Multi-class Neyman–Pearson classification with linear scorers.
//!
//! Class `c` owns a weight vector `x₍c₎`; a sample `ξ` of class `c` incurs
//! `Σ_{i≠c} φ((x₍c₎ − x₍i₎)ᵀξ)` with `φ(z) = 1/(1 + eᶻ)`. Class 0 is the
//! prioritized class whose average loss is minimized; the average losses of
//! classes `1..=m` are bounded by the thresholds.

use super::dataset::MnpcDataset;
use crate::error::{check_dim, Error, Result};
use crate::problem::ConstrainedProblem;

#[derive(Debug, Clone)]
pub struct MnpcProblem {
    num_features: usize,
    classes: Vec<Vec<Vec<f64>>>,
    reg: f64,
    thresholds: Vec<f64>,
}

fn phi(z: f64) -> f64 {
    1.0 / (1.0 + z.exp())
}

pub fn build_mnpc(data: &MnpcDataset, reg: f64, thresholds: &[f64]) -> Result<MnpcProblem> {
    check_dim("mnpc thresholds", data.num_classes() - 1, thresholds.len())?;
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "regularization weight must be finite and nonnegative, got {reg}"
        )));
    }
    if thresholds.iter().any(|t| t.is_nan()) {
        return Err(Error::InvalidArgument("thresholds must not be NaN".into()));
    }
    Ok(MnpcProblem {
        num_features: data.num_features(),
        classes: data.by_class()?,
        reg,
        thresholds: thresholds.to_vec(),
    })
}

impl MnpcProblem {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    fn block<'a>(&self, x: &'a [f64], c: usize) -> &'a [f64] {
        &x[c * self.num_features..(c + 1) * self.num_features]
    }

    fn scores(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        (0..self.num_classes())
            .map(|c| self.block(x, c).iter().zip(xi).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Average loss of class `c`, optionally accumulating its gradient.
    fn class_loss(&self, x: &[f64], c: usize, mut grad: Option<&mut [f64]>) -> f64 {
        let k = self.num_classes();
        let n = self.classes[c].len() as f64;
        let d = self.num_features;
        let mut total = 0.0;
        for xi in &self.classes[c] {
            let s = self.scores(x, xi);
            for i in (0..k).filter(|&i| i != c) {
                let p = phi(s[c] - s[i]);
                total += p;
                if let Some(g) = grad.as_deref_mut() {
                    // φ'(z) = −φ(1 − φ)
                    let w = -p * (1.0 - p) / n;
                    for t in 0..d {
                        g[c * d + t] += w * xi[t];
                        g[i * d + t] -= w * xi[t];
                    }
                }
            }
        }
        total / n
    }
}

impl ConstrainedProblem for MnpcProblem {
    fn dim(&self) -> usize {
        self.num_classes() * self.num_features
    }

    fn num_constraints(&self) -> usize {
        self.num_classes() - 1
    }

    fn objective(&self, x: &[f64]) -> f64 {
        0.5 * self.reg * x.iter().map(|v| v * v).sum::<f64>() + self.class_loss(x, 0, None)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = x.iter().map(|v| self.reg * v).collect();
        self.class_loss(x, 0, Some(&mut g));
        g
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        (1..self.num_classes())
            .map(|j| self.class_loss(x, j, None) - self.thresholds[j - 1])
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut jac = vec![0.0; self.num_constraints() * d];
        for j in 1..self.num_classes() {
            self.class_loss(x, j, Some(&mut jac[(j - 1) * d..j * d]));
        }
        jac
    }
}
