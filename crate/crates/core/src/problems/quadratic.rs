//! Seeded random quadratically constrained quadratic programs over a box.
//!
//! `f(x) = ½xᵀQx + cᵀx` with symmetric, generally indefinite `Q`, and
//! `gᵢ(x) = ½xᵀAᵢx + bᵢᵀx − eᵢ` with positive semidefinite `Aᵢ` and
//! `eᵢ > 0`, so the origin is strictly feasible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Projection;
use crate::problem::ConstrainedProblem;

#[derive(Debug, Clone)]
pub struct RandomQcqp {
    dim: usize,
    q: Vec<f64>,
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    e: Vec<f64>,
    projection: Projection,
}

pub const QCQP_BOX_HALF_WIDTH: f64 = 5.0;

fn sym_mat_vec(mat: &[f64], x: &[f64]) -> Vec<f64> {
    mat.chunks_exact(x.len())
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

impl RandomQcqp {
    pub fn generate(seed: u64, dim: usize, num_constraints: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (dim as f64).sqrt();
        let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample::<f64, _>(StandardNormal) };
        let mut q = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = scale * normal(&mut rng);
                q[i * dim + j] = v;
                q[j * dim + i] = v;
            }
        }
        let c = (0..dim).map(|_| normal(&mut rng)).collect();
        let mut a = Vec::with_capacity(num_constraints);
        let mut b = Vec::with_capacity(num_constraints);
        let mut e = Vec::with_capacity(num_constraints);
        for _ in 0..num_constraints {
            let f: Vec<f64> = (0..dim * dim).map(|_| scale * normal(&mut rng)).collect();
            // A = F Fᵀ
            let mut ai = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    ai[i * dim + j] = dot(&f[i * dim..(i + 1) * dim], &f[j * dim..(j + 1) * dim]);
                }
            }
            a.push(ai);
            b.push((0..dim).map(|_| normal(&mut rng)).collect());
            e.push(rng.gen_range(0.5..1.5));
        }
        let h = QCQP_BOX_HALF_WIDTH;
        Ok(RandomQcqp {
            dim,
            q,
            c,
            a,
            b,
            e,
            projection: Projection::new_box(vec![-h; dim], vec![h; dim])?,
        })
    }
}

impl ConstrainedProblem for RandomQcqp {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_constraints(&self) -> usize {
        self.e.len()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &sym_mat_vec(&self.q, x)) + dot(&self.c, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        sym_mat_vec(&self.q, x).iter().zip(&self.c).map(|(a, b)| a + b).collect()
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        (0..self.e.len())
            .map(|i| 0.5 * dot(x, &sym_mat_vec(&self.a[i], x)) + dot(&self.b[i], x) - self.e[i])
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        (0..self.e.len())
            .flat_map(|i| {
                sym_mat_vec(&self.a[i], x)
                    .into_iter()
                    .zip(&self.b[i])
                    .map(|(p, q)| p + q)
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    fn projection(&self) -> &Projection {
        &self.projection
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{check_gradients, sample_points};

    #[test]
    fn origin_strictly_feasible() {
        let p = RandomQcqp::generate(1, 4, 3).unwrap();
        assert!(p.constraints(&[0.0; 4]).iter().all(|&g| g < 0.0));
    }

    #[test]
    fn derivatives_are_exact() {
        for seed in 0..5 {
            let p = RandomQcqp::generate(seed, 5, 3).unwrap();
            let pts = sample_points(&p, 20, seed).unwrap();
            let rep = check_gradients(&p, &pts, 1e-5).unwrap();
            assert!(rep.passes(1e-7), "{rep:?}");
        }
    }

    #[test]
    fn deterministic() {
        let a = RandomQcqp::generate(9, 3, 2).unwrap();
        let b = RandomQcqp::generate(9, 3, 2).unwrap();
        assert_eq!(a.q, b.q);
        assert_eq!(a.e, b.e);
    }
}
