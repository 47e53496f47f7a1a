//! Dense vector kernels and Euclidean projections onto simple sets.
//!
//! Every kernel that produces floating-point output rejects NaN or infinite
//! results with [`Error::NonFinite`] instead of letting them propagate.

use crate::error::{check_dim, Error, Result};

pub(crate) fn ensure_finite(context: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            context: context.to_string(),
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim("dot", a.len(), b.len())?;
    let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::NonFinite {
            context: "dot".into(),
        })
    }
}

/// Euclidean norm. Infinite inputs yield an infinite norm; callers that care
/// validate the input first.
pub fn norm2(v: &[f64]) -> f64 {
    norm2_sq(v).sqrt()
}

pub fn norm2_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).fold(0.0, |a, b| a + b)
}

/// Returns `a * x + y`.
pub fn axpy(a: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_dim("axpy", y.len(), x.len())?;
    let out: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect();
    ensure_finite("axpy", &out)?;
    Ok(out)
}

pub fn sub(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_dim("sub", a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

/// Componentwise `max(v_i, 0)`.
pub fn positive_part(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// Squared norm of the positive part, `‖v₊‖²`.
pub fn positive_part_norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|&x| x.max(0.0)).map(|x| x * x).fold(0.0, |a, b| a + b)
}

/// `Jᵀ w` for a row-major `m × d` matrix `J`.
pub fn mat_t_vec(jac: &[f64], rows: usize, cols: usize, w: &[f64]) -> Result<Vec<f64>> {
    check_dim("jacobian transpose product", rows * cols, jac.len())?;
    check_dim("jacobian transpose product", rows, w.len())?;
    let mut out = vec![0.0; cols];
    for (row, &wi) in jac.chunks_exact(cols.max(1)).zip(w) {
        if wi == 0.0 {
            continue;
        }
        for (o, &jij) in out.iter_mut().zip(row) {
            *o += jij * wi;
        }
    }
    Ok(out)
}

/// The closed convex sets a problem's feasible region `𝒳` may take.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    /// `𝒳 = ℝ^d`.
    Identity,
    /// Axis-aligned box; bounds may be infinite.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    NonnegativeOrthant,
    /// Consecutive blocks of `block` coordinates, each on the probability simplex.
    SimplexBlocks { block: usize },
}

impl Projection {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if lower.iter().chain(&upper).any(|x| x.is_nan()) {
            return Err(Error::InvalidArgument("box bounds contain NaN".into()));
        }
        if let Some(i) = lower.iter().zip(&upper).position(|(l, u)| l > u) {
            return Err(Error::InvalidArgument(format!(
                "box lower bound exceeds upper bound at coordinate {i}"
            )));
        }
        Ok(Projection::Box { lower, upper })
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        ensure_finite("ball center", &center)?;
        Ok(Projection::Ball { center, radius })
    }

    pub fn new_simplex_blocks(block: usize) -> Result<Self> {
        if block == 0 {
            return Err(Error::InvalidArgument("simplex block size must be positive".into()));
        }
        Ok(Projection::SimplexBlocks { block })
    }

    /// Checks that the set is defined for vectors of length `dim`.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Projection::Identity | Projection::NonnegativeOrthant => Ok(()),
            Projection::Box { lower, .. } => check_dim("box projection", lower.len(), dim),
            Projection::Ball { center, .. } => check_dim("ball projection", center.len(), dim),
            Projection::SimplexBlocks { block } => {
                if dim % block == 0 {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "simplex block size {block} does not divide dimension {dim}"
                    )))
                }
            }
        }
    }

    /// Euclidean projection of `v` onto the set.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        let out = match self {
            Projection::Identity => v.to_vec(),
            Projection::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&x, (&l, &u))| x.max(l).min(u))
                .collect(),
            Projection::Ball { center, radius } => {
                let diff: Vec<f64> = v.iter().zip(center).map(|(x, c)| x - c).collect();
                let dist = norm2(&diff);
                if dist <= *radius {
                    v.to_vec()
                } else {
                    let scale = radius / dist;
                    center
                        .iter()
                        .zip(&diff)
                        .map(|(c, d)| c + scale * d)
                        .collect()
                }
            }
            Projection::NonnegativeOrthant => positive_part(v),
            Projection::SimplexBlocks { block } => {
                let mut out = Vec::with_capacity(v.len());
                for chunk in v.chunks_exact(*block) {
                    out.extend(project_simplex(chunk));
                }
                out
            }
        };
        ensure_finite("projection", &out)?;
        Ok(out)
    }

    /// Whether `x` lies in the set up to `tol` (measured as projection displacement).
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        let p = self.project(x)?;
        Ok(norm2(&sub(x, &p)?) <= tol)
    }
}

/// Sort-and-threshold projection onto `{w ≥ 0, Σw = 1}`.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        // equal entries never break the scan: the last index passing the test wins
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernels() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(axpy(2.0, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), vec![2.0, 1.0]);
        assert!(matches!(
            dot(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            axpy(1.0, &[f64::MAX], &[f64::MAX]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn positive_part_cases() {
        assert_eq!(positive_part(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(positive_part(&[-3.0, -0.5]), vec![0.0, 0.0]);
        assert_eq!(positive_part(&[0.15]), vec![0.15]);
    }

    #[test]
    fn projection_examples() {
        let v = [2.0, -3.0];
        assert_eq!(Projection::Identity.project(&v).unwrap(), vec![2.0, -3.0]);
        let b = Projection::new_box(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(b.project(&v).unwrap(), vec![1.0, -1.0]);
        // two-point simplex: minimize (w1-0.8)^2 + (w2-0.8)^2 s.t. w1+w2=1 -> symmetric split
        let s = Projection::new_simplex_blocks(2).unwrap();
        assert_eq!(s.project(&[0.8, 0.8]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn projection_rejects_bad_input() {
        let b = Projection::new_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert!(matches!(b.project(&[0.0; 2]), Err(Error::DimensionMismatch { .. })));
        assert!(Projection::new_box(vec![1.0], vec![0.0]).is_err());
        assert!(Projection::new_ball(vec![0.0], 0.0).is_err());
        assert!(Projection::new_simplex_blocks(3).unwrap().project(&[0.0; 4]).is_err());
    }

    #[test]
    fn ball_and_orthant() {
        let ball = Projection::new_ball(vec![1.0, 0.0], 1.0).unwrap();
        let p = ball.project(&[4.0, 4.0]).unwrap();
        assert!((p[0] - 1.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert_eq!(ball.project(&[1.5, 0.0]).unwrap(), vec![1.5, 0.0]);
        assert_eq!(
            Projection::NonnegativeOrthant.project(&[-1.0, 2.0]).unwrap(),
            vec![0.0, 2.0]
        );
    }

    fn kinds(d: usize) -> Vec<Projection> {
        vec![
            Projection::Identity,
            Projection::new_box(vec![-1.0; d], vec![0.5; d]).unwrap(),
            Projection::new_ball(vec![0.3; d], 0.7).unwrap(),
            Projection::NonnegativeOrthant,
            Projection::new_simplex_blocks(3).unwrap(),
        ]
    }

    #[test]
    fn nonexpansive_and_idempotent() {
        let d = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in kinds(d) {
            for _ in 0..10_000 {
                let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let pu = p.project(&u).unwrap();
                let pv = p.project(&v).unwrap();
                let lhs = norm2(&sub(&pu, &pv).unwrap());
                let rhs = norm2(&sub(&u, &v).unwrap());
                assert!(lhs <= rhs + 1e-12, "{p:?}: {lhs} > {rhs}");
                let ppu = p.project(&pu).unwrap();
                for (a, b) in ppu.iter().zip(&pu) {
                    assert!((a - b).abs() <= 1e-12, "{p:?} not idempotent");
                }
            }
        }
    }

    #[test]
    fn simplex_output_is_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = Projection::new_simplex_blocks(4).unwrap();
        for _ in 0..1000 {
            let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w = p.project(&v).unwrap();
            for blk in w.chunks(4) {
                assert!(blk.iter().all(|&x| x >= 0.0));
                assert!((blk.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn positive_part_is_idempotent(v in proptest::collection::vec(-1e6f64..1e6, 0..20)) {
            let p = positive_part(&v);
            proptest::prop_assert!(p.iter().all(|&x| x >= 0.0));
            proptest::prop_assert_eq!(positive_part(&p), p);
        }
    }
}
