//! Sampling-based estimates of the problem constants.
//!
//! These are heuristics: difference quotients and maxima over seeded random
//! points only ever under-estimate a supremum, so every estimate of an upper
//! bound is multiplied by [`SAFETY_FACTOR`]. The regularity constant is a
//! lower bound and is divided by it instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{checked_constraints, ConstrainedProblem, ProblemConstants};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{mat_t_vec, norm2, positive_part, sub, Projection};

pub const SAFETY_FACTOR: f64 = 1.5;

const ACTIVE_BOUND_TOL: f64 = 1e-12;

/// Minimum over the samples of `dist(Jᵀg₊, −N_𝒳(x)) / ‖g₊(x)‖`.
///
/// Feasible samples are skipped. Returns `f64::INFINITY` when every sample is
/// feasible. Only `ℝ^d` and boxes (including the nonnegative orthant) are
/// supported.
pub fn estimate_sigma<P: ConstrainedProblem + ?Sized>(
    p: &P,
    sample_points: &[Vec<f64>],
) -> Result<f64> {
    let d = p.dim();
    let m = p.num_constraints();
    let bounds: Option<(Vec<f64>, Vec<f64>)> = match p.projection() {
        Projection::Identity => None,
        Projection::Box { lower, upper } => Some((lower.clone(), upper.clone())),
        Projection::NonnegativeOrthant => Some((vec![0.0; d], vec![f64::INFINITY; d])),
        other => {
            return Err(Error::Unsupported(format!(
                "regularity estimation is only defined for unconstrained or box sets, not {other:?}"
            )))
        }
    };
    let mut best = f64::INFINITY;
    for x in sample_points {
        check_dim("sample point", d, x.len())?;
        let g_plus = positive_part(&checked_constraints(p, x)?);
        let viol = norm2(&g_plus);
        if viol <= 0.0 {
            continue;
        }
        let jac = p.jacobian(x);
        let mut v = mat_t_vec(&jac, m, d, &g_plus)?;
        if let Some((lower, upper)) = &bounds {
            // −N_𝒳 at a lower-active coordinate is [0, ∞); at an upper-active one (−∞, 0]
            for k in 0..d {
                let at_lower = x[k] <= lower[k] + ACTIVE_BOUND_TOL;
                let at_upper = x[k] >= upper[k] - ACTIVE_BOUND_TOL;
                if (at_lower && v[k] >= 0.0) || (at_upper && v[k] <= 0.0) {
                    v[k] = 0.0;
                }
            }
        }
        best = best.min(norm2(&v) / viol);
    }
    Ok(best)
}

fn sample_point(projection: &Projection, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
    let raw: Vec<f64> = match projection {
        Projection::Identity => (0..d).map(|_| normal(rng)).collect(),
        Projection::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .map(|(&l, &u)| match (l.is_finite(), u.is_finite()) {
                (true, true) if l < u => rng.gen_range(l..=u),
                (true, true) => l,
                (true, false) => l + normal(rng).abs(),
                (false, true) => u - normal(rng).abs(),
                (false, false) => normal(rng),
            })
            .collect(),
        Projection::Ball { center, radius } => center
            .iter()
            .map(|c| c + radius * rng.gen_range(-1.0..=1.0))
            .collect(),
        Projection::NonnegativeOrthant => (0..d).map(|_| normal(rng).abs()).collect(),
        Projection::SimplexBlocks { .. } => (0..d).map(|_| rng.gen_range(0.0..1.0)).collect(),
    };
    projection.project(&raw)
}

/// `n` seeded random points inside the problem's feasible set.
pub fn sample_points<P: ConstrainedProblem + ?Sized>(
    p: &P,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| sample_point(p.projection(), p.dim(), &mut rng))
        .collect()
}

/// Returns the problem's supplied constants, or estimates them from
/// `sample_budget` seeded points.
pub fn effective_constants<P: ConstrainedProblem + ?Sized>(
    p: &P,
    sample_budget: usize,
    seed: u64,
) -> Result<ProblemConstants> {
    if let Some(c) = p.constants() {
        return Ok(c);
    }
    if sample_budget < 2 {
        return Err(Error::InvalidArgument(format!(
            "sample budget must be at least 2, got {sample_budget}"
        )));
    }
    let (d, m) = (p.dim(), p.num_constraints());
    let samples = sample_points(p, sample_budget, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);

    // far pairs (consecutive samples) and near pairs (local perturbations)
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(2 * sample_budget);
    for i in 0..samples.len() {
        let x = &samples[i];
        pairs.push((x.clone(), samples[(i + 1) % samples.len()].clone()));
        let scale = 1e-2 * (1.0 + norm2(x));
        let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let nrm = norm2(&dir).max(f64::MIN_POSITIVE);
        let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + scale * di / nrm).collect();
        pairs.push((x.clone(), p.projection().project(&y)?));
    }

    let (mut l_f, mut l_g, mut l_j) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in &pairs {
        let dist = norm2(&sub(x, y)?);
        if dist <= 0.0 {
            continue;
        }
        l_f = l_f.max(norm2(&sub(&p.gradient(x), &p.gradient(y))?) / dist);
        if m > 0 {
            l_g = l_g.max(
                norm2(&sub(&checked_constraints(p, x)?, &checked_constraints(p, y)?)?) / dist,
            );
            l_j = l_j.max(norm2(&sub(&p.jacobian(x), &p.jacobian(y))?) / dist);
        }
    }

    let (mut m_grad, mut g_bound, mut u_j) = (0.0f64, 0.0f64, 0.0f64);
    for x in &samples {
        m_grad = m_grad.max(norm2(&p.gradient(x)));
        if m > 0 {
            let gp = positive_part(&checked_constraints(p, x)?);
            g_bound = g_bound.max(gp.iter().map(|v| v * v).sum());
            // Frobenius norm, an upper bound on the operator norm
            u_j = u_j.max(norm2(&p.jacobian(x)));
        }
    }

    let sigma = match estimate_sigma(p, &samples) {
        Ok(s) => s / SAFETY_FACTOR,
        Err(Error::Unsupported(msg)) => {
            log::warn!("{msg}; regularity constant left unknown (infinite)");
            f64::INFINITY
        }
        Err(e) => return Err(e),
    };

    let c = ProblemConstants {
        l_f: l_f * SAFETY_FACTOR,
        l_g: l_g * SAFETY_FACTOR,
        l_j: l_j * SAFETY_FACTOR,
        m_grad: m_grad * SAFETY_FACTOR,
        g_bound: g_bound * SAFETY_FACTOR,
        u_j: u_j * SAFETY_FACTOR,
        sigma,
    };
    log::info!(
        "estimated constants from {sample_budget} samples (seed {seed}): \
         L_f={:.4e} L_g={:.4e} L_J={:.4e} M={:.4e} G={:.4e} U_J={:.4e} sigma={:.4e}",
        c.l_f,
        c.l_g,
        c.l_j,
        c.m_grad,
        c.g_bound,
        c.u_j,
        c.sigma
    );
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::FnProblem;

    fn one_d(jac: f64) -> FnProblem {
        // g(x) = 1 + jac * x, so g = 1 at x = 0
        FnProblem::new(1, |x| x[0] * x[0], |x| vec![2.0 * x[0]])
            .with_constraints(1, move |x| vec![1.0 + jac * x[0]], move |_| vec![jac])
    }

    #[test]
    fn sigma_is_jacobian_ratio() {
        let s = estimate_sigma(&one_d(2.0), &[vec![0.0]]).unwrap();
        assert_eq!(s, 2.0);
    }

    #[test]
    fn sigma_infinite_when_all_feasible() {
        let s = estimate_sigma(&one_d(2.0), &[vec![-1.0], vec![-3.0]]).unwrap();
        assert_eq!(s, f64::INFINITY);
    }

    #[test]
    fn sigma_takes_minimum_ratio() {
        // g(x) = x^2 + 1 > 0 everywhere, ratio = |2x|: 2 and 0.5
        let p = FnProblem::new(1, |_| 0.0, |_| vec![0.0])
            .with_constraints(1, |x| vec![x[0] * x[0] + 1.0], |x| vec![2.0 * x[0]]);
        let s = estimate_sigma(&p, &[vec![1.0], vec![0.25]]).unwrap();
        assert_eq!(s, 0.5);
    }

    #[test]
    fn sigma_box_zeroes_outward_components() {
        // at x = 0 on [0, 1], Jᵀg₊ = -1 and −N = [0, ∞): distance 1
        let p = FnProblem::new(1, |_| 0.0, |_| vec![0.0])
            .with_constraints(1, |x| vec![1.0 - x[0]], |_| vec![-1.0])
            .with_projection(Projection::new_box(vec![0.0], vec![1.0]).unwrap())
            .unwrap();
        assert_eq!(estimate_sigma(&p, &[vec![0.0]]).unwrap(), 1.0);
        // g = x + 1 with J = 1 at the lower bound: Jᵀg₊ = 1 lies in −N, distance 0
        let q = FnProblem::new(1, |_| 0.0, |_| vec![0.0])
            .with_constraints(1, |x| vec![x[0] + 1.0], |_| vec![1.0])
            .with_projection(Projection::new_box(vec![0.0], vec![1.0]).unwrap())
            .unwrap();
        assert_eq!(estimate_sigma(&q, &[vec![0.0]]).unwrap(), 0.0);
    }

    #[test]
    fn sigma_rejects_ball() {
        let p = one_d(1.0)
            .with_projection(Projection::new_ball(vec![0.0], 1.0).unwrap())
            .unwrap();
        assert!(matches!(
            estimate_sigma(&p, &[vec![0.0]]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn lipschitz_estimate_on_box() {
        let p = FnProblem::new(1, |x| x[0] * x[0], |x| vec![2.0 * x[0]])
            .with_projection(Projection::new_box(vec![-1.0], vec![1.0]).unwrap())
            .unwrap();
        let c = effective_constants(&p, 32, 3).unwrap();
        assert!((2.0..=3.0).contains(&c.l_f), "{c:?}");
        assert_eq!(c.u_j, 0.0);
        assert_eq!(c.g_bound, 0.0);
    }

    #[test]
    fn supplied_constants_returned_verbatim() {
        let k = ProblemConstants {
            l_f: 1.0,
            l_g: 2.0,
            l_j: 3.0,
            m_grad: 4.0,
            g_bound: 5.0,
            u_j: 6.0,
            sigma: 7.0,
        };
        let p = one_d(1.0).with_constants(k).unwrap();
        assert_eq!(effective_constants(&p, 2, 0).unwrap(), k);
    }

    #[test]
    fn estimation_is_deterministic() {
        let p = one_d(-1.5);
        let a = effective_constants(&p, 16, 42).unwrap();
        let b = effective_constants(&p, 16, 42).unwrap();
        assert_eq!(a, b);
        assert!(effective_constants(&p, 1, 42).is_err());
    }
}
