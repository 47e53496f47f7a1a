//! Tabular constrained MDP with a softmax policy and exact policy evaluation.
//!
//! The reward-maximization form `max V_R s.t. V_Gᵢ ≥ bᵢ` is negated into
//! `min f` with `f(θ) = −(1−γ)ρᵀv_R` and `gᵢ(θ) = bᵢ − (1−γ)ρᵀv_Gᵢ`, where
//! `ρ` is the uniform initial-state distribution. Returns are therefore
//! normalized to the scale of a single reward.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::problem::ConstrainedProblem;

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularCmdp {
    pub num_states: usize,
    pub num_actions: usize,
    /// `P[s][a][s']`, flattened row-major.
    pub transitions: Vec<f64>,
    /// `R[s][a]`, flattened row-major.
    pub reward: Vec<f64>,
    pub constraint_rewards: Vec<Vec<f64>>,
    pub gamma: f64,
    pub thresholds: Vec<f64>,
}

impl TabularCmdp {
    pub fn validate(&self) -> Result<()> {
        let (s, a) = (self.num_states, self.num_actions);
        if s == 0 || a == 0 {
            return Err(Error::InvalidArgument("state and action spaces must be non-empty".into()));
        }
        // γ = 0 is the one-step case and is kept for testing
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!(
                "discount must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        check_dim("transition tensor", s * a * s, self.transitions.len())?;
        check_dim("reward table", s * a, self.reward.len())?;
        check_dim("thresholds", self.constraint_rewards.len(), self.thresholds.len())?;
        for g in &self.constraint_rewards {
            check_dim("constraint reward table", s * a, g.len())?;
        }
        for (idx, row) in self.transitions.chunks_exact(s).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "transition row (s={}, a={}) is not a distribution (sum {sum})",
                    idx / a,
                    idx % a
                )));
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.reward)
            || !finite(&self.thresholds)
            || !self.constraint_rewards.iter().all(|g| finite(g))
        {
            return Err(Error::InvalidArgument("rewards and thresholds must be finite".into()));
        }
        Ok(())
    }

    /// Random instance: transition rows are normalized uniforms, rewards are
    /// uniform on `[0, 1)`, thresholds are 0.
    pub fn random(seed: u64, num_states: usize, num_actions: usize, num_constraints: usize, gamma: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, a) = (num_states, num_actions);
        let mut transitions = Vec::with_capacity(s * a * s);
        for _ in 0..s * a {
            let row: Vec<f64> = (0..s).map(|_| rng.gen_range(0.0..1.0) + 1e-3).collect();
            let sum: f64 = row.iter().sum();
            transitions.extend(row.iter().map(|p| p / sum));
        }
        let table = |rng: &mut ChaCha8Rng| (0..s * a).map(|_| rng.gen_range(0.0..1.0)).collect();
        let reward = table(&mut rng);
        let constraint_rewards = (0..num_constraints).map(|_| table(&mut rng)).collect();
        let m = TabularCmdp {
            num_states,
            num_actions,
            transitions,
            reward,
            constraint_rewards,
            gamma,
            thresholds: vec![0.0; num_constraints],
        };
        m.validate()?;
        Ok(m)
    }

    /// Softmax policy `π(a|s)`, flattened `S × A`.
    pub fn policy(&self, theta: &[f64]) -> Vec<f64> {
        let a = self.num_actions;
        let mut pi = Vec::with_capacity(theta.len());
        for row in theta.chunks_exact(a) {
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = row.iter().map(|t| (t - mx).exp()).collect();
            let z: f64 = e.iter().sum();
            pi.extend(e.iter().map(|v| v / z));
        }
        pi
    }

    /// State-to-state transition matrix under `π`.
    pub fn policy_transition(&self, pi: &[f64]) -> DMatrix<f64> {
        let (s, a) = (self.num_states, self.num_actions);
        DMatrix::from_fn(s, s, |i, j| {
            (0..a).map(|k| pi[i * a + k] * self.transitions[(i * a + k) * s + j]).sum()
        })
    }

    fn reward_table(&self, which: usize) -> &[f64] {
        if which == 0 {
            &self.reward
        } else {
            &self.constraint_rewards[which - 1]
        }
    }

    /// Normalized return `(1−γ)ρᵀv` under `θ` for `R` (`which = 0`) or `Gᵢ`
    /// (`which = i`).
    pub fn normalized_return(&self, theta: &[f64], which: usize) -> Result<f64> {
        let ev = self.evaluate(theta, true)?;
        Ok(ev.returns[which])
    }

    /// Exact values `v` solving `(I − γP_π)v = r_π` for every reward table.
    pub fn value_functions(&self, theta: &[f64]) -> Result<Vec<DVector<f64>>> {
        Ok(self.evaluate(theta, false)?.values)
    }

    fn evaluate(&self, theta: &[f64], returns_only: bool) -> Result<Evaluation> {
        check_dim("policy parameters", self.num_states * self.num_actions, theta.len())?;
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NumericalFailure {
                iteration: 0,
                message: "non-finite policy parameters".into(),
            });
        }
        let (s, a) = (self.num_states, self.num_actions);
        let pi = self.policy(theta);
        let p_pi = self.policy_transition(&pi);
        let lhs = DMatrix::identity(s, s) - p_pi * self.gamma;
        let lu = lhs.clone().lu();
        let mut values = Vec::with_capacity(1 + self.constraint_rewards.len());
        let mut returns = Vec::with_capacity(values.capacity());
        for which in 0..=self.constraint_rewards.len() {
            let table = self.reward_table(which);
            let r_pi = DVector::from_fn(s, |i, _| (0..a).map(|k| pi[i * a + k] * table[i * a + k]).sum());
            let v = lu.solve(&r_pi).ok_or_else(|| Error::NumericalFailure {
                iteration: 0,
                message: "singular policy-evaluation system".into(),
            })?;
            returns.push((1.0 - self.gamma) * v.mean());
            values.push(v);
        }
        let occupancy = if returns_only {
            None
        } else {
            let rho = DVector::from_element(s, 1.0 / s as f64);
            Some(lhs.transpose().lu().solve(&rho).ok_or_else(|| Error::NumericalFailure {
                iteration: 0,
                message: "singular occupancy system".into(),
            })?)
        };
        Ok(Evaluation {
            pi,
            values,
            returns,
            occupancy,
        })
    }

    /// `∇_θ (1−γ)ρᵀv` for reward table `which`.
    fn return_gradient(&self, ev: &Evaluation, which: usize) -> Vec<f64> {
        let (s, a) = (self.num_states, self.num_actions);
        let table = self.reward_table(which);
        let v = &ev.values[which];
        let occ = ev.occupancy.as_ref().expect("occupancy computed");
        let mut grad = vec![0.0; s * a];
        for i in 0..s {
            for k in 0..a {
                let idx = i * a + k;
                let next: f64 = (0..s).map(|j| self.transitions[idx * s + j] * v[j]).sum();
                let q = table[idx] + self.gamma * next;
                grad[idx] = (1.0 - self.gamma) * occ[i] * ev.pi[idx] * (q - v[i]);
            }
        }
        grad
    }
}

struct Evaluation {
    pi: Vec<f64>,
    values: Vec<DVector<f64>>,
    returns: Vec<f64>,
    occupancy: Option<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct CmdpProblem {
    model: TabularCmdp,
}

pub fn build_cmdp(model: TabularCmdp) -> Result<CmdpProblem> {
    model.validate()?;
    Ok(CmdpProblem { model })
}

impl CmdpProblem {
    pub fn model(&self) -> &TabularCmdp {
        &self.model
    }

    // Trait methods cannot fail; non-finite θ surfaces as NaN outputs, which
    // the solvers report as numerical failure.
    fn eval_or_nan(&self, theta: &[f64], returns_only: bool) -> Option<Evaluation> {
        self.model.evaluate(theta, returns_only).ok()
    }
}

impl ConstrainedProblem for CmdpProblem {
    fn dim(&self) -> usize {
        self.model.num_states * self.model.num_actions
    }

    fn num_constraints(&self) -> usize {
        self.model.constraint_rewards.len()
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        self.eval_or_nan(theta, true).map_or(f64::NAN, |ev| -ev.returns[0])
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        match self.eval_or_nan(theta, false) {
            Some(ev) => self.model.return_gradient(&ev, 0).iter().map(|g| -g).collect(),
            None => vec![f64::NAN; self.dim()],
        }
    }

    fn constraints(&self, theta: &[f64]) -> Vec<f64> {
        match self.eval_or_nan(theta, true) {
            Some(ev) => self
                .model
                .thresholds
                .iter()
                .zip(&ev.returns[1..])
                .map(|(b, ret)| b - ret)
                .collect(),
            None => vec![f64::NAN; self.num_constraints()],
        }
    }

    fn jacobian(&self, theta: &[f64]) -> Vec<f64> {
        let m = self.num_constraints();
        match self.eval_or_nan(theta, false) {
            Some(ev) => (1..=m)
                .flat_map(|i| self.model.return_gradient(&ev, i))
                .map(|g| -g)
                .collect(),
            None => vec![f64::NAN; m * self.dim()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{check_gradients, sample_points};
    use proptest::prelude::*;

    fn tiny(gamma: f64) -> TabularCmdp {
        TabularCmdp {
            num_states: 2,
            num_actions: 2,
            // P[0][0] = (1, 0), P[0][1] = (0, 1), P[1][0] = (0.5, 0.5), P[1][1] = (0, 1)
            transitions: vec![1.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.0, 1.0],
            reward: vec![1.0, 0.0, 0.0, 2.0],
            constraint_rewards: vec![vec![0.0, 1.0, 1.0, 0.0]],
            gamma,
            thresholds: vec![0.3],
        }
    }

    #[test]
    fn uniform_policy_matches_hand_solution() {
        // uniform π: P_π = [[.5,.5],[.25,.75]], r_π = (0.5, 1.0), γ = 0.5
        // I − γP_π = [[.75, −.25], [−.125, .625]], inverted by Cramer's rule
        let m = tiny(0.5);
        let v = &m.value_functions(&[0.0; 4]).unwrap()[0];
        let det = 0.75 * 0.625 - 0.25 * 0.125;
        let v0 = (0.5 * 0.625 + 0.25 * 1.0) / det;
        let v1 = (0.75 * 1.0 + 0.125 * 0.5) / det;
        assert!((v[0] - v0).abs() < 1e-14 && (v[1] - v1).abs() < 1e-14, "{v:?}");
    }

    #[test]
    fn zero_discount_is_immediate_reward() {
        let m = tiny(0.0);
        let theta = [0.3, -0.2, 1.0, 0.5];
        let pi = m.policy(&theta);
        let v = &m.value_functions(&theta).unwrap()[0];
        assert!((v[0] - pi[0]).abs() < 1e-15);
        assert!((v[1] - 2.0 * pi[3]).abs() < 1e-15);
        // gradient of the averaged one-step reward is π(a|s)(r(s,a) − r_π(s))/S
        let p = build_cmdp(m).unwrap();
        let g = p.gradient(&theta);
        let expect0 = -0.5 * pi[0] * (1.0 - pi[0]);
        assert!((g[0] - expect0).abs() < 1e-15, "{g:?}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let m = TabularCmdp::random(4, 3, 2, 2, 0.9).unwrap();
        let p = build_cmdp(m).unwrap();
        let pts = sample_points(&p, 20, 9).unwrap();
        let rep = check_gradients(&p, &pts, 1e-6).unwrap();
        assert!(rep.passes(1e-5), "{rep:?}");
    }

    #[test]
    fn rejects_bad_models() {
        let mut m = tiny(0.5);
        m.transitions[0] = 0.9;
        assert!(build_cmdp(m).is_err());
        assert!(build_cmdp(tiny(1.0)).is_err());
        let p = build_cmdp(tiny(0.5)).unwrap();
        assert!(p.objective(&[f64::NAN, 0.0, 0.0, 0.0]).is_nan());
        assert!(matches!(
            p.model().normalized_return(&[f64::INFINITY, 0.0, 0.0, 0.0], 0),
            Err(Error::NumericalFailure { .. })
        ));
    }

    proptest! {
        #[test]
        fn policy_rows_sum_to_one(theta in proptest::collection::vec(-50.0f64..50.0, 12)) {
            let m = TabularCmdp::random(1, 4, 3, 1, 0.9).unwrap();
            for row in m.policy(&theta).chunks_exact(3) {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn bellman_residual_vanishes(theta in proptest::collection::vec(-5.0f64..5.0, 12), seed in 0u64..50) {
            let m = TabularCmdp::random(seed, 4, 3, 1, 0.95).unwrap();
            let pi = m.policy(&theta);
            let p_pi = m.policy_transition(&pi);
            for (which, v) in m.value_functions(&theta).unwrap().iter().enumerate() {
                let table = m.reward_table(which);
                let r_pi = DVector::from_fn(4, |i, _| (0..3).map(|k| pi[i * 3 + k] * table[i * 3 + k]).sum());
                let resid = v - (r_pi + &p_pi * v * m.gamma);
                prop_assert!(resid.amax() <= 1e-10);
            }
        }
    }
}
