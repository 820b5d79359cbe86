use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::WeightVector;
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::mdp::{DeterministicPolicy, TransitionSample};
use std::sync::Arc;

/// How `A w = b` is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Minimum-norm least squares by SVD. Singular values at most
    /// `rcond * sigma_max` are discarded; `None` uses `dim * f64::EPSILON`.
    MinNorm { rcond: Option<f64> },
    /// `(A^T A + lambda I) w = A^T b`.
    Ridge { lambda: f64 },
}

impl Default for SolveMethod {
    fn default() -> Self {
        SolveMethod::MinNorm { rcond: None }
    }
}

impl SolveMethod {
    pub const RIDGE_DEFAULT: SolveMethod = SolveMethod::Ridge { lambda: 1e-6 };
}

/// Minimum-norm least-squares solution of `a x = b`. Also reports whether
/// `a` was rank deficient at the cutoff.
pub(crate) fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>, rcond: Option<f64>) -> Result<(DVector<f64>, bool)> {
    let n = a.ncols();
    let rcond = rcond.unwrap_or(n.max(a.nrows()) as f64 * f64::EPSILON);
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let smax = svd.singular_values.max();
    let cutoff = rcond * smax;
    let u = svd.u.as_ref().expect("U computed");
    let vt = svd.v_t.as_ref().expect("V^T computed");
    let utb = u.transpose() * b;
    let mut y = DVector::zeros(svd.singular_values.len());
    let mut deficient = false;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            y[i] = utb[i] / s;
        } else {
            deficient = true;
        }
    }
    Ok((vt.transpose() * y, deficient))
}

pub(crate) fn solve_system(a: &DMatrix<f64>, b: &DVector<f64>, method: SolveMethod) -> Result<(DVector<f64>, bool)> {
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite entries in the LSTDQ system".into()));
    }
    let (x, deficient) = match method {
        SolveMethod::MinNorm { rcond } => min_norm_solve(a, b, rcond)?,
        SolveMethod::Ridge { lambda } => {
            let n = a.ncols();
            let ata = a.transpose() * a + DMatrix::identity(n, n) * lambda;
            let atb = a.transpose() * b;
            let x = ata
                .lu()
                .solve(&atb)
                .ok_or_else(|| Error::Numeric("ridge system is singular".into()))?;
            (x, false)
        }
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("LSTDQ solution is not finite".into()));
    }
    Ok((x, deficient))
}

/// Running sums `A = sum phi (phi - gamma phi')^T` and `b = sum phi r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstdqAccumulator {
    pub a_hat: DMatrix<f64>,
    pub b_hat: DVector<f64>,
    pub n_samples_seen: usize,
}

impl LstdqAccumulator {
    pub fn new(dim: usize) -> Self {
        LstdqAccumulator {
            a_hat: DMatrix::zeros(dim, dim),
            b_hat: DVector::zeros(dim),
            n_samples_seen: 0,
        }
    }

    /// Adds one sample, touching only the action blocks involved. The
    /// bootstrap term is dropped when the sample ends in an absorbing state.
    pub fn add(
        &mut self,
        basis: &BasisSet,
        discount: f64,
        sample: &TransitionSample,
        policy: &DeterministicPolicy,
    ) {
        let k = basis.k();
        let f = basis.state_feature(sample.state);
        let ra = sample.action * k;
        let bootstrap = !sample.absorbing;
        let na = policy.action(sample.next_state);
        let g = basis.state_feature(sample.next_state);
        let ca = na * k;
        for (i, &fi) in f.iter().enumerate() {
            if fi == 0.0 {
                continue;
            }
            let r = ra + i;
            if bootstrap && na == sample.action {
                for j in 0..k {
                    self.a_hat[(r, ra + j)] += fi * (f[j] - discount * g[j]);
                }
            } else {
                for j in 0..k {
                    self.a_hat[(r, ra + j)] += fi * f[j];
                }
                if bootstrap {
                    for j in 0..k {
                        self.a_hat[(r, ca + j)] += fi * (-discount * g[j]);
                    }
                }
            }
            self.b_hat[r] += fi * sample.reward;
        }
        self.n_samples_seen += 1;
    }

    pub fn solve(&self, method: SolveMethod) -> Result<DVector<f64>> {
        Ok(solve_system(&self.a_hat, &self.b_hat, method)?.0)
    }

    /// `||A w - b|| / max(||b||, ||A|| ||w||)`.
    pub fn relative_residual(&self, w: &DVector<f64>) -> f64 {
        let r = (&self.a_hat * w - &self.b_hat).norm();
        let scale = self.b_hat.norm().max(self.a_hat.norm() * w.norm());
        if scale == 0.0 {
            r
        } else {
            r / scale
        }
    }
}

fn check_samples(samples: &[TransitionSample], basis: &BasisSet, discount: f64) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Input("LSTDQ needs at least one sample".into()));
    }
    if !(0.0..1.0).contains(&discount) {
        return Err(Error::Config(format!("discount {discount} outside [0, 1)")));
    }
    let (ns, na) = (basis.n_states(), basis.n_actions());
    if let Some(s) = samples
        .iter()
        .find(|s| s.state >= ns || s.next_state >= ns || s.action >= na || !s.reward.is_finite())
    {
        return Err(Error::Input(format!("sample {s:?} outside the basis or non-finite")));
    }
    Ok(())
}

/// Accumulates over `samples` in order, without solving.
pub fn lstdq_system(
    samples: &[TransitionSample],
    basis: &BasisSet,
    discount: f64,
    policy: &DeterministicPolicy,
) -> Result<LstdqAccumulator> {
    check_samples(samples, basis, discount)?;
    if policy.n_states() != basis.n_states() {
        return Err(Error::Input("policy does not cover the basis states".into()));
    }
    let mut acc = LstdqAccumulator::new(basis.dim());
    for s in samples {
        acc.add(basis, discount, s, policy);
    }
    Ok(acc)
}

/// Weights of the approximate `Q^policy` from samples.
pub fn lstdq(
    samples: &[TransitionSample],
    basis: &Arc<BasisSet>,
    discount: f64,
    policy: &DeterministicPolicy,
    method: SolveMethod,
) -> Result<WeightVector> {
    let acc = lstdq_system(samples, basis, discount, policy)?;
    let w = acc.solve(method)?;
    WeightVector::new(Arc::clone(basis), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{polynomial_basis, tabular_basis};

    #[test]
    fn blockwise_matches_dense_update() {
        let basis = polynomial_basis(6, 2, 3);
        let pi = DeterministicPolicy::new(vec![0, 1, 2, 1, 1, 0], 3).unwrap();
        let samples = [
            TransitionSample::new(0, 0, 1.0, 1),
            TransitionSample::new(1, 1, -0.5, 3),
            TransitionSample::new(4, 2, 0.25, 5),
            TransitionSample {
                absorbing: true,
                ..TransitionSample::new(5, 1, 2.0, 2)
            },
        ];
        let acc = lstdq_system(&samples, &basis, 0.9, &pi).unwrap();
        let mut a = DMatrix::zeros(9, 9);
        let mut b = DVector::zeros(9);
        for s in &samples {
            let phi = basis.features(s.state, s.action);
            let next = if s.absorbing {
                DVector::zeros(9)
            } else {
                basis.features(s.next_state, pi.action(s.next_state))
            };
            a += &phi * (&phi - next * 0.9).transpose();
            b += &phi * s.reward;
        }
        assert!((acc.a_hat - a).amax() < 1e-15);
        assert!((acc.b_hat - b).amax() < 1e-15);
        assert_eq!(acc.n_samples_seen, 4);
    }

    #[test]
    fn zero_rewards_give_zero_weights() {
        let basis = Arc::new(tabular_basis(3, 2));
        let samples = [TransitionSample::new(0, 1, 0.0, 2), TransitionSample::new(2, 0, 0.0, 2)];
        let w = lstdq(&samples, &basis, 0.8, &DeterministicPolicy::constant(3, 0), SolveMethod::default()).unwrap();
        assert!(w.weights().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn min_norm_on_singular_system() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, 2.0]);
        let (x, deficient) = min_norm_solve(&a, &b, None).unwrap();
        assert!(deficient);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_close_to_exact_when_regular() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 3.0]);
        let (x, _) = solve_system(&a, &b, SolveMethod::RIDGE_DEFAULT).unwrap();
        let (y, _) = solve_system(&a, &b, SolveMethod::default()).unwrap();
        assert!((x - y).amax() < 1e-5);
    }

    #[test]
    fn invalid_inputs() {
        let basis = Arc::new(tabular_basis(2, 2));
        let pi = DeterministicPolicy::constant(2, 0);
        assert!(lstdq(&[], &basis, 0.8, &pi, SolveMethod::default()).is_err());
        let bad = [TransitionSample::new(0, 2, 0.0, 1)];
        assert!(lstdq(&bad, &basis, 0.8, &pi, SolveMethod::default()).is_err());
        let ok = [TransitionSample::new(0, 1, 0.0, 1)];
        assert!(lstdq(&ok, &basis, 1.0, &pi, SolveMethod::default()).is_err());
        let nan = [TransitionSample::new(0, 1, f64::NAN, 1)];
        assert!(lstdq(&nan, &basis, 0.8, &pi, SolveMethod::default()).is_err());
        let a = DMatrix::from_element(1, 1, f64::INFINITY);
        assert!(matches!(solve_system(&a, &DVector::zeros(1), SolveMethod::default()), Err(Error::Numeric(_))));
    }
}
