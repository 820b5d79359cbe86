use crate::error::{Error, Result};

/// A vector is degenerate when projection leaves less than this fraction of
/// its original norm.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

pub trait InnerProductSpace {
    type Elem: Clone;

    fn inner(&self, a: &Self::Elem, b: &Self::Elem) -> f64;

    /// `y += alpha * x`.
    fn axpy(&self, y: &mut Self::Elem, alpha: f64, x: &Self::Elem);

    fn scale(&self, x: &mut Self::Elem, alpha: f64);
}

/// Polynomials as coefficient lists `c[i] t^i`, with `<p, q> = int_{-1}^{1} p q dt`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ContinuousLegendre;

/// `int_{-1}^{1} p(t) q(t) dt`, integrated exactly monomial by monomial.
pub fn legendre_inner(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            if (i + j) % 2 == 0 {
                total += a * b * 2.0 / (i + j + 1) as f64;
            }
        }
    }
    total
}

pub fn poly_eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

impl InnerProductSpace for ContinuousLegendre {
    type Elem = Vec<f64>;

    fn inner(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        legendre_inner(a, b)
    }

    fn axpy(&self, y: &mut Vec<f64>, alpha: f64, x: &Vec<f64>) {
        if y.len() < x.len() {
            y.resize(x.len(), 0.0);
        }
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    fn scale(&self, x: &mut Vec<f64>, alpha: f64) {
        x.iter_mut().for_each(|v| *v *= alpha);
    }
}

/// Vectors with `<x, y> = sum_i w_i x_i y_i`.
#[derive(Debug, Clone)]
pub struct DiscreteWeighted {
    pub weights: Vec<f64>,
}

impl DiscreteWeighted {
    pub fn unit(n: usize) -> Self {
        DiscreteWeighted { weights: vec![1.0; n] }
    }
}

impl InnerProductSpace for DiscreteWeighted {
    type Elem = Vec<f64>;

    fn inner(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        self.weights.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
    }

    fn axpy(&self, y: &mut Vec<f64>, alpha: f64, x: &Vec<f64>) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    fn scale(&self, x: &mut Vec<f64>, alpha: f64) {
        x.iter_mut().for_each(|v| *v *= alpha);
    }
}

/// Classical Gram-Schmidt with one reorthogonalization pass.
pub fn gram_schmidt_orthonormalize<S: InnerProductSpace>(
    space: &S,
    functions: &[S::Elem],
) -> Result<Vec<S::Elem>> {
    let mut out: Vec<S::Elem> = Vec::with_capacity(functions.len());
    for (i, f) in functions.iter().enumerate() {
        let original = space.inner(f, f).sqrt();
        if !(original > 0.0) {
            return Err(Error::Numeric(format!("function {i} has zero or invalid norm")));
        }
        let mut v = f.clone();
        for _ in 0..2 {
            let coeffs: Vec<f64> = out.iter().map(|q| space.inner(q, &v)).collect();
            for (q, c) in out.iter().zip(coeffs) {
                space.axpy(&mut v, -c, q);
            }
        }
        let norm = space.inner(&v, &v).max(0.0).sqrt();
        if norm < DEGENERACY_THRESHOLD * original {
            return Err(Error::Numeric(format!(
                "function {i} is linearly dependent on its predecessors"
            )));
        }
        space.scale(&mut v, 1.0 / norm);
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() >= b.len()
            && a.iter().enumerate().all(|(i, x)| (x - b.get(i).copied().unwrap_or(0.0)).abs() < 1e-12)
    }

    #[test]
    fn legendre_from_monomials() {
        let mono = vec![vec![1.0], vec![0.0, 1.0], vec![0.0, 0.0, 1.0]];
        let p = gram_schmidt_orthonormalize(&ContinuousLegendre, &mono).unwrap();
        let s10 = 10f64.sqrt();
        assert!(close(&p[0], &[1.0 / 2f64.sqrt()]));
        assert!(close(&p[1], &[0.0, 6f64.sqrt() / 2.0]));
        assert!(close(&p[2], &[-s10 / 4.0, 0.0, 3.0 * s10 / 4.0]));
    }

    #[test]
    fn orthonormal_input_unchanged() {
        let s10 = 10f64.sqrt();
        let input = vec![
            vec![1.0 / 2f64.sqrt()],
            vec![0.0, 6f64.sqrt() / 2.0],
            vec![-s10 / 4.0, 0.0, 3.0 * s10 / 4.0],
        ];
        let out = gram_schmidt_orthonormalize(&ContinuousLegendre, &input).unwrap();
        for (a, b) in out.iter().zip(&input) {
            assert!(close(a, b));
        }
    }

    #[test]
    fn discrete_monomials() {
        let m = 12;
        let space = DiscreteWeighted::unit(m);
        let mono: Vec<Vec<f64>> = (0..5)
            .map(|d| (1..=m).map(|x| (x as f64).powi(d)).collect())
            .collect();
        let q = gram_schmidt_orthonormalize(&space, &mono).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let ip = space.inner(&q[i], &q[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10, "{i} {j} {ip}");
            }
        }
    }

    #[test]
    fn dependent_input_rejected() {
        let space = DiscreteWeighted::unit(3);
        let fs = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]];
        assert!(gram_schmidt_orthonormalize(&space, &fs).is_err());
        assert!(gram_schmidt_orthonormalize(&space, &[vec![0.0; 3]]).is_err());
    }

    #[test]
    fn poly_eval_horner() {
        assert_eq!(poly_eval(&[1.0, 2.0, 3.0], 2.0), 17.0);
        assert_eq!(legendre_inner(&[1.0], &[1.0]), 2.0);
        assert_eq!(legendre_inner(&[0.0, 1.0], &[1.0]), 0.0);
    }
}
