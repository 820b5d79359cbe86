use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{BasisKind, BasisSet};

/// How a state index enters the monomials.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolynomialEncoding {
    /// `t` affine in the state index, spanning `[-1, 1]`.
    #[default]
    Rescaled,
    /// `t = s + 1`, the 1-based state number.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RbfWidth {
    /// Distance between adjacent centres.
    #[default]
    Spacing,
    Fixed(f64),
}

pub fn polynomial_basis(n_states: usize, degree: usize, n_actions: usize) -> BasisSet {
    polynomial_basis_with(n_states, degree, n_actions, PolynomialEncoding::Rescaled)
}

/// State features `[1, t, ..., t^degree]`.
pub fn polynomial_basis_with(
    n_states: usize,
    degree: usize,
    n_actions: usize,
    encoding: PolynomialEncoding,
) -> BasisSet {
    let t = |s: usize| match encoding {
        PolynomialEncoding::Rescaled if n_states > 1 => -1.0 + 2.0 * s as f64 / (n_states - 1) as f64,
        PolynomialEncoding::Rescaled => 0.0,
        PolynomialEncoding::Raw => (s + 1) as f64,
    };
    let m = DMatrix::from_fn(n_states, degree + 1, |s, j| t(s).powi(j as i32));
    BasisSet::new(BasisKind::Polynomial, n_actions, m, None).expect("valid polynomial basis")
}

pub fn rbf_basis(n_states: usize, n_centers: usize, n_actions: usize) -> BasisSet {
    rbf_basis_with(n_states, n_centers, n_actions, RbfWidth::Spacing)
}

/// State features `[1, exp(-(x - c_j)^2 / (2 sigma^2))...]` with `x = s + 1`
/// and centres evenly spaced over `[1, n_states]`.
///
/// A single centre sits at the midpoint with width `n_states - 1` unless a
/// fixed width is given.
pub fn rbf_basis_with(
    n_states: usize,
    n_centers: usize,
    n_actions: usize,
    width: RbfWidth,
) -> BasisSet {
    let span = n_states.saturating_sub(1) as f64;
    let centers: Vec<f64> = if n_centers == 1 {
        vec![(1.0 + n_states as f64) / 2.0]
    } else {
        (0..n_centers)
            .map(|j| 1.0 + span * j as f64 / (n_centers - 1) as f64)
            .collect()
    };
    let sigma = match width {
        RbfWidth::Fixed(s) => s,
        RbfWidth::Spacing if n_centers == 1 => span,
        RbfWidth::Spacing => span / (n_centers - 1) as f64,
    };
    let sigma = if sigma > 0.0 { sigma } else { 1.0 };
    let m = DMatrix::from_fn(n_states, n_centers + 1, |s, j| {
        if j == 0 {
            1.0
        } else {
            let d = (s + 1) as f64 - centers[j - 1];
            (-d * d / (2.0 * sigma * sigma)).exp()
        }
    });
    BasisSet::new(BasisKind::Rbf, n_actions, m, None).expect("valid RBF basis")
}

pub fn tabular_basis(n_states: usize, n_actions: usize) -> BasisSet {
    BasisSet::new(BasisKind::Tabular, n_actions, DMatrix::identity(n_states, n_states), None)
        .expect("valid tabular basis")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_rows() {
        let b = polynomial_basis(3, 2, 1);
        assert_eq!(
            b.state_features(),
            &DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0])
        );
        let c = polynomial_basis(50, 0, 2);
        assert_eq!((c.k(), c.dim()), (1, 2));
        assert!(c.state_features().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn raw_polynomial_uses_state_numbers() {
        let b = polynomial_basis_with(4, 2, 1, PolynomialEncoding::Raw);
        assert_eq!(b.state_feature(3), &[1.0, 4.0, 16.0]);
    }

    #[test]
    fn rbf_layout() {
        let b = rbf_basis(50, 5, 2);
        assert_eq!(b.k(), 6);
        for s in 0..50 {
            assert_eq!(b.state_feature(s)[0], 1.0);
        }
        // Centres at 1, 13.25, 25.5, 37.75, 50.
        assert_eq!(b.state_feature(0)[1], 1.0);
        assert_eq!(b.state_feature(49)[5], 1.0);
        let d: f64 = 1.0;
        let expect = (-d * d / (2.0 * 12.25 * 12.25)).exp();
        assert_eq!(b.state_feature(1)[1], expect);
    }

    #[test]
    fn single_rbf_is_symmetric() {
        for n in [2, 7, 50] {
            let b = rbf_basis(n, 1, 1);
            assert!((b.state_feature(0)[1] - b.state_feature(n - 1)[1]).abs() < 1e-12);
        }
        let odd = rbf_basis(7, 1, 1);
        assert_eq!(odd.state_feature(3)[1], 1.0);
    }

    #[test]
    fn fixed_width() {
        let b = rbf_basis_with(10, 2, 1, RbfWidth::Fixed(4.0));
        assert_eq!(b.state_feature(4)[1], (-16.0f64 / 32.0).exp());
    }

    #[test]
    fn tabular_identity() {
        let b = tabular_basis(3, 2);
        assert_eq!(b.state_features(), &DMatrix::identity(3, 3));
        assert_eq!(b.features(2, 1).as_slice(), &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }
}
