//! State-action feature encoders.
//!
//! Every basis is a state encoding `n_states x k` replicated over actions
//! with an indicator: `phi(s, a)` has length `k * n_actions` and only the
//! block at `a` is nonzero.

mod gram_schmidt;
mod laplacian;
mod simple;

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use gram_schmidt::{
    gram_schmidt_orthonormalize, legendre_inner, poly_eval, ContinuousLegendre, DiscreteWeighted,
    InnerProductSpace, DEGENERACY_THRESHOLD,
};
pub use laplacian::{laplacian_basis, MissingStateRule};
pub use simple::{
    polynomial_basis, polynomial_basis_with, rbf_basis, rbf_basis_with, tabular_basis,
    PolynomialEncoding, RbfWidth,
};

use crate::error::{Error, Result};
use crate::mdp::{ActionId, StateId};
use crate::spectral::OperatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    LaplacianCombinatorial,
    LaplacianNormalized,
    Polynomial,
    Rbf,
    Tabular,
}

impl BasisKind {
    pub fn laplacian(kind: OperatorKind) -> Self {
        match kind {
            OperatorKind::Combinatorial => BasisKind::LaplacianCombinatorial,
            OperatorKind::Normalized => BasisKind::LaplacianNormalized,
        }
    }

    pub fn operator(self) -> Option<OperatorKind> {
        match self {
            BasisKind::LaplacianCombinatorial => Some(OperatorKind::Combinatorial),
            BasisKind::LaplacianNormalized => Some(OperatorKind::Normalized),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    kind: BasisKind,
    n_actions: usize,
    state_features: DMatrix<f64>,
    /// Row-major copy of `state_features` for fast per-state access.
    rows: Vec<f64>,
    eigenvalues: Option<Vec<f64>>,
}

impl BasisSet {
    pub fn new(
        kind: BasisKind,
        n_actions: usize,
        state_features: DMatrix<f64>,
        eigenvalues: Option<Vec<f64>>,
    ) -> Result<Self> {
        if n_actions == 0 {
            return Err(Error::Input("basis needs at least one action".into()));
        }
        if state_features.nrows() == 0 || state_features.ncols() == 0 {
            return Err(Error::Input("basis needs at least one state and one feature".into()));
        }
        if state_features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("basis has non-finite features".into()));
        }
        let rows = state_features.transpose().as_slice().to_vec();
        Ok(BasisSet {
            kind,
            n_actions,
            state_features,
            rows,
            eigenvalues,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn n_states(&self) -> usize {
        self.state_features.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Features per action block.
    pub fn k(&self) -> usize {
        self.state_features.ncols()
    }

    /// Length of `phi(s, a)`.
    pub fn dim(&self) -> usize {
        self.k() * self.n_actions
    }

    pub fn state_features(&self) -> &DMatrix<f64> {
        &self.state_features
    }

    pub fn state_feature(&self, s: StateId) -> &[f64] {
        let k = self.k();
        &self.rows[s * k..(s + 1) * k]
    }

    /// Eigenvalues matching the columns of a Laplacian basis.
    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    pub fn features(&self, s: StateId, a: ActionId) -> DVector<f64> {
        let mut phi = DVector::zeros(self.dim());
        let k = self.k();
        phi.as_mut_slice()[a * k..(a + 1) * k].copy_from_slice(self.state_feature(s));
        phi
    }

    /// `phi(s, a) . w`.
    pub fn q_value(&self, w: &[f64], s: StateId, a: ActionId) -> f64 {
        let k = self.k();
        self.state_feature(s)
            .iter()
            .zip(&w[a * k..(a + 1) * k])
            .map(|(x, y)| x * y)
            .sum()
    }

    /// Header `state,phi_1,...,phi_k`, one row per state, states numbered
    /// from 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["state".to_string()];
        header.extend((1..=self.k()).map(|j| format!("phi_{j}")));
        let csv_err = |e: csv::Error| Error::Numeric(format!("CSV encoding failed: {e}"));
        w.write_record(&header).map_err(csv_err)?;
        for s in 0..self.n_states() {
            let mut rec = vec![(s + 1).to_string()];
            rec.extend(self.state_feature(s).iter().map(|x| x.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::io("<basis csv>", e))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }
}
