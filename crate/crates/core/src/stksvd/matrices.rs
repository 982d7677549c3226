use nalgebra::DMatrix;

use super::{AtomMeta, ClassId, SampleMeta};
use crate::error::{Error, Result};
use crate::sparse::SparseCodes;

/// Sorted set of class labels; row `i` of label matrices is `classes[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassIndex {
    classes: Vec<ClassId>,
}

impl ClassIndex {
    pub fn new(labels: impl IntoIterator<Item = ClassId>) -> Self {
        let mut classes: Vec<ClassId> = labels.into_iter().collect();
        classes.sort_unstable();
        classes.dedup();
        Self { classes }
    }

    pub fn row(&self, label: ClassId) -> Result<usize> {
        self.classes.binary_search(&label).map_err(|_| Error::UnknownLabel(label))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }
}

/// One-hot class indicators `h` (`c × n`) and the atom/signal label
/// agreement mask `q1` (`K × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrices {
    pub h: DMatrix<f64>,
    pub q1: DMatrix<f64>,
}

pub fn build_label_matrices(
    signal_labels: &[ClassId],
    atom_labels: &[ClassId],
    index: &ClassIndex,
) -> Result<LabelMatrices> {
    let n = signal_labels.len();
    let mut h = DMatrix::zeros(index.len(), n);
    for (i, &label) in signal_labels.iter().enumerate() {
        h[(index.row(label)?, i)] = 1.0;
    }
    for &label in atom_labels {
        index.row(label)?;
    }
    let q1 = DMatrix::from_fn(atom_labels.len(), n, |k, i| {
        if atom_labels[k] == signal_labels[i] {
            1.0
        } else {
            0.0
        }
    });
    Ok(LabelMatrices { h, q1 })
}

/// Kernel `θ = exp(−(|tₐ − tₛ| + ‖pₐ − pₛ‖) / σ)` between every atom and
/// every training sample.
pub fn build_spatiotemporal_matrix(
    atoms: &[AtomMeta],
    signals: &[SampleMeta],
    sigma_s: f64,
) -> Result<DMatrix<f64>> {
    if !(sigma_s > 0.0) {
        return Err(Error::NonPositiveSigma(sigma_s));
    }
    Ok(DMatrix::from_fn(atoms.len(), signals.len(), |k, i| {
        let a = &atoms[k];
        let s = &signals[i];
        let dt = (a.time as f64 - s.time as f64).abs();
        let dp = a.position.distance(&s.position);
        (-(dt + dp) / sigma_s).exp()
    }))
}

/// Elementwise product of the label mask and the spatiotemporal kernel.
pub fn build_discriminative_code(q1: &DMatrix<f64>, qst: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if q1.shape() != qst.shape() {
        return Err(Error::DimensionMismatch(format!(
            "mask is {:?}, kernel is {:?}",
            q1.shape(),
            qst.shape()
        )));
    }
    Ok(q1.component_mul(qst))
}

/// Ridge fit of `H ≈ W X`: `W = H Xᵀ (X Xᵀ + ξI)⁻¹`, shape `c × K`.
pub fn init_classifier(x: &SparseCodes, h: &DMatrix<f64>, xi: f64) -> Result<DMatrix<f64>> {
    ridge(&x.codes, h, xi)
}

/// Ridge fit of `Q ≈ A X`: `A = Q Xᵀ (X Xᵀ + ξI)⁻¹`, shape `K × K`.
pub fn init_transform(x: &SparseCodes, q: &DMatrix<f64>, xi: f64) -> Result<DMatrix<f64>> {
    ridge(&x.codes, q, xi)
}

fn ridge(x: &DMatrix<f64>, target: &DMatrix<f64>, xi: f64) -> Result<DMatrix<f64>> {
    if target.ncols() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "codes have {} columns, targets have {}",
            x.ncols(),
            target.ncols()
        )));
    }
    if !(xi >= 0.0) {
        return Err(Error::Config(format!("ridge weight must be non-negative, got {xi}")));
    }
    let k = x.nrows();
    let gram = x * x.transpose() + DMatrix::identity(k, k) * xi;
    let rhs = x * target.transpose();
    let solved = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None if xi > 0.0 => gram.lu().solve(&rhs).ok_or(Error::SingularSystem)?,
        None => return Err(Error::SingularSystem),
    };
    if solved.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(solved.transpose())
}
