//! Dense sparse-coding primitives: column normalization, Orthogonal Matching
//! Pursuit and reconstruction error.
//!
//! Signals and atoms are stored one per column. Codes are dense matrices whose
//! columns carry at most `sparsity` nonzeros.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const ZERO_NORM: f64 = 1e-12;
const UNIT_NORM_TOL: f64 = 1e-9;
const RESIDUAL_STOP: f64 = 1e-10;
const CORRELATION_STOP: f64 = 1e-10;
const TIE_TOL: f64 = 1e-12;
const PINV_TOL: f64 = 1e-10;

/// A matrix whose columns all have unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
}

impl Dictionary {
    /// Wraps a matrix that is already column-normalized.
    pub fn new(atoms: DMatrix<f64>) -> Result<Self> {
        if atoms.ncols() == 0 || atoms.nrows() == 0 {
            return Err(Error::DimensionMismatch(
                "dictionary needs at least one atom and one row".into(),
            ));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch("dictionary has non-finite entries".into()));
        }
        for (k, col) in atoms.column_iter().enumerate() {
            if (col.norm() - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::DimensionMismatch(format!(
                    "atom {k} has norm {} (expected 1)",
                    col.norm()
                )));
            }
        }
        Ok(Self { atoms })
    }

    /// Normalizes every column of `m` and wraps the result.
    pub fn from_unnormalized(m: &DMatrix<f64>) -> Result<Self> {
        let (atoms, _) = normalize_columns(m)?;
        Self::new(atoms)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.atoms
    }

    pub fn n_features(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    /// Gram matrix `DᵀD`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.atoms.transpose() * &self.atoms
    }

    /// Largest sparsity level `omp` accepts for this dictionary.
    pub fn max_sparsity(&self) -> usize {
        self.n_atoms().min(self.n_features())
    }
}

/// Codes for a batch of signals, one column per signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodes {
    pub codes: DMatrix<f64>,
    pub sparsity: usize,
}

impl SparseCodes {
    pub fn nnz_in_column(&self, j: usize) -> usize {
        self.codes.column(j).iter().filter(|v| **v != 0.0).count()
    }

    /// Indices of signals whose code uses atom `k`.
    pub fn users_of(&self, k: usize) -> Vec<usize> {
        self.codes
            .row(k)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Scales every column to unit norm, returning the original norms so that
/// `m = normalized * diag(norms)`.
pub fn normalize_columns(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let mut out = m.clone();
    let mut norms = Vec::with_capacity(m.ncols());
    for (k, mut col) in out.column_iter_mut().enumerate() {
        let n = col.norm();
        if !(n >= ZERO_NORM) {
            return Err(Error::ZeroColumn { column: k });
        }
        col /= n;
        norms.push(n);
    }
    Ok((out, norms))
}

/// Orthogonal Matching Pursuit: greedily selects up to `sparsity` atoms and
/// re-solves least squares on the whole support after each selection.
pub fn omp(d: &Dictionary, y: &DVector<f64>, sparsity: usize) -> Result<DVector<f64>> {
    check_sparsity(d, sparsity)?;
    check_signal_len(d, y.len())?;
    let gram = d.gram();
    let proj = d.matrix().tr_mul(y);
    Ok(omp_with_gram(d, &gram, y, proj, sparsity))
}

/// Applies [`omp`] to every column of `y`.
pub fn batch_code(d: &Dictionary, y: &DMatrix<f64>, sparsity: usize) -> Result<SparseCodes> {
    check_sparsity(d, sparsity)?;
    if y.ncols() > 0 {
        check_signal_len(d, y.nrows()).map_err(|e| e.in_column(0))?;
    }
    let gram = d.gram();
    let proj = d.matrix().transpose() * y;
    let mut codes = DMatrix::zeros(d.n_atoms(), y.ncols());
    for j in 0..y.ncols() {
        let col = y.column(j).into_owned();
        let x = omp_with_gram(d, &gram, &col, proj.column(j).into_owned(), sparsity);
        codes.set_column(j, &x);
    }
    Ok(SparseCodes { codes, sparsity })
}

/// Squared Frobenius norm `‖Y − DX‖²`.
pub fn reconstruction_error(d: &Dictionary, x: &SparseCodes, y: &DMatrix<f64>) -> Result<f64> {
    if x.codes.nrows() != d.n_atoms()
        || y.nrows() != d.n_features()
        || x.codes.ncols() != y.ncols()
    {
        return Err(Error::DimensionMismatch(format!(
            "D is {}x{}, X is {}x{}, Y is {}x{}",
            d.n_features(),
            d.n_atoms(),
            x.codes.nrows(),
            x.codes.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    Ok(residual_matrix(d.matrix(), &x.codes, y).norm_squared())
}

/// `Y − DX`, skipping the zero entries of `X`.
pub(crate) fn residual_matrix(d: &DMatrix<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let mut r = y.clone();
    for j in 0..x.ncols() {
        let mut col = r.column_mut(j);
        for (k, &v) in x.column(j).iter().enumerate() {
            if v != 0.0 {
                col.axpy(-v, &d.column(k), 1.0);
            }
        }
    }
    r
}

fn check_sparsity(d: &Dictionary, sparsity: usize) -> Result<()> {
    let max = d.max_sparsity();
    if sparsity == 0 || sparsity > max {
        return Err(Error::SparsityOutOfRange { sparsity, max });
    }
    Ok(())
}

fn check_signal_len(d: &Dictionary, len: usize) -> Result<()> {
    if len != d.n_features() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {len} entries, dictionary atoms have {}",
            d.n_features()
        )));
    }
    Ok(())
}

/// OMP driven by a precomputed Gram matrix. Correlations with the residual
/// are tracked as `Dᵀy − G[:, S]·c` so that only the initial projection
/// `proj = Dᵀy` touches the full feature dimension.
pub(crate) fn omp_with_gram(
    d: &Dictionary,
    gram: &DMatrix<f64>,
    y: &DVector<f64>,
    proj: DVector<f64>,
    sparsity: usize,
) -> DVector<f64> {
    let atoms = d.matrix();
    let n_atoms = d.n_atoms();
    let mut code = DVector::zeros(n_atoms);
    let mut support: Vec<usize> = Vec::with_capacity(sparsity);
    let mut selected = vec![false; n_atoms];
    let mut coef = DVector::zeros(0);
    let mut corr = proj.clone();

    if y.norm() < RESIDUAL_STOP {
        return code;
    }

    while support.len() < sparsity {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..n_atoms {
            if selected[k] {
                continue;
            }
            let c = corr[k].abs();
            match best {
                Some((_, b)) if c <= b + TIE_TOL => {}
                _ => best = Some((k, c)),
            }
        }
        let Some((k, c)) = best else { break };
        if c < CORRELATION_STOP {
            break;
        }
        selected[k] = true;
        support.push(k);

        let s = support.len();
        let sub_gram = DMatrix::from_fn(s, s, |i, j| gram[(support[i], support[j])]);
        let rhs = DVector::from_fn(s, |i, _| proj[support[i]]);
        coef = solve_spd(&sub_gram, &rhs);

        corr.copy_from(&proj);
        for (i, &a) in support.iter().enumerate() {
            corr.axpy(-coef[i], &gram.column(a), 1.0);
        }

        let mut residual = y.clone();
        for (i, &a) in support.iter().enumerate() {
            residual.axpy(-coef[i], &atoms.column(a), 1.0);
        }
        if residual.norm() < RESIDUAL_STOP {
            break;
        }
    }

    for (i, &a) in support.iter().enumerate() {
        code[a] = coef[i];
    }
    code
}

/// Solves `G c = b` for a symmetric positive semi-definite `G`: Cholesky with
/// one step of iterative refinement, falling back to a pseudo-inverse when the
/// factorization fails.
pub(crate) fn solve_spd(g: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if let Some(chol) = g.clone().cholesky() {
        let mut c = chol.solve(b);
        let r = b - g * &c;
        c += chol.solve(&r);
        if c.iter().all(|v| v.is_finite()) {
            return c;
        }
    }
    pinv_solve(g, b)
}

pub(crate) fn pinv_solve(g: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = g.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = PINV_TOL * smax.max(1.0);
    svd.solve(b, tol).unwrap_or_else(|_| DVector::zeros(g.ncols()))
}
