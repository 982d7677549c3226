//! K-SVD dictionary learning: OMP sparse coding alternated with a sweep of
//! rank-1 atom updates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{
    batch_code, normalize_columns, reconstruction_error, residual_matrix, Dictionary, SparseCodes,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Pick `num_atoms` distinct training signals at random.
    FromSignals,
    /// Start from a caller-supplied dictionary.
    Provided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsvdConfig {
    pub num_atoms: usize,
    pub sparsity: usize,
    pub iterations: usize,
    pub init: InitStrategy,
    pub seed: u64,
}

impl KsvdConfig {
    pub fn new(num_atoms: usize, sparsity: usize) -> Self {
        Self {
            num_atoms,
            sparsity,
            iterations: 10,
            init: InitStrategy::FromSignals,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.num_atoms == 0 || self.sparsity == 0 {
            return Err(Error::Config(
                "iterations, num_atoms and sparsity must be at least 1".into(),
            ));
        }
        if self.sparsity > self.num_atoms {
            return Err(Error::SparsityOutOfRange {
                sparsity: self.sparsity,
                max: self.num_atoms,
            });
        }
        Ok(())
    }
}

/// Reconstruction error around one atom sweep: `before` is measured right
/// after sparse coding, `after` once every atom has been updated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepErrors {
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone)]
pub struct KsvdOutput {
    pub dictionary: Dictionary,
    pub codes: SparseCodes,
    /// `‖Y − DX‖²` after each full iteration.
    pub error_history: Vec<f64>,
    pub sweeps: Vec<SweepErrors>,
}

/// Rank-1 update of atom `k` over the signals that use it. Returns the new
/// unit atom and the new coefficients for row `k` (zero outside the support).
pub fn update_atom(
    d: &Dictionary,
    x: &SparseCodes,
    y: &DMatrix<f64>,
    k: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if k >= d.n_atoms() {
        return Err(Error::IndexOutOfRange { index: k, len: d.n_atoms() });
    }
    let users = x.users_of(k);
    if users.is_empty() {
        return Err(Error::UnusedAtom(k));
    }
    let err = restricted_residual(d.matrix(), &x.codes, y, k, &users);
    let (atom, coefs) = rank_one(&err, &d.matrix().column(k).into_owned());
    let mut row = DVector::zeros(x.codes.ncols());
    for (i, &j) in users.iter().enumerate() {
        row[j] = coefs[i];
    }
    Ok((atom, row))
}

/// `E_k` restricted to the using signals: `Y_ω − D X_ω + d_k x_{k,ω}`.
fn restricted_residual(
    d: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    k: usize,
    users: &[usize],
) -> DMatrix<f64> {
    let mut err = DMatrix::zeros(d.nrows(), users.len());
    for (c, &j) in users.iter().enumerate() {
        let mut col = y.column(j).into_owned();
        for (a, v) in x.column(j).iter().enumerate() {
            if *v != 0.0 && a != k {
                col.axpy(-*v, &d.column(a), 1.0);
            }
        }
        err.set_column(c, &col);
    }
    err
}

/// Best rank-1 approximation `u gᵀ` of `e` with `‖u‖ = 1`, sign-fixed so the
/// largest-magnitude entry of `u` is positive. Falls back to `fallback` when
/// `e` vanishes.
fn rank_one(e: &DMatrix<f64>, fallback: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let (rows, cols) = e.shape();
    let mut u = if cols <= rows {
        let g = e.transpose() * e;
        let v = top_eigenvector(g);
        e * v
    } else {
        top_eigenvector(e * e.transpose())
    };
    let n = u.norm();
    if !(n > 1e-300) || !u.iter().all(|v| v.is_finite()) {
        u = fallback.clone();
    } else {
        u /= n;
    }
    let lead = u
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1.abs() { (i, *v) } else { best });
    if lead.1 < 0.0 {
        u.neg_mut();
    }
    let coefs = e.tr_mul(&u);
    (u, coefs)
}

fn top_eigenvector(m: DMatrix<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(m);
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    eig.eigenvectors.column(best).into_owned()
}

/// Group labels restricting dead-atom replacement: atom `k` may only be
/// replaced by a signal `j` with `signals[j] == atoms[k]`.
#[derive(Debug, Clone, Copy)]
pub struct ReplacementGroups<'a> {
    pub atoms: &'a [u64],
    pub signals: &'a [u64],
}

/// Trains a dictionary on `y` with K-SVD.
pub fn ksvd_train(
    y: &DMatrix<f64>,
    cfg: &KsvdConfig,
    d0: Option<&Dictionary>,
) -> Result<KsvdOutput> {
    ksvd_train_grouped(y, cfg, d0, None)
}

/// [`ksvd_train`] where unused atoms are only re-seeded from signals of
/// their own group, so atom labels stay meaningful.
pub fn ksvd_train_grouped(
    y: &DMatrix<f64>,
    cfg: &KsvdConfig,
    d0: Option<&Dictionary>,
    groups: Option<ReplacementGroups<'_>>,
) -> Result<KsvdOutput> {
    cfg.validate()?;
    if let Some(g) = groups {
        if g.atoms.len() != cfg.num_atoms || g.signals.len() != y.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} atom groups and {} signal groups for {} atoms and {} signals",
                g.atoms.len(),
                g.signals.len(),
                cfg.num_atoms,
                y.ncols()
            )));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DimensionMismatch("signals contain non-finite entries".into()));
    }
    let mut atoms = match cfg.init {
        InitStrategy::FromSignals => init_from_signals(y, cfg)?,
        InitStrategy::Provided => {
            let d0 = d0.ok_or_else(|| Error::Config("provided init needs a dictionary".into()))?;
            if d0.n_atoms() != cfg.num_atoms || d0.n_features() != y.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "initial dictionary is {}x{}, expected {}x{}",
                    d0.n_features(),
                    d0.n_atoms(),
                    y.nrows(),
                    cfg.num_atoms
                )));
            }
            d0.matrix().clone()
        }
    };

    let mut history = Vec::with_capacity(cfg.iterations);
    let mut sweeps = Vec::with_capacity(cfg.iterations);
    let mut codes = SparseCodes { codes: DMatrix::zeros(cfg.num_atoms, y.ncols()), sparsity: cfg.sparsity };

    for _ in 0..cfg.iterations {
        let dict = Dictionary::new(atoms.clone())?;
        codes = batch_code(&dict, y, cfg.sparsity)?;
        let residual = residual_matrix(&atoms, &codes.codes, y);
        let before = residual.norm_squared();
        sweep(&mut atoms, &mut codes.codes, y, residual, groups);
        let dict = Dictionary::new(atoms.clone())?;
        let after = reconstruction_error(&dict, &codes, y)?;
        sweeps.push(SweepErrors { before, after });
        history.push(after);
    }

    Ok(KsvdOutput {
        dictionary: Dictionary::new(atoms)?,
        codes,
        error_history: history,
        sweeps,
    })
}

fn init_from_signals(y: &DMatrix<f64>, cfg: &KsvdConfig) -> Result<DMatrix<f64>> {
    if y.ncols() < cfg.num_atoms {
        return Err(Error::TooFewSignals { needed: cfg.num_atoms, got: y.ncols() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let picks = sample(&mut rng, y.ncols(), cfg.num_atoms);
    let mut m = DMatrix::zeros(y.nrows(), cfg.num_atoms);
    for (k, j) in picks.iter().enumerate() {
        m.set_column(k, &y.column(j));
    }
    Ok(normalize_columns(&m)?.0)
}

/// One pass of atom updates in ascending index order with code supports held
/// fixed. Dead atoms are replaced by the worst-reconstructed signal (of the
/// same group, when groups are given).
///
/// `residual` must hold `Y − DX` on entry; it is patched column-wise as atoms
/// change.
fn sweep(
    atoms: &mut DMatrix<f64>,
    codes: &mut DMatrix<f64>,
    y: &DMatrix<f64>,
    mut residual: DMatrix<f64>,
    groups: Option<ReplacementGroups<'_>>,
) {
    let mut taken: Vec<usize> = Vec::new();
    for k in 0..atoms.ncols() {
        let users: Vec<usize> = (0..codes.ncols()).filter(|&j| codes[(k, j)] != 0.0).collect();
        if users.is_empty() {
            let allowed = |j: usize| groups.map_or(true, |g| g.signals[j] == g.atoms[k]);
            if let Some(j) = worst_signal(&residual, y, &taken, allowed) {
                let col = y.column(j);
                let n = col.norm();
                atoms.set_column(k, &(col / n));
                taken.push(j);
            }
            continue;
        }
        let old = atoms.column(k).into_owned();
        let mut err = residual.select_columns(&users);
        for (c, &j) in users.iter().enumerate() {
            err.column_mut(c).axpy(codes[(k, j)], &old, 1.0);
        }
        let (atom, coefs) = rank_one(&err, &old);
        for (i, &j) in users.iter().enumerate() {
            let mut r = residual.column_mut(j);
            r.axpy(codes[(k, j)], &old, 1.0);
            r.axpy(-coefs[i], &atom, 1.0);
            codes[(k, j)] = coefs[i];
        }
        atoms.set_column(k, &atom);
    }
}

fn worst_signal(
    residual: &DMatrix<f64>,
    y: &DMatrix<f64>,
    taken: &[usize],
    allowed: impl Fn(usize) -> bool,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for j in 0..y.ncols() {
        if taken.contains(&j) || !allowed(j) || y.column(j).norm() < 1e-12 {
            continue;
        }
        let e = residual.column(j).norm_squared();
        if best.map_or(true, |(_, b)| e > b) {
            best = Some((j, e));
        }
    }
    best.map(|(j, _)| j)
}
