use nalgebra::DMatrix;

use super::{
    build_discriminative_code, build_label_matrices, build_spatiotemporal_matrix,
    init_classifier, init_transform, ClassId, ClassIndex, LabeledDictionary, SampleMeta,
    StksvdConfig, StksvdModel,
};
use crate::error::{Error, Result};
use crate::ksvd::{ksvd_train_grouped, InitStrategy, KsvdConfig, ReplacementGroups};
use crate::sparse::{batch_code, normalize_columns, Dictionary, SparseCodes};

/// `[Y; √κ Q; √λ H]`
pub fn stack_signals(
    y: &DMatrix<f64>,
    q: &DMatrix<f64>,
    h: &DMatrix<f64>,
    kappa: f64,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    stack3(y, q, h, kappa.sqrt(), lambda.sqrt())
}

/// `[D; √κ A; √λ W]`
pub fn stack_dictionary(
    d: &DMatrix<f64>,
    a: &DMatrix<f64>,
    w: &DMatrix<f64>,
    kappa: f64,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    stack3(d, a, w, kappa.sqrt(), lambda.sqrt())
}

fn stack3(
    top: &DMatrix<f64>,
    mid: &DMatrix<f64>,
    bottom: &DMatrix<f64>,
    mid_scale: f64,
    bottom_scale: f64,
) -> Result<DMatrix<f64>> {
    let cols = top.ncols();
    if mid.ncols() != cols || bottom.ncols() != cols {
        return Err(Error::DimensionMismatch(format!(
            "blocks have {}, {} and {} columns",
            cols,
            mid.ncols(),
            bottom.ncols()
        )));
    }
    let (r0, r1, r2) = (top.nrows(), mid.nrows(), bottom.nrows());
    let mut out = DMatrix::zeros(r0 + r1 + r2, cols);
    out.rows_mut(0, r0).copy_from(top);
    out.rows_mut(r0, r1).copy_from(&(mid * mid_scale));
    out.rows_mut(r0 + r1, r2).copy_from(&(bottom * bottom_scale));
    Ok(out)
}

/// Unstacked model parameters. `y_block_norms[k]` is the norm of the
/// feature block of stacked atom `k` before it was rescaled to unit length.
#[derive(Debug, Clone)]
pub struct Destacked {
    pub dictionary: Dictionary,
    pub transform: DMatrix<f64>,
    pub classifier: DMatrix<f64>,
    pub y_block_norms: Vec<f64>,
}

/// Splits a trained stacked dictionary back into `D`, `A` and `W`.
///
/// Each feature block is rescaled to unit norm and the transform and
/// classifier columns are divided by the same factor (and by `√κ`, `√λ`) so
/// that `W·x` stays calibrated for codes computed against the unit atoms.
/// Atoms whose feature block vanished keep the matching `fallback` atom and
/// get zero transform and classifier columns.
pub fn destack(
    stacked: &DMatrix<f64>,
    n_features: usize,
    n_classes: usize,
    kappa: f64,
    lambda: f64,
    fallback: &Dictionary,
) -> Result<Destacked> {
    let k = stacked.ncols();
    if stacked.nrows() != n_features + k + n_classes || fallback.n_atoms() != k {
        return Err(Error::DimensionMismatch(format!(
            "stacked dictionary is {}x{}, expected {}x{}",
            stacked.nrows(),
            k,
            n_features + k + n_classes,
            k
        )));
    }
    let (sk, sl) = (kappa.sqrt(), lambda.sqrt());
    let mut d = DMatrix::zeros(n_features, k);
    let mut a = DMatrix::zeros(k, k);
    let mut w = DMatrix::zeros(n_classes, k);
    let mut norms = Vec::with_capacity(k);
    for j in 0..k {
        let col = stacked.column(j);
        let feat = col.rows(0, n_features);
        let n = feat.norm();
        if n < 1e-12 {
            d.set_column(j, &fallback.matrix().column(j));
            norms.push(0.0);
            continue;
        }
        d.set_column(j, &(feat / n));
        a.set_column(j, &(col.rows(n_features, k) / (sk * n)));
        w.set_column(j, &(col.rows(n_features + k, n_classes) / (sl * n)));
        norms.push(n);
    }
    let (d, _) = normalize_columns(&d)?;
    Ok(Destacked {
        dictionary: Dictionary::new(d)?,
        transform: a,
        classifier: w,
        y_block_norms: norms,
    })
}

/// Ridge initialization of `W` and `A`. The ridge fit says nothing about
/// atoms no initial code uses, so those start as if they coded their own
/// sample: their class indicator and their own discriminative code.
fn initial_parameters(
    x0: &SparseCodes,
    h: &DMatrix<f64>,
    q: &DMatrix<f64>,
    d0: &LabeledDictionary,
    index: &ClassIndex,
    cfg: &StksvdConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut w0 = init_classifier(x0, h, cfg.xi)?;
    let mut a0 = init_transform(x0, q, cfg.xi)?;
    let unused: Vec<usize> = (0..x0.codes.nrows()).filter(|&j| x0.codes.row(j).iter().all(|v| *v == 0.0)).collect();
    if unused.is_empty() {
        return Ok((w0, a0));
    }
    let atom_labels = d0.labels();
    let own = build_label_matrices(&atom_labels, &atom_labels, index)?;
    let own_meta: Vec<SampleMeta> = d0.meta().iter().map(|m| m.sample()).collect();
    let own_q = build_discriminative_code(&own.q1, &build_spatiotemporal_matrix(d0.meta(), &own_meta, cfg.sigma_s)?)?;
    for j in unused {
        w0.set_column(j, &own.h.column(j));
        a0.set_column(j, &own_q.column(j));
    }
    Ok((w0, a0))
}

/// Jointly learns dictionary, classifier and code transform from labeled
/// samples, warm-started from `d0`.
pub fn stksvd_train(
    y: &DMatrix<f64>,
    signal_labels: &[ClassId],
    signal_meta: &[SampleMeta],
    d0: &LabeledDictionary,
    cfg: &StksvdConfig,
) -> Result<StksvdModel> {
    cfg.validate()?;
    if signal_labels.len() != y.ncols() || signal_meta.len() != y.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} signals, {} labels, {} metadata entries",
            y.ncols(),
            signal_labels.len(),
            signal_meta.len()
        )));
    }
    let atoms = d0.atoms();
    if y.nrows() != atoms.n_features() {
        return Err(Error::DimensionMismatch(format!(
            "signals have {} features, atoms have {}",
            y.nrows(),
            atoms.n_features()
        )));
    }
    let index = ClassIndex::new(d0.labels());
    for &label in signal_labels {
        index.row(label).map_err(|_| Error::LabelCoverage(label))?;
    }

    let labels = build_label_matrices(signal_labels, &d0.labels(), &index)?;
    let qst = build_spatiotemporal_matrix(d0.meta(), signal_meta, cfg.sigma_s)?;
    let q = build_discriminative_code(&labels.q1, &qst)?;

    let k = atoms.n_atoms();
    let sparsity = cfg.sparsity.min(atoms.max_sparsity());
    let x0 = batch_code(atoms, y, sparsity)?;
    let (w0, a0) = initial_parameters(&x0, &labels.h, &q, d0, &index, cfg)?;
    let atom_labels = d0.labels();

    let y_stacked = stack_signals(y, &q, &labels.h, cfg.kappa, cfg.lambda)?;
    let d_stacked = stack_dictionary(atoms.matrix(), &a0, &w0, cfg.kappa, cfg.lambda)?;
    let d_stacked = Dictionary::from_unnormalized(&d_stacked)?;

    let ksvd_cfg = KsvdConfig {
        num_atoms: k,
        sparsity,
        iterations: cfg.iterations,
        init: InitStrategy::Provided,
        seed: cfg.seed,
    };
    // an unused atom is re-seeded from its own class so its label stays true
    let groups = ReplacementGroups { atoms: &atom_labels, signals: signal_labels };
    let trained = ksvd_train_grouped(&y_stacked, &ksvd_cfg, Some(&d_stacked), Some(groups))?;
    let parts = destack(
        trained.dictionary.matrix(),
        atoms.n_features(),
        index.len(),
        cfg.kappa,
        cfg.lambda,
        atoms,
    )?;

    Ok(StksvdModel {
        dictionary: LabeledDictionary::new(parts.dictionary, d0.meta().to_vec())?,
        classes: index.classes().to_vec(),
        classifier: parts.classifier,
        transform: parts.transform,
    })
}
