//! Spatiotemporal discriminative K-SVD.
//!
//! The learner jointly fits a dictionary `D`, a linear classifier `W` and a
//! code transform `A` by minimizing
//!
//! ```text
//! ‖Y − DX‖² + κ‖Q − AX‖² + λ‖H − WX‖²   s.t. ‖xᵢ‖₀ ≤ T
//! ```
//!
//! where `H` holds one-hot class labels and `Q` is the label-consistency mask
//! weighted by a spatiotemporal kernel between atoms and training samples.
//! The three terms are folded into a single K-SVD problem by stacking
//! `[Y; √κQ; √λH]` against `[D; √κA; √λW]`.

mod matrices;
mod select;
mod train;

pub use matrices::{
    build_discriminative_code, build_label_matrices, build_spatiotemporal_matrix,
    init_classifier, init_transform, ClassIndex, LabelMatrices,
};
pub use select::select_atoms;
pub use train::{destack, stack_dictionary, stack_signals, stksvd_train, Destacked};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::sparse::{omp, Dictionary};

/// Identifier of a target class in the dictionary.
pub type ClassId = u64;

/// Where and when a training sample was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMeta {
    pub time: u32,
    pub position: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomMeta {
    pub class: ClassId,
    pub time: u32,
    pub position: Point,
}

impl AtomMeta {
    pub fn sample(&self) -> SampleMeta {
        SampleMeta { time: self.time, position: self.position }
    }
}

/// A feature vector together with its label and spatiotemporal origin.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledAtom {
    pub feature: DVector<f64>,
    pub meta: AtomMeta,
}

/// Unit-norm atoms, each tagged with class, time and position.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDictionary {
    atoms: Dictionary,
    meta: Vec<AtomMeta>,
}

impl LabeledDictionary {
    pub fn new(atoms: Dictionary, meta: Vec<AtomMeta>) -> Result<Self> {
        if meta.len() != atoms.n_atoms() {
            return Err(Error::DimensionMismatch(format!(
                "{} atoms but {} metadata entries",
                atoms.n_atoms(),
                meta.len()
            )));
        }
        Ok(Self { atoms, meta })
    }

    /// Builds a dictionary from labeled samples, normalizing each feature.
    pub fn from_atoms(atoms: &[LabeledAtom]) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(Error::DimensionMismatch("no atoms".into()));
        };
        let n = first.feature.len();
        let mut m = DMatrix::zeros(n, atoms.len());
        for (k, a) in atoms.iter().enumerate() {
            if a.feature.len() != n {
                return Err(Error::DimensionMismatch("atoms differ in length".into()));
            }
            m.set_column(k, &a.feature);
        }
        Self::new(Dictionary::from_unnormalized(&m)?, atoms.iter().map(|a| a.meta).collect())
    }

    pub fn atoms(&self) -> &Dictionary {
        &self.atoms
    }

    pub fn meta(&self) -> &[AtomMeta] {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn labels(&self) -> Vec<ClassId> {
        self.meta.iter().map(|m| m.class).collect()
    }

    /// Atoms of `class` as owned labeled samples.
    pub fn atoms_of(&self, class: ClassId) -> Vec<LabeledAtom> {
        self.meta
            .iter()
            .enumerate()
            .filter(|(_, m)| m.class == class)
            .map(|(k, m)| LabeledAtom { feature: self.atoms.matrix().column(k).into_owned(), meta: *m })
            .collect()
    }

    /// Sub-dictionary restricted to atoms whose class satisfies `keep`, along
    /// with the original indices.
    pub fn restrict(&self, keep: impl Fn(ClassId) -> bool) -> Option<(LabeledDictionary, Vec<usize>)> {
        let idx: Vec<usize> = (0..self.len()).filter(|&k| keep(self.meta[k].class)).collect();
        if idx.is_empty() {
            return None;
        }
        let m = self.atoms.matrix().select_columns(&idx);
        let meta = idx.iter().map(|&k| self.meta[k]).collect();
        let atoms = Dictionary::new(m).ok()?;
        Some((LabeledDictionary { atoms, meta }, idx))
    }

    pub fn relabel(&mut self, from: ClassId, to: ClassId) {
        for m in self.meta.iter_mut().filter(|m| m.class == from) {
            m.class = to;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StksvdConfig {
    /// Weight of the discriminative sparse-code term.
    pub kappa: f64,
    /// Weight of the classification term.
    pub lambda: f64,
    /// Ridge regularization for the classifier and transform initialization.
    pub xi: f64,
    /// Scale of the spatiotemporal kernel (frames and pixels combined).
    pub sigma_s: f64,
    pub sparsity: usize,
    pub iterations: usize,
    pub atoms_per_target: usize,
    /// Number of most recent frames whose samples compete for atom slots.
    pub recent_window: u32,
    /// Maximum number of training samples retained per target.
    pub buffer_cap: usize,
    pub seed: u64,
}

impl Default for StksvdConfig {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            lambda: 4.0,
            xi: 1e-4,
            sigma_s: 10.0,
            sparsity: 5,
            iterations: 10,
            atoms_per_target: 30,
            recent_window: 5,
            buffer_cap: 200,
            seed: 0,
        }
    }
}

impl StksvdConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("kappa", self.kappa), ("lambda", self.lambda), ("xi", self.xi), ("sigma_s", self.sigma_s)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("stksvd.{name} must be positive, got {v}")));
            }
        }
        if self.atoms_per_target == 0 || self.recent_window == 0 || self.sparsity == 0 || self.iterations == 0 || self.buffer_cap == 0 {
            return Err(Error::Config(
                "stksvd sparsity, iterations, atoms_per_target, recent_window and buffer_cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Learned dictionary, classifier (`c × K`) and code transform (`K × K`).
/// Row `i` of the classifier scores `classes[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StksvdModel {
    pub dictionary: LabeledDictionary,
    pub classes: Vec<ClassId>,
    pub classifier: DMatrix<f64>,
    pub transform: DMatrix<f64>,
}

impl StksvdModel {
    pub fn class_row(&self, class: ClassId) -> Option<usize> {
        self.classes.binary_search(&class).ok()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Sparse code of `y` over the dictionary and the raw classifier scores
    /// `W x`.
    pub fn classify(&self, y: &DVector<f64>, sparsity: usize) -> Result<(DVector<f64>, DVector<f64>)> {
        let t = sparsity.min(self.dictionary.atoms().max_sparsity()).max(1);
        let x = omp(self.dictionary.atoms(), y, t)?;
        let scores = &self.classifier * &x;
        Ok((x, scores))
    }

    pub fn predict(&self, y: &DVector<f64>, sparsity: usize) -> Result<ClassId> {
        let (_, scores) = self.classify(y, sparsity)?;
        Ok(self.classes[scores.argmax().0])
    }
}
