//! Position, shape and appearance affinities between targets and detections.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::sparse::omp;
use crate::stksvd::{ClassId, StksvdModel};

/// Reconstruction residuals are floored here before inversion.
pub const RESIDUAL_FLOOR: f64 = 1e-9;

/// Unnormalized Gaussian kernel on the displacement between the predicted
/// target center and the detection center.
pub fn position_similarity(predicted: Point, detected: Point, sigma_x: f64, sigma_y: f64) -> f64 {
    let dx = predicted.x - detected.x;
    let dy = predicted.y - detected.y;
    (-dx * dx / (2.0 * sigma_x * sigma_x)).exp() * (-dy * dy / (2.0 * sigma_y * sigma_y)).exp()
}

/// `exp(−(|h₁−h₂|/(h₁+h₂) + |w₁−w₂|/(w₁+w₂)))` for `(width, height)` pairs.
pub fn shape_similarity(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    let ((wa, ha), (wb, hb)) = (a, b);
    if !(wa > 0.0 && ha > 0.0 && wb > 0.0 && hb > 0.0) {
        return Err(Error::NonPositiveDims);
    }
    Ok((-((ha - hb).abs() / (ha + hb) + (wa - wb).abs() / (wa + wb))).exp())
}

pub fn overall_similarity(shape: f64, appearance: f64, position: f64) -> f64 {
    shape * appearance * position
}

/// Softmax of `scores / temperature`.
pub fn softmax(scores: &DVector<f64>, temperature: f64) -> DVector<f64> {
    let max = scores.max();
    let mut e = scores.map(|s| ((s - max) / temperature).exp());
    let z = e.sum();
    e /= z;
    e
}

/// Stage-1 appearance: classifier scores of the detection's sparse code,
/// squashed into `(0, 1]` per class. Entry `i` belongs to `model.classes[i]`.
///
/// Scores are divided by their largest magnitude before the softmax, so a
/// correct but weakly weighted code (small `W x`) is not flattened towards
/// uniform.
pub fn appearance_stage1(
    model: &StksvdModel,
    feature: &DVector<f64>,
    sparsity: usize,
    temperature: f64,
) -> Result<DVector<f64>> {
    if model.n_classes() == 0 {
        return Err(Error::DimensionMismatch("model has no classes".into()));
    }
    let (_, raw) = model.classify(feature, sparsity)?;
    let scale = raw.amax();
    let raw = if scale > 0.0 { raw / scale } else { raw };
    Ok(softmax(&raw, temperature))
}

/// Stage-2 appearance: the query is coded over the atoms of the
/// low-confidence classes only, then for each class the code is restricted
/// to that class's atoms and the inverse squared residual is returned.
pub fn appearance_stage2(
    model: &StksvdModel,
    low_classes: &[ClassId],
    query: &DVector<f64>,
    sparsity: usize,
) -> Result<Vec<f64>> {
    let (sub, _) = model
        .dictionary
        .restrict(|c| low_classes.contains(&c))
        .ok_or(Error::EmptyLowDictionary)?;
    let atoms = sub.atoms();
    let t = sparsity.min(atoms.max_sparsity()).max(1);
    let code = omp(atoms, query, t)?;
    Ok(low_classes
        .iter()
        .map(|&class| {
            let masked = DVector::from_fn(code.len(), |k, _| {
                if sub.meta()[k].class == class {
                    code[k]
                } else {
                    0.0
                }
            });
            let r = (query - atoms.matrix() * masked).norm_squared();
            1.0 / r.max(RESIDUAL_FLOOR)
        })
        .collect())
}
