use std::cmp::Ordering;

use super::{ClassId, LabeledAtom};

const TIE_TOL: f64 = 1e-12;

/// Chooses up to `budget` atoms for `target` from its current atoms and its
/// recent samples.
///
/// The pool is put in a canonical order (time, position, feature values) so
/// the result does not depend on input order. While over budget, the member
/// most similar (cosine) to some other member is evicted; ties evict the
/// older sample, then the later one in canonical order. The kept atoms are
/// returned in canonical order, relabeled to `target`.
pub fn select_atoms(
    target: ClassId,
    existing: &[LabeledAtom],
    recent: &[LabeledAtom],
    budget: usize,
) -> Vec<LabeledAtom> {
    let mut pool: Vec<LabeledAtom> = existing.iter().chain(recent).cloned().collect();
    for a in &mut pool {
        a.meta.class = target;
    }
    pool.sort_by(canonical_order);

    if pool.len() > budget {
        let n = pool.len();
        let norms: Vec<f64> = pool.iter().map(|a| a.feature.norm()).collect();
        let mut sim = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let denom = norms[i] * norms[j];
                let c = if denom > 0.0 { pool[i].feature.dot(&pool[j].feature) / denom } else { 0.0 };
                sim[i][j] = c;
                sim[j][i] = c;
            }
        }
        let mut alive = vec![true; n];
        let mut remaining = n;
        while remaining > budget {
            let mut victim: Option<(usize, f64)> = None;
            for i in (0..n).filter(|&i| alive[i]) {
                let redundancy = (0..n)
                    .filter(|&j| j != i && alive[j])
                    .map(|j| sim[i][j])
                    .fold(f64::NEG_INFINITY, f64::max);
                victim = match victim {
                    None => Some((i, redundancy)),
                    Some((_, r)) if redundancy > r + TIE_TOL => Some((i, redundancy)),
                    Some((v, r)) if (redundancy - r).abs() <= TIE_TOL => {
                        // older first, then the later canonical index
                        let (ti, tv) = (pool[i].meta.time, pool[v].meta.time);
                        if ti < tv || (ti == tv && i > v) {
                            Some((i, redundancy))
                        } else {
                            Some((v, r))
                        }
                    }
                    keep => keep,
                };
            }
            let (v, _) = victim.expect("pool is non-empty while over budget");
            alive[v] = false;
            remaining -= 1;
        }
        pool = pool.into_iter().zip(alive).filter(|(_, a)| *a).map(|(p, _)| p).collect();
    }
    pool
}

fn canonical_order(a: &LabeledAtom, b: &LabeledAtom) -> Ordering {
    a.meta
        .time
        .cmp(&b.meta.time)
        .then(a.meta.position.x.total_cmp(&b.meta.position.x))
        .then(a.meta.position.y.total_cmp(&b.meta.position.y))
        .then_with(|| {
            a.feature
                .iter()
                .zip(b.feature.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(a.feature.len().cmp(&b.feature.len()))
        })
}
