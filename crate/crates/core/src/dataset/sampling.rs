//! Popularity-weighted rejection sampling of knowledge triples.
//!
//! A triple whose subject has frequency proxy `f` is kept iff
//! `f > exp(8R - 6)` with `R ~ U(0, 1)`, i.e. with probability
//! `clamp((ln f + 6) / 8, 0, 1)`. Acceptance per relation stops at a cap.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{merge_duplicates, KnowledgeTriple, Relation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_PER_RELATION_CAP: usize = 2000;

/// Closed-form acceptance probability for frequency `f`.
pub fn inclusion_probability<F: Scalar>(f: F) -> F {
    if f <= F::zero() {
        return F::zero();
    }
    ((f.ln() + F::lit(6.0)) / F::lit(8.0))
        .max(F::zero())
        .min(F::one())
}

/// The acceptance test for one uniform draw `r` in `[0, 1)`.
pub fn is_included<F: Scalar>(f: F, r: F) -> bool {
    f > (F::lit(8.0) * r - F::lit(6.0)).exp()
}

/// Samples triples in input order.
///
/// Duplicate (subject, relation) pairs are merged into their first occurrence
/// before sampling. One uniform draw is consumed per merged triple, whether or
/// not its relation is already capped, so acceptance of a triple does not
/// depend on how many earlier triples were accepted.
pub fn sample_triples<I, T>(
    triples: I,
    mut term_frequency: T,
    per_relation_cap: usize,
    rng_seed: u64,
) -> Result<Vec<KnowledgeTriple>>
where
    I: IntoIterator<Item = KnowledgeTriple>,
    T: FnMut(&KnowledgeTriple) -> f64,
{
    if per_relation_cap == 0 {
        return Err(Error::Validation(
            "per-relation cap must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut accepted: HashMap<Relation, usize> = HashMap::new();
    let mut out = Vec::new();
    for triple in merge_duplicates(triples) {
        triple.validate()?;
        let f = term_frequency(&triple);
        if !(f >= 0.0) {
            return Err(Error::Validation(format!(
                "triple {} ({}): frequency must be a non-negative number, got {f}",
                triple.subj_id, triple.relation
            )));
        }
        let r: f64 = rng.gen();
        let count = accepted.entry(triple.relation.clone()).or_insert(0);
        if *count >= per_relation_cap {
            continue;
        }
        if is_included(f, r) {
            *count += 1;
            out.push(triple);
        }
    }
    Ok(out)
}
