//! Few-shot demonstration sampling.
//!
//! With exactly sixteen relation types the pool is stratified: one random
//! pair from each relation other than the target's. Otherwise it is a
//! simple random sample.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::dataset::{QAExample, Relation};
use crate::error::{Error, Result};
use crate::rng::rng_for;

pub const STRATIFIED_RELATION_COUNT: usize = 16;

pub struct FewShotPool<'a> {
    examples: &'a [QAExample],
    by_relation: BTreeMap<&'a Relation, Vec<usize>>,
}

impl<'a> FewShotPool<'a> {
    pub fn new(examples: &'a [QAExample]) -> Self {
        let mut by_relation: BTreeMap<&Relation, Vec<usize>> = BTreeMap::new();
        for (i, ex) in examples.iter().enumerate() {
            by_relation.entry(&ex.relation).or_default().push(i);
        }
        Self {
            examples,
            by_relation,
        }
    }

    fn pair(&self, i: usize) -> (String, String) {
        let ex = &self.examples[i];
        (ex.question.clone(), ex.answers[0].clone())
    }

    /// Demonstrations for `target`; never includes the target itself.
    pub fn sample(
        &self,
        target: &QAExample,
        shots: usize,
        seed: u64,
    ) -> Result<Vec<(String, String)>> {
        if shots == 0 {
            return Ok(Vec::new());
        }
        let mut rng = rng_for(seed, &["fewshot", &target.id]);
        let mut relations: Vec<&Relation> = self.by_relation.keys().copied().collect();
        if !relations.contains(&&target.relation) {
            relations.push(&target.relation);
        }
        if relations.len() == STRATIFIED_RELATION_COUNT {
            let others: Vec<&Relation> = relations
                .into_iter()
                .filter(|r| **r != target.relation)
                .collect();
            if shots > others.len() {
                return Err(Error::Insufficient(format!(
                    "stratified sampling yields at most {} demonstrations, {shots} requested",
                    others.len()
                )));
            }
            let mut pairs = Vec::with_capacity(others.len());
            for rel in others {
                let candidates: Vec<usize> = self.by_relation[rel]
                    .iter()
                    .copied()
                    .filter(|&i| self.examples[i].id != target.id)
                    .collect();
                let &pick = candidates.choose(&mut rng).ok_or_else(|| {
                    Error::Insufficient(format!("relation '{rel}' has no demonstration candidates"))
                })?;
                pairs.push(self.pair(pick));
            }
            pairs.shuffle(&mut rng);
            pairs.truncate(shots);
            Ok(pairs)
        } else {
            let candidates: Vec<usize> = (0..self.examples.len())
                .filter(|&i| self.examples[i].id != target.id)
                .collect();
            if candidates.len() < shots {
                return Err(Error::Insufficient(format!(
                    "{shots} demonstrations requested but only {} candidates besides {}",
                    candidates.len(),
                    target.id
                )));
            }
            Ok(candidates
                .choose_multiple(&mut rng, shots)
                .map(|&i| self.pair(i))
                .collect())
        }
    }
}

/// One-shot convenience wrapper around [`FewShotPool`].
pub fn build_fewshot_pool(
    dataset: &[QAExample],
    target: &QAExample,
    shots: usize,
    rng_seed: u64,
) -> Result<Vec<(String, String)>> {
    FewShotPool::new(dataset).sample(target, shots, rng_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: usize, rel: Relation) -> QAExample {
        QAExample {
            id: format!("q{id}"),
            question: format!("question {id} about {rel}?"),
            answers: vec![format!("a{id}")],
            subj_label: "s".into(),
            subj_id: "s".into(),
            relation: rel,
            popularity: Some(1),
        }
    }

    fn dataset(relations: usize, per: usize) -> Vec<QAExample> {
        (0..relations * per)
            .map(|i| {
                let r = i % relations;
                let rel = if r < 16 {
                    Relation::BUILTIN[r].clone()
                } else {
                    Relation::Custom(format!("rel{r}"))
                };
                ex(i, rel)
            })
            .collect()
    }

    fn relation_of<'a>(data: &'a [QAExample], q: &str) -> &'a Relation {
        &data.iter().find(|e| e.question == q).unwrap().relation
    }

    #[test]
    fn stratified_for_sixteen_relations() {
        let data = dataset(16, 4);
        let target = data
            .iter()
            .find(|e| e.relation == Relation::Director)
            .unwrap()
            .clone();
        let rest: Vec<_> = data.iter().filter(|e| e.id != target.id).cloned().collect();
        let pairs = build_fewshot_pool(&rest, &target, 15, 3).unwrap();
        assert_eq!(pairs.len(), 15);
        let mut rels: Vec<&Relation> = pairs.iter().map(|(q, _)| relation_of(&data, q)).collect();
        assert!(rels.iter().all(|r| **r != Relation::Director));
        rels.sort();
        rels.dedup();
        assert_eq!(rels.len(), 15);
        assert_eq!(pairs, build_fewshot_pool(&rest, &target, 15, 3).unwrap());
    }

    #[test]
    fn zero_shots() {
        let data = dataset(16, 2);
        assert!(build_fewshot_pool(&data[1..], &data[0], 0, 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn simple_random_for_other_counts() {
        let data = dataset(20, 3);
        let target = data[0].clone();
        let pairs = build_fewshot_pool(&data[1..], &target, 15, 9).unwrap();
        assert_eq!(pairs.len(), 15);
        assert!(pairs.iter().all(|(q, _)| q != &target.question));
    }

    #[test]
    fn insufficient_examples() {
        let data = dataset(3, 2);
        assert!(matches!(
            build_fewshot_pool(&data[1..], &data[0], 15, 1),
            Err(Error::Insufficient(_))
        ));
        let data = dataset(16, 2);
        assert!(matches!(
            build_fewshot_pool(&data[1..], &data[0], 16, 1),
            Err(Error::Insufficient(_))
        ));
    }
}
