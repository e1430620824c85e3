//! Offline, seeded backend built on [`catalog`](super::catalog).

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::catalog::{HopInput, NameGen, Output, Relation};
use super::{stage_rng, GeneratedDocs, GenerationBackend, PipelineError, ScenarioSeed};
use crate::model::{ScenarioKind, SubQuestion};

/// Splits `n` sub-questions into dependency chains for `scenario`.
///
/// Parallel multi-hop draws 2 or 3 chains of length 2..=4 when `n` allows
/// it; `n == 3` becomes one chain of two plus an independent question.
pub fn decompose(scenario: ScenarioKind, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match scenario {
        ScenarioKind::SingleHop => vec![1],
        ScenarioKind::ParallelSingleHop => vec![1; n],
        ScenarioKind::MultiHop => vec![n],
        ScenarioKind::ParallelMultiHop => {
            if n == 3 {
                return vec![2, 1];
            }
            let feasible: Vec<usize> = [2usize, 3]
                .into_iter()
                .filter(|c| 2 * c <= n && n <= 4 * c)
                .collect();
            let chains = match feasible.choose(rng) {
                Some(&c) => c,
                None => 3,
            };
            let mut lengths = vec![2usize; chains];
            let mut left = n - 2 * chains;
            while left > 0 {
                let open: Vec<usize> = (0..chains).filter(|&i| lengths[i] < 4).collect();
                let i = match open.choose(rng) {
                    Some(&i) => i,
                    None => rng.random_range(0..chains),
                };
                lengths[i] += 1;
                left -= 1;
            }
            lengths
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticBackend;

fn choose_relation(rng: &mut ChaCha8Rng, pool: Vec<Relation>) -> Relation {
    *pool.choose(rng).expect("catalog always offers a continuation")
}

impl GenerationBackend for SyntheticBackend {
    fn generate_documents(&mut self, seed: &ScenarioSeed) -> Result<GeneratedDocs, PipelineError> {
        seed.validate()?;
        let mut rng = stage_rng(seed.rng_seed, seed.scenario.as_str());
        let template = match &seed.templates {
            None => None,
            Some(id) => Some(
                Relation::from_id(id)
                    .ok_or_else(|| PipelineError::InvalidSeed(format!("unknown template '{id}'")))?,
            ),
        };
        let chains = decompose(seed.scenario, seed.n_subq, &mut rng);
        if let Some(t) = template {
            if chains.iter().any(|&len| len > 1) && !matches!(t.output(), Output::Entity(_)) {
                return Err(PipelineError::InvalidSeed(format!(
                    "template '{}' cannot start a multi-hop chain",
                    t.id()
                )));
            }
        }

        let mut names = NameGen::new();
        let mut sub_questions = Vec::new();
        let mut documents = Vec::new();
        let mut chain_questions = Vec::new();
        let mut sinks = Vec::new();

        for len in chains {
            let mut prev: Option<(String, String, String, Relation)> = None;
            for step in 0..len {
                let relation = match (&prev, template) {
                    (None, Some(t)) => t,
                    (None, None) if len == 1 => choose_relation(&mut rng, Relation::ALL.to_vec()),
                    (None, None) => choose_relation(
                        &mut rng,
                        Relation::ALL
                            .into_iter()
                            .filter(|r| r.input().is_some() && matches!(r.output(), Output::Entity(_)))
                            .collect(),
                    ),
                    (Some((.., last)), _) => {
                        let Output::Entity(kind) = last.output() else {
                            unreachable!("chains only continue from entities")
                        };
                        let pool: Vec<Relation> = Relation::consuming(kind)
                            .filter(|r| step + 1 == len || matches!(r.output(), Output::Entity(_)))
                            .collect();
                        choose_relation(&mut rng, pool)
                    }
                };
                let input = match (&prev, relation.input()) {
                    (Some((id, answer, phrase, _)), _) => HopInput::Prior {
                        id: id.clone(),
                        answer: answer.clone(),
                        phrase: phrase.clone(),
                    },
                    (None, Some(kind)) => HopInput::Literal(names.entity(&mut rng, kind)),
                    (None, None) => HopInput::Source,
                };
                let hop = relation.hop(&mut rng, &mut names, input);
                let id = format!("q{}", sub_questions.len() + 1);
                sub_questions.push(SubQuestion {
                    id: id.clone(),
                    text: hop.text.clone(),
                    answer: hop.answer.clone(),
                    depends_on: prev.iter().map(|(p, ..)| p.clone()).collect(),
                    tool_name: relation.tool_name().to_string(),
                    canonical_bindings: hop.bindings.into_iter().collect::<BTreeMap<_, _>>(),
                });
                documents.push(hop.document);
                if step + 1 == len {
                    chain_questions.push(hop.text);
                    sinks.push(hop.answer);
                } else {
                    prev = Some((id, hop.answer, hop.phrase, relation));
                }
            }
        }

        let question = if chain_questions.len() == 1 {
            chain_questions.remove(0)
        } else {
            let parts: Vec<String> = chain_questions
                .iter()
                .enumerate()
                .map(|(i, q)| format!("({}) {q}", i + 1))
                .collect();
            format!("Answer each of the following. {}", parts.join(" "))
        };
        Ok(GeneratedDocs {
            question,
            final_answer: sinks.join("; "),
            sub_questions,
            documents,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn parallel_multi_hop_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(decompose(ScenarioKind::ParallelMultiHop, 3, &mut rng), vec![2, 1]);
        for n in 4..=20 {
            let parts = decompose(ScenarioKind::ParallelMultiHop, n, &mut rng);
            assert_eq!(parts.iter().sum::<usize>(), n);
            assert!(parts.len() >= 2 && parts.iter().all(|&l| l >= 2));
            if n <= 12 {
                assert!(parts.iter().all(|&l| l <= 4));
            }
        }
    }

    #[test]
    fn template_fixes_first_relation() {
        let seed = ScenarioSeed::new(ScenarioKind::ParallelSingleHop, 3, 1).with_template("city_population");
        let out = SyntheticBackend.generate_documents(&seed).unwrap();
        assert!(out.sub_questions.iter().all(|q| q.tool_name == "population_statistics"));
        let bad = ScenarioSeed::new(ScenarioKind::MultiHop, 3, 1).with_template("city_population");
        assert!(matches!(SyntheticBackend.generate_documents(&bad), Err(PipelineError::InvalidSeed(_))));
    }

    #[test]
    fn chain_answers_feed_forward() {
        let seed = ScenarioSeed::new(ScenarioKind::MultiHop, 5, 11);
        let out = SyntheticBackend.generate_documents(&seed).unwrap();
        for pair in out.sub_questions.windows(2) {
            assert_eq!(pair[1].depends_on, vec![pair[0].id.clone()]);
            assert!(pair[1].referenced_ids().contains(&pair[0].id.as_str()));
        }
        assert_eq!(out.final_answer, out.sub_questions.last().unwrap().answer);
    }
}
