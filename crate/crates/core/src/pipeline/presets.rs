//! Generator presets whose test splits reproduce the published per-scenario
//! sub-question and toolset averages.

use rand::Rng;

use super::{stage_rng, ScalingConfig, ScenarioSeed};
use crate::model::ScenarioKind;

/// Published test-split averages: (sub-questions, tools).
pub fn table_targets(scenario: ScenarioKind) -> (f64, f64) {
    match scenario {
        ScenarioKind::SingleHop => (1.00, 7.96),
        ScenarioKind::ParallelSingleHop => (2.02, 7.48),
        ScenarioKind::MultiHop => (5.72, 10.34),
        ScenarioKind::ParallelMultiHop => (7.66, 11.26),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub scenario: ScenarioKind,
    pub distractors: usize,
    pub parameter_expansion: usize,
    pub type_generalization: f64,
}

impl Preset {
    pub fn for_scenario(scenario: ScenarioKind) -> Self {
        let distractors = match scenario {
            ScenarioKind::SingleHop => 7,
            ScenarioKind::ParallelSingleHop => 6,
            ScenarioKind::MultiHop => 6,
            ScenarioKind::ParallelMultiHop => 6,
        };
        Preset {
            scenario,
            distractors,
            parameter_expansion: 2,
            type_generalization: 0.1,
        }
    }

    /// Draws the sub-question count for split item `index`.
    ///
    /// Parallel single-hop is two questions with a 1-in-50 chance of three;
    /// multi-hop is uniform on 4..=7; parallel multi-hop sums 2 or 3 chain
    /// lengths drawn uniformly from 2..=4.
    pub fn sample_n(&self, rng: &mut impl Rng) -> usize {
        match self.scenario {
            ScenarioKind::SingleHop => 1,
            ScenarioKind::ParallelSingleHop => {
                if rng.random_range(0..50) == 0 {
                    3
                } else {
                    2
                }
            }
            ScenarioKind::MultiHop => rng.random_range(4..=7),
            ScenarioKind::ParallelMultiHop => {
                let chains = rng.random_range(2..=3);
                (0..chains).map(|_| rng.random_range(2..=4)).sum()
            }
        }
    }

    pub fn scaling(&self, rng_seed: u64) -> ScalingConfig {
        ScalingConfig {
            functional_generalization: false,
            parameter_expansion: self.parameter_expansion,
            type_generalization: self.type_generalization,
            toolset_extension: self.distractors,
            rng_seed,
        }
    }
}

/// `count` seeds and configs for one scenario, reproducible from `base_seed`.
pub fn test_split(scenario: ScenarioKind, count: usize, base_seed: u64) -> Vec<(ScenarioSeed, ScalingConfig)> {
    let preset = Preset::for_scenario(scenario);
    let mut rng = stage_rng(base_seed, scenario.as_str());
    (0..count)
        .map(|_| {
            let n = preset.sample_n(&mut rng);
            let seed: u64 = rng.random();
            (ScenarioSeed::new(scenario, n, seed), preset.scaling(seed))
        })
        .collect()
}

/// The seed and scaling config the preset assigns to a single `seed`.
pub fn preset_seed(scenario: ScenarioKind, seed: u64) -> (ScenarioSeed, ScalingConfig) {
    let preset = Preset::for_scenario(scenario);
    let mut rng = stage_rng(seed, "preset");
    let n = preset.sample_n(&mut rng);
    (ScenarioSeed::new(scenario, n, seed), preset.scaling(seed))
}
