//! Monte Carlo subset selection that balances clusters, content labels and
//! the sampled/generated split.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Origin, PipelineError, PromptRecord};
use crate::evidence::ContentCategory;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceResult {
    pub ids: Vec<String>,
    pub indices: Vec<usize>,
    pub deviation: f64,
    /// Trial index that produced the winning subset.
    pub trial: usize,
}

struct Targets {
    clusters: Vec<usize>,
}

impl Targets {
    fn from_pool(pool: &[PromptRecord]) -> Result<Self, PipelineError> {
        let mut clusters = Vec::new();
        for r in pool {
            let Some(c) = r.cluster_id else {
                return Err(PipelineError::InvalidInput(format!("prompt {} has no cluster id", r.id)));
            };
            if r.content_labels.is_empty() {
                return Err(PipelineError::InvalidInput(format!("prompt {} has no content labels", r.id)));
            }
            clusters.push(c);
        }
        clusters.sort_unstable();
        clusters.dedup();
        Ok(Self { clusters })
    }

    fn deviation(&self, subset: &[&PromptRecord]) -> f64 {
        let n = subset.len() as f64;
        let mut j = 0.0;

        let mut cluster_counts: BTreeMap<usize, usize> = self.clusters.iter().map(|&c| (c, 0)).collect();
        for r in subset {
            if let Some(c) = r.cluster_id {
                *cluster_counts.entry(c).or_default() += 1;
            }
        }
        let target = 1.0 / self.clusters.len() as f64;
        j += cluster_counts.values().map(|&c| (c as f64 / n - target).powi(2)).sum::<f64>();

        let mut label_counts = [0usize; 8];
        for r in subset {
            for l in &r.content_labels {
                label_counts[l.index()] += 1;
            }
        }
        let mass: usize = label_counts.iter().sum();
        let target = 1.0 / ContentCategory::ALL.len() as f64;
        j += label_counts.iter().map(|&c| (c as f64 / mass as f64 - target).powi(2)).sum::<f64>();

        let sampled = subset.iter().filter(|r| r.origin == Origin::Sampled).count() as f64;
        j += (sampled / n - 0.5).powi(2) + ((n - sampled) / n - 0.5).powi(2);
        j
    }
}

/// Balance deviation of `subset` with cluster targets uniform over the
/// clusters present in `pool`.
pub fn deviation(pool: &[PromptRecord], subset: &[usize]) -> Result<f64, PipelineError> {
    let targets = Targets::from_pool(pool)?;
    if subset.is_empty() || subset.iter().any(|&i| i >= pool.len()) {
        return Err(PipelineError::InvalidInput("subset indices out of range".into()));
    }
    let chosen: Vec<&PromptRecord> = subset.iter().map(|&i| &pool[i]).collect();
    Ok(targets.deviation(&chosen))
}

/// The subset drawn for trial `t`: uniform without replacement, from its
/// own ChaCha stream, so it does not depend on how many trials run.
pub fn trial_subset(n: usize, k: usize, seed: u64, t: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    let mut idx = sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Best of `trials` random `k`-subsets; ties go to the earliest trial.
pub fn monte_carlo_balance(
    pool: &[PromptRecord],
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<BalanceResult, PipelineError> {
    if k == 0 || trials == 0 {
        return Err(PipelineError::InvalidInput("sample size and trial count must be positive".into()));
    }
    if pool.len() < k {
        return Err(PipelineError::InsufficientCandidates { have: pool.len(), need: k });
    }
    let targets = Targets::from_pool(pool)?;
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for t in 0..trials {
        let idx = trial_subset(pool.len(), k, seed, t);
        let chosen: Vec<&PromptRecord> = idx.iter().map(|&i| &pool[i]).collect();
        let j = targets.deviation(&chosen);
        if best.as_ref().is_none_or(|b| j < b.0) {
            best = Some((j, t, idx));
        }
    }
    let (deviation, trial, indices) = best.expect("at least one trial");
    Ok(BalanceResult {
        ids: indices.iter().map(|&i| pool[i].id.clone()).collect(),
        indices,
        deviation,
        trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ContentCategory::*;

    fn rec(id: &str, cluster: usize, labels: &[ContentCategory], origin: Origin) -> PromptRecord {
        let mut r = PromptRecord::new(id, id, origin);
        r.cluster_id = Some(cluster);
        r.content_labels = labels.iter().copied().collect();
        r
    }

    #[test]
    fn perfect_subset_scores_zero() {
        // clusters {0,1}, eight labels covered once each, two of each origin
        let pool = vec![
            rec("a", 0, &[People, Animals], Origin::Sampled),
            rec("b", 0, &[Vehicles, Plants], Origin::Generated),
            rec("c", 1, &[Artifacts, Food], Origin::Sampled),
            rec("d", 1, &[Buildings, Scenery], Origin::Generated),
            rec("e", 0, &[People], Origin::Sampled),
        ];
        assert_eq!(deviation(&pool, &[0, 1, 2, 3]).unwrap(), 0.0);
        let r = monte_carlo_balance(&pool, 4, 50, 1).unwrap();
        assert_eq!(r.deviation, 0.0);
        assert_eq!(r.ids, vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn deterministic_and_checked() {
        let pool: Vec<PromptRecord> = (0..12)
            .map(|i| rec(&format!("p{i}"), i % 3, &[ContentCategory::ALL[i % 8]], if i % 2 == 0 { Origin::Sampled } else { Origin::Generated }))
            .collect();
        assert_eq!(monte_carlo_balance(&pool, 5, 30, 9).unwrap(), monte_carlo_balance(&pool, 5, 30, 9).unwrap());
        assert!(matches!(
            monte_carlo_balance(&pool, 13, 30, 9),
            Err(PipelineError::InsufficientCandidates { have: 12, need: 13 })
        ));
        let mut bad = pool.clone();
        bad[0].cluster_id = None;
        assert!(monte_carlo_balance(&bad, 5, 30, 9).is_err());
    }
}
