use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopClusters {
    /// `(cluster id, size)`, largest first.
    pub clusters: Vec<(usize, usize)>,
    pub covered: usize,
    pub total: usize,
    pub coverage: f64,
    pub warning: Option<String>,
}

impl TopClusters {
    pub fn ids(&self) -> Vec<usize> {
        self.clusters.iter().map(|(id, _)| *id).collect()
    }
}

/// Keeps the `top_m` largest clusters (ties broken by lower id) and reports
/// the share of points they cover.
pub fn select_top_clusters(assignments: &[usize], top_m: usize, coverage_target: f64) -> TopClusters {
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &a in assignments {
        *sizes.entry(a).or_default() += 1;
    }
    let mut ranked: Vec<(usize, usize)> = sizes.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(top_m);

    let total = assignments.len();
    let covered: usize = ranked.iter().map(|(_, s)| s).sum();
    let coverage = if total == 0 { 0.0 } else { covered as f64 / total as f64 };
    let warning = (coverage < coverage_target).then(|| {
        format!(
            "top {} clusters cover {:.1}% of prompts, below the {:.1}% target",
            ranked.len(),
            coverage * 100.0,
            coverage_target * 100.0
        )
    });
    TopClusters { clusters: ranked, covered, total, coverage, warning }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(sizes: &[(usize, usize)]) -> Vec<usize> {
        sizes.iter().flat_map(|&(id, n)| std::iter::repeat_n(id, n)).collect()
    }

    #[test]
    fn examples() {
        let a = labels(&[(0, 50), (1, 30), (2, 20)]);
        let top = select_top_clusters(&a, 2, 0.89);
        assert_eq!(top.ids(), vec![0, 1]);
        assert_eq!(top.coverage, 0.8);
        assert!(top.warning.is_some());

        let top = select_top_clusters(&a, 10, 0.89);
        assert_eq!(top.coverage, 1.0);
        assert_eq!(top.ids().len(), 3);
        assert!(top.warning.is_none());

        let a = labels(&[(2, 20), (5, 40), (3, 40)]);
        assert_eq!(select_top_clusters(&a, 1, 0.5).ids(), vec![3]);
    }

    #[test]
    fn coverage_monotone_in_top_m() {
        let a = labels(&[(0, 5), (1, 9), (2, 1), (3, 9), (4, 2)]);
        let covs: Vec<f64> = (0..7).map(|m| select_top_clusters(&a, m, 0.9).coverage).collect();
        assert!(covs.windows(2).all(|w| w[0] <= w[1]));
    }
}
