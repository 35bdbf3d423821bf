use std::collections::BTreeSet;

use serde::Serialize;

use super::tfidf::{ScoredKeyword, Tokenizer};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Representatives {
    pub ids: Vec<String>,
    pub warning: Option<String>,
}

/// Prompts containing at least `min_keywords` distinct cluster keywords,
/// ranked by keyword count, then summed keyword score, then id.
pub fn select_representative_prompts(
    prompts: &[(String, String)],
    keywords: &[ScoredKeyword],
    per_cluster: usize,
    min_keywords: usize,
    tokenizer: &Tokenizer,
) -> Representatives {
    let mut ranked: Vec<(usize, f64, &str)> = prompts
        .iter()
        .filter_map(|(id, text)| {
            let tokens: BTreeSet<String> = tokenizer.tokenize(text).into_iter().collect();
            let hits: Vec<&ScoredKeyword> = keywords.iter().filter(|k| tokens.contains(&k.term)).collect();
            (hits.len() >= min_keywords).then(|| (hits.len(), hits.iter().map(|k| k.score).sum(), id.as_str()))
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then_with(|| a.2.cmp(b.2)));
    let qualifying = ranked.len();
    ranked.truncate(per_cluster);
    let warning = (qualifying < per_cluster)
        .then(|| format!("only {qualifying} prompts carry {min_keywords}+ keywords; wanted {per_cluster}"));
    Representatives { ids: ranked.into_iter().map(|(_, _, id)| id.to_string()).collect(), warning }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kw(term: &str, score: f64) -> ScoredKeyword {
        ScoredKeyword { term: term.into(), score }
    }

    fn prompts(items: &[(&str, &str)]) -> Vec<(String, String)> {
        items.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn threshold() {
        let keywords = [kw("dragon", 2.0), kw("castle", 1.0), kw("fire", 0.5)];
        let p = prompts(&[("a", "dragon over a castle"), ("b", "a lone dragon")]);
        let r = select_representative_prompts(&p, &keywords, 30, 2, &Tokenizer::default());
        assert_eq!(r.ids, vec!["a"]);
        assert!(r.warning.is_some());
    }

    #[test]
    fn ranking_fixture() {
        let keywords = [kw("dragon", 3.0), kw("castle", 2.0), kw("fire", 1.0), kw("knight", 0.5)];
        let p = prompts(&[
            ("p1", "dragon breathing fire"),              // 2 kw, 4.0
            ("p2", "knight guards castle from dragon"),   // 3 kw, 5.5
            ("p3", "castle on fire"),                     // 2 kw, 3.0
            ("p4", "dragon and knight"),                  // 2 kw, 3.5
            ("p0", "fire dragon"),                        // 2 kw, 4.0 (ties p1, lower id)
        ]);
        let r = select_representative_prompts(&p, &keywords, 3, 2, &Tokenizer::default());
        assert_eq!(r.ids, vec!["p2", "p0", "p1"]);
        assert!(r.warning.is_none());
    }
}
