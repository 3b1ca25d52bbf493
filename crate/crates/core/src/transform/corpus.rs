//! Synthetic sentiment corpus with a controlled share of negated statements.

use super::{Result, TransformError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Good,
    Bad,
}

impl Sentiment {
    pub fn word(self) -> &'static str {
        match self {
            Sentiment::Good => "good",
            Sentiment::Bad => "bad",
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Sentiment::Good => Sentiment::Bad,
            Sentiment::Bad => Sentiment::Good,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusGenConfig {
    /// Probability that a sentence gets the negated template.
    pub negation_ratio_x: f64,
    pub seed: u64,
}

impl CorpusGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.negation_ratio_x) {
            return Err(TransformError::InvalidRatio(self.negation_ratio_x));
        }
        Ok(())
    }
}

/// Appends a sentiment statement to every sentence.
///
/// With probability `1 - x` a sentence becomes `"s. This does suggest it is
/// <label>"`, otherwise `"s. This does not suggest it is <opposite label>"`,
/// so both variants state something true about `s`.
pub fn gen_sentiment_corpus(
    sentences: &[(String, Sentiment)],
    cfg: &CorpusGenConfig,
) -> Result<Vec<String>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(sentences
        .iter()
        .map(|(s, label)| {
            let s = s.trim_end();
            // gen_bool(1.0) is always true and gen_bool(0.0) always false
            if rng.gen_bool(cfg.negation_ratio_x) {
                format!("{s}. This does not suggest it is {}", label.opposite().word())
            } else {
                format!("{s}. This does suggest it is {}", label.word())
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentences(n: usize) -> Vec<(String, Sentiment)> {
        (0..n)
            .map(|i| {
                let label = if i % 2 == 0 { Sentiment::Good } else { Sentiment::Bad };
                (format!("sentence {i}"), label)
            })
            .collect()
    }

    #[test]
    fn ratio_zero_and_one() {
        let s = sentences(200);
        let none = gen_sentiment_corpus(&s, &CorpusGenConfig { negation_ratio_x: 0.0, seed: 1 }).unwrap();
        assert!(none.iter().all(|l| l.contains("This does suggest")));
        let all = gen_sentiment_corpus(&s, &CorpusGenConfig { negation_ratio_x: 1.0, seed: 1 }).unwrap();
        assert!(all.iter().all(|l| l.contains("This does not suggest")));
    }

    #[test]
    fn negated_lines_use_the_opposite_word() {
        let s = vec![("great movie".to_string(), Sentiment::Good)];
        let out = gen_sentiment_corpus(&s, &CorpusGenConfig { negation_ratio_x: 1.0, seed: 0 }).unwrap();
        assert_eq!(out, vec!["great movie. This does not suggest it is bad"]);
        let out = gen_sentiment_corpus(&s, &CorpusGenConfig { negation_ratio_x: 0.0, seed: 0 }).unwrap();
        assert_eq!(out, vec!["great movie. This does suggest it is good"]);
    }

    #[test]
    fn invalid_ratio() {
        let err = gen_sentiment_corpus(&[], &CorpusGenConfig { negation_ratio_x: 1.5, seed: 0 });
        assert_eq!(err, Err(TransformError::InvalidRatio(1.5)));
    }

    #[test]
    fn deterministic() {
        let s = sentences(500);
        let cfg = CorpusGenConfig { negation_ratio_x: 0.3, seed: 42 };
        assert_eq!(gen_sentiment_corpus(&s, &cfg).unwrap(), gen_sentiment_corpus(&s, &cfg).unwrap());
    }
}
