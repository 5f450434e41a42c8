use serde::{Deserialize, Serialize};

use super::tokens::{normalize_tokens, NormalizeOptions};
use super::EvalError;
use crate::text::LanguageTag;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldScore {
    pub field: String,
    pub tp: u32,
    pub fp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
}

/// How a retrieved value is compared with the truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matcher {
    /// Equal token sets after case folding and symbol stripping, so
    /// "satisfaction," equals "Satisfaction".
    #[default]
    TokenSet,
    Exact,
}

impl Matcher {
    pub fn equivalent(self, a: &str, b: &str) -> bool {
        match self {
            Matcher::Exact => a == b,
            Matcher::TokenSet => {
                let o = NormalizeOptions {
                    strip_symbols: true,
                    lemmatize: false,
                };
                normalize_tokens(a, LanguageTag::En, o).tokens
                    == normalize_tokens(b, LanguageTag::En, o).tokens
            }
        }
    }
}

/// The first retrieved value equivalent to the truth is the true positive;
/// every other retrieved value, duplicates included, is a false positive;
/// a present truth without a true positive is a false negative.
pub fn score_field(
    field: &str,
    retrieved: &[String],
    truth: Option<&str>,
    matcher: Matcher,
) -> FieldScore {
    let mut score = FieldScore {
        field: field.to_string(),
        ..FieldScore::default()
    };
    for value in retrieved {
        match truth {
            Some(t) if score.tp == 0 && matcher.equivalent(value, t) => score.tp = 1,
            _ => score.fp += 1,
        }
    }
    if truth.is_some() && score.tp == 0 {
        score.fn_ = 1;
    }
    score
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyRule {
    /// One true positive and nothing else.
    #[default]
    Strict,
    /// A true positive, duplicates tolerated.
    Lenient,
}

impl AccuracyRule {
    /// A field with no truth and nothing retrieved is also correct.
    pub fn is_correct(self, s: &FieldScore) -> bool {
        let vacuous = s.tp == 0 && s.fp == 0 && s.fn_ == 0;
        vacuous
            || match self {
                AccuracyRule::Strict => s.tp == 1 && s.fp == 0,
                AccuracyRule::Lenient => s.tp == 1,
            }
    }
}

/// Corpus-level figures for one field. Ratios with a zero denominator are
/// `None` (serialized as null), never 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMetrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub tp: u32,
    pub fp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
    pub correct_docs: usize,
    pub n_documents: usize,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn aggregate(
    scores: &[FieldScore],
    correct_docs: usize,
    n_documents: usize,
) -> Result<FieldMetrics, EvalError> {
    if n_documents == 0 {
        return Err(EvalError::ZeroDocuments);
    }
    let tp: u32 = scores.iter().map(|s| s.tp).sum();
    let fp: u32 = scores.iter().map(|s| s.fp).sum();
    let fn_: u32 = scores.iter().map(|s| s.fn_).sum();
    Ok(FieldMetrics {
        accuracy: ratio(correct_docs as u64, n_documents as u64),
        precision: ratio(tp as u64, tp as u64 + fp as u64),
        recall: ratio(tp as u64, tp as u64 + fn_ as u64),
        tp,
        fp,
        fn_,
        correct_docs,
        n_documents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn examples() {
        let m = Matcher::default();
        let d = score_field("amount", &s(&["€ 1.210,00", "€ 1.210,00"]), Some("€ 1.210,00"), m);
        assert_eq!((d.tp, d.fp, d.fn_), (1, 1, 0));
        let d = score_field("amount", &[], Some("€ 1.210,00"), m);
        assert_eq!((d.tp, d.fp, d.fn_), (0, 0, 1));
        let d = score_field("amount", &s(&["€ 999,00"]), Some("€ 1.210,00"), m);
        assert_eq!((d.tp, d.fp, d.fn_), (0, 1, 1));
        let d = score_field("amount", &[], None, m);
        assert_eq!((d.tp, d.fp, d.fn_), (0, 0, 0));
        let d = score_field("x", &s(&["satisfaction,"]), Some("Satisfaction"), m);
        assert_eq!(d.tp, 1);
        let d = score_field("x", &s(&["satisfaction,"]), Some("Satisfaction"), Matcher::Exact);
        assert_eq!(d.tp, 0);
    }

    #[test]
    fn aggregate_examples() {
        let scores: Vec<FieldScore> = (0..40)
            .map(|i| FieldScore {
                field: "n".into(),
                tp: (i < 36) as u32,
                fp: (i >= 36) as u32,
                fn_: (i >= 36) as u32,
            })
            .collect();
        let m = aggregate(&scores, 36, 40).unwrap();
        assert_eq!(m.accuracy, Some(0.9));

        let tp10 = vec![FieldScore { field: "x".into(), tp: 10, fp: 0, fn_: 0 }];
        let m = aggregate(&tp10, 10, 10).unwrap();
        assert_eq!((m.precision, m.recall), (Some(1.0), Some(1.0)));

        let zero = vec![FieldScore { field: "x".into(), tp: 0, fp: 0, fn_: 3 }];
        let m = aggregate(&zero, 0, 3).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(serde_json::to_value(&m).unwrap()["precision"], serde_json::Value::Null);

        assert!(matches!(aggregate(&[], 0, 0), Err(EvalError::ZeroDocuments)));
    }

    #[test]
    fn accuracy_rules() {
        let dup = FieldScore { field: "x".into(), tp: 1, fp: 1, fn_: 0 };
        assert!(!AccuracyRule::Strict.is_correct(&dup));
        assert!(AccuracyRule::Lenient.is_correct(&dup));
        let miss = FieldScore { field: "x".into(), tp: 0, fp: 0, fn_: 1 };
        assert!(!AccuracyRule::Lenient.is_correct(&miss));
        assert!(AccuracyRule::Strict.is_correct(&FieldScore::default()));
    }

    proptest! {
        #[test]
        fn counts_cover_every_retrieved_value(
            retrieved in proptest::collection::vec("[ab]", 0..7),
            truth in proptest::option::of("[ab]"),
        ) {
            let sc = score_field("f", &retrieved, truth.as_deref(), Matcher::Exact);
            prop_assert_eq!((sc.tp + sc.fp) as usize, retrieved.len());
            prop_assert!(sc.tp <= 1);
            prop_assert_eq!(sc.fn_, (truth.is_some() && sc.tp == 0) as u32);
        }
    }
}
