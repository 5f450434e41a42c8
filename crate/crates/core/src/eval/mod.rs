//! Scoring extraction and retrieval against a labelled corpus.

mod corpus;
mod score;
mod tokens;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use corpus::{Corpus, CorpusEntry, Source, TruthValue, LIST_SEPARATOR};
pub use score::{aggregate, score_field, AccuracyRule, FieldMetrics, FieldScore, Matcher};
pub use tokens::{jaccard, normalization_id, normalize_tokens, stem, NormalizeOptions, TokenSet};

use crate::cascade::Stage;
use crate::config::Pipeline;
use crate::text::LanguageTag;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("token sets were normalized differently: {0} vs {1}")]
    NormalizationMismatch(String, String),
    #[error("corpus has no documents")]
    ZeroDocuments,
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(String),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::NormalizationMismatch(..) => "normalization_mismatch",
            EvalError::ZeroDocuments => "zero_documents",
            EvalError::Corpus { .. } => "invalid_corpus",
            EvalError::Io(_) => "io_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Leave failed documents out instead of scoring them as misses.
    pub skip_failures: bool,
    pub accuracy: AccuracyRule,
    pub matcher: Matcher,
    pub normalize: NormalizeOptions,
    pub parallel: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            skip_failures: false,
            accuracy: AccuracyRule::default(),
            matcher: Matcher::default(),
            normalize: NormalizeOptions::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldOutcome {
    pub field: String,
    pub retrieved: Vec<String>,
    pub truth: Option<String>,
    pub tp: u32,
    pub fp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
    pub correct: bool,
    pub stage_fired: Option<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentReport {
    pub doc_id: String,
    pub language: Option<LanguageTag>,
    /// Token-set Jaccard of extracted against reference text.
    pub text_jaccard: Option<f64>,
    pub fields: Vec<FieldOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldReport {
    pub metrics: FieldMetrics,
    /// Stage that fired most often for this field; ties go to the earlier stage.
    pub technique: Option<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSimilarity {
    pub mean_jaccard: Option<f64>,
    pub n_documents: usize,
    /// One id per document language involved.
    pub normalization_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run_config_digest: String,
    pub options: EvalOptions,
    pub n_documents: usize,
    pub n_failed: usize,
    pub per_field: BTreeMap<String, FieldReport>,
    pub text_similarity: TextSimilarity,
    pub documents: Vec<DocumentReport>,
}

impl EvalReport {
    /// Pretty JSON with a trailing newline; identical inputs give identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn error_info(code: &str, err: &dyn std::fmt::Display) -> ErrorInfo {
    ErrorInfo {
        code: code.to_string(),
        message: err.to_string(),
    }
}

fn evaluate_document(entry: &CorpusEntry, corpus: &Corpus, pipeline: &Pipeline, opts: &EvalOptions) -> DocumentReport {
    let truth_of = |field: &str| entry.truth.get(field).cloned().flatten();
    let miss = |field: &String, error: Option<ErrorInfo>| {
        let truth = truth_of(field);
        let sc = score_field(field, &[], truth.as_ref().map(|t| t.joined()).as_deref(), opts.matcher);
        FieldOutcome {
            field: field.clone(),
            retrieved: Vec::new(),
            truth: truth.map(|t| t.joined()),
            tp: sc.tp,
            fp: sc.fp,
            fn_: sc.fn_,
            correct: opts.accuracy.is_correct(&sc),
            stage_fired: None,
            error,
        }
    };
    let extracted = corpus
        .document(entry)
        .and_then(|doc| pipeline.extract(&doc));
    let extracted = match extracted {
        Ok(x) => x,
        Err(e) => {
            return DocumentReport {
                doc_id: entry.doc_id.clone(),
                language: None,
                text_jaccard: None,
                fields: entry.truth.keys().map(|f| miss(f, None)).collect(),
                error: Some(error_info(e.code(), &e)),
            }
        }
    };

    let text_jaccard = entry.reference_text.as_ref().map(|reference| {
        let a = normalize_tokens(&extracted.text, extracted.language, opts.normalize);
        let b = normalize_tokens(reference, extracted.language, opts.normalize);
        jaccard(&a, &b).expect("same normalization")
    });

    let fields: Vec<&String> = entry.truth.keys().collect();
    let results = pipeline.retrieve(&extracted.text, &fields, extracted.language);
    let outcomes = fields
        .iter()
        .zip(results)
        .map(|(&field, result)| match result {
            Err(e) => miss(field, Some(error_info(e.code(), &e))),
            Ok(r) => {
                let truth = truth_of(field);
                let mut retrieved: Vec<String> = r.matches.iter().map(|m| m.value.clone()).collect();
                // List truth is one value; so is everything retrieved for it.
                if truth.as_ref().is_some_and(TruthValue::is_list) && !retrieved.is_empty() {
                    retrieved = vec![retrieved.join(LIST_SEPARATOR)];
                }
                let joined = truth.as_ref().map(TruthValue::joined);
                let sc = score_field(field, &retrieved, joined.as_deref(), opts.matcher);
                FieldOutcome {
                    field: field.clone(),
                    retrieved,
                    truth: joined,
                    tp: sc.tp,
                    fp: sc.fp,
                    fn_: sc.fn_,
                    correct: opts.accuracy.is_correct(&sc),
                    stage_fired: r.stage_fired,
                    error: None,
                }
            }
        })
        .collect();
    DocumentReport {
        doc_id: entry.doc_id.clone(),
        language: Some(extracted.language),
        text_jaccard,
        fields: outcomes,
        error: None,
    }
}

/// Runs every document through extraction and retrieval and scores the
/// fields named in its truth map. Output order depends only on doc ids.
pub fn evaluate_corpus(
    corpus: &Corpus,
    pipeline: &Pipeline,
    options: EvalOptions,
) -> Result<EvalReport, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::ZeroDocuments);
    }
    let run = |e: &CorpusEntry| evaluate_document(e, corpus, pipeline, &options);
    let mut documents: Vec<DocumentReport> = if options.parallel {
        corpus.entries.par_iter().map(run).collect()
    } else {
        corpus.entries.iter().map(run).collect()
    };
    documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let n_failed = documents.iter().filter(|d| d.error.is_some()).count();
    let scored: Vec<&DocumentReport> = documents
        .iter()
        .filter(|d| !(options.skip_failures && d.error.is_some()))
        .collect();
    if scored.is_empty() {
        return Err(EvalError::ZeroDocuments);
    }

    let mut per_field = BTreeMap::new();
    for field in corpus.fields() {
        let outcomes: Vec<&FieldOutcome> = scored
            .iter()
            .flat_map(|d| d.fields.iter().filter(|f| f.field == field))
            .collect();
        let scores: Vec<FieldScore> = outcomes
            .iter()
            .map(|o| FieldScore {
                field: field.clone(),
                tp: o.tp,
                fp: o.fp,
                fn_: o.fn_,
            })
            .collect();
        let correct = outcomes.iter().filter(|o| o.correct).count();
        let metrics = aggregate(&scores, correct, outcomes.len())?;
        let mut counts: BTreeMap<Stage, usize> = BTreeMap::new();
        for s in outcomes.iter().filter_map(|o| o.stage_fired) {
            *counts.entry(s).or_default() += 1;
        }
        let technique = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(s, _)| *s);
        per_field.insert(field, FieldReport { metrics, technique });
    }

    let jaccards: Vec<f64> = scored.iter().filter_map(|d| d.text_jaccard).collect();
    let text_similarity = TextSimilarity {
        mean_jaccard: (!jaccards.is_empty())
            .then(|| jaccards.iter().sum::<f64>() / jaccards.len() as f64),
        n_documents: jaccards.len(),
        normalization_ids: scored
            .iter()
            .filter(|d| d.text_jaccard.is_some())
            .filter_map(|d| d.language)
            .map(|l| normalization_id(l, options.normalize))
            .collect(),
    };

    Ok(EvalReport {
        run_config_digest: pipeline.config().digest(),
        options,
        n_documents: scored.len(),
        n_failed,
        per_field,
        text_similarity,
        documents,
    })
}
