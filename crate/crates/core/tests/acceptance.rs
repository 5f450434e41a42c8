//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero on any failure.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use docsift::cascade::{iban_length, Cascade, Category, GazetteerNer, PatternCatalog, Stage};
use docsift::config::{Pipeline, RunConfig};
use docsift::dataset::{generate_corpus, render_raster, GeneratedCorpus, GeneratorPools, RenderLimits};
use docsift::eval::{
    evaluate_corpus, jaccard, score_field, EvalOptions, FieldScore, Matcher, TokenSet,
};
use docsift::imaging::{apply_threshold, morph_close, preprocess, Kernel, PageRaster, PreprocessConfig};
use docsift::llm::{CompletionParams, CountingBackend, LlmGateway, ReplayBackend};
use docsift::text::{
    correct_spelling, is_protected, GlyphCellOcr, LanguageTag, OcrEngine, SpellDictionary,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;

const BASE_SEED: u64 = 2024;
const CORPUS_SIZE: usize = 100;

type Outcome = Result<String, String>;

struct Fixture {
    generated: GeneratedCorpus,
}

impl Fixture {
    fn new() -> Self {
        let generated = generate_corpus(&GeneratorPools::builtin(), BASE_SEED, CORPUS_SIZE)
            .expect("corpus generates");
        Self { generated }
    }

    fn gateway(&self) -> (LlmGateway, Arc<CountingBackend<ReplayBackend>>) {
        let backend = Arc::new(CountingBackend::new(ReplayBackend::new(
            self.generated.oracle_transcript(),
        )));
        (LlmGateway::new(backend.clone(), CompletionParams::default()), backend)
    }

    fn pipeline(&self) -> Pipeline {
        let (gateway, _) = self.gateway();
        Pipeline::from_config(RunConfig::default())
            .expect("default config")
            .with_gateway(Some(gateway))
    }
}

fn fuzzy_field_perfection(fx: &Fixture) -> Outcome {
    let options = EvalOptions {
        parallel: false,
        ..EvalOptions::default()
    };
    let start = Instant::now();
    let report = evaluate_corpus(&fx.generated.corpus(), &fx.pipeline(), options)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut lines = Vec::new();
    for field in ["address", "email", "phone"] {
        let m = &report.per_field[field].metrics;
        let triple = (m.accuracy, m.precision, m.recall);
        if triple != (Some(1.0), Some(1.0), Some(1.0)) {
            return Err(format!("{field}: accuracy/precision/recall = {triple:?}"));
        }
        lines.push(format!("{field} 1.00/1.00/1.00"));
    }
    if elapsed >= Duration::from_secs(30) {
        return Err(format!("took {elapsed:.1?} (limit 30 s)"));
    }
    Ok(format!("{} on {} resumes in {elapsed:.1?}", lines.join(", "), report.n_documents))
}

fn jaccard_ceiling(fx: &Fixture) -> Outcome {
    let mut config = RunConfig::default();
    config.stages.llm_correction = false;
    let pipeline = Pipeline::from_config(config).map_err(|e| e.to_string())?;
    let report = evaluate_corpus(&fx.generated.corpus(), &pipeline, EvalOptions::default())
        .map_err(|e| e.to_string())?;
    let sim = &report.text_similarity;
    match sim.mean_jaccard {
        Some(j) if j >= 0.99 && sim.n_documents == CORPUS_SIZE => Ok(format!(
            "jaccard_mean = {j:.4} over {} documents ({})",
            sim.n_documents,
            sim.normalization_ids.iter().cloned().collect::<Vec<_>>().join(", ")
        )),
        other => Err(format!("jaccard_mean = {other:?} over {} documents", sim.n_documents)),
    }
}

// Labeling rule written independently of the scorer: among retrieved values
// equivalent to the truth only one is a true positive, everything else
// retrieved is a false positive, and a truth nobody matched is a false negative.
fn brute_force_labels(retrieved: &[String], truth: Option<&str>, eq: impl Fn(&str, &str) -> bool) -> (u32, u32, u32) {
    let equivalent = match truth {
        Some(t) => retrieved.iter().filter(|r| eq(r, t)).count(),
        None => 0,
    };
    let tp = equivalent.min(1) as u32;
    let fp = retrieved.len() as u32 - tp;
    let fn_ = u32::from(truth.is_some() && tp == 0);
    (tp, fp, fn_)
}

fn token_bag(s: &str) -> BTreeSet<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn scorer_oracle() -> Outcome {
    let values = prop::sample::select(vec!["a", "A", "a,", "b", "B.", "a b", "b a", "c", "€ 12,00", "12"]);
    let strategy = (
        prop::collection::vec(values.clone().prop_map(String::from), 0..=6),
        prop::option::of(values.prop_map(String::from)),
        any::<bool>(),
    );
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, |(retrieved, truth, exact)| {
            let (matcher, expected) = if exact {
                (Matcher::Exact, brute_force_labels(&retrieved, truth.as_deref(), |a, b| a == b))
            } else {
                (
                    Matcher::TokenSet,
                    brute_force_labels(&retrieved, truth.as_deref(), |a, b| token_bag(a) == token_bag(b)),
                )
            };
            let FieldScore { tp, fp, fn_, .. } = score_field("f", &retrieved, truth.as_deref(), matcher);
            prop_assert_eq!((tp, fp, fn_), expected);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("10000 randomized cases, 0 mismatches".into())
}

fn jaccard_properties() -> Outcome {
    let set = |v: BTreeSet<String>| TokenSet {
        tokens: v,
        normalization_id: "n".into(),
    };
    let abc = set(["a", "b", "c"].map(String::from).into());
    let bcd = set(["b", "c", "d"].map(String::from).into());
    let half = jaccard(&abc, &bcd).map_err(|e| e.to_string())?;
    if half != 0.5 {
        return Err(format!("J({{a,b,c}},{{b,c,d}}) = {half}"));
    }
    let tokens = prop::collection::btree_set("[a-h]{1,2}", 0..12);
    let mut runner = TestRunner::new(Config {
        cases: 1_000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&(tokens.clone(), tokens), |(a, b)| {
            let (a, b) = (set(a), set(b));
            let ab = jaccard(&a, &b).unwrap();
            prop_assert_eq!(ab, jaccard(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
            let inter = a.tokens.intersection(&b.tokens).count();
            let union = a.tokens.union(&b.tokens).count();
            let want = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
            prop_assert_eq!(ab, want);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("1000 random-set trials and the 0.5 example, 0 failures".into())
}

fn cascade_discipline(fx: &Fixture) -> Outcome {
    let (gateway, counter) = fx.gateway();
    let cascade = Cascade::new()
        .with_ner(Some(Arc::new(GazetteerNer::builtin())))
        .with_gateway(Some(gateway));
    let covered: BTreeSet<&str> = ["address", "email", "phone"].into();
    let mut checked = 0;
    let mut violations = Vec::new();
    for doc in &fx.generated.documents {
        let text = &doc.rendered.text;
        for field in doc.truth.to_map().keys() {
            let query = cascade.query(field).map_err(|e| e.to_string())?;
            let applicable = cascade.applicable_stages(&query);
            let before = counter.calls();
            let result = match cascade.retrieve(text, &query, LanguageTag::En) {
                Ok(r) => r,
                Err(e) => {
                    violations.push(format!("{}/{field}: {e}", doc.doc_id));
                    continue;
                }
            };
            let calls = counter.calls() - before;
            let attempted = &result.stages_attempted;
            let prefix_ok = !attempted.is_empty()
                && attempted.len() <= applicable.len()
                && applicable[..attempted.len()] == attempted[..]
                && match result.stage_fired {
                    Some(s) => attempted.last() == Some(&s),
                    None => attempted[..] == applicable[..],
                };
            if !prefix_ok {
                violations.push(format!(
                    "{}/{field}: attempted {attempted:?} of {applicable:?}",
                    doc.doc_id
                ));
            }
            if covered.contains(field.as_str()) {
                if result.matches.is_empty() || result.stage_fired != Some(Stage::FuzzyRegex) {
                    violations.push(format!("{}/{field}: catalog did not match", doc.doc_id));
                }
                if calls != 0 {
                    violations.push(format!("{}/{field}: {calls} LLM calls", doc.doc_id));
                }
            }
            checked += 1;
        }
    }
    if violations.is_empty() {
        Ok(format!(
            "{checked} retrievals, 0 violations, {} LLM calls in total (none for catalog fields)",
            counter.calls()
        ))
    } else {
        Err(format!("{} violations, first: {}", violations.len(), violations[0]))
    }
}

fn closing_idempotence() -> Outcome {
    let rng = &mut SplitMix64::seed_from_u64(0xC105E);
    for trial in 0..200 {
        let w = rng.random_range(1..=256usize);
        let h = rng.random_range(1..=256usize);
        let density = rng.random_range(0.05..0.95f64);
        let pixels = (0..w * h)
            .map(|_| if rng.random_bool(density) { 0 } else { 255 })
            .collect();
        let raster = PageRaster::new(w, h, pixels).map_err(|e| e.to_string())?;
        let binary = apply_threshold(&raster, 128);
        let size = if trial % 2 == 0 { 3 } else { 5 };
        let kernel = Kernel::square(size).map_err(|e| e.to_string())?;
        let once = morph_close(&binary, kernel);
        let twice = morph_close(&once, kernel);
        if once != twice {
            return Err(format!("trial {trial}: {w}x{h} kernel {size} not idempotent"));
        }
    }
    Ok("200 random rasters up to 256x256, kernels 3 and 5, 0 failures".into())
}

fn ocr_loop_closure(fx: &Fixture) -> Outcome {
    let start = Instant::now();
    let config = PreprocessConfig::default();
    for doc in fx.generated.documents.iter().take(50) {
        let raster = render_raster(&doc.rendered, RenderLimits::default()).map_err(|e| e.to_string())?;
        let prepared = preprocess(&raster, &config).map_err(|e| e.to_string())?.value;
        let text = GlyphCellOcr
            .recognize(&prepared, LanguageTag::En)
            .map_err(|e| e.to_string())?
            .text;
        if text != doc.rendered.text {
            return Err(format!("{}: recovered text differs", doc.doc_id));
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(60) {
        return Err(format!("took {elapsed:.1?} (limit 60 s)"));
    }
    Ok(format!("50 documents byte-exact in {elapsed:.1?}"))
}

// Arbitrary-precision mod 97 over the decimal expansion, the textbook way.
fn mod97_oracle(iban: &str) -> bool {
    let rearranged: String = iban[4..].chars().chain(iban[..4].chars()).collect();
    let digits: String = rearranged
        .chars()
        .map(|c| c.to_digit(36).unwrap().to_string())
        .collect();
    let mut rem = 0u64;
    for chunk in digits.as_bytes().chunks(7) {
        let s = format!("{rem}{}", std::str::from_utf8(chunk).unwrap());
        rem = s.parse::<u64>().unwrap() % 97;
    }
    rem == 1
}

fn iban_filter() -> Outcome {
    let fixtures: Vec<&str> = include_str!("fixtures/ibans.txt").lines().collect();
    if fixtures.len() != 30 {
        return Err(format!("expected 30 fixtures, found {}", fixtures.len()));
    }
    let catalog = PatternCatalog::builtin();
    let accepted = |iban: &str| -> Result<bool, String> {
        let found = catalog
            .find(&format!("Please pay to IBAN {iban} before the due date."), Category::Iban)
            .map_err(|e| e.to_string())?;
        Ok(found.iter().any(|m| m.value == iban))
    };
    let mut errors = Vec::new();
    for (i, iban) in fixtures.iter().enumerate() {
        if iban_length(&iban[..2]) != Some(iban.len()) || !mod97_oracle(iban) {
            return Err(format!("fixture {iban} is not a valid IBAN"));
        }
        if !accepted(iban)? {
            errors.push(format!("valid {iban} rejected"));
        }
        // Substitute one digit after the country code.
        let digit_positions: Vec<usize> = iban
            .char_indices()
            .skip(2)
            .filter(|(_, c)| c.is_ascii_digit())
            .map(|(p, _)| p)
            .collect();
        let pos = digit_positions[i * 7 % digit_positions.len()];
        let old = iban.as_bytes()[pos] - b'0';
        let new = (old + 1 + (i as u8 % 9)) % 10;
        let mut corrupted = iban.to_string();
        corrupted.replace_range(pos..pos + 1, &new.to_string());
        if mod97_oracle(&corrupted) {
            return Err(format!("oracle accepts corruption {corrupted}"));
        }
        if accepted(&corrupted)? {
            errors.push(format!("corrupted {corrupted} accepted"));
        }
    }
    if errors.is_empty() {
        Ok("30 valid accepted, 30 single-digit corruptions rejected".into())
    } else {
        Err(errors.join("; "))
    }
}

fn levenshtein_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn spell_exclusions(fx: &Fixture) -> Outcome {
    let mut tokens: BTreeSet<String> = fx
        .generated
        .documents
        .iter()
        .flat_map(|d| d.rendered.text.split_whitespace().map(String::from).collect::<Vec<_>>())
        .collect();
    let vocabulary = tokens.len();
    let rng = &mut SplitMix64::seed_from_u64(0x5BE11);
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789éëï".chars().collect();
    let mut fuzzed = 0;
    while fuzzed < 1000 {
        let len = rng.random_range(1..=10usize);
        let t: String = (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
        if tokens.insert(t) {
            fuzzed += 1;
        }
    }
    let mut altered = 0;
    for lang in LanguageTag::ALL {
        let dict = SpellDictionary::builtin(lang);
        for token in &tokens {
            let out = correct_spelling(token, &dict);
            if out == *token {
                continue;
            }
            altered += 1;
            let core = token.trim_matches(|c: char| !c.is_alphanumeric());
            if is_protected(core)
                || core.chars().next().is_some_and(char::is_uppercase)
                || core.chars().any(|c| c.is_numeric())
            {
                return Err(format!("{lang}: protected token {token:?} became {out:?}"));
            }
            let d = levenshtein_oracle(token, &out);
            if d > 2 {
                return Err(format!("{lang}: {token:?} -> {out:?} at distance {d}"));
            }
        }
    }
    Ok(format!(
        "{vocabulary} corpus tokens + 1000 fuzzed, both dictionaries: {altered} alterations, all unprotected and within distance 2"
    ))
}

fn determinism(fx: &Fixture) -> Outcome {
    let corpus = fx.generated.corpus();
    let run = || {
        evaluate_corpus(&corpus, &fx.pipeline(), EvalOptions::default())
            .map(|r| r.to_json())
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if a == b {
        Ok(format!("two runs, {} identical bytes", a.len()))
    } else {
        Err("reports differ".into())
    }
}

fn main() {
    let fx = Fixture::new();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("fuzzy-field perfection", Box::new(|| fuzzy_field_perfection(&fx))),
        ("jaccard pipeline ceiling", Box::new(|| jaccard_ceiling(&fx))),
        ("scorer oracle equivalence", Box::new(scorer_oracle)),
        ("jaccard properties", Box::new(jaccard_properties)),
        ("cascade discipline", Box::new(|| cascade_discipline(&fx))),
        ("morphological closing idempotence", Box::new(closing_idempotence)),
        ("ocr loop closure", Box::new(|| ocr_loop_closure(&fx))),
        ("iban checksum filter", Box::new(iban_filter)),
        ("spell-checker exclusions", Box::new(|| spell_exclusions(&fx))),
        ("determinism", Box::new(|| determinism(&fx))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
