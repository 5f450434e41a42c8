use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pools::GeneratorPools;
use super::resume::{generate_resume, RenderedDoc, ResumeTruth};
use super::DatasetError;
use crate::cascade::normalize_query;
use crate::eval::{Corpus, CorpusEntry, Source, TruthValue};
use crate::llm::{PromptTemplate, TemplateId, Transcript};

/// Bumped when a change to the generator alters output for a given seed.
pub const GENERATOR_VERSION: u32 = 1;

/// Separator the oracle transcript uses between list items; the cascade
/// splits replies on it.
pub const ORACLE_LIST_SEPARATOR: &str = "; ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedDocument {
    pub doc_id: String,
    pub truth: ResumeTruth,
    pub rendered: RenderedDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub doc_id: String,
    pub seed: u64,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator_version: u32,
    pub prng: String,
    pub base_seed: u64,
    pub n: usize,
    pub pool_digest: String,
    pub documents: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub base_seed: u64,
    pub pool_digest: String,
    pub documents: Vec<GeneratedDocument>,
}

pub fn doc_id(seed: u64) -> String {
    format!("resume-{seed:06}")
}

/// Resumes for seeds `base_seed .. base_seed + n` (wrapping).
pub fn generate_corpus(
    pools: &GeneratorPools,
    base_seed: u64,
    n: usize,
) -> Result<GeneratedCorpus, DatasetError> {
    if n == 0 {
        return Err(DatasetError::EmptyCorpus);
    }
    let documents = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let (truth, rendered) = generate_resume(pools, seed);
            GeneratedDocument {
                doc_id: doc_id(seed),
                truth,
                rendered,
            }
        })
        .collect();
    Ok(GeneratedCorpus {
        base_seed,
        pool_digest: pools.digest().to_string(),
        documents,
    })
}

fn doc_path(id: &str) -> PathBuf {
    Path::new("docs").join(format!("{id}.txt"))
}

impl GeneratedCorpus {
    /// Corpus with inline text sources and the source text as reference.
    pub fn corpus(&self) -> Corpus {
        self.corpus_with(|d| Source::Text(d.rendered.text.clone()))
    }

    fn corpus_with(&self, source: impl Fn(&GeneratedDocument) -> Source) -> Corpus {
        Corpus {
            entries: self
                .documents
                .iter()
                .map(|d| CorpusEntry {
                    doc_id: d.doc_id.clone(),
                    source: source(d),
                    truth: d.truth.to_map(),
                    reference_text: Some(d.rendered.text.clone()),
                })
                .collect(),
            base_dir: PathBuf::new(),
        }
    }

    /// Replay transcript answering every field query on every document with
    /// its truth, as a perfect model would.
    pub fn oracle_transcript(&self) -> Transcript {
        let template = PromptTemplate::builtin(TemplateId::RetrieveField);
        let mut t = Transcript::new();
        for d in &self.documents {
            for (field, value) in d.truth.to_map() {
                let raw = normalize_query(&field).expect("field names are valid").raw;
                let prompt = template
                    .render(&[("user_input", &raw), ("text", &d.rendered.text)])
                    .expect("template binds");
                let response = match value {
                    Some(TruthValue::One(v)) => v,
                    Some(TruthValue::Many(vs)) => vs.join(ORACLE_LIST_SEPARATOR),
                    None => "none".into(),
                };
                t.record(&prompt, &response);
            }
        }
        t
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            generator_version: GENERATOR_VERSION,
            prng: "splitmix64".into(),
            base_seed: self.base_seed,
            n: self.documents.len(),
            pool_digest: self.pool_digest.clone(),
            documents: self
                .documents
                .iter()
                .map(|d| ManifestEntry {
                    doc_id: d.doc_id.clone(),
                    seed: d.rendered.seed,
                    path: doc_path(&d.doc_id),
                })
                .collect(),
        }
    }

    /// Writes `corpus.jsonl`, `docs/<id>.txt`, `layouts.jsonl`,
    /// `transcript.jsonl` and `manifest.json` into `out_dir`. A non-empty
    /// directory is refused unless `force` is set.
    pub fn write(&self, out_dir: &Path, force: bool) -> Result<(), DatasetError> {
        let io = |p: &Path, e: std::io::Error| DatasetError::Io(format!("{}: {e}", p.display()));
        if out_dir.exists() {
            let mut entries = std::fs::read_dir(out_dir).map_err(|e| io(out_dir, e))?;
            if entries.next().is_some() && !force {
                return Err(DatasetError::OutputNotEmpty(out_dir.to_path_buf()));
            }
        }
        let docs = out_dir.join("docs");
        std::fs::create_dir_all(&docs).map_err(|e| io(&docs, e))?;
        let write = |p: PathBuf, data: &str| std::fs::write(&p, data).map_err(|e| io(&p, e));
        let mut layouts = String::new();
        for d in &self.documents {
            write(out_dir.join(doc_path(&d.doc_id)), &d.rendered.text)?;
            let line = serde_json::json!({
                "doc_id": d.doc_id,
                "seed": d.rendered.seed,
                "layout_descriptor": d.rendered.layout_descriptor,
            });
            layouts.push_str(&line.to_string());
            layouts.push('\n');
        }
        let corpus = self.corpus_with(|d| Source::Path(doc_path(&d.doc_id)));
        write(out_dir.join("corpus.jsonl"), &corpus.to_jsonl())?;
        write(out_dir.join("layouts.jsonl"), &layouts)?;
        write(out_dir.join("transcript.jsonl"), &self.oracle_transcript().to_jsonl())?;
        let mut manifest = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        manifest.push('\n');
        write(out_dir.join("manifest.json"), &manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_and_overlap() {
        let p = GeneratorPools::builtin();
        let a = generate_corpus(&p, 7, 10).unwrap();
        let b = generate_corpus(&p, 12, 10).unwrap();
        assert_eq!(a.documents.len(), 10);
        assert_eq!(a.documents[0].doc_id, "resume-000007");
        assert_eq!(a.documents[5..], b.documents[..5]);
        assert!(matches!(generate_corpus(&p, 0, 0), Err(DatasetError::EmptyCorpus)));
    }

    #[test]
    fn write_and_reload() {
        let p = GeneratorPools::builtin();
        let g = generate_corpus(&p, 7, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        g.write(dir.path(), false).unwrap();
        let loaded = Corpus::load(&dir.path().join("corpus.jsonl")).unwrap();
        assert_eq!(loaded.len(), 3);
        let doc = loaded.document(&loaded.entries[0]).unwrap();
        assert_eq!(
            doc.content,
            crate::text::DocumentContent::Text(g.documents[0].rendered.text.clone())
        );
        let t = Transcript::load(&dir.path().join("transcript.jsonl")).unwrap();
        assert_eq!(t.len(), 3 * ResumeTruth::FIELDS.len());

        assert!(matches!(g.write(dir.path(), false), Err(DatasetError::OutputNotEmpty(_))));
        let before = std::fs::read(dir.path().join("corpus.jsonl")).unwrap();
        g.write(dir.path(), true).unwrap();
        assert_eq!(std::fs::read(dir.path().join("corpus.jsonl")).unwrap(), before);
    }
}
