#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use docsift::dataset::{generate_corpus, GeneratedCorpus, GeneratorPools};
use serde_json::Value;

pub fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::compile(&value).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn assert_valid(name: &str, instance: &Value) {
    let s = schema(name);
    let msgs: Vec<String> = match s.validate(instance) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{name} rejects output: {msgs:?}\n{instance:#}");
}

pub fn docsift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docsift"))
        .args(args)
        .env_remove("DOCSIFT_GATEWAY_MODE")
        .env_remove("DOCSIFT_TRANSCRIPT")
        .env_remove("DOCSIFT_OCR")
        .env_remove("DOCSIFT_LLM_CORRECTION")
        .env_remove("DOCSIFT_RASTERIZER")
        .output()
        .unwrap()
}

pub fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

/// The single stderr line of a failed run, checked against the error schema.
pub fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {text}");
    let v: Value = serde_json::from_str(lines[0]).unwrap();
    assert_valid("error.schema.json", &v);
    v
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub corpus: GeneratedCorpus,
}

impl Fixture {
    pub fn new(seed: u64, n: usize) -> Self {
        let corpus = generate_corpus(&GeneratorPools::builtin(), seed, n).unwrap();
        let dir = tempfile::tempdir().unwrap();
        corpus.write(dir.path(), false).unwrap();
        Self { dir, corpus }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn arg(&self, rel: &str) -> String {
        self.path(rel).to_str().unwrap().to_string()
    }

    pub fn doc(&self, i: usize) -> String {
        self.arg(&format!("docs/{}.txt", self.corpus.documents[i].doc_id))
    }
}
