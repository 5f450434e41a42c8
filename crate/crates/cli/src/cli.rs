//! Command-line front end. Results go to stdout (or `--out`); failures are
//! one JSON error line on stderr plus a documented exit code.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use docsift::config::{parse_ocr_adapter, Pipeline, RunConfig};
use docsift::dataset::{generate_corpus, GeneratorPools};
use docsift::eval::{evaluate_corpus, AccuracyRule, Corpus, EvalReport};
use serde::Serialize;

use crate::assert::Assertion;
use crate::ops::{self, exit, OpError};
use crate::service::{self, ServiceOptions};

#[derive(Debug, Parser)]
#[command(name = "docsift", version, about = "Document text extraction and field retrieval")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings layered over the config file and `DOCSIFT_*` variables.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Machine-readable output for every command.
    #[arg(long, global = true)]
    pub json: bool,
    /// OCR adapter: none, glyph-stub or command:<template>.
    #[arg(long, global = true, value_name = "SPEC")]
    pub ocr: Option<String>,
    /// LLM replay transcript (JSONL).
    #[arg(long, global = true, value_name = "PATH")]
    pub transcript: Option<PathBuf>,
    /// Enable or disable the LLM correction stage.
    #[arg(long, global = true, value_name = "BOOL")]
    pub llm_correction: Option<bool>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract text from a document.
    Extract {
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Retrieve field values from a document.
    Retrieve {
        input: PathBuf,
        /// Field query; repeat for several fields.
        #[arg(long = "field", required = true, value_name = "NAME")]
        fields: Vec<String>,
        /// Exit 4 when any field or stage failed.
        #[arg(long)]
        strict: bool,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Score the pipeline on a labelled corpus.
    Evaluate {
        corpus: PathBuf,
        /// Where to write the full JSON report.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
        /// Threshold such as `jaccard_mean>=0.99` or `email.accuracy>=1`.
        #[arg(long = "assert", value_name = "EXPR")]
        asserts: Vec<Assertion>,
        #[arg(long)]
        skip_failures: bool,
        /// Count a field correct when duplicates accompany the true value.
        #[arg(long)]
        lenient: bool,
    },
    /// Write a seeded synthetic resume corpus.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Write into a non-empty directory.
        #[arg(long)]
        force: bool,
        /// Directory with replacement pool files.
        #[arg(long, value_name = "DIR")]
        pools: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// JSONL request log file; `-` for stdout.
        #[arg(long, value_name = "PATH")]
        request_log: Option<PathBuf>,
        #[arg(long, default_value_t = service::DEFAULT_DOC_TTL.as_secs())]
        doc_ttl_secs: u64,
        /// Enable endpoints that read server-side files.
        #[arg(long)]
        local_trust: bool,
    },
}

/// Default, then config file, then environment, then flags.
pub fn load_config(
    global: &GlobalArgs,
    env: impl Fn(&str) -> Option<String>,
) -> Result<RunConfig, OpError> {
    let mut config = match &global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply_env(env)?;
    if let Some(spec) = &global.ocr {
        config.adapters.ocr = parse_ocr_adapter(spec)?;
    }
    if let Some(t) = &global.transcript {
        config.gateway.transcript = Some(t.clone());
    }
    if let Some(on) = global.llm_correction {
        config.stages.llm_correction = on;
    }
    config.validate()?;
    Ok(config)
}

fn io_error(path: &Path, e: std::io::Error) -> OpError {
    OpError::new("io_error", format!("{}: {e}", path.display()), exit::ADAPTER, 500)
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), OpError> {
    let mut json = serde_json::to_string_pretty(value).expect("output serializes");
    json.push('\n');
    emit(&json, out)
}

fn emit(data: &str, out: Option<&Path>) -> Result<(), OpError> {
    match out {
        Some(path) => std::fs::write(path, data).map_err(|e| io_error(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(data.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| io_error(Path::new("<stdout>"), e))
        }
    }
}

fn fmt_ratio(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.2}"))
}

/// Field, technique, accuracy, precision and recall per field.
pub fn summary_table(report: &EvalReport) -> String {
    let width = report.per_field.keys().map(|k| k.len()).max().unwrap_or(5).max(5);
    let mut s = format!(
        "{:<width$}  {:<11}  {:>8}  {:>9}  {:>6}\n",
        "field", "technique", "accuracy", "precision", "recall"
    );
    for (field, r) in &report.per_field {
        s.push_str(&format!(
            "{:<width$}  {:<11}  {:>8}  {:>9}  {:>6}\n",
            field,
            r.technique.map_or("-", |t| t.as_str()),
            fmt_ratio(r.metrics.accuracy),
            fmt_ratio(r.metrics.precision),
            fmt_ratio(r.metrics.recall),
        ));
    }
    s.push_str(&format!(
        "documents: {} ({} failed), mean text jaccard: {}\n",
        report.n_documents,
        report.n_failed,
        report
            .text_similarity
            .mean_jaccard
            .map_or_else(|| "n/a".into(), |v| format!("{v:.4}")),
    ));
    s
}

fn run_evaluate(
    pipeline: &Pipeline,
    json: bool,
    corpus: &Path,
    report_out: Option<&Path>,
    asserts: &[Assertion],
    skip_failures: bool,
    lenient: bool,
) -> Result<i32, OpError> {
    let corpus = Corpus::load(corpus)?;
    let mut options = pipeline.config().evaluation;
    options.skip_failures |= skip_failures;
    if lenient {
        options.accuracy = AccuracyRule::Lenient;
    }
    let report = evaluate_corpus(&corpus, pipeline, options)?;
    if let Some(path) = report_out {
        std::fs::write(path, report.to_json()).map_err(|e| io_error(path, e))?;
    }
    let checked: Vec<_> = asserts.iter().map(|a| a.check(&report)).collect();
    if json {
        if report_out.is_none() {
            emit(&report.to_json(), None)?;
        }
    } else {
        let mut out = summary_table(&report);
        for c in &checked {
            let actual = c.actual.map_or_else(|| "undefined".into(), |v| format!("{v}"));
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("assert {}: {verdict} (actual {actual})\n", c.source));
        }
        emit(&out, None)?;
    }
    let failed: Vec<_> = checked.iter().filter(|c| !c.passed).map(|c| c.source.as_str()).collect();
    if failed.is_empty() {
        Ok(exit::OK)
    } else {
        Err(OpError::new(
            "assertion_failed",
            format!("failed: {}", failed.join(", ")),
            exit::ASSERTION,
            200,
        ))
    }
}

fn run_generate(
    json: bool,
    seed: u64,
    n: u64,
    out: &Path,
    force: bool,
    pools: Option<&Path>,
) -> Result<i32, OpError> {
    let pools = match pools {
        Some(dir) => GeneratorPools::load(dir)?,
        None => GeneratorPools::builtin(),
    };
    let n = usize::try_from(n).map_err(|_| OpError::new("usage", "n is too large", exit::USAGE, 400))?;
    let corpus = generate_corpus(&pools, seed, n)?;
    corpus.write(out, force)?;
    if json {
        emit_json(&corpus.manifest(), None)?;
    } else {
        emit(
            &format!(
                "wrote {} documents (seeds {}..) to {}\n",
                corpus.documents.len(),
                seed,
                out.display()
            ),
            None,
        )?;
    }
    Ok(exit::OK)
}

fn run_serve(
    pipeline: Pipeline,
    bind: &str,
    request_log: Option<&Path>,
    doc_ttl_secs: u64,
    local_trust: bool,
) -> Result<i32, OpError> {
    let startup = |m: String| OpError::new("startup_failed", m, exit::ADAPTER, 500);
    let request_log: Option<Box<dyn Write + Send>> = match request_log {
        None => None,
        Some(p) if p == Path::new("-") => Some(Box::new(std::io::stdout())),
        Some(p) => Some(Box::new(
            std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| io_error(p, e))?,
        )),
    };
    let app = service::router(
        pipeline,
        ServiceOptions {
            doc_ttl: Duration::from_secs(doc_ttl_secs),
            local_trust,
            request_log,
        },
    );
    let runtime = tokio::runtime::Runtime::new().map_err(|e| startup(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| startup(format!("bind {bind}: {e}")))?;
        service::serve(listener, app).await.map_err(|e| startup(e.to_string()))
    })?;
    Ok(exit::OK)
}

pub fn run(cli: Cli) -> Result<i32, OpError> {
    let config = load_config(&cli.global, |k| std::env::var(k).ok())?;
    let pipeline = Pipeline::from_config(config)?;
    let json = cli.global.json;
    match cli.command {
        Command::Extract { input, out } => {
            let doc = ops::read_document(&input)?;
            emit_json(&ops::extract(&pipeline, &doc)?, out.as_deref())?;
            Ok(exit::OK)
        }
        Command::Retrieve {
            input,
            fields,
            strict,
            out,
        } => {
            let doc = ops::read_document(&input)?;
            let items = ops::retrieve(&pipeline, &doc, &fields)?;
            emit_json(&items, out.as_deref())?;
            if strict && items.iter().any(|i| i.has_failure()) {
                return Err(OpError::new(
                    "strict_failure",
                    "a field or cascade stage failed",
                    exit::STRICT,
                    200,
                ));
            }
            Ok(exit::OK)
        }
        Command::Evaluate {
            corpus,
            report,
            asserts,
            skip_failures,
            lenient,
        } => run_evaluate(
            &pipeline,
            json,
            &corpus,
            report.as_deref(),
            &asserts,
            skip_failures,
            lenient,
        ),
        Command::Generate {
            seed,
            n,
            out,
            force,
            pools,
        } => run_generate(json, seed, n, &out, force, pools.as_deref()),
        Command::Serve {
            bind,
            request_log,
            doc_ttl_secs,
            local_trust,
        } => run_serve(pipeline, &bind, request_log.as_deref(), doc_ttl_secs, local_trust),
    }
}

fn report_error(e: &OpError) {
    let line = serde_json::to_string(&e.envelope()).expect("error serializes");
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = emit(&e.to_string(), None);
                    exit::OK
                }
                _ => {
                    report_error(&OpError::new("usage", e.render().to_string().trim_end(), exit::USAGE, 400));
                    exit::USAGE
                }
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            e.exit
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("docsift").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn precedence_flag_over_env_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"stages": {"llm_correction": true}, "adapters": {"ocr": "glyph_stub"}}"#).unwrap();
        let cfg = path.to_str().unwrap();

        let cli = parse(&["--config", cfg, "extract", "x"]);
        let c = load_config(&cli.global, |_| None).unwrap();
        assert!(c.stages.llm_correction);

        let env = |k: &str| (k == "DOCSIFT_LLM_CORRECTION").then(|| "false".to_string());
        let c = load_config(&cli.global, env).unwrap();
        assert!(!c.stages.llm_correction);

        let cli = parse(&["--config", cfg, "--llm-correction", "true", "--ocr", "none", "extract", "x"]);
        let c = load_config(&cli.global, env).unwrap();
        assert!(c.stages.llm_correction);
        assert_eq!(c.adapters.ocr, docsift::config::OcrAdapter::None);
    }

    #[test]
    fn usage_errors() {
        assert!(Cli::try_parse_from(["docsift", "retrieve", "x"]).is_err());
        assert!(Cli::try_parse_from(["docsift", "generate", "--seed", "1", "--n", "0", "--out", "d"]).is_err());
        assert!(Cli::try_parse_from(["docsift", "evaluate", "c", "--assert", "nope"]).is_err());
    }
}
