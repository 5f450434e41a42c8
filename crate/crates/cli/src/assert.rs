//! `--assert` thresholds on an evaluation report: `METRIC OP NUMBER`, where
//! METRIC is `jaccard_mean` or `<field>.<accuracy|precision|recall>` and OP
//! is one of `>=`, `<=`, `>`, `<`, `==`.

use docsift::eval::EvalReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Ge,
    Le,
    Gt,
    Lt,
    Eq,
}

impl Op {
    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Op::Ge => lhs >= rhs,
            Op::Le => lhs <= rhs,
            Op::Gt => lhs > rhs,
            Op::Lt => lhs < rhs,
            Op::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    JaccardMean,
    Field { field: String, metric: Metric },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub source: String,
    pub target: Target,
    pub op: Op,
    pub threshold: f64,
}

/// Outcome of one assertion; `actual` is `None` when the metric is
/// undefined or the field is absent, which counts as a failure.
#[derive(Debug, Clone, PartialEq)]
pub struct Checked {
    pub source: String,
    pub actual: Option<f64>,
    pub passed: bool,
}

impl std::str::FromStr for Assertion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        // Two-character operators first so ">=" is not read as ">".
        const OPS: [(&str, Op); 5] = [
            (">=", Op::Ge),
            ("<=", Op::Le),
            ("==", Op::Eq),
            (">", Op::Gt),
            ("<", Op::Lt),
        ];
        let (pos, token, op) = OPS
            .iter()
            .filter_map(|&(t, op)| s.find(t).map(|p| (p, t, op)))
            .min_by_key(|&(p, t, _)| (p, std::cmp::Reverse(t.len())))
            .ok_or_else(|| format!("{s:?}: expected METRIC OP NUMBER"))?;
        let lhs = s[..pos].trim();
        let rhs = s[pos + token.len()..].trim();
        let threshold: f64 = rhs
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| format!("{s:?}: {rhs:?} is not a number"))?;
        let target = if lhs == "jaccard_mean" {
            Target::JaccardMean
        } else {
            let (field, metric) = lhs
                .rsplit_once('.')
                .ok_or_else(|| format!("{s:?}: expected jaccard_mean or FIELD.METRIC"))?;
            let metric = match metric {
                "accuracy" => Metric::Accuracy,
                "precision" => Metric::Precision,
                "recall" => Metric::Recall,
                m => return Err(format!("{s:?}: unknown metric {m:?}")),
            };
            if field.trim().is_empty() {
                return Err(format!("{s:?}: empty field name"));
            }
            Target::Field {
                field: field.trim().to_string(),
                metric,
            }
        };
        Ok(Assertion {
            source: s.trim().to_string(),
            target,
            op,
            threshold,
        })
    }
}

impl Assertion {
    pub fn check(&self, report: &EvalReport) -> Checked {
        let actual = match &self.target {
            Target::JaccardMean => report.text_similarity.mean_jaccard,
            Target::Field { field, metric } => report.per_field.get(field).and_then(|r| match metric {
                Metric::Accuracy => r.metrics.accuracy,
                Metric::Precision => r.metrics.precision,
                Metric::Recall => r.metrics.recall,
            }),
        };
        Checked {
            source: self.source.clone(),
            actual,
            passed: actual.is_some_and(|v| self.op.holds(v, self.threshold)),
        }
    }
}
