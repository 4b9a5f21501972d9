//! JSON persistence of test statistics and their comparison, plus SVG plots.

mod svg;

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::harness::{compare, Band, ComparisonEntry, ComparisonSummary, Role, TestStatistic};
use crate::metrics::MetricDescriptor;
use crate::store::fmt17;

pub use svg::{plot_overview, plot_teststatistic, render_overview, render_teststatistic};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub tool_version: String,
    pub testcase: String,
    pub sampler: String,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub statistics: Vec<TestStatistic>,
    pub comparison: ComparisonSummary,
}

impl ReportDocument {
    /// Assembles a document and computes the comparison from the two sets of
    /// statistics.
    pub fn new(
        testcase: &str,
        sampler: &str,
        seed: u64,
        n: usize,
        reference: Vec<TestStatistic>,
        user: Vec<TestStatistic>,
    ) -> Result<Self> {
        let comparison = compare(&reference, &user)?;
        let m = reference.first().map_or(0, TestStatistic::m);
        let mut statistics = reference;
        statistics.extend(user);
        Ok(Self {
            tool_version: TOOL_VERSION.to_owned(),
            testcase: testcase.to_owned(),
            sampler: sampler.to_owned(),
            seed,
            m,
            n,
            statistics,
            comparison,
        })
    }

    pub fn statistics_for(&self, role: Role) -> Vec<TestStatistic> {
        self.statistics.iter().filter(|s| s.role == role).cloned().collect()
    }

    pub fn statistic(&self, role: Role, metric: &str) -> Option<&TestStatistic> {
        self.statistics.iter().find(|s| s.role == role && s.metric == metric)
    }

    /// Distinct metric names in document order.
    pub fn metric_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for s in &self.statistics {
            if !names.contains(&s.metric) {
                names.push(s.metric.clone());
            }
        }
        names
    }

    /// Concatenates per-batch values of matching statistics and recomputes
    /// every summary. Both documents must describe the same test case, `n`
    /// and set of statistics.
    pub fn merge(&self, other: &ReportDocument) -> Result<ReportDocument> {
        if self.testcase != other.testcase || self.n != other.n {
            return Err(Error::param(format!(
                "cannot merge reports for ({}, n={}) and ({}, n={})",
                self.testcase, self.n, other.testcase, other.n
            )));
        }
        if self.statistics.len() != other.statistics.len() {
            return Err(Error::param("cannot merge reports with different statistics"));
        }
        let merged = self
            .statistics
            .iter()
            .map(|a| {
                let b = other
                    .statistics
                    .iter()
                    .find(|b| b.role == a.role && b.metric == a.metric)
                    .ok_or_else(|| Error::param(format!("second report lacks `{}`", a.metric)))?;
                let mut values = a.values.clone();
                values.extend(&b.values);
                let mut s = TestStatistic::new(&a.testcase, &a.metric, a.arity, a.role, values)?;
                if let (Some(x), Some(y)) = (&a.bandwidths, &b.bandwidths) {
                    s.bandwidths = Some(x.iter().chain(y).copied().collect());
                }
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        let (reference, user): (Vec<_>, Vec<_>) = merged.into_iter().partition(|s| s.role == Role::IidReference);
        let mut doc = ReportDocument::new(&self.testcase, &self.sampler, self.seed, self.n, reference, user)?;
        doc.tool_version = self.tool_version.clone();
        Ok(doc)
    }
}

fn f17<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        let n = serde_json::Number::from_str(&fmt17(*v)).map_err(serde::ser::Error::custom)?;
        n.serialize(s)
    } else {
        s.serialize_none()
    }
}

fn f17_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&F17(*x))?;
    }
    seq.end()
}

fn f17_opt_vec<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => f17_vec(v, s),
        None => s.serialize_none(),
    }
}

struct F17(f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        f17(&self.0, s)
    }
}

#[derive(Serialize, Deserialize)]
struct StatisticRecord {
    role: Role,
    metric: String,
    #[serde(serialize_with = "f17_vec")]
    values: Vec<f64>,
    #[serde(serialize_with = "f17")]
    mean: f64,
    #[serde(serialize_with = "f17")]
    std: f64,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "f17_opt_vec"
    )]
    bandwidths: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ComparisonRecord {
    metric: String,
    #[serde(serialize_with = "f17")]
    z: f64,
    #[serde(serialize_with = "f17")]
    std_ratio: f64,
    band: Band,
    #[serde(serialize_with = "f17")]
    ref_mean: f64,
    #[serde(serialize_with = "f17")]
    ref_std: f64,
    #[serde(serialize_with = "f17")]
    user_mean: f64,
    #[serde(serialize_with = "f17")]
    user_std: f64,
    #[serde(default)]
    degenerate: bool,
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord {
    schema_version: Option<u32>,
    tool_version: String,
    testcase: String,
    sampler: String,
    seed: u64,
    m: usize,
    n: usize,
    statistics: Vec<StatisticRecord>,
    comparison: Vec<ComparisonRecord>,
}

impl From<&ReportDocument> for DocumentRecord {
    fn from(doc: &ReportDocument) -> Self {
        Self {
            schema_version: Some(SCHEMA_VERSION),
            tool_version: doc.tool_version.clone(),
            testcase: doc.testcase.clone(),
            sampler: doc.sampler.clone(),
            seed: doc.seed,
            m: doc.m,
            n: doc.n,
            statistics: doc
                .statistics
                .iter()
                .map(|s| StatisticRecord {
                    role: s.role,
                    metric: s.metric.clone(),
                    values: s.values.clone(),
                    mean: s.mean,
                    std: s.std,
                    bandwidths: s.bandwidths.clone(),
                })
                .collect(),
            comparison: doc
                .comparison
                .entries
                .iter()
                .map(|e| ComparisonRecord {
                    metric: e.metric.clone(),
                    z: e.z,
                    std_ratio: e.std_ratio,
                    band: e.band,
                    ref_mean: e.ref_mean,
                    ref_std: e.ref_std,
                    user_mean: e.user_mean,
                    user_std: e.user_std,
                    degenerate: e.degenerate,
                })
                .collect(),
        }
    }
}

impl TryFrom<DocumentRecord> for ReportDocument {
    type Error = Error;

    fn try_from(r: DocumentRecord) -> Result<Self> {
        match r.schema_version {
            Some(SCHEMA_VERSION) => {}
            Some(v) => return Err(Error::format(None, format!("unknown report schema version {v}"))),
            None => return Err(Error::format(None, "report lacks schema_version")),
        }
        let testcase = r.testcase;
        let statistics = r
            .statistics
            .into_iter()
            .map(|s| TestStatistic {
                testcase: testcase.clone(),
                arity: MetricDescriptor::from_name(&s.metric).arity,
                metric: s.metric,
                role: s.role,
                values: s.values,
                mean: s.mean,
                std: s.std,
                bandwidths: s.bandwidths,
            })
            .collect();
        let entries = r
            .comparison
            .into_iter()
            .map(|c| ComparisonEntry {
                metric: c.metric,
                z: c.z,
                std_ratio: c.std_ratio,
                band: c.band,
                ref_mean: c.ref_mean,
                ref_std: c.ref_std,
                user_mean: c.user_mean,
                user_std: c.user_std,
                degenerate: c.degenerate,
            })
            .collect();
        Ok(Self {
            tool_version: r.tool_version,
            testcase,
            sampler: r.sampler,
            seed: r.seed,
            m: r.m,
            n: r.n,
            statistics,
            comparison: ComparisonSummary { entries },
        })
    }
}

pub fn to_json_string(doc: &ReportDocument) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&DocumentRecord::from(doc))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json_str(text: &str) -> Result<ReportDocument> {
    let record: DocumentRecord = serde_json::from_str(text)?;
    record.try_into()
}

pub fn write_report(doc: &ReportDocument, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json_string(doc)?)?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ReportDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Arity;

    fn doc() -> ReportDocument {
        let r = vec![TestStatistic::new("T", "marginal_mean[0]", Arity::OneSample, Role::IidReference, vec![0.1, -0.2, 1.0 / 3.0]).unwrap()];
        let u = vec![TestStatistic::new("T", "marginal_mean[0]", Arity::OneSample, Role::User, vec![0.3, 0.25, 0.1]).unwrap()];
        ReportDocument::new("T", "mh", 7, 100, r, u).unwrap()
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let d = doc();
        let text = to_json_string(&d).unwrap();
        assert!(text.contains("\"schema_version\": 1"));
        assert!(text.contains("3.3333333333333331e-1"));
        assert_eq!(from_json_str(&text).unwrap(), d);
    }

    #[test]
    fn schema_version_is_checked() {
        let text = to_json_string(&doc()).unwrap();
        let missing = text.replace("\"schema_version\": 1,", "");
        assert!(matches!(from_json_str(&missing), Err(Error::Format { .. })));
        let future = text.replace("\"schema_version\": 1", "\"schema_version\": 99");
        assert!(matches!(from_json_str(&future), Err(Error::Format { .. })));
        assert!(from_json_str("{").is_err());
    }

    #[test]
    fn merge_concatenates_values() {
        let d = doc();
        let merged = d.merge(&d).unwrap();
        assert_eq!(merged.m, 6);
        let r = merged.statistic(Role::IidReference, "marginal_mean[0]").unwrap();
        assert_eq!(r.values.len(), 6);
        assert_eq!(merged.comparison.entries.len(), 1);
    }
}
