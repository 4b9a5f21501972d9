//! Scores Monte Carlo samples against IID draws from analytic targets.
//!
//! Every metric is evaluated on `m` batches of `n` samples, both for fresh
//! IID draws and for the sampler under test. The user distribution of each
//! metric is then placed on the reference distribution in units of its
//! standard deviation.
//!
//! ```
//! use samplebench::{harness, metrics::Metric, samplers, samplers::MhConfig, targets};
//!
//! let target = targets::lookup("Normal-1D").unwrap();
//! let metrics: Vec<Metric> = vec!["mean".parse().unwrap(), "swd:L=10".parse().unwrap()];
//! let mh = samplers::metropolis_hastings(&target, &MhConfig::new(4_000, 1.0, 3)).unwrap();
//! let user = mh.collapse_repeats();
//! let reference = harness::build_teststatistic_iid(&target, &metrics, 5, 100, 1).unwrap();
//! let theirs = harness::build_teststatistic_user(&target, &metrics, 5, 100, &user, 1).unwrap();
//! let summary = harness::compare(&reference, &theirs).unwrap();
//! assert_eq!(summary.entries.len(), 2);
//! ```

pub mod error;
pub mod harness;
pub mod metrics;
pub mod report;
pub mod samplers;
pub mod seed;
pub mod store;
pub mod targets;

pub use error::{Error, Result};
pub use harness::{Band, ComparisonEntry, ComparisonSummary, Role, TestStatistic};
pub use metrics::Metric;
pub use report::ReportDocument;
pub use samplers::MhConfig;
pub use store::SampleBatch;
pub use targets::TargetSpec;
