//! Per-view SVMs, the fusion network, and the evaluation protocol.

mod fusion;
mod metrics;
mod split;
mod standardize;
mod svm;
pub mod synthetic;
mod two_view;

pub use fusion::{fusion_forward, fusion_train, FusionConfig, FusionNet, Layer, HIDDEN1, HIDDEN2};
pub use metrics::Metrics;
pub use split::{default_test_count, make_split, SplitPlan};
pub use standardize::Standardizer;
pub use svm::{
    dual_objective, smo_solve, svm_decision_distances, svm_predict, svm_train, BinarySvm,
    DistanceKind, DualSolution, Kernel, KernelChoice, SvmModel, SvmParams,
};
pub use two_view::{
    evaluate, repeat_eval, run_repetition, train_on_split, train_two_view, ColumnSummary,
    MetricValues, RepeatReport, RepeatSummary, RepetitionResult, TwoViewConfig, TwoViewModel,
};
