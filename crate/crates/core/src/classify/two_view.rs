//! The two-view protocol: per-view SVMs, fusion of their decision values,
//! and repeated random-split evaluation against single-view baselines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fusion::{FusionConfig, FusionNet};
use super::metrics::Metrics;
use super::split::{default_test_count, make_split, SplitPlan};
use super::standardize::Standardizer;
use super::svm::{svm_train, DistanceKind, SvmModel, SvmParams};
use crate::error::{Error, Result};
use crate::features::TwoViewFeatures;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoViewConfig {
    pub svm: SvmParams,
    pub fusion: FusionConfig,
    /// `None` uses [`default_test_count`].
    pub test_count: Option<usize>,
    pub distance: DistanceKind,
}

impl Default for TwoViewConfig {
    fn default() -> Self {
        Self {
            svm: SvmParams::default(),
            fusion: FusionConfig::default(),
            test_count: None,
            distance: DistanceKind::Functional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoViewModel {
    pub k: usize,
    pub svm_t: SvmModel,
    pub svm_s: SvmModel,
    pub distance: DistanceKind,
    /// Fitted on the fusion-net training inputs.
    pub fusion_standardizer: Standardizer,
    pub net: FusionNet,
    pub split: SplitPlan,
}

impl TwoViewModel {
    /// Standardized `d_T ⊕ d_S`.
    pub fn fusion_input(&self, f: &TwoViewFeatures) -> Result<Vec<f64>> {
        self.fusion_standardizer.apply(&raw_fusion_input(
            &self.svm_t,
            &self.svm_s,
            self.distance,
            f,
        )?)
    }

    pub fn predict(&self, f: &TwoViewFeatures) -> Result<usize> {
        self.net.predict(&self.fusion_input(f)?)
    }

    pub fn evaluate(&self, test: &[TwoViewFeatures]) -> Result<Metrics> {
        let pred = test
            .iter()
            .map(|f| self.predict(f))
            .collect::<Result<Vec<_>>>()?;
        let truth: Vec<usize> = test.iter().map(|f| f.label).collect();
        Metrics::from_predictions(&truth, &pred, self.k)
    }
}

fn raw_fusion_input(
    t: &SvmModel,
    s: &SvmModel,
    kind: DistanceKind,
    f: &TwoViewFeatures,
) -> Result<Vec<f64>> {
    let mut d = t.decision_distances(&f.phi_t, kind)?;
    d.extend(s.decision_distances(&f.phi_s, kind)?);
    Ok(d)
}

fn check_dataset(data: &[TwoViewFeatures], k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid("at least two classes are required"));
    }
    if let Some(f) = data.iter().find(|f| f.label >= k) {
        return Err(Error::invalid(format!(
            "label {} out of range for k = {k}",
            f.label
        )));
    }
    Ok(())
}

fn pick<'a>(data: &'a [TwoViewFeatures], idx: &[usize]) -> Vec<&'a TwoViewFeatures> {
    idx.iter().map(|&i| &data[i]).collect()
}

fn view_svm(
    rows: &[&TwoViewFeatures],
    k: usize,
    params: &SvmParams,
    view: impl Fn(&TwoViewFeatures) -> Vec<f64>,
) -> Result<SvmModel> {
    let x: Vec<Vec<f64>> = rows.iter().map(|f| view(f)).collect();
    let y: Vec<usize> = rows.iter().map(|f| f.label).collect();
    svm_train(&x, &y, k, params)
}

pub fn train_two_view(
    data: &[TwoViewFeatures],
    k: usize,
    config: &TwoViewConfig,
    seed: u64,
) -> Result<TwoViewModel> {
    check_dataset(data, k)?;
    let labels: Vec<usize> = data.iter().map(|f| f.label).collect();
    let test_count = config
        .test_count
        .unwrap_or_else(|| default_test_count(data.len()));
    let split = make_split(&labels, test_count, seed)?;
    train_on_split(data, k, config, split)
}

/// Trains on a given split (the test indices are not touched).
pub fn train_on_split(
    data: &[TwoViewFeatures],
    k: usize,
    config: &TwoViewConfig,
    split: SplitPlan,
) -> Result<TwoViewModel> {
    check_dataset(data, k)?;
    let svm_rows = pick(data, &split.svm_train);
    let svm_t = view_svm(&svm_rows, k, &config.svm, |f| f.phi_t.clone())?;
    let svm_s = view_svm(&svm_rows, k, &config.svm, |f| f.phi_s.clone())?;
    let nn_rows = pick(data, &split.nn_train);
    let raw: Vec<Vec<f64>> = nn_rows
        .iter()
        .map(|f| raw_fusion_input(&svm_t, &svm_s, config.distance, f))
        .collect::<Result<_>>()?;
    let fusion_standardizer = Standardizer::fit(&raw)?;
    let inputs: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| fusion_standardizer.apply(r))
        .collect::<Result<_>>()?;
    let labels: Vec<usize> = nn_rows.iter().map(|f| f.label).collect();
    let net = FusionNet::fit(k, &inputs, &labels, &config.fusion, split.seed)?;
    Ok(TwoViewModel {
        k,
        svm_t,
        svm_s,
        distance: config.distance,
        fusion_standardizer,
        net,
        split,
    })
}

pub fn evaluate(model: &TwoViewModel, test: &[TwoViewFeatures]) -> Result<Metrics> {
    model.evaluate(test)
}

/// Metrics of the four compared classifiers on one random split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub seed: u64,
    /// SVM on the textural view only.
    pub t: Metrics,
    /// SVM on the structural view only.
    pub s: Metrics,
    /// SVM on the concatenated features `T ⊕ S`.
    pub concat: Metrics,
    /// Fusion net on `d_T ⊕ d_S`.
    pub fused: Metrics,
}

pub fn run_repetition(
    data: &[TwoViewFeatures],
    k: usize,
    config: &TwoViewConfig,
    seed: u64,
) -> Result<RepetitionResult> {
    let model = train_two_view(data, k, config, seed)?;
    let test = pick(data, &model.split.test);
    let truth: Vec<usize> = test.iter().map(|f| f.label).collect();
    let score = |m: &SvmModel, view: &dyn Fn(&TwoViewFeatures) -> Vec<f64>| -> Result<Metrics> {
        let pred = test
            .iter()
            .map(|f| m.predict(&view(f)))
            .collect::<Result<Vec<_>>>()?;
        Metrics::from_predictions(&truth, &pred, k)
    };
    let svm_rows = pick(data, &model.split.svm_train);
    let concat_svm = view_svm(&svm_rows, k, &config.svm, TwoViewFeatures::concatenated)?;
    let fused_pred = test
        .iter()
        .map(|f| model.predict(f))
        .collect::<Result<Vec<_>>>()?;
    Ok(RepetitionResult {
        seed,
        t: score(&model.svm_t, &|f| f.phi_t.clone())?,
        s: score(&model.svm_s, &|f| f.phi_s.clone())?,
        concat: score(&concat_svm, &TwoViewFeatures::concatenated)?,
        fused: Metrics::from_predictions(&truth, &fused_pred, k)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f_measure: f64,
}

impl MetricValues {
    fn from_array(v: [f64; 5]) -> Self {
        Self {
            accuracy: v[0],
            precision: v[1],
            recall: v[2],
            specificity: v[3],
            f_measure: v[4],
        }
    }
}

/// Mean and sample standard deviation (0 for a single repetition).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub mean: MetricValues,
    pub std: MetricValues,
}

impl ColumnSummary {
    fn of(ms: &[&Metrics]) -> Self {
        let n = ms.len() as f64;
        let mut mean = [0.0; 5];
        for m in ms {
            for (a, v) in mean.iter_mut().zip(m.values()) {
                *a += v / n;
            }
        }
        let mut var = [0.0; 5];
        if ms.len() > 1 {
            for m in ms {
                for ((a, v), mu) in var.iter_mut().zip(m.values()).zip(mean) {
                    *a += (v - mu) * (v - mu) / (n - 1.0);
                }
            }
        }
        Self {
            mean: MetricValues::from_array(mean),
            std: MetricValues::from_array(var.map(f64::sqrt)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub t: ColumnSummary,
    pub s: ColumnSummary,
    pub concat: ColumnSummary,
    pub fused: ColumnSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub k: usize,
    pub repetitions: Vec<RepetitionResult>,
    pub summary: RepeatSummary,
}

/// Repetition `r` uses seed `base_seed + r`. Repetitions run in parallel and
/// are reported in seed order.
pub fn repeat_eval(
    data: &[TwoViewFeatures],
    k: usize,
    config: &TwoViewConfig,
    repetitions: usize,
    base_seed: u64,
) -> Result<RepeatReport> {
    if repetitions == 0 {
        return Err(Error::invalid("at least one repetition is required"));
    }
    let reps = (0..repetitions as u64)
        .into_par_iter()
        .map(|r| run_repetition(data, k, config, base_seed.wrapping_add(r)))
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&RepetitionResult) -> &Metrics| {
        ColumnSummary::of(&reps.iter().map(f).collect::<Vec<_>>())
    };
    let summary = RepeatSummary {
        t: col(|r| &r.t),
        s: col(|r| &r.s),
        concat: col(|r| &r.concat),
        fused: col(|r| &r.fused),
    };
    Ok(RepeatReport {
        k,
        repetitions: reps,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::synthetic::{complementary_views, ComplementaryConfig};

    #[test]
    fn binary_fusion_input_has_length_two() {
        let design = ComplementaryConfig {
            classes: 2,
            per_class: 30,
            ..Default::default()
        };
        let data = complementary_views(&design, 3).unwrap();
        let cfg = TwoViewConfig {
            fusion: FusionConfig {
                epochs: 50,
                ..Default::default()
            },
            ..Default::default()
        };
        let model = train_two_view(&data, 2, &cfg, 1).unwrap();
        assert_eq!(model.fusion_input(&data[0]).unwrap().len(), 2);
    }

    #[test]
    fn deterministic_and_single_rep_summary() {
        let design = ComplementaryConfig {
            per_class: 20,
            ..Default::default()
        };
        let data = complementary_views(&design, 4).unwrap();
        let cfg = TwoViewConfig {
            fusion: FusionConfig {
                epochs: 200,
                ..Default::default()
            },
            ..Default::default()
        };
        let a = repeat_eval(&data, 6, &cfg, 1, 9).unwrap();
        let b = repeat_eval(&data, 6, &cfg, 1, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.summary.fused.mean.accuracy,
            a.repetitions[0].fused.accuracy
        );
        assert_eq!(a.summary.fused.std.accuracy, 0.0);
    }

    #[test]
    fn rejects_bad_labels() {
        let data = vec![TwoViewFeatures::new(vec![0.0], vec![0.0], 3).unwrap(); 10];
        assert!(train_two_view(&data, 2, &TwoViewConfig::default(), 0).is_err());
        assert!(repeat_eval(&data, 4, &TwoViewConfig::default(), 0, 0).is_err());
    }
}
