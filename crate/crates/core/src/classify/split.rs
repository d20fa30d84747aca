use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

const MAX_ATTEMPTS: usize = 100;

/// Three disjoint index sets; each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub svm_train: Vec<usize>,
    pub nn_train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Test-set size used when none is given: 40 for 240 examples, otherwise
/// `⌈n/6⌉`, the same proportion.
pub fn default_test_count(n: usize) -> usize {
    if n == 240 {
        40
    } else {
        n.div_ceil(6)
    }
}

/// Random split: `⌊n/2⌋` for the SVMs, `test_count` for testing, the rest
/// for the fusion net. The permutation is redrawn (up to 100 times) until
/// every class occurring in `labels` appears in the SVM split.
pub fn make_split(labels: &[usize], test_count: usize, seed_value: u64) -> Result<SplitPlan> {
    let n = labels.len();
    if test_count == 0 || n < test_count + 4 {
        return Err(Error::invalid(format!(
            "cannot split {n} examples with {test_count} test examples (need n >= test + 4)"
        )));
    }
    let svm = n / 2;
    if svm + test_count >= n {
        return Err(Error::invalid(format!(
            "{n} examples leave no fusion-net data after {svm} SVM and {test_count} test examples"
        )));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = seed::rng(seed::derive(seed_value, seed::stage::SPLIT));
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_ATTEMPTS {
        perm.shuffle(&mut rng);
        let covered = classes
            .iter()
            .all(|c| perm[..svm].iter().any(|&i| labels[i] == *c));
        if covered {
            let sorted = |s: &[usize]| {
                let mut v = s.to_vec();
                v.sort_unstable();
                v
            };
            return Ok(SplitPlan {
                svm_train: sorted(&perm[..svm]),
                test: sorted(&perm[svm..svm + test_count]),
                nn_train: sorted(&perm[svm + test_count..]),
                seed: seed_value,
            });
        }
    }
    Err(Error::invalid(format!(
        "no split with every class in the SVM training set after {MAX_ATTEMPTS} draws"
    )))
}
