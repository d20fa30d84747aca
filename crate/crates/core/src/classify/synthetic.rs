//! Synthetic two-view data where each view separates groups of classes and
//! only the combination of views identifies the class.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TwoViewFeatures;
use crate::seed;

/// Classes are paired differently in each view: view T groups `{0,1},{2,3},…`
/// and view S groups `{1,2},{3,4},…,{k−1,0}`. Each view has a group
/// coordinate (groups `separation` apart) and a within-group coordinate
/// where the two members sit at `±offset` with unit Gaussian noise, so a
/// single view tells the pair members apart with probability `Φ(offset)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementaryConfig {
    pub classes: usize,
    pub per_class: usize,
    pub separation: f64,
    pub offset: f64,
}

impl Default for ComplementaryConfig {
    fn default() -> Self {
        Self {
            classes: 6,
            per_class: 40,
            separation: 10.0,
            // Φ(0.674) ≈ 0.75
            offset: 0.674,
        }
    }
}

pub fn complementary_views(
    design: &ComplementaryConfig,
    seed_value: u64,
) -> Result<Vec<TwoViewFeatures>> {
    let k = design.classes;
    if k < 2 || !k.is_multiple_of(2) || design.per_class == 0 {
        return Err(Error::invalid(
            "need an even number of classes >= 2 and per_class >= 1",
        ));
    }
    let mut rng = seed::rng(seed::derive(seed_value, seed::stage::SYNTH));
    let mut noise = move || -> f64 { StandardNormal.sample(&mut rng) };
    let mut out = Vec::with_capacity(k * design.per_class);
    for i in 0..k * design.per_class {
        let c = i % k;
        let t_member = c;
        let s_member = (c + k - 1) % k;
        let mut view = |member: usize| {
            let group = (member / 2) as f64;
            let side = if member.is_multiple_of(2) { -1.0 } else { 1.0 };
            vec![
                design.separation * group + noise(),
                side * design.offset + noise(),
            ]
        };
        let phi_t = view(t_member);
        let phi_s = view(s_member);
        out.push(TwoViewFeatures::new(phi_t, phi_s, c)?);
    }
    Ok(out)
}
