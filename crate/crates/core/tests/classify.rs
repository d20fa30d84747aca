use twoview::classify::synthetic::{complementary_views, ComplementaryConfig};
use twoview::classify::{repeat_eval, TwoViewConfig};
use twoview::features::TwoViewFeatures;

// With 240 examples the fusion net sees only 80 of them and trails the
// single-view vote by a few points; at 480 the fusion set is large enough.
#[test]
fn duplicated_view_adds_nothing() {
    let design = ComplementaryConfig {
        per_class: 80,
        ..Default::default()
    };
    let data: Vec<TwoViewFeatures> = complementary_views(&design, 21)
        .unwrap()
        .into_iter()
        .map(|f| TwoViewFeatures::new(f.phi_t.clone(), f.phi_t, f.label).unwrap())
        .collect();
    let r = repeat_eval(&data, 6, &TwoViewConfig::default(), 10, 300).unwrap();
    let single = r.summary.t.mean.accuracy;
    let fused = r.summary.fused.mean.accuracy;
    assert_eq!(single, r.summary.s.mean.accuracy);
    assert!(
        (fused - single).abs() <= 0.02,
        "fused {fused} single {single}"
    );
}

#[test]
fn complementary_views_need_both() {
    let data = complementary_views(&ComplementaryConfig::default(), 22).unwrap();
    let r = repeat_eval(&data, 6, &TwoViewConfig::default(), 3, 40).unwrap();
    let s = &r.summary;
    assert!(s.t.mean.accuracy < 0.85 && s.s.mean.accuracy < 0.85);
    assert!(s.fused.mean.accuracy > 0.9);
    assert_eq!(r.repetitions.len(), 3);
    assert_eq!(r.repetitions[2].seed, 42);
}
