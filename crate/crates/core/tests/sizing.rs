use lamg_core::geometry::{shapes, Rng, Vec3};
use lamg_core::mesher;
use lamg_core::sizing::{reference_field, size_from_volume, Normalization, SizingField};
use proptest::prelude::*;

#[test]
fn regular_tet_volume_inverts() {
    for a in [0.1f64, 1.0, 10.0] {
        let v = a.powi(3) / (6.0 * 2f64.sqrt());
        assert!((size_from_volume(v) - a).abs() <= 1e-12 * a, "a = {a}");
    }
}

#[test]
fn reference_field_of_uniform_mesh_is_tight() {
    let b = shapes::cube(1.0);
    let a = 0.1;
    let m = mesher::mesh_uniform(&b, a).unwrap();
    let pts = b.sample_interior(500, &mut Rng::new(2)).unwrap();
    let (f, skipped) = reference_field(&m, &pts);
    assert!(skipped.is_empty());
    let inner: Vec<f64> = (0..f.len()).filter(|&i| f.points[i].amax() < 0.35).map(|i| f.size(i)).collect();
    let (lo, hi) = inner.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &s| (l.min(s), h.max(s)));
    let mean = inner.iter().sum::<f64>() / inner.len() as f64;
    assert!((hi - lo) / mean < 0.3, "spread {lo}..{hi}");
    assert!((mean / a - 1.0).abs() < 0.15, "mean {mean} for size {a}");
}

#[test]
fn points_outside_are_skipped_and_reported() {
    let m = mesher::mesh_uniform(&shapes::cube(1.0), 0.2).unwrap();
    let pts = vec![Vec3::zeros(), Vec3::repeat(3.0), Vec3::new(0.1, 0.1, 0.1)];
    let (f, skipped) = reference_field(&m, &pts);
    assert_eq!(f.len(), 2);
    assert_eq!(skipped, vec![1]);
}

#[test]
fn corpus_normalization_survives_serialization() {
    let corpus = [vec![0.05, 0.2, 0.11], vec![0.03, 0.09]];
    let norm = Normalization::fit(corpus.iter().flatten()).unwrap();
    let json = serde_json::to_string(&norm).unwrap();
    let back: Normalization = serde_json::from_str(&json).unwrap();
    assert_eq!(back, norm);
    let f = SizingField::new(vec![Vec3::zeros(), Vec3::x()], vec![0.04, 0.15]);
    assert_eq!(f.normalize(norm).sizes, f.normalize(back).sizes);
}

fn field_strategy() -> impl Strategy<Value = SizingField> {
    prop::collection::vec(((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 0.01..1.0f64), 1..40)
        .prop_map(|v| SizingField::new(v.iter().map(|(p, _)| Vec3::new(p.0, p.1, p.2)).collect(), v.iter().map(|(_, s)| *s).collect()))
}

proptest! {
    #[test]
    fn interpolation_is_a_convex_combination(f in field_strategy(), x in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)) {
        let s = f.interpolate_size(&Vec3::new(x.0, x.1, x.2));
        prop_assert!(s >= f.min_size() * (1.0 - 1e-12) && s <= f.max_size() * (1.0 + 1e-12));
    }

    #[test]
    fn interpolation_is_exact_at_field_points(f in field_strategy(), i in 0usize..40) {
        let i = i % f.len();
        let p = f.points[i];
        let dup = (0..f.len()).filter(|&j| f.points[j] == p).count();
        prop_assume!(dup == 1);
        prop_assert_eq!(f.interpolate_size(&p), f.size(i));
    }

    #[test]
    fn scaling_composes_exactly(f in field_strategy(), a in 0.1..5.0f64, b in 0.1..5.0f64) {
        prop_assert_eq!(f.scale(a).scale(b).physical_sizes(), f.scale(a * b).physical_sizes());
    }

    #[test]
    fn normalization_round_trips(f in field_strategy()) {
        prop_assume!(f.max_size() - f.min_size() > 1e-6);
        let norm = Normalization::fit(&f.sizes).unwrap();
        let n = f.normalize(norm);
        prop_assert!(n.sizes.iter().all(|&t| (-1e-12..=1.0 + 1e-12).contains(&t)));
        for (a, b) in n.denormalize().sizes.iter().zip(&f.sizes) {
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }
}
