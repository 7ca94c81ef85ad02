//! Statistical checks of the spacing simulator against the model.

use rankshare::kahan::kahan_sum;
use rankshare::model::expected_share;
use rankshare::montecarlo::{ks_distance, simulate, SimConfig, SimMode};

#[test]
fn pooled_spacings_follow_the_single_spacing_law() {
    // Ranking permutes the spacings of each draw, so pooling every rank's
    // samples recovers the unranked law with CDF 1 - (1 - s)^(N-1).
    let n = 4u32;
    let cfg = SimConfig::new(n, 250_000, 31, SimMode::Continuous).unwrap();
    let emp = simulate(&cfg);
    let mut pooled: Vec<f64> = (1..=n)
        .flat_map(|k| emp.rank_samples(k).iter().copied())
        .collect();
    pooled.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(pooled.len() >= 1_000_000);

    let count = pooled.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in pooled.iter().enumerate() {
        let f = 1.0 - (1.0 - x).powi(n as i32 - 1);
        sup = sup
            .max((f - i as f64 / count).abs())
            .max(((i as f64 + 1.0) / count - f).abs());
    }
    assert!(sup < 0.005, "pooled KS {sup}");
}

#[test]
fn rank_means_sit_within_five_standard_errors() {
    let cfg = SimConfig::new(5, 200_000, 77, SimMode::Continuous).unwrap();
    let emp = simulate(&cfg);
    for k in 1..=5u32 {
        let gap = (emp.mean(k) - expected_share(5, k)).abs();
        let gate = 5.0 * emp.standard_error(k);
        assert!(gap < gate, "rank {k}: |Δmean| {gap} vs 5σ {gate}");
    }
}

#[test]
fn ks_distance_is_small_against_the_model_cdf() {
    let cfg = SimConfig::new(3, 200_000, 13, SimMode::Continuous).unwrap();
    let emp = simulate(&cfg);
    for k in 1..=3u32 {
        let d = ks_distance(&emp, 3, k).unwrap();
        assert!(d < 0.008, "rank {k}: KS {d}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = SimConfig::new(4, 50_000, 2024, SimMode::Continuous).unwrap();
    let wide = simulate(&cfg);
    let narrow = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| simulate(&cfg));
    assert_eq!(wide, narrow);
}

#[test]
fn discrete_mode_mean_shifts_stay_at_grid_scale() {
    // The integer grid biases means by O(1/T); at T = 100 the shift must
    // stay well inside one grid step.
    let cfg = SimConfig::new(4, 200_000, 6, SimMode::Discrete { grid: 100 }).unwrap();
    let emp = simulate(&cfg);
    for k in 1..=4u32 {
        let gap = (emp.mean(k) - expected_share(4, k)).abs();
        assert!(gap < 0.01, "rank {k}: discrete mean gap {gap}");
    }
    let total = kahan_sum((1..=4u32).map(|k| emp.mean(k)));
    assert!((total - 1.0).abs() < 1e-9);
}
