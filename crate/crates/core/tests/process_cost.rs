//! Return-process, cost-curve, metric and batch-file properties.

mod common;

use common::{integrate, mean_var};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scorm::cost::{batch_cost, core_cost, cost_path, fit_theta, total_cost, BatchObservation, CostParams};
use scorm::evt::HpdParams;
use scorm::io::{read_batches, write_batches};
use scorm::metrics::{mse, percent_error};
use scorm::returns::{
    dtmc_simulate, geometric_pmf, sample_inter_arrival, simulate_return_stream, QualitySource, RegimeLabel,
    ReturnSimConfig, TransitionMatrix,
};

fn lag1(xs: &[f64]) -> f64 {
    let (m, v) = mean_var(xs);
    let n = xs.len() as f64;
    let c: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (n - 1.0);
    c / v
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn geometric_partial_sums(p in 0.01f64..1.0, t in 1u64..200) {
        let s: f64 = (1..=t).map(|k| geometric_pmf(k, p).unwrap()).sum();
        prop_assert!((s - (1.0 - (1.0 - p).powi(t as i32))).abs() < 1e-12);
    }

    #[test]
    fn geometric_mean(p in 0.05f64..1.0) {
        let m: f64 = (1..=5000u64).map(|k| k as f64 * geometric_pmf(k, p).unwrap()).sum();
        prop_assert!((m - 1.0 / p).abs() < 1e-8);
    }

    #[test]
    fn cost_bounded_and_decreasing(a0 in 0.0f64..1000.0, theta in 0.01f64..20.0, q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let c_lo = core_cost(lo, a0, theta).unwrap();
        let c_hi = core_cost(hi, a0, theta).unwrap();
        prop_assert!((0.0..=a0).contains(&c_lo) && (0.0..=a0).contains(&c_hi));
        prop_assert!(c_hi <= c_lo);
    }

    #[test]
    fn theta_recovered_from_noiseless_curve(theta in 0.05f64..10.0) {
        let pairs: Vec<(f64, f64)> = (1..40)
            .map(|i| {
                let q = i as f64 / 40.0;
                (q, core_cost(q, 500.0, theta).unwrap())
            })
            .collect();
        let fitted = fit_theta(&pairs, 500.0).unwrap();
        prop_assert!((fitted - theta).abs() < 1e-6, "{fitted}");
    }

    #[test]
    fn mse_scales_quadratically(xs in prop::collection::vec((0.0f64..1000.0, 1.0f64..1000.0), 1..50), c in 0.01f64..100.0) {
        let (p, o): (Vec<f64>, Vec<f64>) = xs.into_iter().unzip();
        let scaled = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
        let base = mse(&p, &o).unwrap();
        prop_assert!((mse(&scaled(&p), &scaled(&o)).unwrap() - c * c * base).abs() <= 1e-9 * (c * c * base).max(1e-9));
        let pt: f64 = p.iter().sum();
        let ot: f64 = o.iter().sum();
        let e = percent_error(pt, ot).unwrap();
        prop_assert!((percent_error(pt * c, ot * c).unwrap() - e).abs() <= 1e-9 * e.max(1.0));
    }

    #[test]
    fn total_cost_is_additive(
        batches in prop::collection::vec((prop::collection::vec(0.0f64..=1.0, 1..10), any::<bool>()), 1..20),
        split in 0usize..20,
    ) {
        let params = CostParams::new(500.0, 0.64, 450.0, 0.76).unwrap();
        let items: Vec<(&[f64], RegimeLabel)> = batches
            .iter()
            .map(|(q, e)| (q.as_slice(), if *e { RegimeLabel::Extreme } else { RegimeLabel::Normal }))
            .collect();
        let k = split.min(items.len());
        let all = total_cost(items.iter().copied(), &params).unwrap();
        let a = total_cost(items[..k].iter().copied(), &params).unwrap();
        let b = total_cost(items[k..].iter().copied(), &params).unwrap();
        prop_assert!((all.total - a.total - b.total).abs() < 1e-8);
        prop_assert!((all.total - all.normal_part - all.extreme_part).abs() < 1e-8);
        let direct: f64 = items.iter().map(|(q, l)| batch_cost(q, &params, *l).unwrap()).sum();
        prop_assert!((all.total - direct).abs() < 1e-8);
    }

    #[test]
    fn cost_paths_are_monotone(costs in prop::collection::vec(0.0f64..5000.0, 1..100)) {
        let pairs: Vec<(u32, f64)> = costs.iter().enumerate().map(|(i, &c)| (i as u32 + 1, c)).collect();
        let path = cost_path(&pairs).unwrap();
        prop_assert!(path.cumulative_cost.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((path.total() - costs.iter().sum::<f64>()).abs() < 1e-6);
    }

    #[test]
    fn batch_csv_round_trip(rows in prop::collection::btree_map(
        1u32..10_000,
        (1u32..1000, any::<bool>(), 0.0f64..=1.0, prop::option::of(0.0f64..1e6), prop::option::of(0.0f64..1e6)),
        0..40,
    )) {
        let batches: Vec<BatchObservation> = rows
            .into_iter()
            .map(|(period, (size, e, q, obs, pred))| BatchObservation {
                period,
                size,
                label: if e { RegimeLabel::Extreme } else { RegimeLabel::Normal },
                mean_quality: q,
                observed_cost: obs,
                predicted_cost: pred,
            })
            .collect();
        let mut buf = Vec::new();
        write_batches(&mut buf, &batches).unwrap();
        let back = read_batches(buf.as_slice(), None).unwrap().batches;
        prop_assert_eq!(back, batches);
    }
}

#[test]
fn inter_arrival_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = 0.11;
    let draws: Vec<f64> = (0..200_000).map(|_| sample_inter_arrival(p, &mut rng).unwrap() as f64).collect();
    let (m, v) = mean_var(&draws);
    let se = (v / draws.len() as f64).sqrt();
    assert!((m - 1.0 / p).abs() < 4.0 * se, "{m}");
}

#[test]
fn bernoulli_regimes_are_uncorrelated() {
    let hpd = HpdParams::new(10.0, 6.0, 20.0, 0.3, 8.0, 0.11).unwrap();
    let q = QualitySource::Beta {
        normal: (5.0, 2.0),
        extreme: (2.0, 2.0),
    };
    let stream = simulate_return_stream(&ReturnSimConfig::new(40_000, hpd, q, 17).unwrap()).unwrap();
    let bits: Vec<f64> = stream.iter().map(|b| b.label.bit() as f64).collect();
    let r = lag1(&bits);
    assert!(r.abs() < 4.0 / (bits.len() as f64).sqrt(), "lag-1 {r}");
    let (m, _) = mean_var(&bits);
    assert!((m - 0.11).abs() < 4.0 * (0.11f64 * 0.89 / 40_000.0).sqrt());
}

#[test]
fn markov_chain_lag1_matches_matrix() {
    let (a, b) = (0.1, 0.3);
    let tm = TransitionMatrix::new([[1.0 - a, a], [b, 1.0 - b]]).unwrap();
    let path = dtmc_simulate(&tm, 200_000, RegimeLabel::Normal, 8).unwrap();
    let bits: Vec<f64> = path.iter().map(|l| l.bit() as f64).collect();
    let r = lag1(&bits);
    assert!((r - (1.0 - a - b)).abs() < 0.01, "{r}");
    let (m, _) = mean_var(&bits);
    assert!((m - a / (a + b)).abs() < 0.01);
}

fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Expected simulated normal-regime batch size: the truncated body mass of
/// each rounding cell, with the clamped end cells absorbing the overflow.
#[test]
fn normal_batch_size_mean_matches_cells() {
    let (mu, sigma, u) = (8.0, 5.0, 20.0);
    let lo = mu - 12.0 * sigma;
    let dens = |x: f64| normal_pdf(x, mu, sigma);
    let mass = integrate(dens, lo, u, 1e-13);
    let top = u.ceil() as u32 - 1;
    let expected: f64 = (1..=top)
        .map(|k| {
            let a = if k == 1 { lo } else { k as f64 - 0.5 };
            let b = if k == top { u } else { k as f64 + 0.5 };
            k as f64 * integrate(dens, a, b, 1e-13) / mass
        })
        .sum();

    let hpd = HpdParams::new(mu, sigma, u, 0.2, 5.0, 0.0).unwrap();
    let q = QualitySource::Empirical {
        normal: vec![0.5],
        extreme: vec![],
    };
    let stream = simulate_return_stream(&ReturnSimConfig::new(50_000, hpd, q, 99).unwrap()).unwrap();
    assert!(stream.iter().all(|b| b.label == RegimeLabel::Normal));
    let sizes: Vec<f64> = stream.iter().map(|b| b.size as f64).collect();
    assert!(sizes.iter().all(|&s| (1.0..=top as f64).contains(&s)));
    let (m, v) = mean_var(&sizes);
    let se = (v / sizes.len() as f64).sqrt();
    assert!((m - expected).abs() < 4.0 * se, "simulated {m}, cells {expected}");
}

#[test]
fn extreme_sizes_stay_above_threshold() {
    let hpd = HpdParams::new(8.0, 5.0, 37.5, -0.3, 20.0, 1.0).unwrap();
    let q = QualitySource::Empirical {
        normal: vec![],
        extreme: vec![0.3, 0.9],
    };
    let stream = simulate_return_stream(&ReturnSimConfig::new(5000, hpd, q, 4).unwrap()).unwrap();
    let endpoint: f64 = 37.5 + 20.0 / 0.3;
    for b in &stream {
        assert!(b.label.is_extreme());
        assert!(b.size >= 38 && (b.size as f64) <= endpoint.round());
        assert_eq!(b.qualities.len(), b.size as usize);
    }
}
