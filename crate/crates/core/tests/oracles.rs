mod common;

use hybridnoise::mixture::DEFAULT_GRID_POINTS;
use hybridnoise::{poisson_weight, sample_hybrid, GaussianParams, HybridMixture, PoissonParams};

#[test]
fn poisson_weights_match_exact_rationals() {
    let mut checked = 0;
    for lambda in [0.3, 1.0, 2.0, 3.7, 5.0, 10.0, 20.0, 33.3, 50.0] {
        let p = PoissonParams::new(lambda).unwrap();
        for (i, (lo, hi)) in common::exact_weights(lambda, 100).into_iter().enumerate() {
            if hi < 1e-300 {
                continue;
            }
            let exact = 0.5 * (lo + hi);
            assert!((hi - lo) / exact < 1e-15, "oracle bracket too wide");
            let got = poisson_weight(p, i as u64);
            let rel = (got - exact).abs() / exact;
            assert!(
                rel <= 1e-12,
                "lambda={lambda} i={i}: {got} vs {exact} (rel {rel:.2e})"
            );
            checked += 1;
        }
    }
    assert!(checked > 600);
}

#[test]
fn minimal_components_matches_exact_cumulative_pmf() {
    for lambda in [0.5, 3.0, 7.5, 15.0, 30.0] {
        for eps in [0.5, 0.05, 1e-4, 1e-8] {
            let got =
                hybridnoise::minimal_components(PoissonParams::new(lambda).unwrap(), eps).unwrap();
            assert_eq!(
                got,
                common::exact_minimal_components(lambda, eps),
                "lambda={lambda} eps={eps}"
            );
        }
    }
}

#[test]
fn histogram_matches_density() {
    let n = 1_000_000usize;
    let bins = 512usize;
    for (lambda, sd, order) in [(2.0, 1.0, 20usize), (5.0, 0.5, 20), (10.0, 2.0, 40)] {
        let m = HybridMixture::new(0.0, sd, lambda, order)
            .unwrap()
            .renormalize()
            .unwrap();
        let d = m.default_domain(DEFAULT_GRID_POINTS).unwrap();
        let batch = sample_hybrid(
            GaussianParams::new(0.0, sd).unwrap(),
            PoissonParams::new(lambda).unwrap(),
            n,
            17,
        )
        .unwrap();
        let width = (d.hi() - d.lo()) / bins as f64;
        let mut counts = vec![0usize; bins];
        for v in &batch.values {
            let k = ((v - d.lo()) / width).floor();
            if k >= 0.0 && (k as usize) < bins {
                counts[k as usize] += 1;
            }
        }
        let l1: f64 = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let a = d.lo() + k as f64 * width;
                let mass = m.cdf(a + width) - m.cdf(a);
                (c as f64 / n as f64 - mass).abs()
            })
            .sum();
        assert!(l1 <= 0.02, "lambda={lambda} sd={sd}: L1 {l1:.4}");
    }
}
