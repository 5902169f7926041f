mod common;

use std::collections::BTreeMap;

use betacoal::chain::{simulate_chain, ChainTrajectory};
use betacoal::external::{conditional_expected_externals, pi_product, thin_external};
use betacoal::oracle::{simulate_partition_with, OracleTables};
use betacoal::rates::RateCache;
use betacoal::rng::{replicate_seed, replicate_streams, substream};
use betacoal::AlphaParam;
use common::{binomial, chi_square_999, pooled_chi_square};

fn alpha(a: f64) -> AlphaParam {
    AlphaParam::new(a).unwrap()
}

/// Brute-force Hyp(N, M, ν) pmf over h = 0..=ν.
fn hyp_pmf(population: u64, marked: u64, draws: u64) -> Vec<f64> {
    let all = binomial(population, draws);
    (0..=draws)
        .map(|h| {
            if h > marked || draws - h > population - marked {
                0.0
            } else {
                binomial(marked, h) * binomial(population - marked, draws - h) / all
            }
        })
        .collect()
}

#[test]
fn conditional_mean_of_external_counts() {
    let chain = simulate_chain(50, alpha(1.5), &mut substream(2024, 0)).unwrap();
    let expected = conditional_expected_externals(&chain);
    let tau = chain.tau();
    let reps = 100_000;
    let mut sum = vec![0.0; tau];
    let mut sum_sq = vec![0.0; tau];
    let mut rng = substream(2024, 1);
    for _ in 0..reps {
        let ext = thin_external(&chain, &mut rng);
        for k in 0..tau {
            let y = ext.y[k] as f64;
            sum[k] += y;
            sum_sq[k] += y * y;
        }
    }
    for k in 0..tau {
        let mean = sum[k] / reps as f64;
        let var = sum_sq[k] / reps as f64 - mean * mean;
        let se = (var / reps as f64).sqrt();
        // k = 0 and other deterministic steps have zero spread
        let slack = (3.0 * se).max(1e-9);
        assert!(
            (mean - expected[k]).abs() <= slack,
            "k={k}: {mean} vs {} (se {se})",
            expected[k]
        );
    }
}

#[test]
fn pi_products_follow_power_law_for_large_samples() {
    // Π_j^k ≈ ((τ−k)/(τ−j))^{α−1}; a loose diagnostic only.
    let chain = simulate_chain(100_000, alpha(1.5), &mut substream(5, 0)).unwrap();
    let tau = chain.tau();
    let (j, k) = (tau / 10, tau / 2);
    let got = pi_product(&chain, j, k).unwrap();
    let approx = ((tau - k) as f64 / (tau - j) as f64).powf(0.5);
    assert!((got / approx - 1.0).abs() < 0.1, "{got} vs {approx}");
    assert_eq!(pi_product(&chain, k, k).unwrap(), 1.0);
}

#[test]
fn centred_thinning_variance_is_bounded() {
    let chain = simulate_chain(40, alpha(1.3), &mut substream(77, 0)).unwrap();
    let tau = chain.tau();
    let reps = 100_000;
    let mut rng = substream(77, 1);
    // Per step: Σ H̃, Σ H̃², Σ U Y/X, over resamples.
    let mut acc = vec![(0.0f64, 0.0f64, 0.0f64); tau];
    let mut fourth = vec![0.0f64; tau];
    for _ in 0..reps {
        let ext = thin_external(&chain, &mut rng);
        for k in 1..=tau {
            let (x, y, u) = (
                chain.x[k - 1] as f64,
                ext.y[k - 1] as f64,
                chain.u[k - 1] as f64,
            );
            let h = (ext.y[k - 1] - ext.y[k]) as f64;
            let centred = h - u * y / x;
            let a = &mut acc[k - 1];
            a.0 += centred;
            a.1 += centred * centred;
            a.2 += u * y / x;
            fourth[k - 1] += centred.powi(4);
        }
    }
    let r = reps as f64;
    for (k, ((_, sq, bound), q)) in acc.iter().zip(&fourth).enumerate() {
        let second = sq / r;
        let se = ((q / r - second * second) / r).max(0.0).sqrt();
        assert!(
            second <= bound / r + 3.0 * se + 1e-12,
            "step {}: {second} > {}",
            k + 1,
            bound / r
        );
    }
}

#[test]
fn second_thinning_step_matches_hypergeometric() {
    // x = (6, 4, 3, 1): U = (3, 2, 3). After the first merger Y_1 = 3 of the
    // X_1 = 4 blocks are singletons, so H_2 ~ Hyp(4, 3, 2).
    let chain = ChainTrajectory {
        n: 6,
        alpha: alpha(1.5),
        x: vec![6, 4, 3, 1],
        u: vec![3, 2, 3],
        dt: vec![0.1, 0.2, 0.3],
        seed: None,
    };
    chain.validate().unwrap();
    let reps = 100_000;
    let mut rng = substream(31, 1);
    let mut counts = vec![0u64; 3];
    for _ in 0..reps {
        let ext = thin_external(&chain, &mut rng);
        assert_eq!(ext.y[1], 3);
        counts[(ext.y[1] - ext.y[2]) as usize] += 1;
    }
    let (stat, df) = pooled_chi_square(&counts, &hyp_pmf(4, 3, 2));
    assert!(
        stat < chi_square_999(df),
        "chi2 {stat} on {df} df, counts {counts:?}"
    );
}

#[test]
fn oracle_first_thinning_step_is_hypergeometric() {
    // At n = 6 every block starts as a singleton, so H_1 ~ Hyp(6, 6, U_1).
    let a = alpha(1.5);
    let mut tables = OracleTables::new(a);
    let mut counts: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for i in 0..100_000u64 {
        let mut rng = substream(replicate_seed(8, 0, i), 0);
        let run = simulate_partition_with(6, &mut tables, &mut rng, false).unwrap();
        let u1 = run.x[0] - run.x[1] + 1;
        let h1 = run.y[0] - run.y[1];
        counts.entry(u1).or_insert_with(|| vec![0; u1 as usize + 1])[h1 as usize] += 1;
    }
    for (u1, observed) in counts {
        let pmf = hyp_pmf(6, 6, u1);
        if observed.iter().sum::<u64>() < 20 {
            continue;
        }
        let (stat, df) = pooled_chi_square(&observed, &pmf);
        let critical = if df == 0 { 1e-9 } else { chi_square_999(df) };
        assert!(stat <= critical, "U_1={u1}: chi2 {stat}");
    }
}

/// Homogeneity test between two categorical samples.
fn two_sample_chi_square(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> (f64, usize) {
    let (na, nb) = (
        a.values().sum::<u64>() as f64,
        b.values().sum::<u64>() as f64,
    );
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let (mut stat, mut cells) = (0.0, 0);
    let (mut pa, mut pb) = (0.0, 0.0);
    let flush = |oa: f64, ob: f64, stat: &mut f64, cells: &mut usize| {
        let total = oa + ob;
        let (ea, eb) = (total * na / (na + nb), total * nb / (na + nb));
        *stat += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
        *cells += 1;
    };
    for k in keys {
        pa += *a.get(k).unwrap_or(&0) as f64;
        pb += *b.get(k).unwrap_or(&0) as f64;
        if pa + pb >= 20.0 {
            flush(pa, pb, &mut stat, &mut cells);
            pa = 0.0;
            pb = 0.0;
        }
    }
    if pa + pb > 0.0 {
        flush(pa, pb, &mut stat, &mut cells);
    }
    (stat, cells - 1)
}

#[test]
fn joint_block_and_singleton_paths_match_oracle() {
    let a = alpha(1.4);
    let n = 6;
    let reps = 50_000u64;
    let cache = RateCache::new(a, n);
    let mut tables = OracleTables::new(a);
    let mut fast = BTreeMap::new();
    let mut slow = BTreeMap::new();
    for i in 0..reps {
        let (mut chain_rng, mut thin_rng) = replicate_streams(replicate_seed(4, 0, i));
        let chain = betacoal::chain::simulate_chain_with(n, &cache, &mut chain_rng).unwrap();
        let ext = thin_external(&chain, &mut thin_rng);
        *fast
            .entry(format!("{:?}|{:?}", chain.x, ext.y))
            .or_insert(0) += 1;

        let mut rng = substream(replicate_seed(4, 1, i), 0);
        let run = simulate_partition_with(n as u32, &mut tables, &mut rng, false).unwrap();
        *slow.entry(format!("{:?}|{:?}", run.x, run.y)).or_insert(0) += 1;
    }
    let (stat, df) = two_sample_chi_square(&fast, &slow);
    assert!(df >= 5, "too few path classes: {df}");
    assert!(stat < chi_square_999(df), "chi2 {stat} on {df} df");
}
