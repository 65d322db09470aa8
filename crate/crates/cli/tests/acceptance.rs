//! Acceptance suite: one test per release criterion, each printing a
//! single PASS/FAIL line (visible with `--nocapture`). Criteria with time
//! budgets take a shared gate so measurements are not distorted by other
//! tests on the same cores.

use calib_cli::presets;
use calib_core::{
    bounds, build_band, build_band_at_delta, lower_bound, make_pair_set, make_ranked_sample,
    pava, quantile_bin, upper_bound, yang_barber_band, Band, BoundQuery, BoundSide, DispersedObs,
    EdfFamily, PairStrategy, RankedSample,
};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::sync::Mutex;
use std::time::Instant;

static GATE: Mutex<()> = Mutex::new(());

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

// -------------------------------------------------------------------------
// 1. Closed form / bisection / brute-force oracle agreement over >= 500
//    queries spanning all six families, within 60 seconds.
// -------------------------------------------------------------------------
#[test]
fn criterion_1_bound_agreement() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let grid_size = 100_000;
    let deltas = [0.001, 0.025, 0.25, 0.49];
    let ratios = [0.5, 1.0, 5.0, 50.0];

    let mut queries: Vec<BoundQuery> = Vec::new();
    for &delta in &deltas {
        for &m in &ratios {
            // Count families: z must sit on the atoms c / m.
            for &c in &[0.0, 1.0, 2.0, 7.0, 23.0, 61.0] {
                queries.push(BoundQuery::new(EdfFamily::Poisson, c / m, m, 1.0, delta));
                queries.push(BoundQuery::new(EdfFamily::NegBinomial, c / m, m, 1.0, delta));
            }
            // Binomial needs an integer trial count; m = 1/2 is skipped.
            if m >= 1.0 {
                let counts: &[f64] = if m == 1.0 {
                    &[0.0, 1.0]
                } else if m == 5.0 {
                    &[0.0, 1.0, 3.0, 5.0]
                } else {
                    &[0.0, 7.0, 31.0, 50.0]
                };
                for &c in counts {
                    queries.push(BoundQuery::new(EdfFamily::Binomial, c / m, m, 1.0, delta));
                }
            }
            for &z in &[0.02, 0.4, 1.0, 3.7, 25.0, 140.0] {
                queries.push(BoundQuery::new(EdfFamily::Gamma, z, m, 1.0, delta));
                queries.push(BoundQuery::new(EdfFamily::InverseGaussian, z, m, 1.0, delta));
            }
            for &z in &[-3.2, -0.5, 0.0, 1.4, 8.0, 100.0] {
                queries.push(BoundQuery::new(EdfFamily::Normal, z, m, 1.0, delta));
            }
        }
    }
    let n_queries = queries.len();
    assert!(n_queries >= 500, "only {n_queries} queries");

    let failures: Vec<String> = queries
        .par_iter()
        .flat_map_iter(|q| {
            let mut local = Vec::new();
            for side in [BoundSide::Lower, BoundSide::Upper] {
                let fast = match side {
                    BoundSide::Lower => lower_bound(q),
                    BoundSide::Upper => upper_bound(q),
                }
                .unwrap();
                // Closed forms against the generic bisection path.
                if q.family != EdfFamily::InverseGaussian {
                    let bis =
                        bounds::bisect_bound(q.family, q.z, q.v / q.phi, q.delta, side).unwrap();
                    let scale = fast.abs().max(bis.abs()).max(1.0);
                    let agree = if fast.is_finite() && bis.is_finite() {
                        (fast - bis).abs() <= 1e-8 * scale
                    } else {
                        fast == bis
                    };
                    if !agree {
                        local.push(format!(
                            "{:?} {side:?} z={} m={} d={}: closed {fast} vs bisect {bis}",
                            q.family, q.z, q.v, q.delta
                        ));
                    }
                }
                // Definition-level grid oracle.
                let slow = bounds::brute_force_bound(q, side, grid_size).unwrap();
                let step = bounds::oracle_grid_step(q, grid_size, slow);
                let (g_lo, g_hi) = bounds::oracle_grid_range(q, grid_size);
                let ok = if slow <= g_lo * (1.0 + 1e-12) + f64::MIN_POSITIVE && slow <= g_lo + step
                {
                    fast <= g_lo + step
                } else if slow >= g_hi - step {
                    !(fast < g_hi - step)
                } else {
                    (fast - slow).abs() <= step * 1.500001 + 1e-8
                };
                if !ok {
                    local.push(format!(
                        "{:?} {side:?} z={} m={} d={}: fast {fast} vs oracle {slow} (step {step})",
                        q.family, q.z, q.v, q.delta
                    ));
                }
            }
            local
        })
        .collect();

    let elapsed = start.elapsed().as_secs_f64();
    report(
        "1 bound-agreement",
        failures.is_empty() && elapsed <= 60.0,
        &format!(
            "{n_queries} queries, {} disagreements, {elapsed:.1}s (budget 60s){}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    );
}

// -------------------------------------------------------------------------
// 2. Tail quantile ratio between 2000-bin and 50-bin full pair sets.
// -------------------------------------------------------------------------
#[test]
fn criterion_2_quantile_ratio() {
    let a = calib_core::special::quantile_std_normal(0.05 / 4_002_000.0).unwrap();
    let b = calib_core::special::quantile_std_normal(0.05 / 2_550.0).unwrap();
    let ratio = a.abs() / b.abs();
    report(
        "2 quantile-ratio",
        (ratio - 1.355).abs() <= 0.002,
        &format!("|q(0.05/4002000)| / |q(0.05/2550)| = {ratio:.6}, target 1.355 +/- 0.002"),
    );
}

// -------------------------------------------------------------------------
// 3. Simultaneous coverage on the normal preset: n = 200, 500 reps,
//    alpha = 0.05, full pairs; all-means-inside fraction >= 0.95.
// -------------------------------------------------------------------------
#[test]
fn criterion_3_simultaneous_coverage() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let reps = 500u64;
    let covered: u64 = (0..reps)
        .into_par_iter()
        .map(|rep| {
            presets::example1_rep(200, 0.05, PairStrategy::Full, 0xC0FFEE, rep)
                .unwrap()
                .covered as u64
        })
        .sum();
    let frac = covered as f64 / reps as f64;
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "3 simultaneous-coverage",
        frac >= 0.95 && elapsed <= 600.0,
        &format!("coverage {covered}/{reps} = {frac:.3} (need >= 0.95), {elapsed:.1}s (budget 600s)"),
    );
}

// -------------------------------------------------------------------------
// 4. The normal full band sits inside the Yang-Barber band, every index,
//    100 seeded instances (n = 50, sigma = 1), slack 1e-12.
// -------------------------------------------------------------------------
#[test]
fn criterion_4_yang_barber_dominance() {
    let mut violations = 0usize;
    let mut checked = 0usize;
    for inst in 0..100u64 {
        let mut r = rng(0xBEEF ^ inst);
        let n = 50;
        let ys: Vec<f64> = (0..n)
            .map(|i| i as f64 * 0.08 + r.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let obs: Vec<DispersedObs> = ys.iter().map(|&y| DispersedObs::new(y, 1.0)).collect();
        let ranks: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let s = make_ranked_sample(obs, ranks, 1.0, EdfFamily::Normal).unwrap();
        let pairs = make_pair_set(PairStrategy::Full, &s, None).unwrap();
        let ours = build_band(&s, &pairs, 0.05).unwrap();
        let yb = yang_barber_band(&ys, 1.0, 0.05).unwrap();
        for i in 0..n {
            checked += 2;
            if ours.lower[i] < yb.lower[i] - 1e-12 {
                violations += 1;
            }
            if ours.upper[i] > yb.upper[i] + 1e-12 {
                violations += 1;
            }
        }
    }
    report(
        "4 yang-barber-dominance",
        violations == 0,
        &format!("{violations}/{checked} edge comparisons violated (slack 1e-12)"),
    );
}

// -------------------------------------------------------------------------
// 5. Power reproduction at desk scale: 100 reps of n = 1000 gamma
//    responses, alpha = 0.05, raw and merged-by-level variants.
// -------------------------------------------------------------------------
#[test]
fn criterion_5_power_reproduction() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let reps = 100u64;
    let power = presets::example5_power(1000, 0.05, reps, 0x5EED).unwrap();
    let rate = |x: u64| x as f64 / reps as f64;
    let margin = |a: f64, b: f64| {
        3.0 * ((a * (1.0 - a) / reps as f64) + (b * (1.0 - b) / reps as f64)).sqrt()
    };

    let null_rate = rate(power.raw_global[0]);
    let raw_shift1 = rate(power.raw_global[2]);
    let binned_half = rate(power.binned_global[1]);
    let r10 = rate(power.binned_local[0][1]);
    let r13 = rate(power.binned_local[1][1]);
    let r15 = rate(power.binned_local[2][1]);

    let a = null_rate <= 0.08;
    let b = raw_shift1 >= 0.95;
    let c = binned_half >= 0.90;
    let d = r13 >= r10 - margin(r13, r10) && r10 >= r15 - margin(r10, r15);
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "5 power-reproduction",
        a && b && c && d && elapsed <= 900.0,
        &format!(
            "null {null_rate:.2} (<=0.08: {a}), raw d=1 {raw_shift1:.2} (>=0.95: {b}), \
             binned d=0.5 {binned_half:.2} (>=0.90: {c}), binned d=1 ordering 13:{r13:.2} >= \
             10:{r10:.2} >= 15:{r15:.2} within 3 SE ({d}), {elapsed:.0}s (budget 900s)"
        ),
    );
}

// -------------------------------------------------------------------------
// 6. PAVA equals exhaustive block-partition minimization, 1000 instances.
// -------------------------------------------------------------------------
#[test]
fn criterion_6_pava_oracle() {
    fn exhaustive(y: &[f64], w: &[f64]) -> Vec<f64> {
        let n = y.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0..(1u32 << (n - 1)) {
            let mut fit = vec![0.0; n];
            let mut i = 0;
            while i < n {
                let mut j = i;
                while j + 1 < n && mask & (1 << j) == 0 {
                    j += 1;
                }
                let (mut swy, mut sw) = (0.0, 0.0);
                for t in i..=j {
                    swy += w[t] * y[t];
                    sw += w[t];
                }
                let mean = swy / sw;
                for slot in &mut fit[i..=j] {
                    *slot = mean;
                }
                i = j + 1;
            }
            if fit.windows(2).any(|p| p[0] > p[1] + 1e-12) {
                continue;
            }
            let cost: f64 = (0..n).map(|t| w[t] * (y[t] - fit[t]).powi(2)).sum();
            match &best {
                Some((c, _)) if *c <= cost => {}
                _ => best = Some((cost, fit)),
            }
        }
        best.unwrap().1
    }

    let mut worst: f64 = 0.0;
    let mut r = rng(0x15071);
    for _ in 0..1000 {
        let n = r.random_range(1..=8);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| r.random_range(0.05..4.0)).collect();
        let fit = pava(&y, &w).unwrap();
        let oracle = exhaustive(&y, &w);
        for (a, b) in fit.fitted.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    report(
        "6 pava-oracle",
        worst <= 1e-12,
        &format!("max |pava - exhaustive| = {worst:.2e} over 1000 instances (tol 1e-12)"),
    );
}

// -------------------------------------------------------------------------
// 7. Monotonicity and nesting property suites, 200 seeded instances each.
// -------------------------------------------------------------------------

fn random_sample(r: &mut ChaCha12Rng, family: EdfFamily, n: usize, phi: f64) -> RankedSample {
    let (ys, vs): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|_| match family {
            EdfFamily::Binomial => {
                let m: f64 = *[1.0, 2.0, 5.0].choose(r).unwrap();
                let c = r.random_range(0..=(m as u64)) as f64;
                (c / m, m * phi)
            }
            EdfFamily::Poisson | EdfFamily::NegBinomial => {
                let m: f64 = *[1.0, 2.0].choose(r).unwrap();
                let c = r.random_range(0..8) as f64;
                (c / m, m * phi)
            }
            EdfFamily::Normal => (r.random_range(-4.0..4.0), r.random_range(0.3..3.0)),
            _ => (r.random_range(0.05..6.0), r.random_range(0.3..3.0)),
        })
        .unzip();
    let ranks: Vec<f64> = (0..n).map(|i| (i / 2) as f64).collect();
    let obs = ys
        .iter()
        .zip(&vs)
        .map(|(&y, &v)| DispersedObs::new(y, v))
        .collect();
    make_ranked_sample(obs, ranks, phi, family).unwrap()
}

#[test]
fn criterion_7_property_suites() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let families = EdfFamily::ALL;
    let mut violations: Vec<String> = Vec::new();

    // (i) delta-monotone single-aggregate bounds.
    let mut r = rng(0x7001);
    for inst in 0..200 {
        let family = families[inst % 6];
        let m: f64 = *[0.5, 1.0, 4.0, 20.0].choose(&mut r).unwrap();
        let z = match family {
            EdfFamily::Binomial => {
                if m < 1.0 {
                    0.0
                } else {
                    r.random_range(0..=(m as u64)) as f64 / m
                }
            }
            EdfFamily::Poisson | EdfFamily::NegBinomial => r.random_range(0..9) as f64 / m,
            EdfFamily::Normal => r.random_range(-4.0..4.0),
            _ => r.random_range(0.05..8.0),
        };
        let mut prev_l = f64::NEG_INFINITY;
        let mut prev_u = f64::INFINITY;
        for delta in [0.002, 0.01, 0.05, 0.2, 0.4] {
            let q = BoundQuery::new(family, z, m, 1.0, delta);
            let l = lower_bound(&q).unwrap();
            let u = upper_bound(&q).unwrap();
            if l < prev_l - 1e-9 * prev_l.abs().max(1.0) {
                violations.push(format!("(i) lower not nondecreasing: {family:?} z={z} m={m}"));
            }
            if u > prev_u + 1e-9 * prev_u.abs().max(1.0) {
                violations.push(format!("(i) upper not nonincreasing: {family:?} z={z} m={m}"));
            }
            if delta < 0.5 && l > u + 1e-9 {
                violations.push(format!("(i) crossed at delta<1/2: {family:?} z={z} m={m}"));
            }
            prev_l = l;
            prev_u = u;
        }
    }

    // (ii) pair-set nesting at fixed delta: a larger set never widens.
    let mut r = rng(0x7002);
    for inst in 0..200 {
        let family = [EdfFamily::Normal, EdfFamily::Poisson, EdfFamily::Gamma][inst % 3];
        let n = r.random_range(3..30);
        let s = random_sample(&mut r, family, n, 1.0);
        let small = make_pair_set(PairStrategy::Nbh(r.random_range(0..3)), &s, None).unwrap();
        let full = make_pair_set(PairStrategy::Full, &s, None).unwrap();
        let delta = 0.01;
        let narrow = build_band_at_delta(&s, &full, delta).unwrap();
        let wide = build_band_at_delta(&s, &small, delta).unwrap();
        for i in 0..n {
            if narrow.lower[i] < wide.lower[i] - 1e-10
                || narrow.upper[i] > wide.upper[i] + 1e-10
            {
                violations.push(format!("(ii) nesting violated: {family:?} n={n} i={i}"));
            }
        }
    }

    // (iii) band edges non-decreasing along the ranking.
    let mut r = rng(0x7003);
    for inst in 0..200 {
        let family = families[inst % 6];
        let n = if family == EdfFamily::InverseGaussian {
            r.random_range(2..14)
        } else {
            r.random_range(2..25)
        };
        let phi = *[0.5, 1.0, 1.5].choose(&mut r).unwrap();
        let s = random_sample(&mut r, family, n, phi);
        let pairs = make_pair_set(PairStrategy::Full, &s, None).unwrap();
        let band = build_band(&s, &pairs, 0.1).unwrap();
        if band.lower.windows(2).any(|w| w[0] > w[1]) || band.upper.windows(2).any(|w| w[0] > w[1])
        {
            violations.push(format!("(iii) edges not monotone: {family:?} n={n}"));
        }
    }

    // (iv) fast sweep equals the naive double loop exactly, n up to 200.
    let mut r = rng(0x7004);
    for inst in 0..200 {
        let family = families[inst % 6];
        let n = match family {
            EdfFamily::InverseGaussian => r.random_range(2..40),
            _ => {
                if inst % 5 == 0 {
                    r.random_range(100..=200)
                } else {
                    r.random_range(2..60)
                }
            }
        };
        let s = random_sample(&mut r, family, n, 1.0);
        let strategy = if inst % 2 == 0 {
            PairStrategy::Full
        } else {
            PairStrategy::Nbh(r.random_range(0..n))
        };
        let pairs = make_pair_set(strategy, &s, None).unwrap();
        let alpha = 0.1;
        let band = build_band(&s, &pairs, alpha).unwrap();

        let delta = alpha / (2.0 * pairs.size() as f64);
        let pair_list = pairs.pairs();
        let vals: Vec<(usize, usize, f64, f64)> = pair_list
            .par_iter()
            .map(|&(j, k)| {
                let q = BoundQuery::new(family, s.z(j, k), s.volume(j, k), s.phi, delta);
                (j, k, lower_bound(&q).unwrap(), upper_bound(&q).unwrap())
            })
            .collect();
        let space = family.mean_space();
        let ranks = s.rank_values();
        for i in 0..n {
            let mut best_l = f64::NEG_INFINITY;
            let mut best_u = f64::INFINITY;
            for &(j, k, l, u) in &vals {
                if ranks[k] <= ranks[i] && l > best_l {
                    best_l = l;
                }
                if ranks[j] >= ranks[i] && u < best_u {
                    best_u = u;
                }
            }
            let want_l = if best_l == f64::NEG_INFINITY { space.0 } else { best_l };
            let want_u = if best_u == f64::INFINITY { space.1 } else { best_u };
            let same_l = band.lower[i] == want_l
                || (band.lower[i].is_infinite()
                    && want_l.is_infinite()
                    && band.lower[i].signum() == want_l.signum());
            let same_u = band.upper[i] == want_u
                || (band.upper[i].is_infinite()
                    && want_u.is_infinite()
                    && band.upper[i].signum() == want_u.signum());
            if !same_l || !same_u {
                violations.push(format!(
                    "(iv) sweep != naive: {family:?} n={n} i={i}: ({}, {}) vs ({want_l}, {want_u})",
                    band.lower[i], band.upper[i]
                ));
            }
        }
    }

    report(
        "7 property-suites",
        violations.is_empty(),
        &format!(
            "800 instances across 4 properties, {} violations{}",
            violations.len(),
            violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    );
}

// -------------------------------------------------------------------------
// 8. Dispersion-estimate insensitivity for the inverse Gaussian preset:
//    true phi = 1.26 versus the Pearson estimate, middle 90% of ranks.
// -------------------------------------------------------------------------
#[test]
fn criterion_8_dispersion_insensitivity() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let rep = presets::example3_rep(1000, 0.05, 1.26, 0xD15, 0).unwrap();
    report(
        "8 dispersion-insensitivity",
        rep.max_rel_gap_mid90 <= 0.15,
        &format!(
            "max relative band-edge gap (middle 90%) = {:.4} (threshold 0.15); \
             pearson {:.3}, deviance {:.3}, mle {:.3} vs true 1.26",
            rep.max_rel_gap_mid90, rep.phi_pearson, rep.phi_deviance, rep.phi_mle
        ),
    );
}

// -------------------------------------------------------------------------
// 9. Full-pair-set normal band for n = 2000 within 30 seconds on a single
//    worker.
// -------------------------------------------------------------------------
#[test]
fn criterion_9_performance() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let n = 2000usize;
    let mut r = rng(0x9001);
    let mus: Vec<f64> = (0..n)
        .map(|i| 1500.0 + i as f64 / (n as f64 - 1.0) * 1000.0)
        .collect();
    let obs: Vec<DispersedObs> = mus
        .iter()
        .map(|&mu| {
            let sd = 0.5 * mu;
            let y = mu + sd * r.sample::<f64, _>(rand_distr::StandardNormal);
            DispersedObs::new(y, 1.0 / (sd * sd))
        })
        .collect();
    let s = make_ranked_sample(obs, mus, 1.0, EdfFamily::Normal).unwrap();

    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let band: Band = pool.install(|| {
        let pairs = make_pair_set(PairStrategy::Full, &s, None).unwrap();
        build_band(&s, &pairs, 0.05).unwrap()
    });
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(band.len(), n);
    report(
        "9 performance",
        elapsed <= 30.0,
        &format!("n=2000 full band, single worker: {elapsed:.2}s (budget 30s)"),
    );
}

// -------------------------------------------------------------------------
// Supporting check: binned bands still evaluate through the same pipeline
// (quantile binning preserves totals and the band machinery accepts the
// aggregates).
// -------------------------------------------------------------------------
#[test]
fn binned_pipeline_smoke() {
    let mut r = rng(0xB1);
    let n = 400;
    let mus: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / 50.0).collect();
    let ys: Vec<f64> = mus
        .iter()
        .map(|&mu| mu + 0.3 * r.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    let obs: Vec<DispersedObs> = ys.iter().map(|&y| DispersedObs::new(y, 1.0)).collect();
    let s = make_ranked_sample(obs, mus.clone(), 0.09, EdfFamily::Normal).unwrap();
    let b = quantile_bin(&s, &mus, 40).unwrap();
    let obs2: Vec<DispersedObs> = b
        .y_tilde
        .iter()
        .zip(&b.v_tilde)
        .map(|(&y, &v)| DispersedObs::new(y, v))
        .collect();
    let s2 = make_ranked_sample(obs2, b.mu_tilde.clone(), 0.09, EdfFamily::Normal).unwrap();
    let pairs = make_pair_set(PairStrategy::Full, &s2, None).unwrap();
    let band = build_band(&s2, &pairs, 0.05).unwrap();
    let report = calib_core::test_calibration(&band, &b.mu_tilde, s2.rank_values()).unwrap();
    assert!(!report.rejected(), "well-specified binned run should not reject");
}
