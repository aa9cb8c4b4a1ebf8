//! Statistics checked against frozen high-precision oracles
//! (see `fixtures/gen_oracles.py`) and brute-force reimplementations.

use actorsnote_core::stats::{
    ancova_period2, bh_fdr, bootstrap_ci, cohen_d_independent, fixed_effect_meta, mean_difference, mixed_anova,
    paired_t, pooled_t, t_from_summary, welch_t, wilson_ci, EffectKind, SummaryStats,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;

fn fixture(name: &str) -> Vec<Value> {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    serde_json::from_str(&text).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn f(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap()
}

fn close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol * want.abs().max(1.0),
        "{what}: got {got:e}, want {want:e}"
    );
}

#[test]
fn t_tests_match_oracle() {
    let fixtures = fixture("t_oracle.json");
    assert_eq!(fixtures.len(), 100);
    for (i, fx) in fixtures.iter().enumerate() {
        let a = floats(&fx["a"]);
        let b = floats(&fx["b"]);
        let w = welch_t(&a, &b).unwrap();
        close(w.statistic, f(&fx["welch"], "t"), 1e-9, &format!("#{i} welch t"));
        close(w.df, f(&fx["welch"], "df"), 1e-9, &format!("#{i} welch df"));
        close(w.p_two_sided, f(&fx["welch"], "p"), 1e-9, &format!("#{i} welch p"));
        let p = pooled_t(&a, &b).unwrap();
        close(p.statistic, f(&fx["pooled"], "t"), 1e-9, &format!("#{i} pooled t"));
        close(p.df, f(&fx["pooled"], "df"), 1e-12, &format!("#{i} pooled df"));
        close(p.p_two_sided, f(&fx["pooled"], "p"), 1e-9, &format!("#{i} pooled p"));
        close(cohen_d_independent(&a, &b).unwrap(), f(fx, "d_s"), 1e-9, &format!("#{i} d_s"));

        // Summary-statistic form agrees with the raw-data form.
        let s = t_from_summary(SummaryStats::of(&a), SummaryStats::of(&b), false).unwrap();
        close(s.statistic, w.statistic, 1e-9, &format!("#{i} summary welch"));

        if let Some(pz) = fx["paired"].as_object() {
            let m = a.len().min(b.len());
            let r = paired_t(&a[..m], &b[..m]).unwrap();
            close(r.statistic, pz["t"].as_f64().unwrap(), 1e-9, &format!("#{i} paired t"));
            close(r.df, pz["df"].as_f64().unwrap(), 1e-12, &format!("#{i} paired df"));
            close(r.p_two_sided, pz["p"].as_f64().unwrap(), 1e-9, &format!("#{i} paired p"));
            let dz = r.effect_size.unwrap();
            assert_eq!(dz.kind, EffectKind::DZ);
            close(dz.value, pz["d_z"].as_f64().unwrap(), 1e-9, &format!("#{i} d_z"));
        }
    }
}

#[test]
fn summary_t_rounding_limited_caveat_for_acting_confidence_row() {
    // Printed 0.72 cannot be reached from the 2-dp summaries; within 0.2.
    let r = t_from_summary(
        SummaryStats { mean: 4.76, sd: 1.33, n: 14 },
        SummaryStats { mean: 4.43, sd: 1.28, n: 15 },
        true,
    )
    .unwrap();
    assert_eq!(r.df, 27.0);
    assert!((r.statistic - 0.72).abs() <= 0.2, "t = {}", r.statistic);
    assert!((r.statistic - 0.681).abs() < 0.001);
}

#[test]
fn mixed_anova_matches_oracle() {
    let fixtures = fixture("anova_oracle.json");
    assert_eq!(fixtures.len(), 10);
    for (i, fx) in fixtures.iter().enumerate() {
        let groups: Vec<usize> = fx["groups"].as_array().unwrap().iter().map(|g| g.as_u64().unwrap() as usize).collect();
        let values: Vec<Vec<f64>> = fx["values"].as_array().unwrap().iter().map(floats).collect();
        let t = mixed_anova(&values, &groups).unwrap();
        let n = groups.len() as f64;
        assert_eq!(t.df_group, (1.0, n - 2.0));
        assert_eq!(t.df_time, (2.0, 2.0 * (n - 2.0)));
        assert_eq!(t.df_interaction, (2.0, 2.0 * (n - 2.0)));
        close(t.f_group, f(fx, "f_group"), 1e-6, &format!("#{i} F group"));
        close(t.f_time, f(fx, "f_time"), 1e-6, &format!("#{i} F time"));
        close(t.f_interaction, f(fx, "f_interaction"), 1e-6, &format!("#{i} F interaction"));
        close(t.p_group, f(fx, "p_group"), 1e-6, &format!("#{i} p group"));
        close(t.p_time, f(fx, "p_time"), 1e-6, &format!("#{i} p time"));
        close(t.p_interaction, f(fx, "p_interaction"), 1e-6, &format!("#{i} p interaction"));
        close(t.ss.total, f(fx, "ss_total"), 1e-9, &format!("#{i} SS total"));
        let ss = t.ss;
        let parts = ss.group + ss.subjects + ss.time + ss.interaction + ss.error;
        close(parts, ss.total, 1e-9, &format!("#{i} SS partition"));
    }
}

#[test]
fn twenty_nine_subjects_split_14_15_degrees_of_freedom() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let values: Vec<Vec<f64>> = (0..29).map(|_| (0..3).map(|_| rng.random_range(1.0..7.0)).collect()).collect();
    let groups: Vec<usize> = (0..29).map(|i| usize::from(i >= 14)).collect();
    let t = mixed_anova(&values, &groups).unwrap();
    assert_eq!(t.df_group, (1.0, 27.0));
    assert_eq!(t.df_time, (2.0, 54.0));
}

#[test]
fn ancova_matches_normal_equations_oracle() {
    let fixtures = fixture("ancova_oracle.json");
    assert_eq!(fixtures.len(), 50);
    for (i, fx) in fixtures.iter().enumerate() {
        let fit = ancova_period2(&floats(&fx["outcome"]), &floats(&fx["baseline"]), &floats(&fx["group"])).unwrap();
        let beta = floats(&fx["beta"]);
        let se = floats(&fx["se"]);
        for k in 0..3 {
            close(fit.coefficients[k], beta[k], 1e-8, &format!("#{i} beta{k}"));
            close(fit.se[k], se[k], 1e-8, &format!("#{i} se{k}"));
        }
        close(fit.group.statistic, f(fx, "t"), 1e-8, &format!("#{i} t"));
        close(fit.group.p_two_sided, f(fx, "p"), 1e-8, &format!("#{i} p"));
        assert_eq!(fit.df, f(fx, "df"));
        close(fit.rss, f(fx, "rss"), 1e-8, &format!("#{i} rss"));
        let t = fit.group.statistic;
        let eta = fit.group.effect_size.unwrap();
        assert_eq!(eta.kind, EffectKind::PartialEtaSq);
        close(eta.value, t * t / (t * t + fit.df), 1e-12, &format!("#{i} partial eta"));
    }
}

/// Step-up BH written directly from the definition: q_i is the minimum
/// over every p_j at least as large of p_j * m / rank_j, capped at 1.
fn bh_brute(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut rank = vec![0usize; m];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| rank[j] >= rank[i])
                .map(|j| p[j] * m as f64 / rank[j] as f64)
                .fold(f64::INFINITY, f64::min)
                .min(1.0)
        })
        .collect()
}

#[test]
fn bh_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let m = rng.random_range(1..=50);
        let p: Vec<f64> = (0..m)
            .map(|_| match rng.random_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                2 => (rng.random_range(0..20) as f64) / 20.0,
                _ => rng.random::<f64>().powi(3),
            })
            .collect();
        let q = bh_fdr(&p).unwrap();
        let want = bh_brute(&p);
        for i in 0..m {
            assert!((q[i] - want[i]).abs() <= 1e-12, "{p:?}");
            assert!(q[i] >= p[i] && q[i] <= 1.0);
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        assert!(order.windows(2).all(|w| q[w[0]] <= q[w[1]] + 1e-15));
    }
    assert!(bh_fdr(&[0.01, 0.02, 0.03]).unwrap().iter().all(|q| (q - 0.03).abs() < 1e-15));
    assert!(bh_fdr(&[0.5, 1.2]).is_err());
}

#[test]
fn meta_identities() {
    let single = fixed_effect_meta(&[0.7], &[0.3]).unwrap();
    assert!((single.beta - 0.7).abs() < 1e-12 && (single.se - 0.3).abs() < 1e-12);
    let avg = fixed_effect_meta(&[1.0, 3.0], &[1.0, 1.0]).unwrap();
    assert!((avg.beta - 2.0).abs() < 1e-12);
    for k in 1..=9 {
        let r = fixed_effect_meta(&vec![0.4; k], &vec![0.5; k]).unwrap();
        assert!((r.beta - 0.4).abs() < 1e-12);
        assert!((r.se - 0.5 / (k as f64).sqrt()).abs() < 1e-12);
    }
    assert!(fixed_effect_meta(&[1.0, 2.0], &[1.0, 0.0]).is_err());
}

#[test]
fn wilson_reproduces_edit_rate_interval() {
    let (lo, hi) = wilson_ci(26, 159, 0.95).unwrap();
    assert_eq!(format!("{lo:.3} {hi:.3}"), "0.114 0.229");
    assert_eq!(wilson_ci(0, 10, 0.95).unwrap().0, 0.0);
    assert_eq!(wilson_ci(159, 159, 0.95).unwrap().1, 1.0);
    assert!(wilson_ci(5, 4, 0.95).is_err());
}

#[test]
fn bootstrap_coverage() {
    let na = Normal::new(0.0, 1.0).unwrap();
    let nb = Normal::new(0.5, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let reps = 200;
    let mut covered = 0;
    for r in 0..reps {
        let a: Vec<f64> = (0..30).map(|_| na.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..30).map(|_| nb.sample(&mut rng)).collect();
        let (lo, hi) = bootstrap_ci(mean_difference, &a, &b, 1000, 0.95, r).unwrap();
        if lo <= -0.5 && -0.5 <= hi {
            covered += 1;
        }
    }
    let rate = covered as f64 / reps as f64;
    assert!((0.90..=1.0).contains(&rate), "coverage {rate}");
}

proptest! {
    #[test]
    fn welch_antisymmetric(a in prop::collection::vec(-50.0f64..50.0, 2..20),
                           b in prop::collection::vec(-50.0f64..50.0, 2..20)) {
        if let (Ok(x), Ok(y)) = (welch_t(&a, &b), welch_t(&b, &a)) {
            prop_assert!((x.statistic + y.statistic).abs() <= 1e-9 * x.statistic.abs().max(1.0));
            prop_assert!((x.p_two_sided - y.p_two_sided).abs() <= 1e-12);
        }
    }

    #[test]
    fn wilson_contains_proportion(trials in 1u64..500, frac in 0.0f64..=1.0) {
        let k = ((trials as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_ci(k, trials, 0.95).unwrap();
        let p = k as f64 / trials as f64;
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
    }

    #[test]
    fn ancova_beta_ignores_baseline_shift(seed in 0u64..1000, shift in -100.0f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 12;
        let base: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..7.0)).collect();
        let group: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let y: Vec<f64> = base.iter().zip(&group).map(|(b, g)| 0.5 * b + 0.3 * g + rng.random_range(-1.0..1.0)).collect();
        let shifted: Vec<f64> = base.iter().map(|b| b + shift).collect();
        let a = ancova_period2(&y, &base, &group).unwrap();
        let b = ancova_period2(&y, &shifted, &group).unwrap();
        prop_assert!((a.coefficients[2] - b.coefficients[2]).abs() < 1e-8);
        prop_assert!((a.coefficients[1] - b.coefficients[1]).abs() < 1e-8);
    }

    #[test]
    fn bh_permutation_equivariant(p in prop::collection::vec(0.0f64..=1.0, 1..30), seed in 0u64..100) {
        let mut idx: Vec<usize> = (0..p.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
        let q = bh_fdr(&p).unwrap();
        let qp = bh_fdr(&permuted).unwrap();
        for (k, &i) in idx.iter().enumerate() {
            prop_assert!((qp[k] - q[i]).abs() < 1e-15);
        }
    }
}
