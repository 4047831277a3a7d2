//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use common::{normal, random_baseline_f, read_two_columns, rng, spread_project, synthetic_project};
use cpdp_core::corpus::{summarize, DatasetSummary, Project};
use cpdp_core::harness::{run_plan, ExperimentConfig};
use cpdp_core::learner::{gradient, objective, train, LearnerParams};
use cpdp_core::predictors::{
    enumerate_pairs, run_cpdp_pure, run_ifs_min, run_ifs_our, run_mix, EngineParams, Method,
};
use cpdp_core::preprocess::zscore;
use cpdp_core::profile::{characterize_instance, Indicator};
use cpdp_core::stats::{
    cliffs_delta, dpr, wilcoxon_exact_oracle, wilcoxon_signed_rank, wilcoxon_signed_rank_with,
    WilcoxonMethod, WilcoxonOptions,
};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

const CLIFF_TOL: f64 = 1e-12;
const TCA_ASYMPTOTIC_P: f64 = 0.012;
const TCA_ASYMPTOTIC_TOL: f64 = 0.002;
const CPDP_P_BAND: (f64, f64) = (0.02, 0.05);
const DPR_TARGET: f64 = 0.48;
const DPR_TOL: f64 = 0.01;
const FD_REL_TOL: f64 = 1e-5;
const WILCOXON_BRANCH_TOL: f64 = 0.02;
const GRID_TOL: f64 = 1e-3;
const ZSCORE_TOL: f64 = 1e-9;
const SMOKE_SECONDS: f64 = 10.0;
const REPRO_TOL: f64 = 0.10;

type Suite = (&'static str, fn() -> Result<(), String>);
type Criterion = (&'static str, fn() -> Verdict);

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn effect_sizes() -> Verdict {
    let (our, min) = read_two_columns("cpdp_best.csv", "our", "min");
    let a = cliffs_delta(&our, &min).unwrap();
    let (our, min) = read_two_columns("tca_best.csv", "our", "min");
    let b = cliffs_delta(&our, &min).unwrap();
    let (pure, tca) = read_two_columns("pure_vs_tca_best.csv", "pure", "tca");
    let c = cliffs_delta(&pure, &tca).unwrap();
    check(
        (a - 0.5).abs() < CLIFF_TOL
            && (b - 0.78125).abs() < CLIFF_TOL
            && (c + 27.0 / 121.0).abs() < CLIFF_TOL
            && (c - -0.223).abs() < 5e-4,
        format!("d = {a}, {b}, {c:.5}"),
    )
}

fn wilcoxon_golden() -> Verdict {
    let (our, min) = read_two_columns("tca_best.csv", "our", "min");
    let asym = wilcoxon_signed_rank_with(
        &our,
        &min,
        &WilcoxonOptions {
            method: WilcoxonMethod::Asymptotic,
            ..WilcoxonOptions::default()
        },
    )
    .unwrap()
    .p_value;
    let exact = wilcoxon_signed_rank(&our, &min).unwrap().p_value;
    let (our, min) = read_two_columns("cpdp_best.csv", "our", "min");
    let cpdp = wilcoxon_signed_rank(&our, &min).unwrap().p_value;
    check(
        (asym - TCA_ASYMPTOTIC_P).abs() <= TCA_ASYMPTOTIC_TOL
            && exact == 2.0 / 256.0
            && (CPDP_P_BAND.0..=CPDP_P_BAND.1).contains(&cpdp)
            && cpdp < 0.05,
        format!("tca asymptotic {asym:.5}, tca exact {exact}, cpdp {cpdp:.5}"),
    )
}

fn dpr_golden() -> Verdict {
    let summary = |n: usize, d: usize| DatasetSummary {
        instance_count: n,
        defect_count: d,
        defect_ratio: d as f64 / n as f64,
        metric_count: 20,
    };
    let ant = summary(745, 166);
    let xalan = summary(885, 411);
    let v = dpr(&ant, &xalan).unwrap();
    check((v - DPR_TARGET).abs() <= DPR_TOL, format!("ant -> xalan dpr {v:.4}"))
}

fn enumeration() -> Verdict {
    let mk = |name: String, family: &str| synthetic_project(&name, family, "m", 2, 6, 0.5, 1.0, 0);
    let three: Vec<Project> = (0..3).map(|i| mk(format!("p{i}"), "f")).collect();
    let small = enumerate_pairs(&three, Method::CpdpPure).len();
    let mut eleven = Vec::new();
    for (family, size) in [("promise", 3), ("relink", 3), ("aeeem", 5)] {
        eleven.extend((0..size).map(|i| mk(format!("{family}{i}"), family)));
    }
    let within = enumerate_pairs(&eleven, Method::CpdpPure).len();
    let cross = enumerate_pairs(&eleven, Method::IfsOur).len();
    check(
        small == 6 && within == 32 && cross == 110 - 32,
        format!("{small} / {within} within-family, {cross} cross-family"),
    )
}

fn prop_profile() -> Result<(), String> {
    let mut r = rng(501);
    for case in 0..1000 {
        let len = r.random_range(1..60);
        let mut values: Vec<f64> = (0..len).map(|_| 10.0 * normal(&mut r)).collect();
        if case % 5 == 0 {
            for v in values.iter_mut() {
                *v = (*v).round();
            }
        }
        let a = characterize_instance(&values).map_err(|e| e.to_string())?;
        values.shuffle(&mut r);
        let b = characterize_instance(&values).map_err(|e| e.to_string())?;
        let bits = |v: &[f64; 16]| v.map(f64::to_bits);
        if bits(&a.values) != bits(&b.values) {
            return Err(format!("permutation changed vector in case {case}"));
        }
        let g = |i: Indicator| a.get(i);
        let chain = [
            g(Indicator::Min),
            g(Indicator::FirstQuartile),
            g(Indicator::Median),
            g(Indicator::ThirdQuartile),
            g(Indicator::Max),
        ];
        if chain.windows(2).any(|w| w[0] > w[1]) {
            return Err(format!("ordering violated in case {case}: {chain:?}"));
        }
    }
    Ok(())
}

fn prop_zscore() -> Result<(), String> {
    let mut r = rng(502);
    for case in 0..200 {
        let (m, k) = (r.random_range(2..30), r.random_range(1..8));
        let x = DMatrix::from_fn(m, k, |_, _| 5.0 * normal(&mut r) + 3.0);
        let (z, _) = zscore(&x).map_err(|e| e.to_string())?;
        let (zz, _) = zscore(&z).map_err(|e| e.to_string())?;
        if (&zz - &z).amax() > ZSCORE_TOL {
            return Err(format!("not idempotent in case {case}"));
        }
        let scale = 0.1 + 10.0 * r.random::<f64>();
        let shift = 100.0 * normal(&mut r);
        let (za, _) = zscore(&x.map(|v| scale * v + shift)).map_err(|e| e.to_string())?;
        if (&za - &z).amax() > ZSCORE_TOL {
            return Err(format!("not affine invariant in case {case}"));
        }
    }
    Ok(())
}

fn prop_min_equals_pure() -> Result<(), String> {
    let params = EngineParams::default();
    for case in 0..50u64 {
        let k = 2 + (case % 6) as usize;
        let s = synthetic_project("s", "f", "m", k, 40, 0.3, 0.8, 600 + 2 * case);
        let t = synthetic_project("t", "f", "m", k, 30, 0.3, 0.8, 601 + 2 * case);
        let a = run_cpdp_pure(&s, &t, &params).map_err(|e| e.to_string())?;
        let b = run_ifs_min(&s, &t, &params).map_err(|e| e.to_string())?;
        let bits = |v: &Option<Vec<f64>>| v.as_ref().map(|v| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        if a.predicted != b.predicted || bits(&a.probabilities) != bits(&b.probabilities) {
            return Err(format!("outcomes differ in case {case}"));
        }
    }
    Ok(())
}

fn prop_mix_recall() -> Result<(), String> {
    let params = EngineParams::default();
    let mut r = rng(503);
    for case in 0..200u64 {
        let k_same = r.random_range(2..10);
        let k_diff = r.random_range(2..20);
        let ratio = 0.15 + 0.4 * r.random::<f64>();
        let signal = 1.5 * r.random::<f64>();
        let seed = 1000 + 3 * case;
        let same = synthetic_project("same", "a", "m", k_same, 30, ratio, signal, seed);
        let diff = spread_project("diff", "b", "k", k_diff, 30, ratio, signal, seed + 1);
        let target = synthetic_project("target", "a", "m", k_same, 25, ratio, signal, seed + 2);
        let p = run_cpdp_pure(&same, &target, &params).map_err(|e| e.to_string())?;
        let i = run_ifs_our(&diff, &target, &params).map_err(|e| e.to_string())?;
        let m = run_mix(&same, &diff, &target, &params).map_err(|e| e.to_string())?;
        if m.recall < p.recall.max(i.recall) {
            return Err(format!("case {case}: {} < max({}, {})", m.recall, p.recall, i.recall));
        }
    }
    Ok(())
}

fn prop_gradient() -> Result<(), String> {
    let mut r = rng(504);
    for case in 0..100 {
        let (m, k) = (r.random_range(5..40), r.random_range(1..6));
        let x = DMatrix::from_fn(m, k, |_, _| normal(&mut r));
        let y: Vec<bool> = (0..m).map(|_| r.random()).collect();
        let beta = DVector::from_fn(k + 1, |_, _| normal(&mut r));
        let ridge = [0.0, 1e-8, 0.5][case % 3];
        let g = gradient(&x, &y, &beta, ridge);
        for j in 0..=k {
            let h = 1e-5 * (1.0 + beta[j].abs());
            let (mut up, mut down) = (beta.clone(), beta.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (objective(&x, &y, &up, ridge) - objective(&x, &y, &down, ridge)) / (2.0 * h);
            if (fd - g[j]).abs() / g[j].abs().max(1.0) > FD_REL_TOL {
                return Err(format!("case {case} coordinate {j}: {fd} vs {}", g[j]));
            }
        }
    }
    Ok(())
}

fn prop_wilcoxon_branches() -> Result<(), String> {
    let mut r = rng(505);
    let exact = WilcoxonOptions {
        method: WilcoxonMethod::Exact,
        ..WilcoxonOptions::default()
    };
    let asym = WilcoxonOptions {
        method: WilcoxonMethod::Asymptotic,
        ..WilcoxonOptions::default()
    };
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let shift = [0.0, 0.3, 0.8][case % 3];
        let x: Vec<f64> = (0..12).map(|_| normal(&mut r) + shift).collect();
        let y: Vec<f64> = (0..12).map(|_| normal(&mut r)).collect();
        let mut mags: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).collect();
        mags.sort_by(f64::total_cmp);
        if mags.windows(2).any(|w| w[1] - w[0] < 1e-6) || mags[0] < 1e-6 {
            continue;
        }
        let pe = wilcoxon_signed_rank_with(&x, &y, &exact).map_err(|e| e.to_string())?.p_value;
        let pa = wilcoxon_signed_rank_with(&x, &y, &asym).map_err(|e| e.to_string())?.p_value;
        worst = worst.max((pe - pa).abs());
        if (pe - pa).abs() > WILCOXON_BRANCH_TOL {
            return Err(format!("case {case}: exact {pe} vs asymptotic {pa}"));
        }
    }
    println!("      (largest exact/asymptotic gap {worst:.4})");
    Ok(())
}

fn properties() -> Verdict {
    let parts: [Suite; 6] = [
        ("a profile", prop_profile),
        ("b zscore", prop_zscore),
        ("c ifs_min=cpdp_pure", prop_min_equals_pure),
        ("d mix recall", prop_mix_recall),
        ("e gradient", prop_gradient),
        ("f wilcoxon branches", prop_wilcoxon_branches),
    ];
    let mut failed = Vec::new();
    for (name, f) in parts {
        if let Err(e) = f() {
            failed.push(format!("{name}: {e}"));
        }
    }
    check(failed.is_empty(), if failed.is_empty() { "6/6 suites".into() } else { failed.join("; ") })
}

fn grid_search(xs: &[f64], ys: &[bool], ridge: f64) -> (f64, f64) {
    let f = |b0: f64, w: f64| {
        let ll: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let p = 1.0 / (1.0 + (-(b0 + w * x)).exp());
                if *y { p.ln() } else { (1.0 - p).ln() }
            })
            .sum();
        ll - ridge * w * w
    };
    let (mut b0, mut w, mut half) = (0.0, 0.0, 20.0);
    for _ in 0..14 {
        let mut best = (f64::NEG_INFINITY, b0, w);
        for i in -20..=20 {
            for j in -20..=20 {
                let (cb, cw) = (b0 + half * i as f64 / 20.0, w + half * j as f64 / 20.0);
                let v = f(cb, cw);
                if v > best.0 {
                    best = (v, cb, cw);
                }
            }
        }
        (b0, w) = (best.1, best.2);
        half /= 4.0;
    }
    (b0, w)
}

fn oracles() -> Verdict {
    let problems: [(&[f64], &[bool], f64); 3] = [
        (&[0.0, 1.0], &[false, true], 1e-2),
        (&[-2.0, -1.0, -0.5, 0.0, 0.3, 1.0, 1.5, 2.5], &[false, false, true, false, true, false, true, true], 1e-8),
        (&[-1.0, 0.5, 2.0, 3.0, 4.0], &[false, true, false, true, true], 0.3),
    ];
    let mut gap: f64 = 0.0;
    for (xs, ys, ridge) in problems {
        let x = DMatrix::from_column_slice(xs.len(), 1, xs);
        let params = LearnerParams {
            ridge,
            ..LearnerParams::default()
        };
        let model = train(&x, ys, &["x".to_string()], &params).unwrap();
        let (b0, w) = grid_search(xs, ys, ridge);
        gap = gap.max((model.intercept - b0).abs()).max((model.weights[0] - w).abs());
    }

    let mut r = rng(506);
    let mut mismatches = 0;
    for case in 0..600 {
        let n = 2 + case % 11;
        let x: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(-4i32..=4))).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(-4i32..=4))).collect();
        let (Ok(fast), Ok(slow)) = (wilcoxon_signed_rank(&x, &y), wilcoxon_exact_oracle(&x, &y)) else {
            continue;
        };
        if fast.n_pairs <= 12 && fast.p_value.to_bits() != slow.to_bits() {
            mismatches += 1;
        }
    }
    check(
        gap < GRID_TOL && mismatches == 0,
        format!("learner vs grid max gap {gap:.2e}; wilcoxon oracle mismatches {mismatches}"),
    )
}

fn smoke() -> Verdict {
    let start = Instant::now();
    let params = EngineParams::default();
    let source = spread_project("source", "wide", "m", 30, 200, 0.3, 1.0, 1);
    let target = spread_project("target", "narrow", "k", 7, 150, 0.25, 1.0, 2);
    let outcome = run_ifs_our(&source, &target, &params).unwrap();
    let baseline = random_baseline_f(target.labels(), summarize(&target).defect_ratio, 1000, 3);
    let valid = outcome.predicted.len() == target.instance_count()
        && outcome.confusion.total() == target.instance_count()
        && [outcome.precision, outcome.recall, outcome.f_measure]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
        && outcome.probabilities.as_ref().is_some_and(|p| p.len() == target.instance_count());

    let mut wins = 0;
    for seed in 0..20u64 {
        let s = spread_project("source", "wide", "m", 30, 200, 0.3, 1.0, 700 + seed);
        let t = spread_project("target", "narrow", "k", 7, 150, 0.25, 1.0, 800 + seed);
        let o = run_ifs_our(&s, &t, &params).unwrap();
        if o.f_measure > random_baseline_f(t.labels(), summarize(&t).defect_ratio, 1000, seed) {
            wins += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        valid && outcome.f_measure > baseline && wins == 20 && secs < SMOKE_SECONDS,
        format!(
            "f {:.3} vs random {baseline:.3}; {wins}/20 extra seeds beat random; {secs:.2}s",
            outcome.f_measure
        ),
    )
}

/// Published best f-measures of the feature-profile method, by target.
const PUBLISHED_OUR: [(&str, f64); 8] = [
    ("ant", 0.45),
    ("xalan", 0.50),
    ("camel", 0.28),
    ("eclipse", 0.50),
    ("equinox", 0.47),
    ("lucene", 0.51),
    ("mylyn", 0.32),
    ("pde", 0.32),
];

fn full_data() -> Verdict {
    let Ok(path) = std::env::var("CPDP_DATA_CONFIG") else {
        return Verdict::Skip("set CPDP_DATA_CONFIG to a dataset config to run".into());
    };
    let mut config = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    config.methods = vec![Method::IfsOur, Method::IfsMin];
    config.preprocess.log_filter = false;
    config.learner = LearnerParams::default();
    let bundle = match run_plan(&config) {
        Ok(b) => b,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let best = |m: Method| -> BTreeMap<String, f64> {
        bundle
            .best
            .iter()
            .filter(|b| b.method == m)
            .map(|b| (b.target.to_lowercase(), b.f_measure))
            .collect()
    };
    let (our, min) = (best(Method::IfsOur), best(Method::IfsMin));
    let mut within = 0;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (target, published) in PUBLISHED_OUR {
        let (Some(o), Some(m)) = (our.get(target), min.get(target)) else {
            return Verdict::Fail(format!("no best rows for target `{target}`"));
        };
        if (o - published).abs() <= REPRO_TOL {
            within += 1;
        }
        xs.push(*o);
        ys.push(*m);
    }
    let (sum_our, sum_min): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
    let d = cliffs_delta(&xs, &ys).unwrap();
    check(
        within == 8 && sum_our > sum_min && d > 0.0,
        format!("{within}/8 within ±{REPRO_TOL}; sum our {sum_our:.3} vs min {sum_min:.3}; d {d:.3}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 effect-size golden values", effect_sizes),
        ("2 wilcoxon golden values", wilcoxon_golden),
        ("3 dpr golden value", dpr_golden),
        ("4 pair enumeration", enumeration),
        ("5 property suites", properties),
        ("6 oracle equivalence", oracles),
        ("7 end-to-end smoke", smoke),
        ("8 full-data reproduction", full_data),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        match f() {
            Verdict::Pass(d) => println!("PASS  {name}: {d}"),
            Verdict::Skip(d) => println!("SKIP  {name}: {d}"),
            Verdict::Fail(d) => {
                failures += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
