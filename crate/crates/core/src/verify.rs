//! Named property suites run by `hyperdev verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::base::{BaseSystem, WeightedBase};
use crate::decomposition::{decompose, exceptional_frequency, verify_result, Status};
use crate::error::{Error, Result};
use crate::homomorphism::{
    counting_lemma_check, counting_pair, finner_bound_check, hom_count, is_sidorenko_candidate, localization_pair,
    quotient_hom_expectation,
};
use crate::hypergraph::{clique, cycle, path, RGraph};
use crate::norm::{dual_norm_exact, NormMode};
use crate::stats::derive_seed;
use crate::tails::{
    convex_entropy_bound_check, fkg_markov_cap, fkg_restriction_check, product_tilt_lower_bound_check,
    random_halfspace, sidorenko_lower_tail_check, HalfSpace,
};
use crate::tensor::{relent_unchecked, DenseTensor, ErModel, SymTensor};
use crate::variational::{solve, SolveOptions, TailProblem};

pub const SUITES: [&str; 5] = ["counting", "norms", "decomposition", "sidorenko", "ldp-bounds"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult { name: name.into(), passed, detail: detail.into() }
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    let checks = match name {
        "counting" => counting_suite(seed)?,
        "norms" => norms_suite(seed)?,
        "decomposition" => decomposition_suite(seed)?,
        "sidorenko" => sidorenko_suite(seed)?,
        "ldp-bounds" => ldp_suite(seed)?,
        _ => {
            return Err(Error::Parameter(format!("unknown suite `{name}`; available: {}", SUITES.join(", "))));
        }
    };
    Ok(SuiteReport { suite: name.into(), seed, passed: checks.iter().all(|c| c.passed), checks })
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Result<SymTensor> {
    let len = n * (n - 1) / 2;
    SymTensor::from_values(n, 2, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// max_{I,J} |1_I^T M 1_J| / ((|I| ∨ n0)(|J| ∨ n0)) by enumerating I and optimizing J per size.
pub fn matrix_norm_bruteforce(m: &DenseTensor, n0: f64) -> f64 {
    let n = m.n;
    let mut best: f64 = 0.0;
    for mask in 1u32..(1 << n) {
        let rows: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let col: Vec<f64> = (0..n).map(|j| rows.iter().map(|&i| m.data[i * n + j]).sum()).collect();
        for sign in [1.0, -1.0] {
            let mut v: Vec<f64> = col.iter().map(|x| sign * x).collect();
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut acc = 0.0;
            for (k, x) in v.iter().enumerate() {
                acc += x;
                let denom = (rows.len() as f64).max(n0) * ((k + 1) as f64).max(n0);
                best = best.max(acc / denom);
            }
        }
    }
    best
}

/// (1/n²) max_{I,J} |1_I^T M 1_J|.
pub fn cut_norm_bruteforce(m: &DenseTensor) -> f64 {
    let n = m.n;
    let mut best: f64 = 0.0;
    for mask in 1u32..(1 << n) {
        let col: Vec<f64> = (0..n).map(|j| (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| m.data[i * n + j]).sum()).collect();
        let pos: f64 = col.iter().filter(|&&x| x > 0.0).sum();
        let neg: f64 = col.iter().filter(|&&x| x < 0.0).sum();
        best = best.max(pos).max(-neg);
    }
    best / (n * n) as f64
}

/// max_I |⟨d_M, 1_I⟩| / (|I| ∨ n0) with d_M the normalized row sums.
pub fn star_norm_formula(m: &DenseTensor, n0: f64) -> f64 {
    let n = m.n;
    let d: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m.data[i * n + j]).sum::<f64>() / n as f64).collect();
    let mut best: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let mut v: Vec<f64> = d.iter().map(|x| sign * x).collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut acc = 0.0;
        for (k, x) in v.iter().enumerate() {
            acc += x;
            best = best.max(acc / ((k + 1) as f64).max(n0));
        }
    }
    best
}

fn counting_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (label, h, n) in [("K3", clique(3, 2)?, 6), ("C4", cycle(4)?, 6)] {
        let sys = BaseSystem::default_for(&h)?;
        let rep = counting_lemma_check(&h, &sys, n, 0.5, 0.5, 24, seed, NormMode::Exact)?;
        out.push(check(
            format!("counting-lemma {label}"),
            rep.violations == 0,
            format!("{} trials, {} violations, max lhs/bound {:.3}", rep.trials, rep.violations, rep.max_ratio),
        ));
    }
    let k3 = clique(3, 2)?;
    let sys = BaseSystem::default_for(&k3)?;
    let (a1, a2) = localization_pair(8, 2, 0.3, seed)?;
    let t = counting_pair(&k3, &sys, &a1, &a2, 0.3, NormMode::Exact, seed, "localization")?;
    out.push(check(
        "counting-lemma localization",
        !t.violated,
        format!("lhs {:.4}, bound {:.4}, distance {:.4}", t.lhs, t.bound, t.distance),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for i in 0..100 {
        let h = [clique(3, 2)?, cycle(4)?, clique(4, 3)?][i % 3].clone();
        let len = crate::combin::binomial(5, h.r()) as usize;
        let z = SymTensor::from_values(5, h.r(), (0..len).map(|_| rng.gen::<f64>()).collect())?;
        if !finner_bound_check(&h, &z)?.holds {
            bad += 1;
        }
    }
    out.push(check("finner", bad == 0, format!("100 trials, {bad} violations")));
    Ok(out)
}

fn norms_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 6;
    let (mut cut_err, mut mat_err, mut star_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10 {
        let m = random_symmetric(&mut rng, n)?.to_dense();
        let cut = dual_norm_exact(&m, &WeightedBase::matrix(2)?, 1.0)?.value;
        cut_err = cut_err.max((cut - cut_norm_bruteforce(&m)).abs());
        let p = 0.5;
        let n0 = n as f64 * p;
        let v = dual_norm_exact(&m, &WeightedBase::matrix(2)?, p)?.value;
        mat_err = mat_err.max((v - matrix_norm_bruteforce(&m, n0)).abs());
        let s = dual_norm_exact(&m, &WeightedBase::star(2)?, p)?.value;
        star_err = star_err.max((s - star_norm_formula(&m, n0)).abs());
    }
    out.push(check("cut norm at p=1", cut_err < 1e-12, format!("max error {cut_err:.2e}")));
    out.push(check("matrix norm at p=1/2", mat_err < 1e-12, format!("max error {mat_err:.2e}")));
    out.push(check("star norm at p=1/2", star_err < 1e-12, format!("max error {star_err:.2e}")));
    let wb = WeightedBase::matrix(2)?;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = random_symmetric(&mut rng, 5)?.to_dense();
        let y = random_symmetric(&mut rng, 5)?.to_dense();
        let mut s = x.clone();
        s.axpy(1.0, &y);
        let (nx, ny, ns) = (
            dual_norm_exact(&x, &wb, 0.4)?.value,
            dual_norm_exact(&y, &wb, 0.4)?.value,
            dual_norm_exact(&s, &wb, 0.4)?.value,
        );
        worst = worst.max(ns - nx - ny);
        let mut sx = x.clone();
        sx.scale(-2.5);
        worst = worst.max((dual_norm_exact(&sx, &wb, 0.4)?.value - 2.5 * nx).abs());
    }
    out.push(check("seminorm", worst <= 1e-12, format!("max excess {worst:.2e}")));
    Ok(out)
}

fn decomposition_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let (n, p, eps) = (8, 0.4, 0.5);
    let wb = WeightedBase::matrix(2)?;
    let model = ErModel::scalar(n, 2, p)?;
    let mut failed = Vec::new();
    for t in 0..5 {
        let a = model.sample(derive_seed(seed, t));
        let res = decompose(&a, &wb, p, eps, 50.0, NormMode::Exact)?;
        let rep = verify_result(&a, &res, &wb, p, eps, 50.0, NormMode::Exact)?;
        if res.status != Status::Converged || !rep.all_pass() {
            failed.push(t);
        }
    }
    out.push(check("verify_result all clauses", failed.is_empty(), format!("failing samples {failed:?}")));
    let kappas = [1e-4, 1e-2, 1.0, 100.0];
    let rates: Vec<_> = kappas
        .iter()
        .map(|&k| exceptional_frequency(&model, &wb, 0.25, k, 6, seed))
        .collect::<Result<_>>()?;
    let mut pathwise = true;
    for w in rates.windows(2) {
        for (a, b) in w[0].outcomes.iter().zip(&w[1].outcomes) {
            if *b == Status::BudgetExhausted && *a != Status::BudgetExhausted {
                pathwise = false;
            }
        }
    }
    let seq: Vec<f64> = rates.iter().map(|r| r.rate).collect();
    out.push(check("exceptional rate nonincreasing in κ", pathwise, format!("rates {seq:?}")));
    Ok(out)
}

fn sidorenko_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let k2 = clique(2, 2)?;
    let cases: Vec<(String, RGraph, f64, f64)> = [0.3, 0.5, 0.7]
        .iter()
        .flat_map(|&p| [0.2, 0.5].iter().map(move |&d| (format!("K2 p={p} δ={d}"), p, d)))
        .map(|(l, p, d)| (l, k2.clone(), p, d))
        .chain([
            ("C4 p=0.5 δ=0.3".to_string(), cycle(4)?, 0.5, 0.3),
            ("P3 p=0.4 δ=0.5".to_string(), path(2)?, 0.4, 0.5),
        ])
        .collect();
    for (label, h, p, d) in cases {
        let rep = sidorenko_lower_tail_check(&h, 5, p, d)?;
        out.push(check(
            format!("lower tail {label}"),
            rep.holds == Some(true),
            format!("LT {:.6} ≥ {:.6}", rep.lt, rep.rhs),
        ));
    }
    let rep = is_sidorenko_candidate(&cycle(4)?, 5, 200, seed)?;
    out.push(check("C4 falsification search", !rep.violation_found(), format!("min ratio {:.4}", rep.min_ratio)));
    Ok(out)
}

fn ldp_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    let mut cases: Vec<Vec<HalfSpace>> = (4..=8).map(|m| vec![HalfSpace { weights: vec![1.0; 10], threshold: m as f64 }]).collect();
    for k in 0..6 {
        let count = 1 + k % 3;
        cases.push(
            (0..count)
                .map(|_| {
                    let level = rng.gen_range(0.4..0.7);
                    random_halfspace(&mut rng, 10, level)
                })
                .collect(),
        );
    }
    for (i, hs) in cases.iter().enumerate() {
        let rep = convex_entropy_bound_check(hs, 5, 2, 0.3)?;
        if !rep.holds {
            bad.push(i);
        }
    }
    out.push(check("convex entropy bound", bad.is_empty(), format!("{} events, failing {bad:?}", cases.len())));

    let k3 = clique(3, 2)?;
    let pr = TailProblem::lower(&k3, 5, 0.5, 0.5)?;
    let cap = fkg_markov_cap(std::slice::from_ref(&k3), 5, 0.5)?;
    let rep = fkg_restriction_check(&pr, cap)?;
    out.push(check(
        "fkg restriction",
        rep.restriction_holds && rep.fkg_holds,
        format!("P(L) {:.6}, P(L∩M) {:.6}, P(M) {:.6}, C {:.3}", rep.p_l, rep.p_lm, rep.p_m, rep.c_cap),
    ));

    let up = TailProblem::upper(&k3, 5, 0.3, 1.0)?;
    let sol = solve(&up, &SolveOptions { seed, ..SolveOptions::default() })?;
    let nu = sol.q.map(|x| x.clamp(1e-6, 1.0 - 1e-6));
    let rep = product_tilt_lower_bound_check(&up, &nu, 10.0)?;
    out.push(check("product tilt", rep.holds, format!("C_min {:.4}", rep.c_min)));

    let mut worst = f64::INFINITY;
    for &p in &[0.01, 0.05, 0.1, 0.2, 0.3, 0.5] {
        for i in 1..=50 {
            let x = (1.0 - p) * i as f64 / 50.0;
            let lhs = relent_unchecked(p, p + x);
            worst = worst.min(lhs - 0.1 * x * x * (1.0 / p).ln());
        }
    }
    out.push(check("relative entropy quadratic bound", worst >= 0.0, format!("min slack {worst:.3e}")));

    let mut bad = 0;
    for i in 0..20 {
        let h = [clique(3, 2)?, cycle(4)?, path(3)?][i % 3].clone();
        let q = SymTensor::from_values(5, 2, (0..10).map(|_| rng.gen::<f64>()).collect())?;
        if quotient_hom_expectation(&h, &q)? < hom_count(&h, &q)? * (1.0 - 1e-12) {
            bad += 1;
        }
    }
    out.push(check("E_Q hom ≥ hom(H,Q)", bad == 0, format!("20 trials, {bad} violations")));
    Ok(out)
}
