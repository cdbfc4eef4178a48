//! Iterative decomposition A = pJ + Σ α_i T_i + A_rand.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{TestTensor, WeightedBase};
use crate::error::{Error, Result};
use crate::norm::{dual_norm, dual_norm_exact, NormCertificate, NormMode};
use crate::stats::{derive_seed, wilson_interval};
use crate::tensor::{DenseTensor, ErModel, SymTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    BudgetExhausted,
    OracleInconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    /// ⟨R_{k−1}, T_k⟩
    pub inner: f64,
    /// oracle value |⟨R_{k−1},T_k⟩| / ‖T_k‖_B
    pub ratio: f64,
    pub test_size: f64,
    /// ‖T̂_k‖_2
    pub orth_distance: f64,
    /// oracle certified ratio > εp
    pub certified: bool,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub status: Status,
    pub alphas: Vec<f64>,
    pub tests: Vec<TestTensor>,
    pub residual: DenseTensor,
    pub structured: DenseTensor,
    pub steps: Vec<StepLog>,
    pub budget: f64,
    pub budget_used: f64,
    pub max_steps: u64,
    /// final oracle certificate on the residual
    pub residual_certificate: Option<NormCertificate>,
}

/// Σ‖T_i‖_B budget κ ε^{-2} n^r p^{-2}.
pub fn size_budget(n: usize, r: usize, p: f64, eps: f64, kappa: f64) -> f64 {
    kappa * (n as f64).powi(r as i32) / (eps * eps * p * p)
}

/// ⌊1 + κ ε^{-2} p^{-d*-2}⌋
pub fn step_cap(wb: &WeightedBase, p: f64, eps: f64, kappa: f64) -> u64 {
    (1.0 + kappa / (eps * eps) * p.powi(-(wb.d_star() as i32) - 2)).floor().min(u64::MAX as f64) as u64
}

fn check_params(p: f64, eps: f64, kappa: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Parameter(format!("p = {p} must lie in (0,1]")));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Parameter("ε must be positive".into()));
    }
    if kappa.is_nan() || kappa < 0.0 {
        return Err(Error::Parameter("κ must be nonnegative".into()));
    }
    Ok(())
}

struct GramSchmidt {
    hats: Vec<DenseTensor>,
    norms_sq: Vec<f64>,
    /// hat_j = Σ_i u[j][i] T_i
    u: Vec<Vec<f64>>,
}

impl GramSchmidt {
    fn new() -> Self {
        GramSchmidt { hats: Vec::new(), norms_sq: Vec::new(), u: Vec::new() }
    }

    /// Orthogonalize `t` (twice); returns (hat, coefficients in the T basis).
    fn orthogonalize(&self, t: &DenseTensor) -> (DenseTensor, Vec<f64>) {
        let k = self.hats.len();
        let mut hat = t.clone();
        let mut coef = vec![0.0; k + 1];
        coef[k] = 1.0;
        for _ in 0..2 {
            for j in 0..k {
                let beta = hat.dot(&self.hats[j]).expect("same shape") / self.norms_sq[j];
                hat.axpy(-beta, &self.hats[j]);
                for (i, c) in self.u[j].iter().enumerate() {
                    coef[i] -= beta * c;
                }
            }
        }
        (hat, coef)
    }

    fn push(&mut self, hat: DenseTensor, coef: Vec<f64>) {
        self.norms_sq.push(hat.norm2_sq());
        self.hats.push(hat);
        self.u.push(coef);
    }
}

/// Run the decomposition with the given oracle.
pub fn decompose(
    a: &SymTensor,
    wb: &WeightedBase,
    p: f64,
    eps: f64,
    kappa: f64,
    oracle: NormMode,
) -> Result<DecompositionResult> {
    check_params(p, eps, kappa)?;
    if a.r() != wb.r() {
        return Err(Error::ShapeMismatch(format!("tensor has r={}, base has r={}", a.r(), wb.r())));
    }
    let n = a.n();
    let r = a.r();
    let centered = a.map(|x| x - p).to_dense();
    let mut resid = centered.clone();
    let budget = size_budget(n, r, p, eps, kappa);
    let max_steps = step_cap(wb, p, eps, kappa);
    let dim = centered.data.len();
    let threshold = eps * p;
    let mut gs = GramSchmidt::new();
    let mut tests: Vec<TestTensor> = Vec::new();
    let mut proj_coef: Vec<f64> = Vec::new();
    let mut steps = Vec::new();
    let mut used = 0.0;
    let heuristic = matches!(oracle, NormMode::Heuristic { .. });
    let (status, cert) = loop {
        let mode = match oracle {
            NormMode::Exact => NormMode::Exact,
            NormMode::Heuristic { restarts, seed } => {
                NormMode::Heuristic { restarts, seed: derive_seed(seed, steps.len() as u64) }
            }
        };
        let cert = dual_norm(&resid, wb, p, mode)?;
        if cert.value <= threshold {
            let st = if heuristic { Status::OracleInconclusive } else { Status::Converged };
            break (st, Some(cert));
        }
        if used > budget {
            break (Status::BudgetExhausted, Some(cert));
        }
        if tests.len() as u64 >= max_steps {
            break (Status::BudgetExhausted, Some(cert));
        }
        if tests.len() >= dim {
            break (Status::OracleInconclusive, Some(cert));
        }
        let t = cert.witness.to_dense();
        let (hat, coef) = gs.orthogonalize(&t);
        let hat_norm_sq = hat.norm2_sq();
        if hat_norm_sq.sqrt() < 1e-9 * t.norm2_sq().sqrt() {
            break (Status::OracleInconclusive, Some(cert));
        }
        let c = resid.dot(&hat)? / hat_norm_sq;
        resid.axpy(-c, &hat);
        steps.push(StepLog {
            inner: cert.inner,
            ratio: cert.value,
            test_size: cert.size,
            orth_distance: hat_norm_sq.sqrt(),
            certified: true,
        });
        used += cert.size;
        gs.push(hat, coef);
        proj_coef.push(c);
        tests.push(cert.witness);
    };
    let k = tests.len();
    let mut alphas = vec![0.0; k];
    for (c, u) in proj_coef.iter().zip(&gs.u) {
        for (a, x) in alphas.iter_mut().zip(u) {
            *a += c * x;
        }
    }
    let structured = assemble(n, r, p, &alphas, &tests);
    Ok(DecompositionResult {
        status,
        alphas,
        tests,
        residual: resid,
        structured,
        steps,
        budget,
        budget_used: used,
        max_steps,
        residual_certificate: cert,
    })
}

/// pJ + Σ α_i T_i as an ordered-tuple tensor.
pub fn assemble(n: usize, r: usize, p: f64, alphas: &[f64], tests: &[TestTensor]) -> DenseTensor {
    let mut s = SymTensor::constant(n, r, p).expect("valid shape").to_dense();
    for (alpha, t) in alphas.iter().zip(tests) {
        s.axpy(*alpha, &t.to_dense());
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClauseStatus {
    Pass,
    Fail,
    NotClaimed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub status: ClauseStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub clauses: Vec<Clause>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.status != ClauseStatus::Fail)
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

fn clause(name: &str, ok: bool, detail: String) -> Clause {
    Clause { name: name.into(), status: if ok { ClauseStatus::Pass } else { ClauseStatus::Fail }, detail }
}

/// Independently recheck every claim of a decomposition result.
pub fn verify_result(
    a: &SymTensor,
    res: &DecompositionResult,
    wb: &WeightedBase,
    p: f64,
    eps: f64,
    kappa: f64,
    oracle: NormMode,
) -> Result<VerifyReport> {
    check_params(p, eps, kappa)?;
    let n = a.n();
    let r = a.r();
    let nr = (n as f64).powi(r as i32);
    let dense_a = a.to_dense();
    let mut clauses = Vec::new();

    let rebuilt = assemble(n, r, p, &res.alphas, &res.tests);
    let err: f64 = rebuilt
        .data
        .iter()
        .zip(&res.residual.data)
        .zip(&dense_a.data)
        .map(|((s, rr), x)| (s + rr - x).abs())
        .sum();
    clauses.push(clause(
        "reconstruction",
        err <= 1e-9 * nr && res.alphas.len() == res.tests.len(),
        format!("Σ|A_str + A_rand − A| = {err:.3e}"),
    ));

    let budget = size_budget(n, r, p, eps, kappa);
    let sizes: Vec<f64> = res.tests.iter().map(|t| t.size(p)).collect();
    let total: f64 = sizes.iter().sum();
    let before_last: f64 = sizes.iter().take(sizes.len().saturating_sub(1)).sum();
    let budget_ok = match res.status {
        Status::BudgetExhausted => before_last <= budget,
        _ => total <= budget,
    };
    clauses.push(clause("budget", budget_ok, format!("Σ‖T_i‖_B = {total:.6e}, budget = {budget:.6e}")));

    let cap = step_cap(wb, p, eps, kappa);
    clauses.push(clause(
        "step-count",
        res.tests.len() as u64 <= cap,
        format!("k = {}, cap = {cap}", res.tests.len()),
    ));

    let mut gs = GramSchmidt::new();
    let bound = eps * p.powi(1 + wb.d_star() as i32) * nr.sqrt();
    let mut dist_ok = true;
    let mut min_dist = f64::INFINITY;
    for (i, t) in res.tests.iter().enumerate() {
        let (hat, coef) = gs.orthogonalize(&t.to_dense());
        let d = hat.norm2_sq().sqrt();
        if res.steps.get(i).is_some_and(|s| s.certified) {
            min_dist = min_dist.min(d);
            dist_ok &= d >= bound * (1.0 - 1e-9);
        }
        if d > 0.0 {
            gs.push(hat, coef);
        }
    }
    clauses.push(clause(
        "orthogonal-distance",
        dist_ok,
        format!("min ‖T̂‖_2 = {min_dist:.6e}, bound = {bound:.6e}"),
    ));

    let mut worst = 0.0f64;
    for i in 0..gs.hats.len() {
        for j in 0..i {
            let g = gs.hats[i].dot(&gs.hats[j])?.abs() / (gs.norms_sq[i] * gs.norms_sq[j]).sqrt();
            worst = worst.max(g);
        }
    }
    clauses.push(clause("orthogonality", worst < 1e-9, format!("max normalized Gram off-diagonal = {worst:.3e}")));

    let centered = a.map(|x| x - p).to_dense();
    let mut energy = 0.0;
    for (h, nsq) in gs.hats.iter().zip(&gs.norms_sq) {
        let c = centered.dot(h)?;
        energy += c * c / nsq;
    }
    let l1: f64 = res.tests.iter().map(|t| t.l1()).sum();
    clauses.push(clause(
        "projection-energy",
        energy <= l1 * (1.0 + 1e-9) + 1e-9,
        format!("‖P(A−pJ)‖² = {energy:.6e}, Σ‖T_i‖_1 = {l1:.6e}"),
    ));

    let residual_clause = match (res.status, oracle) {
        (Status::Converged, NormMode::Exact) => {
            let c = dual_norm_exact(&res.residual, wb, p)?;
            clause(
                "residual-norm",
                c.value <= eps * p * (1.0 + 1e-9),
                format!("‖A_rand‖_B* = {:.6e}, εp = {:.6e}", c.value, eps * p),
            )
        }
        _ => Clause {
            name: "residual-norm".into(),
            status: ClauseStatus::NotClaimed,
            detail: format!("status {:?} with {:?} oracle makes no residual claim", res.status, oracle),
        },
    };
    clauses.push(residual_clause);
    Ok(VerifyReport { clauses })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalRate {
    pub rate: f64,
    pub exhausted: u64,
    pub trials: u64,
    pub ci95: (f64, f64),
    pub seed: u64,
    /// per-trial outcome, in trial order
    pub outcomes: Vec<Status>,
}

/// Fraction of A ~ μ_p whose decomposition exhausts the budget.
#[allow(clippy::too_many_arguments)]
pub fn exceptional_frequency(
    model: &ErModel,
    wb: &WeightedBase,
    eps: f64,
    kappa: f64,
    trials: u64,
    seed: u64,
) -> Result<ExceptionalRate> {
    let p = match model.density {
        crate::tensor::Density::Scalar(p) => p,
        _ => return Err(Error::Parameter("exceptional frequency needs a scalar density".into())),
    };
    let outcomes: Vec<Status> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let a = model.sample(derive_seed(seed, t));
            decompose(&a, wb, p, eps, kappa, NormMode::Exact).map(|r| r.status)
        })
        .collect::<Result<Vec<_>>>()?;
    let exhausted = outcomes.iter().filter(|s| **s == Status::BudgetExhausted).count() as u64;
    Ok(ExceptionalRate {
        rate: if trials == 0 { 0.0 } else { exhausted as f64 / trials as f64 },
        exhausted,
        trials,
        ci95: wilson_interval(exhausted, trials, 1.96),
        seed,
        outcomes,
    })
}
