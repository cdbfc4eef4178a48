//! JSON interchange for graphs, tensors, bases, certificates and decomposition results.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::base::{TestTensor, WeightedBase};
use crate::decomposition::{DecompositionResult, Status, StepLog, VerifyReport};
use crate::error::{Error, Result};
use crate::hypergraph::RGraph;
use crate::norm::{CertMode, NormCertificate};
use crate::tensor::{SymTensor, TensorJson};

/// Factor supports of a test tensor: one list of |b|-tuples per base member.
pub type Supports = Vec<Vec<Vec<usize>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub value: f64,
    pub inner: f64,
    pub size: f64,
    pub mode: CertMode,
    pub witness: Supports,
}

impl CertificateJson {
    pub fn from_certificate(c: &NormCertificate) -> Self {
        CertificateJson { value: c.value, inner: c.inner, size: c.size, mode: c.mode, witness: c.witness.supports() }
    }

    pub fn to_certificate(&self, n: usize, base: &WeightedBase) -> Result<NormCertificate> {
        Ok(NormCertificate {
            value: self.value,
            inner: self.inner,
            size: self.size,
            witness: TestTensor::from_supports(n, base.clone(), &self.witness)?,
            mode: self.mode,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub status: Status,
    pub alphas: Vec<f64>,
    pub tests: Vec<Supports>,
    pub budget: f64,
    pub budget_used: f64,
    pub max_steps: u64,
    pub steps: Vec<StepLog>,
    pub residual_norm_certificate: Option<CertificateJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerifyReport>,
}

impl DecompositionJson {
    pub fn from_result(res: &DecompositionResult, verification: Option<VerifyReport>) -> Self {
        DecompositionJson {
            status: res.status,
            alphas: res.alphas.clone(),
            tests: res.tests.iter().map(|t| t.supports()).collect(),
            budget: res.budget,
            budget_used: res.budget_used,
            max_steps: res.max_steps,
            steps: res.steps.clone(),
            residual_norm_certificate: res.residual_certificate.as_ref().map(CertificateJson::from_certificate),
            verification,
        }
    }

    /// Rebuild the in-memory result; residual and structured part are recomputed from A.
    pub fn to_result(&self, a: &SymTensor, base: &WeightedBase, p: f64) -> Result<DecompositionResult> {
        let n = a.n();
        let tests = self
            .tests
            .iter()
            .map(|s| TestTensor::from_supports(n, base.clone(), s))
            .collect::<Result<Vec<_>>>()?;
        let structured = crate::decomposition::assemble(n, a.r(), p, &self.alphas, &tests);
        let mut residual = a.to_dense();
        residual.axpy(-1.0, &structured);
        Ok(DecompositionResult {
            status: self.status,
            alphas: self.alphas.clone(),
            tests,
            residual,
            structured,
            steps: self.steps.clone(),
            budget: self.budget,
            budget_used: self.budget_used,
            max_steps: self.max_steps,
            residual_certificate: self
                .residual_norm_certificate
                .as_ref()
                .map(|c| c.to_certificate(n, base))
                .transpose()?,
        })
    }
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

/// A built-in name (`clique:4:2`, `fano`, …) or a path to hypergraph JSON.
pub fn load_graph(spec: &str) -> Result<RGraph> {
    let path = Path::new(spec);
    if path.is_file() {
        return parse(&read(path)?, "hypergraph JSON");
    }
    RGraph::builtin(spec)
}

pub fn load_tensor(path: &Path) -> Result<SymTensor> {
    let j: TensorJson = parse(&read(path)?, "tensor JSON")?;
    SymTensor::from_json(&j)
}

/// `matrix:Δ`, `star:Δ`, `maximal:r:d*:d_sub`, or a path to base JSON.
pub fn load_base(spec: &str) -> Result<WeightedBase> {
    let path = Path::new(spec);
    if path.is_file() {
        return parse(&read(path)?, "base JSON");
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<u32> { s.parse().map_err(|_| Error::Parse(format!("bad number `{s}` in `{spec}`"))) };
    match parts.as_slice() {
        ["matrix", d] => WeightedBase::matrix(num(d)?),
        ["star", d] => WeightedBase::star(num(d)?),
        ["maximal", r, ds, dsub] => WeightedBase::maximal(num(r)? as usize, num(ds)?, num(dsub)?),
        _ => Err(Error::Parse(format!("`{spec}` is neither a file nor a built-in base"))),
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_pretty(value)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;
    use crate::norm::NormMode;
    use crate::tensor::ErModel;

    #[test]
    fn result_round_trip() {
        let a = ErModel::scalar(6, 2, 0.4).unwrap().sample(3);
        let wb = WeightedBase::matrix(1).unwrap();
        let res = decompose(&a, &wb, 0.4, 0.5, 50.0, NormMode::Exact).unwrap();
        let j = DecompositionJson::from_result(&res, None);
        let text = to_json_pretty(&j).unwrap();
        let back: DecompositionJson = serde_json::from_str(&text).unwrap();
        assert_eq!(j, back);
        let rebuilt = back.to_result(&a, &wb, 0.4).unwrap();
        assert_eq!(rebuilt.tests, res.tests);
        assert!(rebuilt.residual.data.iter().zip(&res.residual.data).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn builtin_bases() {
        assert_eq!(load_base("matrix:2").unwrap(), WeightedBase::matrix(2).unwrap());
        assert!(load_base("bogus").is_err());
        assert!(load_graph("clique:3:2").is_ok());
    }
}
