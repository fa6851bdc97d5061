//! JSON problem manifests.
//!
//! Schema: `{name, H, c, A_eq, b_eq, A_ineq, b_ineq, lb, ub, kinds, c0}`.
//! Matrices are paths to Matrix Market files (resolved relative to the
//! manifest) or inline `{nrows, ncols, entries}` objects; vectors are inline
//! JSON arrays or paths to single-column Matrix Market files. Bounds accept
//! the strings `"inf"` / `"-inf"`. Every field except one of H/c is optional:
//! missing constraint groups are empty, missing bounds are free, missing kinds
//! are continuous. Binary kinds force bounds onto [0, 1]. Unknown keys are
//! rejected.

use super::matrix_market::{load_matrix_market, write_matrix_market};
use super::{Lcqp, SparseMatrix, VarKind};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, rename = "H", skip_serializing_if = "Option::is_none")]
    pub h: Option<MatrixSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<VectorSource>,
    #[serde(default, rename = "A_eq", skip_serializing_if = "Option::is_none")]
    pub a_eq: Option<MatrixSource>,
    #[serde(default, rename = "b_eq", skip_serializing_if = "Option::is_none")]
    pub b_eq: Option<VectorSource>,
    #[serde(default, rename = "A_ineq", skip_serializing_if = "Option::is_none")]
    pub a_ineq: Option<MatrixSource>,
    #[serde(default, rename = "b_ineq", skip_serializing_if = "Option::is_none")]
    pub b_ineq: Option<VectorSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lb: Option<VectorSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ub: Option<VectorSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinds: Option<KindsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Path(String),
    Inline { nrows: usize, ncols: usize, entries: Vec<(usize, usize, f64)> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSource {
    Path(String),
    Inline(Vec<BoundValue>),
}

/// A number, or the literal strings "inf" / "-inf".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundValue {
    Num(f64),
    Word(String),
}

impl BoundValue {
    fn to_f64(&self) -> Result<f64> {
        match self {
            BoundValue::Num(v) => Ok(*v),
            BoundValue::Word(w) if w == "inf" => Ok(f64::INFINITY),
            BoundValue::Word(w) if w == "-inf" => Ok(f64::NEG_INFINITY),
            BoundValue::Word(w) => {
                Err(Error::InvalidArgument(format!("bad vector element '{w}' (want number, \"inf\" or \"-inf\")")))
            }
        }
    }

    fn from_f64(v: f64) -> BoundValue {
        if v == f64::INFINITY {
            BoundValue::Word("inf".into())
        } else if v == f64::NEG_INFINITY {
            BoundValue::Word("-inf".into())
        } else {
            BoundValue::Num(v)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KindsSpec {
    All(VarKind),
    Each(Vec<VarKind>),
}

impl ProblemManifest {
    fn matrix(&self, src: &Option<MatrixSource>, base: &Path) -> Result<Option<SparseMatrix>> {
        match src {
            None => Ok(None),
            Some(MatrixSource::Path(p)) => Ok(Some(load_matrix_market(base.join(p))?)),
            Some(MatrixSource::Inline { nrows, ncols, entries }) => {
                Ok(Some(SparseMatrix::from_triplets(*nrows, *ncols, entries.iter().cloned())?))
            }
        }
    }

    fn vector(&self, src: &Option<VectorSource>, base: &Path, allow_inf: bool) -> Result<Option<Vec<f64>>> {
        let vals = match src {
            None => return Ok(None),
            Some(VectorSource::Inline(vals)) => {
                vals.iter().map(|b| b.to_f64()).collect::<Result<Vec<f64>>>()?
            }
            Some(VectorSource::Path(p)) => {
                let m = load_matrix_market(base.join(p))?;
                if m.ncols() != 1 {
                    return Err(Error::Dimension(format!(
                        "vector file '{p}' has {} columns, expected 1",
                        m.ncols()
                    )));
                }
                let mut v = vec![0.0; m.nrows()];
                for &(i, _, val) in m.entries() {
                    v[i] = val;
                }
                v
            }
        };
        if !allow_inf {
            if let Some(bad) = vals.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite vector element {bad}")));
            }
        }
        Ok(Some(vals))
    }

    /// Assemble and validate the problem; paths resolve relative to `base`.
    pub fn resolve(&self, base: &Path) -> Result<Lcqp> {
        let h = self.matrix(&self.h, base)?;
        let c = self.vector(&self.c, base, false)?;
        let n = match (&h, &c) {
            (Some(h), _) => h.ncols(),
            (None, Some(c)) => c.len(),
            (None, None) => {
                return Err(Error::InvalidArgument("manifest needs at least one of H, c".into()))
            }
        };
        let h = h.unwrap_or_else(|| SparseMatrix::zeros(n, n));
        let c = c.unwrap_or_else(|| vec![0.0; n]);

        let a_eq = self.matrix(&self.a_eq, base)?.unwrap_or_else(|| SparseMatrix::zeros(0, n));
        let b_eq = self.vector(&self.b_eq, base, false)?.unwrap_or_default();
        let a_ineq = self.matrix(&self.a_ineq, base)?.unwrap_or_else(|| SparseMatrix::zeros(0, n));
        let b_ineq = self.vector(&self.b_ineq, base, false)?.unwrap_or_default();

        let mut lb = self.vector(&self.lb, base, true)?.unwrap_or_else(|| vec![f64::NEG_INFINITY; n]);
        let mut ub = self.vector(&self.ub, base, true)?.unwrap_or_else(|| vec![f64::INFINITY; n]);
        let kinds = match &self.kinds {
            None => vec![VarKind::Continuous; n],
            Some(KindsSpec::All(k)) => vec![*k; n],
            Some(KindsSpec::Each(ks)) => ks.clone(),
        };
        // Binary variables live on {0, 1} regardless of declared bounds.
        if lb.len() == n && ub.len() == n && kinds.len() == n {
            for (i, k) in kinds.iter().enumerate() {
                if *k == VarKind::Binary {
                    lb[i] = 0.0;
                    ub[i] = 1.0;
                }
            }
        }

        let problem = Lcqp {
            h,
            c,
            a_eq,
            b_eq,
            a_ineq,
            b_ineq,
            lb,
            ub,
            kinds,
            c0: self.c0.unwrap_or(0.0),
        };
        problem.check()?;
        Ok(problem)
    }
}

/// Load a problem from a manifest file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<Lcqp> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let manifest: ProblemManifest = serde_json::from_str(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    manifest.resolve(&base)
}

/// Load a problem from manifest text; paths resolve relative to `base`.
pub fn load_problem_str(json: &str, base: &Path) -> Result<Lcqp> {
    let manifest: ProblemManifest = serde_json::from_str(json)?;
    manifest.resolve(base)
}

/// Write `<name>.json` plus sidecar `.mtx` matrix files into `dir` and return
/// the manifest path. Vectors are stored inline; load(save(p)) reproduces the
/// problem exactly for finite data.
pub fn save_problem(problem: &Lcqp, dir: impl AsRef<Path>, name: &str) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut manifest = ProblemManifest {
        name: Some(name.to_string()),
        h: None,
        c: Some(VectorSource::Inline(problem.c.iter().map(|&v| BoundValue::Num(v)).collect())),
        a_eq: None,
        b_eq: None,
        a_ineq: None,
        b_ineq: None,
        lb: Some(VectorSource::Inline(problem.lb.iter().map(|&v| BoundValue::from_f64(v)).collect())),
        ub: Some(VectorSource::Inline(problem.ub.iter().map(|&v| BoundValue::from_f64(v)).collect())),
        kinds: Some(KindsSpec::Each(problem.kinds.clone())),
        c0: Some(problem.c0),
    };
    let write_matrix = |m: &SparseMatrix, suffix: &str| -> Result<MatrixSource> {
        let file = format!("{name}_{suffix}.mtx");
        std::fs::write(dir.join(&file), write_matrix_market(m))?;
        Ok(MatrixSource::Path(file))
    };
    if problem.h.nnz() > 0 {
        manifest.h = Some(write_matrix(&problem.h, "H")?);
    } else {
        manifest.h = Some(MatrixSource::Inline {
            nrows: problem.n(),
            ncols: problem.n(),
            entries: Vec::new(),
        });
    }
    if problem.m_eq() > 0 {
        manifest.a_eq = Some(write_matrix(&problem.a_eq, "Aeq")?);
        manifest.b_eq =
            Some(VectorSource::Inline(problem.b_eq.iter().map(|&v| BoundValue::Num(v)).collect()));
    }
    if problem.m_ineq() > 0 {
        manifest.a_ineq = Some(write_matrix(&problem.a_ineq, "Aineq")?);
        manifest.b_ineq = Some(VectorSource::Inline(
            problem.b_ineq.iter().map(|&v| BoundValue::Num(v)).collect(),
        ));
    }
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}
