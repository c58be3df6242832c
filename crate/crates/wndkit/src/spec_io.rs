//! TOML form of a system specification.
//!
//! Tensors are nested arrays indexed in the natural order:
//! `advection[a][i][j]`, `diffusion[a][b][i][j]`, `quadratic[a][i][p][q]` and
//! `entropy_hessian[i][j]`. Missing `state`, `quadratic` and `entropy_hessian`
//! default to zero, zero and the identity.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wndkit_core::SpecData;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub dim: usize,
    pub ncomp: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_hessian: Option<Vec<Vec<f64>>>,
    pub advection: Vec<Vec<Vec<f64>>>,
    pub diffusion: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<Vec<Vec<Vec<Vec<f64>>>>>,
}

fn shape_error(field: &str, expected: &str) -> CliError {
    CliError::Input(format!("spec field {field} must have shape {expected}"))
}

fn flatten_matrix(m: &[Vec<f64>], n: usize, field: &str, out: &mut Vec<f64>) -> CliResult<()> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(shape_error(field, &format!("{n} x {n}")));
    }
    for row in m {
        out.extend_from_slice(row);
    }
    Ok(())
}

fn nest_matrix(flat: &[f64], n: usize) -> Vec<Vec<f64>> {
    flat.chunks(n).map(<[f64]>::to_vec).collect()
}

impl SpecFile {
    pub fn from_data(d: &SpecData) -> Self {
        let n = d.ncomp;
        let nn = n * n;
        let advection = d.advection.chunks(nn).map(|m| nest_matrix(m, n)).collect();
        let diffusion = d
            .diffusion
            .chunks(d.dim * nn)
            .map(|row| row.chunks(nn).map(|m| nest_matrix(m, n)).collect())
            .collect();
        let quadratic = d
            .quadratic
            .chunks(n * nn)
            .map(|row| row.chunks(nn).map(|m| nest_matrix(m, n)).collect())
            .collect();
        Self {
            dim: d.dim,
            ncomp: n,
            labels: d.labels.clone(),
            state: Some(d.state.clone()),
            entropy_hessian: Some(nest_matrix(&d.entropy_hessian, n)),
            advection,
            diffusion,
            quadratic: Some(quadratic),
        }
    }

    pub fn to_data(&self) -> CliResult<SpecData> {
        let (dim, n) = (self.dim, self.ncomp);
        if dim == 0 || n == 0 {
            return Err(CliError::Input("spec dim and ncomp must be positive".into()));
        }
        let mut d = SpecData::zeros(dim, n);
        d.labels = self.labels.clone();
        if let Some(state) = &self.state {
            if state.len() != n {
                return Err(shape_error("state", &n.to_string()));
            }
            d.state = state.clone();
        }
        if let Some(g) = &self.entropy_hessian {
            d.entropy_hessian.clear();
            flatten_matrix(g, n, "entropy_hessian", &mut d.entropy_hessian)?;
        }
        if self.advection.len() != dim {
            return Err(shape_error("advection", &format!("{dim} x {n} x {n}")));
        }
        d.advection.clear();
        for m in &self.advection {
            flatten_matrix(m, n, "advection", &mut d.advection)?;
        }
        if self.diffusion.len() != dim || self.diffusion.iter().any(|r| r.len() != dim) {
            return Err(shape_error("diffusion", &format!("{dim} x {dim} x {n} x {n}")));
        }
        d.diffusion.clear();
        for m in self.diffusion.iter().flatten() {
            flatten_matrix(m, n, "diffusion", &mut d.diffusion)?;
        }
        if let Some(q) = &self.quadratic {
            if q.len() != dim || q.iter().any(|r| r.len() != n) {
                return Err(shape_error("quadratic", &format!("{dim} x {n} x {n} x {n}")));
            }
            d.quadratic.clear();
            for m in q.iter().flatten() {
                flatten_matrix(m, n, "quadratic", &mut d.quadratic)?;
            }
        }
        Ok(d)
    }
}

pub fn spec_to_toml(d: &SpecData) -> String {
    toml::to_string(&SpecFile::from_data(d)).expect("spec tensors serialize as TOML arrays")
}

pub fn spec_from_toml(text: &str, origin: &Path) -> CliResult<SpecData> {
    let file: SpecFile = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    file.to_data()
}

pub fn read_spec(path: &Path) -> CliResult<SpecData> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    spec_from_toml(&text, path)
}

pub fn write_spec(path: &Path, d: &SpecData) -> CliResult<()> {
    std::fs::write(path, spec_to_toml(d)).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use wndkit_core::navier_stokes::CnsModel;

    #[test]
    fn ideal_gas_round_trip_is_bit_identical() {
        for dim in 1..=3 {
            let model = CnsModel::ideal_gas(dim, 1.3, 0.7, 0.9, 0.1, 1.1, 5.0).unwrap();
            let data = model.spec().data();
            let back = spec_from_toml(&spec_to_toml(data), Path::new("spec.toml")).unwrap();
            assert_eq!(back.dim, data.dim);
            for (a, b) in [
                (&back.advection, &data.advection),
                (&back.diffusion, &data.diffusion),
                (&back.quadratic, &data.quadratic),
                (&back.entropy_hessian, &data.entropy_hessian),
                (&back.state, &data.state),
            ] {
                assert_eq!(a.len(), b.len());
                assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
            assert_eq!(back.labels, data.labels);
        }
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let text = "dim = 1\nncomp = 2\nadvection = [[[0.0, 1.0]]]\ndiffusion = [[[[1.0]]]]\n";
        assert!(matches!(
            spec_from_toml(text, Path::new("s.toml")),
            Err(CliError::Input(_))
        ));
    }

    #[test]
    fn integers_read_as_floats() {
        let text = "dim = 1\nncomp = 1\nadvection = [[[2]]]\ndiffusion = [[[[1]]]]\n";
        let d = spec_from_toml(text, Path::new("s.toml")).unwrap();
        assert_eq!(d.advection, vec![2.0]);
        assert_eq!(d.entropy_hessian, vec![1.0]);
    }
}
