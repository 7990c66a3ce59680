//! Checkpoint formats for [`FieldState`].
//!
//! Binary layout (little-endian): magic `BIYBSNAP`, `u32` version, `u32` n,
//! `u32` n_sigma, `u32` dim, `f64` length, `f64` tau, then per site the
//! row-major entries of `g` as `(re, im)` pairs, then the columns of `J_+`
//! and of `J_-`.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FieldState;
use crate::algebra::{CMat, RMat};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"BIYBSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub length: f64,
    pub state: FieldState,
}

#[derive(Serialize, Deserialize)]
struct SnapshotJson {
    schema_version: u32,
    n: usize,
    n_sigma: usize,
    dim: usize,
    length: f64,
    tau: f64,
    /// per site, row-major `[re, im]` pairs
    g: Vec<Vec<[f64; 2]>>,
    j_plus: Vec<Vec<f64>>,
    j_minus: Vec<Vec<f64>>,
}

fn columns(m: &RMat) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn from_columns(cols: &[Vec<f64>], dim: usize) -> Result<RMat> {
    if cols.iter().any(|c| c.len() != dim) {
        return Err(Error::Snapshot(format!("current column length differs from dim={dim}")));
    }
    Ok(RMat::from_fn(dim, cols.len(), |r, c| cols[c][r]))
}

impl Snapshot {
    fn dims(&self) -> (usize, usize, usize) {
        let s = &self.state;
        (s.g[0].nrows(), s.n_sigma(), s.j_plus.nrows())
    }

    pub fn to_json(&self) -> Result<String> {
        let (n, n_sigma, dim) = self.dims();
        let s = &self.state;
        let doc = SnapshotJson {
            schema_version: SNAPSHOT_VERSION,
            n,
            n_sigma,
            dim,
            length: self.length,
            tau: s.tau,
            g: s
                .g
                .iter()
                .map(|m| m.transpose().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            j_plus: columns(&s.j_plus),
            j_minus: columns(&s.j_minus),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SnapshotJson = serde_json::from_str(text)?;
        if doc.schema_version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        if doc.g.len() != doc.n_sigma
            || doc.j_plus.len() != doc.n_sigma
            || doc.j_minus.len() != doc.n_sigma
        {
            return Err(Error::Snapshot("site count mismatch".into()));
        }
        let n = doc.n;
        let g = doc
            .g
            .iter()
            .map(|entries| {
                if entries.len() != n * n {
                    return Err(Error::Snapshot(format!("group element with {} entries", entries.len())));
                }
                Ok(CMat::from_row_iterator(
                    n,
                    n,
                    entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
                ))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            length: doc.length,
            state: FieldState {
                tau: doc.tau,
                g,
                j_plus: from_columns(&doc.j_plus, doc.dim)?,
                j_minus: from_columns(&doc.j_minus, doc.dim)?,
            },
        })
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let (n, n_sigma, dim) = self.dims();
        let s = &self.state;
        w.write_all(MAGIC)?;
        for v in [SNAPSHOT_VERSION, n as u32, n_sigma as u32, dim as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.length.to_le_bytes())?;
        w.write_all(&s.tau.to_le_bytes())?;
        for m in &s.g {
            for z in m.transpose().iter() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        for m in [&s.j_plus, &s.j_minus] {
            // nalgebra storage is column-major, i.e. site by site
            for v in m.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let mut u32s = [0u32; 4];
        for v in u32s.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *v = u32::from_le_bytes(b);
        }
        let [version, n, n_sigma, dim] = u32s.map(|v| v as usize);
        if version as u32 != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let mut f = || -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let length = f()?;
        let tau = f()?;
        let mut g = Vec::with_capacity(n_sigma);
        for _ in 0..n_sigma {
            let mut entries = Vec::with_capacity(n * n);
            for _ in 0..n * n {
                let re = f()?;
                let im = f()?;
                entries.push(Complex64::new(re, im));
            }
            g.push(CMat::from_row_slice(n, n, &entries));
        }
        let mut read_currents = || -> Result<RMat> {
            let mut data = Vec::with_capacity(dim * n_sigma);
            for _ in 0..dim * n_sigma {
                data.push(f()?);
            }
            Ok(RMat::from_vec(dim, n_sigma, data))
        };
        let j_plus = read_currents()?;
        let j_minus = read_currents()?;
        Ok(Self {
            length,
            state: FieldState {
                tau,
                g,
                j_plus,
                j_minus,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LieContext;
    use crate::model::{InitialDataSpec, ModelParams, SigmaModel, Worldsheet};

    fn snapshot() -> Snapshot {
        let m = SigmaModel::new(
            LieContext::su(3).unwrap(),
            ModelParams::new(0.3, 0.2).unwrap(),
            Worldsheet::new(16, 2.0, 0.01).unwrap(),
        );
        Snapshot {
            length: 2.0,
            state: m.make_initial_data(&InitialDataSpec::default()).unwrap(),
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = snapshot();
        let back = Snapshot::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let s = snapshot();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let back = Snapshot::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut buf = Vec::new();
        snapshot().write_binary(&mut buf).unwrap();
        buf[0] = b'X';
        assert!(Snapshot::read_binary(buf.as_slice()).is_err());
    }
}
