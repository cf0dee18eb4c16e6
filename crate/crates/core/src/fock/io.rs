//! Density-matrix file format.
//!
//! ```text
//! offset  size  content
//! 0       4     magic b"CVDM"
//! 4       4     header length H, u32 little-endian
//! 8       H     UTF-8 JSON header (see `StateFileHeader`)
//! 8+H     16D²  entries row-major, each as (re, im) f64 little-endian
//! ```

use std::io::{Read, Write};

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{c, DensityMatrix, ModeRegister};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CVDM";
pub const LAYOUT: &str = "row-major";
pub const CONVENTION: &str = "sqrt2-quadratures";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateFileHeader {
    pub version: u32,
    #[serde(rename = "N")]
    pub num_modes: usize,
    pub d: usize,
    pub layout: String,
    pub convention: String,
    pub dtype: String,
    pub pure: bool,
}

pub fn write_density_matrix<W: Write>(mut w: W, rho: &DensityMatrix) -> Result<()> {
    let header = StateFileHeader {
        version: FORMAT_VERSION,
        num_modes: rho.register().num_modes(),
        d: rho.register().cutoff(),
        layout: LAYOUT.into(),
        convention: CONVENTION.into(),
        dtype: "complex128-le-interleaved".into(),
        pure: rho.is_pure_hint(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    let m = rho.mat();
    let n = rho.dim();
    let mut buf = Vec::with_capacity(n * 16);
    for i in 0..n {
        buf.clear();
        for j in 0..n {
            buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_density_matrix<R: Read>(mut r: R) -> Result<DensityMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_le_bytes(len) as usize;
    if len > 1 << 16 {
        return Err(Error::Format(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: StateFileHeader = serde_json::from_slice(&json)?;
    if header.layout != LAYOUT || header.convention != CONVENTION {
        return Err(Error::Format(format!("unsupported layout/convention {}/{}", header.layout, header.convention)));
    }
    let reg = ModeRegister::new(header.num_modes, header.d)?;
    let n = reg.total_dim();
    let mut raw = vec![0u8; n * n * 16];
    r.read_exact(&mut raw)?;
    let val = |k: usize| f64::from_le_bytes(raw[k * 8..k * 8 + 8].try_into().unwrap());
    let mat = Mat::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        c(val(k), val(k + 1))
    });
    DensityMatrix::from_parts(reg, mat, header.pure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::C64;

    #[test]
    fn round_trip_is_bit_exact() {
        let reg = ModeRegister::new(2, 3).unwrap();
        let psi: Vec<C64> = (0..9).map(|i| c(0.1 * i as f64, -0.03 * i as f64)).collect();
        let rho = DensityMatrix::from_pure(reg, &psi).unwrap();
        let mut bytes = Vec::new();
        write_density_matrix(&mut bytes, &rho).unwrap();
        assert_eq!(&bytes[..4], MAGIC);
        let back = read_density_matrix(bytes.as_slice()).unwrap();
        assert!(back.is_pure_hint());
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(back.mat()[(i, j)], rho.mat()[(i, j)]);
            }
        }
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(read_density_matrix(&b"XXXX\0\0\0\0"[..]).is_err());
        let mut bytes = Vec::new();
        let reg = ModeRegister::new(1, 2).unwrap();
        write_density_matrix(&mut bytes, &DensityMatrix::from_pure(reg, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap()).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(read_density_matrix(bytes.as_slice()).is_err());
    }
}
