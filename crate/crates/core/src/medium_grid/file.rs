//! Binary medium files.
//!
//! Layout (little-endian): magic `WMED`, `u32` version (1), `u32` kind
//! (0 acoustic, 1 elastic), `u32` nx, `u32` ny, then row-major binary64
//! planes: `rho_x, rho_y, beta` for acoustic media and
//! `rho_x, rho_y, lambda, mu` for elastic media.

use std::fs;
use std::path::Path;

use super::medium::{AcousticMedium, ElasticMedium, Medium};
use super::MediumError;

pub const MAGIC: &[u8; 4] = b"WMED";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

pub fn encode_medium(medium: &Medium) -> Vec<u8> {
    let (nx, ny) = medium.dims();
    let kind: u32 = match medium {
        Medium::Acoustic(_) => 0,
        Medium::Elastic(_) => 1,
    };
    let planes = medium.planes();
    let mut out = Vec::with_capacity(HEADER_LEN + planes.len() * nx * ny * 8);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, kind, nx as u32, ny as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for (_, plane) in planes {
        for &v in plane {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_medium(bytes: &[u8]) -> Result<Medium, MediumError> {
    if bytes.len() < HEADER_LEN {
        return Err(MediumError::DimensionMismatch(format!("file has {} bytes, header needs {HEADER_LEN}", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(MediumError::BadMagic);
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap());
    let (version, kind, nx, ny) = (word(0), word(1), word(2) as usize, word(3) as usize);
    if version != VERSION {
        return Err(MediumError::Version(version));
    }
    let nplanes = match kind {
        0 => 3,
        1 => 4,
        k => return Err(MediumError::Kind(k)),
    };
    let n = nx * ny;
    let expected = HEADER_LEN + nplanes * n * 8;
    if bytes.len() != expected {
        return Err(MediumError::DimensionMismatch(format!(
            "{nx}x{ny} medium with {nplanes} planes needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let plane = |p: usize| -> Vec<f64> {
        let start = HEADER_LEN + p * n * 8;
        bytes[start..start + n * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    let medium = if kind == 0 {
        Medium::Acoustic(AcousticMedium { nx, ny, rho_x: plane(0), rho_y: plane(1), beta: plane(2) })
    } else {
        Medium::Elastic(ElasticMedium { nx, ny, rho_x: plane(0), rho_y: plane(1), lambda: plane(2), mu: plane(3) })
    };
    medium.validate()?;
    Ok(medium)
}

pub fn save_medium_file(medium: &Medium, path: impl AsRef<Path>) -> Result<(), MediumError> {
    let path = path.as_ref();
    fs::write(path, encode_medium(medium)).map_err(|e| MediumError::Io(path.display().to_string(), e))
}

pub fn load_medium_file(path: impl AsRef<Path>) -> Result<Medium, MediumError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| MediumError::Io(path.display().to_string(), e))?;
    decode_medium(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium_grid::medium::{build_homogeneous_acoustic, build_layered_elastic, Layer};

    #[test]
    fn roundtrip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let layers = [Layer::new(0.3, 2.0293, 1.8, 1.0117), Layer::new(1.0, 2.623, 4.6992, 2.2)];
        for m in [
            build_homogeneous_acoustic(9, 8, 1.3, 0.7).unwrap(),
            build_layered_elastic(8, 10, &layers).unwrap(),
        ] {
            let path = dir.path().join(format!("{}.wmed", m.kind_name()));
            save_medium_file(&m, &path).unwrap();
            let back = load_medium_file(&path).unwrap();
            for ((_, a), (_, b)) in m.planes().iter().zip(back.planes()) {
                assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
            assert_eq!(back, m);
        }
    }

    #[test]
    fn truncated_file_is_dimension_mismatch() {
        let bytes = encode_medium(&build_homogeneous_acoustic(8, 8, 1.0, 1.0).unwrap());
        assert!(matches!(decode_medium(&bytes[..bytes.len() - 8]), Err(MediumError::DimensionMismatch(_))));
        assert!(matches!(decode_medium(&bytes[..10]), Err(MediumError::DimensionMismatch(_))));
    }

    #[test]
    fn bad_header_fields() {
        let mut bytes = encode_medium(&build_homogeneous_acoustic(8, 8, 1.0, 1.0).unwrap());
        bytes[0] = b'X';
        assert!(matches!(decode_medium(&bytes), Err(MediumError::BadMagic)));
        bytes[0] = b'W';
        bytes[8] = 7;
        assert!(matches!(decode_medium(&bytes), Err(MediumError::Kind(7))));
        bytes[8] = 0;
        bytes[4] = 2;
        assert!(matches!(decode_medium(&bytes), Err(MediumError::Version(2))));
    }

    #[test]
    fn zero_density_names_cell() {
        let mut m = build_homogeneous_acoustic(8, 8, 1.0, 1.0).unwrap();
        if let Medium::Acoustic(a) = &mut m {
            a.rho_x[2 * 8 + 6] = 0.0;
        }
        let bytes = encode_medium(&m);
        match decode_medium(&bytes) {
            Err(e @ MediumError::Invalid { .. }) => {
                let msg = e.to_string();
                assert!(msg.contains("rho_x") && msg.contains("(6, 2)"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_medium_file("/nonexistent/medium.wmed"), Err(MediumError::Io(..))));
    }
}
