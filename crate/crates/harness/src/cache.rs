//! Binary cache for fitted lifting bases.
//!
//! Layout (little endian): magic, u32 version, 32-byte basis hash, u64 dims
//! `(n_antennas, n_q, n_u, n_b)`, then the coefficient tensor, the lifting
//! matrices (column-major) and the fit-error table.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use nearfield_core::{ArrayConfig, Complex64, LiftedBasis};

use crate::error::{AppError, AppResult};

pub const MAGIC: &[u8; 8] = b"NFBASIS\0";
pub const VERSION: u32 = 1;
pub const CACHE_ENV: &str = "NEARFIELD_CACHE_DIR";

pub fn cache_path(dir: &Path, basis_hash: &str) -> PathBuf {
    dir.join(format!("basis-{basis_hash}.bin"))
}

pub fn encode(cfg: &ArrayConfig, basis_hash: &str, basis: &LiftedBasis) -> Vec<u8> {
    let hash = hex::decode(basis_hash).expect("hash is hex");
    let nq = 2 * cfg.i2 + 1;
    let mut out = Vec::with_capacity(64 + 16 * (basis.coeffs().len() + cfg.n_antennas * cfg.lifted_len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&hash);
    for d in [cfg.n_antennas, nq, cfg.n_u(), cfg.n_b()] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    let mut put = |z: &Complex64| {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    };
    basis.coeffs().iter().for_each(&mut put);
    for m in basis.phis() {
        m.iter().for_each(&mut put);
    }
    for e in basis.fit_errors() {
        out.extend_from_slice(&e.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or("truncated file")?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn c64(&mut self) -> Result<Complex64, String> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }
}

pub fn decode(cfg: &ArrayConfig, basis_hash: &str, bytes: &[u8]) -> Result<LiftedBasis, String> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("bad magic".into());
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let want = hex::decode(basis_hash).map_err(|e| e.to_string())?;
    if r.take(32)? != want.as_slice() {
        return Err("hash mismatch".into());
    }
    let nq = 2 * cfg.i2 + 1;
    let dims = [r.u64()?, r.u64()?, r.u64()?, r.u64()?];
    if dims != [cfg.n_antennas as u64, nq as u64, cfg.n_u() as u64, cfg.n_b() as u64] {
        return Err(format!("dimension mismatch {dims:?}"));
    }
    let coeffs = (0..cfg.n_antennas * nq * cfg.n_u()).map(|_| r.c64()).collect::<Result<Vec<_>, _>>()?;
    let mut phi = Vec::with_capacity(cfg.n_antennas);
    for _ in 0..cfg.n_antennas {
        let data = (0..cfg.lifted_len()).map(|_| r.c64()).collect::<Result<Vec<_>, _>>()?;
        phi.push(DMatrix::from_vec(cfg.n_u(), cfg.n_b(), data));
    }
    let errs = (0..cfg.n_antennas * nq).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    if r.pos != bytes.len() {
        return Err("trailing bytes".into());
    }
    LiftedBasis::from_parts(cfg, coeffs, phi, errs).map_err(|e| e.to_string())
}

pub fn load(cfg: &ArrayConfig, basis_hash: &str, path: &Path) -> AppResult<LiftedBasis> {
    let bytes = fs::read(path).map_err(|source| AppError::Io { path: path.into(), source })?;
    decode(cfg, basis_hash, &bytes).map_err(|reason| AppError::Cache { path: path.into(), reason })
}

pub fn store(cfg: &ArrayConfig, basis_hash: &str, basis: &LiftedBasis, path: &Path) -> AppResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| AppError::Io { path: dir.into(), source })?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode(cfg, basis_hash, basis)).map_err(|source| AppError::Io { path: tmp.clone(), source })?;
    fs::rename(&tmp, path).map_err(|source| AppError::Io { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nearfield_core::basis::build_basis;
    use proptest::prelude::*;

    const HASH: &str = "00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff";

    fn small() -> (ArrayConfig, LiftedBasis) {
        let cfg = ArrayConfig { n_antennas: 6, i1: 4, ..ArrayConfig::default() };
        let b = build_basis(&cfg).unwrap();
        (cfg, b)
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let (cfg, b) = small();
        let back = decode(&cfg, HASH, &encode(&cfg, HASH, &b)).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn rejects_corruption() {
        let (cfg, b) = small();
        let good = encode(&cfg, HASH, &b);
        let mut bad = good.clone();
        bad[0] ^= 1;
        assert_eq!(decode(&cfg, HASH, &bad).unwrap_err(), "bad magic");
        let mut bad = good.clone();
        bad[12] ^= 1;
        assert_eq!(decode(&cfg, HASH, &bad).unwrap_err(), "hash mismatch");
        assert!(decode(&cfg, HASH, &good[..good.len() - 3]).is_err());
        let other = HASH.replace("00", "11");
        assert!(decode(&cfg, &other, &good).is_err());
        let cfg2 = ArrayConfig { n_antennas: 7, ..cfg };
        assert!(decode(&cfg2, HASH, &good).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn arbitrary_parts_round_trip(vals in prop::collection::vec(any::<f64>(), 64), bits in any::<u64>()) {
            let cfg = ArrayConfig { n_antennas: 2, i1: 1, i2: 1, k_u: 1, ..ArrayConfig::default() };
            let mut k = 0usize;
            let mut next = || { k += 1; vals[k % vals.len()] };
            let coeffs = (0..2 * 3 * 3).map(|_| Complex64::new(next(), next())).collect();
            let phi = (0..2).map(|_| DMatrix::from_fn(3, cfg.n_b(), |_, _| Complex64::new(next(), next()))).collect();
            let errs = (0..6).map(|i| f64::from_bits(bits.rotate_left(i))).collect();
            let b = LiftedBasis::from_parts(&cfg, coeffs, phi, errs).unwrap();
            let bytes = encode(&cfg, HASH, &b);
            let back = decode(&cfg, HASH, &bytes).unwrap();
            // compare bit patterns so NaN payloads count too
            prop_assert_eq!(encode(&cfg, HASH, &back), bytes);
        }
    }
}
