//! Binary field snapshots.
//!
//! Layout (all integers and floats little-endian):
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 8    | magic `CBFCKPT\0`                         |
//! | 8      | 4    | format version (u32)                      |
//! | 12     | 4    | reserved, zero                            |
//! | 16     | 8    | grid points per axis N (u64)              |
//! | 24     | 8    | max mode K (u64)                          |
//! | 32     | 32   | mu, alpha, beta, r (f64 each)             |
//! | 64     | 8    | time (f64)                                |
//! | 72     | 8    | current dt (f64)                          |
//! | 80     | 8    | step count (u64)                          |
//! | 88     | 8    | FNV-1a 64 checksum of the payload (u64)   |
//! | 96     | ...  | payload                                   |
//!
//! The payload holds `3 (2K+1)^3` complex coefficients as `(re, im)` f64
//! pairs: component 0 over the whole cube, then component 1, then 2, each in
//! lexicographic `(k1, k2, k3)` order with `k3` fastest.

use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use rustfft::num_complex::Complex64;

use crate::dynamics::ModelParams;
use crate::error::{CbfError, Result};
use crate::integrator::StepperState;
use crate::spectral::{Resolution, SpectralField};

pub const MAGIC: [u8; 8] = *b"CBFCKPT\0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 96;

pub fn payload_checksum(payload: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(payload);
    h.finish()
}

pub fn to_bytes(state: &StepperState) -> Vec<u8> {
    let res = state.field.resolution();
    let p = &state.params;
    let mut payload = Vec::with_capacity(3 * res.n_modes() * 16);
    for comp in state.field.components() {
        for c in comp {
            payload.extend_from_slice(&c.re.to_le_bytes());
            payload.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(res.grid() as u64).to_le_bytes());
    out.extend_from_slice(&(res.k_max() as u64).to_le_bytes());
    for v in [p.mu, p.alpha, p.beta, p.r, state.time, state.dt] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&state.step_count.to_le_bytes());
    out.extend_from_slice(&payload_checksum(&payload).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

fn u64_at(b: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(b[off..off + 8].try_into().unwrap())
}

fn f64_at(b: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(b[off..off + 8].try_into().unwrap())
}

/// Decodes a snapshot; `path` only labels errors.
pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<StepperState> {
    let fail = |reason: String| CbfError::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(fail(format!("truncated header: {} bytes", bytes.len())));
    }
    if bytes[..8] != MAGIC {
        return Err(fail("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(fail(format!("unsupported version {version}, expected {VERSION}")));
    }
    let grid = u64_at(bytes, 16) as usize;
    let k_max = u64_at(bytes, 24) as usize;
    let res = Resolution::new(k_max, grid).map_err(|e| fail(e.to_string()))?;
    let params = ModelParams {
        mu: f64_at(bytes, 32),
        alpha: f64_at(bytes, 40),
        beta: f64_at(bytes, 48),
        r: f64_at(bytes, 56),
    };
    params.validate().map_err(|e| fail(e.to_string()))?;
    let time = f64_at(bytes, 64);
    let dt = f64_at(bytes, 72);
    let step_count = u64_at(bytes, 80);
    let checksum = u64_at(bytes, 88);

    let payload = &bytes[HEADER_LEN..];
    let n = res.n_modes();
    let expected = 3 * n * 16;
    if payload.len() != expected {
        return Err(fail(format!("payload is {} bytes, expected {expected}", payload.len())));
    }
    if payload_checksum(payload) != checksum {
        return Err(fail("checksum mismatch".into()));
    }
    let comp = |i: usize| -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let off = (i * n + j) * 16;
                Complex64::new(f64_at(payload, off), f64_at(payload, off + 8))
            })
            .collect()
    };
    let field = SpectralField::from_components(res, [comp(0), comp(1), comp(2)])?;
    Ok(StepperState {
        field,
        time,
        dt,
        step_count,
        params,
    })
}

pub fn save_checkpoint(state: &StepperState, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(state))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<StepperState> {
    from_bytes(&std::fs::read(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_state() -> StepperState {
        let res = Resolution::new(2, 6).unwrap();
        let mut u = SpectralField::zeros(res);
        u.add_real_mode(
            [0, 1, 0],
            [
                Complex64::new(0.1, -0.3),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0 / 3.0, 0.7),
            ],
        )
        .unwrap();
        let mut s = StepperState::new(u, ModelParams::new(0.1, 0.0, 0.3, 3.0).unwrap());
        s.time = 0.123;
        s.dt = 1e-3;
        s.step_count = 123;
        s
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample_state();
        let bytes = to_bytes(&s);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 125 * 16);
        let back = from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back, s);
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let bytes = to_bytes(&sample_state());
        let p = Path::new("mem");
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(from_bytes(&bad, p).is_err());
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(from_bytes(&bad, p).is_err());
        assert!(from_bytes(&bytes[..bytes.len() - 1], p).is_err());
        assert!(from_bytes(&bytes[..40], p).is_err());
        let mut bad = bytes.clone();
        *bad.last_mut().unwrap() ^= 1;
        let err = from_bytes(&bad, p).unwrap_err().to_string();
        assert!(err.contains("checksum"), "{err}");
    }
}
