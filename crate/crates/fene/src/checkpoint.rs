//! Versioned binary checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic "FENECKPT" | version u32 | config_len u64 | config TOML (UTF-8)
//! t f64 | M u64 | Q u64 | u: 2·M² (re, im) | c: Q·M² (re, im)
//! ```

use std::io::{self, Read, Write};

use fene_core::micromacro::MicroMacroState;
use fene_core::torus::VectorField;
use fene_core::Complex64;

pub const MAGIC: &[u8; 8] = b"FENECKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Echo of the configuration that produced the state.
    pub config: String,
    pub m: usize,
    pub state: MicroMacroState,
}

fn write_spectrum(w: &mut impl Write, s: &[Complex64]) -> io::Result<()> {
    for v in s {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_spectrum(r: &mut impl Read, n: usize) -> io::Result<Vec<Complex64>> {
    (0..n)
        .map(|_| Ok(Complex64::new(read_f64(r)?, read_f64(r)?)))
        .collect()
}

impl Checkpoint {
    pub fn write_to(&self, mut w: impl Write) -> Result<(), CheckpointError> {
        let n = self.m * self.m;
        let st = &self.state;
        if st.u.comps.iter().chain(st.c.iter()).any(|s| s.len() != n) {
            return Err(CheckpointError::Malformed("spectrum length does not match M²".into()));
        }
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.config.len() as u64).to_le_bytes())?;
        w.write_all(self.config.as_bytes())?;
        w.write_all(&st.t.to_le_bytes())?;
        w.write_all(&(self.m as u64).to_le_bytes())?;
        w.write_all(&(st.c.len() as u64).to_le_bytes())?;
        for s in st.u.comps.iter().chain(st.c.iter()) {
            write_spectrum(&mut w, s)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut v = [0u8; 4];
        r.read_exact(&mut v)?;
        let version = u32::from_le_bytes(v);
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let len = read_u64(&mut r)? as usize;
        if len > 1 << 24 {
            return Err(CheckpointError::Malformed(format!("config echo of {len} bytes")));
        }
        let mut text = vec![0u8; len];
        r.read_exact(&mut text)?;
        let config = String::from_utf8(text).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        let t = read_f64(&mut r)?;
        let m = read_u64(&mut r)? as usize;
        let q = read_u64(&mut r)? as usize;
        if m == 0 || m > 1 << 14 || q > 1 << 16 {
            return Err(CheckpointError::Malformed(format!("implausible sizes M = {m}, Q = {q}")));
        }
        let n = m * m;
        let u = VectorField {
            comps: [read_spectrum(&mut r, n)?, read_spectrum(&mut r, n)?],
        };
        let c = (0..q).map(|_| read_spectrum(&mut r, n)).collect::<io::Result<_>>()?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(CheckpointError::Malformed(format!("{} trailing bytes", rest.len())));
        }
        Ok(Self {
            config,
            m,
            state: MicroMacroState { u, c, t },
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CheckpointError> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let m = 4;
        let spec = |seed: f64| -> Vec<Complex64> {
            (0..m * m)
                .map(|i| Complex64::new((i as f64 * seed).sin(), f64::from_bits(0x3ff0_0000_0000_0001 + i as u64)))
                .collect()
        };
        Checkpoint {
            config: "[model]\nk = 2.0\n".into(),
            m,
            state: MicroMacroState {
                u: VectorField {
                    comps: [spec(1.0), spec(2.0)],
                },
                c: vec![spec(3.0), spec(-0.0), spec(1e-300)],
                t: 0.1 + 0.2,
            },
        }
    }

    #[test]
    fn bit_exact_round_trip() {
        let ck = sample();
        let bytes = ck.to_bytes().unwrap();
        let back = Checkpoint::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back, ck);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let bytes = sample().to_bytes().unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::read_from(bad.as_slice()), Err(CheckpointError::BadMagic)));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(Checkpoint::read_from(bad.as_slice()), Err(CheckpointError::Version(9))));
        assert!(Checkpoint::read_from(&bytes[..bytes.len() - 3]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(Checkpoint::read_from(long.as_slice()).is_err());
    }
}
