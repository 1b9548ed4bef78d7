//! Binary file format for block-tridiagonal systems.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "BTD1"
//!      4     4  version (u32) = 1
//!      8     8  N, block count (u64)
//!     16     4  n, block order (u32)
//!     20     4  d, right-hand side columns (u32), 0 when absent
//!     24     4  flags (u32), bit 0 set when a right-hand side follows
//!     28    12  reserved, zero
//!     40        N diagonal blocks, then N-1 sub-diagonal blocks, then the
//!               optional N right-hand side panels; every block row-major f64
//! ```
//!
//! A Kalman system file wraps the same stream behind its own 40-byte header
//! carrying the model parameters (see [`KalmanHeader`]).

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{BlockRhs, BlockTridiagonalMatrix};

pub const BTD_MAGIC: [u8; 4] = *b"BTD1";
pub const KALMAN_MAGIC: [u8; 4] = *b"KSM1";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 40;
const FLAG_RHS: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BtdFileHeader {
    pub num_blocks: u64,
    pub block_dim: u32,
    pub cols: u32,
    pub flags: u32,
}

impl BtdFileHeader {
    pub fn has_rhs(&self) -> bool {
        self.flags & FLAG_RHS != 0
    }

    /// Payload size in bytes implied by the header.
    pub fn payload_len(&self) -> u64 {
        let (nb, n) = (self.num_blocks, self.block_dim as u64);
        let rhs = if self.has_rhs() { nb * n * self.cols as u64 } else { 0 };
        8 * (nb * n * n + nb.saturating_sub(1) * n * n + rhs)
    }

    /// Total file size in bytes.
    pub fn file_len(&self) -> u64 {
        HEADER_LEN + self.payload_len()
    }

    fn to_bytes(self) -> [u8; HEADER_LEN as usize] {
        let mut h = [0u8; HEADER_LEN as usize];
        h[0..4].copy_from_slice(&BTD_MAGIC);
        h[4..8].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        h[8..16].copy_from_slice(&self.num_blocks.to_le_bytes());
        h[16..20].copy_from_slice(&self.block_dim.to_le_bytes());
        h[20..24].copy_from_slice(&self.cols.to_le_bytes());
        h[24..28].copy_from_slice(&self.flags.to_le_bytes());
        h
    }

    fn from_bytes(h: &[u8; HEADER_LEN as usize]) -> Result<Self> {
        let magic: [u8; 4] = h[0..4].try_into().unwrap();
        if magic != BTD_MAGIC {
            return Err(Error::BadMagic {
                found: magic,
                expected: BTD_MAGIC,
            });
        }
        let version = u32::from_le_bytes(h[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::VersionUnsupported(version));
        }
        Ok(BtdFileHeader {
            num_blocks: u64::from_le_bytes(h[8..16].try_into().unwrap()),
            block_dim: u32::from_le_bytes(h[16..20].try_into().unwrap()),
            cols: u32::from_le_bytes(h[20..24].try_into().unwrap()),
            flags: u32::from_le_bytes(h[24..28].try_into().unwrap()),
        })
    }
}

fn write_floats<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_floats<R: Read>(r: &mut R, count: usize, read_so_far: &mut u64, expected: u64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        match r.read_exact(&mut buf) {
            Ok(()) => {
                *read_so_far += 8;
                out.push(f64::from_le_bytes(buf));
            }
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => {
                return Err(Error::TruncatedPayload {
                    expected,
                    actual: *read_so_far,
                })
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// Writes a system in the `BTD1` format to any writer.
pub fn write_btd_to<W: Write>(w: &mut W, a: &BlockTridiagonalMatrix, b: Option<&BlockRhs>) -> Result<()> {
    if let Some(b) = b {
        a.check_conformal(b)?;
    }
    let header = BtdFileHeader {
        num_blocks: a.num_blocks() as u64,
        block_dim: u32::try_from(a.block_dim())
            .map_err(|_| Error::InvalidDimensions("block order does not fit in u32".into()))?,
        cols: match b {
            Some(b) => u32::try_from(b.cols())
                .map_err(|_| Error::InvalidDimensions("column count does not fit in u32".into()))?,
            None => 0,
        },
        flags: if b.is_some() { FLAG_RHS } else { 0 },
    };
    w.write_all(&header.to_bytes())?;
    write_floats(w, a.diag_arena())?;
    write_floats(w, a.sub_arena())?;
    if let Some(b) = b {
        write_floats(w, b.as_slice())?;
    }
    Ok(())
}

/// Reads a `BTD1` stream.
///
/// Does not check for data after the payload; [`read_btd`] does.
pub fn read_btd_from<R: Read>(r: &mut R) -> Result<(BlockTridiagonalMatrix, Option<BlockRhs>)> {
    let mut raw = [0u8; HEADER_LEN as usize];
    let mut got = 0usize;
    while got < raw.len() {
        match r.read(&mut raw[got..])? {
            0 => {
                return Err(Error::TruncatedPayload {
                    expected: HEADER_LEN,
                    actual: got as u64,
                })
            }
            k => got += k,
        }
    }
    // magic and version are checked before the size so that a foreign file
    // reports BadMagic rather than a size error
    let header = BtdFileHeader::from_bytes(&raw)?;
    let expected = header.file_len();
    let (nb, n) = (header.num_blocks as usize, header.block_dim as usize);
    if nb == 0 || n == 0 {
        return Err(Error::InvalidDimensions(format!("header declares N={nb}, n={n}")));
    }
    let mut read = HEADER_LEN;
    let diag = read_floats(r, nb * n * n, &mut read, expected)?;
    let sub = read_floats(r, (nb - 1) * n * n, &mut read, expected)?;
    let rhs = if header.has_rhs() {
        let d = header.cols as usize;
        let data = read_floats(r, nb * n * d, &mut read, expected)?;
        Some(BlockRhs::new(nb, n, d, data)?)
    } else {
        None
    };
    let a = BlockTridiagonalMatrix::new(nb, n, diag, sub)?;
    Ok((a, rhs))
}

/// Writes a system to `path`.
pub fn write_btd(path: impl AsRef<Path>, a: &BlockTridiagonalMatrix, b: Option<&BlockRhs>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_btd_to(&mut w, a, b)?;
    w.flush()?;
    Ok(())
}

/// Reads a system from `path`, checking the file size against the header.
pub fn read_btd(path: impl AsRef<Path>) -> Result<(BlockTridiagonalMatrix, Option<BlockRhs>)> {
    let file = File::open(path)?;
    let actual = file.metadata()?.len();
    let mut r = BufReader::new(file);
    let out = read_btd_from(&mut r)?;
    let expected = HEADER_LEN + payload_len_of(&out);
    if actual > expected {
        return Err(Error::TrailingData { expected, actual });
    }
    Ok(out)
}

fn payload_len_of((a, b): &(BlockTridiagonalMatrix, Option<BlockRhs>)) -> u64 {
    8 * (a.diag_arena().len() + a.sub_arena().len() + b.as_ref().map_or(0, |b| b.as_slice().len())) as u64
}

/// Parameters of a generated state-space model, stored ahead of its normal
/// equations so the model can be regenerated from the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanHeader {
    pub horizon: u64,
    pub state_dim: u32,
    pub obs_dim: u32,
    pub dt: f64,
    pub seed: u64,
}

/// Writes a `KSM1` header followed by the normal equations as a `BTD1`
/// stream.
pub fn write_kalman_system(
    path: impl AsRef<Path>,
    header: &KalmanHeader,
    a: &BlockTridiagonalMatrix,
    b: &BlockRhs,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut h = [0u8; HEADER_LEN as usize];
    h[0..4].copy_from_slice(&KALMAN_MAGIC);
    h[4..8].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
    h[8..16].copy_from_slice(&header.horizon.to_le_bytes());
    h[16..20].copy_from_slice(&header.state_dim.to_le_bytes());
    h[20..24].copy_from_slice(&header.obs_dim.to_le_bytes());
    h[24..32].copy_from_slice(&header.dt.to_le_bytes());
    h[32..40].copy_from_slice(&header.seed.to_le_bytes());
    w.write_all(&h)?;
    write_btd_to(&mut w, a, Some(b))?;
    w.flush()?;
    Ok(())
}

pub fn read_kalman_system(path: impl AsRef<Path>) -> Result<(KalmanHeader, BlockTridiagonalMatrix, BlockRhs)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut h = [0u8; HEADER_LEN as usize];
    r.read_exact(&mut h).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => Error::TruncatedPayload {
            expected: HEADER_LEN,
            actual: 0,
        },
        _ => e.into(),
    })?;
    let magic: [u8; 4] = h[0..4].try_into().unwrap();
    if magic != KALMAN_MAGIC {
        return Err(Error::BadMagic {
            found: magic,
            expected: KALMAN_MAGIC,
        });
    }
    let version = u32::from_le_bytes(h[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let header = KalmanHeader {
        horizon: u64::from_le_bytes(h[8..16].try_into().unwrap()),
        state_dim: u32::from_le_bytes(h[16..20].try_into().unwrap()),
        obs_dim: u32::from_le_bytes(h[20..24].try_into().unwrap()),
        dt: f64::from_le_bytes(h[24..32].try_into().unwrap()),
        seed: u64::from_le_bytes(h[32..40].try_into().unwrap()),
    };
    let (a, b) = read_btd_from(&mut r)?;
    let b = b.ok_or(Error::InvalidDimensions("Kalman system without right-hand side".into()))?;
    Ok((header, a, b))
}
