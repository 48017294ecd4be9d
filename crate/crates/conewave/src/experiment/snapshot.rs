//! Flat binary snapshots of a full field state.
//!
//! Layout (all integers and floats little-endian; documented in
//! `docs/formats.md`):
//!
//! ```text
//! offset  size  field
//! 0       4     magic  b"WSNP"
//! 4       4     format version, u32 (currently 1)
//! 8       4     grid kind, u32: 0 radial geodesic line, 1 polar annulus
//! 12      4     reserved, u32 (zero)
//! 16      8     n_r, u64      radial node count
//! 24      8     n_theta, u64  angular node count (1 for radial)
//! 32      8     t, f64        sample time
//! 40      8     coord_lo, f64 first radial coordinate
//! 48      8     coord_hi, f64 last radial coordinate
//! 56      ...   u then v, n_r * n_theta f64 each, row-major r-then-theta
//! ```

use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"WSNP";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a snapshot file (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    BadVersion(u32),
    #[error("unknown grid kind {0}")]
    BadKind(u32),
}

/// What the radial axis of a snapshot means.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    /// 1-D line in the geodesic coordinate; `n_theta = 1`.
    RadialGeodesic,
    /// Polar annulus; angle `j` is `2 pi j / n_theta`.
    PolarAnnulus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub kind: GridKind,
    pub n_r: usize,
    pub n_theta: usize,
    pub t: f64,
    pub coord_lo: f64,
    pub coord_hi: f64,
    /// Row-major, r index outer, theta index inner.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl Snapshot {
    pub fn write_to(&self, mut w: impl Write) -> Result<(), SnapshotError> {
        assert_eq!(self.u.len(), self.n_r * self.n_theta);
        assert_eq!(self.v.len(), self.n_r * self.n_theta);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let kind = match self.kind {
            GridKind::RadialGeodesic => 0u32,
            GridKind::PolarAnnulus => 1u32,
        };
        w.write_all(&kind.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&(self.n_r as u64).to_le_bytes())?;
        w.write_all(&(self.n_theta as u64).to_le_bytes())?;
        for value in [self.t, self.coord_lo, self.coord_hi] {
            w.write_all(&value.to_le_bytes())?;
        }
        for field in [&self.u, &self.v] {
            for value in field {
                w.write_all(&value.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), SnapshotError> {
        let mut buf = Vec::with_capacity(56 + 16 * self.u.len());
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, SnapshotError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let mut u32_buf = [0u8; 4];
        let mut u64_buf = [0u8; 8];
        r.read_exact(&mut u32_buf)?;
        let version = u32::from_le_bytes(u32_buf);
        if version != VERSION {
            return Err(SnapshotError::BadVersion(version));
        }
        r.read_exact(&mut u32_buf)?;
        let kind = match u32::from_le_bytes(u32_buf) {
            0 => GridKind::RadialGeodesic,
            1 => GridKind::PolarAnnulus,
            other => return Err(SnapshotError::BadKind(other)),
        };
        r.read_exact(&mut u32_buf)?; // reserved
        r.read_exact(&mut u64_buf)?;
        let n_r = u64::from_le_bytes(u64_buf);
        r.read_exact(&mut u64_buf)?;
        let n_theta = u64::from_le_bytes(u64_buf);
        let mut scalars = [0.0f64; 3];
        for slot in &mut scalars {
            r.read_exact(&mut u64_buf)?;
            *slot = f64::from_le_bytes(u64_buf);
        }
        let count = (n_r * n_theta) as usize;
        let mut payload = vec![0u8; 16 * count];
        r.read_exact(&mut payload)?;
        let mut doubles = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("exact chunks")));
        let u: Vec<f64> = doubles.by_ref().take(count).collect();
        let v: Vec<f64> = doubles.collect();
        Ok(Self {
            kind,
            n_r: n_r as usize,
            n_theta: n_theta as usize,
            t: scalars[0],
            coord_lo: scalars[1],
            coord_hi: scalars[2],
            u,
            v,
        })
    }

    pub fn load(path: &Path) -> Result<Self, SnapshotError> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_every_bit() {
        let snap = Snapshot {
            kind: GridKind::PolarAnnulus,
            n_r: 5,
            n_theta: 4,
            t: 2.5,
            coord_lo: 1.0,
            coord_hi: 3.0,
            u: (0..20).map(|k| (k as f64).sin() * 1e-7).collect(),
            v: (0..20).map(|k| -(k as f64).cos() * 1e9).collect(),
        };
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 56 + 16 * 20);
        let back = Snapshot::read_from(buf.as_slice()).unwrap();
        assert_eq!(snap, back);
    }

    #[test]
    fn rejects_foreign_and_truncated_files() {
        assert!(matches!(
            Snapshot::read_from(&b"NOPE"[..]),
            Err(SnapshotError::BadMagic)
        ));
        let snap = Snapshot {
            kind: GridKind::RadialGeodesic,
            n_r: 3,
            n_theta: 1,
            t: 0.0,
            coord_lo: 1.0,
            coord_hi: 2.0,
            u: vec![1.0, 2.0, 3.0],
            v: vec![0.0; 3],
        };
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 1);
        assert!(matches!(
            Snapshot::read_from(buf.as_slice()),
            Err(SnapshotError::Io(_))
        ));
        let mut wrong_version = buf.clone();
        wrong_version[4] = 9;
        assert!(matches!(
            Snapshot::read_from(wrong_version.as_slice()),
            Err(SnapshotError::BadVersion(9))
        ));
    }
}
