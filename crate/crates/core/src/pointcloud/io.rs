//! `PCB1` cloud files: magic, u32 LE count, u8 dims (= 3), then f32 LE triples.

use std::path::Path;

use super::PointCloud;
use crate::error::{Error, Result};

pub const CLOUD_MAGIC: [u8; 4] = *b"PCB1";
const HEADER_LEN: usize = 9;

pub fn encode_cloud(cloud: &PointCloud) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + cloud.len() * 12);
    buf.extend_from_slice(&CLOUD_MAGIC);
    let count = u32::try_from(cloud.len()).expect("point count exceeds u32");
    buf.extend_from_slice(&count.to_le_bytes());
    buf.push(3);
    for p in cloud.points() {
        for &c in p {
            buf.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    buf
}

pub fn decode_cloud(bytes: &[u8]) -> Result<PointCloud> {
    if bytes.len() >= 4 && bytes[..4] != CLOUD_MAGIC {
        let mut found = [0u8; 4];
        found.copy_from_slice(&bytes[..4]);
        return Err(Error::BadMagic {
            expected: CLOUD_MAGIC,
            found,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dims = bytes[8];
    if dims != 3 {
        return Err(Error::BadDims(dims));
    }
    let expected = HEADER_LEN + count * 12;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::InvalidArgument(format!(
            "{} trailing bytes after {count} points",
            bytes.len() - expected
        )));
    }
    let points = bytes[HEADER_LEN..]
        .chunks_exact(12)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes(c[i..i + 4].try_into().unwrap()) as f64;
            [f(0), f(4), f(8)]
        })
        .collect();
    PointCloud::new(points)
}

pub fn save_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    std::fs::write(path, encode_cloud(cloud)).map_err(|e| Error::io(path, e))
}

pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cloud(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Pcg32;
    use proptest::prelude::*;

    fn random_cloud(rng: &mut Pcg32, n: usize) -> PointCloud {
        PointCloud::new((0..n).map(|_| [rng.normal(), rng.normal(), rng.normal()]).collect()).unwrap()
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pcb");
        let mut rng = Pcg32::seed_from(1);
        let cloud = random_cloud(&mut rng, 33);
        save_cloud(&path, &cloud).unwrap();
        let back = load_cloud(&path).unwrap();
        for (a, b) in cloud.points().iter().zip(back.points()) {
            for k in 0..3 {
                assert_eq!(a[k] as f32, b[k] as f32);
            }
        }
        assert_eq!(encode_cloud(&back), std::fs::read(&path).unwrap());
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_cloud(&PointCloud::new(vec![[0.0; 3]]).unwrap());
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_cloud(&bytes), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn truncated_payload() {
        let mut rng = Pcg32::seed_from(2);
        let mut bytes = encode_cloud(&random_cloud(&mut rng, 10));
        bytes.truncate(bytes.len() - 12);
        assert!(matches!(
            decode_cloud(&bytes),
            Err(Error::Truncated { expected: 129, found: 117 })
        ));
        assert!(matches!(decode_cloud(b"PCB1\x01"), Err(Error::Truncated { .. })));
    }

    #[test]
    fn wrong_dims() {
        let mut bytes = encode_cloud(&PointCloud::new(vec![[0.0; 3]]).unwrap());
        bytes[8] = 2;
        assert!(matches!(decode_cloud(&bytes), Err(Error::BadDims(2))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip_is_exact_at_f32(
            pts in prop::collection::vec(prop::array::uniform3(-1.0e3f32..1.0e3), 1..50)
        ) {
            let cloud = PointCloud::new(pts.iter().map(|p| p.map(f64::from)).collect()).unwrap();
            let bytes = encode_cloud(&cloud);
            let back = decode_cloud(&bytes).unwrap();
            prop_assert_eq!(&back, &cloud);
            prop_assert_eq!(encode_cloud(&back), bytes);
        }
    }
}
