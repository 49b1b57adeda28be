//! Optional manager checkpoint: `"PCGK"`, version u8, N u64 BE, length
//! u32 BE, then the packed counts.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::NetError;
use crate::cga::ProbabilityVector;
use crate::protocol::{decode_counts, encode_counts};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"PCGK";
const CHECKPOINT_VERSION: u8 = 1;

/// Writes through a temporary file and renames it into place.
pub fn write_checkpoint(path: &Path, v: &ProbabilityVector) -> Result<(), NetError> {
    let mut bytes = Vec::with_capacity(17);
    bytes.extend_from_slice(&CHECKPOINT_MAGIC);
    bytes.push(CHECKPOINT_VERSION);
    bytes.extend_from_slice(&v.population_size().to_be_bytes());
    bytes.extend_from_slice(&(v.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&encode_counts(v));

    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp)?;
    file.write_all(&bytes)?;
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<ProbabilityVector, NetError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 17 || bytes[0..4] != CHECKPOINT_MAGIC {
        return Err(NetError::Checkpoint(format!(
            "{} is not a checkpoint",
            path.display()
        )));
    }
    if bytes[4] != CHECKPOINT_VERSION {
        return Err(NetError::Checkpoint(format!(
            "unsupported checkpoint version {}",
            bytes[4]
        )));
    }
    let n = u64::from_be_bytes(bytes[5..13].try_into().unwrap());
    let length = u32::from_be_bytes(bytes[13..17].try_into().unwrap()) as usize;
    Ok(decode_counts(&bytes[17..], n, length)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_rejects_garbage() {
        let dir = std::env::temp_dir().join(format!("pcga-ckpt-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("vector.ckpt");
        let v = ProbabilityVector::from_counts(vec![0, 3, 10, 7], 10).unwrap();
        write_checkpoint(&path, &v).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), v);

        fs::write(&path, b"nonsense").unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(NetError::Checkpoint(_))
        ));
        fs::remove_dir_all(&dir).unwrap();
    }
}
