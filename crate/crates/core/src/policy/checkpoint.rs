//! Binary genome files.
//!
//! All integers and floats are little-endian.
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `DDGENOME`                        |
//! | 8      | 4    | format version (u32, currently 1)       |
//! | 12     | 1    | mode (0 = full5, 1 = yxx2)              |
//! | 13     | 3    | reserved, zero                          |
//! | 16     | 16   | input, h1, h2, output (u32 each)        |
//! | 32     | 8    | parameter count (u64)                   |
//! | 40     | 8·n  | parameters (f64)                        |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AgentGenome, GenomeShape, PolicyMode};
use crate::error::{Error, Result};

pub const GENOME_MAGIC: &[u8; 8] = b"DDGENOME";
pub const GENOME_VERSION: u32 = 1;

pub fn write_genome<W: Write>(genome: &AgentGenome, mut w: W) -> Result<()> {
    let s = genome.shape();
    w.write_all(GENOME_MAGIC)?;
    w.write_all(&GENOME_VERSION.to_le_bytes())?;
    let mode = match genome.mode() {
        PolicyMode::Full5 => 0u8,
        PolicyMode::Yxx2 => 1u8,
    };
    w.write_all(&[mode, 0, 0, 0])?;
    for d in [s.input, s.h1, s.h2, s.output] {
        let d = u32::try_from(d).map_err(|_| Error::Checkpoint(format!("layer size {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    w.write_all(&(genome.params().len() as u64).to_le_bytes())?;
    for p in genome.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| Error::Checkpoint(format!("truncated genome: {e}")))?;
    Ok(buf)
}

pub fn read_genome<R: Read>(mut r: R) -> Result<AgentGenome> {
    if &read_array::<8, _>(&mut r)? != GENOME_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != GENOME_VERSION {
        return Err(Error::Checkpoint(format!("unsupported genome version {version}")));
    }
    let mode = match read_array::<4, _>(&mut r)? {
        [0, 0, 0, 0] => PolicyMode::Full5,
        [1, 0, 0, 0] => PolicyMode::Yxx2,
        other => return Err(Error::Checkpoint(format!("bad mode bytes {other:?}"))),
    };
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = u32::from_le_bytes(read_array(&mut r)?) as usize;
    }
    let shape = GenomeShape { input: dims[0], h1: dims[1], h2: dims[2], output: dims[3] };
    let count = u64::from_le_bytes(read_array(&mut r)?) as usize;
    if count != shape.param_count() {
        return Err(Error::Checkpoint(format!("parameter count {count} does not match shape {shape:?}")));
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        params.push(f64::from_le_bytes(read_array(&mut r)?));
    }
    AgentGenome::new(shape, mode, params).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save_genome(genome: &AgentGenome, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_genome(genome, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_genome(path: &Path) -> Result<AgentGenome> {
    read_genome(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::init_genome;
    use rand::SeedableRng;

    fn genome() -> AgentGenome {
        let shape = GenomeShape::for_mode(PolicyMode::Yxx2, 6, 3, 2);
        init_genome(shape, PolicyMode::Yxx2, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn layout_and_roundtrip() {
        let g = genome();
        let mut buf = Vec::new();
        write_genome(&g, &mut buf).unwrap();
        assert_eq!(buf.len(), 40 + 8 * g.params().len());
        assert_eq!(&buf[..8], b"DDGENOME");
        assert_eq!(&buf[8..16], &[1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&buf[16..20], &13u32.to_le_bytes());
        assert_eq!(&buf[40..48], &g.params()[0].to_le_bytes());
        assert_eq!(read_genome(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let mut buf = Vec::new();
        write_genome(&genome(), &mut buf).unwrap();
        assert!(read_genome(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_genome(bad.as_slice()), Err(Error::Checkpoint(_))));
        let mut bad = buf.clone();
        bad[8] = 2;
        assert!(read_genome(bad.as_slice()).is_err());
        let mut bad = buf;
        bad[32] += 1;
        assert!(read_genome(bad.as_slice()).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        save_genome(&genome(), &path).unwrap();
        assert_eq!(load_genome(&path).unwrap(), genome());
    }
}
