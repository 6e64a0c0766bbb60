use std::io::{Read, Write};
use std::path::Path;

use crate::data::TemporalKB;
use crate::error::{Error, Result};
use crate::model::{Block, Hyper, ParameterStore, Variant};

const MAGIC: &[u8; 4] = b"T2B1";
const HEADER_LEN: usize = 4 + 5 * 4 + 2 * 8;

/// Serializes `params`: magic, five little-endian `u32` (d, |E|, |R|, |T|,
/// variant code), `γ` and `α` as `f64`, then every block in checkpoint
/// order as `f32`.
pub fn write_checkpoint(params: &ParameterStore, out: &mut impl Write) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * params.param_count());
    buf.extend_from_slice(MAGIC);
    for n in [
        params.dim,
        params.num_entities,
        params.num_relations,
        params.num_times,
    ] {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    buf.extend_from_slice(&params.variant.code().to_le_bytes());
    buf.extend_from_slice(&params.hyper.gamma.to_le_bytes());
    buf.extend_from_slice(&params.hyper.alpha.to_le_bytes());
    for block in Block::ALL {
        for &x in params.block(block) {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)
}

pub fn read_checkpoint(input: &mut impl Read) -> Result<ParameterStore> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Checkpoint("truncated header".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let (dim, entities, relations, times) = (u32_at(0), u32_at(1), u32_at(2), u32_at(3));
    let variant = Variant::from_code(u32_at(4) as u32).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let hyper = Hyper {
        gamma: f64_at(24),
        alpha: f64_at(32),
    };
    let mut store = ParameterStore::zeros(dim, entities, relations, times, variant, hyper);
    let expected = HEADER_LEN + 4 * store.param_count();
    if bytes.len() != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} bytes, found {}{}",
            bytes.len(),
            if bytes.len() < expected { " (truncated)" } else { "" }
        )));
    }
    let mut floats = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64);
    for block in Block::ALL {
        for x in store.block_mut(block).iter_mut() {
            *x = floats.next().unwrap();
        }
    }
    Ok(store)
}

pub fn save_checkpoint(params: &ParameterStore, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(params, &mut file).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ParameterStore> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut file)
}

/// Fails unless `params` was trained on a knowledge base of the same shape.
pub fn check_compatible(params: &ParameterStore, kb: &TemporalKB) -> Result<()> {
    for (what, have, want) in [
        ("entities", params.num_entities, kb.num_entities()),
        ("relations", params.num_relations, kb.num_model_relations()),
        ("timestamps", params.num_times, kb.num_times()),
    ] {
        if have != want {
            return Err(Error::DimensionMismatch(format!(
                "checkpoint has {have} {what}, dataset has {want}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{RawStatement, TimeScope};
    use crate::rng::{stream, Stream};

    fn store() -> ParameterStore {
        let mut rng = stream(4, Stream::Init);
        let hyper = Hyper {
            gamma: 12.5,
            alpha: 0.3,
        };
        ParameterStore::initialized(5, 7, 4, 6, Variant::parse("dm,tns").unwrap(), hyper, &mut rng)
    }

    #[test]
    fn round_trip_within_f32() {
        let params = store();
        let mut buf = Vec::new();
        write_checkpoint(&params, &mut buf).unwrap();
        let back = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(back.hyper, params.hyper);
        assert_eq!(back.variant, params.variant);
        for block in Block::ALL {
            for (a, b) in params.block(block).iter().zip(back.block(block)) {
                // init values are below 3 in magnitude
                assert!((a - b).abs() <= 6e-8 * a.abs().max(1.0) * 4.0);
            }
        }
        let mut again = Vec::new();
        write_checkpoint(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn small_values_round_trip_within_ulp_bound() {
        let mut params = store();
        for x in params.entity.iter_mut() {
            *x = x.clamp(-1.0, 1.0);
        }
        let mut buf = Vec::new();
        write_checkpoint(&params, &mut buf).unwrap();
        let back = read_checkpoint(&mut buf.as_slice()).unwrap();
        let max = params
            .entity
            .iter()
            .zip(&back.entity)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max <= 6e-8, "{max}");
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let mut buf = Vec::new();
        write_checkpoint(&store(), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_checkpoint(&mut bad.as_slice()), Err(Error::Checkpoint(m)) if m.contains("magic")));
        let cut = &buf[..buf.len() - 3];
        assert!(matches!(read_checkpoint(&mut &cut[..]), Err(Error::Checkpoint(m)) if m.contains("truncated")));
        let cut = &buf[..10];
        assert!(read_checkpoint(&mut &cut[..]).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let kb = TemporalKB::from_raw(
            &[RawStatement::new("a", "r", "b", TimeScope::Instant(2000))],
            &[],
            &[],
        )
        .unwrap();
        let fits = ParameterStore::zeros(2, 2, 2, 1, Variant::default(), Hyper::default());
        check_compatible(&fits, &kb).unwrap();
        let wrong = ParameterStore::zeros(2, 3, 2, 1, Variant::default(), Hyper::default());
        assert!(matches!(check_compatible(&wrong, &kb), Err(Error::DimensionMismatch(m)) if m.contains("entities")));
    }
}
