//! Binary checkpoint format, little endian throughout:
//!
//! ```text
//! magic "GZCK" | version u32 | kind u8 | dims [u32; 6]
//! tensor count u32 | per tensor: name len u16, name bytes, rows u32, cols u32
//! payload: f32 weights in layout order
//! crc32 of everything above
//! ```

use super::model::{layout, Dims, ModelKind};
use super::network::Params;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"GZCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_params<W: Write>(params: &Params, mut out: W) -> Result<()> {
    let mut buf = Vec::with_capacity(64 + params.weights.len() * 4);
    buf.extend_from_slice(&CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.push(params.kind.code());
    for d in params.dims.to_array() {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    let specs = layout(params.kind, &params.dims);
    buf.extend_from_slice(&(specs.len() as u32).to_le_bytes());
    for s in &specs {
        buf.extend_from_slice(&(s.name.len() as u16).to_le_bytes());
        buf.extend_from_slice(s.name.as_bytes());
        buf.extend_from_slice(&(s.rows as u32).to_le_bytes());
        buf.extend_from_slice(&(s.cols as u32).to_le_bytes());
    }
    for w in &params.weights {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    out.write_all(&buf)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
}

pub fn read_params<R: Read>(mut input: R) -> Result<Params> {
    let mut all = Vec::new();
    input.read_to_end(&mut all)?;
    if all.len() < 4 + 4 + 1 + 24 + 4 + 4 {
        return Err(Error::Checkpoint("truncated file".into()));
    }
    if all[..4] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let (body, tail) = all.split_at(all.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    if crc32fast::hash(body) != stored {
        return Err(Error::Checkpoint("checksum mismatch".into()));
    }
    let code = r.take(1)?[0];
    let kind = ModelKind::from_code(code).ok_or_else(|| Error::Checkpoint(format!("unknown model code {code}")))?;
    let mut dims = [0u32; 6];
    for d in &mut dims {
        *d = r.u32()?;
    }
    let dims = Dims::from_array(dims);
    dims.validate(kind).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let expected = layout(kind, &dims);
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(Error::Checkpoint(format!("expected {} tensors, found {count}", expected.len())));
    }
    for spec in &expected {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
        if name != spec.name || rows != spec.rows || cols != spec.cols {
            return Err(Error::Checkpoint(format!(
                "tensor {name} {rows}x{cols} does not match expected {} {}x{}",
                spec.name, spec.rows, spec.cols
            )));
        }
    }
    let total: usize = expected.iter().map(|s| s.len()).sum();
    let payload = r.take(total * 4)?;
    if r.pos != body.len() {
        return Err(Error::Checkpoint("trailing bytes after payload".into()));
    }
    let weights = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Params { kind, dims, weights })
}

pub fn save_params(params: &Params, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    write_params(params, std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<Params> {
    read_params(std::fs::File::open(path)?)
}

/// [`load_params`], rejecting a checkpoint of a different model kind.
pub fn load_params_as(path: &Path, kind: ModelKind) -> Result<Params> {
    let p = load_params(path)?;
    if p.kind != kind {
        return Err(Error::Checkpoint(format!("{} holds a {} model, expected {kind}", path.display(), p.kind)));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Problem;

    #[test]
    fn kind_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gzck");
        save_params(&Params::for_problem(ModelKind::Gcn, Problem::Mvc, 1).unwrap(), &path).unwrap();
        assert!(load_params_as(&path, ModelKind::Gcn).is_ok());
        assert!(matches!(load_params_as(&path, ModelKind::Gin), Err(Error::Checkpoint(_))));
    }

    fn bytes(p: &Params) -> Vec<u8> {
        let mut v = Vec::new();
        write_params(p, &mut v).unwrap();
        v
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for kind in ModelKind::ALL {
            let p = Params::for_problem(kind, Problem::MaxCut, 7).unwrap();
            assert_eq!(read_params(bytes(&p).as_slice()).unwrap(), p);
        }
    }

    #[test]
    fn corruption_is_detected() {
        let p = Params::for_problem(ModelKind::Gcn, Problem::Mvc, 1).unwrap();
        let good = bytes(&p);
        let mut flipped = good.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 0x40;
        assert!(matches!(read_params(flipped.as_slice()), Err(Error::Checkpoint(_))));
        assert!(matches!(read_params(&good[..good.len() - 9]), Err(Error::Checkpoint(_))));
        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(matches!(read_params(magic.as_slice()), Err(Error::Checkpoint(_))));
    }
}
