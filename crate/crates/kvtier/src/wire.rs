//! Little-endian read/write helpers shared by the binary file formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) fn write_u8<W: Write>(w: &mut W, v: u8) -> Result<()> {
    w.write_all(&[v])?;
    Ok(())
}

pub(crate) fn write_u16<W: Write>(w: &mut W, v: u16) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f32<W: Write>(w: &mut W, v: f32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f32s<W: Write>(w: &mut W, vs: &[f32]) -> Result<()> {
    let mut buf = Vec::with_capacity(vs.len() * 4);
    for v in vs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn fill<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format(format!("truncated file while reading {what}"))
        } else {
            Error::Io(e)
        }
    })
}

pub(crate) fn read_u8<R: Read>(r: &mut R, what: &str) -> Result<u8> {
    let mut buf = [0u8; 1];
    fill(r, &mut buf, what)?;
    Ok(buf[0])
}

pub(crate) fn read_u16<R: Read>(r: &mut R, what: &str) -> Result<u16> {
    let mut buf = [0u8; 2];
    fill(r, &mut buf, what)?;
    Ok(u16::from_le_bytes(buf))
}

pub(crate) fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    fill(r, &mut buf, what)?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut buf = [0u8; 8];
    fill(r, &mut buf, what)?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn read_f32<R: Read>(r: &mut R, what: &str) -> Result<f32> {
    let mut buf = [0u8; 4];
    fill(r, &mut buf, what)?;
    Ok(f32::from_le_bytes(buf))
}

pub(crate) fn read_f32s<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<f32>> {
    let mut buf = vec![0u8; n * 4];
    fill(r, &mut buf, what)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub(crate) fn read_magic<R: Read>(r: &mut R, expected: &[u8; 4], what: &str) -> Result<()> {
    let mut buf = [0u8; 4];
    fill(r, &mut buf, what)?;
    if &buf != expected {
        return Err(Error::Format(format!(
            "bad magic for {what}: expected {:?}, got {:?}",
            expected, buf
        )));
    }
    Ok(())
}
