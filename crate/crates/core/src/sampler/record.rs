//! Binary loop-record file.
//!
//! Layout (little-endian): 8-byte magic `CLELOOP\0`, one version byte, then
//! per sample: u64 sample index, u32 loop count, and per loop a u32 point
//! count followed by that many (x: f64, y: f64) pairs.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::LoopConfig;
use crate::error::{Error, Result};

pub const RECORD_MAGIC: [u8; 8] = *b"CLELOOP\0";
pub const RECORD_VERSION: u8 = 1;

pub struct LoopRecordWriter<W: Write> {
    out: W,
}

impl<W: Write> LoopRecordWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        out.write_all(&RECORD_MAGIC)?;
        out.write_all(&[RECORD_VERSION])?;
        Ok(LoopRecordWriter { out })
    }

    pub fn write(&mut self, index: u64, cfg: &LoopConfig) -> Result<()> {
        self.out.write_all(&index.to_le_bytes())?;
        self.out.write_all(&(cfg.loops.len() as u32).to_le_bytes())?;
        for l in &cfg.loops {
            self.out.write_all(&(l.points.len() as u32).to_le_bytes())?;
            for p in &l.points {
                self.out.write_all(&p.re.to_le_bytes())?;
                self.out.write_all(&p.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_loop_records<W: Write>(out: W, samples: &[LoopConfig]) -> Result<()> {
    let mut w = LoopRecordWriter::new(out)?;
    for (k, s) in samples.iter().enumerate() {
        w.write(k as u64, s)?;
    }
    w.finish()?;
    Ok(())
}

fn read_exact_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        let k = r.read(&mut buf[filled..])?;
        if k == 0 {
            if filled == 0 {
                return Ok(false);
            }
            return Err(Error::Format("truncated loop record".into()));
        }
        filled += k;
    }
    Ok(true)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    if !read_exact_or_eof(r, &mut b)? {
        return Err(Error::Format("truncated loop record".into()));
    }
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    if !read_exact_or_eof(r, &mut b)? {
        return Err(Error::Format("truncated loop record".into()));
    }
    Ok(f64::from_le_bytes(b))
}

/// (sample index, loops as point lists) for every record.
pub fn read_loop_records<R: Read>(mut r: R) -> Result<Vec<(u64, Vec<Vec<Complex64>>)>> {
    let mut magic = [0u8; 8];
    if !read_exact_or_eof(&mut r, &mut magic)? || magic != RECORD_MAGIC {
        return Err(Error::Format("bad loop-record magic".into()));
    }
    let mut v = [0u8; 1];
    if !read_exact_or_eof(&mut r, &mut v)? || v[0] != RECORD_VERSION {
        return Err(Error::Format(format!("unsupported loop-record version {}", v[0])));
    }
    let mut out = Vec::new();
    loop {
        let mut ib = [0u8; 8];
        if !read_exact_or_eof(&mut r, &mut ib)? {
            break;
        }
        let index = u64::from_le_bytes(ib);
        let n_loops = read_u32(&mut r)?;
        let mut loops = Vec::with_capacity(n_loops as usize);
        for _ in 0..n_loops {
            let n = read_u32(&mut r)?;
            let mut pts = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let x = read_f64(&mut r)?;
                let y = read_f64(&mut r)?;
                pts.push(Complex64::new(x, y));
            }
            loops.push(pts);
        }
        out.push((index, loops));
    }
    Ok(out)
}
