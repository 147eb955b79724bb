//! Field snapshot files.
//!
//! Binary layout: the 5 magic bytes `SPWV1`, then `d`, `L` and the number of
//! canonical indices as little-endian `u64`, then little-endian `f64`
//! values: the mean followed by `(b_n, c_n)` in lexicographic canonical order.
//! A phase state is two consecutive records, `u` then `ut`.

use std::io::{BufRead, Read, Write};

use super::field::{FourierField, PhaseState};
use super::lattice::Lattice;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"SPWV1";

pub fn write_field<W: Write>(mut w: W, f: &FourierField) -> Result<()> {
    w.write_all(MAGIC)?;
    for v in [f.dim(), f.cutoff(), f.lattice().len()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    w.write_all(&f.mean().to_le_bytes())?;
    for (b, c) in f.cos_coeffs().iter().zip(f.sin_coeffs()) {
        w.write_all(&b.to_le_bytes())?;
        w.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub fn read_field<R: Read>(mut r: R) -> Result<FourierField> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let dim = read_u64(&mut r)? as usize;
    let cutoff = read_u64(&mut r)? as usize;
    let count = read_u64(&mut r)? as usize;
    if dim == 0 || dim > 16 {
        return Err(Error::Snapshot(format!("implausible dimension {dim}")));
    }
    let expected = Lattice::shared(dim, cutoff).len();
    if count != expected {
        return Err(Error::Snapshot(format!(
            "count {count} does not match {expected} canonical indices for d={dim}, L={cutoff}"
        )));
    }
    let mean = read_f64(&mut r)?;
    let mut cos = Vec::with_capacity(count);
    let mut sin = Vec::with_capacity(count);
    for _ in 0..count {
        cos.push(read_f64(&mut r)?);
        sin.push(read_f64(&mut r)?);
    }
    FourierField::from_parts(dim, cutoff, mean, cos, sin)
}

pub fn write_state<W: Write>(mut w: W, st: &PhaseState) -> Result<()> {
    write_field(&mut w, &st.u)?;
    write_field(&mut w, &st.ut)
}

pub fn read_state<R: Read>(mut r: R) -> Result<PhaseState> {
    let u = read_field(&mut r)?;
    let ut = read_field(&mut r)?;
    PhaseState::new(u, ut)
}

/// Text form: a header line `SPWV1 d L count`, a line `mean a`, then one
/// line `n_1 ... n_d b c` per canonical index. Floats use the shortest
/// round-trip representation, so the form is lossless.
pub fn write_field_text<W: Write>(mut w: W, f: &FourierField) -> Result<()> {
    writeln!(w, "SPWV1 {} {} {}", f.dim(), f.cutoff(), f.lattice().len())?;
    writeln!(w, "mean {:?}", f.mean())?;
    let mut n = vec![0i64; f.dim()];
    for p in 0..f.lattice().len() {
        f.lattice().components_into(p, &mut n);
        for k in &n {
            write!(w, "{k} ")?;
        }
        writeln!(w, "{:?} {:?}", f.cos_coeffs()[p], f.sin_coeffs()[p])?;
    }
    Ok(())
}

pub fn read_field_text<R: BufRead>(r: R) -> Result<FourierField> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Snapshot("unexpected end of text snapshot".into()))?
            .map_err(Error::from)
    };
    let header = next()?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "SPWV1" {
        return Err(Error::Snapshot(format!("bad header {header:?}")));
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Snapshot(format!("bad integer {s:?}: {e}")))
    };
    let dim = parse_usize(parts[1])?;
    let cutoff = parse_usize(parts[2])?;
    let count = parse_usize(parts[3])?;
    let parse_f64 = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Snapshot(format!("bad float {s:?}: {e}")))
    };
    let mean_line = next()?;
    let mean = match mean_line.split_whitespace().collect::<Vec<_>>()[..] {
        ["mean", v] => parse_f64(v)?,
        _ => return Err(Error::Snapshot(format!("bad mean line {mean_line:?}"))),
    };
    let mut f = FourierField::zeros(dim, cutoff);
    if f.lattice().len() != count {
        return Err(Error::Snapshot("count does not match lattice".into()));
    }
    f.set_mean(mean);
    for _ in 0..count {
        let line = next()?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != dim + 2 {
            return Err(Error::Snapshot(format!("bad mode line {line:?}")));
        }
        let n = toks[..dim]
            .iter()
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|e| Error::Snapshot(format!("bad index {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let p = f
            .lattice()
            .position(&n)
            .ok_or_else(|| Error::Snapshot(format!("index {n:?} not canonical in box")))?;
        f.cos_coeffs_mut()[p] = parse_f64(toks[dim])?;
        f.sin_coeffs_mut()[p] = parse_f64(toks[dim + 1])?;
    }
    Ok(f)
}
