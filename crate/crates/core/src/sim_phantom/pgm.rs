//! 16-bit binary PGM dumps of frames in centi-degrees Celsius.

use super::frame::{ThermalFrame, FRAME_COLS, FRAME_ROWS, PX_PER_MM};
use crate::error::{Error, Result};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

pub fn write_pgm(path: &Path, frame: &ThermalFrame) -> Result<()> {
    let mut buf = Vec::with_capacity(32 + 2 * frame.pixels.len());
    write!(buf, "P5\n{FRAME_COLS} {FRAME_ROWS}\n65535\n")?;
    for &t in &frame.pixels {
        let v = (t * 100.0).round().clamp(0.0, 65535.0) as u16;
        buf.extend_from_slice(&v.to_be_bytes());
    }
    std::fs::write(path, buf)?;
    Ok(())
}

fn header_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        let c = byte[0] as char;
        if c == '#' {
            let mut skip = String::new();
            r.read_line(&mut skip)?;
        } else if c.is_ascii_whitespace() {
            if !tok.is_empty() {
                return Ok(tok);
            }
        } else {
            tok.push(c);
        }
    }
}

/// Reads a frame written by [`write_pgm`]; the timestamp is not stored.
pub fn read_pgm(path: &Path) -> Result<ThermalFrame> {
    let bad = |m: &str| Error::Config(format!("{}: {m}", path.display()));
    let mut r = BufReader::new(std::fs::File::open(path)?);
    if header_token(&mut r)? != "P5" {
        return Err(bad("not a binary PGM"));
    }
    let parse = |s: String| s.parse::<usize>().map_err(|_| bad("bad header"));
    let (w, h, max) = (parse(header_token(&mut r)?)?, parse(header_token(&mut r)?)?, parse(header_token(&mut r)?)?);
    if w != FRAME_COLS || h != FRAME_ROWS || max != 65535 {
        return Err(bad("unexpected dimensions or depth"));
    }
    let mut raw = vec![0u8; 2 * w * h];
    r.read_exact(&mut raw)?;
    let pixels = raw.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 100.0).collect();
    Ok(ThermalFrame {
        pixels,
        px_per_mm: PX_PER_MM,
        timestamp: 0.0,
        active: None,
        ambient: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_to_centidegrees() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.pgm");
        let mut f = ThermalFrame::uniform(20.0, 0.0);
        f.set(3, 4, 61.237);
        write_pgm(&path, &f).unwrap();
        let g = read_pgm(&path).unwrap();
        assert_eq!(g.get(3, 4), 61.24);
        assert_eq!(g.get(0, 0), 20.0);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), "P5\n384 288\n65535\n".len() + 2 * 384 * 288);
    }
}
