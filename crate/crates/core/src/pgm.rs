//! Greyscale PGM (P5 binary / P2 ASCII) encoding and decoding, maxval 255.

use std::io::{self, Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a PGM file: magic {0:?}")]
    BadMagic(String),
    #[error("malformed PGM header: {0}")]
    BadHeader(String),
    #[error("unsupported maxval {0} (only 255 is supported)")]
    BadMaxval(u32),
    #[error("pixel data truncated: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("P2 sample {0} exceeds maxval 255")]
    SampleOutOfRange(u64),
}

/// Decoded greyscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreyImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

/// Write binary P5, maxval 255.
pub fn write_p5(w: &mut impl Write, width: u32, height: u32, pixels: &[u8]) -> io::Result<()> {
    debug_assert_eq!(pixels.len(), width as usize * height as usize);
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(pixels)
}

/// Write ASCII P2, maxval 255, one image row per text line.
pub fn write_p2(w: &mut impl Write, width: u32, height: u32, pixels: &[u8]) -> io::Result<()> {
    debug_assert_eq!(pixels.len(), width as usize * height as usize);
    write!(w, "P2\n{width} {height}\n255\n")?;
    for row in pixels.chunks(width as usize) {
        let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Read either P5 or P2.
pub fn read(r: &mut impl Read) -> Result<GreyImage, PgmError> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    if data.len() < 2 {
        return Err(PgmError::BadMagic(String::from_utf8_lossy(&data).into()));
    }
    let magic = &data[..2];
    match magic {
        b"P5" => read_p5(&data),
        b"P2" => read_p2(&data),
        _ => Err(PgmError::BadMagic(
            String::from_utf8_lossy(&data[..2]).into(),
        )),
    }
}

/// Scan header tokens after the magic, skipping whitespace and `#` comments.
/// Returns (width, height, maxval, offset of first data byte).
fn parse_header(data: &[u8]) -> Result<(u32, u32, u32, usize), PgmError> {
    let mut pos = 2; // past magic
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(PgmError::BadHeader("expected integer".into()));
        }
        let text = std::str::from_utf8(&data[start..pos]).expect("digits are utf8");
        *field = text
            .parse()
            .map_err(|_| PgmError::BadHeader(format!("integer out of range: {text}")))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(PgmError::BadHeader("missing separator after maxval".into()));
    }
    pos += 1;
    if fields[2] != 255 {
        return Err(PgmError::BadMaxval(fields[2]));
    }
    if fields[0] == 0 || fields[1] == 0 {
        return Err(PgmError::BadHeader("zero width or height".into()));
    }
    Ok((fields[0], fields[1], fields[2], pos))
}

fn read_p5(data: &[u8]) -> Result<GreyImage, PgmError> {
    let (width, height, _, offset) = parse_header(data)?;
    let expected = width as usize * height as usize;
    let raster = &data[offset..];
    if raster.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            got: raster.len(),
        });
    }
    Ok(GreyImage {
        width,
        height,
        pixels: raster[..expected].to_vec(),
    })
}

fn read_p2(data: &[u8]) -> Result<GreyImage, PgmError> {
    let (width, height, _, offset) = parse_header(data)?;
    let expected = width as usize * height as usize;
    let text = std::str::from_utf8(&data[offset..])
        .map_err(|_| PgmError::BadHeader("P2 raster is not ASCII".into()))?;
    let mut pixels = Vec::with_capacity(expected);
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_ascii_whitespace() {
            let v: u64 = tok
                .parse()
                .map_err(|_| PgmError::BadHeader(format!("bad P2 sample: {tok}")))?;
            if v > 255 {
                return Err(PgmError::SampleOutOfRange(v));
            }
            pixels.push(v as u8);
        }
    }
    if pixels.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            got: pixels.len(),
        });
    }
    pixels.truncate(expected);
    Ok(GreyImage {
        width,
        height,
        pixels,
    })
}
