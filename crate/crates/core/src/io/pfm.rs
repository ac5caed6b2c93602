//! Portable float maps (`PF` colour, `Pf` greyscale).
//!
//! Rows are stored bottom to top on disk; [`Pfm::data`] is top to bottom.

use crate::error::{Error, Result};

const CTX: &str = "pfm";

#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Row-major, top row first, channels interleaved.
    pub data: Vec<f32>,
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::parse(CTX, 0, "truncated header"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| Error::parse(CTX, 0, "header is not ASCII"))
}

pub fn read_pfm(bytes: &[u8]) -> Result<Pfm> {
    let mut pos = 0;
    let channels = match header_token(bytes, &mut pos)? {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::parse(CTX, 1, format!("bad magic {other:?}"))),
    };
    let mut dim = |what: &str| -> Result<usize> {
        let tok = header_token(bytes, &mut pos)?;
        tok.parse::<usize>()
            .ok()
            .filter(|v| *v > 0)
            .ok_or_else(|| Error::parse(CTX, 2, format!("bad {what} {tok:?}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let scale_tok = header_token(bytes, &mut pos)?;
    let scale: f32 = scale_tok
        .parse()
        .ok()
        .filter(|s: &f32| *s != 0.0 && s.is_finite())
        .ok_or_else(|| Error::parse(CTX, 3, format!("bad scale {scale_tok:?}")))?;
    // Exactly one whitespace byte separates the header from the data.
    pos += 1;
    let count = width * height * channels;
    let body = bytes.get(pos..).unwrap_or(&[]);
    if body.len() < count * 4 {
        return Err(Error::InvalidInput(format!(
            "pfm body holds {} bytes, expected {}",
            body.len(),
            count * 4
        )));
    }
    let little = scale < 0.0;
    let row_len = width * channels;
    let mut data = vec![0.0f32; count];
    for (i, chunk) in body[..count * 4].chunks_exact(4).enumerate() {
        let b: [u8; 4] = chunk.try_into().unwrap();
        let v = if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        let (row, col) = (i / row_len, i % row_len);
        data[(height - 1 - row) * row_len + col] = v;
    }
    Ok(Pfm {
        width,
        height,
        channels,
        data,
    })
}

/// Little-endian output.
pub fn write_pfm(pfm: &Pfm) -> Result<Vec<u8>> {
    let magic = match pfm.channels {
        1 => "Pf",
        3 => "PF",
        c => {
            return Err(Error::InvalidInput(format!(
                "pfm supports 1 or 3 channels, got {c}"
            )))
        }
    };
    let row_len = pfm.width * pfm.channels;
    if pfm.data.len() != row_len * pfm.height {
        return Err(Error::InvalidInput(
            "pfm data length does not match dimensions".into(),
        ));
    }
    let mut out = format!("{magic}\n{} {}\n-1.0\n", pfm.width, pfm.height).into_bytes();
    out.reserve(pfm.data.len() * 4);
    for row in pfm.data.chunks_exact(row_len.max(1)).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}
