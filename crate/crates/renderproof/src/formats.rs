//! PFM (linear float RGB), binary PPM (8-bit display RGB) and LMP1 lightmap
//! files.

use std::io::{self, Read, Write};

use renderproof_core::render::{DisplayImage, LightmapEntry, LightmapSet, LinearImage};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("truncated data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{0}")]
    Content(String),
}

/// Reads the next whitespace-delimited header token, skipping `#` comments.
fn token(data: &[u8], pos: &mut usize) -> Result<String, FormatError> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(FormatError::Header("unexpected end of header".into()));
    }
    Ok(String::from_utf8_lossy(&data[start..*pos]).into_owned())
}

fn number<T: std::str::FromStr>(data: &[u8], pos: &mut usize, what: &str) -> Result<T, FormatError> {
    let t = token(data, pos)?;
    t.parse()
        .map_err(|_| FormatError::Header(format!("invalid {what} {t:?}")))
}

/// Consumes the single whitespace byte that ends a header.
fn end_of_header(data: &[u8], pos: &mut usize) -> Result<(), FormatError> {
    match data.get(*pos) {
        Some(b) if b.is_ascii_whitespace() => {
            *pos += 1;
            Ok(())
        }
        _ => Err(FormatError::Header("missing newline after header".into())),
    }
}

fn dimensions(data: &[u8], pos: &mut usize) -> Result<(u32, u32), FormatError> {
    let w: u32 = number(data, pos, "width")?;
    let h: u32 = number(data, pos, "height")?;
    if w == 0 || h == 0 {
        return Err(FormatError::Header(format!("empty image {w}x{h}")));
    }
    Ok((w, h))
}

fn payload(data: &[u8], pos: usize, expected: usize) -> Result<&[u8], FormatError> {
    let found = data.len() - pos;
    if found < expected {
        return Err(FormatError::Truncated { expected, found });
    }
    Ok(&data[pos..pos + expected])
}

pub fn write_pfm<W: Write>(image: &LinearImage, mut out: W) -> io::Result<()> {
    write!(out, "PF\n{} {}\n-1.0\n", image.width, image.height)?;
    let w = image.width as usize;
    let mut buf = Vec::with_capacity(image.pixels.len() * 12);
    for row in image.pixels.chunks(w).rev() {
        for px in row {
            for c in px {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    out.write_all(&buf)
}

pub fn read_pfm<R: Read>(mut input: R) -> Result<LinearImage, FormatError> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut pos = 0;
    let magic = token(&data, &mut pos)?;
    if magic != "PF" {
        return Err(FormatError::Header(format!(
            "expected \"PF\" (RGB float map), found {magic:?}"
        )));
    }
    let (w, h) = dimensions(&data, &mut pos)?;
    let scale: f32 = number(&data, &mut pos, "scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(FormatError::Header(format!("invalid scale {scale}")));
    }
    end_of_header(&data, &mut pos)?;
    let bytes = payload(&data, pos, w as usize * h as usize * 12)?;
    let value = |b: &[u8]| {
        let b = [b[0], b[1], b[2], b[3]];
        if scale < 0.0 {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        }
    };
    let mut image = LinearImage::new(w, h);
    let row_bytes = w as usize * 12;
    for (y, row) in bytes.chunks(row_bytes).enumerate() {
        // Scanlines are stored bottom to top.
        let dst = (h as usize - 1 - y) * w as usize;
        for (x, px) in row.chunks(12).enumerate() {
            image.pixels[dst + x] = [value(&px[0..4]), value(&px[4..8]), value(&px[8..12])];
        }
    }
    Ok(image)
}

pub fn write_ppm<W: Write>(image: &DisplayImage, mut out: W) -> io::Result<()> {
    write!(out, "P6\n{} {}\n255\n", image.width, image.height)?;
    let bytes: Vec<u8> = image.pixels.iter().flatten().copied().collect();
    out.write_all(&bytes)
}

pub fn read_ppm<R: Read>(mut input: R) -> Result<DisplayImage, FormatError> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut pos = 0;
    let magic = token(&data, &mut pos)?;
    if magic != "P6" {
        return Err(FormatError::Header(format!(
            "expected \"P6\" (binary RGB), found {magic:?}"
        )));
    }
    let (w, h) = dimensions(&data, &mut pos)?;
    let maxval: u32 = number(&data, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(FormatError::Header(format!(
            "only 8-bit images (maxval 255) are supported, found {maxval}"
        )));
    }
    end_of_header(&data, &mut pos)?;
    let bytes = payload(&data, pos, w as usize * h as usize * 3)?;
    let pixels = bytes.chunks(3).map(|p| [p[0], p[1], p[2]]).collect();
    Ok(DisplayImage::new(w, h, pixels))
}

const LMP_MAGIC: &[u8; 4] = b"LMP1";

pub fn write_lightmaps<W: Write>(set: &LightmapSet, mut out: W) -> io::Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(LMP_MAGIC);
    buf.extend_from_slice(&(set.entries.len() as u32).to_le_bytes());
    for e in &set.entries {
        for v in [e.primitive, e.width, e.height] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend(e.used.iter().map(|&u| u as u8));
        for px in &e.irradiance {
            for c in px {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    out.write_all(&buf)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let found = self.data.len() - self.pos;
        if found < n {
            return Err(FormatError::Truncated { expected: n, found });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Reads an LMP1 file. The bake settings are not stored, so the result has
/// `settings: None`.
pub fn read_lightmaps<R: Read>(mut input: R) -> Result<LightmapSet, FormatError> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut c = Cursor {
        data: &data,
        pos: 0,
    };
    if c.take(4).ok() != Some(LMP_MAGIC.as_slice()) {
        return Err(FormatError::Header("expected magic \"LMP1\"".into()));
    }
    let count = c.u32()?;
    let mut entries = Vec::new();
    for k in 0..count {
        let (primitive, width, height) = (c.u32()?, c.u32()?, c.u32()?);
        if width == 0 || height == 0 {
            return Err(FormatError::Content(format!("entry {k}: empty grid")));
        }
        let n = width as usize * height as usize;
        let used = c
            .take(n)?
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(FormatError::Content(format!("entry {k}: used flag {b}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let irradiance = c
            .take(n * 12)?
            .chunks(12)
            .map(|p| {
                let f = |i: usize| f32::from_le_bytes([p[i], p[i + 1], p[i + 2], p[i + 3]]);
                [f(0), f(4), f(8)]
            })
            .collect::<Vec<_>>();
        if irradiance
            .iter()
            .flatten()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(FormatError::Content(format!(
                "entry {k}: irradiance must be finite and >= 0"
            )));
        }
        if entries.iter().any(|e: &LightmapEntry| e.primitive == primitive) {
            return Err(FormatError::Content(format!(
                "primitive {primitive} appears twice"
            )));
        }
        entries.push(LightmapEntry {
            primitive,
            width,
            height,
            used,
            irradiance,
        });
    }
    if c.pos != data.len() {
        return Err(FormatError::Content(format!(
            "{} trailing bytes",
            data.len() - c.pos
        )));
    }
    Ok(LightmapSet {
        entries,
        settings: None,
    })
}
