//! Grid file formats: PFM (float, lossless for `f32`) and binary PGM (P5).
//!
//! PFM files are written grayscale (`Pf`), little-endian (scale `-1.0`), with
//! rows stored bottom-to-top as the format prescribes. Both readers reject
//! dimensions above [`MAX_DIM`] per axis.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{NucError, Result};
use crate::grid::{Frame, Grid};
use crate::sensor::OffsetKind;

pub const MAX_DIM: usize = 16384;

/// Header tokenizer shared by the netpbm-style formats. Skips `#` comments.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
    kind: &'static str,
}

impl<'a> Header<'a> {
    fn token(&mut self) -> Result<&'a str> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(NucError::format(self.kind, "truncated header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| NucError::format(self.kind, "non-ASCII header"))
    }

    fn dimension(&mut self) -> Result<usize> {
        let tok = self.token()?;
        let v: usize = tok
            .parse()
            .map_err(|_| NucError::format(self.kind, format!("bad dimension `{tok}`")))?;
        if v == 0 || v > MAX_DIM {
            return Err(NucError::format(
                self.kind,
                format!("dimension {v} outside 1..={MAX_DIM}"),
            ));
        }
        Ok(v)
    }

    /// Consumes the single whitespace byte that separates header from payload.
    fn payload(self) -> Result<&'a [u8]> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(NucError::format(self.kind, "missing header terminator")),
        }
    }
}

pub fn encode_pfm(grid: &Grid) -> Vec<u8> {
    let (h, w) = grid.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(h * w * 4);
    for i in (0..h).rev() {
        for &v in grid.row(i) {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Grid> {
    let mut hdr = Header {
        bytes,
        pos: 0,
        kind: "PFM",
    };
    match hdr.token()? {
        "Pf" => {}
        "PF" => return Err(NucError::format("PFM", "colour PFM is not supported")),
        other => return Err(NucError::format("PFM", format!("bad magic `{other}`"))),
    }
    let w = hdr.dimension()?;
    let h = hdr.dimension()?;
    let scale_tok = hdr.token()?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| NucError::format("PFM", format!("bad scale `{scale_tok}`")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(NucError::format("PFM", "scale must be non-zero"));
    }
    let little = scale < 0.0;
    let payload = hdr.payload()?;
    if payload.len() != h * w * 4 {
        return Err(NucError::format(
            "PFM",
            format!(
                "expected {} payload bytes, found {}",
                h * w * 4,
                payload.len()
            ),
        ));
    }
    let mut data = vec![0.0; h * w];
    for (k, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (file_row, col) = (k / w, k % w);
        data[(h - 1 - file_row) * w + col] = v as f64;
    }
    Grid::new(h, w, data)
}

pub fn write_pfm(path: impl AsRef<Path>, grid: &Grid) -> Result<()> {
    fs::write(path, encode_pfm(grid))?;
    Ok(())
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Grid> {
    decode_pfm(&fs::read(path)?)
}

/// Affine value-to-code mapping used for integer export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMapping {
    pub low: f64,
    pub high: f64,
    pub maxval: u16,
}

impl LinearMapping {
    /// Maps the grid's minimum to 0 and its maximum to `maxval`.
    pub fn min_max(grid: &Grid, maxval: u16) -> Self {
        let (low, high) = grid
            .as_slice()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        LinearMapping { low, high, maxval }
    }

    pub fn quantize(&self, v: f64) -> u16 {
        let span = self.high - self.low;
        if span <= 0.0 {
            return 0;
        }
        let q = ((v - self.low) / span * self.maxval as f64).round();
        q.clamp(0.0, self.maxval as f64) as u16
    }
}

pub fn encode_pgm(grid: &Grid, mapping: &LinearMapping) -> Result<Vec<u8>> {
    if mapping.maxval == 0 {
        return Err(NucError::format("PGM", "maxval must be positive"));
    }
    let (h, w) = grid.dims();
    let wide = mapping.maxval > 255;
    let mut out = format!("P5\n{w} {h}\n{}\n", mapping.maxval).into_bytes();
    for &v in grid.as_slice() {
        let q = mapping.quantize(v);
        if wide {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    Ok(out)
}

/// Decodes a binary PGM into its integer codes (as `f64`) and its maxval.
pub fn decode_pgm(bytes: &[u8]) -> Result<(Grid, u16)> {
    let mut hdr = Header {
        bytes,
        pos: 0,
        kind: "PGM",
    };
    let magic = hdr.token()?;
    if magic != "P5" {
        return Err(NucError::format("PGM", format!("bad magic `{magic}`")));
    }
    let w = hdr.dimension()?;
    let h = hdr.dimension()?;
    let tok = hdr.token()?;
    let maxval: u16 = tok
        .parse()
        .ok()
        .filter(|&m| m > 0)
        .ok_or_else(|| NucError::format("PGM", format!("bad maxval `{tok}`")))?;
    let payload = hdr.payload()?;
    let bpp = if maxval > 255 { 2 } else { 1 };
    if payload.len() != h * w * bpp {
        return Err(NucError::format(
            "PGM",
            format!(
                "expected {} payload bytes, found {}",
                h * w * bpp,
                payload.len()
            ),
        ));
    }
    let data = if bpp == 2 {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect()
    } else {
        payload.iter().map(|&b| b as f64).collect()
    };
    Ok((Grid::new(h, w, data)?, maxval))
}

pub fn write_pgm(path: impl AsRef<Path>, grid: &Grid, mapping: &LinearMapping) -> Result<()> {
    fs::write(path, encode_pgm(grid, mapping)?)?;
    Ok(())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<(Grid, u16)> {
    decode_pgm(&fs::read(path)?)
}

/// JSON metadata stored next to a map file (`<name>.json` beside `<name>.pfm`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<OffsetKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc_convention: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<LinearMapping>,
}

pub fn sidecar_path(map_path: &Path) -> PathBuf {
    map_path.with_extension("json")
}

pub fn write_sidecar(map_path: &Path, sidecar: &Sidecar) -> Result<()> {
    let text = serde_json::to_string_pretty(sidecar)?;
    fs::write(sidecar_path(map_path), text + "\n")?;
    Ok(())
}

pub fn read_sidecar(map_path: &Path) -> Result<Sidecar> {
    let text = fs::read_to_string(sidecar_path(map_path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads any `.pfm` or `.pgm` file as a frame. PGM codes are taken verbatim.
pub fn read_frame(path: &Path) -> Result<Frame> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let grid = match ext.as_deref() {
        Some("pfm") => read_pfm(path)?,
        Some("pgm") => read_pgm(path)?.0,
        _ => {
            return Err(NucError::format(
                "frame",
                format!("unsupported file {}", path.display()),
            ))
        }
    };
    Frame::from_grid(grid)
}

/// All `.pfm`/`.pgm` files in `dir`, sorted by file name.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension()
                        .and_then(|e| e.to_str())
                        .map(str::to_ascii_lowercase)
                        .as_deref(),
                    Some("pfm") | Some("pgm")
                )
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn read_frame_dir(dir: &Path) -> Result<Vec<(PathBuf, Frame)>> {
    list_frame_files(dir)?
        .into_iter()
        .map(|p| read_frame(&p).map(|f| (p, f)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Grid {
        Grid::from_fn(3, 4, |i, j| i as f64 * 10.0 + j as f64 - 0.25).unwrap()
    }

    #[test]
    fn pfm_header_and_row_order() {
        let bytes = encode_pfm(&sample());
        assert!(bytes.starts_with(b"Pf\n4 3\n-1.0\n"));
        let payload = &bytes[b"Pf\n4 3\n-1.0\n".len()..];
        // first stored row is the bottom one
        assert_eq!(f32::from_le_bytes(payload[0..4].try_into().unwrap()), 19.75);
        assert_eq!(decode_pfm(&bytes).unwrap(), sample());
    }

    #[test]
    fn pfm_big_endian_is_read() {
        let g = sample();
        let mut bytes = b"Pf\n4 3\n1.0\n".to_vec();
        for i in (0..3).rev() {
            for &v in g.row(i) {
                bytes.extend_from_slice(&(v as f32).to_be_bytes());
            }
        }
        assert_eq!(decode_pfm(&bytes).unwrap(), g);
    }

    #[test]
    fn readers_reject_oversized_dims() {
        let bytes = b"Pf\n16385 2\n-1.0\n".to_vec();
        assert!(matches!(decode_pfm(&bytes), Err(NucError::Format { .. })));
        let bytes = b"P5\n2 20000\n255\n".to_vec();
        assert!(matches!(decode_pgm(&bytes), Err(NucError::Format { .. })));
    }

    #[test]
    fn pfm_rejects_truncation_and_colour() {
        let mut bytes = encode_pfm(&sample());
        bytes.pop();
        assert!(decode_pfm(&bytes).is_err());
        assert!(decode_pfm(b"PF\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0").is_err());
        assert!(decode_pfm(b"Pf\n2 2\n0\n").is_err());
    }

    #[test]
    fn pgm16_round_trip_codes() {
        let g = sample();
        let m = LinearMapping::min_max(&g, 65535);
        let bytes = encode_pgm(&g, &m).unwrap();
        assert!(bytes.starts_with(b"P5\n4 3\n65535\n"));
        let (codes, maxval) = decode_pgm(&bytes).unwrap();
        assert_eq!(maxval, 65535);
        assert_eq!(codes.get(0, 0), 0.0);
        assert_eq!(codes.get(2, 3), 65535.0);
        // each code decodes back within half a quantization step
        let step = (m.high - m.low) / 65535.0;
        for (c, v) in codes.as_slice().iter().zip(g.as_slice()) {
            assert!((m.low + c * step - v).abs() <= 0.5 * step + 1e-12);
        }
    }

    #[test]
    fn pgm_header_comments_and_8bit() {
        let bytes = b"P5\n# made by hand\n2 1\n255\n\x07\xff".to_vec();
        let (g, maxval) = decode_pgm(&bytes).unwrap();
        assert_eq!(maxval, 255);
        assert_eq!(g.as_slice(), &[7.0, 255.0]);
    }

    #[test]
    fn flat_grid_quantizes_to_zero() {
        let g = Grid::filled(2, 2, 3.0).unwrap();
        let m = LinearMapping::min_max(&g, 255);
        assert!(encode_pgm(&g, &m).unwrap().ends_with(&[0, 0, 0, 0]));
    }
}
