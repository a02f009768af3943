//! 8-bit rasters and the PNM family of formats (P2, P3, P5, P6).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{bounds, contains_point, Point};

/// A row-major 8-bit image with 1 or 3 interleaved channels.
///
/// Pixel `(i, j)` covers `[i, i+1) x [j, j+1)` in continuous coordinates, so
/// its centre is `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::from_data(width, height, channels, vec![0; width * height * channels])
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::validation(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height}x{channels} raster",
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Bilinear sample at a continuous position; `None` outside the image.
    pub fn sample(&self, p: Point, c: usize) -> Option<f64> {
        let (fx, fy) = (p.x - 0.5, p.y - 0.5);
        let (w, h) = (self.width as f64, self.height as f64);
        if !(fx >= -0.5 && fy >= -0.5 && fx <= w - 0.5 && fy <= h - 0.5) {
            return None;
        }
        let fx = fx.clamp(0.0, w - 1.0);
        let fy = fy.clamp(0.0, h - 1.0);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let v = |x, y| self.get(x, y, c) as f64;
        let top = v(x0, y0) * (1.0 - tx) + v(x1, y0) * tx;
        let bot = v(x0, y1) * (1.0 - tx) + v(x1, y1) * tx;
        Some(top * (1.0 - ty) + bot * ty)
    }

    /// Whether any channel of the pixel is nonzero.
    pub fn is_set(&self, x: usize, y: usize) -> bool {
        (0..self.channels).any(|c| self.get(x, y, c) != 0)
    }
}

/// Binary mask of the pixels whose centres fall inside `poly`.
pub fn rasterize_polygon(poly: &[Point], width: usize, height: usize) -> Vec<bool> {
    let mut mask = vec![false; width * height];
    let Some((lo, hi)) = bounds(poly) else {
        return mask;
    };
    let y0 = (lo.y - 0.5).floor().max(0.0) as usize;
    let y1 = ((hi.y - 0.5).ceil().max(0.0) as usize).min(height.saturating_sub(1));
    let x0 = (lo.x - 0.5).floor().max(0.0) as usize;
    let x1 = ((hi.x - 0.5).ceil().max(0.0) as usize).min(width.saturating_sub(1));
    if poly.len() < 3 || width == 0 || height == 0 {
        return mask;
    }
    for y in y0..=y1 {
        for x in x0..=x1 {
            let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
            if contains_point(poly, c) {
                mask[y * width + x] = true;
            }
        }
    }
    mask
}

fn pnm_err(source: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line: 0,
        message: message.into(),
    }
}

/// Parses P2, P3, P5 or P6 data with a maximum value of at most 255.
/// Samples are rescaled to the full 8-bit range.
pub fn parse_pnm(bytes: &[u8], source: &str) -> Result<Raster> {
    let mut pos = 0usize;
    let mut token = || -> Option<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token().ok_or_else(|| pnm_err(source, "empty file"))?;
    let (channels, binary) = match magic.as_str() {
        "P2" => (1, false),
        "P3" => (3, false),
        "P5" => (1, true),
        "P6" => (3, true),
        other => return Err(pnm_err(source, format!("unsupported magic `{other}`"))),
    };
    let mut header = [0usize; 3];
    for (slot, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
        let t = token().ok_or_else(|| pnm_err(source, format!("missing {name}")))?;
        *slot = t
            .parse()
            .map_err(|_| pnm_err(source, format!("invalid {name} `{t}`")))?;
    }
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 255 {
        return Err(pnm_err(source, format!("maxval {maxval} outside 1..=255")));
    }
    let count = width * height * channels;
    let mut data = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from the samples
        let start = pos + 1;
        let body = bytes
            .get(start..start + count)
            .ok_or_else(|| pnm_err(source, "truncated sample data"))?;
        data.extend_from_slice(body);
    } else {
        for _ in 0..count {
            let t = token().ok_or_else(|| pnm_err(source, "truncated sample data"))?;
            let v: usize = t
                .parse()
                .map_err(|_| pnm_err(source, format!("invalid sample `{t}`")))?;
            data.push(v.min(maxval) as u8);
        }
    }
    if maxval != 255 {
        for v in &mut data {
            *v = ((*v as usize * 255 + maxval / 2) / maxval).min(255) as u8;
        }
    }
    Raster::from_data(width, height, channels, data)
}

pub fn read_pnm(path: &Path) -> Result<Raster> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pnm(&bytes, &path.display().to_string())
}

/// Encodes as binary PGM (P5) or PPM (P6).
pub fn encode_pnm(r: &Raster) -> Vec<u8> {
    let magic = if r.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", r.width, r.height).into_bytes();
    out.extend_from_slice(&r.data);
    out
}

/// Encodes as plain-text PGM (P2) or PPM (P3).
pub fn encode_pnm_ascii(r: &Raster) -> String {
    let magic = if r.channels == 1 { "P2" } else { "P3" };
    let mut out = format!("{magic}\n{} {}\n255\n", r.width, r.height);
    for row in r.data.chunks(r.width * r.channels) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_pnm(path: &Path, r: &Raster) -> Result<()> {
    fs::write(path, encode_pnm(r)).map_err(|e| Error::io(path, e))
}
