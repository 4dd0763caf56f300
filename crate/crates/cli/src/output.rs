//! Grid files: CSV, the `KSF1` binary container and PNG heatmaps.

use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

pub const MAGIC: &[u8; 4] = b"KSF1";

/// `stem` with `suffix` appended to its file name.
pub fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = stem.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Rank 1: one value per line. Rank 2: one row per line. Higher ranks: the
/// trailing two axes as blocks separated by blank lines.
pub fn format_csv(values: &[f64], shape: &[usize]) -> String {
    let mut out = String::with_capacity(values.len() * 12);
    let cols = match shape.len() {
        0 | 1 => 1,
        _ => shape[shape.len() - 1],
    };
    let block = match shape.len() {
        0..=2 => values.len().max(1),
        _ => shape[shape.len() - 2] * cols,
    };
    for (b, chunk) in values.chunks(block).enumerate() {
        if b > 0 {
            out.push('\n');
        }
        for row in chunk.chunks(cols.max(1)) {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{v}").expect("writing to a string");
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_csv(path: &Path, values: &[f64], shape: &[usize]) -> Result<()> {
    std::fs::write(path, format_csv(values, shape)).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KsfGrid {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub meta: String,
}

/// `KSF1`, u32 rank, u32 dims, f64 values row-major, u32 metadata length,
/// UTF-8 JSON metadata; all little-endian.
pub fn encode_ksf(values: &[f64], shape: &[usize], meta: &str) -> Result<Vec<u8>> {
    ensure!(
        shape.iter().product::<usize>() == values.len(),
        "{} values do not fill shape {shape:?}",
        values.len()
    );
    let u32_of = |n: usize| u32::try_from(n).context("size does not fit in u32");
    let mut out = Vec::with_capacity(16 + 4 * shape.len() + 8 * values.len() + meta.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&u32_of(shape.len())?.to_le_bytes());
    for &d in shape {
        out.extend_from_slice(&u32_of(d)?.to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&u32_of(meta.len())?.to_le_bytes());
    out.extend_from_slice(meta.as_bytes());
    Ok(out)
}

pub fn decode_ksf(bytes: &[u8]) -> Result<KsfGrid> {
    let mut pos = 0;
    let mut take = |n: usize| -> Result<&[u8]> {
        ensure!(bytes.len() >= pos + n, "truncated KSF1 file at byte {pos}");
        let s = &bytes[pos..pos + n];
        pos += n;
        Ok(s)
    };
    if take(4)? != MAGIC {
        bail!("not a KSF1 file (bad magic)");
    }
    let read_u32 = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize;
    let rank = read_u32(take(4)?);
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(read_u32(take(4)?));
    }
    let n: usize = shape.iter().product();
    let raw = take(8 * n)?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let len = read_u32(take(4)?);
    let meta = String::from_utf8(take(len)?.to_vec()).context("metadata is not UTF-8")?;
    ensure!(pos == bytes.len(), "{} trailing bytes after KSF1 metadata", bytes.len() - pos);
    Ok(KsfGrid { shape, values, meta })
}

pub fn write_ksf(path: &Path, values: &[f64], shape: &[usize], meta: &str) -> Result<()> {
    std::fs::write(path, encode_ksf(values, shape, meta)?).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_ksf(path: &Path) -> Result<KsfGrid> {
    decode_ksf(&std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?)
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// 1st and 99th percentiles.
pub fn clip_range(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (quantile(&sorted, 0.01), quantile(&sorted, 0.99))
}

const COLD: [f64; 3] = [59.0, 76.0, 192.0];
const MID: [f64; 3] = [221.0, 221.0, 221.0];
const HOT: [f64; 3] = [180.0, 4.0, 38.0];

/// Blue-grey-red map of `u ∈ [0, 1]`.
pub fn diverging(u: f64) -> [u8; 3] {
    let u = u.clamp(0.0, 1.0);
    let (a, b, t) = if u < 0.5 { (COLD, MID, 2.0 * u) } else { (MID, HOT, 2.0 * u - 1.0) };
    std::array::from_fn(|k| (a[k] + (b[k] - a[k]) * t).round() as u8)
}

/// Colour index of each value: the clipped range is symmetric about zero when
/// it straddles zero, so zero maps to the midpoint.
fn normalizer(values: &[f64]) -> impl Fn(f64) -> f64 {
    let (lo, hi) = clip_range(values);
    let (lo, hi) = if lo < 0.0 && hi > 0.0 {
        let m = lo.abs().max(hi);
        (-m, m)
    } else {
        (lo, hi)
    };
    move |v| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 }
}

pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

/// Heatmap of the last two axes of the first slice; row 0 at the top.
/// Small grids are upscaled by an integer factor.
pub fn heatmap(values: &[f64], shape: &[usize]) -> Image {
    let (rows, cols) = match shape.len() {
        0 | 1 => return line_plot(values),
        r => (shape[r - 2], shape[r - 1]),
    };
    let slice = &values[..rows * cols];
    let norm = normalizer(slice);
    let scale = (256 / rows.min(cols).max(1)).clamp(1, 16);
    let (width, height) = (cols * scale, rows * scale);
    let mut rgb = vec![0u8; width * height * 3];
    for y in 0..height {
        for x in 0..width {
            let c = diverging(norm(slice[(y / scale) * cols + x / scale]));
            rgb[(y * width + x) * 3..][..3].copy_from_slice(&c);
        }
    }
    Image { width, height, rgb }
}

/// Polyline of a 1-D field over a zero line, values clipped like heatmaps.
pub fn line_plot(values: &[f64]) -> Image {
    const W: usize = 800;
    const H: usize = 300;
    const PAD: usize = 10;
    let mut rgb = vec![255u8; W * H * 3];
    let (lo, hi) = clip_range(values);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
    let to_y = |v: f64| {
        let u = ((v.clamp(lo, hi) - lo) / (hi - lo)).clamp(0.0, 1.0);
        (PAD as f64 + (1.0 - u) * (H - 2 * PAD - 1) as f64).round() as i64
    };
    let to_x = |i: usize| {
        let denom = values.len().saturating_sub(1).max(1) as f64;
        (PAD as f64 + i as f64 / denom * (W - 2 * PAD - 1) as f64).round() as i64
    };
    let mut put = |x: i64, y: i64, c: [u8; 3]| {
        if (0..W as i64).contains(&x) && (0..H as i64).contains(&y) {
            rgb[(y as usize * W + x as usize) * 3..][..3].copy_from_slice(&c);
        }
    };
    if lo < 0.0 && hi > 0.0 {
        let y0 = to_y(0.0);
        for x in PAD..W - PAD {
            put(x as i64, y0, [170, 170, 170]);
        }
    }
    let ink = [20, 20, 20];
    for i in 0..values.len() {
        let (x0, y0) = (to_x(i), to_y(values[i]));
        let (x1, y1) = if i + 1 < values.len() { (to_x(i + 1), to_y(values[i + 1])) } else { (x0, y0) };
        // Bresenham
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            put(x, y, ink);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }
    Image { width: W, height: H, rgb }
}

pub fn write_png(path: &Path, image: &Image) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), image.width as u32, image.height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header()?;
    writer.write_image_data(&image.rgb)?;
    writer.finish()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
