//! Morton-ordered color planes and their compression.
//!
//! Voxel colors are laid out row-major on a grid whose sides are multiples
//! of 8, then either stored verbatim (`Raw`) or converted to YCbCr, chroma
//! subsampled 2x2, uniformly quantized and run-length coded (`Quant`).

use serde::{Deserialize, Serialize};

use super::voxel::VoxelSet;
use super::CodecError;

/// Maximum run length of one RLE pair.
const MAX_RUN: usize = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ColorMode {
    #[serde(alias = "raw")]
    Raw,
    #[serde(alias = "quant")]
    Quant,
}

impl ColorMode {
    pub fn to_u8(self) -> u8 {
        match self {
            ColorMode::Raw => 0,
            ColorMode::Quant => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(ColorMode::Raw),
            1 => Some(ColorMode::Quant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantParams {
    pub luma_bits: u8,
    pub chroma_bits: u8,
}

impl Default for QuantParams {
    fn default() -> Self {
        Self {
            luma_bits: 6,
            chroma_bits: 4,
        }
    }
}

impl QuantParams {
    pub fn validate(&self) -> Result<(), CodecError> {
        for (name, bits) in [
            ("luma_bits", self.luma_bits),
            ("chroma_bits", self.chroma_bits),
        ] {
            if !(2..=8).contains(&bits) {
                return Err(CodecError::InvalidConfig(format!(
                    "{name} = {bits} outside [2, 8]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorGrid {
    pub width: usize,
    pub height: usize,
    /// Number of valid colors; the rest is padding.
    pub n: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl ColorGrid {
    pub fn capacity(&self) -> usize {
        self.width * self.height
    }
}

fn round_up8(v: usize) -> usize {
    v.div_ceil(8) * 8
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while r * r < n {
        r += 1;
    }
    r
}

/// Grid dimensions for `n` colors; `(0, 0)` when there are none.
pub fn grid_dims(n: usize) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    let width = round_up8(ceil_sqrt(n));
    let height = round_up8(n.div_ceil(width));
    (width, height)
}

/// Writes colors row-major in Morton order, padding with the last color.
pub fn pack_colors(voxels: &VoxelSet) -> ColorGrid {
    let n = voxels.len();
    let (width, height) = grid_dims(n);
    let mut pixels: Vec<[u8; 3]> = voxels.cells.iter().map(|c| c.1).collect();
    if let Some(&last) = pixels.last() {
        pixels.resize(width * height, last);
    }
    ColorGrid {
        width,
        height,
        n,
        pixels,
    }
}

pub fn unpack_colors(grid: &ColorGrid, n: usize) -> Result<Vec<[u8; 3]>, CodecError> {
    if n > grid.capacity() {
        return Err(CodecError::Size {
            requested: n,
            capacity: grid.capacity(),
        });
    }
    Ok(grid.pixels[..n].to_vec())
}

// Full-range BT.601 (JFIF) in 8.8 fixed point.

fn rgb_to_ycbcr([r, g, b]: [u8; 3]) -> [u8; 3] {
    let (r, g, b) = (r as i32, g as i32, b as i32);
    let y = (77 * r + 150 * g + 29 * b + 128) >> 8;
    let cb = ((-43 * r - 85 * g + 128 * b + 128) >> 8) + 128;
    let cr = ((128 * r - 107 * g - 21 * b + 128) >> 8) + 128;
    [y, cb, cr].map(|v| v.clamp(0, 255) as u8)
}

fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    let (y, cb, cr) = (y as i32, cb as i32 - 128, cr as i32 - 128);
    let r = y + ((359 * cr + 128) >> 8);
    let g = y - ((88 * cb + 183 * cr + 128) >> 8);
    let b = y + ((454 * cb + 128) >> 8);
    [r, g, b].map(|v| v.clamp(0, 255) as u8)
}

fn quantize(v: u8, bits: u8) -> u8 {
    let shift = 8 - bits as u32;
    if shift == 0 {
        return v;
    }
    let max = (1u32 << bits) - 1;
    ((v as u32 + (1 << (shift - 1))) >> shift).min(max) as u8
}

fn dequantize(q: u8, bits: u8) -> u8 {
    ((q as u32) << (8 - bits as u32)).min(255) as u8
}

fn rle_encode(values: &[u8], out: &mut Vec<u8>) {
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        let mut run = 1;
        while run < MAX_RUN && i + run < values.len() && values[i + run] == v {
            run += 1;
        }
        out.push(run as u8);
        out.push(v);
        i += run;
    }
}

/// Decodes exactly `count` values starting at `*pos`.
fn rle_decode(bytes: &[u8], pos: &mut usize, count: usize) -> Result<Vec<u8>, CodecError> {
    let mut values = Vec::with_capacity(count);
    while values.len() < count {
        if *pos + 2 > bytes.len() {
            return Err(CodecError::bitstream(*pos, "truncated run-length pair"));
        }
        let (run, v) = (bytes[*pos] as usize, bytes[*pos + 1]);
        if run == 0 {
            return Err(CodecError::bitstream(*pos, "zero-length run"));
        }
        if values.len() + run > count {
            return Err(CodecError::bitstream(*pos, "run overflows plane"));
        }
        values.resize(values.len() + run, v);
        *pos += 2;
    }
    Ok(values)
}

/// Compresses a color grid. `Quant` payloads start with the two quantizer
/// bit depths so the plane is self-describing. An empty grid compresses to
/// zero bytes in either mode.
pub fn compress_colors(grid: &ColorGrid, mode: ColorMode, quant: &QuantParams) -> Vec<u8> {
    if grid.n == 0 {
        return Vec::new();
    }
    match mode {
        ColorMode::Raw => grid.pixels[..grid.n].iter().flatten().copied().collect(),
        ColorMode::Quant => {
            let (w, h) = (grid.width, grid.height);
            let ycc: Vec<[u8; 3]> = grid.pixels.iter().map(|&p| rgb_to_ycbcr(p)).collect();
            let luma: Vec<u8> = ycc
                .iter()
                .map(|c| quantize(c[0], quant.luma_bits))
                .collect();
            let (cw, ch) = (w / 2, h / 2);
            let mut cb = Vec::with_capacity(cw * ch);
            let mut cr = Vec::with_capacity(cw * ch);
            for by in 0..ch {
                for bx in 0..cw {
                    let idx = [
                        2 * by * w + 2 * bx,
                        2 * by * w + 2 * bx + 1,
                        (2 * by + 1) * w + 2 * bx,
                        (2 * by + 1) * w + 2 * bx + 1,
                    ];
                    let avg = |k: usize| {
                        let s: u32 = idx.iter().map(|&i| ycc[i][k] as u32).sum();
                        ((s + 2) / 4) as u8
                    };
                    cb.push(quantize(avg(1), quant.chroma_bits));
                    cr.push(quantize(avg(2), quant.chroma_bits));
                }
            }
            let mut out = vec![quant.luma_bits, quant.chroma_bits];
            rle_encode(&luma, &mut out);
            rle_encode(&cb, &mut out);
            rle_encode(&cr, &mut out);
            out
        }
    }
}

/// Inverse of [`compress_colors`] for a `width` x `height` grid holding `n`
/// valid colors.
pub fn decompress_colors(
    bytes: &[u8],
    mode: ColorMode,
    width: usize,
    height: usize,
    n: usize,
) -> Result<Vec<[u8; 3]>, CodecError> {
    if n > width * height {
        return Err(CodecError::Size {
            requested: n,
            capacity: width * height,
        });
    }
    if n == 0 {
        if !bytes.is_empty() {
            return Err(CodecError::bitstream(0, "color bytes for an empty frame"));
        }
        return Ok(Vec::new());
    }
    match mode {
        ColorMode::Raw => {
            if bytes.len() != 3 * n {
                return Err(CodecError::bitstream(
                    bytes.len().min(3 * n),
                    format!(
                        "raw color plane is {} bytes, expected {}",
                        bytes.len(),
                        3 * n
                    ),
                ));
            }
            Ok(bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
        }
        ColorMode::Quant => {
            if bytes.len() < 2 {
                return Err(CodecError::bitstream(
                    bytes.len(),
                    "missing quantizer header",
                ));
            }
            let quant = QuantParams {
                luma_bits: bytes[0],
                chroma_bits: bytes[1],
            };
            quant
                .validate()
                .map_err(|_| CodecError::bitstream(0, "quantizer bit depth outside [2, 8]"))?;
            let (cw, ch) = (width / 2, height / 2);
            let mut pos = 2;
            let luma = rle_decode(bytes, &mut pos, width * height)?;
            let cb = rle_decode(bytes, &mut pos, cw * ch)?;
            let cr = rle_decode(bytes, &mut pos, cw * ch)?;
            if pos != bytes.len() {
                return Err(CodecError::bitstream(
                    pos,
                    "trailing bytes after color planes",
                ));
            }
            Ok((0..n)
                .map(|i| {
                    let (x, y) = (i % width, i / width);
                    let c = (y / 2) * cw + x / 2;
                    ycbcr_to_rgb(
                        dequantize(luma[i], quant.luma_bits),
                        dequantize(cb[c], quant.chroma_bits),
                        dequantize(cr[c], quant.chroma_bits),
                    )
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn voxels_with(colors: &[[u8; 3]]) -> VoxelSet {
        VoxelSet {
            depth: 8,
            cells: colors
                .iter()
                .enumerate()
                .map(|(i, &c)| (i as u64 * 3, c))
                .collect(),
        }
    }

    fn gradient_grid(w: usize, h: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> ColorGrid {
        let pixels = (0..w * h).map(|i| f(i % w, i / w)).collect();
        ColorGrid {
            width: w,
            height: h,
            n: w * h,
            pixels,
        }
    }

    #[test]
    fn dims_follow_the_rounding_rule() {
        assert_eq!(grid_dims(0), (0, 0));
        assert_eq!(grid_dims(1), (8, 8));
        assert_eq!(grid_dims(64), (8, 8));
        assert_eq!(grid_dims(65), (16, 8));
        assert_eq!(grid_dims(100), (16, 8));
        assert_eq!(grid_dims(50_000), (224, 224));
    }

    #[test]
    fn single_color_fills_the_grid() {
        let g = pack_colors(&voxels_with(&[[9, 8, 7]]));
        assert_eq!((g.width, g.height), (8, 8));
        assert_eq!(g.pixels, vec![[9, 8, 7]; 64]);
    }

    #[test]
    fn hundred_colors_layout() {
        let colors: Vec<[u8; 3]> = (0..100u8).map(|i| [i, 255 - i, i / 2]).collect();
        let g = pack_colors(&voxels_with(&colors));
        assert_eq!((g.width, g.height), (16, 8));
        assert_eq!(&g.pixels[..100], &colors[..]);
        assert!(g.pixels[100..].iter().all(|&p| p == colors[99]));
        assert_eq!(unpack_colors(&g, 100).unwrap(), colors);
    }

    #[test]
    fn unpack_bounds() {
        let g = pack_colors(&voxels_with(&[[1, 2, 3]; 10]));
        assert!(unpack_colors(&g, 0).unwrap().is_empty());
        assert_eq!(unpack_colors(&g, 64).unwrap().len(), 64);
        assert_eq!(
            unpack_colors(&g, 65),
            Err(CodecError::Size {
                requested: 65,
                capacity: 64
            })
        );
    }

    #[test]
    fn raw_is_lossless() {
        let colors: Vec<[u8; 3]> = (0..777u32)
            .map(|i| [(i * 7) as u8, (i * 13) as u8, (i * 31) as u8])
            .collect();
        let g = pack_colors(&voxels_with(&colors));
        let bytes = compress_colors(&g, ColorMode::Raw, &QuantParams::default());
        assert_eq!(bytes.len(), 3 * 777);
        let back = decompress_colors(&bytes, ColorMode::Raw, g.width, g.height, g.n).unwrap();
        assert_eq!(back, colors);
    }

    #[test]
    fn uniform_grid_compresses_below_one_percent() {
        let g = gradient_grid(256, 256, |_, _| [120, 60, 200]);
        let raw = compress_colors(&g, ColorMode::Raw, &QuantParams::default()).len();
        let q = compress_colors(&g, ColorMode::Quant, &QuantParams::default()).len();
        assert!((q as f64) < 0.01 * raw as f64, "{q} vs {raw}");
    }

    #[test]
    fn quant_decode_is_deterministic() {
        let g = gradient_grid(32, 16, |x, y| [(x * 8) as u8, (y * 16) as u8, 99]);
        let bytes = compress_colors(&g, ColorMode::Quant, &QuantParams::default());
        let a = decompress_colors(&bytes, ColorMode::Quant, 32, 16, g.n).unwrap();
        let b = decompress_colors(&bytes, ColorMode::Quant, 32, 16, g.n).unwrap();
        assert_eq!(a, b);
    }

    fn max_channel_error(g: &ColorGrid, q: &QuantParams) -> u32 {
        let bytes = compress_colors(g, ColorMode::Quant, q);
        let back = decompress_colors(&bytes, ColorMode::Quant, g.width, g.height, g.n).unwrap();
        g.pixels
            .iter()
            .zip(&back)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] as i32 - b[k] as i32).unsigned_abs()))
            .max()
            .unwrap()
    }

    fn colored_gradients() -> [ColorGrid; 2] {
        [
            gradient_grid(64, 64, |x, y| {
                [(140 + x) as u8, (100 + y) as u8, (80 + (x + y) / 2) as u8]
            }),
            gradient_grid(64, 32, |x, y| {
                [(200 - x) as u8, (150 - y) as u8, (120 - x / 2) as u8]
            }),
        ]
    }

    /// Brute-force max per-channel error scans on smooth gradients. The
    /// ceil(256 / 2^luma_bits) + 8 bound holds when chroma quantization is
    /// not the limiting term: on neutral content, or with 8 chroma bits.
    #[test]
    fn quant_error_on_smooth_gradients() {
        let q = QuantParams::default();
        let bound = 256u32.div_ceil(1 << q.luma_bits) + 8;
        let gray = gradient_grid(128, 64, |x, _| [(x * 2) as u8; 3]);
        assert!(max_channel_error(&gray, &q) <= bound);

        let fine_chroma = QuantParams {
            chroma_bits: 8,
            ..q
        };
        for g in &colored_gradients() {
            let e = max_channel_error(g, &fine_chroma);
            assert!(e <= bound, "max error {e} > {bound}");
        }
    }

    /// With 4 chroma bits a half-step chroma error of 8 reaches blue scaled
    /// by 1.772, so colored content needs half a luma step plus 15, plus 2
    /// for fixed-point rounding and subsampling on a gentle slope.
    #[test]
    fn quant_error_with_coarse_chroma() {
        let q = QuantParams::default();
        let half_luma = (256u32 >> q.luma_bits).div_ceil(2);
        let half_chroma = (256u32 >> q.chroma_bits) as f64 / 2.0;
        let bound = half_luma + (1.772 * half_chroma).ceil() as u32 + 2;
        assert_eq!(bound, 19);
        for g in &colored_gradients() {
            let e = max_channel_error(g, &q);
            assert!(e <= bound, "max error {e} > {bound}");
        }
    }

    #[test]
    fn malformed_rle_is_rejected() {
        let g = gradient_grid(8, 8, |x, _| [x as u8 * 30; 3]);
        let bytes = compress_colors(&g, ColorMode::Quant, &QuantParams::default());
        assert!(decompress_colors(&bytes[..bytes.len() - 1], ColorMode::Quant, 8, 8, 64).is_err());
        let mut extra = bytes.clone();
        extra.extend_from_slice(&[1, 0]);
        assert!(decompress_colors(&extra, ColorMode::Quant, 8, 8, 64).is_err());
        let mut zero_run = bytes.clone();
        zero_run[2] = 0;
        assert!(matches!(
            decompress_colors(&zero_run, ColorMode::Quant, 8, 8, 64),
            Err(CodecError::Bitstream { offset: 2, .. })
        ));
        let mut bad_bits = bytes;
        bad_bits[0] = 9;
        assert!(decompress_colors(&bad_bits, ColorMode::Quant, 8, 8, 64).is_err());
    }

    #[test]
    fn colorspace_roundtrip_is_close() {
        for r in (0..=255u32).step_by(15) {
            for g in (0..=255u32).step_by(15) {
                for b in (0..=255u32).step_by(15) {
                    let c = [r as u8, g as u8, b as u8];
                    let [y, cb, cr] = rgb_to_ycbcr(c);
                    let back = ycbcr_to_rgb(y, cb, cr);
                    for k in 0..3 {
                        assert!(
                            (c[k] as i32 - back[k] as i32).abs() <= 2,
                            "{c:?} -> {back:?}"
                        );
                    }
                }
            }
        }
    }
}
