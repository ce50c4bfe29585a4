//! Dense row-major scalar grids and the morphology/convolution primitives
//! used to build ray candidate maps.
//!
//! Maps store `f32` values; every accumulation runs in `f64`. Convolution
//! uses zero padding at the borders: space outside the frame is empty.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Magic bytes of the flat binary map container.
pub const MAP_MAGIC: [u8; 4] = *b"EPSM";

/// Dtype tag for `f32` payloads in the map container.
pub const MAP_DTYPE_F32: u32 = 0;

/// An `H x W` grid of scalars, row-major.
///
/// Houses silhouettes, depth maps, weight maps and candidate maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ScalarMap {
    /// A map filled with a constant value.
    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyMap(width, height));
        }
        Ok(Self {
            width,
            height,
            data: vec![value; width * height],
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    /// Wraps an existing row-major buffer.
    pub fn from_data(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyMap(width, height));
        }
        if data.len() != width * height {
            return Err(Error::BadDataLength {
                len: data.len(),
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f32) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = value;
    }

    pub fn same_dimensions(&self, other: &ScalarMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Sum of all values, accumulated in f64.
    pub fn total(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    /// Number of pixels strictly greater than `threshold`.
    pub fn count_above(&self, threshold: f32) -> usize {
        self.data.iter().filter(|&&v| v > threshold).count()
    }

    /// Writes the flat binary container: 16-byte header (magic `EPSM`,
    /// u32 width, u32 height, u32 dtype tag, little-endian) followed by the
    /// row-major f32 payload.
    pub fn write_container<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&MAP_MAGIC)?;
        out.write_all(&(self.width as u32).to_le_bytes())?;
        out.write_all(&(self.height as u32).to_le_bytes())?;
        out.write_all(&MAP_DTYPE_F32.to_le_bytes())?;
        for &v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn save_container<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut file = BufWriter::new(File::create(path)?);
        self.write_container(&mut file)?;
        file.flush()?;
        Ok(())
    }

    /// Reads a map from the flat binary container format.
    pub fn read_container<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 16];
        input.read_exact(&mut header)?;
        if header[0..4] != MAP_MAGIC {
            return Err(Error::BadContainer(format!(
                "bad magic {:?}",
                &header[0..4]
            )));
        }
        let width = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let dtype = u32::from_le_bytes(header[12..16].try_into().unwrap());
        if dtype != MAP_DTYPE_F32 {
            return Err(Error::BadContainer(format!("unsupported dtype {dtype}")));
        }
        let mut payload = vec![0u8; width * height * 4];
        input.read_exact(&mut payload)?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_data(width, height, data)
    }

    pub fn load_container<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_container(BufReader::new(File::open(path)?))
    }

    /// Writes an 8-bit binary portable graymap (P5), mapping [0,1] to
    /// [0,255] with clamping. Intended for visual inspection.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    pub fn save_pgm<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut file = BufWriter::new(File::create(path)?);
        self.write_pgm(&mut file)?;
        file.flush()?;
        Ok(())
    }
}

/// A `k x k` averaging kernel filled with `1/k^2`. `k` must be odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxKernelSpec {
    size: usize,
}

impl BoxKernelSpec {
    pub fn new(size: usize) -> Result<Self> {
        if size % 2 == 0 {
            return Err(Error::EvenKernel(size));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        (self.size - 1) / 2
    }

    /// The kernel weight `1/k^2`.
    pub fn normalization(&self) -> f64 {
        1.0 / (self.size as f64 * self.size as f64)
    }
}

/// Convolves `map` with a `k x k` averaging kernel, zero-padded at borders.
///
/// Each output pixel is the mean of the `k x k` neighborhood, with pixels
/// outside the grid contributing zero. Implemented as two separable passes
/// whose f64 sums are only normalized at the end, so the accumulation
/// tracks the direct `O(k^2)` definition to ~1e-12 before the f32 store.
pub fn box_convolve(map: &ScalarMap, kernel: BoxKernelSpec) -> Result<ScalarMap> {
    let means = box_convolve_f64(map, kernel)?;
    let data = means.iter().map(|&v| v as f32).collect();
    ScalarMap::from_data(map.width(), map.height(), data)
}

/// The f64 accumulation behind [`box_convolve`], before the f32 store.
fn box_convolve_f64(map: &ScalarMap, kernel: BoxKernelSpec) -> Result<Vec<f64>> {
    let (w, h) = (map.width(), map.height());
    let limit = 2 * w.max(h) + 1;
    if kernel.size() > limit {
        return Err(Error::KernelTooLarge {
            size: kernel.size(),
            limit,
            width: w,
            height: h,
        });
    }
    let r = kernel.radius();

    // Horizontal pass: unnormalized window sums per row.
    let mut rows = vec![0.0f64; w * h];
    for y in 0..h {
        let row = &map.data()[y * w..(y + 1) * w];
        let out = &mut rows[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            let mut sum = 0.0f64;
            for v in &row[lo..=hi] {
                sum += *v as f64;
            }
            out[x] = sum;
        }
    }

    // Vertical pass over the row sums, normalized once.
    let norm = kernel.normalization();
    let mut means = vec![0.0f64; w * h];
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            let mut sum = 0.0f64;
            for yy in lo..=hi {
                sum += rows[yy * w + x];
            }
            means[y * w + x] = sum * norm;
        }
    }
    Ok(means)
}

/// Binary dilation with a square structuring element.
///
/// Output is 1.0 wherever any input pixel within Chebyshev distance
/// `radius` is strictly positive, else 0.0. Radius 0 binarizes the input.
pub fn binary_dilate(map: &ScalarMap, radius: usize) -> Result<ScalarMap> {
    let (w, h) = (map.width(), map.height());

    // Horizontal pass: sliding count of positive entries in the window.
    let mut rows = vec![0u8; w * h];
    for y in 0..h {
        let row = &map.data()[y * w..(y + 1) * w];
        let out = &mut rows[y * w..(y + 1) * w];
        let mut count = 0usize;
        for x in 0..radius.min(w) {
            if row[x] > 0.0 {
                count += 1;
            }
        }
        for x in 0..w {
            if x + radius < w && row[x + radius] > 0.0 {
                count += 1;
            }
            out[x] = (count > 0) as u8;
            if x >= radius && row[x - radius] > 0.0 {
                count -= 1;
            }
        }
    }

    let mut data = vec![0.0f32; w * h];
    for x in 0..w {
        let mut count = 0usize;
        for y in 0..radius.min(h) {
            if rows[y * w + x] > 0 {
                count += 1;
            }
        }
        for y in 0..h {
            if y + radius < h && rows[(y + radius) * w + x] > 0 {
                count += 1;
            }
            data[y * w + x] = (count > 0) as u8 as f32;
            if y >= radius && rows[(y - radius) * w + x] > 0 {
                count -= 1;
            }
        }
    }
    ScalarMap::from_data(w, h, data)
}

/// Pixelwise sum. No clamping: sums may exceed 1.
pub fn map_add(a: &ScalarMap, b: &ScalarMap) -> Result<ScalarMap> {
    if !a.same_dimensions(b) {
        return Err(Error::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| x + y)
        .collect();
    ScalarMap::from_data(a.width(), a.height(), data)
}
