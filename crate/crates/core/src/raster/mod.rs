//! Raster containers and pixel-level plumbing.
//!
//! Four container types cover everything the pipelines move around:
//!
//! * [`RasterImage`] — gray or RGB intensities held as `f64` in `[0, 255]`,
//!   row-major and channel-interleaved;
//! * [`LabelMap`] — per-pixel class ids with a declared class count and an
//!   optional ignore id;
//! * [`EdgeMap`] — per-pixel edge strength in `[0, 1]`;
//! * [`ClassMask`] — a binary segment mask.
//!
//! PNG I/O lives in [`io`], Gaussian smoothing in [`blur`]; both are
//! re-exported here. Quantization happens only at save time (round half up),
//! so load-save-load is the identity on 8-bit data.

mod blur;
mod io;

pub use blur::gaussian_blur;
pub use io::{
    load_edge_map, load_image, load_label_map, save_edge_map, save_image, save_label_map,
};

use crate::error::{Error, Result};

/// Gray or RGB image with intensities kept as reals in `[0, 255]`.
///
/// Layout is row-major with interleaved channels: the sample for pixel
/// `(x, y)` channel `c` sits at `(y * width + x) * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl RasterImage {
    /// Wrap an existing buffer, validating shape, channel count and range.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::DimensionMismatch(format!(
                "expected 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "buffer holds {} samples, geometry {width}x{height}x{channels} needs {}",
                data.len(),
                width * height * channels
            )));
        }
        for (i, &v) in data.iter().enumerate() {
            if !v.is_finite() || !(0.0..=255.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "intensity {v} at sample {i} outside [0, 255]"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Constant-valued image.
    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    #[must_use]
    pub fn width(&self) -> usize {
        self.width
    }

    #[must_use]
    pub fn height(&self) -> usize {
        self.height
    }

    #[must_use]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[must_use]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Sample at `(x, y)` channel `c`. Panics on out-of-bounds indices.
    #[must_use]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub(crate) fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// Mean intensity of one channel.
    #[must_use]
    pub fn channel_mean(&self, c: usize) -> f64 {
        let sum: f64 = self.data.iter().skip(c).step_by(self.channels).sum();
        sum / (self.width * self.height) as f64
    }
}

/// Per-pixel class ids, row-major.
///
/// Every id is `< n_classes` or equals the configured ignore id; the
/// constructor rejects anything else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    n_classes: usize,
    ignore_id: Option<u8>,
    data: Vec<u8>,
}

impl LabelMap {
    /// Wrap an id buffer, validating shape and the id range.
    pub fn new(
        width: usize,
        height: usize,
        n_classes: usize,
        ignore_id: Option<u8>,
        data: Vec<u8>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "label map must be non-empty, got {width}x{height}"
            )));
        }
        if n_classes == 0 || n_classes > 255 {
            return Err(Error::InvalidParameter(format!(
                "n_classes must be in 1..=255, got {n_classes}"
            )));
        }
        if let Some(ig) = ignore_id {
            if (ig as usize) < n_classes {
                return Err(Error::InvalidParameter(format!(
                    "ignore id {ig} collides with the class range 0..{n_classes}"
                )));
            }
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "buffer holds {} ids, geometry {width}x{height} needs {}",
                data.len(),
                width * height
            )));
        }
        if let Some(&id) = data
            .iter()
            .find(|&&id| (id as usize) >= n_classes && Some(id) != ignore_id)
        {
            return Err(Error::ClassIdOutOfRange {
                id: u16::from(id),
                n_classes,
            });
        }
        Ok(Self {
            width,
            height,
            n_classes,
            ignore_id,
            data,
        })
    }

    /// Constant-valued map (`id` must be a valid class id).
    pub fn filled(
        width: usize,
        height: usize,
        n_classes: usize,
        ignore_id: Option<u8>,
        id: u8,
    ) -> Result<Self> {
        Self::new(
            width,
            height,
            n_classes,
            ignore_id,
            vec![id; width * height],
        )
    }

    #[must_use]
    pub fn width(&self) -> usize {
        self.width
    }

    #[must_use]
    pub fn height(&self) -> usize {
        self.height
    }

    #[must_use]
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[must_use]
    pub fn ignore_id(&self) -> Option<u8> {
        self.ignore_id
    }

    #[must_use]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Class id at `(x, y)`. Panics on out-of-bounds indices.
    #[must_use]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// Distinct ids occurring in the map (ignore id included if present).
    #[must_use]
    pub fn ids_present(&self) -> std::collections::BTreeSet<u8> {
        self.data.iter().copied().collect()
    }
}

/// Per-pixel edge strength in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl EdgeMap {
    /// Wrap a strength buffer, validating shape and range.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "edge map must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "buffer holds {} strengths, geometry {width}x{height} needs {}",
                data.len(),
                width * height
            )));
        }
        for (i, &v) in data.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "edge strength {v} at sample {i} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[must_use]
    pub fn width(&self) -> usize {
        self.width
    }

    #[must_use]
    pub fn height(&self) -> usize {
        self.height
    }

    #[must_use]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Strength at `(x, y)`. Panics on out-of-bounds indices.
    #[must_use]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }
}

/// Binary segment mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl ClassMask {
    /// Wrap a binary buffer, validating shape.
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "buffer holds {} flags, geometry {width}x{height} needs {}",
                data.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[must_use]
    pub fn width(&self) -> usize {
        self.width
    }

    #[must_use]
    pub fn height(&self) -> usize {
        self.height
    }

    #[must_use]
    pub fn data(&self) -> &[bool] {
        &self.data
    }

    /// Membership at `(x, y)`. Panics on out-of-bounds indices.
    #[must_use]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// Number of masked pixels.
    #[must_use]
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Mark every pixel whose 4-neighborhood contains a different id.
///
/// The ignore id participates as a class of its own, so ignore regions also
/// produce boundary responses against their neighbors. Output strengths are
/// exactly 0.0 or 1.0.
#[must_use]
pub fn label_boundary_edges(label: &LabelMap) -> EdgeMap {
    let (w, h) = (label.width(), label.height());
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let here = label.get(x, y);
            let differs = (x > 0 && label.get(x - 1, y) != here)
                || (x + 1 < w && label.get(x + 1, y) != here)
                || (y > 0 && label.get(x, y - 1) != here)
                || (y + 1 < h && label.get(x, y + 1) != here);
            if differs {
                out[y * w + x] = 1.0;
            }
        }
    }
    EdgeMap::new(w, h, out).expect("boundary map geometry is valid by construction")
}
