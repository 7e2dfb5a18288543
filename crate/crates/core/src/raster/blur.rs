//! Separable Gaussian smoothing.
//!
//! The kernel is the sampled Gaussian `exp(-j^2 / (2 sigma^2))` for
//! `j in [-r, r]` with half-width `r = ceil(3 sigma)`, normalized to sum 1.
//! Borders reflect symmetrically with the edge pixel repeated and the index
//! folded as often as needed, so kernels wider than the image remain well
//! defined and channel means are preserved exactly (the reflected signal is
//! periodic and the kernel is even).

use crate::error::{Error, Result};
use crate::raster::RasterImage;

/// Sampled, normalized 1-D Gaussian; exposed to the crate for oracle reuse.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as usize;
    let mut k: Vec<f64> = (-(r as isize)..=r as isize)
        .map(|j| (-((j * j) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Fold an out-of-range index back into `[0, n)` by symmetric reflection
/// (`... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...`).
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - 1 - m;
    }
    m as usize
}

/// Blur every channel with a normalized Gaussian of the given width.
///
/// `sigma` must be strictly positive. Each output sample is a convex
/// combination of input samples, so values stay inside the input range.
pub fn gaussian_blur(image: &RasterImage, sigma: f64) -> Result<RasterImage> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "blur width must be positive, got {sigma}"
        )));
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() - 1) / 2;
    let (w, h, ch) = (image.width(), image.height(), image.channels());

    // Horizontal pass, then vertical; both write into fresh buffers.
    let mut horiz = vec![0.0f64; w * h * ch];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (t, &k) in kernel.iter().enumerate() {
                    let sx = reflect(x as isize + t as isize - r as isize, w);
                    acc += k * image.get(sx, y, c);
                }
                horiz[(y * w + x) * ch + c] = acc;
            }
        }
    }

    let mut out = vec![0.0f64; w * h * ch];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (t, &k) in kernel.iter().enumerate() {
                    let sy = reflect(y as isize + t as isize - r as isize, h);
                    acc += k * horiz[(sy * w + x) * ch + c];
                }
                out[(y * w + x) * ch + c] = acc;
            }
        }
    }

    // Convex combinations can drift past the endpoints by rounding only;
    // clamp that drift away so the container invariant holds.
    for v in &mut out {
        *v = v.clamp(0.0, 255.0);
    }
    RasterImage::new(w, h, ch, out)
}
