//! 8-bit PNG input and output.
//!
//! Label maps and edge maps are single-channel 8-bit PNGs; images are 8-bit
//! grayscale or RGB. Intensities are quantized with round-half-up only when
//! saving, so saving and re-loading 8-bit data is bit-exact.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, ImageReader, RgbImage};

use crate::error::{Error, Result};
use crate::raster::{EdgeMap, LabelMap, RasterImage};

/// Round-half-up quantization from `[0, 255]` reals to bytes.
pub(crate) fn quantize_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| Error::Codec {
        path: path.into(),
        source: e,
    })
}

fn single_channel_bytes(
    path: &Path,
    what: &str,
    on_multichannel: impl FnOnce(std::path::PathBuf, String) -> Error,
) -> Result<(usize, usize, Vec<u8>)> {
    match decode(path)? {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            Ok((w, h, buf.into_raw()))
        }
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
            Err(Error::UnsupportedBitDepth {
                path: path.into(),
                detail: format!("{what} must use 8-bit samples, found 16-bit"),
            })
        }
        other => Err(on_multichannel(
            path.into(),
            format!(
                "{what} must be single-channel 8-bit, found {:?}",
                other.color()
            ),
        )),
    }
}

/// Load a class-id map from a single-channel 8-bit PNG.
///
/// When `n_classes` is given every pixel is validated against it; when it is
/// `None` the class count is derived as one past the largest non-ignore id.
pub fn load_label_map(
    path: impl AsRef<Path>,
    n_classes: Option<usize>,
    ignore_id: Option<u8>,
) -> Result<LabelMap> {
    let path = path.as_ref();
    let (w, h, data) = single_channel_bytes(path, "label map", |path, detail| {
        Error::NotALabelMap { path, detail }
    })?;
    let n_classes = match n_classes {
        Some(n) => n,
        None => {
            let max_id = data
                .iter()
                .copied()
                .filter(|&id| Some(id) != ignore_id)
                .max();
            match max_id {
                Some(id) if (id as usize) == 255 => {
                    return Err(Error::InvalidParameter(format!(
                        "cannot derive a class count from {}: id 255 present without being the ignore id",
                        path.display()
                    )));
                }
                Some(id) => id as usize + 1,
                // All pixels carry the ignore id; one nominal class.
                None => 1,
            }
        }
    };
    LabelMap::new(w, h, n_classes, ignore_id, data)
}

/// Save a class-id map as a single-channel 8-bit PNG.
pub fn save_label_map(label: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf = GrayImage::from_raw(
        label.width() as u32,
        label.height() as u32,
        label.data().to_vec(),
    )
    .expect("label buffer length matches its geometry");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Codec {
            path: path.into(),
            source: e,
        })
}

/// Load an 8-bit grayscale or RGB PNG as real-valued intensities.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    match decode(path)? {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            let data = buf.into_raw().into_iter().map(f64::from).collect();
            RasterImage::new(w, h, 1, data)
        }
        DynamicImage::ImageRgb8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            let data = buf.into_raw().into_iter().map(f64::from).collect();
            RasterImage::new(w, h, 3, data)
        }
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => Err(Error::UnsupportedBitDepth {
            path: path.into(),
            detail: "images must use 8-bit samples, found 16-bit".into(),
        }),
        other => Err(Error::UnsupportedColorType {
            path: path.into(),
            detail: format!("expected 8-bit grayscale or RGB, found {:?}", other.color()),
        }),
    }
}

/// Save intensities as an 8-bit PNG, quantizing with round-half-up.
pub fn save_image(image: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = image.data().iter().map(|&v| quantize_u8(v)).collect();
    let (w, h) = (image.width() as u32, image.height() as u32);
    let result = match image.channels() {
        1 => GrayImage::from_raw(w, h, bytes)
            .expect("image buffer length matches its geometry")
            .save_with_format(path, ImageFormat::Png),
        3 => RgbImage::from_raw(w, h, bytes)
            .expect("image buffer length matches its geometry")
            .save_with_format(path, ImageFormat::Png),
        _ => unreachable!("constructor admits only 1 or 3 channels"),
    };
    result.map_err(|e| Error::Codec {
        path: path.into(),
        source: e,
    })
}

/// Load an edge map from a single-channel 8-bit PNG (strength = value / 255).
pub fn load_edge_map(path: impl AsRef<Path>) -> Result<EdgeMap> {
    let path = path.as_ref();
    let (w, h, data) = single_channel_bytes(path, "edge map", |path, detail| {
        Error::UnsupportedColorType { path, detail }
    })?;
    let strengths = data.into_iter().map(|v| f64::from(v) / 255.0).collect();
    EdgeMap::new(w, h, strengths)
}

/// Save an edge map as a single-channel 8-bit PNG (value = strength * 255).
pub fn save_edge_map(edge: &EdgeMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = edge
        .data()
        .iter()
        .map(|&v| quantize_u8(v * 255.0))
        .collect();
    let buf = GrayImage::from_raw(edge.width() as u32, edge.height() as u32, bytes)
        .expect("edge buffer length matches its geometry");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Codec {
            path: path.into(),
            source: e,
        })
}
