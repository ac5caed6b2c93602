//! Images and depth maps on disk.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::pfm::{read_pfm, write_pfm, Pfm};
use crate::io::{read_bytes, write_atomic};
use crate::photometric::{DepthMap, Image};

fn is_pfm(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pfm"))
}

/// PNG (scaled to `[0, 1]`, alpha dropped) or PFM, by extension.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    if is_pfm(path) {
        let pfm = read_pfm(&bytes)?;
        return Image::new(pfm.width, pfm.height, pfm.channels, pfm.data);
    }
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        Image::new(w, h, 3, img.into_rgb32f().into_raw())
    } else {
        let luma = img.into_luma16();
        Image::new(
            w,
            h,
            1,
            luma.into_raw()
                .into_iter()
                .map(|v| v as f32 / 65535.0)
                .collect(),
        )
    }
}

/// Single-channel PFM.
pub fn load_depth(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    let pfm = read_pfm(&read_bytes(path)?)?;
    if pfm.channels != 1 {
        return Err(Error::InvalidInput(format!(
            "{}: depth must have one channel, found {}",
            path.display(),
            pfm.channels
        )));
    }
    DepthMap::new(pfm.width, pfm.height, pfm.data)
}

/// 8-bit PNG with values clamped to `[0, 1]`; 1 or 3 channels.
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let color = match img.channels() {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        c => {
            return Err(Error::InvalidInput(format!(
                "png output needs 1 or 3 channels, got {c}"
            )))
        }
    };
    let raw: Vec<u8> = img
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let mut out = Vec::new();
    image::ImageEncoder::write_image(
        image::codecs::png::PngEncoder::new(&mut out),
        &raw,
        img.width() as u32,
        img.height() as u32,
        color,
    )?;
    Ok(out)
}

/// PNG or PFM, by extension.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_pfm(path) {
        write_pfm(&Pfm {
            width: img.width(),
            height: img.height(),
            channels: img.channels(),
            data: img.data().to_vec(),
        })?
    } else {
        encode_png(img)?
    };
    write_atomic(path, &bytes)
}

pub fn save_depth(depth: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    let bytes = write_pfm(&Pfm {
        width: depth.width(),
        height: depth.height(),
        channels: 1,
        data: depth.data().to_vec(),
    })?;
    write_atomic(path, &bytes)
}
