//! Multi-view photometric consistency between a camera and its target view.
//!
//! Each pixel `p` of image `i` is back-projected with its depth, moved into
//! camera `j` by `(R_ji, T_ji)` and projected with `K_j`:
//!
//! ```text
//! X  = depth(p) · K_i⁻¹ [u, v, 1]ᵀ
//! X' = R_ji X + T_ji
//! p' = K_j X' / X'_z
//! ```
//!
//! The loss is `λ` times the mean L1 colour difference between `I_i(p)` and
//! the bilinear sample `I_j(p')` over pixels that land inside image `j` in
//! front of camera `j`. Pixel centres sit at integer coordinates.

use nalgebra::{Matrix3, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.07;

/// Interleaved `f32` image, row-major, values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::InvalidInput(
                "image dimensions must be positive".into(),
            ));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidInput(format!(
                "image buffer holds {} values, expected {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            data,
        }
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

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Bilinear sample at `(u, v)` into `out`; false outside `[0, w-1] × [0, h-1]`.
    pub fn sample_bilinear(&self, u: f64, v: f64, out: &mut [f32]) -> bool {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(u >= 0.0 && v >= 0.0 && u <= w - 1.0 && v <= h - 1.0) {
            return false;
        }
        let x0 = (u.floor() as usize).min(self.width - 1);
        let y0 = (v.floor() as usize).min(self.height - 1);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = u - x0 as f64;
        let fy = v - y0 as f64;
        let (a, b, c, d) = (
            self.pixel(x0, y0),
            self.pixel(x1, y0),
            self.pixel(x0, y1),
            self.pixel(x1, y1),
        );
        for ch in 0..self.channels {
            let top = a[ch] as f64 * (1.0 - fx) + b[ch] as f64 * fx;
            let bottom = c[ch] as f64 * (1.0 - fx) + d[ch] as f64 * fx;
            out[ch] = (top * (1.0 - fy) + bottom * fy) as f32;
        }
        true
    }
}

/// Per-pixel depth for camera `i`; non-finite or non-positive values mark
/// invalid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "depth buffer holds {} values, expected {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, depth: f32) -> Self {
        Self {
            width,
            height,
            data: vec![depth; width * height],
        }
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

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let d = *self.data.get(y * self.width + x)? as f64;
        (d.is_finite() && d > 0.0).then_some(d)
    }
}

/// Pinhole intrinsics with zero skew.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// `K⁻¹ [u, v, 1]ᵀ`
    pub fn unproject(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// `K X / X_z`
    pub fn project(&self, x: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(self.fx * x.x / x.z + self.cx, self.fy * x.y / x.z + self.cy)
    }

    fn validate(&self, width: usize, height: usize, which: &str) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{which}: focal lengths must be positive"
            )));
        }
        let inside =
            self.cx >= 0.0 && self.cy >= 0.0 && self.cx <= width as f64 && self.cy <= height as f64;
        if !inside {
            return Err(Error::InvalidInput(format!(
                "{which}: principal point ({}, {}) outside {width}x{height} image",
                self.cx, self.cy
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ConsistencyInputs<'a> {
    pub image_i: &'a Image,
    pub image_j: &'a Image,
    pub k_i: Intrinsics,
    pub k_j: Intrinsics,
    /// Rotation from camera `i` to camera `j`.
    pub r_ji: Matrix3<f64>,
    /// Translation from camera `i` to camera `j`.
    pub t_ji: Vector3<f64>,
    pub depth_i: &'a DepthMap,
    pub lambda: f64,
}

impl ConsistencyInputs<'_> {
    pub fn validate(&self) -> Result<()> {
        if self.image_i.channels() != self.image_j.channels() {
            return Err(Error::InvalidInput(format!(
                "channel mismatch: {} vs {}",
                self.image_i.channels(),
                self.image_j.channels()
            )));
        }
        if self.depth_i.width() != self.image_i.width()
            || self.depth_i.height() != self.image_i.height()
        {
            return Err(Error::InvalidInput(format!(
                "depth map is {}x{}, image i is {}x{}",
                self.depth_i.width(),
                self.depth_i.height(),
                self.image_i.width(),
                self.image_i.height()
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        self.k_i
            .validate(self.image_i.width(), self.image_i.height(), "K_i")?;
        self.k_j
            .validate(self.image_j.width(), self.image_j.height(), "K_j")?;
        let r = &self.r_ji;
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(ortho <= 1e-6 && (r.determinant() - 1.0).abs() <= 1e-6) {
            return Err(Error::InvalidInput("R_ji is not a rotation".into()));
        }
        if self.t_ji.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("T_ji is not finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warp {
    /// Warped coordinate inside image `j`.
    Inside(Vector2<f64>),
    /// Projects outside image `j`.
    OutOfBounds,
    /// Lands at or behind camera `j`.
    Behind,
    /// No valid depth at the source pixel.
    InvalidDepth,
}

/// Warps pixel `(x, y)` of image `i` into image `j`.
pub fn warp_pixel(x: usize, y: usize, inputs: &ConsistencyInputs<'_>) -> Warp {
    let Some(depth) = inputs.depth_i.get(x, y) else {
        return Warp::InvalidDepth;
    };
    let point = inputs.k_i.unproject(x as f64, y as f64) * depth;
    let moved = inputs.r_ji * point + inputs.t_ji;
    if moved.z <= 0.0 {
        return Warp::Behind;
    }
    let p = inputs.k_j.project(&moved);
    let (w, h) = (
        inputs.image_j.width() as f64,
        inputs.image_j.height() as f64,
    );
    if p.x >= 0.0 && p.y >= 0.0 && p.x <= w - 1.0 && p.y <= h - 1.0 {
        Warp::Inside(p)
    } else {
        Warp::OutOfBounds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyResult {
    pub loss: f64,
    pub valid_fraction: f64,
    pub valid_pixels: usize,
    pub total_pixels: usize,
}

/// `λ · mean_p ‖I_i(p) − I_j(p')‖₁` over valid pixels.
pub fn consistency_loss(inputs: &ConsistencyInputs<'_>) -> Result<ConsistencyResult> {
    inputs.validate()?;
    let (w, h, ch) = (
        inputs.image_i.width(),
        inputs.image_i.height(),
        inputs.image_i.channels(),
    );
    let rows: Vec<(f64, usize)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut sample = vec![0f32; ch];
            let mut sum = 0.0;
            let mut valid = 0;
            for x in 0..w {
                let Warp::Inside(p) = warp_pixel(x, y, inputs) else {
                    continue;
                };
                if !inputs.image_j.sample_bilinear(p.x, p.y, &mut sample) {
                    continue;
                }
                let src = inputs.image_i.pixel(x, y);
                sum += src
                    .iter()
                    .zip(&sample)
                    .map(|(a, b)| (*a as f64 - *b as f64).abs())
                    .sum::<f64>();
                valid += 1;
            }
            (sum, valid)
        })
        .collect();
    let (sum, valid) = rows
        .into_iter()
        .fold((0.0, 0), |(s, v), (rs, rv)| (s + rs, v + rv));
    let total = w * h;
    let loss = if valid == 0 {
        log::warn!("no pixel of image i warps validly into image j");
        0.0
    } else {
        inputs.lambda * sum / valid as f64
    };
    Ok(ConsistencyResult {
        loss,
        valid_fraction: valid as f64 / total as f64,
        valid_pixels: valid,
        total_pixels: total,
    })
}
