//! Photometric loss between two views of a textured plane, with the true
//! depth and with a depth that is off by a factor of two.
use camgraph::photometric::{consistency_loss, DepthMap};
use camgraph::{ConsistencyInputs, Image, Intrinsics};
use nalgebra::{Matrix3, Vector3};

const W: usize = 96;
const H: usize = 64;
const DEPTH: f32 = 5.0;

fn texture(x: f64, y: f64) -> f32 {
    (0.5 + 0.25 * (x * 0.31).sin() + 0.25 * (y * 0.17).cos()) as f32
}

fn main() -> camgraph::Result<()> {
    let k = Intrinsics {
        fx: 60.0,
        fy: 60.0,
        cx: (W as f64 - 1.0) / 2.0,
        cy: (H as f64 - 1.0) / 2.0,
    };
    // A baseline of b shifts the plane by fx * b / depth pixels.
    let shift = 2.0;
    let baseline = shift * DEPTH as f64 / k.fx;
    let img_i = Image::from_fn(W, H, 1, |x, y, _| texture(x as f64, y as f64));
    let img_j = Image::from_fn(W, H, 1, |x, y, _| texture(x as f64 + shift, y as f64));

    for scale in [1.0f32, 1.25, 2.0] {
        let depth = DepthMap::constant(W, H, DEPTH * scale);
        let res = consistency_loss(&ConsistencyInputs {
            image_i: &img_i,
            image_j: &img_j,
            k_i: k,
            k_j: k,
            r_ji: Matrix3::identity(),
            t_ji: Vector3::new(-baseline, 0.0, 0.0),
            depth_i: &depth,
            lambda: 0.07,
        })?;
        println!(
            "depth x{scale:<4}  loss {:.3e}  valid {:.1}%",
            res.loss,
            100.0 * res.valid_fraction
        );
    }
    Ok(())
}
