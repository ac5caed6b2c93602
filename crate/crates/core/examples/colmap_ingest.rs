use camgraph::io::colmap::{parse_colmap_images, write_colmap_images};
use camgraph::io::poses::write_pose_json;

const IMAGES_TXT: &str = "\
# Image list with two lines of data per image:
#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME
#   POINTS2D[] as (X, Y, POINT3D_ID)
7 1 0 0 0 0 0 4 1 front.jpg
120.5 33.0 -1
3 0.7071067811865476 0 0.7071067811865476 0 0 0 4 1 side view.jpg

12 0 0 1 0 1 2 3 1 back.jpg
10.0 11.0 5 12.0 13.0 -1
";

fn main() -> camgraph::Result<()> {
    let poses = parse_colmap_images(IMAGES_TXT)?;
    for cam in poses.iter() {
        println!(
            "{} {:<14} centre [{:+.2} {:+.2} {:+.2}]  looks [{:+.2} {:+.2} {:+.2}]",
            cam.id,
            cam.name,
            cam.position.x,
            cam.position.y,
            cam.position.z,
            cam.direction.x,
            cam.direction.y,
            cam.direction.z
        );
    }
    print!("{}", write_pose_json(&poses)?);
    // Re-exported poses are renumbered 1..N with a canonical rotation.
    let again = parse_colmap_images(&write_colmap_images(&poses))?;
    assert_eq!(again.len(), poses.len());
    Ok(())
}
