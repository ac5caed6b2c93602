//! Runs the `pipeline` verb end to end in a temporary directory.
use std::fs;

use camgraph::io::poses::write_pose_json;
use camgraph::io::trajectory::{generate_trajectory, TrajectoryKind};
use camgraph::io::write_atomic;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let poses = generate_trajectory(TrajectoryKind::Line, 60, 0.1, 11)?;
    let cams = dir.path().join("cameras.json");
    write_atomic(&cams, write_pose_json(&poses)?.as_bytes())?;
    let out = dir.path().join("out");

    let code = camgraph::cli::run([
        "camgraph".as_ref(),
        "pipeline".as_ref(),
        "--poses".as_ref(),
        cams.as_os_str(),
        "--out-dir".as_ref(),
        out.as_os_str(),
        "--mode".as_ref(),
        "loose".as_ref(),
        "--r".as_ref(),
        "4".as_ref(),
    ]);
    println!("exit code {code}");

    let mut names: Vec<_> = fs::read_dir(&out)?
        .map(|e| e.map(|e| e.file_name()))
        .collect::<Result<_, _>>()?;
    names.sort();
    for name in names {
        let len = fs::metadata(out.join(&name))?.len();
        println!("  {:<20} {len:>7} bytes", name.to_string_lossy());
    }
    Ok(())
}
