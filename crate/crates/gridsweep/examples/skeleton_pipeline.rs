//! Full skeleton conditioning pipeline on synthetic data: observe a 17-joint
//! figure from a 4-camera rig, triangulate the 2D detections into 3D, project
//! into a held-out view, and rasterize the colored skeleton map as a PNG.

use std::path::Path;

use nalgebra::Vector3;

use gridsweep::camera::circle_rig;
use gridsweep::io::save_png_rgba;
use gridsweep::skeleton::{
    project_skeleton, rasterize_skeleton, triangulate_skeleton, Joint2D, RasterStyle, Skeleton2D,
    SkeletonTopology, DEFAULT_CONF_THRESHOLD,
};

fn figure() -> Vec<Vector3<f64>> {
    // a rough standing pose for the 17 coco joints, meters, feet near z = 0
    let j = |x: f64, y: f64, z: f64| Vector3::new(x, y, z);
    vec![
        j(0.00, 0.00, 1.70), // nose
        j(0.03, 0.03, 1.73), // eyes
        j(-0.03, 0.03, 1.73),
        j(0.07, 0.00, 1.71), // ears
        j(-0.07, 0.00, 1.71),
        j(0.18, 0.00, 1.50), // shoulders
        j(-0.18, 0.00, 1.50),
        j(0.25, 0.05, 1.25), // elbows
        j(-0.25, 0.05, 1.25),
        j(0.28, 0.12, 1.00), // wrists
        j(-0.28, 0.12, 1.00),
        j(0.10, 0.00, 1.00), // hips
        j(-0.10, 0.00, 1.00),
        j(0.12, 0.03, 0.55), // knees
        j(-0.12, 0.03, 0.55),
        j(0.13, 0.00, 0.05), // ankles
        j(-0.13, 0.00, 0.05),
    ]
}

fn main() -> gridsweep::Result<()> {
    let cams = circle_rig(5, 3.5, 1.3, 256, 256)?;
    let (rig, held_out) = cams.split_at(4);
    let points = figure();

    let views: Vec<Skeleton2D> = rig
        .iter()
        .map(|c| {
            let joints = points
                .iter()
                .map(|p| {
                    let (u, v, _) = c.project(p).unwrap();
                    Joint2D { u, v, conf: 0.95 }
                })
                .collect();
            Skeleton2D { joints }
        })
        .collect();

    let skel3d = triangulate_skeleton(&views, rig, DEFAULT_CONF_THRESHOLD)?;
    let valid = skel3d.joints.iter().filter(|j| j.point().is_some()).count();
    println!("triangulated {valid}/17 joints from 4 views");
    let nose = skel3d.joints[0].point().unwrap();
    println!("nose recovered at ({:.3}, {:.3}, {:.3})", nose.x, nose.y, nose.z);

    let projected = project_skeleton(&held_out[0], &skel3d);
    let topology = SkeletonTopology::coco17();
    let img = rasterize_skeleton(&projected, &topology, 256, 256, &RasterStyle::default())?;

    let out = Path::new("target/example_out/skeleton");
    std::fs::create_dir_all(out)?;
    let png = out.join("held_out_view.png");
    save_png_rgba(&img, &png)?;
    let covered = img.data.chunks(4).filter(|p| p[3] > 0).count();
    println!("rasterized held-out view: {covered} covered pixels, saved to {}", png.display());
    Ok(())
}
