//! The analytic proxy scenes: per-frame depth and silhouette maps, the
//! miss sentinel, and the declared motion bound.
//!
//! Run with: `cargo run --example proxy_scene [out_dir]`

use rayprune::{
    default_camera, default_scene, protrusion_scene, silhouette_from_depth,
    silhouette_displacement_bound,
};

fn main() -> rayprune::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rayprune-proxy-scene"));
    std::fs::create_dir_all(&out)?;

    let cam = default_camera(256)?;
    let scene = default_scene(4, &cam)?;
    println!(
        "default scene: {} primitives, {} frames, declared motion {} px",
        scene.body.primitives.len(),
        scene.frame_count(),
        scene.animation.max_pixel_motion()
    );

    let mut prev = None;
    for frame in 1..=scene.frame_count() {
        let depth = scene.rasterize_depth(&cam, frame);
        let sil = silhouette_from_depth(&depth, cam.t_far);
        let hits = sil.count_above(0.0);
        println!(
            "frame {frame}: {hits} hit pixels ({:.1}% of frame)",
            100.0 * hits as f64 / (256.0 * 256.0)
        );
        if let Some(prev) = &prev {
            let bound = silhouette_displacement_bound(prev, &sil, 16).unwrap();
            println!("  silhouette moved by <= {bound} px since previous frame");
        }
        if frame == 1 {
            // Depth normalized into [0,1] for viewing.
            let mut view = depth.clone();
            let range = cam.t_far - cam.t_near;
            for v in view.data_mut() {
                *v = 1.0 - (*v - cam.t_near) / range;
            }
            view.save_pgm(out.join("depth.pgm"))?;
            sil.save_pgm(out.join("silhouette.pgm"))?;
        }
        prev = Some(sil);
    }

    let lobe_scene = protrusion_scene(1, &cam)?;
    let depth = lobe_scene.rasterize_depth(&cam, 1);
    silhouette_from_depth(&depth, cam.t_far).save_pgm(out.join("protrusion_silhouette.pgm"))?;
    let lobe = lobe_scene.cloth.protrusion.unwrap();
    println!(
        "protrusion scene: lobe at ({}, {}, {}), {} world units from the body",
        lobe.center.x,
        lobe.center.y,
        lobe.center.z,
        lobe_scene.body_distance(1, lobe.center)
    );
    println!("artifacts in {}", out.display());
    Ok(())
}
