//! Speedup when per-point deformation dominates: the same frame with the
//! synthetic deformation cost cranked up, pruned versus dense.
//!
//! Run with: `cargo run --release --example deform_cost [work_units]`

use rayprune::{
    assign_sample_counts, candidate_train, default_camera, default_scene, fuse_bounds,
    patch_minmax, render_frame, shifted_patch_minmax, silhouette_from_depth, threshold_rays,
    CandidateMode, DeformStub, EioConfig, EroConfig, RayIntervals, RaySet, RenderParams,
};

fn main() -> rayprune::Result<()> {
    let work_units: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1000);

    let cam = default_camera(256)?;
    let scene = default_scene(1, &cam)?;
    let depth = scene.rasterize_depth(&cam, 1);
    let silhouette = silhouette_from_depth(&depth, cam.t_far);

    let mut params = RenderParams::frame(1);
    params.stub = DeformStub::new(work_units);

    // Dense path: every ray, full window, full sample count.
    let eio = EioConfig::for_depth_window(cam.t_near, cam.t_far);
    let full_rays = RaySet::full(cam.width, cam.height);
    let full_iv = RayIntervals::full(cam.width, cam.height, cam.t_near, cam.t_far, eio.n_s_full);
    let start = std::time::Instant::now();
    let dense = render_frame(&scene, &cam, &depth, &full_rays, &full_iv, &params)?;
    let dense_s = start.elapsed().as_secs_f64();

    // Pruned path: thresholded rays, narrowed intervals, reduced counts.
    let ero = EroConfig {
        mode: CandidateMode::Binary,
        ..EroConfig::default()
    };
    let rays = threshold_rays(&candidate_train(&silhouette, &ero)?, ero.tau);
    let base = patch_minmax(&depth, eio.n_patch, cam.t_near, cam.t_far)?;
    let shifted = shifted_patch_minmax(&depth, eio.n_patch, cam.t_near, cam.t_far)?;
    let intervals = assign_sample_counts(fuse_bounds(&base, &shifted, &depth, &eio), &eio);
    let start = std::time::Instant::now();
    let pruned = render_frame(&scene, &cam, &depth, &rays, &intervals, &params)?;
    let pruned_s = start.elapsed().as_secs_f64();

    let point_ratio = dense.points_deformed as f64 / pruned.points_deformed as f64;
    println!("deformation cost: {work_units} work units per point");
    println!(
        "dense:  {:>9} points deformed in {dense_s:.3}s",
        dense.points_deformed
    );
    println!(
        "pruned: {:>9} points deformed in {pruned_s:.3}s",
        pruned.points_deformed
    );
    println!(
        "point reduction {point_ratio:.1}x, wall-clock speedup {:.1}x",
        dense_s / pruned_s
    );
    Ok(())
}
