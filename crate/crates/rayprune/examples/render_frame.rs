//! One pruned frame against the dense reference: images, weight maps,
//! fidelity and work counters.
//!
//! Run with: `cargo run --release --example render_frame [out_dir]`

use rayprune::{
    assign_sample_counts, candidate_train, compare, default_camera, default_scene, fuse_bounds,
    patch_minmax, render_frame, render_oracle, shifted_patch_minmax, silhouette_from_depth,
    threshold_rays, CandidateMode, CompareParams, EioConfig, EroConfig, RenderParams, SampleMode,
};

fn main() -> rayprune::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rayprune-render"));
    std::fs::create_dir_all(&out)?;

    let cam = default_camera(256)?;
    let scene = default_scene(1, &cam)?;
    let depth = scene.rasterize_depth(&cam, 1);
    let silhouette = silhouette_from_depth(&depth, cam.t_far);

    // Empty-ray omission.
    let ero = EroConfig {
        mode: CandidateMode::Binary,
        ..EroConfig::default()
    };
    let rays = threshold_rays(&candidate_train(&silhouette, &ero)?, ero.tau);

    // Empty-interval omission.
    let eio = EioConfig::for_depth_window(cam.t_near, cam.t_far);
    let base = patch_minmax(&depth, eio.n_patch, cam.t_near, cam.t_far)?;
    let shifted = shifted_patch_minmax(&depth, eio.n_patch, cam.t_near, cam.t_far)?;
    let intervals = assign_sample_counts(fuse_bounds(&base, &shifted, &depth, &eio), &eio);

    let params = RenderParams::frame(1);
    let start = std::time::Instant::now();
    let pruned = render_frame(&scene, &cam, &depth, &rays, &intervals, &params)?;
    let pruned_s = start.elapsed().as_secs_f64();

    let start = std::time::Instant::now();
    let reference = render_oracle(&scene, &cam, 1, eio.n_s_full, SampleMode::Midpoint)?;
    let reference_s = start.elapsed().as_secs_f64();

    let report = compare(
        &pruned,
        &reference,
        &scene,
        &cam,
        1,
        &rays,
        &intervals,
        &CompareParams::new(eio.n_s_full, SampleMode::Midpoint),
        pruned_s,
        reference_s,
    )?;

    println!(
        "pruned:    {} points over {} rays in {pruned_s:.3}s",
        pruned.points_sampled, pruned.rays_rendered
    );
    println!(
        "reference: {} points over {} rays in {reference_s:.3}s",
        reference.points_sampled, reference.rays_rendered
    );
    println!(
        "sampling ratio {:.2}%, PSNR {:.1} dB, coverage errors {}, speedup {:.1}x",
        report.sampling_ratio * 100.0,
        report.psnr_db,
        report.coverage_errors,
        report.speedup
    );

    pruned.save_ppm(out.join("pruned.ppm"))?;
    reference.save_ppm(out.join("reference.ppm"))?;
    pruned.weight_map().save_pgm(out.join("weight.pgm"))?;
    println!("artifacts in {}", out.display());
    Ok(())
}
