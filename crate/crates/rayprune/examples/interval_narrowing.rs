//! Per-ray interval narrowing from patch depth extrema, with and without
//! the half-patch-shifted second tiling, across patch counts.
//!
//! Run with: `cargo run --example interval_narrowing [out_dir]`

use rayprune::{
    assign_sample_counts, candidate_train, default_camera, default_scene, fuse_bounds,
    patch_minmax, sampling_volume_ratio, shifted_patch_minmax, silhouette_from_depth,
    threshold_rays, CandidateMode, EioConfig, EroConfig,
};

fn main() -> rayprune::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rayprune-intervals"));
    std::fs::create_dir_all(&out)?;

    let cam = default_camera(256)?;
    let scene = default_scene(1, &cam)?;
    let depth = scene.rasterize_depth(&cam, 1);
    let silhouette = silhouette_from_depth(&depth, cam.t_far);
    let ero = EroConfig {
        mode: CandidateMode::Binary,
        ..EroConfig::default()
    };
    let rays = threshold_rays(&candidate_train(&silhouette, &ero)?, ero.tau);
    println!(
        "active rays: {} of {} ({:.1}%)",
        rays.count(),
        rays.len(),
        100.0 * rays.count() as f64 / rays.len() as f64
    );
    println!("n_patch  shift  volume    reduced-count rays");

    for n_patch in [1usize, 2, 4] {
        for shift in [false, true] {
            let mut cfg = EioConfig::for_depth_window(cam.t_near, cam.t_far);
            cfg.n_patch = n_patch;
            cfg.shift = shift;
            let base = patch_minmax(&depth, n_patch, cam.t_near, cam.t_far)?;
            let fused = if shift {
                let shifted = shifted_patch_minmax(&depth, n_patch, cam.t_near, cam.t_far)?;
                fuse_bounds(&base, &shifted, &depth, &cfg)
            } else {
                fuse_bounds(&base, &base, &depth, &cfg)
            };
            let intervals = assign_sample_counts(fused, &cfg);
            let reduced = rays
                .iter_active()
                .filter(|&i| intervals.sample_count_index(i) == cfg.n_s_reduced)
                .count();
            println!(
                "{n_patch:>7}  {:>5}  {:^8.4}  {reduced} / {}",
                shift,
                sampling_volume_ratio(&intervals, &rays),
                rays.count()
            );
            if n_patch == 2 && shift {
                let (near, far) = intervals.export_maps();
                near.save_container(out.join("near_bounds.epsm"))?;
                far.save_container(out.join("far_bounds.epsm"))?;
            }
        }
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
