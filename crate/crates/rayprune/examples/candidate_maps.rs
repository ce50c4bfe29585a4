//! Ray candidate maps: the training-stage construction from the
//! silhouette alone versus the inference-stage construction that folds in
//! the previous frame's weight map, in both spreading modes.
//!
//! Run with: `cargo run --example candidate_maps [out_dir]`

use rayprune::{
    candidate_infer, candidate_train, default_camera, default_scene, render_oracle,
    threshold_rays, CandidateMode, EroConfig, SampleMode,
};

fn main() -> rayprune::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rayprune-candidates"));
    std::fs::create_dir_all(&out)?;

    let cam = default_camera(256)?;
    let scene = default_scene(2, &cam)?;
    let silhouette = scene.rasterize_silhouette(&cam, 2);
    // A dense render of frame 1 provides the temporal prior for frame 2.
    let weight_prev = render_oracle(&scene, &cam, 1, 64, SampleMode::Midpoint)?
        .weight_map()
        .clone();

    for mode in [CandidateMode::Averaging, CandidateMode::Binary] {
        let cfg = EroConfig {
            mode,
            ..EroConfig::default()
        };
        let train = candidate_train(&silhouette, &cfg)?;
        let infer = candidate_infer(&weight_prev, &silhouette, &cfg)?;
        let train_rays = threshold_rays(&train, cfg.tau);
        let infer_rays = threshold_rays(&infer, cfg.tau);
        println!(
            "{mode:?}: training keeps {} rays, inference keeps {} rays (tau {})",
            train_rays.count(),
            infer_rays.count(),
            cfg.tau
        );
        println!(
            "  candidate support: training {} px, inference {} px",
            train.count_above(0.0),
            infer.count_above(0.0)
        );
        let tag = format!("{mode:?}").to_lowercase();
        train.save_pgm(out.join(format!("cand_train_{tag}.pgm")))?;
        infer.save_pgm(out.join(format!("cand_infer_{tag}.pgm")))?;
        infer_rays
            .to_map()
            .save_container(out.join(format!("rays_infer_{tag}.epsm")))?;
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
