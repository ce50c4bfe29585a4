//! Empty-space pruning for ray-marched volume rendering.
//!
//! Most of the work in rendering an animated figure with a volumetric
//! layer is spent on sample points that sit in empty space: they cost a
//! per-point deformation and field query and contribute nothing. This
//! crate implements two pruning strategies that attack that waste in
//! observation space, before any per-point work happens:
//!
//! * **Empty ray omission** ([`ero`]): a per-frame candidate map built
//!   from the body silhouette (and, from the second frame on, the
//!   previous frame's rendered weight map) is thresholded into the set of
//!   rays worth rendering; the rest become background.
//! * **Empty interval omission** ([`eio`]): per-patch depth extrema,
//!   fused across a half-patch-shifted second tiling, narrow each ray's
//!   sampling interval to the depth neighborhood of the body.
//!
//! Everything is validated against a dense-sampling oracle ([`oracle`])
//! on analytic scenes ([`scene`]), and a benchmark harness ([`harness`])
//! reproduces the sampling-ratio/speedup ablation structure end to end.
//! The `examples/` directory has one runnable example per capability; the
//! `rayprune` binary exposes the harness as a CLI.

pub mod eio;
pub mod ero;
pub mod error;
pub mod harness;
pub mod maps;
pub mod oracle;
pub mod render;
pub mod scene;

pub use eio::{
    assign_sample_counts, fuse_bounds, patch_minmax, sampling_volume_ratio,
    shifted_patch_minmax, EioConfig, PatchBounds, RayIntervals,
};
pub use ero::{
    binarize, candidate_infer, candidate_train, threshold_rays, CandidateMode, EroConfig, RaySet,
};
pub use error::{Error, Result};
pub use maps::{binary_dilate, box_convolve, map_add, BoxKernelSpec, ScalarMap};
pub use oracle::{
    candidate_support_violations, compare, render_oracle, render_oracle_with, CompareParams,
    ComparisonReport,
};
pub use render::{
    composite, composite_f64, render_frame, stratified_depths, DeformStub, RenderOutput,
    RenderParams, SampleMode, TerminalColor,
};
pub use scene::{
    default_camera, default_scene, protrusion_scene, silhouette_displacement_bound,
    silhouette_from_depth, CameraSpec, ClothField, FrameSequence, Primitive, Protrusion,
    ProxyBody, Rgb, Scene, Shape, Vec3,
};
