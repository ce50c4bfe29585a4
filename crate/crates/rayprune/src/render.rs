//! Stratified sampling on per-ray intervals, the deformation cost stub,
//! and mesh-integrated volume rendering.
//!
//! Rendering composites volume samples front to back and hands whatever
//! transmittance is left to a terminal color: the body surface albedo
//! when the ray hits the body (the last sample is pinned to the
//! intersection depth), otherwise the field color at the last sample.
//! Rays outside the active set are painted the constant background color
//! and carry zero weight.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::eio::RayIntervals;
use crate::ero::RaySet;
use crate::error::{Error, Result};
use crate::maps::ScalarMap;
use crate::scene::{CameraSpec, Rgb, Scene, Vec3};

/// How sample depths are drawn within strata.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Stratum midpoints. Deterministic without any seed; the default.
    Midpoint,
    /// One uniform draw per stratum, deterministic per (seed, ray, frame).
    Jittered { seed: u64 },
}

/// Identity deformation with a configurable synthetic cost per point.
///
/// Real pipelines spend most of their time deforming sampled points; the
/// stub reproduces that cost profile with a fixed-iteration integer loop
/// whose result is folded into a checksum so the work cannot be elided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeformStub {
    pub work_units: u64,
}

impl DeformStub {
    pub fn new(work_units: u64) -> Self {
        Self { work_units }
    }

    /// Maps a point to itself, burning `work_units` of arithmetic.
    /// Returns the point and a token to fold into the frame checksum.
    /// The shift-xor step keeps the per-point tokens nonlinear, so
    /// mirror-symmetric sample grids cannot cancel in the checksum.
    #[inline]
    pub fn deform(&self, p: Vec3) -> (Vec3, u64) {
        let mut acc = p.x.to_bits() ^ p.y.to_bits().rotate_left(21) ^ p.z.to_bits().rotate_left(42);
        for _ in 0..self.work_units {
            acc = (acc ^ (acc >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            acc = acc.wrapping_add(0x9E3779B97F4A7C15);
        }
        (p, acc)
    }
}

fn mix_stream(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined identifier.
    let mut z = seed ^ stream.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Stratified depths over `[t0, t1]`.
///
/// The first `n_s - 1` samples take one draw per equal stratum of
/// `[t0, t1)`; the final slot sits at `t1` itself, which callers pin to
/// the body intersection depth on hit rays. Depths are strictly
/// increasing for `t0 < t1`; a degenerate interval returns every sample
/// at `t0`.
pub fn stratified_depths(
    t0: f32,
    t1: f32,
    n_s: usize,
    mode: SampleMode,
    stream: u64,
) -> Result<Vec<f32>> {
    if n_s < 2 {
        return Err(Error::BadSampleCount(n_s));
    }
    if !(t1 > t0) {
        return Ok(vec![t0; n_s]);
    }
    let strata = n_s - 1;
    let width = (t1 as f64 - t0 as f64) / strata as f64;
    let mut depths = Vec::with_capacity(n_s);
    match mode {
        SampleMode::Midpoint => {
            for i in 0..strata {
                depths.push((t0 as f64 + (i as f64 + 0.5) * width) as f32);
            }
        }
        SampleMode::Jittered { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_stream(seed, stream));
            for i in 0..strata {
                let u: f64 = rng.gen_range(0.0..1.0);
                depths.push((t0 as f64 + (i as f64 + u) * width) as f32);
            }
        }
    }
    depths.push(t1);
    debug_assert!(depths.windows(2).all(|w| w[0] < w[1]));
    Ok(depths)
}

/// Terminal color source for the residual transmittance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalColor {
    /// The ray hits the body: use the surface albedo at the last sample.
    Surface(Rgb),
    /// No hit: use the field color of the last sample.
    LastSample,
}

/// Front-to-back compositing over one ray, in f64.
///
/// `sigmas[i]`/`colors[i]` belong to `depths[i]`; only the first
/// `n_s - 1` samples contribute opacity, the last one is either the body
/// intersection (its color unused) or the terminal field sample. Returns
/// the composited color and the accumulated opacity weight before the
/// f32 store.
///
/// NaN densities are propagated as errors, never clamped; `pixel` only
/// labels that error.
pub fn composite_f64(
    depths: &[f32],
    sigmas: &[f32],
    colors: &[Rgb],
    terminal: TerminalColor,
    pixel: (usize, usize),
) -> Result<([f64; 3], f64)> {
    let n = depths.len();
    debug_assert!(n >= 2 && sigmas.len() == n && colors.len() == n);
    let mut transmittance = 1.0f64;
    let mut weight = 0.0f64;
    let mut accum = [0.0f64; 3];
    for i in 0..n - 1 {
        let sigma = sigmas[i];
        if sigma.is_nan() {
            return Err(Error::NanDensity {
                x: pixel.0,
                y: pixel.1,
                sample: i,
            });
        }
        let delta = (depths[i + 1] - depths[i]) as f64;
        let atten = (-(sigma as f64) * delta).exp();
        let alpha = transmittance * (1.0 - atten);
        for c in 0..3 {
            accum[c] += alpha * colors[i][c] as f64;
        }
        weight += alpha;
        transmittance *= atten;
    }
    let terminal_color = match terminal {
        TerminalColor::Surface(albedo) => albedo,
        TerminalColor::LastSample => colors[n - 1],
    };
    let residual = 1.0 - weight;
    for c in 0..3 {
        accum[c] += residual * terminal_color[c] as f64;
    }
    Ok((accum, weight))
}

/// [`composite_f64`] stored to map precision.
pub fn composite(
    depths: &[f32],
    sigmas: &[f32],
    colors: &[Rgb],
    terminal: TerminalColor,
    pixel: (usize, usize),
) -> Result<(Rgb, f32)> {
    let (accum, weight) = composite_f64(depths, sigmas, colors, terminal, pixel)?;
    Ok((
        [accum[0] as f32, accum[1] as f32, accum[2] as f32],
        weight as f32,
    ))
}

/// Per-frame render parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderParams {
    pub frame: usize,
    pub mode: SampleMode,
    /// Constant background for omitted rays.
    pub background: Rgb,
    pub stub: DeformStub,
    /// 1 renders sequentially; 0 uses the default thread pool width.
    pub threads: usize,
    /// Acceptance distance for surface color lookups at hit points.
    pub surface_tolerance: f64,
}

impl RenderParams {
    pub fn frame(frame: usize) -> Self {
        Self {
            frame,
            mode: SampleMode::Midpoint,
            background: [1.0, 1.0, 1.0],
            stub: DeformStub::default(),
            threads: 1,
            surface_tolerance: 1e-4,
        }
    }
}

/// A rendered frame: image, weight map, and exact work counters.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
    weight: ScalarMap,
    pub points_sampled: u64,
    pub points_deformed: u64,
    pub rays_rendered: u64,
    /// XOR of deformation tokens; pins the stub work into observable state.
    pub deform_checksum: u64,
}

impl RenderOutput {
    /// Assembles an output directly; comparison tests build fixtures
    /// without a scene.
    #[doc(hidden)]
    pub fn from_parts(
        width: usize,
        height: usize,
        pixels: Vec<Rgb>,
        weight: ScalarMap,
        points_sampled: u64,
    ) -> Self {
        assert_eq!(pixels.len(), width * height);
        Self {
            width,
            height,
            pixels,
            weight,
            points_sampled,
            points_deformed: points_sampled,
            rays_rendered: (width * height) as u64,
            deform_checksum: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Accumulated opacity per pixel, clamped to [0, 1]; zero on omitted
    /// rays. This is the temporal prior consumed by the next frame.
    pub fn weight_map(&self) -> &ScalarMap {
        &self.weight
    }

    /// Writes an 8-bit binary portable pixmap (P6).
    pub fn write_ppm<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let mut bytes = Vec::with_capacity(self.pixels.len() * 3);
        for px in &self.pixels {
            for c in 0..3 {
                bytes.push((px[c].clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        out.write_all(&bytes)?;
        Ok(())
    }

    pub fn save_ppm<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        use std::io::Write as _;
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_ppm(&mut file)?;
        file.flush()?;
        Ok(())
    }
}

struct RowOutput {
    pixels: Vec<Rgb>,
    weights: Vec<f32>,
    sampled: u64,
    deformed: u64,
    rendered: u64,
    checksum: u64,
}

fn render_row(
    y: usize,
    scene: &Scene,
    cam: &CameraSpec,
    depth: &ScalarMap,
    rays: &RaySet,
    intervals: &RayIntervals,
    params: &RenderParams,
) -> Result<RowOutput> {
    let w = cam.width;
    let mut row = RowOutput {
        pixels: vec![params.background; w],
        weights: vec![0.0; w],
        sampled: 0,
        deformed: 0,
        rendered: 0,
        checksum: 0,
    };
    let frame = params.frame;
    let mut sigmas: Vec<f32> = Vec::new();
    let mut colors: Vec<Rgb> = Vec::new();
    for x in 0..w {
        let index = y * w + x;
        if !rays.contains_index(index) {
            continue;
        }
        let d = depth.get(x, y);
        let hit = d < cam.t_far;
        let (t_n, t_f) = intervals.bounds_index(index);
        let n_s = intervals.sample_count_index(index);
        // Hit rays never sample behind the visible surface: the last
        // sample is pinned to the intersection depth.
        let far = if hit { d.min(t_f) } else { t_f };
        let near = t_n.min(far);
        let stream = ((frame as u64) << 40) ^ index as u64;
        let depths = stratified_depths(near, far, n_s, params.mode, stream)?;

        let origin = cam.ray_origin(x, y);
        sigmas.clear();
        colors.clear();
        for (i, &t) in depths.iter().enumerate() {
            let p = Vec3::new(origin.x, origin.y, t as f64);
            let (p, token) = params.stub.deform(p);
            row.checksum ^= token;
            row.deformed += 1;
            if hit && i == depths.len() - 1 {
                // Terminal surface sample: colored by the body, not the field.
                sigmas.push(0.0);
                colors.push([0.0, 0.0, 0.0]);
            } else {
                let (sigma, color) = scene.query_field(frame, p);
                sigmas.push(sigma);
                colors.push(color);
            }
        }
        row.sampled += depths.len() as u64;

        let terminal = if hit {
            let p = Vec3::new(origin.x, origin.y, d as f64);
            TerminalColor::Surface(scene.surface_color(frame, p, params.surface_tolerance)?)
        } else {
            TerminalColor::LastSample
        };
        let (rgb, weight) = composite(&depths, &sigmas, &colors, terminal, (x, y))?;
        row.pixels[x] = [
            rgb[0].clamp(0.0, 1.0),
            rgb[1].clamp(0.0, 1.0),
            rgb[2].clamp(0.0, 1.0),
        ];
        row.weights[x] = weight.clamp(0.0, 1.0);
        row.rendered += 1;
    }
    Ok(row)
}

/// Renders the active rays of one frame.
///
/// Omitted pixels carry the background color and zero weight. Every
/// sampled point passes through the deformation stub before the field
/// query, and the counters report exact totals. Output is identical for
/// any thread count.
pub fn render_frame(
    scene: &Scene,
    cam: &CameraSpec,
    depth: &ScalarMap,
    rays: &RaySet,
    intervals: &RayIntervals,
    params: &RenderParams,
) -> Result<RenderOutput> {
    let (w, h) = (cam.width, cam.height);
    if depth.width() != w || depth.height() != h {
        return Err(Error::DimensionMismatch(depth.width(), depth.height(), w, h));
    }
    if rays.width() != w || rays.height() != h {
        return Err(Error::DimensionMismatch(rays.width(), rays.height(), w, h));
    }
    if intervals.width() != w || intervals.height() != h {
        return Err(Error::DimensionMismatch(
            intervals.width(),
            intervals.height(),
            w,
            h,
        ));
    }

    let rows: Vec<RowOutput> = if params.threads == 1 {
        let mut rows = Vec::with_capacity(h);
        for y in 0..h {
            rows.push(render_row(y, scene, cam, depth, rays, intervals, params)?);
        }
        rows
    } else {
        let job = || {
            (0..h)
                .into_par_iter()
                .map(|y| render_row(y, scene, cam, depth, rays, intervals, params))
                .collect::<Result<Vec<_>>>()
        };
        if params.threads == 0 {
            job()?
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(params.threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(job)?
        }
    };

    let mut out = RenderOutput {
        width: w,
        height: h,
        pixels: Vec::with_capacity(w * h),
        weight: ScalarMap::zeros(w, h).expect("camera dims"),
        points_sampled: 0,
        points_deformed: 0,
        rays_rendered: 0,
        deform_checksum: 0,
    };
    for (y, row) in rows.into_iter().enumerate() {
        for (x, weight) in row.weights.iter().enumerate() {
            out.weight.set(x, y, *weight);
        }
        out.pixels.extend_from_slice(&row.pixels);
        out.points_sampled += row.sampled;
        out.points_deformed += row.deformed;
        out.rays_rendered += row.rendered;
        out.deform_checksum ^= row.checksum;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eio::RayIntervals;
    use crate::scene::{
        default_camera, ClothField, FrameSequence, Primitive, ProxyBody, Scene, Shape,
    };
    use proptest::prelude::*;

    #[test]
    fn midpoint_strata_match_expected() {
        let d = stratified_depths(0.0, 1.0, 5, SampleMode::Midpoint, 0).unwrap();
        assert_eq!(d.len(), 5);
        for (got, want) in d.iter().zip([0.125f32, 0.375, 0.625, 0.875, 1.0]) {
            assert!((got - want).abs() < 1e-7, "{got} vs {want}");
        }
    }

    #[test]
    fn last_slot_sits_on_interval_end() {
        // Callers pin the interval end to the intersection depth on hits.
        let d = stratified_depths(0.0, 0.9, 4, SampleMode::Jittered { seed: 7 }, 3).unwrap();
        assert_eq!(*d.last().unwrap(), 0.9);
    }

    #[test]
    fn same_seed_same_depths() {
        let a = stratified_depths(1.0, 3.0, 16, SampleMode::Jittered { seed: 42 }, 9).unwrap();
        let b = stratified_depths(1.0, 3.0, 16, SampleMode::Jittered { seed: 42 }, 9).unwrap();
        assert_eq!(a, b);
        let c = stratified_depths(1.0, 3.0, 16, SampleMode::Jittered { seed: 43 }, 9).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_interval_and_bad_counts() {
        let d = stratified_depths(2.0, 2.0, 4, SampleMode::Midpoint, 0).unwrap();
        assert_eq!(d, vec![2.0; 4]);
        assert!(matches!(
            stratified_depths(0.0, 1.0, 1, SampleMode::Midpoint, 0),
            Err(Error::BadSampleCount(1))
        ));
    }

    #[test]
    fn zero_density_hit_ray_shows_pure_surface_color() {
        let depths = [0.2f32, 0.4, 0.6, 0.8, 1.0];
        let sigmas = [0.0f32; 5];
        let colors = [[0.5f32, 0.5, 0.5]; 5];
        let (rgb, w) =
            composite(&depths, &sigmas, &colors, TerminalColor::Surface([1.0, 0.0, 0.0]), (0, 0))
                .unwrap();
        assert_eq!(rgb, [1.0, 0.0, 0.0]);
        assert_eq!(w, 0.0);
    }

    #[test]
    fn two_sample_ray_matches_closed_form() {
        // sigma_1 = 1 over delta = 1: alpha_1 = 1 - e^-1.
        let depths = [0.0f32, 1.0];
        let sigmas = [1.0f32, 0.0];
        let colors = [[1.0f32, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let (rgb, w) =
            composite(&depths, &sigmas, &colors, TerminalColor::LastSample, (0, 0)).unwrap();
        let alpha = 1.0 - (-1.0f64).exp();
        assert!((w as f64 - alpha).abs() < 1e-7);
        assert!((rgb[0] as f64 - alpha).abs() < 1e-7);
        assert!((rgb[2] as f64 - (1.0 - alpha)).abs() < 1e-7);
    }

    #[test]
    fn saturated_first_sample_dominates() {
        let depths = [0.0f32, 0.1, 0.2, 1.0];
        let sigmas = [1e6f32, 0.5, 0.5, 0.0];
        let colors = [
            [0.2f32, 0.9, 0.4],
            [1.0, 1.0, 1.0],
            [1.0, 1.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        let (rgb, w) =
            composite(&depths, &sigmas, &colors, TerminalColor::LastSample, (0, 0)).unwrap();
        for c in 0..3 {
            assert!((rgb[c] - colors[0][c]).abs() < 1e-6);
        }
        assert!((w - 1.0).abs() < 1e-6);
    }

    #[test]
    fn nan_density_is_an_error() {
        let depths = [0.0f32, 0.5, 1.0];
        let sigmas = [0.5f32, f32::NAN, 0.0];
        let colors = [[0.0f32; 3]; 3];
        assert!(matches!(
            composite(&depths, &sigmas, &colors, TerminalColor::LastSample, (3, 7)),
            Err(Error::NanDensity { x: 3, y: 7, sample: 1 })
        ));
    }

    fn flat_scene(sigma_max: f64) -> (Scene, CameraSpec) {
        let cam = default_camera(32).unwrap();
        let scene = Scene::validated(
            ProxyBody {
                primitives: vec![Primitive {
                    shape: Shape::Sphere {
                        center: Vec3::new(0.3, -0.2, 5.0),
                        radius: 0.8,
                    },
                    albedo: [0.9, 0.1, 0.1],
                }],
            },
            ClothField {
                shell_offset: 0.05,
                falloff: 0.04,
                sigma_max,
                albedo: [0.2, 0.2, 0.9],
                empty_color: [1.0, 1.0, 1.0],
                protrusion: None,
            },
            FrameSequence::static_frames(1).unwrap(),
            &cam,
        )
        .unwrap();
        (scene, cam)
    }

    #[test]
    fn empty_ray_set_renders_background_only() {
        let (scene, cam) = flat_scene(10.0);
        let depth = scene.rasterize_depth(&cam, 1);
        let rays = crate::ero::threshold_rays(&ScalarMap::zeros(32, 32).unwrap(), 0.5);
        let intervals = RayIntervals::full(32, 32, cam.t_near, cam.t_far, 8);
        let out = render_frame(
            &scene,
            &cam,
            &depth,
            &rays,
            &intervals,
            &RenderParams::frame(1),
        )
        .unwrap();
        assert_eq!(out.points_sampled, 0);
        assert_eq!(out.rays_rendered, 0);
        for px in out.pixels() {
            assert_eq!(*px, [1.0, 1.0, 1.0]);
        }
        assert_eq!(out.weight_map().count_above(0.0), 0);
    }

    #[test]
    fn zero_density_field_shows_mesh_and_background() {
        let (scene, cam) = flat_scene(0.0);
        let depth = scene.rasterize_depth(&cam, 1);
        let rays = RaySet::full(32, 32);
        let intervals = RayIntervals::full(32, 32, cam.t_near, cam.t_far, 16);
        let out = render_frame(
            &scene,
            &cam,
            &depth,
            &rays,
            &intervals,
            &RenderParams::frame(1),
        )
        .unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let hit = depth.get(x, y) < cam.t_far;
                let px = out.pixel(x, y);
                if hit {
                    assert_eq!(px, [0.9, 0.1, 0.1], "({x},{y})");
                } else {
                    assert_eq!(px, [1.0, 1.0, 1.0], "({x},{y})");
                }
            }
        }
        assert_eq!(out.weight_map().count_above(1e-6), 0);
    }

    #[test]
    fn counters_are_exact() {
        let (scene, cam) = flat_scene(10.0);
        let depth = scene.rasterize_depth(&cam, 1);
        let sil = crate::scene::silhouette_from_depth(&depth, cam.t_far);
        let rays = crate::ero::threshold_rays(&sil, 0.5);
        let intervals = RayIntervals::full(32, 32, cam.t_near, cam.t_far, 9);
        let out = render_frame(
            &scene,
            &cam,
            &depth,
            &rays,
            &intervals,
            &RenderParams::frame(1),
        )
        .unwrap();
        assert_eq!(out.rays_rendered as usize, rays.count());
        assert_eq!(out.points_sampled, 9 * rays.count() as u64);
        assert_eq!(out.points_deformed, out.points_sampled);
    }

    #[test]
    fn parallel_render_matches_sequential() {
        let (scene, cam) = flat_scene(10.0);
        let depth = scene.rasterize_depth(&cam, 1);
        let rays = RaySet::full(32, 32);
        let intervals = RayIntervals::full(32, 32, cam.t_near, cam.t_far, 12);
        let mut params = RenderParams::frame(1);
        params.mode = SampleMode::Jittered { seed: 11 };
        params.stub = DeformStub::new(3);
        let seq = render_frame(&scene, &cam, &depth, &rays, &intervals, &params).unwrap();
        params.threads = 4;
        let par = render_frame(&scene, &cam, &depth, &rays, &intervals, &params).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn stub_checksum_depends_on_work() {
        let (scene, cam) = flat_scene(10.0);
        let depth = scene.rasterize_depth(&cam, 1);
        let rays = RaySet::full(32, 32);
        let intervals = RayIntervals::full(32, 32, cam.t_near, cam.t_far, 4);
        let mut params = RenderParams::frame(1);
        let plain = render_frame(&scene, &cam, &depth, &rays, &intervals, &params).unwrap();
        params.stub = DeformStub::new(10);
        let burned = render_frame(&scene, &cam, &depth, &rays, &intervals, &params).unwrap();
        assert_ne!(plain.deform_checksum, burned.deform_checksum);
        // Identity mapping: images agree exactly.
        assert_eq!(plain.pixels(), burned.pixels());
    }

    #[test]
    fn ppm_header_and_payload() {
        let (scene, cam) = flat_scene(0.0);
        let depth = scene.rasterize_depth(&cam, 1);
        let out = render_frame(
            &scene,
            &cam,
            &depth,
            &RaySet::full(32, 32),
            &RayIntervals::full(32, 32, cam.t_near, cam.t_far, 4),
            &RenderParams::frame(1),
        )
        .unwrap();
        let mut buf = Vec::new();
        out.write_ppm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n32 32\n255\n"));
        assert_eq!(buf.len(), 13 + 32 * 32 * 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn energy_bound_and_telescoping(
            sig in proptest::collection::vec(0.0f32..30.0, 2..24),
            width in 0.01f32..2.0,
        ) {
            let n = sig.len();
            let depths: Vec<f32> = (0..n).map(|i| i as f32 * width / n as f32).collect();
            let colors = vec![[0.5f32, 0.5, 0.5]; n];
            let (_, w) = composite(&depths, &sig, &colors, TerminalColor::LastSample, (0, 0)).unwrap();
            // Alpha sum stays in [0, 1 + 1e-6].
            prop_assert!((0.0..=1.0 + 1e-6).contains(&(w as f64)));
            // Transmittance telescopes: recompute and check monotonicity.
            let mut t = 1.0f64;
            for i in 0..n - 1 {
                let delta = (depths[i + 1] - depths[i]) as f64;
                let next = t * (-(sig[i] as f64) * delta).exp();
                prop_assert!(next <= t + 1e-12);
                t = next;
            }
            // The weight comes back through an f32 store.
            prop_assert!((w as f64 + t - 1.0).abs() < 1e-6);
        }
    }
}
