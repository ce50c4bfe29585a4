//! Analytic proxy scene: an orthographic camera, a body built from spheres
//! and capsules, a cloth density field hugging the body surface, and a
//! per-frame rigid animation track.
//!
//! The body plays the role of an opaque colored mesh: it is rasterized
//! into per-frame depth and silhouette maps by exact ray intersection.
//! The cloth field is the volumetric part: a Gaussian shell of density
//! around the body surface, optionally with a detached lobe placed away
//! from the body to exercise interval-omission failure modes.

use crate::error::{Error, Result};
use crate::maps::{binary_dilate, ScalarMap};

pub type Rgb = [f32; 3];

/// Minimal 3-vector. Scene math runs in f64 and is stored as f32.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Orthographic camera. Rays run parallel to +z, one per pixel through the
/// pixel center; depth along a ray is the world z coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraSpec {
    pub width: usize,
    pub height: usize,
    /// Half extent of the view rectangle in world units, x axis.
    pub half_extent_x: f64,
    /// Half extent of the view rectangle in world units, y axis.
    pub half_extent_y: f64,
    pub t_near: f32,
    pub t_far: f32,
}

impl CameraSpec {
    pub fn new(
        width: usize,
        height: usize,
        half_extent_x: f64,
        half_extent_y: f64,
        t_near: f32,
        t_far: f32,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::BadCamera(format!("empty image {width}x{height}")));
        }
        if !(t_near >= 0.0 && t_near < t_far) {
            return Err(Error::BadCamera(format!(
                "need 0 <= t_near < t_far, got [{t_near}, {t_far}]"
            )));
        }
        if half_extent_x <= 0.0 || half_extent_y <= 0.0 {
            return Err(Error::BadCamera("non-positive view extent".into()));
        }
        Ok(Self {
            width,
            height,
            half_extent_x,
            half_extent_y,
            t_near,
            t_far,
        })
    }

    /// Square camera over [-extent, extent]^2.
    pub fn square(side: usize, extent: f64, t_near: f32, t_far: f32) -> Result<Self> {
        Self::new(side, side, extent, extent, t_near, t_far)
    }

    /// World position of the pixel-center ray origin (z = 0).
    pub fn ray_origin(&self, x: usize, y: usize) -> Vec3 {
        let px = 2.0 * self.half_extent_x / self.width as f64;
        let py = 2.0 * self.half_extent_y / self.height as f64;
        Vec3::new(
            -self.half_extent_x + (x as f64 + 0.5) * px,
            self.half_extent_y - (y as f64 + 0.5) * py,
            0.0,
        )
    }

    /// World units per pixel along x.
    pub fn pixel_size(&self) -> f64 {
        2.0 * self.half_extent_x / self.width as f64
    }

    pub fn depth_range(&self) -> f32 {
        self.t_far - self.t_near
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Capsule { a: Vec3, b: Vec3, radius: f64 },
}

impl Shape {
    /// Signed distance from `p` to the surface; negative inside.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        match *self {
            Shape::Sphere { center, radius } => p.sub(center).length() - radius,
            Shape::Capsule { a, b, radius } => {
                let ba = b.sub(a);
                let pa = p.sub(a);
                let h = (pa.dot(ba) / ba.dot(ba)).clamp(0.0, 1.0);
                pa.sub(ba.scale(h)).length() - radius
            }
        }
    }

    /// Smallest t >= 0 with `origin + t*dir` on the surface, for unit `dir`.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        match *self {
            Shape::Sphere { center, radius } => ray_sphere(origin, dir, center, radius),
            Shape::Capsule { a, b, radius } => ray_capsule(origin, dir, a, b, radius),
        }
    }

    /// Axis-aligned bounds, for frustum validation.
    fn bounds(&self) -> (Vec3, Vec3) {
        match *self {
            Shape::Sphere { center, radius } => (
                center.sub(Vec3::new(radius, radius, radius)),
                center.add(Vec3::new(radius, radius, radius)),
            ),
            Shape::Capsule { a, b, radius } => {
                let r = Vec3::new(radius, radius, radius);
                let lo = Vec3::new(a.x.min(b.x), a.y.min(b.y), a.z.min(b.z)).sub(r);
                let hi = Vec3::new(a.x.max(b.x), a.y.max(b.y), a.z.max(b.z)).add(r);
                (lo, hi)
            }
        }
    }

    fn translated(&self, offset: Vec3) -> Shape {
        match *self {
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: center.add(offset),
                radius,
            },
            Shape::Capsule { a, b, radius } => Shape::Capsule {
                a: a.add(offset),
                b: b.add(offset),
                radius,
            },
        }
    }
}

fn ray_sphere(origin: Vec3, dir: Vec3, center: Vec3, radius: f64) -> Option<f64> {
    let oc = origin.sub(center);
    let b = oc.dot(dir);
    let c = oc.dot(oc) - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    if t0 >= 0.0 {
        return Some(t0);
    }
    let t1 = -b + sq;
    (t1 >= 0.0).then_some(t1)
}

fn ray_capsule(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, radius: f64) -> Option<f64> {
    let ba = b.sub(a);
    let oa = origin.sub(a);
    let baba = ba.dot(ba);
    let bard = ba.dot(dir);
    let baoa = ba.dot(oa);
    let rdoa = dir.dot(oa);
    let oaoa = oa.dot(oa);

    let qa = baba - bard * bard;
    let qb = baba * rdoa - baoa * bard;
    let qc = baba * oaoa - baoa * baoa - radius * radius * baba;

    let mut best: Option<f64> = None;
    if qa.abs() > 1e-12 {
        let h = qb * qb - qa * qc;
        if h >= 0.0 {
            let t = (-qb - h.sqrt()) / qa;
            let y = baoa + t * bard;
            if t >= 0.0 && y >= 0.0 && y <= baba {
                best = Some(t);
            }
        }
    }
    // Spherical caps cover axis-parallel rays and near-end hits.
    for cap in [a, b] {
        if let Some(t) = ray_sphere(origin, dir, cap, radius) {
            if best.map_or(true, |bt| t < bt) {
                best = Some(t);
            }
        }
    }
    best
}

/// One body primitive with its surface albedo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub albedo: Rgb,
}

/// The opaque proxy body: a list of primitives, rigidly animated per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyBody {
    pub primitives: Vec<Primitive>,
}

/// Detached density lobe, deliberately placed outside the body's
/// silhouette neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protrusion {
    pub center: Vec3,
    /// Gaussian falloff width; support is truncated at 3x this radius.
    pub falloff: f64,
    pub sigma_max: f64,
}

/// Volumetric cloth density hugging the body surface.
///
/// Density peaks at signed distance `shell_offset` from the surface and
/// falls off as a Gaussian of width `falloff`, hard-truncated beyond
/// three falloff widths so empty space is exactly empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ClothField {
    pub shell_offset: f64,
    pub falloff: f64,
    pub sigma_max: f64,
    pub albedo: Rgb,
    /// Color reported where density is zero. Volume color only matters
    /// where density is positive, except for the terminal sample of rays
    /// that miss the body, which should composite like background.
    pub empty_color: Rgb,
    pub protrusion: Option<Protrusion>,
}

impl ClothField {
    /// Maximum distance from the body surface with nonzero shell density.
    pub fn band_reach(&self) -> f64 {
        self.shell_offset + 3.0 * self.falloff
    }
}

/// Rigid animation track with a declared bound on silhouette motion.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    offsets: Vec<Vec3>,
    max_pixel_motion: f64,
}

impl FrameSequence {
    /// `offsets[t-1]` is the rigid body offset of 1-based frame `t`.
    pub fn new(offsets: Vec<Vec3>, max_pixel_motion: f64) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::Config("frame sequence needs at least one frame".into()));
        }
        Ok(Self {
            offsets,
            max_pixel_motion,
        })
    }

    pub fn static_frames(count: usize) -> Result<Self> {
        Self::new(vec![Vec3::new(0.0, 0.0, 0.0); count.max(1)], 0.0)
    }

    pub fn frame_count(&self) -> usize {
        self.offsets.len()
    }

    /// Declared bound on inter-frame silhouette displacement, in pixels.
    pub fn max_pixel_motion(&self) -> f64 {
        self.max_pixel_motion
    }

    pub fn offset(&self, frame: usize) -> Vec3 {
        self.offsets[frame - 1]
    }
}

/// The full proxy scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub body: ProxyBody,
    pub cloth: ClothField,
    pub animation: FrameSequence,
}

/// Margin kept between primitives and the frustum depth bounds so no
/// real depth can round onto the miss sentinel.
const FRUSTUM_MARGIN: f64 = 1e-3;

impl Scene {
    /// Builds a scene, checking that every primitive stays strictly inside
    /// the camera frustum for every frame of the animation.
    pub fn validated(
        body: ProxyBody,
        cloth: ClothField,
        animation: FrameSequence,
        cam: &CameraSpec,
    ) -> Result<Self> {
        for frame in 1..=animation.frame_count() {
            let off = animation.offset(frame);
            for (index, prim) in body.primitives.iter().enumerate() {
                let (lo, hi) = prim.shape.translated(off).bounds();
                let inside = lo.x > -cam.half_extent_x + FRUSTUM_MARGIN
                    && hi.x < cam.half_extent_x - FRUSTUM_MARGIN
                    && lo.y > -cam.half_extent_y + FRUSTUM_MARGIN
                    && hi.y < cam.half_extent_y - FRUSTUM_MARGIN
                    && lo.z > cam.t_near as f64 + FRUSTUM_MARGIN
                    && hi.z < cam.t_far as f64 - FRUSTUM_MARGIN;
                if !inside {
                    return Err(Error::PrimitiveOutsideFrustum { index, frame });
                }
            }
        }
        Ok(Self {
            body,
            cloth,
            animation,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.animation.frame_count()
    }

    fn check_frame(&self, frame: usize) {
        assert!(
            frame >= 1 && frame <= self.frame_count(),
            "frame {frame} outside 1..={}",
            self.frame_count()
        );
    }

    /// Signed distance from `p` to the nearest body surface at `frame`.
    pub fn body_distance(&self, frame: usize, p: Vec3) -> f64 {
        let q = p.sub(self.animation.offset(frame));
        self.body
            .primitives
            .iter()
            .map(|prim| prim.shape.signed_distance(q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Volume density and color at `p`.
    ///
    /// Deterministic and continuous; zero outside the truncated cloth band
    /// (and outside the protrusion lobe, when present).
    pub fn query_field(&self, frame: usize, p: Vec3) -> (f32, Rgb) {
        self.check_frame(frame);
        let mut sigma = 0.0f64;

        let d = self.body_distance(frame, p);
        let u = d - self.cloth.shell_offset;
        if u.abs() <= 3.0 * self.cloth.falloff {
            let w = self.cloth.falloff;
            sigma += self.cloth.sigma_max * (-u * u / (2.0 * w * w)).exp();
        }
        if let Some(prot) = &self.cloth.protrusion {
            let center = prot.center.add(self.animation.offset(frame));
            let v = p.sub(center).length();
            if v <= 3.0 * prot.falloff {
                let w = prot.falloff;
                sigma += prot.sigma_max * (-v * v / (2.0 * w * w)).exp();
            }
        }

        let color = if sigma > 0.0 {
            self.cloth.albedo
        } else {
            self.cloth.empty_color
        };
        (sigma as f32, color)
    }

    /// Albedo of the primitive whose surface passes through `p`.
    ///
    /// Rejects points farther than `tolerance` from every surface; ties go
    /// to the lower-indexed primitive.
    pub fn surface_color(&self, frame: usize, p: Vec3, tolerance: f64) -> Result<Rgb> {
        self.check_frame(frame);
        let q = p.sub(self.animation.offset(frame));
        let mut best: Option<(f64, Rgb)> = None;
        for prim in &self.body.primitives {
            let d = prim.shape.signed_distance(q).abs();
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, prim.albedo));
            }
        }
        match best {
            Some((d, albedo)) if d <= tolerance => Ok(albedo),
            Some((d, _)) => Err(Error::OffSurface(
                p.x as f32,
                p.y as f32,
                p.z as f32,
                d as f32,
                tolerance as f32,
            )),
            None => Err(Error::OffSurface(
                p.x as f32,
                p.y as f32,
                p.z as f32,
                f32::INFINITY,
                tolerance as f32,
            )),
        }
    }

    /// Depth of the nearest body intersection per pixel; pixels whose ray
    /// misses every primitive carry exactly `t_far`.
    pub fn rasterize_depth(&self, cam: &CameraSpec, frame: usize) -> ScalarMap {
        self.check_frame(frame);
        let dir = Vec3::new(0.0, 0.0, 1.0);
        let off = self.animation.offset(frame);
        let mut out = ScalarMap::zeros(cam.width, cam.height).expect("camera checked non-empty");
        for y in 0..cam.height {
            for x in 0..cam.width {
                let origin = cam.ray_origin(x, y).sub(off);
                let mut depth = f64::INFINITY;
                for prim in &self.body.primitives {
                    if let Some(t) = prim.shape.intersect(origin, dir) {
                        depth = depth.min(t);
                    }
                }
                let v = if depth.is_finite() {
                    depth as f32
                } else {
                    cam.t_far
                };
                out.set(x, y, v);
            }
        }
        out
    }

    /// 1.0 where the depth map records a hit, 0.0 elsewhere.
    pub fn rasterize_silhouette(&self, cam: &CameraSpec, frame: usize) -> ScalarMap {
        silhouette_from_depth(&self.rasterize_depth(cam, frame), cam.t_far)
    }
}

/// Derives the binary silhouette from a depth map with a `t_far` sentinel.
pub fn silhouette_from_depth(depth: &ScalarMap, t_far: f32) -> ScalarMap {
    let data = depth
        .data()
        .iter()
        .map(|&d| if d < t_far { 1.0 } else { 0.0 })
        .collect();
    ScalarMap::from_data(depth.width(), depth.height(), data).expect("same dimensions")
}

/// Smallest radius `m <= cap` such that each silhouette is contained in
/// the other dilated by `m`. `None` if no radius up to `cap` suffices.
pub fn silhouette_displacement_bound(
    a: &ScalarMap,
    b: &ScalarMap,
    cap: usize,
) -> Option<usize> {
    let contained = |inner: &ScalarMap, outer: &ScalarMap| {
        inner
            .data()
            .iter()
            .zip(outer.data())
            .all(|(&i, &o)| i <= 0.0 || o > 0.0)
    };
    for m in 0..=cap {
        let da = binary_dilate(a, m).ok()?;
        let db = binary_dilate(b, m).ok()?;
        if contained(a, &db) && contained(b, &da) {
            return Some(m);
        }
    }
    None
}

/// Sinusoidal rigid motion in the view plane. The step bound is reported
/// in pixels of `cam`.
fn waving_offsets(frames: usize, ax: f64, ay: f64) -> Vec<Vec3> {
    (0..frames)
        .map(|i| {
            let ph = i as f64;
            Vec3::new(
                ax * (2.0 * std::f64::consts::PI * ph / 10.0).sin(),
                ay * (4.0 * std::f64::consts::PI * ph / 10.0).sin(),
                0.0,
            )
        })
        .collect()
}

fn max_step(offsets: &[Vec3]) -> f64 {
    offsets
        .windows(2)
        .map(|w| (w[1].x - w[0].x).abs().max((w[1].y - w[0].y).abs()))
        .fold(0.0, f64::max)
}

/// The default benchmark scene: a slim articulated figure around depth 5
/// with a thin cloth shell, waving gently.
pub fn default_scene(frames: usize, cam: &CameraSpec) -> Result<Scene> {
    let primitives = vec![
        // head
        Primitive {
            shape: Shape::Sphere {
                center: Vec3::new(0.0, 1.02, 5.02),
                radius: 0.16,
            },
            albedo: [0.90, 0.75, 0.60],
        },
        // torso
        Primitive {
            shape: Shape::Capsule {
                a: Vec3::new(0.0, -0.42, 5.05),
                b: Vec3::new(0.0, 0.48, 5.02),
                radius: 0.16,
            },
            albedo: [0.80, 0.20, 0.20],
        },
        // arms
        Primitive {
            shape: Shape::Capsule {
                a: Vec3::new(-0.30, 0.40, 4.96),
                b: Vec3::new(-0.52, 0.10, 4.93),
                radius: 0.075,
            },
            albedo: [0.20, 0.70, 0.30],
        },
        Primitive {
            shape: Shape::Capsule {
                a: Vec3::new(0.30, 0.40, 5.08),
                b: Vec3::new(0.52, 0.10, 5.11),
                radius: 0.075,
            },
            albedo: [0.20, 0.30, 0.70],
        },
        // legs
        Primitive {
            shape: Shape::Capsule {
                a: Vec3::new(-0.13, -0.52, 5.03),
                b: Vec3::new(-0.19, -1.22, 4.98),
                radius: 0.095,
            },
            albedo: [0.60, 0.60, 0.20],
        },
        Primitive {
            shape: Shape::Capsule {
                a: Vec3::new(0.13, -0.52, 5.06),
                b: Vec3::new(0.19, -1.22, 5.10),
                radius: 0.095,
            },
            albedo: [0.50, 0.20, 0.60],
        },
    ];
    let offsets = waving_offsets(frames, 0.10, 0.06);
    let motion_px = (max_step(&offsets) / cam.pixel_size()).ceil() + 1.0;
    let animation = FrameSequence::new(offsets, motion_px)?;
    let cloth = ClothField {
        shell_offset: 0.055,
        falloff: 0.022,
        sigma_max: 12.0,
        albedo: [0.25, 0.35, 0.80],
        empty_color: [1.0, 1.0, 1.0],
        protrusion: None,
    };
    Scene::validated(ProxyBody { primitives }, cloth, animation, cam)
}

/// Scene with a detached density lobe between a shallow arm and a deep
/// torso, laid out so patch-grid interval bounds miss it unless shifted
/// windows bridge the patch boundary.
pub fn protrusion_scene(frames: usize, cam: &CameraSpec) -> Result<Scene> {
    let primitives = vec![
        // shallow arm crossing the upper-left patch region
        Primitive {
            shape: Shape::Capsule {
                a: Vec3::new(-0.90, 0.27, 4.0),
                b: Vec3::new(0.35, 0.27, 4.0),
                radius: 0.10,
            },
            albedo: [0.20, 0.70, 0.30],
        },
        // deep torso in the lower-right quadrant
        Primitive {
            shape: Shape::Sphere {
                center: Vec3::new(1.05, -1.05, 5.3),
                radius: 0.28,
            },
            albedo: [0.80, 0.20, 0.20],
        },
    ];
    let animation = FrameSequence::static_frames(frames)?;
    let cloth = ClothField {
        shell_offset: 0.01,
        falloff: 0.015,
        sigma_max: 12.0,
        albedo: [0.25, 0.35, 0.80],
        empty_color: [1.0, 1.0, 1.0],
        protrusion: Some(Protrusion {
            center: Vec3::new(-0.336, 0.617, 5.15),
            falloff: 0.06,
            sigma_max: 40.0,
        }),
    };
    Scene::validated(ProxyBody { primitives }, cloth, animation, cam)
}

/// Camera used by the shipped scenes: square view over [-2, 2]^2 with
/// depth window [2, 8].
pub fn default_camera(side: usize) -> Result<CameraSpec> {
    CameraSpec::square(side, 2.0, 2.0, 8.0)
}
