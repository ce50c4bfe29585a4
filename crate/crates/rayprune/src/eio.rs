//! Empty interval omission: narrows each ray's sampling interval to the
//! depth neighborhood of the body using per-patch depth extrema.
//!
//! The depth map is tiled into `n_patch x n_patch` patches; each patch
//! records the min/max depth over its hit pixels (miss pixels carry the
//! `t_far` sentinel and are excluded — a patch of misses would otherwise
//! drag every far bound out to `t_far` and erase the narrowing). A second
//! tiling, offset by half a patch in both axes, is fused in by per-pixel
//! min/max so content straddling a patch boundary is clustered inside a
//! single shifted window instead of being split. Fusion can only widen
//! intervals; that is the price paid to remove boundary omission errors.
//!
//! A margin `epsilon` stretches the fused bounds outward because volume
//! density extends beyond the body surface. Rays whose final interval is
//! still wide keep the full per-ray sample count; narrowed rays drop to
//! the reduced count.

use crate::ero::RaySet;
use crate::error::{Error, Result};
use crate::maps::ScalarMap;

/// Parameters of empty interval omission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EioConfig {
    /// Patches per image side.
    pub n_patch: usize,
    /// Fuse bounds from the half-patch-shifted tiling.
    pub shift: bool,
    /// Outward margin on fused bounds, world units.
    pub epsilon: f32,
    /// Intervals wider than this keep the full sample count, world units.
    pub wide_threshold: f32,
    pub n_s_reduced: usize,
    pub n_s_full: usize,
}

impl EioConfig {
    /// Defaults tied to a depth window: margin 5% and wide-interval
    /// threshold 25% of the window.
    pub fn for_depth_window(t_near: f32, t_far: f32) -> Self {
        let range = t_far - t_near;
        Self {
            n_patch: 2,
            shift: true,
            epsilon: 0.05 * range,
            wide_threshold: 0.25 * range,
            n_s_reduced: 28,
            n_s_full: 96,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_patch == 0 {
            return Err(Error::Config("eio.n_patch must be >= 1".into()));
        }
        if self.n_s_reduced < 2 || self.n_s_full < 2 {
            return Err(Error::BadSampleCount(self.n_s_reduced.min(self.n_s_full)));
        }
        if self.n_s_reduced > self.n_s_full {
            return Err(Error::Config(format!(
                "eio.n_s_reduced ({}) must not exceed eio.n_s_full ({})",
                self.n_s_reduced, self.n_s_full
            )));
        }
        if self.epsilon < 0.0 || self.wide_threshold < 0.0 {
            return Err(Error::Config(
                "eio.epsilon and eio.wide_threshold must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-patch depth extrema over one tiling of the image.
///
/// Patches with no hit pixel are invalid and carry `(t_near, t_far)`, so
/// fusing them falls back to the full interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchBounds {
    /// Windows per axis.
    nx: usize,
    ny: usize,
    /// Patch pitch in pixels.
    kx: usize,
    ky: usize,
    /// Index offset: 0 for the base tiling, half a patch for the shifted one.
    off_x: usize,
    off_y: usize,
    near: Vec<f32>,
    far: Vec<f32>,
    valid: Vec<bool>,
    t_near: f32,
    t_far: f32,
}

impl PatchBounds {
    #[inline]
    fn index(&self, x: usize, y: usize) -> usize {
        let ix = (x + self.off_x) / self.kx;
        let iy = (y + self.off_y) / self.ky;
        iy * self.nx + ix
    }

    /// Bounds covering pixel (x, y): `(near, far, valid)`.
    #[inline]
    pub fn lookup(&self, x: usize, y: usize) -> (f32, f32, bool) {
        let i = self.index(x, y);
        (self.near[i], self.far[i], self.valid[i])
    }

    pub fn windows(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[self.index(x, y)]
    }
}

fn patch_pitch(side: usize, n_patch: usize) -> Result<usize> {
    if side % n_patch != 0 {
        return Err(Error::IndivisiblePatches { side, n_patch });
    }
    Ok(side / n_patch)
}

fn scan_bounds(
    depth: &ScalarMap,
    t_near: f32,
    t_far: f32,
    nx: usize,
    ny: usize,
    kx: usize,
    ky: usize,
    off_x: usize,
    off_y: usize,
) -> PatchBounds {
    let cells = nx * ny;
    let mut near = vec![f32::INFINITY; cells];
    let mut far = vec![f32::NEG_INFINITY; cells];
    let mut valid = vec![false; cells];
    for y in 0..depth.height() {
        let iy = (y + off_y) / ky;
        for x in 0..depth.width() {
            let d = depth.get(x, y);
            if d < t_far {
                let i = iy * nx + (x + off_x) / kx;
                near[i] = near[i].min(d);
                far[i] = far[i].max(d);
                valid[i] = true;
            }
        }
    }
    for i in 0..cells {
        if !valid[i] {
            near[i] = t_near;
            far[i] = t_far;
        }
    }
    PatchBounds {
        nx,
        ny,
        kx,
        ky,
        off_x,
        off_y,
        near,
        far,
        valid,
        t_near,
        t_far,
    }
}

/// Depth extrema over the base `n_patch x n_patch` tiling.
///
/// `depth` must use the `t_far` sentinel for misses; sentinel pixels do
/// not participate in the extrema.
pub fn patch_minmax(
    depth: &ScalarMap,
    n_patch: usize,
    t_near: f32,
    t_far: f32,
) -> Result<PatchBounds> {
    let kx = patch_pitch(depth.width(), n_patch)?;
    let ky = patch_pitch(depth.height(), n_patch)?;
    Ok(scan_bounds(
        depth, t_near, t_far, n_patch, n_patch, kx, ky, 0, 0,
    ))
}

/// Depth extrema over the tiling offset by half a patch in both axes.
///
/// Edge windows are clipped at the image border (no wrapping), so there
/// are `n_patch + 1` windows per axis and every pixel belongs to exactly
/// one window.
pub fn shifted_patch_minmax(
    depth: &ScalarMap,
    n_patch: usize,
    t_near: f32,
    t_far: f32,
) -> Result<PatchBounds> {
    let kx = patch_pitch(depth.width(), n_patch)?;
    let ky = patch_pitch(depth.height(), n_patch)?;
    Ok(scan_bounds(
        depth,
        t_near,
        t_far,
        n_patch + 1,
        n_patch + 1,
        kx,
        ky,
        kx / 2,
        ky / 2,
    ))
}

/// Per-pixel sampling intervals and sample counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RayIntervals {
    width: usize,
    height: usize,
    t_near: f32,
    t_far: f32,
    near: Vec<f32>,
    far: Vec<f32>,
    samples: Vec<u32>,
}

impl RayIntervals {
    /// Unnarrowed intervals `[t_near, t_far]` with the full sample count:
    /// the no-omission baseline whose sampling volume is exactly 1.
    pub fn full(width: usize, height: usize, t_near: f32, t_far: f32, n_s: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            t_near,
            t_far,
            near: vec![t_near; n],
            far: vec![t_far; n],
            samples: vec![n_s as u32; n],
        }
    }

    #[inline]
    pub fn bounds(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.near[i], self.far[i])
    }

    #[inline]
    pub fn bounds_index(&self, index: usize) -> (f32, f32) {
        (self.near[index], self.far[index])
    }

    #[inline]
    pub fn sample_count(&self, x: usize, y: usize) -> usize {
        self.samples[y * self.width + x] as usize
    }

    #[inline]
    pub fn sample_count_index(&self, index: usize) -> usize {
        self.samples[index] as usize
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth_window(&self) -> (f32, f32) {
        (self.t_near, self.t_far)
    }

    /// Near and far bounds as maps, for the debug container.
    pub fn export_maps(&self) -> (ScalarMap, ScalarMap) {
        (
            ScalarMap::from_data(self.width, self.height, self.near.clone()).expect("dims"),
            ScalarMap::from_data(self.width, self.height, self.far.clone()).expect("dims"),
        )
    }
}

/// Fuses base and shifted bounds into per-pixel intervals.
///
/// Per pixel the base patch proposes the interval: its min/max widened to
/// the pixel's own depth (a depth sentinel is replaced by the patch far,
/// otherwise misses would erase the narrowing), or the full depth window
/// when the base patch saw no hit. The shifted window then widens by
/// per-pixel min/max when it is valid; an empty window carries no depth
/// information and is ignored rather than dragging the interval to the
/// full window. Fusion therefore never tightens the unshifted result.
/// The margin stretches both ends and everything clamps to the window.
///
/// Pass the base bounds twice to fuse without a shifted tiling.
pub fn fuse_bounds(
    base: &PatchBounds,
    shifted: &PatchBounds,
    depth: &ScalarMap,
    cfg: &EioConfig,
) -> RayIntervals {
    let (w, h) = (depth.width(), depth.height());
    let (t_near, t_far) = (base.t_near, base.t_far);
    debug_assert_eq!((shifted.t_near, shifted.t_far), (t_near, t_far));
    let eps = cfg.epsilon;
    let mut out = RayIntervals::full(w, h, t_near, t_far, cfg.n_s_full);
    for y in 0..h {
        for x in 0..w {
            let (n1, f1, v1) = base.lookup(x, y);
            let (n2, f2, v2) = shifted.lookup(x, y);
            let i = y * w + x;
            if !v1 {
                // No base information: the pixel keeps the full window.
                continue;
            }
            let (pn, pf) = if v2 {
                (n1.min(n2), f1.max(f2))
            } else {
                (n1, f1)
            };
            let d = depth.get(x, y);
            let d_valid = if d < t_far { d } else { pf };
            let tn = (pn - eps).max(t_near);
            let tf = (d_valid.max(pf) + eps).min(t_far);
            debug_assert!(t_near <= tn && tn <= tf && tf <= t_far);
            debug_assert!(d >= t_far || tf >= d);
            out.near[i] = tn;
            out.far[i] = tf;
        }
    }
    out
}

/// Applies the wide-interval fallback: rays whose interval exceeds the
/// threshold keep the full sample count, the rest drop to the reduced one.
pub fn assign_sample_counts(mut intervals: RayIntervals, cfg: &EioConfig) -> RayIntervals {
    for i in 0..intervals.near.len() {
        let width = intervals.far[i] - intervals.near[i];
        intervals.samples[i] = if width > cfg.wide_threshold {
            cfg.n_s_full as u32
        } else {
            cfg.n_s_reduced as u32
        };
    }
    intervals
}

/// Total interval length over active rays, relative to sampling every
/// pixel over the whole depth window.
pub fn sampling_volume_ratio(intervals: &RayIntervals, rays: &RaySet) -> f64 {
    let range = (intervals.t_far - intervals.t_near) as f64;
    let total = intervals.near.len() as f64 * range;
    if total <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0f64;
    for i in rays.iter_active() {
        sum += (intervals.far[i] - intervals.near[i]) as f64;
    }
    sum / total
}
