//! Empty ray omission: builds per-frame candidate maps scoring how likely
//! each ray is to hit anything, then thresholds them into the set of rays
//! actually rendered.
//!
//! Two candidate constructions are supported. The training-stage map uses
//! only the current silhouette, spread with a large kernel because nothing
//! is known about cloth geometry yet. The inference-stage map adds the
//! previous frame's rendered weight map before spreading with a smaller
//! kernel, exploiting temporal coherence for a tighter candidate set.
//! Frame 1 of a sequence must use the training construction; there is no
//! previous weight map to consume.
//!
//! Spreading comes in two flavors because the intent behind the reference
//! procedure is ambiguous: `Averaging` convolves with a box kernel and
//! leaves graded scores (pixels just outside a straight silhouette edge
//! score about 0.5, which a 0.9 threshold rejects); `Binary` dilates the
//! support by the kernel radius so every pixel near the support scores
//! exactly 1. The harness defaults to `Averaging` and reports coverage
//! errors for both rather than guessing.

use crate::error::{Error, Result};
use crate::maps::{binary_dilate, box_convolve, map_add, BoxKernelSpec, ScalarMap};

/// How candidate support spreads outward from silhouette/weight support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateMode {
    /// Box-average the map; scores decay toward the support boundary.
    Averaging,
    /// Binarize and dilate by the kernel radius; scores are 0 or 1.
    Binary,
}

/// Parameters of empty ray omission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EroConfig {
    /// Score threshold; rays keep rendering only above it (strictly).
    pub tau: f32,
    /// Training-stage kernel size (odd).
    pub k1: usize,
    /// Inference-stage kernel size (odd, at most `k1`).
    pub k2: usize,
    pub mode: CandidateMode,
}

impl Default for EroConfig {
    fn default() -> Self {
        Self {
            tau: 0.9,
            k1: 41,
            k2: 21,
            mode: CandidateMode::Averaging,
        }
    }
}

impl EroConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("ero.tau must be > 0, got {}", self.tau)));
        }
        if self.k1 % 2 == 0 {
            return Err(Error::EvenKernel(self.k1));
        }
        if self.k2 % 2 == 0 {
            return Err(Error::EvenKernel(self.k2));
        }
        if self.k2 > self.k1 {
            return Err(Error::Config(format!(
                "ero.k2 ({}) must not exceed ero.k1 ({})",
                self.k2, self.k1
            )));
        }
        Ok(())
    }
}

/// The set of rays that survive omission, as a pixel bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySet {
    width: usize,
    height: usize,
    bits: Vec<u64>,
    count: usize,
}

impl RaySet {
    fn empty(width: usize, height: usize) -> Self {
        let words = (width * height + 63) / 64;
        Self {
            width,
            height,
            bits: vec![0; words],
            count: 0,
        }
    }

    /// Every ray active.
    pub fn full(width: usize, height: usize) -> Self {
        let mut set = Self::empty(width, height);
        for i in 0..width * height {
            set.insert(i);
        }
        set
    }

    fn insert(&mut self, index: usize) {
        let (w, b) = (index / 64, index % 64);
        if self.bits[w] & (1 << b) == 0 {
            self.bits[w] |= 1 << b;
            self.count += 1;
        }
    }

    #[inline]
    pub fn contains_index(&self, index: usize) -> bool {
        self.bits[index / 64] & (1 << (index % 64)) != 0
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.contains_index(y * self.width + x)
    }

    /// Number of active rays.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Active pixel indices in row-major order.
    pub fn iter_active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.contains_index(i))
    }

    /// 1.0/0.0 mask for export through the map container.
    pub fn to_map(&self) -> ScalarMap {
        let data = (0..self.len())
            .map(|i| if self.contains_index(i) { 1.0 } else { 0.0 })
            .collect();
        ScalarMap::from_data(self.width, self.height, data).expect("mask dimensions")
    }
}

fn ensure_binary(map: &ScalarMap) -> Result<()> {
    for (i, &v) in map.data().iter().enumerate() {
        if (v - 0.0).abs() > 1e-6 && (v - 1.0).abs() > 1e-6 {
            return Err(Error::NonBinarySilhouette {
                value: v,
                x: i % map.width(),
                y: i / map.width(),
            });
        }
    }
    Ok(())
}

/// Binarizes a map at a strict threshold.
pub fn binarize(map: &ScalarMap, threshold: f32) -> ScalarMap {
    let data = map
        .data()
        .iter()
        .map(|&v| if v > threshold { 1.0 } else { 0.0 })
        .collect();
    ScalarMap::from_data(map.width(), map.height(), data).expect("same dimensions")
}

/// Support threshold used when binarizing weight maps: opacity sums below
/// this are visually indistinguishable from background.
pub const WEIGHT_SUPPORT_THRESHOLD: f32 = 1e-3;

/// Training-stage candidate map: the silhouette spread by `k1`.
///
/// Rejects silhouettes with values other than 0 or 1 (beyond 1e-6).
pub fn candidate_train(silhouette: &ScalarMap, cfg: &EroConfig) -> Result<ScalarMap> {
    cfg.validate()?;
    ensure_binary(silhouette)?;
    match cfg.mode {
        CandidateMode::Averaging => box_convolve(silhouette, BoxKernelSpec::new(cfg.k1)?),
        CandidateMode::Binary => binary_dilate(silhouette, (cfg.k1 - 1) / 2),
    }
}

/// Inference-stage candidate map: previous weight map plus silhouette,
/// spread by `k2`.
///
/// The caller owns frame routing: frame 1 has no previous weight map and
/// must go through [`candidate_train`] instead.
pub fn candidate_infer(
    weight_prev: &ScalarMap,
    silhouette: &ScalarMap,
    cfg: &EroConfig,
) -> Result<ScalarMap> {
    cfg.validate()?;
    if !weight_prev.same_dimensions(silhouette) {
        return Err(Error::DimensionMismatch(
            weight_prev.width(),
            weight_prev.height(),
            silhouette.width(),
            silhouette.height(),
        ));
    }
    for (i, &v) in weight_prev.data().iter().enumerate() {
        if v.is_nan() {
            return Err(Error::InvalidWeightMap {
                what: "NaN",
                x: i % weight_prev.width(),
                y: i / weight_prev.width(),
            });
        }
        if !(-1e-6..=1.0 + 1e-4).contains(&v) {
            return Err(Error::InvalidWeightMap {
                what: "value outside [0, 1]",
                x: i % weight_prev.width(),
                y: i / weight_prev.width(),
            });
        }
    }
    let combined = map_add(weight_prev, silhouette)?;
    match cfg.mode {
        CandidateMode::Averaging => box_convolve(&combined, BoxKernelSpec::new(cfg.k2)?),
        CandidateMode::Binary => binary_dilate(
            &binarize(&combined, WEIGHT_SUPPORT_THRESHOLD),
            (cfg.k2 - 1) / 2,
        ),
    }
}

/// Rays whose candidate score strictly exceeds `tau`. Pixels that fail are
/// assigned the constant background color downstream.
pub fn threshold_rays(cand: &ScalarMap, tau: f32) -> RaySet {
    let mut set = RaySet::empty(cand.width(), cand.height());
    for (i, &v) in cand.data().iter().enumerate() {
        if v > tau {
            set.insert(i);
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(width: usize, height: usize, cx: f64, cy: f64, r: f64) -> ScalarMap {
        let mut m = ScalarMap::zeros(width, height).unwrap();
        for y in 0..height {
            for x in 0..width {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    m.set(x, y, 1.0);
                }
            }
        }
        m
    }

    #[test]
    fn empty_silhouette_gives_empty_ray_set() {
        let s = ScalarMap::zeros(32, 32).unwrap();
        for mode in [CandidateMode::Averaging, CandidateMode::Binary] {
            let cfg = EroConfig {
                mode,
                k1: 9,
                k2: 5,
                ..EroConfig::default()
            };
            let cand = candidate_train(&s, &cfg).unwrap();
            assert_eq!(cand.count_above(0.0), 0);
            assert_eq!(threshold_rays(&cand, cfg.tau).count(), 0);
        }
    }

    #[test]
    fn full_silhouette_interior_reaches_one() {
        let s = ScalarMap::filled(64, 64, 1.0).unwrap();
        let cfg = EroConfig {
            k1: 9,
            k2: 5,
            ..EroConfig::default()
        };
        let cand = candidate_train(&s, &cfg).unwrap();
        assert!((cand.get(32, 32) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn train_rejects_non_binary_silhouette() {
        let mut s = ScalarMap::zeros(8, 8).unwrap();
        s.set(3, 3, 0.4);
        assert!(matches!(
            candidate_train(&s, &EroConfig::default()),
            Err(Error::NonBinarySilhouette { .. })
        ));
    }

    #[test]
    fn train_center_value_from_kernel_overlap() {
        // 21x21 square of ones centered in 101x101, k1 = 41: the candidate
        // at the square center is 441/1681.
        let mut s = ScalarMap::zeros(101, 101).unwrap();
        for y in 40..61 {
            for x in 40..61 {
                s.set(x, y, 1.0);
            }
        }
        let cand = candidate_train(&s, &EroConfig::default()).unwrap();
        assert!((cand.get(50, 50) as f64 - 441.0 / 1681.0).abs() < 1e-7);
    }

    #[test]
    fn infer_with_zero_weights_reduces_to_silhouette_convolution() {
        let s = disk(48, 48, 24.0, 24.0, 8.0);
        let w = ScalarMap::zeros(48, 48).unwrap();
        let cfg = EroConfig::default();
        let cand = candidate_infer(&w, &s, &cfg).unwrap();
        let direct = box_convolve(&s, BoxKernelSpec::new(cfg.k2).unwrap()).unwrap();
        assert_eq!(cand, direct);
    }

    #[test]
    fn infer_saturated_inputs_pass_threshold() {
        let s = ScalarMap::filled(48, 48, 1.0).unwrap();
        let w = ScalarMap::filled(48, 48, 1.0).unwrap();
        let cand = candidate_infer(&w, &s, &EroConfig::default()).unwrap();
        assert!((cand.get(24, 24) - 2.0).abs() < 1e-6);
        assert!(threshold_rays(&cand, 0.9).contains(24, 24));
    }

    #[test]
    fn infer_rejects_nan_and_dimension_mismatch() {
        let s = ScalarMap::zeros(8, 8).unwrap();
        let mut w = ScalarMap::zeros(8, 8).unwrap();
        w.set(1, 1, f32::NAN);
        assert!(matches!(
            candidate_infer(&w, &s, &EroConfig::default()),
            Err(Error::InvalidWeightMap { .. })
        ));
        let w = ScalarMap::zeros(4, 8).unwrap();
        assert!(matches!(
            candidate_infer(&w, &s, &EroConfig::default()),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn disjoint_blobs_union_support() {
        // A weight blob and a silhouette blob far apart: candidate support
        // must equal the union of the two spreads. Verified against a naive
        // per-pixel window maximum of the combined support.
        let w = disk(64, 64, 16.0, 16.0, 4.0);
        let s = disk(64, 64, 48.0, 48.0, 4.0);
        let cfg = EroConfig {
            mode: CandidateMode::Binary,
            ..EroConfig::default()
        };
        let cand = candidate_infer(&w, &s, &cfg).unwrap();
        let r = (cfg.k2 - 1) as isize / 2;
        let combined = map_add(&w, &s).unwrap();
        for y in 0..64isize {
            for x in 0..64isize {
                let mut any = false;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (xx, yy) = (x + dx, y + dy);
                        if xx >= 0 && xx < 64 && yy >= 0 && yy < 64 {
                            any |= combined.get(xx as usize, yy as usize) > 1e-3;
                        }
                    }
                }
                assert_eq!(
                    cand.get(x as usize, y as usize) > 0.0,
                    any,
                    "pixel ({x},{y})"
                );
            }
        }
    }

    #[test]
    fn threshold_is_strict() {
        let cand = ScalarMap::from_data(2, 2, vec![1.0, 0.5, 0.95, 0.0]).unwrap();
        let rays = threshold_rays(&cand, 0.9);
        assert_eq!(rays.count(), 2);
        assert!(rays.contains(0, 0));
        assert!(rays.contains(0, 1));
        assert!(!rays.contains(1, 0));

        // Everything exactly at tau: excluded.
        let at_tau = ScalarMap::filled(4, 4, 0.9).unwrap();
        assert_eq!(threshold_rays(&at_tau, 0.9).count(), 0);

        // tau = 0 keeps any strictly positive pixel.
        let one_hot = ScalarMap::from_data(2, 1, vec![0.0, 0.25]).unwrap();
        let rays = threshold_rays(&one_hot, 0.0);
        assert_eq!(rays.count(), 1);
        assert!(rays.contains(1, 0));
    }

    #[test]
    fn enlarging_silhouette_never_shrinks_ray_set() {
        let small = disk(64, 64, 32.0, 32.0, 6.0);
        let big = disk(64, 64, 32.0, 32.0, 10.0);
        for mode in [CandidateMode::Averaging, CandidateMode::Binary] {
            let cfg = EroConfig {
                mode,
                k1: 9,
                k2: 5,
                ..EroConfig::default()
            };
            let ra = threshold_rays(&candidate_train(&small, &cfg).unwrap(), cfg.tau);
            let rb = threshold_rays(&candidate_train(&big, &cfg).unwrap(), cfg.tau);
            for i in ra.iter_active() {
                assert!(rb.contains_index(i), "mode {mode:?}, index {i}");
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(EroConfig::default().validate().is_ok());
        assert!(EroConfig {
            k1: 40,
            ..EroConfig::default()
        }
        .validate()
        .is_err());
        assert!(EroConfig {
            k2: 43,
            ..EroConfig::default()
        }
        .validate()
        .is_err());
        assert!(EroConfig {
            tau: 0.0,
            ..EroConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn ray_set_mask_round_trip() {
        let cand = ScalarMap::from_data(3, 2, vec![1.0, 0.0, 0.95, 0.0, 0.91, 0.2]).unwrap();
        let rays = threshold_rays(&cand, 0.9);
        let mask = rays.to_map();
        assert_eq!(mask.data(), &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(rays.count(), 3);
        assert_eq!(rays.iter_active().collect::<Vec<_>>(), vec![0, 2, 4]);
    }
}
