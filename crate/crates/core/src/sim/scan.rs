use alloc::format;
use alloc::vec::Vec;

// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{arg_err, Error, Result};
use crate::geometry::ScanGeometry;
use crate::image::ComplexImage;

/// `π(3 − √5)`, about 2.39996 rad.
pub const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

fn center_distance(shape: (usize, usize), window: (usize, usize), (r, c): (usize, usize)) -> f64 {
    let dy = r as f64 + window.0 as f64 / 2.0 - shape.0 as f64 / 2.0;
    let dx = c as f64 + window.1 as f64 / 2.0 - shape.1 as f64 / 2.0;
    dy.hypot(dx)
}

/// Reorders scans by the distance of their window center from the object
/// center (stable, nearest first).
pub fn sorted_by_center_distance(geom: &ScanGeometry) -> Result<ScanGeometry> {
    let mut order: Vec<usize> = (0..geom.n_scans()).collect();
    let d: Vec<f64> = geom
        .offsets()
        .iter()
        .map(|&o| center_distance(geom.object_shape(), geom.window(), o))
        .collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    geom.reordered(&order)
}

/// Fermat-spiral scan: window center `k` sits at radius `radius_scale·√k`
/// and angle `k·γ` around the object center, `k = 0..n_scans`, so a single
/// scan is centered. Offsets are rounded to whole pixels and sorted by
/// distance from the center.
pub fn fermat_spiral(
    object_shape: (usize, usize),
    window: (usize, usize),
    n_scans: usize,
    radius_scale: f64,
) -> Result<ScanGeometry> {
    spiral(object_shape, window, n_scans, radius_scale, false)
}

/// Like [`fermat_spiral`], but windows that would leave the object are moved
/// to the nearest position inside it, so the outer turns pile up along the
/// object border and the illuminated area can reach the corners.
pub fn fermat_spiral_clamped(
    object_shape: (usize, usize),
    window: (usize, usize),
    n_scans: usize,
    radius_scale: f64,
) -> Result<ScanGeometry> {
    spiral(object_shape, window, n_scans, radius_scale, true)
}

fn spiral(
    object_shape: (usize, usize),
    window: (usize, usize),
    n_scans: usize,
    radius_scale: f64,
    clamp: bool,
) -> Result<ScanGeometry> {
    if n_scans == 0 {
        return Err(arg_err!("a spiral needs at least one scan"));
    }
    if !(radius_scale >= 0.0) || !radius_scale.is_finite() {
        return Err(arg_err!(
            "radius scale must be finite and non-negative, got {radius_scale}"
        ));
    }
    if window.0 > object_shape.0 || window.1 > object_shape.1 {
        return Err(arg_err!(
            "window {window:?} is larger than the object {object_shape:?}"
        ));
    }
    let (cy, cx) = (object_shape.0 as f64 / 2.0, object_shape.1 as f64 / 2.0);
    let max_top = (object_shape.0 - window.0) as f64;
    let max_left = (object_shape.1 - window.1) as f64;
    let mut offsets = Vec::with_capacity(n_scans);
    for k in 0..n_scans {
        let r = radius_scale * (k as f64).sqrt();
        let theta = k as f64 * GOLDEN_ANGLE;
        let mut top = (cy + r * theta.sin() - window.0 as f64 / 2.0).round();
        let mut left = (cx + r * theta.cos() - window.1 as f64 / 2.0).round();
        if clamp {
            top = top.clamp(0.0, max_top);
            left = left.clamp(0.0, max_left);
        }
        if top < 0.0 || left < 0.0 || top > max_top || left > max_left {
            return Err(Error::Geometry {
                scan: k,
                reason: format!(
                    "spiral window at ({top}, {left}) leaves the {}x{} object",
                    object_shape.0, object_shape.1
                ),
            });
        }
        offsets.push((top as usize, left as usize));
    }
    sorted_by_center_distance(&ScanGeometry::new(object_shape, window, offsets)?)
}

/// Largest radius scale for which every spiral window still fits.
fn max_radius_scale(object_shape: (usize, usize), window: (usize, usize), n_scans: usize) -> f64 {
    if n_scans <= 1 {
        return 0.0;
    }
    let reach = (object_shape.0.min(object_shape.1) as f64) / 2.0 * core::f64::consts::SQRT_2;
    let (mut lo, mut hi) = (0.0, reach / ((n_scans - 1) as f64).sqrt() + 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fermat_spiral(object_shape, window, n_scans, mid).is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Finds a radius scale giving sampling ratio within `tol` of `target_alpha`
/// for a fixed number of scans, by bisection between a tight cluster (high
/// ratio) and the widest spiral that fits (low ratio).
pub fn fermat_spiral_tuned(
    object_shape: (usize, usize),
    window: (usize, usize),
    n_scans: usize,
    target_alpha: f64,
    tol: f64,
) -> Result<(ScanGeometry, f64)> {
    let hi_scale = max_radius_scale(object_shape, window, n_scans);
    tune(
        |sc| fermat_spiral(object_shape, window, n_scans, sc),
        hi_scale,
        n_scans,
        target_alpha,
        tol,
    )
}

/// [`fermat_spiral_tuned`] for [`fermat_spiral_clamped`]. The bisection runs
/// up to the radius scale of largest coverage, found on a coarse grid
/// between the widest fitting spiral and one reaching the object corners.
pub fn fermat_spiral_clamped_tuned(
    object_shape: (usize, usize),
    window: (usize, usize),
    n_scans: usize,
    target_alpha: f64,
    tol: f64,
) -> Result<(ScanGeometry, f64)> {
    let start = max_radius_scale(object_shape, window, n_scans);
    let corner = (object_shape.0 as f64).hypot(object_shape.1 as f64) / 2.0;
    let end = (corner / ((n_scans.max(2) - 1) as f64).sqrt()).max(start);
    let mut hi_scale = start;
    let mut most = 0;
    for i in 0..=64 {
        let sc = start + (end - start) * i as f64 / 64.0;
        let covered = fermat_spiral_clamped(object_shape, window, n_scans, sc)?.covered_pixels();
        if covered > most {
            (most, hi_scale) = (covered, sc);
        }
    }
    tune(
        |sc| fermat_spiral_clamped(object_shape, window, n_scans, sc),
        hi_scale,
        n_scans,
        target_alpha,
        tol,
    )
}

/// Bisects the radius scale in `[0, hi_scale]` for a sampling ratio within
/// `tol` of `target_alpha`, assuming the ratio falls as the scale grows.
fn tune(
    make: impl Fn(f64) -> Result<ScanGeometry>,
    hi_scale: f64,
    n_scans: usize,
    target_alpha: f64,
    tol: f64,
) -> Result<(ScanGeometry, f64)> {
    let alpha_at = |s: f64| -> Result<(ScanGeometry, f64)> {
        let g = make(s)?;
        let a = sampling_ratio(&g)?;
        Ok((g, a))
    };
    let (g_wide, a_wide) = alpha_at(hi_scale)?;
    if (a_wide - target_alpha).abs() <= tol {
        return Ok((g_wide, hi_scale));
    }
    if a_wide > target_alpha {
        return Err(arg_err!(
            "{n_scans} scans cannot reach sampling ratio {target_alpha}: minimum is {a_wide:.3}"
        ));
    }
    let (mut lo, mut hi) = (0.0, hi_scale);
    let mut best: Option<(ScanGeometry, f64, f64)> = None;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (g, a) = alpha_at(mid)?;
        let err = (a - target_alpha).abs();
        if best
            .as_ref()
            .is_none_or(|b| err < (b.2 - target_alpha).abs())
        {
            best = Some((g, mid, a));
        }
        if err <= tol / 4.0 {
            break;
        }
        if a > target_alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    match best {
        Some((g, s, a)) if (a - target_alpha).abs() <= tol => Ok((g, s)),
        Some((_, _, a)) => Err(arg_err!(
            "closest reachable sampling ratio is {a:.3}, wanted {target_alpha}"
        )),
        None => Err(arg_err!("sampling ratio search failed")),
    }
}

/// Picks the number of scans and radius scale for a target sampling ratio:
/// the largest scan count whose widest fitting spiral stays at or below the
/// target, then tightened by [`fermat_spiral_tuned`].
pub fn fermat_spiral_for_alpha(
    object_shape: (usize, usize),
    window: (usize, usize),
    target_alpha: f64,
    tol: f64,
) -> Result<(ScanGeometry, f64)> {
    if !(target_alpha >= 1.0) {
        return Err(arg_err!(
            "sampling ratio must be at least 1, got {target_alpha}"
        ));
    }
    let widest = |n: usize| -> Result<f64> {
        sampling_ratio(&fermat_spiral(
            object_shape,
            window,
            n,
            max_radius_scale(object_shape, window, n),
        )?)
    };
    let mut n = 1;
    while widest(n + 1)? <= target_alpha + tol {
        n += 1;
        if n > 100_000 {
            return Err(arg_err!(
                "sampling ratio {target_alpha} needs too many scans"
            ));
        }
    }
    // Neighbouring counts help when rounding makes one count miss the band.
    let mut last_err = None;
    for cand in [n, n + 1, n.saturating_sub(1).max(1)] {
        match fermat_spiral_tuned(object_shape, window, cand, target_alpha, tol) {
            Ok(found) => return Ok(found),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one candidate"))
}

/// Regular grid of `rows × cols` windows spaced by `step`, centered in the
/// object, with independent uniform integer deviations in
/// `[−max_dev, max_dev]` per axis. Row-major order.
pub fn raster_jitter(
    object_shape: (usize, usize),
    window: (usize, usize),
    step: usize,
    grid: (usize, usize),
    max_dev: usize,
    seed: u64,
) -> Result<ScanGeometry> {
    if grid.0 == 0 || grid.1 == 0 {
        return Err(arg_err!("raster grid must be non-empty"));
    }
    let span = |n: usize, m: usize| (n - 1) * step + m;
    let (span_r, span_c) = (span(grid.0, window.0), span(grid.1, window.1));
    if span_r > object_shape.0 || span_c > object_shape.1 {
        return Err(arg_err!(
            "raster {}x{} at step {step} spans {span_r}x{span_c}, larger than the {}x{} object",
            grid.0,
            grid.1,
            object_shape.0,
            object_shape.1
        ));
    }
    let base = ((object_shape.0 - span_r) / 2, (object_shape.1 - span_c) / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dev = max_dev as i64;
    let mut offsets = Vec::with_capacity(grid.0 * grid.1);
    for i in 0..grid.0 {
        for k in 0..grid.1 {
            let (dr, dc) = if dev > 0 {
                (rng.random_range(-dev..=dev), rng.random_range(-dev..=dev))
            } else {
                (0, 0)
            };
            let r = (base.0 + i * step) as i64 + dr;
            let c = (base.1 + k * step) as i64 + dc;
            let j = offsets.len();
            if r < 0 || c < 0 {
                return Err(Error::Geometry {
                    scan: j,
                    reason: format!("jittered window at ({r}, {c}) leaves the object"),
                });
            }
            offsets.push((r as usize, c as usize));
        }
    }
    ScanGeometry::new(object_shape, window, offsets)
}

/// `α = J·M / (object pixels covered by at least one window)`.
pub fn sampling_ratio(geom: &ScanGeometry) -> Result<f64> {
    let covered = geom.covered_pixels();
    if covered == 0 {
        return Err(arg_err!("geometry covers no pixels"));
    }
    Ok((geom.n_scans() * geom.window_len()) as f64 / covered as f64)
}

/// Diameter of the probe: the larger bounding-box extent of the pixels whose
/// intensity exceeds 10% of the maximum.
pub(crate) fn probe_diameter(probe: &ComplexImage) -> Result<usize> {
    let inten = probe.abs_sqr();
    let peak = inten.max();
    if !(peak > 0.0) {
        return Err(arg_err!("probe is identically zero"));
    }
    let thr = 0.1 * peak;
    let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
    for r in 0..inten.height() {
        for c in 0..inten.width() {
            if inten[(r, c)] > thr {
                r0 = r0.min(r);
                r1 = r1.max(r);
                c0 = c0.min(c);
                c1 = c1.max(c);
            }
        }
    }
    Ok((r1 - r0 + 1).max(c1 - c0 + 1))
}

/// Overlap ratio `R = 1 − step/d`, with `d` the probe's 10%-intensity diameter.
pub fn overlap_ratio(probe: &ComplexImage, step: usize) -> Result<f64> {
    Ok(1.0 - step as f64 / probe_diameter(probe)? as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::disk_probe;
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn golden_angle_value() {
        assert!((GOLDEN_ANGLE - PI * (3.0 - 5f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn single_scan_is_centered() {
        let g = fermat_spiral((128, 128), (32, 32), 1, 5.0).unwrap();
        assert_eq!(g.offsets(), &[(48, 48)]);
        let g = fermat_spiral((65, 40), (16, 8), 1, 5.0).unwrap();
        assert_eq!(g.offsets(), &[(25, 16)]);
    }

    #[test]
    fn spiral_sorted_by_distance() {
        let g = fermat_spiral((256, 256), (32, 32), 60, 12.0).unwrap();
        let d: Vec<f64> = g
            .offsets()
            .iter()
            .map(|&o| center_distance((256, 256), (32, 32), o))
            .collect();
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn spiral_out_of_bounds_names_scan() {
        match fermat_spiral((64, 64), (32, 32), 20, 10.0) {
            Err(Error::Geometry { scan, .. }) => assert!(scan > 0),
            other => panic!("expected geometry error, got {other:?}"),
        }
    }

    #[test]
    fn sampling_ratio_basics() {
        let one = ScanGeometry::new((16, 16), (4, 4), vec![(3, 3)]).unwrap();
        assert_eq!(sampling_ratio(&one).unwrap(), 1.0);
        let two = ScanGeometry::new((16, 16), (4, 4), vec![(0, 0), (8, 8)]).unwrap();
        assert_eq!(sampling_ratio(&two).unwrap(), 1.0);
        let overlap = ScanGeometry::new((16, 16), (4, 4), vec![(0, 0), (0, 2)]).unwrap();
        assert_eq!(sampling_ratio(&overlap).unwrap(), 32.0 / 24.0);
    }

    #[test]
    fn sampling_ratio_ignores_order() {
        let g = fermat_spiral((128, 128), (32, 32), 25, 9.0).unwrap();
        let mut order: Vec<usize> = (0..25).rev().collect();
        order.swap(3, 17);
        assert_eq!(
            sampling_ratio(&g).unwrap(),
            sampling_ratio(&g.reordered(&order).unwrap()).unwrap()
        );
    }

    #[test]
    fn tuned_spiral_hits_target() {
        let (g, _) = fermat_spiral_tuned((128, 128), (32, 32), 30, 3.0, 0.02).unwrap();
        assert!((sampling_ratio(&g).unwrap() - 3.0).abs() <= 0.02);
        let (g, _) = fermat_spiral_for_alpha((128, 128), (32, 32), 2.4, 0.02).unwrap();
        assert!((sampling_ratio(&g).unwrap() - 2.4).abs() <= 0.02);
    }

    #[test]
    fn raster_grid_and_jitter() {
        let g = raster_jitter((64, 64), (16, 16), 12, (3, 3), 0, 1).unwrap();
        // Span 2*12+16 = 40 → base 12.
        assert_eq!(g.offsets()[0], (12, 12));
        assert_eq!(g.offsets()[4], (24, 24));
        let j = raster_jitter((64, 64), (16, 16), 12, (3, 3), 2, 7).unwrap();
        for (a, b) in g.offsets().iter().zip(j.offsets()) {
            assert!((a.0 as i64 - b.0 as i64).abs() <= 2 && (a.1 as i64 - b.1 as i64).abs() <= 2);
        }
        assert_eq!(
            j,
            raster_jitter((64, 64), (16, 16), 12, (3, 3), 2, 7).unwrap()
        );
        assert!(raster_jitter((40, 40), (16, 16), 12, (3, 3), 2, 7).is_err());
    }

    #[test]
    fn overlap_ratio_for_disk() {
        let p = disk_probe((32, 32), 30.0);
        assert_eq!(probe_diameter(&p).unwrap(), 30);
        assert!((overlap_ratio(&p, 12).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(overlap_ratio(&p, 30).unwrap(), 0.0);
        assert_eq!(overlap_ratio(&p, 15).unwrap(), 0.5);
        assert!(overlap_ratio(&ComplexImage::zeros(4, 4), 1).is_err());
    }
}
