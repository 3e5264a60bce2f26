//! Projection baselines: fixed points, untouched pixels, single-scan behaviour.

mod common;

use common::{random_complex, rng};
use ptycho_core::baselines::{run, Algorithm, BaselineConfig};
use ptycho_core::sim::disk_probe;
use ptycho_core::{ComplexImage, Dft2d, ScanGeometry, Serial, C64};

const ALL: [Algorithm; 4] = [
    Algorithm::Pie,
    Algorithm::EPie,
    Algorithm::RPie,
    Algorithm::DifferenceMap,
];

fn probe(seed: u64) -> ComplexImage {
    let mut r = rng(seed);
    ComplexImage::from_vec(8, 8, random_complex(&mut r, 64, 2.0)).unwrap()
}

#[test]
fn truth_is_a_fixed_point_on_noiseless_data() {
    let geom = ScanGeometry::new(
        (16, 16),
        (8, 8),
        vec![(0, 0), (0, 8), (4, 4), (8, 0), (8, 8)],
    )
    .unwrap();
    let data = common::dataset(geom, probe(1), f64::INFINITY, 1);
    let prop = Dft2d::new((8, 8)).unwrap();
    let truth = data.truth().unwrap().clone();
    for alg in ALL {
        for update_probe in [false, true] {
            let mut cfg = BaselineConfig::new(alg);
            cfg.iterations = 1;
            cfg.update_probe = update_probe;
            cfg.object_init = Some(truth.clone());
            let res = run(&data, &cfg, &prop, &Serial).unwrap();
            let err = common::rel_err(res.object.as_slice(), truth.as_slice());
            assert!(err < 1e-12, "{alg:?}: moved by {err:e}");
            let perr = common::rel_err(res.probe.as_slice(), data.probe().unwrap().as_slice());
            assert!(perr < 1e-12, "{alg:?}: probe moved by {perr:e}");
        }
    }
}

#[test]
fn never_illuminated_pixels_keep_their_start_values() {
    // Scans cover only the top-left 12×12 block of a 20×20 object.
    let geom = ScanGeometry::new((20, 20), (8, 8), vec![(0, 0), (0, 4), (4, 0), (4, 4)]).unwrap();
    let data = common::dataset(geom.clone(), probe(2), 20.0, 2);
    let prop = Dft2d::new((8, 8)).unwrap();
    let mut r = rng(3);
    let start = ComplexImage::from_vec(20, 20, random_complex(&mut r, 400, 1.0)).unwrap();
    let covered = geom.coverage();
    for alg in ALL {
        let mut cfg = BaselineConfig::new(alg);
        cfg.iterations = 10;
        cfg.update_probe = true;
        cfg.object_init = Some(start.clone());
        let res = run(&data, &cfg, &prop, &Serial).unwrap();
        for (k, &c) in covered.iter().enumerate() {
            if c == 0 {
                assert_eq!(
                    res.object.as_slice()[k],
                    start.as_slice()[k],
                    "{alg:?} pixel {k}"
                );
            }
        }
    }
}

#[test]
fn single_scan_difference_map_behaves_like_error_reduction() {
    let geom = ScanGeometry::new((32, 32), (16, 16), vec![(8, 8)]).unwrap();
    let mut p = disk_probe((16, 16), 11.0);
    p.scale(C64::new(10.0, 0.0));
    let data = common::dataset(geom, p, f64::INFINITY, 4);
    let prop = Dft2d::new((16, 16)).unwrap();
    let mut cfg = BaselineConfig::new(Algorithm::DifferenceMap);
    cfg.iterations = 50;
    let res = run(&data, &cfg, &prop, &Serial).unwrap();
    let fits: Vec<f64> = res.trace.iter().map(|r| r.fitness).collect();
    assert_eq!(fits.len(), 50);
    assert!(fits.iter().all(|f| f.is_finite()));
    // With β = 1 the iteration is of Douglas-Rachford type and oscillates
    // once near the solution, so the trend is judged by the fitted slope of
    // log-fitness and by the level the oscillations stay under.
    let n = fits.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = fits.iter().map(|f| f.ln()).sum::<f64>() / n;
    let slope: f64 = fits
        .iter()
        .enumerate()
        .map(|(i, f)| (i as f64 - xm) * (f.ln() - ym))
        .sum::<f64>();
    assert!(slope < 0.0, "{fits:?}");
    let late = fits[10..].iter().copied().fold(0.0, f64::max);
    assert!(late < 0.05 * fits[0], "{fits:?}");
}
