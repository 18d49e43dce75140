mod common;

use common::*;
use graspfit::geometry::{RigidMotion, SpatialIndex, SurfaceCloud, Vec3};
use graspfit::isf::{run_isf, write_trace_csv, AbandonCause, IsfConfig, IsfError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn ground_truth_is_a_fixed_point() {
    let g = gripper();
    let index = SpatialIndex::new(cylinder_through_contacts(&g));
    let r = run_isf(&ground_truth(), g.home_width(), &index, &g, &IsfConfig::default()).unwrap();
    assert!(r.level_iterations[0] <= 2, "{:?}", r.level_iterations);
    assert!(r.converged);
    let rel = r.motion.compose(&ground_truth().inverse());
    assert!(rel.translation.norm() < 1e-6);
    assert!(rel.rotation.log_map().norm() < 1e-6);
    assert!((r.width - g.home_width()).abs() < 1e-6);
}

#[test]
fn large_misalignment_fits_to_a_millimeter() {
    let g = gripper();
    let index = SpatialIndex::new(cylinder_cloud());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let start = misaligned_start(&mut rng, &g, 0.01, 0.3);
        assert!((rms_displacement(&g, &start, &ground_truth()) - 0.01).abs() < 1e-12);
        let r = run_isf(&start, g.home_width(), &index, &g, &IsfConfig::default()).unwrap();
        let d = rms_surface_distance(&g, &r.motion, r.width);
        assert!(d <= 1e-3, "final RMS surface distance {d}");
    }
}

#[test]
fn far_start_is_abandoned() {
    let g = gripper();
    let index = SpatialIndex::new(cylinder_cloud());
    let far = RigidMotion::from_translation(Vec3::new(10.0, 0.0, 0.0)).compose(&ground_truth());
    // The median-scaled threshold keeps the closest half of the pairs; here
    // they collapse onto a few shared targets and the palm solve degenerates.
    let r = run_isf(&far, g.home_width(), &index, &g, &IsfConfig::default());
    assert!(matches!(r, Err(IsfError::SampleAbandoned { .. })), "{r:?}");
    // With a fixed 5 mm threshold every pair is an outlier.
    let mut cfg = IsfConfig::default();
    cfg.filter.median_factor = 0.0;
    match run_isf(&far, g.home_width(), &index, &g, &cfg) {
        Err(IsfError::SampleAbandoned {
            cause: AbandonCause::Correspondence(_),
            level,
            iteration,
        }) => {
            assert_eq!((level, iteration), (3, 1))
        }
        other => panic!("expected abandonment on filtering, got {other:?}"),
    }
}

#[test]
fn trace_and_width_invariants() {
    let g = gripper();
    let index = SpatialIndex::new(cylinder_cloud());
    let cfg = IsfConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let start = misaligned_start(&mut rng, &g, 0.008, 0.5);
        let r = run_isf(&start, 0.027, &index, &g, &cfg).unwrap();
        assert!(!r.trace.is_empty());
        assert_eq!(r.trace.last().unwrap().error, r.fitting_error);
        assert!(g.limits().contains(r.width));
        let mut width = 0.027;
        for e in &r.trace {
            width += e.width_change;
            assert!(g.limits().contains(width));
        }
        assert_eq!(width, r.width);
        for (level, &it) in r.level_iterations.iter().enumerate() {
            assert!(it >= 1 && it <= cfg.max_iterations(level));
            assert_eq!(r.trace.iter().filter(|e| e.level == level).count(), it);
        }
        assert_eq!(
            r.trace.iter().map(|e| e.iteration).collect::<Vec<_>>(),
            (1..=r.trace.len()).collect::<Vec<_>>()
        );
        let mut csv = Vec::new();
        write_trace_csv(&r.trace, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), r.trace.len() + 1);
    }
}

#[test]
fn identical_inputs_give_identical_results() {
    let g = gripper();
    let index = SpatialIndex::new(cylinder_cloud());
    let start = misaligned_start(&mut ChaCha8Rng::seed_from_u64(13), &g, 0.01, 0.3);
    let a = run_isf(&start, 0.02, &index, &g, &IsfConfig::default()).unwrap();
    let b = run_isf(&start, 0.02, &index, &g, &IsfConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pyramid_levels_nest() {
    let g = gripper();
    let n = g.contact_cloud().len();
    for level in 0..3 {
        let fine = SurfaceCloud::stride_indices(n, 1 << level);
        let coarse = SurfaceCloud::stride_indices(n, 1 << (level + 1));
        assert!(coarse.iter().all(|i| fine.contains(i)));
    }
}

#[test]
fn rejects_start_width_outside_limits() {
    let g = gripper();
    let index = SpatialIndex::new(cylinder_cloud());
    let r = run_isf(&ground_truth(), 0.031, &index, &g, &IsfConfig::default());
    assert!(matches!(r, Err(IsfError::InvalidInput(_))));
}
