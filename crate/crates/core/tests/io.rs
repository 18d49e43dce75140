mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::*;
use graspfit::fixtures::{blob_scene, parallel_jaw_gripper, sphere};
use graspfit::geometry::{Finger, Vec3};
use graspfit::io::{
    export_posed_gripper, load_gripper, load_object, read_ply, read_result, save_cloud, save_gripper, write_result,
    IoError, ResultFile,
};
use graspfit::planner::{boxes_collide, plan, PlannerConfig};

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/grippers/parallel_jaw/gripper.json")
}

/// Copies the bundled model into `dir` with `edit` applied to its JSON.
fn edited_copy(dir: &Path, edit: impl Fn(&mut serde_json::Value)) -> PathBuf {
    let src = bundled();
    for f in ["finger1.ply", "finger2.ply"] {
        fs::copy(src.with_file_name(f), dir.join(f)).unwrap();
    }
    let mut json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&src).unwrap()).unwrap();
    edit(&mut json);
    let path = dir.join("gripper.json");
    fs::write(&path, serde_json::to_string_pretty(&json).unwrap()).unwrap();
    path
}

#[test]
fn bundled_gripper_loads() {
    let g = load_gripper(&bundled()).unwrap();
    assert_eq!((g.limits().min, g.limits().max), (0.01, 0.03));
    assert_eq!(g.home_width(), 0.02);
    assert_eq!(g, parallel_jaw_gripper());
}

#[test]
fn bundled_gripper_matches_writer() {
    let dir = tempfile::tempdir().unwrap();
    let path = save_gripper(dir.path(), &parallel_jaw_gripper(), "1.0").unwrap();
    for f in ["gripper.json", "finger1.ply", "finger2.ply"] {
        assert_eq!(
            fs::read_to_string(path.with_file_name(f)).unwrap(),
            fs::read_to_string(bundled().with_file_name(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn inverted_limits_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_copy(dir.path(), |j| {
        j["width"]["min"] = 0.04.into();
    });
    assert!(matches!(load_gripper(&path), Err(IoError::Validation { .. })));
}

#[test]
fn missing_patch_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_copy(dir.path(), |j| {
        j["patches"]["second"] = "nowhere.ply".into();
    });
    match load_gripper(&path) {
        Err(e @ IoError::Parse { .. }) => {
            let msg = e.to_string();
            assert!(msg.contains("nowhere.ply") && msg.contains("patches.second"), "{msg}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn malformed_model_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_copy(dir.path(), |j| {
        j["opening_axis"] = "x".into();
    });
    match load_gripper(&path) {
        Err(IoError::Parse { line, field, .. }) => {
            assert!(line.is_some());
            assert_eq!(field.as_deref(), Some("opening_axis"));
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn outward_convention_flips_normals() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_copy(dir.path(), |j| {
        j["normals"] = "outward".into();
    });
    let g = load_gripper(&path).unwrap();
    let reference = parallel_jaw_gripper();
    for f in [Finger::First, Finger::Second] {
        for (a, b) in g.patch(f).normals().iter().zip(reference.patch(f).normals()) {
            assert_eq!(a.into_inner(), -b.into_inner());
        }
    }
}

#[test]
fn objects_without_normals_get_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let s = sphere(0.02, 1500);
    let ply = dir.path().join("s.ply");
    let mut text = String::from("ply\nformat ascii 1.0\nelement vertex 1500\nproperty float x\nproperty float y\nproperty float z\nend_header\n");
    let mut obj = String::new();
    for p in s.points() {
        text += &format!("{} {} {}\n", p.x, p.y, p.z);
        obj += &format!("v {} {} {}\n", p.x, p.y, p.z);
    }
    fs::write(&ply, text).unwrap();
    fs::write(dir.path().join("s.obj"), obj).unwrap();
    for path in [ply, dir.path().join("s.obj")] {
        let c = load_object(&path).unwrap();
        for (p, n) in c.points().iter().zip(c.normals()) {
            assert!(n.dot(&p.normalize()).abs() > 0.99);
        }
    }
}

#[test]
fn saved_cloud_loads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let c = blob_scene(2, 300);
    let path = dir.path().join("b.ply");
    save_cloud(&path, &c).unwrap();
    assert_eq!(load_object(&path).unwrap(), c);
    assert!(matches!(
        load_object(&dir.path().join("b.xyz")),
        Err(IoError::Io { .. }) | Err(IoError::Parse { .. })
    ));
}

#[test]
fn exported_poses_reproduce_collision_flags() {
    let dir = tempfile::tempdir().unwrap();
    let g = parallel_jaw_gripper();
    let object = blob_scene(3, 700);
    let cfg = PlannerConfig {
        samples: 24,
        ..PlannerConfig::default()
    };
    let report = plan(&object, &g, &cfg, 21).unwrap();
    let flags: Vec<bool> = report.candidates().iter().map(|c| c.collision_free).collect();
    assert!(flags.contains(&true) && flags.contains(&false));
    for (i, c) in report.candidates().iter().enumerate() {
        let path = dir.path().join(format!("pose_{i}.ply"));
        export_posed_gripper(&path, &g, &c.motion, c.width).unwrap();
        let data = read_ply(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(data.boxes.len(), g.boxes().len());
        assert_eq!(data.points.len(), g.contact_cloud().len());
        assert_eq!(!boxes_collide(&data.boxes, &object, cfg.penetration), c.collision_free);
    }
}

#[test]
fn result_file_round_trips_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let g = gripper();
    let cfg = PlannerConfig {
        samples: 8,
        ..PlannerConfig::default()
    };
    let report = plan(&cylinder_cloud(), &g, &cfg, 3).unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    write_result(&a, &ResultFile::from_report(&report, &cfg, 3, true, true)).unwrap();
    let back = read_result(&a).unwrap();
    write_result(&b, &back).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(back.candidates.len(), 8);
    let first = &report.candidates()[0];
    let m = back.candidates[0].motion();
    assert!((m.translation - first.motion.translation).norm() == 0.0);
    assert!(m.rotation.angle_to(&first.motion.rotation) < 1e-12);
    let r = back.candidates[0].rotation_matrix.unwrap();
    assert_eq!(Vec3::from(r[0]), first.motion.rotation.matrix().row(0).transpose());
}
