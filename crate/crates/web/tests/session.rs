use gim_web::{fixture_names, Session};

#[test]
fn every_fixture_encodes() {
    let names = fixture_names();
    assert!(names.contains(&"cube".to_string()));
    for n in &names {
        let s = Session::fixture(n, 64, true).unwrap_or_else(|e| panic!("{n}: {e}"));
        assert_eq!(s.resolution(), 64);
        assert!(s.valid_pixels() > 0);
    }
    assert!(Session::fixture("teapot", 64, true).is_err());
}

#[test]
fn rasters_are_rgba_and_agree_on_the_mask() {
    let s = Session::fixture("cube", 64, false).unwrap();
    let (p, a, c) = (s.position_rgba(), s.albedo_rgba(), s.chart_rgba());
    assert_eq!(p.len(), 64 * 64 * 4);
    assert_eq!(a.len(), p.len());
    assert_eq!(c.len(), p.len());
    let opaque_bg = |v: &[u8]| v.chunks(4).filter(|px| px == &[24, 24, 28, 255]).count();
    assert_eq!(opaque_bg(&p), 64 * 64 - s.valid_pixels());
    assert_eq!(opaque_bg(&c), opaque_bg(&p));
}

#[test]
fn four_rotations_restore_the_atlas() {
    let mut s = Session::fixture("figure", 64, true).unwrap();
    let before = (s.position_rgba(), s.chart_rgba(), s.albedo_rgba());
    s.rotate(1);
    assert_eq!(s.quarter_turns(), 1);
    assert_ne!(s.position_rgba(), before.0);
    s.rotate(3);
    assert_eq!(s.quarter_turns(), 0);
    assert_eq!((s.position_rgba(), s.chart_rgba(), s.albedo_rgba()), before);
}

#[test]
fn rotation_keeps_the_decoded_vertices() {
    let sorted = |s: &Session| {
        let mut v: Vec<[u32; 3]> = s.mesh_positions().chunks(3).map(|p| [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()]).collect();
        v.sort_unstable();
        v
    };
    let within = |s: &Session| {
        let r: serde_json::Value = serde_json::from_str(&s.report(4000).unwrap()).unwrap();
        r["chamfer_p95"].as_f64().unwrap() <= r["tolerance"].as_f64().unwrap()
    };
    let mut s = Session::fixture("sphere", 96, true).unwrap();
    let before = sorted(&s);
    assert!(within(&s));
    s.rotate(2);
    assert_eq!(sorted(&s), before);
    assert!(within(&s));
}

#[test]
fn mesh_buffers_are_consistent() {
    let s = Session::fixture("torus", 64, true).unwrap();
    let pos = s.mesh_positions();
    let tris = s.mesh_triangles();
    assert_eq!(pos.len() % 3, 0);
    assert_eq!(tris.len() % 3, 0);
    let n = (pos.len() / 3) as u32;
    assert!(tris.iter().all(|&i| i < n));
    assert!(pos.iter().all(|c| c.abs() <= 1.0 + 1e-5));
}

#[test]
fn obj_text_encodes() {
    let s = Session::obj(&gim_core::fixtures::unit_cube_obj(), 64, false).unwrap();
    assert_eq!(s.chart_count(), 6);
    assert_eq!(s.encoding(), "cartesian");
    assert!(Session::obj("v 0 0 0\nf 1 2 3\n", 64, false).is_err());
}
