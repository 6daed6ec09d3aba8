use std::f64::consts::PI;

use graftopt::geometry::{DesignVector, LayoutPreset, LayoutSpec, SegmentSource, Side};
use graftopt::mesh::{generate, MeshParams, SymmetryMode};

#[test]
fn verification_block_meshes_cleanly() {
    let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [2, 2]);
    let design = DesignVector::new(vec![0.1, 0.7, 1.9, 2.8]);
    let params = MeshParams::with_target_h(0.05);
    let t = std::time::Instant::now();
    let mesh = generate(&layout, &design, &params).unwrap();
    eprintln!(
        "{} vertices, {} triangles, min angle {:.1}, {:?}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.min_angle_deg(),
        t.elapsed()
    );
    assert!(mesh.min_angle_deg() > 15.0);
    for i in 0..4 {
        assert!(mesh.cut_edges(i).count() > 16);
    }
    let hole_area: f64 = 4.0 * PI * layout.semi_major * layout.semi_minor;
    assert!((mesh.area() - (1.0 - hole_area)).abs() < 2e-3 * hole_area);
}

#[test]
fn standard_layout_meshes_with_merged_cuts() {
    let layout = LayoutSpec::standard();
    let design = DesignVector::new((0..16).map(|k| 0.37 * k as f64).collect::<Vec<_>>());
    let t = std::time::Instant::now();
    let mesh = generate(&layout, &design, &MeshParams::with_target_h(0.02)).unwrap();
    eprintln!(
        "standard: {} vertices, {} triangles, min angle {:.1}, {:?}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.min_angle_deg(),
        t.elapsed()
    );
    assert!(mesh.num_triangles() > 1000);
}

#[test]
fn mirrored_mesh_is_exactly_symmetric() {
    let layout = LayoutSpec::from_preset(LayoutPreset::Verification, [1, 1], [1, 1]);
    let params = MeshParams {
        symmetry: SymmetryMode::Prefer,
        ..MeshParams::with_target_h(0.05)
    };
    let mesh = generate(&layout, &DesignVector::zeros(1), &params).unwrap();
    assert!(mesh.mirrored);
    let mut pts: Vec<(u64, u64)> = mesh.vertices.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect();
    pts.sort_unstable();
    for p in &mesh.vertices {
        let q = [1.0 - p[0], p[1]];
        assert!(pts.binary_search(&(q[0].to_bits(), q[1].to_bits())).is_ok(), "{p:?}");
    }
    assert!(mesh.boundary.iter().all(|e| e.source != SegmentSource::Symmetry));
    let left = mesh.boundary.iter().filter(|e| e.source == SegmentSource::Side(Side::Left)).count();
    let right = mesh.boundary.iter().filter(|e| e.source == SegmentSource::Side(Side::Right)).count();
    assert_eq!(left, right);
    assert!(mesh.cut_edges(0).count() > 16);
}
