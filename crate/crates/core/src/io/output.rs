//! On-disk formats: convergence trace, design snapshots and legacy VTK fields.

use std::fmt::Write as _;
use std::path::Path;

use crate::elasticity::{det_i_plus, stress_eval, Deviator, ElasticSystem};
use crate::error::{Error, Result};
use crate::geometry::{DesignVector, LayoutSpec};
use crate::mesh::Mesh;

pub const CONVERGENCE_HEADER: &str = "iter,objective,grad_norm,step,pop_size,wall_ms";

/// One line of `convergence.csv`. GA rows carry `pop_size`, GD rows
/// `grad_norm` and `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: Option<f64>,
    pub step: Option<f64>,
    pub pop_size: Option<usize>,
    pub wall_ms: Option<u128>,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

pub fn convergence_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.iter,
            r.objective,
            opt(&r.grad_norm),
            opt(&r.step),
            opt(&r.pop_size),
            opt(&r.wall_ms)
        );
    }
    s
}

/// Design angles in degrees with the in-block cell of each entry.
pub fn design_csv(layout: &LayoutSpec, design: &DesignVector) -> String {
    let cx = layout.cells_per_block[0];
    let mut s = String::from("index,cell_x,cell_y,angle_deg\n");
    for (k, a) in design.angles().iter().enumerate() {
        let _ = writeln!(s, "{k},{},{},{}", k % cx, k / cx, a.to_degrees());
    }
    s
}

/// Read back the angles (radians) of a design CSV.
pub fn parse_design_csv(text: &str) -> Result<DesignVector> {
    let mut angles = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let deg = line
            .rsplit(',')
            .next()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Config(format!("design csv line {}: bad angle", i + 1)))?;
        angles.push(deg.to_radians());
    }
    Ok(DesignVector::new(angles))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Fields sampled for export: vertex displacements and per-triangle scalars
/// at the centroid.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub displacement: Vec<[f64; 2]>,
    pub von_mises: Vec<f64>,
    pub det_i_plus_grad_u: Vec<f64>,
}

impl FieldSample {
    pub fn from_state(sys: &ElasticSystem, u: &[f64], deviator: Deviator) -> Self {
        let sp = &sys.space;
        let nv = sp.mesh.num_vertices();
        let displacement = (0..nv).map(|i| [u[2 * i], u[2 * i + 1]]).collect();
        let centroid = [1.0 / 3.0; 3];
        let (mut von_mises, mut det) = (Vec::new(), Vec::new());
        for e in 0..sp.num_elements() {
            let g = sp.grad(u, e, centroid);
            von_mises.push(stress_eval(&sys.material, deviator, &g).von_mises);
            det.push(det_i_plus(&g));
        }
        FieldSample {
            displacement,
            von_mises,
            det_i_plus_grad_u: det,
        }
    }

    pub fn zero(mesh: &Mesh) -> Self {
        FieldSample {
            displacement: vec![[0.0; 2]; mesh.num_vertices()],
            von_mises: vec![0.0; mesh.num_triangles()],
            det_i_plus_grad_u: vec![1.0; mesh.num_triangles()],
        }
    }
}

/// Legacy ASCII unstructured grid. With `fields`, vertices may be moved by
/// the displacement (`deformed`).
pub fn vtk_string(mesh: &Mesh, fields: Option<&FieldSample>, deformed: bool, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for (i, p) in mesh.vertices.iter().enumerate() {
        let d = match (fields, deformed) {
            (Some(f), true) => f.displacement[i],
            _ => [0.0; 2],
        };
        let _ = writeln!(s, "{} {} 0", p[0] + d[0], p[1] + d[1]);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    if let Some(f) = fields {
        let _ = writeln!(s, "POINT_DATA {}\nVECTORS displacement double", mesh.num_vertices());
        for d in &f.displacement {
            let _ = writeln!(s, "{} {} 0", d[0], d[1]);
        }
        let _ = writeln!(s, "CELL_DATA {nt}");
        for (name, vals) in [("von_mises", &f.von_mises), ("det_I_plus_grad_u", &f.det_i_plus_grad_u)] {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in vals {
                let _ = writeln!(s, "{v}");
            }
        }
    }
    s
}

/// Writes `<stem>.vtk` and `<stem>_deformed.vtk`; returns both file names.
pub fn export_fields(mesh: &Mesh, fields: &FieldSample, dir: &Path, stem: &str) -> Result<[String; 2]> {
    let names = [format!("{stem}.vtk"), format!("{stem}_deformed.vtk")];
    write_file(&dir.join(&names[0]), &vtk_string(mesh, Some(fields), false, stem))?;
    write_file(&dir.join(&names[1]), &vtk_string(mesh, Some(fields), true, &format!("{stem} deformed configuration")))?;
    Ok(names)
}

/// gnuplot script plotting the objective column of `convergence.csv`.
pub fn gnuplot_script(objective: &str) -> String {
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'iteration'\nset ylabel '{objective}'\n\
         plot 'convergence.csv' using 1:2 with linespoints title '{objective}'\npause -1\n"
    )
}
