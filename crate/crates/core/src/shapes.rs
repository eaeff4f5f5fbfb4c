//! Closed test meshes centered at the origin.

use std::f64::consts::PI;

use crate::geometry::{Point3, TriangleMesh};

/// Axis-aligned box with edge lengths `sx × sy × sz` mm.
pub fn cuboid(sx: f64, sy: f64, sz: f64) -> TriangleMesh {
    let (hx, hy, hz) = (sx / 2.0, sy / 2.0, sz / 2.0);
    let mut v = Vec::with_capacity(8);
    for i in 0..8 {
        v.push(Point3::new(
            if i & 1 == 0 { -hx } else { hx },
            if i & 2 == 0 { -hy } else { hy },
            if i & 4 == 0 { -hz } else { hz },
        ));
    }
    // outward-facing quads, split along one diagonal
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let tris = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh::new(v, tris).expect("valid box")
}

pub fn cube(edge: f64) -> TriangleMesh {
    cuboid(edge, edge, edge)
}

/// Tetrahedron with pairwise distinct edge lengths, vertex centroid at the
/// origin.
pub fn scalene_tetrahedron() -> TriangleMesh {
    let raw = [
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(200.0, 0.0, 0.0),
        Point3::new(30.0, 90.0, 0.0),
        Point3::new(60.0, 20.0, 45.0),
    ];
    let c = raw.iter().fold(Point3::origin().coords, |a, p| a + p.coords) / 4.0;
    let v = raw.iter().map(|p| Point3::from(p.coords - c)).collect();
    TriangleMesh::new(v, vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]).expect("valid tetrahedron")
}

/// Closed prism over a regular `segments`-gon, axis along Z.
pub fn cylinder(radius: f64, height: f64, segments: usize) -> TriangleMesh {
    let n = segments as u32;
    let mut v = Vec::with_capacity(2 * segments + 2);
    for &z in &[-height / 2.0, height / 2.0] {
        for i in 0..segments {
            let a = 2.0 * PI * i as f64 / segments as f64;
            v.push(Point3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    v.push(Point3::new(0.0, 0.0, -height / 2.0));
    v.push(Point3::new(0.0, 0.0, height / 2.0));
    let (bc, tc) = (2 * n, 2 * n + 1);
    let mut t = Vec::with_capacity(4 * segments);
    for i in 0..n {
        let j = (i + 1) % n;
        t.push([i, j, n + j]);
        t.push([i, n + j, n + i]);
        t.push([bc, j, i]);
        t.push([tc, n + i, n + j]);
    }
    TriangleMesh::new(v, t).expect("valid cylinder")
}

/// Latitude/longitude sphere.
pub fn uv_sphere(radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    let mut v = vec![Point3::new(0.0, 0.0, radius)];
    for r in 1..rings {
        let phi = PI * r as f64 / rings as f64;
        for s in 0..segments {
            let theta = 2.0 * PI * s as f64 / segments as f64;
            v.push(Point3::new(
                radius * phi.sin() * theta.cos(),
                radius * phi.sin() * theta.sin(),
                radius * phi.cos(),
            ));
        }
    }
    v.push(Point3::new(0.0, 0.0, -radius));
    let seg = segments as u32;
    let south = v.len() as u32 - 1;
    let ring = |r: u32, s: u32| 1 + r * seg + s % seg;
    let mut t = Vec::new();
    for s in 0..seg {
        t.push([0, ring(0, s), ring(0, s + 1)]);
        t.push([south, ring(rings as u32 - 2, s + 1), ring(rings as u32 - 2, s)]);
    }
    for r in 0..rings as u32 - 2 {
        for s in 0..seg {
            t.push([ring(r, s), ring(r + 1, s), ring(r + 1, s + 1)]);
            t.push([ring(r, s), ring(r + 1, s + 1), ring(r, s + 1)]);
        }
    }
    TriangleMesh::new(v, t).expect("valid sphere")
}
