//! Incremental 3-D convex hull, reduced to what the production surface
//! needs: the upward-facing facets of a point cloud, returned as planes
//! `z = a*x + b*y + c`.

/// A plane `z = a*x + b*y + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Plane {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }
}

#[derive(Debug, Clone, Copy)]
struct Face {
    v: [usize; 3],
    normal: [f64; 3],
    offset: f64,
    alive: bool,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Outward-oriented face through three points, oriented away from `interior`.
fn make_face(pts: &[[f64; 3]], v: [usize; 3], interior: [f64; 3]) -> Face {
    let mut n = cross(sub(pts[v[1]], pts[v[0]]), sub(pts[v[2]], pts[v[0]]));
    let len = norm(n);
    if len > 0.0 {
        n = [n[0] / len, n[1] / len, n[2] / len];
    }
    let mut offset = dot(n, pts[v[0]]);
    if dot(n, interior) > offset {
        n = [-n[0], -n[1], -n[2]];
        offset = -offset;
    }
    Face {
        v,
        normal: n,
        offset,
        alive: true,
    }
}

/// Upward-facing facets of the convex hull of `points`, as planes in the
/// original coordinates. Coordinates are normalized internally so the
/// visibility tolerance is scale-free.
///
/// Degenerate inputs: coplanar clouds collapse to the single common plane;
/// clouds that do not even span a plane in (x, y) return `None`.
pub fn upper_hull_planes(points: &[[f64; 3]]) -> Option<Vec<Plane>> {
    if points.len() < 3 {
        return None;
    }
    // normalize into the unit cube
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let scale: Vec<f64> = (0..3)
        .map(|d| if hi[d] > lo[d] { hi[d] - lo[d] } else { 1.0 })
        .collect();
    let pts: Vec<[f64; 3]> = points
        .iter()
        .map(|p| {
            [
                (p[0] - lo[0]) / scale[0],
                (p[1] - lo[1]) / scale[1],
                (p[2] - lo[2]) / scale[2],
            ]
        })
        .collect();
    let eps = 1e-9;

    let denorm = |n: [f64; 3], offset: f64| -> Option<Plane> {
        // normalized plane n . q = offset with q = ((x-lo)/s), z-component must be usable
        if n[2].abs() < 1e-7 {
            return None;
        }
        // z_n = (offset - nx x_n - ny y_n)/nz, then un-normalize
        let a_n = -n[0] / n[2];
        let b_n = -n[1] / n[2];
        let c_n = offset / n[2];
        let a = a_n * scale[2] / scale[0];
        let b = b_n * scale[2] / scale[1];
        let c = lo[2] + scale[2] * (c_n - a_n * lo[0] / scale[0] - b_n * lo[1] / scale[1]);
        Some(Plane { a, b, c })
    };

    // seed tetrahedron from extreme points
    let i0 = 0;
    let i1 = (0..pts.len()).max_by(|&i, &j| {
        norm(sub(pts[i], pts[i0]))
            .partial_cmp(&norm(sub(pts[j], pts[i0])))
            .unwrap()
    })?;
    if norm(sub(pts[i1], pts[i0])) < eps {
        return None; // all points coincide
    }
    let line_dir = sub(pts[i1], pts[i0]);
    let dist_line = |i: usize| -> f64 {
        let d = sub(pts[i], pts[i0]);
        norm(cross(d, line_dir)) / norm(line_dir)
    };
    let i2 = (0..pts.len()).max_by(|&i, &j| dist_line(i).partial_cmp(&dist_line(j)).unwrap())?;
    if dist_line(i2) < eps {
        return None; // collinear
    }
    let base_n = cross(sub(pts[i1], pts[i0]), sub(pts[i2], pts[i0]));
    let base_n = {
        let l = norm(base_n);
        [base_n[0] / l, base_n[1] / l, base_n[2] / l]
    };
    let base_off = dot(base_n, pts[i0]);
    let dist_plane = |i: usize| -> f64 { (dot(base_n, pts[i]) - base_off).abs() };
    let i3 = (0..pts.len()).max_by(|&i, &j| dist_plane(i).partial_cmp(&dist_plane(j)).unwrap())?;
    if dist_plane(i3) < eps {
        // coplanar cloud: the hull is that single plane
        let mut n = base_n;
        if n[2] < 0.0 {
            n = [-n[0], -n[1], -n[2]];
        }
        return denorm(n, dot(n, pts[i0])).map(|p| vec![p]);
    }

    let interior = [
        (pts[i0][0] + pts[i1][0] + pts[i2][0] + pts[i3][0]) / 4.0,
        (pts[i0][1] + pts[i1][1] + pts[i2][1] + pts[i3][1]) / 4.0,
        (pts[i0][2] + pts[i1][2] + pts[i2][2] + pts[i3][2]) / 4.0,
    ];
    let mut faces = vec![
        make_face(&pts, [i0, i1, i2], interior),
        make_face(&pts, [i0, i1, i3], interior),
        make_face(&pts, [i0, i2, i3], interior),
        make_face(&pts, [i1, i2, i3], interior),
    ];

    let seed = [i0, i1, i2, i3];
    for p in 0..pts.len() {
        if seed.contains(&p) {
            continue;
        }
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive && dot(f.normal, pts[p]) - f.offset > eps)
            .map(|(i, _)| i)
            .collect();
        if visible.is_empty() {
            continue;
        }
        // horizon = undirected edges of visible faces seen exactly once
        let mut edge_count: std::collections::BTreeMap<(usize, usize), usize> =
            std::collections::BTreeMap::new();
        for &fi in &visible {
            let v = faces[fi].v;
            for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        for &fi in &visible {
            faces[fi].alive = false;
        }
        for (&(a, b), &count) in &edge_count {
            if count == 1 {
                faces.push(make_face(&pts, [a, b, p], interior));
            }
        }
    }

    let mut planes = Vec::new();
    for f in faces.iter().filter(|f| f.alive) {
        if f.normal[2] > 1e-7 {
            if let Some(plane) = denorm(f.normal, f.offset) {
                planes.push(plane);
            }
        }
    }
    if planes.is_empty() {
        return None;
    }
    Some(planes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tetra_upper_faces() {
        // unit right tetra: apex above the centroid
        let pts = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.3, 0.3, 1.0],
        ];
        let planes = upper_hull_planes(&pts).unwrap();
        // every point is under (or on) the roof
        for p in &pts {
            let roof = planes
                .iter()
                .map(|pl| pl.eval(p[0], p[1]))
                .fold(f64::INFINITY, f64::min);
            assert!(roof >= p[2] - 1e-9);
        }
        // the apex is on the roof exactly
        let roof = planes
            .iter()
            .map(|pl| pl.eval(0.3, 0.3))
            .fold(f64::INFINITY, f64::min);
        assert!((roof - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coplanar_collapses_to_single_plane() {
        let pts = vec![
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 2.0],
            [0.0, 1.0, 3.0],
            [1.0, 1.0, 4.0],
        ];
        let planes = upper_hull_planes(&pts).unwrap();
        assert_eq!(planes.len(), 1);
        let p = planes[0];
        assert!((p.a - 1.0).abs() < 1e-9);
        assert!((p.b - 2.0).abs() < 1e-9);
        assert!((p.c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn concave_paraboloid_roof_dominates() {
        let mut pts = Vec::new();
        for i in 0..12 {
            for j in 0..7 {
                let x = i as f64 / 11.0;
                let y = j as f64 / 6.0;
                let z = 1.0 - (x - 0.5).powi(2) - 0.3 * (y - 0.5).powi(2);
                pts.push([x, y, z]);
            }
        }
        let planes = upper_hull_planes(&pts).unwrap();
        assert!(planes.len() > 4);
        for p in &pts {
            let roof = planes
                .iter()
                .map(|pl| pl.eval(p[0], p[1]))
                .fold(f64::INFINITY, f64::min);
            assert!(
                roof >= p[2] - 1e-9,
                "roof {} under sample {} at ({}, {})",
                roof,
                p[2],
                p[0],
                p[1]
            );
        }
    }

    #[test]
    fn degenerate_line_rejected() {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]];
        assert!(upper_hull_planes(&pts).is_none());
    }
}
