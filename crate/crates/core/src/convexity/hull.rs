//! Counting embedded domain points inside the convex hull of a member set.
//!
//! All predicates run in f64. Containment is boundary-inclusive with an
//! absolute tolerance of 1e-9 on interval/edge/plane tests. Affine-degenerate
//! member sets (coincident, collinear, coplanar) are handled in their spanned
//! subspace: domain points within 1e-6 of the span are candidates, counted
//! against the hull taken inside the span.

use ndarray::Array2;

/// Boundary inclusion tolerance for interval, edge, and plane tests.
const BOUNDARY_TOL: f64 = 1e-9;
/// Distance from the affine span within which a domain point is a candidate.
const SPAN_TOL: f64 = 1e-6;
/// Below this residual norm a direction adds no affine rank.
const RANK_TOL: f64 = 1e-7;

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn pad(row: ndarray::ArrayView1<f64>) -> V3 {
    let mut v = [0.0; 3];
    for (i, &c) in row.iter().enumerate() {
        v[i] = c;
    }
    v
}

/// Counts domain points lying inside (or on) the convex hull of the member
/// subset. `domain` has one row per index; `members` are row indices.
pub(crate) fn count_in_hull(domain: &Array2<f64>, members: &[usize]) -> usize {
    assert!(!members.is_empty(), "hull of an empty member set");
    let pts: Vec<V3> = members.iter().map(|&i| pad(domain.row(i))).collect();
    let origin = pts[0];

    // Orthonormal basis of the members' affine span (modified Gram-Schmidt
    // with one re-orthogonalization pass).
    let dim = domain.ncols();
    let mut basis: Vec<V3> = Vec::with_capacity(dim);
    for p in pts.iter().skip(1) {
        if basis.len() == dim {
            break;
        }
        let mut v = sub(*p, origin);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(v, *b);
                v = sub(v, scale(*b, c));
            }
        }
        let n = norm(v);
        if n > RANK_TOL {
            basis.push(scale(v, 1.0 / n));
        }
    }
    let rank = basis.len();

    // Project members into span coordinates.
    let proj = |p: V3| -> V3 {
        let off = sub(p, origin);
        let mut out = [0.0; 3];
        for (j, b) in basis.iter().enumerate() {
            out[j] = dot(off, *b);
        }
        out
    };
    let member_proj: Vec<V3> = pts.iter().map(|&p| proj(p)).collect();

    // Candidate domain points: those within SPAN_TOL of the affine span
    // (every point, when the span has full dimension).
    let mut count = 0;
    let mut candidates: Vec<V3> = Vec::new();
    for row in domain.rows() {
        let p = pad(row);
        let off = sub(p, origin);
        let comps = proj(p);
        if rank < dim {
            let resid2 = dot(off, off) - dot(comps, comps);
            if resid2.max(0.0).sqrt() > SPAN_TOL {
                continue;
            }
        }
        candidates.push(comps);
    }

    match rank {
        0 => {
            // All members coincide; candidates are already within SPAN_TOL.
            count = candidates.len();
        }
        1 => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for m in &member_proj {
                lo = lo.min(m[0]);
                hi = hi.max(m[0]);
            }
            for c in &candidates {
                if c[0] >= lo - BOUNDARY_TOL && c[0] <= hi + BOUNDARY_TOL {
                    count += 1;
                }
            }
        }
        2 => {
            let hull = hull_2d(&member_proj);
            for c in &candidates {
                if inside_polygon(&hull, [c[0], c[1]]) {
                    count += 1;
                }
            }
        }
        3 => {
            let faces = quickhull_3d(&member_proj);
            'cand: for c in &candidates {
                for f in &faces {
                    if dot(*c, f.normal) - f.offset > BOUNDARY_TOL {
                        continue 'cand;
                    }
                }
                count += 1;
            }
        }
        _ => unreachable!(),
    }
    count
}

// ---------------------------------------------------------------------------
// 2D: Andrew's monotone chain + inclusive polygon test
// ---------------------------------------------------------------------------

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull (counter-clockwise, strict turns) of 2D points.
fn hull_2d(points: &[V3]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross2(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn inside_polygon(hull: &[[f64; 2]], p: [f64; 2]) -> bool {
    match hull.len() {
        0 => false,
        1 => {
            let d = ((p[0] - hull[0][0]).powi(2) + (p[1] - hull[0][1]).powi(2)).sqrt();
            d <= SPAN_TOL
        }
        2 => {
            // Degenerate chain; callers only reach this via rank-2 member
            // sets, so it should not occur, but treat it as a segment.
            let a = hull[0];
            let b = hull[1];
            let ab = [b[0] - a[0], b[1] - a[1]];
            let t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1]);
            let t = t.clamp(0.0, 1.0);
            let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() <= SPAN_TOL
        }
        _ => hull
            .iter()
            .zip(hull.iter().cycle().skip(1))
            .all(|(&a, &b)| cross2(a, b, p) >= -BOUNDARY_TOL),
    }
}

// ---------------------------------------------------------------------------
// 3D: quickhull
// ---------------------------------------------------------------------------

struct Face {
    verts: [usize; 3],
    normal: V3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

fn face_plane(points: &[V3], verts: [usize; 3], interior: V3) -> Option<(V3, f64)> {
    let a = points[verts[0]];
    let n = cross3(sub(points[verts[1]], a), sub(points[verts[2]], a));
    let len = norm(n);
    if len < 1e-14 {
        return None; // degenerate sliver; carries no usable constraint
    }
    let mut n = scale(n, 1.0 / len);
    let mut off = dot(n, a);
    // Orient outward: the interior point must be on the non-positive side.
    if dot(n, interior) - off > 0.0 {
        n = scale(n, -1.0);
        off = -off;
    }
    Some((n, off))
}

/// Convex hull faces of a full-rank 3D point set. Returned faces carry
/// outward unit normals; a point p is inside the hull iff
/// dot(p, normal) <= offset + tol for every face.
fn quickhull_3d(points: &[V3]) -> Vec<Face> {
    let n = points.len();
    debug_assert!(n >= 4, "rank-3 member sets have at least 4 points");

    // Scale-aware visibility epsilon.
    let mut spread: f64 = 0.0;
    for p in points {
        for c in p {
            spread = spread.max(c.abs());
        }
    }
    let vis_eps = (spread.max(1.0)) * 1e-10;

    // Initial tetrahedron from extremes.
    let mut axis = 0;
    let mut best_extent = -1.0;
    let mut extremes = [(0usize, 0usize); 3];
    for d in 0..3 {
        let (mut lo, mut hi) = (0usize, 0usize);
        for (i, p) in points.iter().enumerate() {
            if p[d] < points[lo][d] {
                lo = i;
            }
            if p[d] > points[hi][d] {
                hi = i;
            }
        }
        extremes[d] = (lo, hi);
        let ext = points[hi][d] - points[lo][d];
        if ext > best_extent {
            best_extent = ext;
            axis = d;
        }
    }
    let (i0, i1) = extremes[axis];
    debug_assert!(i0 != i1);
    // Farthest point from the line (i0, i1).
    let dir = sub(points[i1], points[i0]);
    let dir = scale(dir, 1.0 / norm(dir));
    let mut i2 = usize::MAX;
    let mut best = RANK_TOL;
    for (i, p) in points.iter().enumerate() {
        let off = sub(*p, points[i0]);
        let along = dot(off, dir);
        let d2 = (dot(off, off) - along * along).max(0.0).sqrt();
        if d2 > best {
            best = d2;
            i2 = i;
        }
    }
    debug_assert!(i2 != usize::MAX, "collinear input to quickhull_3d");
    // Farthest point from the plane (i0, i1, i2).
    let pn = cross3(sub(points[i1], points[i0]), sub(points[i2], points[i0]));
    let pn = scale(pn, 1.0 / norm(pn));
    let poff = dot(pn, points[i0]);
    let mut i3 = usize::MAX;
    let mut best = RANK_TOL;
    for (i, p) in points.iter().enumerate() {
        let d = (dot(pn, *p) - poff).abs();
        if d > best {
            best = d;
            i3 = i;
        }
    }
    debug_assert!(i3 != usize::MAX, "coplanar input to quickhull_3d");

    let interior = {
        let mut c = [0.0; 3];
        for &i in &[i0, i1, i2, i3] {
            for d in 0..3 {
                c[d] += points[i][d] / 4.0;
            }
        }
        c
    };

    let mut faces: Vec<Face> = Vec::new();
    for verts in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        let (normal, offset) = face_plane(points, verts, interior).expect("tetrahedron face");
        faces.push(Face {
            verts,
            normal,
            offset,
            outside: Vec::new(),
            alive: true,
        });
    }

    // Assign points to the first face they are outside of.
    let hull_verts = [i0, i1, i2, i3];
    for i in 0..n {
        if hull_verts.contains(&i) {
            continue;
        }
        for f in faces.iter_mut() {
            if dot(points[i], f.normal) - f.offset > vis_eps {
                f.outside.push(i);
                break;
            }
        }
    }

    loop {
        // Face with the farthest outside point.
        let mut pick: Option<(usize, usize, f64)> = None;
        for (fi, f) in faces.iter().enumerate() {
            if !f.alive {
                continue;
            }
            for &pi in &f.outside {
                let d = dot(points[pi], f.normal) - f.offset;
                if pick.map_or(true, |(_, _, bd)| d > bd) {
                    pick = Some((fi, pi, d));
                }
            }
        }
        let Some((_, apex, _)) = pick else { break };

        // Visible faces and their horizon.
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive && dot(points[apex], f.normal) - f.offset > vis_eps)
            .map(|(i, _)| i)
            .collect();
        let mut edge_count: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        for &fi in &visible {
            let v = faces[fi].verts;
            for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        let mut orphans: Vec<usize> = Vec::new();
        for &fi in &visible {
            faces[fi].alive = false;
            orphans.append(&mut faces[fi].outside);
        }
        orphans.retain(|&pi| pi != apex);
        orphans.sort_unstable();
        orphans.dedup();

        let mut new_faces: Vec<usize> = Vec::new();
        for (&(a, b), &cnt) in edge_count.iter() {
            if cnt != 1 {
                continue; // interior edge of the visible region
            }
            if let Some((normal, offset)) = face_plane(points, [a, b, apex], interior) {
                faces.push(Face {
                    verts: [a, b, apex],
                    normal,
                    offset,
                    outside: Vec::new(),
                    alive: true,
                });
                new_faces.push(faces.len() - 1);
            }
        }
        for pi in orphans {
            for &fi in &new_faces {
                if dot(points[pi], faces[fi].normal) - faces[fi].offset > vis_eps {
                    faces[fi].outside.push(pi);
                    break;
                }
            }
        }
    }

    let mut out: Vec<Face> = faces.into_iter().filter(|f| f.alive).collect();
    // Drop numerically bogus faces: a real facet keeps every member point on
    // its inner side.
    out.retain(|f| {
        points
            .iter()
            .all(|p| dot(*p, f.normal) - f.offset <= 1e-7 * spread.max(1.0))
    });
    out
}
