//! Convex hulls of point sets that affinely span their own coordinate space.
//!
//! Dimension 1 and 2 use direct methods; dimension ≥ 3 uses an incremental
//! beneath-beyond construction with quickhull outside sets, followed by
//! merging of coplanar simplicial facets.

use std::collections::HashMap;

#[derive(Clone, Debug)]
pub(crate) struct HullFacet {
    pub normal: Vec<f64>,
    pub offset: f64,
    /// Positions in [`Hull::vertices`].
    pub vertex_ids: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct Hull {
    /// Indices of the input points that are vertices.
    pub vertices: Vec<usize>,
    pub facets: Vec<HullFacet>,
    pub volume: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Determinant by Gaussian elimination with partial pivoting; `a` is
/// row-major `n × n` and is destroyed.
pub(crate) fn det_in_place(a: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let mut piv = c;
        for r in c + 1..n {
            if a[r * n + c].abs() > a[piv * n + c].abs() {
                piv = r;
            }
        }
        if a[piv * n + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for k in 0..n {
                a.swap(c * n + k, piv * n + k);
            }
            det = -det;
        }
        let p = a[c * n + c];
        det *= p;
        for r in c + 1..n {
            let f = a[r * n + c] / p;
            if f != 0.0 {
                for k in c..n {
                    a[r * n + k] -= f * a[c * n + k];
                }
            }
        }
    }
    det
}

/// Unit normal of the hyperplane through `m` points in ℝ^m (generalized
/// cross product of the edge vectors), or `None` if they are degenerate.
fn hyperplane(points: &[&[f64]], m: usize) -> Option<(Vec<f64>, f64)> {
    let base = points[0];
    let rows: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, base)).collect();
    let mut normal = vec![0.0; m];
    let mut minor = vec![0.0; (m - 1) * (m - 1)];
    for (k, nk) in normal.iter_mut().enumerate() {
        for (r, row) in rows.iter().enumerate() {
            let mut c2 = 0;
            for (c, v) in row.iter().enumerate() {
                if c != k {
                    minor[r * (m - 1) + c2] = *v;
                    c2 += 1;
                }
            }
        }
        let d = if m == 1 { 1.0 } else { det_in_place(&mut minor, m - 1) };
        *nk = if k % 2 == 0 { d } else { -d };
    }
    let norm = dot(&normal, &normal).sqrt();
    let scale: f64 = rows.iter().map(|r| dot(r, r).sqrt()).product();
    if !(norm > 1e-13 * scale.max(f64::MIN_POSITIVE)) {
        return None;
    }
    normal.iter_mut().for_each(|v| *v /= norm);
    let offset = dot(&normal, base);
    Some((normal, offset))
}

/// Scale of a point cloud used to set absolute tolerances.
pub(crate) fn cloud_scale(points: &[Vec<f64>]) -> f64 {
    let m = points.first().map_or(0, |p| p.len());
    let mut s: f64 = 1.0;
    for c in 0..m {
        let lo = points.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max);
        s = s.max(hi - lo).max(hi.abs()).max(lo.abs());
    }
    s
}

pub(crate) fn hull(points: &[Vec<f64>], initial: &[usize]) -> Hull {
    let m = points[0].len();
    match m {
        0 => Hull {
            vertices: vec![0],
            facets: Vec::new(),
            volume: 1.0,
        },
        1 => hull_1d(points),
        2 => hull_2d(points),
        _ => hull_nd(points, initial),
    }
}

fn hull_1d(points: &[Vec<f64>]) -> Hull {
    let (mut lo, mut hi) = (0, 0);
    for (i, p) in points.iter().enumerate() {
        if p[0] < points[lo][0] {
            lo = i;
        }
        if p[0] > points[hi][0] {
            hi = i;
        }
    }
    Hull {
        vertices: vec![lo, hi],
        facets: vec![
            HullFacet { normal: vec![-1.0], offset: -points[lo][0], vertex_ids: vec![0] },
            HullFacet { normal: vec![1.0], offset: points[hi][0], vertex_ids: vec![1] },
        ],
        volume: points[hi][0] - points[lo][0],
    }
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; vertices come out counter-clockwise.
fn hull_2d(points: &[Vec<f64>]) -> Hull {
    let eps = 1e-12 * cloud_scale(points).powi(2);
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    let mut chain: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = chain.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while chain.len() >= start + 2
                && cross2(&points[chain[chain.len() - 2]], &points[chain[chain.len() - 1]], &points[i]) <= eps
            {
                chain.pop();
            }
            chain.push(i);
        }
        chain.pop();
    }
    let k = chain.len();
    let mut facets = Vec::with_capacity(k);
    let mut area = 0.0;
    for a in 0..k {
        let b = (a + 1) % k;
        let (p, q) = (&points[chain[a]], &points[chain[b]]);
        area += p[0] * q[1] - p[1] * q[0];
        let (ex, ey) = (q[0] - p[0], q[1] - p[1]);
        let len = ex.hypot(ey);
        let normal = vec![ey / len, -ex / len];
        let offset = dot(&normal, p);
        facets.push(HullFacet { normal, offset, vertex_ids: vec![a, b] });
    }
    Hull {
        vertices: chain,
        facets,
        volume: 0.5 * area,
    }
}

struct Simplex {
    verts: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|v| v as f64).product()
}

fn hull_nd(points: &[Vec<f64>], initial: &[usize]) -> Hull {
    let m = points[0].len();
    let eps = 1e-9 * cloud_scale(points);
    let interior: Vec<f64> = (0..m)
        .map(|c| initial.iter().map(|&i| points[i][c]).sum::<f64>() / (m + 1) as f64)
        .collect();

    let make = |verts: Vec<usize>| -> Option<Simplex> {
        let refs: Vec<&[f64]> = verts.iter().map(|&i| points[i].as_slice()).collect();
        let (mut normal, mut offset) = hyperplane(&refs, m)?;
        if dot(&normal, &interior) > offset {
            normal.iter_mut().for_each(|v| *v = -*v);
            offset = -offset;
        }
        Some(Simplex { verts, normal, offset, outside: Vec::new(), alive: true })
    };

    let mut facets: Vec<Simplex> = Vec::new();
    for skip in 0..=m {
        let verts: Vec<usize> = initial.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v).collect();
        facets.push(make(verts).expect("initial simplex is non-degenerate"));
    }
    let assign = |facets: &mut [Simplex], range: std::ops::Range<usize>, p: usize| {
        let mut best = None;
        let mut best_d = eps;
        for f in range {
            let d = dot(&facets[f].normal, &points[p]) - facets[f].offset;
            if d > best_d {
                best_d = d;
                best = Some(f);
            }
        }
        if let Some(f) = best {
            facets[f].outside.push(p);
        }
    };
    for p in 0..points.len() {
        if !initial.contains(&p) {
            let n = facets.len();
            assign(&mut facets, 0..n, p);
        }
    }

    let mut cursor = 0;
    while cursor < facets.len() {
        if !facets[cursor].alive || facets[cursor].outside.is_empty() {
            cursor += 1;
            continue;
        }
        let f = &facets[cursor];
        let apex = *f
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                (dot(&f.normal, &points[a])).total_cmp(&dot(&f.normal, &points[b]))
            })
            .unwrap();
        let visible: Vec<usize> = (0..facets.len())
            .filter(|&g| {
                facets[g].alive && dot(&facets[g].normal, &points[apex]) - facets[g].offset > eps
            })
            .collect();
        let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut orphans: Vec<usize> = Vec::new();
        for &g in &visible {
            let mut v = facets[g].verts.clone();
            v.sort_unstable();
            for skip in 0..m {
                let r: Vec<usize> = v.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &x)| x).collect();
                *ridges.entry(r).or_insert(0) += 1;
            }
            facets[g].alive = false;
            orphans.append(&mut facets[g].outside);
        }
        let first_new = facets.len();
        let mut horizon: Vec<Vec<usize>> = ridges.into_iter().filter(|(_, c)| *c == 1).map(|(r, _)| r).collect();
        horizon.sort();
        for r in horizon {
            let mut verts = r;
            verts.push(apex);
            if let Some(s) = make(verts) {
                facets.push(s);
            }
        }
        let end = facets.len();
        for p in orphans {
            if p != apex {
                assign(&mut facets, first_new..end, p);
            }
        }
    }

    let alive: Vec<&Simplex> = facets.iter().filter(|f| f.alive).collect();
    let mut volume = 0.0;
    let mut mat = vec![0.0; m * m];
    for f in &alive {
        for (r, &v) in f.verts.iter().enumerate() {
            for c in 0..m {
                mat[r * m + c] = points[v][c] - interior[c];
            }
        }
        volume += det_in_place(&mut mat, m).abs();
    }
    volume /= factorial(m);

    let mut on_hull: Vec<usize> = alive.iter().flat_map(|f| f.verts.iter().copied()).collect();
    on_hull.sort_unstable();
    on_hull.dedup();

    // Merge simplices lying in a common hyperplane, keyed by their tight sets.
    let mut groups: HashMap<Vec<usize>, (Vec<f64>, usize)> = HashMap::new();
    let mut order: Vec<Vec<usize>> = Vec::new();
    for f in &alive {
        let tight: Vec<usize> = on_hull
            .iter()
            .copied()
            .filter(|&p| (dot(&f.normal, &points[p]) - f.offset).abs() <= eps)
            .collect();
        match groups.get_mut(&tight) {
            Some((n, count)) => {
                n.iter_mut().zip(&f.normal).for_each(|(a, b)| *a += b);
                *count += 1;
            }
            None => {
                order.push(tight.clone());
                groups.insert(tight, (f.normal.clone(), 1));
            }
        }
    }
    let merged: Vec<(Vec<usize>, Vec<f64>)> = order
        .into_iter()
        .map(|tight| {
            let (mut n, _) = groups.remove(&tight).unwrap();
            let norm = dot(&n, &n).sqrt();
            n.iter_mut().for_each(|v| *v /= norm);
            (tight, n)
        })
        .collect();

    // A hull point is a vertex iff the normals of its facets span ℝ^m.
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (fi, (tight, _)) in merged.iter().enumerate() {
        for &p in tight {
            incident.entry(p).or_default().push(fi);
        }
    }
    let is_vertex = |p: usize| -> bool {
        let fs = &incident[&p];
        if fs.len() < m {
            return false;
        }
        let normals: Vec<&Vec<f64>> = fs.iter().map(|&f| &merged[f].1).collect();
        normal_rank(&normals, m) == m
    };
    let vertices: Vec<usize> = on_hull.iter().copied().filter(|&p| is_vertex(p)).collect();
    let position: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let facets = merged
        .into_iter()
        .map(|(tight, normal)| {
            let vertex_ids: Vec<usize> = tight.iter().filter_map(|p| position.get(p).copied()).collect();
            let offset = vertex_ids
                .iter()
                .map(|&v| dot(&normal, &points[vertices[v]]))
                .sum::<f64>()
                / vertex_ids.len() as f64;
            HullFacet { normal, offset, vertex_ids }
        })
        .collect();
    Hull { vertices, facets, volume }
}

/// Numerical rank of a set of unit vectors (modified Gram-Schmidt).
fn normal_rank(vs: &[&Vec<f64>], m: usize) -> usize {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut w = (*v).clone();
        for _ in 0..2 {
            for b in &basis {
                let d = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = dot(&w, &w).sqrt();
        if n > 1e-9 {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
            if basis.len() == m {
                break;
            }
        }
    }
    basis.len()
}

/// Facets by brute force: every hyperplane through `m` affinely independent
/// points that has all points on one side. Cubic-and-worse; kept as an
/// independent reference for the incremental construction.
pub fn brute_force_facets(points: &[Vec<f64>]) -> Vec<(Vec<f64>, f64)> {
    let m = points[0].len();
    let eps = 1e-9 * cloud_scale(points);
    let n = points.len();
    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut combo: Vec<usize> = (0..m).collect();
    loop {
        let refs: Vec<&[f64]> = combo.iter().map(|&i| points[i].as_slice()).collect();
        if let Some((normal, offset)) = hyperplane(&refs, m) {
            let dists: Vec<f64> = points.iter().map(|p| dot(&normal, p) - offset).collect();
            let above = dists.iter().any(|&d| d > eps);
            let below = dists.iter().any(|&d| d < -eps);
            if above != below {
                let (normal, offset) = if above {
                    (normal.iter().map(|v| -v).collect(), -offset)
                } else {
                    (normal, offset)
                };
                let dup = found.iter().any(|(n2, o2)| {
                    (o2 - offset).abs() <= eps && n2.iter().zip(&normal).all(|(a, b)| (a - b).abs() < 1e-7)
                });
                if !dup {
                    found.push((normal, offset));
                }
            }
        }
        // next m-combination of 0..n
        let mut i = m;
        loop {
            if i == 0 {
                return found;
            }
            i -= 1;
            if combo[i] < n - m + i {
                combo[i] += 1;
                for j in i + 1..m {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}
