use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::numeric::Scalar;
use crate::surface::{geodesic_flow, Side, Surface, SIDES};

/// Worst relative overshoot of a 16-direction stencil path over the
/// straight segment: `1/cos(atan(1/2)/2) - 1 < 0.028`.
pub const STENCIL_ETA: f64 = 0.028;

const MOVES: [(i64, i64); 16] = [
    (1, 0),
    (2, 1),
    (1, 1),
    (1, 2),
    (0, 1),
    (-1, 2),
    (-1, 1),
    (-2, 1),
    (-1, 0),
    (-2, -1),
    (-1, -1),
    (-1, -2),
    (0, -1),
    (1, -2),
    (1, -1),
    (2, -1),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GhError {
    #[error("grid step must be positive and at most the smallest rectangle dimension")]
    StepTooLarge,
    #[error("grid step must divide every rectangle dimension and gluing offset")]
    Misaligned,
    #[error("point is outside rectangle {0}")]
    OutsidePoint(usize),
    #[error("basepoint must be a singular vertex of the critical graph")]
    RegularBasepoint,
    #[error("radius {r} exceeds the embeddable width {width} at this stretch")]
    NotEmbeddable { r: String, width: String },
}

/// A point of the rectangle complex in its rectangle's coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlatPoint {
    pub rect: usize,
    pub x: Scalar,
    pub y: Scalar,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FlatDistance {
    /// Length of the shortest grid path between the snapped points.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub eta: f64,
    /// Total distance moved when snapping both endpoints to grid nodes.
    pub snap_error: f64,
}

#[derive(Clone)]
struct Seg {
    start: i64,
    end: i64,
    partner_rect: usize,
    partner_side: Side,
    partner_start: i64,
    flip: bool,
}

/// Lattice of step `h` over every rectangle, with boundary nodes identified
/// through the gluings. Coordinates inside `walk` are in half steps.
struct Grid {
    step: f64,
    dims: Vec<(i64, i64)>,
    base: Vec<usize>,
    /// Representative -> canonical node.
    canon: Vec<u32>,
    /// Representative frame relative to its node's first representative.
    sign: Vec<i8>,
    /// Representatives of each canonical node.
    reps: Vec<Vec<u32>>,
    sides: Vec<[Vec<Seg>; 4]>,
    scratch: RefCell<Scratch>,
}

#[derive(Default)]
struct Scratch {
    dist: Vec<f64>,
    frame: Vec<(i8, f64, f64)>,
    closed: Vec<bool>,
    touched: Vec<u32>,
}

fn in_units(v: &Scalar, unit: &Scalar) -> Option<i64> {
    let q = v / unit;
    if !q.is_rational() {
        return None;
    }
    let r = q.rational_part();
    r.is_integer().then(|| r.to_integer().try_into().ok()).flatten()
}

struct Uf {
    parent: Vec<u32>,
    parity: Vec<i8>,
}

impl Uf {
    fn find(&mut self, i: u32) -> (u32, i8) {
        let mut path = Vec::new();
        let mut cur = i;
        while self.parent[cur as usize] != cur {
            path.push(cur);
            cur = self.parent[cur as usize];
        }
        let root = cur;
        // Compress from the top so each parity is relative to the root.
        for &node in path.iter().rev() {
            let p = self.parent[node as usize];
            if p != root {
                self.parity[node as usize] *= self.parity[p as usize];
            }
            self.parent[node as usize] = root;
        }
        (root, self.parity[i as usize])
    }

    fn union(&mut self, a: u32, b: u32, sign: i8) {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra != rb {
            self.parent[rb as usize] = ra;
            self.parity[rb as usize] = pa * pb * sign;
        }
    }
}

impl Grid {
    fn new(surface: &Surface, h: &Scalar) -> Result<Grid, GhError> {
        if !h.is_positive() {
            return Err(GhError::StepTooLarge);
        }
        let mut dims = Vec::new();
        for r in surface.rects() {
            if h > &r.width || h > &r.height {
                return Err(GhError::StepTooLarge);
            }
            let w = in_units(&r.width, h).ok_or(GhError::Misaligned)?;
            let ht = in_units(&r.height, h).ok_or(GhError::Misaligned)?;
            dims.push((w, ht));
        }
        let mut sides = Vec::new();
        for (i, _) in surface.rects().iter().enumerate() {
            let mut per: [Vec<Seg>; 4] = Default::default();
            for side in SIDES {
                for s in surface.segments(i, side) {
                    let conv = |v: &Scalar| in_units(v, h).map(|u| 2 * u).ok_or(GhError::Misaligned);
                    per[side.index()].push(Seg {
                        start: conv(&s.start)?,
                        end: conv(&s.end)?,
                        partner_rect: s.partner_rect,
                        partner_side: s.partner_side,
                        partner_start: conv(&s.partner_start)?,
                        flip: s.flip,
                    });
                }
            }
            sides.push(per);
        }
        let mut base = Vec::new();
        let mut total = 0usize;
        for &(w, ht) in &dims {
            base.push(total);
            total += ((w + 1) * (ht + 1)) as usize;
        }
        let mut grid = Grid {
            step: h.to_f64(),
            dims,
            base,
            canon: Vec::new(),
            sign: Vec::new(),
            reps: Vec::new(),
            sides,
            scratch: RefCell::default(),
        };
        let mut uf = Uf { parent: (0..total as u32).collect(), parity: vec![1; total] };
        for r in 0..grid.dims.len() {
            let (w, ht) = grid.dims[r];
            for side in SIDES {
                let len = if matches!(side, Side::Bottom | Side::Top) { w } else { ht };
                for u in 0..=len {
                    let here = grid.side_point(r, side, 2 * u);
                    for seg in &grid.sides[r][side.index()] {
                        if seg.start <= 2 * u && 2 * u <= seg.end {
                            let v = grid.map_offset(seg, 2 * u);
                            let there = grid.side_point(seg.partner_rect, seg.partner_side, v);
                            let a = grid.rep(r, here.0 / 2, here.1 / 2);
                            let b = grid.rep(seg.partner_rect, there.0 / 2, there.1 / 2);
                            uf.union(a, b, if seg.flip { -1 } else { 1 });
                        }
                    }
                }
            }
        }
        let mut canon = vec![u32::MAX; total];
        let mut sign = vec![1i8; total];
        let mut root_id = vec![u32::MAX; total];
        let mut reps: Vec<Vec<u32>> = Vec::new();
        let mut root_parity = vec![1i8; total];
        for i in 0..total as u32 {
            let (root, p) = uf.find(i);
            if root_id[root as usize] == u32::MAX {
                root_id[root as usize] = reps.len() as u32;
                root_parity[root as usize] = p;
                reps.push(Vec::new());
            }
            let id = root_id[root as usize];
            canon[i as usize] = id;
            sign[i as usize] = p * root_parity[root as usize];
            reps[id as usize].push(i);
        }
        grid.canon = canon;
        grid.sign = sign;
        grid.reps = reps;
        Ok(grid)
    }

    fn rep(&self, r: usize, x: i64, y: i64) -> u32 {
        (self.base[r] + (x * (self.dims[r].1 + 1) + y) as usize) as u32
    }

    fn unrep(&self, i: u32) -> (usize, i64, i64) {
        let i = i as usize;
        let r = self.base.partition_point(|&b| b <= i) - 1;
        let k = (i - self.base[r]) as i64;
        let hh = self.dims[r].1 + 1;
        (r, k / hh, k % hh)
    }

    /// Half-step coordinates of a point at half-step offset `u` along a side.
    fn side_point(&self, r: usize, side: Side, u: i64) -> (i64, i64) {
        let (w, h) = self.dims[r];
        match side {
            Side::Bottom => (u, 0),
            Side::Top => (u, 2 * h),
            Side::Left => (0, u),
            Side::Right => (2 * w, u),
        }
    }

    fn map_offset(&self, seg: &Seg, u: i64) -> i64 {
        if seg.flip {
            seg.partner_start + seg.end - u
        } else {
            seg.partner_start + u - seg.start
        }
    }

    /// Follows the straight move `(a, b)` from a representative; returns the
    /// target representative and whether the frame flipped.
    fn walk(&self, from: u32, a: i64, b: i64) -> Option<(u32, bool)> {
        let (mut r, x, y) = self.unrep(from);
        let (w0, h0) = self.dims[r];
        if (x == 0 && a < 0) || (x == w0 && a > 0) || (y == 0 && b < 0) || (y == h0 && b > 0) {
            return None;
        }
        let (mut px, mut py, mut rx, mut ry) = (2 * x, 2 * y, 2 * a, 2 * b);
        let mut flipped = false;
        for _ in 0..6 {
            let (w, h) = (2 * self.dims[r].0, 2 * self.dims[r].1);
            let (tx, ty) = (px + rx, py + ry);
            if (0..=w).contains(&tx) && (0..=h).contains(&ty) {
                if tx % 2 != 0 || ty % 2 != 0 {
                    return None;
                }
                return Some((self.rep(r, tx / 2, ty / 2), flipped));
            }
            // Exit parameters as fractions num/den with den > 0.
            let exit_x = if tx > w { Some((w - px, rx)) } else if tx < 0 { Some((-px, rx)) } else { None };
            let exit_y = if ty > h { Some((h - py, ry)) } else if ty < 0 { Some((-py, ry)) } else { None };
            let norm = |(n, d): (i64, i64)| if d < 0 { (-n, -d) } else { (n, d) };
            let (num, den, side) = match (exit_x.map(norm), exit_y.map(norm)) {
                (Some(ex), Some(ey)) => match (ex.0 * ey.1).cmp(&(ey.0 * ex.1)) {
                    Ordering::Less => (ex.0, ex.1, if tx > w { Side::Right } else { Side::Left }),
                    Ordering::Greater => (ey.0, ey.1, if ty > h { Side::Top } else { Side::Bottom }),
                    Ordering::Equal => return None,
                },
                (Some(ex), None) => (ex.0, ex.1, if tx > w { Side::Right } else { Side::Left }),
                (None, Some(ey)) => (ey.0, ey.1, if ty > h { Side::Top } else { Side::Bottom }),
                (None, None) => return None,
            };
            if (rx * num) % den != 0 || (ry * num) % den != 0 {
                return None;
            }
            let (cx, cy) = (px + rx * num / den, py + ry * num / den);
            let u = if matches!(side, Side::Bottom | Side::Top) { cx } else { cy };
            let seg = self.sides[r][side.index()].iter().find(|s| s.start < u && u < s.end)?;
            let v = self.map_offset(seg, u);
            let (qx, qy) = self.side_point(seg.partner_rect, seg.partner_side, v);
            let (mut nx, mut ny) = (tx - cx, ty - cy);
            if seg.flip {
                nx = -nx;
                ny = -ny;
                flipped = !flipped;
            }
            r = seg.partner_rect;
            px = qx;
            py = qy;
            rx = nx;
            ry = ny;
        }
        None
    }

    fn snap(&self, surface: &Surface, p: &FlatPoint) -> Result<(u32, f64), GhError> {
        let rect = surface.rects().get(p.rect).ok_or(GhError::OutsidePoint(p.rect))?;
        if p.x.is_negative() || p.y.is_negative() || p.x > rect.width || p.y > rect.height {
            return Err(GhError::OutsidePoint(p.rect));
        }
        let (fx, fy) = (p.x.to_f64() / self.step, p.y.to_f64() / self.step);
        let (w, h) = self.dims[p.rect];
        let (x, y) = ((fx.round() as i64).clamp(0, w), (fy.round() as i64).clamp(0, h));
        let err = ((fx - x as f64).hypot(fy - y as f64)) * self.step;
        Ok((self.canon[self.rep(p.rect, x, y) as usize], err))
    }

    /// Single-source grid distances up to `cutoff`; unreached nodes stay
    /// infinite. Also returns a developed displacement of each node from the
    /// source, in units of the step, along the chosen shortest path.
    fn dijkstra(&self, source: u32, cutoff: f64) -> (Vec<(u32, f64)>, Vec<(f64, f64)>) {
        #[derive(PartialEq)]
        struct Item(f64, u32);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Item {
            fn cmp(&self, o: &Self) -> Ordering {
                o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
            }
        }
        let lens: Vec<f64> = MOVES.iter().map(|&(a, b)| ((a * a + b * b) as f64).sqrt() * self.step).collect();
        let mut scratch = self.scratch.borrow_mut();
        let Scratch { dist, frame, closed, touched } = &mut *scratch;
        if dist.len() != self.reps.len() {
            *dist = vec![f64::INFINITY; self.reps.len()];
            *frame = vec![(1, 0.0, 0.0); self.reps.len()];
            *closed = vec![false; self.reps.len()];
        }
        let mut heap = BinaryHeap::new();
        dist[source as usize] = 0.0;
        frame[source as usize] = (1, 0.0, 0.0);
        touched.push(source);
        heap.push(Item(0.0, source));
        let mut done = Vec::new();
        let mut disp = Vec::new();
        while let Some(Item(d, n)) = heap.pop() {
            if closed[n as usize] {
                continue;
            }
            closed[n as usize] = true;
            let (f, dx, dy) = frame[n as usize];
            done.push((n, d));
            disp.push((dx, dy));
            for &rep in &self.reps[n as usize] {
                let rs = self.sign[rep as usize] * f;
                for (k, &(a, b)) in MOVES.iter().enumerate() {
                    let nd = d + lens[k];
                    if nd > cutoff {
                        continue;
                    }
                    let Some((to, flipped)) = self.walk(rep, a, b) else { continue };
                    let m = self.canon[to as usize];
                    if nd < dist[m as usize] {
                        if dist[m as usize] == f64::INFINITY {
                            touched.push(m);
                        }
                        dist[m as usize] = nd;
                        let to_frame = rs * if flipped { -1 } else { 1 } * self.sign[to as usize];
                        frame[m as usize] = (to_frame, dx + rs as f64 * a as f64, dy + rs as f64 * b as f64);
                        heap.push(Item(nd, m));
                    }
                }
            }
        }
        for &t in touched.iter() {
            dist[t as usize] = f64::INFINITY;
            closed[t as usize] = false;
        }
        touched.clear();
        (done, disp)
    }

    fn coords(&self, node: u32) -> (usize, i64, i64) {
        self.unrep(self.reps[node as usize][0])
    }
}

/// Grid approximation of the flat distance between two points.
pub fn flat_distance(surface: &Surface, p: &FlatPoint, q: &FlatPoint, h: &Scalar) -> Result<FlatDistance, GhError> {
    let grid = Grid::new(surface, h)?;
    let (a, ea) = grid.snap(surface, p)?;
    let (b, eb) = grid.snap(surface, q)?;
    let (done, _) = grid.dijkstra(a, f64::INFINITY);
    let value = done.iter().find(|(n, _)| *n == b).map(|t| t.1).unwrap_or(f64::INFINITY);
    let snap_error = ea + eb;
    Ok(FlatDistance {
        value,
        lower: (value / (1.0 + STENCIL_ETA) - snap_error).max(0.0),
        upper: value + snap_error,
        eta: STENCIL_ETA,
        snap_error,
    })
}

/// Finite ε-relation between grid samples of two pointed balls.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EpsilonRelationWitness {
    /// Samples as (rectangle, x, y) in each surface's coordinates.
    pub samples_a: Vec<(usize, f64, f64)>,
    pub samples_b: Vec<(usize, f64, f64)>,
    pub pairs: Vec<(usize, usize)>,
    pub max_deviation: f64,
    pub grid_error: f64,
    pub epsilon: f64,
}

struct Ball {
    samples: Vec<u32>,
    disp: Vec<(f64, f64)>,
    pairwise: Vec<Vec<f64>>,
    diameter: f64,
}

fn sample_ball(grid: &Grid, base: u32, r: f64, stride: i64) -> Ball {
    let (done, disp) = grid.dijkstra(base, r + 1e-12);
    let mut samples = Vec::new();
    let mut sdisp = Vec::new();
    for (k, &(n, _)) in done.iter().enumerate() {
        let (_, x, y) = grid.coords(n);
        if n == base || (x % stride == 0 && y % stride == 0) {
            samples.push(n);
            sdisp.push(disp[k]);
        }
    }
    let cutoff = 2.0 * r + 1e-9;
    let index: std::collections::HashMap<u32, usize> = samples.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut pairwise = vec![vec![f64::INFINITY; samples.len()]; samples.len()];
    let mut diameter: f64 = 0.0;
    for (i, &s) in samples.iter().enumerate() {
        let (reach, _) = grid.dijkstra(s, cutoff);
        for (n, d) in reach {
            if let Some(&j) = index.get(&n) {
                pairwise[i][j] = d;
                diameter = diameter.max(d);
            }
        }
    }
    Ball { samples, disp: sdisp, pairwise, diameter }
}

fn nearest(p: (f64, f64), pool: &[(f64, f64)]) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (i, q) in pool.iter().enumerate() {
        let d = (p.0 - q.0).hypot(p.1 - q.1);
        if d < bd {
            bd = d;
            best = i;
        }
    }
    best
}

/// ε-relation between the ball of radius `r` about `base` on the surface
/// stretched by `lambda` and the same ball on the reference stretch, which
/// stands in for the limit surface. `base` is given in the unstretched
/// surface's coordinates and must be a singular vertex. Samples are grid
/// nodes on a lattice of `stride` steps.
pub fn gh_epsilon_check(
    surface: &Surface,
    lambda: &Scalar,
    reference_lambda: &Scalar,
    base: &FlatPoint,
    r: &Scalar,
    h: &Scalar,
    stride: i64,
) -> Result<EpsilonRelationWitness, GhError> {
    let v = surface.vertex_at(base.rect, &base.x, &base.y).ok_or(GhError::RegularBasepoint)?;
    if !surface.vertices()[v].is_singular() {
        return Err(GhError::RegularBasepoint);
    }
    let min_width = surface.rects().iter().map(|x| x.width.clone()).min().expect("rectangles");
    let ball = |lam: &Scalar| -> Result<(Grid, Ball, Surface), GhError> {
        let s = geodesic_flow(surface, lam).map_err(|_| GhError::StepTooLarge)?;
        let width = &min_width * lam;
        if &(r * &Scalar::from_int(2)) > &width {
            return Err(GhError::NotEmbeddable { r: r.to_string(), width: width.to_string() });
        }
        let grid = Grid::new(&s, h)?;
        let p = FlatPoint { rect: base.rect, x: &base.x * lam, y: base.y.clone() };
        let (node, _) = grid.snap(&s, &p)?;
        let b = sample_ball(&grid, node, r.to_f64(), stride.max(1));
        Ok((grid, b, s))
    };
    let (ga, a, _) = ball(lambda)?;
    let (gb, b, _) = ball(reference_lambda)?;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, &d) in a.disp.iter().enumerate() {
        pairs.push((i, nearest(d, &b.disp)));
    }
    for (j, &d) in b.disp.iter().enumerate() {
        pairs.push((nearest(d, &a.disp), j));
    }
    pairs.sort_unstable();
    pairs.dedup();
    let mut max_dev: f64 = 0.0;
    for &(i, j) in &pairs {
        for &(k, l) in &pairs {
            max_dev = max_dev.max((a.pairwise[i][k] - b.pairwise[j][l]).abs());
        }
    }
    let rel = STENCIL_ETA / (1.0 + STENCIL_ETA);
    let grid_error = rel * a.diameter + rel * b.diameter;
    let loc = |g: &Grid, n: u32| {
        let (r, x, y) = g.coords(n);
        (r, x as f64 * g.step, y as f64 * g.step)
    };
    Ok(EpsilonRelationWitness {
        samples_a: a.samples.iter().map(|&n| loc(&ga, n)).collect(),
        samples_b: b.samples.iter().map(|&n| loc(&gb, n)).collect(),
        pairs,
        max_deviation: max_dev,
        grid_error,
        epsilon: max_dev + grid_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn pt(rect: usize, x: (i64, i64), y: (i64, i64)) -> FlatPoint {
        FlatPoint { rect, x: Scalar::from_ratio(x.0, x.1), y: Scalar::from_ratio(y.0, y.1) }
    }

    #[test]
    fn axis_aligned_points_in_one_rectangle() {
        let t = fixtures::torus();
        let d = flat_distance(&t, &pt(0, (1, 8), (1, 4)), &pt(0, (5, 8), (1, 4)), &Scalar::from_ratio(1, 32)).unwrap();
        assert!((d.value - 0.5).abs() < 1e-12);
        assert!(d.lower <= 0.5 && 0.5 <= d.upper);
    }

    #[test]
    fn antipodal_points_on_the_square_torus() {
        let t = fixtures::torus();
        let d = flat_distance(&t, &pt(0, (0, 1), (0, 1)), &pt(0, (1, 2), (1, 2)), &Scalar::from_ratio(1, 16)).unwrap();
        let exact = 0.5f64.sqrt();
        assert!(d.lower <= exact + 1e-12 && exact <= d.upper + 1e-12, "{d:?}");
        assert!((d.value - exact).abs() < 1e-12);
    }

    #[test]
    fn crossing_the_wrap_is_shorter() {
        let t = fixtures::torus();
        let d = flat_distance(&t, &pt(0, (1, 16), (1, 2)), &pt(0, (15, 16), (1, 2)), &Scalar::from_ratio(1, 16)).unwrap();
        assert!((d.value - 0.125).abs() < 1e-12);
    }

    #[test]
    fn half_turn_gluing_matches_unfolding() {
        // Pillowcase 2 x 1: the top side is folded at x = 1. The points
        // (1/2, 3/4) and (3/2, 3/4) unfold to (1/2, 3/4) and (1/2, 5/4).
        let p = fixtures::pillowcase();
        let h = Scalar::from_ratio(1, 16);
        let d = flat_distance(&p, &pt(0, (1, 2), (3, 4)), &pt(0, (3, 2), (3, 4)), &h).unwrap();
        assert!((d.value - 0.5).abs() < 1e-12, "{d:?}");
        let diag = flat_distance(&p, &pt(0, (1, 4), (3, 4)), &pt(0, (3, 2), (3, 4)), &h).unwrap();
        let exact = (0.25f64).hypot(0.5);
        assert!(diag.lower <= exact + 1e-12 && exact <= diag.upper + 1e-12, "{diag:?}");
    }

    #[test]
    fn errors() {
        let t = fixtures::torus();
        let q = pt(0, (0, 1), (0, 1));
        assert_eq!(flat_distance(&t, &q, &q, &Scalar::from_int(2)).unwrap_err(), GhError::StepTooLarge);
        let g = fixtures::golden_torus();
        assert_eq!(flat_distance(&g, &q, &q, &Scalar::from_ratio(1, 8)).unwrap_err(), GhError::Misaligned);
        let e = gh_epsilon_check(
            &t,
            &Scalar::from_ratio(1, 2),
            &Scalar::from_int(64),
            &q,
            &Scalar::from_ratio(1, 2),
            &Scalar::from_ratio(1, 16),
            1,
        );
        assert!(matches!(e, Err(GhError::NotEmbeddable { .. })));
        let regular = gh_epsilon_check(
            &t,
            &Scalar::one(),
            &Scalar::one(),
            &pt(0, (1, 2), (1, 2)),
            &Scalar::from_ratio(1, 4),
            &Scalar::from_ratio(1, 16),
            1,
        );
        assert_eq!(regular.unwrap_err(), GhError::RegularBasepoint);
    }

    #[test]
    fn identical_balls_relate_within_grid_error() {
        let t = fixtures::torus();
        let w = gh_epsilon_check(
            &t,
            &Scalar::from_int(4),
            &Scalar::from_int(4),
            &pt(0, (0, 1), (0, 1)),
            &Scalar::from_ratio(1, 2),
            &Scalar::from_ratio(1, 16),
            2,
        )
        .unwrap();
        assert_eq!(w.max_deviation, 0.0);
        assert!(w.epsilon <= w.grid_error);
    }
}
