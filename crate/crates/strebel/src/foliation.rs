//! Vertical foliation: separatrices and saddle connections, the finite
//! critical graph with its ribbon structure, and the decomposition of the
//! complement into cylinders and minimal components.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::iet::{rauzy_induct, Iet, IetError, UeCertificate, UeStatus};
use crate::numeric::Scalar;
use crate::surface::{Side, Surface, EAST, NORTH, SOUTH};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoliationError {
    #[error("critical graph is incomplete: {0}")]
    IncompleteGraph(String),
    #[error("first-return search exceeded {0} steps")]
    Budget(usize),
}

/// Search limits. `trace_scale` multiplies the default separatrix length
/// budget `64 * max height * rectangles^2`.
#[derive(Clone, Debug)]
pub struct Budgets {
    pub trace_scale: u64,
    pub return_steps: usize,
    pub rauzy_steps: usize,
}

impl Default for Budgets {
    fn default() -> Budgets {
        Budgets { trace_scale: 1, return_steps: 200_000, rauzy_steps: 10_000 }
    }
}

impl Budgets {
    pub fn scaled(scale: u64) -> Budgets {
        let d = Budgets::default();
        let s = scale.max(1);
        Budgets { trace_scale: s, return_steps: d.return_steps * s as usize, rauzy_steps: d.rauzy_steps * s as usize }
    }

    pub fn trace_length(&self, surface: &Surface) -> Scalar {
        let n = surface.rects().len() as i64;
        &surface.max_height() * &Scalar::from_int(64 * n * n * self.trace_scale as i64)
    }
}

/// A vertical direction at a surface vertex: vertex id and quarter-turn index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Germ {
    pub vertex: usize,
    pub dir: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphVertex {
    pub vertex: usize,
    pub cone_angle_pi: u32,
    pub puncture: bool,
    pub germs: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SaddleConnection {
    pub from: Germ,
    pub to: Germ,
    pub length: Scalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum RayStatus {
    /// No singularity reached within the length budget.
    Budget,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InfiniteRay {
    pub from: Germ,
    pub status: RayStatus,
    pub traced_length: Scalar,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CriticalGraph {
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<SaddleConnection>,
    pub rays: Vec<InfiniteRay>,
    pub budget: Scalar,
    #[serde(skip)]
    cuts: Vec<Vec<Scalar>>,
    #[serde(skip)]
    side_marks: HashSet<(usize, Side, usize)>,
}

struct Trace {
    end: Option<Germ>,
    length: Scalar,
    cuts: Vec<(usize, Scalar)>,
    sides: Vec<(usize, Side, usize)>,
}

enum Leg {
    Leave(Germ),
    Up(usize, Scalar),
    Down(usize, Scalar),
}

fn seg_index(surface: &Surface, rect: usize, side: Side, start: &Scalar) -> usize {
    surface.segments(rect, side).iter().position(|s| s.start == *start).expect("segment start")
}

type Arrival = (usize, Scalar, Scalar, u8);

/// Crosses a rectangle vertically; returns the arrival point when the far side
/// is reached at a vertex, otherwise sets the next leg.
fn cross(surface: &Surface, t: &mut Trace, leg: &mut Leg, rect: usize, x: Scalar, up: bool) -> Option<Arrival> {
    let r = surface.rect(rect);
    t.length += &r.height;
    t.cuts.push((rect, x.clone()));
    let side = if up { Side::Top } else { Side::Bottom };
    if surface.is_side_vertex(rect, side, &x) {
        let y = if up { r.height.clone() } else { Scalar::zero() };
        return Some((rect, x, y, if up { SOUTH } else { NORTH }));
    }
    let seg = surface.segment_at(rect, side, &x, None).expect("interior point");
    let x2 = seg.map(&x);
    *leg = if seg.partner_side == Side::Bottom { Leg::Up(seg.partner_rect, x2) } else { Leg::Down(seg.partner_rect, x2) };
    None
}

fn trace_from(surface: &Surface, germ: Germ, budget: &Scalar) -> Trace {
    let mut t = Trace { end: None, length: Scalar::zero(), cuts: Vec::new(), sides: Vec::new() };
    let mut leg = Leg::Leave(germ);
    loop {
        if t.length > *budget {
            return t;
        }
        let current = std::mem::replace(&mut leg, Leg::Leave(germ));
        let arrival = match current {
            Leg::Leave(g) => {
                let d = &surface.vertices()[g.vertex].dirs[g.dir];
                let r = surface.rect(d.rect);
                let interior_x = d.x.is_positive() && d.x < r.width;
                match d.compass {
                    NORTH if d.y.is_zero() && interior_x => {
                        leg = Leg::Up(d.rect, d.x.clone());
                        continue;
                    }
                    SOUTH if d.y == r.height && interior_x => {
                        leg = Leg::Down(d.rect, d.x.clone());
                        continue;
                    }
                    c => {
                        let side = if d.x.is_zero() { Side::Left } else { Side::Right };
                        let up = c == NORTH;
                        let seg = surface.segment_at(d.rect, side, &d.y, Some(up)).expect("side segment");
                        let idx = seg_index(surface, d.rect, side, &seg.start);
                        t.sides.push((d.rect, side, idx));
                        let pidx = seg_index(surface, seg.partner_rect, seg.partner_side, &seg.partner_start);
                        t.sides.push((seg.partner_rect, seg.partner_side, pidx));
                        if up {
                            t.length += &(&seg.end - &d.y);
                            Some((d.rect, d.x.clone(), seg.end.clone(), SOUTH))
                        } else {
                            t.length += &(&d.y - &seg.start);
                            Some((d.rect, d.x.clone(), seg.start.clone(), NORTH))
                        }
                    }
                }
            }
            Leg::Up(rect, x) => cross(surface, &mut t, &mut leg, rect, x, true),
            Leg::Down(rect, x) => cross(surface, &mut t, &mut leg, rect, x, false),
        };
        let Some(arrival) = arrival else { continue };
        let (rect, x, y, compass) = arrival;
        let (v, q) = surface.dir_at(rect, &x, &y, compass).expect("arrival direction is registered");
        if surface.vertices()[v].is_singular() {
            t.end = Some(Germ { vertex: v, dir: q });
            return t;
        }
        leg = Leg::Leave(Germ { vertex: v, dir: (q + 2) % 4 });
    }
}

/// Follows every vertical germ at every singular vertex.
pub fn trace_separatrices(surface: &Surface, budgets: &Budgets) -> CriticalGraph {
    let budget = budgets.trace_length(surface);
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut rays = Vec::new();
    let mut cuts: Vec<BTreeSet<Scalar>> = vec![BTreeSet::new(); surface.rects().len()];
    let mut side_marks = HashSet::new();
    for (vid, v) in surface.vertices().iter().enumerate() {
        if !v.is_singular() {
            continue;
        }
        let germs = v.vertical_dirs();
        for &q in &germs {
            let g = Germ { vertex: vid, dir: q };
            let tr = trace_from(surface, g, &budget);
            match tr.end {
                Some(end) => {
                    if g < end {
                        for (r, x) in tr.cuts {
                            cuts[r].insert(x);
                        }
                        side_marks.extend(tr.sides);
                        edges.push(SaddleConnection { from: g, to: end, length: tr.length });
                    }
                }
                None => rays.push(InfiniteRay { from: g, status: RayStatus::Budget, traced_length: tr.length }),
            }
        }
        vertices.push(GraphVertex { vertex: vid, cone_angle_pi: v.cone, puncture: v.puncture, germs });
    }
    CriticalGraph {
        vertices,
        edges,
        rays,
        budget,
        cuts: cuts.into_iter().map(|s| s.into_iter().collect()).collect(),
        side_marks,
    }
}

/// Half-edges are the vertical germs at singular vertices. `sigma` turns to
/// the next germ counter-clockwise, `alpha` swaps the ends of a saddle
/// connection and fixes infinite-ray stubs; faces are the cycles of
/// `sigma ∘ alpha`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Ribbon {
    pub half_edges: Vec<Germ>,
    pub sigma: Vec<usize>,
    pub alpha: Vec<usize>,
    pub edge_of: Vec<Option<usize>>,
    pub faces: Vec<Vec<usize>>,
    pub face_of: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ComponentTopology {
    /// Surface vertex ids.
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub faces: Vec<usize>,
    pub euler: i64,
    pub genus: i64,
    pub punctures: usize,
    pub marked_punctures: usize,
}

impl CriticalGraph {
    pub fn ribbon(&self) -> Ribbon {
        let mut half_edges = Vec::new();
        let mut first = Vec::new();
        for gv in &self.vertices {
            first.push(half_edges.len());
            for &q in &gv.germs {
                half_edges.push(Germ { vertex: gv.vertex, dir: q });
            }
        }
        let index = |g: &Germ| half_edges.iter().position(|h| h == g).expect("germ listed");
        let mut sigma = vec![0; half_edges.len()];
        for (k, gv) in self.vertices.iter().enumerate() {
            let m = gv.germs.len();
            for j in 0..m {
                sigma[first[k] + j] = first[k] + (j + 1) % m;
            }
        }
        let mut alpha: Vec<usize> = (0..half_edges.len()).collect();
        let mut edge_of = vec![None; half_edges.len()];
        for (e, sc) in self.edges.iter().enumerate() {
            let (a, b) = (index(&sc.from), index(&sc.to));
            alpha[a] = b;
            alpha[b] = a;
            edge_of[a] = Some(e);
            edge_of[b] = Some(e);
        }
        let mut face_of = vec![usize::MAX; half_edges.len()];
        let mut faces = Vec::new();
        for h in 0..half_edges.len() {
            if face_of[h] != usize::MAX {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = h;
            while face_of[cur] == usize::MAX {
                face_of[cur] = faces.len();
                cycle.push(cur);
                cur = sigma[alpha[cur]];
            }
            faces.push(cycle);
        }
        Ribbon { half_edges, sigma, alpha, edge_of, faces, face_of }
    }

    /// Connected components as lists of indices into `vertices`.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let pos = |v: usize| self.vertices.iter().position(|g| g.vertex == v).expect("graph vertex");
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, pos(e.from.vertex)), find(&mut parent, pos(e.to.vertex)));
            parent[a] = b;
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut label = vec![usize::MAX; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            if label[r] == usize::MAX {
                label[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[label[r]].push(i);
        }
        groups
    }

    pub fn is_forest(&self) -> bool {
        self.components().iter().all(|c| {
            let vs: HashSet<usize> = c.iter().map(|&i| self.vertices[i].vertex).collect();
            let e = self.edges.iter().filter(|e| vs.contains(&e.from.vertex)).count();
            e + 1 == c.len()
        })
    }

    pub fn cuts(&self, rect: usize) -> &[Scalar] {
        &self.cuts[rect]
    }

    pub fn side_on_graph(&self, rect: usize, side: Side, seg: usize) -> bool {
        self.side_marks.contains(&(rect, side, seg))
    }
}

/// Genus, puncture count and marked punctures of each graph component,
/// from `V - E = 2 - 2g - n` with `n` the number of faces.
pub fn ribbon_topology(graph: &CriticalGraph) -> Vec<ComponentTopology> {
    let ribbon = graph.ribbon();
    graph
        .components()
        .into_iter()
        .map(|comp| {
            let vs: Vec<usize> = comp.iter().map(|&i| graph.vertices[i].vertex).collect();
            let edges: Vec<usize> =
                (0..graph.edges.len()).filter(|&e| vs.contains(&graph.edges[e].from.vertex)).collect();
            let mut faces: Vec<usize> = (0..ribbon.half_edges.len())
                .filter(|&h| vs.contains(&ribbon.half_edges[h].vertex))
                .map(|h| ribbon.face_of[h])
                .collect();
            faces.sort_unstable();
            faces.dedup();
            let euler = vs.len() as i64 - edges.len() as i64;
            let n = faces.len() as i64;
            let marked = comp.iter().filter(|&&i| graph.vertices[i].puncture).count();
            ComponentTopology {
                genus: (2 - n - euler) / 2,
                vertices: vs,
                edges,
                faces,
                euler,
                punctures: n as usize,
                marked_punctures: marked,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Strip {
    pub rect: usize,
    pub start: Scalar,
    pub end: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transversal {
    pub rect: usize,
    pub start: Scalar,
    pub end: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ComponentKind {
    /// Swept by closed leaves of length `leaf_length`; `width` is the
    /// transverse (horizontal) measure across the cylinder.
    #[serde(rename_all = "camelCase")]
    Cylinder { leaf_length: Scalar, width: Scalar },
    #[serde(rename_all = "camelCase")]
    Minimal {
        transversal: Transversal,
        first_return: Iet,
        return_times: Vec<Scalar>,
        ue_status: UeStatus,
        certificate: Option<UeCertificate>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FoliationComponent {
    pub id: usize,
    #[serde(flatten)]
    pub kind: ComponentKind,
    pub area: Scalar,
    pub strips: Vec<Strip>,
    pub adjacent_graph_components: Vec<usize>,
}

impl FoliationComponent {
    pub fn is_cylinder(&self) -> bool {
        matches!(self.kind, ComponentKind::Cylinder { .. })
    }

    /// Width over closed-leaf length, for cylinders.
    pub fn modulus(&self) -> Option<Scalar> {
        match &self.kind {
            ComponentKind::Cylinder { leaf_length, width } => Some(width / leaf_length),
            ComponentKind::Minimal { .. } => None,
        }
    }

    pub fn transversal_length(&self) -> Option<Scalar> {
        match &self.kind {
            ComponentKind::Minimal { transversal, .. } => Some(&transversal.end - &transversal.start),
            ComponentKind::Cylinder { .. } => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FoliationDecomposition {
    pub components: Vec<FoliationComponent>,
    /// Foliation component bordering each ribbon face.
    pub face_component: Vec<usize>,
    #[serde(skip)]
    strip_component: Vec<Vec<(Scalar, Scalar, usize)>>,
}

impl FoliationDecomposition {
    /// Component containing the point just right (`toward_right`) or just
    /// left of abscissa `x` in a rectangle.
    pub fn component_near(&self, rect: usize, x: &Scalar, toward_right: bool) -> usize {
        self.strip_component[rect]
            .iter()
            .find(|(a, b, _)| if toward_right { a <= x && x < b } else { a < x && x <= b })
            .map(|t| t.2)
            .expect("abscissa inside rectangle")
    }

    pub fn cylinders(&self) -> impl Iterator<Item = &FoliationComponent> {
        self.components.iter().filter(|c| c.is_cylinder())
    }

    pub fn is_jenkins_strebel(&self) -> bool {
        self.components.iter().all(FoliationComponent::is_cylinder)
    }
}

struct Piece {
    o_start: Scalar,
    o_end: Scalar,
    rect: usize,
    c_start: Scalar,
    c_end: Scalar,
    up: bool,
    rev: bool,
    time: Scalar,
}

struct Returned {
    o_start: Scalar,
    o_end: Scalar,
    c_start: Scalar,
    c_end: Scalar,
    flip: bool,
    time: Scalar,
}

impl Piece {
    /// Origin coordinate of a current coordinate.
    fn origin_of(&self, c: &Scalar) -> Scalar {
        if self.rev {
            &self.o_start + &(&self.c_end - c)
        } else {
            &self.o_start + &(c - &self.c_start)
        }
    }

    /// Sub-piece over the current sub-interval `[a, b]`.
    fn restrict(&self, a: &Scalar, b: &Scalar) -> Piece {
        let (oa, ob) = (self.origin_of(a), self.origin_of(b));
        let (o_start, o_end) = if oa < ob { (oa, ob) } else { (ob, oa) };
        Piece {
            o_start,
            o_end,
            rect: self.rect,
            c_start: a.clone(),
            c_end: b.clone(),
            up: self.up,
            rev: self.rev,
            time: self.time.clone(),
        }
    }

    /// Splits at the given current coordinates lying strictly inside; records
    /// the origin coordinate of each cut and whether it is hard.
    fn split(self, at: &[(Scalar, bool)], hard: &mut BTreeSet<Scalar>) -> Vec<Piece> {
        let mut marks: Vec<&(Scalar, bool)> =
            at.iter().filter(|(p, _)| *p > self.c_start && *p < self.c_end).collect();
        if marks.is_empty() {
            return vec![self];
        }
        marks.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out = Vec::new();
        let mut lo = self.c_start.clone();
        for (p, is_hard) in marks {
            if *is_hard {
                hard.insert(self.origin_of(p));
            }
            out.push(self.restrict(&lo, p));
            lo = p.clone();
        }
        out.push(self.restrict(&lo, &self.c_end));
        out
    }
}

fn first_return(
    surface: &Surface,
    tau: &Transversal,
    max_steps: usize,
) -> Result<(Vec<Returned>, BTreeSet<Scalar>), FoliationError> {
    let mut hard: BTreeSet<Scalar> = BTreeSet::new();
    let mut done = Vec::new();
    let mut stack = vec![Piece {
        o_start: tau.start.clone(),
        o_end: tau.end.clone(),
        rect: tau.rect,
        c_start: tau.start.clone(),
        c_end: tau.end.clone(),
        up: true,
        rev: false,
        time: Scalar::zero(),
    }];
    let tau_marks = [(tau.start.clone(), true), (tau.end.clone(), true)];
    let in_tau = |p: &Piece| p.c_start >= tau.start && p.c_end <= tau.end;
    let mut steps = 0usize;
    while let Some(mut piece) = stack.pop() {
        steps += 1;
        if steps > max_steps {
            return Err(FoliationError::Budget(max_steps));
        }
        let r = surface.rect(piece.rect);
        piece.time += &r.height;
        let side = if piece.up { Side::Top } else { Side::Bottom };
        let mut pieces = vec![piece];
        if side == Side::Bottom && pieces[0].rect == tau.rect {
            let parts = pieces.pop().expect("piece").split(&tau_marks, &mut hard);
            for p in parts {
                if in_tau(&p) {
                    done.push(Returned {
                        o_start: p.o_start,
                        o_end: p.o_end,
                        c_start: p.c_start,
                        c_end: p.c_end,
                        flip: p.rev,
                        time: p.time,
                    });
                } else {
                    pieces.push(p);
                }
            }
        }
        for p in pieces {
            let rect = p.rect;
            let y = if side == Side::Top { surface.rect(rect).height.clone() } else { Scalar::zero() };
            let marks: Vec<(Scalar, bool)> = surface
                .segments(rect, side)
                .iter()
                .skip(1)
                .map(|s| {
                    let v = surface.vertex_at(rect, &s.start, &y).expect("side vertex");
                    (s.start.clone(), surface.vertices()[v].is_singular())
                })
                .collect();
            for sub in p.split(&marks, &mut hard) {
                let seg = surface.segment_at(rect, side, &sub.c_start, Some(true)).expect("segment under piece");
                let (m1, m2) = (seg.map(&sub.c_start), seg.map(&sub.c_end));
                let (c_start, c_end) = if seg.flip { (m2, m1) } else { (m1, m2) };
                let next = Piece {
                    o_start: sub.o_start,
                    o_end: sub.o_end,
                    rect: seg.partner_rect,
                    c_start,
                    c_end,
                    up: seg.partner_side == Side::Bottom,
                    rev: sub.rev != seg.flip,
                    time: sub.time,
                };
                if next.up && next.rect == tau.rect {
                    for q in next.split(&tau_marks, &mut hard) {
                        if in_tau(&q) {
                            done.push(Returned {
                                o_start: q.o_start,
                                o_end: q.o_end,
                                c_start: q.c_start,
                                c_end: q.c_end,
                                flip: q.rev,
                                time: q.time,
                            });
                        } else {
                            stack.push(q);
                        }
                    }
                } else {
                    stack.push(next);
                }
            }
        }
    }
    done.sort_by(|a, b| a.o_start.cmp(&b.o_start));
    Ok((done, hard))
}

/// Joins returned pieces across soft cuts whose images stay contiguous.
fn merge_returns(pieces: Vec<Returned>, hard: &BTreeSet<Scalar>) -> Vec<Returned> {
    let mut out: Vec<Returned> = Vec::new();
    for p in pieces {
        if let Some(last) = out.last_mut() {
            let contiguous = if p.flip { p.c_end == last.c_start } else { last.c_end == p.c_start };
            if last.o_end == p.o_start
                && !hard.contains(&p.o_start)
                && last.flip == p.flip
                && last.time == p.time
                && contiguous
            {
                last.o_end = p.o_end;
                if p.flip {
                    last.c_start = p.c_start;
                } else {
                    last.c_end = p.c_end;
                }
                continue;
            }
        }
        out.push(p);
    }
    out
}

/// Splits the complement of the critical graph into cylinders and minimal
/// components.
pub fn decompose_vertical(
    surface: &Surface,
    graph: &CriticalGraph,
    budgets: &Budgets,
) -> Result<FoliationDecomposition, FoliationError> {
    let n = surface.rects().len();
    let mut strips: Vec<Strip> = Vec::new();
    let mut rect_strips: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, r) in surface.rects().iter().enumerate() {
        let mut xs = vec![Scalar::zero()];
        xs.extend(graph.cuts(i).iter().filter(|x| x.is_positive() && **x < r.width).cloned());
        xs.push(r.width.clone());
        for w in xs.windows(2) {
            rect_strips[i].push(strips.len());
            strips.push(Strip { rect: i, start: w[0].clone(), end: w[1].clone() });
        }
    }
    let mut parent: Vec<usize> = (0..strips.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        p[ra] = rb;
    };
    for (si, st) in strips.iter().enumerate() {
        for side in [Side::Bottom, Side::Top] {
            for seg in surface.segments(st.rect, side) {
                let lo = if seg.start > st.start { seg.start.clone() } else { st.start.clone() };
                let hi = if seg.end < st.end { seg.end.clone() } else { st.end.clone() };
                if lo >= hi {
                    continue;
                }
                let (m1, m2) = (seg.map(&lo), seg.map(&hi));
                let (a, b) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
                for &sj in &rect_strips[seg.partner_rect] {
                    let o = &strips[sj];
                    if o.start < b && a < o.end {
                        union(&mut parent, si, sj);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for side in [Side::Left, Side::Right] {
            let own = if side == Side::Left { rect_strips[i][0] } else { *rect_strips[i].last().expect("strip") };
            for (k, seg) in surface.segments(i, side).iter().enumerate() {
                if graph.side_on_graph(i, side, k) {
                    continue;
                }
                let p = seg.partner_rect;
                let other =
                    if seg.partner_side == Side::Left { rect_strips[p][0] } else { *rect_strips[p].last().expect("strip") };
                union(&mut parent, own, other);
            }
        }
    }
    let mut comp_of_root = vec![usize::MAX; strips.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for si in 0..strips.len() {
        let r = find(&mut parent, si);
        if comp_of_root[r] == usize::MAX {
            comp_of_root[r] = members.len();
            members.push(Vec::new());
        }
        members[comp_of_root[r]].push(si);
    }
    let strip_comp: Vec<usize> = (0..strips.len()).map(|si| comp_of_root[find(&mut parent, si)]).collect();
    let mut components = Vec::new();
    for (cid, m) in members.iter().enumerate() {
        let mut area = Scalar::zero();
        for &si in m {
            let st = &strips[si];
            area += &(&(&st.end - &st.start) * &surface.rect(st.rect).height);
        }
        let first = &strips[m[0]];
        let tau = Transversal { rect: first.rect, start: first.start.clone(), end: first.end.clone() };
        let (raw, hard) = first_return(surface, &tau, budgets.return_steps)?;
        let merged = merge_returns(raw, &hard);
        let identity = merged.iter().all(|p| !p.flip && p.c_start == p.o_start && p.c_end == p.o_end);
        let kind = if identity {
            let leaf = merged[0].time.clone();
            if merged.iter().any(|p| p.time != leaf) {
                return Err(FoliationError::IncompleteGraph(format!("component {} mixes closed-leaf lengths", cid)));
            }
            ComponentKind::Cylinder { width: &area / &leaf, leaf_length: leaf }
        } else {
            minimal_kind(cid, tau, merged, &area, budgets)?
        };
        components.push(FoliationComponent {
            id: cid,
            kind,
            area,
            strips: m.iter().map(|&si| strips[si].clone()).collect(),
            adjacent_graph_components: Vec::new(),
        });
    }
    let strip_component: Vec<Vec<(Scalar, Scalar, usize)>> = rect_strips
        .iter()
        .map(|ids| ids.iter().map(|&si| (strips[si].start.clone(), strips[si].end.clone(), strip_comp[si])).collect())
        .collect();
    let mut dec = FoliationDecomposition { components, face_component: Vec::new(), strip_component };
    attach_faces(surface, graph, &mut dec);
    Ok(dec)
}

fn minimal_kind(
    cid: usize,
    tau: Transversal,
    merged: Vec<Returned>,
    area: &Scalar,
    budgets: &Budgets,
) -> Result<ComponentKind, FoliationError> {
    let k = merged.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| merged[a].c_start.cmp(&merged[b].c_start));
    let iet = Iet {
        lengths: merged.iter().map(|p| &p.o_end - &p.o_start).collect(),
        top: (0..k).collect(),
        bottom: order,
        flips: merged.iter().map(|p| p.flip).collect(),
    };
    let mut swept = Scalar::zero();
    for p in &merged {
        swept += &(&(&p.o_end - &p.o_start) * &p.time);
    }
    if swept != *area {
        return Err(FoliationError::IncompleteGraph(format!(
            "first return of component {} sweeps {} of area {}",
            cid, swept, area
        )));
    }
    let return_times = merged.iter().map(|p| p.time.clone()).collect();
    let (ue_status, certificate) = match rauzy_induct(&iet, budgets.rauzy_steps) {
        Ok(c) => (c.status, Some(c)),
        Err(IetError::Flipped) => (UeStatus::Unknown, None),
        Err(e) => {
            return Err(FoliationError::IncompleteGraph(format!(
                "component {} has a first return that is not minimal ({}); raise the budget",
                cid, e
            )))
        }
    };
    Ok(ComponentKind::Minimal { transversal: tau, first_return: iet, return_times, ue_status, certificate })
}

fn attach_faces(surface: &Surface, graph: &CriticalGraph, dec: &mut FoliationDecomposition) {
    let ribbon = graph.ribbon();
    let topo = ribbon_topology(graph);
    let mut face_component = vec![usize::MAX; ribbon.faces.len()];
    for (f, cycle) in ribbon.faces.iter().enumerate() {
        let h = ribbon.half_edges[cycle[0]];
        let v = &surface.vertices()[h.vertex];
        let q = v.dirs.len();
        let d = &v.dirs[(h.dir + q - 1) % q];
        face_component[f] = dec.component_near(d.rect, &d.x, d.compass == EAST);
    }
    for (gi, t) in topo.iter().enumerate() {
        for &f in &t.faces {
            let c = face_component[f];
            if !dec.components[c].adjacent_graph_components.contains(&gi) {
                dec.components[c].adjacent_graph_components.push(gi);
            }
        }
    }
    dec.face_component = face_component;
}

/// Traces the critical graph and decomposes, failing on incomplete data.
pub fn analyze(surface: &Surface, budgets: &Budgets) -> Result<(CriticalGraph, FoliationDecomposition), FoliationError> {
    let graph = trace_separatrices(surface, budgets);
    let dec = decompose_vertical(surface, &graph, budgets)?;
    Ok((graph, dec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::surface::geodesic_flow;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    #[test]
    fn torus_graph_is_one_loop() {
        let t = fixtures::torus();
        let (g, dec) = analyze(&t, &Budgets::default()).unwrap();
        assert_eq!(g.vertices.len(), 1);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].length, s("1"));
        assert!(g.rays.is_empty());
        assert_eq!(dec.components.len(), 1);
        assert_eq!(dec.components[0].kind, ComponentKind::Cylinder { leaf_length: s("1"), width: s("1") });
        let topo = ribbon_topology(&g);
        assert_eq!(topo.len(), 1);
        assert_eq!((topo[0].genus, topo[0].punctures, topo[0].marked_punctures), (0, 2, 1));
    }

    #[test]
    fn l_origami_graph_and_cylinders() {
        let l = fixtures::l_origami();
        let (g, dec) = analyze(&l, &Budgets::default()).unwrap();
        assert_eq!(g.vertices.len(), 1);
        assert_eq!(g.vertices[0].germs.len(), 6);
        let mut lengths: Vec<Scalar> = g.edges.iter().map(|e| e.length.clone()).collect();
        lengths.sort();
        assert_eq!(lengths, vec![s("1"), s("1"), s("1")]);
        let mut cyl: Vec<(Scalar, Scalar)> = dec
            .components
            .iter()
            .map(|c| match &c.kind {
                ComponentKind::Cylinder { leaf_length, width } => (leaf_length.clone(), width.clone()),
                _ => panic!("rational surface has only cylinders"),
            })
            .collect();
        cyl.sort();
        assert_eq!(cyl, vec![(s("1"), s("1")), (s("2"), s("1"))]);
        let topo = ribbon_topology(&g);
        assert_eq!(topo[0].euler, -2);
        assert_eq!((topo[0].genus, topo[0].punctures), (0, 4));
    }

    #[test]
    fn golden_torus_is_minimal() {
        let gt = fixtures::golden_torus();
        let (g, dec) = analyze(&gt, &Budgets::default()).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.rays.len(), 2);
        assert_eq!(dec.components.len(), 1);
        match &dec.components[0].kind {
            ComponentKind::Minimal { first_return, ue_status, .. } => {
                assert_eq!(first_return.lengths, vec![s("1"), s("-1/2+1/2*sqrt(5)")]);
                assert_eq!(first_return.bottom, vec![1, 0]);
                assert_eq!(*ue_status, UeStatus::Certified);
            }
            k => panic!("expected minimal, got {:?}", k),
        }
    }

    #[test]
    fn iet321_suspension_returns_its_exchange() {
        let (_, dec) = analyze(&fixtures::iet321(), &Budgets::default()).unwrap();
        match &dec.components[0].kind {
            ComponentKind::Minimal { first_return, ue_status, .. } => {
                assert_eq!(first_return.bottom, vec![2, 1, 0]);
                assert_eq!(first_return.lengths, vec![s("3"), s("sqrt(3)"), s("3+2*sqrt(3)")]);
                assert_eq!(*ue_status, UeStatus::Certified);
            }
            k => panic!("expected minimal, got {:?}", k),
        }
    }

    #[test]
    fn pillowcase_is_one_cylinder_between_two_segments() {
        let (g, dec) = analyze(&fixtures::pillowcase(), &Budgets::default()).unwrap();
        assert_eq!(g.edges.len(), 2);
        assert!(g.is_forest());
        assert_eq!(dec.components.len(), 1);
        assert_eq!(dec.components[0].kind, ComponentKind::Cylinder { leaf_length: s("2"), width: s("1") });
        let topo = ribbon_topology(&g);
        assert_eq!(topo.len(), 2);
        for t in topo {
            assert_eq!((t.genus, t.punctures, t.marked_punctures, t.euler), (0, 1, 2, 1));
        }
    }

    #[test]
    fn flow_keeps_vertical_data() {
        let l = fixtures::l_origami();
        let (g0, d0) = analyze(&l, &Budgets::default()).unwrap();
        let f = geodesic_flow(&l, &s("3")).unwrap();
        let (g1, d1) = analyze(&f, &Budgets::default()).unwrap();
        assert_eq!(g0.edges, g1.edges);
        for (a, b) in d0.components.iter().zip(&d1.components) {
            assert_eq!(b.modulus().unwrap(), &a.modulus().unwrap() * &s("3"));
        }
    }
}
