//! Rectangle complexes in canonical coordinates (q = dz² on every rectangle),
//! their vertex classes and cone angles, and the Teichmüller geodesic flow.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{is_squarefree, NumericError, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurfaceError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("side {side:?} of rectangle {rect} is not tiled exactly by its segments")]
    PartitionMismatch { rect: usize, side: Side },
    #[error("gluing is not an involution at rectangle {rect} side {side:?}")]
    NonInvolutive { rect: usize, side: Side },
    #[error("glued segments have different lengths ({0} vs {1})")]
    LengthMismatch(String, String),
    #[error("surface is disconnected")]
    Disconnected,
    #[error("horizontal side glued to vertical side ({0:?} with {1:?})")]
    MixedOrientation(Side, Side),
    #[error("{orientation:?} gluing cannot pair {a:?} with {b:?}")]
    InvalidPairing { orientation: Orientation, a: Side, b: Side },
    #[error("puncture at rectangle {rect} side {side:?} offset {offset} is not a vertex")]
    InvalidPuncture { rect: usize, side: Side, offset: String },
    #[error("inconsistent corner cycle at rectangle {0}")]
    BadConeAngle(usize),
    #[error("flow parameter must be positive, got {0}")]
    NonPositiveLambda(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

pub const SIDES: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

impl Side {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Side::Bottom | Side::Top)
    }

    pub fn opposite(self) -> Side {
        SIDES[(self.index() + 2) % 4]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Orientation {
    Translation,
    HalfTurn,
}

/// Unit directions in a rectangle's frame, counted in quarter turns from east.
pub type Compass = u8;
pub const EAST: Compass = 0;
pub const NORTH: Compass = 1;
pub const WEST: Compass = 2;
pub const SOUTH: Compass = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rectangle {
    pub id: usize,
    pub width: Scalar,
    pub height: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentRef {
    pub rect: usize,
    pub side: Side,
    pub offset: Scalar,
    pub length: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gluing {
    pub from: SegmentRef,
    pub to: SegmentRef,
    pub orientation: Orientation,
}

/// A boundary point: offsets along bottom/top run from the left corner,
/// along left/right from the bottom corner.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PunctureRef {
    pub rect: usize,
    pub side: Side,
    pub offset: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectangleComplex {
    pub field_d: u64,
    pub rectangles: Vec<Rectangle>,
    pub gluings: Vec<Gluing>,
    #[serde(default)]
    pub punctures: Vec<PunctureRef>,
}

impl RectangleComplex {
    pub fn from_json(text: &str) -> Result<RectangleComplex, SurfaceError> {
        serde_json::from_str(text).map_err(|e| SurfaceError::Malformed(e.to_string()))
    }

    /// Gluings oriented so `from` precedes `to`, sorted; punctures sorted.
    pub fn canonical(&self) -> RectangleComplex {
        let key = |s: &SegmentRef| (s.rect, s.side, s.offset.clone());
        let mut gluings: Vec<Gluing> = self
            .gluings
            .iter()
            .map(|g| {
                if key(&g.to) < key(&g.from) {
                    Gluing { from: g.to.clone(), to: g.from.clone(), orientation: g.orientation }
                } else {
                    g.clone()
                }
            })
            .collect();
        gluings.sort_by(|a, b| key(&a.from).cmp(&key(&b.from)));
        let mut punctures = self.punctures.clone();
        punctures.sort_by(|a, b| (a.rect, a.side, &a.offset).cmp(&(b.rect, b.side, &b.offset)));
        punctures.dedup();
        RectangleComplex { field_d: self.field_d, rectangles: self.rectangles.clone(), gluings, punctures }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("complex serializes")
    }
}

/// One piece of a side partition together with where it is glued.
#[derive(Clone, Debug)]
pub struct SideSegment {
    pub start: Scalar,
    pub end: Scalar,
    pub partner_rect: usize,
    pub partner_side: Side,
    pub partner_start: Scalar,
    pub flip: bool,
}

impl SideSegment {
    /// Image of an offset on this segment on the partner side.
    pub fn map(&self, offset: &Scalar) -> Scalar {
        let t = offset - &self.start;
        if self.flip {
            &(&self.partner_start + &self.end) - &(&self.start + &t)
        } else {
            &self.partner_start + &t
        }
    }
}

/// Point of a rectangle, in its own coordinates.
pub type PointKey = (usize, Scalar, Scalar);

/// One realization of a direction at a vertex: a rectangle point and a compass
/// direction in that rectangle's frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirRef {
    pub rect: usize,
    pub x: Scalar,
    pub y: Scalar,
    pub compass: Compass,
}

#[derive(Clone, Debug)]
pub struct Vertex {
    /// Cone angle as a multiple of π.
    pub cone: u32,
    pub puncture: bool,
    /// Rectangle points belonging to this class.
    pub points: Vec<PointKey>,
    /// Primary realization of each quarter-turn direction, counter-clockwise.
    pub dirs: Vec<DirRef>,
}

impl Vertex {
    pub fn is_singular(&self) -> bool {
        self.cone != 2 || self.puncture
    }

    /// Quarter-turn indices of the vertical directions.
    pub fn vertical_dirs(&self) -> Vec<usize> {
        (0..self.dirs.len()).filter(|&q| self.dirs[q].compass % 2 == 1).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Singularity {
    pub id: usize,
    pub cone_angle_pi: u32,
    pub is_puncture: bool,
    pub location: Vec<(usize, String, String)>,
}

#[derive(Clone, Debug)]
pub struct Surface {
    complex: RectangleComplex,
    sides: Vec<[Vec<SideSegment>; 4]>,
    vertices: Vec<Vertex>,
    point_vertex: HashMap<PointKey, usize>,
    dir_index: HashMap<DirRef, (usize, usize)>,
}

impl PartialEq for Surface {
    fn eq(&self, other: &Surface) -> bool {
        self.complex.canonical() == other.complex.canonical()
    }
}

fn side_len(r: &Rectangle, side: Side) -> &Scalar {
    if side.is_horizontal() {
        &r.width
    } else {
        &r.height
    }
}

fn side_point(r: &Rectangle, side: Side, offset: &Scalar) -> (Scalar, Scalar) {
    match side {
        Side::Bottom => (offset.clone(), Scalar::zero()),
        Side::Top => (offset.clone(), r.height.clone()),
        Side::Left => (Scalar::zero(), offset.clone()),
        Side::Right => (r.width.clone(), offset.clone()),
    }
}

/// Start compass and angular size (in quarter turns) of the sector at a point.
fn sector_shape(r: &Rectangle, x: &Scalar, y: &Scalar) -> (Compass, u8) {
    let left = x.is_zero();
    let right = *x == r.width;
    let bottom = y.is_zero();
    let top = *y == r.height;
    match (left, right, bottom, top) {
        (true, _, true, _) => (EAST, 1),
        (_, true, true, _) => (NORTH, 1),
        (_, true, _, true) => (WEST, 1),
        (true, _, _, true) => (SOUTH, 1),
        (_, _, true, _) => (EAST, 2),
        (_, true, _, _) => (NORTH, 2),
        (_, _, _, true) => (WEST, 2),
        _ => (SOUTH, 2),
    }
}

/// Side carrying the ray leaving a boundary point in a side-parallel compass
/// direction, and whether it runs toward increasing offsets.
fn ray_side(start_ray: bool, c: Compass) -> (Side, bool) {
    if start_ray {
        match c {
            EAST => (Side::Bottom, true),
            NORTH => (Side::Right, true),
            WEST => (Side::Top, false),
            _ => (Side::Left, false),
        }
    } else {
        match c {
            EAST => (Side::Top, true),
            NORTH => (Side::Left, true),
            WEST => (Side::Bottom, false),
            _ => (Side::Right, false),
        }
    }
}

fn point_offset(side: Side, x: &Scalar, y: &Scalar) -> Scalar {
    if side.is_horizontal() {
        x.clone()
    } else {
        y.clone()
    }
}

impl Surface {
    pub fn from_json(text: &str) -> Result<Surface, SurfaceError> {
        validate(RectangleComplex::from_json(text)?)
    }

    pub fn complex(&self) -> &RectangleComplex {
        &self.complex
    }

    pub fn field_d(&self) -> u64 {
        self.complex.field_d
    }

    pub fn rects(&self) -> &[Rectangle] {
        &self.complex.rectangles
    }

    pub fn rect(&self, i: usize) -> &Rectangle {
        &self.complex.rectangles[i]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn segments(&self, rect: usize, side: Side) -> &[SideSegment] {
        &self.sides[rect][side.index()]
    }

    pub fn vertex_at(&self, rect: usize, x: &Scalar, y: &Scalar) -> Option<usize> {
        self.point_vertex.get(&(rect, x.clone(), y.clone())).copied()
    }

    /// Vertex and quarter-turn index of a direction realized at a rectangle point.
    pub fn dir_at(&self, rect: usize, x: &Scalar, y: &Scalar, compass: Compass) -> Option<(usize, usize)> {
        let key = DirRef { rect, x: x.clone(), y: y.clone(), compass };
        self.dir_index.get(&key).copied()
    }

    /// Segment of a side containing an offset; `toward` picks the segment on
    /// the increasing (`Some(true)`) or decreasing side of an endpoint, `None`
    /// requires the offset to be interior.
    pub fn segment_at(&self, rect: usize, side: Side, offset: &Scalar, toward: Option<bool>) -> Option<&SideSegment> {
        self.sides[rect][side.index()].iter().find(|s| match toward {
            Some(true) => s.start <= *offset && *offset < s.end,
            Some(false) => s.start < *offset && *offset <= s.end,
            None => s.start < *offset && *offset < s.end,
        })
    }

    /// Whether an offset is a segment endpoint (or corner) of a side.
    pub fn is_side_vertex(&self, rect: usize, side: Side, offset: &Scalar) -> bool {
        offset.is_zero()
            || offset == side_len(self.rect(rect), side)
            || self.sides[rect][side.index()].iter().any(|s| s.start == *offset)
    }

    pub fn area(&self) -> Scalar {
        let mut total = Scalar::zero();
        for r in self.rects() {
            total += &(&r.width * &r.height);
        }
        total
    }

    pub fn singularities(&self) -> Vec<Singularity> {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_singular())
            .map(|(id, v)| Singularity {
                id,
                cone_angle_pi: v.cone,
                is_puncture: v.puncture,
                location: v.points.iter().map(|(r, x, y)| (*r, x.to_string(), y.to_string())).collect(),
            })
            .collect()
    }

    /// V - E + F of the closed-up cell structure.
    pub fn euler_characteristic(&self) -> i64 {
        let edges: usize = self.sides.iter().map(|s| s.iter().map(Vec::len).sum::<usize>()).sum();
        self.vertices.len() as i64 - (edges / 2) as i64 + self.rects().len() as i64
    }

    pub fn genus(&self) -> i64 {
        (2 - self.euler_characteristic()) / 2
    }

    pub fn puncture_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.puncture).count()
    }

    pub fn max_height(&self) -> Scalar {
        self.rects().iter().map(|r| r.height.clone()).max().expect("non-empty complex")
    }

    pub fn to_json(&self) -> String {
        self.complex.canonical().to_json()
    }
}

/// Checks every structural invariant and computes vertex classes by walking
/// the corner cycles.
pub fn validate(complex: RectangleComplex) -> Result<Surface, SurfaceError> {
    let d = complex.field_d;
    if !is_squarefree(d) {
        return Err(NumericError::NotSquarefree(d).into());
    }
    let n = complex.rectangles.len();
    if n == 0 {
        return Err(SurfaceError::Malformed("no rectangles".into()));
    }
    let in_field = |s: &Scalar| s.field() == 1 || s.field() == d;
    let foreign = |s: &Scalar| NumericError::MixedContext(d, s.field());
    for (i, r) in complex.rectangles.iter().enumerate() {
        if r.id != i {
            return Err(SurfaceError::Malformed(format!("rectangle ids must be 0..{} in order", n)));
        }
        for s in [&r.width, &r.height] {
            if !in_field(s) {
                return Err(foreign(s).into());
            }
            if !s.is_positive() {
                return Err(SurfaceError::Malformed(format!("rectangle {} has non-positive dimension", i)));
            }
        }
    }
    let mut sides: Vec<[Vec<SideSegment>; 4]> = (0..n).map(|_| Default::default()).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for g in &complex.gluings {
        for s in [&g.from, &g.to] {
            if s.rect >= n {
                return Err(SurfaceError::Malformed(format!("unknown rectangle {}", s.rect)));
            }
            for v in [&s.offset, &s.length] {
                if !in_field(v) {
                    return Err(foreign(v).into());
                }
            }
            let len = side_len(&complex.rectangles[s.rect], s.side);
            if s.offset.is_negative() || !s.length.is_positive() || &(&s.offset + &s.length) > len {
                return Err(SurfaceError::PartitionMismatch { rect: s.rect, side: s.side });
            }
        }
        let (a, b) = (g.from.side, g.to.side);
        if a.is_horizontal() != b.is_horizontal() {
            return Err(SurfaceError::MixedOrientation(a, b));
        }
        let ok = match g.orientation {
            Orientation::Translation => b == a.opposite(),
            Orientation::HalfTurn => b == a,
        };
        if !ok {
            return Err(SurfaceError::InvalidPairing { orientation: g.orientation, a, b });
        }
        if g.from.length != g.to.length {
            return Err(SurfaceError::LengthMismatch(g.from.length.to_string(), g.to.length.to_string()));
        }
        if g.from == g.to {
            return Err(SurfaceError::NonInvolutive { rect: g.from.rect, side: g.from.side });
        }
        let flip = g.orientation == Orientation::HalfTurn;
        for (s, t) in [(&g.from, &g.to), (&g.to, &g.from)] {
            sides[s.rect][s.side.index()].push(SideSegment {
                start: s.offset.clone(),
                end: &s.offset + &s.length,
                partner_rect: t.rect,
                partner_side: t.side,
                partner_start: t.offset.clone(),
                flip,
            });
        }
        let (ra, rb) = (find(&mut parent, g.from.rect), find(&mut parent, g.to.rect));
        parent[ra] = rb;
    }
    for (i, per_rect) in sides.iter_mut().enumerate() {
        for side in SIDES {
            let segs = &mut per_rect[side.index()];
            segs.sort_by(|a, b| a.start.cmp(&b.start));
            for w in segs.windows(2) {
                if w[0].start == w[1].start && w[0].end == w[1].end {
                    return Err(SurfaceError::NonInvolutive { rect: i, side });
                }
            }
            let mut at = Scalar::zero();
            for s in segs.iter() {
                if s.start != at {
                    return Err(SurfaceError::PartitionMismatch { rect: i, side });
                }
                at = s.end.clone();
            }
            if &at != side_len(&complex.rectangles[i], side) {
                return Err(SurfaceError::PartitionMismatch { rect: i, side });
            }
        }
    }
    let root = find(&mut parent, 0);
    if (0..n).any(|i| find(&mut parent, i) != root) {
        return Err(SurfaceError::Disconnected);
    }
    let mut surface = Surface {
        complex,
        sides,
        vertices: Vec::new(),
        point_vertex: HashMap::new(),
        dir_index: HashMap::new(),
    };
    walk_vertices(&mut surface)?;
    mark_punctures(&mut surface)?;
    Ok(surface)
}

fn walk_vertices(s: &mut Surface) -> Result<(), SurfaceError> {
    let mut points: Vec<PointKey> = Vec::new();
    for (i, r) in s.complex.rectangles.iter().enumerate() {
        for side in SIDES {
            for seg in &s.sides[i][side.index()] {
                let (x, y) = side_point(r, side, &seg.start);
                points.push((i, x, y));
            }
        }
    }
    let mut vertex_of: HashMap<PointKey, usize> = HashMap::new();
    for start in &points {
        if vertex_of.contains_key(start) {
            continue;
        }
        let v = s.vertices.len();
        let mut cur = start.clone();
        let mut q = 0usize;
        let mut sectors: Vec<(PointKey, Compass, u8, usize)> = Vec::new();
        loop {
            if vertex_of.insert(cur.clone(), v).is_some() {
                return Err(SurfaceError::BadConeAngle(cur.0));
            }
            let r = &s.complex.rectangles[cur.0];
            let (c0, quarters) = sector_shape(r, &cur.1, &cur.2);
            sectors.push((cur.clone(), c0, quarters, q));
            q += quarters as usize;
            let end = (c0 + quarters) % 4;
            let (side, inc) = ray_side(false, end);
            let offset = point_offset(side, &cur.1, &cur.2);
            let seg = s.segment_at(cur.0, side, &offset, Some(inc)).ok_or(SurfaceError::BadConeAngle(cur.0))?;
            let off2 = seg.map(&offset);
            let (r2, side2, inc2) = (seg.partner_rect, seg.partner_side, inc != seg.flip);
            let (x2, y2) = side_point(&s.complex.rectangles[r2], side2, &off2);
            let (c2, _) = sector_shape(&s.complex.rectangles[r2], &x2, &y2);
            if ray_side(true, c2) != (side2, inc2) {
                return Err(SurfaceError::BadConeAngle(r2));
            }
            cur = (r2, x2, y2);
            if cur == *start {
                break;
            }
        }
        if q % 2 == 1 || q == 0 {
            return Err(SurfaceError::BadConeAngle(start.0));
        }
        let mut dirs = Vec::with_capacity(q);
        for (p, c0, quarters, q0) in &sectors {
            for m in 0..*quarters {
                let dref = DirRef { rect: p.0, x: p.1.clone(), y: p.2.clone(), compass: (c0 + m) % 4 };
                s.dir_index.insert(dref.clone(), (v, q0 + m as usize));
                dirs.push(dref);
            }
            let end = DirRef { rect: p.0, x: p.1.clone(), y: p.2.clone(), compass: (c0 + quarters) % 4 };
            s.dir_index.insert(end, (v, (q0 + *quarters as usize) % q));
        }
        s.vertices.push(Vertex {
            cone: (q / 2) as u32,
            puncture: false,
            points: sectors.into_iter().map(|(p, ..)| p).collect(),
            dirs,
        });
    }
    s.point_vertex = vertex_of;
    Ok(())
}

fn mark_punctures(s: &mut Surface) -> Result<(), SurfaceError> {
    for p in s.complex.punctures.clone() {
        let bad = || SurfaceError::InvalidPuncture { rect: p.rect, side: p.side, offset: p.offset.to_string() };
        if p.rect >= s.rects().len() {
            return Err(bad());
        }
        let (x, y) = side_point(s.rect(p.rect), p.side, &p.offset);
        let v = s.vertex_at(p.rect, &x, &y).ok_or_else(bad)?;
        s.vertices[v].puncture = true;
    }
    Ok(())
}

/// Teichmüller geodesic flow with `lambda = e^{2t}`: horizontal data scales by
/// `lambda`, vertical data is unchanged.
pub fn geodesic_flow(surface: &Surface, lambda: &Scalar) -> Result<Surface, SurfaceError> {
    if !lambda.is_positive() {
        return Err(SurfaceError::NonPositiveLambda(lambda.to_string()));
    }
    let c = &surface.complex;
    let scale_seg = |s: &SegmentRef| {
        if s.side.is_horizontal() {
            SegmentRef { rect: s.rect, side: s.side, offset: &s.offset * lambda, length: &s.length * lambda }
        } else {
            s.clone()
        }
    };
    let out = RectangleComplex {
        field_d: c.field_d,
        rectangles: c
            .rectangles
            .iter()
            .map(|r| Rectangle { id: r.id, width: &r.width * lambda, height: r.height.clone() })
            .collect(),
        gluings: c
            .gluings
            .iter()
            .map(|g| Gluing { from: scale_seg(&g.from), to: scale_seg(&g.to), orientation: g.orientation })
            .collect(),
        punctures: c
            .punctures
            .iter()
            .map(|p| PunctureRef {
                rect: p.rect,
                side: p.side,
                offset: if p.side.is_horizontal() { &p.offset * lambda } else { p.offset.clone() },
            })
            .collect(),
    };
    validate(out)
}

/// Rotation of every rectangle by a quarter turn, `z -> i z`; the horizontal
/// foliation of the input becomes the vertical foliation of the output.
pub fn rotate_quarter(surface: &Surface) -> Surface {
    let c = &surface.complex;
    let rot_side = |side: Side| SIDES[(side.index() + 1) % 4];
    let rot_seg = |s: &SegmentRef| {
        let h = &c.rectangles[s.rect].height;
        let offset = match s.side {
            Side::Bottom | Side::Top => s.offset.clone(),
            Side::Right | Side::Left => &(h - &s.offset) - &s.length,
        };
        SegmentRef { rect: s.rect, side: rot_side(s.side), offset, length: s.length.clone() }
    };
    let out = RectangleComplex {
        field_d: c.field_d,
        rectangles: c
            .rectangles
            .iter()
            .map(|r| Rectangle { id: r.id, width: r.height.clone(), height: r.width.clone() })
            .collect(),
        gluings: c
            .gluings
            .iter()
            .map(|g| Gluing { from: rot_seg(&g.from), to: rot_seg(&g.to), orientation: g.orientation })
            .collect(),
        punctures: c
            .punctures
            .iter()
            .map(|p| PunctureRef {
                rect: p.rect,
                side: rot_side(p.side),
                offset: match p.side {
                    Side::Bottom | Side::Top => p.offset.clone(),
                    Side::Right | Side::Left => &c.rectangles[p.rect].height - &p.offset,
                },
            })
            .collect(),
    };
    validate(out).expect("rotation preserves validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn torus_has_one_regular_punctured_vertex() {
        let s = fixtures::torus();
        assert_eq!(s.vertices().len(), 1);
        let v = &s.vertices()[0];
        assert_eq!(v.cone, 2);
        assert!(v.puncture);
        assert_eq!(v.vertical_dirs().len(), 2);
        assert_eq!(s.area(), Scalar::one());
        assert_eq!(s.euler_characteristic(), 0);
    }

    #[test]
    fn l_origami_has_a_six_pi_point() {
        let s = fixtures::l_origami();
        let sing = s.singularities();
        assert_eq!(sing.len(), 1);
        assert_eq!(sing[0].cone_angle_pi, 6);
        assert_eq!(s.area(), Scalar::from_int(3));
        assert_eq!(s.genus(), 2);
    }

    #[test]
    fn left_glued_to_top_is_mixed() {
        let txt = r#"{"field_d":1,"rectangles":[{"id":0,"width":"1","height":"1"}],
          "gluings":[{"from":{"rect":0,"side":"left","offset":"0","length":"1"},
                      "to":{"rect":0,"side":"top","offset":"0","length":"1"},"orientation":"translation"}]}"#;
        assert!(matches!(Surface::from_json(txt), Err(SurfaceError::MixedOrientation(..))));
    }

    #[test]
    fn structural_errors() {
        let base = |glue: &str| {
            format!(
                r#"{{"field_d":1,"rectangles":[{{"id":0,"width":"1","height":"1"}},{{"id":1,"width":"1","height":"1"}}],"gluings":[{}]}}"#,
                glue
            )
        };
        let seg = |r: usize, side: &str, o: &str, l: &str| {
            format!(r#"{{"rect":{},"side":"{}","offset":"{}","length":"{}"}}"#, r, side, o, l)
        };
        let glue = |a: String, b: String, o: &str| format!(r#"{{"from":{},"to":{},"orientation":"{}"}}"#, a, b, o);
        let torus0 = [
            glue(seg(0, "left", "0", "1"), seg(0, "right", "0", "1"), "translation"),
            glue(seg(0, "bottom", "0", "1"), seg(0, "top", "0", "1"), "translation"),
        ];
        let torus1 = [
            glue(seg(1, "left", "0", "1"), seg(1, "right", "0", "1"), "translation"),
            glue(seg(1, "bottom", "0", "1"), seg(1, "top", "0", "1"), "translation"),
        ];
        let all = [torus0.clone(), torus1.clone()].concat().join(",");
        assert_eq!(Surface::from_json(&base(&all)).unwrap_err(), SurfaceError::Disconnected);
        let short = [torus0[0].clone(), glue(seg(0, "bottom", "0", "1/2"), seg(0, "top", "0", "1/2"), "translation")]
            .into_iter()
            .chain(torus1.clone())
            .collect::<Vec<_>>()
            .join(",");
        assert!(matches!(Surface::from_json(&base(&short)), Err(SurfaceError::PartitionMismatch { .. })));
        let uneven = [torus0[0].clone(), glue(seg(0, "bottom", "0", "1"), seg(0, "top", "0", "1/2"), "translation")]
            .into_iter()
            .chain(torus1.clone())
            .collect::<Vec<_>>()
            .join(",");
        assert!(matches!(Surface::from_json(&base(&uneven)), Err(SurfaceError::LengthMismatch(..))));
        let twice = [torus0.clone(), torus0.clone(), torus1.clone()].concat().join(",");
        assert!(matches!(Surface::from_json(&base(&twice)), Err(SurfaceError::NonInvolutive { .. })));
        let wrong = [torus0[0].clone(), glue(seg(0, "bottom", "0", "1"), seg(0, "top", "0", "1"), "halfTurn")]
            .into_iter()
            .chain(torus1)
            .collect::<Vec<_>>()
            .join(",");
        assert!(matches!(Surface::from_json(&base(&wrong)), Err(SurfaceError::InvalidPairing { .. })));
    }

    #[test]
    fn flow_scales_horizontal_data() {
        let s = fixtures::torus();
        assert_eq!(geodesic_flow(&s, &Scalar::one()).unwrap(), s);
        let f = geodesic_flow(&s, &Scalar::from_int(2)).unwrap();
        assert_eq!(f.rect(0).width, Scalar::from_int(2));
        assert_eq!(f.rect(0).height, Scalar::one());
        let l3 = geodesic_flow(&fixtures::l_origami(), &Scalar::from_int(3)).unwrap();
        assert!(l3.rects().iter().all(|r| r.width == Scalar::from_int(3) && r.height == Scalar::one()));
        assert!(geodesic_flow(&s, &Scalar::zero()).is_err());
    }

    #[test]
    fn rotation_swaps_dimensions_and_keeps_cone_data() {
        let l = fixtures::l_origami();
        let r = rotate_quarter(&l);
        assert_eq!(r.singularities()[0].cone_angle_pi, 6);
        assert_eq!(rotate_quarter(&rotate_quarter(&rotate_quarter(&r))), l);
        let p = fixtures::pillowcase();
        let rp = rotate_quarter(&p);
        assert_eq!(rp.singularities().len(), 4);
        assert!(rp.singularities().iter().all(|s| s.cone_angle_pi == 1));
    }

    #[test]
    fn round_trip_is_canonical() {
        for s in [fixtures::torus(), fixtures::l_origami(), fixtures::golden_torus(), fixtures::pillowcase()] {
            let back = Surface::from_json(&s.to_json()).unwrap();
            assert_eq!(back.to_json(), s.to_json());
        }
    }
}
