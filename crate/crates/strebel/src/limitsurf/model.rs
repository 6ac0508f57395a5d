use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foliation::{CriticalGraph, FoliationDecomposition};
use crate::numeric::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LimitError {
    #[error("graph is not admissible: {0}")]
    NotAdmissible(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("no graph component {0}")]
    NoComponent(usize),
}

/// How a boundary cycle of the thickened graph closes up in the limit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "end", rename_all = "camelCase")]
pub enum EndTag {
    SemiInfiniteCylinder { circumference: Scalar },
    /// Pole of the limit differential glued from `order - 2` half planes.
    Pole { order: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelVertex {
    /// Surface vertex id, or the index for standalone graphs.
    pub id: usize,
    pub puncture: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelHalfEdge {
    pub vertex: usize,
    /// Other end of the saddle connection; `None` for an infinite ray.
    pub twin: Option<usize>,
    pub length: Option<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelFace {
    pub half_edges: Vec<usize>,
    #[serde(flatten)]
    pub tag: EndTag,
    /// Foliation component of the surface this face opens into.
    pub region: Option<usize>,
}

/// One component of the half-plane limit surface.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LimitModel {
    pub vertices: Vec<ModelVertex>,
    pub half_edges: Vec<ModelHalfEdge>,
    /// Next half-edge counter-clockwise around the same vertex.
    pub sigma: Vec<usize>,
    pub faces: Vec<ModelFace>,
    pub euler: i64,
    pub genus: i64,
    pub punctures: usize,
    pub marked: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpecVertex {
    #[serde(default)]
    pub puncture: bool,
    /// Half-edge ids in counter-clockwise order.
    pub half_edges: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpecEdge {
    pub half_edges: [usize; 2],
    pub length: Scalar,
}

/// Standalone admissible metric graph with explicit ribbon data.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphSpec {
    pub vertices: Vec<SpecVertex>,
    pub edges: Vec<SpecEdge>,
    #[serde(default)]
    pub rays: Vec<usize>,
}

impl LimitModel {
    fn assemble(
        vertices: Vec<ModelVertex>,
        rotation: &[Vec<usize>],
        half_edges: Vec<ModelHalfEdge>,
        region_of: impl Fn(&[usize]) -> Option<usize>,
    ) -> Result<LimitModel, LimitError> {
        let n = half_edges.len();
        let mut sigma = vec![usize::MAX; n];
        for ring in rotation {
            if ring.is_empty() {
                return Err(LimitError::NotAdmissible("vertex without half-edges".into()));
            }
            for (j, &h) in ring.iter().enumerate() {
                sigma[h] = ring[(j + 1) % ring.len()];
            }
        }
        let alpha = |h: usize| half_edges[h].twin.unwrap_or(h);
        let mut face_of = vec![usize::MAX; n];
        let mut faces = Vec::new();
        for h in 0..n {
            if face_of[h] != usize::MAX {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = h;
            while face_of[cur] == usize::MAX {
                face_of[cur] = faces.len();
                cycle.push(cur);
                cur = sigma[alpha(cur)];
            }
            let stubs = cycle.iter().filter(|&&k| half_edges[k].twin.is_none()).count();
            let tag = if stubs > 0 {
                EndTag::Pole { order: stubs + 2 }
            } else {
                let mut c = Scalar::zero();
                for &k in &cycle {
                    c += half_edges[k].length.as_ref().expect("finite edge");
                }
                EndTag::SemiInfiniteCylinder { circumference: c }
            };
            let region = region_of(&cycle);
            faces.push(ModelFace { half_edges: cycle, tag, region });
        }
        let edges = half_edges.iter().filter(|h| h.twin.is_some()).count() / 2;
        let euler = vertices.len() as i64 - edges as i64;
        let punctures = faces.len();
        let model = LimitModel {
            marked: vertices.iter().filter(|v| v.puncture).count(),
            genus: (2 - punctures as i64 - euler) / 2,
            euler,
            punctures,
            vertices,
            half_edges,
            sigma,
            faces,
        };
        if !model.is_connected() {
            return Err(LimitError::Disconnected);
        }
        Ok(model)
    }

    /// Builds a model from explicit ribbon data. Every half-edge must sit at
    /// exactly one vertex and be either one end of a finite edge or a ray.
    pub fn from_spec(spec: &GraphSpec) -> Result<LimitModel, LimitError> {
        let n = spec.vertices.iter().map(|v| v.half_edges.len()).sum::<usize>();
        let mut at = vec![usize::MAX; n];
        for (v, sv) in spec.vertices.iter().enumerate() {
            for &h in &sv.half_edges {
                if h >= n || at[h] != usize::MAX {
                    return Err(LimitError::NotAdmissible(format!("half-edge {h} listed twice or out of range")));
                }
                at[h] = v;
            }
        }
        let mut twin: Vec<Option<Option<usize>>> = vec![None; n];
        let mut length = vec![None; n];
        for e in &spec.edges {
            let [a, b] = e.half_edges;
            if a >= n || b >= n || a == b || twin[a].is_some() || twin[b].is_some() {
                return Err(LimitError::NotAdmissible(format!("edge {a}-{b} reuses a half-edge")));
            }
            if !e.length.is_positive() {
                return Err(LimitError::NotAdmissible("edge length must be positive".into()));
            }
            twin[a] = Some(Some(b));
            twin[b] = Some(Some(a));
            length[a] = Some(e.length.clone());
            length[b] = Some(e.length.clone());
        }
        for &r in &spec.rays {
            if r >= n || twin[r].is_some() {
                return Err(LimitError::NotAdmissible(format!("ray {r} reuses a half-edge")));
            }
            twin[r] = Some(None);
        }
        let mut half_edges = Vec::with_capacity(n);
        for h in 0..n {
            let t = twin[h].ok_or_else(|| LimitError::NotAdmissible(format!("half-edge {h} has no edge or ray")))?;
            half_edges.push(ModelHalfEdge { vertex: at[h], twin: t, length: length[h].clone() });
        }
        let vertices = spec.vertices.iter().enumerate().map(|(i, v)| ModelVertex { id: i, puncture: v.puncture }).collect();
        let rotation: Vec<Vec<usize>> = spec.vertices.iter().map(|v| v.half_edges.clone()).collect();
        LimitModel::assemble(vertices, &rotation, half_edges, |_| None)
    }

    fn is_connected(&self) -> bool {
        if self.half_edges.is_empty() {
            return self.vertices.len() <= 1;
        }
        let mut seen = vec![false; self.half_edges.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(h) = queue.pop_front() {
            for next in [self.sigma[h], self.half_edges[h].twin.unwrap_or(h)] {
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Teichmüller space of the component is a point: `3g - 3 + n + marked <= 0`.
    pub fn is_trivial(&self) -> bool {
        3 * self.genus - 3 + (self.punctures + self.marked) as i64 <= 0
    }

    /// `(genus, ends, marked points)`.
    pub fn signature(&self) -> (i64, usize, usize) {
        (self.genus, self.punctures, self.marked)
    }

    fn face_of(&self) -> Vec<usize> {
        let mut f = vec![0; self.half_edges.len()];
        for (i, face) in self.faces.iter().enumerate() {
            for &h in &face.half_edges {
                f[h] = i;
            }
        }
        f
    }

    /// Isomorphism of metric ribbon graphs with end tags, restricted to face
    /// pairings accepted by `faces_match`.
    pub fn isomorphic_with(&self, other: &LimitModel, faces_match: &dyn Fn(&ModelFace, &ModelFace) -> bool) -> bool {
        let n = self.half_edges.len();
        if n != other.half_edges.len()
            || self.vertices.len() != other.vertices.len()
            || self.faces.len() != other.faces.len()
            || self.signature() != other.signature()
        {
            return false;
        }
        if n == 0 {
            return self.vertices[0].puncture == other.vertices[0].puncture;
        }
        let (fa, fb) = (self.face_of(), other.face_of());
        (0..n).any(|start| {
            let Some(map) = self.try_map(other, start) else { return false };
            (0..n).all(|h| {
                let (x, y) = (&self.faces[fa[h]], &other.faces[fb[map[h]]]);
                x.tag == y.tag && faces_match(x, y)
            })
        })
    }

    pub fn isomorphic(&self, other: &LimitModel) -> bool {
        self.isomorphic_with(other, &|_, _| true)
    }

    fn try_map(&self, other: &LimitModel, image_of_zero: usize) -> Option<Vec<usize>> {
        let n = self.half_edges.len();
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        let mut queue = VecDeque::new();
        let mut assign = |h: usize, k: usize, map: &mut Vec<usize>, queue: &mut VecDeque<usize>| -> bool {
            if map[h] != usize::MAX {
                return map[h] == k;
            }
            if used[k] {
                return false;
            }
            let (a, b) = (&self.half_edges[h], &other.half_edges[k]);
            if a.twin.is_some() != b.twin.is_some()
                || a.length != b.length
                || self.vertices[a.vertex].puncture != other.vertices[b.vertex].puncture
            {
                return false;
            }
            map[h] = k;
            used[k] = true;
            queue.push_back(h);
            true
        };
        if !assign(0, image_of_zero, &mut map, &mut queue) {
            return None;
        }
        while let Some(h) = queue.pop_front() {
            let k = map[h];
            if !assign(self.sigma[h], other.sigma[k], &mut map, &mut queue) {
                return None;
            }
            if let (Some(t), Some(u)) = (self.half_edges[h].twin, other.half_edges[k].twin) {
                if !assign(t, u, &mut map, &mut queue) {
                    return None;
                }
            }
        }
        map.iter().all(|&k| k != usize::MAX).then_some(map)
    }
}

/// Model of the limit component for graph component `index`. Faces are
/// labelled with the foliation component they open into when a
/// decomposition is supplied.
pub fn build_limit_model(
    graph: &CriticalGraph,
    dec: Option<&FoliationDecomposition>,
    index: usize,
) -> Result<LimitModel, LimitError> {
    let comps = graph.components();
    let comp = comps.get(index).ok_or(LimitError::NoComponent(index))?;
    let ribbon = graph.ribbon();
    let members: Vec<usize> = comp.iter().map(|&i| graph.vertices[i].vertex).collect();
    let global: Vec<usize> =
        (0..ribbon.half_edges.len()).filter(|&h| members.contains(&ribbon.half_edges[h].vertex)).collect();
    let local = |g: usize| global.iter().position(|&x| x == g).expect("half-edge in component");
    let vertices: Vec<ModelVertex> =
        comp.iter().map(|&i| ModelVertex { id: graph.vertices[i].vertex, puncture: graph.vertices[i].puncture }).collect();
    let half_edges: Vec<ModelHalfEdge> = global
        .iter()
        .map(|&g| {
            let vertex = members.iter().position(|&v| v == ribbon.half_edges[g].vertex).expect("member");
            match ribbon.edge_of[g] {
                Some(e) => ModelHalfEdge {
                    vertex,
                    twin: Some(local(ribbon.alpha[g])),
                    length: Some(graph.edges[e].length.clone()),
                },
                None => ModelHalfEdge { vertex, twin: None, length: None },
            }
        })
        .collect();
    let mut rotation = vec![Vec::new(); vertices.len()];
    for (l, &g) in global.iter().enumerate() {
        rotation[half_edges[l].vertex].push(g);
    }
    let rotation: Vec<Vec<usize>> = rotation
        .into_iter()
        .map(|ring| {
            // Order each ring by following the ribbon's sigma from its first element.
            let mut out = vec![ring[0]];
            let mut cur = ribbon.sigma[ring[0]];
            while cur != ring[0] {
                out.push(cur);
                cur = ribbon.sigma[cur];
            }
            out.into_iter().map(local).collect()
        })
        .collect();
    let region_of = |cycle: &[usize]| dec.map(|d| d.face_component[ribbon.face_of[global[cycle[0]]]]);
    LimitModel::assemble(vertices, &rotation, half_edges, region_of)
}

/// One model per component of the critical graph.
pub fn limit_models(graph: &CriticalGraph, dec: Option<&FoliationDecomposition>) -> Result<Vec<LimitModel>, LimitError> {
    (0..graph.components().len()).map(|i| build_limit_model(graph, dec, i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum DbarTerm {
    ExactZero,
    Infinite,
    NotComputable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DbarReport {
    pub term: DbarTerm,
    pub reason: String,
    /// Component pairing realizing the verdict, when one exists.
    pub matching: Vec<(usize, usize)>,
    /// Some pairing exists if face labels are ignored.
    pub unmarked_isomorphic: bool,
}

fn find_matching(a: &[LimitModel], b: &[LimitModel], ok: &dyn Fn(usize, usize) -> bool) -> Option<Vec<(usize, usize)>> {
    fn go(i: usize, n: usize, used: &mut [bool], out: &mut Vec<(usize, usize)>, ok: &dyn Fn(usize, usize) -> bool) -> bool {
        if i == n {
            return true;
        }
        for j in 0..used.len() {
            if !used[j] && ok(i, j) {
                used[j] = true;
                out.push((i, j));
                if go(i + 1, n, used, out, ok) {
                    return true;
                }
                out.pop();
                used[j] = false;
            }
        }
        false
    }
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut out = Vec::new();
    go(0, a.len(), &mut used, &mut out, ok).then_some(out)
}

/// Partial evaluation of the limit Teichmüller distance. Zero when the
/// components pair up so that each pair is trivial of equal type or
/// isomorphic as labelled metric ribbon graphs; infinite when the
/// topological types cannot be paired; otherwise not computable.
/// `region_map` sends a foliation component of the first surface to its
/// partner on the second; faces must respect it for a marked match.
pub fn dbar_distance(a: &[LimitModel], b: &[LimitModel], region_map: Option<&dyn Fn(usize) -> Option<usize>>) -> DbarReport {
    let types_match = |i: usize, j: usize| a[i].signature() == b[j].signature();
    if find_matching(a, b, &types_match).is_none() {
        return DbarReport {
            term: DbarTerm::Infinite,
            reason: "limit components have different topological types".into(),
            matching: Vec::new(),
            unmarked_isomorphic: false,
        };
    }
    let marked_faces = |x: &ModelFace, y: &ModelFace| match (region_map, x.region, y.region) {
        (Some(f), Some(rx), Some(ry)) => f(rx) == Some(ry),
        _ => true,
    };
    let trivial = |i: usize, j: usize| types_match(i, j) && a[i].is_trivial();
    let marked = |i: usize, j: usize| trivial(i, j) || a[i].isomorphic_with(&b[j], &marked_faces);
    let unmarked = |i: usize, j: usize| trivial(i, j) || a[i].isomorphic(&b[j]);
    if let Some(m) = find_matching(a, b, &marked) {
        let all_trivial = m.iter().all(|&(i, _)| a[i].is_trivial());
        let reason = if all_trivial {
            "every limit component has trivial Teichmüller space"
        } else {
            "limit components are isometric as marked ribbon graphs"
        };
        return DbarReport { term: DbarTerm::ExactZero, reason: reason.into(), matching: m, unmarked_isomorphic: true };
    }
    let un = find_matching(a, b, &unmarked);
    DbarReport {
        term: DbarTerm::NotComputable,
        reason: if un.is_some() {
            "graphs agree only up to a relabelling of the ends".into()
        } else {
            "non-trivial limit components with different graphs".into()
        },
        unmarked_isomorphic: un.is_some(),
        matching: un.unwrap_or_default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::foliation::{analyze, Budgets};
    use crate::surface::geodesic_flow;

    fn models(s: &crate::surface::Surface) -> Vec<LimitModel> {
        let (g, d) = analyze(s, &Budgets::default()).unwrap();
        limit_models(&g, Some(&d)).unwrap()
    }

    #[test]
    fn torus_loop_gives_two_cylinder_ends() {
        let m = models(&fixtures::torus());
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].signature(), (0, 2, 1));
        assert!(m[0].is_trivial());
        for f in &m[0].faces {
            assert_eq!(f.tag, EndTag::SemiInfiniteCylinder { circumference: Scalar::one() });
        }
    }

    #[test]
    fn golden_torus_is_a_plane_with_one_pole() {
        let m = models(&fixtures::golden_torus());
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].signature(), (0, 1, 1));
        assert_eq!(m[0].faces[0].tag, EndTag::Pole { order: 4 });
    }

    #[test]
    fn three_punctured_sphere_from_two_half_planes_and_two_cylinders() {
        // Triangle u v w, loop at u, rays at v and w.
        let text = r#"{
            "vertices": [
                {"halfEdges": [0, 1, 2, 3]},
                {"halfEdges": [4, 6, 5]},
                {"halfEdges": [7, 9, 8]}
            ],
            "edges": [
                {"halfEdges": [0, 4], "length": "1"},
                {"halfEdges": [5, 7], "length": "1"},
                {"halfEdges": [1, 8], "length": "1"},
                {"halfEdges": [2, 3], "length": "2"}
            ],
            "rays": [6, 9]
        }"#;
        let spec: GraphSpec = serde_json::from_str(text).unwrap();
        let m = LimitModel::from_spec(&spec).unwrap();
        assert_eq!((m.euler, m.genus, m.punctures), (-1, 0, 3));
        let mut tags: Vec<String> = m.faces.iter().map(|f| format!("{:?}", f.tag)).collect();
        tags.sort();
        assert_eq!(tags.iter().filter(|t| t.starts_with("SemiInfinite")).count(), 2);
        assert!(m.faces.iter().any(|f| f.tag == EndTag::Pole { order: 4 }));
        assert!(m.is_trivial());
    }

    #[test]
    fn flow_preserves_models() {
        for (name, text) in fixtures::ALL {
            let s = crate::surface::Surface::from_json(text).unwrap();
            let a = models(&s);
            let b = models(&geodesic_flow(&s, &Scalar::from_int(5)).unwrap());
            let r = dbar_distance(&a, &b, Some(&|j| Some(j)));
            assert_eq!(r.term, DbarTerm::ExactZero, "{name}");
            for (x, y) in a.iter().zip(&b) {
                assert!(x.isomorphic(y), "{name}");
            }
        }
    }

    #[test]
    fn type_mismatch_is_infinite() {
        let a = models(&fixtures::torus());
        let b = models(&fixtures::l_origami());
        assert_eq!(dbar_distance(&a, &b, None).term, DbarTerm::Infinite);
    }

    #[test]
    fn nonisometric_nontrivial_components_are_not_computable() {
        let l = fixtures::l_origami();
        let a = models(&l);
        assert!(!a[0].is_trivial());
        let mut stretched = l.complex().clone();
        for r in &mut stretched.rectangles {
            r.height = &r.height * &Scalar::from_int(2);
        }
        for g in &mut stretched.gluings {
            for s in [&mut g.from, &mut g.to] {
                if matches!(s.side, crate::surface::Side::Left | crate::surface::Side::Right) {
                    s.offset = &s.offset * &Scalar::from_int(2);
                    s.length = &s.length * &Scalar::from_int(2);
                }
            }
        }
        let tall = crate::surface::validate(stretched).unwrap();
        let mut b = models(&tall);
        assert!(!a[0].isomorphic(&b[0]));
        assert_eq!(dbar_distance(&a, &b, None).term, DbarTerm::NotComputable);
        b = models(&l);
        assert_eq!(dbar_distance(&a, &b, None).term, DbarTerm::ExactZero);
    }
}
