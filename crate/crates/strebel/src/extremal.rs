//! Two-sided extremal length bounds, desk checks of the extremal-length
//! formula for the Teichmüller distance and of the stretch-ray limit, and the
//! explicit quasiconformal maps used to glue rectangles and cylinders.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foliation::{analyze, Budgets, ComponentKind, CriticalGraph, FoliationDecomposition, FoliationError};
use crate::iet::UeStatus;
use crate::numeric::{LogRatio, NumericError, Scalar};
use crate::surface::{geodesic_flow, Side, Surface, SurfaceError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtremalError {
    #[error("unsupported curve: {0}")]
    Unsupported(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("dilatation must be at least 1, got {0}")]
    DilatationBelowOne(String),
    #[error("minimal component {0} carries no unique ergodicity certificate")]
    UncertifiedMinimal(usize),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Curves with a computable flat geodesic representative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Curve {
    /// Core of a cylinder of the vertical decomposition.
    CylinderCore { component: usize },
    /// Closed vertical leaf through abscissa `x` of a rectangle.
    VerticalLeaf { rect: usize, x: Scalar },
    /// Closed horizontal leaf at height `y` of a rectangle.
    HorizontalLeaf { rect: usize, y: Scalar },
    /// `p` horizontal periods plus `q` vertical periods on a one-rectangle
    /// translation torus.
    TorusClass { p: i64, q: i64 },
}

impl Curve {
    pub fn horizontal() -> Curve {
        Curve::TorusClass { p: 1, q: 0 }
    }

    pub fn vertical() -> Curve {
        Curve::TorusClass { p: 0, q: 1 }
    }

    /// The same curve on `geodesic_flow(surface, lambda)`.
    pub fn stretched(&self, lambda: &Scalar) -> Curve {
        match self {
            Curve::VerticalLeaf { rect, x } => Curve::VerticalLeaf { rect: *rect, x: x * lambda },
            other => other.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtBounds {
    pub lower: Scalar,
    pub upper: Scalar,
    pub lower_method: &'static str,
    pub upper_method: &'static str,
}

impl ExtBounds {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, v: &Scalar) -> bool {
        self.lower <= *v && *v <= self.upper
    }
}

/// Periods `(W, 0)` and `(s, H)` of a one-rectangle translation torus.
fn torus_periods(surface: &Surface) -> Result<[(Scalar, Scalar); 2], ExtremalError> {
    let unsupported = || ExtremalError::Unsupported("not a one-rectangle translation torus".into());
    if surface.rects().len() != 1 {
        return Err(unsupported());
    }
    let r = surface.rect(0);
    let left = surface.segments(0, Side::Left);
    if left.len() != 1 || left[0].flip || left[0].partner_side != Side::Right || !left[0].partner_start.is_zero() {
        return Err(unsupported());
    }
    let bottom = surface.segments(0, Side::Bottom);
    let mut shift: Option<Scalar> = None;
    for seg in bottom {
        if seg.flip || seg.partner_side != Side::Top {
            return Err(unsupported());
        }
        let s = &seg.partner_start - &seg.start;
        match &shift {
            None => shift = Some(s),
            Some(s0) => {
                let k = &(&s - s0) / &r.width;
                if !k.is_rational() || !k.rational_part().is_integer() {
                    return Err(unsupported());
                }
            }
        }
    }
    let s = shift.ok_or_else(unsupported)?;
    Ok([(r.width.clone(), Scalar::zero()), (s, r.height.clone())])
}

fn torus_class_vector(surface: &Surface, p: i64, q: i64) -> Result<(Scalar, Scalar), ExtremalError> {
    if p.gcd(&q) != 1 {
        return Err(ExtremalError::Unsupported(format!("class ({p}, {q}) is not primitive")));
    }
    let [w1, w2] = torus_periods(surface)?;
    let (p, q) = (Scalar::from_int(p), Scalar::from_int(q));
    Ok((&(&p * &w1.0) + &(&q * &w2.0), &q * &w2.1))
}

/// A closed horizontal leaf with the widest flat band around it and its
/// crossings with the vertical decomposition.
#[derive(Clone, Debug)]
struct HorizontalLeaf {
    length: Scalar,
    band: Scalar,
    /// Per component: number of crossings and transverse measure picked up.
    crossings: BTreeMap<usize, (usize, Scalar)>,
}

fn seg_position(surface: &Surface, rect: usize, side: Side, y: &Scalar) -> Option<usize> {
    surface.segments(rect, side).iter().position(|s| s.start < *y && *y < s.end)
}

fn trace_horizontal(
    surface: &Surface,
    graph: &CriticalGraph,
    dec: &FoliationDecomposition,
    rect: usize,
    y: &Scalar,
) -> Result<HorizontalLeaf, ExtremalError> {
    let unsupported = |m: &str| ExtremalError::Unsupported(m.to_string());
    if rect >= surface.rects().len() {
        return Err(unsupported("rectangle out of range"));
    }
    let limit = 4 * surface.rects().len() * (1 + surface.complex().gluings.len());
    let mut visits: Vec<(usize, Scalar)> = Vec::new();
    // Whether the side crossed on leaving each visit lies on the critical graph.
    let mut exits_on_graph: Vec<bool> = Vec::new();
    let mut below: Option<Scalar> = None;
    let mut above: Option<Scalar> = None;
    let (mut r, mut yy) = (rect, y.clone());
    loop {
        let rr = surface.rect(r);
        if !(yy.is_positive() && yy < rr.height) {
            return Err(unsupported("leaf runs along a horizontal side"));
        }
        let idx = seg_position(surface, r, Side::Right, &yy).ok_or_else(|| unsupported("leaf meets a singular point"))?;
        let seg = &surface.segments(r, Side::Right)[idx];
        if seg.flip || seg.partner_side != Side::Left {
            return Err(unsupported("leaf crosses a half-turn gluing"));
        }
        let b = &yy - &seg.start;
        let a = &seg.end - &yy;
        below = Some(below.map_or(b.clone(), |v| v.min(b)));
        above = Some(above.map_or(a.clone(), |v| v.min(a)));
        let next = seg.partner_rect;
        let ny = seg.map(&yy);
        let on_graph = graph.side_on_graph(r, Side::Right, idx)
            || seg_position(surface, next, Side::Left, &ny).is_some_and(|j| graph.side_on_graph(next, Side::Left, j))
            || graph.cuts(r).contains(&rr.width)
            || graph.cuts(next).iter().any(Scalar::is_zero);
        visits.push((r, yy.clone()));
        exits_on_graph.push(on_graph);
        r = next;
        yy = ny;
        if r == rect && yy == *y {
            break;
        }
        if visits.len() > limit {
            return Err(unsupported("horizontal leaf does not close up"));
        }
    }
    let (mut below, mut above) = (below.expect("one visit"), above.expect("one visit"));
    for (i, (ri, yi)) in visits.iter().enumerate() {
        for (rj, yj) in &visits[i + 1..] {
            if ri == rj {
                let half = &(yi - yj).abs() / &Scalar::from_int(2);
                below = below.min(half.clone());
                above = above.min(half);
            }
        }
    }
    let length = visits.iter().fold(Scalar::zero(), |acc, (ri, _)| &acc + &surface.rect(*ri).width);

    // Pieces of the leaf inside each strip, flagged when a critical leaf is
    // crossed just before them.
    let mut pieces: Vec<(usize, Scalar, bool)> = Vec::new();
    let n = visits.len();
    for (i, (ri, _)) in visits.iter().enumerate() {
        let mut strips: Vec<(Scalar, Scalar, usize)> = dec
            .components
            .iter()
            .flat_map(|c| c.strips.iter().filter(|s| s.rect == *ri).map(move |s| (s.start.clone(), s.end.clone(), c.id)))
            .collect();
        strips.sort_by(|a, b| a.0.cmp(&b.0));
        for (k, (s, e, c)) in strips.into_iter().enumerate() {
            let boundary = if k == 0 { exits_on_graph[(i + n - 1) % n] } else { true };
            pieces.push((c, &e - &s, boundary));
        }
    }
    let first = pieces.iter().position(|p| p.2).unwrap_or(0);
    pieces.rotate_left(first);
    let mut runs: Vec<(usize, Scalar)> = Vec::new();
    for (c, len, boundary) in pieces {
        match runs.last_mut() {
            Some(last) if !boundary => {
                if last.0 != c {
                    return Err(unsupported("strip components disagree along the leaf"));
                }
                last.1 = &last.1 + &len;
            }
            _ => runs.push((c, len)),
        }
    }
    let mut crossings: BTreeMap<usize, (usize, Scalar)> = BTreeMap::new();
    for (c, len) in runs {
        if let ComponentKind::Cylinder { width, .. } = &dec.components[c].kind {
            if len != *width {
                return Err(unsupported("leaf crosses a cylinder only partially"));
            }
        }
        let e = crossings.entry(c).or_insert((0, Scalar::zero()));
        e.0 += 1;
        e.1 = &e.1 + &len;
    }
    Ok(HorizontalLeaf { length, band: &below + &above, crossings })
}

/// Energy of the test function on one cylinder of the Dirichlet chain: the
/// band of height `band` is opened to the whole closed leaf of length `leaf`,
/// with linear transition layers of width `delta` at both ends.
fn chain_energy(width: &Scalar, leaf: &Scalar, band: &Scalar) -> Scalar {
    let direct = width / leaf;
    if band == leaf {
        return direct;
    }
    let gap = leaf - band;
    let ideal = ((&gap * band).to_f64()).sqrt();
    let mut delta = Scalar::from_ratio(((ideal * 1024.0).ceil() as i64).max(1), 1024);
    let half_width = width / &Scalar::from_int(2);
    if delta > half_width {
        delta = half_width;
    }
    let two_thirds = Scalar::from_ratio(2, 3);
    let cross = &(&two_thirds * &delta) * &(&band.recip() - &leaf.recip());
    let shear = &(&two_thirds * &(&gap * &gap)) / &(leaf * &delta);
    &(&direct + &cross) + &shear
}

fn ensure_measured(dec: &FoliationDecomposition, c: usize) -> Result<(), ExtremalError> {
    match &dec.components[c].kind {
        ComponentKind::Cylinder { .. } => Ok(()),
        ComponentKind::Minimal { ue_status, .. } => match ue_status {
            UeStatus::Certified | UeStatus::Asserted => Ok(()),
            UeStatus::Unknown => Err(ExtremalError::UncertifiedMinimal(c)),
        },
    }
}

/// Bounds on `Ext(curve)` from an analyzed surface.
pub fn ext_bounds_with(
    surface: &Surface,
    graph: &CriticalGraph,
    dec: &FoliationDecomposition,
    curve: &Curve,
) -> Result<ExtBounds, ExtremalError> {
    let area = surface.area();
    match curve {
        Curve::TorusClass { p, q } => torus_bounds(surface, *p, *q),
        Curve::CylinderCore { component } => {
            let comp = dec
                .components
                .get(*component)
                .ok_or_else(|| ExtremalError::Unsupported(format!("no component {component}")))?;
            match &comp.kind {
                ComponentKind::Cylinder { leaf_length, width } => Ok(ExtBounds {
                    lower: &(leaf_length * leaf_length) / &area,
                    upper: leaf_length / width,
                    lower_method: "flatLength",
                    upper_method: "cylinder",
                }),
                ComponentKind::Minimal { .. } => {
                    Err(ExtremalError::Unsupported(format!("component {component} is minimal")))
                }
            }
        }
        Curve::VerticalLeaf { rect, x } => {
            let r = surface
                .rects()
                .get(*rect)
                .ok_or_else(|| ExtremalError::Unsupported("rectangle out of range".into()))?;
            if !(x.is_positive() && *x < r.width) || graph.cuts(*rect).contains(x) {
                return Err(ExtremalError::Unsupported("vertical leaf is critical or on a side".into()));
            }
            let component = dec.component_near(*rect, x, true);
            ext_bounds_with(surface, graph, dec, &Curve::CylinderCore { component })
        }
        Curve::HorizontalLeaf { rect, y } => {
            let leaf = trace_horizontal(surface, graph, dec, *rect, y)?;
            let flat = &(&leaf.length * &leaf.length) / &area;
            let weighted = leaf.crossings.iter().fold(Scalar::zero(), |acc, (c, (_, x))| {
                let comp = &dec.components[*c];
                if comp.is_cylinder() {
                    &acc + &(&(x * x) / &comp.area)
                } else {
                    acc
                }
            });
            let (lower, lower_method) = if weighted > flat { (weighted, "cylinderWeights") } else { (flat, "flatLength") };
            let band = &leaf.length / &leaf.band;
            let chain = leaf
                .crossings
                .iter()
                .map(|(c, (count, _))| match &dec.components[*c].kind {
                    ComponentKind::Cylinder { leaf_length, width } if *count == 1 && leaf.band <= *leaf_length => {
                        Some(chain_energy(width, leaf_length, &leaf.band))
                    }
                    _ => None,
                })
                .try_fold(Scalar::zero(), |acc, e| e.map(|e| &acc + &e));
            let (upper, upper_method) = match chain {
                Some(c) if c < band => (c, "dirichletChain"),
                _ => (band, "flatBand"),
            };
            Ok(ExtBounds { lower, upper, lower_method, upper_method })
        }
    }
}

fn torus_bounds(surface: &Surface, p: i64, q: i64) -> Result<ExtBounds, ExtremalError> {
    let (vx, vy) = torus_class_vector(surface, p, q)?;
    let ext = &(&(&vx * &vx) + &(&vy * &vy)) / &surface.area();
    Ok(ExtBounds { lower: ext.clone(), upper: ext, lower_method: "flatTorus", upper_method: "flatTorus" })
}

/// Bounds on `Ext(curve)`, analyzing the vertical foliation when needed.
pub fn ext_bounds(surface: &Surface, curve: &Curve, budgets: &Budgets) -> Result<ExtBounds, ExtremalError> {
    if let Curve::TorusClass { p, q } = curve {
        return torus_bounds(surface, *p, *q);
    }
    let (graph, dec) = analyze(surface, budgets)?;
    ext_bounds_with(surface, &graph, &dec, curve)
}

/// `sum_j x_j^2 / Area_j` over the vertical components, `x_j` the transverse
/// measure the curve picks up in component `j`.
pub fn walsh_target(surface: &Surface, curve: &Curve, budgets: &Budgets) -> Result<Scalar, ExtremalError> {
    match curve {
        Curve::TorusClass { p, q } => {
            let (vx, _) = torus_class_vector(surface, *p, *q)?;
            Ok(&(&vx * &vx) / &surface.area())
        }
        Curve::CylinderCore { .. } | Curve::VerticalLeaf { .. } => Ok(Scalar::zero()),
        Curve::HorizontalLeaf { rect, y } => {
            let (graph, dec) = analyze(surface, budgets)?;
            let leaf = trace_horizontal(surface, &graph, &dec, *rect, y)?;
            let mut total = Scalar::zero();
            for (c, (_, x)) in &leaf.crossings {
                ensure_measured(&dec, *c)?;
                total = &total + &(&(x * x) / &dec.components[*c].area);
            }
            Ok(total)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WalshRow {
    pub lambda: Scalar,
    pub bounds: ExtBounds,
    pub lower_scaled: Scalar,
    pub upper_scaled: Scalar,
    pub brackets: bool,
    pub relative_width: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WalshReport {
    pub target: Scalar,
    pub rows: Vec<WalshRow>,
    pub max_relative_error: Option<f64>,
    pub width_non_increasing: bool,
}

/// Bounds on `Ext(curve)/lambda` along the stretch ray against the limit.
pub fn walsh_limit_check(
    surface: &Surface,
    curve: &Curve,
    lambdas: &[Scalar],
    budgets: &Budgets,
) -> Result<WalshReport, ExtremalError> {
    let target = walsh_target(surface, curve, budgets)?;
    let mut rows = Vec::new();
    for lambda in lambdas {
        let stretched = geodesic_flow(surface, lambda)?;
        let bounds = ext_bounds(&stretched, &curve.stretched(lambda), budgets)?;
        let lower_scaled = &bounds.lower / lambda;
        let upper_scaled = &bounds.upper / lambda;
        let brackets = lower_scaled <= target && target <= upper_scaled;
        let relative_width = (!target.is_zero()).then(|| (&(&upper_scaled - &lower_scaled) / &target).to_f64());
        rows.push(WalshRow { lambda: lambda.clone(), bounds, lower_scaled, upper_scaled, brackets, relative_width });
    }
    let max_relative_error = (!target.is_zero()).then(|| {
        let t = target.to_f64();
        rows.iter()
            .map(|r| ((r.lower_scaled.to_f64() / t - 1.0).abs()).max((r.upper_scaled.to_f64() / t - 1.0).abs()))
            .fold(0.0, f64::max)
    });
    let widths: Vec<Scalar> = rows.iter().map(|r| &r.upper_scaled - &r.lower_scaled).collect();
    let width_non_increasing = widths.windows(2).all(|w| w[1] <= w[0]);
    Ok(WalshReport { target, rows, max_relative_error, width_non_increasing })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KerckhoffEntry {
    pub curve: Curve,
    pub before: ExtBounds,
    pub after: ExtBounds,
    /// Half log of the smallest ratio the bounds allow.
    pub certified: LogRatio,
    /// Half log of the largest ratio the bounds allow.
    pub optimistic: LogRatio,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KerckhoffReport {
    pub lambda: Scalar,
    pub distance: LogRatio,
    pub achieved: LogRatio,
    pub achieved_upper: LogRatio,
    pub gap: LogRatio,
    pub exact: bool,
    pub entries: Vec<KerckhoffEntry>,
}

/// Half log of the largest extremal length ratio between `surface` and its
/// stretch by `lambda` over a finite curve list, against `1/2 log lambda`.
pub fn kerckhoff_check(
    surface: &Surface,
    lambda: &Scalar,
    curves: &[Curve],
    budgets: &Budgets,
) -> Result<KerckhoffReport, ExtremalError> {
    if curves.is_empty() {
        return Err(ExtremalError::Hypothesis("empty curve list".into()));
    }
    let stretched = geodesic_flow(surface, lambda)?;
    let mut entries = Vec::new();
    for curve in curves {
        let before = ext_bounds(surface, curve, budgets)?;
        let after = ext_bounds(&stretched, &curve.stretched(lambda), budgets)?;
        let certified = LogRatio::half_log(&after.lower / &before.upper)?;
        let optimistic = LogRatio::half_log(&after.upper / &before.lower)?;
        entries.push(KerckhoffEntry { curve: curve.clone(), before, after, certified, optimistic });
    }
    let best = |f: fn(&KerckhoffEntry) -> &LogRatio| entries.iter().map(f).max().cloned().expect("non-empty");
    let achieved = best(|e| &e.certified);
    let achieved_upper = best(|e| &e.optimistic);
    let distance = LogRatio::half_log(lambda.clone())?;
    let gap = distance.sub(&achieved);
    let exact = achieved == achieved_upper;
    Ok(KerckhoffReport { lambda: lambda.clone(), distance, achieved, achieved_upper, gap, exact, entries })
}

/// Interval for the extremal length of the image family under a
/// `K`-quasiconformal map.
pub fn qc_distortion_check(k: &Scalar, ext: &ExtBounds) -> Result<ExtBounds, ExtremalError> {
    if *k < Scalar::one() {
        return Err(ExtremalError::DilatationBelowOne(k.to_string()));
    }
    Ok(ExtBounds { lower: &ext.lower / k, upper: &ext.upper * k, lower_method: "qcImage", upper_method: "qcImage" })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PowerMapReport {
    pub ratio: Scalar,
    pub expected: f64,
    pub samples: usize,
    pub max_dilatation: f64,
    pub min_dilatation: f64,
    pub max_deviation: f64,
    pub variance: f64,
}

/// Dilatation of `z -> |z|^(r-1) z` sampled on a polar grid of the annulus
/// `1/2 <= |z| <= 2`, from the exact partial derivatives.
pub fn annulus_power_map(ratio: &Scalar, samples: usize) -> Result<PowerMapReport, ExtremalError> {
    if !ratio.is_positive() {
        return Err(ExtremalError::Hypothesis("modulus ratio must be positive".into()));
    }
    let r = ratio.to_f64();
    let expected = r.max(1.0 / r);
    let side = ((samples.max(1) as f64).sqrt().ceil() as usize).max(1);
    let mut ks = Vec::with_capacity(side * side);
    for i in 0..side {
        let rho = 0.5 * 4f64.powf((i as f64 + 0.5) / side as f64);
        for j in 0..side {
            let theta = 2.0 * PI * (j as f64 + 0.5) / side as f64;
            let (x, y) = (rho * theta.cos(), rho * theta.sin());
            let base = rho.powf(r - 1.0);
            let radial = (r - 1.0) * rho.powf(r - 3.0);
            let (ux, uy) = (base + radial * x * x, radial * x * y);
            let (vx, vy) = (radial * x * y, base + radial * y * y);
            ks.push(dilatation_from_partials(ux, uy, vx, vy));
        }
    }
    let n = ks.len() as f64;
    let mean = ks.iter().sum::<f64>() / n;
    let variance = ks.iter().map(|k| (k - mean) * (k - mean)).sum::<f64>() / n;
    Ok(PowerMapReport {
        ratio: ratio.clone(),
        expected,
        samples: ks.len(),
        max_dilatation: ks.iter().cloned().fold(f64::MIN, f64::max),
        min_dilatation: ks.iter().cloned().fold(f64::MAX, f64::min),
        max_deviation: ks.iter().map(|k| (k - expected).abs()).fold(0.0, f64::max),
        variance,
    })
}

/// `(|f_z| + |f_zbar|) / (|f_z| - |f_zbar|)` for an orientation-preserving
/// Jacobian.
pub fn dilatation_from_partials(ux: f64, uy: f64, vx: f64, vy: f64) -> f64 {
    let fz = ((ux + vy) * (ux + vy) + (vx - uy) * (vx - uy)).sqrt() / 2.0;
    let fzb = ((ux - vy) * (ux - vy) + (vx + uy) * (vx + uy)).sqrt() / 2.0;
    (fz + fzb) / (fz - fzb)
}

/// Rectangles `[0,a] x [0,b]` and `[0,a'] x [0,b']` with marked left-side
/// points at heights `c < d` and `c' < d'`. `nominal_ratio` is the height
/// ratio the three side ratios approximate; it defaults to `b'/b`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AffineMapSpec {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    pub d: Scalar,
    pub a_image: Scalar,
    pub b_image: Scalar,
    pub c_image: Scalar,
    pub d_image: Scalar,
    #[serde(default)]
    pub nominal_ratio: Option<Scalar>,
}

/// `v = xy * x*y + y_coef * y + x_coef * x + constant` on `start <= y <= end`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Band {
    pub start: Scalar,
    pub end: Scalar,
    pub xy: Scalar,
    pub y_coef: Scalar,
    pub x_coef: Scalar,
    pub constant: Scalar,
}

impl Band {
    fn v(&self, x: &Scalar, y: &Scalar) -> Scalar {
        &(&(&(&(&self.xy * x) * y) + &(&self.y_coef * y)) + &(&self.x_coef * x)) + &self.constant
    }

    /// `(v_x, v_y)` at a point.
    fn partials(&self, x: &Scalar, y: &Scalar) -> (Scalar, Scalar) {
        (&(&self.xy * y) + &self.x_coef, &(&self.xy * x) + &self.y_coef)
    }

    fn partials_f64(&self, x: f64, y: f64) -> (f64, f64) {
        (self.xy.to_f64() * y + self.x_coef.to_f64(), self.xy.to_f64() * x + self.y_coef.to_f64())
    }

    /// The band polynomial restricted to a horizontal line, as (x coefficient, constant).
    fn on_line(&self, y: &Scalar) -> (Scalar, Scalar) {
        (&(&self.xy * y) + &self.x_coef, &(&self.y_coef * y) + &self.constant)
    }
}

/// `u = width_ratio * x`, `v` given band-wise.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AffineGlueMap {
    pub width: Scalar,
    pub width_ratio: Scalar,
    pub bands: [Band; 3],
}

impl AffineGlueMap {
    fn band_of(&self, y: &Scalar) -> &Band {
        self.bands.iter().find(|b| *y <= b.end).unwrap_or(&self.bands[2])
    }

    pub fn eval(&self, x: &Scalar, y: &Scalar) -> (Scalar, Scalar) {
        (&self.width_ratio * x, self.band_of(y).v(x, y))
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AffineReport {
    pub map: AffineGlueMap,
    pub width_ratio: Scalar,
    pub nominal_ratio: Scalar,
    pub epsilon: Scalar,
    pub middle_fraction: Scalar,
    pub aspect: Scalar,
    pub base_dilatation: Scalar,
    /// Largest `K + 1/K` over the band corners, which bounds it on the rectangle.
    pub corner_sum: Scalar,
    pub corner_dilatation: f64,
    pub corner_dilatation_exact: Option<Scalar>,
    pub bound: Option<Scalar>,
    pub kappa: Option<Scalar>,
    pub within_bound: Option<bool>,
    pub sampled_max: f64,
    pub grid: usize,
    pub sampled_within_corner: bool,
    pub continuous: bool,
    pub sides_linear: bool,
    pub sends_points: bool,
}

fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let (n, d) = (q.numer(), q.denom());
    let (sn, sd) = (n.sqrt(), d.sqrt());
    (&sn * &sn == *n && &sd * &sd == *d).then(|| BigRational::new(sn, sd))
}

/// `K` from `S = K + 1/K` when it is rational.
fn dilatation_from_sum(s: &Scalar) -> Option<Scalar> {
    if !s.is_rational() {
        return None;
    }
    let s = &s.rational_part();
    let disc = s * s - BigRational::from_integer(BigInt::from(4));
    let root = rational_sqrt(&disc)?;
    Some(Scalar::from_rational((s + root) / BigRational::from_integer(BigInt::from(2))))
}

/// The three-band piecewise bilinear map between two rectangles that is
/// affine on every side and sends the marked points to the marked points,
/// with an exact dilatation bound and a sampled cross-check.
pub fn affine_glue_map(spec: &AffineMapSpec, grid: usize) -> Result<AffineReport, ExtremalError> {
    let hyp = |m: &str| Err(ExtremalError::Hypothesis(m.to_string()));
    let AffineMapSpec { a, b, c, d, a_image, b_image, c_image, d_image, .. } = spec;
    if !(a.is_positive() && a_image.is_positive() && b.is_positive() && b_image.is_positive()) {
        return hyp("rectangle sides must be positive");
    }
    if !(c.is_positive() && c < d && d < b) {
        return hyp("need 0 < c < d < b");
    }
    if !(c_image.is_positive() && c_image < d_image && d_image < b_image) {
        return hyp("need 0 < c' < d' < b'");
    }
    if b > a {
        return hyp("height must not exceed width");
    }
    let width_ratio = a_image / a;
    let full = b_image / b;
    let low = c_image / c;
    let mid = &(d_image - c_image) / &(d - c);
    let high = &(b_image - d_image) / &(b - d);
    let nominal = spec.nominal_ratio.clone().unwrap_or_else(|| full.clone());
    if !nominal.is_positive() {
        return hyp("nominal ratio must be positive");
    }
    let one = Scalar::one();
    let two = Scalar::from_int(2);
    let dev = |r: &Scalar| (&(r / &nominal) - &one).abs();
    let epsilon = dev(&full).max(dev(&low)).max(dev(&high));

    let bands = [
        Band {
            start: Scalar::zero(),
            end: c.clone(),
            xy: &(&full - &low) / a,
            y_coef: low.clone(),
            x_coef: Scalar::zero(),
            constant: Scalar::zero(),
        },
        Band {
            start: c.clone(),
            end: d.clone(),
            xy: &(&full - &mid) / a,
            y_coef: mid.clone(),
            x_coef: &(c * &(&mid - &low)) / a,
            constant: c * &(&low - &mid),
        },
        Band {
            start: d.clone(),
            end: b.clone(),
            xy: &(&full - &high) / a,
            y_coef: high.clone(),
            x_coef: -&(&(b * &(&full - &high)) / a),
            constant: b_image - &(b * &high),
        },
    ];
    let map = AffineGlueMap { width: a.clone(), width_ratio: width_ratio.clone(), bands };

    let continuous = map.bands[0].on_line(c) == map.bands[1].on_line(c) && map.bands[1].on_line(d) == map.bands[2].on_line(d);
    let zero = Scalar::zero();
    let sides_linear = map.bands[0].on_line(&zero) == (Scalar::zero(), Scalar::zero())
        && map.bands[2].on_line(b) == (Scalar::zero(), b_image.clone())
        && map.bands.iter().all(|band| {
            let at_right = |y: &Scalar| band.v(a, y);
            at_right(&band.start) == &full * &band.start && at_right(&band.end) == &full * &band.end
        });
    let sends_points = map.eval(&zero, c).1 == *c_image && map.eval(&zero, d).1 == *d_image;

    let mut corner_sum: Option<Scalar> = None;
    for band in &map.bands {
        for x in [&zero, a] {
            for y in [&band.start, &band.end] {
                let (p, q) = band.partials(x, y);
                if !q.is_positive() {
                    return hyp("map is not orientation preserving");
                }
                let s = &(&(&(&width_ratio * &width_ratio) + &(&p * &p)) + &(&q * &q)) / &(&width_ratio * &q);
                corner_sum = Some(corner_sum.map_or(s.clone(), |m| m.max(s)));
            }
        }
    }
    let corner_sum = corner_sum.expect("corners");
    let cs = corner_sum.to_f64();
    let corner_dilatation = (cs + (cs * cs - 4.0).max(0.0).sqrt()) / 2.0;
    let corner_dilatation_exact = dilatation_from_sum(&corner_sum);

    let base_dilatation = (&width_ratio / &nominal).max(&nominal / &width_ratio);
    let middle_fraction = &(d - c) / b;
    let aspect = b / a;
    let eta = &(&two * &epsilon) / &middle_fraction;
    let (bound, kappa, within_bound) = if eta <= Scalar::from_ratio(1, 2) {
        let sigma = &(&(&(&two * &base_dilatation) * &epsilon) * &aspect) * &(&one + &(&two / &middle_fraction));
        let poly = &(&(&one + &sigma) + &(&(&sigma * &sigma) / &two)) + &(&sigma.pow(3) / &Scalar::from_int(8));
        let bound = &(&base_dilatation * &(&one + &(&two * &eta))) * &poly;
        let kappa = if epsilon.is_zero() { Scalar::zero() } else { &(&bound - &base_dilatation) / &epsilon };
        let within = corner_sum <= &bound + &bound.recip();
        (Some(bound), Some(kappa), Some(within))
    } else {
        (None, None, None)
    };

    let n = grid.max(2);
    let (af, bf, cf, df) = (a.to_f64(), b.to_f64(), c.to_f64(), d.to_f64());
    let cr = width_ratio.to_f64();
    let mut sampled_max: f64 = 0.0;
    for i in 0..n {
        let x = af * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let y = bf * j as f64 / (n - 1) as f64;
            let band = if y <= cf { &map.bands[0] } else if y <= df { &map.bands[1] } else { &map.bands[2] };
            let (vx, vy) = band.partials_f64(x, y);
            sampled_max = sampled_max.max(dilatation_from_partials(cr, 0.0, vx, vy));
        }
    }
    let sampled_within_corner = sampled_max <= corner_dilatation * (1.0 + 1e-12);

    Ok(AffineReport {
        map,
        width_ratio,
        nominal_ratio: nominal,
        epsilon,
        middle_fraction,
        aspect,
        base_dilatation,
        corner_sum,
        corner_dilatation,
        corner_dilatation_exact,
        bound,
        kappa,
        within_bound,
        sampled_max,
        grid: n,
        sampled_within_corner,
        continuous,
        sides_linear,
        sends_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    fn budgets() -> Budgets {
        Budgets::default()
    }

    /// `|v|^2 / Area` from the lattice of the torus, in floating point.
    fn torus_oracle(tau_re: f64, tau_im: f64, p: f64, q: f64) -> f64 {
        let (x, y) = (p + q * tau_re, q * tau_im);
        (x * x + y * y) / tau_im
    }

    #[test]
    fn unit_torus_classes() {
        let t = fixtures::torus();
        let h = ext_bounds(&t, &Curve::horizontal(), &budgets()).unwrap();
        assert_eq!((h.lower.clone(), h.upper.clone()), (s("1"), s("1")));
        for (p, q) in [(1, 1), (2, 1), (1, -3), (0, 1)] {
            let e = ext_bounds(&t, &Curve::TorusClass { p, q }, &budgets()).unwrap();
            assert!(e.is_exact());
            assert!((e.lower.to_f64() - torus_oracle(0.0, 1.0, p as f64, q as f64)).abs() < 1e-12);
        }
        assert!(ext_bounds(&t, &Curve::TorusClass { p: 2, q: 2 }, &budgets()).is_err());
    }

    #[test]
    fn golden_torus_matches_lattice_oracle() {
        let g = fixtures::golden_torus();
        let [w1, w2] = torus_periods(&g).unwrap();
        let (w, sx, hh) = (w1.0.to_f64(), w2.0.to_f64(), w2.1.to_f64());
        for (p, q) in [(1, 0), (0, 1), (1, 1), (3, -2)] {
            let e = ext_bounds(&g, &Curve::TorusClass { p, q }, &budgets()).unwrap();
            let oracle = torus_oracle(sx / w, hh / w, p as f64, q as f64);
            assert!((e.lower.to_f64() - oracle).abs() < 1e-9, "{p} {q}");
        }
    }

    #[test]
    fn stretched_torus_horizontal_leaf() {
        let t = fixtures::torus();
        for lambda in ["2", "7/3", "16"] {
            let lam = s(lambda);
            let st = geodesic_flow(&t, &lam).unwrap();
            let leaf = ext_bounds(&st, &Curve::HorizontalLeaf { rect: 0, y: s("1/2") }, &budgets()).unwrap();
            assert_eq!((leaf.lower.clone(), leaf.upper.clone()), (lam.clone(), lam.clone()));
            let class = ext_bounds(&st, &Curve::horizontal(), &budgets()).unwrap();
            assert_eq!(class.lower, lam);
            let vertical = ext_bounds(&st, &Curve::vertical(), &budgets()).unwrap();
            assert_eq!(vertical.upper, lam.recip());
        }
    }

    #[test]
    fn l_origami_cylinder_cores() {
        let l = fixtures::l_origami();
        let (graph, dec) = analyze(&l, &budgets()).unwrap();
        let mut uppers: Vec<Scalar> = (0..dec.components.len())
            .map(|c| ext_bounds_with(&l, &graph, &dec, &Curve::CylinderCore { component: c }).unwrap().upper)
            .collect();
        uppers.sort();
        assert_eq!(uppers, vec![s("1"), s("2")]);
        let tall = ext_bounds(&l, &Curve::VerticalLeaf { rect: 2, x: s("1/2") }, &budgets()).unwrap();
        assert_eq!((tall.lower, tall.upper), (s("4/3"), s("2")));
    }

    #[test]
    fn l_origami_horizontal_leaf_chain() {
        let l = fixtures::l_origami();
        let curve = Curve::HorizontalLeaf { rect: 0, y: s("1/2") };
        assert_eq!(walsh_target(&l, &curve, &budgets()).unwrap(), s("3/2"));
        let lam = s("1024");
        let st = geodesic_flow(&l, &lam).unwrap();
        let e = ext_bounds(&st, &curve, &budgets()).unwrap();
        assert_eq!(e.lower, s("1536"));
        assert_eq!(e.upper, &s("1536") + &s("2/3"));
        assert_eq!(e.upper_method, "dirichletChain");
        let top = ext_bounds(&l, &Curve::HorizontalLeaf { rect: 2, y: s("1/2") }, &budgets()).unwrap();
        assert!(top.lower <= top.upper);
    }

    #[test]
    fn walsh_tables() {
        let lambdas: Vec<Scalar> = (0..=10).map(|k| Scalar::from_int(1 << k)).collect();
        let t = walsh_limit_check(&fixtures::torus(), &Curve::HorizontalLeaf { rect: 0, y: s("1/2") }, &lambdas, &budgets())
            .unwrap();
        assert_eq!(t.target, s("1"));
        assert!(t.rows.iter().all(|r| r.lower_scaled == s("1") && r.upper_scaled == s("1")));
        let l = walsh_limit_check(&fixtures::l_origami(), &Curve::HorizontalLeaf { rect: 0, y: s("1/2") }, &lambdas, &budgets())
            .unwrap();
        assert!(l.rows.iter().all(|r| r.brackets));
        assert!(l.rows.last().unwrap().relative_width.unwrap() < 0.1);
        assert!(l.width_non_increasing);
        let core = walsh_limit_check(&fixtures::torus(), &Curve::VerticalLeaf { rect: 0, x: s("1/2") }, &lambdas, &budgets())
            .unwrap();
        assert!(core.target.is_zero());
        assert_eq!(core.rows.last().unwrap().upper_scaled, s("1/1048576"));
    }

    #[test]
    fn kerckhoff_examples() {
        let t = fixtures::torus();
        let r = kerckhoff_check(&t, &s("4"), &[Curve::horizontal(), Curve::vertical()], &budgets()).unwrap();
        assert_eq!(r.achieved, LogRatio::half_log(s("4")).unwrap());
        assert!(r.exact && r.gap.is_zero());
        let r = kerckhoff_check(&t, &s("1"), &[Curve::horizontal()], &budgets()).unwrap();
        assert!(r.achieved.is_zero());
        let r = kerckhoff_check(&t, &s("2"), &[Curve::TorusClass { p: 1, q: 1 }], &budgets()).unwrap();
        assert_eq!(r.achieved, LogRatio::half_log(s("5/4")).unwrap());
        assert!(r.achieved < r.distance);
    }

    #[test]
    fn qc_intervals() {
        let e = ExtBounds { lower: s("1"), upper: s("1"), lower_method: "x", upper_method: "x" };
        let same = qc_distortion_check(&s("1"), &e).unwrap();
        assert_eq!((same.lower.clone(), same.upper.clone()), (s("1"), s("1")));
        let two = qc_distortion_check(&s("2"), &e).unwrap();
        assert_eq!((two.lower.clone(), two.upper.clone()), (s("1/2"), s("2")));
        let composed = qc_distortion_check(&s("3"), &two).unwrap();
        let direct = qc_distortion_check(&s("6"), &e).unwrap();
        assert_eq!((composed.lower, composed.upper), (direct.lower, direct.upper));
        assert!(qc_distortion_check(&s("1/2"), &e).is_err());
    }

    #[test]
    fn power_map_dilatation() {
        for (r, k) in [("1", 1.0), ("3", 3.0), ("1/2", 2.0), ("1/3", 3.0), ("2", 2.0)] {
            let rep = annulus_power_map(&s(r), 10_000).unwrap();
            assert!(rep.max_deviation < 1e-12, "{r}: {}", rep.max_deviation);
            assert!(rep.variance < 1e-20);
            assert_eq!(rep.expected, k);
        }
        assert!(annulus_power_map(&s("0"), 10).is_err());
    }

    fn spec(v: [&str; 8], nominal: Option<&str>) -> AffineMapSpec {
        AffineMapSpec {
            a: s(v[0]),
            b: s(v[1]),
            c: s(v[2]),
            d: s(v[3]),
            a_image: s(v[4]),
            b_image: s(v[5]),
            c_image: s(v[6]),
            d_image: s(v[7]),
            nominal_ratio: nominal.map(s),
        }
    }

    #[test]
    fn affine_identity_and_width_stretch() {
        let id = affine_glue_map(&spec(["2", "1", "1/4", "3/4", "2", "1", "1/4", "3/4"], None), 64).unwrap();
        assert_eq!(id.corner_dilatation_exact, Some(s("1")));
        assert!(id.continuous && id.sides_linear && id.sends_points);
        let wide = affine_glue_map(&spec(["2", "1", "1/4", "3/4", "4", "1", "1/4", "3/4"], None), 64).unwrap();
        assert_eq!(wide.corner_sum, s("5/2"));
        assert_eq!(wide.corner_dilatation_exact, Some(s("2")));
        assert!((wide.sampled_max - 2.0).abs() < 1e-12);
    }

    #[test]
    fn affine_near_identity_kappa() {
        let r = affine_glue_map(&spec(["2", "1", "1/4", "3/4", "2", "11/10", "1/4", "33/40"], Some("1")), 64).unwrap();
        assert_eq!(r.epsilon, s("1/10"));
        assert!(r.continuous && r.sides_linear && r.sends_points);
        assert_eq!(r.within_bound, Some(true));
        assert!(r.sampled_within_corner);
        assert!((r.corner_dilatation - 1.0) / 0.1 <= 4.0);
        assert!(affine_glue_map(&spec(["1", "2", "1/4", "3/4", "1", "2", "1/4", "3/4"], None), 8).is_err());
        assert!(affine_glue_map(&spec(["2", "1", "3/4", "1/4", "2", "1", "1/4", "3/4"], None), 8).is_err());
    }
}
