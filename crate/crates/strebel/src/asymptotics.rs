//! Modulus ratios between matched foliation components, the limiting
//! Teichmüller distance of two vertical stretch rays, asymptoticity, the
//! tree (Masur) case and the detour metric with its optimal shift.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foliation::{analyze, Budgets, ComponentKind, CriticalGraph, FoliationDecomposition, FoliationError};
use crate::iet::{iet_topologically_equal, TopologicalVerdict};
use crate::limitsurf::{dbar_distance, limit_models, DbarReport, DbarTerm, LimitError, LimitModel};
use crate::numeric::{LogRatio, NumericError, Scalar};
use crate::surface::Surface;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsymptoticsError {
    #[error("correspondence is not a bijection: {0}")]
    NotBijection(String),
    #[error("component counts differ: {0} vs {1}")]
    CountMismatch(usize, usize),
    #[error("component {0} is matched with component {1} of another kind")]
    KindMismatch(usize, usize),
    #[error("minimal components {0} and {1} are not shown equivalent ({2}) and carry no assertion")]
    Unvalidated(usize, usize, String),
    #[error("empty ratio vector")]
    Empty,
    #[error("ratios must be positive")]
    NonPositive,
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

impl AsymptoticsError {
    /// Failures that mean the two foliations are not absolutely continuous,
    /// as opposed to malformed input.
    pub fn is_inequivalence(&self) -> bool {
        matches!(
            self,
            AsymptoticsError::CountMismatch(..) | AsymptoticsError::KindMismatch(..) | AsymptoticsError::Unvalidated(..)
        )
    }
}

/// Matching of foliation components between two surfaces. Without `pairs`
/// components are matched by index. `ue_assertions` lists minimal pairs the
/// caller asserts to be equivalent and uniquely ergodic.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Correspondence {
    #[serde(default)]
    pub pairs: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    pub ue_assertions: Vec<(usize, usize)>,
}

impl Correspondence {
    pub fn identity() -> Correspondence {
        Correspondence::default()
    }

    pub fn from_json(text: &str) -> Result<Correspondence, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn resolve(&self, na: usize, nb: usize) -> Result<Vec<(usize, usize)>, AsymptoticsError> {
        if na != nb {
            return Err(AsymptoticsError::CountMismatch(na, nb));
        }
        let pairs = match &self.pairs {
            None => (0..na).map(|i| (i, i)).collect(),
            Some(p) => p.clone(),
        };
        let mut seen_a = vec![false; na];
        let mut seen_b = vec![false; nb];
        for &(a, b) in &pairs {
            if a >= na || b >= nb || seen_a[a] || seen_b[b] {
                return Err(AsymptoticsError::NotBijection(format!("pair ({a}, {b})")));
            }
            seen_a[a] = true;
            seen_b[b] = true;
        }
        if pairs.len() != na {
            return Err(AsymptoticsError::NotBijection("not every component is matched".into()));
        }
        Ok(pairs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum PairBasis {
    Cylinder,
    /// Minimal pair with equal projective first returns or matching periodic induction.
    Equivalent,
    Asserted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RatioEntry {
    pub a: usize,
    pub b: usize,
    pub basis: PairBasis,
    /// Modulus on the second surface over modulus on the first.
    pub ratio: Scalar,
    pub modulus_a: Option<Scalar>,
    pub modulus_b: Option<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModulusVector {
    pub entries: Vec<RatioEntry>,
}

impl ModulusVector {
    pub fn ratios(&self) -> Vec<Scalar> {
        self.entries.iter().map(|e| e.ratio.clone()).collect()
    }

    /// `1/2 log max_j max(r_j, 1/r_j)`.
    pub fn modulus_term(&self) -> LogRatio {
        modulus_term(&self.ratios())
    }

    /// Common ratio when all ratios agree.
    pub fn common_ratio(&self) -> Option<Scalar> {
        let first = self.entries.first()?.ratio.clone();
        self.entries.iter().all(|e| e.ratio == first).then_some(first)
    }
}

fn modulus_term(ratios: &[Scalar]) -> LogRatio {
    let worst = ratios
        .iter()
        .map(|r| if r < &Scalar::one() { r.recip() } else { r.clone() })
        .max()
        .unwrap_or_else(Scalar::one);
    LogRatio::half_log(worst).expect("positive ratio")
}

/// Exact per-component ratios `m'_j / m_j`. Cylinder moduli are width over
/// leaf length; a minimal pair uses the transversal lengths and areas,
/// `(len' / len)^2 * area / area'`.
pub fn modulus_ratios(
    a: &FoliationDecomposition,
    b: &FoliationDecomposition,
    corr: &Correspondence,
    rauzy_steps: usize,
) -> Result<ModulusVector, AsymptoticsError> {
    let pairs = corr.resolve(a.components.len(), b.components.len())?;
    let mut entries = Vec::new();
    for (i, j) in pairs {
        let (ca, cb) = (&a.components[i], &b.components[j]);
        let entry = match (&ca.kind, &cb.kind) {
            (ComponentKind::Cylinder { .. }, ComponentKind::Cylinder { .. }) => {
                let (ma, mb) = (ca.modulus().expect("cylinder"), cb.modulus().expect("cylinder"));
                RatioEntry { a: i, b: j, basis: PairBasis::Cylinder, ratio: &mb / &ma, modulus_a: Some(ma), modulus_b: Some(mb) }
            }
            (ComponentKind::Minimal { first_return: fa, .. }, ComponentKind::Minimal { first_return: fb, .. }) => {
                let basis = if corr.ue_assertions.contains(&(i, j)) {
                    PairBasis::Asserted
                } else {
                    match iet_topologically_equal(fa, fb, rauzy_steps) {
                        TopologicalVerdict::Equivalent => PairBasis::Equivalent,
                        v => return Err(AsymptoticsError::Unvalidated(i, j, format!("{v:?}").to_lowercase())),
                    }
                };
                let la = ca.transversal_length().expect("minimal");
                let lb = cb.transversal_length().expect("minimal");
                let scale = &lb / &la;
                let ratio = &(&scale * &scale) * &(&ca.area / &cb.area);
                RatioEntry { a: i, b: j, basis, ratio, modulus_a: None, modulus_b: None }
            }
            _ => return Err(AsymptoticsError::KindMismatch(i, j)),
        };
        entries.push(entry);
    }
    Ok(ModulusVector { entries })
}

/// True when every component of the critical graph is a tree.
pub fn masur_case(graph: &CriticalGraph) -> bool {
    graph.is_forest()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    AbsolutelyContinuous,
    NotEquivalent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "camelCase")]
pub enum Distance {
    Exact(LogRatio),
    LowerBound(LogRatio),
    Infinite,
}

impl Distance {
    pub fn value(&self) -> Option<&LogRatio> {
        match self {
            Distance::Exact(v) | Distance::LowerBound(v) => Some(v),
            Distance::Infinite => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Asymptotic {
    Yes,
    No,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DetourReport {
    /// `1/2 log max r + 1/2 log max 1/r`.
    pub delta: LogRatio,
    /// `1/4 log (max 1/r / max r)`.
    pub sigma_star: LogRatio,
    /// `e^(4 sigma*)`, the exact square of the optimal ratio shift.
    pub shift_square: Scalar,
    /// Modulus term of the shifted ratios, equal to `delta / 2`.
    pub shifted_term: LogRatio,
}

/// Modulus term after shifting the base point of one ray by `sigma` with
/// `e^(4 sigma) = t`: `1/4 log max(t M^2, M'^2 / t)` where `M = max r` and
/// `M' = max 1/r`.
pub fn shifted_modulus_term(ratios: &[Scalar], t: &Scalar) -> Result<LogRatio, AsymptoticsError> {
    ShiftProfile::new(ratios)?.term(t)
}

/// The squares `M^2` and `M'^2` of a ratio vector, for evaluating the
/// shifted modulus term at many shifts.
#[derive(Clone, Debug)]
pub struct ShiftProfile {
    top_sq: Scalar,
    bottom_sq: Scalar,
}

impl ShiftProfile {
    pub fn new(ratios: &[Scalar]) -> Result<ShiftProfile, AsymptoticsError> {
        let (m, mi) = extremes(ratios)?;
        Ok(ShiftProfile { top_sq: &m * &m, bottom_sq: &mi * &mi })
    }

    /// `1/4 log max(t M^2, M'^2 / t)` for `t > 0`.
    pub fn term(&self, t: &Scalar) -> Result<LogRatio, AsymptoticsError> {
        if !t.is_positive() {
            return Err(AsymptoticsError::NonPositive);
        }
        let up = t * &self.top_sq;
        let down = &self.bottom_sq / t;
        Ok(LogRatio::new(up.max(down), 4)?)
    }
}

fn extremes(ratios: &[Scalar]) -> Result<(Scalar, Scalar), AsymptoticsError> {
    if ratios.is_empty() {
        return Err(AsymptoticsError::Empty);
    }
    if ratios.iter().any(|r| !r.is_positive()) {
        return Err(AsymptoticsError::NonPositive);
    }
    let m = ratios.iter().max().expect("non-empty").clone();
    let mi = ratios.iter().min().expect("non-empty").recip();
    Ok((m, mi))
}

pub fn detour_metric(ratios: &[Scalar]) -> Result<DetourReport, AsymptoticsError> {
    let (m, mi) = extremes(ratios)?;
    let delta = LogRatio::half_log(m.clone())?.add(&LogRatio::half_log(mi.clone())?);
    let shift_square = &mi / &m;
    let sigma_star = LogRatio::new(shift_square.clone(), 4)?;
    let shifted_term = shifted_modulus_term(ratios, &shift_square)?;
    Ok(DetourReport { delta, sigma_star, shift_square, shifted_term })
}

/// Critical graph, decomposition and limit models of one ray.
#[derive(Clone, Debug)]
pub struct RayData {
    pub graph: CriticalGraph,
    pub decomposition: FoliationDecomposition,
    pub models: Vec<LimitModel>,
}

pub fn analyze_ray(surface: &Surface, budgets: &Budgets) -> Result<RayData, AsymptoticsError> {
    let (graph, decomposition) = analyze(surface, budgets)?;
    let models = limit_models(&graph, Some(&decomposition))?;
    Ok(RayData { graph, decomposition, models })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RayPairReport {
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub ratios: Option<ModulusVector>,
    pub modulus_term: Option<LogRatio>,
    pub limit_surface_term: Option<DbarReport>,
    pub limiting_distance: Distance,
    pub asymptotic: Asymptotic,
    pub modularly_equivalent: bool,
    /// Absent when the detour metric is infinite.
    pub detour: Option<DetourReport>,
    /// `max(delta / 2, limit term)` when exact, else a lower bound.
    pub minimized_distance: Distance,
    pub masur_case: (bool, bool),
}

fn not_equivalent(a: &RayData, b: &RayData, reason: String) -> RayPairReport {
    RayPairReport {
        verdict: Verdict::NotEquivalent,
        reason: Some(reason),
        ratios: None,
        modulus_term: None,
        limit_surface_term: None,
        limiting_distance: Distance::Infinite,
        asymptotic: Asymptotic::No,
        modularly_equivalent: false,
        detour: None,
        minimized_distance: Distance::Infinite,
        masur_case: (masur_case(&a.graph), masur_case(&b.graph)),
    }
}

/// Report for two analysed rays.
pub fn compare_rays(
    a: &RayData,
    b: &RayData,
    corr: &Correspondence,
    rauzy_steps: usize,
) -> Result<RayPairReport, AsymptoticsError> {
    let ratios = match modulus_ratios(&a.decomposition, &b.decomposition, corr, rauzy_steps) {
        Ok(r) => r,
        Err(e) if e.is_inequivalence() => return Ok(not_equivalent(a, b, e.to_string())),
        Err(e) => return Err(e),
    };
    let pairs = corr.resolve(a.decomposition.components.len(), b.decomposition.components.len())?;
    let region = move |i: usize| pairs.iter().find(|p| p.0 == i).map(|p| p.1);
    let dbar = dbar_distance(&a.models, &b.models, Some(&region));
    if dbar.term == DbarTerm::Infinite {
        return Ok(not_equivalent(a, b, dbar.reason));
    }
    let term = ratios.modulus_term();
    let detour = detour_metric(&ratios.ratios())?;
    let half_delta = detour.delta.halve();
    let (limiting_distance, minimized_distance) = match dbar.term {
        DbarTerm::ExactZero => (Distance::Exact(term.clone()), Distance::Exact(half_delta)),
        _ => (Distance::LowerBound(term.clone()), Distance::LowerBound(half_delta)),
    };
    let modularly_equivalent = ratios.common_ratio().is_some();
    let asymptotic = match (modularly_equivalent, dbar.term) {
        (false, _) => Asymptotic::No,
        (true, DbarTerm::ExactZero) => Asymptotic::Yes,
        (true, _) => Asymptotic::Undecided,
    };
    Ok(RayPairReport {
        verdict: Verdict::AbsolutelyContinuous,
        reason: None,
        modulus_term: Some(term),
        limit_surface_term: Some(dbar),
        limiting_distance,
        asymptotic,
        modularly_equivalent,
        detour: Some(detour),
        minimized_distance,
        masur_case: (masur_case(&a.graph), masur_case(&b.graph)),
        ratios: Some(ratios),
    })
}

/// Limiting Teichmüller distance between the vertical stretch rays of two surfaces.
pub fn limiting_distance(
    a: &Surface,
    b: &Surface,
    corr: &Correspondence,
    budgets: &Budgets,
) -> Result<RayPairReport, AsymptoticsError> {
    let (da, db) = (a.field_d(), b.field_d());
    if da != 1 && db != 1 && da != db {
        return Err(NumericError::MixedContext(da, db).into());
    }
    let ra = analyze_ray(a, budgets)?;
    let rb = analyze_ray(b, budgets)?;
    compare_rays(&ra, &rb, corr, budgets.rauzy_steps)
}

pub fn asymptotic_test(
    a: &Surface,
    b: &Surface,
    corr: &Correspondence,
    budgets: &Budgets,
) -> Result<Asymptotic, AsymptoticsError> {
    Ok(limiting_distance(a, b, corr, budgets)?.asymptotic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::surface::geodesic_flow;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    fn dec(surface: &Surface) -> FoliationDecomposition {
        analyze(surface, &Budgets::default()).unwrap().1
    }

    #[test]
    fn l_origami_ratios() {
        let l = fixtures::l_origami();
        let id = modulus_ratios(&dec(&l), &dec(&l), &Correspondence::identity(), 100).unwrap();
        assert!(id.ratios().iter().all(Scalar::is_one));
        let l2 = geodesic_flow(&l, &Scalar::from_int(2)).unwrap();
        let r = modulus_ratios(&dec(&l), &dec(&l2), &Correspondence::identity(), 100).unwrap();
        assert_eq!(r.ratios(), vec![Scalar::from_int(2), Scalar::from_int(2)]);
    }

    #[test]
    fn golden_pair_with_doubled_transversal() {
        // Scaling the golden torus by 2 in both directions doubles the
        // transversal and quadruples the area: ratio 4 * 1/4 = 1.
        let g = fixtures::golden_torus();
        let mut big = g.complex().clone();
        let two = Scalar::from_int(2);
        for r in &mut big.rectangles {
            r.width = &r.width * &two;
            r.height = &r.height * &two;
        }
        for gl in &mut big.gluings {
            for sg in [&mut gl.from, &mut gl.to] {
                sg.offset = &sg.offset * &two;
                sg.length = &sg.length * &two;
            }
        }
        for p in &mut big.punctures {
            p.offset = &p.offset * &two;
        }
        let big = crate::surface::validate(big).unwrap();
        let (da, db) = (dec(&g), dec(&big));
        let r = modulus_ratios(&da, &db, &Correspondence::identity(), 100).unwrap();
        let la = da.components[0].transversal_length().unwrap();
        let lb = db.components[0].transversal_length().unwrap();
        assert_eq!(&lb / &la, two);
        let expect = &Scalar::from_int(4) * &(&da.components[0].area / &db.components[0].area);
        assert_eq!(r.entries[0].ratio, expect);
        assert!(r.entries[0].ratio.is_one());
    }

    #[test]
    fn different_rotations_are_not_equivalent() {
        let g = fixtures::suspension(5, &[s("1"), s("-1/2+1/2*sqrt(5)")], &[1, 0]).unwrap();
        let other = fixtures::suspension(5, &[s("1"), s("-2+1*sqrt(5)")], &[1, 0]).unwrap();
        let r = limiting_distance(&g, &other, &Correspondence::identity(), &Budgets::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NotEquivalent);
        assert_eq!(r.limiting_distance, Distance::Infinite);
        let asserted = Correspondence { pairs: None, ue_assertions: vec![(0, 0)] };
        let r = limiting_distance(&g, &other, &asserted, &Budgets::default()).unwrap();
        assert_eq!(r.verdict, Verdict::AbsolutelyContinuous);
        assert_eq!(r.ratios.unwrap().entries[0].basis, PairBasis::Asserted);
        let silver = fixtures::silver_torus();
        assert!(matches!(
            limiting_distance(&fixtures::golden_torus(), &silver, &asserted, &Budgets::default()),
            Err(AsymptoticsError::Numeric(NumericError::MixedContext(5, 2)))
        ));
    }

    #[test]
    fn self_distance_along_the_ray() {
        let l = fixtures::l_origami();
        let l2 = geodesic_flow(&l, &Scalar::from_int(2)).unwrap();
        let r = limiting_distance(&l, &l2, &Correspondence::identity(), &Budgets::default()).unwrap();
        assert_eq!(r.limiting_distance, Distance::Exact(LogRatio::half_log(Scalar::from_int(2)).unwrap()));
        assert_eq!(r.asymptotic, Asymptotic::Yes);
        assert!(!r.masur_case.0);
    }

    #[test]
    fn cylinder_count_mismatch_is_infinite() {
        let r = limiting_distance(&fixtures::torus(), &fixtures::l_origami(), &Correspondence::identity(), &Budgets::default())
            .unwrap();
        assert_eq!(r.verdict, Verdict::NotEquivalent);
        assert_eq!(r.limiting_distance, Distance::Infinite);
        assert_eq!(r.asymptotic, Asymptotic::No);
    }

    #[test]
    fn bad_correspondence_is_an_error() {
        let l = fixtures::l_origami();
        let c = Correspondence { pairs: Some(vec![(0, 0), (1, 0)]), ue_assertions: vec![] };
        assert!(matches!(
            limiting_distance(&l, &l, &c, &Budgets::default()),
            Err(AsymptoticsError::NotBijection(_))
        ));
    }

    #[test]
    fn detour_examples() {
        let d = detour_metric(&[s("1"), s("1")]).unwrap();
        assert!(d.delta.is_zero() && d.sigma_star.is_zero());
        let d = detour_metric(&[s("2"), s("1/2")]).unwrap();
        assert_eq!(d.delta.render(), "log 2");
        assert!(d.sigma_star.is_zero());
        let d = detour_metric(&[s("1"), s("1/4")]).unwrap();
        assert_eq!(d.delta.render(), "log 2");
        assert_eq!(d.sigma_star.render(), "1/2 log 2");
        assert_eq!(d.shifted_term, d.delta.halve());
        assert_eq!(d.shifted_term.render(), "1/2 log 2");
        assert!(detour_metric(&[]).is_err());
    }

    #[test]
    fn masur_examples() {
        let (g, _) = analyze(&fixtures::golden_torus(), &Budgets::default()).unwrap();
        assert!(masur_case(&g));
        let (g, _) = analyze(&fixtures::torus(), &Budgets::default()).unwrap();
        assert!(!masur_case(&g));
        let (g, _) = analyze(&fixtures::l_origami(), &Budgets::default()).unwrap();
        assert!(!masur_case(&g));
    }
}
