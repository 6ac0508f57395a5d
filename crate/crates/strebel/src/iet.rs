//! Interval exchange transformations, Rauzy–Veech induction over exact
//! scalars, unique-ergodicity certificates and Birkhoff-average experiments.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::numeric::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IetError {
    #[error("interval exchange has a flipped interval")]
    Flipped,
    #[error("permutation is reducible")]
    Reducible,
    #[error("induction produced equal competing lengths at step {0}: the exchange has a connection")]
    KeaneViolation(usize),
    #[error("malformed interval exchange: {0}")]
    Malformed(String),
}

/// Labels `0..n` with `lengths[label]`; `top` lists labels in domain order and
/// `bottom` in image order. A flipped label reverses its interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Iet {
    pub lengths: Vec<Scalar>,
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
    pub flips: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Move {
    /// The last top interval is longer.
    Top,
    /// The last bottom interval is longer.
    Bottom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum UeStatus {
    Certified,
    Asserted,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UeCertificate {
    pub status: UeStatus,
    pub rauzy_path: Vec<Move>,
    pub period_start: usize,
    pub period_length: usize,
    pub expansion_matrix: Vec<Vec<i64>>,
    pub pf_measure: Vec<Scalar>,
}

impl Iet {
    pub fn new(lengths: Vec<Scalar>, top: Vec<usize>, bottom: Vec<usize>) -> Result<Iet, IetError> {
        let n = lengths.len();
        let flips = vec![false; n];
        let iet = Iet { lengths, top, bottom, flips };
        iet.check()?;
        Ok(iet)
    }

    /// Exchange with domain order `0..n` and image slots `image_pos[label]`.
    pub fn from_positions(lengths: Vec<Scalar>, image_pos: &[usize]) -> Result<Iet, IetError> {
        let n = lengths.len();
        let mut bottom = vec![usize::MAX; n];
        for (label, &p) in image_pos.iter().enumerate() {
            if p >= n {
                return Err(IetError::Malformed("image slot out of range".into()));
            }
            bottom[p] = label;
        }
        Iet::new(lengths, (0..n).collect(), bottom)
    }

    fn check(&self) -> Result<(), IetError> {
        let n = self.lengths.len();
        let is_perm = |row: &[usize]| {
            let mut seen = vec![false; n];
            row.len() == n && row.iter().all(|&l| l < n && !std::mem::replace(&mut seen[l], true))
        };
        if n == 0 || !is_perm(&self.top) || !is_perm(&self.bottom) || self.flips.len() != n {
            return Err(IetError::Malformed("rows are not permutations of the labels".into()));
        }
        if self.lengths.iter().any(|l| !l.is_positive()) {
            return Err(IetError::Malformed("lengths must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn total(&self) -> Scalar {
        let mut t = Scalar::zero();
        for l in &self.lengths {
            t += l;
        }
        t
    }

    pub fn has_flips(&self) -> bool {
        self.flips.iter().any(|&f| f)
    }

    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        let mut seen_top = vec![false; n];
        let mut seen_bottom = vec![false; n];
        for k in 0..n.saturating_sub(1) {
            seen_top[self.top[k]] = true;
            seen_bottom[self.bottom[k]] = true;
            if seen_top == seen_bottom {
                return false;
            }
        }
        true
    }

    /// Start of each label's interval in the domain and in the image.
    pub fn starts(&self) -> (Vec<Scalar>, Vec<Scalar>) {
        let n = self.len();
        let mut dom = vec![Scalar::zero(); n];
        let mut img = vec![Scalar::zero(); n];
        for (row, out) in [(&self.top, &mut dom), (&self.bottom, &mut img)] {
            let mut at = Scalar::zero();
            for &l in row.iter() {
                out[l] = at.clone();
                at += &self.lengths[l];
            }
        }
        (dom, img)
    }

    /// Lengths divided by their sum.
    pub fn normalized(&self) -> Vec<Scalar> {
        let t = self.total();
        self.lengths.iter().map(|l| l / &t).collect()
    }

    /// Image of a point of the domain, in doubles.
    pub fn apply_f64(&self, x: f64, dom: &[f64], img: &[f64], len: &[f64]) -> f64 {
        for &l in &self.top {
            if x >= dom[l] && x < dom[l] + len[l] {
                let t = x - dom[l];
                return if self.flips[l] { img[l] + len[l] - t } else { img[l] + t };
            }
        }
        let l = *self.top.last().expect("non-empty");
        img[l] + (x - dom[l]).min(len[l])
    }
}

/// One Rauzy–Veech step, also updating the suspension heights so that
/// `sum(length * height)` is unchanged.
pub fn rauzy_step(iet: &Iet, heights: &mut [Scalar]) -> Result<(Iet, Move), IetError> {
    let a = *iet.top.last().expect("non-empty");
    let b = *iet.bottom.last().expect("non-empty");
    let mut next = iet.clone();
    let mv = match iet.lengths[a].cmp(&iet.lengths[b]) {
        std::cmp::Ordering::Equal => return Err(IetError::KeaneViolation(0)),
        std::cmp::Ordering::Greater => {
            next.lengths[a] = &iet.lengths[a] - &iet.lengths[b];
            heights[b] = &heights[b] + &heights[a];
            next.bottom.pop();
            let i = next.bottom.iter().position(|&l| l == a).expect("label present");
            next.bottom.insert(i + 1, b);
            Move::Top
        }
        std::cmp::Ordering::Less => {
            next.lengths[b] = &iet.lengths[b] - &iet.lengths[a];
            heights[a] = &heights[a] + &heights[b];
            next.top.pop();
            let i = next.top.iter().position(|&l| l == b).expect("label present");
            next.top.insert(i + 1, a);
            Move::Bottom
        }
    };
    Ok((next, mv))
}

/// Matrix `E` with `lengths_before = E * lengths_after` for one move.
fn elementary(iet: &Iet, mv: Move) -> Vec<Vec<i64>> {
    let n = iet.len();
    let mut e: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let a = *iet.top.last().expect("non-empty");
    let b = *iet.bottom.last().expect("non-empty");
    match mv {
        Move::Top => e[a][b] += 1,
        Move::Bottom => e[b][a] += 1,
    }
    e
}

fn mat_mul(x: &[Vec<i64>], y: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect()).collect()
}

fn is_primitive(m: &[Vec<i64>]) -> bool {
    let n = m.len();
    let pattern: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|&v| i64::from(v > 0)).collect()).collect();
    let mut p = pattern.clone();
    for _ in 0..(n * n) {
        if p.iter().all(|r| r.iter().all(|&v| v > 0)) {
            return true;
        }
        p = mat_mul(&p, &pattern).into_iter().map(|r| r.into_iter().map(|v| i64::from(v > 0)).collect()).collect();
    }
    false
}

/// Runs induction until the projective class of the exchange recurs.
pub fn rauzy_induct(iet: &Iet, max_steps: usize) -> Result<UeCertificate, IetError> {
    if iet.has_flips() {
        return Err(IetError::Flipped);
    }
    if !iet.is_irreducible() {
        return Err(IetError::Reducible);
    }
    let n = iet.len();
    let mut seen: HashMap<(Vec<usize>, Vec<usize>, Vec<Scalar>), usize> = HashMap::new();
    let mut states: Vec<Iet> = Vec::new();
    let mut path: Vec<Move> = Vec::new();
    let mut heights = vec![Scalar::one(); n];
    let mut cur = iet.clone();
    for step in 0..=max_steps {
        let key = (cur.top.clone(), cur.bottom.clone(), cur.normalized());
        if let Some(&start) = seen.get(&key) {
            let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
            for k in start..step {
                m = mat_mul(&m, &elementary(&states[k], path[k]));
            }
            let status = if is_primitive(&m) { UeStatus::Certified } else { UeStatus::Unknown };
            return Ok(UeCertificate {
                status,
                rauzy_path: path,
                period_start: start,
                period_length: step - start,
                expansion_matrix: m,
                pf_measure: states[start].normalized(),
            });
        }
        if step == max_steps {
            break;
        }
        seen.insert(key, step);
        let (next, mv) = rauzy_step(&cur, &mut heights).map_err(|_| IetError::KeaneViolation(step))?;
        states.push(cur);
        path.push(mv);
        cur = next;
    }
    Ok(UeCertificate {
        status: UeStatus::Unknown,
        rauzy_path: path,
        period_start: 0,
        period_length: 0,
        expansion_matrix: Vec::new(),
        pf_measure: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DeviationRow {
    pub n: usize,
    pub cell: usize,
    pub max_deviation: f64,
}

/// Default number of starting points for Birkhoff sampling.
pub const BIRKHOFF_GRID: usize = 257;

/// Largest deviation, over a deterministic grid of starting points, of the
/// visit frequency of each cell from its measure. Cells are half-open
/// sub-intervals `[start, end)` of the domain; `measure` gives each cell's
/// share (summing to 1). Starting points sit at `(k + φ - 1) / grid` of the
/// domain.
pub fn birkhoff_deviation(
    iet: &Iet,
    cells: &[(Scalar, Scalar)],
    measure: &[f64],
    n_list: &[usize],
    grid: usize,
) -> Vec<DeviationRow> {
    let len: Vec<f64> = iet.lengths.iter().map(Scalar::to_f64).collect();
    let (dom, img) = iet.starts();
    let dom: Vec<f64> = dom.iter().map(Scalar::to_f64).collect();
    let img: Vec<f64> = img.iter().map(Scalar::to_f64).collect();
    let total = iet.total().to_f64();
    let bounds: Vec<(f64, f64)> = cells.iter().map(|(a, b)| (a.to_f64(), b.to_f64())).collect();
    let offset = (5f64.sqrt() - 1.0) / 2.0;
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    let mut worst = vec![vec![0f64; cells.len()]; n_list.len()];
    for k in 0..grid {
        let mut x = (k as f64 + offset) / grid as f64 * total;
        let mut counts = vec![0usize; cells.len()];
        for step in 1..=max_n {
            if let Some(c) = bounds.iter().position(|&(a, b)| x >= a && x < b) {
                counts[c] += 1;
            }
            x = iet.apply_f64(x, &dom, &img, &len);
            for (row, &n) in n_list.iter().enumerate() {
                if n == step {
                    for c in 0..cells.len() {
                        let dev = (counts[c] as f64 / n as f64 - measure[c]).abs();
                        worst[row][c] = worst[row][c].max(dev);
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for (row, &n) in n_list.iter().enumerate() {
        for c in 0..cells.len() {
            out.push(DeviationRow { n, cell: c, max_deviation: worst[row][c] });
        }
    }
    out
}

/// The natural cells of an exchange (its domain intervals) and their
/// Lebesgue shares.
pub fn natural_cells(iet: &Iet) -> (Vec<(Scalar, Scalar)>, Vec<f64>) {
    let (dom, _) = iet.starts();
    let total = iet.total();
    let cells = iet.top.iter().map(|&l| (dom[l].clone(), &dom[l] + &iet.lengths[l])).collect();
    let shares = iet.top.iter().map(|&l| (&iet.lengths[l] / &total).to_f64()).collect();
    (cells, shares)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum TopologicalVerdict {
    Equivalent,
    Distinct,
    Undecided,
}

fn same_class(a: &Iet, b: &Iet) -> bool {
    a.top == b.top && a.bottom == b.bottom && a.normalized() == b.normalized()
}

/// Conservative equivalence check: projectively equal exchanges are
/// equivalent; exchanges with periodic induction are compared through their
/// periodic paths and the permutations met along them.
pub fn iet_topologically_equal(a: &Iet, b: &Iet, max_steps: usize) -> TopologicalVerdict {
    if a.has_flips() || b.has_flips() {
        return TopologicalVerdict::Undecided;
    }
    if same_class(a, b) {
        return TopologicalVerdict::Equivalent;
    }
    let (Ok(ca), Ok(cb)) = (rauzy_induct(a, max_steps), rauzy_induct(b, max_steps)) else {
        return TopologicalVerdict::Undecided;
    };
    if ca.status != UeStatus::Certified || cb.status != UeStatus::Certified {
        return TopologicalVerdict::Undecided;
    }
    let loop_of = |iet: &Iet, c: &UeCertificate| {
        let mut cur = iet.clone();
        let mut h = vec![Scalar::one(); iet.len()];
        for _ in 0..c.period_start {
            cur = rauzy_step(&cur, &mut h).expect("replay").0;
        }
        let mut seq = Vec::new();
        for _ in 0..c.period_length {
            let (next, mv) = rauzy_step(&cur, &mut h).expect("replay");
            seq.push((cur.top.clone(), cur.bottom.clone(), mv));
            cur = next;
        }
        seq
    };
    let la = loop_of(a, &ca);
    let lb = loop_of(b, &cb);
    if la.len() == lb.len() && (0..la.len()).any(|s| (0..la.len()).all(|i| la[(i + s) % la.len()] == lb[i])) {
        TopologicalVerdict::Equivalent
    } else {
        TopologicalVerdict::Distinct
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    fn golden() -> Iet {
        Iet::from_positions(vec![s("1"), s("-1/2+1/2*sqrt(5)")], &[1, 0]).unwrap()
    }

    fn silver() -> Iet {
        Iet::from_positions(vec![s("1"), s("-1+1*sqrt(2)")], &[1, 0]).unwrap()
    }

    #[test]
    fn golden_rotation_is_certified() {
        let c = rauzy_induct(&golden(), 10_000).unwrap();
        assert_eq!(c.status, UeStatus::Certified);
        assert_eq!(c.period_length, 2);
        assert_eq!(c.expansion_matrix, vec![vec![2, 1], vec![1, 1]]);
        // pf measure is proportional to (phi, 1)
        let ratio = &c.pf_measure[0] / &c.pf_measure[1];
        assert_eq!(ratio, s("1/2+1/2*sqrt(5)"));
    }

    #[test]
    fn pf_measure_is_an_eigenvector() {
        for iet in [golden(), silver()] {
            let c = rauzy_induct(&iet, 1000).unwrap();
            let m = &c.expansion_matrix;
            let mu = &c.pf_measure;
            let image: Vec<Scalar> = m
                .iter()
                .map(|row| {
                    let mut acc = Scalar::zero();
                    for (k, v) in row.iter().enumerate() {
                        acc += &(&Scalar::from_int(*v) * &mu[k]);
                    }
                    acc
                })
                .collect();
            let rho = &image[0] / &mu[0];
            assert!(rho > Scalar::one());
            for k in 0..mu.len() {
                assert_eq!(image[k], &rho * &mu[k]);
            }
        }
    }

    #[test]
    fn rational_rotation_has_a_connection() {
        let iet = Iet::from_positions(vec![s("1"), s("1/2")], &[1, 0]).unwrap();
        assert!(matches!(rauzy_induct(&iet, 100), Err(IetError::KeaneViolation(_))));
    }

    #[test]
    fn reducible_and_flipped_are_refused() {
        let red = Iet::from_positions(vec![s("1"), s("2")], &[0, 1]).unwrap();
        assert_eq!(rauzy_induct(&red, 10), Err(IetError::Reducible));
        let mut f = golden();
        f.flips[0] = true;
        assert_eq!(rauzy_induct(&f, 10), Err(IetError::Flipped));
    }

    #[test]
    fn topological_comparison() {
        let g = golden();
        let mut g7 = g.clone();
        g7.lengths = g7.lengths.iter().map(|l| l * &Scalar::from_int(7)).collect();
        assert_eq!(iet_topologically_equal(&g, &g7, 100), TopologicalVerdict::Equivalent);
        assert_eq!(iet_topologically_equal(&g, &silver(), 100), TopologicalVerdict::Distinct);
        let a = Iet::from_positions(vec![s("1"), s("2"), s("3"), s("5")], &[3, 2, 1, 0]).unwrap();
        let b = Iet::from_positions(vec![s("2"), s("1"), s("3"), s("7")], &[3, 2, 1, 0]).unwrap();
        assert_eq!(iet_topologically_equal(&a, &b, 50), TopologicalVerdict::Undecided);
    }

    #[test]
    fn birkhoff_small_cases() {
        let g = golden();
        let (cells, mu) = natural_cells(&g);
        let rows = birkhoff_deviation(&g, &cells, &mu, &[1], BIRKHOFF_GRID);
        let worst = rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
        let expect = mu.iter().map(|m| 1.0 - m).fold(0.0, f64::max);
        assert!((worst - expect).abs() < 1e-12);
        // rotation by 1/3 against the uniform measure on two halves
        let rational = Iet::from_positions(vec![s("2"), s("1")], &[1, 0]).unwrap();
        let cells = vec![(s("0"), s("3/2")), (s("3/2"), s("3"))];
        let rows = birkhoff_deviation(&rational, &cells, &[0.5, 0.5], &[999, 1998, 9999], 17);
        assert!(rows.iter().all(|r| r.max_deviation >= 1.0 / 6.0 - 1e-12));
    }
}
