//! Shipped example surfaces and small generators for tests and demos.

use crate::numeric::Scalar;
use crate::surface::{
    validate, Gluing, Orientation, PunctureRef, Rectangle, RectangleComplex, SegmentRef, Side, Surface, SurfaceError,
};

pub const TORUS: &str = include_str!("../../../fixtures/torus.json");
pub const L_ORIGAMI: &str = include_str!("../../../fixtures/l_origami.json");
pub const GOLDEN_TORUS: &str = include_str!("../../../fixtures/golden_torus.json");
pub const SILVER_TORUS: &str = include_str!("../../../fixtures/silver_torus.json");
pub const IET321: &str = include_str!("../../../fixtures/iet321.json");
pub const PILLOWCASE: &str = include_str!("../../../fixtures/pillowcase.json");
pub const PILLOWCASE_WIDE: &str = include_str!("../../../fixtures/pillowcase_wide.json");
pub const PILLOWCASE_TALL: &str = include_str!("../../../fixtures/pillowcase_tall.json");

/// Every shipped fixture by file stem.
pub const ALL: [(&str, &str); 8] = [
    ("torus", TORUS),
    ("l_origami", L_ORIGAMI),
    ("golden_torus", GOLDEN_TORUS),
    ("silver_torus", SILVER_TORUS),
    ("iet321", IET321),
    ("pillowcase", PILLOWCASE),
    ("pillowcase_wide", PILLOWCASE_WIDE),
    ("pillowcase_tall", PILLOWCASE_TALL),
];

fn load(text: &str) -> Surface {
    Surface::from_json(text).expect("shipped fixture is valid")
}

pub fn by_name(name: &str) -> Option<Surface> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| load(t))
}

/// Once-punctured unit square torus.
pub fn torus() -> Surface {
    load(TORUS)
}

/// Three unit squares at (0,0), (1,0), (0,1) with the standard origami gluings.
pub fn l_origami() -> Surface {
    load(L_ORIGAMI)
}

/// Torus whose vertical first return is the rotation with lengths (1, φ-1).
pub fn golden_torus() -> Surface {
    load(GOLDEN_TORUS)
}

/// Torus whose vertical first return is the rotation with lengths (1, √2-1).
pub fn silver_torus() -> Surface {
    load(SILVER_TORUS)
}

/// Suspension of a self-similar 3-interval exchange with permutation (3 2 1).
pub fn iet321() -> Surface {
    load(IET321)
}

/// Sphere with four simple poles: one cylinder bounded by two segments.
pub fn pillowcase() -> Surface {
    load(PILLOWCASE)
}

pub fn pillowcase_wide() -> Surface {
    load(PILLOWCASE_WIDE)
}

pub fn pillowcase_tall() -> Surface {
    load(PILLOWCASE_TALL)
}

fn seg(rect: usize, side: Side, offset: Scalar, length: Scalar) -> SegmentRef {
    SegmentRef { rect, side, offset, length }
}

fn cycle_ids(perm: &[usize]) -> Vec<usize> {
    let mut id = vec![usize::MAX; perm.len()];
    let mut next = 0;
    for s in 0..perm.len() {
        if id[s] != usize::MAX {
            continue;
        }
        let mut i = s;
        while id[i] == usize::MAX {
            id[i] = next;
            i = perm[i];
        }
        next += 1;
    }
    id
}

/// Rectangle origami: square `i` has right neighbour `right[i]` and upper
/// neighbour `up[i]`. Column widths are indexed by the cycles of `up`, row
/// heights by the cycles of `right`; cycles beyond the supplied lists reuse
/// the last value. `punctures` lists squares whose lower-left corner is marked.
pub fn origami(
    right: &[usize],
    up: &[usize],
    widths: &[Scalar],
    heights: &[Scalar],
    punctures: &[usize],
) -> Result<Surface, SurfaceError> {
    let n = right.len();
    let col = cycle_ids(up);
    let row = cycle_ids(right);
    let pick = |v: &[Scalar], i: usize| v[i.min(v.len() - 1)].clone();
    let rectangles: Vec<Rectangle> =
        (0..n).map(|i| Rectangle { id: i, width: pick(widths, col[i]), height: pick(heights, row[i]) }).collect();
    let mut gluings = Vec::new();
    for i in 0..n {
        let (w, h) = (rectangles[i].width.clone(), rectangles[i].height.clone());
        gluings.push(Gluing {
            from: seg(i, Side::Right, Scalar::zero(), h),
            to: seg(right[i], Side::Left, Scalar::zero(), rectangles[right[i]].height.clone()),
            orientation: Orientation::Translation,
        });
        gluings.push(Gluing {
            from: seg(i, Side::Top, Scalar::zero(), w),
            to: seg(up[i], Side::Bottom, Scalar::zero(), rectangles[up[i]].width.clone()),
            orientation: Orientation::Translation,
        });
    }
    let punctures =
        punctures.iter().map(|&i| PunctureRef { rect: i, side: Side::Bottom, offset: Scalar::zero() }).collect();
    validate(RectangleComplex { field_d: 1, rectangles, gluings, punctures })
}

/// Unit-height suspension of an interval exchange: top interval `i` (in
/// domain order) is glued to the bottom slot `image_pos[i]`; the vertical
/// sides are glued to each other. Every bottom breakpoint is marked.
pub fn suspension(field_d: u64, lengths: &[Scalar], image_pos: &[usize]) -> Result<Surface, SurfaceError> {
    let n = lengths.len();
    let mut total = Scalar::zero();
    let mut top_start = Vec::with_capacity(n);
    for l in lengths {
        top_start.push(total.clone());
        total += l;
    }
    let mut by_slot = vec![0usize; n];
    for (i, &p) in image_pos.iter().enumerate() {
        by_slot[p] = i;
    }
    let mut bottom_start = vec![Scalar::zero(); n];
    let mut at = Scalar::zero();
    for &i in &by_slot {
        bottom_start[i] = at.clone();
        at += &lengths[i];
    }
    let one = Scalar::one();
    let mut gluings = vec![Gluing {
        from: seg(0, Side::Left, Scalar::zero(), one.clone()),
        to: seg(0, Side::Right, Scalar::zero(), one.clone()),
        orientation: Orientation::Translation,
    }];
    for i in 0..n {
        gluings.push(Gluing {
            from: seg(0, Side::Top, top_start[i].clone(), lengths[i].clone()),
            to: seg(0, Side::Bottom, bottom_start[i].clone(), lengths[i].clone()),
            orientation: Orientation::Translation,
        });
    }
    let punctures = bottom_start
        .iter()
        .map(|o| PunctureRef { rect: 0, side: Side::Bottom, offset: o.clone() })
        .collect();
    validate(RectangleComplex {
        field_d,
        rectangles: vec![Rectangle { id: 0, width: total, height: one }],
        gluings,
        punctures,
    })
}
