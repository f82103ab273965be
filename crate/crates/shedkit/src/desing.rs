//! Generic desingularization machinery.
//!
//! - [`g_subdivision_point`]: the unique lattice point `x` of a singular
//!   cone with `l(x) = 1 + 1/mu`, found by exhaustive search over the
//!   dilated shed simplex.
//! - [`g_desingularize`]: iterate star subdivisions at G-points, largest
//!   multiplicity first, until the fan is regular.
//! - [`minimal_resolution_2d`]: the lattice points on the compact boundary
//!   of the hull of the nonzero cone points; inserting them resolves a 2D
//!   cone minimally.
//! - [`hilbert_basis`]: minimal generating set of the semigroup of lattice
//!   points of a cone.

use crate::cone::{ConeError, SimplicialCone};
use crate::fan::{Fan, FanError};
use crate::linalg::{Int, LatticeVector, Rat};
use num_integer::Integer as _;
use num_traits::{One, Signed, Zero};
use serde_json::json;
use std::collections::BTreeSet;
use thiserror::Error;

/// Default cap on cone multiplicity for Hilbert-basis enumeration,
/// overridable per call (the CLI wires it to `SHEDKIT_MAX_MULT`).
pub const DEFAULT_MAX_MULT: u64 = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DesingError {
    #[error("cone is already regular (multiplicity 1)")]
    ConeRegular,
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Fan(#[from] FanError),
    #[error(
        "no unique G-point: cone with multiplicity {multiplicity} has {} candidates {candidates:?}",
        candidates.len()
    )]
    NoUniqueGPoint {
        multiplicity: Int,
        candidates: Vec<LatticeVector>,
    },
    #[error("G-desingularization did not terminate within {max_steps} steps")]
    MaxStepsExceeded { max_steps: usize },
    #[error("multiplicity {multiplicity} exceeds the configured bound {bound}")]
    MultiplicityBound { multiplicity: Int, bound: u64 },
    #[error("operation requires a {required}-dimensional cone")]
    DimensionMismatch { required: usize },
}

/// One step of the G-desingularization: the cone acted on, its
/// multiplicity, and the chosen point with `l(point) = 1 + 1/mu`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GStep {
    pub cone: SimplicialCone,
    pub multiplicity: Int,
    pub point: LatticeVector,
    pub l_value: Rat,
}

impl GStep {
    /// JSON-lines record with sorted keys.
    pub fn to_json_line(&self, step: usize) -> String {
        let cone: Vec<Vec<String>> = self
            .cone
            .rays()
            .iter()
            .map(|r| r.coords().iter().map(Int::to_string).collect())
            .collect();
        let point: Vec<String> = self.point.coords().iter().map(Int::to_string).collect();
        let v = json!({
            "cone": cone,
            "l_value": format!("{}/{}", self.l_value.numer(), self.l_value.denom()),
            "mu": self.multiplicity.to_string(),
            "point": point,
            "step": step as u64,
        });
        serde_json::to_string(&v).expect("value serialization is infallible")
    }
}

/// Diagnostic attached to a partial G-desingularization that stopped on a
/// cone outside the uniqueness regime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GDiagnostic {
    pub cone: SimplicialCone,
    pub multiplicity: Int,
    pub candidates: Vec<LatticeVector>,
}

/// Outcome of [`g_desingularize`]: the (possibly partial) fan, the step
/// log, and a diagnostic when the engine had to stop early.
#[derive(Clone, Debug)]
pub struct GDesingOutcome {
    pub fan: Fan,
    pub steps: Vec<GStep>,
    pub diagnostic: Option<GDiagnostic>,
}

impl GDesingOutcome {
    pub fn added_rays(&self) -> Vec<LatticeVector> {
        let mut rays: Vec<LatticeVector> = self.steps.iter().map(|s| s.point.clone()).collect();
        rays.sort();
        rays
    }

    pub fn completed(&self) -> bool {
        self.diagnostic.is_none()
    }
}

/// The unique primitive lattice point `x` in `c` with `l(x) = 1 + 1/mu`.
///
/// Enumerates the lattice points of the dilated simplex
/// `(1 + 1/mu) * conv(0, rays)` and filters on the exact `l`-value; zero
/// or several candidates are reported as a hypothesis violation.
pub fn g_subdivision_point(c: &SimplicialCone) -> Result<LatticeVector, DesingError> {
    let candidates = g_point_candidates(c)?;
    match candidates.as_slice() {
        [unique] if unique.is_primitive() => Ok(unique.clone()),
        _ => Err(DesingError::NoUniqueGPoint {
            multiplicity: c.multiplicity(),
            candidates,
        }),
    }
}

fn g_point_candidates(c: &SimplicialCone) -> Result<Vec<LatticeVector>, DesingError> {
    let mu = c.multiplicity();
    if mu.is_one() {
        return Err(DesingError::ConeRegular);
    }
    let (adj, det) = c.oriented_adjugate_public();
    // l(x) = sum(adj*x)/det and det = mu, so the target is sum = mu + 1.
    let target: Int = &mu + 1;
    let mut lo = vec![Int::zero(); c.dim()];
    let mut hi = vec![Int::zero(); c.dim()];
    for r in c.rays() {
        for (axis, v) in r.coords().iter().enumerate() {
            // dilate by (mu+1)/mu with outward rounding
            let scaled_floor = (v * &target).div_floor(&mu);
            let scaled_ceil = (v * &target).div_ceil(&mu);
            if scaled_floor < lo[axis] {
                lo[axis] = scaled_floor;
            }
            if scaled_ceil > hi[axis] {
                hi[axis] = scaled_ceil;
            }
        }
    }
    let mut candidates = Vec::new();
    for x in crate::cone::BoxIter::new(lo, hi) {
        if x.is_zero() {
            continue;
        }
        let s = adj.mul_vec(&x);
        if s.coords().iter().any(Signed::is_negative) {
            continue;
        }
        let total: Int = s.coords().iter().sum();
        if total == target {
            candidates.push(x);
        }
    }
    candidates.sort();
    debug_assert!(det == mu);
    Ok(candidates)
}

/// Iterated G-desingularization of a fan.
///
/// While some maximal cone has multiplicity above 1: pick the cone with the
/// largest multiplicity (ties broken by the canonically smallest ray
/// tuple), star-subdivide at its G-point. Stops with a diagnostic instead
/// of an error when a singular cone has no unique G-point.
pub fn g_desingularize(fan: &Fan, max_steps: usize) -> Result<GDesingOutcome, DesingError> {
    let mut fan = fan.clone();
    let mut steps = Vec::new();
    loop {
        let mut worst: Option<(Int, SimplicialCone)> = None;
        for i in 0..fan.num_cones() {
            let c = fan.max_cone(i);
            let mu = c.multiplicity();
            if mu.is_one() {
                continue;
            }
            let better = match &worst {
                None => true,
                Some((best_mu, best_cone)) => {
                    mu > *best_mu || (mu == *best_mu && c.rays() < best_cone.rays())
                }
            };
            if better {
                worst = Some((mu, c));
            }
        }
        let Some((mu, cone)) = worst else {
            return Ok(GDesingOutcome {
                fan,
                steps,
                diagnostic: None,
            });
        };
        if steps.len() >= max_steps {
            return Err(DesingError::MaxStepsExceeded { max_steps });
        }
        let point = match g_subdivision_point(&cone) {
            Ok(p) => p,
            Err(DesingError::NoUniqueGPoint { candidates, .. }) => {
                return Ok(GDesingOutcome {
                    fan,
                    steps,
                    diagnostic: Some(GDiagnostic {
                        cone,
                        multiplicity: mu,
                        candidates,
                    }),
                });
            }
            Err(e) => return Err(e),
        };
        let l_value = cone.support_form().eval(&point);
        let label = format!("g-step.{}", steps.len() + 1);
        fan = fan.star_subdivide_labeled(&point, Some(label))?;
        steps.push(GStep {
            cone,
            multiplicity: mu,
            point,
            l_value,
        });
    }
}

/// Lattice points on the compact boundary of `conv((c cap Z^2) \ {0})`
/// strictly between the two rays, in angular order from `rays()[0]` to
/// `rays()[1]`. Inserting them as consecutive subdivisions is the minimal
/// resolution of the 2D cone; a regular cone yields the empty list.
pub fn minimal_resolution_2d(c: &SimplicialCone) -> Result<Vec<LatticeVector>, DesingError> {
    if c.dim() != 2 {
        return Err(DesingError::DimensionMismatch { required: 2 });
    }
    let shed: BTreeSet<LatticeVector> = c.shed_lattice_points().into_iter().collect();
    let start = c.rays()[0].clone();
    let end = c.rays()[1].clone();
    let mut chain = vec![start.clone()];
    let mut current = start;
    while current != end {
        let next = next_boundary_point(&current, &shed).expect(
            "the inner hull boundary connects the two ray generators through shed points",
        );
        chain.push(next.clone());
        current = next;
    }
    Ok(chain[1..chain.len() - 1].to_vec())
}

/// Supporting-line step: the nearest point `w` such that the line through
/// `a` and `w` has the origin strictly on one side and no shed point
/// strictly on the origin side.
fn next_boundary_point(a: &LatticeVector, shed: &BTreeSet<LatticeVector>) -> Option<LatticeVector> {
    let cross = |u: &LatticeVector, v: &LatticeVector| -> Int {
        u.get(0) * v.get(1) - u.get(1) * v.get(0)
    };
    let mut best: Option<(LatticeVector, Int)> = None;
    'candidates: for w in shed {
        if w == a {
            continue;
        }
        let dir = w.sub(a);
        let origin_side = cross(&dir, &a.neg());
        if origin_side.is_zero() {
            // radially aligned with `a`: never an inner boundary edge
            continue;
        }
        for s in shed {
            if s == a || s == w {
                continue;
            }
            let side = cross(&dir, &s.sub(a));
            if !side.is_zero() && side.sign() == origin_side.sign() {
                continue 'candidates;
            }
        }
        let dist = dir.dot(&dir);
        match &best {
            Some((_, best_dist)) if *best_dist <= dist => {}
            _ => best = Some((w.clone(), dist)),
        }
    }
    best.map(|(w, _)| w)
}

/// Minimal generating set of the semigroup `c cap Z^n`.
///
/// Candidates are the ray generators plus the lattice points of the
/// half-open fundamental parallelepiped; a candidate is discarded exactly
/// when it is the sum of two others. Any semigroup element decomposes into
/// parts that again lie in the parallelepiped, so checking pairs from the
/// candidate set reaches the fixpoint in one pass.
pub fn hilbert_basis(c: &SimplicialCone) -> Result<Vec<LatticeVector>, DesingError> {
    hilbert_basis_with_bound(c, DEFAULT_MAX_MULT)
}

pub fn hilbert_basis_with_bound(
    c: &SimplicialCone,
    max_mult: u64,
) -> Result<Vec<LatticeVector>, DesingError> {
    let mu = c.multiplicity();
    if mu > Int::from(max_mult) {
        return Err(DesingError::MultiplicityBound {
            multiplicity: mu,
            bound: max_mult,
        });
    }
    let ppd = parallelepiped_points(c);
    debug_assert_eq!(Int::from(ppd.len() as u64) + 1, mu, "|P| + origin = mu");
    let pool: BTreeSet<LatticeVector> = ppd.iter().cloned().collect();
    let mut basis: Vec<LatticeVector> = c.rays().to_vec();
    for x in &ppd {
        let reducible = pool.iter().any(|a| {
            let rest = x.sub(a);
            !rest.is_zero() && pool.contains(&rest)
        });
        if !reducible {
            basis.push(x.clone());
        }
    }
    basis.sort();
    Ok(basis)
}

/// Nonzero lattice points of the half-open parallelepiped
/// `{sum(lambda_i * ray_i) : 0 <= lambda_i < 1}`.
fn parallelepiped_points(c: &SimplicialCone) -> Vec<LatticeVector> {
    let (adj, det) = c.oriented_adjugate_public();
    let dim = c.dim();
    let mut lo = vec![Int::zero(); dim];
    let mut hi = vec![Int::zero(); dim];
    for mask in 0u32..(1 << dim) {
        let mut corner = LatticeVector::zero(dim);
        for (i, r) in c.rays().iter().enumerate() {
            if mask & (1 << i) != 0 {
                corner = corner.add(r);
            }
        }
        for (axis, v) in corner.coords().iter().enumerate() {
            if *v < lo[axis] {
                lo[axis] = v.clone();
            }
            if *v > hi[axis] {
                hi[axis] = v.clone();
            }
        }
    }
    let mut points = Vec::new();
    for x in crate::cone::BoxIter::new(lo, hi) {
        if x.is_zero() {
            continue;
        }
        let s = adj.mul_vec(&x);
        if s.coords().iter().all(|v| !v.is_negative() && *v < det) {
            points.push(x);
        }
    }
    points.sort();
    points
}

/// Renders a step log as JSON lines.
pub fn step_log_jsonl(steps: &[GStep]) -> String {
    let mut out = String::new();
    for (i, s) in steps.iter().enumerate() {
        out.push_str(&s.to_json_line(i + 1));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{int, rat};

    fn lv(coords: &[i64]) -> LatticeVector {
        LatticeVector::from_i64(coords)
    }

    fn cone(rays: &[&[i64]]) -> SimplicialCone {
        SimplicialCone::from_i64(rays).unwrap()
    }

    #[test]
    fn g_point_of_sigma_q_plus_one() {
        let c = cone(&[&[0, 1, 0], &[5, -1, -2], &[15, -3, -7]]);
        let p = g_subdivision_point(&c).unwrap();
        assert_eq!(p, lv(&[11, -2, -5]));
        assert_eq!(c.support_form().eval(&p), rat(6, 5));
    }

    #[test]
    fn g_point_of_tilde_sigma_0() {
        let c = cone(&[&[-1, 0, 0], &[2, 0, -1], &[15, -3, -7]]);
        let p = g_subdivision_point(&c).unwrap();
        assert_eq!(p, lv(&[6, -1, -3]));
        assert_eq!(c.support_form().eval(&p), rat(4, 3));
    }

    #[test]
    fn g_point_of_sigma_2() {
        // multiplicity (k-1)q + 1 = 3 at q = 2, k = 2; the G-point is the
        // point ((k-1)q^2 + q + 1, 1-k, (1-k)q - 1) = (7,-1,-3)
        let c = cone(&[&[0, 1, 0], &[5, -1, -2], &[11, -2, -5]]);
        assert_eq!(c.multiplicity(), int(3));
        let p = g_subdivision_point(&c).unwrap();
        assert_eq!(p, lv(&[7, -1, -3]));
        assert_eq!(c.support_form().eval(&p), rat(4, 3));
    }

    #[test]
    fn g_point_rejects_regular_cones() {
        let c = cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(g_subdivision_point(&c).unwrap_err(), DesingError::ConeRegular);
    }

    #[test]
    fn g_desingularize_regular_fan_is_identity() {
        let f = Fan::from_cone(cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
        let out = g_desingularize(&f, 10).unwrap();
        assert!(out.steps.is_empty());
        assert!(out.completed());
        assert_eq!(out.fan, f);
    }

    #[test]
    fn g_desingularize_proof_cones_matches_essential_rays_q2() {
        // the two singular cones of the minimal terminal model at q = 2
        let sigma_q1 = cone(&[&[0, 1, 0], &[5, -1, -2], &[15, -3, -7]]);
        let sigma_p0 = cone(&[&[1, 0, 0], &[0, 1, 0], &[5, -1, -2]]);
        let f = Fan::from_cones(vec![sigma_q1, sigma_p0]).unwrap();
        let out = g_desingularize(&f, 50).unwrap();
        assert!(out.completed());
        assert!(out.fan.is_regular());
        let expected: Vec<LatticeVector> = {
            let mut v = vec![
                lv(&[11, -2, -5]),
                lv(&[7, -1, -3]),
                lv(&[9, -1, -4]),
                lv(&[13, -2, -6]),
                lv(&[3, 0, -1]),
            ];
            v.sort();
            v
        };
        assert_eq!(out.added_rays(), expected);
        // the largest-multiplicity cone goes first
        assert_eq!(out.steps[0].point, lv(&[11, -2, -5]));
        assert_eq!(out.steps[0].multiplicity, int(5));
    }

    #[test]
    fn g_desingularize_tilde_sigma_0_chain() {
        let f = Fan::from_cone(cone(&[&[-1, 0, 0], &[2, 0, -1], &[15, -3, -7]]));
        let out = g_desingularize(&f, 10).unwrap();
        assert!(out.completed());
        assert!(out.fan.is_regular());
        let points: Vec<LatticeVector> = out.steps.iter().map(|s| s.point.clone()).collect();
        assert_eq!(points, vec![lv(&[6, -1, -3]), lv(&[10, -2, -5])]);
        assert_eq!(out.steps[0].multiplicity, int(3));
        assert_eq!(out.steps[0].l_value, rat(4, 3));
        assert_eq!(out.steps[1].multiplicity, int(2));
        assert_eq!(out.steps[1].l_value, rat(3, 2));
    }

    #[test]
    fn g_steps_reduce_total_multiplicity() {
        let f = Fan::from_cone(cone(&[&[0, 1, 0], &[5, -1, -2], &[15, -3, -7]]));
        let out = g_desingularize(&f, 20).unwrap();
        let mut previous = f.total_multiplicity();
        let mut fan = f;
        for step in &out.steps {
            fan = fan.star_subdivide(&step.point).unwrap();
            let now = fan.total_multiplicity();
            assert!(now < previous, "step did not reduce total multiplicity");
            previous = now;
        }
    }

    #[test]
    fn g_desingularize_respects_max_steps() {
        let f = Fan::from_cone(cone(&[&[0, 1, 0], &[5, -1, -2], &[15, -3, -7]]));
        assert_eq!(
            g_desingularize(&f, 1).unwrap_err(),
            DesingError::MaxStepsExceeded { max_steps: 1 }
        );
    }

    #[test]
    fn resolution_of_regular_2d_cone_is_empty() {
        let c = cone(&[&[1, 0], &[0, 1]]);
        assert_eq!(minimal_resolution_2d(&c).unwrap(), Vec::<LatticeVector>::new());
    }

    #[test]
    fn resolution_of_surface_cone_q2() {
        let c = cone(&[&[15, -7], &[0, 1]]);
        // canonical ray order starts at (0,1)
        let expected: Vec<LatticeVector> =
            (0..=6i64).map(|l| lv(&[2 * l + 1, -l])).collect();
        assert_eq!(minimal_resolution_2d(&c).unwrap(), expected);
    }

    #[test]
    fn resolution_of_a2_singularity() {
        let c = cone(&[&[1, 0], &[1, 3]]);
        assert_eq!(
            minimal_resolution_2d(&c).unwrap(),
            vec![lv(&[1, 1]), lv(&[1, 2])]
        );
    }

    #[test]
    fn resolution_subdivides_to_regular_and_is_minimal() {
        for rays in [
            [[15i64, -7], [0, 1]],
            [[1, 0], [1, 3]],
            [[40, -13], [0, 1]],
        ] {
            let c = cone(&[&rays[0], &rays[1]]);
            let points = minimal_resolution_2d(&c).unwrap();
            let mut fan = Fan::from_cone(c);
            for p in &points {
                fan = fan.star_subdivide(p).unwrap();
            }
            assert!(fan.is_regular());
            // leave-one-out: dropping any point breaks regularity
            for skip in 0..points.len() {
                let mut fan = Fan::from_cone(cone(&[&rays[0], &rays[1]]));
                for (i, p) in points.iter().enumerate() {
                    if i != skip {
                        fan = fan.star_subdivide(p).unwrap();
                    }
                }
                assert!(!fan.is_regular(), "dropping point {skip} kept the fan regular");
            }
        }
    }

    #[test]
    fn hilbert_basis_of_unit_cone_is_rays() {
        let c = cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(hilbert_basis(&c).unwrap(), c.rays().to_vec());
    }

    #[test]
    fn hilbert_basis_of_2d_quadric_cone() {
        let c = cone(&[&[1, 0], &[1, 2]]);
        assert_eq!(
            hilbert_basis(&c).unwrap(),
            vec![lv(&[1, 0]), lv(&[1, 1]), lv(&[1, 2])]
        );
    }

    #[test]
    fn hilbert_basis_respects_multiplicity_bound() {
        let c = cone(&[&[15, -7], &[0, 1]]);
        assert_eq!(
            hilbert_basis_with_bound(&c, 10).unwrap_err(),
            DesingError::MultiplicityBound {
                multiplicity: int(15),
                bound: 10
            }
        );
    }

    /// Brute-force generation check: every parallelepiped point must be a
    /// nonnegative integer combination of the basis.
    fn generates(c: &SimplicialCone, basis: &[LatticeVector]) -> bool {
        let targets = parallelepiped_points(c);
        let (adj, _) = c.oriented_adjugate_public();
        let in_cone = |x: &LatticeVector| {
            adj.mul_vec(x)
                .coords()
                .iter()
                .all(|v| !v.is_negative())
        };
        fn reachable(
            x: &LatticeVector,
            basis: &[LatticeVector],
            in_cone: &dyn Fn(&LatticeVector) -> bool,
            seen: &mut BTreeSet<LatticeVector>,
        ) -> bool {
            if x.is_zero() {
                return true;
            }
            if !seen.insert(x.clone()) {
                return false;
            }
            for b in basis {
                let rest = x.sub(b);
                if in_cone(&rest) && reachable(&rest, basis, in_cone, seen) {
                    return true;
                }
            }
            false
        }
        targets.iter().all(|t| {
            let mut seen = BTreeSet::new();
            reachable(t, basis, &in_cone, &mut seen)
        })
    }

    #[test]
    fn hilbert_basis_generates_the_semigroup() {
        for c in [
            cone(&[&[1, 0], &[1, 2]]),
            cone(&[&[15, -7], &[0, 1]]),
            cone(&[&[1, 0, 0], &[1, 5, 0], &[7, 0, 15]]),
            cone(&[&[0, 1, 0], &[5, -1, -2], &[15, -3, -7]]),
        ] {
            let basis = hilbert_basis(&c).unwrap();
            assert!(generates(&c, &basis), "basis fails to generate");
        }
    }

    #[test]
    fn dual_moduli_cone_q2_basis_fits_in_parallelepiped_bound() {
        let c = cone(&[&[1, 0, 0], &[1, 5, 0], &[7, 0, 15]]);
        assert_eq!(c.multiplicity(), int(75));
        let basis = hilbert_basis(&c).unwrap();
        assert!(basis.len() <= 75);
        assert!(basis.iter().any(|b| b == &lv(&[1, 0, 0])));
        assert!(basis.iter().any(|b| b == &lv(&[1, 5, 0])));
        assert!(basis.iter().any(|b| b == &lv(&[7, 0, 15])));
    }

    #[test]
    fn step_log_jsonl_shape() {
        let c = cone(&[&[0, 1, 0], &[5, -1, -2], &[15, -3, -7]]);
        let p = g_subdivision_point(&c).unwrap();
        let l = c.support_form().eval(&p);
        let step = GStep {
            cone: c.clone(),
            multiplicity: c.multiplicity(),
            point: p,
            l_value: l,
        };
        let line = step.to_json_line(1);
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["step"], 1);
        assert_eq!(v["mu"], "5");
        assert_eq!(v["l_value"], "6/5");
        assert_eq!(v["point"], json!(["11", "-2", "-5"]));
    }
}
