//! Simplicial lattice cones: multiplicity, duality, support forms, sheds,
//! faces and membership tests.
//!
//! A cone is stored as its list of primitive ray generators in canonical
//! (lexicographic) order, so equality of cones is structural equality.
//! Membership and shed tests run over the integers by clearing
//! denominators: with `M` the ray matrix (rays as rows), oriented so that
//! `det M > 0`, the barycentric coordinates of `x` are
//! `adj(M^T) * x / det M`, and the support form evaluates to
//! `sum(adj(M^T) * x) / det M`.

use crate::linalg::{
    adjugate, determinant, maximal_minor_gcd, primitivize, solve_rational, Int, IntMatrix,
    LatticeVector, Rat,
};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConeError {
    #[error("a cone in dimension {0} is not supported (only 2 and 3)")]
    BadDimension(usize),
    #[error("expected {expected} rays, got {got}")]
    WrongRayCount { expected: usize, got: usize },
    #[error("ray {0} is the zero vector")]
    ZeroRay(usize),
    #[error("rays are linearly dependent")]
    DependentRays,
    #[error("operation requires a {required}-dimensional cone, got {got}")]
    DimensionMismatch { required: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// A full-dimensional strictly convex simplicial cone in rank 2 or 3.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SimplicialCone {
    dim: usize,
    rays: Vec<LatticeVector>,
}

/// The unique linear form taking the value 1 on every primitive ray
/// generator of its cone.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SupportForm {
    coeffs: Vec<Rat>,
}

impl SupportForm {
    pub fn coefficients(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn eval(&self, x: &LatticeVector) -> Rat {
        assert_eq!(self.coeffs.len(), x.dim());
        self.coeffs
            .iter()
            .zip(x.coords())
            .map(|(c, v)| c * Rat::from_integer(v.clone()))
            .sum()
    }
}

/// A codimension-1 face of a cone, identified by the indices of the rays
/// spanning it, together with the index of the face lattice in its
/// saturation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Face {
    pub ray_indices: Vec<usize>,
    pub multiplicity: Int,
}

impl SimplicialCone {
    /// Builds a cone from `dim` spanning rays.
    ///
    /// Rays are primitivized and sorted into canonical order; dependent or
    /// zero rays are rejected.
    pub fn new(rays: Vec<LatticeVector>) -> Result<Self, ConeError> {
        let dim = rays.first().map_or(0, LatticeVector::dim);
        if !(dim == 2 || dim == 3) {
            return Err(ConeError::BadDimension(dim));
        }
        if rays.len() != dim {
            return Err(ConeError::WrongRayCount {
                expected: dim,
                got: rays.len(),
            });
        }
        let mut prim = Vec::with_capacity(dim);
        for (i, r) in rays.iter().enumerate() {
            if r.dim() != dim {
                return Err(ConeError::DimensionMismatch {
                    required: dim,
                    got: r.dim(),
                });
            }
            if r.is_zero() {
                return Err(ConeError::ZeroRay(i));
            }
            prim.push(primitivize(r)?);
        }
        prim.sort();
        let cone = Self { dim, rays: prim };
        if determinant(&cone.ray_matrix())?.is_zero() {
            return Err(ConeError::DependentRays);
        }
        Ok(cone)
    }

    pub fn from_i64(rays: &[&[i64]]) -> Result<Self, ConeError> {
        Self::new(rays.iter().map(|r| LatticeVector::from_i64(r)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[LatticeVector] {
        &self.rays
    }

    fn ray_matrix(&self) -> IntMatrix {
        IntMatrix::from_rows(self.rays.clone()).expect("rays have equal dimension")
    }

    /// `|det|` of the primitive ray generators; 1 exactly when the cone is
    /// a smooth chart.
    pub fn multiplicity(&self) -> Int {
        determinant(&self.ray_matrix())
            .expect("square by construction")
            .abs()
    }

    pub fn is_regular(&self) -> bool {
        self.multiplicity().is_one()
    }

    /// The support form `l` with `l(ray) = 1` for every ray generator.
    pub fn support_form(&self) -> SupportForm {
        let ones = vec![Rat::one(); self.dim];
        let coeffs = solve_rational(&self.ray_matrix(), &ones)
            .expect("ray matrix is invertible by construction");
        SupportForm { coeffs }
    }

    /// Oriented integer data for membership tests: `(A, d)` with `d > 0`
    /// and barycentric coordinates of `x` equal to `A * x / d`.
    pub(crate) fn oriented_adjugate(&self) -> (IntMatrix, Int) {
        let m = self.ray_matrix();
        let transposed = IntMatrix::from_rows(
            (0..self.dim)
                .map(|j| {
                    LatticeVector::new((0..self.dim).map(|i| m.entry(i, j).clone()).collect())
                })
                .collect(),
        )
        .expect("square");
        let det = determinant(&transposed).expect("square");
        let adj = adjugate(&transposed).expect("square");
        if det.is_negative() {
            let neg_rows = adj
                .rows()
                .iter()
                .map(LatticeVector::neg)
                .collect::<Vec<_>>();
            (IntMatrix::from_rows(neg_rows).expect("square"), -det)
        } else {
            (adj, det)
        }
    }

    /// Exact barycentric coordinates of `x` with respect to the ray
    /// generators: `x = sum(lambda_i * ray_i)`.
    pub fn barycentric(&self, x: &LatticeVector) -> Vec<Rat> {
        assert_eq!(x.dim(), self.dim, "point dimension mismatch");
        let (adj, det) = self.oriented_adjugate();
        let s = adj.mul_vec(x);
        let det = Rat::from_integer(det);
        s.coords()
            .iter()
            .map(|c| Rat::from_integer(c.clone()) / &det)
            .collect()
    }

    /// Membership test together with the barycentric certificate.
    pub fn contains(&self, x: &LatticeVector) -> (bool, Vec<Rat>) {
        let lambda = self.barycentric(x);
        let inside = lambda.iter().all(|c| !c.is_negative());
        (inside, lambda)
    }

    /// The dual cone of all covectors nonnegative on `self`.
    ///
    /// In rank 3 each dual ray is the sign-corrected, primitivized cross
    /// product of two primal rays, so it vanishes on a facet and is
    /// positive on the remaining ray; rank 2 uses rotation by a quarter
    /// turn.
    pub fn dual_cone(&self) -> SimplicialCone {
        let rays = match self.dim {
            2 => {
                let rot = |v: &LatticeVector| {
                    LatticeVector::new(vec![-v.get(1).clone(), v.get(0).clone()])
                };
                (0..2)
                    .map(|i| {
                        let other = &self.rays[1 - i];
                        let w = rot(&self.rays[i]);
                        if w.dot(other).is_negative() {
                            w.neg()
                        } else {
                            w
                        }
                    })
                    .collect()
            }
            3 => (0..3)
                .map(|i| {
                    let others: Vec<&LatticeVector> =
                        (0..3).filter(|&j| j != i).map(|j| &self.rays[j]).collect();
                    let w = others[0].cross(others[1]);
                    let w = if w.dot(&self.rays[i]).is_negative() {
                        w.neg()
                    } else {
                        w
                    };
                    primitivize(&w).expect("cross product of independent rays is nonzero")
                })
                .collect(),
            _ => unreachable!("dimension checked at construction"),
        };
        SimplicialCone::new(rays).expect("dual rays of a full-dimensional cone are independent")
    }

    /// All nonzero lattice points `x` in the cone with `l(x) <= 1`,
    /// in canonical order. The ray generators (`l = 1`) are always present.
    pub fn shed_lattice_points(&self) -> Vec<LatticeVector> {
        self.shed_points_filtered(false)
    }

    /// Lattice points strictly inside the shed: `l(x) < 1` and not a ray
    /// generator.
    pub fn strict_shed_interior_points(&self) -> Vec<LatticeVector> {
        self.shed_points_filtered(true)
    }

    fn shed_points_filtered(&self, strict: bool) -> Vec<LatticeVector> {
        let (adj, det) = self.oriented_adjugate();
        let mut points = Vec::new();
        for x in self.shed_bounding_box_points() {
            if x.is_zero() {
                continue;
            }
            let s = adj.mul_vec(&x);
            if s.coords().iter().any(Signed::is_negative) {
                continue;
            }
            let total: Int = s.coords().iter().sum();
            let keep = if strict { total < det } else { total <= det };
            if keep {
                points.push(x);
            }
        }
        points.sort();
        points
    }

    /// Integer points of the bounding box of `conv(0, rays)`.
    fn shed_bounding_box_points(&self) -> impl Iterator<Item = LatticeVector> {
        let mut lo = vec![Int::zero(); self.dim];
        let mut hi = vec![Int::zero(); self.dim];
        for r in &self.rays {
            for (axis, c) in r.coords().iter().enumerate() {
                if *c < lo[axis] {
                    lo[axis] = c.clone();
                }
                if *c > hi[axis] {
                    hi[axis] = c.clone();
                }
            }
        }
        BoxIter::new(lo, hi)
    }

    /// The codimension-1 faces with their multiplicities (rank-3 cones).
    pub fn face_multiplicities(&self) -> Result<Vec<Face>, ConeError> {
        if self.dim != 3 {
            return Err(ConeError::DimensionMismatch {
                required: 3,
                got: self.dim,
            });
        }
        let mut faces = Vec::with_capacity(3);
        for omit in (0..3).rev() {
            let ray_indices: Vec<usize> = (0..3).filter(|&i| i != omit).collect();
            let rows: Vec<LatticeVector> =
                ray_indices.iter().map(|&i| self.rays[i].clone()).collect();
            let m = IntMatrix::from_rows(rows)?;
            let multiplicity = maximal_minor_gcd(&m)?;
            faces.push(Face {
                ray_indices,
                multiplicity,
            });
        }
        faces.sort_by(|a, b| a.ray_indices.cmp(&b.ray_indices));
        Ok(faces)
    }
}

/// Odometer over the integer points of an axis-aligned box.
pub(crate) struct BoxIter {
    lo: Vec<Int>,
    hi: Vec<Int>,
    current: Option<Vec<Int>>,
}

impl BoxIter {
    pub(crate) fn new(lo: Vec<Int>, hi: Vec<Int>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        let current = if lo.iter().zip(&hi).all(|(l, h)| l <= h) {
            Some(lo.clone())
        } else {
            None
        };
        Self { lo, hi, current }
    }
}

impl Iterator for BoxIter {
    type Item = LatticeVector;

    fn next(&mut self) -> Option<LatticeVector> {
        let current = self.current.as_mut()?;
        let item = LatticeVector::new(current.clone());
        let mut axis = current.len();
        loop {
            if axis == 0 {
                self.current = None;
                break;
            }
            axis -= 1;
            if current[axis] < self.hi[axis] {
                current[axis] += 1;
                for reset in (axis + 1)..self.lo.len() {
                    current[reset] = self.lo[reset].clone();
                }
                break;
            }
        }
        Some(item)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{int, rat};
    use proptest::prelude::*;

    fn cone3(rays: &[&[i64]]) -> SimplicialCone {
        SimplicialCone::from_i64(rays).unwrap()
    }

    fn lv(coords: &[i64]) -> LatticeVector {
        LatticeVector::from_i64(coords)
    }

    fn unit_cone() -> SimplicialCone {
        cone3(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])
    }

    fn sigma_m_q2() -> SimplicialCone {
        cone3(&[&[15, -3, -7], &[0, 1, 0], &[0, 0, 1]])
    }

    fn sigma_q_plus_one_q2() -> SimplicialCone {
        cone3(&[&[0, 1, 0], &[5, -1, -2], &[15, -3, -7]])
    }

    #[test]
    fn construction_rejects_dependent_rays() {
        assert_eq!(
            SimplicialCone::from_i64(&[&[1, 0, 0], &[0, 1, 0], &[1, 1, 0]]).unwrap_err(),
            ConeError::DependentRays
        );
    }

    #[test]
    fn construction_primitivizes_and_sorts() {
        let c = cone3(&[&[0, 0, 2], &[15, -3, -7], &[0, 1, 0]]);
        assert_eq!(c.rays(), &[lv(&[0, 0, 1]), lv(&[0, 1, 0]), lv(&[15, -3, -7])]);
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(unit_cone().multiplicity(), int(1));
        assert_eq!(sigma_q_plus_one_q2().multiplicity(), int(5));
        let tilde0 = cone3(&[&[-1, 0, 0], &[2, 0, -1], &[15, -3, -7]]);
        assert_eq!(tilde0.multiplicity(), int(3));
    }

    #[test]
    fn support_form_examples() {
        assert_eq!(
            unit_cone().support_form().coefficients(),
            &[rat(1, 1), rat(1, 1), rat(1, 1)]
        );
        assert_eq!(
            sigma_q_plus_one_q2().support_form().coefficients(),
            &[rat(6, 5), rat(1, 1), rat(2, 1)]
        );
        // The defining property l(ray) = 1 pins the y coefficient of this
        // cone to 5/3, not 7/3; see also drinfeld::tilde_sigma_report.
        let tilde0 = cone3(&[&[-1, 0, 0], &[2, 0, -1], &[15, -3, -7]]);
        assert_eq!(
            tilde0.support_form().coefficients(),
            &[rat(-1, 1), rat(5, 3), rat(-3, 1)]
        );
    }

    #[test]
    fn dual_cone_examples() {
        assert_eq!(unit_cone().dual_cone(), unit_cone());
        assert_eq!(
            sigma_m_q2().dual_cone(),
            cone3(&[&[1, 0, 0], &[1, 5, 0], &[7, 0, 15]])
        );
        let unit2 = SimplicialCone::from_i64(&[&[1, 0], &[0, 1]]).unwrap();
        assert_eq!(unit2.dual_cone(), unit2);
    }

    #[test]
    fn dual_rays_vanish_on_facets() {
        let c = sigma_m_q2();
        let d = c.dual_cone();
        for w in d.rays() {
            let mut zeros = 0;
            let mut positives = 0;
            for r in c.rays() {
                let p = w.dot(r);
                assert!(!p.is_negative(), "dual ray pairs negatively");
                if p.is_zero() {
                    zeros += 1;
                } else {
                    positives += 1;
                }
            }
            assert_eq!((zeros, positives), (2, 1));
        }
    }

    #[test]
    fn contains_examples() {
        let c = sigma_m_q2();
        let (inside, lambda) = c.contains(&lv(&[1, 0, 0]));
        assert!(inside);
        // canonical ray order is (0,0,1), (0,1,0), (15,-3,-7)
        assert_eq!(lambda, vec![rat(7, 15), rat(1, 5), rat(1, 15)]);

        let (inside, lambda) = c.contains(&lv(&[5, -1, -2]));
        assert!(inside);
        assert_eq!(lambda, vec![rat(1, 3), rat(0, 1), rat(1, 3)]);

        let (inside, _) = c.contains(&lv(&[-1, 0, 0]));
        assert!(!inside);
    }

    #[test]
    fn shed_of_unit_cone_is_rays() {
        assert_eq!(
            unit_cone().shed_lattice_points(),
            vec![lv(&[0, 0, 1]), lv(&[0, 1, 0]), lv(&[1, 0, 0])]
        );
    }

    #[test]
    fn shed_of_surface_cone_q2() {
        let c = SimplicialCone::from_i64(&[&[15, -7], &[0, 1]]).unwrap();
        let mut expected = vec![lv(&[0, 1]), lv(&[15, -7])];
        for l in 0..=6i64 {
            expected.push(lv(&[2 * l + 1, -l]));
        }
        expected.sort();
        assert_eq!(c.shed_lattice_points(), expected);

        let mut interior = (0..=6i64).map(|l| lv(&[2 * l + 1, -l])).collect::<Vec<_>>();
        interior.sort();
        assert_eq!(c.strict_shed_interior_points(), interior);
    }

    #[test]
    fn shed_of_sigma_q_plus_one_is_only_rays() {
        let c = sigma_q_plus_one_q2();
        assert_eq!(c.shed_lattice_points(), c.rays().to_vec());
        // the G-point sits just above the roof
        assert_eq!(c.support_form().eval(&lv(&[11, -2, -5])), rat(6, 5));
    }

    #[test]
    fn face_multiplicities_examples() {
        let faces = unit_cone().face_multiplicities().unwrap();
        assert!(faces.iter().all(|f| f.multiplicity == int(1)));

        // exactly one singular face, spanned by e1 and e3, of multiplicity q+1
        let c = sigma_m_q2();
        let faces = c.face_multiplicities().unwrap();
        let singular: Vec<&Face> = faces
            .iter()
            .filter(|f| f.multiplicity > int(1))
            .collect();
        assert_eq!(singular.len(), 1);
        assert_eq!(singular[0].multiplicity, int(3));
        let face_rays: Vec<&LatticeVector> = singular[0]
            .ray_indices
            .iter()
            .map(|&i| &c.rays()[i])
            .collect();
        assert_eq!(face_rays, vec![&lv(&[0, 0, 1]), &lv(&[15, -3, -7])]);

        let q3 = cone3(&[&[40, -4, -13], &[0, 1, 0], &[0, 0, 1]]);
        let faces = q3.face_multiplicities().unwrap();
        let mults: Vec<Int> = faces.iter().map(|f| f.multiplicity.clone()).collect();
        let mut sorted = mults.clone();
        sorted.sort();
        assert_eq!(sorted, vec![int(1), int(1), int(4)]);
    }

    #[test]
    fn support_form_positive_on_shed() {
        for c in [sigma_m_q2(), sigma_q_plus_one_q2()] {
            let l = c.support_form();
            for p in c.shed_lattice_points() {
                let v = l.eval(&p);
                assert!(v > rat(0, 1) && v <= rat(1, 1), "l({p}) = {v} out of (0,1]");
            }
        }
    }

    /// Brute-force count of lattice points in the half-open parallelepiped
    /// spanned by the rays; must equal the multiplicity.
    fn parallelepiped_count(c: &SimplicialCone) -> usize {
        let (adj, det) = c.oriented_adjugate();
        let mut lo = vec![Int::zero(); c.dim()];
        let mut hi = vec![Int::zero(); c.dim()];
        // box of the parallelepiped corners = subset sums of the rays
        for mask in 0..(1u32 << c.dim()) {
            let mut corner = LatticeVector::zero(c.dim());
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
        BoxIter::new(lo, hi)
            .filter(|x| {
                let s = adj.mul_vec(x);
                s.coords()
                    .iter()
                    .all(|c| !c.is_negative() && *c < det)
            })
            .count()
    }

    #[test]
    fn multiplicity_counts_parallelepiped_points() {
        for c in [unit_cone(), sigma_m_q2(), sigma_q_plus_one_q2()] {
            let mu: usize = format!("{}", c.multiplicity()).parse().unwrap();
            assert_eq!(parallelepiped_count(&c), mu);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn biduality_on_random_cones(entries in proptest::collection::vec(-6i64..=6, 9)) {
            let rays: Vec<LatticeVector> = entries.chunks(3).map(LatticeVector::from_i64).collect();
            let Ok(c) = SimplicialCone::new(rays) else { return Ok(()) };
            prop_assert_eq!(c.dual_cone().dual_cone(), c);
        }

        #[test]
        fn multiplicity_equals_parallelepiped_count(entries in proptest::collection::vec(-4i64..=4, 9)) {
            let rays: Vec<LatticeVector> = entries.chunks(3).map(LatticeVector::from_i64).collect();
            let Ok(c) = SimplicialCone::new(rays) else { return Ok(()) };
            prop_assume!(c.multiplicity() <= int(100));
            let mu: usize = format!("{}", c.multiplicity()).parse().unwrap();
            prop_assert_eq!(parallelepiped_count(&c), mu);
        }
    }
}
