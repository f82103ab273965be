//! The moduli threefold of rank-4 Drinfeld modules, combinatorially: every
//! cone, fan and subdivision schedule of the construction as an exact
//! function of the prime power `q`, plus the invariant-exponent
//! enumeration that realizes the affine coordinate ring on the lattice
//! side.
//!
//! Conventions (`D = q^3 + q^2 + q + 1` throughout):
//!
//! - the moduli cone `sigma_M` has rays `e1 = (D, -q-1, -q^2-q-1)`,
//!   `e2 = (0,1,0)`, `e3 = (0,0,1)`; the compactified fan adds
//!   `e4 = (-1,0,0)`;
//! - the terminal model subdivides at `(q^2+1,-1,-q)` then `(1,0,0)`;
//! - the essential smooth model further subdivides at the points
//!   `(k*q^2 + l*q + 1, -k, -k*q - l)`;
//! - the compactified models append the boundary chain
//!   `(k*q^2 + q, -k, -k*q - 1)` for `k = 0..q`.

use crate::cone::{ConeError, SimplicialCone, SupportForm};
use crate::fan::{Fan, FanError, SubdivisionSchedule};
use crate::linalg::{Int, LatticeVector, Rat};
use num_integer::Integer as _;
use num_traits::{One, Zero};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DrinfeldError {
    #[error("q must be at least 2, got {0}")]
    QTooSmall(u64),
    #[error("coefficient index {0} out of range 1..=4")]
    CoefficientIndexOutOfRange(u32),
    #[error("exponent {0:?} violates its weight equation")]
    InvalidExponent(Box<InvariantExponent>),
    #[error("exponent {exponent:?} maps to the non-integral point {image:?}")]
    CorrespondenceFailure {
        exponent: Box<InvariantExponent>,
        image: Vec<String>,
    },
    #[error("exponent {exponent:?} maps to {image} outside the dual cone")]
    ImageOutsideDualCone {
        exponent: Box<InvariantExponent>,
        image: LatticeVector,
    },
    #[error(
        "terminal-candidate exclusion fails at q={q}: {} point(s) with l <= 1, first {}",
        offenders.len(),
        format_offender(offenders)
    )]
    ExclusionContradiction {
        q: u64,
        offenders: Vec<(LatticeVector, Rat)>,
        all_candidates: Vec<(LatticeVector, Rat)>,
    },
    #[error("singular-face structure at q={q} differs from the expected shape: {detail}")]
    SingularFaceContradiction { q: u64, detail: String },
    #[error("unknown construction {0:?} (expected one of {1})")]
    UnknownConstruction(String, &'static str),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Fan(#[from] FanError),
}

fn format_offender(offenders: &[(LatticeVector, Rat)]) -> String {
    offenders
        .first()
        .map(|(p, l)| format!("{p} with l = {l}"))
        .unwrap_or_default()
}

/// Validated moduli parameter: a prime power `q >= 2`. Prime-power-ness is
/// not enforced; every formula below is polynomial in `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModuliParams {
    q: u64,
}

impl ModuliParams {
    pub fn new(q: u64) -> Result<Self, DrinfeldError> {
        if q < 2 {
            return Err(DrinfeldError::QTooSmall(q));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> u64 {
        self.q
    }
}

fn big(v: u128) -> Int {
    Int::from(v)
}

/// `q^3 + q^2 + q + 1`
fn d_of(q: u64) -> u128 {
    let q = q as u128;
    q * q * q + q * q + q + 1
}

fn e1(q: u64) -> LatticeVector {
    let qq = q as u128;
    LatticeVector::new(vec![
        big(d_of(q)),
        -big(qq + 1),
        -big(qq * qq + qq + 1),
    ])
}

fn e2() -> LatticeVector {
    LatticeVector::from_i64(&[0, 1, 0])
}

fn e3() -> LatticeVector {
    LatticeVector::from_i64(&[0, 0, 1])
}

fn e4() -> LatticeVector {
    LatticeVector::from_i64(&[-1, 0, 0])
}

/// `(k*q^2 + l*q + 1, -k, -k*q - l)`, the essential subdivision points.
pub fn essential_point(q: u64, k: u64, l: u64) -> LatticeVector {
    let (q, k, l) = (q as u128, k as u128, l as u128);
    LatticeVector::new(vec![
        big(k * q * q + l * q + 1),
        -big(k),
        -big(k * q + l),
    ])
}

/// `(k*q^2 + q, -k, -k*q - 1)`, the boundary chain points (`k = 0` gives
/// `(q, 0, -1)`).
pub fn boundary_point(q: u64, k: u64) -> LatticeVector {
    let (q, k) = (q as u128, k as u128);
    LatticeVector::new(vec![big(k * q * q + q), -big(k), -big(k * q + 1)])
}

/// The rational simplicial cone of the affine moduli threefold.
pub fn sigma_m(q: u64) -> SimplicialCone {
    assert!(q >= 2);
    SimplicialCone::new(vec![e1(q), e2(), e3()]).expect("independent rays for all q >= 2")
}

/// The expected dual cone on rays `(1,0,0)`, `(1, q^2+1, 0)`,
/// `(q^2+q+1, 0, D)`; checked against `dual_cone(sigma_m(q))`.
pub fn sigma_m_dual_expected(q: u64) -> SimplicialCone {
    assert!(q >= 2);
    let qq = q as u128;
    SimplicialCone::new(vec![
        LatticeVector::from_i64(&[1, 0, 0]),
        LatticeVector::new(vec![Int::one(), big(qq * qq + 1), Int::zero()]),
        LatticeVector::new(vec![big(qq * qq + qq + 1), Int::zero(), big(d_of(q))]),
    ])
    .expect("independent rays")
}

/// Degree of the covering defined by the three principal invariants:
/// `(q^3+q^2+q+1)(q^2+1)`.
pub fn covering_degree(q: u64) -> Int {
    assert!(q >= 2);
    let qq = q as u128;
    big(d_of(q)) * big(qq * qq + 1)
}

/// The complete fan of the compactified moduli space: rays `e1..e4` and
/// the four maximal cones omitting one ray each.
pub fn bar_sigma_m(q: u64) -> Fan {
    assert!(q >= 2);
    let rays = [e1(q), e2(), e3(), e4()];
    let mut cones = Vec::with_capacity(4);
    for omit in 0..4 {
        let rs: Vec<LatticeVector> = rays
            .iter()
            .enumerate()
            .filter_map(|(i, r)| (i != omit).then(|| r.clone()))
            .collect();
        cones.push(SimplicialCone::new(rs).expect("independent"));
    }
    Fan::from_cones(cones)
        .expect("the four coordinate cones form a complete fan")
        .with_ray_labels(&[
            (e1(q), "e1"),
            (e2(), "e2"),
            (e3(), "e3"),
            (e4(), "e4"),
        ])
}

/// Raw and normalized weights of the ambient weighted projective space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WpsWeights {
    pub raw: [Int; 4],
    pub normalized: [Int; 4],
}

/// Weights `(q-1, q^2-1, q^3-1, q^4-1)`; dividing by their gcd `q-1`
/// gives `(1, q+1, q^2+q+1, q^3+q^2+q+1)`.
pub fn wps_weights(q: u64) -> WpsWeights {
    assert!(q >= 2);
    let qq = q as u128;
    let raw = [
        big(qq - 1),
        big(qq * qq - 1),
        big(qq * qq * qq - 1),
        big(qq * qq * qq * qq - 1),
    ];
    let gcd = raw
        .iter()
        .fold(Int::zero(), |acc, w| acc.gcd(w));
    assert_eq!(gcd, big(qq - 1), "weight gcd must be q-1");
    let normalized = [
        &raw[0] / &gcd,
        &raw[1] / &gcd,
        &raw[2] / &gcd,
        &raw[3] / &gcd,
    ];
    WpsWeights { raw, normalized }
}

/// Subdivision centers of the minimal terminal model:
/// `(q^2+1, -1, -q)` followed by `(1, 0, 0)`.
pub fn terminal_schedule(q: u64) -> SubdivisionSchedule {
    assert!(q >= 2);
    let qq = q as u128;
    let mut s = SubdivisionSchedule::new();
    s.push(
        LatticeVector::new(vec![big(qq * qq + 1), -Int::one(), -big(qq)]),
        "terminal.r1",
    );
    s.push(LatticeVector::from_i64(&[1, 0, 0]), "terminal.r2");
    s
}

/// Subdivision centers of the essential smooth model on top of the
/// terminal one: first the points with `l = 1` in decreasing `k`
/// (`P_q` first), then the remaining `(k, l)` grid in canonical order.
pub fn essential_schedule(q: u64) -> SubdivisionSchedule {
    assert!(q >= 2);
    let mut s = SubdivisionSchedule::new();
    for k in (1..=q).rev() {
        s.push(essential_point(q, k, 1), format!("ess.k{k}.l1"));
    }
    for l in 1..q {
        s.push(essential_point(q, 0, l), format!("ess.k0.l{l}"));
    }
    for k in 1..=q {
        for l in 2..=q {
            s.push(essential_point(q, k, l), format!("ess.k{k}.l{l}"));
        }
    }
    debug_assert_eq!(s.len() as u64, q * q + q - 1);
    s
}

/// Terminal schedule extended by the boundary ray `(q, 0, -1)`.
pub fn compactified_terminal_schedule(q: u64) -> SubdivisionSchedule {
    let mut s = terminal_schedule(q);
    s.push(boundary_point(q, 0), "bdry.k0");
    s
}

/// The full compactified essential schedule: terminal rays, the essential
/// grid, then the boundary chain `k = 0..q` (`Q_1` upward after the
/// `(q,0,-1)` ray). Duplicate rays are collapsed, each with a warning.
pub fn compactified_essential_schedule(q: u64) -> (SubdivisionSchedule, Vec<String>) {
    assert!(q >= 2);
    let mut s = terminal_schedule(q);
    let mut warnings = Vec::new();
    let mut push_dedup = |s: &mut SubdivisionSchedule, ray: LatticeVector, label: String| {
        if s.contains_ray(&ray) {
            warnings.push(format!("duplicate schedule ray {ray} ({label}) collapsed"));
        } else {
            s.push(ray, label);
        }
    };
    for (ray, label) in essential_schedule(q).steps() {
        push_dedup(&mut s, ray.clone(), label.clone());
    }
    for k in 0..=q {
        push_dedup(&mut s, boundary_point(q, k), format!("bdry.k{k}"));
    }
    (s, warnings)
}

/// `<e2, (q^2+1,-1,-q), e1>`, the multiplicity `q^2+1` cone of the
/// terminal model.
pub fn sigma_q_plus_one(q: u64) -> SimplicialCone {
    sigma_k(q, q + 1)
}

/// `<(0,1,0), (q^2+1,-1,-q), (k*q^2+q+1, -k, -k*q-1)>` for
/// `2 <= k <= q+1`, of multiplicity `(k-1)q + 1`.
pub fn sigma_k(q: u64, k: u64) -> SimplicialCone {
    assert!(q >= 2);
    assert!((2..=q + 1).contains(&k), "k out of range 2..=q+1");
    let qq = q as u128;
    SimplicialCone::new(vec![
        e2(),
        LatticeVector::new(vec![big(qq * qq + 1), -Int::one(), -big(qq)]),
        essential_point(q, k, 1),
    ])
    .expect("independent rays")
}

/// `<(1,0,0), (0,1,0), (q^2+1,-1,-q)>`, the multiplicity `q` cone left at
/// the apex of the terminal model.
pub fn sigma_prime_0(q: u64) -> SimplicialCone {
    assert!(q >= 2);
    let qq = q as u128;
    SimplicialCone::new(vec![
        LatticeVector::from_i64(&[1, 0, 0]),
        e2(),
        LatticeVector::new(vec![big(qq * qq + 1), -Int::one(), -big(qq)]),
    ])
    .expect("independent rays")
}

/// `<e4, (k*q^2+q, -k, -k*q-1), e1>` for `0 <= k <= q`, the boundary
/// cones of multiplicity `q + 1 - k`.
pub fn tilde_sigma_k(q: u64, k: u64) -> SimplicialCone {
    assert!(q >= 2);
    assert!(k <= q, "k out of range 0..=q");
    SimplicialCone::new(vec![e4(), boundary_point(q, k), e1(q)]).expect("independent rays")
}

pub fn tilde_sigma_0(q: u64) -> SimplicialCone {
    tilde_sigma_k(q, 0)
}

/// Comparison of the definitionally computed support form of
/// `tilde_sigma_0` with the printed coefficient `(q^2+q+1)/(q+1)` for `y`.
///
/// The computed `y`-coefficient is `(q^2+q-1)/(q+1)`: it is the unique
/// value satisfying `l(e1) = 1`, and it reproduces
/// `l(Q_1) = 1 + 1/(q+1)`; the printed form gives `l(e1) = -1` instead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TildeFormReport {
    pub support_form: SupportForm,
    pub computed_y: Rat,
    pub printed_y: Rat,
    pub diverges_from_printed_form: bool,
    pub q1_value: Rat,
}

pub fn tilde_sigma_form_report(q: u64) -> TildeFormReport {
    let cone = tilde_sigma_0(q);
    let support_form = cone.support_form();
    // ray table is sorted; locate the y coefficient directly
    let computed_y = support_form.coefficients()[1].clone();
    let qi = Int::from(q);
    let printed_y = Rat::new(&qi * &qi + &qi + 1, &qi + 1);
    let q1_value = support_form.eval(&boundary_point(q, 1));
    TildeFormReport {
        diverges_from_printed_form: computed_y != printed_y,
        support_form,
        computed_y,
        printed_y,
        q1_value,
    }
}

/// The 2D cone of the moduli surface with vanishing middle coefficient,
/// i.e. the `(x1, x3)` projection image, with the expected interior
/// points `(l*q + 1, -l)` for `0 <= l < q^2 + q + 1`.
pub fn surface13_cone(q: u64) -> (SimplicialCone, Vec<LatticeVector>) {
    assert!(q >= 2);
    let qq = q as u128;
    let cone = SimplicialCone::new(vec![
        LatticeVector::new(vec![big(d_of(q)), -big(qq * qq + qq + 1)]),
        LatticeVector::from_i64(&[0, 1]),
    ])
    .expect("independent rays");
    let points = (0..qq * qq + qq + 1)
        .map(|l| LatticeVector::new(vec![big(l * qq + 1), -big(l)]))
        .collect();
    (cone, points)
}

/// The complete 2D fan of the compactified rank-<=3 moduli surface (the
/// `(-x3, x2)` projection image), with the expected interior points
/// `(l*q + 1, -l)` for `0 <= l < q + 1` plus `(q, -1)`.
pub fn m3_fan(q: u64) -> (Fan, Vec<LatticeVector>) {
    assert!(q >= 2);
    let qq = q as u128;
    let r1 = LatticeVector::new(vec![big(qq * qq + qq + 1), -big(qq + 1)]);
    let r2 = LatticeVector::from_i64(&[0, 1]);
    let r3 = LatticeVector::from_i64(&[-1, 0]);
    let fan = Fan::from_cones(vec![
        SimplicialCone::new(vec![r1.clone(), r2.clone()]).expect("independent"),
        SimplicialCone::new(vec![r2, r3.clone()]).expect("independent"),
        SimplicialCone::new(vec![r3, r1]).expect("independent"),
    ])
    .expect("complete 2D fan");
    let mut points: Vec<LatticeVector> = (0..=qq)
        .map(|l| LatticeVector::new(vec![big(l * qq + 1), -big(l)]))
        .collect();
    points.push(LatticeVector::new(vec![big(qq), -Int::one()]));
    points.sort();
    (fan, points)
}

/// Enumerates the candidate terminal points `x2 = -m`, `x3 = q*x2 - 1`,
/// `x1 = 1 - q*x3` for `0 <= m <= q` together with their exact values
/// under the support form of `sigma_M`, and asserts each value exceeds 1.
///
/// A candidate with `l <= 1` lies in the shed and is reported as a
/// contradiction carrying all candidate values.
pub fn terminal_candidate_exclusion(
    q: u64,
) -> Result<Vec<(LatticeVector, Rat)>, DrinfeldError> {
    let all = terminal_candidates_with_values(q);
    let offenders: Vec<(LatticeVector, Rat)> = all
        .iter()
        .filter(|(_, l)| *l <= Rat::one())
        .cloned()
        .collect();
    if offenders.is_empty() {
        Ok(all)
    } else {
        Err(DrinfeldError::ExclusionContradiction {
            q,
            offenders,
            all_candidates: all,
        })
    }
}

/// The candidate points and their `l`-values, without the exclusion
/// assertion.
pub fn terminal_candidates_with_values(q: u64) -> Vec<(LatticeVector, Rat)> {
    assert!(q >= 2);
    let form = sigma_m(q).support_form();
    (0..=q)
        .map(|m| {
            let p = essential_point(q, m, 1);
            let l = form.eval(&p);
            (p, l)
        })
        .collect()
}

/// Kind tag of a weight-zero invariant monomial: which of the first three
/// coefficient exponents are strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InvariantKind {
    J1,
    J2,
    J3,
    J12,
    J13,
    J23,
    J123,
}

impl InvariantKind {
    pub const ALL: [InvariantKind; 7] = [
        InvariantKind::J1,
        InvariantKind::J2,
        InvariantKind::J3,
        InvariantKind::J12,
        InvariantKind::J13,
        InvariantKind::J23,
        InvariantKind::J123,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            InvariantKind::J1 => "j1",
            InvariantKind::J2 => "j2",
            InvariantKind::J3 => "j3",
            InvariantKind::J12 => "j12",
            InvariantKind::J13 => "j13",
            InvariantKind::J23 => "j23",
            InvariantKind::J123 => "j123",
        }
    }

    pub fn parse(s: &str) -> Option<InvariantKind> {
        Self::ALL.iter().copied().find(|k| k.as_str() == s)
    }

    /// Which of `delta1, delta2, delta3` must be strictly positive.
    fn support(&self) -> [bool; 3] {
        match self {
            InvariantKind::J1 => [true, false, false],
            InvariantKind::J2 => [false, true, false],
            InvariantKind::J3 => [false, false, true],
            InvariantKind::J12 => [true, true, false],
            InvariantKind::J13 => [true, false, true],
            InvariantKind::J23 => [false, true, true],
            InvariantKind::J123 => [true, true, true],
        }
    }
}

impl fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exponent vector `(delta1, delta2, delta3, delta4)` of a weight-zero
/// monomial in the coefficients `a1, a2, a3` and the discriminant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct InvariantExponent {
    pub kind: InvariantKind,
    pub deltas: [Int; 4],
}

impl InvariantExponent {
    /// `delta1 + (q+1) delta2 + (q^2+q+1) delta3 = delta4 (q^3+q^2+q+1)`.
    pub fn satisfies_weight_equation(&self, q: u64) -> bool {
        let qi = Int::from(q);
        let lhs = &self.deltas[0]
            + (&qi + 1) * &self.deltas[1]
            + (&qi * &qi + &qi + 1) * &self.deltas[2];
        let rhs = big(d_of(q)) * &self.deltas[3];
        lhs == rhs
    }
}

/// All basic invariant exponents of one kind: nonnegative solutions of the
/// weight equation with the named exponents strictly positive, inside the
/// basic box `delta1, delta3 <= D`, `delta2 <= q^2 + 1`.
///
/// The `delta4` scan bound is derived from the box: past
/// `floor(max_lhs / D)` the equation has no solutions, which makes the
/// enumeration provably complete.
pub fn enumerate_basic_invariants_of_kind(q: u64, kind: InvariantKind) -> Vec<InvariantExponent> {
    assert!(q >= 2);
    let qq = q as u128;
    let d = d_of(q);
    let w2 = qq + 1;
    let w3 = qq * qq + qq + 1;
    let bound1 = d;
    let bound2 = qq * qq + 1;
    let bound3 = d;
    let support = kind.support();
    let max_lhs = support[0] as u128 * bound1
        + support[1] as u128 * w2 * bound2
        + support[2] as u128 * w3 * bound3;
    let d4_max = max_lhs / d;
    let range2: Vec<u128> = if support[1] { (1..=bound2).collect() } else { vec![0] };
    let range3: Vec<u128> = if support[2] { (1..=bound3).collect() } else { vec![0] };
    let mut out = Vec::new();
    for d4 in 1..=d4_max {
        let rhs = d4 * d;
        for &d2 in &range2 {
            for &d3 in &range3 {
                let partial = w2 * d2 + w3 * d3;
                if partial > rhs {
                    continue;
                }
                let d1 = rhs - partial;
                let d1_ok = if support[0] {
                    (1..=bound1).contains(&d1)
                } else {
                    d1 == 0
                };
                if d1_ok {
                    out.push(InvariantExponent {
                        kind,
                        deltas: [big(d1), big(d2), big(d3), big(d4)],
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| {
        (&a.deltas[3], &a.deltas[1], &a.deltas[2], &a.deltas[0]).cmp(&(
            &b.deltas[3],
            &b.deltas[1],
            &b.deltas[2],
            &b.deltas[0],
        ))
    });
    out
}

/// All basic invariant exponents over every kind, in kind order.
pub fn enumerate_basic_invariants(q: u64) -> Vec<InvariantExponent> {
    InvariantKind::ALL
        .iter()
        .flat_map(|&k| enumerate_basic_invariants_of_kind(q, k))
        .collect()
}

/// Image of an exponent vector in the character lattice of the dual cone.
///
/// The map is the unique rational-linear extension of sending the exponent
/// vectors of the three principal invariants to the dual rays `e1*, e2*,
/// e3*`. The image is required to be integral and to lie in the dual
/// cone; both follow from the weight equation, and violations are
/// reported rather than adjusted.
pub fn exponent_to_lattice(
    q: u64,
    exponent: &InvariantExponent,
) -> Result<LatticeVector, DrinfeldError> {
    assert!(q >= 2);
    if !exponent.satisfies_weight_equation(q) {
        return Err(DrinfeldError::InvalidExponent(Box::new(exponent.clone())));
    }
    let qq = q as u128;
    // coordinates of the exponent in the basis of the principal invariant
    // exponent vectors (D,0,0,-1), (0,q^2+1,0,-1), (0,0,D,-(q^2+q+1))
    let x1 = Rat::new(exponent.deltas[0].clone(), big(d_of(q)));
    let x2 = Rat::new(exponent.deltas[1].clone(), big(qq * qq + 1));
    let x3 = Rat::new(exponent.deltas[2].clone(), big(d_of(q)));
    let dual = sigma_m_dual_expected(q);
    // dual rays in the fixed order e1*, e2*, e3* (sorted order coincides)
    let image: Vec<Rat> = (0..3)
        .map(|axis| {
            let r = |v: &LatticeVector| Rat::from_integer(v.get(axis).clone());
            &x1 * r(&dual.rays()[0]) + &x2 * r(&dual.rays()[1]) + &x3 * r(&dual.rays()[2])
        })
        .collect();
    if image.iter().any(|c| !c.is_integer()) {
        return Err(DrinfeldError::CorrespondenceFailure {
            exponent: Box::new(exponent.clone()),
            image: image.iter().map(Rat::to_string).collect(),
        });
    }
    let point = LatticeVector::new(image.into_iter().map(|c| c.to_integer()).collect());
    let (inside, _) = dual.contains(&point);
    if !inside {
        return Err(DrinfeldError::ImageOutsideDualCone {
            exponent: Box::new(exponent.clone()),
            image: point,
        });
    }
    Ok(point)
}

/// Weight of the coefficient `a_k`: `q^k - 1` for `1 <= k <= 4`.
pub fn weight_of_coefficient(k: u32, q: u64) -> Result<Int, DrinfeldError> {
    if !(1..=4).contains(&k) {
        return Err(DrinfeldError::CoefficientIndexOutOfRange(k));
    }
    Ok(Int::from(q).pow(k) - 1)
}

/// Face multiplicities of `sigma_M` with the singular-locus shape checked:
/// exactly one singular 2-face, spanned by `e1` and `e3`, of multiplicity
/// `q + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingularFaceReport {
    /// `(face rays, multiplicity)` for all three 2-faces.
    pub faces: Vec<(Vec<LatticeVector>, Int)>,
    pub singular_face: Vec<LatticeVector>,
    pub multiplicity: Int,
}

pub fn singular_face_report(q: u64) -> Result<SingularFaceReport, DrinfeldError> {
    let cone = sigma_m(q);
    let faces: Vec<(Vec<LatticeVector>, Int)> = cone
        .face_multiplicities()?
        .into_iter()
        .map(|f| {
            let rays = f
                .ray_indices
                .iter()
                .map(|&i| cone.rays()[i].clone())
                .collect();
            (rays, f.multiplicity)
        })
        .collect();
    let singular: Vec<&(Vec<LatticeVector>, Int)> =
        faces.iter().filter(|(_, m)| !m.is_one()).collect();
    let contradiction = |detail: String| DrinfeldError::SingularFaceContradiction { q, detail };
    let [(face_rays, mult)] = singular.as_slice() else {
        return Err(contradiction(format!(
            "{} singular faces instead of 1",
            singular.len()
        )));
    };
    let mut expected = vec![e1(q), e3()];
    expected.sort();
    if *face_rays != expected {
        return Err(contradiction(format!(
            "singular face spanned by {face_rays:?}"
        )));
    }
    if *mult != Int::from(q + 1) {
        return Err(contradiction(format!(
            "singular face multiplicity {mult} instead of q+1"
        )));
    }
    Ok(SingularFaceReport {
        singular_face: face_rays.clone(),
        multiplicity: mult.clone(),
        faces,
    })
}

pub const CONSTRUCTION_NAMES: &str = "sigma_M, sigma_M_dual, bar_sigma_M, Sigma_min, \
     Sigma_ess, bar_Sigma_min, bar_Sigma_ess, surface13, m3fan";

/// Builds a named construction as a fan, reproducible from `(name, q)`.
pub fn named_construction(name: &str, q: u64) -> Result<Fan, DrinfeldError> {
    assert!(q >= 2);
    let fan = match name {
        "sigma_M" => Fan::from_cone(sigma_m(q)).with_ray_labels(&[
            (e1(q), "e1"),
            (e2(), "e2"),
            (e3(), "e3"),
        ]),
        "sigma_M_dual" => Fan::from_cone(sigma_m(q).dual_cone()),
        "bar_sigma_M" => bar_sigma_m(q),
        "Sigma_min" => {
            let base = named_construction("sigma_M", q)?;
            base.apply_schedule(&terminal_schedule(q))?.0
        }
        "Sigma_ess" => {
            let base = named_construction("Sigma_min", q)?;
            base.apply_schedule(&essential_schedule(q))?.0
        }
        "bar_Sigma_min" => {
            let base = bar_sigma_m(q);
            base.apply_schedule(&compactified_terminal_schedule(q))?.0
        }
        "bar_Sigma_ess" => {
            let base = bar_sigma_m(q);
            let (schedule, _) = compactified_essential_schedule(q);
            base.apply_schedule(&schedule)?.0
        }
        "surface13" => Fan::from_cone(surface13_cone(q).0),
        "m3fan" => m3_fan(q).0,
        other => {
            return Err(DrinfeldError::UnknownConstruction(
                other.to_string(),
                CONSTRUCTION_NAMES,
            ))
        }
    };
    Ok(fan)
}
