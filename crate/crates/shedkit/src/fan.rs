//! Fans of simplicial cones: star subdivision, global regularity and
//! terminality checks, roof concavity across internal walls, completeness,
//! shed volume and coordinate projections.
//!
//! A fan is stored canonically: the ray table is sorted and duplicate-free,
//! every maximal cone is a sorted tuple of ray indices, and the cone list
//! itself is sorted. Equality of fans compares this canonical geometry;
//! ray labels are presentation metadata and do not take part in equality.

use crate::cone::{ConeError, SimplicialCone};
use crate::linalg::{maximal_minor_gcd, Int, IntMatrix, LatticeVector, Rat};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FanError {
    #[error("fan has no cones")]
    Empty,
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error("ray {0} appears twice in the ray table")]
    DuplicateRay(LatticeVector),
    #[error("duplicate maximal cone {0:?}")]
    DuplicateCone(Vec<usize>),
    #[error("cone {cone:?} references ray index {index} out of range")]
    RayIndexOutOfRange { cone: Vec<usize>, index: usize },
    #[error("ray {ray} lies inside cone {cone:?} without being one of its generators")]
    RayInForeignCone { ray: LatticeVector, cone: Vec<usize> },
    #[error("wall {0:?} is shared by more than two cones")]
    OverSharedWall(Vec<usize>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("subdivision ray {0} is not primitive")]
    RayNotPrimitive(LatticeVector),
    #[error("subdivision ray {0} is already a ray of the fan")]
    RayAlreadyPresent(LatticeVector),
    #[error("subdivision ray {0} lies outside the support of the fan")]
    RayOutsideSupport(LatticeVector),
    #[error("schedule step {step}: {source}")]
    ScheduleStep {
        step: usize,
        #[source]
        source: Box<FanError>,
    },
    #[error("projection matrix must be 2 x dim of rank 2")]
    ProjectionRank,
    #[error("projection collapses the fan: {0}")]
    ProjectionCollapse(String),
    #[error("coordinate {0} does not fit a 64-bit integer in the JSON encoding")]
    CoordinateOverflow(String),
    #[error("invalid fan JSON: {0}")]
    Json(String),
}

/// A (dim-1)-dimensional face shared by at most two maximal cones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wall {
    /// Indices into the fan's ray table spanning the wall.
    pub rays: Vec<usize>,
    /// Indices of the incident maximal cones (one for a boundary wall).
    pub cones: Vec<usize>,
}

impl Wall {
    pub fn is_internal(&self) -> bool {
        self.cones.len() == 2
    }
}

/// Concavity classification of the roof across a wall, weakest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Concavity {
    NotConcave,
    /// Flat across the wall: the neighbouring roof vertex lies exactly on
    /// the supporting hyperplane.
    Concave,
    StrictlyConcave,
}

impl fmt::Display for Concavity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Concavity::NotConcave => "not_concave",
            Concavity::Concave => "concave",
            Concavity::StrictlyConcave => "strictly_concave",
        };
        f.write_str(s)
    }
}

/// Per-wall concavity data: the support form of each incident cone
/// evaluated at the other cone's ray opposite the wall.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WallConcavity {
    pub wall_rays: Vec<usize>,
    pub values: [Rat; 2],
    pub verdict: Concavity,
}

/// Result of [`Fan::roof_concavity`]: one entry per internal wall plus the
/// weakest verdict. A fan without internal walls is vacuously strictly
/// concave.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoofReport {
    pub walls: Vec<WallConcavity>,
    pub global: Concavity,
}

/// An ordered list of primitive rays to star-subdivide at, each carrying a
/// provenance label for step logs and ray labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubdivisionSchedule {
    steps: Vec<(LatticeVector, String)>,
}

impl SubdivisionSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, ray: LatticeVector, label: impl Into<String>) {
        assert!(ray.is_primitive(), "schedule rays must be primitive");
        self.steps.push((ray, label.into()));
    }

    pub fn steps(&self) -> &[(LatticeVector, String)] {
        &self.steps
    }

    pub fn rays(&self) -> impl Iterator<Item = &LatticeVector> {
        self.steps.iter().map(|(r, _)| r)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn extend(&mut self, other: &SubdivisionSchedule) {
        self.steps.extend(other.steps.iter().cloned());
    }

    pub fn contains_ray(&self, ray: &LatticeVector) -> bool {
        self.steps.iter().any(|(r, _)| r == ray)
    }
}

/// Log entry produced by [`Fan::apply_schedule`] for one subdivision step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleStep {
    /// 1-based step number.
    pub index: usize,
    pub ray: LatticeVector,
    pub label: String,
    /// Number of maximal cones that contained the ray and were split.
    pub cones_split: usize,
    pub cones_after: usize,
}

/// A fan of full-dimensional simplicial cones sharing a ray table.
#[derive(Clone, Debug)]
pub struct Fan {
    dim: usize,
    rays: Vec<LatticeVector>,
    cones: Vec<Vec<usize>>,
    labels: BTreeMap<usize, String>,
}

impl PartialEq for Fan {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.rays == other.rays && self.cones == other.cones
    }
}

impl Eq for Fan {}

impl Fan {
    /// Builds a fan from maximal cones, canonicalizing and validating.
    pub fn from_cones(cones: Vec<SimplicialCone>) -> Result<Self, FanError> {
        let ray_lists = cones
            .iter()
            .map(|c| c.rays().to_vec())
            .collect::<Vec<_>>();
        let mut rays: Vec<(LatticeVector, Option<String>)> = Vec::new();
        for c in &cones {
            for r in c.rays() {
                if !rays.iter().any(|(existing, _)| existing == r) {
                    rays.push((r.clone(), None));
                }
            }
        }
        Self::assemble(
            cones.first().map_or(0, SimplicialCone::dim),
            rays,
            ray_lists,
        )
    }

    pub fn from_cone(cone: SimplicialCone) -> Self {
        Self::from_cones(vec![cone]).expect("a single valid cone is a valid fan")
    }

    fn assemble(
        dim: usize,
        mut ray_entries: Vec<(LatticeVector, Option<String>)>,
        cone_rays: Vec<Vec<LatticeVector>>,
    ) -> Result<Self, FanError> {
        if cone_rays.is_empty() {
            return Err(FanError::Empty);
        }
        ray_entries.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in ray_entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(FanError::DuplicateRay(pair[0].0.clone()));
            }
        }
        let index_of = |v: &LatticeVector| -> usize {
            ray_entries
                .binary_search_by(|(r, _)| r.cmp(v))
                .expect("cone ray must be in the ray table")
        };
        let mut cones: Vec<Vec<usize>> = cone_rays
            .iter()
            .map(|rs| {
                let mut idx: Vec<usize> = rs.iter().map(&index_of).collect();
                idx.sort_unstable();
                idx
            })
            .collect();
        cones.sort();
        for pair in cones.windows(2) {
            if pair[0] == pair[1] {
                return Err(FanError::DuplicateCone(pair[0].clone()));
            }
        }
        let labels = ray_entries
            .iter()
            .enumerate()
            .filter_map(|(i, (_, l))| l.clone().map(|l| (i, l)))
            .collect();
        let rays = ray_entries.into_iter().map(|(r, _)| r).collect();
        let fan = Self {
            dim,
            rays,
            cones,
            labels,
        };
        fan.validate()?;
        Ok(fan)
    }

    /// Structural sanity: valid simplicial cones, no stray rays inside
    /// foreign cones, and every wall shared by at most two cones.
    fn validate(&self) -> Result<(), FanError> {
        for cone in &self.cones {
            for &i in cone {
                if i >= self.rays.len() {
                    return Err(FanError::RayIndexOutOfRange {
                        cone: cone.clone(),
                        index: i,
                    });
                }
            }
            // materialization checks ray count, primitivity, independence
            let _ = self.materialize(cone)?;
        }
        for (ri, ray) in self.rays.iter().enumerate() {
            for cone in &self.cones {
                if cone.contains(&ri) {
                    continue;
                }
                let c = self.materialize(cone)?;
                if c.contains(ray).0 {
                    return Err(FanError::RayInForeignCone {
                        ray: ray.clone(),
                        cone: cone.clone(),
                    });
                }
            }
        }
        for (facet, incident) in self.facet_incidence() {
            if incident.len() > 2 {
                return Err(FanError::OverSharedWall(facet));
            }
        }
        Ok(())
    }

    fn materialize(&self, cone: &[usize]) -> Result<SimplicialCone, ConeError> {
        SimplicialCone::new(cone.iter().map(|&i| self.rays[i].clone()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[LatticeVector] {
        &self.rays
    }

    pub fn labels(&self) -> &BTreeMap<usize, String> {
        &self.labels
    }

    /// Attaches labels to rays, matched by value; unknown rays are ignored.
    pub fn with_ray_labels(mut self, labels: &[(LatticeVector, &str)]) -> Self {
        for (ray, label) in labels {
            if let Ok(i) = self.rays.binary_search(ray) {
                self.labels.insert(i, (*label).to_string());
            }
        }
        self
    }

    pub fn maximal_cones(&self) -> &[Vec<usize>] {
        &self.cones
    }

    /// Materializes the `i`-th maximal cone. Ray order inside the cone
    /// matches the sorted index tuple.
    pub fn max_cone(&self, i: usize) -> SimplicialCone {
        self.materialize(&self.cones[i])
            .expect("validated at construction")
    }

    pub fn num_cones(&self) -> usize {
        self.cones.len()
    }

    /// Sum of the multiplicities of all maximal cones.
    pub fn total_multiplicity(&self) -> Int {
        (0..self.cones.len())
            .map(|i| self.max_cone(i).multiplicity())
            .sum()
    }

    fn facet_incidence(&self) -> BTreeMap<Vec<usize>, Vec<usize>> {
        let mut map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (ci, cone) in self.cones.iter().enumerate() {
            for omit in 0..cone.len() {
                let facet: Vec<usize> = cone
                    .iter()
                    .enumerate()
                    .filter_map(|(k, &r)| (k != omit).then_some(r))
                    .collect();
                map.entry(facet).or_default().push(ci);
            }
        }
        map
    }

    /// All walls of the fan with their incident maximal cones.
    pub fn walls(&self) -> Vec<Wall> {
        self.facet_incidence()
            .into_iter()
            .map(|(rays, cones)| Wall { rays, cones })
            .collect()
    }

    /// Indices of the maximal cones containing `x`.
    pub fn cones_containing(&self, x: &LatticeVector) -> Vec<usize> {
        (0..self.cones.len())
            .filter(|&i| self.max_cone(i).contains(x).0)
            .collect()
    }

    /// Star subdivision at a primitive ray in the support of the fan.
    ///
    /// Every maximal cone containing the ray is replaced by the joins of
    /// the ray with the facets not containing it; a ray on a shared wall
    /// therefore splits both incident cones consistently.
    pub fn star_subdivide(&self, ray: &LatticeVector) -> Result<Fan, FanError> {
        self.star_subdivide_labeled(ray, None)
    }

    pub fn star_subdivide_labeled(
        &self,
        ray: &LatticeVector,
        label: Option<String>,
    ) -> Result<Fan, FanError> {
        if ray.dim() != self.dim {
            return Err(FanError::DimensionMismatch {
                expected: self.dim,
                got: ray.dim(),
            });
        }
        if ray.is_zero() || !ray.is_primitive() {
            return Err(FanError::RayNotPrimitive(ray.clone()));
        }
        if self.rays.binary_search(ray).is_ok() {
            return Err(FanError::RayAlreadyPresent(ray.clone()));
        }
        let mut new_cones: Vec<Vec<LatticeVector>> = Vec::new();
        let mut touched = 0usize;
        for cone in &self.cones {
            let c = self.materialize(cone).expect("validated");
            let (inside, lambda) = c.contains(ray);
            if !inside {
                new_cones.push(c.rays().to_vec());
                continue;
            }
            touched += 1;
            // replace by <ray> + every facet with a positive coefficient
            for (j, coeff) in lambda.iter().enumerate() {
                if coeff.is_zero() {
                    continue;
                }
                let mut rs: Vec<LatticeVector> = c
                    .rays()
                    .iter()
                    .enumerate()
                    .filter_map(|(k, r)| (k != j).then(|| r.clone()))
                    .collect();
                rs.push(ray.clone());
                new_cones.push(rs);
            }
        }
        if touched == 0 {
            return Err(FanError::RayOutsideSupport(ray.clone()));
        }
        let mut ray_entries: Vec<(LatticeVector, Option<String>)> = self
            .rays
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), self.labels.get(&i).cloned()))
            .collect();
        ray_entries.push((ray.clone(), label));
        Self::assemble(self.dim, ray_entries, new_cones)
    }

    /// Left-to-right fold of [`Fan::star_subdivide`] over a schedule,
    /// logging how many cones each step split.
    pub fn apply_schedule(
        &self,
        schedule: &SubdivisionSchedule,
    ) -> Result<(Fan, Vec<ScheduleStep>), FanError> {
        let mut fan = self.clone();
        let mut log = Vec::with_capacity(schedule.len());
        for (i, (ray, label)) in schedule.steps().iter().enumerate() {
            let cones_split = fan.cones_containing(ray).len();
            fan = fan
                .star_subdivide_labeled(ray, Some(label.clone()))
                .map_err(|source| FanError::ScheduleStep {
                    step: i + 1,
                    source: Box::new(source),
                })?;
            log.push(ScheduleStep {
                index: i + 1,
                ray: ray.clone(),
                label: label.clone(),
                cones_split,
                cones_after: fan.num_cones(),
            });
        }
        Ok((fan, log))
    }

    /// True iff every maximal cone has multiplicity 1.
    pub fn is_regular(&self) -> bool {
        (0..self.cones.len()).all(|i| self.max_cone(i).is_regular())
    }

    /// True iff no maximal cone has a shed lattice point other than its
    /// ray generators.
    pub fn is_terminal(&self) -> bool {
        self.terminality_witness().is_none()
    }

    /// A lattice point violating terminality (lexicographically smallest
    /// per offending cone), if any.
    pub fn terminality_witness(&self) -> Option<(usize, LatticeVector)> {
        for i in 0..self.cones.len() {
            let c = self.max_cone(i);
            let shed = c.shed_lattice_points();
            if let Some(extra) = shed.iter().find(|p| !c.rays().contains(p)) {
                return Some((i, extra.clone()));
            }
        }
        None
    }

    /// Concavity of the glued roof across every internal wall.
    ///
    /// For the wall between cones `s` and `t`, the support form of each is
    /// evaluated at the other cone's ray opposite the wall; values above 1
    /// mean strictly concave, exactly 1 flat, below 1 not concave. The
    /// global verdict is the weakest wall.
    pub fn roof_concavity(&self) -> RoofReport {
        let mut walls = Vec::new();
        let mut global = Concavity::StrictlyConcave;
        for (facet, incident) in self.facet_incidence() {
            if incident.len() != 2 {
                continue;
            }
            let (a, b) = (incident[0], incident[1]);
            let opposite = |cone_idx: usize| -> &LatticeVector {
                let cone = &self.cones[cone_idx];
                let &ri = cone
                    .iter()
                    .find(|ri| !facet.contains(ri))
                    .expect("facet omits exactly one ray of the cone");
                &self.rays[ri]
            };
            let va = self.max_cone(a).support_form().eval(opposite(b));
            let vb = self.max_cone(b).support_form().eval(opposite(a));
            let classify = |v: &Rat| {
                let one = Rat::one();
                if *v > one {
                    Concavity::StrictlyConcave
                } else if *v == one {
                    Concavity::Concave
                } else {
                    Concavity::NotConcave
                }
            };
            let verdict = classify(&va).min(classify(&vb));
            global = global.min(verdict);
            walls.push(WallConcavity {
                wall_rays: facet,
                values: [va, vb],
                verdict,
            });
        }
        RoofReport { walls, global }
    }

    /// Normalized lattice volume of the union of the cone sheds:
    /// `sum(multiplicity) / dim!`.
    pub fn shed_volume(&self) -> Rat {
        let factorial: i64 = (1..=self.dim as i64).product();
        Rat::new(self.total_multiplicity(), Int::from(factorial))
    }

    /// Completeness test: no boundary walls, and a deterministic sample of
    /// pseudo-random rational directions each lies in exactly one maximal
    /// cone. The sample is seeded from the canonical form of the fan.
    pub fn is_complete(&self) -> bool {
        if self
            .facet_incidence()
            .values()
            .any(|incident| incident.len() != 2)
        {
            return false;
        }
        let oriented: Vec<(IntMatrix, Int)> = (0..self.cones.len())
            .map(|i| self.max_cone(i).oriented_adjugate_public())
            .collect();
        let mut rng = XorShift64::new(self.canonical_hash());
        let mut successes = 0usize;
        let mut attempts = 0usize;
        while successes < 24 {
            attempts += 1;
            if attempts > 2000 {
                // overwhelmingly many boundary hits: treat as not complete
                return false;
            }
            let coords: Vec<Int> = (0..self.dim)
                .map(|_| Int::from((rng.next() % 1999) as i64 - 999))
                .collect();
            let x = LatticeVector::new(coords);
            if x.is_zero() {
                continue;
            }
            let mut strict = 0usize;
            let mut boundary = false;
            for (adj, _) in &oriented {
                let s = adj.mul_vec(&x);
                if s.coords().iter().any(Signed::is_negative) {
                    continue;
                }
                if s.coords().iter().any(Zero::is_zero) {
                    boundary = true;
                } else {
                    strict += 1;
                }
            }
            match (strict, boundary) {
                (1, _) => successes += 1,
                (0, true) => continue, // wall hit, redraw
                _ => return false,     // hole or overlap
            }
        }
        true
    }

    fn canonical_hash(&self) -> u64 {
        let repr = format!("{:?}|{:?}|{}", self.rays, self.cones, self.dim);
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in repr.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    /// Image of a rank-3 fan under a rank-2 integer coordinate map.
    ///
    /// Projected rays are primitivized and merged; rays mapping to zero do
    /// not contribute a direction and are dropped. The resulting rays are
    /// sorted by angle and joined into consecutive 2D cones, cyclically
    /// when they positively span the plane.
    pub fn project(&self, map: &IntMatrix) -> Result<Fan, FanError> {
        if map.nrows() != 2 || map.ncols() != self.dim {
            return Err(FanError::ProjectionRank);
        }
        if maximal_minor_gcd(map).is_err() {
            return Err(FanError::ProjectionRank);
        }
        let mut images: Vec<LatticeVector> = Vec::new();
        for r in &self.rays {
            let y = map.mul_vec(r);
            if y.is_zero() {
                continue;
            }
            let y = crate::linalg::primitivize(&y).expect("nonzero");
            if !images.contains(&y) {
                images.push(y);
            }
        }
        if images.len() < 2 {
            return Err(FanError::ProjectionCollapse(format!(
                "only {} distinct ray directions survive",
                images.len()
            )));
        }
        images.sort_by(angular_cmp);
        let m = images.len();
        let cross_next: Vec<Int> =
            (0..m).map(|i| cross2(&images[i], &images[(i + 1) % m])).collect();
        let cuts: Vec<usize> = (0..m).filter(|&i| !cross_next[i].is_positive()).collect();
        let mut cone_pairs: Vec<Vec<LatticeVector>> = Vec::new();
        match cuts.len() {
            0 => {
                // rays positively span the plane: complete 2D fan
                for i in 0..m {
                    cone_pairs.push(vec![images[i].clone(), images[(i + 1) % m].clone()]);
                }
            }
            1 => {
                // open angular range: chain starts after the cut
                let start = (cuts[0] + 1) % m;
                for k in 0..m - 1 {
                    let i = (start + k) % m;
                    cone_pairs.push(vec![images[i].clone(), images[(i + 1) % m].clone()]);
                }
            }
            _ => {
                return Err(FanError::ProjectionCollapse(
                    "projected rays span a half-plane boundary or a line".into(),
                ))
            }
        }
        let ray_entries = images.into_iter().map(|r| (r, None)).collect();
        Self::assemble(2, ray_entries, cone_pairs)
    }

    /// Canonical JSON value encoding the fan.
    pub fn to_json_value(&self) -> Result<Value, FanError> {
        let mut rays: Vec<Value> = Vec::with_capacity(self.rays.len());
        for r in &self.rays {
            let coords: Result<Vec<i64>, FanError> = r
                .coords()
                .iter()
                .map(|c| {
                    c.to_i64()
                        .ok_or_else(|| FanError::CoordinateOverflow(c.to_string()))
                })
                .collect();
            rays.push(Value::from(coords?));
        }
        let cones: Vec<Value> = self
            .cones
            .iter()
            .map(|c| Value::from(c.iter().map(|&i| i as u64).collect::<Vec<u64>>()))
            .collect();
        let mut labels = Map::new();
        for (i, l) in &self.labels {
            labels.insert(i.to_string(), Value::from(l.clone()));
        }
        Ok(json!({
            "cones": cones,
            "dim": self.dim as u64,
            "labels": labels,
            "rays": rays,
        }))
    }

    /// Byte-stable canonical JSON text (sorted keys, pretty-printed).
    pub fn to_json_string(&self) -> Result<String, FanError> {
        let v = self.to_json_value()?;
        let mut s = serde_json::to_string_pretty(&v).expect("value serialization is infallible");
        s.push('\n');
        Ok(s)
    }

    pub fn from_json_str(s: &str) -> Result<Fan, FanError> {
        let v: Value = serde_json::from_str(s).map_err(|e| FanError::Json(e.to_string()))?;
        Self::from_json_value(&v)
    }

    pub fn from_json_value(v: &Value) -> Result<Fan, FanError> {
        let obj = v
            .as_object()
            .ok_or_else(|| FanError::Json("top level must be an object".into()))?;
        let dim = obj
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| FanError::Json("missing integer field \"dim\"".into()))? as usize;
        let rays_v = obj
            .get("rays")
            .and_then(Value::as_array)
            .ok_or_else(|| FanError::Json("missing array field \"rays\"".into()))?;
        let mut rays = Vec::with_capacity(rays_v.len());
        for rv in rays_v {
            let arr = rv
                .as_array()
                .ok_or_else(|| FanError::Json("each ray must be an array".into()))?;
            let coords: Result<Vec<i64>, FanError> = arr
                .iter()
                .map(|c| {
                    c.as_i64()
                        .ok_or_else(|| FanError::Json(format!("bad ray coordinate {c}")))
                })
                .collect();
            rays.push(LatticeVector::from_i64(&coords?));
        }
        let cones_v = obj
            .get("cones")
            .and_then(Value::as_array)
            .ok_or_else(|| FanError::Json("missing array field \"cones\"".into()))?;
        let mut cone_rays = Vec::with_capacity(cones_v.len());
        for cv in cones_v {
            let arr = cv
                .as_array()
                .ok_or_else(|| FanError::Json("each cone must be an array".into()))?;
            let mut rs = Vec::with_capacity(arr.len());
            for iv in arr {
                let i = iv
                    .as_u64()
                    .ok_or_else(|| FanError::Json(format!("bad ray index {iv}")))?
                    as usize;
                let ray = rays
                    .get(i)
                    .ok_or_else(|| FanError::Json(format!("ray index {i} out of range")))?;
                rs.push(ray.clone());
            }
            cone_rays.push(rs);
        }
        let mut labels_by_ray: BTreeMap<LatticeVector, String> = BTreeMap::new();
        if let Some(labels_v) = obj.get("labels") {
            let lobj = labels_v
                .as_object()
                .ok_or_else(|| FanError::Json("\"labels\" must be an object".into()))?;
            for (k, lv) in lobj {
                let i: usize = k
                    .parse()
                    .map_err(|_| FanError::Json(format!("bad label key {k:?}")))?;
                let ray = rays
                    .get(i)
                    .ok_or_else(|| FanError::Json(format!("label key {i} out of range")))?;
                let l = lv
                    .as_str()
                    .ok_or_else(|| FanError::Json("labels must be strings".into()))?;
                labels_by_ray.insert(ray.clone(), l.to_string());
            }
        }
        let ray_entries = rays
            .into_iter()
            .map(|r| {
                let label = labels_by_ray.get(&r).cloned();
                (r, label)
            })
            .collect();
        Self::assemble(dim, ray_entries, cone_rays)
    }
}

impl SimplicialCone {
    /// Internal helper exposed for fan-level integer membership tests.
    pub(crate) fn oriented_adjugate_public(&self) -> (IntMatrix, Int) {
        self.oriented_adjugate()
    }
}

/// Counterclockwise angular order on nonzero 2D integer vectors, starting
/// at the positive x-axis.
fn angular_cmp(a: &LatticeVector, b: &LatticeVector) -> std::cmp::Ordering {
    let class = |v: &LatticeVector| -> u8 {
        let (x, y) = (v.get(0), v.get(1));
        if y.is_zero() {
            if x.is_positive() {
                0
            } else {
                2
            }
        } else if y.is_positive() {
            1
        } else {
            3
        }
    };
    let (ca, cb) = (class(a), class(b));
    if ca != cb {
        return ca.cmp(&cb);
    }
    // same open half-plane: a precedes b iff turning from a to b is ccw
    let c = cross2(a, b);
    if c.is_positive() {
        std::cmp::Ordering::Less
    } else if c.is_negative() {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Equal
    }
}

fn cross2(a: &LatticeVector, b: &LatticeVector) -> Int {
    a.get(0) * b.get(1) - a.get(1) * b.get(0)
}

struct XorShift64 {
    state: u64,
}

impl XorShift64 {
    fn new(seed: u64) -> Self {
        Self {
            state: seed | 1, // never zero
        }
    }

    fn next(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.state = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }
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

    fn sigma_m_fan_q2() -> Fan {
        Fan::from_cone(cone(&[&[15, -3, -7], &[0, 1, 0], &[0, 0, 1]]))
    }

    fn cone_ray_sets(f: &Fan) -> Vec<Vec<LatticeVector>> {
        f.maximal_cones()
            .iter()
            .map(|c| c.iter().map(|&i| f.rays()[i].clone()).collect())
            .collect()
    }

    #[test]
    fn star_subdivide_on_shared_face_splits_into_two() {
        let f = sigma_m_fan_q2();
        let g = f.star_subdivide(&lv(&[5, -1, -2])).unwrap();
        assert_eq!(g.num_cones(), 2);
        let sets = cone_ray_sets(&g);
        let expect1 = cone(&[&[15, -3, -7], &[0, 1, 0], &[5, -1, -2]]);
        let expect2 = cone(&[&[0, 1, 0], &[0, 0, 1], &[5, -1, -2]]);
        assert!(sets.contains(&expect1.rays().to_vec()));
        assert!(sets.contains(&expect2.rays().to_vec()));
    }

    #[test]
    fn star_subdivide_interior_point_splits_into_three() {
        let f = sigma_m_fan_q2();
        let g = f.star_subdivide(&lv(&[5, -1, -2])).unwrap();
        let h = g.star_subdivide(&lv(&[1, 0, 0])).unwrap();
        assert_eq!(h.num_cones(), 4);
    }

    #[test]
    fn star_subdivide_2d_unit_fan() {
        let f = Fan::from_cone(SimplicialCone::from_i64(&[&[1, 0], &[0, 1]]).unwrap());
        let g = f.star_subdivide(&lv(&[1, 1])).unwrap();
        assert_eq!(g.num_cones(), 2);
        assert!(g.is_regular());
    }

    #[test]
    fn star_subdivide_rejects_outside_and_duplicate_rays() {
        let f = sigma_m_fan_q2();
        assert!(matches!(
            f.star_subdivide(&lv(&[-1, 0, 0])),
            Err(FanError::RayOutsideSupport(_))
        ));
        assert!(matches!(
            f.star_subdivide(&lv(&[0, 1, 0])),
            Err(FanError::RayAlreadyPresent(_))
        ));
        assert!(matches!(
            f.star_subdivide(&lv(&[2, 0, -2])),
            Err(FanError::RayNotPrimitive(_))
        ));
    }

    #[test]
    fn subdivision_preserves_support_and_reduces_multiplicity() {
        let f = sigma_m_fan_q2();
        let before = f.total_multiplicity();
        // (1,0,0) is a shed-interior point of the cone
        let g = f.star_subdivide(&lv(&[1, 0, 0])).unwrap();
        assert!(g.total_multiplicity() < before);
        // support is preserved: interior sample points stay covered
        for i in 0..f.num_cones() {
            let c = f.max_cone(i);
            let mut sample = LatticeVector::zero(f.dim());
            for (k, r) in c.rays().iter().enumerate() {
                sample = sample.add(&r.scale(&int(k as i64 + 1)));
            }
            assert!(!g.cones_containing(&sample).is_empty());
        }
    }

    #[test]
    fn replaying_a_schedule_errors_at_step_one() {
        let mut s = SubdivisionSchedule::new();
        s.push(lv(&[5, -1, -2]), "first");
        s.push(lv(&[1, 0, 0]), "second");
        let (fan, log) = sigma_m_fan_q2().apply_schedule(&s).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log[0].cones_split, 1);
        assert_eq!(fan.num_cones(), 4);
        let err = fan.apply_schedule(&s).unwrap_err();
        assert!(matches!(err, FanError::ScheduleStep { step: 1, .. }));
    }

    #[test]
    fn empty_schedule_is_identity() {
        let f = sigma_m_fan_q2();
        let (g, log) = f.apply_schedule(&SubdivisionSchedule::new()).unwrap();
        assert_eq!(g, f);
        assert!(log.is_empty());
    }

    #[test]
    fn regularity_examples() {
        let unit = Fan::from_cone(cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
        assert!(unit.is_regular());
        assert!(!sigma_m_fan_q2().is_regular());
    }

    #[test]
    fn terminality_examples() {
        let unit = Fan::from_cone(cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
        assert!(unit.is_terminal());

        let f = sigma_m_fan_q2();
        assert!(!f.is_terminal());
        let (_, witness) = f.terminality_witness().unwrap();
        assert_eq!(witness, lv(&[1, 0, 0]));
    }

    fn sigma_min_q2() -> Fan {
        let mut s = SubdivisionSchedule::new();
        s.push(lv(&[5, -1, -2]), "terminal.r1");
        s.push(lv(&[1, 0, 0]), "terminal.r2");
        sigma_m_fan_q2().apply_schedule(&s).unwrap().0
    }

    #[test]
    fn minimal_terminal_model_q2_is_terminal_with_strict_roof() {
        let f = sigma_min_q2();
        assert_eq!(f.num_cones(), 4);
        assert!(f.is_terminal());
        let report = f.roof_concavity();
        assert_eq!(report.global, Concavity::StrictlyConcave);
        // wall spanned by (0,1,0) and (5,-1,-2): value 6/5 on one side
        let e2 = f.rays().iter().position(|r| r == &lv(&[0, 1, 0])).unwrap();
        let p = f.rays().iter().position(|r| r == &lv(&[5, -1, -2])).unwrap();
        let mut wall_rays = vec![e2, p];
        wall_rays.sort_unstable();
        let wall = report
            .walls
            .iter()
            .find(|w| w.wall_rays == wall_rays)
            .expect("internal wall present");
        assert!(wall.values.contains(&rat(6, 5)));
    }

    #[test]
    fn flat_split_is_concave_but_not_strict() {
        let c1 = cone(&[&[1, 0], &[1, 1]]);
        let c2 = cone(&[&[1, 1], &[1, 2]]);
        let f = Fan::from_cones(vec![c1, c2]).unwrap();
        let report = f.roof_concavity();
        assert_eq!(report.global, Concavity::Concave);
        assert_eq!(report.walls.len(), 1);
        assert_eq!(report.walls[0].values, [rat(1, 1), rat(1, 1)]);
    }

    #[test]
    fn single_cone_fan_is_vacuously_strictly_concave() {
        let report = sigma_m_fan_q2().roof_concavity();
        assert!(report.walls.is_empty());
        assert_eq!(report.global, Concavity::StrictlyConcave);
    }

    #[test]
    fn shed_volume_examples() {
        let unit = Fan::from_cone(cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
        assert_eq!(unit.shed_volume(), rat(1, 6));
        assert_eq!(sigma_m_fan_q2().shed_volume(), rat(15, 6));
        // subdivided model: 5 + 1 + 2 + 1 = 9 over 3!
        assert_eq!(sigma_min_q2().shed_volume(), rat(9, 6));
    }

    #[test]
    fn completeness_examples() {
        assert!(!sigma_m_fan_q2().is_complete());
        let e1 = [15i64, -3, -7];
        let e2 = [0i64, 1, 0];
        let e3 = [0i64, 0, 1];
        let e4 = [-1i64, 0, 0];
        let bar = Fan::from_cones(vec![
            cone(&[&e1, &e2, &e3]),
            cone(&[&e1, &e2, &e4]),
            cone(&[&e1, &e3, &e4]),
            cone(&[&e2, &e3, &e4]),
        ])
        .unwrap();
        assert!(bar.is_complete());
    }

    #[test]
    fn projection_examples() {
        // (x1, x3)
        let m13 = IntMatrix::from_i64(&[&[1, 0, 0], &[0, 0, 1]]);
        let p = sigma_m_fan_q2().project(&m13).unwrap();
        assert_eq!(p.num_cones(), 1);
        assert_eq!(p.rays(), &[lv(&[0, 1]), lv(&[15, -7])]);

        // (-x3, x2) of the complete fan gives a complete 2D fan on 3 rays
        let e1 = [15i64, -3, -7];
        let bar = Fan::from_cones(vec![
            cone(&[&e1, &[0, 1, 0], &[0, 0, 1]]),
            cone(&[&e1, &[0, 1, 0], &[-1, 0, 0]]),
            cone(&[&e1, &[0, 0, 1], &[-1, 0, 0]]),
            cone(&[&[0, 1, 0], &[0, 0, 1], &[-1, 0, 0]]),
        ])
        .unwrap();
        let m32 = IntMatrix::from_i64(&[&[0, 0, -1], &[0, 1, 0]]);
        let p = bar.project(&m32).unwrap();
        assert_eq!(p.rays(), &[lv(&[-1, 0]), lv(&[0, 1]), lv(&[7, -3])]);
        assert_eq!(p.num_cones(), 3);
        assert!(p.is_complete());

        // unit cone dropping x3
        let unit = Fan::from_cone(cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
        let m12 = IntMatrix::from_i64(&[&[1, 0, 0], &[0, 1, 0]]);
        let p = unit.project(&m12).unwrap();
        assert_eq!(p.rays(), &[lv(&[0, 1]), lv(&[1, 0])]);
        assert_eq!(p.num_cones(), 1);
    }

    #[test]
    fn projection_rejects_rank_deficient_maps() {
        let m = IntMatrix::from_i64(&[&[1, 0, 0], &[2, 0, 0]]);
        assert_eq!(
            sigma_m_fan_q2().project(&m).unwrap_err(),
            FanError::ProjectionRank
        );
    }

    #[test]
    fn regular_fans_are_terminal() {
        let f = sigma_min_q2();
        let mut ess = SubdivisionSchedule::new();
        for (ray, label) in [
            ([11i64, -2, -5], "ess.k2.l1"),
            ([7, -1, -3], "ess.k1.l1"),
            ([3, 0, -1], "ess.k0.l1"),
            ([9, -1, -4], "ess.k1.l2"),
            ([13, -2, -6], "ess.k2.l2"),
        ] {
            ess.push(lv(&ray), label);
        }
        let (g, _) = f.apply_schedule(&ess).unwrap();
        assert!(g.is_regular());
        assert!(g.is_terminal());
    }

    #[test]
    fn json_roundtrip_is_identity() {
        let f = sigma_min_q2();
        let s = f.to_json_string().unwrap();
        let g = Fan::from_json_str(&s).unwrap();
        assert_eq!(f, g);
        assert_eq!(g.to_json_string().unwrap(), s);
        assert_eq!(f.labels(), g.labels());
    }

    #[test]
    fn json_shape_is_canonical() {
        let f = Fan::from_cone(cone(&[&[1, 0], &[0, 1]]));
        let s = f.to_json_string().unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["cones", "dim", "labels", "rays"]);
    }

    #[test]
    fn json_rejects_malformed_input() {
        assert!(matches!(
            Fan::from_json_str("{\"dim\": 3}"),
            Err(FanError::Json(_))
        ));
        assert!(Fan::from_json_str("not json").is_err());
    }

    #[test]
    fn validation_rejects_overlapping_cones() {
        // second cone's ray lies strictly inside the first cone
        let err = Fan::from_cones(vec![
            cone(&[&[1, 0], &[0, 1]]),
            cone(&[&[1, 1], &[-1, 1]]),
        ])
        .unwrap_err();
        assert!(matches!(err, FanError::RayInForeignCone { .. }));
    }
}
