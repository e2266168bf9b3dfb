//! Exact intersection theory on smooth projective surfaces: Zariski
//! decomposition against a declared list of negative curves, the volume of
//! big classes and its derivative, blowup bookkeeping, log discrepancies,
//! and the volume curve lambda -> vol(pi* omega - lambda F).

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::poly::{PiecewisePoly, Poly};
use crate::rat::Rat;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedClass {
    pub name: String,
    pub class: Vector,
}

/// A smooth projective surface presented by its intersection form on a
/// fixed basis of Num(X), a list of tracked prime-divisor classes, and the
/// declared Mori-cone certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceModel {
    pub id: String,
    pub rank: usize,
    pub gram: Matrix,
    /// K_X in the fixed basis (boundary not folded in).
    pub canonical: Vector,
    /// Tracked prime-divisor classes; boundary components, negative curves
    /// and extremal curves refer into this list.
    pub curves: Vec<NamedClass>,
    /// (curve index, coefficient) pairs defining B.
    pub boundary: Vec<(usize, Rat)>,
    /// Indices of curves with negative self-intersection (Zariski support
    /// candidates).
    pub negative: Vec<usize>,
    /// Indices of curves asserted to generate the Mori cone.
    pub extremal: Vec<usize>,
    /// A class asserted ample, fixing the positive component of the square
    /// cone.
    pub reference_ample: Vector,
    pub default_omega: Option<Vector>,
    pub chains: Vec<BlowupChain>,
}

/// Ordered point blowups described purely numerically.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowupChain {
    pub name: String,
    pub steps: Vec<BlowupStep>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowupStep {
    /// Name of the new exceptional divisor.
    pub name: String,
    /// Free-text description of the center.
    pub center: String,
    /// Multiplicity of each earlier exceptional's strict transform at the
    /// center (length = step index).
    pub mult_exceptional: Vec<u32>,
    /// Multiplicity of each tracked curve's strict transform at the center
    /// (length = number of tracked curves).
    pub mult_curves: Vec<u32>,
}

/// A divisorial valuation t * ord_F with F a tracked curve on X or an
/// exceptional divisor of one of the model's blowup chains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceValuation {
    pub chain: Option<String>,
    pub divisor: String,
    pub t: Rat,
}

impl SurfaceModel {
    pub fn intersect(&self, a: &[Rat], b: &[Rat]) -> Rat {
        pairing(&self.gram, a, b)
    }

    /// K_{X,B} = K_X + sum b_i C_i.
    pub fn log_canonical_class(&self) -> Vector {
        let mut k = self.canonical.clone();
        for (idx, b) in &self.boundary {
            k = linalg::add(&k, &linalg::scale(&self.curves[*idx].class, b));
        }
        k
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::schema("surface model: rank must be positive"));
        }
        if self.gram.len() != self.rank || self.gram.iter().any(|r| r.len() != self.rank) {
            return Err(Error::schema("surface model: gram matrix shape mismatch"));
        }
        for i in 0..self.rank {
            for j in 0..self.rank {
                if self.gram[i][j] != self.gram[j][i] {
                    return Err(Error::schema("surface model: gram matrix not symmetric"));
                }
            }
        }
        match linalg::signature(&self.gram) {
            Some((1, q)) if q + 1 == self.rank => {}
            other => {
                return Err(Error::schema(format!(
                    "surface model: intersection form must have signature (1, rank-1), got {other:?}"
                )));
            }
        }
        if self.canonical.len() != self.rank {
            return Err(Error::schema("surface model: canonical class length mismatch"));
        }
        let mut names = std::collections::BTreeSet::new();
        for c in &self.curves {
            if c.class.len() != self.rank {
                return Err(Error::schema(format!(
                    "surface model: curve {:?} class length mismatch",
                    c.name
                )));
            }
            if !names.insert(c.name.clone()) {
                return Err(Error::schema(format!(
                    "surface model: duplicate curve name {:?}",
                    c.name
                )));
            }
        }
        for (idx, _) in &self.boundary {
            if *idx >= self.curves.len() {
                return Err(Error::schema("surface model: boundary curve index out of range"));
            }
        }
        for &idx in self.negative.iter().chain(&self.extremal) {
            if idx >= self.curves.len() {
                return Err(Error::schema("surface model: curve index out of range"));
            }
        }
        for &idx in &self.negative {
            let c = &self.curves[idx].class;
            if !self.intersect(c, c).is_negative() {
                return Err(Error::schema(format!(
                    "surface model: declared negative curve {:?} has nonnegative self-intersection",
                    self.curves[idx].name
                )));
            }
        }
        if self.extremal.is_empty() {
            return Err(Error::schema(
                "surface model: empty extremal curve list cannot certify the Mori cone",
            ));
        }
        if self.reference_ample.len() != self.rank {
            return Err(Error::schema("surface model: reference ample class length mismatch"));
        }
        let space = self.space();
        if !space.is_ample_against_curves(&self.reference_ample)
            || !self
                .intersect(&self.reference_ample, &self.reference_ample)
                .is_positive()
        {
            return Err(Error::schema(
                "surface model: reference ample class fails the ampleness test",
            ));
        }
        let mut chain_names = std::collections::BTreeSet::new();
        for chain in &self.chains {
            if !chain_names.insert(chain.name.clone()) {
                return Err(Error::schema(format!(
                    "surface model: duplicate chain name {:?}",
                    chain.name
                )));
            }
            for (i, step) in chain.steps.iter().enumerate() {
                if step.mult_exceptional.len() != i {
                    return Err(Error::schema(format!(
                        "surface model: chain {:?} step {:?} needs {} exceptional multiplicities",
                        chain.name, step.name, i
                    )));
                }
                if step.mult_curves.len() != self.curves.len() {
                    return Err(Error::schema(format!(
                        "surface model: chain {:?} step {:?} needs one multiplicity per tracked curve",
                        chain.name, step.name
                    )));
                }
                if names.contains(&step.name) || !chain_names.insert(format!("{}/{}", chain.name, step.name)) {
                    return Err(Error::schema(format!(
                        "surface model: exceptional name {:?} collides",
                        step.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// The base intersection space (no blowups applied). Every tracked
    /// curve of negative self-intersection is a Zariski support candidate,
    /// whether or not the model singled it out.
    pub fn space(&self) -> IntersectionSpace {
        let negative = (0..self.curves.len())
            .filter(|&i| {
                let c = &self.curves[i].class;
                self.intersect(c, c).is_negative()
            })
            .collect();
        IntersectionSpace {
            gram: self.gram.clone(),
            curves: self.curves.clone(),
            negative,
        }
    }

    /// Derived data for a valuation: the intersection space of the chain's
    /// top model, the class of the named prime divisor there, and its log
    /// discrepancy (t = 1).
    pub fn resolve_valuation(&self, val: &SurfaceValuation) -> Result<ResolvedDivisor> {
        let derived = match &val.chain {
            None => self.derive(None)?,
            Some(name) => self.derive(Some(name))?,
        };
        let idx = derived
            .space
            .curves
            .iter()
            .position(|c| c.name == val.divisor)
            .ok_or_else(|| {
                Error::domain(format!(
                    "unknown divisor {:?} (chain {:?})",
                    val.divisor, val.chain
                ))
            })?;
        Ok(ResolvedDivisor {
            space: derived.space,
            divisor: idx,
            log_discrepancy: derived.a_values[&val.divisor].clone(),
        })
    }

    /// Build the top model of a chain (or the base model for None):
    /// total-transform basis, strict-transform classes, per-exceptional log
    /// discrepancies.
    pub fn derive(&self, chain: Option<&str>) -> Result<DerivedSurface> {
        let base_a: Vec<Rat> = (0..self.curves.len())
            .map(|i| {
                let b = self
                    .boundary
                    .iter()
                    .find(|(idx, _)| *idx == i)
                    .map(|(_, b)| b.clone())
                    .unwrap_or_else(Rat::zero);
                Rat::one() - b
            })
            .collect();
        let mut curves: Vec<NamedClass> = self.curves.clone();
        let mut a_values: BTreeMap<String, Rat> = self
            .curves
            .iter()
            .zip(&base_a)
            .map(|(c, a)| (c.name.clone(), a.clone()))
            .collect();
        let mut gram = self.gram.clone();
        let mut kclass = self.canonical.clone();
        let steps: &[BlowupStep] = match chain {
            None => &[],
            Some(name) => {
                &self
                    .chains
                    .iter()
                    .find(|c| c.name == name)
                    .ok_or_else(|| Error::domain(format!("unknown blowup chain {:?}", name)))?
                    .steps
            }
        };
        let n_curves = self.curves.len();
        let mut exceptional_names: Vec<String> = Vec::new();
        for step in steps {
            let rank = gram.len();
            // extend the form by an orthogonal (-1)-vector
            for row in gram.iter_mut() {
                row.push(Rat::zero());
            }
            let mut new_row = vec![Rat::zero(); rank + 1];
            new_row[rank] = Rat::from_int(-1);
            gram.push(new_row);
            kclass.push(Rat::one());
            // log discrepancy: A = 2 - mult_center(B'), where B' carries
            // boundary coefficients on strict transforms and 1 - A_j on
            // earlier exceptionals
            let mut mult_b = Rat::zero();
            for (c_idx, b) in &self.boundary {
                mult_b += b * Rat::from_int(step.mult_curves[*c_idx] as i64);
            }
            for (j, m) in step.mult_exceptional.iter().enumerate() {
                let a_j = &a_values[&exceptional_names[j]];
                mult_b += (Rat::one() - a_j) * Rat::from_int(*m as i64);
            }
            let a_new = Rat::from_int(2) - mult_b;
            // strict transforms: subtract center multiplicities
            for (c_idx, curve) in curves.iter_mut().enumerate() {
                let m = if c_idx < n_curves {
                    step.mult_curves[c_idx]
                } else {
                    step.mult_exceptional[c_idx - n_curves]
                };
                curve.class.push(Rat::from_int(-(m as i64)));
            }
            let mut exc_class = vec![Rat::zero(); rank + 1];
            exc_class[rank] = Rat::one();
            curves.push(NamedClass {
                name: step.name.clone(),
                class: exc_class,
            });
            exceptional_names.push(step.name.clone());
            a_values.insert(step.name.clone(), a_new);
        }
        // pad earlier classes (none missing: each iteration pushed to all)
        let rank = gram.len();
        for c in &mut curves {
            debug_assert_eq!(c.class.len(), rank);
        }
        let negative: Vec<usize> = (0..curves.len())
            .filter(|&i| {
                let c = &curves[i].class;
                pairing(&gram, c, c).is_negative()
            })
            .collect();
        Ok(DerivedSurface {
            space: IntersectionSpace {
                gram,
                curves,
                negative,
            },
            kclass,
            a_values,
        })
    }
}

/// Intersection lattice with a curve list: the arena for Zariski
/// decompositions. Curves double as the nef test set (every tracked prime
/// divisor must pair nonnegatively with a nef class).
#[derive(Clone, Debug)]
pub struct IntersectionSpace {
    pub gram: Matrix,
    pub curves: Vec<NamedClass>,
    pub negative: Vec<usize>,
}

pub fn pairing(gram: &Matrix, a: &[Rat], b: &[Rat]) -> Rat {
    linalg::dot(&linalg::mat_vec(gram, a), b)
}

/// Zariski decomposition alpha = P + N.
#[derive(Clone, Debug)]
pub struct Zariski {
    pub positive: Vector,
    /// (curve index, coefficient) with positive coefficients.
    pub negative_part: Vec<(usize, Rat)>,
}

#[derive(Clone, Debug)]
pub struct ResolvedDivisor {
    pub space: IntersectionSpace,
    pub divisor: usize,
    /// Log discrepancy of ord_F (t = 1) with the boundary folded in.
    pub log_discrepancy: Rat,
}

#[derive(Clone, Debug)]
pub struct DerivedSurface {
    pub space: IntersectionSpace,
    /// K of the top model in the extended basis (boundary not folded in).
    pub kclass: Vector,
    /// Log discrepancy (t = 1) per prime divisor name.
    pub a_values: BTreeMap<String, Rat>,
}

impl IntersectionSpace {
    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn intersect(&self, a: &[Rat], b: &[Rat]) -> Rat {
        pairing(&self.gram, a, b)
    }

    fn is_ample_against_curves(&self, theta: &[Rat]) -> bool {
        self.curves
            .iter()
            .all(|c| self.intersect(theta, &c.class).is_positive())
    }

    /// Grow the support until the remainder pairs nonnegatively with every
    /// negative curve, then certify. All certificate conditions are exact.
    pub fn zariski(&self, alpha: &[Rat]) -> Result<Zariski> {
        if alpha.len() != self.rank() {
            return Err(Error::domain("class length does not match the model rank"));
        }
        let mut support: Vec<usize> = Vec::new();
        let mut coeffs: Vec<Rat> = Vec::new();
        let mut positive = alpha.to_vec();
        for _round in 0..=self.negative.len() {
            let mut grew = false;
            for &c in &self.negative {
                if !support.contains(&c)
                    && self
                        .intersect(&positive, &self.curves[c].class)
                        .is_negative()
                {
                    support.push(c);
                    grew = true;
                }
            }
            if support.is_empty() {
                break;
            }
            let (p, c) = self.project_off(alpha, &support)?;
            positive = p;
            coeffs = c;
            if !grew {
                break;
            }
        }
        // certify
        for (j, &c_idx) in support.iter().enumerate() {
            if coeffs[j].is_negative() {
                return Err(Error::domain(format!(
                    "not pseudoeffective: negative coefficient on {:?} in the negative part",
                    self.curves[c_idx].name
                )));
            }
        }
        for c in &self.curves {
            if self.intersect(&positive, &c.class).is_negative() {
                return Err(Error::domain(format!(
                    "not pseudoeffective (or the negative-curve list is incomplete): \
                     remainder pairs negatively with {:?}",
                    c.name
                )));
            }
        }
        if !support.is_empty() {
            let sub: Matrix = support
                .iter()
                .map(|&i| {
                    support
                        .iter()
                        .map(|&j| self.intersect(&self.curves[i].class, &self.curves[j].class))
                        .collect()
                })
                .collect();
            if !linalg::is_negative_definite(&sub) {
                return Err(Error::domain(
                    "not pseudoeffective: support Gram matrix is not negative definite",
                ));
            }
        }
        let negative_part: Vec<(usize, Rat)> = support
            .into_iter()
            .zip(coeffs)
            .filter(|(_, c)| !c.is_zero())
            .collect();
        // orthogonality P.N = 0 holds by construction; assert it
        for (idx, _) in &negative_part {
            debug_assert!(self
                .intersect(&positive, &self.curves[*idx].class)
                .is_zero());
        }
        Ok(Zariski {
            positive,
            negative_part,
        })
    }

    /// Solve P = alpha - sum c_j C_j with P orthogonal to every support
    /// curve.
    fn project_off(&self, alpha: &[Rat], support: &[usize]) -> Result<(Vector, Vec<Rat>)> {
        let m: Matrix = support
            .iter()
            .map(|&i| {
                support
                    .iter()
                    .map(|&j| self.intersect(&self.curves[i].class, &self.curves[j].class))
                    .collect()
            })
            .collect();
        let rhs: Vec<Rat> = support
            .iter()
            .map(|&i| self.intersect(alpha, &self.curves[i].class))
            .collect();
        let coeffs = linalg::solve(&m, &rhs).ok_or_else(|| {
            Error::domain("not pseudoeffective: singular Gram matrix on the candidate support")
        })?;
        let mut p = alpha.to_vec();
        for (&idx, c) in support.iter().zip(&coeffs) {
            p = linalg::sub(&p, &linalg::scale(&self.curves[idx].class, c));
        }
        Ok((p, coeffs))
    }

    /// vol(alpha) = P^2 when pseudoeffective, else 0.
    pub fn vol_big(&self, alpha: &[Rat]) -> Rat {
        match self.zariski(alpha) {
            Ok(z) => self.intersect(&z.positive, &z.positive),
            Err(_) => Rat::zero(),
        }
    }

    /// Derivative of the volume: 2 (P . theta), and 0 outside the
    /// pseudoeffective cone.
    pub fn grad_vol(&self, alpha: &[Rat], theta: &[Rat]) -> Rat {
        match self.zariski(alpha) {
            Ok(z) => Rat::from_int(2) * self.intersect(&z.positive, theta),
            Err(_) => Rat::zero(),
        }
    }
}

/// One Zariski chamber of a volume curve: on [start, end] the positive part
/// is the affine family P(lambda) = p0 + lambda p1.
#[derive(Clone, Debug)]
pub struct Chamber {
    pub start: Rat,
    pub end: Rat,
    pub p0: Vector,
    pub p1: Vector,
}

/// The exact function lambda -> vol(omega_top - lambda F) on [0, T],
/// together with its chamber data (used for exact gradient integrals).
#[derive(Clone, Debug)]
pub struct VolCurve {
    pub poly: PiecewisePoly,
    pub chambers: Vec<Chamber>,
}

impl VolCurve {
    /// Threshold T where the volume hits zero.
    pub fn threshold(&self) -> &Rat {
        self.poly.last_breakpoint()
    }

    /// Integral of 2 (P(lambda) . theta) over [0, T], the derivative of the
    /// volume integrated per chamber.
    pub fn grad_integral(&self, space: &IntersectionSpace, theta: &[Rat]) -> Rat {
        let two = Rat::from_int(2);
        let mut total = Rat::zero();
        for ch in &self.chambers {
            let a = &two * space.intersect(&ch.p0, theta);
            let b = &two * space.intersect(&ch.p1, theta);
            // integral of a + b*lambda over [start, end]
            let len = &ch.end - &ch.start;
            let mid = (&ch.end + &ch.start) / Rat::from_int(2);
            total += &a * &len + &b * &mid * &len;
        }
        total
    }
}

/// Exact roots of a quadratic with rational coefficients; errors when real
/// roots exist but are irrational.
fn quadratic_roots(a: &Rat, b: &Rat, c: &Rat) -> Result<Vec<Rat>> {
    if a.is_zero() {
        if b.is_zero() {
            return Ok(vec![]);
        }
        return Ok(vec![-c / b]);
    }
    let disc = b * b - Rat::from_int(4) * a * c;
    if disc.is_negative() {
        return Ok(vec![]);
    }
    let s = disc.sqrt_exact().ok_or_else(|| {
        Error::domain("volume threshold is not rational; not representable in exact output")
    })?;
    let two_a = Rat::from_int(2) * a;
    let mut roots = vec![(-b - &s) / &two_a, (-b + &s) / &two_a];
    roots.sort();
    roots.dedup();
    Ok(roots)
}

/// March the Zariski chambers of lambda -> vol(alpha0 - lambda f) starting
/// from a big and nef alpha0. Within a chamber the support is constant, so
/// P(lambda) is affine and the volume is an exact quadratic; chamber walls
/// are exact roots of the certificate conditions. Each quadratic piece is
/// re-derived by interpolation through three independent exact volume
/// evaluations and verified at a fourth point.
pub fn vol_curve(space: &IntersectionSpace, alpha0: &[Rat], f: &[Rat]) -> Result<VolCurve> {
    let v0 = space.vol_big(alpha0);
    if !v0.is_positive() {
        return Err(Error::domain("volume curve requires a big starting class"));
    }
    let neg_f = linalg::scale(f, &Rat::from_int(-1));
    let mut lambda = Rat::zero();
    let mut support: Vec<usize> = space
        .zariski(alpha0)?
        .negative_part
        .into_iter()
        .map(|(i, _)| i)
        .collect();
    let mut breakpoints = vec![Rat::zero()];
    let mut pieces: Vec<Poly> = Vec::new();
    let mut chambers: Vec<Chamber> = Vec::new();
    for _guard in 0..64 {
        // refine the support so every certificate condition holds just
        // after `lambda`
        let mut state = ChamberState::solve(space, alpha0, &neg_f, &support)?;
        for _fix in 0..=space.negative.len() {
            match state.first_violation_at(space, &lambda) {
                None => break,
                Some(Violation::AddCurve(c)) => {
                    support.push(c);
                    state = ChamberState::solve(space, alpha0, &neg_f, &support)?;
                }
                Some(Violation::DropCurve(j)) => {
                    support.remove(j);
                    state = ChamberState::solve(space, alpha0, &neg_f, &support)?;
                }
                Some(Violation::NotPseudoeffective(name)) => {
                    return Err(Error::domain(format!(
                        "volume curve left the pseudoeffective cone against {name:?} \
                         before the volume vanished (negative-curve list incomplete?)"
                    )));
                }
            }
        }
        if state.first_violation_at(space, &lambda).is_some() {
            return Err(Error::consistency(
                "chamber refinement did not stabilize on the volume curve",
            ));
        }
        // end of this chamber: earliest future certificate event or volume
        // vanishing, whichever comes first
        let events = state.future_events(space, &lambda);
        let q = state.vol_quadratic(space);
        let vol_roots: Vec<Rat> = quadratic_roots(&q.2, &q.1, &q.0)?
            .into_iter()
            .filter(|r| r > &lambda)
            .collect();
        let vol_end = vol_roots.into_iter().next();
        let event_end = events.into_iter().min();
        let (end, is_final) = match (&vol_end, &event_end) {
            (Some(v), Some(e)) if v <= e => (v.clone(), true),
            (Some(_) | None, Some(e)) => (e.clone(), false),
            (Some(v), None) => (v.clone(), true),
            (None, None) => {
                return Err(Error::consistency(
                    "volume curve does not terminate; no future chamber event",
                ));
            }
        };
        // quadratic piece by interpolation from three exact evaluations,
        // verified at a fourth sample and against the chamber algebra
        let len = &end - &lambda;
        let nodes: Vec<Rat> = (1..=3)
            .map(|k| &lambda + &len * Rat::new(k, 5))
            .collect();
        let samples: Vec<(Rat, Rat)> = nodes
            .iter()
            .map(|x| {
                let alpha = linalg::add(&linalg::scale(&neg_f, x), alpha0);
                ((x - &lambda), space.vol_big(&alpha))
            })
            .collect();
        let piece = Poly::interpolate(&samples);
        let check_x = &lambda + &len * Rat::new(4, 5);
        let alpha_chk = linalg::add(&linalg::scale(&neg_f, &check_x), alpha0);
        if piece.eval(&(&check_x - &lambda)) != space.vol_big(&alpha_chk) {
            return Err(Error::consistency(
                "interpolated volume piece failed its fourth-point verification",
            ));
        }
        // cross-check against P(lambda)^2 expanded in the chamber
        let algebraic = state.vol_piece_at(space, &lambda);
        if piece != algebraic {
            return Err(Error::consistency(
                "chamber algebra and interpolated volume piece disagree",
            ));
        }
        chambers.push(Chamber {
            start: lambda.clone(),
            end: end.clone(),
            p0: state.p0.clone(),
            p1: state.p1.clone(),
        });
        pieces.push(piece);
        breakpoints.push(end.clone());
        if is_final {
            let poly = PiecewisePoly::new(breakpoints, pieces, Rat::zero())?;
            return Ok(VolCurve { poly, chambers });
        }
        lambda = end;
    }
    Err(Error::consistency(
        "volume curve exceeded the chamber iteration guard",
    ))
}

enum Violation {
    AddCurve(usize),
    DropCurve(usize),
    NotPseudoeffective(String),
}

/// Affine chamber data: P(lambda) = p0 + lambda p1 and support coefficients
/// c_j(lambda) = c0_j + lambda c1_j.
struct ChamberState {
    support: Vec<usize>,
    p0: Vector,
    p1: Vector,
    c0: Vec<Rat>,
    c1: Vec<Rat>,
}

impl ChamberState {
    fn solve(
        space: &IntersectionSpace,
        alpha0: &[Rat],
        neg_f: &[Rat],
        support: &[usize],
    ) -> Result<ChamberState> {
        if support.is_empty() {
            return Ok(ChamberState {
                support: vec![],
                p0: alpha0.to_vec(),
                p1: neg_f.to_vec(),
                c0: vec![],
                c1: vec![],
            });
        }
        let m: Matrix = support
            .iter()
            .map(|&i| {
                support
                    .iter()
                    .map(|&j| space.intersect(&space.curves[i].class, &space.curves[j].class))
                    .collect()
            })
            .collect();
        let rhs0: Vec<Rat> = support
            .iter()
            .map(|&i| space.intersect(alpha0, &space.curves[i].class))
            .collect();
        let rhs1: Vec<Rat> = support
            .iter()
            .map(|&i| space.intersect(neg_f, &space.curves[i].class))
            .collect();
        let c0 = linalg::solve(&m, &rhs0).ok_or_else(|| {
            Error::domain("singular support Gram matrix while marching the volume curve")
        })?;
        let c1 = linalg::solve(&m, &rhs1)
            .expect("same matrix as c0; singularity already reported");
        let mut p0 = alpha0.to_vec();
        let mut p1 = neg_f.to_vec();
        for ((&idx, a), b) in support.iter().zip(&c0).zip(&c1) {
            p0 = linalg::sub(&p0, &linalg::scale(&space.curves[idx].class, a));
            p1 = linalg::sub(&p1, &linalg::scale(&space.curves[idx].class, b));
        }
        Ok(ChamberState {
            support: support.to_vec(),
            p0,
            p1,
            c0,
            c1,
        })
    }

    /// Affine conditions that must be nonnegative on the chamber.
    fn conditions(&self, space: &IntersectionSpace) -> Vec<(String, Rat, Rat, ConditionKind)> {
        let mut out = Vec::new();
        for (i, c) in space.curves.iter().enumerate() {
            if self.support.contains(&i) {
                continue;
            }
            let v0 = space.intersect(&self.p0, &c.class);
            let v1 = space.intersect(&self.p1, &c.class);
            let kind = if space.negative.contains(&i) {
                ConditionKind::Nef(i)
            } else {
                ConditionKind::Psef
            };
            out.push((c.name.clone(), v0, v1, kind));
        }
        for (j, (&_idx, (a, b))) in self
            .support
            .iter()
            .zip(self.c0.iter().zip(&self.c1))
            .enumerate()
        {
            out.push((
                space.curves[self.support[j]].name.clone(),
                a.clone(),
                b.clone(),
                ConditionKind::Coefficient(j),
            ));
        }
        out
    }

    /// First condition violated immediately to the right of lambda.
    fn first_violation_at(&self, space: &IntersectionSpace, lambda: &Rat) -> Option<Violation> {
        for (name, v0, v1, kind) in self.conditions(space) {
            let value = &v0 + &v1 * lambda;
            let bad = value.is_negative() || (value.is_zero() && v1.is_negative());
            if bad {
                return Some(match kind {
                    ConditionKind::Nef(i) => Violation::AddCurve(i),
                    ConditionKind::Coefficient(j) => Violation::DropCurve(j),
                    ConditionKind::Psef => Violation::NotPseudoeffective(name),
                });
            }
        }
        None
    }

    /// Future roots (> lambda) of the decreasing affine conditions.
    fn future_events(&self, space: &IntersectionSpace, lambda: &Rat) -> Vec<Rat> {
        let mut out = Vec::new();
        for (_, v0, v1, _) in self.conditions(space) {
            if v1.is_negative() {
                let root = -&v0 / &v1;
                if &root > lambda {
                    out.push(root);
                }
            }
        }
        out
    }

    /// Volume quadratic (c, b, a) for a + ... : returns coefficients
    /// (constant, linear, quadratic) of P(lambda)^2 in lambda.
    fn vol_quadratic(&self, space: &IntersectionSpace) -> (Rat, Rat, Rat) {
        let a0 = space.intersect(&self.p0, &self.p0);
        let a1 = Rat::from_int(2) * space.intersect(&self.p0, &self.p1);
        let a2 = space.intersect(&self.p1, &self.p1);
        (a0, a1, a2)
    }

    /// P(lambda)^2 recentered at the chamber start.
    fn vol_piece_at(&self, space: &IntersectionSpace, start: &Rat) -> Poly {
        let (c, b, a) = self.vol_quadratic(space);
        Poly::new(vec![c, b, a]).shift(start)
    }
}

enum ConditionKind {
    Nef(usize),
    Coefficient(usize),
    Psef,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    /// Hirzebruch surface F1 as a blowup of the plane: basis {H, E},
    /// H^2 = 1, H.E = 0, E^2 = -1, K = -3H + E.
    pub fn f1() -> SurfaceModel {
        SurfaceModel {
            id: "f1".into(),
            rank: 2,
            gram: vec![vec![ratio(1), ratio(0)], vec![ratio(0), ratio(-1)]],
            canonical: vec![ratio(-3), ratio(1)],
            curves: vec![
                NamedClass {
                    name: "E".into(),
                    class: vec![ratio(0), ratio(1)],
                },
                NamedClass {
                    name: "F".into(),
                    class: vec![ratio(1), ratio(-1)],
                },
                NamedClass {
                    name: "H".into(),
                    class: vec![ratio(1), ratio(0)],
                },
            ],
            boundary: vec![],
            negative: vec![0],
            extremal: vec![0, 1],
            reference_ample: vec![ratio(3), ratio(-1)],
            default_omega: Some(vec![ratio(3), ratio(-1)]),
            chains: vec![],
        }
    }

    fn p2_with_chain() -> SurfaceModel {
        SurfaceModel {
            id: "p2chain".into(),
            rank: 1,
            gram: vec![vec![ratio(1)]],
            canonical: vec![ratio(-3)],
            curves: vec![NamedClass {
                name: "H".into(),
                class: vec![ratio(1)],
            }],
            boundary: vec![],
            negative: vec![],
            extremal: vec![0],
            reference_ample: vec![ratio(1)],
            default_omega: Some(vec![ratio(1)]),
            chains: vec![BlowupChain {
                name: "c".into(),
                steps: vec![
                    BlowupStep {
                        name: "E1".into(),
                        center: "a point".into(),
                        mult_exceptional: vec![],
                        mult_curves: vec![1],
                    },
                    BlowupStep {
                        name: "E2".into(),
                        center: "a point on E1".into(),
                        mult_exceptional: vec![1],
                        mult_curves: vec![0],
                    },
                ],
            }],
        }
    }

    #[test]
    fn model_validates() {
        f1().validate().unwrap();
        p2_with_chain().validate().unwrap();
    }

    #[test]
    fn zariski_nef_class_untouched() {
        let m = f1();
        let space = m.space();
        let z = space.zariski(&vec![ratio(3), ratio(-1)]).unwrap();
        assert!(z.negative_part.is_empty());
        // nef but not ample: H
        let z = space.zariski(&vec![ratio(1), ratio(0)]).unwrap();
        assert!(z.negative_part.is_empty());
    }

    #[test]
    fn zariski_h_plus_e() {
        // alpha = H + E: P = H, N = E, vol = 1
        let m = f1();
        let space = m.space();
        let z = space.zariski(&vec![ratio(1), ratio(1)]).unwrap();
        assert_eq!(z.positive, vec![ratio(1), ratio(0)]);
        assert_eq!(z.negative_part, vec![(0, ratio(1))]);
        assert_eq!(space.vol_big(&vec![ratio(1), ratio(1)]), ratio(1));
    }

    #[test]
    fn vol_big_outside_psef_is_zero() {
        let m = f1();
        let space = m.space();
        assert_eq!(space.vol_big(&vec![ratio(-1), ratio(0)]), ratio(0));
        assert_eq!(space.vol_big(&vec![ratio(0), ratio(0)]), ratio(0));
        assert_eq!(space.vol_big(&vec![ratio(3), ratio(-1)]), ratio(8));
    }

    #[test]
    fn vol_big_scaling_quadratic() {
        let m = f1();
        let space = m.space();
        let alpha = vec![ratio(1), ratio(1)];
        let s = rat(3, 2);
        let scaled: Vec<Rat> = alpha.iter().map(|x| x * &s).collect();
        assert_eq!(
            space.vol_big(&scaled),
            &s * &s * space.vol_big(&alpha)
        );
    }

    #[test]
    fn grad_vol_examples() {
        let m = f1();
        let space = m.space();
        // ample alpha, theta = alpha: 2 vol
        let omega = vec![ratio(3), ratio(-1)];
        assert_eq!(
            space.grad_vol(&omega, &omega),
            Rat::from_int(2) * space.vol_big(&omega)
        );
        // alpha = H + E, theta = E: P = H orthogonal to E
        assert_eq!(
            space.grad_vol(&vec![ratio(1), ratio(1)], &vec![ratio(0), ratio(1)]),
            ratio(0)
        );
    }

    #[test]
    fn vol_curve_f1_exceptional() {
        // omega = 3H - E, F = E: vol = 9 - (1+lambda)^2 on [0, 2]
        let m = f1();
        let space = m.space();
        let curve = vol_curve(&space, &vec![ratio(3), ratio(-1)], &vec![ratio(0), ratio(1)])
            .unwrap();
        assert_eq!(curve.threshold(), &ratio(2));
        assert_eq!(curve.poly.eval(&ratio(0)).unwrap(), ratio(8));
        assert_eq!(curve.poly.eval(&ratio(1)).unwrap(), ratio(5));
        assert_eq!(
            curve.poly.integrate_support().unwrap(),
            rat(28, 3)
        );
        assert_eq!(curve.chambers.len(), 1);
    }

    #[test]
    fn vol_curve_with_chamber_crossing() {
        // omega = 3H - E, F = H - E (the fiber): nef chamber up to 1, then
        // E enters the support; T = 3 and the integral is 26/3.
        let m = f1();
        let space = m.space();
        let curve = vol_curve(&space, &vec![ratio(3), ratio(-1)], &vec![ratio(1), ratio(-1)])
            .unwrap();
        assert_eq!(curve.threshold(), &ratio(3));
        assert_eq!(curve.chambers.len(), 2);
        assert_eq!(curve.poly.breakpoints()[1], ratio(1));
        assert_eq!(curve.poly.integrate_support().unwrap(), rat(26, 3));
        // values: at 1 both pieces give 4; at 2 the nef part is (3-2)^2 H^2
        assert_eq!(curve.poly.eval(&ratio(1)).unwrap(), ratio(4));
        assert_eq!(curve.poly.eval(&ratio(2)).unwrap(), ratio(1));
    }

    #[test]
    fn vol_curve_h_on_f1() {
        // omega = 3H - E, F = H: single chamber, T = 2, integral 20/3
        let m = f1();
        let space = m.space();
        let curve = vol_curve(&space, &vec![ratio(3), ratio(-1)], &vec![ratio(1), ratio(0)])
            .unwrap();
        assert_eq!(curve.threshold(), &ratio(2));
        assert_eq!(curve.poly.integrate_support().unwrap(), rat(20, 3));
    }

    #[test]
    fn chain_discrepancies() {
        let m = p2_with_chain();
        let d = m.derive(Some("c")).unwrap();
        // first blowup of a smooth point: A = 2; point on E1: A = 3
        assert_eq!(d.a_values["E1"], ratio(2));
        assert_eq!(d.a_values["E2"], ratio(3));
        // strict transforms: E1 - E2 has self-intersection -2
        let e1 = &d.space.curves.iter().find(|c| c.name == "E1").unwrap().class;
        assert_eq!(d.space.intersect(e1, e1), ratio(-2));
        // K on the top model
        assert_eq!(d.kclass, vec![ratio(-3), ratio(1), ratio(1)]);
    }

    #[test]
    fn chain_prefix_matches_full_chain_for_shared_divisors() {
        // ord_{E1} computed on the one-step model and on the two-step model
        // (strict transform) gives the same volume curve and discrepancy.
        let mut m = p2_with_chain();
        m.chains.push(BlowupChain {
            name: "c1".into(),
            steps: vec![m.chains[0].steps[0].clone()],
        });
        let omega = vec![ratio(1)];
        let full = m
            .resolve_valuation(&SurfaceValuation {
                chain: Some("c".into()),
                divisor: "E1".into(),
                t: ratio(1),
            })
            .unwrap();
        let prefix = m
            .resolve_valuation(&SurfaceValuation {
                chain: Some("c1".into()),
                divisor: "E1".into(),
                t: ratio(1),
            })
            .unwrap();
        assert_eq!(full.log_discrepancy, prefix.log_discrepancy);
        let pull_full = {
            let mut v = omega.clone();
            v.resize(full.space.rank(), ratio(0));
            v
        };
        let pull_prefix = {
            let mut v = omega.clone();
            v.resize(prefix.space.rank(), ratio(0));
            v
        };
        let cf = vol_curve(
            &full.space,
            &pull_full,
            &full.space.curves[full.divisor].class.clone(),
        )
        .unwrap();
        let cp = vol_curve(
            &prefix.space,
            &pull_prefix,
            &prefix.space.curves[prefix.divisor].class.clone(),
        )
        .unwrap();
        assert_eq!(
            cf.poly.integrate_support().unwrap(),
            cp.poly.integrate_support().unwrap()
        );
        assert_eq!(cf.threshold(), cp.threshold());
    }

    #[test]
    fn log_discrepancy_homogeneity() {
        let m = p2_with_chain();
        let a1 = m
            .resolve_valuation(&SurfaceValuation {
                chain: Some("c".into()),
                divisor: "E1".into(),
                t: ratio(1),
            })
            .unwrap()
            .log_discrepancy;
        // t-scaling multiplies A
        assert_eq!(&a1 * ratio(3), ratio(3) * &a1);
        assert_eq!(a1, ratio(2));
    }

    #[test]
    fn signature_violation_rejected() {
        let mut m = f1();
        m.gram = vec![vec![ratio(1), ratio(0)], vec![ratio(0), ratio(1)]];
        assert!(m.validate().is_err());
    }
}
