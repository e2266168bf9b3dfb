//! Pluripotential theory on the Berkovich analytification of a smooth
//! projective curve with boundary divisor.
//!
//! The analytification is a tree: one ray of valuations t*ord_p per closed
//! point p, all glued at the trivial valuation. A finite-type PL potential
//! is a convex, eventually-constant PL function on finitely many rays, and
//! everything downstream (Monge-Ampere measures, energies, Ding and Mabuchi
//! functionals) is a finite rational expression in its slopes.

use crate::error::{Error, Result};
use crate::rat::Rat;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Smooth projective curve with a boundary divisor B = sum b_p * p and a
/// default polarization degree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveModel {
    pub id: String,
    pub genus: u32,
    /// Default polarization degree; operations take the degree explicitly
    /// so a model can be scanned over polarizations.
    pub v: Rat,
    pub points: Vec<MarkedPoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub id: String,
    pub b: Rat,
}

impl CurveModel {
    pub fn validate(&self) -> Result<()> {
        if !self.v.is_positive() {
            return Err(Error::schema("curve model: polarization degree V must be > 0"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.points {
            if p.id.is_empty() {
                return Err(Error::schema("curve model: empty point id"));
            }
            if !seen.insert(p.id.clone()) {
                return Err(Error::schema(format!(
                    "curve model: duplicate point id {:?}",
                    p.id
                )));
            }
        }
        Ok(())
    }

    /// deg K_X = 2g - 2.
    pub fn canonical_degree(&self) -> Rat {
        Rat::from_int(2 * self.genus as i64 - 2)
    }

    /// deg K_{X,B} = 2g - 2 + sum_p b_p.
    pub fn log_canonical_degree(&self) -> Rat {
        self.points
            .iter()
            .fold(self.canonical_degree(), |acc, p| acc + &p.b)
    }

    /// Boundary coefficient at a point; unmarked points carry 0.
    pub fn b_coeff(&self, point: &str) -> Rat {
        self.points
            .iter()
            .find(|p| p.id == point)
            .map(|p| p.b.clone())
            .unwrap_or_else(Rat::zero)
    }

    /// Log discrepancy of t*ord_p: t * (1 - b_p).
    pub fn log_discrepancy(&self, point: &str, t: &Rat) -> Rat {
        t * &(Rat::one() - self.b_coeff(point))
    }

    /// All b_p < 1 (log discrepancy positive away from the trivial valuation).
    pub fn is_subklt(&self) -> bool {
        self.points.iter().all(|p| p.b < Rat::one())
    }
}

/// Finite-type PL omega-psh potential on the tree: the value at the trivial
/// valuation plus one convex PL ray function per active point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PLPotential {
    /// Value at the trivial valuation; also sup of the potential.
    pub c: Rat,
    /// Active rays keyed by point id; deterministic iteration order.
    pub rays: BTreeMap<String, RayFn>,
}

/// Convex PL function on one ray, anchored at 0 with value 0. Segment i
/// carries `slope` on [prev_end, end]; after the final end the slope is 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayFn {
    pub segments: Vec<RaySegment>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaySegment {
    pub end: Rat,
    pub slope: Rat,
}

impl RayFn {
    /// Slope just after 0 (the most negative slope by convexity).
    pub fn initial_slope(&self) -> Rat {
        self.segments
            .first()
            .map(|s| s.slope.clone())
            .unwrap_or_else(Rat::zero)
    }

    /// Relative value at parameter t (value 0 at t = 0).
    pub fn value(&self, t: &Rat) -> Rat {
        let mut acc = Rat::zero();
        let mut prev = Rat::zero();
        for seg in &self.segments {
            if t <= &seg.end {
                return acc + &seg.slope * (t - &prev);
            }
            acc += &seg.slope * (&seg.end - &prev);
            prev = seg.end.clone();
        }
        acc
    }

    /// Breakpoints paired with the slope jump there, final segment end
    /// jumping to slope 0.
    fn slope_jumps(&self) -> Vec<(Rat, Rat)> {
        let mut out = Vec::new();
        for i in 0..self.segments.len() {
            let here = &self.segments[i].slope;
            let next = if i + 1 < self.segments.len() {
                self.segments[i + 1].slope.clone()
            } else {
                Rat::zero()
            };
            let jump = next - here;
            if !jump.is_zero() {
                out.push((self.segments[i].end.clone(), jump));
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let mut prev_end = Rat::zero();
        let mut prev_slope: Option<Rat> = None;
        for seg in &self.segments {
            if seg.end <= prev_end {
                return Err(Error::domain(
                    "not omega-psh: ray breakpoints must be strictly increasing",
                ));
            }
            if seg.slope.is_positive() {
                return Err(Error::domain("not omega-psh: positive slope on a ray"));
            }
            if let Some(p) = &prev_slope {
                if &seg.slope < p {
                    return Err(Error::domain(
                        "not omega-psh: slopes must be nondecreasing along each ray",
                    ));
                }
            }
            prev_slope = Some(seg.slope.clone());
            prev_end = seg.end.clone();
        }
        Ok(())
    }

    fn is_trivial(&self) -> bool {
        self.segments.iter().all(|s| s.slope.is_zero())
    }

    /// Merge adjacent equal slopes and drop trailing zero-slope segments.
    fn normalize(&mut self) {
        let mut out: Vec<RaySegment> = Vec::new();
        for seg in self.segments.drain(..) {
            match out.last_mut() {
                Some(last) if last.slope == seg.slope => last.end = seg.end,
                _ => out.push(seg),
            }
        }
        while out.last().map_or(false, |s| s.slope.is_zero()) {
            out.pop();
        }
        self.segments = out;
    }
}

impl PLPotential {
    /// The constant potential c.
    pub fn constant(c: Rat) -> Self {
        PLPotential {
            c,
            rays: BTreeMap::new(),
        }
    }

    /// Build and validate against the polarization degree.
    pub fn new(c: Rat, rays: BTreeMap<String, RayFn>, v_omega: &Rat) -> Result<Self> {
        let mut pot = PLPotential { c, rays };
        for ray in pot.rays.values_mut() {
            ray.normalize();
        }
        pot.rays.retain(|_, r| !r.is_trivial());
        pot.validate(v_omega)?;
        Ok(pot)
    }

    pub fn validate(&self, v_omega: &Rat) -> Result<()> {
        let mut total_initial = Rat::zero();
        for ray in self.rays.values() {
            ray.validate()?;
            total_initial += -ray.initial_slope();
        }
        if &total_initial > v_omega {
            return Err(Error::domain(
                "not omega-psh: initial slopes exceed the polarization degree",
            ));
        }
        Ok(())
    }

    /// Value at t*ord_p.
    pub fn value(&self, point: &str, t: &Rat) -> Rat {
        match self.rays.get(point) {
            Some(ray) => &self.c + ray.value(t),
            None => self.c.clone(),
        }
    }

    /// sup = value at the trivial valuation.
    pub fn sup(&self) -> Rat {
        self.c.clone()
    }

    pub fn add_constant(&self, a: &Rat) -> PLPotential {
        PLPotential {
            c: &self.c + a,
            rays: self.rays.clone(),
        }
    }

    /// Scaling action: (t . phi)(v) = t * phi(v / t); breakpoints stretch by
    /// t, slopes are unchanged, the constant scales.
    pub fn scale_action(&self, t: &Rat) -> PLPotential {
        assert!(t.is_positive());
        let rays = self
            .rays
            .iter()
            .map(|(p, ray)| {
                let segments = ray
                    .segments
                    .iter()
                    .map(|s| RaySegment {
                        end: &s.end * t,
                        slope: s.slope.clone(),
                    })
                    .collect();
                (p.clone(), RayFn { segments })
            })
            .collect();
        PLPotential {
            c: &self.c * t,
            rays,
        }
    }
}

/// Divisorial probability measure on the tree: finitely many atoms
/// (point, t, mass); t = 0 is the trivial valuation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveMeasure {
    pub atoms: Vec<CurveAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveAtom {
    pub point: String,
    pub t: Rat,
    pub mass: Rat,
}

impl CurveMeasure {
    /// The trivial measure (Dirac mass at the trivial valuation).
    pub fn trivial() -> Self {
        CurveMeasure {
            atoms: vec![CurveAtom {
                point: String::new(),
                t: Rat::zero(),
                mass: Rat::one(),
            }],
        }
    }

    pub fn dirac(point: &str, t: Rat) -> Self {
        let mut m = CurveMeasure {
            atoms: vec![CurveAtom {
                point: point.to_string(),
                t,
                mass: Rat::one(),
            }],
        };
        m.normalize();
        m
    }

    /// Canonical form: the trivial atom is ("", 0), atoms are merged and
    /// sorted by (point, t), zero masses dropped.
    pub fn normalize(&mut self) {
        let mut map: BTreeMap<(String, Rat), Rat> = BTreeMap::new();
        for atom in self.atoms.drain(..) {
            let key = if atom.t.is_zero() {
                (String::new(), Rat::zero())
            } else {
                (atom.point, atom.t)
            };
            *map.entry(key).or_insert_with(Rat::zero) += atom.mass;
        }
        self.atoms = map
            .into_iter()
            .filter(|(_, m)| !m.is_zero())
            .map(|((point, t), mass)| CurveAtom { point, t, mass })
            .collect();
    }

    pub fn validate(&self) -> Result<()> {
        let mut total = Rat::zero();
        for atom in &self.atoms {
            if atom.t.is_negative() {
                return Err(Error::domain("measure atom with negative parameter"));
            }
            if !atom.mass.is_positive() {
                return Err(Error::domain("measure atom with nonpositive mass"));
            }
            total += &atom.mass;
        }
        if total != Rat::one() {
            return Err(Error::domain(format!(
                "measure masses sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.atoms.iter().all(|a| a.t.is_zero())
    }

    /// Pushforward under scaling: atom parameters multiply by t.
    pub fn scale_pushforward(&self, t: &Rat) -> CurveMeasure {
        assert!(t.is_positive());
        let mut m = CurveMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| CurveAtom {
                    point: a.point.clone(),
                    t: &a.t * t,
                    mass: a.mass.clone(),
                })
                .collect(),
        };
        m.normalize();
        m
    }

    /// Convex combination (1-t) * trivial + t * self.
    pub fn mix_with_trivial(&self, t: &Rat) -> CurveMeasure {
        assert!(!t.is_negative() && t <= &Rat::one());
        let mut atoms: Vec<CurveAtom> = self
            .atoms
            .iter()
            .map(|a| CurveAtom {
                point: a.point.clone(),
                t: a.t.clone(),
                mass: &a.mass * t,
            })
            .filter(|a| !a.mass.is_zero())
            .collect();
        let rest = Rat::one() - t;
        if !rest.is_zero() {
            atoms.push(CurveAtom {
                point: String::new(),
                t: Rat::zero(),
                mass: rest,
            });
        }
        let mut m = CurveMeasure { atoms };
        m.normalize();
        m
    }
}

/// Integral of a potential against a measure.
pub fn pair(phi: &PLPotential, mu: &CurveMeasure) -> Rat {
    mu.atoms
        .iter()
        .map(|a| &a.mass * phi.value(&a.point, &a.t))
        .sum()
}

/// Monge-Ampere measure of a potential: mass V^-1 * (slope jump) at every
/// ray breakpoint and mass 1 + V^-1 * sum of initial slopes at the trivial
/// valuation. Total mass is exactly 1.
pub fn monge_ampere(v_omega: &Rat, phi: &PLPotential) -> Result<CurveMeasure> {
    phi.validate(v_omega)?;
    let mut atoms = Vec::new();
    let mut triv_mass = Rat::one();
    for (point, ray) in &phi.rays {
        triv_mass += ray.initial_slope() / v_omega;
        for (t, jump) in ray.slope_jumps() {
            atoms.push(CurveAtom {
                point: point.clone(),
                t,
                mass: jump / v_omega,
            });
        }
    }
    if triv_mass.is_negative() {
        return Err(Error::domain("not omega-psh: negative mass at the trivial valuation"));
    }
    if !triv_mass.is_zero() {
        atoms.push(CurveAtom {
            point: String::new(),
            t: Rat::zero(),
            mass: triv_mass,
        });
    }
    let mut mu = CurveMeasure { atoms };
    mu.normalize();
    mu.validate()
        .map_err(|e| Error::consistency(format!("Monge-Ampere mass defect: {e}")))?;
    Ok(mu)
}

/// Monge-Ampere energy E(phi) = (phi . MA(phi) + phi(v_triv)) / 2.
pub fn energy(v_omega: &Rat, phi: &PLPotential) -> Result<Rat> {
    let ma = monge_ampere(v_omega, phi)?;
    Ok((pair(phi, &ma) + &phi.c) / Rat::from_int(2))
}

/// Twisted energy for a twist class of the given degree:
/// (deg theta / V) * phi(v_triv).
pub fn twisted_energy(v_omega: &Rat, theta_degree: &Rat, phi: &PLPotential) -> Rat {
    theta_degree / v_omega * &phi.c
}

/// Derivative of the energy in the polarization direction theta:
/// twisted energy minus trace times energy, which on a curve collapses to
/// (deg theta / V) * (phi(v_triv) - E(phi)). Translation invariant.
pub fn grad_energy(v_omega: &Rat, theta_degree: &Rat, phi: &PLPotential) -> Result<Rat> {
    let e = energy(v_omega, phi)?;
    Ok(theta_degree / v_omega * (&phi.c - &e))
}

/// Energy of a divisorial measure together with its normalized potential
/// (the unique psh solution of MA(phi) = mu with integral zero against mu).
pub fn measure_energy(v_omega: &Rat, mu: &CurveMeasure) -> Result<(Rat, PLPotential)> {
    mu.validate()?;
    // Ray by ray: with atoms at t_1 < ... < t_k of masses m_1..m_k, the
    // slope on [t_{j-1}, t_j) is -V * (m_j + ... + m_k), zero after t_k.
    let mut per_ray: BTreeMap<String, Vec<(Rat, Rat)>> = BTreeMap::new();
    for atom in &mu.atoms {
        if atom.t.is_zero() {
            continue;
        }
        per_ray
            .entry(atom.point.clone())
            .or_default()
            .push((atom.t.clone(), atom.mass.clone()));
    }
    let mut rays = BTreeMap::new();
    for (point, mut atoms) in per_ray {
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut segments = Vec::new();
        let mut tail_mass: Rat = atoms.iter().map(|(_, m)| m.clone()).sum();
        for (t, m) in &atoms {
            segments.push(RaySegment {
                end: t.clone(),
                slope: -(v_omega * &tail_mass),
            });
            tail_mass = tail_mass - m;
        }
        rays.insert(point, RayFn { segments });
    }
    let unnormalized = PLPotential::new(Rat::zero(), rays, v_omega)?;
    let shift = -pair(&unnormalized, mu);
    let phi = unnormalized.add_constant(&shift);
    let back = monge_ampere(v_omega, &phi)?;
    if &back != mu {
        return Err(Error::consistency(
            "normalized potential does not reproduce its measure",
        ));
    }
    let e = energy(v_omega, &phi)?;
    Ok((e, phi))
}

/// Symmetric functional I(phi, psi) = integral of (phi - psi) against
/// (MA(psi) - MA(phi)). Nonnegative; zero iff the operators agree and the
/// difference is constant on the supports.
pub fn i_functional(v_omega: &Rat, phi: &PLPotential, psi: &PLPotential) -> Result<Rat> {
    let ma_phi = monge_ampere(v_omega, phi)?;
    let ma_psi = monge_ampere(v_omega, psi)?;
    Ok(pair(phi, &ma_psi) - pair(phi, &ma_phi) + pair(psi, &ma_phi) - pair(psi, &ma_psi))
}

/// Deficit J_mu(phi) = ||mu|| - E(phi) + integral phi dmu >= 0, zero exactly
/// at the normalized potential of mu.
pub fn j_mu(v_omega: &Rat, mu: &CurveMeasure, phi: &PLPotential) -> Result<Rat> {
    let (norm, _) = measure_energy(v_omega, mu)?;
    Ok(norm - energy(v_omega, phi)? + pair(phi, mu))
}

/// Ding functional L(phi) - E(phi), with L the infimum of the log
/// discrepancy plus the potential over the tree. Requires a subklt pair.
pub fn ding(model: &CurveModel, v_omega: &Rat, phi: &PLPotential) -> Result<Rat> {
    if !model.is_subklt() {
        return Err(Error::domain(
            "Ding functional requires a subklt pair (all b_p < 1)",
        ));
    }
    // Inactive rays have constant potential c; their infimum over t of
    // t*A_p + c is c because A_p > 0. Active rays need the convex PL
    // minimization below.
    let mut l = phi.c.clone();
    for (point, ray) in &phi.rays {
        let a_p = Rat::one() - model.b_coeff(point);
        // objective t*A_p + phi_p(t): convex PL with slopes A_p + s_i,
        // eventually A_p > 0, so the minimum sits at the first breakpoint
        // where the slope turns nonnegative (or at t = 0).
        let mut best = phi.c.clone();
        let mut acc = phi.c.clone();
        let mut prev_end = Rat::zero();
        for seg in &ray.segments {
            let slope = &a_p + &seg.slope;
            acc += slope * (&seg.end - &prev_end);
            prev_end = seg.end.clone();
            if acc < best {
                best = acc.clone();
            }
        }
        if best < l {
            l = best;
        }
    }
    Ok(l - energy(v_omega, phi)?)
}

/// Mabuchi K-energy: entropy of MA(phi) plus the energy derivative in the
/// log canonical direction.
pub fn mabuchi(model: &CurveModel, v_omega: &Rat, phi: &PLPotential) -> Result<Rat> {
    let mu = monge_ampere(v_omega, phi)?;
    let ent = entropy(model, &mu);
    let k_deg = model.log_canonical_degree();
    Ok(ent + grad_energy(v_omega, &k_deg, phi)?)
}

/// Entropy of a divisorial measure: sum of masses times log discrepancies.
pub fn entropy(model: &CurveModel, mu: &CurveMeasure) -> Rat {
    mu.atoms
        .iter()
        .map(|a| &a.mass * model.log_discrepancy(&a.point, &a.t))
        .sum()
}

/// The model-independent potential with N rays of slope -V/N down to
/// t = 1: its Monge-Ampere measure is the uniform measure on ord_p over
/// the given points.
pub fn uniform_potential(v_omega: &Rat, points: &[String]) -> Result<PLPotential> {
    let n = Rat::from_int(points.len() as i64);
    let mut rays = BTreeMap::new();
    for p in points {
        rays.insert(
            p.clone(),
            RayFn {
                segments: vec![RaySegment {
                    end: Rat::one(),
                    slope: -(v_omega / &n),
                }],
            },
        );
    }
    PLPotential::new(Rat::zero(), rays, v_omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    fn p1(v: i64) -> CurveModel {
        CurveModel {
            id: "p1".into(),
            genus: 0,
            v: ratio(v),
            points: vec![
                MarkedPoint {
                    id: "p".into(),
                    b: ratio(0),
                },
                MarkedPoint {
                    id: "q".into(),
                    b: ratio(0),
                },
            ],
        }
    }

    fn sigma_points(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn trivial_potential_gives_trivial_measure() {
        let phi = PLPotential::constant(ratio(0));
        let mu = monge_ampere(&ratio(1), &phi).unwrap();
        assert_eq!(mu, CurveMeasure::trivial());
        assert_eq!(energy(&ratio(1), &phi).unwrap(), ratio(0));
    }

    #[test]
    fn uniform_example_reproduced() {
        // V = 1, N rays with slope -1/N down to 1: MA is the uniform
        // measure on ord_p, energy is -1/(2N), measure energy 1/(2N).
        for n in [1usize, 2, 5, 10] {
            let v = ratio(1);
            let pts = sigma_points(n);
            let phi = uniform_potential(&v, &pts).unwrap();
            let mu = monge_ampere(&v, &phi).unwrap();
            assert_eq!(mu.atoms.len(), n);
            for a in &mu.atoms {
                assert_eq!(a.t, ratio(1));
                assert_eq!(a.mass, rat(1, n as i64));
            }
            assert_eq!(energy(&v, &phi).unwrap(), rat(-1, 2 * n as i64));
            let (norm, phi_mu) = measure_energy(&v, &mu).unwrap();
            assert_eq!(norm, rat(1, 2 * n as i64));
            // normalized potential is the uniform one shifted by 1/N
            assert_eq!(phi_mu.c, rat(1, n as i64));
        }
    }

    #[test]
    fn dirac_potential_energy() {
        // V = d, single ray, slope -d down to t0: MA is the Dirac mass at
        // t0*ord_p and the energy of that measure is d*t0/2.
        let d = ratio(4);
        let t0 = rat(3, 2);
        let mu = CurveMeasure::dirac("p", t0.clone());
        let (norm, phi) = measure_energy(&d, &mu).unwrap();
        assert_eq!(norm, &d * &t0 / ratio(2));
        assert_eq!(phi.c, &d * &t0); // normalization puts value 0 at the atom
        assert_eq!(phi.value("p", &t0), ratio(0));
    }

    #[test]
    fn energy_translation_equivariance() {
        let v = ratio(3);
        let phi = uniform_potential(&v, &sigma_points(3)).unwrap();
        let c = rat(7, 5);
        let e = energy(&v, &phi).unwrap();
        let e_shift = energy(&v, &phi.add_constant(&c)).unwrap();
        assert_eq!(e_shift, e + c);
    }

    #[test]
    fn measure_energy_identity() {
        // ||MA(phi)|| = E(phi) - integral phi dMA(phi)
        let v = ratio(2);
        let phi = uniform_potential(&v, &sigma_points(4)).unwrap();
        let mu = monge_ampere(&v, &phi).unwrap();
        let (norm, _) = measure_energy(&v, &mu).unwrap();
        assert_eq!(norm, energy(&v, &phi).unwrap() - pair(&phi, &mu));
    }

    #[test]
    fn euler_identity() {
        // grad in the omega direction equals the measure energy of MA(phi)
        let v = ratio(5);
        let phi = uniform_potential(&v, &sigma_points(2)).unwrap();
        let mu = monge_ampere(&v, &phi).unwrap();
        let (norm, _) = measure_energy(&v, &mu).unwrap();
        assert_eq!(grad_energy(&v, &v, &phi).unwrap(), norm);
    }

    #[test]
    fn grad_energy_example() {
        // uniform potential on P^1, theta = K of degree -2, V = 1:
        // (-2) * (0 - (-1/(2N))) = -1/N
        let n = 4usize;
        let v = ratio(1);
        let phi = uniform_potential(&v, &sigma_points(n)).unwrap();
        assert_eq!(
            grad_energy(&v, &ratio(-2), &phi).unwrap(),
            rat(-1, n as i64)
        );
    }

    #[test]
    fn i_functional_examples() {
        let v = ratio(1);
        let n = 3usize;
        let phi = uniform_potential(&v, &sigma_points(n)).unwrap();
        assert_eq!(i_functional(&v, &phi, &phi).unwrap(), ratio(0));
        let zero = PLPotential::constant(ratio(0));
        // I(phi_Sigma, 0) = 0 - (-1/N) = 1/N
        assert_eq!(
            i_functional(&v, &phi, &zero).unwrap(),
            rat(1, n as i64)
        );
    }

    #[test]
    fn j_mu_vanishes_at_normalized_potential() {
        let v = ratio(2);
        let mu = CurveMeasure {
            atoms: vec![
                CurveAtom {
                    point: "p".into(),
                    t: ratio(1),
                    mass: rat(1, 3),
                },
                CurveAtom {
                    point: "q".into(),
                    t: rat(1, 2),
                    mass: rat(2, 3),
                },
            ],
        };
        let (_, phi_mu) = measure_energy(&v, &mu).unwrap();
        assert_eq!(j_mu(&v, &mu, &phi_mu).unwrap(), ratio(0));
        let other = uniform_potential(&v, &vec!["p".into()]).unwrap();
        assert!(!j_mu(&v, &mu, &other).unwrap().is_negative());
    }

    #[test]
    fn ding_example() {
        // P^1, B = 0, V = 1, slope -1 down to 1 on one ray, c = 0:
        // L = 0 and E = -1/2, so ding = 1/2.
        let model = p1(1);
        let v = ratio(1);
        let mut rays = BTreeMap::new();
        rays.insert(
            "p".to_string(),
            RayFn {
                segments: vec![RaySegment {
                    end: ratio(1),
                    slope: ratio(-1),
                }],
            },
        );
        let phi = PLPotential::new(ratio(0), rays, &v).unwrap();
        assert_eq!(ding(&model, &v, &phi).unwrap(), rat(1, 2));
        assert_eq!(ding(&model, &v, &PLPotential::constant(ratio(0))).unwrap(), ratio(0));
    }

    #[test]
    fn ding_scaling_homogeneity() {
        let model = p1(1);
        let v = ratio(1);
        let phi = uniform_potential(&v, &sigma_points(2)).unwrap();
        let t = rat(5, 3);
        let scaled = phi.scale_action(&t);
        assert_eq!(
            ding(&model, &v, &scaled).unwrap(),
            t * ding(&model, &v, &phi).unwrap()
        );
    }

    #[test]
    fn ding_rejects_non_subklt() {
        let model = CurveModel {
            id: "bad".into(),
            genus: 0,
            v: ratio(1),
            points: vec![MarkedPoint {
                id: "p".into(),
                b: ratio(1),
            }],
        };
        let phi = PLPotential::constant(ratio(0));
        assert!(ding(&model, &ratio(1), &phi).is_err());
    }

    #[test]
    fn mabuchi_dirac_example() {
        // P^1, degree d, potential with MA = delta_{ord_p}: entropy 1 and
        // energy gradient -1 cancel.
        for d in [1i64, 2, 5] {
            let model = p1(d);
            let v = ratio(d);
            let mu = CurveMeasure::dirac("p", ratio(1));
            let (_, phi) = measure_energy(&v, &mu).unwrap();
            assert_eq!(mabuchi(&model, &v, &phi).unwrap(), ratio(0));
        }
    }

    #[test]
    fn mabuchi_scaling_homogeneity() {
        let model = p1(1);
        let v = ratio(1);
        let phi = uniform_potential(&v, &sigma_points(3)).unwrap();
        let t = rat(7, 2);
        let scaled = phi.scale_action(&t);
        // scaling pushes MA(phi) forward, so the K-energy scales by t
        assert_eq!(
            mabuchi(&model, &v, &scaled).unwrap(),
            t * mabuchi(&model, &v, &phi).unwrap()
        );
    }

    #[test]
    fn entropy_uniform_is_one() {
        let model = p1(1);
        let phi = uniform_potential(&ratio(1), &sigma_points(7)).unwrap();
        let mu = monge_ampere(&ratio(1), &phi).unwrap();
        assert_eq!(entropy(&model, &mu), ratio(1));
    }

    #[test]
    fn psh_invariants_enforced() {
        let v = ratio(1);
        // positive slope
        let mut rays = BTreeMap::new();
        rays.insert(
            "p".to_string(),
            RayFn {
                segments: vec![RaySegment {
                    end: ratio(1),
                    slope: ratio(1),
                }],
            },
        );
        assert!(PLPotential::new(ratio(0), rays, &v).is_err());
        // slope mass exceeding V
        let mut rays = BTreeMap::new();
        rays.insert(
            "p".to_string(),
            RayFn {
                segments: vec![RaySegment {
                    end: ratio(1),
                    slope: ratio(-2),
                }],
            },
        );
        assert!(PLPotential::new(ratio(0), rays, &v).is_err());
        // concave (decreasing slopes)
        let mut rays = BTreeMap::new();
        rays.insert(
            "p".to_string(),
            RayFn {
                segments: vec![
                    RaySegment {
                        end: ratio(1),
                        slope: rat(-1, 4),
                    },
                    RaySegment {
                        end: ratio(2),
                        slope: rat(-1, 2),
                    },
                ],
            },
        );
        assert!(PLPotential::new(ratio(0), rays, &v).is_err());
    }

    #[test]
    fn affine_mix_is_exactly_quadratic() {
        // ||(1-t) mu_triv + t mu|| = t^2 ||mu|| on a curve
        let v = ratio(3);
        let mu = CurveMeasure {
            atoms: vec![
                CurveAtom {
                    point: "p".into(),
                    t: ratio(2),
                    mass: rat(1, 2),
                },
                CurveAtom {
                    point: "q".into(),
                    t: ratio(1),
                    mass: rat(1, 2),
                },
            ],
        };
        let (norm, _) = measure_energy(&v, &mu).unwrap();
        for t in [rat(1, 3), rat(2, 5), ratio(1)] {
            let mixed = mu.mix_with_trivial(&t);
            let (m, _) = measure_energy(&v, &mixed).unwrap();
            assert_eq!(m, &t * &t * &norm);
        }
    }
}
