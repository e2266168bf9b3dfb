//! Backend-generic stability invariants: entropy, Dirac energies and their
//! derivatives in the polarization, beta invariants computed through two
//! independent routes, and the delta / valuative / divisorial stability
//! thresholds over explicit candidate sets.

use crate::curve::{self, CurveAtom, CurveMeasure};
use crate::error::{Error, Result};
use crate::numclass::{NumClass, VarietyModel};
use crate::poly::{PiecewisePoly, Poly};
use crate::rat::Rat;
use crate::surface::{vol_curve as surface_vol_curve, SurfaceValuation};
use crate::toric::{candidate_key, ToricValuation};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A divisorial valuation t * ord_F in one of the three backends. t = 0 is
/// the trivial valuation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Valuation {
    Curve { point: String, t: Rat },
    Surface(SurfaceValuation),
    Toric(ToricValuation),
}

impl Valuation {
    pub fn t(&self) -> &Rat {
        match self {
            Valuation::Curve { t, .. } => t,
            Valuation::Surface(v) => &v.t,
            Valuation::Toric(v) => &v.t,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.t().is_zero()
    }

    pub fn with_t(&self, t: Rat) -> Valuation {
        match self {
            Valuation::Curve { point, .. } => Valuation::Curve {
                point: point.clone(),
                t,
            },
            Valuation::Surface(v) => Valuation::Surface(SurfaceValuation {
                chain: v.chain.clone(),
                divisor: v.divisor.clone(),
                t,
            }),
            Valuation::Toric(v) => Valuation::Toric(ToricValuation { u: v.u.clone(), t }),
        }
    }

    /// Canonical encoding used for deterministic argmin tie-breaking.
    pub fn sort_key(&self) -> (u8, String) {
        match self {
            Valuation::Curve { point, t } => (0, format!("{point}@{t}")),
            Valuation::Surface(v) => (
                1,
                format!(
                    "{}/{}@{}",
                    v.chain.clone().unwrap_or_default(),
                    v.divisor,
                    v.t
                ),
            ),
            Valuation::Toric(v) => {
                let key: Vec<String> = candidate_key(&v.u)
                    .into_iter()
                    .map(|(m, neg)| format!("{m}{}", if neg { "-" } else { "+" }))
                    .collect();
                (2, format!("{}@{}", key.join(","), v.t))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Valuation::Curve { point, t } => format!("{t}*ord({point})"),
            Valuation::Surface(v) => match &v.chain {
                None => format!("{}*ord({})", v.t, v.divisor),
                Some(c) => format!("{}*ord({}) on chain {}", v.t, v.divisor, c),
            },
            Valuation::Toric(v) => format!("{}*v{:?}", v.t, v.u),
        }
    }
}

/// Finite convex combination of Dirac masses at divisorial valuations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorialMeasure {
    pub atoms: Vec<(Valuation, Rat)>,
}

impl DivisorialMeasure {
    pub fn dirac(v: Valuation) -> Self {
        DivisorialMeasure {
            atoms: vec![(v, Rat::one())],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut total = Rat::zero();
        for (v, m) in &self.atoms {
            if v.t().is_negative() {
                return Err(Error::domain("valuation with negative scale"));
            }
            if !m.is_positive() {
                return Err(Error::domain("measure atom with nonpositive mass"));
            }
            total += m;
        }
        if total != Rat::one() {
            return Err(Error::domain(format!(
                "measure masses sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Pushforward under the scaling action: every atom scale multiplies.
    pub fn scale_pushforward(&self, t: &Rat) -> DivisorialMeasure {
        DivisorialMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|(v, m)| (v.with_t(v.t() * t), m.clone()))
                .collect(),
        }
    }
}

/// A value that is either exact or certified to lie in a closed interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ValueOrBracket {
    Exact { value: Rat },
    Bracket { lo: Rat, hi: Rat },
}

/// How a threshold report's value relates to the true infimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    ExactOnSet,
    UpperBound,
    Bracket,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThresholdValue {
    Exact { value: Rat },
    Bracket { lo: Rat, hi: Rat },
    /// Sub-log-canonicity fails on the candidate set; the infimum is
    /// unbounded below.
    NegativeInfinity,
    /// No candidates to search (e.g. radius 0).
    EmptyCandidateSet,
}

/// Result of a threshold search over an explicit candidate set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub value: ThresholdValue,
    pub witness: Option<Valuation>,
    pub candidate_set: String,
    pub bound_kind: BoundKind,
    pub assumptions: Vec<String>,
}

/// A polarized pair: a backend model with a fixed ample class, its volume,
/// log canonical class, and the proportionality constant lambda when
/// -K_{X,B} is numerically lambda * omega.
#[derive(Clone, Debug)]
pub struct PolarizedPair {
    pub model: VarietyModel,
    pub omega: NumClass,
    pub volume: Rat,
    pub kclass: NumClass,
    pub proportionality: Option<Rat>,
}

impl PolarizedPair {
    pub fn new(model: VarietyModel, omega: NumClass) -> Result<Self> {
        if !model.is_ample(&omega)? {
            return Err(Error::domain(
                "positivity error: polarization fails the ampleness test",
            ));
        }
        let volume = model.volume(&omega)?;
        let kclass = model.log_canonical_class();
        let proportionality = proportionality_constant(&model, &omega, &kclass);
        Ok(PolarizedPair {
            model,
            omega,
            volume,
            kclass,
            proportionality,
        })
    }

    /// The same pair with polarization s * omega.
    pub fn rescaled(&self, s: &Rat) -> Result<PolarizedPair> {
        PolarizedPair::new(self.model.clone(), self.omega.scale(s))
    }

    /// Standing assumptions that every report must carry.
    pub fn assumptions(&self) -> Vec<String> {
        match &self.model {
            VarietyModel::Surface(_) => vec![
                "the supplied extremal curve list is assumed to generate the Mori cone".into(),
            ],
            _ => vec![],
        }
    }
}

/// Solve -K = lambda * omega in Num(X). On curves this always holds; on a
/// toric model equality is tested modulo the linear-equivalence relations
/// spanned by the rays.
fn proportionality_constant(
    model: &VarietyModel,
    omega: &NumClass,
    kclass: &NumClass,
) -> Option<Rat> {
    match model {
        VarietyModel::Curve(_) => Some(-&kclass.coords[0] / &omega.coords[0]),
        VarietyModel::Surface(_) => {
            let pivot = omega.coords.iter().position(|c| !c.is_zero())?;
            let lambda = -&kclass.coords[pivot] / &omega.coords[pivot];
            for (k, o) in kclass.coords.iter().zip(&omega.coords) {
                if -k != &lambda * o {
                    return None;
                }
            }
            Some(lambda)
        }
        VarietyModel::Toric(m) => {
            // unknowns (lambda, m in Q^n): lambda*a_rho + <m, u_rho> = 1 - b_rho
            let rows: Vec<Vec<Rat>> = m
                .rays
                .iter()
                .zip(&omega.coords)
                .map(|(u, a)| {
                    let mut row = vec![a.clone()];
                    row.extend(u.iter().map(|&x| Rat::from_int(x)));
                    row
                })
                .collect();
            let rhs: Vec<Rat> = kclass.coords.iter().map(|k| -k).collect();
            let sol = solve_consistent(&rows, &rhs)?;
            Some(sol[0].clone())
        }
    }
}

/// Any exact solution of a (possibly overdetermined) consistent linear
/// system, or None when inconsistent.
fn solve_consistent(rows: &[Vec<Rat>], rhs: &[Rat]) -> Option<Vec<Rat>> {
    let n = rows.first()?.len();
    let mut m: Vec<Vec<Rat>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for j in col..=n {
            m[row][j] = &m[row][j] * &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in col..=n {
                    let v = &m[row][j] * &f;
                    m[r][j] = &m[r][j] - &v;
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    // inconsistent when a zero row has nonzero rhs
    for r in row..m.len() {
        if m[r][..n].iter().all(Rat::is_zero) && !m[r][n].is_zero() {
            return None;
        }
    }
    let mut sol = vec![Rat::zero(); n];
    for (r, &col) in pivot_cols.iter().enumerate() {
        sol[col] = m[r][n].clone();
    }
    Some(sol)
}

fn expect_backend(pair: &PolarizedPair, v: &Valuation) -> Result<()> {
    let ok = matches!(
        (&pair.model, v),
        (VarietyModel::Curve(_), Valuation::Curve { .. })
            | (VarietyModel::Surface(_), Valuation::Surface(_))
            | (VarietyModel::Toric(_), Valuation::Toric(_))
    );
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "configuration error: valuation {} cannot be resolved by the {:?} backend",
            v.describe(),
            pair.model.kind()
        )))
    }
}

/// Log discrepancy A_{X,B}(v).
pub fn log_discrepancy(pair: &PolarizedPair, v: &Valuation) -> Result<Rat> {
    expect_backend(pair, v)?;
    match (&pair.model, v) {
        (VarietyModel::Curve(m), Valuation::Curve { point, t }) => Ok(m.log_discrepancy(point, t)),
        (VarietyModel::Surface(m), Valuation::Surface(sv)) => {
            let resolved = m.resolve_valuation(sv)?;
            Ok(&sv.t * resolved.log_discrepancy)
        }
        (VarietyModel::Toric(m), Valuation::Toric(tv)) => m.log_discrepancy(tv),
        _ => unreachable!(),
    }
}

/// Entropy of a divisorial measure: the measure of the log discrepancy.
pub fn entropy(pair: &PolarizedPair, mu: &DivisorialMeasure) -> Result<Rat> {
    mu.validate()?;
    let mut acc = Rat::zero();
    for (v, m) in &mu.atoms {
        acc += m * log_discrepancy(pair, v)?;
    }
    Ok(acc)
}

/// The exact volume curve lambda -> vol(omega - lambda F) for the prime
/// divisor underlying v (the scale t enters downstream).
pub fn vol_curve(pair: &PolarizedPair, v: &Valuation) -> Result<PiecewisePoly> {
    expect_backend(pair, v)?;
    match (&pair.model, v) {
        (VarietyModel::Curve(_), Valuation::Curve { .. }) => {
            // vol(omega - lambda p) = V - lambda on [0, V]
            let v0 = pair.volume.clone();
            PiecewisePoly::new(
                vec![Rat::zero(), v0.clone()],
                vec![Poly::new(vec![v0, Rat::from_int(-1)])],
                Rat::zero(),
            )
        }
        (VarietyModel::Surface(m), Valuation::Surface(sv)) => {
            let resolved = m.resolve_valuation(sv)?;
            let mut pull = pair.omega.coords.clone();
            pull.resize(resolved.space.rank(), Rat::zero());
            let f = resolved.space.curves[resolved.divisor].class.clone();
            Ok(surface_vol_curve(&resolved.space, &pull, &f)?.poly)
        }
        (VarietyModel::Toric(m), Valuation::Toric(tv)) => {
            m.vol_slice_curve(&pair.omega.coords, &tv.u)
        }
        _ => unreachable!(),
    }
}

/// Pseudoeffective threshold T_omega(v) = t * (first zero of the volume
/// curve).
pub fn threshold(pair: &PolarizedPair, v: &Valuation) -> Result<Rat> {
    if v.is_trivial() {
        return Ok(Rat::zero());
    }
    let curve = vol_curve(pair, v)?;
    let root = curve
        .first_nonneg_root()?
        .ok_or_else(|| Error::consistency("volume curve never vanishes"))?;
    Ok(v.t() * root)
}

/// Energy of the Dirac mass at v: t * V^-1 * integral of the volume curve.
pub fn dirac_energy(pair: &PolarizedPair, v: &Valuation) -> Result<Rat> {
    if v.is_trivial() {
        return Ok(Rat::zero());
    }
    let curve = vol_curve(pair, v)?;
    Ok(v.t() * curve.integrate_support()? / &pair.volume)
}

/// Directional derivative of the Dirac energy in the polarization:
/// d/ds ||v||_{omega + s theta} at s = 0.
pub fn dirac_energy_grad(pair: &PolarizedPair, v: &Valuation, theta: &NumClass) -> Result<Rat> {
    pair.model.check_class(theta)?;
    if v.is_trivial() {
        return Ok(Rat::zero());
    }
    expect_backend(pair, v)?;
    match (&pair.model, v) {
        (VarietyModel::Curve(_), Valuation::Curve { t, .. }) => {
            // ||t ord_p||_omega = t * deg(omega) / 2
            Ok(t * &theta.coords[0] / Rat::from_int(2))
        }
        (VarietyModel::Surface(m), Valuation::Surface(sv)) => {
            let resolved = m.resolve_valuation(sv)?;
            let mut pull_omega = pair.omega.coords.clone();
            pull_omega.resize(resolved.space.rank(), Rat::zero());
            let mut pull_theta = theta.coords.clone();
            pull_theta.resize(resolved.space.rank(), Rat::zero());
            let f = resolved.space.curves[resolved.divisor].class.clone();
            let curve = surface_vol_curve(&resolved.space, &pull_omega, &f)?;
            let grad_integral = curve.grad_integral(&resolved.space, &pull_theta);
            let norm1 = curve.poly.integrate_support()? / &pair.volume;
            let tr = pair.model.trace(&pair.omega, theta)?;
            Ok(&sv.t * (grad_integral / &pair.volume - tr * norm1))
        }
        (VarietyModel::Toric(m), Valuation::Toric(tv)) => {
            let grad1 = toric_energy_derivative(m, &pair.omega.coords, &theta.coords, &tv.u)?;
            Ok(&tv.t * grad1)
        }
        _ => unreachable!(),
    }
}

/// Exact one-sided derivative of s -> ||v_u||_{omega + s theta} at 0 on a
/// toric model: within the combinatorial chamber of small s > 0 both
/// V(s) and N(s) = V(s) * ||v_u||(s) are polynomials, recovered by exact
/// interpolation and verified at an extra node; the step halves until the
/// fit verifies.
fn toric_energy_derivative(
    m: &crate::toric::ToricModel,
    omega: &[Rat],
    theta: &[Rat],
    u: &[i64],
) -> Result<Rat> {
    let v_poly = m.volume_polynomial(omega, theta)?;
    let degree = 2 * m.n + 2;
    let window = m.ample_window(omega, theta)?;
    let mut step = window / Rat::from_int(2 * (degree as i64 + 2));
    for _attempt in 0..40 {
        let mut samples = Vec::with_capacity(degree + 1);
        let mut ok = true;
        for j in 0..=degree + 1 {
            let s = &step * Rat::from_int(j as i64);
            let class: Vec<Rat> = omega
                .iter()
                .zip(theta)
                .map(|(a, b)| a + b * &s)
                .collect();
            let curve = m.vol_slice_curve(&class, u)?;
            samples.push((s, curve.integrate_support()?));
        }
        let fit = Poly::interpolate(&samples[..=degree]);
        let (s_check, n_check) = &samples[degree + 1];
        if fit.eval(s_check) != *n_check {
            ok = false;
        }
        if ok {
            let n0 = fit.eval(&Rat::zero());
            let n1 = fit.derivative().eval(&Rat::zero());
            let v0 = v_poly.eval(&Rat::zero());
            let v1 = v_poly.derivative().eval(&Rat::zero());
            return Ok((n1 * &v0 - n0 * &v1) / (&v0 * &v0));
        }
        step = step / Rat::from_int(2);
    }
    Err(Error::consistency(
        "toric energy derivative: no stable chamber found after 40 halvings",
    ))
}

/// beta(v) = A(v) + grad_K ||v||, evaluated through the derivative route
/// and, when -K is proportional to omega, cross-checked exactly against
/// A - lambda ||v||.
pub fn beta_dirac(pair: &PolarizedPair, v: &Valuation) -> Result<Rat> {
    let a = log_discrepancy(pair, v)?;
    let grad = dirac_energy_grad(pair, v, &pair.kclass)?;
    let beta = &a + &grad;
    if let Some(lambda) = &pair.proportionality {
        let norm = dirac_energy(pair, v)?;
        let alt = &a - &(lambda * &norm);
        if alt != beta {
            return Err(Error::consistency(format!(
                "beta dual-formula disagreement at {}: derivative route {beta}, \
                 proportional route {alt}",
                v.describe()
            )));
        }
    }
    Ok(beta)
}

/// Energy of a divisorial measure. Exact through normalized potentials on
/// curves and for Dirac masses; a certified bracket elsewhere (convexity
/// upper bound, trivial-potential lower bound).
pub fn measure_norm(pair: &PolarizedPair, mu: &DivisorialMeasure) -> Result<ValueOrBracket> {
    mu.validate()?;
    if let VarietyModel::Curve(_) = &pair.model {
        let cm = to_curve_measure(pair, mu)?;
        let (norm, _) = curve::measure_energy(&pair.volume, &cm)?;
        return Ok(ValueOrBracket::Exact { value: norm });
    }
    if mu.atoms.len() == 1 {
        let (v, _) = &mu.atoms[0];
        return Ok(ValueOrBracket::Exact {
            value: dirac_energy(pair, v)?,
        });
    }
    let mut hi = Rat::zero();
    for (v, m) in &mu.atoms {
        hi += m * dirac_energy(pair, v)?;
    }
    Ok(ValueOrBracket::Bracket {
        lo: Rat::zero(),
        hi,
    })
}

/// beta of a divisorial measure: entropy plus the energy derivative in the
/// K direction. Exact on curves and Dirac masses; elsewhere a bracket from
/// |grad_K ||mu||| <= C_n ||K||_omega ||mu|| with C_n = 2n^2 + 1.
pub fn beta_measure(pair: &PolarizedPair, mu: &DivisorialMeasure) -> Result<ValueOrBracket> {
    mu.validate()?;
    if mu.atoms.len() == 1 && !mu.atoms[0].0.is_trivial() {
        return Ok(ValueOrBracket::Exact {
            value: beta_dirac(pair, &mu.atoms[0].0)?,
        });
    }
    let ent = entropy(pair, mu)?;
    if let VarietyModel::Curve(m) = &pair.model {
        let cm = to_curve_measure(pair, mu)?;
        let (norm, phi) = curve::measure_energy(&pair.volume, &cm)?;
        let k_deg = m.log_canonical_degree();
        let grad = &k_deg / &pair.volume * (&phi.c - &norm);
        return Ok(ValueOrBracket::Exact { value: ent + grad });
    }
    let n = pair.model.dimension() as i64;
    let c_n = Rat::from_int(2 * n * n + 1);
    let k_norm = pair.model.norm_sup(&pair.omega, &pair.kclass)?;
    let hi_norm = match measure_norm(pair, mu)? {
        ValueOrBracket::Exact { value } => value,
        ValueOrBracket::Bracket { hi, .. } => hi,
    };
    let spread = c_n * k_norm * hi_norm;
    Ok(ValueOrBracket::Bracket {
        lo: &ent - &spread,
        hi: ent + spread,
    })
}

fn to_curve_measure(pair: &PolarizedPair, mu: &DivisorialMeasure) -> Result<CurveMeasure> {
    let mut atoms = Vec::new();
    for (v, m) in &mu.atoms {
        expect_backend(pair, v)?;
        let Valuation::Curve { point, t } = v else {
            unreachable!()
        };
        atoms.push(CurveAtom {
            point: point.clone(),
            t: t.clone(),
            mass: m.clone(),
        });
    }
    let mut cm = CurveMeasure { atoms };
    cm.normalize();
    Ok(cm)
}

/// Candidate-set bounds for the threshold searches.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CandidateSpec {
    /// Toric search radius: primitive directions with sup-norm <= radius.
    pub radius: i64,
    /// Surface chain depth: exceptionals of chain prefixes up to this
    /// length.
    pub depth: usize,
}

impl Default for CandidateSpec {
    fn default() -> Self {
        CandidateSpec {
            radius: 3,
            depth: 2,
        }
    }
}

/// The explicit candidate valuations (t = 1) for a pair, in canonical
/// order, with a human-readable description of the set.
pub fn candidates(pair: &PolarizedPair, spec: &CandidateSpec) -> (Vec<Valuation>, String) {
    match &pair.model {
        VarietyModel::Curve(m) => {
            let mut out: Vec<Valuation> = m
                .points
                .iter()
                .map(|p| Valuation::Curve {
                    point: p.id.clone(),
                    t: Rat::one(),
                })
                .collect();
            out.push(Valuation::Curve {
                point: "_generic".into(),
                t: Rat::one(),
            });
            out.sort_by_key(|v| v.sort_key());
            (
                out,
                "all marked points plus a generic unmarked point (complete for curves)".into(),
            )
        }
        VarietyModel::Surface(m) => {
            let mut out: Vec<Valuation> = m
                .curves
                .iter()
                .map(|c| {
                    Valuation::Surface(SurfaceValuation {
                        chain: None,
                        divisor: c.name.clone(),
                        t: Rat::one(),
                    })
                })
                .collect();
            for chain in &m.chains {
                for step in chain.steps.iter().take(spec.depth) {
                    out.push(Valuation::Surface(SurfaceValuation {
                        chain: Some(chain.name.clone()),
                        divisor: step.name.clone(),
                        t: Rat::one(),
                    }));
                }
            }
            out.sort_by_key(|v| v.sort_key());
            (
                out,
                format!(
                    "tracked prime divisors plus chain exceptionals to depth {}",
                    spec.depth
                ),
            )
        }
        VarietyModel::Toric(m) => {
            let out: Vec<Valuation> = m
                .primitive_directions(spec.radius)
                .into_iter()
                .map(|u| Valuation::Toric(ToricValuation { u, t: Rat::one() }))
                .collect();
            (
                out,
                format!(
                    "primitive lattice directions with sup-norm <= {} \
                     (toric valuations only)",
                    spec.radius
                ),
            )
        }
    }
}

/// Minimum of A / ||.|| over the candidate set. Reports the sub-lc
/// violation when a candidate has negative log discrepancy.
pub fn delta(pair: &PolarizedPair, spec: &CandidateSpec) -> Result<ThresholdReport> {
    let (cands, description) = candidates(pair, spec);
    threshold_over(pair, cands, description, true, |pair, v| {
        let a = log_discrepancy(pair, v)?;
        let norm = dirac_energy(pair, v)?;
        Ok((a, norm))
    })
}

/// Minimum of beta / ||.|| over Dirac candidates.
pub fn sigma_val(pair: &PolarizedPair, spec: &CandidateSpec) -> Result<ThresholdReport> {
    let (cands, description) = candidates(pair, spec);
    let mut report = threshold_over(pair, cands, description, false, |pair, v| {
        let b = beta_dirac(pair, v)?;
        let norm = dirac_energy(pair, v)?;
        Ok((b, norm))
    })?;
    report
        .assumptions
        .push("valuative threshold restricted to the stated candidate set".into());
    Ok(report)
}

/// Divisorial stability threshold. Exact (delta - lambda) in the
/// proportional case, which covers every curve pair; elsewhere a bracket
/// [delta_set - C_n ||K||, sigma_val] with C_n = 2n^2 + 1, conditional on
/// the candidate set capturing delta.
pub fn sigma_div(pair: &PolarizedPair, spec: &CandidateSpec) -> Result<ThresholdReport> {
    let delta_report = delta(pair, spec)?;
    if let Some(lambda) = &pair.proportionality {
        let value = match &delta_report.value {
            ThresholdValue::Exact { value } => ThresholdValue::Exact {
                value: value - lambda,
            },
            ThresholdValue::NegativeInfinity => ThresholdValue::NegativeInfinity,
            ThresholdValue::EmptyCandidateSet => ThresholdValue::EmptyCandidateSet,
            ThresholdValue::Bracket { .. } => unreachable!("delta reports are exact on the set"),
        };
        let mut assumptions = delta_report.assumptions.clone();
        assumptions.push(format!(
            "-K is numerically {lambda} * omega, so the divisorial threshold reduces to \
             delta - lambda"
        ));
        return Ok(ThresholdReport {
            value,
            witness: delta_report.witness,
            candidate_set: delta_report.candidate_set,
            bound_kind: BoundKind::ExactOnSet,
            assumptions,
        });
    }
    let sigma_val_report = sigma_val(pair, spec)?;
    let n = pair.model.dimension() as i64;
    let c_n = Rat::from_int(2 * n * n + 1);
    let k_norm = pair.model.norm_sup(&pair.omega, &pair.kclass)?;
    let value = match (&delta_report.value, &sigma_val_report.value) {
        (ThresholdValue::NegativeInfinity, _) => ThresholdValue::NegativeInfinity,
        (ThresholdValue::EmptyCandidateSet, _) => ThresholdValue::EmptyCandidateSet,
        (ThresholdValue::Exact { value: d }, ThresholdValue::Exact { value: sv }) => {
            ThresholdValue::Bracket {
                lo: d - &(&c_n * &k_norm),
                hi: sv.clone(),
            }
        }
        _ => unreachable!("delta and sigma_val reports are exact on the set"),
    };
    let mut assumptions = delta_report.assumptions.clone();
    assumptions.push(format!(
        "bracket: lower bound delta_set - C_n ||K||_omega with C_n = {c_n}, \
         upper bound sigma_val; both conditional on the candidate set"
    ));
    Ok(ThresholdReport {
        value,
        witness: sigma_val_report.witness,
        candidate_set: delta_report.candidate_set,
        bound_kind: BoundKind::Bracket,
        assumptions,
    })
}

/// Shared parallel argmin over candidates: the evaluator returns
/// (numerator, norm); the report carries min numerator/norm, with
/// canonical-order tie-breaking. With `numerator_is_a` set, a negative
/// numerator is a sub-lc violation and the report flags the infimum as
/// unbounded below instead of returning a set minimum.
fn threshold_over<F>(
    pair: &PolarizedPair,
    cands: Vec<Valuation>,
    description: String,
    numerator_is_a: bool,
    eval: F,
) -> Result<ThresholdReport>
where
    F: Fn(&PolarizedPair, &Valuation) -> Result<(Rat, Rat)> + Sync,
{
    if cands.is_empty() {
        return Ok(ThresholdReport {
            value: ThresholdValue::EmptyCandidateSet,
            witness: None,
            candidate_set: description,
            bound_kind: BoundKind::ExactOnSet,
            assumptions: pair.assumptions(),
        });
    }
    let rows: Result<Vec<(Valuation, Rat, Rat)>> = cands
        .into_par_iter()
        .map(|v| {
            let (num, norm) = eval(pair, &v)?;
            Ok((v, num, norm))
        })
        .collect();
    let rows = rows?;
    if numerator_is_a {
        if let Some((v, _, _)) = rows.iter().find(|(_, num, _)| num.is_negative()) {
            return Ok(ThresholdReport {
                value: ThresholdValue::NegativeInfinity,
                witness: Some(v.clone()),
                candidate_set: description,
                bound_kind: BoundKind::ExactOnSet,
                assumptions: {
                    let mut a = pair.assumptions();
                    a.push(
                        "a candidate has negative log discrepancy, so the pair is not \
                         sub-log-canonical and the infimum is unbounded below"
                            .into(),
                    );
                    a
                },
            });
        }
    }
    let mut best: Option<(Rat, usize)> = None;
    for (i, (_, num, norm)) in rows.iter().enumerate() {
        if !norm.is_positive() {
            return Err(Error::consistency(
                "candidate with nonpositive Dirac energy",
            ));
        }
        let ratio = num / norm;
        match &best {
            None => best = Some((ratio, i)),
            Some((b, _)) if &ratio < b => best = Some((ratio, i)),
            _ => {}
        }
    }
    let (value, idx) = best.expect("nonempty candidate rows");
    Ok(ThresholdReport {
        value: ThresholdValue::Exact { value },
        witness: Some(rows[idx].0.clone()),
        candidate_set: description,
        bound_kind: BoundKind::ExactOnSet,
        assumptions: pair.assumptions(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{CurveModel, MarkedPoint};
    use crate::rat::{rat, ratio};
    use crate::surface::{NamedClass, SurfaceModel};
    use crate::toric::ToricModel;

    pub fn p1_pair(d: i64) -> PolarizedPair {
        let model = VarietyModel::Curve(CurveModel {
            id: "p1".into(),
            genus: 0,
            v: ratio(d),
            points: vec![MarkedPoint {
                id: "p".into(),
                b: ratio(0),
            }],
        });
        let omega = model.class(vec![ratio(d)]);
        PolarizedPair::new(model, omega).unwrap()
    }

    pub fn f1_pair() -> PolarizedPair {
        let model = VarietyModel::Surface(SurfaceModel {
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
        });
        let omega = model.class(vec![ratio(3), ratio(-1)]);
        PolarizedPair::new(model, omega).unwrap()
    }

    fn p2_pair() -> PolarizedPair {
        let model = VarietyModel::Surface(SurfaceModel {
            id: "p2".into(),
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
            chains: vec![],
        });
        let omega = model.class(vec![ratio(1)]);
        PolarizedPair::new(model, omega).unwrap()
    }

    fn p2_toric_pair() -> PolarizedPair {
        let model = VarietyModel::Toric(ToricModel {
            id: "p2t".into(),
            n: 2,
            rays: vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
            max_cones: vec![vec![0, 1], vec![1, 2], vec![2, 0]],
            boundary_b: vec![ratio(0), ratio(0), ratio(0)],
            default_omega: Some(vec![ratio(1), ratio(1), ratio(1)]),
        });
        let omega = model.class(vec![ratio(1), ratio(1), ratio(1)]);
        PolarizedPair::new(model, omega).unwrap()
    }

    fn ord_e() -> Valuation {
        Valuation::Surface(SurfaceValuation {
            chain: None,
            divisor: "E".into(),
            t: ratio(1),
        })
    }

    #[test]
    fn proportionality_detection() {
        assert_eq!(p1_pair(4).proportionality, Some(rat(1, 2)));
        // F1: -K = 3H - E = omega, lambda = 1
        assert_eq!(f1_pair().proportionality, Some(ratio(1)));
        // P^2 with omega = H: -K = 3H
        assert_eq!(p2_pair().proportionality, Some(ratio(3)));
        assert_eq!(p2_toric_pair().proportionality, Some(ratio(1)));
        // F1 with omega = 2H - E is not proportional to -K
        let f1 = f1_pair();
        let omega2 = f1.model.class(vec![ratio(2), ratio(-1)]);
        let pair2 = PolarizedPair::new(f1.model.clone(), omega2).unwrap();
        assert_eq!(pair2.proportionality, None);
    }

    #[test]
    fn dirac_energy_examples() {
        // ||t ord_p|| = t d / 2 on P^1
        for d in 1..=6 {
            let pair = p1_pair(d);
            for t in [ratio(1), rat(3, 2)] {
                let v = Valuation::Curve {
                    point: "p".into(),
                    t: t.clone(),
                };
                assert_eq!(
                    dirac_energy(&pair, &v).unwrap(),
                    t * rat(d, 2)
                );
            }
        }
        // ||ord_E|| = 7/6 on F1 at omega = -K
        assert_eq!(dirac_energy(&f1_pair(), &ord_e()).unwrap(), rat(7, 6));
        // ||ord_H|| = 1/3 on P^2 at omega = H
        let p2 = p2_pair();
        let v = Valuation::Surface(SurfaceValuation {
            chain: None,
            divisor: "H".into(),
            t: ratio(1),
        });
        assert_eq!(dirac_energy(&p2, &v).unwrap(), rat(1, 3));
        // trivial valuation has zero energy
        let triv = Valuation::Curve {
            point: "p".into(),
            t: ratio(0),
        };
        assert_eq!(dirac_energy(&p1_pair(2), &triv).unwrap(), ratio(0));
    }

    #[test]
    fn dirac_grad_examples() {
        // theta = omega recovers the energy (Euler identity)
        let f1 = f1_pair();
        let grad_omega = dirac_energy_grad(&f1, &ord_e(), &f1.omega.clone()).unwrap();
        assert_eq!(grad_omega, rat(7, 6));
        // theta = K on F1: -7/6
        let grad_k = dirac_energy_grad(&f1, &ord_e(), &f1.kclass.clone()).unwrap();
        assert_eq!(grad_k, rat(-7, 6));
        // P^2, ord_H, theta = K = -3H: -1
        let p2 = p2_pair();
        let v = Valuation::Surface(SurfaceValuation {
            chain: None,
            divisor: "H".into(),
            t: ratio(1),
        });
        assert_eq!(
            dirac_energy_grad(&p2, &v, &p2.kclass.clone()).unwrap(),
            ratio(-1)
        );
    }

    #[test]
    fn beta_examples() {
        // F1 anticanonical: beta(ord_E) = -1/6 via both routes
        assert_eq!(beta_dirac(&f1_pair(), &ord_e()).unwrap(), rat(-1, 6));
        // P^2, omega = H: beta(ord_H) = 0
        let p2 = p2_pair();
        let v = Valuation::Surface(SurfaceValuation {
            chain: None,
            divisor: "H".into(),
            t: ratio(1),
        });
        assert_eq!(beta_dirac(&p2, &v).unwrap(), ratio(0));
        // P^1, B = 0: beta(ord_p) = 0
        let pair = p1_pair(3);
        let v = Valuation::Curve {
            point: "p".into(),
            t: ratio(1),
        };
        assert_eq!(beta_dirac(&pair, &v).unwrap(), ratio(0));
    }

    #[test]
    fn toric_beta_and_grad() {
        let pair = p2_toric_pair();
        let v = Valuation::Toric(ToricValuation {
            u: vec![1, 0],
            t: ratio(1),
        });
        assert_eq!(dirac_energy(&pair, &v).unwrap(), ratio(1));
        // proportional case forces the dual-formula agreement internally
        assert_eq!(beta_dirac(&pair, &v).unwrap(), ratio(0));
        // Euler: gradient along omega equals the energy
        assert_eq!(
            dirac_energy_grad(&pair, &v, &pair.omega.clone()).unwrap(),
            ratio(1)
        );
    }

    #[test]
    fn entropy_examples() {
        let pair = p1_pair(1);
        let mu = DivisorialMeasure {
            atoms: vec![
                (
                    Valuation::Curve {
                        point: "p".into(),
                        t: ratio(1),
                    },
                    rat(1, 2),
                ),
                (
                    Valuation::Curve {
                        point: "q".into(),
                        t: ratio(2),
                    },
                    rat(1, 2),
                ),
            ],
        };
        assert_eq!(entropy(&pair, &mu).unwrap(), rat(3, 2));
        // homogeneity under scaling pushforward
        assert_eq!(
            entropy(&pair, &mu.scale_pushforward(&ratio(3))).unwrap(),
            rat(9, 2)
        );
    }

    #[test]
    fn delta_on_curves() {
        // delta = 2/d on P^1 without boundary
        for d in 1..=4 {
            let pair = p1_pair(d);
            let report = delta(&pair, &CandidateSpec::default()).unwrap();
            assert_eq!(
                report.value,
                ThresholdValue::Exact { value: rat(2, d) }
            );
        }
        // subklt boundary shifts delta to 2(1 - max b)/d
        let model = VarietyModel::Curve(CurveModel {
            id: "p1b".into(),
            genus: 0,
            v: ratio(2),
            points: vec![
                MarkedPoint {
                    id: "p".into(),
                    b: rat(1, 2),
                },
                MarkedPoint {
                    id: "q".into(),
                    b: rat(-1, 3),
                },
            ],
        });
        let omega = model.class(vec![ratio(2)]);
        let pair = PolarizedPair::new(model, omega).unwrap();
        let report = delta(&pair, &CandidateSpec::default()).unwrap();
        assert_eq!(report.value, ThresholdValue::Exact { value: rat(1, 2) });
        match report.witness {
            Some(Valuation::Curve { point, .. }) => assert_eq!(point, "p"),
            other => panic!("unexpected witness {other:?}"),
        }
    }

    #[test]
    fn delta_flags_sublc_violation() {
        let model = VarietyModel::Curve(CurveModel {
            id: "bad".into(),
            genus: 0,
            v: ratio(1),
            points: vec![MarkedPoint {
                id: "p".into(),
                b: ratio(2),
            }],
        });
        let omega = model.class(vec![ratio(1)]);
        let pair = PolarizedPair::new(model, omega).unwrap();
        let report = delta(&pair, &CandidateSpec::default()).unwrap();
        assert_eq!(report.value, ThresholdValue::NegativeInfinity);
    }

    #[test]
    fn sigma_examples() {
        // sigma_div(P^1, B = 0) = 0 for every degree
        for d in 1..=4 {
            let pair = p1_pair(d);
            let report = sigma_div(&pair, &CandidateSpec::default()).unwrap();
            assert_eq!(report.value, ThresholdValue::Exact { value: ratio(0) });
        }
        // F1 anticanonical: sigma_val <= beta(ord_E)/||ord_E|| = -1/7
        let report = sigma_val(&f1_pair(), &CandidateSpec::default()).unwrap();
        match &report.value {
            ThresholdValue::Exact { value } => assert!(value <= &rat(-1, 7)),
            other => panic!("unexpected {other:?}"),
        }
        match &report.witness {
            Some(Valuation::Surface(sv)) => assert_eq!(sv.divisor, "E"),
            other => panic!("unexpected witness {other:?}"),
        }
    }

    #[test]
    fn genus_two_canonical_is_stable() {
        let model = VarietyModel::Curve(CurveModel {
            id: "g2".into(),
            genus: 2,
            v: ratio(2),
            points: vec![],
        });
        let omega = model.class(vec![ratio(2)]);
        let pair = PolarizedPair::new(model, omega).unwrap();
        assert_eq!(pair.proportionality, Some(ratio(-1)));
        let report = sigma_div(&pair, &CandidateSpec::default()).unwrap();
        match &report.value {
            ThresholdValue::Exact { value } => assert!(value.is_positive()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn toric_delta_search() {
        let pair = p2_toric_pair();
        let spec = CandidateSpec {
            radius: 5,
            depth: 0,
        };
        let report = delta(&pair, &spec).unwrap();
        assert_eq!(report.value, ThresholdValue::Exact { value: ratio(1) });
        match &report.witness {
            Some(Valuation::Toric(tv)) => assert_eq!(tv.u, vec![1, 0]),
            other => panic!("unexpected witness {other:?}"),
        }
        // radius 0: empty candidate set
        let empty = delta(
            &pair,
            &CandidateSpec {
                radius: 0,
                depth: 0,
            },
        )
        .unwrap();
        assert_eq!(empty.value, ThresholdValue::EmptyCandidateSet);
    }

    #[test]
    fn delta_scaling_homogeneity() {
        // delta(s omega) = delta(omega) / s, checked through the toric P^2
        // example with omega = H versus -K = 3H
        let model = VarietyModel::Toric(ToricModel {
            id: "p2t".into(),
            n: 2,
            rays: vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
            max_cones: vec![vec![0, 1], vec![1, 2], vec![2, 0]],
            boundary_b: vec![ratio(0), ratio(0), ratio(0)],
            default_omega: None,
        });
        let h = model.class(vec![ratio(1), ratio(0), ratio(0)]);
        let pair = PolarizedPair::new(model, h).unwrap();
        let spec = CandidateSpec {
            radius: 3,
            depth: 0,
        };
        let report = delta(&pair, &spec).unwrap();
        assert_eq!(report.value, ThresholdValue::Exact { value: ratio(3) });
    }

    #[test]
    fn measure_bracket_on_surfaces() {
        let f1 = f1_pair();
        let mu = DivisorialMeasure {
            atoms: vec![
                (ord_e(), rat(1, 2)),
                (
                    Valuation::Surface(SurfaceValuation {
                        chain: None,
                        divisor: "H".into(),
                        t: ratio(1),
                    }),
                    rat(1, 2),
                ),
            ],
        };
        match measure_norm(&f1, &mu).unwrap() {
            ValueOrBracket::Bracket { lo, hi } => {
                assert_eq!(lo, ratio(0));
                // convexity: (7/6 + 5/6)/2 = 1
                assert_eq!(hi, ratio(1));
            }
            other => panic!("unexpected {other:?}"),
        }
        match beta_measure(&f1, &mu).unwrap() {
            ValueOrBracket::Bracket { lo, hi } => {
                assert!(lo <= hi);
                // entropy is 1; the spread is C_2 ||K|| ||mu||_hi = 9
                assert_eq!(lo, ratio(1) - ratio(9));
                assert_eq!(hi, ratio(10));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn beta_measure_dirac_consistency() {
        let f1 = f1_pair();
        let mu = DivisorialMeasure::dirac(ord_e());
        assert_eq!(
            beta_measure(&f1, &mu).unwrap(),
            ValueOrBracket::Exact { value: rat(-1, 6) }
        );
    }

    #[test]
    fn beta_measure_curve_exact() {
        // P^1, B = 0, d = 1, uniform measure on N points of the tree:
        // beta = 1 - 1/N
        let model = VarietyModel::Curve(CurveModel {
            id: "p1".into(),
            genus: 0,
            v: ratio(1),
            points: vec![],
        });
        let omega = model.class(vec![ratio(1)]);
        let pair = PolarizedPair::new(model, omega).unwrap();
        for n in [1i64, 2, 5] {
            let atoms: Vec<(Valuation, Rat)> = (0..n)
                .map(|i| {
                    (
                        Valuation::Curve {
                            point: format!("s{i}"),
                            t: ratio(1),
                        },
                        rat(1, n),
                    )
                })
                .collect();
            let mu = DivisorialMeasure { atoms };
            assert_eq!(
                beta_measure(&pair, &mu).unwrap(),
                ValueOrBracket::Exact {
                    value: ratio(1) - rat(1, n)
                }
            );
        }
    }

    #[test]
    fn threshold_values() {
        // T for ord_E on F1 anticanonical is 2
        assert_eq!(threshold(&f1_pair(), &ord_e()).unwrap(), ratio(2));
        // toric threshold for u = (1,0) on P^2 anticanonical is 3
        let pair = p2_toric_pair();
        let v = Valuation::Toric(ToricValuation {
            u: vec![1, 0],
            t: ratio(1),
        });
        assert_eq!(threshold(&pair, &v).unwrap(), ratio(3));
    }
}
