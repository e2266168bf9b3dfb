//! Numerical classes and the positivity operations shared by all three
//! backends: volume, trace, sup-norm, Thompson ratios, ampleness.

use crate::curve::CurveModel;
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::surface::SurfaceModel;
use crate::toric::ToricModel;
use serde::{Deserialize, Serialize};

/// A numerical class in the owning backend's fixed basis: the polarization
/// degree on a curve, coordinates in the declared basis on a surface,
/// per-ray support values on a toric model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumClass {
    pub backend: String,
    pub coords: Vec<Rat>,
}

impl NumClass {
    pub fn new(backend: impl Into<String>, coords: Vec<Rat>) -> Self {
        NumClass {
            backend: backend.into(),
            coords,
        }
    }

    pub fn scale(&self, s: &Rat) -> NumClass {
        NumClass {
            backend: self.backend.clone(),
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &NumClass) -> NumClass {
        assert_eq!(self.backend, other.backend);
        NumClass {
            backend: self.backend.clone(),
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// self + t * other.
    pub fn add_scaled(&self, other: &NumClass, t: &Rat) -> NumClass {
        self.add(&other.scale(t))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Curve,
    Surface,
    Toric,
}

/// The loaded variety: one of the three concrete backends.
#[derive(Clone, Debug)]
pub enum VarietyModel {
    Curve(CurveModel),
    Surface(SurfaceModel),
    Toric(ToricModel),
}

impl VarietyModel {
    pub fn id(&self) -> &str {
        match self {
            VarietyModel::Curve(m) => &m.id,
            VarietyModel::Surface(m) => &m.id,
            VarietyModel::Toric(m) => &m.id,
        }
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            VarietyModel::Curve(_) => BackendKind::Curve,
            VarietyModel::Surface(_) => BackendKind::Surface,
            VarietyModel::Toric(_) => BackendKind::Toric,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            VarietyModel::Curve(_) => 1,
            VarietyModel::Surface(_) => 2,
            VarietyModel::Toric(m) => m.n,
        }
    }

    pub fn class_len(&self) -> usize {
        match self {
            VarietyModel::Curve(_) => 1,
            VarietyModel::Surface(m) => m.rank,
            VarietyModel::Toric(m) => m.class_len(),
        }
    }

    pub fn check_class(&self, class: &NumClass) -> Result<()> {
        if class.backend != self.id() {
            return Err(Error::domain(format!(
                "class belongs to backend {:?}, not {:?}; classes from different \
                 backends never mix",
                class.backend,
                self.id()
            )));
        }
        if class.coords.len() != self.class_len() {
            return Err(Error::domain(format!(
                "class has {} coordinates, backend expects {}",
                class.coords.len(),
                self.class_len()
            )));
        }
        Ok(())
    }

    pub fn class(&self, coords: Vec<Rat>) -> NumClass {
        NumClass::new(self.id(), coords)
    }

    /// K_{X,B} with the boundary folded in.
    pub fn log_canonical_class(&self) -> NumClass {
        match self {
            VarietyModel::Curve(m) => self.class(vec![m.log_canonical_degree()]),
            VarietyModel::Surface(m) => self.class(m.log_canonical_class()),
            VarietyModel::Toric(m) => self.class(m.log_canonical_class()),
        }
    }

    /// The model's default polarization, when the file declared one.
    pub fn default_omega(&self) -> Option<NumClass> {
        match self {
            VarietyModel::Curve(m) => Some(self.class(vec![m.v.clone()])),
            VarietyModel::Surface(m) => m.default_omega.clone().map(|c| self.class(c)),
            VarietyModel::Toric(m) => m.default_omega.clone().map(|c| self.class(c)),
        }
    }

    pub fn is_ample(&self, theta: &NumClass) -> Result<bool> {
        self.check_class(theta)?;
        match self {
            VarietyModel::Curve(_) => Ok(theta.coords[0].is_positive()),
            VarietyModel::Surface(m) => {
                let c = &theta.coords;
                let strict = m
                    .curves
                    .iter()
                    .all(|curve| m.intersect(c, &curve.class).is_positive());
                Ok(strict
                    && m.intersect(c, c).is_positive()
                    && m.intersect(c, &m.reference_ample).is_positive())
            }
            VarietyModel::Toric(m) => m.is_ample(&theta.coords),
        }
    }

    fn require_ample(&self, omega: &NumClass) -> Result<()> {
        if !self.is_ample(omega)? {
            return Err(Error::domain(
                "positivity error: class fails the ampleness test",
            ));
        }
        Ok(())
    }

    /// Exact volume (omega^n) of an ample class.
    pub fn volume(&self, omega: &NumClass) -> Result<Rat> {
        self.require_ample(omega)?;
        match self {
            VarietyModel::Curve(_) => Ok(omega.coords[0].clone()),
            VarietyModel::Surface(m) => Ok(m.intersect(&omega.coords, &omega.coords)),
            VarietyModel::Toric(m) => m.volume(&omega.coords),
        }
    }

    /// Trace n (omega^{n-1}.theta) / (omega^n); linear in theta, with
    /// trace of omega itself equal to n.
    pub fn trace(&self, omega: &NumClass, theta: &NumClass) -> Result<Rat> {
        self.require_ample(omega)?;
        self.check_class(theta)?;
        match self {
            VarietyModel::Curve(_) => Ok(&theta.coords[0] / &omega.coords[0]),
            VarietyModel::Surface(m) => {
                let v = m.intersect(&omega.coords, &omega.coords);
                Ok(Rat::from_int(2) * m.intersect(&omega.coords, &theta.coords) / v)
            }
            VarietyModel::Toric(m) => m.trace(&omega.coords, &theta.coords),
        }
    }

    /// Least s >= 0 with -s*omega <= theta <= s*omega in the nef order,
    /// computed against the backend's cone certificate.
    pub fn norm_sup(&self, omega: &NumClass, theta: &NumClass) -> Result<Rat> {
        self.require_ample(omega)?;
        self.check_class(theta)?;
        match self {
            VarietyModel::Curve(_) => Ok(theta.coords[0].abs() / &omega.coords[0]),
            VarietyModel::Surface(m) => {
                if m.extremal.is_empty() {
                    return Err(Error::domain(
                        "configuration error: surface model lists no extremal curves",
                    ));
                }
                let mut best = Rat::zero();
                for &i in &m.extremal {
                    let c = &m.curves[i].class;
                    let ratio =
                        m.intersect(&theta.coords, c).abs() / m.intersect(&omega.coords, c);
                    best = best.max(ratio);
                }
                Ok(best)
            }
            VarietyModel::Toric(m) => m.norm_sup(&omega.coords, &theta.coords),
        }
    }

    /// Extreme Thompson ratios (s_lo, s_hi) with s_lo*omega <= omega2 <=
    /// s_hi*omega. The metric value max(log s_hi, -log s_lo) is left to the
    /// reporting layer.
    pub fn thompson(&self, omega: &NumClass, omega2: &NumClass) -> Result<(Rat, Rat)> {
        self.require_ample(omega)?;
        self.require_ample(omega2)?;
        match self {
            VarietyModel::Curve(_) => {
                let r = &omega2.coords[0] / &omega.coords[0];
                Ok((r.clone(), r))
            }
            VarietyModel::Surface(m) => {
                let mut lo: Option<Rat> = None;
                let mut hi: Option<Rat> = None;
                for &i in &m.extremal {
                    let c = &m.curves[i].class;
                    let ratio =
                        m.intersect(&omega2.coords, c) / m.intersect(&omega.coords, c);
                    lo = Some(match lo {
                        None => ratio.clone(),
                        Some(b) => b.min(ratio.clone()),
                    });
                    hi = Some(match hi {
                        None => ratio,
                        Some(b) => b.max(ratio),
                    });
                }
                match (lo, hi) {
                    (Some(lo), Some(hi)) => Ok((lo, hi)),
                    _ => Err(Error::domain(
                        "configuration error: surface model lists no extremal curves",
                    )),
                }
            }
            VarietyModel::Toric(m) => m.thompson(&omega.coords, &omega2.coords),
        }
    }

    /// Thompson metric value as a float, for reports only.
    pub fn thompson_metric_f64(&self, omega: &NumClass, omega2: &NumClass) -> Result<f64> {
        let (lo, hi) = self.thompson(omega, omega2)?;
        Ok(hi.to_f64().ln().max(-(lo.to_f64().ln())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};
    use crate::surface::{NamedClass, SurfaceModel};

    fn f1() -> VarietyModel {
        VarietyModel::Surface(SurfaceModel {
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
            ],
            boundary: vec![],
            negative: vec![0],
            extremal: vec![0, 1],
            reference_ample: vec![ratio(3), ratio(-1)],
            default_omega: Some(vec![ratio(3), ratio(-1)]),
            chains: vec![],
        })
    }

    fn p1(d: i64) -> VarietyModel {
        VarietyModel::Curve(CurveModel {
            id: "p1".into(),
            genus: 0,
            v: ratio(d),
            points: vec![],
        })
    }

    #[test]
    fn curve_basics() {
        let m = p1(4);
        let omega = m.class(vec![ratio(4)]);
        let k = m.log_canonical_class();
        assert_eq!(k.coords, vec![ratio(-2)]);
        assert_eq!(m.volume(&omega).unwrap(), ratio(4));
        assert_eq!(m.trace(&omega, &k).unwrap(), rat(-1, 2));
        assert_eq!(m.norm_sup(&omega, &k).unwrap(), rat(1, 2));
        assert!(!m.is_ample(&m.class(vec![ratio(0)])).unwrap());
    }

    #[test]
    fn f1_volume_and_trace() {
        let m = f1();
        let omega = m.class(vec![ratio(3), ratio(-1)]);
        let k = m.log_canonical_class();
        assert_eq!(m.volume(&omega).unwrap(), ratio(8));
        assert_eq!(m.trace(&omega, &omega).unwrap(), ratio(2));
        assert_eq!(m.trace(&omega, &k).unwrap(), ratio(-2));
        assert_eq!(m.norm_sup(&omega, &k).unwrap(), ratio(1));
    }

    #[test]
    fn f1_ampleness() {
        let m = f1();
        assert!(m.is_ample(&m.class(vec![ratio(3), ratio(-1)])).unwrap());
        assert!(!m.is_ample(&m.class(vec![ratio(0), ratio(0)])).unwrap());
        // H is nef but not ample (H.E = 0)
        assert!(!m.is_ample(&m.class(vec![ratio(1), ratio(0)])).unwrap());
        // scaling invariance
        let omega = m.class(vec![ratio(3), ratio(-1)]);
        assert!(m.is_ample(&omega.scale(&rat(7, 3))).unwrap());
    }

    #[test]
    fn f1_thompson_pair() {
        let m = f1();
        let omega = m.class(vec![ratio(3), ratio(-1)]);
        let omega2 = m.class(vec![ratio(2), ratio(-1)]);
        assert_eq!(m.thompson(&omega, &omega2).unwrap(), (rat(1, 2), ratio(1)));
        assert_eq!(m.thompson(&omega, &omega).unwrap(), (ratio(1), ratio(1)));
        assert_eq!(
            m.thompson(&omega, &omega.scale(&ratio(2))).unwrap(),
            (ratio(2), ratio(2))
        );
    }

    #[test]
    fn backend_mixing_rejected() {
        let m = f1();
        let foreign = NumClass::new("other", vec![ratio(1), ratio(0)]);
        assert!(m.volume(&foreign).is_err());
    }

    #[test]
    fn trace_bound_by_norm() {
        let m = f1();
        let omega = m.class(vec![ratio(3), ratio(-1)]);
        for theta in [
            m.class(vec![ratio(1), ratio(1)]),
            m.class(vec![ratio(-3), ratio(1)]),
            m.class(vec![rat(1, 2), rat(5, 7)]),
        ] {
            let tr = m.trace(&omega, &theta).unwrap().abs();
            let bound = Rat::from_int(2) * m.norm_sup(&omega, &theta).unwrap();
            assert!(tr <= bound);
        }
    }
}
