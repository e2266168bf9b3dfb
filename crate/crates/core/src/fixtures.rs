//! Built-in reference models: projective lines with boundary
//! configurations, a genus-2 curve, the projective plane, Hirzebruch
//! surfaces in both surface and toric presentations, and plane blowup
//! chains. The bundled JSON corpus mirrors these constructors, and the
//! cross-backend oracle compares the two Hirzebruch presentations.

use crate::curve::{CurveModel, MarkedPoint};
use crate::numclass::VarietyModel;
use crate::rat::{ratio, Rat};
use crate::surface::{BlowupChain, BlowupStep, NamedClass, SurfaceModel};
use crate::toric::ToricModel;

/// P^1 with polarization degree d and boundary coefficients at named
/// points.
pub fn p1_curve(d: i64, boundary: &[(&str, Rat)]) -> VarietyModel {
    VarietyModel::Curve(CurveModel {
        id: format!("p1-d{d}"),
        genus: 0,
        v: ratio(d),
        points: boundary
            .iter()
            .map(|(id, b)| MarkedPoint {
                id: (*id).into(),
                b: b.clone(),
            })
            .collect(),
    })
}

/// Genus-2 curve polarized by its canonical class (degree 2).
pub fn genus2_curve() -> VarietyModel {
    VarietyModel::Curve(CurveModel {
        id: "genus2".into(),
        genus: 2,
        v: ratio(2),
        points: vec![],
    })
}

/// The projective plane with the line class basis.
pub fn p2_surface() -> VarietyModel {
    VarietyModel::Surface(SurfaceModel {
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
    })
}

/// The plane with one- and two-point blowup chains attached (the second
/// center lies on the first exceptional).
pub fn p2_with_chains() -> VarietyModel {
    let VarietyModel::Surface(mut m) = p2_surface() else {
        unreachable!()
    };
    m.id = "p2-chains".into();
    m.chains = vec![
        BlowupChain {
            name: "one-point".into(),
            steps: vec![BlowupStep {
                name: "E1".into(),
                center: "a point on a tracked line".into(),
                mult_exceptional: vec![],
                mult_curves: vec![1],
            }],
        },
        BlowupChain {
            name: "two-point".into(),
            steps: vec![
                BlowupStep {
                    name: "G1".into(),
                    center: "a point on a tracked line".into(),
                    mult_exceptional: vec![],
                    mult_curves: vec![1],
                },
                BlowupStep {
                    name: "G2".into(),
                    center: "a point of G1 off the strict line".into(),
                    mult_exceptional: vec![1],
                    mult_curves: vec![0],
                },
            ],
        },
    ];
    VarietyModel::Surface(m)
}

/// F1 as the blown-up plane with basis {H, E}.
pub fn f1_blowup_surface() -> VarietyModel {
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
    })
}

/// Hirzebruch surface F_a in the fiber/section basis {F, S} with F^2 = 0,
/// F.S = 1, S^2 = -a. Tracks the fiber, the negative section, and the
/// disjoint section of class S + aF.
pub fn hirzebruch_surface(a: i64) -> VarietyModel {
    assert!(a >= 0);
    let mut curves = vec![
        NamedClass {
            name: "F".into(),
            class: vec![ratio(1), ratio(0)],
        },
        NamedClass {
            name: "S".into(),
            class: vec![ratio(0), ratio(1)],
        },
        NamedClass {
            name: "Splus".into(),
            class: vec![ratio(a), ratio(1)],
        },
    ];
    if a == 0 {
        curves.pop(); // S and S + 0F coincide
    }
    VarietyModel::Surface(SurfaceModel {
        id: format!("hirzebruch-{a}"),
        rank: 2,
        gram: vec![vec![ratio(0), ratio(1)], vec![ratio(1), ratio(-a)]],
        canonical: vec![ratio(-(a + 2)), ratio(-2)],
        curves,
        boundary: vec![],
        negative: if a > 0 { vec![1] } else { vec![] },
        extremal: vec![0, 1],
        reference_ample: vec![ratio(a + 1), ratio(1)],
        default_omega: Some(vec![ratio(a + 1), ratio(1)]),
        chains: vec![],
    })
}

/// Hirzebruch surface F_a as a toric model: rays (1,0), (0,1), (-1,a),
/// (0,-1).
pub fn hirzebruch_toric(a: i64) -> VarietyModel {
    assert!(a >= 0);
    // default polarization (a+1, 1, a+1, 1) is ample for every a
    VarietyModel::Toric(ToricModel {
        id: format!("hirzebruch-{a}-toric"),
        n: 2,
        rays: vec![vec![1, 0], vec![0, 1], vec![-1, a], vec![0, -1]],
        max_cones: vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
        boundary_b: vec![ratio(0); 4],
        default_omega: Some(vec![ratio(a + 1), ratio(1), ratio(a + 1), ratio(1)]),
    })
}

/// The projective plane as a toric model.
pub fn p2_toric() -> VarietyModel {
    VarietyModel::Toric(ToricModel {
        id: "p2-toric".into(),
        n: 2,
        rays: vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
        max_cones: vec![vec![0, 1], vec![1, 2], vec![2, 0]],
        boundary_b: vec![ratio(0); 3],
        default_omega: Some(vec![ratio(1), ratio(1), ratio(1)]),
    })
}

/// P^1 as a toric model with a segment of length d.
pub fn p1_toric(d: i64) -> VarietyModel {
    VarietyModel::Toric(ToricModel {
        id: format!("p1-toric-d{d}"),
        n: 1,
        rays: vec![vec![1], vec![-1]],
        max_cones: vec![vec![0], vec![1]],
        boundary_b: vec![ratio(0); 2],
        default_omega: Some(vec![ratio(d), ratio(0)]),
    })
}

/// Dictionary from per-ray support values on `hirzebruch_toric(a)` to
/// {F, S} coordinates on `hirzebruch_surface(a)`:
/// D1 = D3 = F, D2 = S, D4 = S + aF.
pub fn hirzebruch_class_to_surface(a: i64, support: &[Rat]) -> Vec<Rat> {
    assert_eq!(support.len(), 4);
    let f = &support[0] + &support[2] + ratio(a) * &support[3];
    let s = &support[1] + &support[3];
    vec![f, s]
}

/// Ray index on `hirzebruch_toric(a)` to the tracked divisor name on
/// `hirzebruch_surface(a)`.
pub fn hirzebruch_ray_divisor(a: i64, ray: usize) -> &'static str {
    match ray {
        0 | 2 => "F",
        1 => "S",
        3 => {
            if a == 0 {
                "S"
            } else {
                "Splus"
            }
        }
        _ => panic!("Hirzebruch models have four rays"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numclass::NumClass;

    fn validate(m: &VarietyModel) {
        match m {
            VarietyModel::Curve(c) => c.validate().unwrap(),
            VarietyModel::Surface(s) => s.validate().unwrap(),
            VarietyModel::Toric(t) => t.validate().unwrap(),
        }
    }

    #[test]
    fn all_fixtures_validate() {
        validate(&p1_curve(4, &[("p", ratio(0))]));
        validate(&genus2_curve());
        validate(&p2_surface());
        validate(&p2_with_chains());
        validate(&f1_blowup_surface());
        for a in 0..=2 {
            validate(&hirzebruch_surface(a));
            validate(&hirzebruch_toric(a));
        }
        validate(&p2_toric());
        validate(&p1_toric(3));
    }

    #[test]
    fn hirzebruch_anticanonical_dictionary() {
        for a in 0..=2i64 {
            let support = vec![ratio(1); 4];
            let class = hirzebruch_class_to_surface(a, &support);
            // -K = (a+2) F + 2 S
            assert_eq!(class, vec![ratio(a + 2), ratio(2)]);
            let surf = hirzebruch_surface(a);
            let k = surf.log_canonical_class();
            let minus_k = NumClass::new(surf.id(), class).scale(&ratio(-1));
            assert_eq!(k, minus_k);
        }
    }

    #[test]
    fn hirzebruch_volume_agreement_at_anticanonical() {
        // K^2 = 8 on every Hirzebruch surface; only a < 2 is Fano
        for a in 0..=1i64 {
            let toric = hirzebruch_toric(a);
            let surf = hirzebruch_surface(a);
            let support = vec![ratio(1); 4];
            let vt = toric
                .volume(&toric.class(support.clone()))
                .unwrap();
            let vs = surf
                .volume(&surf.class(hirzebruch_class_to_surface(a, &support)))
                .unwrap();
            assert_eq!(vt, ratio(8));
            assert_eq!(vs, ratio(8));
        }
    }
}
