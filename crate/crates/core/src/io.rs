//! Model-file and job-file ingestion: JSON schemas with exact rational
//! strings, strict load-time validation naming the violated invariant, and
//! content hashing over the canonical serialization.

use crate::curve::{CurveModel, MarkedPoint, PLPotential, RayFn, RaySegment};
use crate::error::{Error, Result};
use crate::numclass::VarietyModel;
use crate::rat::Rat;
use crate::scan::{Functional, SliceSpec};
use crate::stability::{CandidateSpec, DivisorialMeasure, Valuation};
use crate::surface::{BlowupChain, BlowupStep, NamedClass, SurfaceModel};
use crate::toric::ToricModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

/// On-disk model document. All numbers are exact rational strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelFile {
    Curve {
        id: String,
        genus: u32,
        v: Rat,
        #[serde(default)]
        points: Vec<CurvePointFile>,
    },
    Surface {
        id: String,
        basis: Vec<String>,
        gram: Vec<Vec<Rat>>,
        canonical: Vec<Rat>,
        curves: Vec<SurfaceCurveFile>,
        #[serde(default)]
        boundary: Vec<SurfaceBoundaryFile>,
        negative: Vec<String>,
        extremal: Vec<String>,
        reference_ample: Vec<Rat>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<Vec<Rat>>,
        #[serde(default)]
        chains: Vec<ChainFile>,
    },
    Toric {
        id: String,
        n: usize,
        rays: Vec<Vec<i64>>,
        max_cones: Vec<Vec<usize>>,
        boundary: Vec<Rat>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<Vec<Rat>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvePointFile {
    pub id: String,
    pub b: Rat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceCurveFile {
    pub name: String,
    pub class: Vec<Rat>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceBoundaryFile {
    pub curve: String,
    pub b: Rat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub name: String,
    pub steps: Vec<ChainStepFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainStepFile {
    pub name: String,
    #[serde(default)]
    pub center: String,
    /// Multiplicity of each earlier exceptional at the center, keyed by
    /// step name; missing entries mean 0.
    #[serde(default)]
    pub mult_exceptional: BTreeMap<String, u32>,
    /// Multiplicity of each tracked curve at the center, keyed by curve
    /// name; missing entries mean 0.
    #[serde(default)]
    pub mult_curves: BTreeMap<String, u32>,
}

impl ModelFile {
    /// Validate and build the runtime model.
    pub fn into_model(self) -> Result<VarietyModel> {
        let model = match self {
            ModelFile::Curve {
                id,
                genus,
                v,
                points,
            } => {
                let m = CurveModel {
                    id,
                    genus,
                    v,
                    points: points
                        .into_iter()
                        .map(|p| MarkedPoint { id: p.id, b: p.b })
                        .collect(),
                };
                m.validate()?;
                VarietyModel::Curve(m)
            }
            ModelFile::Surface {
                id,
                basis,
                gram,
                canonical,
                curves,
                boundary,
                negative,
                extremal,
                reference_ample,
                omega,
                chains,
            } => {
                let rank = basis.len();
                if rank == 0 {
                    return Err(Error::schema("surface model: empty basis"));
                }
                let named: Vec<NamedClass> = curves
                    .into_iter()
                    .map(|c| NamedClass {
                        name: c.name,
                        class: c.class,
                    })
                    .collect();
                let index_of = |name: &str| -> Result<usize> {
                    named
                        .iter()
                        .position(|c| c.name == name)
                        .ok_or_else(|| {
                            Error::schema(format!("surface model: unknown curve {name:?}"))
                        })
                };
                let boundary = boundary
                    .into_iter()
                    .map(|b| Ok((index_of(&b.curve)?, b.b)))
                    .collect::<Result<Vec<_>>>()?;
                let negative = negative
                    .iter()
                    .map(|n| index_of(n))
                    .collect::<Result<Vec<_>>>()?;
                let extremal = extremal
                    .iter()
                    .map(|n| index_of(n))
                    .collect::<Result<Vec<_>>>()?;
                let mut built_chains = Vec::new();
                for chain in chains {
                    let mut steps = Vec::new();
                    let mut earlier: Vec<String> = Vec::new();
                    for step in chain.steps {
                        for key in step.mult_exceptional.keys() {
                            if !earlier.contains(key) {
                                return Err(Error::schema(format!(
                                    "surface model: chain {:?} step {:?} references \
                                     unknown exceptional {key:?}",
                                    chain.name, step.name
                                )));
                            }
                        }
                        for key in step.mult_curves.keys() {
                            index_of(key)?;
                        }
                        let mult_exceptional = earlier
                            .iter()
                            .map(|name| step.mult_exceptional.get(name).copied().unwrap_or(0))
                            .collect();
                        let mult_curves = named
                            .iter()
                            .map(|c| step.mult_curves.get(&c.name).copied().unwrap_or(0))
                            .collect();
                        earlier.push(step.name.clone());
                        steps.push(BlowupStep {
                            name: step.name,
                            center: step.center,
                            mult_exceptional,
                            mult_curves,
                        });
                    }
                    built_chains.push(BlowupChain {
                        name: chain.name,
                        steps,
                    });
                }
                let m = SurfaceModel {
                    id,
                    rank,
                    gram,
                    canonical,
                    curves: named,
                    boundary,
                    negative,
                    extremal,
                    reference_ample,
                    default_omega: omega,
                    chains: built_chains,
                };
                m.validate()?;
                VarietyModel::Surface(m)
            }
            ModelFile::Toric {
                id,
                n,
                rays,
                max_cones,
                boundary,
                omega,
            } => {
                let m = ToricModel {
                    id,
                    n,
                    rays,
                    max_cones,
                    boundary_b: boundary,
                    default_omega: omega,
                };
                m.validate()?;
                VarietyModel::Toric(m)
            }
        };
        if model.id().is_empty() {
            return Err(Error::schema("model id must be nonempty"));
        }
        Ok(model)
    }
}

/// Canonical file form of a runtime model (used for hashing and
/// round-trip checks).
pub fn to_model_file(model: &VarietyModel) -> ModelFile {
    match model {
        VarietyModel::Curve(m) => ModelFile::Curve {
            id: m.id.clone(),
            genus: m.genus,
            v: m.v.clone(),
            points: m
                .points
                .iter()
                .map(|p| CurvePointFile {
                    id: p.id.clone(),
                    b: p.b.clone(),
                })
                .collect(),
        },
        VarietyModel::Surface(m) => ModelFile::Surface {
            id: m.id.clone(),
            basis: (0..m.rank).map(|i| format!("b{i}")).collect(),
            gram: m.gram.clone(),
            canonical: m.canonical.clone(),
            curves: m
                .curves
                .iter()
                .map(|c| SurfaceCurveFile {
                    name: c.name.clone(),
                    class: c.class.clone(),
                })
                .collect(),
            boundary: m
                .boundary
                .iter()
                .map(|(i, b)| SurfaceBoundaryFile {
                    curve: m.curves[*i].name.clone(),
                    b: b.clone(),
                })
                .collect(),
            negative: m.negative.iter().map(|&i| m.curves[i].name.clone()).collect(),
            extremal: m.extremal.iter().map(|&i| m.curves[i].name.clone()).collect(),
            reference_ample: m.reference_ample.clone(),
            omega: m.default_omega.clone(),
            chains: m
                .chains
                .iter()
                .map(|chain| ChainFile {
                    name: chain.name.clone(),
                    steps: chain
                        .steps
                        .iter()
                        .enumerate()
                        .map(|(i, s)| ChainStepFile {
                            name: s.name.clone(),
                            center: s.center.clone(),
                            mult_exceptional: chain.steps[..i]
                                .iter()
                                .zip(&s.mult_exceptional)
                                .filter(|(_, &m)| m > 0)
                                .map(|(e, &m)| (e.name.clone(), m))
                                .collect(),
                            mult_curves: m
                                .curves
                                .iter()
                                .zip(&s.mult_curves)
                                .filter(|(_, &m)| m > 0)
                                .map(|(c, &m)| (c.name.clone(), m))
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        },
        VarietyModel::Toric(m) => ModelFile::Toric {
            id: m.id.clone(),
            n: m.n,
            rays: m.rays.clone(),
            max_cones: m.max_cones.clone(),
            boundary: m.boundary_b.clone(),
            omega: m.default_omega.clone(),
        },
    }
}

/// Parse and validate a model document.
pub fn parse_model_str(s: &str) -> Result<VarietyModel> {
    let file: ModelFile =
        serde_json::from_str(s).map_err(|e| Error::schema(format!("model file: {e}")))?;
    file.into_model()
}

/// Content hash of a model: sha256 over the canonical serialization, so
/// field order in the source file does not matter.
pub fn model_hash(model: &VarietyModel) -> String {
    let canonical = serde_json::to_string(&to_model_file(model)).expect("model serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_model(path: &Path) -> Result<(VarietyModel, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::schema(format!("cannot read model file {path:?}: {e}")))?;
    let model = parse_model_str(&text)?;
    let hash = model_hash(&model);
    Ok((model, hash))
}

/// Job document: a command payload against one model.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<Rat>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<Rat>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub valuations: Vec<Valuation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measures: Vec<MeasureFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub potentials: Vec<PotentialFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<SliceFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub atoms: Vec<MeasureAtomFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureAtomFile {
    pub valuation: Valuation,
    pub mass: Rat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub c: Rat,
    #[serde(default)]
    pub rays: Vec<PotentialRayFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialRayFile {
    pub point: String,
    pub segments: Vec<PotentialSegmentFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSegmentFile {
    pub end: Rat,
    pub slope: Rat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceFile {
    pub base: Vec<Rat>,
    pub directions: Vec<Vec<Rat>>,
    pub ranges: Vec<(Rat, Rat)>,
    pub resolution: Vec<usize>,
    pub functionals: Vec<Functional>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

impl MeasureFile {
    pub fn into_measure(self) -> Result<DivisorialMeasure> {
        let mu = DivisorialMeasure {
            atoms: self
                .atoms
                .into_iter()
                .map(|a| (a.valuation, a.mass))
                .collect(),
        };
        mu.validate()?;
        Ok(mu)
    }
}

impl PotentialFile {
    pub fn into_potential(self, v_omega: &Rat) -> Result<PLPotential> {
        let mut rays = BTreeMap::new();
        for ray in self.rays {
            if ray.point.is_empty() {
                return Err(Error::schema("potential ray with empty point id"));
            }
            let prev = rays.insert(
                ray.point.clone(),
                RayFn {
                    segments: ray
                        .segments
                        .into_iter()
                        .map(|s| RaySegment {
                            end: s.end,
                            slope: s.slope,
                        })
                        .collect(),
                },
            );
            if prev.is_some() {
                return Err(Error::schema(format!(
                    "potential lists ray {:?} twice",
                    ray.point
                )));
            }
        }
        PLPotential::new(self.c, rays, v_omega)
    }
}

impl SliceFile {
    pub fn into_slice(self, fallback: &CandidateSpec) -> SliceSpec {
        SliceSpec {
            base: self.base,
            directions: self.directions,
            ranges: self.ranges,
            resolution: self.resolution,
            functionals: self.functionals,
            candidates: CandidateSpec {
                radius: self.radius.unwrap_or(fallback.radius),
                depth: self.depth.unwrap_or(fallback.depth),
            },
        }
    }
}

pub fn parse_job_str(s: &str) -> Result<JobFile> {
    serde_json::from_str(s).map_err(|e| Error::schema(format!("job file: {e}")))
}

pub fn load_job(path: &Path) -> Result<JobFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::schema(format!("cannot read job file {path:?}: {e}")))?;
    parse_job_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    const F1_JSON: &str = r#"{
      "kind": "surface",
      "id": "f1",
      "basis": ["H", "E"],
      "gram": [["1", "0"], ["0", "-1"]],
      "canonical": ["-3", "1"],
      "curves": [
        {"name": "E", "class": ["0", "1"]},
        {"name": "F", "class": ["1", "-1"]},
        {"name": "H", "class": ["1", "0"]}
      ],
      "negative": ["E"],
      "extremal": ["E", "F"],
      "reference_ample": ["3", "-1"],
      "omega": ["3", "-1"]
    }"#;

    #[test]
    fn parse_curve_model() {
        let s = r#"{"kind":"curve","id":"p1","genus":0,"v":"4","points":[{"id":"p","b":"1/2"}]}"#;
        let model = parse_model_str(s).unwrap();
        match &model {
            VarietyModel::Curve(m) => {
                assert_eq!(m.v, ratio(4));
                assert_eq!(m.points[0].b, rat(1, 2));
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn parse_surface_model() {
        let model = parse_model_str(F1_JSON).unwrap();
        match &model {
            VarietyModel::Surface(m) => {
                assert_eq!(m.rank, 2);
                assert_eq!(m.negative, vec![0]);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn parse_toric_model() {
        let s = r#"{
          "kind": "toric", "id": "p2t", "n": 2,
          "rays": [[1,0],[0,1],[-1,-1]],
          "max_cones": [[0,1],[1,2],[2,0]],
          "boundary": ["0","0","0"],
          "omega": ["1","1","1"]
        }"#;
        let model = parse_model_str(s).unwrap();
        assert!(matches!(model, VarietyModel::Toric(_)));
    }

    #[test]
    fn schema_violations_are_named() {
        // corrupted intersection matrix: signature violation
        let bad = F1_JSON.replace("\"-1\"]]", "\"1\"]]");
        let err = parse_model_str(&bad).unwrap_err();
        assert!(err.to_string().contains("signature"), "{err}");
        // zero denominator
        let bad = r#"{"kind":"curve","id":"x","genus":0,"v":"1/0","points":[]}"#;
        assert!(parse_model_str(bad).is_err());
        // unknown field
        let bad = r#"{"kind":"curve","id":"x","genus":0,"v":"1","bogus":3}"#;
        assert!(parse_model_str(bad).is_err());
        // non-primitive ray
        let bad = r#"{"kind":"toric","id":"t","n":2,"rays":[[2,0],[0,1],[-1,-1]],
                      "max_cones":[[0,1],[1,2],[2,0]],"boundary":["0","0","0"]}"#;
        let err = parse_model_str(bad).unwrap_err();
        assert!(err.to_string().contains("primitive"), "{err}");
    }

    #[test]
    fn hash_is_field_order_independent() {
        let reordered = r#"{
          "id": "f1",
          "kind": "surface",
          "curves": [
            {"name": "E", "class": ["0", "1"]},
            {"name": "F", "class": ["1", "-1"]},
            {"class": ["1", "0"], "name": "H"}
          ],
          "basis": ["H", "E"],
          "gram": [["1", "0"], ["0", "-1"]],
          "canonical": ["-3", "1"],
          "negative": ["E"],
          "extremal": ["E", "F"],
          "omega": ["3", "-1"],
          "reference_ample": ["3", "-1"]
        }"#;
        let a = model_hash(&parse_model_str(F1_JSON).unwrap());
        let b = model_hash(&parse_model_str(reordered).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn round_trip_is_semantically_identical() {
        let model = parse_model_str(F1_JSON).unwrap();
        let serialized = serde_json::to_string(&to_model_file(&model)).unwrap();
        let reloaded = parse_model_str(&serialized).unwrap();
        assert_eq!(model_hash(&model), model_hash(&reloaded));
    }

    #[test]
    fn parse_job_with_valuations() {
        let s = r#"{
          "omega": ["3", "-1"],
          "valuations": [
            {"divisor": "E", "t": "1"},
            {"point": "p", "t": "2"},
            {"u": [1, 0], "t": "1"}
          ],
          "radius": 5
        }"#;
        let job = parse_job_str(s).unwrap();
        assert_eq!(job.valuations.len(), 3);
        assert!(matches!(job.valuations[1], Valuation::Curve { .. }));
        assert!(matches!(job.valuations[2], Valuation::Toric(_)));
        assert_eq!(job.radius, Some(5));
    }

    #[test]
    fn chain_multiplicities_keyed_by_name() {
        let s = r#"{
          "kind": "surface", "id": "p2c",
          "basis": ["H"], "gram": [["1"]], "canonical": ["-3"],
          "curves": [{"name": "H", "class": ["1"]}],
          "negative": [], "extremal": ["H"],
          "reference_ample": ["1"], "omega": ["1"],
          "chains": [{"name": "c", "steps": [
            {"name": "E1", "mult_curves": {"H": 1}},
            {"name": "E2", "mult_exceptional": {"E1": 1}}
          ]}]
        }"#;
        let model = parse_model_str(s).unwrap();
        let VarietyModel::Surface(m) = &model else {
            panic!()
        };
        let derived = m.derive(Some("c")).unwrap();
        assert_eq!(derived.a_values["E1"], ratio(2));
        assert_eq!(derived.a_values["E2"], ratio(3));
    }
}
