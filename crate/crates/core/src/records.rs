//! JSON records for points, simplices, triangulations and coordinates.
//! Complex numbers are written as `[re, im]`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crgeom::HeisenbergPoint;
use crate::crstruct::CrossRatioStructure;
use crate::error::{Error, Result};
use crate::pentad::{derive_dependent, FivePointCoordinates};
use crate::triangulation::{
    geometric_assignment, CrossRatioAssignment, ExplicitPairing, Tetrahedron, Triangulation,
};

pub type ComplexRecord = [f64; 2];

pub fn to_complex(c: ComplexRecord) -> Complex64 {
    Complex64::new(c[0], c[1])
}

pub fn from_complex(z: Complex64) -> ComplexRecord {
    [z.re, z.im]
}

/// `{"id": .., "at": "infinity"}` or `{"id": .., "z": [re, im], "t": t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<ComplexRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

impl PointRecord {
    pub fn to_point(&self) -> Result<HeisenbergPoint> {
        let name = self.id.as_deref().unwrap_or("point");
        match (&self.at, self.z, self.t) {
            (Some(at), None, None) if at == "infinity" => Ok(HeisenbergPoint::Infinity),
            (Some(at), _, _) => Err(Error::Domain(format!("{name}: unknown location {at:?}"))),
            (None, Some(z), Some(t)) => HeisenbergPoint::new(to_complex(z), t),
            _ => Err(Error::Domain(format!(
                "{name}: expected \"at\" or both \"z\" and \"t\""
            ))),
        }
    }

    pub fn from_point(id: Option<String>, p: &HeisenbergPoint) -> Self {
        match *p {
            HeisenbergPoint::Infinity => Self {
                id,
                at: Some("infinity".into()),
                z: None,
                t: None,
            },
            HeisenbergPoint::Finite { z, t } => Self {
                id,
                at: None,
                z: Some(from_complex(z)),
                t: Some(t),
            },
        }
    }
}

/// Unknown top-level fields (such as a `status` left by the cli) are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsFile {
    pub points: Vec<PointRecord>,
}

impl PointsFile {
    pub fn to_points(&self) -> Result<Vec<HeisenbergPoint>> {
        self.points.iter().map(PointRecord::to_point).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantsRecord {
    pub z12: ComplexRecord,
    pub z21: ComplexRecord,
    pub z34: ComplexRecord,
    pub z43: ComplexRecord,
}

impl InvariantsRecord {
    pub fn to_structure(&self) -> Result<CrossRatioStructure> {
        CrossRatioStructure::from_free_params(
            to_complex(self.z12),
            to_complex(self.z21),
            to_complex(self.z34),
            to_complex(self.z43),
        )
    }

    pub fn from_structure(s: &CrossRatioStructure) -> Self {
        let [z12, z21, z34, z43] = s.free_params().map(from_complex);
        Self { z12, z21, z34, z43 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TetrahedronRecord {
    pub id: String,
    pub vertices: Vec<String>,
    pub sign: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceRecord {
    pub tet: String,
    pub face: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingRecord {
    pub first: FaceRecord,
    pub second: FaceRecord,
}

/// Unknown top-level fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangulationFile {
    pub tetrahedra: Vec<TetrahedronRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<BTreeMap<String, PointRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairings: Option<Vec<PairingRecord>>,
}

fn triple(f: &FaceRecord) -> Result<(String, [String; 3])> {
    let arr: [String; 3] =
        f.face.clone().try_into().map_err(|_| {
            Error::Structural(format!("face of {} must list three vertices", f.tet))
        })?;
    Ok((f.tet.clone(), arr))
}

impl TriangulationFile {
    pub fn triangulation(&self) -> Result<Triangulation> {
        let mut tets = Vec::with_capacity(self.tetrahedra.len());
        for r in &self.tetrahedra {
            let vertices: [String; 4] = r.vertices.clone().try_into().map_err(|_| {
                Error::Structural(format!("tetrahedron {} must list four vertices", r.id))
            })?;
            tets.push(Tetrahedron {
                id: r.id.clone(),
                vertices,
                sign: r.sign,
            });
        }
        let mut explicit = Vec::new();
        for p in self.pairings.iter().flatten() {
            explicit.push(ExplicitPairing {
                first: triple(&p.first)?,
                second: triple(&p.second)?,
            });
        }
        Triangulation::with_pairings(tets, &explicit)
    }

    pub fn positions(&self) -> Result<Option<BTreeMap<String, HeisenbergPoint>>> {
        let Some(pos) = &self.positions else {
            return Ok(None);
        };
        let mut out = BTreeMap::new();
        for (k, v) in pos {
            out.insert(k.clone(), v.to_point()?);
        }
        Ok(Some(out))
    }

    /// Structures from the listed invariants; tetrahedra without invariants
    /// take theirs from the positions.
    pub fn assignment(&self, t: &Triangulation) -> Result<CrossRatioAssignment> {
        let positions = self.positions()?;
        let geometric = match &positions {
            Some(p) if self.tetrahedra.iter().any(|r| r.invariants.is_none()) => {
                Some(geometric_assignment(t, p)?)
            }
            _ => None,
        };
        let mut structures = Vec::with_capacity(self.tetrahedra.len());
        for (i, r) in self.tetrahedra.iter().enumerate() {
            let s = match (&r.invariants, &geometric) {
                (Some(inv), _) => inv
                    .to_structure()
                    .map_err(|e| Error::Domain(format!("tetrahedron {}: {e}", r.id)))?,
                (None, Some(g)) => g.structures[i],
                (None, None) => {
                    return Err(Error::Structural(format!(
                        "tetrahedron {} has neither invariants nor vertex positions",
                        r.id
                    )))
                }
            };
            structures.push(s);
        }
        Ok(CrossRatioAssignment::new(structures))
    }

    pub fn from_parts(
        t: &Triangulation,
        a: &CrossRatioAssignment,
        positions: Option<&BTreeMap<String, HeisenbergPoint>>,
    ) -> Self {
        let tetrahedra = t
            .tetrahedra
            .iter()
            .zip(&a.structures)
            .map(|(tet, s)| TetrahedronRecord {
                id: tet.id.clone(),
                vertices: tet.vertices.to_vec(),
                sign: tet.sign,
                invariants: Some(InvariantsRecord::from_structure(s)),
            })
            .collect();
        let explicit = t.explicit_pairings();
        let pairings = (!explicit.is_empty()).then(|| {
            explicit
                .into_iter()
                .map(|p| PairingRecord {
                    first: FaceRecord {
                        tet: p.first.0,
                        face: p.first.1.to_vec(),
                    },
                    second: FaceRecord {
                        tet: p.second.0,
                        face: p.second.1.to_vec(),
                    },
                })
                .collect()
        });
        let positions = positions.map(|m| {
            m.iter()
                .map(|(k, p)| (k.clone(), PointRecord::from_point(None, p)))
                .collect()
        });
        Self {
            tetrahedra,
            positions,
            pairings,
        }
    }
}

/// `{"x": [4 pairs], "y1": [re, im], "y2": .., "y4": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinatesRecord {
    pub x: [ComplexRecord; 4],
    pub y1: ComplexRecord,
    pub y2: ComplexRecord,
    pub y4: ComplexRecord,
}

impl CoordinatesRecord {
    pub fn to_coordinates(&self) -> Result<FivePointCoordinates> {
        derive_dependent(
            self.x.map(to_complex),
            to_complex(self.y1),
            to_complex(self.y2),
            to_complex(self.y4),
        )
    }

    pub fn from_coordinates(c: &FivePointCoordinates) -> Self {
        Self {
            x: c.x.map(from_complex),
            y1: from_complex(c.y1),
            y2: from_complex(c.y2),
            y4: from_complex(c.y4),
        }
    }
}
