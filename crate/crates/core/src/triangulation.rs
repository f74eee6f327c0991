//! Triangulations whose tetrahedra carry cross-ratio structures.
//!
//! Vertices are string labels; a tetrahedron lists four distinct labels in
//! order together with an orientation sign. Faces are glued either by
//! matching label triples or by explicit pairings with a positional vertex
//! correspondence.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use serde::Serialize;

use crate::crgeom::{cross_ratio_structure_of, HeisenbergPoint};
use crate::crstruct::{is_even_permutation, CrossRatioStructure, SimplexOrdering};
use crate::error::{Error, Result};
use crate::pentad::derive_dependent;

/// Relative tolerance used when a move checks that the five-point
/// coordinates reproduce the input columns.
pub const MOVE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tetrahedron {
    pub id: String,
    pub vertices: [String; 4],
    pub sign: i8,
}

impl Tetrahedron {
    pub fn new(id: impl Into<String>, vertices: [&str; 4], sign: i8) -> Self {
        Self {
            id: id.into(),
            vertices: vertices.map(String::from),
            sign,
        }
    }

    fn position(&self, label: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == label)
    }
}

/// One side of a face pairing: a tetrahedron index and three local vertex
/// positions (0..4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FaceSide {
    pub tet: usize,
    pub vertices: [usize; 3],
}

impl FaceSide {
    fn key(&self) -> (usize, [usize; 3]) {
        let mut v = self.vertices;
        v.sort_unstable();
        (self.tet, v)
    }

    fn apex(&self) -> usize {
        (0..4)
            .find(|p| !self.vertices.contains(p))
            .expect("three of four")
    }
}

/// `first.vertices[k]` is glued to `second.vertices[k]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacePairing {
    pub first: FaceSide,
    pub second: FaceSide,
}

impl FacePairing {
    fn image(&self, side: usize, local: usize) -> usize {
        let (from, to) = if side == 0 {
            (&self.first, &self.second)
        } else {
            (&self.second, &self.first)
        };
        let k = from
            .vertices
            .iter()
            .position(|&v| v == local)
            .expect("vertex of the face");
        to.vertices[k]
    }
}

/// An explicit pairing given by tetrahedron ids and vertex labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitPairing {
    pub first: (String, [String; 3]),
    pub second: (String, [String; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub tetrahedra: Vec<Tetrahedron>,
    pub pairings: Vec<FacePairing>,
    explicit: Vec<bool>,
    by_side: HashMap<(usize, [usize; 3]), (usize, usize)>,
}

impl Triangulation {
    /// Pairs faces by their label triples.
    pub fn new(tetrahedra: Vec<Tetrahedron>) -> Result<Self> {
        Self::with_pairings(tetrahedra, &[])
    }

    /// Applies the explicit pairings first; remaining faces are matched by
    /// label triples.
    pub fn with_pairings(
        tetrahedra: Vec<Tetrahedron>,
        explicit: &[ExplicitPairing],
    ) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for t in &tetrahedra {
            if !ids.insert(t.id.clone()) {
                return Err(Error::Structural(format!(
                    "duplicate tetrahedron id {}",
                    t.id
                )));
            }
            if t.sign != 1 && t.sign != -1 {
                return Err(Error::Structural(format!(
                    "tetrahedron {} has sign {}",
                    t.id, t.sign
                )));
            }
            let distinct: BTreeSet<&String> = t.vertices.iter().collect();
            if distinct.len() != 4 {
                return Err(Error::Structural(format!(
                    "tetrahedron {} repeats a vertex",
                    t.id
                )));
            }
        }
        let index: HashMap<&str, usize> = tetrahedra
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.as_str(), i))
            .collect();
        let resolve = |(id, labels): &(String, [String; 3])| -> Result<FaceSide> {
            let &tet = index
                .get(id.as_str())
                .ok_or_else(|| Error::Structural(format!("unknown tetrahedron {id} in pairing")))?;
            let mut vertices = [0; 3];
            for (slot, l) in vertices.iter_mut().zip(labels) {
                *slot = tetrahedra[tet]
                    .position(l)
                    .ok_or_else(|| Error::Structural(format!("{id} has no vertex {l}")))?;
            }
            if vertices[0] == vertices[1]
                || vertices[1] == vertices[2]
                || vertices[0] == vertices[2]
            {
                return Err(Error::Structural(format!("face of {id} repeats a vertex")));
            }
            Ok(FaceSide { tet, vertices })
        };
        let mut pairings = Vec::new();
        let mut flags = Vec::new();
        for p in explicit {
            pairings.push(FacePairing {
                first: resolve(&p.first)?,
                second: resolve(&p.second)?,
            });
            flags.push(true);
        }
        let mut taken: BTreeSet<(usize, [usize; 3])> = BTreeSet::new();
        for p in &pairings {
            for side in [p.first, p.second] {
                if !taken.insert(side.key()) {
                    return Err(Error::Structural(format!(
                        "face {} paired twice",
                        face_name(&tetrahedra, &side)
                    )));
                }
            }
        }
        let mut by_labels: BTreeMap<[String; 3], Vec<FaceSide>> = BTreeMap::new();
        for (ti, t) in tetrahedra.iter().enumerate() {
            for apex in (0..4).rev() {
                let local: Vec<usize> = (0..4).filter(|&p| p != apex).collect();
                let side = FaceSide {
                    tet: ti,
                    vertices: [local[0], local[1], local[2]],
                };
                if taken.contains(&side.key()) {
                    continue;
                }
                let mut labels = side.vertices.map(|p| t.vertices[p].clone());
                labels.sort();
                by_labels.entry(labels).or_default().push(side);
            }
        }
        for (labels, sides) in by_labels {
            match sides.len() {
                1 => {}
                2 => {
                    let (a, b) = (sides[0], sides[1]);
                    let ta = &tetrahedra[a.tet];
                    let tb = &tetrahedra[b.tet];
                    let second = a
                        .vertices
                        .map(|p| tb.position(&ta.vertices[p]).expect("shared label"));
                    pairings.push(FacePairing {
                        first: a,
                        second: FaceSide {
                            tet: b.tet,
                            vertices: second,
                        },
                    });
                    flags.push(false);
                }
                n => {
                    return Err(Error::Structural(format!(
                        "face {{{}}} shared by {n} tetrahedra",
                        labels.join(",")
                    )))
                }
            }
        }
        let mut by_side = HashMap::new();
        for (pi, p) in pairings.iter().enumerate() {
            by_side.insert(p.first.key(), (pi, 0));
            by_side.insert(p.second.key(), (pi, 1));
        }
        Ok(Self {
            tetrahedra,
            pairings,
            explicit: flags,
            by_side,
        })
    }

    /// Explicit pairings, in input form.
    pub fn explicit_pairings(&self) -> Vec<ExplicitPairing> {
        self.pairings
            .iter()
            .zip(&self.explicit)
            .filter(|(_, &e)| e)
            .map(|(p, _)| ExplicitPairing {
                first: self.side_labels(&p.first),
                second: self.side_labels(&p.second),
            })
            .collect()
    }

    fn side_labels(&self, side: &FaceSide) -> (String, [String; 3]) {
        let t = &self.tetrahedra[side.tet];
        (t.id.clone(), side.vertices.map(|p| t.vertices[p].clone()))
    }

    /// The pairing through face `face` (local positions) of tetrahedron `tet`.
    fn across(&self, tet: usize, face: [usize; 3]) -> Option<(&FacePairing, usize)> {
        let mut key = face;
        key.sort_unstable();
        self.by_side
            .get(&(tet, key))
            .map(|&(pi, side)| (&self.pairings[pi], side))
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.tetrahedra.iter().position(|t| t.id == id)
    }

    /// The pairing whose first side has these labels, in any order.
    pub fn find_face(&self, labels: &[String; 3]) -> Option<&FacePairing> {
        let want: BTreeSet<&String> = labels.iter().collect();
        self.pairings.iter().find(|p| {
            [p.first, p.second].iter().any(|s| {
                let t = &self.tetrahedra[s.tet];
                s.vertices
                    .iter()
                    .map(|&v| &t.vertices[v])
                    .collect::<BTreeSet<_>>()
                    == want
            })
        })
    }
}

fn face_name(tets: &[Tetrahedron], side: &FaceSide) -> String {
    let t = &tets[side.tet];
    format!(
        "{}:{}",
        t.id,
        side.vertices.map(|p| t.vertices[p].as_str()).join(",")
    )
}

/// One structure per tetrahedron, in the triangulation's order.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossRatioAssignment {
    pub structures: Vec<CrossRatioStructure>,
}

impl CrossRatioAssignment {
    pub fn new(structures: Vec<CrossRatioStructure>) -> Self {
        Self { structures }
    }

    fn check_len(&self, t: &Triangulation) -> Result<()> {
        if self.structures.len() != t.tetrahedra.len() {
            return Err(Error::Structural(format!(
                "{} structures for {} tetrahedra",
                self.structures.len(),
                t.tetrahedra.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub id: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceReport {
    pub kind: String,
    pub tolerance: f64,
    pub residuals: Vec<Residual>,
    /// Edges whose star is not closed, or unpaired faces.
    pub boundary: Vec<String>,
    pub worst: Option<String>,
    pub worst_residual: f64,
    pub pass: bool,
}

impl ComplianceReport {
    fn finish(kind: &str, tolerance: f64, residuals: Vec<Residual>, boundary: Vec<String>) -> Self {
        let mut worst = None;
        let mut worst_residual = 0.0;
        for r in &residuals {
            if r.residual.is_nan() || r.residual > worst_residual {
                worst_residual = r.residual;
                worst = Some(r.id.clone());
            }
        }
        let pass = residuals.iter().all(|r| r.residual <= tolerance);
        Self {
            kind: kind.into(),
            tolerance,
            residuals,
            boundary,
            worst,
            worst_residual,
            pass,
        }
    }
}

fn quad_local(s: &CrossRatioStructure, o: [usize; 4]) -> Complex64 {
    s.quad(
        o[0] as u8 + 1,
        o[1] as u8 + 1,
        o[2] as u8 + 1,
        o[3] as u8 + 1,
    )
}

fn other_two(a: usize, b: usize) -> (usize, usize) {
    let rest: Vec<usize> = (0..4).filter(|&p| p != a && p != b).collect();
    (rest[0], rest[1])
}

/// Products of `X(i, j, m_k, m_{k+1})` around every interior edge.
pub fn validate_edge_compatibility(
    t: &Triangulation,
    a: &CrossRatioAssignment,
    tol: f64,
) -> Result<ComplianceReport> {
    a.check_len(t)?;
    let mut seen: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    let mut residuals = Vec::new();
    let mut boundary = Vec::new();
    let limit = 6 * t.tetrahedra.len() + 1;
    for (ti, tet) in t.tetrahedra.iter().enumerate() {
        for i in 0..4 {
            for j in i + 1..4 {
                if seen.contains(&(ti, i, j)) {
                    continue;
                }
                let name = format!("{}:{}-{}", tet.id, tet.vertices[i], tet.vertices[j]);
                let (c0, d0) = other_two(i, j);
                let start = (ti, i, j, c0, d0);
                let mut state = start;
                let mut product = Complex64::new(1.0, 0.0);
                let mut closed = false;
                let mut visited = Vec::new();
                for _ in 0..limit {
                    let (tt, ii, jj, cc, dd) = state;
                    visited.push((tt, ii.min(jj), ii.max(jj)));
                    product *= quad_local(&a.structures[tt], [ii, jj, cc, dd]);
                    let Some((pairing, side)) = t.across(tt, [ii, jj, dd]) else {
                        break;
                    };
                    let other = if side == 0 {
                        pairing.second
                    } else {
                        pairing.first
                    };
                    let (ni, nj, nc) = (
                        pairing.image(side, ii),
                        pairing.image(side, jj),
                        pairing.image(side, dd),
                    );
                    let nd = (0..4)
                        .find(|p| ![ni, nj, nc].contains(p))
                        .expect("fourth vertex");
                    let next = (other.tet, ni, nj, nc, nd);
                    if next.0 == start.0
                        && [next.1, next.2].iter().collect::<BTreeSet<_>>()
                            == [i, j].iter().collect()
                    {
                        if (next.1, next.2, next.3) != (i, j, c0) {
                            return Err(Error::Structural(format!(
                                "edge {name} is glued to itself with a twist"
                            )));
                        }
                        closed = true;
                        break;
                    }
                    state = next;
                }
                seen.extend(visited.iter().copied());
                if closed {
                    residuals.push(Residual {
                        id: name,
                        residual: (product - 1.0).norm(),
                    });
                } else {
                    // walk the other way so the whole boundary star is marked
                    boundary.push(name);
                    let mut state = (ti, j, i, d0, c0);
                    for _ in 0..limit {
                        let (tt, ii, jj, cc, dd) = state;
                        seen.insert((tt, ii.min(jj), ii.max(jj)));
                        let Some((pairing, side)) = t.across(tt, [ii, jj, dd]) else {
                            break;
                        };
                        let other = if side == 0 {
                            pairing.second
                        } else {
                            pairing.first
                        };
                        let (ni, nj, nc) = (
                            pairing.image(side, ii),
                            pairing.image(side, jj),
                            pairing.image(side, dd),
                        );
                        let nd = (0..4)
                            .find(|p| ![ni, nj, nc].contains(p))
                            .expect("fourth vertex");
                        let _ = cc;
                        state = (other.tet, ni, nj, nc, nd);
                    }
                }
            }
        }
    }
    Ok(ComplianceReport::finish("edge", tol, residuals, boundary))
}

/// Orientation the simplex induces on one of its faces, read in the given
/// vertex order.
fn induced_orientation(sign: i8, side: &FaceSide) -> i8 {
    let apex = side.apex();
    let mut order = vec![apex];
    order.extend_from_slice(&side.vertices);
    let parity = if is_even_permutation(&order) { 1 } else { -1 };
    sign * parity
}

/// `X(j,i,k,l) X(k,i,l,j) X(l,i,j,k)` with apex `i` and face `(j, k, l)`.
fn face_triple(s: &CrossRatioStructure, apex: usize, f: [usize; 3]) -> Complex64 {
    let [j, k, l] = f;
    quad_local(s, [j, apex, k, l]) * quad_local(s, [k, apex, l, j]) * quad_local(s, [l, apex, j, k])
}

/// Compares the triple products on both sides of every interior face.
pub fn validate_face_compatibility(
    t: &Triangulation,
    a: &CrossRatioAssignment,
    tol: f64,
) -> Result<ComplianceReport> {
    a.check_len(t)?;
    let mut residuals = Vec::new();
    for p in &t.pairings {
        let (s1, s2) = (&a.structures[p.first.tet], &a.structures[p.second.tet]);
        let lhs = face_triple(s1, p.first.apex(), p.first.vertices);
        let rhs = face_triple(s2, p.second.apex(), p.second.vertices);
        let mut r = (lhs - rhs).norm();
        let o1 = induced_orientation(t.tetrahedra[p.first.tet].sign, &p.first);
        let o2 = induced_orientation(t.tetrahedra[p.second.tet].sign, &p.second);
        if o1 == -o2 {
            let [j, k, l] = p.second.vertices;
            let reversed = face_triple(s2, p.second.apex(), [j, l, k]);
            r = r.max((lhs * reversed - 1.0).norm());
        }
        residuals.push(Residual {
            id: face_name(&t.tetrahedra, &p.first),
            residual: r,
        });
    }
    let paired: BTreeSet<(usize, [usize; 3])> = t.by_side.keys().copied().collect();
    let mut boundary = Vec::new();
    for (ti, _) in t.tetrahedra.iter().enumerate() {
        for apex in 0..4 {
            let v: Vec<usize> = (0..4).filter(|&q| q != apex).collect();
            let side = FaceSide {
                tet: ti,
                vertices: [v[0], v[1], v[2]],
            };
            if !paired.contains(&side.key()) {
                boundary.push(face_name(&t.tetrahedra, &side));
            }
        }
    }
    Ok(ComplianceReport::finish("face", tol, residuals, boundary))
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// `Σ ε_i D(T_i)`, summed pairwise in tetrahedron order.
pub fn total_volume(t: &Triangulation, a: &CrossRatioAssignment) -> Result<f64> {
    a.check_len(t)?;
    let terms: Vec<f64> = t
        .tetrahedra
        .iter()
        .zip(&a.structures)
        .map(|(tet, s)| f64::from(tet.sign) * s.volume())
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Structures of all tetrahedra from vertex positions on `S^3`.
pub fn geometric_assignment(
    t: &Triangulation,
    positions: &BTreeMap<String, HeisenbergPoint>,
) -> Result<CrossRatioAssignment> {
    let mut structures = Vec::with_capacity(t.tetrahedra.len());
    for tet in &t.tetrahedra {
        let mut pts = [HeisenbergPoint::Infinity; 4];
        for (slot, label) in pts.iter_mut().zip(&tet.vertices) {
            *slot = *positions
                .get(label)
                .ok_or_else(|| Error::Structural(format!("no position for vertex {label}")))?;
        }
        let cfg = cross_ratio_structure_of(&pts).map_err(|e| match e {
            Error::Domain(m) => Error::Degenerate(format!("tetrahedron {}: {m}", tet.id)),
            Error::Degenerate(m) => Error::Degenerate(format!("tetrahedron {}: {m}", tet.id)),
            other => other,
        })?;
        structures.push(cfg.structure);
    }
    Ok(CrossRatioAssignment { structures })
}

/// Structure of `tet` read in the label order `labels`, and the sign that
/// order carries.
fn canonical(
    tet: &Tetrahedron,
    s: &CrossRatioStructure,
    labels: [&str; 4],
) -> Result<(CrossRatioStructure, i8)> {
    let mut order = [0u8; 4];
    for (slot, l) in order.iter_mut().zip(labels) {
        *slot = tet
            .position(l)
            .ok_or_else(|| Error::MoveRefused(format!("{} has no vertex {l}", tet.id)))?
            as u8
            + 1;
    }
    let ordering = SimplexOrdering::new(order)?;
    let parity = if ordering.is_even() { 1 } else { -1 };
    Ok((s.reordered(&ordering), tet.sign * parity))
}

fn relative_gap(a: [Complex64; 4], b: [Complex64; 4]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm() / y.norm().max(1.0))
        .fold(0.0, f64::max)
}

fn fresh_id(taken: &BTreeSet<String>, base: &str) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|k| format!("{base}.{k}"))
        .find(|id| !taken.contains(id))
        .expect("unbounded")
}

fn rebuild(
    t: &Triangulation,
    a: &CrossRatioAssignment,
    removed: &[usize],
    added: Vec<(Tetrahedron, CrossRatioStructure)>,
) -> Result<(Triangulation, CrossRatioAssignment)> {
    let touches =
        t.pairings.iter().zip(&t.explicit).any(|(p, &e)| {
            e && (removed.contains(&p.first.tet) || removed.contains(&p.second.tet))
        });
    if touches {
        return Err(Error::MoveRefused(
            "explicit pairings touch the moved tetrahedra".into(),
        ));
    }
    let explicit = t.explicit_pairings();
    let mut tets = Vec::new();
    let mut structures = Vec::new();
    for (i, (tet, s)) in t.tetrahedra.iter().zip(&a.structures).enumerate() {
        if !removed.contains(&i) {
            tets.push(tet.clone());
            structures.push(*s);
        }
    }
    for (tet, s) in added {
        tets.push(tet);
        structures.push(s);
    }
    let nt = Triangulation::with_pairings(tets, &explicit)?;
    Ok((nt, CrossRatioAssignment { structures }))
}

/// Replaces the two tetrahedra sharing the face `face` by three around the
/// edge joining their apexes.
pub fn pachner_23(
    t: &Triangulation,
    a: &CrossRatioAssignment,
    face: &[String; 3],
) -> Result<(Triangulation, CrossRatioAssignment)> {
    a.check_len(t)?;
    let p = *t.find_face(face).ok_or_else(|| {
        Error::MoveRefused(format!("face {{{}}} is not interior", face.join(",")))
    })?;
    if p.first.tet == p.second.tet {
        return Err(Error::MoveRefused(
            "face is glued to its own tetrahedron".into(),
        ));
    }
    let (ta, tb) = (&t.tetrahedra[p.first.tet], &t.tetrahedra[p.second.tet]);
    let mut fv = p.first.vertices;
    fv.sort_unstable();
    let u: [&str; 5] = [
        &ta.vertices[p.first.apex()],
        &ta.vertices[fv[0]],
        &ta.vertices[fv[1]],
        &ta.vertices[fv[2]],
        &tb.vertices[p.second.apex()],
    ];
    for k in 0..3 {
        if ta.vertices[p.first.vertices[k]] != tb.vertices[p.second.vertices[k]] {
            return Err(Error::MoveRefused(
                "the pairing does not match vertex labels".into(),
            ));
        }
    }
    if u[1..4].contains(&u[4]) || u[0] == u[4] {
        return Err(Error::MoveRefused(
            "the two tetrahedra do not span five vertices".into(),
        ));
    }
    let (s1, e1) = canonical(ta, &a.structures[p.first.tet], [u[0], u[1], u[2], u[3]])?;
    let (s5, e5) = canonical(tb, &a.structures[p.second.tet], [u[1], u[2], u[3], u[4]])?;
    if e1 != e5 {
        return Err(Error::MoveRefused(
            "the two tetrahedra have incompatible orientations".into(),
        ));
    }
    let one = Complex64::new(1.0, 0.0);
    let x = s1.free_params();
    let [x1, x2, x3, _] = x;
    let c5 = s5.free_params();
    let refuse = |e: Error| match e {
        Error::Degenerate(m) | Error::Domain(m) => Error::MoveRefused(m),
        other => other,
    };
    let y2 = x2 / (c5[0] * (one - x2) + x2);
    let y3 = x3 / (c5[1] * (one - x3) + x3);
    let k = x3 * (y2 - one) * (x1 - one) / (x1 * (x2 - one));
    let y1 = y3 / (y3 - k);
    let q = crate::pentad::q_polynomial(x1, x2, y1, y2);
    let m = x1 * (y1 - one) * (x2 - y2) / q;
    let y4 = m / (m - c5[3]);
    for (name, v) in [("y1", y1), ("y2", y2), ("y3", y3), ("y4", y4)] {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::MoveRefused(format!("{name} is not finite")));
        }
    }
    let coords = derive_dependent(x, y1, y2, y4).map_err(refuse)?;
    let cols = coords.column_params();
    let gap = relative_gap(cols[4], c5);
    if gap > MOVE_TOLERANCE {
        return Err(Error::MoveRefused(format!(
            "the two tetrahedra are not face compatible (mismatch {gap:.3e})"
        )));
    }
    let mk = |c: [Complex64; 4]| CrossRatioStructure::from_array(c).map_err(refuse);
    let col2 = mk(cols[1])?;
    let col3 = mk(cols[2])?.reordered(&SimplexOrdering::new([2, 1, 3, 4])?);
    let col4 = mk(cols[3])?;
    let mut taken: BTreeSet<String> = t.tetrahedra.iter().map(|t| t.id.clone()).collect();
    let base = format!("{}{}", ta.id, tb.id);
    let mut added = Vec::new();
    for (suffix, verts, s) in [
        ("a", [u[0], u[1], u[2], u[4]], col2),
        ("b", [u[1], u[0], u[3], u[4]], col3),
        ("c", [u[0], u[2], u[3], u[4]], col4),
    ] {
        let id = fresh_id(&taken, &format!("{base}{suffix}"));
        taken.insert(id.clone());
        added.push((Tetrahedron::new(id, verts, e1), s));
    }
    rebuild(t, a, &[p.first.tet, p.second.tet], added)
}

/// Replaces the three tetrahedra around the edge `(u, v)` by two sharing a
/// face.
pub fn pachner_32(
    t: &Triangulation,
    a: &CrossRatioAssignment,
    edge: [&str; 2],
) -> Result<(Triangulation, CrossRatioAssignment)> {
    a.check_len(t)?;
    let star: Vec<usize> = t
        .tetrahedra
        .iter()
        .enumerate()
        .filter(|(_, tet)| edge.iter().all(|l| tet.position(l).is_some()))
        .map(|(i, _)| i)
        .collect();
    if star.len() != 3 {
        return Err(Error::MoveRefused(format!(
            "edge {}-{} lies in {} tetrahedra, not 3",
            edge[0],
            edge[1],
            star.len()
        )));
    }
    let others: BTreeSet<&str> = star
        .iter()
        .flat_map(|&i| t.tetrahedra[i].vertices.iter().map(String::as_str))
        .filter(|l| !edge.contains(l))
        .collect();
    if others.len() != 3 {
        return Err(Error::MoveRefused(
            "the edge star does not span five vertices".into(),
        ));
    }
    let others: Vec<&str> = others.into_iter().collect();
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let find = |set: [&str; 4]| -> Option<usize> {
        let want: BTreeSet<&str> = set.into_iter().collect();
        star.iter().copied().find(|&i| {
            t.tetrahedra[i]
                .vertices
                .iter()
                .map(String::as_str)
                .collect::<BTreeSet<_>>()
                == want
        })
    };
    for (u1, u5) in [(edge[0], edge[1]), (edge[1], edge[0])] {
        for perm in perms {
            let [u2, u3, u4] = perm.map(|k| others[k]);
            let (Some(i2), Some(i3), Some(i4)) = (
                find([u1, u2, u3, u5]),
                find([u1, u2, u4, u5]),
                find([u1, u3, u4, u5]),
            ) else {
                continue;
            };
            let (c2, e2) = canonical(&t.tetrahedra[i2], &a.structures[i2], [u1, u2, u3, u5])?;
            let (c3, e3) = canonical(&t.tetrahedra[i3], &a.structures[i3], [u1, u2, u4, u5])?;
            let (c4, e4) = canonical(&t.tetrahedra[i4], &a.structures[i4], [u1, u3, u4, u5])?;
            if !(e2 == e4 && e3 == -e2) {
                continue;
            }
            return collapse(t, a, [u1, u2, u3, u4, u5], [i2, i3, i4], [c2, c3, c4], e2);
        }
    }
    Err(Error::MoveRefused(
        "the edge star has no consistent orientation".into(),
    ))
}

fn collapse(
    t: &Triangulation,
    a: &CrossRatioAssignment,
    u: [&str; 5],
    idx: [usize; 3],
    cols: [CrossRatioStructure; 3],
    sign: i8,
) -> Result<(Triangulation, CrossRatioAssignment)> {
    let one = Complex64::new(1.0, 0.0);
    let [y1, y2, y3, y4] = cols[0].free_params();
    let c3 = cols[1].free_params();
    let c4 = cols[2].free_params();
    let w3 = c4[2];
    let z3 = w3 / c3[2];
    let x = [
        y1 / c3[0],
        y2 / c3[1],
        one - (one - y3) / c4[1],
        z3 * (one - w3) / (w3 * (one - z3)),
    ];
    let refuse = |e: Error| match e {
        Error::Degenerate(m) | Error::Domain(m) => Error::MoveRefused(m),
        other => other,
    };
    let coords = derive_dependent(x, y1, y2, y4).map_err(refuse)?;
    let derived = coords.column_params();
    let gap = relative_gap(derived[1], cols[0].free_params())
        .max(relative_gap(derived[2], c3))
        .max(relative_gap(derived[3], c4));
    if gap > MOVE_TOLERANCE {
        return Err(Error::MoveRefused(format!(
            "the three tetrahedra are not compatible (mismatch {gap:.3e})"
        )));
    }
    let col1 = CrossRatioStructure::from_array(derived[0]).map_err(refuse)?;
    let col5 = CrossRatioStructure::from_array(derived[4]).map_err(refuse)?;
    let mut taken: BTreeSet<String> = t.tetrahedra.iter().map(|t| t.id.clone()).collect();
    let base: String = idx.iter().map(|&i| t.tetrahedra[i].id.as_str()).collect();
    let mut added = Vec::new();
    for (suffix, verts, s) in [
        ("a", [u[0], u[1], u[2], u[3]], col1),
        ("b", [u[1], u[2], u[3], u[4]], col5),
    ] {
        let id = fresh_id(&taken, &format!("{base}{suffix}"));
        taken.insert(id.clone());
        added.push((Tetrahedron::new(id, verts, sign), s));
    }
    rebuild(t, a, &idx, added)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_coordinates, random_five_points, random_generic_quadruple};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labels(v: [&str; 3]) -> [String; 3] {
        v.map(String::from)
    }

    fn positions(pts: &[HeisenbergPoint], names: &[&str]) -> BTreeMap<String, HeisenbergPoint> {
        names
            .iter()
            .map(|n| n.to_string())
            .zip(pts.iter().copied())
            .collect()
    }

    fn pair_from_points(seed: u64) -> (Triangulation, CrossRatioAssignment) {
        let (p, _, _) = random_five_points(&mut ChaCha8Rng::seed_from_u64(seed));
        let t = Triangulation::new(vec![
            Tetrahedron::new("A", ["1", "2", "3", "4"], 1),
            Tetrahedron::new("B", ["2", "3", "4", "5"], 1),
        ])
        .unwrap();
        let a = geometric_assignment(&t, &positions(&p, &["1", "2", "3", "4", "5"])).unwrap();
        (t, a)
    }

    #[test]
    fn rejects_malformed_input() {
        let r = Triangulation::new(vec![Tetrahedron::new("A", ["1", "1", "3", "4"], 1)]);
        assert!(matches!(r, Err(Error::Structural(_))));
        let r = Triangulation::new(vec![Tetrahedron::new("A", ["1", "2", "3", "4"], 2)]);
        assert!(matches!(r, Err(Error::Structural(_))));
        let r = Triangulation::new(vec![
            Tetrahedron::new("A", ["1", "2", "3", "4"], 1),
            Tetrahedron::new("B", ["1", "2", "3", "5"], 1),
            Tetrahedron::new("C", ["1", "2", "3", "6"], 1),
        ]);
        assert!(matches!(r, Err(Error::Structural(m)) if m.contains("shared by 3")));
    }

    #[test]
    fn single_tetrahedron_is_vacuous() {
        let t = Triangulation::new(vec![Tetrahedron::new("A", ["a", "b", "c", "d"], 1)]).unwrap();
        // z12 z21 = e^{iπ/3}
        let rho = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_6);
        let s = CrossRatioStructure::hyperbolic_lift(rho, rho).unwrap();
        let a = CrossRatioAssignment::new(vec![s]);
        let e = validate_edge_compatibility(&t, &a, 1e-9).unwrap();
        assert!(e.pass && e.residuals.is_empty() && e.boundary.len() == 6);
        let f = validate_face_compatibility(&t, &a, 1e-9).unwrap();
        assert!(f.pass && f.residuals.is_empty() && f.boundary.len() == 4);
        assert!((total_volume(&t, &a).unwrap() - 1.014_941_606_409_653_6).abs() < 1e-12);
    }

    fn doubled(
        seed: u64,
    ) -> (
        Triangulation,
        CrossRatioAssignment,
        BTreeMap<String, HeisenbergPoint>,
    ) {
        let (p, _) = random_generic_quadruple(&mut ChaCha8Rng::seed_from_u64(seed));
        let t = Triangulation::with_pairings(
            vec![
                Tetrahedron::new("A", ["a", "b", "c", "d"], 1),
                Tetrahedron::new("B", ["a", "b", "d", "c"], 1),
            ],
            &[],
        )
        .unwrap();
        let pos = positions(&p, &["a", "b", "c", "d"]);
        let a = geometric_assignment(&t, &pos).unwrap();
        (t, a, pos)
    }

    #[test]
    fn double_along_all_faces() {
        let (t, a, _) = doubled(3);
        assert_eq!(t.pairings.len(), 4);
        let e = validate_edge_compatibility(&t, &a, 1e-9).unwrap();
        assert_eq!(e.residuals.len(), 6);
        assert!(e.pass, "{e:?}");
        let f = validate_face_compatibility(&t, &a, 1e-9).unwrap();
        assert!(f.pass, "{f:?}");
        assert!(total_volume(&t, &a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn perturbation_hits_edges() {
        let (t, mut a, _) = doubled(4);
        let [z12, z21, z34, z43] = a.structures[0].free_params();
        a.structures[0] = CrossRatioStructure::from_free_params(z12 + 1e-3, z21, z34, z43).unwrap();
        let e = validate_edge_compatibility(&t, &a, 1e-9).unwrap();
        assert!(!e.pass);
        let hit = e.residuals.iter().filter(|r| r.residual >= 1e-4).count();
        assert!(hit >= 3, "{e:?}");
    }

    #[test]
    fn geometric_pair_validates() {
        let (t, a) = pair_from_points(5);
        assert!(validate_edge_compatibility(&t, &a, 1e-9).unwrap().pass);
        let f = validate_face_compatibility(&t, &a, 1e-9).unwrap();
        assert_eq!(f.residuals.len(), 1);
        assert!(f.pass);
        assert_eq!(f.boundary.len(), 6);
    }

    #[test]
    fn random_assignment_fails_face_check() {
        let (t, mut a) = pair_from_points(6);
        a.structures[1] = CrossRatioStructure::from_free_params(
            Complex64::new(0.3, 0.7),
            Complex64::new(-1.2, 0.4),
            Complex64::new(2.0, -0.5),
            Complex64::new(0.5, 1.5),
        )
        .unwrap();
        let f = validate_face_compatibility(&t, &a, 1e-9).unwrap();
        assert!(!f.pass);
        assert_eq!(f.worst.as_deref(), Some("A:2,3,4"));
    }

    #[test]
    fn orientation_sign_negates_contribution() {
        let (t, a) = pair_from_points(7);
        let v = total_volume(&t, &a).unwrap();
        let mut flipped = t.tetrahedra.clone();
        flipped[1].sign = -1;
        let t2 = Triangulation::new(flipped).unwrap();
        let v2 = total_volume(&t2, &a).unwrap();
        let vb = a.structures[1].volume();
        assert_eq!(v - v2, 2.0 * vb);
    }

    #[test]
    fn even_relabeling_keeps_volume() {
        let (p, _) = random_generic_quadruple(&mut ChaCha8Rng::seed_from_u64(8));
        let pos = positions(&p, &["a", "b", "c", "d"]);
        let t1 = Triangulation::new(vec![Tetrahedron::new("A", ["a", "b", "c", "d"], 1)]).unwrap();
        let t2 = Triangulation::new(vec![Tetrahedron::new("A", ["b", "a", "d", "c"], 1)]).unwrap();
        let v1 = total_volume(&t1, &geometric_assignment(&t1, &pos).unwrap()).unwrap();
        let v2 = total_volume(&t2, &geometric_assignment(&t2, &pos).unwrap()).unwrap();
        assert!((v1 - v2).abs() < 1e-9);
    }

    #[test]
    fn c_circle_position_names_simplex() {
        let t = Triangulation::new(vec![Tetrahedron::new("T7", ["a", "b", "c", "d"], 1)]).unwrap();
        let pos = positions(
            &[
                HeisenbergPoint::Infinity,
                HeisenbergPoint::at(0.0, 0.0, 0.0),
                HeisenbergPoint::at(0.0, 0.0, 1.0),
                HeisenbergPoint::at(1.0, 1.0, 0.0),
            ],
            &["a", "b", "c", "d"],
        );
        let e = geometric_assignment(&t, &pos).unwrap_err();
        assert!(
            matches!(e, Error::Degenerate(ref m) if m.contains("T7")),
            "{e}"
        );
    }

    #[test]
    fn pachner_geometric() {
        let (t, a) = pair_from_points(11);
        let before = total_volume(&t, &a).unwrap();
        let (t2, a2) = pachner_23(&t, &a, &labels(["2", "3", "4"])).unwrap();
        assert_eq!(t2.tetrahedra.len(), 3);
        let after = total_volume(&t2, &a2).unwrap();
        assert!((before - after).abs() < 1e-9, "{before} {after}");
        let e = validate_edge_compatibility(&t2, &a2, 1e-9).unwrap();
        assert!(e.pass && e.residuals.len() == 1, "{e:?}");
        assert!(validate_face_compatibility(&t2, &a2, 1e-9).unwrap().pass);
        let (t3, a3) = pachner_32(&t2, &a2, ["1", "5"]).unwrap();
        assert_eq!(t3.tetrahedra.len(), 2);
        for (tet, s) in t3.tetrahedra.iter().zip(&a3.structures) {
            let orig = t
                .tetrahedra
                .iter()
                .position(|o| o.vertices == tet.vertices)
                .unwrap();
            let gap = relative_gap(s.free_params(), a.structures[orig].free_params());
            assert!(gap < 1e-10, "{gap}");
        }
    }

    #[test]
    fn pachner_with_scrambled_orders() {
        let (p, _, _) = random_five_points(&mut ChaCha8Rng::seed_from_u64(12));
        // even reorderings keep the sign; an odd one needs ε = -1
        let t = Triangulation::new(vec![
            Tetrahedron::new("A", ["3", "1", "4", "2"], -1),
            Tetrahedron::new("B", ["3", "4", "2", "5"], 1),
        ])
        .unwrap();
        let a = geometric_assignment(&t, &positions(&p, &["1", "2", "3", "4", "5"])).unwrap();
        let before = total_volume(&t, &a).unwrap();
        let (t2, a2) = pachner_23(&t, &a, &labels(["4", "2", "3"])).unwrap();
        assert!((before - total_volume(&t2, &a2).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn pachner_refuses_bad_orientation() {
        let (p, _, _) = random_five_points(&mut ChaCha8Rng::seed_from_u64(13));
        let t = Triangulation::new(vec![
            Tetrahedron::new("A", ["1", "2", "3", "4"], 1),
            Tetrahedron::new("B", ["2", "3", "4", "5"], -1),
        ])
        .unwrap();
        let a = geometric_assignment(&t, &positions(&p, &["1", "2", "3", "4", "5"])).unwrap();
        assert!(matches!(
            pachner_23(&t, &a, &labels(["2", "3", "4"])),
            Err(Error::MoveRefused(_))
        ));
        assert!(matches!(
            pachner_23(&t, &a, &labels(["1", "2", "3"])),
            Err(Error::MoveRefused(_))
        ));
    }

    #[test]
    fn pachner_refuses_incompatible_pair() {
        let (t, mut a) = pair_from_points(14);
        let [z12, z21, z34, z43] = a.structures[1].free_params();
        a.structures[1] = CrossRatioStructure::from_free_params(z12, z21, z34 * 1.01, z43).unwrap();
        assert!(matches!(
            pachner_23(&t, &a, &labels(["2", "3", "4"])),
            Err(Error::MoveRefused(_))
        ));
    }

    #[test]
    fn pachner_abstract() {
        let c = random_coordinates(&mut ChaCha8Rng::seed_from_u64(15));
        let cols = c.column_params();
        let t = Triangulation::new(vec![
            Tetrahedron::new("A", ["1", "2", "3", "4"], 1),
            Tetrahedron::new("B", ["2", "3", "4", "5"], 1),
        ])
        .unwrap();
        let a = CrossRatioAssignment::new(vec![
            CrossRatioStructure::from_array(cols[0]).unwrap(),
            CrossRatioStructure::from_array(cols[4]).unwrap(),
        ]);
        let (t2, a2) = pachner_23(&t, &a, &labels(["2", "3", "4"])).unwrap();
        let d = (total_volume(&t, &a).unwrap() - total_volume(&t2, &a2).unwrap()).abs();
        assert!(d < 1e-9);
        assert!(validate_edge_compatibility(&t2, &a2, 1e-9).unwrap().pass);
    }

    #[test]
    fn pairwise_sum_is_stable() {
        let v: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v));
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn explicit_pairing_override() {
        let (p, _) = random_generic_quadruple(&mut ChaCha8Rng::seed_from_u64(16));
        let pos = positions(&p, &["a", "b", "c", "d"]);
        let tets = vec![
            Tetrahedron::new("A", ["a", "b", "c", "d"], 1),
            Tetrahedron::new("B", ["a", "b", "d", "c"], 1),
        ];
        let explicit = [ExplicitPairing {
            first: ("A".into(), labels(["a", "b", "c"])),
            second: ("B".into(), labels(["a", "b", "c"])),
        }];
        let t = Triangulation::with_pairings(tets, &explicit).unwrap();
        assert_eq!(t.pairings.len(), 4);
        assert_eq!(t.explicit_pairings(), explicit.to_vec());
        let a = geometric_assignment(&t, &pos).unwrap();
        assert!(validate_face_compatibility(&t, &a, 1e-9).unwrap().pass);
    }
}
