use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crvolume_core::crgeom::{
    angle_decomposition, cartan_invariant, coboundary, cross_ratio_structure_of, kr_cross_ratio,
    CRConfiguration,
};
use crvolume_core::crstruct::TABLE;
use crvolume_core::dilog::{bloch_wigner, ExtendedComplex};
use crvolume_core::pentad::{
    assemble_columns, column_mismatch, from_five_points, identity_residual,
};
use crvolume_core::records::{
    from_complex, CoordinatesRecord, PointRecord, PointsFile, TriangulationFile,
};
use crvolume_core::sampling::{
    random_coordinates, random_five_points, random_generic_quadruple, random_point,
};
use crvolume_core::triangulation::{
    pachner_23, pachner_32, total_volume, validate_edge_compatibility, validate_face_compatibility,
    Tetrahedron,
};
use crvolume_core::{
    CrossRatioAssignment, CrossRatioStructure, FivePointCoordinates, HeisenbergPoint, Result,
    Triangulation,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use crate::output::{Outcome, Status};

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return Outcome::from(err),
        }
    };
}

fn cjson(z: Complex64) -> Value {
    json!(from_complex(z))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> std::result::Result<T, Outcome> {
    let text = fs::read_to_string(path)
        .map_err(|e| Outcome::input_error(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Outcome::input_error(format!("{}: {e}", path.display())))
}

pub fn dilog(re: Option<f64>, im: Option<f64>, lobachevsky: Option<f64>) -> Outcome {
    if let Some(theta) = lobachevsky {
        if !theta.is_finite() {
            return Outcome::input_error("theta must be finite");
        }
        let r = bloch_wigner(ExtendedComplex::Finite(Complex64::from_polar(
            1.0,
            2.0 * theta,
        )));
        return Outcome::ok(json!({
            "theta": theta,
            "value": 0.5 * r.value,
            "estimated_error": 0.5 * r.estimated_error,
        }));
    }
    let (Some(re), Some(im)) = (re, im) else {
        return Outcome::input_error("expected RE and IM");
    };
    let z = attempt!(ExtendedComplex::finite(Complex64::new(re, im)));
    let r = bloch_wigner(z);
    Outcome::ok(json!({
        "z": [re, im],
        "value": r.value,
        "estimated_error": r.estimated_error,
    }))
}

pub struct SimplexRequest {
    pub params: [Vec<f64>; 4],
    pub volume: bool,
    pub classify: bool,
    pub angles: bool,
    pub tol: f64,
}

fn invariants_json(s: &CrossRatioStructure) -> Value {
    let mut m = Map::new();
    for (i, j, _) in TABLE {
        m.insert(format!("z{i}{j}"), cjson(s.z(i, j)));
    }
    Value::Object(m)
}

pub fn simplex(req: &SimplexRequest) -> Outcome {
    let free = req.params.clone().map(|v| Complex64::new(v[0], v[1]));
    let s = attempt!(CrossRatioStructure::from_array(free));
    let all = !(req.volume || req.classify || req.angles);
    let mut body = Map::new();
    body.insert("invariants".into(), invariants_json(&s));
    if req.volume || all {
        body.insert("volume".into(), json!(s.volume()));
    }
    if req.classify || all {
        body.insert("branch".into(), json!(s.classify_branch(req.tol)));
        body.insert(
            "hyperbolic_residuals".into(),
            json!(s.hyperbolic_residuals()),
        );
    }
    if req.angles || all {
        let a = angle_decomposition(&s);
        body.insert(
            "labels".into(),
            json!(TABLE.map(|(i, j, _)| format!("z{i}{j}"))),
        );
        body.insert("theta".into(), json!(a.theta));
        body.insert("r".into(), json!(a.r));
    }
    Outcome::ok(Value::Object(body))
}

#[derive(Debug, Clone, Copy)]
pub struct ConfigChecks {
    pub invariants: bool,
    pub cartan: bool,
    pub volume: bool,
    pub check_cr: bool,
    pub check_coboundary: bool,
    pub five_term: bool,
    pub tol: f64,
}

impl ConfigChecks {
    fn any_four(&self) -> bool {
        self.invariants || self.cartan || self.volume || self.check_cr || self.check_coboundary
    }

    /// With no flag given, every check that applies to `n` points.
    fn defaulted(mut self, n: usize) -> Self {
        if !self.any_four() && !self.five_term {
            if n == 4 {
                self.invariants = true;
                self.cartan = true;
                self.volume = true;
                self.check_cr = true;
                self.check_coboundary = true;
            } else {
                self.five_term = true;
            }
        }
        self
    }
}

/// Largest residual seen per check, plus the overall verdict.
#[derive(Debug, Default)]
struct Worst {
    values: BTreeMap<&'static str, f64>,
    pass: bool,
}

impl Worst {
    fn new() -> Self {
        Self {
            values: BTreeMap::new(),
            pass: true,
        }
    }

    fn record(&mut self, name: &'static str, value: f64, limit: f64) {
        let slot = self.values.entry(name).or_insert(0.0);
        if value.is_nan() || value > *slot {
            *slot = value;
        }
        if value.is_nan() || value > limit {
            self.pass = false;
        }
    }
}

fn max3(v: [f64; 3]) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

fn four_point_report(
    p: &[HeisenbergPoint; 4],
    checks: &ConfigChecks,
    worst: &mut Worst,
) -> Result<Value> {
    let cfg: CRConfiguration = cross_ratio_structure_of(p)?;
    let s = &cfg.structure;
    let tol = checks.tol;
    let angle_tol = tol.max(1e-8);
    let mut body = Map::new();
    if checks.invariants {
        body.insert("invariants".into(), invariants_json(s));
        body.insert(
            "similarity_residual".into(),
            json!(cfg.similarity_residual()),
        );
    }
    if checks.cartan {
        let a234 = cartan_invariant(&p[1], &p[2], &p[3])?;
        let faces = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)];
        let mut angles = Map::new();
        for (a, b, c) in faces {
            let name = format!("{}{}{}", a + 1, b + 1, c + 1);
            angles.insert(name, json!(cartan_invariant(&p[a], &p[b], &p[c])?.angle));
        }
        let kr = kr_cross_ratio(&p[0], &p[1], &p[2], &p[3])?
            * kr_cross_ratio(&p[0], &p[3], &p[1], &p[2])?
            * kr_cross_ratio(&p[0], &p[2], &p[3], &p[1])?;
        let kr_res = (kr - a234.exp_2i()).norm();
        let face_res = cfg.cartan_residual()?;
        worst.record("kr_triple_product", kr_res, tol);
        worst.record("cartan_face_product", face_res, tol);
        body.insert(
            "cartan".into(),
            json!({ "angles": angles, "kr_triple_product_residual": kr_res, "face_product_residual": face_res }),
        );
    }
    if checks.volume {
        body.insert("volume".into(), json!(s.volume()));
    }
    if checks.check_cr {
        let cr = cfg.cr_residuals();
        let reduced = cfg.reduced_cr_residuals();
        let angles = angle_decomposition(s);
        let pass = max3(cr) <= tol && max3(reduced) <= tol && angles.max_residual() <= angle_tol;
        worst.record("cr_equations", max3(cr), tol);
        worst.record("reduced_cr_equations", max3(reduced), tol);
        worst.record("angle_equations", angles.max_residual(), angle_tol);
        body.insert(
            "check_cr".into(),
            json!({ "residuals": cr, "reduced_residuals": reduced, "angles": angles, "pass": pass }),
        );
    }
    if checks.check_coboundary {
        let cob = coboundary(p)?;
        let defect = (cob - s.volume()).abs();
        worst.record("coboundary", defect, tol);
        body.insert(
            "check_coboundary".into(),
            json!({ "coboundary": cob, "volume": s.volume(), "defect": defect, "pass": defect <= tol }),
        );
    }
    Ok(Value::Object(body))
}

fn five_point_report(p: &[HeisenbergPoint; 5], tol: f64, worst: &mut Worst) -> Result<Value> {
    let (coords, quint) = from_five_points(p)?;
    let assembled = assemble_columns(&coords)?;
    let mismatch = column_mismatch(&assembled, &quint);
    let defect = quint.signed_volume_sum().abs();
    let edge = quint.edge_compatibility_defect();
    let face = quint.face_compatibility_defect();
    worst.record("five_term", defect, tol);
    worst.record("edge_compatibility", edge, tol);
    worst.record("face_compatibility", face, tol);
    worst.record("coordinate_mismatch", mismatch, tol);
    Ok(json!({
        "five_term": {
            "coordinates": CoordinatesRecord::from_coordinates(&coords),
            "volumes": quint.volumes(),
            "defect": defect,
            "edge_defect": edge,
            "face_defect": face,
            "coordinate_mismatch": mismatch,
            "pass": defect <= tol && edge <= tol && face <= tol && mismatch <= tol,
        }
    }))
}

pub fn config_file(path: &Path, checks: ConfigChecks) -> Outcome {
    let file: PointsFile = match read_json(path) {
        Ok(f) => f,
        Err(o) => return o,
    };
    let points = attempt!(file.to_points());
    let checks = checks.defaulted(points.len());
    let mut worst = Worst::new();
    let mut body = Map::new();
    if checks.any_four() {
        let Ok(p4) = <[HeisenbergPoint; 4]>::try_from(points.as_slice()) else {
            return Outcome::input_error(format!(
                "these checks need 4 points, got {}",
                points.len()
            ));
        };
        let Value::Object(m) = attempt!(four_point_report(&p4, &checks, &mut worst)) else {
            unreachable!()
        };
        body.extend(m);
    }
    if checks.five_term {
        let Ok(p5) = <[HeisenbergPoint; 5]>::try_from(points.as_slice()) else {
            return Outcome::input_error(format!(
                "--five-term needs 5 points, got {}",
                points.len()
            ));
        };
        let Value::Object(m) = attempt!(five_point_report(&p5, checks.tol, &mut worst)) else {
            unreachable!()
        };
        body.extend(m);
    }
    body.insert("pass".into(), json!(worst.pass));
    Outcome::new(Status::passed(worst.pass), Value::Object(body))
}

pub fn config_random(n: usize, seed: u64, checks: ConfigChecks) -> Outcome {
    let five = checks.five_term;
    let checks = checks.defaulted(if five { 5 } else { 4 });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Worst::new();
    for _ in 0..n {
        if checks.any_four() {
            let (p, _) = random_generic_quadruple(&mut rng);
            attempt!(four_point_report(&p, &checks, &mut worst));
        }
        if checks.five_term {
            let (p, _, _) = random_five_points(&mut rng);
            attempt!(five_point_report(&p, checks.tol, &mut worst));
        }
    }
    Outcome::new(
        Status::passed(worst.pass),
        json!({ "samples": n, "seed": seed, "tolerance": checks.tol, "max_residuals": worst.values, "pass": worst.pass }),
    )
}

fn coords_report(c: &FivePointCoordinates, tol: f64, worst: &mut Worst) -> Result<Value> {
    let quint = assemble_columns(c)?;
    let defect = quint.signed_volume_sum().abs();
    let edge = quint.edge_compatibility_defect();
    let face = quint.face_compatibility_defect();
    let identity = identity_residual(c)?;
    worst.record("five_term", defect, tol);
    worst.record("edge_compatibility", edge, tol);
    worst.record("face_compatibility", face, tol);
    worst.record("consistency", c.consistency_residual(), tol);
    let columns: Vec<Value> = quint
        .params()
        .iter()
        .map(|col| json!(col.map(from_complex)))
        .collect();
    Ok(json!({
        "derived": {
            "y3": cjson(c.y3), "z3": cjson(c.z3), "w3": cjson(c.w3),
            "z4": cjson(c.z4), "w4": cjson(c.w4), "Q": cjson(c.q),
        },
        "columns": columns,
        "volumes": quint.volumes(),
        "five_term_defect": defect,
        "edge_defect": edge,
        "face_defect": face,
        "consistency_residual": c.consistency_residual(),
        "identity_residual": identity,
    }))
}

pub fn coords_file(path: &Path, tol: f64) -> Outcome {
    let rec: CoordinatesRecord = match read_json(path) {
        Ok(r) => r,
        Err(o) => return o,
    };
    let c = attempt!(rec.to_coordinates());
    let mut worst = Worst::new();
    let Value::Object(mut body) = attempt!(coords_report(&c, tol, &mut worst)) else {
        unreachable!()
    };
    body.insert("pass".into(), json!(worst.pass));
    Outcome::new(Status::passed(worst.pass), Value::Object(body))
}

pub fn coords_random(n: usize, seed: u64, tol: f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Worst::new();
    for _ in 0..n {
        let c = random_coordinates(&mut rng);
        attempt!(coords_report(&c, tol, &mut worst));
    }
    Outcome::new(
        Status::passed(worst.pass),
        json!({ "samples": n, "seed": seed, "tolerance": tol, "max_residuals": worst.values, "pass": worst.pass }),
    )
}

type Loaded = (TriangulationFile, Triangulation, CrossRatioAssignment);

fn load_triangulation(path: &Path) -> std::result::Result<Loaded, Outcome> {
    let file: TriangulationFile = read_json(path)?;
    let t = file.triangulation().map_err(Outcome::from)?;
    let a = file.assignment(&t).map_err(Outcome::from)?;
    Ok((file, t, a))
}

pub fn tri_validate(path: &Path, tol: f64) -> Outcome {
    let (_, t, a) = match load_triangulation(path) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let edge = attempt!(validate_edge_compatibility(&t, &a, tol));
    let face = attempt!(validate_face_compatibility(&t, &a, tol));
    let pass = edge.pass && face.pass;
    Outcome::new(
        Status::passed(pass),
        json!({ "edge": edge, "face": face, "pass": pass }),
    )
}

pub fn tri_volume(path: &Path) -> Outcome {
    let (_, t, a) = match load_triangulation(path) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let volume = attempt!(total_volume(&t, &a));
    let per: Vec<Value> = t
        .tetrahedra
        .iter()
        .zip(&a.structures)
        .map(|(tet, s)| json!({ "id": tet.id, "sign": tet.sign, "volume": s.volume() }))
        .collect();
    Outcome::ok(json!({ "volume": volume, "tetrahedra": per }))
}

fn move_outcome(
    file: &TriangulationFile,
    before: f64,
    moved: Result<(Triangulation, CrossRatioAssignment)>,
    tol: f64,
) -> Outcome {
    let (t2, a2) = attempt!(moved);
    let after = attempt!(total_volume(&t2, &a2));
    let positions = attempt!(file.positions());
    let out = TriangulationFile::from_parts(&t2, &a2, positions.as_ref());
    let Value::Object(mut body) = serde_json::to_value(&out).expect("serializable") else {
        unreachable!()
    };
    let change = (after - before).abs();
    body.insert("volume_before".into(), json!(before));
    body.insert("volume_after".into(), json!(after));
    body.insert("volume_change".into(), json!(change));
    Outcome::new(Status::passed(change <= tol), Value::Object(body))
}

pub fn tri_pachner23(path: &Path, face: &[String], tol: f64) -> Outcome {
    let Ok(face) = <[String; 3]>::try_from(face.to_vec()) else {
        return Outcome::input_error("--face needs three labels");
    };
    let (file, t, a) = match load_triangulation(path) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let before = attempt!(total_volume(&t, &a));
    move_outcome(&file, before, pachner_23(&t, &a, &face), tol)
}

pub fn tri_pachner32(path: &Path, edge: &[String], tol: f64) -> Outcome {
    let [u, v] = edge else {
        return Outcome::input_error("--edge needs two labels");
    };
    let (file, t, a) = match load_triangulation(path) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let before = attempt!(total_volume(&t, &a));
    move_outcome(
        &file,
        before,
        pachner_32(&t, &a, [u.as_str(), v.as_str()]),
        tol,
    )
}

fn points_json(points: &[HeisenbergPoint]) -> Value {
    let records: Vec<PointRecord> = points
        .iter()
        .enumerate()
        .map(|(i, p)| PointRecord::from_point(Some(format!("p{}", i + 1)), p))
        .collect();
    serde_json::to_value(PointsFile { points: records }).expect("serializable")
}

pub fn sample_points(count: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<HeisenbergPoint> = match count {
        4 => random_generic_quadruple(&mut rng).0.to_vec(),
        5 => random_five_points(&mut rng).0.to_vec(),
        n => (0..n).map(|_| random_point(&mut rng)).collect(),
    };
    Outcome::ok(points_json(&points))
}

fn triangulation_json(
    tets: Vec<Tetrahedron>,
    structures: Vec<CrossRatioStructure>,
    positions: Option<BTreeMap<String, HeisenbergPoint>>,
) -> Outcome {
    let t = attempt!(Triangulation::new(tets));
    let a = CrossRatioAssignment::new(structures);
    let file = TriangulationFile::from_parts(&t, &a, positions.as_ref());
    Outcome::ok(serde_json::to_value(&file).expect("serializable"))
}

fn label_positions(
    labels: &[&str],
    points: &[HeisenbergPoint],
) -> BTreeMap<String, HeisenbergPoint> {
    labels
        .iter()
        .map(|l| l.to_string())
        .zip(points.iter().copied())
        .collect()
}

pub fn sample_pair(seed: u64, abstract_: bool) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tets = vec![
        Tetrahedron::new("A", ["1", "2", "3", "4"], 1),
        Tetrahedron::new("B", ["2", "3", "4", "5"], 1),
    ];
    if abstract_ {
        let c = random_coordinates(&mut rng);
        let cols = c.column_params();
        let s1 = attempt!(CrossRatioStructure::from_array(cols[0]));
        let s5 = attempt!(CrossRatioStructure::from_array(cols[4]));
        return triangulation_json(tets, vec![s1, s5], None);
    }
    let (p, _, quint) = random_five_points(&mut rng);
    let positions = label_positions(&["1", "2", "3", "4", "5"], &p);
    triangulation_json(
        tets,
        vec![quint.columns[0], quint.columns[4]],
        Some(positions),
    )
}

pub fn sample_double(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (p, cfg) = random_generic_quadruple(&mut rng);
    let tets = vec![
        Tetrahedron::new("A", ["a", "b", "c", "d"], 1),
        Tetrahedron::new("B", ["a", "b", "d", "c"], 1),
    ];
    let positions = label_positions(&["a", "b", "c", "d"], &p);
    triangulation_json(
        tets,
        vec![cfg.structure, cfg.structure.mirror()],
        Some(positions),
    )
}
