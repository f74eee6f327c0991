//! Five-point configurations at the level of cross-ratios.
//!
//! Five labels `1..=5` span five tetrahedra, the columns
//! `[1234], [1235], [1245], [1345], [2345]`, entering the formal sum with
//! signs `+ - + - +`. Each column carries a [`CrossRatioStructure`] read in
//! sorted vertex order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crgeom::{cross_ratio_structure_of, HeisenbergPoint};
use crate::crstruct::{is_even_permutation, lookup, similarity_entries, CrossRatioStructure};
use crate::dilog::bloch_wigner_value;
use crate::error::{Error, Result};
use crate::scalar::{Dual, Field};

/// Denominators smaller than this are treated as vanishing.
pub const DENOMINATOR_CUTOFF: f64 = 1e-12;

pub const COLUMNS: [[u8; 4]; 5] = [
    [1, 2, 3, 4],
    [1, 2, 3, 5],
    [1, 2, 4, 5],
    [1, 3, 4, 5],
    [2, 3, 4, 5],
];
pub const COLUMN_SIGNS: [f64; 5] = [1.0, -1.0, 1.0, -1.0, 1.0];

/// Relative singular-value threshold for numeric rank.
pub const RANK_THRESHOLD: f64 = 1e-8;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn nonzero(name: &str, v: Complex64) -> Result<Complex64> {
    if v.norm() < DENOMINATOR_CUTOFF {
        Err(Error::Degenerate(format!("vanishing factor {name}")))
    } else {
        Ok(v)
    }
}

fn admissible(name: &str, v: Complex64) -> Result<()> {
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Domain(format!("{name} = {v} is not finite")));
    }
    if v.norm() < DENOMINATOR_CUTOFF {
        return Err(Error::Degenerate(format!("{name} = 0")));
    }
    if (v - 1.0).norm() < DENOMINATOR_CUTOFF {
        return Err(Error::Degenerate(format!("{name} = 1")));
    }
    Ok(())
}

/// Seven free coordinates of a compatible five-point configuration together
/// with the dependent ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FivePointCoordinates {
    pub x: [Complex64; 4],
    pub y1: Complex64,
    pub y2: Complex64,
    pub y4: Complex64,
    pub y3: Complex64,
    pub z3: Complex64,
    pub w3: Complex64,
    pub z4: Complex64,
    pub w4: Complex64,
    pub q: Complex64,
}

/// `Q = -y1 x1 y2 - x1 x2 + y1 x1 x2 + x1 + y1 y2 - y1`.
pub fn q_polynomial(x1: Complex64, x2: Complex64, y1: Complex64, y2: Complex64) -> Complex64 {
    -y1 * x1 * y2 - x1 * x2 + y1 * x1 * x2 + x1 + y1 * y2 - y1
}

/// Fills in `y3, z3, w3, z4, w4` from `x1..x4, y1, y2, y4`.
pub fn derive_dependent(
    x: [Complex64; 4],
    y1: Complex64,
    y2: Complex64,
    y4: Complex64,
) -> Result<FivePointCoordinates> {
    for (i, v) in x.iter().enumerate() {
        admissible(&format!("x{}", i + 1), *v)?;
    }
    admissible("y1", y1)?;
    admissible("y2", y2)?;
    admissible("y4", y4)?;
    let [x1, x2, x3, x4] = x;
    let q = q_polynomial(x1, x2, y1, y2);
    let one = one();
    let x1m = nonzero("x1=1", x1 - one)?;
    let x2m = nonzero("x2=1", x2 - one)?;
    let x4m = nonzero("x4=1", x4 - one)?;
    let y1m = nonzero("y1=1", y1 - one)?;
    let d12 = nonzero("x1=y1", x1 - y1)?;
    let d22 = nonzero("x2=y2", x2 - y2)?;
    let qq = nonzero("Q=0", q)?;

    let y3 = y1 * x3 * (y2 - one) * x1m / (x1 * y1m * x2m);
    let z3 = x4 * qq / (y1 * x4m * d22 * x1m);
    let w3 = qq / (x4m * d12 * x2m);
    let z4 = x1 * (y4 - one) * y1m * d22 / (y4 * qq);
    let w4 = (y4 - one) * (y2 - one) * d12 / qq;
    for (name, v) in [("y3", y3), ("z3", z3), ("w3", w3), ("z4", z4), ("w4", w4)] {
        admissible(name, v)?;
    }
    Ok(FivePointCoordinates {
        x,
        y1,
        y2,
        y4,
        y3,
        z3,
        w3,
        z4,
        w4,
        q,
    })
}

impl FivePointCoordinates {
    pub fn y(&self) -> [Complex64; 4] {
        [self.y1, self.y2, self.y3, self.y4]
    }

    /// The five columns of free parameters.
    pub fn column_params(&self) -> [[Complex64; 4]; 5] {
        let [x1, x2, x3, x4] = self.x;
        let [y1, y2, y3, y4] = self.y();
        edge_family_params(
            [x1, x2, x3, y1, y2, y3, self.z3, self.z4, self.w3, self.w4],
            Some((x4, y4)),
        )
    }

    /// Largest gap in the two identities relating `x4`, `y4` to
    /// `z3, w3, z4, w4`.
    pub fn consistency_residual(&self) -> f64 {
        let one = one();
        let x4 = self.z3 * (one - self.w3) / (self.w3 * (one - self.z3));
        let y4 = (one - self.w4) / (one - self.z4);
        let rel = |a: Complex64, b: Complex64| (a - b).norm() / b.norm().max(1.0);
        rel(x4, self.x[3]).max(rel(y4, self.y4))
    }

    /// Largest gap in `y3 x1 (y1 - 1)(x2 - 1) = y1 x3 (y2 - 1)(x1 - 1)`.
    pub fn y3_relation_residual(&self) -> f64 {
        let one = one();
        let [x1, x2, x3, _] = self.x;
        let lhs = self.y3 * x1 * (self.y1 - one) * (x2 - one);
        let rhs = self.y1 * x3 * (self.y2 - one) * (x1 - one);
        (lhs - rhs).norm() / lhs.norm().max(1.0)
    }
}

fn edge_family_params(
    v: [Complex64; 10],
    x4y4: Option<(Complex64, Complex64)>,
) -> [[Complex64; 4]; 5] {
    let [x1, x2, x3, y1, y2, y3, z3, z4, w3, w4] = v;
    let one = one();
    let (x4, y4) =
        x4y4.unwrap_or_else(|| (z3 * (one - w3) / (w3 * (one - z3)), (one - w4) / (one - z4)));
    [
        [x1, x2, x3, x4],
        [y1, y2, y3, y4],
        [y1 / x1, y2 / x2, w3 / z3, w4 / z4],
        [(one - y1) / (one - x1), (one - y3) / (one - x3), w3, w4],
        [
            x2 * (one - y2) / (y2 * (one - x2)),
            x3 * (one - y3) / (y3 * (one - x3)),
            z3,
            z4,
        ],
    ]
}

/// Five column structures of a five-point configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnQuintuple {
    pub columns: [CrossRatioStructure; 5],
}

impl ColumnQuintuple {
    /// Builds the columns, naming the column and row of any entry in {0, 1}.
    pub fn from_params(params: [[Complex64; 4]; 5]) -> Result<Self> {
        for (ci, col) in params.iter().enumerate() {
            for (ri, v) in col.iter().enumerate() {
                admissible(&format!("column {} row {}", ci + 1, ri + 1), *v)?;
            }
        }
        let mut columns = Vec::with_capacity(5);
        for (ci, col) in params.iter().enumerate() {
            columns.push(
                CrossRatioStructure::from_array(*col)
                    .map_err(|e| Error::Degenerate(format!("column {}: {e}", ci + 1)))?,
            );
        }
        Ok(Self {
            columns: columns.try_into().expect("five columns"),
        })
    }

    pub fn params(&self) -> [[Complex64; 4]; 5] {
        self.columns.map(|c| c.free_params())
    }

    /// `X(a, b, c, d)` for four distinct labels in `1..=5`.
    pub fn quad(&self, q: [u8; 4]) -> Complex64 {
        quad5(&self.params().map(similarity_entries), q)
    }

    pub fn volumes(&self) -> [f64; 5] {
        self.columns.map(|c| c.volume())
    }

    /// `V1 - V2 + V3 - V4 + V5`.
    pub fn signed_volume_sum(&self) -> f64 {
        self.volumes()
            .iter()
            .zip(COLUMN_SIGNS)
            .map(|(v, s)| v * s)
            .sum()
    }

    pub fn edge_compatibility_defect(&self) -> f64 {
        max_norm(&edge_residuals(&self.params()))
    }

    pub fn face_compatibility_defect(&self) -> f64 {
        max_norm(&face_residuals(&self.params()))
    }
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Index of the column not containing `missing`.
fn column_without(missing: u8) -> usize {
    5 - missing as usize
}

/// `X(a, b, c, d)` read from the column on `{a, b, c, d}`.
pub fn quad5<T: Field>(entries: &[[[T; 4]; 4]; 5], q: [u8; 4]) -> T {
    let missing = (1..=5u8)
        .find(|l| !q.contains(l))
        .expect("four distinct labels");
    let col = column_without(missing);
    let verts = COLUMNS[col];
    let local = q.map(|l| verts.iter().position(|&v| v == l).expect("label in column"));
    lookup(&entries[col], local)
}

/// All `(ijkl) - (ijkm)(ijml)`: 20 ordered pairs times 3 choices of `m`.
pub fn edge_residuals<T: Field>(params: &[[T; 4]; 5]) -> Vec<T> {
    let e = params.map(similarity_entries);
    let mut out = Vec::with_capacity(60);
    for i in 1..=5u8 {
        for j in (1..=5u8).filter(|&j| j != i) {
            let rest: Vec<u8> = (1..=5).filter(|&v| v != i && v != j).collect();
            for mi in 0..3 {
                let m = rest[mi];
                let others: Vec<u8> = rest.iter().copied().filter(|&v| v != m).collect();
                let (k, l) = (others[0], others[1]);
                out.push(
                    quad5(&e, [i, j, k, l]) - quad5(&e, [i, j, k, m]) * quad5(&e, [i, j, m, l]),
                );
            }
        }
    }
    out
}

/// For each pair `{j, m}` with face `(i, k, l)`:
/// `(ijkl)(ljik)(kjli) - (imkl)(lmik)(kmli)`.
pub fn face_residuals<T: Field>(params: &[[T; 4]; 5]) -> Vec<T> {
    let e = params.map(similarity_entries);
    let mut out = Vec::with_capacity(10);
    for j in 1..=5u8 {
        for m in j + 1..=5 {
            let f: Vec<u8> = (1..=5).filter(|&v| v != j && v != m).collect();
            let (i, k, l) = (f[0], f[1], f[2]);
            let side =
                |p: u8| quad5(&e, [i, p, k, l]) * quad5(&e, [l, p, i, k]) * quad5(&e, [k, p, l, i]);
            out.push(side(j) - side(m));
        }
    }
    out
}

/// The ten-parameter edge-compatible family.
pub fn edge_family_assemble(v: [Complex64; 10]) -> Result<ColumnQuintuple> {
    let names = ["x1", "x2", "x3", "y1", "y2", "y3", "z3", "z4", "w3", "w4"];
    for (n, z) in names.iter().zip(v) {
        admissible(n, z)?;
    }
    ColumnQuintuple::from_params(edge_family_params(v, None))
}

pub fn assemble_columns(c: &FivePointCoordinates) -> Result<ColumnQuintuple> {
    ColumnQuintuple::from_params(c.column_params())
}

/// `|V1 - V2 + V3 - V4 + V5|` for the assembled columns.
pub fn five_term_volume_defect(c: &FivePointCoordinates) -> Result<f64> {
    Ok(assemble_columns(c)?.signed_volume_sum().abs())
}

/// Coordinates and columns of five points on `S^3`.
pub fn from_five_points(
    p: &[HeisenbergPoint; 5],
) -> Result<(FivePointCoordinates, ColumnQuintuple)> {
    let mut params = [[one(); 4]; 5];
    for (slot, verts) in params.iter_mut().zip(COLUMNS) {
        let pts = verts.map(|v| p[v as usize - 1]);
        *slot = cross_ratio_structure_of(&pts)?.structure.free_params();
    }
    let quint = ColumnQuintuple::from_params(params)?;
    let coords = derive_dependent(params[0], params[1][0], params[1][1], params[1][3])?;
    Ok((coords, quint))
}

/// Largest relative gap between two column parameter sets.
pub fn column_mismatch(a: &ColumnQuintuple, b: &ColumnQuintuple) -> f64 {
    let (pa, pb) = (a.params(), b.params());
    let mut worst: f64 = 0.0;
    for c in 0..5 {
        for r in 0..4 {
            worst = worst.max((pa[c][r] - pb[c][r]).norm() / pb[c][r].norm().max(1.0));
        }
    }
    worst
}

/// Complex Jacobian of the edge (and optionally face) equations with respect
/// to the 20 column parameters, by forward-mode differentiation.
pub fn compatibility_jacobian(
    params: &[[Complex64; 4]; 5],
    with_faces: bool,
) -> DMatrix<Complex64> {
    let rows = 60 + if with_faces { 10 } else { 0 };
    let mut jac = DMatrix::zeros(rows, 20);
    for var in 0..20 {
        let mut dual = params.map(|col| col.map(Dual::constant_of));
        dual[var / 4][var % 4] = Dual::variable(params[var / 4][var % 4]);
        let mut res = edge_residuals(&dual);
        if with_faces {
            res.extend(face_residuals(&dual));
        }
        for (r, d) in res.iter().enumerate() {
            jac[(r, var)] = d.deriv;
        }
    }
    jac
}

/// Number of singular values below `RANK_THRESHOLD * σ_max`, counting the
/// missing ones when there are more unknowns than equations.
pub fn jacobian_nullity(jac: &DMatrix<Complex64>) -> usize {
    let sv = jac.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > RANK_THRESHOLD * max).count();
    jac.ncols() - rank
}

/// Residuals of the final step of the five-term argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    /// `|y3/x3 - b/a|`, `|(1-w3)/(1-z3) - (1-b)/(1-a)|`,
    /// `|(1-1/w4)/(1-1/z4) - (1-1/b)/(1-1/a)|`, relative.
    pub algebraic: [f64; 3],
    /// Numerical value of the column sum minus the leftover expression in
    /// `y3/x3, (1-w3)/(1-z3), ...` before substituting `a, b`.
    pub partial_sum_gap: f64,
    /// `|partial sum + FT(a, b)|`.
    pub numeric: f64,
}

pub fn identity_residual(c: &FivePointCoordinates) -> Result<IdentityResidual> {
    let quint = assemble_columns(c)?;
    let one = one();
    let [x1, x2, x3, _] = c.x;
    let [y1, y2, y3, _] = c.y();
    let a = (one - y1.inv()) / (one - x1.inv());
    let b = (one - y2) / (one - x2);
    let rel = |u: Complex64, v: Complex64| (u - v).norm() / v.norm().max(1.0);
    let algebraic = [
        rel(y3 / x3, b / a),
        rel((one - c.w3) / (one - c.z3), (one - b) / (one - a)),
        rel(
            (one - c.w4.inv()) / (one - c.z4.inv()),
            (one - b.inv()) / (one - a.inv()),
        ),
    ];

    let partial = -bloch_wigner_value(a) + bloch_wigner_value(b) - bloch_wigner_value(y3 / x3)
        + bloch_wigner_value((one - c.w3) / (one - c.z3))
        - bloch_wigner_value((one - c.w4.inv()) / (one - c.z4.inv()));
    let partial_sum_gap = (quint.signed_volume_sum() - partial).abs();
    let ft = bloch_wigner_value(a) - bloch_wigner_value(b) + bloch_wigner_value(b / a)
        - bloch_wigner_value((one - b) / (one - a))
        + bloch_wigner_value((one - b.inv()) / (one - a.inv()));
    Ok(IdentityResidual {
        algebraic,
        partial_sum_gap,
        numeric: (partial + ft).abs(),
    })
}

/// True for an even permutation of five labels.
pub fn is_even_relabeling(p: [u8; 5]) -> bool {
    is_even_permutation(&p.map(|v| v as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn r(v: f64) -> Complex64 {
        c(v, 0.0)
    }

    fn sample() -> FivePointCoordinates {
        derive_dependent(
            [c(0.7, 1.2), c(-1.3, 0.4), c(2.1, -0.8), c(0.3, -1.9)],
            c(-0.6, -0.9),
            c(1.8, 1.1),
            c(-2.2, 0.5),
        )
        .unwrap()
    }

    #[test]
    fn y3_substitution() {
        let d =
            derive_dependent([r(2.0), r(3.0), r(5.0), r(7.0)], r(11.0), r(13.0), r(17.0)).unwrap();
        assert!((d.y3 - r(16.5)).norm() < 1e-12);
        assert!(d.consistency_residual() < 1e-12);
        assert!(d.y3_relation_residual() < 1e-12);
        assert!(d.q.im == 0.0);
    }

    #[test]
    fn degenerate_factors_are_named() {
        let e = derive_dependent([r(2.0), r(3.0), r(5.0), r(7.0)], r(2.0), r(13.0), r(17.0))
            .unwrap_err();
        assert!(
            matches!(e, Error::Degenerate(ref m) if m.contains("x1=y1")),
            "{e}"
        );
        let e = derive_dependent([r(2.0), r(3.0), r(5.0), r(7.0)], r(11.0), r(3.0), r(17.0))
            .unwrap_err();
        assert!(
            matches!(e, Error::Degenerate(ref m) if m.contains("x2=y2")),
            "{e}"
        );
        let e = derive_dependent([r(2.0), r(3.0), r(1.0), r(7.0)], r(11.0), r(13.0), r(17.0))
            .unwrap_err();
        assert!(e.to_string().contains("x3"));
    }

    #[test]
    fn projection_property() {
        let d = sample();
        let again = derive_dependent(d.x, d.y1, d.y2, d.y4).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn columns_layout() {
        let d = sample();
        let q = assemble_columns(&d).unwrap();
        let p = q.params();
        assert_eq!(p[0], d.x);
        assert_eq!(p[1], d.y());
        assert!((p[2][0] - d.y1 / d.x[0]).norm() < 1e-15);
    }

    #[test]
    fn quad_lookup_matches_columns() {
        let q = assemble_columns(&sample()).unwrap();
        let [x1, x2, x3, x4] = sample().x;
        assert_eq!(q.quad([1, 2, 3, 4]), x1);
        assert_eq!(q.quad([2, 1, 4, 3]), x2);
        assert_eq!(q.quad([3, 4, 1, 2]), x3);
        assert_eq!(q.quad([4, 3, 2, 1]), x4);
        assert!((q.quad([1, 2, 4, 3]) - x1.inv()).norm() < 1e-15);
        assert_eq!(q.quad([2, 3, 4, 5]), q.columns[4].z(1, 2));
        assert_eq!(q.quad([5, 4, 3, 2]), q.columns[4].z(4, 3));
    }

    #[test]
    fn compatibility_of_prop2_point() {
        let q = assemble_columns(&sample()).unwrap();
        assert!(q.edge_compatibility_defect() < 1e-10);
        assert!(q.face_compatibility_defect() < 1e-10);
        // (4321) = (4325)(4351) in the edge-only family
        let d = sample();
        let lhs = q.quad([4, 3, 2, 1]);
        assert!((lhs - q.quad([4, 3, 2, 5]) * q.quad([4, 3, 5, 1])).norm() < 1e-11);
        assert!((lhs - d.z3 * (1.0 - d.w3) / (d.w3 * (1.0 - d.z3))).norm() < 1e-11);
        // (1524)(4512)(2541) = (1324)(4312)(2341)
        let a = q.quad([1, 5, 2, 4]) * q.quad([4, 5, 1, 2]) * q.quad([2, 5, 4, 1]);
        let b = q.quad([1, 3, 2, 4]) * q.quad([4, 3, 1, 2]) * q.quad([2, 3, 4, 1]);
        assert!((a - b).norm() < 1e-11);
    }

    #[test]
    fn perturbation_is_detected() {
        let q = assemble_columns(&sample()).unwrap();
        let mut p = q.params();
        p[4][2] += 1e-3;
        let bad = ColumnQuintuple::from_params(p).unwrap();
        assert!(bad.edge_compatibility_defect() >= 1e-4);
    }

    #[test]
    fn edge_family() {
        let v = [
            c(0.4, 1.1),
            c(-0.9, 0.6),
            c(1.7, -0.3),
            c(0.2, -1.4),
            c(1.3, 0.9),
            c(-1.1, -0.7),
            c(0.8, 0.5),
            c(-0.4, 1.6),
            c(2.0, -1.2),
            c(0.6, -0.6),
        ];
        let q = edge_family_assemble(v).unwrap();
        assert!(q.edge_compatibility_defect() < 1e-10);
        assert!(q.face_compatibility_defect() > 1e-3);
        let d = sample();
        let q = edge_family_assemble([
            d.x[0], d.x[1], d.x[2], d.y1, d.y2, d.y3, d.z3, d.z4, d.w3, d.w4,
        ])
        .unwrap();
        assert!(q.face_compatibility_defect() < 1e-10);
    }

    #[test]
    fn col4_row2_entry_is_right() {
        // the alternative (1-y2)/(1-x2) breaks edge compatibility
        let d = sample();
        let mut p = d.column_params();
        assert!(
            ColumnQuintuple::from_params(p)
                .unwrap()
                .edge_compatibility_defect()
                < 1e-10
        );
        p[3][1] = (1.0 - d.y2) / (1.0 - d.x[1]);
        assert!(
            ColumnQuintuple::from_params(p)
                .unwrap()
                .edge_compatibility_defect()
                > 1e-3
        );
    }

    #[test]
    fn five_term_volume_identity() {
        assert!(five_term_volume_defect(&sample()).unwrap() < 1e-10);
        let d =
            derive_dependent([r(2.0), r(3.0), r(5.0), r(7.0)], r(11.0), r(13.0), r(17.0)).unwrap();
        let q = assemble_columns(&d).unwrap();
        assert!(q.volumes().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_residual_algebra() {
        let t = identity_residual(&sample()).unwrap();
        assert!(t.algebraic.iter().all(|&x| x < 1e-10), "{t:?}");
        assert!(t.partial_sum_gap < 1e-10);
        assert!(t.numeric < 1e-10);
    }

    #[test]
    fn dimension_counts() {
        let v = [
            c(0.4, 1.1),
            c(-0.9, 0.6),
            c(1.7, -0.3),
            c(0.2, -1.4),
            c(1.3, 0.9),
            c(-1.1, -0.7),
            c(0.8, 0.5),
            c(-0.4, 1.6),
            c(2.0, -1.2),
            c(0.6, -0.6),
        ];
        let p1 = edge_family_assemble(v).unwrap().params();
        assert_eq!(jacobian_nullity(&compatibility_jacobian(&p1, false)), 10);
        let p2 = sample().column_params();
        assert_eq!(jacobian_nullity(&compatibility_jacobian(&p2, true)), 7);
    }

    #[test]
    fn dual_jacobian_matches_finite_difference() {
        let p = sample().column_params();
        let jac = compatibility_jacobian(&p, true);
        let h = 1e-6;
        let mut plus = p;
        let mut minus = p;
        plus[2][1] += h;
        minus[2][1] -= h;
        let (fp, fm) = (edge_residuals(&plus), edge_residuals(&minus));
        for r in 0..60 {
            let fd = (fp[r] - fm[r]) / (2.0 * h);
            assert!((fd - jac[(r, 9)]).norm() < 1e-5 * (1.0 + fd.norm()));
        }
    }
}
