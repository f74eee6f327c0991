//! Cross-ratio structures on a single tetrahedron.
//!
//! A structure assigns to every ordering `(i, j, k, l)` of the vertices a
//! number `X(i, j, k, l)` in `C \ {0, 1}` with
//!
//! - `X(i, j, k, l) = 1 / X(i, j, l, k)` and
//! - `X(i, j, k, l) = 1 / (1 - X(i, l, j, k))`.
//!
//! For an even ordering the value is written `z_ij`; the four numbers
//! `z12, z21, z34, z43` determine everything else.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dilog::{bloch_wigner_value, lobachevsky};
use crate::error::{Error, Result};
use crate::scalar::Field;

/// Parameters closer than this to 0 or 1 are rejected.
pub const PARAMETER_CUTOFF: f64 = 1e-12;

/// The twelve edge-vertex invariants in their listing order, with the even
/// ordering each one is read from.
pub const TABLE: [(u8, u8, [u8; 4]); 12] = [
    (1, 2, [1, 2, 3, 4]),
    (1, 3, [1, 3, 4, 2]),
    (1, 4, [1, 4, 2, 3]),
    (2, 1, [2, 1, 4, 3]),
    (2, 4, [2, 4, 3, 1]),
    (2, 3, [2, 3, 1, 4]),
    (3, 4, [3, 4, 1, 2]),
    (3, 1, [3, 1, 2, 4]),
    (3, 2, [3, 2, 4, 1]),
    (4, 3, [4, 3, 2, 1]),
    (4, 2, [4, 2, 1, 3]),
    (4, 1, [4, 1, 3, 2]),
];

/// A vertex of the tetrahedron, numbered 1 to 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexLabel(u8);

impl VertexLabel {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=4).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::Domain(format!("vertex label {index} outside 1..=4")))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }
}

/// Parity of a sequence of distinct integers (true when even).
pub fn is_even_permutation(seq: &[usize]) -> bool {
    let mut inversions = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

/// An ordering `[p_i, p_j, p_k, p_l]` of the four vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimplexOrdering([u8; 4]);

impl SimplexOrdering {
    pub fn new(order: [u8; 4]) -> Result<Self> {
        let mut seen = [false; 5];
        for &v in &order {
            VertexLabel::new(v)?;
            if seen[v as usize] {
                return Err(Error::Domain(format!(
                    "ordering {order:?} repeats vertex {v}"
                )));
            }
            seen[v as usize] = true;
        }
        Ok(Self(order))
    }

    pub fn entries(&self) -> [u8; 4] {
        self.0
    }

    /// True for the class containing `[p1, p2, p3, p4]`.
    pub fn is_even(&self) -> bool {
        is_even_permutation(&self.0.map(usize::from))
    }
}

/// Similarity coordinates of a triangle seen from one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleShape {
    pub z1: Complex64,
    pub z2: Complex64,
    pub z3: Complex64,
}

impl TriangleShape {
    pub fn from_first(z1: Complex64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            z1,
            z2: (one - z1).inv(),
            z3: one - z1.inv(),
        }
    }

    /// Largest violation of `z2 = 1/(1 - z1)` and `z3 = 1/(1 - z2)`.
    pub fn similarity_residual(&self) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        let a = (self.z2 - (one - self.z1).inv()).norm();
        let b = (self.z3 - (one - self.z2).inv()).norm();
        a.max(b)
    }
}

/// Which component of the variety `z_ij z_ji = z_kl z_lk` a structure lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchClass {
    HyperbolicBranch,
    DiagonalBranch,
    BothDegenerate,
    Neither,
}

/// All twelve invariants from the four free parameters, indexed `[i-1][j-1]`.
/// Diagonal entries are zero.
pub fn similarity_entries<T: Field>(free: [T; 4]) -> [[T; 4]; 4] {
    let [z12, z21, z34, z43] = free;
    let next = |z: T| (T::one() - z).recip();
    let zero = T::constant(0.0);
    let mut m = [[zero; 4]; 4];
    m[0][1] = z12;
    m[0][2] = next(z12);
    m[0][3] = next(m[0][2]);
    m[1][0] = z21;
    m[1][3] = next(z21);
    m[1][2] = next(m[1][3]);
    m[2][3] = z34;
    m[2][0] = next(z34);
    m[2][1] = next(m[2][0]);
    m[3][2] = z43;
    m[3][1] = next(z43);
    m[3][0] = next(m[3][1]);
    m
}

/// Looks up `X(o)` in an entry table: `z_ij` for even orderings, its inverse
/// for odd ones.
pub fn lookup<T: Field>(entries: &[[T; 4]; 4], order: [usize; 4]) -> T {
    let z = entries[order[0]][order[1]];
    if is_even_permutation(&order) {
        z
    } else {
        z.recip()
    }
}

/// A cross-ratio structure on `[p1, p2, p3, p4]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossRatioStructure {
    entries: [[Complex64; 4]; 4],
}

fn check_parameter(name: &str, z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("{name} = {z} is not finite")));
    }
    if z.norm() < PARAMETER_CUTOFF {
        return Err(Error::Domain(format!("{name} = {z} is 0")));
    }
    if (z - 1.0).norm() < PARAMETER_CUTOFF {
        return Err(Error::Domain(format!("{name} = {z} is 1")));
    }
    Ok(())
}

impl CrossRatioStructure {
    pub fn from_free_params(
        z12: Complex64,
        z21: Complex64,
        z34: Complex64,
        z43: Complex64,
    ) -> Result<Self> {
        let free = [z12, z21, z34, z43];
        for (name, z) in ["z12", "z21", "z34", "z43"].iter().zip(free) {
            check_parameter(name, z)?;
        }
        let entries = similarity_entries(free);
        for &(i, j, _) in &TABLE {
            check_parameter(&format!("z{i}{j}"), entries[i as usize - 1][j as usize - 1])?;
        }
        Ok(Self { entries })
    }

    pub fn from_array(free: [Complex64; 4]) -> Result<Self> {
        Self::from_free_params(free[0], free[1], free[2], free[3])
    }

    /// `(z12, z21, z34, z43)`.
    pub fn free_params(&self) -> [Complex64; 4] {
        [self.z(1, 2), self.z(2, 1), self.z(3, 4), self.z(4, 3)]
    }

    /// `z_ij` for vertex numbers `i != j` in 1..=4.
    pub fn z(&self, i: u8, j: u8) -> Complex64 {
        debug_assert!(i != j && (1..=4).contains(&i) && (1..=4).contains(&j));
        self.entries[i as usize - 1][j as usize - 1]
    }

    /// The twelve invariants in [`TABLE`] order.
    pub fn table_values(&self) -> [Complex64; 12] {
        TABLE.map(|(i, j, _)| self.z(i, j))
    }

    pub fn invariant(&self, order: &SimplexOrdering) -> Complex64 {
        lookup(&self.entries, order.entries().map(|v| v as usize - 1))
    }

    /// `X(a, b, c, d)` for vertex numbers; panics on an invalid ordering.
    pub fn quad(&self, a: u8, b: u8, c: u8, d: u8) -> Complex64 {
        let order = SimplexOrdering::new([a, b, c, d]).expect("valid ordering");
        self.invariant(&order)
    }

    /// The same structure read on the simplex `[p_o1, p_o2, p_o3, p_o4]`.
    pub fn reordered(&self, order: &SimplexOrdering) -> Self {
        let [a, b, c, d] = order.entries();
        let free = [
            self.quad(a, b, c, d),
            self.quad(b, a, d, c),
            self.quad(c, d, a, b),
            self.quad(d, c, b, a),
        ];
        Self {
            entries: similarity_entries(free),
        }
    }

    /// The structure on the oppositely oriented simplex `[p1, p2, p4, p3]`.
    pub fn mirror(&self) -> Self {
        self.reordered(&SimplexOrdering([1, 2, 4, 3]))
    }

    /// `D(z12) + D(z21) + D(z34) + D(z43)`.
    pub fn volume(&self) -> f64 {
        self.free_params()
            .iter()
            .map(|&z| bloch_wigner_value(z))
            .sum()
    }

    /// Volume in angle form: the sum of `L(arg z_ij)` over all twelve invariants.
    pub fn angle_volume(&self) -> f64 {
        self.table_values()
            .iter()
            .map(|z| lobachevsky(z.arg()))
            .sum()
    }

    /// `(z12 z21, z31 z13, z14 z41)`.
    pub fn edge_products(&self) -> [Complex64; 3] {
        [
            self.z(1, 2) * self.z(2, 1),
            self.z(3, 1) * self.z(1, 3),
            self.z(1, 4) * self.z(4, 1),
        ]
    }

    /// The triangle seen from vertex `v`, starting with its free parameter.
    pub fn vertex_triangle(&self, v: VertexLabel) -> TriangleShape {
        let (a, b, c) = match v.index() {
            1 => ((1, 2), (1, 3), (1, 4)),
            2 => ((2, 1), (2, 4), (2, 3)),
            3 => ((3, 4), (3, 1), (3, 2)),
            _ => ((4, 3), (4, 2), (4, 1)),
        };
        TriangleShape {
            z1: self.z(a.0, a.1),
            z2: self.z(b.0, b.1),
            z3: self.z(c.0, c.1),
        }
    }

    /// Largest violation of `z_ik = 1/(1 - z_ij)` over the even orderings.
    pub fn similarity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &(_, _, [i, j, k, _]) in &TABLE {
            let want = (Complex64::new(1.0, 0.0) - self.z(i, j)).inv();
            worst = worst.max((self.z(i, k) - want).norm());
        }
        worst
    }

    /// Residuals of `z_ij z_ji = z_kl z_lk` for the pairs (12|34), (13|24),
    /// (14|23), each divided by `max(1, |z_ij z_ji|)`.
    pub fn hyperbolic_residuals(&self) -> [f64; 3] {
        OPPOSITE_EDGES.map(|((i, j), (k, l))| {
            let a = self.z(i, j) * self.z(j, i);
            let b = self.z(k, l) * self.z(l, k);
            (a - b).norm() / a.norm().max(1.0)
        })
    }

    /// Ideal hyperbolic branch, parametrised by `(z12, z21)`.
    pub fn hyperbolic_lift(z12: Complex64, z21: Complex64) -> Result<Self> {
        check_parameter("z12", z12)?;
        check_parameter("z21", z21)?;
        let (z34, z43) = hyperbolic_partner(z12, z21);
        Self::from_free_params(z12, z21, z34, z43)
    }

    /// The diagonal branch `z12 = z21 = z34 = z43 = z`.
    pub fn diagonal_structure(z: Complex64) -> Result<Self> {
        Self::from_free_params(z, z, z, z)
    }

    pub fn classify_branch(&self, tol: f64) -> BranchClass {
        if self.hyperbolic_residuals().iter().any(|&r| r > tol) {
            return BranchClass::Neither;
        }
        let [z12, z21, z34, z43] = self.free_params();
        let scale = |z: Complex64| z.norm().max(1.0);
        let (h34, h43) = hyperbolic_partner(z12, z21);
        let hyperbolic = ((z34 - h34).norm() / scale(h34)).max((z43 - h43).norm() / scale(h43));
        let diagonal = [z21, z34, z43]
            .iter()
            .map(|&z| (z - z12).norm() / scale(z12))
            .fold(0.0, f64::max);
        match (hyperbolic <= tol, diagonal <= tol) {
            (true, true) => BranchClass::BothDegenerate,
            (true, false) => BranchClass::HyperbolicBranch,
            (false, true) => BranchClass::DiagonalBranch,
            (false, false) => BranchClass::Neither,
        }
    }
}

const OPPOSITE_EDGES: [((u8, u8), (u8, u8)); 3] =
    [((1, 2), (3, 4)), ((1, 3), (2, 4)), ((1, 4), (2, 3))];

fn hyperbolic_partner(z12: Complex64, z21: Complex64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    (
        -z12 * (one - z21) / (one - z12),
        -z21 * (one - z12) / (one - z21),
    )
}
