//! Seeded random generators for points, transformations and coordinates.
//! Every function takes the generator from the caller.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::crgeom::{
    cross_ratio_structure_of, lift, CRConfiguration, CrTransform, HeisenbergPoint,
};
use crate::pentad::{derive_dependent, from_five_points, ColumnQuintuple, FivePointCoordinates};

/// Bounds that keep sampled invariants away from the singular points of `D`.
pub const ENTRY_FLOOR: f64 = 1e-3;
pub const ENTRY_CEILING: f64 = 1e3;

const MAX_ATTEMPTS: usize = 10_000;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(normal(rng), normal(rng))
}

/// A Heisenberg point with standard normal coordinates.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R) -> HeisenbergPoint {
    HeisenbergPoint::Finite {
        z: random_complex_normal(rng),
        t: normal(rng),
    }
}

/// True when `z` is finite and at least `ENTRY_FLOOR` away from 0 and 1,
/// and no larger than `ENTRY_CEILING`.
pub fn well_conditioned(z: Complex64) -> bool {
    z.norm() >= ENTRY_FLOOR && (z - 1.0).norm() >= ENTRY_FLOOR && z.norm() <= ENTRY_CEILING
}

fn columns_well_conditioned(q: &ColumnQuintuple) -> bool {
    q.params().iter().flatten().all(|&z| well_conditioned(z))
}

/// Four random points whose invariants are all well conditioned.
pub fn random_generic_quadruple<R: Rng + ?Sized>(
    rng: &mut R,
) -> ([HeisenbergPoint; 4], CRConfiguration) {
    for _ in 0..MAX_ATTEMPTS {
        let p = [(); 4].map(|_| random_point(rng));
        if let Ok(cfg) = cross_ratio_structure_of(&p) {
            if cfg
                .structure
                .table_values()
                .iter()
                .all(|&z| well_conditioned(z))
            {
                return (p, cfg);
            }
        }
    }
    unreachable!("generic quadruples have full measure")
}

/// Five random points with well-conditioned columns and coordinates.
pub fn random_five_points<R: Rng + ?Sized>(
    rng: &mut R,
) -> ([HeisenbergPoint; 5], FivePointCoordinates, ColumnQuintuple) {
    for _ in 0..MAX_ATTEMPTS {
        let p = [(); 5].map(|_| random_point(rng));
        if let Ok((coords, quint)) = from_five_points(&p) {
            if columns_well_conditioned(&quint) {
                return (p, coords, quint);
            }
        }
    }
    unreachable!("generic five-point sets have full measure")
}

/// A value in the annulus `0.2 <= |v| <= 5` outside the disk of radius 0.05
/// around 1.
pub fn random_annulus<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    loop {
        let radius = rng.random_range(0.2..=5.0);
        let angle = rng.random_range(-PI..PI);
        let v = Complex64::from_polar(radius, angle);
        if (v - 1.0).norm() >= 0.05 {
            return v;
        }
    }
}

/// Free coordinates drawn from the annulus, rejected until every column
/// entry is well conditioned.
pub fn random_coordinates<R: Rng + ?Sized>(rng: &mut R) -> FivePointCoordinates {
    for _ in 0..MAX_ATTEMPTS {
        let x = [(); 4].map(|_| random_annulus(rng));
        let (y1, y2, y4) = (
            random_annulus(rng),
            random_annulus(rng),
            random_annulus(rng),
        );
        if let Ok(c) = derive_dependent(x, y1, y2, y4) {
            if c.column_params()
                .iter()
                .flatten()
                .all(|&z| well_conditioned(z))
            {
                return c;
            }
        }
    }
    unreachable!("admissible coordinates have full measure")
}

/// Ten annulus values for the edge-only family, rejected until the
/// assembled columns are well conditioned.
pub fn random_edge_family_params<R: Rng + ?Sized>(rng: &mut R) -> [Complex64; 10] {
    for _ in 0..MAX_ATTEMPTS {
        let v = [(); 10].map(|_| random_annulus(rng));
        if let Ok(q) = crate::pentad::edge_family_assemble(v) {
            if columns_well_conditioned(&q) {
                return v;
            }
        }
    }
    unreachable!("admissible parameters have full measure")
}

/// A random form-preserving matrix: the standard frame of two random points,
/// rescaled along the null directions and rotated in the middle coordinate.
pub fn random_j_unitary<R: Rng + ?Sized>(rng: &mut R) -> CrTransform {
    loop {
        let u = *lift(&random_point(rng)).vector() * random_complex_normal(rng);
        let w = *lift(&random_point(rng)).vector();
        if let Ok(frame) = CrTransform::frame(&u, &w) {
            let phase = Complex64::from_polar(1.0, rng.random_range(-PI..PI));
            let mut m = frame.0;
            let col = m.column(1) * phase;
            m.set_column(1, &col);
            return CrTransform(m);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn j_unitary_samples_preserve_the_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert!(random_j_unitary(&mut rng).unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn annulus_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let v = random_annulus(&mut rng);
            assert!((0.2..=5.0).contains(&v.norm()) && (v - 1.0).norm() >= 0.05);
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let a = random_coordinates(&mut ChaCha8Rng::seed_from_u64(9));
        let b = random_coordinates(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
