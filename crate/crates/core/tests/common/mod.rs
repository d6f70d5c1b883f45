//! Random stable ARMA models for property and acceptance tests.
//!
//! Models are built from their inverse roots so the true roots are known
//! independently of the crate's root finder.

#![allow(dead_code)]

use arma_fim::{ArmaModel, Polynomial};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_MODULUS: f64 = 0.9;
pub const MIN_MODULUS: f64 = 0.05;
pub const MIN_GAP: f64 = 0.05;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn far_enough(candidate: &[Complex64], taken: &[Complex64], min_gap: f64) -> bool {
    candidate.iter().all(|c| taken.iter().all(|t| (c - t).norm() >= min_gap))
        && candidate
            .iter()
            .enumerate()
            .all(|(i, a)| candidate[i + 1..].iter().all(|b| (a - b).norm() >= min_gap))
}

/// `degree` inverse roots (real or conjugate pairs), moduli in
/// `[MIN_MODULUS, max_modulus]`, every root at least `min_gap` from every
/// other root and from `avoid`.
pub fn random_roots<R: Rng>(
    rng: &mut R,
    degree: usize,
    max_modulus: f64,
    min_gap: f64,
    avoid: &[Complex64],
) -> Vec<Complex64> {
    loop {
        let mut roots: Vec<Complex64> = Vec::with_capacity(degree);
        let mut attempts = 0;
        while roots.len() < degree && attempts < 1000 {
            attempts += 1;
            let remaining = degree - roots.len();
            let candidate: Vec<Complex64> = if remaining >= 2 && rng.random_bool(0.5) {
                let r = rng.random_range(MIN_MODULUS..max_modulus);
                let angle = rng.random_range(0.05..std::f64::consts::PI - 0.05);
                let g = Complex64::from_polar(r, angle);
                vec![g, g.conj()]
            } else {
                let r = rng.random_range(MIN_MODULUS..max_modulus);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                vec![Complex64::new(sign * r, 0.0)]
            };
            let mut taken = roots.clone();
            taken.extend_from_slice(avoid);
            if far_enough(&candidate, &taken, min_gap) {
                roots.extend(candidate);
            }
        }
        if roots.len() == degree {
            return roots;
        }
    }
}

pub fn poly_from_roots(roots: &[Complex64]) -> Polynomial {
    Polynomial::from_inverse_roots(roots).expect("expansion of valid roots")
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub model: ArmaModel,
    pub phi_roots: Vec<Complex64>,
    pub theta_roots: Vec<Complex64>,
    /// The injected common root for redundant models.
    pub shared: Option<Complex64>,
}

fn build(phi_roots: Vec<Complex64>, theta_roots: Vec<Complex64>, shared: Option<Complex64>) -> Generated {
    let model = ArmaModel::new(poly_from_roots(&phi_roots), poly_from_roots(&theta_roots), 1e-4)
        .expect("generated roots are inside the unit disc");
    Generated {
        model,
        phi_roots,
        theta_roots,
        shared,
    }
}

/// Non-redundant model with `p, q ≤ max_order`, `p + q ≥ 1`, all AR/MA
/// inverse-root gaps at least `MIN_GAP`.
pub fn non_redundant<R: Rng>(rng: &mut R, max_order: usize) -> Generated {
    let (p, q) = loop {
        let p = rng.random_range(0..=max_order);
        let q = rng.random_range(0..=max_order);
        if p + q >= 1 {
            break (p, q);
        }
    };
    let phi_roots = random_roots(rng, p, MAX_MODULUS, MIN_GAP, &[]);
    let theta_roots = random_roots(rng, q, MAX_MODULUS, MIN_GAP, &phi_roots);
    build(phi_roots, theta_roots, None)
}

/// Redundant model: a shared real root or conjugate pair injected into both
/// operators, `1 ≤ p, q ≤ max_order`.
pub fn redundant<R: Rng>(rng: &mut R, max_order: usize) -> Generated {
    let p = rng.random_range(1..=max_order);
    let q = rng.random_range(1..=max_order);
    let complex_shared = p >= 2 && q >= 2 && rng.random_bool(0.5);
    let shared = if complex_shared {
        let r = rng.random_range(MIN_MODULUS..MAX_MODULUS);
        let angle = rng.random_range(0.3..std::f64::consts::PI - 0.3);
        let g = Complex64::from_polar(r, angle);
        vec![g, g.conj()]
    } else {
        random_roots(rng, 1, MAX_MODULUS, MIN_GAP, &[])
    };
    let mut phi_roots = shared.clone();
    phi_roots.extend(random_roots(rng, p - shared.len(), MAX_MODULUS, MIN_GAP, &shared));
    let mut avoid = phi_roots.clone();
    avoid.extend_from_slice(&shared);
    let mut theta_roots = shared.clone();
    theta_roots.extend(random_roots(rng, q - shared.len(), MAX_MODULUS, MIN_GAP, &avoid));
    let g = shared.iter().copied().max_by(|a, b| a.im.total_cmp(&b.im)).unwrap();
    build(phi_roots, theta_roots, Some(g))
}

/// Random stable polynomial of the given degree with moduli ≤ `max_modulus`.
pub fn stable_poly<R: Rng>(rng: &mut R, degree: usize, max_modulus: f64) -> (Polynomial, Vec<Complex64>) {
    let roots = random_roots(rng, degree, max_modulus, 0.02, &[]);
    (poly_from_roots(&roots), roots)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
