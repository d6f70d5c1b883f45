//! Backshift-operator polynomials.
//!
//! Every [`Polynomial`] stores the Box–Jenkins coefficients `c₁…c_d` of
//!
//! ```text
//! c(B) = 1 − c₁B − c₂B² − … − c_dB^d
//! ```
//!
//! so `Polynomial::new(vec![0.8, -0.15])` is `1 − 0.8B + 0.15B²`. The
//! constant term is implicitly 1 and is never stored.
//!
//! Roots are handled through their *inverse roots* `G_j`, the values for
//! which `c(B) = ∏(1 − G_jB)`. They are the eigenvalues of the companion
//! matrix of the monic reversed polynomial `x^d − c₁x^{d−1} − … − c_d`.
//! A polynomial is stationary (invertible, for an MA operator) when every
//! inverse root lies strictly inside the unit circle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FimError, Result};

/// Default tolerance for reconstructing a polynomial from its inverse roots.
pub const DEFAULT_RECONSTRUCT_TOL: f64 = 1e-8;
/// Default tolerance for inverse-root membership, relative to the
/// largest coefficient magnitude.
pub const DEFAULT_ROOT_MEMBERSHIP_TOL: f64 = 1e-8;

const POLISH_STEPS: usize = 3;

/// Operator polynomial `1 − c₁B − … − c_dB^d` (Box–Jenkins signs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds `1 − c₁B − … − c_dB^d` from `c₁…c_d`.
    ///
    /// Trailing zero coefficients are dropped so that the degree is exact.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(FimError::InvalidArgument(format!(
                "polynomial coefficient {bad} is not finite"
            )));
        }
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    /// The constant polynomial 1.
    pub fn one() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// Builds a polynomial from a full coefficient vector `(1, k₁, …, k_d)`
    /// in ascending powers of `B`, i.e. `c_j = −k_j`.
    pub(crate) fn from_full(full: &[f64]) -> Result<Self> {
        match full.first() {
            Some(&c0) if (c0 - 1.0).abs() <= 1e-12 => {
                Self::new(full[1..].iter().map(|k| -k).collect())
            }
            _ => Err(FimError::InvalidArgument(
                "full coefficient vector must start with 1".into(),
            )),
        }
    }

    /// Expands `∏(1 − G_jB)` into a polynomial, keeping real parts.
    pub fn from_inverse_roots(roots: &[Complex64]) -> Result<Self> {
        let full = expand_inverse_roots(roots);
        Self::from_full(&full.iter().map(|z| z.re).collect::<Vec<_>>())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Box–Jenkins coefficients `c₁…c_d`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficients in ascending powers of `B`, constant term included:
    /// `(1, −c₁, …, −c_d)`.
    pub fn full_coefficients(&self) -> Vec<f64> {
        std::iter::once(1.0)
            .chain(self.coeffs.iter().map(|c| -c))
            .collect()
    }

    /// `max(1, max|c_j|)`, the scale used by relative tolerances.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().fold(1.0_f64, |m, c| m.max(c.abs()))
    }

    /// Evaluates `1 − c₁x − … − c_dx^d`.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = (acc - c) * x;
        }
        acc + 1.0
    }

    /// Evaluates the monic reversed polynomial `x^d − c₁x^{d−1} − … − c_d`,
    /// whose roots are the inverse roots of `self`.
    pub(crate) fn eval_reversed(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, c| acc * x - c)
    }

    fn eval_reversed_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let mut value = Complex64::new(1.0, 0.0);
        let mut deriv = Complex64::new(0.0, 0.0);
        for c in &self.coeffs {
            deriv = deriv * x + value;
            value = value * x - c;
        }
        (value, deriv)
    }

    /// Product of two operator polynomials.
    pub fn multiply(&self, other: &Polynomial) -> Polynomial {
        let full = convolve(&self.full_coefficients(), &other.full_coefficients());
        Polynomial {
            coeffs: full[1..].iter().map(|k| -k).collect(),
        }
    }

    /// Inverse roots `{G_j}` with `∏(1 − G_jB) = self`.
    ///
    /// Roots come from the companion matrix eigenvalues, are polished with
    /// a few guarded Newton steps and forced into exact conjugate pairs.
    /// The expansion of the returned roots must reproduce the coefficients
    /// within `tol_reconstruct × scale`, otherwise a numerical failure is
    /// reported with the largest deviation.
    pub fn inverse_roots(&self, tol_reconstruct: f64) -> Result<InverseRootSet> {
        let d = self.degree();
        let roots: Vec<Complex64> = match d {
            0 => Vec::new(),
            1 => vec![Complex64::new(self.coeffs[0], 0.0)],
            _ => {
                let mut companion = DMatrix::<f64>::zeros(d, d);
                for (j, c) in self.coeffs.iter().enumerate() {
                    companion[(0, j)] = *c;
                }
                for i in 1..d {
                    companion[(i, i - 1)] = 1.0;
                }
                let eig: Vec<Complex64> = nalgebra::Schur::try_new(companion, f64::EPSILON, 10_000)
                    .map(|schur| schur.complex_eigenvalues().iter().copied().collect())
                    .ok_or_else(|| {
                        FimError::NumericalFailure(format!(
                            "companion-matrix eigenvalues did not converge for {:?}",
                            self.coeffs
                        ))
                    })?;
                // Polishing clustered roots one at a time can unbalance the
                // cluster, so keep whichever set reconstructs better.
                let polished: Vec<Complex64> = eig.iter().map(|g| self.polish(*g)).collect();
                let raw = self.normalized_roots(eig)?;
                let polished = self.normalized_roots(polished)?;
                if reconstruction_error(self, &polished) <= reconstruction_error(self, &raw) {
                    polished
                } else {
                    raw
                }
            }
        };

        let deviation = reconstruction_error(self, &roots);
        if deviation > tol_reconstruct * self.scale() {
            return Err(FimError::NumericalFailure(format!(
                "inverse roots reproduce the coefficients only to {deviation:e} \
                 (max coefficient deviation; tolerance {tol_reconstruct:e})"
            )));
        }
        Ok(InverseRootSet {
            roots,
            tolerance: tol_reconstruct,
        })
    }

    fn normalized_roots(&self, mut roots: Vec<Complex64>) -> Result<Vec<Complex64>> {
        if roots.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(FimError::NumericalFailure(format!(
                "root finder produced non-finite inverse roots for {:?}",
                self.coeffs
            )));
        }
        enforce_conjugate_pairs(&mut roots);
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }

    fn polish(&self, mut g: Complex64) -> Complex64 {
        let mut residual = self.eval_reversed(g).norm();
        for _ in 0..POLISH_STEPS {
            let (value, deriv) = self.eval_reversed_with_derivative(g);
            if deriv.norm() == 0.0 {
                break;
            }
            let candidate = g - value / deriv;
            let r = self.eval_reversed(candidate).norm();
            if !(r < residual) {
                break;
            }
            g = candidate;
            residual = r;
        }
        g
    }

    /// Removes the factor `(1 − gB)` (jointly with `(1 − ḡB)` when `g` is
    /// not real).
    ///
    /// `g` must be an inverse root: `|x^d − c₁x^{d−1} − … − c_d|` at `x = g`
    /// may not exceed `tol × scale`.
    pub fn deflate(&self, g: Complex64, tol: f64) -> Result<Polynomial> {
        if self.is_one() {
            return Err(FimError::Precondition(
                "cannot deflate the constant polynomial 1".into(),
            ));
        }
        let bound = tol * self.scale();
        let residual = self.eval_reversed(g).norm();
        if residual > bound {
            return Err(FimError::Precondition(format!(
                "{g} is not an inverse root: |reversed polynomial at g| = {residual:e} > {bound:e} \
                 (|p(1/g)| = {:e})",
                if g.norm() > 0.0 {
                    self.eval(g.inv()).norm()
                } else {
                    f64::INFINITY
                }
            )));
        }
        let real_residual = self.eval_reversed(Complex64::new(g.re, 0.0)).norm();
        if g.im == 0.0 || real_residual <= bound {
            Ok(self.divide_real(g.re))
        } else {
            self.divide_conjugate_pair(g)
        }
    }

    /// Synthetic division by `(1 − gB)` without a membership check.
    pub(crate) fn divide_real(&self, g: f64) -> Polynomial {
        // Monic reversed coefficients m_0 = 1, m_k = −c_k; quotient q_k = m_k + g q_{k−1}.
        let d = self.degree();
        let mut q = Vec::with_capacity(d.saturating_sub(1));
        let mut prev = 1.0;
        for c in &self.coeffs[..d.saturating_sub(1)] {
            prev = -c + g * prev;
            q.push(-prev);
        }
        Polynomial { coeffs: q }
    }

    /// Division by `(1 − gB)(1 − ḡB)` without a membership check.
    pub(crate) fn divide_conjugate_pair(&self, g: Complex64) -> Result<Polynomial> {
        let d = self.degree();
        if d < 2 {
            return Err(FimError::Precondition(format!(
                "cannot remove the conjugate pair {g}, {} from a degree-{d} polynomial",
                g.conj()
            )));
        }
        // Divide x^d − c₁x^{d−1} − … by x² − s x + t, s = 2 Re g, t = |g|².
        let s = 2.0 * g.re;
        let t = g.norm_sqr();
        let m = self.full_coefficients();
        let mut q = vec![0.0; d - 1];
        for k in 0..d - 1 {
            let mut v = m[k];
            if k >= 1 {
                v += s * q[k - 1];
            }
            if k >= 2 {
                v -= t * q[k - 2];
            }
            q[k] = v;
        }
        Ok(Polynomial {
            coeffs: q[1..].iter().map(|k| -k).collect(),
        })
    }

    /// True iff every inverse root satisfies `|G_j| ≤ 1 − margin` and lies
    /// strictly inside the unit circle (so a unit root fails at margin 0).
    ///
    /// A polynomial whose roots cannot be computed is reported as not
    /// stationary.
    pub fn is_stationary(&self, margin: f64) -> bool {
        match self.inverse_roots(DEFAULT_RECONSTRUCT_TOL) {
            Ok(roots) => {
                let rho = roots.max_modulus();
                rho < 1.0 && rho <= 1.0 - margin
            }
            Err(_) => false,
        }
    }
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = FimError;

    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl std::fmt::Display for Polynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("1")?;
        for (j, c) in self.coeffs.iter().enumerate() {
            let sign = if *c > 0.0 { '-' } else { '+' };
            write!(f, " {sign} {}B", c.abs())?;
            if j > 0 {
                write!(f, "^{}", j + 1)?;
            }
        }
        Ok(())
    }
}

/// A general-constant-term polynomial `scale × (1 − c₁B − …)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaledPolynomial {
    pub scale: f64,
    pub poly: Polynomial,
}

impl RescaledPolynomial {
    pub fn new(scale: f64, poly: Polynomial) -> Self {
        Self { scale, poly }
    }

    /// Ascending coefficients `(scale, −scale·c₁, …)`.
    pub fn full_coefficients(&self) -> Vec<f64> {
        self.poly
            .full_coefficients()
            .into_iter()
            .map(|k| k * self.scale)
            .collect()
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }
}

/// Multiset of inverse roots of a [`Polynomial`], sorted by `(re, im)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseRootSet {
    pub roots: Vec<Complex64>,
    /// Reconstruction tolerance the set was validated against.
    pub tolerance: f64,
}

impl InverseRootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Largest modulus, 0 for the empty set.
    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    /// Expansion `∏(1 − G_jB)` in ascending powers of `B`.
    pub fn expand(&self) -> Vec<Complex64> {
        expand_inverse_roots(&self.roots)
    }
}

/// Sylvester resultant of two operator polynomials.
///
/// The Sylvester matrix is built from the full coefficient vectors
/// `(1, −a₁, …, −a_m)` and `(1, −b₁, …, −b_n)` in ascending powers of `B`.
/// With this layout the determinant equals `∏_{i,j}(G_i − H_j)` over the
/// inverse roots `G_i` of `a` and `H_j` of `b`, e.g. `+0.1` for
/// `a = 1 − 0.5B`, `b = 1 − 0.4B`.
pub fn sylvester_resultant(a: &Polynomial, b: &Polynomial) -> Result<f64> {
    let m = a.degree();
    let n = b.degree();
    if m + n == 0 {
        return Err(FimError::UndefinedResultant);
    }
    let size = m + n;
    let fa = a.full_coefficients();
    let fb = b.full_coefficients();
    let mut sylvester = DMatrix::<f64>::zeros(size, size);
    for row in 0..n {
        for (k, v) in fa.iter().enumerate() {
            sylvester[(row, row + k)] = *v;
        }
    }
    for row in 0..m {
        for (k, v) in fb.iter().enumerate() {
            sylvester[(n + row, row + k)] = *v;
        }
    }
    Ok(sylvester.lu().determinant())
}

/// Discrete convolution of two coefficient sequences.
pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn expand_inverse_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut full = vec![Complex64::new(1.0, 0.0)];
    for g in roots {
        let mut next = full.clone();
        next.push(Complex64::new(0.0, 0.0));
        for (k, v) in full.iter().enumerate() {
            next[k + 1] -= g * v;
        }
        full = next;
    }
    full
}

fn reconstruction_error(p: &Polynomial, roots: &[Complex64]) -> f64 {
    let expanded = expand_inverse_roots(roots);
    p.full_coefficients()
        .iter()
        .zip(&expanded)
        .map(|(want, got)| (got.re - want).abs().max(got.im.abs()))
        .fold(0.0, f64::max)
}

/// Pairs every non-real root with a conjugate partner and makes the pair
/// exactly conjugate. Unpaired near-real roots are projected to the real line.
fn enforce_conjugate_pairs(roots: &mut [Complex64]) {
    loop {
        let upper: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].im > 0.0).collect();
        let lower: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].im < 0.0).collect();
        if upper.len() == lower.len() {
            break;
        }
        let surplus = if upper.len() > lower.len() { upper } else { lower };
        let i = surplus
            .into_iter()
            .min_by(|&a, &b| roots[a].im.abs().total_cmp(&roots[b].im.abs()))
            .expect("surplus group is non-empty");
        roots[i].im = 0.0;
    }
    let upper: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].im > 0.0).collect();
    let mut lower: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].im < 0.0).collect();
    for i in upper {
        let (pos, &j) = lower
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                (roots[i] - roots[a].conj())
                    .norm()
                    .total_cmp(&(roots[i] - roots[b].conj()).norm())
            })
            .expect("equal counts of upper and lower roots");
        lower.swap_remove(pos);
        let mean = (roots[i] + roots[j].conj()) / 2.0;
        roots[i] = mean;
        roots[j] = mean.conj();
    }
}
