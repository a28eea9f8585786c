//! Simple functions on the grid, the modular `∫φ(|f|/k) dμ` and the
//! Luxemburg norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::measure::{DyadicSpace, MeasurableSet};
use crate::numeric::bracket_crossing;
use crate::young::{Young, YoungFunction};

/// Default relative tolerance of [`luxemburg_norm`].
pub const NORM_TOL: f64 = 1e-13;

/// A real function constant on every grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFunction {
    space: DyadicSpace,
    values: Vec<f64>,
}

impl SimpleFunction {
    pub fn from_values(space: &DyadicSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.n_cells() {
            return domain(format!("{} values for {} cells", values.len(), space.n_cells()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("function values must be finite");
        }
        Ok(SimpleFunction {
            space: space.clone(),
            values,
        })
    }

    pub fn zero(space: &DyadicSpace) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn constant(space: &DyadicSpace, c: f64) -> Self {
        SimpleFunction {
            space: space.clone(),
            values: vec![c; space.n_cells()],
        }
    }

    /// `f(x) = x` sampled at cell midpoints.
    pub fn identity(space: &DyadicSpace) -> Self {
        let values = (0..space.n_cells()).map(|i| space.midpoint(i)).collect();
        SimpleFunction {
            space: space.clone(),
            values,
        }
    }

    /// `χ_A`.
    pub fn indicator(set: &MeasurableSet) -> Self {
        let values = set.mask().iter().map(|m| if *m { 1.0 } else { 0.0 }).collect();
        SimpleFunction {
            space: set.space().clone(),
            values,
        }
    }

    /// Independent uniform values in `[lo, hi)` from a seeded RNG.
    pub fn random(space: &DyadicSpace, seed: u64, lo: f64, hi: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..space.n_cells()).map(|_| rng.gen_range(lo..hi)).collect();
        SimpleFunction {
            space: space.clone(),
            values,
        }
    }

    pub fn space(&self) -> &DyadicSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Result<SimpleFunction> {
        SimpleFunction::from_values(&self.space, self.values.iter().map(|v| op(*v)).collect())
    }

    pub fn zip_with(&self, other: &SimpleFunction, op: impl Fn(f64, f64) -> f64) -> Result<SimpleFunction> {
        self.space.ensure_same(&other.space)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| op(*a, *b)).collect();
        SimpleFunction::from_values(&self.space, values)
    }

    pub fn add(&self, other: &SimpleFunction) -> Result<SimpleFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SimpleFunction) -> Result<SimpleFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> SimpleFunction {
        let values = self.values.iter().map(|v| c * v).collect();
        SimpleFunction {
            space: self.space.clone(),
            values,
        }
    }

    pub fn abs(&self) -> SimpleFunction {
        let values = self.values.iter().map(|v| v.abs()).collect();
        SimpleFunction {
            space: self.space.clone(),
            values,
        }
    }

    /// `‖f‖_∞` over cells of positive weight.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.space.weights())
            .filter(|(_, w)| **w > 0.0)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }

    /// Zero μ-almost everywhere.
    pub fn is_null(&self) -> bool {
        self.values
            .iter()
            .zip(self.space.weights())
            .all(|(v, w)| *v == 0.0 || *w == 0.0)
    }

    /// `∫_Ω f dμ`.
    pub fn integrate(&self) -> f64 {
        self.values.iter().zip(self.space.weights()).map(|(v, w)| v * w).sum()
    }

    /// `∫_A f dμ`.
    pub fn integrate_over(&self, set: &MeasurableSet) -> Result<f64> {
        self.space.ensure_same(set.space())?;
        Ok(self
            .values
            .iter()
            .zip(self.space.weights())
            .zip(set.mask())
            .filter(|(_, m)| **m)
            .map(|((v, w), _)| v * w)
            .sum())
    }

    /// `∫ f g dμ`.
    pub fn pairing(&self, other: &SimpleFunction) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.space.weights())
            .map(|((a, b), w)| a * b * w)
            .sum())
    }
}

fn modular_unchecked<Y: Young + ?Sized>(f: &SimpleFunction, phi: &Y, k: f64) -> f64 {
    f.values
        .iter()
        .zip(f.space.weights())
        .filter(|(v, w)| **v != 0.0 && **w > 0.0)
        .map(|(v, w)| phi.value(v.abs() / k) * w)
        .sum()
}

/// `∫_Ω φ(|f|/k) dμ`.
pub fn modular<Y: Young + ?Sized>(f: &SimpleFunction, phi: &Y, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return domain(format!("modular needs k > 0, got {k}"));
    }
    Ok(modular_unchecked(f, phi, k))
}

/// Luxemburg norm `inf{k > 0 : ∫φ(|f|/k) dμ ≤ 1}` to relative tolerance `tol`.
///
/// The returned value always lies on the feasible side, so
/// `modular(f, φ, N_φ(f)) ≤ 1`. Functions vanishing almost everywhere have
/// norm zero.
pub fn luxemburg_norm<Y: Young + ?Sized>(f: &SimpleFunction, phi: &Y, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return domain(format!("norm tolerance must be positive, got {tol}"));
    }
    if f.values.iter().any(|v| !v.is_finite()) {
        return domain("function values must be finite");
    }
    if f.is_null() {
        return Ok(0.0);
    }
    norm_by_bisection(|k| modular_unchecked(f, phi, k), tol)
}

/// Luxemburg norm of a function known only through its distribution, given
/// as `(value, mass)` atoms. Agrees with [`luxemburg_norm`] on any function
/// with that distribution.
pub fn distribution_norm<Y: Young + ?Sized>(atoms: &[(f64, f64)], phi: &Y, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return domain(format!("norm tolerance must be positive, got {tol}"));
    }
    if atoms
        .iter()
        .any(|(v, m)| !v.is_finite() || !(*m >= 0.0) || !m.is_finite())
    {
        return domain("atoms need finite values and finite nonnegative masses");
    }
    if atoms.iter().all(|(v, m)| *v == 0.0 || *m == 0.0) {
        return Ok(0.0);
    }
    norm_by_bisection(
        |k| {
            atoms
                .iter()
                .filter(|(v, m)| *v != 0.0 && *m > 0.0)
                .map(|(v, m)| phi.value(v.abs() / k) * m)
                .sum()
        },
        tol,
    )
}

fn norm_by_bisection(modular_at: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    // t = 1/k turns the decreasing modular into an increasing one
    let (lo, _) = bracket_crossing(|t| modular_at(1.0 / t), 1.0, tol);
    if lo == 0.0 {
        return Err(Error::Domain("norm overflows the double range".into()));
    }
    Ok(1.0 / lo)
}

/// [`luxemburg_norm`] at the default tolerance.
pub fn norm<Y: Young + ?Sized>(f: &SimpleFunction, phi: &Y) -> f64 {
    luxemburg_norm(f, phi, NORM_TOL).expect("simple functions have finite values")
}

/// Closed form `N_φ(χ_A) = 1 / φ⁻¹(1/μ(A))`.
pub fn indicator_norm<Y: Young + ?Sized>(phi: &Y, measure: f64) -> Result<f64> {
    if measure == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / phi.inverse(1.0 / measure)?)
}

/// Pairing `∫fg dμ` and the Hölder bound `2·N_φ(f)·N_ψ(g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderPairing {
    pub pairing: f64,
    pub bound: f64,
}

/// Evaluates the generalized Hölder inequality and fails with
/// [`Error::BoundViolation`] if `|∫fg| > 2·N_φ(f)·N_ψ(g)`.
pub fn holder_pairing(f: &SimpleFunction, g: &SimpleFunction, phi: &YoungFunction) -> Result<HolderPairing> {
    let pairing = f.pairing(g)?;
    let bound = 2.0 * norm(f, phi) * norm(g, &phi.complementary());
    if pairing.abs() > bound * (1.0 + 1e-12) {
        return Err(Error::BoundViolation {
            check: "holder",
            lhs: pairing.abs(),
            rhs: bound,
        });
    }
    Ok(HolderPairing { pairing, bound })
}

/// Both sides of Jensen's inequality `φ(⨍f) ≤ ⨍φ(f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenGap {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn jensen_gap(f: &SimpleFunction, phi: &YoungFunction) -> Result<JensenGap> {
    let total = f.space.total();
    let lhs = phi.value(f.integrate() / total);
    let rhs = f
        .values
        .iter()
        .zip(f.space.weights())
        .map(|(v, w)| phi.value(*v) * w)
        .sum::<f64>()
        / total;
    if lhs > rhs + 1e-12 * rhs.max(1.0) {
        return Err(Error::BoundViolation {
            check: "jensen",
            lhs,
            rhs,
        });
    }
    Ok(JensenGap { lhs, rhs })
}
