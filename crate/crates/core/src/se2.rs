//! The planar rigid-motion group SE(2) and its Lie algebra se(2).
//!
//! Tangent coordinates are ordered `[σ, u₁, u₂]` (rotation first), so
//!
//! ```text
//! hat([σ, u₁, u₂]) = | 0  -σ  u₁ |
//!                    | σ   0  u₂ |
//!                    | 0   0   0 |
//! ```
//!
//! Group elements are kept as an `(θ, x)` pair and only materialized as
//! homogeneous matrices on demand. Headings are never wrapped here; wrapping
//! happens when metrics are computed.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

/// Below this |σ| the left Jacobian `V(σ)` and its inverse use Taylor series.
pub const SMALL_ANGLE: f64 = 1e-6;

const STRUCTURE_TOL: f64 = 1e-12;

/// Coordinates of an se(2) element.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TangentVector {
    pub sigma: f64,
    pub u1: f64,
    pub u2: f64,
}

impl TangentVector {
    pub const ZERO: TangentVector = TangentVector {
        sigma: 0.0,
        u1: 0.0,
        u2: 0.0,
    };

    pub const fn new(sigma: f64, u1: f64, u2: f64) -> Self {
        Self { sigma, u1, u2 }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.sigma, self.u1, self.u2)
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(k * self.sigma, k * self.u1, k * self.u2)
    }

    pub fn norm(self) -> f64 {
        self.to_vector().norm()
    }
}

impl Add for TangentVector {
    type Output = TangentVector;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.sigma + rhs.sigma, self.u1 + rhs.u1, self.u2 + rhs.u2)
    }
}

impl Sub for TangentVector {
    type Output = TangentVector;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for TangentVector {
    type Output = TangentVector;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// A 3×3 matrix with se(2) structure, produced by [`hat`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraMatrix(Matrix3<f64>);

impl AlgebraMatrix {
    /// Wraps a raw matrix after checking the se(2) structure.
    pub fn try_from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.row(2).iter().any(|v| v.abs() > STRUCTURE_TOL) {
            return Err(Error::MalformedAlgebra("bottom row must be zero"));
        }
        if m[(0, 0)].abs() > STRUCTURE_TOL || m[(1, 1)].abs() > STRUCTURE_TOL {
            return Err(Error::MalformedAlgebra("rotation block must have zero diagonal"));
        }
        if (m[(0, 1)] + m[(1, 0)]).abs() > STRUCTURE_TOL {
            return Err(Error::MalformedAlgebra("rotation block must be skew-symmetric"));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

pub fn hat(v: TangentVector) -> AlgebraMatrix {
    AlgebraMatrix(Matrix3::new(
        0.0, -v.sigma, v.u1, //
        v.sigma, 0.0, v.u2, //
        0.0, 0.0, 0.0,
    ))
}

/// Inverse of [`hat`]; fails on matrices without se(2) structure.
pub fn vee(m: &Matrix3<f64>) -> Result<TangentVector> {
    let m = AlgebraMatrix::try_from_matrix(*m)?;
    Ok(TangentVector::new(m.0[(1, 0)], m.0[(0, 2)], m.0[(1, 2)]))
}

pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Element of SE(2): heading `theta` (unwrapped) and position `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Se2Element {
    pub theta: f64,
    pub x: Vector2<f64>,
}

impl Default for Se2Element {
    fn default() -> Self {
        Self::identity()
    }
}

impl Se2Element {
    pub fn new(theta: f64, x1: f64, x2: f64) -> Self {
        Self {
            theta,
            x: Vector2::new(x1, x2),
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn rotation(&self) -> Matrix2<f64> {
        rotation(self.theta)
    }

    /// Homogeneous 3×3 matrix `[[R(θ), x], [0, 0, 1]]`.
    pub fn to_matrix(&self) -> Matrix3<f64> {
        let r = self.rotation();
        Matrix3::new(
            r[(0, 0)], r[(0, 1)], self.x[0], //
            r[(1, 0)], r[(1, 1)], self.x[1], //
            0.0, 0.0, 1.0,
        )
    }

    /// Reads `(θ, x)` back from a homogeneous matrix; θ lands in (-π, π].
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self::new(m[(1, 0)].atan2(m[(0, 0)]), m[(0, 2)], m[(1, 2)])
    }

    pub fn compose(&self, other: &Se2Element) -> Se2Element {
        Se2Element {
            theta: self.theta + other.theta,
            x: self.x + self.rotation() * other.x,
        }
    }

    pub fn inverse(&self) -> Se2Element {
        Se2Element {
            theta: -self.theta,
            x: -(self.rotation().transpose() * self.x),
        }
    }

    /// `[θ, x₁, x₂]` as a Euclidean vector.
    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.theta, self.x[0], self.x[1])
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl Mul for Se2Element {
    type Output = Se2Element;
    fn mul(self, rhs: Se2Element) -> Se2Element {
        self.compose(&rhs)
    }
}

/// `(sin σ / σ, (1 − cos σ) / σ)`, so that `V(σ) = a·I + b·J`.
fn jacobian_coefficients(sigma: f64) -> (f64, f64) {
    if sigma.abs() < SMALL_ANGLE {
        (1.0 - sigma * sigma / 6.0, sigma / 2.0)
    } else {
        let half = (0.5 * sigma).sin();
        (sigma.sin() / sigma, 2.0 * half * half / sigma)
    }
}

/// Left Jacobian of SE(2) acting on the translation coordinates.
pub fn left_jacobian(sigma: f64) -> Matrix2<f64> {
    let (a, b) = jacobian_coefficients(sigma);
    Matrix2::new(a, -b, b, a)
}

fn left_jacobian_inverse(sigma: f64) -> Matrix2<f64> {
    let (a, b) = jacobian_coefficients(sigma);
    let det = a * a + b * b;
    Matrix2::new(a, b, -b, a) / det
}

pub fn exp_map(v: TangentVector) -> Se2Element {
    Se2Element {
        theta: v.sigma,
        x: left_jacobian(v.sigma) * Vector2::new(v.u1, v.u2),
    }
}

/// Principal logarithm; defined for |θ| < π.
pub fn log_map(g: &Se2Element) -> Result<TangentVector> {
    if !(g.theta.abs() < std::f64::consts::PI) {
        return Err(Error::LogBranch(g.theta));
    }
    let u = left_jacobian_inverse(g.theta) * g.x;
    Ok(TangentVector::new(g.theta, u[0], u[1]))
}

/// Matrix of the adjoint action `ad_u`, i.e. `ad_u·ε = vee([hat(u), hat(ε)])`.
pub fn adjoint_ad(u: TangentVector) -> Matrix3<f64> {
    Matrix3::new(
        0.0, 0.0, 0.0, //
        u.u2, 0.0, -u.sigma, //
        -u.u1, u.sigma, 0.0,
    )
}

/// Noise-free vehicle transition `x · exp(δ·u)`.
pub fn propagate(x: &Se2Element, u: TangentVector, delta: f64) -> Se2Element {
    x.compose(&exp_map(u.scale(delta)))
}

/// Frobenius norm of `f(X₁X₂) − f(X₁)·f(I)⁻¹·f(X₂)` for an arbitrary matrix map.
/// Zero exactly when `f` is group affine on the given pair.
pub fn group_affine_residual_of<F>(f: F, x1: &Se2Element, x2: &Se2Element) -> f64
where
    F: Fn(&Matrix3<f64>) -> Matrix3<f64>,
{
    let m1 = x1.to_matrix();
    let m2 = x2.to_matrix();
    let lhs = f(&(m1 * m2));
    let f_id = f(&Matrix3::identity());
    let Some(f_id_inv) = f_id.try_inverse() else {
        return f64::INFINITY;
    };
    (lhs - f(&m1) * f_id_inv * f(&m2)).norm()
}

/// [`group_affine_residual_of`] for the vehicle transition [`propagate`].
pub fn group_affine_residual(
    x1: &Se2Element,
    x2: &Se2Element,
    u: TangentVector,
    delta: f64,
) -> f64 {
    let step = exp_map(u.scale(delta)).to_matrix();
    group_affine_residual_of(|m| m * step, x1, x2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn series_exp(m: &Matrix3<f64>, terms: usize) -> Matrix3<f64> {
        let mut acc = Matrix3::identity();
        let mut term = Matrix3::identity();
        for k in 1..=terms {
            term = term * m / k as f64;
            acc += term;
        }
        acc
    }

    #[test]
    fn hat_examples() {
        assert_eq!(*hat(TangentVector::ZERO).matrix(), Matrix3::zeros());
        let m = hat(TangentVector::new(0.4, 8.0, 0.0));
        assert_eq!(
            *m.matrix(),
            Matrix3::new(0.0, -0.4, 8.0, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0)
        );
        let a = TangentVector::new(0.1, -2.0, 3.0);
        let b = TangentVector::new(-0.7, 0.5, 0.25);
        assert_eq!(hat(a).matrix() + hat(b).matrix(), *hat(a + b).matrix());
    }

    #[test]
    fn vee_examples() {
        assert_eq!(vee(&Matrix3::zeros()).unwrap(), TangentVector::ZERO);
        let v = TangentVector::new(1.5, -0.25, 7.0);
        assert_eq!(vee(hat(v).matrix()).unwrap(), v);
        let mut bad = *hat(v).matrix();
        bad[(2, 0)] = 1.0;
        assert!(matches!(vee(&bad), Err(Error::MalformedAlgebra(_))));
        let mut asym = *hat(v).matrix();
        asym[(0, 1)] = 0.3;
        assert!(vee(&asym).is_err());
    }

    #[test]
    fn exp_examples() {
        assert_eq!(exp_map(TangentVector::ZERO), Se2Element::identity());
        let g = exp_map(TangentVector::new(FRAC_PI_2, 1.0, 0.0));
        assert_relative_eq!(g.theta, FRAC_PI_2);
        assert_relative_eq!(g.x[0], 2.0 / PI, epsilon = 1e-15);
        assert_relative_eq!(g.x[1], 2.0 / PI, epsilon = 1e-15);
        let series = series_exp(hat(TangentVector::new(FRAC_PI_2, 1.0, 0.0)).matrix(), 20);
        assert!((series - g.to_matrix()).amax() < 1e-12);
    }

    #[test]
    fn exp_is_smooth_through_small_angle_threshold() {
        let u = (3.0, -1.0);
        for s in [-2e-6, -1e-6 - 1e-12, -1e-6 + 1e-12, 0.0, 1e-6 - 1e-12, 1e-6 + 1e-12, 2e-6] {
            let g = exp_map(TangentVector::new(s, u.0, u.1));
            let series = series_exp(hat(TangentVector::new(s, u.0, u.1)).matrix(), 30);
            assert!((g.to_matrix() - series).amax() < 1e-14, "sigma = {s}");
            let back = log_map(&g).unwrap();
            assert!((back - TangentVector::new(s, u.0, u.1)).norm() < 1e-14);
        }
    }

    #[test]
    fn log_examples() {
        assert_eq!(log_map(&Se2Element::identity()).unwrap(), TangentVector::ZERO);
        assert!(matches!(
            log_map(&Se2Element::new(PI, 0.0, 0.0)),
            Err(Error::LogBranch(_))
        ));
        assert!(log_map(&Se2Element::new(-PI, 1.0, 0.0)).is_err());
        assert!(log_map(&Se2Element::new(f64::NAN, 1.0, 0.0)).is_err());
    }

    #[test]
    fn compose_and_inverse() {
        let g = Se2Element::new(0.7, 1.0, -2.0);
        let h = Se2Element::new(-2.1, 0.3, 4.0);
        assert_eq!(g.compose(&Se2Element::identity()), g);
        let e = g.compose(&g.inverse());
        assert!(e.theta.abs() < 1e-12 && e.x.norm() < 1e-12);
        let prod = g.to_matrix() * h.to_matrix();
        assert!(((g * h).to_matrix() - prod).amax() < 1e-12);
    }

    #[test]
    fn rotation_is_orthonormal() {
        for k in 0..50 {
            let r = rotation(0.37 * k as f64 - 9.0);
            assert!((r.transpose() * r - Matrix2::identity()).amax() < 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_examples() {
        let ad = adjoint_ad(TangentVector::new(0.4, 8.0, 0.0));
        assert_eq!(
            ad,
            Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -0.4, -8.0, 0.4, 0.0)
        );
        assert_eq!(adjoint_ad(TangentVector::ZERO), Matrix3::zeros());
    }

    #[test]
    fn propagate_examples() {
        let g = Se2Element::new(0.3, 1.0, 2.0);
        assert_eq!(propagate(&g, TangentVector::ZERO, 0.01), g);
        let one = propagate(&Se2Element::identity(), TangentVector::new(0.4, 8.0, 0.0), 0.01);
        assert_eq!(one, exp_map(TangentVector::new(0.004, 0.08, 0.0)));
    }

    #[test]
    fn group_affine_trivial_and_negative_control() {
        let u = TangentVector::new(0.4, 8.0, 0.0);
        let id = Se2Element::identity();
        assert_eq!(group_affine_residual(&id, &id, u, 0.01), 0.0);

        // Adding a state-dependent translation breaks the group-affine property.
        let step = exp_map(u.scale(0.01)).to_matrix();
        let skewed = |m: &Matrix3<f64>| {
            let mut out = m * step;
            out[(0, 2)] += 0.1 * m[(0, 2)] * m[(1, 2)];
            out
        };
        let x1 = Se2Element::new(0.5, 2.0, -1.0);
        let x2 = Se2Element::new(-1.0, 3.0, 4.0);
        assert!(group_affine_residual_of(skewed, &x1, &x2) > 1e-3);
    }
}
