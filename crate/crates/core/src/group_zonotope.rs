//! Zonotopes on SE(2): a group-valued centre combined, through the
//! exponential map, with a zero-centred zonotope of algebra coordinates.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;

use crate::error::{Error, Result};
use crate::se2::{exp_map, log_map, Se2Element, TangentVector};
use crate::zonotope::{IntervalBox, Zonotope};

/// Which side the error acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Left,
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// `(X ⊕_G exp(⟨0, H⟩^∧))_side`.
///
/// Left: `{ X·exp(hat(ε)) }`, right: `{ exp(hat(ε))·X }` for `ε ∈ ⟨0, H⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupZonotope {
    pub center: Se2Element,
    pub generators: DMatrix<f64>,
    pub side: Side,
}

/// Heading interval and position box extracted from a group zonotope.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBounds {
    pub theta: (f64, f64),
    pub position: IntervalBox,
}

impl StateBounds {
    pub fn theta_width(&self) -> f64 {
        self.theta.1 - self.theta.0
    }

    pub fn position_area(&self) -> f64 {
        self.position.volume()
    }
}

impl GroupZonotope {
    pub fn new(center: Se2Element, generators: DMatrix<f64>, side: Side) -> Result<Self> {
        if generators.nrows() != 3 {
            return Err(Error::DimensionMismatch {
                op: "GroupZonotope::new",
                expected: 3,
                got: generators.nrows(),
            });
        }
        Ok(Self {
            center,
            generators,
            side,
        })
    }

    pub fn order(&self) -> usize {
        self.generators.ncols()
    }

    /// The algebra-level error set `⟨0, H⟩`.
    pub fn error_set(&self) -> Zonotope {
        Zonotope::centered(self.generators.clone())
    }

    /// Invariant error of `x` with respect to the centre, in algebra coordinates.
    pub fn error_coordinates(&self, x: &Se2Element) -> Result<TangentVector> {
        let eta = match self.side {
            Side::Left => self.center.inverse().compose(x),
            Side::Right => x.compose(&self.center.inverse()),
        };
        log_map(&eta)
    }

    /// Exact membership: pull `x` back through the logarithm and test it
    /// against `⟨0, H⟩`.
    pub fn contains_state(&self, x: &Se2Element, tol: f64) -> Result<bool> {
        let eps = self.error_coordinates(x)?;
        let eps = DVector::from_column_slice(eps.to_vector().as_slice());
        self.error_set().contains(&eps, tol)
    }

    /// The state obtained from algebra coordinates `ε = H·ξ`.
    pub fn state_at(&self, xi: &DVector<f64>) -> Se2Element {
        let eps: Vector3<f64> = Vector3::from_iterator((&self.generators * xi).iter().copied());
        let offset = exp_map(TangentVector::from_vector(&eps));
        group_minkowski_member(&self.center, &offset, self.side)
    }

    /// Forward construction of a member with `ξ` uniform on the hypercube.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Se2Element {
        let xi = DVector::from_iterator(
            self.order(),
            (0..self.order()).map(|_| rng.random_range(-1.0..=1.0)),
        );
        self.state_at(&xi)
    }

    /// Heading interval and position box of a left-invariant group zonotope.
    ///
    /// The heading range is exact because the rotation part of `exp` is `σ`
    /// itself. The position box uses the first-order map `x ≈ x̂ + R(θ̂)·u`,
    /// i.e. the interval hull of `R(θ̂)·⟨0, H[1..3, :]⟩` shifted to `x̂`.
    pub fn extract_bounds(&self) -> Result<StateBounds> {
        if self.side != Side::Left {
            return Err(Error::UnsupportedSide);
        }
        let theta_radius: f64 = self.generators.row(0).iter().map(|v| v.abs()).sum();
        let r = self.center.rotation();
        let trans = self.generators.rows(1, 2);
        let rotated = DMatrix::from_fn(2, self.order(), |i, j| {
            r[(i, 0)] * trans[(0, j)] + r[(i, 1)] * trans[(1, j)]
        });
        let hull = Zonotope::new(
            DVector::from_column_slice(self.center.x.as_slice()),
            rotated,
        )?
        .interval_hull();
        Ok(StateBounds {
            theta: (self.center.theta - theta_radius, self.center.theta + theta_radius),
            position: hull,
        })
    }
}

/// One element of the group Minkowski sum: `x·y` on the left, `y·x` on the right.
pub fn group_minkowski_member(x: &Se2Element, y: &Se2Element, side: Side) -> Se2Element {
    match side {
        Side::Left => x.compose(y),
        Side::Right => y.compose(x),
    }
}
