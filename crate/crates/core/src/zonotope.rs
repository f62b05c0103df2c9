//! Euclidean zonotopes `⟨p, H⟩ = { p + H·ξ : ξ ∈ [-1, 1]^m }`.
//!
//! All operations are pure and return new values. A zonotope with zero
//! generators (`m = 0`) is the singleton `{p}`; zero columns are legal and are
//! carried along until the next order reduction.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Slack granted to the LP optimum when deciding membership.
const LP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

/// Axis-aligned box `[lower, upper]`, `lower <= upper` componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBox {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl IntervalBox {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                op: "IntervalBox::new",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidConfig {
                field: "interval",
                reason: "lower bound exceeds upper bound".into(),
            });
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Product of the side lengths.
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .enumerate()
                .all(|(i, v)| *v >= self.lower[i] - tol && *v <= self.upper[i] + tol)
    }
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        if generators.nrows() != center.len() {
            return Err(Error::DimensionMismatch {
                op: "Zonotope::new",
                expected: center.len(),
                got: generators.nrows(),
            });
        }
        Ok(Self { center, generators })
    }

    pub fn singleton(center: DVector<f64>) -> Self {
        let d = center.len();
        Self {
            center,
            generators: DMatrix::zeros(d, 0),
        }
    }

    /// Zero-centred zonotope `⟨0, H⟩`.
    pub fn centered(generators: DMatrix<f64>) -> Self {
        Self {
            center: DVector::zeros(generators.nrows()),
            generators,
        }
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.center, self.generators)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Number of generator columns.
    pub fn order(&self) -> usize {
        self.generators.ncols()
    }

    /// Minkowski sum: centres add, generator matrices are concatenated
    /// column-wise (`a`'s columns first).
    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                op: "minkowski_sum",
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Zonotope {
            center: &self.center + &other.center,
            generators: hcat(&[&self.generators, &other.generators]),
        })
    }

    /// Image under the linear map `l`: `⟨l·p, l·H⟩`.
    pub fn linear_map(&self, l: &DMatrix<f64>) -> Result<Zonotope> {
        if l.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                op: "linear_map",
                expected: self.dim(),
                got: l.ncols(),
            });
        }
        Ok(Zonotope {
            center: l * &self.center,
            generators: l * &self.generators,
        })
    }

    /// Over-approximates `self` by a zonotope with exactly `order` generators.
    ///
    /// Columns are ranked by Euclidean norm (stable on ties), the `order - d`
    /// largest are kept verbatim and the rest are boxed into a `d × d`
    /// diagonal block. Zonotopes already at or below `order` are returned
    /// unchanged.
    pub fn reduce_order(&self, order: usize) -> Result<Zonotope> {
        Ok(Zonotope {
            center: self.center.clone(),
            generators: reduce_generators(&self.generators, order)?,
        })
    }

    /// Frobenius norm of the generator matrix.
    pub fn f_radius(&self) -> f64 {
        self.generators.norm()
    }

    /// `H·Hᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.generators * self.generators.transpose()
    }

    /// Tight axis-aligned bounding box.
    pub fn interval_hull(&self) -> IntervalBox {
        let radius = DVector::from_iterator(
            self.dim(),
            self.generators
                .row_iter()
                .map(|row| row.iter().map(|v| v.abs()).sum::<f64>()),
        );
        IntervalBox {
            lower: &self.center - &radius,
            upper: &self.center + &radius,
        }
    }

    /// Membership test: is there `ξ ∈ [-1, 1]^m` with `‖p + Hξ − x‖∞ <= tol`?
    ///
    /// Solved as the LP `min t  s.t.  |Hξ − (x − p)| <= tol, |ξ_j| <= t`,
    /// accepting when the optimum is at most one.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                op: "contains",
                expected: self.dim(),
                got: x.len(),
            });
        }
        let offset = x - &self.center;
        if offset.amax() <= tol {
            return Ok(true);
        }
        let m = self.order();
        if m == 0 {
            return Ok(false);
        }
        // Cheap rejection against the interval hull before building the LP.
        if !self.interval_hull().contains(x, tol + LP_SLACK) {
            return Ok(false);
        }

        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let t = lp.add_var(1.0, (0.0, f64::INFINITY));
        let xi: Vec<_> = (0..m)
            .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
            .collect();
        for &v in &xi {
            lp.add_constraint(&[(v, 1.0), (t, -1.0)], ComparisonOp::Le, 0.0);
            lp.add_constraint(&[(v, -1.0), (t, -1.0)], ComparisonOp::Le, 0.0);
        }
        for i in 0..self.dim() {
            let row: Vec<_> = xi
                .iter()
                .enumerate()
                .filter(|(j, _)| self.generators[(i, *j)] != 0.0)
                .map(|(j, v)| (*v, self.generators[(i, j)]))
                .collect();
            if tol > 0.0 {
                lp.add_constraint(&row, ComparisonOp::Ge, offset[i] - tol);
                lp.add_constraint(&row, ComparisonOp::Le, offset[i] + tol);
            } else {
                lp.add_constraint(&row, ComparisonOp::Eq, offset[i]);
            }
        }
        match lp.solve() {
            Ok(solution) => Ok(solution.objective() <= 1.0 + LP_SLACK),
            Err(minilp::Error::Infeasible) => Ok(false),
            Err(e) => Err(Error::LinearProgram(e.to_string())),
        }
    }

    /// Draws `p + H·ξ` with `ξ` uniform on the unit hypercube.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let xi = DVector::from_iterator(
            self.order(),
            (0..self.order()).map(|_| rng.random_range(-1.0..=1.0)),
        );
        &self.center + &self.generators * xi
    }
}

/// Generator-matrix form of [`Zonotope::reduce_order`], shared with the filters
/// which only ever track zero-centred error sets.
pub fn reduce_generators(h: &DMatrix<f64>, order: usize) -> Result<DMatrix<f64>> {
    let d = h.nrows();
    if order <= d {
        return Err(Error::InvalidReductionOrder { order, dim: d });
    }
    let m = h.ncols();
    if m <= order {
        return Ok(h.clone());
    }

    let norms: Vec<f64> = h.column_iter().map(|c| c.norm()).collect();
    let mut ranked: Vec<usize> = (0..m).collect();
    ranked.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let kept = order - d;
    let mut out = DMatrix::zeros(d, order);
    for (dst, &src) in ranked[..kept].iter().enumerate() {
        out.set_column(dst, &h.column(src));
    }
    for &src in &ranked[kept..] {
        for i in 0..d {
            out[(i, kept + i)] += h[(i, src)].abs();
        }
    }
    Ok(out)
}

/// Column-wise concatenation `[A B ...]` of matrices sharing a row count.
pub fn hcat(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}
