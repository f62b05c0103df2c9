//! Invariant zonotopic set-membership filter on SE(2).
//!
//! The state estimate is a [`GroupZonotope`]: a group-valued centre plus a
//! zonotope of invariant-error coordinates. Each update propagates the centre
//! through the vehicle transition, corrects it with `exp(hat(L·z))` on the
//! chosen side, and pushes the error zonotope through the linear error
//! dynamics
//!
//! ```text
//! H⁺ = [ (A − L·C)·R_s(H) ; D_w·H_w ; −L·M·H_v ]
//! ```
//!
//! where `M` maps the measurement noise into the innovation.
//!
//! For the left-invariant vehicle filter `A = I₃ − δ·ad_u` and, with the
//! alternative innovation `z = R(θ̂)ᵀ(y − x̂)`, `C = [[0,1,0],[0,0,1]]` and
//! `M = R(θ̂)ᵀ`; with constant inputs neither `A` nor `C` depends on the
//! estimate, so a pole-placement gain is computed once and reused.

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::gain::{f_radius_optimal_gain, pole_placement_gain, GainStrategy};
use crate::group_zonotope::{GroupZonotope, Side};
use crate::se2::{adjoint_ad, exp_map, propagate, Se2Element, TangentVector};
use crate::zonotope::{hcat, reduce_generators};

/// How the measurement residual is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnovationMode {
    /// `z = y − x̂`.
    Standard,
    /// `z = first two rows of X̂⁻¹·[y; 1] − [0; 0; 1]`, i.e. `R(θ̂)ᵀ(y − x̂)`.
    #[default]
    Alternative,
}

impl std::fmt::Display for InnovationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InnovationMode::Standard => "standard",
            InnovationMode::Alternative => "alternative",
        })
    }
}

/// Vehicle model shared by both filters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    /// Sampling period in seconds.
    pub delta: f64,
    /// Process-noise shaping in the group model, `δ·I₃` for the vehicle.
    /// The Euclidean filter uses its own Jacobian instead.
    pub d_w: DMatrix<f64>,
    /// Process-noise generator, `w ∈ ⟨0, H_w⟩`.
    pub h_w: DMatrix<f64>,
    /// Measurement-noise shaping, `I₂` for position fixes.
    pub d_v: DMatrix<f64>,
    /// Measurement-noise generator, `v ∈ ⟨0, H_v⟩`.
    pub h_v: DMatrix<f64>,
    pub innovation: InnovationMode,
}

impl SystemModel {
    /// Planar vehicle with odometry noise `H_w` (3 rows) and position-fix
    /// noise `H_v` (2 rows).
    pub fn vehicle(delta: f64, h_w: DMatrix<f64>, h_v: DMatrix<f64>) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidConfig {
                field: "delta",
                reason: format!("sampling period must be positive, got {delta}"),
            });
        }
        if h_w.nrows() != 3 {
            return Err(Error::DimensionMismatch {
                op: "SystemModel::vehicle (h_w)",
                expected: 3,
                got: h_w.nrows(),
            });
        }
        if h_v.nrows() != 2 {
            return Err(Error::DimensionMismatch {
                op: "SystemModel::vehicle (h_v)",
                expected: 2,
                got: h_v.nrows(),
            });
        }
        Ok(Self {
            delta,
            d_w: DMatrix::identity(3, 3) * delta,
            h_w,
            d_v: DMatrix::identity(2, 2),
            h_v,
            innovation: InnovationMode::default(),
        })
    }

    pub fn with_innovation(mut self, mode: InnovationMode) -> Self {
        self.innovation = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InzsmfState {
    pub estimate: GroupZonotope,
    pub step: usize,
    pub reduction_threshold: usize,
}

impl InzsmfState {
    pub fn new(
        center: Se2Element,
        h0: DMatrix<f64>,
        side: Side,
        reduction_threshold: usize,
    ) -> Result<Self> {
        if reduction_threshold <= 3 {
            return Err(Error::InvalidReductionOrder {
                order: reduction_threshold,
                dim: 3,
            });
        }
        Ok(Self {
            estimate: GroupZonotope::new(center, h0, side)?,
            step: 0,
            reduction_threshold,
        })
    }

    pub fn center(&self) -> &Se2Element {
        &self.estimate.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.estimate.generators
    }
}

/// Linear error dynamics `ε⁺ = (A − L·C)·ε + D_w·w − L·M·v` at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDynamics {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// `D_w` acting on `H_w`.
    pub process_map: DMatrix<f64>,
    /// `M`, taking measurement noise into innovation coordinates.
    pub measurement_map: DMatrix<f64>,
}

/// `[[0,1,0],[0,0,1]]`: the innovation reads the translational error.
pub fn position_selector() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
}

fn to_dmatrix3(m: &Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(3, 3, m.as_slice())
}

fn to_dmatrix2(m: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 2, m.as_slice())
}

/// Adjoint of a group element acting on `[σ, u₁, u₂]`.
pub fn adjoint_matrix(g: &Se2Element) -> Matrix3<f64> {
    let r = g.rotation();
    Matrix3::new(
        1.0, 0.0, 0.0, //
        g.x[1], r[(0, 0)], r[(0, 1)], //
        -g.x[0], r[(1, 0)], r[(1, 1)],
    )
}

/// Propagation step: `f(X̂, u) = X̂·exp(δ·u)`.
pub fn predict(state: &InzsmfState, u: TangentVector, model: &SystemModel) -> Se2Element {
    propagate(state.center(), u, model.delta)
}

/// Innovation of a position fix `y` against the current centre.
pub fn innovation(center: &Se2Element, y: &Vector2<f64>, mode: InnovationMode) -> Vector2<f64> {
    let residual = y - center.x;
    match mode {
        InnovationMode::Standard => residual,
        InnovationMode::Alternative => center.rotation().transpose() * residual,
    }
}

/// Error dynamics of the vehicle filter around the estimate `center`.
///
/// Left: `A = I₃ − δ·ad_u`, `D_w = d_w`. Right (noise expressed in the body
/// frame, as in the vehicle simulation): `A = I₃`, `D_w = Ad_{X̂}·d_w`, and the
/// measurement Jacobian picks up the lever arm `[J·x̂ | I₂]`.
pub fn linearize(
    u: TangentVector,
    center: &Se2Element,
    side: Side,
    model: &SystemModel,
) -> ErrorDynamics {
    let rt = to_dmatrix2(&center.rotation().transpose());
    match side {
        Side::Left => {
            let a = to_dmatrix3(&(Matrix3::identity() - adjoint_ad(u) * model.delta));
            let selector = position_selector();
            let (c, measurement_map) = match model.innovation {
                InnovationMode::Alternative => (selector, &rt * &model.d_v),
                InnovationMode::Standard => {
                    let r = to_dmatrix2(&center.rotation());
                    (r * selector, model.d_v.clone())
                }
            };
            ErrorDynamics {
                a,
                c,
                process_map: model.d_w.clone(),
                measurement_map,
            }
        }
        Side::Right => {
            let ad = to_dmatrix3(&adjoint_matrix(center));
            let lever = DMatrix::from_row_slice(2, 3, &[
                -center.x[1], 1.0, 0.0, //
                center.x[0], 0.0, 1.0,
            ]);
            let (c, measurement_map) = match model.innovation {
                InnovationMode::Standard => (lever, model.d_v.clone()),
                InnovationMode::Alternative => (&rt * lever, &rt * &model.d_v),
            };
            ErrorDynamics {
                a: DMatrix::identity(3, 3),
                c,
                process_map: ad * &model.d_w,
                measurement_map,
            }
        }
    }
}

/// The invariant filter: system model, gain strategy, handedness, and the
/// cached pole-placement gain.
#[derive(Debug, Clone)]
pub struct InvariantFilter {
    pub model: SystemModel,
    pub strategy: GainStrategy,
    pub side: Side,
    placed: Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)>,
}

impl InvariantFilter {
    pub fn new(model: SystemModel, strategy: GainStrategy, side: Side) -> Self {
        Self {
            model,
            strategy,
            side,
            placed: None,
        }
    }

    pub fn initial_state(
        &self,
        center: Se2Element,
        h0: DMatrix<f64>,
        reduction_threshold: usize,
    ) -> Result<InzsmfState> {
        InzsmfState::new(center, h0, self.side, reduction_threshold)
    }

    /// Observer gain for the given error dynamics and reduced generator.
    pub fn gain(&mut self, dynamics: &ErrorDynamics, h_reduced: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match &self.strategy {
            GainStrategy::FRadiusOptimal => f_radius_optimal_gain(
                &dynamics.a,
                &dynamics.c,
                h_reduced,
                &dynamics.measurement_map,
                &self.model.h_v,
            ),
            GainStrategy::PoleConfiguration { poles } => {
                if let Some((a, c, l)) = &self.placed {
                    if *a == dynamics.a && *c == dynamics.c {
                        return Ok(l.clone());
                    }
                }
                let l = pole_placement_gain(&dynamics.a, &dynamics.c, poles)?;
                self.placed = Some((dynamics.a.clone(), dynamics.c.clone(), l.clone()));
                Ok(l)
            }
        }
    }

    /// One predict/correct cycle using the position fix `y` taken at the
    /// current step.
    pub fn update(
        &mut self,
        state: &InzsmfState,
        u: TangentVector,
        y: &Vector2<f64>,
    ) -> Result<InzsmfState> {
        if state.estimate.side != self.side {
            return Err(Error::InvalidConfig {
                field: "side",
                reason: "state and filter handedness differ".into(),
            });
        }
        let center = state.center();
        let h_reduced = reduce_generators(state.generators(), state.reduction_threshold)?;
        let dynamics = linearize(u, center, self.side, &self.model);
        let l = self.gain(&dynamics, &h_reduced)?;

        let z = innovation(center, y, self.model.innovation);
        let correction = &l * nalgebra::DVector::from_column_slice(z.as_slice());
        let correction = exp_map(TangentVector::from_vector(&Vector3::new(
            correction[0],
            correction[1],
            correction[2],
        )));
        let predicted = predict(state, u, &self.model);
        let next_center = match self.side {
            Side::Left => predicted.compose(&correction),
            Side::Right => correction.compose(&predicted),
        };

        let closed = &dynamics.a - &l * &dynamics.c;
        let generators = hcat(&[
            &(closed * h_reduced),
            &(&dynamics.process_map * &self.model.h_w),
            &-(&l * (&dynamics.measurement_map * &self.model.h_v)),
        ]);
        Ok(InzsmfState {
            estimate: GroupZonotope::new(next_center, generators, self.side)?,
            step: state.step + 1,
            reduction_threshold: state.reduction_threshold,
        })
    }
}
