//! Warm filter states for benchmarking single steps at steady-state
//! generator order.

use inzsmf_core::harness::{repetition_rng, simulate_truth, Trajectory};
use inzsmf_core::{
    EuclideanFilter, ExperimentConfig, InvariantFilter, InzsmfState, Se2Element, TangentVector, ZsmfState,
};
use nalgebra::{DMatrix, DVector, Vector2, Vector3};

pub struct Scenario {
    pub config: ExperimentConfig,
    pub trajectory: Trajectory,
    pub u: TangentVector,
}

impl Scenario {
    /// Simulates repetition 0 of `config`.
    pub fn new(config: ExperimentConfig) -> Self {
        let trajectory = simulate_truth(&config, &mut repetition_rng(config.seed, 0));
        let u = config.input();
        Self { config, trajectory, u }
    }

    /// The worst-case initial-error preset.
    pub fn worst_case(steps: usize) -> Self {
        Self::new(ExperimentConfig {
            steps,
            ..ExperimentConfig::preset("table1-row6").expect("built-in preset")
        })
    }

    fn h0(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(&self.config.h0))
    }

    /// Invariant filter after every measurement but the last, and that last
    /// measurement.
    pub fn warm_invariant(&self) -> (InvariantFilter, InzsmfState, Vector2<f64>) {
        let c = &self.config;
        let mut filter = InvariantFilter::new(c.model().unwrap(), c.strategy().unwrap(), c.side);
        let [t, x1, x2] = c.est_init;
        let mut state = filter
            .initial_state(Se2Element::new(t, x1, x2), self.h0(), c.reduction_order)
            .unwrap();
        let (last, warm) = self.trajectory.measurements.split_last().expect("at least one step");
        for y in warm {
            state = filter.update(&state, self.u, y).unwrap();
        }
        (filter, state, *last)
    }

    /// Euclidean counterpart of [`Scenario::warm_invariant`].
    pub fn warm_euclidean(&self) -> (EuclideanFilter, ZsmfState, Vector2<f64>) {
        let c = &self.config;
        let filter = EuclideanFilter::new(c.model().unwrap(), c.strategy().unwrap());
        let mut state = ZsmfState::new(Vector3::from(c.est_init), self.h0(), c.reduction_order).unwrap();
        let (last, warm) = self.trajectory.measurements.split_last().expect("at least one step");
        for y in warm {
            state = filter.update(&state, self.u, y).unwrap();
        }
        (filter, state, *last)
    }
}
