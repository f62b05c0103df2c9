//! Observer gain design for the linear error dynamics
//! `ε⁺ = (A − L·C)·ε + D_w·w − L·D_v·v`.
//!
//! Two strategies are provided: exact pole placement, with the remaining
//! multi-output freedom spent on minimizing `‖L‖_F`, and the gain that
//! minimizes the F-radius of the next error zonotope.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Eigenvalues closer than this (relative) are treated as equal when
/// validating conjugate symmetry or detecting an already-placed spectrum.
const POLE_MATCH_TOL: f64 = 1e-10;
/// Accepted eigenvalue error after placement.
pub const PLACEMENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum GainStrategy {
    PoleConfiguration { poles: Vec<Complex64> },
    FRadiusOptimal,
}

impl GainStrategy {
    /// Pole configuration from real poles, each of modulus < 1.
    pub fn real_poles(poles: &[f64]) -> Result<Self> {
        Self::poles(poles.iter().map(|p| Complex64::new(*p, 0.0)).collect())
    }

    pub fn poles(poles: Vec<Complex64>) -> Result<Self> {
        if let Some(p) = poles.iter().find(|p| !(p.norm() < 1.0)) {
            return Err(Error::UnstablePole(p.to_string()));
        }
        Ok(GainStrategy::PoleConfiguration { poles })
    }

    pub fn label(&self) -> &'static str {
        match self {
            GainStrategy::PoleConfiguration { .. } => "poles",
            GainStrategy::FRadiusOptimal => "fradius",
        }
    }
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|e| e.norm()).fold(0.0, f64::max)
}

/// Largest distance between two eigenvalue multisets under a greedy
/// nearest-neighbour pairing. Returns infinity on a length mismatch.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pool: Vec<Complex64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for x in a {
        let (idx, dist) = pool
            .iter()
            .enumerate()
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("pool has remaining entries");
        worst = worst.max(dist);
        pool.swap_remove(idx);
    }
    worst
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let tol = max * (m.nrows().max(m.ncols()) as f64) * 1e-12;
    sv.iter().filter(|s| **s > tol).count()
}

/// Rank of `[C; CA; …; CA^{n-1}]`.
pub fn observability_rank(a: &DMatrix<f64>, c: &DMatrix<f64>) -> usize {
    let n = a.nrows();
    let q = c.nrows();
    let mut obs = DMatrix::zeros(n * q, n);
    let mut block = c.clone();
    for k in 0..n {
        obs.view_mut((k * q, 0), (q, n)).copy_from(&block);
        block = &block * a;
    }
    numerical_rank(&obs)
}

/// One column group of the eigenvector matrix: a real pole, or a complex
/// pole together with its conjugate.
struct Slot {
    basis: DMatrix<Complex64>,
    pair: bool,
}

impl Slot {
    fn param_count(&self, q: usize) -> usize {
        if self.pair {
            2 * q
        } else {
            q
        }
    }
}

/// Null space of `[Aᵀ − λI, −Cᵀ]`, as an `(n+q) × q` basis.
fn null_basis(at: &DMatrix<f64>, ct: &DMatrix<f64>, lambda: Complex64) -> DMatrix<Complex64> {
    let n = at.nrows();
    let q = ct.ncols();
    let dim = n + q;
    if lambda.im == 0.0 {
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        m.view_mut((0, 0), (n, n)).copy_from(at);
        for i in 0..n {
            m[(i, i)] -= lambda.re;
        }
        m.view_mut((0, n), (n, q)).copy_from(&(-ct));
        let svd = m.svd(false, true);
        let vt = svd.v_t.expect("requested v_t");
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        DMatrix::from_fn(dim, q, |r, k| Complex64::new(vt[(order[k], r)], 0.0))
    } else {
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex64::new(at[(i, j)], 0.0);
            }
            m[(i, i)] -= lambda;
            for j in 0..q {
                m[(i, n + j)] = Complex64::new(-ct[(i, j)], 0.0);
            }
        }
        let svd = m.svd(false, true);
        let vt = svd.v_t.expect("requested v_t");
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        DMatrix::from_fn(dim, q, |r, k| vt[(order[k], r)].conj())
    }
}

struct Placement {
    slots: Vec<Slot>,
    n: usize,
    q: usize,
}

impl Placement {
    fn param_count(&self) -> usize {
        self.slots.iter().map(|s| s.param_count(self.q)).sum()
    }

    /// Observer gain `L` (n × q) for one choice of eigenvector parameters.
    fn gain(&self, params: &[f64]) -> Option<DMatrix<f64>> {
        let (n, q) = (self.n, self.q);
        let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(n);
        let mut at = 0;
        for slot in &self.slots {
            let g = if slot.pair {
                DVector::from_fn(q, |i, _| Complex64::new(params[at + i], params[at + q + i]))
            } else {
                DVector::from_fn(q, |i, _| Complex64::new(params[at + i], 0.0))
            };
            at += slot.param_count(q);
            let w = &slot.basis * g;
            if slot.pair {
                cols.push(w.map(|c| c.conj()));
            }
            cols.push(w);
        }
        let stacked = DMatrix::from_columns(&cols);
        let v = stacked.rows(0, n).into_owned();
        let f = stacked.rows(n, q).into_owned();
        // K·V = F  ⇔  Vᵀ·Kᵀ = Fᵀ, and L = Kᵀ.
        let lu = v.transpose().lu();
        if lu.determinant().norm() < 1e-300 {
            return None;
        }
        let kt = lu.solve(&f.transpose())?;
        if kt.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return None;
        }
        Some(kt.map(|c| c.re))
    }
}

impl CostFunction for &Placement {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.gain(p).map_or(1e300, |l| l.norm_squared()))
    }
}

fn validate_poles(poles: &[Complex64], n: usize, q: usize) -> Result<()> {
    if poles.len() != n {
        return Err(Error::PoleCount {
            expected: n,
            got: poles.len(),
        });
    }
    if let Some(p) = poles.iter().find(|p| !(p.norm() < 1.0)) {
        return Err(Error::UnstablePole(p.to_string()));
    }
    let mut unmatched: Vec<Complex64> = poles.iter().filter(|p| p.im != 0.0).copied().collect();
    while let Some(p) = unmatched.pop() {
        let tol = POLE_MATCH_TOL * p.norm().max(1.0);
        match unmatched.iter().position(|c| (c - p.conj()).norm() <= tol) {
            Some(i) => {
                unmatched.swap_remove(i);
            }
            None => return Err(Error::PolesNotConjugate),
        }
    }
    for p in poles {
        let multiplicity = poles.iter().filter(|c| (*c - p).norm() <= POLE_MATCH_TOL).count();
        if multiplicity > q {
            return Err(Error::PlacementFailed(format!(
                "pole {p} repeated {multiplicity} times but only {q} outputs are available"
            )));
        }
    }
    Ok(())
}

/// Observer gain `L` with `eig(A − L·C)` equal to `poles`.
///
/// Works on the dual pair `(Aᵀ, Cᵀ)` by eigenstructure assignment: each
/// closed-loop eigenvector is drawn from the null space of
/// `[Aᵀ − λI, −Cᵀ]`. With more than one output the choice is not unique, and
/// the eigenvector parameters are searched (Nelder–Mead, fixed multistart)
/// for the smallest `‖L‖_F`. If `A` already has the requested spectrum, `L = 0`.
pub fn pole_placement_gain(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    poles: &[Complex64],
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let q = c.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            op: "pole_placement_gain",
            expected: n,
            got: a.ncols(),
        });
    }
    if c.ncols() != n {
        return Err(Error::DimensionMismatch {
            op: "pole_placement_gain",
            expected: n,
            got: c.ncols(),
        });
    }
    validate_poles(poles, n, q)?;
    let rank = observability_rank(a, c);
    if rank < n {
        return Err(Error::Unobservable { rank, n });
    }
    if spectrum_distance(&eigenvalues(a), poles) <= POLE_MATCH_TOL {
        return Ok(DMatrix::zeros(n, q));
    }

    let at = a.transpose();
    let ct = c.transpose();
    let slots: Vec<Slot> = poles
        .iter()
        .filter(|p| p.im >= 0.0)
        .map(|p| {
            let pair = p.im > 0.0;
            let lambda = if pair { *p } else { Complex64::new(p.re, 0.0) };
            Slot {
                basis: null_basis(&at, &ct, lambda),
                pair,
            }
        })
        .collect();
    let problem = Placement { slots, n, q };
    let dim = problem.param_count();

    // Deterministic starts: cyclic unit selections (distinct vectors for
    // repeated poles) plus a few seeded random draws.
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for shift in 0..q.min(2) {
        let mut p = vec![0.0; dim];
        let mut at = 0;
        for (k, slot) in problem.slots.iter().enumerate() {
            p[at + (k + shift) % q] = 1.0;
            if slot.pair {
                p[at + q + (k + shift + 1) % q] = 0.5;
            }
            at += slot.param_count(q);
        }
        starts.push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..2 {
        starts.push((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
    }

    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    if q == 1 {
        candidates.extend(starts.into_iter().map(|p| ((&problem).cost(&p).unwrap_or(1e300), p)));
    } else {
        for start in starts {
            let mut best = start;
            for _ in 0..2 {
                let (cost, p) = minimize(&problem, best.clone())?;
                best = p;
                candidates.push((cost, best.clone()));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));

    for (_, params) in &candidates {
        let Some(l) = problem.gain(params) else {
            continue;
        };
        let closed = a - &l * c;
        if spectrum_distance(&eigenvalues(&closed), poles) <= PLACEMENT_TOL {
            return Ok(l);
        }
    }
    Err(Error::PlacementFailed(
        "no eigenvector selection reproduced the requested spectrum".into(),
    ))
}

fn minimize(problem: &Placement, start: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    let dim = start.len();
    let mut simplex = vec![start.clone()];
    for i in 0..dim {
        let mut v = start.clone();
        v[i] += 0.5;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-13)
        .map_err(|e| Error::PlacementFailed(e.to_string()))?;
    let res = Executor::new(problem, solver)
        .configure(|s| s.max_iters(150 * dim as u64))
        .run()
        .map_err(|e| Error::PlacementFailed(e.to_string()))?;
    let state = res.state();
    let best = state
        .get_best_param()
        .cloned()
        .unwrap_or_else(|| start.clone());
    Ok((state.get_best_cost(), best))
}

/// `D·H·Hᵀ·Dᵀ`.
pub fn noise_covariance(d: &DMatrix<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    let dh = d * h;
    &dh * dh.transpose()
}

/// The gain minimizing `tr(H⁺·H⁺ᵀ)`: `L* = A·P̄·Cᵀ·S⁻¹` with
/// `P̄ = H̄·H̄ᵀ` and `S = C·P̄·Cᵀ + D_v·H_v·H_vᵀ·D_vᵀ`.
pub fn f_radius_optimal_gain(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    h_reduced: &DMatrix<f64>,
    d_v: &DMatrix<f64>,
    h_v: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p_bar = h_reduced * h_reduced.transpose();
    let pct = &p_bar * c.transpose();
    let s = c * &pct + noise_covariance(d_v, h_v);
    let chol = s.cholesky().ok_or(Error::SingularInnovation)?;
    // L·S = A·P̄·Cᵀ with S symmetric.
    let apct = a * pct;
    Ok(chol.solve(&apct.transpose()).transpose())
}

/// `J(L) = tr((A − LC)·P̄·(A − LC)ᵀ + Q_w + L·Q_v·Lᵀ)`, the squared F-radius
/// of the next error zonotope.
pub fn f_radius_cost(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    l: &DMatrix<f64>,
    h_reduced: &DMatrix<f64>,
    q_w: &DMatrix<f64>,
    q_v: &DMatrix<f64>,
) -> f64 {
    let closed = a - l * c;
    let p_bar = h_reduced * h_reduced.transpose();
    (&closed * p_bar * closed.transpose()).trace() + q_w.trace() + (l * q_v * l.transpose()).trace()
}

/// `∂J/∂L = −2·A·P̄·Cᵀ + 2·L·(C·P̄·Cᵀ + Q_v)`.
pub fn f_radius_gradient(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    l: &DMatrix<f64>,
    h_reduced: &DMatrix<f64>,
    q_v: &DMatrix<f64>,
) -> DMatrix<f64> {
    let p_bar = h_reduced * h_reduced.transpose();
    let pct = &p_bar * c.transpose();
    (a * &pct) * -2.0 + l * (c * &pct + q_v) * 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn se2_system() -> (DMatrix<f64>, DMatrix<f64>) {
        // I − 0.01·ad(0.4, 8, 0) and the position selector.
        let a = DMatrix::from_row_slice(3, 3, &[
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.004, //
            0.08, -0.004, 1.0,
        ]);
        let c = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        (a, c)
    }

    fn reals(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|x| Complex64::new(*x, 0.0)).collect()
    }

    #[test]
    fn already_placed_gives_zero_gain() {
        let a = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.95, 0.98, 0.5]));
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let l = pole_placement_gain(&a, &c, &reals(&[0.5, 0.95, 0.98])).unwrap();
        assert_eq!(l, DMatrix::zeros(3, 1));
    }

    #[test]
    fn se2_poles_are_placed() {
        let (a, c) = se2_system();
        let poles = reals(&[0.95, 0.98, 0.98]);
        let l = pole_placement_gain(&a, &c, &poles).unwrap();
        let eig = eigenvalues(&(&a - &l * &c));
        assert!(spectrum_distance(&eig, &poles) < 1e-8, "{eig:?}");
    }

    #[test]
    fn complex_pair_is_placed() {
        let (a, c) = se2_system();
        let poles = vec![
            Complex64::new(0.9, 0.1),
            Complex64::new(0.9, -0.1),
            Complex64::new(0.5, 0.0),
        ];
        let l = pole_placement_gain(&a, &c, &poles).unwrap();
        assert!(spectrum_distance(&eigenvalues(&(&a - &l * &c)), &poles) < 1e-8);
    }

    #[test]
    fn placement_errors() {
        let (a, c) = se2_system();
        assert!(matches!(
            pole_placement_gain(&a, &c, &[Complex64::new(0.9, 0.1), Complex64::new(0.9, 0.1), Complex64::new(0.5, 0.0)]),
            Err(Error::PolesNotConjugate)
        ));
        assert!(matches!(
            pole_placement_gain(&a, &c, &reals(&[0.5, 1.2, 0.3])),
            Err(Error::UnstablePole(_))
        ));
        assert!(matches!(
            pole_placement_gain(&a, &c, &reals(&[0.5, 0.3])),
            Err(Error::PoleCount { .. })
        ));
        // Heading is invisible without the translational coupling.
        let decoupled = DMatrix::identity(3, 3);
        assert!(matches!(
            pole_placement_gain(&decoupled, &c, &reals(&[0.5, 0.6, 0.7])),
            Err(Error::Unobservable { rank: 2, n: 3 })
        ));
    }

    #[test]
    fn f_radius_zero_prior_gives_zero_gain() {
        let (a, c) = se2_system();
        let l = f_radius_optimal_gain(
            &a,
            &c,
            &DMatrix::zeros(3, 3),
            &DMatrix::identity(2, 2),
            &DMatrix::identity(2, 2),
        )
        .unwrap();
        assert_eq!(l, DMatrix::zeros(3, 2));
    }

    #[test]
    fn f_radius_singular_innovation() {
        let (a, c) = se2_system();
        let err = f_radius_optimal_gain(
            &a,
            &c,
            &DMatrix::zeros(3, 3),
            &DMatrix::identity(2, 2),
            &DMatrix::zeros(2, 2),
        );
        assert_eq!(err, Err(Error::SingularInnovation));
    }

    #[test]
    fn spectral_radius_examples() {
        assert_relative_eq!(spectral_radius(&DMatrix::identity(3, 3)), 1.0, epsilon = 1e-14);
        let d = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.95, 0.98, 0.98]));
        assert_relative_eq!(spectral_radius(&d), 0.98, epsilon = 1e-14);
        // Companion matrix of (s − 0.5)(s + 0.3)(s − 0.9) = s³ − 1.1s² + 0.03s + 0.135.
        let comp = DMatrix::from_row_slice(3, 3, &[
            1.1, -0.03, -0.135, //
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0,
        ]);
        assert_relative_eq!(spectral_radius(&comp), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn strategy_rejects_unstable_poles() {
        assert!(GainStrategy::real_poles(&[0.95, 0.98, 0.98]).is_ok());
        assert!(GainStrategy::real_poles(&[0.95, 1.0, 0.98]).is_err());
    }
}
