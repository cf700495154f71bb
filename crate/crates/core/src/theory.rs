//! Numerical checks of the termination guarantee and the norm bounds it
//! rests on, over random instances.
//!
//! Every check reports its *slack*: the bound minus the observed quantity.
//! A check passes when the slack is at least `-TOLERANCE`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::Serialize;

use crate::error::{PodError, Result};

/// Allowed violation for the norm bounds.
pub const TOLERANCE: f64 = 1e-8;
/// Allowed violation for the shift identity.
pub const SHIFT_TOLERANCE: f64 = 1e-10;
/// Row-sum tolerance for stochastic matrices.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Square, entrywise nonnegative, rows summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(PodError::contract("stochastic matrix must be square and nonempty"));
        }
        for (i, row) in m.row_iter().enumerate() {
            if row.iter().any(|&x| !(x >= 0.0)) {
                return Err(PodError::contract(format!("row {i} has a negative or NaN entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(PodError::contract(format!("row {i} sums to {sum}")));
            }
        }
        Ok(StochasticMatrix(m))
    }

    /// Uniform nonnegative entries, rows normalized.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
        for mut row in m.row_iter_mut() {
            let s: f64 = row.iter().sum();
            row /= s;
        }
        StochasticMatrix(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }
}

/// Induced infinity norm: largest absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn invert(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let lu = m.lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| PodError::NumericalFailure(format!("{n}x{n} matrix is singular")))?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(PodError::NumericalFailure("inverse has non-finite entries".into()));
    }
    Ok(inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    /// Bound minus observed value; negative means violated.
    pub slack: f64,
}

impl CheckOutcome {
    fn from_slack(slack: f64, tolerance: f64) -> Self {
        CheckOutcome {
            passed: slack >= -tolerance,
            slack,
        }
    }
}

/// `‖(I + A)⁻¹‖∞ ≤ 1 / (1 - ‖A‖∞)` for `‖A‖∞ < 1`.
pub fn check_lemma_inverse_bound(a: &DMatrix<f64>) -> Result<CheckOutcome> {
    if !a.is_square() {
        return Err(PodError::contract("matrix must be square"));
    }
    let norm_a = inf_norm(a);
    if !(norm_a < 1.0) {
        return Err(PodError::contract(format!("requires ‖A‖∞ < 1, got {norm_a}")));
    }
    let n = a.nrows();
    let inv = invert(DMatrix::identity(n, n) + a)?;
    let bound = 1.0 / (1.0 - norm_a);
    Ok(CheckOutcome::from_slack(bound - inf_norm(&inv), TOLERANCE))
}

/// `‖(I - γT)⁻¹ T‖∞ ≤ 1 / (1 - γ)`.
pub fn check_lemma_resolvent_bound(t: &StochasticMatrix, gamma: f64) -> Result<CheckOutcome> {
    check_gamma(gamma)?;
    let n = t.n();
    let resolvent = invert(DMatrix::identity(n, n) - t.matrix() * gamma)?;
    let observed = inf_norm(&(resolvent * t.matrix()));
    Ok(CheckOutcome::from_slack(1.0 / (1.0 - gamma) - observed, TOLERANCE))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueBoundOutcome {
    pub passed: bool,
    /// `‖w‖∞ - ‖v + w‖∞`.
    pub norm_slack: f64,
    /// `-v[argmax w]`.
    pub argmax_slack: f64,
    pub values: DVector<f64>,
}

impl ValueBoundOutcome {
    pub fn slack(&self) -> f64 {
        self.norm_slack.min(self.argmax_slack)
    }
}

/// Solves `v = (I - γT)⁻¹(Tw - w)` after shifting `w` to be nonnegative and
/// checks `‖v + w‖∞ ≤ ‖w‖∞` and `v[argmax w] ≤ 0`.
pub fn check_theorem_value_bound(
    t: &StochasticMatrix,
    w: &DVector<f64>,
    gamma: f64,
) -> Result<ValueBoundOutcome> {
    check_gamma(gamma)?;
    if w.len() != t.n() {
        return Err(PodError::contract("potential length does not match matrix"));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(PodError::contract("potential must be finite"));
    }
    let n = t.n();
    let min = w.min();
    let w = w.map(|x| x - min);
    let reward = t.matrix() * &w - &w;
    let v = (DMatrix::identity(n, n) - t.matrix() * gamma)
        .lu()
        .solve(&reward)
        .ok_or_else(|| PodError::NumericalFailure("I - γT is singular".into()))?;

    let w_norm = w.amax();
    let norm_slack = w_norm - (&v + &w).amax();
    let star = w.imax();
    let argmax_slack = -v[star];
    Ok(ValueBoundOutcome {
        passed: norm_slack >= -TOLERANCE && argmax_slack >= -TOLERANCE,
        norm_slack,
        argmax_slack,
        values: v,
    })
}

/// `Tw - w = T(w + δ) - (w + δ)` componentwise.
pub fn check_shift_invariance(t: &StochasticMatrix, w: &DVector<f64>, delta: f64) -> Result<CheckOutcome> {
    if w.len() != t.n() {
        return Err(PodError::contract("potential length does not match matrix"));
    }
    let lhs = t.matrix() * w - w;
    let shifted = w.add_scalar(delta);
    let rhs = t.matrix() * &shifted - &shifted;
    let worst = (lhs - rhs).amax();
    Ok(CheckOutcome::from_slack(-worst, SHIFT_TOLERANCE))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(PodError::contract(format!("gamma must be in [0, 1), got {gamma}")))
    }
}

/// Discounts cycled through by the random suites.
pub const SUITE_GAMMAS: [f64; 3] = [0.5, 0.9, 0.99];
/// Largest matrix dimension drawn.
pub const SUITE_MAX_N: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    /// Smallest slack over all instances.
    pub worst_slack: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.instances > 0
    }

    fn new(name: &'static str) -> Self {
        SuiteResult {
            name,
            instances: 0,
            failures: 0,
            worst_slack: f64::INFINITY,
        }
    }

    fn add(&mut self, passed: bool, slack: f64) {
        self.instances += 1;
        if !passed {
            self.failures += 1;
        }
        self.worst_slack = self.worst_slack.min(slack);
    }
}

fn random_inverse_instance<R: Rng + ?Sized>(rng: &mut R) -> DMatrix<f64> {
    let n = rng.random_range(1..=SUITE_MAX_N);
    let target = rng.random_range(0.0..=0.9);
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let norm = inf_norm(&a);
    if norm > 0.0 {
        a *= target / norm;
    }
    a
}

fn random_potential<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-10.0..10.0))
}

/// Runs all four checks on `instances` random draws each, from one seeded
/// generator per check.
pub fn run_suite(instances: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    let mut out = Vec::with_capacity(4);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = SuiteResult::new("lemma_inverse_bound");
    for _ in 0..instances {
        let c = check_lemma_inverse_bound(&random_inverse_instance(&mut rng))?;
        r.add(c.passed, c.slack);
    }
    out.push(r);

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut r = SuiteResult::new("lemma_resolvent_bound");
    for i in 0..instances {
        let n = rng.random_range(1..=SUITE_MAX_N);
        let t = StochasticMatrix::random(n, &mut rng);
        let c = check_lemma_resolvent_bound(&t, SUITE_GAMMAS[i % SUITE_GAMMAS.len()])?;
        r.add(c.passed, c.slack);
    }
    out.push(r);

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut r = SuiteResult::new("theorem_value_bound");
    for i in 0..instances {
        let n = rng.random_range(1..=SUITE_MAX_N);
        let t = StochasticMatrix::random(n, &mut rng);
        let w = random_potential(n, &mut rng);
        let c = check_theorem_value_bound(&t, &w, SUITE_GAMMAS[i % SUITE_GAMMAS.len()])?;
        r.add(c.passed, c.slack());
    }
    out.push(r);

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let mut r = SuiteResult::new("shift_invariance");
    for _ in 0..instances {
        let n = rng.random_range(1..=SUITE_MAX_N);
        let t = StochasticMatrix::random(n, &mut rng);
        let w = random_potential(n, &mut rng);
        let delta = rng.random_range(-100.0..100.0);
        let c = check_shift_invariance(&t, &w, delta)?;
        r.add(c.passed, c.slack);
    }
    out.push(r);

    Ok(out)
}
