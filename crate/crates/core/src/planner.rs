//! Eigenbehaviours: value iteration in the intrinsic MDP that rewards
//! movement along an eigenpurpose, with an extra terminate action worth 0,
//! and the option built from the resulting Q-table.

use std::path::Path;


use crate::error::{PodError, Result};
use crate::features::{diff, FeatureCodec, FeatureVector};
use crate::purpose::Eigenpurpose;
use crate::ring::{PrimitiveAction, Ring, RingState};

/// Margin for the strict `q > 0` initiation test.
pub const DEFAULT_EPS_Q: f64 = 1e-9;

/// Primitive actions plus the terminate action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtendedAction {
    Primitive(PrimitiveAction),
    Terminate,
}

/// `eᵀ(phi_next - phi_prev)`.
pub fn intrinsic_reward(e: &[f64], phi_prev: &FeatureVector, phi_next: &FeatureVector) -> Result<f64> {
    diff(phi_next, phi_prev)?.dot(e)
}

/// Action values over every ground state. The terminate action is not stored:
/// its value is 0 everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    ring: Ring,
    values: Vec<[f64; 2]>,
}

impl QTable {
    pub fn zeros(ring: Ring) -> Self {
        QTable {
            ring,
            values: vec![[0.0; 2]; ring.len()],
        }
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn q(&self, s: RingState, a: ExtendedAction) -> f64 {
        match a {
            ExtendedAction::Terminate => 0.0,
            ExtendedAction::Primitive(p) => self.values[self.ring.index(s)][p.index()],
        }
    }

    /// `[q(s, Left), q(s, Right)]` by state index.
    pub fn row(&self, index: usize) -> [f64; 2] {
        self.values[index]
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.values
    }

    /// `max_a q(s, a)` over primitive actions only.
    pub fn best_primitive(&self, index: usize) -> f64 {
        let [l, r] = self.values[index];
        l.max(r)
    }

    /// `min_s max_a q(s, a)` over primitive actions. The termination set is
    /// nonempty iff this is at most the initiation margin.
    pub fn min_best_primitive(&self) -> f64 {
        (0..self.values.len())
            .map(|i| self.best_primitive(i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// One-step intrinsic rewards `r(s, a)` by state index, for a feature table
/// indexed the same way. Differences are taken before the dot product so any
/// constant offset in the features cancels exactly.
pub fn reward_table(ring: Ring, features: &[Vec<f64>], e: &[f64]) -> Result<Vec<[f64; 2]>> {
    if features.len() != ring.len() {
        return Err(PodError::contract(format!(
            "feature table has {} rows for a ring of {} states",
            features.len(),
            ring.len()
        )));
    }
    if let Some(bad) = features.iter().find(|f| f.len() != e.len()) {
        return Err(PodError::contract(format!(
            "dimension mismatch: direction has {}, features have {}",
            e.len(),
            bad.len()
        )));
    }
    let reward = |from: usize, to: usize| -> f64 {
        features[to]
            .iter()
            .zip(&features[from])
            .zip(e)
            .fold(0.0, |acc, ((n, p), w)| acc + (n - p) * w)
    };
    Ok((0..ring.len())
        .map(|i| {
            PrimitiveAction::ALL.map(|a| reward(i, ring.step_index(i, a)))
        })
        .collect())
}

fn check_planning_inputs(e: &[f64], gamma: f64, sweeps: usize) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(PodError::contract(format!("gamma must be in [0, 1), got {gamma}")));
    }
    if sweeps == 0 {
        return Err(PodError::contract("value iteration needs at least one sweep"));
    }
    if e.iter().any(|x| !x.is_finite()) {
        return Err(PodError::contract("eigenpurpose has non-finite components"));
    }
    Ok(())
}

/// Synchronous value iteration from `q = 0`, exactly `sweeps` sweeps:
/// `q(s,a) <- r(s,a) + gamma * max(0, max_a' q(s',a'))`.
pub fn value_iteration_with_rewards(
    ring: Ring,
    rewards: &[[f64; 2]],
    gamma: f64,
    sweeps: usize,
) -> Result<QTable> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(PodError::contract(format!("gamma must be in [0, 1), got {gamma}")));
    }
    if sweeps == 0 {
        return Err(PodError::contract("value iteration needs at least one sweep"));
    }
    if rewards.len() != ring.len() {
        return Err(PodError::contract("reward table does not cover the ring"));
    }
    let n = ring.len();
    let mut q = vec![[0.0f64; 2]; n];
    let mut v = vec![0.0f64; n];
    for _ in 0..sweeps {
        for (i, slot) in v.iter_mut().enumerate() {
            let [l, r] = q[i];
            // the terminate action contributes the 0
            *slot = l.max(r).max(0.0);
        }
        for (i, row) in q.iter_mut().enumerate() {
            let left = (i + n - 1) % n;
            let right = (i + 1) % n;
            row[0] = rewards[i][0] + gamma * v[left];
            row[1] = rewards[i][1] + gamma * v[right];
        }
    }
    Ok(QTable { ring, values: q })
}

/// Value iteration over an explicit real feature table.
pub fn value_iteration_with_features(
    ring: Ring,
    features: &[Vec<f64>],
    e: &[f64],
    gamma: f64,
    sweeps: usize,
) -> Result<QTable> {
    check_planning_inputs(e, gamma, sweeps)?;
    let rewards = reward_table(ring, features, e)?;
    value_iteration_with_rewards(ring, &rewards, gamma, sweeps)
}

/// Plans the eigenbehaviour for direction `e` over every ground state, with
/// rewards seen through `codec`.
pub fn value_iteration(codec: &FeatureCodec, e: &[f64], gamma: f64, sweeps: usize) -> Result<QTable> {
    value_iteration_with_features(codec.ring(), &codec.feature_table(), e, gamma, sweeps)
}

/// An option `<I, policy, S \ I>` together with the values it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveredOption {
    pub id: usize,
    pub purpose: Eigenpurpose,
    policy: Vec<PrimitiveAction>,
    initiation: Vec<bool>,
    initiation_size: usize,
    qtable: QTable,
}

impl DiscoveredOption {
    pub fn ring(&self) -> Ring {
        self.qtable.ring()
    }

    pub fn qtable(&self) -> &QTable {
        &self.qtable
    }

    pub fn can_initiate(&self, s: RingState) -> bool {
        self.initiation[self.ring().index(s)]
    }

    /// Termination indicator: 1 on the termination set, 0 elsewhere.
    pub fn beta(&self, s: RingState) -> f64 {
        if self.can_initiate(s) {
            0.0
        } else {
            1.0
        }
    }

    pub fn terminates_in(&self, s: RingState) -> bool {
        !self.can_initiate(s)
    }

    pub fn action(&self, s: RingState) -> PrimitiveAction {
        self.policy[self.ring().index(s)]
    }

    pub fn initiation_size(&self) -> usize {
        self.initiation_size
    }

    pub fn termination_size(&self) -> usize {
        self.initiation.len() - self.initiation_size
    }

    /// Never initiable; such options are not added to the option set.
    pub fn is_degenerate(&self) -> bool {
        self.initiation_size == 0
    }

    pub fn initiation_set(&self) -> impl Iterator<Item = RingState> + '_ {
        let ring = self.ring();
        self.initiation
            .iter()
            .enumerate()
            .filter(|(_, &inside)| inside)
            .map(move |(i, _)| ring.state_at(i))
    }

    pub fn termination_set(&self) -> impl Iterator<Item = RingState> + '_ {
        let ring = self.ring();
        self.initiation
            .iter()
            .enumerate()
            .filter(|(_, &inside)| !inside)
            .map(move |(i, _)| ring.state_at(i))
    }

    /// Per-option dump: `state, q_left, q_right, in_initiation_set`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| PodError::csv(path, e))?;
        w.write_record(["state", "q_left", "q_right", "in_initiation_set"])
            .map_err(|e| PodError::csv(path, e))?;
        let ring = self.ring();
        for (i, [l, r]) in self.qtable.rows().iter().enumerate() {
            w.write_record([
                ring.state_at(i).to_string(),
                format!("{l:.12}"),
                format!("{r:.12}"),
                u8::from(self.initiation[i]).to_string(),
            ])
            .map_err(|e| PodError::csv(path, e))?;
        }
        w.flush().map_err(|e| PodError::io(path, e))
    }
}

/// Initiation set `{s : max_a q(s,a) > eps_q}`, greedy policy with ties
/// going to `Left`, termination set the complement.
pub fn build_option(q: QTable, purpose: Eigenpurpose, eps_q: f64, id: usize) -> DiscoveredOption {
    let mut initiation = Vec::with_capacity(q.values.len());
    let mut policy = Vec::with_capacity(q.values.len());
    for &[l, r] in &q.values {
        initiation.push(l.max(r) > eps_q);
        policy.push(if l >= r {
            PrimitiveAction::Left
        } else {
            PrimitiveAction::Right
        });
    }
    let initiation_size = initiation.iter().filter(|&&b| b).count();
    DiscoveredOption {
        id,
        purpose,
        policy,
        initiation,
        initiation_size,
        qtable: q,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ObservabilityMode;
    use crate::purpose::Sign;

    fn purpose(direction: Vec<f64>) -> Eigenpurpose {
        Eigenpurpose {
            direction,
            singular_value: 2.0,
            sign: Sign::Plus,
            source_phase: 0,
        }
    }

    fn unit(dim: usize, k: usize) -> Vec<f64> {
        (0..dim).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn reward_examples() {
        let a = FeatureVector::from_bit_str("000000000000").unwrap();
        let b = FeatureVector::from_bit_str("000000000001").unwrap();
        assert_eq!(intrinsic_reward(&unit(12, 11), &a, &b).unwrap(), 1.0);
        assert_eq!(intrinsic_reward(&unit(12, 11), &b, &b).unwrap(), 0.0);
        let p = FeatureVector::from_bit_str("01").unwrap();
        let n = FeatureVector::from_bit_str("10").unwrap();
        assert!((intrinsic_reward(&[0.6, 0.8], &p, &n).unwrap() + 0.2).abs() < 1e-15);
        assert!(intrinsic_reward(&[1.0], &p, &n).is_err());
    }

    #[test]
    fn zero_discount_is_one_step_reward() {
        let codec = FeatureCodec::new(Ring::new(12).unwrap(), ObservabilityMode::Full).unwrap();
        let ring = codec.ring();
        let e: Vec<f64> = (0..12).map(|k| ((k as f64) * 0.37).sin()).collect();
        let q = value_iteration(&codec, &e, 0.0, 5).unwrap();
        for s in ring.states() {
            for a in PrimitiveAction::ALL {
                let r = codec.transition(s, ring.step(s, a)).dot(&e).unwrap();
                assert_eq!(q.q(s, ExtendedAction::Primitive(a)), r);
            }
            assert_eq!(q.q(s, ExtendedAction::Terminate), 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let codec = FeatureCodec::new(Ring::new(4).unwrap(), ObservabilityMode::Full).unwrap();
        let e = unit(4, 0);
        assert!(value_iteration(&codec, &e, 1.0, 10).is_err());
        assert!(value_iteration(&codec, &e, -0.1, 10).is_err());
        assert!(value_iteration(&codec, &e, 0.5, 0).is_err());
        assert!(value_iteration(&codec, &unit(3, 0), 0.5, 1).is_err());
    }

    #[test]
    fn all_zero_values_give_degenerate_option() {
        let ring = Ring::new(5).unwrap();
        let opt = build_option(QTable::zeros(ring), purpose(vec![1.0]), DEFAULT_EPS_Q, 0);
        assert!(opt.is_degenerate());
        assert_eq!(opt.termination_size(), ring.len());
        assert!(ring.states().all(|s| opt.beta(s) == 1.0));
        // ties go left
        assert!(ring.states().all(|s| opt.action(s) == PrimitiveAction::Left));
    }

    #[test]
    fn lowest_bit_option_with_zero_discount() {
        let codec = FeatureCodec::new(Ring::new(12).unwrap(), ObservabilityMode::Full).unwrap();
        let ring = codec.ring();
        let e = unit(12, 11);
        let q = value_iteration(&codec, &e, 0.0, 100).unwrap();
        let opt = build_option(q, purpose(e.clone()), DEFAULT_EPS_Q, 0);

        // Exhaustive one-step check: can some move set bit 0?
        for s in ring.states() {
            let can_set = PrimitiveAction::ALL
                .iter()
                .any(|&a| codec.transition(s, ring.step(s, a)).dot(&e).unwrap() > 0.0);
            assert_eq!(opt.can_initiate(s), can_set);
            assert_eq!(opt.can_initiate(s), s.position().rem_euclid(2) == 0);
        }
        assert_eq!(opt.initiation_size(), 2048);
        assert_eq!(opt.termination_size(), 2048);
    }

    #[test]
    fn partition_and_greedy_policy() {
        let codec = FeatureCodec::new(Ring::new(8).unwrap(), ObservabilityMode::Full).unwrap();
        let e: Vec<f64> = vec![0.1, -0.4, 0.3, 0.5, -0.2, 0.6, 0.1, -0.25];
        let q = value_iteration(&codec, &e, 0.99, 100).unwrap();
        let opt = build_option(q.clone(), purpose(e), DEFAULT_EPS_Q, 7);
        let ring = codec.ring();
        let inside: Vec<_> = opt.initiation_set().collect();
        let outside: Vec<_> = opt.termination_set().collect();
        assert_eq!(inside.len() + outside.len(), ring.len());
        assert!(!outside.is_empty());
        for s in inside {
            let i = ring.index(s);
            assert!(q.best_primitive(i) > DEFAULT_EPS_Q);
            let [l, r] = q.row(i);
            let want = if l >= r { PrimitiveAction::Left } else { PrimitiveAction::Right };
            assert_eq!(opt.action(s), want);
        }
        assert!(q.min_best_primitive() <= DEFAULT_EPS_Q);
    }

    #[test]
    fn dyadic_feature_shift_is_bit_identical() {
        let codec = FeatureCodec::new(Ring::new(10).unwrap(), ObservabilityMode::Full).unwrap();
        let ring = codec.ring();
        let base = codec.feature_table();
        let e: Vec<f64> = (0..10).map(|k| ((k as f64) * 1.3 + 0.2).cos()).collect();
        let q0 = value_iteration_with_features(ring, &base, &e, 0.99, 100).unwrap();
        for offset in [3.0, -2.25, 0.5] {
            let shift: Vec<f64> = (0..10).map(|k| offset * (k as f64 + 1.0)).collect();
            let shifted: Vec<Vec<f64>> = base
                .iter()
                .map(|f| f.iter().zip(&shift).map(|(x, c)| x + c).collect())
                .collect();
            let q1 = value_iteration_with_features(ring, &shifted, &e, 0.99, 100).unwrap();
            assert_eq!(q0, q1);
        }
    }

    #[test]
    fn opposite_purpose_mirrors_under_complement() {
        // Bitwise complement p -> -p-1 swaps Left and Right and flips every
        // feature, so the -e behaviour is the mirror image of the +e one.
        let codec = FeatureCodec::new(Ring::new(7).unwrap(), ObservabilityMode::Full).unwrap();
        let ring = codec.ring();
        let e: Vec<f64> = vec![0.2, 0.5, -0.3, 0.7, 0.1, -0.2, 0.25];
        let neg: Vec<f64> = e.iter().map(|x| -x).collect();
        let plus = value_iteration(&codec, &e, 0.99, 100).unwrap();
        let minus = value_iteration(&codec, &neg, 0.99, 100).unwrap();
        let op = build_option(plus.clone(), purpose(e), DEFAULT_EPS_Q, 0);
        let om = build_option(minus.clone(), purpose(neg), DEFAULT_EPS_Q, 1);
        for s in ring.states() {
            let m = RingState(-s.position() - 1);
            for a in PrimitiveAction::ALL {
                assert_eq!(
                    plus.q(s, ExtendedAction::Primitive(a)),
                    minus.q(m, ExtendedAction::Primitive(a.reversed()))
                );
            }
            assert_eq!(op.can_initiate(s), om.can_initiate(m));
        }
    }

    #[test]
    fn terminate_value_stays_zero() {
        let codec = FeatureCodec::new(Ring::new(6).unwrap(), ObservabilityMode::Full).unwrap();
        let e = unit(6, 0);
        for sweeps in [1, 2, 10, 100] {
            let q = value_iteration(&codec, &e, 0.9, sweeps).unwrap();
            assert!(codec.ring().states().all(|s| q.q(s, ExtendedAction::Terminate) == 0.0));
            assert!(q.rows().iter().flatten().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn option_csv_dump() {
        let codec = FeatureCodec::new(Ring::new(3).unwrap(), ObservabilityMode::Full).unwrap();
        let e = unit(3, 0);
        let q = value_iteration(&codec, &e, 0.5, 10).unwrap();
        let opt = build_option(q, purpose(e), DEFAULT_EPS_Q, 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("option_0.csv");
        opt.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("state,q_left,q_right,in_initiation_set\n0,"));
    }
}
