//! Multi-block planning with energy carried between blocks.
//!
//! Block `i` has its own overhead `g_i`. A transfer `T_i` moves harvested
//! energy from block `i` to later blocks: block `i` then behaves like a single
//! block with overhead `g_i + T_i`. Transfers must never borrow from the
//! future (prefix sums of `T` nonnegative) and a block cannot give away more
//! than its decoding budget.
//!
//! Dropping the coupling constraint gives an upper bound: every block runs the
//! single pair `(theta_dot, e_dot)` that maximizes decoded bits per unit of
//! budget. The bound is attained exactly when every suffix of blocks has, on
//! average, an overhead of at least `g_dot`, the smallest overhead at which
//! that pair stays feasible. Otherwise the iterative solver alternates
//! per-block solves with a transfer LP and converges to a local optimum.

use rayon::prelude::*;

use crate::decoder_energy::{DecoderEnergy, DecoderEnergyModel};
use crate::error::{Error, Result};
use crate::lp::LinearProgram;
use crate::params::SystemParams;
use crate::single_block::{self, algorithm1_with, best_efficiency, CaseLabel, FullSolution, Stationary};

const SCHEDULE_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200;
const IMPROVEMENT_TOL: f64 = 1e-9;
const BOUND_TOL: f64 = 1e-8;
const FACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiBlockProblem<M = DecoderEnergyModel> {
    /// Shared `eta`, `e_avg`, `e_lim` and `n`; `params.g` is unused.
    pub params: SystemParams,
    pub g_list: Vec<f64>,
    pub model: M,
}

impl<M: DecoderEnergy> MultiBlockProblem<M> {
    pub fn new(params: SystemParams, g_list: Vec<f64>, model: M) -> Result<Self> {
        if g_list.is_empty() {
            return Err(Error::InvalidParams("at least one block is required".into()));
        }
        let params = SystemParams { g: 0.0, ..params };
        params.validate()?;
        for (i, &g) in g_list.iter().enumerate() {
            SystemParams { g, ..params }
                .validate()
                .map_err(|e| Error::InvalidParams(format!("block {}: {e}", i + 1)))?;
        }
        Ok(Self { params, g_list, model })
    }

    pub fn blocks(&self) -> usize {
        self.g_list.len()
    }

    /// Decoding budgets `eta e_avg - g_i`.
    pub fn budgets(&self) -> Vec<f64> {
        self.g_list
            .iter()
            .map(|g| self.params.eta * self.params.e_avg - g)
            .collect()
    }

    /// Single-block parameters for block `i` after transfer `t`.
    pub fn block_params(&self, i: usize, t: f64) -> SystemParams {
        self.params.with_effective_g(self.g_list[i] + t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferSchedule {
    pub t_list: Vec<f64>,
}

impl TransferSchedule {
    pub fn zeros(n: usize) -> Self {
        Self { t_list: vec![0.0; n] }
    }

    /// No borrowing from later blocks and no block gives away more than its budget.
    pub fn is_valid(&self, budgets: &[f64]) -> bool {
        if self.t_list.len() != budgets.len() {
            return false;
        }
        let mut prefix = 0.0;
        for (&t, &b) in self.t_list.iter().zip(budgets) {
            prefix += t;
            if prefix < -SCHEDULE_TOL || t > b + SCHEDULE_TOL {
                return false;
            }
        }
        true
    }

    pub fn sum(&self) -> f64 {
        self.t_list.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiBlockSolution {
    pub per_block: Vec<FullSolution>,
    pub per_block_case: Vec<CaseLabel>,
    pub schedule: TransferSchedule,
    pub total_bits_per_use: f64,
    pub bound: f64,
    pub bound_achieved: bool,
    /// Total after each per-block step, first to last.
    pub history: Vec<f64>,
}

/// Maximizer of [`o_tilde`] over the box `theta >= 1`, `0 <= e_i <= e_lim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P8Solution {
    pub theta: f64,
    pub e_i: f64,
    pub value: f64,
}

/// Decoded bits per unit of decoding budget at `(theta, e_i)`.
pub fn o_tilde<M: DecoderEnergy + ?Sized>(theta: f64, e_i: f64, p: &SystemParams, m: &M) -> f64 {
    single_block::efficiency(theta, e_i, p.eta, m)
}

fn p8_from<M: DecoderEnergy + ?Sized>(st: &Stationary, p: &SystemParams, m: &M) -> P8Solution {
    let best = best_efficiency(st, p.eta, p.e_lim, m);
    P8Solution {
        theta: best.theta,
        e_i: best.e_i,
        value: best.objective,
    }
}

/// Budget-free efficiency maximizer. Depends only on `eta`, `e_lim` and the model.
pub fn solve_p8<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M) -> Result<P8Solution> {
    let st = Stationary::compute(p.eta, p.e_lim, m)?;
    Ok(p8_from(&st, p, m))
}

/// Smallest overhead `g + T` at which `(theta, e_i)` satisfies the combined
/// constraint. `-inf` when `e_i = e_lim`, where the constraint never binds.
pub fn g_dot_at<M: DecoderEnergy + ?Sized>(theta: f64, e_i: f64, p: &SystemParams, m: &M) -> f64 {
    let gap = p.e_lim - e_i;
    if gap <= 0.0 {
        return f64::NEG_INFINITY;
    }
    p.eta * p.e_avg - (m.energy(theta) + p.eta * e_i) * (p.e_lim - p.e_avg) / gap
}

/// [`g_dot_at`] evaluated at the [`solve_p8`] pair.
pub fn g_dot<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M) -> Result<f64> {
    let s = solve_p8(p, m)?;
    Ok(g_dot_at(s.theta, s.e_i, p, m))
}

pub fn upper_bound<M: DecoderEnergy>(prob: &MultiBlockProblem<M>) -> Result<f64> {
    let s = solve_p8(&prob.params, &prob.model)?;
    Ok(bound_from(prob, s.value))
}

fn bound_from<M: DecoderEnergy>(prob: &MultiBlockProblem<M>, value: f64) -> f64 {
    prob.budgets().iter().map(|b| b * value).sum()
}

/// Every suffix `k..N` satisfies `sum g_i >= (N - k + 1) g_dot`.
pub fn suffix_condition(g_list: &[f64], g_dot: f64) -> bool {
    let mut suffix = 0.0;
    for (count, &g) in g_list.iter().rev().enumerate() {
        suffix += g;
        if suffix < (count + 1) as f64 * g_dot {
            return false;
        }
    }
    true
}

pub fn theorem2_condition<M: DecoderEnergy>(prob: &MultiBlockProblem<M>) -> Result<bool> {
    Ok(suffix_condition(&prob.g_list, g_dot(&prob.params, &prob.model)?))
}

/// Greedy schedule lifting every block to `g_dot` with energy from earlier
/// blocks. Fails unless [`suffix_condition`] holds.
pub fn schedule_for(g_list: &[f64], g_dot: f64) -> Result<TransferSchedule> {
    if !suffix_condition(g_list, g_dot) {
        return Err(Error::ConditionNotMet);
    }
    let mut prefix = 0.0_f64;
    let t_list = g_list
        .iter()
        .map(|&g| {
            let t = (-prefix).max(g_dot - g);
            prefix += t;
            t
        })
        .collect();
    Ok(TransferSchedule { t_list })
}

pub fn construct_schedule<M: DecoderEnergy>(prob: &MultiBlockProblem<M>) -> Result<TransferSchedule> {
    schedule_for(&prob.g_list, g_dot(&prob.params, &prob.model)?)
}

/// Transfers maximizing the total for fixed per-block pairs, i.e. minimizing
/// `sum o_tilde_i T_i`. Ties resolve to the lexicographically smallest `T`.
pub fn lp_step<M: DecoderEnergy>(
    prob: &MultiBlockProblem<M>,
    thetas: &[f64],
    e_is: &[f64],
) -> Result<TransferSchedule> {
    let (weights, lower) = lp_data(prob, thetas, e_is)?;
    solve_transfer_lp(&weights, &prob.budgets(), &lower)
}

/// Objective weights and lower bounds on each `T_i` (`None` when unbounded below).
pub(crate) fn lp_data<M: DecoderEnergy>(
    prob: &MultiBlockProblem<M>,
    thetas: &[f64],
    e_is: &[f64],
) -> Result<(Vec<f64>, Vec<Option<f64>>)> {
    let n = prob.blocks();
    if thetas.len() != n || e_is.len() != n {
        return Err(Error::InvalidParams(format!(
            "expected {n} block pairs, got {} thetas and {} energies",
            thetas.len(),
            e_is.len()
        )));
    }
    let p = &prob.params;
    let weights = (0..n).map(|i| o_tilde(thetas[i], e_is[i], p, &prob.model)).collect();
    let lower = (0..n)
        .map(|i| {
            let gd = g_dot_at(thetas[i], e_is[i], p, &prob.model);
            gd.is_finite().then(|| gd - prob.g_list[i])
        })
        .collect();
    Ok((weights, lower))
}

/// Solves over prefix sums `S_k = T_1 + ... + T_k >= 0`, so every variable is
/// sign constrained and `T_k = S_k - S_{k-1}`.
fn solve_transfer_lp(weights: &[f64], upper: &[f64], lower: &[Option<f64>]) -> Result<TransferSchedule> {
    let n = weights.len();
    let difference = |k: usize| {
        let mut row = vec![0.0; n];
        row[k] = 1.0;
        if k > 0 {
            row[k - 1] = -1.0;
        }
        row
    };
    let mut base = LinearProgram::new(vec![0.0; n]);
    for k in 0..n {
        base.add_le(difference(k), upper[k]);
        if let Some(l) = lower[k] {
            base.add_le(difference(k).iter().map(|v| -v).collect(), -l);
        }
    }
    let prefix_cost: Vec<f64> = (0..n)
        .map(|k| weights[k] - weights.get(k + 1).copied().unwrap_or(0.0))
        .collect();

    // Lexicographic refinement: restrict to the optimal face, then minimize
    // T_1, T_2, ... in turn, each time restricting to the new optimal face.
    let mut lp = base;
    lp.cost = prefix_cost;
    let mut sol = lp.solve()?;
    for k in 0..n {
        lp = lp.optimal_face(&sol, FACE_TOL);
        lp.cost = difference(k);
        sol = lp.solve()?;
    }
    let x = sol.x;

    let mut prev = 0.0;
    let t_list = x
        .iter()
        .map(|&s| {
            let t = s - prev;
            prev = s;
            t
        })
        .collect();
    Ok(TransferSchedule { t_list })
}

/// Alternates exact per-block solves at effective overhead `g_i + T_i` with
/// the transfer LP until the total stops improving.
pub fn iterative_solver<M: DecoderEnergy>(prob: &MultiBlockProblem<M>) -> Result<MultiBlockSolution> {
    let p = &prob.params;
    let m = &prob.model;
    let st = Stationary::compute(p.eta, p.e_lim, m)?;
    let p8 = p8_from(&st, p, m);
    let gd = g_dot_at(p8.theta, p8.e_i, p, m);
    let bound = bound_from(prob, p8.value);

    let mut schedule = schedule_for(&prob.g_list, gd).unwrap_or_else(|_| TransferSchedule::zeros(prob.blocks()));
    let mut history = Vec::new();
    let mut state = solve_blocks(prob, &st, &schedule)?;
    history.push(state.total);

    for _ in 1..MAX_ITERATIONS {
        let thetas: Vec<f64> = state.blocks.iter().map(|b| b.0.theta).collect();
        let e_is: Vec<f64> = state.blocks.iter().map(|b| b.0.e_i).collect();
        let next_schedule = match lp_step(prob, &thetas, &e_is) {
            Ok(s) => s,
            Err(Error::LpInfeasible) => break,
            Err(e) => return Err(e),
        };
        let next = solve_blocks(prob, &st, &next_schedule)?;
        let improvement = next.total - state.total;
        if improvement < 0.0 {
            break;
        }
        history.push(next.total);
        state = next;
        schedule = next_schedule;
        if improvement < IMPROVEMENT_TOL {
            break;
        }
    }

    let total = state.total;
    Ok(MultiBlockSolution {
        per_block_case: state.blocks.iter().map(|b| b.1).collect(),
        per_block: state.blocks.into_iter().map(|b| b.0).collect(),
        schedule,
        total_bits_per_use: total,
        bound,
        bound_achieved: (total - bound).abs() <= BOUND_TOL,
        history,
    })
}

struct BlockState {
    blocks: Vec<(FullSolution, CaseLabel)>,
    total: f64,
}

fn solve_blocks<M: DecoderEnergy>(
    prob: &MultiBlockProblem<M>,
    st: &Stationary,
    schedule: &TransferSchedule,
) -> Result<BlockState> {
    let blocks = schedule
        .t_list
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let bp = prob.block_params(i, t);
            let out = algorithm1_with(st, &bp, &prob.model)?;
            Ok((out.full, out.best.case))
        })
        .collect::<Result<Vec<_>>>()?;
    let total = blocks.iter().map(|b| b.0.bits_per_use).sum();
    Ok(BlockState { blocks, total })
}

/// `e_avg` at which `g_dot` equals a uniform overhead `g`; `+inf` when the
/// budget-free optimum already sits at `e_lim`.
pub fn threshold_u<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M, g: f64) -> Result<f64> {
    let s = solve_p8(p, m)?;
    if s.e_i >= p.e_lim {
        return Ok(f64::INFINITY);
    }
    let ed = m.energy(s.theta);
    let denom = p.eta * p.e_lim + ed;
    Ok((p.e_lim - s.e_i) / denom * g + (p.eta * s.e_i + ed) / denom * p.e_lim)
}
