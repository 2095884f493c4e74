//! Single-block optimization.
//!
//! Energy causality and the average-power constraint are tight at the optimum,
//! which eliminates the harvest fraction, the code rate and the harvesting
//! energy. What remains is a two-variable problem over the inverse capacity
//! gap `theta` and the information energy `e_i`:
//!
//! ```text
//! maximize   (theta - 1)/theta * (eta e_avg - g) * C(e_i) / (eta e_i + E_D(theta))
//! subject to 0 <= e_i <= e_lim,  theta >= 1,
//!            E_D(theta) + (eta e_lim - g)/(e_lim - e_avg) e_i
//!                >= (eta e_avg - g)/(e_lim - e_avg) e_lim
//! ```
//!
//! Any optimum is either an interior stationary point (case a), sits on the
//! peak information power edge `e_i = e_lim` (case b), or sits on the last
//! constraint, where the harvesting energy hits `e_lim` (case c). Each case
//! reduces to one-dimensional monotone root finding; the best feasible
//! candidate is the global optimum.

use std::fmt;

use crate::channel::{capacity_derivative_unchecked, capacity_unchecked};
use crate::decoder_energy::{inverse_energy, DecoderEnergy};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::roots;

const FEASIBILITY_TOL: f64 = 1e-10;
const STATIONARY_SEEDS: usize = 16;
const MAX_ALTERNATIONS: usize = 500;
const ALTERNATION_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-6;

/// Which boundary (if any) an optimum candidate sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    /// Interior stationary point: information and harvesting power traded off.
    TradeOff,
    /// Information energy at the peak limit.
    MaxInfoPower,
    /// Harvesting energy at the peak limit.
    MaxHarvestPower,
    /// Zero decoding budget; nothing can be decoded.
    Idle,
}

impl CaseLabel {
    pub fn letter(self) -> &'static str {
        match self {
            Self::TradeOff => "a",
            Self::MaxInfoPower => "b",
            Self::MaxHarvestPower => "c",
            Self::Idle => "none",
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateSolution {
    pub theta: f64,
    pub e_i: f64,
    pub case: CaseLabel,
    /// Bits per channel use at `(theta, e_i)`.
    pub objective: f64,
}

/// Operating point with every original decision variable recovered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullSolution {
    pub alpha: f64,
    pub rate: f64,
    pub e_e: f64,
    pub e_i: f64,
    pub theta: f64,
    pub bits_per_use: f64,
    pub total_bits: f64,
}

impl FullSolution {
    /// `(1 - alpha) E_D(theta) + g - eta alpha e_e`; zero when energy causality is tight.
    pub fn causality_residual<M: DecoderEnergy + ?Sized>(&self, p: &SystemParams, m: &M) -> f64 {
        (1.0 - self.alpha) * m.energy(self.theta) + p.g - p.eta * self.alpha * self.e_e
    }

    /// `alpha e_e + (1 - alpha) e_i - e_avg`; zero when the average budget is spent.
    pub fn average_power_residual(&self, p: &SystemParams) -> f64 {
        self.alpha * self.e_e + (1.0 - self.alpha) * self.e_i - p.e_avg
    }

    /// Checks the structural invariants every emitted solution must satisfy.
    pub fn check_invariants<M: DecoderEnergy + ?Sized>(&self, p: &SystemParams, m: &M) -> Result<()> {
        const TOL: f64 = 1e-8;
        let fail = |what: String| Err(Error::InvalidParams(format!("solution invariant violated: {what}")));
        let r1 = self.causality_residual(p, m);
        if r1.abs() > TOL {
            return fail(format!("energy causality residual {r1:e}"));
        }
        let r2 = self.average_power_residual(p);
        if r2.abs() > TOL {
            return fail(format!("average power residual {r2:e}"));
        }
        if !(-TOL..=1.0 + TOL).contains(&self.alpha) {
            return fail(format!("alpha = {}", self.alpha));
        }
        let cap = capacity_unchecked(self.e_i);
        if self.rate < -TOL || self.rate > cap + TOL {
            return fail(format!("rate {} outside [0, {cap}]", self.rate));
        }
        if self.e_e > p.e_lim + TOL || self.e_i > p.e_lim + TOL || self.e_i < -TOL {
            return fail(format!("energies e_e = {}, e_i = {}", self.e_e, self.e_i));
        }
        Ok(())
    }
}

/// Result of the full single-block search.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleBlockOutcome {
    pub best: CandidateSolution,
    pub full: FullSolution,
    /// Every feasible candidate that was compared, in case order.
    pub candidates: Vec<CandidateSolution>,
}

impl SingleBlockOutcome {
    /// Lead of the winner over the best candidate from a different case;
    /// the full objective when no other case produced a feasible candidate.
    pub fn margin(&self) -> f64 {
        let runner_up = self
            .candidates
            .iter()
            .filter(|c| c.case != self.best.case)
            .map(|c| c.objective)
            .fold(0.0, f64::max);
        self.best.objective - runner_up
    }
}

/// `(theta - 1)/theta * C(e_i) / (eta e_i + E_D(theta))`: decoded bits per
/// unit of decoding budget.
pub(crate) fn efficiency<M: DecoderEnergy + ?Sized>(theta: f64, e_i: f64, eta: f64, m: &M) -> f64 {
    if theta <= 1.0 {
        return 0.0;
    }
    (theta - 1.0) / theta * capacity_unchecked(e_i) / (eta * e_i + m.energy(theta))
}

/// Reduced objective in bits per channel use. Returns 0 at `theta = 1`.
pub fn objective<M: DecoderEnergy + ?Sized>(theta: f64, e_i: f64, p: &SystemParams, m: &M) -> f64 {
    p.budget() * efficiency(theta, e_i, p.eta, m)
}

/// Box constraints plus the combined harvest-fraction / peak-harvest constraint.
pub fn feasible<M: DecoderEnergy + ?Sized>(theta: f64, e_i: f64, p: &SystemParams, m: &M) -> bool {
    if !(theta.is_finite() && e_i.is_finite()) {
        return false;
    }
    if e_i < -FEASIBILITY_TOL || e_i > p.e_lim + FEASIBILITY_TOL || theta < 1.0 - FEASIBILITY_TOL {
        return false;
    }
    let d = p.headroom();
    let lhs = m.energy(theta.max(1.0)) + p.peak_budget() / d * e_i;
    let rhs = p.budget() / d * p.e_lim;
    lhs - rhs >= -FEASIBILITY_TOL
}

/// Numerator of d(objective)/d(theta) up to a positive factor; nonincreasing in theta.
pub fn m_function<M: DecoderEnergy + ?Sized>(theta: f64, e_i: f64, p: &SystemParams, m: &M) -> f64 {
    m_value(theta, e_i, p.eta, m)
}

fn m_value<M: DecoderEnergy + ?Sized>(theta: f64, e_i: f64, eta: f64, m: &M) -> f64 {
    eta * e_i + m.energy(theta) - (theta - 1.0) * theta * m.derivative(theta)
}

/// Numerator of d(objective)/d(e_i) up to a positive factor; nonincreasing in e_i.
pub fn n_function<M: DecoderEnergy + ?Sized>(e_i: f64, theta: f64, p: &SystemParams, m: &M) -> f64 {
    n_value(e_i, theta, p.eta, m)
}

fn n_value<M: DecoderEnergy + ?Sized>(e_i: f64, theta: f64, eta: f64, m: &M) -> f64 {
    capacity_derivative_unchecked(e_i) * (eta * e_i + m.energy(theta)) - eta * capacity_unchecked(e_i)
}

/// Unconstrained maximizer over theta for fixed `e_i > 0`.
fn theta_star<M: DecoderEnergy + ?Sized>(e_i: f64, eta: f64, m: &M) -> Result<f64> {
    let f = |theta: f64| m_value(theta, e_i, eta, m);
    let hi = roots::expand_upper(&f, 2.0, roots::THETA_LIMIT, "theta stationarity")?;
    Ok(roots::bisect_decreasing(&f, 1.0, hi))
}

/// Unconstrained maximizer over e_i for fixed `theta > 1`.
fn e_star<M: DecoderEnergy + ?Sized>(theta: f64, eta: f64, m: &M) -> Result<f64> {
    let f = |e: f64| n_value(e, theta, eta, m);
    let hi = roots::expand_upper(&f, 1.0, roots::ENERGY_LIMIT, "energy stationarity")?;
    Ok(roots::bisect_decreasing(&f, 0.0, hi))
}

fn check_positive(operation: &'static str, name: &'static str, value: f64, floor: f64) -> Result<()> {
    if value.is_finite() && value > floor {
        Ok(())
    } else {
        Err(Error::Domain { operation, name, value })
    }
}

/// Best theta for a fixed `e_i > 0`: the larger of the stationary point and
/// the smallest theta meeting the combined constraint.
pub fn solve_lemma3<M: DecoderEnergy + ?Sized>(e_i: f64, p: &SystemParams, m: &M) -> Result<f64> {
    check_positive("solve_lemma3", "e_i", e_i, 0.0)?;
    let stationary = theta_star(e_i, p.eta, m)?;
    let floor = ((p.budget() * p.e_lim - p.peak_budget() * e_i) / p.headroom()).max(0.0);
    let boundary = inverse_energy(m, floor)?;
    Ok(stationary.max(boundary))
}

/// Best e_i for a fixed `theta > 1`, clamped into the feasible interval.
pub fn solve_lemma4<M: DecoderEnergy + ?Sized>(theta: f64, p: &SystemParams, m: &M) -> Result<f64> {
    check_positive("solve_lemma4", "theta", theta, 1.0)?;
    let stationary = e_star(theta, p.eta, m)?;
    Ok(stationary.max(lower_energy(theta, p, m)).min(p.e_lim))
}

/// Smallest feasible e_i for a given theta (clamped at 0).
fn lower_energy<M: DecoderEnergy + ?Sized>(theta: f64, p: &SystemParams, m: &M) -> f64 {
    boundary_energy(theta, p, m).max(0.0)
}

/// e_i on the combined constraint's boundary for a given theta.
fn boundary_energy<M: DecoderEnergy + ?Sized>(theta: f64, p: &SystemParams, m: &M) -> f64 {
    let k = p.peak_budget();
    p.budget() / k * p.e_lim - p.headroom() / k * m.energy(theta)
}

/// Stationary points of the unconstrained problem. They depend only on
/// `eta`, `e_lim` (through the seed range) and the decoder model.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Stationary {
    /// Joint roots of both stationarity equations, deduplicated.
    pub pairs: Vec<(f64, f64)>,
    /// theta maximizing the objective on the edge `e_i = e_lim`.
    pub edge_theta: f64,
}

impl Stationary {
    pub fn compute<M: DecoderEnergy + ?Sized>(eta: f64, e_lim: f64, m: &M) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        for k in 1..=STATIONARY_SEEDS {
            let exponent = -3.0 + 3.0 * k as f64 / STATIONARY_SEEDS as f64;
            let seed = e_lim * 10f64.powf(exponent);
            let Some(pair) = alternate(seed, eta, m)? else {
                continue;
            };
            let duplicate = pairs
                .iter()
                .any(|&(t, e)| (t - pair.0).abs() <= DEDUP_TOL && (e - pair.1).abs() <= DEDUP_TOL);
            if !duplicate {
                pairs.push(pair);
            }
        }
        let edge_theta = theta_star(e_lim, eta, m)?;
        Ok(Self { pairs, edge_theta })
    }
}

/// Alternates the two unconstrained coordinate maximizers from `seed` until
/// both coordinates stop moving. `None` if that does not happen in time.
fn alternate<M: DecoderEnergy + ?Sized>(seed: f64, eta: f64, m: &M) -> Result<Option<(f64, f64)>> {
    let mut e = seed;
    let mut theta = theta_star(e, eta, m)?;
    for _ in 0..MAX_ALTERNATIONS {
        let next_e = e_star(theta, eta, m)?;
        let next_theta = theta_star(next_e, eta, m)?;
        let moved = (next_e - e).abs().max((next_theta - theta).abs());
        e = next_e;
        theta = next_theta;
        if moved < ALTERNATION_TOL {
            // Finish on the energy step so the pair solves both equations to
            // within the last (sub-tolerance) theta move.
            return Ok(Some((theta, e_star(theta, eta, m)?)));
        }
    }
    Ok(None)
}

/// Interior stationary pairs, each labelled and scored. Feasibility is not
/// filtered here.
pub fn solve_case_a<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M) -> Result<Vec<CandidateSolution>> {
    let st = Stationary::compute(p.eta, p.e_lim, m)?;
    Ok(case_a_from(&st, p, m))
}

fn case_a_from<M: DecoderEnergy + ?Sized>(st: &Stationary, p: &SystemParams, m: &M) -> Vec<CandidateSolution> {
    st.pairs
        .iter()
        .map(|&(theta, e_i)| CandidateSolution {
            theta,
            e_i,
            case: CaseLabel::TradeOff,
            objective: objective(theta, e_i, p, m),
        })
        .collect()
}

/// Peak information power: `e_i = e_lim`, theta stationary.
pub fn solve_case_b<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M) -> Result<CandidateSolution> {
    let theta = theta_star(p.e_lim, p.eta, m)?;
    Ok(case_b_from(theta, p, m))
}

fn case_b_from<M: DecoderEnergy + ?Sized>(theta: f64, p: &SystemParams, m: &M) -> CandidateSolution {
    CandidateSolution {
        theta,
        e_i: p.e_lim,
        case: CaseLabel::MaxInfoPower,
        objective: objective(theta, p.e_lim, p, m),
    }
}

/// Derivative numerator of the objective restricted to the combined
/// constraint's boundary, as a function of theta. Nonincreasing on
/// `[1, theta']`; `-inf` once the boundary energy reaches zero.
pub fn h_function<M: DecoderEnergy + ?Sized>(theta: f64, p: &SystemParams, m: &M) -> f64 {
    let e = boundary_energy(theta, p, m);
    if e <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let de = -p.headroom() / p.peak_budget() * m.derivative(theta);
    let c = capacity_unchecked(e);
    let dc = capacity_derivative_unchecked(e) * de;
    let gap = p.e_lim - e;
    let t2 = theta * theta - theta;
    gap * c + t2 * gap * dc + t2 * c * de
}

/// Peak harvesting power: the optimum along the combined constraint's
/// boundary. `None` when the budget is zero or the bracket is degenerate.
pub fn solve_case_c<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M) -> Result<Option<CandidateSolution>> {
    if p.budget() <= 0.0 {
        return Ok(None);
    }
    let f = |theta: f64| h_function(theta, p, m);
    if f(1.0) <= 0.0 {
        return Ok(None);
    }
    let theta_edge = inverse_energy(m, p.budget() / p.headroom() * p.e_lim)?;
    if theta_edge <= 1.0 {
        return Ok(None);
    }
    let theta = roots::bisect_decreasing(&f, 1.0, theta_edge);
    let e_i = lower_energy(theta, p, m);
    Ok(Some(CandidateSolution {
        theta,
        e_i,
        case: CaseLabel::MaxHarvestPower,
        objective: objective(theta, e_i, p, m),
    }))
}

/// Recovers harvest fraction, rate and harvesting energy from `(theta, e_i)`
/// with both energy constraints tight.
pub fn recover_full<M: DecoderEnergy + ?Sized>(theta: f64, e_i: f64, p: &SystemParams, m: &M) -> Result<FullSolution> {
    let ed = m.energy(theta);
    let spend = p.eta * e_i + ed;
    let budget = p.budget().max(0.0);
    let denom = spend - budget;
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::InfeasibleRecovery { theta, e_i });
    }
    let info_fraction = budget / spend;
    let rate = if theta <= 1.0 {
        0.0
    } else {
        (theta - 1.0) / theta * capacity_unchecked(e_i)
    };
    let bits_per_use = info_fraction * rate;
    Ok(FullSolution {
        alpha: 1.0 - info_fraction,
        rate,
        e_e: (ed * p.e_avg + p.g * e_i) / denom,
        e_i,
        theta,
        bits_per_use,
        total_bits: bits_per_use * p.n as f64,
    })
}

/// Solution for a zero decoding budget: everything goes to harvesting.
fn idle_solution<M: DecoderEnergy + ?Sized>(st: &Stationary, p: &SystemParams, m: &M) -> Result<SingleBlockOutcome> {
    let full = if p.e_avg > 0.0 {
        let pair = best_efficiency(st, p.eta, p.e_lim, m);
        recover_full(pair.theta, pair.e_i, p, m)?
    } else {
        FullSolution {
            alpha: 1.0,
            rate: 0.0,
            e_e: 0.0,
            e_i: 0.0,
            theta: 1.0,
            bits_per_use: 0.0,
            total_bits: 0.0,
        }
    };
    let best = CandidateSolution {
        theta: full.theta,
        e_i: full.e_i,
        case: CaseLabel::Idle,
        objective: 0.0,
    };
    Ok(SingleBlockOutcome {
        best,
        full,
        candidates: vec![best],
    })
}

/// Box-constrained maximizer of the budget-free efficiency among the case
/// (a) and (b) candidates.
pub(crate) fn best_efficiency<M: DecoderEnergy + ?Sized>(
    st: &Stationary,
    eta: f64,
    e_lim: f64,
    m: &M,
) -> CandidateSolution {
    let mut best = CandidateSolution {
        theta: st.edge_theta,
        e_i: e_lim,
        case: CaseLabel::MaxInfoPower,
        objective: efficiency(st.edge_theta, e_lim, eta, m),
    };
    for &(theta, e_i) in &st.pairs {
        if e_i > e_lim + FEASIBILITY_TOL {
            continue;
        }
        let value = efficiency(theta, e_i, eta, m);
        if value > best.objective {
            best = CandidateSolution {
                theta,
                e_i,
                case: CaseLabel::TradeOff,
                objective: value,
            };
        }
    }
    best
}

/// Enumerates the three candidate families, keeps the feasible ones and
/// returns the best together with its recovered operating point.
pub fn algorithm1<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M) -> Result<SingleBlockOutcome> {
    let st = Stationary::compute(p.eta, p.e_lim, m)?;
    algorithm1_with(&st, p, m)
}

pub(crate) fn algorithm1_with<M: DecoderEnergy + ?Sized>(
    st: &Stationary,
    p: &SystemParams,
    m: &M,
) -> Result<SingleBlockOutcome> {
    if p.budget() <= 0.0 {
        return idle_solution(st, p, m);
    }
    let mut candidates = case_a_from(st, p, m);
    candidates.push(case_b_from(st.edge_theta, p, m));
    if let Some(c) = solve_case_c(p, m)? {
        candidates.push(c);
    }
    candidates.retain(|c| feasible(c.theta, c.e_i, p, m));
    let best = candidates
        .iter()
        .copied()
        .fold(None::<CandidateSolution>, |acc, c| match acc {
            Some(b) if b.objective >= c.objective => Some(b),
            _ => Some(c),
        })
        .ok_or_else(|| Error::NoFeasibleCandidate(p.to_string()))?;
    let full = recover_full(best.theta, best.e_i, p, m)?;
    Ok(SingleBlockOutcome { best, full, candidates })
}

/// Comparator without transmit power optimization: every symbol, harvesting
/// or information, uses `e_avg`; only theta is optimized.
pub fn constant_power_baseline<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M) -> Result<FullSolution> {
    if p.e_avg <= 0.0 {
        return Ok(FullSolution {
            alpha: 1.0,
            rate: 0.0,
            e_e: 0.0,
            e_i: 0.0,
            theta: 1.0,
            bits_per_use: 0.0,
            total_bits: 0.0,
        });
    }
    let theta = solve_lemma3(p.e_avg, p, m)?;
    recover_full(theta, p.e_avg, p, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder_energy::{power_law_model, theta_log_theta_model, DecoderEnergyModel};

    fn reference_link() -> SystemParams {
        SystemParams::new(0.5, 0.0, 0.5, 3.0).unwrap()
    }

    fn tlt() -> DecoderEnergyModel {
        theta_log_theta_model()
    }

    #[test]
    fn objective_edges() {
        let p = reference_link();
        let m = tlt();
        assert_eq!(objective(1.0, 1.0, &p, &m), 0.0);
        assert_eq!(objective(1.0, 0.0, &p, &m), 0.0);
        let zero = SystemParams::new(0.5, 0.25, 0.5, 3.0).unwrap();
        assert_eq!(objective(2.0, 1.0, &zero, &m), 0.0);
    }

    #[test]
    fn objective_composes_capacity() {
        // (2, 1) with eta = 0.5, g = 0, e_avg = 1: 0.5 * 0.5 * C(1) / (0.5 + 2)
        let p = SystemParams::new(0.5, 0.0, 1.0, 3.0).unwrap();
        let c1 = capacity_unchecked(1.0);
        let expected = 0.5 * 0.5 * c1 / 2.5;
        assert!((objective(2.0, 1.0, &p, &tlt()) - expected).abs() < 1e-15);
    }

    #[test]
    fn feasibility_examples() {
        let p = reference_link();
        let m = tlt();
        assert!(feasible(1.0, p.e_lim, &p, &m));
        assert!(!feasible(1.0, 0.0, &p, &m));
        // boundary of the combined constraint at theta = 1
        let e_edge = p.budget() * p.e_lim / p.peak_budget();
        assert!(feasible(1.0, e_edge, &p, &m));
        assert!(!feasible(1.0, e_edge - 1e-6, &p, &m));
        assert!(!feasible(2.0, p.e_lim + 1e-6, &p, &m));
        assert!(!feasible(0.9, 1.0, &p, &m));
    }

    #[test]
    fn m_function_values() {
        let p = reference_link();
        let m = tlt();
        assert!((m_function(1.0, 1.0, &p, &m) - 0.5).abs() < 1e-15);
        let expected = 0.5 + 2.0 - 2.0 * (1.0 + std::f64::consts::LOG2_E);
        assert!((m_function(2.0, 1.0, &p, &m) - expected).abs() < 1e-14);
        assert!((expected + 2.3854).abs() < 1e-4);
        assert!(m_function(50.0, 1.0, &p, &m) < 0.0);
    }

    #[test]
    fn lemma3_example_against_scan() {
        // Root of 0.5 + t log2 t - (t^2 - t)(log2 t + 1/ln 2), scanned at 1e-6.
        let p = SystemParams::new(0.5, 0.0, 0.5, 3.0).unwrap();
        let m = tlt();
        let theta = solve_lemma3(1.0, &p, &m).unwrap();
        let f = |t: f64| 0.5 + t * t.log2() - (t * t - t) * (t.log2() + std::f64::consts::LOG2_E);
        let mut scan_root = f64::NAN;
        let mut t = 1.0;
        while t < 10.0 {
            if f(t) > 0.0 && f(t + 1e-6) <= 0.0 {
                scan_root = t;
                break;
            }
            t += 1e-6;
        }
        assert!((theta - scan_root).abs() <= 2e-6, "{theta} vs {scan_root}");
        assert!(theta > 1.0);
    }

    #[test]
    fn lemma3_above_corollary_threshold_is_stationary() {
        let p = reference_link();
        let m = tlt();
        let threshold = p.e_lim * p.budget() / p.peak_budget();
        for e in [threshold, 1.0, 2.0, 3.0] {
            let theta = solve_lemma3(e, &p, &m).unwrap();
            assert!(m_function(theta, e, &p, &m).abs() < 1e-12);
        }
        assert!(solve_lemma3(0.0, &p, &m).is_err());
    }

    #[test]
    fn lemma3_below_threshold_can_clamp() {
        let p = SystemParams::new(0.5, 0.0, 2.5, 3.0).unwrap();
        let m = tlt();
        let e = 0.05;
        let theta = solve_lemma3(e, &p, &m).unwrap();
        // Clamped onto the combined constraint.
        let lhs = m.energy(theta) + p.peak_budget() / p.headroom() * e;
        let rhs = p.budget() / p.headroom() * p.e_lim;
        assert!((lhs - rhs).abs() < 1e-9);
        assert!(m_function(theta, e, &p, &m) < 0.0);
    }

    #[test]
    fn lemma4_example_against_scan() {
        let p = reference_link();
        let m = tlt();
        let e = solve_lemma4(2.0, &p, &m).unwrap();
        assert!(e > 0.0);
        let mut scan_root = f64::NAN;
        let mut x: f64 = 1e-6;
        while x < 3.0 {
            if n_function(x, 2.0, &p, &m) > 0.0 && n_function(x + 1e-6, 2.0, &p, &m) <= 0.0 {
                scan_root = x;
                break;
            }
            x += 1e-6;
        }
        assert!((e - scan_root).abs() <= 2e-6, "{e} vs {scan_root}");
        assert!(solve_lemma4(1.0, &p, &m).is_err());
    }

    #[test]
    fn lemma4_corollary_region() {
        let p = reference_link();
        let m = tlt();
        let threshold = p.e_lim * p.budget() / p.headroom();
        let theta = crate::decoder_energy::inverse_energy(&m, threshold).unwrap() + 0.5;
        let e = solve_lemma4(theta, &p, &m).unwrap();
        let unconstrained = e_star(theta, p.eta, &m).unwrap();
        assert_eq!(e, unconstrained.min(p.e_lim));
    }

    #[test]
    fn case_a_residuals() {
        for m in [tlt(), power_law_model(1.0, 2.0).unwrap()] {
            let p = SystemParams::new(0.5, 0.0, 1.5, 3.0).unwrap();
            let cands = solve_case_a(&p, &m).unwrap();
            assert!(!cands.is_empty());
            for c in cands {
                assert!(c.theta > 1.0 && c.e_i > 0.0);
                assert!(m_function(c.theta, c.e_i, &p, &m).abs() <= 1e-8);
                assert!(n_function(c.e_i, c.theta, &p, &m).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn case_b_on_edge() {
        let p = SystemParams::new(0.5, 0.0, 0.3, 0.8).unwrap();
        let m = tlt();
        let b = solve_case_b(&p, &m).unwrap();
        assert_eq!(b.e_i, p.e_lim);
        assert!(m_function(b.theta, p.e_lim, &p, &m).abs() <= 1e-8);
        let out = algorithm1(&p, &m).unwrap();
        assert_eq!(out.best.case, CaseLabel::MaxInfoPower);
    }

    #[test]
    fn case_c_bracket_and_remark() {
        let p = SystemParams::new(0.5, 0.0, 2.5, 3.0).unwrap();
        let m = tlt();
        assert!(h_function(1.0, &p, &m) > 0.0);
        let edge = crate::decoder_energy::inverse_energy(&m, p.budget() / p.headroom() * p.e_lim).unwrap();
        assert!(h_function(edge * (1.0 - 1e-9), &p, &m) < 0.0);
        let c = solve_case_c(&p, &m).unwrap().unwrap();
        let full = recover_full(c.theta, c.e_i, &p, &m).unwrap();
        assert!((full.e_e - p.e_lim).abs() <= 1e-8);
        let out = algorithm1(&p, &m).unwrap();
        assert_eq!(out.best.case, CaseLabel::MaxHarvestPower);
    }

    #[test]
    fn h_nonincreasing() {
        let p = SystemParams::new(0.5, 0.1, 2.0, 3.0).unwrap();
        let m = tlt();
        let edge = crate::decoder_energy::inverse_energy(&m, p.budget() / p.headroom() * p.e_lim).unwrap();
        let mut prev = h_function(1.0, &p, &m);
        for i in 1..1000 {
            let theta = 1.0 + (edge - 1.0) * i as f64 / 1000.0;
            let h = h_function(theta, &p, &m);
            assert!(h <= prev + 1e-9, "h increased at {theta}");
            prev = h;
        }
    }

    #[test]
    fn zero_budget_gives_zero() {
        let p = SystemParams::new(0.5, 0.25, 0.5, 3.0).unwrap();
        let m = tlt();
        let out = algorithm1(&p, &m).unwrap();
        assert_eq!(out.best.objective, 0.0);
        assert_eq!(out.full.bits_per_use, 0.0);
        assert_eq!(out.full.alpha, 1.0);
        out.full.check_invariants(&p, &m).unwrap();
        assert!(solve_case_c(&p, &m).unwrap().is_none());
    }

    #[test]
    fn recover_rejects_nonpositive_denominator() {
        let p = reference_link();
        let m = tlt();
        // theta = 1, e_i = e_avg with g = 0: spend equals budget exactly.
        assert!(matches!(
            recover_full(1.0, p.e_avg, &p, &m),
            Err(Error::InfeasibleRecovery { .. })
        ));
    }

    #[test]
    fn algorithm1_dominates_each_case() {
        let p = reference_link();
        let m = tlt();
        let out = algorithm1(&p, &m).unwrap();
        for c in &out.candidates {
            assert!(out.best.objective >= c.objective);
        }
        out.full.check_invariants(&p, &m).unwrap();
        assert!((out.full.bits_per_use - out.best.objective).abs() < 1e-14);
    }

    #[test]
    fn baseline_is_dominated() {
        let m = tlt();
        for i in 1..30 {
            let p = SystemParams::new(0.5, 0.0, 0.1 * i as f64, 3.0).unwrap();
            let base = constant_power_baseline(&p, &m).unwrap();
            let opt = algorithm1(&p, &m).unwrap();
            assert!(base.bits_per_use <= opt.best.objective + 1e-12, "e_avg {}", p.e_avg);
            assert!((base.e_e - p.e_avg).abs() < 1e-12);
            assert_eq!(base.e_i, p.e_avg);
            base.check_invariants(&p, &m).unwrap();
        }
    }

    #[test]
    fn total_bits_scale_with_n() {
        let p = reference_link().with_n(1000).unwrap();
        let out = algorithm1(&p, &tlt()).unwrap();
        assert!((out.full.total_bits - 1000.0 * out.full.bits_per_use).abs() < 1e-12);
    }
}
