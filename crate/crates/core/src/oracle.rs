//! Brute-force references for the solvers: dense grid search over
//! `(theta, e_i)`, uniform random sampling, and exhaustive vertex enumeration
//! for the transfer LP.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::capacity_unchecked;
use crate::decoder_energy::{inverse_energy, DecoderEnergy};
use crate::error::{Error, Result};
use crate::multi_block::{lp_data, MultiBlockProblem, TransferSchedule};
use crate::params::SystemParams;
use crate::single_block::{feasible, objective};

const THETA_FLOOR: f64 = 1.0 + 1e-6;
const MAX_DOUBLINGS: usize = 30;
/// Largest block count accepted by [`enumerate_lp_vertices`].
pub const MAX_ORACLE_BLOCKS: usize = 4;
const VERTEX_FEAS_TOL: f64 = 1e-9;
const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Upper end of the theta axis; `None` picks one from the parameters and
    /// doubles it while the argmax sits on the upper edge.
    pub theta_max: Option<f64>,
    pub theta_points: usize,
    pub e_points: usize,
}

impl GridSpec {
    pub fn new(theta_points: usize, e_points: usize) -> Self {
        Self {
            theta_max: None,
            theta_points,
            e_points,
        }
    }

    pub fn with_theta_max(self, theta_max: f64) -> Self {
        Self {
            theta_max: Some(theta_max),
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        if self.theta_points < 2 || self.e_points < 2 {
            return Err(Error::InvalidParams("grid needs at least 2 points per axis".into()));
        }
        if let Some(t) = self.theta_max {
            if !(t.is_finite() && t > THETA_FLOOR) {
                return Err(Error::InvalidParams(format!("theta_max must exceed 1, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub theta: f64,
    pub e_i: f64,
    pub value: f64,
    pub theta_max: f64,
    /// Grid spacing around the argmax along each axis.
    pub theta_step: f64,
    pub e_step: f64,
}

fn theta_axis(theta_max: f64, points: usize) -> Vec<f64> {
    let ratio = (theta_max / THETA_FLOOR).ln();
    (0..points)
        .map(|k| {
            if k + 1 == points {
                theta_max
            } else {
                THETA_FLOOR * (ratio * k as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

fn default_theta_max<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M) -> Result<f64> {
    let edge = if p.budget() > 0.0 {
        inverse_energy(m, p.budget() / p.headroom() * p.e_lim)?
    } else {
        1.0
    };
    Ok(2.0 * edge + 2.0)
}

/// Best grid point in one theta row: `(value, e_i)`, earliest index on ties.
type RowBest = Option<(f64, f64)>;

/// Runs `row` over every theta, doubling `theta_max` while the argmax sits on
/// the last theta. Ties resolve to the lowest row index.
fn search<F>(spec: &GridSpec, mut theta_max: f64, auto: bool, e_lim: f64, row: F) -> Result<GridOptimum>
where
    F: Fn(f64) -> RowBest + Sync,
{
    spec.validate()?;
    for _ in 0..=MAX_DOUBLINGS {
        let thetas = theta_axis(theta_max, spec.theta_points);
        let best = thetas
            .par_iter()
            .enumerate()
            .filter_map(|(k, &theta)| row(theta).map(|(v, e)| (v, k, e)))
            .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        let Some((value, k, e_i)) = best else {
            return Err(Error::EmptyGrid);
        };
        if auto && k + 1 == spec.theta_points && value > 0.0 {
            theta_max *= 2.0;
            continue;
        }
        let theta = thetas[k];
        let theta_step = if k + 1 < thetas.len() {
            thetas[k + 1] - theta
        } else {
            theta - thetas[k - 1]
        };
        return Ok(GridOptimum {
            theta,
            e_i,
            value,
            theta_max,
            theta_step,
            e_step: e_lim / (spec.e_points - 1) as f64,
        });
    }
    Err(Error::BracketNotFound {
        what: "grid theta range",
        limit: theta_max,
    })
}

fn energy_axis(e_lim: f64, points: usize) -> Vec<f64> {
    (0..points).map(|j| e_lim * j as f64 / (points - 1) as f64).collect()
}

/// Exhaustive search of the single-block objective over the feasible part of
/// a `theta x e_i` grid. Each theta row also tries the exact point on the
/// combined constraint's boundary, where optima often sit.
pub fn grid_search_p2<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M, spec: &GridSpec) -> Result<GridOptimum> {
    let energies = energy_axis(p.e_lim, spec.e_points);
    let caps: Vec<f64> = energies.iter().map(|&e| capacity_unchecked(e)).collect();
    let budget = p.budget();
    let (d, k) = (p.e_lim - p.e_avg, p.eta * p.e_lim - p.g);
    let row = |theta: f64| -> RowBest {
        let ed = m.energy(theta);
        let scale = (theta - 1.0) / theta * budget;
        let mut best: RowBest = None;
        let mut consider = |e: f64, cap: f64| {
            if !feasible(theta, e, p, m) {
                return;
            }
            let v = scale * cap / (p.eta * e + ed);
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, e));
            }
        };
        for (&e, &cap) in energies.iter().zip(&caps) {
            consider(e, cap);
        }
        let boundary = (budget * p.e_lim - d * ed) / k;
        if boundary > 0.0 && boundary <= p.e_lim {
            consider(boundary, capacity_unchecked(boundary));
        }
        best
    };
    let (theta_max, auto) = match spec.theta_max {
        Some(t) => (t, false),
        None => (default_theta_max(p, m)?, true),
    };
    search(spec, theta_max, auto, p.e_lim, row)
}

/// Exhaustive search of the budget-free efficiency over the box only.
pub fn grid_search_p8<M: DecoderEnergy + ?Sized>(p: &SystemParams, m: &M, spec: &GridSpec) -> Result<GridOptimum> {
    let energies = energy_axis(p.e_lim, spec.e_points);
    let caps: Vec<f64> = energies.iter().map(|&e| capacity_unchecked(e)).collect();
    let row = |theta: f64| -> RowBest {
        let ed = m.energy(theta);
        let scale = (theta - 1.0) / theta;
        let mut best: RowBest = None;
        for (&e, &cap) in energies.iter().zip(&caps) {
            let denom = p.eta * e + ed;
            let v = if denom > 0.0 { scale * cap / denom } else { 0.0 };
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, e));
            }
        }
        best
    };
    let (theta_max, auto) = match spec.theta_max {
        Some(t) => (t, false),
        None => (8.0, true),
    };
    search(spec, theta_max, auto, p.e_lim, row)
}

/// Best of `samples` uniform random feasible draws of the single-block
/// objective, with theta drawn log-uniformly on `[1, theta_max]`.
pub fn random_search_p2<M: DecoderEnergy + ?Sized>(
    p: &SystemParams,
    m: &M,
    theta_max: f64,
    samples: usize,
    seed: u64,
) -> Result<GridOptimum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<GridOptimum> = None;
    let log_max = theta_max.ln();
    for _ in 0..samples {
        let theta = (rng.gen::<f64>() * log_max).exp();
        let e = rng.gen::<f64>() * p.e_lim;
        if !feasible(theta, e, p, m) {
            continue;
        }
        let value = objective(theta, e, p, m);
        if best.is_none_or(|b| value > b.value) {
            best = Some(GridOptimum {
                theta,
                e_i: e,
                value,
                theta_max,
                theta_step: 0.0,
                e_step: 0.0,
            });
        }
    }
    best.ok_or(Error::EmptyGrid)
}

/// Random valid parameters: `eta` in `[0.3, 1]`, `e_lim` in `[0.5, 8]`,
/// `e_avg` in `(0, e_lim)` and `g` in `[0, eta e_avg]`.
pub fn random_params<R: Rng + ?Sized>(rng: &mut R) -> SystemParams {
    let eta = rng.gen_range(0.3..=1.0);
    let e_lim = rng.gen_range(0.5..=8.0);
    let mut e_avg = 0.0;
    while e_avg <= 0.0 {
        e_avg = rng.gen_range(0.0..e_lim);
    }
    let g = rng.gen_range(0.0..=eta * e_avg);
    SystemParams::new(eta, g, e_avg, e_lim).expect("sampled parameters are valid")
}

/// Random transfer LP: up to `max_blocks` blocks with overheads in
/// `[0, eta e_avg]` and per-block pairs with `theta` in `[1, 4]` and `e_i` in
/// `[0, e_lim]` (exactly `e_lim` one time in five).
pub fn random_lp_instance<R: Rng + ?Sized, M: DecoderEnergy + Clone>(
    rng: &mut R,
    model: &M,
    max_blocks: usize,
) -> (MultiBlockProblem<M>, Vec<f64>, Vec<f64>) {
    let p = random_params(rng);
    let n = rng.gen_range(1..=max_blocks);
    let g_list = (0..n).map(|_| rng.gen_range(0.0..=p.eta * p.e_avg)).collect();
    let thetas = (0..n).map(|_| rng.gen_range(1.0..=4.0)).collect();
    let e_is = (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                p.e_lim
            } else {
                rng.gen_range(0.0..=p.e_lim)
            }
        })
        .collect();
    let prob = MultiBlockProblem::new(p, g_list, model.clone()).expect("sampled problem is valid");
    (prob, thetas, e_is)
}

/// `a . T >= b`.
struct HalfSpace {
    a: Vec<f64>,
    b: f64,
}

fn transfer_constraints(upper: &[f64], lower: &[Option<f64>]) -> Vec<HalfSpace> {
    let n = upper.len();
    let mut out = Vec::with_capacity(3 * n);
    for k in 0..n {
        let mut a = vec![0.0; n];
        a[..=k].iter_mut().for_each(|v| *v = 1.0);
        out.push(HalfSpace { a, b: 0.0 });
    }
    for (i, &u) in upper.iter().enumerate() {
        let mut a = vec![0.0; n];
        a[i] = -1.0;
        out.push(HalfSpace { a, b: -u });
    }
    for (i, l) in lower.iter().enumerate() {
        if let Some(l) = *l {
            let mut a = vec![0.0; n];
            a[i] = 1.0;
            out.push(HalfSpace { a, b: l });
        }
    }
    out
}

/// Solves the square system `rows x = rhs` with partial pivoting; `None` if singular.
fn solve_square(mut rows: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))?;
        if rows[pivot][col].abs() < SINGULAR_PIVOT {
            return None;
        }
        rows.swap(col, pivot);
        rhs.swap(col, pivot);
        let (upper, lower) = rows.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (k, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
                rhs[col + 1 + k] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| rows[r][c] * x[c]).sum();
        x[r] = (rhs[r] - tail) / rows[r][r];
    }
    Some(x)
}

fn for_each_subset(m: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, m: usize, k: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if chosen.len() == k {
            f(chosen);
            return;
        }
        for i in start..=m - (k - chosen.len()) {
            chosen.push(i);
            go(i + 1, m, k, chosen, f);
            chosen.pop();
        }
    }
    if k <= m {
        go(0, m, k, &mut Vec::with_capacity(k), f);
    }
}

/// Optimal transfer schedule found by visiting every vertex of the transfer
/// polytope. The polytope is bounded (each `T_i` lies between minus the total
/// budget and its own budget), so the only failure mode is infeasibility.
pub fn enumerate_lp_vertices<M: DecoderEnergy>(
    prob: &MultiBlockProblem<M>,
    thetas: &[f64],
    e_is: &[f64],
) -> Result<TransferSchedule> {
    let n = prob.blocks();
    if n > MAX_ORACLE_BLOCKS {
        return Err(Error::InvalidParams(format!(
            "vertex enumeration is limited to {MAX_ORACLE_BLOCKS} blocks, got {n}"
        )));
    }
    let (weights, lower) = lp_data(prob, thetas, e_is)?;
    let constraints = transfer_constraints(&prob.budgets(), &lower);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_subset(constraints.len(), n, &mut |active| {
        let rows = active.iter().map(|&i| constraints[i].a.clone()).collect();
        let rhs = active.iter().map(|&i| constraints[i].b).collect();
        let Some(t) = solve_square(rows, rhs) else {
            return;
        };
        let ok = constraints.iter().all(|h| {
            let lhs: f64 = h.a.iter().zip(&t).map(|(a, x)| a * x).sum();
            lhs >= h.b - VERTEX_FEAS_TOL
        });
        if !ok {
            return;
        }
        let value: f64 = weights.iter().zip(&t).map(|(w, x)| w * x).sum();
        let better = match &best {
            None => true,
            Some((bv, bt)) => value < *bv - 1e-15 || (value <= *bv + 1e-15 && lex_less(&t, bt)),
        };
        if better {
            best = Some((value, t));
        }
    });
    best.map(|(_, t_list)| TransferSchedule { t_list })
        .ok_or(Error::LpInfeasible)
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < &(y - 1e-12) {
            return true;
        }
        if x > &(y + 1e-12) {
            return false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder_energy::theta_log_theta_model;
    use crate::multi_block::lp_step;

    #[test]
    fn subsets_are_counted() {
        let mut count = 0;
        for_each_subset(6, 3, &mut |_| count += 1);
        assert_eq!(count, 20);
    }

    #[test]
    fn square_solver() {
        let x = solve_square(vec![vec![0.0, 2.0], vec![1.0, 1.0]], vec![4.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert!(solve_square(vec![vec![1.0, 1.0], vec![2.0, 2.0]], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn zero_budget_grid_is_zero() {
        let p = SystemParams::new(0.5, 0.25, 0.5, 3.0).unwrap();
        let r = grid_search_p2(&p, &theta_log_theta_model(), &GridSpec::new(50, 50)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn p8_grid_ignores_g() {
        let m = theta_log_theta_model();
        let spec = GridSpec::new(200, 200);
        let a = grid_search_p8(&SystemParams::new(1.0, 0.0, 1.0, 4.0).unwrap(), &m, &spec).unwrap();
        let b = grid_search_p8(&SystemParams::new(1.0, 0.5, 1.0, 4.0).unwrap(), &m, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn p8_dominates_normalized_p2() {
        let m = theta_log_theta_model();
        let p = SystemParams::new(0.5, 0.05, 1.5, 3.0).unwrap();
        let spec = GridSpec::new(300, 300);
        let p2 = grid_search_p2(&p, &m, &spec).unwrap();
        let p8 = grid_search_p8(&p, &m, &spec).unwrap();
        assert!(p8.value >= p2.value / p.budget() - 1e-12);
    }

    #[test]
    fn single_block_vertex_is_closed_form() {
        let m = theta_log_theta_model();
        let p = SystemParams::new(1.0, 0.0, 1.0, 4.0).unwrap();
        let prob = MultiBlockProblem::new(p, vec![0.3], m).unwrap();
        let s = enumerate_lp_vertices(&prob, &[1.5], &[0.5]).unwrap();
        let lower = crate::multi_block::g_dot_at(1.5, 0.5, &p, &m) - 0.3;
        assert!((s.t_list[0] - lower.max(0.0)).abs() < 1e-12);
        let via_lp = lp_step(&prob, &[1.5], &[0.5]).unwrap();
        assert!((via_lp.t_list[0] - s.t_list[0]).abs() < 1e-12);
    }

    #[test]
    fn degenerate_polytope_single_point() {
        // g = eta e_avg gives zero budget, so T_1 <= 0 and T_1 >= 0.
        let m = theta_log_theta_model();
        let p = SystemParams::new(1.0, 0.0, 1.0, 4.0).unwrap();
        let prob = MultiBlockProblem::new(p, vec![1.0], m).unwrap();
        let s = enumerate_lp_vertices(&prob, &[1.5], &[4.0]).unwrap();
        assert_eq!(s.t_list, vec![0.0]);
    }

    #[test]
    fn rejects_large_instances() {
        let m = theta_log_theta_model();
        let p = SystemParams::new(1.0, 0.0, 1.0, 4.0).unwrap();
        let prob = MultiBlockProblem::new(p, vec![0.1; 5], m).unwrap();
        assert!(enumerate_lp_vertices(&prob, &[1.5; 5], &[1.0; 5]).is_err());
    }
}
