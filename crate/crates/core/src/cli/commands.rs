//! Command bodies. Each returns the full CSV text so output stays in
//! deterministic order whatever the thread count.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::args::{GridDims, SweepSpec, SweepVar};
use super::format::num;
use crate::decoder_energy::{power_law_model, theta_log_theta_model, DecoderEnergyModel};
use crate::error::{Error, Result};
use crate::multi_block::{
    g_dot_at, iterative_solver, lp_step, solve_p8, suffix_condition, threshold_u, MultiBlockProblem,
};
use crate::oracle::{
    enumerate_lp_vertices, grid_search_p2, grid_search_p8, random_lp_instance, random_params, GridSpec,
    MAX_ORACLE_BLOCKS,
};
use crate::params::SystemParams;
use crate::single_block::{algorithm1, constant_power_baseline, CaseLabel, SingleBlockOutcome};

pub const SOLVE_SINGLE_HEADER: &str = "eta,g,e_avg,e_lim,model,case,theta,e_i,e_e,alpha,rate,bits_per_use";
pub const SWEEP_SINGLE_HEADER: &str =
    "eta,g,e_avg,e_lim,model,case,theta,e_i,e_e,alpha,rate,bits_per_use,baseline_bits_per_use,ratio";
pub const SOLVE_MULTI_HEADER: &str = "block,g,t,case,theta,e_i,e_e,alpha,rate,bits_per_use";
pub const REGION_MAP_HEADER: &str = "e_lim,e_avg,case,margin";
pub const SWEEP_MULTI_HEADER: &str = "e_avg,bound,total,achieved,theorem2,g_dot,u";
pub const VERIFY_HEADER: &str = "check,instances,passed,max_error,tolerance,status";

/// Quotes a field containing a comma or quote.
fn field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn meta(out: &mut String, key: &str, value: impl std::fmt::Display) {
    writeln!(out, "# {key}={value}").expect("write to string");
}

fn solution_fields(p: &SystemParams, model: &DecoderEnergyModel, o: &SingleBlockOutcome) -> String {
    let f = &o.full;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        num(p.eta),
        num(p.g),
        num(p.e_avg),
        num(p.e_lim),
        field(&model.to_string()),
        o.best.case,
        num(f.theta),
        num(f.e_i),
        num(f.e_e),
        num(f.alpha),
        num(f.rate),
        num(f.bits_per_use)
    )
}

fn solve_checked(p: &SystemParams, model: &DecoderEnergyModel) -> Result<SingleBlockOutcome> {
    let out = algorithm1(p, model)?;
    out.full.check_invariants(p, model)?;
    Ok(out)
}

pub fn solve_single(p: &SystemParams, model: &DecoderEnergyModel) -> Result<String> {
    p.validate()?;
    let out = solve_checked(p, model)?;
    let mut s = String::new();
    meta(&mut s, "command", "solve-single");
    meta(&mut s, "n", p.n);
    meta(&mut s, "total_bits", num(out.full.total_bits));
    writeln!(s, "{SOLVE_SINGLE_HEADER}").expect("write to string");
    writeln!(s, "{}", solution_fields(p, model, &out)).expect("write to string");
    Ok(s)
}

fn with_var(base: &SystemParams, var: SweepVar, value: f64) -> SystemParams {
    let mut p = *base;
    match var {
        SweepVar::Eta => p.eta = value,
        SweepVar::G => p.g = value,
        SweepVar::EAvg => p.e_avg = value,
        SweepVar::ELim => p.e_lim = value,
    }
    p
}

/// Optimized versus constant-power rows along one parameter. Points with
/// invalid parameters get the label `invalid` and empty numeric fields.
pub fn sweep_single(base: &SystemParams, model: &DecoderEnergyModel, sweep: &SweepSpec) -> Result<String> {
    let rows = sweep
        .values()
        .par_iter()
        .map(|&v| -> Result<String> {
            let p = with_var(base, sweep.var, v);
            if p.validate().is_err() {
                return Ok(format!(
                    "{},{},{},{},{},invalid,,,,,,,,",
                    num(p.eta),
                    num(p.g),
                    num(p.e_avg),
                    num(p.e_lim),
                    field(&model.to_string())
                ));
            }
            let out = solve_checked(&p, model)?;
            let base_sol = constant_power_baseline(&p, model)?;
            base_sol.check_invariants(&p, model)?;
            let ratio = out.full.bits_per_use / base_sol.bits_per_use;
            Ok(format!(
                "{},{},{}",
                solution_fields(&p, model, &out),
                num(base_sol.bits_per_use),
                num(ratio)
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::new();
    meta(&mut s, "command", "sweep-single");
    meta(&mut s, "sweep", sweep);
    meta(&mut s, "model", model);
    writeln!(s, "{SWEEP_SINGLE_HEADER}").expect("write to string");
    for r in rows {
        writeln!(s, "{r}").expect("write to string");
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCell {
    pub e_lim: f64,
    pub e_avg: f64,
    /// `None` for parameter combinations that are not valid.
    pub case: Option<CaseLabel>,
    pub margin: f64,
}

/// Winning case over a `rows x cols` grid of cell centres: `e_lim` runs over
/// `(0, e_lim_max)` by row and `e_avg` over the same interval by column.
pub fn region_map(
    eta: f64,
    g: f64,
    e_lim_max: f64,
    dims: GridDims,
    model: &DecoderEnergyModel,
) -> Result<Vec<RegionCell>> {
    if !(e_lim_max.is_finite() && e_lim_max > 0.0) {
        return Err(Error::InvalidParams(format!(
            "e_lim axis maximum must be > 0, got {e_lim_max}"
        )));
    }
    let centre = |k: usize, count: usize| e_lim_max * (k as f64 + 0.5) / count as f64;
    (0..dims.rows * dims.cols)
        .into_par_iter()
        .map(|idx| {
            let (r, c) = (idx / dims.cols, idx % dims.cols);
            let e_lim = centre(r, dims.rows);
            let e_avg = centre(c, dims.cols);
            let Ok(p) = SystemParams::new(eta, g, e_avg, e_lim) else {
                return Ok(RegionCell {
                    e_lim,
                    e_avg,
                    case: None,
                    margin: f64::NAN,
                });
            };
            let out = solve_checked(&p, model)?;
            Ok(RegionCell {
                e_lim,
                e_avg,
                case: Some(out.best.case),
                margin: out.margin(),
            })
        })
        .collect()
}

pub fn region_map_csv(eta: f64, g: f64, e_lim_max: f64, dims: GridDims, model: &DecoderEnergyModel) -> Result<String> {
    let cells = region_map(eta, g, e_lim_max, dims, model)?;
    let mut s = String::new();
    meta(&mut s, "command", "region-map");
    meta(&mut s, "eta", num(eta));
    meta(&mut s, "g", num(g));
    meta(&mut s, "e_lim_max", num(e_lim_max));
    meta(&mut s, "grid", dims);
    meta(&mut s, "model", model);
    writeln!(s, "{REGION_MAP_HEADER}").expect("write to string");
    for c in cells {
        match c.case {
            Some(case) => writeln!(s, "{},{},{},{}", num(c.e_lim), num(c.e_avg), case, num(c.margin)),
            None => writeln!(s, "{},{},invalid,", num(c.e_lim), num(c.e_avg)),
        }
        .expect("write to string");
    }
    Ok(s)
}

fn multi_problem(base: &SystemParams, g_list: Vec<f64>, model: &DecoderEnergyModel) -> Result<MultiBlockProblem> {
    MultiBlockProblem::new(*base, g_list, *model)
}

pub fn solve_multi(base: &SystemParams, g_list: Vec<f64>, model: &DecoderEnergyModel) -> Result<String> {
    let prob = multi_problem(base, g_list, model)?;
    let p8 = solve_p8(&prob.params, model)?;
    let gd = g_dot_at(p8.theta, p8.e_i, &prob.params, model);
    let sol = iterative_solver(&prob)?;
    let mut s = String::new();
    meta(&mut s, "command", "solve-multi");
    meta(&mut s, "blocks", prob.blocks());
    meta(&mut s, "eta", num(prob.params.eta));
    meta(&mut s, "e_avg", num(prob.params.e_avg));
    meta(&mut s, "e_lim", num(prob.params.e_lim));
    meta(&mut s, "model", model);
    meta(&mut s, "g_dot", num(gd));
    meta(&mut s, "theorem2", suffix_condition(&prob.g_list, gd));
    meta(&mut s, "bound", num(sol.bound));
    meta(&mut s, "total", num(sol.total_bits_per_use));
    meta(&mut s, "achieved", sol.bound_achieved);
    meta(&mut s, "iterations", sol.history.len());
    writeln!(s, "{SOLVE_MULTI_HEADER}").expect("write to string");
    for (i, (f, case)) in sol.per_block.iter().zip(&sol.per_block_case).enumerate() {
        let t = sol.schedule.t_list[i];
        f.check_invariants(&prob.block_params(i, t), model)?;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            num(prob.g_list[i]),
            num(t),
            case,
            num(f.theta),
            num(f.e_i),
            num(f.e_e),
            num(f.alpha),
            num(f.rate),
            num(f.bits_per_use)
        )
        .expect("write to string");
    }
    Ok(s)
}

/// Upper bound versus iterative solver along `e_avg`. The threshold `u` is
/// reported only for uniform overheads, where it is defined.
pub fn sweep_multi(
    base: &SystemParams,
    g_list: Vec<f64>,
    model: &DecoderEnergyModel,
    sweep: &SweepSpec,
) -> Result<String> {
    if sweep.var != SweepVar::EAvg {
        return Err(Error::InvalidParams(format!(
            "sweep-multi sweeps e_avg only, got {}",
            sweep.var.name()
        )));
    }
    let uniform = g_list.windows(2).all(|w| w[0] == w[1]);
    let u = if uniform {
        let probe = SystemParams { g: 0.0, ..*base };
        threshold_u(&probe, model, g_list[0])?
    } else {
        f64::NAN
    };
    let rows = sweep
        .values()
        .par_iter()
        .map(|&e_avg| -> Result<String> {
            let p = SystemParams { e_avg, ..*base };
            let Ok(prob) = multi_problem(&p, g_list.clone(), model) else {
                return Ok(format!("{},invalid,,,,,{}", num(e_avg), num(u)));
            };
            let p8 = solve_p8(&prob.params, model)?;
            let gd = g_dot_at(p8.theta, p8.e_i, &prob.params, model);
            let sol = iterative_solver(&prob)?;
            for (i, f) in sol.per_block.iter().enumerate() {
                f.check_invariants(&prob.block_params(i, sol.schedule.t_list[i]), model)?;
            }
            Ok(format!(
                "{},{},{},{},{},{},{}",
                num(e_avg),
                num(sol.bound),
                num(sol.total_bits_per_use),
                sol.bound_achieved,
                suffix_condition(&prob.g_list, gd),
                num(gd),
                num(u)
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::new();
    meta(&mut s, "command", "sweep-multi");
    meta(&mut s, "blocks", g_list.len());
    meta(&mut s, "eta", num(base.eta));
    meta(&mut s, "e_lim", num(base.e_lim));
    meta(
        &mut s,
        "g_list",
        g_list.iter().map(|g| num(*g)).collect::<Vec<_>>().join(";"),
    );
    meta(&mut s, "model", model);
    meta(&mut s, "sweep", sweep);
    meta(&mut s, "u", num(u));
    writeln!(s, "{SWEEP_MULTI_HEADER}").expect("write to string");
    for r in rows {
        writeln!(s, "{r}").expect("write to string");
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub instances: usize,
    pub grid: GridDims,
    /// Multiplies every tolerance; values below 1 tighten the checks.
    pub tol_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            instances: 100,
            grid: GridDims { rows: 400, cols: 400 },
            tol_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub csv: String,
    /// One line per failing instance with its full parameters.
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Check {
    name: &'static str,
    tolerance: f64,
    /// `(error, description)` per instance.
    results: Vec<(f64, String)>,
}

fn verify_models() -> Vec<DecoderEnergyModel> {
    vec![
        theta_log_theta_model(),
        power_law_model(1.0, 2.0).expect("valid built-in model"),
    ]
}

fn describe_params(p: &SystemParams, m: &DecoderEnergyModel) -> String {
    format!("eta={} g={} e_avg={} e_lim={} model={m}", p.eta, p.g, p.e_avg, p.e_lim)
}

/// Oracle-versus-solver comparisons on instances drawn from `cfg.seed`.
pub fn verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    if cfg.instances == 0 {
        return Err(Error::InvalidParams("verify needs at least one instance".into()));
    }
    if cfg.grid.rows < 2 || cfg.grid.cols < 2 {
        return Err(Error::InvalidParams("verify grid needs at least 2x2 points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let models = verify_models();
    let spec = GridSpec::new(cfg.grid.rows, cfg.grid.cols);

    let singles: Vec<(SystemParams, DecoderEnergyModel)> = (0..cfg.instances)
        .flat_map(|_| {
            let p = random_params(&mut rng);
            models.iter().map(move |m| (p, *m)).collect::<Vec<_>>()
        })
        .collect();
    let lps: Vec<_> = (0..cfg.instances)
        .map(|k| random_lp_instance(&mut rng, &models[k % models.len()], MAX_ORACLE_BLOCKS))
        .collect();
    let n1_seeds: Vec<u64> = (0..cfg.instances).map(|_| rng.gen()).collect();

    let p2 = singles
        .par_iter()
        .map(|(p, m)| -> Result<(f64, String)> {
            let solved = algorithm1(p, m)?.best.objective;
            let grid = grid_search_p2(p, m, &spec)?.value;
            Ok(((solved - grid).abs(), describe_params(p, m)))
        })
        .collect::<Result<Vec<_>>>()?;
    let p8 = singles
        .par_iter()
        .map(|(p, m)| -> Result<(f64, String)> {
            let solved = solve_p8(p, m)?.value;
            let grid = grid_search_p8(p, m, &spec)?.value;
            Ok(((solved - grid).abs(), describe_params(p, m)))
        })
        .collect::<Result<Vec<_>>>()?;
    let lp = lps
        .par_iter()
        .map(|(prob, thetas, e_is)| -> Result<(f64, String)> {
            let weights: Vec<f64> = thetas
                .iter()
                .zip(e_is)
                .map(|(&t, &e)| crate::multi_block::o_tilde(t, e, &prob.params, &prob.model))
                .collect();
            let value = |t: &[f64]| -> f64 { weights.iter().zip(t).map(|(w, x)| w * x).sum() };
            let a = lp_step(prob, thetas, e_is)?;
            let b = enumerate_lp_vertices(prob, thetas, e_is)?;
            let desc = format!(
                "{} g_list={:?} thetas={thetas:?} e_is={e_is:?}",
                describe_params(&prob.params, &prob.model),
                prob.g_list
            );
            Ok(((value(&a.t_list) - value(&b.t_list)).abs(), desc))
        })
        .collect::<Result<Vec<_>>>()?;
    let n1 = n1_seeds
        .par_iter()
        .enumerate()
        .map(|(k, &seed)| -> Result<(f64, String)> {
            let p = random_params(&mut ChaCha8Rng::seed_from_u64(seed));
            let m = models[k % models.len()];
            let prob = MultiBlockProblem::new(p, vec![p.g], m)?;
            let multi = iterative_solver(&prob)?.total_bits_per_use;
            let single = algorithm1(&p, &m)?.full.bits_per_use;
            Ok(((multi - single).abs(), describe_params(&p, &m)))
        })
        .collect::<Result<Vec<_>>>()?;

    let checks = [
        Check {
            name: "p2_grid",
            tolerance: 1e-3,
            results: p2,
        },
        Check {
            name: "p8_grid",
            tolerance: 1e-3,
            results: p8,
        },
        Check {
            name: "lp_vertices",
            tolerance: 1e-10,
            results: lp,
        },
        Check {
            name: "multi_n1",
            tolerance: 1e-10,
            results: n1,
        },
    ];

    let mut csv = String::new();
    meta(&mut csv, "command", "verify");
    meta(&mut csv, "seed", cfg.seed);
    meta(&mut csv, "instances", cfg.instances);
    meta(&mut csv, "grid", cfg.grid);
    writeln!(csv, "{VERIFY_HEADER}").expect("write to string");
    let mut failures = Vec::new();
    for c in &checks {
        let tol = c.tolerance * cfg.tol_scale;
        let mut passed = 0;
        let mut max_err: f64 = 0.0;
        for (err, desc) in &c.results {
            max_err = max_err.max(*err);
            if *err <= tol {
                passed += 1;
            } else {
                failures.push(format!("{}: error {} > {}: {desc}", c.name, num(*err), num(tol)));
            }
        }
        let status = if passed == c.results.len() { "pass" } else { "fail" };
        writeln!(
            csv,
            "{},{},{},{},{},{status}",
            c.name,
            c.results.len(),
            passed,
            num(max_err),
            num(tol)
        )
        .expect("write to string");
    }
    Ok(VerifyReport { csv, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(field("theta-log-theta"), "theta-log-theta");
        assert_eq!(field("power-law:c=1,p=2"), "\"power-law:c=1,p=2\"");
    }

    #[test]
    fn sweep_marks_invalid_points() {
        let base = SystemParams::new(0.5, 0.0, 0.5, 1.0).unwrap();
        let sweep: SweepSpec = "e_avg:0.5:1.5:0.5".parse().unwrap();
        let csv = sweep_single(&base, &theta_log_theta_model(), &sweep).unwrap();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 3);
        assert!(!rows[0].contains("invalid"));
        assert!(rows[1].contains("invalid") && rows[2].contains("invalid"));
    }

    #[test]
    fn region_cells_are_centres() {
        let cells = region_map(0.5, 0.0, 4.0, GridDims { rows: 2, cols: 2 }, &theta_log_theta_model()).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!((cells[0].e_lim, cells[0].e_avg), (1.0, 1.0));
        assert!(cells[0].case.is_none());
        assert_eq!((cells[2].e_lim, cells[2].e_avg), (3.0, 1.0));
        assert!(cells[2].case.is_some());
    }
}
