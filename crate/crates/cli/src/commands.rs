use std::f64::consts::PI;

use furry_density::grid::GridKind;
use furry_density::hydrogenic::{self, sommerfeld_eigenvalue};
use furry_density::operator_checks::{channel_sandwich, domination_stability, hardy_check, kinetic_comparison};
use furry_density::partial_waves::{channel_numbers, dirac_spinor, m_values, sphere_inner, unsold_sum, Direction, Sigma, SphereQuadrature};
use furry_density::potential::RadialFunction;
use furry_density::radial::{bound_states, build_dirac_channel, observed_order};
use furry_density::report::{Cell, Table};
use furry_density::test_spaces::{classify, norm_k0, norm_ksdelta, NormValue};
use furry_density::thomas_fermi::{mms_probe, solve_tf, tf_small_r_check, TfSolution};
use furry_density::traces::{channel_shift_decay, feynman_hellmann_check, scott_energy_decomposition, spectral_shift};
use furry_density::{build_grid, Coupling, Error, RadialGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, ConfigError, GridSpec, RunConfig};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    /// (file stem suffix, table); an empty suffix writes `<command>.csv`.
    pub tables: Vec<(String, Table)>,
    pub results: Value,
    pub checks: Vec<Check>,
    pub summary: Vec<String>,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numeric(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(_)
            | Error::Range(_)
            | Error::InvalidChannel(_)
            | Error::InvalidState { .. }
            | Error::InvalidQuantumNumber(_)
            | Error::Subcritical { .. }
            | Error::Config(_) => RunError::Config(ConfigError::new("parameters", e.to_string())),
            other => RunError::Numeric(other.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, RunError>;

pub fn run(cmd: Command, cfg: &RunConfig) -> Res<Outcome> {
    match cmd {
        Command::Eigenvalues => eigenvalues(cfg),
        Command::Density => density(cfg),
        Command::Bounds => bounds(cfg),
        Command::FhCheck => fh_check(cfg),
        Command::Shift => shift(cfg),
        Command::Decay => decay(cfg),
        Command::Norms => norms(cfg),
        Command::Classify => classify_cmd(cfg),
        Command::Tf => tf(cfg),
        Command::Scott => scott(cfg),
        Command::Verify => verify(cfg),
    }
}

fn log_grid(r_min: f64, r_max: f64, n: usize) -> GridSpec {
    GridSpec { kind: Some(GridKind::Logarithmic), r_min: Some(r_min), r_max: Some(r_max), n_points: Some(n) }
}

fn half_grid(g: &RadialGrid) -> Res<RadialGrid> {
    Ok(build_grid(g.kind, g.r_min, g.r_max, g.n_points / 2)?)
}

fn f(x: f64) -> Cell {
    Cell::Float(x)
}

fn fmt_bound(name: &str, value: f64, op: &str, bound: f64) -> String {
    format!("{name} = {value:.6e} ({op} {bound:.3e})")
}

#[derive(Serialize)]
struct EigenRow {
    kappa: i32,
    n: u32,
    exact: f64,
    discretized: f64,
    rel_error: f64,
    rel_error_half: f64,
    order: f64,
}

fn eigen_rows(c: &Coupling, kappas: &[i32], ns: &[u32], grid: &RadialGrid) -> Res<Vec<EigenRow>> {
    let coarse = half_grid(grid)?;
    let per_kappa: Vec<Vec<EigenRow>> = kappas
        .par_iter()
        .map(|&k| -> Res<Vec<EigenRow>> {
            let ch = channel_numbers(k)?;
            let wanted: Vec<u32> = ns.iter().copied().filter(|&n| n >= ch.n_min()).collect();
            let Some(&top) = wanted.iter().max() else { return Ok(Vec::new()) };
            let count = (top - ch.n_min() + 1) as usize;
            let zero = RadialFunction::zero();
            let fine = bound_states(&build_dirac_channel(c, &ch, grid, &zero)?, count)?;
            let rough = bound_states(&build_dirac_channel(c, &ch, &coarse, &zero)?, count)?;
            wanted
                .iter()
                .map(|&n| {
                    let i = (n - ch.n_min()) as usize;
                    let exact = sommerfeld_eigenvalue(c, n, k)?;
                    let d = fine.values.get(i).copied().unwrap_or(f64::NAN);
                    let dh = rough.values.get(i).copied().unwrap_or(f64::NAN);
                    let (e, eh) = ((d - exact).abs() / exact, (dh - exact).abs() / exact);
                    Ok(EigenRow { kappa: k, n, exact, discretized: d, rel_error: e, rel_error_half: eh, order: observed_order(eh, e) })
                })
                .collect()
        })
        .collect::<Res<_>>()?;
    Ok(per_kappa.into_iter().flatten().collect())
}

fn eigen_checks(rows: &[EigenRow], gamma: f64, tol_e: f64, tol_o: f64, checks: &mut Vec<Check>) {
    let worst = rows.iter().map(|r| r.rel_error).fold(0.0f64, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
    checks.push(Check::new(
        &format!("eigenvalue relative error (gamma={gamma})"),
        worst <= tol_e,
        fmt_bound("max rel error", worst, "<=", tol_e),
    ));
    // the order is only meaningful above round-off
    let orders: Vec<f64> = rows.iter().filter(|r| r.rel_error > 1e-12).map(|r| r.order).collect();
    if !orders.is_empty() {
        let dev = orders.iter().map(|o| (o - 2.0).abs()).fold(0.0f64, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
        checks.push(Check::new(
            &format!("convergence order (gamma={gamma})"),
            dev <= tol_o,
            fmt_bound("max |order - 2|", dev, "<=", tol_o),
        ));
    }
    if let Some(g) = rows.iter().find(|r| r.kappa == 1 && r.n == 0) {
        let exact = (1.0 - gamma * gamma).sqrt();
        let e = (g.discretized - exact).abs() / exact;
        checks.push(Check::new(&format!("ground state sqrt(1-gamma^2) (gamma={gamma})"), e <= tol_e, fmt_bound("rel error", e, "<=", tol_e)));
    }
}

fn default_eigen_grid(gamma: f64, n_top: u32, k_top: u32) -> GridSpec {
    let big_n = (n_top + k_top) as f64;
    let r_max = (150.0 / gamma).max((4.0 * big_n * big_n + 40.0) / gamma);
    log_grid(if gamma > 0.5 { 1e-8 } else { 1e-5 }, r_max, 2400)
}

fn eigenvalues(cfg: &RunConfig) -> Res<Outcome> {
    let c = cfg.coupling()?;
    let kappas = cfg.kappas_or("-3..3")?;
    let ns: Vec<u32> = crate::config::parse_int_list(cfg.cutoffs.n.as_deref().unwrap_or("0..2"))
        .map_err(|m| ConfigError::new("cutoffs.n", m))?
        .into_iter()
        .map(|n| n as u32)
        .collect();
    let k_top = kappas.iter().map(|k| k.unsigned_abs()).max().unwrap_or(1);
    let grid = cfg.grid_or(default_eigen_grid(c.gamma, *ns.iter().max().unwrap_or(&0), k_top))?;
    let rows = eigen_rows(&c, &kappas, &ns, &grid)?;
    let mut table = Table::new(&["kappa", "n", "sommerfeld", "discretized", "rel_error", "rel_error_half_grid", "observed_order"])
        .meta("grid_hash", grid.hash())
        .meta("gamma", c.gamma);
    for r in &rows {
        table.push(vec![r.kappa.into(), r.n.into(), f(r.exact), f(r.discretized), f(r.rel_error), f(r.rel_error_half), f(r.order)])?;
    }
    let mut checks = Vec::new();
    eigen_checks(&rows, c.gamma, cfg.tolerances.eigen, cfg.tolerances.order, &mut checks);
    let worst = rows.iter().map(|r| r.rel_error).fold(0.0f64, f64::max);
    Ok(Outcome {
        summary: vec![
            format!("{} levels, gamma = {}, grid {} ({} points)", rows.len(), c.gamma, grid.hash(), grid.n_points),
            format!("max relative error {worst:.3e}"),
        ],
        results: json!({ "gamma": c.gamma, "grid_hash": grid.hash(), "rows": rows, "max_rel_error": worst }),
        tables: vec![(String::new(), table)],
        checks,
    })
}

fn density_table(t: &hydrogenic::DensityTable, table: &mut Table) -> Res<()> {
    for ((r, v), e) in t.radii.iter().zip(&t.values).zip(&t.truncation_estimate) {
        table.push(vec![f(*r), f(*v), f(*e), t.label.as_str().into()])?;
    }
    Ok(())
}

fn density(cfg: &RunConfig) -> Res<Outcome> {
    let c = cfg.coupling()?;
    let kmax = cfg.cutoffs.kappa_max.unwrap_or(12);
    let n_max = cfg.cutoffs.n_max.unwrap_or(25);
    let grid = cfg.grid_or(log_grid(if c.gamma > 0.9 { 1e-8 } else { 1e-6 }, 5000.0, 2500))?;
    let total = hydrogenic::total_density(&c, kmax, n_max, &grid)?;
    let mut table = Table::new(&["r", "rho", "truncation_estimate", "channel"])
        .meta("grid_hash", grid.hash())
        .meta("gamma", c.gamma)
        .meta("kappa_max", kmax)
        .meta("n_max", n_max);
    density_table(&total, &mut table)?;
    if cfg.option_bool("channels")? {
        for k in (1..=kmax as i32).flat_map(|k| [k, -k]) {
            density_table(&hydrogenic::channel_density(&c, &channel_numbers(k)?, n_max, &grid)?, &mut table)?;
        }
    }
    let mut checks = vec![Check::new(
        "density nonnegative",
        total.values.iter().all(|&v| v >= 0.0),
        "all tabulated values >= 0",
    )];
    let mut results = json!({ "gamma": c.gamma, "grid_hash": grid.hash(), "kappa_max": kmax, "n_max": n_max, "levels_used": total.levels_used });
    let mut summary = vec![format!("total density, gamma = {}, |kappa| <= {kmax}, n <= {n_max}", c.gamma)];
    let tol = cfg.tolerances.density_slope;
    if cfg.option_bool("fit_tail")? {
        let w = cfg.option_f64_list("tail_window")?.unwrap_or(vec![20.0, 100.0]);
        let slope = total.loglog_slope(w[0], w[1])?;
        checks.push(Check::new("large-r exponent -3/2", (slope + 1.5).abs() <= tol, fmt_bound("|slope + 1.5|", (slope + 1.5).abs(), "<=", tol)));
        results["tail_slope"] = json!(slope);
        results["tail_window"] = json!(w);
        summary.push(format!("large-r slope on [{}, {}]: {slope:.4}", w[0], w[1]));
    }
    if cfg.option_bool("fit_origin")? {
        let w = cfg.option_f64_list("origin_window")?.unwrap_or(vec![1e-4, 1e-2]);
        let slope = total.loglog_slope(w[0], w[1])?;
        let want = -2.0 * c.sigma_gamma;
        checks.push(Check::new("small-r exponent -2 sigma", (slope - want).abs() <= tol, fmt_bound("|slope + 2 sigma|", (slope - want).abs(), "<=", tol)));
        results["origin_slope"] = json!(slope);
        results["origin_expected"] = json!(want);
        summary.push(format!("small-r slope on [{}, {}]: {slope:.4} (expected {want:.4})", w[0], w[1]));
    }
    Ok(Outcome { tables: vec![(String::new(), table)], results, checks, summary })
}

fn default_s(c: &Coupling) -> f64 {
    if c.gamma < 15f64.sqrt() / 4.0 {
        0.75
    } else {
        0.5 + 0.5 * (1.0 - c.sigma_gamma)
    }
}

fn bounds(cfg: &RunConfig) -> Res<Outcome> {
    let c = cfg.coupling()?;
    let s = cfg.option_f64("s")?.unwrap_or_else(|| default_s(&c));
    let kmax = cfg.cutoffs.kappa_max.unwrap_or(5) as i32;
    let n_max = cfg.cutoffs.n_max.unwrap_or(20);
    let grid = cfg.grid_or(log_grid(1e-5, 3000.0, 1200))?;
    let kappas: Vec<i32> = (1..=kmax).flat_map(|k| [k, -k]).collect();
    let rep = hydrogenic::verify_theorem3_bound(&c, s, &kappas, n_max, &grid)?;
    let mut table = Table::new(&["kappa", "constant", "r_at_sup", "constant_refined", "drift"])
        .meta("grid_hash", grid.hash())
        .meta("gamma", c.gamma)
        .meta("s", s);
    for ch in &rep.channels {
        table.push(vec![ch.kappa.into(), f(ch.constant), f(ch.r_at_sup), f(ch.constant_refined), f(ch.drift)])?;
    }
    let tol = cfg.tolerances.bound_drift;
    Ok(Outcome {
        summary: vec![format!("channel bound ratio sup, s = {s}, gamma = {}, |kappa| <= {kmax}: max drift {:.3e}", c.gamma, rep.max_drift)],
        checks: vec![
            Check::new("channel bound supremum finite", rep.all_finite, "every ratio sup finite"),
            Check::new("channel bound grid stability", rep.max_drift <= tol, fmt_bound("max drift", rep.max_drift, "<=", tol)),
        ],
        results: serde_json::to_value(&rep).unwrap_or(Value::Null),
        tables: vec![(String::new(), table)],
    })
}

fn fh_check(cfg: &RunConfig) -> Res<Outcome> {
    let c = cfg.coupling()?;
    let kappas = cfg.kappas_or("1,-1,2")?;
    let (spec, u) = cfg.potential_or("power-exp:a=1,p=1,b=1")?;
    let step = cfg.option_f64("step")?.unwrap_or(1e-3);
    let grid = cfg.grid_or(log_grid(1e-4, 100.0, 200))?;
    let reps = kappas
        .par_iter()
        .map(|&k| Ok(feynman_hellmann_check(&c, &channel_numbers(k)?, &u, step, &grid)?))
        .collect::<Res<Vec<_>>>()?;
    let mut table = Table::new(&[
        "kappa", "central", "central_half", "richardson", "right_difference", "left_difference", "density_integral", "relative_gap", "bound_states",
    ])
    .meta("grid_hash", grid.hash())
    .meta("gamma", c.gamma)
    .meta("potential", &spec)
    .meta("step", step);
    let tol = cfg.tolerances.fh;
    let mut checks = Vec::new();
    for r in &reps {
        table.push(vec![
            r.kappa.into(),
            f(r.central),
            f(r.central_half),
            f(r.richardson),
            f(r.right_difference),
            f(r.left_difference),
            f(r.density_integral),
            f(r.relative_gap),
            r.bound_states.into(),
        ])?;
        checks.push(Check::new(&format!("derivative identity kappa={}", r.kappa), r.relative_gap <= tol, fmt_bound("relative gap", r.relative_gap, "<=", tol)));
    }
    Ok(Outcome {
        summary: reps.iter().map(|r| format!("kappa={:>3}: dS/dlambda = {:.10e}, integral = {:.10e}, gap {:.2e}", r.kappa, r.richardson, r.density_integral, r.relative_gap)).collect(),
        results: json!({ "gamma": c.gamma, "grid_hash": grid.hash(), "potential": spec, "reports": reps }),
        tables: vec![(String::new(), table)],
        checks,
    })
}

fn shift_checks(partials: &[f64], value: f64, gamma: f64) -> Vec<Check> {
    let tail_ok = partials.iter().skip(2).collect::<Vec<_>>().windows(2).all(|w| w[1] < w[0]);
    vec![
        Check::new(&format!("spectral shift positive (gamma={gamma})"), value > 0.0 && value.is_finite(), format!("s = {value:.10e}")),
        Check::new(&format!("kappa increments decreasing beyond 3 (gamma={gamma})"), tail_ok, "strictly decreasing from |kappa| = 3 on"),
    ]
}

fn shift(cfg: &RunConfig) -> Res<Outcome> {
    let c = cfg.coupling()?;
    let kmax = cfg.cutoffs.kappa_max.unwrap_or(2000);
    let n_explicit = cfg.cutoffs.n_max.unwrap_or(200);
    let res = spectral_shift(&c, kmax, n_explicit)?;
    let mut table = Table::new(&["kappa_abs", "increment", "partial_sum"]).meta("gamma", c.gamma).meta("kappa_max", kmax).meta("n_explicit", n_explicit);
    let g2 = c.gamma * c.gamma;
    let mut acc = 0.0;
    for (i, p) in res.kappa_partials.iter().enumerate() {
        acc += p / g2;
        table.push(vec![(i + 1).into(), f(p / g2), f(acc)])?;
    }
    Ok(Outcome {
        summary: vec![format!("s({}) = {:.12} (tail {:.2e}), s/gamma^2 = {:.6}", c.gamma, res.value, res.tail_estimate, res.value / g2)],
        checks: shift_checks(&res.kappa_partials, res.value, c.gamma),
        results: serde_json::to_value(&res).unwrap_or(Value::Null),
        tables: vec![(String::new(), table)],
    })
}

fn decay(cfg: &RunConfig) -> Res<Outcome> {
    let c = cfg.coupling()?;
    let mu = cfg.option_f64("screening_mu")?.unwrap_or(1.0);
    let v = RadialFunction::screened_coulomb(c.gamma, mu);
    let (spec, u) = cfg.potential_or("exp:a=1,b=1")?;
    let lambda = cfg.option_f64("lambda")?.unwrap_or(1e-3);
    let ks: Vec<u32> = crate::config::parse_int_list(cfg.cutoffs.kappa.as_deref().unwrap_or("4..12"))
        .map_err(|m| ConfigError::new("cutoffs.kappa", m))?
        .into_iter()
        .map(|k| k.unsigned_abs() as u32)
        .collect();
    let grid = cfg.grid_or(log_grid(1e-4, 1500.0, 300))?;
    let rep = channel_shift_decay(&c, &v, &u, lambda, &ks, &grid)?;
    let mut table = Table::new(&["kappa_abs", "shift", "shift_plus", "shift_minus"])
        .meta("grid_hash", grid.hash())
        .meta("gamma", c.gamma)
        .meta("lambda", lambda)
        .meta("potential", &spec);
    for p in &rep.points {
        table.push(vec![p.kappa_abs.into(), f(p.shift), f(p.shift_plus), f(p.shift_minus)])?;
    }
    Ok(Outcome {
        summary: vec![format!("fitted slope {:.3} over {} resolved channels (epsilon = {:.3})", rep.slope, rep.resolved, rep.epsilon)],
        checks: vec![Check::new("channel shift decay slope", rep.slope <= -1.0, fmt_bound("slope", rep.slope, "<=", -1.0))],
        results: serde_json::to_value(&rep).unwrap_or(Value::Null),
        tables: vec![(String::new(), table)],
    })
}

fn norm_cells(name: &str, s: f64, delta: f64, v: &NormValue) -> Vec<Cell> {
    vec![name.into(), f(s), f(delta), f(v.value.unwrap_or(f64::INFINITY)), v.is_finite().into(), f(v.argmax)]
}

fn norms(cfg: &RunConfig) -> Res<Outcome> {
    let (spec, u) = cfg.potential_or("coulomb-tail:alpha=1.6")?;
    let ss = cfg.option_f64_list("s")?.unwrap_or(vec![0.6, 0.75, 1.0]);
    let deltas = cfg.option_f64_list("delta")?.unwrap_or(vec![0.0]);
    let mut table = Table::new(&["norm", "s", "delta", "value", "finite", "argmax"]).meta("potential", &spec);
    let mut rows = Vec::new();
    for &s in &ss {
        let k0 = norm_k0(&u, s)?;
        table.push(norm_cells("K0", s, 0.0, &k0))?;
        rows.push(json!({ "norm": "K0", "s": s, "delta": 0.0, "value": k0.value }));
        for &d in &deltas {
            let k = norm_ksdelta(&u, s, d)?;
            table.push(norm_cells("Ks_delta", s, d, &k))?;
            rows.push(json!({ "norm": "Ks_delta", "s": s, "delta": d, "value": k.value, "argmax": k.argmax }));
        }
    }
    Ok(Outcome {
        summary: vec![format!("{} norm values for {}", rows.len(), u.tag)],
        results: json!({ "potential": spec, "tag": u.tag, "norms": rows }),
        tables: vec![(String::new(), table)],
        checks: Vec::new(),
    })
}

fn classify_cmd(cfg: &RunConfig) -> Res<Outcome> {
    let c = cfg.coupling()?;
    let (spec, u) = cfg.potential_or("coulomb-tail:alpha=1.6")?;
    let cl = classify(&u, &c)?;
    let mut table = Table::new(&["s", "k0_finite"]).meta("potential", &spec).meta("gamma", c.gamma);
    for (s, ok) in &cl.k0_finite {
        table.push(vec![f(*s), (*ok).into()])?;
    }
    let w = |x: &Option<furry_density::test_spaces::Witness>| match x {
        Some(w) => format!("yes (s={}, s'={:.4})", w.s, w.s_prime),
        None => "no witness".into(),
    };
    Ok(Outcome {
        summary: vec![
            format!("{}: coulomb-compact {}, split {}", cl.tag, cl.coulomb_compact, cl.split),
            format!("D_gamma^(0): {}", w(&cl.d0_witness)),
            format!("D: {}", w(&cl.d_witness)),
        ],
        results: json!({ "potential": spec, "classification": cl }),
        tables: vec![(String::new(), table)],
        checks: Vec::new(),
    })
}

struct TfRun {
    checks: Vec<Check>,
    results: Value,
    summary: Vec<String>,
}

fn tf_core(tf: &TfSolution, tol_charge: f64, tol_slope: f64) -> TfRun {
    let charge = tf.total_charge();
    let small = tf_small_r_check(tf);
    let phi_far = tf.phi.last().copied().unwrap_or(f64::NAN);
    let decreasing = tf.phi.windows(2).all(|w| w[1] <= w[0]);
    let e = tf.energy();
    let d = tf.coulomb_energy();
    let z73 = tf.z.powf(7.0 / 3.0);
    let unit = solve_tf().map(|t| t.energy()).unwrap_or(f64::NAN);
    let scaling = (e / z73 - unit).abs() / unit.abs();
    let rel_charge = (charge - tf.z).abs() / tf.z;
    TfRun {
        checks: vec![
            Check::new("TF neutrality", rel_charge <= tol_charge, fmt_bound("|Q - Z|/Z", rel_charge, "<=", tol_charge)),
            Check::new("TF small-r exponent", (small.slope + 1.5).abs() <= tol_slope, fmt_bound("|slope + 1.5|", (small.slope + 1.5).abs(), "<=", tol_slope)),
            Check::new("TF phi decreasing to zero", decreasing && phi_far < 1e-6, format!("phi(x_end) = {phi_far:.3e}")),
            Check::new("TF energy Z^(7/3) scaling", scaling <= 1e-12, fmt_bound("relative deviation", scaling, "<=", 1e-12)),
        ],
        results: json!({
            "z": tf.z,
            "slope0": tf.slope0,
            "x_end": tf.x_end,
            "matching_mismatch": tf.matching_mismatch,
            "total_charge": charge,
            "energy": e,
            "coulomb_energy": d,
            "energy_over_z73": e / z73,
            "coulomb_energy_over_z73": d / z73,
            "small_r": small,
        }),
        summary: vec![
            format!("slope0 = {:.15}, x_end = {:.1}", tf.slope0, tf.x_end),
            format!("Z = {}: charge {charge:.10}, E = {e:.8}, D[rho] = {d:.8}", tf.z),
            format!("small-r slope {:.5}", small.slope),
        ],
    }
}

fn mms_all(draws: usize, seed: u64, n_max: usize) -> Res<(Vec<Check>, Value)> {
    let base = solve_tf()?;
    let reps = (1..=n_max)
        .into_par_iter()
        .map(|n| -> Res<_> {
            let tf = base.scaled(n as f64)?;
            let table = tf.screening_table(1e-4, 1e3, 120)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(n as u64));
            Ok(mms_probe(&tf, &table, draws, &mut rng))
        })
        .collect::<Res<Vec<_>>>()?;
    let checks = reps
        .iter()
        .map(|r| Check::new(&format!("MMS probe N={}", r.n), r.satisfied == r.draws, format!("{}/{} satisfied, worst margin {:.3e}", r.satisfied, r.draws, r.worst_margin)))
        .collect();
    Ok((checks, serde_json::to_value(&reps).unwrap_or(Value::Null)))
}

fn tf(cfg: &RunConfig) -> Res<Outcome> {
    let z = cfg.z.unwrap_or(1.0);
    if !(z > 0.0 && z.is_finite()) {
        return Err(ConfigError::new("z", format!("must be positive, got {z}")).into());
    }
    let tf = solve_tf()?.scaled(z)?;
    let run = tf_core(&tf, cfg.tolerances.charge, cfg.tolerances.tf_slope);
    let mut profile = Table::new(&["r", "x", "phi", "rho", "charge_within"]).meta("z", z).meta("grid_hash", tf.grid.hash());
    let l = tf.length();
    for (&r, &rho) in tf.grid.nodes.iter().zip(&tf.density).step_by(4) {
        profile.push(vec![f(r), f(r / l), f(tf.phi_at(r / l)), f(rho), f(tf.charge_within(r))])?;
    }
    let n_chi = cfg.option_u64("screening_points")?.unwrap_or(40) as usize;
    let chi = tf.screening_table(1e-3, 1e2, n_chi.max(16))?;
    let half: Vec<f64> = chi.radii.par_iter().map(|&r| tf.half_radius(r)).collect::<furry_density::Result<_>>()?;
    let mut screening = Table::new(&["r", "chi", "half_radius"]).meta("z", z);
    for ((r, c), h) in chi.radii.iter().zip(&chi.values).zip(&half) {
        screening.push(vec![f(*r), f(*c), f(*h)])?;
    }
    let mut checks = run.checks;
    checks.push(Check::new("screening potential nonnegative", chi.values.iter().all(|&v| v >= 0.0), "chi >= 0 on the table"));
    let mut results = run.results;
    results["screening_at_origin"] = json!(chi.at_origin);
    let mut summary = run.summary;
    let draws = cfg.option_u64("mms_draws")?.unwrap_or(0) as usize;
    if draws > 0 {
        let (c, v) = mms_all(draws, cfg.seed.unwrap_or(0), 6)?;
        checks.extend(c);
        results["mms"] = v;
        summary.push(format!("MMS probe: {draws} draws for N = 1..6"));
    }
    Ok(Outcome { tables: vec![("profile".into(), profile), ("screening".into(), screening)], results, checks, summary })
}

fn scott(cfg: &RunConfig) -> Res<Outcome> {
    let c = if cfg.gamma.is_none() && cfg.z.is_none() && cfg.c.is_none() {
        Coupling::from_z_gamma(20.0, 0.5)?
    } else {
        cfg.coupling()?
    };
    let z = c.z.ok_or_else(|| ConfigError::new("z", "the Scott probe needs Z (give z with gamma or c)"))?;
    let l = cfg.cutoffs.l.unwrap_or(2);
    let grid = cfg.grid_or(log_grid(1e-4, 300.0, 100))?;
    let tf = solve_tf()?.scaled(z)?;
    let chi = tf.screening_table(1e-4, 1e3, 120)?;
    let rep = scott_energy_decomposition(&c, &tf, &chi, l, &grid)?;
    let mut table = Table::new(&["kappa", "screened_trace", "bare_trace"]).meta("grid_hash", grid.hash()).meta("z", z).meta("c", c.c).meta("l", l);
    for (k, s, b) in &rep.per_kappa {
        table.push(vec![(*k).into(), f(*s), f(*b)])?;
    }
    let ordered = rep.per_kappa.iter().all(|(_, s, b)| *s <= b * (1.0 + 1e-12));
    let rel = rep.discretization_error / rep.total.abs();
    let tol = cfg.tolerances.scott_disc;
    Ok(Outcome {
        summary: vec![
            format!("Z = {z}, c = {:.6}, gamma = {}, L = {l}", c.c.unwrap_or(f64::NAN), c.gamma),
            format!("unscreened {:.6}, screened {:.6}, D[rho] {:.6}", rep.unscreened, rep.screened, rep.coulomb_energy),
            format!("total {:.6} +- {:.2e}; E_TF + (1/2 - s)Z^2 = {:.6}", rep.total, rep.discretization_error, rep.corridor_center),
            format!("|total - center| / Z^(47/24) = {:.4}", rep.corridor_constant),
        ],
        checks: vec![
            Check::new("Scott probe finite", rep.total.is_finite(), format!("total = {:.10e}", rep.total)),
            Check::new("screening lowers channel traces", ordered, "tr F(-chi)_- <= tr F_- for every screened channel"),
            Check::new("Scott probe grid stability", rel <= tol, fmt_bound("relative doubled-grid change", rel, "<=", tol)),
        ],
        results: serde_json::to_value(&rep).unwrap_or(Value::Null),
        tables: vec![(String::new(), table)],
    })
}

fn unsold_checks(tol: f64) -> Res<Vec<Check>> {
    let mut worst_sum: f64 = 0.0;
    let mut worst_ortho: f64 = 0.0;
    for k in (1..=4).flat_map(|k| [k, -k]) {
        let ch = channel_numbers(k)?;
        for (t, p) in [(0.3, 1.1), (1.2, 4.0), (2.9, 0.2), (PI / 2.0, PI)] {
            let om = Direction::new(t, p);
            for sg in [Sigma::Plus, Sigma::Minus] {
                let want = 2.0 * ch.abs_kappa() as f64 / (4.0 * PI);
                worst_sum = worst_sum.max((unsold_sum(&ch, sg, om) - want).abs() / want);
            }
        }
        let quad = SphereQuadrature::for_ell(ch.ell.max(ch.ell_lower()));
        let ms: Vec<i32> = m_values(&ch).collect();
        for sa in [Sigma::Plus, Sigma::Minus] {
            for sb in [Sigma::Plus, Sigma::Minus] {
                for &ma in &ms {
                    for &mb in &ms {
                        let ip = sphere_inner(
                            &quad,
                            |o| dirac_spinor(&ch, ma, sa, o).expect("valid m").components,
                            |o| dirac_spinor(&ch, mb, sb, o).expect("valid m").components,
                        );
                        let want = if sa == sb && ma == mb { 1.0 } else { 0.0 };
                        worst_ortho = worst_ortho.max((ip.re - want).abs().max(ip.im.abs()));
                    }
                }
            }
        }
    }
    Ok(vec![
        Check::new("spinor sum rule 2|kappa|/(4 pi) per sigma", worst_sum <= tol, fmt_bound("max rel deviation", worst_sum, "<=", tol)),
        Check::new("spinor orthonormality", worst_ortho <= tol, fmt_bound("max deviation", worst_ortho, "<=", tol)),
    ])
}

fn operator_checks(tol: f64, tol_dom: f64) -> Res<Vec<Check>> {
    let g = RadialGrid::logarithmic(1e-4, 60.0, 160)?;
    let mut out = Vec::new();
    let mut worst_comp = f64::INFINITY;
    let mut worst_channel = f64::INFINITY;
    let mut worst_kin: f64 = f64::INFINITY;
    for k in (1..=3).flat_map(|k| [k, -k]) {
        let ch = channel_numbers(k)?;
        let h = hardy_check(&ch, &g)?;
        worst_comp = worst_comp.min(h.hardy_upper).min(h.hardy_lower);
        // 2p²/κ² ≥ r^{−2} needs (|κ| − ½)² ≥ κ²/2, i.e. |κ| ≥ 2
        if k.abs() >= 2 {
            worst_channel = worst_channel.min(h.channel_form);
        }
        for a in [0.5, (k * k) as f64] {
            let kc = kinetic_comparison(&ch, &g, a)?;
            worst_kin = worst_kin.min(kc.eigmin / kc.scale);
        }
    }
    out.push(Check::new("component Hardy inequalities", worst_comp >= -tol, fmt_bound("min ratio - 1", worst_comp, ">=", -tol)));
    out.push(Check::new("channel Hardy inequality |kappa| >= 2", worst_channel >= -tol, fmt_bound("min ratio - 1", worst_channel, ">=", -tol)));
    out.push(Check::new("kinetic energy comparison", worst_kin >= -tol, fmt_bound("eigmin/scale", worst_kin, ">=", -tol)));
    let dg = RadialGrid::logarithmic(1e-5, 60.0, 120)?;
    let ds = domination_stability(0.5, &channel_numbers(1)?, 0.75, &dg)?;
    out.push(Check::new(
        "domination constant grid stability",
        ds.relative_change <= tol_dom,
        fmt_bound("relative change", ds.relative_change, "<=", tol_dom),
    ));
    let sg = RadialGrid::logarithmic(1e-4, 60.0, 120)?;
    let mut worst_sw = f64::INFINITY;
    let mut gated = Vec::new();
    for u in [RadialFunction::exp(1.0, 1.0), RadialFunction::cutoff_coulomb(0.1, f64::INFINITY, 5.0)] {
        let mut n = 0;
        for k in [1, -1, 2] {
            for m in [0.1, 1.0, 10.0, 100.0] {
                let rep = channel_sandwich(0.5, &channel_numbers(k)?, &u, &sg, 0.75, 0.6, m)?;
                // the conclusion is only claimed under the norm hypothesis
                if rep.hypothesis_holds() {
                    worst_sw = worst_sw.min(rep.lower_eigmin.min(rep.upper_eigmin) / rep.scale);
                    n += 1;
                }
            }
        }
        gated.push(n);
    }
    out.push(Check::new(
        "a priori sandwich",
        worst_sw >= -tol && gated.iter().all(|&n| n > 0),
        format!("{} over {:?} cases meeting the norm hypothesis", fmt_bound("eigmin/scale", worst_sw, ">=", -tol), gated),
    ));
    Ok(out)
}

fn verify(cfg: &RunConfig) -> Res<Outcome> {
    let t = &cfg.tolerances;
    let mut checks = Vec::new();
    for gamma in [0.1, 0.5, 0.9] {
        let c = Coupling::from_gamma(gamma)?;
        let kappas: Vec<i32> = (1..=3).flat_map(|k| [k, -k]).collect();
        let g = build_grid(GridKind::Logarithmic, if gamma > 0.5 { 1e-8 } else { 1e-5 }, 150.0 / gamma, 2400)?;
        let rows = eigen_rows(&c, &kappas, &[0, 1, 2, 3], &g)?;
        // lowest three states of each channel
        let rows: Vec<EigenRow> = rows.into_iter().filter(|r| r.n < channel_numbers(r.kappa).map(|c| c.n_min()).unwrap_or(0) + 3).collect();
        eigen_checks(&rows, gamma, t.eigen, t.order, &mut checks);
    }

    let c = Coupling::from_gamma(0.5)?;
    let fh_grid = RadialGrid::logarithmic(1e-4, 100.0, 200)?;
    for u in [RadialFunction::power_exp(1.0, 1.0, 1.0), RadialFunction::cutoff_coulomb(0.3, f64::INFINITY, 5.0)] {
        for k in [1, -1, 2] {
            let r = feynman_hellmann_check(&c, &channel_numbers(k)?, &u, 1e-3, &fh_grid)?;
            checks.push(Check::new(&format!("derivative identity {} kappa={k}", u.tag), r.relative_gap <= t.fh, fmt_bound("relative gap", r.relative_gap, "<=", t.fh)));
        }
    }

    let tot = hydrogenic::total_density(&c, 12, 25, &RadialGrid::logarithmic(1e-6, 5000.0, 2500)?)?;
    let slope = tot.loglog_slope(20.0, 100.0)?;
    checks.push(Check::new("large-r exponent -3/2", (slope + 1.5).abs() <= t.density_slope, fmt_bound("slope", slope, "~", -1.5)));
    let c97 = Coupling::from_gamma(0.97)?;
    let g97 = RadialGrid::logarithmic(1e-8, 2000.0, 2500)?;
    let tot97 = hydrogenic::total_density(&c97, 3, 10, &g97)?;
    let slope = tot97.loglog_slope(1e-4, 1e-2)?;
    let want = -2.0 * c97.sigma_gamma;
    checks.push(Check::new("small-r exponent -2 sigma", (slope - want).abs() <= t.density_slope, fmt_bound("slope", slope, "~", want)));
    let mut bounded = true;
    for k in [2, -2, 3, -3] {
        let d = hydrogenic::channel_density(&c97, &channel_numbers(k)?, 10, &g97)?;
        // bounded near 0: the density does not grow as r decreases
        bounded &= d.value_at(1e-6) <= d.value_at(1e-4) && d.value_at(1e-6).is_finite();
    }
    checks.push(Check::new("channels |kappa| >= 2 bounded at the origin", bounded, "rho(1e-6) <= rho(1e-4)"));

    let rep = hydrogenic::verify_theorem3_bound(&c, 0.75, &(1..=5).flat_map(|k| [k, -k]).collect::<Vec<_>>(), 20, &RadialGrid::logarithmic(1e-5, 3000.0, 1200)?)?;
    checks.push(Check::new("channel bound grid stability", rep.all_finite && rep.max_drift <= t.bound_drift, fmt_bound("max drift", rep.max_drift, "<=", t.bound_drift)));

    let mut ratios = Vec::new();
    for gamma in [0.05, 0.1, 0.2] {
        let r = spectral_shift(&Coupling::from_gamma(gamma)?, 2000, 200)?;
        checks.extend(shift_checks(&r.kappa_partials, r.value, gamma));
        ratios.push(r.value / (gamma * gamma));
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    checks.push(Check::new("s/gamma^2 drift", hi / lo - 1.0 < 0.1, fmt_bound("max/min - 1", hi / lo - 1.0, "<", 0.1)));
    let mut prev = 0.0;
    let mut increasing = true;
    for gamma in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let v = spectral_shift(&Coupling::from_gamma(gamma)?, 2000, 200)?.value;
        increasing &= v > prev;
        prev = v;
    }
    checks.push(Check::new("spectral shift increasing in gamma", increasing, "gamma = 0.1, 0.3, ..., 0.9"));

    let dr = channel_shift_decay(
        &c,
        &RadialFunction::screened_coulomb(0.5, 1.0),
        &RadialFunction::exp(1.0, 1.0),
        1e-3,
        &(4..=12).collect::<Vec<u32>>(),
        &RadialGrid::logarithmic(1e-4, 1500.0, 300)?,
    )?;
    checks.push(Check::new("channel shift decay slope", dr.slope <= -1.0, fmt_bound("slope", dr.slope, "<=", -1.0)));

    checks.extend(operator_checks(t.matrix, t.domination)?);

    for (alpha, want_d) in [(1.2, false), (1.6, true)] {
        let cl = classify(&RadialFunction::coulomb_power_tail(1.0, alpha), &c)?;
        checks.push(Check::new(
            &format!("classification alpha={alpha}"),
            cl.d0_witness.is_some() && cl.d_witness.is_some() == want_d,
            format!("D_gamma^(0) {}, D {}", cl.d0_witness.is_some(), cl.d_witness.is_some()),
        ));
    }

    let base = solve_tf()?;
    checks.push(Check::new("TF initial slope", (base.slope0 + 1.588_071_0).abs() <= 1e-4, format!("slope0 = {:.12}", base.slope0)));
    checks.extend(tf_core(&base, t.charge, t.tf_slope).checks);
    let draws = cfg.option_u64("mms_draws")?.unwrap_or(10_000) as usize;
    checks.extend(mms_all(draws, cfg.seed.unwrap_or(0), 6)?.0);

    checks.extend(unsold_checks(t.unsold)?);

    let mut table = Table::new(&["invariant", "passed", "detail"]);
    for ch in &checks {
        table.push(vec![ch.name.as_str().into(), ch.passed.into(), ch.detail.as_str().into()])?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    Ok(Outcome {
        summary: vec![format!("{} invariants, {} failed", checks.len(), failed)],
        results: json!({ "invariants": checks.len(), "failed": failed }),
        tables: vec![(String::new(), table)],
        checks,
    })
}
