use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use trilateral_cds::experiments::{
    emit_report, run_calibration, run_collateral_study, run_figure1, run_table3, run_table4,
    Experiment, Parties, Report, ScenarioConfig,
};
use trilateral_cds::hazard::CreditQuality;
use trilateral_cds::joint_default::DependenceSpec;
use trilateral_cds::pricer::{
    CollateralModel, CollateralSpec, TrilateralModel, ValuationResult, BUYER_STREAM,
};
use trilateral_cds::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "trilateral-cds", version, about = "CDS valuation with defaultable buyer, seller and reference entity")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Scenario configuration (JSON). Built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Market snapshot (CSV or JSON); overrides the config.
    #[arg(long, global = true)]
    market: Option<PathBuf>,
    /// Random seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo paths; overrides the config.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit CIR hazard parameters to the shifted credit curve.
    Calibrate {
        /// Qualities to fit (repeatable); all risky qualities when absent.
        #[arg(long = "quality")]
        qualities: Vec<CreditQuality>,
        /// Reference recovery used inside the calibration breakeven formula.
        #[arg(long)]
        recovery: Option<f64>,
        /// Also write simulated hazard paths of each quality to `<out>/paths_<quality>.bin`.
        #[arg(long)]
        export_paths: bool,
    },
    /// Value one contract.
    Price(PriceArgs),
    /// Breakevens with a risky buyer against a default-free seller.
    Table3,
    /// Breakevens with a risky seller against a default-free buyer.
    Table4,
    /// Breakeven sensitivity to each dependence parameter.
    Figure1,
    /// Residual exposure of a fully collateralized contract across seller–reference correlations.
    Collateral,
}

#[derive(Args, Debug)]
struct PriceArgs {
    #[arg(long)]
    buyer: Option<CreditQuality>,
    #[arg(long)]
    seller: Option<CreditQuality>,
    #[arg(long)]
    reference: Option<CreditQuality>,
    /// Premium to value at; the config's contract spread when absent.
    #[arg(long)]
    spread: Option<f64>,
    /// Contract template (JSON); overrides the config's contract.
    #[arg(long)]
    contract: Option<PathBuf>,
    /// Dependence parameters (JSON with rho_ab, rho_ac, rho_bc, zeta_abc).
    #[arg(long)]
    dependence: Option<PathBuf>,
    /// Collateral agreement; only `full` is supported.
    #[arg(long)]
    collateral: Option<String>,
    /// Solve for the breakeven spread as well.
    #[arg(long)]
    breakeven: bool,
}

#[derive(Serialize)]
struct PriceOutput<'a> {
    config_hash: &'a str,
    parties: Parties,
    dependence: DependenceSpec,
    spread: f64,
    result: &'a ValuationResult,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(m) = &common.market {
        cfg.market = Some(m.clone());
    }
    if let Some(s) = common.seed {
        cfg.mc.seed = s;
    }
    if let Some(n) = common.paths {
        cfg.mc.n_paths = n;
    }
    if let Some(d) = &common.out_dir {
        cfg.out_dir = d.clone();
    }
    Ok(cfg)
}

fn write_reports(reports: &[Report], dir: &Path) -> Result<()> {
    for path in emit_report(reports, dir)? {
        eprintln!("wrote {}", path.display());
    }
    for r in reports {
        print!("{}", r.summary());
        println!();
    }
    Ok(())
}

fn write_json(value: &impl Serialize, dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
    eprintln!("wrote {}", path.display());
    Ok(path)
}

fn price(mut cfg: ScenarioConfig, args: &PriceArgs) -> Result<()> {
    if let Some(path) = &args.contract {
        cfg.contract = read_json(path)?;
    }
    if let Some(s) = args.spread {
        cfg.contract.spread = s;
    }
    if let Some(path) = &args.dependence {
        cfg.dependence = read_json(path)?;
    }
    for (slot, q) in [
        (&mut cfg.parties.buyer, args.buyer),
        (&mut cfg.parties.seller, args.seller),
        (&mut cfg.parties.reference, args.reference),
    ] {
        if let Some(q) = q {
            *slot = q;
        }
    }
    let collateral = match args.collateral.as_deref() {
        None => None,
        Some("full") => Some(CollateralSpec::full()),
        Some(other) => {
            return Err(Error::Schema(format!(
                "unsupported collateral `{other}`; only `full` is priced"
            )))
        }
    };
    let exp = Experiment::new(cfg)?;
    let cfg = &exp.config;
    let contract = exp.contract()?;
    let recovery = exp.recovery()?;
    let paths = exp.scenario(&cfg.parties)?;
    let discount = &exp.market.discount_curve;
    let mut result = match &collateral {
        Some(c) => {
            let model = CollateralModel::new(&contract, &paths, &cfg.dependence, &recovery, discount, c, &cfg.mc)?;
            let mut r = model.price(contract.spread)?;
            if args.breakeven {
                let b = model.breakeven()?;
                r.breakeven_spread = b.breakeven_spread;
                r.breakeven_std_error = b.breakeven_std_error;
            }
            r
        }
        None => {
            let model = TrilateralModel::new(&contract, &paths, &cfg.dependence, &recovery, discount, &cfg.mc)?;
            let mut r = model.price(contract.spread)?;
            if args.breakeven {
                let b = model.breakeven()?;
                r.breakeven_spread = b.breakeven_spread;
                r.breakeven_std_error = b.breakeven_std_error;
            }
            r
        }
    };
    result.path_values.clear();
    result.path_annuity.clear();
    let out = PriceOutput {
        config_hash: exp.config_hash(),
        parties: cfg.parties,
        dependence: cfg.dependence,
        spread: contract.spread,
        result: &result,
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    write_json(&out, &cfg.out_dir, "price.json")?;
    if !result.legs.is_empty() {
        let mut w = csv::Writer::from_writer(Vec::new());
        for leg in &result.legs {
            w.serialize(leg)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8");
        let path = cfg.out_dir.join("price_legs.csv");
        fs::write(&path, format!("# config_hash={}\n{body}", exp.config_hash()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn calibrate(mut cfg: ScenarioConfig, qualities: &[CreditQuality], recovery: Option<f64>, export: bool) -> Result<()> {
    if !qualities.is_empty() {
        cfg.qualities = qualities.to_vec();
    }
    if let Some(r) = recovery {
        cfg.calibration.recovery = r;
        cfg.contract.recovery.reference = r;
    }
    let exp = Experiment::new(cfg)?;
    let report = run_calibration(&exp)?;
    let fits = exp
        .config
        .qualities
        .iter()
        .filter(|q| **q != CreditQuality::RiskFree)
        .map(|&q| Ok((q.label(), exp.calibration(q)?)))
        .collect::<Result<std::collections::BTreeMap<_, _>>>()?;
    #[derive(Serialize)]
    struct Out<'a, T> {
        config_hash: &'a str,
        fits: T,
    }
    let out = Out { config_hash: exp.config_hash(), fits };
    write_json(&out, &exp.config.out_dir, "calibration.json")?;
    write_reports(&[report], &exp.config.out_dir)?;
    if export {
        for &q in &exp.config.qualities {
            if let Some(set) = exp.paths(q, BUYER_STREAM)? {
                let path = exp.config.out_dir.join(format!("paths_{}.bin", q.label()));
                set.write_binary(std::io::BufWriter::new(fs::File::create(&path)?))?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Calibrate { qualities, recovery, export_paths } => calibrate(cfg, &qualities, recovery, export_paths),
        Command::Price(args) => price(cfg, &args),
        Command::Table3 => {
            let exp = Experiment::new(cfg)?;
            let t = run_table3(&exp)?;
            write_reports(&[t.to_report(exp.config_hash())], &exp.config.out_dir)
        }
        Command::Table4 => {
            let exp = Experiment::new(cfg)?;
            let t = run_table4(&exp)?;
            write_reports(&[t.to_report(exp.config_hash())], &exp.config.out_dir)
        }
        Command::Figure1 => {
            let exp = Experiment::new(cfg)?;
            let f = run_figure1(&exp)?;
            #[derive(Serialize)]
            struct Clips<'a> {
                config_hash: &'a str,
                requested_base: DependenceSpec,
                base: DependenceSpec,
                sweeps: Vec<serde_json::Value>,
            }
            let clips = Clips {
                config_hash: exp.config_hash(),
                requested_base: f.requested_base,
                base: f.base,
                sweeps: f
                    .sweeps
                    .iter()
                    .map(|s| {
                        serde_json::json!({
                            "axis": s.axis,
                            "interval": s.interval,
                            "clipped": s.clipped,
                        })
                    })
                    .collect(),
            };
            write_json(&clips, &exp.config.out_dir, "figure1_admissibility.json")?;
            write_reports(&f.to_reports(exp.config_hash()), &exp.config.out_dir)
        }
        Command::Collateral => {
            let exp = Experiment::new(cfg)?;
            let c = run_collateral_study(&exp)?;
            write_reports(&[c.to_report(exp.config_hash())], &exp.config.out_dir)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
