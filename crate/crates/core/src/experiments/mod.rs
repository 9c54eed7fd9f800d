//! Scripted, seeded reproductions of the numerical study: calibration,
//! counterparty credit-quality tables, dependence sweeps and the
//! collateralization study.

mod config;
mod report;
mod runs;

pub use config::{
    CollateralStudyConfig, ContractTemplate, HazardSource, Parties, RecoveryConfig, ScenarioConfig,
    SweepBase, SweepConfig,
};
pub use report::{emit_report, parse_report_csv, Layout, Report, ReportRow};
pub use runs::{
    run_calibration, run_collateral_study, run_figure1, run_table3, run_table4, ClipRecord,
    CollateralPoint, CollateralStudy, Figure1Result, QualityPoint, QualityTable, SweepPoint,
    SweepResult,
};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::hazard::{
    calibrate_cir, simulate_paths, CirCalibration, CirParams, CreditQuality, HazardPathSet,
    SimulationOptions,
};
use crate::market_data::{load_snapshot, MarketSnapshot};
use crate::pricer::{
    CdsContract, RecoverySpec, ScenarioPaths, BUYER_STREAM, REFERENCE_STREAM, SELLER_STREAM,
};

/// A configured run with its market data, calibrations and simulated paths.
///
/// Paths are cached by (random stream, quality): every scenario that gives a
/// role the same quality sees the same paths, and changing a role's quality
/// keeps its Brownian drivers.
pub struct Experiment {
    pub config: ScenarioConfig,
    pub market: MarketSnapshot,
    hash: String,
    calibrations: Mutex<HashMap<CreditQuality, CirCalibration>>,
    paths: Mutex<HashMap<(u64, CreditQuality), Arc<HazardPathSet>>>,
}

impl Experiment {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let market = match &config.market {
            Some(path) => load_snapshot(path)?,
            None => MarketSnapshot::table1(),
        };
        Ok(Self {
            hash: config.hash(),
            config,
            market,
            calibrations: Mutex::new(HashMap::new()),
            paths: Mutex::new(HashMap::new()),
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn contract(&self) -> Result<CdsContract> {
        self.config.contract.contract()
    }

    pub fn recovery(&self) -> Result<RecoverySpec> {
        self.config.contract.recovery.spec()
    }

    /// Calibrated CIR fit for a risky quality (cached).
    pub fn calibration(&self, quality: CreditQuality) -> Result<CirCalibration> {
        let shift = quality
            .shift_bps()
            .ok_or_else(|| Error::Schema("a risk-free party has no hazard model".into()))?;
        if let Some(c) = self.calibrations.lock().expect("cache lock").get(&quality) {
            return Ok(c.clone());
        }
        let fit = calibrate_cir(
            &self.market.credit_curve,
            shift,
            &self.market.discount_curve,
            &self.config.calibration,
        )?;
        self.calibrations
            .lock()
            .expect("cache lock")
            .insert(quality, fit.clone());
        Ok(fit)
    }

    /// Hazard parameters for a quality, `None` for a risk-free party.
    pub fn cir(&self, quality: CreditQuality) -> Result<Option<CirParams>> {
        if quality == CreditQuality::RiskFree {
            return Ok(None);
        }
        Ok(Some(match self.config.hazard_source {
            HazardSource::Calibrated => self.calibration(quality)?.params,
            HazardSource::Published => CirParams::published(quality).expect("risky quality"),
        }))
    }

    /// Simulated hazard paths of a quality on a random stream (cached).
    pub fn paths(&self, quality: CreditQuality, stream: u64) -> Result<Option<Arc<HazardPathSet>>> {
        let Some(params) = self.cir(quality)? else {
            return Ok(None);
        };
        let key = (stream, quality);
        if let Some(p) = self.paths.lock().expect("cache lock").get(&key) {
            return Ok(Some(p.clone()));
        }
        let mc = &self.config.mc;
        let opts = SimulationOptions {
            substeps_per_year: mc.substeps_per_year,
            antithetic: mc.antithetic,
            stream,
        };
        let contract = self.contract()?;
        let set = Arc::new(simulate_paths(
            &params,
            contract.schedule.dates(),
            mc.n_paths,
            mc.seed,
            &opts,
        )?);
        self.paths.lock().expect("cache lock").insert(key, set.clone());
        Ok(Some(set))
    }

    /// Paths for the three roles, each on its own stream.
    pub fn scenario(&self, parties: &Parties) -> Result<ScenarioPaths> {
        self.scenario_with_streams(parties, SELLER_STREAM)
    }

    pub(crate) fn scenario_with_streams(&self, parties: &Parties, seller_stream: u64) -> Result<ScenarioPaths> {
        Ok(ScenarioPaths {
            buyer: self.paths(parties.buyer, BUYER_STREAM)?,
            seller: self.paths(parties.seller, seller_stream)?,
            reference: self
                .paths(parties.reference, REFERENCE_STREAM)?
                .ok_or_else(|| Error::Schema("the reference entity must be risky".into()))?,
        })
    }
}
