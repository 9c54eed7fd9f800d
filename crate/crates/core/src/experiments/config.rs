use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_unit_interval, Error, Result};
use crate::hazard::{CalibrationConfig, CreditQuality};
use crate::joint_default::{DependenceAxis, DependenceSpec};
use crate::pricer::{CdsContract, McConfig, RecoverySpec, SettlementRule};
use crate::schedule::PaymentSchedule;

/// Contract terms shared by every scenario point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractTemplate {
    pub notional: f64,
    /// Premium used when a single valuation is requested.
    pub spread: f64,
    pub start: f64,
    pub maturity: f64,
    pub frequency: u32,
    pub recovery: RecoveryConfig,
}

impl Default for ContractTemplate {
    fn default() -> Self {
        Self {
            notional: 1_000_000.0,
            spread: 0.027,
            start: 0.0,
            maturity: 5.0,
            frequency: 4,
            recovery: RecoveryConfig::default(),
        }
    }
}

impl ContractTemplate {
    pub fn contract(&self) -> Result<CdsContract> {
        CdsContract::new(
            self.notional,
            self.spread,
            PaymentSchedule::regular(self.start, self.maturity, self.frequency)?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryConfig {
    /// Default recovery of the buyer (A).
    pub buyer: f64,
    /// Default recovery of the seller (B).
    pub seller: f64,
    pub reference: f64,
    pub settlement: SettlementRule,
    /// Joint recovery when both counterparties default; the product of
    /// their recoveries when absent.
    pub joint: Option<f64>,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            buyer: 0.4,
            seller: 0.4,
            reference: 0.4,
            settlement: SettlementRule::TwoWay,
            joint: None,
        }
    }
}

impl RecoveryConfig {
    pub fn spec(&self) -> Result<RecoverySpec> {
        let mut r = RecoverySpec::new(self.buyer, self.seller, self.reference, self.settlement);
        if let Some(j) = self.joint {
            r.joint = j;
        }
        r.validate()?;
        Ok(r)
    }
}

/// Credit quality of each party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Parties {
    pub buyer: CreditQuality,
    pub seller: CreditQuality,
    pub reference: CreditQuality,
}

impl Default for Parties {
    fn default() -> Self {
        Self {
            buyer: CreditQuality::APlus100,
            seller: CreditQuality::A,
            reference: CreditQuality::APlus200,
        }
    }
}

/// Where per-quality CIR parameters come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardSource {
    /// Fitted to the shifted credit curve of the market snapshot.
    Calibrated,
    /// The published parameter table.
    Published,
}

/// Values held fixed on the axes not being swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepBase {
    /// All other dependence parameters at zero.
    Independent,
    /// Buyer–seller correlation at 0.5, others at zero.
    BuyerSellerCorrelated,
}

impl SweepBase {
    pub fn spec(self) -> DependenceSpec {
        match self {
            SweepBase::Independent => DependenceSpec::independent(),
            SweepBase::BuyerSellerCorrelated => DependenceSpec {
                rho_ab: 0.5,
                ..DependenceSpec::independent()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<DependenceAxis>,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub base: SweepBase,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axes: DependenceAxis::ALL.to_vec(),
            min: -1.0,
            max: 1.0,
            points: 21,
            base: SweepBase::Independent,
        }
    }
}

impl SweepConfig {
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let x = self.min + step * i as f64;
                // Snap to the decimal grid so 0 is hit exactly.
                (x * 1e12).round() / 1e12
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollateralStudyConfig {
    pub parties: Parties,
    /// Drive the seller's hazard with the reference entity's random stream,
    /// so both have identical period marginals on every path and strong
    /// seller–reference correlation stays admissible.
    pub seller_shares_reference_driver: bool,
    pub rho_bc: Vec<f64>,
}

impl Default for CollateralStudyConfig {
    fn default() -> Self {
        Self {
            parties: Parties {
                buyer: CreditQuality::A,
                seller: CreditQuality::A,
                reference: CreditQuality::A,
            },
            seller_shares_reference_driver: true,
            rho_bc: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

/// Self-describing description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Market snapshot file; the built-in snapshot when absent.
    pub market: Option<PathBuf>,
    pub contract: ContractTemplate,
    pub parties: Parties,
    pub dependence: DependenceSpec,
    /// Qualities swept in the credit-quality tables.
    pub qualities: Vec<CreditQuality>,
    pub sweep: SweepConfig,
    pub collateral: CollateralStudyConfig,
    pub mc: McConfig,
    pub hazard_source: HazardSource,
    pub calibration: CalibrationConfig,
    pub out_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            market: None,
            contract: ContractTemplate::default(),
            parties: Parties::default(),
            dependence: DependenceSpec::independent(),
            qualities: CreditQuality::RISKY.to_vec(),
            sweep: SweepConfig::default(),
            collateral: CollateralStudyConfig::default(),
            mc: McConfig::default(),
            hazard_source: HazardSource::Calibrated,
            calibration: CalibrationConfig::default(),
            out_dir: PathBuf::from("results"),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.contract.contract()?;
        self.contract.recovery.spec()?;
        check_unit_interval("reference recovery", self.contract.recovery.reference)?;
        self.dependence.validate()?;
        let s = &self.sweep;
        if !(-1.0..=1.0).contains(&s.min) || !(-1.0..=1.0).contains(&s.max) || s.min > s.max {
            return Err(Error::Schema(format!(
                "sweep range [{}, {}] must lie within [-1, 1]",
                s.min, s.max
            )));
        }
        if s.points == 0 {
            return Err(Error::Schema("sweep needs at least one point".into()));
        }
        if let Some(bad) = self.collateral.rho_bc.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
            return Err(Error::Schema(format!("collateral rho_bc {bad} outside [-1, 1]")));
        }
        if self.mc.n_paths < 2 {
            return Err(Error::Schema("mc.n_paths must be >= 2".into()));
        }
        if self.parties.reference == CreditQuality::RiskFree
            || self.collateral.parties.reference == CreditQuality::RiskFree
        {
            return Err(Error::Schema("the reference entity must be risky".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The output
    /// directory is excluded: where results go does not change them.
    pub fn hash(&self) -> String {
        let canonical = ScenarioConfig {
            out_dir: PathBuf::new(),
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
