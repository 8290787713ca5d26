//! Closed-form link budget: coincidence probability per shot, data
//! acquisition time, and EIT transmission bandwidth.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::event_sim::LinkConfig;

/// Rb D1 natural linewidth, rad/s.
pub const RB_D1_LINEWIDTH: f64 = 2.0 * PI * 5.75e6;

/// Thomas–Fermi radii of the condensate, meters. Metadata only.
pub const BEC_THOMAS_FERMI_RADII: [f64; 3] = [7e-6, 25e-6, 25e-6];

/// Peak optical depth on the 780 nm cycling transition at 1.2e6 atoms.
pub const OPTICAL_DEPTH_780: f64 = 1500.0;
pub const OPTICAL_DEPTH_795: f64 = 120.0;
pub const REFERENCE_ATOM_NUMBER: f64 = 1.2e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetFactor {
    pub name: String,
    pub factor: f64,
    pub provenance: String,
}

/// Ordered multiplicative efficiency factors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BudgetChain {
    factors: Vec<BudgetFactor>,
}

impl BudgetChain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a factor; names must be unique and factors in (0, 1].
    pub fn push(&mut self, name: &str, factor: f64, provenance: &str) -> Result<()> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "factor",
                reason: format!("`{name}` = {factor} is outside (0, 1]"),
            });
        }
        if self.factors.iter().any(|f| f.name == name) {
            return Err(Error::InvalidParameter {
                name: "factor",
                reason: format!("duplicate factor name `{name}`"),
            });
        }
        self.factors.push(BudgetFactor {
            name: name.to_string(),
            factor,
            provenance: provenance.to_string(),
        });
        Ok(())
    }

    pub fn with(mut self, name: &str, factor: f64, provenance: &str) -> Result<Self> {
        self.push(name, factor, provenance)?;
        Ok(self)
    }

    /// The chain the event simulator samples for a configuration.
    pub fn from_link_config(config: &LinkConfig) -> Result<Self> {
        let mut chain = BudgetChain::new()
            .with("pair_prob", config.pair_prob, "entangled pair per trigger, measured (1.0±0.2)%")?
            .with("atom_present", config.atom_present, "single atom loaded when the BEC is ready")?
            .with("atom_survival", config.atom_survival_factor, "atom loss over 2e4 cycles")?
            .with("eta", config.eta, "BEC write-read efficiency for single photons")?
            .with("bs_factor", config.bs_factor, "50:50 non-polarizing beam splitter routing")?
            .with("transport", config.transport, "all other beam transport incl. stray-light filtering")?
            .with("det_a", config.det_eff, "avalanche photodiode, station A")?
            .with("det_b", config.det_eff, "avalanche photodiode, station B")?;
        if config.unexplained_loss != 1.0 {
            chain.push("unexplained_loss", config.unexplained_loss, "user-supplied unattributed loss")?;
        }
        Ok(chain)
    }

    pub fn factors(&self) -> &[BudgetFactor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

/// Product of all factors: coincidences per shot.
pub fn expected_coincidence_rate(chain: &BudgetChain) -> Result<f64> {
    if chain.is_empty() {
        return Err(Error::InvalidParameter { name: "chain", reason: "empty budget chain".into() });
    }
    Ok(chain.factors.iter().map(|f| f.factor).product())
}

/// Net acquisition time in seconds for `target` coincidences.
///
/// Whole BEC cycles are counted; a ratio that is integral up to rounding
/// error is not pushed to the next cycle.
pub fn acquisition_time(target: f64, rate_per_shot: f64, shots_per_bec: f64, bec_cycle_time: f64) -> Result<f64> {
    check_positive("target_coincidences", target)?;
    check_positive("rate_per_shot", rate_per_shot)?;
    check_positive("shots_per_bec", shots_per_bec)?;
    check_positive("bec_cycle_time", bec_cycle_time)?;
    Ok(becs_needed(target, rate_per_shot, shots_per_bec) * bec_cycle_time)
}

pub fn becs_needed(target: f64, rate_per_shot: f64, shots_per_bec: f64) -> f64 {
    let becs = target / rate_per_shot / shots_per_bec;
    let nearest = becs.round();
    if (becs - nearest).abs() <= 1e-9 * becs.max(1.0) {
        nearest
    } else {
        becs.ceil()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitParams {
    /// Control Rabi frequency, rad/s.
    pub omega_c: f64,
    /// Excited-state linewidth, rad/s.
    pub gamma: f64,
    pub optical_depth: f64,
}

impl Default for EitParams {
    fn default() -> Self {
        Self { omega_c: 2.0 * PI * 20e6, gamma: RB_D1_LINEWIDTH, optical_depth: OPTICAL_DEPTH_795 }
    }
}

/// Transmission window of an optically thick EIT medium, Ω_c²/(Γ·√d), rad/s.
pub fn eit_window(params: &EitParams) -> Result<f64> {
    check_positive("omega_c", params.omega_c)?;
    check_positive("gamma", params.gamma)?;
    check_positive("optical_depth", params.optical_depth)?;
    Ok(params.omega_c * params.omega_c / (params.gamma * params.optical_depth.sqrt()))
}

/// Optical depth at atom number `n`, linear in N at fixed geometry.
pub fn optical_depth_scaling(od_ref: f64, n_ref: f64, n: f64) -> Result<f64> {
    check_positive("od_ref", od_ref)?;
    check_positive("n_ref", n_ref)?;
    check_positive("n", n)?;
    Ok(od_ref * n / n_ref)
}

/// Rendered budget: one row per factor, the product, and an optional
/// comparison against an observed rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub factors: Vec<BudgetFactor>,
    pub expected_rate: f64,
    pub observed_rate: Option<f64>,
    pub observed_over_expected: Option<f64>,
}

impl BudgetReport {
    pub fn new(chain: &BudgetChain, observed_rate: Option<f64>) -> Result<Self> {
        let expected_rate = expected_coincidence_rate(chain)?;
        Ok(Self {
            factors: chain.factors.clone(),
            expected_rate,
            observed_rate,
            observed_over_expected: observed_rate.map(|o| o / expected_rate),
        })
    }

    pub fn to_text(&self) -> String {
        let name_w = self.factors.iter().map(|f| f.name.len()).max().unwrap_or(4).max("product".len());
        let mut s = String::new();
        let _ = writeln!(s, "{:<name_w$}  {:>10}  provenance", "factor", "value");
        for f in &self.factors {
            let _ = writeln!(s, "{:<name_w$}  {:>10.4}  {}", f.name, f.factor, f.provenance);
        }
        let _ = writeln!(s, "{:<name_w$}  {:>10.3e}", "product", self.expected_rate);
        if let (Some(obs), Some(ratio)) = (self.observed_rate, self.observed_over_expected) {
            let _ = writeln!(s, "{:<name_w$}  {:>10.3e}  {:.3} of expected", "observed", obs, ratio);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_chain_product() {
        let chain = BudgetChain::from_link_config(&LinkConfig::default()).unwrap();
        assert_eq!(chain.len(), 8);
        let rate = expected_coincidence_rate(&chain).unwrap();
        // 0.010·0.72·0.81·0.16·0.25·0.21·0.5·0.5
        assert!((rate - 1.224_72e-5).abs() < 1e-15, "{rate}");
        assert_eq!(format!("{rate:.1e}"), "1.2e-5");
    }

    #[test]
    fn trivial_chains() {
        let ones = BudgetChain::new().with("a", 1.0, "").unwrap().with("b", 1.0, "").unwrap();
        assert_eq!(expected_coincidence_rate(&ones).unwrap(), 1.0);
        let half = BudgetChain::new().with("a", 0.5, "").unwrap();
        assert_eq!(expected_coincidence_rate(&half).unwrap(), 0.5);
        assert!(expected_coincidence_rate(&BudgetChain::new()).is_err());
    }

    #[test]
    fn chain_validation() {
        assert!(BudgetChain::new().with("a", 0.0, "").is_err());
        assert!(BudgetChain::new().with("a", 1.5, "").is_err());
        assert!(BudgetChain::new().with("a", 0.5, "").unwrap().with("a", 0.5, "").is_err());
    }

    #[test]
    fn acquisition_time_examples() {
        let t = acquisition_time(60.0, 2.5e-6, 2e4, 20.0).unwrap();
        assert_eq!(t, 24_000.0);
        assert!((t / 3600.0 - 6.67).abs() < 0.01);
        assert!(acquisition_time(0.0, 2.5e-6, 2e4, 20.0).is_err());
        assert_eq!(becs_needed(60.0, 5e-6, 2e4), 600.0);
        assert_eq!(becs_needed(61.0, 2.5e-6, 2e4), 1220.0);
        assert_eq!(becs_needed(60.5, 2.5e-6, 2e4), 1210.0);
        assert_eq!(becs_needed(60.01, 2.5e-6, 2e4), 1201.0);
    }

    #[test]
    fn eit_window_examples() {
        let p = EitParams::default();
        let w = eit_window(&p).unwrap() / (2.0 * PI);
        assert!((w / 1e6 - 6.35).abs() < 0.01, "{w}");
        let quad_d = EitParams { optical_depth: 4.0 * p.optical_depth, ..p };
        assert!((eit_window(&quad_d).unwrap() / eit_window(&p).unwrap() - 0.5).abs() < 1e-12);
        let double_omega = EitParams { omega_c: 2.0 * p.omega_c, ..p };
        assert!((eit_window(&double_omega).unwrap() / eit_window(&p).unwrap() - 4.0).abs() < 1e-12);
        assert!(eit_window(&EitParams { gamma: 0.0, ..p }).is_err());
    }

    #[test]
    fn optical_depth_examples() {
        assert_eq!(optical_depth_scaling(120.0, 1.2e6, 1.2e6).unwrap(), 120.0);
        assert!((optical_depth_scaling(120.0, 1.2e6, 0.2e6).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(optical_depth_scaling(OPTICAL_DEPTH_780, REFERENCE_ATOM_NUMBER, 1.2e6).unwrap(), 1500.0);
    }

    #[test]
    fn report_text() {
        let chain = BudgetChain::from_link_config(&LinkConfig::default()).unwrap();
        let report = BudgetReport::new(&chain, Some(2.5e-6)).unwrap();
        let text = report.to_text();
        assert_eq!(text.lines().count(), 1 + 8 + 2);
        assert!(text.contains("1.225e-5"), "{text}");
        assert!((report.observed_over_expected.unwrap() - 0.204).abs() < 1e-3);
    }
}
