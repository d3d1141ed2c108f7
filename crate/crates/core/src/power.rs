//! Downlink budget and amplifier DC power for the fed RIS versus a fully
//! active phased array.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eigenmodes::EigenDecomposition;
use crate::error::{Error, Result};
use crate::farfield::array_factor_db;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const THERMAL_NOISE_PSD_DBM_HZ: f64 = -174.0;

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn fspl_db(carrier_hz: f64, range_m: f64) -> Result<f64> {
    if !(carrier_hz > 0.0 && range_m > 0.0 && carrier_hz.is_finite() && range_m.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "carrier and range must be positive, got {carrier_hz} Hz and {range_m} m"
        )));
    }
    let lambda = SPEED_OF_LIGHT / carrier_hz;
    Ok(20.0 * (4.0 * PI * range_m / lambda).log10())
}

fn default_noise_psd() -> f64 {
    THERMAL_NOISE_PSD_DBM_HZ
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub range_m: f64,
    pub rx_noise_figure_db: f64,
    pub required_snr_db: f64,
    #[serde(default = "default_noise_psd")]
    pub noise_psd_dbm_hz: f64,
}

impl LinkBudget {
    /// 100 GHz carrier, 5 GHz bandwidth, 20 m range, 5 dB noise figure,
    /// 3 dB SNR.
    pub const EXAMPLE: LinkBudget = LinkBudget {
        carrier_hz: 100e9,
        bandwidth_hz: 5e9,
        range_m: 20.0,
        rx_noise_figure_db: 5.0,
        required_snr_db: 3.0,
        noise_psd_dbm_hz: THERMAL_NOISE_PSD_DBM_HZ,
    };

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("range_m", self.range_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("rx_noise_figure_db", self.rx_noise_figure_db),
            ("required_snr_db", self.required_snr_db),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// True when the signal is not narrowband relative to its carrier.
    pub fn wideband_warning(&self) -> bool {
        self.bandwidth_hz >= self.carrier_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetChain {
    pub fspl_db: f64,
    pub noise_dbm: f64,
    pub rx_signal_dbm: f64,
    pub tx_power_dbm: f64,
}

pub fn budget_chain(lb: &LinkBudget) -> Result<BudgetChain> {
    lb.validate()?;
    let fspl = fspl_db(lb.carrier_hz, lb.range_m)?;
    let noise = lb.noise_psd_dbm_hz + 10.0 * lb.bandwidth_hz.log10() + lb.rx_noise_figure_db;
    let rx = noise + lb.required_snr_db;
    Ok(BudgetChain {
        fspl_db: fspl,
        noise_dbm: noise,
        rx_signal_dbm: rx,
        tx_power_dbm: rx + fspl,
    })
}

pub fn required_tx_power_dbm(lb: &LinkBudget) -> Result<f64> {
    Ok(budget_chain(lb)?.tx_power_dbm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    /// Few active feeder PAs illuminating a passive RIS.
    FedRis,
    /// One PA behind every array element.
    PhasedArray,
}

/// RF output each PA must deliver for an EIRP of `p_t_dbm` at broadside.
///
/// Both architectures share the array gain `E_R(0) (sum |u_1k|)^2`; the fed
/// RIS additionally makes up the feed loss `sigma_1^2`.
pub fn per_pa_power(arch: Architecture, p_t_dbm: f64, dec: &EigenDecomposition, e_r0: f64) -> f64 {
    let shared = p_t_dbm - array_factor_db(dec, e_r0);
    match arch {
        Architecture::FedRis => shared - dec.sigma1_sq_db(),
        Architecture::PhasedArray => shared,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PATechnology {
    pub name: String,
    pub psat_dbm: f64,
    pub pae_fraction: f64,
    pub gain_db: f64,
}

impl PATechnology {
    pub fn new(
        name: impl Into<String>,
        psat_dbm: f64,
        pae_fraction: f64,
        gain_db: f64,
    ) -> Result<Self> {
        let t = Self {
            name: name.into(),
            psat_dbm,
            pae_fraction,
            gain_db,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pae_fraction > 0.0 && self.pae_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "{}: PAE fraction must lie in (0, 1), got {}",
                self.name, self.pae_fraction
            )));
        }
        if !(self.gain_db > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{}: PA gain must be positive, got {} dB",
                self.name, self.gain_db
            )));
        }
        if !self.psat_dbm.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{}: Psat must be finite",
                self.name
            )));
        }
        Ok(())
    }
}

/// Published D-band power amplifier survey: name, Psat (dBm), PAE, gain (dB).
pub const PA_SURVEY: [(&str, f64, f64, f64); 5] = [
    ("CMOS", 14.0, 0.10, 13.0),
    ("SiGe", 16.0, 0.14, 14.0),
    ("GaN", 27.0, 0.14, 20.0),
    ("GaAs", 27.0, 0.125, 27.0),
    ("InP", 20.0, 0.22, 28.0),
];

pub fn builtin_technologies() -> Vec<PATechnology> {
    PA_SURVEY
        .iter()
        .map(|&(name, psat, pae, gain)| PATechnology {
            name: name.into(),
            psat_dbm: psat,
            pae_fraction: pae,
            gain_db: gain,
        })
        .collect()
}

/// Looks a technology up by name, ignoring case.
pub fn technology(name: &str) -> Option<PATechnology> {
    builtin_technologies()
        .into_iter()
        .find(|t| t.name.eq_ignore_ascii_case(name))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcPower {
    pub p_out_w: f64,
    pub p_in_w: f64,
    pub p_dc_w: f64,
    /// False when the requested output exceeds the usable saturated power.
    pub feasible: bool,
}

/// DC draw of one PA delivering `p_out_dbm`. Infeasible drives still get a
/// number; the flag records that the amplifier cannot supply it.
pub fn dc_power_w(p_out_dbm: f64, tech: &PATechnology) -> DcPower {
    dc_power_with_backoff(p_out_dbm, tech, 0.0)
}

pub fn dc_power_with_backoff(p_out_dbm: f64, tech: &PATechnology, backoff_db: f64) -> DcPower {
    let p_out = dbm_to_w(p_out_dbm);
    let p_in = p_out / 10f64.powf(tech.gain_db / 10.0);
    DcPower {
        p_out_w: p_out,
        p_in_w: p_in,
        p_dc_w: (p_out - p_in) / tech.pae_fraction,
        feasible: p_out_dbm <= tech.psat_dbm - backoff_db,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureReport {
    pub pa_count: usize,
    /// RF output each PA must deliver to close the link.
    pub per_pa_rf_dbm: f64,
    /// Whether that output fits below Psat minus the back-off.
    pub feasible: bool,
    /// Drive level used for the DC estimate.
    pub drive_dbm: f64,
    pub dc_per_pa_w: f64,
    pub total_dc_w: f64,
    /// Per-PA DC power rounded to 0.01 W before multiplying by the count.
    pub total_dc_rounded_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureComparison {
    pub technology: PATechnology,
    pub backoff_db: f64,
    pub chain: BudgetChain,
    pub array_factor_db: f64,
    pub sigma1_sq_db: f64,
    pub fed_ris: ArchitectureReport,
    pub phased_array: ArchitectureReport,
}

/// Sizes both architectures for the same link. Every PA is costed at the
/// technology's saturated drive, the operating class a 27 dBm part is
/// bought for, while feasibility compares the required per-PA output with
/// Psat less `backoff_db`.
pub fn compare_architectures(
    lb: &LinkBudget,
    dec: &EigenDecomposition,
    e_r0: f64,
    tech: &PATechnology,
    backoff_db: f64,
) -> Result<ArchitectureComparison> {
    tech.validate()?;
    if !(backoff_db.is_finite() && backoff_db >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "back-off must be non-negative, got {backoff_db}"
        )));
    }
    let chain = budget_chain(lb)?;
    let report = |arch: Architecture, count: usize| {
        let rf = per_pa_power(arch, chain.tx_power_dbm, dec, e_r0);
        let dc = dc_power_w(tech.psat_dbm, tech).p_dc_w;
        ArchitectureReport {
            pa_count: count,
            per_pa_rf_dbm: rf,
            feasible: rf <= tech.psat_dbm - backoff_db,
            drive_dbm: tech.psat_dbm,
            dc_per_pa_w: dc,
            total_dc_w: count as f64 * dc,
            total_dc_rounded_w: count as f64 * (dc * 100.0).round() / 100.0,
        }
    };
    Ok(ArchitectureComparison {
        technology: tech.clone(),
        backoff_db,
        chain,
        array_factor_db: array_factor_db(dec, e_r0),
        sigma1_sq_db: dec.sigma1_sq_db(),
        fed_ris: report(Architecture::FedRis, dec.num_amaf()),
        phased_array: report(Architecture::PhasedArray, dec.num_ris()),
    })
}
