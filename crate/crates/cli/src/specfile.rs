//! TOML design specification.
//!
//! ```toml
//! order = 26
//! k_des = 3.0
//! domain = "real"            # or "complex"; default "real"
//! phase = "min"              # min | max | explicit:<0/1 mask>
//! factorization = "auto"     # auto | roots | cepstral
//! grid_density = 16
//!
//! [[bands]]
//! lo = 0.0                   # units of pi
//! hi = 0.36
//! desired = 1                # 1 passband, 0 stopband
//!
//! [tolerances]
//! weight = 1e-8
//! ```

use minimax_fir::spectral_factor::{FactorMethod, PhaseSelection};
use minimax_fir::spectrum::{Band, CoeffDomain, DesignSpec};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub order: usize,
    pub k_des: f64,
    #[serde(default)]
    pub domain: Option<String>,
    pub bands: Vec<BandEntry>,
    #[serde(default)]
    pub phase: Option<String>,
    #[serde(default)]
    pub factorization: Option<String>,
    #[serde(default)]
    pub grid_density: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandEntry {
    pub lo: f64,
    pub hi: f64,
    pub desired: f64,
}

/// Optional numeric overrides; unset fields keep the library defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the weight search.
    pub weight: Option<f64>,
    /// Reciprocal-pair matching tolerance of the roots factorization.
    pub pairing: Option<f64>,
    /// Tolerated negative spectrum relative to `p[0]`.
    pub psd: Option<f64>,
    /// Relative tolerance on attaining the deviation when counting alternations.
    pub alternation: Option<f64>,
    /// Relative tolerance of the deviation ratio check.
    pub ratio: Option<f64>,
    /// FFT length of the cepstral factorization.
    pub fft_len: Option<usize>,
    /// Largest order factored by root finding.
    pub root_limit: Option<usize>,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn design_spec(&self) -> Result<DesignSpec, String> {
        let domain = match &self.domain {
            Some(d) => d.parse::<CoeffDomain>().map_err(|e| e.to_string())?,
            None => CoeffDomain::Real,
        };
        let bands = self
            .bands
            .iter()
            .enumerate()
            .map(|(i, b)| match b.desired {
                1.0 => Ok(Band::pass(b.lo, b.hi)),
                0.0 => Ok(Band::stop(b.lo, b.hi)),
                d => Err(format!("band {}: desired must be 0 or 1, got {d}", i + 1)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        DesignSpec::new(self.order, bands, self.k_des, domain).map_err(|e| e.to_string())
    }

    pub fn phase(&self) -> Result<PhaseSelection, String> {
        self.phase.as_deref().map_or(Ok(PhaseSelection::MinimumPhase), |s| s.parse().map_err(|e: minimax_fir::Error| e.to_string()))
    }

    pub fn factorization(&self) -> Result<FactorMethod, String> {
        self.factorization.as_deref().map_or(Ok(FactorMethod::Auto), |s| s.parse().map_err(|e: minimax_fir::Error| e.to_string()))
    }
}
