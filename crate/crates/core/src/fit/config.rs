use alloc::format;
use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use crate::covariance::CovBounds;
use crate::error::{Error, Result};

/// How raw optimization variables become a covariance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parameterization {
    Eig,
    Cholesky,
    CondCorr,
}

impl Parameterization {
    pub const ALL: [Parameterization; 3] = [Parameterization::Eig, Parameterization::Cholesky, Parameterization::CondCorr];

    pub fn as_str(&self) -> &'static str {
        match self {
            Parameterization::Eig => "eig",
            Parameterization::Cholesky => "cholesky",
            Parameterization::CondCorr => "condcorr",
        }
    }

    /// Number of raw covariance variables per Gaussian.
    pub fn cov_len(&self) -> usize {
        match self {
            Parameterization::Eig => 9,
            Parameterization::Cholesky | Parameterization::CondCorr => 6,
        }
    }
}

impl fmt::Display for Parameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parameterization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eig" => Ok(Parameterization::Eig),
            "cholesky" | "chol" => Ok(Parameterization::Cholesky),
            "condcorr" => Ok(Parameterization::CondCorr),
            other => Err(Error::ConfigInvalid(format!("unknown parameterization {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FitMode {
    /// Independent Gaussians per image; transforms fixed at identity.
    Single,
    /// One shared canonical set plus per-image yaw and part transforms.
    Canonical,
}

impl FitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitMode::Single => "single",
            FitMode::Canonical => "canonical",
        }
    }
}

impl fmt::Display for FitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(FitMode::Single),
            "canonical" => Ok(FitMode::Canonical),
            other => Err(Error::ConfigInvalid(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub k: usize,
    pub parameterization: Parameterization,
    pub mode: FitMode,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub iters: usize,
    pub seed: u64,
    pub reg_weight: f64,
    pub resolution: usize,
    pub bounds: CovBounds,
    /// Canonical mode: optimize the per-image yaw (otherwise it stays at
    /// its initial value). Silhouettes of nearly symmetric objects say
    /// little about yaw, and free yaws then tend to wander; freeze them when
    /// the poses are known.
    pub learn_yaw: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            k: 1,
            parameterization: Parameterization::Eig,
            mode: FitMode::Single,
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
            iters: 5000,
            seed: 0,
            reg_weight: 0.1,
            resolution: 256,
            bounds: CovBounds::default(),
            learn_yaw: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::ConfigInvalid(msg.to_string()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if !(self.reg_weight >= 0.0 && self.reg_weight.is_finite()) {
            return bad("reg_weight must be non-negative");
        }
        if self.resolution == 0 {
            return bad("resolution must be positive");
        }
        if self.mode == FitMode::Canonical && self.parameterization != Parameterization::Eig {
            return bad("canonical mode composes transforms in the eigenbasis and needs the eig parameterization");
        }
        self.bounds.validate()
    }
}
