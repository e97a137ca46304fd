use crate::error::{Error, Result};
use crate::polar::NsSchedule;
use crate::scalar::Real;

/// Which stepper family drives a run; see [`super::route_and_step`] for the role table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    AdamW,
    NAdamW,
    Lion,
    Mars,
    AdEMAMix,
    Muon,
    Soap,
    MuonLite,
    SoapLite,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::AdamW,
        Family::NAdamW,
        Family::Lion,
        Family::Mars,
        Family::AdEMAMix,
        Family::Muon,
        Family::Soap,
        Family::MuonLite,
        Family::SoapLite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::AdamW => "adamw",
            Family::NAdamW => "n_adamw",
            Family::Lion => "lion",
            Family::Mars => "mars",
            Family::AdEMAMix => "ademamix",
            Family::Muon => "muon",
            Family::Soap => "soap",
            Family::MuonLite => "muon_lite",
            Family::SoapLite => "soap_lite",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn is_lite(self) -> bool {
        matches!(self, Family::MuonLite | Family::SoapLite)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// LITE hyper-parameters.
///
/// `chi`, `beta1`, `beta2` act on matrix blocks (Muon-LITE / SOAP-LITE).
/// Embedding and norm blocks run Adam-LITE with `adam_beta1`, `adam_beta2` and
/// their own χ when an override is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LitePolicy<T> {
    pub chi: T,
    pub beta1: T,
    pub beta2: T,
    pub r_s: T,
    pub d_smooth_ratio: T,
    pub chi_embedding: Option<T>,
    pub chi_norm: Option<T>,
    pub adam_beta1: T,
    pub adam_beta2: T,
}

impl<T: Real> Default for LitePolicy<T> {
    fn default() -> Self {
        Self {
            chi: T::one(),
            beta1: T::zero(),
            beta2: T::zero(),
            r_s: T::lit(0.2),
            d_smooth_ratio: T::lit(0.1),
            chi_embedding: None,
            chi_norm: None,
            adam_beta1: T::zero(),
            adam_beta2: T::zero(),
        }
    }
}

impl<T: Real> LitePolicy<T> {
    /// The policy under which every LITE stepper reproduces its baseline.
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let chis = [Some(self.chi), self.chi_embedding, self.chi_norm];
        if chis.iter().flatten().any(|&c| !(c >= T::one())) {
            return Err(Error::Config("chi must be ≥ 1".into()));
        }
        if !(self.beta2 >= self.beta1) || !(self.adam_beta2 >= self.adam_beta1) {
            return Err(Error::Config("beta2 must be ≥ beta1".into()));
        }
        if !(self.r_s > T::zero() && self.r_s <= T::one()) {
            return Err(Error::Config("r_s must lie in (0, 1]".into()));
        }
        if !(self.d_smooth_ratio >= T::zero() && self.d_smooth_ratio < T::one()) {
            return Err(Error::Config("d_smooth_ratio must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// `⌈r_s·count⌉`, at least 1.
    pub fn sharp_dim(&self, count: usize) -> usize {
        ceil_ratio(self.r_s, count).max(1)
    }

    pub fn smooth_dim(&self, count: usize) -> usize {
        ceil_ratio(self.d_smooth_ratio, count)
    }
}

fn ceil_ratio<T: Real>(ratio: T, count: usize) -> usize {
    (ratio * T::from_usize_lossy(count))
        .ceil()
        .to_usize()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T> {
    pub family: Family,
    /// First-moment decay θ (`α = 1 − θ`).
    pub theta: T,
    pub beta_v: T,
    pub theta_shampoo: T,
    pub epsilon: T,
    pub weight_decay: T,
    /// Global gradient-norm threshold; `None` disables clipping.
    pub clip_norm: Option<T>,
    pub nesterov_beta: T,
    pub mars_gamma: T,
    pub ademamix_kappa: T,
    pub alpha_fast: T,
    pub alpha_slow: T,
    pub qr_refresh_every: usize,
    pub ns: NsSchedule<T>,
    pub lite: Option<LitePolicy<T>>,
}

impl<T: Real> OptimizerConfig<T> {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            theta: T::lit(0.95),
            beta_v: T::lit(0.99),
            theta_shampoo: T::lit(0.95),
            epsilon: T::lit(1e-8),
            weight_decay: T::lit(0.1),
            clip_norm: Some(T::one()),
            nesterov_beta: T::zero(),
            mars_gamma: T::lit(0.025),
            ademamix_kappa: T::lit(2.0),
            alpha_fast: T::lit(0.1),
            alpha_slow: T::lit(1e-4),
            qr_refresh_every: 10,
            ns: NsSchedule::default(),
            lite: None,
        }
    }

    pub fn with_lite(mut self, policy: LitePolicy<T>) -> Self {
        self.lite = Some(policy);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: T| {
            if x >= T::zero() && x < T::one() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1), got {x}")))
            }
        };
        unit("theta", self.theta)?;
        unit("beta_v", self.beta_v)?;
        unit("theta_shampoo", self.theta_shampoo)?;
        if !(self.epsilon >= T::zero()) || !(self.weight_decay >= T::zero()) {
            return Err(Error::Config("epsilon and weight_decay must be non-negative".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > T::zero()) {
                return Err(Error::Config("clip_norm must be positive".into()));
            }
        }
        if self.family == Family::Mars && self.mars_gamma == T::one() {
            return Err(Error::Config("mars_gamma must differ from 1".into()));
        }
        if self.family == Family::AdEMAMix {
            for (name, a) in [("alpha_fast", self.alpha_fast), ("alpha_slow", self.alpha_slow)] {
                if !(a > T::zero() && a <= T::one()) {
                    return Err(Error::Config(format!("{name} must lie in (0, 1]")));
                }
            }
        }
        if self.qr_refresh_every == 0 {
            return Err(Error::Config("qr_refresh_every must be ≥ 1".into()));
        }
        match (&self.lite, self.family.is_lite()) {
            (Some(p), true) => p.validate(),
            (None, true) => Err(Error::Config(format!(
                "family {} needs a lite policy",
                self.family
            ))),
            (Some(_), false) => Err(Error::Config(format!(
                "lite policy given for non-lite family {}",
                self.family
            ))),
            (None, false) => Ok(()),
        }
    }
}
