use crate::error::{contract, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// Cosine decay to `0.1·lr_max` at `total_steps`.
    Cos,
    /// Flat until `0.8·total_steps`, then linear to zero.
    Wsd,
    Constant,
}

impl ScheduleKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cos" => Some(Self::Cos),
            "wsd" => Some(Self::Wsd),
            "constant" => Some(Self::Constant),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Cos => "cos",
            Self::Wsd => "wsd",
            Self::Constant => "constant",
        }
    }
}

/// Learning-rate schedule; every kind starts with a linear warmup from 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSpec<T> {
    pub kind: ScheduleKind,
    pub lr_max: T,
    pub warmup_steps: usize,
    pub total_steps: usize,
}

impl<T: Real> ScheduleSpec<T> {
    pub fn constant(lr: T, total_steps: usize) -> Self {
        Self {
            kind: ScheduleKind::Constant,
            lr_max: lr,
            warmup_steps: 0,
            total_steps,
        }
    }

    pub fn lr_at(&self, step: usize) -> Result<T> {
        lr_at(self, step)
    }
}

pub fn lr_at<T: Real>(s: &ScheduleSpec<T>, step: usize) -> Result<T> {
    if step > s.total_steps {
        return Err(contract(format!(
            "step {step} is past the schedule's {} steps",
            s.total_steps
        )));
    }
    let f = |n: usize| T::from_usize_lossy(n);
    if step < s.warmup_steps {
        return Ok(s.lr_max * f(step) / f(s.warmup_steps));
    }
    let lr = match s.kind {
        ScheduleKind::Constant => s.lr_max,
        ScheduleKind::Cos => {
            let span = s.total_steps - s.warmup_steps;
            let progress = if span == 0 {
                T::one()
            } else {
                f(step - s.warmup_steps) / f(span)
            };
            let lr_min = T::lit(0.1) * s.lr_max;
            let pi = T::lit(std::f64::consts::PI);
            lr_min + (s.lr_max - lr_min) * T::lit(0.5) * (T::one() + (pi * progress).cos())
        }
        ScheduleKind::Wsd => {
            let total = f(s.total_steps);
            let decay_start = (T::lit(0.8) * total).max(f(s.warmup_steps));
            let t = f(step);
            if t <= decay_start {
                s.lr_max
            } else {
                s.lr_max * (total - t) / (total - decay_start)
            }
        }
    };
    Ok(lr)
}
