use super::{PretrainError, Result, TrainConfig};

/// Linear warmup from 0 to `peak` over `warmup` steps, then linear decay to 0
/// at `total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSchedule {
    pub peak: f64,
    pub warmup: u64,
    pub total: u64,
}

impl LinearSchedule {
    pub fn at(&self, step: u64) -> Result<f64> {
        if step > self.total {
            return Err(PretrainError::StepOutOfRange {
                step,
                total: self.total,
            });
        }
        if step <= self.warmup && self.warmup > 0 {
            return Ok(self.peak * (step as f64 / self.warmup as f64));
        }
        let remaining = (self.total - step) as f64;
        Ok(self.peak * (remaining / (self.total - self.warmup) as f64))
    }
}

pub fn lr_at(step: u64, config: &TrainConfig) -> Result<f64> {
    config.schedule().at(step)
}
