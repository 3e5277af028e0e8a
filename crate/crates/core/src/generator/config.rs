use serde::{Deserialize, Serialize};

use crate::codec::{FRAME_DIM, MAX_STEPS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub hidden_layers: usize,
    pub hidden_size: usize,
    /// Dropout between stacked recurrent layers.
    pub dropout: f64,
    pub lr: f64,
    pub frame_dim: usize,
    /// Width of the hidden layer of the bias projection.
    pub bias_hidden: usize,
    pub max_gen_len: usize,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 3,
            hidden_size: 256,
            dropout: 0.3,
            lr: 1e-3,
            frame_dim: FRAME_DIM,
            bias_hidden: 64,
            max_gen_len: MAX_STEPS,
            temperature: 1.0,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.frame_dim != FRAME_DIM {
            return fail(format!("frame_dim must be {FRAME_DIM}, got {}", self.frame_dim));
        }
        if self.hidden_layers == 0 || self.hidden_size == 0 || self.bias_hidden == 0 {
            return fail("layer sizes must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.temperature > 0.0) {
            return fail(format!("temperature must be positive, got {}", self.temperature));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return fail(format!("invalid learning rate {}", self.lr));
        }
        if self.max_gen_len == 0 || self.max_gen_len > MAX_STEPS {
            return fail(format!("max_gen_len must be in 1..={MAX_STEPS}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c = GeneratorConfig::default();
        assert_eq!((c.hidden_layers, c.hidden_size, c.dropout, c.lr), (3, 256, 0.3, 1e-3));
        c.validate().unwrap();
        for bad in [
            GeneratorConfig { frame_dim: 33, ..c.clone() },
            GeneratorConfig { temperature: 0.0, ..c.clone() },
            GeneratorConfig { dropout: 1.0, ..c.clone() },
            GeneratorConfig { max_gen_len: 100, ..c.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn toml_fills_defaults() {
        let c: GeneratorConfig = toml::from_str("hidden_layers = 2\nhidden_size = 128").unwrap();
        assert_eq!((c.hidden_layers, c.hidden_size, c.dropout), (2, 128, 0.3));
        assert!(toml::from_str::<GeneratorConfig>("hiden = 1").is_err());
    }
}
