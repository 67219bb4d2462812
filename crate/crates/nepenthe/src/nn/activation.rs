use serde::{Deserialize, Serialize};

/// Rectifier applied to a layer's pre-activations.
///
/// `PReLU` carries its initial slope; the learned per-channel slopes live on
/// the layer so they can train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    LeakyRelu { slope: f32 },
    Prelu { init_slope: f32 },
    Gelu,
    Silu,
    Relu6,
    Identity,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi), tanh form

impl ActivationKind {
    pub fn is_identity(&self) -> bool {
        matches!(self, ActivationKind::Identity)
    }

    /// `slope` is the per-channel learned slope, used only by `Prelu`.
    pub fn apply(&self, z: f64, slope: f64) -> f64 {
        match self {
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::LeakyRelu { slope } => {
                if z > 0.0 {
                    z
                } else {
                    f64::from(*slope) * z
                }
            }
            ActivationKind::Prelu { .. } => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            ActivationKind::Gelu => {
                let u = GELU_C * (z + 0.044_715 * z * z * z);
                0.5 * z * (1.0 + u.tanh())
            }
            ActivationKind::Silu => z / (1.0 + (-z).exp()),
            ActivationKind::Relu6 => z.clamp(0.0, 6.0),
            ActivationKind::Identity => z,
        }
    }

    /// dψ/dz at `z`.
    pub fn derivative(&self, z: f64, slope: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::LeakyRelu { slope } => {
                if z > 0.0 {
                    1.0
                } else {
                    f64::from(*slope)
                }
            }
            ActivationKind::Prelu { .. } => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            ActivationKind::Gelu => {
                let z2 = z * z;
                let u = GELU_C * (z + 0.044_715 * z * z2);
                let t = u.tanh();
                let sech2 = 1.0 - t * t;
                0.5 * (1.0 + t) + 0.5 * z * sech2 * GELU_C * (1.0 + 3.0 * 0.044_715 * z2)
            }
            ActivationKind::Silu => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 + z * (1.0 - s))
            }
            ActivationKind::Relu6 => {
                if z > 0.0 && z < 6.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Identity => 1.0,
        }
    }

    /// dψ/d(slope) at `z`; nonzero only for `Prelu` in the negative region.
    pub fn slope_derivative(&self, z: f64) -> f64 {
        match self {
            ActivationKind::Prelu { .. } if z <= 0.0 => z,
            _ => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::LeakyRelu { .. } => "leaky_relu",
            ActivationKind::Prelu { .. } => "prelu",
            ActivationKind::Gelu => "gelu",
            ActivationKind::Silu => "silu",
            ActivationKind::Relu6 => "relu6",
            ActivationKind::Identity => "identity",
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if let ActivationKind::LeakyRelu { slope } = self {
            if !(*slope > 0.0 && *slope < 1.0) {
                return Err(crate::Error::InvalidConfig(format!(
                    "leaky_relu slope must be in (0,1), got {slope}"
                )));
            }
        }
        Ok(())
    }
}
