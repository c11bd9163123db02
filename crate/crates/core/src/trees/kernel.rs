use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Radially symmetric smoothing kernel used by KDE.
///
/// `value` is the unnormalized profile, non-increasing in distance; KDE sums
/// profiles and applies [`normalizer`](Kernel::normalizer) once. New kernels
/// only need these methods.
pub trait Kernel: Sync {
    fn bandwidth(&self) -> f64;

    fn value(&self, distance: f64) -> f64;

    /// Smallest profile value for any point at most `max_distance` away.
    fn value_lower(&self, max_distance: f64) -> f64 {
        self.value(max_distance)
    }

    /// Largest profile value for any point at least `min_distance` away.
    fn value_upper(&self, min_distance: f64) -> f64 {
        self.value(min_distance)
    }

    /// Constant turning the profile into a density in `dim` dimensions.
    fn normalizer(&self, dim: usize) -> Result<f64>;
}

fn check_bandwidth(h: f64) -> Result<f64> {
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(Error::validation(format!("bandwidth must be positive, got {h}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    bandwidth: f64,
}

impl GaussianKernel {
    pub fn new(bandwidth: f64) -> Result<Self> {
        Ok(Self { bandwidth: check_bandwidth(bandwidth)? })
    }
}

impl Kernel for GaussianKernel {
    fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    #[inline]
    fn value(&self, distance: f64) -> f64 {
        let u = distance / self.bandwidth;
        (-0.5 * u * u).exp()
    }

    /// `(1 / (h sqrt(2 pi)))^dim`.
    fn normalizer(&self, dim: usize) -> Result<f64> {
        Ok((1.0 / (self.bandwidth * (2.0 * PI).sqrt())).powi(dim as i32))
    }
}

/// `(1 - (d/h)^2)` on `d < h`, zero beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpanechnikovKernel {
    bandwidth: f64,
}

impl EpanechnikovKernel {
    pub const MAX_DIM: usize = 3;

    pub fn new(bandwidth: f64) -> Result<Self> {
        Ok(Self { bandwidth: check_bandwidth(bandwidth)? })
    }
}

impl Kernel for EpanechnikovKernel {
    fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    #[inline]
    fn value(&self, distance: f64) -> f64 {
        let u = distance / self.bandwidth;
        if u >= 1.0 {
            0.0
        } else {
            1.0 - u * u
        }
    }

    fn normalizer(&self, dim: usize) -> Result<f64> {
        let h = self.bandwidth;
        match dim {
            1 => Ok(3.0 / (4.0 * h)),
            2 => Ok(2.0 / (PI * h * h)),
            3 => Ok(15.0 / (8.0 * PI * h * h * h)),
            _ => Err(Error::validation(format!(
                "epanechnikov kernel supports 1 to {} dimensions, got {dim}",
                Self::MAX_DIM
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
    Epanechnikov,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Epanechnikov => "epanechnikov",
        }
    }

    pub fn with_bandwidth(self, bandwidth: f64) -> Result<AnyKernel> {
        Ok(match self {
            KernelKind::Gaussian => AnyKernel::Gaussian(GaussianKernel::new(bandwidth)?),
            KernelKind::Epanechnikov => AnyKernel::Epanechnikov(EpanechnikovKernel::new(bandwidth)?),
        })
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelKind::Gaussian),
            "epanechnikov" => Ok(KernelKind::Epanechnikov),
            other => Err(Error::validation(format!("unknown kernel {other:?}; expected gaussian or epanechnikov"))),
        }
    }
}

/// Runtime-selected kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnyKernel {
    Gaussian(GaussianKernel),
    Epanechnikov(EpanechnikovKernel),
}

impl Kernel for AnyKernel {
    fn bandwidth(&self) -> f64 {
        match self {
            AnyKernel::Gaussian(k) => k.bandwidth(),
            AnyKernel::Epanechnikov(k) => k.bandwidth(),
        }
    }

    #[inline]
    fn value(&self, distance: f64) -> f64 {
        match self {
            AnyKernel::Gaussian(k) => k.value(distance),
            AnyKernel::Epanechnikov(k) => k.value(distance),
        }
    }

    fn normalizer(&self, dim: usize) -> Result<f64> {
        match self {
            AnyKernel::Gaussian(k) => k.normalizer(dim),
            AnyKernel::Epanechnikov(k) => k.normalizer(dim),
        }
    }
}
