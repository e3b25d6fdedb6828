//! Sigmoidal activations and the density functions built from them.
//!
//! A sigmoidal function `σ` induces the univariate density
//! `φ(x) = ½[σ(x+1) − σ(x−1)]`, an even non-negative bump whose integer
//! translates form a partition of unity. The multivariate kernel `Ψ` is the
//! coordinate-wise product of `φ`.
//!
//! Only the two activations used for image resizing are provided: the
//! logistic function and the ramp function (expressible through ReLU units).

use thiserror::Error;

/// Default negligibility threshold for logistic kernel sums.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Terms below this are dropped by [`SigmoidalKernel::tail_sum`].
const TAIL_NEGLIGIBLE: f64 = 1e-16;

/// Support radius of the ramp density.
pub const RAMP_SUPPORT: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("epsilon {epsilon} must lie in (0, phi(0) = {phi0})")]
    EpsilonOutOfRange { epsilon: f64, phi0: f64 },
    #[error("moment order {beta} is not below the decay exponent {alpha}")]
    MomentDiverges { beta: f64, alpha: f64 },
    #[error("invalid moment request: {0}")]
    InvalidMoment(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Logistic,
    Ramp,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Logistic => "logistic",
            KernelFamily::Ramp => "ramp",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" => Ok(KernelFamily::Logistic),
            "ramp" | "relu" => Ok(KernelFamily::Ramp),
            other => Err(format!("unknown kernel family `{other}` (expected logistic or ramp)")),
        }
    }
}

/// An activation family together with the truncation data needed to sum
/// its density over a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidalKernel {
    family: KernelFamily,
    /// Polynomial decay exponent. `f64::INFINITY` means faster than every
    /// polynomial (both shipped families).
    alpha: f64,
    epsilon: f64,
    truncation_radius: f64,
}

impl SigmoidalKernel {
    pub fn ramp() -> Self {
        SigmoidalKernel {
            family: KernelFamily::Ramp,
            alpha: f64::INFINITY,
            epsilon: DEFAULT_EPSILON,
            truncation_radius: RAMP_SUPPORT,
        }
    }

    pub fn logistic() -> Self {
        Self::logistic_with_epsilon(DEFAULT_EPSILON).expect("default epsilon is valid")
    }

    pub fn logistic_with_epsilon(epsilon: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Logistic, epsilon)
    }

    /// Builds a kernel of the given family; the truncation radius is derived
    /// from `epsilon` (ignored for the compactly supported ramp).
    pub fn new(family: KernelFamily, epsilon: f64) -> Result<Self, KernelError> {
        let radius = truncation_radius(family, epsilon)?;
        Ok(SigmoidalKernel {
            family,
            alpha: f64::INFINITY,
            epsilon,
            truncation_radius: radius,
        })
    }

    /// Declares a finite decay exponent, which makes moment requests with
    /// `beta >= alpha` fail.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        assert!(alpha > 0.0, "alpha must be positive");
        self.alpha = alpha;
        self
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn sigmoid(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Logistic => logistic(x),
            KernelFamily::Ramp => {
                if x < -0.5 {
                    0.0
                } else if x > 0.5 {
                    1.0
                } else {
                    x + 0.5
                }
            }
        }
    }

    /// Density `φ(x) = ½[σ(x+1) − σ(x−1)]`.
    #[inline]
    pub fn phi(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Logistic => logistic_density(x),
            KernelFamily::Ramp => ramp_density(x),
        }
    }

    /// Product kernel `Ψ(x) = φ(x₁)·…·φ(x_d)`.
    pub fn psi(&self, x: &[f64]) -> f64 {
        assert!(!x.is_empty(), "psi needs at least one coordinate");
        x.iter().map(|&xi| self.phi(xi)).product()
    }

    /// `Σ_{|x−k| > radius} φ(x−k)`, stopping once terms are negligible.
    pub fn tail_sum(&self, x: f64, radius: f64) -> f64 {
        assert!(radius > 0.0, "tail radius must be positive");
        let mut sum = 0.0;
        // right tail: k > x + radius
        let mut k = (x + radius).floor() + 1.0;
        loop {
            let t = self.phi(x - k);
            if t < TAIL_NEGLIGIBLE && (k - x) > self.truncation_radius {
                break;
            }
            sum += t;
            k += 1.0;
        }
        // left tail: k < x - radius
        let mut k = (x - radius).ceil() - 1.0;
        loop {
            let t = self.phi(x - k);
            if t < TAIL_NEGLIGIBLE && (x - k) > self.truncation_radius {
                break;
            }
            sum += t;
            k -= 1.0;
        }
        sum
    }

    /// Truncated lower-bound estimate of the discrete absolute moment
    /// `M_β = sup_x Σ_k Ψ(x−k)‖x−k‖^β` in dimension `d`.
    ///
    /// The sum is 1-periodic in each coordinate, so the supremum is probed on
    /// `probe_resolution` points per axis of `[0,1)^d`.
    pub fn discrete_moment(&self, beta: f64, d: usize, probe_resolution: usize) -> Result<MomentEstimate, KernelError> {
        if !(beta >= 0.0) {
            return Err(KernelError::InvalidMoment("beta must be non-negative"));
        }
        if d == 0 || d > 3 {
            return Err(KernelError::InvalidMoment("dimension must be 1, 2 or 3"));
        }
        if probe_resolution == 0 {
            return Err(KernelError::InvalidMoment("probe resolution must be positive"));
        }
        if self.alpha.is_finite() && beta >= self.alpha {
            return Err(KernelError::MomentDiverges {
                beta,
                alpha: self.alpha,
            });
        }
        let radius = self.truncation_radius;
        let reach = radius.ceil() as i64 + 1;
        let offsets: Vec<i64> = (-reach..=reach + 1).collect();
        let probes: Vec<f64> = (0..probe_resolution)
            .map(|i| i as f64 / probe_resolution as f64)
            .collect();

        let mut best = 0.0_f64;
        let mut point = vec![0usize; d];
        loop {
            let x: Vec<f64> = point.iter().map(|&i| probes[i]).collect();
            best = best.max(self.moment_at(&x, beta, &offsets));
            // odometer over probe points
            let mut axis = 0;
            loop {
                if axis == d {
                    return Ok(MomentEstimate {
                        value: best,
                        truncation_radius: radius,
                    });
                }
                point[axis] += 1;
                if point[axis] < probe_resolution {
                    break;
                }
                point[axis] = 0;
                axis += 1;
            }
        }
    }

    fn moment_at(&self, x: &[f64], beta: f64, offsets: &[i64]) -> f64 {
        let d = x.len();
        let mut idx = vec![0usize; d];
        let mut total = 0.0;
        loop {
            let mut weight = 1.0;
            let mut dist2 = 0.0;
            let mut inside = true;
            for axis in 0..d {
                let diff = x[axis] - offsets[idx[axis]] as f64;
                if diff.abs() > self.truncation_radius {
                    inside = false;
                    break;
                }
                weight *= self.phi(diff);
                dist2 += diff * diff;
            }
            if inside && weight > 0.0 {
                let norm = dist2.sqrt();
                total += weight * if beta == 0.0 { 1.0 } else { norm.powf(beta) };
            }
            let mut axis = 0;
            loop {
                if axis == d {
                    return total;
                }
                idx[axis] += 1;
                if idx[axis] < offsets.len() {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }
}

/// A truncated moment estimate with the truncation it was computed under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub truncation_radius: f64,
}

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Closed form `(e²−1)/(2e²) · 1/((1+e^{x−1})(1+e^{−x−1}))`, free of the
/// cancellation in the difference of two sigmoids.
#[inline]
fn logistic_density(x: f64) -> f64 {
    const E2: f64 = 7.38905609893065;
    const SCALE: f64 = (E2 - 1.0) / (2.0 * E2);
    let a = (x - 1.0).exp();
    let b = (-x - 1.0).exp();
    // order the factors so the product is exactly even in x
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    SCALE / ((1.0 + lo) * (1.0 + hi))
}

#[inline]
fn ramp_density(x: f64) -> f64 {
    let t = x.abs();
    if t >= RAMP_SUPPORT {
        0.0
    } else if t <= 0.5 {
        0.5
    } else {
        0.5 * (RAMP_SUPPORT - t)
    }
}

/// Smallest `R` with `φ(x) < epsilon` for every `|x| > R`.
///
/// The ramp density has compact support, so its radius is `3/2` for any
/// epsilon. For the logistic density the radius is found by bisection on the
/// decreasing half-line.
pub fn truncation_radius(family: KernelFamily, epsilon: f64) -> Result<f64, KernelError> {
    match family {
        KernelFamily::Ramp => {
            if !(epsilon > 0.0) {
                return Err(KernelError::EpsilonOutOfRange { epsilon, phi0: 0.5 });
            }
            Ok(RAMP_SUPPORT)
        }
        KernelFamily::Logistic => {
            let phi0 = logistic_density(0.0);
            if !(epsilon > 0.0 && epsilon < phi0) {
                return Err(KernelError::EpsilonOutOfRange { epsilon, phi0 });
            }
            let mut lo = 0.0;
            let mut hi = 1.0;
            while logistic_density(hi) >= epsilon {
                lo = hi;
                hi *= 2.0;
            }
            // invariant: phi(lo) >= eps > phi(hi)
            while hi - lo > 1e-12 * hi {
                let mid = 0.5 * (lo + hi);
                if logistic_density(mid) >= epsilon {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(hi)
        }
    }
}
