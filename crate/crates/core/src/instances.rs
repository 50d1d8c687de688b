//! Named and randomized game instances.

use rand::Rng;

use crate::channel::{detection_probability, ChannelParams, RatioParams, SensingModel};
use crate::error::Result;
use crate::game::GameConfig;

pub const REFERENCE_PIS: [f64; 2] = [0.2, 0.5];
pub const REFERENCE_K_A: f64 = 0.2;
pub const REFERENCE_K_S: f64 = 0.1;

/// Detector used throughout: 1500 samples, P_f = 0.1, SNR −10 dB.
pub fn default_sensing() -> SensingModel {
    SensingModel::from_db(1500, 0.1, -10.0).expect("valid detector")
}

/// Two channels with π = (0.2, 0.5), M = L = 1, k_A = 0.2, k_S = 0.1.
pub fn reference_config(k_c: f64, k_b: f64) -> Result<GameConfig> {
    let econ = RatioParams::new(REFERENCE_K_A, REFERENCE_K_S, k_c, k_b)?;
    let sensing = default_sensing();
    let p_d = detection_probability(&sensing)?;
    GameConfig::homogeneous(1, 1, &REFERENCE_PIS, p_d, sensing.p_f, &econ)
}

/// Ranges for [`random_config`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomRanges {
    pub pi: (f64, f64),
    pub k_a: (f64, f64),
    pub k_s: (f64, f64),
    pub k_c: (f64, f64),
    pub k_b: (f64, f64),
}

impl Default for RandomRanges {
    fn default() -> Self {
        Self {
            pi: (0.05, 0.95),
            k_a: (0.05, 0.6),
            k_s: (0.02, 0.3),
            k_c: (0.2, 12.0),
            k_b: (0.01, 1.5),
        }
    }
}

/// Homogeneous economics, independent π per channel, default detector.
pub fn random_config<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, l: usize, ranges: &RandomRanges) -> Result<GameConfig> {
    let mut draw = |(lo, hi): (f64, f64)| rng.random_range(lo..hi);
    let econ = RatioParams::new(draw(ranges.k_a), draw(ranges.k_s), draw(ranges.k_c), draw(ranges.k_b))?;
    let sensing = default_sensing();
    let p_d = detection_probability(&sensing)?;
    let channels = (0..n)
        .map(|_| ChannelParams::from_operating_point(draw(ranges.pi), p_d, sensing.p_f, &econ))
        .collect::<Result<Vec<_>>>()?;
    GameConfig::new(m, l, channels)
}
