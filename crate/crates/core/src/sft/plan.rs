use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SftError;
use crate::numeric::stream_rng;

/// SNS:general sample ratio, e.g. `1:3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MixRatio {
    pub sns: u64,
    pub general: u64,
}

impl MixRatio {
    pub const fn new(sns: u64, general: u64) -> Self {
        MixRatio { sns, general }
    }

    /// General samples needed alongside `n_sns` SNS samples (floored).
    pub fn general_for(&self, n_sns: usize) -> usize {
        (n_sns as u128 * self.general as u128 / self.sns as u128) as usize
    }

    /// True when this ratio gives SNS a strictly larger share than `other`.
    pub fn sns_share_exceeds(&self, other: &MixRatio) -> bool {
        // a/(a+b) > c/(c+d)  <=>  a*d > c*b
        self.sns as u128 * other.general as u128 > other.sns as u128 * self.general as u128
    }
}

impl FromStr for MixRatio {
    type Err = SftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SftError::BadRatio(s.to_string());
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let sns: u64 = a.trim().parse().map_err(|_| bad())?;
        let general: u64 = b.trim().parse().map_err(|_| bad())?;
        if sns == 0 {
            return Err(bad());
        }
        Ok(MixRatio { sns, general })
    }
}

impl fmt::Display for MixRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sns, self.general)
    }
}

impl Serialize for MixRatio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MixRatio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepManifest {
    pub sns: Vec<String>,
    pub general: Vec<String>,
}

impl StepManifest {
    pub fn len(&self) -> usize {
        self.sns.len() + self.general.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoStepPlan {
    pub step1: StepManifest,
    pub step2: StepManifest,
    pub ratios: (MixRatio, MixRatio),
}

/// Draws `n` ids from `pool`. Without replacement this is a partial
/// Fisher-Yates shuffle.
fn sample_ids(pool: &[String], n: usize, seed: u64, stream: u64, replace: bool) -> Vec<String> {
    let mut rng = stream_rng(seed, stream);
    if replace {
        if pool.is_empty() {
            return Vec::new();
        }
        return (0..n).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect();
    }
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    for i in 0..n {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    idx[..n].iter().map(|&i| pool[i].clone()).collect()
}

/// Plans both SFT steps: each holds every SNS sample plus a seeded draw of
/// general samples sized by that step's ratio. Step two must favour SNS more
/// than step one. The two general draws are independent.
pub fn plan_two_step_mix(
    sns: &[String],
    general: &[String],
    r1: MixRatio,
    r2: MixRatio,
    seed: u64,
    allow_replacement: bool,
) -> Result<TwoStepPlan, SftError> {
    if !r2.sns_share_exceeds(&r1) {
        return Err(SftError::RatioOrder { r1: r1.to_string(), r2: r2.to_string() });
    }
    let mut steps = Vec::with_capacity(2);
    for (stream, r) in [(1u64, r1), (2u64, r2)] {
        let need = r.general_for(sns.len());
        if need > 0 && (general.is_empty() || (!allow_replacement && need > general.len())) {
            return Err(SftError::GeneralPoolTooSmall { needed: need, available: general.len() });
        }
        steps.push(StepManifest { sns: sns.to_vec(), general: sample_ids(general, need, seed, stream, allow_replacement) });
    }
    let step2 = steps.pop().unwrap();
    let step1 = steps.pop().unwrap();
    Ok(TwoStepPlan { step1, step2, ratios: (r1, r2) })
}
