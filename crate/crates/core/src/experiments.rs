//! The multi-seed, multi-resolution Brownian regularity profile.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::{exponent_serde, seminorm_dyadic, RegularityParams};
use crate::error::{Error, Result};
use crate::path_gen::{simulate_bm, DriverSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub seeds: Vec<u64>,
    /// Resolutions `N = 2^k` for each listed `k`.
    pub levels: Vec<u32>,
    pub horizon: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(with = "exponent_list")]
    pub qs: Vec<f64>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            seeds: (0..20).collect(),
            levels: (10..=14).collect(),
            horizon: 1.0,
            alpha: 0.5,
            beta: 2.0,
            qs: vec![1.0, 2.0, f64::INFINITY],
        }
    }
}

mod exponent_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Q(#[serde(with = "super::exponent_serde")] f64);

    pub fn serialize<S: Serializer>(qs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        qs.iter().map(|&q| Q(q)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Q>::deserialize(d)?.into_iter().map(|q| q.0).collect())
    }
}

impl ProfileConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::domain("profile needs at least one seed"));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&k| k == 0 || k > 24) {
            return Err(Error::domain("profile levels must be nonempty and within 1..=24"));
        }
        if self.qs.is_empty() {
            return Err(Error::domain("profile needs at least one q"));
        }
        for &q in &self.qs {
            RegularityParams::new(self.alpha, self.beta, q)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub seed: u64,
    pub n_steps: usize,
    #[serde(with = "exponent_serde")]
    pub q: f64,
    pub seminorm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    #[serde(with = "exponent_serde")]
    pub q: f64,
    pub n_steps: Vec<usize>,
    pub medians: Vec<f64>,
    /// Largest over smallest median across resolutions.
    pub spread: f64,
    pub strictly_increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub rows: Vec<ProfileRow>,
    pub summaries: Vec<ProfileSummary>,
}

impl ProfileReport {
    pub fn summary(&self, q: f64) -> Option<&ProfileSummary> {
        self.summaries.iter().find(|s| s.q == q)
    }

    /// Plot-ready `seed,n_steps,q,seminorm` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "seed,n_steps,q,seminorm")?;
        for r in &self.rows {
            let q = if r.q.is_infinite() { "inf".to_string() } else { r.q.to_string() };
            writeln!(w, "{},{},{},{:.16e}", r.seed, r.n_steps, q, r.seminorm)?;
        }
        Ok(())
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Estimates `[W]` for each seed at every resolution. Coarser resolutions are
/// decimations of the finest simulated path, so each seed is one Brownian path.
pub fn regularity_profile(config: &ProfileConfig) -> Result<ProfileReport> {
    config.validate()?;
    let mut levels = config.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let finest = 1usize << *levels.last().unwrap();
    let base = RegularityParams::new(config.alpha, config.beta, f64::INFINITY)?;
    let per_seed: Vec<Vec<ProfileRow>> = config
        .seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<ProfileRow>> {
            let w = simulate_bm(&DriverSpec::brownian(1, config.horizon, finest, seed))?;
            let mut rows = Vec::new();
            for &k in &levels {
                let n = 1usize << k;
                let path = w.decimate(finest / n)?;
                let report = seminorm_dyadic(&path, base)?;
                for &q in &config.qs {
                    rows.push(ProfileRow { seed, n_steps: n, q, seminorm: report.reaggregate(q) });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ProfileRow> = per_seed.into_iter().flatten().collect();
    let summaries = config
        .qs
        .iter()
        .map(|&q| {
            let n_steps: Vec<usize> = levels.iter().map(|&k| 1usize << k).collect();
            let medians: Vec<f64> = n_steps
                .iter()
                .map(|&n| {
                    let mut v: Vec<f64> =
                        rows.iter().filter(|r| r.q == q && r.n_steps == n).map(|r| r.seminorm).collect();
                    median(&mut v)
                })
                .collect();
            let hi = medians.iter().copied().fold(f64::MIN, f64::max);
            let lo = medians.iter().copied().fold(f64::MAX, f64::min);
            ProfileSummary {
                q,
                spread: hi / lo,
                strictly_increasing: medians.windows(2).all(|w| w[1] > w[0]),
                n_steps,
                medians,
            }
        })
        .collect();
    Ok(ProfileReport { rows, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_seed_list_is_rejected() {
        let cfg = ProfileConfig { seeds: vec![], ..Default::default() };
        assert!(regularity_profile(&cfg).is_err());
    }

    #[test]
    fn small_profile_shapes() {
        let cfg = ProfileConfig { seeds: vec![1, 2, 3], levels: vec![6, 7], ..Default::default() };
        let r = regularity_profile(&cfg).unwrap();
        assert_eq!(r.rows.len(), 3 * 2 * 3);
        let inf = r.summary(f64::INFINITY).unwrap();
        let one = r.summary(1.0).unwrap();
        for (a, b) in inf.medians.iter().zip(&one.medians) {
            assert!(a <= b);
        }
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"inf\""));
        let back: ProfileConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
