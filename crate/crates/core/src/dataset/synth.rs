//! Synthetic stand-in for an hourly NWP + PV metering archive.
//!
//! Each local day carries a hidden sky regime drawn from a persistent Markov
//! chain whose mix follows a seasonal volatility profile: winter months are
//! dominated by broken cloud, summer months by stable clear skies. Measured
//! power follows a clear-sky diurnal curve scaled by an hourly clear-sky
//! index. The 14 weather columns are NWP-like forecasts of the same state
//! whose error grows with regime volatility.

use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{solar_elevation, HourlyDataset, HourlyRecord, SiteConfig, WEATHER_DIM};
use crate::error::{Error, Result};

/// First local day generated by [`synth_generate`].
pub const SYNTH_START: NaiveDate = match NaiveDate::from_ymd_opt(2012, 10, 1) {
    Some(d) => d,
    None => panic!("valid date"),
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Clear,
    Mixed,
    Cloudy,
}

impl Regime {
    fn kt_mean(self) -> f64 {
        match self {
            Regime::Clear => 0.93,
            Regime::Mixed => 0.6,
            Regime::Cloudy => 0.28,
        }
    }

    /// (hourly AR innovation sd, AR coefficient) of the true clear-sky index.
    fn kt_dynamics(self) -> (f64, f64) {
        match self {
            Regime::Clear => (0.02, 0.5),
            Regime::Mixed => (0.22, 0.35),
            Regime::Cloudy => (0.08, 0.7),
        }
    }

    /// Standard deviation of the NWP error on the clear-sky index.
    fn nwp_error(self) -> f64 {
        match self {
            Regime::Clear => 0.04,
            Regime::Mixed => 0.24,
            Regime::Cloudy => 0.1,
        }
    }
}

/// Seasonal volatility in [0, 1] for the southern hemisphere: peaks at the
/// June solstice, bottoms out in December.
fn volatility(date: NaiveDate) -> f64 {
    let doy = date.ordinal0() as f64;
    0.5 + 0.5 * (2.0 * PI * (doy - 172.0) / 365.25).cos()
}

fn draw_regime(rng: &mut ChaCha8Rng, prev: Option<Regime>, vol: f64) -> Regime {
    if let Some(p) = prev {
        if rng.random::<f64>() < 0.55 {
            return p;
        }
    }
    let p_mixed = 0.08 + 0.72 * vol;
    let p_cloudy = 0.12;
    let u: f64 = rng.random();
    if u < p_mixed {
        Regime::Mixed
    } else if u < p_mixed + p_cloudy {
        Regime::Cloudy
    } else {
        Regime::Clear
    }
}

/// Daily regimes for `days` local days starting at `start`.
pub fn synth_regimes(start: NaiveDate, days: usize, seed: u64) -> Vec<Regime> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut out = Vec::with_capacity(days);
    let mut prev = None;
    for d in 0..days {
        let date = start + Duration::days(d as i64);
        let r = draw_regime(&mut rng, prev, volatility(date));
        out.push(r);
        prev = Some(r);
    }
    out
}

pub fn synth_generate(days: usize, seed: u64, site: &SiteConfig) -> Result<HourlyDataset> {
    synth_generate_from(SYNTH_START, days, seed, site)
}

pub fn synth_generate_from(
    start: NaiveDate,
    days: usize,
    seed: u64,
    site: &SiteConfig,
) -> Result<HourlyDataset> {
    if days == 0 {
        return Err(Error::Domain("days must be at least 1".into()));
    }
    let regimes = synth_regimes(start, days, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut gauss = move || -> f64 { rng.sample(StandardNormal) };

    let t0 = site.local_midnight_utc(start);
    let mut records = Vec::with_capacity(days * 24);
    let mut kt_dev = 0.0;
    let mut nwp_dev = 0.0;
    for (d, &regime) in regimes.iter().enumerate() {
        let date = start + Duration::days(d as i64);
        let season = 2.0 * PI * (date.ordinal0() as f64 - 15.0) / 365.25;
        // NWP day-level bias on the clear-sky index.
        let day_bias = 0.5 * regime.nwp_error() * gauss();
        let day_temp = 288.0 + 7.0 * season.cos() + 1.5 * gauss();
        let day_pressure = 1013.0 + 6.0 * gauss();
        let (wind_u, wind_v) = (3.0 * gauss(), 3.0 * gauss());
        let (innov, ar) = regime.kt_dynamics();
        for h in 0..24 {
            let ts = t0 + Duration::hours((d * 24 + h) as i64);
            let elev = solar_elevation(site, ts + Duration::minutes(30));
            let sin_e = elev.to_radians().sin().max(0.0);

            kt_dev = ar * kt_dev + innov * gauss();
            let kt = (regime.kt_mean() + kt_dev).clamp(0.05, 1.0);
            nwp_dev = 0.6 * nwp_dev + 0.8 * regime.nwp_error() * gauss();
            let kt_nwp = (kt + day_bias + nwp_dev).clamp(0.02, 1.05);

            let temp = day_temp + 6.0 * sin_e + 0.7 * gauss();
            let power_w = if elev > 0.0 {
                let derate = 1.0 - 0.004 * (temp + 8.0 * sin_e * kt - 298.0);
                let p = site.nominal_power_w * 0.82 * sin_e.powf(1.15) * kt * derate;
                p.clamp(0.0, site.nominal_power_w)
            } else {
                0.0
            };

            let cloud = (1.0 - kt_nwp + 0.05 * gauss()).clamp(0.0, 1.0);
            let low = (cloud * (0.55 + 0.04 * gauss())).clamp(0.0, 1.0);
            let mid = (cloud * (0.3 + 0.03 * gauss())).clamp(0.0, 1.0);
            let high = (cloud * 0.25 + 0.02 * gauss().abs()).clamp(0.0, 1.0);
            let toa = 1361.0 * sin_e;
            let ssrd = (1000.0 * sin_e.powf(1.1) * kt_nwp * (1.0 + 0.03 * gauss())).max(0.0);
            let strd = 290.0 + 85.0 * cloud + 1.8 * (temp - 288.0) + 2.0 * gauss();
            let rh = (55.0 + 35.0 * cloud - 1.2 * (temp - 288.0) + 2.0 * gauss()).clamp(5.0, 100.0);
            let precip = if regime == Regime::Clear {
                0.0
            } else {
                (cloud - 0.55).max(0.0) * 2.0 * gauss().abs()
            };
            let tclw = (cloud * cloud * 0.3 + 0.02 * gauss().abs()).max(0.0);

            let weather: [f64; WEATHER_DIM] = [
                cloud,
                low,
                mid,
                high,
                ssrd,
                strd,
                toa,
                temp,
                rh,
                wind_u + 0.2 * gauss(),
                wind_v + 0.2 * gauss(),
                day_pressure + 0.2 * gauss(),
                precip,
                tclw,
            ];
            records.push(HourlyRecord {
                timestamp: ts,
                weather,
                power_w: Some(power_w),
            });
        }
    }
    HourlyDataset::new(site.clone(), records)
}
