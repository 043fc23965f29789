//! Low-precision solar position (NOAA "general solar position" series).

use std::f64::consts::PI;

use chrono::{DateTime, Datelike, Duration, NaiveDate, Timelike, Utc};

use super::{HourlyDataset, SiteConfig};

/// Geometric solar elevation in degrees at `ts` (no refraction).
pub fn solar_elevation(site: &SiteConfig, ts: DateTime<Utc>) -> f64 {
    let year = ts.year();
    let days_in_year = if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366.0
    } else {
        365.0
    };
    let hour = ts.hour() as f64 + ts.minute() as f64 / 60.0 + ts.second() as f64 / 3600.0;
    let gamma = 2.0 * PI / days_in_year * (ts.ordinal0() as f64 + (hour - 12.0) / 24.0);

    let eqtime_min = 229.18
        * (0.000075 + 0.001868 * gamma.cos()
            - 0.032077 * gamma.sin()
            - 0.014615 * (2.0 * gamma).cos()
            - 0.040849 * (2.0 * gamma).sin());
    let decl = 0.006918 - 0.399912 * gamma.cos() + 0.070257 * gamma.sin()
        - 0.006758 * (2.0 * gamma).cos()
        + 0.000907 * (2.0 * gamma).sin()
        - 0.002697 * (3.0 * gamma).cos()
        + 0.00148 * (3.0 * gamma).sin();

    let true_solar_min = hour * 60.0 + eqtime_min + 4.0 * site.longitude_deg;
    let hour_angle = (true_solar_min / 4.0 - 180.0).to_radians();
    let lat = site.latitude_deg.to_radians();
    let cos_zenith = lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos();
    90.0 - cos_zenith.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Elevation above the horizon at the midpoint of the hour starting at `ts`.
pub fn is_daylight(site: &SiteConfig, ts: DateTime<Utc>) -> bool {
    solar_elevation(site, ts + Duration::minutes(30)) > 0.0
}

pub fn daylight_mask(dataset: &HourlyDataset) -> Vec<bool> {
    dataset
        .records()
        .iter()
        .map(|r| is_daylight(&dataset.site, r.timestamp))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{HourlyRecord, WEATHER_DIM};
    use chrono::TimeZone;

    fn utc(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn equator() -> SiteConfig {
        SiteConfig::new(0.0, 0.0, 0.0, 1000.0, 0.0).unwrap()
    }

    #[test]
    fn equinox_noon_at_equator_is_overhead() {
        // Solar noon at 0°E falls near 12:07Z on 20 March because of the equation of time.
        let e = solar_elevation(&equator(), utc("2013-03-20T12:07:00Z"));
        assert!((e - 90.0).abs() < 1.5, "{e}");
    }

    #[test]
    fn midnight_is_below_horizon() {
        let site = SiteConfig::reference_site();
        // 00:00 AEST
        let e = solar_elevation(&site, utc("2012-06-20T14:00:00Z"));
        assert!(e < 0.0);
        assert!(!is_daylight(&site, utc("2012-06-20T14:00:00Z")));
    }

    // Geometric elevations from NREL SPA (pvlib `nrel_numpy`) at the reference site.
    #[test]
    fn reference_site_matches_spa() {
        let site = SiteConfig::reference_site();
        let cases = [
            ("2012-06-21T02:00:00Z", 31.273226),
            ("2012-12-21T01:30:00Z", 76.312356),
            ("2013-03-20T23:30:00Z", 38.420387),
            ("2012-09-01T06:15:00Z", 16.671244),
            ("2013-01-15T20:00:00Z", 9.376690),
            ("2012-06-21T14:00:00Z", -78.101642),
            ("2012-10-10T04:45:00Z", 40.923340),
        ];
        for (ts, want) in cases {
            let got = solar_elevation(&site, utc(ts));
            assert!((got - want).abs() < 1.0, "{ts}: got {got}, want {want}");
        }
    }

    #[test]
    fn equator_equinox_has_twelve_daylight_hours() {
        let site = equator();
        let start = Utc.with_ymd_and_hms(2013, 3, 20, 0, 0, 0).unwrap();
        let records: Vec<_> = (0..24)
            .map(|h| HourlyRecord {
                timestamp: start + Duration::hours(h),
                weather: [0.0; WEATHER_DIM],
                power_w: None,
            })
            .collect();
        let ds = HourlyDataset::new(site, records).unwrap();
        let n = daylight_mask(&ds).iter().filter(|&&d| d).count();
        assert!((11..=13).contains(&n), "{n}");
    }

    #[test]
    fn summer_noon_is_daylight() {
        let site = SiteConfig::reference_site();
        // 12:00 AEST on 15 January
        assert!(is_daylight(&site, utc("2013-01-15T02:00:00Z")));
    }
}
