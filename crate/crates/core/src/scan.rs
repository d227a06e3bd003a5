//! Mass sweep of the surface-gravity-weighted area average on the
//! Schwarzschild–de Sitter family.
//!
//! For each admissible mass the two horizon radii give surface
//! gravities `κᵢ = |f′(rᵢ)|/2` and areas `4πrᵢ²`; the scan records
//!
//! ```text
//!   ratio(m) = (κ₁·area₁ + κ₂·area₂) / (κ₁ + κ₂)
//! ```
//!
//! which increases strictly from `0` (small mass) to `4π/3` (the
//! degenerate limit, where both horizons merge at `r = 1/√3` and the
//! cylinder value is attained). The round-sphere boundary value `4π/3`
//! is approached but never reached: the scan certifies the strict
//! inequality window numerically and checks both endpoint limits by
//! linear extrapolation.

use crate::models::{self, ModelError};
use crate::par;

/// One mass sample of the scan.
#[derive(Clone, Copy, Debug)]
pub struct ScanRow {
    pub m: f64,
    pub r_h: f64,
    pub r_c: f64,
    /// surface gravity at the inner (black-hole) horizon
    pub k1: f64,
    /// surface gravity at the outer (cosmological) horizon
    pub k2: f64,
    pub area1: f64,
    pub area2: f64,
    /// `(k1·area1 + k2·area2)/(k1 + k2)`
    pub ratio: f64,
}

impl ScanRow {
    pub const CSV_HEADER: &'static str = "m,r_h,r_c,k1,k2,area1,area2,ratio";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.m, self.r_h, self.r_c, self.k1, self.k2, self.area1, self.area2, self.ratio
        )
    }
}

/// Evaluate one mass (closed forms throughout).
pub fn scan_row(m: f64) -> Result<ScanRow, ModelError> {
    let (r_h, r_c) = models::sds_horizons(m)?;
    let f = models::sds_profile(m);
    let k1 = models::profile_surface_gravity(&f, r_h);
    let k2 = models::profile_surface_gravity(&f, r_c);
    let area1 = 4.0 * std::f64::consts::PI * r_h * r_h;
    let area2 = 4.0 * std::f64::consts::PI * r_c * r_c;
    Ok(ScanRow {
        m,
        r_h,
        r_c,
        k1,
        k2,
        area1,
        area2,
        ratio: (k1 * area1 + k2 * area2) / (k1 + k2),
    })
}

/// Evaluate a list of masses in parallel, preserving order.
pub fn theorem_c_scan(masses: &[f64]) -> Result<Vec<ScanRow>, ModelError> {
    par::par_map(masses, |&m| scan_row(m))
        .into_iter()
        .collect()
}

/// `n` logarithmically spaced masses on `[m_min, m_max]`.
pub fn log_spaced_masses(m_min: f64, m_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && m_min > 0.0 && m_min < m_max);
    let (a, b) = (m_min.ln(), m_max.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// The default acceptance window: 256 log-spaced masses spanning
/// nearly the whole admissible range.
pub fn default_masses() -> Vec<f64> {
    log_spaced_masses(1e-5, models::mass_max() * (1.0 - 1e-6), 256)
}

/// Monotonicity/limit diagnostics of a scan.
#[derive(Clone, Copy, Debug)]
pub struct ScanChecks {
    pub strictly_increasing: bool,
    /// `max ratio < 4π/3` over the scan
    pub below_bound: bool,
    /// `k1 > k2` and `area1 < 4π/3 < area2` at every row
    pub ordered: bool,
    /// linear extrapolation of the ratio to `m = 0`
    pub low_limit: f64,
    /// linear extrapolation of the ratio in `δ = √(m_max − m)` to `δ = 0`
    pub high_limit: f64,
}

/// The supremum value `4π/3` (cylinder/degenerate-limit ratio).
pub fn ratio_bound() -> f64 {
    4.0 * std::f64::consts::PI / 3.0
}

pub fn scan_checks(rows: &[ScanRow]) -> ScanChecks {
    assert!(rows.len() >= 3);
    let bound = ratio_bound();
    let strictly_increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let below_bound = rows.iter().all(|r| r.ratio < bound);
    let ordered = rows
        .iter()
        .all(|r| r.k1 > r.k2 && r.area1 < bound && bound < r.area2);
    // low end: ratio ~ 16πm, so a linear-in-m extrapolation to 0
    let (a, b) = (&rows[0], &rows[1]);
    let low_limit = a.ratio - (b.ratio - a.ratio) / (b.m - a.m) * a.m;
    // high end: the degenerate limit is approached like √(m_max − m)
    let m_max = models::mass_max();
    let (y, z) = (&rows[rows.len() - 2], &rows[rows.len() - 1]);
    let dy = (m_max - y.m).sqrt();
    let dz = (m_max - z.m).sqrt();
    let high_limit = z.ratio - (y.ratio - z.ratio) / (dy - dz) * dz;
    ScanChecks {
        strictly_increasing,
        below_bound,
        ordered,
        low_limit,
        high_limit,
    }
}
