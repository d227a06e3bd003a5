//! Uniform pass/fail reporting for the verification sweeps.
//!
//! Every check in this crate reduces to a list of residuals compared
//! against one tolerance. [`CheckReport`] freezes that comparison
//! together with the sampling metadata needed to reproduce it, and
//! [`verify_reports`] assembles the canonical battery for one triple:
//! the identity suite (pointwise and integrated identities of the
//! static system) followed by the lift suite (the circle-bundle
//! Einstein metric and its curvature bookkeeping).
//!
//! Reports are append-only: the battery never mutates or removes an
//! emitted report, and `pass` is always exactly `max_residual <=
//! tolerance`. Sweeps draw deterministic samples (each check derives
//! its own seed lane from the base seed) and reduce in sample order,
//! so a battery is bytewise reproducible for a fixed configuration,
//! with or without the parallel feature.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::boundary;
use crate::conformal;
use crate::curvature::CurvatureError;
use crate::fd::FdOptions;
use crate::func1d::Func1;
use crate::integral;
use crate::lift::{self, LiftError};
use crate::par;
use crate::residuals;
use crate::slices;
use crate::triple::StaticTriple;
use crate::weyl;

/// Checks of the identity suite, in battery order.
pub const IDENTITY_CHECKS: [&str; 7] = [
    "static",
    "bochner",
    "shen",
    "cotton",
    "integral",
    "slice-gauss",
    "face-expansion",
];

/// Checks of the lift suite, in battery order.
pub const LIFT_CHECKS: [&str; 5] = [
    "einstein-lift",
    "weyl-match",
    "cone-exponent",
    "lift-volume",
    "gbc",
];

/// Default tolerance for a named check, or `None` for an unknown name.
///
/// `fd_path` selects the coarser gate for the finite-difference
/// derivative path where one applies (currently only the Bochner
/// check, whose outer derivatives lose accuracy under differencing).
pub fn default_tolerance(check: &str, fd_path: bool) -> Option<f64> {
    Some(match check {
        "static" => 1e-6,
        "bochner" => {
            if fd_path {
                1e-4
            } else {
                1e-5
            }
        }
        "shen" => 1e-6,
        "cotton" => 1e-6,
        "integral" => 1e-8,
        "slice-gauss" => 1e-7,
        "face-expansion" => 0.02,
        "einstein-lift" => 1e-5,
        "weyl-match" => 1e-8,
        "cone-exponent" => 0.1,
        "lift-volume" => 1e-8,
        "gbc" => 1e-7,
        _ => return None,
    })
}

/// One check, reduced to a verdict.
///
/// Invariant: `pass == (max_residual <= tolerance)`. Non-finite
/// residuals are recorded as [`f64::MAX`] (failing any sane tolerance
/// and keeping JSON serialization lossless), with the count of
/// replaced entries noted under the `nonfinite_residuals` metadata
/// key. When a check reduces its samples internally and exposes only
/// a worst case, `mean_residual` equals `max_residual`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub triple_name: String,
    /// Number of samples the check drew (points, faces, slices, or 1
    /// for a single integrated identity).
    pub sample_count: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Reproduction data: seeds, grids, constituent values. Keys are
    /// sorted, so serialization order is deterministic.
    pub metadata: BTreeMap<String, String>,
}

impl CheckReport {
    /// Reduce a residual list against a tolerance.
    ///
    /// `sample_count` is the number of samples that produced the
    /// list, which may differ from `residuals.len()` when a check
    /// emits several residuals per sample or reduces internally.
    pub fn from_residuals(
        check_name: &str,
        triple_name: &str,
        sample_count: usize,
        residuals: &[f64],
        tolerance: f64,
    ) -> Self {
        assert!(!residuals.is_empty(), "a check must produce residuals");
        let mut metadata = BTreeMap::new();
        let nonfinite = residuals.iter().filter(|r| !r.is_finite()).count();
        if nonfinite > 0 {
            metadata.insert("nonfinite_residuals".into(), nonfinite.to_string());
        }
        let clean = |r: &f64| if r.is_finite() { *r } else { f64::MAX };
        let max_residual = residuals.iter().map(clean).fold(f64::NEG_INFINITY, f64::max);
        let mean_residual = residuals.iter().map(|r| clean(r)).sum::<f64>() / residuals.len() as f64;
        CheckReport {
            check_name: check_name.into(),
            triple_name: triple_name.into(),
            sample_count,
            max_residual,
            mean_residual,
            tolerance,
            pass: max_residual <= tolerance,
            metadata,
        }
    }

    /// Attach one metadata entry (builder style).
    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    /// Whether the stored verdict matches the stored numbers. True
    /// for every report this module constructs; exposed so consumers
    /// of deserialized reports can reject tampered data.
    pub fn invariant_holds(&self) -> bool {
        self.pass == (self.max_residual <= self.tolerance)
    }
}

/// Configuration shared by every check of a battery.
#[derive(Clone, Debug)]
pub struct BatteryOptions {
    /// Interior sample count for the pointwise sweeps.
    pub samples: usize,
    /// Base seed; each sweep derives its own lane from it, so one
    /// check's draws never shift another's.
    pub seed: u64,
    /// Use finite-difference outer derivatives where a check offers
    /// the choice (the Bochner identity), with the matching coarser
    /// default tolerance.
    pub fd_path: bool,
    /// Tolerance overrides keyed by check name. Applied overrides are
    /// echoed into the report metadata under `tolerance_override`.
    pub overrides: BTreeMap<String, f64>,
    /// Derivative controls passed through to every check.
    pub fd: FdOptions,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        BatteryOptions {
            samples: 100,
            seed: 7,
            fd_path: false,
            overrides: BTreeMap::new(),
            fd: FdOptions::default(),
        }
    }
}

impl BatteryOptions {
    fn tolerance_for(&self, check: &str) -> (f64, bool) {
        match self.overrides.get(check) {
            Some(&t) => (t, true),
            None => (
                default_tolerance(check, self.fd_path).expect("known check name"),
                false,
            ),
        }
    }

    /// Build a report honoring any tolerance override for `check`.
    fn report(
        &self,
        check: &str,
        t: &StaticTriple,
        sample_count: usize,
        residuals: &[f64],
    ) -> CheckReport {
        let (tol, overridden) = self.tolerance_for(check);
        let r = CheckReport::from_residuals(check, &t.name, sample_count, residuals, tol);
        if overridden {
            r.with_meta("tolerance_override", fmt(tol))
        } else {
            r
        }
    }
}

/// Shortest round-trip decimal rendering, for metadata values.
fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Per-check seed lane.
fn lane_seed(base: u64, lane: u64) -> u64 {
    base ^ lane.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Deterministic parallel residual sweep over interior samples.
fn sweep<F>(
    t: &StaticTriple,
    seed: u64,
    n: usize,
    f: F,
) -> Result<Vec<f64>, CurvatureError>
where
    F: Fn(&[f64]) -> Result<f64, CurvatureError> + Sync + Send,
{
    let pts = t.sample_interior(seed, n);
    par::par_map(&pts, |p| f(p)).into_iter().collect()
}

/// Identity-suite battery: pointwise identities, the integrated
/// identity, and the boundary/slice geometry. Requires a radial
/// triple (every model constructor in this crate produces one).
pub fn identity_reports(
    t: &StaticTriple,
    o: &BatteryOptions,
) -> Result<Vec<CheckReport>, CurvatureError> {
    let mut out = Vec::with_capacity(IDENTITY_CHECKS.len());

    let seed = lane_seed(o.seed, 1);
    let rs = sweep(t, seed, o.samples, |p| {
        residuals::static_residual(t, p, &o.fd).map(|c| c.max)
    })?;
    out.push(o.report("static", t, o.samples, &rs).with_meta("seed", seed));

    let seed = lane_seed(o.seed, 2);
    let fd_path = o.fd_path;
    let rs = sweep(t, seed, o.samples, |p| {
        if fd_path {
            residuals::bochner_residual_fd(t, p, &o.fd).map(|c| c.residual)
        } else {
            residuals::bochner_residual(t, p, &o.fd).map(|c| c.residual)
        }
    })?;
    out.push(
        o.report("bochner", t, o.samples, &rs)
            .with_meta("seed", seed)
            .with_meta(
                "derivative_path",
                if fd_path { "finite-difference" } else { "analytic" },
            ),
    );

    let seed = lane_seed(o.seed, 3);
    let rs = sweep(t, seed, o.samples, |p| {
        residuals::shen_residual(t, p, &o.fd).map(|c| c.residual)
    })?;
    out.push(o.report("shen", t, o.samples, &rs).with_meta("seed", seed));

    let seed = lane_seed(o.seed, 4);
    let rs = sweep(t, seed, o.samples, |p| {
        residuals::cotton_residuals(t, p, &o.fd).map(|c| c.r1.max(c.r2).max(c.r3).max(c.r4))
    })?;
    out.push(o.report("cotton", t, o.samples, &rs).with_meta("seed", seed));

    let ic = integral::integral_identity(t, &o.fd)?;
    let rel = ic.residual / ic.expected.abs().max(f64::MIN_POSITIVE);
    out.push(
        o.report("integral", t, 1, &[rel])
            .with_meta("bulk", fmt(ic.bulk))
            .with_meta("boundary", fmt(ic.boundary))
            .with_meta("expected", fmt(ic.expected))
            .with_meta("residual_abs", fmt(ic.residual))
            .with_meta("quad_error", fmt(ic.quad_error))
            .with_meta("converged", ic.converged),
    );

    let rr = t.radial.as_ref().expect("slice checks require a radial reduction");
    let slices_n = 8usize;
    let width = rr.hi - rr.lo;
    let mut rs = Vec::with_capacity(2 * slices_n);
    let mut worst_density = 0.0f64;
    for j in 0..slices_n {
        let r = rr.lo + width * (j as f64 + 0.5) / slices_n as f64;
        let c = slices::slice_check(t, r, &o.fd)?;
        rs.push(c.residual / c.gauss_equation_rhs.abs().max(1.0));
        rs.push(c.density_defect);
        worst_density = worst_density.max(c.density_defect);
    }
    out.push(
        o.report("slice-gauss", t, slices_n, &rs)
            .with_meta("radii", format!("{slices_n} equispaced interior slices"))
            .with_meta("worst_density_defect", fmt(worst_density)),
    );

    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let mut rs = Vec::with_capacity(4 * t.boundary.len());
    let mut md: Vec<(String, String)> = Vec::new();
    for face in &t.boundary {
        let fe = boundary::face_expansion(t, face, &o.fd)?;
        rs.push(rel(fe.surface_gravity_fit, face.surface_gravity));
        rs.push(rel(fe.v2_coeff, fe.v2_predicted));
        rs.push(rel(fe.grad2_coeff, fe.grad2_predicted));
        rs.push(rel(fe.gauss_curvature, fe.gauss_from_area));
        md.push((format!("{}.kappa_fit", face.name), fmt(fe.surface_gravity_fit)));
        md.push((format!("{}.v2_coeff", face.name), fmt(fe.v2_coeff)));
        md.push((format!("{}.v2_predicted", face.name), fmt(fe.v2_predicted)));
        md.push((format!("{}.grad2_coeff", face.name), fmt(fe.grad2_coeff)));
        md.push((format!("{}.grad2_predicted", face.name), fmt(fe.grad2_predicted)));
        md.push((format!("{}.gauss", face.name), fmt(fe.gauss_curvature)));
        md.push((format!("{}.gauss_from_area", face.name), fmt(fe.gauss_from_area)));
    }
    let mut rep = o.report("face-expansion", t, t.boundary.len(), &rs);
    for (k, v) in md {
        rep.metadata.insert(k, v);
    }
    out.push(rep);

    Ok(out)
}

/// Lift-suite battery: the Einstein defect of the circle-bundle
/// metric, its self-dual Weyl bookkeeping, the cone model at the
/// faces, the volume identity, and the curvature integral of the
/// conformally flattened lift (with trivial conformal factor).
pub fn lift_reports(
    t: &StaticTriple,
    o: &BatteryOptions,
) -> Result<Vec<CheckReport>, LiftError> {
    let mut out = Vec::with_capacity(LIFT_CHECKS.len());

    let seed = lane_seed(o.seed, 5);
    let e = lift::einstein_check(t, seed, o.samples, &o.fd)?;
    out.push(
        o.report("einstein-lift", t, e.points, &[e.max_defect])
            .with_meta("seed", seed),
    );

    let seed = lane_seed(o.seed, 6);
    let w = lift::weyl_match_check(t, seed, o.samples, &o.fd)?;
    out.push(
        o.report("weyl-match", t, w.points, &[w.plus_defect, w.minus_defect])
            .with_meta("seed", seed)
            .with_meta("plus_defect", fmt(w.plus_defect))
            .with_meta("minus_defect", fmt(w.minus_defect))
            .with_meta("norm_convention", weyl::WEYL_NORM_CONVENTION),
    );

    // Lower-bound check, reported through the shared invariant:
    // residual = 2 - fitted exponent, so the default tolerance 0.1
    // passes exactly when every face decays at order >= 1.9.
    let mut rs = Vec::with_capacity(t.boundary.len());
    let mut md: Vec<(String, String)> = Vec::new();
    for face in &t.boundary {
        let exp = lift::cone_exponent(t, face);
        rs.push(2.0 - exp);
        md.push((format!("{}.exponent", face.name), fmt(exp)));
    }
    let mut r = o.report("cone-exponent", t, t.boundary.len(), &rs);
    for (k, v) in md {
        r.metadata.insert(k, v);
    }
    out.push(r.with_meta("residual_definition", "2 - fitted decay exponent"));

    let lv = lift::lift_volume(t, &o.fd)?;
    let rel = (lv.volume - lv.from_boundary).abs() / lv.from_boundary.abs();
    out.push(
        o.report("lift-volume", t, 1, &[rel, lv.det_defect])
            .with_meta("volume", fmt(lv.volume))
            .with_meta("from_boundary", fmt(lv.from_boundary))
            .with_meta("det_defect", fmt(lv.det_defect)),
    );

    let g = conformal::gbc_direct(t, &Func1::Const(1.0), &o.fd)?;
    let rel = g.residual / g.rhs.abs().max(f64::MIN_POSITIVE);
    out.push(
        o.report("gbc", t, 1, &[rel])
            .with_meta("scalar", fmt(g.scalar))
            .with_meta("weyl_plus", fmt(g.weyl_plus))
            .with_meta("traceless", fmt(g.traceless))
            .with_meta("rhs", fmt(g.rhs))
            .with_meta("converged", g.converged)
            .with_meta("conformal_factor", "1"),
    );

    Ok(out)
}

/// The full battery: identity suite followed by lift suite.
pub fn verify_reports(
    t: &StaticTriple,
    o: &BatteryOptions,
) -> Result<Vec<CheckReport>, LiftError> {
    let mut out = identity_reports(t, o)?;
    out.extend(lift_reports(t, o)?);
    Ok(out)
}
