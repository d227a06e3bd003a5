//! The canonical static triples and the warped-model file format.
//!
//! Three closed-form models at `ε = 1` (scalar curvature 6):
//!
//! * **hemisphere** — the closed unit upper half three-sphere with
//!   potential `cos s`; one totally geodesic boundary sphere of area
//!   `4π` and unit surface gravity.
//! * **cylinder** — the round product of an interval with a two-sphere
//!   of radius `1/√3`, potential `sin(√3 t)/√3`; two horizon faces of
//!   area `4π/3` and unit surface gravity.
//! * **sds:m** — the Schwarzschild–de Sitter static region at mass
//!   `0 < m < 1/(3√3)`: profile `f(r) = 1 − r² − 2m/r` between its two
//!   positive zeros, metric `dr²/f + r² dΩ²`, potential `√f`.
//!
//! A fourth family is read from a key=value file describing a warped
//! profile `f(r)` as a polynomial plus inverse powers of `r`.

use crate::chart::{Chart, ComponentRep, ProductTerm};
use crate::func1d::Func1;
use crate::roots::{self, RootError};
use crate::triple::{BoundaryComponent, RadialReduction, ScalarField, StaticTriple};
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

/// Largest admissible Schwarzschild–de Sitter mass: `1/(3√3)`.
pub fn mass_max() -> f64 {
    1.0 / (3.0 * 3.0f64.sqrt())
}

/// Enforced distance from the degenerate endpoints of the mass range.
pub const MASS_MARGIN: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("mass out of range (0, 1/(3√3)): {0}")]
    MassOutOfRange(f64),
    #[error("failed to locate a horizon: {0}")]
    Horizon(#[from] RootError),
    #[error("cannot read model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file line {line}: {msg}")]
    BadFile { line: usize, msg: String },
    #[error("profile is not positive on the interior: f({r}) = {value}")]
    NonPositiveProfile { r: f64, value: f64 },
    #[error("unknown triple spec '{0}' (expected hemisphere, cylinder, sds:<mass>, or warped:<file>)")]
    UnknownSpec(String),
}

fn sin2() -> Func1 {
    Func1::Prod(vec![Func1::Sin(1.0), Func1::Sin(1.0)])
}

/// The closed hemisphere model.
pub fn hemisphere_triple() -> StaticTriple {
    let chart = Chart::separable_diag(
        &["s", "theta", "phi"],
        vec![(0.0, PI / 2.0), (0.0, PI), (0.0, 2.0 * PI)],
        vec![
            ComponentRep::constant(1.0),
            ComponentRep::single(1.0, vec![(0, sin2())]),
            ComponentRep::single(1.0, vec![(0, sin2()), (1, sin2())]),
        ],
    );
    StaticTriple {
        name: "hemisphere".into(),
        chart,
        potential: ScalarField::Rep(ComponentRep::single(1.0, vec![(0, Func1::Cos(1.0))])),
        v_squared: Some(ComponentRep::single(
            1.0,
            vec![(0, Func1::Prod(vec![Func1::Cos(1.0), Func1::Cos(1.0)]))],
        )),
        epsilon: 1.0,
        boundary: vec![BoundaryComponent {
            name: "equator".into(),
            coordinate: 0,
            value: PI / 2.0,
            inward: -1.0,
            surface_gravity: 1.0,
            area: 4.0 * PI,
        }],
        radial: Some(RadialReduction { lo: 0.0, hi: PI / 2.0 }),
    }
}

/// The round cylinder model.
pub fn cylinder_triple() -> StaticTriple {
    let sqrt3 = 3.0f64.sqrt();
    let len = PI / sqrt3;
    let chart = Chart::separable_diag(
        &["t", "theta", "phi"],
        vec![(0.0, len), (0.0, PI), (0.0, 2.0 * PI)],
        vec![
            ComponentRep::constant(1.0),
            ComponentRep::constant(1.0 / 3.0),
            ComponentRep::single(1.0 / 3.0, vec![(1, sin2())]),
        ],
    );
    let face = |name: &str, value: f64, inward: f64| BoundaryComponent {
        name: name.into(),
        coordinate: 0,
        value,
        inward,
        surface_gravity: 1.0,
        area: 4.0 * PI / 3.0,
    };
    StaticTriple {
        name: "cylinder".into(),
        chart,
        potential: ScalarField::Rep(ComponentRep::single(
            1.0 / sqrt3,
            vec![(0, Func1::Sin(sqrt3))],
        )),
        v_squared: Some(ComponentRep::single(
            1.0 / 3.0,
            vec![(0, Func1::Prod(vec![Func1::Sin(sqrt3), Func1::Sin(sqrt3)]))],
        )),
        epsilon: 1.0,
        boundary: vec![face("bottom", 0.0, 1.0), face("top", len, -1.0)],
        radial: Some(RadialReduction { lo: 0.0, hi: len }),
    }
}

/// The Schwarzschild–de Sitter profile `f(r) = 1 - r² - 2m/r`.
pub fn sds_profile(m: f64) -> Func1 {
    Func1::Sum(vec![
        Func1::Poly(vec![1.0, 0.0, -1.0]),
        Func1::InvPow { coeff: -2.0 * m, k: 1 },
    ])
}

/// Zeros of the Schwarzschild–de Sitter profile: `(r_h, r_c)` with
/// `0 < r_h < 1/√3 < r_c < 1`.
pub fn sds_horizons(m: f64) -> Result<(f64, f64), ModelError> {
    if !(MASS_MARGIN..=mass_max() - MASS_MARGIN).contains(&m) {
        return Err(ModelError::MassOutOfRange(m));
    }
    let f = sds_profile(m);
    let eval = |r: f64| f.eval(r);
    let split = 1.0 / 3.0f64.sqrt();
    // Newton polish after Brent: the bracket tolerance is absolute, but
    // r_h is O(2m) for small masses and needs full relative accuracy.
    let polish = |mut r: f64| {
        for _ in 0..3 {
            let d = f.deriv(r);
            if d != 0.0 {
                r -= f.eval(r) / d;
            }
        }
        r
    };
    let r_h = polish(roots::brent(eval, 1e-12, split, 1e-14)?);
    let r_c = polish(roots::brent(eval, split, 1.0, 1e-14)?);
    Ok((r_h, r_c))
}

/// Surface gravity of a horizon of the profile `f`: `|f'(r)| / 2`.
///
/// For `V = √f` with metric `dr²/f + r² dΩ²` the gradient norm is
/// `|∇V| = |f'|/2` identically in `r`, so this is also the limit of
/// `|∇V|` at the face.
pub fn profile_surface_gravity(f: &Func1, r: f64) -> f64 {
    f.deriv(r).abs() / 2.0
}

/// Static region of Schwarzschild–de Sitter space at mass `m`.
pub fn sds_triple(m: f64) -> Result<StaticTriple, ModelError> {
    let (r_h, r_c) = sds_horizons(m)?;
    let f = sds_profile(m);
    Ok(warped_triple(
        format!("sds:{m}"),
        f,
        r_h,
        r_c,
        1.0,
        ("horizon", "cosmological"),
    ))
}

/// Assemble a warped triple from a profile and its radial interval.
fn warped_triple(
    name: String,
    f: Func1,
    r_min: f64,
    r_max: f64,
    epsilon: f64,
    face_names: (&str, &str),
) -> StaticTriple {
    let chart = Chart::separable_diag(
        &["r", "theta", "phi"],
        vec![(r_min, r_max), (0.0, PI), (0.0, 2.0 * PI)],
        vec![
            ComponentRep::single(1.0, vec![(0, Func1::Recip(Box::new(f.clone())))]),
            ComponentRep::single(1.0, vec![(0, Func1::Poly(vec![0.0, 0.0, 1.0]))]),
            ComponentRep {
                terms: vec![ProductTerm {
                    coeff: 1.0,
                    factors: vec![(0, Func1::Poly(vec![0.0, 0.0, 1.0])), (1, sin2())],
                }],
            },
        ],
    );
    let face = |name: &str, r: f64, inward: f64| BoundaryComponent {
        name: name.into(),
        coordinate: 0,
        value: r,
        inward,
        surface_gravity: profile_surface_gravity(&f, r),
        area: 4.0 * PI * r * r,
    };
    StaticTriple {
        name,
        chart,
        potential: ScalarField::Rep(ComponentRep::single(
            1.0,
            vec![(0, Func1::Sqrt(Box::new(f.clone())))],
        )),
        // V² = f exactly: the lift stays jet-exact across horizons,
        // where jets of √f would lose all precision.
        v_squared: Some(ComponentRep::single(1.0, vec![(0, f.clone())])),
        epsilon,
        boundary: vec![
            face(face_names.0, r_min, 1.0),
            face(face_names.1, r_max, -1.0),
        ],
        radial: Some(RadialReduction { lo: r_min, hi: r_max }),
    }
}

/// Parse a warped-model description file.
///
/// Flat `key = value` lines; `#` starts a comment; keys:
///
/// * `f_poly` — comma-separated polynomial coefficients of `f`,
///   constant term first (required);
/// * `f_rinv` — comma-separated coefficients of `r⁻¹, r⁻², …`
///   (optional);
/// * `r_min`, `r_max` — radial interval (required);
/// * `epsilon` — scalar-curvature normalization `R = 6ε` (default 1);
/// * `name` — display name (default `warped`).
///
/// Unknown keys are an error. The profile must be positive on the open
/// interval; each face is classified by checking `f` there (horizon when
/// `f ≈ 0`), but the surface gravity `|f'|/2` is the same either way.
pub fn warped_from_file(path: &Path) -> Result<StaticTriple, ModelError> {
    let text = std::fs::read_to_string(path)?;
    let mut f_poly: Option<Vec<f64>> = None;
    let mut f_rinv: Vec<f64> = Vec::new();
    let mut r_min: Option<f64> = None;
    let mut r_max: Option<f64> = None;
    let mut epsilon = 1.0;
    let mut name = "warped".to_string();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ModelError::BadFile {
                line: line_no,
                msg: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let parse_list = |v: &str| -> Result<Vec<f64>, ModelError> {
            v.split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| ModelError::BadFile {
                        line: line_no,
                        msg: format!("bad number '{}' in list", s.trim()),
                    })
                })
                .collect()
        };
        let parse_num = |v: &str| -> Result<f64, ModelError> {
            v.parse::<f64>().map_err(|_| ModelError::BadFile {
                line: line_no,
                msg: format!("bad number '{v}'"),
            })
        };
        match key {
            "f_poly" => f_poly = Some(parse_list(value)?),
            "f_rinv" => f_rinv = parse_list(value)?,
            "r_min" => r_min = Some(parse_num(value)?),
            "r_max" => r_max = Some(parse_num(value)?),
            "epsilon" => epsilon = parse_num(value)?,
            "name" => name = value.to_string(),
            other => {
                return Err(ModelError::BadFile {
                    line: line_no,
                    msg: format!("unknown key '{other}'"),
                });
            }
        }
    }

    let missing = |what: &str| ModelError::BadFile {
        line: 0,
        msg: format!("missing required key '{what}'"),
    };
    let f_poly = f_poly.ok_or_else(|| missing("f_poly"))?;
    let r_min = r_min.ok_or_else(|| missing("r_min"))?;
    let r_max = r_max.ok_or_else(|| missing("r_max"))?;
    if !(r_min.is_finite() && r_max.is_finite() && r_min > 0.0 && r_min < r_max) {
        return Err(ModelError::BadFile {
            line: 0,
            msg: format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]"),
        });
    }

    let mut parts = vec![Func1::Poly(f_poly)];
    for (j, &c) in f_rinv.iter().enumerate() {
        parts.push(Func1::InvPow { coeff: c, k: (j + 1) as i32 });
    }
    let f = Func1::Sum(parts);

    // Positivity probe on the interior.
    for i in 1..64 {
        let r = r_min + (r_max - r_min) * (i as f64) / 64.0;
        let v = f.eval(r);
        if v <= 0.0 {
            return Err(ModelError::NonPositiveProfile { r, value: v });
        }
    }

    Ok(warped_triple(name, f, r_min, r_max, epsilon, ("inner", "outer")))
}

/// Resolve a triple spec string: `hemisphere`, `cylinder`, `sds:<mass>`,
/// or `warped:<file>`.
pub fn triple_by_spec(spec: &str) -> Result<StaticTriple, ModelError> {
    match spec {
        "hemisphere" => Ok(hemisphere_triple()),
        "cylinder" => Ok(cylinder_triple()),
        other => {
            if let Some(mass) = other.strip_prefix("sds:") {
                let m = mass
                    .parse::<f64>()
                    .map_err(|_| ModelError::UnknownSpec(other.to_string()))?;
                sds_triple(m)
            } else if let Some(path) = other.strip_prefix("warped:") {
                warped_from_file(Path::new(path))
            } else {
                Err(ModelError::UnknownSpec(other.to_string()))
            }
        }
    }
}
