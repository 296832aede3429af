//! Activation registry: evaluation functions plus the derivative data the
//! network constructions need.
//!
//! Each spec may declare up to two distinguished points:
//!
//! * `alpha_d1`: a point with nonzero first derivative, used by the
//!   approximate-identity construction;
//! * `alpha_d2`: a point with nonzero second derivative, used by the
//!   square-approximation substitutions (which additionally require
//!   `rho'(alpha) = 0` for the single-neuron variant).
//!
//! Declared values are analytic, not searched; [`probe_derivatives`]
//! cross-checks them with central finite differences.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;
use crate::math::abs;
use crate::Result;

/// Point with nonzero first derivative: `(alpha, rho(alpha), rho'(alpha))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaD1 {
    pub alpha: f64,
    pub rho: f64,
    pub d1: f64,
}

/// Point with nonzero second derivative:
/// `(alpha, rho(alpha), rho'(alpha), rho''(alpha))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaD2 {
    pub alpha: f64,
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
}

/// The built-in activation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Relu,
    LeakyRelu,
    Sigmoid,
    Tanh,
    Square,
    CubicPlusSquare,
    Quartic,
    Sine,
    Pathological,
}

/// An activation function together with its gadget metadata.
#[derive(Debug, Clone)]
pub struct ActivationSpec {
    pub key: String,
    kind: Kind,
    pub alpha_d1: Option<AlphaD1>,
    pub alpha_d2: Option<AlphaD2>,
    pub is_polynomial: bool,
    pub degree: Option<u32>,
    /// False only for activations where finite differences are meaningless
    /// (the truncated Weierstrass construction); the probe skips these.
    pub is_differentiable: bool,
}

/// Truncated Weierstrass sum: `sum_{k=0}^{20} 2^-k cos(3^k x)`.
///
/// Bounded by 2 in absolute value; 3^20 is exactly representable so the
/// evaluation is deterministic.
pub fn weierstrass(x: f64) -> f64 {
    let mut acc = 0.0;
    let mut amp = 1.0f64;
    let mut freq = 1.0f64;
    for _ in 0..=20 {
        acc += amp * libm::cos(freq * x);
        amp *= 0.5;
        freq *= 3.0;
    }
    acc
}

impl ActivationSpec {
    /// Evaluates the activation at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Relu => x.max(0.0),
            Kind::LeakyRelu => {
                if x >= 0.0 {
                    x
                } else {
                    0.01 * x
                }
            }
            Kind::Sigmoid => 1.0 / (1.0 + libm::exp(-x)),
            Kind::Tanh => libm::tanh(x),
            Kind::Square => x * x,
            Kind::CubicPlusSquare => x * x * (x + 1.0),
            Kind::Quartic => (x * x) * (x * x),
            Kind::Sine => libm::sin(x),
            Kind::Pathological => libm::sin(x) + weierstrass(x) * libm::exp(-x),
        }
    }

    /// The `alpha_d1` data or an unsupported-activation error.
    pub fn require_d1(&self) -> Result<AlphaD1> {
        self.alpha_d1.ok_or_else(|| {
            Error::UnsupportedActivation(format_key(&self.key, "has no point with rho' != 0"))
        })
    }

    /// The `alpha_d2` data or an unsupported-activation error.
    pub fn require_d2(&self) -> Result<AlphaD2> {
        self.alpha_d2.ok_or_else(|| {
            Error::UnsupportedActivation(format_key(&self.key, "has no point with rho'' != 0"))
        })
    }
}

fn format_key(key: &str, msg: &str) -> String {
    let mut s = String::new();
    s.push('\'');
    s.push_str(key);
    s.push_str("' ");
    s.push_str(msg);
    s
}

/// Immutable map from key to activation spec.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    map: BTreeMap<String, ActivationSpec>,
}

impl Registry {
    /// Looks a key up, erroring with the unknown key otherwise.
    pub fn get(&self, key: &str) -> Result<&ActivationSpec> {
        self.map
            .get(key)
            .ok_or_else(|| Error::UnknownActivation(key.to_string()))
    }

    /// True when the key resolves.
    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    /// Iterates specs in key order.
    pub fn iter(&self) -> impl Iterator<Item = &ActivationSpec> {
        self.map.values()
    }

    /// All keys in sorted order.
    pub fn keys(&self) -> Vec<&str> {
        self.map.keys().map(|k| k.as_str()).collect()
    }
}

fn spec(
    key: &str,
    kind: Kind,
    alpha_d1: Option<AlphaD1>,
    alpha_d2: Option<AlphaD2>,
    degree: Option<u32>,
    is_differentiable: bool,
) -> ActivationSpec {
    ActivationSpec {
        key: key.to_string(),
        kind,
        alpha_d1,
        alpha_d2,
        is_polynomial: degree.is_some(),
        degree,
        is_differentiable,
    }
}

/// The shipped activation registry.
///
/// Declared derivative values are analytic; every differentiable entry
/// passes [`probe_derivatives`] at the default tolerance.
pub fn builtin_registry() -> Registry {
    let mut map = BTreeMap::new();
    let entries = [
        spec(
            "relu",
            Kind::Relu,
            Some(AlphaD1 {
                alpha: 1.0,
                rho: 1.0,
                d1: 1.0,
            }),
            None,
            None,
            true,
        ),
        spec(
            "leaky-relu",
            Kind::LeakyRelu,
            Some(AlphaD1 {
                alpha: 1.0,
                rho: 1.0,
                d1: 1.0,
            }),
            None,
            None,
            true,
        ),
        spec(
            "sigmoid",
            Kind::Sigmoid,
            Some(AlphaD1 {
                alpha: 0.0,
                rho: 0.5,
                d1: 0.25,
            }),
            // sigma(1), sigma'(1) = s(1-s), sigma''(1) = s(1-s)(1-2s)
            Some(AlphaD2 {
                alpha: 1.0,
                rho: 0.731_058_578_630_004_9,
                d1: 0.196_611_933_241_481_85,
                d2: -0.090_857_747_672_948_42,
            }),
            None,
            true,
        ),
        spec(
            "tanh",
            Kind::Tanh,
            Some(AlphaD1 {
                alpha: 0.0,
                rho: 0.0,
                d1: 1.0,
            }),
            // tanh(1), 1 - tanh(1)^2, -2 tanh(1) (1 - tanh(1)^2)
            Some(AlphaD2 {
                alpha: 1.0,
                rho: 0.761_594_155_955_764_9,
                d1: 0.419_974_341_614_026_14,
                d2: -0.639_700_008_449_224_6,
            }),
            None,
            true,
        ),
        spec(
            "square",
            Kind::Square,
            Some(AlphaD1 {
                alpha: 1.0,
                rho: 1.0,
                d1: 2.0,
            }),
            Some(AlphaD2 {
                alpha: 0.0,
                rho: 0.0,
                d1: 0.0,
                d2: 2.0,
            }),
            Some(2),
            true,
        ),
        spec(
            "cubic-plus-square",
            Kind::CubicPlusSquare,
            // at 1: rho = 2, rho' = 3 + 2 = 5
            Some(AlphaD1 {
                alpha: 1.0,
                rho: 2.0,
                d1: 5.0,
            }),
            // at 0: rho' = 0, rho'' = 2, the critical point the
            // single-neuron square substitution requires
            Some(AlphaD2 {
                alpha: 0.0,
                rho: 0.0,
                d1: 0.0,
                d2: 2.0,
            }),
            Some(3),
            true,
        ),
        spec(
            "quartic",
            Kind::Quartic,
            Some(AlphaD1 {
                alpha: 1.0,
                rho: 1.0,
                d1: 4.0,
            }),
            Some(AlphaD2 {
                alpha: 1.0,
                rho: 1.0,
                d1: 4.0,
                d2: 12.0,
            }),
            Some(4),
            true,
        ),
        spec(
            "sine",
            Kind::Sine,
            Some(AlphaD1 {
                alpha: 0.0,
                rho: 0.0,
                d1: 1.0,
            }),
            // at pi/2: rho' = 0, rho'' = -1
            Some(AlphaD2 {
                alpha: core::f64::consts::FRAC_PI_2,
                rho: 1.0,
                d1: 0.0,
                d2: -1.0,
            }),
            None,
            true,
        ),
        spec("pathological", Kind::Pathological, None, None, None, false),
    ];
    for e in entries {
        map.insert(e.key.clone(), e);
    }
    Registry { map }
}

/// One finite-difference row of a probe report.
#[derive(Debug, Clone, Copy)]
pub struct ProbeRow {
    pub step: f64,
    pub d1_estimate: Option<f64>,
    pub d2_estimate: Option<f64>,
}

/// Finite-difference cross-check of a spec's declared derivatives.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub key: String,
    pub skipped: bool,
    pub rows: Vec<ProbeRow>,
    /// Worst relative disagreement across rows, scaled by max(1, declared).
    pub max_rel_err: f64,
}

impl fmt::Display for ProbeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.skipped {
            return write!(f, "{}: probe skipped (non-differentiable)", self.key);
        }
        writeln!(f, "{}: max relative error {:.3e}", self.key, self.max_rel_err)?;
        for row in &self.rows {
            write!(f, "  h={:.0e}", row.step)?;
            if let Some(d1) = row.d1_estimate {
                write!(f, " d1~{d1:.9}")?;
            }
            if let Some(d2) = row.d2_estimate {
                write!(f, " d2~{d2:.9}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Checks declared derivative values against central finite differences at
/// steps `1e-3, 1e-4, 1e-5`.
///
/// Disagreement beyond `tol * max(1, |declared|)` is an error naming the
/// spec and point. Non-differentiable specs are skipped. Specs must declare
/// at least one point unless flagged non-differentiable.
pub fn probe_derivatives(spec: &ActivationSpec, tol: f64) -> Result<ProbeReport> {
    if !spec.is_differentiable {
        return Ok(ProbeReport {
            key: spec.key.clone(),
            skipped: true,
            rows: Vec::new(),
            max_rel_err: 0.0,
        });
    }
    if spec.alpha_d1.is_none() && spec.alpha_d2.is_none() {
        return Err(Error::Probe(format_key(
            &spec.key,
            "declares no probe point",
        )));
    }

    let steps = [1e-3, 1e-4, 1e-5];
    let mut rows = Vec::new();
    let mut max_rel = 0.0f64;
    let mut check = |declared: f64, estimate: f64, what: &str, alpha: f64| -> Result<()> {
        let rel = abs(estimate - declared) / abs(declared).max(1.0);
        max_rel = max_rel.max(rel);
        if rel > tol {
            let mut msg = String::new();
            msg.push_str(what);
            msg.push_str(" mismatch at alpha=");
            push_f64(&mut msg, alpha);
            msg.push_str(": declared ");
            push_f64(&mut msg, declared);
            msg.push_str(", estimated ");
            push_f64(&mut msg, estimate);
            return Err(Error::Probe(format_key(&spec.key, &msg)));
        }
        Ok(())
    };

    for &h in &steps {
        let mut row = ProbeRow {
            step: h,
            d1_estimate: None,
            d2_estimate: None,
        };
        if let Some(a) = spec.alpha_d1 {
            let est = (spec.eval(a.alpha + h) - spec.eval(a.alpha - h)) / (2.0 * h);
            row.d1_estimate = Some(est);
            check(a.d1, est, "rho'", a.alpha)?;
        }
        if let Some(a) = spec.alpha_d2 {
            let d1_est = (spec.eval(a.alpha + h) - spec.eval(a.alpha - h)) / (2.0 * h);
            check(a.d1, d1_est, "rho' (second point)", a.alpha)?;
            let d2_est =
                (spec.eval(a.alpha + h) - 2.0 * spec.eval(a.alpha) + spec.eval(a.alpha - h))
                    / (h * h);
            row.d2_estimate = Some(d2_est);
            check(a.d2, d2_est, "rho''", a.alpha)?;
        }
        rows.push(row);
    }

    Ok(ProbeReport {
        key: spec.key.clone(),
        skipped: false,
        rows,
        max_rel_err: max_rel,
    })
}

fn push_f64(s: &mut String, v: f64) {
    use core::fmt::Write;
    let _ = write!(s, "{v}");
}
