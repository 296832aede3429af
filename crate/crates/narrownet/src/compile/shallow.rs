//! Width-beta depth-1 nets and a random-feature least-squares fitter.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::act::Registry;
use crate::error::Error;
use crate::math::{abs, lstsq, rng_from_seed, sample_box, sqrt, uniform};
use crate::net::Box as DomainBox;
use crate::Result;

/// One hidden unit of a shallow net: `coeff * rho(weights . x + bias)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub coeff: f64,
}

/// A depth-1 net `sum_j coeff_j rho(w_j . x + b_j) + out_bias` with a single
/// scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct ShallowNet {
    pub key: String,
    pub input_dim: usize,
    pub units: Vec<Unit>,
    pub out_bias: f64,
}

impl ShallowNet {
    pub fn width(&self) -> usize {
        self.units.len()
    }

    /// Direct evaluation; the deep compilers must reproduce this.
    pub fn evaluate(&self, x: &[f64], reg: &Registry) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension(format!(
                "shallow net expects {} inputs, got {}",
                self.input_dim,
                x.len()
            )));
        }
        let spec = reg.get(&self.key)?;
        let mut acc = 0.0;
        for unit in &self.units {
            let mut pre = unit.bias;
            for (w, v) in unit.weights.iter().zip(x.iter()) {
                pre += w * v;
            }
            acc += unit.coeff * spec.eval(pre);
        }
        Ok(acc + self.out_bias)
    }
}

/// Fit quality on the training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Root-mean-square residual over the sample.
    pub residual: f64,
    /// Largest pointwise residual over the sample.
    pub sup_residual: f64,
    /// The normal system looked rank-deficient; coefficients may be large.
    pub rank_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub seed: u64,
    /// Training points; 0 picks `max(10 * (width + 1), 200)`.
    pub samples: usize,
    /// Random feature weights are uniform in `[-scale, scale]`, measured
    /// per unit of half-domain.
    pub weight_scale: f64,
    /// When set, unit pre-activations at the domain center are drawn from
    /// this band instead of the symmetric default.
    pub bias_band: Option<(f64, f64)>,
    /// Tikhonov damping on the unit coefficients (the output bias is never
    /// damped). Zero solves the plain least-squares system. Near-collinear
    /// feature draws otherwise produce huge cancelling coefficients, and
    /// downstream identity emulation pays for every unit of carried
    /// magnitude.
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            samples: 0,
            weight_scale: 2.0,
            bias_band: None,
            ridge: 0.0,
        }
    }
}

/// Draws random hidden features, then solves least squares for the output
/// coefficients and bias.
pub fn fit_shallow(
    f: &dyn Fn(&[f64]) -> f64,
    width: usize,
    domain: &DomainBox,
    key: &str,
    reg: &Registry,
    opts: &FitOptions,
) -> Result<(ShallowNet, FitReport)> {
    if width == 0 {
        return Err(Error::Precondition(
            "shallow fit needs at least one unit".to_string(),
        ));
    }
    let spec = reg.get(key)?;
    let n = domain.dim();
    let samples = if opts.samples == 0 {
        (10 * (width + 1)).max(200)
    } else {
        opts.samples
    };
    if samples < width + 1 {
        return Err(Error::Precondition(format!(
            "shallow fit needs at least {} samples for width {width}",
            width + 1
        )));
    }

    let mut rng = rng_from_seed(opts.seed);
    let mut units: Vec<Unit> = Vec::with_capacity(width);
    for _ in 0..width {
        let mut weights = vec![0.0; n];
        for (k, w) in weights.iter_mut().enumerate() {
            let half = (domain.upper[k] - domain.lower[k]) / 2.0;
            *w = uniform(&mut rng, -opts.weight_scale, opts.weight_scale) / half;
        }
        let raw = match opts.bias_band {
            Some((lo, hi)) => uniform(&mut rng, lo, hi),
            None => uniform(&mut rng, -opts.weight_scale, opts.weight_scale),
        };
        let mut bias = raw;
        for k in 0..n {
            let center = (domain.lower[k] + domain.upper[k]) / 2.0;
            bias -= weights[k] * center;
        }
        units.push(Unit {
            weights,
            bias,
            coeff: 0.0,
        });
    }

    let mut points = Vec::with_capacity(samples);
    let mut point = vec![0.0; n];
    for _ in 0..samples {
        sample_box(&mut rng, &domain.lower, &domain.upper, &mut point);
        points.push(point.clone());
    }

    if !(opts.ridge.is_finite() && opts.ridge >= 0.0) {
        return Err(Error::Precondition(
            "ridge damping must be finite and non-negative".to_string(),
        ));
    }

    // Column-major design matrix: one column per unit, plus a constant one.
    // Damping appends sqrt(ridge) rows, one per unit column, so the same QR
    // solve minimizes |Ax - y|^2 + ridge |coeffs|^2.
    let cols = width + 1;
    let damp_rows = if opts.ridge > 0.0 { width } else { 0 };
    let rows = samples + damp_rows;
    let mut a = vec![0.0; rows * cols];
    let mut y = vec![0.0; rows];
    for (r, p) in points.iter().enumerate() {
        for (j, unit) in units.iter().enumerate() {
            let mut pre = unit.bias;
            for (w, v) in unit.weights.iter().zip(p.iter()) {
                pre += w * v;
            }
            a[j * rows + r] = spec.eval(pre);
        }
        a[width * rows + r] = 1.0;
        y[r] = f(p);
    }
    let damp = sqrt(opts.ridge);
    for j in 0..damp_rows {
        a[j * rows + samples + j] = damp;
    }
    let solved = lstsq(&mut a, rows, cols, &mut y);
    for (unit, c) in units.iter_mut().zip(solved.coeffs.iter()) {
        unit.coeff = *c;
    }
    let net = ShallowNet {
        key: key.to_string(),
        input_dim: n,
        units,
        out_bias: solved.coeffs[width],
    };

    let mut sq_sum = 0.0;
    let mut sup = 0.0f64;
    for p in &points {
        let d = abs(net.evaluate(p, reg)? - f(p));
        sq_sum += d * d;
        sup = sup.max(d);
    }
    let report = FitReport {
        residual: sqrt(sq_sum / samples as f64),
        sup_residual: sup,
        rank_warning: solved.rank_warning,
    };
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::act::builtin_registry;
    use crate::math::linspace;

    fn interval(lo: f64, hi: f64) -> DomainBox {
        DomainBox::interval(lo, hi).unwrap()
    }

    #[test]
    fn evaluate_is_the_plain_sum() {
        let net = ShallowNet {
            key: "tanh".to_string(),
            input_dim: 1,
            units: vec![
                Unit {
                    weights: vec![2.0],
                    bias: 0.5,
                    coeff: 3.0,
                },
                Unit {
                    weights: vec![-1.0],
                    bias: 0.0,
                    coeff: 1.5,
                },
            ],
            out_bias: -1.0,
        };
        let reg = builtin_registry();
        let x = 0.7;
        let want = 3.0 * libm::tanh(2.0 * x + 0.5) + 1.5 * libm::tanh(-x) - 1.0;
        assert_eq!(net.evaluate(&[x], &reg).unwrap(), want);
        assert!(net.evaluate(&[1.0, 2.0], &reg).is_err());
    }

    #[test]
    fn relu_features_recover_a_linear_target() {
        let reg = builtin_registry();
        let dom = interval(-1.0, 1.0);
        // With enough units some act affinely on the domain, so the linear
        // target is recovered almost exactly by least squares.
        let (net, report) = fit_shallow(
            &|x| x[0],
            12,
            &dom,
            "relu",
            &reg,
            &FitOptions {
                seed: 5,
                ..FitOptions::default()
            },
        )
        .unwrap();
        assert!(report.residual < 1e-8, "residual {}", report.residual);
        for x in linspace(-1.0, 1.0, 41) {
            assert!(abs(net.evaluate(&[x], &reg).unwrap() - x) < 1e-6);
        }
    }

    #[test]
    fn tanh_fit_tracks_a_smooth_target() {
        let reg = builtin_registry();
        let dom = interval(-1.0, 1.0);
        let truth = |x: &[f64]| x[0] * x[0] + 0.5 * x[0];
        let (net, report) =
            fit_shallow(&truth, 10, &dom, "tanh", &reg, &FitOptions::default()).unwrap();
        assert!(report.residual < 1e-3, "residual {}", report.residual);
        assert!(report.sup_residual < 1e-2);
        assert_eq!(net.width(), 10);
        assert_eq!(net.key, "tanh");
    }

    #[test]
    fn fitting_is_deterministic() {
        let reg = builtin_registry();
        let dom = interval(0.0, 2.0);
        let truth = |x: &[f64]| libm::sin(x[0]);
        let opts = FitOptions {
            seed: 42,
            ..FitOptions::default()
        };
        let (a, ra) = fit_shallow(&truth, 6, &dom, "sigmoid", &reg, &opts).unwrap();
        let (b, rb) = fit_shallow(&truth, 6, &dom, "sigmoid", &reg, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn bias_band_places_center_preactivations() {
        let reg = builtin_registry();
        let dom = interval(-1.0, 1.0);
        let opts = FitOptions {
            seed: 9,
            bias_band: Some((37.0, 43.0)),
            ..FitOptions::default()
        };
        let (net, _) = fit_shallow(&|x| x[0], 8, &dom, "sine", &reg, &opts).unwrap();
        for unit in &net.units {
            // Pre-activation at the domain center.
            let pre = unit.bias; // center is 0 here
            assert!((37.0..43.0).contains(&pre), "pre {pre}");
        }
    }

    #[test]
    fn rejects_degenerate_requests() {
        let reg = builtin_registry();
        let dom = interval(0.0, 1.0);
        assert!(fit_shallow(&|_| 0.0, 0, &dom, "tanh", &reg, &FitOptions::default()).is_err());
        let opts = FitOptions {
            samples: 3,
            ..FitOptions::default()
        };
        assert!(fit_shallow(&|_| 0.0, 8, &dom, "tanh", &reg, &opts).is_err());
        assert!(fit_shallow(&|_| 0.0, 2, &dom, "nope", &reg, &FitOptions::default()).is_err());
    }
}
