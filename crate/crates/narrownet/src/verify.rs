//! Numerical comparison of compiled networks against reference functions.
//!
//! Everything here is deterministic: grids are closed and uniform, random
//! sampling is seeded. Vector-valued functions are compared through the
//! componentwise maximum of absolute differences at each point.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;
use crate::math::{abs, for_each_grid_point, rng_from_seed, sample_box, tree_sum};
use crate::net::Box as DomainBox;
use crate::poly::Polynomial;
use crate::Result;

/// Grid resolution per axis that keeps the total point count reasonable.
pub fn default_grid_per_dim(dim: usize) -> usize {
    match dim {
        0 | 1 | 2 => 101,
        3 => 21,
        _ => 7,
    }
}

fn pointwise_gap(fx: &[f64], gx: &[f64]) -> Result<f64> {
    if fx.len() != gx.len() {
        return Err(Error::Dimension(format!(
            "compared functions returned {} and {} outputs",
            fx.len(),
            gx.len()
        )));
    }
    let mut gap = 0.0f64;
    for (a, b) in fx.iter().zip(gx.iter()) {
        gap = gap.max(abs(a - b));
    }
    Ok(gap)
}

/// Largest pointwise gap over a closed uniform grid.
pub fn sup_error<F, G>(f: &mut F, g: &mut G, domain: &DomainBox, per_dim: usize) -> Result<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let mut worst = 0.0f64;
    let mut failure = None;
    for_each_grid_point(&domain.lower, &domain.upper, per_dim, |x| {
        if failure.is_some() {
            return;
        }
        match pointwise_gap(&f(x), &g(x)) {
            Ok(gap) => worst = worst.max(gap),
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(worst),
    }
}

/// Largest pointwise gap over seeded uniform samples of the box.
pub fn sup_error_sampled<F, G>(
    f: &mut F,
    g: &mut G,
    domain: &DomainBox,
    samples: usize,
    seed: u64,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let mut rng = rng_from_seed(seed);
    let mut x = alloc::vec![0.0; domain.dim()];
    let mut worst = 0.0f64;
    for _ in 0..samples {
        sample_box(&mut rng, &domain.lower, &domain.upper, &mut x);
        worst = worst.max(pointwise_gap(&f(&x), &g(&x))?);
    }
    Ok(worst)
}

/// Monte Carlo L^p distance: (volume * mean gap^p)^(1/p).
pub fn lp_error<F, G>(
    f: &mut F,
    g: &mut G,
    domain: &DomainBox,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    check_lp(p, samples)?;
    let mut rng = rng_from_seed(seed);
    let mut x = alloc::vec![0.0; domain.dim()];
    let mut powers = Vec::with_capacity(samples);
    for _ in 0..samples {
        sample_box(&mut rng, &domain.lower, &domain.upper, &mut x);
        let gap = pointwise_gap(&f(&x), &g(&x))?;
        powers.push(libm::pow(gap, p));
    }
    let mean = tree_sum(&powers) / samples as f64;
    Ok(libm::pow(domain.volume() * mean, 1.0 / p))
}

/// Grid quadrature L^p distance: (volume * mean gap^p)^(1/p) over a
/// closed uniform grid with per_dim points per axis.
pub fn lp_error_grid<F, G>(
    f: &mut F,
    g: &mut G,
    domain: &DomainBox,
    p: f64,
    per_dim: usize,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    check_lp(p, per_dim)?;
    let mut powers = Vec::new();
    let mut failure = None;
    for_each_grid_point(&domain.lower, &domain.upper, per_dim, |x| {
        if failure.is_some() {
            return;
        }
        match pointwise_gap(&f(x), &g(x)) {
            Ok(gap) => powers.push(libm::pow(gap, p)),
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let mean = tree_sum(&powers) / powers.len() as f64;
    Ok(libm::pow(domain.volume() * mean, 1.0 / p))
}

fn check_lp(p: f64, count: usize) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::Precondition(
            "the exponent p must be finite and at least 1".to_string(),
        ));
    }
    if count == 0 {
        return Err(Error::Precondition(
            "an L^p estimate needs at least one point".to_string(),
        ));
    }
    Ok(())
}

/// Applies eval to each parameter value, pairing parameter with result.
pub fn sweep<F>(values: &[f64], mut eval: F) -> Vec<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    values.iter().map(|&v| (v, eval(v))).collect()
}

/// True when each successive error is at most (1 + slack) times the
/// previous one, i.e. the table is non-increasing up to the slack.
pub fn non_increasing(table: &[(f64, f64)], slack: f64) -> bool {
    table
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 * (1.0 + slack))
}

/// Reference evaluator for a family of polynomial targets.
pub fn poly_truth(targets: &[Polynomial]) -> impl FnMut(&[f64]) -> Vec<f64> + '_ {
    move |x: &[f64]| {
        targets
            .iter()
            .map(|t| t.evaluate(x).expect("target dimension checked by caller"))
            .collect()
    }
}

/// Summary of one verification run, printable as a single line.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub sup: f64,
    /// (p, value) when an L^p distance was also estimated.
    pub lp: Option<(f64, f64)>,
    pub points: usize,
    pub width: usize,
    pub depth: usize,
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sup error {:e} over {} points (width {}, depth {})",
            self.sup, self.points, self.width, self.depth
        )?;
        if let Some((p, value)) = self.lp {
            write!(f, ", L^{p} error {value:e}")?;
        }
        Ok(())
    }
}

/// Formats a sweep as CSV with a `param,error` header.
pub fn sweep_to_csv(table: &[(f64, f64)]) -> String {
    let mut out = String::from("param,error\n");
    for (param, err) in table {
        out.push_str(&format!("{param:e},{err:e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn sup_error_sees_a_constant_offset() {
        let dom = DomainBox::interval(0.0, 2.0).unwrap();
        let mut f = |x: &[f64]| vec![x[0] * x[0]];
        let mut g = |x: &[f64]| vec![x[0] * x[0] + 0.5];
        let got = sup_error(&mut f, &mut g, &dom, 51).unwrap();
        assert!((got - 0.5).abs() < 1e-12, "got {got}");
        let mut f2 = |x: &[f64]| vec![x[0] * x[0]];
        let mut g2 = |x: &[f64]| vec![x[0] * x[0]];
        assert_eq!(sup_error(&mut f2, &mut g2, &dom, 51).unwrap(), 0.0);
    }

    #[test]
    fn sampled_sup_is_close_to_the_grid_answer() {
        let dom = DomainBox::interval(-1.0, 1.0).unwrap();
        let mut f = |x: &[f64]| vec![x[0]];
        let mut g = |_: &[f64]| vec![0.0];
        let got = sup_error_sampled(&mut f, &mut g, &dom, 4000, 11).unwrap();
        assert!(got > 0.99 && got <= 1.0, "got {got}");
    }

    #[test]
    fn l1_grid_quadrature_matches_a_constant_gap() {
        let dom = DomainBox::interval(0.0, 2.0).unwrap();
        let mut f = |_: &[f64]| vec![0.25];
        let mut g = |_: &[f64]| vec![0.0];
        let got = lp_error_grid(&mut f, &mut g, &dom, 1.0, 101).unwrap();
        assert!(abs(got - 0.5) < 1e-12, "got {got}");
    }

    #[test]
    fn l2_monte_carlo_matches_the_analytic_norm() {
        // ||x||_2 on [0, 1] is 1/sqrt(3).
        let dom = DomainBox::interval(0.0, 1.0).unwrap();
        let mut f = |x: &[f64]| vec![x[0]];
        let mut g = |_: &[f64]| vec![0.0];
        let got = lp_error(&mut f, &mut g, &dom, 2.0, 20_000, 3).unwrap();
        let want = 1.0 / crate::math::sqrt(3.0);
        assert!(abs(got - want) < 0.01, "got {got} want {want}");
    }

    #[test]
    fn mismatched_output_lengths_are_reported() {
        let dom = DomainBox::interval(0.0, 1.0).unwrap();
        let mut f = |_: &[f64]| vec![0.0, 1.0];
        let mut g = |_: &[f64]| vec![0.0];
        assert!(sup_error(&mut f, &mut g, &dom, 3).is_err());
        let mut f = |_: &[f64]| vec![0.0, 1.0];
        let mut g = |_: &[f64]| vec![0.0];
        assert!(lp_error(&mut f, &mut g, &dom, 1.0, 10, 0).is_err());
    }

    #[test]
    fn sweep_and_monotonicity() {
        let table = sweep(&[1e-2, 1e-3, 1e-4], |h| h * 3.0);
        assert_eq!(table.len(), 3);
        assert_eq!(table[0], (1e-2, 3e-2));
        assert!(non_increasing(&table, 0.0));
        assert!(non_increasing(
            &[(1.0, 3.0), (2.0, 2.0), (3.0, 2.0000001), (4.0, 1.0)],
            1e-3
        ));
        assert!(!non_increasing(&[(1.0, 1.0), (2.0, 2.0)], 0.1));
    }

    #[test]
    fn poly_truth_evaluates_each_target() {
        use crate::poly::Term;
        let term = |coeff: f64, exps: &[u32]| Term {
            coeff,
            exps: exps.to_vec(),
        };
        let p1 = Polynomial::new(1, vec![term(1.0, &[2])]).unwrap();
        let p2 = Polynomial::new(1, vec![term(2.0, &[1]), term(1.0, &[0])]).unwrap();
        let targets = vec![p1, p2];
        let mut truth = poly_truth(&targets);
        assert_eq!(truth(&[3.0]), vec![9.0, 7.0]);
    }

    #[test]
    fn report_renders_on_one_line() {
        let report = VerificationReport {
            sup: 1.5e-7,
            lp: Some((1.0, 2.5e-9)),
            points: 10_000,
            width: 5,
            depth: 7,
        };
        let line = format!("{report}");
        assert!(line.contains("sup error"));
        assert!(line.contains("width 5"));
        assert!(line.contains("L^1"));
        let csv = sweep_to_csv(&[(1e-2, 3e-4)]);
        assert!(csv.starts_with("param,error\n"));
        assert!(csv.contains("1e-2,3e-4"));
    }
}
