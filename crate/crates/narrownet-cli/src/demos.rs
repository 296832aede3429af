//! End-to-end demo scenarios behind `narrownet demo <name>`.
//!
//! Each demo runs one compile pipeline with frozen inputs, prints the
//! measured numbers, and reports pass or fail against the same budget the
//! library's own acceptance suite enforces. They exist so a fresh build can
//! be smoke-checked from the shell without running the test suite.

use anyhow::{bail, Result};
use narrownet::compile::{
    compile_register, compile_relu_lp, compile_square, layer_expand, lower_identities,
    lower_identities_pathological, lower_square_rho, lower_square_sigma, rescale, CutoffSpec,
    Mode, ShallowNet, SquareOptions, Unit,
};
use narrownet::math::{linspace, lstsq, rng_from_seed, uniform};
use narrownet::poly::{Polynomial, Term};
use narrownet::verify::{lp_error_grid, non_increasing, sup_error};
use narrownet::{builtin_registry, ActivationTag, DomainBox, Network, Registry};

pub const DEMO_NAMES: [&str; 6] = [
    "register",
    "square",
    "poly-sigma",
    "poly-rho",
    "pathological",
    "relu-lp",
];

/// Runs the named demo and reports whether it met its budget.
pub fn run(name: &str) -> Result<bool> {
    let passed = match name {
        "register" => register(),
        "square" => square(),
        "poly-sigma" => poly_sigma(),
        "poly-rho" => poly_rho(),
        "pathological" => pathological(),
        "relu-lp" => relu_lp(),
        _ => bail!(
            "unknown demo '{name}'; pick one of {}",
            DEMO_NAMES.join(", ")
        ),
    };
    println!("[{}] demo {name}", if passed { "PASS" } else { "FAIL" });
    Ok(passed)
}

/// Two seeded tanh sums on [-1,1]^2, widths 4 and 3.
fn tanh_targets() -> Vec<ShallowNet> {
    let mut rng = rng_from_seed(9);
    let mut make = |width: usize| {
        let units = (0..width)
            .map(|_| Unit {
                weights: vec![
                    uniform(&mut rng, -2.0, 2.0),
                    uniform(&mut rng, -2.0, 2.0),
                ],
                bias: uniform(&mut rng, -1.0, 1.0),
                coeff: uniform(&mut rng, -2.0, 2.0),
            })
            .collect();
        ShallowNet {
            key: "tanh".to_string(),
            input_dim: 2,
            units,
            out_bias: uniform(&mut rng, -1.0, 1.0),
        }
    };
    vec![make(4), make(3)]
}

/// The polynomial pair (x^2 + x, 2x^3 - x) on [1.2, 1.8].
fn cubic_pair() -> (Vec<Polynomial>, DomainBox) {
    let term = |coeff: f64, exp: u32| Term {
        coeff,
        exps: vec![exp],
    };
    let g1 = Polynomial::new(1, vec![term(1.0, 2), term(1.0, 1)]).unwrap();
    let g2 = Polynomial::new(1, vec![term(2.0, 3), term(-1.0, 1)]).unwrap();
    (vec![g1, g2], DomainBox::interval(1.2, 1.8).unwrap())
}

/// Supremum gap against the polynomial pair over a 1-d grid.
fn poly_sup(net: &Network, reg: &Registry, targets: &[Polynomial]) -> f64 {
    let mut worst = 0.0f64;
    for x in linspace(1.2, 1.8, 101) {
        let got = net.evaluate(&[x], reg).unwrap();
        for (g, t) in got.iter().zip(targets.iter()) {
            let d = (g - t.evaluate(&[x]).unwrap()).abs();
            if d.is_finite() {
                worst = worst.max(d);
            } else {
                return f64::INFINITY;
            }
        }
    }
    worst
}

fn sweep_line(table: &[(f64, f64)]) -> String {
    table
        .iter()
        .map(|(h, e)| format!("h={h:.0e} sup {e:.3e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn register() -> bool {
    let reg = builtin_registry();
    let targets = tanh_targets();
    let domain = DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();

    let net = compile_register(&targets, Mode::IdealIdentity, &reg).unwrap();
    let width = net.audit().width;
    let mut rng = rng_from_seed(17);
    let mut exact = 0.0f64;
    for _ in 0..1_000 {
        let x = [uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -1.0, 1.0)];
        let got = net.evaluate(&x, &reg).unwrap();
        for (g, t) in got.iter().zip(targets.iter()) {
            exact = exact.max((g - t.evaluate(&x, &reg).unwrap()).abs());
        }
    }

    let mut table = Vec::new();
    for h in [1e-2, 1e-3, 1e-4] {
        let low = compile_register(&targets, Mode::Lowered(h), &reg).unwrap();
        let sup = sup_error(
            &mut |x: &[f64]| targets.iter().map(|t| t.evaluate(x, &reg).unwrap()).collect(),
            &mut |x: &[f64]| low.evaluate(x, &reg).unwrap(),
            &domain,
            33,
        )
        .unwrap();
        table.push((h, sup));
    }

    println!("width {width}, exact-identity sup {exact:.3e}");
    println!("lowered sweep: {}", sweep_line(&table));
    width == 5 && exact <= 1e-10 && non_increasing(&table, 0.0) && table[2].1 <= 1e-3
}

fn square() -> bool {
    let reg = builtin_registry();
    let (targets, domain) = cubic_pair();

    let ideal = compile_square(
        &targets,
        &domain,
        6,
        Mode::IdealIdentity,
        &SquareOptions::default(),
        &reg,
    )
    .unwrap();
    let width = ideal.audit().width;
    let ideal_sup = poly_sup(&ideal, &reg, &targets);

    let lowered = compile_square(
        &targets,
        &domain,
        6,
        Mode::Lowered(1e-4),
        &SquareOptions::for_lowered(),
        &reg,
    )
    .unwrap();
    let low_sup = poly_sup(&lowered, &reg, &targets);

    println!("width {width}, exact-identity sup {ideal_sup:.3e}, lowered sup {low_sup:.3e}");
    width == 4 && ideal_sup <= 1e-6 && low_sup <= 1e-3
}

fn poly_sigma() -> bool {
    let reg = builtin_registry();
    let cubic = reg.get("cubic-plus-square").unwrap();
    let (targets, domain) = cubic_pair();

    let opts = SquareOptions {
        skew: 1.0 / 4096.0,
        margin: 0.3,
        ..SquareOptions::default()
    };
    let ideal = compile_square(&targets, &domain, 6, Mode::IdealIdentity, &opts, &reg).unwrap();
    let scaled = rescale(&ideal, &domain, 33, 1.0 / 65_536.0, &reg).unwrap();
    let expanded = layer_expand(&scaled).unwrap();

    let mut width = 0usize;
    let mut table = Vec::new();
    for h in [1e-2, 3e-3, 1e-3] {
        let sig = lower_square_sigma(&expanded, cubic, h).unwrap();
        width = width.max(sig.audit().width);
        table.push((h, poly_sup(&sig, &reg, &targets)));
    }

    println!("width {width}, sweep: {}", sweep_line(&table));
    width == 5 && non_increasing(&table, 0.0) && table[2].1 <= 1e-2
}

fn poly_rho() -> bool {
    let reg = builtin_registry();
    let square = reg.get("square").unwrap();
    let cubic = reg.get("cubic-plus-square").unwrap();
    let (targets, domain) = cubic_pair();

    let ideal = compile_square(
        &targets,
        &domain,
        6,
        Mode::IdealIdentity,
        &SquareOptions::for_lowered(),
        &reg,
    )
    .unwrap();
    let scaled = rescale(&ideal, &domain, 33, 1.0 / 4096.0, &reg).unwrap();
    let squared = lower_identities(&scaled, square, 1e-4).unwrap();

    let mut width = 0usize;
    let mut table = Vec::new();
    for h in [1e-13, 1e-14, 1e-15] {
        let rho = lower_square_rho(&squared, cubic, h).unwrap();
        width = width.max(rho.audit().width);
        table.push((h, poly_sup(&rho, &reg, &targets)));
    }

    println!("width {width}, sweep: {}", sweep_line(&table));
    width == 4 && non_increasing(&table, 0.0) && table[2].1 <= 1e-2
}

/// Least-squares trig expansion tanh(u) ~ sum_k a_k sin(k pi u / 8) on
/// |u| <= 5, the pre-activation range of the seeded targets.
fn tanh_sine_series(k_max: usize) -> Vec<f64> {
    let grid = linspace(-5.0, 5.0, 401);
    let rows = grid.len() + k_max;
    let mut a = vec![0.0; rows * k_max];
    let mut y = vec![0.0; rows];
    for (r, &u) in grid.iter().enumerate() {
        for k in 0..k_max {
            a[k * rows + r] = ((k + 1) as f64 * std::f64::consts::PI * u / 8.0).sin();
        }
        y[r] = u.tanh();
    }
    for k in 0..k_max {
        a[k * rows + grid.len() + k] = 1e-6;
    }
    lstsq(&mut a, rows, k_max, &mut y).coeffs
}

fn pathological() -> bool {
    let reg = builtin_registry();
    let targets = tanh_targets();
    let domain = DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let two_pi = 2.0 * std::f64::consts::PI;

    // Far from the origin the wavy activation is a pure sine up to an
    // exponentially dead term, so each tanh unit expands into harmonics
    // lifted by whole periods into that region.
    let series = tanh_sine_series(12);
    let fitted: Vec<ShallowNet> = targets
        .iter()
        .map(|t| {
            let units = t
                .units
                .iter()
                .flat_map(|u| {
                    series.iter().enumerate().map(move |(k, a)| {
                        let f = (k + 1) as f64 * std::f64::consts::PI / 8.0;
                        let center = f * u.bias;
                        let lift = two_pi * ((62.8 - center) / two_pi).round();
                        Unit {
                            weights: u.weights.iter().map(|w| f * w).collect(),
                            bias: center + lift,
                            coeff: u.coeff * a,
                        }
                    })
                })
                .collect();
            ShallowNet {
                key: "pathological".to_string(),
                input_dim: 2,
                units,
                out_bias: t.out_bias,
            }
        })
        .collect();

    let ideal = compile_register(&fitted, Mode::IdealIdentity, &reg).unwrap();
    let lowered = lower_identities_pathological(&ideal, 1e-3, two_pi * 25.0).unwrap();

    let sup = sup_error(
        &mut |x: &[f64]| targets.iter().map(|t| t.evaluate(x, &reg).unwrap()).collect(),
        &mut |x: &[f64]| lowered.evaluate(x, &reg).unwrap(),
        &domain,
        33,
    )
    .unwrap();

    println!("lowered sup vs the tanh targets {sup:.3e}");
    sup <= 1e-2
}

fn relu_lp() -> bool {
    let reg = builtin_registry();
    let relu = ActivationTag::named("relu");
    let triangle = ShallowNet {
        key: relu.name().to_string(),
        input_dim: 1,
        units: vec![
            Unit {
                weights: vec![1.0],
                bias: 1.0,
                coeff: 1.0,
            },
            Unit {
                weights: vec![1.0],
                bias: 0.0,
                coeff: -2.0,
            },
            Unit {
                weights: vec![1.0],
                bias: -1.0,
                coeff: 1.0,
            },
        ],
        out_bias: 0.0,
    };

    let inner = DomainBox::interval(-1.0, 1.0).unwrap();
    let outer = DomainBox::interval(-1.1, 1.1).unwrap();
    let compiled = compile_register(&[triangle.clone()], Mode::IdealIdentity, &reg).unwrap();
    let cut = compile_relu_lp(
        &compiled,
        &inner,
        &outer,
        &CutoffSpec {
            floor: -1.0,
            ceiling: 2.0,
            shift: 5.0,
        },
    )
    .unwrap();
    let width = cut.audit().width;

    let mut rng = rng_from_seed(31);
    let mut nonzero = 0usize;
    for _ in 0..10_000 {
        let mag = uniform(&mut rng, 1.1, 3.0);
        let x = if uniform(&mut rng, -1.0, 1.0) < 0.0 {
            -mag
        } else {
            mag
        };
        if cut.evaluate(&[x], &reg).unwrap()[0] != 0.0 {
            nonzero += 1;
        }
    }

    let quad = DomainBox::interval(-1.5, 1.5).unwrap();
    let l1 = lp_error_grid(
        &mut |x: &[f64]| vec![triangle.evaluate(x, &reg).unwrap()],
        &mut |x: &[f64]| cut.evaluate(x, &reg).unwrap(),
        &quad,
        1.0,
        100_000,
    )
    .unwrap();

    println!("width {width}, {nonzero} nonzero outputs outside the window, L1 gap {l1:.3e}");
    width == 3 && nonzero == 0 && l1 <= 0.1
}
