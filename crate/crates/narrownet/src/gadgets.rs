//! Small network fragments the compilers splice together: approximate
//! identities, exact multiplication / min / bump blocks, square substitutes,
//! and the staged reciprocal.
//!
//! Every fragment ends in an all-Identity layer carrying its output affine,
//! so splicing and standalone evaluation work the same way. Compiler passes
//! are free to absorb that trailing affine into the next layer they emit.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::act::{ActivationSpec, Registry};
use crate::error::Error;
use crate::net::{ActivationTag, AffineMap, Layer, Network};
use crate::Result;

/// How closely a fragment realizes its mathematical definition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exactness {
    /// Machine-precision agreement on the stated domain.
    Exact,
    /// Converges as the named parameter is pushed toward its limit.
    Approx { param: &'static str, value: f64 },
}

/// A few layers plus a folded output affine, ready to splice or run alone.
#[derive(Debug, Clone, PartialEq)]
pub struct GadgetFragment {
    pub layers: Vec<Layer>,
    pub in_dim: usize,
    pub out_dim: usize,
    pub exactness: Exactness,
}

impl GadgetFragment {
    /// Wraps the fragment as a standalone network with an identity readout.
    pub fn as_network(&self) -> Result<Network> {
        Network::new(
            self.in_dim,
            self.layers.clone(),
            AffineMap::identity(self.out_dim),
        )
    }

    /// Evaluates the fragment at `x`.
    pub fn eval(&self, x: &[f64], reg: &Registry) -> Result<Vec<f64>> {
        self.as_network()?.evaluate(x, reg)
    }
}

fn layer(in_dim: usize, rows: Vec<(Vec<f64>, f64)>, tags: Vec<ActivationTag>) -> Layer {
    let affine = AffineMap::from_rows(in_dim, &rows).expect("gadget rows are well formed");
    Layer::new(affine, tags).expect("gadget tag counts match")
}

fn id_tag() -> ActivationTag {
    ActivationTag::Identity
}

/// Single-neuron approximate identity: x maps through rho at a point of
/// nonzero slope, `(rho(alpha + h x) - rho(alpha)) / (h rho'(alpha))`.
/// `domain` is the interval the approximation claim is stated on.
pub fn identity_gadget(
    spec: &ActivationSpec,
    h: f64,
    domain: (f64, f64),
) -> Result<GadgetFragment> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Precondition(
            "identity gadget needs a nonzero finite step".to_string(),
        ));
    }
    if !(domain.0 < domain.1 && domain.0.is_finite() && domain.1.is_finite()) {
        return Err(Error::Precondition(
            "identity gadget domain must be a finite interval".to_string(),
        ));
    }
    let a = spec.require_d1()?;
    let w = 1.0 / (h * a.d1);
    // Bias computed as -(rho(alpha) * w) so the exact hit x = 0 cancels to
    // zero in floating point as well.
    let l1 = layer(
        1,
        vec![(vec![h], a.alpha)],
        vec![ActivationTag::named(&spec.key)],
    );
    let l2 = layer(1, vec![(vec![w], -(a.rho * w))], vec![id_tag()]);
    Ok(GadgetFragment {
        layers: vec![l1, l2],
        in_dim: 1,
        out_dim: 1,
        exactness: Exactness::Approx {
            param: "h",
            value: h,
        },
    })
}

/// Approximate identity through the bounded-oscillation activation
/// `sin(x) + W(x) exp(-x)`: pre-affine `h x + A` with A a multiple of two pi
/// (so the sine term is near-linear there) and post-affine `x / h`; the
/// decay term is crushed by `exp(-A)` instead of being subtracted.
pub fn identity_gadget_pathological(h: f64, big_a: f64) -> Result<GadgetFragment> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Precondition(
            "identity gadget needs a nonzero finite step".to_string(),
        ));
    }
    let turns = big_a / core::f64::consts::TAU;
    let rounded = libm::round(turns);
    if rounded < 0.0 || libm::fabs(turns - rounded) > 1e-9 {
        return Err(Error::Precondition(
            "offset must be a non-negative multiple of two pi".to_string(),
        ));
    }
    let l1 = layer(
        1,
        vec![(vec![h], big_a)],
        vec![ActivationTag::named("pathological")],
    );
    let l2 = layer(1, vec![(vec![1.0 / h], 0.0)], vec![id_tag()]);
    Ok(GadgetFragment {
        layers: vec![l1, l2],
        in_dim: 1,
        out_dim: 1,
        exactness: Exactness::Approx {
            param: "h",
            value: h,
        },
    })
}

/// `max(0, x + N) - N`: the exact identity on `[-N, inf)`, clamping below.
pub fn relu_exact_identity(n_shift: f64) -> Result<GadgetFragment> {
    if !n_shift.is_finite() {
        return Err(Error::Precondition(
            "identity shift must be finite".to_string(),
        ));
    }
    let l1 = layer(
        1,
        vec![(vec![1.0], n_shift)],
        vec![ActivationTag::named("relu")],
    );
    let l2 = layer(1, vec![(vec![1.0], -n_shift)], vec![id_tag()]);
    Ok(GadgetFragment {
        layers: vec![l1, l2],
        in_dim: 1,
        out_dim: 1,
        exactness: Exactness::Exact,
    })
}

/// Exact product from two squarings: `((x+y)^2 - (x-y)^2) / 4`.
pub fn mult_gadget() -> GadgetFragment {
    let sq = ActivationTag::named("square");
    let l1 = layer(
        2,
        vec![(vec![1.0, 1.0], 0.0), (vec![1.0, -1.0], 0.0)],
        vec![sq.clone(), sq],
    );
    let l2 = layer(2, vec![(vec![0.25, -0.25], 0.0)], vec![id_tag()]);
    GadgetFragment {
        layers: vec![l1, l2],
        in_dim: 2,
        out_dim: 1,
        exactness: Exactness::Exact,
    }
}

fn fused_layers(s: f64) -> [Layer; 3] {
    let sq = ActivationTag::named("square");
    // eta1 = x, zeta1 = (x + s y + 1)^2
    let l1 = layer(
        2,
        vec![(vec![1.0, 0.0], 0.0), (vec![1.0, s], 1.0)],
        vec![id_tag(), sq.clone()],
    );
    // eta2 = eta1^2, zeta2 = zeta1 - 2 eta1 - 1
    let l2 = layer(
        2,
        vec![(vec![1.0, 0.0], 0.0), (vec![-2.0, 1.0], -1.0)],
        vec![sq, id_tag()],
    );
    // eta3 = eta2, zeta3 = (zeta2 - eta2) / (2 s)
    let c = 1.0 / (2.0 * s);
    let l3 = layer(
        2,
        vec![(vec![1.0, 0.0], 0.0), (vec![-c, c], 0.0)],
        vec![id_tag(), id_tag()],
    );
    [l1, l2, l3]
}

/// Width-2 block mapping (x, y) to (x^2, y(x+1) + s y^2 / 2): squaring one
/// value while multiplying the other by it, at the cost of the s-residual.
/// Identity tags stay ideal; lowering passes pick the h schedule later.
pub fn fused_gadget(s: f64) -> Result<GadgetFragment> {
    if s == 0.0 || !s.is_finite() {
        return Err(Error::Precondition(
            "fused gadget needs a nonzero finite skew".to_string(),
        ));
    }
    let [l1, l2, l3] = fused_layers(s);
    Ok(GadgetFragment {
        layers: vec![l1, l2, l3],
        in_dim: 2,
        out_dim: 2,
        exactness: Exactness::Approx {
            param: "s",
            value: s,
        },
    })
}

/// Staged approximation of 1/x on compact subsets of (0, 2):
/// `(2 - x) * prod_i (1 + (1-x)^(2^i))`, one fused block per factor.
/// Width 2, `3 * stages + 1` layers.
pub fn reciprocal_gadget(stages: usize, s: f64) -> Result<GadgetFragment> {
    if s == 0.0 || !s.is_finite() {
        return Err(Error::Precondition(
            "reciprocal gadget needs a nonzero finite skew".to_string(),
        ));
    }
    if stages == 0 {
        let l1 = layer(1, vec![(vec![-1.0], 2.0)], vec![id_tag()]);
        return Ok(GadgetFragment {
            layers: vec![l1],
            in_dim: 1,
            out_dim: 1,
            exactness: Exactness::Approx {
                param: "stages",
                value: 0.0,
            },
        });
    }
    let sq = ActivationTag::named("square");
    // eta0 = (1 - x)^2, zeta0 = 2 - x
    let init = layer(
        1,
        vec![(vec![-1.0], 1.0), (vec![-1.0], 2.0)],
        vec![sq, id_tag()],
    );
    let mut layers = vec![init];
    for stage in 1..=stages {
        let [l1, l2, l3] = fused_layers(s);
        if stage == stages {
            // Last stage: keep only the zeta output.
            let (row, bias) = l3.affine.row(1);
            let last = layer(2, vec![(row.to_vec(), bias)], vec![id_tag()]);
            layers.push(l1);
            layers.push(l2);
            layers.push(last);
        } else {
            layers.push(l1);
            layers.push(l2);
            layers.push(l3);
        }
    }
    Ok(GadgetFragment {
        layers,
        in_dim: 1,
        out_dim: 1,
        exactness: Exactness::Approx {
            param: "stages",
            value: stages as f64,
        },
    })
}

/// Plain evaluator of the reciprocal recurrence (zeta *= 1 + eta,
/// eta *= eta), the float baseline the staged gadget approaches.
pub fn reciprocal_reference(x: f64, stages: usize) -> f64 {
    let mut eta = (1.0 - x) * (1.0 - x);
    let mut zeta = 2.0 - x;
    for _ in 0..stages {
        zeta *= 1.0 + eta;
        eta *= eta;
    }
    zeta
}

/// Telescoped closed form `(1 - (1-x)^(2^(stages+1))) / x`.
pub fn reciprocal_closed_form(x: f64, stages: usize) -> f64 {
    let mut p = (1.0 - x) * (1.0 - x);
    for _ in 0..stages {
        p *= p;
    }
    (1.0 - p) / x
}

/// Two-neuron square substitute via the central second difference
/// `(rho(alpha + hx) - 2 rho(alpha) + rho(alpha - hx)) / (h^2 rho''(alpha))`.
pub fn sigma_h_gadget(spec: &ActivationSpec, h: f64) -> Result<GadgetFragment> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Precondition(
            "square substitute needs a nonzero finite step".to_string(),
        ));
    }
    let a = spec.require_d2()?;
    let w = 1.0 / (h * h * a.d2);
    let tag = ActivationTag::named(&spec.key);
    let l1 = layer(
        1,
        vec![(vec![h], a.alpha), (vec![-h], a.alpha)],
        vec![tag.clone(), tag],
    );
    let l2 = layer(2, vec![(vec![w, w], -2.0 * a.rho * w)], vec![id_tag()]);
    Ok(GadgetFragment {
        layers: vec![l1, l2],
        in_dim: 1,
        out_dim: 1,
        exactness: Exactness::Approx {
            param: "h",
            value: h,
        },
    })
}

/// One-neuron square substitute `(rho(alpha + hx) - rho(alpha)) /
/// (h^2 rho''(alpha) / 2)`, valid only at a critical point of rho.
pub fn rho_h_gadget(spec: &ActivationSpec, h: f64) -> Result<GadgetFragment> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Precondition(
            "square substitute needs a nonzero finite step".to_string(),
        ));
    }
    let a = spec.require_d2()?;
    if a.d1 != 0.0 {
        return Err(Error::Precondition(
            "single-neuron square substitute needs rho'(alpha) = 0; \
             use the two-neuron second-difference form instead"
                .to_string(),
        ));
    }
    let w = 2.0 / (h * h * a.d2);
    let l1 = layer(
        1,
        vec![(vec![h], a.alpha)],
        vec![ActivationTag::named(&spec.key)],
    );
    let l2 = layer(1, vec![(vec![w], -(a.rho * w))], vec![id_tag()]);
    Ok(GadgetFragment {
        layers: vec![l1, l2],
        in_dim: 1,
        out_dim: 1,
        exactness: Exactness::Approx {
            param: "h",
            value: h,
        },
    })
}

/// Exact trapezoid bump: 0 outside (a, d), 1 on [b, c], affine ramps
/// between, from four relu neurons.
pub fn urysohn_gadget(a: f64, b: f64, c: f64, d: f64) -> Result<GadgetFragment> {
    if !(a < b && b < c && c < d) {
        return Err(Error::Precondition(
            "trapezoid knots must be strictly increasing".to_string(),
        ));
    }
    let relu = ActivationTag::named("relu");
    let m1 = 1.0 / (b - a);
    let m2 = 1.0 / (d - c);
    // eta1 = relu(m1 (x - a)), zeta1 = relu(m2 (x - c))
    let l1 = layer(
        1,
        vec![(vec![m1], -(m1 * a)), (vec![m2], -(m2 * c))],
        vec![relu.clone(), relu.clone()],
    );
    // eta2 = relu(1 - eta1), zeta2 = relu(1 - zeta1)
    let l2 = layer(
        2,
        vec![(vec![-1.0, 0.0], 1.0), (vec![0.0, -1.0], 1.0)],
        vec![relu.clone(), relu],
    );
    // U = zeta2 - eta2
    let l3 = layer(2, vec![(vec![-1.0, 1.0], 0.0)], vec![id_tag()]);
    Ok(GadgetFragment {
        layers: vec![l1, l2, l3],
        in_dim: 1,
        out_dim: 1,
        exactness: Exactness::Exact,
    })
}

/// Exact `min(x, y) = relu(x) - relu(x - y)` on the closed first quadrant.
pub fn min_gadget() -> GadgetFragment {
    let relu = ActivationTag::named("relu");
    // eta = relu(x - y), zeta = relu(x)
    let l1 = layer(
        2,
        vec![(vec![1.0, -1.0], 0.0), (vec![1.0, 0.0], 0.0)],
        vec![relu.clone(), relu],
    );
    let l2 = layer(2, vec![(vec![-1.0, 1.0], 0.0)], vec![id_tag()]);
    GadgetFragment {
        layers: vec![l1, l2],
        in_dim: 2,
        out_dim: 1,
        exactness: Exactness::Exact,
    }
}
