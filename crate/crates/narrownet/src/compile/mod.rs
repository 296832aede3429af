//! Compilers that turn target descriptions into deep, narrow networks, plus
//! the lowering passes that replace ideal wires with concrete activations.

pub mod build;
pub mod lower;
pub mod register;
pub mod relu_lp;
pub mod rescale;
pub mod shallow;
pub mod square;

pub use build::NetworkBuilder;
pub use lower::{
    layer_expand, lower_identities, lower_identities_pathological, lower_identities_relu,
    lower_square_rho, lower_square_sigma,
};
pub use register::compile_register;
pub use relu_lp::{compile_relu_lp, CutoffSpec};
pub use rescale::rescale;
pub use shallow::{fit_shallow, FitOptions, FitReport, ShallowNet, Unit};
pub use square::{compile_square, plan_monomial_chain, ChainPlan, SquareOptions};

/// Whether pass-through wires stay ideal or are realized through the
/// activation at a finite step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Keep pass-through neurons as exact identities.
    IdealIdentity,
    /// Replace every identity neuron by the one-neuron approximate identity
    /// with this step size.
    Lowered(f64),
}
