//! Lipschitz constants of the two best-response maps and the contraction
//! verdict for their composition.

use serde::{Deserialize, Serialize};

use crate::dist::RegularityParams;

/// Lipschitz constants under the L1 norm.
///
/// `alpha1` bounds the generator map (`2 delta^-1 beta^-1
/// gamma^(-1-1/beta) X`), `alpha2` the classifier map (`2 alpha^-1 X^-1`,
/// valid for a uniform x-marginal). Their product `4 delta^-1 beta^-1
/// gamma^(-1/beta-1) alpha^-1` bounds the squared map; below one, the
/// iteration contracts and the fixed point is unique.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub alpha1: f64,
    pub alpha2: f64,
    pub product: f64,
    pub contractive: bool,
}

/// Evaluates both constants for the given parameters and seed-space size.
pub fn lipschitz_bounds(params: &RegularityParams, x_size: usize) -> LipschitzReport {
    let beta_inv = 1.0 / params.beta;
    let alpha1 =
        2.0 / params.delta * beta_inv * params.gamma.powf(-1.0 - beta_inv) * x_size as f64;
    let alpha2 = 2.0 / params.alpha / x_size as f64;
    let product = alpha1 * alpha2;
    LipschitzReport {
        alpha1,
        alpha2,
        product,
        contractive: product < 1.0,
    }
}
