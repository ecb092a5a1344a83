//! Euler-Lagrange residuals in `r` and `s = sqrt(r)`, the fourth-order
//! tail system and its stable-manifold shooting, and Newton polish.
//!
//! In `r` the stationarity conditions of the density are
//!
//! ```text
//! (r (w^2 - 1 + u'))' = u / r,
//! lambda^2 ((r w')' - w / r) = 2 r w (w^2 - 1 + u'),
//! ```
//!
//! with hat variables throughout. The discrete residual is the energy
//! gradient divided by the lumped mass of each node.

pub mod newton;
pub mod ode;
pub mod s_form;
pub mod sampling;
pub mod tail;

pub use newton::{newton_polish, newton_polish_with, NewtonOptions, NewtonResult};
pub use s_form::{el_residual_s, el_residual_s_at, reconstruct_u_at, reconstruct_u_jet, fourth_order_rhs, reconstruct_u, Jet, TailState};
pub use sampling::TailSampler;
pub use tail::{match_tail, match_tail_data, StableFrame, TailData, shoot_from_state, shoot_tail, shoot_tail_in, stable_subspace, LinearizationA, MatchReport, Shot};

use crate::energy::EnergyModel;
use crate::error::Result;
use crate::grid::Profile;

/// Nodal residuals of the discrete equations.
#[derive(Debug, Clone)]
pub struct ResidualR {
    /// Residual of the `u_hat` equation at nodes `1..N` (the outer node is
    /// not interior and gets 0, as does the origin).
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// Sup of the raw gradient over interior nodes: the residual measured
    /// in the dual norm of nodal hat functions.
    pub dual_norm: f64,
}

/// Gradient of `E_hat` on the whole grid divided by the lumped mass
/// `int phi_k r dr`, at interior nodes. Scaled this way it approximates
/// `2(-(r e)' / r + u / r^2)` and its `w` counterpart pointwise.
pub fn el_residual_r(profile: &Profile, model: &EnergyModel) -> Result<ResidualR> {
    let grid = profile.grid();
    let (gu, gw) = model.gradient(profile, grid.r_max())?;
    let mass = grid.lumped_mass();
    let n = grid.n_nodes();
    let mut u = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut dual: f64 = 0.0;
    for k in 1..n - 1 {
        u[k] = gu[k] / mass[k];
        w[k] = gw[k] / mass[k];
        dual = dual.max(gu[k].abs()).max(gw[k].abs());
    }
    Ok(ResidualR { u, w, dual_norm: dual })
}
