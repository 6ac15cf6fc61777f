//! Physical flux of the multicomponent Euler system and the Lax-Friedrichs
//! numerical flux with local or global viscosity, plus the numerical
//! entropy flux.

use crate::error::Result;
use crate::mesh::ConservedField;
use crate::state::{CompVec, ConservedState, MAX_DIM};
use crate::thermo::{self, GasMixture};

/// Flux values in the conserved layout `(rho_i, m, E)` along a normal, so
/// states can be updated by `U + dt * F` without re-indexing.
pub type FluxVector = CompVec;

/// Velocity, pressure and wave speed of one cell, precomputed once per
/// right-hand-side evaluation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CellAux {
    pub u: [f64; MAX_DIM],
    pub p: f64,
    /// `|u| + c_mix`.
    pub speed: f64,
}

pub(crate) fn cell_aux(state: &ConservedState, mix: &GasMixture) -> Result<CellAux> {
    let t = thermo::temperature_from_conserved(state, mix)?;
    if !(t > 0.0) {
        return Err(crate::error::Error::Inadmissible(
            crate::error::Inadmissible::Temperature { value: t },
        ));
    }
    let p = thermo::pressure_with(state, mix, t);
    let u = state.velocity();
    let speed_sq: f64 = u[..state.dim()].iter().map(|v| v * v).sum();
    Ok(CellAux {
        u,
        p,
        speed: speed_sq.sqrt() + thermo::sound_speed_with(state, mix, p),
    })
}

/// Flux kernel shared by the public API and the solver's cached fast path:
/// `(rho_i (u.n), m (u.n) + p n, (E + p)(u.n))`.
#[inline]
pub(crate) fn flux_with(
    state: &ConservedState,
    u: &[f64; MAX_DIM],
    p: f64,
    normal: &[f64],
) -> FluxVector {
    let dim = state.dim();
    let n_sp = state.n_species();
    let mut un = 0.0;
    for d in 0..dim {
        un += u[d] * normal[d];
    }
    let mut f = CompVec::zeros(state.ncomp());
    for i in 0..n_sp {
        f[i] = state.partial_densities()[i] * un;
    }
    for d in 0..dim {
        f[n_sp + d] = state.momentum()[d] * un + p * normal[d];
    }
    f[n_sp + dim] = (state.total_energy() + p) * un;
    f
}

/// Physical flux `f(U) . n`.
pub fn physical_flux(
    state: &ConservedState,
    normal: &[f64],
    mix: &GasMixture,
) -> Result<FluxVector> {
    let aux = cell_aux(state, mix)?;
    Ok(flux_with(state, &aux.u, aux.p, normal))
}

/// Interface viscosity `lambda_KL = max(|u_K| + c_K, |u_L| + c_L)`.
pub fn local_lambda(
    left: &ConservedState,
    right: &ConservedState,
    mix: &GasMixture,
) -> Result<f64> {
    Ok(cell_aux(left, mix)?.speed.max(cell_aux(right, mix)?.speed))
}

/// Global viscosity bound `lambda = max_K (|u_K| + c_K)`.
pub fn global_lambda(field: &ConservedField, mix: &GasMixture) -> Result<f64> {
    let mut lambda = 0.0f64;
    for state in field.iter() {
        lambda = lambda.max(cell_aux(state, mix)?.speed);
    }
    Ok(lambda)
}

/// Lax-Friedrichs flux
/// `F_KL = (f(U_K) + f(U_L))/2 . n - (lambda/2)(U_L - U_K)`.
pub fn lax_friedrichs_flux(
    left: &ConservedState,
    right: &ConservedState,
    normal: &[f64],
    lambda: f64,
    mix: &GasMixture,
) -> Result<FluxVector> {
    let fl = physical_flux(left, normal, mix)?;
    let fr = physical_flux(right, normal, mix)?;
    let mut f = CompVec::zeros(left.ncomp());
    for k in 0..f.len() {
        f[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * lambda * (right.comp(k) - left.comp(k));
    }
    Ok(f)
}

/// Numerical entropy flux
/// `Fhat_KL = (F_K + F_L)/2 . n - (lambda/2)(eta_L - eta_K)` with
/// `F = -rho s u` and `eta = -rho s`.
pub fn numerical_entropy_flux(
    left: &ConservedState,
    right: &ConservedState,
    normal: &[f64],
    lambda: f64,
    mix: &GasMixture,
) -> Result<f64> {
    let eta_l = thermo::entropy_density(left, mix)?;
    let eta_r = thermo::entropy_density(right, mix)?;
    Ok(numerical_entropy_flux_with(
        left, right, normal, lambda, eta_l, eta_r,
    ))
}

#[inline]
pub(crate) fn numerical_entropy_flux_with(
    left: &ConservedState,
    right: &ConservedState,
    normal: &[f64],
    lambda: f64,
    eta_l: f64,
    eta_r: f64,
) -> f64 {
    let ul = left.velocity();
    let ur = right.velocity();
    let mut fl = 0.0;
    let mut fr = 0.0;
    for d in 0..left.dim() {
        fl += eta_l * ul[d] * normal[d];
        fr += eta_r * ur[d] * normal[d];
    }
    0.5 * (fl + fr) - 0.5 * lambda * (eta_r - eta_l)
}
