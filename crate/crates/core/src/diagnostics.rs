//! Computable functionals behind the scheme's structural guarantees:
//! interface entropy production, the cellwise entropy residual, the
//! renormalized-entropy monitor, weak-BV functionals, a-priori norm
//! monitors, consistency residuals against smooth test functions, and the
//! relative entropy (Bregman distance of `eta`).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::flux::{self, CellAux};
use crate::mesh::{project_scalar, ConservedField, Field, ScalarField};
use crate::solver::ViscosityMode;
use crate::state::{CompVec, ConservedState, MAX_COMP, MAX_DIM};
use crate::thermo::{self, GasMixture};

/// Interface entropy production
/// `r_KL = (lambda/2) [ (eta_L - eta_K) - V_K . (U_L - U_K) ]`,
/// non-negative by convexity of `eta`.
pub fn entropy_production(
    left: &ConservedState,
    right: &ConservedState,
    lambda: f64,
    mix: &GasMixture,
) -> Result<f64> {
    let eta_l = thermo::entropy_density(left, mix)?;
    let eta_r = thermo::entropy_density(right, mix)?;
    let v = thermo::entropy_variables(left, mix)?;
    let du = right.diff(left);
    Ok(0.5 * lambda * ((eta_r - eta_l) - v.dot(&du)))
}

fn entropy_densities(field: &ConservedField, mix: &GasMixture) -> Result<Vec<f64>> {
    field
        .iter()
        .map(|s| thermo::entropy_density(s, mix))
        .collect()
}

fn all_aux(field: &ConservedField, mix: &GasMixture) -> Result<Vec<CellAux>> {
    field.iter().map(|s| flux::cell_aux(s, mix)).collect()
}

fn face_lambda(
    aux: &[CellAux],
    left: usize,
    right: usize,
    mode: ViscosityMode,
    global: f64,
) -> f64 {
    match mode {
        ViscosityMode::Local => aux[left].speed.max(aux[right].speed),
        ViscosityMode::Global => global,
    }
}

fn global_speed(aux: &[CellAux]) -> f64 {
    aux.iter().map(|a| a.speed).fold(0.0f64, f64::max)
}

/// Cellwise entropy residual and its magnitude scale:
/// `residual_K = |K| V_K . (dU_K/dt) + sum_L |S_KL| Fhat_KL`,
/// `scale_K = |K| |V_K . (dU_K/dt)| + sum_L |S_KL| |Fhat_KL|`.
fn entropy_residual_parts(
    field: &ConservedField,
    rates: &Field<CompVec>,
    mix: &GasMixture,
    mode: ViscosityMode,
) -> Result<(ScalarField, ScalarField)> {
    let grid = *field.grid();
    let aux = all_aux(field, mix)?;
    let etas = entropy_densities(field, mix)?;
    let global = global_speed(&aux);
    let vol = grid.cell_volume();

    let mut residual = Field::fill(grid, 0.0);
    let mut scale = Field::fill(grid, 0.0);
    for k in 0..grid.n_cells() {
        let v = thermo::entropy_variables(&field[k], mix)?;
        let deta_dt = vol * v.dot(&rates[k]);
        residual[k] = deta_dt;
        scale[k] = deta_dt.abs();
    }
    for face in grid.interfaces() {
        let (kl, kr) = (face.left, face.right);
        let normal = face.normal(grid.dim());
        let lambda = face_lambda(&aux, kl, kr, mode, global);
        let fhat = flux::numerical_entropy_flux_with(
            &field[kl],
            &field[kr],
            &normal[..grid.dim()],
            lambda,
            etas[kl],
            etas[kr],
        );
        residual[kl] += face.area * fhat;
        residual[kr] -= face.area * fhat;
        scale[kl] += face.area * fhat.abs();
        scale[kr] += face.area * fhat.abs();
    }
    Ok((residual, scale))
}

/// Cellwise entropy residual `|K| V_K . (dU_K/dt) + sum_L |S_KL| Fhat_KL`.
/// Non-positive (up to roundoff) when `rates` is the homogeneous RHS.
pub fn cell_entropy_residual(
    field: &ConservedField,
    rates: &Field<CompVec>,
    mix: &GasMixture,
    mode: ViscosityMode,
) -> Result<ScalarField> {
    Ok(entropy_residual_parts(field, rates, mix, mode)?.0)
}

/// Max over cells of the residual normalized by its magnitude scale.
pub fn entropy_residual_max(
    field: &ConservedField,
    rates: &Field<CompVec>,
    mix: &GasMixture,
    mode: ViscosityMode,
) -> Result<f64> {
    let (residual, scale) = entropy_residual_parts(field, rates, mix, mode)?;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..residual.len() {
        worst = worst.max(residual[k] / scale[k].max(1e-300));
    }
    Ok(worst)
}

/// Concave non-decreasing cutoff used by the renormalized-entropy monitor.
#[derive(Clone, Copy, Debug)]
pub enum Cutoff {
    /// `chi(z) = min(z - z_star, 0)`: exact zero at and above the bound.
    PiecewiseLinear,
    /// Smooth variant `chi(z) = -(1/beta) ln(1 + exp(-beta (z - z_star)))`.
    Softplus { sharpness: f64 },
}

impl Cutoff {
    pub fn eval(&self, z: f64, z_star: f64) -> f64 {
        match self {
            Cutoff::PiecewiseLinear => (z - z_star).min(0.0),
            Cutoff::Softplus { sharpness } => {
                let w = sharpness * (z - z_star);
                // ln(1 + e^-w), written to avoid overflow for large |w|.
                let softplus = if w > 0.0 {
                    (-w).exp().ln_1p()
                } else {
                    -w + w.exp().ln_1p()
                };
                -softplus / sharpness
            }
        }
    }
}

/// Renormalized-entropy monitor `sum_K |K| (-rho_K chi(s_K))`.
/// Zero exactly when every cell has `s_K >= z_star` (piecewise-linear chi).
pub fn renormalized_entropy_monitor(
    field: &ConservedField,
    mix: &GasMixture,
    z_star: f64,
    chi: Cutoff,
) -> Result<f64> {
    let vol = field.grid().cell_volume();
    let mut total = 0.0;
    for state in field.iter() {
        let (s, _) = thermo::mixture_entropy(state, mix)?;
        total += vol * (-state.density() * chi.eval(s, z_star));
    }
    Ok(total)
}

/// Weak-BV functionals
/// `B_1(t) = sum_faces h^N lambda_KL |U_L - U_K|` (Euclidean jump norm) and
/// the squared-jump variant `B_2(t) = sum_faces h^N lambda_KL |U_L - U_K|^2`.
pub fn weak_bv(field: &ConservedField, mix: &GasMixture) -> Result<(f64, f64)> {
    let grid = field.grid();
    let aux = all_aux(field, mix)?;
    let vol = grid.cell_volume();
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for face in grid.interfaces() {
        let lambda = aux[face.left].speed.max(aux[face.right].speed);
        let jump = field[face.right].diff(&field[face.left]).norm();
        b1 += vol * lambda * jump;
        b2 += vol * lambda * jump * jump;
    }
    Ok((b1, b2))
}

/// The weak-BV functional `B(t)` used by the acceptance checks (`bv_l1`).
pub fn weak_bv_functional(field: &ConservedField, mix: &GasMixture) -> Result<f64> {
    Ok(weak_bv(field, mix)?.0)
}

/// Relative entropy (Bregman distance of `eta`):
/// `H(U | Ubar) = eta(U) - eta(Ubar) - V(Ubar) . (U - Ubar) >= 0`.
pub fn relative_entropy(
    u: &ConservedState,
    u_bar: &ConservedState,
    mix: &GasMixture,
) -> Result<f64> {
    let eta = thermo::entropy_density(u, mix)?;
    let eta_bar = thermo::entropy_density(u_bar, mix)?;
    let v_bar = thermo::entropy_variables(u_bar, mix)?;
    Ok(eta - eta_bar - v_bar.dot(&u.diff(u_bar)))
}

/// Field-level relative entropy `H_h = sum_K |K| H(U_K | Ubar_K)` against a
/// reference field sampled on the same grid.
pub fn total_relative_entropy(
    field: &ConservedField,
    reference: &ConservedField,
    mix: &GasMixture,
) -> Result<f64> {
    if field.grid() != reference.grid() {
        return Err(Error::Invalid(
            "relative entropy needs matching grids".into(),
        ));
    }
    let vol = field.grid().cell_volume();
    let mut total = 0.0;
    for k in 0..field.len() {
        total += vol * relative_entropy(&field[k], &reference[k], mix)?;
    }
    Ok(total)
}

/// Discrete a-priori norm monitors.
#[derive(Clone, Debug)]
pub struct NormMonitors {
    /// `||rho||_{L^{gamma_min}}`.
    pub rho_lgamma: f64,
    /// `||m||_{L^k}` with `k = 2 gamma_min / (gamma_min + 1)`.
    pub momentum_lk: f64,
    /// `||rho_i||_{L^1}` per species.
    pub l1_species: Vec<f64>,
    /// `||p||_{L^1}`.
    pub l1_pressure: f64,
    /// `||E||_{L^1}`.
    pub l1_energy: f64,
}

pub fn norm_monitors(field: &ConservedField, mix: &GasMixture) -> Result<NormMonitors> {
    let vol = field.grid().cell_volume();
    let gamma_min = mix.gamma_min();
    let k_exp = 2.0 * gamma_min / (gamma_min + 1.0);
    let mut rho_pow = 0.0;
    let mut mom_pow = 0.0;
    let mut l1_species = vec![0.0; mix.n_species()];
    let mut l1_pressure = 0.0;
    let mut l1_energy = 0.0;
    for state in field.iter() {
        let p = thermo::pressure(state, mix)?;
        let rho = state.density();
        let m_norm: f64 = state.momentum().iter().map(|v| v * v).sum::<f64>().sqrt();
        rho_pow += vol * rho.powf(gamma_min);
        mom_pow += vol * m_norm.powf(k_exp);
        for (i, &rho_i) in state.partial_densities().iter().enumerate() {
            l1_species[i] += vol * rho_i.abs();
        }
        l1_pressure += vol * p.abs();
        l1_energy += vol * state.total_energy().abs();
    }
    Ok(NormMonitors {
        rho_lgamma: rho_pow.powf(1.0 / gamma_min),
        momentum_lk: mom_pow.powf(1.0 / k_exp),
        l1_species,
        l1_pressure,
        l1_energy,
    })
}

/// Central finite-difference Hessian of `eta` at a state, with relative
/// steps. The basis for the per-state coercivity constants.
pub fn entropy_hessian_fd(
    u: &ConservedState,
    mix: &GasMixture,
) -> Result<[[f64; MAX_COMP]; MAX_COMP]> {
    let n = u.ncomp();
    let eta = |w: &ConservedState| thermo::entropy_density(w, mix);
    let mut h = [[0.0; MAX_COMP]; MAX_COMP];
    let step = |k: usize| 1e-5 * u.comp(k).abs().max(1.0);
    for i in 0..n {
        let hi = step(i);
        for j in i..n {
            let hj = step(j);
            let val = if i == j {
                let up = eta(&u.with_comp(i, u.comp(i) + hi))?;
                let dn = eta(&u.with_comp(i, u.comp(i) - hi))?;
                let mid = eta(u)?;
                (up - 2.0 * mid + dn) / (hi * hi)
            } else {
                let pp = eta(&u.with_comp(i, u.comp(i) + hi).with_comp(j, u.comp(j) + hj))?;
                let pm = eta(&u.with_comp(i, u.comp(i) + hi).with_comp(j, u.comp(j) - hj))?;
                let mp = eta(&u.with_comp(i, u.comp(i) - hi).with_comp(j, u.comp(j) + hj))?;
                let mm = eta(&u.with_comp(i, u.comp(i) - hi).with_comp(j, u.comp(j) - hj))?;
                (pp - pm - mp + mm) / (4.0 * hi * hj)
            };
            h[i][j] = val;
            h[j][i] = val;
        }
    }
    Ok(h)
}

/// Extreme eigenvalues of a small symmetric matrix by cyclic Jacobi
/// rotations.
pub fn symmetric_eigen_range(matrix: &[[f64; MAX_COMP]; MAX_COMP], n: usize) -> (f64, f64) {
    let mut a = *matrix;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        lo = lo.min(a[i][i]);
        hi = hi.max(a[i][i]);
    }
    (lo, hi)
}

/// Quadratic-model coercivity constants at a reference state:
/// `c1 = lambda_min(H)/2`, `c2 = lambda_max(H)/2` from the finite-difference
/// Hessian, so that `c1 |dU|^2 <= H(U|Ubar) <= c2 |dU|^2` for small jumps.
pub fn coercivity_constants(u_bar: &ConservedState, mix: &GasMixture) -> Result<(f64, f64)> {
    let h = entropy_hessian_fd(u_bar, mix)?;
    let (lo, hi) = symmetric_eigen_range(&h, u_bar.ncomp());
    Ok((0.5 * lo, 0.5 * hi))
}

// ---------------------------------------------------------------------------
// Consistency residual against smooth test functions.
// ---------------------------------------------------------------------------

/// Closed-form test function with analytic time derivative and gradient,
/// smooth and periodic on the run's box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunction {
    /// `phi = 1`.
    Constant,
    /// `phi = cos(2 pi x1) cos(2 pi x2) (1 + t)` (drops the second factor
    /// in 1D). Periodic on boxes with integer side lengths.
    CosCos,
}

impl TestFunction {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "const" | "constant" => Ok(TestFunction::Constant),
            "coscos" | "cos_cos" => Ok(TestFunction::CosCos),
            other => Err(Error::Invalid(format!(
                "unknown test function {other:?} (available: constant, coscos)"
            ))),
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant => 1.0,
            TestFunction::CosCos => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let mut v = (two_pi * x[0]).cos();
                if x.len() > 1 {
                    v *= (two_pi * x[1]).cos();
                }
                v * (1.0 + t)
            }
        }
    }

    pub fn grad(&self, t: f64, x: &[f64]) -> [f64; MAX_DIM] {
        match self {
            TestFunction::Constant => [0.0; MAX_DIM],
            TestFunction::CosCos => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let mut g = [0.0; MAX_DIM];
                if x.len() == 1 {
                    g[0] = -two_pi * (two_pi * x[0]).sin() * (1.0 + t);
                } else {
                    let (c0, s0) = ((two_pi * x[0]).cos(), (two_pi * x[0]).sin());
                    let (c1, s1) = ((two_pi * x[1]).cos(), (two_pi * x[1]).sin());
                    g[0] = -two_pi * s0 * c1 * (1.0 + t);
                    g[1] = -two_pi * c0 * s1 * (1.0 + t);
                }
                g
            }
        }
    }
}

/// Which weak-form component a consistency residual refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Species(usize),
    Momentum,
    Entropy,
}

impl Component {
    pub fn label(&self) -> String {
        match self {
            Component::Species(i) => format!("rho{}", i + 1),
            Component::Momentum => "m".to_string(),
            Component::Entropy => "eta".to_string(),
        }
    }
}

/// Scalar rows `(w_K, g_K)` of a component: the tested cell quantity and
/// its flux vector. Momentum expands to one row set per direction, tested
/// against the same scalar function.
fn component_rows(
    field: &ConservedField,
    aux: &[CellAux],
    etas: &[f64],
    component: Component,
) -> Vec<Vec<(f64, [f64; MAX_DIM])>> {
    let dim = field.grid().dim();
    let make = |value: &dyn Fn(usize) -> f64, gvec: &dyn Fn(usize) -> [f64; MAX_DIM]| {
        (0..field.len())
            .map(|k| (value(k), gvec(k)))
            .collect::<Vec<_>>()
    };
    match component {
        Component::Species(i) => {
            vec![make(&|k| field[k].comp(i), &|k| {
                let mut g = [0.0; MAX_DIM];
                for d in 0..dim {
                    g[d] = field[k].comp(i) * aux[k].u[d];
                }
                g
            })]
        }
        Component::Momentum => (0..dim)
            .map(|md| {
                let n = field[0].n_species();
                make(&|k| field[k].comp(n + md), &|k| {
                    let mut g = [0.0; MAX_DIM];
                    for d in 0..dim {
                        g[d] = field[k].momentum()[md] * aux[k].u[d]
                            + if d == md { aux[k].p } else { 0.0 };
                    }
                    g
                })
            })
            .collect(),
        Component::Entropy => {
            vec![make(&|k| etas[k], &|k| {
                let mut g = [0.0; MAX_DIM];
                for d in 0..dim {
                    g[d] = etas[k] * aux[k].u[d];
                }
                g
            })]
        }
    }
}

/// Instantaneous consistency defect of one component at one time:
/// the interface-diffusion term, the central-flux/weak-form mismatch,
/// and for the entropy the numerical-vs-physical entropy flux term.
fn residual_at_time(
    field: &ConservedField,
    mix: &GasMixture,
    mode: ViscosityMode,
    phi_bar: &ScalarField,
    grad_bar: &[ScalarField],
    component: Component,
) -> Result<f64> {
    let grid = *field.grid();
    let aux = all_aux(field, mix)?;
    let global = global_speed(&aux);
    let etas = if matches!(component, Component::Entropy) {
        entropy_densities(field, mix)?
    } else {
        Vec::new()
    };
    let rows = component_rows(field, &aux, &etas, component);
    let vol = grid.cell_volume();

    let mut total = 0.0;
    for row in &rows {
        let mut term_i = 0.0;
        let mut term_iii = 0.0;
        for face in grid.interfaces() {
            let (kl, kr) = (face.left, face.right);
            let lambda = face_lambda(&aux, kl, kr, mode, global);
            let dphi = phi_bar[kr] - phi_bar[kl];
            term_i -= face.area * 0.5 * lambda * (row[kr].0 - row[kl].0) * dphi;
            let flux_avg = 0.5 * (row[kl].1[face.axis] + row[kr].1[face.axis]);
            term_iii += face.area * flux_avg * dphi;
        }
        for k in 0..grid.n_cells() {
            for d in 0..grid.dim() {
                term_iii -= vol * row[k].1[d] * grad_bar[d][k];
            }
        }
        total += term_i + term_iii;
    }

    if matches!(component, Component::Entropy) {
        // Defect of the numerical entropy flux against the cell's physical
        // flux, summed over cells and their faces (so it telescopes for a
        // constant test function).
        let mut term_iv = 0.0;
        for face in grid.interfaces() {
            let (kl, kr) = (face.left, face.right);
            let normal = face.normal(grid.dim());
            let lambda = face_lambda(&aux, kl, kr, mode, global);
            let fhat = flux::numerical_entropy_flux_with(
                &field[kl],
                &field[kr],
                &normal[..grid.dim()],
                lambda,
                etas[kl],
                etas[kr],
            );
            let mut phys_l = 0.0;
            let mut phys_r = 0.0;
            for d in 0..grid.dim() {
                phys_l += etas[kl] * aux[kl].u[d] * normal[d];
                phys_r += etas[kr] * aux[kr].u[d] * normal[d];
            }
            term_iv += face.area * (fhat - phys_l) * phi_bar[kl];
            term_iv += face.area * (-fhat + phys_r) * phi_bar[kr];
        }
        total += term_iv;
    }
    Ok(total)
}

/// Time-boundary bracket of the projection defect
/// `sum_K U_K (int_K phi - |K| (Pi_h phi)_K)`, measured as the difference
/// between consecutive quadrature orders (zero up to quadrature error for
/// piecewise-constant fields).
fn projection_bracket(
    field: &ConservedField,
    t: f64,
    test: &TestFunction,
    component: Component,
    etas: &[f64],
    order: usize,
) -> f64 {
    let grid = *field.grid();
    let phi_lo = project_scalar(&|x| test.eval(t, x), &grid, order);
    let phi_hi = project_scalar(&|x| test.eval(t, x), &grid, order + 1);
    let vol = grid.cell_volume();
    let mut total = 0.0;
    for k in 0..grid.n_cells() {
        let dq = vol * (phi_hi[k] - phi_lo[k]);
        let w = match component {
            Component::Species(i) => field[k].comp(i),
            Component::Momentum => field[k].momentum().iter().sum(),
            Component::Entropy => etas[k],
        };
        total += w * dq;
    }
    total
}

/// `int_0^tau |R^h(t, phi)| dt` assembled from snapshots of a run, by the
/// trapezoid rule over the snapshot times plus the absolute time-boundary
/// bracket.
pub fn consistency_residual(
    snapshots: &[(f64, ConservedField)],
    test: &TestFunction,
    component: Component,
    mix: &GasMixture,
    mode: ViscosityMode,
    quadrature_order: usize,
) -> Result<f64> {
    let all = consistency_residuals(snapshots, test, &[component], mix, mode, quadrature_order)?;
    Ok(all[0])
}

/// Assemble several components in one sweep so the test-function
/// projections are computed once per snapshot.
pub fn consistency_residuals(
    snapshots: &[(f64, ConservedField)],
    test: &TestFunction,
    components: &[Component],
    mix: &GasMixture,
    mode: ViscosityMode,
    quadrature_order: usize,
) -> Result<Vec<f64>> {
    if snapshots.len() < 2 {
        return Err(Error::Invalid(
            "consistency residual needs at least two snapshots".into(),
        ));
    }
    let grid = *snapshots[0].1.grid();
    for (_, f) in snapshots {
        if f.grid() != &grid {
            return Err(Error::Invalid("snapshots live on different grids".into()));
        }
    }

    let mut integrals = vec![0.0; components.len()];
    let mut prev: Option<(f64, Vec<f64>)> = None;
    for (t, field) in snapshots {
        let phi_bar = project_scalar(&|x| test.eval(*t, x), &grid, quadrature_order);
        let grad_bar: Vec<ScalarField> = (0..grid.dim())
            .map(|d| project_scalar(&|x| test.grad(*t, x)[d], &grid, quadrature_order))
            .collect();
        let values: Vec<f64> = components
            .iter()
            .map(|c| residual_at_time(field, mix, mode, &phi_bar, &grad_bar, *c))
            .collect::<Result<_>>()?;
        if let Some((t0, v0)) = &prev {
            let w = 0.5 * (t - t0);
            for (i, v) in values.iter().enumerate() {
                integrals[i] += w * (v0[i].abs() + v.abs());
            }
        }
        prev = Some((*t, values));
    }

    // Boundary bracket from the first and last snapshots.
    let (t0, f0) = &snapshots[0];
    let (t1, f1) = snapshots.last().unwrap();
    for (i, c) in components.iter().enumerate() {
        let etas0 = if matches!(c, Component::Entropy) {
            entropy_densities(f0, mix)?
        } else {
            Vec::new()
        };
        let etas1 = if matches!(c, Component::Entropy) {
            entropy_densities(f1, mix)?
        } else {
            Vec::new()
        };
        let bracket = projection_bracket(f1, *t1, test, *c, &etas1, quadrature_order)
            - projection_bracket(f0, *t0, test, *c, &etas0, quadrature_order);
        integrals[i] += bracket.abs();
    }
    Ok(integrals)
}

// ---------------------------------------------------------------------------
// Per-step time series.
// ---------------------------------------------------------------------------

/// One row of the per-step diagnostics series.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    /// Total mass per species, `sum_K |K| rho_{i,K}`.
    pub species_mass: Vec<f64>,
    pub total_energy: f64,
    pub total_eta: f64,
    pub min_density: f64,
    pub min_pressure: f64,
    pub min_temperature: f64,
    pub min_entropy: f64,
    pub bv_l1: f64,
    pub bv_l2: f64,
    /// `||rho||_{L^{gamma_min}}`.
    pub rho_lgamma: f64,
    /// `||m||_{L^k}`, `k = 2 gamma_min / (gamma_min + 1)`.
    pub momentum_lk: f64,
    /// Normalized cell entropy residual of the step (NaN when unchecked).
    pub max_entropy_residual: f64,
}

pub fn step_record(
    field: &ConservedField,
    mix: &GasMixture,
    t: f64,
    dt: f64,
) -> Result<StepRecord> {
    let grid = field.grid();
    let vol = grid.cell_volume();
    let aux = all_aux(field, mix)?;
    let gamma_min = mix.gamma_min();
    let k_exp = 2.0 * gamma_min / (gamma_min + 1.0);
    let mut species_mass = vec![0.0; mix.n_species()];
    let mut total_energy = 0.0;
    let mut total_eta = 0.0;
    let mut min_density = f64::INFINITY;
    let mut min_pressure = f64::INFINITY;
    let mut min_temperature = f64::INFINITY;
    let mut min_entropy = f64::INFINITY;
    let mut rho_pow = 0.0;
    let mut mom_pow = 0.0;
    for (k, state) in field.iter().enumerate() {
        for (i, &rho_i) in state.partial_densities().iter().enumerate() {
            species_mass[i] += vol * rho_i;
            min_density = min_density.min(rho_i);
        }
        total_energy += vol * state.total_energy();
        let (s, eta) = thermo::mixture_entropy(state, mix)?;
        total_eta += vol * eta;
        min_entropy = min_entropy.min(s);
        min_pressure = min_pressure.min(aux[k].p);
        let temp = thermo::temperature_from_conserved(state, mix)?;
        min_temperature = min_temperature.min(temp);
        rho_pow += vol * state.density().powf(gamma_min);
        let m_norm: f64 = state.momentum().iter().map(|v| v * v).sum::<f64>().sqrt();
        mom_pow += vol * m_norm.powf(k_exp);
    }
    let mut bv_l1 = 0.0;
    let mut bv_l2 = 0.0;
    for face in grid.interfaces() {
        let lambda = aux[face.left].speed.max(aux[face.right].speed);
        let jump = field[face.right].diff(&field[face.left]).norm();
        bv_l1 += vol * lambda * jump;
        bv_l2 += vol * lambda * jump * jump;
    }
    Ok(StepRecord {
        t,
        dt,
        species_mass,
        total_energy,
        total_eta,
        min_density,
        min_pressure,
        min_temperature,
        min_entropy,
        bv_l1,
        bv_l2,
        rho_lgamma: rho_pow.powf(1.0 / gamma_min),
        momentum_lk: mom_pow.powf(1.0 / k_exp),
        max_entropy_residual: f64::NAN,
    })
}

/// Per-step records with strictly increasing times.
#[derive(Clone, Debug, Default)]
pub struct DiagnosticsTimeSeries {
    pub records: Vec<StepRecord>,
}

impl DiagnosticsTimeSeries {
    pub fn new() -> Self {
        DiagnosticsTimeSeries {
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: StepRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.t <= last.t {
                return Err(Error::Invalid(format!(
                    "diagnostics times must increase strictly ({} after {})",
                    record.t, last.t
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// Time integral of `bv_l1` by the trapezoid rule over the step sequence.
    pub fn bv_l1_time_integral(&self) -> f64 {
        let mut total = 0.0;
        for pair in self.records.windows(2) {
            total += 0.5 * (pair[1].t - pair[0].t) * (pair[0].bv_l1 + pair[1].bv_l1);
        }
        total
    }

    /// Largest relative drift of a conserved total over the series.
    pub fn conservation_drift(&self) -> f64 {
        let Some(first) = self.records.first() else {
            return 0.0;
        };
        let mut worst = 0.0f64;
        for r in &self.records {
            for (a, b) in r.species_mass.iter().zip(&first.species_mass) {
                worst = worst.max((a - b).abs() / b.abs().max(1e-300));
            }
            worst = worst.max(
                (r.total_energy - first.total_energy).abs() / first.total_energy.abs().max(1e-300),
            );
        }
        worst
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.records.first().map_or(0, |r| r.species_mass.len());
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header = vec!["t".to_string(), "dt".to_string()];
        header.extend((1..=n).map(|i| format!("mass{i}")));
        header.extend(
            [
                "energy",
                "total_eta",
                "min_rho",
                "min_p",
                "min_T",
                "min_s",
                "bv_l1",
                "bv_l2",
                "rho_lgamma",
                "momentum_lk",
                "max_entropy_residual",
            ]
            .map(String::from),
        );
        writeln!(w, "{}", header.join(","))?;
        for r in &self.records {
            let mut row = vec![format!("{:.17e}", r.t), format!("{:.17e}", r.dt)];
            row.extend(r.species_mass.iter().map(|v| format!("{v:.17e}")));
            for v in [
                r.total_energy,
                r.total_eta,
                r.min_density,
                r.min_pressure,
                r.min_temperature,
                r.min_entropy,
                r.bv_l1,
                r.bv_l2,
                r.rho_lgamma,
                r.momentum_lk,
                r.max_entropy_residual,
            ] {
                row.push(format!("{v:.17e}"));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parse a series written by [`DiagnosticsTimeSeries::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty diagnostics csv".into()))?;
        let names: Vec<&str> = header.split(',').collect();
        let n = names.iter().filter(|c| c.starts_with("mass")).count();
        let mut series = DiagnosticsTimeSeries::new();
        for line in lines {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Error::Invalid(format!("bad diagnostics value {v:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if vals.len() != names.len() {
                return Err(Error::Invalid("ragged diagnostics csv".into()));
            }
            series.push(StepRecord {
                t: vals[0],
                dt: vals[1],
                species_mass: vals[2..2 + n].to_vec(),
                total_energy: vals[2 + n],
                total_eta: vals[3 + n],
                min_density: vals[4 + n],
                min_pressure: vals[5 + n],
                min_temperature: vals[6 + n],
                min_entropy: vals[7 + n],
                bv_l1: vals[8 + n],
                bv_l2: vals[9 + n],
                rho_lgamma: vals[10 + n],
                momentum_lk: vals[11 + n],
                max_entropy_residual: vals[12 + n],
            })?;
        }
        Ok(series)
    }
}
