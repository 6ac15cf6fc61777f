//! Semi-discrete finite-volume right-hand side, CFL time-step control and
//! explicit integrators (forward Euler and three-stage SSP Runge-Kutta).
//!
//! Positivity and entropy properties are monitored, never enforced: no
//! floors or limiters anywhere. An inadmissible state aborts the run with
//! the offending cell, stage and time.

use std::sync::Arc;

use crate::diagnostics::{self, DiagnosticsTimeSeries};
use crate::error::{Error, Result};
use crate::flux::{self, CellAux};
use crate::mesh::{ConservedField, Field};
use crate::state::CompVec;
use crate::thermo::GasMixture;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Ssprk3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViscosityMode {
    /// Interface viscosity from the two adjacent states.
    Local,
    /// One global bound for the whole field.
    Global,
}

/// Closed-form source term, evaluated at cell centers (midpoint rule).
pub trait SourceTerm: Send + Sync {
    /// Rate contribution at `(t, x)` in the conserved layout.
    fn eval(&self, t: f64, x: &[f64]) -> CompVec;
}

#[derive(Clone)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub viscosity: ViscosityMode,
    pub source: Option<Arc<dyn SourceTerm>>,
    pub snapshot_times: Vec<f64>,
    /// Keep a snapshot after every step (consistency studies).
    pub snapshot_every_step: bool,
    /// Evaluate the cell entropy residual on every RHS evaluation and track
    /// its normalized maximum.
    pub check_entropy_residual: bool,
}

impl SolverConfig {
    pub fn new(cfl: f64, t_end: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Invalid(format!("cfl = {cfl} must lie in (0, 1]")));
        }
        if !(t_end > 0.0) {
            return Err(Error::Invalid(format!("t_end = {t_end} must be positive")));
        }
        Ok(SolverConfig {
            cfl,
            t_end,
            integrator: Integrator::Ssprk3,
            viscosity: ViscosityMode::Local,
            source: None,
            snapshot_times: Vec::new(),
            snapshot_every_step: false,
            check_entropy_residual: false,
        })
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_viscosity(mut self, viscosity: ViscosityMode) -> Self {
        self.viscosity = viscosity;
        self
    }

    pub fn with_source(mut self, source: Arc<dyn SourceTerm>) -> Self {
        self.source = Some(source);
        self
    }

    pub fn with_snapshot_times(mut self, times: Vec<f64>) -> Result<Self> {
        for &t in &times {
            if t < 0.0 || t > self.t_end * (1.0 + 1e-12) {
                return Err(Error::Invalid(format!(
                    "snapshot time {t} outside [0, t_end = {}]",
                    self.t_end
                )));
            }
        }
        self.snapshot_times = times;
        self.snapshot_times.sort_by(f64::total_cmp);
        Ok(self)
    }

    pub fn with_entropy_residual_check(mut self, on: bool) -> Self {
        self.check_entropy_residual = on;
        self
    }
}

/// Per-cell aux values for a whole field, failing with located context.
pub(crate) fn field_aux(
    field: &ConservedField,
    mix: &GasMixture,
    time: f64,
    stage: &str,
) -> Result<Vec<CellAux>> {
    let grid = field.grid();
    let mut aux = Vec::with_capacity(field.len());
    for (k, state) in field.iter().enumerate() {
        match flux::cell_aux(state, mix) {
            Ok(a) => aux.push(a),
            Err(e) => {
                let idx = grid.unflat(k)[..grid.dim()].to_vec();
                return Err(e.locate(k, idx, time, stage));
            }
        }
    }
    Ok(aux)
}

/// Semi-discrete right-hand side
/// `dU_K/dt = -(1/|K|) sum_L |S_KL| F_KL + q(x_K, t)`.
pub fn rhs(
    field: &ConservedField,
    mix: &GasMixture,
    cfg: &SolverConfig,
    t: f64,
) -> Result<Field<CompVec>> {
    let aux = field_aux(field, mix, t, "rhs")?;
    let mut rates = rhs_with_aux(field, &aux, cfg.viscosity);
    if let Some(source) = &cfg.source {
        add_source(&mut rates, source.as_ref(), t);
    }
    Ok(rates)
}

/// Homogeneous RHS given precomputed cell aux data. One pass over the
/// interfaces; the two adjacent cells receive exactly opposite updates, so
/// conservation telescopes bitwise.
pub(crate) fn rhs_with_aux(
    field: &ConservedField,
    aux: &[CellAux],
    viscosity: ViscosityMode,
) -> Field<CompVec> {
    let grid = *field.grid();
    let ncomp = field[0].ncomp();
    let lambda_global = match viscosity {
        ViscosityMode::Global => aux.iter().map(|a| a.speed).fold(0.0f64, f64::max),
        ViscosityMode::Local => 0.0,
    };
    let inv_vol = 1.0 / grid.cell_volume();
    let mut rates = Field::fill(grid, CompVec::zeros(ncomp));
    for face in grid.interfaces() {
        let (kl, kr) = (face.left, face.right);
        let normal = face.normal(grid.dim());
        let lambda = match viscosity {
            ViscosityMode::Local => aux[kl].speed.max(aux[kr].speed),
            ViscosityMode::Global => lambda_global,
        };
        let fl = flux::flux_with(&field[kl], &aux[kl].u, aux[kl].p, &normal[..grid.dim()]);
        let fr = flux::flux_with(&field[kr], &aux[kr].u, aux[kr].p, &normal[..grid.dim()]);
        let scale = face.area * inv_vol;
        for k in 0..ncomp {
            let f = 0.5 * (fl[k] + fr[k]) - 0.5 * lambda * (field[kr].comp(k) - field[kl].comp(k));
            let contrib = scale * f;
            rates[kl][k] -= contrib;
            rates[kr][k] += contrib;
        }
    }
    rates
}

fn add_source(rates: &mut Field<CompVec>, source: &dyn SourceTerm, t: f64) {
    let grid = *rates.grid();
    for k in 0..grid.n_cells() {
        let x = grid.cell_center(k);
        let q = source.eval(t, &x[..grid.dim()]);
        for c in 0..q.len() {
            rates[k][c] += q[c];
        }
    }
}

/// CFL time step `dt = cfl / sum_d (lambda_d / h_d)` with the global
/// per-direction wave speeds `lambda_d = max_K (|u_{d,K}| + c_K)`; reduces
/// to `cfl * h / lambda` in 1D. Always uses the global field speeds,
/// regardless of the viscosity mode.
pub fn stable_dt(field: &ConservedField, mix: &GasMixture, cfg: &SolverConfig) -> Result<f64> {
    let grid = field.grid();
    let mut per_dir = [0.0f64; crate::state::MAX_DIM];
    for state in field.iter() {
        let t = crate::thermo::temperature_from_conserved(state, mix)?;
        if !(t > 0.0) {
            return Err(Error::Inadmissible(
                crate::error::Inadmissible::Temperature { value: t },
            ));
        }
        let p = crate::thermo::pressure_with(state, mix, t);
        let sound = crate::thermo::sound_speed_with(state, mix, p);
        let u = state.velocity();
        for d in 0..grid.dim() {
            per_dir[d] = per_dir[d].max(u[d].abs() + sound);
        }
    }
    let mut scaled: f64 = 0.0;
    for d in 0..grid.dim() {
        scaled += per_dir[d] / grid.spacing()[d];
    }
    if !(scaled > 0.0) {
        return Err(Error::Invalid(
            "field wave speeds are not positive; cannot form a CFL step".into(),
        ));
    }
    Ok(cfg.cfl / scaled)
}

/// Diagnostics gathered by one step.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    /// Max over cells and stages of the normalized cell entropy residual,
    /// NaN when the check is off.
    pub max_entropy_residual: f64,
}

fn check_field(field: &ConservedField, mix: &GasMixture, time: f64, stage: &str) -> Result<()> {
    let grid = field.grid();
    for (k, state) in field.iter().enumerate() {
        if let Some(reason) = crate::thermo::admissibility_violation(state, mix) {
            let idx = grid.unflat(k)[..grid.dim()].to_vec();
            return Err(Error::InadmissibleCell {
                cell: k,
                index: idx,
                time,
                stage: stage.to_string(),
                reason,
            });
        }
    }
    Ok(())
}

/// One explicit step. Stage values are checked for admissibility; a failure
/// reports the cell, stage and time.
pub fn step(
    field: &ConservedField,
    dt: f64,
    mix: &GasMixture,
    cfg: &SolverConfig,
    t: f64,
) -> Result<(ConservedField, StepStats)> {
    let mut stats = StepStats {
        max_entropy_residual: f64::NAN,
    };
    let mut stage_rhs = |f: &ConservedField, time: f64, stage: &str| -> Result<Field<CompVec>> {
        let aux = field_aux(f, mix, time, stage)?;
        let rates = rhs_with_aux(f, &aux, cfg.viscosity);
        if cfg.check_entropy_residual {
            let r = diagnostics::entropy_residual_max(f, &rates, mix, cfg.viscosity)?;
            stats.max_entropy_residual = if stats.max_entropy_residual.is_nan() {
                r
            } else {
                stats.max_entropy_residual.max(r)
            };
        }
        let mut rates = rates;
        if let Some(source) = &cfg.source {
            add_source(&mut rates, source.as_ref(), time);
        }
        Ok(rates)
    };

    let result = match cfg.integrator {
        Integrator::Euler => {
            let r = stage_rhs(field, t, "forward Euler RHS")?;
            let next = Field::from_fn(*field.grid(), |k| field[k].add_scaled(dt, &r[k]));
            check_field(&next, mix, t + dt, "forward Euler result")?;
            next
        }
        Integrator::Ssprk3 => {
            // Shu-Osher form: convex combinations of forward Euler steps.
            let r1 = stage_rhs(field, t, "SSPRK3 stage 1 RHS")?;
            let u1 = Field::from_fn(*field.grid(), |k| field[k].add_scaled(dt, &r1[k]));
            let r2 = stage_rhs(&u1, t + dt, "SSPRK3 stage 2 RHS")?;
            let u2 = Field::from_fn(*field.grid(), |k| {
                crate::state::ConservedState::lincomb(
                    0.75,
                    &field[k],
                    0.25,
                    &u1[k].add_scaled(dt, &r2[k]),
                )
            });
            let r3 = stage_rhs(&u2, t + 0.5 * dt, "SSPRK3 stage 3 RHS")?;
            let u3 = Field::from_fn(*field.grid(), |k| {
                crate::state::ConservedState::lincomb(
                    1.0 / 3.0,
                    &field[k],
                    2.0 / 3.0,
                    &u2[k].add_scaled(dt, &r3[k]),
                )
            });
            check_field(&u3, mix, t + dt, "SSPRK3 result")?;
            u3
        }
    };
    Ok((result, stats))
}

/// Full run output: final field, requested snapshots and the per-step
/// diagnostics series.
pub struct RunOutput {
    pub final_field: ConservedField,
    pub snapshots: Vec<(f64, ConservedField)>,
    pub series: DiagnosticsTimeSeries,
    pub steps: usize,
    /// Max over the whole run of the normalized cell entropy residual
    /// (NaN when unchecked).
    pub max_entropy_residual: f64,
}

/// Advance to `t_end`. Steps are clipped to land exactly on snapshot times
/// and on `t_end`; outputs are never interpolated.
pub fn run(initial: ConservedField, mix: &GasMixture, cfg: &SolverConfig) -> Result<RunOutput> {
    check_field(&initial, mix, 0.0, "initial data")?;
    let eps = 1e-12 * cfg.t_end.max(1.0);

    // Clip targets: snapshot times and the end time, strictly increasing.
    let mut targets: Vec<f64> = cfg
        .snapshot_times
        .iter()
        .copied()
        .filter(|&s| s > eps)
        .collect();
    targets.push(cfg.t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup_by(|a, b| (*a - *b).abs() <= eps);

    let wants_snapshot = |time: f64| {
        cfg.snapshot_every_step || cfg.snapshot_times.iter().any(|&s| (s - time).abs() <= eps)
    };

    let mut snapshots = Vec::new();
    let mut series = DiagnosticsTimeSeries::new();
    let mut field = initial;
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut max_residual = f64::NAN;

    series.push(diagnostics::step_record(&field, mix, t, 0.0)?)?;
    if wants_snapshot(0.0) {
        snapshots.push((0.0, field.clone()));
    }

    let mut target_iter = targets.into_iter();
    let mut next_target = target_iter.next().expect("at least t_end");
    while t < cfg.t_end - eps {
        let dt_stable = stable_dt(&field, mix, cfg)?;
        let remaining = next_target - t;
        let (dt, clipped) = if dt_stable >= remaining - eps {
            (remaining, true)
        } else {
            (dt_stable, false)
        };
        let (next, stats) = step(&field, dt, mix, cfg, t)?;
        field = next;
        t = if clipped { next_target } else { t + dt };
        steps += 1;
        if !stats.max_entropy_residual.is_nan() {
            max_residual = if max_residual.is_nan() {
                stats.max_entropy_residual
            } else {
                max_residual.max(stats.max_entropy_residual)
            };
        }
        let mut record = diagnostics::step_record(&field, mix, t, dt)?;
        record.max_entropy_residual = stats.max_entropy_residual;
        series.push(record)?;
        if clipped {
            if wants_snapshot(t) {
                snapshots.push((t, field.clone()));
            }
            match target_iter.next() {
                Some(s) => next_target = s,
                None => break,
            }
        } else if cfg.snapshot_every_step {
            snapshots.push((t, field.clone()));
        }
    }

    Ok(RunOutput {
        final_field: field,
        snapshots,
        series,
        steps,
        max_entropy_residual: max_residual,
    })
}
