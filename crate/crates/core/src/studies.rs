//! The convergence and diagnostics harness: single runs with artifact
//! directories, mesh-refinement error studies, Cesaro-average studies on
//! the shear case, consistency-residual studies, and report aggregation.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::cases::{self, KhiCoefficients, ManufacturedSolution};
use crate::config::{CaseSpec, RunSpec};
use crate::diagnostics::{self, Component, TestFunction};
use crate::error::{Error, Result};
use crate::mesh::{ConservedField, Field, Grid};
use crate::snapshot;
use crate::solver::{self, RunOutput, SolverConfig};
use crate::thermo;

/// Everything a single executed run produces.
pub struct ExecutedRun {
    pub output: RunOutput,
    pub coefficients: Option<KhiCoefficients>,
    pub manufactured: Option<ManufacturedSolution>,
    pub wall_seconds: f64,
}

fn build_manufactured(spec: &RunSpec) -> Result<ManufacturedSolution> {
    match &spec.case {
        CaseSpec::Manufactured {
            background,
            amplitude,
            profile,
            fractions,
            ..
        } => ManufacturedSolution::new(
            &spec.mixture,
            spec.grid.dim(),
            *background,
            *amplitude,
            *profile,
            fractions.clone(),
        ),
        _ => Err(Error::Invalid("not a manufactured-solution case".into())),
    }
}

/// Build the initial field and per-case extras for a spec on a given grid
/// (the grid may differ from `spec.grid` inside studies).
fn prepare(
    spec: &RunSpec,
    grid: &Grid,
    coeffs: Option<&KhiCoefficients>,
) -> Result<(
    ConservedField,
    SolverConfig,
    Option<KhiCoefficients>,
    Option<ManufacturedSolution>,
)> {
    let mut cfg = spec.solver_config()?;
    match &spec.case {
        CaseSpec::Manufactured { projected_init, .. } => {
            let ms = build_manufactured(spec)?;
            let field =
                cases::manufactured_initial(&ms, grid, *projected_init, spec.quadrature_order)?;
            cfg = cfg.with_source(Arc::new(ms.source()?));
            Ok((field, cfg, None, Some(ms)))
        }
        CaseSpec::Khi(khi) => {
            let coeffs = match coeffs {
                Some(c) => c.clone(),
                None => KhiCoefficients::draw(khi.seed),
            };
            let field = cases::khi_initial_with_coefficients(khi, &coeffs, grid, &spec.mixture)?;
            Ok((field, cfg, Some(coeffs), None))
        }
        CaseSpec::Uniform {
            rho,
            velocity,
            pressure,
        } => {
            let field = cases::uniform_initial(rho, velocity, *pressure, grid, &spec.mixture)?;
            Ok((field, cfg, None, None))
        }
    }
}

/// Execute the run described by a spec on its own grid.
pub fn execute(spec: &RunSpec) -> Result<ExecutedRun> {
    execute_on_grid(spec, &spec.grid, None, false)
}

fn execute_on_grid(
    spec: &RunSpec,
    grid: &Grid,
    coeffs: Option<&KhiCoefficients>,
    snapshot_every_step: bool,
) -> Result<ExecutedRun> {
    let (field, mut cfg, coefficients, manufactured) = prepare(spec, grid, coeffs)?;
    cfg.snapshot_every_step = snapshot_every_step;
    let start = Instant::now();
    let output = solver::run(field, &spec.mixture, &cfg)?;
    Ok(ExecutedRun {
        output,
        coefficients,
        manufactured,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn write_metadata(
    dir: &Path,
    spec: &RunSpec,
    run: &ExecutedRun,
    extra: &[(String, String)],
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("metadata.txt"))?);
    writeln!(w, "config_hash = {:016x}", spec.hash)?;
    writeln!(w, "case = {}", spec.case.name())?;
    writeln!(w, "mixture = {}", spec.mixture_line())?;
    writeln!(w, "steps = {}", run.output.steps)?;
    writeln!(w, "wall_time_s = {:.3}", run.wall_seconds)?;
    writeln!(
        w,
        "max_entropy_residual = {:e}",
        run.output.max_entropy_residual
    )?;
    for (k, v) in extra {
        writeln!(w, "{k} = {v}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_metadata(dir: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(dir.join("metadata.txt"))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}

/// Refuse to aggregate artifacts produced with different mixtures.
pub fn check_same_mixture(metadata: &[Vec<(String, String)>]) -> Result<()> {
    let mixtures: Vec<&str> = metadata
        .iter()
        .map(|m| {
            m.iter()
                .find(|(k, _)| k == "mixture")
                .map(|(_, v)| v.as_str())
                .unwrap_or("")
        })
        .collect();
    if let Some(first) = mixtures.first() {
        if mixtures.iter().any(|m| m != first) {
            return Err(Error::Invalid(
                "refusing to aggregate runs with mismatched mixture parameters".into(),
            ));
        }
    }
    Ok(())
}

/// Per-case parameter lines echoed into run metadata.
fn case_metadata(spec: &RunSpec) -> Vec<(String, String)> {
    match &spec.case {
        CaseSpec::Manufactured {
            background,
            amplitude,
            profile,
            fractions,
            ..
        } => {
            let mut out = vec![
                ("background".to_string(), format!("{background:.17e}")),
                ("amplitude".to_string(), format!("{amplitude:.17e}")),
                (
                    "energy_profile".to_string(),
                    match profile {
                        crate::cases::EnergyProfile::RhoSquared => "rho2".to_string(),
                        crate::cases::EnergyProfile::Rho => "rho".to_string(),
                    },
                ),
            ];
            if let Some(f) = fractions {
                out.push((
                    "fractions".to_string(),
                    f.iter()
                        .map(|v| format!("{v:.17e}"))
                        .collect::<Vec<_>>()
                        .join(" "),
                ));
            }
            out
        }
        CaseSpec::Khi(khi) => vec![
            ("seed".to_string(), khi.seed.to_string()),
            ("epsilon".to_string(), format!("{:.17e}", khi.epsilon)),
            ("pressure".to_string(), format!("{:.17e}", khi.pressure)),
        ],
        CaseSpec::Uniform { .. } => Vec::new(),
    }
}

/// Execute a single run and write its artifact directory: the config echo,
/// metadata, the per-step diagnostics CSV, snapshots at the configured
/// times, and the shear-case coefficient dump.
pub fn run_single(spec: &RunSpec, out_dir: &Path) -> Result<ExecutedRun> {
    std::fs::create_dir_all(out_dir)?;
    let run = execute(spec)?;
    std::fs::write(out_dir.join("config.cfg"), &spec.text)?;
    run.output
        .series
        .write_csv(&out_dir.join("diagnostics.csv"))?;
    for (t, field) in &run.output.snapshots {
        snapshot::write_snapshot(&out_dir.join(format!("state_t{t:.6}.snap")), field, *t)?;
    }
    snapshot::write_snapshot(
        &out_dir.join("final.snap"),
        &run.output.final_field,
        spec.t_end,
    )?;
    snapshot::write_csv(&out_dir.join("final.csv"), &run.output.final_field)?;
    if let Some(coeffs) = &run.coefficients {
        coeffs.write_csv(&out_dir.join("khi_coeffs.csv"))?;
    }
    write_metadata(out_dir, spec, &run, &case_metadata(spec))?;
    Ok(run)
}

// ---------------------------------------------------------------------------
// Error-order study on the manufactured solution.
// ---------------------------------------------------------------------------

pub struct EocRow {
    pub cells: usize,
    /// Per-variable L2 error at the final time.
    pub errors: Vec<f64>,
    /// Per-variable order against the previous row.
    pub eoc: Vec<Option<f64>>,
}

pub struct EocReport {
    pub variables: Vec<String>,
    pub rows: Vec<EocRow>,
    pub mean_eoc: Vec<f64>,
    /// `(cells, h, total relative entropy at t_end)` per mesh.
    pub relative_entropy: Vec<(usize, f64, f64)>,
}

impl EocReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header = vec!["N".to_string()];
        for v in &self.variables {
            header.push(format!("err_{v}"));
            header.push(format!("eoc_{v}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let mut line = vec![row.cells.to_string()];
            for (err, eoc) in row.errors.iter().zip(&row.eoc) {
                line.push(format!("{err:.6e}"));
                line.push(eoc.map_or(String::new(), |v| format!("{v:.3}")));
            }
            writeln!(w, "{}", line.join(","))?;
        }
        let mut mean_line = vec!["mean".to_string()];
        for m in &self.mean_eoc {
            mean_line.push(String::new());
            mean_line.push(format!("{m:.3}"));
        }
        writeln!(w, "{}", mean_line.join(","))?;
        w.flush()?;
        Ok(())
    }

    pub fn write_relative_entropy_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "N,h,relative_entropy")?;
        for (n, h, re) in &self.relative_entropy {
            writeln!(w, "{n},{h:.6e},{re:.6e}")?;
        }
        w.flush()?;
        Ok(())
    }
}

fn order(prev_err: f64, err: f64, prev_n: usize, n: usize) -> f64 {
    (prev_err / err).ln() / (n as f64 / prev_n as f64).ln()
}

/// Refinement study: run the manufactured case on each mesh of the study
/// hierarchy, tabulate per-variable L2 errors and orders, and record the
/// total relative entropy against the exact solution at the final time.
pub fn run_eoc(spec: &RunSpec, out_dir: Option<&Path>) -> Result<EocReport> {
    let study = spec
        .study
        .as_ref()
        .ok_or_else(|| Error::Invalid("eoc needs a [study] section".into()))?;
    if !matches!(spec.case, CaseSpec::Manufactured { .. }) {
        return Err(Error::Invalid("eoc runs on the manufactured case".into()));
    }
    let ms = build_manufactured(spec)?;
    let dim = spec.grid.dim();

    let mut rows: Vec<EocRow> = Vec::new();
    let mut relative_entropy = Vec::new();
    let mut metadata = Vec::new();
    for &n in &study.meshes {
        let grid = Grid::new(&vec![n; dim], spec.grid.box_lo(), spec.grid.box_hi())?;
        let run = execute_on_grid(spec, &grid, None, false)?;
        let errors = cases::exact_error(&run.output.final_field, &ms, spec.t_end);

        let exact = Field::from_fn(grid, |k| {
            let x = grid.cell_center(k);
            ms.exact_state(spec.t_end, &x[..dim])
        });
        let re =
            diagnostics::total_relative_entropy(&run.output.final_field, &exact, &spec.mixture)?;
        relative_entropy.push((n, grid.min_spacing(), re));

        let eoc = match rows.last() {
            None => vec![None; errors.len()],
            Some(prev) => errors
                .iter()
                .zip(&prev.errors)
                .map(|(e, pe)| Some(order(*pe, *e, prev.cells, n)))
                .collect(),
        };
        rows.push(EocRow {
            cells: n,
            errors,
            eoc,
        });

        if let Some(dir) = out_dir {
            let level_dir = dir.join(format!("level_{n:04}"));
            std::fs::create_dir_all(&level_dir)?;
            run.output
                .series
                .write_csv(&level_dir.join("diagnostics.csv"))?;
            snapshot::write_snapshot(
                &level_dir.join("final.snap"),
                &run.output.final_field,
                spec.t_end,
            )?;
            write_metadata(&level_dir, spec, &run, &[("cells".into(), n.to_string())])?;
            metadata.push(read_metadata(&level_dir)?);
        }
    }
    check_same_mixture(&metadata)?;

    let nvars = rows[0].errors.len();
    let mut mean_eoc = vec![0.0; nvars];
    let mut counted = 0;
    for row in &rows {
        if row.eoc[0].is_some() {
            counted += 1;
            for (m, e) in mean_eoc.iter_mut().zip(&row.eoc) {
                *m += e.unwrap();
            }
        }
    }
    if counted > 0 {
        for m in &mut mean_eoc {
            *m /= counted as f64;
        }
    }

    let probe = &rows[0];
    let n_species = spec.mixture.n_species();
    let variables = snapshot::variable_names(n_species, dim);
    debug_assert_eq!(variables.len(), probe.errors.len());

    let report = EocReport {
        variables,
        rows,
        mean_eoc,
        relative_entropy,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        report.write_csv(&dir.join("report_eoc.csv"))?;
        report.write_relative_entropy_csv(&dir.join("relative_entropy.csv"))?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Cesaro-average study on the shear case.
// ---------------------------------------------------------------------------

pub struct CesaroRow {
    pub cells: usize,
    pub e1: f64,
    pub eoc1: Option<f64>,
    pub e2: f64,
    pub eoc2: Option<f64>,
}

pub struct CesaroReport {
    pub variables: Vec<String>,
    /// Rows per variable, one entry per hierarchy level below the reference.
    pub rows: Vec<Vec<CesaroRow>>,
}

impl CesaroReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "variable,n,E1,eoc1,E2,eoc2")?;
        for (var, rows) in self.variables.iter().zip(&self.rows) {
            for r in rows {
                writeln!(
                    w,
                    "{var},{},{:.6e},{},{:.6e},{}",
                    r.cells,
                    r.e1,
                    r.eoc1.map_or(String::new(), |v| format!("{v:.3}")),
                    r.e2,
                    r.eoc2.map_or(String::new(), |v| format!("{v:.3}")),
                )?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Piecewise-constant injection of a coarse field onto a finer nested grid.
fn inject(coarse: &ConservedField, fine: &Grid) -> ConservedField {
    let cg = coarse.grid();
    let mut ratio = [1usize; crate::state::MAX_DIM];
    for d in 0..fine.dim() {
        ratio[d] = fine.cells_per_dim()[d] / cg.cells_per_dim()[d];
    }
    Field::from_fn(*fine, |k| {
        let idx = fine.unflat(k);
        let mut cidx = [0usize; crate::state::MAX_DIM];
        for d in 0..fine.dim() {
            cidx[d] = idx[d] / ratio[d];
        }
        coarse[cg.flat(&cidx[..fine.dim()])]
    })
}

/// Space-time L1 distance per variable between two snapshot series living
/// on the same grid and times, by the trapezoid rule in time.
fn l1_space_time(a: &[(f64, ConservedField)], b: &[(f64, ConservedField)]) -> Vec<f64> {
    let ncomp = a[0].1[0].ncomp();
    let vol = a[0].1.grid().cell_volume();
    let mut spatial: Vec<Vec<f64>> = Vec::with_capacity(a.len());
    for ((_, fa), (_, fb)) in a.iter().zip(b) {
        let mut per_var = vec![0.0; ncomp];
        for k in 0..fa.len() {
            for c in 0..ncomp {
                per_var[c] += vol * (fa[k].comp(c) - fb[k].comp(c)).abs();
            }
        }
        spatial.push(per_var);
    }
    let mut totals = vec![0.0; ncomp];
    for i in 1..a.len() {
        let dt = a[i].0 - a[i - 1].0;
        for c in 0..ncomp {
            totals[c] += 0.5 * dt * (spatial[i - 1][c] + spatial[i][c]);
        }
    }
    totals
}

/// Run the shear hierarchy with one shared seed, prolong every solution to
/// the finest mesh, and tabulate the refinement error `E1` and the
/// Cesaro-average error `E2` per variable.
pub fn run_cesaro(spec: &RunSpec, out_dir: Option<&Path>) -> Result<CesaroReport> {
    let study = spec
        .study
        .as_ref()
        .ok_or_else(|| Error::Invalid("cesaro needs a [study] section".into()))?;
    let khi = match &spec.case {
        CaseSpec::Khi(k) => k.clone(),
        _ => return Err(Error::Invalid("cesaro runs on the khi case".into())),
    };

    // The hierarchy is the mesh list plus the reference (defaults to the
    // last mesh if not given separately).
    let mut levels = study.meshes.clone();
    if let Some(reference) = study.reference {
        if reference != *levels.last().unwrap() {
            levels.push(reference);
        }
    }
    let n_ref = *levels.last().unwrap();
    for &n in &levels {
        if n_ref % n != 0 {
            return Err(Error::Invalid(format!(
                "mesh {n} is not nested in the reference mesh {n_ref}"
            )));
        }
    }

    let times: Vec<f64> = (0..study.times)
        .map(|i| spec.t_end * i as f64 / (study.times - 1) as f64)
        .collect();
    let coeffs = KhiCoefficients::draw(khi.seed);

    let dim = spec.grid.dim();
    let mut level_snaps: Vec<Vec<(f64, ConservedField)>> = Vec::new();
    let mut metadata = Vec::new();
    for &n in &levels {
        let grid = Grid::new(&vec![n; dim], spec.grid.box_lo(), spec.grid.box_hi())?;
        let mut level_spec = spec.clone();
        level_spec.snapshot_times = times.clone();
        let run = execute_on_grid(&level_spec, &grid, Some(&coeffs), false)?;
        if run.output.snapshots.len() != times.len() {
            return Err(Error::Invalid(format!(
                "level {n} produced {} snapshots, expected {}",
                run.output.snapshots.len(),
                times.len()
            )));
        }
        if let Some(dir) = out_dir {
            let level_dir = dir.join(format!("level_{n:04}"));
            std::fs::create_dir_all(&level_dir)?;
            run.output
                .series
                .write_csv(&level_dir.join("diagnostics.csv"))?;
            snapshot::write_snapshot(
                &level_dir.join("final.snap"),
                &run.output.final_field,
                spec.t_end,
            )?;
            write_metadata(&level_dir, spec, &run, &[("cells".into(), n.to_string())])?;
            metadata.push(read_metadata(&level_dir)?);
        }
        level_snaps.push(run.output.snapshots);
    }
    check_same_mixture(&metadata)?;

    let fine_grid = *level_snaps.last().unwrap()[0].1.grid();
    let ncomp = level_snaps[0][0].1[0].ncomp();
    let n_levels = levels.len();

    // Injected series per level on the reference grid.
    let injected: Vec<Vec<(f64, ConservedField)>> = level_snaps
        .iter()
        .map(|snaps| {
            snaps
                .iter()
                .map(|(t, f)| (*t, inject(f, &fine_grid)))
                .collect()
        })
        .collect();
    drop(level_snaps);

    // Cesaro means over levels 1..=l, per level.
    let cesaro: Vec<Vec<(f64, ConservedField)>> = (0..n_levels)
        .map(|l| {
            (0..times.len())
                .map(|j| {
                    let t = injected[0][j].0;
                    let mean = Field::from_fn(fine_grid, |k| {
                        let mut acc = crate::state::CompVec::zeros(ncomp);
                        for series in injected.iter().take(l + 1) {
                            let s = &series[j].1[k];
                            for c in 0..ncomp {
                                acc[c] += s.comp(c);
                            }
                        }
                        crate::state::ConservedState::from_comps(
                            &acc.scale(1.0 / (l + 1) as f64),
                            injected[0][j].1[k].n_species(),
                            dim,
                        )
                    });
                    (t, mean)
                })
                .collect()
        })
        .collect();

    let reference = injected.last().unwrap();
    let cesaro_reference = cesaro.last().unwrap();

    let variables = snapshot::variable_names(spec.mixture.n_species(), dim);
    let mut rows: Vec<Vec<CesaroRow>> = (0..ncomp).map(|_| Vec::new()).collect();
    for l in 0..n_levels - 1 {
        let e1 = l1_space_time(&injected[l], reference);
        let e2 = l1_space_time(&cesaro[l], cesaro_reference);
        for c in 0..ncomp {
            let (eoc1, eoc2) = match rows[c].last() {
                None => (None, None),
                Some(prev) => (
                    Some(order(prev.e1, e1[c], prev.cells, levels[l])),
                    Some(order(prev.e2, e2[c], prev.cells, levels[l])),
                ),
            };
            rows[c].push(CesaroRow {
                cells: levels[l],
                e1: e1[c],
                eoc1,
                e2: e2[c],
                eoc2,
            });
        }
    }

    let report = CesaroReport { variables, rows };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        coeffs.write_csv(&dir.join("khi_coeffs.csv"))?;
        report.write_csv(&dir.join("report_cesaro.csv"))?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Consistency-residual study.
// ---------------------------------------------------------------------------

pub struct ConsistencyRow {
    pub cells: usize,
    pub h: f64,
    /// Residual per component, ordered as `components`.
    pub residuals: Vec<f64>,
    pub orders: Vec<Option<f64>>,
}

pub struct ConsistencyReport {
    pub components: Vec<Component>,
    pub rows: Vec<ConsistencyRow>,
}

impl ConsistencyReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header = vec!["N".to_string(), "h".to_string()];
        for c in &self.components {
            header.push(format!("residual_{}", c.label()));
            header.push(format!("order_{}", c.label()));
        }
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let mut line = vec![row.cells.to_string(), format!("{:.6e}", row.h)];
            for (r, o) in row.residuals.iter().zip(&row.orders) {
                line.push(format!("{r:.6e}"));
                line.push(o.map_or(String::new(), |v| format!("{v:.3}")));
            }
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Consistency study: per mesh, run the case keeping every `stride`-th
/// step, then assemble the time-integrated residual against the named test
/// function for every component including the entropy.
pub fn run_consistency(spec: &RunSpec, out_dir: Option<&Path>) -> Result<ConsistencyReport> {
    let study = spec
        .study
        .as_ref()
        .ok_or_else(|| Error::Invalid("consistency needs a [study] section".into()))?;
    let test = TestFunction::from_name(&study.test_function)?;
    let dim = spec.grid.dim();
    let n = spec.mixture.n_species();
    let mut components: Vec<Component> = (0..n).map(Component::Species).collect();
    components.push(Component::Momentum);
    components.push(Component::Entropy);

    let mut rows: Vec<ConsistencyRow> = Vec::new();
    for &cells in &study.meshes {
        let grid = Grid::new(&vec![cells; dim], spec.grid.box_lo(), spec.grid.box_hi())?;
        let run = execute_on_grid(spec, &grid, None, true)?;
        let snaps: Vec<(f64, ConservedField)> = run
            .output
            .snapshots
            .iter()
            .enumerate()
            .filter(|(i, _)| i % study.snapshot_stride == 0 || *i == run.output.snapshots.len() - 1)
            .map(|(_, s)| s.clone())
            .collect();
        let residuals = diagnostics::consistency_residuals(
            &snaps,
            &test,
            &components,
            &spec.mixture,
            spec.viscosity,
            spec.quadrature_order,
        )?;
        let orders = match rows.last() {
            None => vec![None; residuals.len()],
            Some(prev) => residuals
                .iter()
                .zip(&prev.residuals)
                .map(|(r, pr)| Some(order(*pr, *r, prev.cells, cells)))
                .collect(),
        };
        rows.push(ConsistencyRow {
            cells,
            h: grid.min_spacing(),
            residuals,
            orders,
        });
    }

    let report = ConsistencyReport { components, rows };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        report.write_csv(&dir.join("consistency.csv"))?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Run-directory diagnosis.
// ---------------------------------------------------------------------------

pub struct DiagnoseCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub struct DiagnoseReport {
    pub checks: Vec<DiagnoseCheck>,
}

impl DiagnoseReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn print(&self) {
        for c in &self.checks {
            println!(
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
    }
}

/// Re-examine a run directory: conservation drift, positivity minima, the
/// minimum-entropy principle, total-entropy monotonicity, and admissibility
/// of the stored snapshots.
pub fn diagnose(run_dir: &Path) -> Result<DiagnoseReport> {
    let series = diagnostics::DiagnosticsTimeSeries::read_csv(&run_dir.join("diagnostics.csv"))?;
    if series.records.is_empty() {
        return Err(Error::Invalid("diagnostics.csv holds no records".into()));
    }
    let mut checks = Vec::new();

    let drift = series.conservation_drift();
    checks.push(DiagnoseCheck {
        name: "conservation".into(),
        passed: drift <= 1e-11,
        detail: format!("max relative drift {drift:.3e} (tolerance 1e-11)"),
    });

    let min_rho = series
        .records
        .iter()
        .map(|r| r.min_density)
        .fold(f64::INFINITY, f64::min);
    let min_p = series
        .records
        .iter()
        .map(|r| r.min_pressure)
        .fold(f64::INFINITY, f64::min);
    let min_t = series
        .records
        .iter()
        .map(|r| r.min_temperature)
        .fold(f64::INFINITY, f64::min);
    checks.push(DiagnoseCheck {
        name: "positivity".into(),
        passed: min_rho > 0.0 && min_p > 0.0 && min_t > 0.0,
        detail: format!("min rho_i {min_rho:.3e}, min p {min_p:.3e}, min T {min_t:.3e}"),
    });

    let s0 = series.records[0].min_entropy;
    let min_s = series
        .records
        .iter()
        .map(|r| r.min_entropy)
        .fold(f64::INFINITY, f64::min);
    checks.push(DiagnoseCheck {
        name: "minimum entropy principle".into(),
        passed: min_s >= s0 - 1e-8,
        detail: format!("min s {min_s:.12e} vs initial {s0:.12e}"),
    });

    let mut eta_ok = true;
    let mut worst_jump = 0.0f64;
    for pair in series.records.windows(2) {
        let jump = pair[1].total_eta - pair[0].total_eta;
        let tol = 1e-10 * pair[0].total_eta.abs().max(1.0);
        if jump > tol {
            eta_ok = false;
        }
        worst_jump = worst_jump.max(jump);
    }
    checks.push(DiagnoseCheck {
        name: "total entropy monotone".into(),
        passed: eta_ok,
        detail: format!("largest increase {worst_jump:.3e}"),
    });

    let residual = series
        .records
        .iter()
        .map(|r| r.max_entropy_residual)
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if residual.is_finite() {
        checks.push(DiagnoseCheck {
            name: "cell entropy residual".into(),
            passed: residual <= 1e-10,
            detail: format!("normalized max {residual:.3e} (tolerance 1e-10)"),
        });
    }

    // Admissibility of stored snapshots, when a mixture can be recovered.
    let metadata = read_metadata(run_dir).unwrap_or_default();
    if let Some((_, line)) = metadata.iter().find(|(k, _)| k == "mixture") {
        if let Some(mix) = parse_mixture_line(line) {
            let mut bad = 0usize;
            let mut scanned = 0usize;
            for entry in std::fs::read_dir(run_dir)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "snap") {
                    let (field, _) = snapshot::read_snapshot(&path)?;
                    scanned += 1;
                    for state in field.iter() {
                        if thermo::admissibility_violation(state, &mix).is_some() {
                            bad += 1;
                            break;
                        }
                    }
                }
            }
            checks.push(DiagnoseCheck {
                name: "snapshot admissibility".into(),
                passed: bad == 0,
                detail: format!("{scanned} snapshots scanned, {bad} inadmissible"),
            });
        }
    }

    Ok(DiagnoseReport { checks })
}

fn parse_mixture_line(line: &str) -> Option<crate::thermo::GasMixture> {
    let mut species = Vec::new();
    for clause in line.split('|') {
        let mut gamma = None;
        let mut r = None;
        let mut e0 = 0.0;
        for part in clause.split_whitespace() {
            let (k, v) = part.split_once(':')?;
            let v: f64 = v.parse().ok()?;
            match k {
                "gamma" => gamma = Some(v),
                "r" => r = Some(v),
                "e0" => e0 = v,
                _ => return None,
            }
        }
        species.push(crate::thermo::SpeciesParams::from_gamma_r(gamma?, r?, e0).ok()?);
    }
    crate::thermo::GasMixture::new(species).ok()
}

/// Default artifact directory for a config file path.
pub fn default_output_dir(config_path: &Path, hash: u64) -> PathBuf {
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "run".to_string());
    PathBuf::from("runs").join(format!("{stem}-{hash:08x}", hash = hash & 0xffff_ffff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;

    const UNIFORM_1D: &str = "\
[mixture]
species = 2
species1.gamma = 1.4
species1.r = 1.0
species2.gamma = 1.4
species2.r = 1.0

[grid]
dim = 1
cells = 16
box = 0 1

[case]
type = uniform
rho = 0.5 0.5
velocity = 0.1
pressure = 1.0

[solver]
cfl = 0.5
t_end = 0.05
snapshot_times = 0.0 0.05
";

    #[test]
    fn uniform_run_is_flat() {
        let spec = config::parse(UNIFORM_1D).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let run = run_single(&spec, dir.path()).unwrap();
        // All diagnostics flat.
        let first = &run.output.series.records[0];
        for r in &run.output.series.records {
            assert!((r.total_eta - first.total_eta).abs() < 1e-12 * first.total_eta.abs().max(1.0));
            assert!(r.bv_l1.abs() < 1e-13);
        }
        assert!(run.output.series.conservation_drift() < 1e-13);
        // Artifacts exist.
        assert!(dir.path().join("diagnostics.csv").is_file());
        assert!(dir.path().join("final.snap").is_file());
        assert!(dir.path().join("metadata.txt").is_file());
        assert!(dir.path().join("state_t0.000000.snap").is_file());

        // And the directory diagnoses clean.
        let report = diagnose(dir.path()).unwrap();
        assert!(report.all_passed());
    }

    #[test]
    fn injection_is_piecewise_constant() {
        let mix = crate::thermo::GasMixture::two_equal(1.4, 1.0).unwrap();
        let coarse_grid = Grid::square(2, 4, 0.0, 1.0).unwrap();
        let fine_grid = Grid::square(2, 8, 0.0, 1.0).unwrap();
        let mut rng = crate::rng::SplitMix64::new(3);
        let coarse = Field::from_fn(coarse_grid, |_| {
            let prim = thermo::primitive_from_rho_u_p(
                &[rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)],
                &[0.0, 0.0],
                1.0,
                &mix,
            )
            .unwrap();
            thermo::to_conserved(&prim, &mix)
        });
        let fine = inject(&coarse, &fine_grid);
        for k in 0..fine_grid.n_cells() {
            let idx = fine_grid.unflat(k);
            let cidx = [idx[0] / 2, idx[1] / 2];
            assert_eq!(fine[k], coarse[coarse_grid.flat(&cidx)]);
        }
    }

    #[test]
    fn cesaro_identical_levels_give_zero() {
        // A hierarchy of identical meshes: E1 = E2 = 0.
        let mix = crate::thermo::GasMixture::two_equal(1.4, 1.0).unwrap();
        let grid = Grid::square(2, 8, 0.0, 1.0).unwrap();
        let mut rng = crate::rng::SplitMix64::new(5);
        let series: Vec<(f64, ConservedField)> = (0..3)
            .map(|i| {
                let f = Field::from_fn(grid, |_| {
                    let prim = thermo::primitive_from_rho_u_p(
                        &[rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)],
                        &[0.1, 0.0],
                        1.0,
                        &mix,
                    )
                    .unwrap();
                    thermo::to_conserved(&prim, &mix)
                });
                (0.1 * i as f64, f)
            })
            .collect();
        let zero = l1_space_time(&series, &series);
        for v in zero {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn single_mesh_study_has_empty_order_column() {
        let text = "\
[mixture]
species = 2
species1.gamma = 1.4
species1.r = 0.4
species2.gamma = 1.4
species2.r = 0.4

[grid]
dim = 2
cells = 8
box = -1 1

[case]
type = manufactured

[solver]
cfl = 0.5
t_end = 0.05

[study]
meshes = 8
";
        let spec = config::parse(text).unwrap();
        let report = run_eoc(&spec, None).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].eoc.iter().all(Option::is_none));
        assert!(report.rows[0].errors.iter().all(|e| *e > 0.0));
        assert!(report.mean_eoc.iter().all(|m| *m == 0.0));
    }

    #[test]
    fn mixture_guard_rejects_mismatch() {
        let a = vec![("mixture".to_string(), "gamma:1.4 r:0.4".to_string())];
        let b = vec![("mixture".to_string(), "gamma:1.6 r:0.4".to_string())];
        assert!(check_same_mixture(&[a.clone(), a.clone()]).is_ok());
        assert!(check_same_mixture(&[a, b]).is_err());
    }
}
