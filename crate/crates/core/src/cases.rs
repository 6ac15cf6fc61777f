//! Built-in test problems: a smooth manufactured solution with its source
//! term, the layered Kelvin-Helmholtz shear setup with seeded random
//! interface perturbations, and uniform states.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::flux;
use crate::mesh::{project_state, ConservedField, Field, Grid};
use crate::rng::SplitMix64;
use crate::solver::SourceTerm;
use crate::state::{CompVec, ConservedState};
use crate::thermo::{self, GasMixture};

// ---------------------------------------------------------------------------
// Manufactured smooth solution.
// ---------------------------------------------------------------------------

/// Total-energy profile of the manufactured solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyProfile {
    /// `E = rho^2`; keeps the pressure positive for densities near 2.
    RhoSquared,
    /// `E = rho`; with unit velocity in 2D this leaves zero internal
    /// energy, so construction fails the admissibility probe.
    Rho,
}

/// Exact fields: `rho(t, x) = c + A sin(pi (x_1 + .. + x_dim - t))`,
/// unit velocity in every direction, fixed composition fractions, and the
/// chosen energy profile.
#[derive(Clone, Debug)]
pub struct ManufacturedSolution {
    background: f64,
    amplitude: f64,
    profile: EnergyProfile,
    fractions: Vec<f64>,
    mix: GasMixture,
    dim: usize,
}

impl ManufacturedSolution {
    pub fn new(
        mix: &GasMixture,
        dim: usize,
        background: f64,
        amplitude: f64,
        profile: EnergyProfile,
        fractions: Option<Vec<f64>>,
    ) -> Result<Self> {
        let fractions = match fractions {
            Some(f) => f,
            None => {
                if mix.n_species() == 2 {
                    vec![1.0 / 3.0, 2.0 / 3.0]
                } else {
                    vec![1.0 / mix.n_species() as f64; mix.n_species()]
                }
            }
        };
        if fractions.len() != mix.n_species() {
            return Err(Error::Invalid(
                "one composition fraction per species required".into(),
            ));
        }
        if fractions.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::Invalid(
                "composition fractions must be positive".into(),
            ));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "composition fractions sum to {sum}, not 1"
            )));
        }
        if !(amplitude.abs() < background) {
            return Err(Error::Invalid(
                "amplitude must be smaller than the background density".into(),
            ));
        }
        let ms = ManufacturedSolution {
            background,
            amplitude,
            profile,
            fractions,
            mix: mix.clone(),
            dim,
        };
        // Admissibility probe over the full density range (the solution is a
        // traveling profile, so the set of states does not depend on t).
        for k in 0..=200 {
            let rho = background - amplitude.abs() + 2.0 * amplitude.abs() * (k as f64 / 200.0);
            let state = ms.state_of_density(rho);
            if let Some(reason) = thermo::admissibility_violation(&state, mix) {
                return Err(Error::Invalid(format!(
                    "manufactured solution is inadmissible at rho = {rho}: {reason}"
                )));
            }
        }
        Ok(ms)
    }

    /// The reference parameters: two species, `gamma = 1.4`, `r = 0.4`,
    /// `c = 2`, `A = 0.1`, `E = rho^2`.
    pub fn reference(dim: usize) -> Result<Self> {
        let mix = GasMixture::two_equal(1.4, 0.4)?;
        Self::new(&mix, dim, 2.0, 0.1, EnergyProfile::RhoSquared, None)
    }

    pub fn mixture(&self) -> &GasMixture {
        &self.mix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether this is the reference two-species (gamma, r) = (1.4, 0.4)
    /// configuration the error tables assume.
    pub fn is_reference_configuration(&self) -> bool {
        self.mix.n_species() == 2
            && self
                .mix
                .species()
                .iter()
                .all(|s| (s.gamma() - 1.4).abs() < 1e-12 && (s.r() - 0.4).abs() < 1e-12)
    }

    #[inline]
    fn density_at(&self, t: f64, x: &[f64]) -> f64 {
        let phase: f64 = x.iter().sum::<f64>() - t;
        self.background + self.amplitude * (std::f64::consts::PI * phase).sin()
    }

    fn state_of_density(&self, rho: f64) -> ConservedState {
        let rho_i: Vec<f64> = self.fractions.iter().map(|f| f * rho).collect();
        let m = vec![rho; self.dim];
        let e = match self.profile {
            EnergyProfile::RhoSquared => rho * rho,
            EnergyProfile::Rho => rho,
        };
        ConservedState::new(&rho_i, &m, e)
    }

    /// Exact state at `(t, x)`.
    pub fn exact_state(&self, t: f64, x: &[f64]) -> ConservedState {
        self.state_of_density(self.density_at(t, x))
    }

    /// Mean gas constant and heat capacity of the (fixed) composition.
    fn mean_coeffs(&self) -> (f64, f64, f64) {
        let mut rbar = 0.0;
        let mut cvbar = 0.0;
        let mut e0bar = 0.0;
        for (f, sp) in self.fractions.iter().zip(self.mix.species()) {
            rbar += f * sp.r();
            cvbar += f * sp.c_v();
            e0bar += f * sp.e0();
        }
        (rbar, cvbar, e0bar)
    }

    /// Source term `q = dU/dt + div f(U)` of the exact solution, derived in
    /// closed form and verified against a finite-difference evaluation of
    /// the left-hand side at construction.
    pub fn source(&self) -> Result<ManufacturedSource> {
        let source = ManufacturedSource { ms: self.clone() };
        source.verify()?;
        Ok(source)
    }
}

/// Closed-form source rates of the manufactured solution.
pub struct ManufacturedSource {
    ms: ManufacturedSolution,
}

impl ManufacturedSource {
    /// Verify `q = dU/dt + div f(U)` by central differences at 100
    /// deterministic sample points; an algebra mistake fails loudly here.
    fn verify(&self) -> Result<()> {
        let ms = &self.ms;
        let mut rng = SplitMix64::new(0x5eed_cafe);
        let fd = 1e-5;
        for _ in 0..100 {
            let t = rng.uniform(0.0, 2.0);
            let x: Vec<f64> = (0..ms.dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let q = self.eval(t, &x);
            let ncomp = q.len();

            let mut lhs = CompVec::zeros(ncomp);
            let up = ms.exact_state(t + fd, &x);
            let dn = ms.exact_state(t - fd, &x);
            for k in 0..ncomp {
                lhs[k] = (up.comp(k) - dn.comp(k)) / (2.0 * fd);
            }
            for d in 0..ms.dim {
                let mut normal = vec![0.0; ms.dim];
                normal[d] = 1.0;
                let mut xp = x.clone();
                xp[d] += fd;
                let mut xm = x.clone();
                xm[d] -= fd;
                let fp = flux::physical_flux(&ms.exact_state(t, &xp), &normal, &ms.mix)?;
                let fm = flux::physical_flux(&ms.exact_state(t, &xm), &normal, &ms.mix)?;
                for k in 0..ncomp {
                    lhs[k] += (fp[k] - fm[k]) / (2.0 * fd);
                }
            }
            for k in 0..ncomp {
                let denom = lhs[k].abs().max(1.0);
                if (lhs[k] - q[k]).abs() > 1e-6 * denom {
                    return Err(Error::Invalid(format!(
                        "manufactured source mismatch in component {k} at t = {t}, x = {x:?}: \
                         pde residual {} vs closed form {}",
                        lhs[k], q[k]
                    )));
                }
            }
        }
        Ok(())
    }
}

impl SourceTerm for ManufacturedSource {
    fn eval(&self, t: f64, x: &[f64]) -> CompVec {
        let ms = &self.ms;
        let d = ms.dim as f64;
        let pi = std::f64::consts::PI;
        let phase: f64 = x.iter().sum::<f64>() - t;
        let rho = ms.background + ms.amplitude * (pi * phase).sin();
        let rho_x = ms.amplitude * pi * (pi * phase).cos();
        let (rbar, cvbar, e0bar) = ms.mean_coeffs();

        // Pressure as a function of rho for the fixed composition and unit
        // velocity: p = (rbar/cvbar) (E - rho d/2 - rho e0bar).
        let (p_prime, q_e) = match ms.profile {
            EnergyProfile::RhoSquared => {
                let p_prime = rbar / cvbar * (2.0 * rho - 0.5 * d - e0bar);
                let q_e = 2.0 * (d - 1.0) * rho * rho_x + d * p_prime * rho_x;
                (p_prime, q_e)
            }
            EnergyProfile::Rho => {
                let p_prime = rbar / cvbar * (1.0 - 0.5 * d - e0bar);
                let q_e = (d - 1.0) * rho_x + d * p_prime * rho_x;
                (p_prime, q_e)
            }
        };

        let n = ms.mix.n_species();
        let mut q = CompVec::zeros(n + ms.dim + 1);
        for (i, f) in ms.fractions.iter().enumerate() {
            q[i] = f * (d - 1.0) * rho_x;
        }
        for dd in 0..ms.dim {
            q[n + dd] = (d - 1.0) * rho_x + p_prime * rho_x;
        }
        q[n + ms.dim] = q_e;
        q
    }
}

fn check_periodic_box(ms: &ManufacturedSolution, grid: &Grid) -> Result<()> {
    if grid.dim() != ms.dim {
        return Err(Error::Invalid(format!(
            "grid dimension {} does not match the case dimension {}",
            grid.dim(),
            ms.dim
        )));
    }
    for d in 0..grid.dim() {
        let len = grid.box_hi()[d] - grid.box_lo()[d];
        if ((len / 2.0) - (len / 2.0).round()).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "manufactured solution has period 2; box length {len} in dimension {d} \
                 breaks periodicity"
            )));
        }
    }
    Ok(())
}

/// Initial data at `t = 0`, by cell-center point evaluation (default) or by
/// quadrature-projected cell averages.
pub fn manufactured_initial(
    ms: &ManufacturedSolution,
    grid: &Grid,
    project: bool,
    quadrature_order: usize,
) -> Result<ConservedField> {
    check_periodic_box(ms, grid)?;
    let field = if project {
        project_state(&|x: &[f64]| ms.exact_state(0.0, x), grid, quadrature_order)
    } else {
        Field::from_fn(*grid, |k| {
            let x = grid.cell_center(k);
            ms.exact_state(0.0, &x[..grid.dim()])
        })
    };
    for (k, state) in field.iter().enumerate() {
        if let Some(reason) = thermo::admissibility_violation(state, &ms.mix) {
            return Err(Error::Inadmissible(reason).locate(
                k,
                grid.unflat(k)[..grid.dim()].to_vec(),
                0.0,
                "initial data",
            ));
        }
    }
    Ok(field)
}

/// Per-variable discrete L2 errors against cell-center exact values:
/// `sqrt( sum_K |K| (U_K - Uex(x_K, t))^2 )`, one entry per conserved
/// variable.
pub fn exact_error(field: &ConservedField, ms: &ManufacturedSolution, t: f64) -> Vec<f64> {
    let grid = field.grid();
    let vol = grid.cell_volume();
    let ncomp = field[0].ncomp();
    let mut acc = vec![0.0; ncomp];
    for k in 0..field.len() {
        let x = grid.cell_center(k);
        let exact = ms.exact_state(t, &x[..grid.dim()]);
        for c in 0..ncomp {
            let d = field[k].comp(c) - exact.comp(c);
            acc[c] += vol * d * d;
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

// ---------------------------------------------------------------------------
// Kelvin-Helmholtz shear layers.
// ---------------------------------------------------------------------------

/// Layer table `(rho_1, rho_2, u_1)` from bottom to top; `u_2 = 0` and the
/// pressure is uniform.
pub const KHI_LAYERS: [(f64, f64, f64); 4] = [
    (0.8, 0.2, -0.5),
    (0.2, 1.8, 0.5),
    (1.8, 0.2, -0.5),
    (0.2, 0.8, 0.5),
];

#[derive(Clone, Debug)]
pub struct KhiConfig {
    pub seed: u64,
    /// Perturbation amplitude of the interface curves.
    pub epsilon: f64,
    /// Nominal interface heights.
    pub interface_positions: [f64; 3],
    /// Uniform pressure.
    pub pressure: f64,
}

impl Default for KhiConfig {
    fn default() -> Self {
        KhiConfig {
            seed: 1,
            epsilon: 0.01,
            interface_positions: [0.25, 0.5, 0.75],
            pressure: 2.5,
        }
    }
}

pub const KHI_MODES: usize = 10;

/// Fourier coefficients of the three interface curves. Draw order for a
/// seed: for each interface j = 0, 1, 2, first the ten raw amplitudes
/// (uniform in [0,1), then normalized so they sum to 1), then the ten
/// phases (uniform in [0, 2 pi)).
#[derive(Clone, Debug, PartialEq)]
pub struct KhiCoefficients {
    pub a: [[f64; KHI_MODES]; 3],
    pub b: [[f64; KHI_MODES]; 3],
}

impl KhiCoefficients {
    pub fn draw(seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut a = [[0.0; KHI_MODES]; 3];
        let mut b = [[0.0; KHI_MODES]; 3];
        for j in 0..3 {
            let mut sum = 0.0;
            for i in 0..KHI_MODES {
                a[j][i] = rng.next_f64();
                sum += a[j][i];
            }
            for i in 0..KHI_MODES {
                a[j][i] /= sum;
            }
            for i in 0..KHI_MODES {
                b[j][i] = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
            }
        }
        KhiCoefficients { a, b }
    }

    /// Interface height `I_j(x1) = J_j + eps sum_i a cos(b + 2 pi i x1)`.
    pub fn interface_height(&self, cfg: &KhiConfig, j: usize, x1: f64) -> f64 {
        let mut height = cfg.interface_positions[j];
        for i in 0..KHI_MODES {
            height += cfg.epsilon
                * self.a[j][i]
                * (self.b[j][i] + 2.0 * std::f64::consts::PI * (i + 1) as f64 * x1).cos();
        }
        height
    }

    /// Dump as CSV with columns `j,i,a,b` (1-based indices).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "j,i,a,b")?;
        for j in 0..3 {
            for i in 0..KHI_MODES {
                writeln!(
                    w,
                    "{},{},{:.17e},{:.17e}",
                    j + 1,
                    i + 1,
                    self.a[j][i],
                    self.b[j][i]
                )?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut coeffs = KhiCoefficients {
            a: [[0.0; KHI_MODES]; 3],
            b: [[0.0; KHI_MODES]; 3],
        };
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::Invalid(format!(
                    "bad coefficient row at line {}",
                    lineno + 1
                )));
            }
            let j: usize = parts[0]
                .parse::<usize>()
                .map_err(|e| Error::Invalid(format!("bad j: {e}")))?;
            let i: usize = parts[1]
                .parse::<usize>()
                .map_err(|e| Error::Invalid(format!("bad i: {e}")))?;
            coeffs.a[j - 1][i - 1] = parts[2]
                .parse()
                .map_err(|e| Error::Invalid(format!("bad a: {e}")))?;
            coeffs.b[j - 1][i - 1] = parts[3]
                .parse()
                .map_err(|e| Error::Invalid(format!("bad b: {e}")))?;
        }
        Ok(coeffs)
    }
}

/// Layered shear initial data on a 2D grid: per cell center, evaluate the
/// three interface curves at `x1` and pick the layer by the `<=`
/// conventions of the layer table.
pub fn khi_initial_with_coefficients(
    cfg: &KhiConfig,
    coeffs: &KhiCoefficients,
    grid: &Grid,
    mix: &GasMixture,
) -> Result<ConservedField> {
    if grid.dim() != 2 {
        return Err(Error::Invalid(format!(
            "the shear setup is two-dimensional; got a {}D grid",
            grid.dim()
        )));
    }
    if mix.n_species() != 2 {
        return Err(Error::Invalid(
            "the shear setup uses exactly two species".into(),
        ));
    }
    let field = Field::from_fn(*grid, |k| {
        let x = grid.cell_center(k);
        let (x1, x2) = (x[0], x[1]);
        let layer = if x2 <= coeffs.interface_height(cfg, 0, x1) {
            KHI_LAYERS[0]
        } else if x2 <= coeffs.interface_height(cfg, 1, x1) {
            KHI_LAYERS[1]
        } else if x2 <= coeffs.interface_height(cfg, 2, x1) {
            KHI_LAYERS[2]
        } else {
            KHI_LAYERS[3]
        };
        let prim =
            thermo::primitive_from_rho_u_p(&[layer.0, layer.1], &[layer.2, 0.0], cfg.pressure, mix)
                .expect("layer states are admissible");
        thermo::to_conserved(&prim, mix)
    });
    Ok(field)
}

/// Draw the coefficients for `cfg.seed` and build the initial data.
pub fn khi_initial(
    cfg: &KhiConfig,
    grid: &Grid,
    mix: &GasMixture,
) -> Result<(ConservedField, KhiCoefficients)> {
    let coeffs = KhiCoefficients::draw(cfg.seed);
    let field = khi_initial_with_coefficients(cfg, &coeffs, grid, mix)?;
    Ok((field, coeffs))
}

// ---------------------------------------------------------------------------
// Uniform state.
// ---------------------------------------------------------------------------

pub fn uniform_initial(
    rho: &[f64],
    vel: &[f64],
    pressure: f64,
    grid: &Grid,
    mix: &GasMixture,
) -> Result<ConservedField> {
    if vel.len() != grid.dim() {
        return Err(Error::Invalid(
            "velocity length must match the grid dimension".into(),
        ));
    }
    let prim = thermo::primitive_from_rho_u_p(rho, vel, pressure, mix)?;
    let state = thermo::to_conserved(&prim, mix);
    if let Some(reason) = thermo::admissibility_violation(&state, mix) {
        return Err(Error::Inadmissible(reason));
    }
    Ok(Field::fill(*grid, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured_reference_values() {
        let ms = ManufacturedSolution::reference(2).unwrap();
        // At x1 + x2 = 0, t = 0: rho = 2, rho_1 = 2/3, rho_2 = 4/3, m = (2, 2).
        let u = ms.exact_state(0.0, &[0.5, -0.5]);
        assert!((u.density() - 2.0).abs() < 1e-15);
        assert!((u.partial_densities()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((u.partial_densities()[1] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(u.momentum(), &[2.0, 2.0]);
        // E = rho^2 profile: internal energy 2, p = 0.4 * 2 = 0.8.
        assert!((u.total_energy() - 4.0).abs() < 1e-15);
        let p = thermo::pressure(&u, ms.mixture()).unwrap();
        assert!((p - 0.8).abs() < 1e-13);
    }

    #[test]
    fn manufactured_density_extremes() {
        let ms = ManufacturedSolution::reference(2).unwrap();
        let mut rng = SplitMix64::new(4);
        for _ in 0..1000 {
            let x = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
            let t = rng.uniform(0.0, 3.0);
            let rho = ms.exact_state(t, &x).density();
            assert!((1.9..=2.1).contains(&rho));
        }
    }

    #[test]
    fn paper_energy_profile_is_inadmissible_in_2d() {
        let mix = GasMixture::two_equal(1.4, 0.4).unwrap();
        let err = ManufacturedSolution::new(&mix, 2, 2.0, 0.1, EnergyProfile::Rho, None);
        assert!(err.is_err());
        // In 1D the same profile carries positive internal energy.
        assert!(ManufacturedSolution::new(&mix, 1, 2.0, 0.1, EnergyProfile::Rho, None).is_ok());
    }

    #[test]
    fn source_vanishes_for_constant_solution() {
        let mix = GasMixture::two_equal(1.4, 0.4).unwrap();
        let ms =
            ManufacturedSolution::new(&mix, 2, 2.0, 0.0, EnergyProfile::RhoSquared, None).unwrap();
        let source = ms.source().unwrap();
        let q = source.eval(0.3, &[0.2, -0.7]);
        for k in 0..q.len() {
            assert_eq!(q[k], 0.0);
        }
    }

    #[test]
    fn source_species_proportions() {
        let ms = ManufacturedSolution::reference(2).unwrap();
        let source = ms.source().unwrap();
        let mut rng = SplitMix64::new(6);
        for _ in 0..100 {
            let q = source.eval(
                rng.uniform(0.0, 2.0),
                &[rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)],
            );
            if q[1].abs() > 1e-14 {
                assert!((q[0] / q[1] - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn source_passes_fd_verification() {
        // 2D and 1D, both profiles where admissible.
        ManufacturedSolution::reference(2)
            .unwrap()
            .source()
            .unwrap();
        ManufacturedSolution::reference(1)
            .unwrap()
            .source()
            .unwrap();
        let mix = GasMixture::two_equal(1.4, 0.4).unwrap();
        ManufacturedSolution::new(&mix, 1, 2.0, 0.1, EnergyProfile::Rho, None)
            .unwrap()
            .source()
            .unwrap();
    }

    #[test]
    fn initial_data_box_must_be_periodic() {
        let ms = ManufacturedSolution::reference(2).unwrap();
        let bad = Grid::square(2, 8, 0.0, 1.0).unwrap();
        assert!(manufactured_initial(&ms, &bad, false, 3).is_err());
        let good = Grid::square(2, 8, -1.0, 1.0).unwrap();
        assert!(manufactured_initial(&ms, &good, false, 3).is_ok());
    }

    #[test]
    fn exact_error_zero_on_exact_values() {
        let ms = ManufacturedSolution::reference(2).unwrap();
        let grid = Grid::square(2, 12, -1.0, 1.0).unwrap();
        let field = manufactured_initial(&ms, &grid, false, 3).unwrap();
        for e in exact_error(&field, &ms, 0.0) {
            assert!(e.abs() < 1e-14);
        }
    }

    #[test]
    fn global_lambda_on_manufactured_field() {
        // Brute-force scan: lambda = max over cells of (sqrt(2) + c(rho)).
        let ms = ManufacturedSolution::reference(2).unwrap();
        let grid = Grid::square(2, 24, -1.0, 1.0).unwrap();
        let field = manufactured_initial(&ms, &grid, false, 3).unwrap();
        let lambda = flux::global_lambda(&field, ms.mixture()).unwrap();
        let mut oracle = 0.0f64;
        for k in 0..grid.n_cells() {
            let x = grid.cell_center(k);
            let rho = ms.exact_state(0.0, &x[..2]).density();
            // p = 0.4 (rho^2 - rho) for the reference parameters.
            let p = 0.4 * (rho * rho - rho);
            let c = (1.4 * p / rho).sqrt();
            oracle = oracle.max(2.0f64.sqrt() + c);
        }
        assert!(
            (lambda - oracle).abs() <= 1e-12 * oracle,
            "{lambda} vs {oracle}"
        );
    }

    #[test]
    fn khi_coefficients_normalized_and_reproducible() {
        let c1 = KhiCoefficients::draw(42);
        let c2 = KhiCoefficients::draw(42);
        assert_eq!(c1, c2);
        for j in 0..3 {
            let sum: f64 = c1.a[j].iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            for i in 0..KHI_MODES {
                assert!((0.0..2.0 * std::f64::consts::PI).contains(&c1.b[j][i]));
            }
        }
        let c3 = KhiCoefficients::draw(43);
        assert_ne!(c1, c3);
    }

    #[test]
    fn khi_coefficients_csv_roundtrip() {
        let c = KhiCoefficients::draw(7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("khi_coeffs.csv");
        c.write_csv(&path).unwrap();
        let back = KhiCoefficients::read_csv(&path).unwrap();
        for j in 0..3 {
            for i in 0..KHI_MODES {
                assert_eq!(c.a[j][i], back.a[j][i]);
                assert_eq!(c.b[j][i], back.b[j][i]);
            }
        }
    }

    #[test]
    fn khi_layers_with_flat_interfaces() {
        let mix = GasMixture::two_equal(1.4, 1.0).unwrap();
        let grid = Grid::square(2, 64, 0.0, 1.0).unwrap();
        let cfg = KhiConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        let (field, _) = khi_initial(&cfg, &grid, &mix).unwrap();
        // Cell at (0.5, 0.1): bottom layer.
        let k = grid.flat(&[32, 6]);
        let state = &field[k];
        assert!((state.partial_densities()[0] - 0.8).abs() < 1e-15);
        assert!((state.partial_densities()[1] - 0.2).abs() < 1e-15);
        let u = state.velocity();
        assert!((u[0] + 0.5).abs() < 1e-14);
        assert!(u[1].abs() < 1e-15);

        // Species-1 mass: analytic layer integral
        // 0.8/4 + 0.2/4 + 1.8/4 + 0.2/4 = 0.75, exact for flat interfaces
        // aligned with the mesh.
        let mass: f64 = field
            .iter()
            .map(|s| s.partial_densities()[0] * grid.cell_volume())
            .sum();
        assert!((mass - 0.75).abs() < 1e-13, "mass = {mass}");
    }

    #[test]
    fn khi_pressure_balance() {
        let mix = GasMixture::two_equal(1.4, 1.0).unwrap();
        let grid = Grid::square(2, 32, 0.0, 1.0).unwrap();
        let (field, _) = khi_initial(&KhiConfig::default(), &grid, &mix).unwrap();
        for state in field.iter() {
            let p = thermo::pressure(state, &mix).unwrap();
            assert!((p - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn khi_same_seed_same_field() {
        let mix = GasMixture::two_equal(1.4, 1.0).unwrap();
        let grid = Grid::square(2, 16, 0.0, 1.0).unwrap();
        let (f1, _) = khi_initial(&KhiConfig::default(), &grid, &mix).unwrap();
        let (f2, _) = khi_initial(&KhiConfig::default(), &grid, &mix).unwrap();
        for k in 0..f1.len() {
            assert_eq!(f1[k], f2[k]);
        }
    }

    #[test]
    fn khi_requires_2d() {
        let mix = GasMixture::two_equal(1.4, 1.0).unwrap();
        let grid = Grid::square(1, 16, 0.0, 1.0).unwrap();
        assert!(khi_initial(&KhiConfig::default(), &grid, &mix).is_err());
    }
}
