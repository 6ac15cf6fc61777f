//! Mixture thermodynamics for an ideal multi-species gas with constant heats.
//!
//! Conversions between conserved, primitive and entropy representations,
//! the mixture entropy pair `(eta, F) = (-rho s, -rho s u)`, the entropy
//! variables `V = grad_U eta` and the entropy potential `psi = V^T f - F`.
//!
//! All functions are pure; none of them applies floors or clamping. A state
//! is admissible iff every partial density and the recovered temperature are
//! strictly positive, and a violation surfaces as an error rather than being
//! repaired.

use crate::error::{Error, Inadmissible, Result};
use crate::state::{CompVec, ConservedState, PrimitiveState, MAX_DIM, MAX_SPECIES};

/// Ideal-gas parameters of one species. `r = (gamma - 1) c_v` and
/// `c_p = gamma c_v` are maintained as derived quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeciesParams {
    gamma: f64,
    c_v: f64,
    r: f64,
    e0: f64,
}

impl SpeciesParams {
    /// Build from the heat-capacity ratio and the specific heat at constant volume.
    pub fn new(gamma: f64, c_v: f64, e0: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Invalid(format!(
                "gamma = {gamma} must be finite and > 1"
            )));
        }
        if !(c_v > 0.0) || !c_v.is_finite() {
            return Err(Error::Invalid(format!(
                "c_v = {c_v} must be finite and > 0"
            )));
        }
        Ok(SpeciesParams {
            gamma,
            c_v,
            r: (gamma - 1.0) * c_v,
            e0,
        })
    }

    /// Build from the heat-capacity ratio and the specific gas constant,
    /// the pair the test problems specify directly.
    pub fn from_gamma_r(gamma: f64, r: f64, e0: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Invalid(format!(
                "gamma = {gamma} must be finite and > 1"
            )));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Invalid(format!("r = {r} must be finite and > 0")));
        }
        Self::new(gamma, r / (gamma - 1.0), e0)
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn c_v(&self) -> f64 {
        self.c_v
    }

    #[inline]
    pub fn c_p(&self) -> f64 {
        self.gamma * self.c_v
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn e0(&self) -> f64 {
        self.e0
    }
}

/// An ordered collection of species parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GasMixture {
    species: Vec<SpeciesParams>,
}

impl GasMixture {
    pub fn new(species: Vec<SpeciesParams>) -> Result<Self> {
        if species.is_empty() {
            return Err(Error::Invalid(
                "a mixture needs at least one species".into(),
            ));
        }
        if species.len() > MAX_SPECIES {
            return Err(Error::Invalid(format!(
                "{} species exceeds the supported maximum {MAX_SPECIES}",
                species.len()
            )));
        }
        Ok(GasMixture { species })
    }

    /// Two species with identical `(gamma, r)`, the configuration used by
    /// the built-in smooth and shear test cases.
    pub fn two_equal(gamma: f64, r: f64) -> Result<Self> {
        let s = SpeciesParams::from_gamma_r(gamma, r, 0.0)?;
        Self::new(vec![s, s])
    }

    pub fn single(gamma: f64, r: f64) -> Result<Self> {
        Self::new(vec![SpeciesParams::from_gamma_r(gamma, r, 0.0)?])
    }

    #[inline]
    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    #[inline]
    pub fn species(&self) -> &[SpeciesParams] {
        &self.species
    }

    pub fn gamma_min(&self) -> f64 {
        self.species
            .iter()
            .map(|s| s.gamma)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn gamma_max(&self) -> f64 {
        self.species.iter().map(|s| s.gamma).fold(0.0, f64::max)
    }
}

fn check_species_count(u: &ConservedState, mix: &GasMixture) {
    debug_assert_eq!(
        u.n_species(),
        mix.n_species(),
        "state and mixture species counts disagree"
    );
}

/// First admissibility violation of a state, if any: a non-positive partial
/// density, or a non-positive recovered temperature.
pub fn admissibility_violation(u: &ConservedState, mix: &GasMixture) -> Option<Inadmissible> {
    check_species_count(u, mix);
    for (i, &rho_i) in u.partial_densities().iter().enumerate() {
        if !(rho_i > 0.0) {
            return Some(Inadmissible::Density {
                species: i,
                value: rho_i,
            });
        }
    }
    let t = temperature_unchecked(u, mix);
    if !(t > 0.0) {
        return Some(Inadmissible::Temperature { value: t });
    }
    None
}

pub fn is_admissible(u: &ConservedState, mix: &GasMixture) -> bool {
    admissibility_violation(u, mix).is_none()
}

fn require_positive_densities(u: &ConservedState, mix: &GasMixture) -> Result<()> {
    check_species_count(u, mix);
    for (i, &rho_i) in u.partial_densities().iter().enumerate() {
        if !(rho_i > 0.0) {
            return Err(Error::Inadmissible(Inadmissible::Density {
                species: i,
                value: rho_i,
            }));
        }
    }
    Ok(())
}

fn require_admissible(u: &ConservedState, mix: &GasMixture) -> Result<()> {
    match admissibility_violation(u, mix) {
        None => Ok(()),
        Some(reason) => Err(Error::Inadmissible(reason)),
    }
}

#[inline]
fn heat_capacity_volumetric(u: &ConservedState, mix: &GasMixture) -> f64 {
    u.partial_densities()
        .iter()
        .zip(mix.species())
        .map(|(&rho_i, sp)| rho_i * sp.c_v)
        .sum()
}

#[inline]
fn reference_energy(u: &ConservedState, mix: &GasMixture) -> f64 {
    u.partial_densities()
        .iter()
        .zip(mix.species())
        .map(|(&rho_i, sp)| rho_i * sp.e0)
        .sum()
}

#[inline]
pub(crate) fn temperature_unchecked(u: &ConservedState, mix: &GasMixture) -> f64 {
    let internal = u.total_energy() - u.kinetic_energy() - reference_energy(u, mix);
    internal / heat_capacity_volumetric(u, mix)
}

/// Temperature recovered from the conserved variables,
/// `T = (E - |m|^2/(2 rho) - sum_i rho_i e0_i) / sum_i rho_i c_vi`.
///
/// Requires positive partial densities; the sign of the result is up to the
/// caller to check.
pub fn temperature_from_conserved(u: &ConservedState, mix: &GasMixture) -> Result<f64> {
    require_positive_densities(u, mix)?;
    Ok(temperature_unchecked(u, mix))
}

/// Pressure `p = sum_i rho_i r_i T`.
pub fn pressure(u: &ConservedState, mix: &GasMixture) -> Result<f64> {
    require_admissible(u, mix)?;
    let t = temperature_unchecked(u, mix);
    Ok(pressure_with(u, mix, t))
}

#[inline]
pub(crate) fn pressure_with(u: &ConservedState, mix: &GasMixture, temperature: f64) -> f64 {
    u.partial_densities()
        .iter()
        .zip(mix.species())
        .map(|(&rho_i, sp)| rho_i * sp.r)
        .sum::<f64>()
        * temperature
}

/// Specific mixture entropy and entropy density,
/// `s = (1/rho) sum_i rho_i (c_vi ln T - r_i ln rho_i)`, `eta = -rho s`.
pub fn mixture_entropy(u: &ConservedState, mix: &GasMixture) -> Result<(f64, f64)> {
    require_admissible(u, mix)?;
    let t = temperature_unchecked(u, mix);
    let ln_t = t.ln();
    let mut rho_s = 0.0;
    for (&rho_i, sp) in u.partial_densities().iter().zip(mix.species()) {
        rho_s += rho_i * (sp.c_v * ln_t - sp.r * rho_i.ln());
    }
    let s = rho_s / u.density();
    Ok((s, -rho_s))
}

/// Entropy density `eta = -rho s`; convenience wrapper around
/// [`mixture_entropy`].
pub fn entropy_density(u: &ConservedState, mix: &GasMixture) -> Result<f64> {
    Ok(mixture_entropy(u, mix)?.1)
}

/// Invert the entropy relation for the temperature:
/// given the partial densities and `rho s` (note the sign: the *physical*
/// entropy density, not `eta = -rho s`),
/// `T = exp( (1/cbar_v) [ s + (1/rho) sum_i rho_i r_i ln rho_i ] )`.
pub fn temperature_from_entropy_density(rho: &[f64], rho_s: f64, mix: &GasMixture) -> Result<f64> {
    if rho.len() != mix.n_species() {
        return Err(Error::Invalid(
            "density slice does not match mixture".into(),
        ));
    }
    let mut total = 0.0;
    for (i, &rho_i) in rho.iter().enumerate() {
        if !(rho_i > 0.0) {
            return Err(Error::Inadmissible(Inadmissible::Density {
                species: i,
                value: rho_i,
            }));
        }
        total += rho_i;
    }
    let mut cbar_v = 0.0;
    let mut r_log = 0.0;
    for (&rho_i, sp) in rho.iter().zip(mix.species()) {
        cbar_v += rho_i * sp.c_v;
        r_log += rho_i * sp.r * rho_i.ln();
    }
    cbar_v /= total;
    Ok(((rho_s / total + r_log / total) / cbar_v).exp())
}

/// Entropy variables `V = grad_U eta`, in the conserved layout:
///
/// `V_{rho_i} = -c_vi ln T + r_i ln rho_i + c_vi + r_i - (|u|^2/2 - e0_i)/T`,
/// `V_m = u / T`, `V_E = -1/T`.
pub fn entropy_variables(u: &ConservedState, mix: &GasMixture) -> Result<CompVec> {
    require_admissible(u, mix)?;
    let t = temperature_unchecked(u, mix);
    let ln_t = t.ln();
    let vel = u.velocity();
    let speed_sq: f64 = vel[..u.dim()].iter().map(|v| v * v).sum();
    let n = u.n_species();
    let mut v = CompVec::zeros(u.ncomp());
    for (i, (&rho_i, sp)) in u.partial_densities().iter().zip(mix.species()).enumerate() {
        v[i] = -sp.c_v * ln_t + sp.r * rho_i.ln() + sp.c_v + sp.r - (0.5 * speed_sq - sp.e0) / t;
    }
    for d in 0..u.dim() {
        v[n + d] = vel[d] / t;
    }
    v[n + u.dim()] = -1.0 / t;
    Ok(v)
}

/// Entropy potential in direction `normal`:
/// `psi = V . (f(U).n) - F(U).n` with `F = -rho s u`.
pub fn entropy_potential(u: &ConservedState, normal: &[f64], mix: &GasMixture) -> Result<f64> {
    let q = entropy_quantities(u, mix)?;
    let mut psi_n = 0.0;
    for d in 0..u.dim() {
        psi_n += q.psi[d] * normal[d];
    }
    Ok(psi_n)
}

/// Everything the entropy analysis touches, evaluated at one state.
#[derive(Clone, Copy, Debug)]
pub struct EntropyQuantities {
    /// Specific mixture entropy.
    pub s: f64,
    /// Mathematical entropy density `eta = -rho s`.
    pub eta: f64,
    /// Entropy variables `V = grad_U eta`.
    pub v: CompVec,
    /// The scalar `-rho s`, so the entropy flux is `F = entropy_flux_coeff * u`.
    pub entropy_flux_coeff: f64,
    /// Entropy potential vector `psi_d = V . f_d(U) - F_d(U)`.
    pub psi: [f64; MAX_DIM],
}

impl EntropyQuantities {
    /// Entropy flux `F(U) . n = eta * (u . n)`.
    pub fn entropy_flux(&self, u: &ConservedState, normal: &[f64]) -> f64 {
        let vel = u.velocity();
        let mut un = 0.0;
        for d in 0..u.dim() {
            un += vel[d] * normal[d];
        }
        self.entropy_flux_coeff * un
    }
}

pub fn entropy_quantities(u: &ConservedState, mix: &GasMixture) -> Result<EntropyQuantities> {
    let (s, eta) = mixture_entropy(u, mix)?;
    let v = entropy_variables(u, mix)?;
    let t = temperature_unchecked(u, mix);
    let p = pressure_with(u, mix, t);
    let vel = u.velocity();
    let n = u.n_species();
    // psi_d = V . f_d(U) - F_d(U), assembled column by column.
    let mut psi = [0.0; MAX_DIM];
    for d in 0..u.dim() {
        let u_d = vel[d];
        let mut acc = 0.0;
        for (i, &rho_i) in u.partial_densities().iter().enumerate() {
            acc += v[i] * rho_i * u_d;
        }
        for e in 0..u.dim() {
            let f_me = u.momentum()[e] * u_d + if e == d { p } else { 0.0 };
            acc += v[n + e] * f_me;
        }
        acc += v[n + u.dim()] * (u.total_energy() + p) * u_d;
        psi[d] = acc - eta * u_d;
    }
    Ok(EntropyQuantities {
        s,
        eta,
        v,
        entropy_flux_coeff: eta,
        psi,
    })
}

/// Frozen mixture sound speed `c = sqrt(gamma_mix p / rho)` with
/// `gamma_mix = sum_i rho_i c_pi / sum_i rho_i c_vi`.
pub fn sound_speed(u: &ConservedState, mix: &GasMixture) -> Result<f64> {
    require_admissible(u, mix)?;
    let t = temperature_unchecked(u, mix);
    let p = pressure_with(u, mix, t);
    if !(p > 0.0) {
        return Err(Error::Inadmissible(Inadmissible::Pressure { value: p }));
    }
    Ok(sound_speed_with(u, mix, p))
}

#[inline]
pub(crate) fn sound_speed_with(u: &ConservedState, mix: &GasMixture, p: f64) -> f64 {
    let mut cp = 0.0;
    let mut cv = 0.0;
    for (&rho_i, sp) in u.partial_densities().iter().zip(mix.species()) {
        cp += rho_i * sp.c_p();
        cv += rho_i * sp.c_v;
    }
    (cp / cv * p / u.density()).sqrt()
}

/// Total density and the first `n - 1` mass fractions `Y_i = rho_i / rho`.
pub fn mass_fraction_view(u: &ConservedState) -> Result<(f64, Vec<f64>)> {
    let rho = u.density();
    if !(rho > 0.0) {
        return Err(Error::Inadmissible(Inadmissible::Density {
            species: 0,
            value: rho,
        }));
    }
    let y = u.partial_densities()[..u.n_species() - 1]
        .iter()
        .map(|&rho_i| rho_i / rho)
        .collect();
    Ok((rho, y))
}

/// Rebuild partial densities from total density and leading mass fractions.
pub fn densities_from_fractions(rho: f64, y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len() + 1);
    let mut rest = 1.0;
    for &yi in y {
        out.push(yi * rho);
        rest -= yi;
    }
    out.push(rest * rho);
    out
}

/// Conserved state from primitive data `(rho_i, u, p)`;
/// the temperature follows from the pressure law.
pub fn primitive_from_rho_u_p(
    rho: &[f64],
    vel: &[f64],
    p: f64,
    mix: &GasMixture,
) -> Result<PrimitiveState> {
    if rho.len() != mix.n_species() {
        return Err(Error::Invalid(
            "density slice does not match mixture".into(),
        ));
    }
    let rr: f64 = rho
        .iter()
        .zip(mix.species())
        .map(|(&rho_i, sp)| rho_i * sp.r)
        .sum();
    if !(rr > 0.0) {
        return Err(Error::Invalid("sum rho_i r_i must be positive".into()));
    }
    Ok(PrimitiveState::new(rho, vel, p, p / rr))
}

pub fn to_conserved(prim: &PrimitiveState, mix: &GasMixture) -> ConservedState {
    debug_assert_eq!(prim.n_species(), mix.n_species());
    let rho = prim.density();
    let m: Vec<f64> = prim.velocity().iter().map(|&u| rho * u).collect();
    let speed_sq: f64 = prim.velocity().iter().map(|&u| u * u).sum();
    let mut e = 0.5 * rho * speed_sq;
    for (&rho_i, sp) in prim.partial_densities().iter().zip(mix.species()) {
        e += rho_i * (sp.e0 + sp.c_v * prim.temperature);
    }
    ConservedState::new(prim.partial_densities(), &m, e)
}

pub fn to_primitive(u: &ConservedState, mix: &GasMixture) -> Result<PrimitiveState> {
    require_admissible(u, mix)?;
    let t = temperature_unchecked(u, mix);
    let p = pressure_with(u, mix, t);
    let vel = u.velocity();
    Ok(PrimitiveState::new(
        u.partial_densities(),
        &vel[..u.dim()],
        p,
        t,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_species_mix() -> GasMixture {
        GasMixture::two_equal(1.4, 1.0).unwrap()
    }

    /// Deterministic admissible state generator for sweep tests.
    pub(crate) fn random_state(
        rng: &mut crate::rng::SplitMix64,
        n: usize,
        dim: usize,
    ) -> ConservedState {
        let rho: Vec<f64> = (0..n).map(|_| 0.1 + 2.9 * rng.next_f64()).collect();
        let total: f64 = rho.iter().sum();
        let vel: Vec<f64> = (0..dim).map(|_| 4.0 * rng.next_f64() - 2.0).collect();
        let t = 0.5 + 4.5 * rng.next_f64();
        let m: Vec<f64> = vel.iter().map(|&u| total * u).collect();
        // Build by the energy law so T is exact.
        ConservedState::new(&rho, &m, 0.0).with_comp(
            n + dim,
            0.5 * total * vel.iter().map(|u| u * u).sum::<f64>() + total_cv(&rho) * t,
        )
    }

    fn total_cv(rho: &[f64]) -> f64 {
        // c_v = 2.5 for gamma = 1.4, r = 1.
        rho.iter().sum::<f64>() * 2.5
    }

    #[test]
    fn species_params_consistency() {
        let sp = SpeciesParams::from_gamma_r(1.4, 0.4, 0.0).unwrap();
        assert!((sp.c_v() - 1.0).abs() < 1e-12);
        assert!((sp.r() - (sp.gamma() - 1.0) * sp.c_v()).abs() < 1e-12 * sp.r());
        assert!((sp.c_p() - 1.4).abs() < 1e-12);
        assert!(SpeciesParams::new(1.0, 1.0, 0.0).is_err());
        assert!(SpeciesParams::new(1.4, -1.0, 0.0).is_err());
    }

    #[test]
    fn temperature_single_species() {
        // gamma = 1.4, c_v = 1, e0 = 0; U = (rho=2, m=(2,2), E=6) -> T = (6-2)/2 = 2.
        let mix = GasMixture::new(vec![SpeciesParams::new(1.4, 1.0, 0.0).unwrap()]).unwrap();
        let u = ConservedState::new(&[2.0], &[2.0, 2.0], 6.0);
        let t = temperature_from_conserved(&u, &mix).unwrap();
        assert!((t - 2.0).abs() < 1e-14);
    }

    #[test]
    fn temperature_layered_state() {
        // Layer-1 shear state: rho = (0.8, 0.2), u = (-0.5, 0), p = 2.5,
        // r_1 = r_2 = 1 so sum rho_i r_i = 1 and T = 2.5.
        let mix = two_species_mix();
        let prim = primitive_from_rho_u_p(&[0.8, 0.2], &[-0.5, 0.0], 2.5, &mix).unwrap();
        let u = to_conserved(&prim, &mix);
        let t = temperature_from_conserved(&u, &mix).unwrap();
        assert!((t - 2.5).abs() < 1e-13);
    }

    #[test]
    fn zero_internal_energy_flagged() {
        let mix = GasMixture::new(vec![SpeciesParams::new(1.4, 1.0, 0.0).unwrap()]).unwrap();
        // E exactly kinetic: T = 0, returned but inadmissible.
        let u = ConservedState::new(&[2.0], &[2.0], 1.0);
        let t = temperature_from_conserved(&u, &mix).unwrap();
        assert_eq!(t, 0.0);
        assert!(!is_admissible(&u, &mix));
        assert!(matches!(
            admissibility_violation(&u, &mix),
            Some(Inadmissible::Temperature { .. })
        ));
    }

    #[test]
    fn negative_density_flagged() {
        let mix = two_species_mix();
        let u = ConservedState::new(&[1.0, -0.1], &[0.0, 0.0], 10.0);
        assert!(matches!(
            temperature_from_conserved(&u, &mix),
            Err(Error::Inadmissible(Inadmissible::Density {
                species: 1,
                ..
            }))
        ));
    }

    #[test]
    fn pressure_simple_cases() {
        // Single species rho = 1, r = 1, T = 2.5 -> p = 2.5.
        let mix = GasMixture::single(1.4, 1.0).unwrap();
        let sp = mix.species()[0];
        let e = sp.c_v() * 2.5; // rho = 1, at rest
        let u = ConservedState::new(&[1.0], &[0.0], e);
        assert!((pressure(&u, &mix).unwrap() - 2.5).abs() < 1e-13);

        // Equal-gamma two species with sum rho_i r_i = 1, T = 2.5 -> p = 2.5.
        let mix2 = two_species_mix();
        let prim = primitive_from_rho_u_p(&[0.3, 0.7], &[0.1, -0.2], 2.5, &mix2).unwrap();
        let u2 = to_conserved(&prim, &mix2);
        assert!((pressure(&u2, &mix2).unwrap() - 2.5).abs() < 1e-13);
    }

    #[test]
    fn entropy_trivial_values() {
        // Single species rho = 1, c_v = 1, r = 0.4, T = 1 -> s = 0, eta = 0.
        let mix = GasMixture::new(vec![SpeciesParams::new(1.4, 1.0, 0.0).unwrap()]).unwrap();
        let u = ConservedState::new(&[1.0], &[0.0], 1.0); // E = c_v T = 1
        let (s, eta) = mixture_entropy(&u, &mix).unwrap();
        assert!(s.abs() < 1e-14);
        assert!(eta.abs() < 1e-14);

        // Two species rho_1 = rho_2 = 1, c_v = 1, r = 0.4, T = e -> s = 1, eta = -2.
        let sp = SpeciesParams::new(1.4, 1.0, 0.0).unwrap();
        let mix2 = GasMixture::new(vec![sp, sp]).unwrap();
        let t = std::f64::consts::E;
        let u2 = ConservedState::new(&[1.0, 1.0], &[0.0, 0.0], 2.0 * t);
        let (s2, eta2) = mixture_entropy(&u2, &mix2).unwrap();
        assert!((s2 - 1.0).abs() < 1e-14);
        assert!((eta2 + 2.0).abs() < 1e-13);
    }

    #[test]
    fn entropy_mass_fraction_oracle() {
        // s via the mass-fraction form: s = c_v(Y) ln T - sum Y_i r_i ln(rho Y_i),
        // evaluated on an independent code path.
        let mix = two_species_mix();
        let mut rng = crate::rng::SplitMix64::new(7);
        for _ in 0..200 {
            let u = random_state(&mut rng, 2, 2);
            let (s, _) = mixture_entropy(&u, &mix).unwrap();
            let (rho, y_lead) = mass_fraction_view(&u).unwrap();
            let y = [y_lead[0], 1.0 - y_lead[0]];
            let t = temperature_from_conserved(&u, &mix).unwrap();
            let mut s_oracle = 0.0;
            for (i, sp) in mix.species().iter().enumerate() {
                s_oracle += y[i] * (sp.c_v() * t.ln() - sp.r() * (rho * y[i]).ln());
            }
            assert!(
                (s - s_oracle).abs() <= 1e-12 * s.abs().max(1.0),
                "s = {s}, oracle = {s_oracle}"
            );
        }
    }

    #[test]
    fn temperature_entropy_inverse_trivial() {
        // Single species, s = 0, c_v = 1, r = 0.4, rho = 1 -> T = 1.
        let mix = GasMixture::new(vec![SpeciesParams::new(1.4, 1.0, 0.0).unwrap()]).unwrap();
        let t = temperature_from_entropy_density(&[1.0], 0.0, &mix).unwrap();
        assert!((t - 1.0).abs() < 1e-14);

        // Two species rho_1 = rho_2 = 1, s = 1 -> T = e (rho s = 2).
        let sp = SpeciesParams::new(1.4, 1.0, 0.0).unwrap();
        let mix2 = GasMixture::new(vec![sp, sp]).unwrap();
        let t2 = temperature_from_entropy_density(&[1.0, 1.0], 2.0, &mix2).unwrap();
        assert!((t2 - std::f64::consts::E).abs() < 1e-13);
    }

    #[test]
    fn temperature_entropy_roundtrip() {
        let mix = two_species_mix();
        let mut rng = crate::rng::SplitMix64::new(11);
        for _ in 0..500 {
            let u = random_state(&mut rng, 2, 2);
            let t0 = temperature_from_conserved(&u, &mix).unwrap();
            let (s, _) = mixture_entropy(&u, &mix).unwrap();
            let t1 = temperature_from_entropy_density(u.partial_densities(), u.density() * s, &mix)
                .unwrap();
            assert!((t1 - t0).abs() <= 1e-10 * t0, "t0 = {t0}, t1 = {t1}");
        }
    }

    /// Central finite-difference gradient of eta with relative step.
    pub(crate) fn fd_entropy_gradient(u: &ConservedState, mix: &GasMixture) -> CompVec {
        let mut g = CompVec::zeros(u.ncomp());
        for k in 0..u.ncomp() {
            let scale = u.comp(k).abs().max(1.0);
            let h = 1e-6 * scale;
            let up = u.with_comp(k, u.comp(k) + h);
            let dn = u.with_comp(k, u.comp(k) - h);
            let ep = mixture_entropy(&up, mix).unwrap().1;
            let en = mixture_entropy(&dn, mix).unwrap().1;
            g[k] = (ep - en) / (2.0 * h);
        }
        g
    }

    #[test]
    fn entropy_variables_match_fd_gradient() {
        let mix = two_species_mix();
        let mut rng = crate::rng::SplitMix64::new(3);
        for _ in 0..1000 {
            let u = random_state(&mut rng, 2, 2);
            let v = entropy_variables(&u, &mix).unwrap();
            let g = fd_entropy_gradient(&u, &mix);
            for k in 0..u.ncomp() {
                let denom = g[k].abs().max(1e-8);
                assert!(
                    (v[k] - g[k]).abs() <= 1e-6 * denom.max(1.0) + 1e-6 * denom,
                    "component {k}: V = {}, fd = {}",
                    v[k],
                    g[k]
                );
            }
        }
    }

    #[test]
    fn entropy_variables_fd_on_layered_state() {
        let mix = two_species_mix();
        let prim = primitive_from_rho_u_p(&[0.8, 0.2], &[-0.5, 0.0], 2.5, &mix).unwrap();
        let u = to_conserved(&prim, &mix);
        let v = entropy_variables(&u, &mix).unwrap();
        let g = fd_entropy_gradient(&u, &mix);
        for k in 0..u.ncomp() {
            assert!((v[k] - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0));
        }
    }

    #[test]
    fn entropy_variables_with_reference_energy() {
        // e0 != 0 must enter V_{rho_i}.
        let sp1 = SpeciesParams::new(1.4, 1.0, 0.3).unwrap();
        let sp2 = SpeciesParams::new(1.6, 0.8, -0.2).unwrap();
        let mix = GasMixture::new(vec![sp1, sp2]).unwrap();
        let rho = [0.9, 1.1];
        let m = [0.4, -0.7];
        let e_ref: f64 = rho
            .iter()
            .zip(mix.species())
            .map(|(&r, s)| r * s.e0())
            .sum();
        let cv: f64 = rho
            .iter()
            .zip(mix.species())
            .map(|(&r, s)| r * s.c_v())
            .sum();
        let total: f64 = rho.iter().sum();
        let kin = 0.5 * (m[0] * m[0] + m[1] * m[1]) / total;
        let u = ConservedState::new(&rho, &m, kin + e_ref + cv * 1.7);
        let v = entropy_variables(&u, &mix).unwrap();
        let g = fd_entropy_gradient(&u, &mix);
        for k in 0..u.ncomp() {
            assert!(
                (v[k] - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0),
                "component {k}: V = {}, fd = {}",
                v[k],
                g[k]
            );
        }
    }

    #[test]
    fn entropy_flux_gradient_compatibility() {
        // dF/dU = V^T df/dU along a fixed direction, both by finite differences.
        let mix = two_species_mix();
        let normal = [3f64.sqrt() / 2.0, 0.5];
        let mut rng = crate::rng::SplitMix64::new(19);
        for _ in 0..100 {
            let u = random_state(&mut rng, 2, 2);
            let v = entropy_variables(&u, &mix).unwrap();
            for k in 0..u.ncomp() {
                let scale = u.comp(k).abs().max(1.0);
                let h = 1e-6 * scale;
                let up = u.with_comp(k, u.comp(k) + h);
                let dn = u.with_comp(k, u.comp(k) - h);

                let flux_n = |w: &ConservedState| -> f64 {
                    let q = entropy_quantities(w, &mix).unwrap();
                    q.entropy_flux(w, &normal)
                };
                let dflux = (flux_n(&up) - flux_n(&dn)) / (2.0 * h);

                let mut vdf = 0.0;
                for j in 0..u.ncomp() {
                    let fp = crate::flux::physical_flux(&up, &normal, &mix).unwrap();
                    let fn_ = crate::flux::physical_flux(&dn, &normal, &mix).unwrap();
                    vdf += v[j] * (fp[j] - fn_[j]) / (2.0 * h);
                }
                let denom = dflux.abs().max(1.0);
                assert!(
                    (dflux - vdf).abs() <= 1e-5 * denom,
                    "component {k}: dF = {dflux}, V.df = {vdf}"
                );
            }
        }
    }

    #[test]
    fn entropy_potential_identities() {
        let mix = two_species_mix();

        // Zero velocity: F.n = 0 and the advective rows vanish, psi = 0
        // because V_m = 0 annihilates the remaining pressure column.
        let u_rest = ConservedState::new(&[1.0, 1.0], &[0.0, 0.0], 5.0);
        let psi = entropy_potential(&u_rest, &[1.0, 0.0], &mix).unwrap();
        assert!(psi.abs() < 1e-14);

        // Equal states on both sides of an interface: psi_K - psi_L = 0.
        let prim = primitive_from_rho_u_p(&[0.2, 1.8], &[0.5, 0.0], 2.5, &mix).unwrap();
        let u = to_conserved(&prim, &mix);
        let a = entropy_potential(&u, &[0.0, 1.0], &mix).unwrap();
        let b = entropy_potential(&u, &[0.0, 1.0], &mix).unwrap();
        assert_eq!(a, b);

        // Independent closed-form route: psi . n = (sum_i rho_i r_i) (u . n).
        let mut rng = crate::rng::SplitMix64::new(23);
        for _ in 0..300 {
            let w = random_state(&mut rng, 2, 2);
            let ang = 2.0 * std::f64::consts::PI * rng.next_f64();
            let n = [ang.cos(), ang.sin()];
            let psi = entropy_potential(&w, &n, &mix).unwrap();
            let rr: f64 = w
                .partial_densities()
                .iter()
                .zip(mix.species())
                .map(|(&rho_i, sp)| rho_i * sp.r())
                .sum();
            let vel = w.velocity();
            let un = vel[0] * n[0] + vel[1] * n[1];
            assert!(
                (psi - rr * un).abs() <= 1e-11 * (rr * un).abs().max(1.0),
                "psi = {psi}, closed form = {}",
                rr * un
            );
        }
    }

    #[test]
    fn sound_speed_values() {
        // Single species gamma = 1.4, p = 1, rho = 1 -> c = sqrt(1.4).
        let mix = GasMixture::single(1.4, 0.4).unwrap();
        let sp = mix.species()[0];
        let t = 1.0 / sp.r(); // p = rho r T = 1 at rho = 1
        let u = ConservedState::new(&[1.0], &[0.0], sp.c_v() * t);
        let c = sound_speed(&u, &mix).unwrap();
        assert!((c - 1.4f64.sqrt()).abs() < 1e-13);

        // Equal-gamma mixture: gamma_mix = gamma regardless of composition.
        let mix2 = two_species_mix();
        let prim = primitive_from_rho_u_p(&[0.25, 1.25], &[0.0, 0.0], 2.0, &mix2).unwrap();
        let u2 = to_conserved(&prim, &mix2);
        let c2 = sound_speed(&u2, &mix2).unwrap();
        let expected = (1.4 * 2.0 / 1.5f64).sqrt();
        assert!((c2 - expected).abs() < 1e-13);

        // gamma_1 = 1.4, gamma_2 = 1.648, equal densities, equal c_v
        // -> gamma_mix = (c_p1 + c_p2)/(c_v1 + c_v2) = 1.524.
        let s1 = SpeciesParams::new(1.4, 1.0, 0.0).unwrap();
        let s2 = SpeciesParams::new(1.648, 1.0, 0.0).unwrap();
        let mix3 = GasMixture::new(vec![s1, s2]).unwrap();
        let u3 = ConservedState::new(&[1.0, 1.0], &[0.0, 0.0], 2.0 * 3.0); // T = 3
        let p3 = pressure(&u3, &mix3).unwrap();
        let c3 = sound_speed(&u3, &mix3).unwrap();
        let gamma_mix = c3 * c3 * u3.density() / p3;
        assert!((gamma_mix - 1.524).abs() < 1e-12, "gamma_mix = {gamma_mix}");
    }

    #[test]
    fn mass_fractions() {
        let u = ConservedState::new(&[1.0, 1.0], &[0.0], 4.0);
        let (rho, y) = mass_fraction_view(&u).unwrap();
        assert_eq!(rho, 2.0);
        assert_eq!(y, vec![0.5]);

        // Layer-2 state rho = (0.2, 1.8) -> Y_1 = 0.1.
        let u2 = ConservedState::new(&[0.2, 1.8], &[0.0, 0.0], 8.0);
        let (_, y2) = mass_fraction_view(&u2).unwrap();
        assert!((y2[0] - 0.1).abs() < 1e-15);

        // Round trip is exact to machine precision.
        let back = densities_from_fractions(rho, &y);
        for (a, b) in back.iter().zip(u.partial_densities()) {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
    }

    #[test]
    fn primitive_conserved_roundtrip() {
        let mix = two_species_mix();
        let mut rng = crate::rng::SplitMix64::new(41);
        for _ in 0..300 {
            let u = random_state(&mut rng, 2, 2);
            let prim = to_primitive(&u, &mix).unwrap();
            let back = to_conserved(&prim, &mix);
            for k in 0..u.ncomp() {
                let denom = u.comp(k).abs().max(1.0);
                assert!((back.comp(k) - u.comp(k)).abs() <= 1e-13 * denom);
            }
        }
    }

    #[test]
    fn pressure_bounded_by_energy() {
        // p <= (gamma_max - 1) E for e0 = 0.
        let s1 = SpeciesParams::from_gamma_r(1.4, 0.4, 0.0).unwrap();
        let s2 = SpeciesParams::from_gamma_r(1.648, 1.578, 0.0).unwrap();
        let mix = GasMixture::new(vec![s1, s2]).unwrap();
        let mut rng = crate::rng::SplitMix64::new(5);
        for _ in 0..1000 {
            let rho = [0.1 + 2.9 * rng.next_f64(), 0.1 + 2.9 * rng.next_f64()];
            let total = rho[0] + rho[1];
            let vel = [2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0];
            let t = 0.5 + 4.5 * rng.next_f64();
            let cv = rho[0] * s1.c_v() + rho[1] * s2.c_v();
            let e = 0.5 * total * (vel[0] * vel[0] + vel[1] * vel[1]) + cv * t;
            let u = ConservedState::new(&rho, &[total * vel[0], total * vel[1]], e);
            let p = pressure(&u, &mix).unwrap();
            assert!(p <= (mix.gamma_max() - 1.0) * e * (1.0 + 1e-14));
        }
    }

    #[test]
    fn eta_convex_along_segments() {
        let mix = two_species_mix();
        let mut rng = crate::rng::SplitMix64::new(29);
        for _ in 0..500 {
            let a = random_state(&mut rng, 2, 2);
            let b = random_state(&mut rng, 2, 2);
            let theta = rng.next_f64();
            let mid = ConservedState::lincomb(theta, &a, 1.0 - theta, &b);
            if !is_admissible(&mid, &mix) {
                continue;
            }
            let eta_a = mixture_entropy(&a, &mix).unwrap().1;
            let eta_b = mixture_entropy(&b, &mix).unwrap().1;
            let eta_m = mixture_entropy(&mid, &mix).unwrap().1;
            let scale = eta_a.abs().max(eta_b.abs()).max(1.0);
            assert!(
                eta_m <= theta * eta_a + (1.0 - theta) * eta_b + 1e-12 * scale,
                "convexity violated: {eta_m} vs {}",
                theta * eta_a + (1.0 - theta) * eta_b
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn admissible_state() -> impl Strategy<Value = ConservedState> {
            (
                0.1f64..3.0,
                0.1f64..3.0,
                -2.0f64..2.0,
                -2.0f64..2.0,
                0.5f64..5.0,
            )
                .prop_map(|(r1, r2, u1, u2, t)| {
                    let total = r1 + r2;
                    // c_v = 2.5 for gamma = 1.4, r = 1.
                    let e = 0.5 * total * (u1 * u1 + u2 * u2) + 2.5 * total * t;
                    ConservedState::new(&[r1, r2], &[total * u1, total * u2], e)
                })
        }

        proptest! {
            #[test]
            fn primitive_roundtrip_is_identity(u in admissible_state()) {
                let mix = GasMixture::two_equal(1.4, 1.0).unwrap();
                let prim = to_primitive(&u, &mix).unwrap();
                let back = to_conserved(&prim, &mix);
                for k in 0..u.ncomp() {
                    let denom = u.comp(k).abs().max(1.0);
                    prop_assert!((back.comp(k) - u.comp(k)).abs() <= 1e-13 * denom);
                }
            }

            #[test]
            fn entropy_is_convex_along_segments(
                a in admissible_state(),
                b in admissible_state(),
                theta in 0.0f64..1.0,
            ) {
                let mix = GasMixture::two_equal(1.4, 1.0).unwrap();
                let mid = ConservedState::lincomb(theta, &a, 1.0 - theta, &b);
                prop_assume!(is_admissible(&mid, &mix));
                let eta_a = mixture_entropy(&a, &mix).unwrap().1;
                let eta_b = mixture_entropy(&b, &mix).unwrap().1;
                let eta_m = mixture_entropy(&mid, &mix).unwrap().1;
                let scale = eta_a.abs().max(eta_b.abs()).max(1.0);
                prop_assert!(eta_m <= theta * eta_a + (1.0 - theta) * eta_b + 1e-12 * scale);
            }

            #[test]
            fn entropy_temperature_inversion_roundtrips(u in admissible_state()) {
                let mix = GasMixture::two_equal(1.4, 1.0).unwrap();
                let t0 = temperature_from_conserved(&u, &mix).unwrap();
                let (s, _) = mixture_entropy(&u, &mix).unwrap();
                let t1 = temperature_from_entropy_density(
                    u.partial_densities(),
                    u.density() * s,
                    &mix,
                )
                .unwrap();
                prop_assert!((t1 - t0).abs() <= 1e-10 * t0);
            }
        }
    }

    #[test]
    fn single_species_matches_single_gas_oracle() {
        // Independent single-gas implementation working from (rho, p) directly.
        let gamma = 1.4;
        let r = 0.4;
        let mix = GasMixture::single(gamma, r).unwrap();
        let c_v = r / (gamma - 1.0);
        let mut rng = crate::rng::SplitMix64::new(59);
        for _ in 0..300 {
            let rho = 0.1 + 2.9 * rng.next_f64();
            let vel = [2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0];
            let p = 0.2 + 3.0 * rng.next_f64();
            // Oracle algebra in (rho, u, p):
            let t_o = p / (rho * r);
            let s_o = c_v * t_o.ln() - r * rho.ln();
            let e_o = p / (gamma - 1.0) + 0.5 * rho * (vel[0] * vel[0] + vel[1] * vel[1]);
            let c_o = (gamma * p / rho).sqrt();
            let v_rho_o = -s_o + c_v + r - (vel[0] * vel[0] + vel[1] * vel[1]) / (2.0 * t_o);

            let u = ConservedState::new(&[rho], &[rho * vel[0], rho * vel[1]], e_o);
            assert!((temperature_from_conserved(&u, &mix).unwrap() - t_o).abs() <= 1e-12 * t_o);
            assert!((pressure(&u, &mix).unwrap() - p).abs() <= 1e-12 * p);
            let (s, eta) = mixture_entropy(&u, &mix).unwrap();
            assert!((s - s_o).abs() <= 1e-12 * s_o.abs().max(1.0));
            assert!((eta + rho * s_o).abs() <= 1e-12 * (rho * s_o).abs().max(1.0));
            assert!((sound_speed(&u, &mix).unwrap() - c_o).abs() <= 1e-12 * c_o);
            let v = entropy_variables(&u, &mix).unwrap();
            assert!((v[0] - v_rho_o).abs() <= 1e-12 * v_rho_o.abs().max(1.0));
            assert!((v[1] - vel[0] / t_o).abs() <= 1e-12 * (vel[0] / t_o).abs().max(1.0));
            assert!((v[3] + 1.0 / t_o).abs() <= 1e-12 / t_o);
        }
    }
}
