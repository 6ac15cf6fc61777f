//! Per-cell state vectors with fixed inline storage.
//!
//! Every vector shares the component layout
//! `(rho_1 .. rho_n, m_1 .. m_dim, E)`, so conserved states, fluxes,
//! right-hand sides and entropy-variable vectors can be combined without
//! heap traffic in the interface loops.

/// Hard cap on the number of species carried per state.
pub const MAX_SPECIES: usize = 4;
/// Spatial dimensions supported by the state layout.
pub const MAX_DIM: usize = 3;
/// Maximum number of conserved components: species + momentum + energy.
pub const MAX_COMP: usize = MAX_SPECIES + MAX_DIM + 1;

/// Conserved variables of one cell: partial densities, momentum, total energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservedState {
    n_species: u8,
    dim: u8,
    rho: [f64; MAX_SPECIES],
    m: [f64; MAX_DIM],
    e: f64,
}

impl ConservedState {
    pub fn new(rho: &[f64], m: &[f64], e: f64) -> Self {
        assert!(
            !rho.is_empty() && rho.len() <= MAX_SPECIES,
            "species count {} out of range 1..={MAX_SPECIES}",
            rho.len()
        );
        assert!(
            !m.is_empty() && m.len() <= MAX_DIM,
            "dimension {} out of range 1..={MAX_DIM}",
            m.len()
        );
        let mut s = ConservedState {
            n_species: rho.len() as u8,
            dim: m.len() as u8,
            rho: [0.0; MAX_SPECIES],
            m: [0.0; MAX_DIM],
            e,
        };
        s.rho[..rho.len()].copy_from_slice(rho);
        s.m[..m.len()].copy_from_slice(m);
        s
    }

    pub fn zeros(n_species: usize, dim: usize) -> Self {
        Self::new(&vec![0.0; n_species], &vec![0.0; dim], 0.0)
    }

    #[inline]
    pub fn n_species(&self) -> usize {
        self.n_species as usize
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Number of conserved components `n + dim + 1`.
    #[inline]
    pub fn ncomp(&self) -> usize {
        self.n_species() + self.dim() + 1
    }

    #[inline]
    pub fn partial_densities(&self) -> &[f64] {
        &self.rho[..self.n_species()]
    }

    /// Total density `rho = sum_i rho_i`.
    #[inline]
    pub fn density(&self) -> f64 {
        self.partial_densities().iter().sum()
    }

    #[inline]
    pub fn momentum(&self) -> &[f64] {
        &self.m[..self.dim()]
    }

    #[inline]
    pub fn total_energy(&self) -> f64 {
        self.e
    }

    /// Velocity `m / rho`. Caller guarantees `rho > 0`.
    #[inline]
    pub fn velocity(&self) -> [f64; MAX_DIM] {
        let rho = self.density();
        let mut u = [0.0; MAX_DIM];
        for d in 0..self.dim() {
            u[d] = self.m[d] / rho;
        }
        u
    }

    /// Kinetic energy density `|m|^2 / (2 rho)`.
    #[inline]
    pub fn kinetic_energy(&self) -> f64 {
        let m2: f64 = self.momentum().iter().map(|v| v * v).sum();
        0.5 * m2 / self.density()
    }

    /// Component `k` in the shared layout.
    #[inline]
    pub fn comp(&self, k: usize) -> f64 {
        let n = self.n_species();
        if k < n {
            self.rho[k]
        } else if k < n + self.dim() {
            self.m[k - n]
        } else {
            debug_assert_eq!(k, self.ncomp() - 1);
            self.e
        }
    }

    /// Copy with component `k` replaced; used by finite-difference probes.
    pub fn with_comp(&self, k: usize, value: f64) -> Self {
        let mut s = *self;
        let n = s.n_species();
        if k < n {
            s.rho[k] = value;
        } else if k < n + s.dim() {
            s.m[k - n] = value;
        } else {
            s.e = value;
        }
        s
    }

    pub fn to_comps(&self) -> CompVec {
        let mut v = CompVec::zeros(self.ncomp());
        for k in 0..self.ncomp() {
            v[k] = self.comp(k);
        }
        v
    }

    pub fn from_comps(v: &CompVec, n_species: usize, dim: usize) -> Self {
        assert_eq!(v.len(), n_species + dim + 1);
        Self::new(
            &v.as_slice()[..n_species],
            &v.as_slice()[n_species..n_species + dim],
            v[n_species + dim],
        )
    }

    /// Component-wise difference `self - other` as a raw vector.
    pub fn diff(&self, other: &ConservedState) -> CompVec {
        debug_assert_eq!(self.ncomp(), other.ncomp());
        let mut v = CompVec::zeros(self.ncomp());
        for k in 0..self.ncomp() {
            v[k] = self.comp(k) - other.comp(k);
        }
        v
    }

    /// `self + a * rate`, the elementary update of explicit time stepping.
    #[inline]
    pub fn add_scaled(&self, a: f64, rate: &CompVec) -> Self {
        debug_assert_eq!(rate.len(), self.ncomp());
        let n = self.n_species();
        let dim = self.dim();
        let mut s = *self;
        for i in 0..n {
            s.rho[i] += a * rate[i];
        }
        for d in 0..dim {
            s.m[d] += a * rate[n + d];
        }
        s.e += a * rate[n + dim];
        s
    }

    /// Convex combination `a * self + b * other` (stage updates of SSP schemes).
    #[inline]
    pub fn lincomb(a: f64, x: &ConservedState, b: f64, y: &ConservedState) -> Self {
        debug_assert_eq!(x.ncomp(), y.ncomp());
        let mut s = *x;
        for i in 0..x.n_species() {
            s.rho[i] = a * x.rho[i] + b * y.rho[i];
        }
        for d in 0..x.dim() {
            s.m[d] = a * x.m[d] + b * y.m[d];
        }
        s.e = a * x.e + b * y.e;
        s
    }
}

/// Raw component vector in the conserved layout; used for fluxes,
/// right-hand sides, entropy variables and jumps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompVec {
    len: u8,
    v: [f64; MAX_COMP],
}

impl CompVec {
    #[inline]
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_COMP);
        CompVec {
            len: len as u8,
            v: [0.0; MAX_COMP],
        }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = Self::zeros(s.len());
        v.v[..s.len()].copy_from_slice(s);
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.len()]
    }

    #[inline]
    pub fn dot(&self, other: &CompVec) -> f64 {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0.0;
        for k in 0..self.len() {
            acc += self.v[k] * other.v[k];
        }
        acc
    }

    /// Dot product against a conserved state in the shared layout.
    #[inline]
    pub fn dot_state(&self, u: &ConservedState) -> f64 {
        debug_assert_eq!(self.len(), u.ncomp());
        let mut acc = 0.0;
        for k in 0..self.len() {
            acc += self.v[k] * u.comp(k);
        }
        acc
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn add_assign_scaled(&mut self, a: f64, other: &CompVec) {
        debug_assert_eq!(self.len, other.len);
        for k in 0..self.len() {
            self.v[k] += a * other.v[k];
        }
    }

    #[inline]
    pub fn scale(&self, a: f64) -> CompVec {
        let mut out = *self;
        for k in 0..self.len() {
            out.v[k] *= a;
        }
        out
    }

    pub fn sub(&self, other: &CompVec) -> CompVec {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for k in 0..self.len() {
            out.v[k] -= other.v[k];
        }
        out
    }

    pub fn add(&self, other: &CompVec) -> CompVec {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for k in 0..self.len() {
            out.v[k] += other.v[k];
        }
        out
    }
}

impl std::ops::Index<usize> for CompVec {
    type Output = f64;
    #[inline]
    fn index(&self, k: usize) -> &f64 {
        debug_assert!(k < self.len());
        &self.v[k]
    }
}

impl std::ops::IndexMut<usize> for CompVec {
    #[inline]
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        debug_assert!(k < self.len());
        &mut self.v[k]
    }
}

/// Primitive description of a cell: partial densities, velocity,
/// pressure and temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimitiveState {
    n_species: u8,
    dim: u8,
    rho: [f64; MAX_SPECIES],
    u: [f64; MAX_DIM],
    pub pressure: f64,
    pub temperature: f64,
}

impl PrimitiveState {
    pub fn new(rho: &[f64], u: &[f64], pressure: f64, temperature: f64) -> Self {
        assert!(!rho.is_empty() && rho.len() <= MAX_SPECIES);
        assert!(!u.is_empty() && u.len() <= MAX_DIM);
        let mut s = PrimitiveState {
            n_species: rho.len() as u8,
            dim: u.len() as u8,
            rho: [0.0; MAX_SPECIES],
            u: [0.0; MAX_DIM],
            pressure,
            temperature,
        };
        s.rho[..rho.len()].copy_from_slice(rho);
        s.u[..u.len()].copy_from_slice(u);
        s
    }

    #[inline]
    pub fn n_species(&self) -> usize {
        self.n_species as usize
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn partial_densities(&self) -> &[f64] {
        &self.rho[..self.n_species()]
    }

    #[inline]
    pub fn density(&self) -> f64 {
        self.partial_densities().iter().sum()
    }

    #[inline]
    pub fn velocity(&self) -> &[f64] {
        &self.u[..self.dim()]
    }
}
