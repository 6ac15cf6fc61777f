//! Periodic uniform Cartesian grids in 1, 2 or 3 dimensions, cell and
//! interface enumeration, cell-average projection and the discrete
//! divergence with arithmetic face averages.

use crate::error::{Error, Result};
use crate::state::{ConservedState, MAX_DIM};

/// Uniform Cartesian grid on a periodic box (flat torus).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; MAX_DIM],
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    h: [f64; MAX_DIM],
}

impl Grid {
    pub fn new(cells: &[usize], box_lo: &[f64], box_hi: &[f64]) -> Result<Self> {
        let dim = cells.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Invalid(format!(
                "dimension {dim} out of range 1..={MAX_DIM}"
            )));
        }
        if box_lo.len() != dim || box_hi.len() != dim {
            return Err(Error::Invalid(
                "box extents must match the dimension".into(),
            ));
        }
        let mut g = Grid {
            dim,
            cells: [1; MAX_DIM],
            lo: [0.0; MAX_DIM],
            hi: [1.0; MAX_DIM],
            h: [1.0; MAX_DIM],
        };
        for d in 0..dim {
            if cells[d] == 0 {
                return Err(Error::Invalid("cell counts must be positive".into()));
            }
            if !(box_hi[d] > box_lo[d]) {
                return Err(Error::Invalid(format!(
                    "box extent ({}, {}) in dimension {d} is empty",
                    box_lo[d], box_hi[d]
                )));
            }
            g.cells[d] = cells[d];
            g.lo[d] = box_lo[d];
            g.hi[d] = box_hi[d];
            g.h[d] = (box_hi[d] - box_lo[d]) / cells[d] as f64;
        }
        Ok(g)
    }

    /// Square grid with `n` cells per dimension on `[lo, hi]^dim`.
    pub fn square(dim: usize, n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(&vec![n; dim], &vec![lo; dim], &vec![hi; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn cells_per_dim(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    #[inline]
    pub fn spacing(&self) -> &[f64] {
        &self.h[..self.dim]
    }

    #[inline]
    pub fn box_lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    #[inline]
    pub fn box_hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.cells[..self.dim].iter().product()
    }

    /// Cell volume `|K| = prod_d h_d`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h[..self.dim].iter().product()
    }

    /// Face area of an interface normal to dimension `d`: `|K| / h_d`.
    #[inline]
    pub fn face_area(&self, d: usize) -> f64 {
        self.cell_volume() / self.h[d]
    }

    #[inline]
    pub fn min_spacing(&self) -> f64 {
        self.h[..self.dim]
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Flat row-major index of a cell index tuple (dimension 0 slowest).
    #[inline]
    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut k = 0;
        for d in 0..self.dim {
            debug_assert!(idx[d] < self.cells[d]);
            k = k * self.cells[d] + idx[d];
        }
        k
    }

    /// Index tuple of a flat cell id.
    pub fn unflat(&self, mut k: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for d in (0..self.dim).rev() {
            idx[d] = k % self.cells[d];
            k /= self.cells[d];
        }
        idx
    }

    /// Flat index of the periodic neighbor of `k`, `steps` cells along
    /// dimension `d` (negative steps wrap as well).
    pub fn neighbor(&self, k: usize, d: usize, steps: isize) -> usize {
        let mut idx = self.unflat(k);
        let c = self.cells[d] as isize;
        idx[d] = (((idx[d] as isize + steps) % c + c) % c) as usize;
        self.flat(&idx[..self.dim])
    }

    /// Center coordinates of a flat cell id.
    pub fn cell_center(&self, k: usize) -> [f64; MAX_DIM] {
        let idx = self.unflat(k);
        let mut x = [0.0; MAX_DIM];
        for d in 0..self.dim {
            x[d] = self.lo[d] + (idx[d] as f64 + 0.5) * self.h[d];
        }
        x
    }

    /// Iterate all interfaces once. Each face is reported with a fixed
    /// orientation: the normal points from the lower-index cell `K` to its
    /// periodic successor `L` along the face's dimension.
    pub fn interfaces(&self) -> InterfaceIter<'_> {
        InterfaceIter {
            grid: self,
            d: 0,
            k: 0,
        }
    }

    /// Number of undirected interfaces: `dim * prod(cells)`.
    pub fn n_interfaces(&self) -> usize {
        self.dim * self.n_cells()
    }
}

/// One undirected interface with its fixed orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interface {
    /// Flat index of the cell the normal points out of.
    pub left: usize,
    /// Flat index of the cell the normal points into.
    pub right: usize,
    /// Dimension the face is normal to.
    pub axis: usize,
    /// Face measure `|S_KL|`.
    pub area: f64,
}

impl Interface {
    /// Unit normal as a dense vector.
    pub fn normal(&self, dim: usize) -> [f64; MAX_DIM] {
        debug_assert!(self.axis < dim);
        let mut n = [0.0; MAX_DIM];
        n[self.axis] = 1.0;
        n
    }
}

pub struct InterfaceIter<'a> {
    grid: &'a Grid,
    d: usize,
    k: usize,
}

impl Iterator for InterfaceIter<'_> {
    type Item = Interface;

    fn next(&mut self) -> Option<Interface> {
        if self.d >= self.grid.dim {
            return None;
        }
        let face = Interface {
            left: self.k,
            right: self.grid.neighbor(self.k, self.d, 1),
            axis: self.d,
            area: self.grid.face_area(self.d),
        };
        self.k += 1;
        if self.k == self.grid.n_cells() {
            self.k = 0;
            self.d += 1;
        }
        Some(face)
    }
}

/// Cell-indexed data over a grid. `T` is a conserved state for solution
/// fields and a scalar or small vector for diagnostics payloads.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    data: Vec<T>,
}

pub type ConservedField = Field<ConservedState>;
pub type ScalarField = Field<f64>;

impl<T: Clone> Field<T> {
    pub fn fill(grid: Grid, value: T) -> Self {
        Field {
            grid,
            data: vec![value; grid.n_cells()],
        }
    }
}

impl<T> Field<T> {
    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize) -> T) -> Self {
        Field {
            grid,
            data: (0..grid.n_cells()).map(&mut f).collect(),
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.n_cells() {
            return Err(Error::Invalid(format!(
                "field length {} does not match {} cells",
                data.len(),
                grid.n_cells()
            )));
        }
        Ok(Field { grid, data })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    #[inline]
    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, T> {
        self.data.iter_mut()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> std::ops::Index<usize> for Field<T> {
    type Output = T;
    #[inline]
    fn index(&self, k: usize) -> &T {
        &self.data[k]
    }
}

impl<T> std::ops::IndexMut<usize> for Field<T> {
    #[inline]
    fn index_mut(&mut self, k: usize) -> &mut T {
        &mut self.data[k]
    }
}

/// Nodes and weights of the Gauss-Legendre rules on `[-1, 1]`,
/// exact for polynomials of degree `2q - 1`.
pub(crate) fn gauss_rule(points: usize) -> (&'static [f64], &'static [f64]) {
    const P1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const P2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    const P3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W3: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    const P4: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_26,
        0.339_981_043_584_856_26,
        0.861_136_311_594_052_6,
    ];
    const W4: [f64; 4] = [
        0.347_854_845_137_453_85,
        0.652_145_154_862_546_2,
        0.652_145_154_862_546_2,
        0.347_854_845_137_453_85,
    ];
    const P5: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W5: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    match points {
        1 => (&P1, &W1),
        2 => (&P2, &W2),
        3 => (&P3, &W3),
        4 => (&P4, &W4),
        5 => (&P5, &W5),
        _ => panic!("Gauss rule with {points} points per dimension is not tabulated (1..=5)"),
    }
}

/// Cell averages `(Pi_h f)_K = (1/|K|) int_K f dx` of a scalar function by
/// tensor-product Gauss quadrature with `quadrature_order` points per
/// dimension (default choice in this crate: 3).
pub fn project_scalar(
    f: &dyn Fn(&[f64]) -> f64,
    grid: &Grid,
    quadrature_order: usize,
) -> ScalarField {
    let (nodes, weights) = gauss_rule(quadrature_order);
    let dim = grid.dim();
    Field::from_fn(*grid, |k| {
        let center = grid.cell_center(k);
        let mut acc = 0.0;
        // Tensor product over `dim` axes by odometer iteration.
        let mut q = [0usize; MAX_DIM];
        loop {
            let mut w = 1.0;
            let mut x = [0.0; MAX_DIM];
            for d in 0..dim {
                w *= 0.5 * weights[q[d]];
                x[d] = center[d] + 0.5 * grid.spacing()[d] * nodes[q[d]];
            }
            acc += w * f(&x[..dim]);
            // Advance the odometer.
            let mut d = 0;
            loop {
                if d == dim {
                    return acc;
                }
                q[d] += 1;
                if q[d] < nodes.len() {
                    break;
                }
                q[d] = 0;
                d += 1;
            }
        }
    })
}

/// Cell averages of a state-valued function, component by component.
pub fn project_state(
    f: &dyn Fn(&[f64]) -> ConservedState,
    grid: &Grid,
    quadrature_order: usize,
) -> ConservedField {
    let probe = f(&grid.cell_center(0)[..grid.dim()]);
    let ncomp = probe.ncomp();
    let mut comps = Vec::with_capacity(ncomp);
    for c in 0..ncomp {
        comps.push(project_scalar(
            &|x: &[f64]| f(x).comp(c),
            grid,
            quadrature_order,
        ));
    }
    Field::from_fn(*grid, |k| {
        let mut v = crate::state::CompVec::zeros(ncomp);
        for c in 0..ncomp {
            v[c] = comps[c][k];
        }
        ConservedState::from_comps(&v, probe.n_species(), probe.dim())
    })
}

/// Discrete divergence with arithmetic face averages:
/// `(div_h g)_K = (1/|K|) sum_L |S_KL| (g_K + g_L)/2 . n_KL`.
pub fn discrete_divergence(g: &Field<[f64; MAX_DIM]>) -> ScalarField {
    let grid = *g.grid();
    let inv_vol = 1.0 / grid.cell_volume();
    let mut out = Field::fill(grid, 0.0);
    for face in grid.interfaces() {
        let avg = 0.5 * (g[face.left][face.axis] + g[face.right][face.axis]);
        let contrib = face.area * avg * inv_vol;
        out[face.left] += contrib;
        out[face.right] -= contrib;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_geometry() {
        let g = Grid::new(&[4, 8], &[0.0, -1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(g.n_cells(), 32);
        assert_eq!(g.spacing(), &[0.25, 0.25]);
        assert!((g.cell_volume() - 0.0625).abs() < 1e-15);
        assert!((g.face_area(0) - 0.25).abs() < 1e-15);
        let k = g.flat(&[2, 5]);
        assert_eq!(g.unflat(k)[..2], [2, 5]);
        assert_eq!(g.neighbor(k, 0, 1), g.flat(&[3, 5]));
        assert_eq!(g.neighbor(k, 0, 2), g.flat(&[0, 5]));
        assert_eq!(g.neighbor(k, 1, -6), g.flat(&[2, 7]));
        let c = g.cell_center(g.flat(&[0, 0]));
        assert!((c[0] - 0.125).abs() < 1e-15);
        assert!((c[1] + 0.875).abs() < 1e-15);
    }

    #[test]
    fn interface_counts() {
        let g1 = Grid::square(1, 4, 0.0, 1.0).unwrap();
        assert_eq!(g1.interfaces().count(), 4);
        let g2 = Grid::square(2, 3, 0.0, 1.0).unwrap();
        assert_eq!(g2.interfaces().count(), 18);
        assert_eq!(g2.n_interfaces(), 18);
    }

    #[test]
    fn interfaces_partition_neighbor_pairs() {
        let g = Grid::square(2, 4, 0.0, 1.0).unwrap();
        let mut seen = std::collections::HashSet::new();
        for face in g.interfaces() {
            let key = if face.left < face.right {
                (face.left, face.right, face.axis)
            } else {
                (face.right, face.left, face.axis)
            };
            assert!(seen.insert(key), "face {key:?} enumerated twice");
        }
        assert_eq!(seen.len(), g.n_interfaces());
    }

    #[test]
    fn projection_exactness() {
        let g = Grid::square(2, 5, 0.0, 1.0).unwrap();
        // Constants are exact.
        let c = project_scalar(&|_| 3.25, &g, 3);
        for v in c.iter() {
            assert!((v - 3.25).abs() < 1e-15);
        }
        // Linear functions average to the cell center value.
        let lin = project_scalar(&|x| x[0], &g, 3);
        for k in 0..g.n_cells() {
            assert!((lin[k] - g.cell_center(k)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_matches_sine_cell_average() {
        // Closed-form cell average of sin(pi x): (2 / (pi h)) sin(pi x_c) sin(pi h / 2).
        let g = Grid::square(1, 16, 0.0, 1.0).unwrap();
        let p = project_scalar(&|x| (PI * x[0]).sin(), &g, 3);
        let h = g.spacing()[0];
        for k in 0..16 {
            let xc = g.cell_center(k)[0];
            let exact = 2.0 / (PI * h) * (PI * xc).sin() * (PI * h / 2.0).sin();
            assert!(
                (p[k] - exact).abs() < 1e-10,
                "cell {k}: {} vs {exact}",
                p[k]
            );
        }
    }

    #[test]
    fn projection_is_linear() {
        let g = Grid::square(2, 7, -1.0, 1.0).unwrap();
        let f = |x: &[f64]| (PI * x[0]).sin() * (2.0 * PI * x[1]).cos();
        let gfun = |x: &[f64]| x[0] * x[0] - 0.5 * x[1];
        let alpha = 1.7;
        let beta = -0.3;
        let combo = project_scalar(&|x| alpha * f(x) + beta * gfun(x), &g, 3);
        let pf = project_scalar(&f, &g, 3);
        let pg = project_scalar(&gfun, &g, 3);
        for k in 0..g.n_cells() {
            assert!((combo[k] - (alpha * pf[k] + beta * pg[k])).abs() < 1e-14);
        }
    }

    #[test]
    fn divergence_of_constant_field() {
        let g = Grid::square(2, 6, 0.0, 1.0).unwrap();
        let field = Field::fill(g, [0.7, -0.3, 0.0]);
        let div = discrete_divergence(&field);
        for v in div.iter() {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn divergence_matches_central_difference() {
        // g = (sin(2 pi x1), 0): the face-average divergence collapses to
        // the central difference (g1(x+h) - g1(x-h)) / (2h).
        let g = Grid::square(2, 8, 0.0, 1.0).unwrap();
        let field = Field::from_fn(g, |k| {
            let x = g.cell_center(k);
            [(2.0 * PI * x[0]).sin(), 0.0, 0.0]
        });
        let div = discrete_divergence(&field);
        let h = g.spacing()[0];
        for k in 0..g.n_cells() {
            let x = g.cell_center(k);
            let up = (2.0 * PI * (x[0] + h)).sin();
            let dn = (2.0 * PI * (x[0] - h)).sin();
            let central = (up - dn) / (2.0 * h);
            assert!((div[k] - central).abs() < 1e-13);
        }
    }

    #[test]
    fn global_gauss_identity() {
        // sum_K |K| (div_h g)_K = 0 for arbitrary periodic fields.
        let g = Grid::new(&[5, 9], &[0.0, 0.0], &[2.0, 1.0]).unwrap();
        let mut rng = crate::rng::SplitMix64::new(17);
        let field = Field::from_fn(g, |_| [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0]);
        let div = discrete_divergence(&field);
        let norm: f64 = field.iter().map(|v| v[0].abs() + v[1].abs()).sum();
        let total: f64 = div.iter().map(|v| v * g.cell_volume()).sum();
        assert!(total.abs() <= 1e-13 * norm.max(1.0));
    }
}
