use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::fft::grid_plan;
use crate::error::{CbfError, Result};

/// Volume of the torus `[0, 2pi]^3`.
pub const TORUS_VOLUME: f64 = 8.0 * PI * PI * PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Retained mode cube `|k_i| <= k_max` together with the collocation grid size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Resolution {
    k_max: usize,
    grid: usize,
}

impl Resolution {
    pub fn new(k_max: usize, grid: usize) -> Result<Self> {
        if grid < 2 * k_max + 2 {
            return Err(CbfError::Resolution(format!(
                "grid size {grid} is below 2K+2 = {} for K = {k_max}",
                2 * k_max + 2
            )));
        }
        Ok(Self { k_max, grid })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Modes per axis, `2K + 1`.
    pub fn side(&self) -> usize {
        2 * self.k_max + 1
    }

    pub fn n_modes(&self) -> usize {
        self.side().pow(3)
    }

    /// Grid for quadratic products: `ceil(3N/2)`.
    pub fn quadratic_grid(&self) -> usize {
        (3 * self.grid).div_ceil(2)
    }

    /// Grid for the absorption term and `L^q` quadrature: `2N`.
    pub fn absorption_grid(&self) -> usize {
        2 * self.grid
    }

    /// Lexicographic index of wavevector `k`, if it lies in the cube.
    pub fn index(&self, k: [i64; 3]) -> Option<usize> {
        let kk = self.k_max as i64;
        if k.iter().any(|c| c.abs() > kk) {
            return None;
        }
        let n = self.side();
        let a = (k[0] + kk) as usize;
        let b = (k[1] + kk) as usize;
        let c = (k[2] + kk) as usize;
        Some((a * n + b) * n + c)
    }

    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let n = self.side();
        let kk = self.k_max as i64;
        let c = idx % n;
        let b = (idx / n) % n;
        let a = idx / (n * n);
        [a as i64 - kk, b as i64 - kk, c as i64 - kk]
    }

    /// Index of `-k` given the index of `k`.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        self.n_modes() - 1 - idx
    }

    pub fn wavevectors(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        (0..self.n_modes()).map(move |i| self.wavevector(i))
    }
}

/// Velocity field as Fourier coefficients `u(x) = sum_k c_k e^{i k.x}` over
/// the retained cube; components are stored as three separate blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    res: Resolution,
    comps: [Vec<Complex64>; 3],
}

impl SpectralField {
    pub fn zeros(res: Resolution) -> Self {
        let n = res.n_modes();
        Self {
            res,
            comps: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]],
        }
    }

    pub fn from_components(res: Resolution, comps: [Vec<Complex64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != res.n_modes() {
                return Err(CbfError::Resolution(format!(
                    "component has {} coefficients, cube holds {}",
                    c.len(),
                    res.n_modes()
                )));
            }
        }
        Ok(Self { res, comps })
    }

    /// Builds a field mode by mode from `f(k)`.
    pub fn from_modes(res: Resolution, mut f: impl FnMut([i64; 3]) -> [Complex64; 3]) -> Self {
        let mut out = Self::zeros(res);
        for idx in 0..res.n_modes() {
            let v = f(res.wavevector(idx));
            for (c, vc) in out.comps.iter_mut().zip(v) {
                c[idx] = vc;
            }
        }
        out
    }

    pub fn resolution(&self) -> Resolution {
        self.res
    }

    pub fn k_max(&self) -> usize {
        self.res.k_max
    }

    pub fn component(&self, i: usize) -> &[Complex64] {
        &self.comps[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.comps[i]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub fn coeff(&self, k: [i64; 3]) -> [Complex64; 3] {
        match self.res.index(k) {
            Some(i) => [self.comps[0][i], self.comps[1][i], self.comps[2][i]],
            None => [ZERO; 3],
        }
    }

    pub fn set_coeff(&mut self, k: [i64; 3], v: [Complex64; 3]) -> Result<()> {
        let i = self
            .res
            .index(k)
            .ok_or_else(|| CbfError::Resolution(format!("mode {k:?} outside cube K = {}", self.res.k_max)))?;
        for (c, vc) in self.comps.iter_mut().zip(v) {
            c[i] = vc;
        }
        Ok(())
    }

    /// Adds `v` at `k` and `conj(v)` at `-k`, keeping the field real.
    pub fn add_real_mode(&mut self, k: [i64; 3], v: [Complex64; 3]) -> Result<()> {
        let i = self
            .res
            .index(k)
            .ok_or_else(|| CbfError::Resolution(format!("mode {k:?} outside cube K = {}", self.res.k_max)))?;
        let j = self.res.mirror(i);
        for (c, vc) in self.comps.iter_mut().zip(v) {
            if i == j {
                c[i] += Complex64::new(2.0 * vc.re, 0.0);
            } else {
                c[i] += vc;
                c[j] += vc.conj();
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| *v == ZERO))
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.comps {
            for v in c.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        assert_eq!(self.res, other.res, "resolution mismatch");
        for (c, o) in self.comps.iter_mut().zip(&other.comps) {
            for (v, w) in c.iter_mut().zip(o) {
                *v += w * a;
            }
        }
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Multiplies every mode by `factor(k)` (the same for all components).
    pub fn map_modes(&mut self, mut factor: impl FnMut([i64; 3]) -> Complex64) {
        for idx in 0..self.res.n_modes() {
            let f = factor(self.res.wavevector(idx));
            for c in &mut self.comps {
                c[idx] *= f;
            }
        }
    }

    /// Copies the coefficients into a field of another resolution; modes that
    /// do not fit are dropped.
    pub fn resample(&self, res: Resolution) -> Self {
        let mut out = Self::zeros(res);
        let kk = self.res.k_max.min(res.k_max) as i64;
        for a in -kk..=kk {
            for b in -kk..=kk {
                for c in -kk..=kk {
                    let k = [a, b, c];
                    let (i, j) = (self.res.index(k).unwrap(), res.index(k).unwrap());
                    for comp in 0..3 {
                        out.comps[comp][j] = self.comps[comp][i];
                    }
                }
            }
        }
        out
    }

    /// Largest deviation from `c(-k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.comps {
            for i in 0..c.len() {
                let j = self.res.mirror(i);
                worst = worst.max((c[i] - c[j].conj()).norm());
            }
        }
        worst
    }

    /// `max_k |k . c(k)| / max_k |k| |c(k)|`, zero for the zero field.
    pub fn divergence_defect(&self) -> f64 {
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for idx in 0..self.res.n_modes() {
            let k = self.res.wavevector(idx);
            let mut div = ZERO;
            let mut amp = 0.0;
            for comp in 0..3 {
                div += self.comps[comp][idx] * k[comp] as f64;
                amp += self.comps[comp][idx].norm_sqr();
            }
            let kn = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
            num = num.max(div.norm());
            den = den.max(kn * amp.sqrt());
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    pub fn mean(&self) -> [Complex64; 3] {
        self.coeff([0, 0, 0])
    }

    /// Samples on the field's own collocation grid.
    pub fn to_physical(&self) -> PhysicalField {
        self.to_physical_on(self.res.grid)
    }

    /// Samples on an `m^3` grid; `m` must be at least `2K + 1`.
    pub fn to_physical_on(&self, m: usize) -> PhysicalField {
        let grids = synthesize_real(m, self.res.k_max, &[&self.comps[0], &self.comps[1], &self.comps[2]]);
        let mut it = grids.into_iter();
        PhysicalField {
            grid: m,
            comps: [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
        }
    }

    /// Projects grid samples onto the cube of `res`, using the samples' own grid.
    pub fn from_physical(phys: &PhysicalField, res: Resolution) -> Result<Self> {
        if phys.grid < res.side() {
            return Err(CbfError::Resolution(format!(
                "grid {} cannot resolve modes up to {}",
                phys.grid, res.k_max
            )));
        }
        let cubes = analyze_real(phys.grid, res.k_max, &[&phys.comps[0], &phys.comps[1], &phys.comps[2]]);
        let mut it = cubes.into_iter();
        Ok(Self {
            res,
            comps: [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()],
        })
    }
}

/// Transforms real-valued fields given by Hermitian cubes onto an `m^3` grid,
/// packing two fields per complex transform.
pub fn synthesize_real(m: usize, k_max: usize, cubes: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let plan = grid_plan(m);
    let mut out = Vec::with_capacity(cubes.len());
    for pair in cubes.chunks(2) {
        let packed: Vec<Complex64> = match pair {
            [a, b] => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| x + Complex64::new(-y.im, y.re))
                .collect(),
            [a] => a.to_vec(),
            _ => unreachable!(),
        };
        let grid = plan.synthesize(k_max, &packed);
        out.push(grid.iter().map(|z| z.re).collect());
        if pair.len() == 2 {
            out.push(grid.iter().map(|z| z.im).collect());
        }
    }
    out
}

/// Fourier coefficients on the cube `|k_i| <= k_max` of real grid functions.
/// The result is exactly Hermitian.
pub fn analyze_real(m: usize, k_max: usize, grids: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let plan = grid_plan(m);
    let n3 = (2 * k_max + 1).pow(3);
    let mut out = Vec::with_capacity(grids.len());
    for pair in grids.chunks(2) {
        let packed: Vec<Complex64> = match pair {
            [f, g] => f.iter().zip(g.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect(),
            [f] => f.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
            _ => unreachable!(),
        };
        let z = plan.analyze(k_max, packed);
        let mut first = vec![ZERO; n3];
        let mut second = vec![ZERO; n3];
        for i in 0..n3 {
            let zm = z[n3 - 1 - i].conj();
            first[i] = (z[i] + zm) * 0.5;
            // (z - zm) / 2i
            let d = z[i] - zm;
            second[i] = Complex64::new(d.im * 0.5, -d.re * 0.5);
        }
        out.push(first);
        if pair.len() == 2 {
            out.push(second);
        }
    }
    out
}

/// Real velocity samples on a uniform `m^3` grid over `[0, 2pi]^3`,
/// stored `[z][y][x]` with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: usize,
    comps: [Vec<f64>; 3],
}

impl PhysicalField {
    pub fn zeros(grid: usize) -> Self {
        let n = grid.pow(3);
        Self {
            grid,
            comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_components(grid: usize, comps: [Vec<f64>; 3]) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.pow(3)) {
            return Err(CbfError::Resolution(format!(
                "component length does not match grid {grid}^3"
            )));
        }
        Ok(Self { grid, comps })
    }

    /// Samples `f(x, y, z)` at the grid points `2 pi j / m`.
    pub fn from_fn(grid: usize, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        let h = 2.0 * PI / grid as f64;
        for iz in 0..grid {
            for iy in 0..grid {
                for ix in 0..grid {
                    let v = f(ix as f64 * h, iy as f64 * h, iz as f64 * h);
                    let idx = (iz * grid + iy) * grid + ix;
                    for c in 0..3 {
                        out.comps[c][idx] = v[c];
                    }
                }
            }
        }
        out
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.grid + iy) * self.grid + ix
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.comps[i]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps[0].is_empty()
    }

    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    /// Pointwise `|u|` at every grid point.
    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let [a, b, c] = self.at(i);
                (a * a + b * b + c * c).sqrt()
            })
            .collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        TORUS_VOLUME / self.len() as f64
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.comps {
            for v in c.iter_mut() {
                *v *= s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_rejects_small_grid() {
        assert!(Resolution::new(10, 21).is_err());
        assert!(Resolution::new(10, 22).is_ok());
    }

    #[test]
    fn mirror_index_negates_wavevector() {
        let res = Resolution::new(3, 8).unwrap();
        for i in 0..res.n_modes() {
            let k = res.wavevector(i);
            assert_eq!(res.wavevector(res.mirror(i)), [-k[0], -k[1], -k[2]]);
            assert_eq!(res.index(k), Some(i));
        }
    }

    #[test]
    fn shear_mode_samples_sin_y() {
        let res = Resolution::new(2, 8).unwrap();
        let mut f = SpectralField::zeros(res);
        // sin y = (e^{iy} - e^{-iy}) / 2i
        f.add_real_mode([0, 1, 0], [Complex64::new(0.0, -0.5), ZERO, ZERO])
            .unwrap();
        let p = f.to_physical();
        let h = 2.0 * PI / 8.0;
        for iz in 0..8 {
            for iy in 0..8 {
                for ix in 0..8 {
                    let v = p.at(p.index(ix, iy, iz));
                    assert!((v[0] - (iy as f64 * h).sin()).abs() < 1e-14);
                    assert!(v[1].abs() < 1e-15 && v[2].abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn packed_analysis_is_exactly_hermitian() {
        let res = Resolution::new(3, 8).unwrap();
        let p = PhysicalField::from_fn(8, |x, y, z| {
            [(x + 2.0 * y).sin() * z.cos(), (x * y).cos(), z.sin() + 0.3]
        });
        let f = SpectralField::from_physical(&p, res).unwrap();
        assert_eq!(f.hermitian_defect(), 0.0);
    }
}
