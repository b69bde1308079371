//! Pruned 3D FFTs between a cube of retained modes and a uniform grid.
//!
//! Only the lines that can carry nonzero data are transformed: along the
//! first pass `(2K+1)^2` lines, then `(2K+1) M` lines, then `M^2` lines.
//! Physical arrays are laid out `[z][y][x]` (x fastest).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct GridPlan {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan_cache() -> &'static Mutex<HashMap<usize, Arc<GridPlan>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GridPlan>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared plan for grid size `m`, created on first use.
pub(crate) fn grid_plan(m: usize) -> Arc<GridPlan> {
    let mut cache = plan_cache().lock().expect("fft plan cache poisoned");
    cache
        .entry(m)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(GridPlan {
                m,
                forward: planner.plan_fft_forward(m),
                inverse: planner.plan_fft_inverse(m),
            })
        })
        .clone()
}

#[inline]
fn wrap(k: i64, m: usize) -> usize {
    if k >= 0 {
        k as usize
    } else {
        (m as i64 + k) as usize
    }
}

fn run_batch(fft: &dyn Fft<f64>, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
    let need = fft.get_inplace_scratch_len();
    if scratch.len() < need {
        scratch.resize(need, Complex64::new(0.0, 0.0));
    }
    fft.process_with_scratch(buf, &mut scratch[..need]);
}

impl GridPlan {
    /// Evaluates `sum_k c_k e^{i k.x}` on the grid for a cube of modes
    /// `|k_i| <= k_max` stored lexicographically.
    pub(crate) fn synthesize(&self, k_max: usize, cube: &[Complex64]) -> Vec<Complex64> {
        let m = self.m;
        let n = 2 * k_max + 1;
        assert!(m >= n, "grid {m} cannot hold modes up to {k_max}");
        assert_eq!(cube.len(), n * n * n);
        let zero = Complex64::new(0.0, 0.0);
        let kk = k_max as i64;
        let mut scratch = Vec::new();

        // along z: [a][b][z]
        let mut b1 = vec![zero; n * n * m];
        for ab in 0..n * n {
            let line = &mut b1[ab * m..(ab + 1) * m];
            for c in 0..n {
                line[wrap(c as i64 - kk, m)] = cube[ab * n + c];
            }
        }
        run_batch(self.inverse.as_ref(), &mut b1, &mut scratch);

        // along y: [a][z][y]
        let mut b2 = vec![zero; n * m * m];
        for a in 0..n {
            for b in 0..n {
                let yb = wrap(b as i64 - kk, m);
                let src = &b1[(a * n + b) * m..(a * n + b + 1) * m];
                for (z, &v) in src.iter().enumerate() {
                    b2[(a * m + z) * m + yb] = v;
                }
            }
        }
        drop(b1);
        run_batch(self.inverse.as_ref(), &mut b2, &mut scratch);

        // along x: [z][y][x]
        let mut out = vec![zero; m * m * m];
        for a in 0..n {
            let xa = wrap(a as i64 - kk, m);
            let src = &b2[a * m * m..(a + 1) * m * m];
            for (zy, &v) in src.iter().enumerate() {
                out[zy * m + xa] = v;
            }
        }
        drop(b2);
        run_batch(self.inverse.as_ref(), &mut out, &mut scratch);
        out
    }

    /// Inverse of [`synthesize`](Self::synthesize) restricted to the cube:
    /// returns `(1/M^3) sum_x f(x) e^{-i k.x}` for `|k_i| <= k_max`.
    pub(crate) fn analyze(&self, k_max: usize, mut grid: Vec<Complex64>) -> Vec<Complex64> {
        let m = self.m;
        let n = 2 * k_max + 1;
        assert!(m >= n, "grid {m} cannot hold modes up to {k_max}");
        assert_eq!(grid.len(), m * m * m);
        let zero = Complex64::new(0.0, 0.0);
        let kk = k_max as i64;
        let mut scratch = Vec::new();

        run_batch(self.forward.as_ref(), &mut grid, &mut scratch);

        // keep retained kx; lines along y: [a][z][y]
        let mut c1 = vec![zero; n * m * m];
        for a in 0..n {
            let xa = wrap(a as i64 - kk, m);
            let dst = &mut c1[a * m * m..(a + 1) * m * m];
            for (zy, d) in dst.iter_mut().enumerate() {
                // dst index is z*m + y, grid index (z*m + y)*m + x
                *d = grid[zy * m + xa];
            }
        }
        // c1 currently holds [a][z][y] with y fastest since zy = z*m + y.
        drop(grid);
        run_batch(self.forward.as_ref(), &mut c1, &mut scratch);

        // keep retained ky; lines along z: [a][b][z]
        let mut c2 = vec![zero; n * n * m];
        for a in 0..n {
            for b in 0..n {
                let yb = wrap(b as i64 - kk, m);
                let dst = &mut c2[(a * n + b) * m..(a * n + b + 1) * m];
                for (z, d) in dst.iter_mut().enumerate() {
                    *d = c1[(a * m + z) * m + yb];
                }
            }
        }
        drop(c1);
        run_batch(self.forward.as_ref(), &mut c2, &mut scratch);

        let norm = 1.0 / (m * m * m) as f64;
        let mut cube = vec![zero; n * n * n];
        for ab in 0..n * n {
            for c in 0..n {
                cube[ab * n + c] = c2[ab * m + wrap(c as i64 - kk, m)] * norm;
            }
        }
        cube
    }
}
