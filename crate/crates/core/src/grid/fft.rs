use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

/// Unnormalized N-dimensional FFT on a cube of side `n`, row-major layout.
#[derive(Clone)]
pub(crate) struct CubeFft {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CubeFft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CubeFft")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl CubeFft {
    pub(crate) fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.forward);
    }

    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inverse);
    }

    fn run(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(buf.len(), self.len());
        // rustfft transforms every contiguous chunk of length n
        plan.process(buf);
        if self.dim == 2 {
            transpose_square(buf, self.n);
            plan.process(buf);
            transpose_square(buf, self.n);
        }
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Real-input FFT on a cube of side `n`. Spectra use the half layout:
/// `n^{N−1}` rows of `n/2 + 1` modes along the last axis.
#[derive(Clone)]
pub(crate) struct RealCubeFft {
    dim: usize,
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    column_forward: Arc<dyn Fft<f64>>,
    column_inverse: Arc<dyn Fft<f64>>,
    workspace: Arc<Mutex<Workspace>>,
}

/// Buffers reused across `filter` calls.
#[derive(Default)]
struct Workspace {
    spec: Vec<Complex64>,
    scratch: Vec<Complex64>,
    column: Vec<Complex64>,
}

impl fmt::Debug for RealCubeFft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealCubeFft")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl RealCubeFft {
    pub(crate) fn new(dim: usize, n: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::new();
        Self {
            dim,
            n,
            r2c: real.plan_fft_forward(n),
            c2r: real.plan_fft_inverse(n),
            column_forward: planner.plan_fft_forward(n),
            column_inverse: planner.plan_fft_inverse(n),
            workspace: Arc::new(Mutex::new(Workspace::default())),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    fn half(&self) -> usize {
        self.n / 2 + 1
    }

    fn rows(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            self.n
        }
    }

    /// Restrict a spectrum given on the full mode layout to the half layout.
    pub(crate) fn half_spectrum(&self, full: &[f64]) -> Vec<f64> {
        debug_assert_eq!(full.len(), self.len());
        let h = self.half();
        (0..self.rows())
            .flat_map(|r| (0..h).map(move |c| r * self.n + c))
            .map(|i| full[i])
            .collect()
    }

    /// Unnormalized forward transform; `input` is used as scratch.
    pub(crate) fn forward(&self, input: &mut [f64]) -> Vec<Complex64> {
        let mut spec = vec![Complex64::new(0.0, 0.0); self.rows() * self.half()];
        let mut ws = Workspace::default();
        self.forward_into(input, &mut spec, &mut ws);
        spec
    }

    /// Unnormalized inverse transform of a half-layout spectrum of a real field;
    /// `spec` is used as scratch.
    #[cfg(test)]
    pub(crate) fn inverse(&self, spec: &mut [Complex64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let mut ws = Workspace::default();
        self.inverse_into(spec, &mut out, &mut ws);
        out
    }

    /// `F⁻¹(multiplier · F values)` for a real multiplier in the half layout.
    pub(crate) fn filter(&self, values: &[f64], multiplier: &[f64]) -> Vec<f64> {
        let mut out = values.to_vec();
        self.filter_in_place(&mut out, multiplier);
        out
    }

    pub(crate) fn filter_in_place(&self, values: &mut [f64], multiplier: &[f64]) {
        let mut guard = self.workspace.lock().unwrap_or_else(|e| e.into_inner());
        let ws = &mut *guard;
        let mut spec = std::mem::take(&mut ws.spec);
        spec.resize(self.rows() * self.half(), Complex64::new(0.0, 0.0));
        self.forward_into(values, &mut spec, ws);
        let norm = 1.0 / self.len() as f64;
        for (c, &s) in spec.iter_mut().zip(multiplier) {
            *c *= s * norm;
        }
        self.inverse_into(&mut spec, values, ws);
        ws.spec = spec;
    }

    fn forward_into(&self, input: &mut [f64], spec: &mut [Complex64], ws: &mut Workspace) {
        debug_assert_eq!(input.len(), self.len());
        let (n, h) = (self.n, self.half());
        ws.scratch.resize(self.r2c.get_scratch_len(), Complex64::new(0.0, 0.0));
        for (row, out) in input.chunks_exact_mut(n).zip(spec.chunks_exact_mut(h)) {
            self.r2c
                .process_with_scratch(row, out, &mut ws.scratch)
                .expect("buffer sizes match the plan");
        }
        if self.dim == 2 {
            self.columns(spec, &self.column_forward, ws);
        }
    }

    fn inverse_into(&self, spec: &mut [Complex64], out: &mut [f64], ws: &mut Workspace) {
        let (n, h) = (self.n, self.half());
        debug_assert_eq!(spec.len(), self.rows() * h);
        if self.dim == 2 {
            self.columns(spec, &self.column_inverse, ws);
        }
        ws.scratch.resize(self.c2r.get_scratch_len(), Complex64::new(0.0, 0.0));
        for (row, dst) in spec.chunks_exact_mut(h).zip(out.chunks_exact_mut(n)) {
            // the data are real: drop rounding noise in the self-conjugate modes
            row[0].im = 0.0;
            row[h - 1].im = 0.0;
            self.c2r
                .process_with_scratch(row, dst, &mut ws.scratch)
                .expect("buffer sizes match the plan");
        }
    }

    fn columns(&self, spec: &mut [Complex64], plan: &Arc<dyn Fft<f64>>, ws: &mut Workspace) {
        let (n, h) = (self.n, self.half());
        ws.column.resize(n, Complex64::new(0.0, 0.0));
        ws.scratch
            .resize(plan.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        for c in 0..h {
            for r in 0..n {
                ws.column[r] = spec[r * h + c];
            }
            plan.process_with_scratch(&mut ws.column, &mut ws.scratch);
            for r in 0..n {
                spec[r * h + c] = ws.column[r];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_transform_matches_complex() {
        for dim in [1, 2] {
            let n: usize = 16;
            let len = n.pow(dim as u32);
            let values: Vec<f64> = (0..len).map(|i| ((i * 7919) % 31) as f64 - 15.0).collect();
            let mut full: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            CubeFft::new(dim, n).forward(&mut full);
            let real = RealCubeFft::new(dim, n);
            let half = real.forward(&mut values.clone());
            let h = n / 2 + 1;
            for (i, c) in half.iter().enumerate() {
                let (r, k) = (i / h, i % h);
                let j = if dim == 1 { k } else { r * n + k };
                assert!((c - full[j]).norm() < 1e-10);
            }
            let back = real.inverse(&mut half.clone());
            for (a, b) in back.iter().zip(&values) {
                assert!((a / len as f64 - b).abs() < 1e-12);
            }
        }
    }
}
