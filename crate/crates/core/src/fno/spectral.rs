//! Truncated 2-D DFTs of real planes.
//!
//! Only the retained frequencies `R = {0..m} ∪ {n-m..n}` are ever needed on
//! either axis, so the forward transform runs full row FFTs followed by column
//! FFTs on the `2m` retained columns, and the inverse mirrors that. Retained
//! spectra are stored `[kx_idx][ky_idx]` with `kx_idx, ky_idx ∈ 0..2m`; index
//! `r < m` maps to frequency `r`, index `r ≥ m` to `n - 2m + r`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::real::Real;

pub struct SpectralPlan<T: Real> {
    n: usize,
    modes: usize,
    retained: Vec<usize>,
    /// Retained frequencies closed under negation (adds `m` when `m < n/2`).
    extended: Vec<usize>,
    /// Position of `-k` inside `extended` for each entry.
    neg_ext: Vec<usize>,
    /// Position of each retained frequency inside `extended`.
    ret_in_ext: Vec<usize>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    rows: Vec<Complex<T>>,
    cols: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> SpectralPlan<T> {
    /// Requires `1 ≤ modes ≤ n/2`.
    pub fn new(n: usize, modes: usize) -> Self {
        assert!(modes >= 1 && modes <= n / 2, "modes must lie in 1..=n/2");
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let retained: Vec<usize> = (0..modes).chain(n - modes..n).collect();
        let mut extended = retained.clone();
        if !extended.contains(&modes) {
            extended.insert(modes, modes);
        }
        let pos = |f: usize| extended.iter().position(|&e| e == f).expect("closed under negation");
        let neg_ext = extended.iter().map(|&f| pos((n - f) % n)).collect();
        let ret_in_ext = retained.iter().map(|&f| pos(f)).collect();
        SpectralPlan {
            n,
            modes,
            neg_ext,
            ret_in_ext,
            retained,
            extended,
            fwd,
            inv,
            rows: vec![Complex::default(); n * n],
            cols: vec![Complex::default(); (2 * modes + 1) * n],
            scratch: vec![Complex::default(); scratch_len],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of retained coefficients, `(2m)²`.
    pub fn retained_len(&self) -> usize {
        4 * self.modes * self.modes
    }

    /// Frequencies kept along each axis.
    pub fn retained_frequencies(&self) -> &[usize] {
        &self.retained
    }

    /// Unnormalized forward DFT `X(k) = Σ_p x(p) e^{-iθ}` restricted to the
    /// retained block, scaled by `scale`.
    pub fn forward_retained(&mut self, plane: &[T], scale: T, out: &mut [Complex<T>]) {
        let (n, r) = (self.n, 2 * self.modes);
        debug_assert_eq!(plane.len(), n * n);
        debug_assert_eq!(out.len(), r * r);
        for (dst, &v) in self.rows.iter_mut().zip(plane) {
            *dst = Complex::new(v, T::zero());
        }
        self.fwd.process_with_scratch(&mut self.rows, &mut self.scratch);
        let cols = &mut self.cols[..r * n];
        for (ky_idx, &ky) in self.retained.iter().enumerate() {
            let col = &mut cols[ky_idx * n..(ky_idx + 1) * n];
            for (i, c) in col.iter_mut().enumerate() {
                *c = self.rows[i * n + ky];
            }
        }
        self.fwd.process_with_scratch(cols, &mut self.scratch);
        for (kx_idx, &kx) in self.retained.iter().enumerate() {
            for ky_idx in 0..r {
                out[kx_idx * r + ky_idx] = cols[ky_idx * n + kx] * scale;
            }
        }
    }

    /// `Re Σ_k S(k) e^{+iθ}` for a spectrum supported on the retained block,
    /// scaled by `scale`. With `accumulate` the result is added to `out`.
    pub fn inverse_real(&mut self, spec: &[Complex<T>], scale: T, out: &mut [T], accumulate: bool) {
        let (n, r) = (self.n, 2 * self.modes);
        debug_assert_eq!(spec.len(), r * r);
        debug_assert_eq!(out.len(), n * n);
        let cols = &mut self.cols[..r * n];
        cols.fill(Complex::default());
        for (kx_idx, &kx) in self.retained.iter().enumerate() {
            for ky_idx in 0..r {
                cols[ky_idx * n + kx] = spec[kx_idx * r + ky_idx];
            }
        }
        self.inv.process_with_scratch(cols, &mut self.scratch);
        self.rows.fill(Complex::default());
        for i in 0..n {
            let row = &mut self.rows[i * n..(i + 1) * n];
            for (ky_idx, &ky) in self.retained.iter().enumerate() {
                row[ky] = cols[ky_idx * n + i];
            }
        }
        self.inv.process_with_scratch(&mut self.rows, &mut self.scratch);
        if accumulate {
            for (o, c) in out.iter_mut().zip(&self.rows) {
                *o += c.re * scale;
            }
        } else {
            for (o, c) in out.iter_mut().zip(&self.rows) {
                *o = c.re * scale;
            }
        }
    }

    /// [`forward_retained`](Self::forward_retained) for two planes at once,
    /// packed as the real and imaginary parts of one complex transform.
    pub fn forward_retained_pair(&mut self, a: &[T], b: &[T], scale: T, out_a: &mut [Complex<T>], out_b: &mut [Complex<T>]) {
        let (n, r) = (self.n, 2 * self.modes);
        let e = self.extended.len();
        debug_assert!(a.len() == n * n && b.len() == n * n);
        for ((dst, &x), &y) in self.rows.iter_mut().zip(a).zip(b) {
            *dst = Complex::new(x, y);
        }
        self.fwd.process_with_scratch(&mut self.rows, &mut self.scratch);
        let cols = &mut self.cols[..e * n];
        for (c, &ky) in self.extended.iter().enumerate() {
            for (i, v) in cols[c * n..(c + 1) * n].iter_mut().enumerate() {
                *v = self.rows[i * n + ky];
            }
        }
        self.fwd.process_with_scratch(cols, &mut self.scratch);
        let half = T::lit(0.5) * scale;
        for (kx_idx, &kx) in self.retained.iter().enumerate() {
            let nkx = (n - kx) % n;
            for (ky_idx, &ey) in self.ret_in_ext.iter().enumerate() {
                let z = cols[ey * n + kx];
                let zn = cols[self.neg_ext[ey] * n + nkx].conj();
                let s = z + zn;
                let d = z - zn;
                out_a[kx_idx * r + ky_idx] = Complex::new(s.re * half, s.im * half);
                out_b[kx_idx * r + ky_idx] = Complex::new(d.im * half, -d.re * half);
            }
        }
    }

    /// [`inverse_real`](Self::inverse_real) for two spectra at once. Each
    /// spectrum is replaced by its Hermitian part, whose transform is real,
    /// so both results fit in one complex transform.
    pub fn inverse_real_pair(
        &mut self,
        spec_a: &[Complex<T>],
        spec_b: &[Complex<T>],
        scale: T,
        out_a: &mut [T],
        out_b: &mut [T],
        accumulate: bool,
    ) {
        let (n, r) = (self.n, 2 * self.modes);
        let e = self.extended.len();
        debug_assert!(spec_a.len() == r * r && spec_b.len() == r * r);
        // Dense copies on the extended block, zero where not retained.
        let mut ea = vec![Complex::<T>::default(); e * e];
        let mut eb = vec![Complex::<T>::default(); e * e];
        for (kx_idx, &ex) in self.ret_in_ext.iter().enumerate() {
            for (ky_idx, &ey) in self.ret_in_ext.iter().enumerate() {
                ea[ex * e + ey] = spec_a[kx_idx * r + ky_idx];
                eb[ex * e + ey] = spec_b[kx_idx * r + ky_idx];
            }
        }
        let half = T::lit(0.5);
        let cols = &mut self.cols[..e * n];
        cols.fill(Complex::default());
        for (ex, &kx) in self.extended.iter().enumerate() {
            let nx = self.neg_ext[ex];
            for ey in 0..e {
                let ny = self.neg_ext[ey];
                let ha = (ea[ex * e + ey] + ea[nx * e + ny].conj()) * half;
                let hb = (eb[ex * e + ey] + eb[nx * e + ny].conj()) * half;
                cols[ey * n + kx] = Complex::new(ha.re - hb.im, ha.im + hb.re);
            }
        }
        self.inv.process_with_scratch(cols, &mut self.scratch);
        self.rows.fill(Complex::default());
        for i in 0..n {
            let row = &mut self.rows[i * n..(i + 1) * n];
            for (c, &ky) in self.extended.iter().enumerate() {
                row[ky] = cols[c * n + i];
            }
        }
        self.inv.process_with_scratch(&mut self.rows, &mut self.scratch);
        if accumulate {
            for ((oa, ob), c) in out_a.iter_mut().zip(out_b.iter_mut()).zip(&self.rows) {
                *oa += c.re * scale;
                *ob += c.im * scale;
            }
        } else {
            for ((oa, ob), c) in out_a.iter_mut().zip(out_b.iter_mut()).zip(&self.rows) {
                *oa = c.re * scale;
                *ob = c.im * scale;
            }
        }
    }

    /// Like [`inverse_real`](Self::inverse_real) but also returns the largest
    /// imaginary magnitude before it is discarded.
    pub fn inverse_with_imag(&mut self, spec: &[Complex<T>], scale: T, out: &mut [T]) -> T {
        self.inverse_real(spec, scale, out, false);
        self.rows
            .iter()
            .fold(T::zero(), |acc, c| acc.max((c.im * scale).abs()))
    }
}
