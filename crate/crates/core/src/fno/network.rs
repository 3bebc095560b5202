//! Forward pass and reverse-mode gradients.
//!
//! ```text
//! h₀ = lift(x)
//! z_l = SpectralConv_l(h_l) + Bypass_l(h_l)
//! h_{l+1} = gelu(z_l)            (l < L-1),  h_L = z_{L-1}
//! y = P₂ · gelu(P₁ h_L + b₁) + b₂
//! ```
//!
//! The spectral convolution is `Re F⁻¹[W(k) · F[h](k)]` over the retained
//! frequencies. With the convention `G = ∂L/∂Re + i ∂L/∂Im` its adjoint is:
//! `G_Ŷ = F[g]/N²`, `∂L/∂W = G_Ŷ · conj(X̂)`, `G_X̂ = Wᴴ G_Ŷ`, and
//! `∂L/∂h = Re Σ_k G_X̂(k) e^{+iθ}`.

use rustfft::num_complex::Complex;

use crate::error::{LabError, Result};
use crate::grid::{Field2D, Grid};

use super::encode::MultiField;
use super::model::{bypass_b, bypass_w, spec_im, spec_re, FnoModel, Gradients, LIFT_B, LIFT_W};
use super::real::{gemm, gemm_nt, MatRef, Real};
use super::spectral::SpectralPlan;

const GELU_C: f64 = 0.797_884_560_802_865_4; // √(2/π)
const GELU_A: f64 = 0.044_715;

/// Tanh-form GELU.
#[inline]
pub fn gelu<T: Real>(x: T) -> T {
    let c = T::lit(GELU_C);
    let a = T::lit(GELU_A);
    let half = T::lit(0.5);
    let t = (c * (x + a * x * x * x)).tanh_act();
    half * x * (T::one() + t)
}

/// Derivative of [`gelu`].
#[inline]
pub fn gelu_grad<T: Real>(x: T) -> T {
    let c = T::lit(GELU_C);
    let a = T::lit(GELU_A);
    let half = T::lit(0.5);
    let t = (c * (x + a * x * x * x)).tanh_act();
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::lit(3.0) * a * x * x)
}

/// Everything the backward pass needs from the forward pass.
struct Tape<T> {
    x0: Vec<T>,
    /// Layer inputs `h_0 … h_L`.
    hs: Vec<Vec<T>>,
    /// Pre-activations `z_0 … z_{L-2}` (the last layer has no activation).
    zs: Vec<Vec<T>>,
    /// Retained input spectra per layer, `[q][c][b]`.
    spectra: Vec<(Vec<T>, Vec<T>)>,
    proj_pre: Vec<T>,
    proj_act: Vec<T>,
}

struct Dims {
    n: usize,
    batch: usize,
    points: usize,
}

impl Dims {
    fn cols(&self) -> usize {
        self.batch * self.points
    }
}

fn add_row_bias<T: Real>(out: &mut [T], bias: &[T], cols: usize) {
    for (row, &b) in out.chunks_exact_mut(cols).zip(bias) {
        for v in row {
            *v += b;
        }
    }
}

fn row_sums<T: Real>(m: &[T], cols: usize, out: &mut [T]) {
    for (row, o) in m.chunks_exact(cols).zip(out.iter_mut()) {
        *o = row.iter().copied().sum();
    }
}

impl<T: Real> FnoModel<T> {
    fn assemble(&self, inputs: &[MultiField]) -> Result<(Grid, Dims, Vec<T>)> {
        let first = inputs.first().ok_or(LabError::Empty("input batch"))?;
        let grid = first.grid();
        let cfg = self.config();
        cfg.validate_for_grid(grid.n())?;
        let points = grid.len();
        let batch = inputs.len();
        let c_in = cfg.in_channels;
        let mut x0 = vec![T::zero(); c_in * batch * points];
        for (b, inp) in inputs.iter().enumerate() {
            grid.check_same(&inp.grid())?;
            if inp.channels() != c_in {
                return Err(LabError::ShapeMismatch(format!(
                    "input has {} channels, model expects {c_in}",
                    inp.channels()
                )));
            }
            for c in 0..c_in {
                let dst = &mut x0[(c * batch + b) * points..][..points];
                for (d, &s) in dst.iter_mut().zip(inp.channel(c)) {
                    *d = T::lit(s);
                }
            }
        }
        Ok((
            grid,
            Dims {
                n: grid.n(),
                batch,
                points,
            },
            x0,
        ))
    }

    fn spectral_forward(&self, layer: usize, h: &[T], dims: &Dims, plan: &mut SpectralPlan<T>) -> (Vec<T>, Vec<T>, Vec<T>) {
        let w = self.config().width;
        let bsz = dims.batch;
        let p = dims.points;
        let q = plan.retained_len();
        let mut xr = vec![T::zero(); q * w * bsz];
        let mut xi = vec![T::zero(); q * w * bsz];
        forward_planes(plan, h, w * bsz, p, T::one(), &mut xr, &mut xi);

        let wre = self.data(spec_re(layer));
        let wim = self.data(spec_im(layer));
        let mut yr = vec![T::zero(); q * w * bsz];
        let mut yi = vec![T::zero(); q * w * bsz];
        for k in 0..q {
            let wr = &wre[k * w * w..(k + 1) * w * w];
            let wi = &wim[k * w * w..(k + 1) * w * w];
            let xr_k = &xr[k * w * bsz..(k + 1) * w * bsz];
            let xi_k = &xi[k * w * bsz..(k + 1) * w * bsz];
            let yr_k = &mut yr[k * w * bsz..(k + 1) * w * bsz];
            let yi_k = &mut yi[k * w * bsz..(k + 1) * w * bsz];
            complex_mix(wr, wi, xr_k, xi_k, yr_k, yi_k, w, bsz);
        }

        let scale = T::one() / T::lit(p as f64);
        let mut out = vec![T::zero(); w * bsz * p];
        inverse_planes(plan, &yr, &yi, w * bsz, p, scale, &mut out, false);
        (out, xr, xi)
    }

    #[allow(clippy::too_many_arguments)]
    fn spectral_backward(
        &self,
        layer: usize,
        grad_out: &[T],
        spectrum: &(Vec<T>, Vec<T>),
        dims: &Dims,
        plan: &mut SpectralPlan<T>,
        grads: &mut Gradients<T>,
        grad_in: &mut [T],
    ) {
        let w = self.config().width;
        let bsz = dims.batch;
        let p = dims.points;
        let q = plan.retained_len();
        let scale = T::one() / T::lit(p as f64);
        let mut gr = vec![T::zero(); q * w * bsz];
        let mut gi = vec![T::zero(); q * w * bsz];
        forward_planes(plan, grad_out, w * bsz, p, scale, &mut gr, &mut gi);

        let (xr, xi) = spectrum;
        let wre = self.data(spec_re(layer));
        let wim = self.data(spec_im(layer));
        let mut gxr = vec![T::zero(); q * w * bsz];
        let mut gxi = vec![T::zero(); q * w * bsz];
        {
            let (head, tail) = grads.arrays.split_at_mut(spec_im(layer));
            let dwr = &mut head[spec_re(layer)];
            let dwi = &mut tail[0];
            for k in 0..q {
                let blk = k * w * bsz..(k + 1) * w * bsz;
                let wblk = k * w * w..(k + 1) * w * w;
                complex_weight_grad(
                    &gr[blk.clone()],
                    &gi[blk.clone()],
                    &xr[blk.clone()],
                    &xi[blk.clone()],
                    &mut dwr[wblk.clone()],
                    &mut dwi[wblk.clone()],
                    w,
                    bsz,
                );
                complex_mix_adjoint(
                    &wre[wblk.clone()],
                    &wim[wblk],
                    &gr[blk.clone()],
                    &gi[blk.clone()],
                    &mut gxr[blk.clone()],
                    &mut gxi[blk],
                    w,
                    bsz,
                );
            }
        }

        inverse_planes(plan, &gxr, &gxi, w * bsz, p, T::one(), grad_in, true);
    }

    fn run(&self, x0: Vec<T>, dims: &Dims, keep_tape: bool) -> Result<(Vec<T>, Option<Tape<T>>)> {
        let cfg = *self.config();
        let w = cfg.width;
        let cols = dims.cols();
        let mut plan = SpectralPlan::<T>::new(dims.n, cfg.modes);

        let mut h = vec![T::zero(); w * cols];
        gemm(
            MatRef::new(self.data(LIFT_W), w, cfg.in_channels),
            MatRef::new(&x0, cfg.in_channels, cols),
            T::zero(),
            &mut h,
        );
        add_row_bias(&mut h, self.data(LIFT_B), cols);

        let mut hs = Vec::new();
        let mut zs = Vec::new();
        let mut spectra = Vec::new();
        for l in 0..cfg.n_layers {
            let (mut z, xr, xi) = self.spectral_forward(l, &h, dims, &mut plan);
            gemm(MatRef::new(self.data(bypass_w(l)), w, w), MatRef::new(&h, w, cols), T::one(), &mut z);
            add_row_bias(&mut z, self.data(bypass_b(l)), cols);
            let is_last = l + 1 == cfg.n_layers;
            let next = if is_last { z.clone() } else { z.iter().map(|&v| gelu(v)).collect() };
            if keep_tape {
                hs.push(std::mem::replace(&mut h, next));
                spectra.push((xr, xi));
                if !is_last {
                    zs.push(z);
                }
            } else {
                h = next;
            }
        }

        let pi = self.proj_index();
        let ph = cfg.projection_hidden;
        let mut pre = vec![T::zero(); ph * cols];
        gemm(MatRef::new(self.data(pi), ph, w), MatRef::new(&h, w, cols), T::zero(), &mut pre);
        add_row_bias(&mut pre, self.data(pi + 1), cols);
        let act: Vec<T> = pre.iter().map(|&v| gelu(v)).collect();
        let mut y = vec![self.data(pi + 3)[0]; cols];
        for (&w_r, row) in self.data(pi + 2).iter().zip(act.chunks_exact(cols)) {
            for (yv, &a) in y.iter_mut().zip(row) {
                *yv += w_r * a;
            }
        }

        if !y.iter().all(|v| v.is_finite()) {
            return Err(LabError::NonFinite("network activations".into()));
        }
        let tape = keep_tape.then(|| {
            hs.push(h);
            Tape {
                x0,
                hs,
                zs,
                spectra,
                proj_pre: pre,
                proj_act: act,
            }
        });
        Ok((y, tape))
    }

    /// Prediction for one input.
    pub fn forward(&self, input: &MultiField) -> Result<Field2D> {
        Ok(self.forward_batch(std::slice::from_ref(input))?.remove(0))
    }

    pub fn forward_batch(&self, inputs: &[MultiField]) -> Result<Vec<Field2D>> {
        let (grid, dims, x0) = self.assemble(inputs)?;
        let (y, _) = self.run(x0, &dims, false)?;
        Ok(y.chunks_exact(dims.points)
            .map(|c| Field2D::from_raw(grid, c.iter().map(|v| v.to_f64_lossy()).collect()))
            .collect())
    }

    fn check_targets(&self, dims: &Dims, grid: Grid, targets: &[Field2D]) -> Result<()> {
        if targets.len() != dims.batch {
            return Err(LabError::LengthMismatch {
                expected: dims.batch,
                found: targets.len(),
            });
        }
        for t in targets {
            grid.check_same(&t.grid())?;
        }
        Ok(())
    }

    /// Mean squared error over batch and nodes.
    pub fn loss(&self, inputs: &[MultiField], targets: &[Field2D]) -> Result<f64> {
        let (grid, dims, x0) = self.assemble(inputs)?;
        self.check_targets(&dims, grid, targets)?;
        let (y, _) = self.run(x0, &dims, false)?;
        Ok(mse(&y, targets, dims.points))
    }

    /// Loss and exact gradients for every parameter array.
    pub fn loss_and_gradients(&self, inputs: &[MultiField], targets: &[Field2D]) -> Result<(f64, Gradients<T>)> {
        let (grid, dims, x0) = self.assemble(inputs)?;
        self.check_targets(&dims, grid, targets)?;
        let (y, tape) = self.run(x0, &dims, true)?;
        let tape = tape.expect("tape requested");
        let loss = mse(&y, targets, dims.points);

        let cols = dims.cols();
        let cfg = *self.config();
        let w = cfg.width;
        let ph = cfg.projection_hidden;
        let pi = self.proj_index();
        let mut grads = self.zero_gradients();

        let norm = T::lit(2.0 / cols as f64);
        let mut dy = vec![T::zero(); cols];
        for (b, t) in targets.iter().enumerate() {
            for (p, &tv) in t.values().iter().enumerate() {
                let k = b * dims.points + p;
                dy[k] = norm * (y[k] - T::lit(tv));
            }
        }

        // Projection head.
        gemm_nt(&dy, 1, &tape.proj_act, ph, cols, T::zero(), &mut grads.arrays[pi + 2]);
        grads.arrays[pi + 3][0] = dy.iter().copied().sum();
        let mut dpre = vec![T::zero(); ph * cols];
        for (r, (d_row, z_row)) in dpre.chunks_exact_mut(cols).zip(tape.proj_pre.chunks_exact(cols)).enumerate() {
            let w_r = self.data(pi + 2)[r];
            for ((d, &g), &z) in d_row.iter_mut().zip(&dy).zip(z_row) {
                *d = w_r * g * gelu_grad(z);
            }
        }
        let h_last = &tape.hs[cfg.n_layers];
        gemm_nt(&dpre, ph, h_last, w, cols, T::zero(), &mut grads.arrays[pi]);
        row_sums(&dpre, cols, &mut grads.arrays[pi + 1]);
        let mut dh = vec![T::zero(); w * cols];
        gemm(MatRef::new(self.data(pi), ph, w).t(), MatRef::new(&dpre, ph, cols), T::zero(), &mut dh);
        drop(dpre);

        let mut plan = SpectralPlan::<T>::new(dims.n, cfg.modes);
        for l in (0..cfg.n_layers).rev() {
            let mut dz = dh;
            if l + 1 < cfg.n_layers {
                for (d, &z) in dz.iter_mut().zip(&tape.zs[l]) {
                    *d *= gelu_grad(z);
                }
            }
            let h_in = &tape.hs[l];
            gemm_nt(&dz, w, h_in, w, cols, T::zero(), &mut grads.arrays[bypass_w(l)]);
            row_sums(&dz, cols, &mut grads.arrays[bypass_b(l)]);
            let mut dh_in = vec![T::zero(); w * cols];
            gemm(MatRef::new(self.data(bypass_w(l)), w, w).t(), MatRef::new(&dz, w, cols), T::zero(), &mut dh_in);
            self.spectral_backward(l, &dz, &tape.spectra[l], &dims, &mut plan, &mut grads, &mut dh_in);
            dh = dh_in;
        }

        gemm_nt(&dh, w, &tape.x0, cfg.in_channels, cols, T::zero(), &mut grads.arrays[LIFT_W]);
        row_sums(&dh, cols, &mut grads.arrays[LIFT_B]);
        Ok((loss, grads))
    }
}

/// Retained spectra of `count` consecutive planes, written as `[k][plane]`.
fn forward_planes<T: Real>(plan: &mut SpectralPlan<T>, planes: &[T], count: usize, p: usize, scale: T, re: &mut [T], im: &mut [T]) {
    let q = plan.retained_len();
    let mut sa = vec![Complex::<T>::default(); q];
    let mut sb = vec![Complex::<T>::default(); q];
    let mut t = 0;
    while t < count {
        let paired = t + 1 < count;
        if paired {
            plan.forward_retained_pair(&planes[t * p..][..p], &planes[(t + 1) * p..][..p], scale, &mut sa, &mut sb);
        } else {
            plan.forward_retained(&planes[t * p..][..p], scale, &mut sa);
        }
        for k in 0..q {
            re[k * count + t] = sa[k].re;
            im[k * count + t] = sa[k].im;
            if paired {
                re[k * count + t + 1] = sb[k].re;
                im[k * count + t + 1] = sb[k].im;
            }
        }
        t += if paired { 2 } else { 1 };
    }
}

/// Inverse of `[k][plane]` spectra into consecutive real planes.
#[allow(clippy::too_many_arguments)]
fn inverse_planes<T: Real>(
    plan: &mut SpectralPlan<T>,
    re: &[T],
    im: &[T],
    count: usize,
    p: usize,
    scale: T,
    out: &mut [T],
    accumulate: bool,
) {
    let q = plan.retained_len();
    let mut sa = vec![Complex::<T>::default(); q];
    let mut sb = vec![Complex::<T>::default(); q];
    let mut t = 0;
    while t < count {
        for k in 0..q {
            sa[k] = Complex::new(re[k * count + t], im[k * count + t]);
        }
        if t + 1 < count {
            for k in 0..q {
                sb[k] = Complex::new(re[k * count + t + 1], im[k * count + t + 1]);
            }
            let (head, tail) = out[t * p..].split_at_mut(p);
            plan.inverse_real_pair(&sa, &sb, scale, head, &mut tail[..p], accumulate);
            t += 2;
        } else {
            plan.inverse_real(&sa, scale, &mut out[t * p..][..p], accumulate);
            t += 1;
        }
    }
}

fn mse<T: Real>(y: &[T], targets: &[Field2D], points: usize) -> f64 {
    let mut acc = 0.0;
    for (b, t) in targets.iter().enumerate() {
        for (p, &tv) in t.values().iter().enumerate() {
            let d = y[b * points + p].to_f64_lossy() - tv;
            acc += d * d;
        }
    }
    acc / y.len() as f64
}

/// `Y[o][b] += Σ_i W[o][i] X[i][b]` for complex `W`, `X`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn complex_mix<T: Real>(wr: &[T], wi: &[T], xr: &[T], xi: &[T], yr: &mut [T], yi: &mut [T], w: usize, bsz: usize) {
    for o in 0..w {
        let yr_o = &mut yr[o * bsz..(o + 1) * bsz];
        let yi_o = &mut yi[o * bsz..(o + 1) * bsz];
        for i in 0..w {
            let (a, c) = (wr[o * w + i], wi[o * w + i]);
            let xr_i = &xr[i * bsz..(i + 1) * bsz];
            let xi_i = &xi[i * bsz..(i + 1) * bsz];
            for b in 0..bsz {
                yr_o[b] += a * xr_i[b] - c * xi_i[b];
                yi_o[b] += a * xi_i[b] + c * xr_i[b];
            }
        }
    }
}

/// `G_X[i][b] = Σ_o conj(W[o][i]) G_Y[o][b]`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn complex_mix_adjoint<T: Real>(wr: &[T], wi: &[T], gr: &[T], gi: &[T], xr: &mut [T], xi: &mut [T], w: usize, bsz: usize) {
    for o in 0..w {
        let gr_o = &gr[o * bsz..(o + 1) * bsz];
        let gi_o = &gi[o * bsz..(o + 1) * bsz];
        for i in 0..w {
            let (a, c) = (wr[o * w + i], wi[o * w + i]);
            let xr_i = &mut xr[i * bsz..(i + 1) * bsz];
            let xi_i = &mut xi[i * bsz..(i + 1) * bsz];
            for b in 0..bsz {
                xr_i[b] += a * gr_o[b] + c * gi_o[b];
                xi_i[b] += a * gi_o[b] - c * gr_o[b];
            }
        }
    }
}

/// `dW[o][i] += Σ_b G_Y[o][b] conj(X[i][b])`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn complex_weight_grad<T: Real>(gr: &[T], gi: &[T], xr: &[T], xi: &[T], dwr: &mut [T], dwi: &mut [T], w: usize, bsz: usize) {
    for o in 0..w {
        let gr_o = &gr[o * bsz..(o + 1) * bsz];
        let gi_o = &gi[o * bsz..(o + 1) * bsz];
        for i in 0..w {
            let xr_i = &xr[i * bsz..(i + 1) * bsz];
            let xi_i = &xi[i * bsz..(i + 1) * bsz];
            let (mut re, mut im) = (T::zero(), T::zero());
            for b in 0..bsz {
                re += gr_o[b] * xr_i[b] + gi_o[b] * xi_i[b];
                im += gi_o[b] * xr_i[b] - gr_o[b] * xi_i[b];
            }
            dwr[o * w + i] += re;
            dwi[o * w + i] += im;
        }
    }
}
