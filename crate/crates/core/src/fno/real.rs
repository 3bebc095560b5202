use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;
use rustfft::FftNum;

/// Working precision of the network: `f32` for training, `f64` for
/// gradient checks.
pub trait Real:
    Float + FftNum + Default + Debug + Display + AddAssign + SubAssign + MulAssign + Sum + Send + Sync + 'static
{
    /// Name written into checkpoints and logs.
    const NAME: &'static str;

    fn lit(v: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// Hyperbolic tangent used inside GELU. May trade the last few ulps for
    /// speed.
    fn tanh_act(self) -> Self {
        self.tanh()
    }

    /// `C ← α·A·B + β·C` on strided matrices (`A` is `m×k`, `B` is `k×n`).
    ///
    /// # Safety
    /// Every strided index addressed by the dimensions must lie inside the
    /// corresponding slice; [`gemm`] checks this before calling.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Real for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }

    /// Branch-free [13/6] rational approximation, accurate to a few ulps.
    #[inline]
    fn tanh_act(self) -> f32 {
        const CLAMP: f32 = 7.998_811_7;
        let x = if self < -CLAMP { -CLAMP } else if self > CLAMP { CLAMP } else { self };
        let x2 = x * x;
        let mut p = x2 * -2.760_768_5e-16 + 2.000_187_9e-13;
        p = p * x2 + -8.604_671_5e-11;
        p = p * x2 + 5.122_297e-8;
        p = p * x2 + 1.485_722_4e-5;
        p = p * x2 + 6.372_619_3e-4;
        p = p * x2 + 4.893_524_6e-3;
        p *= x;
        let mut q = x2 * 1.198_258_4e-6 + 1.185_347_1e-4;
        q = q * x2 + 2.268_434_6e-3;
        q = q * x2 + 4.893_525e-3;
        p / q
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn lit(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Strided read-only matrix view.
#[derive(Clone, Copy)]
pub(crate) struct MatRef<'a, T> {
    pub data: &'a [T],
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl<'a, T> MatRef<'a, T> {
    /// Row-major `rows × cols`.
    pub fn new(data: &'a [T], rows: usize, cols: usize) -> Self {
        MatRef {
            data,
            rows,
            cols,
            rs: cols,
            cs: 1,
        }
    }

    pub fn t(self) -> Self {
        MatRef {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }

    fn fits(&self) -> bool {
        self.rows == 0 || self.cols == 0 || (self.rows - 1) * self.rs + (self.cols - 1) * self.cs < self.data.len()
    }
}

/// `out ← A·B + β·out` with `out` row-major `A.rows × B.cols`.
pub(crate) fn gemm<T: Real>(a: MatRef<'_, T>, b: MatRef<'_, T>, beta: T, out: &mut [T]) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert!(a.fits() && b.fits(), "matrix view out of bounds");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert!(out.len() >= m * n, "output too small");
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: bounds of all three operands were checked above.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            T::one(),
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            out.as_mut_ptr(),
            n as isize,
            1,
        )
    }
}

/// `out ← A·Bᵀ + β·out` for row-major `A` (`m×k`) and `B` (`n×k`) with a
/// long shared dimension. Both operands are transposed in panels so GEMM
/// packing reads contiguous memory.
pub(crate) fn gemm_nt<T: Real>(a: &[T], m: usize, b: &[T], n: usize, k: usize, beta: T, out: &mut [T]) {
    const PANEL: usize = 2048;
    assert!(a.len() >= m * k && b.len() >= n * k && out.len() >= m * n);
    if k == 0 {
        for v in &mut out[..m * n] {
            *v *= beta;
        }
        return;
    }
    const TILE: usize = 16;
    let transpose_panel = |src: &[T], rows: usize, c0: usize, kc: usize, dst: &mut [T]| {
        for r0 in (0..rows).step_by(TILE) {
            for cb in (0..kc).step_by(TILE) {
                for r in r0..(r0 + TILE).min(rows) {
                    let row = &src[r * k + c0 + cb..r * k + c0 + (cb + TILE).min(kc)];
                    for (c, &v) in row.iter().enumerate() {
                        dst[(cb + c) * rows + r] = v;
                    }
                }
            }
        }
    };
    let mut at = vec![T::zero(); PANEL * m];
    let mut bt = vec![T::zero(); PANEL * n];
    let mut first = true;
    for c0 in (0..k).step_by(PANEL) {
        let kc = PANEL.min(k - c0);
        transpose_panel(a, m, c0, kc, &mut at);
        transpose_panel(b, n, c0, kc, &mut bt);
        let av = MatRef::new(&at[..kc * m], kc, m).t();
        gemm(av, MatRef::new(&bt[..kc * n], kc, n), if first { beta } else { T::one() }, out);
        first = false;
    }
}
