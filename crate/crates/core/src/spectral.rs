//! Doubly periodic Fourier grid, spectral differential operators, dealiased
//! products and the diagonal elliptic solvers used by the time stepper.
//!
//! Fields live in two representations: [`ScalarField`] holds collocation
//! samples and [`Spectrum`] holds the half-spectrum of a real field. The
//! forward transform carries the `1/(nx*ny)` normalization, so a spectrum
//! coefficient is the amplitude of `exp(i(kx x + ky y))` and the inverse is a
//! plain sum.
//!
//! Spectrum storage is x-mode major: coefficient `(jx, jy)` sits at
//! `jx * ny + jy` with `jx in 0..=nx/2` and `jy in 0..ny`.
//!
//! All differentiation multipliers use wavenumbers with the Nyquist entry
//! zeroed, including the Laplacian, so `div(grad f) == lap f` holds exactly.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid needs an even mode count >= 4 per axis, got {nx}x{ny}")]
    BadModeCount { nx: usize, ny: usize },
    #[error("domain side lengths must be positive and finite, got {lx} x {ly}")]
    BadDomain { lx: f64, ly: f64 },
    #[error("sample count {got} does not match grid size {expected}")]
    SampleCount { expected: usize, got: usize },
    #[error("poisson right side has mean {mean:e}, exceeding tolerance {tol:e}")]
    Compatibility { mean: f64, tol: f64 },
}

/// FFT plans for one real 2D array shape.
struct Plans {
    nx: usize,
    ny: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(nx: usize, ny: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut complex = FftPlanner::<f64>::new();
        Plans {
            nx,
            ny,
            r2c: real.plan_fft_forward(nx),
            c2r: real.plan_fft_inverse(nx),
            fwd_y: complex.plan_fft_forward(ny),
            inv_y: complex.plan_fft_inverse(ny),
        }
    }

    fn nxh(&self) -> usize {
        self.nx / 2 + 1
    }

    fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        let (nx, ny, nxh) = (self.nx, self.ny, self.nxh());
        debug_assert_eq!(samples.len(), nx * ny);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); nxh * ny];
        let mut row_in = self.r2c.make_input_vec();
        let mut row_out = self.r2c.make_output_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for iy in 0..ny {
            row_in.copy_from_slice(&samples[iy * nx..(iy + 1) * nx]);
            self.r2c
                .process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                .expect("r2c buffer sizes come from the plan");
            for (jx, c) in row_out.iter().enumerate() {
                coeffs[jx * ny + iy] = *c;
            }
        }
        let mut yscratch = vec![Complex64::new(0.0, 0.0); self.fwd_y.get_inplace_scratch_len()];
        for col in coeffs.chunks_exact_mut(ny) {
            self.fwd_y.process_with_scratch(col, &mut yscratch);
        }
        let norm = 1.0 / (nx * ny) as f64;
        for c in coeffs.iter_mut() {
            *c *= norm;
        }
        // Columns kx = 0 and kx = nx/2 must be conjugate-symmetric in ky.
        // Roundoff breaks that, and the anti-symmetric part is invisible to
        // the inverse transform, so nonlinear terms cannot damp it; left in,
        // it grows without bound under the explicit linear part of F'.
        for jx in [0, nxh - 1] {
            let col = &mut coeffs[jx * ny..(jx + 1) * ny];
            col[0].im = 0.0;
            col[ny / 2].im = 0.0;
            for jy in 1..ny / 2 {
                let sym = (col[jy] + col[ny - jy].conj()) * 0.5;
                col[jy] = sym;
                col[ny - jy] = sym.conj();
            }
        }
        coeffs
    }

    fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let (nx, ny, nxh) = (self.nx, self.ny, self.nxh());
        debug_assert_eq!(coeffs.len(), nxh * ny);
        let mut buf = coeffs.to_vec();
        let mut yscratch = vec![Complex64::new(0.0, 0.0); self.inv_y.get_inplace_scratch_len()];
        for col in buf.chunks_exact_mut(ny) {
            self.inv_y.process_with_scratch(col, &mut yscratch);
        }
        let mut samples = vec![0.0; nx * ny];
        let mut row_in = self.c2r.make_input_vec();
        let mut scratch = self.c2r.make_scratch_vec();
        for iy in 0..ny {
            for (jx, c) in row_in.iter_mut().enumerate() {
                *c = buf[jx * ny + iy];
            }
            // Real-to-complex symmetry forces these to be real; drop roundoff.
            row_in[0].im = 0.0;
            if nx % 2 == 0 {
                row_in[nxh - 1].im = 0.0;
            }
            self.c2r
                .process_with_scratch(&mut row_in, &mut samples[iy * nx..(iy + 1) * nx], &mut scratch)
                .expect("c2r buffer sizes come from the plan");
        }
        samples
    }
}

/// Zero-padding level for a pseudo-spectral product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// 3/2 rule, alias-free for quadratic products.
    Quadratic,
    /// Factor 2, alias-free for cubic products and exact for the domain
    /// average of quartic terms.
    Cubic,
}

fn padded_len(n: usize, padding: Padding) -> usize {
    match padding {
        Padding::Quadratic => {
            let m = (3 * n).div_ceil(2);
            m + m % 2
        }
        Padding::Cubic => 2 * n,
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Doubly periodic grid `[x0, x0+lx) x [y0, y0+ly)` with `nx x ny` modes.
pub struct Grid2 {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    x0: f64,
    y0: f64,
    kx: Vec<f64>,
    ky: Vec<f64>,
    dkx: Vec<f64>,
    dky: Vec<f64>,
    plans: Plans,
    pad_quadratic: Plans,
    pad_cubic: Plans,
}

impl fmt::Debug for Grid2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .field("x0", &self.x0)
            .field("y0", &self.y0)
            .finish()
    }
}

impl PartialEq for Grid2 {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.lx == other.lx
            && self.ly == other.ly
            && self.x0 == other.x0
            && self.y0 == other.y0
    }
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, x_range: [f64; 2], y_range: [f64; 2]) -> Result<Arc<Self>, SpectralError> {
        if nx < 4 || ny < 4 || !nx.is_multiple_of(2) || !ny.is_multiple_of(2) {
            return Err(SpectralError::BadModeCount { nx, ny });
        }
        let lx = x_range[1] - x_range[0];
        let ly = y_range[1] - y_range[0];
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(SpectralError::BadDomain { lx, ly });
        }
        let kx: Vec<f64> = (0..nx).map(|j| 2.0 * PI * signed_index(j, nx) as f64 / lx).collect();
        let ky: Vec<f64> = (0..ny).map(|j| 2.0 * PI * signed_index(j, ny) as f64 / ly).collect();
        let mut dkx: Vec<f64> = kx[..=nx / 2].to_vec();
        dkx[nx / 2] = 0.0;
        let mut dky = ky.clone();
        dky[ny / 2] = 0.0;
        Ok(Arc::new(Grid2 {
            nx,
            ny,
            lx,
            ly,
            x0: x_range[0],
            y0: y_range[0],
            kx,
            ky,
            dkx,
            dky,
            plans: Plans::new(nx, ny),
            pad_quadratic: Plans::new(padded_len(nx, Padding::Quadratic), padded_len(ny, Padding::Quadratic)),
            pad_cubic: Plans::new(padded_len(nx, Padding::Cubic), padded_len(ny, Padding::Cubic)),
        }))
    }

    /// Square grid with `n x n` modes on `[a, b)^2`.
    pub fn square(n: usize, a: f64, b: f64) -> Result<Arc<Self>, SpectralError> {
        Self::new(n, n, [a, b], [a, b])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.x0, self.y0)
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spectrum_len(&self) -> usize {
        (self.nx / 2 + 1) * self.ny
    }

    /// Signed wavenumbers along x, indexed by the full FFT index.
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    /// Differentiation wavenumbers on the stored half spectrum (Nyquist zeroed).
    pub fn diff_kx(&self) -> &[f64] {
        &self.dkx
    }

    pub fn diff_ky(&self) -> &[f64] {
        &self.dky
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.lx * i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + self.ly * j as f64 / self.ny as f64
    }

    /// `|k|^2` of stored mode `idx` with differentiation wavenumbers.
    fn k2_at(&self, idx: usize) -> f64 {
        let (jx, jy) = (idx / self.ny, idx % self.ny);
        self.dkx[jx] * self.dkx[jx] + self.dky[jy] * self.dky[jy]
    }

    /// Parseval weight of stored mode column `jx` in the half spectrum.
    fn column_weight(&self, jx: usize) -> f64 {
        if jx == 0 || jx == self.nx / 2 {
            1.0
        } else {
            2.0
        }
    }

    fn padded_plans(&self, padding: Padding) -> &Plans {
        match padding {
            Padding::Quadratic => &self.pad_quadratic,
            Padding::Cubic => &self.pad_cubic,
        }
    }

    /// Evaluate a spectrum on the padded grid. Nyquist modes are dropped.
    pub fn to_padded(&self, spec: &Spectrum, padding: Padding) -> Vec<f64> {
        assert!(*spec.grid == *self, "spectrum belongs to another grid");
        let plans = self.padded_plans(padding);
        let (mx, my) = (plans.nx, plans.ny);
        let mut padded = vec![Complex64::new(0.0, 0.0); (mx / 2 + 1) * my];
        let (nx, ny) = (self.nx, self.ny);
        for jx in 0..nx / 2 {
            for jy in 0..ny {
                if jy == ny / 2 {
                    continue;
                }
                let s = signed_index(jy, ny);
                let dst_y = s.rem_euclid(my as i64) as usize;
                padded[jx * my + dst_y] = spec.coeffs[jx * ny + jy];
            }
        }
        plans.inverse(&padded)
    }

    /// Transform padded-grid samples back and truncate to the resolved modes.
    pub fn from_padded(self: &Arc<Self>, samples: &[f64], padding: Padding) -> Spectrum {
        let plans = self.padded_plans(padding);
        let (mx, my) = (plans.nx, plans.ny);
        assert_eq!(samples.len(), mx * my);
        let padded = plans.forward(samples);
        let (nx, ny) = (self.nx, self.ny);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.spectrum_len()];
        for jx in 0..nx / 2 {
            for jy in 0..ny {
                if jy == ny / 2 {
                    continue;
                }
                let s = signed_index(jy, ny);
                let src_y = s.rem_euclid(my as i64) as usize;
                coeffs[jx * ny + jy] = padded[jx * my + src_y];
            }
        }
        Spectrum { grid: Arc::clone(self), coeffs }
    }

    /// Exact domain average of `f(phi)` for polynomial `f` of degree <= 4.
    pub fn padded_average(&self, spec: &Spectrum, f: impl Fn(f64) -> f64) -> f64 {
        let samples = self.to_padded(spec, Padding::Cubic);
        samples.iter().map(|&v| f(v)).sum::<f64>() / samples.len() as f64
    }

    /// Size of the padded sample array for `padding`.
    pub fn padded_shape(&self, padding: Padding) -> (usize, usize) {
        let p = self.padded_plans(padding);
        (p.nx, p.ny)
    }

    /// Sample a closure `f(x, y)` at the collocation points.
    pub fn sample(self: &Arc<Self>, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let mut samples = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            let y = self.y(j);
            for i in 0..self.nx {
                samples.push(f(self.x(i), y));
            }
        }
        ScalarField { grid: Arc::clone(self), samples }
    }
}

/// Real samples on a [`Grid2`], row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid2>,
    samples: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Arc<Grid2>, samples: Vec<f64>) -> Result<Self, SpectralError> {
        if samples.len() != grid.len() {
            return Err(SpectralError::SampleCount { expected: grid.len(), got: samples.len() });
        }
        Ok(ScalarField { grid: Arc::clone(grid), samples })
    }

    pub fn constant(grid: &Arc<Grid2>, value: f64) -> Self {
        ScalarField { grid: Arc::clone(grid), samples: vec![value; grid.len()] }
    }

    pub fn zeros(grid: &Arc<Grid2>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<Grid2> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Sample at grid index `(i, j)` (x index, y index).
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.samples[j * self.grid.nx + i]
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum { grid: Arc::clone(&self.grid), coeffs: self.grid.plans.forward(&self.samples) }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: Arc::clone(&self.grid), samples: self.samples.iter().map(|&v| f(v)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn gradient(&self) -> VectorField2 {
        self.spectrum().gradient().to_field()
    }

    pub fn laplacian(&self) -> ScalarField {
        self.spectrum().laplacian().to_field()
    }

    pub fn l2_norm(&self) -> f64 {
        self.spectrum().l2_norm()
    }

    pub fn h1_seminorm(&self) -> f64 {
        self.spectrum().h1_seminorm()
    }

    pub fn mean(&self) -> f64 {
        self.spectrum().mean()
    }

    /// `|Omega|/N * sum f^2`, the collocation quadrature of `f^2`.
    pub fn quadrature_l2_squared(&self) -> f64 {
        self.grid.area() / self.grid.len() as f64 * self.samples.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Half-spectrum coefficients of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Arc<Grid2>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: &Arc<Grid2>) -> Self {
        Spectrum { grid: Arc::clone(grid), coeffs: vec![Complex64::new(0.0, 0.0); grid.spectrum_len()] }
    }

    pub fn grid(&self) -> &Arc<Grid2> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of mode `(jx, jy)` in stored indexing.
    pub fn coeff(&self, jx: usize, jy: usize) -> Complex64 {
        self.coeffs[jx * self.grid.ny + jy]
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField { grid: Arc::clone(&self.grid), samples: self.grid.plans.inverse(&self.coeffs) }
    }

    fn map_modes(&self, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Spectrum {
        let ny = self.grid.ny;
        let coeffs = self.coeffs.iter().enumerate().map(|(idx, &c)| f(idx / ny, idx % ny, c)).collect();
        Spectrum { grid: Arc::clone(&self.grid), coeffs }
    }

    pub fn dx(&self) -> Spectrum {
        let g = &self.grid;
        self.map_modes(|jx, _, c| c * Complex64::new(0.0, g.dkx[jx]))
    }

    pub fn dy(&self) -> Spectrum {
        let g = &self.grid;
        self.map_modes(|_, jy, c| c * Complex64::new(0.0, g.dky[jy]))
    }

    pub fn gradient(&self) -> VectorSpectrum {
        VectorSpectrum { x: self.dx(), y: self.dy() }
    }

    pub fn laplacian(&self) -> Spectrum {
        let g = &self.grid;
        self.map_modes(|jx, jy, c| -c * (g.dkx[jx] * g.dkx[jx] + g.dky[jy] * g.dky[jy]))
    }

    /// Apply a real diagonal multiplier `m(|k|^2)`.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> f64) -> Spectrum {
        let g = &self.grid;
        let coeffs = self.coeffs.iter().enumerate().map(|(idx, &c)| c * m(g.k2_at(idx))).collect();
        Spectrum { grid: Arc::clone(g), coeffs }
    }

    /// Solve `(a - b*lap) w = self`.
    pub fn solve_helmholtz(&self, a: f64, b: f64) -> Spectrum {
        assert!(a > 0.0, "helmholtz shift must be positive");
        self.apply_multiplier(|k2| 1.0 / (a + b * k2))
    }

    /// Solve `(a + c1*lap^2 - c2*lap) w = self`.
    pub fn solve_ch_operator(&self, a: f64, c1: f64, c2: f64) -> Spectrum {
        assert!(a > 0.0 && c1 > 0.0, "cahn-hilliard operator needs a, c1 > 0");
        self.apply_multiplier(|k2| 1.0 / (a + c1 * k2 * k2 + c2 * k2))
    }

    /// Solve `lap p = self` with `mean(p) = 0`.
    pub fn solve_poisson_zero_mean(&self) -> Result<Spectrum, SpectralError> {
        let mean = self.coeffs[0].norm();
        let tol = 1e-8 * self.rms();
        if mean > tol && mean > f64::MIN_POSITIVE {
            return Err(SpectralError::Compatibility { mean, tol });
        }
        Ok(self.apply_multiplier(|k2| if k2 > 0.0 { -1.0 / k2 } else { 0.0 }))
    }

    /// Root mean square value of the represented field.
    pub fn rms(&self) -> f64 {
        let ny = self.grid.ny;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| self.grid.column_weight(idx / ny) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.rms() * self.grid.area().sqrt()
    }

    pub fn h1_seminorm(&self) -> f64 {
        let g = &self.grid;
        let ny = g.ny;
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| g.column_weight(idx / ny) * g.k2_at(idx) * c.norm_sqr())
            .sum();
        (s * g.area()).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn without_mean(&self) -> Spectrum {
        let mut out = self.clone();
        out.coeffs[0] = Complex64::new(0.0, 0.0);
        out
    }

    /// Zero the Nyquist row and column.
    pub fn filter_nyquist(&self) -> Spectrum {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        self.map_modes(|jx, jy, c| if jx == nx / 2 || jy == ny / 2 { Complex64::new(0.0, 0.0) } else { c })
    }

    pub fn scale(&self, s: f64) -> Spectrum {
        Spectrum { grid: Arc::clone(&self.grid), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Spectrum) {
        assert!(*self.grid == *other.grid, "spectra live on different grids");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest coefficient magnitude difference to `other`.
    pub fn max_diff(&self, other: &Spectrum) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl Add<&Spectrum> for &Spectrum {
    type Output = Spectrum;
    fn add(self, rhs: &Spectrum) -> Spectrum {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub<&Spectrum> for &Spectrum {
    type Output = Spectrum;
    fn sub(self, rhs: &Spectrum) -> Spectrum {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl AddAssign<&Spectrum> for Spectrum {
    fn add_assign(&mut self, rhs: &Spectrum) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&Spectrum> for Spectrum {
    fn sub_assign(&mut self, rhs: &Spectrum) {
        self.axpy(-1.0, rhs);
    }
}

impl Mul<f64> for &Spectrum {
    type Output = Spectrum;
    fn mul(self, rhs: f64) -> Spectrum {
        self.scale(rhs)
    }
}

impl Neg for &Spectrum {
    type Output = Spectrum;
    fn neg(self) -> Spectrum {
        self.scale(-1.0)
    }
}

/// Two-component vector field in sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField2 {
    pub fn new(x: ScalarField, y: ScalarField) -> Self {
        assert!(**x.grid() == **y.grid(), "vector components must share one grid");
        VectorField2 { x, y }
    }

    pub fn zeros(grid: &Arc<Grid2>) -> Self {
        VectorField2 { x: ScalarField::zeros(grid), y: ScalarField::zeros(grid) }
    }

    pub fn grid(&self) -> &Arc<Grid2> {
        self.x.grid()
    }

    pub fn spectrum(&self) -> VectorSpectrum {
        VectorSpectrum { x: self.x.spectrum(), y: self.y.spectrum() }
    }

    pub fn divergence(&self) -> ScalarField {
        self.spectrum().divergence().to_field()
    }

    pub fn curl_curl(&self) -> VectorField2 {
        self.spectrum().curl_curl().to_field()
    }

    /// Componentwise Laplacian.
    pub fn laplacian(&self) -> VectorField2 {
        VectorField2 { x: self.x.laplacian(), y: self.y.laplacian() }
    }

    pub fn l2_norm(&self) -> f64 {
        self.spectrum().l2_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Spectra of the two components of a vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSpectrum {
    pub x: Spectrum,
    pub y: Spectrum,
}

impl VectorSpectrum {
    pub fn zeros(grid: &Arc<Grid2>) -> Self {
        VectorSpectrum { x: Spectrum::zeros(grid), y: Spectrum::zeros(grid) }
    }

    pub fn grid(&self) -> &Arc<Grid2> {
        self.x.grid()
    }

    pub fn to_field(&self) -> VectorField2 {
        VectorField2 { x: self.x.to_field(), y: self.y.to_field() }
    }

    pub fn divergence(&self) -> Spectrum {
        &self.x.dx() + &self.y.dy()
    }

    /// `curl curl v = grad(div v) - lap v` in two dimensions.
    pub fn curl_curl(&self) -> VectorSpectrum {
        let grad_div = self.divergence().gradient();
        VectorSpectrum { x: &grad_div.x - &self.x.laplacian(), y: &grad_div.y - &self.y.laplacian() }
    }

    pub fn laplacian(&self) -> VectorSpectrum {
        VectorSpectrum { x: self.x.laplacian(), y: self.y.laplacian() }
    }

    pub fn map(&self, f: impl Fn(&Spectrum) -> Spectrum) -> VectorSpectrum {
        VectorSpectrum { x: f(&self.x), y: f(&self.y) }
    }

    pub fn scale(&self, s: f64) -> VectorSpectrum {
        self.map(|c| c.scale(s))
    }

    pub fn axpy(&mut self, s: f64, other: &VectorSpectrum) {
        self.x.axpy(s, &other.x);
        self.y.axpy(s, &other.y);
    }

    pub fn l2_norm(&self) -> f64 {
        self.x.l2_norm().hypot(self.y.l2_norm())
    }

    /// `||grad u||` summed over both components.
    pub fn h1_seminorm(&self) -> f64 {
        self.x.h1_seminorm().hypot(self.y.h1_seminorm())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Linear combination support for history extrapolation.
pub trait Linear: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, s: f64, other: &Self);
}

impl Linear for Spectrum {
    fn zero_like(&self) -> Self {
        Spectrum::zeros(&self.grid)
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        self.axpy(s, other);
    }
}

impl Linear for VectorSpectrum {
    fn zero_like(&self) -> Self {
        VectorSpectrum::zeros(self.grid())
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        self.axpy(s, other);
    }
}

/// Pointwise product of band-limited spectra, alias-free for the number of
/// factors (2 uses the 3/2 rule, 3 pads by 2).
pub fn product_spectral(factors: &[&Spectrum]) -> Spectrum {
    assert!((2..=3).contains(&factors.len()), "dealiased product takes 2 or 3 factors");
    let grid = factors[0].grid();
    let padding = if factors.len() == 2 { Padding::Quadratic } else { Padding::Cubic };
    let mut acc = grid.to_padded(factors[0], padding);
    for f in &factors[1..] {
        assert!(**f.grid() == **grid, "factors must share one grid");
        let s = grid.to_padded(f, padding);
        for (a, b) in acc.iter_mut().zip(&s) {
            *a *= b;
        }
    }
    grid.from_padded(&acc, padding)
}

/// Sum of pairwise products `sum_i a_i * b_i`, dealiased with one padded
/// forward transform.
pub fn dot_product_spectral(pairs: &[(&Spectrum, &Spectrum)]) -> Spectrum {
    assert!(!pairs.is_empty());
    let grid = pairs[0].0.grid();
    let (mx, my) = grid.padded_shape(Padding::Quadratic);
    let mut acc = vec![0.0; mx * my];
    for (a, b) in pairs {
        let pa = grid.to_padded(a, Padding::Quadratic);
        let pb = grid.to_padded(b, Padding::Quadratic);
        for ((o, x), y) in acc.iter_mut().zip(&pa).zip(&pb) {
            *o += x * y;
        }
    }
    grid.from_padded(&acc, Padding::Quadratic)
}

/// `mu * grad(phi)` as a vector, dealiased.
pub fn scaled_gradient(mu: &Spectrum, phi: &Spectrum) -> VectorSpectrum {
    let grid = mu.grid();
    let pm = grid.to_padded(mu, Padding::Quadratic);
    let component = |d: Spectrum| {
        let mut pd = grid.to_padded(&d, Padding::Quadratic);
        for (a, b) in pd.iter_mut().zip(&pm) {
            *a *= b;
        }
        grid.from_padded(&pd, Padding::Quadratic)
    };
    VectorSpectrum { x: component(phi.dx()), y: component(phi.dy()) }
}

/// Vector advection `(u . grad) v`, dealiased.
pub fn advect_vector(u: &VectorSpectrum, v: &VectorSpectrum) -> VectorSpectrum {
    let grid = u.grid();
    let ux = grid.to_padded(&u.x, Padding::Quadratic);
    let uy = grid.to_padded(&u.y, Padding::Quadratic);
    let component = |f: &Spectrum| {
        let fx = grid.to_padded(&f.dx(), Padding::Quadratic);
        let fy = grid.to_padded(&f.dy(), Padding::Quadratic);
        let acc: Vec<f64> = ux.iter().zip(&uy).zip(fx.iter().zip(&fy)).map(|((a, b), (c, d))| a * c + b * d).collect();
        grid.from_padded(&acc, Padding::Quadratic)
    };
    VectorSpectrum { x: component(&v.x), y: component(&v.y) }
}

/// Dealiased pointwise product of 2 or 3 sample-space fields.
pub fn dealiased_product(fs: &[&ScalarField]) -> ScalarField {
    assert!(fs.len() == 2 || fs.len() == 3, "dealiased_product takes 2 or 3 fields");
    let spectra: Vec<Spectrum> = fs.iter().map(|f| f.spectrum()).collect();
    let refs: Vec<&Spectrum> = spectra.iter().collect();
    product_spectral(&refs).to_field()
}

/// Advective derivative `(u . grad) f`, dealiased.
pub fn advect(u: &VectorSpectrum, f: &Spectrum) -> Spectrum {
    dot_product_spectral(&[(&u.x, &f.dx()), (&u.y, &f.dy())])
}

pub fn gradient(f: &ScalarField) -> VectorField2 {
    f.gradient()
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    f.laplacian()
}

pub fn divergence(v: &VectorField2) -> ScalarField {
    v.divergence()
}

pub fn curl_curl(v: &VectorField2) -> VectorField2 {
    v.curl_curl()
}

pub fn solve_helmholtz(a: f64, b: f64, rhs: &ScalarField) -> ScalarField {
    rhs.spectrum().solve_helmholtz(a, b).to_field()
}

pub fn solve_ch_operator(a: f64, c1: f64, c2: f64, rhs: &ScalarField) -> ScalarField {
    rhs.spectrum().solve_ch_operator(a, c1, c2).to_field()
}

pub fn solve_poisson_zero_mean(rhs: &ScalarField) -> Result<ScalarField, SpectralError> {
    Ok(rhs.spectrum().solve_poisson_zero_mean()?.to_field())
}

pub fn l2_norm(f: &ScalarField) -> f64 {
    f.l2_norm()
}

pub fn h1_seminorm(f: &ScalarField) -> f64 {
    f.h1_seminorm()
}

pub fn mean(f: &ScalarField) -> f64 {
    f.mean()
}
