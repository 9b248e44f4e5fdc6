//! Dense reference implementation on small grids.
//!
//! Fields are plain sample vectors. Products are formed by exact convolution
//! of Fourier coefficients followed by truncation to the resolved modes,
//! derivatives by dense matrices assembled from explicit DFT sums, and every
//! linear solve by LU or a pseudo-inverse of the assembled operator. Nothing
//! here goes through the FFT, padding or diagonal solvers of the crate.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Fourier coefficients `c(kx, ky)` for `|kx|, |ky| <= w`.
#[derive(Clone, Debug)]
pub struct Poly {
    pub w: i64,
    pub c: Vec<Complex64>,
}

impl Poly {
    pub fn zeros(w: i64) -> Self {
        let side = (2 * w + 1) as usize;
        Poly { w, c: vec![Complex64::new(0.0, 0.0); side * side] }
    }

    fn idx(&self, kx: i64, ky: i64) -> usize {
        ((ky + self.w) * (2 * self.w + 1) + (kx + self.w)) as usize
    }

    pub fn get(&self, kx: i64, ky: i64) -> Complex64 {
        if kx.abs() > self.w || ky.abs() > self.w {
            return Complex64::new(0.0, 0.0);
        }
        self.c[self.idx(kx, ky)]
    }

    fn add_at(&mut self, kx: i64, ky: i64, v: Complex64) {
        let i = self.idx(kx, ky);
        self.c[i] += v;
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zeros(self.w + other.w);
        for ay in -self.w..=self.w {
            for ax in -self.w..=self.w {
                let a = self.get(ax, ay);
                if a.norm() == 0.0 {
                    continue;
                }
                for by in -other.w..=other.w {
                    for bx in -other.w..=other.w {
                        out.add_at(ax + bx, ay + by, a * other.get(bx, by));
                    }
                }
            }
        }
        out
    }

    pub fn truncate(&self, w: i64) -> Poly {
        let mut out = Poly::zeros(w);
        for ky in -w..=w {
            for kx in -w..=w {
                let i = out.idx(kx, ky);
                out.c[i] = self.get(kx, ky);
            }
        }
        out
    }

    /// Domain mean of the product of two real fields.
    pub fn mean_product(&self, other: &Poly) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for ky in -self.w..=self.w {
            for kx in -self.w..=self.w {
                s += self.get(kx, ky) * other.get(-kx, -ky);
            }
        }
        s.re
    }
}

/// Square test grid `[a, b)^2` with `n` points per side.
#[derive(Clone, Debug)]
pub struct DenseGrid {
    pub n: usize,
    pub a: f64,
    pub l: f64,
    /// Highest resolved wavenumber index, `n/2 - 1`.
    pub w: i64,
}

impl DenseGrid {
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        DenseGrid { n, a, l: b - a, w: n as i64 / 2 - 1 }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn area(&self) -> f64 {
        self.l * self.l
    }

    fn point(&self, idx: usize) -> (f64, f64) {
        let h = self.l / self.n as f64;
        (self.a + (idx % self.n) as f64 * h, self.a + (idx / self.n) as f64 * h)
    }

    fn wave(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.l
    }

    /// Resolved coefficients by direct DFT sums; Nyquist modes are dropped.
    pub fn analyze(&self, v: &DVector<f64>) -> Poly {
        let mut p = Poly::zeros(self.w);
        let norm = 1.0 / self.len() as f64;
        for ky in -self.w..=self.w {
            for kx in -self.w..=self.w {
                let mut s = Complex64::new(0.0, 0.0);
                for (j, &val) in v.iter().enumerate() {
                    let (x, y) = self.point(j);
                    s += Complex64::from_polar(val, -(self.wave(kx) * x + self.wave(ky) * y));
                }
                let i = p.idx(kx, ky);
                p.c[i] = s * norm;
            }
        }
        p
    }

    pub fn synthesize(&self, p: &Poly) -> DVector<f64> {
        DVector::from_fn(self.len(), |j, _| {
            let (x, y) = self.point(j);
            let mut s = Complex64::new(0.0, 0.0);
            for ky in -p.w..=p.w {
                for kx in -p.w..=p.w {
                    s += p.get(kx, ky) * Complex64::from_polar(1.0, self.wave(kx) * x + self.wave(ky) * y);
                }
            }
            s.re
        })
    }

    /// Alias-free product of any number of fields, truncated to resolved modes.
    pub fn product(&self, fields: &[&DVector<f64>]) -> DVector<f64> {
        let mut acc = self.analyze(fields[0]);
        for f in &fields[1..] {
            acc = acc.mul(&self.analyze(f));
        }
        self.synthesize(&acc.truncate(self.w))
    }

    /// Mean of `phi^4` from the exact square.
    pub fn mean_fourth_power(&self, phi: &DVector<f64>) -> f64 {
        let p = self.analyze(phi);
        let sq = p.mul(&p);
        sq.mean_product(&sq)
    }

    pub fn mean(&self, v: &DVector<f64>) -> f64 {
        self.analyze(v).get(0, 0).re
    }

    pub fn mean_square(&self, v: &DVector<f64>) -> f64 {
        let p = self.analyze(v);
        p.mean_product(&p)
    }

    fn operator(&self, f: impl Fn(&Poly) -> Poly) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.len(), self.len());
        for j in 0..self.len() {
            let mut e = DVector::zeros(self.len());
            e[j] = 1.0;
            let col = self.synthesize(&f(&self.analyze(&e)));
            m.set_column(j, &col);
        }
        m
    }

    /// d/dx as a dense matrix on samples.
    pub fn dx(&self) -> DMatrix<f64> {
        self.operator(|p| {
            let mut q = p.clone();
            for ky in -p.w..=p.w {
                for kx in -p.w..=p.w {
                    let i = q.idx(kx, ky);
                    q.c[i] *= Complex64::new(0.0, self.wave(kx));
                }
            }
            q
        })
    }

    pub fn dy(&self) -> DMatrix<f64> {
        self.operator(|p| {
            let mut q = p.clone();
            for ky in -p.w..=p.w {
                for kx in -p.w..=p.w {
                    let i = q.idx(kx, ky);
                    q.c[i] *= Complex64::new(0.0, self.wave(ky));
                }
            }
            q
        })
    }

    /// Projection onto resolved (non-Nyquist) modes.
    pub fn projector(&self) -> DMatrix<f64> {
        self.operator(|p| p.clone())
    }
}

/// Dense operators shared by the reference step.
pub struct Ops {
    pub g: DenseGrid,
    pub dx: DMatrix<f64>,
    pub dy: DMatrix<f64>,
    pub lap: DMatrix<f64>,
    pub lap_pinv: DMatrix<f64>,
}

impl Ops {
    pub fn new(g: DenseGrid) -> Self {
        let dx = g.dx();
        let dy = g.dy();
        let lap = &dx * &dx + &dy * &dy;
        let lap_pinv = lap.clone().pseudo_inverse(1e-9).expect("svd converges");
        Ops { g, dx, dy, lap, lap_pinv }
    }

    pub fn grad_norm_sq(&self, v: &DVector<f64>) -> f64 {
        let area = self.g.area();
        area * (self.g.mean_square(&(&self.dx * v)) + self.g.mean_square(&(&self.dy * v)))
    }

    pub fn l2_sq(&self, v: &DVector<f64>) -> f64 {
        self.g.area() * self.g.mean_square(v)
    }

    pub fn solve(&self, m: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
        m.lu().solve(rhs).expect("operator is invertible")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DenseParams {
    pub lambda: f64,
    pub mobility: f64,
    pub eps: f64,
    pub gamma: f64,
    pub nu: f64,
    pub kappa0: f64,
    pub chi: f64,
    pub gravity: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct DenseLevel {
    pub phi_tilde: DVector<f64>,
    pub ux_tilde: DVector<f64>,
    pub uy_tilde: DVector<f64>,
    pub phi: DVector<f64>,
    pub mu: DVector<f64>,
    pub ux: DVector<f64>,
    pub uy: DVector<f64>,
    pub p: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct DenseStep {
    pub level: DenseLevel,
    pub xi: f64,
    pub eta: f64,
    pub r_tilde: f64,
    pub r: f64,
    pub energy: f64,
}

/// IMEX BDF coefficient tables, newest level first.
pub fn tables(k: usize) -> (f64, Vec<f64>, Vec<f64>) {
    match k {
        1 => (1.0, vec![1.0], vec![1.0]),
        2 => (1.5, vec![2.0, -0.5], vec![2.0, -1.0]),
        3 => (11.0 / 6.0, vec![3.0, -1.5, 1.0 / 3.0], vec![3.0, -3.0, 1.0]),
        _ => panic!("reference tables cover k <= 3"),
    }
}

fn combine(weights: &[f64], fields: &[&DVector<f64>]) -> DVector<f64> {
    let mut out = DVector::zeros(fields[0].len());
    for (w, f) in weights.iter().zip(fields) {
        out += *f * *w;
    }
    out
}

impl Ops {
    /// `F'(phi) = (phi^3 - phi)/eps^2 - gamma phi`
    pub fn potential_prime(&self, phi: &DVector<f64>, p: &DenseParams) -> DVector<f64> {
        let cube = self.g.product(&[phi, phi, phi]);
        (cube - phi) / (p.eps * p.eps) - phi * p.gamma
    }

    pub fn energy(&self, phi: &DVector<f64>, ux: &DVector<f64>, uy: &DVector<f64>, p: &DenseParams) -> f64 {
        let area = self.g.area();
        let kinetic = 0.5 * (self.l2_sq(ux) + self.l2_sq(uy));
        let gradient = 0.5 * p.lambda * self.grad_norm_sq(phi);
        let stab = 0.5 * p.lambda * p.gamma * self.l2_sq(phi);
        let m2 = self.g.mean_square(phi);
        let m4 = self.g.mean_fourth_power(phi);
        let g_int = area * (1.0 - 2.0 * m2 + m4) / (4.0 * p.eps * p.eps);
        let f_int = g_int - 0.5 * p.gamma * area * m2;
        kinetic + gradient + stab + p.lambda * f_int
    }

    fn advect(&self, ux: &DVector<f64>, uy: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        let fx = &self.dx * f;
        let fy = &self.dy * f;
        self.g.product(&[ux, &fx]) + self.g.product(&[uy, &fy])
    }

    /// One step of the scheme; `history` is newest first and as deep as
    /// the order.
    pub fn step(&self, history: &[DenseLevel], r: f64, dt: f64, p: &DenseParams) -> DenseStep {
        let k = history.len();
        let (alpha, a, b) = tables(k);
        let pick = |f: fn(&DenseLevel) -> &DVector<f64>| history.iter().map(f).collect::<Vec<_>>();
        let a_phi = combine(&a, &pick(|l| &l.phi_tilde));
        let a_ux = combine(&a, &pick(|l| &l.ux_tilde));
        let a_uy = combine(&a, &pick(|l| &l.uy_tilde));
        let b_phi = combine(&b, &pick(|l| &l.phi));
        let b_mu = combine(&b, &pick(|l| &l.mu));
        let b_ux = combine(&b, &pick(|l| &l.ux));
        let b_uy = combine(&b, &pick(|l| &l.uy));
        let b_p = combine(&b, &pick(|l| &l.p));
        let n = self.g.len();
        let eye = DMatrix::<f64>::identity(n, n);
        let ml = p.mobility * p.lambda;

        // phase field
        let fp = self.potential_prime(&b_phi, p) * p.lambda;
        let rhs = &a_phi / dt - self.advect(&b_ux, &b_uy, &b_phi) + (&self.lap * &fp) * p.mobility;
        let op = &eye * (alpha / dt) + (&self.lap * &self.lap) * ml - &self.lap * (ml * p.gamma);
        let phi_t = self.solve(op, &rhs);
        let mu_t = -(&self.lap * &phi_t) * p.lambda + &phi_t * (p.lambda * p.gamma) + &fp;

        // momentum
        let (bpx, bpy) = (&self.dx * &b_phi, &self.dy * &b_phi);
        let mean_b_phi = self.g.mean(&b_phi);
        let fluct: DVector<f64> = b_phi.map(|v| v - mean_b_phi);
        let helm = &eye * (alpha / dt) - &self.lap * p.nu;
        let rhs_x = &a_ux / dt + self.g.product(&[&b_mu, &bpx]) - self.advect(&b_ux, &b_uy, &b_ux) - &self.dx * &b_p
            + &fluct * (p.chi * p.gravity[0]);
        let rhs_y = &a_uy / dt + self.g.product(&[&b_mu, &bpy]) - self.advect(&b_ux, &b_uy, &b_uy) - &self.dy * &b_p
            + &fluct * (p.chi * p.gravity[1]);
        let ux_t = self.solve(helm.clone(), &rhs_x);
        let uy_t = self.solve(helm, &rhs_y);

        // auxiliary variable
        let e_tilde = self.energy(&phi_t, &ux_t, &uy_t, p);
        let diss = p.mobility * self.grad_norm_sq(&mu_t) + p.nu * (self.grad_norm_sq(&b_ux) + self.grad_norm_sq(&b_uy));
        let r_tilde = r / (1.0 + dt * diss / (e_tilde + p.kappa0));
        let xi = r_tilde / (e_tilde + p.kappa0);
        let expo = if k == 1 { 2 } else { k as i32 };
        let eta = 1.0 - (1.0 - xi).powi(expo);
        let phi = &phi_t * eta;
        let mu = &mu_t * eta;
        let ux = &ux_t * eta;
        let uy = &uy_t * eta;

        // pressure
        let div_t = &self.dx * &ux_t + &self.dy * &uy_t;
        let ccx = &self.dx * &div_t - &self.lap * &ux_t;
        let ccy = &self.dy * &div_t - &self.lap * &uy_t;
        let (px, py) = (&self.dx * &phi, &self.dy * &phi);
        let mean_phi = self.g.mean(&phi);
        let fl: DVector<f64> = phi.map(|v| v - mean_phi);
        let vx = self.g.product(&[&mu, &px]) - self.advect(&ux, &uy, &ux) - &ccx * p.nu + &fl * (p.chi * p.gravity[0]);
        let vy = self.g.product(&[&mu, &py]) - self.advect(&ux, &uy, &uy) - &ccy * p.nu + &fl * (p.chi * p.gravity[1]);
        let div = &self.dx * &vx + &self.dy * &vy;
        let pressure = &self.lap_pinv * &div;

        let energy = self.energy(&phi, &ux, &uy, p);
        let r_new = r.min(energy + p.kappa0);
        DenseStep {
            level: DenseLevel { phi_tilde: phi_t, ux_tilde: ux_t, uy_tilde: uy_t, phi, mu, ux, uy, p: pressure },
            xi,
            eta,
            r_tilde,
            r: r_new,
            energy,
        }
    }
}
