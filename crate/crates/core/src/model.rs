//! Physical parameters, the double-well potential and its stabilized split,
//! the energy functional and the forcing terms of the phase-field flow model.

use thiserror::Error;

use crate::spectral::{product_spectral, ScalarField, Spectrum, VectorField2, VectorSpectrum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` must be {requirement}, got {value}")]
    InvalidParameter { name: &'static str, requirement: &'static str, value: f64 },
}

/// Physical constants of the Cahn-Hilliard-Navier-Stokes system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Mixing energy density coefficient.
    pub lambda: f64,
    /// Mobility `M`.
    pub mobility: f64,
    /// Interface width parameter.
    pub eps: f64,
    /// Stabilization constant of the quadratic split.
    pub gamma: f64,
    /// Kinematic viscosity.
    pub nu: f64,
    /// Shift keeping the auxiliary energy positive.
    pub kappa0: f64,
    /// Buoyancy strength; zero disables the term.
    pub chi: f64,
    pub gravity: [f64; 2],
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            lambda: 1.0,
            mobility: 1.0,
            eps: 1.0,
            gamma: 0.0,
            nu: 1.0,
            kappa0: 1.0,
            chi: 0.0,
            gravity: [0.0, -1.0],
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("lambda", self.lambda),
            ("mobility", self.mobility),
            ("eps", self.eps),
            ("nu", self.nu),
            ("kappa0", self.kappa0),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter { name, requirement: "positive and finite", value });
            }
        }
        for (name, value) in [("gamma", self.gamma), ("chi", self.chi)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::InvalidParameter { name, requirement: "nonnegative and finite", value });
            }
        }
        for value in self.gravity {
            if !value.is_finite() {
                return Err(ModelError::InvalidParameter { name: "gravity", requirement: "finite", value });
            }
        }
        Ok(())
    }

    /// Double-well potential `(1 - phi^2)^2 / (4 eps^2)`.
    pub fn potential_g(&self, phi: f64) -> f64 {
        let w = 1.0 - phi * phi;
        w * w / (4.0 * self.eps * self.eps)
    }

    pub fn potential_g_prime(&self, phi: f64) -> f64 {
        (phi * phi * phi - phi) / (self.eps * self.eps)
    }

    /// Split potential `F = G - gamma/2 phi^2`.
    pub fn potential_f(&self, phi: f64) -> f64 {
        self.potential_g(phi) - 0.5 * self.gamma * phi * phi
    }

    pub fn potential_f_prime(&self, phi: f64) -> f64 {
        self.potential_g_prime(phi) - self.gamma * phi
    }

    pub fn buoyancy_enabled(&self) -> bool {
        self.chi > 0.0
    }
}

pub fn potential_g(phi: f64, params: &ModelParams) -> f64 {
    params.potential_g(phi)
}

pub fn potential_g_prime(phi: f64, params: &ModelParams) -> f64 {
    params.potential_g_prime(phi)
}

pub fn potential_f_prime(phi: f64, params: &ModelParams) -> f64 {
    params.potential_f_prime(phi)
}

/// Terms of the energy functional, each already integrated over the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `1/2 ||u||^2`
    pub kinetic: f64,
    /// `lambda/2 ||grad phi||^2`
    pub gradient: f64,
    /// `lambda gamma/2 ||phi||^2`
    pub stabilization: f64,
    /// `lambda * int F(phi)`
    pub bulk: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.gradient + self.stabilization + self.bulk
    }
}

/// Energy of band-limited spectra. The quartic bulk term is integrated on the
/// doubly padded grid, where the quadrature is exact.
pub fn energy_parts(phi: &Spectrum, u: &VectorSpectrum, params: &ModelParams) -> EnergyParts {
    let grid = phi.grid();
    let phi_norm = phi.l2_norm();
    let grad = phi.h1_seminorm();
    let u_norm = u.l2_norm();
    EnergyParts {
        kinetic: 0.5 * u_norm * u_norm,
        gradient: 0.5 * params.lambda * grad * grad,
        stabilization: 0.5 * params.lambda * params.gamma * phi_norm * phi_norm,
        bulk: params.lambda * grid.area() * grid.padded_average(phi, |v| params.potential_f(v)),
    }
}

/// `int F(phi)` over the domain.
pub fn integral_f(phi: &Spectrum, params: &ModelParams) -> f64 {
    phi.grid().area() * phi.grid().padded_average(phi, |v| params.potential_f(v))
}

/// Energy `E(phi, u)` of sample-space fields; Nyquist content is discarded
/// before integration.
pub fn energy(phi: &ScalarField, u: &VectorField2, params: &ModelParams) -> f64 {
    let phi = phi.spectrum().filter_nyquist();
    let u = u.spectrum().map(Spectrum::filter_nyquist);
    energy_parts(&phi, &u, params).total()
}

/// `M ||grad mu||^2 + nu ||grad u||^2`, a nonnegative magnitude.
pub fn dissipation_rate_spectral(mu: &Spectrum, u: &VectorSpectrum, params: &ModelParams) -> f64 {
    let gm = mu.h1_seminorm();
    let gu = u.h1_seminorm();
    params.mobility * gm * gm + params.nu * gu * gu
}

pub fn dissipation_rate(mu: &ScalarField, u: &VectorField2, params: &ModelParams) -> f64 {
    dissipation_rate_spectral(&mu.spectrum(), &u.spectrum(), params)
}

/// `lambda F'(phi)` with the cubic formed by a dealiased product.
pub fn nonlinear_potential_term(phi: &Spectrum, params: &ModelParams) -> Spectrum {
    let cube = product_spectral(&[phi, phi, phi]);
    let e2 = params.eps * params.eps;
    let mut out = cube.scale(params.lambda / e2);
    out.axpy(-params.lambda * (1.0 / e2 + params.gamma), phi);
    out
}

/// Chemical potential `-lambda lap phi + lambda gamma phi + lambda F'(phi)`.
pub fn chemical_potential(phi: &Spectrum, params: &ModelParams) -> Spectrum {
    let mut mu = nonlinear_potential_term(phi, params);
    mu.axpy(-params.lambda, &phi.laplacian());
    mu.axpy(params.lambda * params.gamma, phi);
    mu
}

/// Buoyancy `chi (phi - mean(phi)) g`; the mean is taken from the field itself.
pub fn buoyancy_force_spectral(phi: &Spectrum, params: &ModelParams) -> VectorSpectrum {
    let fluct = phi.without_mean();
    VectorSpectrum {
        x: fluct.scale(params.chi * params.gravity[0]),
        y: fluct.scale(params.chi * params.gravity[1]),
    }
}

pub fn buoyancy_force(phi: &ScalarField, params: &ModelParams) -> VectorField2 {
    buoyancy_force_spectral(&phi.spectrum(), params).to_field()
}
