//! Periodic viscoelastic cell problem solved by the basic FFT scheme.
//!
//! At a fixed pulsation every phase has complex moduli, so the cell problem is
//! a complex-valued linear elasticity problem. With a homogeneous isotropic
//! reference medium `C0` the strain iterates as
//!
//! ```text
//! eps^{k+1} = eps^k - Gamma0 * sigma(eps^k)
//! ```
//!
//! where `Gamma0` is the periodic Green operator of `C0` applied in Fourier
//! space, and the zero frequency of the strain is pinned to the prescribed
//! mean strain. For plane strain and unit normal `n = xi / |xi|`:
//!
//! ```text
//! (Gamma0 : tau)_ij = (n_i a_j + n_j a_i) / (2 mu0) - kappa n_i n_j (n . tau . n),
//! a = tau . n,  kappa = (lambda0 + mu0) / (mu0 (lambda0 + 2 mu0))
//! ```
//!
//! Nyquist convention: for even resolutions, frequencies where either index
//! equals `R/2` have no well-defined sign, so `Gamma0` is replaced there by the
//! reference compliance `C0^{-1}`, which drives the stress at those
//! frequencies to zero. The convention is invariant under the square's
//! symmetries, keeping the discrete problem D4-equivariant.
//!
//! Convergence is measured by the equilibrium residual
//! `sqrt(mean_{xi != 0} |xi . sigma_hat(xi)|^2) / |sigma_hat(0)|` with
//! `xi = 2 pi k`, `k` in `[-R/2, R/2)^2`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fft::{signed_freq, Fft2};
use crate::microstructure::{Phase, PhaseGrid};
use crate::viscoelastic::{apply_constitutive, ComplexModuli, SymTensor2};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error(
        "not converged after {} iterations (residual {:.3e})",
        .result.iterations, .result.final_residual
    )]
    NotConverged { result: Box<SolveResult> },
}

/// Lamé constants of the homogeneous comparison medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMedium {
    pub lambda0: Complex64,
    pub mu0: Complex64,
}

impl ReferenceMedium {
    pub fn from_moduli(m: &ComplexModuli) -> Self {
        Self {
            lambda0: m.lambda(),
            mu0: m.g,
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bulk = self.lambda0 + self.mu0 * (2.0 / 3.0);
        if self.mu0.re > 0.0 && bulk.re > 0.0 {
            Ok(())
        } else {
            Err(SolveError::InvalidInput(format!(
                "reference medium lambda0={}, mu0={} is not positive",
                self.lambda0, self.mu0
            )))
        }
    }
}

/// Arithmetic mean of the phase moduli.
pub fn choose_reference(matrix: &ComplexModuli, fiber: &ComplexModuli) -> ReferenceMedium {
    choose_reference_weighted(matrix, fiber, 0.5)
}

/// `(1 - w) * matrix + w * fiber` for both bulk and shear moduli.
pub fn choose_reference_weighted(
    matrix: &ComplexModuli,
    fiber: &ComplexModuli,
    fiber_weight: f64,
) -> ReferenceMedium {
    let w = fiber_weight;
    let mixed = ComplexModuli::new(
        matrix.k * (1.0 - w) + fiber.k * w,
        matrix.g * (1.0 - w) + fiber.g * w,
    );
    ReferenceMedium::from_moduli(&mixed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Threshold on the normalized equilibrium residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Keep the converged strain and stress fields in the result.
    #[serde(default)]
    pub store_local_fields: bool,
    /// Fiber weight of the reference medium; 0.5 is the arithmetic mean.
    #[serde(default = "default_reference_weight")]
    pub reference_weight: f64,
}

fn default_reference_weight() -> f64 {
    0.5
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 1000,
            store_local_fields: false,
            reference_weight: default_reference_weight(),
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(SolveError::InvalidInput(format!(
                "tolerance {} must be > 0",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(SolveError::InvalidInput("max_iterations must be >= 1".into()));
        }
        if !(self.reference_weight > 0.0 && self.reference_weight < 1.0) {
            return Err(SolveError::InvalidInput(format!(
                "reference_weight {} outside (0, 1)",
                self.reference_weight
            )));
        }
        Ok(())
    }

    /// Digest of the settings that influence solver output.
    pub fn digest(&self) -> String {
        let canonical = SolverSettings {
            store_local_fields: false,
            ..*self
        };
        crate::digest::json_digest(&canonical)
    }
}

/// Per-pixel symmetric tensors, one row-major buffer per component.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    resolution: usize,
    pub xx: Vec<Complex64>,
    pub yy: Vec<Complex64>,
    pub xy: Vec<Complex64>,
}

impl TensorField {
    pub fn uniform(resolution: usize, value: SymTensor2) -> Self {
        let n = resolution * resolution;
        Self {
            resolution,
            xx: vec![value.xx; n],
            yy: vec![value.yy; n],
            xy: vec![value.xy; n],
        }
    }

    pub fn from_fn(resolution: usize, mut f: impl FnMut(usize, usize) -> SymTensor2) -> Self {
        let mut field = Self::uniform(resolution, SymTensor2::ZERO);
        for row in 0..resolution {
            for col in 0..resolution {
                field.set(row * resolution + col, f(row, col));
            }
        }
        field
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn get(&self, index: usize) -> SymTensor2 {
        SymTensor2::new(self.xx[index], self.yy[index], self.xy[index])
    }

    pub fn set(&mut self, index: usize, value: SymTensor2) {
        self.xx[index] = value.xx;
        self.yy[index] = value.yy;
        self.xy[index] = value.xy;
    }

    pub fn mean(&self) -> SymTensor2 {
        let n = self.xx.len() as f64;
        let avg = |v: &[Complex64]| v.iter().sum::<Complex64>() / n;
        SymTensor2::new(avg(&self.xx), avg(&self.yy), avg(&self.xy))
    }

    pub fn is_finite(&self) -> bool {
        [&self.xx, &self.yy, &self.xy]
            .iter()
            .all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }

    fn components_mut(&mut self) -> [&mut Vec<Complex64>; 3] {
        [&mut self.xx, &mut self.yy, &mut self.xy]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub mean_stress: SymTensor2,
    pub mean_strain: SymTensor2,
    /// Number of stress evaluations, including the converged one.
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub strain: Option<TensorField>,
    pub stress: Option<TensorField>,
}

/// Spectral lattice in the transposed `[kx][ky]` layout of [`Fft2`].
struct Lattice {
    /// `2 pi k`
    xi: Vec<(f64, f64)>,
    /// `xi / |xi|`, zero at the origin.
    unit: Vec<(f64, f64)>,
    nyquist: Vec<bool>,
}

impl Lattice {
    fn new(n: usize) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        let mut xi = Vec::with_capacity(n * n);
        let mut unit = Vec::with_capacity(n * n);
        let mut nyquist = Vec::with_capacity(n * n);
        for ix in 0..n {
            for iy in 0..n {
                let kx = signed_freq(ix, n) as f64;
                let ky = signed_freq(iy, n) as f64;
                xi.push((tau * kx, tau * ky));
                let norm = kx.hypot(ky);
                unit.push(if norm > 0.0 {
                    (kx / norm, ky / norm)
                } else {
                    (0.0, 0.0)
                });
                nyquist.push(n % 2 == 0 && (2 * ix == n || 2 * iy == n));
            }
        }
        Self { xi, unit, nyquist }
    }
}

/// Squared divergence `|xi . sigma_hat|^2` at one frequency.
#[inline]
fn divergence_sq(xi: (f64, f64), sxx: Complex64, syy: Complex64, sxy: Complex64) -> f64 {
    let dx = sxx * xi.0 + sxy * xi.1;
    let dy = sxy * xi.0 + syy * xi.1;
    dx.norm_sqr() + dy.norm_sqr()
}

fn normalized_residual(div_sum: f64, n_total: usize, zero: SymTensor2) -> f64 {
    let rms = if n_total > 1 {
        (div_sum / (n_total - 1) as f64).sqrt()
    } else {
        0.0
    };
    let scale = zero.norm();
    if scale > 0.0 {
        rms / scale
    } else {
        rms
    }
}

/// Normalized RMS of the Fourier-space divergence of a stress field.
pub fn equilibrium_residual(stress: &TensorField) -> f64 {
    let n = stress.resolution();
    let fft = Fft2::new(n);
    let mut ws = fft.workspace();
    let lattice = Lattice::new(n);
    let mut field = stress.clone();
    for c in field.components_mut() {
        fft.forward(c, &mut ws);
    }
    let sum: f64 = (1..n * n)
        .map(|p| divergence_sq(lattice.xi[p], field.xx[p], field.yy[p], field.xy[p]))
        .sum();
    normalized_residual(sum, n * n, field.get(0))
}

/// FFT plans and the frequency lattice for one resolution.
///
/// Reusable across pulsations and grids of the same resolution, and shareable
/// between threads.
pub struct Homogenizer {
    fft: Fft2,
    lattice: Lattice,
}

impl Homogenizer {
    pub fn new(resolution: usize) -> Self {
        Self {
            fft: Fft2::new(resolution),
            lattice: Lattice::new(resolution),
        }
    }

    pub fn resolution(&self) -> usize {
        self.fft.n()
    }

    /// Solves with the reference medium chosen by `settings.reference_weight`.
    pub fn solve(
        &self,
        grid: &PhaseGrid,
        matrix: &ComplexModuli,
        fiber: &ComplexModuli,
        mean_strain: &SymTensor2,
        settings: &SolverSettings,
    ) -> Result<SolveResult, SolveError> {
        settings.validate()?;
        let reference = choose_reference_weighted(matrix, fiber, settings.reference_weight);
        self.solve_with_reference(grid, matrix, fiber, mean_strain, settings, &reference)
    }

    pub fn solve_with_reference(
        &self,
        grid: &PhaseGrid,
        matrix: &ComplexModuli,
        fiber: &ComplexModuli,
        mean_strain: &SymTensor2,
        settings: &SolverSettings,
        reference: &ReferenceMedium,
    ) -> Result<SolveResult, SolveError> {
        settings.validate()?;
        reference.validate()?;
        let n = self.resolution();
        if grid.resolution() != n {
            return Err(SolveError::InvalidInput(format!(
                "grid resolution {} does not match solver resolution {n}",
                grid.resolution()
            )));
        }
        if !mean_strain.is_finite() {
            return Err(SolveError::InvalidInput("mean strain is not finite".into()));
        }

        let npix = n * n;
        let labels = grid.labels();
        let phase_consts = |m: &ComplexModuli| (m.lambda(), m.g * 2.0);
        let consts = [phase_consts(matrix), phase_consts(fiber)];

        let lambda0 = reference.lambda0;
        let mu0 = reference.mu0;
        let inv_mu0 = mu0.inv();
        let kappa = (lambda0 + mu0) / (mu0 * (lambda0 + mu0 * 2.0));
        let inv_two_mu0 = (mu0 * 2.0).inv();
        let inv_two_lm0 = ((lambda0 + mu0) * 2.0).inv();

        let mut strain = TensorField::uniform(n, *mean_strain);
        let mut stress = TensorField::uniform(n, SymTensor2::ZERO);
        let mut ws = self.fft.workspace();

        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        let mut mean_stress = SymTensor2::ZERO;
        let mut converged = false;

        while iterations < settings.max_iterations {
            iterations += 1;

            // Local law; `stress` ends up holding sigma(eps^k) in real space.
            for p in 0..npix {
                let (lam, two_g) = consts[(labels[p] == Phase::Fiber) as usize];
                let exx = strain.xx[p];
                let eyy = strain.yy[p];
                let lt = lam * (exx + eyy);
                stress.xx[p] = lt + two_g * exx;
                stress.yy[p] = lt + two_g * eyy;
                stress.xy[p] = two_g * strain.xy[p];
            }
            let mut spectral = stress.clone();
            for c in spectral.components_mut() {
                self.fft.forward(c, &mut ws);
            }
            mean_stress = spectral.get(0) * (1.0 / npix as f64);

            // Residual and Gamma0 : sigma_hat in one sweep, written in place.
            let mut div_sum = 0.0;
            for p in 1..npix {
                let sxx = spectral.xx[p];
                let syy = spectral.yy[p];
                let sxy = spectral.xy[p];
                div_sum += divergence_sq(self.lattice.xi[p], sxx, syy, sxy);
                let (dxx, dyy, dxy) = if self.lattice.nyquist[p] {
                    let tr = (sxx + syy) * inv_two_lm0;
                    (
                        (sxx - lambda0 * tr) * inv_two_mu0,
                        (syy - lambda0 * tr) * inv_two_mu0,
                        sxy * inv_two_mu0,
                    )
                } else {
                    let (nx, ny) = self.lattice.unit[p];
                    let ax = sxx * nx + sxy * ny;
                    let ay = sxy * nx + syy * ny;
                    let s = (ax * nx + ay * ny) * kappa;
                    (
                        (ax * nx) * inv_mu0 - s * (nx * nx),
                        (ay * ny) * inv_mu0 - s * (ny * ny),
                        (ax * ny + ay * nx) * (inv_mu0 * 0.5) - s * (nx * ny),
                    )
                };
                spectral.xx[p] = dxx;
                spectral.yy[p] = dyy;
                spectral.xy[p] = dxy;
            }
            residual = normalized_residual(div_sum, npix, mean_stress * npix as f64);
            if residual < settings.tolerance {
                converged = true;
                break;
            }
            if !residual.is_finite() {
                break;
            }
            if iterations == settings.max_iterations {
                break;
            }

            spectral.xx[0] = ZERO;
            spectral.yy[0] = ZERO;
            spectral.xy[0] = ZERO;
            for c in spectral.components_mut() {
                self.fft.inverse(c, &mut ws);
            }
            for (dst, src) in strain.components_mut().into_iter().zip([
                &spectral.xx,
                &spectral.yy,
                &spectral.xy,
            ]) {
                dst.iter_mut().zip(src).for_each(|(e, d)| *e -= d);
            }
        }

        let keep = settings.store_local_fields;
        let result = SolveResult {
            mean_stress,
            mean_strain: *mean_strain,
            iterations,
            final_residual: residual,
            converged,
            strain: keep.then_some(strain),
            stress: keep.then_some(stress),
        };
        if converged {
            Ok(result)
        } else {
            Err(SolveError::NotConverged {
                result: Box::new(result),
            })
        }
    }
}

/// One-shot solve; builds FFT plans for the grid's resolution.
pub fn solve_cell(
    grid: &PhaseGrid,
    matrix: &ComplexModuli,
    fiber: &ComplexModuli,
    mean_strain: &SymTensor2,
    settings: &SolverSettings,
) -> Result<SolveResult, SolveError> {
    Homogenizer::new(grid.resolution()).solve(grid, matrix, fiber, mean_strain, settings)
}

/// Stress field from a strain field through the local law.
pub fn stress_field(
    grid: &PhaseGrid,
    matrix: &ComplexModuli,
    fiber: &ComplexModuli,
    strain: &TensorField,
) -> TensorField {
    let mut out = TensorField::uniform(grid.resolution(), SymTensor2::ZERO);
    for (p, &phase) in grid.labels().iter().enumerate() {
        let m = if phase == Phase::Fiber { fiber } else { matrix };
        out.set(p, apply_constitutive(m, &strain.get(p)));
    }
    out
}

pub const FIELD_MAGIC: &[u8; 4] = b"VDMF";
pub const FIELD_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FieldKind {
    Strain = 0,
    Stress = 1,
}

/// Local field dump.
///
/// Little-endian layout: magic `VDMF`, u16 version, u16 resolution, u8 kind
/// (0 strain, 1 stress), u8 component count (3), u16 reserved, f64 pulsation,
/// then for each of `xx`, `yy`, `xy` the row-major `(re, im)` f32 pairs.
pub fn encode_field(field: &TensorField, kind: FieldKind, omega: f64) -> Vec<u8> {
    let r = field.resolution() as u16;
    let mut out = Vec::with_capacity(20 + 3 * 8 * field.xx.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.extend_from_slice(&r.to_le_bytes());
    out.push(kind as u8);
    out.push(3);
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&omega.to_le_bytes());
    for comp in [&field.xx, &field.yy, &field.xy] {
        for v in comp {
            out.extend_from_slice(&(v.re as f32).to_le_bytes());
            out.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct FieldDump {
    pub kind: FieldKind,
    pub omega: f64,
    pub field: TensorField,
}

pub fn decode_field(bytes: &[u8]) -> Result<FieldDump, String> {
    if bytes.len() < 20 || &bytes[..4] != FIELD_MAGIC {
        return Err("not a field dump (bad magic)".into());
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FIELD_VERSION {
        return Err(format!("unsupported field dump version {version}"));
    }
    let r = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let kind = match bytes[8] {
        0 => FieldKind::Strain,
        1 => FieldKind::Stress,
        k => return Err(format!("unknown field kind {k}")),
    };
    if bytes[9] != 3 {
        return Err(format!("expected 3 components, found {}", bytes[9]));
    }
    let omega = f64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let n = r * r;
    let body = &bytes[20..];
    if body.len() != 3 * n * 8 {
        return Err(format!(
            "expected {} payload bytes, found {}",
            3 * n * 8,
            body.len()
        ));
    }
    let read = |c: usize| -> Vec<Complex64> {
        (0..n)
            .map(|p| {
                let o = (c * n + p) * 8;
                let re = f32::from_le_bytes(body[o..o + 4].try_into().expect("4 bytes"));
                let im = f32::from_le_bytes(body[o + 4..o + 8].try_into().expect("4 bytes"));
                Complex64::new(re as f64, im as f64)
            })
            .collect()
    };
    Ok(FieldDump {
        kind,
        omega,
        field: TensorField {
            resolution: r,
            xx: read(0),
            yy: read(1),
            xy: read(2),
        },
    })
}

pub fn write_field(
    field: &TensorField,
    kind: FieldKind,
    omega: f64,
    path: impl AsRef<Path>,
) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_field(field, kind, omega))
}
