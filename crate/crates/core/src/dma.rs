//! Virtual DMA: frequency sweeps of the effective complex shear modulus.
//!
//! The cell is loaded by a mean tensorial shear strain `eps_xy = gamma0 / 2`
//! (all other components zero) and the reported modulus is
//! `G*_xy = <sigma_xy> / gamma0`, with `gamma0` the engineering shear
//! amplitude. With this convention a homogeneous cell returns exactly the
//! phase's `G(jw)`.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homogenizer::{Homogenizer, SolveError, SolveResult, SolverSettings};
use crate::microstructure::PhaseGrid;
use crate::viscoelastic::{MaterialPair, SymTensor2};

/// Engineering shear amplitude used for reported curves.
pub const SHEAR_AMPLITUDE: f64 = 1.0;
pub const CSV_HEADER: &str = "omega_rad_s,g_storage_gpa,g_loss_gpa";

#[derive(Debug, Error)]
pub enum DmaError {
    #[error("invalid frequency grid: {0}")]
    InvalidFrequencyGrid(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed curve CSV {path}, line {line}: {message}")]
    Csv {
        path: String,
        line: usize,
        message: String,
    },
}

/// Strictly increasing positive pulsations, rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub const DEFAULT_MIN: f64 = 1e-3;
    pub const DEFAULT_MAX: f64 = 1e3;
    pub const DEFAULT_POINTS: usize = 30;

    /// `count` points evenly spaced in `log10(omega)`, both ends included.
    pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Self, DmaError> {
        if !(min > 0.0 && max > min && min.is_finite() && max.is_finite()) {
            return Err(DmaError::InvalidFrequencyGrid(format!(
                "need 0 < omega_min < omega_max, got {min} and {max}"
            )));
        }
        if count < 2 {
            return Err(DmaError::InvalidFrequencyGrid(format!(
                "need at least 2 points, got {count}"
            )));
        }
        let (a, b) = (min.log10(), max.log10());
        let step = (b - a) / (count - 1) as f64;
        let mut omegas: Vec<f64> = (0..count)
            .map(|i| 10f64.powf(a + step * i as f64))
            .collect();
        omegas[0] = min;
        omegas[count - 1] = max;
        Self::new(omegas)
    }

    pub fn new(omegas: Vec<f64>) -> Result<Self, DmaError> {
        if omegas.len() < 2 {
            return Err(DmaError::InvalidFrequencyGrid(
                "need at least 2 points".into(),
            ));
        }
        if omegas.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(DmaError::InvalidFrequencyGrid(
                "pulsations must be finite and > 0".into(),
            ));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DmaError::InvalidFrequencyGrid(
                "pulsations must be strictly increasing".into(),
            ));
        }
        Ok(Self { omegas })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Index of the grid point closest to `omega` in log scale.
    pub fn nearest_index(&self, omega: f64) -> usize {
        let target = omega.log10();
        let mut best = 0;
        for (i, w) in self.omegas.iter().enumerate() {
            if (w.log10() - target).abs() < (self.omegas[best].log10() - target).abs() {
                best = i;
            }
        }
        best
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self::log_spaced(Self::DEFAULT_MIN, Self::DEFAULT_MAX, Self::DEFAULT_POINTS)
            .expect("default grid is valid")
    }
}

impl TryFrom<Vec<f64>> for FrequencyGrid {
    type Error = String;
    fn try_from(v: Vec<f64>) -> Result<Self, String> {
        Self::new(v).map_err(|e| e.to_string())
    }
}

impl From<FrequencyGrid> for Vec<f64> {
    fn from(g: FrequencyGrid) -> Self {
        g.omegas
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub source: String,
    pub solver_digest: String,
}

/// Storage and loss shear moduli over a frequency grid, GPa.
#[derive(Debug, Clone, PartialEq)]
pub struct DmaCurve {
    pub omegas: Vec<f64>,
    pub storage: Vec<f64>,
    pub loss: Vec<f64>,
    /// Per-point solver convergence; always true for curves read from CSV.
    pub converged: Vec<bool>,
    pub metadata: CurveMetadata,
}

impl DmaCurve {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn unconverged_indices(&self) -> Vec<usize> {
        self.converged
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn modulus(&self, i: usize) -> Complex64 {
        Complex64::new(self.storage[i], self.loss[i])
    }

    /// Interior indices where the loss is strictly above both neighbours.
    pub fn loss_local_maxima(&self) -> Vec<usize> {
        (1..self.len().saturating_sub(1))
            .filter(|&i| self.loss[i] > self.loss[i - 1] && self.loss[i] > self.loss[i + 1])
            .collect()
    }

    /// CSV with 17 significant digits per value, lowest pulsation first.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                self.omegas[i], self.storage[i], self.loss[i]
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn from_csv(text: &str, path: &str) -> Result<Self, DmaError> {
        let csv_err = |line: usize, message: String| DmaError::Csv {
            path: path.into(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            Some((_, h)) => return Err(csv_err(1, format!("unexpected header '{h}'"))),
            None => return Err(csv_err(1, "empty file".into())),
        }
        let (mut omegas, mut storage, mut loss) = (Vec::new(), Vec::new(), Vec::new());
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(csv_err(i + 1, format!("expected 3 fields, got {}", fields.len())));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| csv_err(i + 1, format!("'{s}': {e}")))
            };
            omegas.push(parse(fields[0])?);
            storage.push(parse(fields[1])?);
            loss.push(parse(fields[2])?);
        }
        FrequencyGrid::new(omegas.clone()).map_err(|e| csv_err(0, e.to_string()))?;
        let n = omegas.len();
        Ok(Self {
            omegas,
            storage,
            loss,
            converged: vec![true; n],
            metadata: CurveMetadata {
                source: path.into(),
                solver_digest: String::new(),
            },
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DmaError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|source| DmaError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, DmaError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                DmaError::NotFound(shown.clone())
            } else {
                DmaError::Io {
                    path: shown.clone(),
                    source,
                }
            }
        })?;
        Self::from_csv(&text, &shown)
    }
}

/// Solves one pulsation under the reporting load; `NotConverged` comes back
/// as `Ok` with `converged == false`.
fn solve_point(
    homogenizer: &Homogenizer,
    grid: &PhaseGrid,
    materials: &MaterialPair,
    omega: f64,
    settings: &SolverSettings,
    gamma0: f64,
) -> Result<SolveResult, SolveError> {
    let m = materials.matrix.moduli_at(omega);
    let f = materials.fiber.moduli_at(omega);
    let load = SymTensor2::shear(gamma0 / 2.0);
    match homogenizer.solve(grid, &m, &f, &load, settings) {
        Ok(r) => Ok(r),
        Err(SolveError::NotConverged { result }) => {
            log::warn!(
                "omega={omega:e}: not converged after {} iterations (residual {:.3e})",
                result.iterations,
                result.final_residual
            );
            Ok(*result)
        }
        Err(e) => Err(e),
    }
}

/// Full solver output at every pulsation, in grid order.
///
/// Pulsations run in parallel on the current rayon pool; each point is an
/// independent pure solve, so the result does not depend on scheduling.
pub fn sweep_solutions(
    homogenizer: &Homogenizer,
    grid: &PhaseGrid,
    materials: &MaterialPair,
    freq: &FrequencyGrid,
    settings: &SolverSettings,
    gamma0: f64,
) -> Result<Vec<SolveResult>, DmaError> {
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        return Err(SolveError::InvalidInput(format!("shear amplitude {gamma0} must be > 0")).into());
    }
    freq.omegas()
        .par_iter()
        .map(|&w| solve_point(homogenizer, grid, materials, w, settings, gamma0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(DmaError::from)
}

pub fn sweep_with_amplitude(
    homogenizer: &Homogenizer,
    grid: &PhaseGrid,
    materials: &MaterialPair,
    freq: &FrequencyGrid,
    settings: &SolverSettings,
    gamma0: f64,
) -> Result<DmaCurve, DmaError> {
    let solutions = sweep_solutions(homogenizer, grid, materials, freq, settings, gamma0)?;
    let moduli: Vec<Complex64> = solutions
        .iter()
        .map(|s| s.mean_stress.xy / gamma0)
        .collect();
    Ok(DmaCurve {
        omegas: freq.omegas().to_vec(),
        storage: moduli.iter().map(|g| g.re).collect(),
        loss: moduli.iter().map(|g| g.im).collect(),
        converged: solutions.iter().map(|s| s.converged).collect(),
        metadata: CurveMetadata {
            source: String::new(),
            solver_digest: settings.digest(),
        },
    })
}

/// Storage/loss curve of `grid` over `freq`.
pub fn sweep(
    grid: &PhaseGrid,
    materials: &MaterialPair,
    freq: &FrequencyGrid,
    settings: &SolverSettings,
) -> Result<DmaCurve, DmaError> {
    let h = Homogenizer::new(grid.resolution());
    sweep_with_amplitude(&h, grid, materials, freq, settings, SHEAR_AMPLITUDE)
}

/// Effective shear moduli of the fully relaxed and unrelaxed states.
pub fn elastic_limits_with(
    homogenizer: &Homogenizer,
    grid: &PhaseGrid,
    materials: &MaterialPair,
    settings: &SolverSettings,
) -> Result<(f64, f64), SolveError> {
    let load = SymTensor2::shear(SHEAR_AMPLITUDE / 2.0);
    let solve = |m, f| {
        homogenizer
            .solve(grid, &m, &f, &load, settings)
            .map(|r| r.mean_stress.xy.re / SHEAR_AMPLITUDE)
    };
    let relaxed = solve(materials.matrix.relaxed(), materials.fiber.relaxed())?;
    let unrelaxed = solve(materials.matrix.unrelaxed(), materials.fiber.unrelaxed())?;
    Ok((relaxed, unrelaxed))
}

pub fn elastic_limits(
    grid: &PhaseGrid,
    materials: &MaterialPair,
    settings: &SolverSettings,
) -> Result<(f64, f64), SolveError> {
    elastic_limits_with(&Homogenizer::new(grid.resolution()), grid, materials, settings)
}

/// Reuss (harmonic) and Voigt (arithmetic) mixtures of two moduli.
pub fn mix_bounds(vf: f64, matrix: Complex64, fiber: Complex64) -> (Complex64, Complex64) {
    let voigt = matrix * (1.0 - vf) + fiber * vf;
    let reuss = (matrix.inv() * (1.0 - vf) + fiber.inv() * vf).inv();
    (reuss, voigt)
}

/// Complex Reuss and Voigt shear moduli at pulsation `omega`.
pub fn bounds(vf: f64, materials: &MaterialPair, omega: f64) -> (Complex64, Complex64) {
    let gm = materials.matrix.shear.modulus(omega);
    let gf = materials.fiber.shear.modulus(omega);
    if vf <= 0.0 {
        return (gm, gm);
    }
    if vf >= 1.0 {
        return (gf, gf);
    }
    mix_bounds(vf, gm, gf)
}

/// Real Reuss and Voigt bounds at the relaxed and unrelaxed limits.
pub fn elastic_bounds(vf: f64, materials: &MaterialPair) -> [(f64, f64); 2] {
    let pair = |gm: f64, gf: f64| {
        if vf <= 0.0 {
            (gm, gm)
        } else if vf >= 1.0 {
            (gf, gf)
        } else {
            let (r, v) = mix_bounds(vf, gm.into(), gf.into());
            (r.re, v.re)
        }
    };
    [
        pair(materials.matrix.shear.m_inf, materials.fiber.shear.m_inf),
        pair(materials.matrix.shear.m0, materials.fiber.shear.m0),
    ]
}
