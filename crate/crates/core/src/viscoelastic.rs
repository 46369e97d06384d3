//! Standard linear solid (SLS) phases and the local isotropic constitutive law.
//!
//! Each phase carries one SLS branch for the bulk modulus and one for the
//! shear modulus. At pulsation `omega` a branch evaluates to
//!
//! ```text
//! M(jw) = (M_inf + jw*tau*M_0) / (1 + jw*tau)
//! ```
//!
//! so `M(0) = M_inf` (relaxed) and `M(inf) = M_0` (unrelaxed). All moduli are
//! in GPa, times in seconds, pulsations in rad/s.
//!
//! Tensors are 2D plane strain with tensorial (not engineering) shear
//! components.

use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid SLS parameters for {what}: {reason}")]
    InvalidParams { what: String, reason: String },
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("unknown material preset '{0}' (known: table1)")]
    UnknownPreset(String),
    #[error("cannot read material file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed material file {path}: {message}")]
    Parse { path: String, message: String },
}

/// One SLS branch: relaxed modulus, unrelaxed modulus and relaxation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlsParams {
    /// Unrelaxed (high-frequency) modulus, GPa.
    pub m0: f64,
    /// Relaxed (low-frequency) modulus, GPa.
    pub m_inf: f64,
    /// Relaxation time, s.
    pub tau: f64,
}

impl SlsParams {
    pub fn new(m0: f64, m_inf: f64, tau: f64) -> Result<Self, MaterialError> {
        let p = Self { m0, m_inf, tau };
        p.validate("SLS branch")?;
        Ok(p)
    }

    pub fn validate(&self, what: &str) -> Result<(), MaterialError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.m0) && ok(self.m_inf) && ok(self.tau) {
            Ok(())
        } else {
            Err(MaterialError::InvalidParams {
                what: what.to_string(),
                reason: format!(
                    "m0={}, m_inf={}, tau={} must all be finite and > 0",
                    self.m0, self.m_inf, self.tau
                ),
            })
        }
    }

    /// Complex modulus at pulsation `omega`.
    pub fn modulus(&self, omega: f64) -> Complex64 {
        sls_modulus(self, omega)
    }
}

/// `(m_inf + j*omega*tau*m0) / (1 + j*omega*tau)`.
pub fn sls_modulus(p: &SlsParams, omega: f64) -> Complex64 {
    let wt = omega * p.tau;
    let num = Complex64::new(p.m_inf, wt * p.m0);
    let den = Complex64::new(1.0, wt);
    num / den
}

/// Complex bulk and shear moduli of one phase at a fixed pulsation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexModuli {
    pub k: Complex64,
    pub g: Complex64,
}

impl ComplexModuli {
    pub fn new(k: Complex64, g: Complex64) -> Self {
        Self { k, g }
    }

    pub fn real(k: f64, g: f64) -> Self {
        Self::new(Complex64::new(k, 0.0), Complex64::new(g, 0.0))
    }

    /// First Lamé constant `k - 2g/3`.
    pub fn lambda(&self) -> Complex64 {
        self.k - self.g * (2.0 / 3.0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.k * c, self.g * c)
    }
}

/// Viscoelastic phase: bulk and shear SLS branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMaterial {
    pub name: String,
    pub bulk: SlsParams,
    pub shear: SlsParams,
}

impl PhaseMaterial {
    pub fn validate(&self) -> Result<(), MaterialError> {
        self.bulk.validate(&format!("{} bulk", self.name))?;
        self.shear.validate(&format!("{} shear", self.name))
    }

    pub fn moduli_at(&self, omega: f64) -> ComplexModuli {
        ComplexModuli::new(self.bulk.modulus(omega), self.shear.modulus(omega))
    }

    /// Purely real moduli of the fully relaxed state (`omega -> 0`).
    pub fn relaxed(&self) -> ComplexModuli {
        ComplexModuli::real(self.bulk.m_inf, self.shear.m_inf)
    }

    /// Purely real moduli of the unrelaxed state (`omega -> inf`).
    pub fn unrelaxed(&self) -> ComplexModuli {
        ComplexModuli::real(self.bulk.m0, self.shear.m0)
    }
}

/// Matrix/fiber pair swept by the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialPair {
    pub matrix: PhaseMaterial,
    pub fiber: PhaseMaterial,
}

impl MaterialPair {
    /// Built-in polypropylene-like matrix with glass-like fibers.
    pub fn table1() -> Self {
        let (matrix, fiber) = table1_materials();
        Self { matrix, fiber }
    }

    /// Resolves a preset name or a path to a TOML material file.
    pub fn from_preset_or_file(spec: &str) -> Result<Self, MaterialError> {
        match spec {
            "table1" => Ok(Self::table1()),
            _ if Path::new(spec).exists() => Self::load(spec),
            _ if spec.ends_with(".toml") || spec.contains('/') => {
                Err(MaterialError::NotFound(spec.to_string()))
            }
            _ => Err(MaterialError::UnknownPreset(spec.to_string())),
        }
    }

    /// Loads a material file.
    ///
    /// Schema (all moduli GPa, tau in s):
    ///
    /// ```toml
    /// [matrix]
    /// name = "epoxy"
    /// bulk = { m0 = 8.6, m_inf = 7.33, tau = 1.0 }
    /// shear = { m0 = 0.55, m_inf = 0.47, tau = 1.0 }
    ///
    /// [fiber]
    /// name = "glass"
    /// bulk = { m0 = 40.5556, m_inf = 4.05556, tau = 10.0 }
    /// shear = { m0 = 30.4167, m_inf = 3.04167, tau = 10.0 }
    /// ```
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MaterialError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                MaterialError::NotFound(path.display().to_string())
            } else {
                MaterialError::Io {
                    path: path.display().to_string(),
                    source,
                }
            }
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            MaterialError::Parse { message, .. } => MaterialError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, MaterialError> {
        let pair: Self = toml::from_str(text).map_err(|e| MaterialError::Parse {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        pair.matrix.validate()?;
        pair.fiber.validate()?;
        Ok(pair)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("material pair serializes")
    }

    pub fn digest(&self) -> String {
        crate::digest::json_digest(self)
    }

    /// Shortest relaxation time over both phases and branches.
    pub fn tau_min(&self) -> f64 {
        self.taus().fold(f64::INFINITY, f64::min)
    }

    pub fn tau_max(&self) -> f64 {
        self.taus().fold(0.0, f64::max)
    }

    fn taus(&self) -> impl Iterator<Item = f64> {
        [
            self.matrix.bulk.tau,
            self.matrix.shear.tau,
            self.fiber.bulk.tau,
            self.fiber.shear.tau,
        ]
        .into_iter()
    }
}

/// The matrix and fiber phases stored at their published precision.
pub fn table1_materials() -> (PhaseMaterial, PhaseMaterial) {
    let matrix = PhaseMaterial {
        name: "matrix".into(),
        bulk: SlsParams {
            m0: 8.6,
            m_inf: 7.33,
            tau: 1.0,
        },
        shear: SlsParams {
            m0: 0.55,
            m_inf: 0.47,
            tau: 1.0,
        },
    };
    let fiber = PhaseMaterial {
        name: "fiber".into(),
        bulk: SlsParams {
            m0: 40.5556,
            m_inf: 4.05556,
            tau: 10.0,
        },
        shear: SlsParams {
            m0: 30.4167,
            m_inf: 3.04167,
            tau: 10.0,
        },
    };
    (matrix, fiber)
}

/// Young's modulus and Poisson ratio to bulk and shear moduli.
pub fn elastic_to_bulk_shear(e: f64, nu: f64) -> Result<(f64, f64), MaterialError> {
    if !(nu > -1.0 && nu < 0.5) {
        return Err(MaterialError::Domain(format!(
            "Poisson ratio {nu} outside (-1, 0.5)"
        )));
    }
    if !(e > 0.0 && e.is_finite()) {
        return Err(MaterialError::Domain(format!(
            "Young's modulus {e} must be > 0"
        )));
    }
    Ok((e / (3.0 * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu))))
}

/// Inverse of [`elastic_to_bulk_shear`].
pub fn bulk_shear_to_elastic(k: f64, g: f64) -> (f64, f64) {
    let e = 9.0 * k * g / (3.0 * k + g);
    let nu = (3.0 * k - 2.0 * g) / (2.0 * (3.0 * k + g));
    (e, nu)
}

/// Symmetric in-plane tensor with complex components.
///
/// `xy` is the tensorial shear component; the engineering shear strain is
/// `2 * xy`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: Complex64,
    pub yy: Complex64,
    pub xy: Complex64,
}

impl SymTensor2 {
    pub const ZERO: Self = Self {
        xx: Complex64::new(0.0, 0.0),
        yy: Complex64::new(0.0, 0.0),
        xy: Complex64::new(0.0, 0.0),
    };

    pub fn new(xx: Complex64, yy: Complex64, xy: Complex64) -> Self {
        Self { xx, yy, xy }
    }

    pub fn real(xx: f64, yy: f64, xy: f64) -> Self {
        Self::new(xx.into(), yy.into(), xy.into())
    }

    /// Pure tensorial shear `eps_xy = value`.
    pub fn shear(value: f64) -> Self {
        Self::real(0.0, 0.0, value)
    }

    pub fn trace(&self) -> Complex64 {
        self.xx + self.yy
    }

    /// Frobenius norm over the full 2x2 tensor (off-diagonal counted twice).
    pub fn norm(&self) -> f64 {
        (self.xx.norm_sqr() + self.yy.norm_sqr() + 2.0 * self.xy.norm_sqr()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [self.xx, self.yy, self.xy]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Add for SymTensor2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl Sub for SymTensor2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl Neg for SymTensor2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.xx, -self.yy, -self.xy)
    }
}

impl Mul<Complex64> for SymTensor2 {
    type Output = Self;
    fn mul(self, c: Complex64) -> Self {
        Self::new(self.xx * c, self.yy * c, self.xy * c)
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self::new(self.xx * c, self.yy * c, self.xy * c)
    }
}

/// Plane-strain isotropic law `sigma = (K - 2G/3) tr(eps) I + 2G eps`.
///
/// `eps_zz = 0`, so `tr(eps) = eps_xx + eps_yy`. The out-of-plane stress
/// `sigma_zz = (K - 2G/3) tr(eps)` is not stored.
pub fn apply_constitutive(m: &ComplexModuli, strain: &SymTensor2) -> SymTensor2 {
    let lt = m.lambda() * strain.trace();
    let two_g = m.g * 2.0;
    SymTensor2::new(
        lt + two_g * strain.xx,
        lt + two_g * strain.yy,
        two_g * strain.xy,
    )
}

/// Out-of-plane stress recovered from an in-plane strain.
pub fn out_of_plane_stress(m: &ComplexModuli, strain: &SymTensor2) -> Complex64 {
    m.lambda() * strain.trace()
}
