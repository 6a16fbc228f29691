//! Real spherical harmonics, rigid-sphere radial filters, regularized
//! harmonic-coefficient estimation, and first-order extraction.
//!
//! # Conventions
//!
//! Harmonics are real-valued and fully orthonormal (`Y_00 = 1/sqrt(4 pi)`,
//! integral of `Y^2` over the sphere is 1), without the Condon-Shortley
//! phase, in ACN channel order (`index = n(n+1) + m`). Under this basis a
//! unit plane wave arriving from direction `nu` has coefficients
//! `a_nm = Y_nm(nu)`, and on a rigid sphere of radius `r` the surface
//! pressure is `p(dir) = sum a_nm b_n(kr) Y_nm(dir)`.
//!
//! With the `e^{+j omega t}` time convention used throughout (spatial factor
//! `e^{+j k r . nu}`, `nu` pointing toward the source), outgoing radiation is
//! carried by the spherical Hankel function of the second kind
//! `h_n = j_n - i y_n`, and the rigid-boundary radial filter is
//!
//! `b_n(x) = 4 pi i^n [ j_n(x) - (j_n'(x) / h_n'(x)) h_n(x) ]`,
//!
//! equivalently `4 pi i^(n-1) / (x^2 h_n'(x))` via the Wronskian.
//!
//! First-order extraction from coefficients `a` (ACN order):
//! pressure `p = sqrt(4 pi) a_0`; velocity
//! `u = -sqrt(4 pi / 3) / Z0 * [a_3, a_1, a_2]` for (x, y, z), i.e.
//! `a_1x` is ACN 3, `a_1y` is ACN 1, `a_1z` is ACN 2. These follow from
//! `Y_11 = sqrt(3/4pi) x`, `Y_1-1 = sqrt(3/4pi) y`, `Y_10 = sqrt(3/4pi) z`
//! and the plane-wave relation `u = -nu p / Z0`.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use crate::arrays::{ArraySpec, Baffle};
use crate::bessel::{spherical_jn, spherical_yn};
use crate::error::{Error, Result};
use crate::spatial::Direction;
use crate::wavefield::{Medium, PressureSnapshot};

/// Default Tikhonov regularization for the angular inversion.
pub const DEFAULT_REGULARIZATION: f64 = 1e-4;

/// Relative cutoff of the synthesis truncation rule.
pub const TRUNCATION_CUTOFF: f64 = 1e-8;

/// Hard cap on adaptive synthesis order.
pub const MAX_SYNTHESIS_ORDER: usize = 64;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Number of harmonics up to order `n` inclusive.
pub fn harmonic_count(order: usize) -> usize {
    (order + 1) * (order + 1)
}

/// Associated Legendre functions `P_n^m(x)` for all n <= nmax, m <= n,
/// without the Condon-Shortley phase. Indexed as `p[n][m]`.
fn assoc_legendre(nmax: usize, x: f64) -> Vec<Vec<f64>> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut p = vec![vec![0.0; nmax + 1]; nmax + 1];
    p[0][0] = 1.0;
    for m in 1..=nmax {
        p[m][m] = p[m - 1][m - 1] * (2.0 * m as f64 - 1.0) * s;
    }
    for m in 0..nmax {
        p[m + 1][m] = x * (2.0 * m as f64 + 1.0) * p[m][m];
    }
    for m in 0..=nmax {
        for n in (m + 2)..=nmax {
            let nf = n as f64;
            let mf = m as f64;
            p[n][m] = ((2.0 * nf - 1.0) * x * p[n - 1][m] - (nf + mf - 1.0) * p[n - 2][m])
                / (nf - mf);
        }
    }
    p
}

/// One row of the harmonic matrix: `Y_nm(dir)` in ACN order.
pub fn sh_row(dir: &Direction, order: usize) -> Vec<f64> {
    let v = dir.as_vector();
    let cos_theta = v.z.clamp(-1.0, 1.0);
    let phi = v.y.atan2(v.x);
    let p = assoc_legendre(order, cos_theta);
    let mut row = Vec::with_capacity(harmonic_count(order));
    for n in 0..=order {
        for m in -(n as i64)..=(n as i64) {
            let am = m.unsigned_abs() as usize;
            let k = ((2.0 * n as f64 + 1.0) / FOUR_PI * factorial(n - am) / factorial(n + am))
                .sqrt();
            let val = if m == 0 {
                k * p[n][0]
            } else if m > 0 {
                std::f64::consts::SQRT_2 * k * (am as f64 * phi).cos() * p[n][am]
            } else {
                std::f64::consts::SQRT_2 * k * (am as f64 * phi).sin() * p[n][am]
            };
            row.push(val);
        }
    }
    row
}

/// Harmonic matrix of shape `Q x (order+1)^2` for Q directions.
pub fn sh_matrix(dirs: &[Direction], order: usize) -> DMatrix<f64> {
    let cols = harmonic_count(order);
    let mut y = DMatrix::<f64>::zeros(dirs.len(), cols);
    for (q, d) in dirs.iter().enumerate() {
        for (c, v) in sh_row(d, order).into_iter().enumerate() {
            y[(q, c)] = v;
        }
    }
    y
}

/// Rigid-sphere radial filters `b_0..b_order` at `ka`.
#[derive(Debug, Clone)]
pub struct RadialFilters {
    pub ka: f64,
    pub values: Vec<Complex64>,
}

impl RadialFilters {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    /// Filter for harmonic degree n.
    pub fn at(&self, n: usize) -> Complex64 {
        self.values[n]
    }
}

fn unit_power_i(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Radial filters via the boundary-condition subtraction form.
pub fn radial_filters(ka: f64, order: usize) -> Result<RadialFilters> {
    if ka <= 0.0 || !ka.is_finite() {
        return Err(Error::Domain(format!("ka must be positive (got {ka})")));
    }
    let (j, dj) = spherical_jn(order, ka);
    let (y, dy) = spherical_yn(order, ka);
    let values = (0..=order)
        .map(|n| {
            if !y[n].is_finite() || !dy[n].is_finite() {
                return Complex64::new(0.0, 0.0); // deeply evanescent mode
            }
            let h = Complex64::new(j[n], -y[n]);
            let hp = Complex64::new(dj[n], -dy[n]);
            unit_power_i(n) * FOUR_PI * (Complex64::new(j[n], 0.0) - h * (dj[n] / hp))
        })
        .collect();
    Ok(RadialFilters { ka, values })
}

/// Radial filters via the Wronskian closed form `4 pi i^(n-1) / (x^2 h_n'(x))`.
pub fn radial_filters_wronskian(ka: f64, order: usize) -> Result<RadialFilters> {
    if ka <= 0.0 || !ka.is_finite() {
        return Err(Error::Domain(format!("ka must be positive (got {ka})")));
    }
    let (_, dj) = spherical_jn(order, ka);
    let (_, dy) = spherical_yn(order, ka);
    let values = (0..=order)
        .map(|n| {
            if !dy[n].is_finite() {
                return Complex64::new(0.0, 0.0);
            }
            let hp = Complex64::new(dj[n], -dy[n]);
            unit_power_i(n + 3) * FOUR_PI / (ka * ka * hp)
        })
        .collect();
    Ok(RadialFilters { ka, values })
}

/// Smallest order at which `|b_n|` drops below `TRUNCATION_CUTOFF` times the
/// running maximum, capped at `MAX_SYNTHESIS_ORDER`.
pub fn synthesis_order(ka: f64) -> Result<usize> {
    let filters = radial_filters(ka, MAX_SYNTHESIS_ORDER)?;
    let mut max = 0.0_f64;
    for (n, b) in filters.values.iter().enumerate() {
        max = max.max(b.norm());
        if n >= 1 && b.norm() < TRUNCATION_CUTOFF * max {
            return Ok(n);
        }
    }
    Ok(MAX_SYNTHESIS_ORDER)
}

/// Harmonic coefficients in ACN order.
#[derive(Debug, Clone, PartialEq)]
pub struct HoaCoefficients {
    pub order: usize,
    pub values: Vec<Complex64>,
}

impl HoaCoefficients {
    pub fn zeros(order: usize) -> Self {
        HoaCoefficients {
            order,
            values: vec![Complex64::new(0.0, 0.0); harmonic_count(order)],
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Analytic coefficients of a plane wave `A e^{j phi}` from `incidence`.
    pub fn plane_wave(incidence: &Direction, amplitude: Complex64, order: usize) -> Self {
        let values = sh_row(incidence, order)
            .into_iter()
            .map(|y| amplitude * y)
            .collect();
        HoaCoefficients { order, values }
    }

    /// CSV dump `acn,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("acn,re,im\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{}\n",
                crate::report::format_float(v.re),
                crate::report::format_float(v.im)
            ));
        }
        out
    }
}

/// Regularized least-squares estimator for one array geometry.
///
/// The angular inversion `(Y^T Y + lambda I)^{-1} Y^T` is precomputed once;
/// per-frequency work is a matrix-vector product plus the radial equalization
/// `B^{-1}`.
pub struct HoaEstimator {
    order: usize,
    radius_m: f64,
    sensor_count: usize,
    inversion: DMatrix<f64>,
}

impl HoaEstimator {
    pub fn new(spec: &ArraySpec, order: usize, lambda: f64) -> Result<Self> {
        let radius_m = match spec.baffle {
            Baffle::RigidSphere { radius_m } => radius_m,
            Baffle::None => {
                return Err(Error::ModelMismatch(
                    "harmonic estimation requires a rigid-sphere array".into(),
                ))
            }
        };
        if lambda < 0.0 {
            return Err(Error::Domain("regularization must be non-negative".into()));
        }
        let dirs: Vec<Direction> = spec.sensors.iter().map(|s| s.orientation).collect();
        let y = sh_matrix(&dirs, order);
        let cols = harmonic_count(order);
        let mut gram = y.transpose() * &y;
        for i in 0..cols {
            gram[(i, i)] += lambda;
        }
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Domain("normal equations are not positive definite".into()))?;
        let inversion = chol.solve(&y.transpose());
        Ok(HoaEstimator {
            order,
            radius_m,
            sensor_count: spec.sensors.len(),
            inversion,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Estimate coefficients from a surface-pressure snapshot.
    pub fn estimate(&self, snapshot: &PressureSnapshot, medium: &Medium) -> Result<HoaCoefficients> {
        if snapshot.values.len() != self.sensor_count {
            return Err(Error::Domain(format!(
                "snapshot has {} sensors, estimator expects {}",
                snapshot.values.len(),
                self.sensor_count
            )));
        }
        let ka = medium.wavenumber(snapshot.frequency_hz) * self.radius_m;
        let filters = radial_filters(ka, self.order)?;
        let cols = harmonic_count(self.order);
        let mut values = vec![Complex64::new(0.0, 0.0); cols];
        for (i, value) in values.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (q, p) in snapshot.values.iter().enumerate() {
                acc += self.inversion[(i, q)] * p;
            }
            *value = acc;
        }
        let mut acn = 0;
        for n in 0..=self.order {
            let b = filters.at(n);
            for _ in 0..(2 * n + 1) {
                values[acn] /= b;
                acn += 1;
            }
        }
        Ok(HoaCoefficients {
            order: self.order,
            values,
        })
    }
}

/// One-shot convenience wrapper around [`HoaEstimator`].
pub fn estimate_hoa(
    snapshot: &PressureSnapshot,
    spec: &ArraySpec,
    medium: &Medium,
    order: usize,
    lambda: f64,
) -> Result<HoaCoefficients> {
    HoaEstimator::new(spec, order, lambda)?.estimate(snapshot, medium)
}

/// First-order pressure and particle velocity from harmonic coefficients.
pub fn foa_from_hoa(
    a: &HoaCoefficients,
    medium: &Medium,
) -> Result<(Complex64, Vector3<Complex64>)> {
    if a.order < 1 || a.values.len() < 4 {
        return Err(Error::UndefinedField(
            "first-order extraction needs coefficients up to order 1".into(),
        ));
    }
    let p = Complex64::new(FOUR_PI.sqrt(), 0.0) * a.values[0];
    let scale = -(FOUR_PI / 3.0).sqrt() / medium.impedance();
    let u = Vector3::new(
        scale * a.values[3], // a_1x = ACN 3
        scale * a.values[1], // a_1y = ACN 1
        scale * a.values[2], // a_1z = ACN 2
    );
    Ok((p, u))
}
