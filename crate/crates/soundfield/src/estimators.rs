//! Pressure/velocity/intensity/energy estimation per array type, covariance
//! assembly, eigen-analysis, and the diffuseness indices.
//!
//! Sign conventions follow the wave model in [`crate::wavefield`]: first-order
//! processing yields `u = -nu p / Z0` for a plane wave from `nu`, so active
//! intensity points away from the source and the arrival direction is
//! `-I / |I|`. The pair-difference quantities of [`cc_pair`] use the opposite,
//! arrival-positive sign along each axis (`I_r > 0` when the wave comes from
//! the positive end); callers that need a flow-signed Cartesian vector negate
//! the collapsed result.

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spatial::{frame_constant, Direction, DirectionMatrix};
use crate::wavefield::Medium;

/// First-order (B-format) signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BFormat {
    pub w: Complex64,
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

/// Tetrahedral capsule signals to B-format, with the 1/2 front factor.
pub fn a_to_b(capsules: &[Complex64; 4]) -> BFormat {
    let [d1, d2, d3, d4] = *capsules;
    BFormat {
        w: 0.5 * (d1 + d2 + d3 + d4),
        x: 0.5 * (d1 + d2 - d3 - d4),
        y: 0.5 * (d1 - d2 + d3 - d4),
        z: 0.5 * (d1 - d2 - d3 + d4),
    }
}

/// Pressure, velocity, active intensity, and energy density at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FoaQuantities {
    pub pressure: Complex64,
    pub velocity: Vector3<Complex64>,
    /// W/m^2, `I = Re(p u*) / 2`.
    pub intensity: Vector3<f64>,
    /// J/m^3, `E = |p|^2 / (4 rho c^2) + rho |u|^2 / 4`.
    pub energy: f64,
}

/// Intensity and energy density from pressure and velocity.
pub fn foa_from_pu(pressure: Complex64, velocity: Vector3<Complex64>, medium: &Medium) -> FoaQuantities {
    let intensity = Vector3::new(
        0.5 * (pressure * velocity.x.conj()).re,
        0.5 * (pressure * velocity.y.conj()).re,
        0.5 * (pressure * velocity.z.conj()).re,
    );
    let u_sq: f64 = velocity.iter().map(|c| c.norm_sqr()).sum();
    let c = medium.sound_speed;
    let energy = pressure.norm_sqr() / (4.0 * medium.density * c * c) + 0.25 * medium.density * u_sq;
    FoaQuantities {
        pressure,
        velocity,
        intensity,
        energy,
    }
}

/// B-format to physical quantities: `p = W`, `u = -sqrt(3)/Z0 [X, Y, Z]`.
pub fn foa_from_b(b: &BFormat, medium: &Medium) -> FoaQuantities {
    let s = -(3.0_f64.sqrt()) / medium.impedance();
    let u = Vector3::new(s * b.x, s * b.y, s * b.z);
    foa_from_pu(b.w, u, medium)
}

/// Per-axis quantities of one opposed microphone pair (pseudo C-C method).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisQuantities {
    pub pressure: Complex64,
    pub velocity: Complex64,
    /// Arrival-positive: `(|M+|^2 - |M-|^2) / (2 Z0)`.
    pub intensity: f64,
    pub energy: f64,
}

/// Sum/difference quantities of an opposed pair.
pub fn cc_pair(m_plus: Complex64, m_minus: Complex64, medium: &Medium) -> AxisQuantities {
    let z0 = medium.impedance();
    let pressure = m_plus + m_minus;
    let velocity = (m_plus - m_minus) / z0;
    let intensity = (m_plus.norm_sqr() - m_minus.norm_sqr()) / (2.0 * z0);
    let c = medium.sound_speed;
    let energy = pressure.norm_sqr() / (4.0 * medium.density * c * c)
        + 0.25 * medium.density * velocity.norm_sqr();
    AxisQuantities {
        pressure,
        velocity,
        intensity,
        energy,
    }
}

/// Result of a tight-frame collapse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collapsed<T> {
    pub xyz: Vector3<T>,
    /// True when the frame failed the tightness check and the full
    /// pseudoinverse was used instead of the scaled adjoint.
    pub used_pseudoinverse: bool,
}

pub(crate) fn collapse_matrix(frame: &DirectionMatrix) -> Result<(Matrix3<f64>, bool)> {
    let check = frame_constant(frame)?;
    let g = frame.as_matrix().transpose() * frame.as_matrix();
    if check.is_tight {
        Ok((Matrix3::identity() / check.constant, false))
    } else {
        let g3 = Matrix3::from_iterator(g.iter().copied());
        let inv = g3
            .try_inverse()
            .ok_or_else(|| Error::Domain("frame Gram matrix is singular".into()))?;
        Ok((inv, true))
    }
}

/// Collapse per-axis scalars to a Cartesian vector: `(1/A) R^T v` for a tight
/// frame, `(R^T R)^{-1} R^T v` otherwise (flagged).
pub fn tf_collapse(values: &[f64], frame: &DirectionMatrix) -> Result<Collapsed<f64>> {
    if values.len() != frame.len() {
        return Err(Error::Domain(format!(
            "{} values for a {}-axis frame",
            values.len(),
            frame.len()
        )));
    }
    let (m, used_pseudoinverse) = collapse_matrix(frame)?;
    let mut proj = Vector3::zeros();
    for (i, &v) in values.iter().enumerate() {
        proj += frame.row(i) * v;
    }
    Ok(Collapsed {
        xyz: m * proj,
        used_pseudoinverse,
    })
}

/// Complex variant of [`tf_collapse`], used for per-axis velocities.
pub fn tf_collapse_complex(
    values: &[Complex64],
    frame: &DirectionMatrix,
) -> Result<Collapsed<Complex64>> {
    if values.len() != frame.len() {
        return Err(Error::Domain(format!(
            "{} values for a {}-axis frame",
            values.len(),
            frame.len()
        )));
    }
    let (m, used_pseudoinverse) = collapse_matrix(frame)?;
    let mut proj = Vector3::<Complex64>::zeros();
    for (i, &v) in values.iter().enumerate() {
        let r = frame.row(i);
        proj.x += v * r.x;
        proj.y += v * r.y;
        proj.z += v * r.z;
    }
    let xyz = Vector3::new(
        proj.x * m[(0, 0)] + proj.y * m[(0, 1)] + proj.z * m[(0, 2)],
        proj.x * m[(1, 0)] + proj.y * m[(1, 1)] + proj.z * m[(1, 2)],
        proj.x * m[(2, 0)] + proj.y * m[(2, 1)] + proj.z * m[(2, 2)],
    );
    Ok(Collapsed {
        xyz,
        used_pseudoinverse,
    })
}

/// A diffuseness value together with its clamping flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamped {
    pub value: f64,
    pub clamped: bool,
}

fn clamp_unit(raw: f64) -> Clamped {
    let value = raw.clamp(0.0, 1.0);
    Clamped {
        value,
        clamped: value != raw,
    }
}

/// Intensity/energy diffuseness `1 - |I| / (c E)`, clamped to [0, 1].
pub fn psi_ie(intensity: &Vector3<f64>, energy: f64, medium: &Medium) -> Result<Clamped> {
    if energy <= 0.0 {
        return Err(Error::UndefinedField("zero energy density".into()));
    }
    Ok(clamp_unit(1.0 - intensity.norm() / (medium.sound_speed * energy)))
}

/// Per-axis directional diffuseness `1 - |I_r| / (c E_r)`, clamped to [0, 1].
pub fn psi_directional(intensity: f64, energy: f64, medium: &Medium) -> Result<Clamped> {
    if energy <= 0.0 {
        return Err(Error::UndefinedField("zero axis energy".into()));
    }
    Ok(clamp_unit(1.0 - intensity.abs() / (medium.sound_speed * energy)))
}

/// Weighting law for the directional average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveWeight {
    /// `|u_r|^2` (default).
    #[default]
    VelocitySquared,
    /// `E_r`.
    Energy,
    /// `|I_r|`.
    IntensityMagnitude,
}

/// Weighted mean of per-axis diffuseness values.
pub fn psi_ave(psi: &[f64], weights: &[f64]) -> Result<f64> {
    if psi.len() != weights.len() {
        return Err(Error::Domain("psi/weight length mismatch".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedField("all directional weights are zero".into()));
    }
    Ok(psi.iter().zip(weights).map(|(p, w)| p * w).sum::<f64>() / total)
}

/// Mergeable accumulator for the velocity covariance `C = <u u^H>`.
#[derive(Debug, Clone)]
pub struct CovAccumulator {
    sum: Matrix3<Complex64>,
    count: usize,
}

impl Default for CovAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl CovAccumulator {
    pub fn new() -> Self {
        CovAccumulator {
            sum: Matrix3::zeros(),
            count: 0,
        }
    }

    pub fn push(&mut self, u: &Vector3<Complex64>) {
        for i in 0..3 {
            for j in 0..3 {
                self.sum[(i, j)] += u[i] * u[j].conj();
            }
        }
        self.count += 1;
    }

    /// Associative combination of partial sums.
    pub fn merge(mut self, other: CovAccumulator) -> CovAccumulator {
        self.sum += other.sum;
        self.count += other.count;
        self
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finalize(&self) -> Result<VelocityCovariance> {
        if self.count == 0 {
            return Err(Error::UndefinedField("covariance of zero samples".into()));
        }
        let mut m = self.sum / Complex64::new(self.count as f64, 0.0);
        m = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(VelocityCovariance {
            matrix: m,
            count: self.count,
        })
    }
}

/// Hermitian 3x3 velocity covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityCovariance {
    pub matrix: Matrix3<Complex64>,
    pub count: usize,
}

/// Covariance of a sample collection in one pass.
pub fn accumulate_cov<I>(samples: I) -> Result<VelocityCovariance>
where
    I: IntoIterator<Item = Vector3<Complex64>>,
{
    let mut acc = CovAccumulator::new();
    for u in samples {
        acc.push(&u);
    }
    acc.finalize()
}

fn hermiticity_error(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (descending) and eigenvectors of a Hermitian matrix by cyclic
/// Jacobi rotations. Rejects inputs that are not Hermitian to ~1e-9 relative.
pub fn hermitian_eig(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Domain("matrix is not square".into()));
    }
    let scale = m.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    if hermiticity_error(m) > 1e-9 * scale.max(1e-300) {
        return Err(Error::Domain("matrix is not Hermitian within tolerance".into()));
    }
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = (m[(i, j)] + m[(j, i)].conj()) * Complex64::new(0.5, 0.0);
        }
    }
    let mut v = DMatrix::<Complex64>::identity(n, n);
    let off = |a: &DMatrix<Complex64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let frob = a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let target = 1e-15 * frob.max(1e-300);
    for _sweep in 0..64 {
        if off(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = a[(p, q)];
                let mag = alpha.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // phase factor mapping the 2x2 block to a real problem
                let u = alpha / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * (2.0 * mag).atan2(app - aqq);
                let c = theta.cos();
                let s = theta.sin();
                // column update: A <- A V with V[p][p]=c, V[p][q]=-s,
                // V[q][p]=conj(u) s, V[q][q]=conj(u) c
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c + akq * u.conj() * s;
                    a[(k, q)] = -akp * s + akq * u.conj() * c;
                }
                // row update: A <- V^H A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c + aqk * u * s;
                    a[(q, k)] = -apk * s + aqk * u * c;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * u.conj() * s;
                    v[(k, q)] = -vkp * s + vkq * u.conj() * c;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok((eigenvalues, vectors))
}

/// Sorted eigenvalues of a Hermitian 3x3 covariance.
pub fn eig3(c: &Matrix3<Complex64>) -> Result<[f64; 3]> {
    let d = DMatrix::from_iterator(3, 3, c.iter().copied());
    let (vals, _) = hermitian_eig(&d)?;
    Ok([vals[0], vals[1], vals[2]])
}

/// Participation-ratio diffuseness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiPr {
    /// `(sum l)^2 / (K sum l^2)`, in `[1/K, 1]`.
    pub raw: f64,
    /// Rescaled to `[0, 1]`: `(K raw - 1) / (K - 1)`.
    pub normalized: f64,
}

fn check_spectrum(lambdas: &[f64]) -> Result<f64> {
    if lambdas.len() < 2 {
        return Err(Error::Domain("need at least two eigenvalues".into()));
    }
    let max = lambdas.iter().copied().fold(0.0_f64, f64::max);
    if lambdas.iter().any(|&l| l < -1e-9 * max.max(1e-300)) {
        return Err(Error::Domain("negative eigenvalue".into()));
    }
    let total: f64 = lambdas.iter().map(|&l| l.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::UndefinedField("all eigenvalues are zero".into()));
    }
    Ok(total)
}

/// Effective number of active eigenmodes, raw and normalized.
pub fn psi_pr(lambdas: &[f64]) -> Result<PsiPr> {
    let total = check_spectrum(lambdas)?;
    let k = lambdas.len() as f64;
    let sq: f64 = lambdas.iter().map(|&l| l.max(0.0) * l.max(0.0)).sum();
    let raw = total * total / (k * sq);
    Ok(PsiPr {
        raw,
        normalized: ((k * raw - 1.0) / (k - 1.0)).clamp(0.0, 1.0),
    })
}

/// Eigenvalue-dispersion diffuseness: `1 - (sigma / mean) / sqrt(K - 1)` with
/// the population standard deviation, clamped to [0, 1]. This calibration
/// yields 0 for a rank-1 spectrum and 1 for an isotropic one.
pub fn psi_com(lambdas: &[f64]) -> Result<f64> {
    let total = check_spectrum(lambdas)?;
    let k = lambdas.len() as f64;
    let mean = total / k;
    let var = lambdas
        .iter()
        .map(|&l| (l.max(0.0) - mean) * (l.max(0.0) - mean))
        .sum::<f64>()
        / k;
    let delta = var.sqrt() / mean;
    Ok((1.0 - delta / (k - 1.0).sqrt()).clamp(0.0, 1.0))
}

/// Literal printed form `1 - sqrt(3/2) sigma / mean` (population sigma),
/// unclamped. Kept for comparison; it does not reach 0 on a rank-1 spectrum.
pub fn psi_com_printed(lambdas: &[f64]) -> Result<f64> {
    let total = check_spectrum(lambdas)?;
    let k = lambdas.len() as f64;
    let mean = total / k;
    let var = lambdas
        .iter()
        .map(|&l| (l.max(0.0) - mean) * (l.max(0.0) - mean))
        .sum::<f64>()
        / k;
    Ok(1.0 - (1.5_f64).sqrt() * var.sqrt() / mean)
}

/// One pressure + velocity sample for the 4x4 covariance diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuSample {
    pub pressure: Complex64,
    pub velocity: Vector3<Complex64>,
}

impl PuSample {
    fn as_vector(&self) -> Vector4<Complex64> {
        Vector4::new(self.pressure, self.velocity.x, self.velocity.y, self.velocity.z)
    }
}

/// Mergeable accumulator for the 4x4 pressure-velocity covariance.
#[derive(Debug, Clone)]
pub struct PuCovAccumulator {
    sum: Matrix4<Complex64>,
    count: usize,
}

impl Default for PuCovAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl PuCovAccumulator {
    pub fn new() -> Self {
        PuCovAccumulator {
            sum: Matrix4::zeros(),
            count: 0,
        }
    }

    pub fn push(&mut self, s: &PuSample) {
        let v = s.as_vector();
        for i in 0..4 {
            for j in 0..4 {
                self.sum[(i, j)] += v[i] * v[j].conj();
            }
        }
        self.count += 1;
    }

    pub fn merge(mut self, other: PuCovAccumulator) -> PuCovAccumulator {
        self.sum += other.sum;
        self.count += other.count;
        self
    }

    pub fn finalize(&self) -> Result<Matrix4<Complex64>> {
        if self.count == 0 {
            return Err(Error::UndefinedField("covariance of zero samples".into()));
        }
        let m = self.sum / Complex64::new(self.count as f64, 0.0);
        Ok((m + m.adjoint()) * Complex64::new(0.5, 0.0))
    }
}

/// Diagonal whitener making an isotropic reference field's covariance identity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PuWhitener {
    pub scale: [f64; 4],
}

impl PuWhitener {
    /// Build from the covariance of a (simulated) isotropic reference field.
    pub fn from_reference(cov: &Matrix4<Complex64>) -> Result<Self> {
        let mut scale = [0.0; 4];
        for (i, s) in scale.iter_mut().enumerate() {
            let d = cov[(i, i)].re;
            if d <= 0.0 {
                return Err(Error::Config(format!(
                    "reference covariance has non-positive diagonal at {i}"
                )));
            }
            *s = 1.0 / d.sqrt();
        }
        Ok(PuWhitener { scale })
    }
}

/// Eigenvalues and eigen-based indices of one covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenIndices {
    pub eigenvalues: Vec<f64>,
    pub psi_pr: PsiPr,
    pub psi_com: f64,
}

/// Indices from an arbitrary-size Hermitian covariance (identity whitening).
pub fn eigen_indices(cov: &DMatrix<Complex64>) -> Result<EigenIndices> {
    let (eigenvalues, _) = hermitian_eig(cov)?;
    Ok(EigenIndices {
        psi_pr: psi_pr(&eigenvalues)?,
        psi_com: psi_com(&eigenvalues)?,
        eigenvalues,
    })
}

/// Whitened 4x4 covariance `W C W^H` and its eigen indices (K = 4 scaling:
/// participation ratio in [1/4, 1], dispersion normalized by sqrt(3)).
pub fn cov_pu_whitened(
    samples: &[PuSample],
    whitener: &PuWhitener,
) -> Result<(Matrix4<Complex64>, EigenIndices)> {
    let mut acc = PuCovAccumulator::new();
    for s in samples {
        acc.push(s);
    }
    let cov = acc.finalize()?;
    let indices = whitened_pu_indices(&cov, whitener)?;
    Ok((cov, indices))
}

/// Eigen indices of an already-accumulated 4x4 covariance after whitening.
pub fn whitened_pu_indices(cov: &Matrix4<Complex64>, whitener: &PuWhitener) -> Result<EigenIndices> {
    let mut white = DMatrix::<Complex64>::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            white[(i, j)] = cov[(i, j)] * (whitener.scale[i] * whitener.scale[j]);
        }
    }
    eigen_indices(&white)
}

/// Arrival direction from a flow-signed intensity vector: `-I / |I|`.
pub fn doa_from_intensity(intensity: &Vector3<f64>) -> Result<Direction> {
    let n = intensity.norm();
    if n <= 0.0 {
        return Err(Error::UndefinedField("zero intensity vector".into()));
    }
    Direction::new(-intensity / n)
}
