//! The three benchmark cases: single plane wave over a direction grid,
//! beam/diffuse mixtures over an energy-ratio grid, and two-wave interference
//! over a separation-angle sweep.
//!
//! Each grid point accumulates band quantities the same way: per-band
//! intensity and energy are sums over the tone scenes, the velocity
//! covariance is the average of per-scene outer products, and indices are
//! computed from those aggregates.

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrays::{make_afmt, make_fibo64, make_tf24, pair_layout, ArraySpec, Baffle, PairLayout};
use crate::error::{Error, Result};
use crate::estimators::{
    a_to_b, cc_pair, doa_from_intensity, foa_from_b, foa_from_pu, psi_ave, psi_com,
    psi_directional, psi_ie, psi_pr, AveWeight, Clamped,
    CovAccumulator, PuCovAccumulator, PuSample, PuWhitener,
};
use crate::rng::task_rng;
use crate::sh::{foa_from_hoa, HoaEstimator, DEFAULT_REGULARIZATION};
use crate::spatial::{angle_between, Direction, DirectionMatrix};
use crate::wavefield::{
    beam_rays_with, diffuse_rays_with, normalize_energy, synth_free, synth_rigid, tone_frequency,
    wave_from_incidence, BandSpec, Medium, PlaneWave, Scene,
};

/// Spherical-harmonic analysis order used by the rigid-sphere chain.
pub const HOA_ORDER: usize = 4;

/// The three benchmark scenarios plus the measured-response mixing experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    Case1,
    Case2,
    Case3,
    Irmix,
}

impl CaseId {
    pub fn label(&self) -> &'static str {
        match self {
            CaseId::Case1 => "case1",
            CaseId::Case2 => "case2",
            CaseId::Case3 => "case3",
            CaseId::Irmix => "irmix",
        }
    }
}

/// Named array geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayKind {
    Afmt,
    Fibo64,
    Tf24,
}

impl ArrayKind {
    pub fn name(&self) -> &'static str {
        match self {
            ArrayKind::Afmt => "afmt",
            ArrayKind::Fibo64 => "fibo64",
            ArrayKind::Tf24 => "tf24",
        }
    }

    pub fn make(&self) -> ArraySpec {
        match self {
            ArrayKind::Afmt => make_afmt(),
            ArrayKind::Fibo64 => make_fibo64(),
            ArrayKind::Tf24 => make_tf24(),
        }
    }
}

impl std::str::FromStr for ArrayKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "afmt" => Ok(ArrayKind::Afmt),
            "fibo64" => Ok(ArrayKind::Fibo64),
            "tf24" => Ok(ArrayKind::Tf24),
            other => Err(Error::Config(format!(
                "unknown array '{other}' (expected afmt, fibo64, or tf24)"
            ))),
        }
    }
}

/// Scale presets for grid sizes and realization counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Full-scale parameters: 72x35 grid, 100k rays, 1000 realizations.
    #[default]
    Paper,
    /// Desk-scale: 12x7 grid, 10k rays, 200 realizations.
    Ci,
}

/// Fully resolved parameters of one benchmark run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseConfig {
    pub case: CaseId,
    pub array: ArraySpec,
    pub bands: Vec<f64>,
    pub seed: u64,
    pub profile: Profile,
    pub medium: Medium,
    /// Tone scenes per band.
    pub tones: usize,
    /// Case 1 grid: azimuth count (0..360) and zenith count (5..175 inclusive).
    pub grid_azimuths: usize,
    pub grid_zeniths: usize,
    /// Case 2 / whitener ray count per component.
    pub rays: usize,
    /// Case 2 energy-ratio step.
    pub eta_step: f64,
    /// Beam solid-angle fraction of the full sphere.
    pub beam_fraction: f64,
    /// Beam center (azimuth, zenith) in degrees.
    pub beam_center_deg: (f64, f64),
    /// Case 3 realizations per separation angle.
    pub realizations: usize,
    /// Case 3 separation-angle step in degrees.
    pub angle_step_deg: f64,
    /// Weight law for the directional average.
    pub ave_weight: AveWeight,
}

impl CaseConfig {
    pub fn new(case: CaseId, array: ArraySpec, profile: Profile) -> Self {
        let (grid_azimuths, grid_zeniths, rays, realizations) = match profile {
            Profile::Paper => (72, 35, 100_000, 1000),
            Profile::Ci => (12, 7, 10_000, 200),
        };
        CaseConfig {
            case,
            array,
            bands: crate::wavefield::OCTAVE_CENTERS.to_vec(),
            seed: 0,
            profile,
            medium: Medium::default(),
            tones: 100,
            grid_azimuths,
            grid_zeniths,
            rays,
            eta_step: 0.05,
            beam_fraction: 0.005,
            beam_center_deg: (3.0, 87.0),
            realizations,
            angle_step_deg: 5.0,
            ave_weight: AveWeight::VelocitySquared,
        }
    }

    pub fn named(case: CaseId, kind: ArrayKind, profile: Profile) -> Self {
        Self::new(case, kind.make(), profile)
    }

    fn band_specs(&self) -> Result<Vec<BandSpec>> {
        self.bands
            .iter()
            .map(|&c| Ok(BandSpec::new(c)?.with_tones(self.tones)))
            .collect()
    }
}

/// Per-grid-point output.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub band_hz: f64,
    pub grid: GridPoint,
    pub psi_ie: Option<f64>,
    pub psi_ave: Option<f64>,
    pub psi_pr_raw: f64,
    pub psi_pr: f64,
    pub psi_com: f64,
    pub psi_pr_pu: Option<f64>,
    pub psi_com_pu: Option<f64>,
    pub eigenvalues: [f64; 3],
    pub intensity: [f64; 3],
    pub doa_az_deg: Option<f64>,
    pub doa_zen_deg: Option<f64>,
    pub doa_err_deg: Option<f64>,
    pub clamp_count: usize,
}

/// The varying grid coordinate of each case.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPoint {
    Incidence { az_deg: f64, zen_deg: f64 },
    Eta(f64),
    Separation(f64),
}

/// Per-band summary rows.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryRow {
    Mean {
        band_hz: f64,
        index: String,
        mean: f64,
    },
    LinearityError {
        band_hz: f64,
        index: String,
        max_abs_err: f64,
        pearson_r: f64,
    },
    AngleAnchors {
        band_hz: f64,
        index: String,
        at_0: f64,
        at_90: f64,
        at_180: f64,
    },
}

/// Output of one case run.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub case: CaseId,
    pub array: String,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub config_echo: serde_json::Value,
}

/// Processing chain inferred from the array structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chain {
    /// 4 capsules -> B-format -> first-order quantities.
    FirstOrderTetra,
    /// Rigid-sphere surface pressures -> regularized harmonic estimate.
    RigidSphereHoa,
    /// Antipodal directional pairs -> pseudo pressure/velocity per axis.
    TightFramePairs,
}

/// One array's scene-to-quantities processor.
pub struct Pipeline {
    spec: ArraySpec,
    medium: Medium,
    chain: Chain,
    pairs: Option<PairLayout>,
    axes: Option<DirectionMatrix>,
    /// Precomputed collapse operator `(1/A) R^T` (or pseudoinverse) rows.
    collapse: Option<nalgebra::Matrix3<f64>>,
    estimator: Option<HoaEstimator>,
}

/// Per-axis sample of one scene (tight-frame chain only).
#[derive(Debug, Clone)]
pub struct AxesSample {
    pub intensity: Vec<f64>,
    pub energy: Vec<f64>,
    pub velocity_sq: Vec<f64>,
}

/// Field quantities estimated from one scene.
#[derive(Debug, Clone)]
pub struct SceneQuantities {
    pub pressure: Option<Complex64>,
    pub velocity: Vector3<Complex64>,
    /// Flow-signed active intensity (points away from the source).
    pub intensity: Vector3<f64>,
    pub energy: Option<f64>,
    pub axes: Option<AxesSample>,
}

impl Pipeline {
    pub fn new(spec: ArraySpec, medium: Medium) -> Result<Self> {
        spec.validate()?;
        let chain = match spec.baffle {
            Baffle::RigidSphere { .. } => Chain::RigidSphereHoa,
            Baffle::None => {
                if let Ok(layout) = pair_layout(&spec) {
                    let _ = crate::spatial::frame_constant(&layout.axes())?;
                    Chain::TightFramePairs
                } else if spec.sensors.len() == 4 {
                    Chain::FirstOrderTetra
                } else {
                    return Err(Error::ModelMismatch(
                        "array is neither a rigid sphere, a 4-capsule tetrahedron, \
                         nor an antipodal pair layout"
                            .into(),
                    ));
                }
            }
        };
        let (pairs, axes, collapse) = if chain == Chain::TightFramePairs {
            let layout = pair_layout(&spec)?;
            let axes = layout.axes();
            let (operator, _) = crate::estimators::collapse_matrix(&axes)?;
            (Some(layout), Some(axes), Some(operator))
        } else {
            (None, None, None)
        };
        let estimator = if chain == Chain::RigidSphereHoa {
            Some(HoaEstimator::new(&spec, HOA_ORDER, DEFAULT_REGULARIZATION)?)
        } else {
            None
        };
        Ok(Pipeline {
            spec,
            medium,
            chain,
            pairs,
            axes,
            collapse,
            estimator,
        })
    }

    pub fn spec(&self) -> &ArraySpec {
        &self.spec
    }

    /// True for chains that produce a usable pressure estimate.
    pub fn has_pressure(&self) -> bool {
        self.chain != Chain::TightFramePairs
    }

    /// Name of the scalar diffuseness index this chain reports.
    pub fn scalar_index_name(&self) -> &'static str {
        if self.has_pressure() {
            "psi_ie"
        } else {
            "psi_ave"
        }
    }

    /// Synthesize sensor pressures with the chain-matched model.
    pub fn synthesize(&self, scene: &Scene) -> Result<crate::wavefield::PressureSnapshot> {
        match self.chain {
            // synthesis order matched to the analysis order: the modeled
            // processing chain is band-limited end to end
            Chain::RigidSphereHoa => synth_rigid(
                &self.spec,
                scene,
                &self.medium,
                Some(self.estimator.as_ref().expect("rigid chain has estimator").order()),
            ),
            _ => synth_free(&self.spec, scene, &self.medium),
        }
    }

    /// Synthesize the scene and process the resulting snapshot.
    pub fn scene_quantities(&self, scene: &Scene) -> Result<SceneQuantities> {
        let snap = self.synthesize(scene)?;
        self.snapshot_quantities(&snap)
    }

    /// Allocation-free incoherent accumulation, available when the pair chain
    /// is uniform (one directivity model, unit sensitivities, equal arms are
    /// not required). Returns `None` for other chains or mixed models.
    pub fn pair_fast_path(&self) -> Option<PairFastPath<'_>> {
        if self.chain != Chain::TightFramePairs {
            return None;
        }
        let pairs = self.pairs.as_ref()?;
        let model_id = self.spec.sensors.first()?.directivity;
        let sensitivity = self.spec.sensors.first()?.sensitivity;
        if self
            .spec
            .sensors
            .iter()
            .any(|s| s.directivity != model_id || (s.sensitivity - sensitivity).abs() > 0.0)
        {
            return None;
        }
        let arms = pairs
            .pairs
            .iter()
            .map(|p| self.spec.sensors[p.plus].position().norm())
            .collect();
        Some(PairFastPath {
            axes: self.axes.as_ref()?,
            operator: self.collapse.as_ref()?,
            medium: &self.medium,
            model: &self.spec.directivities[model_id],
            arms,
            sensitivity,
        })
    }

    /// Process an already-measured (or synthesized) pressure snapshot.
    pub fn snapshot_quantities(&self, snap: &crate::wavefield::PressureSnapshot) -> Result<SceneQuantities> {
        if snap.values.len() != self.spec.sensors.len() {
            return Err(Error::Domain(format!(
                "snapshot has {} channels, array has {} sensors",
                snap.values.len(),
                self.spec.sensors.len()
            )));
        }
        match self.chain {
            Chain::FirstOrderTetra => {
                let b = a_to_b(&[
                    snap.values[0],
                    snap.values[1],
                    snap.values[2],
                    snap.values[3],
                ]);
                let q = foa_from_b(&b, &self.medium);
                Ok(SceneQuantities {
                    pressure: Some(q.pressure),
                    velocity: q.velocity,
                    intensity: q.intensity,
                    energy: Some(q.energy),
                    axes: None,
                })
            }
            Chain::RigidSphereHoa => {
                let estimator = self.estimator.as_ref().expect("rigid chain has estimator");
                let a = estimator.estimate(snap, &self.medium)?;
                let (p, u) = foa_from_hoa(&a, &self.medium)?;
                let q = foa_from_pu(p, u, &self.medium);
                Ok(SceneQuantities {
                    pressure: Some(q.pressure),
                    velocity: q.velocity,
                    intensity: q.intensity,
                    energy: Some(q.energy),
                    axes: None,
                })
            }
            Chain::TightFramePairs => {
                let pairs = self.pairs.as_ref().expect("pair chain has layout");
                let axes = self.axes.as_ref().expect("pair chain has axes");
                let operator = self.collapse.as_ref().expect("pair chain has operator");
                let n = pairs.pairs.len();
                let mut ax_i = Vec::with_capacity(n);
                let mut ax_e = Vec::with_capacity(n);
                let mut ax_u2 = Vec::with_capacity(n);
                let mut proj_i = Vector3::<f64>::zeros();
                let mut proj_u = Vector3::<Complex64>::zeros();
                for (k, p) in pairs.pairs.iter().enumerate() {
                    let q = cc_pair(snap.values[p.plus], snap.values[p.minus], &self.medium);
                    ax_i.push(q.intensity);
                    ax_e.push(q.energy);
                    ax_u2.push(q.velocity.norm_sqr());
                    let r = axes.row(k);
                    proj_i += r * q.intensity;
                    proj_u.x += q.velocity * r.x;
                    proj_u.y += q.velocity * r.y;
                    proj_u.z += q.velocity * r.z;
                }
                let collapse_c = |v: &Vector3<Complex64>| {
                    Vector3::new(
                        v.x * operator[(0, 0)] + v.y * operator[(0, 1)] + v.z * operator[(0, 2)],
                        v.x * operator[(1, 0)] + v.y * operator[(1, 1)] + v.z * operator[(1, 2)],
                        v.x * operator[(2, 0)] + v.y * operator[(2, 1)] + v.z * operator[(2, 2)],
                    )
                };
                Ok(SceneQuantities {
                    pressure: None,
                    velocity: collapse_c(&proj_u),
                    // pair intensities are arrival-positive; negate so the
                    // Cartesian vector is flow-signed like the other chains
                    intensity: -(operator * proj_i),
                    energy: None,
                    axes: Some(AxesSample {
                        intensity: ax_i,
                        energy: ax_e,
                        velocity_sq: ax_u2,
                    }),
                })
            }
        }
    }
}

/// Borrowed fast path for incoherent single-wave accumulation on the
/// antipodal-pair chain. Exploits the pair symmetry (one phase factor per
/// axis) and writes straight into the band accumulator.
pub struct PairFastPath<'a> {
    axes: &'a DirectionMatrix,
    operator: &'a nalgebra::Matrix3<f64>,
    medium: &'a Medium,
    model: &'a crate::directivity::DirectivityPolynomial,
    /// distance from the origin to the plus sensor, per pair
    arms: Vec<f64>,
    sensitivity: f64,
}

impl<'a> PairFastPath<'a> {
    /// Resolve the band coefficients and wavenumber once per tone.
    pub fn at_frequency(&'a self, f: f64) -> PairToneFast<'a> {
        PairToneFast {
            path: self,
            k: self.medium.wavenumber(f),
            coeffs: self.model.coefficients_at(f),
        }
    }
}

/// One-tone view of [`PairFastPath`] with the band lookup already done.
pub struct PairToneFast<'a> {
    path: &'a PairFastPath<'a>,
    k: f64,
    coeffs: &'a [f64],
}

impl<'a> PairToneFast<'a> {
    /// Accumulate one wave's contribution (phase-invariant quantities only,
    /// as used by incoherent averaging).
    pub fn accumulate(&self, wave: &PlaneWave, acc: &mut BandAccumulator) {
        let (k, coeffs) = (self.k, self.coeffs);
        let n = self.path.arms.len();
        if acc.ax_intensity.is_empty() {
            acc.ax_intensity = vec![0.0; n];
            acc.ax_energy = vec![0.0; n];
            acc.ax_weight_u2 = vec![0.0; n];
            acc.ax_weight_i = vec![0.0; n];
        }
        let amp = wave.amplitude * self.path.sensitivity;
        let nu = wave.incidence.as_vector();
        let mut proj_i = Vector3::<f64>::zeros();
        let mut proj_u = Vector3::<Complex64>::zeros();
        for i in 0..n {
            let axis = self.path.axes.row(i);
            let c = axis.dot(nu);
            let (s, co) = (k * self.path.arms[i] * c).sin_cos();
            let d_plus = crate::directivity::evaluate_poly(coeffs, c);
            let d_minus = crate::directivity::evaluate_poly(coeffs, -c);
            let m_plus = Complex64::new(amp * d_plus * co, amp * d_plus * s);
            let m_minus = Complex64::new(amp * d_minus * co, -(amp * d_minus * s));
            let q = cc_pair(m_plus, m_minus, self.path.medium);
            acc.ax_intensity[i] += q.intensity;
            acc.ax_energy[i] += q.energy;
            acc.ax_weight_u2[i] += q.velocity.norm_sqr();
            acc.ax_weight_i[i] += q.intensity.abs();
            proj_i += axis * q.intensity;
            proj_u.x += q.velocity * axis.x;
            proj_u.y += q.velocity * axis.y;
            proj_u.z += q.velocity * axis.z;
        }
        let op = self.path.operator;
        acc.intensity += -(op * proj_i);
        let velocity = Vector3::new(
            proj_u.x * op[(0, 0)] + proj_u.y * op[(0, 1)] + proj_u.z * op[(0, 2)],
            proj_u.x * op[(1, 0)] + proj_u.y * op[(1, 1)] + proj_u.z * op[(1, 2)],
            proj_u.x * op[(2, 0)] + proj_u.y * op[(2, 1)] + proj_u.z * op[(2, 2)],
        );
        acc.cov.push(&velocity);
        acc.scenes += 1;
    }
}

/// Band-level aggregates: summed intensity/energy, averaged covariance.
#[derive(Debug, Clone)]
pub struct BandAccumulator {
    intensity: Vector3<f64>,
    energy: f64,
    cov: CovAccumulator,
    ax_intensity: Vec<f64>,
    ax_energy: Vec<f64>,
    ax_weight_u2: Vec<f64>,
    ax_weight_i: Vec<f64>,
    pu: Option<PuCovAccumulator>,
    scenes: usize,
}

impl BandAccumulator {
    pub fn new(track_pu: bool) -> Self {
        BandAccumulator {
            intensity: Vector3::zeros(),
            energy: 0.0,
            cov: CovAccumulator::new(),
            ax_intensity: Vec::new(),
            ax_energy: Vec::new(),
            ax_weight_u2: Vec::new(),
            ax_weight_i: Vec::new(),
            pu: track_pu.then(PuCovAccumulator::new),
            scenes: 0,
        }
    }

    pub fn push(&mut self, q: &SceneQuantities) {
        self.intensity += q.intensity;
        if let Some(e) = q.energy {
            self.energy += e;
        }
        self.cov.push(&q.velocity);
        if let Some(ax) = &q.axes {
            if self.ax_intensity.is_empty() {
                self.ax_intensity = vec![0.0; ax.intensity.len()];
                self.ax_energy = vec![0.0; ax.intensity.len()];
                self.ax_weight_u2 = vec![0.0; ax.intensity.len()];
                self.ax_weight_i = vec![0.0; ax.intensity.len()];
            }
            for k in 0..ax.intensity.len() {
                self.ax_intensity[k] += ax.intensity[k];
                self.ax_energy[k] += ax.energy[k];
                self.ax_weight_u2[k] += ax.velocity_sq[k];
                self.ax_weight_i[k] += ax.intensity[k].abs();
            }
        }
        if let Some(pu) = &mut self.pu {
            if let Some(p) = q.pressure {
                pu.push(&PuSample {
                    pressure: p,
                    velocity: q.velocity,
                });
            }
        }
        self.scenes += 1;
    }

    pub fn merge(mut self, other: BandAccumulator) -> BandAccumulator {
        self.intensity += other.intensity;
        self.energy += other.energy;
        self.cov = self.cov.merge(other.cov);
        if self.ax_intensity.is_empty() {
            self.ax_intensity = other.ax_intensity;
            self.ax_energy = other.ax_energy;
            self.ax_weight_u2 = other.ax_weight_u2;
            self.ax_weight_i = other.ax_weight_i;
        } else if !other.ax_intensity.is_empty() {
            for k in 0..self.ax_intensity.len() {
                self.ax_intensity[k] += other.ax_intensity[k];
                self.ax_energy[k] += other.ax_energy[k];
                self.ax_weight_u2[k] += other.ax_weight_u2[k];
                self.ax_weight_i[k] += other.ax_weight_i[k];
            }
        }
        self.pu = match (self.pu, other.pu) {
            (Some(a), Some(b)) => Some(a.merge(b)),
            (a, b) => a.or(b),
        };
        self.scenes += other.scenes;
        self
    }

    /// Indices from the band aggregates.
    pub fn finalize(
        &self,
        pipeline: &Pipeline,
        ave_weight: AveWeight,
        whitener: Option<&PuWhitener>,
    ) -> Result<BandIndices> {
        let medium = &pipeline.medium;
        let mut clamp_count = 0;
        let scalar = if pipeline.has_pressure() {
            let c = psi_ie(&self.intensity, self.energy, medium)?;
            if c.clamped {
                clamp_count += 1;
            }
            Scalar::Ie(c)
        } else {
            let n = self.ax_intensity.len();
            let mut psis = Vec::with_capacity(n);
            for k in 0..n {
                let c: Clamped = psi_directional(self.ax_intensity[k], self.ax_energy[k], medium)?;
                if c.clamped {
                    clamp_count += 1;
                }
                psis.push(c.value);
            }
            let weights = match ave_weight {
                AveWeight::VelocitySquared => &self.ax_weight_u2,
                AveWeight::Energy => &self.ax_energy,
                AveWeight::IntensityMagnitude => &self.ax_weight_i,
            };
            Scalar::Ave(psi_ave(&psis, weights)?)
        };
        let cov = self.cov.finalize()?;
        let eigenvalues = crate::estimators::eig3(&cov.matrix)?;
        let pr = psi_pr(&eigenvalues)?;
        let com = psi_com(&eigenvalues)?;
        let pu_indices = match (&self.pu, whitener) {
            (Some(acc), Some(w)) => {
                let cov4 = acc.finalize()?;
                let idx = crate::estimators::whitened_pu_indices(&cov4, w)?;
                Some((idx.psi_pr.normalized, idx.psi_com))
            }
            (Some(_), None) => {
                return Err(Error::Config(
                    "pressure-velocity covariance requested without a whitener".into(),
                ))
            }
            _ => None,
        };
        let doa = doa_from_intensity(&self.intensity).ok();
        Ok(BandIndices {
            scalar,
            psi_pr: pr,
            psi_com: com,
            eigenvalues,
            intensity: self.intensity,
            doa,
            clamp_count,
            pu_indices,
        })
    }
}

/// Scalar intensity/energy index, tagged by chain type.
#[derive(Debug, Clone, Copy)]
pub enum Scalar {
    Ie(Clamped),
    Ave(f64),
}

/// Finalized per-band indices.
#[derive(Debug, Clone)]
pub struct BandIndices {
    pub scalar: Scalar,
    pub psi_pr: crate::estimators::PsiPr,
    pub psi_com: f64,
    pub eigenvalues: [f64; 3],
    pub intensity: Vector3<f64>,
    pub doa: Option<Direction>,
    pub clamp_count: usize,
    pub pu_indices: Option<(f64, f64)>,
}

impl BandIndices {
    /// Flatten into one output row.
    pub fn to_result_row(
        &self,
        band_hz: f64,
        grid: GridPoint,
        doa_reference: Option<&Direction>,
    ) -> ResultRow {
        let (psi_ie_v, psi_ave_v) = match self.scalar {
            Scalar::Ie(c) => (Some(c.value), None),
            Scalar::Ave(v) => (None, Some(v)),
        };
        let (doa_az, doa_zen) = match &self.doa {
            Some(d) => {
                let (az, zen) = d.to_angles();
                (Some(az), Some(zen))
            }
            None => (None, None),
        };
        let doa_err = match (&self.doa, doa_reference) {
            (Some(d), Some(r)) => Some(angle_between(d, r)),
            _ => None,
        };
        ResultRow {
            band_hz,
            grid,
            psi_ie: psi_ie_v,
            psi_ave: psi_ave_v,
            psi_pr_raw: self.psi_pr.raw,
            psi_pr: self.psi_pr.normalized,
            psi_com: self.psi_com,
            psi_pr_pu: self.pu_indices.map(|(pr, _)| pr),
            psi_com_pu: self.pu_indices.map(|(_, com)| com),
            eigenvalues: self.eigenvalues,
            intensity: [self.intensity.x, self.intensity.y, self.intensity.z],
            doa_az_deg: doa_az,
            doa_zen_deg: doa_zen,
            doa_err_deg: doa_err,
            clamp_count: self.clamp_count,
        }
    }
}

fn config_echo(cfg: &CaseConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(cfg)?)
}

fn scalar_value(row: &ResultRow) -> f64 {
    row.psi_ie.or(row.psi_ave).unwrap_or(f64::NAN)
}

/// Case 1: single plane wave over an azimuth/zenith grid; per band and
/// direction, indices plus the arrival-detection error.
pub fn run_case1(cfg: &CaseConfig) -> Result<CaseResult> {
    let pipeline = Pipeline::new(cfg.array.clone(), cfg.medium)?;
    let bands = cfg.band_specs()?;
    if cfg.grid_azimuths == 0 || cfg.grid_zeniths == 0 {
        return Err(Error::Config("grid must have at least one point".into()));
    }
    let mut grid = Vec::new();
    for ia in 0..cfg.grid_azimuths {
        let az = 360.0 * ia as f64 / cfg.grid_azimuths as f64;
        for iz in 0..cfg.grid_zeniths {
            let zen = if cfg.grid_zeniths == 1 {
                90.0
            } else {
                5.0 + 170.0 * iz as f64 / (cfg.grid_zeniths - 1) as f64
            };
            grid.push((az, zen));
        }
    }
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..bands.len()).map(move |b| (g, b)))
        .collect();
    let rows_nested: Result<Vec<ResultRow>> = tasks
        .par_iter()
        .map(|&(g, b)| {
            let (az, zen) = grid[g];
            let incidence = Direction::from_angles(az, zen)?;
            let template = [wave_from_incidence(incidence)];
            let seed = crate::rng::derive_seed(cfg.seed, &[1, g as u64, b as u64]);
            let scenes = crate::wavefield::band_noise_scenes(&bands[b], &template, seed);
            let mut acc = BandAccumulator::new(false);
            for scene in &scenes {
                acc.push(&pipeline.scene_quantities(scene)?);
            }
            let indices = acc.finalize(&pipeline, cfg.ave_weight, None)?;
            Ok(indices.to_result_row(
                bands[b].center_hz,
                GridPoint::Incidence { az_deg: az, zen_deg: zen },
                Some(&incidence),
            ))
        })
        .collect();
    let mut rows = rows_nested?;
    // stable order: band-major, then grid
    rows.sort_by(|a, b| {
        a.band_hz.total_cmp(&b.band_hz).then(match (&a.grid, &b.grid) {
            (
                GridPoint::Incidence { az_deg: a1, zen_deg: z1 },
                GridPoint::Incidence { az_deg: a2, zen_deg: z2 },
            ) => a1.total_cmp(a2).then(z1.total_cmp(z2)),
            _ => std::cmp::Ordering::Equal,
        })
    });

    let scalar_name = pipeline.scalar_index_name();
    let mut summary = Vec::new();
    for band in &bands {
        let band_rows: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.band_hz == band.center_hz)
            .collect();
        let n = band_rows.len() as f64;
        let mean = |f: &dyn Fn(&ResultRow) -> f64| band_rows.iter().map(|r| f(r)).sum::<f64>() / n;
        summary.push(SummaryRow::Mean {
            band_hz: band.center_hz,
            index: scalar_name.into(),
            mean: mean(&scalar_value),
        });
        summary.push(SummaryRow::Mean {
            band_hz: band.center_hz,
            index: "psi_pr".into(),
            mean: mean(&|r| r.psi_pr),
        });
        summary.push(SummaryRow::Mean {
            band_hz: band.center_hz,
            index: "psi_com".into(),
            mean: mean(&|r| r.psi_com),
        });
        summary.push(SummaryRow::Mean {
            band_hz: band.center_hz,
            index: "doa_err_deg".into(),
            mean: mean(&|r| r.doa_err_deg.unwrap_or(180.0)),
        });
    }
    Ok(CaseResult {
        case: CaseId::Case1,
        array: pipeline.spec().name.clone(),
        rows,
        summary,
        config_echo: config_echo(cfg)?,
    })
}

/// Case 2: beam + diffuse mixture over an energy-ratio grid.
///
/// The mixture components are mutually incoherent by construction (random
/// phase per ray), so band quantities are accumulated per ray through the
/// array chain: this evaluates the ensemble averages `<I>`, `<E>`, and
/// `<u u^H>` over the ray phases exactly, leaving only the systematic
/// response of the estimator chain. Tone scenes supply frequency diversity
/// across the octave.
pub fn run_case2(cfg: &CaseConfig) -> Result<CaseResult> {
    let pipeline = Pipeline::new(cfg.array.clone(), cfg.medium)?;
    let bands = cfg.band_specs()?;
    if !(cfg.eta_step > 0.0 && cfg.eta_step <= 1.0) {
        return Err(Error::Config(format!("eta step {} outside (0, 1]", cfg.eta_step)));
    }
    let steps = (1.0 / cfg.eta_step).round() as usize;
    let etas: Vec<f64> = (0..=steps).map(|i| i as f64 * cfg.eta_step).collect();
    let center = Direction::from_angles(cfg.beam_center_deg.0, cfg.beam_center_deg.1)?;
    let tasks: Vec<(usize, usize)> = (0..etas.len())
        .flat_map(|e| (0..bands.len()).map(move |b| (e, b)))
        .collect();
    let rows_nested: Result<Vec<ResultRow>> = tasks
        .par_iter()
        .map(|&(e, b)| {
            let eta = etas[e];
            let band = &bands[b];
            let mut rng = task_rng(cfg.seed, &[2, e as u64, b as u64]);
            let mut acc = BandAccumulator::new(false);
            let fast = pipeline.pair_fast_path();
            let mut scratch = Scene {
                frequency_hz: band.center_hz,
                waves: Vec::with_capacity(1),
            };
            for _ in 0..band.tone_count {
                let f = tone_frequency(band, &mut rng);
                scratch.frequency_hz = f;
                let tone_fast = fast.as_ref().map(|p| p.at_frequency(f));
                let push_rays = |acc: &mut BandAccumulator,
                                     scratch: &mut Scene,
                                     rays: &[PlaneWave]|
                 -> Result<()> {
                    if let Some(tone) = &tone_fast {
                        for w in rays {
                            tone.accumulate(w, acc);
                        }
                    } else {
                        for w in rays {
                            scratch.waves.clear();
                            scratch.waves.push(*w);
                            acc.push(&pipeline.scene_quantities(scratch)?);
                        }
                    }
                    Ok(())
                };
                if eta > 0.0 {
                    let mut beam = beam_rays_with(cfg.rays, &center, cfg.beam_fraction, &mut rng)?;
                    normalize_energy(&mut beam, eta);
                    push_rays(&mut acc, &mut scratch, &beam)?;
                }
                if eta < 1.0 {
                    let mut diffuse = diffuse_rays_with(cfg.rays, &mut rng);
                    normalize_energy(&mut diffuse, 1.0 - eta);
                    push_rays(&mut acc, &mut scratch, &diffuse)?;
                }
            }
            let indices = acc.finalize(&pipeline, cfg.ave_weight, None)?;
            Ok(indices.to_result_row(band.center_hz, GridPoint::Eta(eta), None))
        })
        .collect();
    let mut rows = rows_nested?;
    rows.sort_by(|a, b| {
        a.band_hz.total_cmp(&b.band_hz).then(match (&a.grid, &b.grid) {
            (GridPoint::Eta(x), GridPoint::Eta(y)) => x.total_cmp(y),
            _ => std::cmp::Ordering::Equal,
        })
    });

    let scalar_name = pipeline.scalar_index_name();
    let mut summary = Vec::new();
    for band in &bands {
        let band_rows: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.band_hz == band.center_hz)
            .collect();
        for (index, value) in [
            (scalar_name.to_string(), &scalar_value as &dyn Fn(&ResultRow) -> f64),
            ("psi_pr".to_string(), &|r: &ResultRow| r.psi_pr),
            ("psi_com".to_string(), &|r: &ResultRow| r.psi_com),
        ] {
            let mut max_abs_err = 0.0_f64;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for r in &band_rows {
                let eta = match r.grid {
                    GridPoint::Eta(x) => x,
                    _ => continue,
                };
                let v = value(r);
                max_abs_err = max_abs_err.max((v - (1.0 - eta)).abs());
                xs.push(1.0 - eta);
                ys.push(v);
            }
            summary.push(SummaryRow::LinearityError {
                band_hz: band.center_hz,
                index,
                max_abs_err,
                pearson_r: pearson(&xs, &ys),
            });
        }
    }
    Ok(CaseResult {
        case: CaseId::Case2,
        array: pipeline.spec().name.clone(),
        rows,
        summary,
        config_echo: config_echo(cfg)?,
    })
}

/// Case 3: interference of a zenith wave with a second wave at a swept
/// separation angle; quantities averaged over random-phase realizations.
pub fn run_case3(cfg: &CaseConfig) -> Result<CaseResult> {
    let pipeline = Pipeline::new(cfg.array.clone(), cfg.medium)?;
    let bands = cfg.band_specs()?;
    if cfg.angle_step_deg <= 0.0 {
        return Err(Error::Config("angle step must be positive".into()));
    }
    let mut angles = Vec::new();
    let mut a: f64 = 0.0;
    while a <= 180.0 + 1e-9 {
        angles.push(a.min(180.0));
        a += cfg.angle_step_deg;
    }
    // pressure-velocity diagnostic for the tetrahedral chain
    let track_pu = pipeline.has_pressure() && pipeline.spec().sensors.len() == 4;
    let whiteners: Option<Vec<PuWhitener>> = if track_pu {
        Some(
            bands
                .par_iter()
                .enumerate()
                .map(|(b, band)| isotropic_pu_whitener(&pipeline, band, cfg.rays, cfg.seed, b as u64))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let primary = wave_from_incidence(Direction::from_angles(0.0, 0.0)?);
    let tasks: Vec<(usize, usize)> = (0..angles.len())
        .flat_map(|s| (0..bands.len()).map(move |b| (s, b)))
        .collect();
    let rows_nested: Result<Vec<ResultRow>> = tasks
        .par_iter()
        .map(|&(s, b)| {
            let sep = angles[s];
            let band = &bands[b];
            let secondary_dir = Direction::from_angles(0.0, sep)?;
            let mut rng = task_rng(cfg.seed, &[3, s as u64, b as u64]);
            let mut acc = BandAccumulator::new(track_pu);
            for _ in 0..cfg.realizations {
                let secondary = crate::wavefield::randomize_wave(
                    &wave_from_incidence(secondary_dir),
                    &mut rng,
                );
                let scene = Scene {
                    frequency_hz: band.center_hz,
                    waves: vec![primary, secondary],
                };
                acc.push(&pipeline.scene_quantities(&scene)?);
            }
            let whitener = whiteners.as_ref().map(|w| &w[b]);
            let indices = acc.finalize(&pipeline, cfg.ave_weight, whitener)?;
            Ok(indices.to_result_row(band.center_hz, GridPoint::Separation(sep), None))
        })
        .collect();
    let mut rows = rows_nested?;
    rows.sort_by(|a, b| {
        a.band_hz.total_cmp(&b.band_hz).then(match (&a.grid, &b.grid) {
            (GridPoint::Separation(x), GridPoint::Separation(y)) => x.total_cmp(y),
            _ => std::cmp::Ordering::Equal,
        })
    });

    let scalar_name = pipeline.scalar_index_name();
    let mut summary = Vec::new();
    for band in &bands {
        let band_rows: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.band_hz == band.center_hz)
            .collect();
        let value_at = |target: f64, f: &dyn Fn(&ResultRow) -> f64| -> f64 {
            band_rows
                .iter()
                .min_by(|x, y| {
                    let gx = match x.grid {
                        GridPoint::Separation(v) => (v - target).abs(),
                        _ => f64::MAX,
                    };
                    let gy = match y.grid {
                        GridPoint::Separation(v) => (v - target).abs(),
                        _ => f64::MAX,
                    };
                    gx.total_cmp(&gy)
                })
                .map(|r| f(r))
                .unwrap_or(f64::NAN)
        };
        let mut indices: Vec<(String, Box<dyn Fn(&ResultRow) -> f64>)> = vec![
            (scalar_name.to_string(), Box::new(scalar_value)),
            ("psi_pr".to_string(), Box::new(|r: &ResultRow| r.psi_pr)),
            ("psi_com".to_string(), Box::new(|r: &ResultRow| r.psi_com)),
        ];
        if track_pu {
            indices.push((
                "psi_pr_pu".to_string(),
                Box::new(|r: &ResultRow| r.psi_pr_pu.unwrap_or(f64::NAN)),
            ));
            indices.push((
                "psi_com_pu".to_string(),
                Box::new(|r: &ResultRow| r.psi_com_pu.unwrap_or(f64::NAN)),
            ));
        }
        for (index, f) in indices {
            summary.push(SummaryRow::AngleAnchors {
                band_hz: band.center_hz,
                index,
                at_0: value_at(0.0, f.as_ref()),
                at_90: value_at(90.0, f.as_ref()),
                at_180: value_at(180.0, f.as_ref()),
            });
        }
    }
    Ok(CaseResult {
        case: CaseId::Case3,
        array: pipeline.spec().name.clone(),
        rows,
        summary,
        config_echo: config_echo(cfg)?,
    })
}

/// Whitener from a simulated isotropic reference field (per band).
pub fn isotropic_pu_whitener(
    pipeline: &Pipeline,
    band: &BandSpec,
    rays: usize,
    seed: u64,
    band_tag: u64,
) -> Result<PuWhitener> {
    let mut rng = task_rng(seed, &[0x7768_6974, band_tag]);
    let mut acc = PuCovAccumulator::new();
    for _ in 0..band.tone_count {
        let f = tone_frequency(band, &mut rng);
        let scene = Scene {
            frequency_hz: f,
            waves: diffuse_rays_with(rays, &mut rng),
        };
        let q = pipeline.scene_quantities(&scene)?;
        let p = q
            .pressure
            .ok_or_else(|| Error::ModelMismatch("whitener needs a pressure estimate".into()))?;
        acc.push(&PuSample {
            pressure: p,
            velocity: q.velocity,
        });
    }
    PuWhitener::from_reference(&acc.finalize()?)
}

pub(crate) fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() != ys.len() || xs.len() < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// Run the configured case.
pub fn run(cfg: &CaseConfig) -> Result<CaseResult> {
    match cfg.case {
        CaseId::Case1 => run_case1(cfg),
        CaseId::Case2 => run_case2(cfg),
        CaseId::Case3 => run_case3(cfg),
        CaseId::Irmix => Err(Error::Config(
            "the mixing experiment needs measured files; use the irmix command".into(),
        )),
    }
}
