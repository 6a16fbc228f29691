//! Frequency-domain synthesis of sensor pressures for plane-wave scenes,
//! plus band-noise and ray-set generators.
//!
//! # Wave convention
//!
//! A `PlaneWave` stores its *incidence* direction `nu`: the unit vector from
//! the array toward the source. Under the global `e^{+j omega t}` time
//! convention the complex pressure of one wave at position `r` is
//! `A e^{j (k r . nu + phi)}` (phase leads on the source side), the particle
//! velocity is `-nu p / Z0`, and active intensity points along `-nu`, away
//! from the source. A direction-of-arrival estimate therefore reads
//! `-I / |I|` and recovers `nu` itself.

use nalgebra::{Rotation3, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arrays::{ArraySpec, Baffle};
use crate::bessel::legendre;
use crate::error::{Error, Result};
use crate::rng::task_rng;
use crate::sh::{radial_filters, synthesis_order};
use crate::spatial::Direction;

/// Propagation medium. Defaults to air at 20 C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    /// Mass density rho_0, kg/m^3.
    pub density: f64,
    /// Sound speed c, m/s.
    pub sound_speed: f64,
}

impl Default for Medium {
    fn default() -> Self {
        Medium {
            density: 1.21,
            sound_speed: 343.0,
        }
    }
}

impl Medium {
    /// Characteristic impedance Z0 = rho_0 c.
    pub fn impedance(&self) -> f64 {
        self.density * self.sound_speed
    }

    pub fn wavenumber(&self, frequency_hz: f64) -> f64 {
        2.0 * std::f64::consts::PI * frequency_hz / self.sound_speed
    }
}

/// Monochromatic plane wave identified by its incidence direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    pub incidence: Direction,
    pub amplitude: f64,
    pub phase: f64,
}

impl PlaneWave {
    pub fn complex_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

/// Unit wave with zero phase arriving from `incidence`.
pub fn wave_from_incidence(incidence: Direction) -> PlaneWave {
    PlaneWave {
        incidence,
        amplitude: 1.0,
        phase: 0.0,
    }
}

/// One monochromatic scene: a frequency and a set of plane waves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub frequency_hz: f64,
    pub waves: Vec<PlaneWave>,
}

impl Scene {
    pub fn new(frequency_hz: f64, waves: Vec<PlaneWave>) -> Result<Self> {
        if frequency_hz <= 0.0 || !frequency_hz.is_finite() {
            return Err(Error::Domain(format!("frequency {frequency_hz} must be positive")));
        }
        if waves.iter().any(|w| w.amplitude < 0.0) {
            return Err(Error::Domain("wave amplitudes must be non-negative".into()));
        }
        Ok(Scene { frequency_hz, waves })
    }

    /// Total wave energy `sum A^2`.
    pub fn energy(&self) -> f64 {
        self.waves.iter().map(|w| w.amplitude * w.amplitude).sum()
    }
}

/// Nominal octave-band centers analyzed throughout.
pub const OCTAVE_CENTERS: [f64; 9] = [
    63.0, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0, 16000.0,
];

/// One-octave analysis band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub center_hz: f64,
    /// Octave fraction; fixed at 1 in this study.
    pub octave_fraction: f64,
    pub tone_count: usize,
}

impl BandSpec {
    pub fn new(center_hz: f64) -> Result<Self> {
        if !OCTAVE_CENTERS.iter().any(|&c| (c - center_hz).abs() < 1e-9) {
            return Err(Error::Domain(format!(
                "band center {center_hz} Hz is not one of the nominal octave centers"
            )));
        }
        Ok(BandSpec {
            center_hz,
            octave_fraction: 1.0,
            tone_count: 100,
        })
    }

    pub fn with_tones(mut self, tone_count: usize) -> Self {
        self.tone_count = tone_count;
        self
    }

    /// Band edges `(fc / sqrt 2, fc * sqrt 2)`.
    pub fn edges(&self) -> (f64, f64) {
        let half = 2.0_f64.powf(self.octave_fraction / 2.0);
        (self.center_hz / half, self.center_hz * half)
    }
}

/// Complex pressure per sensor at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureSnapshot {
    pub frequency_hz: f64,
    pub values: Vec<Complex64>,
}

impl PressureSnapshot {
    /// CSV dump `sensor,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sensor,re,im\n");
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

/// Free-field synthesis for directional sensors:
/// `p_m = S_m sum_i D_m(d_m . nu_i) A_i e^{j(k r_m . nu_i + phi_i)}`.
pub fn synth_free(spec: &ArraySpec, scene: &Scene, medium: &Medium) -> Result<PressureSnapshot> {
    if spec.baffle != Baffle::None {
        return Err(Error::ModelMismatch(
            "free-field synthesis requires an unbaffled array".into(),
        ));
    }
    let k = medium.wavenumber(scene.frequency_hz);
    // resolve the per-model band coefficients once per scene
    let coeff_of_model: Vec<&[f64]> = spec
        .directivities
        .iter()
        .map(|d| d.coefficients_at(scene.frequency_hz))
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); spec.sensors.len()];
    for (m, sensor) in spec.sensors.iter().enumerate() {
        let coeffs = coeff_of_model[sensor.directivity];
        let pos = sensor.position();
        let look = sensor.orientation.as_vector();
        let mut acc = Complex64::new(0.0, 0.0);
        for w in &scene.waves {
            let nu = w.incidence.as_vector();
            let gain = crate::directivity::evaluate_poly(coeffs, look.dot(nu));
            let phase = k * pos.dot(nu) + w.phase;
            acc += Complex64::from_polar(w.amplitude * gain, phase);
        }
        values[m] = acc * sensor.sensitivity;
    }
    Ok(PressureSnapshot {
        frequency_hz: scene.frequency_hz,
        values,
    })
}

/// Rigid-sphere synthesis for surface sensors, by the modal series
/// `p(dir) = sum_n b_n(ka) (2n+1)/(4 pi) P_n(dir . nu)` per wave.
///
/// `order` overrides the adaptive truncation rule (grow until
/// `|b_n| < 1e-8 max |b|`). Passing the analysis order reproduces an
/// order-limited processing chain.
pub fn synth_rigid(
    spec: &ArraySpec,
    scene: &Scene,
    medium: &Medium,
    order: Option<usize>,
) -> Result<PressureSnapshot> {
    let radius = match spec.baffle {
        Baffle::RigidSphere { radius_m } => radius_m,
        Baffle::None => {
            return Err(Error::ModelMismatch(
                "rigid-sphere synthesis requires a baffled array".into(),
            ))
        }
    };
    for (i, s) in spec.sensors.iter().enumerate() {
        if (s.position().norm() - radius).abs() > 1e-9 {
            return Err(Error::Domain(format!("sensor {i} is off the sphere surface")));
        }
    }
    let mut values = vec![Complex64::new(0.0, 0.0); spec.sensors.len()];
    if scene.waves.is_empty() {
        return Ok(PressureSnapshot {
            frequency_hz: scene.frequency_hz,
            values,
        });
    }
    let ka = medium.wavenumber(scene.frequency_hz) * radius;
    let n_max = match order {
        Some(n) => n,
        None => synthesis_order(ka)?,
    };
    let filters = radial_filters(ka, n_max)?;
    // fold (2n+1)/(4 pi) into the filters once
    let weighted: Vec<Complex64> = (0..=n_max)
        .map(|n| filters.at(n) * ((2.0 * n as f64 + 1.0) / (4.0 * std::f64::consts::PI)))
        .collect();
    for (q, sensor) in spec.sensors.iter().enumerate() {
        let rdir = sensor.position() / radius;
        let mut acc = Complex64::new(0.0, 0.0);
        for w in &scene.waves {
            let ct = rdir.dot(w.incidence.as_vector()).clamp(-1.0, 1.0);
            let pn = legendre(n_max, ct);
            let mut modal = Complex64::new(0.0, 0.0);
            for n in 0..=n_max {
                modal += weighted[n] * pn[n];
            }
            acc += w.complex_amplitude() * modal;
        }
        values[q] = acc * sensor.sensitivity;
    }
    Ok(PressureSnapshot {
        frequency_hz: scene.frequency_hz,
        values,
    })
}

/// Draw a log-uniform frequency within the band.
pub fn tone_frequency(band: &BandSpec, rng: &mut ChaCha8Rng) -> f64 {
    let (lo, hi) = band.edges();
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Redraw amplitude (log-uniform within +/- 3 dB) and phase (uniform) of a wave.
pub fn randomize_wave(base: &PlaneWave, rng: &mut ChaCha8Rng) -> PlaneWave {
    PlaneWave {
        incidence: base.incidence,
        amplitude: base.amplitude * 10f64.powf(rng.random_range(-3.0..3.0) / 20.0),
        phase: rng.random_range(0.0..std::f64::consts::TAU),
    }
}

/// Band-noise emulation: `tone_count` scenes at log-uniform frequencies, each
/// wave of the template re-randomized in amplitude (+/- 3 dB) and phase.
pub fn band_noise_scenes(band: &BandSpec, template: &[PlaneWave], seed: u64) -> Vec<Scene> {
    band_noise_scenes_with(band, seed, |rng, _f| {
        template.iter().map(|w| randomize_wave(w, rng)).collect()
    })
}

/// Generic band-noise generator: the closure builds the wave set per scene.
pub fn band_noise_scenes_with<F>(band: &BandSpec, seed: u64, mut waves_for_scene: F) -> Vec<Scene>
where
    F: FnMut(&mut ChaCha8Rng, f64) -> Vec<PlaneWave>,
{
    let mut rng = task_rng(seed, &[band.center_hz.to_bits()]);
    (0..band.tone_count)
        .map(|_| {
            let f = tone_frequency(band, &mut rng);
            Scene {
                frequency_hz: f,
                waves: waves_for_scene(&mut rng, f),
            }
        })
        .collect()
}

/// `n` rays with area-uniform directions over the full sphere, random
/// amplitudes (+/- 3 dB) and phases.
pub fn diffuse_rays_with(n: usize, rng: &mut ChaCha8Rng) -> Vec<PlaneWave> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..1.0);
            let az = rng.random_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            let dir = Direction::new(Vector3::new(s * az.cos(), s * az.sin(), z))
                .expect("unit by construction");
            randomize_wave(&wave_from_incidence(dir), rng)
        })
        .collect()
}

pub fn diffuse_rays(n: usize, seed: u64) -> Vec<PlaneWave> {
    let mut rng = task_rng(seed, &[0x6469_6666]);
    diffuse_rays_with(n, &mut rng)
}

/// `n` rays uniform within the spherical cap of solid angle
/// `fraction * 4 pi` around `center` (half-angle `arccos(1 - 2 fraction)`),
/// random amplitudes and phases.
pub fn beam_rays_with(
    n: usize,
    center: &Direction,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PlaneWave>> {
    if !(0.0 < fraction && fraction <= 1.0) {
        return Err(Error::Domain(format!("cap fraction {fraction} outside (0, 1]")));
    }
    let cos_alpha = 1.0 - 2.0 * fraction;
    let rot = Rotation3::rotation_between(&Vector3::z(), center.as_vector())
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI));
    Ok((0..n)
        .map(|_| {
            let z: f64 = rng.random_range(cos_alpha..1.0);
            let az = rng.random_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            let local = Vector3::new(s * az.cos(), s * az.sin(), z);
            let dir = Direction::new(rot * local).expect("unit by construction");
            randomize_wave(&wave_from_incidence(dir), rng)
        })
        .collect())
}

pub fn beam_rays(n: usize, center: &Direction, fraction: f64, seed: u64) -> Result<Vec<PlaneWave>> {
    let mut rng = task_rng(seed, &[0x6265_616d]);
    beam_rays_with(n, center, fraction, &mut rng)
}

/// Scale amplitudes so the set's total energy `sum A^2` equals `target`.
pub fn normalize_energy(waves: &mut [PlaneWave], target: f64) {
    let total: f64 = waves.iter().map(|w| w.amplitude * w.amplitude).sum();
    if total <= 0.0 {
        return;
    }
    let g = (target / total).sqrt();
    for w in waves.iter_mut() {
        w.amplitude *= g;
    }
}
