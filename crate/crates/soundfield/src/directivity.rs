//! Polynomial-in-cos(theta) directivity models.
//!
//! A pattern is stored as real coefficients `a_0..a_N` (N <= 8) per frequency
//! band, evaluated as `D(theta) = sum a_n cos^n(theta)`. Coefficients are kept
//! per octave band with nearest-band lookup (log-frequency distance) for
//! arbitrary frequencies. Fits operate on linear magnitude, and fitted lobes
//! are not clipped at zero: the model is the polynomial itself.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 8;

/// Coefficients for one frequency band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCoefficients {
    pub center_hz: f64,
    pub coefficients: Vec<f64>,
}

/// Per-band polynomial directivity model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectivityPolynomial {
    bands: Vec<BandCoefficients>,
}

impl DirectivityPolynomial {
    pub fn new(mut bands: Vec<BandCoefficients>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::Domain("directivity model needs at least one band".into()));
        }
        for b in &bands {
            if b.coefficients.is_empty() || b.coefficients.len() > MAX_ORDER + 1 {
                return Err(Error::Domain(format!(
                    "band {} Hz has {} coefficients (1..=9 allowed)",
                    b.center_hz,
                    b.coefficients.len()
                )));
            }
            if b.center_hz <= 0.0 {
                return Err(Error::Domain("band center must be positive".into()));
            }
        }
        bands.sort_by(|a, b| a.center_hz.total_cmp(&b.center_hz));
        Ok(DirectivityPolynomial { bands })
    }

    /// Frequency-independent model with the given coefficients.
    pub fn constant(coefficients: Vec<f64>) -> Self {
        DirectivityPolynomial {
            bands: vec![BandCoefficients { center_hz: 1000.0, coefficients }],
        }
    }

    /// Ideal cardioid `0.5 + 0.5 cos(theta)`.
    pub fn cardioid() -> Self {
        Self::constant(vec![0.5, 0.5])
    }

    /// Omnidirectional unit gain.
    pub fn omni() -> Self {
        Self::constant(vec![1.0])
    }

    pub fn bands(&self) -> &[BandCoefficients] {
        &self.bands
    }

    /// Coefficients of the band whose center is nearest to `f` in log frequency.
    pub fn coefficients_at(&self, f: f64) -> &[f64] {
        let lf = f.max(f64::MIN_POSITIVE).ln();
        let best = self
            .bands
            .iter()
            .min_by(|a, b| {
                (a.center_hz.ln() - lf)
                    .abs()
                    .total_cmp(&(b.center_hz.ln() - lf).abs())
            })
            .expect("model has at least one band");
        &best.coefficients
    }

    /// Gain at `cos_theta` for frequency `f`.
    pub fn evaluate(&self, f: f64, cos_theta: f64) -> f64 {
        evaluate_poly(self.coefficients_at(f), cos_theta)
    }

    /// Parse the text table `band_hz, a0..a8` (one band per line, `#` comments).
    pub fn from_table(text: &str) -> Result<Self> {
        let mut bands = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 2 {
                return Err(Error::Format(format!(
                    "line {}: expected 'band_hz, a0[, a1..]'",
                    lineno + 1
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad number '{s}'", lineno + 1)))
            };
            let center_hz = parse(fields[0])?;
            let coefficients = fields[1..].iter().map(|s| parse(s)).collect::<Result<_>>()?;
            bands.push(BandCoefficients { center_hz, coefficients });
        }
        DirectivityPolynomial::new(bands)
    }

    /// Render as the `band_hz, a0..a8` text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for b in &self.bands {
            out.push_str(&format!("{}", b.center_hz));
            for c in &b.coefficients {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluate `sum a_n c^n` by Horner's rule.
pub fn evaluate_poly(coefficients: &[f64], cos_theta: f64) -> f64 {
    let mut acc = 0.0;
    for &a in coefficients.iter().rev() {
        acc = acc * cos_theta + a;
    }
    acc
}

/// Measured pattern samples for one band: `(angle_deg, linear magnitude)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternSamples {
    pub band_hz: f64,
    pub samples: Vec<(f64, f64)>,
}

impl PatternSamples {
    pub fn new(band_hz: f64, samples: Vec<(f64, f64)>) -> Result<Self> {
        for &(angle, mag) in &samples {
            if !(0.0..=180.0).contains(&angle) {
                return Err(Error::Domain(format!("sample angle {angle} outside [0, 180]")));
            }
            if mag < 0.0 {
                return Err(Error::Domain(format!("sample magnitude {mag} is negative")));
            }
        }
        Ok(PatternSamples { band_hz, samples })
    }

    /// Parse `angle_deg, magnitude` lines.
    pub fn from_table(band_hz: f64, text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(',').map(str::trim);
            let bad = || Error::Format(format!("line {}: expected 'angle_deg, magnitude'", lineno + 1));
            let angle: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let mag: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            samples.push((angle, mag));
        }
        PatternSamples::new(band_hz, samples)
    }
}

/// Result of a least-squares polynomial fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
}

/// Least-squares fit of `sum a_n cos^n(theta)` to pattern samples.
pub fn fit(samples: &PatternSamples, order: usize) -> Result<FitResult> {
    if order > MAX_ORDER {
        return Err(Error::Domain(format!("order {order} exceeds {MAX_ORDER}")));
    }
    let distinct: std::collections::BTreeSet<u64> = samples
        .samples
        .iter()
        .map(|&(a, _)| (a * 1e9).round() as u64)
        .collect();
    if distinct.len() < order + 1 {
        return Err(Error::Fit(format!(
            "{} distinct angles cannot determine {} coefficients",
            distinct.len(),
            order + 1
        )));
    }
    let m = samples.samples.len();
    let mut v = DMatrix::<f64>::zeros(m, order + 1);
    let mut rhs = DMatrix::<f64>::zeros(m, 1);
    for (i, &(angle, mag)) in samples.samples.iter().enumerate() {
        let c = angle.to_radians().cos();
        let mut p = 1.0;
        for j in 0..=order {
            v[(i, j)] = p;
            p *= c;
        }
        rhs[(i, 0)] = mag;
    }
    let svd = v.clone().svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Fit(format!("degenerate sample set: {e}")))?;
    let residual = &v * &sol - &rhs;
    let residual_rms = (residual.iter().map(|r| r * r).sum::<f64>() / m as f64).sqrt();
    Ok(FitResult {
        coefficients: sol.column(0).iter().copied().collect(),
        residual_rms,
    })
}

/// Sum and difference patterns of an opposed microphone pair sharing one model:
/// `sum(theta) = D(theta) + D(pi - theta)`, `diff(theta) = D(theta) - D(pi - theta)`.
///
/// In coefficient form the sum keeps only even powers (doubled) and the
/// difference only odd powers (doubled).
#[derive(Debug, Clone)]
pub struct PairPatterns {
    pub sum_coefficients: Vec<f64>,
    pub diff_coefficients: Vec<f64>,
}

impl PairPatterns {
    pub fn sum_at(&self, theta_rad: f64) -> f64 {
        evaluate_poly(&self.sum_coefficients, theta_rad.cos())
    }

    pub fn diff_at(&self, theta_rad: f64) -> f64 {
        evaluate_poly(&self.diff_coefficients, theta_rad.cos())
    }
}

pub fn pair_patterns(coefficients: &[f64]) -> PairPatterns {
    let mut sum = vec![0.0; coefficients.len()];
    let mut diff = vec![0.0; coefficients.len()];
    for (n, &a) in coefficients.iter().enumerate() {
        if n % 2 == 0 {
            sum[n] = 2.0 * a;
        } else {
            diff[n] = 2.0 * a;
        }
    }
    PairPatterns {
        sum_coefficients: sum,
        diff_coefficients: diff,
    }
}
