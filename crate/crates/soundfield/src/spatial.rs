//! Coordinate conventions, direction algebra, spherical point sets, and
//! tight-frame verification.
//!
//! Azimuth is measured from +x toward +y; zenith from +z. A direction with
//! azimuth `az` and zenith `zen` (degrees) maps to the unit vector
//! `(sin zen cos az, sin zen sin az, cos zen)`.

use nalgebra::{Dyn, OMatrix, Vector3, U3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance on `R^T R - A I` for tight-frame checks.
pub const TIGHT_FRAME_TOL: f64 = 1e-10;

/// Unit vector on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Direction(Vector3<f64>);

impl Direction {
    /// Build from a vector, normalizing it. Fails on (near-)zero input.
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if n < 1e-12 {
            return Err(Error::Domain("direction vector has zero norm".into()));
        }
        Ok(Direction(v / n))
    }

    /// Build from azimuth/zenith in degrees. Zenith must lie in [0, 180].
    pub fn from_angles(azimuth_deg: f64, zenith_deg: f64) -> Result<Self> {
        if !(0.0..=180.0).contains(&zenith_deg) {
            return Err(Error::Domain(format!(
                "zenith {zenith_deg} deg outside [0, 180]"
            )));
        }
        let az = azimuth_deg.to_radians();
        let zen = zenith_deg.to_radians();
        let (sz, cz) = zen.sin_cos();
        let (sa, ca) = az.sin_cos();
        Ok(Direction(Vector3::new(sz * ca, sz * sa, cz)))
    }

    /// `(azimuth, zenith)` in degrees, azimuth wrapped to [0, 360).
    pub fn to_angles(&self) -> (f64, f64) {
        let zen = self.0.z.clamp(-1.0, 1.0).acos().to_degrees();
        let mut az = self.0.y.atan2(self.0.x).to_degrees();
        if az < 0.0 {
            az += 360.0;
        }
        if az >= 360.0 {
            az = 0.0;
        }
        (az, zen)
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn into_vector(self) -> Vector3<f64> {
        self.0
    }

    /// Antipodal direction.
    pub fn flipped(&self) -> Self {
        Direction(-self.0)
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.0.dot(&other.0)
    }
}

impl TryFrom<[f64; 3]> for Direction {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Direction::new(Vector3::new(v[0], v[1], v[2]))
    }
}

impl From<Direction> for [f64; 3] {
    fn from(d: Direction) -> [f64; 3] {
        [d.0.x, d.0.y, d.0.z]
    }
}

/// See [`Direction::from_angles`].
pub fn direction_from_angles(azimuth_deg: f64, zenith_deg: f64) -> Result<Direction> {
    Direction::from_angles(azimuth_deg, zenith_deg)
}

/// Angle between two unit vectors, in degrees, in [0, 180].
pub fn angle_between(a: &Direction, b: &Direction) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
}

/// N x 3 matrix of row unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionMatrix(OMatrix<f64, Dyn, U3>);

impl DirectionMatrix {
    pub fn from_directions(dirs: &[Direction]) -> Self {
        let mut m = OMatrix::<f64, Dyn, U3>::zeros(dirs.len());
        for (i, d) in dirs.iter().enumerate() {
            m.set_row(i, &d.as_vector().transpose());
        }
        DirectionMatrix(m)
    }

    /// Build from raw rows, checking each row for unit norm.
    pub fn from_rows(rows: &[[f64; 3]]) -> Result<Self> {
        let mut m = OMatrix::<f64, Dyn, U3>::zeros(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let v = Vector3::new(r[0], r[1], r[2]);
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "row {i} has norm {} (expected 1)",
                    v.norm()
                )));
            }
            m.set_row(i, &v.transpose());
        }
        Ok(DirectionMatrix(m))
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn row(&self, i: usize) -> Vector3<f64> {
        Vector3::new(self.0[(i, 0)], self.0[(i, 1)], self.0[(i, 2)])
    }

    pub fn as_matrix(&self) -> &OMatrix<f64, Dyn, U3> {
        &self.0
    }
}

/// Result of a tight-frame verification on a direction matrix.
#[derive(Debug, Clone, Copy)]
pub struct FrameCheck {
    /// Frame constant `A = trace(R^T R) / 3 = N / 3` for unit rows.
    pub constant: f64,
    /// Largest off-diagonal magnitude of `R^T R`.
    pub max_offdiag: f64,
    /// Largest entry of `|R^T R - A I|` (includes diagonal deviation).
    pub max_deviation: f64,
    /// True iff `max_deviation < tol`.
    pub is_tight: bool,
}

/// Verify the tight-frame identity `R^T R = A I` with the default tolerance.
pub fn frame_constant(r: &DirectionMatrix) -> Result<FrameCheck> {
    frame_constant_with_tol(r, TIGHT_FRAME_TOL)
}

pub fn frame_constant_with_tol(r: &DirectionMatrix, tol: f64) -> Result<FrameCheck> {
    for i in 0..r.len() {
        let n = r.row(i).norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("row {i} is not unit-norm ({n})")));
        }
    }
    let g = r.as_matrix().transpose() * r.as_matrix();
    let constant = g.trace() / 3.0;
    let mut max_offdiag: f64 = 0.0;
    let mut max_deviation: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { constant } else { 0.0 };
            max_deviation = max_deviation.max((g[(i, j)] - target).abs());
            if i != j {
                max_offdiag = max_offdiag.max(g[(i, j)].abs());
            }
        }
    }
    Ok(FrameCheck {
        constant,
        max_offdiag,
        max_deviation,
        is_tight: max_deviation < tol,
    })
}

/// Golden ratio.
const PHI: f64 = 1.618033988749894848;

/// Quasi-uniform directions from the offset equal-area Fibonacci lattice:
/// `z_k = 1 - (2k+1)/n`, azimuth `2 pi k / PHI^2`. Deterministic in `n`.
pub fn fibonacci_sphere(n: usize) -> Vec<Direction> {
    assert!(n >= 1, "fibonacci_sphere requires n >= 1");
    let golden_angle = 2.0 * std::f64::consts::PI / (PHI * PHI);
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let az = golden_angle * k as f64;
            let s = (1.0 - z * z).sqrt();
            let (sa, ca) = az.sin_cos();
            Direction(Vector3::new(s * ca, s * sa, z))
        })
        .collect()
}

/// Export a direction set as CSV rows `x,y,z` (with header).
pub fn directions_to_csv(dirs: &[Direction]) -> String {
    let mut out = String::from("x,y,z\n");
    for d in dirs {
        let v = d.as_vector();
        out.push_str(&format!(
            "{},{},{}\n",
            crate::report::format_float(v.x),
            crate::report::format_float(v.y),
            crate::report::format_float(v.z)
        ));
    }
    out
}
