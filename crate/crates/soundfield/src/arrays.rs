//! Geometry and channel layout of the three modeled arrays.
//!
//! - `afmt`: four cardioid capsules in a regular tetrahedron, 6 mm from the
//!   origin.
//! - `fibo64`: 64 omnidirectional sensors on a rigid sphere of radius 42 mm,
//!   placed on a Fibonacci lattice.
//! - `tf24`: 24 narrow-directional microphones forming 12 antipodal pairs
//!   along a tight frame of unit axes, 10 mm from the origin (20 mm spacing).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::directivity::DirectivityPolynomial;
use crate::error::{Error, Result};
use crate::spatial::{fibonacci_sphere, Direction, DirectionMatrix};

pub const AFMT_CAPSULE_RADIUS_M: f64 = 0.006;
pub const FIBO64_SPHERE_RADIUS_M: f64 = 0.042;
pub const TF24_AXIS_RADIUS_M: f64 = 0.010;

/// Baffle model of an array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Baffle {
    None,
    RigidSphere { radius_m: f64 },
}

/// One sensor: position, look direction, directivity model id, sensitivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub position_m: [f64; 3],
    pub orientation: Direction,
    pub directivity: usize,
    #[serde(default = "default_sensitivity")]
    pub sensitivity: f64,
}

fn default_sensitivity() -> f64 {
    1.0
}

impl Sensor {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.position_m[0], self.position_m[1], self.position_m[2])
    }
}

/// Immutable description of an array: name, sensors, directivity models, baffle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub name: String,
    pub sensors: Vec<Sensor>,
    pub directivities: Vec<DirectivityPolynomial>,
    pub baffle: Baffle,
}

impl ArraySpec {
    pub fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(Error::Domain("array has no sensors".into()));
        }
        for (i, s) in self.sensors.iter().enumerate() {
            if s.directivity >= self.directivities.len() {
                return Err(Error::Domain(format!(
                    "sensor {i} references directivity {} of {}",
                    s.directivity,
                    self.directivities.len()
                )));
            }
        }
        if let Baffle::RigidSphere { radius_m } = self.baffle {
            if radius_m <= 0.0 {
                return Err(Error::Domain("sphere radius must be positive".into()));
            }
            for (i, s) in self.sensors.iter().enumerate() {
                if (s.position().norm() - radius_m).abs() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "sensor {i} is not on the baffle surface"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn directivity_of(&self, sensor: usize) -> &DirectivityPolynomial {
        &self.directivities[self.sensors[sensor].directivity]
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ArraySpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Tetrahedral capsule orientations: FLU, FRD, BLD, BRU.
pub fn afmt_capsule_directions() -> [Direction; 4] {
    let s = 1.0 / 3.0_f64.sqrt();
    [
        Direction::new(Vector3::new(s, s, s)).unwrap(),
        Direction::new(Vector3::new(s, -s, -s)).unwrap(),
        Direction::new(Vector3::new(-s, s, -s)).unwrap(),
        Direction::new(Vector3::new(-s, -s, s)).unwrap(),
    ]
}

/// Four-capsule tetrahedral array with ideal cardioid capsules.
pub fn make_afmt() -> ArraySpec {
    make_afmt_with(DirectivityPolynomial::cardioid())
}

/// Tetrahedral array with a custom capsule model (e.g. a fitted polynomial).
pub fn make_afmt_with(capsule: DirectivityPolynomial) -> ArraySpec {
    let sensors = afmt_capsule_directions()
        .into_iter()
        .map(|d| {
            let p = d.as_vector() * AFMT_CAPSULE_RADIUS_M;
            Sensor {
                position_m: [p.x, p.y, p.z],
                orientation: d,
                directivity: 0,
                sensitivity: 1.0,
            }
        })
        .collect();
    ArraySpec {
        name: "afmt".into(),
        sensors,
        directivities: vec![capsule],
        baffle: Baffle::None,
    }
}

/// 64 omnidirectional sensors on a rigid sphere, Fibonacci lattice, radial look.
pub fn make_fibo64() -> ArraySpec {
    let sensors = fibonacci_sphere(64)
        .into_iter()
        .map(|d| {
            let p = d.as_vector() * FIBO64_SPHERE_RADIUS_M;
            Sensor {
                position_m: [p.x, p.y, p.z],
                orientation: d,
                directivity: 0,
                sensitivity: 1.0,
            }
        })
        .collect();
    ArraySpec {
        name: "fibo64".into(),
        sensors,
        directivities: vec![DirectivityPolynomial::omni()],
        baffle: Baffle::RigidSphere {
            radius_m: FIBO64_SPHERE_RADIUS_M,
        },
    }
}

/// The 12 tight-frame axes: zenith rows at 45 deg (8 azimuths) plus 4 equator
/// axes at 45 deg steps. `R^T R = 4 I`.
pub fn tf24_axes() -> DirectionMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    DirectionMatrix::from_rows(&[
        [0.0, r, r],
        [0.5, 0.5, r],
        [r, 0.0, r],
        [0.5, -0.5, r],
        [0.0, -r, r],
        [-0.5, -0.5, r],
        [-r, 0.0, r],
        [-0.5, 0.5, r],
        [0.0, 1.0, 0.0],
        [r, r, 0.0],
        [1.0, 0.0, 0.0],
        [r, -r, 0.0],
    ])
    .expect("frame rows are unit vectors")
}

/// Default narrow-directional pattern shipped for the tight-frame array.
pub fn tf24_default_directivity() -> DirectivityPolynomial {
    DirectivityPolynomial::from_table(include_str!("../fixtures/tf24_directivity.csv"))
        .expect("embedded fixture parses")
}

/// 24-sensor tight-frame array with the shipped directivity fixture.
pub fn make_tf24() -> ArraySpec {
    make_tf24_with(tf24_default_directivity())
}

/// Tight-frame array with a custom microphone model.
///
/// Sensors are ordered pairwise: sensor `2i` sits at `+10 mm` along axis `i`
/// looking outward, sensor `2i + 1` at `-10 mm` looking the opposite way.
pub fn make_tf24_with(microphone: DirectivityPolynomial) -> ArraySpec {
    let axes = tf24_axes();
    let mut sensors = Vec::with_capacity(24);
    for i in 0..axes.len() {
        let axis = Direction::new(axes.row(i)).unwrap();
        for sign in [1.0, -1.0] {
            let p = axis.as_vector() * (sign * TF24_AXIS_RADIUS_M);
            sensors.push(Sensor {
                position_m: [p.x, p.y, p.z],
                orientation: if sign > 0.0 { axis } else { axis.flipped() },
                directivity: 0,
                sensitivity: 1.0,
            });
        }
    }
    ArraySpec {
        name: "tf24".into(),
        sensors,
        directivities: vec![microphone],
        baffle: Baffle::None,
    }
}

/// One antipodal pair of a tight-frame array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPair {
    pub axis: Direction,
    pub plus: usize,
    pub minus: usize,
}

/// The 12 directional pairs of a tight-frame array.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLayout {
    pub pairs: Vec<SensorPair>,
}

impl PairLayout {
    pub fn axes(&self) -> DirectionMatrix {
        DirectionMatrix::from_directions(
            &self.pairs.iter().map(|p| p.axis).collect::<Vec<_>>(),
        )
    }
}

/// Recover the pair layout of an array built from antipodal sensor pairs.
///
/// Sensors must come in consecutive (plus, minus) pairs with opposite
/// positions and orientations, as produced by [`make_tf24_with`].
pub fn pair_layout(spec: &ArraySpec) -> Result<PairLayout> {
    if spec.sensors.len() % 2 != 0 {
        return Err(Error::Domain("pair layout needs an even sensor count".into()));
    }
    let mut pairs = Vec::with_capacity(spec.sensors.len() / 2);
    for i in (0..spec.sensors.len()).step_by(2) {
        let plus = &spec.sensors[i];
        let minus = &spec.sensors[i + 1];
        if (plus.position() + minus.position()).norm() > 1e-9 {
            return Err(Error::Domain(format!(
                "sensors {i} and {} are not antipodal",
                i + 1
            )));
        }
        let axis = plus.orientation;
        if (axis.as_vector() + minus.orientation.as_vector()).norm() > 1e-9 {
            return Err(Error::Domain(format!(
                "sensors {i} and {} are not counter-oriented",
                i + 1
            )));
        }
        let radial = plus.position().norm();
        if radial > 0.0 && (plus.position() / radial - axis.as_vector()).norm() > 1e-9 {
            return Err(Error::Domain(format!("sensor {i} does not look along its axis")));
        }
        pairs.push(SensorPair { axis, plus: i, minus: i + 1 });
    }
    Ok(PairLayout { pairs })
}
