//! Ellipse geometry, inertia integrals, posture dynamics and the impulse law.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{finite, positive, Error, Result};
use crate::quadrature::QuarterRule;

pub const DEFAULT_QUAD_POINTS: usize = 512;
const MIN_QUAD_POINTS: usize = 64;
const AXIS_LOWER: f64 = 1e-6;
const AXIS_TOL: f64 = 1e-10;
const MAX_POSTURE_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusPolicy {
    /// Distance from the centre to the support point of the rotated ellipse.
    #[default]
    SupportFunction,
    /// Constant `P / 2pi`.
    MeanRadius,
}

/// Which squared lever arm each in-plane inertia slot integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaLabels {
    /// `y1` integrates `x^2` and `y3` integrates `z^2`.
    #[default]
    Coordinate,
    /// `y1` integrates `z^2` (distance from the x axis) and `y3` integrates `x^2`.
    AxisDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RingParams {
    pub mass: f64,
    pub perimeter: f64,
    pub gravity: f64,
    /// Incline angle in radians.
    pub incline: f64,
    pub quad_points: usize,
    pub radius_policy: RadiusPolicy,
    pub inertia_labels: InertiaLabels,
}

impl Default for RingParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            perimeter: 2.0,
            gravity: 9.81,
            incline: 5f64.to_radians(),
            quad_points: DEFAULT_QUAD_POINTS,
            radius_policy: RadiusPolicy::SupportFunction,
            inertia_labels: InertiaLabels::Coordinate,
        }
    }
}

impl RingParams {
    pub fn flat() -> Self {
        Self {
            incline: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        positive("perimeter", self.perimeter)?;
        finite("gravity", self.gravity)?;
        finite("incline", self.incline)?;
        if self.quad_points < MIN_QUAD_POINTS {
            return Err(Error::InvalidInput {
                name: "quad_points",
                reason: format!("need at least {MIN_QUAD_POINTS}, got {}", self.quad_points),
            });
        }
        Ok(())
    }

    pub fn mean_radius(&self) -> f64 {
        self.perimeter / std::f64::consts::TAU
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertiaTriple {
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

impl InertiaTriple {
    pub fn new(y1: f64, y2: f64, y3: f64) -> Self {
        Self { y1, y2, y3 }
    }

    pub fn circle(mass: f64, radius: f64) -> Self {
        let half = 0.5 * mass * radius * radius;
        Self::new(half, 2.0 * half, half)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.y1, self.y2, self.y3]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// `y2 - y1 - y3`, zero for any planar ring.
    pub fn planar_defect(&self) -> f64 {
        self.y2 - self.y1 - self.y3
    }
}

/// Semi-axis lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisPair {
    pub a: f64,
    pub b: f64,
}

/// Semi-axis rates `(da/dt, db/dt)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisRates {
    pub a: f64,
    pub b: f64,
}

/// Quadrature-backed ellipse calculations at a fixed node count.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipse {
    rule: QuarterRule,
}

impl Ellipse {
    pub fn new(quad_points: usize) -> Self {
        Self {
            rule: QuarterRule::new(quad_points),
        }
    }

    pub fn perimeter(&self, a: f64, b: f64) -> f64 {
        let (a2, b2) = (a * a, b * b);
        self.rule
            .trig()
            .map(|(c, s, w)| w * (a2 * s + b2 * c).sqrt())
            .sum()
    }

    /// `(dP/da, dP/db)`.
    pub fn perimeter_partials(&self, a: f64, b: f64) -> (f64, f64) {
        let (a2, b2) = (a * a, b * b);
        let mut da = 0.0;
        let mut db = 0.0;
        for (c, s, w) in self.rule.trig() {
            let g = (a2 * s + b2 * c).sqrt();
            if g > 0.0 {
                da += w * a * s / g;
                db += w * b * c / g;
            }
        }
        (da, db)
    }

    /// Arclength-weighted second moments `(int x^2 ds, int z^2 ds, P)`.
    fn moments(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let (a2, b2) = (a * a, b * b);
        let mut sx = 0.0;
        let mut sz = 0.0;
        let mut p = 0.0;
        for (c, s, w) in self.rule.trig() {
            let ds = w * (a2 * s + b2 * c).sqrt();
            sx += a2 * c * ds;
            sz += b2 * s * ds;
            p += ds;
        }
        (sx, sz, p)
    }

    pub fn inertia(&self, a: f64, b: f64, mass: f64, labels: InertiaLabels) -> InertiaTriple {
        let (sx, sz, p) = self.moments(a, b);
        let k = mass / p;
        let (first, third) = match labels {
            InertiaLabels::Coordinate => (sx, sz),
            InertiaLabels::AxisDistance => (sz, sx),
        };
        InertiaTriple::new(k * first, k * (sx + sz), k * third)
    }

    /// Semi-axis `a` with `perimeter(a, b) = p`.
    pub fn solve_axis(&self, p: f64, b: f64) -> Result<f64> {
        positive("perimeter", p)?;
        positive("b", b)?;
        let f = |a: f64| self.perimeter(a, b) - p;
        let mut lo = AXIS_LOWER;
        let mut hi = 0.5 * p;
        if f(lo) > 0.0 || f(hi) < 0.0 {
            return Err(Error::InfeasibleGeometry { perimeter: p, b });
        }
        while hi - lo > 1e-7 * p {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.polish(p, b, 0.5 * (lo + hi), lo, hi)
    }

    /// Newton iteration from `guess`, falling back to the bracketed solve.
    pub fn solve_axis_near(&self, p: f64, b: f64, guess: f64) -> Result<f64> {
        if guess.is_finite() && guess > AXIS_LOWER {
            if let Ok(a) = self.polish(p, b, guess, AXIS_LOWER, 0.5 * p) {
                return Ok(a);
            }
        }
        self.solve_axis(p, b)
    }

    fn polish(&self, p: f64, b: f64, mut a: f64, lo: f64, hi: f64) -> Result<f64> {
        for _ in 0..30 {
            let r = self.perimeter(a, b) - p;
            if r.abs() <= 0.1 * AXIS_TOL {
                return Ok(a);
            }
            let (da, _) = self.perimeter_partials(a, b);
            let next = a - r / da;
            if !(next > lo && next < hi) || !next.is_finite() {
                break;
            }
            if (next - a).abs() < 1e-15 * a {
                a = next;
                break;
            }
            a = next;
        }
        if (self.perimeter(a, b) - p).abs() <= AXIS_TOL {
            Ok(a)
        } else {
            Err(Error::InfeasibleGeometry { perimeter: p, b })
        }
    }

    /// `da/dt` keeping the perimeter fixed while `b` moves at `b_rate`.
    pub fn slaved_axis_rate(&self, a: f64, b: f64, b_rate: f64) -> f64 {
        let (da, db) = self.perimeter_partials(a, b);
        -db / da * b_rate
    }
}

pub fn ellipse_perimeter(a: f64, b: f64, n: usize) -> Result<f64> {
    positive("a", a)?;
    finite("b", b)?;
    if b < 0.0 {
        return Err(Error::InvalidInput {
            name: "b",
            reason: format!("must be non-negative, got {b}"),
        });
    }
    if n < MIN_QUAD_POINTS {
        return Err(Error::InvalidInput {
            name: "n",
            reason: format!("need at least {MIN_QUAD_POINTS} nodes"),
        });
    }
    Ok(Ellipse::new(n).perimeter(a, b))
}

pub fn solve_axis_for_perimeter(p: f64, b: f64) -> Result<f64> {
    Ellipse::new(DEFAULT_QUAD_POINTS).solve_axis(p, b)
}

pub fn inertia_triple(a: f64, b: f64, params: &RingParams) -> Result<InertiaTriple> {
    positive("a", a)?;
    positive("b", b)?;
    params.validate()?;
    Ok(Ellipse::new(params.quad_points).inertia(a, b, params.mass, params.inertia_labels))
}

/// Shape state: a tracked ring point in polar form plus the semi-axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostureState {
    pub point_x: f64,
    pub point_z: f64,
    pub polar_radius: f64,
    pub polar_angle: f64,
    pub semi_a: f64,
    pub semi_b: f64,
}

impl PostureState {
    /// The ring point at `polar_angle` on the ellipse with semi-axes `a`, `b`.
    pub fn on_ellipse(a: f64, b: f64, polar_angle: f64) -> Self {
        let (s, c) = polar_angle.sin_cos();
        let r = 1.0 / ((c / a).powi(2) + (s / b).powi(2)).sqrt();
        Self {
            point_x: r * c,
            point_z: r * s,
            polar_radius: r,
            polar_angle,
            semi_a: a,
            semi_b: b,
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.point_x,
            self.point_z,
            self.polar_radius,
            self.polar_angle,
            self.semi_a,
            self.semi_b,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            point_x: v[0],
            point_z: v[1],
            polar_radius: v[2],
            polar_angle: v[3],
            semi_a: v[4],
            semi_b: v[5],
        }
    }

    /// `x^2/a^2 + z^2/b^2 - 1`.
    pub fn ellipse_residual(&self) -> f64 {
        (self.point_x / self.semi_a).powi(2) + (self.point_z / self.semi_b).powi(2) - 1.0
    }

    /// Largest mismatch between the Cartesian and polar point coordinates.
    pub fn polar_residual(&self) -> f64 {
        let (s, c) = self.polar_angle.sin_cos();
        (self.point_x - self.polar_radius * c)
            .abs()
            .max((self.point_z - self.polar_radius * s).abs())
    }

    fn angle_weight(&self) -> f64 {
        let (s, c) = self.polar_angle.sin_cos();
        (self.semi_a.powi(2) * c * c + self.semi_b.powi(2) * s * s).sqrt()
    }
}

fn posture_system(xi: &PostureState, u: AxisRates) -> (Matrix6<f64>, Vector6<f64>) {
    let (s, c) = xi.polar_angle.sin_cos();
    let (x, z, a, b) = (xi.point_x, xi.point_z, xi.semi_a, xi.semi_b);
    #[rustfmt::skip]
    let m = Matrix6::new(
        1.0, 0.0, -c, z, 0.0, 0.0,
        0.0, 1.0, -s, -x, 0.0, 0.0,
        x / (a * a), z / (b * b), 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, xi.angle_weight(), 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
    );
    let rhs = Vector6::new(
        0.0,
        0.0,
        x * x / a.powi(3) * u.a + z * z / b.powi(3) * u.b,
        0.0,
        u.a,
        u.b,
    );
    (m, rhs)
}

/// Time derivative of the posture state under semi-axis rates `u`.
pub fn posture_rhs(xi: &PostureState, u: AxisRates) -> Result<PostureState> {
    for (name, v) in [
        ("posture", xi.point_x),
        ("posture", xi.point_z),
        ("posture", xi.polar_radius),
        ("posture", xi.polar_angle),
        ("semi_a", xi.semi_a),
        ("semi_b", xi.semi_b),
        ("u", u.a),
        ("u", u.b),
    ] {
        finite(name, v)?;
    }
    positive("semi_a", xi.semi_a)?;
    positive("semi_b", xi.semi_b)?;
    let (m, rhs) = posture_system(xi, u);
    let sv = m.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition < MAX_POSTURE_CONDITION) {
        return Err(Error::PostureSingular { condition });
    }
    let d = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::PostureSingular { condition })?;
    Ok(PostureState::from_slice(d.as_slice()))
}

/// Residuals of the differentiated posture constraints:
/// the two polar-coordinate rates, the ellipse rate and the angle-rate row.
pub fn posture_constraint_residuals(xi: &PostureState, d: &PostureState, u: AxisRates) -> [f64; 4] {
    let (s, c) = xi.polar_angle.sin_cos();
    let (x, z, a, b) = (xi.point_x, xi.point_z, xi.semi_a, xi.semi_b);
    [
        d.point_x - d.polar_radius * c + z * d.polar_angle,
        d.point_z - d.polar_radius * s - x * d.polar_angle,
        x * d.point_x / (a * a) + z * d.point_z / (b * b)
            - x * x * u.a / a.powi(3)
            - z * z * u.b / b.powi(3),
        xi.angle_weight() * d.polar_angle,
    ]
}

/// Sigmoid bump applied to the full length of one principal axis.
///
/// `amplitude` and `baseline` are full axis lengths, so the semi-axis is half
/// of [`ImpulseInput::axis_length`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulseInput {
    pub amplitude: f64,
    pub center_time: f64,
    pub sharpness: f64,
    pub baseline: f64,
}

impl Default for ImpulseInput {
    fn default() -> Self {
        Self {
            amplitude: 0.35,
            center_time: 2.0,
            sharpness: 10.0,
            baseline: 2.0 / std::f64::consts::PI,
        }
    }
}

impl ImpulseInput {
    /// Zero-amplitude input holding the circle of perimeter `p`.
    pub fn circle(p: f64) -> Self {
        Self {
            amplitude: 0.0,
            baseline: p / std::f64::consts::PI,
            ..Self::default()
        }
    }

    pub fn validate(&self, perimeter: f64) -> Result<()> {
        finite("amplitude", self.amplitude)?;
        finite("center_time", self.center_time)?;
        positive("sharpness", self.sharpness)?;
        positive("baseline", self.baseline)?;
        let peak = self.baseline + self.amplitude.max(0.0);
        let low = self.baseline + self.amplitude.min(0.0);
        if peak >= 0.5 * perimeter {
            return Err(Error::InvalidInput {
                name: "impulse",
                reason: format!(
                    "peak axis length {peak} must stay below half the perimeter {}",
                    0.5 * perimeter
                ),
            });
        }
        if low <= 0.0 {
            return Err(Error::InvalidInput {
                name: "impulse",
                reason: format!("axis length reaches {low}"),
            });
        }
        Ok(())
    }

    fn bump(&self, t: f64) -> (f64, f64) {
        let x = self.sharpness * (t - self.center_time);
        let e = (-x.abs()).exp();
        // sigma (1 - sigma), written to be exactly even in x
        let bell = e / ((1.0 + e) * (1.0 + e));
        let slope = -(0.5 * x).tanh();
        (bell, slope)
    }

    /// Full axis length at `t`.
    pub fn axis_length(&self, t: f64) -> f64 {
        4.0 * self.amplitude * self.bump(t).0 + self.baseline
    }

    pub fn axis_rate(&self, t: f64) -> f64 {
        let (bell, slope) = self.bump(t);
        4.0 * self.amplitude * self.sharpness * bell * slope
    }
}

pub fn impulse_b(t: f64, imp: &ImpulseInput) -> f64 {
    imp.axis_length(t)
}

pub fn impulse_b_rate(t: f64, imp: &ImpulseInput) -> f64 {
    imp.axis_rate(t)
}
