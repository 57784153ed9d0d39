//! Rolling-ring tumbling dynamics in heading/lean/spin Euler angles.
//!
//! Orientation is `Rz(heading) * Rx(lean) * Rz(spin)`; body z is the ring
//! normal and `lean = pi/2` is upright. The mass-matrix system is ordered
//! `[heading'', lean'', spin'', heading', lean', spin', x', y']`.

use nalgebra::{Matrix3, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{InertiaTriple, RadiusPolicy, RingParams};

pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Vector8 = SVector<f64, 8>;

pub const DEFAULT_SINGULAR_LEAN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TumbleState {
    pub heading: f64,
    pub lean: f64,
    pub spin: f64,
    pub heading_rate: f64,
    pub lean_rate: f64,
    pub spin_rate: f64,
    pub contact_x: f64,
    pub contact_y: f64,
}

impl TumbleState {
    /// Upright ring rolling with spin rate `omega`.
    pub fn upright(omega: f64) -> Self {
        Self {
            lean: std::f64::consts::FRAC_PI_2,
            spin_rate: omega,
            ..Self::default()
        }
    }

    pub fn to_array(self) -> [f64; 8] {
        [
            self.heading,
            self.lean,
            self.spin,
            self.heading_rate,
            self.lean_rate,
            self.spin_rate,
            self.contact_x,
            self.contact_y,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            heading: v[0],
            lean: v[1],
            spin: v[2],
            heading_rate: v[3],
            lean_rate: v[4],
            spin_rate: v[5],
            contact_x: v[6],
            contact_y: v[7],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyRates {
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeModel {
    /// Gravity enters only through the lean row as `-m g r cos(lean)`.
    Verbatim,
    /// Gravity along the incline normal plus the in-plane pull on lean and spin.
    #[default]
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationForm {
    /// Axial inertia on the spin row and in the heading gyroscopic term.
    #[default]
    Corrected,
    /// Inertia slots exactly as typeset in the source equations.
    Printed,
}

/// Inertias as consumed by the three dynamic rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollingInertia {
    pub heading: f64,
    pub lean: f64,
    pub axial: f64,
    /// Coefficient of `lean' * spin'` in the heading row.
    pub gyro: f64,
}

impl RollingInertia {
    pub fn new(y: &InertiaTriple, form: EquationForm) -> Self {
        match form {
            EquationForm::Corrected => Self {
                heading: y.y1,
                lean: y.y3,
                axial: y.y2,
                gyro: y.y2,
            },
            EquationForm::Printed => Self {
                heading: y.y1,
                lean: y.y2,
                axial: y.y3,
                gyro: y.y1,
            },
        }
    }
}

pub fn rotation_world_from_body(s: &TumbleState) -> Matrix3<f64> {
    rot_z(s.heading) * rot_x(s.lean) * rot_z(s.spin)
}

fn rot_z(q: f64) -> Matrix3<f64> {
    let (s, c) = q.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_x(q: f64) -> Matrix3<f64> {
    let (s, c) = q.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn body_angular_velocity(s: &TumbleState) -> BodyRates {
    let (st, ct) = s.lean.sin_cos();
    let (sp, cp) = s.spin.sin_cos();
    BodyRates {
        wx: s.heading_rate * st * sp + s.lean_rate * cp,
        wy: s.heading_rate * st * cp - s.lean_rate * sp,
        wz: s.heading_rate * ct + s.spin_rate,
    }
}

pub fn contact_radius(a: f64, b: f64, spin: f64, policy: RadiusPolicy, perimeter: f64) -> f64 {
    match policy {
        RadiusPolicy::SupportFunction => {
            let (s, c) = spin.sin_cos();
            (a * a * s * s + b * b * c * c).sqrt()
        }
        RadiusPolicy::MeanRadius => perimeter / std::f64::consts::TAU,
    }
}

pub fn mass_matrix(s: &TumbleState, j: &RollingInertia, m: f64, r: f64) -> Matrix8 {
    let (st, ct) = s.lean.sin_cos();
    let mr2 = m * r * r;
    let mut mm = Matrix8::identity();
    mm[(0, 0)] = j.heading * st;
    mm[(1, 1)] = j.lean + mr2;
    mm[(2, 0)] = (j.axial + mr2) * ct;
    mm[(2, 2)] = j.axial + mr2;
    mm
}

pub fn forcing_vector(
    s: &TumbleState,
    j: &RollingInertia,
    params: &RingParams,
    slope: SlopeModel,
    r: f64,
) -> Vector8 {
    let (st, ct) = s.lean.sin_cos();
    let (sh, ch) = s.heading.sin_cos();
    let m = params.mass;
    let mr2 = m * r * r;
    let (hd, ld, sd) = (s.heading_rate, s.lean_rate, s.spin_rate);
    let mgr = m * params.gravity * r;
    let (lean_gravity, spin_gravity) = match slope {
        SlopeModel::Verbatim => (-mgr * ct, 0.0),
        SlopeModel::Extended => {
            let (sa, ca) = params.incline.sin_cos();
            (-mgr * (ca * ct + sa * sh * st), mgr * sa * ch)
        }
    };
    let axial_rate = hd * ct + sd;
    Vector8::from_column_slice(&[
        (j.axial - 2.0 * j.heading) * hd * ld * ct + j.gyro * ld * sd,
        (j.heading - j.axial - mr2) * hd * hd * st * ct - (j.axial + mr2) * hd * sd * st
            + lean_gravity,
        (j.axial + 2.0 * mr2) * hd * ld * st + spin_gravity,
        hd,
        ld,
        sd,
        -r * axial_rate * ch + r * ld * sh * st,
        -r * axial_rate * sh - r * ld * ch * st,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TumbleModel {
    pub params: RingParams,
    pub slope_model: SlopeModel,
    pub equation_form: EquationForm,
    /// Smallest admissible `|sin(lean)|`.
    pub singular_lean: f64,
}

impl Default for TumbleModel {
    fn default() -> Self {
        Self {
            params: RingParams::default(),
            slope_model: SlopeModel::Extended,
            equation_form: EquationForm::Corrected,
            singular_lean: DEFAULT_SINGULAR_LEAN,
        }
    }
}

/// State derivative plus `max |M x' - N|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TumbleRates {
    pub rates: TumbleState,
    pub residual: f64,
}

impl TumbleModel {
    pub fn new(params: RingParams) -> Self {
        Self {
            params,
            ..Self::default()
        }
    }

    pub fn rolling_inertia(&self, y: &InertiaTriple) -> RollingInertia {
        RollingInertia::new(y, self.equation_form)
    }

    pub fn rhs(&self, s: &TumbleState, y: &InertiaTriple, r: f64) -> Result<TumbleRates> {
        if s.lean.sin().abs() < self.singular_lean {
            return Err(Error::MassMatrixSingular { lean: s.lean });
        }
        if !s.is_finite() {
            return Err(Error::NonFinite("tumble state"));
        }
        let j = self.rolling_inertia(y);
        let mm = mass_matrix(s, &j, self.params.mass, r);
        let n = forcing_vector(s, &j, &self.params, self.slope_model, r);
        let d = mm
            .lu()
            .solve(&n)
            .ok_or(Error::MassMatrixSingular { lean: s.lean })?;
        let residual = (mm * d - n).amax();
        Ok(TumbleRates {
            rates: TumbleState {
                heading: d[3],
                lean: d[4],
                spin: d[5],
                heading_rate: d[0],
                lean_rate: d[1],
                spin_rate: d[2],
                contact_x: d[6],
                contact_y: d[7],
            },
            residual,
        })
    }

    pub fn energy(&self, s: &TumbleState, y: &InertiaTriple, r: f64) -> f64 {
        let j = self.rolling_inertia(y);
        let p = &self.params;
        let (st, ct) = s.lean.sin_cos();
        let axial_rate = s.heading_rate * ct + s.spin_rate;
        let rot = j.lean * s.lean_rate.powi(2)
            + j.heading * (s.heading_rate * st).powi(2)
            + j.axial * axial_rate.powi(2);
        let trans = p.mass * r * r * (axial_rate.powi(2) + s.lean_rate.powi(2));
        let height = match self.slope_model {
            SlopeModel::Verbatim => r * st,
            SlopeModel::Extended => {
                let (sa, ca) = p.incline.sin_cos();
                ca * r * st + sa * s.contact_x
            }
        };
        0.5 * (rot + trans) + p.mass * p.gravity * height
    }
}

pub fn tumble_rhs(
    s: &TumbleState,
    y: &InertiaTriple,
    params: &RingParams,
    r: f64,
) -> Result<TumbleState> {
    TumbleModel::new(*params).rhs(s, y, r).map(|d| d.rates)
}

pub fn mechanical_energy(s: &TumbleState, y: &InertiaTriple, params: &RingParams, r: f64) -> f64 {
    TumbleModel::new(*params).energy(s, y, r)
}
