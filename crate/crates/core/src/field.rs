//! Coefficient and source fields over space and time.

use std::fmt;
use std::sync::Arc;

use crate::geometry::Vec3;

pub type SpaceFn<X> = Arc<dyn Fn(&X) -> f64 + Send + Sync>;
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn<X> = Arc<dyn Fn(&X, f64) -> f64 + Send + Sync>;

/// Scalar field on points of type `X` (a 3D point or an arclength).
#[derive(Clone)]
pub enum Field<X> {
    Zero,
    Constant(f64),
    Space(SpaceFn<X>),
    SpaceTime(SpaceTimeFn<X>),
    /// `sum_k a_k(x) b_k(t)`: load vectors can be built once per term.
    Separable(Vec<(SpaceFn<X>, TimeFn)>),
}

pub type ScalarField3 = Field<Vec3>;
pub type LineField = Field<f64>;

impl<X> Field<X> {
    pub fn space(f: impl Fn(&X) -> f64 + Send + Sync + 'static) -> Self {
        Field::Space(Arc::new(f))
    }

    pub fn space_time(f: impl Fn(&X, f64) -> f64 + Send + Sync + 'static) -> Self {
        Field::SpaceTime(Arc::new(f))
    }

    pub fn eval(&self, x: &X, t: f64) -> f64 {
        match self {
            Field::Zero => 0.0,
            Field::Constant(c) => *c,
            Field::Space(f) => f(x),
            Field::SpaceTime(f) => f(x, t),
            Field::Separable(terms) => terms.iter().map(|(a, b)| a(x) * b(t)).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Field::Zero => true,
            Field::Constant(c) => *c == 0.0,
            Field::Separable(terms) => terms.is_empty(),
            _ => false,
        }
    }

    pub fn is_time_independent(&self) -> bool {
        matches!(self, Field::Zero | Field::Constant(_) | Field::Space(_))
    }

    pub fn scaled(&self, alpha: f64) -> Self
    where
        X: 'static,
    {
        match self {
            Field::Zero => Field::Zero,
            Field::Constant(c) => Field::Constant(alpha * c),
            Field::Space(f) => {
                let f = f.clone();
                Field::Space(Arc::new(move |x| alpha * f(x)))
            }
            Field::SpaceTime(f) => {
                let f = f.clone();
                Field::SpaceTime(Arc::new(move |x, t| alpha * f(x, t)))
            }
            Field::Separable(terms) => Field::Separable(
                terms
                    .iter()
                    .map(|(a, b)| {
                        let a = a.clone();
                        let a: SpaceFn<X> = Arc::new(move |x| alpha * a(x));
                        (a, b.clone())
                    })
                    .collect(),
            ),
        }
    }
}

impl<X> fmt::Debug for Field<X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Zero => write!(f, "Zero"),
            Field::Constant(c) => write!(f, "Constant({c})"),
            Field::Space(_) => write!(f, "Space(..)"),
            Field::SpaceTime(_) => write!(f, "SpaceTime(..)"),
            Field::Separable(t) => write!(f, "Separable({} terms)", t.len()),
        }
    }
}

/// Time-independent velocity field in the tissue.
#[derive(Clone)]
pub enum VelocityField {
    Zero,
    Constant(Vec3),
    Space(Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>),
}

impl VelocityField {
    pub fn eval(&self, x: &Vec3) -> Vec3 {
        match self {
            VelocityField::Zero => Vec3::zeros(),
            VelocityField::Constant(u) => *u,
            VelocityField::Space(f) => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            VelocityField::Zero => true,
            VelocityField::Constant(u) => u.norm() == 0.0,
            VelocityField::Space(_) => false,
        }
    }
}

impl fmt::Debug for VelocityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityField::Zero => write!(f, "Zero"),
            VelocityField::Constant(u) => write!(f, "Constant({}, {}, {})", u.x, u.y, u.z),
            VelocityField::Space(_) => write!(f, "Space(..)"),
        }
    }
}

/// Time-dependent scalar, used for the inlet concentration.
#[derive(Clone)]
pub enum TimeSignal {
    Constant(f64),
    /// `value` for `t <= until`, zero afterwards.
    Pulse { value: f64, until: f64 },
    Function(TimeFn),
}

impl TimeSignal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeSignal::Constant(c) => *c,
            TimeSignal::Pulse { value, until } => {
                if t <= *until + 1e-12 {
                    *value
                } else {
                    0.0
                }
            }
            TimeSignal::Function(f) => f(t),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        match self {
            TimeSignal::Constant(c) => TimeSignal::Constant(alpha * c),
            TimeSignal::Pulse { value, until } => TimeSignal::Pulse {
                value: alpha * value,
                until: *until,
            },
            TimeSignal::Function(f) => {
                let f = f.clone();
                TimeSignal::Function(Arc::new(move |t| alpha * f(t)))
            }
        }
    }
}

impl fmt::Debug for TimeSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSignal::Constant(c) => write!(f, "Constant({c})"),
            TimeSignal::Pulse { value, until } => write!(f, "Pulse({value} until {until})"),
            TimeSignal::Function(_) => write!(f, "Function(..)"),
        }
    }
}
