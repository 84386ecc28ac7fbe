//! Vessel centerline, cross-section profile and wall permeability.
//!
//! The centerline is a straight segment parametrized by arclength. The
//! cross-section at `s` is a disk of radius `R(s)` in the plane spanned by the
//! frame vectors `e1`, `e2`, orthogonal to the tangent.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Number of samples used to validate profile bounds and monotonicity.
pub const PROFILE_SAMPLES: usize = 10_000;

/// Default number of points of the circle trapezoid rule.
pub const DEFAULT_CIRCLE_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum RadiusProfile {
    Constant(f64),
    /// `R(s) = r_min + (r_max - r_min)/2 * (1 + tanh(beta * (s/L - 1/2)))`
    Tanh { r_min: f64, r_max: f64, beta: f64 },
}

impl RadiusProfile {
    pub fn eval(&self, s: f64, length: f64) -> f64 {
        match *self {
            RadiusProfile::Constant(r) => r,
            RadiusProfile::Tanh { r_min, r_max, beta } => {
                r_min + 0.5 * (r_max - r_min) * (1.0 + (beta * (s / length - 0.5)).tanh())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RadiusProfile::Constant(r) if !(r > 0.0 && r.is_finite()) => {
                Err(Error::Config(format!("vessel radius must be positive, got {r}")))
            }
            RadiusProfile::Tanh { r_min, r_max, beta } => {
                if !(r_min > 0.0 && r_max.is_finite() && beta.is_finite()) {
                    return Err(Error::Config(format!(
                        "tanh radius needs r_min > 0 and finite parameters (r_min={r_min}, r_max={r_max}, beta={beta})"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Wall permeability `gamma(s)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PermeabilityProfile {
    Constant(f64),
    /// Half-open pieces `[start, end)`; the last piece also owns its end point.
    /// Pieces are given in absolute arclength and must tile `[0, L]`.
    PiecewiseConstant(Vec<PermeabilityPiece>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermeabilityPiece {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl PermeabilityProfile {
    /// Pieces from breakpoints given as fractions of the vessel length.
    pub fn from_fractions(length: f64, breaks: &[f64], values: &[f64]) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::Config(format!(
                "{} permeability values need {} breakpoints, got {}",
                values.len(),
                values.len().saturating_sub(1),
                breaks.len()
            )));
        }
        let mut edges = Vec::with_capacity(breaks.len() + 2);
        edges.push(0.0);
        edges.extend(breaks.iter().map(|b| b * length));
        edges.push(length);
        let pieces = edges
            .windows(2)
            .zip(values)
            .map(|(w, &value)| PermeabilityPiece {
                start: w[0],
                end: w[1],
                value,
            })
            .collect();
        Ok(PermeabilityProfile::PiecewiseConstant(pieces))
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            PermeabilityProfile::Constant(g) => *g,
            PermeabilityProfile::PiecewiseConstant(pieces) => pieces
                .iter()
                .find(|p| s >= p.start && s < p.end)
                .or_else(|| pieces.last())
                .map_or(0.0, |p| p.value),
        }
    }

    /// Upper bound `gamma_1`.
    pub fn max_value(&self) -> f64 {
        match self {
            PermeabilityProfile::Constant(g) => *g,
            PermeabilityProfile::PiecewiseConstant(pieces) => {
                pieces.iter().map(|p| p.value).fold(0.0, f64::max)
            }
        }
    }

    fn validate(&self, length: f64) -> Result<()> {
        let check = |g: f64| {
            if g >= 0.0 && g.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "permeability must be non-negative and bounded, got {g}"
                )))
            }
        };
        match self {
            PermeabilityProfile::Constant(g) => check(*g),
            PermeabilityProfile::PiecewiseConstant(pieces) => {
                if pieces.is_empty() {
                    return Err(Error::Config("empty permeability profile".into()));
                }
                let tol = 1e-12 * length.max(1.0);
                let mut expected = 0.0;
                for p in pieces {
                    check(p.value)?;
                    if (p.start - expected).abs() > tol || p.end <= p.start {
                        return Err(Error::Config(format!(
                            "permeability pieces must tile [0, L] in order; piece [{}, {}) does not follow {expected}",
                            p.start, p.end
                        )));
                    }
                    expected = p.end;
                }
                if (expected - length).abs() > tol {
                    return Err(Error::Config(format!(
                        "permeability pieces end at {expected}, vessel length is {length}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Cross-section bounds `d0 <= |D(s)|, |dD(s)| <= d1` observed on the sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionBounds {
    pub d0: f64,
    pub d1: f64,
}

#[derive(Debug, Clone)]
pub struct VesselGeometry {
    pub p0: Vec3,
    pub p1: Vec3,
    pub length: f64,
    pub tangent: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub radius: RadiusProfile,
    pub permeability: PermeabilityProfile,
    bounds: SectionBounds,
}

impl VesselGeometry {
    pub fn new(
        p0: Vec3,
        p1: Vec3,
        radius: RadiusProfile,
        permeability: PermeabilityProfile,
    ) -> Result<Self> {
        let axis = p1 - p0;
        let length = axis.norm();
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(
                "vessel endpoints must be distinct finite points".into(),
            ));
        }
        radius.validate()?;
        permeability.validate(length)?;
        let tangent = axis / length;
        let (e1, e2) = orthonormal_frame(&tangent);

        let mut geometry = VesselGeometry {
            p0,
            p1,
            length,
            tangent,
            e1,
            e2,
            radius,
            permeability,
            bounds: SectionBounds { d0: 0.0, d1: 0.0 },
        };
        geometry.bounds = geometry.check_section_profile()?;
        Ok(geometry)
    }

    /// Straight vessel with constant radius and permeability.
    pub fn straight(p0: Vec3, p1: Vec3, radius: f64, gamma: f64) -> Result<Self> {
        Self::new(
            p0,
            p1,
            RadiusProfile::Constant(radius),
            PermeabilityProfile::Constant(gamma),
        )
    }

    pub fn section_bounds(&self) -> SectionBounds {
        self.bounds
    }

    fn check_s(&self, s: f64) -> Result<()> {
        let tol = 1e-12 * self.length.max(1.0);
        if s.is_finite() && s >= -tol && s <= self.length + tol {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "arclength {s} outside [0, {}]",
                self.length
            )))
        }
    }

    pub fn point_at(&self, s: f64) -> Result<Vec3> {
        self.check_s(s)?;
        Ok(self.p0 + self.tangent * s)
    }

    pub fn radius_at(&self, s: f64) -> f64 {
        self.radius.eval(s, self.length)
    }

    pub fn permeability_at(&self, s: f64) -> f64 {
        self.permeability.eval(s)
    }

    pub fn section_area(&self, s: f64) -> Result<f64> {
        self.check_s(s)?;
        Ok(self.area_unchecked(s))
    }

    pub fn section_circumference(&self, s: f64) -> Result<f64> {
        self.check_s(s)?;
        Ok(self.circumference_unchecked(s))
    }

    pub(crate) fn area_unchecked(&self, s: f64) -> f64 {
        let r = self.radius_at(s);
        PI * r * r
    }

    pub(crate) fn circumference_unchecked(&self, s: f64) -> f64 {
        2.0 * PI * self.radius_at(s)
    }

    /// Trapezoid rule on the boundary circle of the cross-section at `s`:
    /// `n` equally spaced points, each weighted by `|dD(s)| / n`.
    pub fn circle_points(&self, s: f64, n: usize) -> Result<Vec<(Vec3, f64)>> {
        if n < 4 {
            return Err(Error::Config(format!(
                "circle quadrature needs at least 4 points, got {n}"
            )));
        }
        let center = self.point_at(s)?;
        let r = self.radius_at(s);
        let weight = 2.0 * PI * r / n as f64;
        Ok((0..n)
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / n as f64;
                let p = center + (self.e1 * theta.cos() + self.e2 * theta.sin()) * r;
                (p, weight)
            })
            .collect())
    }

    /// Checks that the whole tube (every cross-section circle) lies in the closed box.
    pub fn check_inside_box(&self, lo: &Vec3, hi: &Vec3) -> Result<()> {
        // Extent of a circle of radius R along axis a is R * sqrt(e1_a^2 + e2_a^2).
        let spread = Vec3::from_fn(|a, _| (self.e1[a].powi(2) + self.e2[a].powi(2)).sqrt());
        let tol = 1e-12 * (hi - lo).norm();
        for k in 0..=PROFILE_SAMPLES {
            let s = self.length * k as f64 / PROFILE_SAMPLES as f64;
            let c = self.p0 + self.tangent * s;
            let r = self.radius_at(s);
            for a in 0..3 {
                if c[a] - r * spread[a] < lo[a] - tol || c[a] + r * spread[a] > hi[a] + tol {
                    return Err(Error::Geometry(format!(
                        "vessel tube leaves the domain near s = {s:.6} (axis {a})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_section_profile(&self) -> Result<SectionBounds> {
        let mut d0 = f64::INFINITY;
        let mut d1 = 0.0_f64;
        let mut previous = f64::NEG_INFINITY;
        for k in 0..=PROFILE_SAMPLES {
            let s = self.length * k as f64 / PROFILE_SAMPLES as f64;
            let area = self.area_unchecked(s);
            let circ = self.circumference_unchecked(s);
            if area < previous - 1e-12 {
                return Err(Error::Config(format!(
                    "cross-section area must be nondecreasing along the vessel; it drops at s = {s:.6}"
                )));
            }
            previous = area;
            d0 = d0.min(area).min(circ);
            d1 = d1.max(area).max(circ);
        }
        if !(d0 > 0.0) {
            return Err(Error::Config("cross-section collapses".into()));
        }
        Ok(SectionBounds { d0, d1 })
    }
}

/// Unit vectors `(e1, e2)` completing `t` to a right-handed orthonormal frame.
fn orthonormal_frame(t: &Vec3) -> (Vec3, Vec3) {
    let axis = (0..3)
        .min_by(|&a, &b| t[a].abs().total_cmp(&t[b].abs()))
        .unwrap_or(0);
    let mut helper = Vec3::zeros();
    helper[axis] = 1.0;
    let e1 = (helper - t * t.dot(&helper)).normalize();
    let e2 = t.cross(&e1);
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagonal() -> VesselGeometry {
        VesselGeometry::straight(
            Vec3::new(-0.4, -0.4, -0.4),
            Vec3::new(0.4, 0.4, 0.4),
            0.05,
            0.1,
        )
        .unwrap()
    }

    fn vertical() -> VesselGeometry {
        VesselGeometry::straight(Vec3::new(0.0, 0.0, -0.5), Vec3::new(0.0, 0.0, 0.5), 0.05, 1.0)
            .unwrap()
    }

    fn tanh_profile() -> RadiusProfile {
        RadiusProfile::Tanh {
            r_min: 0.05,
            r_max: 0.08,
            beta: 8.0,
        }
    }

    #[test]
    fn point_at_endpoints_and_midpoint() {
        let g = diagonal();
        assert!((g.point_at(0.0).unwrap() - Vec3::new(-0.4, -0.4, -0.4)).norm() < 1e-15);
        assert!(g.point_at(g.length / 2.0).unwrap().norm() < 1e-15);
        let v = vertical();
        assert!((v.point_at(0.75).unwrap() - Vec3::new(0.0, 0.0, 0.25)).norm() < 1e-15);
        assert!(matches!(v.point_at(1.5), Err(Error::Domain(_))));
        assert!(matches!(v.point_at(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn frame_is_orthonormal() {
        for g in [diagonal(), vertical()] {
            for (a, b) in [(g.e1, g.e2), (g.e1, g.tangent), (g.e2, g.tangent)] {
                assert!(a.dot(&b).abs() < 1e-12);
            }
            for v in [g.e1, g.e2, g.tangent] {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circle_points_on_vertical_line() {
        let g = vertical();
        let pts = g.circle_points(0.3, 4).unwrap();
        let z = -0.2;
        let mut got: Vec<(f64, f64)> = pts.iter().map(|(p, _)| (p.x, p.y)).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [(-0.05, 0.0), (0.0, -0.05), (0.0, 0.05), (0.05, 0.0)];
        for ((x, y), (ex, ey)) in got.iter().zip(expected) {
            assert!((x - ex).abs() < 1e-15 && (y - ey).abs() < 1e-15);
        }
        for (p, w) in &pts {
            assert!((p.z - z).abs() < 1e-15);
            assert!((w - 2.0 * PI * 0.05 / 4.0).abs() < 1e-16);
        }
        let mean_x: f64 = g.circle_points(0.5, 16).unwrap().iter().map(|(p, _)| p.x).sum::<f64>() / 16.0;
        assert!(mean_x.abs() < 1e-14);
        assert!(matches!(g.circle_points(0.5, 3), Err(Error::Config(_))));
    }

    #[test]
    fn circle_weights_sum_to_circumference() {
        let g = VesselGeometry::new(
            Vec3::new(-0.4, -0.4, -0.4),
            Vec3::new(0.4, 0.4, 0.4),
            tanh_profile(),
            PermeabilityProfile::Constant(0.1),
        )
        .unwrap();
        for n in [4, 7, 16, 33] {
            for k in 0..=10 {
                let s = g.length * k as f64 / 10.0;
                let pts = g.circle_points(s, n).unwrap();
                assert!(pts.iter().all(|(_, w)| *w > 0.0));
                let sum: f64 = pts.iter().map(|(_, w)| w).sum();
                assert!((sum - g.section_circumference(s).unwrap()).abs() < 1e-13);
                // Affine functions are averaged exactly.
                let f = |p: &Vec3| 0.3 + 1.7 * p.x - 2.1 * p.y + 0.4 * p.z;
                let avg: f64 = pts.iter().map(|(p, w)| f(p) * w).sum::<f64>() / sum;
                assert!((avg - f(&g.point_at(s).unwrap())).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn section_area_values() {
        let g = vertical();
        assert!((g.section_area(0.2).unwrap() - PI * 0.0025).abs() < 1e-15);
        assert!((g.section_circumference(0.2).unwrap() - 0.3141592653589793).abs() < 1e-15);

        let r = tanh_profile();
        let l = 0.8 * 3f64.sqrt();
        let r0 = 0.05 + 0.015 * (1.0 + (-4.0f64).tanh());
        assert!((r.eval(0.0, l) - r0).abs() < 1e-15);
        assert!((r0 - 0.0500101).abs() < 1e-7);
        assert!((r.eval(l / 2.0, l) - 0.065).abs() < 1e-15);
    }

    #[test]
    fn profile_bounds_and_monotone_area() {
        let g = VesselGeometry::new(
            Vec3::new(-0.4, -0.4, -0.4),
            Vec3::new(0.4, 0.4, 0.4),
            tanh_profile(),
            PermeabilityProfile::Constant(0.1),
        )
        .unwrap();
        let b = g.section_bounds();
        let mut prev = 0.0;
        for k in 0..=PROFILE_SAMPLES {
            let s = g.length * k as f64 / PROFILE_SAMPLES as f64;
            let a = g.section_area(s).unwrap();
            let c = g.section_circumference(s).unwrap();
            assert!(b.d0 <= a && a <= b.d1 && b.d0 <= c && c <= b.d1);
            assert!(a >= prev - 1e-12);
            prev = a;
        }
    }

    #[test]
    fn decreasing_radius_is_rejected() {
        let r = RadiusProfile::Tanh {
            r_min: 0.08,
            r_max: 0.05,
            beta: 8.0,
        };
        let err = VesselGeometry::new(
            Vec3::zeros(),
            Vec3::new(0.0, 0.0, 0.5),
            r,
            PermeabilityProfile::Constant(1.0),
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn piecewise_permeability() {
        let l = 0.8 * 3f64.sqrt();
        let p = PermeabilityProfile::from_fractions(l, &[1.0 / 3.0, 2.0 / 3.0], &[0.0, 0.05, 0.1])
            .unwrap();
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(l / 3.0 - 1e-9), 0.0);
        assert_eq!(p.eval(l / 3.0 + 1e-9), 0.05);
        assert_eq!(p.eval(l), 0.1);
        assert_eq!(p.max_value(), 0.1);
        let bad = PermeabilityProfile::from_fractions(l, &[0.5], &[0.1, -0.2]).unwrap();
        assert!(VesselGeometry::new(Vec3::zeros(), Vec3::new(l, 0.0, 0.0), RadiusProfile::Constant(0.05), bad).is_err());
    }

    #[test]
    fn tube_containment() {
        let lo = Vec3::new(-0.5, -0.5, -0.5);
        let hi = Vec3::new(0.5, 0.5, 0.5);
        diagonal().check_inside_box(&lo, &hi).unwrap();
        // Ends on the box faces are allowed; the lateral surface must stay inside.
        vertical().check_inside_box(&lo, &hi).unwrap();
        let off = VesselGeometry::straight(Vec3::new(0.48, 0.0, -0.4), Vec3::new(0.48, 0.0, 0.4), 0.05, 1.0)
            .unwrap();
        assert!(matches!(off.check_inside_box(&lo, &hi), Err(Error::Geometry(_))));
    }
}
