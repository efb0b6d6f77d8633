//! Linear-fractional maps `z ↦ (az+b)/(cz+d)` acting on the closed unit
//! disk: composition, fixed points, classification and orbits.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub const DEFAULT_EPS_CLASS: f64 = 1e-9;

/// A point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Extended {
    Finite(Complex64),
    Infinity,
}

impl Extended {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Extended::Finite(z) => Some(z),
            Extended::Infinity => None,
        }
    }

    pub fn modulus(self) -> f64 {
        match self {
            Extended::Finite(z) => z.norm(),
            Extended::Infinity => f64::INFINITY,
        }
    }
}

impl From<Complex64> for Extended {
    fn from(z: Complex64) -> Self {
        Extended::Finite(z)
    }
}

/// Coefficients normalized to `ad − bc = 1`; `(a,b,c,d)` and `(−a,−b,−c,−d)`
/// describe the same map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFractionalMap {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FixedPoints {
    All,
    /// Distinct fixed points with multiplicities.
    Points(Vec<(Extended, u8)>),
}

impl FixedPoints {
    pub fn finite_points(&self) -> Vec<Complex64> {
        match self {
            FixedPoints::All => Vec::new(),
            FixedPoints::Points(p) => p.iter().filter_map(|(z, _)| z.finite()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MapTag {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
    StrictContraction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapClass {
    pub tag: MapTag,
    /// Fixed points in the closed disk (empty for `Identity`, where every
    /// point is fixed).
    pub fixed_points: Vec<Complex64>,
    /// Fixed points outside the closed disk, including infinity.
    pub exterior: Vec<Extended>,
}

impl LinearFractionalMap {
    pub fn from_coefficients(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = [a, b, c, d].iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(det.norm() > 1e-14 * scale * scale) || !det.norm().is_finite() {
            return Err(Error::DegenerateMap { det: det.norm() });
        }
        let s = det.sqrt();
        Ok(LinearFractionalMap {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    pub fn identity() -> Self {
        LinearFractionalMap { a: ONE, b: ZERO, c: ZERO, d: ONE }
    }

    pub fn rotation(theta: f64) -> Self {
        Self::from_coefficients(Complex64::from_polar(1.0, theta), ZERO, ZERO, ONE).expect("rotation is invertible")
    }

    /// `z ↦ e^{iθ}(z − p)/(1 − p̄z)` for `|p| < 1`.
    pub fn disk_automorphism(theta: f64, p: Complex64) -> Result<Self> {
        if p.norm() >= 1.0 {
            return Err(Error::InvalidArgument(format!("automorphism center must lie in the open disk, got |p|={}", p.norm())));
        }
        let e = Complex64::from_polar(1.0, theta);
        Self::from_coefficients(e, -e * p, -p.conj(), ONE)
    }

    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn apply(&self, z: Extended) -> Extended {
        match z {
            Extended::Infinity => {
                if self.c == ZERO {
                    Extended::Infinity
                } else {
                    Extended::Finite(self.a / self.c)
                }
            }
            Extended::Finite(z) => {
                let den = self.c * z + self.d;
                if den == ZERO {
                    Extended::Infinity
                } else {
                    Extended::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Finite evaluation; the pole maps to a non-finite value.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn pole(&self) -> Extended {
        if self.c == ZERO {
            Extended::Infinity
        } else {
            Extended::Finite(-self.d / self.c)
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        LinearFractionalMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> Self {
        LinearFractionalMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Coefficient distance up to the overall sign ambiguity.
    pub fn projective_distance(&self, other: &Self) -> f64 {
        let diff = |s: f64| {
            [
                self.a - other.a * s,
                self.b - other.b * s,
                self.c - other.c * s,
                self.d - other.d * s,
            ]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
        };
        diff(1.0).min(diff(-1.0))
    }

    pub fn distance_to_identity(&self) -> f64 {
        self.projective_distance(&Self::identity())
    }

    /// `(a + d)² − 4`, which vanishes exactly for parabolic maps and the
    /// identity.
    pub fn discriminant(&self) -> Complex64 {
        let t = self.trace();
        t * t - 4.0
    }

    pub fn fixed_points(&self) -> FixedPoints {
        self.fixed_points_tol(1e-14)
    }

    /// Roots of `cz² + (d−a)z − b = 0`; when `|(a+d)² − 4| < eps` a single
    /// double root is reported.
    pub fn fixed_points_tol(&self, eps: f64) -> FixedPoints {
        if self.distance_to_identity() <= eps {
            return FixedPoints::All;
        }
        let bq = self.d - self.a;
        let cq = -self.b;
        let scale = [self.a, self.b, self.c, self.d].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let disc = self.discriminant();
        if self.c.norm() <= 1e-15 * scale {
            // affine map: one finite point (or none) plus infinity
            if disc.norm() < eps {
                return FixedPoints::Points(vec![(Extended::Infinity, 2)]);
            }
            return FixedPoints::Points(vec![(Extended::Finite(-cq / bq), 1), (Extended::Infinity, 1)]);
        }
        if disc.norm() < eps {
            return FixedPoints::Points(vec![(Extended::Finite(-bq / (2.0 * self.c)), 2)]);
        }
        let sq = (bq * bq - 4.0 * self.c * cq).sqrt();
        let sq = if (bq.conj() * sq).re >= 0.0 { sq } else { -sq };
        let q = -0.5 * (bq + sq);
        let z1 = q / self.c;
        let z2 = if q == ZERO { -bq / self.c } else { cq / q };
        FixedPoints::Points(vec![(Extended::Finite(z1), 1), (Extended::Finite(z2), 1)])
    }

    /// Image of the unit circle as `(center, radius)`, or `None` when it is
    /// a line (the pole lies on the circle).
    pub fn circle_image(&self) -> Option<(Complex64, f64)> {
        let den = self.d.norm_sqr() - self.c.norm_sqr();
        if den.abs() <= 1e-14 * (self.d.norm_sqr() + self.c.norm_sqr()) {
            return None;
        }
        let center = (self.b * self.d.conj() - self.a * self.c.conj()) / den;
        let radius = self.determinant().norm() / den.abs();
        Some((center, radius))
    }

    /// Sampled check that the closed disk is mapped into itself.
    pub fn is_disk_self_map(&self, tol: f64) -> bool {
        let at_zero = self.apply(Extended::Finite(ZERO)).modulus();
        if !(at_zero <= 1.0 + tol) {
            return false;
        }
        (0..64).all(|k| {
            let z = Complex64::from_polar(1.0, TAU * k as f64 / 64.0);
            self.apply(Extended::Finite(z)).modulus() <= 1.0 + tol
        })
    }

    /// True when the unit circle is mapped onto itself within `tol`.
    pub fn preserves_circle(&self, tol: f64) -> bool {
        match self.circle_image() {
            Some((center, radius)) => center.norm() <= tol && (radius - 1.0).abs() <= tol,
            None => false,
        }
    }

    pub fn classify(&self, eps_class: f64) -> Result<MapClass> {
        let disk_tol = eps_class.max(1e-8);
        if !self.is_disk_self_map(disk_tol) {
            let max_modulus = (0..64)
                .map(|k| self.apply(Complex64::from_polar(1.0, TAU * k as f64 / 64.0).into()).modulus())
                .fold(self.apply(ZERO.into()).modulus(), f64::max);
            return Err(Error::NotDiskMap { max_modulus });
        }
        if self.distance_to_identity() <= eps_class {
            return Ok(MapClass {
                tag: MapTag::Identity,
                fixed_points: Vec::new(),
                exterior: Vec::new(),
            });
        }
        let boundary_tol = eps_class.sqrt();
        let fps = match self.fixed_points_tol(eps_class) {
            FixedPoints::All => unreachable!("identity handled above"),
            FixedPoints::Points(p) => p,
        };
        let mut inside = Vec::new();
        let mut exterior = Vec::new();
        let mut on_boundary = 0;
        let mut double = false;
        for (z, mult) in &fps {
            double |= *mult == 2;
            let m = z.modulus();
            if m <= 1.0 + boundary_tol {
                let w = z.finite().expect("finite modulus");
                if (m - 1.0).abs() <= boundary_tol {
                    on_boundary += 1;
                }
                inside.push(w);
            } else {
                exterior.push(*z);
            }
        }

        let strictly_inside = self
            .circle_image()
            .map(|(c, r)| c.norm() + r < 1.0 - eps_class)
            .unwrap_or(false);
        let disc = self.discriminant();
        let tag = if strictly_inside {
            MapTag::StrictContraction
        } else if self.preserves_circle(boundary_tol) {
            // automorphisms have real (a+d)² after normalization
            if disc.norm() < eps_class {
                MapTag::Parabolic
            } else if disc.re < 0.0 {
                MapTag::Elliptic
            } else {
                MapTag::Hyperbolic
            }
        } else if double && on_boundary == 1 {
            MapTag::Parabolic
        } else if on_boundary >= 2 {
            MapTag::Hyperbolic
        } else if inside.len() == 1 && on_boundary == 0 {
            MapTag::Elliptic
        } else if on_boundary == 1 {
            MapTag::Parabolic
        } else {
            MapTag::Elliptic
        };
        Ok(MapClass {
            tag,
            fixed_points: inside,
            exterior,
        })
    }

    pub fn iterate(&self, z0: Complex64, n: usize) -> Vec<Complex64> {
        let mut orbit = Vec::with_capacity(n + 1);
        let mut z = z0;
        orbit.push(z);
        for _ in 0..n {
            z = self.eval(z);
            orbit.push(z);
        }
        orbit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hyperbolic() -> LinearFractionalMap {
        LinearFractionalMap::from_coefficients(ONE, c(0.5, 0.0), c(0.5, 0.0), ONE).unwrap()
    }

    fn parabolic() -> LinearFractionalMap {
        LinearFractionalMap::from_coefficients(c(1.0, 1.0), c(0.0, -1.0), c(0.0, 1.0), c(1.0, -1.0)).unwrap()
    }

    #[test]
    fn construction() {
        let id = LinearFractionalMap::from_coefficients(ONE, ZERO, ZERO, ONE).unwrap();
        assert_eq!(id.distance_to_identity(), 0.0);
        let r = LinearFractionalMap::from_coefficients(Complex64::from_polar(1.0, 0.7), ZERO, ZERO, ONE).unwrap();
        assert!(r.projective_distance(&LinearFractionalMap::rotation(0.7)) < 1e-15);
        assert!((r.determinant() - ONE).norm() < 1e-12);
        assert!(matches!(
            LinearFractionalMap::from_coefficients(ONE, ONE, ONE, ONE),
            Err(Error::DegenerateMap { .. })
        ));
    }

    #[test]
    fn apply_examples() {
        let r = LinearFractionalMap::rotation(PI);
        assert!((r.eval(c(0.5, 0.0)) - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((hyperbolic().eval(ONE) - ONE).norm() < 1e-15);
        let m = hyperbolic();
        assert_eq!(m.apply(m.pole()), Extended::Infinity);
    }

    #[test]
    fn compose_examples() {
        let r = LinearFractionalMap::rotation(0.3).compose(&LinearFractionalMap::rotation(0.9));
        assert!(r.projective_distance(&LinearFractionalMap::rotation(1.2)) < 1e-15);
        let m = parabolic();
        assert!(m.compose(&LinearFractionalMap::identity()).projective_distance(&m) < 1e-15);
        assert!(m.compose(&m.inverse()).distance_to_identity() < 1e-12);
    }

    #[test]
    fn fixed_point_examples() {
        match LinearFractionalMap::rotation(1.0).fixed_points() {
            FixedPoints::Points(p) => {
                assert_eq!(p.len(), 2);
                assert!(p[0].0.modulus() < 1e-15);
                assert_eq!(p[1].0, Extended::Infinity);
            }
            FixedPoints::All => panic!(),
        }
        let mut hp = hyperbolic().fixed_points().finite_points();
        hp.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((hp[0] + ONE).norm() < 1e-14 && (hp[1] - ONE).norm() < 1e-14);
        assert_eq!(
            parabolic().fixed_points_tol(1e-12),
            FixedPoints::Points(vec![(Extended::Finite(ONE), 2)])
        );
        assert_eq!(LinearFractionalMap::identity().fixed_points(), FixedPoints::All);
    }

    #[test]
    fn classify_examples() {
        let e = LinearFractionalMap::rotation(PI / 3.0).classify(DEFAULT_EPS_CLASS).unwrap();
        assert_eq!(e.tag, MapTag::Elliptic);
        assert!(e.fixed_points[0].norm() < 1e-15);
        let h = hyperbolic().classify(DEFAULT_EPS_CLASS).unwrap();
        assert_eq!(h.tag, MapTag::Hyperbolic);
        assert_eq!(h.fixed_points.len(), 2);
        let p = parabolic().classify(DEFAULT_EPS_CLASS).unwrap();
        assert_eq!(p.tag, MapTag::Parabolic);
        assert!((p.fixed_points[0] - ONE).norm() < 1e-12);
        let s = LinearFractionalMap::from_coefficients(c(0.5, 0.0), ZERO, ZERO, ONE).unwrap();
        assert_eq!(s.classify(DEFAULT_EPS_CLASS).unwrap().tag, MapTag::StrictContraction);
        let out = LinearFractionalMap::from_coefficients(c(2.0, 0.0), ZERO, ZERO, ONE).unwrap();
        assert!(matches!(out.classify(DEFAULT_EPS_CLASS), Err(Error::NotDiskMap { .. })));
        assert_eq!(LinearFractionalMap::identity().classify(DEFAULT_EPS_CLASS).unwrap().tag, MapTag::Identity);
    }

    #[test]
    fn disk_self_map_examples() {
        assert!(LinearFractionalMap::rotation(2.0).is_disk_self_map(1e-12));
        let dbl = LinearFractionalMap::from_coefficients(c(2.0, 0.0), ZERO, ZERO, ONE).unwrap();
        assert!(!dbl.is_disk_self_map(1e-12));
        let aut = LinearFractionalMap::from_coefficients(ONE, c(-0.3, 0.0), c(-0.3, 0.0), ONE).unwrap();
        assert!(aut.is_disk_self_map(1e-12));
        assert!(aut.preserves_circle(1e-12));
    }

    #[test]
    fn iterate_examples() {
        let orbit = LinearFractionalMap::rotation(2.0 * PI / 5.0).iterate(c(0.5, 0.0), 5);
        assert_eq!(orbit.len(), 6);
        assert!((orbit[5] - c(0.5, 0.0)).norm() < 1e-12);
        let orbit = hyperbolic().iterate(ZERO, 200);
        assert!((orbit[200] - ONE).norm() < 1e-10);
        let orbit = LinearFractionalMap::identity().iterate(c(0.1, 0.2), 4);
        assert!(orbit.iter().all(|z| *z == c(0.1, 0.2)));
    }

    fn automorphism() -> impl Strategy<Value = LinearFractionalMap> {
        (0.0..TAU, 0.0..0.95f64, 0.0..TAU).prop_map(|(theta, r, phi)| {
            LinearFractionalMap::disk_automorphism(theta, Complex64::from_polar(r, phi)).unwrap()
        })
    }

    /// Tag read off from where the fixed points lie.
    fn location_tag(m: &LinearFractionalMap) -> Option<MapTag> {
        let pts = m.fixed_points().finite_points();
        let inside = pts.iter().filter(|z| z.norm() < 1.0 - 1e-8).count();
        let boundary = pts.iter().filter(|z| (z.norm() - 1.0).abs() <= 1e-8).count();
        match (inside, boundary) {
            (1, 0) => Some(MapTag::Elliptic),
            (0, 2) => Some(MapTag::Hyperbolic),
            _ => None,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn classification_is_conjugation_invariant(m in automorphism(), conj in automorphism()) {
            let k = m.classify(DEFAULT_EPS_CLASS).unwrap();
            let cm = conj.compose(&m).compose(&conj.inverse());
            prop_assume!(m.discriminant().norm() > 1e-6);
            let kc = cm.classify(DEFAULT_EPS_CLASS).unwrap();
            prop_assert_eq!(k.tag, kc.tag);
        }

        #[test]
        fn trace_criterion_agrees(m in automorphism()) {
            prop_assume!(m.discriminant().norm() > 1e-6);
            let k = m.classify(DEFAULT_EPS_CLASS).unwrap();
            let t2 = (m.trace() * m.trace()).re;
            prop_assert_eq!(k.tag == MapTag::Elliptic, t2 < 4.0);
            prop_assert_eq!(Some(k.tag), location_tag(&m));
        }

        #[test]
        fn fixed_points_are_fixed(m in automorphism()) {
            if let FixedPoints::Points(p) = m.fixed_points() {
                for (z, _) in p {
                    if let Extended::Finite(z) = z {
                        let r = (m.eval(z) - z).norm();
                        prop_assert!(r <= 1e-10 * (1.0 + z.norm_sqr()));
                    }
                }
            }
        }

        #[test]
        fn compose_is_associative(f in automorphism(), g in automorphism(), h in automorphism()) {
            let lhs = f.compose(&g).compose(&h);
            let rhs = f.compose(&g.compose(&h));
            prop_assert!(lhs.projective_distance(&rhs) <= 1e-12 * (1.0 + lhs.coefficients().iter().map(|z| z.norm()).fold(0.0, f64::max)));
        }
    }
}
