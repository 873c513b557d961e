//! The complex projective plane, the complexified Euclidean form, isotropic
//! lines and directions, line symmetries, and the complex reflection law.
//!
//! Points are homogeneous triples `(h0 : h1 : h2)` with affine chart
//! `(z1, z2) = (h1/h0, h2/h0)`; lines are dual triples with incidence
//! `c0·h0 + c1·h1 + c2·h2 = 0`, so the infinity line is `(1 : 0 : 0)`.
//! A line is isotropic when the complexified form `dz1² + dz2²` vanishes on
//! it, i.e. when it passes through one of the two isotropic points at
//! infinity (directions `(1, ±i)`), or when it is the infinity line itself.

use num_complex::Complex64 as C;

use crate::{Error, Result};

/// Relative tolerance for projective comparisons.
pub const EQ_TOL: f64 = 1e-10;
/// Guard tolerance for detecting coincident vertices and other hard
/// degeneracies.
pub const DEGENERACY_GUARD: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C {
    C::new(re, 0.0)
}

/// The complex-bilinear form `v1·w1 + v2·w2` that polarizes `dz1² + dz2²`.
#[inline]
pub fn bilinear_form(v: (C, C), w: (C, C)) -> C {
    v.0 * w.0 + v.1 * w.1
}

fn max_norm3(h: &[C; 3]) -> f64 {
    h.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn cross3(a: &[C; 3], b: &[C; 3]) -> [C; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Scale a homogeneous triple by its largest-modulus entry. Idempotent.
fn normalize3(h: &[C; 3]) -> [C; 3] {
    let mut best = 0usize;
    let mut best_norm = h[0].norm();
    for (i, z) in h.iter().enumerate().skip(1) {
        if z.norm() > best_norm {
            best = i;
            best_norm = z.norm();
        }
    }
    if best_norm == 0.0 {
        return *h;
    }
    let s = h[best];
    [h[0] / s, h[1] / s, h[2] / s]
}

fn triples_approx_eq(a: &[C; 3], b: &[C; 3], tol: f64) -> bool {
    let cr = cross3(a, b);
    max_norm3(&cr) <= tol * max_norm3(a) * max_norm3(b)
}

/// A point of the complex projective plane in homogeneous coordinates.
///
/// Stored normalized by the largest-modulus coordinate; equality is
/// projective (cross product vanishing at relative tolerance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjPoint {
    h: [C; 3],
}

impl ProjPoint {
    pub fn new(h0: C, h1: C, h2: C) -> Self {
        let h = [h0, h1, h2];
        assert!(max_norm3(&h) > 0.0, "projective point: zero triple");
        ProjPoint { h: normalize3(&h) }
    }

    /// The finite point with affine coordinates `(x, y)`.
    pub fn finite(x: C, y: C) -> Self {
        Self::new(cr(1.0), x, y)
    }

    pub fn real(x: f64, y: f64) -> Self {
        Self::finite(cr(x), cr(y))
    }

    /// The infinite point in the direction `(v1, v2)`.
    pub fn at_infinity(v1: C, v2: C) -> Self {
        Self::new(cr(0.0), v1, v2)
    }

    /// First isotropic point at infinity: direction `(1, i)`.
    pub fn isotropic_i1() -> Self {
        Self::at_infinity(cr(1.0), c(0.0, 1.0))
    }

    /// Second isotropic point at infinity: direction `(1, -i)`.
    pub fn isotropic_i2() -> Self {
        Self::at_infinity(cr(1.0), c(0.0, -1.0))
    }

    #[inline]
    pub fn h(&self) -> &[C; 3] {
        &self.h
    }

    pub fn is_finite_point(&self) -> bool {
        self.h[0].norm() > EQ_TOL * max_norm3(&self.h)
    }

    /// Affine coordinates, when the point is finite.
    pub fn affine(&self) -> Option<(C, C)> {
        if self.is_finite_point() {
            Some((self.h[1] / self.h[0], self.h[2] / self.h[0]))
        } else {
            None
        }
    }

    /// Direction `(v1, v2)` of an infinite point.
    pub fn infinite_direction(&self) -> Option<(C, C)> {
        if self.is_finite_point() {
            None
        } else {
            Some((self.h[1], self.h[2]))
        }
    }

    pub fn approx_eq(&self, other: &ProjPoint, tol: f64) -> bool {
        triples_approx_eq(&self.h, &other.h, tol)
    }

    /// The line through two distinct points.
    pub fn line_through(&self, other: &ProjPoint) -> Result<ProjLine> {
        let cr = cross3(&self.h, &other.h);
        if max_norm3(&cr) <= DEGENERACY_GUARD * max_norm3(&self.h) * max_norm3(&other.h) {
            return Err(Error::DegenerateInput(
                "line through coinciding points".into(),
            ));
        }
        Ok(ProjLine::new(cr[0], cr[1], cr[2]))
    }
}

/// A line of the complex projective plane in dual homogeneous coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjLine {
    c: [C; 3],
}

impl ProjLine {
    pub fn new(c0: C, c1: C, c2: C) -> Self {
        let cs = [c0, c1, c2];
        assert!(max_norm3(&cs) > 0.0, "projective line: zero triple");
        ProjLine { c: normalize3(&cs) }
    }

    /// The affine line `c0 + c1·x + c2·y = 0`.
    pub fn affine(c0: C, c1: C, c2: C) -> Self {
        Self::new(c0, c1, c2)
    }

    pub fn real_affine(c0: f64, c1: f64, c2: f64) -> Self {
        Self::new(cr(c0), cr(c1), cr(c2))
    }

    pub fn infinity() -> Self {
        Self::new(cr(1.0), cr(0.0), cr(0.0))
    }

    /// The line through a finite affine point with direction `(v1, v2)`.
    pub fn through_point_dir(p: (C, C), v: (C, C)) -> Self {
        // cross((1, p), (0, v))
        Self::new(p.0 * v.1 - p.1 * v.0, -v.1, v.0)
    }

    #[inline]
    pub fn coeffs(&self) -> &[C; 3] {
        &self.c
    }

    pub fn approx_eq(&self, other: &ProjLine, tol: f64) -> bool {
        triples_approx_eq(&self.c, &other.c, tol)
    }

    pub fn contains(&self, p: &ProjPoint, tol: f64) -> bool {
        self.incidence_residual(p) <= tol
    }

    /// Scale-free incidence residual `|⟨c, h⟩| / (max|c| · max|h|)`.
    pub fn incidence_residual(&self, p: &ProjPoint) -> f64 {
        let s = self.c[0] * p.h()[0] + self.c[1] * p.h()[1] + self.c[2] * p.h()[2];
        s.norm() / (max_norm3(&self.c) * max_norm3(p.h()))
    }

    pub fn is_infinity_line(&self) -> bool {
        let m = max_norm3(&self.c);
        self.c[1].norm().max(self.c[2].norm()) <= EQ_TOL * m
    }

    /// Intersection point of two distinct lines.
    pub fn meet(&self, other: &ProjLine) -> Result<ProjPoint> {
        let cr = cross3(&self.c, &other.c);
        if max_norm3(&cr) <= DEGENERACY_GUARD * max_norm3(&self.c) * max_norm3(&other.c) {
            return Err(Error::DegenerateInput("meet of coinciding lines".into()));
        }
        Ok(ProjPoint::new(cr[0], cr[1], cr[2]))
    }

    /// Direction vector `(v1, v2)` of a finite line: its intersection with
    /// the infinity line.
    pub fn direction_vector(&self) -> Result<(C, C)> {
        if self.is_infinity_line() {
            return Err(Error::DegenerateInput(
                "infinity line has no direction".into(),
            ));
        }
        Ok((self.c[2], -self.c[1]))
    }

    pub fn direction(&self) -> Result<DirectionCoord> {
        let v = self.direction_vector()?;
        Ok(DirectionCoord::from_vector(v.0, v.1))
    }
}

/// `true` when the complexified Euclidean form vanishes on the line, i.e.
/// the line is the infinity line or passes through `(1, ±i)` at infinity.
pub fn is_isotropic(l: &ProjLine) -> bool {
    is_isotropic_tol(l, EQ_TOL)
}

pub fn is_isotropic_tol(l: &ProjLine, tol: f64) -> bool {
    if l.is_infinity_line() {
        return true;
    }
    let (c1, c2) = (l.coeffs()[1], l.coeffs()[2]);
    let q = c1 * c1 + c2 * c2;
    let m = c1.norm().max(c2.norm());
    q.norm() <= tol * m * m
}

/// A direction in the plane, as a point of the infinity line in the chart
/// `z` with `z(I1) = 0`, `z(I2) = ∞`.
///
/// For a direction vector `(v1, v2)` the chart is `z = (v2 - i·v1)/(v2 + i·v1)`,
/// so a real direction with angle `θ` maps to `z = -e^{2iθ}` and the
/// isotropic directions are exactly `z ∈ {0, ∞}`. Stored as a projective
/// pair `(num : den)` so that `∞` needs no special casing.
#[derive(Clone, Copy, Debug)]
pub struct DirectionCoord {
    num: C,
    den: C,
}

impl DirectionCoord {
    pub fn from_vector(v1: C, v2: C) -> Self {
        let i = c(0.0, 1.0);
        let mut num = v2 - i * v1;
        let mut den = v2 + i * v1;
        let m = num.norm().max(den.norm());
        assert!(m > 0.0, "direction of the zero vector");
        num /= m;
        den /= m;
        DirectionCoord { num, den }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::from_vector(cr(theta.cos()), cr(theta.sin()))
    }

    pub fn from_z(z: C) -> Self {
        DirectionCoord { num: z, den: cr(1.0) }
    }

    /// `z(I1) = 0`: the isotropic direction `(1, i)`.
    pub fn isotropic_zero() -> Self {
        DirectionCoord { num: cr(0.0), den: cr(1.0) }
    }

    /// `z(I2) = ∞`: the isotropic direction `(1, -i)`.
    pub fn isotropic_infinity() -> Self {
        DirectionCoord { num: cr(1.0), den: cr(0.0) }
    }

    /// The chart value `z = num/den` (infinite for `I2`).
    pub fn z(&self) -> C {
        self.num / self.den
    }

    /// A direction vector `(v1, v2)` representing this direction.
    pub fn vector(&self) -> (C, C) {
        let i = c(0.0, 1.0);
        (i * (self.num - self.den) / cr(2.0), (self.num + self.den) / cr(2.0))
    }

    pub fn is_isotropic(&self) -> bool {
        let m = self.num.norm().max(self.den.norm());
        self.num.norm() <= EQ_TOL * m || self.den.norm() <= EQ_TOL * m
    }

    /// Chordal distance on the direction sphere, `|z - w|`-like but uniform
    /// near `∞`: `|n_a·d_b - d_a·n_b| / (‖a‖·‖b‖)`.
    pub fn chordal_distance(&self, other: &DirectionCoord) -> f64 {
        let det = self.num * other.den - self.den * other.num;
        let na = (self.num.norm_sqr() + self.den.norm_sqr()).sqrt();
        let nb = (other.num.norm_sqr() + other.den.norm_sqr()).sqrt();
        det.norm() / (na * nb)
    }

    /// The direction perpendicular to this one: `z ↦ -z`.
    pub fn perpendicular(&self) -> Self {
        DirectionCoord { num: -self.num, den: self.den }
    }

    pub(crate) fn raw_pair(&self) -> (C, C) {
        (self.num, self.den)
    }
}

/// Reflect a direction in a mirror direction: `z ↦ ζ²/z` in the chart.
///
/// For real angles this is the Euclidean law `θ' = 2α - θ`; applying it
/// twice returns the input. The mirror must not be isotropic.
pub fn reflect_direction(incident: &DirectionCoord, mirror: &DirectionCoord) -> Result<DirectionCoord> {
    if mirror.is_isotropic() {
        return Err(Error::DegenerateMirror);
    }
    let mut num = mirror.num * mirror.num * incident.den;
    let mut den = mirror.den * mirror.den * incident.num;
    let m = num.norm().max(den.norm());
    if m == 0.0 {
        return Err(Error::DegenerateInput("reflection of a degenerate direction".into()));
    }
    num /= m;
    den /= m;
    Ok(DirectionCoord { num, den })
}

/// The symmetry with respect to a non-isotropic line: the unique non-trivial
/// complex-isometric involution fixing the line pointwise, extended to a
/// projective transformation.
pub fn symmetry_about_line(p: &ProjPoint, l: &ProjLine) -> Result<ProjPoint> {
    if is_isotropic(l) {
        return Err(Error::DegenerateMirror);
    }
    let [c0, c1, c2] = *l.coeffs();
    let q = c1 * c1 + c2 * c2;
    let h = p.h();
    let inc = c0 * h[0] + c1 * h[1] + c2 * h[2];
    Ok(ProjPoint::new(
        q * h[0],
        q * h[1] - cr(2.0) * inc * c1,
        q * h[2] - cr(2.0) * inc * c2,
    ))
}

/// Outcome of checking the complex reflection law at a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    /// Mirror line non-isotropic, adjacent edges symmetric about it.
    SymmetricNonisotropic,
    /// Mirror line isotropic and one adjacent edge lies on it.
    IsotropicEdgeOnMirror,
    /// The vertex coincides with a neighbor vertex.
    VertexCoincidence,
    Violated,
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct ReflectionVerdict {
    pub kind: VerdictKind,
    /// Chordal (resp. projective) defect; zero within tolerance exactly when
    /// the kind is not `Violated`.
    pub residual: f64,
}

impl ReflectionVerdict {
    pub fn passes(&self) -> bool {
        self.kind != VerdictKind::Violated
    }
}

fn line_distance(a: &ProjLine, b: &ProjLine) -> f64 {
    let cr = cross3(a.coeffs(), b.coeffs());
    max_norm3(&cr) / (max_norm3(a.coeffs()) * max_norm3(b.coeffs()))
}

/// Classify the triple `prev, vertex, next` against the complex reflection
/// law with respect to `mirror_line` through the vertex.
///
/// Branches, in order: vertex coincidence with a neighbor; isotropic mirror
/// line with one adjacent edge on it; symmetric non-isotropic pair. All
/// degenerations are handled, none is an error.
pub fn reflection_law_verdict(
    prev: &ProjPoint,
    vertex: &ProjPoint,
    next: &ProjPoint,
    mirror_line: &ProjLine,
    tol: f64,
) -> ReflectionVerdict {
    if vertex.approx_eq(prev, DEGENERACY_GUARD) || vertex.approx_eq(next, DEGENERACY_GUARD) {
        return ReflectionVerdict { kind: VerdictKind::VertexCoincidence, residual: 0.0 };
    }
    let edge_prev = match vertex.line_through(prev) {
        Ok(l) => l,
        Err(_) => return ReflectionVerdict { kind: VerdictKind::VertexCoincidence, residual: 0.0 },
    };
    let edge_next = match vertex.line_through(next) {
        Ok(l) => l,
        Err(_) => return ReflectionVerdict { kind: VerdictKind::VertexCoincidence, residual: 0.0 },
    };
    if is_isotropic(mirror_line) {
        let d = line_distance(&edge_prev, mirror_line).min(line_distance(&edge_next, mirror_line));
        if d <= tol {
            return ReflectionVerdict { kind: VerdictKind::IsotropicEdgeOnMirror, residual: 0.0 };
        }
        return ReflectionVerdict { kind: VerdictKind::Violated, residual: d };
    }
    let zeta = match mirror_line.direction() {
        Ok(z) => z,
        Err(_) => {
            // Infinity line: isotropic, handled above; unreachable for valid input.
            return ReflectionVerdict { kind: VerdictKind::Violated, residual: 1.0 };
        }
    };
    let w_prev = match edge_prev.direction() {
        Ok(w) => w,
        Err(_) => return ReflectionVerdict { kind: VerdictKind::Violated, residual: 1.0 },
    };
    let w_next = match edge_next.direction() {
        Ok(w) => w,
        Err(_) => return ReflectionVerdict { kind: VerdictKind::Violated, residual: 1.0 },
    };
    match reflect_direction(&w_prev, &zeta) {
        Ok(reflected) => {
            let residual = reflected.chordal_distance(&w_next);
            if residual < tol {
                ReflectionVerdict { kind: VerdictKind::SymmetricNonisotropic, residual }
            } else {
                ReflectionVerdict { kind: VerdictKind::Violated, residual }
            }
        }
        Err(_) => ReflectionVerdict { kind: VerdictKind::Violated, residual: 1.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut impl Rng) -> C {
        c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn bilinear_form_examples() {
        assert_eq!(bilinear_form((cr(1.0), cr(0.0)), (cr(1.0), cr(0.0))), cr(1.0));
        let i = c(0.0, 1.0);
        assert_eq!(bilinear_form((cr(1.0), i), (cr(1.0), i)), cr(0.0));
        assert_eq!(bilinear_form((cr(1.0), cr(2.0)), (cr(3.0), cr(4.0))), cr(11.0));
    }

    #[test]
    fn isotropic_line_examples() {
        // z2 = i z1: affine -i*z1 + ... line i·x - y = 0 → (0, i, -1)
        let l = ProjLine::affine(cr(0.0), c(0.0, 1.0), cr(-1.0));
        assert!(is_isotropic(&l));
        assert!(l.contains(&ProjPoint::isotropic_i1(), 1e-12));
        assert!(is_isotropic(&ProjLine::infinity()));
        let x_axis = ProjLine::real_affine(0.0, 0.0, 1.0);
        assert!(!is_isotropic(&x_axis));
    }

    #[test]
    fn direction_chart_realizes_angle_rule() {
        for theta in [0.0, 0.3, 1.2, 2.8, -0.7] {
            let d = DirectionCoord::from_angle(theta);
            let expected = -c(0.0, 2.0 * theta).exp();
            assert!((d.z() - expected).norm() < 1e-12);
            assert!((d.z().norm() - 1.0).abs() < 1e-12);
        }
        assert!(DirectionCoord::isotropic_zero().is_isotropic());
        assert!(DirectionCoord::isotropic_infinity().is_isotropic());
    }

    #[test]
    fn reflect_direction_fixes_mirror_and_real_angles() {
        let zeta = DirectionCoord::from_angle(0.9);
        let r = reflect_direction(&zeta, &zeta).unwrap();
        assert!(r.chordal_distance(&zeta) < 1e-14);

        // mirror = x-axis (angle 0, ζ = -1), incident θ → reflected -θ
        let mirror = DirectionCoord::from_angle(0.0);
        assert!((mirror.z() - cr(-1.0)).norm() < 1e-14);
        let theta = 0.73;
        let refl = reflect_direction(&DirectionCoord::from_angle(theta), &mirror).unwrap();
        assert!(refl.chordal_distance(&DirectionCoord::from_angle(-theta)) < 1e-13);

        // general real case: θ' = 2α - θ
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let alpha = rng.gen_range(-3.0..3.0);
            let theta = rng.gen_range(-3.0..3.0);
            let refl = reflect_direction(
                &DirectionCoord::from_angle(theta),
                &DirectionCoord::from_angle(alpha),
            )
            .unwrap();
            assert!(refl.chordal_distance(&DirectionCoord::from_angle(2.0 * alpha - theta)) < 1e-12);
        }
    }

    /// Independent oracle: the symmetry matrix `2·v vᵀ/Q(v) - Id` built from
    /// the bilinear form, applied to direction vectors.
    fn reflect_vector_oracle(w: (C, C), v: (C, C)) -> (C, C) {
        let q = bilinear_form(v, v);
        let s = cr(2.0) * bilinear_form(w, v) / q;
        (s * v.0 - w.0, s * v.1 - w.1)
    }

    #[test]
    fn reflect_direction_matches_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut count = 0;
        while count < 10_000 {
            let v = (rand_c(&mut rng), rand_c(&mut rng));
            let w = (rand_c(&mut rng), rand_c(&mut rng));
            if bilinear_form(v, v).norm() < 1e-3 || bilinear_form(w, w).norm() < 1e-3 {
                continue;
            }
            let mirror = DirectionCoord::from_vector(v.0, v.1);
            let incident = DirectionCoord::from_vector(w.0, w.1);
            let got = reflect_direction(&incident, &mirror).unwrap();
            let oracle = reflect_vector_oracle(w, v);
            let want = DirectionCoord::from_vector(oracle.0, oracle.1);
            assert!(got.chordal_distance(&want) < 1e-12);
            count += 1;
        }
    }

    #[test]
    fn reflect_direction_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut count = 0;
        while count < 10_000 {
            let v = (rand_c(&mut rng), rand_c(&mut rng));
            let w = (rand_c(&mut rng), rand_c(&mut rng));
            if bilinear_form(v, v).norm() < 1e-3 {
                continue;
            }
            let mirror = DirectionCoord::from_vector(v.0, v.1);
            let incident = DirectionCoord::from_vector(w.0, w.1);
            let once = reflect_direction(&incident, &mirror).unwrap();
            let twice = reflect_direction(&once, &mirror).unwrap();
            assert!(twice.chordal_distance(&incident) < 1e-12);
            count += 1;
        }
    }

    #[test]
    fn symmetry_examples() {
        let x_axis = ProjLine::real_affine(0.0, 0.0, 1.0);
        // point on the line is fixed
        let p = ProjPoint::real(0.7, 0.0);
        assert!(symmetry_about_line(&p, &x_axis).unwrap().approx_eq(&p, 1e-14));
        // (0,1) about the x-axis
        let q = symmetry_about_line(&ProjPoint::real(0.0, 1.0), &x_axis).unwrap();
        assert!(q.approx_eq(&ProjPoint::real(0.0, -1.0), 1e-14));
        // (1,0) about z2 = 2 z1, frozen from the matrix oracle 2(p·v)/(v·v)·v - p
        let l = ProjLine::real_affine(0.0, 2.0, -1.0); // 2x - y = 0
        let r = symmetry_about_line(&ProjPoint::real(1.0, 0.0), &l).unwrap();
        assert!(r.approx_eq(&ProjPoint::real(-3.0 / 5.0, 4.0 / 5.0), 1e-13));
    }

    #[test]
    fn symmetry_rejects_isotropic_line() {
        let l = ProjLine::affine(cr(0.0), c(0.0, 1.0), cr(-1.0));
        assert!(matches!(
            symmetry_about_line(&ProjPoint::real(1.0, 0.0), &l),
            Err(Error::DegenerateMirror)
        ));
        assert!(matches!(
            symmetry_about_line(&ProjPoint::real(1.0, 0.0), &ProjLine::infinity()),
            Err(Error::DegenerateMirror)
        ));
    }

    #[test]
    fn symmetry_preserves_bilinear_form_of_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut count = 0;
        while count < 2_000 {
            let cs = [rand_c(&mut rng), rand_c(&mut rng), rand_c(&mut rng)];
            let l = ProjLine::new(cs[0], cs[1], cs[2]);
            if is_isotropic_tol(&l, 1e-3) {
                continue;
            }
            let p = (rand_c(&mut rng), rand_c(&mut rng));
            let q = (rand_c(&mut rng), rand_c(&mut rng));
            let sp = symmetry_about_line(&ProjPoint::finite(p.0, p.1), &l).unwrap();
            let sq = symmetry_about_line(&ProjPoint::finite(q.0, q.1), &l).unwrap();
            let (spx, spy) = sp.affine().unwrap();
            let (sqx, sqy) = sq.affine().unwrap();
            let before = bilinear_form((q.0 - p.0, q.1 - p.1), (q.0 - p.0, q.1 - p.1));
            let after = bilinear_form((sqx - spx, sqy - spy), (sqx - spx, sqy - spy));
            assert!(
                (before - after).norm() <= 1e-10 * before.norm().max(1.0),
                "form not preserved: {before} vs {after}"
            );
            count += 1;
        }
    }

    #[test]
    fn symmetry_is_involutive_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut count = 0;
        while count < 2_000 {
            let cs = [rand_c(&mut rng), rand_c(&mut rng), rand_c(&mut rng)];
            let l = ProjLine::new(cs[0], cs[1], cs[2]);
            if is_isotropic_tol(&l, 1e-3) {
                continue;
            }
            let p = ProjPoint::finite(rand_c(&mut rng), rand_c(&mut rng));
            let pp = symmetry_about_line(&symmetry_about_line(&p, &l).unwrap(), &l).unwrap();
            assert!(pp.approx_eq(&p, 1e-10));
            count += 1;
        }
    }

    #[test]
    fn projective_equality_matches_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10_000 {
            let h = [rand_c(&mut rng), rand_c(&mut rng), rand_c(&mut rng)];
            if max_norm3(&h) < 1e-6 {
                continue;
            }
            let p = ProjPoint::new(h[0], h[1], h[2]);
            let s = rand_c(&mut rng);
            if s.norm() < 1e-6 {
                continue;
            }
            let q = ProjPoint::new(h[0] * s, h[1] * s, h[2] * s);
            // normalization is idempotent and scale-free
            assert!(p.approx_eq(&q, 1e-12));
            let pn = ProjPoint::new(p.h()[0], p.h()[1], p.h()[2]);
            assert!(pn.approx_eq(&p, 1e-15));
        }
    }

    #[test]
    fn isotropy_iff_form_vanishes_on_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut seen_iso = 0;
        for k in 0..10_000 {
            let l = if k % 5 == 0 {
                // contains an isotropic point: span of I_k and a random point
                let p = ProjPoint::finite(rand_c(&mut rng), rand_c(&mut rng));
                let i = if k % 2 == 0 { ProjPoint::isotropic_i1() } else { ProjPoint::isotropic_i2() };
                p.line_through(&i).unwrap()
            } else {
                ProjLine::new(rand_c(&mut rng), rand_c(&mut rng), rand_c(&mut rng))
            };
            if l.is_infinity_line() {
                continue;
            }
            let v = l.direction_vector().unwrap();
            let q = bilinear_form(v, v);
            let m = v.0.norm().max(v.1.norm());
            let vanishes = q.norm() <= EQ_TOL * m * m;
            assert_eq!(is_isotropic(&l), vanishes);
            if vanishes {
                seen_iso += 1;
            }
        }
        assert!(seen_iso >= 1_000);
    }

    #[test]
    fn verdict_symmetric_v() {
        // mirror-symmetric V about the x-axis
        let verdict = reflection_law_verdict(
            &ProjPoint::real(-1.0, 1.0),
            &ProjPoint::real(0.0, 0.0),
            &ProjPoint::real(1.0, 1.0),
            &ProjLine::real_affine(0.0, 0.0, 1.0),
            1e-9,
        );
        assert_eq!(verdict.kind, VerdictKind::SymmetricNonisotropic);
        assert!(verdict.residual < 1e-14);
    }

    #[test]
    fn verdict_vertex_coincidence() {
        let p = ProjPoint::real(0.3, -0.2);
        let verdict = reflection_law_verdict(
            &p,
            &p,
            &ProjPoint::real(1.0, 1.0),
            &ProjLine::real_affine(0.0, 0.0, 1.0),
            1e-9,
        );
        assert_eq!(verdict.kind, VerdictKind::VertexCoincidence);
    }

    #[test]
    fn verdict_isotropic_mirror() {
        // isotropic line through the origin with direction (1, i)
        let iso = ProjLine::through_point_dir((cr(0.0), cr(0.0)), (cr(1.0), c(0.0, 1.0)));
        assert!(is_isotropic(&iso));
        // edge on the mirror: prev lies on the isotropic line
        let on = reflection_law_verdict(
            &ProjPoint::finite(cr(1.0), c(0.0, 1.0)),
            &ProjPoint::real(0.0, 0.0),
            &ProjPoint::real(1.0, 1.0),
            &iso,
            1e-9,
        );
        assert_eq!(on.kind, VerdictKind::IsotropicEdgeOnMirror);
        // neither edge on the mirror: violated
        let off = reflection_law_verdict(
            &ProjPoint::real(-1.0, 1.0),
            &ProjPoint::real(0.0, 0.0),
            &ProjPoint::real(1.0, 1.0),
            &iso,
            1e-9,
        );
        assert_eq!(off.kind, VerdictKind::Violated);
        assert!(off.residual > 1e-3);
    }

    #[test]
    fn degenerate_directions_reflect_without_nan() {
        // isotropic incident direction reflects to the other isotropic one
        let mirror = DirectionCoord::from_angle(0.4);
        let r = reflect_direction(&DirectionCoord::isotropic_zero(), &mirror).unwrap();
        assert!(r.chordal_distance(&DirectionCoord::isotropic_infinity()) < 1e-14);
    }
}
