//! Parametrized mirrors: projective lines, complex circles, confocal conic
//! families, confocal parabolas, and symmetric images of other mirrors.
//!
//! Every mirror is a holomorphically parametrized curve `t ↦ point_at(t)` in
//! the finite plane with a tangent line at each regular parameter. Confocal
//! conics use the Jacobi form `x²/λ + y²/(λ-c²) = 1` in a rigid frame with
//! foci at the frame image of `(±c, 0)`. The trigonometric chart
//! `t ↦ (a·cos t, b·sin t)` with complex semi-axes covers every conic of the
//! family: real ellipse points have real `t`, real hyperbola points sit at
//! `t = iu` (one branch) and `t = π + iu` (the other), so the branch index
//! rides along with the parameter.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::projective::{c, cr, is_isotropic, symmetry_about_line, ProjLine, ProjPoint};
use crate::{Error, Result};

/// A rigid motion of the real plane (rotation followed by translation),
/// extended to complex points coefficient-wise.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct RigidMotion {
    pub rotation: f64,
    pub translation: [f64; 2],
}

impl Default for RigidMotion {
    fn default() -> Self {
        RigidMotion { rotation: 0.0, translation: [0.0, 0.0] }
    }
}

impl RigidMotion {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(rotation: f64, tx: f64, ty: f64) -> Self {
        RigidMotion { rotation, translation: [tx, ty] }
    }

    pub fn apply(&self, p: (C, C)) -> (C, C) {
        let (co, si) = (self.rotation.cos(), self.rotation.sin());
        (
            cr(co) * p.0 - cr(si) * p.1 + cr(self.translation[0]),
            cr(si) * p.0 + cr(co) * p.1 + cr(self.translation[1]),
        )
    }

    pub fn apply_vector(&self, v: (C, C)) -> (C, C) {
        let (co, si) = (self.rotation.cos(), self.rotation.sin());
        (cr(co) * v.0 - cr(si) * v.1, cr(si) * v.0 + cr(co) * v.1)
    }

    pub fn inverse(&self) -> Self {
        let (co, si) = (self.rotation.cos(), self.rotation.sin());
        let tx = -(co * self.translation[0] + si * self.translation[1]);
        let ty = -(-si * self.translation[0] + co * self.translation[1]);
        RigidMotion { rotation: -self.rotation, translation: [tx, ty] }
    }

    pub fn apply_real(&self, p: (f64, f64)) -> (f64, f64) {
        let (x, y) = self.apply((cr(p.0), cr(p.1)));
        (x.re, y.re)
    }

    fn approx_eq(&self, other: &RigidMotion, tol: f64) -> bool {
        let da = (self.rotation - other.rotation).rem_euclid(std::f64::consts::TAU);
        let da = da.min(std::f64::consts::TAU - da);
        da <= tol
            && (self.translation[0] - other.translation[0]).abs() <= tol
            && (self.translation[1] - other.translation[1]).abs() <= tol
    }
}

/// A confocal family of conics `x²/λ + y²/(λ-c²) = 1` in a rigid frame;
/// foci at the frame image of `(±c, 0)` for every admissible `λ`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConfocalFamily {
    half_focal_distance: f64,
    pub frame: RigidMotion,
}

impl ConfocalFamily {
    /// `c` must be positive: coinciding foci (circle families) are a
    /// separate mirror kind.
    pub fn new(c: f64, frame: RigidMotion) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidInput(
                "confocal family requires a positive half focal distance".into(),
            ));
        }
        Ok(ConfocalFamily { half_focal_distance: c, frame })
    }

    pub fn axis_aligned(c: f64) -> Result<Self> {
        Self::new(c, RigidMotion::identity())
    }

    pub fn half_focal_distance(&self) -> f64 {
        self.half_focal_distance
    }

    pub fn foci(&self) -> ((f64, f64), (f64, f64)) {
        (
            self.frame.apply_real((self.half_focal_distance, 0.0)),
            self.frame.apply_real((-self.half_focal_distance, 0.0)),
        )
    }
}

/// Real classification of a family member.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConicClass {
    Ellipse,
    Hyperbola,
    Complex,
}

/// The member of a confocal family at parameter `λ ∉ {0, c²}`.
///
/// Real `λ > c²` is an ellipse with semi-axes `(√λ, √(λ-c²))`; real
/// `0 < λ < c²` is a hyperbola.
pub fn conic_at(family: ConfocalFamily, lambda: C) -> Result<Mirror> {
    let c2 = family.half_focal_distance * family.half_focal_distance;
    let guard = 1e-12 * c2.max(1.0);
    if lambda.norm() <= guard || (lambda - cr(c2)).norm() <= guard {
        return Err(Error::DegenerateInput(
            "degenerate confocal parameter: lambda in {0, c^2}".into(),
        ));
    }
    Ok(Mirror::Conic { family, lambda })
}

/// A mirror: a parametrized curve with tangent-line evaluation.
#[derive(Clone, Debug)]
pub enum Mirror {
    /// A non-isotropic projective line, parametrized affinely.
    Line { line: ProjLine, base: (C, C), dir: (C, C) },
    /// A complex circle `(x-a)² + (y-b)² = r²` with complex `r²`.
    Circle { center: (C, C), radius_sq: C },
    /// A member of a confocal family.
    Conic { family: ConfocalFamily, lambda: C },
    /// A confocal parabola `x² = 4f(y+f)` in a rigid frame: focus at the
    /// frame origin, axis the frame's y-axis, for every `f ≠ 0`.
    Parabola { f: f64, frame: RigidMotion },
    /// The symmetric image of another mirror, parametrized by composing with
    /// the symmetry.
    MirrorImage { inner: Box<Mirror>, axis: ProjLine },
}

impl Mirror {
    pub fn line(l: ProjLine) -> Result<Mirror> {
        if is_isotropic(&l) {
            return Err(Error::DegenerateMirror);
        }
        let [c0, c1, c2] = *l.coeffs();
        let q = c1 * c1 + c2 * c2;
        let base = (-c0 * c1 / q, -c0 * c2 / q);
        let dir = (c2, -c1);
        Ok(Mirror::Line { line: l, base, dir })
    }

    pub fn circle(center: (C, C), radius_sq: C) -> Result<Mirror> {
        if radius_sq.norm() <= 1e-300 {
            return Err(Error::DegenerateInput("circle of zero radius".into()));
        }
        Ok(Mirror::Circle { center, radius_sq })
    }

    pub fn parabola(f: f64, frame: RigidMotion) -> Result<Mirror> {
        if f == 0.0 || !f.is_finite() {
            return Err(Error::DegenerateInput("parabola requires f != 0".into()));
        }
        Ok(Mirror::Parabola { f, frame })
    }

    pub fn mirror_image(inner: Mirror, axis: ProjLine) -> Result<Mirror> {
        if is_isotropic(&axis) {
            return Err(Error::DegenerateMirror);
        }
        Ok(Mirror::MirrorImage { inner: Box::new(inner), axis })
    }

    /// Complex semi-axes of a conic in its frame: `(√λ, √(λ-c²))`.
    fn semi_axes(family: &ConfocalFamily, lambda: C) -> (C, C) {
        let c2 = family.half_focal_distance * family.half_focal_distance;
        (lambda.sqrt(), (lambda - cr(c2)).sqrt())
    }

    pub fn classify(&self) -> ConicClass {
        match self {
            Mirror::Conic { family, lambda } => {
                let c2 = family.half_focal_distance * family.half_focal_distance;
                if lambda.im.abs() > 1e-12 * lambda.norm().max(1.0) || lambda.re <= 0.0 {
                    ConicClass::Complex
                } else if lambda.re > c2 {
                    ConicClass::Ellipse
                } else {
                    ConicClass::Hyperbola
                }
            }
            Mirror::Circle { .. } => ConicClass::Ellipse,
            Mirror::MirrorImage { inner, .. } => inner.classify(),
            _ => ConicClass::Complex,
        }
    }

    /// The affine point at parameter `t`.
    pub fn point_at_affine(&self, t: C) -> (C, C) {
        match self {
            Mirror::Line { base, dir, .. } => (base.0 + t * dir.0, base.1 + t * dir.1),
            Mirror::Circle { center, radius_sq } => {
                let r = radius_sq.sqrt();
                (center.0 + r * t.cos(), center.1 + r * t.sin())
            }
            Mirror::Conic { family, lambda } => {
                let (a, b) = Self::semi_axes(family, *lambda);
                family.frame.apply((a * t.cos(), b * t.sin()))
            }
            Mirror::Parabola { f, frame } => {
                let fc = cr(*f);
                frame.apply((cr(2.0) * fc * t, fc * t * t - fc))
            }
            Mirror::MirrorImage { inner, axis } => {
                let p = inner.point_at(t);
                let s = symmetry_about_line(&p, axis).expect("non-isotropic axis");
                s.affine().expect("finite mirror point")
            }
        }
    }

    pub fn point_at(&self, t: C) -> ProjPoint {
        let (x, y) = self.point_at_affine(t);
        ProjPoint::finite(x, y)
    }

    /// The parametrization derivative at `t`.
    pub fn velocity(&self, t: C) -> (C, C) {
        match self {
            Mirror::Line { dir, .. } => *dir,
            Mirror::Circle { center: _, radius_sq } => {
                let r = radius_sq.sqrt();
                (-r * t.sin(), r * t.cos())
            }
            Mirror::Conic { family, lambda } => {
                let (a, b) = Self::semi_axes(family, *lambda);
                family.frame.apply_vector((-a * t.sin(), b * t.cos()))
            }
            Mirror::Parabola { f, frame } => {
                let fc = cr(*f);
                frame.apply_vector((cr(2.0) * fc, cr(2.0) * fc * t))
            }
            Mirror::MirrorImage { inner, axis } => {
                let v = inner.velocity(t);
                // linear part of the symmetry
                let [_, c1, c2] = *axis.coeffs();
                let q = c1 * c1 + c2 * c2;
                let inc = c1 * v.0 + c2 * v.1;
                ((q * v.0 - cr(2.0) * inc * c1) / q, (q * v.1 - cr(2.0) * inc * c2) / q)
            }
        }
    }

    /// The tangent line at a regular parameter `t`.
    pub fn tangent_line(&self, t: C) -> Result<ProjLine> {
        match self {
            Mirror::Line { line, .. } => Ok(*line),
            _ => {
                let p = self.point_at_affine(t);
                let v = self.velocity(t);
                let m = v.0.norm().max(v.1.norm());
                if m <= 1e-14 {
                    return Err(Error::SingularState("singular mirror parameter".into()));
                }
                Ok(ProjLine::through_point_dir(p, v))
            }
        }
    }

    /// Recover a parameter with `point_at(t) ≈ p` for an affine point `p`
    /// on the mirror. Charts use principal logarithms, so conic parameters
    /// land in `Im(log) ∈ (-π, π]` and hyperbola branches at `Re t ∈ {0, π}`.
    pub fn param_of_point(&self, p: (C, C)) -> Result<C> {
        match self {
            Mirror::Line { base, dir, .. } => {
                let d = (p.0 - base.0, p.1 - base.1);
                if dir.0.norm() >= dir.1.norm() {
                    Ok(d.0 / dir.0)
                } else {
                    Ok(d.1 / dir.1)
                }
            }
            Mirror::Circle { center, radius_sq } => {
                let r = radius_sq.sqrt();
                let w = (p.0 - center.0) / r + c(0.0, 1.0) * (p.1 - center.1) / r;
                if w.norm() <= 1e-300 {
                    return Err(Error::SingularState("point at circle center".into()));
                }
                Ok(-c(0.0, 1.0) * w.ln())
            }
            Mirror::Conic { family, lambda } => {
                let (a, b) = Self::semi_axes(family, *lambda);
                let local = family.frame.inverse().apply(p);
                let w = local.0 / a + c(0.0, 1.0) * local.1 / b;
                if w.norm() <= 1e-300 {
                    return Err(Error::SingularState("degenerate conic point".into()));
                }
                Ok(-c(0.0, 1.0) * w.ln())
            }
            Mirror::Parabola { f, frame } => {
                let local = frame.inverse().apply(p);
                Ok(local.0 / cr(2.0 * f))
            }
            Mirror::MirrorImage { inner, axis } => {
                let q = symmetry_about_line(&ProjPoint::finite(p.0, p.1), axis)?;
                let qa = q
                    .affine()
                    .ok_or_else(|| Error::DegenerateInput("mirror image at infinity".into()))?;
                inner.param_of_point(qa)
            }
        }
    }

    /// Implicit equation as a symmetric 3×3 matrix in homogeneous
    /// coordinates `(h0, h1, h2)`, when the mirror is conic.
    pub fn conic_matrix(&self) -> Option<[[C; 3]; 3]> {
        match self {
            Mirror::Line { .. } => None,
            Mirror::Circle { center, radius_sq } => {
                let (p, q) = *center;
                Some([
                    [p * p + q * q - radius_sq, -p, -q],
                    [-p, cr(1.0), cr(0.0)],
                    [-q, cr(0.0), cr(1.0)],
                ])
            }
            Mirror::Conic { family, lambda } => {
                let c2 = family.half_focal_distance * family.half_focal_distance;
                let local = [
                    [cr(-1.0), cr(0.0), cr(0.0)],
                    [cr(0.0), cr(1.0) / lambda, cr(0.0)],
                    [cr(0.0), cr(0.0), cr(1.0) / (lambda - cr(c2))],
                ];
                Some(conjugate_by_frame(&local, &family.frame))
            }
            Mirror::Parabola { f, frame } => {
                let fc = cr(*f);
                let local = [
                    [cr(-4.0) * fc * fc, cr(0.0), cr(-2.0) * fc],
                    [cr(0.0), cr(1.0), cr(0.0)],
                    [cr(-2.0) * fc, cr(0.0), cr(0.0)],
                ];
                Some(conjugate_by_frame(&local, frame))
            }
            Mirror::MirrorImage { inner, axis } => {
                let q = inner.conic_matrix()?;
                let s = symmetry_matrix(axis);
                // the symmetry is an involution up to scale, so S works as
                // its own inverse here
                Some(congruence(&q, &s))
            }
        }
    }

    /// The underlying projective line of a line-like mirror.
    pub fn as_line(&self) -> Option<ProjLine> {
        match self {
            Mirror::Line { line, .. } => Some(*line),
            Mirror::MirrorImage { inner, axis } => {
                let l = inner.as_line()?;
                let s = symmetry_matrix(axis);
                // the symmetry matrix is symmetric and involutive up to
                // scale, so it maps line coefficients to line coefficients
                let m = mat_vec(&s, l.coeffs());
                Some(ProjLine::new(m[0], m[1], m[2]))
            }
            _ => None,
        }
    }

    /// Structural equality of mirrors as parametrized curves.
    pub fn structurally_eq(&self, other: &Mirror, tol: f64) -> bool {
        match (self, other) {
            (Mirror::Line { line: a, .. }, Mirror::Line { line: b, .. }) => a.approx_eq(b, tol),
            (
                Mirror::Circle { center: ca, radius_sq: ra },
                Mirror::Circle { center: cb, radius_sq: rb },
            ) => {
                (ca.0 - cb.0).norm() <= tol
                    && (ca.1 - cb.1).norm() <= tol
                    && (ra - rb).norm() <= tol
            }
            (
                Mirror::Conic { family: fa, lambda: la },
                Mirror::Conic { family: fb, lambda: lb },
            ) => {
                (fa.half_focal_distance - fb.half_focal_distance).abs() <= tol
                    && fa.frame.approx_eq(&fb.frame, tol)
                    && (la - lb).norm() <= tol
            }
            (Mirror::Parabola { f: fa, frame: ma }, Mirror::Parabola { f: fb, frame: mb }) => {
                (fa - fb).abs() <= tol && ma.approx_eq(mb, tol)
            }
            (
                Mirror::MirrorImage { inner: ia, axis: aa },
                Mirror::MirrorImage { inner: ib, axis: ab },
            ) => aa.approx_eq(ab, tol) && ia.structurally_eq(ib, tol),
            _ => false,
        }
    }
}

fn mat_vec(m: &[[C; 3]; 3], v: &[C; 3]) -> [C; 3] {
    let mut out = [cr(0.0); 3];
    for (i, row) in m.iter().enumerate() {
        for (j, mij) in row.iter().enumerate() {
            out[i] += mij * v[j];
        }
    }
    out
}

/// `Sᵀ Q S` for 3×3 matrices.
fn congruence(q: &[[C; 3]; 3], s: &[[C; 3]; 3]) -> [[C; 3]; 3] {
    let mut qs = [[cr(0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                qs[i][j] += q[i][k] * s[k][j];
            }
        }
    }
    let mut out = [[cr(0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += s[k][i] * qs[k][j];
            }
        }
    }
    out
}

/// Homogeneous matrix of the symmetry about a non-isotropic line.
pub fn symmetry_matrix(l: &ProjLine) -> [[C; 3]; 3] {
    let [c0, c1, c2] = *l.coeffs();
    let q = c1 * c1 + c2 * c2;
    [
        [q, cr(0.0), cr(0.0)],
        [-cr(2.0) * c0 * c1, q - cr(2.0) * c1 * c1, -cr(2.0) * c1 * c2],
        [-cr(2.0) * c0 * c2, -cr(2.0) * c1 * c2, q - cr(2.0) * c2 * c2],
    ]
}

fn conjugate_by_frame(local: &[[C; 3]; 3], frame: &RigidMotion) -> [[C; 3]; 3] {
    // homogeneous matrix of the inverse frame: h_local = F⁻¹ h_global
    let inv = frame.inverse();
    let (co, si) = (inv.rotation.cos(), inv.rotation.sin());
    let f_inv = [
        [cr(1.0), cr(0.0), cr(0.0)],
        [cr(inv.translation[0]), cr(co), cr(-si)],
        [cr(inv.translation[1]), cr(si), cr(co)],
    ];
    congruence(local, &f_inv)
}

/// A single line–mirror intersection.
#[derive(Clone, Copy, Debug)]
pub struct Intersection {
    pub point: ProjPoint,
    /// Mirror parameter of the intersection point (principal chart).
    pub param: C,
    pub multiplicity: u32,
}

/// The intersection locus of a line with a mirror: 0–2 points for conic
/// mirrors, with multiplicities from the discriminant.
#[derive(Clone, Debug, Default)]
pub struct IntersectionSet {
    pub entries: Vec<Intersection>,
}

/// Closed-form intersection of a projective line with a mirror.
pub fn intersect_line_mirror(l: &ProjLine, m: &Mirror) -> Result<IntersectionSet> {
    if l.is_infinity_line() {
        return Err(Error::DegenerateInput(
            "intersection with the infinity line".into(),
        ));
    }
    if let Some(ml) = m.as_line() {
        if l.approx_eq(&ml, 1e-13) {
            return Err(Error::DegenerateInput(
                "line coincides with the line mirror".into(),
            ));
        }
        let p = l.meet(&ml)?;
        let mut entries = Vec::new();
        if let Some(pa) = p.affine() {
            let param = m.param_of_point(pa)?;
            entries.push(Intersection { point: p, param, multiplicity: 1 });
        }
        // a parallel line meets only at infinity; the set stays empty
        return Ok(IntersectionSet { entries });
    }
    if let Mirror::MirrorImage { inner, axis } = m {
        let lm = mat_vec(&symmetry_matrix(axis), l.coeffs());
        let reflected = ProjLine::new(lm[0], lm[1], lm[2]);
        let inner_set = intersect_line_mirror(&reflected, inner)?;
        let mut entries = Vec::with_capacity(inner_set.entries.len());
        for e in inner_set.entries {
            let p = symmetry_about_line(&e.point, axis)?;
            entries.push(Intersection { point: p, param: e.param, multiplicity: e.multiplicity });
        }
        return Ok(IntersectionSet { entries });
    }
    let q = m
        .conic_matrix()
        .ok_or_else(|| Error::DegenerateInput("mirror has no implicit conic form".into()))?;

    // parametrize the line as h(s) = h_b + s·h_d
    let (bx, by) = {
        let [c0, c1, c2] = *l.coeffs();
        let den = c1 * c1 + c2 * c2;
        if den.norm() <= 1e-14 * c1.norm().max(c2.norm()).powi(2).max(1e-300) {
            // isotropic line: fall back to a base point via one coefficient
            if c1.norm() >= c2.norm() {
                (-c0 / c1, cr(0.0))
            } else {
                (cr(0.0), -c0 / c2)
            }
        } else {
            (-c0 * c1 / den, -c0 * c2 / den)
        }
    };
    let (dx, dy) = l.direction_vector()?;
    let hb = [cr(1.0), bx, by];
    let hd = [cr(0.0), dx, dy];
    let quad = |u: &[C; 3], v: &[C; 3]| -> C {
        let mut s = cr(0.0);
        for i in 0..3 {
            for j in 0..3 {
                s += u[i] * q[i][j] * v[j];
            }
        }
        s
    };
    let alpha = quad(&hd, &hd);
    let beta = cr(2.0) * quad(&hb, &hd);
    let gamma = quad(&hb, &hb);
    let scale = alpha.norm().max(beta.norm()).max(gamma.norm());
    if scale <= 1e-300 {
        return Err(Error::DegenerateInput(
            "line contained in the conic degenerate locus".into(),
        ));
    }
    let mut roots: Vec<(C, u32)> = Vec::new();
    if alpha.norm() <= 1e-13 * scale {
        // asymptotic direction: a single finite intersection
        if beta.norm() > 1e-13 * scale {
            roots.push((-gamma / beta, 1));
        }
    } else {
        let disc = beta * beta - cr(4.0) * alpha * gamma;
        let disc_scale = (beta * beta).norm() + (cr(4.0) * alpha * gamma).norm();
        if disc.norm() <= 1e-12 * disc_scale.max(1e-300) {
            roots.push((-beta / (cr(2.0) * alpha), 2));
        } else {
            let sq = disc.sqrt();
            // stable complex quadratic: take the larger-magnitude branch first
            let qq = if (beta + sq).norm() >= (beta - sq).norm() {
                -(beta + sq) / cr(2.0)
            } else {
                -(beta - sq) / cr(2.0)
            };
            roots.push((qq / alpha, 1));
            roots.push((gamma / qq, 1));
        }
    }
    let mut entries = Vec::with_capacity(roots.len());
    for (s, mult) in roots {
        let p = (bx + s * dx, by + s * dy);
        let param = m.param_of_point(p)?;
        entries.push(Intersection {
            point: ProjPoint::finite(p.0, p.1),
            param,
            multiplicity: mult,
        });
    }
    Ok(IntersectionSet { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::bilinear_form;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn unit_circle() -> Mirror {
        Mirror::circle((cr(0.0), cr(0.0)), cr(1.0)).unwrap()
    }

    #[test]
    fn conic_at_classifies_and_places_foci() {
        let fam = ConfocalFamily::axis_aligned(1.0).unwrap();
        let e = conic_at(fam, cr(4.0)).unwrap();
        assert_eq!(e.classify(), ConicClass::Ellipse);
        // semi-axes (2, √3): a² - b² = 1 = c², checked via the focal oracle
        let p0 = e.point_at_affine(cr(0.0));
        assert!((p0.0 - cr(2.0)).norm() < 1e-14 && p0.1.norm() < 1e-14);
        let ((f1x, f1y), (f2x, f2y)) = fam.foci();
        assert!((f1x - 1.0).abs() < 1e-14 && f1y.abs() < 1e-14);
        assert!((f2x + 1.0).abs() < 1e-14 && f2y.abs() < 1e-14);

        let h = conic_at(fam, cr(0.5)).unwrap();
        assert_eq!(h.classify(), ConicClass::Hyperbola);
        // hyperbola branch point at t = iu: real, on the +x branch
        let p = h.point_at_affine(c(0.0, 0.7));
        assert!(p.0.im.abs() < 1e-14 && p.1.im.abs() < 1e-14);
        assert!(p.0.re > 0.0);
        // focal oracle again: a² + b'² = λ + (c² - λ) = c²
        let a2 = 0.5_f64;
        let b2 = 1.0 - 0.5;
        assert!((a2 + b2 - 1.0).abs() < 1e-14);
        // other branch at t = π + iu
        let pm = h.point_at_affine(c(std::f64::consts::PI, 0.7));
        assert!(pm.0.re < 0.0 && pm.0.im.abs() < 1e-12);

        assert!(ConfocalFamily::axis_aligned(0.0).is_err());
        assert!(conic_at(fam, cr(0.0)).is_err());
        assert!(conic_at(fam, cr(1.0)).is_err());
    }

    #[test]
    fn tangent_line_examples() {
        // unit circle at t = 0, point (1,0): vertical line x = 1
        let circle = unit_circle();
        let tl = circle.tangent_line(cr(0.0)).unwrap();
        assert!(tl.approx_eq(&ProjLine::real_affine(-1.0, 1.0, 0.0), 1e-13));
        // line mirrors are their own tangent everywhere
        let l = ProjLine::real_affine(1.0, 2.0, -0.5);
        let lm = Mirror::line(l).unwrap();
        assert!(lm.tangent_line(cr(3.7)).unwrap().approx_eq(&l, 1e-14));
        assert!(lm.tangent_line(c(-1.0, 2.0)).unwrap().approx_eq(&l, 1e-14));
    }

    #[test]
    fn tangent_matches_polar_line_oracle() {
        let fam = ConfocalFamily::new(1.0, RigidMotion::new(0.4, 0.2, -0.7)).unwrap();
        let e = conic_at(fam, cr(4.0)).unwrap();
        let q = e.conic_matrix().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let t = c(rng.gen_range(-3.0..3.0), rng.gen_range(-0.5..0.5));
            let p = e.point_at(t);
            // the point satisfies the implicit equation
            let mut val = cr(0.0);
            for i in 0..3 {
                for j in 0..3 {
                    val += p.h()[i] * q[i][j] * p.h()[j];
                }
            }
            assert!(val.norm() < 1e-10);
            // polar line of the point
            let polar_c = mat_vec(&q, p.h());
            let polar = ProjLine::new(polar_c[0], polar_c[1], polar_c[2]);
            let tl = e.tangent_line(t).unwrap();
            assert!(tl.approx_eq(&polar, 1e-10));
        }
    }

    #[test]
    fn tangent_contains_point() {
        let fam = ConfocalFamily::new(0.8, RigidMotion::new(-0.3, 1.0, 0.5)).unwrap();
        let mirrors = [
            conic_at(fam, cr(2.0)).unwrap(),
            conic_at(fam, cr(0.3)).unwrap(),
            Mirror::parabola(0.7, RigidMotion::new(0.2, -0.4, 0.1)).unwrap(),
            Mirror::circle((c(0.1, 0.2), cr(-0.5)), c(2.0, 0.3)).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for m in &mirrors {
            for _ in 0..100 {
                let t = c(rng.gen_range(-2.0..2.0), rng.gen_range(-0.8..0.8));
                let p = m.point_at(t);
                let tl = m.tangent_line(t).unwrap();
                assert!(tl.incidence_residual(&p) < 1e-12);
            }
        }
    }

    #[test]
    fn intersect_examples() {
        let circle = unit_circle();
        // x-axis ∩ unit circle
        let set = intersect_line_mirror(&ProjLine::real_affine(0.0, 0.0, 1.0), &circle).unwrap();
        assert_eq!(set.entries.len(), 2);
        let mut pts: Vec<f64> = set
            .entries
            .iter()
            .map(|e| e.point.affine().unwrap().0.re)
            .collect();
        pts.sort_by(f64::total_cmp);
        assert!((pts[0] + 1.0).abs() < 1e-14 && (pts[1] - 1.0).abs() < 1e-14);
        // x = 1 is tangent: multiplicity 2
        let set = intersect_line_mirror(&ProjLine::real_affine(-1.0, 1.0, 0.0), &circle).unwrap();
        assert_eq!(set.entries.len(), 1);
        assert_eq!(set.entries[0].multiplicity, 2);
        assert!(set.entries[0]
            .point
            .approx_eq(&ProjPoint::real(1.0, 0.0), 1e-12));
    }

    /// The oracle pulls the conic equation back to the line and checks both
    /// incidences on every returned point.
    #[test]
    fn intersect_matches_resultant_oracle() {
        let fam = ConfocalFamily::new(1.0, RigidMotion::new(0.9, -0.3, 0.4)).unwrap();
        let e = conic_at(fam, cr(3.0)).unwrap();
        let q = e.conic_matrix().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let l = ProjLine::new(
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
            if l.is_infinity_line() {
                continue;
            }
            let set = match intersect_line_mirror(&l, &e) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let mut count = 0;
            for entry in &set.entries {
                assert!(l.incidence_residual(&entry.point) < 1e-10);
                let h = entry.point.h();
                let mut val = cr(0.0);
                for i in 0..3 {
                    for j in 0..3 {
                        val += h[i] * q[i][j] * h[j];
                    }
                }
                assert!(val.norm() < 1e-10);
                // parametrization consistency
                let back = e.point_at(entry.param);
                assert!(back.approx_eq(&entry.point, 1e-9));
                count += entry.multiplicity;
            }
            // non-asymptotic lines meet a conic in two points with multiplicity
            if set.entries.iter().all(|e| e.multiplicity == 1) && set.entries.len() == 2 {
                assert_eq!(count, 2);
            }
        }
    }

    #[test]
    fn confocality_is_exact_across_members() {
        let fam = ConfocalFamily::new(1.3, RigidMotion::new(1.1, 0.3, 0.8)).unwrap();
        let foci = fam.foci();
        for lambda in [2.0, 5.0, 0.4, 1.0] {
            if (lambda - 1.3_f64 * 1.3).abs() < 1e-9 || lambda.abs() < 1e-9 {
                continue;
            }
            let m = conic_at(fam, cr(lambda)).unwrap();
            if let Mirror::Conic { family, .. } = m {
                assert_eq!(family.foci(), foci);
            }
        }
    }

    #[test]
    fn mirror_image_parametrization_is_exactly_symmetric() {
        let axis = ProjLine::real_affine(0.0, 0.0, 1.0);
        let inner = conic_at(ConfocalFamily::axis_aligned(1.0).unwrap(), cr(2.5)).unwrap();
        let img = Mirror::mirror_image(inner.clone(), axis).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let t = c(rng.gen_range(-3.0..3.0), rng.gen_range(-0.5..0.5));
            let p = inner.point_at(t);
            let s = symmetry_about_line(&p, &axis).unwrap();
            assert!(img.point_at(t).approx_eq(&s, 1e-13));
        }
    }

    #[test]
    fn param_of_point_round_trips() {
        let mirrors = [
            Mirror::line(ProjLine::real_affine(0.3, 1.0, -2.0)).unwrap(),
            unit_circle(),
            conic_at(ConfocalFamily::axis_aligned(1.0).unwrap(), cr(4.0)).unwrap(),
            conic_at(ConfocalFamily::axis_aligned(1.0).unwrap(), cr(0.5)).unwrap(),
            Mirror::parabola(-0.8, RigidMotion::new(0.5, 0.1, 0.2)).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for m in &mirrors {
            for _ in 0..100 {
                let t = c(rng.gen_range(-2.5..2.5), rng.gen_range(-1.0..1.0));
                let p = m.point_at_affine(t);
                let t2 = m.param_of_point(p).unwrap();
                let p2 = m.point_at_affine(t2);
                assert!((p.0 - p2.0).norm() + (p.1 - p2.1).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn velocity_is_consistent_with_finite_differences() {
        let fam = ConfocalFamily::new(1.0, RigidMotion::new(0.2, 0.4, -0.1)).unwrap();
        let mirrors = [
            conic_at(fam, cr(2.0)).unwrap(),
            Mirror::parabola(1.2, RigidMotion::identity()).unwrap(),
            Mirror::mirror_image(unit_circle(), ProjLine::real_affine(1.0, 1.0, 1.0)).unwrap(),
        ];
        let h = 1e-6;
        for m in &mirrors {
            for k in 0..20 {
                let t = c(0.3 * k as f64 - 3.0, 0.1);
                let v = m.velocity(t);
                let p1 = m.point_at_affine(t + cr(h));
                let p0 = m.point_at_affine(t - cr(h));
                let fd = ((p1.0 - p0.0) / cr(2.0 * h), (p1.1 - p0.1) / cr(2.0 * h));
                assert!((v.0 - fd.0).norm() + (v.1 - fd.1).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn isotropic_line_mirror_is_rejected() {
        let iso = ProjLine::through_point_dir((cr(0.0), cr(0.0)), (cr(1.0), c(0.0, 1.0)));
        assert!(Mirror::line(iso).is_err());
        assert!(bilinear_form((cr(1.0), c(0.0, 1.0)), (cr(1.0), c(0.0, 1.0))).norm() < 1e-15);
    }
}
