//! Concordant signed distances, framed triangles with a fixed vertex, the
//! triangular line field, its squared-perimeter first integral, and
//! triangular-spiral integration.
//!
//! A state is a triangle `A B C` with `A` fixed, a symmetry line at `B` for
//! the edge pair `(AB, BC)`, a symmetry line at `C` for `(CA, CB)`, and the
//! rotation constraint `AC = H(AB)` for a fixed `H ∈ SO(2, ℂ) \ Id` fixing
//! `A`. The admissible velocities (each moving vertex along its line,
//! differentiated rotation constraint preserved) form a line field whose
//! integral curves project to triangular spirals; the squared perimeter in
//! concordant lengths is its first integral.

use num_complex::Complex64 as C;

use crate::projective::{bilinear_form, c, cr, is_isotropic, DirectionCoord, ProjLine, ProjPoint};
use crate::{Error, Result};

/// A non-trivial complex rotation fixing a center: an element of
/// `SO(2, ℂ) \ Id`, stored as the matrix pair `(cos ρ, sin ρ)` with
/// `cos²ρ + sin²ρ = 1`. On direction coordinates it acts as `z ↦ μ·z` with
/// `μ = e^{2iρ}`.
#[derive(Clone, Copy, Debug)]
pub struct RotationH {
    co: C,
    si: C,
}

impl RotationH {
    pub fn from_matrix(co: C, si: C) -> Result<Self> {
        let unit = co * co + si * si;
        if (unit - cr(1.0)).norm() > 1e-9 {
            return Err(Error::InvalidInput("rotation matrix must satisfy c² + s² = 1".into()));
        }
        if (co - cr(1.0)).norm() < 1e-12 && si.norm() < 1e-12 {
            return Err(Error::InvalidInput("rotation must differ from the identity".into()));
        }
        Ok(RotationH { co, si })
    }

    pub fn from_angle(rho: C) -> Result<Self> {
        Self::from_matrix(rho.cos(), rho.sin())
    }

    /// From the direction multiplier `μ = e^{2iρ}` (square-root branch
    /// choice only flips the rotation by the half turn, which acts the same
    /// way on lines).
    pub fn from_mu(mu: C) -> Result<Self> {
        let e = mu.sqrt();
        Self::from_matrix((e + cr(1.0) / e) / cr(2.0), (e - cr(1.0) / e) / c(0.0, 2.0))
    }

    pub fn apply(&self, v: (C, C)) -> (C, C) {
        (self.co * v.0 - self.si * v.1, self.si * v.0 + self.co * v.1)
    }

    /// The multiplier on direction coordinates.
    pub fn mu(&self) -> C {
        let e = self.co + c(0.0, 1.0) * self.si;
        e * e
    }

    /// Whether the rotation acts trivially on lines (the half turn `-Id`):
    /// then the triangle is collinear through the center.
    pub fn is_half_turn(&self) -> bool {
        (self.mu() - cr(1.0)).norm() < 1e-10
    }
}

fn cross2(a: (C, C), b: (C, C)) -> C {
    a.0 * b.1 - a.1 * b.0
}

fn line_through_dir(p: (C, C), v: (C, C)) -> ProjLine {
    ProjLine::through_point_dir(p, v)
}

/// A framed triangle with fixed center: the state of the triangular line
/// field.
#[derive(Clone, Copy, Debug)]
pub struct FramedTriangleState {
    pub center: (C, C),
    pub rotation: RotationH,
    pub b: (C, C),
    pub c: (C, C),
    pub l_b: ProjLine,
    pub l_c: ProjLine,
}

impl FramedTriangleState {
    /// Validate membership in the framed-triangle variety: vertices
    /// distinct from the center and from each other, edge lines through the
    /// center non-isotropic, rotation constraint `AC = H(AB)`, and the
    /// frame lines genuine symmetry lines of their edge pairs.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let a = self.center;
        let dist = |p: (C, C), q: (C, C)| ((p.0 - q.0).norm_sqr() + (p.1 - q.1).norm_sqr()).sqrt();
        if dist(self.b, a) < 1e-12 || dist(self.c, a) < 1e-12 || dist(self.b, self.c) < 1e-12 {
            return Err(Error::DegenerateInput("triangle vertices collide".into()));
        }
        let ab = (self.b.0 - a.0, self.b.1 - a.1);
        let ac = (self.c.0 - a.0, self.c.1 - a.1);
        for v in [ab, ac] {
            let q = bilinear_form(v, v);
            if q.norm() < 1e-12 * (v.0.norm_sqr() + v.1.norm_sqr()) {
                return Err(Error::IsotropicEdge);
            }
        }
        // rotation constraint on the line pair through the center
        let rot = self.rotation.apply(ab);
        let cross = cross2(ac, rot);
        let scale = (ac.0.norm() + ac.1.norm()) * (rot.0.norm() + rot.1.norm());
        if cross.norm() > tol * scale.max(1e-300) {
            return Err(Error::InvalidInput("rotation constraint AC = H(AB) violated".into()));
        }
        if self.rotation.is_half_turn() {
            // half turn: the triangle is collinear through the center
            if cross2(ab, ac).norm() > tol * scale.max(1e-300) {
                return Err(Error::InvalidInput("half-turn states must be collinear".into()));
            }
        } else if cross2(ab, ac).norm() < 1e-12 * scale {
            return Err(Error::DegenerateInput("edge lines through the center coincide".into()));
        }
        for l in [&self.l_b, &self.l_c] {
            if is_isotropic(l) {
                return Err(Error::DegenerateMirror);
            }
        }
        // frame lines are symmetry lines of their edge pairs
        let bc = (self.c.0 - self.b.0, self.c.1 - self.b.1);
        let check = |l: &ProjLine, e1: (C, C), e2: (C, C)| -> Result<()> {
            let z1 = DirectionCoord::from_vector(e1.0, e1.1);
            let z2 = DirectionCoord::from_vector(e2.0, e2.1);
            let zl = l.direction()?;
            let refl = crate::projective::reflect_direction(&z1, &zl)?;
            let r = refl.chordal_distance(&z2);
            if r > tol {
                return Err(Error::NotAReflection(r));
            }
            if zl.chordal_distance(&z1) < 1e-12 {
                return Err(Error::DegenerateInput("edge lies on its frame line".into()));
            }
            Ok(())
        };
        check(&self.l_b, ab, bc)?;
        check(&self.l_c, ac, bc)?;
        Ok(())
    }
}

/// The two symmetry-line direction candidates of the line pair `(z1, z2)`:
/// directions with `z_L² = z1·z2`.
fn symmetry_direction_candidates(z1: &DirectionCoord, z2: &DirectionCoord) -> [DirectionCoord; 2] {
    let v1 = z1.vector();
    let v2 = z2.vector();
    // direction-coordinate product as a projective pair
    let i = c(0.0, 1.0);
    let n = (v1.1 - i * v1.0) * (v2.1 - i * v2.0);
    let d = (v1.1 + i * v1.0) * (v2.1 + i * v2.0);
    let (sn, sd) = (n.sqrt(), d.sqrt());
    [
        DirectionCoord::from_z_pair(sn, sd),
        DirectionCoord::from_z_pair(-sn, sd),
    ]
}

/// Signed lengths `(|BA|, |BC|)` normalized so that the symmetry about `L`
/// transports the distance function on `BA` to minus the one on `BC`
/// (Definition of concordance). Unique up to a simultaneous sign flip; the
/// ratio is deterministic.
pub fn concordant_pair(a: (C, C), b: (C, C), c2: (C, C), l: &ProjLine) -> Result<(C, C)> {
    let u = (a.0 - b.0, a.1 - b.1);
    let q = bilinear_form(u, u);
    if q.norm() < 1e-13 * (u.0.norm_sqr() + u.1.norm_sqr()) {
        return Err(Error::IsotropicEdge);
    }
    let r_ab = q.sqrt();
    // reflect the direction vector of BA about the line direction
    let lv = l.direction()?.vector();
    let ql = bilinear_form(lv, lv);
    if ql.norm() < 1e-13 * (lv.0.norm_sqr() + lv.1.norm_sqr()) {
        return Err(Error::DegenerateMirror);
    }
    let s = cr(2.0) * bilinear_form(u, lv) / ql;
    let w = (s * lv.0 - u.0, s * lv.1 - u.1);
    // C = B + τ·w on the reflected ray
    let d = (c2.0 - b.0, c2.1 - b.1);
    let qd = bilinear_form(d, d);
    if qd.norm() < 1e-13 * (d.0.norm_sqr() + d.1.norm_sqr()) {
        return Err(Error::IsotropicEdge);
    }
    let tau = if w.0.norm() >= w.1.norm() { d.0 / w.0 } else { d.1 / w.1 };
    let residual = ((d.0 - tau * w.0).norm() + (d.1 - tau * w.1).norm())
        / (d.0.norm() + d.1.norm()).max(1e-300);
    if residual > 1e-8 {
        return Err(Error::NotAReflection(residual));
    }
    Ok((r_ab, -tau * r_ab))
}

/// The squared perimeter `(|AB| + |BC| + |CA|)²` with `|AB|, |BC|`
/// concordant at `L_B` and `|BC|, |CA|` concordant at `L_C`: a single-valued
/// first integral of the line field.
pub fn squared_perimeter(s: &FramedTriangleState) -> Result<C> {
    let (l_ab, l_bc) = concordant_pair(s.center, s.b, s.c, &s.l_b)?;
    let (l_cb, l_ca) = concordant_pair(s.b, s.c, s.center, &s.l_c)?;
    // align the two measurements of |BC| (they agree up to sign)
    let sign = if (l_bc - l_cb).norm() <= (l_bc + l_cb).norm() { cr(1.0) } else { cr(-1.0) };
    let p = l_ab + l_bc + sign * l_ca;
    Ok(p * p)
}

/// The line-field direction at a state: velocities of `B` along `L_B` and
/// `C` along `L_C` solving the differentiated rotation constraint,
/// normalized to unit speed of `B`. The kernel must be one-dimensional.
pub fn line_field_direction(s: &FramedTriangleState) -> Result<((C, C), (C, C))> {
    let a = s.center;
    let ab = (s.b.0 - a.0, s.b.1 - a.1);
    let ac = (s.c.0 - a.0, s.c.1 - a.1);
    let u_b = s.l_b.direction()?.vector();
    let u_c = s.l_c.direction()?.vector();
    // d/dt [ (C - A) ∧ R(B - A) ] = 0:
    //   γ·(u_C ∧ R(B-A)) + β·((C-A) ∧ R(u_B)) = 0
    let coeff_beta = cross2(ac, s.rotation.apply(u_b));
    let coeff_gamma = cross2(u_c, s.rotation.apply(ab));
    let scale = (ac.0.norm() + ac.1.norm() + 1.0) * (u_b.0.norm() + u_b.1.norm());
    if coeff_beta.norm() < 1e-13 * scale && coeff_gamma.norm() < 1e-13 * scale {
        return Err(Error::SingularState("degenerate constraint kernel".into()));
    }
    let beta = coeff_gamma;
    let gamma = -coeff_beta;
    let mut v_b = (beta * u_b.0, beta * u_b.1);
    let mut v_c = (gamma * u_c.0, gamma * u_c.1);
    // canonicalize the complex phase rotation-equivariantly: the bilinear
    // form is rotation-invariant, so dividing by √Q(v_B) leaves only a sign
    let qb = bilinear_form(v_b, v_b);
    if qb.norm() < 1e-20 {
        return Err(Error::SingularState("vanishing or isotropic B-speed".into()));
    }
    let root = qb.sqrt();
    v_b = (v_b.0 / root, v_b.1 / root);
    v_c = (v_c.0 / root, v_c.1 / root);
    let speed_b = (v_b.0.norm_sqr() + v_b.1.norm_sqr()).sqrt();
    if speed_b < 1e-13 {
        return Err(Error::SingularState("vanishing B-speed".into()));
    }
    let inv = cr(1.0 / speed_b);
    Ok(((v_b.0 * inv, v_b.1 * inv), (v_c.0 * inv, v_c.1 * inv)))
}

/// One recorded state of a spiral trajectory.
#[derive(Clone, Copy, Debug)]
pub struct SpiralSample {
    pub time: f64,
    pub b: (C, C),
    pub c: (C, C),
    pub p_squared: C,
}

#[derive(Clone, Debug)]
pub struct SpiralTrajectory {
    pub samples: Vec<SpiralSample>,
    /// Set when the integration stopped at a singular state.
    pub truncated: Option<String>,
}

/// Rebuild the frame lines at `(b, c)` nearest to the carried directions.
fn frame_lines_near(
    center: (C, C),
    b: (C, C),
    c2: (C, C),
    near_b: &DirectionCoord,
    near_c: &DirectionCoord,
) -> Result<(ProjLine, ProjLine, DirectionCoord, DirectionCoord)> {
    let ab = DirectionCoord::from_vector(b.0 - center.0, b.1 - center.1);
    let bc = DirectionCoord::from_vector(c2.0 - b.0, c2.1 - b.1);
    let ca = DirectionCoord::from_vector(center.0 - c2.0, center.1 - c2.1);
    let cand_b = symmetry_direction_candidates(&ab, &bc);
    let cand_c = symmetry_direction_candidates(&ca, &bc);
    let pick = |cands: [DirectionCoord; 2], near: &DirectionCoord| {
        if cands[0].chordal_distance(near) <= cands[1].chordal_distance(near) {
            cands[0]
        } else {
            cands[1]
        }
    };
    let db = pick(cand_b, near_b);
    let dc = pick(cand_c, near_c);
    Ok((
        line_through_dir(b, db.vector()),
        line_through_dir(c2, dc.vector()),
        db,
        dc,
    ))
}

struct FieldContext {
    dir_b: DirectionCoord,
    dir_c: DirectionCoord,
    velocity_sign: Option<(C, C, C, C)>,
}

fn eval_field(
    center: (C, C),
    rotation: RotationH,
    y: &[C; 4],
    ctx: &FieldContext,
) -> Result<[C; 4]> {
    let b = (y[0], y[1]);
    let c2 = (y[2], y[3]);
    let (l_b, l_c, _, _) = frame_lines_near(center, b, c2, &ctx.dir_b, &ctx.dir_c)?;
    let state = FramedTriangleState { center, rotation, b, c: c2, l_b, l_c };
    let (vb, vc) = line_field_direction(&state)?;
    let mut v = [vb.0, vb.1, vc.0, vc.1];
    if let Some(prev) = &ctx.velocity_sign {
        let prevv = [prev.0, prev.1, prev.2, prev.3];
        let dot: C = v.iter().zip(prevv.iter()).map(|(x, p)| x * p.conj()).sum();
        if dot.re < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
    }
    Ok(v)
}

/// Integrate the triangular line field from a validated state with an
/// embedded Dormand–Prince 5(4) pair at relative tolerance `1e-10`,
/// recording `steps` accepted steps of nominal size `h`.
///
/// The frame lines and the field sign are tracked continuously; reaching a
/// singular state truncates the trajectory with a diagnostic.
pub fn integrate_spiral(s0: &FramedTriangleState, steps: usize, h: f64) -> Result<SpiralTrajectory> {
    integrate_spiral_oriented(s0, steps, h, None)
}

/// As [`integrate_spiral`], with an explicit initial orientation of the
/// line field (the field direction is defined up to sign).
pub fn integrate_spiral_oriented(
    s0: &FramedTriangleState,
    steps: usize,
    h: f64,
    initial_velocity: Option<[C; 4]>,
) -> Result<SpiralTrajectory> {
    s0.validate(1e-8)?;
    let center = s0.center;
    let rotation = s0.rotation;
    let mut y = [s0.b.0, s0.b.1, s0.c.0, s0.c.1];
    let mut ctx = FieldContext {
        dir_b: s0.l_b.direction()?,
        dir_c: s0.l_c.direction()?,
        velocity_sign: initial_velocity.map(|v| (v[0], v[1], v[2], v[3])),
    };
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(SpiralSample { time: 0.0, b: s0.b, c: s0.c, p_squared: squared_perimeter(s0)? });

    // Dormand–Prince 5(4) coefficients
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    const REL_TOL: f64 = 1e-10;

    let mut dt = h;
    let mut time = 0.0;
    let mut accepted = 0usize;
    while accepted < steps {
        let k1 = match eval_field(center, rotation, &y, &ctx) {
            Ok(v) => v,
            Err(e) => {
                return Ok(SpiralTrajectory { samples, truncated: Some(e.to_string()) });
            }
        };
        if ctx.velocity_sign.is_none() {
            ctx.velocity_sign = Some((k1[0], k1[1], k1[2], k1[3]));
        }
        let mut ks: Vec<[C; 4]> = vec![k1];
        let mut failed = false;
        for stage in 0..6 {
            let mut ys = y;
            for (j, k) in ks.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for d in 0..4 {
                        ys[d] += cr(dt * a) * k[d];
                    }
                }
            }
            match eval_field(center, rotation, &ys, &ctx) {
                Ok(v) => ks.push(v),
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            dt *= 0.5;
            if dt.abs() < 1e-14 {
                return Ok(SpiralTrajectory { samples, truncated: Some("singular state".into()) });
            }
            continue;
        }
        let mut y5 = y;
        let mut y4 = y;
        for (j, k) in ks.iter().enumerate() {
            for d in 0..4 {
                y5[d] += cr(dt * B5[j]) * k[d];
                y4[d] += cr(dt * B4[j]) * k[d];
            }
        }
        let scale: f64 = y.iter().map(|z| z.norm()).sum::<f64>() + 1.0;
        let err: f64 = y5.iter().zip(y4.iter()).map(|(a, b)| (a - b).norm()).sum::<f64>() / scale;
        if err > REL_TOL {
            dt *= (REL_TOL / err).powf(0.2) * 0.9;
            continue;
        }
        // accept
        y = y5;
        time += dt;
        accepted += 1;
        // refresh the carried frame directions and field sign
        let b = (y[0], y[1]);
        let c2 = (y[2], y[3]);
        let (l_b, l_c, db, dc) = match frame_lines_near(center, b, c2, &ctx.dir_b, &ctx.dir_c) {
            Ok(t) => t,
            Err(e) => {
                return Ok(SpiralTrajectory { samples, truncated: Some(e.to_string()) });
            }
        };
        ctx.dir_b = db;
        ctx.dir_c = dc;
        ctx.velocity_sign = Some((ks[6][0], ks[6][1], ks[6][2], ks[6][3]));
        let state = FramedTriangleState { center, rotation, b, c: c2, l_b, l_c };
        let p2 = match squared_perimeter(&state) {
            Ok(p) => p,
            Err(e) => {
                return Ok(SpiralTrajectory { samples, truncated: Some(e.to_string()) });
            }
        };
        samples.push(SpiralSample { time, b, c: c2, p_squared: p2 });
        if err > 0.0 {
            dt = (dt * (REL_TOL / err).powf(0.2) * 0.9).min(h * 5.0).max(h / 100.0);
        }
    }
    Ok(SpiralTrajectory { samples, truncated: None })
}

/// Build a validated state from vertices and carried frame-line choices
/// nearest to the given directions.
pub fn state_from_vertices(
    center: (C, C),
    rotation: RotationH,
    b: (C, C),
    c2: (C, C),
    near_b: &DirectionCoord,
    near_c: &DirectionCoord,
) -> Result<FramedTriangleState> {
    let (l_b, l_c, _, _) = frame_lines_near(center, b, c2, near_b, near_c)?;
    Ok(FramedTriangleState { center, rotation, b, c: c2, l_b, l_c })
}

impl DirectionCoord {
    /// Projective constructor from a numerator/denominator pair.
    pub fn from_z_pair(num: C, den: C) -> Self {
        let m = num.norm().max(den.norm());
        assert!(m > 0.0, "degenerate direction pair");
        let v1 = c(0.0, 1.0) * (num - den) / cr(2.0);
        let v2 = (num + den) / cr(2.0);
        DirectionCoord::from_vector(v1 / m, v2 / m)
    }
}
