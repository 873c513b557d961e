//! Framed k-gons, the Birkhoff distribution, concordant length collections
//! and the component test, tangent functions, the Λ locus, and the explicit
//! integral-plane normal form for quadrilaterals.
//!
//! A framed k-gon is a k-gon with a symmetry line of the two adjacent edges
//! chosen at every vertex. The Birkhoff distribution is the intersection of
//! the product contact distribution (each vertex velocity along its frame
//! line) with the tangent space of the reflection-constraint variety; it is
//! computed here as a numerical null space and is k-dimensional at generic
//! states. For quadrilaterals the non-trivial integral 2-planes admit a
//! normal form in speed coordinates whose off-pattern entries satisfy
//! `ηη' = l₂l₄ - l₁l₃` in concordant lengths.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use crate::projective::{bilinear_form, c, cr, is_isotropic, DirectionCoord, ProjLine};
use crate::{Error, Result};

/// One vertex of a framed k-gon: the point and the frame line through it.
#[derive(Clone, Copy, Debug)]
pub struct FramedVertex {
    pub point: (C, C),
    pub line: ProjLine,
}

/// A framed k-gon: the ambient object of the Birkhoff distribution.
#[derive(Clone, Debug)]
pub struct FramedKGon {
    pub vertices: Vec<FramedVertex>,
}

impl FramedKGon {
    pub fn new(vertices: Vec<FramedVertex>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput("a framed gon needs at least 3 vertices".into()));
        }
        let g = FramedKGon { vertices };
        g.validate(1e-8)?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn edge(&self, j: usize) -> (C, C) {
        let k = self.len();
        let a = self.vertices[j].point;
        let b = self.vertices[(j + 1) % k].point;
        (b.0 - a.0, b.1 - a.1)
    }

    /// Membership test: neighbors distinct, adjacent edges symmetric about
    /// the frame line, the three lines at each vertex distinct and
    /// non-isotropic.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let k = self.len();
        for j in 0..k {
            let here = self.vertices[j].point;
            let prev = self.vertices[(j + k - 1) % k].point;
            let next = self.vertices[(j + 1) % k].point;
            let to_prev = (prev.0 - here.0, prev.1 - here.1);
            let to_next = (next.0 - here.0, next.1 - here.1);
            if (to_prev.0.norm() + to_prev.1.norm()) < 1e-12
                || (to_next.0.norm() + to_next.1.norm()) < 1e-12
            {
                return Err(Error::DegenerateInput("coinciding neighbor vertices".into()));
            }
            let line = &self.vertices[j].line;
            if is_isotropic(line) {
                return Err(Error::DegenerateMirror);
            }
            if line.incidence_residual(&crate::projective::ProjPoint::finite(here.0, here.1)) > tol {
                return Err(Error::InvalidInput("frame line misses its vertex".into()));
            }
            let d_prev = DirectionCoord::from_vector(to_prev.0, to_prev.1);
            let d_next = DirectionCoord::from_vector(to_next.0, to_next.1);
            for d in [&d_prev, &d_next] {
                if d.is_isotropic() {
                    return Err(Error::IsotropicEdge);
                }
            }
            let d_line = line.direction()?;
            let reflected = crate::projective::reflect_direction(&d_prev, &d_line)?;
            let r = reflected.chordal_distance(&d_next);
            if r > tol {
                return Err(Error::NotAReflection(r));
            }
            // the three lines are pairwise distinct
            if d_prev.chordal_distance(&d_next) < 1e-12
                || d_prev.chordal_distance(&d_line) < 1e-12
                || d_next.chordal_distance(&d_line) < 1e-12
            {
                return Err(Error::DegenerateInput("adjacent lines coincide".into()));
            }
        }
        Ok(())
    }
}

/// The α-framing of a real k-gon: the exterior bisector at vertices with
/// `α_j = +1`, the interior bisector at `α_j = -1`.
pub fn frame_real_kgon(points: &[(f64, f64)], alpha: &[i8]) -> Result<FramedKGon> {
    let k = points.len();
    if alpha.len() != k {
        return Err(Error::InvalidInput("one sign per vertex".into()));
    }
    let mut vertices = Vec::with_capacity(k);
    for j in 0..k {
        let here = points[j];
        let prev = points[(j + k - 1) % k];
        let next = points[(j + 1) % k];
        let unit = |p: (f64, f64)| {
            let n = (p.0 - here.0).hypot(p.1 - here.1);
            if n < 1e-14 {
                return Err(Error::DegenerateInput("coinciding vertices".into()));
            }
            Ok(((p.0 - here.0) / n, (p.1 - here.1) / n))
        };
        let u = unit(prev)?;
        let v = unit(next)?;
        let dir = if alpha[j] > 0 {
            (u.0 - v.0, u.1 - v.1)
        } else {
            (u.0 + v.0, u.1 + v.1)
        };
        if dir.0.hypot(dir.1) < 1e-12 {
            return Err(Error::DegenerateInput("degenerate bisector at a flat vertex".into()));
        }
        let line = ProjLine::through_point_dir((cr(here.0), cr(here.1)), (cr(dir.0), cr(dir.1)));
        vertices.push(FramedVertex { point: (cr(here.0), cr(here.1)), line });
    }
    FramedKGon::new(vertices)
}

/// Linear part of the symmetry about a line on direction vectors.
fn sym_dir(l: &ProjLine, v: (C, C)) -> Result<(C, C)> {
    let u = l.direction()?.vector();
    let q = bilinear_form(u, u);
    if q.norm() < 1e-14 * (u.0.norm_sqr() + u.1.norm_sqr()) {
        return Err(Error::DegenerateMirror);
    }
    let s = cr(2.0) * bilinear_form(v, u) / q;
    Ok((s * u.0 - v.0, s * u.1 - v.1))
}

/// Propagate the concordance sign constraint around the cycle and return
/// the concordant length collection `l_j = |A_j A_{j+1}|` when the sign
/// holonomy is `+1`, `None` when it is `-1`.
///
/// The collection, when present, is unique up to a simultaneous sign flip.
pub fn concordant_lengths(g: &FramedKGon) -> Result<Option<Vec<C>>> {
    let k = g.len();
    let mut lengths = Vec::with_capacity(k);
    // edge j runs A_j -> A_{j+1}
    let mut qs = Vec::with_capacity(k);
    for j in 0..k {
        let u = g.edge(j);
        let q = bilinear_form(u, u);
        if q.norm() < 1e-13 * (u.0.norm_sqr() + u.1.norm_sqr()) {
            return Err(Error::IsotropicEdge);
        }
        qs.push(q);
    }
    let mut s = qs[0].sqrt();
    lengths.push(s);
    // at vertex A_j (j >= 1): transport the branch from edge j-1 to edge j
    for j in 1..k {
        let here = g.vertices[j].point;
        let prev = g.vertices[j - 1].point;
        let next = g.vertices[(j + 1) % k].point;
        let v_in = (prev.0 - here.0, prev.1 - here.1);
        let v_out = (next.0 - here.0, next.1 - here.1);
        let w = sym_dir(&g.vertices[j].line, v_in)?;
        let kappa = if w.0.norm() >= w.1.norm() { v_out.0 / w.0 } else { v_out.1 / w.1 };
        let raw = -s / kappa;
        // snap to the exact square root branch to stop numerical drift
        let root = qs[j].sqrt();
        s = if (raw - root).norm() <= (raw + root).norm() { root } else { -root };
        lengths.push(s);
    }
    // holonomy: close the cycle at vertex A_0 between edge k-1 and edge 0
    let here = g.vertices[0].point;
    let prev = g.vertices[k - 1].point;
    let next = g.vertices[1].point;
    let v_in = (prev.0 - here.0, prev.1 - here.1);
    let v_out = (next.0 - here.0, next.1 - here.1);
    let w = sym_dir(&g.vertices[0].line, v_in)?;
    let kappa = if w.0.norm() >= w.1.norm() { v_out.0 / w.0 } else { v_out.1 / w.1 };
    let closed = -lengths[k - 1] / kappa;
    let holonomy = closed / lengths[0];
    if (holonomy - cr(1.0)).norm() < (holonomy + cr(1.0)).norm() {
        Ok(Some(lengths))
    } else {
        Ok(None)
    }
}

/// Per-vertex chart data for the numerical distribution computation.
struct VertexChart {
    /// Q-normalized frame-line direction (the ν-coordinate unit).
    unit: (C, C),
    /// `true`: slope chart `m = u_y/u_x`, contact form `dy - m dx`;
    /// `false`: slope chart `m = u_x/u_y`, contact form `dx - m dy`.
    chart_x: bool,
    /// Current slope value.
    slope: C,
}

fn vertex_chart(line: &ProjLine) -> Result<VertexChart> {
    let u = line.direction()?.vector();
    let q = bilinear_form(u, u);
    let root = q.sqrt();
    let unit = (u.0 / root, u.1 / root);
    let chart_x = u.0.norm() >= u.1.norm();
    let slope = if chart_x { u.1 / u.0 } else { u.0 / u.1 };
    Ok(VertexChart { unit, chart_x, slope })
}

/// Reflection-constraint residuals of a perturbed framed gon. The
/// perturbation moves each vertex along its frame line by `β_j` (measured
/// against the Q-unit direction) and tilts each frame slope by `δ_j`.
///
/// Evaluated without any normalization: the residuals are polynomial in
/// the perturbation, so the Jacobian stencil's analyticity pays off.
fn constraint_residuals(g: &FramedKGon, charts: &[VertexChart], w: &[C]) -> Result<Vec<C>> {
    let k = g.len();
    let i = c(0.0, 1.0);
    let mut points = Vec::with_capacity(k);
    let mut dirs = Vec::with_capacity(k);
    for j in 0..k {
        let beta = w[2 * j];
        let delta = w[2 * j + 1];
        let p = g.vertices[j].point;
        let u = charts[j].unit;
        points.push((p.0 + beta * u.0, p.1 + beta * u.1));
        let m = charts[j].slope + delta;
        let v = if charts[j].chart_x { (cr(1.0), m) } else { (m, cr(1.0)) };
        dirs.push(v);
    }
    // direction-chart pair of a vector, unnormalized: (v2 - i v1, v2 + i v1)
    let pair = |v: (C, C)| (v.1 - i * v.0, v.1 + i * v.0);
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let here = points[j];
        let prev = points[(j + k - 1) % k];
        let next = points[(j + 1) % k];
        let (pn, pd) = pair((prev.0 - here.0, prev.1 - here.1));
        let (nn, nd) = pair((next.0 - here.0, next.1 - here.1));
        let (zn, zd) = pair(dirs[j]);
        // reflected pair (zn²·pd : zd²·pn) crossed with the next edge
        out.push(zn * zn * pd * nd - zd * zd * pn * nn);
    }
    Ok(out)
}

/// An orthonormal basis of the Birkhoff distribution at a framed gon, in
/// the per-vertex coordinates `(β_j, δ_j)`: speed along the frame line
/// (against the Q-unit direction) and frame-slope rate.
#[derive(Clone, Debug)]
pub struct DistributionBasis {
    pub vectors: Vec<Vec<C>>,
    pub singular_values: Vec<f64>,
    charts_chart_x: Vec<bool>,
    charts_unit: Vec<(C, C)>,
}

impl DistributionBasis {
    /// Vertex velocity `Ȧ_j = β_j·û_j` of a tangent vector.
    pub fn vertex_velocity(&self, v: &[C], j: usize) -> (C, C) {
        let u = self.charts_unit[j];
        (v[2 * j] * u.0, v[2 * j] * u.1)
    }

    /// Rate of the chart abscissa at vertex `j` for a tangent vector: the
    /// `dx_j` (or `dy_j`) leg of the contact 2-form.
    fn abscissa_rate(&self, v: &[C], j: usize) -> C {
        let u = self.charts_unit[j];
        if self.charts_chart_x[j] {
            v[2 * j] * u.0
        } else {
            v[2 * j] * u.1
        }
    }

    /// The contact 2-form at vertex `j` evaluated on a pair of tangent
    /// vectors: `dx_j ∧ dm_j`.
    pub fn contact_two_form(&self, j: usize, a: &[C], b: &[C]) -> C {
        self.abscissa_rate(a, j) * b[2 * j + 1] - self.abscissa_rate(b, j) * a[2 * j + 1]
    }
}

/// Dimension and basis of the Birkhoff distribution at a framed gon:
/// numerically intersect the constraint tangent space with the product
/// contact distribution. Expected dimension `k` at generic states.
pub fn distribution_dimension(g: &FramedKGon) -> Result<(usize, DistributionBasis)> {
    g.validate(1e-8)?;
    let k = g.len();
    let charts: Vec<VertexChart> = g
        .vertices
        .iter()
        .map(|v| vertex_chart(&v.line))
        .collect::<Result<Vec<_>>>()?;
    let n = 2 * k;
    let eps = 3e-3;
    // Jacobian of the k constraints: the residuals are analytic in the
    // perturbation, so averaging the real and imaginary central stencils
    // cancels the third-derivative term
    let mut jac = DMatrix::<C>::zeros(n, n);
    let mut w = vec![cr(0.0); n];
    for col in 0..n {
        w[col] = cr(eps);
        let plus = constraint_residuals(g, &charts, &w)?;
        w[col] = cr(-eps);
        let minus = constraint_residuals(g, &charts, &w)?;
        w[col] = c(0.0, eps);
        let iplus = constraint_residuals(g, &charts, &w)?;
        w[col] = c(0.0, -eps);
        let iminus = constraint_residuals(g, &charts, &w)?;
        w[col] = cr(0.0);
        for row in 0..k {
            let d_re = (plus[row] - minus[row]) / cr(2.0 * eps);
            let d_im = (iplus[row] - iminus[row]) / c(0.0, 2.0 * eps);
            jac[(row, col)] = (d_re + d_im) / cr(2.0);
        }
    }
    let svd = jac.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested v_t");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, b| a.max(*b));
    let tol = 1e-7 * smax.max(1e-300);
    let mut vectors = Vec::new();
    let mut singular_values = Vec::new();
    for i in 0..svd.singular_values.len() {
        singular_values.push(svd.singular_values[i]);
        if svd.singular_values[i] <= tol {
            let row: Vec<C> = (0..n).map(|c2| vt[(i, c2)].conj()).collect();
            vectors.push(row);
        }
    }
    let dim = vectors.len();
    Ok((
        dim,
        DistributionBasis {
            vectors,
            singular_values,
            charts_chart_x: charts.iter().map(|c2| c2.chart_x).collect(),
            charts_unit: charts.iter().map(|c2| c2.unit).collect(),
        },
    ))
}

/// The four tangent functions of a framed quadrilateral:
/// `t_j = i(z_j - w_j)/(z_j + w_j)` with `z_j` the direction coordinate of
/// the frame-line perpendicular and `w_j` of the outgoing edge. For real
/// convex data this is the tangent of the angle between them. Non-vanishing
/// on valid quadrilaterals; `z_j = ±w_j` is a degeneracy.
pub fn tangent_functions(g: &FramedKGon) -> Result<Vec<C>> {
    let k = g.len();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let z = g.vertices[j].line.direction()?.perpendicular();
        let e = g.edge(j);
        let w = DirectionCoord::from_vector(e.0, e.1);
        let (zn, zd) = z.pair();
        let (wn, wd) = w.pair();
        let num = zn * wd - zd * wn;
        let den = zn * wd + zd * wn;
        let scale = num.norm().max(den.norm()).max(1e-300);
        if den.norm() <= 1e-11 * scale || num.norm() <= 1e-11 * scale {
            return Err(Error::DegenerateInput(
                "tangent function degenerate: frame perpendicular meets the edge".into(),
            ));
        }
        out.push(c(0.0, 1.0) * num / den);
    }
    Ok(out)
}

/// `l₁l₃ - l₂l₄` in concordant lengths: zero exactly on the Λ locus.
pub fn lambda_residual(g: &FramedKGon) -> Result<C> {
    if g.len() != 4 {
        return Err(Error::InvalidInput("lambda residual is a quadrilateral notion".into()));
    }
    let ls = concordant_lengths(g)?.ok_or(Error::ComponentAbsent)?;
    Ok(ls[0] * ls[2] - ls[1] * ls[3])
}

/// Membership tolerance for the Λ locus.
pub fn on_lambda(g: &FramedKGon) -> Result<bool> {
    let ls = concordant_lengths(g)?.ok_or(Error::ComponentAbsent)?;
    let residual = (ls[0] * ls[2] - ls[1] * ls[3]).norm();
    let scale = (ls[0] * ls[2]).norm().max((ls[1] * ls[3]).norm());
    Ok(residual < 1e-9 * scale.max(1e-300))
}

/// A non-trivial integral 2-plane of the Birkhoff distribution at a framed
/// quadrilateral, in the speed-coordinate normal form
/// `(0, l₁, η, -l₄) / (l₁, 0, -l₂, η')` with `ηη' = l₂l₄ - l₁l₃`.
#[derive(Clone, Debug)]
pub struct IntegralPlane {
    /// Rows in the ν-coordinates.
    pub nu_basis: [[C; 4]; 2],
    /// Rows expressed in the local `(β_j, δ_j)` coordinates.
    pub tangent_basis: [Vec<C>; 2],
    pub eta: C,
    pub eta_prime: C,
    /// Residual of the normal-form pattern match (the `-l₂`, `-l₄` slots).
    pub pattern_residual: f64,
    /// Worst contact 2-form value on the plane (integral-element defect).
    pub two_form_residual: f64,
}

/// The ν-coordinates of a tangent vector: the vertex velocity measured
/// against the incoming edge normalized by its concordant length,
/// `ν_j = (E_j^in ∧ Ȧ_j) / l_{j-1}`. On the distribution this equals the
/// outgoing-edge version, by concordance.
pub fn nu_coordinates(g: &FramedKGon, lengths: &[C], basis: &DistributionBasis, v: &[C]) -> Vec<C> {
    let k = g.len();
    (0..k)
        .map(|j| {
            let here = g.vertices[j].point;
            let prev = g.vertices[(j + k - 1) % k].point;
            let e_in = (here.0 - prev.0, here.1 - prev.1);
            let vel = basis.vertex_velocity(v, j);
            (e_in.0 * vel.1 - e_in.1 * vel.0) / lengths[(j + k - 1) % k]
        })
        .collect()
}

struct PlaneFamily {
    basis: DistributionBasis,
    lengths: Vec<C>,
    /// Spanning pairs of non-trivial members along the family, local coords.
    candidates: Vec<[Vec<C>; 2]>,
}

/// Solve the linear Plücker system of the four contact 2-forms on the
/// distribution and pick one decomposable non-trivial solution: the
/// integral 2-planes at a quadrilateral form a one-parameter family, and
/// any member exposes the normal-form data.
fn plane_family(g: &FramedKGon) -> Result<PlaneFamily> {
    if g.len() != 4 {
        return Err(Error::InvalidInput("integral planes are a quadrilateral notion".into()));
    }
    let lengths = concordant_lengths(g)?.ok_or(Error::ComponentAbsent)?;
    let (dim, basis) = distribution_dimension(g)?;
    if dim != 4 {
        return Err(Error::SingularState(format!("distribution dimension {dim} instead of 4")));
    }
    let pairs: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut m = DMatrix::<C>::zeros(6, 6);
    for j in 0..4 {
        for (col, (a, b)) in pairs.iter().enumerate() {
            m[(j, col)] = basis.contact_two_form(j, &basis.vectors[*a], &basis.vectors[*b]);
        }
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested v_t");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, b| a.max(*b));
    let null: Vec<Vec<C>> = (0..6)
        .filter(|i| svd.singular_values[*i] <= 1e-7 * smax.max(1e-300))
        .map(|i| (0..6).map(|c2| vt[(i, c2)].conj()).collect())
        .collect();
    if null.len() != 3 {
        return Err(Error::SingularState(format!(
            "integral-plane system has nullity {} instead of 3",
            null.len()
        )));
    }
    let quad = |p: &[C]| p[0] * p[5] - p[1] * p[4] + p[2] * p[3];
    let bil = |p: &[C], q: &[C]| {
        (p[0] * q[5] + q[0] * p[5] - p[1] * q[4] - q[1] * p[4] + p[2] * q[3] + q[2] * p[3])
            / cr(2.0)
    };
    // decomposable bivectors on the pencil q2 + x q0 + y q1: candidates on
    // the one-parameter family, from which the best-conditioned member is
    // kept
    let (q0, q1, q2) = (&null[0], &null[1], &null[2]);
    let mut candidates: Vec<[Vec<C>; 2]> = Vec::new();
    for xi in [0.37, -0.61, 1.23, 0.0, 2.9, -1.7] {
        let base: Vec<C> = (0..6).map(|i| q2[i] + cr(xi) * q0[i]).collect();
        let a2 = quad(q1);
        let b2 = cr(2.0) * bil(&base, q1);
        let c2 = quad(&base);
        let scale = a2.norm().max(b2.norm()).max(c2.norm());
        if a2.norm() <= 1e-12 * scale {
            continue;
        }
        let disc = (b2 * b2 - cr(4.0) * a2 * c2).sqrt();
        for sign in [1.0, -1.0] {
            let y = (-b2 + cr(sign) * disc) / (cr(2.0) * a2);
            let p: Vec<C> = (0..6).map(|i| base[i] + y * q1[i]).collect();
            let pn: f64 = p.iter().map(|z| z.norm_sqr()).sum::<f64>();
            if quad(&p).norm() > 1e-8 * pn.max(1e-300) {
                continue;
            }
            let mut pm = [[cr(0.0); 4]; 4];
            for (idx, (a, b)) in pairs.iter().enumerate() {
                pm[*a][*b] = p[idx];
                pm[*b][*a] = -p[idx];
            }
            let mut cols: Vec<(f64, usize)> = (0..4)
                .map(|c2| ((0..4).map(|r| pm[r][c2].norm_sqr()).sum::<f64>(), c2))
                .collect();
            cols.sort_by(|u, v| v.0.total_cmp(&u.0));
            let to_local = |w: &[C; 4]| -> Vec<C> {
                let mut t = vec![cr(0.0); basis.vectors[0].len()];
                for (a, coeff) in w.iter().enumerate() {
                    for (i, comp) in basis.vectors[a].iter().enumerate() {
                        t[i] += coeff * comp;
                    }
                }
                t
            };
            let ucol = core::array::from_fn::<C, 4, _>(|r| pm[r][cols[0].1]);
            let vcol = core::array::from_fn::<C, 4, _>(|r| pm[r][cols[1].1]);
            candidates.push([to_local(&ucol), to_local(&vcol)]);
        }
    }
    if candidates.is_empty() {
        return Err(Error::SingularState("no decomposable integral bivector".into()));
    }
    Ok(PlaneFamily { basis, lengths, candidates })
}

/// Extract `(η, η')` and the normal-form rows of a given 2-plane (two
/// spanning tangent vectors in local coordinates) against the concordant
/// lengths.
fn extract_normal_form(
    g: &FramedKGon,
    lengths: &[C],
    basis: &DistributionBasis,
    span: &[Vec<C>; 2],
) -> Result<IntegralPlane> {
    let nu_u = nu_coordinates(g, lengths, basis, &span[0]);
    let nu_v = nu_coordinates(g, lengths, basis, &span[1]);
    let l = lengths;
    let combine = |a: C, b: C| -> Vec<C> {
        (0..4).map(|i| a * nu_u[i] + b * nu_v[i]).collect()
    };
    // r1 kills the first slot, r2 the second
    let r1_raw = combine(nu_v[0], -nu_u[0]);
    let r2_raw = combine(nu_v[1], -nu_u[1]);
    if r1_raw[1].norm() < 1e-12 || r2_raw[0].norm() < 1e-12 {
        return Err(Error::SingularState("trivial plane: a vertex projection vanishes".into()));
    }
    let r1: Vec<C> = r1_raw.iter().map(|z| z * l[0] / r1_raw[1]).collect();
    let r2: Vec<C> = r2_raw.iter().map(|z| z * l[0] / r2_raw[0]).collect();
    let pattern_residual = (r2[2] + l[1]).norm() / l[1].norm() + (r1[3] + l[3]).norm() / l[3].norm();
    let eta = r1[2];
    let eta_prime = r2[3];
    // tangent-space rows corresponding to the reduced nu rows
    let tangent_r1: Vec<C> = span[0]
        .iter()
        .zip(span[1].iter())
        .map(|(a, b)| nu_v[0] * a - nu_u[0] * b)
        .map(|z| z * l[0] / r1_raw[1])
        .collect();
    let tangent_r2: Vec<C> = span[0]
        .iter()
        .zip(span[1].iter())
        .map(|(a, b)| nu_v[1] * a - nu_u[1] * b)
        .map(|z| z * l[0] / r2_raw[0])
        .collect();
    let mut two_form_residual: f64 = 0.0;
    for j in 0..4 {
        two_form_residual =
            two_form_residual.max(basis.contact_two_form(j, &tangent_r1, &tangent_r2).norm());
    }
    Ok(IntegralPlane {
        nu_basis: [
            [r1[0], r1[1], r1[2], r1[3]],
            [r2[0], r2[1], r2[2], r2[3]],
        ],
        tangent_basis: [tangent_r1, tangent_r2],
        eta,
        eta_prime,
        pattern_residual,
        two_form_residual,
    })
}

/// The normal-form integral plane at a framed quadrilateral off the Λ
/// locus.
///
/// The non-trivial integral 2-planes at a point form a one-parameter
/// family sweeping the hyperbola `ηη' = l₂l₄ - l₁l₃`; this returns one
/// deterministic member with the verified normal-form data. On Λ the
/// product degenerates to zero and the construction is refused.
pub fn integral_plane(g: &FramedKGon) -> Result<IntegralPlane> {
    if on_lambda(g)? {
        return Err(Error::OnLambda);
    }
    let fam = plane_family(g)?;
    // keep the best-conditioned member: eta and eta' of comparable size
    let mut best: Option<IntegralPlane> = None;
    let mut best_cond = f64::INFINITY;
    for span in &fam.candidates {
        let Ok(plane) = extract_normal_form(g, &fam.lengths, &fam.basis, span) else {
            continue;
        };
        let (a, b) = (plane.eta.norm(), plane.eta_prime.norm());
        if a < 1e-300 || b < 1e-300 {
            continue;
        }
        let cond = (a / b).max(b / a);
        if cond < best_cond {
            best_cond = cond;
            best = Some(plane);
        }
    }
    best.ok_or_else(|| Error::SingularState("no extractable integral plane".into()))
}

/// Normal-form data of a caller-supplied 2-plane in the distribution (two
/// spanning tangent vectors in local `(β, δ)` coordinates): used to verify
/// that an orbit-family tangent plane is an integral plane of the expected
/// shape.
pub fn integral_plane_of_span(g: &FramedKGon, span: &[Vec<C>; 2]) -> Result<IntegralPlane> {
    let lengths = concordant_lengths(g)?.ok_or(Error::ComponentAbsent)?;
    let (dim, basis) = distribution_dimension(g)?;
    if dim != 4 {
        return Err(Error::SingularState(format!("distribution dimension {dim} instead of 4")));
    }
    extract_normal_form(g, &lengths, &basis, span)
}

/// Rebuild the tangent 2-plane with the given `(η, η')` from the
/// normal-form rows alone, by inverting the ν-coordinate map on the
/// distribution. Returns the spanning pair in local coordinates.
pub fn normal_form_plane(g: &FramedKGon, eta: C, eta_prime: C) -> Result<[Vec<C>; 2]> {
    let lengths = concordant_lengths(g)?.ok_or(Error::ComponentAbsent)?;
    let (dim, basis) = distribution_dimension(g)?;
    if dim != 4 {
        return Err(Error::SingularState(format!("distribution dimension {dim} instead of 4")));
    }
    let mut n = DMatrix::<C>::zeros(4, 4);
    for (a, e) in basis.vectors.iter().enumerate() {
        let nu = nu_coordinates(g, &lengths, &basis, e);
        for j in 0..4 {
            n[(j, a)] = nu[j];
        }
    }
    let lu = n.lu();
    let l = &lengths;
    let rows = [
        [cr(0.0), l[0], eta, -l[3]],
        [l[0], cr(0.0), -l[1], eta_prime],
    ];
    let mut out: [Vec<C>; 2] = [Vec::new(), Vec::new()];
    for (slot, row) in rows.iter().enumerate() {
        let rhs = nalgebra::DVector::<C>::from_row_slice(row);
        let coeffs = lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularState("nu frame is singular".into()))?;
        let mut t = vec![cr(0.0); basis.vectors[0].len()];
        for (a, e) in basis.vectors.iter().enumerate() {
            for (i, comp) in e.iter().enumerate() {
                t[i] += coeffs[a] * comp;
            }
        }
        out[slot] = t;
    }
    Ok(out)
}

/// A tangent vector of the framed-gon space in ambient terms: vertex
/// velocities and frame-slope rates (slopes in the per-vertex charts of a
/// [`DistributionBasis`]).
#[derive(Clone, Debug)]
pub struct AmbientTangent {
    pub vertex_velocity: Vec<(C, C)>,
    pub slope_rate: Vec<C>,
}

impl DistributionBasis {
    pub fn chart_is_x(&self, j: usize) -> bool {
        self.charts_chart_x[j]
    }

    /// Slope of a line in the chart fixed at vertex `j`.
    pub fn slope_in_chart(&self, j: usize, line: &ProjLine) -> Result<C> {
        let u = line.direction()?.vector();
        Ok(if self.charts_chart_x[j] { u.1 / u.0 } else { u.0 / u.1 })
    }

    /// Express an ambient tangent in the local `(β_j, δ_j)` coordinates,
    /// returning the off-line defect of the vertex velocities (the part of
    /// each velocity not along its frame line, relative).
    pub fn to_local(&self, at: &AmbientTangent) -> (Vec<C>, f64) {
        let k = self.charts_unit.len();
        let mut local = vec![cr(0.0); 2 * k];
        let mut off_worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..k {
            let u = self.charts_unit[j];
            let v = at.vertex_velocity[j];
            // Hermitian projection onto the complex line spanned by u
            let uu = u.0.norm_sqr() + u.1.norm_sqr();
            let beta = (v.0 * u.0.conj() + v.1 * u.1.conj()) / cr(uu);
            let off = ((v.0 - beta * u.0).norm_sqr() + (v.1 - beta * u.1).norm_sqr()).sqrt();
            off_worst = off_worst.max(off);
            scale = scale.max((v.0.norm_sqr() + v.1.norm_sqr()).sqrt());
            local[2 * j] = beta;
            local[2 * j + 1] = at.slope_rate[j];
        }
        (local, off_worst / scale.max(1e-300))
    }

    /// Relative distance of a local tangent vector from the span of the
    /// distribution basis.
    pub fn membership_residual(&self, local: &[C]) -> f64 {
        let norm: f64 = local.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let mut residual = local.to_vec();
        for b in &self.vectors {
            let dot: C = local.iter().zip(b.iter()).map(|(x, e)| x * e.conj()).sum();
            for (r, e) in residual.iter_mut().zip(b.iter()) {
                *r -= dot * e;
            }
        }
        residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / norm
    }
}

/// Principal angles between two 2-planes given by spanning pairs in the
/// same complex coordinate space.
pub fn principal_angles(p: &[Vec<C>; 2], q: &[Vec<C>; 2]) -> [f64; 2] {
    fn orthonormalize(v: &[Vec<C>; 2]) -> [Vec<C>; 2] {
        let norm = |x: &[C]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut a = v[0].clone();
        let na = norm(&a);
        for z in &mut a {
            *z /= cr(na);
        }
        let dot: C = v[1].iter().zip(a.iter()).map(|(x, e)| x * e.conj()).sum();
        let mut b: Vec<C> = v[1].iter().zip(a.iter()).map(|(x, e)| x - dot * e).collect();
        let nb = norm(&b);
        for z in &mut b {
            *z /= cr(nb);
        }
        [a, b]
    }
    let a = orthonormalize(p);
    let b = orthonormalize(q);
    let mut gram = DMatrix::<C>::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            gram[(i, j)] = a[i].iter().zip(b[j].iter()).map(|(x, y)| x * y.conj()).sum();
        }
    }
    let svd = gram.svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.as_slice().to_vec();
    s.sort_by(f64::total_cmp);
    [s[1].min(1.0).acos(), s[0].min(1.0).acos()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    pub(super) fn random_convex_kgon(rng: &mut ChaCha8Rng, k: usize) -> Vec<(f64, f64)> {
        // convex position: sorted angles on a wobbly circle
        let mut angles: Vec<f64> = (0..k)
            .map(|j| std::f64::consts::TAU * (j as f64 + rng.gen_range(0.15..0.85)) / k as f64)
            .collect();
        angles.sort_by(f64::total_cmp);
        let r = rng.gen_range(0.8..1.6);
        angles
            .iter()
            .map(|a| (r * a.cos() + rng.gen_range(-0.05..0.05), r * a.sin() + rng.gen_range(-0.05..0.05)))
            .collect()
    }

    #[test]
    fn framing_examples() {
        let quad = [(1.2, 0.0), (0.1, 1.1), (-1.0, 0.0), (0.0, -1.3)];
        let all_ext = frame_real_kgon(&quad, &[1, 1, 1, 1]).unwrap();
        all_ext.validate(1e-9).unwrap();
        // invisibility framing
        let inv = frame_real_kgon(&quad, &[-1, -1, 1, 1]).unwrap();
        inv.validate(1e-9).unwrap();
        // product -1 framing is valid as a frame
        let odd = frame_real_kgon(&quad, &[1, 1, 1, -1]).unwrap();
        odd.validate(1e-9).unwrap();
        // degenerate gon
        assert!(frame_real_kgon(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (1.0, 1.0)], &[1, 1, 1, 1]).is_err());
    }

    #[test]
    fn concordance_presence_matches_alpha_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..300 {
            let pts = random_convex_kgon(&mut rng, 4);
            let alpha: Vec<i8> = (0..4).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let g = match frame_real_kgon(&pts, &alpha) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let product: i32 = alpha.iter().map(|a| *a as i32).product();
            let ls = concordant_lengths(&g).unwrap();
            assert_eq!(ls.is_some(), product == 1, "alpha {alpha:?}");
        }
    }

    #[test]
    fn invisibility_framing_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..100 {
            let pts = random_convex_kgon(&mut rng, 4);
            let g = match frame_real_kgon(&pts, &[-1, -1, 1, 1]) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let ls = concordant_lengths(&g).unwrap().expect("even framing");
            // l1 of opposite sign to l2, l3, l4
            let signs: Vec<f64> = ls.iter().map(|l| l.re.signum()).collect();
            assert_eq!(signs[1], signs[2]);
            assert_eq!(signs[2], signs[3]);
            assert_ne!(signs[0], signs[1]);
            // lambda residual bounded away from zero
            let lr = lambda_residual(&g).unwrap();
            let scale = (ls[0] * ls[2]).norm().max((ls[1] * ls[3]).norm());
            assert!(lr.norm() > 1e-6 * scale);
        }
    }

    #[test]
    fn distribution_dimension_is_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for k in [3usize, 4, 5] {
            let mut checked = 0;
            while checked < 40 {
                let pts = random_convex_kgon(&mut rng, k);
                let alpha: Vec<i8> = (0..k).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
                let g = match frame_real_kgon(&pts, &alpha) {
                    Ok(g) => g,
                    Err(_) => continue,
                };
                let (dim, _) = distribution_dimension(&g).unwrap();
                assert_eq!(dim, k, "k = {k}");
                checked += 1;
            }
        }
    }

    #[test]
    fn tangent_functions_match_real_angle_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        for _ in 0..50 {
            let pts = random_convex_kgon(&mut rng, 4);
            let g = match frame_real_kgon(&pts, &[1, 1, 1, 1]) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let ts = tangent_functions(&g).unwrap();
            for (j, t) in ts.iter().enumerate() {
                assert!(t.im.abs() < 1e-9, "real data gives real tangents");
                // oracle: tan of the angle between the frame perpendicular
                // and the outgoing edge
                let u = g.vertices[j].line.direction().unwrap().vector();
                let perp = (-u.1.re, u.0.re);
                let e = g.edge(j);
                let edge = (e.0.re, e.1.re);
                let cross = perp.0 * edge.1 - perp.1 * edge.0;
                let dot = perp.0 * edge.0 + perp.1 * edge.1;
                let tan = (cross / dot).abs();
                assert!((t.re.abs() - tan).abs() < 1e-8, "vertex {j}");
            }
        }
    }

    #[test]
    fn square_with_exterior_bisectors_has_unit_tangents() {
        let square = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        let g = frame_real_kgon(&square, &[1, 1, 1, 1]).unwrap();
        let ts = tangent_functions(&g).unwrap();
        for t in ts {
            assert!((t.norm() - 1.0).abs() < 1e-12);
        }
        // square frame: all lengths equal, lambda residual zero
        let lr = lambda_residual(&g).unwrap();
        assert!(lr.norm() < 1e-12);
    }

    #[test]
    fn lambda_residual_scaling_and_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let pts = random_convex_kgon(&mut rng, 4);
        let g = frame_real_kgon(&pts, &[1, 1, 1, 1]).unwrap();
        let lr = lambda_residual(&g).unwrap();
        // rigid motion invariance
        let rot = 0.7f64;
        let moved: Vec<(f64, f64)> = pts
            .iter()
            .map(|p| {
                (
                    p.0 * rot.cos() - p.1 * rot.sin() + 0.3,
                    p.0 * rot.sin() + p.1 * rot.cos() - 0.8,
                )
            })
            .collect();
        let gm = frame_real_kgon(&moved, &[1, 1, 1, 1]).unwrap();
        let lrm = lambda_residual(&gm).unwrap();
        assert!((lr.norm() - lrm.norm()).abs() < 1e-9 * lr.norm().max(1.0));
        // homothety scales lengths by s, the residual by s²
        let s = 1.7;
        let scaled: Vec<(f64, f64)> = pts.iter().map(|p| (s * p.0, s * p.1)).collect();
        let gs = frame_real_kgon(&scaled, &[1, 1, 1, 1]).unwrap();
        let lrs = lambda_residual(&gs).unwrap();
        assert!((lrs.norm() - s * s * lr.norm()).abs() < 1e-8 * lrs.norm().max(1.0));
    }

    #[test]
    fn integral_plane_product_identity_off_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let mut checked = 0;
        while checked < 60 {
            let pts = random_convex_kgon(&mut rng, 4);
            let alpha: Vec<i8> = (0..4).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            if alpha.iter().map(|a| *a as i32).product::<i32>() != 1 {
                continue;
            }
            let Ok(g) = frame_real_kgon(&pts, &alpha) else { continue };
            if on_lambda(&g).unwrap_or(true) {
                continue;
            }
            let plane = integral_plane(&g).unwrap();
            let ls = concordant_lengths(&g).unwrap().unwrap();
            let target = ls[1] * ls[3] - ls[0] * ls[2];
            assert!(plane.pattern_residual < 1e-8, "pattern {:.3e}", plane.pattern_residual);
            assert!(plane.two_form_residual < 1e-8, "2-forms {:.3e}", plane.two_form_residual);
            let prod = (plane.eta * plane.eta_prime - target).norm() / target.norm();
            assert!(prod < 1e-8, "eta product defect {prod:.3e}");
            checked += 1;
        }
    }

    #[test]
    fn symmetric_kite_is_on_lambda_and_rejected() {
        // symmetric about the diagonal A1A3 with L1 = L3 = that diagonal
        let kite = [(1.3, 0.0), (0.0, 0.8), (-0.9, 0.0), (0.0, -0.8)];
        let x_axis = ProjLine::real_affine(0.0, 0.0, 1.0);
        let mk = |p: (f64, f64)| (cr(p.0), cr(p.1));
        // frames at A2, A4: the vertical symmetry lines of their edge pairs
        let g = FramedKGon::new(vec![
            FramedVertex { point: mk(kite[0]), line: x_axis },
            FramedVertex {
                point: mk(kite[1]),
                line: ProjLine::through_point_dir(mk(kite[1]), (cr(0.0), cr(1.0))),
            },
            FramedVertex { point: mk(kite[2]), line: x_axis },
            FramedVertex {
                point: mk(kite[3]),
                line: ProjLine::through_point_dir(mk(kite[3]), (cr(0.0), cr(1.0))),
            },
        ]);
        // the vertical frame at A2 is a symmetry line only for symmetric
        // kites; rebuild via bisectors to be safe
        let g = match g {
            Ok(g) => g,
            Err(_) => frame_real_kgon(&kite, &[1, 1, 1, 1]).unwrap(),
        };
        if let Ok(true) = on_lambda(&g) {
            assert!(matches!(integral_plane(&g), Err(Error::OnLambda)));
        } else {
            // the bisector framing of the kite still lies on Lambda
            let g2 = frame_real_kgon(&kite, &[1, 1, 1, 1]).unwrap();
            assert!(on_lambda(&g2).unwrap());
            assert!(matches!(integral_plane(&g2), Err(Error::OnLambda)));
        }
    }

    #[test]
    fn component_presence_invariant_under_double_flips() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for _ in 0..100 {
            let pts = random_convex_kgon(&mut rng, 4);
            let alpha: Vec<i8> = (0..4).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let Ok(g) = frame_real_kgon(&pts, &alpha) else { continue };
            let present = concordant_lengths(&g).unwrap().is_some();
            // flip two adjacent frame lines
            let j = rng.gen_range(0..4);
            let mut alpha2 = alpha.clone();
            alpha2[j] = -alpha2[j];
            alpha2[(j + 1) % 4] = -alpha2[(j + 1) % 4];
            let Ok(g2) = frame_real_kgon(&pts, &alpha2) else { continue };
            let present2 = concordant_lengths(&g2).unwrap().is_some();
            assert_eq!(present, present2);
        }
    }
}

impl DirectionCoord {
    /// The raw projective pair `(num, den)` with `z = num/den`.
    pub fn pair(&self) -> (C, C) {
        self.raw_pair()
    }

    /// Antisymmetric cross of two direction coordinates (vanishes exactly
    /// at equality), normalized scale-free.
    pub fn cross_with(&self, other: &DirectionCoord) -> C {
        let (an, ad) = self.raw_pair();
        let (bn, bd) = other.raw_pair();
        an * bd - ad * bn
    }
}
