//! Machine-readable schemas and serialization helpers: JSON with fixed
//! float formatting, complex numbers as `[re, im]` pairs, and the mirror /
//! billiard / body document formats used by the CLI.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::conics::{conic_at, ConfocalFamily, Mirror, RigidMotion};
use crate::projective::{cr, ProjLine};
use crate::real_billiards::{ArcSet, BodyArc, LawType};
use crate::reflectivity::{Billiard, Orbit};
use crate::triangular::SpiralTrajectory;
use crate::{Error, Result};

/// Serde adapter: `Complex64` as a `[re, im]` pair.
pub mod cpair {
    use super::C;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C::new(re, im))
    }
}

/// All floating-point output is printed with 17 significant digits so that
/// values round-trip exactly and reports are byte-reproducible.
pub fn to_json_17<T: serde::Serialize>(value: &T) -> crate::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17Formatter::default());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("json is utf-8"))
}

/// A `serde_json` formatter printing floats as `{:.16e}` (17 significant
/// digits) and pretty-printing with two-space indents.
#[derive(Default)]
pub struct Digits17Formatter {
    indent: usize,
}

impl serde_json::ser::Formatter for Digits17Formatter {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // JSON has no literal for non-finite floats
            write!(writer, "null")
        }
    }

    fn write_f32<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + std::io::Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.indent += 1;
        writer.write_all(b"[")
    }

    fn end_array<W: ?Sized + std::io::Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.indent -= 1;
        writer.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()> {
        if !first {
            writer.write_all(b", ")?;
        }
        Ok(())
    }

    fn begin_object<W: ?Sized + std::io::Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.indent += 1;
        writer.write_all(b"{")
    }

    fn end_object<W: ?Sized + std::io::Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.indent -= 1;
        writer.write_all(b"\n")?;
        for _ in 0..self.indent {
            writer.write_all(b"  ")?;
        }
        writer.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()> {
        if !first {
            writer.write_all(b",")?;
        }
        writer.write_all(b"\n")?;
        for _ in 0..self.indent {
            writer.write_all(b"  ")?;
        }
        Ok(())
    }

    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        writer.write_all(b": ")
    }
}

fn pair(z: C) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: [f64; 2]) -> C {
    C::new(p[0], p[1])
}

/// Mirror document: `{kind, params, frame}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MirrorDoc {
    pub kind: String,
    pub params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub frame: Option<RigidMotion>,
}

pub fn mirror_to_doc(m: &Mirror) -> MirrorDoc {
    match m {
        Mirror::Line { line, .. } => MirrorDoc {
            kind: "line".into(),
            params: serde_json::json!({ "coeffs": line.coeffs().iter().map(|z| pair(*z)).collect::<Vec<_>>() }),
            frame: None,
        },
        Mirror::Circle { center, radius_sq } => MirrorDoc {
            kind: "circle".into(),
            params: serde_json::json!({
                "center": [pair(center.0), pair(center.1)],
                "radius_sq": pair(*radius_sq),
            }),
            frame: None,
        },
        Mirror::Conic { family, lambda } => MirrorDoc {
            kind: "confocal".into(),
            params: serde_json::json!({
                "c": family.half_focal_distance(),
                "lambda": pair(*lambda),
            }),
            frame: Some(family.frame),
        },
        Mirror::Parabola { f, frame } => MirrorDoc {
            kind: "parabola".into(),
            params: serde_json::json!({ "f": f }),
            frame: Some(*frame),
        },
        Mirror::MirrorImage { inner, axis } => MirrorDoc {
            kind: "mirror-image".into(),
            params: serde_json::json!({
                "inner": serde_json::to_value(mirror_to_doc(inner)).expect("mirror doc"),
                "axis": axis.coeffs().iter().map(|z| pair(*z)).collect::<Vec<_>>(),
            }),
            frame: None,
        },
    }
}

fn coeffs_from_value(v: &serde_json::Value) -> Result<ProjLine> {
    let arr: Vec<[f64; 2]> = serde_json::from_value(v.clone())?;
    if arr.len() != 3 {
        return Err(Error::InvalidInput("a line needs three coefficients".into()));
    }
    Ok(ProjLine::new(unpair(arr[0]), unpair(arr[1]), unpair(arr[2])))
}

pub fn mirror_from_doc(doc: &MirrorDoc) -> Result<Mirror> {
    match doc.kind.as_str() {
        "line" => {
            let l = coeffs_from_value(
                doc.params
                    .get("coeffs")
                    .ok_or_else(|| Error::InvalidInput("line mirror needs coeffs".into()))?,
            )?;
            Mirror::line(l)
        }
        "circle" => {
            let center: [[f64; 2]; 2] = serde_json::from_value(
                doc.params
                    .get("center")
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("circle needs a center".into()))?,
            )?;
            let radius_sq: [f64; 2] = serde_json::from_value(
                doc.params
                    .get("radius_sq")
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("circle needs radius_sq".into()))?,
            )?;
            Mirror::circle((unpair(center[0]), unpair(center[1])), unpair(radius_sq))
        }
        "confocal" => {
            let c_val: f64 = serde_json::from_value(
                doc.params
                    .get("c")
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("confocal mirror needs c".into()))?,
            )?;
            let lambda: [f64; 2] = serde_json::from_value(
                doc.params
                    .get("lambda")
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("confocal mirror needs lambda".into()))?,
            )?;
            let family = ConfocalFamily::new(c_val, doc.frame.unwrap_or_default())?;
            conic_at(family, unpair(lambda))
        }
        "parabola" => {
            let f: f64 = serde_json::from_value(
                doc.params
                    .get("f")
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("parabola needs f".into()))?,
            )?;
            Mirror::parabola(f, doc.frame.unwrap_or_default())
        }
        "mirror-image" => {
            let inner_doc: MirrorDoc = serde_json::from_value(
                doc.params
                    .get("inner")
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("mirror image needs inner".into()))?,
            )?;
            let axis = coeffs_from_value(
                doc.params
                    .get("axis")
                    .ok_or_else(|| Error::InvalidInput("mirror image needs axis".into()))?,
            )?;
            Mirror::mirror_image(mirror_from_doc(&inner_doc)?, axis)
        }
        other => Err(Error::InvalidInput(format!("unknown mirror kind '{other}'"))),
    }
}

/// Billiard document: `{"mirrors": [...], "laws": ["usual"|"skew", ...]?}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BilliardDoc {
    pub mirrors: Vec<MirrorDoc>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub laws: Option<Vec<LawType>>,
}

pub fn billiard_to_doc(b: &Billiard) -> BilliardDoc {
    BilliardDoc {
        mirrors: b.mirrors.iter().map(mirror_to_doc).collect(),
        laws: b.laws.clone(),
    }
}

pub fn billiard_from_doc(doc: &BilliardDoc) -> Result<Billiard> {
    let mirrors = doc
        .mirrors
        .iter()
        .map(mirror_from_doc)
        .collect::<Result<Vec<_>>>()?;
    match &doc.laws {
        Some(laws) => Billiard::with_laws(mirrors, laws.clone()),
        None => Billiard::new(mirrors),
    }
}

/// Body document: `{"arcs": [{mirror, t_range}], "orientation": "ccw"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyDoc {
    pub arcs: Vec<BodyArcDoc>,
    pub orientation: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyArcDoc {
    pub mirror: MirrorDoc,
    pub t_range: [f64; 2],
}

pub fn arcs_to_doc(arcs: &ArcSet) -> BodyDoc {
    BodyDoc {
        arcs: arcs
            .arcs
            .iter()
            .map(|a| BodyArcDoc { mirror: mirror_to_doc(&a.mirror), t_range: [a.lo, a.hi] })
            .collect(),
        orientation: "ccw".into(),
    }
}

pub fn arcs_from_doc(doc: &BodyDoc) -> Result<ArcSet> {
    let arcs = doc
        .arcs
        .iter()
        .map(|a| BodyArc::new(mirror_from_doc(&a.mirror)?, a.t_range[0], a.t_range[1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ArcSet::new(arcs))
}

/// Orbit CSV: one row per vertex,
/// `index, t_re, t_im, x_re, x_im, y_re, y_im, residual`.
pub fn orbit_to_csv(orbit: &Orbit) -> String {
    let mut out = String::from("index,t_re,t_im,x_re,x_im,y_re,y_im,residual\n");
    for (j, v) in orbit.vertices.iter().enumerate() {
        let (x, y) = v.point.affine().unwrap_or((cr(f64::NAN), cr(f64::NAN)));
        let residual = orbit.verdicts.get(j).map_or(f64::NAN, |w| w.residual);
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            j, v.param.re, v.param.im, x.re, x.im, y.re, y.im, residual
        ));
    }
    out
}

/// Trajectory CSV: one row per accepted step,
/// `step, B_x, B_y, C_x, C_y (re/im parts), P² value`.
pub fn spiral_to_csv(traj: &SpiralTrajectory) -> String {
    let mut out = String::from(
        "step,time,b_x_re,b_x_im,b_y_re,b_y_im,c_x_re,c_x_im,c_y_re,c_y_im,p2_re,p2_im\n",
    );
    for (i, s) in traj.samples.iter().enumerate() {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            i, s.time, s.b.0.re, s.b.0.im, s.b.1.re, s.b.1.im,
            s.c.0.re, s.c.0.im, s.c.1.re, s.c.1.im,
            s.p_squared.re, s.p_squared.im
        ));
    }
    out
}

/// Framed k-gon document: `{"vertices":[{"A":[x,y],"L":[c0,c1,c2]}]}` for
/// real configurations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FramedKGonDoc {
    pub vertices: Vec<FramedVertexDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FramedVertexDoc {
    #[serde(rename = "A")]
    pub a: [f64; 2],
    #[serde(rename = "L")]
    pub l: [f64; 3],
}

pub fn framed_kgon_to_doc(g: &crate::birkhoff::FramedKGon) -> Result<FramedKGonDoc> {
    let vertices = g
        .vertices
        .iter()
        .map(|v| {
            let p = v.point;
            if p.0.im.abs() > 1e-12 || p.1.im.abs() > 1e-12 {
                return Err(Error::InvalidInput(
                    "only real framed gons serialize to the document schema".into(),
                ));
            }
            let cs = v.line.coeffs();
            if cs.iter().any(|z| z.im.abs() > 1e-12) {
                return Err(Error::InvalidInput("frame line is not real".into()));
            }
            Ok(FramedVertexDoc { a: [p.0.re, p.1.re], l: [cs[0].re, cs[1].re, cs[2].re] })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FramedKGonDoc { vertices })
}

pub fn framed_kgon_from_doc(doc: &FramedKGonDoc) -> Result<crate::birkhoff::FramedKGon> {
    let vertices = doc
        .vertices
        .iter()
        .map(|v| crate::birkhoff::FramedVertex {
            point: (cr(v.a[0]), cr(v.a[1])),
            line: ProjLine::real_affine(v.l[0], v.l[1], v.l[2]),
        })
        .collect();
    crate::birkhoff::FramedKGon::new(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::c;

    #[test]
    fn mirror_documents_round_trip() {
        let fam = ConfocalFamily::new(1.0, RigidMotion::new(0.4, 0.1, -0.2)).unwrap();
        let mirrors = vec![
            Mirror::line(ProjLine::real_affine(0.3, 1.0, -0.5)).unwrap(),
            Mirror::circle((c(0.1, 0.2), cr(-0.4)), c(1.5, 0.2)).unwrap(),
            conic_at(fam, cr(3.0)).unwrap(),
            Mirror::parabola(-0.7, RigidMotion::new(0.1, 0.0, 0.3)).unwrap(),
            Mirror::mirror_image(
                conic_at(fam, cr(2.0)).unwrap(),
                ProjLine::real_affine(0.0, 0.0, 1.0),
            )
            .unwrap(),
        ];
        for m in &mirrors {
            let doc = mirror_to_doc(m);
            let text = serde_json::to_string(&doc).unwrap();
            let back: MirrorDoc = serde_json::from_str(&text).unwrap();
            let m2 = mirror_from_doc(&back).unwrap();
            assert!(m.structurally_eq(&m2, 1e-12), "{text}");
        }
    }

    #[test]
    fn json_floats_have_17_significant_digits() {
        let v = serde_json::json!({ "x": 0.1, "n": 3 });
        let text = to_json_17(&v).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        // round trip is exact
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back.get("x").unwrap().as_f64().unwrap(), 0.1);
    }

    #[test]
    fn billiard_doc_rejects_bad_kinds() {
        let doc = BilliardDoc {
            mirrors: vec![MirrorDoc { kind: "torus".into(), params: serde_json::json!({}), frame: None }],
            laws: None,
        };
        assert!(billiard_from_doc(&doc).is_err());
    }
}
