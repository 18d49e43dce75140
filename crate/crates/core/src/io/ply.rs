use std::fmt::Write;

use nalgebra::Matrix3;

use super::Diagnostic;
use crate::geometry::{UnitVec3, Vec3};
use crate::planner::OrientedBox;

const SCALAR_TYPES: [&str; 16] = [
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double", "int8", "uint8", "int16", "uint16", "int32",
    "uint32", "float32", "float64",
];

const OBB_PROPERTIES: [&str; 15] = [
    "cx", "cy", "cz", "ux", "uy", "uz", "vx", "vy", "vz", "wx", "wy", "wz", "hx", "hy", "hz",
];

#[derive(Clone, Debug, PartialEq)]
enum Property {
    Scalar(String),
    List(String),
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar(n) | Property::List(n) => n,
        }
    }
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

impl Element {
    fn scalar_index(&self, name: &str) -> Option<usize> {
        self.properties
            .iter()
            .position(|p| matches!(p, Property::Scalar(n) if n == name))
    }
}

/// Contents of an ASCII PLY file: the `vertex` element and, for exported
/// gripper poses, the `obb` element.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PlyData {
    pub points: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
    pub boxes: Vec<OrientedBox>,
}

fn parse_header<'a, I: Iterator<Item = (usize, &'a str)>>(lines: &mut I) -> Result<Vec<Element>, Diagnostic> {
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Diagnostic::at(1, "missing `ply` magic line")),
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut format_seen = false;
    for (no, line) in lines.by_ref() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["end_header"] => {
                if !format_seen {
                    return Err(Diagnostic::at(no, "header has no `format` line"));
                }
                return Ok(elements);
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", _] => format_seen = true,
            ["format", kind, ..] => {
                return Err(Diagnostic::at(no, format!("{kind} PLY is not supported, only ascii")));
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Diagnostic::at(no, format!("bad element count `{count}`")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count_ty, item_ty, name] => {
                for ty in [count_ty, item_ty] {
                    if !SCALAR_TYPES.contains(ty) {
                        return Err(Diagnostic::at(no, format!("unknown property type `{ty}`")));
                    }
                }
                elements
                    .last_mut()
                    .ok_or_else(|| Diagnostic::at(no, "property before any element"))?
                    .properties
                    .push(Property::List(name.to_string()));
            }
            ["property", ty, name] => {
                if !SCALAR_TYPES.contains(ty) {
                    return Err(Diagnostic::at(no, format!("unknown property type `{ty}`")));
                }
                elements
                    .last_mut()
                    .ok_or_else(|| Diagnostic::at(no, "property before any element"))?
                    .properties
                    .push(Property::Scalar(name.to_string()));
            }
            _ => {
                return Err(Diagnostic::at(
                    no,
                    format!("unrecognized header line `{}`", line.trim()),
                ))
            }
        }
    }
    Err(Diagnostic::general("header is not terminated by `end_header`"))
}

/// Splits one data line into per-property values; lists keep only their
/// length so that unknown list properties can be skipped.
fn parse_row(line: &str, no: usize, element: &Element) -> Result<Vec<f64>, Diagnostic> {
    let mut tokens = line.split_whitespace();
    let mut values = Vec::with_capacity(element.properties.len());
    for prop in &element.properties {
        let mut next = |what: &str| -> Result<f64, Diagnostic> {
            let tok = tokens.next().ok_or_else(|| {
                Diagnostic::at(no, format!("{} row ends before {what}", element.name)).with_field(prop.name())
            })?;
            tok.parse::<f64>()
                .map_err(|_| Diagnostic::at(no, format!("`{tok}` is not a number")).with_field(prop.name()))
        };
        match prop {
            Property::Scalar(_) => values.push(next("value")?),
            Property::List(_) => {
                let n = next("list length")?;
                if n < 0.0 || n.fract() != 0.0 {
                    return Err(Diagnostic::at(no, format!("list length `{n}` is not a count")).with_field(prop.name()));
                }
                for _ in 0..n as usize {
                    next("list item")?;
                }
                values.push(n);
            }
        }
    }
    if tokens.next().is_some() {
        return Err(Diagnostic::at(no, format!("{} row has extra values", element.name)));
    }
    Ok(values)
}

pub fn read_ply(text: &str) -> Result<PlyData, Diagnostic> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let elements = parse_header(&mut lines)?;
    let mut data_lines = lines.filter(|(_, l)| !l.trim().is_empty());
    let mut out = PlyData::default();
    let mut vertex_seen = false;

    for element in &elements {
        let want = |names: &[&str]| -> Result<Option<Vec<usize>>, Diagnostic> {
            let found: Vec<Option<usize>> = names.iter().map(|n| element.scalar_index(n)).collect();
            if found.iter().all(Option::is_some) {
                Ok(Some(found.into_iter().flatten().collect()))
            } else if found.iter().all(Option::is_none) {
                Ok(None)
            } else {
                let missing = names
                    .iter()
                    .zip(&found)
                    .find(|(_, f)| f.is_none())
                    .map(|(n, _)| *n)
                    .unwrap();
                Err(Diagnostic::general(format!("element `{}` lacks property", element.name)).with_field(missing))
            }
        };
        let (xyz, nxyz, obb) = match element.name.as_str() {
            "vertex" => {
                vertex_seen = true;
                let xyz = want(&["x", "y", "z"])?
                    .ok_or_else(|| Diagnostic::general("vertex element lacks x, y, z").with_field("x"))?;
                (Some(xyz), want(&["nx", "ny", "nz"])?, None)
            }
            "obb" => {
                let obb = want(&OBB_PROPERTIES)?
                    .ok_or_else(|| Diagnostic::general("obb element lacks properties").with_field("cx"))?;
                (None, None, Some(obb))
            }
            _ => (None, None, None),
        };
        let mut normals = Vec::new();
        for _ in 0..element.count {
            let (no, line) = data_lines
                .next()
                .ok_or_else(|| Diagnostic::general(format!("file ends inside element `{}`", element.name)))?;
            let row = parse_row(line, no, element)?;
            let v = |i: &[usize], k: usize| row[i[k]];
            if let Some(i) = &xyz {
                out.points.push(Vec3::new(v(i, 0), v(i, 1), v(i, 2)));
            }
            if let Some(i) = &nxyz {
                normals.push(Vec3::new(v(i, 0), v(i, 1), v(i, 2)));
            }
            if let Some(i) = &obb {
                let col = |k: usize| Vec3::new(v(i, k), v(i, k + 1), v(i, k + 2));
                out.boxes.push(OrientedBox {
                    center: col(0),
                    axes: Matrix3::from_columns(&[col(3), col(6), col(9)]),
                    half_extents: col(12),
                });
            }
        }
        if nxyz.is_some() {
            out.normals = Some(normals);
        }
    }
    if !vertex_seen {
        return Err(Diagnostic::general("no vertex element"));
    }
    if let Some((no, _)) = data_lines.next() {
        return Err(Diagnostic::at(no, "data beyond the declared element counts"));
    }
    Ok(out)
}

/// ASCII PLY with `double` properties. Values use the shortest decimal form
/// that parses back to the same bits.
pub fn write_ply(points: &[Vec3], normals: Option<&[UnitVec3]>, boxes: &[OrientedBox]) -> String {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\ncomment graspfit\n");
    writeln!(s, "element vertex {}", points.len()).unwrap();
    let mut props = vec!["x", "y", "z"];
    if normals.is_some() {
        props.extend(["nx", "ny", "nz"]);
    }
    for p in props {
        writeln!(s, "property double {p}").unwrap();
    }
    if !boxes.is_empty() {
        writeln!(s, "element obb {}", boxes.len()).unwrap();
        for p in OBB_PROPERTIES {
            writeln!(s, "property double {p}").unwrap();
        }
    }
    s.push_str("end_header\n");
    for (i, p) in points.iter().enumerate() {
        write!(s, "{} {} {}", p.x, p.y, p.z).unwrap();
        if let Some(n) = normals {
            write!(s, " {} {} {}", n[i].x, n[i].y, n[i].z).unwrap();
        }
        s.push('\n');
    }
    for b in boxes {
        let values = b
            .center
            .iter()
            .chain(b.axes.iter())
            .chain(b.half_extents.iter())
            .map(|v| v.to_string())
            .collect::<Vec<_>>();
        s.push_str(&values.join(" "));
        s.push('\n');
    }
    s
}
