use super::{Diagnostic, RawCloud};
use crate::geometry::Vec3;

fn parse_vec(tokens: &[&str], no: usize, kind: &str) -> Result<Vec3, Diagnostic> {
    if tokens.len() < 3 {
        return Err(Diagnostic::at(no, format!("`{kind}` needs three coordinates")));
    }
    let mut c = [0.0; 3];
    for (k, tok) in tokens[..3].iter().enumerate() {
        c[k] = tok
            .parse()
            .map_err(|_| Diagnostic::at(no, format!("`{tok}` is not a number")).with_field(kind))?;
    }
    Ok(Vec3::new(c[0], c[1], c[2]))
}

/// Resolves a 1-based or negative (relative) OBJ index.
fn resolve(tok: &str, len: usize, no: usize) -> Result<usize, Diagnostic> {
    let i: i64 = tok
        .parse()
        .map_err(|_| Diagnostic::at(no, format!("bad index `{tok}`")).with_field("f"))?;
    let resolved = if i > 0 { i - 1 } else { len as i64 + i };
    if i == 0 || resolved < 0 || resolved >= len as i64 {
        return Err(Diagnostic::at(no, format!("index {i} out of range")).with_field("f"));
    }
    Ok(resolved as usize)
}

/// Reads `v` and `vn` records. Normals are attached to vertices through
/// face `v//vn` or `v/vt/vn` references when present (averaged if a vertex
/// has several); otherwise they pair with vertices by order when the counts
/// agree. Other records are ignored.
pub fn read_obj(text: &str) -> Result<RawCloud, Diagnostic> {
    let records: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect()))
        .collect();
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (no, tokens) in &records {
        match tokens.split_first() {
            Some((&"v", rest)) => points.push(parse_vec(rest, *no, "v")?),
            Some((&"vn", rest)) => normals.push(parse_vec(rest, *no, "vn")?),
            _ => {}
        }
    }
    let mut sums = vec![Vec3::zeros(); points.len()];
    let mut referenced = false;
    for (no, tokens) in &records {
        if tokens.first() != Some(&"f") {
            continue;
        }
        for corner in &tokens[1..] {
            let parts: Vec<&str> = corner.split('/').collect();
            let v = resolve(parts[0], points.len(), *no)?;
            if let Some(n) = parts.get(2).filter(|s| !s.is_empty()) {
                sums[v] += normals[resolve(n, normals.len(), *no)?];
                referenced = true;
            }
        }
    }
    let normals = if referenced {
        if let Some(v) = sums.iter().position(|s| s.norm() == 0.0) {
            return Err(Diagnostic::general(format!("vertex {} has no usable face normal", v + 1)).with_field("vn"));
        }
        Some(sums)
    } else if !normals.is_empty() && normals.len() == points.len() {
        Some(normals)
    } else {
        None
    };
    Ok(RawCloud { points, normals })
}
