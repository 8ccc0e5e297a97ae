use std::fmt::Write as _;
use std::path::Path;

use super::{IoError, Result};
use crate::surfgen::TriangleMesh;

fn malformed(line: usize, reason: impl Into<String>) -> IoError {
    IoError::MalformedOff { line, reason: reason.into() }
}

/// Parses ASCII OFF text. Blank lines and `#` comments are skipped; line
/// numbers in errors are 1-based.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, head) = lines.next().ok_or_else(|| malformed(1, "empty file"))?;
    if head != "OFF" {
        return Err(malformed(ln, format!("expected \"OFF\", found {head:?}")));
    }
    let (ln, counts) = lines.next().ok_or_else(|| malformed(ln + 1, "missing counts line"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| malformed(ln, format!("bad count {t:?}"))))
        .collect::<Result<_>>()?;
    if counts.len() != 3 {
        return Err(malformed(ln, "counts line must be \"V F E\""));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    let mut last = ln;
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| malformed(last + 1, "missing vertex line"))?;
        last = ln;
        let xyz: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| malformed(ln, format!("bad coordinate {t:?}"))))
            .collect::<Result<_>>()?;
        if xyz.len() != 3 || xyz.iter().any(|v| !v.is_finite()) {
            return Err(malformed(ln, "vertex line must hold 3 finite coordinates"));
        }
        vertices.push([xyz[0], xyz[1], xyz[2]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| malformed(last + 1, "missing face line"))?;
        last = ln;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| malformed(ln, format!("bad index {t:?}"))))
            .collect::<Result<_>>()?;
        if idx.len() != 4 || idx[0] != 3 {
            return Err(malformed(ln, "only triangular faces \"3 a b c\" are supported"));
        }
        let f = [idx[1], idx[2], idx[3]];
        if let Some(bad) = f.iter().find(|&&v| v >= nv) {
            return Err(malformed(ln, format!("vertex index {bad} out of range (V = {nv})")));
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(malformed(ln, "degenerate face repeats a vertex"));
        }
        faces.push(f);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(malformed(ln, "trailing content after last face"));
    }
    Ok(TriangleMesh { vertices, faces })
}

/// OFF text with shortest round-trip float formatting.
pub fn format_off(mesh: &TriangleMesh) -> String {
    let mut s = String::with_capacity(32 * (mesh.vertices.len() + mesh.faces.len()) + 16);
    s.push_str("OFF\n");
    let _ = writeln!(s, "{} {} 0", mesh.vertices.len(), mesh.faces.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_off(&text)
}

pub fn write_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_off(mesh)).map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfgen::shapes::icosahedron;

    #[test]
    fn single_triangle() {
        let m = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn icosahedron_roundtrip_is_exact() {
        let ico = icosahedron();
        let text = format_off(&ico);
        let back = parse_off(&text).unwrap();
        assert_eq!(back, ico);
        assert_eq!(format_off(&back), text);
    }

    #[test]
    fn index_equal_to_vertex_count_is_rejected() {
        let err = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 3\n").unwrap_err();
        assert!(matches!(err, IoError::MalformedOff { line: 6, .. }), "{err}");
    }

    #[test]
    fn wrong_header_and_short_file() {
        assert!(matches!(parse_off("OFFX\n"), Err(IoError::MalformedOff { line: 1, .. })));
        assert!(matches!(
            parse_off("OFF\n3 1 0\n0 0 0\n"),
            Err(IoError::MalformedOff { line: 4, .. })
        ));
    }
}
