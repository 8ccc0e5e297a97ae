use super::{Result, TriangleMesh};

/// Euler characteristic and genus bookkeeping of a closed mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopologyReport {
    pub euler: i64,
    /// Total genus over all components.
    pub genus: i64,
    pub components: usize,
    /// Handles and tunnels, Σ genus over components.
    pub defect_count: i64,
}

/// Validates that `mesh` is a closed oriented manifold and reports
/// V − E + F, component count and per-component genus.
pub fn euler_defects(mesh: &TriangleMesh) -> Result<TopologyReport> {
    let em = mesh.check_closed_manifold()?;
    let (comp, ncomp) = mesh.vertex_components();
    // only components that carry faces count
    let mut v = vec![0i64; ncomp];
    let mut e = vec![0i64; ncomp];
    let mut f = vec![0i64; ncomp];
    let mut has_face = vec![false; ncomp];
    for face in &mesh.faces {
        f[comp[face[0]]] += 1;
        has_face[comp[face[0]]] = true;
    }
    for &c in &comp {
        v[c] += 1;
    }
    for (a, _) in em.sorted_edges() {
        e[comp[a]] += 1;
    }
    let mut report = TopologyReport { euler: 0, genus: 0, components: 0, defect_count: 0 };
    for c in 0..ncomp {
        if !has_face[c] {
            continue;
        }
        let chi = v[c] - e[c] + f[c];
        report.euler += chi;
        report.components += 1;
        let g = (2 - chi) / 2;
        report.genus += g;
        report.defect_count += g.max(0);
    }
    Ok(report)
}
