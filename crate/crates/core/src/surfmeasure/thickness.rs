use super::{MeasureError, Result, ThicknessMap};
use crate::surfgen::bvh::Bvh;
use crate::surfgen::geom::dist;
use crate::surfgen::TriangleMesh;

/// Per white-surface vertex: mean of the distance to the pial surface and
/// the distance from that nearest pial point back to the white surface.
pub fn thickness(white: &TriangleMesh, pial: &TriangleMesh) -> Result<ThicknessMap> {
    if white.faces.is_empty() || pial.faces.is_empty() {
        return Err(MeasureError::EmptyMesh);
    }
    let (wb, pb) = (Bvh::build(white), Bvh::build(pial));
    let values = white
        .vertices
        .iter()
        .map(|&v| {
            let to_pial = pb.closest_point(pial, v).expect("pial has faces");
            let back = wb.closest_point(white, to_pial.point).expect("white has faces");
            0.5 * (to_pial.dist_sq.sqrt() + dist(to_pial.point, back.point))
        })
        .collect();
    Ok(ThicknessMap { values })
}
