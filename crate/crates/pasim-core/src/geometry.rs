//! PA footprint shapes, rigid placement, and voxel meshing.
//!
//! A shape is a 2D footprint extruded along local +z over its thickness.
//! Meshing voxelizes the local solid on a uniform Cartesian grid (a cell is
//! kept iff its center lies inside the footprint) and then applies the
//! shape's rigid transform to every centroid, so rigid motion preserves the
//! voxel count and volumes exactly.

use crate::error::{Error, Result};
use crate::vec3::Vec3;
use std::f64::consts::TAU;

/// 2D footprint of a PA block, in the shape's local frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Footprint {
    /// Axis-aligned square centered at the origin.
    Square { side: f64 },
    /// Equilateral triangle centered at its centroid, apex on local +y.
    RegularTriangle { side: f64 },
    /// Annular sector centered on the origin, spanning polar angles
    /// `[rotation - span/2, rotation + span/2]`. `rotation` is the arc
    /// steering angle.
    ArcSector {
        outer_radius: f64,
        inner_radius: f64,
        span: f64,
        rotation: f64,
    },
    /// Simple polygon (no self-intersections), vertices in order.
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Rigid placement: rotation about local z, then translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: f64,
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { rotation: 0.0, translation: Vec3::ZERO };

    /// `other` applied after `self`: p -> R_other (R_self p + t_self) + t_other.
    pub fn then(self, other: Pose) -> Pose {
        Pose {
            rotation: self.rotation + other.rotation,
            translation: self.translation.rotated_z(other.rotation) + other.translation,
        }
    }

    pub fn apply(self, p: Vec3) -> Vec3 {
        p.rotated_z(self.rotation) + self.translation
    }
}

/// A PA dielectric block: extruded footprint plus rigid placement.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub footprint: Footprint,
    pub thickness: f64,
    pub pose: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voxel {
    pub centroid: Vec3,
    pub volume: f64,
}

/// Deterministic voxelization of a shape's solid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub voxels: Vec<Voxel>,
    pub nominal_voxel_size: f64,
}

impl Mesh {
    pub fn total_volume(&self) -> f64 {
        self.voxels.iter().map(|v| v.volume).sum()
    }
}

fn check_positive(value: f64, name: &str) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

impl Shape {
    pub fn square(side: f64, thickness: f64) -> Result<Shape> {
        check_positive(side, "side")?;
        check_positive(thickness, "thickness")?;
        Ok(Shape {
            footprint: Footprint::Square { side },
            thickness,
            pose: Pose::IDENTITY,
        })
    }

    pub fn triangle(side: f64, thickness: f64) -> Result<Shape> {
        check_positive(side, "side")?;
        check_positive(thickness, "thickness")?;
        Ok(Shape {
            footprint: Footprint::RegularTriangle { side },
            thickness,
            pose: Pose::IDENTITY,
        })
    }

    pub fn arc(
        outer_radius: f64,
        inner_radius: f64,
        span: f64,
        thickness: f64,
        rotation: f64,
    ) -> Result<Shape> {
        check_positive(outer_radius, "outer_radius")?;
        check_positive(inner_radius, "inner_radius")?;
        check_positive(thickness, "thickness")?;
        if inner_radius >= outer_radius {
            return Err(Error::InvalidGeometry(format!(
                "inner_radius {inner_radius} must be smaller than outer_radius {outer_radius}"
            )));
        }
        if !(span > 0.0 && span <= TAU + 1e-12) {
            return Err(Error::InvalidGeometry(format!(
                "span must lie in (0, 2*pi], got {span}"
            )));
        }
        Ok(Shape {
            footprint: Footprint::ArcSector { outer_radius, inner_radius, span, rotation },
            thickness,
            pose: Pose::IDENTITY,
        })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>, thickness: f64) -> Result<Shape> {
        check_positive(thickness, "thickness")?;
        if vertices.len() < 3 {
            return Err(Error::InvalidGeometry(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if polygon_self_intersects(&vertices) {
            return Err(Error::InvalidGeometry("polygon is self-intersecting".into()));
        }
        Ok(Shape {
            footprint: Footprint::Polygon { vertices },
            thickness,
            pose: Pose::IDENTITY,
        })
    }

    /// Compose an additional rigid transform onto the shape.
    pub fn transformed(&self, rotation: f64, translation: Vec3) -> Shape {
        Shape {
            footprint: self.footprint.clone(),
            thickness: self.thickness,
            pose: self.pose.then(Pose { rotation, translation }),
        }
    }

    /// Local-frame footprint bounding box (x0, x1, y0, y1).
    fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match &self.footprint {
            Footprint::Square { side } => {
                let h = side / 2.0;
                (-h, h, -h, h)
            }
            Footprint::RegularTriangle { side } => {
                let r = side / 3f64.sqrt(); // circumradius
                (-side / 2.0, side / 2.0, -r / 2.0, r)
            }
            Footprint::ArcSector { outer_radius, .. } => {
                (-outer_radius, *outer_radius, -outer_radius, *outer_radius)
            }
            Footprint::Polygon { vertices } => {
                let mut x0 = f64::INFINITY;
                let mut x1 = f64::NEG_INFINITY;
                let mut y0 = f64::INFINITY;
                let mut y1 = f64::NEG_INFINITY;
                for v in vertices {
                    x0 = x0.min(v[0]);
                    x1 = x1.max(v[0]);
                    y0 = y0.min(v[1]);
                    y1 = y1.max(v[1]);
                }
                (x0, x1, y0, y1)
            }
        }
    }

    fn contains_local(&self, x: f64, y: f64) -> bool {
        match &self.footprint {
            Footprint::Square { side } => {
                let h = side / 2.0;
                x.abs() <= h && y.abs() <= h
            }
            Footprint::RegularTriangle { side } => {
                let r = side / 3f64.sqrt();
                let v = [
                    (0.0, r),
                    (-side / 2.0, -r / 2.0),
                    (side / 2.0, -r / 2.0),
                ];
                point_in_convex_ccw(x, y, &v)
            }
            Footprint::ArcSector { outer_radius, inner_radius, span, rotation } => {
                let r = x.hypot(y);
                if r < *inner_radius || r > *outer_radius {
                    return false;
                }
                let start = rotation - span / 2.0;
                let mut delta = (y.atan2(x) - start) % TAU;
                if delta < 0.0 {
                    delta += TAU;
                }
                delta <= *span
            }
            Footprint::Polygon { vertices } => point_in_polygon(x, y, vertices),
        }
    }

    /// Uniform Cartesian voxelization of the extruded solid.
    ///
    /// Grid cells span the footprint bounding box exactly; a cell is included
    /// iff its center lies inside the footprint. Voxels are emitted in
    /// lexicographic (ix, iy, iz) order so downstream sums are reproducible.
    pub fn mesh(&self, nominal_voxel_size: f64) -> Result<Mesh> {
        check_positive(nominal_voxel_size, "nominal_voxel_size")?;
        let (x0, x1, y0, y1) = self.bounding_box();
        let (ex, ey, ez) = (x1 - x0, y1 - y0, self.thickness);
        let min_extent = ex.min(ey).min(ez);
        if nominal_voxel_size > min_extent * (1.0 + 1e-12) {
            return Err(Error::InvalidGeometry(format!(
                "voxel size {nominal_voxel_size} exceeds the solid's smallest extent {min_extent}"
            )));
        }

        let cells = |extent: f64| -> usize {
            ((extent / nominal_voxel_size) - 1e-9).ceil().max(1.0) as usize
        };
        let (nx, ny, nz) = (cells(ex), cells(ey), cells(ez));
        let (dx, dy, dz) = (ex / nx as f64, ey / ny as f64, ez / nz as f64);
        let cell_volume = dx * dy * dz;

        let mut voxels = Vec::new();
        for ix in 0..nx {
            let cx = x0 + (ix as f64 + 0.5) * dx;
            for iy in 0..ny {
                let cy = y0 + (iy as f64 + 0.5) * dy;
                if !self.contains_local(cx, cy) {
                    continue;
                }
                for iz in 0..nz {
                    let cz = (iz as f64 + 0.5) * dz;
                    voxels.push(Voxel {
                        centroid: self.pose.apply(Vec3::new(cx, cy, cz)),
                        volume: cell_volume,
                    });
                }
            }
        }
        if voxels.is_empty() {
            return Err(Error::InvalidGeometry(
                "meshing produced no voxels; voxel size too coarse for this footprint".into(),
            ));
        }
        Ok(Mesh { voxels, nominal_voxel_size })
    }
}

fn point_in_convex_ccw(x: f64, y: f64, verts: &[(f64, f64)]) -> bool {
    let n = verts.len();
    for i in 0..n {
        let (ax, ay) = verts[i];
        let (bx, by) = verts[(i + 1) % n];
        let cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
        if cross < 0.0 {
            return false;
        }
    }
    true
}

fn point_in_polygon(x: f64, y: f64, verts: &[[f64; 2]]) -> bool {
    // even-odd ray casting
    let n = verts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (verts[i][0], verts[i][1]);
        let (xj, yj) = (verts[j][0], verts[j][1]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], p4: [f64; 2]) -> bool {
    let d = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let d1 = d(p3, p4, p1);
    let d2 = d(p3, p4, p2);
    let d3 = d(p1, p2, p3);
    let d4 = d(p1, p2, p4);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn polygon_self_intersects(verts: &[[f64; 2]]) -> bool {
    let n = verts.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // skip adjacent edges (they share a vertex)
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            if segments_intersect(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

/// Analytic footprint area; the meshing tests use this as the volume oracle.
pub fn analytic_area(footprint: &Footprint) -> f64 {
    match footprint {
        Footprint::Square { side } => side * side,
        Footprint::RegularTriangle { side } => 3f64.sqrt() / 4.0 * side * side,
        Footprint::ArcSector { outer_radius, inner_radius, span, .. } => {
            (outer_radius * outer_radius - inner_radius * inner_radius) * span / 2.0
        }
        Footprint::Polygon { vertices } => {
            let n = vertices.len();
            let mut twice = 0.0;
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                twice += a[0] * b[1] - b[0] * a[1];
            }
            twice.abs() / 2.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn square_meshes_exactly_on_integer_grid() {
        // 12 x 12 x 3 mm at 1 mm -> 432 unit voxels
        let s = Shape::square(0.012, 0.003).unwrap();
        let m = s.mesh(0.001).unwrap();
        assert_eq!(m.voxels.len(), 432);
        assert!((m.total_volume() - 432e-9).abs() < 1e-18);
    }

    #[test]
    fn square_volume_is_exact() {
        let s = Shape::square(0.007, 0.002).unwrap();
        let m = s.mesh(0.0005).unwrap();
        assert!((m.total_volume() - 0.007 * 0.007 * 0.002).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_positive_dimensions() {
        assert!(Shape::square(0.0, 0.003).is_err());
        assert!(Shape::square(0.01, -1.0).is_err());
        assert!(Shape::triangle(0.0, 0.003).is_err());
        assert!(Shape::arc(0.015, 0.02, 1.0, 0.003, 0.0).is_err());
        assert!(Shape::arc(0.015, 0.009, 0.0, 0.003, 0.0).is_err());
        assert!(Shape::arc(0.015, 0.009, 7.0, 0.003, 0.0).is_err());
    }

    #[test]
    fn triangle_volume_converges_monotonically() {
        // symmetric edge miscounts cancel, so the error can hit rounding
        // noise early; assert a shrinking tolerance schedule instead of
        // strict decrease
        let side = 12.0 * 3f64.sqrt() / 1000.0;
        let s = Shape::triangle(side, 0.003).unwrap();
        let exact = analytic_area(&s.footprint) * 0.003;
        let rel: Vec<f64> = [0.001, 0.0005, 0.00025]
            .iter()
            .map(|&h| (s.mesh(h).unwrap().total_volume() - exact).abs() / exact)
            .collect();
        for (r, tol) in rel.iter().zip([0.02, 0.01, 0.005]) {
            assert!(*r < tol, "relative errors {rel:?}");
        }
    }

    #[test]
    fn full_disc_limit_converges_to_pi_r_squared() {
        let s = Shape::arc(0.015, 1e-6, TAU, 0.003, 0.0).unwrap();
        let m = s.mesh(0.0005).unwrap();
        let exact = PI * 0.015 * 0.015 * 0.003;
        assert!((m.total_volume() - exact).abs() / exact < 0.02);
    }

    #[test]
    fn arc_volume_close_to_analytic_sector() {
        let s = Shape::arc(0.015, 0.009, 2.0 * PI / 3.0, 0.003, 0.0).unwrap();
        let m = s.mesh(0.0005).unwrap();
        let exact = analytic_area(&s.footprint) * 0.003;
        assert!(
            (m.total_volume() - exact).abs() / exact < 0.05,
            "meshed {} vs analytic {}",
            m.total_volume(),
            exact
        );
    }

    #[test]
    fn arc_full_turn_rotation_is_identity() {
        let a = Shape::arc(0.015, 0.009, 2.0, 0.003, 0.0).unwrap();
        let b = Shape::arc(0.015, 0.009, 2.0, 0.003, TAU).unwrap();
        let ma = a.mesh(0.001).unwrap();
        let mb = b.mesh(0.001).unwrap();
        assert_eq!(ma.voxels.len(), mb.voxels.len());
        for (va, vb) in ma.voxels.iter().zip(&mb.voxels) {
            assert!((va.centroid - vb.centroid).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_transform_leaves_voxels_unchanged() {
        let s = Shape::square(0.012, 0.003).unwrap();
        let t = s.transformed(0.0, Vec3::ZERO);
        assert_eq!(s.mesh(0.001).unwrap(), t.mesh(0.001).unwrap());
    }

    #[test]
    fn translation_shifts_every_centroid() {
        let s = Shape::square(0.012, 0.003).unwrap();
        let t = s.transformed(0.0, Vec3::new(0.0, 0.0, 0.0025));
        let ma = s.mesh(0.001).unwrap();
        let mb = t.mesh(0.001).unwrap();
        for (va, vb) in ma.voxels.iter().zip(&mb.voxels) {
            let d = vb.centroid - va.centroid;
            assert!((d - Vec3::new(0.0, 0.0, 0.0025)).norm() < 1e-15);
        }
    }

    #[test]
    fn successive_rotations_compose() {
        let s = Shape::triangle(0.02, 0.003).unwrap();
        let beta = 0.3;
        let gamma = 0.9;
        let two = s.transformed(beta, Vec3::ZERO).transformed(gamma, Vec3::ZERO);
        let one = s.transformed(beta + gamma, Vec3::ZERO);
        let ma = two.mesh(0.001).unwrap();
        let mb = one.mesh(0.001).unwrap();
        assert_eq!(ma.voxels.len(), mb.voxels.len());
        for (va, vb) in ma.voxels.iter().zip(&mb.voxels) {
            assert!((va.centroid - vb.centroid).norm() < 1e-12);
        }
    }

    #[test]
    fn rigid_transform_preserves_count_and_volume() {
        let s = Shape::arc(0.015, 0.009, 2.0, 0.003, 0.4).unwrap();
        let t = s.transformed(1.1, Vec3::new(0.01, -0.02, 0.005));
        let ma = s.mesh(0.0005).unwrap();
        let mb = t.mesh(0.0005).unwrap();
        assert_eq!(ma.voxels.len(), mb.voxels.len());
        assert_eq!(ma.total_volume(), mb.total_volume());
    }

    #[test]
    fn meshing_is_deterministic() {
        let s = Shape::triangle(0.0207846, 0.003).unwrap();
        let a = s.mesh(0.0004).unwrap();
        let b = s.mesh(0.0004).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn convergence_rate_is_first_order() {
        // halving the voxel size should at least halve the volume error,
        // within a factor of 1.5
        let s = Shape::triangle(0.0207846, 0.003).unwrap();
        let exact = analytic_area(&s.footprint) * 0.003;
        let e1 = (s.mesh(0.0008).unwrap().total_volume() - exact).abs();
        let e2 = (s.mesh(0.0004).unwrap().total_volume() - exact).abs();
        assert!(e2 <= e1 / 2.0 * 1.5, "e1={e1}, e2={e2}");
    }

    #[test]
    fn refuses_oversized_voxels() {
        let s = Shape::square(0.012, 0.003).unwrap();
        assert!(s.mesh(0.004).is_err());
    }

    #[test]
    fn polygon_validation() {
        // bow-tie
        let bad = Shape::polygon(
            vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
            0.003,
        );
        assert!(bad.is_err());
        let good = Shape::polygon(
            vec![[0.0, 0.0], [0.01, 0.0], [0.01, 0.01], [0.0, 0.01]],
            0.003,
        )
        .unwrap();
        let m = good.mesh(0.001).unwrap();
        assert!((m.total_volume() - 0.01 * 0.01 * 0.003).abs() < 1e-12);
    }

    #[test]
    fn polygon_area_matches_shoelace() {
        let f = Footprint::Polygon {
            vertices: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]],
        };
        assert!((analytic_area(&f) - 2.0).abs() < 1e-15);
    }
}
