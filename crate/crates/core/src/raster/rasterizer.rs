//! Z-buffered triangle rasterization under the pinhole model.
//!
//! Pixel `(x, y)` samples the ray through image coordinates `(x, y)`, i.e.
//! integer coordinates are pixel centers and pixel `x` spans `[x-0.5, x+0.5)`.
//! This is the same convention `depth_to_distance` uses, so a rendered
//! distance map and the distance map derived from the rendered Z-buffer agree.
//! Coverage is tested at that sample with the top-left fill rule. The depth
//! of a covered pixel is the exact intersection of the pixel ray with the
//! triangle plane.

use crate::geometry::{CameraIntrinsics, Point2, Point3, RigidTransform, TriangleMesh, Vector3};

use super::{DepthMap, DistanceMap, RasterError};

pub const DEFAULT_NEAR_PLANE: f64 = 10.0;

const BAND_ROWS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Geometry closer than this (mm, along Z) is clipped away.
    pub near: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            near: DEFAULT_NEAR_PLANE,
        }
    }
}

/// A triangle after clipping and projection.
struct ScreenTriangle {
    pts: [Point2; 3],
    normal: Vector3,
    offset: f64,
    x_range: (usize, usize),
    y_range: (usize, usize),
}

fn edge(a: &Point2, b: &Point2, p: (f64, f64)) -> f64 {
    (b.x - a.x) * (p.1 - a.y) - (b.y - a.y) * (p.0 - a.x)
}

// With y pointing down and positive signed area, top edges run left to
// right and left edges run upward.
fn is_top_left(a: &Point2, b: &Point2) -> bool {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

fn clip_near(tri: &[Point3; 3], near: f64) -> Vec<Point3> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let a_in = a.z >= near;
        let b_in = b.z >= near;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let s = (near - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * s;
            p.z = near;
            out.push(p);
        }
    }
    out
}

fn setup(tri: &[Point3; 3], cam: &CameraIntrinsics, near: f64, out: &mut Vec<ScreenTriangle>) {
    if tri.iter().all(|p| p.z <= near) {
        return;
    }
    let normal = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    if normal.norm_squared() == 0.0 {
        return;
    }
    let offset = normal.dot(&tri[0].coords);
    let polygon = clip_near(tri, near);
    let projected: Vec<Point2> = polygon
        .iter()
        .map(|p| Point2::new(cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy))
        .collect();

    for k in 1..projected.len().saturating_sub(1) {
        let mut pts = [projected[0], projected[k], projected[k + 1]];
        let area = edge(&pts[0], &pts[1], (pts[2].x, pts[2].y));
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        if area < 0.0 {
            pts.swap(1, 2);
        }
        let (min_x, max_x) = (pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min), pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max));
        let (min_y, max_y) = (pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min), pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max));
        let lo_x = min_x.ceil().max(0.0);
        let hi_x = max_x.floor().min(cam.width as f64 - 1.0);
        let lo_y = min_y.ceil().max(0.0);
        let hi_y = max_y.floor().min(cam.height as f64 - 1.0);
        if lo_x > hi_x || lo_y > hi_y {
            continue;
        }
        out.push(ScreenTriangle {
            pts,
            normal,
            offset,
            x_range: (lo_x as usize, hi_x as usize),
            y_range: (lo_y as usize, hi_y as usize),
        });
    }
}

fn raster_band(tris: &[ScreenTriangle], cam: &CameraIntrinsics, first_row: usize, band: &mut [f64]) {
    let width = cam.width;
    let rows = band.len() / width;
    let last_row = first_row + rows - 1;
    for t in tris {
        if t.y_range.1 < first_row || t.y_range.0 > last_row {
            continue;
        }
        let [a, b, c] = &t.pts;
        let tl = [is_top_left(a, b), is_top_left(b, c), is_top_left(c, a)];
        let y0 = t.y_range.0.max(first_row);
        let y1 = t.y_range.1.min(last_row);
        for y in y0..=y1 {
            let row = &mut band[(y - first_row) * width..(y - first_row + 1) * width];
            for (x, slot) in row.iter_mut().enumerate().take(t.x_range.1 + 1).skip(t.x_range.0) {
                let p = (x as f64, y as f64);
                let e = [edge(a, b, p), edge(b, c, p), edge(c, a, p)];
                let inside = e.iter().zip(tl).all(|(&w, top_left)| w > 0.0 || (w == 0.0 && top_left));
                if !inside {
                    continue;
                }
                let ray = cam.ray(p.0, p.1);
                let denom = t.normal.dot(&ray);
                if denom == 0.0 {
                    continue;
                }
                // ray.z == 1, so the ray parameter is the Z coordinate
                let z = t.offset / denom;
                if !(z > 0.0) {
                    continue;
                }
                if *slot == 0.0 || z < *slot {
                    *slot = z;
                }
            }
        }
    }
}

/// Renders a Z-buffer of camera-space triangles.
fn zbuffer<I>(triangles: I, cam: &CameraIntrinsics, opts: &RenderOptions) -> Result<Vec<f64>, RasterError>
where
    I: IntoIterator<Item = [Point3; 3]>,
{
    cam.validate()?;
    let mut screen = Vec::new();
    for tri in triangles {
        setup(&tri, cam, opts.near, &mut screen);
    }
    let mut buf = vec![0.0; cam.pixel_count()];
    let chunk = BAND_ROWS * cam.width;

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        buf.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, band)| raster_band(&screen, cam, i * BAND_ROWS, band));
    }
    #[cfg(not(feature = "parallel"))]
    for (i, band) in buf.chunks_mut(chunk).enumerate() {
        raster_band(&screen, cam, i * BAND_ROWS, band);
    }
    Ok(buf)
}

fn posed_triangles<'a>(mesh: &'a TriangleMesh, pose: &'a RigidTransform) -> impl Iterator<Item = [Point3; 3]> + 'a {
    let verts: Vec<Point3> = mesh.vertices().iter().map(|v| pose.apply(v)).collect();
    mesh.triangles()
        .iter()
        .map(move |t| [verts[t[0] as usize], verts[t[1] as usize], verts[t[2] as usize]])
}

fn z_to_distance(z: Vec<f64>, cam: &CameraIntrinsics) -> Vec<f64> {
    let mut values = z;
    for y in 0..cam.height {
        for x in 0..cam.width {
            let v = &mut values[y * cam.width + x];
            if *v > 0.0 {
                *v *= cam.ray(x as f64, y as f64).norm();
            }
        }
    }
    values
}

pub fn render_depth_map(
    mesh: &TriangleMesh,
    pose: &RigidTransform,
    cam: &CameraIntrinsics,
    opts: &RenderOptions,
) -> Result<DepthMap, RasterError> {
    let z = zbuffer(posed_triangles(mesh, pose), cam, opts)?;
    Ok(DepthMap::from_raw(cam.width, cam.height, z))
}

/// Distance map of `mesh` in `pose`, with the default near plane.
pub fn render_distance_map(
    mesh: &TriangleMesh,
    pose: &RigidTransform,
    cam: &CameraIntrinsics,
) -> Result<DistanceMap, RasterError> {
    render_distance_map_with(mesh, pose, cam, &RenderOptions::default())
}

pub fn render_distance_map_with(
    mesh: &TriangleMesh,
    pose: &RigidTransform,
    cam: &CameraIntrinsics,
    opts: &RenderOptions,
) -> Result<DistanceMap, RasterError> {
    let z = zbuffer(posed_triangles(mesh, pose), cam, opts)?;
    Ok(DistanceMap::from_raw(cam.width, cam.height, z_to_distance(z, cam)))
}

/// Depth map of several posed meshes rendered together (nearest surface wins).
pub fn render_scene_depth(
    objects: &[(&TriangleMesh, RigidTransform)],
    cam: &CameraIntrinsics,
    opts: &RenderOptions,
) -> Result<DepthMap, RasterError> {
    let tris = objects.iter().flat_map(|(mesh, pose)| posed_triangles(mesh, pose));
    let z = zbuffer(tris, cam, opts)?;
    Ok(DepthMap::from_raw(cam.width, cam.height, z))
}

/// `distance(u, v) = depth(u, v) · ‖((u−cx)/fx, (v−cy)/fy, 1)‖`; zeros stay zero.
pub fn depth_to_distance(depth: &DepthMap, cam: &CameraIntrinsics) -> Result<DistanceMap, RasterError> {
    cam.validate()?;
    if depth.dims() != (cam.width, cam.height) {
        return Err(RasterError::SizeMismatch {
            expected: (cam.width, cam.height),
            got: depth.dims(),
        });
    }
    Ok(DistanceMap::from_raw(
        cam.width,
        cam.height,
        z_to_distance(depth.values().to_vec(), cam),
    ))
}

/// Pinhole projection with sub-pixel precision. Points must have `Z > 0`.
pub fn project_points(pts: &[Point3], cam: &CameraIntrinsics) -> Result<Vec<Point2>, RasterError> {
    pts.iter()
        .enumerate()
        .map(|(index, p)| {
            if !(p.z > 0.0) {
                return Err(RasterError::BehindCamera { index, z: p.z });
            }
            Ok(Point2::new(cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam64() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 32.0, 32.0, 64, 64).unwrap()
    }

    fn square(half: f64, z: f64) -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Point3::new(-half, -half, z),
                Point3::new(half, -half, z),
                Point3::new(half, half, z),
                Point3::new(-half, half, z),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn square_on_axis_distances() {
        // half-size 50 mm at 1000 mm spans ±25 px around the center
        let map = render_distance_map(&square(50.0, 1000.0), &RigidTransform::identity(), &cam64()).unwrap();
        assert_eq!(map.get(32, 32), 1000.0);
        let expect = 1000.0 * (1.0f64 + 2.0 * (16.0f64 / 500.0).powi(2)).sqrt();
        assert!((map.get(48, 48) - expect).abs() < 1e-9);
        assert!((map.get(48, 48) - 1001.02).abs() < 0.01);
        assert_eq!(map.get(0, 0), 0.0);
    }

    #[test]
    fn nearer_square_wins() {
        let near = square(20.0, 800.0);
        let far = square(60.0, 1200.0);
        let cam = cam64();
        let map = render_scene_depth(
            &[(&far, RigidTransform::identity()), (&near, RigidTransform::identity())],
            &cam,
            &RenderOptions::default(),
        )
        .unwrap();
        assert_eq!(map.get(32, 32), 800.0);
        assert_eq!(map.get(32 + 20, 32), 1200.0);
    }

    #[test]
    fn shared_diagonal_is_covered_once() {
        // Every pixel inside the square is covered; coverage counts must match
        // the exact sample count inside [-12.5, 12.5) with top-left rule.
        let map = render_distance_map(&square(25.0, 1000.0), &RigidTransform::identity(), &cam64()).unwrap();
        // x - 32 ∈ [-12.5, 12.5]: samples -12..=12 → 25 columns
        assert_eq!(map.nonzero_count(), 25 * 25);
    }

    #[test]
    fn triangle_behind_camera_is_discarded() {
        let map = render_distance_map(&square(50.0, -1000.0), &RigidTransform::identity(), &cam64()).unwrap();
        assert_eq!(map.nonzero_count(), 0);
    }

    #[test]
    fn straddling_triangle_is_clipped() {
        let mesh = TriangleMesh::new(
            vec![
                Point3::new(-100.0, -5.0, -50.0),
                Point3::new(100.0, -5.0, 400.0),
                Point3::new(0.0, 100.0, 400.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let map = render_distance_map(&mesh, &RigidTransform::identity(), &cam64()).unwrap();
        assert!(map.nonzero_count() > 0);
        assert!(map.values().iter().all(|v| *v == 0.0 || *v >= DEFAULT_NEAR_PLANE));
    }

    #[test]
    fn rejects_zero_focal_length() {
        let cam = CameraIntrinsics {
            fx: 0.0,
            ..cam64()
        };
        assert!(matches!(
            render_distance_map(&square(1.0, 100.0), &RigidTransform::identity(), &cam),
            Err(RasterError::Camera(_))
        ));
    }

    #[test]
    fn depth_to_distance_values() {
        let cam = CameraIntrinsics::new(600.0, 600.0, 10.0, 5.0, 400, 10).unwrap();
        let mut values = vec![0.0; 4000];
        values[5 * 400 + 10] = 500.0;
        values[5 * 400 + 310] = 1000.0;
        let depth = DepthMap::new(400, 10, values).unwrap();
        let dist = depth_to_distance(&depth, &cam).unwrap();
        assert_eq!(dist.get(10, 5), 500.0);
        assert!((dist.get(310, 5) - 1000.0 * 1.25f64.sqrt()).abs() < 1e-9);
        assert!((dist.get(310, 5) - 1118.03).abs() < 0.01);
        assert_eq!(dist.get(0, 0), 0.0);

        let small = DepthMap::zeros(3, 3);
        assert!(matches!(depth_to_distance(&small, &cam), Err(RasterError::SizeMismatch { .. })));
    }

    #[test]
    fn projection_examples() {
        let cam = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        let uv = project_points(&[Point3::new(0.0, 0.0, 700.0), Point3::new(100.0, 0.0, 1000.0)], &cam).unwrap();
        assert_eq!(uv[0], Point2::new(320.0, 240.0));
        assert_eq!(uv[1].x, 370.0);
        let err = project_points(&[Point3::new(0.0, 0.0, 1.0), Point3::new(0.0, 0.0, 0.0)], &cam).unwrap_err();
        assert!(matches!(err, RasterError::BehindCamera { index: 1, .. }));
    }
}
