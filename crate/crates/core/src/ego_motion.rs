//! Camera ego-motion from point correspondences: essential-matrix
//! estimation with RANSAC, SVD decomposition into relative pose, Euler
//! angle extraction and pose chaining.

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3, Vector4};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EgoMotionError {
    #[error("need at least 8 correspondences, got {0}")]
    DegenerateInput(usize),
    #[error("no RANSAC hypothesis reached the minimum inlier count")]
    EstimationFailure,
    #[error("cheirality test could not single out a pose candidate")]
    AmbiguousDecomposition,
    #[error("svd failed")]
    SvdFailed,
}

/// One point match between consecutive frames, in homogeneous normalized
/// image coordinates (third component 1).
#[derive(Debug, Clone, Copy)]
pub struct Correspondence {
    pub p_prev: Vector3<f64>,
    pub p_curr: Vector3<f64>,
}

impl Correspondence {
    pub fn new(x_prev: f64, y_prev: f64, x_curr: f64, y_curr: f64) -> Self {
        Self {
            p_prev: Vector3::new(x_prev, y_prev, 1.0),
            p_curr: Vector3::new(x_curr, y_curr, 1.0),
        }
    }
}

/// All matches between frame `frame_index - 1` and `frame_index`.
#[derive(Debug, Clone)]
pub struct FrameMatches {
    pub frame_index: usize,
    pub matches: Vec<Correspondence>,
}

/// Essential matrix projected onto the (1, 1, 0) singular-value manifold.
#[derive(Debug, Clone)]
pub struct EssentialMatrix(pub Matrix3<f64>);

/// Relative camera motion between two frames; translation is a unit
/// direction since monocular scale is unobservable.
#[derive(Debug, Clone)]
pub struct RelativePose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

/// Absolute poses chained from relative ones, plus the per-frame Euler
/// angles of the relative rotations.
#[derive(Debug, Clone)]
pub struct PoseChain {
    pub rotations: Vec<Matrix3<f64>>,
    pub translations: Vec<Vector3<f64>>,
    pub angles: Vec<EulerAngles>,
}

/// Roll, pitch, yaw in radians with a flag raised near the gimbal
/// singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub gimbal_warning: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub iterations: usize,
    /// First-order (Sampson) epipolar distance threshold in normalized
    /// image coordinates.
    pub threshold: f64,
    pub min_inlier_ratio: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            threshold: 1e-3,
            min_inlier_ratio: 0.5,
            seed: 7,
        }
    }
}

/// Eight-point linear estimate from a set of correspondences, projected
/// onto the essential manifold.
fn eight_point(matches: &[Correspondence]) -> Result<Matrix3<f64>, EgoMotionError> {
    let n = matches.len();
    let mut a = DMatrix::<f64>::zeros(n, 9);
    for (i, m) in matches.iter().enumerate() {
        let p = m.p_prev;
        let q = m.p_curr;
        // row encodes q^T E p = 0 with E in row-major order
        a[(i, 0)] = q.x * p.x;
        a[(i, 1)] = q.x * p.y;
        a[(i, 2)] = q.x;
        a[(i, 3)] = q.y * p.x;
        a[(i, 4)] = q.y * p.y;
        a[(i, 5)] = q.y;
        a[(i, 6)] = p.x;
        a[(i, 7)] = p.y;
        a[(i, 8)] = 1.0;
    }
    // Null vector of A via the smallest eigenpair of A^T A.
    let ata = a.transpose() * &a;
    let eig = ata.symmetric_eigen();
    let min_idx = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .map(|(i, _)| i)
        .ok_or(EgoMotionError::SvdFailed)?;
    let f = eig.eigenvectors.column(min_idx);
    let e = Matrix3::new(f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]);
    Ok(project_to_essential(&e))
}

/// Replace the singular values by (s, s, 0) with s the mean of the two
/// largest, keeping U and V.
fn project_to_essential(e: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = e.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let s = (svd.singular_values[0] + svd.singular_values[1]) / 2.0;
    u * Matrix3::from_diagonal(&Vector3::new(s, s, 0.0)) * v_t
}

/// First-order geometric (Sampson) epipolar distance of a match to E.
pub fn sampson_distance(e: &Matrix3<f64>, m: &Correspondence) -> f64 {
    let ep = e * m.p_prev;
    let etq = e.transpose() * m.p_curr;
    let r = m.p_curr.dot(&ep);
    let denom = ep.x * ep.x + ep.y * ep.y + etq.x * etq.x + etq.y * etq.y;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    r.abs() / denom.sqrt()
}

/// RANSAC essential-matrix estimation over 8-point hypotheses, with a final
/// refit on the winning inlier set. Deterministic under the config seed;
/// equal inlier counts are resolved by hypothesis order.
pub fn estimate_essential(
    matches: &FrameMatches,
    config: &RansacConfig,
) -> Result<(EssentialMatrix, Vec<bool>), EgoMotionError> {
    let pts = &matches.matches;
    let n = pts.len();
    if n < 8 {
        return Err(EgoMotionError::DegenerateInput(n));
    }
    assert!(config.iterations >= 1);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ matches.frame_index as u64);
    let indices: Vec<usize> = (0..n).collect();
    let min_inliers = ((config.min_inlier_ratio * n as f64).ceil() as usize).max(8);

    // MSAC scoring: each hypothesis is charged the Sampson distance of
    // every point, truncated at the threshold. Unlike a raw inlier count
    // this cannot be won by a loose fit that grazes one extra point.
    let mut best: Option<(f64, Matrix3<f64>)> = None;
    for _ in 0..config.iterations {
        let sample: Vec<Correspondence> = indices
            .choose_multiple(&mut rng, 8)
            .map(|&i| pts[i])
            .collect();
        let Ok(e) = eight_point(&sample) else {
            continue;
        };
        let cost: f64 = pts
            .iter()
            .map(|m| sampson_distance(&e, m).min(config.threshold))
            .sum();
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, e));
        }
    }

    let (_, e) = best.ok_or(EgoMotionError::EstimationFailure)?;
    let count = pts
        .iter()
        .filter(|m| sampson_distance(&e, m) < config.threshold)
        .count();
    if count < min_inliers {
        return Err(EgoMotionError::EstimationFailure);
    }

    // Refit on all inliers of the winning hypothesis.
    let inliers: Vec<Correspondence> = pts
        .iter()
        .filter(|m| sampson_distance(&e, m) < config.threshold)
        .copied()
        .collect();
    let refined = eight_point(&inliers)?;
    let mask: Vec<bool> = pts
        .iter()
        .map(|m| sampson_distance(&refined, m) < config.threshold)
        .collect();
    if mask.iter().filter(|&&b| b).count() < min_inliers {
        return Err(EgoMotionError::EstimationFailure);
    }
    Ok((EssentialMatrix(refined), mask))
}

/// Linear (DLT) triangulation under cameras [I|0] and [R|t]; returns the
/// depths of the point in both cameras.
fn triangulate_depths(
    r: &Matrix3<f64>,
    t: &Vector3<f64>,
    m: &Correspondence,
) -> Option<(f64, f64)> {
    let mut a = Matrix4::<f64>::zeros();
    // P1 = [I | 0]
    let p1 = [
        Vector4::new(1.0, 0.0, 0.0, 0.0),
        Vector4::new(0.0, 1.0, 0.0, 0.0),
        Vector4::new(0.0, 0.0, 1.0, 0.0),
    ];
    let p2 = [
        Vector4::new(r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x),
        Vector4::new(r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y),
        Vector4::new(r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z),
    ];
    a.set_row(0, &(m.p_prev.x * p1[2] - p1[0]).transpose());
    a.set_row(1, &(m.p_prev.y * p1[2] - p1[1]).transpose());
    a.set_row(2, &(m.p_curr.x * p2[2] - p2[0]).transpose());
    a.set_row(3, &(m.p_curr.y * p2[2] - p2[1]).transpose());

    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let x = v_t.row(3).transpose();
    if x.w.abs() < 1e-12 {
        return None;
    }
    let pt = Vector3::new(x.x / x.w, x.y / x.w, x.z / x.w);
    let z1 = pt.z;
    let z2 = (r * pt + t).z;
    Some((z1, z2))
}

/// SVD decomposition of E into the four (R, t) candidates, resolved by the
/// cheirality test over the supplied inlier matches.
pub fn decompose_essential(
    e: &EssentialMatrix,
    inliers: &[Correspondence],
) -> Result<RelativePose, EgoMotionError> {
    if inliers.is_empty() {
        return Err(EgoMotionError::DegenerateInput(0));
    }
    let svd = e.0.svd(true, true);
    let mut u = svd.u.ok_or(EgoMotionError::SvdFailed)?;
    let mut v_t = svd.v_t.ok_or(EgoMotionError::SvdFailed)?;
    if u.determinant() < 0.0 {
        u = -u;
    }
    if v_t.determinant() < 0.0 {
        v_t = -v_t;
    }
    let w = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let r1 = u * w * v_t;
    let r2 = u * w.transpose() * v_t;
    let t = u.column(2).into_owned();

    let candidates = [
        (r1, t),
        (r1, -t),
        (r2, t),
        (r2, -t),
    ];
    let counts: Vec<usize> = candidates
        .iter()
        .map(|(r, t)| {
            inliers
                .iter()
                .filter_map(|m| triangulate_depths(r, t, m))
                .filter(|&(z1, z2)| z1 > 0.0 && z2 > 0.0)
                .count()
        })
        .collect();

    let best = counts.iter().copied().max().unwrap();
    if best == 0 || counts.iter().filter(|&&c| c == best).count() > 1 {
        return Err(EgoMotionError::AmbiguousDecomposition);
    }
    let idx = counts.iter().position(|&c| c == best).unwrap();
    let (r, t) = candidates[idx];
    Ok(RelativePose {
        rotation: r,
        translation: t.normalize(),
    })
}

/// Euler angle extraction with quadrant-correct arctangents:
/// roll = atan2(r21, r11), yaw = atan2(r32, r33),
/// pitch = atan2(-r31, sqrt(r32^2 + r33^2)).
pub fn euler_angles(r: &Matrix3<f64>) -> EulerAngles {
    let roll = r[(1, 0)].atan2(r[(0, 0)]);
    let yaw = r[(2, 1)].atan2(r[(2, 2)]);
    let pitch = (-r[(2, 0)]).atan2((r[(2, 1)].powi(2) + r[(2, 2)].powi(2)).sqrt());
    EulerAngles {
        roll,
        pitch,
        yaw,
        gimbal_warning: pitch.abs() > std::f64::consts::FRAC_PI_2 - 1e-6,
    }
}

/// Inverse of [`euler_angles`]: R = Rz(roll) * Ry(pitch) * Rx(yaw).
pub fn recompose(angles: &EulerAngles) -> Matrix3<f64> {
    rot_z(angles.roll) * rot_y(angles.pitch) * rot_x(angles.yaw)
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Gram-Schmidt projection back onto SO(3), with the third column rebuilt
/// from the cross product so det stays +1.
fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let c0 = r.column(0).normalize();
    let mut c1 = r.column(1).into_owned();
    c1 -= c0 * c0.dot(&c1);
    let c1 = c1.normalize();
    let c2 = c0.cross(&c1);
    Matrix3::from_columns(&[c0, c1, c2])
}

/// Chain relative poses into absolute ones, starting from identity. The
/// angle list carries one entry per chain element; entry 0 is all-zero.
pub fn integrate_poses(relatives: &[RelativePose]) -> PoseChain {
    assert!(!relatives.is_empty(), "empty pose list");
    let mut rotations = vec![Matrix3::identity()];
    let mut translations = vec![Vector3::zeros()];
    let mut angles = vec![EulerAngles {
        roll: 0.0,
        pitch: 0.0,
        yaw: 0.0,
        gimbal_warning: false,
    }];
    for rel in relatives {
        let prev_r = *rotations.last().unwrap();
        let prev_t = *translations.last().unwrap();
        rotations.push(orthonormalize(&(rel.rotation * prev_r)));
        translations.push(rel.rotation * prev_t + rel.translation);
        angles.push(euler_angles(&rel.rotation));
    }
    PoseChain {
        rotations,
        translations,
        angles,
    }
}

/// Emit the per-frame angle triplets as a timed series at the camera frame
/// rate, ready for resampling onto the inertial clock.
pub fn angles_to_series(chain: &PoseChain, frame_rate: f64, start_time: f64) -> crate::TimedSeries {
    assert!(frame_rate > 0.0);
    let n = chain.angles.len();
    let timestamps: Vec<f64> = (0..n).map(|i| start_time + i as f64 / frame_rate).collect();
    let mut values = ndarray::Array2::zeros((n, 3));
    for (i, a) in chain.angles.iter().enumerate() {
        values[(i, 0)] = a.roll;
        values[(i, 1)] = a.pitch;
        values[(i, 2)] = a.yaw;
    }
    crate::TimedSeries::new(
        timestamps,
        values,
        vec!["roll".into(), "pitch".into(), "yaw".into()],
    )
    .expect("uniform camera timestamps are strictly increasing")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    /// Synthetic two-view scene: points in front of both cameras projected
    /// under a known (R, t).
    pub(crate) fn synthetic_matches(
        r: &Matrix3<f64>,
        t: &Vector3<f64>,
        count: usize,
        seed: u64,
    ) -> Vec<Correspondence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < count {
            let x = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(2.0..6.0),
            );
            let x2 = r * x + t;
            if x2.z <= 0.1 {
                continue;
            }
            out.push(Correspondence::new(
                x.x / x.z,
                x.y / x.z,
                x2.x / x2.z,
                x2.y / x2.z,
            ));
        }
        out
    }

    #[test]
    fn pure_x_translation_gives_known_essential() {
        let r = Matrix3::identity();
        let t = Vector3::new(1.0, 0.0, 0.0);
        let matches = FrameMatches {
            frame_index: 1,
            matches: synthetic_matches(&r, &t, 50, 1),
        };
        let (e, mask) = estimate_essential(&matches, &RansacConfig::default()).unwrap();
        assert!(mask.iter().all(|&b| b));
        // [t]_x for t = e_x, up to scale
        let expected = Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        let scale = e.0[(1, 2)] / expected[(1, 2)];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(e.0[(i, j)], scale * expected[(i, j)], epsilon = 1e-9);
            }
        }
        for m in &matches.matches {
            assert!(m.p_curr.dot(&(e.0 * m.p_prev)).abs() / scale.abs() < 1e-9);
        }
    }

    #[test]
    fn ransac_rejects_gross_outliers() {
        let r = rot_z(0.05) * rot_x(0.02);
        let t = Vector3::new(0.3, -0.1, 1.0).normalize();
        let mut pts = synthetic_matches(&r, &t, 40, 2);
        let e_true = skew(&t) * r;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut outlier_idx = Vec::new();
        while outlier_idx.len() < 10 {
            let c = Correspondence::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            // keep only correspondences that are unambiguously off the model
            if sampson_distance(&e_true, &c) > 1e-2 {
                outlier_idx.push(pts.len());
                pts.push(c);
            }
        }
        let matches = FrameMatches {
            frame_index: 1,
            matches: pts,
        };
        let (e, mask) = estimate_essential(&matches, &RansacConfig::default()).unwrap();
        for &i in &outlier_idx {
            assert!(!mask[i], "outlier {i} marked inlier");
        }
        for (i, m) in matches.matches.iter().enumerate() {
            if mask[i] {
                assert!(sampson_distance(&e.0, m) < 1e-6);
            }
        }
    }

    #[test]
    fn too_few_matches_is_degenerate() {
        let matches = FrameMatches {
            frame_index: 1,
            matches: synthetic_matches(&Matrix3::identity(), &Vector3::x(), 7, 3),
        };
        assert!(matches!(
            estimate_essential(&matches, &RansacConfig::default()),
            Err(EgoMotionError::DegenerateInput(7))
        ));
    }

    fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
        Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
    }

    #[test]
    fn decompose_recovers_pure_translation() {
        let r = Matrix3::identity();
        let t = Vector3::new(1.0, 0.0, 0.0);
        let pts = synthetic_matches(&r, &t, 50, 4);
        let matches = FrameMatches {
            frame_index: 1,
            matches: pts.clone(),
        };
        let (e, _) = estimate_essential(&matches, &RansacConfig::default()).unwrap();
        let pose = decompose_essential(&e, &pts).unwrap();
        assert!((pose.rotation - Matrix3::identity()).norm() < 1e-9);
        assert!((pose.translation - t).norm() < 1e-9);
    }

    #[test]
    fn decompose_recovers_rotation_and_forward_translation() {
        let r = rot_z(0.1);
        let t = Vector3::new(0.0, 0.0, 1.0);
        let pts = synthetic_matches(&r, &t, 50, 5);
        let matches = FrameMatches {
            frame_index: 1,
            matches: pts.clone(),
        };
        let (e, _) = estimate_essential(&matches, &RansacConfig::default()).unwrap();
        let pose = decompose_essential(&e, &pts).unwrap();
        assert!((pose.rotation - r).norm() < 1e-6);
        assert!((pose.translation - t).norm() < 1e-6);
    }

    #[test]
    fn cheirality_tie_is_ambiguous() {
        // Both (R, t) and (R, -t) share the same essential matrix. One
        // point imaged under each camera pair gives each candidate exactly
        // one positive-depth vote: a tie the decomposition must reject.
        let r = Matrix3::identity();
        let t = Vector3::new(1.0, 0.0, 0.0);
        let x = Vector3::new(0.2, 0.1, 3.0);
        let x2 = r * x + t;
        let for_plus = Correspondence::new(x.x / x.z, x.y / x.z, x2.x / x2.z, x2.y / x2.z);
        let y = Vector3::new(-0.3, 0.2, 4.0);
        let y2 = r * y - t;
        let for_minus = Correspondence::new(y.x / y.z, y.y / y.z, y2.x / y2.z, y2.y / y2.z);
        let e = EssentialMatrix(project_to_essential(&(skew(&t) * r)));
        assert!(matches!(
            decompose_essential(&e, &[for_plus, for_minus]),
            Err(EgoMotionError::AmbiguousDecomposition)
        ));
    }

    #[test]
    fn euler_identity_is_zero() {
        let a = euler_angles(&Matrix3::identity());
        assert_eq!((a.roll, a.pitch, a.yaw), (0.0, 0.0, 0.0));
        assert!(!a.gimbal_warning);
    }

    #[test]
    fn euler_pure_z_rotation_is_roll() {
        let a = euler_angles(&rot_z(0.3));
        assert_abs_diff_eq!(a.roll, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(a.pitch, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.yaw, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn euler_round_trip_on_composed_rotation() {
        let r = rot_z(0.3) * rot_y(0.2) * rot_x(0.1);
        let rt = recompose(&euler_angles(&r));
        assert!((r - rt).norm() < 1e-9);
    }

    #[test]
    fn euler_round_trip_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let r = rot_z(rng.gen_range(-3.0..3.0))
                * rot_y(rng.gen_range(-1.4..1.4))
                * rot_x(rng.gen_range(-3.0..3.0));
            let rt = recompose(&euler_angles(&r));
            assert!((r - rt).norm() < 1e-9);
        }
    }

    #[test]
    fn gimbal_flag_near_singularity() {
        let a = euler_angles(&rot_y(std::f64::consts::FRAC_PI_2));
        assert!(a.gimbal_warning);
    }

    #[test]
    fn integrate_single_identity_pose() {
        let chain = integrate_poses(&[RelativePose {
            rotation: Matrix3::identity(),
            translation: Vector3::new(0.0, 0.0, 1.0),
        }]);
        assert_eq!(chain.rotations.len(), 2);
        assert!((chain.rotations[1] - Matrix3::identity()).norm() < 1e-12);
        assert!((chain.translations[1] - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn integrate_composes_rotations() {
        let rel = RelativePose {
            rotation: rot_z(0.1),
            translation: Vector3::zeros(),
        };
        let chain = integrate_poses(&[rel.clone(), rel]);
        assert!((chain.rotations[2] - rot_z(0.2)).norm() < 1e-12);
    }

    #[test]
    fn integrate_keeps_rotations_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rels: Vec<RelativePose> = (0..1000)
            .map(|_| RelativePose {
                rotation: rot_z(rng.gen_range(-0.05..0.05))
                    * rot_y(rng.gen_range(-0.05..0.05))
                    * rot_x(rng.gen_range(-0.05..0.05)),
                translation: Vector3::new(0.0, 0.0, 1.0),
            })
            .collect();
        let chain = integrate_poses(&rels);
        for r in &chain.rotations {
            assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-9);
            assert!((r.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn angles_series_grid_and_zero_chain() {
        let rels: Vec<RelativePose> = (0..29)
            .map(|_| RelativePose {
                rotation: Matrix3::identity(),
                translation: Vector3::new(0.0, 0.0, 1.0),
            })
            .collect();
        let chain = integrate_poses(&rels);
        let series = angles_to_series(&chain, 30.0, 0.0);
        assert_eq!(series.timestamps.len(), 30);
        for (i, &t) in series.timestamps.iter().enumerate() {
            assert_abs_diff_eq!(t, i as f64 / 30.0, epsilon = 1e-12);
        }
        assert!(series.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn relative_roll_signal_matches_construction() {
        // A walk whose per-frame relative rotation is rot_z(0.01 * n).
        let rels: Vec<RelativePose> = (0..20)
            .map(|n| RelativePose {
                rotation: rot_z(0.01 * n as f64),
                translation: Vector3::new(0.0, 0.0, 1.0),
            })
            .collect();
        let chain = integrate_poses(&rels);
        for (n, a) in chain.angles.iter().enumerate().skip(1) {
            assert_abs_diff_eq!(a.roll, 0.01 * (n - 1) as f64, epsilon = 1e-9);
        }
    }
}

