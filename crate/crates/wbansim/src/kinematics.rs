//! Forward kinematics over parsed motion clips, torso cylinder fitting,
//! on-body node placement, and synthetic IMU readouts.

use std::collections::BTreeMap;

use nalgebra::{Rotation3, Unit, Vector3};

use crate::bvh::{Channel, Joint, MotionClip};
use crate::error::{DataError, GeometryError};
use crate::signals::{BiosignalTrace, SignalKind};

/// World transform of one joint in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPose {
    pub position: Vector3<f64>,
    pub rotation: Rotation3<f64>,
}

/// World-space pose of every non-end-site joint at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    pub time: f64,
    joints: BTreeMap<String, JointPose>,
}

impl PoseFrame {
    pub fn position(&self, joint: &str) -> Option<Vector3<f64>> {
        self.joints.get(joint).map(|j| j.position)
    }

    pub fn joint(&self, name: &str) -> Option<&JointPose> {
        self.joints.get(name)
    }

    pub fn joint_names(&self) -> impl Iterator<Item = &str> {
        self.joints.keys().map(|s| s.as_str())
    }

    pub fn positions(&self) -> impl Iterator<Item = (&str, Vector3<f64>)> {
        self.joints.iter().map(|(n, j)| (n.as_str(), j.position))
    }

    /// Vertical extent (max minus min Y) over all joints.
    pub fn vertical_extent(&self) -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for pose in self.joints.values() {
            min = min.min(pose.position.y);
            max = max.max(pose.position.y);
        }
        if self.joints.is_empty() {
            0.0
        } else {
            max - min
        }
    }
}

/// Finite cylinder approximating the torso volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyCylinder {
    pub base_center: Vector3<f64>,
    pub axis: Unit<Vector3<f64>>,
    pub radius: f64,
    pub height: f64,
}

impl BodyCylinder {
    pub fn new(
        base_center: Vector3<f64>,
        axis: Vector3<f64>,
        radius: f64,
        height: f64,
    ) -> Result<BodyCylinder, GeometryError> {
        if !(radius > 0.0) || !(height > 0.0) {
            return Err(GeometryError::InvalidCylinder { radius, height });
        }
        let norm = axis.norm();
        if norm < 1e-12 {
            return Err(GeometryError::CoincidentTorsoJoints);
        }
        Ok(BodyCylinder {
            base_center,
            axis: Unit::new_normalize(axis),
            radius,
            height,
        })
    }

    /// Axial coordinate (distance along the axis from the base) of `p`.
    pub fn axial(&self, p: &Vector3<f64>) -> f64 {
        (p - self.base_center).dot(&self.axis)
    }

    /// Distance of `p` from the cylinder axis.
    pub fn radial(&self, p: &Vector3<f64>) -> f64 {
        let rel = p - self.base_center;
        (rel - self.axis.into_inner() * rel.dot(&self.axis)).norm()
    }

    /// True when `p` is inside the closed finite cylinder volume.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let z = self.axial(p);
        z >= 0.0 && z <= self.height && self.radial(p) <= self.radius
    }
}

/// Names the joints that anchor the torso cylinder plus its radius.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsoSpec {
    /// Joints averaged to form the cylinder base (typically the hips root).
    pub hip_joints: Vec<String>,
    pub neck_joint: String,
    pub radius_m: f64,
}

impl Default for TorsoSpec {
    fn default() -> Self {
        // 0.15 m torso radius and the 1.753 m stature used elsewhere come
        // from U.S. adult anthropometric reference data (Fryar et al., 2016).
        TorsoSpec {
            hip_joints: vec!["Hips".to_string()],
            neck_joint: "Neck".to_string(),
            radius_m: 0.15,
        }
    }
}

/// Default adult stature in meters used when a scenario rescales a skeleton.
pub const DEFAULT_STATURE_M: f64 = 1.753;

/// A radio node attached to a joint, with an optional offset in the joint's
/// local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePlacement {
    pub joint: String,
    pub offset: Vector3<f64>,
}

impl NodePlacement {
    pub fn at_joint(joint: impl Into<String>) -> NodePlacement {
        NodePlacement {
            joint: joint.into(),
            offset: Vector3::zeros(),
        }
    }

    pub fn with_offset(joint: impl Into<String>, offset: Vector3<f64>) -> NodePlacement {
        NodePlacement {
            joint: joint.into(),
            offset,
        }
    }
}

fn channel_rotation(channel: Channel, degrees: f64) -> Rotation3<f64> {
    let rad = degrees.to_radians();
    match channel {
        Channel::Xrotation => Rotation3::from_axis_angle(&Vector3::x_axis(), rad),
        Channel::Yrotation => Rotation3::from_axis_angle(&Vector3::y_axis(), rad),
        Channel::Zrotation => Rotation3::from_axis_angle(&Vector3::z_axis(), rad),
        _ => Rotation3::identity(),
    }
}

/// Evaluate world joint transforms for one frame.
///
/// Each joint's position is the parent position plus the parent cumulative
/// rotation applied to (offset + translation channels); its rotation is the
/// parent rotation composed with the joint's rotation channels in declared
/// order.
pub fn pose_at_frame(clip: &MotionClip, frame_index: usize) -> Result<PoseFrame, GeometryError> {
    if frame_index >= clip.frame_count {
        return Err(GeometryError::FrameOutOfRange {
            index: frame_index,
            count: clip.frame_count,
        });
    }
    let row = clip.frame(frame_index);
    let mut joints = BTreeMap::new();
    let mut cursor = 0usize;
    walk_joint(
        &clip.root,
        &Vector3::zeros(),
        &Rotation3::identity(),
        row,
        &mut cursor,
        &mut joints,
    );
    Ok(PoseFrame {
        time: frame_index as f64 * clip.frame_time,
        joints,
    })
}

fn walk_joint(
    joint: &Joint,
    parent_pos: &Vector3<f64>,
    parent_rot: &Rotation3<f64>,
    row: &[f64],
    cursor: &mut usize,
    out: &mut BTreeMap<String, JointPose>,
) {
    if joint.is_end_site {
        return;
    }
    let mut local_translation = joint.offset;
    let mut rotation = *parent_rot;
    for channel in &joint.channels {
        let value = row[*cursor];
        *cursor += 1;
        match channel {
            Channel::Xposition => local_translation.x += value,
            Channel::Yposition => local_translation.y += value,
            Channel::Zposition => local_translation.z += value,
            rot => rotation *= channel_rotation(*rot, value),
        }
    }
    let position = parent_pos + parent_rot * local_translation;
    out.insert(joint.name.clone(), JointPose { position, rotation });
    for child in &joint.children {
        walk_joint(child, &position, &rotation, row, cursor, out);
    }
}

/// Rescale a clip so the first frame's vertical extent equals
/// `target_height` meters. Rotations are unchanged; offsets and translation
/// channels scale by the common factor.
pub fn scale_to_height(clip: &MotionClip, target_height: f64) -> Result<MotionClip, GeometryError> {
    assert!(target_height > 0.0, "target height must be positive");
    let first = pose_at_frame(clip, 0)?;
    let measured = first.vertical_extent();
    if measured <= 1e-3 {
        return Err(GeometryError::DegenerateSkeleton(measured));
    }
    Ok(clip.scale_lengths(target_height / measured))
}

/// Fit the torso cylinder for one pose: base at the hip center, axis toward
/// the neck joint, height equal to the hip-to-neck distance.
pub fn fit_torso_cylinder(
    pose: &PoseFrame,
    spec: &TorsoSpec,
) -> Result<BodyCylinder, GeometryError> {
    let mut hip_center = Vector3::zeros();
    for name in &spec.hip_joints {
        hip_center += pose
            .position(name)
            .ok_or_else(|| GeometryError::UnknownJoint(name.clone()))?;
    }
    if spec.hip_joints.is_empty() {
        return Err(GeometryError::UnknownJoint("<no hip joints>".into()));
    }
    hip_center /= spec.hip_joints.len() as f64;
    let neck = pose
        .position(&spec.neck_joint)
        .ok_or_else(|| GeometryError::UnknownJoint(spec.neck_joint.clone()))?;
    let axis = neck - hip_center;
    let height = axis.norm();
    if height < 1e-6 {
        return Err(GeometryError::CoincidentTorsoJoints);
    }
    BodyCylinder::new(hip_center, axis, spec.radius_m, height)
}

/// World position of a placed node: joint position plus the joint's world
/// rotation applied to the local offset.
pub fn node_position(
    pose: &PoseFrame,
    placement: &NodePlacement,
) -> Result<Vector3<f64>, GeometryError> {
    let joint = pose
        .joint(&placement.joint)
        .ok_or_else(|| GeometryError::UnknownJoint(placement.joint.clone()))?;
    Ok(joint.position + joint.rotation * placement.offset)
}

/// Trajectory of a placed node over every frame of a clip.
pub fn node_trajectory(
    clip: &MotionClip,
    placement: &NodePlacement,
) -> Result<Vec<Vector3<f64>>, GeometryError> {
    (0..clip.frame_count)
        .map(|i| {
            let pose = pose_at_frame(clip, i)?;
            node_position(&pose, placement)
        })
        .collect()
}

/// Coordinate axis with the largest displacement variance; used as the
/// walking axis for IMU synthesis when none is configured.
pub fn dominant_axis(positions: &[Vector3<f64>]) -> Unit<Vector3<f64>> {
    let n = positions.len().max(1) as f64;
    let mut mean = Vector3::zeros();
    for p in positions {
        mean += p;
    }
    mean /= n;
    let mut var = Vector3::zeros();
    for p in positions {
        let d = p - mean;
        var += d.component_mul(&d);
    }
    if var.x >= var.y && var.x >= var.z {
        Vector3::x_axis()
    } else if var.y >= var.z {
        Vector3::y_axis()
    } else {
        Vector3::z_axis()
    }
}

/// Second finite difference of the node position projected on `axis`:
/// what an accelerometer aligned with the walking axis would read.
///
/// Interior samples use the central stencil
/// `(p[k+1] - 2 p[k] + p[k-1]) / dt^2`; the two endpoints reuse their
/// adjacent one-sided stencil so the output length equals the input length.
pub fn synth_imu(
    positions: &[Vector3<f64>],
    frame_time: f64,
    axis: &Unit<Vector3<f64>>,
) -> Result<BiosignalTrace, DataError> {
    if positions.len() < 3 {
        return Err(DataError::InsufficientData {
            need: 3,
            got: positions.len(),
        });
    }
    let p: Vec<f64> = positions.iter().map(|v| v.dot(axis)).collect();
    let dt2 = frame_time * frame_time;
    let n = p.len();
    let mut a = vec![0.0; n];
    for k in 1..n - 1 {
        a[k] = (p[k + 1] - 2.0 * p[k] + p[k - 1]) / dt2;
    }
    a[0] = (p[2] - 2.0 * p[1] + p[0]) / dt2;
    a[n - 1] = (p[n - 1] - 2.0 * p[n - 2] + p[n - 3]) / dt2;
    Ok(BiosignalTrace {
        kind: SignalKind::AccelMps2,
        sample_interval: frame_time,
        samples: a,
    })
}
