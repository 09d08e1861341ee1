//! Procedural motion clips: a parametric humanoid skeleton with scripted
//! gaits (brisk walk, smooth walk, standing sway). These stand in for a
//! motion-capture dataset in scenarios, examples, and tests.
//!
//! The skeleton is Y-up with +Z as the walking direction. The left arm is
//! the animated chain (the transmitter rides on `LeftWrist`); the receiver
//! is conventionally placed near the right hip ("pants pocket"). All other
//! joints stay rigid, which leaves the wrist-to-pocket link geometry fully
//! determined by the swing script.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::bvh::{Channel, Joint, MotionClip};

/// Frame rate used by all generated clips, Hz.
pub const FRAME_RATE_HZ: f64 = 120.0;

/// Motion script selecting one of the built-in activities.
#[derive(Debug, Clone, PartialEq)]
pub enum Gait {
    /// Walking with a pulsed arm swing: the arm dwells behind the torso and
    /// snaps forward once per stride, producing a deeply shadowed plateau
    /// with a short line-of-sight window.
    BriskWalk {
        stride_period_s: f64,
        /// Swing dwell angle behind the body, degrees.
        back_deg: f64,
        /// Peak forward swing angle, degrees (negative of the convention
        /// used for `back_deg`).
        front_deg: f64,
        /// Fraction of the stride spent in the forward pulse.
        pulse_duty: f64,
        /// Fraction of the pulse spent swinging forward (the rest swings
        /// back); below 0.5 the forward swing is the sharper edge.
        rise_fraction: f64,
        walk_speed_mps: f64,
    },
    /// Walking with a sinusoidal swing that keeps the forearm raised and the
    /// link permanently shadowed; the path-loss varies smoothly.
    SmoothWalk {
        stride_period_s: f64,
        /// Mean swing angle, degrees.
        mid_deg: f64,
        /// Swing amplitude, degrees.
        amp_deg: f64,
        elbow_deg: f64,
        walk_speed_mps: f64,
    },
    /// Standing still with a slow breathing sway of the spine.
    Standing {
        sway_period_s: f64,
        sway_amp_deg: f64,
        elbow_deg: f64,
    },
}

impl Gait {
    pub fn brisk() -> Gait {
        Gait::BriskWalk {
            stride_period_s: 1.25,
            back_deg: 50.0,
            front_deg: -55.0,
            pulse_duty: 0.45,
            rise_fraction: 0.4,
            walk_speed_mps: 1.1,
        }
    }

    pub fn smooth() -> Gait {
        Gait::SmoothWalk {
            stride_period_s: 2.0,
            mid_deg: 40.0,
            amp_deg: 18.0,
            elbow_deg: -50.0,
            walk_speed_mps: 1.0,
        }
    }

    pub fn standing() -> Gait {
        Gait::Standing {
            sway_period_s: 6.0,
            sway_amp_deg: 1.5,
            elbow_deg: -50.0,
        }
    }
}

fn joint(name: &str, offset: [f64; 3], children: Vec<Joint>) -> Joint {
    Joint {
        name: name.to_string(),
        offset: Vector3::new(offset[0], offset[1], offset[2]),
        channels: vec![Channel::Zrotation, Channel::Xrotation, Channel::Yrotation],
        children,
        is_end_site: false,
    }
}

fn end_site(offset: [f64; 3]) -> Joint {
    Joint {
        name: String::new(),
        offset: Vector3::new(offset[0], offset[1], offset[2]),
        channels: Vec::new(),
        children: Vec::new(),
        is_end_site: true,
    }
}

/// The shared humanoid skeleton. Offsets are meters; the hips root carries
/// the six standard position+rotation channels.
pub fn skeleton() -> Joint {
    let arm = |side: f64, prefix: &str| {
        joint(
            &format!("{prefix}Shoulder"),
            [side * 0.20, 0.25, 0.0],
            vec![joint(
                &format!("{prefix}Elbow"),
                [0.0, -0.28, 0.0],
                vec![joint(
                    &format!("{prefix}Wrist"),
                    [0.0, -0.27, 0.0],
                    vec![end_site([0.0, -0.08, 0.0])],
                )],
            )],
        )
    };
    let leg = |side: f64, prefix: &str| {
        joint(
            &format!("{prefix}Hip"),
            [side * 0.09, -0.05, 0.0],
            vec![joint(
                &format!("{prefix}Knee"),
                [0.0, -0.42, 0.0],
                vec![joint(
                    &format!("{prefix}Ankle"),
                    [0.0, -0.40, 0.0],
                    vec![end_site([0.0, -0.08, 0.12])],
                )],
            )],
        )
    };
    Joint {
        name: "Hips".to_string(),
        offset: Vector3::zeros(),
        channels: vec![
            Channel::Xposition,
            Channel::Yposition,
            Channel::Zposition,
            Channel::Zrotation,
            Channel::Xrotation,
            Channel::Yrotation,
        ],
        children: vec![
            joint(
                "Spine",
                [0.0, 0.25, 0.0],
                vec![
                    joint(
                        "Neck",
                        [0.0, 0.30, 0.0],
                        vec![joint(
                            "Head",
                            [0.0, 0.10, 0.0],
                            vec![end_site([0.0, 0.10, 0.0])],
                        )],
                    ),
                    arm(-1.0, "Left"),
                    arm(1.0, "Right"),
                ],
            ),
            leg(-1.0, "Left"),
            leg(1.0, "Right"),
        ],
        is_end_site: false,
    }
}

/// Raised-cosine pulse with an asymmetric rise: 0 outside `[0, duty)`,
/// ramping 0 to 1 over the first `rise` fraction of the pulse and back.
fn pulse(x: f64, duty: f64, rise: f64) -> f64 {
    if x < 0.0 || x >= duty {
        return 0.0;
    }
    let split = duty * rise;
    if x < split {
        0.5 * (1.0 - (PI * x / split).cos())
    } else {
        0.5 * (1.0 + (PI * (x - split) / (duty - split)).cos())
    }
}

/// Left-shoulder swing angle in degrees at time `t` (positive = behind the
/// body), plus the elbow bend and spine sway for the gait.
fn pose_angles(gait: &Gait, t: f64) -> (f64, f64, f64) {
    match gait {
        Gait::BriskWalk {
            stride_period_s,
            back_deg,
            front_deg,
            pulse_duty,
            rise_fraction,
            ..
        } => {
            let x = (t / stride_period_s).fract();
            let g = pulse(x, *pulse_duty, *rise_fraction);
            (back_deg + (front_deg - back_deg) * g, 0.0, 0.0)
        }
        Gait::SmoothWalk {
            stride_period_s,
            mid_deg,
            amp_deg,
            elbow_deg,
            ..
        } => (
            mid_deg + amp_deg * (2.0 * PI * t / stride_period_s).sin(),
            *elbow_deg,
            0.0,
        ),
        Gait::Standing {
            sway_period_s,
            sway_amp_deg,
            elbow_deg,
        } => (
            0.0,
            *elbow_deg,
            sway_amp_deg * (2.0 * PI * t / sway_period_s).sin(),
        ),
    }
}

fn walk_speed(gait: &Gait) -> f64 {
    match gait {
        Gait::BriskWalk { walk_speed_mps, .. } | Gait::SmoothWalk { walk_speed_mps, .. } => {
            *walk_speed_mps
        }
        Gait::Standing { .. } => 0.0,
    }
}

/// The stride (or sway) period of a gait, seconds.
pub fn period_s(gait: &Gait) -> f64 {
    match gait {
        Gait::BriskWalk {
            stride_period_s, ..
        }
        | Gait::SmoothWalk {
            stride_period_s, ..
        } => *stride_period_s,
        Gait::Standing { sway_period_s, .. } => *sway_period_s,
    }
}

/// Generate a motion clip for a gait. Values are quantized to 1e-5 so the
/// clip survives a text round trip unchanged.
pub fn generate_clip(gait: &Gait, duration_s: f64) -> MotionClip {
    let root = skeleton();
    let frame_time = 1.0 / FRAME_RATE_HZ;
    let frames = (duration_s / frame_time).round() as usize;
    let speed = walk_speed(gait);
    let layout_len = 6 + 15 * 3;
    let q = |v: f64| (v * 1e5).round() / 1e5;

    // Channel order is depth-first: Hips(6), Spine, Neck, Head, LeftShoulder,
    // LeftElbow, LeftWrist, RightShoulder, RightElbow, RightWrist, LeftHip,
    // LeftKnee, LeftAnkle, RightHip, RightKnee, RightAnkle (3 each, ZXY).
    const SPINE_X: usize = 6 + 1;
    const LSHOULDER_X: usize = 6 + 3 * 3 + 1;
    const LELBOW_X: usize = 6 + 4 * 3 + 1;

    let mut rows = Vec::with_capacity(frames);
    for k in 0..frames {
        let t = k as f64 * frame_time;
        let (swing_deg, elbow_deg, sway_deg) = pose_angles(gait, t);
        let mut row = vec![0.0f64; layout_len];
        row[1] = 0.95; // hips height
        row[2] = q(speed * t);
        row[SPINE_X] = q(sway_deg);
        row[LSHOULDER_X] = q(swing_deg);
        row[LELBOW_X] = q(elbow_deg);
        rows.push(row);
    }
    MotionClip::from_parts(root, frame_time, rows).expect("generated rows match the skeleton")
}
