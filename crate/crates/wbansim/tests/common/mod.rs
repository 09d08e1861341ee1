//! Shared test support: a BVH serializer (kept out of the library on
//! purpose), fixture helpers, and independent geometry oracles.

#![allow(dead_code)]

pub mod oracles;

use std::fmt::Write as _;

use wbansim::bvh::{Joint, MotionClip};

/// Serialize a clip back to BVH text. Floats use the shortest round-trip
/// representation, so `parse(serialize(clip)) == clip` holds exactly.
pub fn serialize_bvh(clip: &MotionClip) -> String {
    let mut out = String::from("HIERARCHY\n");
    write_joint(&mut out, &clip.root, 0, true);
    out.push_str("MOTION\n");
    let _ = writeln!(out, "Frames: {}", clip.frame_count);
    let _ = writeln!(out, "Frame Time: {}", clip.frame_time);
    for i in 0..clip.frame_count {
        let row = clip.frame(i);
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

fn write_joint(out: &mut String, joint: &Joint, depth: usize, is_root: bool) {
    let pad = "\t".repeat(depth);
    if joint.is_end_site {
        let _ = writeln!(out, "{pad}End Site");
    } else if is_root {
        let _ = writeln!(out, "{pad}ROOT {}", joint.name);
    } else {
        let _ = writeln!(out, "{pad}JOINT {}", joint.name);
    }
    let _ = writeln!(out, "{pad}{{");
    let inner = "\t".repeat(depth + 1);
    let _ = writeln!(
        out,
        "{inner}OFFSET {} {} {}",
        joint.offset.x, joint.offset.y, joint.offset.z
    );
    if !joint.channels.is_empty() {
        let names: Vec<&str> = joint.channels.iter().map(|c| c.name()).collect();
        let _ = writeln!(
            out,
            "{inner}CHANNELS {} {}",
            joint.channels.len(),
            names.join(" ")
        );
    }
    for child in &joint.children {
        write_joint(out, child, depth + 1, false);
    }
    let _ = writeln!(out, "{pad}}}");
}
