//! Biovision Hierarchy (BVH) motion-capture parsing.
//!
//! A BVH document has a `HIERARCHY` section describing a tree of joints
//! (offsets plus per-joint channel lists) followed by a `MOTION` section with
//! one whitespace-separated row of channel values per frame. Rows are
//! consumed in depth-first joint order, each joint taking exactly its
//! declared channels.

use crate::error::BvhError;
use nalgebra::Vector3;

/// One degree of freedom of a joint, in the order declared by the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    fn from_token(tok: &str) -> Option<Self> {
        match tok {
            "Xposition" => Some(Channel::Xposition),
            "Yposition" => Some(Channel::Yposition),
            "Zposition" => Some(Channel::Zposition),
            "Xrotation" => Some(Channel::Xrotation),
            "Yrotation" => Some(Channel::Yrotation),
            "Zrotation" => Some(Channel::Zrotation),
            _ => None,
        }
    }

    pub fn is_position(self) -> bool {
        matches!(
            self,
            Channel::Xposition | Channel::Yposition | Channel::Zposition
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }
}

/// A node of the skeleton tree. End sites carry only an offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    /// Offset from the parent joint, in the file's length units.
    pub offset: Vector3<f64>,
    pub channels: Vec<Channel>,
    pub children: Vec<Joint>,
    pub is_end_site: bool,
}

/// A parsed motion clip: skeleton plus per-frame channel data.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionClip {
    pub root: Joint,
    pub frame_count: usize,
    /// Seconds per frame, strictly positive.
    pub frame_time: f64,
    /// `frame_count` rows, each `channel_count()` values, laid out flat.
    frames: Vec<f64>,
    channel_count: usize,
}

impl MotionClip {
    /// Total channel count across all joints, depth-first.
    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    /// One frame row; `index` must be in range.
    pub fn frame(&self, index: usize) -> &[f64] {
        let w = self.channel_count;
        &self.frames[index * w..(index + 1) * w]
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_count as f64 * self.frame_time
    }

    /// Non-end-site joints in depth-first document order.
    pub fn joints(&self) -> Vec<&Joint> {
        let mut out = Vec::new();
        collect_joints(&self.root, &mut out);
        out
    }

    /// Multiply every joint offset and every position-channel value by
    /// `scale`. Used to convert dataset units to meters and to rescale the
    /// skeleton to a target stature; rotations are untouched.
    pub fn scale_lengths(&self, scale: f64) -> MotionClip {
        let mut clip = self.clone();
        scale_offsets(&mut clip.root, scale);
        let layout = ChannelLayout::of(&clip.root);
        for row in 0..clip.frame_count {
            let base = row * clip.channel_count;
            for (col, channel) in layout.columns.iter().enumerate() {
                if channel.is_position() {
                    clip.frames[base + col] *= scale;
                }
            }
        }
        clip
    }

    pub fn from_parts(
        root: Joint,
        frame_time: f64,
        rows: Vec<Vec<f64>>,
    ) -> Result<MotionClip, BvhError> {
        let channel_count = count_channels(&root);
        let frame_count = rows.len();
        let mut frames = Vec::with_capacity(frame_count * channel_count);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != channel_count {
                return Err(BvhError::Structure {
                    line: 0,
                    message: format!(
                        "frame {} has {} values, hierarchy declares {} channels",
                        i,
                        row.len(),
                        channel_count
                    ),
                });
            }
            frames.extend(row);
        }
        if !(frame_time > 0.0) {
            return Err(BvhError::Structure {
                line: 0,
                message: format!("frame time must be positive, got {frame_time}"),
            });
        }
        Ok(MotionClip {
            root,
            frame_count,
            frame_time,
            frames,
            channel_count,
        })
    }
}

fn collect_joints<'a>(joint: &'a Joint, out: &mut Vec<&'a Joint>) {
    if joint.is_end_site {
        return;
    }
    out.push(joint);
    for child in &joint.children {
        collect_joints(child, out);
    }
}

fn scale_offsets(joint: &mut Joint, scale: f64) {
    joint.offset *= scale;
    for child in &mut joint.children {
        scale_offsets(child, scale);
    }
}

fn count_channels(joint: &Joint) -> usize {
    joint.channels.len() + joint.children.iter().map(count_channels).sum::<usize>()
}

/// Flat view of the channel columns: which joint and channel each motion
/// column belongs to, in depth-first order.
pub(crate) struct ChannelLayout {
    pub columns: Vec<Channel>,
}

impl ChannelLayout {
    pub fn of(root: &Joint) -> ChannelLayout {
        let mut columns = Vec::new();
        fn walk(j: &Joint, cols: &mut Vec<Channel>) {
            cols.extend(j.channels.iter().copied());
            for c in &j.children {
                walk(c, cols);
            }
        }
        walk(root, &mut columns);
        ChannelLayout { columns }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Tokens<'a> {
    /// (line number, token) pairs in document order.
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Tokens<'a> {
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate() {
            for tok in line.trim_end_matches('\r').split_whitespace() {
                items.push((i + 1, tok));
            }
        }
        Tokens { items, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.items.get(self.pos).copied();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos.min(self.items.len().saturating_sub(1)))
            .map(|(l, _)| *l)
            .unwrap_or(0)
    }

    fn expect(&mut self, keyword: &str) -> Result<usize, BvhError> {
        match self.next() {
            Some((line, tok)) if tok == keyword => Ok(line),
            Some((line, tok)) => Err(syntax(line, format!("expected {keyword:?}, found {tok:?}"))),
            None => Err(syntax(
                self.line(),
                format!("expected {keyword:?}, found end of input"),
            )),
        }
    }

    fn next_f64(&mut self, what: &str) -> Result<f64, BvhError> {
        match self.next() {
            Some((line, tok)) => tok
                .parse::<f64>()
                .map_err(|_| syntax(line, format!("invalid {what}: {tok:?}"))),
            None => Err(syntax(
                self.line(),
                format!("expected {what}, found end of input"),
            )),
        }
    }

    fn next_usize(&mut self, what: &str) -> Result<usize, BvhError> {
        match self.next() {
            Some((line, tok)) => tok
                .parse::<usize>()
                .map_err(|_| syntax(line, format!("invalid {what}: {tok:?}"))),
            None => Err(syntax(
                self.line(),
                format!("expected {what}, found end of input"),
            )),
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> BvhError {
    BvhError::Syntax {
        line,
        message: message.into(),
    }
}

fn structure(line: usize, message: impl Into<String>) -> BvhError {
    BvhError::Structure {
        line,
        message: message.into(),
    }
}

/// Parse a complete BVH document.
///
/// Offsets are kept in the file's units; apply [`MotionClip::scale_lengths`]
/// afterwards if a unit conversion is needed. Deterministic: the same bytes
/// always produce the same clip.
pub fn parse_bvh(text: &str) -> Result<MotionClip, BvhError> {
    let mut toks = Tokens::new(text);
    toks.expect("HIERARCHY")?;
    toks.expect("ROOT")?;
    let root = parse_joint(&mut toks, false)?;

    let mut names = Vec::new();
    fn check_names(j: &Joint, names: &mut Vec<String>, line: usize) -> Result<(), BvhError> {
        if !j.is_end_site {
            if names.iter().any(|n| n == &j.name) {
                return Err(structure(line, format!("duplicate joint name {:?}", j.name)));
            }
            names.push(j.name.clone());
        }
        for c in &j.children {
            check_names(c, names, line)?;
        }
        Ok(())
    }
    check_names(&root, &mut names, toks.line())?;

    toks.expect("MOTION")?;
    toks.expect("Frames:")?;
    let frame_count = toks.next_usize("frame count")?;
    toks.expect("Frame")?;
    toks.expect("Time:")?;
    let ft_line = toks.line();
    let frame_time = toks.next_f64("frame time")?;
    if !(frame_time > 0.0) || !frame_time.is_finite() {
        return Err(structure(
            ft_line,
            format!("frame time must be positive, got {frame_time}"),
        ));
    }

    let channel_count = count_channels(&root);
    let mut frames = Vec::with_capacity(frame_count * channel_count);
    for row in 0..frame_count {
        // Rows are free-form whitespace separated; we only require the total
        // value count to line up, but diagnose a short row at the row level
        // by checking line continuity of the first missing value.
        for col in 0..channel_count {
            match toks.next() {
                Some((line, tok)) => {
                    let v = tok.parse::<f64>().map_err(|_| {
                        syntax(line, format!("invalid motion value {tok:?}"))
                    })?;
                    frames.push(v);
                }
                None => {
                    return Err(structure(
                        toks.line(),
                        format!(
                            "frame {row} ended after {col} of {channel_count} channel values"
                        ),
                    ));
                }
            }
        }
    }
    if let Some((line, tok)) = toks.peek() {
        return Err(structure(
            line,
            format!("unexpected trailing token {tok:?} after {frame_count} frames"),
        ));
    }

    Ok(MotionClip {
        root,
        frame_count,
        frame_time,
        frames,
        channel_count,
    })
}

/// Parses the body of a joint starting at its name token (the `ROOT`/`JOINT`
/// keyword has already been consumed).
fn parse_joint(toks: &mut Tokens, is_end_site: bool) -> Result<Joint, BvhError> {
    let name = if is_end_site {
        String::new()
    } else {
        match toks.next() {
            Some((_, tok)) => tok.to_string(),
            None => return Err(syntax(toks.line(), "expected joint name")),
        }
    };
    toks.expect("{")?;
    let off_line = toks.expect("OFFSET")?;
    let x = toks.next_f64("offset value")?;
    let y = toks.next_f64("offset value")?;
    let z = toks.next_f64("offset value")?;
    if ![x, y, z].iter().all(|v| v.is_finite()) {
        return Err(structure(off_line, "non-finite offset"));
    }

    let mut joint = Joint {
        name,
        offset: Vector3::new(x, y, z),
        channels: Vec::new(),
        children: Vec::new(),
        is_end_site,
    };

    loop {
        match toks.next() {
            Some((_, "}")) => break,
            Some((line, "CHANNELS")) => {
                if is_end_site {
                    return Err(structure(line, "end sites cannot declare channels"));
                }
                let n = toks.next_usize("channel count")?;
                for _ in 0..n {
                    match toks.next() {
                        Some((l, tok)) => {
                            let ch = Channel::from_token(tok)
                                .ok_or_else(|| syntax(l, format!("unknown channel {tok:?}")))?;
                            if joint.channels.contains(&ch) {
                                return Err(structure(
                                    l,
                                    format!("duplicate channel {:?}", ch.name()),
                                ));
                            }
                            joint.channels.push(ch);
                        }
                        None => return Err(syntax(toks.line(), "expected channel name")),
                    }
                }
            }
            Some((line, "JOINT")) => {
                if is_end_site {
                    return Err(structure(line, "end sites cannot have children"));
                }
                joint.children.push(parse_joint(toks, false)?);
            }
            Some((line, "End")) => {
                if is_end_site {
                    return Err(structure(line, "end sites cannot have children"));
                }
                match toks.next() {
                    Some((_, "Site")) | Some((_, "site")) => {}
                    Some((l, tok)) => {
                        return Err(syntax(l, format!("expected \"Site\", found {tok:?}")))
                    }
                    None => return Err(syntax(toks.line(), "expected \"Site\"")),
                }
                joint.children.push(parse_joint(toks, true)?);
            }
            Some((line, tok)) => {
                return Err(syntax(
                    line,
                    format!("expected OFFSET/CHANNELS/JOINT/End Site/}}, found {tok:?}"),
                ))
            }
            None => return Err(syntax(toks.line(), "unbalanced braces: missing \"}\"")),
        }
    }
    Ok(joint)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "HIERARCHY\n\
        ROOT Hips\n\
        {\n\
        \tOFFSET 0.0 0.0 0.0\n\
        \tCHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n\
        \tEnd Site\n\
        \t{\n\
        \t\tOFFSET 0.0 0.1 0.0\n\
        \t}\n\
        }\n\
        MOTION\n\
        Frames: 1\n\
        Frame Time: 0.00833333\n\
        0 0 0 0 0 0\n";

    #[test]
    fn minimal_file_parses() {
        let clip = parse_bvh(MINIMAL).unwrap();
        assert_eq!(clip.frame_count, 1);
        assert_eq!(clip.channel_count(), 6);
        assert!((clip.frame_time - 1.0 / 120.0).abs() < 1e-6);
        assert_eq!(clip.frame(0), &[0.0; 6]);
        assert_eq!(clip.joints().len(), 1);
    }

    #[test]
    fn crlf_and_blank_lines_tolerated() {
        let text = MINIMAL.replace('\n', "\r\n") + "\r\n\r\n";
        let clip = parse_bvh(&text).unwrap();
        assert_eq!(clip.frame_count, 1);
    }

    #[test]
    fn short_motion_row_is_structural_error() {
        let text = MINIMAL.replace("0 0 0 0 0 0", "0 0 0 0 0");
        match parse_bvh(&text) {
            Err(BvhError::Structure { .. }) => {}
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_frame_time_rejected() {
        let text = MINIMAL.replace("0.00833333", "0");
        match parse_bvh(&text) {
            Err(BvhError::Structure { line, .. }) => assert_eq!(line, 13),
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn unbalanced_braces_reported_with_line() {
        let text = "HIERARCHY\nROOT A\n{\nOFFSET 0 0 0\nCHANNELS 3 Xrotation Yrotation Zrotation\n";
        match parse_bvh(text) {
            Err(BvhError::Syntax { .. }) => {}
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_channel_rejected() {
        let text = MINIMAL.replace(
            "CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation",
            "CHANNELS 6 Xposition Xposition Zposition Zrotation Xrotation Yrotation",
        );
        match parse_bvh(&text) {
            Err(BvhError::Structure { message, .. }) => {
                assert!(message.contains("duplicate channel"))
            }
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn end_site_with_channels_rejected() {
        let text = "HIERARCHY\nROOT A\n{\nOFFSET 0 0 0\nCHANNELS 3 Xrotation Yrotation Zrotation\n\
            End Site\n{\nOFFSET 0 1 0\nCHANNELS 3 Xrotation Yrotation Zrotation\n}\n}\n\
            MOTION\nFrames: 0\nFrame Time: 0.01\n";
        match parse_bvh(text) {
            Err(BvhError::Structure { message, .. }) => {
                assert!(message.contains("end sites"))
            }
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn depth_first_channel_order() {
        // Two joints under the root; sentinel values confirm each joint
        // consumes its own channels in document order.
        let text = "HIERARCHY\nROOT A\n{\nOFFSET 0 0 0\nCHANNELS 3 Xposition Yposition Zposition\n\
            JOINT B\n{\nOFFSET 0 1 0\nCHANNELS 1 Xrotation\n\
            JOINT C\n{\nOFFSET 0 1 0\nCHANNELS 1 Yrotation\nEnd Site\n{\nOFFSET 0 1 0\n}\n}\n}\n\
            JOINT D\n{\nOFFSET 1 0 0\nCHANNELS 1 Zrotation\nEnd Site\n{\nOFFSET 0 1 0\n}\n}\n}\n\
            MOTION\nFrames: 1\nFrame Time: 0.01\n10 20 30 1 2 3\n";
        let clip = parse_bvh(text).unwrap();
        let layout = ChannelLayout::of(&clip.root);
        assert_eq!(
            layout.columns,
            vec![
                Channel::Xposition,
                Channel::Yposition,
                Channel::Zposition,
                Channel::Xrotation,
                Channel::Yrotation,
                Channel::Zrotation,
            ]
        );
        let names: Vec<_> = clip.joints().iter().map(|j| j.name.clone()).collect();
        assert_eq!(names, ["A", "B", "C", "D"]);
    }

    #[test]
    fn scale_lengths_touches_offsets_and_position_channels_only() {
        let text = "HIERARCHY\nROOT A\n{\nOFFSET 0 0 0\n\
            CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n\
            JOINT B\n{\nOFFSET 0 2 0\nCHANNELS 1 Xrotation\nEnd Site\n{\nOFFSET 0 1 0\n}\n}\n}\n\
            MOTION\nFrames: 1\nFrame Time: 0.01\n1 2 3 45 45 45 90\n";
        let clip = parse_bvh(text).unwrap().scale_lengths(2.0);
        assert_eq!(clip.frame(0), &[2.0, 4.0, 6.0, 45.0, 45.0, 45.0, 90.0]);
        assert_eq!(clip.joints()[1].offset, Vector3::new(0.0, 4.0, 0.0));
    }
}
