//! Per-frame path-loss for an on-body Tx-Rx link.
//!
//! The straight Tx-Rx path is split into a free-space portion and, when the
//! segment crosses the torso cylinder, a body-surface portion measured as the
//! geodesic (helical) arc between the two surface intersection points. The
//! free-space portion uses the 2.4 GHz Friis form, the body-surface portion
//! the IEEE 802.15.6 CM3A form with a per-frame Gaussian shadowing draw.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bvh::MotionClip;
use crate::error::{DataError, GeometryError};
use crate::kinematics::{
    fit_torso_cylinder, node_position, pose_at_frame, BodyCylinder, NodePlacement, TorsoSpec,
};

/// Free-space reference loss at 1 m, 2.4 GHz, dB.
pub const FS_LOSS_AT_1M_DB: f64 = 40.0542;
/// Free-space distance slope, dB per decade.
pub const FS_SLOPE_DB_PER_DECADE: f64 = 20.0;
/// CM3A body-surface reference loss at 1 m, dB.
pub const BS_LOSS_AT_1M_DB: f64 = 36.1;
/// CM3A body-surface distance slope, dB per decade.
pub const BS_SLOPE_DB_PER_DECADE: f64 = 6.6;
/// CM3A shadowing standard deviation, dB.
pub const DEFAULT_SIGMA_N_DB: f64 = 3.8;

/// Chords shorter than this are treated as grazing, i.e. no intersection.
const MIN_CHORD_M: f64 = 1e-3;

/// How a Tx-Rx segment splits around the torso.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSegmentation {
    /// Free-space portion, meters. Equals the full Euclidean distance when
    /// the segment misses the torso.
    pub d_fs: f64,
    /// Body-surface (curvilinear) portion, meters; zero without intersection.
    pub d_bs: f64,
    pub intersects: bool,
}

/// Seeded per-frame shadowing: N ~ Normal(0, sigma_N^2), drawn independently
/// per (link, frame) from a counter-keyed generator so traces are
/// reproducible regardless of evaluation order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ShadowingModel {
    pub sigma_n_db: f64,
    pub seed: u64,
}

impl ShadowingModel {
    pub fn new(sigma_n_db: f64, seed: u64) -> ShadowingModel {
        assert!(sigma_n_db >= 0.0, "sigma_N must be nonnegative");
        ShadowingModel { sigma_n_db, seed }
    }

    /// One shadowing draw for the given link and frame, dB.
    pub fn draw(&self, link_id: &str, frame: u64) -> f64 {
        if self.sigma_n_db == 0.0 {
            return 0.0;
        }
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&fnv1a(link_id.as_bytes()).to_le_bytes());
        key[16..24].copy_from_slice(&frame.to_le_bytes());
        key[24..32].copy_from_slice(&0x5748_414e_5349_4d00u64.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        Normal::new(0.0, self.sigma_n_db).unwrap().sample(&mut rng)
    }
}

/// FNV-1a, used to fold link identifiers into RNG keys. Stable across
/// platforms and releases, unlike the std hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}

/// Time series of per-frame path-loss for one link.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PathLossTrace {
    pub link_id: String,
    /// Seconds between samples.
    pub frame_time: f64,
    /// Path-loss per frame, dB.
    pub samples: Vec<f64>,
    /// Per-frame breakdown, present for emulated traces.
    pub components: Option<TraceComponents>,
}

/// Parallel per-frame component lists backing a [`PathLossTrace`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TraceComponents {
    pub d_fs_m: Vec<f64>,
    pub d_bs_m: Vec<f64>,
    pub n_db: Vec<f64>,
}

impl PathLossTrace {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 * self.frame_time
    }

    /// Frame index covering time `t` (last frame for `t` at or past the end).
    pub fn frame_at(&self, t: f64) -> usize {
        let idx = (t / self.frame_time).floor() as isize;
        idx.clamp(0, self.samples.len() as isize - 1) as usize
    }

    pub fn sample_at(&self, t: f64) -> f64 {
        self.samples[self.frame_at(t)]
    }

    /// CSV with header `frame,time_s,pl_db,d_fs_m,d_bs_m,n_db`, six
    /// fractional digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,time_s,pl_db,d_fs_m,d_bs_m,n_db\n");
        for (i, pl) in self.samples.iter().enumerate() {
            let (d_fs, d_bs, n) = match &self.components {
                Some(c) => (c.d_fs_m[i], c.d_bs_m[i], c.n_db[i]),
                None => (0.0, 0.0, 0.0),
            };
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                i,
                i as f64 * self.frame_time,
                pl,
                d_fs,
                d_bs,
                n
            ));
        }
        out
    }

    /// Parse either the emulator CSV (`frame,time_s,pl_db,...`) or a plain
    /// two-column `t_s,value` CSV into a trace.
    pub fn from_csv(text: &str) -> Result<PathLossTrace, crate::error::FormatError> {
        use crate::error::FormatError;
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut header: Option<Vec<String>> = None;
        for (row, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if row == 0 && cells.iter().any(|c| c.parse::<f64>().is_err()) {
                header = Some(cells.iter().map(|c| c.to_string()).collect());
                continue;
            }
            let parse = |cell: &str| {
                cell.trim().parse::<f64>().map_err(|_| FormatError::Csv {
                    row: row + 1,
                    message: format!("invalid number {cell:?}"),
                })
            };
            match &header {
                Some(h) if h.len() >= 3 && h[2] == "pl_db" => {
                    if cells.len() < 3 {
                        return Err(FormatError::Csv {
                            row: row + 1,
                            message: format!("expected {} columns, got {}", h.len(), cells.len()),
                        });
                    }
                    times.push(parse(cells[1])?);
                    values.push(parse(cells[2])?);
                }
                _ => {
                    if cells.len() < 2 {
                        return Err(FormatError::Csv {
                            row: row + 1,
                            message: "expected t_s,value".into(),
                        });
                    }
                    times.push(parse(cells[0])?);
                    values.push(parse(cells[1])?);
                }
            }
        }
        if values.len() < 2 {
            return Err(FormatError::Csv {
                row: 0,
                message: "need at least two samples".into(),
            });
        }
        let frame_time = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(frame_time > 0.0) {
            return Err(FormatError::Csv {
                row: 0,
                message: "time column is not increasing".into(),
            });
        }
        Ok(PathLossTrace {
            link_id: "csv".into(),
            frame_time,
            samples: values,
            components: None,
        })
    }
}

/// Friis free-space path-loss at 2.4 GHz, distance normalized to 1 m.
pub fn pl_fs(d_fs: f64) -> Result<f64, DataError> {
    if !(d_fs > 0.0) {
        return Err(DataError::NonpositiveDistance(d_fs));
    }
    Ok(FS_SLOPE_DB_PER_DECADE * d_fs.log10() + FS_LOSS_AT_1M_DB)
}

/// IEEE 802.15.6 CM3A body-surface path-loss with shadowing draw `n_db`.
pub fn pl_bs(d_bs: f64, n_db: f64) -> Result<f64, DataError> {
    if !(d_bs > 0.0) {
        return Err(DataError::NonpositiveDistance(d_bs));
    }
    Ok(BS_SLOPE_DB_PER_DECADE * d_bs.log10() + BS_LOSS_AT_1M_DB + n_db)
}

/// Geodesic distance between two points on the cylinder's lateral surface:
/// the straight line on the unrolled cylinder,
/// `sqrt((r * dtheta)^2 + dz^2)` with `dtheta` wrapped to `[0, pi]`.
pub fn helix_distance(
    p1: &Vector3<f64>,
    p2: &Vector3<f64>,
    cyl: &BodyCylinder,
) -> Result<f64, GeometryError> {
    let (theta1, z1) = surface_coords(p1, cyl)?;
    let (theta2, z2) = surface_coords(p2, cyl)?;
    let mut dtheta = (theta1 - theta2).abs() % (2.0 * std::f64::consts::PI);
    if dtheta > std::f64::consts::PI {
        dtheta = 2.0 * std::f64::consts::PI - dtheta;
    }
    let arc = cyl.radius * dtheta;
    let dz = z1 - z2;
    Ok((arc * arc + dz * dz).sqrt())
}

/// Cylinder surface coordinates (angle, axial height) of a lateral point.
fn surface_coords(p: &Vector3<f64>, cyl: &BodyCylinder) -> Result<(f64, f64), GeometryError> {
    let rel = p - cyl.base_center;
    let z = rel.dot(&cyl.axis);
    let radial = rel - cyl.axis.into_inner() * z;
    if (radial.norm() - cyl.radius).abs() > 1e-6 {
        return Err(GeometryError::PointOffSurface([p.x, p.y, p.z]));
    }
    let (u, v) = cyl_basis(cyl);
    Ok((radial.dot(&v).atan2(radial.dot(&u)), z))
}

/// Deterministic orthonormal basis perpendicular to the cylinder axis.
pub(crate) fn cyl_basis(cyl: &BodyCylinder) -> (Vector3<f64>, Vector3<f64>) {
    let a = cyl.axis.into_inner();
    let helper = if a.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = (helper - a * helper.dot(&a)).normalize();
    let v = a.cross(&u);
    (u, v)
}

/// Split the open segment tx-rx around the torso cylinder.
///
/// The segment intersects only when it crosses the finite lateral surface in
/// two points; tangent grazing and chords shorter than 1 mm count as
/// no intersection, as do entries through the end caps.
pub fn segment_path(
    tx: &Vector3<f64>,
    rx: &Vector3<f64>,
    cyl: &BodyCylinder,
) -> Result<PathSegmentation, GeometryError> {
    let d = rx - tx;
    let full = d.norm();
    if full < 1e-12 {
        return Err(GeometryError::CoincidentEndpoints);
    }
    for (which, p) in [("tx", tx), ("rx", rx)] {
        let z = cyl.axial(p);
        if cyl.radial(p) < cyl.radius - 1e-12 && z > 1e-12 && z < cyl.height - 1e-12 {
            return Err(GeometryError::NodeInsideCylinder {
                which,
                position: [p.x, p.y, p.z],
            });
        }
    }

    let los = PathSegmentation {
        d_fs: full,
        d_bs: 0.0,
        intersects: false,
    };

    // Quadratic for the infinite cylinder in the plane perpendicular to the
    // axis: |pp + t*dp|^2 = r^2.
    let a = cyl.axis.into_inner();
    let rel = tx - cyl.base_center;
    let dp = d - a * d.dot(&a);
    let pp = rel - a * rel.dot(&a);
    let qa = dp.dot(&dp);
    let qb = 2.0 * pp.dot(&dp);
    let qc = pp.dot(&pp) - cyl.radius * cyl.radius;
    if qa < 1e-18 {
        // Segment parallel to the axis: no lateral crossing possible.
        return Ok(los);
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return Ok(los);
    }
    let sq = disc.sqrt();
    let t1 = (-qb - sq) / (2.0 * qa);
    let t2 = (-qb + sq) / (2.0 * qa);

    let lateral = |t: f64| -> bool {
        if t <= 0.0 || t >= 1.0 {
            return false;
        }
        let z = cyl.axial(&(tx + d * t));
        (0.0..=cyl.height).contains(&z)
    };
    if !(lateral(t1) && lateral(t2)) {
        return Ok(los);
    }
    let p1 = tx + d * t1;
    let p2 = tx + d * t2;
    let chord = (p2 - p1).norm();
    if chord < MIN_CHORD_M {
        return Ok(los);
    }
    let d_bs = helix_distance(&p1, &p2, cyl)?;
    Ok(PathSegmentation {
        d_fs: full - chord,
        d_bs,
        intersects: true,
    })
}

/// Emulate the full path-loss trace for one link over a clip.
///
/// Per frame: pose, torso cylinder fit, segmentation, then
/// `PL = PL_fs(d_fs) + PL_bs(d_bs, N)` when the torso is crossed and plain
/// Friis over the full distance otherwise (the CM3A term diverges as
/// `d_bs -> 0`, so it is applied only to genuinely shadowed frames). The
/// shadowing draw is recorded for every frame but only enters shadowed ones.
pub fn path_loss_trace(
    clip: &MotionClip,
    tx: &NodePlacement,
    rx: &NodePlacement,
    torso: &TorsoSpec,
    shadow: &ShadowingModel,
) -> Result<PathLossTrace, GeometryError> {
    let link_id = format!("{}->{}", tx.joint, rx.joint);
    let n_frames = clip.frame_count;
    let mut samples = Vec::with_capacity(n_frames);
    let mut d_fs_m = Vec::with_capacity(n_frames);
    let mut d_bs_m = Vec::with_capacity(n_frames);
    let mut n_db = Vec::with_capacity(n_frames);

    for frame in 0..n_frames {
        let at_frame = |e: GeometryError| GeometryError::AtFrame {
            frame,
            source: Box::new(e),
        };
        let pose = pose_at_frame(clip, frame)?;
        let cyl = fit_torso_cylinder(&pose, torso).map_err(at_frame)?;
        let tx_pos = node_position(&pose, tx).map_err(at_frame)?;
        let rx_pos = node_position(&pose, rx).map_err(at_frame)?;
        let seg = segment_path(&tx_pos, &rx_pos, &cyl).map_err(at_frame)?;
        let n = shadow.draw(&link_id, frame as u64);
        let pl = if seg.intersects {
            pl_fs(seg.d_fs).and_then(|fs| pl_bs(seg.d_bs, n).map(|bs| fs + bs))
        } else {
            pl_fs(seg.d_fs)
        }
        .map_err(|e| at_frame(GeometryError::Numeric(e.to_string())))?;
        samples.push(pl);
        d_fs_m.push(seg.d_fs);
        d_bs_m.push(seg.d_bs);
        n_db.push(n);
    }

    Ok(PathLossTrace {
        link_id,
        frame_time: clip.frame_time,
        samples,
        components: Some(TraceComponents {
            d_fs_m,
            d_bs_m,
            n_db,
        }),
    })
}
