//! Independent geometry oracles used to validate the analytic segment
//! splitting and the unrolled-cylinder geodesic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Vector3;
use wbansim::kinematics::BodyCylinder;

/// Verdict of the marching oracle for one Tx-Rx segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchVerdict {
    pub intersects: bool,
    pub d_fs: f64,
}

/// March the segment in fixed steps, testing inside/outside of the closed
/// finite cylinder at each sample. The inside interval (a cylinder is
/// convex, so there is at most one) is bracketed, its endpoints refined by
/// bisection, and each boundary crossing is classified as lateral-surface or
/// end-cap by the nearest boundary. The segment "intersects" exactly when
/// both crossings are lateral and the interior chord is at least 1 mm,
/// mirroring the documented contract.
pub fn march_segment(
    tx: &Vector3<f64>,
    rx: &Vector3<f64>,
    cyl: &BodyCylinder,
    step_m: f64,
) -> MarchVerdict {
    let d = rx - tx;
    let full = d.norm();
    let steps = (full / step_m).ceil() as usize;
    let inside = |t: f64| cyl.contains(&(tx + d * t));

    let mut t_enter = None;
    let mut t_exit = None;
    let mut prev_inside = inside(0.0);
    debug_assert!(!prev_inside);
    for k in 1..=steps {
        let t = (k as f64 / steps as f64).min(1.0);
        let now_inside = inside(t);
        if now_inside != prev_inside {
            let lo = (k - 1) as f64 / steps as f64;
            let refined = bisect(lo, t, &inside, now_inside);
            if now_inside {
                t_enter = Some(refined);
            } else {
                t_exit = Some(refined);
            }
        }
        prev_inside = now_inside;
    }

    let (t1, t2) = match (t_enter, t_exit) {
        (Some(a), Some(b)) => (a, b),
        // Grazing the boundary without a persistent inside interval, or no
        // contact at all.
        _ => {
            return MarchVerdict {
                intersects: false,
                d_fs: full,
            }
        }
    };
    let p1 = tx + d * t1;
    let p2 = tx + d * t2;
    let both_lateral = is_lateral(&p1, cyl) && is_lateral(&p2, cyl);
    let chord = (p2 - p1).norm();
    if both_lateral && chord >= 1e-3 {
        MarchVerdict {
            intersects: true,
            d_fs: full - chord,
        }
    } else {
        MarchVerdict {
            intersects: false,
            d_fs: full,
        }
    }
}

fn bisect(mut lo: f64, mut hi: f64, inside: &impl Fn(f64) -> bool, hi_inside: bool) -> f64 {
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) == hi_inside {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A boundary point is "lateral" when it sits closer to the curved wall than
/// to either cap plane.
fn is_lateral(p: &Vector3<f64>, cyl: &BodyCylinder) -> bool {
    let z = cyl.axial(p);
    let radial = cyl.radial(p);
    let to_wall = (cyl.radius - radial).abs();
    let to_cap = z.min(cyl.height - z).abs();
    to_wall < to_cap
}

// ---------------------------------------------------------------------------
// Surface graph-search shortest path
// ---------------------------------------------------------------------------

#[derive(PartialEq)]
struct QueueItem {
    cost_plus_h: f64,
    cost: f64,
    node: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on f = cost + heuristic.
        other
            .cost_plus_h
            .partial_cmp(&self.cost_plus_h)
            .unwrap_or(Ordering::Equal)
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest on-surface path between two lateral-surface points, found by A*
/// over a fine (angle x height) grid with edges to every coprime offset
/// within +/-7 cells. Grid nodes embed in 3D; edge weights are 3D chords and
/// the heuristic is the 3D straight-line distance, which never overestimates
/// a surface path.
pub fn surface_graph_distance(p1: &Vector3<f64>, p2: &Vector3<f64>, cyl: &BodyCylinder) -> f64 {
    // Independent orthonormal basis perpendicular to the axis.
    let a = cyl.axis.into_inner();
    let helper = if a.z.abs() < 0.9 {
        Vector3::z()
    } else {
        Vector3::x()
    };
    let u = (helper - a * helper.dot(&a)).normalize();
    let v = a.cross(&u);
    let coords = |p: &Vector3<f64>| {
        let rel = p - cyl.base_center;
        let z = rel.dot(&a);
        let theta = rel.dot(&v).atan2(rel.dot(&u));
        (theta, z)
    };
    let (theta1, z1) = coords(p1);
    let (theta2, z2) = coords(p2);

    let n_theta = 256usize;
    let z_lo = z1.min(z2);
    let z_hi = z1.max(z2);
    let n_z = (((z_hi - z_lo) / 0.004).ceil() as usize).max(1) + 1;
    let dz = if n_z > 1 {
        (z_hi - z_lo) / (n_z - 1) as f64
    } else {
        0.0
    };
    let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;

    let point_of = |col: usize, row: usize| -> Vector3<f64> {
        let theta = col as f64 * dtheta;
        let z = z_lo + row as f64 * dz;
        cyl.base_center + (u * theta.cos() + v * theta.sin()) * cyl.radius + a * z
    };

    let n_grid = n_theta * n_z;
    let start = n_grid;
    let goal = n_grid + 1;
    let pos = |node: usize| -> Vector3<f64> {
        match node {
            n if n == start => *p1,
            n if n == goal => *p2,
            n => point_of(n % n_theta, n / n_theta),
        }
    };

    const K: i64 = 7;
    let mut offsets: Vec<(i64, i64)> = Vec::new();
    for di in -K..=K {
        for dj in -K..=K {
            if (di, dj) == (0, 0) {
                continue;
            }
            if gcd(di.unsigned_abs(), dj.unsigned_abs()) == 1 {
                offsets.push((di, dj));
            }
        }
    }

    let grid_cell = |theta: f64, z: f64| -> (i64, i64) {
        let col = (theta.rem_euclid(2.0 * std::f64::consts::PI) / dtheta).round() as i64;
        let row = if dz > 0.0 {
            ((z - z_lo) / dz).round() as i64
        } else {
            0
        };
        (col.rem_euclid(n_theta as i64), row.clamp(0, n_z as i64 - 1))
    };
    let (c1, r1) = grid_cell(theta1, z1);
    let (c2, r2) = grid_cell(theta2, z2);

    let mut dist = vec![f64::INFINITY; n_grid + 2];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(QueueItem {
        cost_plus_h: (p2 - p1).norm(),
        cost: 0.0,
        node: start,
    });

    let neighbors = |node: usize, out: &mut Vec<(usize, f64)>| {
        out.clear();
        let p = pos(node);
        match node {
            n if n == start => {
                for di in -K..=K {
                    for dj in -K..=K {
                        let col = (c1 + di).rem_euclid(n_theta as i64) as usize;
                        let row = c_clamp(r1 + dj, n_z);
                        let q = point_of(col, row);
                        out.push((row * n_theta + col, (q - p).norm()));
                    }
                }
            }
            n if n == goal => {}
            n => {
                let col = (n % n_theta) as i64;
                let row = (n / n_theta) as i64;
                for &(di, dj) in &offsets {
                    let nc = (col + di).rem_euclid(n_theta as i64) as usize;
                    let nr = row + dj;
                    if nr < 0 || nr >= n_z as i64 {
                        continue;
                    }
                    let q = point_of(nc, nr as usize);
                    out.push((nr as usize * n_theta + nc, (q - p).norm()));
                }
                // Close enough to the goal: allow the final hop.
                let gc = (col - c2).rem_euclid(n_theta as i64).min(
                    (c2 - col).rem_euclid(n_theta as i64),
                );
                if gc <= K && (row - r2).abs() <= K {
                    out.push((goal, (*p2 - p).norm()));
                }
            }
        }
    };

    let mut scratch = Vec::new();
    while let Some(QueueItem { cost, node, .. }) = heap.pop() {
        if node == goal {
            return cost;
        }
        if cost > dist[node] + 1e-15 {
            continue;
        }
        neighbors(node, &mut scratch);
        for &(next, w) in &scratch {
            let nd = cost + w;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(QueueItem {
                    cost_plus_h: nd + (pos(next) - p2).norm(),
                    cost: nd,
                    node: next,
                });
            }
        }
    }
    f64::INFINITY
}

fn c_clamp(v: i64, n: usize) -> usize {
    v.clamp(0, n as i64 - 1) as usize
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}
