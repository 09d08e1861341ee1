// Temporary tuning probe; prints PL distributions for the built-in gaits.
use nalgebra::Vector3;
use wbansim::channel::{path_loss_trace, ShadowingModel};
use wbansim::kinematics::{NodePlacement, TorsoSpec};
use wbansim::synth::{generate_clip, Gait};

fn stats(name: &str, samples: &[f64]) {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pct = |p: f64| sorted[((sorted.len() - 1) as f64 * p) as usize];
    let above = |thr: f64| {
        sorted.iter().filter(|v| **v > thr).count() as f64 / sorted.len() as f64
    };
    println!(
        "{name}: min {:.2} p10 {:.2} p50 {:.2} p60 {:.2} p75 {:.2} p90 {:.2} max {:.2}",
        sorted[0],
        pct(0.1),
        pct(0.5),
        pct(0.6),
        pct(0.75),
        pct(0.9),
        sorted[sorted.len() - 1]
    );
    for thr in [58.0, 60.0, 62.0, 63.0, 64.0, 65.0, 66.0] {
        print!("  >{thr}: {:.3}", above(thr));
    }
    println!();
}

fn main() {
    let torso = TorsoSpec {
        hip_joints: vec!["Hips".into()],
        neck_joint: "Neck".into(),
        radius_m: 0.155,
    };
    let tx = NodePlacement::at_joint("LeftWrist");
    let rx = NodePlacement::with_offset("RightHip", Vector3::new(0.06, 0.09, 0.11));
    let shadow = ShadowingModel::new(0.0, 1);

    for (name, gait) in [
        ("brisk", Gait::brisk()),
        ("smooth", Gait::smooth()),
        ("standing", Gait::standing()),
    ] {
        let clip = generate_clip(&gait, 20.0);
        let trace = path_loss_trace(&clip, &tx, &rx, &torso, &shadow).unwrap();
        stats(name, &trace.samples);
        let frac_shadowed = trace
            .components
            .as_ref()
            .unwrap()
            .d_bs_m
            .iter()
            .filter(|d| **d > 0.0)
            .count() as f64
            / trace.samples.len() as f64;
        println!("  shadowed fraction: {frac_shadowed:.3}");
    }
}
