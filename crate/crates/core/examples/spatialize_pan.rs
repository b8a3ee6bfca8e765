//! Binaural cues for a source circling the listener: ITD, level per ear and
//! the interaural level difference measured on the rendered signal.
//!
//! ```text
//! cargo run -p soundscape --example spatialize_pan
//! ```

use std::sync::Arc;

use soundscape::binaural::{
    distance_gain, itd_delays, spherical_head_set, DistanceModel, SourcePose, SpatialMode, SpatializerState,
};

fn energy_db(x: &[f32]) -> f64 {
    10.0 * x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().max(1e-20).log10()
}

fn main() {
    let hrirs = Arc::new(spherical_head_set(48_000));
    let model = DistanceModel::default();
    let head = 0.56;
    // white-ish test signal, deterministic
    let mut seed = 0x2545f491u32;
    let noise: Vec<f32> = (0..9600)
        .map(|_| {
            seed ^= seed << 13;
            seed ^= seed >> 17;
            seed ^= seed << 5;
            seed as f32 / u32::MAX as f32 - 0.5
        })
        .collect();

    println!("{:>5} {:>9} {:>9}", "az", "ITD us", "L-R dB");
    for az_deg in (0..360).step_by(30) {
        let az = (az_deg as f64).to_radians();
        let pose = SourcePose::new(az, 0.0, 2.0);
        let mut sp = SpatializerState::new(Arc::clone(&hrirs), SpatialMode::FullHrir, head).unwrap();
        let [l, r] = sp.spatialize_block(&noise, &pose, &model);
        let d = itd_delays(head, az, 0.0);
        println!(
            "{az_deg:>5} {:>9.1} {:>9.2}",
            (d.right_s - d.left_s) * 1e6,
            energy_db(&l) - energy_db(&r)
        );
    }

    println!("\ndistance sweep (dB re 1 m)");
    for d in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        println!("{d:>6} m {:>8.2}", 20.0 * distance_gain(d, &model).log10());
    }
}
