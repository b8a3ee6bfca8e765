//! Fit peaking-biquad cascades to an HRIR set and report how close the
//! approximations get.
//!
//! ```text
//! cargo run -p soundscape --release --example fit_hrir [hrir_dir] [order]
//! ```
//!
//! Without a directory the built-in spherical-head set is thinned to the
//! horizontal plane and fitted.

use soundscape::binaural::{fit_iir_approximation, spherical_head_set, HrirSet};

fn main() {
    let mut args = std::env::args().skip(1);
    let set = match args.next() {
        Some(dir) => HrirSet::load_dir(dir).expect("load HRIR dir"),
        None => {
            let full = spherical_head_set(48_000);
            let keep: Vec<usize> = (0..full.grid().len()).filter(|&i| full.grid()[i].elevation == 0.0).collect();
            HrirSet::new(
                "horizontal",
                full.sample_rate(),
                keep.iter().map(|&i| full.grid()[i]).collect(),
                keep.iter().map(|&i| full.left(i).to_vec()).collect(),
                keep.iter().map(|&i| full.right(i).to_vec()).collect(),
            )
            .unwrap()
        }
    };
    let order: usize = args.next().map(|s| s.parse().expect("order")).unwrap_or(6);

    let fits = fit_iir_approximation(&set, order).expect("fit");
    println!("{} directions, order {order}", fits.directions.len());
    for d in &fits.directions {
        println!(
            "az {:>6.1} el {:>5.1}  left {:>5.2} dB  right {:>5.2} dB",
            d.azimuth, d.elevation, d.left.error_db, d.right.error_db
        );
    }
    for w in &fits.warnings {
        println!("warning: direction {}: {}", w.direction, w.message);
    }
    println!("worst RMS log-magnitude error {:.3} dB", fits.worst_error_db());
}
