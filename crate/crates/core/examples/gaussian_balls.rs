//! Gaussian ball measures against their lower bounds: one constant fitted on
//! a calibration set, validated on a fresh one.
//!
//! `cargo run --release --example gaussian_balls -- [per_case]`

use gauss_vlp::gauss::{lower_bound_fit, lower_bound_gamma, Ball, MeasureHandle};

fn main() -> gauss_vlp::Result<()> {
    let per_case: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(334);
    let g2 = MeasureHandle::gaussian(2);
    println!("center\tradius\tgamma(B)\tcase\tvariable_part");
    for (c, r) in [
        ([0.0, 0.0], 1.0),
        ([3.0, 0.0], 1.0),
        ([0.0, 4.0], 0.5),
        ([6.0, 0.0], 0.1),
    ] {
        let b = Ball::new(c.to_vec(), r)?;
        let lb = lower_bound_gamma(&b);
        println!(
            "{c:?}\t{r}\t{:.6e}\t{:?}\t{:.6e}",
            g2.measure_ball(&b, 1e-10)?,
            lb.case,
            lb.variable_part
        );
    }
    println!();
    println!("dim\tc\tcalibration\tvalidation\tviolations\tpass\tmin ratio per case");
    for dim in 1..=3 {
        let t = std::time::Instant::now();
        let fit = lower_bound_fit(dim, per_case, 21)?;
        let mins: Vec<String> = fit
            .per_case
            .iter()
            .map(|(c, n, m)| format!("{c:?}:{n}:{m:.3e}"))
            .collect();
        println!(
            "{dim}\t{:.6e}\t{}\t{}\t{}\t{}\t{}\t({:.1}s)",
            fit.c,
            fit.calibration,
            fit.validation,
            fit.violations,
            fit.pass,
            mins.join(" "),
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
