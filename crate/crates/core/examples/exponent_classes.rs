//! Run every class check on the bundled exponent registry.
//!
//! `cargo run --release --example exponent_classes -- [dim]`

use gauss_vlp::classes::{
    check_diening_lebesgue, check_lh0, check_lhinf, check_p_mu, equivalence_probe, nekvinda_check, BallSampler,
    PairSampler, RadialSampler,
};
use gauss_vlp::exponent::registry;
use gauss_vlp::gauss::MeasureHandle;
use gauss_vlp::report::ConditionReport;

fn main() -> gauss_vlp::Result<()> {
    let dim: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let gamma = MeasureHandle::gaussian(dim);
    let (pairs, radial, balls) = (PairSampler::default(), RadialSampler::default(), BallSampler::default());

    println!("exponent\t{}\thalf", ConditionReport::TABLE_HEADER);
    for (name, spec) in registry(dim) {
        let eq = equivalence_probe(&spec, &radial, &balls, 1000)?;
        let mut rows = vec![
            check_lh0(&spec, &pairs, 2000)?,
            check_lhinf(&spec, &radial)?,
            check_diening_lebesgue(&spec, &balls, 1000)?,
            check_p_mu(&spec, &gamma, &balls, 1000)?,
        ];
        rows.extend(eq.reports().into_iter().cloned());
        if spec.p_inf().is_some() && dim <= 3 {
            rows.push(nekvinda_check(&spec, &gamma, &[1.1, 1.5, 2.0, 4.0, 8.0], 6.0)?);
        }
        for r in &rows {
            println!("{name}\t{}\t{:.3e}", r.table_row(), r.half_sample_constant);
        }
        println!("{name}\tequivalence consistent: {}", eq.consistent);
    }
    Ok(())
}
