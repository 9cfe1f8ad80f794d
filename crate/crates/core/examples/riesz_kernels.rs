//! Riesz transforms by kernel principal values against the spectral multipliers.
//!
//! `cargo run --release --example riesz_kernels`

use std::time::Instant;

use gauss_vlp::hermite::{HermiteExpansion, MultiIndex, RieszVariant};
use gauss_vlp::kernel::{calibration_check, interior_points, spectral_cross_check, QuadratureConfig};

fn main() -> gauss_vlp::Result<()> {
    let cfg = QuadratureConfig::default();
    println!("variant\talpha\tbeta\tmax_delta\tseconds");
    for (dim, alphas, betas) in [
        (1, vec![vec![1u32]], (0..=6).map(|b| vec![b]).collect::<Vec<_>>()),
        (
            2,
            vec![vec![1, 0], vec![0, 1]],
            MultiIndex::all_up_to(2, 3).into_iter().map(|b| b.0).collect(),
        ),
    ] {
        let points = interior_points(dim, 10, 1.5, 7);
        for a in &alphas {
            for b in &betas {
                let f = HermiteExpansion::basis(dim, 12, MultiIndex(b.clone()))?;
                let start = Instant::now();
                let c = spectral_cross_check(RieszVariant::New, &MultiIndex(a.clone()), &f, &points, &cfg)?;
                println!(
                    "new\t{a:?}\t{b:?}\t{:.3e}\t{:.2}",
                    c.max_delta,
                    start.elapsed().as_secs_f64()
                );
            }
        }
    }

    println!("\nvariant\talpha\tclosed_form\tfitted\trel_error");
    for v in [RieszVariant::Old, RieszVariant::New] {
        for a in [vec![1u32], vec![2], vec![1, 1], vec![2, 1]] {
            let c = calibration_check(v, &MultiIndex(a.clone()), &cfg)?;
            println!(
                "{v:?}\t{a:?}\t{:.12}\t{:.12}\t{:.2e}",
                c.closed_form, c.fitted, c.rel_error
            );
        }
    }
    Ok(())
}
