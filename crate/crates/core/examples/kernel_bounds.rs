//! Exponential kernel bounds over global-region pairs, one row per (d, m, case).
//!
//! `cargo run --release --example kernel_bounds -- [pairs]`

use std::time::Instant;

use gauss_vlp::hermite::MultiIndex;
use gauss_vlp::kernel::{boundsexp_check, BoundCase, GlobalPairSampler, KernelFamily, QuadratureConfig};
use gauss_vlp::report::CheckReport;

fn main() -> gauss_vlp::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let cfg = QuadratureConfig::default();
    let sampler = GlobalPairSampler::default();
    println!("{}\tseconds", CheckReport::TABLE_HEADER);
    for (dim, alphas) in [
        (1, vec![vec![1], vec![2], vec![3]]),
        (2, vec![vec![1, 0], vec![1, 1], vec![2, 1]]),
    ] {
        for a in alphas {
            let fam = KernelFamily::riesz(&MultiIndex(a))?;
            for case in [BoundCase::NonPositive, BoundCase::Positive] {
                let start = Instant::now();
                let r = boundsexp_check(&fam, 0.05, case, dim, &sampler, n, &cfg)?;
                println!("{}\t{:.1}", r.table_row(), start.elapsed().as_secs_f64());
            }
        }
    }
    Ok(())
}
