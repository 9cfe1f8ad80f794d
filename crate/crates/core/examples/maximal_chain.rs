//! Lemma A1, variable Jensen, Lemma A4 and the pointwise maximal bound over
//! random bump sums, for `p` and for `p/p⁻`.
//!
//! `cargo run --release --example maximal_chain -- [spec] [dim]`

use gauss_vlp::exponent::registry_spec;
use gauss_vlp::maximal::{
    jensen_variable_check, lemma_a1_check, lemma_a4_check, pointwise_maximal_check, MaximalConfig, MaximalInstance,
};
use gauss_vlp::norms::{eval_bumps, random_bump_sum};
use gauss_vlp::report::CheckReport;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gauss_vlp::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "inv_square".into());
    let dim: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let inst = MaximalInstance::standard(registry_spec(&name, dim)?, &MaximalConfig::default())?;
    let quot = inst.quotient();
    println!(
        "c_mu = {:.4e}  c_family = {:.4e}  delta = {:.4e}",
        inst.c_mu, inst.c_family, inst.delta
    );
    println!("{}", CheckReport::TABLE_HEADER);
    let lambdas = [0.0, 1e-8, 1e-4, 1e-2, 0.25, 1.0];
    println!("{}", lemma_a1_check(&inst, &lambdas, 1000, 1)?.table_row());
    println!("{}", lemma_a4_check(&inst, 64, 1000, 2)?.table_row());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..4 {
        let bumps = random_bump_sum(&mut rng, dim, 1 + k, 4.0);
        let raw = inst.function(|x| eval_bumps(&bumps, x));
        let f = inst.normalize_half(&raw)?;
        println!("{}", jensen_variable_check(&inst, &f, 250, 10 + k as u64)?.table_row());
        println!(
            "{}",
            pointwise_maximal_check(&inst, &f, 250, 20 + k as u64)?.table_row()
        );
        let g = quot.normalize_half(&raw)?;
        println!(
            "{}\t(p/p-)",
            pointwise_maximal_check(&quot, &g, 250, 30 + k as u64)?.table_row()
        );
    }
    Ok(())
}
