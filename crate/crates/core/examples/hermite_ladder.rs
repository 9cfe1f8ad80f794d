//! Ladder identities and the identity decomposition on random expansions,
//! plus the Riesz image of a single Hermite polynomial.
//!
//! `cargo run --release --example hermite_ladder -- [trials]`

use gauss_vlp::hermite::{
    default_cap, identity_decomposition_error, ladder_errors, riesz, CapPolicy, HermiteExpansion, MultiIndex,
    RieszVariant,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gauss_vlp::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    println!("dim\tcap\tidentity\tcommutator\tfactorization\tcomposition");
    for dim in 1..=3 {
        let cap = default_cap(dim);
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
        let mut worst = [0.0f64; 4];
        for _ in 0..trials {
            let e = HermiteExpansion::random(dim, cap, true, &mut rng);
            let l = ladder_errors(&e, 0.3, 0.45)?;
            for (w, v) in worst.iter_mut().zip([
                identity_decomposition_error(&e)?,
                l.commutator,
                l.factorization,
                l.composition,
            ]) {
                *w = w.max(v);
            }
        }
        println!(
            "{dim}\t{cap}\t{:.3e}\t{:.3e}\t{:.3e}\t{:.3e}",
            worst[0], worst[1], worst[2], worst[3]
        );
    }

    // The old variant lowers h_(2,1) to a multiple of h_(1,1); the new one raises it to h_(3,1).
    let f = HermiteExpansion::basis(2, 6, MultiIndex(vec![2, 1]))?;
    let alpha = MultiIndex(vec![1, 0]);
    println!();
    println!("variant\tindex\tcoefficient");
    for v in [RieszVariant::Old, RieszVariant::New] {
        for (idx, c) in riesz(&alpha, &f, v, CapPolicy::Strict)?.iter() {
            if c != 0.0 {
                println!("{v:?}\t{:?}\t{c:.12}", idx.0);
            }
        }
    }
    Ok(())
}
