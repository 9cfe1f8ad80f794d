//! Ratio tables `‖M f‖/‖f‖` over the bump suite, on the default grid and on
//! a doubled one.
//!
//! `cargo run --release --example maximal_boundedness -- [spec] [dim]`

use gauss_vlp::exponent::registry_spec;
use gauss_vlp::maximal::{bump_suite, refinement_study, MaximalConfig};

fn main() -> gauss_vlp::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "inv_square".into());
    let dim: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let spec = registry_spec(&name, dim)?;
    let cfg = MaximalConfig {
        force: true,
        ..MaximalConfig::default()
    };
    let t = std::time::Instant::now();
    let study = refinement_study(&spec, &cfg, &bump_suite(dim))?;
    print!("{}", study.to_tsv());
    eprintln!("{name} d={dim}: {:.1}s", t.elapsed().as_secs_f64());
    Ok(())
}
