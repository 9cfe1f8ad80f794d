//! Luxemburg norms of a few functions under constant and variable exponents,
//! with the classical norm alongside and the Hölder pairing bound.
//!
//! `cargo run --release --example luxemburg_norms -- [n_per_axis]`

use gauss_vlp::exponent::registry_spec;
use gauss_vlp::gauss::{BoxDomain, MeasureHandle};
use gauss_vlp::norms::{classical_norm, holder_check, luxemburg_norm, modular, Bump, GridFunction, DEFAULT_TOL};

fn main() -> gauss_vlp::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(800);
    let gamma = MeasureHandle::gaussian(1);
    let domain = BoxDomain::cube(1, 8.0);
    let functions: Vec<(&str, GridFunction)> = vec![
        ("one", GridFunction::on_box(&gamma, &domain, n, |_| 1.0)?),
        ("x", GridFunction::on_box(&gamma, &domain, n, |x| x[0])?),
        (
            "bump(c=2;w=0.5)",
            GridFunction::on_box(&gamma, &domain, n, |x| {
                Bump {
                    center: vec![2.0],
                    width: 0.5,
                    amplitude: 1.0,
                }
                .eval(x)
            })?,
        ),
        (
            "exp(x^2/8)",
            GridFunction::on_box(&gamma, &domain, n, |x| (x[0] * x[0] / 8.0).exp())?,
        ),
    ];
    println!("function\texponent\tluxemburg\tclassical\tmodular(f/norm)");
    for name in ["const2", "const3", "inv_square", "inv_shifted"] {
        let s = registry_spec(name, 1)?;
        for (label, f) in &functions {
            let norm = luxemburg_norm(f, &s, &gamma, DEFAULT_TOL)?;
            let classical = if s.p_minus() == s.p_plus() {
                format!("{:.9e}", classical_norm(f, s.p_minus()))
            } else {
                "-".into()
            };
            let unit = modular(&f.scaled(1.0 / norm), &s, &gamma)?;
            println!("{label}\t{name}\t{norm:.9e}\t{classical}\t{unit:.12}");
        }
    }

    let s = registry_spec("inv_square", 1)?;
    println!();
    println!("f\tg\tpairing\t2|f||g|'");
    for (i, (a, f)) in functions.iter().enumerate() {
        for (b, g) in &functions[i + 1..] {
            let h = holder_check(f, g, &s, &gamma)?;
            println!("{a}\t{b}\t{:.6e}\t{:.6e}", h.lhs, h.rhs);
        }
    }
    Ok(())
}
