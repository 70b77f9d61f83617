//! Blow-up time of the comparison ODE f' = a|Ω|·f^ρ − b·f^m by quadrature,
//! cross-checked against closed forms.
//!
//! For ρ = 2, m = 1 with a = |Ω| = b = 1 the antiderivative is elementary:
//! t0 = ln(f0/(f0 − 1)). For b = 0 the pure power gives
//! t0 = f0^{1−ρ}/(a|Ω|(ρ−1)).

use nonlocal_heat::theory::{ode_blowup_time, ode_comparison};

fn main() {
    println!("ρ = 2, m = 1, a = |Ω| = b = 1: t0 vs ln(f0/(f0−1))");
    println!("     f0      quadrature     closed form       error");
    for f0 in [1.5, 2.0, 3.0, 5.0, 10.0] {
        let t0 = ode_blowup_time(1.0, 1.0, 1.0, 2.0, 1.0, f0)
            .expect("valid exponents")
            .expect("above equilibrium");
        let exact = (f0 / (f0 - 1.0)).ln();
        println!("{f0:7.2}  {t0:14.10}  {exact:14.10}  {:10.2e}", (t0 - exact).abs());
    }

    println!("\nb = 0, ρ = 2.5: t0 vs f0^{{1−ρ}}/(a|Ω|(ρ−1))");
    for f0 in [1.0, 2.0, 4.0] {
        let t0 = ode_blowup_time(1.0, 1.0, 0.0, 2.5, 1.0, f0)
            .expect("valid exponents")
            .expect("pure power always blows");
        let exact = f0.powf(-1.5) / 1.5;
        println!("  f0 = {f0}: {t0:.10} vs {exact:.10} (error {:.1e})", (t0 - exact).abs());
    }

    println!("\nthe equilibrium gate:");
    for f0 in [0.5, 1.0, 1.0001] {
        let cmp = ode_comparison(1.0, 1.0, 1.0, 2.0, 1.0, f0).expect("valid exponents");
        println!(
            "  f0 = {:7.4} (f* = {}): t0 = {:?}",
            cmp.f0, cmp.equilibrium, cmp.blowup_time
        );
    }
}
