//! ASCII phase diagram of the regime classifier over a (p+q, l) lattice.
//!
//! G: global for all data, B: blow-up for large data, ?: gap where neither
//! result applies. The map is drawn for two absorption exponents to show the
//! global window 1 < max(p+q, l) < m opening up as m grows.

use nonlocal_heat::theory::{classify_regime, RegimeLabel};

fn main() {
    for m in [1.0, 2.5] {
        println!("m = {m}, kernel mass positive; rows l ↓, columns p+q →");
        let grid: Vec<f64> = (1..=14).map(|i| 0.25 * i as f64).collect();
        print!("  l\\pq ");
        for &pq in &grid {
            print!("{pq:5.2}");
        }
        println!();
        for &l in grid.iter().rev() {
            print!("{l:6.2} ");
            for &pq in &grid {
                // split p+q evenly; the classifier only sees the sum
                let label = classify_regime(pq / 2.0, pq / 2.0, l, m, true).label;
                let ch = match label {
                    RegimeLabel::GlobalAllData => 'G',
                    RegimeLabel::BlowUpLargeData => 'B',
                    RegimeLabel::TheoryGap => '?',
                };
                print!("    {ch}");
            }
            println!();
        }
        println!();
    }

    let c = classify_regime(0.3, 0.5, 0.9, 2.0, true);
    println!("example: (p,q,l,m) = (0.3, 0.5, 0.9, 2) → {} via {:?}", c.label, c.citations);
    let c = classify_regime(1.5, 0.6, 1.0, 1.0, true);
    println!("example: (p,q,l,m) = (1.5, 0.6, 1.0, 1) → {} via {:?}", c.label, c.citations);
}
