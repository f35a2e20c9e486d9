//! The transportation-simplex solver on a small instance, with its plan.
//!
//! Run with: cargo run --release --example exact_transport

use ais_lab::ipm::exact_transport;

fn main() {
    let supply = vec![0.4, 0.35, 0.25];
    let demand = vec![0.2, 0.3, 0.5];
    // Costs from points on a line at 0, 1, 3 vs 0.5, 2, 2.5.
    let src: [f64; 3] = [0.0, 1.0, 3.0];
    let dst: [f64; 3] = [0.5, 2.0, 2.5];
    let cost: Vec<Vec<f64>> = src
        .iter()
        .map(|a| dst.iter().map(|b| (a - b).abs()).collect())
        .collect();

    let (total, plan) = exact_transport(&supply, &demand, &cost).unwrap();
    println!("optimal cost: {total:.6}\n");
    println!("plan (rows = sources, cols = sinks):");
    for row in &plan {
        let cells: Vec<String> = row.iter().map(|f| format!("{f:6.3}")).collect();
        println!("  [{}]", cells.join(", "));
    }

    // Marginals are preserved exactly.
    for (i, s) in supply.iter().enumerate() {
        let row_sum: f64 = plan[i].iter().sum();
        assert!((row_sum - s).abs() < 1e-12);
    }
    for j in 0..demand.len() {
        let col_sum: f64 = plan.iter().map(|r| r[j]).sum();
        assert!((col_sum - demand[j]).abs() < 1e-12);
    }
    println!("\nmarginals check out to 1e-12");
}
