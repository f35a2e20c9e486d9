//! The three probability metrics side by side on small distributions:
//! total variation (as an IPM, the L1 distance), exact Wasserstein, and
//! closed-form MMD, plus the Pinsker chain that sandwiches them.
//!
//! Run with: cargo run --release --example ipm_tour

use ais_lab::ipm::{
    distance_kernel, kl_and_pinsker, mmd_closed, tv_ipm, tv_std, wasserstein_exact, Anchor,
    DiscreteDist, KernelSpec, MetricSpec, PointSet,
};

fn main() {
    let p = DiscreteDist::new(vec![0.6, 0.3, 0.1, 0.0]).unwrap();
    let q = DiscreteDist::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let points = PointSet::Ids(4);

    println!("p = {:?}", p.probs);
    println!("q = {:?}", q.probs);
    println!("tv (L1 / classical)      : {:.6} / {:.6}", tv_ipm(&p, &q).unwrap(), tv_std(&p, &q).unwrap());

    let w_line = wasserstein_exact(&p, &q, &MetricSpec::Euclidean, &points).unwrap();
    let w_disc = wasserstein_exact(&p, &q, &MetricSpec::Discrete, &points).unwrap();
    println!("wasserstein (line metric): {w_line:.6}");
    println!("wasserstein (0/1 metric) : {w_disc:.6}   (= classical tv)");

    let energy = KernelSpec::Energy { exponent: 1.0 };
    let mmd_e = mmd_closed(&p, &q, &energy, &MetricSpec::Euclidean, &points).unwrap();
    let gauss = KernelSpec::Gaussian { bandwidth: 1.0 };
    let mmd_g = mmd_closed(&p, &q, &gauss, &MetricSpec::Euclidean, &points).unwrap();
    println!("mmd (energy p=1)         : {mmd_e:.6}");
    println!("mmd (gaussian bw=1)      : {mmd_g:.6}");

    // The anchored distance kernel gives the same MMD for any anchor.
    for anchor in [0usize, 2] {
        let k = distance_kernel(1.0, Anchor::Support(anchor)).unwrap();
        let d = mmd_closed(&p, &q, &k, &MetricSpec::Euclidean, &points).unwrap();
        println!("mmd via anchor {anchor}          : {d:.6}");
    }

    // Pinsker chain with the diameter of the line support.
    let chain = kl_and_pinsker(&p, &q, 3.0).unwrap();
    println!("\nkl(p || q)               : {:.6}", chain.kl);
    println!(
        "chain  W <= D tv <= D sqrt(kl/2): {:.6} <= {:.6} <= {:.6}",
        w_line,
        3.0 * chain.tv_std,
        chain.w_upper
    );
    assert!(w_line <= 3.0 * chain.tv_std + 1e-12);
    assert!(3.0 * chain.tv_std <= chain.w_upper + 1e-12);
}
