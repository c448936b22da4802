use atlas_core::dimension::coarse_scan;
use atlas_core::state::ObservedPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
#[ignore]
fn slope_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let anchors: Vec<ObservedPoint> = (0..2000)
        .map(|_| {
            let t: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            ObservedPoint::new(vec![t.cos(), t.sin()])
        })
        .collect();
    let scan = coarse_scan(&anchors, -30, 10).unwrap();
    for i in 0..scan.slopes.len() {
        println!(
            "eps={:12.5e}  S={:12.5e}  S_next={:12.5e}  a={:8.4}",
            scan.slope_epsilons[i], scan.s_values[i], scan.s_values[i + 1], scan.slopes[i]
        );
    }
}
