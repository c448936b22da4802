use atlas_core::dmaps::{
    build_markov, embed, kernel, markov_matrix, nystrom_extend, spectral_gap_report,
    DiffusionModel, KernelParams,
};
use atlas_core::state::ObservedPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pt(coords: Vec<f64>) -> ObservedPoint {
    ObservedPoint::new(coords)
}

fn random_cloud(m: usize, k: usize, seed: u64) -> Vec<ObservedPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| pt((0..k).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect()
}

fn circle(m: usize, radius: f64) -> Vec<ObservedPoint> {
    (0..m)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            pt(vec![radius * t.cos(), radius * t.sin()])
        })
        .collect()
}

#[test]
fn kernel_values_at_characteristic_distances() {
    let p = KernelParams::new(0.5);
    let a = pt(vec![0.0, 0.0]);
    assert_eq!(kernel(&a, &a, &p), 1.0);

    // squared distance equal to epsilon, inside the cutoff
    let b = pt(vec![0.5f64.sqrt(), 0.0]);
    assert!((kernel(&a, &b, &p) - (-1.0f64).exp()).abs() < 1e-15);

    let c = pt(vec![p.cutoff_radius * 1.01, 0.0]);
    assert_eq!(kernel(&a, &c, &p), 0.0);
}

#[test]
fn two_identical_points_give_the_hand_computed_matrix() {
    // q = (2, 2), k_alpha = 1/4 everywhere, d = 1/2, P = [[1/2, 1/2]; ...]
    let anchors = vec![pt(vec![0.3, -0.7]), pt(vec![0.3, -0.7])];
    let params = KernelParams::new(1.0);
    let mm = markov_matrix(&anchors, &params).unwrap();
    for i in 0..2 {
        for (j, v) in mm.row_entries(i) {
            assert!((v - 0.5).abs() < 1e-15, "P[{i}{j}] = {v}");
        }
    }
    let model = build_markov(&anchors, &params, 2, 0).unwrap();
    assert!((model.eigenvalues[0] - 1.0).abs() < 1e-10);
    assert!(model.eigenvalues[1].abs() < 1e-10);

    // both embedding coordinates collapse to zero
    let coords = embed(&model, 1).unwrap();
    for p in coords.points {
        assert!(p[0].abs() < 1e-10);
    }
}

#[test]
fn rows_are_stochastic_for_random_models() {
    for seed in 0..5 {
        let anchors = random_cloud(120, 3, seed);
        let params = KernelParams { alpha: 0.5 * seed as f64 / 4.0, ..KernelParams::new(0.3) };
        let mm = markov_matrix(&anchors, &params).unwrap();
        for (i, s) in mm.row_sums().iter().enumerate() {
            assert!((s - 1.0).abs() <= 1e-12, "row {i} sums to {s}");
        }
    }
}

#[test]
fn isolated_points_yield_the_identity_matrix() {
    // spacing far beyond the cutoff: no interactions at all
    let anchors = vec![pt(vec![0.0]), pt(vec![100.0]), pt(vec![200.0])];
    let params = KernelParams::new(0.01);
    let mm = markov_matrix(&anchors, &params).unwrap();
    for i in 0..3 {
        let entries = mm.row_entries(i);
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0], (i, 1.0));
    }
    let model = build_markov(&anchors, &params, 3, 0).unwrap();
    for l in 0..3 {
        assert!((model.eigenvalues[l] - 1.0).abs() < 1e-10);
    }
    assert_eq!(model.diagnostics.components, 3);
    assert_eq!(model.diagnostics.isolated, 3);
}

#[test]
fn disconnected_clusters_are_reported_and_still_embed() {
    let mut anchors = random_cloud(40, 2, 1);
    for p in random_cloud(40, 2, 2) {
        anchors.push(pt(p.coords.iter().map(|c| c + 1000.0).collect()));
    }
    let params = KernelParams::new(0.5);
    let model = build_markov(&anchors, &params, 4, 0).unwrap();
    assert_eq!(model.diagnostics.components, 2);
    assert!((model.eigenvalues[0] - 1.0).abs() < 1e-10);
    assert!((model.eigenvalues[1] - 1.0).abs() < 1e-10, "second unit eigenvalue missing");
}

#[test]
fn lambda0_is_one_and_psi0_constant_when_connected() {
    let anchors = random_cloud(200, 3, 5);
    let params = KernelParams::new(1.5);
    let model = build_markov(&anchors, &params, 6, 0).unwrap();
    assert_eq!(model.diagnostics.components, 1, "test needs a connected graph");
    assert!((model.eigenvalues[0] - 1.0).abs() <= 1e-10);
    let psi0 = &model.eigenvectors[0];
    let maxabs = psi0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let spread =
        psi0.iter().fold(0.0f64, |m, v| m.max((v - psi0[0]).abs()));
    assert!(spread <= 1e-8 * maxabs, "psi0 spread {spread:e}");
}

#[test]
fn spectrum_is_real_and_bounded() {
    for seed in 10..16 {
        let anchors = random_cloud(80, 4, seed);
        let params = KernelParams { alpha: 1.0, ..KernelParams::new(0.8) };
        let model = build_markov(&anchors, &params, 10, seed).unwrap();
        for (l, v) in model.eigenvalues.iter().enumerate() {
            assert!(
                (-1.0 - 1e-10..=1.0 + 1e-10).contains(v),
                "eigenvalue {l} = {v} out of bounds"
            );
        }
        for w in model.eigenvalues.windows(2) {
            assert!(w[0] >= w[1] - 1e-12, "eigenvalues not sorted");
        }
    }
}

#[test]
fn circle_embedding_preserves_angular_order() {
    let m = 200;
    let anchors = circle(m, 1.0);
    let params = KernelParams::new(0.02);
    let model = build_markov(&anchors, &params, 5, 3).unwrap();
    let coords = embed(&model, 2).unwrap();

    let angles: Vec<f64> = coords.points.iter().map(|p| p[1].atan2(p[0])).collect();
    let mut total = 0.0;
    let mut signs_pos = 0;
    let mut signs_neg = 0;
    for i in 0..m {
        let mut d = angles[(i + 1) % m] - angles[i];
        if d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        if d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        total += d;
        if d > 0.0 {
            signs_pos += 1;
        } else if d < 0.0 {
            signs_neg += 1;
        }
    }
    assert!(
        (total.abs() - 2.0 * std::f64::consts::PI).abs() < 1e-6,
        "embedding does not wind once: total {total}"
    );
    assert!(
        signs_pos == m || signs_neg == m,
        "angular order broken: {signs_pos} forward vs {signs_neg} backward steps"
    );
}

#[test]
fn zero_coordinates_requested_is_legal() {
    let anchors = random_cloud(30, 2, 8);
    let model = build_markov(&anchors, &KernelParams::new(1.0), 3, 0).unwrap();
    let coords = embed(&model, 0).unwrap();
    assert!(coords.points.iter().all(|p| p.is_empty()));
}

fn in_sample_consistency(model: &DiffusionModel) -> f64 {
    // worst deviation of the extension from lambda_l psi_l, relative to the
    // largest coordinate magnitude of each eigenvector
    let mut worst = 0.0f64;
    for l in 0..model.n_ev() {
        let scale = model.eigenvectors[l]
            .iter()
            .fold(0.0f64, |m, v| m.max((model.eigenvalues[l] * v).abs()))
            .max(1e-300);
        for (i, anchor) in model.anchors.iter().enumerate() {
            let ext = nystrom_extend(model, anchor).unwrap();
            let expected = model.eigenvalues[l] * model.eigenvectors[l][i];
            worst = worst.max((ext.y[l] - expected).abs() / scale);
        }
    }
    worst
}

#[test]
fn nystrom_extension_is_consistent_in_sample() {
    let anchors = random_cloud(100, 3, 21);
    let params = KernelParams { min_neighbors: 1, ..KernelParams::new(1.0) };
    let model = build_markov(&anchors, &params, 6, 1).unwrap();
    let dev = in_sample_consistency(&model);
    assert!(dev <= 1e-8, "in-sample deviation {dev:e}");
}

#[test]
fn far_point_with_single_neighbor_copies_the_nearest_anchor() {
    let anchors = vec![pt(vec![0.0]), pt(vec![1.0])];
    let params = KernelParams { min_neighbors: 1, ..KernelParams::new(0.01) };
    let model = build_markov(&anchors, &params, 2, 0).unwrap();
    let ext = nystrom_extend(&model, &pt(vec![5.0])).unwrap();
    assert!(ext.growth_steps > 0, "radius must have grown");
    for l in 0..model.n_ev() {
        // degenerate weight vector p = e_nearest
        assert!(
            (ext.y[l] - model.eigenvectors[l][1]).abs() < 1e-14,
            "coordinate {l} not copied from the nearest anchor"
        );
    }
}

#[test]
fn symmetric_midpoint_averages_the_two_anchors() {
    let anchors = vec![pt(vec![-1.0, 0.0]), pt(vec![1.0, 0.0])];
    let params = KernelParams { min_neighbors: 1, ..KernelParams::new(4.0) };
    let model = build_markov(&anchors, &params, 2, 0).unwrap();
    let ext = nystrom_extend(&model, &pt(vec![0.0, 0.0])).unwrap();
    for l in 0..2 {
        let mean = 0.5 * (model.eigenvectors[l][0] + model.eigenvectors[l][1]);
        assert!((ext.y[l] - mean).abs() < 1e-15, "coordinate {l}: {} vs {mean}", ext.y[l]);
    }
}

#[test]
fn extension_fails_only_when_nothing_is_reachable() {
    let anchors = vec![pt(vec![0.0]), pt(vec![1e30])];
    let params = KernelParams { min_neighbors: 2, ..KernelParams::new(0.01) };
    let model = build_markov(&anchors, &params, 2, 0).unwrap();
    assert!(nystrom_extend(&model, &pt(vec![0.0])).is_err());
}

#[test]
fn permuting_anchors_permutes_the_embedding() {
    let anchors = random_cloud(60, 2, 33);
    let params = KernelParams::new(0.7);
    let model = build_markov(&anchors, &params, 4, 2).unwrap();

    let mut permuted = anchors.clone();
    permuted.reverse();
    let model_p = build_markov(&permuted, &params, 4, 2).unwrap();

    let coords = embed(&model, 3).unwrap();
    let coords_p = embed(&model_p, 3).unwrap();
    let m = anchors.len();
    for i in 0..m {
        for l in 0..3 {
            let a = coords.points[i][l];
            let b = coords_p.points[m - 1 - i][l];
            assert!(
                (a - b).abs() <= 1e-6 * a.abs().max(1.0),
                "coordinate ({i}, {l}): {a} vs {b}"
            );
        }
    }
}

#[test]
fn spectral_report_flags_circle_harmonics() {
    let anchors = circle(200, 1.0);
    let model = build_markov(&anchors, &KernelParams::new(0.05), 6, 0).unwrap();
    let report = spectral_gap_report(&model);

    // psi_0 is constant: fitted exactly by the constant regressor
    assert!(report[0].harmonic_residual < 1e-8);
    // psi_3 and psi_4 are the double-frequency harmonics of (psi_1, psi_2)
    assert!(
        report[3].harmonic_residual < 0.15,
        "psi_3 residual {} should mark a harmonic",
        report[3].harmonic_residual
    );
    // the fundamental pair is NOT a function of the constant mode
    assert!(report[1].harmonic_residual > 0.5);
}

#[test]
fn spectral_report_on_the_two_point_model() {
    let anchors = vec![pt(vec![0.1, 0.2]), pt(vec![0.1, 0.2])];
    let model = build_markov(&anchors, &KernelParams::new(1.0), 2, 0).unwrap();
    let report = spectral_gap_report(&model);
    assert!((report[0].eigenvalue - 1.0).abs() < 1e-10);
    assert!(report[1].eigenvalue.abs() < 1e-10);
}

#[test]
fn alpha_one_removes_density_distortion() {
    // Points on a circle drawn with a smooth nonuniform density. With alpha=1
    // the embedding should stay close to the uniform-sample embedding
    // (evaluated at the same points via extension); alpha=0 feels the density.
    let m = 400;
    let uniform = circle(m, 1.0);
    let nonuniform: Vec<ObservedPoint> = (0..m)
        .map(|i| {
            let v = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let t = v + 0.35 * v.sin();
            pt(vec![t.cos(), t.sin()])
        })
        .collect();

    let params = KernelParams::new(0.02);
    let uniform_model = build_markov(&uniform, &params, 3, 0).unwrap();

    // reference: uniform-geometry coordinates at the nonuniform points
    let reference: Vec<[f64; 2]> = nonuniform
        .iter()
        .map(|x| {
            let e = nystrom_extend(&uniform_model, x).unwrap();
            [e.y[1], e.y[2]]
        })
        .collect();

    let deviation = |alpha: f64| -> f64 {
        let p = KernelParams { alpha, ..params };
        let model = build_markov(&nonuniform, &p, 3, 0).unwrap();
        let coords = embed(&model, 2).unwrap();
        procrustes_residual(&coords.points, &reference)
    };

    let dev1 = deviation(1.0);
    let dev0 = deviation(0.0);
    assert!(
        dev1 <= 10.0 * dev0,
        "alpha=1 deviation {dev1} should not exceed 10x the alpha=0 deviation {dev0}"
    );
    assert!(dev1 < 0.5, "alpha=1 embedding unrecognizable: {dev1}");
}

/// Best-fit residual after an orthogonal alignment with scaling (2D).
fn procrustes_residual(b: &[Vec<f64>], u: &[[f64; 2]]) -> f64 {
    use nalgebra::{Matrix2, SVD};
    let mut cross = Matrix2::<f64>::zeros();
    let mut bb = 0.0;
    let mut uu = 0.0;
    for (bi, ui) in b.iter().zip(u) {
        for r in 0..2 {
            for c in 0..2 {
                cross[(r, c)] += bi[r] * ui[c];
            }
            bb += bi[r] * bi[r];
            uu += ui[r] * ui[r];
        }
    }
    let svd = SVD::new(cross, true, true);
    let q = svd.u.unwrap() * svd.v_t.unwrap();
    let scale = svd.singular_values.iter().sum::<f64>() / bb;
    let mut res = 0.0;
    for (bi, ui) in b.iter().zip(u) {
        let bx = scale * (q[(0, 0)] * bi[0] + q[(1, 0)] * bi[1]);
        let by = scale * (q[(0, 1)] * bi[0] + q[(1, 1)] * bi[1]);
        res += (bx - ui[0]).powi(2) + (by - ui[1]).powi(2);
    }
    (res / uu).sqrt()
}
