use proptest::collection::vec;
use proptest::prelude::*;

use eigenflow::data::{cluster_from_function, clustering_accuracy, three_moons, two_moons};
use eigenflow::flow::{extract_profile, rayleigh, run_flow, FlowParams, StepControl};
use eigenflow::functional::{prox_tv_1d_exact, Functional, ProxSettings};
use eigenflow::graph::{build_knn_graph, fiedler_vector, laplacian_matrix, p_laplacian_apply, KernelScale};
use eigenflow::scheme::{energy_report, run_scheme, verify_norm_identity, SchemeParams, StopReason};
use eigenflow::signal::{dist, dot, norm};
use eigenflow::{GraphTotalVariation, TotalVariation1d, WeightedGraph};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn signal(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-3.0..3.0f64, 2..max_len)
}

fn signal_pair(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..max_len).prop_flat_map(|n| (vec(-3.0..3.0f64, n), vec(-3.0..3.0f64, n)))
}

/// Random graph on `n` vertices: a spanning path plus extra chords, some
/// of which may fall out to leave several components.
fn graph(max_n: usize, connected: bool) -> impl Strategy<Value = WeightedGraph> {
    (3..max_n).prop_flat_map(move |n| {
        let path = vec(0.1..3.0f64, n - 1);
        let keep = vec(any::<bool>(), n - 1);
        let chords = vec((0..n, 0..n, 0.1..3.0f64), 0..2 * n);
        (Just(n), path, keep, chords).prop_map(move |(n, path, keep, chords)| {
            let mut edges: Vec<(usize, usize, f64)> = path
                .iter()
                .enumerate()
                .filter(|(i, _)| connected || keep[*i])
                .map(|(i, &w)| (i, i + 1, w))
                .collect();
            for (a, b, w) in chords {
                let (i, j) = (a.min(b), a.max(b));
                if i != j && !edges.iter().any(|e| e.0 == i && e.1 == j) {
                    edges.push((i, j, w));
                }
            }
            WeightedGraph::new(n, edges).unwrap()
        })
    })
}

fn points(max_n: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    vec((-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y)| [x, y]), 4..max_n)
}

fn mean_zero(mut f: Vec<f64>) -> Vec<f64> {
    let m = f.iter().sum::<f64>() / f.len() as f64;
    f.iter_mut().for_each(|x| *x -= m);
    f
}

fn primal_dual() -> ProxSettings {
    ProxSettings {
        direct_1d: false,
        ..ProxSettings::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn tv_is_absolutely_one_homogeneous(u in signal(40), g in graph(20, false)) {
        let tv = TotalVariation1d::new(u.len()).unwrap();
        let gtv = GraphTotalVariation::new(g.clone());
        let v: Vec<f64> = (0..g.n()).map(|i| u[i % u.len()]).collect();
        for a in [-2.0, -1.0, 0.5, 3.0] {
            for (fun, x) in [(&tv as &dyn Functional, &u), (&gtv, &v)] {
                let scaled: Vec<f64> = x.iter().map(|y| a * y).collect();
                let lhs = fun.eval(&scaled).unwrap();
                let rhs = a.abs() * fun.eval(x).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
            }
        }
    }

    #[test]
    fn prox_is_nonexpansive((v1, v2) in signal_pair(40), step in 0.01..2.0f64) {
        let tv = TotalVariation1d::new(v1.len()).unwrap();
        for settings in [ProxSettings::default(), primal_dual()] {
            let a = tv.prox(&v1, step, &settings).unwrap();
            let b = tv.prox(&v2, step, &settings).unwrap();
            let slack = 1e-6 * (norm(&v1) + norm(&v2));
            prop_assert!(dist(&a.u, &b.u) <= dist(&v1, &v2) + slack);
        }
    }

    #[test]
    fn graph_prox_is_nonexpansive(g in graph(16, true), seed in 0u64..1000, step in 0.05..1.0f64) {
        let gtv = GraphTotalVariation::new(g.clone());
        let v1: Vec<f64> = (0..g.n()).map(|i| ((i as u64 * 7 + seed) % 11) as f64 - 5.0).collect();
        let v2: Vec<f64> = (0..g.n()).map(|i| ((i as u64 * 3 + seed) % 13) as f64 * 0.5 - 3.0).collect();
        let a = gtv.prox(&v1, step, &ProxSettings::default()).unwrap();
        let b = gtv.prox(&v2, step, &ProxSettings::default()).unwrap();
        let slack = 1e-6 * (norm(&v1) + norm(&v2));
        prop_assert!(dist(&a.u, &b.u) <= dist(&v1, &v2) + slack);
    }

    #[test]
    fn primal_dual_prox_agrees_with_direct_solver(v in signal(64), step in 0.01..2.0f64) {
        let tv = TotalVariation1d::new(v.len()).unwrap();
        let pd = tv.prox(&v, step, &primal_dual()).unwrap();
        let exact = prox_tv_1d_exact(&v, step);
        prop_assert!(dist(&pd.u, &exact) <= 1e-6 * norm(&v).max(1e-12));
    }

    #[test]
    fn prox_residual_is_a_subgradient(v in signal(40), step in 0.002..2.0f64) {
        let tv = TotalVariation1d::new(v.len()).unwrap();
        let unpolished = ProxSettings { polish: false, ..primal_dual() };
        for settings in [ProxSettings::default(), primal_dual(), unpolished] {
            let sol = tv.prox(&v, step, &settings).unwrap();
            let p: Vec<f64> = v.iter().zip(sol.u.iter()).map(|(a, b)| (a - b) / step).collect();
            let m = tv.membership(&sol.u, &p, 10.0 * settings.gap_tol).unwrap();
            prop_assert!(m.member, "{m:?}");
        }
    }

    #[test]
    fn graph_prox_residual_is_a_subgradient(g in graph(16, false), step in 0.002..1.0f64) {
        let gtv = GraphTotalVariation::new(g.clone());
        let v: Vec<f64> = (0..g.n()).map(|i| ((i * 5) % 7) as f64 - 3.0).collect();
        for settings in [ProxSettings::default(), ProxSettings { polish: false, ..ProxSettings::default() }] {
            let sol = gtv.prox(&v, step, &settings).unwrap();
            let p: Vec<f64> = v.iter().zip(sol.u.iter()).map(|(a, b)| (a - b) / step).collect();
            let m = gtv.membership(&sol.u, &p, 10.0 * settings.gap_tol).unwrap();
            prop_assert!(m.member, "{m:?}");
        }
    }

    #[test]
    fn null_project_is_an_orthogonal_projection(g in graph(20, false), seed in 0u64..1000) {
        let gtv = GraphTotalVariation::new(g.clone());
        let n = g.n();
        let f: Vec<f64> = (0..n).map(|i| (((i as u64 + 1) * (seed + 3)) % 17) as f64 - 8.0).collect();
        let h: Vec<f64> = (0..n).map(|i| (((i as u64 + 5) * (seed + 7)) % 19) as f64 * 0.3).collect();
        let pf = gtv.null_project(&f).unwrap();
        let ph = gtv.null_project(&h).unwrap();
        let ppf = gtv.null_project(&pf).unwrap();
        prop_assert!(dist(&pf, &ppf) <= 1e-12 * norm(&f).max(1.0));
        let (a, b) = (dot(&pf, &h), dot(&f, &ph));
        prop_assert!((a - b).abs() <= 1e-10 * (norm(&f) * norm(&h)).max(1.0));
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn flow_invariants_hold(f in signal(32)) {
        let f = mean_zero(f);
        prop_assume!(norm(&f) > 1e-3);
        let tv = TotalVariation1d::new(f.len()).unwrap();
        for steps in [StepControl::Uniform, StepControl::EventAligned] {
            let params = FlowParams { steps, ..FlowParams::default() };
            let trace = run_flow(&tv, &f, &params).unwrap();
            prop_assert!(trace.extinct_at.is_some());
            let slack = 10.0 * params.prox.gap_tol;
            let report = trace.check(&tv).unwrap();
            prop_assert!(report.max_p_norm_increase <= slack);
            prop_assert!(report.max_rayleigh <= 1.0 + slack);
            prop_assert!(report.reconstruction_residual <= 2.0 * trace.extinction_threshold * trace.delta);
            let profile = extract_profile(&tv, &trace).unwrap();
            let m = tv.membership(&profile.p_star, &profile.p_star, 1e-4).unwrap();
            prop_assert!(m.member, "{m:?}");
        }
    }

    #[test]
    fn aligned_flow_steps_are_eigenfunctions(f in signal(32)) {
        let f = mean_zero(f);
        prop_assume!(norm(&f) > 1e-3);
        let tv = TotalVariation1d::new(f.len()).unwrap();
        let params = FlowParams { steps: StepControl::EventAligned, ..FlowParams::default() };
        let trace = run_flow(&tv, &f, &params).unwrap();
        for s in &trace.steps {
            let r = rayleigh(&tv, &s.p).unwrap();
            prop_assert!(r >= 1.0 - 1e-4, "step {}: R = {r}", s.k);
        }
    }

    #[test]
    fn scheme_energy_bookkeeping(f in signal(24)) {
        let tv = TotalVariation1d::new(f.len()).unwrap();
        let params = SchemeParams { max_atoms: 15, ..SchemeParams::default() };
        let dec = run_scheme(&tv, &f, &params).unwrap();
        prop_assert!(verify_norm_identity(&dec).max_error <= 1e-10);
        let energy = energy_report(&dec);
        let ff = energy.input_norm_sq;
        for (removed, increments) in energy.removed.iter().zip(&energy.increments) {
            prop_assert!(*removed <= ff * (1.0 + 1e-12));
            prop_assert!((removed - increments).abs() <= 1e-10 * ff.max(1e-300));
        }
        for atom in &dec.atoms {
            let m = tv.membership(&atom.profile.p_star, &atom.profile.p_star, 1e-3).unwrap();
            prop_assert!(m.member);
        }
    }

    #[test]
    fn orthogonal_stop_leaves_residual_untouched(f in signal(24), atoms in 0usize..4) {
        let tv = TotalVariation1d::new(f.len()).unwrap();
        let first = run_scheme(&tv, &f, &SchemeParams { max_atoms: atoms.max(1), ..SchemeParams::default() }).unwrap();
        prop_assume!(first.stop == StopReason::MaxAtoms);
        let params = SchemeParams { orthogonality_tol: 1e6, ..SchemeParams::default() };
        let dec = run_scheme(&tv, &first.residual, &params).unwrap();
        prop_assert_eq!(dec.stop, StopReason::Orthogonal);
        prop_assert!(dec.atoms.is_empty());
        prop_assert_eq!(dec.residual.to_vec(), dec.input.to_vec());
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn thresholding_is_scale_invariant(f in signal(60), a in 0.01..100.0f64, k in 2usize..4, seed in 0u64..100) {
        let scaled: Vec<f64> = f.iter().map(|x| a * x).collect();
        let (l1, l2) = match (cluster_from_function(&f, k, seed), cluster_from_function(&scaled, k, seed)) {
            (Ok(l1), Ok(l2)) => (l1, l2),
            (Err(_), Err(_)) => return Ok(()),
            (x, y) => return Err(TestCaseError::fail(format!("{x:?} vs {y:?}"))),
        };
        prop_assert_eq!(clustering_accuracy(&l1, &l2).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_ignores_label_names(
        labels in vec((0usize..4, 0usize..4), 1..80),
        perm in Just([0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = labels.into_iter().unzip();
        let base = clustering_accuracy(&pred, &truth).unwrap();
        let renamed: Vec<usize> = pred.iter().map(|&l| perm[l]).collect();
        let truth_renamed: Vec<usize> = truth.iter().map(|&l| perm[l]).collect();
        prop_assert_eq!(clustering_accuracy(&renamed, &truth).unwrap(), base);
        prop_assert_eq!(clustering_accuracy(&pred, &truth_renamed).unwrap(), base);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn knn_graph_is_a_deterministic_union_of_neighbor_lists(pts in points(40), k in 1usize..6) {
        prop_assume!(k < pts.len());
        let g = build_knn_graph(&pts, k, KernelScale::Auto).unwrap();
        prop_assert_eq!(&g, &build_knn_graph(&pts, k, KernelScale::Auto).unwrap());
        for x in 0..g.n() {
            prop_assert!(g.neighbors(x).len() >= k);
            for &(y, w) in g.neighbors(x) {
                prop_assert!(w > 0.0 && w <= 1.0);
                prop_assert!(g.neighbors(y).iter().any(|&(z, w2)| z == x && w2 == w));
            }
        }
    }

    #[test]
    fn two_laplacian_is_minus_l(g in graph(20, false), seed in 0u64..1000) {
        let n = g.n();
        let f: Vec<f64> = (0..n).map(|i| (((i as u64 + 2) * (seed + 1)) % 23) as f64 * 0.1 - 1.0).collect();
        let lap = p_laplacian_apply(&g, &f, 2.0).unwrap();
        let l = laplacian_matrix(&g);
        let lf = &l * nalgebra::DVector::from_column_slice(&f);
        let scale = norm(&f) * g.edges().iter().map(|e| e.w).sum::<f64>();
        for i in 0..n {
            prop_assert!((lap[i] + lf[i]).abs() <= 1e-12 * scale.max(1.0));
        }
        prop_assert!(dot(&f, lf.as_slice()) >= -1e-12 * scale.max(1.0));
    }

    #[test]
    fn fiedler_vector_is_a_mean_zero_eigenvector(g in graph(24, true)) {
        let fv = fiedler_vector(&g).unwrap();
        let l = laplacian_matrix(&g);
        let v = nalgebra::DVector::from_column_slice(&fv.vector);
        let r = &l * &v - fv.eigenvalue * &v;
        prop_assert!(r.norm() <= 1e-8);
        prop_assert!(fv.vector.iter().sum::<f64>().abs() <= 1e-10);
        prop_assert!((norm(&fv.vector) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn generators_are_pure(n in 1usize..40, var in 0.0..0.05f64, seed in any::<u64>()) {
        prop_assert_eq!(two_moons(n, var, seed).unwrap(), two_moons(n, var, seed).unwrap());
        let three = three_moons(n, var, seed).unwrap();
        prop_assert_eq!(&three, &three_moons(n, var, seed).unwrap());
        prop_assert_eq!(three.cluster_sizes(), vec![n; 3]);
    }
}
