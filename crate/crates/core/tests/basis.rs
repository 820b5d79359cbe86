use proptest::prelude::*;
use rpi_core::basis::*;
use rpi_core::mdp::{build_chain_mdp, build_gridworld, exhaustive_samples, ChainConfig, NamedLayout};
use rpi_core::spectral::{build_graph_from_samples, laplacian_eigensystem, OperatorKind, StateGraph};
use rpi_core::Parallelism;

fn sign_changes(v: &[f64]) -> usize {
    let s: Vec<f64> = v.iter().copied().filter(|x| x.abs() > 1e-10).collect();
    s.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

fn chain_graph(closed: bool) -> StateGraph {
    let mdp = build_chain_mdp(&ChainConfig::benchmark().closed(closed)).unwrap();
    build_graph_from_samples(&exhaustive_samples(&mdp)).unwrap()
}

#[test]
fn chain_eigenfunctions_oscillate_in_order() {
    let g = chain_graph(false);
    let basis = laplacian_basis(&g, 4, OperatorKind::Combinatorial, 50, 2, MissingStateRule::Zero, Parallelism::Parallel)
        .unwrap();
    for j in 0..4 {
        let col: Vec<f64> = (0..50).map(|s| basis.state_feature(s)[j]).collect();
        assert_eq!(sign_changes(&col), j, "eigenfunction {}", j + 1);
    }
}

#[test]
fn closed_chain_eigenvalues_come_in_pairs() {
    let g = chain_graph(true);
    assert!(g.is_regular());
    let sys = laplacian_eigensystem(&g, OperatorKind::Combinatorial, 7, Parallelism::Parallel).unwrap();
    for p in 0..3 {
        let (a, b) = (sys.eigenvalues[1 + 2 * p], sys.eigenvalues[2 + 2 * p]);
        let expect = 2.0 - 2.0 * (2.0 * std::f64::consts::PI * (p + 1) as f64 / 50.0).cos();
        assert!((a - b).abs() < 1e-10 && (a - expect).abs() < 1e-10, "pair {p}: {a} {b} vs {expect}");
    }
}

#[test]
fn obstacle_low_eigenfunctions() {
    let world = build_gridworld(NamedLayout::Obstacle.layout(), 0.9).unwrap();
    let g = build_graph_from_samples(&exhaustive_samples(&world.mdp)).unwrap();
    assert_eq!(g.n_vertices(), 336);
    let sys = laplacian_eigensystem(&g, OperatorKind::Normalized, 3, Parallelism::Parallel).unwrap();
    let ground = sys.vector(0);
    assert!(ground.iter().all(|&x| x > 0.0) || ground.iter().all(|&x| x < 0.0));
    for j in 1..3 {
        let v = sys.vector(j);
        assert!(v.iter().any(|&x| x > 1e-6) && v.iter().any(|&x| x < -1e-6));
        let along_degrees: f64 = v.iter().zip(g.degrees()).map(|(x, d)| x * d.sqrt()).sum();
        assert!(along_degrees.abs() < 1e-8);
    }
}

#[test]
fn five_room_fiedler_vector_orders_rooms() {
    let layout = NamedLayout::FiveRoom;
    let world = build_gridworld(layout.layout(), 0.9).unwrap();
    let g = build_graph_from_samples(&exhaustive_samples(&world.mdp)).unwrap();
    let sys = laplacian_eigensystem(&g, OperatorKind::Normalized, 2, Parallelism::Parallel).unwrap();
    let mut sums = [0.0; 5];
    let mut counts = [0usize; 5];
    for (v, &s) in g.vertex_labels().iter().enumerate() {
        let r = layout.room_of_cell(world.cell_of_state(s)).unwrap();
        sums[r] += sys.eigenvectors[(v, 1)];
        counts[r] += 1;
    }
    let means: Vec<f64> = sums.iter().zip(counts).map(|(s, c)| s / c as f64).collect();
    let increasing = means.windows(2).all(|w| w[0] < w[1]);
    let decreasing = means.windows(2).all(|w| w[0] > w[1]);
    assert!(increasing || decreasing, "{means:?}");
}

#[test]
fn state_action_features_are_block_structured() {
    let basis = rbf_basis(50, 5, 3);
    assert_eq!(basis.k(), 6);
    assert_eq!(basis.dim(), 18);
    for s in [0, 17, 49] {
        let phi = basis.state_feature(s).to_vec();
        for a in 0..3 {
            let f = basis.features(s, a);
            for b in 0..3 {
                let block = f.rows(b * 6, 6);
                if a == b {
                    assert_eq!(block.iter().copied().collect::<Vec<_>>(), phi);
                } else {
                    assert!(block.iter().all(|&x| x == 0.0));
                }
            }
        }
    }
}

#[test]
fn polynomial_encodings() {
    let raw = polynomial_basis_with(5, 2, 1, PolynomialEncoding::Raw);
    assert_eq!(raw.state_feature(2), &[1.0, 3.0, 9.0]);
    let scaled = polynomial_basis(5, 2, 1);
    assert_eq!(scaled.state_feature(0), &[1.0, -1.0, 1.0]);
    assert_eq!(scaled.state_feature(4), &[1.0, 1.0, 1.0]);
}

#[test]
fn basis_csv_has_one_row_per_state() {
    let basis = tabular_basis(7, 2);
    let mut buf = Vec::new();
    basis.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[0].split(',').count(), 8);
    assert!(lines[0].starts_with("state,"));
}

#[test]
fn discrete_gram_schmidt_matches_qr() {
    let funcs: Vec<Vec<f64>> = (0..4).map(|p| (0..9).map(|i| (i as f64 / 8.0).powi(p)).collect()).collect();
    let q = gram_schmidt_orthonormalize(&DiscreteWeighted::unit(9), &funcs).unwrap();
    let a = nalgebra::DMatrix::from_fn(9, 4, |i, j| funcs[j][i]);
    let qr = a.qr();
    let (qm, r) = (qr.q(), qr.r());
    for j in 0..4 {
        let sign = r[(j, j)].signum();
        for i in 0..9 {
            assert!((q[j][i] - sign * qm[(i, j)]).abs() < 1e-10);
        }
    }
}

#[test]
fn gram_schmidt_rejects_dependent_input() {
    let funcs = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]];
    assert!(gram_schmidt_orthonormalize(&DiscreteWeighted::unit(3), &funcs).is_err());
}

proptest! {
    #[test]
    fn weighted_gram_schmidt_is_orthonormal(
        weights in prop::collection::vec(0.1f64..3.0, 6),
        raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 1..4),
    ) {
        let space = DiscreteWeighted { weights };
        if let Ok(q) = gram_schmidt_orthonormalize(&space, &raw) {
            for i in 0..q.len() {
                for j in 0..q.len() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((space.inner(&q[i], &q[j]) - expect).abs() < 1e-9);
                }
            }
        }
    }
}
