//! Exact detailed-balance and stationarity checks of the flip and swap
//! kernels on enumerable state spaces, against the enumerated posterior.

mod common;

use common::{
    flip_transition_matrix, max_detailed_balance_violation, stationarity_violation,
    swap_transition_matrix,
};
use simprop_core::conjlinear::{enumerate_posterior, DissimKind, LinearProblem};
use simprop_core::inclusion::InclusionVector;
use simprop_core::localmove::{build_swap_proposal, DependencyGraph};
use simprop_core::numcore::rng::RngSeed;
use simprop_core::synthgen::{gen_linear, LinearSynthConfig};

fn problem(seed: u64, n: usize, p: usize) -> LinearProblem {
    let data = gen_linear(&LinearSynthConfig {
        n,
        p,
        n_active: 2.min(p),
        rho: 0.6,
        sigma2: 1.0,
        seed: RngSeed(seed),
    })
    .unwrap();
    LinearProblem::with_default_priors(data.x, data.y).unwrap()
}

#[test]
fn flip_kernel_detailed_balance_p4() {
    let problem = problem(11, 30, 4);
    let pi = enumerate_posterior(&problem).unwrap();
    for (dissim, lambda) in [(DissimKind::FTest, 0.7), (DissimKind::LikelihoodRatio, 1.3)] {
        let t = flip_transition_matrix(&problem, dissim, lambda);
        for row in &t {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "row mass {sum}");
            assert!(row.iter().all(|&v| v >= -1e-15));
        }
        let db = max_detailed_balance_violation(&pi, &t);
        let st = stationarity_violation(&pi, &t);
        assert!(db <= 1e-12, "detailed balance violation {db:.3e}");
        assert!(st <= 1e-12, "stationarity violation {st:.3e}");
    }
}

#[test]
fn swap_kernel_detailed_balance_p4_connected_graph() {
    let problem = problem(13, 30, 4);
    let pi = enumerate_posterior(&problem).unwrap();
    let graph = DependencyGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
    assert!(graph.is_connected());
    let t = swap_transition_matrix(&problem, &graph, DissimKind::FTest, 1.25);
    for row in &t {
        let sum: f64 = row.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
    let db = max_detailed_balance_violation(&pi, &t);
    let st = stationarity_violation(&pi, &t);
    assert!(db <= 1e-12, "swap detailed balance violation {db:.3e}");
    assert!(st <= 1e-12, "swap stationarity violation {st:.3e}");
}

#[test]
fn composite_kernel_preserves_posterior_p5() {
    let problem = problem(17, 40, 5);
    let pi = enumerate_posterior(&problem).unwrap();
    let graph = DependencyGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
    let t_flip = flip_transition_matrix(&problem, DissimKind::FTest, 0.9);
    let t_swap = swap_transition_matrix(&problem, &graph, DissimKind::FTest, 1.25);
    // The swap factor satisfies detailed balance on its own at P = 5 too.
    let swap_db = max_detailed_balance_violation(&pi, &t_swap);
    assert!(swap_db <= 1e-12, "P = 5 swap detailed balance violation {swap_db:.3e}");
    let m = pi.len();
    let mut composite = vec![vec![0.0; m]; m];
    for s in 0..m {
        for mid in 0..m {
            if t_flip[s][mid] == 0.0 {
                continue;
            }
            for sp in 0..m {
                composite[s][sp] += t_flip[s][mid] * t_swap[mid][sp];
            }
        }
    }
    let st = stationarity_violation(&pi, &composite);
    assert!(st <= 1e-10, "composite stationarity violation {st:.3e}");
}

#[test]
fn swap_moves_preserve_model_size_everywhere() {
    let problem = problem(19, 25, 5);
    let graph = DependencyGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
    for xi in InclusionVector::enumerate_all(5) {
        if let Some(proposal) =
            build_swap_proposal(&problem, &xi, &graph, &DissimKind::FTest, 1.25).unwrap()
        {
            for cand in &proposal.candidates {
                assert_eq!(cand.configuration.popcount(), xi.popcount());
                assert_eq!(xi.hamming(&cand.configuration).unwrap(), 2);
            }
        }
    }
}
