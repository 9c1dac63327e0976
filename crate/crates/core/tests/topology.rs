//! Network structure on constructed and random instances.

use mqe_core::geometry::{sample_users, Provenance};
use mqe_core::theory::{alpha_bar, crossing_alpha, optimal_relays};
use mqe_core::{build_mqe, density_scaling, modified_betweenness, observables, UserSet, P_INV_E};

#[test]
fn star_hub_carries_all_leaf_pairs() {
    // Hub at the center; five leaves on a circle, so chords exceed the radius.
    let r = 0.2;
    let mut pts = vec![[0.5, 0.5]];
    for i in 0..5 {
        let t = 2.0 * std::f64::consts::PI * i as f64 / 5.0 + 0.1;
        pts.push([0.5 + r * t.cos(), 0.5 + r * t.sin()]);
    }
    let u = UserSet::new(pts, 1.0, 1.0, Provenance::Explicit).unwrap();
    let net = build_mqe(&u, 0.0, P_INV_E).unwrap();
    let b = modified_betweenness(&net).counts;
    assert_eq!(b[0], 5 * 4);
    assert!(b[1..].iter().all(|&c| c == 0));
    assert_eq!(net.edges().len(), 5);
}

#[test]
fn dense_relay_chain_follows_single_pair_staircase() {
    // Two users at distance d with 59 evenly spaced relays in between. Budgets
    // m with (m + 1) | 60 are realizable exactly.
    let d = 0.01;
    let pts: Vec<[f64; 2]> = (0..=60).map(|i| [i as f64 * d / 60.0, 0.0]).collect();
    let u = UserSet::new(pts, 2.0 * d, 1.0, Provenance::Explicit).unwrap();
    let mut bounds = vec![1.0];
    for m in 1..=6 {
        bounds.push(crossing_alpha(d, m - 1, m, P_INV_E).unwrap());
    }
    // bounds[m] separates m - 1 from m relays.
    for m in 0..=5usize {
        let alpha = 0.5 * (bounds[m] + bounds[m + 1]);
        assert_eq!(optimal_relays(d, alpha, P_INV_E).unwrap(), m, "theory at alpha {alpha}");
        let net = build_mqe(&u, alpha, P_INV_E).unwrap();
        assert_eq!(net.m_star(0, 60), m, "optimizer at alpha {alpha}");
        let nodes = net.path_nodes(0, 60);
        let spacing = 60 / (m + 1);
        assert_eq!(nodes, (0..=m + 1).map(|i| i * spacing).collect::<Vec<_>>());
    }
}

#[test]
fn betweenness_broadens_at_small_alpha() {
    let var = |alpha: f64| {
        (0..6u64)
            .map(|s| modified_betweenness(&build_mqe(&sample_users(64, 0.1, 300 + s).unwrap(), alpha, P_INV_E).unwrap()).variance())
            .sum::<f64>()
    };
    let (low, high) = (var(0.05), var(0.45));
    assert!(low > high, "variance {low} at alpha 0.05, {high} at alpha 0.45");
}

#[test]
fn hand_computed_observables() {
    let pts = vec![[0.0, 0.0], [0.3, 0.1], [0.9, 0.0], [0.5, 0.6], [0.1, 0.8], [0.95, 0.95]];
    let u = UserSet::new(pts, 1.0, 1.0, Provenance::Explicit).unwrap();
    let net = build_mqe(&u, 0.3, P_INV_E).unwrap();
    let q0 = net.capacitances();
    let (mut q_sum, mut l_sum, mut q_min) = (0.0, 0.0, f64::INFINITY);
    for a in 0..6 {
        for b in (0..6).filter(|&b| b != a) {
            let nodes = net.path_nodes(a, b);
            let q = nodes.windows(2).map(|w| q0.get(w[0], w[1])).fold(f64::INFINITY, f64::min);
            q_sum += q;
            l_sum += (nodes.len() - 1) as f64;
            q_min = q_min.min(q);
        }
    }
    let obs = observables(&net);
    assert!((obs.q_star - q_sum / 30.0).abs() < 1e-12);
    assert!((obs.l_star - l_sum / 30.0).abs() < 1e-12);
    assert_eq!(obs.q_min, q_min);
    assert!(obs.l_star >= 1.0 && obs.rho > 0.0 && obs.rho <= 1.0 && obs.q_min <= obs.q_star);
    assert!((obs.efficiency - net.network_efficiency()).abs() < 1e-12);
}

#[test]
fn dense_limit_has_zero_exponent() {
    let samples: Vec<(usize, f64)> =
        [20, 40, 80].iter().map(|&n| (n, build_mqe(&sample_users(n, 0.1, 5).unwrap(), 1.0, P_INV_E).unwrap().density())).collect();
    assert_eq!(density_scaling(&samples).unwrap().omega, 0.0);
}

#[test]
fn below_alpha_bar_networks_resemble_the_widest_path_limit() {
    let l = 10.0;
    let a_bar = alpha_bar(l, P_INV_E).unwrap();
    let u = sample_users(200, l, 12).unwrap();
    let mst = observables(&build_mqe(&u, 0.0, P_INV_E).unwrap());
    let below = observables(&build_mqe(&u, 0.25 * a_bar, P_INV_E).unwrap());
    let above = observables(&build_mqe(&u, 0.45, P_INV_E).unwrap());
    assert!((below.q_star / mst.q_star - 1.0).abs() < 0.1, "{} vs {}", below.q_star, mst.q_star);
    assert!((above.q_star / mst.q_star - 1.0).abs() > 0.5);
}
