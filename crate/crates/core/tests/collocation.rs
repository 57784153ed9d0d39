use approx::assert_relative_eq;
use ringtumble_core::collocation::*;
use ringtumble_core::geometry::{ellipse_perimeter, inertia_triple, InertiaTriple, RingParams};
use ringtumble_core::Error;

fn max_defect(n: usize, tf: f64) -> f64 {
    let p = SteeringProblem { nodes: n, initial_final_time: tf, ..Default::default() };
    let z = initial_guess(&p).unwrap();
    collocation_defects(&z, &p)
        .unwrap()
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn defects_shrink_fourth_order() {
    let d: Vec<f64> = [10, 20, 40].iter().map(|n| max_defect(*n, 1.0)).collect();
    for w in d.windows(2) {
        let ratio = w[0] / w[1];
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn sampled_trajectory_defects_small() {
    assert!(max_defect(40, 0.8) < 1e-4);
}

#[test]
fn defect_count_and_layout() {
    let p = SteeringProblem { nodes: 6, ..Default::default() };
    let z = initial_guess(&p).unwrap();
    assert_eq!(collocation_defects(&z, &p).unwrap().len(), 8 * 5);
    assert_eq!(boundary_residuals(&z, &p).len(), 8);
    assert_eq!(inequality_bounds(&z, &p).len(), 6 * 6);
    assert_relative_eq!(z.final_time, 1.0);
    assert_eq!(z.node_times()[5], 1.0);
}

#[test]
fn axes_round_trip() {
    let p = ellipse_perimeter(0.4, 0.22, 512).unwrap();
    let ring = RingParams { perimeter: p, ..RingParams::default() };
    let y = inertia_triple(0.4, 0.22, &ring).unwrap();
    let ax = inertia_to_axes(&y, &ring).unwrap();
    assert_relative_eq!(ax.a, 0.4, epsilon = 1e-8);
    assert_relative_eq!(ax.b, 0.22, epsilon = 1e-8);
    let first = inertia_to_axes_with(&y, &ring, InertiaComponent::First).unwrap();
    assert_relative_eq!(first.b, 0.22, epsilon = 1e-8);
}

#[test]
fn inertia_beyond_reach_rejected() {
    let ring = RingParams::default();
    let r = ring.mean_radius();
    let y = InertiaTriple::new(0.1, 0.5, 0.4 * r * r * 10.0);
    assert!(matches!(inertia_to_axes(&y, &ring), Err(Error::Unrealizable { .. })));
}

#[test]
fn target_at_free_response_converges_quickly() {
    let base = SteeringProblem::default();
    let guess = initial_guess(&base).unwrap();
    let p = SteeringProblem {
        target_heading: guess.states.last().unwrap().heading,
        realizability: false,
        ..base
    };
    let s = solve_steering(&p, &guess).unwrap();
    assert!(s.converged(), "{:?}", s.report);
    assert!(s.report.iterations <= 30, "{:?}", s.report);
    assert!(s.cost < 1e-3, "cost {}", s.cost);
}

#[test]
fn pinned_circle_cannot_fake_success() {
    let base = SteeringProblem::default();
    let y = base.circle_inertia().to_array();
    let p = SteeringProblem { y_bounds: [y, y], ..base };
    let guess = initial_guess(&p).unwrap();
    let s = solve_steering(&p, &guess).unwrap();
    assert!(!(s.converged() && s.cost < 1e-3), "{:?} cost {}", s.report, s.cost);
}

#[test]
fn mismatched_guess_rejected() {
    let p = SteeringProblem::default();
    let g = initial_guess(&SteeringProblem { nodes: 4, ..p.clone() }).unwrap();
    assert!(matches!(solve_steering(&p, &g), Err(Error::Config(_))));
}

#[test]
fn too_few_nodes_rejected() {
    let p = SteeringProblem { nodes: 2, ..Default::default() };
    assert!(initial_guess(&p).is_err());
}
