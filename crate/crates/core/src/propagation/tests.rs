use super::*;
use crate::rational::{int, ratio, Rational};

fn iv(lo: Rational, hi: Rational) -> Interval {
    Interval::closed(lo, hi).unwrap()
}

fn net(weights: Vec<Vec<Vec<i64>>>, biases: Vec<Vec<i64>>) -> Network {
    let w = weights
        .into_iter()
        .map(|m| m.into_iter().map(|r| r.into_iter().map(int).collect()).collect())
        .collect();
    let b = biases.into_iter().map(|v| v.into_iter().map(int).collect()).collect();
    Network::from_layers("test", w, b).unwrap()
}

fn unit_box(dim: usize, lo: i64, hi: i64) -> InputBox {
    InputBox::new(vec![(int(lo), int(hi)); dim]).unwrap()
}

/// y = relu(x) + relu(-x) = |x|
fn diamond() -> Network {
    net(vec![vec![vec![1], vec![-1]], vec![vec![1, 1]]], vec![vec![0, 0], vec![0]])
}

fn x(i: u32) -> AffineExpr {
    AffineExpr::var(VarId::Input(i))
}

#[test]
fn classification_examples() {
    assert_eq!(
        classify_neuron(&iv(ratio(1, 2), int(2))),
        (NeuronStatus::Active, iv(ratio(1, 2), int(2)))
    );
    assert_eq!(classify_neuron(&iv(int(-3), int(-1))), (NeuronStatus::Inactive, Interval::point(int(0))));
    assert_eq!(classify_neuron(&iv(int(-1), int(1))), (NeuronStatus::Branching, iv(int(0), int(1))));
    assert_eq!(classify_neuron(&iv(int(0), int(4))).0, NeuronStatus::Active);
    assert_eq!(classify_neuron(&iv(int(-4), int(0))).0, NeuronStatus::Inactive);
}

#[test]
fn first_layer_difference() {
    let n = net(vec![vec![vec![1, -1]], vec![vec![1]]], vec![vec![0], vec![0]]);
    let mut s = BehavioralStructure::new(unit_box(2, 0, 1));
    let r = neuron_z_range(&n, &mut s, NeuronRef { layer: 1, index: 0 }, &PropagationConfig::default()).unwrap();
    assert_eq!(r.range, iv(int(-1), int(1)));
    assert!(r.precise);
}

#[test]
fn diamond_precise_and_interval() {
    let b = unit_box(1, -1, 1);
    let (r, s) = propagate(&diamond(), &b, &PropagationConfig::precise()).unwrap();
    assert_eq!(r.outputs, vec![iv(int(0), int(1))]);
    assert!(r.precise);
    assert_eq!(s.branching_count(), 2);
    assert_eq!(r.branching_history(), vec![2]);

    let (r, s) = propagate(&diamond(), &b, &PropagationConfig::over_approximate(0)).unwrap();
    assert_eq!(r.outputs, vec![iv(int(0), int(2))]);
    assert!(!r.precise);
    assert_eq!(s.branching_count(), 0);
    let concretized = r
        .events
        .iter()
        .filter(|e| matches!(e, PropagationEvent::Concretized { .. }))
        .count();
    assert_eq!(concretized, 2);
}

#[test]
fn budget_one_concretizes_smallest_width() {
    // relu(x) has a-range [0,1], relu(-2x) has [0,2] over x in [-1,1]
    let n = net(vec![vec![vec![1], vec![-2]], vec![vec![1, 1]]], vec![vec![0, 0], vec![0]]);
    let (r, s) = propagate(&n, &unit_box(1, -1, 1), &PropagationConfig::over_approximate(1)).unwrap();
    let first = NeuronRef { layer: 1, index: 0 };
    assert_eq!(s.neuron(first).unwrap().handling, Handling::Concretized);
    assert_eq!(s.neuron(NeuronRef { layer: 1, index: 1 }).unwrap().handling, Handling::Symbolic);
    // relu(x) in [0,1] independent of relu(-2x): [0, 1 + 2]
    assert_eq!(r.outputs, vec![iv(int(0), int(3))]);
}

#[test]
fn collapse_composes_affine_maps() {
    // a = z = 2x + 1 over x in [0,1]; z' = 3a
    let n = net(vec![vec![vec![2]], vec![vec![3]], vec![vec![1]]], vec![vec![1], vec![0], vec![0]]);
    let (r, s) = propagate(&n, &unit_box(1, 0, 1), &PropagationConfig::precise()).unwrap();
    let second = s.neuron(NeuronRef { layer: 2, index: 0 }).unwrap();
    let expected = &x(0).scale(&int(6)) + &AffineExpr::constant(int(3));
    assert_eq!(second.z_expr, expected);
    // chain of two active neurons: output = 6x + 3
    assert_eq!(s.activation_expr(NeuronRef { layer: 2, index: 0 }), Some(&expected));
    assert_eq!(r.outputs, vec![iv(int(3), int(9))]);
}

#[test]
fn inactive_neuron_is_muted() {
    // a0 = relu(-x0 - 1) is always 0, a1 = relu(x1) = x1; z' = 3 a0 + a1
    let n = net(
        vec![vec![vec![-1, 0], vec![0, 1]], vec![vec![3, 1]], vec![vec![1]]],
        vec![vec![-1, 0], vec![0], vec![0]],
    );
    let (_, s) = propagate(&n, &unit_box(2, 0, 1), &PropagationConfig::precise()).unwrap();
    assert_eq!(s.neuron(NeuronRef { layer: 2, index: 0 }).unwrap().z_expr, x(1));
}

#[test]
fn manual_collapse_rewrites_downstream() {
    let mut s = BehavioralStructure::new(unit_box(1, 0, 1));
    let first = NeuronRef { layer: 1, index: 0 };
    let second = NeuronRef { layer: 2, index: 0 };
    let z1 = &x(0).scale(&int(2)) + &AffineExpr::constant(int(1));
    s.push_layer(vec![NeuronState {
        neuron: first,
        status: NeuronStatus::Active,
        handling: Handling::Symbolic,
        z_range: iv(int(1), int(3)),
        a_range: iv(int(1), int(3)),
        precise: true,
        z_expr: z1,
    }]);
    s.push_layer(vec![NeuronState {
        neuron: second,
        status: NeuronStatus::Active,
        handling: Handling::Symbolic,
        z_range: iv(int(3), int(9)),
        a_range: iv(int(3), int(9)),
        precise: true,
        z_expr: AffineExpr::var(activation_variable(first)).scale(&int(3)),
    }]);
    let s = collapse_linear(&s, first).unwrap();
    assert_eq!(
        s.neuron(second).unwrap().z_expr,
        &x(0).scale(&int(6)) + &AffineExpr::constant(int(3))
    );
}

#[test]
fn collapse_and_concretize_preconditions() {
    let b = unit_box(1, -1, 1);
    let (_, s) = propagate(&diamond(), &b, &PropagationConfig::precise()).unwrap();
    let first = NeuronRef { layer: 1, index: 0 };
    assert!(matches!(
        collapse_linear(&s, first),
        Err(PropagationError::Structure(StructureError::NotLinear(_)))
    ));
    assert!(matches!(
        concretize_branching(&s, first, &PropagationConfig::precise()),
        Err(PropagationError::ConcretizeInPreciseMode)
    ));
    let over = PropagationConfig::over_approximate(8);
    let c = concretize_branching(&s, first, &over).unwrap();
    assert_eq!(c.branching_count(), 1);
    assert!(!c.is_precise());
    assert!(matches!(
        concretize_branching(&c, first, &over),
        Err(PropagationError::Structure(StructureError::NotBranching(_)))
    ));
}

#[test]
fn concretizing_both_diamond_neurons_gives_interval_sum() {
    let b = unit_box(1, -1, 1);
    let (_, s) = propagate(&diamond(), &b, &PropagationConfig::precise()).unwrap();
    let over = PropagationConfig::over_approximate(8);
    let mut s = concretize_branching(&s, NeuronRef { layer: 1, index: 0 }, &over).unwrap();
    s = concretize_branching(&s, NeuronRef { layer: 1, index: 1 }, &over).unwrap();
    let mut events = Vec::new();
    refresh(&mut s, &over, None, &mut events).unwrap();
    let y = weighted_sum_expr(&diamond(), &s, 2, 0).unwrap();
    let (range, _) = exact_range(&s, &y, VarId::Output(0), &over.limits(None)).unwrap();
    assert_eq!(range, iv(int(0), int(2)));
}

#[test]
fn constant_network_is_a_point() {
    let n = net(vec![vec![vec![0, 0]; 2], vec![vec![0, 0]]], vec![vec![0, 0], vec![5]]);
    let (r, _) = propagate(&n, &unit_box(2, -3, 7), &PropagationConfig::precise()).unwrap();
    assert_eq!(r.outputs, vec![Interval::point(int(5))]);
    assert!(r.precise);
}

#[test]
fn zero_touching_ranges_collapse_without_changing_results() {
    // relu(x) over [0,1] is active with z-range [0,1]; relu(-x) inactive with [-1,0]
    let n = net(vec![vec![vec![1], vec![-1]], vec![vec![1, -1]]], vec![vec![0, 0], vec![0]]);
    let (r, s) = propagate(&n, &unit_box(1, 0, 1), &PropagationConfig::precise()).unwrap();
    assert_eq!(s.branching_count(), 0);
    assert_eq!(s.neuron(NeuronRef { layer: 1, index: 0 }).unwrap().status, NeuronStatus::Active);
    assert_eq!(s.neuron(NeuronRef { layer: 1, index: 1 }).unwrap().status, NeuronStatus::Inactive);
    assert_eq!(r.outputs, vec![iv(int(0), int(1))]);
}

#[test]
fn dimension_mismatch_is_rejected() {
    assert!(matches!(
        propagate(&diamond(), &unit_box(2, 0, 1), &PropagationConfig::precise()),
        Err(PropagationError::Dimension { expected: 1, found: 2 })
    ));
}

#[test]
fn precise_timeout_names_the_neuron() {
    let config = PropagationConfig {
        timeout: Some(Duration::ZERO),
        ..PropagationConfig::precise()
    };
    // two layers so the second needs a real elimination
    let n = net(vec![vec![vec![1], vec![-1]], vec![vec![1, 1]], vec![vec![1]]], vec![vec![0, 0], vec![0], vec![0]]);
    match propagate(&n, &unit_box(1, -1, 1), &config) {
        Err(PropagationError::Timeout { node, branching_count }) => {
            // the first fragment that could not be conjoined in time
            assert_eq!(node, Node::Hidden(NeuronRef { layer: 1, index: 0 }));
            assert_eq!(branching_count, 2);
        }
        other => panic!("expected timeout, got {other:?}"),
    }
    let over = PropagationConfig {
        timeout: Some(Duration::ZERO),
        ..PropagationConfig::over_approximate(8)
    };
    let (r, _) = propagate(&n, &unit_box(1, -1, 1), &over).unwrap();
    assert!(!r.precise);
    assert_eq!(r.outputs, vec![iv(int(0), int(2))]);
}

#[test]
fn registry_resolves_builtins() {
    let reg = HeuristicRegistry::default();
    assert_eq!(
        reg.names(),
        vec!["smallest-width", "largest-width", "earliest-first", "latest-first"]
    );
    assert!(reg.get("smallest-width").is_some());
    assert!(reg.get("nope").is_none());
}
