use super::*;
use crate::rational::{int, ratio};

fn net(weights: Vec<Vec<Vec<i64>>>, biases: Vec<Vec<i64>>) -> Network {
    let w = weights
        .into_iter()
        .map(|m| m.into_iter().map(|r| r.into_iter().map(int).collect()).collect())
        .collect();
    let b = biases.into_iter().map(|v| v.into_iter().map(int).collect()).collect();
    Network::from_layers("test", w, b).unwrap()
}

fn diamond() -> Network {
    net(vec![vec![vec![1], vec![-1]], vec![vec![1, 1]]], vec![vec![0, 0], vec![0]])
}

fn one() -> PartitionPlan {
    PartitionPlan::identity(1)
}

fn iv(lo: Rational, hi: Rational) -> Interval {
    Interval::closed(lo, hi).unwrap()
}

#[test]
fn constant_network_is_robust_for_its_smallest_bias() {
    let n = net(vec![vec![vec![0]], vec![vec![0], vec![0], vec![0]]], vec![vec![0], vec![4, -2, 7]]);
    for delta in [ratio(1, 100), int(5)] {
        let v = check_delta_robustness(&n, &[int(0)], &delta, &one(), &PropagationConfig::precise(), &Default::default())
            .unwrap();
        assert_eq!(v.verdict, Verdict::Robust(1));
        assert!(v.overlapping.is_empty());
    }
    let argmax = RobustnessOptions {
        rule: SelectionRule::Argmax,
        ..Default::default()
    };
    let v = check_delta_robustness(&n, &[int(0)], &int(1), &one(), &PropagationConfig::precise(), &argmax).unwrap();
    assert_eq!(v.verdict, Verdict::Robust(2));

    let e = delta_to_epsilon(&n, &[int(3)], &int(2), 0, &one(), &PropagationConfig::precise()).unwrap();
    assert_eq!(e.epsilon, int(0));
}

#[test]
fn tied_reference_is_unknown() {
    let n = net(vec![vec![vec![0]], vec![vec![0], vec![0]]], vec![vec![0], vec![1, 1]]);
    let v = check_delta_robustness(&n, &[int(0)], &int(1), &one(), &PropagationConfig::precise(), &Default::default())
        .unwrap();
    assert_eq!(v.verdict, Verdict::Unknown);
    assert_eq!(v.reference, LabelChoice::Tie(vec![0, 1]));
}

#[test]
fn label_constraints_separate_overlapping_ranges() {
    // y0 = x, y1 = x + 1 through an always-active neuron: ranges overlap
    // but y0 < y1 everywhere.
    let n = net(vec![vec![vec![1]], vec![vec![1], vec![1]]], vec![vec![2], vec![-2, -1]]);
    let cfg = PropagationConfig::precise();
    let plain = check_delta_robustness(&n, &[int(0)], &int(1), &one(), &cfg, &Default::default()).unwrap();
    assert_eq!(plain.verdict, Verdict::Unknown);
    assert_eq!(plain.overlapping, vec![1]);
    let opts = RobustnessOptions {
        label_constraints: true,
        ..Default::default()
    };
    let v = check_delta_robustness(&n, &[int(0)], &int(1), &one(), &cfg, &opts).unwrap();
    assert_eq!(v.verdict, Verdict::Robust(0));
}

#[test]
fn diamond_epsilon() {
    let e = delta_to_epsilon(&diamond(), &[int(0)], &int(1), 0, &one(), &PropagationConfig::precise()).unwrap();
    assert_eq!(e.range, iv(int(0), int(1)));
    assert_eq!(e.reference_value, int(0));
    assert_eq!(e.epsilon, int(1));
    assert!(e.precise);
}

#[test]
fn diamond_backward_derivation() {
    let d = epsilon_to_delta(&diamond(), &[int(0)], &int(1), &ratio(1, 2), 0, &PropagationConfig::precise()).unwrap();
    assert_eq!(d.delta_star, Some(ratio(1, 2)));
    assert!(d.sound);
}

#[test]
fn affine_network_scales_epsilon() {
    // relu(x + 10) stays active near 0, so y = -3x
    let n = net(vec![vec![vec![1]], vec![vec![-3]]], vec![vec![10], vec![30]]);
    let d = epsilon_to_delta(&n, &[int(0)], &int(1), &int(1), 0, &PropagationConfig::precise()).unwrap();
    assert_eq!(d.delta_star, Some(ratio(1, 3)));
    assert!(d.sound);
}

#[test]
fn backward_derivation_preconditions() {
    let cfg = PropagationConfig::precise();
    assert!(matches!(
        epsilon_to_delta(&diamond(), &[int(0)], &int(1), &int(1), 0, &cfg),
        Err(RobustnessError::EpsilonNotBelow { .. })
    ));
    assert!(matches!(
        delta_to_epsilon(&diamond(), &[int(0)], &int(0), 0, &one(), &cfg),
        Err(RobustnessError::NonPositiveDelta)
    ));
    assert!(matches!(
        delta_to_epsilon(&diamond(), &[int(0)], &int(1), 3, &one(), &cfg),
        Err(RobustnessError::UnknownOutput { .. })
    ));
    let split = delta_to_epsilon(&diamond(), &[int(0)], &int(1), 0, &PartitionPlan::uniform(vec![2]), &cfg).unwrap();
    assert!(matches!(
        epsilon_to_delta_from(&diamond(), &split, &ratio(1, 2), &cfg),
        Err(RobustnessError::NeedsSingleStructure)
    ));
}

#[test]
fn supremum_follows_the_stretch_from_zero() {
    assert_eq!(supremum_from_zero(vec![iv(int(0), int(2)), iv(int(1), int(3))]), Some(int(3)));
    assert_eq!(supremum_from_zero(vec![iv(int(0), int(1)), iv(int(2), int(3))]), Some(int(1)));
    assert_eq!(supremum_from_zero(vec![iv(int(1), int(3))]), Some(int(0)));
    assert_eq!(supremum_from_zero(vec![Interval::new(Some(int(0)), None, false, false).unwrap()]), None);
}

fn y(j: u32) -> AffineExpr {
    AffineExpr::var(VarId::Output(j))
}

#[test]
fn property_checks() {
    let n = net(vec![vec![vec![0]], vec![vec![0]]], vec![vec![0], vec![5]]);
    let b = InputBox::new(vec![(int(-1), int(1))]).unwrap();
    let cfg = PropagationConfig::precise();

    let taut = PropertySpec::new(b.clone(), DnfFormula::truth()).unwrap();
    assert_eq!(verify_io_property(&n, &taut, &one(), &cfg).unwrap().verdict, PropertyVerdict::Holds);

    let holds = PropertySpec::new(b.clone(), DnfFormula::from_atoms([Atom::le(&y(0), &AffineExpr::constant(int(5)))])).unwrap();
    assert_eq!(verify_io_property(&n, &holds, &one(), &cfg).unwrap().verdict, PropertyVerdict::Holds);

    let too_tight = PropertySpec::new(b.clone(), DnfFormula::from_atoms([Atom::le(&y(0), &AffineExpr::constant(int(4)))])).unwrap();
    let r = verify_io_property(&n, &too_tight, &one(), &cfg).unwrap();
    assert_eq!(r.verdict, PropertyVerdict::Unknown);
    assert_eq!(r.violations.len(), 1);
    assert_eq!(r.violations[0].slack[0].supremum, int(1));
    assert_eq!(r.violations[0].witness["y0"], int(5));

    assert!(matches!(
        PropertySpec::new(b, DnfFormula::from_atoms([Atom::le(&AffineExpr::var(VarId::Input(0)), &y(0))])),
        Err(RobustnessError::NonOutputVariable(_))
    ));
}

#[test]
fn disjunctive_property_on_the_diamond() {
    // |x| over [-1,1] split at 0: each half satisfies one disjunct of
    // "y <= 1 or y >= 2"; the second is never needed.
    let b = InputBox::new(vec![(int(-1), int(1))]).unwrap();
    let pred = DnfFormula::from_atoms([Atom::le(&y(0), &AffineExpr::constant(int(1)))])
        .or(&DnfFormula::from_atoms([Atom::ge(&y(0), &AffineExpr::constant(int(2)))]));
    let spec = PropertySpec::new(b, pred).unwrap();
    let r = verify_io_property(&diamond(), &spec, &PartitionPlan::uniform(vec![2]), &PropagationConfig::precise()).unwrap();
    assert_eq!(r.verdict, PropertyVerdict::Holds);
    assert_eq!(r.subspaces, 2);
}
