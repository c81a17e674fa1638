use dubins3d::{solve, GoalPose, SolutionSet, Tolerances};

#[test]
fn solution_set_round_trips_through_json() {
    let g = GoalPose::new([2.64101, -1.78042, -0.371051], [-0.323321, 0.729589, 0.602631], 1.0).unwrap();
    let set = solve(&g, &Tolerances::default()).unwrap();
    let text = serde_json::to_string(&set).unwrap();
    let back: SolutionSet = serde_json::from_str(&text).unwrap();
    assert_eq!(back, set);
}

#[test]
fn family_round_trips_through_json() {
    let g = GoalPose::new([0.0, 0.0, 4.0], [0.0, 0.0, 1.0], 1.5).unwrap();
    let set = solve(&g, &Tolerances::default()).unwrap();
    let text = serde_json::to_string(&set).unwrap();
    let back: SolutionSet = serde_json::from_str(&text).unwrap();
    assert_eq!(back.family, set.family);
}

#[test]
fn enum_tags_are_snake_case() {
    let g = GoalPose::new([0.0, 0.0, 4.0], [0.0, 0.0, 1.0], 1.0).unwrap();
    let set = solve(&g, &Tolerances::default()).unwrap();
    let value = serde_json::to_value(&set).unwrap();
    assert_eq!(value["kind"], "infinite_family");
    assert_eq!(value["diagnostics"]["case"], "infinite_family");
}

#[test]
fn tolerances_round_trip() {
    let tol = Tolerances::default();
    let back: Tolerances = serde_json::from_str(&serde_json::to_string(&tol).unwrap()).unwrap();
    assert_eq!(back, tol);
}
