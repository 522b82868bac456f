use super::*;

fn region() -> Polygon {
    Polygon::rectangle(-10.0, -10.0, 10.0, 10.0)
}

fn exact<F: Fn(Point) -> Result<f64> + Sync>(f: F) -> Objective<F> {
    Objective::new(f, region(), None).unwrap()
}

fn probe(d: f64) -> ProbeRule {
    ProbeRule {
        delta_x: d,
        delta_y: d,
    }
}

fn stop() -> StoppingRule {
    StoppingRule {
        tol: 1e-3,
        k_max: 200,
        initial_step: 1.0,
        min_step: 1e-6,
        shrink: 0.5,
    }
}

#[test]
fn constant_stub_has_zero_gradient() {
    let obj = exact(|_| Ok(7.0));
    assert_eq!(gradient(&obj, Point::new(1.0, 2.0), &probe(0.1)).unwrap(), (0.0, 0.0));
}

#[test]
fn affine_stub_gradient_is_exact() {
    let obj = exact(|p: Point| Ok(3.0 * p.x - 2.0 * p.y + 5.0));
    let g = gradient(&obj, Point::new(1.25, -2.5), &probe(0.5)).unwrap();
    assert_eq!(g, (3.0, -2.0));
    // backward difference near the edge is exact too
    let g = gradient(&obj, Point::new(9.75, 9.75), &probe(0.5)).unwrap();
    assert_eq!(g, (3.0, -2.0));
}

#[test]
fn quadratic_stub_matches_hand_forward_difference() {
    let obj = exact(|p: Point| Ok(-(p.x * p.x + p.y * p.y)));
    let (gx, gy) = gradient(&obj, Point::new(1.0, 2.0), &probe(0.1)).unwrap();
    assert!((gx + 2.1).abs() < 1e-12, "{gx}");
    assert!((gy + 4.1).abs() < 1e-12, "{gy}");
}

#[test]
fn cache_serves_repeats() {
    let obj = exact(|p: Point| Ok(p.x));
    let a = obj.evaluate(Point::new(0.5, 0.5)).unwrap();
    let b = obj.evaluate(Point::new(0.5, 0.5)).unwrap();
    assert_eq!(a, b);
    assert_eq!(obj.evaluation_count(), 1);
}

#[test]
fn lattice_snaps_before_evaluating() {
    let lattice = Lattice {
        origin: Point::new(0.0, 0.0),
        step: (25.0, 25.0),
    };
    let obj = Objective::new(|p: Point| Ok(p.x + 1000.0 * p.y), Polygon::rectangle(0.0, 0.0, 500.0, 500.0), Some(lattice)).unwrap();
    assert_eq!(obj.evaluate(Point::new(61.0, 40.0)).unwrap(), 50.0 + 50_000.0);
    assert_eq!(obj.evaluate(Point::new(52.0, 49.0)).unwrap(), 50.0 + 50_000.0);
    assert_eq!(obj.evaluation_count(), 1);
}

#[test]
fn outside_region_is_a_domain_error() {
    let obj = exact(|_| Ok(0.0));
    assert!(matches!(obj.evaluate(Point::new(11.0, 0.0)), Err(Error::Domain(_))));
    assert!(matches!(
        ascend(&obj, Point::new(0.0, 20.0), &probe(0.1), &stop()),
        Err(Error::Domain(_))
    ));
}

#[test]
fn evaluator_failures_carry_the_center() {
    let obj = exact(|_| Err(Error::Domain("boom".into())));
    match obj.evaluate(Point::new(1.0, 2.0)) {
        Err(Error::Evaluation { x, y, .. }) => assert_eq!((x, y), (1.0, 2.0)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ascend_converges_on_quadratic_bowl() {
    let obj = exact(|p: Point| Ok(-((p.x - 3.0).powi(2) + (p.y - 5.0).powi(2))));
    let d = 0.1;
    let st = ascend(&obj, Point::new(0.0, 0.0), &probe(d), &stop()).unwrap();
    assert!(st.r_d.dist(Point::new(3.0, 5.0)) <= 2.0 * d, "{:?}", st.r_d);
    // strictly increasing values, and every update is r + λ g exactly
    for w in st.history.windows(2) {
        assert!(w[1].v > w[0].v);
        let g = Point::new(w[0].grad.0, w[0].grad.1);
        assert_eq!(w[1].r, w[0].r.add(g.scale(w[1].lambda)));
    }
    assert_eq!(st.history.last().unwrap().r, st.r_d);
}

#[test]
fn flat_plateau_terminates_immediately() {
    let obj = exact(|_| Ok(1.0));
    let st = ascend(&obj, Point::new(1.0, 1.0), &probe(0.1), &stop()).unwrap();
    assert_eq!(st.termination, Termination::SmallGradient);
    assert_eq!(st.history.len(), 1);
    assert_eq!(st.k, 0);
}

#[test]
fn ascend_stays_in_region() {
    // maximum far outside the region: iterates pile up on the boundary
    let obj = exact(|p: Point| Ok(p.x + 0.5 * p.y));
    let st = ascend(&obj, Point::new(0.0, 0.0), &probe(0.1), &stop()).unwrap();
    assert!(st.history.iter().all(|it| obj.region.contains(it.r)));
    assert!(st.v > 10.0);
}

#[test]
fn map_single_point_and_ordering() {
    let obj = exact(|p: Point| Ok(p.x * p.y));
    let one = map_objective(&obj, &Polygon::rectangle(0.9, 0.9, 1.1, 1.1), (1.0, 1.0), Some(Point::new(1.0, 1.0))).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].value, Ok(obj.evaluate(Point::new(1.0, 1.0)).unwrap()));

    let all = map_objective(&obj, &region(), (5.0, 5.0), None).unwrap();
    assert_eq!(all.len(), 25);
    let keys: Vec<(i64, i64)> = all.iter().map(|s| (s.j, s.i)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn map_records_failures() {
    let obj = exact(|p: Point| if p.x > 0.0 { Err(Error::Domain("x".into())) } else { Ok(1.0) });
    let s = map_objective(&obj, &region(), (10.0, 10.0), None).unwrap();
    assert!(s.iter().any(|s| s.value.is_err()));
    let mut buf = Vec::new();
    write_surface(&s, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("x_d,y_d,V_A,status\n-10,-10,1,ok\n"));
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 4));
}

#[test]
fn multi_start_picks_the_best() {
    let obj = exact(|p: Point| Ok(-(p.x.abs() - 5.0).powi(2) - p.y * p.y + if p.x > 0.0 { 1.0 } else { 0.0 }));
    let (runs, best) = multi_start(&obj, &[Point::new(-3.0, 0.0), Point::new(3.0, 0.0)], &probe(0.1), &stop()).unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(best, 1);
}
