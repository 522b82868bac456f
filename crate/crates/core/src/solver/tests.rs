use super::*;

fn config(order: Order, boundaries: Boundaries) -> SolverConfig {
    SolverConfig {
        physics: PhysicsParams {
            latitude_deg: 0.0,
            ..Default::default()
        },
        max_dt: 10.0,
        order,
        limiter: Limiter::VanLeer,
        boundaries,
        friction: true,
    }
}

fn bumpy(nx: usize, ny: usize) -> SimGrid {
    SimGrid::from_fn(nx, ny, 10.0, 10.0, (0.0, 0.0), 0.03, |x, y| {
        2.0 * (x / 23.0).sin() * (y / 17.0).cos() + 0.5 * (x * y / 900.0).sin()
    })
    .unwrap()
}

#[test]
fn lake_at_rest_has_zero_net_update() {
    let g = bumpy(12, 9);
    // level 1.0 leaves several bumps emerged
    let s = FlowState::lake_at_rest(&g, 1.0);
    assert!(s.h.iter().any(|&h| h == 0.0));
    for order in [Order::First, Order::Second] {
        for bnd in [Boundaries::all(BoundaryKind::Wall), Boundaries::all(BoundaryKind::Waterfall)] {
            let f = compute_fluxes(&g, &s, &config(order, bnd)).unwrap();
            for (k, r) in f.net_update().iter().enumerate() {
                let (i, j) = (k % g.nx, k / g.nx);
                let boundary = i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1;
                if bnd.west == BoundaryKind::Waterfall && boundary {
                    continue;
                }
                for x in r {
                    assert!(x.abs() < 1e-13, "{order:?} {bnd:?} cell {k}: {r:?}");
                }
            }
        }
    }
}

#[test]
fn uniform_flow_mass_flux_is_exact() {
    let g = SimGrid::from_fn(6, 5, 50.0, 25.0, (0.0, 0.0), 0.03, |_, _| 0.0).unwrap();
    let mut s = FlowState::lake_at_rest(&g, 2.0);
    s.hu.iter_mut().for_each(|q| *q = 2.0 * 1.5);
    for order in [Order::First, Order::Second] {
        let f = compute_fluxes(&g, &s, &config(order, Boundaries::all(BoundaryKind::Wall))).unwrap();
        for j in 0..g.ny {
            for fi in 1..g.nx {
                let face = f.x[fi + j * (g.nx + 1)];
                assert_eq!(face.flux[0] * g.dy, 1.5 * 2.0 * 25.0);
            }
        }
    }
}

#[test]
fn dry_faces_carry_nothing() {
    let g = bumpy(8, 8);
    let s = FlowState::dry(&g, 0.0);
    let f = compute_fluxes(&g, &s, &SolverConfig::default()).unwrap();
    assert!(f.x.iter().chain(&f.y).all(|ff| ff.flux == [0.0; 3]));
}

#[test]
fn non_finite_state_is_rejected() {
    let g = bumpy(4, 4);
    let mut s = FlowState::lake_at_rest(&g, 3.0);
    s.hu[5] = f64::NAN;
    match compute_fluxes(&g, &s, &SolverConfig::default()) {
        Err(Error::Numeric { i: 1, j: 1, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn lake_at_rest_step_is_a_fixed_point() {
    let g = bumpy(16, 12);
    let s = FlowState::lake_at_rest(&g, 0.5);
    let cfg = config(Order::Second, Boundaries::all(BoundaryKind::Wall));
    let mut solver = Solver::new(&g, cfg);
    let mut cur = s.clone();
    for _ in 0..50 {
        solver.step(&mut cur, None).unwrap();
    }
    for (a, b) in cur.h.iter().zip(&s.h) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn closed_basin_conserves_volume() {
    let g = bumpy(20, 14);
    let mut s = FlowState::lake_at_rest(&g, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.idx(i, j);
            let level = 1.0 + 0.05 * i as f64;
            s.h[c] = (level - g.bed[c]).max(0.0);
        }
    }
    let v0 = s.volume(&g);
    let cfg = config(Order::Second, Boundaries::all(BoundaryKind::Wall));
    let mut solver = Solver::new(&g, cfg);
    for _ in 0..300 {
        let r = solver.step(&mut s, None).unwrap();
        assert_eq!(r.outflow_volume, 0.0);
        assert!(s.h.iter().all(|&h| h >= 0.0));
    }
    assert!(((s.volume(&g) - v0) / v0).abs() < 1e-12);
    s.validate(&g).unwrap();
}

#[test]
fn step_mass_balance_with_sources_and_outflow() {
    let g = bumpy(15, 10);
    let mut s = FlowState::lake_at_rest(&g, 1.5);
    let src = SourceField::from_polygon(&g, &crate::geometry::Polygon::rectangle(0.0, 0.0, 30.0, 100.0)).unwrap();
    let hg = Hydrograph::new(vec![(0.0, 5.0), (50.0, 40.0), (400.0, 0.0)], 0.0, 400.0).unwrap();
    let inflow = Inflow {
        sources: &src,
        hydrograph: &hg,
    };
    let cfg = config(Order::Second, Boundaries::default());
    let mut solver = Solver::new(&g, cfg);
    for _ in 0..200 {
        let v0 = s.volume(&g);
        let r = solver.step(&mut s, Some(inflow)).unwrap();
        let v1 = s.volume(&g);
        let err = (v1 - v0) - (r.injected_volume - r.outflow_volume);
        assert!(err.abs() <= 1e-10 * v0.max(1.0), "{err}");
        assert!(s.h.iter().all(|&h| h >= 0.0));
    }
}

#[test]
fn isolated_dry_cells_are_untouched() {
    let g = bumpy(20, 6);
    let mut s = FlowState::dry(&g, 0.0);
    for j in 0..g.ny {
        for i in 0..4 {
            let c = g.idx(i, j);
            s.h[c] = 3.0;
        }
    }
    let cfg = config(Order::Second, Boundaries::all(BoundaryKind::Wall));
    let (next, _) = step(&g, &s, None, &cfg).unwrap();
    for j in 0..g.ny {
        for i in 6..g.nx {
            let c = g.idx(i, j);
            assert_eq!((next.h[c], next.hu[c], next.hv[c]), (0.0, 0.0, 0.0));
        }
    }
}

#[test]
fn run_lands_on_t_end_with_increasing_times() {
    let g = bumpy(10, 10);
    let mut s = FlowState::lake_at_rest(&g, 1.0);
    s.h[55] += 0.5;
    let cfg = config(Order::Second, Boundaries::all(BoundaryKind::Wall));
    let mut times = Vec::new();
    let mut obs = |_: &SimGrid, st: &FlowState, _: &StepReport, _: &FaceDischarge| times.push(st.t);
    let out = run(&g, &s, None, &cfg, 37.25, &mut [&mut obs]).unwrap();
    assert_eq!(out.t, 37.25);
    assert_eq!(*times.last().unwrap(), 37.25);
    assert!(times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn zero_length_run_makes_no_calls() {
    let g = bumpy(5, 5);
    let s = FlowState::lake_at_rest(&g, 1.0);
    let mut calls = 0;
    let mut obs = |_: &SimGrid, _: &FlowState, _: &StepReport, _: &FaceDischarge| calls += 1;
    let out = run(&g, &s, None, &SolverConfig::default(), 0.0, &mut [&mut obs]).unwrap();
    assert_eq!(out, s);
    assert_eq!(calls, 0);
    assert!(run(&g, &s, None, &SolverConfig::default(), -1.0, &mut []).is_err());
}

#[test]
fn face_discharge_balances_cell_volumes() {
    let g = bumpy(9, 7);
    let mut s = FlowState::lake_at_rest(&g, 1.0);
    s.h[30] += 1.0;
    let cfg = config(Order::Second, Boundaries::all(BoundaryKind::Wall));
    let mut solver = Solver::new(&g, cfg);
    let before = s.clone();
    let r = solver.step(&mut s, None).unwrap();
    let f = solver.face_discharge();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.idx(i, j);
            let net_in = f.x_face(i, j) - f.x_face(i + 1, j) + f.y_face(i, j) - f.y_face(i, j + 1);
            let dv = (s.h[c] - before.h[c]) * g.cell_area();
            assert!((dv - net_in * r.dt_used).abs() < 1e-9, "cell {c}");
        }
    }
}
