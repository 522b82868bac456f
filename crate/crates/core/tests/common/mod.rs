//! Benchmark scenarios and independent analytic oracles shared by the
//! integration and acceptance tests. Nothing here calls into the solver's
//! internals; scenarios only drive the public API.
#![allow(dead_code)]

use floodopt::solver::{
    BoundaryKind, Boundaries, FaceDischarge, Inflow, Limiter, Observer, Order, Solver, SolverConfig, StepReport,
};
use floodopt::{FlowState, Hydrograph, PhysicsParams, Point, Polygon, SimGrid, SourceField};

pub const G: f64 = 9.81;

pub fn physics(cfl: f64) -> PhysicsParams {
    PhysicsParams {
        g: G,
        latitude_deg: 0.0,
        cfl,
        h_dry: 1e-6,
        ..Default::default()
    }
}

pub fn config(order: Order, boundaries: Boundaries, cfl: f64) -> SolverConfig {
    SolverConfig {
        physics: physics(cfl),
        max_dt: 1e3,
        order,
        limiter: Limiter::VanLeer,
        boundaries,
        friction: true,
    }
}

/// A one-dimensional channel along x, three cells wide, walls on the long
/// sides.
pub fn channel_1d(n: usize, length: f64, manning: f64, bed: impl Fn(f64) -> f64) -> SimGrid {
    let dx = length / n as f64;
    SimGrid::from_fn(n, 3, dx, dx, (0.0, 0.0), manning, |x, _| bed(x)).unwrap()
}

/// Middle row of a 1D channel run.
pub fn row(grid: &SimGrid, v: &[f64]) -> Vec<f64> {
    (0..grid.nx).map(|i| v[grid.idx(i, 1)]).collect()
}

// ---------------------------------------------------------------------------
// Stoker dam break

/// Intermediate depth of the wet-bed dam break, by bisection on the
/// rarefaction/shock matching condition.
pub fn stoker_middle_depth(hl: f64, hr: f64, g: f64) -> f64 {
    let cl = (g * hl).sqrt();
    let f = |hm: f64| {
        let cm = (g * hm).sqrt();
        2.0 * (cl - cm) - (hm - hr) * (g * (hm + hr) / (2.0 * hm * hr)).sqrt()
    };
    let (mut lo, mut hi) = (hr, hl);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact depth of the frictionless flat-bed dam break at `x`, `t`.
pub fn stoker_depth(x: f64, t: f64, x0: f64, hl: f64, hr: f64, g: f64) -> f64 {
    let cl = (g * hl).sqrt();
    let hm = stoker_middle_depth(hl, hr, g);
    let cm = (g * hm).sqrt();
    let um = 2.0 * (cl - cm);
    let s = hm * um / (hm - hr);
    let xi = (x - x0) / t;
    if xi <= -cl {
        hl
    } else if xi <= um - cm {
        (2.0 * cl - xi).powi(2) / (9.0 * g)
    } else if xi < s {
        hm
    } else {
        hr
    }
}

/// L1-relative depth error of the dam break at `t = 10 s` on `n` cells of
/// a 200 m channel with the dam at its center.
pub fn dam_break_l1(n: usize, order: Order) -> (f64, FlowState, SimGrid) {
    let (hl, hr, t_end) = (1.0, 0.2, 10.0);
    let grid = channel_1d(n, 200.0, 0.02, |_| 0.0);
    let x0 = 100.0;
    let mut s = FlowState::dry(&grid, 0.0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let c = grid.idx(i, j);
            s.h[c] = if grid.center(i, j).x < x0 { hl } else { hr };
        }
    }
    let mut cfg = config(order, Boundaries::all(BoundaryKind::Wall), 0.45);
    cfg.friction = false;
    let mut solver = Solver::new(&grid, cfg);
    solver.run(&mut s, None, t_end, &mut []).unwrap();
    let h = row(&grid, &s.h);
    let (mut err, mut norm) = (0.0, 0.0);
    for (i, hn) in h.iter().enumerate() {
        // cell average of the exact profile by midpoint subsampling
        let m = 16;
        let mut avg = 0.0;
        for k in 0..m {
            let x = (i as f64 + (k as f64 + 0.5) / m as f64) * grid.dx;
            avg += stoker_depth(x, t_end, x0, hl, hr, G);
        }
        avg /= m as f64;
        err += (hn - avg).abs();
        norm += avg;
    }
    (err / norm, s, grid)
}

struct FrontWatch {
    count: usize,
    healthy: bool,
    fr_min: f64,
    fr_max: f64,
}

impl Observer for FrontWatch {
    fn observe(&mut self, g: &SimGrid, st: &FlowState, _: &StepReport, _: &FaceDischarge) {
        self.count += 1;
        self.healthy &= st.h.iter().chain(&st.hu).chain(&st.hv).all(|v| v.is_finite());
        self.healthy &= st.h.iter().all(|&h| h >= 0.0);
        for i in 0..g.nx {
            let c = g.idx(i, 1);
            if st.h[c] > 1e-2 && st.hu[c] != 0.0 {
                let fr = (st.hu[c] / st.h[c]).abs() / (G * st.h[c]).sqrt();
                self.fr_min = self.fr_min.min(fr);
                self.fr_max = self.fr_max.max(fr);
            }
        }
    }
}

/// Dam break onto a dry bed (0.5 m cells) over at least `steps` steps. The front is
/// located at t = 10 s and t = 40 s and its speed taken from the difference.
/// Returns (front speed, largest Froude number seen, whether every step
/// stayed finite and non-negative and subcritical cells were present).
pub fn dry_bed_front_speed(steps: usize) -> (f64, f64, bool) {
    dry_bed_front(1000, 500.0, (10.0, 40.0), 1e-4, steps)
}

pub fn dry_bed_front(n: usize, length: f64, times: (f64, f64), rel_threshold: f64, steps: usize) -> (f64, f64, bool) {
    let hl = 1.0;
    let grid = channel_1d(n, length, 0.02, |_| 0.0);
    let x0 = 0.2 * length;
    let mut s = FlowState::dry(&grid, 0.0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.center(i, j).x < x0 {
                s.h[grid.idx(i, j)] = hl;
            }
        }
    }
    let mut cfg = config(Order::Second, Boundaries::all(BoundaryKind::Wall), 0.45);
    cfg.friction = false;
    let mut solver = Solver::new(&grid, cfg);
    let threshold = rel_threshold * hl;
    let front = |s: &FlowState| {
        let h = row(&grid, &s.h);
        let last = h.iter().rposition(|&v| v > threshold).unwrap();
        (last as f64 + 1.0) * grid.dx
    };
    let mut watch = FrontWatch {
        count: 0,
        healthy: true,
        fr_min: f64::INFINITY,
        fr_max: 0.0,
    };
    solver.run(&mut s, None, times.0, &mut [&mut watch]).unwrap();
    let (t1, x1) = (s.t, front(&s));
    solver.run(&mut s, None, times.1, &mut [&mut watch]).unwrap();
    let (t2, x2) = (s.t, front(&s));
    while watch.count < steps {
        let t = s.t + 1.0;
        solver.run(&mut s, None, t, &mut [&mut watch]).unwrap();
    }
    let FrontWatch { healthy, fr_min, fr_max, .. } = watch;
    (
        (x2 - x1) / (t2 - t1),
        fr_max,
        healthy && fr_min < 1.0,
    )
}

// ---------------------------------------------------------------------------
// Manning normal depth

/// Uniform-flow depth for unit discharge `q` on slope `slope`.
pub fn manning_normal_depth(n: f64, q: f64, slope: f64) -> f64 {
    (n * q / slope.sqrt()).powf(0.6)
}

/// Steady flow down a long sloped channel fed at its upstream end.
/// Returns (simulated depth averaged over the measuring reach, analytic
/// normal depth).
pub fn normal_depth_run() -> (f64, f64) {
    let (n_m, slope, q) = (0.02, 0.001, 1.0);
    let length = 20_000.0;
    let cells = 400;
    let grid = channel_1d(cells, length, n_m, |x| 30.0 - slope * x);
    let width = grid.dy * grid.ny as f64;
    let src = SourceField::from_polygon(&grid, &Polygon::rectangle(0.0, 0.0, grid.dx, width)).unwrap();
    let t_end = 40_000.0;
    let hg = Hydrograph::constant(q * width, 0.0, t_end).unwrap();
    let bnd = Boundaries {
        west: BoundaryKind::Wall,
        east: BoundaryKind::Waterfall,
        south: BoundaryKind::Wall,
        north: BoundaryKind::Wall,
    };
    let mut cfg = config(Order::Second, bnd, 0.5);
    cfg.physics.h_dry = 1e-3;
    let mut s = FlowState::dry(&grid, 0.0);
    let mut solver = Solver::new(&grid, cfg);
    let inflow = Inflow {
        sources: &src,
        hydrograph: &hg,
    };
    solver.run(&mut s, Some(inflow), t_end, &mut []).unwrap();
    let h = row(&grid, &s.h);
    // measuring reach: 5 km to 10 km, clear of the inflow and the fall
    let (a, b) = (cells / 4, cells / 2);
    let mean = h[a..b].iter().sum::<f64>() / (b - a) as f64;
    (mean, manning_normal_depth(n_m, q, slope))
}

// ---------------------------------------------------------------------------
// Self-convergence

/// Smooth subcritical 1D problem: still water over a gentle bump, perturbed
/// by a small surface hump moving with a localized current.
pub fn smooth_run(n: usize, order: Order) -> (SimGrid, FlowState) {
    let length = 1000.0;
    let grid = channel_1d(n, length, 0.02, |x| 0.3 * (-((x - 550.0) / 120.0).powi(2)).exp());
    let mut s = FlowState::dry(&grid, 0.0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let c = grid.idx(i, j);
            let x = grid.center(i, j).x;
            let eta = 2.0 + 0.05 * (-((x - 400.0) / 80.0).powi(2)).exp();
            let h = eta - grid.bed[c];
            s.h[c] = h;
            s.hu[c] = h * 0.2 * (-((x - 450.0) / 100.0).powi(2)).exp();
        }
    }
    let mut cfg = config(order, Boundaries::all(BoundaryKind::Wall), 0.4);
    cfg.friction = false;
    let mut solver = Solver::new(&grid, cfg);
    solver.run(&mut s, None, 30.0, &mut []).unwrap();
    (grid, s)
}

/// Average pairs of fine cells onto the coarse grid.
pub fn restrict(fine: &[f64]) -> Vec<f64> {
    fine.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

pub fn l1_diff(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

/// L1 self-convergence rate of depth across grids n, 2n, 4n.
pub fn self_convergence_rate(n: usize, order: Order) -> f64 {
    let runs: Vec<_> = [n, 2 * n, 4 * n]
        .iter()
        .map(|&k| {
            let (g, s) = smooth_run(k, order);
            (g.dx, row(&g, &s.h))
        })
        .collect();
    let e1 = l1_diff(&runs[0].1, &restrict(&runs[1].1), runs[0].0);
    let e2 = l1_diff(&runs[1].1, &restrict(&runs[2].1), runs[1].0);
    (e1 / e2).log2()
}

// ---------------------------------------------------------------------------
// Well-balance and conservation

/// Deterministic rough bed with bumps up to `amp` meters.
pub fn rough_bed(n: usize, amp: f64, seed: u64) -> SimGrid {
    let mut state = seed;
    let mut rnd = move || {
        // splitmix64
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    };
    let bumps: Vec<(f64, f64, f64, f64)> = (0..60)
        .map(|_| (rnd() * n as f64 * 10.0, rnd() * n as f64 * 10.0, 10.0 + 60.0 * rnd(), rnd()))
        .collect();
    SimGrid::from_fn(n, n, 10.0, 10.0, (0.0, 0.0), 0.03, |x, y| {
        let b: f64 = bumps
            .iter()
            .map(|&(cx, cy, r, a)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (r * r)).exp())
            .sum();
        amp * b.min(1.0)
    })
    .unwrap()
}

/// Lake at rest at level 3 m over the rough bed after `steps` steps;
/// returns the grid, the initial and the final state.
pub fn lake_at_rest_run(n: usize, steps: usize) -> (SimGrid, FlowState, FlowState) {
    let grid = rough_bed(n, 5.0, 7);
    let s0 = FlowState::lake_at_rest(&grid, 3.0);
    let mut s = s0.clone();
    let cfg = SolverConfig {
        boundaries: Boundaries::all(BoundaryKind::Wall),
        ..SolverConfig::default()
    };
    let mut solver = Solver::new(&grid, cfg);
    for _ in 0..steps {
        solver.step(&mut s, None).unwrap();
    }
    (grid, s0, s)
}

/// Maximum absolute depth change of a lake at rest over `steps` steps, and
/// the number of dry cells (bumps above the surface).
pub fn lake_at_rest_drift(n: usize, steps: usize) -> (f64, usize) {
    let (_, s0, s) = lake_at_rest_run(n, steps);
    let dry = s0.h.iter().filter(|&&h| h == 0.0).count();
    let drift = s.h.iter().zip(&s0.h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (drift, dry)
}

/// Closed basin with a tilted initial surface; returns the relative volume
/// change after `steps` steps and the per-step volume history.
pub fn sloshing(n: usize, steps: usize) -> (f64, Vec<f64>) {
    let grid = rough_bed(n, 2.0, 11);
    let mut s = FlowState::dry(&grid, 0.0);
    let (lo, hi) = grid.extent();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let c = grid.idx(i, j);
            let p = grid.center(i, j);
            let level = 2.5 + 1.0 * ((p.x - lo.x) / (hi.x - lo.x) - 0.5);
            s.h[c] = (level - grid.bed[c]).max(0.0);
        }
    }
    let v0 = s.volume(&grid);
    let cfg = SolverConfig {
        boundaries: Boundaries::all(BoundaryKind::Wall),
        ..SolverConfig::default()
    };
    let mut solver = Solver::new(&grid, cfg);
    let mut history = Vec::with_capacity(steps);
    for _ in 0..steps {
        solver.step(&mut s, None).unwrap();
        history.push(s.volume(&grid));
    }
    (((s.volume(&grid) - v0) / v0).abs(), history)
}

pub fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}
