//! Cell-local substeps: bottom friction, Coriolis rotation, hydrograph
//! injection, and the explicit time-step bound.

use crate::error::Result;
use crate::types::{FlowState, Hydrograph, SimGrid, SourceField};

use super::flux::velocity;
use super::SolverConfig;

/// Point-implicit Manning friction.
///
/// Per wet cell the momentum obeys `dq/dt = -k q` with
/// `k = Λ |u| / 2 = g n² |u| / H^{4/3}`; the update `q / (1 + k dt)` can only
/// shrink the momentum, never flip it.
pub fn apply_friction(state: &mut FlowState, grid: &SimGrid, dt: f64, g: f64) {
    for c in 0..state.h.len() {
        let h = state.h[c];
        if h <= 0.0 {
            continue;
        }
        let (qx, qy) = (state.hu[c], state.hv[c]);
        if qx == 0.0 && qy == 0.0 {
            continue;
        }
        let speed = (qx * qx + qy * qy).sqrt() / h;
        let n = grid.manning[c];
        let k = g * n * n * speed / (h * h.cbrt());
        let damp = 1.0 / (1.0 + k * dt);
        state.hu[c] = qx * damp;
        state.hv[c] = qy * damp;
    }
}

/// Friction force per unit area, `f = -(u/2)|u| H Λ` with
/// `Λ = 2 g n² / H^{4/3}`, as written in the momentum equations.
pub fn friction_force(h: f64, u: f64, v: f64, n: f64, g: f64) -> (f64, f64) {
    if h <= 0.0 {
        return (0.0, 0.0);
    }
    let lambda = 2.0 * g * n * n / h.powf(4.0 / 3.0);
    let speed = u.hypot(v);
    (-0.5 * u * speed * h * lambda, -0.5 * v * speed * h * lambda)
}

/// Exact rotation of every momentum vector by `-f dt`, `f = 2 Ω sin θ`.
pub fn apply_coriolis(state: &mut FlowState, dt: f64, omega_e: f64, latitude_deg: f64) {
    let f = 2.0 * omega_e * latitude_deg.to_radians().sin();
    if f == 0.0 {
        return;
    }
    let (s, c) = (f * dt).sin_cos();
    for (qx, qy) in state.hu.iter_mut().zip(state.hv.iter_mut()) {
        let (x, y) = (*qx, *qy);
        *qx = c * x + s * y;
        *qy = -s * x + c * y;
    }
}

/// Adds the hydrograph volume for `[t, t + dt]` (trapezoidal rule) to the
/// source cells by their shares; returns the injected volume in m³.
pub fn apply_sources(
    state: &mut FlowState,
    grid: &SimGrid,
    src: &SourceField,
    hg: &Hydrograph,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let mut t1 = t + dt;
    let end = hg.end();
    // t + dt may overshoot the final sample by rounding when a run lands on it
    if t1 > end && t1 - end <= 1e-9 * end.abs().max(1.0) {
        t1 = end;
    }
    let q0 = hg.at(t)?;
    let q1 = hg.at(t1)?;
    let volume = 0.5 * (q0 + q1) * dt;
    if volume == 0.0 {
        return Ok(0.0);
    }
    let area = grid.cell_area();
    let (ui, vi) = src.injection_velocity;
    for &(c, share) in &src.cells {
        let dh = share * volume / area;
        state.h[c] += dh;
        state.hu[c] += dh * ui;
        state.hv[c] += dh * vi;
    }
    Ok(volume)
}

/// Largest stable explicit step for `state`, capped at `max_dt`.
pub fn stable_dt(grid: &SimGrid, state: &FlowState, config: &SolverConfig) -> f64 {
    let g = config.physics.g;
    let eps = config.physics.h_dry;
    let ds = grid.dx.min(grid.dy);
    let mut max_speed: f64 = 0.0;
    for c in 0..state.h.len() {
        let h = state.h[c];
        if h <= 0.0 {
            continue;
        }
        let u = velocity(h, state.hu[c], eps);
        let v = velocity(h, state.hv[c], eps);
        max_speed = max_speed.max((u * u + v * v).sqrt() + (g * h).sqrt());
    }
    if max_speed == 0.0 {
        return config.max_dt;
    }
    (config.physics.cfl * ds / max_speed).min(config.max_dt)
}
