//! Grid, flow state, hydrograph and parameter types shared across the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};

/// Regular raster carrying bed elevation and Manning roughness per cell.
///
/// Cells are indexed `i + j * nx` with `i` growing east and `j` growing
/// north; `(origin_x, origin_y)` is the lower-left corner of cell `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin_x: f64,
    pub origin_y: f64,
    pub bed: Vec<f64>,
    pub manning: Vec<f64>,
}

impl SimGrid {
    /// Builds a grid and checks every invariant.
    pub fn new(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        origin: (f64, f64),
        bed: Vec<f64>,
        manning: Vec<f64>,
    ) -> Result<Self> {
        let grid = Self {
            nx,
            ny,
            dx,
            dy,
            origin_x: origin.0,
            origin_y: origin.1,
            bed,
            manning,
        };
        let violations = validate_grid(&grid);
        if violations.is_empty() {
            Ok(grid)
        } else {
            Err(Error::Validation(violations))
        }
    }

    /// Grid with bed given as a function of cell-center coordinates and a
    /// uniform Manning coefficient.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        origin: (f64, f64),
        manning: f64,
        bed: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let x = origin.0 + (i as f64 + 0.5) * dx;
                let y = origin.1 + (j as f64 + 0.5) * dy;
                values.push(bed(x, y));
            }
        }
        Self::new(nx, ny, dx, dy, origin, values, vec![manning; nx * ny])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + j * self.nx
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin_x + (i as f64 + 0.5) * self.dx,
            self.origin_y + (j as f64 + 0.5) * self.dy,
        )
    }

    pub fn extent(&self) -> (Point, Point) {
        (
            Point::new(self.origin_x, self.origin_y),
            Point::new(
                self.origin_x + self.nx as f64 * self.dx,
                self.origin_y + self.ny as f64 * self.dy,
            ),
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        let (lo, hi) = self.extent();
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    /// Cell containing `p`, if any.
    pub fn locate(&self, p: Point) -> Option<(usize, usize)> {
        if !self.contains(p) {
            return None;
        }
        let i = (((p.x - self.origin_x) / self.dx).floor() as usize).min(self.nx - 1);
        let j = (((p.y - self.origin_y) / self.dy).floor() as usize).min(self.ny - 1);
        Some((i, j))
    }

    pub fn min_bed(&self) -> f64 {
        self.bed.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Lists every violated [`SimGrid`] invariant; empty when the grid is valid.
pub fn validate_grid(grid: &SimGrid) -> Vec<String> {
    let mut out = Vec::new();
    if grid.nx < 3 {
        out.push(format!("nx = {} (must be >= 3)", grid.nx));
    }
    if grid.ny < 3 {
        out.push(format!("ny = {} (must be >= 3)", grid.ny));
    }
    if !(grid.dx > 0.0 && grid.dx.is_finite()) {
        out.push(format!("dx = {} (must be > 0)", grid.dx));
    }
    if !(grid.dy > 0.0 && grid.dy.is_finite()) {
        out.push(format!("dy = {} (must be > 0)", grid.dy));
    }
    if !grid.origin_x.is_finite() || !grid.origin_y.is_finite() {
        out.push("origin is not finite".to_string());
    }
    let n = grid.nx * grid.ny;
    if grid.bed.len() != n {
        out.push(format!("bed has {} values, expected {n}", grid.bed.len()));
    }
    if grid.manning.len() != n {
        out.push(format!(
            "manning has {} values, expected {n}",
            grid.manning.len()
        ));
    }
    let nx = grid.nx.max(1);
    for (k, b) in grid.bed.iter().enumerate() {
        if !b.is_finite() {
            out.push(format!("bed[{k}] (cell {}, {}) = {b} is not finite", k % nx, k / nx));
        }
    }
    for (k, m) in grid.manning.iter().enumerate() {
        if !(m.is_finite() && *m > 0.0 && *m <= 1.0) {
            out.push(format!(
                "manning[{k}] (cell {}, {}) = {m} outside (0, 1]",
                k % nx,
                k / nx
            ));
        }
    }
    out
}

/// Water depth and momenta per cell at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub h: Vec<f64>,
    pub hu: Vec<f64>,
    pub hv: Vec<f64>,
    pub t: f64,
}

impl FlowState {
    pub fn dry(grid: &SimGrid, t: f64) -> Self {
        let n = grid.len();
        Self {
            h: vec![0.0; n],
            hu: vec![0.0; n],
            hv: vec![0.0; n],
            t,
        }
    }

    /// Still water with free surface `level` wherever the bed lies below it.
    pub fn lake_at_rest(grid: &SimGrid, level: f64) -> Self {
        let mut state = Self::dry(grid, 0.0);
        for (h, b) in state.h.iter_mut().zip(&grid.bed) {
            *h = (level - b).max(0.0);
        }
        state
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Total water volume in m³, summed in cell order.
    pub fn volume(&self, grid: &SimGrid) -> f64 {
        self.h.iter().sum::<f64>() * grid.cell_area()
    }

    /// Checks the [`FlowState`] invariants against `grid`.
    pub fn validate(&self, grid: &SimGrid) -> Result<()> {
        let n = grid.len();
        if self.h.len() != n || self.hu.len() != n || self.hv.len() != n {
            return Err(Error::Domain(format!(
                "state arrays do not match the {}x{} grid",
                grid.nx, grid.ny
            )));
        }
        if !self.t.is_finite() {
            return Err(Error::Domain("state time is not finite".into()));
        }
        for k in 0..n {
            let (h, hu, hv) = (self.h[k], self.hu[k], self.hv[k]);
            let bad = if !(h.is_finite() && hu.is_finite() && hv.is_finite()) {
                Some("non-finite value")
            } else if h < 0.0 {
                Some("negative depth")
            } else if h == 0.0 && (hu != 0.0 || hv != 0.0) {
                Some("dry cell carries momentum")
            } else {
                None
            };
            if let Some(message) = bad {
                return Err(Error::Numeric {
                    i: k % grid.nx,
                    j: k / grid.nx,
                    message: message.into(),
                });
            }
        }
        Ok(())
    }
}

/// Discharge time series `Q(t)` with the flood window `[t_qs, t_qe]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hydrograph {
    samples: Vec<(f64, f64)>,
    pub t_qs: f64,
    pub t_qe: f64,
}

impl Hydrograph {
    pub fn new(samples: Vec<(f64, f64)>, t_qs: f64, t_qe: f64) -> Result<Self> {
        let mut errs = Vec::new();
        if samples.len() < 2 {
            errs.push(format!("hydrograph needs at least 2 samples, got {}", samples.len()));
        }
        for (k, &(t, q)) in samples.iter().enumerate() {
            if !t.is_finite() || !q.is_finite() {
                errs.push(format!("sample {k} is not finite"));
            } else if q < 0.0 {
                errs.push(format!("sample {k} has negative discharge {q}"));
            }
        }
        for (k, w) in samples.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                errs.push(format!("sample times not strictly increasing at sample {}", k + 1));
            }
        }
        if !(t_qs < t_qe) {
            errs.push(format!("flood window [{t_qs}, {t_qe}] is empty"));
        }
        if let (Some(first), Some(last)) = (samples.first(), samples.last()) {
            if t_qs < first.0 || t_qe > last.0 {
                errs.push(format!(
                    "flood window [{t_qs}, {t_qe}] outside sampled span [{}, {}]",
                    first.0, last.0
                ));
            }
        }
        if errs.is_empty() {
            Ok(Self {
                samples,
                t_qs,
                t_qe,
            })
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Constant discharge over `[t0, t1]`, window equal to the span.
    pub fn constant(q: f64, t0: f64, t1: f64) -> Result<Self> {
        Self::new(vec![(t0, q), (t1, q)], t0, t1)
    }

    /// Base flow, linear rise, plateau at peak, linear fall, base flow again.
    /// `times` are the four corner times `[rise_start, peak_start, peak_end,
    /// fall_end]`; the series spans `[0, end]`.
    pub fn trapezoid(base: f64, peak: f64, times: [f64; 4], end: f64, window: (f64, f64)) -> Result<Self> {
        let mut samples = vec![(0.0, base)];
        samples.push((times[0], base));
        samples.push((times[1], peak));
        samples.push((times[2], peak));
        samples.push((times[3], base));
        samples.push((end, base));
        samples.dedup_by(|b, a| b.0 == a.0);
        Self::new(samples, window.0, window.1)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn start(&self) -> f64 {
        self.samples[0].0
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Linearly interpolated discharge; exact at sample times.
    pub fn at(&self, t: f64) -> Result<f64> {
        hydrograph_at(self, t)
    }
}

/// Linear interpolation of `hg` at `t`.
pub fn hydrograph_at(hg: &Hydrograph, t: f64) -> Result<f64> {
    let (start, end) = (hg.start(), hg.end());
    if !(t >= start && t <= end) {
        return Err(Error::OutOfSpan { t, start, end });
    }
    let s = &hg.samples;
    // first sample with time > t
    let k = s.partition_point(|&(ts, _)| ts <= t);
    if k == 0 {
        return Ok(s[0].1);
    }
    let (t0, q0) = s[k - 1];
    if t == t0 || k == s.len() {
        return Ok(q0);
    }
    let (t1, q1) = s[k];
    let w = (t - t0) / (t1 - t0);
    Ok(q0 + w * (q1 - q0))
}

/// Physical constants and scheme tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsParams {
    pub g: f64,
    pub omega_e: f64,
    pub latitude_deg: f64,
    pub cfl: f64,
    pub h_dry: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            g: 9.81,
            omega_e: 7.292e-5,
            latitude_deg: 48.8,
            cfl: 0.5,
            h_dry: 1e-3,
        }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.g > 0.0 && self.g.is_finite()) {
            out.push(format!("physics.g = {} (must be > 0)", self.g));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            out.push(format!("physics.cfl = {} (must lie in (0, 1))", self.cfl));
        }
        if !(self.h_dry > 0.0 && self.h_dry.is_finite()) {
            out.push(format!("physics.h_dry = {} (must be > 0)", self.h_dry));
        }
        if !self.omega_e.is_finite() || !self.latitude_deg.is_finite() {
            out.push("physics.omega_e and physics.latitude_deg must be finite".into());
        }
        out
    }

    /// Coriolis parameter `2 Ω sin θ`.
    pub fn coriolis(&self) -> f64 {
        2.0 * self.omega_e * self.latitude_deg.to_radians().sin()
    }
}

/// Cells receiving the hydrograph discharge, each with its share.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceField {
    pub cells: Vec<(usize, f64)>,
    /// Velocity given to injected water; zero injects mass only.
    pub injection_velocity: (f64, f64),
}

impl SourceField {
    pub fn new(cells: Vec<(usize, f64)>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Domain("source field has no cells".into()));
        }
        if cells.iter().any(|&(_, f)| !(f > 0.0 && f.is_finite())) {
            return Err(Error::Domain("source fractions must be positive".into()));
        }
        let total: f64 = cells.iter().map(|c| c.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("source fractions sum to {total}, not 1")));
        }
        Ok(Self {
            cells,
            injection_velocity: (0.0, 0.0),
        })
    }

    /// Every cell whose center lies inside `region`, sharing the discharge
    /// by area (equal cells, equal shares).
    pub fn from_polygon(grid: &SimGrid, region: &Polygon) -> Result<Self> {
        let mut cells = Vec::new();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if region.contains(grid.center(i, j)) {
                    cells.push(grid.idx(i, j));
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::Geometry("source polygon contains no cell centers".into()));
        }
        let share = 1.0 / cells.len() as f64;
        // shares of 1/n need not sum to exactly 1; absorb the residue
        let mut list: Vec<_> = cells.into_iter().map(|c| (c, share)).collect();
        let residue = 1.0 - list.iter().map(|c| c.1).sum::<f64>();
        list[0].1 += residue;
        Self::new(list)
    }

    pub fn with_injection_velocity(mut self, u: f64, v: f64) -> Self {
        self.injection_velocity = (u, v);
        self
    }
}
