//! Finite-difference residuals of the field equations.
//!
//! The oracle only sees point samples of `(u, h)`. Every derivative is a nested
//! second-order central difference, and composite quantities such as `u^2` and
//! `u h + u` are formed from samples before differencing, so no analytic identity
//! is assumed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldPair, FieldSampler, LineSampler, Point, SampleError};

/// Residual magnitude below which a value is treated as roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("stencil step must be positive and finite, got {0}")]
    Step(f64),
    #[error("grid axis {axis}: {reason}")]
    Grid { axis: char, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StencilConfig {
    pub step: f64,
}

impl Default for StencilConfig {
    fn default() -> Self {
        StencilConfig { step: 5e-3 }
    }
}

impl StencilConfig {
    pub fn new(step: f64) -> Result<Self, ConfigError> {
        if step > 0.0 && step.is_finite() {
            Ok(StencilConfig { step })
        } else {
            Err(ConfigError::Step(step))
        }
    }
}

/// Uniform grid with inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub y0: f64,
    pub y1: f64,
    pub ny: usize,
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
}

fn axis_coord(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        lo
    } else {
        lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (axis, lo, hi, n) in [
            ('x', self.x0, self.x1, self.nx),
            ('y', self.y0, self.y1, self.ny),
            ('t', self.t0, self.t1, self.nt),
        ] {
            if n == 0 {
                return Err(ConfigError::Grid {
                    axis,
                    reason: "count must be at least 1".into(),
                });
            }
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(ConfigError::Grid {
                    axis,
                    reason: format!("range [{lo}, {hi}] is not ordered"),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point number `index` in x-fastest order.
    pub fn point(&self, index: usize) -> Point {
        let i = index % self.nx;
        let j = (index / self.nx) % self.ny;
        let k = index / (self.nx * self.ny);
        Point::new(
            axis_coord(self.x0, self.x1, self.nx, i),
            axis_coord(self.y0, self.y1, self.ny, j),
            axis_coord(self.t0, self.t1, self.nt, k),
        )
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = Point> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// Offsets in units of the step.
type Offset = (i8, i8, i8);

/// Samples on the 3x3x3 block around a point, fetched on demand.
struct Block<'a, S: ?Sized> {
    sampler: &'a S,
    center: Point,
    step: f64,
    cache: [[[Option<FieldPair>; 3]; 3]; 3],
}

impl<'a, S: FieldSampler + ?Sized> Block<'a, S> {
    fn new(sampler: &'a S, center: Point, step: f64) -> Self {
        Block {
            sampler,
            center,
            step,
            cache: [[[None; 3]; 3]; 3],
        }
    }

    fn at(&mut self, (dx, dy, dt): Offset) -> Result<FieldPair, SampleError> {
        let slot = &mut self.cache[(dx + 1) as usize][(dy + 1) as usize][(dt + 1) as usize];
        if let Some(v) = slot {
            return Ok(*v);
        }
        let h = self.step;
        let p = self
            .center
            .shifted(f64::from(dx) * h, f64::from(dy) * h, f64::from(dt) * h);
        let v = self.sampler.sample(p)?;
        *slot = Some(v);
        Ok(v)
    }

    fn u(&mut self, o: Offset) -> Result<f64, SampleError> {
        Ok(self.at(o)?.u)
    }

    fn h(&mut self, o: Offset) -> Result<f64, SampleError> {
        Ok(self.at(o)?.h)
    }
}

/// Residuals of
///
/// ```text
/// r1 = u_yt + h_xx + (u^2)_xy / 2
/// r2 = h_t + (u h + u + u_xy)_x
/// ```
///
/// at `p`. An error means the stencil touched a pole and the point should be skipped.
pub fn fd_residual_dlw<S: FieldSampler + ?Sized>(
    s: &S,
    p: Point,
    cfg: &StencilConfig,
) -> Result<(f64, f64), SampleError> {
    let step = cfg.step;
    s.check_footprint(p, step)?;
    let mut b = Block::new(s, p, step);
    let h2 = step * step;

    let cross =
        |b: &mut Block<'_, S>, f: &dyn Fn(FieldPair) -> f64, plane: fn(i8, i8) -> Offset| {
            let mut acc = 0.0;
            for (a, c, sign) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                acc += sign * f(b.at(plane(a, c))?);
            }
            Ok::<f64, SampleError>(acc / (4.0 * h2))
        };

    let u_yt = cross(&mut b, &|f| f.u, |a, c| (0, a, c))?;
    let h_xx = (b.h((1, 0, 0))? - 2.0 * b.h((0, 0, 0))? + b.h((-1, 0, 0))?) / h2;
    let usq_xy = cross(&mut b, &|f| f.u * f.u, |a, c| (a, c, 0))?;
    let r1 = u_yt + h_xx + 0.5 * usq_xy;

    let h_t = (b.h((0, 0, 1))? - b.h((0, 0, -1))?) / (2.0 * step);
    let flux = |f: FieldPair| f.u * f.h + f.u;
    let flux_x = (flux(b.at((1, 0, 0))?) - flux(b.at((-1, 0, 0))?)) / (2.0 * step);
    let mut u_y = [0.0; 3];
    for (slot, dx) in u_y.iter_mut().zip([-1i8, 0, 1]) {
        *slot = (b.u((dx, 1, 0))? - b.u((dx, -1, 0))?) / (2.0 * step);
    }
    let u_xxy = (u_y[2] - 2.0 * u_y[1] + u_y[0]) / h2;
    let r2 = h_t + flux_x + u_xxy;

    Ok((r1, r2))
}

/// Residuals of the reduced system
///
/// ```text
/// r1 = u_t + h_z + (u^2)_z / 2
/// r2 = h_t + (u h + u + u_zz)_z
/// ```
pub fn fd_residual_1d<S: LineSampler + ?Sized>(
    s: &S,
    z: f64,
    t: f64,
    cfg: &StencilConfig,
) -> Result<(f64, f64), SampleError> {
    let step = cfg.step;
    let at = |dz: i32, dt: i32| s.sample(z + f64::from(dz) * step, t + f64::from(dt) * step);
    let [zm2, zm1, z0, zp1, zp2] = [at(-2, 0)?, at(-1, 0)?, at(0, 0)?, at(1, 0)?, at(2, 0)?];
    let (tm, tp) = (at(0, -1)?, at(0, 1)?);
    let two_h = 2.0 * step;
    let h2 = step * step;

    let u_t = (tp.u - tm.u) / two_h;
    let h_z = (zp1.h - zm1.h) / two_h;
    let usq_z = (zp1.u * zp1.u - zm1.u * zm1.u) / two_h;
    let r1 = u_t + h_z + 0.5 * usq_z;

    let h_t = (tp.h - tm.h) / two_h;
    let flux = |f: FieldPair| f.u * f.h + f.u;
    let flux_z = (flux(zp1) - flux(zm1)) / two_h;
    let u_zz_plus = (zp2.u - 2.0 * zp1.u + z0.u) / h2;
    let u_zz_minus = (z0.u - 2.0 * zm1.u + zm2.u) / h2;
    let u_zzz = (u_zz_plus - u_zz_minus) / two_h;
    let r2 = h_t + flux_z + u_zzz;

    Ok((r1, r2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum ConvergenceOrder {
    Order(f64),
    /// Both residuals are below [`ROUNDOFF_FLOOR`]; nothing left to converge.
    ExactToRoundoff,
}

impl ConvergenceOrder {
    fn estimate(coarse: f64, fine: f64, step_ratio: f64) -> Self {
        let (coarse, fine) = (coarse.abs(), fine.abs());
        if coarse < ROUNDOFF_FLOOR && fine < ROUNDOFF_FLOOR {
            ConvergenceOrder::ExactToRoundoff
        } else {
            ConvergenceOrder::Order((coarse / fine).ln() / step_ratio.ln())
        }
    }

    pub fn order(self) -> Option<f64> {
        match self {
            ConvergenceOrder::Order(p) => Some(p),
            ConvergenceOrder::ExactToRoundoff => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceEstimate {
    pub coarse_step: f64,
    pub fine_step: f64,
    pub coarse: (f64, f64),
    pub fine: (f64, f64),
    pub orders: [ConvergenceOrder; 2],
}

impl ConvergenceEstimate {
    /// `|r(coarse)| / |r(fine)|` per equation.
    pub fn ratios(&self) -> [f64; 2] {
        [
            self.coarse.0.abs() / self.fine.0.abs(),
            self.coarse.1.abs() / self.fine.1.abs(),
        ]
    }
}

/// Observed order `log(|r(h1)| / |r(h2)|) / log(h1 / h2)` for each equation.
pub fn convergence_order<S: FieldSampler + ?Sized>(
    s: &S,
    p: Point,
    steps: (f64, f64),
) -> Result<ConvergenceEstimate, SampleError> {
    let (coarse_step, fine_step) = if steps.0 >= steps.1 {
        steps
    } else {
        (steps.1, steps.0)
    };
    let coarse = fd_residual_dlw(s, p, &StencilConfig { step: coarse_step })?;
    let fine = fd_residual_dlw(s, p, &StencilConfig { step: fine_step })?;
    let ratio = coarse_step / fine_step;
    Ok(ConvergenceEstimate {
        coarse_step,
        fine_step,
        coarse,
        fine,
        orders: [
            ConvergenceOrder::estimate(coarse.0, fine.0, ratio),
            ConvergenceOrder::estimate(coarse.1, fine.1, ratio),
        ],
    })
}

/// A residual at the coarse step must exceed this for its ratio to count.
pub const MEASURABLE_FLOOR: f64 = 1e-9;

/// Expected band for `|r(h)| / |r(h/2)|` under second-order stencils.
pub const SECOND_ORDER_BAND: (f64, f64) = (3.0, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioOutlier {
    pub point: Point,
    /// 1 or 2.
    pub equation: u8,
    pub coarse: f64,
    pub ratio: f64,
}

/// Pointwise step-halving ratios over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSurvey {
    pub steps: (f64, f64),
    pub band: (f64, f64),
    /// Equation/point pairs whose coarse residual exceeds [`MEASURABLE_FLOOR`].
    pub measured: usize,
    pub skipped: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub outliers: Vec<RatioOutlier>,
}

impl RatioSurvey {
    pub fn all_within(&self) -> bool {
        self.outliers.is_empty()
    }

    /// Largest coarse residual among the outliers.
    pub fn largest_outlier(&self) -> Option<RatioOutlier> {
        self.outliers
            .iter()
            .copied()
            .max_by(|a, b| a.coarse.abs().total_cmp(&b.coarse.abs()))
    }
}

/// Runs [`convergence_order`] at every grid point and collects ratios outside `band`.
pub fn ratio_survey<S: FieldSampler + ?Sized>(
    s: &S,
    grid: &GridSpec,
    steps: (f64, f64),
    band: (f64, f64),
) -> RatioSurvey {
    let estimates: Vec<_> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.point(i);
            (p, convergence_order(s, p, steps))
        })
        .collect();
    let mut out = RatioSurvey {
        steps,
        band,
        measured: 0,
        skipped: 0,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        outliers: Vec::new(),
    };
    for (point, est) in estimates {
        let Ok(est) = est else {
            out.skipped += 1;
            continue;
        };
        let coarse = [est.coarse.0, est.coarse.1];
        for (e, ratio) in est.ratios().into_iter().enumerate() {
            if coarse[e].abs() <= MEASURABLE_FLOOR {
                continue;
            }
            out.measured += 1;
            out.min_ratio = out.min_ratio.min(ratio);
            out.max_ratio = out.max_ratio.max(ratio);
            if !(band.0..=band.1).contains(&ratio) {
                out.outliers.push(RatioOutlier {
                    point,
                    equation: e as u8 + 1,
                    coarse: coarse[e],
                    ratio,
                });
            }
        }
    }
    out
}

/// Outcome at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResidual {
    pub point: Point,
    pub outcome: Result<(f64, f64), SampleError>,
}

/// Residuals at every grid point, in grid order.
pub fn grid_samples<S: FieldSampler + ?Sized>(
    s: &S,
    grid: &GridSpec,
    cfg: &StencilConfig,
) -> Vec<PointResidual> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let point = grid.point(i);
            PointResidual {
                point,
                outcome: fd_residual_dlw(s, point, cfg),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EquationStats {
    pub max_abs: f64,
    pub mean_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstPoint {
    pub point: Point,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub eq1: EquationStats,
    pub eq2: EquationStats,
    pub worst: Option<WorstPoint>,
    pub evaluated: usize,
    pub skipped: usize,
    /// First skipped point, for diagnostics.
    pub first_skip: Option<Point>,
    pub grid: GridSpec,
    pub stencil: StencilConfig,
}

fn magnitude(r: f64) -> f64 {
    if r.is_finite() {
        r.abs()
    } else {
        f64::INFINITY
    }
}

impl ResidualReport {
    /// Aggregates in grid order, so the result does not depend on how samples were
    /// produced.
    pub fn aggregate(grid: &GridSpec, stencil: &StencilConfig, samples: &[PointResidual]) -> Self {
        let mut eq = [EquationStats::default(); 2];
        let mut sums = [0.0f64; 2];
        let mut worst: Option<WorstPoint> = None;
        let mut evaluated = 0;
        let mut skipped = 0;
        let mut first_skip = None;
        for s in samples {
            match s.outcome {
                Ok((r1, r2)) => {
                    evaluated += 1;
                    let m = [magnitude(r1), magnitude(r2)];
                    for e in 0..2 {
                        sums[e] += m[e];
                        eq[e].max_abs = eq[e].max_abs.max(m[e]);
                    }
                    let here = m[0].max(m[1]);
                    if worst.is_none_or(|w| here > magnitude(w.r1).max(magnitude(w.r2))) {
                        worst = Some(WorstPoint {
                            point: s.point,
                            r1,
                            r2,
                        });
                    }
                }
                Err(_) => {
                    skipped += 1;
                    first_skip.get_or_insert(s.point);
                }
            }
        }
        if evaluated > 0 {
            for e in 0..2 {
                eq[e].mean_abs = sums[e] / evaluated as f64;
            }
        }
        ResidualReport {
            eq1: eq[0],
            eq2: eq[1],
            worst,
            evaluated,
            skipped,
            first_skip,
            grid: *grid,
            stencil: *stencil,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.eq1.max_abs.max(self.eq2.max_abs)
    }

    pub fn total(&self) -> usize {
        self.evaluated + self.skipped
    }
}

/// Parallel grid evaluation.
pub fn grid_report<S: FieldSampler + ?Sized>(
    s: &S,
    grid: &GridSpec,
    cfg: &StencilConfig,
) -> ResidualReport {
    ResidualReport::aggregate(grid, cfg, &grid_samples(s, grid, cfg))
}

/// Same as [`grid_report`] on the calling thread only.
pub fn grid_report_serial<S: FieldSampler + ?Sized>(
    s: &S,
    grid: &GridSpec,
    cfg: &StencilConfig,
) -> ResidualReport {
    let samples: Vec<_> = grid
        .points()
        .map(|point| PointResidual {
            point,
            outcome: fd_residual_dlw(s, point, cfg),
        })
        .collect();
    ResidualReport::aggregate(grid, cfg, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnSampler;

    fn vacuum() -> FnSampler<impl Fn(Point) -> Result<FieldPair, SampleError> + Sync> {
        FnSampler(|_| Ok(FieldPair::VACUUM))
    }

    #[test]
    fn vacuum_is_exact() {
        let r = fd_residual_dlw(
            &vacuum(),
            Point::new(0.3, 0.1, -2.0),
            &StencilConfig::default(),
        )
        .unwrap();
        assert_eq!(r, (0.0, 0.0));
        let line = |_z: f64, _t: f64| Ok(FieldPair::VACUUM);
        assert_eq!(
            fd_residual_1d(&line, 1.0, 0.5, &StencilConfig::default()).unwrap(),
            (0.0, 0.0)
        );
        let c = convergence_order(&vacuum(), Point::ORIGIN, (0.1, 0.05)).unwrap();
        assert_eq!(c.orders, [ConvergenceOrder::ExactToRoundoff; 2]);
    }

    #[test]
    fn quadratic_h_gives_constant_residual() {
        // h = -1 + 0.01 x^2: h_xx = 0.02 exactly for a second difference of a quadratic
        let s = FnSampler(|p: Point| Ok(FieldPair::new(0.0, -1.0 + 0.01 * p.x * p.x)));
        let (r1, r2) =
            fd_residual_dlw(&s, Point::new(0.5, 0.0, 0.0), &StencilConfig::default()).unwrap();
        assert!((r1 - 0.02).abs() < 1e-9, "{r1}");
        assert_eq!(r2, 0.0);
    }

    #[test]
    fn recovers_known_derivatives() {
        // u = x^2 y t, h = x^3: u_yt = x^2, h_xx = 6x, (u^2)_xy = 8 x^3 y t^2,
        // h_t = 0, (u h + u)_x = 5 x^4 y t + 2 x y t, u_xxy = 2 t
        let s = FnSampler(|p: Point| Ok(FieldPair::new(p.x * p.x * p.y * p.t, p.x.powi(3))));
        let p = Point::new(0.7, -0.4, 1.3);
        let (x, y, t) = (p.x, p.y, p.t);
        let (r1, r2) = fd_residual_dlw(&s, p, &StencilConfig { step: 1e-3 }).unwrap();
        let want1 = x * x + 6.0 * x + 4.0 * x.powi(3) * y * t * t;
        let want2 = 5.0 * x.powi(4) * y * t + 2.0 * x * y * t + 2.0 * t;
        assert!((r1 - want1).abs() < 1e-5, "{r1} vs {want1}");
        assert!((r2 - want2).abs() < 1e-5, "{r2} vs {want2}");
    }

    #[test]
    fn reduced_stencil_derivatives() {
        // u = z^3, h = z t: u_t = 0, h_z = t, (u^2)_z / 2 = 3 z^5, h_t = z,
        // (u h + u)_z = 4 z^3 t + 3 z^2, u_zzz = 6
        let s = |z: f64, t: f64| Ok(FieldPair::new(z.powi(3), z * t));
        let (z, t) = (0.4, 0.9);
        let (r1, r2) = fd_residual_1d(&s, z, t, &StencilConfig { step: 1e-3 }).unwrap();
        let want1 = t + 3.0 * z.powi(5);
        let want2 = z + 4.0 * z.powi(3) * t + 3.0 * z * z + 6.0;
        assert!((r1 - want1).abs() < 1e-5, "{r1} vs {want1}");
        assert!((r2 - want2).abs() < 1e-5, "{r2} vs {want2}");
    }

    #[test]
    fn pole_in_stencil_skips() {
        let s = FnSampler(|p: Point| {
            if p.x > 0.999 && p.x < 1.001 {
                Err(SampleError::Pole { point: p, phi: 0.0 })
            } else {
                Ok(FieldPair::VACUUM)
            }
        });
        let err = fd_residual_dlw(
            &s,
            Point::new(1.0 - 5e-3, 0.0, 0.0),
            &StencilConfig::default(),
        )
        .unwrap_err();
        assert!((err.point().x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_layout() {
        let g = GridSpec {
            x0: 0.0,
            x1: 1.0,
            nx: 3,
            y0: -1.0,
            y1: 1.0,
            ny: 2,
            t0: 5.0,
            t1: 5.0,
            nt: 1,
        };
        g.validate().unwrap();
        let pts: Vec<_> = g.points().collect();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], Point::new(0.0, -1.0, 5.0));
        assert_eq!(pts[1], Point::new(0.5, -1.0, 5.0));
        assert_eq!(pts[3], Point::new(0.0, 1.0, 5.0));
        let bad = GridSpec { nx: 0, ..g };
        assert!(bad.validate().is_err());
        let bad = GridSpec { x0: 2.0, ..g };
        assert!(bad.validate().is_err());
        assert!(StencilConfig::new(0.0).is_err());
        assert!(StencilConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn report_counts() {
        let g = GridSpec {
            x0: -1.0,
            x1: 1.0,
            nx: 5,
            y0: 0.0,
            y1: 0.0,
            ny: 1,
            t0: 0.0,
            t1: 0.0,
            nt: 1,
        };
        let s = FnSampler(|p: Point| {
            if p.x.abs() < 1e-3 {
                Err(SampleError::Pole { point: p, phi: 0.0 })
            } else {
                Ok(FieldPair::VACUUM)
            }
        });
        let r = grid_report(&s, &g, &StencilConfig::default());
        assert_eq!(r.skipped, 1);
        assert_eq!(r.evaluated, 4);
        assert_eq!(r.total(), g.len());
        assert_eq!(r.first_skip, Some(Point::ORIGIN));
        assert_eq!(r.max_abs(), 0.0);
        assert_eq!(r, grid_report_serial(&s, &g, &StencilConfig::default()));
    }
}
