//! Point samples of the field pair `(u, h)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point {
    pub const ORIGIN: Point = Point {
        x: 0.0,
        y: 0.0,
        t: 0.0,
    };

    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Point { x, y, t }
    }

    pub fn shifted(self, dx: f64, dy: f64, dt: f64) -> Self {
        Point::new(self.x + dx, self.y + dy, self.t + dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPair {
    pub u: f64,
    pub h: f64,
}

impl FieldPair {
    pub const VACUUM: FieldPair = FieldPair { u: 0.0, h: -1.0 };

    pub fn new(u: f64, h: f64) -> Self {
        FieldPair { u, h }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("pole at ({}, {}, {}): |phi| = {phi:e}", .point.x, .point.y, .point.t)]
    Pole { point: Point, phi: f64 },
    #[error("evaluation failed at ({}, {}, {}): {message}", .point.x, .point.y, .point.t)]
    Evaluation { point: Point, message: String },
}

impl SampleError {
    pub fn point(&self) -> Point {
        match self {
            SampleError::Pole { point, .. } | SampleError::Evaluation { point, .. } => *point,
        }
    }
}

/// A deterministic, thread-safe source of `(u, h)` values.
pub trait FieldSampler: Sync {
    fn sample(&self, p: Point) -> Result<FieldPair, SampleError>;

    /// Rejects points whose neighbourhood of the given radius may touch a
    /// singularity. The default accepts everything.
    fn check_footprint(&self, _p: Point, _radius: f64) -> Result<(), SampleError> {
        Ok(())
    }
}

impl<S: FieldSampler + ?Sized> FieldSampler for &S {
    fn sample(&self, p: Point) -> Result<FieldPair, SampleError> {
        (**self).sample(p)
    }

    fn check_footprint(&self, p: Point, radius: f64) -> Result<(), SampleError> {
        (**self).check_footprint(p, radius)
    }
}

/// `(z, t) -> (u, h)` for the reduced system.
pub trait LineSampler: Sync {
    fn sample(&self, z: f64, t: f64) -> Result<FieldPair, SampleError>;
}

impl<F> LineSampler for F
where
    F: Fn(f64, f64) -> Result<FieldPair, SampleError> + Sync,
{
    fn sample(&self, z: f64, t: f64) -> Result<FieldPair, SampleError> {
        self(z, t)
    }
}

/// Adapts a plain function into a [`FieldSampler`].
pub struct FnSampler<F>(pub F);

impl<F> FieldSampler for FnSampler<F>
where
    F: Fn(Point) -> Result<FieldPair, SampleError> + Sync,
{
    fn sample(&self, p: Point) -> Result<FieldPair, SampleError> {
        (self.0)(p)
    }
}

/// Wraps a sampler and adds `amount * x^2` to `h`. Used as a negative control.
pub struct PerturbedH<S> {
    pub inner: S,
    pub amount: f64,
}

impl<S: FieldSampler> FieldSampler for PerturbedH<S> {
    fn sample(&self, p: Point) -> Result<FieldPair, SampleError> {
        let mut f = self.inner.sample(p)?;
        f.h += self.amount * p.x * p.x;
        Ok(f)
    }

    fn check_footprint(&self, p: Point, radius: f64) -> Result<(), SampleError> {
        self.inner.check_footprint(p, radius)
    }
}
