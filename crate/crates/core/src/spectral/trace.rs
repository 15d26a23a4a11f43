use super::{Field, Grid};
use crate::error::{GkdvError, Result};

/// Relative tolerance used to decide whether samples are uniformly spaced.
const UNIFORM_TOL: f64 = 1e-9;

/// Time-sampled sequence of fields on one grid.
#[derive(Clone, Debug)]
pub struct Trace {
    times: Vec<f64>,
    fields: Vec<Field>,
}

impl Trace {
    pub fn new(times: Vec<f64>, fields: Vec<Field>) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(GkdvError::InvalidArgument(format!(
                "{} times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GkdvError::InvalidArgument("trace times must be strictly increasing".into()));
        }
        if let Some(first) = fields.first() {
            if fields.iter().any(|f| f.grid() != first.grid()) {
                return Err(GkdvError::GridMismatch("trace fields must share one grid".into()));
            }
        }
        Ok(Trace { times, fields })
    }

    /// Samples `f(t)` at `times`.
    pub fn sample(times: Vec<f64>, f: impl Fn(f64) -> Field) -> Result<Self> {
        let fields = times.iter().map(|&t| f(t)).collect();
        Self::new(times, fields)
    }

    pub fn push(&mut self, t: f64, f: Field) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(GkdvError::InvalidArgument(format!("time {t} does not follow {last}")));
            }
            if f.grid() != self.fields[0].grid() {
                return Err(GkdvError::GridMismatch("trace fields must share one grid".into()));
            }
        }
        self.times.push(t);
        self.fields.push(f);
        Ok(())
    }

    pub fn empty() -> Self {
        Trace { times: Vec::new(), fields: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.fields.first().map(Field::grid)
    }

    pub fn frame(&self, i: usize) -> (f64, &Field) {
        (self.times[i], &self.fields[i])
    }

    pub fn last(&self) -> Option<(f64, &Field)> {
        self.times.last().map(|&t| (t, self.fields.last().unwrap()))
    }

    /// Sample spacing when all gaps agree to a relative 1e-9.
    pub fn uniform_dt(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let dt = self.times[1] - self.times[0];
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= UNIFORM_TOL * dt)
            .then_some(dt)
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform_dt().is_some()
    }

    /// Indices of the frames with `t0 - tol ≤ t ≤ t1 + tol`.
    pub fn window_indices(&self, window: (f64, f64)) -> std::ops::Range<usize> {
        let tol = self.uniform_dt().unwrap_or(0.0) * 1e-6;
        let start = self.times.partition_point(|&t| t < window.0 - tol);
        let end = self.times.partition_point(|&t| t <= window.1 + tol);
        start..end.max(start)
    }

    /// Sub-trace restricted to `window`.
    pub fn restrict(&self, window: (f64, f64)) -> Trace {
        let r = self.window_indices(window);
        Trace { times: self.times[r.clone()].to_vec(), fields: self.fields[r].to_vec() }
    }

    /// Applies `f` to every frame.
    pub fn map(&self, f: impl Fn(f64, &Field) -> Field) -> Trace {
        let fields = self.times.iter().zip(&self.fields).map(|(&t, u)| f(t, u)).collect();
        Trace { times: self.times.clone(), fields }
    }

    pub fn span(&self) -> Option<(f64, f64)> {
        Some((*self.times.first()?, *self.times.last()?))
    }
}
