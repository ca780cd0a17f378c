use ndarray::Array1;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;

/// Sub-samples per cell used by [`IndicatorRule::CellAverage`] by default.
pub const DEFAULT_SUBSAMPLES: usize = 64;

/// How a strict inequality on `x` is turned into cell weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IndicatorRule {
    /// A cell belongs to the region iff its centre does.
    CellCenter,
    /// Fraction of `S` equally spaced sub-sample points in the cell that
    /// satisfy the inequality. Converges to the exact region measure as
    /// `dx → 0` and keeps region probabilities accurate when a boundary
    /// falls inside a cell.
    CellAverage(usize),
}

impl Default for IndicatorRule {
    fn default() -> Self {
        IndicatorRule::CellAverage(DEFAULT_SUBSAMPLES)
    }
}

impl IndicatorRule {
    /// Sample offsets within a cell, in units of `dx`.
    pub(crate) fn offsets(&self) -> Vec<f64> {
        match *self {
            IndicatorRule::CellCenter => vec![0.0],
            IndicatorRule::CellAverage(s) => {
                let s = s.max(1);
                (0..s).map(|k| (k as f64 + 0.5) / s as f64 - 0.5).collect()
            }
        }
    }
}

/// Values tabulated on a grid's position nodes; each value holds over its
/// whole cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    grid: GridSpec,
    values: Array1<f64>,
}

impl TabulatedPotential {
    pub fn new(grid: GridSpec, values: Array1<f64>) -> Result<Self> {
        if values.len() != grid.n_x {
            return Err(Error::GridMismatch("potential table length differs from n_x"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("potential table"));
        }
        Ok(Self { grid, values })
    }

    /// Linear interpolation of scattered `(x, V)` samples onto the grid
    /// nodes; constant extrapolation outside the samples.
    pub fn from_samples(grid: GridSpec, samples: &[(f64, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("table", "no samples"));
        }
        let mut pts = samples.to_vec();
        if pts.iter().any(|(x, v)| !(x.is_finite() && v.is_finite())) {
            return Err(Error::NonFinite("potential samples"));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let values = grid.xs().mapv(|x| {
            let k = pts.partition_point(|p| p.0 <= x);
            if k == 0 {
                pts[0].1
            } else if k == pts.len() {
                pts[k - 1].1
            } else {
                let (x0, v0) = pts[k - 1];
                let (x1, v1) = pts[k];
                if x1 == x0 {
                    v1
                } else {
                    v0 + (v1 - v0) * (x - x0) / (x1 - x0)
                }
            }
        });
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    fn at(&self, x: f64) -> f64 {
        let g = &self.grid;
        let i = ((x - g.x_min) / g.dx()).round();
        let i = i.clamp(0.0, (g.n_x - 1) as f64) as usize;
        self.values[i]
    }
}

/// One-dimensional potential `V(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `V0` on `[0, l)`, zero elsewhere.
    RectangularBarrier { v0: f64, l: f64 },
    /// `½mω²x²`.
    Harmonic { omega: f64 },
    Custom(TabulatedPotential),
}

impl Potential {
    pub fn barrier(v0: f64, l: f64) -> Result<Self> {
        if !(v0 > 0.0 && v0.is_finite()) {
            return Err(invalid("V0", format!("{v0} must be positive")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid("l", format!("{l} must be positive")));
        }
        Ok(Potential::RectangularBarrier { v0, l })
    }

    pub fn harmonic(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid("omega", format!("{omega} must be positive")));
        }
        Ok(Potential::Harmonic { omega })
    }

    pub fn tabulated(grid: GridSpec, values: Array1<f64>) -> Result<Self> {
        Ok(Potential::Custom(TabulatedPotential::new(grid, values)?))
    }

    /// `V ≡ 0` on `grid`.
    pub fn free(grid: GridSpec) -> Self {
        Potential::Custom(TabulatedPotential {
            grid,
            values: Array1::zeros(grid.n_x),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::RectangularBarrier { .. } => "rectangular_barrier",
            Potential::Harmonic { .. } => "harmonic",
            Potential::Custom(_) => "custom",
        }
    }

    /// `V(x)`; `grid` supplies the mass for the harmonic well.
    pub fn value(&self, grid: &GridSpec, x: f64) -> f64 {
        match self {
            Potential::RectangularBarrier { v0, l } => {
                if (0.0..*l).contains(&x) {
                    *v0
                } else {
                    0.0
                }
            }
            Potential::Harmonic { omega } => 0.5 * grid.mass * omega * omega * x * x,
            Potential::Custom(t) => t.at(x),
        }
    }

    pub(crate) fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        match self {
            Potential::Custom(t) => t.grid.ensure_same(grid, "tabulated potential"),
            _ => Ok(()),
        }
    }

    /// `V(x_i)` at the grid nodes.
    pub fn sample(&self, grid: &GridSpec) -> Result<Array1<f64>> {
        self.check_grid(grid)?;
        Ok(grid.xs().mapv(|x| self.value(grid, x)))
    }

    /// `V` at the sub-sample points of every cell, `[cell][sample]`.
    pub(crate) fn subsamples(&self, grid: &GridSpec, rule: IndicatorRule) -> Result<Vec<Vec<f64>>> {
        self.check_grid(grid)?;
        let offs = rule.offsets();
        let dx = grid.dx();
        Ok((0..grid.n_x)
            .map(|i| {
                let x = grid.x(i);
                offs.iter().map(|o| self.value(grid, x + o * dx)).collect()
            })
            .collect())
    }

    /// `sup V` over the grid nodes and the default sub-samples.
    pub fn sup(&self, grid: &GridSpec) -> Result<f64> {
        let nodes = self.sample(grid)?;
        let subs = self.subsamples(grid, IndicatorRule::default())?;
        Ok(nodes
            .iter()
            .copied()
            .chain(subs.into_iter().flatten())
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn inf(&self, grid: &GridSpec) -> Result<f64> {
        let nodes = self.sample(grid)?;
        let subs = self.subsamples(grid, IndicatorRule::default())?;
        Ok(nodes
            .iter()
            .copied()
            .chain(subs.into_iter().flatten())
            .fold(f64::INFINITY, f64::min))
    }

    /// Weight of each cell in `{x : V(x) > E*}` under `rule`.
    pub fn forbidden_weights(&self, grid: &GridSpec, e_star: f64, rule: IndicatorRule) -> Result<Array1<f64>> {
        let subs = self.subsamples(grid, rule)?;
        Ok(subs
            .iter()
            .map(|cell| cell.iter().filter(|&&v| v > e_star).count() as f64 / cell.len() as f64)
            .collect())
    }

    /// Zeroth and first moments of the indicator over each cell: the covered
    /// fraction and the mean offset (in units of `dx`) of the covered part.
    /// The second lets region probabilities account for the density slope
    /// inside cells cut by the region boundary.
    pub(crate) fn forbidden_moments(
        &self,
        grid: &GridSpec,
        e_star: f64,
        rule: IndicatorRule,
    ) -> Result<(Array1<f64>, Array1<f64>)> {
        let offs = rule.offsets();
        let subs = self.subsamples(grid, rule)?;
        let s = offs.len() as f64;
        let mut w0 = Array1::zeros(grid.n_x);
        let mut w1 = Array1::zeros(grid.n_x);
        for (i, cell) in subs.iter().enumerate() {
            for (v, o) in cell.iter().zip(&offs) {
                if *v > e_star {
                    w0[i] += 1.0 / s;
                    w1[i] += o / s;
                }
            }
        }
        Ok((w0, w1))
    }

    /// Local change of `V` across one cell, `dx·|V'|`, using the smaller
    /// one-sided difference so that jumps do not register as slopes.
    pub(crate) fn cell_variation(&self, grid: &GridSpec) -> Result<Array1<f64>> {
        let v = self.sample(grid)?;
        let n = v.len();
        Ok(Array1::from_shape_fn(n, |i| {
            let left = if i > 0 { (v[i] - v[i - 1]).abs() } else { f64::INFINITY };
            let right = if i + 1 < n { (v[i + 1] - v[i]).abs() } else { f64::INFINITY };
            let d = left.min(right);
            if d.is_finite() {
                d
            } else {
                0.0
            }
        }))
    }
}
