//! Uniform grids on `[-R, R]^n` (n = 1, 2), sampled functions and midpoint quadrature.
//!
//! Values are stored row-major with axis 0 (the `x_1` coordinate) as the slowest
//! index: the node with per-axis indices `(i_1, .., i_n)` lives at
//! `sum_d i_d * m^(n-1-d)`. The number of points per axis is odd so the origin is
//! always a node and the node set is symmetric about it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HerzError, Result};

/// A point of the grid; the second coordinate is zero in one dimension.
pub type Point = [f64; 2];

/// Axis-aligned uniform grid over `[-extent, extent]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    extent: f64,
    points_per_axis: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(dim: usize, extent: f64, points_per_axis: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(HerzError::InvalidGrid(format!(
                "unsupported dimension {dim}; only 1 and 2 are supported"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(HerzError::InvalidGrid(format!(
                "extent must be positive and finite, got {extent}"
            )));
        }
        if points_per_axis < 3 || points_per_axis.is_multiple_of(2) {
            return Err(HerzError::InvalidGrid(format!(
                "points_per_axis must be odd and at least 3, got {points_per_axis}"
            )));
        }
        let spacing = 2.0 * extent / (points_per_axis - 1) as f64;
        Ok(Self {
            dim,
            extent,
            points_per_axis,
            spacing,
        })
    }

    /// Default desk-scale grid: 1-D with R = 16 and h = 1/64, 2-D with R = 8 and m = 257.
    pub fn desk(dim: usize) -> Result<Self> {
        match dim {
            1 => Self::new(1, 16.0, 2049),
            2 => Self::new(2, 8.0, 257),
            _ => Self::new(dim, 1.0, 3),
        }
    }

    /// The same extent with the spacing halved.
    pub fn refined(&self) -> Self {
        Self::new(self.dim, self.extent, 2 * self.points_per_axis - 1)
            .expect("refinement of a valid grid is valid")
    }

    /// The grid dilated by `factor` (same node count, spacing and extent scaled).
    pub fn dilated(&self, factor: f64) -> Result<Self> {
        Self::new(self.dim, self.extent * factor, self.points_per_axis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Quadrature weight `h^n` of a single node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the center node along one axis.
    pub fn center_index(&self) -> usize {
        (self.points_per_axis - 1) / 2
    }

    /// Coordinate of node `i` along an axis.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        (i as f64 - self.center_index() as f64) * self.spacing
    }

    /// Per-axis coordinates of all nodes.
    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.points_per_axis)
            .map(|i| self.axis_coord(i))
            .collect()
    }

    /// Per-axis indices of a flat index.
    #[inline]
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.points_per_axis, flat % self.points_per_axis]
        }
    }

    #[inline]
    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.points_per_axis + idx[1]
        }
    }

    #[inline]
    pub fn point(&self, flat: usize) -> Point {
        let [i, j] = self.unflatten(flat);
        if self.dim == 1 {
            [self.axis_coord(i), 0.0]
        } else {
            [self.axis_coord(i), self.axis_coord(j)]
        }
    }

    /// Squared Euclidean norm of node `flat`; exact for dyadic spacings.
    #[inline]
    pub fn norm_sq(&self, flat: usize) -> f64 {
        let p = self.point(flat);
        p[0] * p[0] + p[1] * p[1]
    }

    #[inline]
    pub fn norm(&self, flat: usize) -> f64 {
        self.norm_sq(flat).sqrt()
    }

    /// Flat index of the origin.
    pub fn origin(&self) -> usize {
        let c = self.center_index();
        self.flatten([c, c])
    }

    /// Largest Euclidean norm of any node (the corner radius).
    pub fn max_radius(&self) -> f64 {
        self.extent * (self.dim as f64).sqrt()
    }

    /// Continuum volume of the Euclidean ball of radius `r` in this dimension.
    pub fn ball_volume(&self, r: f64) -> f64 {
        ball_volume(self.dim, r)
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(HerzError::GridMismatch(format!(
                "expected {}-D grid R={} m={}, got {}-D grid R={} m={}",
                self.dim,
                self.extent,
                self.points_per_axis,
                other.dim,
                other.extent,
                other.points_per_axis
            )))
        }
    }
}

/// Continuum volume of a Euclidean ball of radius `r` in dimension 1 or 2.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        _ => std::f64::consts::PI * r * r,
    }
}

/// Node selection on a grid; `true` means the node participates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask(pub Vec<bool>);

impl Mask {
    pub fn all(grid: &Grid) -> Self {
        Mask(vec![true; grid.len()])
    }

    pub fn none(grid: &Grid) -> Self {
        Mask(vec![false; grid.len()])
    }

    pub fn from_fn(grid: &Grid, pred: impl Fn(usize) -> bool) -> Self {
        Mask((0..grid.len()).map(pred).collect())
    }

    /// Closed Euclidean ball `|x| <= r`.
    pub fn ball(grid: &Grid, r: f64) -> Self {
        let r2 = r * r;
        Self::from_fn(grid, |i| grid.norm_sq(i) <= r2)
    }

    /// Nodes with `lo < |x| <= hi`.
    pub fn annulus(grid: &Grid, lo: f64, hi: f64) -> Self {
        let (lo2, hi2) = (lo * lo, hi * hi);
        Self::from_fn(grid, |i| {
            let r2 = grid.norm_sq(i);
            r2 > lo2 && r2 <= hi2
        })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Discrete measure `count * h^n`.
    pub fn measure(&self, grid: &Grid) -> f64 {
        self.count() as f64 * grid.cell_volume()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn and(&self, other: &Mask) -> Mask {
        Mask(self.0.iter().zip(&other.0).map(|(a, b)| *a && *b).collect())
    }

    pub fn or(&self, other: &Mask) -> Mask {
        Mask(self.0.iter().zip(&other.0).map(|(a, b)| *a || *b).collect())
    }

    pub fn and_not(&self, other: &Mask) -> Mask {
        Mask(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a && !*b)
                .collect(),
        )
    }

    pub fn not(&self) -> Mask {
        Mask(self.0.iter().map(|b| !b).collect())
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| !*a || *b)
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if self.0.len() == grid.len() {
            Ok(())
        } else {
            Err(HerzError::GridMismatch(format!(
                "mask has {} entries, grid has {}",
                self.0.len(),
                grid.len()
            )))
        }
    }
}

/// Real samples of a function at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(HerzError::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(HerzError::InvalidGrid(format!(
                "non-finite value {} at node {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            grid: *grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self {
            grid: *grid,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self + c * other`, in place.
    pub fn axpy(&mut self, c: f64, other: &GridFunction) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    /// Zero outside `mask`.
    pub fn restricted(&self, mask: &Mask) -> Self {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&mask.0)
                .map(|(&v, &keep)| if keep { v } else { 0.0 })
                .collect(),
        }
    }

    /// Nodes where the value is nonzero.
    pub fn support(&self) -> Mask {
        Mask(self.values.iter().map(|&v| v != 0.0).collect())
    }

    /// Largest `|x|` over the support, or `None` for the zero function.
    pub fn support_radius(&self) -> Option<f64> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| self.grid.norm(i))
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn l1_norm(&self) -> f64 {
        quadrature_integrate(&self.abs(), None).expect("same grid")
    }

    pub fn to_file(&self) -> GridFunctionFile {
        GridFunctionFile {
            dim: self.grid.dim,
            extent: self.grid.extent,
            points_per_axis: self.grid.points_per_axis,
            values: self.values.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: GridFunctionFile = serde_json::from_str(s)?;
        file.into_function()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk JSON shape of a [`GridFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunctionFile {
    pub dim: usize,
    pub extent: f64,
    pub points_per_axis: usize,
    pub values: Vec<f64>,
}

impl GridFunctionFile {
    pub fn into_function(self) -> Result<GridFunction> {
        let grid = Grid::new(self.dim, self.extent, self.points_per_axis)?;
        GridFunction::new(grid, self.values)
    }
}

/// Midpoint rule `sum values * h^n` over the nodes selected by `mask` (all nodes
/// when `None`), accumulated in row-major order.
pub fn quadrature_integrate(f: &GridFunction, mask: Option<&Mask>) -> Result<f64> {
    let w = f.grid.cell_volume();
    match mask {
        None => Ok(f.values.iter().sum::<f64>() * w),
        Some(mask) => {
            mask.check(&f.grid)?;
            let s: f64 = f
                .values
                .iter()
                .zip(&mask.0)
                .filter(|(_, &keep)| keep)
                .map(|(v, _)| v)
                .sum();
            Ok(s * w)
        }
    }
}

/// `∫ f g` by the midpoint rule.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.grid.ensure_same(&g.grid)?;
    let s: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(s * f.grid.cell_volume())
}
