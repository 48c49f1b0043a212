use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible cell count in either direction.
pub const MIN_CELLS: usize = 8;

/// Treatment of the axial ends of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZBoundary {
    /// Velocity is prescribed on `z = z_min` and `z = z_max`.
    #[default]
    Wall,
    /// The node column `nz` duplicates column `0`.
    Periodic,
}

/// Uniform node grid on `[0, r_max] x [z_min, z_max]`.
///
/// Nodes are `r_i = i dr` for `i = 0..=nr` and `z_j = z_min + j dz` for
/// `j = 0..=nz`; the axis `r = 0` is the grid line `i = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nr: usize,
    pub nz: usize,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub dr: f64,
    pub dz: f64,
    pub z_boundary: ZBoundary,
}

impl Grid {
    pub fn new(nr: usize, nz: usize, r_max: f64, z_min: f64, z_max: f64) -> Result<Self> {
        if nr < MIN_CELLS || nz < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells per direction, got nr={nr}, nz={nz}"
            )));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("r_max must be positive, got {r_max}")));
        }
        if !(z_min.is_finite() && z_max.is_finite() && z_max > z_min) {
            return Err(Error::InvalidGrid(format!(
                "need z_max > z_min, got [{z_min}, {z_max}]"
            )));
        }
        Ok(Grid {
            nr,
            nz,
            r_max,
            z_min,
            z_max,
            dr: r_max / nr as f64,
            dz: (z_max - z_min) / nz as f64,
            z_boundary: ZBoundary::Wall,
        })
    }

    pub fn with_z_boundary(mut self, z_boundary: ZBoundary) -> Self {
        self.z_boundary = z_boundary;
        self
    }

    pub fn is_periodic(&self) -> bool {
        self.z_boundary == ZBoundary::Periodic
    }

    /// Shape `(nr + 1, nz + 1)` of node arrays.
    pub fn shape(&self) -> (usize, usize) {
        (self.nr + 1, self.nz + 1)
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.dz
    }

    pub fn min_spacing(&self) -> f64 {
        self.dr.min(self.dz)
    }

    /// Axial node indices whose values are unknowns (not prescribed boundary
    /// data and not periodic duplicates).
    pub fn z_interior(&self) -> std::ops::Range<usize> {
        match self.z_boundary {
            ZBoundary::Wall => 1..self.nz,
            ZBoundary::Periodic => 0..self.nz,
        }
    }

    /// Axial neighbours `(j - 1, j + 1)` of an interior index; periodic grids wrap.
    #[inline]
    pub fn z_neighbours(&self, j: usize) -> (usize, usize) {
        match self.z_boundary {
            ZBoundary::Wall => (j - 1, j + 1),
            ZBoundary::Periodic => ((j + self.nz - 1) % self.nz, (j + 1) % self.nz),
        }
    }

    /// Node `j + offset` along z, wrapped on periodic grids, `None` if it falls
    /// off a wall-bounded grid.
    #[inline]
    pub fn z_offset(&self, j: usize, offset: isize) -> Option<usize> {
        let k = j as isize + offset;
        match self.z_boundary {
            ZBoundary::Wall => (0..=self.nz as isize).contains(&k).then_some(k as usize),
            ZBoundary::Periodic => Some(k.rem_euclid(self.nz as isize) as usize),
        }
    }

    /// True for nodes carrying prescribed far-field data.
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == self.nr || (self.z_boundary == ZBoundary::Wall && (j == 0 || j == self.nz))
    }

    pub fn contains(&self, r: f64, z: f64) -> bool {
        let eps = 1e-12 * (self.r_max + self.z_max.abs() + self.z_min.abs());
        (0.0..=self.r_max + eps).contains(&r) && z >= self.z_min - eps && z <= self.z_max + eps
    }

    /// Grid with identical counts and all lengths multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Ok(Grid::new(
            self.nr,
            self.nz,
            self.r_max * factor,
            self.z_min * factor,
            self.z_max * factor,
        )?
        .with_z_boundary(self.z_boundary))
    }
}

/// Convenience constructor mirroring [`Grid::new`].
pub fn make_grid(nr: usize, nz: usize, r_max: f64, z_min: f64, z_max: f64) -> Result<Grid> {
    Grid::new(nr, nz, r_max, z_min, z_max)
}
