//! Spatial sampling: hexagonal cell grid, homogeneous Poisson device
//! placement, and extraction of the typical cell around the origin.
//!
//! Hexagons are flat-top with apothem `R`, so the disk of radius `R`
//! around a base station is the inscribed disk of its cell. The typical
//! base station sits at the origin.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{FeelError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn from_polar(r: T, angle: T) -> Self {
        Self::new(r * angle.cos(), r * angle.sin())
    }

    pub fn norm_sq(&self) -> T {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(&self) -> T {
        self.x.hypot(self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Hexagonal lattice of base stations covering a square window.
#[derive(Clone, Debug)]
pub struct HexGrid<T> {
    cell_radius: T,
    window_half_width: T,
    centers: Vec<Point2<T>>,
}

impl<T: Scalar> HexGrid<T> {
    /// Builds the lattice with one center at the origin.
    ///
    /// `cell_radius` is the apothem (center to flat side).
    pub fn new(cell_radius: T, window_half_width: T) -> Result<Self> {
        if !(cell_radius > T::zero()) || !cell_radius.is_finite() {
            return Err(FeelError::param("cell_radius", "must be positive and finite"));
        }
        if !(window_half_width > T::zero()) || !window_half_width.is_finite() {
            return Err(FeelError::param(
                "window_half_width",
                "must be positive and finite",
            ));
        }
        let two = T::lit(2.0);
        let col_step = T::lit(3f64.sqrt()) * cell_radius;
        let row_step = two * cell_radius;
        let reach = window_half_width + two * cell_radius;
        let max_col = (reach / col_step).ceil().to_i64().unwrap_or(0);
        let max_row = (reach / row_step).ceil().to_i64().unwrap_or(0) + 1;

        let mut centers = Vec::new();
        for i in -max_col..=max_col {
            let x = col_step * T::lit(i as f64);
            let offset = if i.rem_euclid(2) == 1 {
                cell_radius
            } else {
                T::zero()
            };
            for j in -max_row..=max_row {
                let y = row_step * T::lit(j as f64) + offset;
                if x.abs() <= reach && y.abs() <= reach {
                    centers.push(Point2::new(x, y));
                }
            }
        }
        Ok(Self {
            cell_radius,
            window_half_width,
            centers,
        })
    }

    pub fn cell_radius(&self) -> T {
        self.cell_radius
    }

    pub fn window_half_width(&self) -> T {
        self.window_half_width
    }

    pub fn centers(&self) -> &[Point2<T>] {
        &self.centers
    }

    /// Strict membership in the hexagon centred at `center`.
    pub fn in_cell(&self, center: Point2<T>, p: Point2<T>) -> bool {
        let dx = (p.x - center.x).abs();
        let dy = (p.y - center.y).abs();
        let half = T::lit(0.5);
        let cos30 = T::lit(3f64.sqrt() / 2.0);
        dy < self.cell_radius && cos30 * dx + half * dy < self.cell_radius
    }

    /// Strict membership in the typical (origin) hexagon.
    pub fn in_typical_cell(&self, p: Point2<T>) -> bool {
        self.in_cell(Point2::origin(), p)
    }

    /// Base station whose cell contains `p` (nearest lattice point).
    pub fn serving_center(&self, p: Point2<T>) -> Option<Point2<T>> {
        self.centers.iter().copied().min_by(|a, b| {
            let da = Point2::new(p.x - a.x, p.y - a.y).norm_sq();
            let db = Point2::new(p.x - b.x, p.y - b.y).norm_sq();
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

/// One draw of device positions around the typical base station.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CellRealization<T> {
    /// Devices strictly inside the inscribed disk; the only learners.
    pub in_disk: Vec<Point2<T>>,
    /// Devices in the typical hexagon but outside the disk; they stay silent.
    pub silent: Vec<Point2<T>>,
    /// Devices of other cells.
    pub interferers: Vec<Point2<T>>,
}

impl<T> CellRealization<T> {
    pub fn total(&self) -> usize {
        self.in_disk.len() + self.silent.len() + self.interferers.len()
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    let n: f64 = dist.sample(rng);
    n as usize
}

fn check_density<T: Scalar>(density: T) -> Result<f64> {
    let d = density.to_f64_lossy();
    if !(d >= 0.0) || !d.is_finite() {
        return Err(FeelError::param("density", "must be finite and non-negative"));
    }
    Ok(d)
}

/// Homogeneous PPP on the square `[-h, h]²`.
pub fn sample_ppp<T: Scalar, R: Rng + ?Sized>(
    density: T,
    window_half_width: T,
    rng: &mut R,
) -> Result<Vec<Point2<T>>> {
    let d = check_density(density)?;
    let h = window_half_width.to_f64_lossy();
    if !(h > 0.0) || !h.is_finite() {
        return Err(FeelError::param(
            "window_half_width",
            "must be positive and finite",
        ));
    }
    let n = poisson_count(d * 4.0 * h * h, rng);
    Ok((0..n)
        .map(|_| {
            let x = (2.0 * rng.random::<f64>() - 1.0) * h;
            let y = (2.0 * rng.random::<f64>() - 1.0) * h;
            Point2::new(T::lit(x), T::lit(y))
        })
        .collect())
}

/// Homogeneous PPP restricted to the open disk of radius `radius` at the origin.
pub fn sample_ppp_in_disk<T: Scalar, R: Rng + ?Sized>(
    density: T,
    radius: T,
    rng: &mut R,
) -> Result<Vec<Point2<T>>> {
    let d = check_density(density)?;
    let r = radius.to_f64_lossy();
    if !(r > 0.0) {
        return Err(FeelError::param("radius", "must be positive"));
    }
    let n = poisson_count(d * std::f64::consts::PI * r * r, rng);
    Ok((0..n)
        .map(|_| {
            let dist = sample_disk_distance(r, rng);
            let angle = std::f64::consts::TAU * rng.random::<f64>();
            Point2::from_polar(T::lit(dist), T::lit(angle))
        })
        .collect())
}

/// Splits a window realization into disk learners, silent cell members
/// and interferers. Membership tests run disk first, then hexagon.
pub fn partition_typical_cell<T: Scalar>(
    points: &[Point2<T>],
    grid: &HexGrid<T>,
) -> CellRealization<T> {
    let r2 = grid.cell_radius() * grid.cell_radius();
    let mut out = CellRealization {
        in_disk: Vec::new(),
        silent: Vec::new(),
        interferers: Vec::new(),
    };
    for &p in points {
        if p.norm_sq() < r2 {
            out.in_disk.push(p);
        } else if grid.in_typical_cell(p) {
            out.silent.push(p);
        } else {
            out.interferers.push(p);
        }
    }
    out
}

/// Distance from the origin of a uniform point in the disk of radius `radius`.
///
/// Density `2r/R²` on `(0, R)`, drawn by inverse transform `R·√U`.
pub fn sample_disk_distance<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    radius * u.sqrt()
}

/// Independent thinning: keeps each point with probability `keep`.
pub fn thin<T: Copy, R: Rng + ?Sized>(points: &[T], keep: f64, rng: &mut R) -> Vec<T> {
    points
        .iter()
        .copied()
        .filter(|_| rng.random::<f64>() < keep)
        .collect()
}
