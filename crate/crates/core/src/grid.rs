//! Spatial discretization: square grid cells with an eligibility mask.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a grid cell, row-major: `id = cy * width + cx`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct CellId(pub u32);

/// A calendar day as the number of days since 1970-01-01.
///
/// Core code never parses dates; the companion crate converts ISO-8601
/// dates to and from this representation.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct EpochDay(pub i64);

impl EpochDay {
    /// Day of week with Monday = 0 .. Sunday = 6.
    ///
    /// Day 0 (1970-01-01) was a Thursday.
    pub fn weekday(self) -> usize {
        ((self.0.rem_euclid(7) + 3) % 7) as usize
    }
}

/// An observed event: planar coordinates in meters plus the calendar day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub x: f64,
    pub y: f64,
    pub day: EpochDay,
}

/// Axis-aligned bounding box in planar meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn of_events(events: &[EventRecord]) -> Option<Bounds> {
        let first = events.first()?;
        let mut b = Bounds {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        for e in events {
            b.min_x = b.min_x.min(e.x);
            b.min_y = b.min_y.min(e.y);
            b.max_x = b.max_x.max(e.x);
            b.max_y = b.max_y.max(e.y);
        }
        Some(b)
    }
}

/// Source of the per-cell eligibility mask.
///
/// Eligibility is an input artifact (for real data, a built land-use
/// filter delivered as a CSV), not something this crate computes from
/// geometry.
#[derive(Debug, Clone)]
pub enum MaskSource<'a> {
    /// Every cell is eligible.
    AllEligible,
    /// Full mask, one flag per cell in id order.
    Full(&'a [bool]),
    /// Sparse per-cell overrides; unlisted cells stay eligible.
    Cells(&'a [(CellId, bool)]),
}

/// Fixed-size square grid covering the study area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    cell_size: f64,
    origin: (f64, f64),
    width: usize,
    height: usize,
    eligible: Vec<bool>,
    eligible_cells: Vec<CellId>,
}

impl GridSpec {
    /// Builds a grid of `cell_size`-meter cells covering `bounds`.
    pub fn new(bounds: Bounds, cell_size: f64, mask: MaskSource<'_>) -> Result<GridSpec> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::Invalid {
                what: "cell_size",
                detail: format!("must be positive and finite, got {cell_size}"),
            });
        }
        if !(bounds.max_x >= bounds.min_x && bounds.max_y >= bounds.min_y) {
            return Err(Error::Invalid {
                what: "bounds",
                detail: format!("{bounds:?} is not a valid extent"),
            });
        }
        let width = cells_along(bounds.max_x - bounds.min_x, cell_size);
        let height = cells_along(bounds.max_y - bounds.min_y, cell_size);
        let n = width * height;
        let eligible = match mask {
            MaskSource::AllEligible => vec![true; n],
            MaskSource::Full(m) => {
                if m.len() != n {
                    return Err(Error::ArityMismatch {
                        expected: n,
                        got: m.len(),
                    });
                }
                m.to_vec()
            }
            MaskSource::Cells(entries) => {
                let mut m = vec![true; n];
                for &(cell, flag) in entries {
                    let idx = cell.0 as usize;
                    if idx >= n {
                        return Err(Error::UnknownCell(cell));
                    }
                    m[idx] = flag;
                }
                m
            }
        };
        let mut grid = GridSpec {
            cell_size,
            origin: (bounds.min_x, bounds.min_y),
            width,
            height,
            eligible,
            eligible_cells: Vec::new(),
        };
        grid.rebuild_eligible_list();
        Ok(grid)
    }

    fn rebuild_eligible_list(&mut self) {
        self.eligible_cells = self
            .eligible
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(|(i, _)| CellId(i as u32))
            .collect();
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn width_cells(&self) -> usize {
        self.width
    }

    pub fn height_cells(&self) -> usize {
        self.height
    }

    /// Total cell count, eligible or not.
    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    /// Eligible cells in ascending id order.
    pub fn eligible_cells(&self) -> &[CellId] {
        &self.eligible_cells
    }

    pub fn n_eligible(&self) -> usize {
        self.eligible_cells.len()
    }

    pub fn is_eligible(&self, cell: CellId) -> bool {
        self.eligible
            .get(cell.0 as usize)
            .copied()
            .unwrap_or(false)
    }

    /// Replaces the eligibility mask, keeping geometry fixed.
    pub fn set_eligibility(&mut self, mask: MaskSource<'_>) -> Result<()> {
        let n = self.n_cells();
        match mask {
            MaskSource::AllEligible => self.eligible = vec![true; n],
            MaskSource::Full(m) => {
                if m.len() != n {
                    return Err(Error::ArityMismatch {
                        expected: n,
                        got: m.len(),
                    });
                }
                self.eligible = m.to_vec();
            }
            MaskSource::Cells(entries) => {
                for &(cell, flag) in entries {
                    let idx = cell.0 as usize;
                    if idx >= n {
                        return Err(Error::UnknownCell(cell));
                    }
                    self.eligible[idx] = flag;
                }
            }
        }
        self.rebuild_eligible_list();
        Ok(())
    }

    /// Restricts eligibility to the given subset of currently eligible cells.
    pub fn restrict_eligible(&mut self, keep: &[CellId]) -> Result<()> {
        let mut mask = vec![false; self.n_cells()];
        for &cell in keep {
            if !self.is_eligible(cell) {
                return Err(Error::UnknownCell(cell));
            }
            mask[cell.0 as usize] = true;
        }
        self.eligible = mask;
        self.rebuild_eligible_list();
        Ok(())
    }

    /// Maps a point to its cell; points on the outer max edge fall into the
    /// last row/column so the grid covers its bounding box inclusively.
    pub fn cell_of_point(&self, x: f64, y: f64) -> Option<CellId> {
        let fx = (x - self.origin.0) / self.cell_size;
        let fy = (y - self.origin.1) / self.cell_size;
        if fx < 0.0 || fy < 0.0 || fx > self.width as f64 || fy > self.height as f64 {
            return None;
        }
        let cx = (fx as usize).min(self.width - 1);
        let cy = (fy as usize).min(self.height - 1);
        Some(CellId((cy * self.width + cx) as u32))
    }

    pub fn centroid(&self, cell: CellId) -> (f64, f64) {
        let (cx, cy) = self.coords(cell);
        (
            self.origin.0 + (cx as f64 + 0.5) * self.cell_size,
            self.origin.1 + (cy as f64 + 0.5) * self.cell_size,
        )
    }

    /// (column, row) of a cell id.
    pub fn coords(&self, cell: CellId) -> (usize, usize) {
        let id = cell.0 as usize;
        (id % self.width, id / self.width)
    }

    /// Moore 8-neighborhood, truncated at the grid edges.
    ///
    /// Ineligible neighbors are included; callers that only care about
    /// eligible cells filter on [`GridSpec::is_eligible`].
    pub fn moore_neighbors(&self, cell: CellId) -> impl Iterator<Item = CellId> + '_ {
        let (cx, cy) = self.coords(cell);
        let (w, h) = (self.width as isize, self.height as isize);
        DELTAS.iter().filter_map(move |&(dx, dy)| {
            let nx = cx as isize + dx;
            let ny = cy as isize + dy;
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                None
            } else {
                Some(CellId((ny * w + nx) as u32))
            }
        })
    }
}

const DELTAS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn cells_along(extent: f64, cell_size: f64) -> usize {
    let n = libm::ceil(extent / cell_size) as usize;
    n.max(1)
}

/// Builds the grid covering all events (or the explicit bounds) and applies
/// the eligibility mask.
///
/// With no events and no explicit bounds the extent cannot be inferred and
/// an error is returned.
pub fn build_grid(
    events: &[EventRecord],
    cell_size: f64,
    bounds: Option<Bounds>,
    mask: MaskSource<'_>,
) -> Result<GridSpec> {
    let bounds = match bounds.or_else(|| Bounds::of_events(events)) {
        Some(b) => b,
        None => {
            return Err(Error::Invalid {
                what: "grid extent",
                detail: "cannot infer extent: no events and no explicit bounds".into(),
            })
        }
    };
    GridSpec::new(bounds, cell_size, mask)
}
