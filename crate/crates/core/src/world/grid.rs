use serde::{Deserialize, Serialize};

use crate::catalog::Mount;
use crate::cssg::Scene;
use crate::geometry::{Obb, Vec2};
use crate::Config;

/// Agent heading on the grid. North is +y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u16", try_from = "u16")]
pub enum Heading {
    East,
    North,
    West,
    South,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::East, Heading::North, Heading::West, Heading::South];

    pub fn degrees(self) -> u16 {
        match self {
            Heading::East => 0,
            Heading::North => 90,
            Heading::West => 180,
            Heading::South => 270,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn left(self) -> Heading {
        Heading::ALL[(self.index() + 1) % 4]
    }

    pub fn right(self) -> Heading {
        Heading::ALL[(self.index() + 3) % 4]
    }

    /// Grid step (dcol, drow) for one move ahead.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Heading::East => (1, 0),
            Heading::North => (0, 1),
            Heading::West => (-1, 0),
            Heading::South => (0, -1),
        }
    }
}

impl From<Heading> for u16 {
    fn from(h: Heading) -> u16 {
        h.degrees()
    }
}

impl TryFrom<u16> for Heading {
    type Error = String;

    fn try_from(deg: u16) -> Result<Heading, String> {
        match deg {
            0 => Ok(Heading::East),
            90 => Ok(Heading::North),
            180 => Ok(Heading::West),
            270 => Ok(Heading::South),
            other => Err(format!("heading must be 0, 90, 180 or 270, got {other}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pose {
    pub col: usize,
    pub row: usize,
    pub heading: Heading,
}

impl Pose {
    pub fn new(col: usize, row: usize, heading: Heading) -> Self {
        Pose { col, row, heading }
    }
}

/// Occupancy grid over the room floor.
#[derive(Clone, Debug, PartialEq)]
pub struct NavGrid {
    pub origin: Vec2,
    pub resolution: f64,
    pub cols: usize,
    pub rows: usize,
    navigable: Vec<bool>,
}

impl NavGrid {
    /// Grid with an explicit mask, indexed `row * cols + col`.
    pub fn from_mask(cols: usize, rows: usize, resolution: f64, navigable: Vec<bool>) -> NavGrid {
        assert_eq!(navigable.len(), cols * rows, "mask size must match the grid");
        NavGrid {
            origin: Vec2::ZERO,
            resolution,
            cols,
            rows,
            navigable,
        }
    }

    /// A cell is navigable when its square lies on the floor and touches no
    /// blocking floor object.
    pub fn from_scene(cfg: &Config, scene: &Scene) -> NavGrid {
        let res = cfg.rules.placement.resolution;
        let floor = scene.structure.polygon();
        let (lo, hi) = floor.bbox();
        let cols = ((hi.x - lo.x) / res).round() as usize;
        let rows = ((hi.y - lo.y) / res).round() as usize;
        let blockers: Vec<Obb> = scene
            .objects
            .iter()
            .filter(|o| o.support.is_none())
            .filter(|o| {
                cfg.catalog
                    .get(&o.object_type)
                    .is_some_and(|t| t.blocking && t.mount == Mount::Floor)
            })
            .map(|o| o.footprint())
            .collect();
        let mut navigable = Vec::with_capacity(cols * rows);
        for row in 0..rows {
            for col in 0..cols {
                let c = Vec2::new(lo.x + (col as f64 + 0.5) * res, lo.y + (row as f64 + 0.5) * res);
                let cell = Obb::square(c, res);
                navigable.push(floor.contains_obb(&cell) && !blockers.iter().any(|b| b.overlaps(&cell)));
            }
        }
        NavGrid {
            origin: lo,
            resolution: res,
            cols,
            rows,
            navigable,
        }
    }

    pub fn center(&self, col: usize, row: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn is_navigable(&self, col: i64, row: i64) -> bool {
        col >= 0
            && row >= 0
            && (col as usize) < self.cols
            && (row as usize) < self.rows
            && self.navigable[row as usize * self.cols + col as usize]
    }

    pub fn navigable_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| (c, r))).filter(|&(c, r)| self.navigable[r * self.cols + c])
    }

    /// Pose after a move ahead, if the next cell is navigable.
    pub fn step(&self, pose: Pose) -> Option<Pose> {
        let (dc, dr) = pose.heading.delta();
        let (c, r) = (pose.col as i64 + dc, pose.row as i64 + dr);
        self.is_navigable(c, r).then(|| Pose::new(c as usize, r as usize, pose.heading))
    }

    /// Navigable cell closest to `p`; ties go to the lowest (row, col).
    pub fn nearest_navigable(&self, p: Vec2) -> Option<(usize, usize)> {
        self.navigable_cells()
            .min_by(|a, b| {
                let da = self.center(a.0, a.1).distance(p);
                let db = self.center(b.0, b.1).distance(p);
                da.total_cmp(&db).then((a.1, a.0).cmp(&(b.1, b.0)))
            })
    }
}
