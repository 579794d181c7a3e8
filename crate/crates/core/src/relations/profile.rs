use super::{Profiles, RelationKind, RuleSet};
use crate::geometry::{heading_of, Obb, Segment, Vec2};

impl Profiles {
    /// Score of a relation at clearance `d`. Lower is better, never negative.
    pub fn score(&self, kind: RelationKind, d: f64) -> f64 {
        match kind {
            RelationKind::Against => (d - self.against.contact).max(0.0) * self.against.slope,
            RelationKind::Beside | RelationKind::Face => {
                let p = if kind == RelationKind::Beside { &self.beside } else { &self.face };
                if d < p.near {
                    (p.near - d) * p.slope_near
                } else if d > p.far {
                    (d - p.far) / p.sigma
                } else {
                    0.0
                }
            }
            RelationKind::AwayFrom => (self.away_from.reach - d).max(0.0) * self.away_from.slope,
            RelationKind::On | RelationKind::In => self.support.edge_slope * d.max(0.0),
        }
    }
}

/// A wall with its inward unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallSeg {
    pub seg: Segment,
    pub normal: Vec2,
}

/// A convex room corner and the two walls meeting at it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerGeom {
    pub point: Vec2,
    pub walls: [WallSeg; 2],
}

/// Resolved geometry of a relation target.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetGeometry {
    Walls(Vec<WallSeg>),
    Corners(Vec<CornerGeom>),
    /// Door or window openings, as wall spans.
    Openings(Vec<WallSeg>),
    Object(Obb),
}

impl TargetGeometry {
    fn nearest_wall<'a>(walls: &'a [WallSeg], probe: &Obb) -> Option<&'a WallSeg> {
        walls.iter().min_by(|a, b| {
            let da = a.seg.distance_to_point(probe.center);
            let db = b.seg.distance_to_point(probe.center);
            da.total_cmp(&db)
        })
    }

    fn nearest_corner(corners: &[CornerGeom], p: Vec2) -> Option<&CornerGeom> {
        corners
            .iter()
            .min_by(|a, b| a.point.distance(p).total_cmp(&b.point.distance(p)))
    }

    /// The wall (or corner) the probe would be pushed against, with the gap.
    pub fn contact_walls(&self, probe: &Obb) -> Vec<(WallSeg, f64)> {
        match self {
            TargetGeometry::Walls(walls) | TargetGeometry::Openings(walls) => {
                Self::nearest_wall(walls, probe)
                    .map(|w| vec![(*w, probe.distance_to_segment(&w.seg))])
                    .unwrap_or_default()
            }
            TargetGeometry::Corners(corners) => Self::nearest_corner(corners, probe.center)
                .map(|c| c.walls.iter().map(|w| (*w, probe.distance_to_segment(&w.seg))).collect())
                .unwrap_or_default(),
            TargetGeometry::Object(_) => Vec::new(),
        }
    }

    /// Clearance used by the score profiles. For support relations this is
    /// the smallest distance from the probe to the supporter's outline.
    pub fn measure(&self, kind: RelationKind, probe: &Obb) -> f64 {
        if kind.is_support() {
            if let TargetGeometry::Object(sup) = self {
                return probe
                    .corners()
                    .iter()
                    .map(|&c| {
                        let (f, l) = sup.to_local(c);
                        (sup.depth / 2.0 - f.abs()).min(sup.width / 2.0 - l.abs())
                    })
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0);
            }
        }
        match self {
            TargetGeometry::Walls(walls) | TargetGeometry::Openings(walls) => walls
                .iter()
                .map(|w| probe.distance_to_segment(&w.seg))
                .fold(f64::INFINITY, f64::min),
            TargetGeometry::Corners(corners) => Self::nearest_corner(corners, probe.center)
                .map(|c| {
                    c.walls
                        .iter()
                        .map(|w| probe.distance_to_segment(&w.seg))
                        .fold(0.0, f64::max)
                })
                .unwrap_or(f64::INFINITY),
            TargetGeometry::Object(o) => probe.distance_to(o),
        }
    }

    /// Point the subject looks at for facing relations.
    pub fn focus_point(&self, p: Vec2) -> Vec2 {
        match self {
            TargetGeometry::Walls(walls) | TargetGeometry::Openings(walls) => walls
                .iter()
                .map(|w| w.seg.closest_point(p))
                .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
                .unwrap_or(p),
            TargetGeometry::Corners(corners) => Self::nearest_corner(corners, p).map_or(p, |c| c.point),
            TargetGeometry::Object(o) => o.center,
        }
    }

    /// Unquantized rotation implied by `kind` for an object centered at `p`.
    pub fn rotation(&self, kind: RelationKind, p: Vec2) -> f64 {
        let probe = Obb::square(p, 0.0);
        match (kind, self) {
            (RelationKind::On | RelationKind::In, TargetGeometry::Object(o)) => o.rotation,
            (RelationKind::Against | RelationKind::AwayFrom, TargetGeometry::Walls(walls) | TargetGeometry::Openings(walls)) => {
                Self::nearest_wall(walls, &probe).map_or(0.0, |w| heading_of(w.normal))
            }
            (RelationKind::Against | RelationKind::AwayFrom, TargetGeometry::Corners(corners)) => {
                match Self::nearest_corner(corners, p) {
                    Some(c) => {
                        let [a, b] = c.walls;
                        let w = if a.seg.distance_to_point(p) <= b.seg.distance_to_point(p) { a } else { b };
                        heading_of(w.normal)
                    }
                    None => 0.0,
                }
            }
            (RelationKind::Against, TargetGeometry::Object(o)) => {
                let away = p - o.closest_point(p);
                if away.length() > 1e-9 {
                    heading_of(away)
                } else {
                    heading_of(p - o.center)
                }
            }
            (RelationKind::AwayFrom, TargetGeometry::Object(o)) => heading_of(p - o.center),
            (_, TargetGeometry::Walls(walls) | TargetGeometry::Openings(walls)) => {
                // facing or beside a wall: look at it
                Self::nearest_wall(walls, &probe).map_or(0.0, |w| heading_of(-w.normal))
            }
            _ => heading_of(self.focus_point(p) - p),
        }
    }
}

/// Score and implied rotation of one relation for a candidate footprint.
pub fn score_at(rules: &RuleSet, kind: RelationKind, probe: &Obb, target: &TargetGeometry) -> (f64, f64) {
    let d = target.measure(kind, probe);
    (rules.profiles.score(kind, d), target.rotation(kind, probe.center))
}
