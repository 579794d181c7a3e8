use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GenerationError;
use crate::catalog::{Catalog, Mount};
use crate::cdf::RoomType;
use crate::config::ConfigError;
use crate::geometry::{heading_of, Obb, Polygon, Segment, Vec2};
use crate::relations::{CornerGeom, WallSeg};

/// A door or window span on wall `wall`, starting `offset` meters from the
/// wall's first vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Opening {
    pub wall: usize,
    pub offset: f64,
    pub width: f64,
}

/// Structural furniture that stays where the room puts it, flush against
/// `wall` with its center `offset` meters along it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedElement {
    #[serde(rename = "type")]
    pub object_type: String,
    pub wall: usize,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomStructure {
    pub name: String,
    pub room_type: RoomType,
    /// Counter-clockwise outline; wall i runs from vertex i to vertex i+1.
    pub floor: Vec<[f64; 2]>,
    #[serde(default)]
    pub doors: Vec<Opening>,
    #[serde(default)]
    pub windows: Vec<Opening>,
    #[serde(default)]
    pub fixed: Vec<FixedElement>,
}

impl RoomStructure {
    pub fn polygon(&self) -> Polygon {
        Polygon::new(self.floor.iter().map(|p| Vec2::new(p[0], p[1])).collect())
    }

    pub fn walls(&self) -> Vec<WallSeg> {
        self.polygon()
            .edges()
            .into_iter()
            .map(|seg| WallSeg {
                seg,
                normal: seg.direction().perp(),
            })
            .collect()
    }

    /// Convex corners with their two incident walls.
    pub fn corners(&self) -> Vec<CornerGeom> {
        let poly = self.polygon();
        let walls = self.walls();
        let n = walls.len();
        (0..n)
            .filter(|&i| poly.is_convex_vertex(i))
            .map(|i| CornerGeom {
                point: poly.points[i],
                walls: [walls[(i + n - 1) % n], walls[i]],
            })
            .collect()
    }

    fn opening_span(&self, o: &Opening) -> WallSeg {
        let w = self.walls()[o.wall];
        let dir = w.seg.direction();
        let a = w.seg.a + dir * o.offset;
        WallSeg {
            seg: Segment::new(a, a + dir * o.width),
            normal: w.normal,
        }
    }

    pub fn door_spans(&self) -> Vec<WallSeg> {
        self.doors.iter().map(|o| self.opening_span(o)).collect()
    }

    pub fn window_spans(&self) -> Vec<WallSeg> {
        self.windows.iter().map(|o| self.opening_span(o)).collect()
    }

    /// Thin boxes just inside each opening; wall-mounted objects avoid them.
    pub fn opening_boxes(&self) -> Vec<Obb> {
        self.door_spans()
            .into_iter()
            .chain(self.window_spans())
            .map(|s| {
                let mid = (s.seg.a + s.seg.b) * 0.5;
                Obb::new(mid + s.normal * 0.05, s.seg.length(), 0.1, heading_of(s.normal))
            })
            .collect()
    }

    /// Keep-out zones in front of doors so the room stays enterable.
    pub fn door_clearances(&self, depth: f64) -> Vec<Obb> {
        self.door_spans()
            .into_iter()
            .map(|s| {
                let mid = (s.seg.a + s.seg.b) * 0.5;
                Obb::new(mid + s.normal * (depth / 2.0), s.seg.length(), depth, heading_of(s.normal))
            })
            .collect()
    }

    /// Footprint of a fixed element: flush to its wall, facing into the room.
    pub fn fixed_footprint(&self, catalog: &Catalog, f: &FixedElement) -> Option<Obb> {
        let info = catalog.get(&f.object_type)?;
        let w = *self.walls().get(f.wall)?;
        let along = w.seg.a + w.seg.direction() * f.offset;
        Some(Obb::new(
            along + w.normal * (info.depth / 2.0),
            info.width,
            info.depth,
            heading_of(w.normal),
        ))
    }

    fn check(&self, catalog: &Catalog) -> Result<(), String> {
        let poly = self.polygon();
        if self.floor.len() < 3 || !poly.is_simple() || poly.signed_area() <= 0.0 {
            return Err(format!("{}: floor must be a simple counter-clockwise polygon", self.name));
        }
        let walls = self.walls();
        for o in self.doors.iter().chain(&self.windows) {
            let Some(w) = walls.get(o.wall) else {
                return Err(format!("{}: opening on missing wall {}", self.name, o.wall));
            };
            if o.offset < 0.0 || o.width <= 0.0 || o.offset + o.width > w.seg.length() + 1e-9 {
                return Err(format!("{}: opening does not fit on wall {}", self.name, o.wall));
            }
        }
        for f in &self.fixed {
            let info = catalog
                .get(&f.object_type)
                .ok_or_else(|| format!("{}: unknown fixed type {}", self.name, f.object_type))?;
            if info.mount != Mount::Floor {
                return Err(format!("{}: fixed {} must stand on the floor", self.name, f.object_type));
            }
            let fp = self
                .fixed_footprint(catalog, f)
                .ok_or_else(|| format!("{}: fixed {} on missing wall", self.name, f.object_type))?;
            if !poly.contains_obb(&fp) {
                return Err(format!("{}: fixed {} does not fit in the room", self.name, f.object_type));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRooms {
    #[allow(dead_code)]
    version: String,
    room: Vec<RoomStructure>,
}

/// Candidate room structures, grouped by room type in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct RoomCatalog {
    rooms: Vec<RoomStructure>,
}

impl RoomCatalog {
    pub fn new(rooms: Vec<RoomStructure>) -> Self {
        RoomCatalog { rooms }
    }

    pub fn from_toml(text: &str, catalog: &Catalog) -> Result<RoomCatalog, ConfigError> {
        let raw: RawRooms = toml::from_str(text).map_err(|e| ConfigError::Parse("rooms".into(), e.to_string()))?;
        for r in &raw.room {
            r.check(catalog).map_err(ConfigError::Invalid)?;
        }
        Ok(RoomCatalog { rooms: raw.room })
    }

    pub fn candidates(&self, room_type: RoomType) -> Vec<&RoomStructure> {
        self.rooms.iter().filter(|r| r.room_type == room_type).collect()
    }

    pub fn get(&self, name: &str) -> Option<&RoomStructure> {
        self.rooms.iter().find(|r| r.name == name)
    }

    pub fn all(&self) -> &[RoomStructure] {
        &self.rooms
    }
}

/// Uniform draw of a room structure for `room_type`.
pub fn sample_room_structure(
    rooms: &RoomCatalog,
    room_type: RoomType,
    seed: u64,
) -> Result<RoomStructure, GenerationError> {
    let candidates = rooms.candidates(room_type);
    if candidates.is_empty() {
        return Err(GenerationError::EmptyCatalog(room_type));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = (rng.next_u64() % candidates.len() as u64) as usize;
    Ok(candidates[idx].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Config;

    #[test]
    fn every_room_type_has_candidates() {
        let cfg = Config::builtin();
        for rt in RoomType::ALL {
            assert!(cfg.rooms.candidates(rt).len() >= 3, "{rt}");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_uniform() {
        let cfg = Config::builtin();
        let a = sample_room_structure(&cfg.rooms, RoomType::Bedroom, 42).unwrap();
        let b = sample_room_structure(&cfg.rooms, RoomType::Bedroom, 42).unwrap();
        assert_eq!(a, b);
        let n = cfg.rooms.candidates(RoomType::Bedroom).len();
        let mut counts = vec![0usize; n];
        let names: Vec<String> = cfg.rooms.candidates(RoomType::Bedroom).iter().map(|r| r.name.clone()).collect();
        let draws = 4000;
        for seed in 0..draws {
            let r = sample_room_structure(&cfg.rooms, RoomType::Bedroom, seed).unwrap();
            counts[names.iter().position(|x| *x == r.name).unwrap()] += 1;
        }
        let p = 1.0 / n as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn empty_catalog_errors() {
        let rooms = RoomCatalog::new(vec![]);
        assert!(matches!(
            sample_room_structure(&rooms, RoomType::Kitchen, 1),
            Err(GenerationError::EmptyCatalog(RoomType::Kitchen))
        ));
    }

    #[test]
    fn walls_have_inward_normals() {
        let cfg = Config::builtin();
        for room in cfg.rooms.all() {
            let poly = room.polygon();
            for w in room.walls() {
                let mid = (w.seg.a + w.seg.b) * 0.5;
                assert!(poly.contains_point(mid + w.normal * 0.01), "{}", room.name);
            }
        }
    }

    #[test]
    fn l_shaped_rooms_skip_the_reflex_corner() {
        let cfg = Config::builtin();
        let l = cfg.rooms.get("bedroom_l").unwrap();
        assert_eq!(l.corners().len(), 5);
    }
}
