use super::{PlacedObject, RoomStructure, Scene, POSITION_QUANTUM};
use crate::catalog::{Affordance, Layer, Mount, TypeInfo};
use crate::cdf::ObjectEntry;
use crate::geometry::{angle_diff, heading_of, normalize_deg, quantize_deg, Obb, Polygon, Vec2};
use crate::par::Exec;
use crate::relations::{
    combined_field, Anchor, Candidate, CornerGeom, FieldSpec, FieldTerm, RelationKind, Relationship, ScoreField,
    Target, TargetGeometry, WallSeg,
};
use crate::util::round_to;
use crate::Config;

/// Collision class of a footprint.
#[derive(Clone, Debug, PartialEq)]
enum Class {
    /// On or in another object.
    Surface(String),
    Wall,
    FloorBlocking,
    FloorFree,
}

#[derive(Clone, Debug)]
struct Slot {
    obj: PlacedObject,
    fp: Obb,
    class: Class,
}

/// Degrees rounded so axis-aligned headings come out exact.
pub(crate) fn clean_deg(deg: f64) -> f64 {
    normalize_deg(round_to(normalize_deg(deg), 1e-4))
}

fn class_of(info: &TypeInfo, support: Option<&str>) -> Class {
    match support {
        Some(s) => Class::Surface(s.to_string()),
        None if info.mount == Mount::Wall => Class::Wall,
        None if info.blocking => Class::FloorBlocking,
        None => Class::FloorFree,
    }
}

/// Room geometry plus the objects placed so far.
#[derive(Clone, Debug)]
pub struct Layout<'a> {
    cfg: &'a Config,
    pub structure: &'a RoomStructure,
    floor: Polygon,
    walls: Vec<WallSeg>,
    corners: Vec<CornerGeom>,
    doors: Vec<WallSeg>,
    windows: Vec<WallSeg>,
    opening_boxes: Vec<Obb>,
    clearances: Vec<Obb>,
    slots: Vec<Slot>,
}

impl<'a> Layout<'a> {
    pub fn new(cfg: &'a Config, structure: &'a RoomStructure) -> Self {
        Layout {
            cfg,
            structure,
            floor: structure.polygon(),
            walls: structure.walls(),
            corners: structure.corners(),
            doors: structure.door_spans(),
            windows: structure.window_spans(),
            opening_boxes: structure.opening_boxes(),
            clearances: structure.door_clearances(cfg.rules.placement.door_clearance),
            slots: Vec::new(),
        }
    }

    pub fn from_scene(cfg: &'a Config, scene: &'a Scene) -> Self {
        let mut layout = Layout::new(cfg, &scene.structure);
        for o in &scene.objects {
            layout.push(o.clone());
        }
        layout
    }

    fn info(&self, type_name: &str) -> &'a TypeInfo {
        self.cfg.catalog.get(type_name).expect("placed objects have catalog types")
    }

    pub fn push(&mut self, obj: PlacedObject) {
        let class = class_of(self.info(&obj.object_type), obj.support.as_deref());
        self.slots.push(Slot {
            fp: obj.footprint(),
            obj,
            class,
        });
    }

    pub fn objects(&self) -> impl Iterator<Item = &PlacedObject> {
        self.slots.iter().map(|s| &s.obj)
    }

    pub fn into_objects(self) -> Vec<PlacedObject> {
        self.slots.into_iter().map(|s| s.obj).collect()
    }

    pub fn get(&self, id: &str) -> Option<&PlacedObject> {
        self.slots.iter().find(|s| s.obj.id == id).map(|s| &s.obj)
    }

    pub fn floor(&self) -> &Polygon {
        &self.floor
    }

    pub fn target_geometry(&self, target: &Target) -> Option<TargetGeometry> {
        let nonempty = |v: &Vec<WallSeg>| (!v.is_empty()).then(|| v.clone());
        match target {
            Target::Anchor(Anchor::Wall) => Some(TargetGeometry::Walls(self.walls.clone())),
            Target::Anchor(Anchor::WallCorner) => {
                (!self.corners.is_empty()).then(|| TargetGeometry::Corners(self.corners.clone()))
            }
            Target::Anchor(Anchor::Window) => nonempty(&self.windows).map(TargetGeometry::Openings),
            Target::Anchor(Anchor::Door) => nonempty(&self.doors).map(TargetGeometry::Openings),
            Target::Entry(id) => self.get(id).map(|o| TargetGeometry::Object(o.footprint())),
        }
    }

    fn blocked(&self, fp: &Obb, class: &Class, layer: Layer, skip: &str) -> bool {
        let others = self.slots.iter().filter(|s| s.obj.id != skip);
        match class {
            Class::Surface(sup) => {
                let Some(host) = self.slots.iter().find(|s| s.obj.id == *sup) else {
                    return true;
                };
                if !host.fp.contains_obb(fp) {
                    return true;
                }
                others
                    .filter(|s| s.class == *class)
                    .any(|s| s.fp.overlaps(fp))
            }
            Class::Wall => {
                !self.floor.contains_obb(fp)
                    || self.opening_boxes.iter().any(|b| b.overlaps(fp))
                    || others.filter(|s| s.class == Class::Wall).any(|s| s.fp.overlaps(fp))
            }
            Class::FloorBlocking => {
                !self.floor.contains_obb(fp)
                    || self.clearances.iter().any(|c| c.overlaps(fp))
                    || others
                        .filter(|s| {
                            s.class == Class::FloorBlocking
                                || (s.class == Class::FloorFree && s.obj.layer != Layer::Decoration)
                        })
                        .any(|s| s.fp.overlaps(fp))
            }
            Class::FloorFree => {
                !self.floor.contains_obb(fp)
                    || others
                        .filter(|s| {
                            (s.class == Class::FloorBlocking && layer != Layer::Decoration)
                                || (s.class == Class::FloorFree && s.obj.layer == layer)
                        })
                        .any(|s| s.fp.overlaps(fp))
            }
        }
    }

    /// True when `candidate` would collide with the room or placed objects.
    pub fn collides(&self, candidate: &PlacedObject) -> bool {
        let class = class_of(self.info(&candidate.object_type), candidate.support.as_deref());
        self.blocked(&candidate.footprint(), &class, candidate.layer, &candidate.id)
    }

    /// Whether `rel` holds, treating `extra` as already placed.
    pub fn satisfied_with(&self, rel: &Relationship, extra: Option<&PlacedObject>) -> bool {
        let lookup = |id: &str| match extra {
            Some(e) if e.id == id => Some(e),
            _ => self.get(id),
        };
        let Some(subject) = lookup(&rel.subject) else { return false };
        if rel.kind.is_support() {
            return rel.target.entry().is_some() && subject.support.as_deref() == rel.target.entry();
        }
        let target = match &rel.target {
            Target::Entry(id) => match lookup(id) {
                Some(o) => TargetGeometry::Object(o.footprint()),
                None => return false,
            },
            t => match self.target_geometry(t) {
                Some(g) => g,
                None => return false,
            },
        };
        let fp = subject.footprint();
        let s = &self.cfg.rules.satisfaction;
        let tol = 1e-9;
        match rel.kind {
            RelationKind::Against => target.measure(rel.kind, &fp) <= s.against_max + tol,
            RelationKind::Beside => {
                let d = target.measure(rel.kind, &fp);
                d >= s.beside_min - tol && d <= s.beside_max + tol
            }
            RelationKind::AwayFrom => target.measure(rel.kind, &fp) >= s.away_from_min - tol,
            RelationKind::Face => {
                let focus = target.focus_point(fp.center);
                let to = focus - fp.center;
                to.length() < 1e-9 || angle_diff(fp.rotation, heading_of(to)) <= s.face_cone_deg + tol
            }
            RelationKind::On | RelationKind::In => unreachable!(),
        }
    }

    pub fn satisfied(&self, rel: &Relationship) -> bool {
        self.satisfied_with(rel, None)
    }

    /// Placed furniture that can hold small objects, sorted by id.
    pub fn receptacles(&self) -> Vec<&PlacedObject> {
        let mut out: Vec<&PlacedObject> = self
            .slots
            .iter()
            .filter(|s| s.obj.layer == Layer::Furniture && s.obj.support.is_none())
            .filter(|s| self.info(&s.obj.object_type).is_receptacle())
            .map(|s| &s.obj)
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    fn floor_candidates(&self) -> Vec<Candidate> {
        let res = self.cfg.rules.placement.resolution;
        let (lo, hi) = self.floor.bbox();
        let cols = ((hi.x - lo.x) / res).floor() as usize;
        let rows = ((hi.y - lo.y) / res).floor() as usize;
        let mut out = Vec::with_capacity(cols * rows);
        for j in 0..rows {
            for i in 0..cols {
                let p = Vec2::new(lo.x + (i as f64 + 0.5) * res, lo.y + (j as f64 + 0.5) * res);
                if self.floor.contains_point(p) {
                    out.push(Candidate { position: p, rotation: None });
                }
            }
        }
        out
    }

    fn wall_candidates(&self, depth: f64) -> Vec<Candidate> {
        let res = self.cfg.rules.placement.resolution;
        let mut out = Vec::new();
        for w in &self.walls {
            let len = w.seg.length();
            let n = (len / res).floor() as usize;
            let dir = w.seg.direction();
            let rotation = clean_deg(heading_of(w.normal));
            for k in 0..n {
                let t = (k as f64 + 0.5) * res;
                out.push(Candidate {
                    position: w.seg.a + dir * t + w.normal * (depth / 2.0),
                    rotation: Some(rotation),
                });
            }
        }
        out
    }

    fn surface_candidates(&self, host: &PlacedObject) -> Vec<Candidate> {
        let res = self.cfg.rules.placement.surface_resolution;
        let fp = host.footprint();
        let corners = fp.corners();
        let lo = Vec2::new(
            corners.iter().map(|c| c.x).fold(f64::INFINITY, f64::min),
            corners.iter().map(|c| c.y).fold(f64::INFINITY, f64::min),
        );
        let hi = Vec2::new(
            corners.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max),
            corners.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max),
        );
        let cols = ((hi.x - lo.x) / res).floor() as usize;
        let rows = ((hi.y - lo.y) / res).floor() as usize;
        let mut out = Vec::new();
        for j in 0..rows {
            for i in 0..cols {
                let p = Vec2::new(lo.x + (i as f64 + 0.5) * res, lo.y + (j as f64 + 0.5) * res);
                if fp.contains_point(p) {
                    out.push(Candidate {
                        position: p,
                        rotation: Some(host.rotation),
                    });
                }
            }
        }
        out
    }

    /// Score field for placing `entry` under `rels`. Small objects go on
    /// `host` when given.
    pub fn field(&self, entry: &ObjectEntry, rels: &[Relationship], host: Option<&PlacedObject>, exec: Exec) -> ScoreField {
        let info = self.info(&entry.object_type);
        let rules = &self.cfg.rules;
        let mut terms: Vec<FieldTerm> = rels
            .iter()
            .filter_map(|r| {
                self.target_geometry(&r.target).map(|target| FieldTerm {
                    kind: r.kind,
                    weight: rules.weight(r.weight_class),
                    target,
                })
            })
            .collect();
        let (candidates, settle) = match host {
            Some(h) => {
                if !rels.iter().any(|r| r.kind.is_support()) {
                    let host_info = self.info(&h.object_type);
                    let kind = if host_info.has(Affordance::Container) && !host_info.has(Affordance::Surface) {
                        RelationKind::In
                    } else {
                        RelationKind::On
                    };
                    terms.push(FieldTerm {
                        kind,
                        weight: rules.weights.furniture_implicit,
                        target: TargetGeometry::Object(h.footprint()),
                    });
                }
                (self.surface_candidates(h), None)
            }
            None if info.mount == Mount::Wall => (self.wall_candidates(info.depth), None),
            None => {
                let mut c = self.floor_candidates();
                if terms.is_empty() {
                    // nothing to orient by: face the middle of the room
                    let mid = self.floor.centroid();
                    for cand in &mut c {
                        cand.rotation = Some(quantize_deg(heading_of(mid - cand.position), 90.0));
                    }
                }
                (c, Some(rules.placement.resolution))
            }
        };
        let spec = FieldSpec {
            width: info.width,
            depth: info.depth,
            candidates,
            terms,
            profiles: &rules.profiles,
            angle_step: rules.placement.angle_step_deg,
            default_rotation: 0.0,
            settle,
            quantum: POSITION_QUANTUM,
        };
        let class = class_of(info, host.map(|h| h.id.as_str()));
        combined_field(&spec, |fp| !self.blocked(fp, &class, entry.layer, &entry.id), exec)
    }

    /// Deterministic free spot for an object of the given type on `host`:
    /// the feasible surface cell closest to the host's center.
    pub fn surface_spot(&self, object_id: &str, type_name: &str, host: &PlacedObject) -> Option<Obb> {
        let info = self.info(type_name);
        let class = Class::Surface(host.id.clone());
        let mut cands = self.surface_candidates(host);
        let c = host.center();
        cands.sort_by(|a, b| a.position.distance(c).total_cmp(&b.position.distance(c)));
        cands.into_iter().find_map(|cand| {
            let p = Vec2::new(
                round_to(cand.position.x, POSITION_QUANTUM),
                round_to(cand.position.y, POSITION_QUANTUM),
            );
            let fp = Obb::new(p, info.width, info.depth, host.rotation);
            (!self.blocked(&fp, &class, info.layer, object_id)).then_some(fp)
        })
    }
}

/// Whether `candidate` collides with anything already in `scene`.
pub fn check_collision(cfg: &Config, scene: &Scene, candidate: &PlacedObject) -> bool {
    Layout::from_scene(cfg, scene).collides(candidate)
}

/// Whether a relation holds in a finished scene.
pub fn satisfaction(cfg: &Config, scene: &Scene, rel: &Relationship) -> bool {
    Layout::from_scene(cfg, scene).satisfied(rel)
}

/// Every explicit relation of the scene with its satisfaction flag.
pub fn explicit_satisfaction(cfg: &Config, scene: &Scene) -> Vec<(Relationship, bool)> {
    let layout = Layout::from_scene(cfg, scene);
    scene.relations.iter().map(|r| (r.clone(), layout.satisfied(r))).collect()
}
