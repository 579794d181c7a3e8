//! Top-view SVG and DOT scene-graph export. Both are byte-stable: numbers
//! are printed at fixed precision and everything is emitted in a fixed order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::catalog::{Affordance, Layer};
use crate::cssg::{explicit_satisfaction, Layout, Scene};
use crate::geometry::Vec2;
use crate::relations::{RelationKind, Target};
use crate::Config;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    /// Pixels per meter.
    pub scale: f64,
    pub labels: bool,
    /// Draw satisfied explicit relations as arrows.
    pub relations: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            scale: 100.0,
            labels: true,
            relations: true,
        }
    }
}

const MARGIN: f64 = 0.5;
const BLUE: &str = "#1f6fd1";
const YELLOW: &str = "#e6b800";

fn layer_color(layer: Layer) -> &'static str {
    match layer {
        Layer::Furniture => "#9e9e9e",
        Layer::SmallObject => "#f39c12",
        Layer::Decoration => "#27ae60",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    lo: Vec2,
    hi: Vec2,
    scale: f64,
}

impl Frame {
    /// Screen coordinates with north up.
    fn px(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.lo.x + MARGIN) * self.scale, (self.hi.y - p.y + MARGIN) * self.scale)
    }

    fn pt(&self, p: Vec2) -> String {
        let (x, y) = self.px(p);
        format!("{x:.2},{y:.2}")
    }

    /// `x1`/`y1`/`x2`/`y2` attributes of a line from `a` to `b`.
    fn line(&self, a: Vec2, b: Vec2) -> String {
        let (x1, y1) = self.px(a);
        let (x2, y2) = self.px(b);
        format!(r#"x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}""#)
    }

    fn points(&self, ps: &[Vec2]) -> String {
        ps.iter().map(|p| self.pt(*p)).collect::<Vec<_>>().join(" ")
    }
}

fn arrow_color(kind: RelationKind) -> &'static str {
    if kind.is_support() {
        YELLOW
    } else {
        BLUE
    }
}

/// Floor, walls, openings and object footprints seen from above.
pub fn render_topview(cfg: &Config, scene: &Scene, options: &RenderOptions) -> String {
    let floor = scene.structure.polygon();
    let (lo, hi) = floor.bbox();
    let f = Frame { lo, hi, scale: options.scale };
    let width = (hi.x - lo.x + 2.0 * MARGIN) * options.scale;
    let height = (hi.y - lo.y + 2.0 * MARGIN) * options.scale;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(&scene.structure.name));
    out.push_str("<defs>\n");
    for (name, color) in [("blue", BLUE), ("yellow", YELLOW)] {
        let _ = writeln!(
            out,
            r#"<marker id="arrow-{name}" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="{color}"/></marker>"#
        );
    }
    out.push_str("</defs>\n");
    let _ = writeln!(
        out,
        r##"<polygon class="floor" points="{}" fill="#f4f1ea" stroke="none"/>"##,
        f.points(&floor.points)
    );
    out.push_str("<g class=\"walls\" stroke=\"#333333\" stroke-width=\"4\" stroke-linecap=\"round\">\n");
    for w in scene.structure.walls() {
        let _ = writeln!(out, "<line {}/>", f.line(w.seg.a, w.seg.b));
    }
    out.push_str("</g>\n");
    let openings = [("door", "#8d5524", scene.structure.door_spans()), ("window", "#7fb8e6", scene.structure.window_spans())];
    for (class, color, spans) in openings {
        for s in spans {
            let _ = writeln!(
                out,
                r#"<line class="{class}" {} stroke="{color}" stroke-width="6"/>"#,
                f.line(s.seg.a, s.seg.b)
            );
        }
    }
    let mut objects: Vec<_> = scene.objects.iter().enumerate().collect();
    // floor decorations such as carpets go underneath everything
    objects.sort_by_key(|(_, o)| {
        let flat = cfg.catalog.get(&o.object_type).is_some_and(|t| !t.blocking);
        if flat {
            0
        } else {
            1 + o.layer.rank()
        }
    });
    out.push_str("<g class=\"objects\">\n");
    for (_, o) in &objects {
        let fp = o.footprint();
        let _ = writeln!(
            out,
            r##"<polygon id="{}" class="{}" points="{}" fill="{}" fill-opacity="0.85" stroke="#222222" stroke-width="1"/>"##,
            escape(&o.id),
            o.layer.as_str(),
            f.points(&fp.corners()),
            layer_color(o.layer)
        );
        // front edge marker
        let tip = fp.center + fp.front() * (fp.depth / 2.0);
        let _ = writeln!(
            out,
            r##"<line {} stroke="#222222" stroke-width="1" stroke-dasharray="2,2"/>"##,
            f.line(fp.center, tip)
        );
    }
    out.push_str("</g>\n");
    if options.relations {
        let layout = Layout::from_scene(cfg, scene);
        out.push_str("<g class=\"relations\" stroke-width=\"2\" fill=\"none\">\n");
        for (rel, ok) in explicit_satisfaction(cfg, scene) {
            let (Some(subject), true) = (scene.object(&rel.subject), ok) else { continue };
            let Some(geom) = layout.target_geometry(&rel.target) else { continue };
            let from = subject.center();
            let to = match &rel.target {
                Target::Entry(id) => scene.object(id).map_or(from, |t| t.center()),
                Target::Anchor(_) => geom.focus_point(from),
            };
            if from.distance(to) < 1e-6 {
                continue;
            }
            let color = arrow_color(rel.kind);
            let name = if rel.kind.is_support() { "yellow" } else { "blue" };
            let _ = writeln!(
                out,
                r#"<line class="{}" {} stroke="{color}" marker-end="url(#arrow-{name})"/>"#,
                rel.kind.as_str(),
                f.line(from, to)
            );
        }
        out.push_str("</g>\n");
    }
    if options.labels {
        let size = (options.scale * 0.1).max(6.0);
        out.push_str(&format!(
            "<g class=\"labels\" font-family=\"sans-serif\" font-size=\"{size:.1}\" text-anchor=\"middle\" fill=\"#111111\">\n"
        ));
        for (_, o) in &objects {
            let (x, y) = f.px(o.center());
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{y:.2}">{}</text>"#, escape(&o.id));
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Directed scene graph in DOT: objects and the room's anchors as nodes,
/// satisfied explicit relations and support links as labeled edges.
pub fn export_scene_graph(cfg: &Config, scene: &Scene) -> String {
    let mut out = String::from("digraph scene {\n  rankdir=LR;\n");
    let mut anchors = vec!["wall", "wall_corner"];
    if !scene.structure.doors.is_empty() {
        anchors.push("door");
    }
    if !scene.structure.windows.is_empty() {
        anchors.push("window");
    }
    for a in &anchors {
        let _ = writeln!(out, "  {} [shape=box, style=dashed];", dot_id(a));
    }
    let mut objects: Vec<_> = scene.objects.iter().collect();
    objects.sort_by(|a, b| a.id.cmp(&b.id));
    for o in &objects {
        let _ = writeln!(
            out,
            "  {} [label={}, layer={}];",
            dot_id(&o.id),
            dot_id(&format!("{}\\n{}", o.id, o.object_type)),
            o.layer.as_str()
        );
    }
    let mut edges: BTreeSet<(String, String, &'static str)> = BTreeSet::new();
    for (rel, ok) in explicit_satisfaction(cfg, scene) {
        if ok {
            edges.insert((rel.subject.clone(), rel.target.as_str().to_string(), rel.kind.as_str()));
        }
    }
    for o in &objects {
        if let Some(s) = &o.support {
            let container = scene
                .object(s)
                .and_then(|h| cfg.catalog.get(&h.object_type))
                .is_some_and(|t| t.has(Affordance::Container));
            let label = if container { "in" } else { "on" };
            let already = edges
                .iter()
                .any(|(a, b, k)| a == &o.id && b == s && (*k == "on" || *k == "in"));
            if !already {
                edges.insert((o.id.clone(), s.clone(), label));
            }
        }
    }
    for (a, b, k) in &edges {
        let _ = writeln!(out, "  {} -> {} [label={}];", dot_id(a), dot_id(b), dot_id(k));
    }
    out.push_str("}\n");
    out
}

/// Edges of an exported graph as (subject, target, label).
pub fn graph_edges(dot: &str) -> Vec<(String, String, String)> {
    dot.lines()
        .filter_map(|l| {
            let l = l.trim();
            let (lhs, rest) = l.split_once(" -> ")?;
            let (rhs, attrs) = rest.split_once(" [label=")?;
            let label = attrs.trim_end_matches("];");
            let unq = |s: &str| s.trim_matches('"').to_string();
            Some((unq(lhs), unq(rhs), unq(label)))
        })
        .collect()
}
