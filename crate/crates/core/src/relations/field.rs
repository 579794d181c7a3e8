use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{Profiles, RelationError, RelationKind, TargetGeometry};
use crate::geometry::{quantize_deg, Obb, Vec2};
use crate::par::Exec;
use crate::util::round_to;

/// A candidate position; `rotation` pins the orientation (wall slots,
/// supporter surfaces), otherwise the dominant relation decides it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub position: Vec2,
    pub rotation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldTerm {
    pub kind: RelationKind,
    pub weight: f64,
    pub target: TargetGeometry,
}

pub struct FieldSpec<'a> {
    pub width: f64,
    pub depth: f64,
    pub candidates: Vec<Candidate>,
    pub terms: Vec<FieldTerm>,
    pub profiles: &'a Profiles,
    pub angle_step: f64,
    pub default_rotation: f64,
    /// Slide against-wall candidates flush when the gap is below this.
    pub settle: Option<f64>,
    /// Position rounding applied before feasibility and scoring.
    pub quantum: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldCell {
    pub footprint: Obb,
    /// `f64::INFINITY` for infeasible cells.
    pub score: f64,
}

impl FieldCell {
    pub fn is_feasible(&self) -> bool {
        self.score.is_finite()
    }
}

/// Per-candidate combined score `s = sum_k w_k * s_k`, with
/// `P(cell) ∝ exp(-s)` over feasible cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreField {
    pub cells: Vec<FieldCell>,
}

impl ScoreField {
    pub fn feasible_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_feasible()).count()
    }

    fn min_score(&self) -> f64 {
        self.cells.iter().map(|c| c.score).fold(f64::INFINITY, f64::min)
    }

    /// Unnormalized weights `exp(-(s - s_min))`, zero when infeasible.
    fn weights(&self) -> Vec<f64> {
        let m = self.min_score();
        self.cells
            .iter()
            .map(|c| if c.is_feasible() { (-(c.score - m)).exp() } else { 0.0 })
            .collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        if total == 0.0 {
            return w;
        }
        w.into_iter().map(|x| x / total).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, RelationError> {
        let w = self.weights();
        let dist = WeightedIndex::new(&w).map_err(|_| RelationError::NoFeasibleCell)?;
        Ok(dist.sample(rng))
    }

    /// Feasible cells from most to least likely; ties keep candidate order.
    /// Scores equal to 1e-9 of the largest score count as tied, so rounding
    /// noise from rescaled weights cannot reorder them.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.cells.len()).filter(|&i| self.cells[i].is_feasible()).collect();
        let scale = idx.iter().map(|&i| self.cells[i].score.abs()).fold(0.0, f64::max);
        let key = |i: usize| if scale > 0.0 { (self.cells[i].score / scale * 1e9).round() as i64 } else { 0 };
        idx.sort_by_key(|&i| (key(i), i));
        idx
    }
}

/// Build the combined score field. `feasible` rejects colliding footprints.
pub fn combined_field<F>(spec: &FieldSpec<'_>, feasible: F, exec: Exec) -> ScoreField
where
    F: Fn(&Obb) -> bool + Sync,
{
    // dominant relation: highest weight, first declared on ties
    let dominant = spec
        .terms
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, t)| match best {
            Some((_, w)) if w >= t.weight => best,
            _ => Some((i, t.weight)),
        })
        .map(|(i, _)| &spec.terms[i]);

    let cells = exec.map(&spec.candidates, |cand| {
        let rotation = match (cand.rotation, dominant) {
            (Some(r), _) => r,
            (None, Some(t)) => quantize_deg(t.target.rotation(t.kind, cand.position), spec.angle_step),
            (None, None) => spec.default_rotation,
        };
        let raw = Obb::new(cand.position, spec.width, spec.depth, rotation);
        let mut options = Vec::with_capacity(2);
        if let (Some(limit), Some(t)) = (spec.settle, dominant) {
            if t.kind == RelationKind::Against {
                let mut moved = raw;
                for (w, gap) in t.target.contact_walls(&raw) {
                    if gap > 0.0 && gap < limit {
                        moved = moved.translated(-w.normal * gap);
                    }
                }
                if moved != raw {
                    options.push(moved);
                }
            }
        }
        options.push(raw);
        for fp in options {
            let fp = Obb {
                center: Vec2::new(round_to(fp.center.x, spec.quantum), round_to(fp.center.y, spec.quantum)),
                ..fp
            };
            if feasible(&fp) {
                let score = spec
                    .terms
                    .iter()
                    .map(|t| t.weight * spec.profiles.score(t.kind, t.target.measure(t.kind, &fp)))
                    .sum();
                return FieldCell { footprint: fp, score };
            }
        }
        FieldCell {
            footprint: raw,
            score: f64::INFINITY,
        }
    });
    ScoreField { cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Segment;
    use crate::relations::WallSeg;
    use crate::Config;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, res: f64) -> Vec<Candidate> {
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                out.push(Candidate {
                    position: Vec2::new((i as f64 + 0.5) * res, (j as f64 + 0.5) * res),
                    rotation: None,
                });
            }
        }
        out
    }

    #[test]
    fn probabilities_are_normalized() {
        let profiles = &Config::builtin().rules.profiles;
        let wall = WallSeg {
            seg: Segment::new(Vec2::ZERO, Vec2::new(0.0, 5.0)),
            normal: Vec2::new(1.0, 0.0),
        };
        let spec = FieldSpec {
            width: 0.5,
            depth: 0.5,
            candidates: grid(20, 0.25),
            terms: vec![FieldTerm {
                kind: RelationKind::Against,
                weight: 2.0,
                target: TargetGeometry::Walls(vec![wall]),
            }],
            profiles,
            angle_step: 15.0,
            default_rotation: 0.0,
            settle: None,
            quantum: 1e-4,
        };
        let field = combined_field(&spec, |fp| fp.center.x > 0.25, Exec::Sequential);
        let p = field.probabilities();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(field.cells.iter().zip(&p).all(|(c, &pi)| c.is_feasible() || pi == 0.0));
    }

    #[test]
    fn empty_field_cannot_be_sampled() {
        let field = ScoreField {
            cells: vec![FieldCell {
                footprint: Obb::square(Vec2::ZERO, 1.0),
                score: f64::INFINITY,
            }],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(field.sample(&mut rng), Err(RelationError::NoFeasibleCell));
    }

    #[test]
    fn settle_pulls_flush_to_wall() {
        let profiles = &Config::builtin().rules.profiles;
        let wall = WallSeg {
            seg: Segment::new(Vec2::ZERO, Vec2::new(0.0, 5.0)),
            normal: Vec2::new(1.0, 0.0),
        };
        let spec = FieldSpec {
            width: 0.5,
            depth: 0.6,
            candidates: vec![Candidate { position: Vec2::new(0.375, 2.0), rotation: None }],
            terms: vec![FieldTerm {
                kind: RelationKind::Against,
                weight: 2.0,
                target: TargetGeometry::Walls(vec![wall]),
            }],
            profiles,
            angle_step: 15.0,
            default_rotation: 0.0,
            settle: Some(0.25),
            quantum: 1e-4,
        };
        let field = combined_field(&spec, |_| true, Exec::Sequential);
        assert!((field.cells[0].footprint.center.x - 0.3).abs() < 1e-9);
        assert_eq!(field.cells[0].score, 0.0);
    }
}
