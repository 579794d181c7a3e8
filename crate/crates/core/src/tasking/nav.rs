use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::geometry::Obb;
use crate::relations::InteractionParams;
use crate::world::{in_reach, Action, Heading, NavGrid, Pose, WorldState};

pub const MOVE_COST: u32 = 1;
pub const ROTATION_COST: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NavError {
    #[error("{0} cannot be reached")]
    Unreachable(String),
    #[error("no object {0}")]
    UnknownTarget(String),
}

fn state_index(grid: &NavGrid, p: Pose) -> usize {
    (p.row * grid.cols + p.col) * 4 + p.heading.index()
}

fn state_pose(grid: &NavGrid, s: usize) -> Pose {
    let cell = s / 4;
    Pose::new(cell % grid.cols, cell / grid.cols, Heading::ALL[s % 4])
}

/// Every navigable pose, as a flat mask, from which one of `targets` is in
/// reach.
pub fn goal_poses(grid: &NavGrid, params: InteractionParams, targets: &[Obb]) -> Vec<bool> {
    let mut mask = vec![false; grid.cols * grid.rows * 4];
    for (col, row) in grid.navigable_cells() {
        for h in Heading::ALL {
            let p = Pose::new(col, row, h);
            if targets.iter().any(|t| in_reach(grid, params, p, t)) {
                mask[state_index(grid, p)] = true;
            }
        }
    }
    mask
}

/// Poses from which every footprint in `required` is in reach.
pub fn joint_goal_poses(grid: &NavGrid, params: InteractionParams, required: &[Obb]) -> Vec<bool> {
    let mut mask = vec![false; grid.cols * grid.rows * 4];
    for (col, row) in grid.navigable_cells() {
        for h in Heading::ALL {
            let p = Pose::new(col, row, h);
            if required.iter().all(|t| in_reach(grid, params, p, t)) {
                mask[state_index(grid, p)] = true;
            }
        }
    }
    mask
}

/// Cost of an action sequence.
pub fn path_cost(actions: &[Action]) -> u32 {
    actions
        .iter()
        .map(|a| if *a == Action::MoveAhead { MOVE_COST } else { ROTATION_COST })
        .sum()
}

/// Dijkstra over (cell, heading) from `from` to the nearest pose in `goal`.
/// Returns `None` when no goal pose is reachable.
pub fn shortest_path(grid: &NavGrid, from: Pose, goal: &[bool]) -> Option<Vec<Action>> {
    let n = grid.cols * grid.rows * 4;
    let start = state_index(grid, from);
    if goal[start] {
        return Some(Vec::new());
    }
    let mut dist = vec![u32::MAX; n];
    let mut parent: Vec<Option<(usize, Action)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[start] = 0;
    heap.push(Reverse((0u32, start)));
    while let Some(Reverse((d, s))) = heap.pop() {
        if d > dist[s] {
            continue;
        }
        if goal[s] {
            let mut actions = Vec::new();
            let mut cur = s;
            while let Some((prev, a)) = parent[cur].clone() {
                actions.push(a);
                cur = prev;
            }
            actions.reverse();
            return Some(actions);
        }
        let pose = state_pose(grid, s);
        let moves = [
            (grid.step(pose), Action::MoveAhead, MOVE_COST),
            (Some(Pose { heading: pose.heading.left(), ..pose }), Action::RotateLeft, ROTATION_COST),
            (Some(Pose { heading: pose.heading.right(), ..pose }), Action::RotateRight, ROTATION_COST),
        ];
        for (next, action, cost) in moves {
            let Some(next) = next else { continue };
            let t = state_index(grid, next);
            let nd = d + cost;
            if nd < dist[t] {
                dist[t] = nd;
                parent[t] = Some((s, action));
                heap.push(Reverse((nd, t)));
            }
        }
    }
    None
}

/// Cheapest move/rotate sequence from `from` to a pose with one of
/// `targets` in reach. Empty when already in reach.
pub fn plan_to(grid: &NavGrid, params: InteractionParams, from: Pose, targets: &[Obb]) -> Option<Vec<Action>> {
    if !grid.is_navigable(from.col as i64, from.row as i64) {
        return None;
    }
    shortest_path(grid, from, &goal_poses(grid, params, targets))
}

/// Plan from the agent's pose to `target`, an object id or a type name
/// (any instance will do).
pub fn plan_navigation(world: &WorldState, target: &str) -> Result<Vec<Action>, NavError> {
    let ids = world.instances(target);
    if ids.is_empty() {
        return Err(NavError::UnknownTarget(target.to_string()));
    }
    let footprints: Vec<Obb> = ids
        .iter()
        .filter_map(|id| world.object(id))
        .filter(|o| o.location != crate::world::Location::Held)
        .map(|o| o.footprint)
        .collect();
    plan_to(&world.grid, world.interaction(), world.agent, &footprints)
        .ok_or_else(|| NavError::Unreachable(target.to_string()))
}
