//! A* over an 8-connected cost grid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, TntError};
use crate::travmap::CostGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<(usize, usize)>,
    pub cost: f64,
    /// World coordinates of the cell centers, meters.
    pub waypoints: Vec<[f64; 2]>,
}

const NEIGHBORS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

/// Cost of moving onto `target` by a step of length `step` (cells):
/// `step * (1 + beta * cost)`. Infinite cells are impassable.
pub fn edge_cost(step: f64, target_cost: f64, beta: f64) -> Option<f64> {
    if target_cost.is_infinite() {
        None
    } else {
        Some(step * (1.0 + beta * target_cost))
    }
}

#[derive(Debug, PartialEq)]
struct Open {
    f: f64,
    h: f64,
    g: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    /// Max-heap order reversed: smallest f, then smallest h, then smallest index.
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then_with(|| o.h.total_cmp(&self.h))
            .then_with(|| o.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Cost-minimal 8-connected path from `start` to `goal` (row, col).
pub fn astar_plan(grid: &CostGrid, start: (usize, usize), goal: (usize, usize), beta: f64) -> Result<GridPath> {
    let (rows, cols) = (grid.rows(), grid.cols());
    for (name, (r, c)) in [("start", start), ("goal", goal)] {
        if r >= rows || c >= cols {
            return Err(TntError::spec(format!("{name} ({r}, {c}) outside the {rows}x{cols} grid")));
        }
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(TntError::spec("traversability weight must be finite and non-negative"));
    }
    let idx = |r: usize, c: usize| r * cols + c;
    let heuristic = |i: usize| {
        let (r, c) = (i / cols, i % cols);
        let dr = r as f64 - goal.0 as f64;
        let dc = c as f64 - goal.1 as f64;
        (dr * dr + dc * dc).sqrt()
    };
    let n = rows * cols;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let s = idx(start.0, start.1);
    let t = idx(goal.0, goal.1);
    g[s] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Open {
        f: heuristic(s),
        h: heuristic(s),
        g: 0.0,
        idx: s,
    });
    while let Some(Open { g: gc, idx: cur, .. }) = heap.pop() {
        if gc > g[cur] {
            continue;
        }
        if cur == t {
            break;
        }
        let (r, c) = (cur / cols, cur % cols);
        for (dr, dc) in NEIGHBORS {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                continue;
            }
            let nb = idx(nr as usize, nc as usize);
            let step = if dr != 0 && dc != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            let Some(e) = edge_cost(step, grid.cost(nr as usize, nc as usize), beta) else {
                continue;
            };
            let cand = gc + e;
            if cand < g[nb] {
                g[nb] = cand;
                parent[nb] = cur;
                let h = heuristic(nb);
                heap.push(Open {
                    f: cand + h,
                    h,
                    g: cand,
                    idx: nb,
                });
            }
        }
    }
    if !g[t].is_finite() {
        return Err(TntError::NoPath { start, goal });
    }
    let mut cells = vec![goal];
    let mut cur = t;
    while cur != s {
        cur = parent[cur];
        cells.push((cur / cols, cur % cols));
    }
    cells.reverse();
    let waypoints = cells.iter().map(|&(r, c)| grid.world(r, c)).collect();
    Ok(GridPath {
        cells,
        cost: g[t],
        waypoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CostGrid {
        let costs = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        CostGrid::new(rows, cols, costs, [0.0, 0.0], 0.1).unwrap()
    }

    #[test]
    fn open_set_prefers_lower_f_then_h_then_index() {
        let mut heap = BinaryHeap::new();
        heap.push(Open { f: 2.0, h: 1.0, g: 1.0, idx: 5 });
        heap.push(Open { f: 2.0, h: 0.5, g: 1.5, idx: 9 });
        heap.push(Open { f: 2.0, h: 0.5, g: 1.5, idx: 7 });
        heap.push(Open { f: 3.0, h: 0.0, g: 3.0, idx: 0 });
        let order: Vec<usize> = std::iter::from_fn(|| heap.pop().map(|o| o.idx)).collect();
        assert_eq!(order, vec![7, 9, 5, 0]);
    }

    #[test]
    fn start_equals_goal() {
        let p = astar_plan(&grid(3, 3, |_, _| 1.0), (1, 1), (1, 1), 1.0).unwrap();
        assert_eq!(p.cells, vec![(1, 1)]);
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn walled_goal_is_unreachable() {
        let g = grid(5, 5, |_, c| if c == 2 { f64::INFINITY } else { 0.0 });
        assert!(matches!(astar_plan(&g, (0, 0), (4, 4), 1.0), Err(TntError::NoPath { .. })));
    }

    #[test]
    fn out_of_grid_endpoints_are_rejected() {
        assert!(astar_plan(&grid(3, 3, |_, _| 0.0), (0, 0), (3, 0), 1.0).unwrap_err().is_spec());
    }
}
