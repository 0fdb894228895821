//! Traversability-weighted distance to the goal over the full-resolution map.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, TntError};
use crate::travmap::TraversabilityMap;

/// Geodesic cost-to-go from every cell to the goal, in meters weighted by
/// `1 + beta * combined / tau`, with cells above `tau` additionally scaled by
/// `1 + mask_factor`. Gives the short-horizon planner a view past its horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalField {
    rows: usize,
    cols: usize,
    origin: [f64; 2],
    resolution: f64,
    dist: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    pub beta: f64,
    pub mask_factor: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            beta: 3.0,
            mask_factor: 10.0,
        }
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl GoalField {
    pub fn build(tm: &TraversabilityMap, goal: [f64; 2], tau: f64, p: FieldParams) -> Result<Self> {
        if !(p.beta >= 0.0 && p.mask_factor >= 0.0) {
            return Err(TntError::spec("goal field weights must be non-negative"));
        }
        let (rows, cols) = (tm.rows(), tm.cols());
        let (gm, gn) = tm
            .nearest_cell(goal[0], goal[1])
            .ok_or_else(|| TntError::spec(format!("goal ({}, {}) is outside the map", goal[0], goal[1])))?;
        let scale = if tau > 0.0 && tau.is_finite() { tau } else { 1.0 };
        let weight: Vec<f64> = tm
            .combined()
            .iter()
            .map(|&c| {
                let w = 1.0 + p.beta * c.max(0.0) / scale;
                if c > tau {
                    w * (1.0 + p.mask_factor)
                } else {
                    w
                }
            })
            .collect();
        let res = tm.resolution();
        let mut dist = vec![f64::INFINITY; rows * cols];
        let mut heap = BinaryHeap::new();
        let g = gm * cols + gn;
        dist[g] = 0.0;
        heap.push(Entry(0.0, g));
        while let Some(Entry(d, idx)) = heap.pop() {
            if d > dist[idx] {
                continue;
            }
            let (m, n) = (idx / cols, idx % cols);
            for dm in -1isize..=1 {
                for dn in -1isize..=1 {
                    if dm == 0 && dn == 0 {
                        continue;
                    }
                    let (a, b) = (m as isize + dm, n as isize + dn);
                    if a < 0 || b < 0 || a >= rows as isize || b >= cols as isize {
                        continue;
                    }
                    let j = a as usize * cols + b as usize;
                    let step = if dm != 0 && dn != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                    // Symmetric edge weight so the field is a true distance.
                    let nd = d + step * res * 0.5 * (weight[idx] + weight[j]);
                    if nd < dist[j] {
                        dist[j] = nd;
                        heap.push(Entry(nd, j));
                    }
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            origin: tm.origin(),
            resolution: res,
            dist,
        })
    }

    /// Cost-to-go at the nearest cell; `None` off the map.
    pub fn distance_at(&self, x: f64, y: f64) -> Option<f64> {
        let gx = ((x - self.origin[0]) / self.resolution).round();
        let gy = ((y - self.origin[1]) / self.resolution).round();
        if gx >= 0.0 && gy >= 0.0 && (gx as usize) < self.rows && (gy as usize) < self.cols {
            Some(self.dist[gx as usize * self.cols + gy as usize])
        } else {
            None
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }
}
