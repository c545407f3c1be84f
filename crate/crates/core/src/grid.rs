//! Bucket grid over the unit square for radius queries.

use crate::geometry::Point;

/// Nodes bucketed into `side × side` square cells, stored CSR-style.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    side: usize,
    cell: f64,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl SpatialGrid {
    /// Build with roughly `per_cell` nodes per cell on average.
    pub fn build(positions: &[Point], per_cell: f64) -> Self {
        let n = positions.len().max(1) as f64;
        let side = ((n / per_cell).sqrt().floor() as usize).clamp(1, 2048);
        Self::with_side(positions, side)
    }

    pub fn with_side(positions: &[Point], side: usize) -> Self {
        let cell = 1.0 / side as f64;
        let mut counts = vec![0u32; side * side + 1];
        let index: Vec<usize> = positions.iter().map(|p| cell_of(*p, side)).collect();
        for &c in &index {
            counts[c + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; positions.len()];
        for (node, &c) in index.iter().enumerate() {
            items[fill[c] as usize] = node as u32;
            fill[c] += 1;
        }
        SpatialGrid { side, cell, starts, items }
    }

    /// Visit every node whose cell intersects the disk's bounding box.
    /// Callers filter by exact distance.
    pub fn for_each_near(&self, center: Point, radius: f64, f: impl FnMut(usize)) {
        let r = radius.min(2.0);
        self.for_each_in_box(center.x - r, center.x + r, center.y - r, center.y + r, f);
    }

    /// Visit every node whose cell intersects `[x0, x1] × [y0, y1]`.
    pub fn for_each_in_box(&self, x0: f64, x1: f64, y0: f64, y1: f64, mut f: impl FnMut(usize)) {
        let idx = |v: f64| ((v / self.cell).floor().max(0.0) as usize).min(self.side - 1);
        for cy in idx(y0)..=idx(y1) {
            let row = cy * self.side;
            let (a, b) = (row + idx(x0), row + idx(x1));
            for &node in &self.items[self.starts[a] as usize..self.starts[b + 1] as usize] {
                f(node as usize);
            }
        }
    }
}

#[inline]
fn cell_of(p: Point, side: usize) -> usize {
    let cx = ((p.x * side as f64) as usize).min(side - 1);
    let cy = ((p.y * side as f64) as usize).min(side - 1);
    cy * side + cx
}
