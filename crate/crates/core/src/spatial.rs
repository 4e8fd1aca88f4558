use alloc::vec;
use alloc::vec::Vec;

use crate::point::Point;

/// Uniform bucket grid over a point cloud for fixed-radius neighbour queries.
pub(crate) struct BucketGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    pub(crate) fn new(points: &[Point], cell: f64) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        if points.is_empty() {
            lo = Point::default();
            hi = Point::default();
        }
        let cell = if cell > 0.0 { cell } else { 1.0 };
        let nx = (libm::floor((hi.x - lo.x) / cell) as usize) + 1;
        let ny = (libm::floor((hi.y - lo.y) / cell) as usize) + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut grid = Self { origin: lo, cell, nx, ny, buckets: Vec::new() };
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = grid.cell_of(*p);
            buckets[cy * nx + cx].push(i);
        }
        grid.buckets = buckets;
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let fx = libm::floor((p.x - self.origin.x) / self.cell);
        let fy = libm::floor((p.y - self.origin.y) / self.cell);
        let cx = if fx < 0.0 { 0 } else { (fx as usize).min(self.nx - 1) };
        let cy = if fy < 0.0 { 0 } else { (fy as usize).min(self.ny - 1) };
        (cx, cy)
    }

    /// Calls `visit` on every stored index whose bucket may hold points
    /// within `radius` of `p`. Callers filter by exact distance.
    pub(crate) fn for_each_candidate(&self, p: Point, radius: f64, mut visit: impl FnMut(usize)) {
        let reach = libm::ceil(radius / self.cell) as isize;
        let fx = libm::floor((p.x - self.origin.x) / self.cell) as isize;
        let fy = libm::floor((p.y - self.origin.y) / self.cell) as isize;
        let x0 = (fx - reach).max(0);
        let x1 = (fx + reach).min(self.nx as isize - 1);
        let y0 = (fy - reach).max(0);
        let y1 = (fy + reach).min(self.ny as isize - 1);
        if x0 > x1 || y0 > y1 {
            return;
        }
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                for &i in &self.buckets[cy as usize * self.nx + cx as usize] {
                    visit(i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn candidates_cover_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point> =
            (0..400).map(|_| Point::new(rng.gen_range(-1.0..2.0), rng.gen_range(-0.5..0.5))).collect();
        let grid = BucketGrid::new(&pts, 0.17);
        for q in pts.iter().take(50) {
            let r = 0.31;
            let mut found = Vec::new();
            grid.for_each_candidate(*q, r, |i| {
                if pts[i].dist(*q) <= r {
                    found.push(i)
                }
            });
            found.sort();
            let brute: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].dist(*q) <= r).collect();
            assert_eq!(found, brute);
        }
    }
}
