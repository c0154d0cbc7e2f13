//! Nearest-neighbour distances through a uniform spatial hash.

use crate::geometry::density::Aabb;
use crate::geometry::Point;

/// Below this size the O(N²) scan is used directly.
const BRUTE_FORCE_BELOW: usize = 64;
/// Cells per axis are capped by taking at least `diameter / 256` as cell size.
const MAX_CELLS_PER_AXIS: f64 = 256.0;

/// Uniform grid over the bounding box of a point set, stored as CSR buckets.
#[derive(Debug, Clone)]
pub struct SpatialHash {
    origin: Point,
    cell: f64,
    dims: [usize; 3],
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl SpatialHash {
    pub fn new(points: &[Point], cell: f64) -> Self {
        let bbox = Aabb::bounding(points).unwrap_or(Aabb::new(Point::zeros(), Point::zeros()));
        assert!(cell > 0.0 && cell.is_finite());
        let ext = bbox.extent();
        let dims = [0, 1, 2].map(|k| ((ext[k] / cell).floor() as usize + 1).max(1));
        let ncell = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0u32; ncell + 1];
        let mut home = Vec::with_capacity(points.len());
        let mut hash = Self {
            origin: bbox.lo,
            cell,
            dims,
            offsets: Vec::new(),
            items: Vec::new(),
        };
        for p in points {
            let c = hash.flat(hash.cell_of(p));
            counts[c + 1] += 1;
            home.push(c);
        }
        for i in 0..ncell {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, &c) in home.iter().enumerate() {
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        hash.offsets = counts;
        hash.items = items;
        hash
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell_of(&self, p: &Point) -> [usize; 3] {
        [0, 1, 2].map(|k| {
            let t = ((p[k] - self.origin[k]) / self.cell).floor();
            (t.max(0.0) as usize).min(self.dims[k] - 1)
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    /// Point indices stored in cell `c`.
    pub fn bucket(&self, c: [usize; 3]) -> &[u32] {
        let f = self.flat(c);
        &self.items[self.offsets[f] as usize..self.offsets[f + 1] as usize]
    }

    /// Calls `visit` for every cell at Chebyshev index distance exactly `ring`
    /// from `home`. Returns false once the ring lies entirely outside the grid.
    pub fn for_ring(&self, home: [usize; 3], ring: usize, mut visit: impl FnMut([usize; 3])) -> bool {
        let r = ring as isize;
        let mut any = false;
        let lo = |k: usize| (home[k] as isize - r).max(0);
        let hi = |k: usize| (home[k] as isize + r).min(self.dims[k] as isize - 1);
        for z in lo(2)..=hi(2) {
            for y in lo(1)..=hi(1) {
                for x in lo(0)..=hi(0) {
                    let d = (x - home[0] as isize)
                        .abs()
                        .max((y - home[1] as isize).abs())
                        .max((z - home[2] as isize).abs());
                    if d == r {
                        any = true;
                        visit([x as usize, y as usize, z as usize]);
                    }
                }
            }
        }
        any
    }

    /// Indices of points within Chebyshev cell distance `reach` of `p`'s cell.
    pub fn for_neighborhood(&self, p: &Point, reach: usize, mut visit: impl FnMut(usize)) {
        let home = self.cell_of(p);
        for ring in 0..=reach {
            self.for_ring(home, ring, |c| {
                for &j in self.bucket(c) {
                    visit(j as usize);
                }
            });
        }
    }
}

/// `d_i = min_{j≠i} |x_i − x_j|`; `+∞` when `N = 1`.
pub fn nearest_neighbor_distances(points: &[Point]) -> Vec<f64> {
    let n = points.len();
    if n < BRUTE_FORCE_BELOW {
        return brute_force_nearest_neighbor_distances(points);
    }
    let bbox = Aabb::bounding(points).expect("nonempty");
    let ext = bbox.extent();
    let diameter = bbox.diameter();
    // Poisson mean NN distance 0.554 (V/N)^{1/3}, with degenerate extents padded
    let vol = ext.iter().map(|e| e.max(diameter / MAX_CELLS_PER_AXIS)).product::<f64>();
    let expected = 0.554 * (vol / n as f64).cbrt();
    let cell = expected.max(diameter / MAX_CELLS_PER_AXIS).max(f64::MIN_POSITIVE);
    let hash = SpatialHash::new(points, cell);
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let home = hash.cell_of(p);
            let mut best = f64::INFINITY;
            let mut ring = 0;
            loop {
                let inside = hash.for_ring(home, ring, |c| {
                    for &j in hash.bucket(c) {
                        let j = j as usize;
                        if j != i {
                            let d = (p - points[j]).norm();
                            if d < best {
                                best = d;
                            }
                        }
                    }
                });
                // unvisited points are at least `ring * cell` away
                if !inside || best <= ring as f64 * cell {
                    break;
                }
                ring += 1;
            }
            best
        })
        .collect()
}

/// Reference O(N²) scan.
pub fn brute_force_nearest_neighbor_distances(points: &[Point]) -> Vec<f64> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}
