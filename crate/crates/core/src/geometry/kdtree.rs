//! Static 3-d tree over point positions.
//!
//! Queries are exact: the returned neighbor is the Euclidean argmin, with
//! ties resolved toward the lowest stored index.

use super::{SurfaceCloud, UnitVec3, Vec3};

const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug)]
pub struct KdTree {
    coords: Vec<[f64; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// `(d2, index)` lexicographic "closer than".
#[inline]
fn closer(d2: f64, idx: usize, best_d2: f64, best_idx: usize) -> bool {
    d2 < best_d2 || (d2 == best_d2 && idx < best_idx)
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let coords: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        let mut tree = Self {
            order: (0..coords.len()).collect(),
            coords,
            nodes: Vec::new(),
        };
        if !tree.coords.is_empty() {
            tree.build(0, tree.coords.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for a in 0..3 {
                lo[a] = lo[a].min(self.coords[i][a]);
                hi[a] = hi[a].max(self.coords[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        let coords = &self.coords;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coords[a][axis].total_cmp(&coords[b][axis]).then(a.cmp(&b))
        });
        let value = self.coords[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Index and squared distance of the nearest stored point; `None` for an
    /// empty tree or a non-finite query.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.is_empty() || !q.iter().all(|v| v.is_finite()) {
            return None;
        }
        let q = [q.x, q.y, q.z];
        let mut best = (f64::INFINITY, usize::MAX);
        self.nearest_in(0, &q, &mut best);
        Some((best.1, best.0))
    }

    fn nearest_in(&self, node: usize, q: &[f64; 3], best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = dist2(&self.coords[i], q);
                    if closer(d2, i, best.0, best.1) {
                        *best = (d2, i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, q, best);
                // `<=` keeps equidistant points on the far side reachable for the tie-break.
                if diff * diff <= best.0 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// The `k` nearest stored points as `(index, squared distance)`, closest first.
    pub fn knn(&self, q: &Vec3, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let q = [q.x, q.y, q.z];
        let mut found: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.knn_in(0, &q, k, &mut found);
        found.into_iter().map(|(d2, i)| (i, d2)).collect()
    }

    fn knn_in(&self, node: usize, q: &[f64; 3], k: usize, found: &mut Vec<(f64, usize)>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = dist2(&self.coords[i], q);
                    if found.len() == k {
                        let (wd, wi) = found[k - 1];
                        if !closer(d2, i, wd, wi) {
                            continue;
                        }
                        found.pop();
                    }
                    let pos = found
                        .iter()
                        .position(|&(fd, fi)| closer(d2, i, fd, fi))
                        .unwrap_or(found.len());
                    found.insert(pos, (d2, i));
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_in(near, q, k, found);
                if found.len() < k || diff * diff <= found[k - 1].0 {
                    self.knn_in(far, q, k, found);
                }
            }
        }
    }
}

/// Nearest-neighbor result against an indexed [`SurfaceCloud`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub point: Vec3,
    pub normal: UnitVec3,
    pub distance: f64,
}

/// A surface cloud with a KD-tree over its points. Immutable and `Sync`.
#[derive(Clone, Debug)]
pub struct SpatialIndex {
    cloud: SurfaceCloud,
    tree: KdTree,
}

impl SpatialIndex {
    pub fn new(cloud: SurfaceCloud) -> Self {
        let tree = KdTree::new(cloud.points());
        Self { cloud, tree }
    }

    pub fn cloud(&self) -> &SurfaceCloud {
        &self.cloud
    }

    pub fn tree(&self) -> &KdTree {
        &self.tree
    }

    /// Panics if the index was built over an empty cloud.
    pub fn nearest(&self, p: &Vec3) -> Neighbor {
        let (index, d2) = self.tree.nearest(p).expect("nearest() on an empty spatial index");
        Neighbor {
            index,
            point: *self.cloud.point(index),
            normal: *self.cloud.normal(index),
            distance: d2.sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scan(points: &[Vec3], q: &Vec3) -> (usize, f64) {
        let q = [q.x, q.y, q.z];
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d2 = dist2(&[p.x, p.y, p.z], &q);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect()
    }

    #[test]
    fn exact_hit() {
        let pts = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 2.0, 3.0)];
        let t = KdTree::new(&pts);
        assert_eq!(t.nearest(&Vec3::new(1.0, 2.0, 3.0)), Some((1, 0.0)));
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = random_points(&mut rng, 1000);
        let t = KdTree::new(&pts);
        for _ in 0..100 {
            let q = Vec3::new(rng.random(), rng.random(), rng.random());
            assert_eq!(t.nearest(&q), Some(scan(&pts, &q)));
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        // Many duplicates spread across leaves plus symmetric pairs.
        let mut pts = vec![Vec3::new(1.0, 0.0, 0.0); 40];
        pts.push(Vec3::new(-1.0, 0.0, 0.0));
        pts.insert(0, Vec3::new(5.0, 5.0, 5.0));
        let t = KdTree::new(&pts);
        assert_eq!(t.nearest(&Vec3::zeros()).unwrap().0, 1);
        let pts = vec![Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 0.0)];
        let t = KdTree::new(&pts);
        assert_eq!(t.nearest(&Vec3::new(1.0, 0.0, 0.0)).unwrap().0, 0);
    }

    #[test]
    fn knn_matches_sorted_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = random_points(&mut rng, 500);
        let t = KdTree::new(&pts);
        for _ in 0..50 {
            let q = Vec3::new(rng.random(), rng.random(), rng.random());
            let mut all: Vec<(usize, f64)> = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, dist2(&[p.x, p.y, p.z], &[q.x, q.y, q.z])))
                .collect();
            all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            all.truncate(10);
            assert_eq!(t.knn(&q, 10), all);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn nearest_equals_scan(
            seed in any::<u64>(),
            n in 1usize..2000,
            // coarse grid produces plenty of exact ties
            grid in prop::bool::ANY,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec3> = if grid {
                (0..n).map(|_| Vec3::new(
                    rng.random_range(0..5) as f64,
                    rng.random_range(0..5) as f64,
                    rng.random_range(0..5) as f64)).collect()
            } else {
                random_points(&mut rng, n)
            };
            let t = KdTree::new(&pts);
            for _ in 0..20 {
                let q = if grid {
                    Vec3::new(rng.random_range(0..10) as f64 * 0.5, rng.random_range(0..10) as f64 * 0.5, 2.5)
                } else {
                    Vec3::new(rng.random(), rng.random(), rng.random())
                };
                prop_assert_eq!(t.nearest(&q), Some(scan(&pts, &q)));
            }
        }
    }
}
