use super::{BarycentricPoint, TriMesh, Vec3};

const LEAF_SIZE: usize = 4;

/// Result of a point-to-surface query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub face: usize,
    pub weights: [f64; 3],
    pub point: Vec3,
    pub distance: f64,
}

impl ClosestPoint {
    pub fn barycentric(&self) -> BarycentricPoint {
        BarycentricPoint {
            face: self.face,
            weights: self.weights,
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    // Leaf: faces[start..start + count]; inner: children at `start`, `start + 1`.
    start: usize,
    count: usize,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.count > 0
    }

    fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let excess = (self.lo[k] - p[k]).max(0.0).max(p[k] - self.hi[k]);
            d += excess * excess;
        }
        d
    }
}

/// Axis-aligned bounding volume hierarchy over the faces of a mesh, for
/// exact closest-point queries.
#[derive(Debug, Clone)]
pub struct FaceBvh {
    corners: Vec<[Vec3; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl FaceBvh {
    pub fn new(mesh: &TriMesh) -> Self {
        let corners: Vec<[Vec3; 3]> = (0..mesh.face_count()).map(|f| mesh.face_corners(f)).collect();
        let centroids: Vec<Vec3> = corners.iter().map(|c| (c[0] + c[1] + c[2]) / 3.0).collect();
        let mut order: Vec<usize> = (0..corners.len()).collect();
        let mut nodes = Vec::with_capacity(2 * corners.len() / LEAF_SIZE + 1);
        nodes.push(Node {
            lo: Vec3::zeros(),
            hi: Vec3::zeros(),
            start: 0,
            count: 0,
        });
        if !corners.is_empty() {
            build(&corners, &centroids, &mut order, 0, corners.len(), 0, &mut nodes);
        }
        FaceBvh {
            corners,
            order,
            nodes,
        }
    }

    /// Closest point on the surface; ties resolve to the lowest face index.
    pub fn closest_point(&self, p: &Vec3) -> Option<ClosestPoint> {
        if self.corners.is_empty() {
            return None;
        }
        let mut best_d2 = f64::INFINITY;
        let mut best: Option<(usize, [f64; 3], Vec3)> = None;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if node.distance_squared(p) > best_d2 {
                continue;
            }
            if node.is_leaf() {
                for &f in &self.order[node.start..node.start + node.count] {
                    let (q, w) = closest_on_triangle(p, &self.corners[f]);
                    let d2 = (q - p).norm_squared();
                    let better = match best {
                        None => true,
                        Some((bf, _, _)) => d2 < best_d2 || (d2 == best_d2 && f < bf),
                    };
                    if better {
                        best_d2 = d2;
                        best = Some((f, w, q));
                    }
                }
            } else {
                let (l, r) = (node.start, node.start + 1);
                let dl = self.nodes[l].distance_squared(p);
                let dr = self.nodes[r].distance_squared(p);
                // Visit the nearer child first.
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best.map(|(face, weights, point)| ClosestPoint {
            face,
            weights,
            point,
            distance: best_d2.sqrt(),
        })
    }
}

fn build(
    corners: &[[Vec3; 3]],
    centroids: &[Vec3],
    order: &mut [usize],
    start: usize,
    end: usize,
    node: usize,
    nodes: &mut Vec<Node>,
) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    let mut clo = lo;
    let mut chi = hi;
    for &f in &order[start..end] {
        for c in &corners[f] {
            lo = lo.inf(c);
            hi = hi.sup(c);
        }
        clo = clo.inf(&centroids[f]);
        chi = chi.sup(&centroids[f]);
    }
    nodes[node].lo = lo;
    nodes[node].hi = hi;
    let count = end - start;
    let extent = chi - clo;
    if count <= LEAF_SIZE || extent.max() <= 0.0 {
        nodes[node].start = start;
        nodes[node].count = count;
        return;
    }
    let axis = extent.imax();
    let mid = start + count / 2;
    order[start..end].sort_by(|&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(a.cmp(&b))
    });
    let left = nodes.len();
    for _ in 0..2 {
        nodes.push(Node {
            lo: Vec3::zeros(),
            hi: Vec3::zeros(),
            start: 0,
            count: 0,
        });
    }
    nodes[node].start = left;
    nodes[node].count = 0;
    build(corners, centroids, order, start, mid, left, nodes);
    build(corners, centroids, order, mid, end, left + 1, nodes);
}

/// Closest point on triangle `t` to `p`, with barycentric weights.
pub(crate) fn closest_on_triangle(p: &Vec3, t: &[Vec3; 3]) -> (Vec3, [f64; 3]) {
    let [a, b, c] = *t;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(mesh: &TriMesh, p: &Vec3) -> f64 {
        (0..mesh.face_count())
            .map(|f| {
                let (q, _) = closest_on_triangle(p, &mesh.face_corners(f));
                (q - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn matches_brute_force() {
        let mesh = shapes::icosphere(1.0, 3);
        let bvh = FaceBvh::new(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = Vec3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let hit = bvh.closest_point(&p).unwrap();
            assert!((hit.distance - brute_force(&mesh, &p)).abs() < 1e-12);
            let recon = hit.barycentric().position(&mesh);
            assert!((recon - hit.point).norm() < 1e-12);
        }
    }

    #[test]
    fn interior_projection_onto_plane() {
        let mesh = shapes::grid(4, 4, 1.0);
        let bvh = FaceBvh::new(&mesh);
        let hit = bvh.closest_point(&Vec3::new(0.3, 0.6, 0.001)).unwrap();
        assert!((hit.distance - 0.001).abs() < 1e-15);
        assert!((hit.point - Vec3::new(0.3, 0.6, 0.0)).norm() < 1e-15);
    }
}
