//! Exact nearest-neighbour search in moderate dimension.

const LEAF_SIZE: usize = 16;

enum Node {
    Leaf(Vec<usize>),
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// k-d tree over the rows of a row-major point array.
pub(crate) struct KdTree<'a> {
    points: &'a [f64],
    dim: usize,
    root: Node,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [f64], dim: usize) -> Self {
        let n = points.len().checked_div(dim).unwrap_or(0);
        let idx: Vec<usize> = (0..n).collect();
        let root = Self::build(points, dim, idx);
        KdTree { points, dim, root }
    }

    fn point(points: &[f64], dim: usize, i: usize) -> &[f64] {
        &points[i * dim..(i + 1) * dim]
    }

    fn build(points: &[f64], dim: usize, mut idx: Vec<usize>) -> Node {
        if idx.len() <= LEAF_SIZE || dim == 0 {
            return Node::Leaf(idx);
        }
        // Split on the axis of largest spread.
        let mut axis = 0;
        let mut spread = -1.0;
        for d in 0..dim {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = points[i * dim + d];
                (lo.min(v), hi.max(v))
            });
            if hi - lo > spread {
                spread = hi - lo;
                axis = d;
            }
        }
        if spread <= 0.0 {
            return Node::Leaf(idx);
        }
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| {
            points[a * dim + axis].total_cmp(&points[b * dim + axis]).then(a.cmp(&b))
        });
        let value = points[idx[mid] * dim + axis];
        let right = idx.split_off(mid);
        Node::Split {
            axis,
            value,
            left: Box::new(Self::build(points, dim, idx)),
            right: Box::new(Self::build(points, dim, right)),
        }
    }

    /// Index of the nearest point; ties go to the smallest index.
    pub fn nearest(&self, q: &[f64]) -> Option<usize> {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(&self.root, q, &mut best);
        (best.1 != usize::MAX).then_some(best.1)
    }

    fn search(&self, node: &Node, q: &[f64], best: &mut (f64, usize)) {
        match node {
            Node::Leaf(idx) => {
                for &i in idx {
                    let d = squared_distance(Self::point(self.points, self.dim, i), q);
                    if d < best.0 || (d == best.0 && i < best.1) {
                        *best = (d, i);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[*axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // Equal bounds still descend so that ties resolve by index.
                if !(diff * diff > best.0) {
                    self.search(far, q, best);
                }
            }
        }
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Linear scan with the same tie rule.
pub(crate) fn nearest_linear(points: &[f64], dim: usize, q: &[f64]) -> Option<usize> {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, p) in points.chunks_exact(dim.max(1)).enumerate() {
        let d = if dim == 0 { 0.0 } else { squared_distance(p, q) };
        if d < best.0 {
            best = (d, i);
        }
    }
    (best.1 != usize::MAX).then_some(best.1)
}
