/// Static 2-D k-d tree over landmark centers.
///
/// Nearest-neighbor ties resolve to the lowest id so that every query has a
/// unique answer independent of the tree layout.
#[derive(Debug, Clone, Default)]
pub struct KdTree2 {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    point: [f64; 2],
    id: usize,
}

impl KdTree2 {
    pub fn build(points: impl IntoIterator<Item = (usize, [f64; 2])>) -> Self {
        let mut nodes: Vec<Node> = points.into_iter().map(|(id, point)| Node { point, id }).collect();
        layout(&mut nodes, 0);
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Returns `(id, squared distance)` of the nearest point.
    pub fn nearest(&self, query: [f64; 2]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        search(&self.nodes, 0, query, &mut best);
        best
    }
}

// Median-split layout: the node of a subslice sits at its midpoint, left and
// right halves hold the smaller and larger coordinates along `axis`.
fn layout(nodes: &mut [Node], axis: usize) {
    if nodes.len() <= 1 {
        return;
    }
    let mid = nodes.len() / 2;
    nodes.select_nth_unstable_by(mid, |a, b| {
        a.point[axis].total_cmp(&b.point[axis]).then(a.id.cmp(&b.id))
    });
    let (left, rest) = nodes.split_at_mut(mid);
    layout(left, 1 - axis);
    layout(&mut rest[1..], 1 - axis);
}

fn search(nodes: &[Node], axis: usize, q: [f64; 2], best: &mut Option<(usize, f64)>) {
    if nodes.is_empty() {
        return;
    }
    let mid = nodes.len() / 2;
    let node = nodes[mid];
    let dx = node.point[0] - q[0];
    let dy = node.point[1] - q[1];
    let d2 = dx * dx + dy * dy;
    let better = match *best {
        None => true,
        Some((id, bd)) => d2 < bd || (d2 == bd && node.id < id),
    };
    if better {
        *best = Some((node.id, d2));
    }

    let delta = q[axis] - node.point[axis];
    let (near, far) = if delta <= 0.0 {
        (&nodes[..mid], &nodes[mid + 1..])
    } else {
        (&nodes[mid + 1..], &nodes[..mid])
    };
    search(near, 1 - axis, q, best);
    // Equality keeps exploring so equidistant lower ids are still found.
    if best.is_none_or(|(_, bd)| delta * delta <= bd) {
        search(far, 1 - axis, q, best);
    }
}
