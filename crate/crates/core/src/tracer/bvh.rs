//! Binned-SAH bounding volume hierarchy over triangles.

use glam::DVec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: DVec3,
    pub hi: DVec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        lo: DVec3::splat(f64::INFINITY),
        hi: DVec3::splat(f64::NEG_INFINITY),
    };

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            lo: self.lo.min(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    pub fn grow(self, p: DVec3) -> Aabb {
        Aabb {
            lo: self.lo.min(p),
            hi: self.hi.max(p),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo.x > self.hi.x
    }

    pub fn centroid(&self) -> DVec3 {
        (self.lo + self.hi) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (self.hi - self.lo).length()
        }
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.hi - self.lo;
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    /// Slab test; returns the entry distance if the box overlaps `[tmin, tmax]`.
    #[inline]
    fn hit(&self, origin: DVec3, inv_dir: DVec3, tmin: f64, tmax: f64) -> Option<f64> {
        let t0 = (self.lo - origin) * inv_dir;
        let t1 = (self.hi - origin) * inv_dir;
        let near = t0.min(t1);
        let far = t0.max(t1);
        // NaN (0 * inf) compares false and is skipped by max/min below
        let enter = near.x.max(near.y).max(near.z).max(tmin);
        let exit = far.x.min(far.y).min(far.z).min(tmax);
        (enter <= exit).then_some(enter)
    }
}

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Leaf { start: u32, count: u32 },
    Inner { left: u32, right: u32 },
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    kind: NodeKind,
}

/// Hierarchy over primitive bounding boxes; stores a permutation of the
/// primitive indices.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

const BINS: usize = 12;
const MAX_LEAF: usize = 4;

impl Bvh {
    pub fn build(boxes: &[Aabb]) -> Bvh {
        let mut order: Vec<u32> = (0..boxes.len() as u32).collect();
        let mut nodes = Vec::with_capacity(boxes.len().max(1) * 2);
        if boxes.is_empty() {
            nodes.push(Node {
                bounds: Aabb::EMPTY,
                kind: NodeKind::Leaf { start: 0, count: 0 },
            });
        } else {
            build_node(boxes, &mut order, 0, boxes.len(), &mut nodes);
        }
        Bvh { nodes, order }
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Visits leaves front-to-back-ish. `visit(prim, tmax)` returns the new
    /// upper bound (shrunk on a hit) or `None` to stop the traversal.
    pub fn traverse(
        &self,
        origin: DVec3,
        dir: DVec3,
        tmin: f64,
        mut tmax: f64,
        mut visit: impl FnMut(u32, f64) -> Option<f64>,
    ) {
        let inv = DVec3::ONE / dir;
        if self.nodes[0].bounds.hit(origin, inv, tmin, tmax).is_none() {
            return;
        }
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(top) = stack.pop() {
            let node = &self.nodes[top as usize];
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &prim in &self.order[start as usize..(start + count) as usize] {
                        match visit(prim, tmax) {
                            Some(t) => tmax = t,
                            None => return,
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let hl = self.nodes[left as usize].bounds.hit(origin, inv, tmin, tmax);
                    let hr = self.nodes[right as usize].bounds.hit(origin, inv, tmin, tmax);
                    match (hl, hr) {
                        (Some(a), Some(b)) => {
                            let (near, far) = if a <= b { (left, right) } else { (right, left) };
                            stack.push(far);
                            stack.push(near);
                        }
                        (Some(_), None) => stack.push(left),
                        (None, Some(_)) => stack.push(right),
                        (None, None) => {}
                    }
                }
            }
        }
    }
}

fn build_node(boxes: &[Aabb], order: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
    let slice = &mut order[start..end];
    let bounds = slice
        .iter()
        .fold(Aabb::EMPTY, |b, &i| b.union(boxes[i as usize]));
    let index = nodes.len() as u32;
    nodes.push(Node {
        bounds,
        kind: NodeKind::Leaf {
            start: start as u32,
            count: (end - start) as u32,
        },
    });
    let count = end - start;
    if count <= MAX_LEAF {
        return index;
    }
    let cbounds = slice
        .iter()
        .fold(Aabb::EMPTY, |b, &i| b.grow(boxes[i as usize].centroid()));
    let extent = cbounds.hi - cbounds.lo;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let mid = if extent[axis] <= 0.0 {
        // all centroids coincide: split the list in half
        start + count / 2
    } else {
        match sah_split(boxes, slice, axis, cbounds.lo[axis], extent[axis], bounds.surface_area()) {
            Some(bin) => {
                let lo = cbounds.lo[axis];
                let scale = BINS as f64 / extent[axis];
                let split = partition(slice, |i| {
                    bin_of(boxes[i as usize].centroid()[axis], lo, scale) <= bin
                });
                start + split
            }
            None if count > 4 * MAX_LEAF => {
                slice.sort_by(|&a, &b| {
                    boxes[a as usize].centroid()[axis].total_cmp(&boxes[b as usize].centroid()[axis])
                });
                start + count / 2
            }
            None => return index,
        }
    };
    let mid = if mid == start || mid == end { start + count / 2 } else { mid };
    let left = build_node(boxes, order, start, mid, nodes);
    let right = build_node(boxes, order, mid, end, nodes);
    nodes[index as usize].kind = NodeKind::Inner { left, right };
    index
}

#[inline]
fn bin_of(c: f64, lo: f64, scale: f64) -> usize {
    (((c - lo) * scale) as usize).min(BINS - 1)
}

/// Best bin boundary along `axis`, or `None` if no split beats a leaf.
fn sah_split(boxes: &[Aabb], prims: &[u32], axis: usize, lo: f64, extent: f64, parent_area: f64) -> Option<usize> {
    let scale = BINS as f64 / extent;
    let mut bin_bounds = [Aabb::EMPTY; BINS];
    let mut bin_counts = [0usize; BINS];
    for &i in prims {
        let b = boxes[i as usize];
        let k = bin_of(b.centroid()[axis], lo, scale);
        bin_bounds[k] = bin_bounds[k].union(b);
        bin_counts[k] += 1;
    }
    let mut right_area = [0.0; BINS];
    let mut right_count = [0usize; BINS];
    let mut acc = Aabb::EMPTY;
    let mut n = 0;
    for k in (1..BINS).rev() {
        acc = acc.union(bin_bounds[k]);
        n += bin_counts[k];
        right_area[k] = acc.surface_area();
        right_count[k] = n;
    }
    let mut best: Option<(f64, usize)> = None;
    let mut acc = Aabb::EMPTY;
    let mut n = 0;
    for k in 0..BINS - 1 {
        acc = acc.union(bin_bounds[k]);
        n += bin_counts[k];
        if n == 0 || right_count[k + 1] == 0 {
            continue;
        }
        let cost = acc.surface_area() * n as f64 + right_area[k + 1] * right_count[k + 1] as f64;
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, k));
        }
    }
    let leaf_cost = parent_area * prims.len() as f64;
    // traversal step costs about one intersection
    best.filter(|&(c, _)| c + parent_area < leaf_cost).map(|(_, k)| k)
}

fn partition(slice: &mut [u32], pred: impl Fn(u32) -> bool) -> usize {
    let mut i = 0;
    for j in 0..slice.len() {
        if pred(slice[j]) {
            slice.swap(i, j);
            i += 1;
        }
    }
    i
}
