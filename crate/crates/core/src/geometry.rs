//! Small fixed-size vector helpers and point/triangle queries.

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

#[inline]
pub fn sub<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale<T: Real>(a: &Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm<T: Real>(a: &Vec3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn midpoint<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    scale(&add(a, b), T::lit(0.5))
}

/// Unnormalized normal (length is twice the triangle area).
#[inline]
pub fn triangle_cross<T: Real>(t: &[Vec3<T>; 3]) -> Vec3<T> {
    cross(&sub(&t[1], &t[0]), &sub(&t[2], &t[0]))
}

pub fn triangle_area<T: Real>(t: &[Vec3<T>; 3]) -> T {
    norm(&triangle_cross(t)) * T::lit(0.5)
}

/// Closest point on triangle `t` to `p` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle<T: Real>(p: &Vec3<T>, t: &[Vec3<T>; 3]) -> Vec3<T> {
    let [a, b, c] = t;
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    let zero = T::zero();
    if d1 <= zero && d2 <= zero {
        return *a;
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= zero && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        let v = d1 / (d1 - d3);
        return add(a, &scale(&ab, v));
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= zero && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        let w = d2 / (d2 - d6);
        return add(a, &scale(&ac, w));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return add(b, &scale(&sub(c, b), w));
    }
    let denom = T::one() / (va + vb + vc);
    if !denom.is_finite() {
        // zero-area triangle: fall back to the nearest vertex
        return *[a, b, c]
            .into_iter()
            .min_by(|x, y| norm(&sub(p, x)).partial_cmp(&norm(&sub(p, y))).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
    }
    let v = vb * denom;
    let w = vc * denom;
    add(a, &add(&scale(&ab, v), &scale(&ac, w)))
}

pub fn point_triangle_distance<T: Real>(p: &Vec3<T>, t: &[Vec3<T>; 3]) -> T {
    norm(&sub(p, &closest_point_on_triangle(p, t)))
}

#[derive(Debug, Clone, Copy)]
struct Aabb<T> {
    min: Vec3<T>,
    max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    fn empty() -> Self {
        Self {
            min: [T::infinity(); 3],
            max: [T::neg_infinity(); 3],
        }
    }

    fn grow(&mut self, p: &Vec3<T>) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    fn merge(&mut self, o: &Self) {
        self.grow(&o.min);
        self.grow(&o.max);
    }

    fn distance_sq(&self, p: &Vec3<T>) -> T {
        let mut acc = T::zero();
        for k in 0..3 {
            let d = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                T::zero()
            };
            acc += d * d;
        }
        acc
    }
}

enum Node<T> {
    Leaf { bounds: Aabb<T>, first: usize, count: usize },
    Inner { bounds: Aabb<T>, left: usize, right: usize },
}

impl<T: Real> Node<T> {
    fn bounds(&self) -> &Aabb<T> {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Bounding-volume hierarchy for nearest-triangle distance queries.
pub struct TriangleBvh<T> {
    triangles: Vec<[Vec3<T>; 3]>,
    nodes: Vec<Node<T>>,
}

const LEAF_SIZE: usize = 8;

impl<T: Real> TriangleBvh<T> {
    pub fn new(mut triangles: Vec<[Vec3<T>; 3]>) -> Self {
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        if !triangles.is_empty() {
            let len = triangles.len();
            Self::build(&mut triangles, 0, len, &mut nodes);
        }
        Self { triangles, nodes }
    }

    fn centroid(t: &[Vec3<T>; 3]) -> Vec3<T> {
        let third = T::lit(1.0 / 3.0);
        scale(&add(&add(&t[0], &t[1]), &t[2]), third)
    }

    fn build(tris: &mut [[Vec3<T>; 3]], first: usize, count: usize, nodes: &mut Vec<Node<T>>) -> usize {
        let slice = &mut tris[first..first + count];
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for t in slice.iter() {
            for p in t {
                bounds.grow(p);
            }
            cbounds.grow(&Self::centroid(t));
        }
        let index = nodes.len();
        if count <= LEAF_SIZE {
            nodes.push(Node::Leaf { bounds, first, count });
            return index;
        }
        let extent = sub(&cbounds.max, &cbounds.min);
        let axis = (0..3)
            .max_by(|&i, &j| extent[i].partial_cmp(&extent[j]).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        let half = count / 2;
        slice.select_nth_unstable_by(half, |a, b| {
            Self::centroid(a)[axis]
                .partial_cmp(&Self::centroid(b)[axis])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        nodes.push(Node::Leaf { bounds, first, count });
        let left = Self::build(tris, first, half, nodes);
        let right = Self::build(tris, first + half, count - half, nodes);
        let mut merged = *nodes[left].bounds();
        merged.merge(nodes[right].bounds());
        nodes[index] = Node::Inner {
            bounds: merged,
            left,
            right,
        };
        index
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Distance from `p` to the nearest triangle, or `None` when empty.
    pub fn distance(&self, p: &Vec3<T>) -> Option<T> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best_sq = T::infinity();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if node.bounds().distance_sq(p) >= best_sq {
                continue;
            }
            match *node {
                Node::Leaf { first, count, .. } => {
                    for t in &self.triangles[first..first + count] {
                        let d = sub(p, &closest_point_on_triangle(p, t));
                        best_sq = best_sq.min(dot(&d, &d));
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_sq(p);
                    let dr = self.nodes[right].bounds().distance_sq(p);
                    // visit the closer child first
                    if dl < dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        Some(best_sq.sqrt())
    }
}
