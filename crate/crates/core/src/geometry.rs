//! Planar geometry helpers shared by footprint cleaning and meshing.

/// A point in the plane, `[x, y]`.
pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[inline]
pub fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Exact orientation test: positive when `c` lies left of `a -> b`.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

/// Exact in-circle test: positive when `d` lies strictly inside the
/// circumcircle of the counter-clockwise triangle `a, b, c`.
#[inline]
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    robust::incircle(coord(a), coord(b), coord(c), coord(d))
}

#[inline]
fn coord(p: Point) -> robust::Coord<f64> {
    robust::Coord { x: p[0], y: p[1] }
}

/// Signed area of a closed or open ring (shoelace). Positive for CCW.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * acc
}

pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * cross(sub(b, a), sub(c, a))
}

/// Circumcenter and circumradius of a non-degenerate triangle.
pub fn circumcircle(a: Point, b: Point, c: Point) -> (Point, f64) {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let d = 2.0 * cross(ab, ac);
    let ab2 = dot(ab, ab);
    let ac2 = dot(ac, ac);
    let ux = (ac[1] * ab2 - ab[1] * ac2) / d;
    let uy = (ab[0] * ac2 - ac[0] * ab2) / d;
    ([a[0] + ux, a[1] + uy], ux.hypot(uy))
}

/// Interior angles (radians) at each vertex.
pub fn triangle_angles(a: Point, b: Point, c: Point) -> [f64; 3] {
    let angle = |p: Point, q: Point, r: Point| {
        let u = sub(q, p);
        let v = sub(r, p);
        cross(u, v).abs().atan2(dot(u, v))
    };
    [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
}

pub fn min_angle_deg(a: Point, b: Point, c: Point) -> f64 {
    let [x, y, z] = triangle_angles(a, b, c);
    x.min(y).min(z).to_degrees()
}

/// Even-odd point-in-polygon test on an open ring (last != first).
/// Points exactly on the boundary may go either way.
pub fn point_in_ring(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Euclidean distance from `p` to the segment `a b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// True if closed segments `a b` and `c d` share at least one point.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Assuming collinearity, whether `p` lies within the bounding box of `a b`.
fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Whether an open ring has two non-adjacent edges that touch, or adjacent
/// edges that fold back onto each other.
pub fn ring_self_intersects(ring: &[Point]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        for j in (i + 1)..n {
            let c = ring[j];
            let d = ring[(j + 1) % n];
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared endpoint is fine unless the edges overlap.
                let (shared, other_a, other_b) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if orient(other_a, shared, other_b) == 0.0
                    && dot(sub(other_a, shared), sub(other_b, shared)) > 0.0
                {
                    return true;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}
