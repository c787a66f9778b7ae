//! Convex hull and minimum-area enclosing rectangle (rotating calipers).

/// Planar point used by the hull routines.
pub type Pt = (f64, f64);

fn cross(o: Pt, a: Pt, b: Pt) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counter-clockwise convex hull without collinear points (Andrew's monotone chain).
pub fn convex_hull(points: &[Pt]) -> Vec<Pt> {
    let mut pts: Vec<Pt> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite hull input"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Pt> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Smallest-area rectangle (any orientation) enclosing `points`.
///
/// One side of the optimal rectangle is collinear with a hull edge. The
/// edges are walked in order while three caliper indices track the extreme
/// vertices along the edge direction, its inward normal and its reverse;
/// each index only moves forward, so the sweep is linear in the hull size.
pub fn min_area_rect(points: &[Pt]) -> f64 {
    let hull = convex_hull(points);
    let n = hull.len();
    if n < 3 {
        return 0.0;
    }
    let proj = |p: Pt, o: Pt, d: Pt| (p.0 - o.0) * d.0 + (p.1 - o.1) * d.1;
    let advance = |mut k: usize, o: Pt, d: Pt, sign: f64| {
        for _ in 0..n {
            let next = (k + 1) % n;
            if sign * proj(hull[next], o, d) > sign * proj(hull[k], o, d) + 1e-12 {
                k = next;
            } else {
                break;
            }
        }
        k
    };

    let mut best = f64::INFINITY;
    let (mut right, mut top, mut left) = (0usize, 0usize, 0usize);
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        let u = ((b.0 - a.0) / len, (b.1 - a.1) / len);
        let nrm = (-u.1, u.0);
        if i == 0 {
            right = advance(0, a, u, 1.0);
            top = advance(right, a, nrm, 1.0);
            left = advance(top, a, u, -1.0);
        } else {
            right = advance(right, a, u, 1.0);
            top = advance(top, a, nrm, 1.0);
            left = advance(left, a, u, -1.0);
        }
        let width = proj(hull[right], a, u) - proj(hull[left], a, u);
        let height = proj(hull[top], a, nrm);
        best = best.min(width * height);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior() {
        let h = convex_hull(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (0.0, 1.0),
            (0.5, 0.5),
            (0.5, 0.0),
        ]);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn axis_aligned_rectangle() {
        let a = min_area_rect(&[(0.0, 0.0), (4.0, 0.0), (4.0, 2.0), (0.0, 2.0)]);
        assert!((a - 8.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_square() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = min_area_rect(&[(0.0, -s), (s, 0.0), (0.0, s), (-s, 0.0)]);
        assert!((a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle() {
        // Right triangle legs 3 and 4: best rectangle is 3x4 = 12.
        let a = min_area_rect(&[(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)]);
        assert!((a - 12.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(min_area_rect(&[(1.0, 1.0)]), 0.0);
        assert_eq!(min_area_rect(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]), 0.0);
    }
}
