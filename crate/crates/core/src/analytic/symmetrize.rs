//! Symmetrisation `C[T] = min{T, T⁻¹}**`.
//!
//! For a piecewise-linear `T` the epigraph of `min{T, T⁻¹}` is the union of the
//! epigraphs of `T` and of its reflection across the diagonal, so the double
//! conjugate is the lower convex hull of the knots of `T` together with their
//! reflections. The knot set is symmetric, hence so is the result.

use super::{SampledCurve, TradeoffCurve, DEFAULT_KNOTS};

/// Lower convex hull of a point set, returned sorted by `x`. Points sharing
/// an `x` coordinate are reduced to the lowest one first.
pub fn lower_convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|later, first| later.0 == first.0);

    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Symmetrises `curve`; closed forms are first sampled on `DEFAULT_KNOTS`
/// uniform intervals.
pub fn symmetrize(curve: &TradeoffCurve) -> SampledCurve {
    symmetrize_on(&curve.to_sampled(DEFAULT_KNOTS + 1))
}

pub fn symmetrize_on(curve: &SampledCurve) -> SampledCurve {
    let mut pts = Vec::with_capacity(2 * curve.len() + 2);
    for (&a, &b) in curve.alpha().iter().zip(curve.beta()) {
        pts.push((a, b));
        pts.push((b, a));
    }
    let hull = lower_convex_hull(&pts);
    SampledCurve::from_points(hull).expect("hull of points in the unit square is a valid curve")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{tradeoff_subsampled, TradeoffCurve};
    use crate::stats::normal_cdf;
    use proptest::prelude::*;

    fn sup_distance(a: &SampledCurve, f: impl Fn(f64) -> f64, n: usize) -> f64 {
        (0..=n)
            .map(|i| i as f64 / n as f64)
            .map(|x| (a.eval(x) - f(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn symmetric_inputs_are_unchanged() {
        let gauss = TradeoffCurve::Gauss { mu: 1.0 };
        let c = symmetrize(&gauss);
        assert!(sup_distance(&c, |a| gauss.eval(a), 10_000) < 1e-6);

        let diag = TradeoffCurve::Gauss { mu: 0.0 };
        let c = symmetrize(&diag);
        assert!(sup_distance(&c, |a| 1.0 - a, 10_000) < 1e-12);
    }

    #[test]
    fn subsampled_gaussian_matches_tangent_construction() {
        // Independent route: T̄ has slope −1 at x* = Φ(−μ/2); the symmetrised
        // curve is T̄ on [0, x*], the line x* + T̄(x*) − x up to T̄(x*), and the
        // inverse of T̄ (by bisection on the closed form) beyond.
        let mu = 1.0;
        let sub = tradeoff_subsampled(TradeoffCurve::Gauss { mu }, 5, 10).unwrap();
        let x_star = normal_cdf(-mu / 2.0);
        let y_star = sub.eval(x_star);
        let inverse = |y: f64| {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sub.eval(mid) > y {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let oracle = |x: f64| {
            if x <= x_star {
                sub.eval(x)
            } else if x <= y_star {
                x_star + y_star - x
            } else {
                inverse(x)
            }
        };
        let c = symmetrize(&sub);
        let err = sup_distance(&c, oracle, 10_000);
        assert!(err < 1e-4, "sup distance {err}");
        // fixed point sits in the middle of the slope −1 segment
        let mid = 0.5 * (x_star + y_star);
        assert!((c.eval(mid) - mid).abs() < 1e-6);
        // C[T] ≤ T
        assert!((0..=1000).all(|i| {
            let x = i as f64 / 1000.0;
            c.eval(x) <= sub.eval(x) + 1e-12
        }));
    }

    #[test]
    fn idempotent() {
        for curve in [
            tradeoff_subsampled(TradeoffCurve::Gauss { mu: 1.0 }, 5, 10).unwrap(),
            TradeoffCurve::EpsDelta { eps: 0.5, delta: 0.1 },
            TradeoffCurve::Laplace { eps: 1.0 },
        ] {
            let once = symmetrize(&curve);
            let twice = symmetrize_on(&once);
            assert!(sup_distance(&twice, |a| once.eval(a), 10_000) < 1e-9);
        }
    }

    fn brute_force_lower_envelope(points: &[(f64, f64)], x: f64) -> f64 {
        // min over pairs straddling x of the chord value, and points at x
        let mut best = f64::INFINITY;
        for &(x1, y1) in points {
            if x1 == x {
                best = best.min(y1);
            }
            for &(x2, y2) in points {
                if x1 < x && x < x2 {
                    best = best.min(y1 + (y2 - y1) * (x - x1) / (x2 - x1));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn hull_matches_brute_force(
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..40),
            probes in prop::collection::vec(0.0f64..1.0, 10),
        ) {
            let hull = lower_convex_hull(&pts);
            let lo = hull.first().unwrap().0;
            let hi = hull.last().unwrap().0;
            let curve = SampledCurve::from_points(hull.clone()).unwrap();
            for x in probes {
                if x <= lo || x >= hi {
                    continue;
                }
                let want = brute_force_lower_envelope(&pts, x);
                prop_assert!((curve.eval(x) - want).abs() < 1e-9);
            }
            // convex
            for w in hull.windows(3) {
                let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
                prop_assert!(s2 >= s1 - 1e-9);
            }
        }
    }
}
