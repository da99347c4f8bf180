use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::rigor::Interval;

/// Result of a branch-and-bound minimisation: `lower` is certified,
/// `upper` is an upper bound on the true infimum taken from point values.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

struct Cell {
    lb: f64,
    a: f64,
    b: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    // BinaryHeap is a max-heap; smallest lower bound first, ties by position
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lb
            .total_cmp(&self.lb)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Minimises a function over `[a, b]` by best-first bisection.
///
/// `lower(cell)` returns a certified lower bound of the function on the
/// cell, or `None` when the cell contains no point of the true domain.
/// `upper(x)` returns an upper bound of the function value at `x`.
pub(crate) fn minimize(
    a: f64,
    b: f64,
    lower: impl Fn(Interval) -> Option<f64>,
    upper: impl Fn(f64) -> Option<f64>,
    rel_tol: f64,
    max_splits: usize,
) -> Bracket {
    let mut heap = BinaryHeap::new();
    let mut ub = f64::INFINITY;
    let probe = |x: f64, ub: &mut f64| {
        if let Some(u) = upper(x) {
            *ub = ub.min(u);
        }
    };
    probe(a, &mut ub);
    probe(b, &mut ub);
    if let Some(lb) = lower(Interval::new(a, b)) {
        heap.push(Cell { lb, a, b });
    }
    for _ in 0..max_splits {
        let Some(top) = heap.peek() else { break };
        if top.lb >= ub - rel_tol * ub.abs() {
            break;
        }
        let cell = heap.pop().unwrap();
        let m = 0.5 * cell.a + 0.5 * cell.b;
        if !(cell.a < m && m < cell.b) {
            heap.push(cell);
            break;
        }
        probe(m, &mut ub);
        for (lo, hi) in [(cell.a, m), (m, cell.b)] {
            if let Some(lb) = lower(Interval::new(lo, hi)) {
                heap.push(Cell {
                    lb: lb.max(cell.lb),
                    a: lo,
                    b: hi,
                });
            }
        }
    }
    let lower = heap.peek().map_or(ub, |c| c.lb);
    Bracket {
        lower: lower.min(ub),
        upper: ub,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_minimum() {
        let f = |x: Interval| (x - Interval::point(0.3)).sqr();
        let r = minimize(
            0.0,
            1.0,
            |c| Some(f(c).lo()),
            |x| Some(f(Interval::point(x)).hi()),
            1e-9,
            10_000,
        );
        assert!(r.lower <= 0.0 + 1e-9 && r.lower <= r.upper);
        assert!(r.upper < 1e-6);
    }

    #[test]
    fn monotone_function_minimum_at_endpoint() {
        let r = minimize(
            0.0,
            1.0,
            |c| Some(2.5 - c.hi()),
            |x| Some(2.5 - x),
            1e-12,
            1000,
        );
        assert_eq!(r.upper, 1.5);
        assert!(r.lower <= 1.5 && r.lower > 1.5 - 1e-9);
    }
}
