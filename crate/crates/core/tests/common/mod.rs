//! Helpers shared by the integration test targets.

use num_complex::Complex64 as C64;
use tilted_cavities::dynamics::{CumulantState, Op};

fn mean(op: Op, s: &CumulantState) -> C64 {
    if op.dagger {
        s.alpha[op.site].conj()
    } else {
        s.alpha[op.site]
    }
}

fn second(p: Op, q: Op, s: &CumulantState) -> C64 {
    match (p.dagger, q.dagger) {
        (true, true) => s.anomalous[(p.site, q.site)].conj(),
        (true, false) => s.normal[(p.site, q.site)],
        (false, false) => s.anomalous[(p.site, q.site)],
        (false, true) => panic!("not normal ordered"),
    }
}

/// Moment from the cumulant expansion truncated at second order: the sum over
/// all set partitions into blocks of size one and two of products of cumulants.
pub fn partition_moment(ops: &[Op], s: &CumulantState) -> C64 {
    fn go(rest: &[usize], ops: &[Op], s: &CumulantState) -> C64 {
        let Some((&first, tail)) = rest.split_first() else { return C64::new(1.0, 0.0) };
        let mut total = mean(ops[first], s) * go(tail, ops, s);
        for (k, &partner) in tail.iter().enumerate() {
            let mut remaining = tail.to_vec();
            remaining.remove(k);
            let c2 = second(ops[first], ops[partner], s) - mean(ops[first], s) * mean(ops[partner], s);
            total += c2 * go(&remaining, ops, s);
        }
        total
    }
    let idx: Vec<usize> = (0..ops.len()).collect();
    go(&idx, ops, s)
}
