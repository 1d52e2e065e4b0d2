#![allow(dead_code)]

use manyshap::{FeatureVector, Model};

/// Shapley values by averaging marginal vectors over every ordering, with
/// the set function given directly on bitmasks.
pub fn permutation_oracle(n: usize, v: impl Fn(u64) -> f64) -> Vec<f64> {
    fn orders(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for o in orders(n - 1) {
            for pos in 0..=o.len() {
                let mut p = o.clone();
                p.insert(pos, n - 1);
                out.push(p);
            }
        }
        out
    }
    let all = orders(n);
    let mut s = vec![0.0; n];
    for o in &all {
        let mut mask = 0u64;
        for &p in o {
            let before = v(mask);
            mask |= 1 << p;
            s[p] += v(mask) - before;
        }
    }
    s.iter().map(|t| t / all.len() as f64).collect()
}

pub fn fv(pairs: &[(&str, f64)]) -> FeatureVector {
    FeatureVector::from_pairs(pairs.iter().map(|(n, v)| (n.to_string(), *v))).unwrap()
}

pub fn expr(src: &str) -> Model {
    Model::expression(src).unwrap()
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[track_caller]
pub fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert!(close(a, b, tol), "{a:?} vs {b:?} (tol {tol})");
}
