#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use sr_core::linalg::{c, StateVector, C64};

/// Random normalized state of dimension `dim`.
pub fn state(dim: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("non-negligible norm", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(|v| StateVector::normalized(v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
}

pub fn bipartite(da: usize, db: usize) -> impl Strategy<Value = StateVector> {
    state(da * db).prop_map(move |s| s.reshape(vec![da, db]).unwrap())
}

/// `e^{i g} [[a, b], [-b*, a*]]` with `|a|^2 + |b|^2 = 1`.
pub fn unitary2() -> impl Strategy<Value = DMatrix<C64>> {
    (0.0f64..std::f64::consts::TAU, 0.0f64..std::f64::consts::FRAC_PI_2, 0.0f64..std::f64::consts::TAU, 0.0f64..std::f64::consts::TAU)
        .prop_map(|(g, t, pa, pb)| {
            let a = polar(t.cos(), pa);
            let b = polar(t.sin(), pb);
            let ph = polar(1.0, g);
            DMatrix::from_row_slice(2, 2, &[ph * a, ph * b, -ph * b.conj(), ph * a.conj()])
        })
}

/// Simpson's rule on `[lo, hi]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let x = lo + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

pub fn polar(r: f64, theta: f64) -> C64 {
    c(r * theta.cos(), r * theta.sin())
}

pub fn modulus(z: C64) -> f64 {
    z.norm_sqr().sqrt()
}
