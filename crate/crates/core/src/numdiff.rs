//! Finite-difference derivatives over block-structured points.
//!
//! Central differences with step `1e-6 * max(1, |x|_inf)`; at a simplex
//! boundary (a coordinate within one step of 0 or 1) the second-order
//! one-sided three-point stencil is used instead, so every evaluation stays
//! inside the unit box.

use nalgebra::DMatrix;

pub const FD_RELATIVE_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stencil {
    Central,
    Forward,
    Backward,
}

pub fn step_for(x: &[Vec<f64>]) -> f64 {
    let norm_inf = x.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    FD_RELATIVE_STEP * norm_inf.max(1.0)
}

fn stencil(value: f64, h: f64) -> Stencil {
    if value - h < 0.0 {
        Stencil::Forward
    } else if value + h > 1.0 {
        Stencil::Backward
    } else {
        Stencil::Central
    }
}

fn shifted(x: &[Vec<f64>], i: usize, p: usize, delta: f64) -> Vec<Vec<f64>> {
    let mut y = x.to_vec();
    y[i][p] += delta;
    y
}

/// Derivative of a generic output along coordinate `(i, p)`, combined linearly.
fn directional<T, F, C>(f: &F, x: &[Vec<f64>], i: usize, p: usize, h: f64, combine: C) -> T
where
    F: Fn(&[Vec<f64>]) -> T,
    C: Fn(&[(f64, T)]) -> T,
{
    match stencil(x[i][p], h) {
        Stencil::Central => {
            let plus = f(&shifted(x, i, p, h));
            let minus = f(&shifted(x, i, p, -h));
            combine(&[(0.5 / h, plus), (-0.5 / h, minus)])
        }
        Stencil::Forward => {
            let f0 = f(x);
            let f1 = f(&shifted(x, i, p, h));
            let f2 = f(&shifted(x, i, p, 2.0 * h));
            combine(&[(-1.5 / h, f0), (2.0 / h, f1), (-0.5 / h, f2)])
        }
        Stencil::Backward => {
            let f0 = f(x);
            let f1 = f(&shifted(x, i, p, -h));
            let f2 = f(&shifted(x, i, p, -2.0 * h));
            combine(&[(1.5 / h, f0), (-2.0 / h, f1), (0.5 / h, f2)])
        }
    }
}

fn combine_scalar(terms: &[(f64, f64)]) -> f64 {
    terms.iter().map(|(c, v)| c * v).sum()
}

fn combine_vector(terms: &[(f64, Vec<f64>)]) -> Vec<f64> {
    let n = terms[0].1.len();
    (0..n)
        .map(|k| terms.iter().map(|(c, v)| c * v[k]).sum())
        .collect()
}

/// Gradient of a scalar function with respect to every coordinate.
pub fn gradient<F>(f: F, x: &[Vec<f64>]) -> Vec<Vec<f64>>
where
    F: Fn(&[Vec<f64>]) -> f64,
{
    let h = step_for(x);
    x.iter()
        .enumerate()
        .map(|(i, b)| {
            (0..b.len())
                .map(|p| directional(&f, x, i, p, h, combine_scalar))
                .collect()
        })
        .collect()
}

/// Gradient of a scalar function with respect to block `i` only.
pub fn block_gradient<F>(f: F, x: &[Vec<f64>], i: usize) -> Vec<f64>
where
    F: Fn(&[Vec<f64>]) -> f64,
{
    let h = step_for(x);
    (0..x[i].len())
        .map(|p| directional(&f, x, i, p, h, combine_scalar))
        .collect()
}

/// Jacobian of a flattened vector map; column `(j, q)` is the derivative along `x^j_q`.
pub fn jacobian<F>(f: F, x: &[Vec<f64>]) -> DMatrix<f64>
where
    F: Fn(&[Vec<f64>]) -> Vec<f64>,
{
    let h = step_for(x);
    let n: usize = x.iter().map(Vec::len).sum();
    let mut columns = Vec::with_capacity(n);
    for (j, b) in x.iter().enumerate() {
        for q in 0..b.len() {
            columns.push(directional(&f, x, j, q, h, combine_vector));
        }
    }
    let rows = columns.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, n, |r, c| columns[c][r])
}
