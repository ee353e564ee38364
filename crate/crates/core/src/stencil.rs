//! Finite-difference stencils on structured grids.
//!
//! Weights come from Fornberg's recursion, so interior (central) and
//! boundary (one-sided) stencils share one construction. Periodic axes use
//! wrap-around central stencils everywhere; chart axes shift the window
//! inward near the ends while keeping the same number of points.

use crate::grid::{Axis, Field, GridSpec, Lin, Topology};

/// Points in a first-derivative stencil (sixth order).
pub const FIRST_WIDTH: usize = 7;
/// Points in a central second-derivative stencil (sixth order).
pub const SECOND_WIDTH: usize = 7;
/// Points in a one-sided second-derivative stencil (sixth order).
pub const SECOND_BOUNDARY_WIDTH: usize = 8;

/// Finite-difference weights for derivatives `0..=order` at `x0` from samples
/// at `nodes`. Returns `weights[k][j]` for derivative `k` and node `j`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[derive(Debug, Clone)]
struct Stencil {
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl Stencil {
    /// Applied to differences from the centre value, so constants map to an
    /// exact zero.
    fn apply<T: Lin>(&self, center: T, sample: impl Fn(usize) -> T) -> T {
        let mut acc = T::zero();
        for (&idx, &w) in self.indices.iter().zip(&self.weights) {
            if w != 0.0 {
                acc = acc + (sample(idx) - center) * w;
            }
        }
        acc
    }
}

fn build_stencil(axis: &Axis, i: usize, derivative: usize, width: usize) -> Stencil {
    let n = axis.n as isize;
    let h = axis.spacing();
    let half = (width / 2) as isize;
    let offsets: Vec<isize> = match axis.topology {
        Topology::Periodic => (-half..=half).collect(),
        Topology::Chart => {
            let w = width as isize;
            let start = (i as isize - half).clamp(0, n - w);
            (start..start + w).map(|k| k - i as isize).collect()
        }
    };
    let nodes: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let raw = fornberg_weights(0.0, &nodes, derivative);
    let scale = h.powi(derivative as i32);
    let indices = offsets.iter().map(|&o| (i as isize + o).rem_euclid(n) as usize).collect();
    let weights = raw[derivative].iter().map(|w| w / scale).collect();
    Stencil { indices, weights }
}

#[derive(Debug, Clone)]
struct AxisOperator {
    first: Vec<Stencil>,
    second: Vec<Stencil>,
}

impl AxisOperator {
    fn new(axis: &Axis) -> Self {
        let first = (0..axis.n).map(|i| build_stencil(axis, i, 1, FIRST_WIDTH)).collect();
        let second = (0..axis.n)
            .map(|i| {
                let half = SECOND_WIDTH / 2;
                let interior = axis.topology == Topology::Periodic
                    || (i >= half && i + half < axis.n);
                let width = if interior { SECOND_WIDTH } else { SECOND_BOUNDARY_WIDTH };
                build_stencil(axis, i, 2, width)
            })
            .collect();
        AxisOperator { first, second }
    }
}

/// Partial-derivative operators for one grid.
#[derive(Debug, Clone)]
pub struct Differ {
    u: AxisOperator,
    v: AxisOperator,
}

#[derive(Clone, Copy)]
enum Dir {
    U,
    V,
}

impl Differ {
    pub fn new(spec: &GridSpec) -> Self {
        Differ { u: AxisOperator::new(&spec.u), v: AxisOperator::new(&spec.v) }
    }

    fn apply_at<T: Lin>(&self, f: &Field<T>, i: usize, j: usize, dir: Dir, second: bool) -> T {
        let center = *f.get(i, j);
        match dir {
            Dir::U => {
                let st = if second { &self.u.second[i] } else { &self.u.first[i] };
                st.apply(center, |k| *f.get(k, j))
            }
            Dir::V => {
                let st = if second { &self.v.second[j] } else { &self.v.first[j] };
                st.apply(center, |k| *f.get(i, k))
            }
        }
    }

    fn apply<T: Lin>(&self, f: &Field<T>, dir: Dir, second: bool) -> Field<T> {
        let (nu, nv) = f.shape();
        Field::par_from_fn(nu, nv, |i, j| self.apply_at(f, i, j, dir, second))
    }

    pub fn du<T: Lin>(&self, f: &Field<T>) -> Field<T> {
        self.apply(f, Dir::U, false)
    }

    pub fn dv<T: Lin>(&self, f: &Field<T>) -> Field<T> {
        self.apply(f, Dir::V, false)
    }

    pub fn duu<T: Lin>(&self, f: &Field<T>) -> Field<T> {
        self.apply(f, Dir::U, true)
    }

    pub fn dvv<T: Lin>(&self, f: &Field<T>) -> Field<T> {
        self.apply(f, Dir::V, true)
    }

    /// Mixed derivative as nested first derivatives.
    pub fn duv<T: Lin>(&self, f: &Field<T>) -> Field<T> {
        self.dv(&self.du(f))
    }

    pub fn du_at<T: Lin>(&self, f: &Field<T>, i: usize, j: usize) -> T {
        self.apply_at(f, i, j, Dir::U, false)
    }

    pub fn dv_at<T: Lin>(&self, f: &Field<T>, i: usize, j: usize) -> T {
        self.apply_at(f, i, j, Dir::V, false)
    }
}
