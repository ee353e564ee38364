//! Structured parameter grids and grid-indexed fields.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ambient::C2;
use crate::error::{GeomError, Result};

/// Minimum node count per axis.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Wrap-around axis; the last node is one spacing short of the range end.
    Periodic,
    /// Open chart axis; both range ends are nodes.
    Chart,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Periodic => f.write_str("periodic"),
            Topology::Chart => f.write_str("chart"),
        }
    }
}

impl FromStr for Topology {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Topology::Periodic),
            "chart" => Ok(Topology::Chart),
            other => Err(GeomError::InvalidGrid(format!("unknown topology {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub n: usize,
    pub start: f64,
    pub end: f64,
    pub topology: Topology,
}

impl Axis {
    pub fn periodic(n: usize, start: f64, end: f64) -> Self {
        Axis { n, start, end, topology: Topology::Periodic }
    }

    pub fn chart(n: usize, start: f64, end: f64) -> Self {
        Axis { n, start, end, topology: Topology::Chart }
    }

    pub fn spacing(&self) -> f64 {
        match self.topology {
            Topology::Periodic => (self.end - self.start) / self.n as f64,
            Topology::Chart => (self.end - self.start) / (self.n - 1) as f64,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing()
    }

    pub fn with_nodes(&self, n: usize) -> Axis {
        Axis { n, ..*self }
    }

    /// Quadrature weight of node `i` (trapezoid rule on chart axes).
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        match self.topology {
            Topology::Chart if i == 0 || i + 1 == self.n => 0.5 * h,
            _ => h,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.n < MIN_NODES {
            return Err(GeomError::InvalidGrid(format!(
                "{name} axis has {} nodes, minimum is {MIN_NODES}",
                self.n
            )));
        }
        if !(self.end > self.start) || !self.start.is_finite() || !self.end.is_finite() {
            return Err(GeomError::InvalidGrid(format!(
                "{name} range [{}, {}] is empty",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u: Axis,
    pub v: Axis,
}

impl GridSpec {
    pub fn new(u: Axis, v: Axis) -> Result<Self> {
        u.validate("u")?;
        v.validate("v")?;
        Ok(GridSpec { u, v })
    }

    pub fn with_resolution(&self, nu: usize, nv: usize) -> Result<Self> {
        GridSpec::new(self.u.with_nodes(nu), self.v.with_nodes(nv))
    }

    pub fn len(&self) -> usize {
        self.u.n * self.v.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_doubly_periodic(&self) -> bool {
        self.u.topology == Topology::Periodic && self.v.topology == Topology::Periodic
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.u.coord(i), self.v.coord(j))
    }

    /// Four-neighbourhood of a node, honouring wrap-around on periodic axes.
    pub fn neighbors(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
        let step = |k: usize, delta: isize, axis: &Axis| -> Option<usize> {
            let n = axis.n as isize;
            let t = k as isize + delta;
            match axis.topology {
                Topology::Periodic => Some(t.rem_euclid(n) as usize),
                Topology::Chart => (0..n).contains(&t).then_some(t as usize),
            }
        };
        let (u, v) = (self.u, self.v);
        [
            step(i, -1, &u).map(|a| (a, j)),
            step(i, 1, &u).map(|a| (a, j)),
            step(j, -1, &v).map(|b| (i, b)),
            step(j, 1, &v).map(|b| (i, b)),
        ]
        .into_iter()
        .flatten()
    }
}

/// Values stored per grid node, row-major with `i` (u) as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    nu: usize,
    nv: usize,
    data: Vec<T>,
}

pub type ScalarField = Field<f64>;

impl<T> Field<T> {
    pub fn from_vec(nu: usize, nv: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), nu * nv, "field size mismatch");
        Field { nu, nv, data }
    }

    pub fn from_fn(nu: usize, nv: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nu * nv);
        for i in 0..nu {
            for j in 0..nv {
                data.push(f(i, j));
            }
        }
        Field { nu, nv, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nu, self.nv)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    pub fn node(&self, idx: usize) -> (usize, usize) {
        (idx / self.nv, idx % self.nv)
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.nv + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.nv + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Field<U> {
        Field { nu: self.nu, nv: self.nv, data: self.data.iter().map(f).collect() }
    }

    pub fn zip_map<U, V>(&self, other: &Field<U>, f: impl Fn(&T, &U) -> V) -> Field<V> {
        assert_eq!(self.shape(), other.shape(), "field shape mismatch");
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| f(a, b)).collect();
        Field { nu: self.nu, nv: self.nv, data }
    }

    pub fn rows(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        self.data.iter().enumerate().map(move |(k, t)| ((k / self.nv, k % self.nv), t))
    }
}

impl<T: Send + Sync> Field<T> {
    /// Builds a field by evaluating `f` on every node in parallel.
    pub fn par_from_fn(nu: usize, nv: usize, f: impl Fn(usize, usize) -> T + Sync) -> Self {
        use rayon::prelude::*;
        let data = (0..nu * nv).into_par_iter().map(|k| f(k / nv, k % nv)).collect();
        Field { nu, nv, data }
    }
}

impl<T: Clone> Field<T> {
    pub fn filled(nu: usize, nv: usize, value: T) -> Self {
        Field { nu, nv, data: vec![value; nu * nv] }
    }
}

/// Linear values that stencils can be applied to.
pub trait Lin: Copy + Send + Sync + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Lin for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Lin for C2 {
    fn zero() -> Self {
        C2::ZERO
    }
}
