//! Small dense tensors over a chart of dimension ≤ 4.
//!
//! Components are stored row-major in a flat buffer; rank and dimension are
//! runtime values. Everything here is plain loops — the charts are tiny and
//! clarity wins over cleverness.

use std::fmt;

#[derive(Clone, PartialEq)]
pub struct Tn {
    dim: usize,
    rank: usize,
    data: Vec<f64>,
}

impl Tn {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Tn {
            dim,
            rank,
            data: vec![0.0; dim.pow(rank as u32)],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tn {
            dim: 1,
            rank: 0,
            data: vec![value],
        }
    }

    pub fn from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Tn::zeros(dim, rank);
        let mut idx = vec![0usize; rank];
        loop {
            *t.at_mut(&idx) = f(&idx);
            if !step(&mut idx, dim) {
                break;
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        let mut o = 0;
        for &i in idx {
            debug_assert!(i < self.dim);
            o = o * self.dim + i;
        }
        o
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn at_mut(&mut self, idx: &[usize]) -> &mut f64 {
        let o = self.offset(idx);
        &mut self.data[o]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, s: f64) -> Tn {
        let mut out = self.clone();
        for x in &mut out.data {
            *x *= s;
        }
        out
    }

    pub fn add(&self, other: &Tn) -> Tn {
        assert_eq!(self.rank, other.rank);
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Tn) -> Tn {
        self.add(&other.scale(-1.0))
    }

    /// Iterate over all multi-indices of this tensor.
    pub fn indices(&self) -> IndexIter {
        IndexIter {
            dim: self.dim,
            idx: vec![0; self.rank],
            done: false,
        }
    }

    /// Contract slot `a` (upper, already raised) against slot `b`.
    pub fn self_contract(&self, a: usize, b: usize) -> Tn {
        assert!(a != b && a < self.rank && b < self.rank);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mut out = Tn::zeros(self.dim, self.rank - 2);
        for idx in out.indices() {
            let mut s = 0.0;
            for k in 0..self.dim {
                let mut full = Vec::with_capacity(self.rank);
                let mut it = idx.iter();
                for pos in 0..self.rank {
                    if pos == lo || pos == hi {
                        full.push(k);
                    } else {
                        full.push(*it.next().unwrap());
                    }
                }
                s += self.at(&full);
            }
            *out.at_mut(&idx) = s;
        }
        out
    }
}

pub struct IndexIter {
    dim: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Iterator for IndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        if self.idx.is_empty() || !step(&mut self.idx, self.dim) {
            self.done = true;
        }
        Some(out)
    }
}

fn step(idx: &mut [usize], dim: usize) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < dim {
            return true;
        }
        idx[i] = 0;
    }
    false
}

impl fmt::Debug for Tn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tn(dim={}, rank={}, data={:?})", self.dim, self.rank, self.data)
    }
}

/// Sum over all index tuples of rank `rank`; convenience for contractions.
pub fn sum_over(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> f64) -> f64 {
    let mut idx = vec![0usize; rank];
    if rank == 0 {
        return f(&idx);
    }
    let mut s = 0.0;
    loop {
        s += f(&idx);
        if !step(&mut idx, dim) {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_fn_and_contract() {
        // delta_{ab} delta^{ab} contracted = dim
        let d = 3;
        let t = Tn::from_fn(d, 2, |i| if i[0] == i[1] { 1.0 } else { 0.0 });
        let c = t.self_contract(0, 1);
        assert_eq!(c.rank(), 0);
        assert_eq!(c.at(&[]), 3.0);
    }

    #[test]
    fn index_iteration_covers_all() {
        let t = Tn::zeros(2, 3);
        assert_eq!(t.indices().count(), 8);
        let s = Tn::zeros(4, 0);
        assert_eq!(s.indices().count(), 1);
    }
}
