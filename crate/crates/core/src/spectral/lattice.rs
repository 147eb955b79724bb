//! Half-lattice bookkeeping for real Fourier series on the d-torus.
//!
//! Every nonzero frequency pair `{n, -n}` is represented once by its
//! canonical member, the one whose first nonzero component is positive.
//! Inside the storage box `|n|_inf <= L` the canonical members, ordered
//! lexicographically, are exactly the box points whose row-major linear
//! index exceeds the index of the origin. That makes position lookup a
//! subtraction.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

use crate::error::{Error, Result};

/// A nonzero lattice vector in its canonical orientation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeIndex(Vec<i64>);

impl LatticeIndex {
    /// Wraps an already canonical vector.
    pub fn new(n: Vec<i64>) -> Result<Self> {
        match first_nonzero(&n) {
            None => Err(Error::ZeroIndex),
            Some(v) if v > 0 => Ok(LatticeIndex(n)),
            Some(_) => Err(Error::NonCanonical(n)),
        }
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm2(&self) -> i64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// Euclidean length `|n|`.
    pub fn norm(&self) -> f64 {
        (self.norm2() as f64).sqrt()
    }

    /// Japanese bracket `<n> = (1 + |n|^2)^(1/2)`.
    pub fn bracket(&self) -> f64 {
        (1.0 + self.norm2() as f64).sqrt()
    }

    pub fn sup_norm(&self) -> i64 {
        self.0.iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

fn first_nonzero(n: &[i64]) -> Option<i64> {
    n.iter().copied().find(|&v| v != 0)
}

/// Canonical representative of `n` together with the sign picked up by the
/// sine coefficient: `cos(-n.x) = cos(n.x)` and `sin(-n.x) = -sin(n.x)`.
pub fn canonical_index(n: &[i64]) -> Result<(LatticeIndex, i8)> {
    match first_nonzero(n) {
        None => Err(Error::ZeroIndex),
        Some(v) if v > 0 => Ok((LatticeIndex(n.to_vec()), 1)),
        Some(_) => Ok((LatticeIndex(n.iter().map(|v| -v).collect()), -1)),
    }
}

/// Canonical half of the box `|n|_inf <= cutoff` in `dim` dimensions.
#[derive(Debug)]
pub struct Lattice {
    dim: usize,
    cutoff: usize,
    side: usize,
    center: usize,
    norm2: Vec<u32>,
    sup: Vec<u16>,
}

static LATTICES: Lazy<Mutex<HashMap<(usize, usize), Arc<Lattice>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl Lattice {
    /// Process-wide shared lattice for the given shape.
    pub fn shared(dim: usize, cutoff: usize) -> Arc<Lattice> {
        assert!(dim >= 1, "lattice dimension must be at least 1");
        let mut cache = LATTICES.lock().expect("lattice cache poisoned");
        cache
            .entry((dim, cutoff))
            .or_insert_with(|| Arc::new(Lattice::build(dim, cutoff)))
            .clone()
    }

    fn build(dim: usize, cutoff: usize) -> Lattice {
        let side = 2 * cutoff + 1;
        let total = side.pow(dim as u32);
        let center = (total - 1) / 2;
        let len = center;
        let mut norm2 = Vec::with_capacity(len);
        let mut sup = Vec::with_capacity(len);
        let mut n = vec![0i64; dim];
        for p in 0..len {
            decode_into(center + 1 + p, side, cutoff, &mut n);
            norm2.push(n.iter().map(|v| (v * v) as u32).sum());
            sup.push(n.iter().map(|v| v.unsigned_abs() as u16).max().unwrap_or(0));
        }
        Lattice {
            dim,
            cutoff,
            side,
            center,
            norm2,
            sup,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of canonical indices in the box.
    pub fn len(&self) -> usize {
        self.norm2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norm2.is_empty()
    }

    pub fn norm2(&self, pos: usize) -> u32 {
        self.norm2[pos]
    }

    pub fn norms2(&self) -> &[u32] {
        &self.norm2
    }

    pub fn sup_norm(&self, pos: usize) -> usize {
        self.sup[pos] as usize
    }

    /// Writes the components of the index stored at `pos`.
    pub fn components_into(&self, pos: usize, out: &mut [i64]) {
        decode_into(self.center + 1 + pos, self.side, self.cutoff, out);
    }

    pub fn index(&self, pos: usize) -> LatticeIndex {
        let mut n = vec![0; self.dim];
        self.components_into(pos, &mut n);
        LatticeIndex(n)
    }

    /// Position of a canonical vector, `None` outside the box.
    pub fn position(&self, n: &[i64]) -> Option<usize> {
        debug_assert_eq!(n.len(), self.dim);
        let l = self.cutoff as i64;
        let mut linear = 0usize;
        for &v in n {
            if v.abs() > l {
                return None;
            }
            linear = linear * self.side + (v + l) as usize;
        }
        if linear > self.center {
            Some(linear - self.center - 1)
        } else {
            None
        }
    }
}

fn decode_into(mut linear: usize, side: usize, cutoff: usize, out: &mut [i64]) {
    for slot in out.iter_mut().rev() {
        *slot = (linear % side) as i64 - cutoff as i64;
        linear /= side;
    }
}
