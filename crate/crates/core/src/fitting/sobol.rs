//! Sobol low-discrepancy points with 32-bit resolution.
//!
//! Points are produced in Gray-code order, the same order as the common
//! reference implementations, and can be addressed directly by index so that
//! any worker can generate any candidate. Index 0 (the origin when
//! unscrambled) is never emitted: candidate `k` is sequence point `k + 1`.
//! A non-zero seed applies a seed-keyed random digital shift per dimension.

use rand::RngCore;

use super::sobol_table::{DIRECTIONS, MAX_DEGREE};
use crate::error::{Error, Result};
use crate::rng::seeded;

const BITS: usize = 32;
const SCALE: f64 = 1.0 / 4_294_967_296.0;

#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    shift: Vec<u32>,
}

impl Sobol {
    pub const MAX_DIM: usize = DIRECTIONS.len();

    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("sobol dimension must be at least 1".into()));
        }
        if dim > Self::MAX_DIM {
            return Err(Error::SobolDimension {
                requested: dim,
                max: Self::MAX_DIM,
            });
        }
        let directions = (0..dim).map(direction_numbers).collect();
        let shift = if seed == 0 {
            vec![0; dim]
        } else {
            let mut rng = seeded(seed);
            (0..dim).map(|_| rng.next_u32()).collect()
        };
        Ok(Sobol { directions, shift })
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Writes sequence point `index` into `out`.
    pub fn point_into(&self, index: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        debug_assert!(index < 1 << BITS);
        let gray = index ^ (index >> 1);
        for ((v, shift), x) in self.directions.iter().zip(&self.shift).zip(out.iter_mut()) {
            let mut acc = *shift;
            let mut g = gray;
            let mut bit = 0;
            while g != 0 {
                if g & 1 == 1 {
                    acc ^= v[bit];
                }
                g >>= 1;
                bit += 1;
            }
            *x = f64::from(acc) * SCALE;
        }
    }

    /// Candidate `k`, i.e. sequence point `k + 1`.
    pub fn candidate(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.point_into(k as u64 + 1, &mut out);
        out
    }

    /// Largest number of candidates this generator can address.
    pub fn capacity() -> usize {
        (1usize << BITS) - 1
    }
}

/// Direction integers `v_b = m_b << (31 - b)` for one dimension.
fn direction_numbers(d: usize) -> [u32; BITS] {
    let mut m = [0u32; BITS];
    if d == 0 {
        m = [1; BITS];
    } else {
        let (poly, init) = DIRECTIONS[d];
        let degree = (32 - poly.leading_zeros() - 1) as usize;
        debug_assert!(degree <= MAX_DEGREE);
        m[..degree].copy_from_slice(&init[..degree]);
        for j in degree..BITS {
            let mut next = m[j - degree];
            let mut pow2 = 1u32;
            for k in 0..degree {
                pow2 <<= 1;
                if (poly >> (degree - 1 - k)) & 1 == 1 {
                    next ^= pow2.wrapping_mul(m[j - k - 1]);
                }
            }
            m[j] = next;
        }
    }
    let mut v = [0u32; BITS];
    for (b, (vb, mb)) in v.iter_mut().zip(m).enumerate() {
        *vb = mb << (BITS - 1 - b);
    }
    v
}

/// The first `n` candidate points (the origin skipped) in `[0, 1)^dim`.
pub fn sobol_points(dim: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidParameter("at least one point must be requested".into()));
    }
    if n > Sobol::capacity() {
        return Err(Error::InvalidParameter(format!(
            "at most {} sobol points are available",
            Sobol::capacity()
        )));
    }
    let s = Sobol::new(dim, seed)?;
    Ok((0..n).map(|k| s.candidate(k)).collect())
}
