//! Shifted dyadic grids with exact integer arithmetic.
//!
//! A cube of `D^t` is `2^k([0,1)^n + m + t)` with `t` having entries in
//! `{0, ±1/3}`. We store the shift numerators in `{-1, 0, +1}`, so the
//! low corner on axis `i` is `2^k (3 m_i + t_i) / 3` — exactly representable.
//! All containment and tiling predicates are decided on rationals; `f64`
//! appears only when a caller asks for approximate endpoints.

use crate::error::{CoreError, Result};
use crate::rat::{self, Rat};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const MAX_DIM: usize = 2;

/// Shift tag of one of the 3^n translated grids. Entries are numerators of
/// thirds: `-1, 0, +1` mean `-1/3, 0, +1/3`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct GridShift {
    pub n: u8,
    pub t: [i8; MAX_DIM],
}

impl GridShift {
    pub fn new(t: &[i8]) -> Result<Self> {
        if t.is_empty() || t.len() > MAX_DIM {
            return Err(CoreError::UnsupportedDimension(t.len() as u8));
        }
        if t.iter().any(|&v| !(-1..=1).contains(&v)) {
            return Err(CoreError::InvalidParameter(format!(
                "shift entries must lie in {{-1,0,1}}, got {t:?}"
            )));
        }
        let mut arr = [0i8; MAX_DIM];
        arr[..t.len()].copy_from_slice(t);
        Ok(GridShift { n: t.len() as u8, t: arr })
    }

    pub fn standard(n: u8) -> Self {
        GridShift { n, t: [0; MAX_DIM] }
    }

    pub fn is_standard(&self) -> bool {
        self.t[..self.n as usize].iter().all(|&v| v == 0)
    }

    /// All 3^n shifts for dimension `n`, standard grid first, in a fixed order.
    pub fn all(n: u8) -> Vec<GridShift> {
        let vals = [0i8, 1, -1];
        let mut out = Vec::with_capacity(3usize.pow(n as u32));
        match n {
            1 => {
                for &a in &vals {
                    out.push(GridShift { n: 1, t: [a, 0] });
                }
            }
            2 => {
                for &a in &vals {
                    for &b in &vals {
                        out.push(GridShift { n: 2, t: [a, b] });
                    }
                }
            }
            _ => {}
        }
        out
    }

    /// Shift of the grid containing the geometric halves of this grid's cubes.
    pub fn flip(&self) -> GridShift {
        let mut t = self.t;
        for v in t.iter_mut().take(self.n as usize) {
            *v = -*v;
        }
        GridShift { n: self.n, t }
    }
}

/// One cube `2^k([0,1)^n + m + t)`, half-open on every axis.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub index: [i64; MAX_DIM],
    pub shift: GridShift,
}

impl DyadicCube {
    pub fn new(level: i32, index: &[i64], shift: GridShift) -> Result<Self> {
        if index.len() != shift.n as usize {
            return Err(CoreError::InvalidParameter(format!(
                "index dimension {} does not match shift dimension {}",
                index.len(),
                shift.n
            )));
        }
        let mut arr = [0i64; MAX_DIM];
        arr[..index.len()].copy_from_slice(index);
        Ok(DyadicCube { level, index: arr, shift })
    }

    pub fn dim(&self) -> usize {
        self.shift.n as usize
    }

    /// Exact low endpoint on `axis`: `2^level (3 m + t) / 3`.
    pub fn low(&self, axis: usize) -> Result<Rat> {
        let scale = rat::pow2(self.level)?;
        let num = 3 * self.index[axis] as i128 + self.shift.t[axis] as i128;
        Ok(scale * rat::rat(num, 3))
    }

    pub fn high(&self, axis: usize) -> Result<Rat> {
        Ok(self.low(axis)? + rat::pow2(self.level)?)
    }

    /// Side length 2^level.
    pub fn side(&self) -> Result<Rat> {
        rat::pow2(self.level)
    }

    /// Volume |Q| = 2^{level * n}.
    pub fn volume(&self) -> Result<Rat> {
        rat::pow2(self.level * self.dim() as i32)
    }

    /// |Q|^{alpha/n} = 2^{level * alpha}, evaluated in f64.
    pub fn volume_pow(&self, alpha_over_n_times_n: f64) -> f64 {
        // |Q|^{s/n} with s = alpha: (2^{kn})^{alpha/n} = 2^{k alpha}.
        (2f64).powf(self.level as f64 * alpha_over_n_times_n)
    }

    /// Exact half-open containment test for a point given in f64 coordinates.
    pub fn contains_point(&self, x: &[f64]) -> Result<bool> {
        for axis in 0..self.dim() {
            let xi = rat::rat_from_f64(x[axis])?;
            if xi < self.low(axis)? || xi >= self.high(axis)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Exact containment of `other` inside `self` (as point sets).
    pub fn contains_cube(&self, other: &DyadicCube) -> Result<bool> {
        if self.dim() != other.dim() {
            return Ok(false);
        }
        for axis in 0..self.dim() {
            if other.low(axis)? < self.low(axis)? || other.high(axis)? > self.high(axis)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn intersects_cube(&self, other: &DyadicCube) -> Result<bool> {
        for axis in 0..self.dim() {
            if other.high(axis)? <= self.low(axis)? || other.low(axis)? >= self.high(axis)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The 2^n geometric halves of this cube. They tile it exactly and live in
    /// the flipped grid (third shifts change sign when the level drops by one).
    pub fn children(&self) -> Result<Vec<DyadicCube>> {
        let n = self.dim();
        let shift = self.shift.flip();
        let mut base = [0i64; MAX_DIM];
        for axis in 0..n {
            let m = self.index[axis]
                .checked_mul(2)
                .and_then(|v| v.checked_add(self.shift.t[axis] as i64))
                .ok_or_else(|| CoreError::OutOfWindow("child index overflow".into()))?;
            base[axis] = m;
        }
        let count = 1usize << n;
        let mut out = Vec::with_capacity(count);
        for bits in 0..count {
            let mut idx = base;
            for (axis, item) in idx.iter_mut().enumerate().take(n) {
                *item += ((bits >> axis) & 1) as i64;
            }
            out.push(DyadicCube { level: self.level - 1, index: idx, shift });
        }
        Ok(out)
    }

    /// The unique cube of side `2^{level+1}` tiled by `self` and its siblings.
    pub fn parent(&self) -> Result<DyadicCube> {
        let n = self.dim();
        let shift = self.shift.flip();
        let mut idx = [0i64; MAX_DIM];
        for axis in 0..n {
            let c = self.index[axis]
                .checked_add(self.shift.t[axis] as i64)
                .ok_or_else(|| CoreError::OutOfWindow("parent index overflow".into()))?;
            idx[axis] = c.div_euclid(2);
        }
        Ok(DyadicCube { level: self.level + 1, index: idx, shift })
    }

    /// Approximate endpoints for display / sampling.
    pub fn low_f64(&self, axis: usize) -> f64 {
        rat::to_f64(self.low(axis).expect("level within window"))
    }

    pub fn high_f64(&self, axis: usize) -> f64 {
        rat::to_f64(self.high(axis).expect("level within window"))
    }
}

impl fmt::Display for DyadicCube {
    /// Text format used in CSV/debug output: `t=(0,1);k=-2;m=(3,-1)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        let ts: Vec<String> = (0..n).map(|i| self.shift.t[i].to_string()).collect();
        let ms: Vec<String> = (0..n).map(|i| self.index[i].to_string()).collect();
        write!(f, "t=({});k={};m=({})", ts.join(","), self.level, ms.join(","))
    }
}

/// Locate the unique level-`k` cube of grid `shift` containing `x`.
pub fn locate(x: &[f64], k: i32, shift: GridShift) -> Result<DyadicCube> {
    let n = shift.n as usize;
    if x.len() != n {
        return Err(CoreError::InvalidParameter(format!(
            "point dimension {} does not match grid dimension {n}",
            x.len()
        )));
    }
    let scale = rat::pow2(k)?;
    let mut idx = [0i64; MAX_DIM];
    for axis in 0..n {
        let xi = rat::rat_from_f64(x[axis])?;
        // m = floor(x/2^k - t/3)
        let q = xi / scale - rat::rat(shift.t[axis] as i128, 3);
        let m = rat::floor(q);
        idx[axis] = i64::try_from(m)
            .map_err(|_| CoreError::OutOfWindow(format!("index {m} exceeds i64")))?;
    }
    Ok(DyadicCube { level: k, index: idx, shift })
}

/// Axis-parallel cube given by its low corner and side length, not necessarily
/// aligned to any grid. Input to the one-third cover.
#[derive(Clone, Copy, Debug)]
pub struct FreeCube {
    pub n: u8,
    pub low: [f64; MAX_DIM],
    pub side: f64,
}

impl FreeCube {
    pub fn new(low: &[f64], side: f64) -> Result<Self> {
        if low.is_empty() || low.len() > MAX_DIM {
            return Err(CoreError::UnsupportedDimension(low.len() as u8));
        }
        if !(side > 0.0) || !side.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "cube side must be positive and finite, got {side}"
            )));
        }
        let mut arr = [0.0; MAX_DIM];
        arr[..low.len()].copy_from_slice(low);
        Ok(FreeCube { n: low.len() as u8, low: arr, side })
    }
}

/// One-third-trick cover: a shifted-grid cube `P ⊇ Q` with `ℓ(P) ≤ 3ℓ(Q)`.
///
/// Follows the constructive proof: pick the level `j` with
/// `2^j/3 ≤ ℓ(Q) < 2^{j+1}/3`, take the standard tile with maximal overlap,
/// then translate by `2^j/3` per axis wherever a face cuts the interior of `Q`.
pub fn one_third_cover(q: &FreeCube) -> Result<(GridShift, DyadicCube)> {
    let n = q.n as usize;
    let ell = rat::rat_from_f64(q.side)?;
    // Unique j with 2^j <= 3*ell < 2^{j+1}.
    let three_ell = rat::rat(3, 1) * ell;
    let mut j = rat::to_f64(three_ell).log2().floor() as i32;
    // Exact adjustment in case the f64 log landed on the wrong side.
    while rat::pow2(j)? > three_ell {
        j -= 1;
    }
    while rat::pow2(j + 1)? <= three_ell {
        j += 1;
    }
    let s = rat::pow2(j)?;

    let mut t = [0i8; MAX_DIM];
    let mut m = [0i64; MAX_DIM];
    for axis in 0..n {
        let a = rat::rat_from_f64(q.low[axis])?;
        let b = a + ell;
        let m0 = rat::floor(a / s);
        let cut = (Rat::from_integer(m0) + Rat::from_integer(1)) * s;
        let third = s / rat::rat(3, 1);
        let (mi, ti) = if b <= cut {
            // Tile m0 already contains the interval.
            (m0, 0i8)
        } else {
            let overlap0 = cut - a;
            let overlap1 = b - cut;
            if overlap0 >= overlap1 {
                // Right face of tile m0 cuts Q: translate right by 2^j/3.
                debug_assert!(Rat::from_integer(m0) * s + third <= a);
                debug_assert!(b <= cut + third);
                (m0, 1i8)
            } else {
                // Left face of tile m0+1 cuts Q: translate left by 2^j/3.
                debug_assert!(cut - third <= a);
                debug_assert!(b <= cut + s - third);
                (m0 + 1, -1i8)
            }
        };
        m[axis] = i64::try_from(mi)
            .map_err(|_| CoreError::OutOfWindow(format!("cover index {mi} exceeds i64")))?;
        t[axis] = ti;
    }
    let shift = GridShift { n: q.n, t };
    let cube = DyadicCube { level: j, index: m, shift };
    Ok((shift, cube))
}

/// Inclusive level range used to finitize every `sup_Q` / `Σ_Q`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LevelWindow {
    pub k_min: i32,
    pub k_max: i32,
}

impl LevelWindow {
    pub fn new(k_min: i32, k_max: i32) -> Self {
        LevelWindow { k_min, k_max }
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    pub fn is_empty(&self) -> bool {
        self.k_min > self.k_max
    }
}

/// Axis-parallel half-open box given by exact rational corners.
#[derive(Clone, Debug)]
pub struct RatBox {
    pub n: u8,
    pub low: [Rat; MAX_DIM],
    pub high: [Rat; MAX_DIM],
}

impl RatBox {
    pub fn from_f64(low: &[f64], high: &[f64]) -> Result<Self> {
        if low.len() != high.len() || low.is_empty() || low.len() > MAX_DIM {
            return Err(CoreError::UnsupportedDimension(low.len() as u8));
        }
        let zero = Rat::from_integer(0);
        let mut lo = [zero; MAX_DIM];
        let mut hi = [zero; MAX_DIM];
        for i in 0..low.len() {
            lo[i] = rat::rat_from_f64(low[i])?;
            hi[i] = rat::rat_from_f64(high[i])?;
            if lo[i] >= hi[i] {
                return Err(CoreError::InvalidParameter("empty box".into()));
            }
        }
        Ok(RatBox { n: low.len() as u8, low: lo, high: hi })
    }
}

/// Every cube of the given shifts whose level lies in the window and which
/// intersects the box. Deterministic order: level ascending from `k_min`,
/// shifts in the order given, indices lexicographic.
pub fn enumerate(
    window: LevelWindow,
    bbox: &RatBox,
    shifts: &[GridShift],
) -> Result<Vec<DyadicCube>> {
    let mut out = Vec::new();
    if window.is_empty() {
        return Ok(out);
    }
    let n = bbox.n as usize;
    for k in window.levels() {
        let s = rat::pow2(k)?;
        for &shift in shifts {
            if shift.n as usize != n {
                return Err(CoreError::InvalidParameter(
                    "shift dimension does not match box dimension".into(),
                ));
            }
            // Per-axis index range of tiles intersecting [low, high).
            let mut lo_idx = [0i64; MAX_DIM];
            let mut hi_idx = [0i64; MAX_DIM];
            let mut empty = false;
            for axis in 0..n {
                let third = rat::rat(shift.t[axis] as i128, 3);
                let m_lo = rat::floor(bbox.low[axis] / s - third);
                // Cubes with low endpoint strictly below high: m < high/2^k - t/3.
                let upper = bbox.high[axis] / s - third;
                let fl = rat::floor(upper);
                let m_hi = if Rat::from_integer(fl) == upper { fl - 1 } else { fl };
                if m_hi < m_lo {
                    empty = true;
                    break;
                }
                lo_idx[axis] = i64::try_from(m_lo)
                    .map_err(|_| CoreError::OutOfWindow("enumeration index".into()))?;
                hi_idx[axis] = i64::try_from(m_hi)
                    .map_err(|_| CoreError::OutOfWindow("enumeration index".into()))?;
            }
            if empty {
                continue;
            }
            match n {
                1 => {
                    for m0 in lo_idx[0]..=hi_idx[0] {
                        out.push(DyadicCube { level: k, index: [m0, 0], shift });
                    }
                }
                2 => {
                    for m0 in lo_idx[0]..=hi_idx[0] {
                        for m1 in lo_idx[1]..=hi_idx[1] {
                            out.push(DyadicCube { level: k, index: [m0, m1], shift });
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    Ok(out)
}
