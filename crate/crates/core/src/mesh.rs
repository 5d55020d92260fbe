//! Piecewise-constant functions and weights on a fine dyadic mesh.
//!
//! The mesh covers the box `[-2^K, 2^K)^n` with cells of side `2^-L`. Shifted
//! dyadic cubes have endpoints on thirds of cell boundaries, so all integration
//! is carried out on the 3x-refined grid, where every cube of every shift (at
//! levels >= -L) has exact integer endpoints.
//!
//! Two integration paths coexist: a fast `f64` path backed by refined prefix
//! sums (operators, constants), and an exact big-integer path (certificates,
//! the additivity and sparsity invariants).

use crate::error::{CoreError, Result};
use crate::exact::Dyadic;
use crate::grid::{DyadicCube, RatBox, MAX_DIM};
use crate::quad;
use crate::rat::{self, Rat};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

/// Mesh geometry: box `[-2^K, 2^K)^n`, cells of side `2^-L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub n: u8,
    /// Domain exponent K.
    pub k_exp: i32,
    /// Mesh level L.
    pub level: i32,
}

impl Domain {
    pub fn new(n: u8, k_exp: i32, level: i32) -> Result<Self> {
        if !(1..=MAX_DIM as u8).contains(&n) {
            return Err(CoreError::UnsupportedDimension(n));
        }
        if k_exp < 0 || level < 0 || k_exp + level > 40 {
            return Err(CoreError::InvalidParameter(format!(
                "unreasonable mesh size K={k_exp}, L={level}"
            )));
        }
        let d = Domain { n, k_exp, level };
        if d.n_cells() > 1 << 26 {
            return Err(CoreError::InvalidParameter(format!(
                "mesh would need {} cells",
                d.n_cells()
            )));
        }
        Ok(d)
    }

    /// Desk-scale defaults: K=5, L=10 in one dimension; a smaller box in two
    /// dimensions to keep full enumerations near 10^5 cells.
    pub fn default_for(n: u8) -> Result<Self> {
        match n {
            1 => Domain::new(1, 5, 10),
            2 => Domain::new(2, 2, 6),
            _ => Err(CoreError::UnsupportedDimension(n)),
        }
    }

    /// Cells per axis: 2^{K+L+1}.
    pub fn cells_per_axis(&self) -> i64 {
        1i64 << (self.k_exp + self.level + 1)
    }

    /// Cell-index offset of the origin: coordinate of cell c is
    /// (c - half_cells()) * 2^-L.
    pub fn half_cells(&self) -> i64 {
        1i64 << (self.k_exp + self.level)
    }

    pub fn n_cells(&self) -> usize {
        let c = self.cells_per_axis() as usize;
        match self.n {
            1 => c,
            _ => c * c,
        }
    }

    pub fn cell_side(&self) -> f64 {
        (2f64).powi(-self.level)
    }

    pub fn box_low(&self) -> f64 {
        -((1i64 << self.k_exp) as f64)
    }

    pub fn box_high(&self) -> f64 {
        (1i64 << self.k_exp) as f64
    }

    pub fn rat_box(&self) -> RatBox {
        let lo = vec![self.box_low(); self.n as usize];
        let hi = vec![self.box_high(); self.n as usize];
        RatBox::from_f64(&lo, &hi).expect("domain box is representable")
    }

    /// Flat index from per-axis cell indices.
    pub fn flat(&self, idx: &[i64]) -> usize {
        match self.n {
            1 => idx[0] as usize,
            _ => (idx[0] * self.cells_per_axis() + idx[1]) as usize,
        }
    }

    /// Cell center coordinates of a flat index.
    pub fn center(&self, flat: usize) -> [f64; MAX_DIM] {
        let h = self.cell_side();
        let half = self.half_cells() as f64;
        let mut out = [0.0; MAX_DIM];
        match self.n {
            1 => out[0] = (flat as f64 - half + 0.5) * h,
            _ => {
                let c = self.cells_per_axis() as usize;
                out[0] = ((flat / c) as f64 - half + 0.5) * h;
                out[1] = ((flat % c) as f64 - half + 0.5) * h;
            }
        }
        out
    }

    /// Refined cells per axis (3 per mesh cell).
    pub fn refined_per_axis(&self) -> i64 {
        3 * self.cells_per_axis()
    }

    /// Refined span `[r_lo, r_hi)` of a cube along `axis`, clipped to the box.
    /// Requires `level >= -L`, where every shifted cube has integer refined
    /// endpoints. Returns None when the cube misses the box on this axis.
    pub fn refined_span(&self, q: &DyadicCube, axis: usize) -> Result<Option<(i64, i64)>> {
        if q.level < -self.level {
            return Err(CoreError::OutOfWindow(format!(
                "cube level {} below mesh resolution -{}",
                q.level, self.level
            )));
        }
        let e = q.level + self.level; // >= 0
        if e > 62 {
            return Err(CoreError::OutOfWindow("cube too coarse for refined span".into()));
        }
        let unit = 1i128 << e;
        let lo = unit * (3 * q.index[axis] as i128 + q.shift.t[axis] as i128)
            + 3 * self.half_cells() as i128;
        let hi = lo + 3 * unit;
        let max = self.refined_per_axis() as i128;
        let lo_c = lo.max(0);
        let hi_c = hi.min(max);
        if lo_c >= hi_c {
            return Ok(None);
        }
        Ok(Some((lo_c as i64, hi_c as i64)))
    }

    /// Index (along one axis) of the grid-`t` level-`k` cube containing the
    /// center of cell `c`. Integer-only; exact for every shift.
    pub fn cell_cube_index(&self, c: i64, k: i32, t: i8) -> i64 {
        // Positions in units of 2^{-L-1}/3: center = 6(c - half) + 3,
        // cube low = 2^{k+L+1} (3m + t).
        let pos = 6 * (c - self.half_cells()) + 3;
        let unit = 1i128 << (k + self.level + 1);
        let num = pos as i128 - t as i128 * unit;
        num.div_euclid(3 * unit) as i64
    }
}

/// Behavior outside the mesh box (one-dimensional; the 2D mesh is always
/// compactly supported).
#[derive(Clone, Default)]
pub enum Tail {
    /// Vanishes outside the box.
    #[default]
    Zero,
    /// No registered behavior: touching the outside is a coverage error.
    Undefined,
    /// `coeff * |x|^exponent` for `|x| >= from` (both sides).
    Power { coeff: f64, exponent: f64, from: f64 },
    /// `coeff * x^exponent` for `x >= from`, zero for x below the box.
    PowerRight { coeff: f64, exponent: f64, from: f64 },
    /// Registered closed form, integrated by adaptive quadrature.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Tail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tail::Zero => write!(f, "Tail::Zero"),
            Tail::Undefined => write!(f, "Tail::Undefined"),
            Tail::Power { coeff, exponent, from } => {
                write!(f, "Tail::Power({coeff}|x|^{exponent}, |x|>={from})")
            }
            Tail::PowerRight { coeff, exponent, from } => {
                write!(f, "Tail::PowerRight({coeff}x^{exponent}, x>={from})")
            }
            Tail::Custom(_) => write!(f, "Tail::Custom"),
        }
    }
}

impl Tail {
    pub fn is_zero(&self) -> bool {
        matches!(self, Tail::Zero)
    }

    /// Pointwise value at `x` (assumed outside the box).
    pub fn value(&self, x: f64) -> Result<f64> {
        match self {
            Tail::Zero => Ok(0.0),
            Tail::Undefined => Err(CoreError::DomainCoverage(format!("tail value at {x}"))),
            Tail::Power { coeff, exponent, from } => {
                Ok(if x.abs() >= *from { coeff * x.abs().powf(*exponent) } else { 0.0 })
            }
            Tail::PowerRight { coeff, exponent, from } => {
                Ok(if x >= *from { coeff * x.powf(*exponent) } else { 0.0 })
            }
            Tail::Custom(g) => Ok(g(x)),
        }
    }

    /// Integral over `[lo, hi)`, an interval disjoint from the box interior.
    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        match self {
            Tail::Zero => Ok(0.0),
            Tail::Undefined => {
                Err(CoreError::DomainCoverage(format!("tail integral over [{lo},{hi})")))
            }
            Tail::Power { coeff, exponent, from } => {
                let mut total = 0.0;
                if hi > *from {
                    total += power_integral(*coeff, *exponent, lo.max(*from), hi);
                }
                if lo < -*from {
                    total += power_integral(*coeff, *exponent, *from, (-lo).max(*from))
                        - power_integral(*coeff, *exponent, *from, (-hi).max(*from));
                }
                Ok(total)
            }
            Tail::PowerRight { coeff, exponent, from } => {
                if hi <= *from {
                    Ok(0.0)
                } else {
                    Ok(power_integral(*coeff, *exponent, lo.max(*from), hi))
                }
            }
            Tail::Custom(g) => Ok(quad::adaptive(|x| g(x), lo, hi, 1e-10, 1e-12)),
        }
    }
}

/// ∫_a^b c x^s dx for 0 < a <= b.
fn power_integral(c: f64, s: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if (s + 1.0).abs() < 1e-14 {
        c * (b / a).ln()
    } else {
        c * (b.powf(s + 1.0) - a.powf(s + 1.0)) / (s + 1.0)
    }
}

/// Weight specification mini-language (JSON).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `|x|^exponent` (or `x^exponent` for one-sided support).
    Power {
        exponent: f64,
        #[serde(default)]
        support: PowerSupport,
    },
    Indicator {
        interval: [f64; 2],
    },
    Constant {
        value: f64,
    },
    /// Explicit cell values at the given mesh level over the domain box.
    Samples {
        level: i32,
        values: Vec<f64>,
    },
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// Factored pair component; realized by the gallery module.
    Factored {
        w1: Box<WeightSpec>,
        w2: Box<WeightSpec>,
        p: f64,
        q: f64,
        alpha: f64,
        /// Which component of the factored pair this spec denotes.
        component: FactoredComponent,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSupport {
    #[default]
    All,
    /// `|x| > 1`
    #[serde(rename = "abs_gt_1")]
    AbsGt1,
    /// `x > 0`
    Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactoredComponent {
    U,
    Sigma,
}

/// A function or weight sampled as piecewise constants at cell centers.
#[derive(Clone)]
pub struct MeshFunction {
    pub domain: Domain,
    values: Arc<Vec<f64>>,
    tail: Tail,
    refined_prefix: Arc<OnceLock<Vec<f64>>>,
    sat: Arc<OnceLock<Vec<f64>>>,
}

impl std::fmt::Debug for MeshFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "MeshFunction(n={}, K={}, L={}, tail={:?})",
            self.domain.n, self.domain.k_exp, self.domain.level, self.tail
        )
    }
}

impl MeshFunction {
    pub fn from_values(domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n_cells() {
            return Err(CoreError::MeshMismatch(format!(
                "expected {} cell values, got {}",
                domain.n_cells(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("mesh cell values"));
        }
        Ok(MeshFunction {
            domain,
            values: Arc::new(values),
            tail: Tail::Zero,
            refined_prefix: Arc::new(OnceLock::new()),
            sat: Arc::new(OnceLock::new()),
        })
    }

    pub fn from_fn(domain: Domain, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(domain.n_cells());
        for flat in 0..domain.n_cells() {
            let c = domain.center(flat);
            values.push(f(&c[..domain.n as usize]));
        }
        Self::from_values(domain, values)
    }

    pub fn constant(domain: Domain, c: f64) -> Result<Self> {
        Self::from_values(domain, vec![c; domain.n_cells()])
    }

    /// Indicator of the half-open box `[lo, hi)`, sampled at cell centers.
    pub fn indicator(domain: Domain, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let n = domain.n as usize;
        Self::from_fn(domain, |x| {
            for i in 0..n {
                if x[i] < lo[i] || x[i] >= hi[i] {
                    return 0.0;
                }
            }
            1.0
        })
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at_cell(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    /// Pointwise value (mesh cell value inside the box, tail outside).
    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        let d = &self.domain;
        let n = d.n as usize;
        let h_inv = (2f64).powi(d.level);
        let mut idx = [0i64; MAX_DIM];
        for axis in 0..n {
            if x[axis] < d.box_low() || x[axis] >= d.box_high() {
                if n == 1 {
                    return self.tail.value(x[0]);
                }
                return Ok(0.0);
            }
            idx[axis] = ((x[axis] * h_inv).floor() as i64) + d.half_cells();
        }
        Ok(self.values[d.flat(&idx[..n])])
    }

    /// Realize a weight specification on a mesh.
    pub fn from_spec(domain: Domain, spec: &WeightSpec) -> Result<Self> {
        match spec {
            WeightSpec::Power { exponent, support } => {
                let e = *exponent;
                let f = Self::from_fn(domain, |x| {
                    let r: f64 = match domain.n {
                        1 => x[0].abs(),
                        _ => (x[0] * x[0] + x[1] * x[1]).sqrt(),
                    };
                    let v = match support {
                        PowerSupport::All => r.powf(e),
                        PowerSupport::AbsGt1 => {
                            if r > 1.0 {
                                r.powf(e)
                            } else {
                                0.0
                            }
                        }
                        PowerSupport::Pos => {
                            if x[0] > 0.0 {
                                x[0].powf(e)
                            } else {
                                0.0
                            }
                        }
                    };
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                })?;
                let tail = if domain.n == 1 {
                    match support {
                        PowerSupport::All => Tail::Power { coeff: 1.0, exponent: e, from: 0.0 },
                        PowerSupport::AbsGt1 => Tail::Power { coeff: 1.0, exponent: e, from: 1.0 },
                        PowerSupport::Pos => Tail::PowerRight { coeff: 1.0, exponent: e, from: 0.0 },
                    }
                } else {
                    Tail::Zero
                };
                Ok(f.with_tail(tail))
            }
            WeightSpec::Indicator { interval } => {
                let lo = vec![interval[0]; domain.n as usize];
                let hi = vec![interval[1]; domain.n as usize];
                Self::indicator(domain, &lo, &hi)
            }
            WeightSpec::Constant { value } => Ok(Self::constant(domain, *value)?
                .with_tail(if domain.n == 1 {
                    Tail::Custom(Arc::new({
                        let v = *value;
                        move |_| v
                    }))
                } else {
                    Tail::Zero
                })),
            WeightSpec::Samples { level, values } => {
                let d = Domain::new(domain.n, domain.k_exp, *level)?;
                Self::from_values(d, values.clone())
            }
            WeightSpec::PiecewiseConstant { breakpoints, values } => {
                if domain.n != 1 {
                    return Err(CoreError::UnsupportedDimension(domain.n));
                }
                if breakpoints.len() + 1 != values.len() {
                    return Err(CoreError::InvalidParameter(
                        "piecewise_constant needs one more value than breakpoints".into(),
                    ));
                }
                let bp = breakpoints.clone();
                let vals = values.clone();
                Self::from_fn(domain, move |x| {
                    let mut i = 0;
                    while i < bp.len() && x[0] >= bp[i] {
                        i += 1;
                    }
                    vals[i]
                })
            }
            WeightSpec::Factored { .. } => Err(CoreError::InvalidParameter(
                "factored specs are realized by the gallery module".into(),
            )),
        }
    }

    /// Checks the standing weight convention: non-negative, positive on a set
    /// of positive measure.
    pub fn check_weight(&self) -> Result<()> {
        if self.values.iter().any(|&v| v < 0.0) {
            return Err(CoreError::InvalidParameter("weight has negative cells".into()));
        }
        if self.values.iter().all(|&v| v == 0.0) && self.tail.is_zero() {
            return Err(CoreError::InvalidParameter(
                "weight vanishes identically on the mesh".into(),
            ));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<MeshFunction> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        Self::from_values(self.domain, values)
    }

    /// Pointwise power `|f|^e`, mapping power tails exactly.
    pub fn powf(&self, e: f64) -> Result<MeshFunction> {
        let out = self.map(|v| v.abs().powf(e))?;
        let tail = match &self.tail {
            Tail::Zero => Tail::Zero,
            Tail::Undefined => Tail::Undefined,
            Tail::Power { coeff, exponent, from } => Tail::Power {
                coeff: coeff.abs().powf(e),
                exponent: exponent * e,
                from: *from,
            },
            Tail::PowerRight { coeff, exponent, from } => Tail::PowerRight {
                coeff: coeff.abs().powf(e),
                exponent: exponent * e,
                from: *from,
            },
            Tail::Custom(g) => {
                let g = g.clone();
                Tail::Custom(Arc::new(move |x| g(x).abs().powf(e)))
            }
        };
        Ok(out.with_tail(tail))
    }

    pub fn pointwise_mul(&self, other: &MeshFunction) -> Result<MeshFunction> {
        self.check_same_layout(other)?;
        let values: Vec<f64> =
            self.values.iter().zip(other.values.iter()).map(|(&a, &b)| a * b).collect();
        let out = Self::from_values(self.domain, values)?;
        let tail = match (&self.tail, &other.tail) {
            (Tail::Zero, _) | (_, Tail::Zero) => Tail::Zero,
            (Tail::Undefined, _) | (_, Tail::Undefined) => Tail::Undefined,
            (a, b) => {
                let a = a.clone();
                let b = b.clone();
                Tail::Custom(Arc::new(move |x| {
                    a.value(x).unwrap_or(0.0) * b.value(x).unwrap_or(0.0)
                }))
            }
        };
        Ok(out.with_tail(tail))
    }

    pub fn scale(&self, c: f64) -> Result<MeshFunction> {
        let out = self.map(|v| c * v)?;
        let tail = match &self.tail {
            Tail::Power { coeff, exponent, from } => {
                Tail::Power { coeff: c * coeff, exponent: *exponent, from: *from }
            }
            Tail::PowerRight { coeff, exponent, from } => {
                Tail::PowerRight { coeff: c * coeff, exponent: *exponent, from: *from }
            }
            Tail::Custom(g) => {
                let g = g.clone();
                Tail::Custom(Arc::new(move |x| c * g(x)))
            }
            t => t.clone(),
        };
        Ok(out.with_tail(tail))
    }

    pub fn add(&self, other: &MeshFunction) -> Result<MeshFunction> {
        self.check_same_layout(other)?;
        let values: Vec<f64> =
            self.values.iter().zip(other.values.iter()).map(|(&a, &b)| a + b).collect();
        Self::from_values(self.domain, values)
    }

    /// Restriction `f * χ_Q` for a mesh-aligned cube (standard shift,
    /// level >= -L). Used by the testing-constant machinery.
    pub fn restrict(&self, q: &DyadicCube) -> Result<MeshFunction> {
        if !q.shift.is_standard() {
            return Err(CoreError::InvalidParameter(
                "restrict requires a standard-grid cube (dyadic-only testing mode)".into(),
            ));
        }
        let d = &self.domain;
        let n = d.n as usize;
        let mut spans = [(0i64, 0i64); MAX_DIM];
        for axis in 0..n {
            match d.refined_span(q, axis)? {
                Some((lo, hi)) => spans[axis] = (lo / 3, hi / 3),
                None => return MeshFunction::constant(*d, 0.0),
            }
        }
        let mut values = vec![0.0; d.n_cells()];
        match n {
            1 => {
                for c in spans[0].0..spans[0].1 {
                    values[c as usize] = self.values[c as usize];
                }
            }
            _ => {
                let cpa = d.cells_per_axis();
                for c0 in spans[0].0..spans[0].1 {
                    for c1 in spans[1].0..spans[1].1 {
                        let i = (c0 * cpa + c1) as usize;
                        values[i] = self.values[i];
                    }
                }
            }
        }
        Self::from_values(*d, values)
    }

    pub fn check_same_layout(&self, other: &MeshFunction) -> Result<()> {
        if self.domain != other.domain {
            return Err(CoreError::MeshMismatch(format!(
                "{:?} vs {:?}",
                self.domain, other.domain
            )));
        }
        Ok(())
    }

    /// Cell decomposition of `Q ∩ box`: (cell value, measure of overlap)
    /// pairs, exact at third-point splits. Cells fully outside the cube are
    /// omitted; the part of Q outside the box is not represented (callers add
    /// tail terms where they apply).
    pub fn cube_cells(&self, q: &DyadicCube) -> Result<Vec<(f64, f64)>> {
        let d = &self.domain;
        if q.dim() != d.n as usize {
            return Err(CoreError::MeshMismatch("cube vs mesh dimension".into()));
        }
        if q.level < -d.level {
            // Sub-cell cube: constant value over it.
            let mut center = [0.0; MAX_DIM];
            for axis in 0..d.n as usize {
                center[axis] = rat::to_f64((q.low(axis)? + q.high(axis)?) / Rat::from_integer(2));
            }
            let n = d.n as usize;
            for axis in 0..n {
                if center[axis] < d.box_low() || center[axis] >= d.box_high() {
                    return Ok(Vec::new());
                }
            }
            let v = self.value_at(&center[..n])?;
            return Ok(vec![(v, rat::to_f64(q.volume()?))]);
        }
        let h = d.cell_side();
        let mut spans = [(0i64, 0i64); MAX_DIM];
        for axis in 0..d.n as usize {
            match d.refined_span(q, axis)? {
                Some(s) => spans[axis] = s,
                None => return Ok(Vec::new()),
            }
        }
        let mut out = Vec::new();
        match d.n {
            1 => {
                let (a, b) = spans[0];
                for c in (a / 3)..=((b - 1) / 3) {
                    let len = overlap_refined(a, b, c);
                    if len > 0 {
                        out.push((self.values[c as usize], len as f64 * h / 3.0));
                    }
                }
            }
            _ => {
                let cpa = d.cells_per_axis();
                let (a0, b0) = spans[0];
                let (a1, b1) = spans[1];
                for c0 in (a0 / 3)..=((b0 - 1) / 3) {
                    let l0 = overlap_refined(a0, b0, c0);
                    for c1 in (a1 / 3)..=((b1 - 1) / 3) {
                        let l1 = overlap_refined(a1, b1, c1);
                        if l0 > 0 && l1 > 0 {
                            out.push((
                                self.values[(c0 * cpa + c1) as usize],
                                (l0 * l1) as f64 * h * h / 9.0,
                            ));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Essential infimum of the function over `Q ∩ box` (minimum over cells
    /// with positive overlap).
    pub fn essential_inf_on_cube(&self, q: &DyadicCube) -> Result<f64> {
        let cells = self.cube_cells(q)?;
        let mut inf = f64::INFINITY;
        for (v, len) in cells {
            if len > 0.0 {
                inf = inf.min(v);
            }
        }
        // Parts of Q outside a zero-tail box have value 0.
        let vol: f64 = rat::to_f64(q.volume()?);
        let covered: f64 = self.cube_cells(q)?.iter().map(|&(_, l)| l).sum();
        if covered < vol * (1.0 - 1e-12) {
            inf = inf.min(match &self.tail {
                Tail::Zero => 0.0,
                _ => {
                    return Err(CoreError::DomainCoverage(
                        "essential infimum with non-zero tail".into(),
                    ))
                }
            });
        }
        Ok(inf)
    }

    // ----- fast f64 integration -----

    /// Raw refined prefix sums (1D), for the operator level scans.
    pub fn prefix_public(&self) -> &[f64] {
        self.prefix()
    }

    /// Raw refined summed-area table (2D), for the operator level scans.
    pub fn sat_public(&self) -> &[f64] {
        self.sat()
    }

    /// Prefix sums of cell integrals on the 3x-refined 1D grid.
    fn prefix(&self) -> &[f64] {
        self.refined_prefix.get_or_init(|| {
            let d = &self.domain;
            debug_assert_eq!(d.n, 1);
            let rpa = d.refined_per_axis() as usize;
            // Raw value sums; the h/3 cell length is applied once at read
            // time so constant functions integrate with a single rounding.
            let mut p = Vec::with_capacity(rpa + 1);
            p.push(0.0);
            let mut acc = 0.0;
            for r in 0..rpa {
                acc += self.values[r / 3];
                p.push(acc);
            }
            p
        })
    }

    /// Summed-area table on the refined 2D grid.
    fn sat(&self) -> &[f64] {
        self.sat.get_or_init(|| {
            let d = &self.domain;
            debug_assert_eq!(d.n, 2);
            let rp = d.refined_per_axis() as usize;
            let cpa = d.cells_per_axis() as usize;
            let w = rp + 1;
            let mut sat = vec![0.0; w * w];
            for r0 in 0..rp {
                let mut row = 0.0;
                for r1 in 0..rp {
                    row += self.values[(r0 / 3) * cpa + r1 / 3];
                    sat[(r0 + 1) * w + (r1 + 1)] = sat[r0 * w + (r1 + 1)] + row;
                }
            }
            sat
        })
    }

    /// Mesh-part integral over the exact rational interval `[lo, hi)` (1D),
    /// clipped to the box. Partial refined cells are weighted by exact overlap
    /// lengths converted once to f64.
    pub fn integral_interval_mesh(&self, lo: Rat, hi: Rat) -> Result<f64> {
        let d = &self.domain;
        if d.n != 1 {
            return Err(CoreError::UnsupportedDimension(d.n));
        }
        let box_lo = rat::rat_from_f64(d.box_low())?;
        let box_hi = rat::rat_from_f64(d.box_high())?;
        let lo = if lo < box_lo { box_lo } else { lo };
        let hi = if hi > box_hi { box_hi } else { hi };
        if lo >= hi {
            return Ok(0.0);
        }
        // Positions in refined units.
        let scale = Rat::from_integer(3) * rat::pow2(d.level)?;
        let off = Rat::from_integer(3 * d.half_cells() as i128);
        let plo = lo * scale + off;
        let phi = hi * scale + off;
        let h = d.cell_side();
        let p = self.prefix();
        let r0 = plo.ceil().to_integer();
        let r1 = phi.floor().to_integer();
        if r1 < r0 {
            // Entire interval inside one refined cell.
            let r = rat::floor(plo);
            let len = rat::to_f64(phi - plo);
            return Ok(self.values[(r / 3) as usize] * len * h / 3.0);
        }
        let mut total = p[r1 as usize] - p[r0 as usize];
        if plo < Rat::from_integer(r0) {
            let frac = rat::to_f64(Rat::from_integer(r0) - plo);
            total += self.values[((r0 - 1) / 3) as usize] * frac;
        }
        if phi > Rat::from_integer(r1) {
            let frac = rat::to_f64(phi - Rat::from_integer(r1));
            total += self.values[(r1 / 3) as usize] * frac;
        }
        Ok(total * h / 3.0)
    }

    /// Tail-part integral over `[lo, hi)` (the parts outside the box).
    pub fn integral_interval_tail(&self, lo: f64, hi: f64) -> Result<f64> {
        let d = &self.domain;
        if d.n != 1 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        if lo < d.box_low() {
            total += self.tail.integral(lo, hi.min(d.box_low()))?;
        }
        if hi > d.box_high() {
            total += self.tail.integral(lo.max(d.box_high()), hi)?;
        }
        Ok(total)
    }

    /// Full integral over `[lo, hi)`: mesh part plus tails (1D).
    pub fn integral_interval(&self, lo: Rat, hi: Rat) -> Result<f64> {
        let mesh = self.integral_interval_mesh(lo, hi)?;
        let tail = self.integral_interval_tail(rat::to_f64(lo), rat::to_f64(hi))?;
        Ok(mesh + tail)
    }

    /// Fast integral over a cube (any shift, level >= -L), including tails.
    pub fn integral_cube(&self, q: &DyadicCube) -> Result<f64> {
        let d = &self.domain;
        match d.n {
            1 => self.integral_interval(q.low(0)?, q.high(0)?),
            _ => {
                let sat = self.sat();
                let w = d.refined_per_axis() as usize + 1;
                let mut span = [(0i64, 0i64); MAX_DIM];
                for axis in 0..2 {
                    match d.refined_span(q, axis)? {
                        Some(s) => span[axis] = s,
                        None => return Ok(0.0),
                    }
                }
                let (a0, b0) = (span[0].0 as usize, span[0].1 as usize);
                let (a1, b1) = (span[1].0 as usize, span[1].1 as usize);
                let h = d.cell_side();
                let raw =
                    sat[b0 * w + b1] - sat[a0 * w + b1] - sat[b0 * w + a1] + sat[a0 * w + a1];
                Ok(raw * h * h / 9.0)
            }
        }
    }

    /// Integral over the whole box.
    pub fn integral_box(&self) -> f64 {
        let d = &self.domain;
        let cellvol = d.cell_side().powi(d.n as i32);
        self.values.iter().sum::<f64>() * cellvol
    }

    // ----- exact integration -----

    /// Exact integral over `[lo, hi)` scaled by 3 (1D), mesh part only. The
    /// scaling clears the thirds so the result is an exact dyadic number.
    pub fn integral_exact_scaled(&self, lo: Rat, hi: Rat) -> Result<Dyadic> {
        let d = &self.domain;
        if d.n != 1 {
            return Err(CoreError::UnsupportedDimension(d.n));
        }
        if !self.tail.is_zero() {
            let box_lo = rat::rat_from_f64(d.box_low())?;
            let box_hi = rat::rat_from_f64(d.box_high())?;
            if lo < box_lo || hi > box_hi {
                return Err(CoreError::DomainCoverage(
                    "exact integrals require zero tails beyond the box".into(),
                ));
            }
        }
        let box_lo = rat::rat_from_f64(d.box_low())?;
        let box_hi = rat::rat_from_f64(d.box_high())?;
        let lo = if lo < box_lo { box_lo } else { lo };
        let hi = if hi > box_hi { box_hi } else { hi };
        let mut acc = Dyadic::zero();
        if lo >= hi {
            return Ok(acc);
        }
        let scale = Rat::from_integer(3) * rat::pow2(d.level)?;
        let off = Rat::from_integer(3 * d.half_cells() as i128);
        let plo = lo * scale + off;
        let phi = hi * scale + off;
        let r0 = plo.ceil().to_integer() as i64;
        let r1 = phi.floor().to_integer() as i64;
        // 3 * len of a full refined cell is 2^-L.
        if r1 >= r0 {
            // Group full refined cells by value cell.
            let mut r = r0;
            while r < r1 {
                let v = r / 3;
                let next = ((v + 1) * 3).min(r1);
                let count = next - r;
                let contrib = Dyadic::from_f64(self.values[v as usize])
                    .mul_int(count)
                    .mul_pow2(-(d.level as i64));
                acc.add_assign(&contrib);
                r = next;
            }
            if plo < Rat::from_integer(r0 as i128) {
                acc.add_assign(&self.exact_partial(plo, Rat::from_integer(r0 as i128), (r0 - 1) / 3)?);
            }
            if phi > Rat::from_integer(r1 as i128) {
                acc.add_assign(&self.exact_partial(Rat::from_integer(r1 as i128), phi, r1 / 3)?);
            }
        } else {
            let cell = rat::floor(plo) / 3;
            acc.add_assign(&self.exact_partial(plo, phi, cell as i64)?);
        }
        Ok(acc)
    }

    /// Exact contribution of a sub-refined-cell piece: value * 3*len where
    /// 3*len = (phi - plo) * 2^-L in refined units.
    fn exact_partial(&self, plo: Rat, phi: Rat, value_cell: i64) -> Result<Dyadic> {
        let diff = phi - plo;
        // diff is a rational with power-of-two denominator (cube endpoints are
        // thirds times dyadics; scaled by 3*2^L the thirds cleared).
        let num = *diff.numer();
        let den = *diff.denom();
        if den & (den - 1) != 0 {
            return Err(CoreError::OutOfWindow(
                "non-dyadic partial overlap in exact integration".into(),
            ));
        }
        let shift = den.trailing_zeros() as i64;
        let v = Dyadic::from_f64(self.values[value_cell as usize]);
        Ok(v
            .mul_int(i64::try_from(num).map_err(|_| {
                CoreError::OutOfWindow("partial overlap numerator exceeds i64".into())
            })?)
            .mul_pow2(-(d_level(self) as i64) - shift))
    }

    /// Exact integral (times 3^n) over a cube; requires zero tails where the
    /// cube leaves the box.
    pub fn integral_cube_exact_scaled(&self, q: &DyadicCube) -> Result<Dyadic> {
        let d = &self.domain;
        match d.n {
            1 => self.integral_exact_scaled(q.low(0)?, q.high(0)?),
            _ => {
                // Separable: sum over value cells of v * (3*len0) * (3*len1).
                let mut spans = [(0i64, 0i64); MAX_DIM];
                for axis in 0..2 {
                    match d.refined_span(q, axis)? {
                        Some(s) => spans[axis] = s,
                        None => return Ok(Dyadic::zero()),
                    }
                }
                let cpa = d.cells_per_axis();
                let mut acc = Dyadic::zero();
                let (a0, b0) = spans[0];
                let (a1, b1) = spans[1];
                for c0 in (a0 / 3)..=((b0 - 1) / 3) {
                    let len0 = overlap_refined(a0, b0, c0);
                    for c1 in (a1 / 3)..=((b1 - 1) / 3) {
                        let len1 = overlap_refined(a1, b1, c1);
                        let v = Dyadic::from_f64(self.values[(c0 * cpa + c1) as usize]);
                        acc.add_assign(
                            &v.mul_int(len0 * len1).mul_pow2(-2 * (d.level as i64)),
                        );
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Exact integral of `f * g` (times 3^n) over a cube. Products of two f64
    /// cell values are still exact dyadics.
    pub fn integral2_cube_exact_scaled(&self, g: &MeshFunction, q: &DyadicCube) -> Result<Dyadic> {
        self.check_same_layout(g)?;
        let d = &self.domain;
        match d.n {
            1 => {
                let (plo, phi) = match d.refined_span(q, 0)? {
                    Some(s) => s,
                    None => return Ok(Dyadic::zero()),
                };
                let mut acc = Dyadic::zero();
                for c in (plo / 3)..=((phi - 1) / 3) {
                    let len = overlap_refined(plo, phi, c);
                    let v = Dyadic::from_f64(self.values[c as usize])
                        .mul(&Dyadic::from_f64(g.values[c as usize]));
                    acc.add_assign(&v.mul_int(len).mul_pow2(-(d.level as i64)));
                }
                Ok(acc)
            }
            _ => {
                let mut spans = [(0i64, 0i64); MAX_DIM];
                for axis in 0..2 {
                    match d.refined_span(q, axis)? {
                        Some(s) => spans[axis] = s,
                        None => return Ok(Dyadic::zero()),
                    }
                }
                let cpa = d.cells_per_axis();
                let mut acc = Dyadic::zero();
                let (a0, b0) = spans[0];
                let (a1, b1) = spans[1];
                for c0 in (a0 / 3)..=((b0 - 1) / 3) {
                    let len0 = overlap_refined(a0, b0, c0);
                    for c1 in (a1 / 3)..=((b1 - 1) / 3) {
                        let len1 = overlap_refined(a1, b1, c1);
                        let i = (c0 * cpa + c1) as usize;
                        let v = Dyadic::from_f64(self.values[i])
                            .mul(&Dyadic::from_f64(g.values[i]));
                        acc.add_assign(&v.mul_int(len0 * len1).mul_pow2(-2 * (d.level as i64)));
                    }
                }
                Ok(acc)
            }
        }
    }
}

fn d_level(f: &MeshFunction) -> i32 {
    f.domain.level
}

/// Refined-cell overlap count of value cell `c` with refined range `[a, b)`.
fn overlap_refined(a: i64, b: i64, c: i64) -> i64 {
    let lo = (3 * c).max(a);
    let hi = (3 * c + 3).min(b);
    (hi - lo).max(0)
}

// ----- spec-facing operations -----

/// ⨍_Q f dx. Exact cell-splitting at third-points; tails handled per their
/// descriptor; a cube fully outside a zero-tail domain averages to 0.
pub fn average(f: &MeshFunction, q: &DyadicCube) -> Result<f64> {
    let vol = rat::to_f64(q.volume()?);
    Ok(integral_over_cube(f, q)? / vol)
}

fn integral_over_cube(f: &MeshFunction, q: &DyadicCube) -> Result<f64> {
    if f.domain.n as usize != q.dim() {
        return Err(CoreError::MeshMismatch("cube dimension vs mesh dimension".into()));
    }
    match f.domain.n {
        1 => f.integral_interval(q.low(0)?, q.high(0)?),
        _ => f.integral_cube(q),
    }
}

/// ⨍_Q f dσ = (∫_Q f σ)/σ(Q); 0 when σ(Q) = 0.
pub fn weighted_average(f: &MeshFunction, sigma: &MeshFunction, q: &DyadicCube) -> Result<f64> {
    let fs = f.pointwise_mul(sigma)?;
    let num = integral_over_cube(&fs, q)?;
    let den = integral_over_cube(sigma, q)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// σ(Q) = ∫_Q σ dx.
pub fn measure(sigma: &MeshFunction, q: &DyadicCube) -> Result<f64> {
    integral_over_cube(sigma, q)
}

pub enum NormMode {
    /// (∫ |f|^p w^p dx)^{1/p}
    Multiplier,
    /// (∫ |f|^p w dx)^{1/p}
    Measure,
}

/// L^p norm of f against w over the whole box, in either convention.
pub fn lp_norm(f: &MeshFunction, w: &MeshFunction, p: f64, mode: NormMode) -> Result<f64> {
    if p < 1.0 {
        return Err(CoreError::InvalidParameter(format!("p = {p} < 1")));
    }
    f.check_same_layout(w)?;
    let d = &f.domain;
    let cellvol = d.cell_side().powi(d.n as i32);
    let mut acc = 0.0;
    for (a, b) in f.values.iter().zip(w.values.iter()) {
        if !a.is_finite() {
            return Err(CoreError::NonFinite("lp_norm input"));
        }
        let wfac = match mode {
            NormMode::Multiplier => b.powf(p),
            NormMode::Measure => *b,
        };
        acc += a.abs().powf(p) * wfac;
    }
    Ok((acc * cellvol).powf(1.0 / p))
}

/// Exact σ-measure of a cube as a big rational (dyadic numerator over 3^n).
pub fn measure_exact(sigma: &MeshFunction, q: &DyadicCube) -> Result<num::BigRational> {
    let scaled = sigma.integral_cube_exact_scaled(q)?;
    let three_n = num::BigInt::from(3i64.pow(sigma.domain.n as u32));
    let r = dyadic_to_rational(&scaled);
    Ok(r / num::BigRational::from_integer(three_n))
}

pub fn dyadic_to_rational(d: &Dyadic) -> num::BigRational {
    let two = num::BigInt::from(2);
    let (mant, exp) = d.clone().into_parts();
    let base = num::BigRational::from_integer(mant);
    if exp >= 0 {
        base * num::BigRational::from_integer(two.pow(exp as u32))
    } else {
        base / num::BigRational::from_integer(two.pow((-exp) as u32))
    }
}

/// A pair of weights (u, σ) in the two-measure formulation.
#[derive(Clone, Debug)]
pub struct WeightPair {
    pub u: MeshFunction,
    pub sigma: MeshFunction,
}

impl WeightPair {
    pub fn new(u: MeshFunction, sigma: MeshFunction) -> Result<Self> {
        u.check_same_layout(&sigma)?;
        u.check_weight()?;
        sigma.check_weight()?;
        Ok(WeightPair { u, sigma })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShift;

    fn dom() -> Domain {
        Domain::new(1, 2, 6).unwrap()
    }

    fn cube1(k: i32, m: i64, t: i8) -> DyadicCube {
        DyadicCube::new(k, &[m], GridShift::new(&[t]).unwrap()).unwrap()
    }

    #[test]
    fn average_indicator_on_doubled_cube() {
        let f = MeshFunction::indicator(dom(), &[0.0], &[1.0]).unwrap();
        let q = cube1(1, 0, 0); // [0, 2)
        assert!((average(&f, &q).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn average_shifted_cube_rational_overlap() {
        // f = χ_[0,1), Q = [1/3, 4/3): overlap 2/3.
        let f = MeshFunction::indicator(dom(), &[0.0], &[1.0]).unwrap();
        let q = cube1(0, 0, 1);
        assert!((average(&f, &q).unwrap() - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn average_of_constant_is_constant() {
        let f = MeshFunction::constant(dom(), 2.75).unwrap();
        for (k, m, t) in [(0, 0, 0), (-3, 5, 1), (1, -1, -1)] {
            let q = cube1(k, m, t);
            assert!((average(&f, &q).unwrap() - 2.75).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_average_examples() {
        let d = dom();
        let f = MeshFunction::indicator(d, &[0.0], &[0.5]).unwrap();
        let sigma = MeshFunction::indicator(d, &[0.0], &[0.5]).unwrap();
        let q = cube1(0, 0, 0);
        assert!((weighted_average(&f, &sigma, &q).unwrap() - 1.0).abs() < 1e-14);

        // f = 2 on [0,.5), 1 on [.5,1); σ = 3 on [0,.5), 1 on [.5,1): avg = 1.75.
        let f = MeshFunction::from_fn(d, |x| if x[0] >= 0.0 && x[0] < 0.5 { 2.0 } else if x[0] < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let s = MeshFunction::from_fn(d, |x| if x[0] >= 0.0 && x[0] < 0.5 { 3.0 } else if x[0] < 1.0 { 1.0 } else { 0.0 }).unwrap();
        assert!((weighted_average(&f, &s, &q).unwrap() - 1.75).abs() < 1e-13);

        // σ ≡ 1 reduces to the plain average.
        let ones = MeshFunction::constant(d, 1.0).unwrap();
        let g = MeshFunction::indicator(d, &[0.0], &[1.0]).unwrap();
        let q2 = cube1(1, 0, 0);
        assert!(
            (weighted_average(&g, &ones, &q2).unwrap() - average(&g, &q2).unwrap()).abs() < 1e-14
        );
    }

    #[test]
    fn weighted_average_zero_mass_convention() {
        let d = dom();
        let f = MeshFunction::constant(d, 5.0).unwrap();
        let sigma = MeshFunction::indicator(d, &[2.0], &[3.0]).unwrap();
        let q = cube1(0, 0, 0); // σ(Q) = 0
        assert_eq!(weighted_average(&f, &sigma, &q).unwrap(), 0.0);
    }

    #[test]
    fn measure_examples() {
        let d = dom();
        let ones = MeshFunction::constant(d, 1.0).unwrap();
        let q = cube1(0, 0, 0);
        assert!((measure(&ones, &q).unwrap() - 1.0).abs() < 1e-14);

        let off = MeshFunction::indicator(d, &[2.0], &[3.0]).unwrap();
        assert_eq!(measure(&off, &q).unwrap(), 0.0);
    }

    #[test]
    fn measure_power_weight_matches_antiderivative() {
        // σ = |x|^{-1/3} for |x|>1 sampled at L=12: σ([1,2)) ≈ (3/2)(2^{2/3}-1).
        let d = Domain::new(1, 2, 12).unwrap();
        let spec = WeightSpec::Power { exponent: -1.0 / 3.0, support: PowerSupport::AbsGt1 };
        let sigma = MeshFunction::from_spec(d, &spec).unwrap();
        let q = cube1(0, 1, 0); // [1, 2)
        let exact = 1.5 * ((2f64).powf(2.0 / 3.0) - 1.0);
        assert!((measure(&sigma, &q).unwrap() - exact).abs() < 1e-3);
    }

    #[test]
    fn lp_norm_examples() {
        let d = dom();
        let f = MeshFunction::indicator(d, &[0.0], &[1.0]).unwrap();
        let ones = MeshFunction::constant(d, 1.0).unwrap();
        assert!((lp_norm(&f, &ones, 2.0, NormMode::Multiplier).unwrap() - 1.0).abs() < 1e-13);

        let f2 = f.scale(2.0).unwrap();
        let sigma = MeshFunction::indicator(d, &[0.0], &[1.0]).unwrap();
        assert!((lp_norm(&f2, &sigma, 2.0, NormMode::Measure).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn norm_homogeneity() {
        let d = dom();
        let f =
            MeshFunction::from_fn(d, |x| if x[0] > -1.0 && x[0] < 2.0 { x[0].cos() + 1.5 } else { 0.3 })
                .unwrap();
        let w = MeshFunction::from_fn(d, |x| 0.5 + x[0].abs().min(2.0)).unwrap();
        let n1 = lp_norm(&f, &w, 3.0, NormMode::Multiplier).unwrap();
        let cf = f.scale(-3.0).unwrap();
        let n2 = lp_norm(&cf, &w, 3.0, NormMode::Multiplier).unwrap();
        assert!((n2 - 3.0 * n1).abs() < 1e-12 * n1.max(1.0));
    }

    #[test]
    fn additivity_exact() {
        let d = dom();
        let sigma = MeshFunction::from_fn(d, |x| 0.1 + (x[0] * 37.0).sin().abs()).unwrap();
        for (k, m, t) in [(0, 0, 0), (1, -1, 1), (-2, 3, -1)] {
            let q = cube1(k, m, t);
            let total = sigma.integral_cube_exact_scaled(&q).unwrap();
            let mut sum = Dyadic::zero();
            for c in q.children().unwrap() {
                sum.add_assign(&sigma.integral_cube_exact_scaled(&c).unwrap());
            }
            assert_eq!(total.cmp(&sum), std::cmp::Ordering::Equal);
        }
    }

    #[test]
    fn additivity_exact_2d() {
        let d = Domain::new(2, 1, 3).unwrap();
        let sigma = MeshFunction::from_fn(d, |x| 0.2 + (3.0 * x[0] - x[1]).sin().abs()).unwrap();
        let q = DyadicCube::new(0, &[0, -1], GridShift::new(&[1, -1]).unwrap()).unwrap();
        let total = sigma.integral_cube_exact_scaled(&q).unwrap();
        let mut sum = Dyadic::zero();
        for c in q.children().unwrap() {
            sum.add_assign(&sigma.integral_cube_exact_scaled(&c).unwrap());
        }
        assert_eq!(total.cmp(&sum), std::cmp::Ordering::Equal);
    }

    #[test]
    fn outside_domain_zero_tail_averages_zero() {
        let d = dom();
        let f = MeshFunction::indicator(d, &[0.0], &[1.0]).unwrap();
        let q = cube1(3, 10, 0); // [80, 88), far outside [-4, 4)
        assert_eq!(average(&f, &q).unwrap(), 0.0);
    }

    #[test]
    fn outside_domain_undefined_tail_errors() {
        let d = dom();
        let f = MeshFunction::indicator(d, &[0.0], &[1.0]).unwrap().with_tail(Tail::Undefined);
        let q = cube1(3, 10, 0);
        assert!(average(&f, &q).is_err());
    }

    #[test]
    fn power_tail_integrates_beyond_box() {
        let d = dom(); // box [-4, 4)
        let spec = WeightSpec::Power { exponent: -2.0, support: PowerSupport::AbsGt1 };
        let sigma = MeshFunction::from_spec(d, &spec).unwrap();
        // ∫_4^8 x^{-2} dx = 1/4 - 1/8 = 0.125 via the tail.
        let got = sigma
            .integral_interval(rat::rat_from_f64(4.0).unwrap(), rat::rat_from_f64(8.0).unwrap())
            .unwrap();
        assert!((got - 0.125).abs() < 1e-12);
    }

    #[test]
    fn weight_spec_json_round_trip() {
        let js = r#"{"kind":"power","exponent":-0.333,"support":"abs_gt_1"}"#;
        let spec: WeightSpec = serde_json::from_str(js).unwrap();
        matches!(spec, WeightSpec::Power { .. });
        let js2 = r#"{"kind":"indicator","interval":[2,3]}"#;
        let spec2: WeightSpec = serde_json::from_str(js2).unwrap();
        let f = MeshFunction::from_spec(dom(), &spec2).unwrap();
        let q = cube1(2, 0, 0); // [0,4)
        assert!((measure(&f, &q).unwrap() - 1.0).abs() < 1e-13);
    }
}
