//! Globally adaptive Gauss–Kronrod (10/21) quadrature over finite,
//! semi-infinite and infinite ranges, plus the circle trapezoid rule.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::from(0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-300, rel_tol: 1e-11, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        QuadOptions { rel_tol, ..Default::default() }
    }
    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub converged: bool,
}

#[derive(Clone, Copy)]
enum Map {
    Identity,
    /// x = p + t/(1-t), t ∈ [0,1)
    Upper(f64),
    /// x = p - t/(1-t)
    Lower(f64),
}

impl Map {
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Identity => (t, 1.0),
            Map::Upper(p) => {
                let u = 1.0 - t;
                (p + t / u, 1.0 / (u * u))
            }
            Map::Lower(p) => {
                let u = 1.0 - t;
                (p - t / u, 1.0 / (u * u))
            }
        }
    }
}

struct Piece<V> {
    lo: f64,
    hi: f64,
    map: usize,
    value: V,
    error: f64,
}

impl<V> PartialEq for Piece<V> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<V> Eq for Piece<V> {}
impl<V> PartialOrd for Piece<V> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl<V> Ord for Piece<V> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn kronrod<V: QuadValue, F: FnMut(f64) -> Result<V>>(
    f: &mut F,
    map: Map,
    lo: f64,
    hi: f64,
) -> Result<(V, f64)> {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut eval = |t: f64| -> Result<V> {
        let (x, jac) = map.apply(t);
        let v = f(x)?;
        Ok(v * jac)
    };
    let fc = eval(c)?;
    let mut resk = fc * WGK[10];
    let mut resg = V::zero();
    let mut resabs = fc.magnitude() * WGK[10];
    let mut vals = [(V::zero(), V::zero()); 10];
    for i in 0..10 {
        let dx = h * XGK[i];
        let f1 = eval(c - dx)?;
        let f2 = eval(c + dx)?;
        vals[i] = (f1, f2);
        resk = resk + (f1 + f2) * WGK[i];
        resabs += (f1.magnitude() + f2.magnitude()) * WGK[i];
        if i % 2 == 1 {
            resg = resg + (f1 + f2) * WG[i / 2];
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc - mean).magnitude();
    for i in 0..10 {
        resasc += WGK[i] * ((vals[i].0 - mean).magnitude() + (vals[i].1 - mean).magnitude());
    }
    let resk_s = resk * h;
    resabs *= h.abs();
    resasc *= h.abs();
    let mut err = ((resk - resg) * h).magnitude();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((resk_s, err))
}

/// Integrate `f` over [lo, hi] (either end may be infinite), splitting at
/// interior `breaks`. Fallible integrand; returns the best estimate even when
/// the tolerance is not met (`converged = false`).
pub fn try_integrate_report<V, F>(
    mut f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    if lo == hi {
        return Ok(QuadResult { value: V::zero(), error: 0.0, converged: true });
    }
    if lo > hi {
        let r = try_integrate_report(f, hi, lo, breaks, opts)?;
        return Ok(QuadResult { value: r.value * -1.0, ..r });
    }
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > lo && *b < hi)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut knots = vec![lo];
    knots.extend(pts);
    knots.push(hi);
    if knots.len() == 2 && lo.is_infinite() && hi.is_infinite() {
        knots = vec![lo, 0.0, hi];
    }
    let mut maps = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut total = V::zero();
    let mut total_err = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (map, t0, t1) = if a.is_infinite() {
            (Map::Lower(b), 1.0, 0.0)
        } else if b.is_infinite() {
            (Map::Upper(a), 0.0, 1.0)
        } else {
            (Map::Identity, a, b)
        };
        let (t0, t1) = if t0 > t1 { (t1, t0) } else { (t0, t1) };
        maps.push(map);
        let (v, e) = kronrod(&mut f, map, t0, t1)?;
        total = total + v;
        total_err += e;
        heap.push(Piece { lo: t0, hi: t1, map: maps.len() - 1, value: v, error: e });
    }
    let tol = |t: &V| opts.abs_tol.max(opts.rel_tol * t.magnitude());
    let mut count = heap.len();
    while total_err > tol(&total) && count < opts.max_intervals {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) || (worst.hi - worst.lo) < 1e-15 * worst.hi.abs().max(1e-300) {
            // cannot subdivide further
            heap.push(Piece { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let map = maps[worst.map];
        let (v1, e1) = kronrod(&mut f, map, worst.lo, mid)?;
        let (v2, e2) = kronrod(&mut f, map, mid, worst.hi)?;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece { lo: worst.lo, hi: mid, map: worst.map, value: v1, error: e1 });
        heap.push(Piece { lo: mid, hi: worst.hi, map: worst.map, value: v2, error: e2 });
        count += 1;
    }
    // resum to limit drift from incremental updates
    let mut value = V::zero();
    let mut err = 0.0;
    for p in heap.iter() {
        value = value + p.value;
        err += p.error;
    }
    let err = err.max(total_err.max(0.0));
    Ok(QuadResult { value, error: err, converged: err <= tol(&value) })
}

/// Strict fallible integration: errors when the tolerance is not met.
pub fn try_integrate<V, F>(f: F, lo: f64, hi: f64, breaks: &[f64], opts: QuadOptions) -> Result<V>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    let r = try_integrate_report(f, lo, hi, breaks, opts)?;
    if r.converged {
        Ok(r.value)
    } else {
        let scale = r.value.magnitude().max(f64::MIN_POSITIVE);
        Err(Error::Quadrature { achieved: r.error / scale, requested: opts.rel_tol })
    }
}

/// Infallible integrand convenience wrapper.
pub fn integrate<V, F>(mut f: F, lo: f64, hi: f64, breaks: &[f64], opts: QuadOptions) -> Result<V>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    try_integrate(|x| Ok(f(x)), lo, hi, breaks, opts)
}

/// One axis of a nested multi-dimensional integration.
#[derive(Debug, Clone)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub breaks: Vec<f64>,
}

impl Axis {
    pub fn new(lo: f64, hi: f64) -> Self {
        Axis { lo, hi, breaks: Vec::new() }
    }
    pub fn with_breaks(lo: f64, hi: f64, breaks: &[f64]) -> Self {
        Axis { lo, hi, breaks: breaks.to_vec() }
    }
}

/// Nested adaptive integration over a box. The inner tolerance is tightened
/// relative to the outer one.
pub fn integrate_box<V, F>(f: &F, axes: &[Axis], opts: QuadOptions) -> Result<V>
where
    V: QuadValue,
    F: Fn(&[f64]) -> Result<V>,
{
    let mut point = vec![0.0; axes.len()];
    nested(f, axes, 0, &mut point, opts)
}

fn nested<V, F>(f: &F, axes: &[Axis], d: usize, point: &mut [f64], opts: QuadOptions) -> Result<V>
where
    V: QuadValue,
    F: Fn(&[f64]) -> Result<V>,
{
    let ax = &axes[d];
    if d + 1 == axes.len() {
        return try_integrate(
            |x| {
                point[d] = x;
                f(point)
            },
            ax.lo,
            ax.hi,
            &ax.breaks,
            opts,
        );
    }
    let inner = QuadOptions { rel_tol: opts.rel_tol * 0.1, abs_tol: opts.abs_tol * 0.1, ..opts };
    try_integrate(
        |x| {
            point[d] = x;
            nested(f, axes, d + 1, point, inner)
        },
        ax.lo,
        ax.hi,
        &ax.breaks,
        opts,
    )
}

/// (1/2πi)∮ f(z) dz over the circle |z − c| = r, counter-clockwise,
/// trapezoid rule with `nodes` points (node k at angle 2πk/nodes).
pub fn circle_trapezoid<F>(f: F, center: Complex64, radius: f64, nodes: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let mut acc = Complex64::from(0.0);
    for k in 0..nodes {
        let w = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / nodes as f64);
        acc += f(center + w) * w;
    }
    acc / nodes as f64
}
