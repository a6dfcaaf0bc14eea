//! Discrepancy and the inequalities built on it.
//!
//! Discrepancy here is always the *extreme* discrepancy: the supremum over
//! all subintervals (boxes) of `[0,1)^d`, not only those anchored at the
//! origin. The star variant is available for 1D via [`star_discrepancy_1d`].
//!
//! Points are reduced modulo one into `[0,1)` when a [`PointSet`] is built.
//! Witness intervals carry their own open/closed flags; the sup is attained
//! by a closed interval (for an excess of points) or an open one (for a
//! deficit), so both variants are scanned.

use num_complex::Complex64;
use rayon::prelude::*;
use rug::{Float, Rational};
use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::rng::substream;
use rand::Rng;

/// Exact 2D discrepancy is `O(N³)`; larger sets go through
/// [`grid_discrepancy_2d`].
pub const MAX_EXACT_2D_POINTS: usize = 5000;

#[inline]
fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // -1e-300 reduces to 1.0 in f64; fold it onto 0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Nonempty finite point set in `[0,1)` or `[0,1)²`.
#[derive(Clone, Debug, PartialEq)]
pub enum PointSet {
    D1(Vec<f64>),
    D2(Vec<[f64; 2]>),
}

impl PointSet {
    pub fn from_sequence_1d<I: IntoIterator<Item = f64>>(xs: I) -> Result<Self> {
        let pts: Vec<f64> = xs.into_iter().map(frac).collect();
        if pts.is_empty() {
            return Err(LabError::Domain("point set must be nonempty".into()));
        }
        if pts.iter().any(|x| !x.is_finite()) {
            return Err(LabError::Domain("point set has non-finite coordinates".into()));
        }
        Ok(PointSet::D1(pts))
    }

    pub fn from_sequence_2d<I: IntoIterator<Item = [f64; 2]>>(xs: I) -> Result<Self> {
        let pts: Vec<[f64; 2]> = xs.into_iter().map(|[x, y]| [frac(x), frac(y)]).collect();
        if pts.is_empty() {
            return Err(LabError::Domain("point set must be nonempty".into()));
        }
        if pts.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(LabError::Domain("point set has non-finite coordinates".into()));
        }
        Ok(PointSet::D2(pts))
    }

    pub fn dim(&self) -> usize {
        match self {
            PointSet::D1(_) => 1,
            PointSet::D2(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PointSet::D1(p) => p.len(),
            PointSet::D2(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn half_open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: false,
        }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Witness {
    Interval(Interval),
    Box([Interval; 2]),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscrepancyResult {
    pub value: f64,
    pub witness: Witness,
}

/// Exact `f64` value as a rational.
pub(crate) fn exact(x: f64) -> Rational {
    Rational::from_f64(x).expect("finite coordinate")
}

/// Nearest `f64` to a rational.
pub(crate) fn round_to_f64(q: &Rational) -> f64 {
    Float::with_val(53, q).to_f64()
}

fn exact_length(iv: &Interval) -> Rational {
    exact(iv.hi) - exact(iv.lo)
}

/// `|#{points in J}/N − λ(J)|` for a witness `J`, in exact arithmetic.
pub fn exact_deviation(ps: &PointSet, witness: &Witness) -> Option<Rational> {
    let (count, n, measure) = match (ps, witness) {
        (PointSet::D1(pts), Witness::Interval(iv)) => (
            pts.iter().filter(|&&x| iv.contains(x)).count(),
            pts.len(),
            exact_length(iv),
        ),
        (PointSet::D2(pts), Witness::Box([bx, by])) => {
            let count = pts.iter().filter(|p| bx.contains(p[0]) && by.contains(p[1])).count();
            (count, pts.len(), exact_length(bx) * exact_length(by))
        }
        _ => return None,
    };
    Some((Rational::from((count as u64, n as u64)) - measure).abs())
}

/// `|#{points in J}/N − λ(J)|` for a witness `J`, correctly rounded.
pub fn deviation(ps: &PointSet, witness: &Witness) -> f64 {
    exact_deviation(ps, witness).map_or(f64::NAN, |q| round_to_f64(&q))
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Width of the band below an `f64` maximum whose members are re-scored
/// exactly; float scores here carry errors near `1e-15`.
const EXACT_BAND: f64 = 1e-12;

/// Extreme discrepancy of a 1D set.
///
/// With `x_(1) ≤ … ≤ x_(N)` sorted, `D_N = 1/N + max(i/N − x_(i)) − min(i/N − x_(i))`.
/// The maximizing index `i` and minimizing index `j` give the witness: the
/// closed interval `[x_(j), x_(i)]` when `j ≤ i`, else the open `(x_(i), x_(j))`.
/// Indices whose float score is within [`EXACT_BAND`] of the extremes are
/// compared exactly, so the result is the correctly rounded supremum.
pub fn discrepancy_1d(ps: &PointSet) -> Result<DiscrepancyResult> {
    let PointSet::D1(pts) = ps else {
        return Err(LabError::Domain("discrepancy_1d needs a 1D point set".into()));
    };
    let xs = sorted(pts);
    let n = xs.len() as u64;
    let v: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| (k + 1) as f64 / n as f64 - x)
        .collect();
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let score = |k: usize| Rational::from(((k + 1) as u64, n)) - exact(xs[k]);
    let (mut imax, mut qmax) = (0usize, None::<Rational>);
    let (mut imin, mut qmin) = (0usize, None::<Rational>);
    for (k, &vk) in v.iter().enumerate() {
        if vk >= vmax - EXACT_BAND {
            let q = score(k);
            // >= keeps the last of a tie group
            if qmax.as_ref().is_none_or(|m| q >= *m) {
                imax = k;
                qmax = Some(q);
            }
        }
        if vk <= vmin + EXACT_BAND {
            let q = score(k);
            // < keeps the first
            if qmin.as_ref().is_none_or(|m| q < *m) {
                imin = k;
                qmin = Some(q);
            }
        }
    }
    let interval = if imin <= imax {
        Interval::closed(xs[imin], xs[imax])
    } else {
        Interval::open(xs[imax], xs[imin])
    };
    let witness = Witness::Interval(interval);
    Ok(DiscrepancyResult {
        value: deviation(ps, &witness),
        witness,
    })
}

/// Star discrepancy `sup_{0≤u≤1} |#{x < u}/N − u|` of a 1D set (`D ≤ 2·D*`).
pub fn star_discrepancy_1d(ps: &PointSet) -> Result<f64> {
    let PointSet::D1(pts) = ps else {
        return Err(LabError::Domain("star_discrepancy_1d needs a 1D point set".into()));
    };
    let xs = sorted(pts);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(k, &x)| ((k + 1) as f64 / n - x).max(x - k as f64 / n))
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug)]
struct BoxCandidate {
    score: Rational,
    x: Interval,
    y: Interval,
}

fn better(a: Option<BoxCandidate>, b: Option<BoxCandidate>) -> Option<BoxCandidate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if a.score >= b.score { a } else { b }),
        (a, None) => a,
        (None, b) => b,
    }
}

fn insert_sorted(v: &mut Vec<f64>, y: f64) {
    let at = v.partition_point(|&e| e <= y);
    v.insert(at, y);
}

/// Best closed y-range over a strip sorted by y: maximizes
/// `(i−j+1)/N − w·(y_i − y_j)` over `j ≤ i`.
fn excess_scan_f64(strip: &[f64], w: f64, n: f64) -> f64 {
    let mut bmin = f64::INFINITY;
    let mut best = f64::NEG_INFINITY;
    for (i, &y) in strip.iter().enumerate() {
        bmin = bmin.min(i as f64 / n - w * y);
        best = best.max((i + 1) as f64 / n - w * y - bmin);
    }
    best
}

fn excess_scan_exact(strip: &[f64], w: &Rational, n: u64) -> (Rational, usize, usize) {
    let mut bmin: Option<(Rational, usize)> = None;
    let mut best: Option<(Rational, usize, usize)> = None;
    for (i, &y) in strip.iter().enumerate() {
        let wy: Rational = w * exact(y);
        let b = Rational::from((i as u64, n)) - &wy;
        if bmin.as_ref().is_none_or(|(m, _)| b < *m) {
            bmin = Some((b, i));
        }
        let (m, j) = bmin.as_ref().expect("set above");
        let s = Rational::from(((i + 1) as u64, n)) - wy - m;
        if best.as_ref().is_none_or(|(v, _, _)| s > *v) {
            best = Some((s, *j, i));
        }
    }
    best.expect("nonempty strip")
}

/// Best open y-range over `ext = [0, strip…, 1]`: maximizes
/// `w·(y_i − y_j) − (i−j−1)/N` over `j < i`.
fn deficit_scan_f64(ext: &[f64], w: f64, n: f64) -> f64 {
    let mut bmin = f64::INFINITY;
    let mut best = f64::NEG_INFINITY;
    for (i, &y) in ext.iter().enumerate() {
        if i > 0 {
            best = best.max(w * y - i as f64 / n - bmin + 1.0 / n);
        }
        bmin = bmin.min(w * y - i as f64 / n);
    }
    best
}

fn deficit_scan_exact(ext: &[f64], w: &Rational, n: u64) -> (Rational, usize, usize) {
    let mut bmin: Option<(Rational, usize)> = None;
    let mut best: Option<(Rational, usize, usize)> = None;
    for (i, &y) in ext.iter().enumerate() {
        let a: Rational = (w * exact(y)) - Rational::from((i as u64, n));
        if let Some((m, j)) = &bmin {
            let s = Rational::from(&a - m) + Rational::from((1u64, n));
            if best.as_ref().is_none_or(|(v, _, _)| s > *v) {
                best = Some((s, *j, i));
            }
        }
        if bmin.as_ref().is_none_or(|(m, _)| a < *m) {
            bmin = Some((a, i));
        }
    }
    best.expect("at least two entries")
}

/// Geometry shared by both passes of [`discrepancy_2d`].
struct Strips {
    n: u64,
    by_x: Vec<[f64; 2]>,
    xs: Vec<f64>,
    groups: Vec<(usize, usize)>,
    edges: Vec<f64>,
}

impl Strips {
    fn new(pts: &[[f64; 2]]) -> Self {
        let mut by_x = pts.to_vec();
        by_x.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut xs: Vec<f64> = by_x.iter().map(|p| p[0]).collect();
        xs.dedup();
        let mut groups = Vec::with_capacity(xs.len());
        let mut start = 0;
        while start < by_x.len() {
            let mut end = start;
            while end < by_x.len() && by_x[end][0] == by_x[start][0] {
                end += 1;
            }
            groups.push((start, end));
            start = end;
        }
        let mut edges = Vec::with_capacity(xs.len() + 2);
        edges.push(0.0);
        edges.extend(xs.iter().copied().filter(|&x| x > 0.0));
        edges.push(1.0);
        Self {
            n: pts.len() as u64,
            by_x,
            xs,
            groups,
            edges,
        }
    }

    /// Calls `f(strip, lo, hi)` for every closed x-range `[xs[u], xs[v]]`, `v ≥ u`.
    fn closed_from(&self, u: usize, mut f: impl FnMut(&[f64], f64, f64)) {
        let mut strip: Vec<f64> = Vec::new();
        for v in u..self.xs.len() {
            for p in &self.by_x[self.groups[v].0..self.groups[v].1] {
                insert_sorted(&mut strip, p[1]);
            }
            f(&strip, self.xs[u], self.xs[v]);
        }
    }

    /// Calls `f(ext, lo, hi)` for every open x-range `(edges[u], hi)`, where
    /// `ext` is the strip's sorted y-values framed by 0 and 1.
    fn open_from(&self, u: usize, mut f: impl FnMut(&[f64], f64, f64)) {
        let mut strip: Vec<f64> = Vec::new();
        let lo = self.edges[u];
        let mut next = self.by_x.partition_point(|p| p[0] <= lo);
        for &hi in &self.edges[u + 1..] {
            let mut ext = Vec::with_capacity(strip.len() + 2);
            ext.push(0.0);
            ext.extend_from_slice(&strip);
            ext.push(1.0);
            f(&ext, lo, hi);
            // the next right side lies beyond hi, so points at hi become interior
            while next < self.by_x.len() && self.by_x[next][0] <= hi {
                insert_sorted(&mut strip, self.by_x[next][1]);
                next += 1;
            }
        }
    }

    fn approx_max(&self) -> f64 {
        let n = self.n as f64;
        let excess = (0..self.xs.len())
            .into_par_iter()
            .map(|u| {
                let mut best = f64::NEG_INFINITY;
                self.closed_from(u, |s, lo, hi| best = best.max(excess_scan_f64(s, hi - lo, n)));
                best
            })
            .reduce(|| f64::NEG_INFINITY, f64::max);
        let deficit = (0..self.edges.len() - 1)
            .into_par_iter()
            .map(|u| {
                let mut best = f64::NEG_INFINITY;
                self.open_from(u, |e, lo, hi| best = best.max(deficit_scan_f64(e, hi - lo, n)));
                best
            })
            .reduce(|| f64::NEG_INFINITY, f64::max);
        excess.max(deficit)
    }

    fn exact_max(&self, threshold: f64) -> Option<BoxCandidate> {
        let n = self.n;
        let excess = (0..self.xs.len())
            .into_par_iter()
            .map(|u| {
                let mut best = None;
                self.closed_from(u, |s, lo, hi| {
                    if excess_scan_f64(s, hi - lo, n as f64) >= threshold {
                        let (score, j, i) = excess_scan_exact(s, &(exact(hi) - exact(lo)), n);
                        let cand = BoxCandidate {
                            score,
                            x: Interval::closed(lo, hi),
                            y: Interval::closed(s[j], s[i]),
                        };
                        best = better(best.take(), Some(cand));
                    }
                });
                best
            })
            .reduce(|| None, better);
        let deficit = (0..self.edges.len() - 1)
            .into_par_iter()
            .map(|u| {
                let mut best = None;
                self.open_from(u, |e, lo, hi| {
                    if deficit_scan_f64(e, hi - lo, n as f64) >= threshold {
                        let (score, j, i) = deficit_scan_exact(e, &(exact(hi) - exact(lo)), n);
                        let cand = BoxCandidate {
                            score,
                            x: Interval::open(lo, hi),
                            y: Interval::open(e[j], e[i]),
                        };
                        best = better(best.take(), Some(cand));
                    }
                });
                best
            })
            .reduce(|| None, better);
        better(excess, deficit)
    }
}

/// Extreme discrepancy over axis-parallel boxes in `[0,1)²`, exact, `O(N³)`.
///
/// An excess of points is maximized over closed boxes whose sides pass
/// through point coordinates; a deficit over open boxes whose sides pass
/// through point coordinates or the unit square's edges. For each pair of
/// x-sides the y-sides are found by a linear scan of the strip sorted by y.
/// A float pass locates the maximum; strips scoring within [`EXACT_BAND`]
/// of it are then rescanned in rational arithmetic.
pub fn discrepancy_2d(ps: &PointSet) -> Result<DiscrepancyResult> {
    let PointSet::D2(pts) = ps else {
        return Err(LabError::Domain("discrepancy_2d needs a 2D point set".into()));
    };
    if pts.len() > MAX_EXACT_2D_POINTS {
        return Err(LabError::Size(format!(
            "exact 2D discrepancy limited to {MAX_EXACT_2D_POINTS} points, got {}",
            pts.len()
        )));
    }
    let strips = Strips::new(pts);
    let threshold = strips.approx_max() - EXACT_BAND;
    let cand = strips
        .exact_max(threshold)
        .ok_or_else(|| LabError::Internal("no candidate box".into()))?;
    let witness = Witness::Box([cand.x, cand.y]);
    let exact_value = exact_deviation(ps, &witness).expect("2D witness");
    if exact_value < cand.score {
        return Err(LabError::Internal("witness recount below its scan score".into()));
    }
    Ok(DiscrepancyResult {
        value: round_to_f64(&exact_value),
        witness,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Two-sided bracket for the 2D extreme discrepancy from a `G×G` count grid.
///
/// The lower bound is the largest deviation over grid-aligned half-open
/// boxes. For the upper bound any box is sandwiched between the grid cells it
/// touches (outer) and the cells it fully contains (inner).
pub fn grid_discrepancy_2d(ps: &PointSet, grid: usize) -> Result<GridBounds> {
    let PointSet::D2(pts) = ps else {
        return Err(LabError::Domain("grid_discrepancy_2d needs a 2D point set".into()));
    };
    if grid == 0 {
        return Err(LabError::Domain("grid must be positive".into()));
    }
    let g = grid;
    let n = pts.len() as f64;
    let cell = |v: f64| ((v * g as f64) as usize).min(g - 1);
    // prefix[(i)*(g+1)+j] = count in cells [0,i) x [0,j)
    let mut prefix = vec![0u32; (g + 1) * (g + 1)];
    for p in pts {
        prefix[(cell(p[0]) + 1) * (g + 1) + cell(p[1]) + 1] += 1;
    }
    for i in 1..=g {
        for j in 1..=g {
            prefix[i * (g + 1) + j] +=
                prefix[(i - 1) * (g + 1) + j] + prefix[i * (g + 1) + j - 1] - prefix[(i - 1) * (g + 1) + j - 1];
        }
    }
    let rect = |i0: usize, i1: usize, j0: usize, j1: usize| -> f64 {
        // cells [i0, i1) x [j0, j1)
        if i1 <= i0 || j1 <= j0 {
            return 0.0;
        }
        let at = |i: usize, j: usize| prefix[i * (g + 1) + j] as i64;
        (at(i1, j1) - at(i0, j1) - at(i1, j0) + at(i0, j0)) as f64
    };
    let cell_area = 1.0 / (g * g) as f64;
    let (lower, upper) = (0..g)
        .into_par_iter()
        .map(|i0| {
            let (mut lo, mut up) = (0.0f64, 0.0f64);
            for i1 in i0..g {
                for j0 in 0..g {
                    for j1 in j0..g {
                        let outer_cnt = rect(i0, i1 + 1, j0, j1 + 1);
                        let outer_area = ((i1 - i0 + 1) * (j1 - j0 + 1)) as f64 * cell_area;
                        lo = lo.max((outer_cnt / n - outer_area).abs());
                        let (ii, ij) = (i1.saturating_sub(i0 + 1), j1.saturating_sub(j0 + 1));
                        let inner_cnt = rect(i0 + 1, i1, j0 + 1, j1);
                        let inner_area = (ii * ij) as f64 * cell_area;
                        up = up.max(outer_cnt / n - inner_area).max(outer_area - inner_cnt / n);
                    }
                }
            }
            (lo, up)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(GridBounds { lower, upper })
}

#[inline]
fn phase(x: f64) -> Complex64 {
    let t = 2.0 * PI * frac(x);
    Complex64::new(t.cos(), t.sin())
}

/// `|N⁻¹ Σ e(h·x_n)|` for integer frequency vector `h`.
fn weyl_mean_1d(pts: &[f64], h: i64) -> f64 {
    let s: Complex64 = pts.iter().map(|&x| phase(frac(h as f64 * x))).sum();
    s.norm() / pts.len() as f64
}

fn weyl_mean_2d(pts: &[[f64; 2]], h: [i64; 2]) -> f64 {
    let s: Complex64 = pts
        .iter()
        .map(|p| phase(frac(h[0] as f64 * p[0]) + frac(h[1] as f64 * p[1])))
        .sum();
    s.norm() / pts.len() as f64
}

/// `1/H + Σ_{0<|h|≤H} r(h)⁻¹ |N⁻¹ Σ e(⟨h, x_n⟩)|`, without the dimension
/// constant. In 1D the classical explicit form gives `D_N ≤ 6·bracket`.
pub fn etk_bound(ps: &PointSet, h_max: u32) -> Result<f64> {
    if h_max == 0 {
        return Err(LabError::Domain("H must be positive".into()));
    }
    let hm = h_max as i64;
    let tail: f64 = match ps {
        PointSet::D1(pts) => (1..=hm)
            .into_par_iter()
            .map(|h| 2.0 * weyl_mean_1d(pts, h) / h as f64)
            .collect::<Vec<_>>()
            .into_iter()
            .sum(),
        PointSet::D2(pts) => {
            // h and −h give equal magnitudes; keep the half-plane h1 > 0 or (h1 = 0, h2 > 0)
            (0..=hm)
                .into_par_iter()
                .map(|h1| {
                    let start = if h1 == 0 { 1 } else { -hm };
                    (start..=hm)
                        .map(|h2| {
                            let r = (h1.max(1) * h2.abs().max(1)) as f64;
                            2.0 * weyl_mean_2d(pts, [h1, h2]) / r
                        })
                        .sum::<f64>()
                })
                .collect::<Vec<_>>()
                .into_iter()
                .sum()
        }
    };
    Ok(1.0 / h_max as f64 + tail)
}

/// Explicit 1D Erdős–Turán constant applied to [`etk_bound`].
pub const ETK_CONSTANT_1D: f64 = 6.0;

/// Absolute bound on `|Θ|` and `|Θ_h|` for [`indicator_fourier_expansion`].
pub const FOURIER_THETA_BOUND: f64 = 1.0;

/// Trigonometric approximation of `𝟙_[a,b]` in the form
/// `(b−a) + Θ/H + Σ_{0<|h|≤H} (Θ_h/|h|) e(hx)`.
///
/// Built from Vaaler's approximation of the sawtooth `ψ(x) = {x} − 1/2`
/// through `𝟙_[a,b](x) = (b−a) + ψ(x−b) − ψ(x−a)`. The construction has
/// `Θ = 0` and `|Θ_h| ≤ 1/π`, so [`FOURIER_THETA_BOUND`] = 1 holds.
#[derive(Clone, Debug)]
pub struct FourierExpansion {
    pub a: f64,
    pub b: f64,
    pub h_max: u32,
    pub theta0: Complex64,
    /// `Θ_h` for `h = -H..=-1, 1..=H` in that order.
    theta: Vec<Complex64>,
}

impl FourierExpansion {
    fn slot(&self, h: i64) -> Option<usize> {
        let hm = self.h_max as i64;
        match h {
            0 => None,
            h if h < -hm || h > hm => None,
            h if h < 0 => Some((h + hm) as usize),
            h => Some((h + hm - 1) as usize),
        }
    }

    /// `Θ_h`; zero outside `0 < |h| ≤ H`.
    pub fn theta(&self, h: i64) -> Complex64 {
        self.slot(h).map_or(Complex64::new(0.0, 0.0), |i| self.theta[i])
    }

    /// Fourier coefficient `Θ_h / |h|` multiplying `e(hx)`.
    pub fn coefficient(&self, h: i64) -> Complex64 {
        if h == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.theta(h) / h.unsigned_abs() as f64
    }

    /// Mean over one period: `(b−a) + Θ/H`.
    pub fn mean(&self) -> f64 {
        (self.b - self.a) + self.theta0.re / self.h_max as f64
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let hm = self.h_max as i64;
        let mut s = Complex64::new(self.mean(), self.theta0.im / self.h_max as f64);
        for h in (-hm..=hm).filter(|&h| h != 0) {
            s += self.coefficient(h) * phase(h as f64 * frac(x));
        }
        s.re
    }

    /// Pointwise majorant of `|𝟙_[a,b](x) − evaluate(x)|` away from `a, b`:
    /// the two Fejér-kernel terms of Vaaler's error bound.
    pub fn error_majorant(&self, x: f64) -> f64 {
        let fejer = |y: f64| {
            let k = self.h_max as f64 + 1.0;
            let s = (PI * y).sin();
            if s.abs() < 1e-300 {
                return 0.5;
            }
            let r = (PI * k * y).sin() / s;
            (r * r / (2.0 * k * k)).min(0.5)
        };
        fejer(x - self.a) + fejer(x - self.b)
    }
}

/// Vaaler's weight `πt(1−|t|)cot(πt) + |t|` for `0 < |t| < 1`.
fn vaaler_weight(t: f64) -> f64 {
    let t = t.abs();
    PI * t * (1.0 - t) / (PI * t).tan() + t
}

pub fn indicator_fourier_expansion(a: f64, b: f64, h_max: u32) -> Result<FourierExpansion> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(LabError::Domain(format!("need 0 <= a < b <= 1, got a={a}, b={b}")));
    }
    if h_max < 10 {
        return Err(LabError::Domain(format!("need H >= 10, got {h_max}")));
    }
    let hm = h_max as i64;
    let theta = (-hm..=hm)
        .filter(|&h| h != 0)
        .map(|h| {
            let w = vaaler_weight(h as f64 / (hm + 1) as f64);
            // exact coefficient of the indicator: (e(−ha) − e(−hb)) / (2πih)
            let diff = phase(-(h as f64) * a) - phase(-(h as f64) * b);
            let coeff = diff / Complex64::new(0.0, 2.0 * PI * h as f64) * w;
            coeff * h.unsigned_abs() as f64
        })
        .collect();
    Ok(FourierExpansion {
        a,
        b,
        h_max,
        theta0: Complex64::new(0.0, 0.0),
        theta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowCount {
    pub count: u64,
    pub main: f64,
    pub residual: f64,
    pub discrepancy: f64,
}

/// Residual constant asserted for [`frac_window_count`]. A window shifted by
/// `−β` wraps into at most two intervals, so `|count − N/T| ≤ 2N·D_N(αn)`.
pub const WINDOW_RESIDUAL_CONSTANT: f64 = 2.0;

/// `#{1 ≤ n ≤ N : t/T ≤ {αn+β} < (t+1)/T}` against `N/T`, with the deviation
/// normalized by `N·D_N(αn)`.
pub fn frac_window_count(alpha: f64, beta: f64, n: u64, t: u64, tt: u64) -> Result<WindowCount> {
    if n == 0 || t >= tt {
        return Err(LabError::Domain(format!(
            "need N >= 1 and 0 <= t < T, got N={n}, t={t}, T={tt}"
        )));
    }
    let (lo, hi) = (t as f64 / tt as f64, (t + 1) as f64 / tt as f64);
    let count = (1..=n)
        .filter(|&k| {
            let f = frac(alpha.mul_add(k as f64, beta));
            if t + 1 == tt {
                f >= lo
            } else {
                f >= lo && f < hi
            }
        })
        .count() as u64;
    let ps = PointSet::from_sequence_1d((1..=n).map(|k| alpha * k as f64))?;
    let discrepancy = discrepancy_1d(&ps)?.value;
    let main = n as f64 / tt as f64;
    Ok(WindowCount {
        count,
        main,
        residual: (count as f64 - main).abs() / (n as f64 * discrepancy),
        discrepancy,
    })
}

/// Piecewise-constant function on a tensor grid of `[0,1]^d`, `d ∈ {1,2}`.
///
/// `breaks[j]` lists the axis-`j` breakpoints `0 = η_0 < … < η_n = 1`; cell
/// `i` on that axis is `[η_i, η_{i+1})`, with the last cell closed at 1.
/// `values` is row-major with the first axis slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    breaks: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() > 2 {
            return Err(LabError::Domain("step function must be 1D or 2D".into()));
        }
        for b in &breaks {
            let ok = b.len() >= 2 && b[0] == 0.0 && *b.last().unwrap() == 1.0 && b.windows(2).all(|w| w[0] < w[1]);
            if !ok {
                return Err(LabError::Domain(format!("malformed breakpoints {b:?}")));
            }
        }
        let cells: usize = breaks.iter().map(|b| b.len() - 1).product();
        if values.len() != cells {
            return Err(LabError::Domain(format!(
                "expected {cells} cell values, got {}",
                values.len()
            )));
        }
        Ok(Self { breaks, values })
    }

    /// 1D staircase.
    pub fn staircase(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(vec![breaks], values)
    }

    /// `f(x, y) = f₁(x)·f₂(y)` for two 1D staircases.
    pub fn product(f: &StepFunction, g: &StepFunction) -> Result<Self> {
        if f.dim() != 1 || g.dim() != 1 {
            return Err(LabError::Domain("product needs two 1D staircases".into()));
        }
        let values = f
            .values
            .iter()
            .flat_map(|&u| g.values.iter().map(move |&v| u * v))
            .collect();
        Self::new(vec![f.breaks[0].clone(), g.breaks[0].clone()], values)
    }

    pub fn dim(&self) -> usize {
        self.breaks.len()
    }

    fn cells(&self, axis: usize) -> usize {
        self.breaks[axis].len() - 1
    }

    fn cell_of(&self, axis: usize, x: f64) -> usize {
        let b = &self.breaks[axis];
        b.partition_point(|&e| e <= x)
            .saturating_sub(1)
            .min(self.cells(axis) - 1)
    }

    fn at_cells(&self, idx: &[usize]) -> f64 {
        match idx {
            [i] => self.values[*i],
            [i, j] => self.values[i * self.cells(1) + j],
            _ => unreachable!(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let idx: Vec<usize> = (0..self.dim()).map(|a| self.cell_of(a, x[a])).collect();
        self.at_cells(&idx)
    }

    pub fn integral(&self) -> f64 {
        let width = |a: usize, i: usize| self.breaks[a][i + 1] - self.breaks[a][i];
        match self.dim() {
            1 => (0..self.cells(0)).map(|i| self.values[i] * width(0, i)).sum(),
            _ => (0..self.cells(0))
                .flat_map(|i| (0..self.cells(1)).map(move |j| (i, j)))
                .map(|(i, j)| self.at_cells(&[i, j]) * width(0, i) * width(1, j))
                .sum(),
        }
    }

    /// Hardy–Krause variation anchored at 1: the sum over nonempty coordinate
    /// sets `I` of the Vitali variation of `f` restricted to the face where
    /// the coordinates outside `I` equal 1. For a step function the sup over
    /// partitions is reached by one evaluation point per cell, so the
    /// difference-operator sums run over consecutive cells.
    pub fn hardy_krause_variation(&self) -> f64 {
        match self.dim() {
            1 => (1..self.cells(0))
                .map(|i| (self.values[i] - self.values[i - 1]).abs())
                .sum(),
            _ => {
                let (nx, ny) = (self.cells(0), self.cells(1));
                let f = |i: usize, j: usize| self.at_cells(&[i, j]);
                let mut vitali = 0.0;
                for i in 1..nx {
                    for j in 1..ny {
                        vitali += (f(i, j) - f(i - 1, j) - f(i, j - 1) + f(i - 1, j - 1)).abs();
                    }
                }
                let face_x: f64 = (1..nx).map(|i| (f(i, ny - 1) - f(i - 1, ny - 1)).abs()).sum();
                let face_y: f64 = (1..ny).map(|j| (f(nx - 1, j) - f(nx - 1, j - 1)).abs()).sum();
                vitali + face_x + face_y
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KoksmaHlawka {
    pub err: f64,
    pub bound: f64,
    pub variation: f64,
    pub discrepancy: f64,
}

/// `|mean of f over the points − ∫f|` against `V_HK(f)·D_N`.
pub fn koksma_hlawka_check(f: &StepFunction, ps: &PointSet) -> Result<KoksmaHlawka> {
    if f.dim() != ps.dim() {
        return Err(LabError::Domain(format!(
            "function is {}D but points are {}D",
            f.dim(),
            ps.dim()
        )));
    }
    let (mean, discrepancy) = match ps {
        PointSet::D1(pts) => (
            pts.iter().map(|&x| f.eval(&[x])).sum::<f64>() / pts.len() as f64,
            discrepancy_1d(ps)?.value,
        ),
        PointSet::D2(pts) => (
            pts.iter().map(|p| f.eval(p)).sum::<f64>() / pts.len() as f64,
            discrepancy_2d(ps)?.value,
        ),
    };
    let variation = f.hardy_krause_variation();
    Ok(KoksmaHlawka {
        err: (mean - f.integral()).abs(),
        bound: variation * discrepancy,
        variation,
        discrepancy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSquareEstimate {
    pub mean: f64,
    pub ratio: f64,
    pub stderr: f64,
}

/// Monte-Carlo estimate of `∫₀¹ D_N(αn) dα` with `α` uniform, and its ratio
/// to `(log N)²/N`.
pub fn mean_square_discrepancy_estimate(n: u64, samples: u64, seed: u64) -> Result<MeanSquareEstimate> {
    if n < 3 {
        return Err(LabError::Domain(format!("need N >= 3, got {n}")));
    }
    if samples == 0 {
        return Err(LabError::Domain("need at least one sample".into()));
    }
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let alpha: f64 = substream(seed, i).gen();
            let ps = PointSet::from_sequence_1d((1..=n).map(|k| alpha * k as f64))?;
            Ok(discrepancy_1d(&ps)?.value)
        })
        .collect::<Result<_>>()?;
    let s = samples as f64;
    let mean = values.iter().sum::<f64>() / s;
    let var = if samples > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0)
    } else {
        0.0
    };
    let nf = n as f64;
    Ok(MeanSquareEstimate {
        mean,
        ratio: mean / (nf.ln().powi(2) / nf),
        stderr: (var / s).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_1d(rng: &mut ChaCha8Rng, n: usize) -> PointSet {
        PointSet::from_sequence_1d((0..n).map(|_| rng.gen::<f64>())).unwrap()
    }

    /// Every interval with endpoints in `{0, 1} ∪ points`, all four closure
    /// variants, counted by binary search and scored in rationals.
    fn brute_1d(pts: &[f64]) -> f64 {
        let xs = sorted(pts);
        let n = xs.len() as u64;
        let mut cand = vec![0.0, 1.0];
        cand.extend_from_slice(&xs);
        cand.sort_by(f64::total_cmp);
        cand.dedup();
        let mut best = Rational::new();
        for (i, &lo) in cand.iter().enumerate() {
            for &hi in &cand[i..] {
                for (lc, hc) in [(true, true), (true, false), (false, true), (false, false)] {
                    let left = if lc {
                        xs.partition_point(|&x| x < lo)
                    } else {
                        xs.partition_point(|&x| x <= lo)
                    };
                    let right = if hc {
                        xs.partition_point(|&x| x <= hi)
                    } else {
                        xs.partition_point(|&x| x < hi)
                    };
                    let count = right.saturating_sub(left) as u64;
                    let dev = (Rational::from((count, n))
                        - (Rational::from_f64(hi).unwrap() - Rational::from_f64(lo).unwrap()))
                    .abs();
                    if dev > best {
                        best = dev;
                    }
                }
            }
        }
        Float::with_val(53, &best).to_f64()
    }

    fn brute_2d(pts: &[[f64; 2]]) -> f64 {
        let n = pts.len() as u64;
        let cands = |axis: usize| {
            let mut c: Vec<f64> = pts.iter().map(|p| p[axis]).chain([0.0, 1.0]).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        };
        let q = |x: f64| Rational::from_f64(x).unwrap();
        let (cx, cy) = (cands(0), cands(1));
        let mut best = Rational::new();
        for (i, &x0) in cx.iter().enumerate() {
            for &x1 in &cx[i..] {
                for (j, &y0) in cy.iter().enumerate() {
                    for &y1 in &cy[j..] {
                        for closed in [true, false] {
                            let b = if closed {
                                [Interval::closed(x0, x1), Interval::closed(y0, y1)]
                            } else {
                                [Interval::open(x0, x1), Interval::open(y0, y1)]
                            };
                            let count = pts
                                .iter()
                                .filter(|p| b[0].contains(p[0]) && b[1].contains(p[1]))
                                .count() as u64;
                            let area = (q(x1) - q(x0)) * (q(y1) - q(y0));
                            let dev = (Rational::from((count, n)) - area).abs();
                            if dev > best {
                                best = dev;
                            }
                        }
                    }
                }
            }
        }
        Float::with_val(53, &best).to_f64()
    }

    #[test]
    fn one_dimensional_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let n = rng.gen_range(1..=200);
            // every fourth set is snapped to a coarse grid to force ties
            let pts: Vec<f64> = if trial % 4 == 0 {
                (0..n).map(|_| rng.gen_range(0..16) as f64 / 16.0).collect()
            } else {
                (0..n).map(|_| rng.gen()).collect()
            };
            let ps = PointSet::from_sequence_1d(pts.clone()).unwrap();
            let (fast, slow) = (discrepancy_1d(&ps).unwrap().value, brute_1d(&pts));
            assert_eq!(fast, slow, "trial {trial}");
        }
    }

    #[test]
    fn two_dimensional_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..50 {
            let n = rng.gen_range(1..=40);
            let pts: Vec<[f64; 2]> = if trial % 5 == 0 {
                (0..n)
                    .map(|_| [rng.gen_range(0..8) as f64 / 8.0, rng.gen_range(0..8) as f64 / 8.0])
                    .collect()
            } else {
                (0..n).map(|_| [rng.gen(), rng.gen()]).collect()
            };
            let ps = PointSet::from_sequence_2d(pts.clone()).unwrap();
            let r = discrepancy_2d(&ps).unwrap();
            let slow = brute_2d(&pts);
            assert_eq!(r.value, slow, "trial {trial}");
            assert_eq!(deviation(&ps, &r.witness), r.value);
        }
    }

    #[test]
    fn lattice_matches_brute_force() {
        let n = 8;
        let pts: Vec<[f64; 2]> = (0..n * n)
            .map(|k| [(k / n) as f64 / n as f64, (k % n) as f64 / n as f64])
            .collect();
        let r = discrepancy_2d(&PointSet::from_sequence_2d(pts.clone()).unwrap()).unwrap();
        assert_eq!(r.value, brute_2d(&pts));
        assert!(r.value <= 2.0 / n as f64 + 1e-12);
    }

    #[test]
    fn grid_encloses_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let n = rng.gen_range(1..=500);
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen(), rng.gen()]).collect();
            let ps = PointSet::from_sequence_2d(pts).unwrap();
            let exact = discrepancy_2d(&ps).unwrap().value;
            let g = grid_discrepancy_2d(&ps, 64).unwrap();
            assert!(g.lower <= exact + 1e-12 && exact <= g.upper + 1e-12, "{g:?} vs {exact}");
        }
    }

    #[test]
    fn grid_collapses_on_dyadic_points() {
        // points on the 1/8 grid: the bracket narrows like 1/G
        let pts = [[0.0, 0.0], [0.25, 0.5], [0.625, 0.125]];
        let ps = PointSet::from_sequence_2d(pts).unwrap();
        let exact = discrepancy_2d(&ps).unwrap().value;
        for grid in [16usize, 64, 128] {
            let g = grid_discrepancy_2d(&ps, grid).unwrap();
            assert!(g.lower <= exact && exact <= g.upper);
            assert!(g.upper - g.lower <= 6.0 / grid as f64, "{g:?}");
        }
    }

    #[test]
    fn etk_dominates_discrepancy() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..30 {
            let n = rng.gen_range(1..400);
            let ps = random_1d(&mut rng, n);
            let d = discrepancy_1d(&ps).unwrap().value;
            for h in [8u32, 64, 512] {
                assert!(d <= ETK_CONSTANT_1D * etk_bound(&ps, h).unwrap());
            }
        }
        let alpha = 2f64.sqrt();
        let ps = PointSet::from_sequence_1d((1..=2000).map(|k| alpha * k as f64)).unwrap();
        let d = discrepancy_1d(&ps).unwrap().value;
        for h in [8u32, 64, 512] {
            assert!(d <= ETK_CONSTANT_1D * etk_bound(&ps, h).unwrap());
        }
    }

    #[test]
    fn one_dimensional_examples() {
        for n in [1usize, 2, 7, 100] {
            let ps = PointSet::from_sequence_1d((0..n).map(|k| k as f64 / n as f64)).unwrap();
            let d = discrepancy_1d(&ps).unwrap().value;
            assert!((d - 1.0 / n as f64).abs() < 1e-12, "n={n}: {d}");
        }
        let single = PointSet::from_sequence_1d([0.0]).unwrap();
        assert_eq!(discrepancy_1d(&single).unwrap().value, 1.0);
        let copies = PointSet::from_sequence_1d([0.3; 9]).unwrap();
        assert_eq!(discrepancy_1d(&copies).unwrap().value, 1.0);
    }

    #[test]
    fn witness_reproduces_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = rng.gen_range(1..300);
            let ps = random_1d(&mut rng, n);
            let r = discrepancy_1d(&ps).unwrap();
            assert!((deviation(&ps, &r.witness) - r.value).abs() <= 1e-12);
            let star = star_discrepancy_1d(&ps).unwrap();
            assert!(star <= r.value + 1e-15 && r.value <= 2.0 * star + 1e-15);
        }
    }

    #[test]
    fn reduces_mod_one_and_rejects_empty() {
        let ps = PointSet::from_sequence_1d([1.25, -0.25, 3.0]).unwrap();
        assert_eq!(ps, PointSet::D1(vec![0.25, 0.75, 0.0]));
        assert!(PointSet::from_sequence_1d(Vec::<f64>::new()).is_err());
        assert!(PointSet::from_sequence_2d(Vec::<[f64; 2]>::new()).is_err());
    }

    #[test]
    fn two_dimensional_examples() {
        let single = PointSet::from_sequence_2d([[0.0, 0.0]]).unwrap();
        assert_eq!(discrepancy_2d(&single).unwrap().value, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.gen_range(1..60);
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen(), rng.gen()]).collect();
            let d2 = discrepancy_2d(&PointSet::from_sequence_2d(pts.clone()).unwrap()).unwrap();
            for axis in 0..2 {
                let proj = PointSet::from_sequence_1d(pts.iter().map(|p| p[axis])).unwrap();
                assert!(d2.value >= discrepancy_1d(&proj).unwrap().value - 1e-15);
            }
        }
    }

    #[test]
    fn two_dimensional_guard() {
        let pts = vec![[0.5, 0.5]; MAX_EXACT_2D_POINTS + 1];
        let ps = PointSet::from_sequence_2d(pts).unwrap();
        assert!(matches!(discrepancy_2d(&ps), Err(LabError::Size(_))));
        assert!(discrepancy_1d(&ps).is_err());
    }

    #[test]
    fn grid_bounds_single_point() {
        let ps = PointSet::from_sequence_2d([[0.3, 0.7]]).unwrap();
        let g = grid_discrepancy_2d(&ps, 16).unwrap();
        assert!(g.lower <= 1.0 && 1.0 <= g.upper);
    }

    #[test]
    fn etk_examples() {
        let n = 50;
        let equi = PointSet::from_sequence_1d((0..n).map(|k| k as f64 / n as f64)).unwrap();
        for h in [1u32, 5, 49] {
            assert!((etk_bound(&equi, h).unwrap() - 1.0 / h as f64).abs() < 1e-12);
        }
        let single = PointSet::from_sequence_1d([0.0]).unwrap();
        let h = 8u32;
        let harmonic: f64 = (1..=h).map(|k| 2.0 / k as f64).sum();
        assert!((etk_bound(&single, h).unwrap() - (1.0 / h as f64 + harmonic)).abs() < 1e-12);
        let ps = PointSet::from_sequence_1d([0.1, 0.35, 0.8]).unwrap();
        let mean: Complex64 = [0.1, 0.35, 0.8].iter().map(|&x| phase(x)).sum::<Complex64>() / 3.0;
        assert!((etk_bound(&ps, 1).unwrap() - (1.0 + 2.0 * mean.norm())).abs() < 1e-12);
    }

    #[test]
    fn etk_2d_single_point() {
        let ps = PointSet::from_sequence_2d([[0.0, 0.0]]).unwrap();
        let h = 3i64;
        let mut want = 1.0 / h as f64;
        for h1 in -h..=h {
            for h2 in -h..=h {
                if (h1, h2) != (0, 0) {
                    want += 1.0 / (h1.abs().max(1) * h2.abs().max(1)) as f64;
                }
            }
        }
        assert!((etk_bound(&ps, h as u32).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn fourier_full_interval_is_exact() {
        let e = indicator_fourier_expansion(0.0, 1.0, 32).unwrap();
        for h in 1..=32 {
            assert!(e.theta(h).norm() < 1e-12 && e.theta(-h).norm() < 1e-12);
        }
        for k in 0..100 {
            assert!((e.evaluate(k as f64 / 100.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_half_interval_errors() {
        let h = 64u32;
        let (a, b) = (0.0, 0.5);
        let e = indicator_fourier_expansion(a, b, h).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..10_000 {
            let x = k as f64 / 10_000.0;
            let ind = if (a..=b).contains(&x) { 1.0 } else { 0.0 };
            let err = (ind - e.evaluate(x)).abs();
            worst = worst.max(err);
            let dist = [x - a, b - x, x + 1.0 - b, 1.0 - x + a]
                .iter()
                .map(|d| d.abs())
                .fold(f64::INFINITY, f64::min);
            if dist >= 1.0 / h as f64 {
                assert!(err < 2.0 / (h as f64 * dist), "x={x} err={err}");
                assert!(err <= e.error_majorant(x) + 1e-12, "x={x}");
                assert!(err <= (1.0f64).min(1.0 / (h as f64 * dist)));
            }
        }
        assert!(worst < 0.51, "{worst}");
    }

    #[test]
    fn fourier_coefficients_are_bounded_and_mean_is_length() {
        for &(a, b) in &[(0.1, 0.2), (0.0, 0.5), (0.3, 0.95)] {
            let e = indicator_fourier_expansion(a, b, 40).unwrap();
            assert!(e.theta0.norm() <= FOURIER_THETA_BOUND);
            for h in 1..=40 {
                assert!(e.theta(h).norm() <= FOURIER_THETA_BOUND);
                assert!(e.theta(-h).norm() <= FOURIER_THETA_BOUND);
            }
            let m = 4096;
            let avg: f64 = (0..m).map(|k| e.evaluate(k as f64 / m as f64)).sum::<f64>() / m as f64;
            assert!((avg - e.mean()).abs() < 1e-12);
            assert!((e.mean() - (b - a)).abs() < 1e-15);
        }
        assert!(indicator_fourier_expansion(0.5, 0.5, 20).is_err());
        assert!(indicator_fourier_expansion(0.1, 0.5, 5).is_err());
    }

    #[test]
    fn window_count_examples() {
        let r = frac_window_count(3.0, 0.0, 1000, 0, 7).unwrap();
        assert_eq!(r.count, 1000);
        let r = frac_window_count(2f64.sqrt(), 0.3, 777, 0, 1).unwrap();
        assert_eq!(r.count, 777);
        let n = 10_000;
        let r = frac_window_count(2f64.sqrt(), 0.0, n, 3, 10).unwrap();
        assert!((r.count as f64 - n as f64 / 10.0).abs() <= 2.0 * n as f64 * r.discrepancy);
        assert!(r.residual <= WINDOW_RESIDUAL_CONSTANT);
        assert!(frac_window_count(1.0, 0.0, 10, 5, 5).is_err());
    }

    #[test]
    fn window_count_residual_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let alpha = rng.gen_range(0.0..50.0);
            let beta = rng.gen_range(0.0..10.0);
            let n = rng.gen_range(1..3000);
            let tt = rng.gen_range(1..40);
            let t = rng.gen_range(0..tt);
            let r = frac_window_count(alpha, beta, n, t, tt).unwrap();
            assert!(r.residual <= WINDOW_RESIDUAL_CONSTANT, "{r:?}");
        }
    }

    #[test]
    fn step_function_validation() {
        assert!(StepFunction::staircase(vec![0.0, 0.5, 1.0], vec![1.0]).is_err());
        assert!(StepFunction::staircase(vec![0.0, 0.5, 0.4, 1.0], vec![1.0; 3]).is_err());
        assert!(StepFunction::staircase(vec![0.1, 1.0], vec![1.0]).is_err());
        assert!(StepFunction::new(vec![vec![0.0, 1.0]; 3], vec![1.0]).is_err());
        let f = StepFunction::staircase(vec![0.0, 0.25, 1.0], vec![2.0, -1.0]).unwrap();
        assert_eq!(f.eval(&[0.1]), 2.0);
        assert_eq!(f.eval(&[0.25]), -1.0);
        assert_eq!(f.eval(&[1.0]), -1.0);
        assert!((f.integral() - (0.5 - 0.75)).abs() < 1e-15);
        assert_eq!(f.hardy_krause_variation(), 3.0);
    }

    #[test]
    fn koksma_hlawka_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = StepFunction::staircase(vec![0.0, 1.0], vec![0.7]).unwrap();
        let r = koksma_hlawka_check(&c, &random_1d(&mut rng, 40)).unwrap();
        assert!(r.err < 1e-15 && r.variation == 0.0);

        // (-1)^{g_3} on eight dyadic cells, equispaced points
        let breaks: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let vals: Vec<f64> = (0..8u32)
            .map(|k| if k.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let f = StepFunction::staircase(breaks, vals).unwrap();
        for n in [5usize, 16, 33, 100] {
            let ps = PointSet::from_sequence_1d((0..n).map(|k| k as f64 / n as f64)).unwrap();
            let r = koksma_hlawka_check(&f, &ps).unwrap();
            assert!(r.err <= r.variation / n as f64 + 1e-12, "n={n}: {r:?}");
        }

        let g = StepFunction::staircase(vec![0.0, 0.3, 0.6, 1.0], vec![1.0, -2.0, 0.5]).unwrap();
        let h = StepFunction::staircase(vec![0.0, 0.5, 1.0], vec![3.0, 1.0]).unwrap();
        let gh = StepFunction::product(&g, &h).unwrap();
        // product rule for the anchored variation
        let want = g.hardy_krause_variation() * h.hardy_krause_variation()
            + g.hardy_krause_variation() * 1.0
            + h.hardy_krause_variation() * 0.5;
        assert!((gh.hardy_krause_variation() - want).abs() < 1e-12);
        let pts: Vec<[f64; 2]> = (0..200).map(|_| [rng.gen(), rng.gen()]).collect();
        let r = koksma_hlawka_check(&gh, &PointSet::from_sequence_2d(pts).unwrap()).unwrap();
        assert!(r.err <= r.bound, "{r:?}");
    }

    #[test]
    fn mean_square_examples() {
        let r = mean_square_discrepancy_estimate(3, 2000, 1).unwrap();
        assert!(r.mean > 0.0 && r.mean < 1.0);
        let a = mean_square_discrepancy_estimate(50, 1, 9).unwrap();
        let b = mean_square_discrepancy_estimate(50, 1, 9).unwrap();
        assert_eq!(a, b);
        assert!(mean_square_discrepancy_estimate(2, 10, 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn one_dimensional_range_and_witness(xs in prop::collection::vec(0.0f64..1.0, 1..300)) {
                let ps = PointSet::from_sequence_1d(xs.clone()).unwrap();
                let r = discrepancy_1d(&ps).unwrap();
                let n = xs.len() as f64;
                prop_assert!(r.value >= 1.0 / n - 1e-15 && r.value <= 1.0);
                prop_assert_eq!(deviation(&ps, &r.witness), r.value);
                prop_assert!(r.value <= 2.0 * star_discrepancy_1d(&ps).unwrap() + 1e-15);
            }

            #[test]
            fn two_dimensional_witness(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..30)) {
                let ps = PointSet::from_sequence_2d(pts.iter().map(|&(x, y)| [x, y])).unwrap();
                let r = discrepancy_2d(&ps).unwrap();
                prop_assert_eq!(deviation(&ps, &r.witness), r.value);
                let g = grid_discrepancy_2d(&ps, 16).unwrap();
                prop_assert!(g.lower <= r.value + 1e-12 && r.value <= g.upper + 1e-12);
            }
        }
    }
}
