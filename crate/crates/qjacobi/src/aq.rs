//! Points of A_Q(R^d): unordered Q-tuples of vectors with the matching distance.

use crate::assignment;
use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::fmt;

/// Default absolute coincidence tolerance for sheet values.
pub const TAU_COIN: f64 = 1e-9;

/// Q sheets in R^d stored row-major. Storage order carries no meaning.
#[derive(Clone, Debug)]
pub struct QPoint {
    q: usize,
    d: usize,
    data: Vec<f64>,
}

impl QPoint {
    pub fn new(q: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if q == 0 || d == 0 {
            return Err(Error::InvalidPoint(format!("need Q >= 1 and d >= 1, got Q={q}, d={d}")));
        }
        if data.len() != q * d {
            return Err(Error::DimensionMismatch {
                what: "flat sheet array length vs Q*d",
                left: data.len(),
                right: q * d,
            });
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite sheet entry {x}")));
        }
        Ok(Self { q, d, data })
    }

    pub fn from_sheets<S: AsRef<[f64]>>(sheets: &[S]) -> Result<Self> {
        let q = sheets.len();
        let d = sheets.first().map(|s| s.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(q * d);
        for s in sheets {
            let s = s.as_ref();
            if s.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "sheet length",
                    left: s.len(),
                    right: d,
                });
            }
            data.extend_from_slice(s);
        }
        Self::new(q, d, data)
    }

    /// Q⟦v⟧.
    pub fn repeated(q: usize, v: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(q * v.len());
        for _ in 0..q {
            data.extend_from_slice(v);
        }
        Self::new(q, v.len(), data)
    }

    pub fn zero(q: usize, d: usize) -> Self {
        Self { q, d, data: vec![0.0; q * d] }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sheet(&self, l: usize) -> &[f64] {
        &self.data[l * self.d..(l + 1) * self.d]
    }

    pub fn sheet_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.data[l * self.d..(l + 1) * self.d]
    }

    pub fn sheets(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { q: self.q, d: self.d, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// Sheets reordered by `perm`: sheet `l` of the result is sheet `perm[l]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.sheet(p));
        }
        Self { q: self.q, d: self.d, data }
    }

    /// Sheets sorted lexicographically; used for hashing and serialization.
    pub fn canonical(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.q).collect();
        idx.sort_by(|&a, &b| lex_cmp(self.sheet(a), self.sheet(b)));
        self.permuted(&idx)
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn max_sheet_norm(&self) -> f64 {
        self.sheets().map(norm).fold(0.0, f64::max)
    }

    /// `Q d x_1 ... x_{Qd}` with sheets in canonical order.
    pub fn to_record(&self) -> String {
        let c = self.canonical();
        let mut s = format!("{} {}", self.q, self.d);
        for x in &c.data {
            s.push(' ');
            s.push_str(&format!("{x:?}"));
        }
        s
    }

    pub fn from_record(line: &str) -> Result<Self> {
        let mut it = line.split_whitespace();
        let mut next_usize = |name: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| Error::InvalidPoint(format!("missing {name}")))?
                .parse()
                .map_err(|_| Error::InvalidPoint(format!("bad {name}")))
        };
        let q = next_usize("Q")?;
        let d = next_usize("d")?;
        let data = it
            .map(|t| t.parse::<f64>().map_err(|_| Error::InvalidPoint(format!("bad number `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(q, d, data)
    }
}

impl PartialEq for QPoint {
    /// Multiset equality.
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.d == other.d && self.canonical().data == other.canonical().data
    }
}

impl fmt::Display for QPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sheets().map(|s| format!("⟦{s:?}⟧")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_shape(t: &QPoint, s: &QPoint) -> Result<()> {
    if t.q != s.q {
        return Err(Error::DimensionMismatch { what: "Q", left: t.q, right: s.q });
    }
    if t.d != s.d {
        return Err(Error::DimensionMismatch { what: "d", left: t.d, right: s.d });
    }
    Ok(())
}

/// Q×Q matrix of squared sheet distances, row-major.
pub fn cost_matrix(t: &QPoint, s: &QPoint) -> Result<Vec<f64>> {
    check_shape(t, s)?;
    let q = t.q;
    let mut c = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            c[i * q + j] = dist_sq(t.sheet(i), s.sheet(j));
        }
    }
    Ok(c)
}

/// Optimal matching: sheet `l` of `t` is paired with sheet `perm[l]` of `s`.
/// Returns the permutation and the squared distance it realizes.
pub fn optimal_matching(t: &QPoint, s: &QPoint) -> Result<(Vec<usize>, f64)> {
    let c = cost_matrix(t, s)?;
    Ok(assignment::solve(&c, t.q))
}

pub fn g_distance(t: &QPoint, s: &QPoint) -> Result<f64> {
    Ok(optimal_matching(t, s)?.1.max(0.0).sqrt())
}

pub fn eta_mean(t: &QPoint) -> Vec<f64> {
    let mut m = vec![0.0; t.d];
    for s in t.sheets() {
        for (a, b) in m.iter_mut().zip(s) {
            *a += b;
        }
    }
    let q = t.q as f64;
    m.iter_mut().for_each(|a| *a /= q);
    m
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spread {
    pub diameter: f64,
    /// Smallest distance between sheets farther apart than the tolerance.
    pub separation: f64,
    pub support: usize,
}

pub fn spread_stats(t: &QPoint, tau: f64) -> Spread {
    let mut diameter: f64 = 0.0;
    let mut separation = f64::INFINITY;
    for i in 0..t.q {
        for j in i + 1..t.q {
            let dij = dist_sq(t.sheet(i), t.sheet(j)).sqrt();
            diameter = diameter.max(dij);
            if dij > tau {
                separation = separation.min(dij);
            }
        }
    }
    // distinct values: greedy clustering in storage order
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..t.q {
        if !reps.iter().any(|&r| dist_sq(t.sheet(i), t.sheet(r)).sqrt() <= tau) {
            reps.push(i);
        }
    }
    Spread { diameter, separation, support: reps.len() }
}

/// Largest |⟨b_i, b_j⟩ − δ_ij| over a set of vectors.
pub fn gram_deviation(basis: &[Vec<f64>]) -> f64 {
    let mut dev: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let g: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g - target).abs());
        }
    }
    dev
}

/// Sheet-wise orthogonal projection onto span(basis).
pub fn fiber_project(t: &QPoint, basis: &[Vec<f64>]) -> Result<QPoint> {
    for b in basis {
        if b.len() != t.d {
            return Err(Error::DimensionMismatch { what: "basis vector length", left: b.len(), right: t.d });
        }
    }
    let dev = gram_deviation(basis);
    if dev > 1e-10 {
        return Err(Error::NonOrthonormal { max_deviation: dev });
    }
    let mut out = QPoint::zero(t.q, t.d);
    for l in 0..t.q {
        let p = t.sheet(l);
        let o = out.sheet_mut(l);
        for b in basis {
            let c: f64 = p.iter().zip(b).map(|(x, y)| x * y).sum();
            for (oi, bi) in o.iter_mut().zip(b) {
                *oi += c * bi;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qp(sheets: &[&[f64]]) -> QPoint {
        QPoint::from_sheets(sheets).unwrap()
    }

    #[test]
    fn distance_examples() {
        let t = qp(&[&[0.0, 0.0], &[3.0, 4.0]]);
        let s = qp(&[&[3.0, 4.0], &[0.0, 0.0]]);
        assert_eq!(g_distance(&t, &s).unwrap(), 0.0);
        let t = QPoint::zero(2, 2);
        let s = qp(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        assert!((g_distance(&t, &s).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mismatch_is_an_error() {
        let t = QPoint::zero(2, 2);
        assert!(g_distance(&t, &QPoint::zero(3, 2)).is_err());
        assert!(g_distance(&t, &QPoint::zero(2, 3)).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_mean(&qp(&[&[1.0, 0.0], &[3.0, 0.0]])), vec![2.0, 0.0]);
        let v = [0.3, -1.25, 7.0];
        assert_eq!(eta_mean(&QPoint::repeated(4, &v).unwrap()), v.to_vec());
    }

    #[test]
    fn spread_examples() {
        let s = spread_stats(&QPoint::repeated(3, &[1.0, 2.0]).unwrap(), TAU_COIN);
        assert_eq!((s.diameter, s.separation, s.support), (0.0, f64::INFINITY, 1));
        let s = spread_stats(&qp(&[&[0.0, 0.0], &[1.0, 0.0]]), TAU_COIN);
        assert_eq!((s.diameter, s.separation, s.support), (1.0, 1.0, 2));
        let s = spread_stats(&qp(&[&[0.0, 0.0], &[0.0, 0.0], &[2.0, 0.0]]), TAU_COIN);
        assert_eq!((s.diameter, s.separation, s.support), (2.0, 2.0, 2));
    }

    #[test]
    fn projection_examples() {
        let t = qp(&[&[1.0, 2.0, 3.0]]);
        let e3 = vec![vec![0.0, 0.0, 1.0]];
        assert_eq!(fiber_project(&t, &e3).unwrap(), qp(&[&[0.0, 0.0, 3.0]]));
        let full = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(fiber_project(&t, &full).unwrap(), t);
        let bad = vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]];
        match fiber_project(&t, &bad) {
            Err(Error::NonOrthonormal { max_deviation }) => assert!((max_deviation - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn record_round_trip() {
        let t = qp(&[&[0.1, -2.0], &[-0.3, 1e-17]]);
        let r = t.to_record();
        assert!(r.starts_with("2 2 -0.3 1e-17 0.1 -2.0"));
        let back = QPoint::from_record(&r).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.as_flat(), t.canonical().as_flat());
    }

    fn arb_pair(max_q: usize) -> impl Strategy<Value = (QPoint, QPoint, QPoint)> {
        (1..=max_q, 1usize..=3).prop_flat_map(|(q, d)| {
            let v = prop::collection::vec(-5.0f64..5.0, q * d);
            (v.clone(), v.clone(), v).prop_map(move |(a, b, c)| {
                (QPoint::new(q, d, a).unwrap(), QPoint::new(q, d, b).unwrap(), QPoint::new(q, d, c).unwrap())
            })
        })
    }

    proptest! {
        #[test]
        fn metric_axioms((t, s, u) in arb_pair(6)) {
            let ts = g_distance(&t, &s).unwrap();
            prop_assert!(ts >= 0.0);
            prop_assert!((ts - g_distance(&s, &t).unwrap()).abs() < 1e-12);
            prop_assert!(g_distance(&t, &t).unwrap() == 0.0);
            let su = g_distance(&s, &u).unwrap();
            let tu = g_distance(&t, &u).unwrap();
            prop_assert!(tu <= ts + su + 1e-12);
        }

        #[test]
        fn distance_to_zero((t, _s, _u) in arb_pair(6)) {
            let z = QPoint::zero(t.q(), t.d());
            let d = g_distance(&t, &z).unwrap();
            prop_assert!((d * d - t.norm_sq()).abs() <= 1e-12 * (1.0 + t.norm_sq()));
        }

        #[test]
        fn eta_is_lipschitz((t, s, _u) in arb_pair(6)) {
            let a = eta_mean(&t);
            let b = eta_mean(&s);
            let lhs = dist_sq(&a, &b).sqrt();
            prop_assert!(lhs <= g_distance(&t, &s).unwrap() / (t.q() as f64).sqrt() + 1e-12);
        }

        #[test]
        fn eta_ignores_order((t, _s, _u) in arb_pair(6)) {
            let rev: Vec<usize> = (0..t.q()).rev().collect();
            let a = eta_mean(&t);
            let b = eta_mean(&t.permuted(&rev));
            prop_assert!(dist_sq(&a, &b).sqrt() < 1e-12);
        }

        #[test]
        fn projection_contracts_distance((t, s, _u) in arb_pair(5)) {
            prop_assume!(t.d() >= 2);
            let d = t.d();
            let mut e = vec![0.0; d];
            e[d - 1] = 1.0;
            let mut f = vec![0.0; d];
            f[0] = 0.6;
            f[1] = 0.8;
            if d == 2 {
                f = vec![0.8, -0.6];
                e = vec![0.6, 0.8];
            }
            let basis = vec![e, f];
            let tp = fiber_project(&t, &basis).unwrap();
            let sp = fiber_project(&s, &basis).unwrap();
            prop_assert!(g_distance(&tp, &sp).unwrap() <= g_distance(&t, &s).unwrap() + 1e-12);
            let tpp = fiber_project(&tp, &basis).unwrap();
            prop_assert!(g_distance(&tp, &tpp).unwrap() < 1e-12);
        }
    }
}
