//! Symplectic, similitude and Heisenberg groups over a tower level, Galois-twisted
//! elements, enumeration, ordinary and twisted conjugacy classes, and the elliptic
//! torus of `SL₂`.
//!
//! Matrices act on column vectors. For `Sp_{2n}` the coordinates are ordered
//! `e_1..e_n, f_1..f_n` with `⟨e_i, f_j⟩ = δ_ij`, so `J = [[0, I], [-I, 0]]` and
//! `⟨u, v⟩ = uᵀ J v`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fieldtower::{FieldElem, Tower};

/// Default cap on the order of groups that are enumerated.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Square matrix over the ambient field, row-major.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Mat {
    n: usize,
    e: Vec<FieldElem>,
}

impl Mat {
    pub fn from_rows(rows: Vec<Vec<FieldElem>>) -> Result<Mat> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix is not square".into()));
        }
        Ok(Mat { n, e: rows.into_iter().flatten().collect() })
    }

    /// From small integers, reduced mod p.
    pub fn from_ints(t: &Tower, rows: &[&[i64]]) -> Result<Mat> {
        Mat::from_rows(rows.iter().map(|r| r.iter().map(|&v| t.from_int(v)).collect()).collect())
    }

    pub fn zero(t: &Tower, n: usize) -> Mat {
        Mat { n, e: vec![t.zero(); n * n] }
    }

    pub fn identity(t: &Tower, n: usize) -> Mat {
        let mut m = Mat::zero(t, n);
        for i in 0..n {
            m.e[i * n + i] = t.one();
        }
        m
    }

    pub fn scalar(t: &Tower, n: usize, x: &FieldElem) -> Mat {
        let mut m = Mat::zero(t, n);
        for i in 0..n {
            m.e[i * n + i] = x.clone();
        }
        m
    }

    pub fn diag(t: &Tower, d: &[FieldElem]) -> Mat {
        let n = d.len();
        let mut m = Mat::zero(t, n);
        for (i, x) in d.iter().enumerate() {
            m.e[i * n + i] = x.clone();
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldElem {
        &self.e[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: FieldElem) {
        self.e[i * self.n + j] = x;
    }

    pub fn entries(&self) -> &[FieldElem] {
        &self.e
    }

    pub fn mul(&self, t: &Tower, o: &Mat) -> Mat {
        let n = self.n;
        debug_assert_eq!(n, o.n);
        let mut out = Mat::zero(t, n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.e[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &o.e[k * n + j];
                    if !b.is_zero() {
                        out.e[i * n + j] = t.add(&out.e[i * n + j], &t.mul(a, b));
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, t: &Tower, o: &Mat) -> Mat {
        Mat { n: self.n, e: self.e.iter().zip(o.e.iter()).map(|(a, b)| t.add(a, b)).collect() }
    }

    pub fn sub(&self, t: &Tower, o: &Mat) -> Mat {
        Mat { n: self.n, e: self.e.iter().zip(o.e.iter()).map(|(a, b)| t.sub(a, b)).collect() }
    }

    pub fn neg(&self, t: &Tower) -> Mat {
        Mat { n: self.n, e: self.e.iter().map(|a| t.neg(a)).collect() }
    }

    pub fn scale(&self, t: &Tower, x: &FieldElem) -> Mat {
        Mat { n: self.n, e: self.e.iter().map(|a| t.mul(a, x)).collect() }
    }

    pub fn transpose(&self) -> Mat {
        let n = self.n;
        let mut e = self.e.clone();
        for i in 0..n {
            for j in 0..n {
                e[j * n + i] = self.e[i * n + j].clone();
            }
        }
        Mat { n, e }
    }

    pub fn frob(&self, t: &Tower, j: i64) -> Mat {
        Mat { n: self.n, e: self.e.iter().map(|a| t.frobenius(a, j)).collect() }
    }

    pub fn apply(&self, t: &Tower, v: &[FieldElem]) -> Vec<FieldElem> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = t.zero();
                for (k, x) in v.iter().enumerate() {
                    let a = &self.e[i * n + k];
                    if !a.is_zero() && !x.is_zero() {
                        acc = t.add(&acc, &t.mul(a, x));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn is_identity(&self, t: &Tower) -> bool {
        *self == Mat::identity(t, self.n)
    }

    pub fn in_level(&self, t: &Tower, d: usize) -> bool {
        self.e.iter().all(|x| t.in_level(x, d))
    }

    pub fn det(&self, t: &Tower) -> FieldElem {
        let n = self.n;
        let mut a = self.e.clone();
        let mut det = t.one();
        for c in 0..n {
            let Some(piv) = (c..n).find(|&r| !a[r * n + c].is_zero()) else {
                return t.zero();
            };
            if piv != c {
                for k in 0..n {
                    a.swap(piv * n + k, c * n + k);
                }
                det = t.neg(&det);
            }
            let pv = a[c * n + c].clone();
            det = t.mul(&det, &pv);
            let inv = t.inv(&pv).expect("pivot is nonzero");
            for r in c + 1..n {
                let f = t.mul(&a[r * n + c], &inv);
                if f.is_zero() {
                    continue;
                }
                for k in c..n {
                    let sub = t.mul(&f, &a[c * n + k]);
                    a[r * n + k] = t.sub(&a[r * n + k], &sub);
                }
            }
        }
        det
    }

    pub fn inv(&self, t: &Tower) -> Result<Mat> {
        let n = self.n;
        if n == 2 {
            let det = self.det(t);
            if det.is_zero() {
                return Err(Error::Singular);
            }
            let di = t.inv(&det)?;
            let (a, b, c, d) = (self.get(0, 0), self.get(0, 1), self.get(1, 0), self.get(1, 1));
            return Ok(Mat {
                n,
                e: vec![t.mul(d, &di), t.neg(&t.mul(b, &di)), t.neg(&t.mul(c, &di)), t.mul(a, &di)],
            });
        }
        let mut a = self.e.clone();
        let mut b = Mat::identity(t, n).e;
        for c in 0..n {
            let piv = (c..n).find(|&r| !a[r * n + c].is_zero()).ok_or(Error::Singular)?;
            if piv != c {
                for k in 0..n {
                    a.swap(piv * n + k, c * n + k);
                    b.swap(piv * n + k, c * n + k);
                }
            }
            let inv = t.inv(&a[c * n + c])?;
            for k in 0..n {
                a[c * n + k] = t.mul(&a[c * n + k], &inv);
                b[c * n + k] = t.mul(&b[c * n + k], &inv);
            }
            for r in 0..n {
                if r == c || a[r * n + c].is_zero() {
                    continue;
                }
                let f = a[r * n + c].clone();
                for k in 0..n {
                    let sa = t.mul(&f, &a[c * n + k]);
                    a[r * n + k] = t.sub(&a[r * n + k], &sa);
                    let sb = t.mul(&f, &b[c * n + k]);
                    b[r * n + k] = t.sub(&b[r * n + k], &sb);
                }
            }
        }
        Ok(Mat { n, e: b })
    }

    /// Splits a `2h × 2h` matrix into `h × h` blocks `(a, b, c, d)` = `[[a, b], [c, d]]`.
    pub fn blocks(&self) -> (Mat, Mat, Mat, Mat) {
        let h = self.n / 2;
        let blk = |r0: usize, c0: usize| Mat {
            n: h,
            e: (0..h).flat_map(|i| (0..h).map(move |j| (i, j))).map(|(i, j)| self.get(r0 + i, c0 + j).clone()).collect(),
        };
        (blk(0, 0), blk(0, h), blk(h, 0), blk(h, h))
    }

    pub fn from_blocks(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
        let h = a.n;
        let n = 2 * h;
        let mut e = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (blk, ii, jj) = match (i < h, j < h) {
                    (true, true) => (a, i, j),
                    (true, false) => (b, i, j - h),
                    (false, true) => (c, i - h, j),
                    (false, false) => (d, i - h, j - h),
                };
                e.push(blk.get(ii, jj).clone());
            }
        }
        Mat { n, e }
    }

    /// Block-diagonal embedding of `Sp_{2n₁} × Sp_{2n₂}` into `Sp_{2(n₁+n₂)}`, keeping the
    /// `e, f` coordinate split of each factor.
    pub fn symplectic_direct_sum(t: &Tower, g1: &Mat, g2: &Mat) -> Mat {
        let (a1, b1, c1, d1) = g1.blocks();
        let (a2, b2, c2, d2) = g2.blocks();
        let ds = |x: &Mat, y: &Mat| {
            let n = x.n + y.n;
            let mut m = Mat::zero(t, n);
            for i in 0..x.n {
                for j in 0..x.n {
                    m.set(i, j, x.get(i, j).clone());
                }
            }
            for i in 0..y.n {
                for j in 0..y.n {
                    m.set(x.n + i, x.n + j, y.get(i, j).clone());
                }
            }
            m
        };
        Mat::from_blocks(&ds(&a1, &a2), &ds(&b1, &b2), &ds(&c1, &c2), &ds(&d1, &d2))
    }

    /// Entries as `;`-separated rows of comma-separated coefficient vectors.
    pub fn to_text(&self) -> String {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| coeff_text(self.get(i, j))).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join(";")
    }
}

pub(crate) fn coeff_text(x: &FieldElem) -> String {
    x.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// The standard form matrix `J` of half-dimension `n`.
pub fn form_matrix(t: &Tower, n: usize) -> Mat {
    let i = Mat::identity(t, n);
    let z = Mat::zero(t, n);
    Mat::from_blocks(&z, &i, &i.neg(t), &z)
}

/// `⟨u, v⟩ = uᵀ J v`.
pub fn symplectic_form(t: &Tower, u: &[FieldElem], v: &[FieldElem]) -> FieldElem {
    let n = u.len() / 2;
    let mut acc = t.zero();
    for i in 0..n {
        acc = t.add(&acc, &t.mul(&u[i], &v[n + i]));
        acc = t.sub(&acc, &t.mul(&u[n + i], &v[i]));
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    Symp,
    Similitude(FieldElem),
    Neither,
}

/// Classifies a `2n × 2n` matrix over level `d`.
pub fn membership(t: &Tower, g: &Mat, d: usize) -> Result<Membership> {
    if !g.n.is_multiple_of(2) || g.n == 0 {
        return Err(Error::DimensionMismatch(format!("size {} is not even", g.n)));
    }
    if !t.has_level(d) || !g.in_level(t, d) {
        return Err(Error::LevelMismatch(format!("matrix entries not in level {d}")));
    }
    let j = form_matrix(t, g.n / 2);
    let lhs = g.transpose().mul(t, &j).mul(t, g);
    // the similitude factor is read off ⟨e_1, f_1⟩
    let lambda = lhs.get(0, g.n / 2).clone();
    if lambda.is_zero() || lhs != j.scale(t, &lambda) {
        return Ok(Membership::Neither);
    }
    if lambda == t.one() {
        Ok(Membership::Symp)
    } else {
        Ok(Membership::Similitude(lambda))
    }
}

/// Similitude factor of an element known to be a similitude.
pub fn similitude_factor(t: &Tower, g: &Mat) -> FieldElem {
    let j = form_matrix(t, g.n / 2);
    let lhs = g.transpose().mul(t, &j).mul(t, g);
    lhs.get(0, g.n / 2).clone()
}

/// Inverse of a symplectic matrix, `-J gᵀ J`.
pub fn symplectic_inverse(t: &Tower, g: &Mat) -> Mat {
    let j = form_matrix(t, g.n / 2);
    j.mul(t, &g.transpose()).mul(t, &j).neg(t)
}

// ---- Heisenberg group ----

/// Element `(v, t)` of the Heisenberg group with
/// `(v₁, t₁)(v₂, t₂) = (v₁ + v₂, t₁ + t₂ + ½⟨v₁, v₂⟩)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct HeisElem {
    pub v: Vec<FieldElem>,
    pub t: FieldElem,
}

impl HeisElem {
    pub fn identity(t: &Tower, n: usize) -> HeisElem {
        HeisElem { v: vec![t.zero(); 2 * n], t: t.zero() }
    }

    pub fn central(tw: &Tower, n: usize, k: FieldElem) -> HeisElem {
        HeisElem { v: vec![tw.zero(); 2 * n], t: k }
    }

    pub fn is_central(&self) -> bool {
        self.v.iter().all(|x| x.is_zero())
    }

    pub fn frob(&self, tw: &Tower, j: i64) -> HeisElem {
        HeisElem { v: self.v.iter().map(|x| tw.frobenius(x, j)).collect(), t: tw.frobenius(&self.t, j) }
    }

    /// Action of a symplectic (or similitude) matrix: `s(v, t) = (s v, λ(s) t)`.
    pub fn act(&self, tw: &Tower, s: &Mat) -> HeisElem {
        let lambda = similitude_factor(tw, s);
        HeisElem { v: s.apply(tw, &self.v), t: tw.mul(&lambda, &self.t) }
    }

    pub fn in_level(&self, tw: &Tower, d: usize) -> bool {
        self.v.iter().all(|x| tw.in_level(x, d)) && tw.in_level(&self.t, d)
    }
}

pub fn heis_mul(tw: &Tower, a: &HeisElem, b: &HeisElem) -> Result<HeisElem> {
    if a.v.len() != b.v.len() {
        return Err(Error::LevelMismatch("Heisenberg elements of different dimension".into()));
    }
    let v: Vec<FieldElem> = a.v.iter().zip(b.v.iter()).map(|(x, y)| tw.add(x, y)).collect();
    let w = symplectic_form(tw, &a.v, &b.v);
    let t = tw.add(&tw.add(&a.t, &b.t), &tw.mul(&tw.half(), &w));
    Ok(HeisElem { v, t })
}

pub fn heis_inv(tw: &Tower, h: &HeisElem) -> HeisElem {
    HeisElem { v: h.v.iter().map(|x| tw.neg(x)).collect(), t: tw.neg(&h.t) }
}

/// Element `(s, h)` of `Sp ⋉ H` with `(s, h)(s', h') = (s s', h · s(h'))`; it equals
/// `(1, h)(s, 1)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SpHElem {
    pub s: Mat,
    pub h: HeisElem,
}

impl SpHElem {
    pub fn from_sp(t: &Tower, s: Mat) -> SpHElem {
        let n = s.size() / 2;
        SpHElem { s, h: HeisElem::identity(t, n) }
    }

    pub fn from_heis(t: &Tower, h: HeisElem) -> SpHElem {
        let n = h.v.len() / 2;
        SpHElem { s: Mat::identity(t, 2 * n), h }
    }
}

// ---- generic group interface ----

/// Group elements over a tower, with the Frobenius acting entrywise.
pub trait GroupElem: Clone + Eq + Hash + Ord + Send + Sync + fmt::Debug {
    fn op(&self, t: &Tower, o: &Self) -> Self;
    fn inverse(&self, t: &Tower) -> Self;
    fn frob(&self, t: &Tower, j: i64) -> Self;
    fn identity_like(&self, t: &Tower) -> Self;
    fn in_level(&self, t: &Tower, d: usize) -> bool;
    fn key_text(&self) -> String;
}

impl GroupElem for Mat {
    fn op(&self, t: &Tower, o: &Self) -> Self {
        self.mul(t, o)
    }
    fn inverse(&self, t: &Tower) -> Self {
        self.inv(t).expect("group elements are invertible")
    }
    fn frob(&self, t: &Tower, j: i64) -> Self {
        Mat::frob(self, t, j)
    }
    fn identity_like(&self, t: &Tower) -> Self {
        Mat::identity(t, self.n)
    }
    fn in_level(&self, t: &Tower, d: usize) -> bool {
        Mat::in_level(self, t, d)
    }
    fn key_text(&self) -> String {
        self.to_text()
    }
}

impl GroupElem for SpHElem {
    fn op(&self, t: &Tower, o: &Self) -> Self {
        let h = heis_mul(t, &self.h, &o.h.act(t, &self.s)).expect("same dimension");
        SpHElem { s: self.s.mul(t, &o.s), h }
    }
    fn inverse(&self, t: &Tower) -> Self {
        let si = self.s.inv(t).expect("invertible");
        let h = heis_inv(t, &self.h).act(t, &si);
        SpHElem { s: si, h }
    }
    fn frob(&self, t: &Tower, j: i64) -> Self {
        SpHElem { s: self.s.frob(t, j), h: self.h.frob(t, j) }
    }
    fn identity_like(&self, t: &Tower) -> Self {
        SpHElem { s: Mat::identity(t, self.s.size()), h: HeisElem::identity(t, self.s.size() / 2) }
    }
    fn in_level(&self, t: &Tower, d: usize) -> bool {
        self.s.in_level(t, d) && self.h.in_level(t, d)
    }
    fn key_text(&self) -> String {
        let v: Vec<String> = self.h.v.iter().map(coeff_text).collect();
        format!("{}|{}|{}", self.s.to_text(), v.join(" "), coeff_text(&self.h.t))
    }
}

/// Element `(σ^i, g)` of `Γ ⋉ G(F_{q^m})`, equal to `(1, g)(σ^i, 1)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TwistedElem<G> {
    pub i: usize,
    pub g: G,
}

/// `(σ^i, g)(σ^j, h) = (σ^{i+j}, g σ^i(h))`, exponent reduced mod `m`.
pub fn twisted_mul<G: GroupElem>(t: &Tower, m: usize, a: &TwistedElem<G>, b: &TwistedElem<G>) -> TwistedElem<G> {
    TwistedElem { i: (a.i + b.i) % m, g: a.g.op(t, &b.g.frob(t, a.i as i64)) }
}

pub fn twisted_inv<G: GroupElem>(t: &Tower, m: usize, a: &TwistedElem<G>) -> TwistedElem<G> {
    let i = (m - a.i % m) % m;
    TwistedElem { i, g: a.g.inverse(t).frob(t, i as i64) }
}

/// `Γ ⋉ G` as a group in its own right, with `Γ = Gal(F_{q^m}/F_q)` and `m` the relative
/// degree of the tower; `frob` acts on the `G`-component only.
impl<G: GroupElem> GroupElem for TwistedElem<G> {
    fn op(&self, t: &Tower, o: &Self) -> Self {
        twisted_mul(t, t.rel_degree(), self, o)
    }
    fn inverse(&self, t: &Tower) -> Self {
        twisted_inv(t, t.rel_degree(), self)
    }
    fn frob(&self, t: &Tower, j: i64) -> Self {
        TwistedElem { i: self.i, g: self.g.frob(t, j) }
    }
    fn identity_like(&self, t: &Tower) -> Self {
        TwistedElem { i: 0, g: self.g.identity_like(t) }
    }
    fn in_level(&self, t: &Tower, d: usize) -> bool {
        self.g.in_level(t, d)
    }
    fn key_text(&self) -> String {
        format!("s{}|{}", self.i, self.g.key_text())
    }
}

/// Twisted conjugate `h g σ^i(h)^{-1}`.
pub fn twisted_conj<G: GroupElem>(t: &Tower, i: usize, h: &G, g: &G) -> G {
    h.op(t, g).op(t, &h.frob(t, i as i64).inverse(t))
}

// ---- group descriptors and enumeration ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// `Sp_{2n}`
    Sp,
    /// `GSp_{2n}`
    GSp,
    /// `GL_n`
    GL,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    pub kind: GroupKind,
    /// Half-dimension for `Sp`/`GSp`, matrix size for `GL`.
    pub n: usize,
}

impl GroupSpec {
    pub fn sp(n: usize) -> GroupSpec {
        GroupSpec { kind: GroupKind::Sp, n }
    }

    pub fn gsp(n: usize) -> GroupSpec {
        GroupSpec { kind: GroupKind::GSp, n }
    }

    pub fn gl(n: usize) -> GroupSpec {
        GroupSpec { kind: GroupKind::GL, n }
    }

    pub fn matrix_size(&self) -> usize {
        match self.kind {
            GroupKind::GL => self.n,
            _ => 2 * self.n,
        }
    }

    /// Group order over a field with `qd` elements.
    pub fn order(&self, qd: u128) -> u128 {
        let n = self.n as u32;
        match self.kind {
            GroupKind::Sp | GroupKind::GSp => {
                let mut o = qd.saturating_pow(n * n);
                for i in 1..=n {
                    o = o.saturating_mul(qd.saturating_pow(2 * i) - 1);
                }
                if self.kind == GroupKind::GSp {
                    o = o.saturating_mul(qd - 1);
                }
                o
            }
            GroupKind::GL => (0..n).fold(1u128, |acc, i| acc.saturating_mul(qd.saturating_pow(n) - qd.saturating_pow(i))),
        }
    }

    pub fn contains(&self, t: &Tower, g: &Mat, d: usize) -> bool {
        if g.size() != self.matrix_size() || !g.in_level(t, d) {
            return false;
        }
        match self.kind {
            GroupKind::GL => !g.det(t).is_zero(),
            GroupKind::Sp => membership(t, g, d).is_ok_and(|m| m == Membership::Symp),
            GroupKind::GSp => membership(t, g, d).is_ok_and(|m| m != Membership::Neither),
        }
    }
}

/// Siegel unipotent `[[1, b], [0, 1]]`.
pub fn siegel_unipotent(t: &Tower, b: &Mat) -> Mat {
    let n = b.size();
    Mat::from_blocks(&Mat::identity(t, n), b, &Mat::zero(t, n), &Mat::identity(t, n))
}

/// Levi element `[[a, 0], [0, a^{-T}]]`.
pub fn levi(t: &Tower, a: &Mat) -> Result<Mat> {
    let n = a.size();
    let ait = a.inv(t)?.transpose();
    Ok(Mat::from_blocks(a, &Mat::zero(t, n), &Mat::zero(t, n), &ait))
}

/// Antidiagonal element `[[0, -c^{-T}], [c, 0]]` with lower-left block `c: X → X*`.
pub fn weyl(t: &Tower, c: &Mat) -> Result<Mat> {
    let n = c.size();
    let cp = c.inv(t)?.transpose().neg(t);
    Ok(Mat::from_blocks(&Mat::zero(t, n), &cp, c, &Mat::zero(t, n)))
}

/// Similitude `diag(1, …, 1, λ, …, λ)` with factor `λ`.
pub fn similitude_diag(t: &Tower, n: usize, lambda: &FieldElem) -> Mat {
    let mut d = vec![t.one(); n];
    d.extend(std::iter::repeat_n(lambda.clone(), n));
    Mat::diag(t, &d)
}

/// A generator of `F_{q^d}^×`.
pub fn primitive_element(t: &Tower, d: usize) -> Result<FieldElem> {
    let order = t.level_size(d) - 1;
    let mut primes = Vec::new();
    let mut r = order;
    let mut k = 2u128;
    while k * k <= r {
        if r.is_multiple_of(k) {
            primes.push(k);
            while r.is_multiple_of(k) {
                r /= k;
            }
        }
        k += 1;
    }
    if r > 1 {
        primes.push(r);
    }
    for x in t.elements(d)? {
        if x.is_zero() {
            continue;
        }
        if primes.iter().all(|&l| t.pow(x, order / l) != t.one()) {
            return Ok(x.clone());
        }
    }
    unreachable!("finite fields have primitive elements")
}

fn elementary(t: &Tower, n: usize, i: usize, j: usize, x: &FieldElem) -> Mat {
    let mut m = Mat::identity(t, n);
    let v = t.add(m.get(i, j), x);
    m.set(i, j, v);
    m
}

fn symmetric_unit(t: &Tower, n: usize, i: usize, j: usize, x: &FieldElem) -> Mat {
    let mut b = Mat::zero(t, n);
    b.set(i, j, x.clone());
    b.set(j, i, x.clone());
    b
}

/// Generating set of the group at level `d`.
pub fn generators(t: &Tower, spec: GroupSpec, d: usize) -> Result<Vec<Mat>> {
    let basis = t.level_basis(d);
    let gen = primitive_element(t, d)?;
    let n = spec.n;
    let mut gens = Vec::new();
    match spec.kind {
        GroupKind::GL => {
            let mut dg = vec![t.one(); n];
            dg[0] = gen;
            gens.push(Mat::diag(t, &dg));
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        for x in &basis {
                            gens.push(elementary(t, n, i, j, x));
                        }
                    }
                }
            }
        }
        GroupKind::Sp | GroupKind::GSp => {
            for i in 0..n {
                for j in i..n {
                    for x in &basis {
                        gens.push(siegel_unipotent(t, &symmetric_unit(t, n, i, j, x)));
                    }
                }
            }
            gens.push(weyl(t, &Mat::identity(t, n))?);
            let mut dg = vec![t.one(); n];
            dg[0] = gen.clone();
            gens.push(levi(t, &Mat::diag(t, &dg))?);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        gens.push(levi(t, &elementary(t, n, i, j, &t.one()))?);
                    }
                }
            }
            if spec.kind == GroupKind::GSp {
                gens.push(similitude_diag(t, n, &gen));
            }
        }
    }
    Ok(gens)
}

/// Closure of `gens` under multiplication, sorted canonically.
pub fn closure<G: GroupElem>(t: &Tower, gens: &[G], cap: u128) -> Result<Vec<G>> {
    let id = gens[0].identity_like(t);
    let mut seen: HashSet<G> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(id.clone());
    queue.push_back(id);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = x.op(t, g);
            if seen.insert(y.clone()) {
                if seen.len() as u128 > cap {
                    return Err(Error::GroupTooLarge { order: seen.len() as u128, cap });
                }
                queue.push_back(y);
            }
        }
    }
    let mut out: Vec<G> = seen.into_iter().collect();
    out.sort();
    Ok(out)
}

/// All elements of the group at level `d`, in canonical order.
pub fn enumerate_group(t: &Tower, spec: GroupSpec, d: usize, cap: u128) -> Result<Vec<Mat>> {
    t.elements(d)?;
    let order = spec.order(t.level_size(d));
    if order > cap {
        return Err(Error::GroupTooLarge { order, cap });
    }
    let gens = generators(t, spec, d)?;
    let out = closure(t, &gens, cap)?;
    debug_assert_eq!(out.len() as u128, order);
    Ok(out)
}

/// All elements of `Sp_{2n}(F_{q^d}) ⋉ H(F_{q^d})`.
pub fn enumerate_sp_heis(t: &Tower, n: usize, d: usize, cap: u128) -> Result<Vec<SpHElem>> {
    let qd = t.level_size(d);
    let order = GroupSpec::sp(n).order(qd).saturating_mul(qd.saturating_pow(2 * n as u32 + 1));
    if order > cap {
        return Err(Error::GroupTooLarge { order, cap });
    }
    let sp = enumerate_group(t, GroupSpec::sp(n), d, cap)?;
    let heis = enumerate_heis(t, n, d)?;
    let mut out = Vec::with_capacity(order as usize);
    for s in &sp {
        for h in &heis {
            out.push(SpHElem { s: s.clone(), h: h.clone() });
        }
    }
    out.sort();
    Ok(out)
}

/// All elements of `H(F_{q^d})`.
pub fn enumerate_heis(t: &Tower, n: usize, d: usize) -> Result<Vec<HeisElem>> {
    let els = t.elements(d)?;
    let mut out = Vec::new();
    for v in vectors(els, 2 * n) {
        for k in els {
            out.push(HeisElem { v: v.clone(), t: k.clone() });
        }
    }
    Ok(out)
}

/// All vectors of length `len` over the given element list, last coordinate fastest.
pub fn vectors(els: &[FieldElem], len: usize) -> Vec<Vec<FieldElem>> {
    let mut out: Vec<Vec<FieldElem>> = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * els.len());
        for v in &out {
            for x in els {
                let mut w = v.clone();
                w.push(x.clone());
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn random_invertible<R: Rng>(t: &Tower, n: usize, d: usize, rng: &mut R) -> Mat {
    loop {
        let rows: Vec<Vec<FieldElem>> = (0..n).map(|_| (0..n).map(|_| t.random_elem(d, rng)).collect()).collect();
        let m = Mat::from_rows(rows).unwrap();
        if !m.det(t).is_zero() {
            return m;
        }
    }
}

fn random_symmetric<R: Rng>(t: &Tower, n: usize, d: usize, rng: &mut R) -> Mat {
    let mut b = Mat::zero(t, n);
    for i in 0..n {
        for j in i..n {
            let x = t.random_elem(d, rng);
            b.set(i, j, x.clone());
            b.set(j, i, x);
        }
    }
    b
}

/// Random element from a random word in Siegel unipotents, Levi elements and the Weyl
/// element; deterministic in the RNG state.
pub fn random_element<R: Rng>(t: &Tower, spec: GroupSpec, d: usize, rng: &mut R) -> Result<Mat> {
    let n = spec.n;
    match spec.kind {
        GroupKind::GL => Ok(random_invertible(t, n, d, rng)),
        GroupKind::Sp | GroupKind::GSp => {
            let w = weyl(t, &Mat::identity(t, n))?;
            let mut g = levi(t, &random_invertible(t, n, d, rng))?;
            for _ in 0..n + 2 {
                g = g.mul(t, &siegel_unipotent(t, &random_symmetric(t, n, d, rng)));
                g = g.mul(t, &w);
            }
            g = g.mul(t, &siegel_unipotent(t, &random_symmetric(t, n, d, rng)));
            if rng.gen_bool(0.25) {
                // land in a proper parabolic now and then
                g = levi(t, &random_invertible(t, n, d, rng))?.mul(t, &siegel_unipotent(t, &random_symmetric(t, n, d, rng)));
            }
            if spec.kind == GroupKind::GSp {
                g = g.mul(t, &similitude_diag(t, n, &t.random_unit(d, rng)));
            }
            Ok(g)
        }
    }
}

pub fn random_heis<R: Rng>(t: &Tower, n: usize, d: usize, rng: &mut R) -> HeisElem {
    HeisElem { v: (0..2 * n).map(|_| t.random_elem(d, rng)).collect(), t: t.random_elem(d, rng) }
}

// ---- conjugacy classes ----

/// Partition of a group (or a twisted coset) into classes, each identified by its least
/// element.
#[derive(Clone, Debug)]
pub struct ClassPartition<G: GroupElem> {
    pub reps: Vec<G>,
    pub sizes: Vec<usize>,
    class_of: HashMap<G, usize>,
}

impl<G: GroupElem> ClassPartition<G> {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn class_of(&self, g: &G) -> Option<usize> {
        self.class_of.get(g).copied()
    }

    pub fn group_order(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// TSV with columns `class_id`, `representative`, `size`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("class_id\trepresentative\tsize\n");
        for (i, (r, n)) in self.reps.iter().zip(self.sizes.iter()).enumerate() {
            s.push_str(&format!("{i}\t{}\t{n}\n", r.key_text()));
        }
        s
    }
}

/// Orbits of `elements` under `g ↦ h g σ^i(h)^{-1}` for `h` in `actors`.
pub fn orbit_partition<G: GroupElem>(t: &Tower, elements: &[G], actors: &[G], i: usize) -> ClassPartition<G> {
    let mut class_of: HashMap<G, usize> = HashMap::with_capacity(elements.len());
    let mut reps = Vec::new();
    let mut sizes = Vec::new();
    let actor_pairs: Vec<(G, G)> = actors.iter().map(|h| (h.clone(), h.frob(t, i as i64).inverse(t))).collect();
    for g in elements {
        if class_of.contains_key(g) {
            continue;
        }
        let id = reps.len();
        let orbit: HashSet<G> = actor_pairs.par_iter().map(|(h, hsi)| h.op(t, g).op(t, hsi)).collect();
        sizes.push(orbit.len());
        for x in orbit {
            class_of.insert(x, id);
        }
        reps.push(g.clone());
    }
    ClassPartition { reps, sizes, class_of }
}

/// Ordinary conjugacy classes of an enumerated group.
pub fn conjugacy_classes<G: GroupElem>(t: &Tower, elements: &[G]) -> ClassPartition<G> {
    orbit_partition(t, elements, elements, 0)
}

/// `G(F')`-classes in the coset `σ^i ⋉ G(F')`, labelled by the `G`-component.
pub fn twisted_classes<G: GroupElem>(t: &Tower, elements: &[G], i: usize) -> ClassPartition<G> {
    orbit_partition(t, elements, elements, i)
}

// ---- elliptic torus of SL2 ----

/// Model of the maximal torus `{a + b u : a² - w b² = 1}` of `SL₂`, `u² = w` with `w` the
/// smallest non-square of `F_q`, realized as matrices `[[a, w b], [b, a]]`.
#[derive(Clone, Debug)]
pub struct TorusModel {
    pub w: FieldElem,
}

impl TorusModel {
    pub fn new(t: &Tower) -> Result<TorusModel> {
        Ok(TorusModel { w: t.smallest_nonsquare(1)? })
    }

    pub fn element(&self, t: &Tower, a: &FieldElem, b: &FieldElem) -> Mat {
        Mat::from_rows(vec![vec![a.clone(), t.mul(&self.w, b)], vec![b.clone(), a.clone()]]).unwrap()
    }

    /// `T(F_{q^d})`: elliptic of order `q^d + 1` for odd `d`, split of order `q^d - 1`
    /// for even `d`.
    pub fn elements(&self, t: &Tower, d: usize) -> Result<Vec<Mat>> {
        let els = t.elements(d)?;
        let mut out = Vec::new();
        for a in els {
            for b in els {
                let norm = t.sub(&t.square(a), &t.mul(&self.w, &t.square(b)));
                if norm == t.one() {
                    out.push(self.element(t, a, b));
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn contains(&self, t: &Tower, g: &Mat) -> bool {
        g.size() == 2
            && g.get(0, 0) == g.get(1, 1)
            && *g.get(0, 1) == t.mul(&self.w, g.get(1, 0))
            && g.det(t) == t.one()
    }

    /// Norm `s σ(s) ⋯ σ^{k-1}(s)` of a torus element over `k` Frobenius steps.
    pub fn norm(&self, t: &Tower, s: &Mat, k: usize) -> Mat {
        let mut acc = Mat::identity(t, 2);
        for j in 0..k {
            acc = acc.mul(t, &s.frob(t, j as i64));
        }
        acc
    }

    /// Order-2 character `ω` of the cyclic group `T(F_{q^d})` (`d` odd): `+1` on squares.
    pub fn omega(&self, t: &Tower, s: &Mat, d: usize) -> i8 {
        let order = t.level_size(d) + 1;
        let mut acc = Mat::identity(t, 2);
        let mut base = s.clone();
        let mut e = order / 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(t, &base);
            }
            base = base.mul(t, &base);
            e >>= 1;
        }
        if acc.is_identity(t) {
            1
        } else {
            -1
        }
    }

    /// `ω' = ω ∘ N_{T(F_{q^m})/T(F_q)}`.
    pub fn omega_prime(&self, t: &Tower, s: &Mat, m: usize) -> i8 {
        self.omega(t, &self.norm(t, s, m), 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f9() -> Tower {
        Tower::build(3, 1, 2).unwrap()
    }

    #[test]
    fn membership_examples() {
        let t = f9();
        let j = form_matrix(&t, 1);
        assert_eq!(membership(&t, &j, 1).unwrap(), Membership::Symp);
        let g = Mat::from_ints(&t, &[&[2, 0], &[0, 2]]).unwrap();
        assert_eq!(membership(&t, &g, 1).unwrap(), Membership::Symp);
        let g = Mat::from_ints(&t, &[&[2, 0], &[0, 1]]).unwrap();
        assert_eq!(membership(&t, &g, 1).unwrap(), Membership::Similitude(t.from_int(2)));
        let g = Mat::from_ints(&t, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]).unwrap();
        assert!(matches!(membership(&t, &g, 1), Err(Error::DimensionMismatch(_))));
        let g = Mat::from_ints(&t, &[&[1, 1, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]).unwrap();
        assert_eq!(membership(&t, &g, 1).unwrap(), Membership::Neither);
    }

    #[test]
    fn heisenberg_law() {
        let t = f9();
        let e1 = vec![t.one(), t.zero()];
        let f1 = vec![t.zero(), t.one()];
        let v = HeisElem { v: e1.clone(), t: t.zero() };
        let vv = heis_mul(&t, &v, &v).unwrap();
        assert_eq!(vv, HeisElem { v: vec![t.from_int(2), t.zero()], t: t.zero() });
        let w = HeisElem { v: f1, t: t.zero() };
        let vw = heis_mul(&t, &v, &w).unwrap();
        assert_eq!(vw, HeisElem { v: vec![t.one(), t.one()], t: t.from_int(2) });
        let h = HeisElem { v: vec![t.one(), t.from_int(2)], t: t.one() };
        assert_eq!(heis_mul(&t, &h, &heis_inv(&t, &h)).unwrap(), HeisElem::identity(&t, 1));
    }

    #[test]
    fn twisted_law() {
        let t = f9();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_element(&t, GroupSpec::sp(1), 2, &mut rng).unwrap();
        let one = Mat::identity(&t, 2);
        let s1 = TwistedElem { i: 1, g: one.clone() };
        let g0 = TwistedElem { i: 0, g: g.clone() };
        assert_eq!(twisted_mul(&t, 2, &s1, &g0), TwistedElem { i: 1, g: g.frob(&t, 1) });
        assert_eq!(twisted_mul(&t, 2, &g0, &s1), TwistedElem { i: 1, g: g.clone() });
        let sg = TwistedElem { i: 1, g: g.clone() };
        assert_eq!(twisted_mul(&t, 2, &sg, &sg), TwistedElem { i: 0, g: g.mul(&t, &g.frob(&t, 1)) });
    }

    #[test]
    fn group_axioms_on_random_triples() {
        let t = f9();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let a: Vec<SpHElem> = (0..3)
                .map(|_| SpHElem {
                    s: random_element(&t, GroupSpec::sp(1), 2, &mut rng).unwrap(),
                    h: random_heis(&t, 1, 2, &mut rng),
                })
                .collect();
            let lhs = a[0].op(&t, &a[1]).op(&t, &a[2]);
            let rhs = a[0].op(&t, &a[1].op(&t, &a[2]));
            assert_eq!(lhs, rhs);
            assert_eq!(a[0].op(&t, &a[0].inverse(&t)), a[0].identity_like(&t));
            let tw: Vec<TwistedElem<SpHElem>> = a.iter().enumerate().map(|(k, g)| TwistedElem { i: k % 2, g: g.clone() }).collect();
            let lhs = twisted_mul(&t, 2, &twisted_mul(&t, 2, &tw[0], &tw[1]), &tw[2]);
            let rhs = twisted_mul(&t, 2, &tw[0], &twisted_mul(&t, 2, &tw[1], &tw[2]));
            assert_eq!(lhs, rhs);
            let inv = twisted_inv(&t, 2, &tw[1]);
            assert_eq!(twisted_mul(&t, 2, &tw[1], &inv), TwistedElem { i: 0, g: a[0].identity_like(&t) });
        }
    }

    #[test]
    fn centre_is_central() {
        let t = f9();
        let heis = enumerate_heis(&t, 1, 1).unwrap();
        for z in heis.iter().filter(|h| h.is_central()) {
            for h in &heis {
                assert_eq!(heis_mul(&t, z, h).unwrap(), heis_mul(&t, h, z).unwrap());
            }
        }
    }

    #[test]
    fn enumeration_orders() {
        let t = f9();
        assert_eq!(enumerate_group(&t, GroupSpec::sp(1), 1, DEFAULT_ENUMERATION_CAP).unwrap().len(), 24);
        assert_eq!(enumerate_group(&t, GroupSpec::sp(1), 2, DEFAULT_ENUMERATION_CAP).unwrap().len(), 720);
        assert_eq!(enumerate_group(&t, GroupSpec::gsp(1), 1, DEFAULT_ENUMERATION_CAP).unwrap().len(), 48);
        assert_eq!(enumerate_group(&t, GroupSpec::gl(1), 2, DEFAULT_ENUMERATION_CAP).unwrap().len(), 8);
        assert!(matches!(
            enumerate_group(&t, GroupSpec::sp(2), 2, DEFAULT_ENUMERATION_CAP),
            Err(Error::GroupTooLarge { .. })
        ));
        assert_eq!(GroupSpec::sp(2).order(3), 51840);
    }

    #[test]
    fn class_counts() {
        let t = f9();
        let g1 = enumerate_group(&t, GroupSpec::sp(1), 1, DEFAULT_ENUMERATION_CAP).unwrap();
        let c1 = conjugacy_classes(&t, &g1);
        assert_eq!(c1.len(), 7);
        assert_eq!(c1.group_order(), 24);
        let g2 = enumerate_group(&t, GroupSpec::sp(1), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        let c2 = conjugacy_classes(&t, &g2);
        assert_eq!(c2.len(), 13);
        let tw = twisted_classes(&t, &g2, 1);
        assert_eq!(tw.len(), 7);
        let tw0 = twisted_classes(&t, &g2, 0);
        assert_eq!(tw0.reps, c2.reps);
        // representatives are the least members
        for (k, r) in c2.reps.iter().enumerate() {
            assert!(g2.iter().filter(|g| c2.class_of(g) == Some(k)).all(|g| g >= r));
        }
        assert!(c1.to_tsv().starts_with("class_id\trepresentative\tsize\n0\t"));
    }

    #[test]
    fn twisted_class_count_matches_base_for_m3() {
        let t = Tower::build(3, 1, 3).unwrap();
        let g3 = enumerate_group(&t, GroupSpec::sp(1), 3, DEFAULT_ENUMERATION_CAP).unwrap();
        for i in [1, 2] {
            assert_eq!(twisted_classes(&t, &g3, i).len(), 7);
        }
    }

    #[test]
    fn elliptic_torus() {
        let t = Tower::build(3, 1, 2).unwrap();
        let tm = TorusModel::new(&t).unwrap();
        assert_eq!(tm.w, t.from_int(2));
        let tf = tm.elements(&t, 1).unwrap();
        assert_eq!(tf.len(), 4);
        let minus = Mat::from_ints(&t, &[&[-1, 0], &[0, -1]]).unwrap();
        assert!(tf.contains(&minus));
        let s = Mat::from_ints(&t, &[&[0, 1], &[-1, 0]]).unwrap();
        assert!(tm.contains(&t, &s));
        assert_eq!(s.mul(&t, &s), minus);
        // cyclic: some element has order 4
        assert!(tf.iter().any(|x| x.mul(&t, x) == minus));
        for a in &tf {
            for b in &tf {
                assert_eq!(a.mul(&t, b), b.mul(&t, a));
            }
            let borel = a.get(1, 0).is_zero();
            assert_eq!(borel, *a == minus || a.is_identity(&t));
        }
        assert_eq!(tm.elements(&t, 2).unwrap().len(), 8);
        assert_eq!(tm.omega(&t, &s, 1), -1);
        assert_eq!(tm.omega(&t, &minus, 1), 1);
    }

    #[test]
    fn random_elements_are_deterministic_members() {
        let t = f9();
        for spec in [GroupSpec::sp(1), GroupSpec::gsp(1), GroupSpec::sp(2)] {
            let a = random_element(&t, spec, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            let b = random_element(&t, spec, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            assert_eq!(a, b);
            assert!(spec.contains(&t, &a, 2));
        }
    }
}
