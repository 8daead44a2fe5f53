//! Finite field towers `F_p ⊂ F_q ⊂ F_{q^d} ⊂ … ⊂ F_{q^r}` realized inside a single
//! ambient field `F_p[X]/(f)`.
//!
//! Every level is the fixed field of a power of the base Frobenius `σ: x ↦ x^q`, so the
//! inclusions between levels are identity maps. Elements are coefficient vectors over
//! `F_p`, low degree first; the derived ordering on [`FieldElem`] is the canonical
//! enumeration order used to index operator bases.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use smallvec::SmallVec;

use crate::cyclotomic::CycNum;
use crate::error::{Error, Result};

pub(crate) type Coeffs = SmallVec<[u16; 8]>;

/// Element of the ambient field of a [`Tower`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FieldElem(pub(crate) Coeffs);

impl FieldElem {
    pub fn coeffs(&self) -> &[u16] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Dense `F_p`-linear map on coefficient vectors, stored by columns.
#[derive(Clone, Debug)]
struct FpMatrix {
    cols: Vec<Coeffs>,
}

impl FpMatrix {
    fn apply(&self, x: &[u16], p: u32) -> Coeffs {
        let n = self.cols.len();
        let mut acc: SmallVec<[u64; 16]> = SmallVec::from_elem(0, n);
        for (k, &c) in x.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (a, &v) in acc.iter_mut().zip(self.cols[k].iter()) {
                *a += c as u64 * v as u64;
            }
        }
        acc.iter().map(|&a| (a % p as u64) as u16).collect()
    }

    fn compose(&self, other: &FpMatrix, p: u32) -> FpMatrix {
        FpMatrix {
            cols: other.cols.iter().map(|c| self.apply(c, p)).collect(),
        }
    }
}

struct LevelData {
    trace_row: Vec<u16>,
    basis: Vec<Coeffs>,
    elements: OnceLock<Vec<FieldElem>>,
}

/// Tower of finite fields over an odd prime, all levels inside one ambient field.
pub struct Tower {
    p: u32,
    base_degree: usize,
    rel_degree: usize,
    modulus: Vec<u16>,
    frob_p: FpMatrix,
    sigma_pows: Vec<FpMatrix>,
    levels: BTreeMap<usize, LevelData>,
    psi_scale: FieldElem,
}

impl fmt::Debug for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tower({})", self.to_text())
    }
}

/// Upper bound on enumerating a single level.
pub const LEVEL_ENUMERATION_CAP: u128 = 1 << 22;

pub(crate) fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u32;
    while (k as u64) * (k as u64) <= n as u64 {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = 2;
    while k * k <= n {
        if n.is_multiple_of(k) {
            out.push(k);
            while n.is_multiple_of(k) {
                n /= k;
            }
        }
        k += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// ---- polynomials over F_p (u32 coefficients, low degree first) ----

fn fp_trim(a: &mut Vec<u32>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn fp_inv(a: u32, p: u32) -> u32 {
    let mut r = 1u64;
    let mut b = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

fn fp_poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    fp_trim(&mut r);
    let dm = m.len() - 1;
    let lead_inv = fp_inv(m[dm], p) as u64;
    while r.len() > dm {
        let k = r.len() - 1 - dm;
        let c = r[r.len() - 1] as u64 * lead_inv % p as u64;
        for (j, &mj) in m.iter().enumerate() {
            let sub = c * mj as u64 % p as u64;
            r[k + j] = ((r[k + j] as u64 + p as u64 - sub) % p as u64) as u32;
        }
        fp_trim(&mut r);
    }
    r
}

fn fp_poly_mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    let prod: Vec<u32> = prod.into_iter().map(|v| v as u32).collect();
    fp_poly_rem(&prod, m, p)
}

fn fp_poly_gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    fp_trim(&mut x);
    fp_trim(&mut y);
    while !y.is_empty() {
        let r = fp_poly_rem(&x, &y, p);
        x = y;
        y = r;
    }
    x
}

/// `X^{p^k} mod m` by repeated p-th powering.
fn fp_x_pow_p_pow(m: &[u32], p: u32, k: usize) -> Vec<u32> {
    let mut cur = fp_poly_rem(&[0, 1], m, p);
    for _ in 0..k {
        let mut acc = vec![1u32];
        let mut base = cur.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                acc = fp_poly_mulmod(&acc, &base, m, p);
            }
            base = fp_poly_mulmod(&base, &base, m, p);
            e >>= 1;
        }
        cur = acc;
    }
    cur
}

/// Rabin's irreducibility test for a monic polynomial over F_p.
fn fp_is_irreducible(f: &[u32], p: u32) -> bool {
    let n = f.len() - 1;
    if n == 1 {
        return true;
    }
    if f[0] == 0 {
        return false;
    }
    let mut xq = fp_x_pow_p_pow(f, p, n);
    let x = fp_poly_rem(&[0, 1], f, p);
    fp_trim(&mut xq);
    if xq != x {
        return false;
    }
    for r in prime_factors(n) {
        let mut h = fp_x_pow_p_pow(f, p, n / r);
        h.resize(h.len().max(2), 0);
        h[1] = (h[1] + p - 1) % p;
        fp_trim(&mut h);
        let g = fp_poly_gcd(f, &h, p);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

/// Lexicographically smallest monic irreducible polynomial of degree `n` over `F_p`,
/// comparing coefficient vectors from the constant term upwards.
/// Returns the `n` non-leading coefficients.
pub fn smallest_irreducible(p: u32, n: usize) -> Vec<u16> {
    if n == 1 {
        return vec![0];
    }
    // constant term 0 is divisible by X, so the search starts at constant term 1
    let mut digits = vec![0u32; n];
    digits[0] = 1;
    loop {
        let mut f = digits.clone();
        f.push(1);
        if fp_is_irreducible(&f, p) {
            return digits.iter().map(|&d| d as u16).collect();
        }
        // increment with the highest-degree coefficient fastest
        let mut k = n - 1;
        loop {
            digits[k] += 1;
            if digits[k] < p {
                break;
            }
            digits[k] = 0;
            assert!(k > 0, "no irreducible polynomial found");
            k -= 1;
        }
    }
}

// ---- linear algebra over F_p ----

/// Row-reduces `rows` (each of length `ncols`) in place; returns pivot columns.
fn fp_row_reduce(rows: &mut [Vec<u16>], ncols: usize, p: u32) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(piv) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, piv);
        let inv = fp_inv(rows[r][c] as u32, p) as u64;
        for v in rows[r].iter_mut() {
            *v = (*v as u64 * inv % p as u64) as u16;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[c] != 0 {
                let f = row[c] as u64;
                for (v, &pv) in row.iter_mut().zip(pivot_row.iter()) {
                    *v = ((*v as u64 + (p as u64 - f) * pv as u64) % p as u64) as u16;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of the kernel of the matrix with the given rows.
pub(crate) fn fp_kernel(rows: &[Vec<u16>], ncols: usize, p: u32) -> Vec<Vec<u16>> {
    let mut m = rows.to_vec();
    let pivots = fp_row_reduce(&mut m, ncols, p);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![0u16; ncols];
            v[fc] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                let x = m[r][fc] as u32;
                v[pc] = ((p - x) % p) as u16;
            }
            v
        })
        .collect()
}

/// One solution of `A x = b`, if any.
pub(crate) fn fp_solve(rows: &[Vec<u16>], b: &[u16], ncols: usize, p: u32) -> Option<Vec<u16>> {
    let mut m: Vec<Vec<u16>> = rows
        .iter()
        .zip(b.iter())
        .map(|(r, &bi)| {
            let mut r = r.clone();
            r.push(bi);
            r
        })
        .collect();
    let pivots = fp_row_reduce(&mut m, ncols + 1, p);
    if pivots.contains(&ncols) {
        return None;
    }
    let mut x = vec![0u16; ncols];
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = m[r][ncols];
    }
    Some(x)
}

impl Tower {
    /// Builds the tower with `F_q = F_{p^base_degree}` and top level `F_{q^m}`.
    pub fn build(p: u32, base_degree: usize, m: usize) -> Result<Tower> {
        if p == 2 {
            return Err(Error::EvenCharacteristic);
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if base_degree == 0 || m == 0 {
            return Err(Error::ConfigInvalid("degrees must be positive".into()));
        }
        let n = base_degree * m;
        let modulus = smallest_irreducible(p, n);
        Tower::from_modulus(p, base_degree, m, modulus)
    }

    fn from_modulus(p: u32, base_degree: usize, rel_degree: usize, modulus: Vec<u16>) -> Result<Tower> {
        let n = base_degree * rel_degree;
        if modulus.len() != n {
            return Err(Error::Parse(format!("modulus has {} coefficients, expected {n}", modulus.len())));
        }
        let bits = (n as f64) * (p as f64).log2();
        if bits > 120.0 {
            return Err(Error::AmbientCapExceeded { needed: rel_degree, cap: (120.0 / ((p as f64).log2() * base_degree as f64)) as usize });
        }
        let mut f: Vec<u32> = modulus.iter().map(|&c| c as u32).collect();
        f.push(1);
        if !fp_is_irreducible(&f, p) {
            return Err(Error::Parse("modulus is not irreducible".into()));
        }
        // Frobenius x -> x^p: column k is X^{pk} mod f
        let xp = fp_x_pow_p_pow(&f, p, 1);
        let mut cols = Vec::with_capacity(n);
        let mut cur = vec![1u32];
        for _ in 0..n {
            let mut c: Coeffs = cur.iter().map(|&v| v as u16).collect();
            c.resize(n, 0);
            cols.push(c);
            cur = fp_poly_mulmod(&cur, &xp, &f, p);
        }
        let frob_p = FpMatrix { cols };
        let mut sigma = identity_matrix(n);
        for _ in 0..base_degree {
            sigma = frob_p.compose(&sigma, p);
        }
        let mut sigma_pows = vec![identity_matrix(n)];
        for j in 1..rel_degree {
            let next = sigma.compose(&sigma_pows[j - 1], p);
            sigma_pows.push(next);
        }
        let mut tower = Tower {
            p,
            base_degree,
            rel_degree,
            modulus,
            frob_p,
            sigma_pows,
            levels: BTreeMap::new(),
            psi_scale: FieldElem(SmallVec::new()),
        };
        tower.psi_scale = tower.one();
        for d in divisors(rel_degree) {
            let data = tower.level_data(d);
            tower.levels.insert(d, data);
        }
        Ok(tower)
    }

    fn level_data(&self, d: usize) -> LevelData {
        let n = self.degree();
        let p = self.p;
        // trace functional: sum of frob_p^j for j < base_degree * d, first row
        let mut acc = vec![0u64; n];
        let mut power = identity_matrix(n);
        for _ in 0..self.base_degree * d {
            for k in 0..n {
                acc[k] += power.cols[k][0] as u64;
            }
            power = self.frob_p.compose(&power, p);
        }
        let trace_row = acc.iter().map(|&a| (a % p as u64) as u16).collect();
        // basis of the fixed field of sigma^d
        let sd = &self.sigma_pows[d % self.rel_degree];
        let rows: Vec<Vec<u16>> = (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| {
                        let v = sd.cols[c][r] as u32 + if r == c { p - 1 } else { 0 };
                        (v % p) as u16
                    })
                    .collect()
            })
            .collect();
        let basis = fp_kernel(&rows, n, p).into_iter().map(|v| v.into_iter().collect()).collect();
        LevelData {
            trace_row,
            basis,
            elements: OnceLock::new(),
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn base_degree(&self) -> usize {
        self.base_degree
    }

    /// Degree of the ambient field over `F_q`.
    pub fn rel_degree(&self) -> usize {
        self.rel_degree
    }

    /// Degree of the ambient field over `F_p`.
    pub fn degree(&self) -> usize {
        self.base_degree * self.rel_degree
    }

    /// Cardinality `q` of the base field.
    pub fn q(&self) -> u128 {
        (self.p as u128).pow(self.base_degree as u32)
    }

    pub fn level_size(&self, d: usize) -> u128 {
        self.q().pow(d as u32)
    }

    pub fn modulus(&self) -> &[u16] {
        &self.modulus
    }

    pub fn levels(&self) -> Vec<usize> {
        self.levels.keys().copied().collect()
    }

    pub fn has_level(&self, d: usize) -> bool {
        self.levels.contains_key(&d)
    }

    fn check_level(&self, d: usize) -> Result<&LevelData> {
        self.levels
            .get(&d)
            .ok_or_else(|| Error::LevelMismatch(format!("level {d} is not registered (ambient degree {})", self.rel_degree)))
    }

    /// Sets the global additive-character scaling `a ∈ F_q^×`, so that `ψ(x) = ψ₁(a x)`.
    pub fn with_psi_scale(mut self, a: FieldElem) -> Result<Tower> {
        if a.is_zero() || !self.in_level(&a, 1) {
            return Err(Error::ConfigInvalid("psi scale must be a nonzero element of F_q".into()));
        }
        self.psi_scale = a;
        Ok(self)
    }

    pub fn psi_scale(&self) -> &FieldElem {
        &self.psi_scale
    }

    // ---- element constructors ----

    pub fn zero(&self) -> FieldElem {
        FieldElem(SmallVec::from_elem(0, self.degree()))
    }

    pub fn one(&self) -> FieldElem {
        self.from_int(1)
    }

    pub fn from_int(&self, k: i64) -> FieldElem {
        let mut c = self.zero();
        c.0[0] = k.rem_euclid(self.p as i64) as u16;
        c
    }

    pub fn from_coeffs(&self, coeffs: &[u16]) -> Result<FieldElem> {
        if coeffs.len() > self.degree() || coeffs.iter().any(|&c| c as u32 >= self.p) {
            return Err(Error::DimensionMismatch(format!("bad coefficient vector {coeffs:?}")));
        }
        let mut c = self.zero();
        c.0[..coeffs.len()].copy_from_slice(coeffs);
        Ok(c)
    }

    /// The class of `X` in `F_p[X]/(f)`.
    pub fn generator(&self) -> FieldElem {
        if self.degree() == 1 {
            return self.from_int(-(self.modulus[0] as i64));
        }
        let mut c = self.zero();
        c.0[1] = 1;
        c
    }

    // ---- arithmetic ----

    pub fn add(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        let p = self.p;
        FieldElem(a.0.iter().zip(b.0.iter()).map(|(&x, &y)| ((x as u32 + y as u32) % p) as u16).collect())
    }

    pub fn sub(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        let p = self.p;
        FieldElem(a.0.iter().zip(b.0.iter()).map(|(&x, &y)| ((x as u32 + p - y as u32) % p) as u16).collect())
    }

    pub fn neg(&self, a: &FieldElem) -> FieldElem {
        let p = self.p;
        FieldElem(a.0.iter().map(|&x| ((p - x as u32) % p) as u16).collect())
    }

    pub fn scale(&self, a: &FieldElem, k: u32) -> FieldElem {
        let p = self.p as u64;
        FieldElem(a.0.iter().map(|&x| (x as u64 * (k as u64 % p) % p) as u16).collect())
    }

    pub fn mul(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        let n = self.degree();
        let p = self.p as u64;
        if n == 1 {
            return FieldElem(smallvec::smallvec![(a.0[0] as u64 * b.0[0] as u64 % p) as u16]);
        }
        let mut prod: SmallVec<[u64; 32]> = SmallVec::from_elem(0, 2 * n - 1);
        for (i, &x) in a.0.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.0.iter().enumerate() {
                prod[i + j] += x as u64 * y as u64;
            }
        }
        for k in (n..2 * n - 1).rev() {
            let c = prod[k] % p;
            if c == 0 {
                continue;
            }
            for (j, &mj) in self.modulus.iter().enumerate() {
                prod[k - n + j] += c * (p - mj as u64);
            }
        }
        FieldElem(prod[..n].iter().map(|&v| (v % p) as u16).collect())
    }

    pub fn square(&self, a: &FieldElem) -> FieldElem {
        self.mul(a, a)
    }

    pub fn pow(&self, a: &FieldElem, mut e: u128) -> FieldElem {
        let mut r = self.one();
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b);
            }
        }
        r
    }

    pub fn inv(&self, a: &FieldElem) -> Result<FieldElem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let order = (self.p as u128).pow(self.degree() as u32);
        Ok(self.pow(a, order - 2))
    }

    pub fn div(&self, a: &FieldElem, b: &FieldElem) -> Result<FieldElem> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// `1/2` in `F_p`.
    pub fn half(&self) -> FieldElem {
        self.from_int(self.p.div_ceil(2) as i64)
    }

    // ---- Frobenius, levels, trace and norm ----

    /// `x^{q^j}`; negative `j` applies the inverse automorphism.
    pub fn frobenius(&self, x: &FieldElem, j: i64) -> FieldElem {
        let r = self.rel_degree as i64;
        let k = j.rem_euclid(r) as usize;
        if k == 0 {
            return x.clone();
        }
        FieldElem(self.sigma_pows[k].apply(&x.0, self.p))
    }

    /// Whether `x` lies in `F_{q^d}`.
    pub fn in_level(&self, x: &FieldElem, d: usize) -> bool {
        self.frobenius(x, d as i64) == *x
    }

    /// Smallest registered level containing `x`.
    pub fn level_of(&self, x: &FieldElem) -> usize {
        self.levels.keys().copied().find(|&d| self.in_level(x, d)).unwrap_or(self.rel_degree)
    }

    /// Relative trace `F_{q^from} → F_{q^to}`.
    pub fn trace_to(&self, x: &FieldElem, from: usize, to: usize) -> Result<FieldElem> {
        self.check_relative(x, from, to)?;
        let mut acc = self.zero();
        for k in 0..from / to {
            acc = self.add(&acc, &self.frobenius(x, (to * k) as i64));
        }
        Ok(acc)
    }

    /// Relative norm `F_{q^from} → F_{q^to}`.
    pub fn norm_to(&self, x: &FieldElem, from: usize, to: usize) -> Result<FieldElem> {
        self.check_relative(x, from, to)?;
        let mut acc = self.one();
        for k in 0..from / to {
            acc = self.mul(&acc, &self.frobenius(x, (to * k) as i64));
        }
        Ok(acc)
    }

    fn check_relative(&self, x: &FieldElem, from: usize, to: usize) -> Result<()> {
        self.check_level(from)?;
        self.check_level(to)?;
        if !from.is_multiple_of(to) {
            return Err(Error::LevelMismatch(format!("level {to} does not divide level {from}")));
        }
        if !self.in_level(x, from) {
            return Err(Error::LevelMismatch(format!("element not in level {from}")));
        }
        Ok(())
    }

    /// Quadratic character of `F_{q^d}^×`.
    pub fn quad_char(&self, x: &FieldElem, d: usize) -> Result<i8> {
        self.check_level(d)?;
        if x.is_zero() {
            return Err(Error::ZeroArgument);
        }
        if !self.in_level(x, d) {
            return Err(Error::LevelMismatch(format!("element is not in level {d}")));
        }
        let e = (self.level_size(d) - 1) / 2;
        let r = self.pow(x, e);
        Ok(if r == self.one() { 1 } else { -1 })
    }

    /// `Tr_{F_{q^d}/F_p}(x)` for `x` in level `d`.
    pub fn absolute_trace(&self, x: &FieldElem, d: usize) -> u32 {
        let row = &self.levels[&d].trace_row;
        let p = self.p as u64;
        let s: u64 = row.iter().zip(x.0.iter()).map(|(&r, &c)| r as u64 * c as u64).sum();
        (s % p) as u32
    }

    /// Exponent `k` with `ψ_d(x) = ζ_p^k`.
    pub fn psi_exponent(&self, x: &FieldElem, d: usize) -> u32 {
        let ax = self.mul(&self.psi_scale, x);
        self.absolute_trace(&ax, d)
    }

    /// Additive character `ψ_d = ψ ∘ tr_{F_{q^d}/F_q}` with `ψ(x) = ζ_p^{Tr(a x)}`.
    pub fn psi(&self, x: &FieldElem, d: usize) -> Result<CycNum> {
        self.check_level(d)?;
        Ok(CycNum::root_of_unity(self.p, self.psi_exponent(x, d) as i64))
    }

    /// All elements of `F_{q^d}` in canonical order.
    pub fn elements(&self, d: usize) -> Result<&[FieldElem]> {
        let data = self.check_level(d)?;
        let size = self.level_size(d);
        if size > LEVEL_ENUMERATION_CAP {
            return Err(Error::GroupTooLarge { order: size, cap: LEVEL_ENUMERATION_CAP });
        }
        Ok(data.elements.get_or_init(|| {
            let mut out = Vec::with_capacity(size as usize);
            let k = data.basis.len();
            let mut digits = vec![0u32; k];
            loop {
                let mut acc = self.zero();
                for (dgt, b) in digits.iter().zip(data.basis.iter()) {
                    if *dgt != 0 {
                        acc = self.add(&acc, &self.scale(&FieldElem(b.clone()), *dgt));
                    }
                }
                out.push(acc);
                let mut i = 0;
                loop {
                    if i == k {
                        out.sort();
                        return out;
                    }
                    digits[i] += 1;
                    if digits[i] < self.p {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
            }
        }))
    }

    /// Nonzero elements of `F_{q^d}`.
    pub fn units(&self, d: usize) -> Result<Vec<FieldElem>> {
        Ok(self.elements(d)?.iter().filter(|x| !x.is_zero()).cloned().collect())
    }

    /// Uniformly random element of `F_{q^d}`.
    pub fn random_elem<R: Rng>(&self, d: usize, rng: &mut R) -> FieldElem {
        let data = &self.levels[&d];
        let mut acc = self.zero();
        for b in &data.basis {
            let c = rng.gen_range(0..self.p);
            acc = self.add(&acc, &self.scale(&FieldElem(b.clone()), c));
        }
        acc
    }

    pub fn random_unit<R: Rng>(&self, d: usize, rng: &mut R) -> FieldElem {
        loop {
            let x = self.random_elem(d, rng);
            if !x.is_zero() {
                return x;
            }
        }
    }

    /// Smallest non-square of `F_{q^d}` in canonical order.
    pub fn smallest_nonsquare(&self, d: usize) -> Result<FieldElem> {
        for x in self.elements(d)? {
            if !x.is_zero() && self.quad_char(x, d)? == -1 {
                return Ok(x.clone());
            }
        }
        unreachable!("odd-order fields have non-squares")
    }

    /// `F_p`-basis of level `d`.
    pub(crate) fn level_basis(&self, d: usize) -> Vec<FieldElem> {
        self.levels[&d].basis.iter().map(|b| FieldElem(b.clone())).collect()
    }

    // ---- serialization ----

    /// `p=3 base_degree=1 degree=2 modulus=1,0,1` (modulus low degree first, monic).
    pub fn to_text(&self) -> String {
        let coeffs: Vec<String> = self.modulus.iter().map(|c| c.to_string()).chain(std::iter::once("1".into())).collect();
        format!("p={} base_degree={} degree={} modulus={}", self.p, self.base_degree, self.degree(), coeffs.join(","))
    }

    pub fn from_text(s: &str) -> Result<Tower> {
        let mut p = None;
        let mut base = None;
        let mut degree = None;
        let mut modulus = None;
        for tok in s.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse(tok.into()))?;
            let bad = |_| Error::Parse(tok.to_string());
            match k {
                "p" => p = Some(v.parse::<u32>().map_err(bad)?),
                "base_degree" => base = Some(v.parse::<usize>().map_err(bad)?),
                "degree" => degree = Some(v.parse::<usize>().map_err(bad)?),
                "modulus" => {
                    let c: std::result::Result<Vec<u16>, _> = v.split(',').map(|x| x.parse::<u16>()).collect();
                    modulus = Some(c.map_err(bad)?)
                }
                _ => return Err(Error::Parse(format!("unknown key {k}"))),
            }
        }
        let (p, base, degree, mut modulus) = match (p, base, degree, modulus) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => return Err(Error::Parse("incomplete tower description".into())),
        };
        if p == 2 {
            return Err(Error::EvenCharacteristic);
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if base == 0 || degree % base != 0 || modulus.pop() != Some(1) {
            return Err(Error::Parse("inconsistent degrees or non-monic modulus".into()));
        }
        Tower::from_modulus(p, base, degree / base, modulus)
    }

    // ---- enlargement ----

    /// Builds the tower with ambient degree `rel_degree` over `F_q` (a multiple of the
    /// current one) and the embedding of the current ambient field into it, sending the
    /// generator to the smallest root of the current modulus.
    pub fn enlarge(&self, rel_degree: usize) -> Result<(Tower, Embedding)> {
        if !rel_degree.is_multiple_of(self.rel_degree) {
            return Err(Error::LevelMismatch(format!(
                "new degree {rel_degree} is not a multiple of {}",
                self.rel_degree
            )));
        }
        let modulus = smallest_irreducible(self.p, self.base_degree * rel_degree);
        let big = Tower::from_modulus(self.p, self.base_degree, rel_degree, modulus)?;
        let emb = Embedding::between(self, &big)?;
        let scale = emb.map(&big, &self.psi_scale);
        let big = big.with_psi_scale(scale)?;
        Ok((big, emb))
    }
}

fn identity_matrix(n: usize) -> FpMatrix {
    FpMatrix {
        cols: (0..n)
            .map(|k| {
                let mut c: Coeffs = SmallVec::from_elem(0, n);
                c[k] = 1;
                c
            })
            .collect(),
    }
}

// ---- polynomials over the ambient field, for root finding ----

type ExtPoly = Vec<FieldElem>;

fn ext_trim(t: &Tower, a: &mut ExtPoly) {
    let _ = t;
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
}

fn ext_rem(t: &Tower, a: &ExtPoly, m: &ExtPoly) -> ExtPoly {
    let mut r = a.clone();
    ext_trim(t, &mut r);
    let dm = m.len() - 1;
    let lead_inv = t.inv(&m[dm]).expect("nonzero leading coefficient");
    while r.len() > dm {
        let k = r.len() - 1 - dm;
        let c = t.mul(r.last().unwrap(), &lead_inv);
        for (j, mj) in m.iter().enumerate() {
            r[k + j] = t.sub(&r[k + j], &t.mul(&c, mj));
        }
        ext_trim(t, &mut r);
    }
    r
}

fn ext_mulmod(t: &Tower, a: &ExtPoly, b: &ExtPoly, m: &ExtPoly) -> ExtPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![t.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            prod[i + j] = t.add(&prod[i + j], &t.mul(x, y));
        }
    }
    ext_rem(t, &prod, m)
}

fn ext_gcd(t: &Tower, a: &ExtPoly, b: &ExtPoly) -> ExtPoly {
    let mut x = a.clone();
    let mut y = b.clone();
    ext_trim(t, &mut x);
    ext_trim(t, &mut y);
    while !y.is_empty() {
        let r = ext_rem(t, &x, &y);
        x = y;
        y = r;
    }
    if let Some(lead) = x.last().cloned() {
        let inv = t.inv(&lead).unwrap();
        x = x.iter().map(|c| t.mul(c, &inv)).collect();
    }
    x
}

fn ext_div_exact(t: &Tower, a: &ExtPoly, b: &ExtPoly) -> ExtPoly {
    let mut r = a.clone();
    let db = b.len() - 1;
    let lead_inv = t.inv(&b[db]).unwrap();
    let mut q = vec![t.zero(); a.len() - db];
    while r.len() > db {
        let k = r.len() - 1 - db;
        let c = t.mul(r.last().unwrap(), &lead_inv);
        for (j, bj) in b.iter().enumerate() {
            r[k + j] = t.sub(&r[k + j], &t.mul(&c, bj));
        }
        q[k] = c;
        r.pop();
    }
    q
}

/// All roots of a polynomial that splits into distinct linear factors over the ambient
/// field (equal-degree splitting with a deterministic sequence of shifts).
fn split_roots(t: &Tower, f: &ExtPoly) -> Vec<FieldElem> {
    let mut f = f.clone();
    ext_trim(t, &mut f);
    if f.len() <= 1 {
        return Vec::new();
    }
    if f.len() == 2 {
        let r = t.neg(&t.div(&f[0], &f[1]).unwrap());
        return vec![r];
    }
    let order = (t.p as u128).pow(t.degree() as u32);
    let half = (order - 1) / 2;
    let mut counter: u64 = 0;
    loop {
        counter += 1;
        // shift element from the base-p digits of the counter
        let mut a = t.zero();
        let mut c = counter;
        for k in 0..t.degree() {
            a.0[k] = (c % t.p as u64) as u16;
            c /= t.p as u64;
        }
        let base: ExtPoly = vec![a, t.one()];
        let mut acc: ExtPoly = vec![t.one()];
        let mut b = ext_rem(t, &base, &f);
        let mut e = half;
        while e > 0 {
            if e & 1 == 1 {
                acc = ext_mulmod(t, &acc, &b, &f);
            }
            e >>= 1;
            if e > 0 {
                b = ext_mulmod(t, &b, &b, &f);
            }
        }
        if acc.is_empty() {
            acc.push(t.zero());
        }
        acc[0] = t.sub(&acc[0], &t.one());
        let g = ext_gcd(t, &f, &acc);
        if g.len() > 1 && g.len() < f.len() {
            let h = ext_div_exact(t, &f, &g);
            let mut roots = split_roots(t, &g);
            roots.extend(split_roots(t, &h));
            return roots;
        }
    }
}

/// Field embedding of a smaller tower's ambient field into a larger one.
#[derive(Clone, Debug)]
pub struct Embedding {
    images: Vec<FieldElem>,
    small_degree: usize,
    p: u32,
}

impl Embedding {
    /// Embedding of `small`'s ambient field into `big`'s, sending the generator to the
    /// smallest root of `small`'s modulus.
    pub fn between(small: &Tower, big: &Tower) -> Result<Embedding> {
        if small.p != big.p || !big.degree().is_multiple_of(small.degree()) {
            return Err(Error::LevelMismatch("no embedding between these fields".into()));
        }
        let n = small.degree();
        let mut f: ExtPoly = small.modulus.iter().map(|&c| big.from_int(c as i64)).collect();
        f.push(big.one());
        let mut roots = split_roots(big, &f);
        roots.sort();
        let root = roots.first().cloned().ok_or(Error::FactorizationFailed)?;
        let mut images = Vec::with_capacity(n);
        let mut cur = big.one();
        for _ in 0..n {
            images.push(cur.clone());
            cur = big.mul(&cur, &root);
        }
        Ok(Embedding { images, small_degree: n, p: small.p })
    }

    pub fn map(&self, big: &Tower, x: &FieldElem) -> FieldElem {
        let mut acc = big.zero();
        for (c, img) in x.0.iter().zip(self.images.iter()) {
            if *c != 0 {
                acc = big.add(&acc, &big.scale(img, *c as u32));
            }
        }
        acc
    }

    /// Inverse image of `y` under the embedding, if `y` lies in the image.
    pub fn pull_back(&self, small: &Tower, y: &FieldElem) -> Option<FieldElem> {
        let big_n = y.0.len();
        let rows: Vec<Vec<u16>> = (0..big_n).map(|r| self.images.iter().map(|img| img.0[r]).collect()).collect();
        let sol = fp_solve(&rows, &y.0, self.small_degree, self.p)?;
        Some(small.from_coeffs(&sol).expect("solution has the small degree"))
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
    fn build_errors() {
        assert_eq!(Tower::build(2, 1, 2).unwrap_err(), Error::EvenCharacteristic);
        assert_eq!(Tower::build(9, 1, 2).unwrap_err(), Error::NotPrime(9));
    }

    #[test]
    fn level_sizes() {
        let t = f9();
        assert_eq!(t.levels(), vec![1, 2]);
        assert_eq!(t.elements(1).unwrap().len(), 3);
        assert_eq!(t.elements(2).unwrap().len(), 9);
        let t4 = Tower::build(3, 1, 4).unwrap();
        assert_eq!(t4.levels(), vec![1, 2, 4]);
        let sizes: Vec<usize> = t4.levels().iter().map(|&d| t4.elements(d).unwrap().len()).collect();
        assert_eq!(sizes, vec![3, 9, 81]);
    }

    #[test]
    fn smallest_modulus_for_f9() {
        // X^2 + 1 is the first monic irreducible quadratic over F_3 with constant term 1
        assert_eq!(smallest_irreducible(3, 2), vec![1, 0]);
        assert_eq!(smallest_irreducible(5, 2), vec![1, 1]);
    }

    #[test]
    fn sqrt_minus_one_over_f3() {
        let t = f9();
        let u = t.generator();
        assert_eq!(t.mul(&u, &u), t.from_int(-1));
        assert_eq!(t.frobenius(&u, 1), t.neg(&u));
        assert_eq!(t.frobenius(&u, 2), u);
        assert_eq!(t.frobenius(&u, -1), t.neg(&u));
        assert!(t.trace_to(&u, 2, 1).unwrap().is_zero());
        assert_eq!(t.norm_to(&u, 2, 1).unwrap(), t.one());
        assert_eq!(t.trace_to(&t.one(), 2, 1).unwrap(), t.from_int(2));
        assert_eq!(t.psi_exponent(&u, 2), 0);
        assert_eq!(t.psi(&t.one(), 1).unwrap(), CycNum::root_of_unity(3, 1));
        assert_eq!(t.psi(&t.zero(), 2).unwrap(), CycNum::one(3));
    }

    #[test]
    fn frobenius_fixes_exactly_base() {
        let t = Tower::build(3, 1, 4).unwrap();
        let fixed: Vec<_> = t.elements(4).unwrap().iter().filter(|x| t.frobenius(x, 1) == **x).collect();
        assert_eq!(fixed.len(), 3);
        for x in t.elements(4).unwrap() {
            assert_eq!(t.frobenius(x, 4), *x);
            for y in t.elements(4).unwrap().iter().step_by(7) {
                assert_eq!(t.frobenius(&t.mul(x, y), 1), t.mul(&t.frobenius(x, 1), &t.frobenius(y, 1)));
                assert_eq!(t.frobenius(&t.add(x, y), 1), t.add(&t.frobenius(x, 1), &t.frobenius(y, 1)));
            }
        }
    }

    #[test]
    fn trace_and_norm_are_transitive() {
        let t = Tower::build(3, 1, 4).unwrap();
        for x in t.elements(4).unwrap() {
            let direct = t.trace_to(x, 4, 1).unwrap();
            let via = t.trace_to(&t.trace_to(x, 4, 2).unwrap(), 2, 1).unwrap();
            assert_eq!(direct, via);
            let direct = t.norm_to(x, 4, 1).unwrap();
            let via = t.norm_to(&t.norm_to(x, 4, 2).unwrap(), 2, 1).unwrap();
            assert_eq!(direct, via);
        }
    }

    #[test]
    fn trace_to_level_mismatch() {
        let t = Tower::build(3, 1, 4).unwrap();
        assert!(matches!(t.trace_to(&t.one(), 4, 3), Err(Error::LevelMismatch(_))));
    }

    #[test]
    fn quad_char_basics() {
        let t = f9();
        assert_eq!(t.quad_char(&t.one(), 1).unwrap(), 1);
        assert_eq!(t.quad_char(&t.from_int(2), 1).unwrap(), -1);
        assert_eq!(t.quad_char(&t.zero(), 1).unwrap_err(), Error::ZeroArgument);
        let units = t.units(2).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for x in &units {
            assert_eq!(t.quad_char(&t.square(x), 2).unwrap(), 1);
            for y in &units {
                let lhs = t.quad_char(&t.mul(x, y), 2).unwrap();
                assert_eq!(lhs, t.quad_char(x, 2).unwrap() * t.quad_char(y, 2).unwrap());
            }
            seen.insert(t.quad_char(x, 2).unwrap());
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn psi_is_additive_nontrivial_and_factors_through_trace() {
        for (p, e, m) in [(3, 1, 2), (3, 1, 4), (5, 1, 2), (3, 2, 2)] {
            let t = Tower::build(p, e, m).unwrap();
            for &d in &t.levels() {
                let els = t.elements(d).unwrap();
                if els.len() > 81 {
                    continue;
                }
                let mut counts = vec![0usize; p as usize];
                for x in els {
                    counts[t.psi_exponent(x, d) as usize] += 1;
                    for y in els {
                        let lhs = t.psi_exponent(&t.add(x, y), d);
                        assert_eq!(lhs, (t.psi_exponent(x, d) + t.psi_exponent(y, d)) % p);
                    }
                    for &c in &t.levels() {
                        if d % c == 0 {
                            assert_eq!(t.psi_exponent(x, d), t.psi_exponent(&t.trace_to(x, d, c).unwrap(), c));
                        }
                    }
                }
                // the character sum vanishes iff all fibres have equal size
                assert!(counts.iter().all(|&c| c == counts[0]));
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let t = Tower::build(5, 1, 2).unwrap();
        let s = t.to_text();
        assert_eq!(s, "p=5 base_degree=1 degree=2 modulus=1,1,1");
        let u = Tower::from_text(&s).unwrap();
        assert_eq!(u.modulus(), t.modulus());
        assert!(Tower::from_text("p=3 base_degree=1 degree=2 modulus=1,0,1,1").is_err());
    }

    #[test]
    fn enlargement_embeds_homomorphically() {
        let t = f9();
        let (big, emb) = t.enlarge(6).unwrap();
        assert_eq!(big.rel_degree(), 6);
        let els = t.elements(2).unwrap();
        for x in els {
            let ex = emb.map(&big, x);
            assert!(big.in_level(&ex, 2));
            assert_eq!(emb.map(&big, &t.frobenius(x, 1)), big.frobenius(&ex, 1));
            assert_eq!(emb.pull_back(&t, &ex).unwrap(), *x);
            for y in els {
                assert_eq!(emb.map(&big, &t.mul(x, y)), big.mul(&ex, &emb.map(&big, y)));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = big.random_elem(6, &mut rng);
        if !big.in_level(&z, 2) {
            assert!(emb.pull_back(&t, &z).is_none());
        }
    }

    #[test]
    fn inverse_in_larger_field() {
        let t = Tower::build(3, 1, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = t.random_unit(12, &mut rng);
            assert_eq!(t.mul(&x, &t.inv(&x).unwrap()), t.one());
        }
    }
}
