//! The Weil representation of `Sp_{2n}(F_{q^d}) ⋉ H(F_{q^d})` in the Schrödinger model on
//! functions on `X*(F_{q^d})`, the Galois operator, and traces of the extended
//! representation of `Γ ⋉ Sp·H`.
//!
//! With `v = x + x*` along `V = X ⊕ X*` and `y ∈ X*`:
//!
//! * `ρ(v, t) f(y) = ψ(t + ½⟨x*, x⟩ + ⟨y, x⟩) f(y + x*)`
//! * `ρ([[1, b], [0, 1]]) f(y) = ψ(½ yᵀ b y) f(y)`
//! * `ρ([[a, 0], [0, a⁻ᵀ]]) f(y) = ε(det a) f(aᵀ y)`
//! * `ρ([[0, -c⁻ᵀ], [c, 0]]) f(y) = G^{-n} ε(det c) Σ_x f(x) ψ(⟨x, c⁻¹ y⟩)` with
//!   `G = Σ_x ψ(½x²)`
//!
//! where `ψ = ψ_d`, `ε = ε_d` and `G = G_d` all live at the level of the basis.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use num_integer::Integer;
use num_traits::{One, Signed};
use rayon::prelude::*;

use crate::cyclotomic::{gauss_sum, CycNum, Rat};
use crate::error::{Error, Result};
use crate::fieldtower::{FieldElem, Tower};
use crate::grouplib::{levi, membership, siegel_unipotent, weyl, HeisElem, Mat, Membership, SpHElem};

/// Largest Schrödinger space dimension that is materialized.
pub const MAX_DIMENSION: u128 = 6561;

const MEMO_CAPACITY: usize = 4096;

/// Points of `X*(F_{q^d})` in canonical order, last coordinate fastest.
#[derive(Clone, Debug)]
pub struct SchrodingerBasis {
    level: usize,
    n: usize,
    elems: Vec<FieldElem>,
    elem_index: HashMap<FieldElem, usize>,
    points: Vec<Vec<FieldElem>>,
}

impl SchrodingerBasis {
    pub fn new(t: &Tower, n: usize, d: usize) -> Result<SchrodingerBasis> {
        let size = t.level_size(d);
        let dim = size.checked_pow(n as u32).unwrap_or(u128::MAX);
        if dim > MAX_DIMENSION {
            return Err(Error::GroupTooLarge { order: dim, cap: MAX_DIMENSION });
        }
        let elems = t.elements(d)?.to_vec();
        let elem_index = elems.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
        let points = crate::grouplib::vectors(&elems, n);
        Ok(SchrodingerBasis { level: d, n, elems, elem_index, points })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<FieldElem>] {
        &self.points
    }

    pub fn index_of(&self, y: &[FieldElem]) -> usize {
        y.iter().fold(0, |acc, x| acc * self.elems.len() + self.elem_index[x])
    }

    /// `perm[k]` is the index of `σ^j` applied to point `k`.
    pub fn frobenius_perm(&self, t: &Tower, j: i64) -> Vec<usize> {
        self.points
            .iter()
            .map(|y| {
                let fy: Vec<FieldElem> = y.iter().map(|x| t.frobenius(x, j)).collect();
                self.index_of(&fy)
            })
            .collect()
    }
}

// Entries are elements of the group ring Z[C_p] kept with zero top coefficient, which
// identifies them with Z[ζ_p] in the power basis.
fn canonicalize(c: &mut [i64]) {
    let p = c.len();
    let top = c[p - 1];
    if top != 0 {
        for x in c.iter_mut() {
            *x -= top;
        }
    }
}

fn to_cyc(p: u32, c: &[i64], scale: &Rat) -> CycNum {
    let top = c[p as usize - 1];
    let coeffs = c[..p as usize - 1].iter().map(|&x| Rat::from_integer(x - top) * scale).collect();
    CycNum::from_coeffs(p, coeffs).expect("length p - 1")
}

fn from_cyc(p: u32, z: &CycNum) -> Result<Vec<i64>> {
    let mut out = vec![0i64; p as usize];
    for (k, c) in z.coeffs().iter().enumerate() {
        if !c.is_integer() {
            return Err(Error::Parse("expected a cyclotomic integer".into()));
        }
        out[k] = c.to_integer();
    }
    Ok(out)
}

/// Square matrix `scale · M` with `M` over `Z[ζ_p]`, kept normalized so that equal
/// operators compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeilOperator {
    p: u32,
    dim: usize,
    scale: Rat,
    data: Vec<i64>,
}

impl WeilOperator {
    pub fn zero(p: u32, dim: usize) -> WeilOperator {
        WeilOperator { p, dim, scale: Rat::one(), data: vec![0; dim * dim * p as usize] }
    }

    pub fn identity(p: u32, dim: usize) -> WeilOperator {
        let mut m = WeilOperator::zero(p, dim);
        for i in 0..dim {
            m.add_root(i, i, 0, 1);
        }
        m
    }

    /// Permutation operator with `M[i, perm[i]] = 1`.
    pub fn permutation(p: u32, perm: &[usize]) -> WeilOperator {
        let mut m = WeilOperator::zero(p, perm.len());
        for (i, &j) in perm.iter().enumerate() {
            m.add_root(i, j, 0, 1);
        }
        m
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn slot(&self, i: usize, j: usize) -> &[i64] {
        let p = self.p as usize;
        let k = (i * self.dim + j) * p;
        &self.data[k..k + p]
    }

    fn add_root(&mut self, i: usize, j: usize, k: u32, c: i64) {
        let p = self.p as usize;
        self.data[(i * self.dim + j) * p + (k as usize % p)] += c;
    }

    fn finish(mut self) -> WeilOperator {
        let p = self.p as usize;
        for c in self.data.chunks_mut(p) {
            canonicalize(c);
        }
        let g = self.data.iter().fold(0i64, |g, &x| g.gcd(&x));
        if g == 0 {
            self.scale = Rat::one();
            return self;
        }
        if g > 1 {
            for x in self.data.iter_mut() {
                *x /= g;
            }
            self.scale *= Rat::from_integer(g);
        }
        if self.scale.is_negative() {
            self.scale = -self.scale;
            for x in self.data.iter_mut() {
                *x = -*x;
            }
        }
        self
    }

    pub fn entry(&self, i: usize, j: usize) -> CycNum {
        to_cyc(self.p, self.slot(i, j), &self.scale)
    }

    pub fn is_zero_entry(&self, i: usize, j: usize) -> bool {
        self.slot(i, j).iter().all(|&c| c == 0)
    }

    pub fn trace(&self) -> CycNum {
        let perm: Vec<usize> = (0..self.dim).collect();
        self.trace_against(&perm)
    }

    /// `Σ_i M[i, perm[i]]`, the trace of `M` times the permutation operator of `perm`.
    pub fn trace_against(&self, perm: &[usize]) -> CycNum {
        let p = self.p as usize;
        let mut acc = vec![0i64; p];
        for (i, &j) in perm.iter().enumerate() {
            for (a, b) in acc.iter_mut().zip(self.slot(i, j)) {
                *a += b;
            }
        }
        to_cyc(self.p, &acc, &self.scale)
    }

    pub fn mul(&self, o: &WeilOperator) -> WeilOperator {
        assert_eq!(self.dim, o.dim, "operator dimensions differ");
        let p = self.p as usize;
        let dim = self.dim;
        let rows: Vec<Vec<usize>> =
            (0..dim).map(|k| (0..dim).filter(|&j| !o.slot(k, j).iter().all(|&c| c == 0)).collect()).collect();
        let mut data = vec![0i64; dim * dim * p];
        data.par_chunks_mut(dim * p).enumerate().for_each(|(i, out)| {
            for k in 0..dim {
                let a = self.slot(i, k);
                let a_nz: Vec<(usize, i64)> = a.iter().copied().enumerate().filter(|&(_, c)| c != 0).collect();
                if a_nz.is_empty() {
                    continue;
                }
                for &j in &rows[k] {
                    let b = o.slot(k, j);
                    for &(ai, ac) in &a_nz {
                        for (bj, &bc) in b.iter().enumerate() {
                            if bc != 0 {
                                out[j * p + (ai + bj) % p] += ac * bc;
                            }
                        }
                    }
                }
            }
        });
        WeilOperator { p: self.p, dim, scale: self.scale * o.scale, data }.finish()
    }

    /// Entrywise complex conjugate of the transpose.
    pub fn adjoint(&self) -> WeilOperator {
        let p = self.p as usize;
        let mut out = WeilOperator::zero(self.p, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                for (k, &c) in self.slot(i, j).iter().enumerate() {
                    if c != 0 {
                        out.add_root(j, i, ((p - k) % p) as u32, c);
                    }
                }
            }
        }
        out.scale = self.scale;
        out.finish()
    }

    pub fn is_identity(&self) -> bool {
        *self == WeilOperator::identity(self.p, self.dim).finish()
    }

    pub fn is_unitary(&self) -> bool {
        self.mul(&self.adjoint()).is_identity()
    }

    /// Number of nonzero entries in each row, all equal for monomial operators.
    pub fn row_support(&self) -> Vec<usize> {
        (0..self.dim).map(|i| (0..self.dim).filter(|&j| !self.is_zero_entry(i, j)).count()).collect()
    }

    /// Header `p dim scale` then one line `i j c_0,…,c_{p-1}` per nonzero entry.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.p, self.dim, self.scale);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let c = self.slot(i, j);
                if c.iter().any(|&x| x != 0) {
                    let cs: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                    s.push_str(&format!("{i} {j} {}\n", cs.join(",")));
                }
            }
        }
        s
    }

    pub fn from_text(s: &str) -> Result<WeilOperator> {
        let bad = |m: &str| Error::Parse(format!("operator text: {m}"));
        let mut lines = s.lines();
        let head: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
        if head.len() != 3 {
            return Err(bad("header"));
        }
        let p: u32 = head[0].parse().map_err(|_| bad("p"))?;
        let dim: usize = head[1].parse().map_err(|_| bad("dim"))?;
        let scale: Rat = head[2].parse().map_err(|_| bad("scale"))?;
        let mut m = WeilOperator::zero(p, dim);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad("entry line"));
            }
            let i: usize = parts[0].parse().map_err(|_| bad("row"))?;
            let j: usize = parts[1].parse().map_err(|_| bad("column"))?;
            if i >= dim || j >= dim {
                return Err(bad("index out of range"));
            }
            let cs: Vec<i64> = parts[2].split(',').map(|c| c.parse().map_err(|_| bad("coefficient"))).collect::<Result<_>>()?;
            if cs.len() != p as usize {
                return Err(bad("coefficient count"));
            }
            for (k, c) in cs.into_iter().enumerate() {
                m.add_root(i, j, k as u32, c);
            }
        }
        m.scale = scale;
        Ok(m.finish())
    }
}

/// One factor of a factorization word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    Heis(HeisElem),
    /// Siegel unipotent with symmetric upper-right block.
    Unip(Mat),
    /// Levi element with upper-left block `a`.
    Levi(Mat),
    /// Antidiagonal element with lower-left block `c`.
    Weyl(Mat),
}

/// A word in generators whose product is a given element.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GeneratorWord {
    pub factors: Vec<Generator>,
}

impl GeneratorWord {
    /// Product of the symplectic factors; Heisenberg factors are rejected.
    pub fn matrix(&self, t: &Tower, n: usize) -> Result<Mat> {
        let mut acc = Mat::identity(t, 2 * n);
        for f in &self.factors {
            let m = match f {
                Generator::Unip(b) => siegel_unipotent(t, b),
                Generator::Levi(a) => levi(t, a)?,
                Generator::Weyl(c) => weyl(t, c)?,
                Generator::Heis(_) => return Err(Error::NotSymplectic),
            };
            acc = acc.mul(t, &m);
        }
        Ok(acc)
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

fn is_symmetric(b: &Mat) -> bool {
    *b == b.transpose()
}

fn symmetric_matrices(t: &Tower, n: usize, d: usize) -> Result<impl Iterator<Item = Mat> + '_> {
    let els = t.elements(d)?;
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let total = (els.len() as u128).pow(slots.len() as u32);
    Ok((0..total).map(move |mut k| {
        let mut b = Mat::zero(t, n);
        for &(i, j) in slots.iter().rev() {
            let x = els[(k % els.len() as u128) as usize].clone();
            k /= els.len() as u128;
            b.set(i, j, x.clone());
            b.set(j, i, x);
        }
        b
    }))
}

/// Writes a symplectic element as a word in Siegel unipotents, Levi elements and
/// antidiagonal elements, searching `b` over level `d` when the lower-left block is
/// singular.
pub fn siegel_factor(t: &Tower, g: &Mat, d: usize) -> Result<GeneratorWord> {
    if membership(t, g, d)? != Membership::Symp {
        return Err(Error::NotSymplectic);
    }
    let n = g.size() / 2;
    let (a, b, c, dd) = g.blocks();
    if let Ok(ci) = c.inv(t) {
        let mut factors = Vec::new();
        let left = a.mul(t, &ci);
        let right = ci.mul(t, &dd);
        if left != Mat::zero(t, n) {
            factors.push(Generator::Unip(left));
        }
        factors.push(Generator::Weyl(c));
        if right != Mat::zero(t, n) {
            factors.push(Generator::Unip(right));
        }
        return Ok(GeneratorWord { factors });
    }
    if c == Mat::zero(t, n) {
        let mut factors = Vec::new();
        let u = b.mul(t, &a.transpose());
        if u != Mat::zero(t, n) {
            factors.push(Generator::Unip(u));
        }
        if !a.is_identity(t) {
            factors.push(Generator::Levi(a));
        }
        return Ok(GeneratorWord { factors });
    }
    for s in symmetric_matrices(t, n, d)? {
        if c.mul(t, &s).add(t, &dd).det(t).is_zero() {
            continue;
        }
        let w1 = weyl(t, &Mat::identity(t, n))?;
        let shifted = g.mul(t, &siegel_unipotent(t, &s)).mul(t, &w1);
        let mut word = siegel_factor(t, &shifted, d)?;
        word.factors.push(Generator::Weyl(Mat::identity(t, n).neg(t)));
        word.factors.push(Generator::Unip(s.neg(t)));
        return Ok(word);
    }
    Err(Error::FactorizationFailed)
}

/// The Weil representation at one level, with generator operators and a bounded memo of
/// `ρ(g)` for symplectic `g`.
pub struct WeilRep {
    tower: Arc<Tower>,
    basis: SchrodingerBasis,
    // G^n as a cyclotomic integer and the denominator (ε(-1) q^d)^n
    gauss_pow: Vec<i64>,
    gauss_den: Rat,
    memo: Mutex<HashMap<Mat, Arc<WeilOperator>>>,
    cache_dir: Option<PathBuf>,
}

impl std::fmt::Debug for WeilRep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeilRep").field("level", &self.basis.level).field("n", &self.basis.n).finish()
    }
}

impl WeilRep {
    pub fn new(tower: Arc<Tower>, n: usize, d: usize) -> Result<WeilRep> {
        let basis = SchrodingerBasis::new(&tower, n, d)?;
        // Σ ψ(½x²) = ε(2) Σ ψ(x²), the Gauss sum of the form paired with the kernel
        let e2 = tower.quad_char(&tower.from_int(2), d)? as i64;
        let g = gauss_sum(&tower, d)?.scale(Rat::from_integer(e2));
        let gn = g.pow(n as i64)?;
        let gauss_pow = from_cyc(tower.p(), &gn)?;
        let eps = tower.quad_char(&tower.from_int(-1), d)? as i64;
        let qd = tower.level_size(d) as i64;
        let gauss_den = Rat::from_integer((eps * qd).pow(n as u32));
        Ok(WeilRep { tower, basis, gauss_pow, gauss_den, memo: Mutex::new(HashMap::new()), cache_dir: None })
    }

    /// Stores operators of `ρ(g)` as text files under `dir`, reusing them on later runs.
    pub fn with_cache_dir(mut self, dir: PathBuf) -> Result<WeilRep> {
        fs::create_dir_all(&dir)?;
        self.cache_dir = Some(dir);
        Ok(self)
    }

    pub fn tower(&self) -> &Tower {
        &self.tower
    }

    pub fn basis(&self) -> &SchrodingerBasis {
        &self.basis
    }

    pub fn level(&self) -> usize {
        self.basis.level
    }

    pub fn half_dim(&self) -> usize {
        self.basis.n
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn p(&self) -> u32 {
        self.tower.p()
    }

    fn psi_exp(&self, x: &FieldElem) -> u32 {
        self.tower.psi_exponent(x, self.basis.level)
    }

    fn dot(&self, u: &[FieldElem], v: &[FieldElem]) -> FieldElem {
        let t = &*self.tower;
        u.iter().zip(v).fold(t.zero(), |acc, (a, b)| t.add(&acc, &t.mul(a, b)))
    }

    fn check_mat(&self, m: &Mat) -> Result<()> {
        if m.size() != self.basis.n {
            return Err(Error::DimensionMismatch(format!("expected {0}×{0} block", self.basis.n)));
        }
        if !m.in_level(&self.tower, self.basis.level) {
            return Err(Error::LevelMismatch(format!("entries not in level {}", self.basis.level)));
        }
        Ok(())
    }

    /// Phase exponent and shift of `ρ(h)`: `ρ(h) f(y) = ζ^{phase(y)} f(y + x*)`.
    fn heis_parts(&self, h: &HeisElem) -> Result<(Vec<u32>, Vec<FieldElem>)> {
        let t = &*self.tower;
        let n = self.basis.n;
        if h.v.len() != 2 * n {
            return Err(Error::DimensionMismatch("Heisenberg vector length".into()));
        }
        if !h.in_level(t, self.basis.level) {
            return Err(Error::LevelMismatch(format!("Heisenberg element not in level {}", self.basis.level)));
        }
        let (x, xs) = h.v.split_at(n);
        // ½⟨x*, x⟩ = -½ x*·x and ⟨y, x⟩ = -y·x
        let base = t.sub(&h.t, &t.mul(&t.half(), &self.dot(xs, x)));
        let phases = self.basis.points.iter().map(|y| self.psi_exp(&t.sub(&base, &self.dot(y, x)))).collect();
        Ok((phases, xs.to_vec()))
    }

    pub fn op_heis(&self, h: &HeisElem) -> Result<WeilOperator> {
        let t = &*self.tower;
        let (phases, xs) = self.heis_parts(h)?;
        let mut m = WeilOperator::zero(self.p(), self.dim());
        for (i, y) in self.basis.points.iter().enumerate() {
            let shifted: Vec<FieldElem> = y.iter().zip(&xs).map(|(a, b)| t.add(a, b)).collect();
            m.add_root(i, self.basis.index_of(&shifted), phases[i], 1);
        }
        Ok(m.finish())
    }

    pub fn op_unip(&self, b: &Mat) -> Result<WeilOperator> {
        self.check_mat(b)?;
        if !is_symmetric(b) {
            return Err(Error::NotSymplectic);
        }
        let t = &*self.tower;
        let mut m = WeilOperator::zero(self.p(), self.dim());
        for (i, y) in self.basis.points.iter().enumerate() {
            let q = self.dot(y, &b.apply(t, y));
            m.add_root(i, i, self.psi_exp(&t.mul(&t.half(), &q)), 1);
        }
        Ok(m.finish())
    }

    pub fn op_levi(&self, a: &Mat) -> Result<WeilOperator> {
        self.check_mat(a)?;
        let t = &*self.tower;
        let det = a.det(t);
        if det.is_zero() {
            return Err(Error::Singular);
        }
        let sign = t.quad_char(&det, self.basis.level)? as i64;
        let at = a.transpose();
        let mut m = WeilOperator::zero(self.p(), self.dim());
        for (i, y) in self.basis.points.iter().enumerate() {
            m.add_root(i, self.basis.index_of(&at.apply(t, y)), 0, sign);
        }
        Ok(m.finish())
    }

    pub fn op_weyl(&self, c: &Mat) -> Result<WeilOperator> {
        self.check_mat(c)?;
        let t = &*self.tower;
        let det = c.det(t);
        if det.is_zero() {
            return Err(Error::Singular);
        }
        let sign = t.quad_char(&det, self.basis.level)? as i64;
        let ci = c.inv(t)?;
        let p = self.p() as usize;
        let dim = self.dim();
        let images: Vec<Vec<FieldElem>> = self.basis.points.iter().map(|y| ci.apply(t, y)).collect();
        let mut m = WeilOperator::zero(self.p(), dim);
        for (i, cy) in images.iter().enumerate() {
            for (j, x) in self.basis.points.iter().enumerate() {
                // ⟨x, c⁻¹y⟩ with x ∈ X*, c⁻¹y ∈ X is -x·c⁻¹y
                let k = self.psi_exp(&t.neg(&self.dot(x, cy))) as usize;
                for (g, &gc) in self.gauss_pow.iter().enumerate() {
                    if gc != 0 {
                        m.add_root(i, j, ((k + g) % p) as u32, sign * gc);
                    }
                }
            }
        }
        m.scale = Rat::one() / self.gauss_den;
        Ok(m.finish())
    }

    /// `I_σ^j f(x) = f(σ^{-j} x)`.
    pub fn op_galois(&self, j: i64) -> WeilOperator {
        let perm = self.basis.frobenius_perm(&self.tower, -j);
        WeilOperator::permutation(self.p(), &perm).finish()
    }

    pub fn op_generator(&self, g: &Generator) -> Result<WeilOperator> {
        match g {
            Generator::Heis(h) => self.op_heis(h),
            Generator::Unip(b) => self.op_unip(b),
            Generator::Levi(a) => self.op_levi(a),
            Generator::Weyl(c) => self.op_weyl(c),
        }
    }

    pub fn factor(&self, g: &Mat) -> Result<GeneratorWord> {
        siegel_factor(&self.tower, g, self.basis.level)
    }

    fn cache_path(&self, g: &Mat) -> Option<PathBuf> {
        let dir = self.cache_dir.as_ref()?;
        let mut h = DefaultHasher::new();
        self.tower.to_text().hash(&mut h);
        self.tower.psi_scale().hash(&mut h);
        self.basis.level.hash(&mut h);
        g.hash(&mut h);
        Some(dir.join(format!("rho-{}-{:016x}.op", self.basis.level, h.finish())))
    }

    fn load_cached(&self, g: &Mat) -> Option<WeilOperator> {
        let path = self.cache_path(g)?;
        let text = fs::read_to_string(path).ok()?;
        let (key, body) = text.split_once('\n')?;
        if key != g.to_text() {
            return None;
        }
        WeilOperator::from_text(body).ok().filter(|m| m.dim == self.dim() && m.p == self.p())
    }

    fn store_cached(&self, g: &Mat, op: &WeilOperator) {
        if let Some(path) = self.cache_path(g) {
            // a failed write only costs a recomputation later
            let _ = fs::write(path, format!("{}\n{}", g.to_text(), op.to_text()));
        }
    }

    /// `ρ(g)` for symplectic `g`, as the product of generator operators along
    /// [`siegel_factor`].
    pub fn rho(&self, g: &Mat) -> Result<Arc<WeilOperator>> {
        if let Some(op) = self.memo.lock().unwrap().get(g) {
            return Ok(op.clone());
        }
        let op = match self.load_cached(g) {
            Some(op) => op,
            None => {
                let word = self.factor(g)?;
                let mut acc = WeilOperator::identity(self.p(), self.dim()).finish();
                for f in &word.factors {
                    acc = acc.mul(&self.op_generator(f)?);
                }
                self.store_cached(g, &acc);
                acc
            }
        };
        let op = Arc::new(op);
        let mut memo = self.memo.lock().unwrap();
        if memo.len() >= MEMO_CAPACITY {
            memo.clear();
        }
        memo.insert(g.clone(), op.clone());
        Ok(op)
    }

    /// `ρ(s, h) = ρ(h) ρ(s)`.
    pub fn rho_sph(&self, x: &SpHElem) -> Result<WeilOperator> {
        let s = self.rho(&x.s)?;
        Ok(self.op_heis(&x.h)?.mul(&s))
    }

    /// Trace of `ρ(g) I_σ^i`.
    pub fn extended_trace_sp(&self, i: usize, g: &Mat) -> Result<CycNum> {
        let op = self.rho(g)?;
        Ok(op.trace_against(&self.basis.frobenius_perm(&self.tower, i as i64)))
    }

    /// Trace of `ρ(h) ρ(s) I_σ^i` for `(σ^i, (s, h))`.
    pub fn extended_trace(&self, i: usize, x: &SpHElem) -> Result<CycNum> {
        let t = &*self.tower;
        let op = self.rho(&x.s)?;
        let (phases, xs) = self.heis_parts(&x.h)?;
        let perm = self.basis.frobenius_perm(t, i as i64);
        let p = self.p() as usize;
        let mut acc = vec![0i64; p];
        for (k, y) in self.basis.points.iter().enumerate() {
            let shifted: Vec<FieldElem> = y.iter().zip(&xs).map(|(a, b)| t.add(a, b)).collect();
            let row = self.basis.index_of(&shifted);
            for (e, &c) in op.slot(row, perm[k]).iter().enumerate() {
                acc[(e + phases[k] as usize) % p] += c;
            }
        }
        Ok(to_cyc(self.p(), &acc, &op.scale))
    }

    /// Character of `ρ` at `(s, h)`.
    pub fn character(&self, x: &SpHElem) -> Result<CycNum> {
        self.extended_trace(0, x)
    }
}

/// Value at `g ∈ GSp(F_{q^d})` of the character of `Ind_{Sp}^{GSp} ρ`, summed over the
/// coset representatives `diag(1, …, 1, λ, …, λ)`.
pub fn gsp_character(rep: &WeilRep, g: &Mat) -> Result<CycNum> {
    extended_gsp_trace(rep, 0, g)
}

/// Value at `(σ^i, g)` of the character of `Ind_{Γ ⋉ Sp(F')}^{Γ ⋉ GSp(F')} ρ̃'`.
pub fn extended_gsp_trace(rep: &WeilRep, i: usize, g: &Mat) -> Result<CycNum> {
    let t = rep.tower();
    let d = rep.level();
    let n = rep.half_dim();
    if membership(t, g, d)? == Membership::Neither {
        return Err(Error::NotSymplectic);
    }
    let mut acc = CycNum::zero(t.p());
    for lambda in t.units(d)? {
        let r = crate::grouplib::similitude_diag(t, n, &lambda);
        let conj = r.inv(t)?.mul(t, g).mul(t, &r.frob(t, i as i64));
        if membership(t, &conj, d)? == Membership::Symp {
            acc += &rep.extended_trace_sp(i, &conj)?;
        }
    }
    Ok(acc)
}
