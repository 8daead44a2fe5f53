//! Twisted norm maps from the coset `σ^i ⋉ G(F_{q^m})` to `G(F_{q^d})`, `d = gcd(m, i)`.
//!
//! For `g ∈ G(F')` the target `h = g σ^i(g) ⋯ σ^{i(t-1)}(g)` is fed to a Lang equation
//! `α⁻¹ σ^d(α) = h`, and the norm is `α · g σ^i(g) ⋯ σ^{i(μ-1)}(g) · α⁻¹`.
//!
//! The Lang equation is solved by linear algebra over `F_p` in the smallest field
//! `F_{q^k}` where a solution must exist: with `β = α⁻¹` the columns of `β` lie in
//! `W = {b : σ^d(b) = h⁻¹ b}`, an `F_{q^d}`-form of `F_{q^k}^N`, and a basis of `W` adapted
//! to the symplectic form gives `β` in the right group.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_integer::Integer;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fieldtower::{fp_kernel, fp_solve, Embedding, FieldElem, Tower};
use crate::grouplib::{
    conjugacy_classes, similitude_factor, symplectic_form, twisted_classes, ClassPartition, GroupElem,
    HeisElem, Mat, SpHElem,
};

/// Default bound on the relative degree `k` of fields used to solve Lang equations.
pub const DEFAULT_AMBIENT_CAP: usize = 48;

/// Search bound on the number of twisted factors before giving up on the period of `h`.
const PERIOD_SEARCH_LIMIT: usize = 100_000;

/// Exponents of a twisted norm: `i = d j`, `m = d μ`, `t i ≡ d (mod m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NormConfig {
    pub m: usize,
    pub i: usize,
    pub d: usize,
    pub j: usize,
    pub mu: usize,
    pub t: usize,
}

/// The smallest positive `t` with `t i ≡ gcd(m, i) (mod m)`; for `i = 0` the convention is
/// `t = 1`, `d = m`.
pub fn choose_t(i: usize, m: usize) -> Result<NormConfig> {
    if m == 0 || i >= m {
        return Err(Error::ConfigInvalid(format!("need 0 <= i < m, got i={i} m={m}")));
    }
    if i == 0 {
        return Ok(NormConfig { m, i, d: m, j: 0, mu: 1, t: 1 });
    }
    let d = m.gcd(&i);
    let t = (1..=m).find(|t| (t * i) % m == d % m).expect("a solution exists below m");
    Ok(NormConfig { m, i, d, j: i / d, mu: m / d, t })
}

/// `g σ^i(g) ⋯ σ^{i(k-1)}(g)`.
pub fn twisted_product<G: GroupElem>(tw: &Tower, i: usize, g: &G, k: usize) -> G {
    let mut acc = g.identity_like(tw);
    for r in 0..k {
        acc = acc.op(tw, &g.frob(tw, (i * r) as i64));
    }
    acc
}

/// Group elements that can be moved between towers and fed to the Lang solver.
pub trait LangElem: GroupElem {
    fn embed(&self, emb: &Embedding, big: &Tower) -> Self;
    fn pull_back(&self, emb: &Embedding, small: &Tower) -> Option<Self>;
    /// Some `α` with `α⁻¹ σ^d(α) = h`, when one exists over the ambient field of `big`.
    fn solve_lang(big: &Tower, h: &Self, d: usize) -> Result<Self>;
}

impl LangElem for Mat {
    fn embed(&self, emb: &Embedding, big: &Tower) -> Self {
        let n = self.size();
        let rows = (0..n).map(|i| (0..n).map(|j| emb.map(big, self.get(i, j))).collect()).collect();
        Mat::from_rows(rows).expect("square")
    }

    fn pull_back(&self, emb: &Embedding, small: &Tower) -> Option<Self> {
        let n = self.size();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                row.push(emb.pull_back(small, self.get(i, j))?);
            }
            rows.push(row);
        }
        Mat::from_rows(rows).ok()
    }

    fn solve_lang(big: &Tower, h: &Self, d: usize) -> Result<Self> {
        let beta = solve_columns(big, h, d)?;
        beta.inv(big)
    }
}

impl LangElem for SpHElem {
    fn embed(&self, emb: &Embedding, big: &Tower) -> Self {
        SpHElem {
            s: self.s.embed(emb, big),
            h: HeisElem { v: self.h.v.iter().map(|x| emb.map(big, x)).collect(), t: emb.map(big, &self.h.t) },
        }
    }

    fn pull_back(&self, emb: &Embedding, small: &Tower) -> Option<Self> {
        let v = self.h.v.iter().map(|x| emb.pull_back(small, x)).collect::<Option<Vec<_>>>()?;
        Some(SpHElem { s: self.s.pull_back(emb, small)?, h: HeisElem { v, t: emb.pull_back(small, &self.h.t)? } })
    }

    fn solve_lang(big: &Tower, x: &Self, d: usize) -> Result<Self> {
        let a = Mat::solve_lang(big, &x.s, d)?;
        // remaining equation u⁻¹ σ^d(u) = a(h) in the Heisenberg group
        let target = x.h.act(big, &a);
        let w = target.v.iter().map(|v| artin_schreier(big, v, d)).collect::<Result<Vec<_>>>()?;
        let sw: Vec<FieldElem> = w.iter().map(|y| big.frobenius(y, d as i64)).collect();
        let rhs = big.add(&target.t, &big.mul(&big.half(), &symplectic_form(big, &w, &sw)));
        let tau = artin_schreier(big, &rhs, d)?;
        Ok(SpHElem { s: a, h: HeisElem { v: w, t: tau } })
    }
}

/// Some `y` with `σ^d(y) - y = c`.
fn artin_schreier(big: &Tower, c: &FieldElem, d: usize) -> Result<FieldElem> {
    let rows = fp_operator(big, |x| big.sub(&big.frobenius(x, d as i64), x));
    let sol = fp_solve(&rows, c.coeffs(), big.degree(), big.p()).ok_or(Error::FactorizationFailed)?;
    big.from_coeffs(&sol)
}

/// Matrix over `F_p` of an `F_p`-linear map of the ambient field.
fn fp_operator(big: &Tower, f: impl Fn(&FieldElem) -> FieldElem) -> Vec<Vec<u16>> {
    let dim = big.degree();
    let images: Vec<FieldElem> = (0..dim)
        .map(|j| {
            let mut c = vec![0u16; dim];
            c[j] = 1;
            f(&big.from_coeffs(&c).expect("unit vector"))
        })
        .collect();
    (0..dim).map(|r| images.iter().map(|img| img.coeffs()[r]).collect()).collect()
}

/// `F_p`-basis of `{b ∈ F^N : σ^d(b) = g b}` for the ambient field `F`.
fn twisted_fixed_space(big: &Tower, g: &Mat, d: usize) -> Vec<Vec<FieldElem>> {
    let n = g.size();
    let dim = big.degree();
    let p = big.p();
    let cols: Vec<Vec<u16>> = (0..n * dim)
        .map(|idx| {
            let (c, j) = (idx / dim, idx % dim);
            let mut unit = vec![0u16; dim];
            unit[j] = 1;
            let x = big.from_coeffs(&unit).expect("unit vector");
            let sx = big.frobenius(&x, d as i64);
            let mut out = Vec::with_capacity(n * dim);
            for r in 0..n {
                let mut val = big.neg(&big.mul(g.get(r, c), &x));
                if r == c {
                    val = big.add(&val, &sx);
                }
                out.extend_from_slice(val.coeffs());
            }
            out
        })
        .collect();
    let rows: Vec<Vec<u16>> = (0..n * dim).map(|r| cols.iter().map(|col| col[r]).collect()).collect();
    fp_kernel(&rows, n * dim, p)
        .into_iter()
        .map(|v| v.chunks(dim).map(|c| big.from_coeffs(c).expect("ambient degree")).collect())
        .collect()
}

/// Columns of `β` with `σ^d(β) = h⁻¹ β`, in the group of `h`.
fn solve_columns(big: &Tower, h: &Mat, d: usize) -> Result<Mat> {
    let n = h.size();
    let hinv = h.inv(big)?;
    let space = twisted_fixed_space(big, &hinv, d);
    let level = big.rel_degree();
    let form_scale = if n.is_multiple_of(2) && crate::grouplib::membership(big, h, level)? != crate::grouplib::Membership::Neither {
        let lambda = similitude_factor(big, h);
        if lambda == big.one() {
            Some(big.one())
        } else {
            // κ with σ^d(κ) = λ κ makes κ⟨,⟩ take values in F_{q^d} on the fixed space
            let rows = fp_operator(big, |x| big.sub(&big.frobenius(x, d as i64), &big.mul(&lambda, x)));
            let ker = fp_kernel(&rows, big.degree(), big.p());
            let kappa = ker.first().ok_or(Error::FactorizationFailed)?;
            Some(big.from_coeffs(kappa)?)
        }
    } else {
        None
    };
    let columns = match form_scale {
        Some(kappa) => symplectic_basis(big, space, n / 2, &kappa)?,
        None => independent_columns(big, space, n)?,
    };
    let rows = (0..n).map(|r| columns.iter().map(|c| c[r].clone()).collect()).collect();
    Mat::from_rows(rows)
}

fn independent_columns(big: &Tower, space: Vec<Vec<FieldElem>>, n: usize) -> Result<Vec<Vec<FieldElem>>> {
    // rows of `echelon` are reduced copies of the chosen vectors, with their pivot
    let mut echelon: Vec<(usize, Vec<FieldElem>)> = Vec::new();
    let mut chosen = Vec::new();
    for v in space {
        let mut r = v.clone();
        for (piv, row) in &echelon {
            if !r[*piv].is_zero() {
                let f = r[*piv].clone();
                for (x, y) in r.iter_mut().zip(row) {
                    *x = big.sub(x, &big.mul(&f, y));
                }
            }
        }
        if let Some(piv) = r.iter().position(|x| !x.is_zero()) {
            let inv = big.inv(&r[piv])?;
            let r: Vec<FieldElem> = r.iter().map(|x| big.mul(x, &inv)).collect();
            echelon.push((piv, r));
            chosen.push(v);
            if chosen.len() == n {
                return Ok(chosen);
            }
        }
    }
    Err(Error::FactorizationFailed)
}

fn symplectic_basis(big: &Tower, mut space: Vec<Vec<FieldElem>>, n: usize, kappa: &FieldElem) -> Result<Vec<Vec<FieldElem>>> {
    let form = |u: &[FieldElem], v: &[FieldElem]| big.mul(kappa, &symplectic_form(big, u, v));
    let mut es = Vec::with_capacity(n);
    let mut fs = Vec::with_capacity(n);
    for _ in 0..n {
        let (e, f) = {
            let mut found = None;
            'search: for (a, u) in space.iter().enumerate() {
                for v in space.iter().skip(a + 1) {
                    let b = form(u, v);
                    if !b.is_zero() {
                        found = Some((u.clone(), v.clone(), b));
                        break 'search;
                    }
                }
            }
            let (e, f, b) = found.ok_or(Error::FactorizationFailed)?;
            let binv = big.inv(&b)?;
            (e, f.iter().map(|x| big.mul(x, &binv)).collect::<Vec<_>>())
        };
        // project onto the orthogonal complement of span(e, f)
        space = space
            .into_iter()
            .map(|v| {
                let vf = form(&v, &f);
                let ve = form(&v, &e);
                v.iter()
                    .zip(e.iter().zip(&f))
                    .map(|(x, (ex, fx))| big.add(&big.sub(x, &big.mul(&vf, ex)), &big.mul(&ve, fx)))
                    .collect::<Vec<_>>()
            })
            .filter(|v| v.iter().any(|x| !x.is_zero()))
            .collect();
        es.push(e);
        fs.push(f);
    }
    es.extend(fs);
    Ok(es)
}

/// A solution of `α⁻¹ σ^d(α) = target` over the field of relative degree `ambient_degree`.
#[derive(Clone, Debug)]
pub struct LangWitness<G> {
    pub alpha: G,
    pub target: G,
    pub ambient_degree: usize,
    pub tower: Arc<Tower>,
    pub embedding: Arc<Embedding>,
}

/// Norm map for one coset `σ^i ⋉ G(F_{q^m})`, holding the enlarged towers it has built.
pub struct NormMap {
    tower: Arc<Tower>,
    cfg: NormConfig,
    ambient_cap: usize,
    towers: Mutex<HashMap<usize, (Arc<Tower>, Arc<Embedding>)>>,
}

impl std::fmt::Debug for NormMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NormMap").field("cfg", &self.cfg).field("ambient_cap", &self.ambient_cap).finish()
    }
}

impl NormMap {
    pub fn new(tower: Arc<Tower>, i: usize) -> Result<NormMap> {
        let cfg = choose_t(i, tower.rel_degree())?;
        Ok(NormMap { tower, cfg, ambient_cap: DEFAULT_AMBIENT_CAP, towers: Mutex::new(HashMap::new()) })
    }

    /// Uses `t` in place of the smallest solution; it must satisfy `t i ≡ d (mod m)`.
    pub fn with_t(mut self, t: usize) -> Result<NormMap> {
        let c = self.cfg;
        if c.i != 0 && (t * c.i) % c.m != c.d % c.m {
            return Err(Error::ConfigInvalid(format!("t={t} does not satisfy t·i ≡ d (mod m)")));
        }
        self.cfg.t = t;
        Ok(self)
    }

    pub fn with_ambient_cap(mut self, cap: usize) -> NormMap {
        self.ambient_cap = cap;
        self
    }

    pub fn config(&self) -> NormConfig {
        self.cfg
    }

    pub fn tower(&self) -> &Tower {
        &self.tower
    }

    fn enlarged(&self, k: usize) -> Result<(Arc<Tower>, Arc<Embedding>)> {
        if let Some(e) = self.towers.lock().unwrap().get(&k) {
            return Ok(e.clone());
        }
        let (big, emb) = self.tower.enlarge(k)?;
        let entry = (Arc::new(big), Arc::new(emb));
        self.towers.lock().unwrap().insert(k, entry.clone());
        Ok(entry)
    }

    /// Smallest relative degree `k`, a multiple of `d` and `m`, over which
    /// `α⁻¹ σ^d(α) = h` is solvable: `h σ^d(h) ⋯ σ^{d(k/d-1)}(h) = 1`.
    pub fn solving_degree<G: GroupElem>(&self, h: &G, d: usize) -> Result<usize> {
        let t = &*self.tower;
        let m = t.rel_degree();
        let id = h.identity_like(t);
        let mut acc = h.clone();
        let mut r = 1;
        while acc != id {
            if r >= PERIOD_SEARCH_LIMIT {
                return Err(Error::AmbientCapExceeded { needed: usize::MAX, cap: self.ambient_cap });
            }
            acc = acc.op(t, &h.frob(t, (d * r) as i64));
            r += 1;
        }
        let k = m.lcm(&(d * r));
        if k > self.ambient_cap {
            return Err(Error::AmbientCapExceeded { needed: k, cap: self.ambient_cap });
        }
        Ok(k)
    }

    /// Solves `α⁻¹ σ^d(α) = h` for `h ∈ G(F_{q^m})`, enlarging the field as needed.
    pub fn lang_solve<G: LangElem>(&self, h: &G, d: usize) -> Result<LangWitness<G>> {
        if !self.tower.has_level(d) {
            return Err(Error::LevelMismatch(format!("level {d} is not registered")));
        }
        let k = self.solving_degree(h, d)?;
        let (big, emb) = self.enlarged(k)?;
        let target = h.embed(&emb, &big);
        let alpha = G::solve_lang(&big, &target, d)?;
        let check = alpha.inverse(&big).op(&big, &alpha.frob(&big, d as i64));
        if check != target {
            return Err(Error::FactorizationFailed);
        }
        Ok(LangWitness { alpha, target, ambient_degree: k, tower: big, embedding: emb })
    }

    /// Right side of the Lang equation for `(σ^i, g)`: the `G`-part of
    /// `(σ^i, g)^t (σ^{-it}, 1)`, which is `g σ^i(g) ⋯ σ^{i(t-1)}(g)`.
    ///
    /// Multiplying in the other order gives `σ^{-it}` of this product, and for that
    /// target the conjugated product is in general not rational over `F_{q^d}`.
    pub fn lang_target<G: GroupElem>(&self, g: &G) -> G {
        let c = self.cfg;
        twisted_product(&self.tower, c.i, g, c.t)
    }

    /// `N_{i,t}(σ^i, g) ∈ G(F_{q^d})`; the coset `σ^0` maps identically.
    pub fn gyoja_norm<G: LangElem>(&self, g: &G) -> Result<G> {
        let c = self.cfg;
        if c.i == 0 {
            return Ok(g.clone());
        }
        let w = self.lang_solve(&self.lang_target(g), c.d)?;
        let prod = twisted_product(&self.tower, c.i, g, c.mu).embed(&w.embedding, &w.tower);
        let big = &*w.tower;
        let n = w.alpha.op(big, &prod).op(big, &w.alpha.inverse(big));
        let out = n.pull_back(&w.embedding, &self.tower).ok_or(Error::FactorizationFailed)?;
        if !out.in_level(&self.tower, c.d) {
            return Err(Error::LevelMismatch(format!("norm is not in level {}", c.d)));
        }
        Ok(out)
    }

    /// `g σ^i(g) ⋯ σ^{i(μ-1)}(g)`, which is the norm for commutative groups.
    pub fn classical_norm<G: GroupElem>(&self, g: &G) -> G {
        twisted_product(&self.tower, self.cfg.i, g, self.cfg.mu)
    }
}

/// Outcome of checking that the norm induces a bijection on classes.
#[derive(Clone, Debug)]
pub struct BijectionReport {
    pub twisted_classes: usize,
    pub target_classes: usize,
    /// Target class id for each twisted class.
    pub image: Vec<usize>,
    pub well_defined: bool,
    pub injective: bool,
    pub surjective: bool,
    pub equivariant: bool,
    pub tsv: String,
}

impl BijectionReport {
    pub fn is_bijection(&self) -> bool {
        self.well_defined && self.injective && self.surjective && self.equivariant
    }
}

/// How many elements of each twisted class are pushed through the norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassCoverage {
    All,
    Sample(usize),
}

/// Maps the twisted classes of `source = G(F_{q^m})` to the classes of
/// `target = G(F_{q^d})` and checks well-definedness, bijectivity and σ-equivariance.
pub fn verify_bijection<G: LangElem, R: Rng>(
    nm: &NormMap,
    source: &[G],
    target: &[G],
    coverage: ClassCoverage,
    rng: &mut R,
) -> Result<BijectionReport> {
    let t = nm.tower();
    let c = nm.config();
    let twisted: ClassPartition<G> = twisted_classes(t, source, c.i);
    let classes: ClassPartition<G> = conjugacy_classes(t, target);
    let class_id = |x: &G| classes.class_of(x).ok_or_else(|| Error::LevelMismatch("norm outside target group".into()));
    let mut image = Vec::with_capacity(twisted.len());
    let mut well_defined = true;
    for rep in &twisted.reps {
        image.push(class_id(&nm.gyoja_norm(rep)?)?);
    }
    match coverage {
        ClassCoverage::All => {
            for g in source {
                let k = twisted.class_of(g).expect("partition covers the group");
                if class_id(&nm.gyoja_norm(g)?)? != image[k] {
                    well_defined = false;
                }
            }
        }
        ClassCoverage::Sample(per_class) => {
            for (k, rep) in twisted.reps.iter().enumerate() {
                for _ in 0..per_class {
                    let h = &source[rng.gen_range(0..source.len())];
                    let g = crate::grouplib::twisted_conj(t, c.i, h, rep);
                    if class_id(&nm.gyoja_norm(&g)?)? != image[k] {
                        well_defined = false;
                    }
                }
            }
        }
    }
    let mut seen = vec![false; classes.len()];
    let mut injective = true;
    for &k in &image {
        if seen[k] {
            injective = false;
        }
        seen[k] = true;
    }
    let surjective = seen.iter().all(|&s| s);
    let mut equivariant = true;
    for (k, rep) in twisted.reps.iter().enumerate() {
        let moved = class_id(&nm.gyoja_norm(&rep.frob(t, 1))?)?;
        let expected = class_id(&classes.reps[image[k]].frob(t, 1))?;
        if moved != expected {
            equivariant = false;
        }
    }
    let mut tsv = String::from("twisted_rep\tnorm_rep\ttwisted_size\tnorm_size\n");
    for (k, rep) in twisted.reps.iter().enumerate() {
        let target_rep = &classes.reps[image[k]];
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            rep.key_text(),
            target_rep.key_text(),
            twisted.sizes[k],
            classes.sizes[image[k]]
        ));
    }
    Ok(BijectionReport {
        twisted_classes: twisted.len(),
        target_classes: classes.len(),
        image,
        well_defined,
        injective,
        surjective,
        equivariant,
        tsv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouplib::{enumerate_group, random_element, random_heis, GroupSpec, DEFAULT_ENUMERATION_CAP};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f9() -> Arc<Tower> {
        Arc::new(Tower::build(3, 1, 2).unwrap())
    }

    #[test]
    fn choose_t_examples() {
        assert_eq!(choose_t(1, 5).unwrap().t, 1);
        let c = choose_t(3, 4).unwrap();
        assert_eq!((c.t, c.d, c.j, c.mu), (3, 1, 3, 4));
        let c = choose_t(2, 4).unwrap();
        assert_eq!((c.t, c.d, c.j, c.mu), (1, 2, 1, 2));
        let c = choose_t(0, 3).unwrap();
        assert_eq!((c.t, c.d, c.mu), (1, 3, 1));
        assert!(matches!(choose_t(4, 4), Err(Error::ConfigInvalid(_))));
        for m in 1..12 {
            for i in 0..m {
                let c = choose_t(i, m).unwrap();
                if i > 0 {
                    assert_eq!((c.t * i) % m, c.d % m);
                }
            }
        }
    }

    #[test]
    fn twisted_product_in_gl1() {
        let t = f9();
        let z = t.generator();
        let g = Mat::from_rows(vec![vec![z.clone()]]).unwrap();
        assert_eq!(twisted_product(&t, 1, &g, 1), g);
        let one = Mat::identity(&t, 1);
        assert_eq!(twisted_product(&t, 1, &one, 2), one);
        // z = √-1 here, so z·z³ = z⁴ = 1; a primitive element gives 2
        let prim = crate::grouplib::primitive_element(&t, 2).unwrap();
        let gp = Mat::from_rows(vec![vec![prim.clone()]]).unwrap();
        let prod = twisted_product(&t, 1, &gp, 2);
        assert_eq!(prod, Mat::from_ints(&t, &[&[2]]).unwrap());
        assert_eq!(*prod.get(0, 0), t.pow(&prim, 4));
    }

    #[test]
    fn lang_in_gl1() {
        let t = f9();
        let nm = NormMap::new(t.clone(), 1).unwrap();
        let prim = crate::grouplib::primitive_element(&t, 2).unwrap();
        let sq = Mat::from_rows(vec![vec![t.square(&prim)]]).unwrap();
        let w = nm.lang_solve(&sq, 1).unwrap();
        assert_eq!(w.ambient_degree, 2);
        let big = &*w.tower;
        assert_eq!(w.alpha.inverse(big).op(big, &w.alpha.frob(big, 1)), w.target);
        let nonsq = Mat::from_rows(vec![vec![prim]]).unwrap();
        let w = nm.lang_solve(&nonsq, 1).unwrap();
        assert_eq!(w.ambient_degree, 4);
        let one = Mat::identity(&t, 1);
        let w = nm.lang_solve(&one, 1).unwrap();
        assert!(w.alpha.inverse(&w.tower).op(&w.tower, &w.alpha.frob(&w.tower, 1)).is_identity(&w.tower));
    }

    /// Exhaustive solutions of `α⁻¹ σ^d(α) = h` inside an enumerated group.
    fn exhaustive_lang(t: &Tower, group: &[Mat], h: &Mat, d: usize) -> Vec<Mat> {
        group.iter().filter(|a| a.inverse(t).op(t, &a.frob(t, d as i64)) == *h).cloned().collect()
    }

    #[test]
    fn linear_solver_agrees_with_exhaustive_search() {
        // over F_81 ⊃ F_9 every h in SL2(F_9) with h σ(h) = 1 has a witness in SL2(F_9)
        let t = Arc::new(Tower::build(3, 1, 4).unwrap());
        let g2 = enumerate_group(&t, GroupSpec::sp(1), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        let nm = NormMap::new(t.clone(), 1).unwrap();
        let mut checked = 0;
        for h in g2.iter().filter(|h| h.op(&t, &h.frob(&t, 1)).is_identity(&t)) {
            let oracle = exhaustive_lang(&t, &g2, h, 1);
            assert!(!oracle.is_empty());
            let w = nm.lang_solve(h, 1).unwrap();
            assert!(w.ambient_degree == 4);
            let a = w.alpha.pull_back(&w.embedding, &t).unwrap();
            // witnesses differ by left multiplication by SL2(F_3)
            let c = oracle[0].op(&t, &a.inverse(&t));
            assert!(c.in_level(&t, 1));
            checked += 1;
        }
        assert!(checked > 20);
    }

    #[test]
    fn norms_of_sl2_f9() {
        let t = f9();
        let nm = NormMap::new(t.clone(), 1).unwrap();
        let g2 = enumerate_group(&t, GroupSpec::sp(1), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        let g1 = enumerate_group(&t, GroupSpec::sp(1), 1, DEFAULT_ENUMERATION_CAP).unwrap();
        let one = Mat::identity(&t, 2);
        assert_eq!(nm.gyoja_norm(&one).unwrap(), one);
        let classes = conjugacy_classes(&t, &g1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..40 {
            let g = &g2[rng.gen_range(0..g2.len())];
            let h = &g2[rng.gen_range(0..g2.len())];
            let n1 = nm.gyoja_norm(g).unwrap();
            assert!(n1.in_level(&t, 1));
            let n2 = nm.gyoja_norm(&crate::grouplib::twisted_conj(&t, 1, h, g)).unwrap();
            assert_eq!(classes.class_of(&n1), classes.class_of(&n2));
        }
    }

    #[test]
    fn bijection_sl2_q3_m2() {
        let t = f9();
        let nm = NormMap::new(t.clone(), 1).unwrap();
        let g2 = enumerate_group(&t, GroupSpec::sp(1), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        let g1 = enumerate_group(&t, GroupSpec::sp(1), 1, DEFAULT_ENUMERATION_CAP).unwrap();
        let rep = verify_bijection(&nm, &g2, &g1, ClassCoverage::All, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!((rep.twisted_classes, rep.target_classes), (7, 7));
        assert!(rep.is_bijection(), "{rep:?}");
        assert_eq!(rep.tsv.lines().count(), 8);
        let nm0 = NormMap::new(t.clone(), 0).unwrap();
        let rep0 = verify_bijection(&nm0, &g2, &g2, ClassCoverage::Sample(2), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(rep0.is_bijection());
        assert_eq!(rep0.image, (0..13).collect::<Vec<_>>());
    }

    #[test]
    fn left_twisted_target_is_not_rational() {
        let t = f9();
        let nm = NormMap::new(t.clone(), 1).unwrap();
        let g2 = enumerate_group(&t, GroupSpec::sp(1), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        let mut off_level = 0;
        for g in &g2 {
            let h = nm.lang_target(g).frob(&t, -1);
            let w = nm.lang_solve(&h, 1).unwrap();
            let big = &*w.tower;
            let prod = nm.classical_norm(g).embed(&w.embedding, big);
            let n = w.alpha.op(big, &prod).op(big, &w.alpha.inverse(big));
            if n.frob(big, 1) != n {
                off_level += 1;
            }
        }
        assert!(off_level > 0);
    }

    #[test]
    fn abelian_norm_is_classical() {
        let t = Arc::new(Tower::build(3, 1, 3).unwrap());
        let nm = NormMap::new(t.clone(), 1).unwrap();
        for x in t.units(3).unwrap().iter().step_by(3) {
            let g = Mat::from_rows(vec![vec![x.clone()]]).unwrap();
            let n = nm.gyoja_norm(&g).unwrap();
            assert_eq!(n, nm.classical_norm(&g));
            assert_eq!(*n.get(0, 0), t.norm_to(x, 3, 1).unwrap());
        }
    }

    #[test]
    fn gsp_and_sp4_norms_land_in_level() {
        let t = f9();
        let nm = NormMap::new(t.clone(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let g = random_element(&t, GroupSpec::gsp(1), 2, &mut rng).unwrap();
            let n = nm.gyoja_norm(&g).unwrap();
            assert!(GroupSpec::gsp(1).contains(&t, &n, 1));
            let g = random_element(&t, GroupSpec::sp(2), 2, &mut rng).unwrap();
            let n = nm.gyoja_norm(&g).unwrap();
            assert!(GroupSpec::sp(2).contains(&t, &n, 1));
        }
    }

    #[test]
    fn heisenberg_witnesses() {
        let t = f9();
        let nm = NormMap::new(t.clone(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let x = SpHElem { s: random_element(&t, GroupSpec::sp(1), 2, &mut rng).unwrap(), h: random_heis(&t, 1, 2, &mut rng) };
            let target = nm.lang_target(&x);
            let w = nm.lang_solve(&target, 1).unwrap();
            let big = &*w.tower;
            assert_eq!(w.alpha.inverse(big).op(big, &w.alpha.frob(big, 1)), w.target);
            assert!(nm.gyoja_norm(&x).unwrap().in_level(&t, 1));
        }
    }

    #[test]
    fn ambient_cap_is_reported() {
        let t = Arc::new(Tower::build(3, 1, 4).unwrap());
        let nm = NormMap::new(t.clone(), 1).unwrap().with_ambient_cap(4);
        let prim = crate::grouplib::primitive_element(&t, 4).unwrap();
        let g = Mat::from_rows(vec![vec![prim]]).unwrap();
        assert!(matches!(nm.lang_solve(&g, 1), Err(Error::AmbientCapExceeded { .. })));
    }
}
