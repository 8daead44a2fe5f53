//! Class functions on ordinary groups and twisted cosets, inner products, lifting along
//! the norm map, induced characters, and the character identities attached to the
//! Heisenberg support, the Siegel parabolic and the elliptic torus of `SL₂`.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;

use crate::cyclotomic::{CycNum, Rat};
use crate::error::{Error, Result};
use crate::fieldtower::{FieldElem, Tower};
use crate::grouplib::{
    vectors, ClassPartition, GroupElem, HeisElem, Mat, SpHElem, TorusModel, TwistedElem,
};
use crate::normmap::{LangElem, NormMap};
use crate::schrodinger::WeilRep;

/// A cyclotomic-valued function on the classes of a partition. Values of virtual
/// characters are allowed, so sums, differences and products are all defined.
#[derive(Clone, Debug)]
pub struct ClassFunction<G: GroupElem> {
    partition: Arc<ClassPartition<G>>,
    values: Vec<CycNum>,
}

impl<G: GroupElem> ClassFunction<G> {
    pub fn new(partition: Arc<ClassPartition<G>>, values: Vec<CycNum>) -> Result<ClassFunction<G>> {
        if values.len() != partition.len() {
            return Err(Error::SupportMismatch(format!(
                "{} values for {} classes",
                values.len(),
                partition.len()
            )));
        }
        Ok(ClassFunction { partition, values })
    }

    /// Evaluates `f` at every class representative.
    pub fn from_fn<F>(partition: Arc<ClassPartition<G>>, f: F) -> Result<ClassFunction<G>>
    where
        F: Fn(&G) -> Result<CycNum> + Sync,
    {
        let values = partition.reps.par_iter().map(&f).collect::<Result<Vec<_>>>()?;
        Ok(ClassFunction { partition, values })
    }

    pub fn constant(partition: Arc<ClassPartition<G>>, c: CycNum) -> ClassFunction<G> {
        let values = vec![c; partition.len()];
        ClassFunction { partition, values }
    }

    /// Indicator of class `k`.
    pub fn indicator(partition: Arc<ClassPartition<G>>, p: u32, k: usize) -> ClassFunction<G> {
        let values = (0..partition.len())
            .map(|j| if j == k { CycNum::one(p) } else { CycNum::zero(p) })
            .collect();
        ClassFunction { partition, values }
    }

    pub fn partition(&self) -> &Arc<ClassPartition<G>> {
        &self.partition
    }

    pub fn values(&self) -> &[CycNum] {
        &self.values
    }

    /// Value at an arbitrary element of the support, `None` outside it.
    pub fn value_at(&self, g: &G) -> Option<&CycNum> {
        self.partition.class_of(g).map(|k| &self.values[k])
    }

    fn same_support(&self, o: &ClassFunction<G>) -> Result<()> {
        if Arc::ptr_eq(&self.partition, &o.partition) || self.partition.reps == o.partition.reps {
            Ok(())
        } else {
            Err(Error::SupportMismatch("class functions live on different partitions".into()))
        }
    }

    fn zip(&self, o: &ClassFunction<G>, f: impl Fn(&CycNum, &CycNum) -> CycNum) -> Result<ClassFunction<G>> {
        self.same_support(o)?;
        let values = self.values.iter().zip(&o.values).map(|(a, b)| f(a, b)).collect();
        Ok(ClassFunction { partition: self.partition.clone(), values })
    }

    pub fn add(&self, o: &ClassFunction<G>) -> Result<ClassFunction<G>> {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &ClassFunction<G>) -> Result<ClassFunction<G>> {
        self.zip(o, |a, b| a - b)
    }

    pub fn mul(&self, o: &ClassFunction<G>) -> Result<ClassFunction<G>> {
        self.zip(o, |a, b| a * b)
    }

    pub fn scale(&self, c: &CycNum) -> ClassFunction<G> {
        let values = self.values.iter().map(|a| a * c).collect();
        ClassFunction { partition: self.partition.clone(), values }
    }

    pub fn conj(&self) -> ClassFunction<G> {
        let values = self.values.iter().map(CycNum::conj).collect();
        ClassFunction { partition: self.partition.clone(), values }
    }

    /// TSV with columns `class_id`, `representative`, `size`, `value`, `complex`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("class_id\trepresentative\tsize\tvalue\tcomplex\n");
        for (k, v) in self.values.iter().enumerate() {
            let (re, im) = v.to_complex();
            s.push_str(&format!(
                "{k}\t{}\t{}\t{}\t{re:.6}{im:+.6}i\n",
                self.partition.reps[k].key_text(),
                self.partition.sizes[k],
                v.to_text()
            ));
        }
        s
    }
}

/// `(1/|G|) Σ_{x ∈ G} χ₁(x) conj(χ₂(x))`. On a twisted partition of `σ^i ⋉ G(F')` the class
/// sizes add up to `|G(F')|`, which gives the coset normalization.
pub fn inner_product<G: GroupElem>(a: &ClassFunction<G>, b: &ClassFunction<G>) -> Result<CycNum> {
    a.same_support(b)?;
    let p = a.values.first().map(CycNum::p).unwrap_or(2);
    let mut acc = CycNum::zero(p);
    for ((x, y), &n) in a.values.iter().zip(&b.values).zip(&a.partition.sizes) {
        acc += &(x * &y.conj()).scale(Rat::from_integer(n as i64));
    }
    Ok(acc.scale(Rat::new(1, a.partition.group_order() as i64)))
}

/// `χ ∘ N` on the twisted classes of the coset handled by `nm`; `chi` lives on the classes
/// of `G(F_{q^d})`.
pub fn lift_class_function<G: LangElem>(
    nm: &NormMap,
    chi: &ClassFunction<G>,
    coset: Arc<ClassPartition<G>>,
) -> Result<ClassFunction<G>> {
    ClassFunction::from_fn(coset, |g| {
        let n = nm.gyoja_norm(g)?;
        chi.value_at(&n)
            .cloned()
            .ok_or_else(|| Error::SupportMismatch(format!("norm {} is not in the support", n.key_text())))
    })
}

/// Representatives of the left cosets `r H` of `sub` in `big`.
pub fn coset_representatives<G: GroupElem>(t: &Tower, big: &[G], sub: &[G]) -> Vec<G> {
    let mut seen: HashSet<G> = HashSet::with_capacity(big.len());
    let mut reps = Vec::new();
    for x in big {
        if seen.contains(x) {
            continue;
        }
        for h in sub {
            seen.insert(x.op(t, h));
        }
        reps.push(x.clone());
    }
    reps
}

/// `Σ_r χ̇(r⁻¹ x r)` over left coset representatives `r`, where `chi` returns `None` off
/// the subgroup (extension by zero).
pub fn induced_value<G, F>(t: &Tower, reps: &[G], chi: F, x: &G) -> Result<CycNum>
where
    G: GroupElem,
    F: Fn(&G) -> Result<Option<CycNum>>,
{
    let mut acc = CycNum::zero(t.p());
    for r in reps {
        let y = r.inverse(t).op(t, x).op(t, r);
        if let Some(v) = chi(&y)? {
            acc += &v;
        }
    }
    Ok(acc)
}

/// Number of orbits of `σ` on the classes of `partition`, i.e. the dimension of the
/// `σ`-invariant class functions.
pub fn frobenius_orbit_count<G: GroupElem>(t: &Tower, partition: &ClassPartition<G>) -> Result<usize> {
    let mut seen = vec![false; partition.len()];
    let mut orbits = 0;
    for k in 0..partition.len() {
        if seen[k] {
            continue;
        }
        orbits += 1;
        let mut j = k;
        while !seen[j] {
            seen[j] = true;
            let img = partition.reps[j].frob(t, 1);
            j = partition
                .class_of(&img)
                .ok_or_else(|| Error::SupportMismatch("partition is not Frobenius stable".into()))?;
        }
    }
    Ok(orbits)
}

// ---- Heisenberg support ----

fn heis_translation(t: &Tower, v: Vec<FieldElem>) -> TwistedElem<SpHElem> {
    TwistedElem { i: 0, g: SpHElem::from_heis(t, HeisElem { v, t: t.zero() }) }
}

/// Representatives `(1, (v, 0))`, `v ∈ V(F_{q^d})`, of the cosets of `Γ ⋉ Sp·Z` in
/// `Γ ⋉ Sp·H`.
pub fn heisenberg_coset_reps(t: &Tower, n: usize, d: usize) -> Result<Vec<TwistedElem<SpHElem>>> {
    let els = t.elements(d)?;
    Ok(vectors(els, 2 * n).into_iter().map(|v| heis_translation(t, v)).collect())
}

/// Value at `x` of the character of `Γ ⋉ Sp·H` induced from the trivial character of
/// `Γ ⋉ Sp·Z`.
pub fn support_induced_trivial(t: &Tower, reps: &[TwistedElem<SpHElem>], x: &TwistedElem<SpHElem>) -> Result<CycNum> {
    let one = CycNum::one(t.p());
    induced_value(t, reps, |y| Ok(y.g.h.is_central().then(|| one.clone())), x)
}

// ---- Siegel parabolic ----

/// Representatives `(1, (y, 0))`, `y ∈ X*(F_{q^d})`, of the cosets of
/// `Γ ⋉ P·H_⊥` in `Γ ⋉ P·H`, where `P` stabilizes `X` and `H_⊥ = X ⊕ F`.
pub fn siegel_coset_reps(t: &Tower, n: usize, d: usize) -> Result<Vec<TwistedElem<SpHElem>>> {
    let els = t.elements(d)?;
    Ok(vectors(els, n)
        .into_iter()
        .map(|y| {
            let mut v = vec![t.zero(); n];
            v.extend(y);
            heis_translation(t, v)
        })
        .collect())
}

/// Is `g` in `P·H_⊥`: the lower-left block vanishes and the Heisenberg vector lies in `X`.
pub fn in_siegel_heis(g: &SpHElem) -> bool {
    let n = g.s.size() / 2;
    let (_, _, c, _) = g.s.blocks();
    c.entries().iter().all(FieldElem::is_zero) && g.h.v[n..].iter().all(FieldElem::is_zero)
}

/// Inducing character of the parabolic restriction with `V₀ = 0`: on `Γ ⋉ P·H_⊥` it is
/// `ε(det a) ψ(z)`, trivial on `Γ`, with `a` the action on `X` and `z` the centre
/// coordinate. `None` off the subgroup.
pub fn siegel_inducing_value(t: &Tower, y: &TwistedElem<SpHElem>, d: usize) -> Result<Option<CycNum>> {
    if !in_siegel_heis(&y.g) {
        return Ok(None);
    }
    let (a, _, _, _) = y.g.s.blocks();
    let eps = t.quad_char(&a.det(t), d)?;
    Ok(Some(t.psi(&y.g.h.t, d)?.scale(Rat::from_integer(eps as i64))))
}

// ---- elliptic torus of SL2 ----

fn euler_phi(n: u64) -> u64 {
    let (mut n, mut out, mut f) = (n, n, 2);
    while f * f <= n {
        if n % f == 0 {
            while n % f == 0 {
                n /= f;
            }
            out -= out / f;
        }
        f += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

fn moebius(n: u64) -> i64 {
    let (mut n, mut out, mut f) = (n, 1, 2);
    while f * f <= n {
        if n % f == 0 {
            n /= f;
            if n % f == 0 {
                return 0;
            }
            out = -out;
        }
        f += 1;
    }
    if n > 1 {
        out = -out;
    }
    out
}

/// Ramanujan sum `Σ_{k ∈ (Z/n)^×} ζ_n^{kj}`.
fn ramanujan_sum(n: u64, j: u64) -> i64 {
    let g = n.gcd(&j);
    let r = n / g;
    moebius(r) * (euler_phi(n) / euler_phi(r)) as i64
}

/// `tr ρ_d` on the cyclic elliptic torus `T(F_{q^d}) = ⟨g⟩` and the multiplicity of each
/// torus character `φ_k(g^j) = ζ_N^{jk}` in it, `N = q^d + 1`.
#[derive(Clone, Debug)]
pub struct TorusDecomposition {
    pub order: usize,
    pub generator: Mat,
    /// `tr ρ(g^j)` for `0 ≤ j < N`; these are rational.
    pub traces: Vec<Rat>,
    pub multiplicities: Vec<Rat>,
}

impl TorusDecomposition {
    /// Index of the order-2 character `ω`.
    pub fn omega_index(&self) -> usize {
        self.order / 2
    }
}

/// Decomposes `tr ρ_d|_{T(F_{q^d})}` for `n = 1` and odd `d`. Multiplicities are computed
/// one Galois orbit of characters at a time through Ramanujan sums, so everything stays in
/// `Q`.
pub fn weil_torus_restriction(rep: &WeilRep) -> Result<TorusDecomposition> {
    let t = rep.tower();
    let d = rep.level();
    if rep.half_dim() != 1 || d.is_multiple_of(2) {
        return Err(Error::ConfigInvalid("the torus decomposition needs n = 1 and odd level".into()));
    }
    let model = TorusModel::new(t)?;
    let els = model.elements(t, d)?;
    let order = els.len();
    let id = Mat::identity(t, 2);
    let powers_of = |g: &Mat| {
        let mut out = vec![id.clone()];
        let mut x = g.clone();
        while x != id {
            out.push(x.clone());
            x = x.mul(t, g);
        }
        out
    };
    let (generator, powers) = els
        .iter()
        .map(|g| (g.clone(), powers_of(g)))
        .find(|(_, p)| p.len() == order)
        .ok_or(Error::FactorizationFailed)?;
    let traces = powers
        .iter()
        .map(|g| {
            rep.rho(g)?
                .trace()
                .as_rational()
                .ok_or_else(|| Error::ConfigInvalid("torus trace is not rational".into()))
        })
        .collect::<Result<Vec<Rat>>>()?;
    let n = order as u64;
    let mut multiplicities = vec![Rat::zero(); order];
    for k in 0..order {
        let e = (k as u64).gcd(&n);
        let r = n / e;
        let mut s = Rat::zero();
        for (j, a) in traces.iter().enumerate() {
            s += a * Rat::from_integer(ramanujan_sum(r, j as u64));
        }
        multiplicities[k] = s / Rat::from_integer((n * euler_phi(r)) as i64);
    }
    Ok(TorusDecomposition { order, generator, traces, multiplicities })
}

// ---- the torus times Heisenberg group ----

/// `Γ ⋉ T(F')H(F')` for `n = 1`, with `F' = F_{q^m}` the top of the tower, and the virtual
/// character
/// `ν' = ± (Ind_{Γ⋉H}^{Γ⋉TH} ρ̃'|_{Γ⋉H} - Ind_{Γ⋉TZ}^{Γ⋉TH} ω'ψ')`,
/// with sign `+` for odd `m` and `-` for even `m`. `ω'ψ'` is trivial on `Γ`.
pub struct TorusHeisenberg {
    rep: Arc<WeilRep>,
    model: TorusModel,
    torus: Vec<Mat>,
    vecs: Vec<Vec<FieldElem>>,
    m: usize,
}

/// Outcome of comparing `ν'` with `η^{m+1} ρ̃'` on `Γ ⋉ T(F')H(F')`.
#[derive(Clone, Debug)]
pub struct TorusSuiteReport {
    pub m: usize,
    /// `(point, ν', η^{m+1} ρ̃')` at every point `(σ^i, (s, (w, 0)))`; the centre acts by
    /// `ψ'` on both sides.
    pub cases: Vec<(String, CycNum, CycNum)>,
    /// `⟨ν', ν'⟩`.
    pub norm: CycNum,
    /// `tr ν'(σ)` (equal to `tr ν'(1)` when `m = 1`).
    pub trace_at_sigma: CycNum,
}

impl TorusSuiteReport {
    pub fn mismatches(&self) -> Vec<&str> {
        self.cases.iter().filter(|(_, a, b)| a != b).map(|(k, _, _)| k.as_str()).collect()
    }

    pub fn is_ok(&self) -> bool {
        self.mismatches().is_empty() && self.norm == CycNum::one(self.norm.p())
    }
}

impl TorusHeisenberg {
    pub fn new(tower: Arc<Tower>) -> Result<TorusHeisenberg> {
        let m = tower.rel_degree();
        let model = TorusModel::new(&tower)?;
        let torus = model.elements(&tower, m)?;
        let vecs = vectors(tower.elements(m)?, 2);
        let rep = Arc::new(WeilRep::new(tower, 1, m)?);
        Ok(TorusHeisenberg { rep, model, torus, vecs, m })
    }

    pub fn tower(&self) -> &Tower {
        self.rep.tower()
    }

    pub fn rep(&self) -> &WeilRep {
        &self.rep
    }

    pub fn torus(&self) -> &[Mat] {
        &self.torus
    }

    pub fn element(&self, i: usize, s: &Mat, v: Vec<FieldElem>, z: FieldElem) -> TwistedElem<SpHElem> {
        TwistedElem { i, g: SpHElem { s: s.clone(), h: HeisElem { v, t: z } } }
    }

    /// `η(σ^i)^{m+1}`: `η` is the order-2 character of `Γ`, used only for even `m`.
    pub fn eta_sign(&self, i: usize) -> i64 {
        if self.m.is_multiple_of(2) && i % 2 == 1 {
            -1
        } else {
            1
        }
    }

    fn sign(&self) -> i64 {
        if self.m.is_multiple_of(2) {
            -1
        } else {
            1
        }
    }

    /// `ω'ψ'` on `Γ ⋉ T(F')Z(F')`, `None` off it.
    pub fn omega_psi(&self, y: &TwistedElem<SpHElem>) -> Result<Option<CycNum>> {
        let t = self.tower();
        if !y.g.h.is_central() || !self.model.contains(t, &y.g.s) {
            return Ok(None);
        }
        let w = self.model.omega_prime(t, &y.g.s, self.m);
        Ok(Some(t.psi(&y.g.h.t, self.m)?.scale(Rat::from_integer(w as i64))))
    }

    /// `ρ̃'` on `Γ ⋉ H(F')`, `None` off it.
    pub fn rho_on_heis(&self, y: &TwistedElem<SpHElem>) -> Result<Option<CycNum>> {
        if !y.g.s.is_identity(self.tower()) {
            return Ok(None);
        }
        Ok(Some(self.rep.extended_trace(y.i, &y.g)?))
    }

    fn torus_reps(&self) -> Vec<TwistedElem<SpHElem>> {
        let t = self.tower();
        self.torus.iter().map(|s| TwistedElem { i: 0, g: SpHElem::from_sp(t, s.clone()) }).collect()
    }

    /// `ν'(x)` by the induced-character formula over coset representatives.
    pub fn nu(&self, x: &TwistedElem<SpHElem>) -> Result<CycNum> {
        let t = self.tower();
        let a = induced_value(t, &self.torus_reps(), |y| self.rho_on_heis(y), x)?;
        let reps = heisenberg_coset_reps(t, 1, self.m)?;
        let b = induced_value(t, &reps, |y| self.omega_psi(y), x)?;
        Ok((&a - &b).scale(Rat::from_integer(self.sign())))
    }

    /// `η^{m+1}(x) tr ρ̃'(x)`.
    pub fn expected(&self, x: &TwistedElem<SpHElem>) -> Result<CycNum> {
        Ok(self.rep.extended_trace(x.i, &x.g)?.scale(Rat::from_integer(self.eta_sign(x.i))))
    }

    /// `ν'` on the fibre `{(σ^i, (s, (w, 0))) : w ∈ V(F')}`, indexed like `V(F')`.
    ///
    /// The first induced term is gathered over the torus elements `r` with
    /// `r⁻¹ s σ^i(r) = 1`. The second is scattered: for each `v`, conjugating
    /// `(σ^i, (s, 0))` by `(v, 0)` lands on a point `(σ^i, (s, (w, c)))` of the fibre times
    /// a central element, which contributes `ω'(s) ψ'(-c)` at `w`.
    pub fn fibre(&self, i: usize, s: &Mat) -> Result<Vec<CycNum>> {
        let t = self.tower();
        let p = t.p();
        let index: HashMap<&Vec<FieldElem>, usize> = self.vecs.iter().enumerate().map(|(k, v)| (v, k)).collect();
        let mut a = vec![CycNum::zero(p); self.vecs.len()];
        let mut b = vec![CycNum::zero(p); self.vecs.len()];
        for r in &self.torus {
            if !r.inv(t)?.mul(t, s).mul(t, &r.frob(t, i as i64)).is_identity(t) {
                continue;
            }
            let rr = TwistedElem { i: 0, g: SpHElem::from_sp(t, r.clone()) };
            let rinv = rr.inverse(t);
            for (k, w) in self.vecs.iter().enumerate() {
                let x = self.element(i, s, w.clone(), t.zero());
                let y = rinv.op(t, &x).op(t, &rr);
                a[k] += &self.rho_on_heis(&y)?.ok_or(Error::FactorizationFailed)?;
            }
        }
        let x0 = self.element(i, s, vec![t.zero(), t.zero()], t.zero());
        let Some(base) = self.omega_psi(&TwistedElem { i, g: SpHElem::from_sp(t, s.clone()) })? else {
            return Err(Error::SupportMismatch("fibre element is not in the torus".into()));
        };
        for v in &self.vecs {
            let r = heis_translation(t, v.clone());
            let c = r.op(t, &x0).op(t, &r.inverse(t));
            let k = index[&c.g.h.v];
            b[k] += &base.mul_root(-(t.psi_exponent(&c.g.h.t, self.m) as i64));
        }
        let sign = Rat::from_integer(self.sign());
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).scale(sign)).collect())
    }

    /// Compares `ν'` with `η^{m+1} ρ̃'` at every point `(σ^i, (s, (w, 0)))` and sums
    /// `|ν'|²` exactly; points differing by a central `(0, z)` have values differing by the
    /// unit `ψ'(z)`, so the sum over `z` is `|F'|` times the sum at `z = 0`.
    pub fn suite(&self) -> Result<TorusSuiteReport> {
        let t = self.tower();
        let p = t.p();
        let jobs: Vec<(usize, &Mat)> = (0..self.m).flat_map(|i| self.torus.iter().map(move |s| (i, s))).collect();
        let per_fibre = jobs
            .par_iter()
            .map(|&(i, s)| -> Result<(CycNum, Vec<(String, CycNum, CycNum)>, Option<CycNum>)> {
                let vals = self.fibre(i, s)?;
                let mut sq = CycNum::zero(p);
                let mut cases = Vec::new();
                let mut at_sigma = None;
                for (w, nu) in self.vecs.iter().zip(&vals) {
                    let x = self.element(i, s, w.clone(), t.zero());
                    let e = self.expected(&x)?;
                    sq += &(nu * &nu.conj());
                    if i == 1 % self.m && s.is_identity(t) && w.iter().all(FieldElem::is_zero) {
                        at_sigma = Some(nu.clone());
                    }
                    cases.push((x.key_text(), nu.clone(), e));
                }
                Ok((sq, cases, at_sigma))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut total = CycNum::zero(p);
        let mut cases = Vec::new();
        let mut trace_at_sigma = CycNum::zero(p);
        for (sq, c, s) in per_fibre {
            total += &sq;
            cases.extend(c);
            if let Some(s) = s {
                trace_at_sigma = s;
            }
        }
        let count = (self.m * self.torus.len() * self.vecs.len()) as i64;
        Ok(TorusSuiteReport {
            m: self.m,
            cases,
            norm: total.scale(Rat::new(1, count)),
            trace_at_sigma,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouplib::{conjugacy_classes, enumerate_group, twisted_classes, GroupSpec, DEFAULT_ENUMERATION_CAP};

    fn int(p: u32, k: i64) -> CycNum {
        CycNum::from_int(p, k)
    }

    fn sl2_classes(t: &Tower, d: usize) -> Arc<ClassPartition<Mat>> {
        let g = enumerate_group(t, GroupSpec::sp(1), d, DEFAULT_ENUMERATION_CAP).unwrap();
        Arc::new(conjugacy_classes(t, &g))
    }

    #[test]
    fn trivial_character_has_norm_one() {
        let t = Tower::build(3, 1, 1).unwrap();
        let part = sl2_classes(&t, 1);
        let one = ClassFunction::constant(part, int(3, 1));
        assert_eq!(inner_product(&one, &one).unwrap(), int(3, 1));
    }

    #[test]
    fn weil_character_of_sl2_f3_has_norm_two() {
        let t = Arc::new(Tower::build(3, 1, 1).unwrap());
        let rep = WeilRep::new(t.clone(), 1, 1).unwrap();
        let part = sl2_classes(&t, 1);
        let chi = ClassFunction::from_fn(part, |g| Ok(rep.rho(g)?.trace())).unwrap();
        assert_eq!(inner_product(&chi, &chi).unwrap(), int(3, 2));
    }

    #[test]
    fn mismatched_supports_are_rejected() {
        let t = Tower::build(3, 1, 2).unwrap();
        let a = ClassFunction::constant(sl2_classes(&t, 1), int(3, 1));
        let b = ClassFunction::constant(sl2_classes(&t, 2), int(3, 1));
        assert!(matches!(inner_product(&a, &b), Err(Error::SupportMismatch(_))));
    }

    #[test]
    fn regular_character_of_two_element_group() {
        let t = Tower::build(3, 1, 1).unwrap();
        let id = Mat::identity(&t, 2);
        let minus = id.neg(&t);
        let big = vec![id.clone(), minus.clone()];
        let reps = coset_representatives(&t, &big, std::slice::from_ref(&id));
        let chi = |y: &Mat| Ok(y.is_identity(&t).then(|| int(3, 1)));
        assert_eq!(induced_value(&t, &reps, chi, &id).unwrap(), int(3, 2));
        assert_eq!(induced_value(&t, &reps, chi, &minus).unwrap(), int(3, 0));
    }

    #[test]
    fn induction_is_transitive() {
        let t = Tower::build(3, 1, 1).unwrap();
        let g = enumerate_group(&t, GroupSpec::sp(1), 1, DEFAULT_ENUMERATION_CAP).unwrap();
        let upper = |x: &Mat| x.get(1, 0).is_zero();
        let unip = |x: &Mat| upper(x) && *x.get(0, 0) == t.one();
        let b: Vec<Mat> = g.iter().filter(|x| upper(x)).cloned().collect();
        let u: Vec<Mat> = g.iter().filter(|x| unip(x)).cloned().collect();
        assert_eq!((b.len(), u.len()), (6, 3));
        let chi = |y: &Mat| -> Result<Option<CycNum>> {
            if unip(y) {
                Ok(Some(t.psi(y.get(0, 1), 1)?))
            } else {
                Ok(None)
            }
        };
        let r_ub = coset_representatives(&t, &b, &u);
        let r_bg = coset_representatives(&t, &g, &b);
        let r_ug = coset_representatives(&t, &g, &u);
        let mid = |y: &Mat| -> Result<Option<CycNum>> {
            if upper(y) {
                Ok(Some(induced_value(&t, &r_ub, chi, y)?))
            } else {
                Ok(None)
            }
        };
        for x in &g {
            let two_step = induced_value(&t, &r_bg, mid, x).unwrap();
            let direct = induced_value(&t, &r_ug, chi, x).unwrap();
            assert_eq!(two_step, direct, "at {x}");
        }
    }

    #[test]
    fn induced_trivial_at_sigma_counts_rational_vectors() {
        let t = Tower::build(3, 1, 2).unwrap();
        let reps = heisenberg_coset_reps(&t, 1, 2).unwrap();
        let sigma = TwistedElem { i: 1, g: SpHElem::from_sp(&t, Mat::identity(&t, 2)) };
        assert_eq!(support_induced_trivial(&t, &reps, &sigma).unwrap(), int(3, 9));
    }

    #[test]
    fn isometry_on_indicator_basis() {
        let t = Arc::new(Tower::build(3, 1, 2).unwrap());
        let base = sl2_classes(&t, 1);
        let g9 = enumerate_group(&t, GroupSpec::sp(1), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        let coset = Arc::new(twisted_classes(&t, &g9, 1));
        let nm = NormMap::new(t.clone(), 1).unwrap();
        let basis: Vec<_> = (0..base.len()).map(|k| ClassFunction::indicator(base.clone(), 3, k)).collect();
        let lifted: Vec<_> = basis.iter().map(|c| lift_class_function(&nm, c, coset.clone()).unwrap()).collect();
        for a in 0..basis.len() {
            for b in 0..basis.len() {
                assert_eq!(
                    inner_product(&basis[a], &basis[b]).unwrap(),
                    inner_product(&lifted[a], &lifted[b]).unwrap()
                );
            }
        }
    }

    #[test]
    fn lift_of_constant_is_constant() {
        let t = Arc::new(Tower::build(3, 1, 2).unwrap());
        let base = sl2_classes(&t, 1);
        let g9 = enumerate_group(&t, GroupSpec::sp(1), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        let coset = Arc::new(twisted_classes(&t, &g9, 1));
        let nm = NormMap::new(t.clone(), 1).unwrap();
        let one = ClassFunction::constant(base, int(3, 1));
        let lifted = lift_class_function(&nm, &one, coset).unwrap();
        assert!(lifted.values().iter().all(|v| *v == int(3, 1)));
    }

    #[test]
    fn frobenius_orbits_on_sl2_f9_classes() {
        let t = Tower::build(3, 1, 2).unwrap();
        let part = sl2_classes(&t, 2);
        assert_eq!(part.len(), 13);
        assert_eq!(frobenius_orbit_count(&t, &part).unwrap(), 10);
    }

    #[test]
    fn torus_traces_at_q3() {
        let t = Arc::new(Tower::build(3, 1, 1).unwrap());
        let rep = WeilRep::new(t.clone(), 1, 1).unwrap();
        let dec = weil_torus_restriction(&rep).unwrap();
        assert_eq!(dec.order, 4);
        assert_eq!(dec.traces[1], Rat::from_integer(1));
        assert_eq!(dec.traces[2], Rat::from_integer(-1));
        for (k, m) in dec.multiplicities.iter().enumerate() {
            let want = if k == dec.omega_index() { 0 } else { 1 };
            assert_eq!(*m, Rat::from_integer(want), "character {k}");
        }
    }

    #[test]
    fn torus_decomposition_at_q5() {
        let t = Arc::new(Tower::build(5, 1, 1).unwrap());
        let rep = WeilRep::new(t.clone(), 1, 1).unwrap();
        let dec = weil_torus_restriction(&rep).unwrap();
        eprintln!("traces {:?} mult {:?} gen {}", dec.traces, dec.multiplicities, dec.generator);
        assert_eq!(dec.order, 6);
        for (k, m) in dec.multiplicities.iter().enumerate() {
            let want = if k == dec.omega_index() { 0 } else { 1 };
            assert_eq!(*m, Rat::from_integer(want), "character {k}");
        }
    }

    #[test]
    fn virtual_torus_character_at_base_level() {
        let t = Arc::new(Tower::build(3, 1, 1).unwrap());
        let th = TorusHeisenberg::new(t).unwrap();
        let r = th.suite().unwrap();
        assert!(r.mismatches().is_empty(), "{:?}", r.mismatches());
        assert_eq!(r.norm, int(3, 1));
        assert_eq!(r.trace_at_sigma, int(3, 3));
    }

    #[test]
    fn fibre_scatter_matches_gather() {
        let t = Arc::new(Tower::build(3, 1, 2).unwrap());
        let th = TorusHeisenberg::new(t.clone()).unwrap();
        for (k, s) in th.torus().iter().enumerate().take(3) {
            for i in 0..2 {
                let fib = th.fibre(i, s).unwrap();
                for (j, w) in vectors(t.elements(2).unwrap(), 2).into_iter().enumerate().step_by(7 + k) {
                    let x = th.element(i, s, w, t.zero());
                    assert_eq!(fib[j], th.nu(&x).unwrap());
                }
            }
        }
    }

    #[test]
    fn virtual_torus_character_even_degree() {
        let t = Arc::new(Tower::build(3, 1, 2).unwrap());
        let r = TorusHeisenberg::new(t).unwrap().suite().unwrap();
        assert!(r.mismatches().is_empty());
        assert_eq!(r.norm, int(3, 1));
        assert_eq!(r.trace_at_sigma, int(3, -3));
    }

    #[test]
    fn virtual_torus_character_odd_degree() {
        let t = Arc::new(Tower::build(3, 1, 3).unwrap());
        let r = TorusHeisenberg::new(t).unwrap().suite().unwrap();
        assert!(r.mismatches().is_empty());
        assert_eq!(r.norm, int(3, 1));
        assert_eq!(r.trace_at_sigma, int(3, 3));
    }
}
