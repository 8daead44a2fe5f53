//! Batch verification driver: each check compares two independently computed exact
//! values per case and collects the outcomes in a [`Report`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characters::{
    heisenberg_coset_reps, induced_value, inner_product, lift_class_function, siegel_coset_reps,
    siegel_inducing_value, support_induced_trivial, weil_torus_restriction, ClassFunction, TorusHeisenberg,
};
use crate::cyclotomic::{gauss_sum, CycNum};
use crate::error::{Error, Result};
use crate::fieldtower::Tower;
use crate::grouplib::{
    conjugacy_classes, enumerate_group, enumerate_heis, levi, random_element, random_heis, siegel_unipotent,
    twisted_classes, vectors, GroupElem, GroupSpec, HeisElem, Mat, SpHElem, TwistedElem, DEFAULT_ENUMERATION_CAP,
};
use crate::normmap::{verify_bijection, ClassCoverage, NormMap, DEFAULT_AMBIENT_CAP};
use crate::schrodinger::{extended_gsp_trace, gsp_character, WeilRep};

/// Largest group whose classes are computed by brute-force orbits.
pub const CLASS_ENUMERATION_CAP: usize = 5_000;

pub const CHECKS: [&str; 9] =
    ["star", "gsp", "support", "orthogonal", "parabolic", "sl2-torus", "homomorphism", "gyoja-bijection", "gauss"];

/// Either every element of the group or a seeded sample of the given size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Sample {
    All,
    Count(usize),
}

impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sample::All => write!(f, "all"),
            Sample::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Sample {
    type Err = Error;
    fn from_str(s: &str) -> Result<Sample> {
        if s == "all" {
            return Ok(Sample::All);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Sample::Count(n)),
            _ => Err(Error::ConfigInvalid(format!("sample must be 'all' or a positive integer, got {s:?}"))),
        }
    }
}

impl From<Sample> for String {
    fn from(s: Sample) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Sample {
    type Error = Error;
    fn try_from(s: String) -> Result<Sample> {
        s.parse()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub p: u32,
    pub base_degree: usize,
    pub n: usize,
    pub m: usize,
    /// `(i, t)` pairs with `t i ≡ gcd(i, m) (mod m)`.
    pub pairs: Vec<(usize, usize)>,
    /// `ψ` is replaced by `x ↦ ψ(a x)` for this integer `a`, read in `F_q`.
    pub psi_scale: i64,
    pub sample: Sample,
    pub seed: u64,
    pub ambient_cap: usize,
    /// Give every other sampled element of `star` a random Heisenberg component.
    #[serde(default)]
    pub heisenberg: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            p: 3,
            base_degree: 1,
            n: 1,
            m: 2,
            pairs: vec![(1, 1)],
            psi_scale: 1,
            sample: Sample::All,
            seed: 42,
            ambient_cap: DEFAULT_AMBIENT_CAP,
            heisenberg: false,
            cache_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::ConfigInvalid(s));
        if self.n == 0 || self.m == 0 || self.base_degree == 0 {
            return bad("n, m and base degree must be positive".into());
        }
        for &(i, t) in &self.pairs {
            if i >= self.m {
                return bad(format!("pair {i}:{t} needs i < m = {}", self.m));
            }
            if i > 0 && (t * i) % self.m != i.gcd(&self.m) % self.m {
                return bad(format!("pair {i}:{t} does not satisfy t·i ≡ gcd(i, m) (mod m)"));
            }
        }
        Ok(())
    }

    fn tower(&self) -> Result<Arc<Tower>> {
        self.tower_with(self.m)
    }

    fn tower_with(&self, m: usize) -> Result<Arc<Tower>> {
        let t = Tower::build(self.p, self.base_degree, m)?;
        let a = t.from_int(self.psi_scale);
        Ok(Arc::new(t.with_psi_scale(a)?))
    }

    fn rep(&self, tower: &Arc<Tower>, n: usize, d: usize) -> Result<WeilRep> {
        let r = WeilRep::new(tower.clone(), n, d)?;
        match &self.cache_dir {
            Some(dir) => r.with_cache_dir(dir.clone()),
            None => Ok(r),
        }
    }

    fn norm_map(&self, tower: &Arc<Tower>, i: usize, t: usize) -> Result<NormMap> {
        Ok(NormMap::new(tower.clone(), i)?.with_t(t)?.with_ambient_cap(self.ambient_cap))
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Case {
    pub input: String,
    pub lhs: String,
    pub rhs: String,
    pub equal: bool,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub config: RunConfig,
    pub cases: Vec<Case>,
    pub summary: Summary,
    pub seconds: f64,
}

impl Report {
    pub fn is_success(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("input\tlhs\trhs\tequal\n");
        for c in &self.cases {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", c.input, c.lhs, c.rhs, c.equal));
        }
        s.push_str(&format!("# {}: pass={} fail={} seconds={:.3}\n", self.check, self.summary.pass, self.summary.fail, self.seconds));
        s
    }
}

fn text(r: &Result<CycNum>) -> String {
    match r {
        Ok(v) => v.to_text(),
        Err(e) => format!("error: {e}"),
    }
}

fn case(input: String, lhs: Result<CycNum>, rhs: Result<CycNum>) -> Case {
    let equal = matches!((&lhs, &rhs), (Ok(a), Ok(b)) if a == b);
    Case { input, lhs: text(&lhs), rhs: text(&rhs), equal }
}

fn flag(input: String, holds: bool) -> Case {
    Case { input, lhs: holds.to_string(), rhs: "true".into(), equal: holds }
}

fn failure(input: String, e: Error) -> Case {
    Case { input, lhs: format!("error: {e}"), rhs: "-".into(), equal: false }
}

fn int(p: u32, k: i64) -> CycNum {
    CycNum::from_int(p, k)
}

fn random_sym<R: Rng>(t: &Tower, n: usize, d: usize, rng: &mut R) -> Mat {
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

fn all_symmetric(t: &Tower, n: usize, d: usize) -> Result<Vec<Mat>> {
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    Ok(vectors(t.elements(d)?, slots.len())
        .into_iter()
        .map(|v| {
            let mut b = Mat::zero(t, n);
            for (x, &(i, j)) in v.into_iter().zip(&slots) {
                b.set(i, j, x.clone());
                b.set(j, i, x);
            }
            b
        })
        .collect())
}

/// The whole group, or the identity followed by seeded random elements.
fn group_elements(cfg: &RunConfig, t: &Tower, spec: GroupSpec, d: usize, salt: u64) -> Result<Vec<Mat>> {
    match cfg.sample {
        Sample::All => enumerate_group(t, spec, d, DEFAULT_ENUMERATION_CAP),
        Sample::Count(k) => {
            let mut rng = cfg.rng(salt);
            let mut out = vec![Mat::identity(t, spec.matrix_size())];
            for _ in 1..k {
                out.push(random_element(t, spec, d, &mut rng)?);
            }
            Ok(out)
        }
    }
}

fn sp_heis_elements(cfg: &RunConfig, t: &Tower, n: usize, d: usize, salt: u64) -> Result<Vec<SpHElem>> {
    let base = group_elements(cfg, t, GroupSpec::sp(n), d, salt)?;
    let mut rng = cfg.rng(salt ^ 0xA5A5);
    Ok(base
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            let mut x = SpHElem::from_sp(t, s);
            if cfg.heisenberg && cfg.sample != Sample::All && k % 2 == 1 {
                x.h = random_heis(t, n, d, &mut rng);
            }
            x
        })
        .collect())
}

/// `tr ρ̃'(σ^i, g)` against `tr ρ_d(N_{i,t}(σ^i, g))`.
fn check_star(cfg: &RunConfig) -> Result<Vec<Case>> {
    let tower = cfg.tower()?;
    let top = cfg.rep(&tower, cfg.n, cfg.m)?;
    let mut cases = Vec::new();
    for (k, &(i, t)) in cfg.pairs.iter().enumerate() {
        let nm = cfg.norm_map(&tower, i, t)?;
        let low = cfg.rep(&tower, cfg.n, nm.config().d)?;
        let els = match sp_heis_elements(cfg, &tower, cfg.n, cfg.m, k as u64) {
            Ok(e) => e,
            Err(e) => {
                cases.push(failure(format!("i={i} t={t}"), e));
                continue;
            }
        };
        cases.par_extend(els.par_iter().map(|x| {
            let lhs = top.extended_trace(i, x);
            let rhs = nm.gyoja_norm(x).and_then(|h| low.character(&h));
            case(format!("i={i} t={t} g={}", x.key_text()), lhs, rhs)
        }));
    }
    Ok(cases)
}

/// Induced extended character of `Γ ⋉ GSp(F')` at `(σ^i, g)` against the induced
/// character of `GSp(F_{q^d})` at the norm.
fn check_gsp(cfg: &RunConfig) -> Result<Vec<Case>> {
    let tower = cfg.tower()?;
    let top = cfg.rep(&tower, cfg.n, cfg.m)?;
    let mut cases = Vec::new();
    for (k, &(i, t)) in cfg.pairs.iter().enumerate() {
        let nm = cfg.norm_map(&tower, i, t)?;
        let low = cfg.rep(&tower, cfg.n, nm.config().d)?;
        let els = match group_elements(cfg, &tower, GroupSpec::gsp(cfg.n), cfg.m, 100 + k as u64) {
            Ok(e) => e,
            Err(e) => {
                cases.push(failure(format!("i={i} t={t}"), e));
                continue;
            }
        };
        cases.par_extend(els.par_iter().map(|g| {
            let lhs = extended_gsp_trace(&top, i, g);
            let rhs = nm.gyoja_norm(g).and_then(|h| gsp_character(&low, &h));
            case(format!("i={i} t={t} g={}", g.to_text()), lhs, rhs)
        }));
    }
    Ok(cases)
}

/// `|tr ρ̃'|²` against the character induced from the trivial character of `Γ ⋉ Sp·Z`.
fn check_support(cfg: &RunConfig) -> Result<Vec<Case>> {
    let tower = cfg.tower()?;
    let t = &*tower;
    let top = cfg.rep(&tower, cfg.n, cfg.m)?;
    let reps = heisenberg_coset_reps(t, cfg.n, cfg.m)?;
    let mut cases = Vec::new();
    for (k, &(i, _)) in cfg.pairs.iter().enumerate() {
        let els: Vec<SpHElem> = match cfg.sample {
            Sample::All => match crate::grouplib::enumerate_sp_heis(t, cfg.n, cfg.m, DEFAULT_ENUMERATION_CAP) {
                Ok(e) => e,
                Err(e) => {
                    cases.push(failure(format!("i={i}"), e));
                    continue;
                }
            },
            Sample::Count(c) => {
                let mut rng = cfg.rng(200 + k as u64);
                (0..c)
                    .map(|_| {
                        let s = random_element(t, GroupSpec::sp(cfg.n), cfg.m, &mut rng)?;
                        Ok(SpHElem { s, h: random_heis(t, cfg.n, cfg.m, &mut rng) })
                    })
                    .collect::<Result<_>>()?
            }
        };
        cases.par_extend(els.into_par_iter().map(|g| {
            let x = TwistedElem { i, g };
            let lhs = top.extended_trace(i, &x.g).map(|v| &v * &v.conj());
            let rhs = support_induced_trivial(t, &reps, &x);
            case(format!("i={i} x={}", x.g.key_text()), lhs, rhs)
        }));
    }
    Ok(cases)
}

/// Splits `V = V₁ ⊕ V₂` with `dim V₁ = 2` and compares the extended trace of the sum with
/// the product of the two extended traces.
fn check_orthogonal(cfg: &RunConfig) -> Result<Vec<Case>> {
    if cfg.n < 2 {
        return Err(Error::ConfigInvalid("orthogonal needs n >= 2".into()));
    }
    let tower = cfg.tower()?;
    let t = &*tower;
    let (n1, n2) = (1, cfg.n - 1);
    let whole = cfg.rep(&tower, cfg.n, cfg.m)?;
    let r1 = cfg.rep(&tower, n1, cfg.m)?;
    let r2 = cfg.rep(&tower, n2, cfg.m)?;
    let mut cases = Vec::new();
    for (k, &(i, _)) in cfg.pairs.iter().enumerate() {
        let mut rng = cfg.rng(300 + k as u64);
        let count = match cfg.sample {
            Sample::Count(c) => c,
            Sample::All => return Err(Error::ConfigInvalid("orthogonal runs on samples only".into())),
        };
        let mut inputs = Vec::with_capacity(count);
        for _ in 0..count {
            let g1 = SpHElem {
                s: random_element(t, GroupSpec::sp(n1), cfg.m, &mut rng)?,
                h: random_heis(t, n1, cfg.m, &mut rng),
            };
            let g2 = SpHElem {
                s: random_element(t, GroupSpec::sp(n2), cfg.m, &mut rng)?,
                h: random_heis(t, n2, cfg.m, &mut rng),
            };
            inputs.push((g1, g2));
        }
        cases.par_extend(inputs.par_iter().map(|(g1, g2)| {
            let s = Mat::symplectic_direct_sum(t, &g1.s, &g2.s);
            let mut v = vec![g1.h.v[0].clone()];
            v.extend(g2.h.v[..n2].iter().cloned());
            v.push(g1.h.v[1].clone());
            v.extend(g2.h.v[n2..].iter().cloned());
            let g = SpHElem { s, h: HeisElem { v, t: t.add(&g1.h.t, &g2.h.t) } };
            let lhs = whole.extended_trace(i, &g);
            let rhs = r1.extended_trace(i, g1).and_then(|a| Ok(&a * &r2.extended_trace(i, g2)?));
            case(format!("i={i} g1={} g2={}", g1.key_text(), g2.key_text()), lhs, rhs)
        }));
    }
    Ok(cases)
}

/// Restriction of `tr ρ̃'` to `Γ ⋉ P·H` against the character induced from `ε'(det a) ψ'(z)`
/// on `Γ ⋉ P·H_⊥`, `P` the Siegel parabolic. Covers every coset `σ^i`.
fn check_parabolic(cfg: &RunConfig) -> Result<Vec<Case>> {
    let tower = cfg.tower()?;
    let t = &*tower;
    let (n, m) = (cfg.n, cfg.m);
    let top = cfg.rep(&tower, n, m)?;
    let reps = siegel_coset_reps(t, n, m)?;
    let els: Vec<TwistedElem<SpHElem>> = match cfg.sample {
        Sample::All => {
            let gl = enumerate_group(t, GroupSpec::gl(n), m, DEFAULT_ENUMERATION_CAP)?;
            let sym = all_symmetric(t, n, m)?;
            let heis = enumerate_heis(t, n, m)?;
            let size = m * gl.len() * sym.len() * heis.len();
            if size as u128 > DEFAULT_ENUMERATION_CAP {
                return Ok(vec![failure(
                    "parabolic".into(),
                    Error::GroupTooLarge { order: size as u128, cap: DEFAULT_ENUMERATION_CAP },
                )]);
            }
            let mut out = Vec::with_capacity(size);
            for i in 0..m {
                for a in &gl {
                    for b in &sym {
                        let s = levi(t, a)?.mul(t, &siegel_unipotent(t, b));
                        for h in &heis {
                            out.push(TwistedElem { i, g: SpHElem { s: s.clone(), h: h.clone() } });
                        }
                    }
                }
            }
            out
        }
        Sample::Count(c) => {
            let mut rng = cfg.rng(400);
            let mut out = Vec::with_capacity(c);
            for _ in 0..c {
                let a = random_element(t, GroupSpec::gl(n), m, &mut rng)?;
                let s = levi(t, &a)?.mul(t, &siegel_unipotent(t, &random_sym(t, n, m, &mut rng)));
                let h = random_heis(t, n, m, &mut rng);
                out.push(TwistedElem { i: rng.gen_range(0..m), g: SpHElem { s, h } });
            }
            out
        }
    };
    Ok(els
        .par_iter()
        .map(|x| {
            let lhs = top.extended_trace(x.i, &x.g);
            let rhs = induced_value(t, &reps, |y| siegel_inducing_value(t, y, m), x);
            case(format!("i={} x={}", x.i, x.g.key_text()), lhs, rhs)
        })
        .collect())
}

/// Torus decomposition of `ρ` over `F_q`, the virtual-character identity on `T H` over
/// `F_q`, and over `F_{q^m}` its extension to `Γ ⋉ T H` with the `η` twist for even `m`.
fn check_sl2_torus(cfg: &RunConfig) -> Result<Vec<Case>> {
    let mut cases = Vec::new();
    let base = cfg.tower_with(1)?;
    let p = base.p();
    let q = base.q() as i64;
    let rep = cfg.rep(&base, 1, 1)?;
    let dec = weil_torus_restriction(&rep)?;
    for (k, mult) in dec.multiplicities.iter().enumerate() {
        let want = if k == dec.omega_index() { 0 } else { 1 };
        cases.push(case(
            format!("torus character {k} of {}", dec.order),
            Ok(CycNum::from_rat(p, *mult)),
            Ok(int(p, want)),
        ));
    }
    let mut levels = vec![1];
    if cfg.m > 1 {
        levels.push(cfg.m);
    }
    for m in levels {
        let tower = if m == 1 { base.clone() } else { cfg.tower_with(m)? };
        let report = TorusHeisenberg::new(tower)?.suite()?;
        let sigma_value = if m % 2 == 0 { -q } else { q };
        cases.extend(
            report
                .cases
                .into_iter()
                .map(|(k, a, b)| Case { input: format!("m={m} {k}"), lhs: a.to_text(), rhs: b.to_text(), equal: a == b }),
        );
        cases.push(case(format!("m={m} <nu, nu>"), Ok(report.norm), Ok(int(p, 1))));
        cases.push(case(format!("m={m} tr nu(sigma)"), Ok(report.trace_at_sigma), Ok(int(p, sigma_value))));
    }
    Ok(cases)
}

/// `ρ(ab) = ρ(a)ρ(b)`, unitarity and `I_σ ρ(g) I_σ⁻¹ = ρ(σ(g))` on random pairs.
fn check_homomorphism(cfg: &RunConfig) -> Result<Vec<Case>> {
    let tower = cfg.tower()?;
    let t = &*tower;
    let rep = cfg.rep(&tower, cfg.n, cfg.m)?;
    let count = match cfg.sample {
        Sample::Count(c) => c,
        Sample::All => 200,
    };
    let mut rng = cfg.rng(500);
    let spec = GroupSpec::sp(cfg.n);
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        pairs.push((random_element(t, spec, cfg.m, &mut rng)?, random_element(t, spec, cfg.m, &mut rng)?));
    }
    let gal = rep.op_galois(1);
    let gal_inv = rep.op_galois(-1);
    let per_pair = pairs
        .par_iter()
        .map(|(a, b)| -> Result<Vec<Case>> {
            let ra = rep.rho(a)?;
            let lhs = rep.rho(&a.mul(t, b))?;
            let rb = rep.rho(b)?;
            let rhs = ra.mul(&rb);
            let tag = format!("a={} b={}", a.to_text(), b.to_text());
            let conj = gal.mul(&ra).mul(&gal_inv);
            Ok(vec![
                Case { input: format!("hom {tag}"), lhs: lhs.trace().to_text(), rhs: rhs.trace().to_text(), equal: *lhs == rhs },
                flag(format!("unitary {tag}"), ra.is_unitary()),
                flag(format!("intertwining {tag}"), conj == *rep.rho(&a.frob(t, 1))?),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_pair.into_iter().flatten().collect())
}

/// Class bijection of each norm map, plus the isometry of lifting on the indicator basis
/// of the target classes.
fn check_gyoja_bijection(cfg: &RunConfig) -> Result<Vec<Case>> {
    let tower = cfg.tower()?;
    let t = &*tower;
    let spec = GroupSpec::sp(cfg.n);
    let mut cases = Vec::new();
    for (k, &(i, tt)) in cfg.pairs.iter().enumerate() {
        let tag = format!("i={i} t={tt}");
        let nm = cfg.norm_map(&tower, i, tt)?;
        let d = nm.config().d;
        let source = match enumerate_group(t, spec, cfg.m, CLASS_ENUMERATION_CAP as u128) {
            Ok(s) => s,
            Err(e) => {
                cases.push(failure(tag, e));
                continue;
            }
        };
        let target = enumerate_group(t, spec, d, CLASS_ENUMERATION_CAP as u128)?;
        let coverage = match cfg.sample {
            Sample::All => ClassCoverage::All,
            Sample::Count(c) => ClassCoverage::Sample(c),
        };
        let mut rng = cfg.rng(600 + k as u64);
        let rep = match verify_bijection(&nm, &source, &target, coverage, &mut rng) {
            Ok(r) => r,
            Err(e) => {
                cases.push(failure(tag, e));
                continue;
            }
        };
        cases.push(Case {
            input: format!("{tag} class counts (twisted, target)"),
            lhs: rep.twisted_classes.to_string(),
            rhs: rep.target_classes.to_string(),
            equal: rep.twisted_classes == rep.target_classes,
        });
        cases.push(flag(format!("{tag} well defined"), rep.well_defined));
        cases.push(flag(format!("{tag} injective"), rep.injective));
        cases.push(flag(format!("{tag} surjective"), rep.surjective));
        cases.push(flag(format!("{tag} Frobenius equivariant"), rep.equivariant));
        let base = Arc::new(conjugacy_classes(t, &target));
        let coset = Arc::new(twisted_classes(t, &source, i));
        let basis: Vec<_> = (0..base.len()).map(|c| ClassFunction::indicator(base.clone(), t.p(), c)).collect();
        let lifted = basis.iter().map(|c| lift_class_function(&nm, c, coset.clone())).collect::<Result<Vec<_>>>()?;
        for a in 0..basis.len() {
            for b in 0..basis.len() {
                cases.push(case(
                    format!("{tag} isometry <1_{a}, 1_{b}>"),
                    inner_product(&basis[a], &basis[b]),
                    inner_product(&lifted[a], &lifted[b]),
                ));
            }
        }
    }
    Ok(cases)
}

/// `G_d² = ε_d(-1) q^d` at every level and `-G_d = (-G_1)^d` (Hasse–Davenport).
fn check_gauss(cfg: &RunConfig) -> Result<Vec<Case>> {
    let tower = cfg.tower()?;
    let t = &*tower;
    let p = t.p();
    let g1 = gauss_sum(t, 1)?;
    let mut cases = Vec::new();
    for d in t.levels() {
        let g = gauss_sum(t, d)?;
        let eps = t.quad_char(&t.from_int(-1), d)? as i64;
        let qd = t.level_size(d) as i64;
        cases.push(case(format!("G_{d}^2"), Ok(&g * &g), Ok(int(p, eps * qd))));
        cases.push(case(format!("Hasse-Davenport d={d}"), Ok(-&g), (-&g1).pow(d as i64)));
    }
    Ok(cases)
}

fn run_one(name: &str, cfg: &RunConfig) -> Result<Vec<Case>> {
    match name {
        "star" => check_star(cfg),
        "gsp" => check_gsp(cfg),
        "support" => check_support(cfg),
        "orthogonal" => check_orthogonal(cfg),
        "parabolic" => check_parabolic(cfg),
        "sl2-torus" => check_sl2_torus(cfg),
        "homomorphism" => check_homomorphism(cfg),
        "gyoja-bijection" => check_gyoja_bijection(cfg),
        "gauss" => check_gauss(cfg),
        _ => Err(Error::ConfigInvalid(format!("unknown check {name:?}"))),
    }
}

/// Runs one check, or every check for `"all"`. Configuration errors are returned; errors
/// met while computing a case become failing cases of the report.
pub fn run_check(name: &str, cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let names: Vec<&str> = if name == "all" { CHECKS.to_vec() } else { vec![name] };
    let mut cases = Vec::new();
    for n in &names {
        if !CHECKS.contains(n) {
            return Err(Error::ConfigInvalid(format!("unknown check {n:?}")));
        }
        // in "all" mode, a check that does not apply to this configuration is skipped
        if name == "all" && ((*n == "orthogonal" && cfg.n < 2) || (*n == "sl2-torus" && cfg.n != 1)) {
            continue;
        }
        let prefix = |c: Case| if name == "all" { Case { input: format!("{n}: {}", c.input), ..c } } else { c };
        match run_one(n, cfg) {
            Ok(cs) => cases.extend(cs.into_iter().map(prefix)),
            Err(e @ Error::ConfigInvalid(_)) if name != "all" => return Err(e),
            Err(e) => cases.push(prefix(failure("check".into(), e))),
        }
    }
    let pass = cases.iter().filter(|c| c.equal).count();
    let summary = Summary { pass, fail: cases.len() - pass };
    Ok(Report { check: name.to_string(), config: cfg.clone(), cases, summary, seconds: start.elapsed().as_secs_f64() })
}
