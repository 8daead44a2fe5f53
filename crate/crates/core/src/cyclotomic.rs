//! Exact arithmetic in `Q(ζ_p)`.
//!
//! A [`CycNum`] is stored in the power basis `1, ζ, …, ζ^{p-2}` after eliminating
//! `ζ^{p-1} = -(1 + ζ + … + ζ^{p-2})`, so equality is coefficient-wise.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fieldtower::Tower;

pub type Rat = Ratio<i64>;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CycNum {
    p: u32,
    coeffs: Vec<Rat>,
}

impl CycNum {
    pub fn zero(p: u32) -> CycNum {
        CycNum {
            p,
            coeffs: vec![Rat::zero(); (p - 1) as usize],
        }
    }

    pub fn one(p: u32) -> CycNum {
        CycNum::from_int(p, 1)
    }

    pub fn from_int(p: u32, k: i64) -> CycNum {
        CycNum::from_rat(p, Rat::from_integer(k))
    }

    pub fn from_rat(p: u32, r: Rat) -> CycNum {
        let mut z = CycNum::zero(p);
        z.coeffs[0] = r;
        z
    }

    /// `ζ_p^k`.
    pub fn root_of_unity(p: u32, k: i64) -> CycNum {
        let mut z = CycNum::zero(p);
        z.add_root(k, Rat::one());
        z
    }

    /// Builds from coefficients in the power basis; must have length `p - 1`.
    pub fn from_coeffs(p: u32, coeffs: Vec<Rat>) -> Result<CycNum> {
        if coeffs.len() != (p - 1) as usize {
            return Err(Error::DimensionMismatch(format!("expected {} coefficients", p - 1)));
        }
        Ok(CycNum { p, coeffs })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// The rational value, if this number is rational.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0])
        } else {
            None
        }
    }

    /// `self += c · ζ^k`.
    pub fn add_root(&mut self, k: i64, c: Rat) {
        let k = k.rem_euclid(self.p as i64) as usize;
        if k == (self.p - 1) as usize {
            for x in self.coeffs.iter_mut() {
                *x -= c;
            }
        } else {
            self.coeffs[k] += c;
        }
    }

    pub fn scale(&self, r: Rat) -> CycNum {
        CycNum {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    /// Multiplication by `ζ^k`.
    pub fn mul_root(&self, k: i64) -> CycNum {
        let p = self.p as i64;
        let mut out = CycNum::zero(self.p);
        for (j, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                out.add_root(j as i64 + k.rem_euclid(p), *c);
            }
        }
        out
    }

    /// Image under the Galois automorphism `ζ ↦ ζ^j`.
    pub fn galois(&self, j: i64) -> CycNum {
        let mut out = CycNum::zero(self.p);
        for (k, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                out.add_root(k as i64 * j, *c);
            }
        }
        out
    }

    /// Complex conjugation `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> CycNum {
        self.galois(-1)
    }

    pub fn inv(&self) -> Result<CycNum> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // product of the nontrivial conjugates; self * others is the rational norm
        let mut others = CycNum::one(self.p);
        for j in 2..self.p as i64 {
            others = &others * &self.galois(j);
        }
        let norm = (&others * self).as_rational().expect("norm is rational");
        Ok(others.scale(norm.recip()))
    }

    pub fn pow(&self, e: i64) -> Result<CycNum> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut r = CycNum::one(self.p);
        for _ in 0..e.unsigned_abs() {
            r = &r * &base;
        }
        Ok(r)
    }

    /// Numerical embedding with `ζ_p ↦ exp(2πi/p)`; for display only.
    pub fn to_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            let v = *c.numer() as f64 / *c.denom() as f64;
            let ang = 2.0 * std::f64::consts::PI * k as f64 / self.p as f64;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        (re, im)
    }

    /// Comma-separated `num/den` coefficients.
    pub fn to_text(&self) -> String {
        self.coeffs
            .iter()
            .map(|c| format!("{}/{}", c.numer(), c.denom()))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn from_text(p: u32, s: &str) -> Result<CycNum> {
        let coeffs: Result<Vec<Rat>> = s
            .split(',')
            .map(|t| {
                let (n, d) = t.trim().split_once('/').ok_or_else(|| Error::Parse(t.into()))?;
                let n: i64 = n.parse().map_err(|_| Error::Parse(t.into()))?;
                let d: i64 = d.parse().map_err(|_| Error::Parse(t.into()))?;
                if d == 0 {
                    return Err(Error::Parse(t.into()));
                }
                Ok(Rat::new(n, d))
            })
            .collect();
        CycNum::from_coeffs(p, coeffs?)
    }

    fn check(&self, other: &CycNum) {
        assert_eq!(self.p, other.p, "cyclotomic numbers over different fields");
    }
}

impl fmt::Display for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = if c.abs().is_one() && k > 0 { String::new() } else { c.abs().to_string() };
            let root = match k {
                0 => String::new(),
                1 => "z".to_string(),
                _ => format!("z^{k}"),
            };
            let sign = if c.is_negative() { "-" } else { "+" };
            terms.push((sign, format!("{mag}{root}")));
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        let mut s = String::new();
        for (i, (sign, t)) in terms.iter().enumerate() {
            if i == 0 {
                if *sign == "-" {
                    s.push('-');
                }
            } else {
                s.push_str(&format!(" {sign} "));
            }
            s.push_str(t);
        }
        write!(f, "{s}")
    }
}

impl<'a> Add<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn add(self, rhs: &CycNum) -> CycNum {
        self.check(rhs);
        CycNum {
            p: self.p,
            coeffs: self.coeffs.iter().zip(rhs.coeffs.iter()).map(|(a, b)| a + b).collect(),
        }
    }
}

impl AddAssign<&CycNum> for CycNum {
    fn add_assign(&mut self, rhs: &CycNum) {
        self.check(rhs);
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            if !b.is_zero() {
                *a += b;
            }
        }
    }
}

impl<'a> Sub<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn sub(self, rhs: &CycNum) -> CycNum {
        self.check(rhs);
        CycNum {
            p: self.p,
            coeffs: self.coeffs.iter().zip(rhs.coeffs.iter()).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        CycNum {
            p: self.p,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}

impl<'a> Mul<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn mul(self, rhs: &CycNum) -> CycNum {
        self.check(rhs);
        let p = self.p as usize;
        let mut full = vec![Rat::zero(); p];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    full[(i + j) % p] += a * b;
                }
            }
        }
        let top = full[p - 1];
        full.pop();
        if !top.is_zero() {
            for c in full.iter_mut() {
                *c -= top;
            }
        }
        CycNum { p: self.p, coeffs: full }
    }
}

/// Quadratic Gauss sum `G_d = Σ_{x ∈ F_{q^d}} ψ_d(x²)`.
pub fn gauss_sum(tower: &Tower, d: usize) -> Result<CycNum> {
    let p = tower.p();
    let mut counts = vec![0i64; p as usize];
    for x in tower.elements(d)? {
        counts[tower.psi_exponent(&tower.square(x), d) as usize] += 1;
    }
    let mut g = CycNum::zero(p);
    for (k, &c) in counts.iter().enumerate() {
        if c != 0 {
            g.add_root(k as i64, Rat::from_integer(c));
        }
    }
    Ok(g)
}
