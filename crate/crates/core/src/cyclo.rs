//! Exact arithmetic in Q(ζ_N), N = l^α · p^β · m, in the tensor basis
//! ζ_{l^α}^i ⊗ ζ_{p^β}^j ⊗ ζ_m^k.
//!
//! Each axis is reduced independently modulo its own cyclotomic polynomial,
//! so Galois actions and p-divisibility are coordinate-wise. Values carry a
//! single common positive denominator; elements of J (the unramified
//! coefficient ring) have l-power denominators, but intermediate values such
//! as `1/|G|` in Fourier inversion are allowed to carry other primes.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{euler_phi, gcd, inv_mod, is_prime};
use crate::error::{Error, Result};
use crate::linalg;

/// The modulus N = l^α · p^β · m with its factorization stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycloModulus {
    l: u64,
    alpha: u32,
    p: u64,
    beta: u32,
    m: u64,
}

impl CycloModulus {
    pub fn new(l: u64, alpha: u32, p: u64, beta: u32, m: u64) -> Result<Self> {
        if !is_prime(l) || !is_prime(p) || l == p {
            return Err(Error::Invalid(format!(
                "cyclotomic modulus needs distinct primes l, p (got l={l}, p={p})"
            )));
        }
        if m == 0 || gcd(m, l * p) != 1 {
            return Err(Error::Invalid(format!("m={m} must be coprime to l*p={}", l * p)));
        }
        Ok(CycloModulus { l, alpha, p, beta, m })
    }

    /// The modulus of Q itself inside the (l, p) family.
    pub fn rational(l: u64, p: u64) -> Result<Self> {
        Self::new(l, 0, p, 0, 1)
    }

    pub fn l(&self) -> u64 {
        self.l
    }
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn alpha(&self) -> u32 {
        self.alpha
    }
    pub fn beta(&self) -> u32 {
        self.beta
    }
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.axis_orders().iter().product()
    }

    /// Orders of the three root-of-unity axes: l^α, p^β, m.
    pub fn axis_orders(&self) -> [u64; 3] {
        [self.l.pow(self.alpha), self.p.pow(self.beta), self.m]
    }

    pub fn dims(&self) -> [usize; 3] {
        self.axis_orders().map(|n| euler_phi(n) as usize)
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    /// Smallest modulus containing both. Panics if the (l, p) pair differs,
    /// which is a programming error: every value in one computation shares
    /// the same residue characteristic and coefficient prime.
    pub fn join(&self, other: &Self) -> Self {
        assert!(
            self.l == other.l && self.p == other.p,
            "incompatible cyclotomic moduli: (l,p)=({},{}) vs ({},{})",
            self.l,
            self.p,
            other.l,
            other.p
        );
        CycloModulus {
            l: self.l,
            alpha: self.alpha.max(other.alpha),
            p: self.p,
            beta: self.beta.max(other.beta),
            m: num_integer::lcm(self.m, other.m),
        }
    }

    /// Modulus that contains the e-th roots of unity.
    pub fn for_root_order(l: u64, p: u64, e: u64) -> Result<Self> {
        let (mut rest, mut alpha, mut beta) = (e, 0u32, 0u32);
        while rest % l == 0 {
            rest /= l;
            alpha += 1;
        }
        while rest % p == 0 {
            rest /= p;
            beta += 1;
        }
        Self::new(l, alpha, p, beta, rest)
    }

    /// Axis exponents of ζ_e^k; e must divide the modulus order n.
    pub fn root_exponents(&self, e: u64, k: i64) -> [u64; 3] {
        let n = self.n();
        debug_assert_eq!(n % e, 0);
        let big_k = (k.rem_euclid(e as i64) as u128 * (n / e) as u128 % n as u128) as u64;
        let mut exps = [0u64; 3];
        for (a, &ord) in self.axis_orders().iter().enumerate() {
            if ord == 1 {
                continue;
            }
            // K/n = Σ k_a/ord_a (mod 1) with k_a = K * (n/ord_a)^{-1} mod ord_a
            let cof = (n / ord) % ord;
            let inv = inv_mod(cof, ord).expect("coprime axis parts");
            exps[a] = ((big_k % ord) as u128 * inv as u128 % ord as u128) as u64;
        }
        exps
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let [_, d1, d2] = self.dims();
        (i * d1 + j) * d2 + k
    }

    fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let [_, d1, d2] = self.dims();
        (idx / (d1 * d2), (idx / d2) % d1, idx % d2)
    }
}

/// Powers x^t mod Φ_n for t in 0..n, as integer coefficient vectors of length φ(n).
struct AxisTable {
    powers: Vec<Vec<i64>>,
}

fn cyclotomic_poly(n: u64, memo: &mut HashMap<u64, Vec<i64>>) -> Vec<i64> {
    if let Some(p) = memo.get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by Φ_d for proper divisors d
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            let div = cyclotomic_poly(d, memo);
            num = poly_div_exact(&num, &div);
        }
    }
    memo.insert(n, num.clone());
    num
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let qd = rem.len() - 1 - dd;
    let mut q = vec![0i64; qd + 1];
    for k in (0..=qd).rev() {
        let c = rem[k + dd];
        q[k] = c;
        for (i, &dc) in den.iter().enumerate() {
            rem[k + i] -= c * dc;
        }
    }
    debug_assert!(rem.iter().all(|&x| x == 0));
    q
}

fn axis_table(n: u64) -> Arc<AxisTable> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<AxisTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&n) {
        return t.clone();
    }
    let mut memo = HashMap::new();
    let phi_poly = cyclotomic_poly(n, &mut memo);
    let phi = phi_poly.len() - 1;
    let mut powers = Vec::with_capacity(n as usize);
    let mut cur = vec![0i64; phi];
    cur[0] = 1;
    if phi == 1 && n == 1 {
        // Φ_1 = x - 1: every power is 1
    }
    for _ in 0..n {
        powers.push(cur.clone());
        // multiply by x and reduce
        let top = cur[phi - 1];
        for i in (1..phi).rev() {
            cur[i] = cur[i - 1];
        }
        cur[0] = 0;
        if top != 0 {
            for i in 0..phi {
                cur[i] -= top * phi_poly[i];
            }
        }
    }
    let t = Arc::new(AxisTable { powers });
    cache.lock().unwrap().insert(n, t.clone());
    t
}

/// Exact element of Q(ζ_N): `num / den` in the tensor basis.
#[derive(Clone, Debug)]
pub struct CycloElem {
    modulus: CycloModulus,
    num: Vec<BigInt>,
    den: BigInt,
}

impl CycloElem {
    pub fn zero(modulus: CycloModulus) -> Self {
        CycloElem {
            num: vec![BigInt::zero(); modulus.dim()],
            den: BigInt::one(),
            modulus,
        }
    }

    pub fn one(modulus: CycloModulus) -> Self {
        Self::from_int(modulus, 1)
    }

    pub fn from_int(modulus: CycloModulus, n: i64) -> Self {
        Self::from_bigint(modulus, BigInt::from(n))
    }

    pub fn from_bigint(modulus: CycloModulus, n: BigInt) -> Self {
        let mut x = Self::zero(modulus);
        x.num[0] = n;
        x.normalize();
        x
    }

    pub fn from_rational(modulus: CycloModulus, q: &BigRational) -> Self {
        let mut x = Self::zero(modulus);
        x.num[0] = q.numer().clone();
        x.den = q.denom().clone();
        x.normalize();
        x
    }

    /// Build from raw numerators and a common denominator.
    pub fn from_parts(modulus: CycloModulus, num: Vec<BigInt>, den: BigInt) -> Result<Self> {
        if num.len() != modulus.dim() {
            return Err(Error::Invalid(format!(
                "expected {} coordinates, got {}",
                modulus.dim(),
                num.len()
            )));
        }
        if den.is_zero() {
            return Err(Error::Invalid("zero denominator".into()));
        }
        let mut x = CycloElem { modulus, num, den };
        x.normalize();
        Ok(x)
    }

    /// ζ_{l^α}^a · ζ_{p^β}^b · ζ_m^c in the given modulus.
    pub fn root_of_unity(modulus: CycloModulus, exps: [u64; 3]) -> Self {
        let mut out = Self::zero(modulus);
        out.add_monomial(&BigInt::one(), exps);
        out
    }

    /// ζ_e^k for an arbitrary order e, in the smallest modulus containing it.
    pub fn zeta(l: u64, p: u64, e: u64, k: i64) -> Result<Self> {
        let modulus = CycloModulus::for_root_order(l, p, e)?;
        let exps = modulus.root_exponents(e, k);
        Ok(Self::root_of_unity(modulus, exps))
    }

    pub fn modulus(&self) -> &CycloModulus {
        &self.modulus
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.num
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num[0].is_one() && self.num[1..].iter().all(Zero::is_zero)
    }

    fn normalize(&mut self) {
        if self.den.is_negative() {
            self.den = -self.den.clone();
            for c in self.num.iter_mut() {
                *c = -c.clone();
            }
        }
        if self.is_zero() {
            self.den = BigInt::one();
            return;
        }
        let g = self
            .num
            .iter()
            .fold(self.den.clone(), |acc, c| acc.gcd(c));
        if !g.is_one() {
            for c in self.num.iter_mut() {
                *c /= &g;
            }
            self.den /= &g;
        }
    }

    fn add_monomial(&mut self, c: &BigInt, exps: [u64; 3]) {
        let orders = self.modulus.axis_orders();
        let t = [0, 1, 2].map(|a| axis_table(orders[a]));
        let r0 = &t[0].powers[(exps[0] % orders[0]) as usize];
        let r1 = &t[1].powers[(exps[1] % orders[1]) as usize];
        let r2 = &t[2].powers[(exps[2] % orders[2]) as usize];
        let scaled = c * &self.den;
        for (i, &a) in r0.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in r1.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                for (k, &cc) in r2.iter().enumerate() {
                    if cc == 0 {
                        continue;
                    }
                    let idx = self.modulus.index(i, j, k);
                    self.num[idx] += &scaled * (a * b * cc);
                }
            }
        }
    }

    /// Σ c_e ζ^{exps_e} over a list of monomials.
    pub fn from_monomials(modulus: CycloModulus, terms: &[([u64; 3], BigInt)]) -> Self {
        let mut out = Self::zero(modulus);
        for (exps, c) in terms {
            if !c.is_zero() {
                out.add_monomial(c, *exps);
            }
        }
        out.normalize();
        out
    }

    /// Re-express under a larger modulus.
    pub fn promote(&self, target: &CycloModulus) -> Self {
        if &self.modulus == target {
            return self.clone();
        }
        let joined = self.modulus.join(target);
        assert_eq!(&joined, target, "promotion target must contain the source modulus");
        let src = self.modulus.axis_orders();
        let dst = target.axis_orders();
        let mults = [0, 1, 2].map(|a| dst[a] / src[a]);
        self.map_monomials(*target, mults, dst)
    }

    /// Send each basis monomial ζ^{(i,j,k)} to the target monomial with
    /// exponents scaled by `mults` (reduced mod `target_orders`).
    fn map_monomials(&self, target: CycloModulus, mults: [u64; 3], target_orders: [u64; 3]) -> Self {
        let mut out = Self::zero(target);
        out.den = self.den.clone();
        let t = [0, 1, 2].map(|a| axis_table(target_orders[a]));
        for (idx, c) in self.num.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (i, j, k) = self.modulus.unindex(idx);
            let e = [
                (i as u64 * mults[0]) % target_orders[0],
                (j as u64 * mults[1]) % target_orders[1],
                (k as u64 * mults[2]) % target_orders[2],
            ];
            let r0 = &t[0].powers[e[0] as usize];
            let r1 = &t[1].powers[e[1] as usize];
            let r2 = &t[2].powers[e[2] as usize];
            for (a, &x) in r0.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (b, &y) in r1.iter().enumerate() {
                    if y == 0 {
                        continue;
                    }
                    for (cc, &z) in r2.iter().enumerate() {
                        if z == 0 {
                            continue;
                        }
                        let o = target.index(a, b, cc);
                        out.num[o] += c * (x * y * z);
                    }
                }
            }
        }
        out.normalize();
        out
    }

    /// The automorphism ζ_N ↦ ζ_N^t.
    pub fn galois_apply(&self, t: i64) -> Result<Self> {
        let n = self.modulus.n();
        let tt = t.rem_euclid(n as i64) as u64;
        if gcd(tt, n) != 1 {
            return Err(Error::NotCoprime(format!("t={t} is not coprime to N={n}")));
        }
        let orders = self.modulus.axis_orders();
        let mults = orders.map(|o| tt % o);
        Ok(self.map_monomials(self.modulus, mults, orders))
    }

    /// Apply independent exponent multipliers per axis (each must be a unit mod its axis order).
    pub fn axis_automorphism(&self, mults: [u64; 3]) -> Self {
        let orders = self.modulus.axis_orders();
        let mults = [0, 1, 2].map(|a| mults[a] % orders[a]);
        self.map_monomials(self.modulus, mults, orders)
    }

    /// Arithmetic Frobenius at p: ζ ↦ ζ^p on the l- and m-axes, identity on
    /// p-power roots of unity.
    pub fn frobenius_p(&self) -> Self {
        let p = self.modulus.p;
        self.axis_automorphism([p, 1, p])
    }

    /// p-adic valuation (None for zero).
    pub fn p_valuation(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let p = BigInt::from(self.modulus.p);
        let v = |x: &BigInt| -> i64 {
            let mut x = x.clone();
            let mut v = 0;
            while (&x % &p).is_zero() {
                x /= &p;
                v += 1;
            }
            v
        };
        let num_v = self.num.iter().filter(|c| !c.is_zero()).map(v).min().unwrap();
        Some(num_v - v(&self.den))
    }

    /// True iff x = p^k · y with y p-integral.
    pub fn p_divisible(&self, k: i64) -> bool {
        self.p_valuation().map_or(true, |v| v >= k)
    }

    /// True iff the common denominator is a power of l.
    pub fn has_l_power_denominator(&self) -> bool {
        self.l_exponent_of_denominator().is_some()
    }

    pub fn l_exponent_of_denominator(&self) -> Option<u32> {
        let l = BigInt::from(self.modulus.l);
        let mut d = self.den.clone();
        let mut e = 0;
        while !d.is_one() {
            if !(&d % &l).is_zero() {
                return None;
            }
            d /= &l;
            e += 1;
        }
        Some(e)
    }

    /// The value as a rational, if it lies in Q.
    pub fn to_rational(&self) -> Option<BigRational> {
        if self.num[1..].iter().all(Zero::is_zero) {
            Some(BigRational::new(self.num[0].clone(), self.den.clone()))
        } else {
            None
        }
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        let mut out = CycloElem {
            modulus: self.modulus,
            num: self.num.iter().map(|c| c * q.numer()).collect(),
            den: &self.den * q.denom(),
        };
        out.normalize();
        out
    }

    pub fn scale_int(&self, n: &BigInt) -> Self {
        let mut out = CycloElem {
            modulus: self.modulus,
            num: self.num.iter().map(|c| c * n).collect(),
            den: self.den.clone(),
        };
        out.normalize();
        out
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut acc = Self::one(self.modulus);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    fn add_impl(&self, other: &Self, sign: i8) -> Self {
        let m = self.modulus.join(&other.modulus);
        let a = self.promote(&m);
        let b = other.promote(&m);
        let den = a.den.lcm(&b.den);
        let fa = &den / &a.den;
        let fb = &den / &b.den;
        let num = a
            .num
            .iter()
            .zip(&b.num)
            .map(|(x, y)| {
                if sign > 0 {
                    x * &fa + y * &fb
                } else {
                    x * &fa - y * &fb
                }
            })
            .collect();
        let mut out = CycloElem { modulus: m, num, den };
        out.normalize();
        out
    }

    fn mul_impl(&self, other: &Self) -> Self {
        let m = self.modulus.join(&other.modulus);
        let a = self.promote(&m);
        let b = other.promote(&m);
        let dims = m.dims();
        let orders = m.axis_orders();
        let bd = dims.map(|d| 2 * d - 1);
        let nz_a: Vec<(usize, &BigInt)> = a.num.iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
        let nz_b: Vec<(usize, &BigInt)> = b.num.iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
        let den = &a.den * &b.den;
        if nz_a.is_empty() || nz_b.is_empty() {
            return Self::zero(m);
        }
        let small = nz_a.iter().chain(&nz_b).all(|(_, c)| c.bits() <= 48);
        let tables = [0, 1, 2].map(|ax| axis_table(orders[ax]));
        let buf_len = bd[0] * bd[1] * bd[2];
        let pos = |idx: usize| m.unindex(idx);
        let mut num = vec![BigInt::zero(); m.dim()];
        if small {
            let mut buf = vec![0i128; buf_len];
            let flat = |nz: &[(usize, &BigInt)]| -> Vec<(usize, i128)> {
                nz.iter()
                    .map(|&(idx, c)| {
                        let (i, j, k) = pos(idx);
                        ((i * bd[1] + j) * bd[2] + k, c.to_i64().unwrap() as i128)
                    })
                    .collect()
            };
            let fb = flat(&nz_b);
            for (oa, ca) in flat(&nz_a) {
                for &(ob, cb) in &fb {
                    buf[oa + ob] += ca * cb;
                }
            }
            let acc = reduce_axes(buf, bd, dims, orders, &tables, 0i128, |c| *c == 0, |d, c, f| *d += c * f as i128);
            for (dst, v) in num.iter_mut().zip(acc) {
                *dst = BigInt::from(v);
            }
        } else {
            let mut buf = vec![BigInt::zero(); buf_len];
            let offset = |idx: usize| {
                let (i, j, k) = pos(idx);
                (i * bd[1] + j) * bd[2] + k
            };
            let fb: Vec<(usize, &BigInt)> = nz_b.iter().map(|&(idx, c)| (offset(idx), c)).collect();
            for &(ia, ca) in &nz_a {
                let oa = offset(ia);
                for &(ob, cb) in &fb {
                    buf[oa + ob] += ca * cb;
                }
            }
            num = reduce_axes(buf, bd, dims, orders, &tables, BigInt::zero(), |c| c.is_zero(), |d, c, f| *d += c * f);
        }
        let mut out = CycloElem { modulus: m, num, den };
        out.normalize();
        out
    }

    /// Matrix (column j = self · basis_j) of multiplication by self, with the
    /// common denominator factored out.
    fn multiplication_matrix(&self) -> Vec<Vec<BigInt>> {
        let m = self.modulus;
        let d = m.dim();
        let numer = CycloElem {
            modulus: m,
            num: self.num.clone(),
            den: BigInt::one(),
        };
        let mut cols = Vec::with_capacity(d);
        for j in 0..d {
            let (a, b, c) = m.unindex(j);
            let basis = Self::root_of_unity(m, [a as u64, b as u64, c as u64]);
            let prod = &numer * &basis;
            debug_assert!(prod.den.is_one());
            cols.push(prod.num);
        }
        (0..d).map(|i| (0..d).map(|j| cols[j][i].clone()).collect()).collect()
    }

    /// Field norm down to Q.
    pub fn norm(&self) -> BigRational {
        let d = self.modulus.dim();
        let det = linalg::det_bareiss(self.multiplication_matrix());
        BigRational::new(det, self.den.pow(d as u32))
    }

    /// Multiplicative inverse in the field; `None` for zero.
    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let m = self.modulus;
        let d = m.dim();
        let mut aug = self.multiplication_matrix();
        for (i, row) in aug.iter_mut().enumerate() {
            // numer · y = den · e_0
            row.push(if i == 0 { self.den.clone() } else { BigInt::zero() });
        }
        let sol = linalg::solve_integer_augmented(aug)?;
        let den = sol.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let num = sol.iter().map(|q| q.numer() * (&den / q.denom())).collect();
        debug_assert_eq!(d, m.dim());
        Self::from_parts(m, num, den).ok()
    }

    /// Replace each coordinate by its residue in [0, p^r), valid for
    /// p-integral values. Congruent to self modulo p^r.
    pub fn reduce_mod_p_power(&self, r: u32) -> Self {
        let pr = BigInt::from(self.modulus.p).pow(r);
        let den_inv = mod_inverse_big(&self.den, &pr).expect("value must be p-integral");
        let num = self
            .num
            .iter()
            .map(|c| (c * &den_inv).mod_floor(&pr))
            .collect();
        let mut out = CycloElem {
            modulus: self.modulus,
            num,
            den: BigInt::one(),
        };
        out.normalize();
        out
    }

    /// Coordinates as (i, j, k, numerator, l-exponent) with each coefficient
    /// reduced separately. Requires an l-power denominator.
    pub fn coordinates(&self) -> Result<Vec<(usize, usize, usize, BigInt, u32)>> {
        let e = self.l_exponent_of_denominator().ok_or_else(|| {
            Error::Serialization(format!("denominator {} is not a power of l", self.den))
        })?;
        let l = BigInt::from(self.modulus.l);
        let mut out = Vec::new();
        for (idx, c) in self.num.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (i, j, k) = self.modulus.unindex(idx);
            let (mut n, mut ee) = (c.clone(), e);
            while ee > 0 && (&n % &l).is_zero() {
                n /= &l;
                ee -= 1;
            }
            out.push((i, j, k, n, ee));
        }
        Ok(out)
    }

    pub fn from_coordinates(
        modulus: CycloModulus,
        coords: &[(usize, usize, usize, BigInt, u32)],
    ) -> Result<Self> {
        let dims = modulus.dims();
        let emax = coords.iter().map(|c| c.4).max().unwrap_or(0);
        let l = BigInt::from(modulus.l);
        let mut num = vec![BigInt::zero(); modulus.dim()];
        for (i, j, k, n, e) in coords {
            if *i >= dims[0] || *j >= dims[1] || *k >= dims[2] {
                return Err(Error::Serialization(format!(
                    "basis index ({i},{j},{k}) out of range for dims {dims:?}"
                )));
            }
            num[modulus.index(*i, *j, *k)] += n * l.pow(emax - e);
        }
        Self::from_parts(modulus, num, l.pow(emax))
    }
}

/// Reduce a product buffer of shape `shape` (exponents up to 2·dim − 2 per
/// axis) to the basis of shape `dims`, one axis at a time.
#[allow(clippy::too_many_arguments)]
fn reduce_axes<T: Clone>(
    mut buf: Vec<T>,
    mut shape: [usize; 3],
    dims: [usize; 3],
    orders: [u64; 3],
    tables: &[Arc<AxisTable>; 3],
    zero: T,
    is_zero: impl Fn(&T) -> bool,
    madd: impl Fn(&mut T, &T, i64),
) -> Vec<T> {
    for a in 0..3 {
        let mut next = shape;
        next[a] = dims[a];
        let mut out = vec![zero.clone(); next[0] * next[1] * next[2]];
        for i0 in 0..shape[0] {
            for i1 in 0..shape[1] {
                for i2 in 0..shape[2] {
                    let c = &buf[(i0 * shape[1] + i1) * shape[2] + i2];
                    if is_zero(c) {
                        continue;
                    }
                    let mut at = [i0, i1, i2];
                    let row = &tables[a].powers[at[a] % orders[a] as usize];
                    for (r, &f) in row.iter().enumerate() {
                        if f == 0 {
                            continue;
                        }
                        at[a] = r;
                        madd(&mut out[(at[0] * next[1] + at[1]) * next[2] + at[2]], c, f);
                    }
                }
            }
        }
        buf = out;
        shape = next;
    }
    buf
}

pub(crate) fn mod_inverse_big(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

impl PartialEq for CycloElem {
    fn eq(&self, other: &Self) -> bool {
        if self.modulus == other.modulus {
            return self.den == other.den && self.num == other.num;
        }
        let m = self.modulus.join(&other.modulus);
        let a = self.promote(&m);
        let b = other.promote(&m);
        a.den == b.den && a.num == b.num
    }
}

impl Eq for CycloElem {}

macro_rules! binop {
    ($tr:ident, $f:ident, $body:expr) => {
        impl $tr<&CycloElem> for &CycloElem {
            type Output = CycloElem;
            fn $f(self, rhs: &CycloElem) -> CycloElem {
                $body(self, rhs)
            }
        }
        impl $tr<CycloElem> for CycloElem {
            type Output = CycloElem;
            fn $f(self, rhs: CycloElem) -> CycloElem {
                $body(&self, &rhs)
            }
        }
        impl $tr<&CycloElem> for CycloElem {
            type Output = CycloElem;
            fn $f(self, rhs: &CycloElem) -> CycloElem {
                $body(&self, rhs)
            }
        }
        impl $tr<CycloElem> for &CycloElem {
            type Output = CycloElem;
            fn $f(self, rhs: CycloElem) -> CycloElem {
                $body(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a: &CycloElem, b: &CycloElem| a.add_impl(b, 1));
binop!(Sub, sub, |a: &CycloElem, b: &CycloElem| a.add_impl(b, -1));
binop!(Mul, mul, |a: &CycloElem, b: &CycloElem| a.mul_impl(b));

impl Neg for &CycloElem {
    type Output = CycloElem;
    fn neg(self) -> CycloElem {
        CycloElem {
            modulus: self.modulus,
            num: self.num.iter().map(|c| -c).collect(),
            den: self.den.clone(),
        }
    }
}

impl Neg for CycloElem {
    type Output = CycloElem;
    fn neg(self) -> CycloElem {
        -&self
    }
}

impl fmt::Display for CycloElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let orders = self.modulus.axis_orders();
        let mut first = true;
        for (idx, c) in self.num.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (i, j, k) = self.modulus.unindex(idx);
            let q = BigRational::new(c.clone(), self.den.clone());
            let neg = q.is_negative();
            let mag = q.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mut mono = Vec::new();
            for (e, ord) in [(i, orders[0]), (j, orders[1]), (k, orders[2])] {
                if e > 0 {
                    mono.push(if e == 1 {
                        format!("z{ord}")
                    } else {
                        format!("z{ord}^{e}")
                    });
                }
            }
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{mag}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

/// JSON form: `{"N": [l, α, p, β, m], "coeffs": [[i, j, k, numerator, l_exponent], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CycloJson {
    #[serde(rename = "N")]
    pub n: [u64; 5],
    /// numerators are decimal strings, so arbitrary size survives any JSON reader
    #[serde(with = "decimal_coords")]
    pub coeffs: Vec<(usize, usize, usize, BigInt, u32)>,
}

mod decimal_coords {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    type Coord = (usize, usize, usize, BigInt, u32);

    pub fn serialize<S: Serializer>(v: &[Coord], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|(i, j, k, n, e)| (i, j, k, n.to_string(), e)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Coord>, D::Error> {
        let raw: Vec<(usize, usize, usize, String, u32)> = Deserialize::deserialize(d)?;
        raw.into_iter()
            .map(|(i, j, k, n, e)| {
                let n = n.parse::<BigInt>().map_err(serde::de::Error::custom)?;
                Ok((i, j, k, n, e))
            })
            .collect()
    }
}

impl CycloElem {
    pub fn to_json(&self) -> Result<CycloJson> {
        let m = self.modulus;
        Ok(CycloJson {
            n: [m.l, m.alpha as u64, m.p, m.beta as u64, m.m],
            coeffs: self.coordinates()?,
        })
    }

    pub fn from_json(j: &CycloJson) -> Result<Self> {
        let [l, a, p, b, m] = j.n;
        let modulus = CycloModulus::new(l, a as u32, p, b as u32, m)?;
        Self::from_coordinates(modulus, &j.coeffs)
    }
}

impl Serialize for CycloElem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json()
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CycloElem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = CycloJson::deserialize(d)?;
        CycloElem::from_json(&j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z3() -> CycloElem {
        CycloElem::zeta(3, 2, 3, 1).unwrap()
    }

    #[test]
    fn zeta3_relations() {
        let m = CycloModulus::new(3, 1, 2, 0, 1).unwrap();
        let z = z3();
        let z2 = &z * &z;
        assert_eq!(&z + &z2, CycloElem::from_int(m, -1));
        assert_eq!(&z * &CycloElem::one(m), z);
        let d = &z - &z2;
        assert_eq!(&d * &d, CycloElem::from_int(m, -3));
    }

    #[test]
    fn galois_on_zeta3() {
        let z = z3();
        let z2 = &z * &z;
        assert_eq!(z.galois_apply(2).unwrap(), z2);
        let d = &z - &z2;
        assert_eq!(d.galois_apply(2).unwrap(), &z2 - &z);
        let q = CycloElem::from_int(*z.modulus(), 7);
        assert_eq!(q.galois_apply(2).unwrap(), q);
        assert!(z.galois_apply(3).is_err());
    }

    #[test]
    fn frobenius_conventions() {
        // l = 3, p = 2: ζ3 ↦ ζ3^2
        let z = z3();
        assert_eq!(z.frobenius_p(), &z * &z);
        // p-power roots are fixed: ζ4 with l = 3, p = 2
        let z4 = CycloElem::zeta(3, 2, 4, 1).unwrap();
        assert_eq!(z4.frobenius_p(), z4);
    }

    #[test]
    fn p_divisibility_examples() {
        let z = CycloElem::zeta(13, 3, 3, 1).unwrap();
        let three = CycloElem::from_int(*z.modulus(), 3);
        assert!((&three * &z).p_divisible(1));
        assert!(!z.p_divisible(1));
        let m = CycloModulus::rational(13, 3).unwrap();
        let x = CycloElem::from_int(m, 13 - 13i64.pow(3));
        assert!(x.p_divisible(1));
    }

    #[test]
    fn mixed_axes_and_promotion() {
        // ζ_36 with l = 3, p = 2: ζ_36^9 = ζ_4, ζ_36^4 = ζ_9
        let z36 = CycloElem::zeta(3, 2, 36, 1).unwrap();
        assert_eq!(z36.pow(9), CycloElem::zeta(3, 2, 4, 1).unwrap());
        assert_eq!(z36.pow(4), CycloElem::zeta(3, 2, 9, 1).unwrap());
        assert!(z36.pow(36).is_one());
        // ζ_5 lives on the m-axis for l = 3, p = 2
        let z5 = CycloElem::zeta(3, 2, 5, 2).unwrap();
        let sum: CycloElem = (0..5).fold(CycloElem::zero(*z5.modulus()), |acc, k| {
            acc + CycloElem::zeta(3, 2, 5, k).unwrap()
        });
        assert!(sum.is_zero());
        assert!(z5.pow(5).is_one());
    }

    #[test]
    fn inverse_and_norm() {
        let z = CycloElem::zeta(13, 3, 13, 1).unwrap();
        let x = &z + &CycloElem::from_int(*z.modulus(), 2);
        let inv = x.inverse().unwrap();
        assert!((&x * &inv).is_one());
        // N(ζ - 1) = Φ_13(1) = 13 up to sign: N(1 - ζ) = 13
        let one = CycloElem::one(*z.modulus());
        assert_eq!((&one - &z).norm(), BigRational::from_integer(13.into()));
    }

    #[test]
    fn json_round_trip() {
        let z = CycloElem::zeta(3, 2, 9, 2).unwrap();
        let x = z.scale(&BigRational::new(5.into(), 27.into()));
        let j = serde_json::to_string(&x).unwrap();
        let back: CycloElem = serde_json::from_str(&j).unwrap();
        assert_eq!(back, x);
    }
}
