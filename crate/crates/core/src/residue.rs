//! Residue rings O_K/π^a for K unramified over Q_l of degree d: the Galois
//! ring (Z/l^a)[x]/(f), its units, Frobenius, trace, and the additive
//! characters built on the trace.
//!
//! The uniformiser is always π = l. Elements are stored as coefficient
//! vectors of length d modulo l^a; a residue "mod π^t" for t < a is
//! represented by coefficients reduced into [0, l^t).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::arith::{factor, is_prime, mul_mod, pow_mod};
use crate::cyclo::{CycloElem, CycloModulus};
use crate::error::{Error, Result};

/// Default enumeration cap for unit and residue-field loops.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Parameters of the unramified local field K and the truncation level.
///
/// `p` is the coefficient prime of J; it is carried here because every
/// character value produced downstream is a `CycloElem` over (l, p).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalFieldParams {
    pub l: u64,
    pub d: u32,
    pub a: u32,
    pub p: u64,
}

impl LocalFieldParams {
    pub fn new(l: u64, d: u32, a: u32, p: u64) -> Result<Self> {
        if !is_prime(l) || !is_prime(p) || l == p {
            return Err(Error::Invalid(format!("need distinct primes l, p (got l={l}, p={p})")));
        }
        if d == 0 || a == 0 {
            return Err(Error::Invalid("d and a must be positive".into()));
        }
        let size = (l as u128).checked_pow(d * a);
        if size.map_or(true, |s| s > u64::MAX as u128 / 4) || (l as u128).pow(a) > 1 << 31 {
            return Err(Error::Invalid(format!("residue ring l^(d*a) = {l}^{} too large", d * a)));
        }
        Ok(LocalFieldParams { l, d, a, p })
    }

    /// |k| = l^d.
    pub fn q(&self) -> u64 {
        self.l.pow(self.d)
    }

    pub fn with_level(&self, a: u32) -> Result<Self> {
        Self::new(self.l, self.d, a, self.p)
    }

    pub fn with_degree(&self, d: u32) -> Result<Self> {
        Self::new(self.l, d, self.a, self.p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GaloisRingElem {
    pub coeffs: Vec<u64>,
}

/// The Galois ring GR(l^a, d) with a fixed defining polynomial.
#[derive(Clone, Debug)]
pub struct GaloisRing {
    params: LocalFieldParams,
    modulus: u64,
    /// monic defining polynomial, low degree first, length d + 1
    f: Vec<u64>,
    /// ξ^{d+j} reduced, for j in 0..d-1
    high_powers: Vec<Vec<u64>>,
    /// Frobenius image of ξ^k, k in 0..d
    frob_basis: Vec<Vec<u64>>,
    /// Tr(ξ^k) in Z/l^a
    trace_basis: Vec<u64>,
    /// least primitive element of the residue field
    generator: GaloisRingElem,
}

impl GaloisRing {
    pub fn new(params: LocalFieldParams) -> Result<Self> {
        let LocalFieldParams { l, d, a, .. } = params;
        let modulus = l.pow(a);
        let f = least_irreducible(l, d);
        let mut ring = GaloisRing {
            params,
            modulus,
            f,
            high_powers: Vec::new(),
            frob_basis: Vec::new(),
            trace_basis: Vec::new(),
            generator: GaloisRingElem { coeffs: vec![] },
        };
        ring.high_powers = ring.compute_high_powers();
        ring.frob_basis = ring.compute_frobenius();
        ring.trace_basis = (0..d as usize)
            .map(|k| {
                let x = ring.basis(k);
                ring.trace_by_orbit(&x)
            })
            .collect();
        ring.generator = ring.least_primitive()?;
        Ok(ring)
    }

    pub fn params(&self) -> &LocalFieldParams {
        &self.params
    }

    pub fn defining_poly(&self) -> &[u64] {
        &self.f
    }

    pub fn d(&self) -> usize {
        self.params.d as usize
    }

    pub fn char_modulus(&self) -> u64 {
        self.modulus
    }

    /// The least primitive element of the residue field (as a residue representative).
    pub fn residue_generator(&self) -> &GaloisRingElem {
        &self.generator
    }

    pub fn zero(&self) -> GaloisRingElem {
        GaloisRingElem { coeffs: vec![0; self.d()] }
    }

    pub fn one(&self) -> GaloisRingElem {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> GaloisRingElem {
        let mut x = self.zero();
        x.coeffs[0] = n.rem_euclid(self.modulus as i64) as u64;
        x
    }

    fn basis(&self, k: usize) -> GaloisRingElem {
        let mut x = self.zero();
        x.coeffs[k] = 1;
        x
    }

    pub fn from_coeffs(&self, coeffs: &[i64]) -> Result<GaloisRingElem> {
        if coeffs.len() != self.d() {
            return Err(Error::Invalid(format!(
                "expected {} coefficients, got {}",
                self.d(),
                coeffs.len()
            )));
        }
        Ok(GaloisRingElem {
            coeffs: coeffs.iter().map(|&c| c.rem_euclid(self.modulus as i64) as u64).collect(),
        })
    }

    pub fn add(&self, x: &GaloisRingElem, y: &GaloisRingElem) -> GaloisRingElem {
        GaloisRingElem {
            coeffs: x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| (a + b) % self.modulus).collect(),
        }
    }

    pub fn neg(&self, x: &GaloisRingElem) -> GaloisRingElem {
        GaloisRingElem {
            coeffs: x.coeffs.iter().map(|a| (self.modulus - a) % self.modulus).collect(),
        }
    }

    pub fn sub(&self, x: &GaloisRingElem, y: &GaloisRingElem) -> GaloisRingElem {
        self.add(x, &self.neg(y))
    }

    pub fn scale(&self, x: &GaloisRingElem, c: u64) -> GaloisRingElem {
        GaloisRingElem {
            coeffs: x.coeffs.iter().map(|&a| mul_mod(a, c, self.modulus)).collect(),
        }
    }

    pub fn mul(&self, x: &GaloisRingElem, y: &GaloisRingElem) -> GaloisRingElem {
        let d = self.d();
        let m = self.modulus as u128;
        let mut prod = vec![0u128; 2 * d - 1];
        for (i, &a) in x.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a as u128 * b as u128) % m;
            }
        }
        let mut out: Vec<u128> = prod[..d].to_vec();
        for (j, &c) in prod[d..].iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (k, &h) in self.high_powers[j].iter().enumerate() {
                out[k] = (out[k] + c * h as u128) % m;
            }
        }
        GaloisRingElem { coeffs: out.into_iter().map(|c| c as u64).collect() }
    }

    pub fn pow(&self, x: &GaloisRingElem, mut e: u64) -> GaloisRingElem {
        let mut acc = self.one();
        let mut base = x.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    fn compute_high_powers(&self) -> Vec<Vec<u64>> {
        let d = self.d();
        let m = self.modulus;
        let mut out = Vec::new();
        // ξ^d = -(f_0 + f_1 ξ + ... + f_{d-1} ξ^{d-1})
        let mut cur: Vec<u64> = self.f[..d].iter().map(|&c| (m - c % m) % m).collect();
        for _ in 0..d.saturating_sub(1) {
            out.push(cur.clone());
            // multiply by ξ
            let top = cur[d - 1];
            let mut next = vec![0u64; d];
            next[1..d].copy_from_slice(&cur[..d - 1]);
            for k in 0..d {
                next[k] = (next[k] + mul_mod(top, (m - self.f[k] % m) % m, m)) % m;
            }
            cur = next;
        }
        out
    }

    fn eval_poly(&self, poly: &[u64], x: &GaloisRingElem) -> GaloisRingElem {
        let mut acc = self.zero();
        for &c in poly.iter().rev() {
            acc = self.mul(&acc, x);
            acc = self.add(&acc, &self.from_int(c as i64));
        }
        acc
    }

    /// Frobenius images of the power basis: the root of f congruent to ξ^l,
    /// refined by Newton iteration.
    fn compute_frobenius(&self) -> Vec<Vec<u64>> {
        let d = self.d();
        let xi = if d == 1 { self.zero() } else { self.basis(1) };
        let xi = if d == 1 {
            // f = x - r: ξ = r
            self.from_int(-(self.f[0] as i64))
        } else {
            xi
        };
        let fprime: Vec<u64> = (1..self.f.len())
            .map(|k| mul_mod(self.f[k], k as u64, self.modulus))
            .collect();
        let mut r = self.pow(&xi, self.params.l);
        for _ in 0..=self.params.a {
            let num = self.eval_poly(&self.f, &r);
            let den = self.eval_poly(&fprime, &r);
            let inv = self.inverse(&den).expect("f is separable mod l");
            r = self.sub(&r, &self.mul(&num, &inv));
        }
        let mut out = Vec::with_capacity(d);
        let mut cur = self.one();
        for _ in 0..d {
            out.push(cur.coeffs.clone());
            cur = self.mul(&cur, &r);
        }
        out
    }

    pub fn is_unit(&self, x: &GaloisRingElem) -> bool {
        x.coeffs.iter().any(|&c| c % self.params.l != 0)
    }

    /// Order of the unit group (O/π^t)^×.
    pub fn unit_count(&self, t: u32) -> u64 {
        let q = self.params.q();
        q.pow(t - 1) * (q - 1)
    }

    pub fn inverse(&self, x: &GaloisRingElem) -> Option<GaloisRingElem> {
        if !self.is_unit(x) {
            return None;
        }
        Some(self.pow(x, self.unit_count(self.params.a) - 1))
    }

    /// The Galois-ring Frobenius, the unique lift of y ↦ y^l.
    pub fn frobenius(&self, x: &GaloisRingElem) -> GaloisRingElem {
        let mut out = vec![0u128; self.d()];
        let m = self.modulus as u128;
        for (k, &c) in x.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (j, &b) in self.frob_basis[k].iter().enumerate() {
                out[j] = (out[j] + c as u128 * b as u128) % m;
            }
        }
        GaloisRingElem { coeffs: out.into_iter().map(|c| c as u64).collect() }
    }

    pub fn frobenius_pow(&self, x: &GaloisRingElem, k: u32) -> GaloisRingElem {
        (0..k).fold(x.clone(), |acc, _| self.frobenius(&acc))
    }

    fn trace_by_orbit(&self, x: &GaloisRingElem) -> u64 {
        let mut acc = self.zero();
        let mut cur = x.clone();
        for _ in 0..self.d() {
            acc = self.add(&acc, &cur);
            cur = self.frobenius(&cur);
        }
        debug_assert!(acc.coeffs[1..].iter().all(|&c| c == 0));
        acc.coeffs[0]
    }

    /// Tr_{K/Q_l} reduced into Z/l^a.
    pub fn trace(&self, x: &GaloisRingElem) -> u64 {
        x.coeffs
            .iter()
            .zip(&self.trace_basis)
            .fold(0u64, |acc, (&c, &t)| (acc + mul_mod(c, t, self.modulus)) % self.modulus)
    }

    /// Norm to the subring fixed by Frobenius^step, where step divides d.
    pub fn relative_norm(&self, x: &GaloisRingElem, step: u32) -> GaloisRingElem {
        let count = self.params.d / step;
        let mut acc = self.one();
        let mut cur = x.clone();
        for _ in 0..count {
            acc = self.mul(&acc, &cur);
            cur = self.frobenius_pow(&cur, step);
        }
        acc
    }

    /// Reduce coefficients modulo l^t.
    pub fn reduce(&self, x: &GaloisRingElem, t: u32) -> GaloisRingElem {
        let lt = self.params.l.pow(t);
        GaloisRingElem { coeffs: x.coeffs.iter().map(|c| c % lt).collect() }
    }

    /// Number of residues mod π^t, l^{dt}.
    pub fn residue_count(&self, t: u32) -> u64 {
        self.params.q().pow(t)
    }

    /// The residue mod π^t with the given index (base-l^t digits).
    pub fn element_from_index(&self, mut idx: u64, t: u32) -> GaloisRingElem {
        let lt = self.params.l.pow(t);
        let coeffs = (0..self.d())
            .map(|_| {
                let c = idx % lt;
                idx /= lt;
                c
            })
            .collect();
        GaloisRingElem { coeffs }
    }

    pub fn index_of(&self, x: &GaloisRingElem, t: u32) -> u64 {
        let lt = self.params.l.pow(t);
        x.coeffs.iter().rev().fold(0u64, |acc, &c| acc * lt + c % lt)
    }

    /// All units of O/π^t, each once, as representatives with coefficients
    /// in [0, l^t).
    pub fn units(&self, t: u32, cap: u64) -> Result<Vec<GaloisRingElem>> {
        if t == 0 || t > self.params.a {
            return Err(Error::Invalid(format!("unit level t={t} outside 1..={}", self.params.a)));
        }
        let total = self.residue_count(t);
        if total > cap {
            return Err(Error::Resource {
                what: format!("residues mod pi^{t} for l={}, d={}", self.params.l, self.params.d),
                required: total as u128,
                cap: cap as u128,
            });
        }
        Ok((0..total)
            .map(|i| self.element_from_index(i, t))
            .filter(|x| self.is_unit(x))
            .collect())
    }

    fn least_primitive(&self) -> Result<GaloisRingElem> {
        let q = self.params.q();
        let primes: Vec<u64> = factor(q - 1).into_iter().map(|(r, _)| r).collect();
        let res = self.residue_ring();
        for idx in 1..q {
            let g = self.element_from_index(idx, 1);
            if primes.iter().all(|&r| !res.is_one(&res.pow(&g, (q - 1) / r))) {
                return Ok(g);
            }
        }
        Err(Error::Invalid("residue field has no primitive element".into()))
    }

    /// The residue field F_q sharing this ring's defining polynomial.
    pub fn residue_ring(&self) -> ResidueField {
        ResidueField::new(self.params.l, &self.f)
    }

    /// Discrete log of a unit's residue with respect to the residue generator.
    pub fn residue_dlog(&self, u: &GaloisRingElem) -> Result<u64> {
        self.residue_ring().dlog(&self.generator, u)
    }
}

/// F_q = F_l[x]/(f), used for discrete logarithms on residues.
pub struct ResidueField {
    l: u64,
    f: Vec<u64>,
}

impl ResidueField {
    fn new(l: u64, f: &[u64]) -> Self {
        ResidueField { l, f: f.iter().map(|c| c % l).collect() }
    }

    fn d(&self) -> usize {
        self.f.len() - 1
    }

    fn q(&self) -> u64 {
        self.l.pow(self.d() as u32)
    }

    fn reduce(&self, x: &GaloisRingElem) -> Vec<u64> {
        x.coeffs.iter().map(|c| c % self.l).collect()
    }

    fn is_one(&self, x: &GaloisRingElem) -> bool {
        let r = self.reduce(x);
        r[0] == 1 && r[1..].iter().all(|&c| c == 0)
    }

    fn mul(&self, x: &GaloisRingElem, y: &GaloisRingElem) -> GaloisRingElem {
        GaloisRingElem { coeffs: fp_mulmod(&self.reduce(x), &self.reduce(y), &self.f, self.l) }
    }

    fn pow(&self, x: &GaloisRingElem, mut e: u64) -> GaloisRingElem {
        let mut acc = vec![0u64; self.d()];
        acc[0] = 1;
        let mut acc = GaloisRingElem { coeffs: acc };
        let mut base = GaloisRingElem { coeffs: self.reduce(x) };
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    fn key(&self, x: &GaloisRingElem) -> u64 {
        self.reduce(x).iter().rev().fold(0, |acc, &c| acc * self.l + c)
    }

    /// Baby-step giant-step discrete log of `x` to base `g`.
    pub fn dlog(&self, g: &GaloisRingElem, x: &GaloisRingElem) -> Result<u64> {
        let order = self.q() - 1;
        if self.reduce(x).iter().all(|&c| c == 0) {
            return Err(Error::NotUnit("discrete log of a non-unit".into()));
        }
        let m = (order as f64).sqrt().ceil() as u64 + 1;
        let mut table = HashMap::with_capacity(m as usize);
        let mut cur = self.pow(g, 0);
        for j in 0..m {
            table.entry(self.key(&cur)).or_insert(j);
            cur = self.mul(&cur, g);
        }
        let step = self.pow(g, order - (m % order));
        let mut y = GaloisRingElem { coeffs: self.reduce(x) };
        for i in 0..=m {
            if let Some(&j) = table.get(&self.key(&y)) {
                return Ok((i * m + j) % order);
            }
            y = self.mul(&y, &step);
        }
        Err(Error::Invalid("discrete logarithm not found".into()))
    }
}

// --- polynomials over F_l, low degree first ---

fn fp_trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
    a
}

fn fp_rem(a: &[u64], b: &[u64], l: u64) -> Vec<u64> {
    let b = fp_trim(b.to_vec());
    let mut r = fp_trim(a.to_vec());
    let db = b.len() - 1;
    let lead_inv = pow_mod(b[db], l - 2, l);
    while r.len() > db && !(r.len() == 1 && r[0] == 0) {
        let dr = r.len() - 1;
        let c = mul_mod(r[dr], lead_inv, l);
        for (i, &bc) in b.iter().enumerate() {
            let k = dr - db + i;
            r[k] = (r[k] + l - mul_mod(c, bc, l)) % l;
        }
        r = fp_trim(r);
        if dr == 0 {
            break;
        }
    }
    r
}

fn fp_mulmod(a: &[u64], b: &[u64], f: &[u64], l: u64) -> Vec<u64> {
    let d = f.len() - 1;
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + mul_mod(x, y, l)) % l;
        }
    }
    let mut r = fp_rem(&prod, f, l);
    r.resize(d, 0);
    r
}

fn fp_gcd(a: &[u64], b: &[u64], l: u64) -> Vec<u64> {
    let (mut x, mut y) = (fp_trim(a.to_vec()), fp_trim(b.to_vec()));
    while !(y.len() == 1 && y[0] == 0) {
        let r = fp_rem(&x, &y, l);
        x = y;
        y = r;
    }
    x
}

/// x^(l^k) mod f.
fn fp_frob_power(f: &[u64], l: u64, k: u32) -> Vec<u64> {
    let d = f.len() - 1;
    let mut x = vec![0u64; d.max(2)];
    x[1 % d.max(2)] = 1;
    let mut cur = fp_rem(&x, f, l);
    cur.resize(d, 0);
    for _ in 0..k {
        // raise to the l-th power
        let mut acc = vec![0u64; d];
        acc[0] = 1;
        for _ in 0..l {
            acc = fp_mulmod(&acc, &cur, f, l);
        }
        cur = acc;
    }
    cur
}

/// Rabin's irreducibility test over F_l.
pub fn is_irreducible(f: &[u64], l: u64) -> bool {
    let d = f.len() - 1;
    if d == 1 {
        return true;
    }
    let sub_x = |mut p: Vec<u64>| {
        p[1] = (p[1] + l - 1) % l;
        p
    };
    if fp_trim(sub_x(fp_frob_power(f, l, d as u32))) != vec![0] {
        return false;
    }
    for (r, _) in factor(d as u64) {
        let h = sub_x(fp_frob_power(f, l, (d as u64 / r) as u32));
        let g = fp_gcd(f, &h, l);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

/// The monic irreducible polynomial of degree d over F_l whose coefficient
/// vector (c_0, ..., c_{d-1}) has the least base-l value.
pub fn least_irreducible(l: u64, d: u32) -> Vec<u64> {
    let d = d as usize;
    let total = l.pow(d as u32);
    for idx in 0..total {
        let mut f = Vec::with_capacity(d + 1);
        let mut rest = idx;
        for _ in 0..d {
            f.push(rest % l);
            rest /= l;
        }
        f.push(1);
        if d > 1 && f[0] == 0 {
            continue;
        }
        if is_irreducible(&f, l) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Additive character ψ(x) = ψ_std(unit_twist · π^level · x).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdditiveCharSpec {
    pub level: i64,
    pub unit_twist: GaloisRingElem,
}

impl AdditiveCharSpec {
    pub fn standard(ring: &GaloisRing) -> Self {
        AdditiveCharSpec { level: 0, unit_twist: ring.one() }
    }

    pub fn new(ring: &GaloisRing, level: i64, unit_twist: GaloisRingElem) -> Result<Self> {
        if !ring.is_unit(&unit_twist) {
            return Err(Error::NotUnit("additive character twist must be a unit".into()));
        }
        Ok(AdditiveCharSpec { level, unit_twist })
    }

    /// n(ψ): the largest n with ψ trivial on π^{-n} O_K.
    pub fn conductor_level(&self) -> i64 {
        self.level
    }

    /// ψ_c(x) = ψ(c x) for a unit c.
    pub fn twisted(&self, ring: &GaloisRing, c: &GaloisRingElem) -> Self {
        AdditiveCharSpec { level: self.level, unit_twist: ring.mul(&self.unit_twist, c) }
    }
}

/// Exponent e with ψ(u · π^{-t-level}) = ζ_{l^t}^e.
pub fn psi_exponent(ring: &GaloisRing, spec: &AdditiveCharSpec, u: &GaloisRingElem, t: u32) -> Result<u64> {
    if t > ring.params().a {
        return Err(Error::Invalid(format!(
            "pole depth t={t} exceeds truncation level a={}",
            ring.params().a
        )));
    }
    let lt = ring.params().l.pow(t);
    Ok(ring.trace(&ring.mul(&spec.unit_twist, u)) % lt)
}

/// ψ(u · π^{-t-level}) as an exact l^t-th root of unity.
pub fn psi_value(ring: &GaloisRing, spec: &AdditiveCharSpec, u: &GaloisRingElem, t: u32) -> Result<CycloElem> {
    let e = psi_exponent(ring, spec, u, t)?;
    let params = ring.params();
    let m = CycloModulus::new(params.l, t, params.p, 0, 1)?;
    Ok(CycloElem::root_of_unity(m, [e, 0, 0]))
}

/// Ring embedding GR(l^a, d) → GR(l^a, d') for d | d', sending ξ to the
/// least root of the source polynomial in the target, Hensel-lifted.
#[derive(Clone, Debug)]
pub struct Embedding {
    images: Vec<GaloisRingElem>,
}

impl Embedding {
    pub fn new(src: &GaloisRing, dst: &GaloisRing) -> Result<Self> {
        let (sp, dp) = (src.params(), dst.params());
        if sp.l != dp.l || sp.a != dp.a || dp.d % sp.d != 0 {
            return Err(Error::Invalid(format!(
                "no embedding from degree {} into degree {}",
                sp.d, dp.d
            )));
        }
        let f = src.defining_poly();
        let fprime: Vec<u64> = (1..f.len()).map(|k| mul_mod(f[k], k as u64, dst.char_modulus())).collect();
        let mut root = None;
        for idx in 0..dst.residue_count(1) {
            let x = dst.element_from_index(idx, 1);
            if dst.eval_poly(f, &x).coeffs.iter().all(|c| c % sp.l == 0) {
                root = Some(x);
                break;
            }
        }
        let mut r = root.ok_or_else(|| Error::Invalid("source polynomial has no root".into()))?;
        for _ in 0..=sp.a {
            let num = dst.eval_poly(f, &r);
            let den = dst.eval_poly(&fprime, &r);
            let inv = dst.inverse(&den).expect("separable");
            r = dst.sub(&r, &dst.mul(&num, &inv));
        }
        let xi_image = if src.d() == 1 { dst.from_int(-(f[0] as i64)) } else { r };
        let mut images = Vec::with_capacity(src.d());
        let mut cur = dst.one();
        for _ in 0..src.d() {
            images.push(cur.clone());
            cur = dst.mul(&cur, &xi_image);
        }
        Ok(Embedding { images })
    }

    pub fn apply(&self, dst: &GaloisRing, x: &GaloisRingElem) -> GaloisRingElem {
        x.coeffs
            .iter()
            .zip(&self.images)
            .fold(dst.zero(), |acc, (&c, img)| dst.add(&acc, &dst.scale(img, c)))
    }
}

/// Serialized Galois-ring element: coefficients plus the ring it lives in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaloisRingJson {
    pub l: u64,
    pub a: u32,
    pub d: u32,
    pub f: Vec<u64>,
    pub coeffs: Vec<u64>,
}

impl GaloisRing {
    pub fn to_json(&self, x: &GaloisRingElem) -> GaloisRingJson {
        GaloisRingJson {
            l: self.params.l,
            a: self.params.a,
            d: self.params.d,
            f: self.f.clone(),
            coeffs: x.coeffs.clone(),
        }
    }

    pub fn from_json(&self, j: &GaloisRingJson) -> Result<GaloisRingElem> {
        if j.l != self.params.l || j.d != self.params.d || j.f != self.f {
            return Err(Error::Serialization("Galois ring element from a different ring".into()));
        }
        let coeffs: Vec<i64> = j.coeffs.iter().map(|&c| c as i64).collect();
        self.from_coeffs(&coeffs)
    }
}
