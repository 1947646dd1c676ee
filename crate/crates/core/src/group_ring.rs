//! Sparse group rings F[A] over a finite abelian group A with exact
//! cyclotomic coefficients, where F = Q(ζ_N) stands in for J.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::cyclo::{CycloElem, CycloJson, CycloModulus};
use crate::error::{Error, Result};
use crate::group::{Character, FinAbGroup, FinAbHom, GroupElem};

/// Σ_g c_g · g, stored by group-element index with no zero coefficients.
#[derive(Clone, Debug)]
pub struct GroupRingElem {
    group: FinAbGroup,
    /// the (l, p) pair of the coefficient family
    lp: (u64, u64),
    coeffs: BTreeMap<u64, CycloElem>,
}

impl GroupRingElem {
    pub fn zero(group: &FinAbGroup, l: u64, p: u64) -> Self {
        GroupRingElem { group: group.clone(), lp: (l, p), coeffs: BTreeMap::new() }
    }

    pub fn one(group: &FinAbGroup, l: u64, p: u64) -> Self {
        Self::basis(group, &group.identity(), CycloElem::one(CycloModulus::rational(l, p).unwrap()))
    }

    /// c · g.
    pub fn basis(group: &FinAbGroup, g: &[u64], c: CycloElem) -> Self {
        let m = c.modulus();
        let mut x = Self::zero(group, m.l(), m.p());
        x.add_term(g, c);
        x
    }

    pub fn from_terms(group: &FinAbGroup, l: u64, p: u64, terms: impl IntoIterator<Item = (GroupElem, CycloElem)>) -> Self {
        let mut x = Self::zero(group, l, p);
        for (g, c) in terms {
            x.add_term(&g, c);
        }
        x
    }

    pub fn group(&self) -> &FinAbGroup {
        &self.group
    }

    pub fn lp(&self) -> (u64, u64) {
        self.lp
    }

    fn rational_modulus(&self) -> CycloModulus {
        CycloModulus::rational(self.lp.0, self.lp.1).unwrap()
    }

    pub fn add_term(&mut self, g: &[u64], c: CycloElem) {
        if c.is_zero() {
            return;
        }
        let idx = self.group.index(g);
        match self.coeffs.remove(&idx) {
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.coeffs.insert(idx, s);
                }
            }
            None => {
                self.coeffs.insert(idx, c);
            }
        }
    }

    pub fn coeff(&self, g: &[u64]) -> CycloElem {
        self.coeffs
            .get(&self.group.index(g))
            .cloned()
            .unwrap_or_else(|| CycloElem::zero(self.rational_modulus()))
    }

    pub fn terms(&self) -> impl Iterator<Item = (GroupElem, &CycloElem)> + '_ {
        self.coeffs.iter().map(|(&i, c)| (self.group.element(i), c))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs.get(&0).is_some_and(|c| c.is_one())
    }

    /// Smallest cyclotomic modulus containing every coefficient.
    pub fn coefficient_modulus(&self) -> CycloModulus {
        self.coeffs
            .values()
            .fold(self.rational_modulus(), |m, c| m.join(c.modulus()))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&i, c) in &other.coeffs {
            out.add_term(&self.group.element(i), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| -c)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.group, other.group);
        let mut out = Self::zero(&self.group, self.lp.0, self.lp.1);
        for (&i, a) in &self.coeffs {
            let g = self.group.element(i);
            for (&j, b) in &other.coeffs {
                let h = self.group.element(j);
                out.add_term(&self.group.add(&g, &h), a * b);
            }
        }
        out
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut acc = Self::one(&self.group, self.lp.0, self.lp.1);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn scale(&self, c: &CycloElem) -> Self {
        self.map_coeffs(|x| x * c)
    }

    pub fn scale_rational(&self, q: &BigRational) -> Self {
        self.map_coeffs(|x| x.scale(q))
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.map_coeffs(|x| x.scale_int(&BigInt::from(n)))
    }

    pub fn map_coeffs(&self, f: impl Fn(&CycloElem) -> CycloElem) -> Self {
        let mut out = Self::zero(&self.group, self.lp.0, self.lp.1);
        for (&i, c) in &self.coeffs {
            let v = f(c);
            if !v.is_zero() {
                out.coeffs.insert(i, v);
            }
        }
        out
    }

    /// Coefficient-wise arithmetic Frobenius at p.
    pub fn frobenius_p(&self) -> Self {
        self.map_coeffs(|c| c.frobenius_p())
    }

    /// Apply a map of group elements, linearly: Σ c_g g ↦ Σ c_g f(g).
    pub fn map_group(&self, target: &FinAbGroup, f: impl Fn(&[u64]) -> GroupElem) -> Self {
        let mut out = Self::zero(target, self.lp.0, self.lp.1);
        for (g, c) in self.terms() {
            out.add_term(&f(&g), c.clone());
        }
        out
    }

    /// Push-forward along a group homomorphism.
    pub fn push_forward(&self, hom: &FinAbHom) -> Self {
        self.map_group(&hom.target, |g| hom.apply(g))
    }

    /// Σ c_g χ(g).
    pub fn evaluate(&self, chi: &Character) -> CycloElem {
        let (l, p) = self.lp;
        let mut acc = CycloElem::zero(self.rational_modulus());
        for (g, c) in self.terms() {
            acc = acc + c * chi.value(&g, l, p).expect("character values live in the (l, p) family");
        }
        acc
    }

    /// Σ c_g, the value at the trivial character.
    pub fn augmentation(&self) -> CycloElem {
        self.coeffs
            .values()
            .fold(CycloElem::zero(self.rational_modulus()), |acc, c| acc + c)
    }

    /// True iff every coefficient is divisible by p^k in the p-integral sense.
    pub fn p_divisible(&self, k: i64) -> bool {
        self.coeffs.values().all(|c| c.p_divisible(k))
    }

    pub fn is_p_integral(&self) -> bool {
        self.p_divisible(0)
    }

    pub fn has_l_power_denominators(&self) -> bool {
        self.coeffs.values().all(|c| c.has_l_power_denominator())
    }

    /// Coefficient-wise reduction into [0, p^r) on the tensor basis.
    pub fn reduce_mod_p_power(&self, r: u32) -> Self {
        self.map_coeffs(|c| c.reduce_mod_p_power(r))
    }

    /// Multiplicative inverse by Gaussian elimination over the coefficient field.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.group.order() as usize;
        let (l, p) = self.lp;
        let zero = CycloElem::zero(self.rational_modulus());
        // column g of M is x·g: M[h][g] = c_{h-g}
        let mut m: Vec<Vec<CycloElem>> = (0..n)
            .map(|hi| {
                let h = self.group.element(hi as u64);
                (0..n)
                    .map(|gi| {
                        let g = self.group.element(gi as u64);
                        self.coeff(&self.group.sub(&h, &g))
                    })
                    .collect()
            })
            .collect();
        let mut rhs: Vec<CycloElem> = (0..n)
            .map(|i| if i == 0 { CycloElem::one(self.rational_modulus()) } else { zero.clone() })
            .collect();
        for col in 0..n {
            let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
            m.swap(col, piv);
            rhs.swap(col, piv);
            let inv = m[col][col].inverse()?;
            for j in col..n {
                m[col][j] = &m[col][j] * &inv;
            }
            rhs[col] = &rhs[col] * &inv;
            for r in 0..n {
                if r == col || m[r][col].is_zero() {
                    continue;
                }
                let f = m[r][col].clone();
                for j in col..n {
                    let t = &f * &m[col][j];
                    m[r][j] = &m[r][j] - &t;
                }
                let t = &f * &rhs[col];
                rhs[r] = &rhs[r] - &t;
            }
        }
        let inv = Self::from_terms(&self.group, l, p, rhs.into_iter().enumerate().map(|(i, c)| (self.group.element(i as u64), c)));
        debug_assert!(self.mul(&inv).is_one());
        Some(inv)
    }

    pub fn to_json(&self) -> Result<GroupRingJson> {
        Ok(GroupRingJson {
            group: self.group.orders().to_vec(),
            l: self.lp.0,
            p: self.lp.1,
            terms: self
                .terms()
                .map(|(g, c)| Ok((g, c.to_json()?)))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn from_json(j: &GroupRingJson) -> Result<Self> {
        let group = FinAbGroup::new(j.group.clone())?;
        let mut x = Self::zero(&group, j.l, j.p);
        for (g, c) in &j.terms {
            if !group.contains(g) {
                return Err(Error::Serialization(format!("{g:?} is not an element of {:?}", j.group)));
            }
            let c = CycloElem::from_json(c)?;
            if (c.modulus().l(), c.modulus().p()) != (j.l, j.p) {
                return Err(Error::Serialization("coefficient from a different (l, p) family".into()));
            }
            x.add_term(g, c);
        }
        Ok(x)
    }
}

impl PartialEq for GroupRingElem {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.coeffs == other.coeffs
    }
}

impl Eq for GroupRingElem {}

impl fmt::Display for GroupRingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms()
            .map(|(g, c)| {
                if self.group.is_identity(&g) {
                    format!("({c})")
                } else {
                    format!("({c})*{g:?}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// JSON form: group orders, the (l, p) family, and (element, coefficient) terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRingJson {
    pub group: Vec<u64>,
    pub l: u64,
    pub p: u64,
    pub terms: Vec<(GroupElem, CycloJson)>,
}

/// Evidence that an element is a unit of J[A].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitCertificate {
    /// an inverse was found and x · x^{-1} = 1 verified exactly
    pub inverse_found: bool,
    /// the inverse has p-integral coefficients, so it lies in J[A]
    pub inverse_p_integral: bool,
    /// the inverse has l-power denominators (lies in Z[1/l][ζ][A])
    pub inverse_l_power_denominators: bool,
    /// every character value is a p-adic unit (maximal-order criterion)
    pub character_values_p_units: bool,
    pub characters_checked: usize,
}

impl UnitCertificate {
    pub fn is_unit(&self) -> bool {
        self.inverse_found && self.inverse_p_integral && self.character_values_p_units
    }
}

/// Certify that x is a unit of J[A], returning the inverse when it exists.
pub fn certify_unit(x: &GroupRingElem) -> (UnitCertificate, Option<GroupRingElem>) {
    let inv = if x.is_p_integral() { x.inverse() } else { None };
    let chars = x.group().characters();
    let char_ok = x.is_p_integral()
        && chars.iter().all(|chi| {
            let v = x.evaluate(chi);
            !v.is_zero() && v.norm_p_valuation() == 0
        });
    let cert = UnitCertificate {
        inverse_found: inv.is_some(),
        inverse_p_integral: inv.as_ref().is_some_and(|y| y.is_p_integral()),
        inverse_l_power_denominators: inv.as_ref().is_some_and(|y| y.has_l_power_denominators()),
        character_values_p_units: char_ok,
        characters_checked: chars.len(),
    };
    (cert, inv)
}

/// Determinant of a square matrix over the commutative ring F[A], by
/// dynamic programming over column subsets (division-free, O(r 2^r) products).
pub fn det(matrix: &[Vec<GroupRingElem>], group: &FinAbGroup, l: u64, p: u64) -> GroupRingElem {
    let r = matrix.len();
    if r == 0 {
        return GroupRingElem::one(group, l, p);
    }
    let mut partial: Vec<Option<GroupRingElem>> = vec![None; 1 << r];
    partial[0] = Some(GroupRingElem::one(group, l, p));
    for mask in 0usize..(1 << r) {
        let Some(cur) = partial[mask].take() else { continue };
        let row = mask.count_ones() as usize;
        if row == r {
            partial[mask] = Some(cur);
            continue;
        }
        for col in 0..r {
            if mask & (1 << col) != 0 || matrix[row][col].is_zero() {
                continue;
            }
            let inversions = (mask >> (col + 1)).count_ones();
            let mut term = cur.mul(&matrix[row][col]);
            if inversions % 2 == 1 {
                term = term.neg();
            }
            let next = mask | (1 << col);
            partial[next] = Some(match partial[next].take() {
                Some(acc) => acc.add(&term),
                None => term,
            });
        }
    }
    partial[(1 << r) - 1].take().unwrap_or_else(|| GroupRingElem::zero(group, l, p))
}

/// ρ-component of x ∈ F[A] where factor `axis` of A is Δ: (δ, h) ↦ ρ(δ) h.
pub fn delta_component(x: &GroupRingElem, axis: usize, rho: &Character) -> Result<GroupRingElem> {
    let group = x.group();
    if axis >= group.rank() || rho.group.orders() != [group.orders()[axis]] {
        return Err(Error::Invalid("character is not a character of the Δ factor".into()));
    }
    let (l, p) = x.lp();
    let h = complement(group, axis);
    let mut out = GroupRingElem::zero(&h, l, p);
    for (g, c) in x.terms() {
        let v = rho.value(&[g[axis]], l, p)?;
        out.add_term(&drop_axis(&g, axis), c * &v);
    }
    Ok(out)
}

/// Reconstruct x from its ρ-components over all characters of Δ:
/// c_{(δ,h)} = |Δ|^{-1} Σ_ρ ρ(δ)^{-1} x_ρ[h].
pub fn delta_reconstruct(group: &FinAbGroup, axis: usize, components: &[(Character, GroupRingElem)]) -> Result<GroupRingElem> {
    let m = group.orders()[axis];
    if components.len() as u64 != m {
        return Err(Error::Invalid("need one component per character of Δ".into()));
    }
    let (l, p) = components[0].1.lp();
    let inv_m = BigRational::new(BigInt::one(), BigInt::from(m));
    let mut out = GroupRingElem::zero(group, l, p);
    for g in group.elements() {
        let h = drop_axis(&g, axis);
        let mut acc = CycloElem::zero(CycloModulus::rational(l, p)?);
        for (rho, comp) in components {
            let c = comp.coeff(&h);
            if c.is_zero() {
                continue;
            }
            acc = acc + c * rho.inverse().value(&[g[axis]], l, p)?;
        }
        out.add_term(&g, acc.scale(&inv_m));
    }
    Ok(out)
}

/// The group with factor `axis` removed.
pub fn complement(group: &FinAbGroup, axis: usize) -> FinAbGroup {
    let mut orders = group.orders().to_vec();
    orders.remove(axis);
    FinAbGroup::new(orders).unwrap()
}

fn drop_axis(g: &[u64], axis: usize) -> GroupElem {
    let mut h = g.to_vec();
    h.remove(axis);
    h
}

impl CycloElem {
    /// p-adic valuation of the absolute norm (0 iff a unit above p).
    pub fn norm_p_valuation(&self) -> i64 {
        let n = self.norm();
        if n.is_zero() {
            return i64::MAX;
        }
        let p = BigInt::from(self.modulus().p());
        let v = |x: &BigInt| {
            let mut x = x.clone();
            let mut k = 0i64;
            while (&x % &p).is_zero() {
                x /= &p;
                k += 1;
            }
            k
        };
        v(n.numer()) - v(n.denom())
    }
}
