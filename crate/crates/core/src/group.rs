//! Finite abelian groups as products of cyclic factors, their characters,
//! homomorphisms and quotients, and the metabelian tower group
//! G = (N ⋊ Γ) × Δ with its abelianized levels and transfer maps.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::arith::{gcd, is_prime, lcm, pow_mod};
use crate::cyclo::CycloElem;
use crate::error::{Error, Result};
use crate::linalg::smith;

pub type GroupElem = Vec<u64>;

/// A finite abelian group Z/o_1 × ... × Z/o_r, written additively.
///
/// The cyclic factors are kept as given (factors of order 1 are allowed) so
/// that product structure such as a Δ factor stays addressable;
/// `invariant_factors` gives the Smith normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FinAbGroup {
    orders: Vec<u64>,
}

impl FinAbGroup {
    pub fn new(orders: Vec<u64>) -> Result<Self> {
        if orders.iter().any(|&o| o == 0) {
            return Err(Error::Invalid("cyclic factor of order 0".into()));
        }
        Ok(FinAbGroup { orders })
    }

    pub fn cyclic(n: u64) -> Self {
        FinAbGroup { orders: vec![n.max(1)] }
    }

    pub fn trivial() -> Self {
        FinAbGroup { orders: vec![] }
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn order(&self) -> u64 {
        self.orders.iter().product()
    }

    pub fn exponent(&self) -> u64 {
        self.orders.iter().fold(1, |acc, &o| lcm(acc, o))
    }

    pub fn invariant_factors(&self) -> Vec<u64> {
        let r = self.rank();
        let m: Vec<Vec<i128>> = (0..r)
            .map(|i| (0..r).map(|j| if i == j { self.orders[i] as i128 } else { 0 }).collect())
            .collect();
        smith(&m)
            .diagonal()
            .into_iter()
            .map(|x| x as u64)
            .filter(|&x| x != 1)
            .collect()
    }

    pub fn identity(&self) -> GroupElem {
        vec![0; self.rank()]
    }

    pub fn is_identity(&self, g: &[u64]) -> bool {
        g.iter().all(|&x| x == 0)
    }

    pub fn contains(&self, g: &[u64]) -> bool {
        g.len() == self.rank() && g.iter().zip(&self.orders).all(|(x, o)| x < o)
    }

    pub fn normalize(&self, g: &[i64]) -> GroupElem {
        g.iter()
            .zip(&self.orders)
            .map(|(&x, &o)| x.rem_euclid(o as i64) as u64)
            .collect()
    }

    pub fn add(&self, g: &[u64], h: &[u64]) -> GroupElem {
        g.iter()
            .zip(h)
            .zip(&self.orders)
            .map(|((a, b), o)| (a + b) % o)
            .collect()
    }

    pub fn neg(&self, g: &[u64]) -> GroupElem {
        g.iter().zip(&self.orders).map(|(a, o)| (o - a % o) % o).collect()
    }

    pub fn sub(&self, g: &[u64], h: &[u64]) -> GroupElem {
        self.add(g, &self.neg(h))
    }

    pub fn scale(&self, g: &[u64], k: i64) -> GroupElem {
        g.iter()
            .zip(&self.orders)
            .map(|(&a, &o)| ((a as i128 * k as i128).rem_euclid(o as i128)) as u64)
            .collect()
    }

    pub fn element_order(&self, g: &[u64]) -> u64 {
        g.iter()
            .zip(&self.orders)
            .fold(1, |acc, (&a, &o)| lcm(acc, o / gcd(a, o)))
    }

    /// Mixed-radix index, first factor least significant.
    pub fn index(&self, g: &[u64]) -> u64 {
        g.iter()
            .zip(&self.orders)
            .rev()
            .fold(0, |acc, (&a, &o)| acc * o + a)
    }

    pub fn element(&self, mut idx: u64) -> GroupElem {
        self.orders
            .iter()
            .map(|&o| {
                let a = idx % o;
                idx /= o;
                a
            })
            .collect()
    }

    pub fn elements(&self) -> Vec<GroupElem> {
        (0..self.order()).map(|i| self.element(i)).collect()
    }

    /// Generators e_k of the cyclic factors.
    pub fn generators(&self) -> Vec<GroupElem> {
        (0..self.rank())
            .map(|k| {
                let mut g = self.identity();
                if self.orders[k] > 1 {
                    g[k] = 1;
                }
                g
            })
            .collect()
    }

    /// Elements of the subgroup generated by `gens`, sorted by index.
    pub fn closure(&self, gens: &[GroupElem]) -> Vec<GroupElem> {
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        let id = self.identity();
        seen.insert(self.index(&id));
        queue.push_back(id);
        let mut out = Vec::new();
        while let Some(g) = queue.pop_front() {
            for s in gens {
                let h = self.add(&g, s);
                if seen.insert(self.index(&h)) {
                    queue.push_back(h);
                }
            }
            out.push(g);
        }
        out.sort_by_key(|g| self.index(g));
        out
    }

    /// All subgroups, each as its sorted element list, ordered by size then content.
    pub fn subgroups(&self, cap: u64) -> Result<Vec<Vec<GroupElem>>> {
        if self.order() > cap {
            return Err(Error::Resource {
                what: "subgroup lattice".into(),
                required: self.order() as u128,
                cap: cap as u128,
            });
        }
        let key = |s: &Vec<GroupElem>| -> Vec<u64> { s.iter().map(|g| self.index(g)).collect() };
        let mut found: HashMap<Vec<u64>, Vec<GroupElem>> = HashMap::new();
        let cyclic: Vec<Vec<GroupElem>> = self
            .elements()
            .into_iter()
            .map(|g| self.closure(&[g]))
            .collect();
        for c in &cyclic {
            found.insert(key(c), c.clone());
        }
        loop {
            let current: Vec<Vec<GroupElem>> = found.values().cloned().collect();
            let mut added = false;
            for s in &current {
                for c in &cyclic {
                    let mut gens: Vec<GroupElem> = s.clone();
                    gens.extend(c.iter().cloned());
                    let j = self.closure(&gens);
                    if let std::collections::hash_map::Entry::Vacant(v) = found.entry(key(&j)) {
                        v.insert(j);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
        let mut out: Vec<Vec<GroupElem>> = found.into_values().collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| key(a).cmp(&key(b))));
        Ok(out)
    }

    /// Quotient by the subgroup generated by `gens`, with the quotient map.
    pub fn quotient(&self, gens: &[GroupElem]) -> Result<(FinAbGroup, FinAbHom)> {
        let r = self.rank();
        for g in gens {
            if !self.contains(g) {
                return Err(Error::NotSubgroup(format!("{g:?} is not an element of {:?}", self.orders)));
            }
        }
        let mut rel: Vec<Vec<i128>> = gens.iter().map(|g| g.iter().map(|&x| x as i128).collect()).collect();
        for k in 0..r {
            let mut row = vec![0i128; r];
            row[k] = self.orders[k] as i128;
            rel.push(row);
        }
        let snf = smith(&rel);
        let diag = snf.diagonal();
        let keep: Vec<usize> = (0..r).filter(|&k| diag[k] != 1).collect();
        let q = FinAbGroup { orders: keep.iter().map(|&k| diag[k] as u64).collect() };
        // x ↦ x V, coordinates mod d_k
        let images = self
            .generators()
            .iter()
            .enumerate()
            .map(|(i, _)| {
                keep.iter()
                    .map(|&k| snf.v[i][k].rem_euclid(diag[k]) as u64)
                    .collect::<GroupElem>()
            })
            .collect();
        let map = FinAbHom::new(self.clone(), q.clone(), images)?;
        Ok((q, map))
    }

    pub fn characters(&self) -> Vec<Character> {
        self.elements()
            .into_iter()
            .map(|exps| Character { group: self.clone(), exps })
            .collect()
    }
}

/// Homomorphism of finite abelian groups, given by the images of the
/// factor generators e_k.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinAbHom {
    pub source: FinAbGroup,
    pub target: FinAbGroup,
    pub images: Vec<GroupElem>,
}

impl FinAbHom {
    pub fn new(source: FinAbGroup, target: FinAbGroup, images: Vec<GroupElem>) -> Result<Self> {
        if images.len() != source.rank() {
            return Err(Error::Invalid("one image per source generator required".into()));
        }
        for (k, img) in images.iter().enumerate() {
            if !target.contains(img) {
                return Err(Error::Invalid(format!("image {img:?} not in target")));
            }
            if !target.is_identity(&target.scale(img, source.orders[k] as i64)) {
                return Err(Error::Invalid(format!(
                    "generator {k} of order {} maps to {img:?} of order {}",
                    source.orders[k],
                    target.element_order(img)
                )));
            }
        }
        Ok(FinAbHom { source, target, images })
    }

    pub fn apply(&self, g: &[u64]) -> GroupElem {
        g.iter().zip(&self.images).fold(self.target.identity(), |acc, (&c, img)| {
            self.target.add(&acc, &self.target.scale(img, c as i64))
        })
    }

    pub fn is_surjective(&self) -> bool {
        self.target.closure(&self.images).len() as u64 == self.target.order()
    }

    pub fn kernel(&self) -> Vec<GroupElem> {
        self.source
            .elements()
            .into_iter()
            .filter(|g| self.target.is_identity(&self.apply(g)))
            .collect()
    }
}

/// A character χ of a finite abelian group: χ(g) = ζ_E^{Σ_k χ_k g_k E/o_k}
/// with E the exponent of the group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Character {
    pub group: FinAbGroup,
    pub exps: Vec<u64>,
}

impl Character {
    pub fn trivial(group: &FinAbGroup) -> Self {
        Character { group: group.clone(), exps: group.identity() }
    }

    /// Exponent of χ(g) as a power of ζ_E, E = exponent of the group.
    pub fn exponent_at(&self, g: &[u64]) -> u64 {
        let e = self.group.exponent();
        let mut acc = 0u128;
        for ((&c, &x), &o) in self.exps.iter().zip(g).zip(&self.group.orders) {
            acc += c as u128 * x as u128 * (e / o) as u128;
        }
        (acc % e as u128) as u64
    }

    pub fn value(&self, g: &[u64], l: u64, p: u64) -> Result<CycloElem> {
        CycloElem::zeta(l, p, self.group.exponent(), self.exponent_at(g) as i64)
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.iter().all(|&c| c == 0)
    }

    pub fn inverse(&self) -> Self {
        Character { group: self.group.clone(), exps: self.group.neg(&self.exps) }
    }

    pub fn mul(&self, other: &Character) -> Self {
        Character { group: self.group.clone(), exps: self.group.add(&self.exps, &other.exps) }
    }

    pub fn kills(&self, g: &[u64]) -> bool {
        self.exponent_at(g) == 0
    }

    /// Order of χ in the character group.
    pub fn order(&self) -> u64 {
        self.group.element_order(&self.exps)
    }
}

/// Element (x, y, z) of G = (Z/p^s ⋊ Z/p^n) × Z/mΔ.
pub type MetaElem = (u64, u64, u64);

/// The metabelian tower group G = (N ⋊ Γ) × Δ with N = Z/p^s, Γ = Z/p^n
/// acting by γ x γ^{-1} = x^e, and Δ cyclic of order prime to p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetabelianGroup {
    pub p: u64,
    pub s: u32,
    pub n: u32,
    pub e: u64,
    pub m_delta: u64,
}

impl MetabelianGroup {
    pub fn new(p: u64, s: u32, n: u32, e: u64, m_delta: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Invalid(format!("p={p} is not prime")));
        }
        if m_delta == 0 || m_delta % p == 0 {
            return Err(Error::Invalid(format!("m_delta={m_delta} must be positive and prime to p={p}")));
        }
        let ps = p.pow(s);
        if gcd(e, p) != 1 && ps > 1 {
            return Err(Error::Invalid(format!("action exponent e={e} must be prime to p={p}")));
        }
        if pow_mod(e, p.pow(n), ps) != 1 % ps {
            return Err(Error::Invalid(format!(
                "e^(p^n) = {e}^{} is not 1 mod p^s = {ps}",
                p.pow(n)
            )));
        }
        Ok(MetabelianGroup { p, s, n, e: e % ps.max(1), m_delta })
    }

    pub fn n_order(&self) -> u64 {
        self.p.pow(self.s)
    }

    pub fn gamma_order(&self) -> u64 {
        self.p.pow(self.n)
    }

    pub fn order(&self) -> u64 {
        self.n_order() * self.gamma_order() * self.m_delta
    }

    fn e_pow(&self, y: u64) -> u64 {
        pow_mod(self.e, y, self.n_order())
    }

    pub fn mul(&self, a: MetaElem, b: MetaElem) -> MetaElem {
        let ns = self.n_order();
        (
            (a.0 + crate::arith::mul_mod(self.e_pow(a.1), b.0, ns)) % ns,
            (a.1 + b.1) % self.gamma_order(),
            (a.2 + b.2) % self.m_delta,
        )
    }

    pub fn inv(&self, a: MetaElem) -> MetaElem {
        let ns = self.n_order();
        let yi = (self.gamma_order() - a.1) % self.gamma_order();
        let x = crate::arith::mul_mod(self.e_pow(yi), (ns - a.0 % ns) % ns, ns);
        (x, yi, (self.m_delta - a.2) % self.m_delta)
    }

    pub fn identity(&self) -> MetaElem {
        (0, 0, 0)
    }

    pub fn conj(&self, g: MetaElem, h: MetaElem) -> MetaElem {
        self.mul(self.mul(g, h), self.inv(g))
    }

    pub fn generators(&self) -> Vec<MetaElem> {
        vec![(1 % self.n_order(), 0, 0), (0, 1 % self.gamma_order(), 0), (0, 0, 1 % self.m_delta)]
    }

    pub fn elements(&self) -> Vec<MetaElem> {
        let mut out = Vec::with_capacity(self.order() as usize);
        for z in 0..self.m_delta {
            for y in 0..self.gamma_order() {
                for x in 0..self.n_order() {
                    out.push((x, y, z));
                }
            }
        }
        out
    }

    pub fn elem_index(&self, g: MetaElem) -> u64 {
        (g.2 * self.gamma_order() + g.1) * self.n_order() + g.0
    }

    /// H_i × Δ as a metabelian group in its own coordinates: Γ^{p^i} acting via e^{p^i}.
    pub fn subgroup_level(&self, i: u32) -> Result<MetabelianGroup> {
        if i > self.n {
            return Err(Error::Invalid(format!("level {i} outside 0..={}", self.n)));
        }
        MetabelianGroup::new(self.p, self.s, self.n - i, self.e_pow(self.p.pow(i)), self.m_delta)
    }

    /// Order c_i of N/[H_i, H_i], i.e. gcd(e^{p^i} - 1, p^s).
    pub fn commutator_index(&self, i: u32) -> u64 {
        let ns = self.n_order();
        let ep = self.e_pow(self.p.pow(i));
        gcd((ep + ns - 1) % ns, ns)
    }

    pub fn in_level(&self, g: MetaElem, i: u32) -> bool {
        g.1 % self.p.pow(i) == 0
    }

    /// G_i^{ab} = Z/c_i × Z/p^{n-i} × Z/mΔ.
    pub fn level_ab(&self, i: u32) -> FinAbGroup {
        FinAbGroup {
            orders: vec![self.commutator_index(i), self.p.pow(self.n - i), self.m_delta],
        }
    }

    /// G^{ab} with its quotient map.
    pub fn abelianization(&self) -> FinAbGroup {
        self.level_ab(0)
    }

    /// The abelianization map G_i → G_i^{ab}; `g` must lie in G_i.
    pub fn ab_map(&self, i: u32, g: MetaElem) -> GroupElem {
        debug_assert!(self.in_level(g, i));
        let c = self.commutator_index(i);
        vec![g.0 % c, g.1 / self.p.pow(i), g.2]
    }

    /// A preimage in G_i of an element of G_i^{ab}.
    pub fn ab_lift(&self, i: u32, a: &[u64]) -> MetaElem {
        (a[0], a[1] * self.p.pow(i), a[2])
    }

    /// B_{ij} = H_j/[H_i, H_i] × Δ for i ≤ j: Z/c_i × Z/p^{n-j} × Z/mΔ.
    pub fn b_group(&self, i: u32, j: u32) -> FinAbGroup {
        FinAbGroup {
            orders: vec![self.commutator_index(i), self.p.pow(self.n - j), self.m_delta],
        }
    }

    /// π_{ij}: G_j^{ab} → B_{ij}.
    pub fn pi_map(&self, i: u32, j: u32) -> FinAbHom {
        let src = self.level_ab(j);
        let dst = self.b_group(i, j);
        let c = self.commutator_index(i);
        let images = vec![vec![1 % c, 0, 0], vec![0, 1 % dst.orders[1], 0], vec![0, 0, 1 % self.m_delta]];
        FinAbHom::new(src, dst, images).expect("c_i divides c_j")
    }

    /// Inclusion B_{ij} → G_i^{ab}.
    pub fn b_inclusion(&self, i: u32, j: u32) -> FinAbHom {
        let src = self.b_group(i, j);
        let dst = self.level_ab(i);
        let step = self.p.pow(j - i) % dst.orders[1].max(1);
        let c = self.commutator_index(i);
        let images = vec![vec![1 % c, 0, 0], vec![0, step, 0], vec![0, 0, 1 % self.m_delta]];
        FinAbHom::new(src, dst, images).expect("inclusion is well defined")
    }

    /// Transfer G_{i-1}^{ab} → G_i^{ab} by the Schreier coset product for the
    /// given left transversal of G_i in G_{i-1}.
    pub fn transfer_with(&self, i: u32, a: &[u64], transversal: &[MetaElem]) -> Result<GroupElem> {
        if i == 0 || i > self.n {
            return Err(Error::Invalid(format!("transfer level {i} outside 1..={}", self.n)));
        }
        let target = self.level_ab(i);
        let g = self.ab_lift(i - 1, a);
        let coset = |t: MetaElem| -> u64 { (t.1 / self.p.pow(i - 1)) % self.p };
        let mut by_coset = HashMap::new();
        for &t in transversal {
            if !self.in_level(t, i - 1) || by_coset.insert(coset(t), t).is_some() {
                return Err(Error::NotSubgroup("transversal does not meet each coset once".into()));
            }
        }
        if by_coset.len() as u64 != self.p {
            return Err(Error::NotSubgroup("transversal is incomplete".into()));
        }
        let mut acc = target.identity();
        for &t in transversal {
            let gt = self.mul(g, t);
            let ts = by_coset[&coset(gt)];
            let h = self.mul(self.inv(ts), gt);
            debug_assert!(self.in_level(h, i));
            acc = target.add(&acc, &self.ab_map(i, h));
        }
        Ok(acc)
    }

    /// Standard transversal {γ^{k p^{i-1}} : 0 ≤ k < p}.
    pub fn standard_transversal(&self, i: u32) -> Vec<MetaElem> {
        (0..self.p).map(|k| (0, k * self.p.pow(i - 1), 0)).collect()
    }

    /// A second transversal with nontrivial N and Δ parts, for cross-checks.
    pub fn shifted_transversal(&self, i: u32) -> Vec<MetaElem> {
        (0..self.p)
            .map(|k| ((k + 1) % self.n_order(), k * self.p.pow(i - 1), k % self.m_delta))
            .collect()
    }

    pub fn transfer(&self, i: u32, a: &[u64]) -> Result<GroupElem> {
        self.transfer_with(i, a, &self.standard_transversal(i))
    }

    pub fn transfer_hom(&self, i: u32) -> Result<FinAbHom> {
        let src = self.level_ab(i - 1);
        let images = src
            .generators()
            .iter()
            .map(|g| self.transfer(i, g))
            .collect::<Result<Vec<_>>>()?;
        FinAbHom::new(src, self.level_ab(i), images)
    }

    /// Conjugation by g ∈ G on G_i^{ab}.
    pub fn conj_ab(&self, i: u32, g: MetaElem, a: &[u64]) -> GroupElem {
        let h = self.ab_lift(i, a);
        self.ab_map(i, self.conj(g, h))
    }

    /// Orbits of Γ (equivalently of G) acting by conjugation on G_i^{ab},
    /// each sorted by index, listed by least member.
    pub fn ab_orbits(&self, i: u32) -> Vec<Vec<GroupElem>> {
        let ab = self.level_ab(i);
        let gamma = (0, 1 % self.gamma_order(), 0);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for a in ab.elements() {
            if seen.contains(&ab.index(&a)) {
                continue;
            }
            let mut orbit = vec![];
            let mut cur = a.clone();
            while seen.insert(ab.index(&cur)) {
                orbit.push(cur.clone());
                cur = self.conj_ab(i, gamma, &cur);
            }
            orbit.sort_by_key(|g| ab.index(g));
            out.push(orbit);
        }
        out
    }

    /// Conjugacy classes by brute force, each sorted, listed by least member.
    pub fn conj_classes(&self, cap: u64) -> Result<Vec<Vec<MetaElem>>> {
        if self.order() > cap {
            return Err(Error::Resource {
                what: "conjugacy classes".into(),
                required: self.order() as u128,
                cap: cap as u128,
            });
        }
        let gens = self.generators();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for g in self.elements() {
            if seen.contains(&g) {
                continue;
            }
            let mut class = vec![g];
            seen.insert(g);
            let mut k = 0;
            while k < class.len() {
                for &s in &gens {
                    let h = self.conj(s, class[k]);
                    if seen.insert(h) {
                        class.push(h);
                    }
                }
                k += 1;
            }
            class.sort_by_key(|&x| self.elem_index(x));
            out.push(class);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flagship() -> MetabelianGroup {
        MetabelianGroup::new(3, 2, 1, 4, 1).unwrap()
    }

    #[test]
    fn invariant_factors_in_snf() {
        let g = FinAbGroup::new(vec![6, 4, 1]).unwrap();
        assert_eq!(g.invariant_factors(), vec![2, 12]);
        assert_eq!(FinAbGroup::new(vec![3, 3]).unwrap().invariant_factors(), vec![3, 3]);
    }

    #[test]
    fn characters_and_orthogonality() {
        let z2 = FinAbGroup::cyclic(2);
        let chars = z2.characters();
        assert_eq!(chars.len(), 2);
        let g = FinAbGroup::new(vec![3, 3]).unwrap();
        assert_eq!(g.characters().len(), 9);
        for chi in g.characters() {
            let total = g
                .elements()
                .iter()
                .map(|x| chi.value(x, 13, 2).unwrap())
                .fold(CycloElem::zero(crate::CycloModulus::rational(13, 2).unwrap()), |a, b| a + b);
            let expected = if chi.is_trivial() { 9 } else { 0 };
            assert_eq!(total, CycloElem::from_int(*total.modulus(), expected));
        }
    }

    #[test]
    fn quotient_by_subgroup() {
        let g = FinAbGroup::new(vec![9]).unwrap();
        let (q, map) = g.quotient(&[vec![3]]).unwrap();
        assert_eq!(q.order(), 3);
        assert_eq!(map.kernel().len(), 3);
        let g = FinAbGroup::new(vec![2, 4]).unwrap();
        let (q, map) = g.quotient(&[vec![1, 2]]).unwrap();
        assert_eq!(q.order(), 4);
        assert!(map.is_surjective());
        assert!(map.kernel().contains(&vec![1, 2]));
    }

    #[test]
    fn subgroup_lattice_counts() {
        // Z/3 × Z/3 has 1 + 4 + 1 subgroups, Z/4 × Z/2 has 8
        assert_eq!(FinAbGroup::new(vec![3, 3]).unwrap().subgroups(1000).unwrap().len(), 6);
        assert_eq!(FinAbGroup::new(vec![4, 2]).unwrap().subgroups(1000).unwrap().len(), 8);
        assert_eq!(FinAbGroup::cyclic(12).subgroups(1000).unwrap().len(), 6);
    }

    #[test]
    fn metabelian_levels_and_abelianization() {
        let g = flagship();
        let h1 = g.subgroup_level(1).unwrap();
        assert_eq!(h1.e, 1);
        assert_eq!(h1.n, 0);
        assert_eq!(g.subgroup_level(0).unwrap(), g);
        assert_eq!(g.abelianization().invariant_factors(), vec![3, 3]);
        assert_eq!(g.level_ab(1).invariant_factors(), vec![9]);
        let d = MetabelianGroup::new(2, 2, 1, 3, 1).unwrap();
        assert_eq!(d.abelianization().invariant_factors(), vec![2, 2]);
        let ab = MetabelianGroup::new(3, 1, 1, 1, 1).unwrap();
        assert_eq!(ab.abelianization().order(), 9);
        assert!(MetabelianGroup::new(3, 2, 1, 2, 1).is_err());
    }

    #[test]
    fn abelianization_is_homomorphism() {
        let g = MetabelianGroup::new(3, 2, 1, 4, 2).unwrap();
        let ab = g.abelianization();
        for a in g.elements().into_iter().step_by(5) {
            for b in g.elements().into_iter().step_by(7) {
                assert_eq!(g.ab_map(0, g.mul(a, b)), ab.add(&g.ab_map(0, a), &g.ab_map(0, b)));
            }
        }
    }

    #[test]
    fn conjugacy_classes_of_flagship() {
        let g = flagship();
        let classes = g.conj_classes(100_000).unwrap();
        assert_eq!(classes.len(), 11);
        assert_eq!(classes.iter().map(|c| c.len()).sum::<usize>(), 27);
        assert_eq!(classes[0], vec![(0, 0, 0)]);
        let ab = MetabelianGroup::new(3, 1, 1, 1, 2).unwrap();
        assert!(ab.conj_classes(1000).unwrap().iter().all(|c| c.len() == 1));
    }

    #[test]
    fn transfer_independent_of_transversal() {
        for g in [flagship(), MetabelianGroup::new(2, 2, 1, 3, 1).unwrap(), MetabelianGroup::new(3, 2, 1, 4, 2).unwrap()] {
            let ab = g.level_ab(0);
            for a in ab.elements() {
                let v1 = g.transfer_with(1, &a, &g.standard_transversal(1)).unwrap();
                let v2 = g.transfer_with(1, &a, &g.shifted_transversal(1)).unwrap();
                assert_eq!(v1, v2);
            }
            // closed forms: N part multiplied by 1 + e + ... + e^{p-1}, γ ↦ γ_1, δ ↦ δ^p
            let t = g.level_ab(1);
            let c1 = t.orders()[0];
            let sum: u64 = (0..g.p).map(|k| pow_mod(g.e, k, c1)).sum::<u64>() % c1;
            assert_eq!(g.transfer(1, &[1 % ab.orders()[0], 0, 0]).unwrap(), vec![sum % c1, 0, 0]);
            assert_eq!(g.transfer(1, &[0, 1, 0]).unwrap(), t.normalize(&[0, 1, 0]));
            assert_eq!(g.transfer(1, &[0, 0, 1 % g.m_delta]).unwrap(), t.normalize(&[0, 0, g.p as i64]));
        }
    }

    #[test]
    fn abelian_transfer_is_power() {
        let g = MetabelianGroup::new(3, 0, 2, 1, 1).unwrap();
        // Z/9 ⊇ Z/3: Ver(x) = x^3, i.e. γ ↦ γ^3 = γ_1
        assert_eq!(g.transfer(1, &[0, 1, 0]).unwrap(), vec![0, 1, 0]);
        assert_eq!(g.transfer(1, &[0, 2, 0]).unwrap(), vec![0, 2, 0]);
    }

    #[test]
    fn commutator_chain_decreases() {
        let g = MetabelianGroup::new(3, 3, 2, 4, 1).unwrap();
        for i in 0..=2 {
            for j in i..=2 {
                // [H_j, H_j] ⊆ [H_i, H_i] ⟺ c_i | c_j
                assert_eq!(g.commutator_index(j) % g.commutator_index(i), 0);
            }
        }
    }

    #[test]
    fn conjugation_action_on_levels() {
        let g = flagship();
        let gamma = (0, 1, 0);
        assert_eq!(g.conj_ab(0, gamma, &[1, 0, 0]), vec![1, 0, 0]);
        assert_eq!(g.conj_ab(1, gamma, &[1, 0, 0]), vec![4, 0, 0]);
        let orbits = g.ab_orbits(1);
        // 0, 3, 6 fixed; {1,4,7}, {2,5,8}
        assert_eq!(orbits.len(), 5);
    }
}
