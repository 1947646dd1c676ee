//! The tuple side of θ_{G,J} and β_{G,J} for the tame tower group
//! G = (N ⋊ Γ) × Δ: norms and traces between the G_i^{ab}, the trace ideals
//! T_i, ver_i, the M1–M3 and A1–A3 verifiers, and the integral logarithm at
//! truncated p-adic precision.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{lcm, mult_order};
use crate::cyclo::{CycloElem, CycloModulus};
use crate::epsilon::{eps_abelian, EpsilonResult};
use crate::error::{Error, Result};
use crate::group::{FinAbHom, GroupElem, MetaElem, MetabelianGroup};
use crate::group_ring::{certify_unit, det, GroupRingElem};
use crate::par::{map_collect, Exec};
use crate::reciprocity::TameTower;
use crate::residue::AdditiveCharSpec;

/// A ⊇ B with a fixed transversal, presenting J[A] as a free J[B]-module.
#[derive(Clone, Debug)]
pub struct CosetBasis {
    incl: FinAbHom,
    reps: Vec<GroupElem>,
    split: HashMap<u64, (usize, GroupElem)>,
}

impl CosetBasis {
    pub fn new(incl: &FinAbHom) -> Result<Self> {
        let big = &incl.target;
        let sub = &incl.source;
        let image: Vec<GroupElem> = sub.elements().iter().map(|b| incl.apply(b)).collect();
        let mut distinct: Vec<u64> = image.iter().map(|g| big.index(g)).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() as u64 != sub.order() {
            return Err(Error::NotSubgroup("inclusion is not injective".into()));
        }
        let mut split = HashMap::new();
        let mut reps = Vec::new();
        for t in big.elements() {
            if split.contains_key(&big.index(&t)) {
                continue;
            }
            let k = reps.len();
            for (b, ib) in sub.elements().into_iter().zip(&image) {
                split.insert(big.index(&big.add(&t, ib)), (k, b));
            }
            reps.push(t);
        }
        Ok(CosetBasis { incl: incl.clone(), reps, split })
    }

    pub fn rank(&self) -> usize {
        self.reps.len()
    }

    /// Matrix of multiplication by x: x·t_k = Σ_{k'} t_{k'} M[k'][k].
    pub fn mult_matrix(&self, x: &GroupRingElem) -> Vec<Vec<GroupRingElem>> {
        let big = &self.incl.target;
        let sub = &self.incl.source;
        let (l, p) = x.lp();
        let r = self.rank();
        let mut m = vec![vec![GroupRingElem::zero(sub, l, p); r]; r];
        for (g, c) in x.terms() {
            for (k, t) in self.reps.iter().enumerate() {
                let (k2, b) = &self.split[&big.index(&big.add(&g, t))];
                m[*k2][k].add_term(b, c.clone());
            }
        }
        m
    }

    pub fn norm(&self, x: &GroupRingElem) -> GroupRingElem {
        let (l, p) = x.lp();
        det(&self.mult_matrix(x), &self.incl.source, l, p)
    }

    pub fn trace(&self, x: &GroupRingElem) -> GroupRingElem {
        let (l, p) = x.lp();
        let m = self.mult_matrix(x);
        (0..self.rank()).fold(GroupRingElem::zero(&self.incl.source, l, p), |acc, k| acc.add(&m[k][k]))
    }
}

/// Nr: J[A]^× → J[B]^× for an inclusion B → A.
pub fn norm_map(x: &GroupRingElem, incl: &FinAbHom) -> Result<GroupRingElem> {
    if x.group() != &incl.target {
        return Err(Error::Invalid("element does not live over the inclusion's target".into()));
    }
    Ok(CosetBasis::new(incl)?.norm(x))
}

pub fn trace_map(x: &GroupRingElem, incl: &FinAbHom) -> Result<GroupRingElem> {
    if x.group() != &incl.target {
        return Err(Error::Invalid("element does not live over the inclusion's target".into()));
    }
    Ok(CosetBasis::new(incl)?.trace(x))
}

/// Nr_{i,j}: J[G_i^{ab}] → J[H_j/[H_i,H_i] × Δ].
pub fn tower_norm(g: &MetabelianGroup, x: &GroupRingElem, i: u32, j: u32) -> Result<GroupRingElem> {
    norm_map(x, &g.b_inclusion(i, j))
}

pub fn tower_trace(g: &MetabelianGroup, x: &GroupRingElem, i: u32, j: u32) -> Result<GroupRingElem> {
    trace_map(x, &g.b_inclusion(i, j))
}

/// π_{i,j}: J[G_j^{ab}] → J[H_j/[H_i,H_i] × Δ].
pub fn pi_surjection(g: &MetabelianGroup, x: &GroupRingElem, i: u32, j: u32) -> GroupRingElem {
    x.push_forward(&g.pi_map(i, j))
}

/// Conjugation by an element of G on J[G_i^{ab}].
pub fn conjugate(g: &MetabelianGroup, x: &GroupRingElem, i: u32, by: MetaElem) -> GroupRingElem {
    x.map_group(&g.level_ab(i), |a| g.conj_ab(i, by, a))
}

/// σ_i(x) = Σ_{γ ∈ Γ/Γ^{p^i}} γ x γ^{-1}.
pub fn sigma_trace(g: &MetabelianGroup, x: &GroupRingElem, i: u32) -> GroupRingElem {
    let (l, p) = x.lp();
    let ab = g.level_ab(i);
    (0..g.p.pow(i)).fold(GroupRingElem::zero(&ab, l, p), |acc, k| {
        acc.add(&conjugate(g, x, i, (0, k % g.gamma_order(), 0)))
    })
}

/// Orbits of G on G_i^{ab} with log_p of [Γ : stabilizer] ≤ i.
fn orbits_with_size(g: &MetabelianGroup, i: u32) -> Vec<(Vec<GroupElem>, u32)> {
    g.ab_orbits(i)
        .into_iter()
        .map(|o| {
            let mut k = 0;
            while g.p.pow(k) < o.len() as u64 {
                k += 1;
            }
            (o, k)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TiMembership {
    pub member: bool,
    /// y with σ_i(y) = x when x ∈ T_i
    pub witness: Option<GroupRingElem>,
    pub reason: Option<String>,
}

/// x ∈ T_i iff x is constant on G-orbits and each orbit coefficient is
/// divisible by p^i / |orbit|.
pub fn ti_membership(g: &MetabelianGroup, x: &GroupRingElem, i: u32) -> TiMembership {
    let (l, p) = x.lp();
    let ab = g.level_ab(i);
    let mut witness = GroupRingElem::zero(&ab, l, p);
    for (orbit, k) in orbits_with_size(g, i) {
        let c = x.coeff(&orbit[0]);
        if let Some(h) = orbit.iter().find(|h| x.coeff(h) != c) {
            return TiMembership {
                member: false,
                witness: None,
                reason: Some(format!("coefficient at {h:?} differs from {:?} in the same orbit", orbit[0])),
            };
        }
        let need = i as i64 - k as i64;
        if !c.p_divisible(need) {
            return TiMembership {
                member: false,
                witness: None,
                reason: Some(format!("orbit of {:?}: coefficient {c} not divisible by p^{need}", orbit[0])),
            };
        }
        if !c.is_zero() {
            witness.add_term(&orbit[0], c.scale(&BigRational::new(BigInt::one(), BigInt::from(p).pow(need as u32))));
        }
    }
    TiMembership { member: true, witness: Some(witness), reason: None }
}

/// Membership in T_i + p^M J[G_i^{ab}].
pub fn ti_membership_mod(g: &MetabelianGroup, x: &GroupRingElem, i: u32, m: u32) -> TiMembership {
    for (orbit, k) in orbits_with_size(g, i) {
        let c = x.coeff(&orbit[0]);
        if let Some(h) = orbit.iter().find(|h| !(x.coeff(h) - &c).p_divisible(m as i64)) {
            return TiMembership {
                member: false,
                witness: None,
                reason: Some(format!("coefficient at {h:?} differs from {:?} mod p^{m}", orbit[0])),
            };
        }
        let need = (i as i64 - k as i64).min(m as i64);
        if !c.p_divisible(need) {
            return TiMembership {
                member: false,
                witness: None,
                reason: Some(format!("orbit of {:?}: coefficient {c} not divisible by p^{need}", orbit[0])),
            };
        }
    }
    TiMembership { member: true, witness: None, reason: None }
}

/// ver_i: J[G_{i-1}^{ab}] → J[G_i^{ab}], transfer on the group and φ_p on coefficients.
pub fn ver_map(g: &MetabelianGroup, x: &GroupRingElem, i: u32) -> Result<GroupRingElem> {
    Ok(x.frobenius_p().push_forward(&g.transfer_hom(i)?))
}

/// A tuple (x_i) over (J[G_i^{ab}])_{i=0..n}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaTuple {
    pub group: MetabelianGroup,
    pub entries: Vec<GroupRingElem>,
}

impl ThetaTuple {
    pub fn new(group: MetabelianGroup, entries: Vec<GroupRingElem>) -> Result<Self> {
        if entries.len() != group.n as usize + 1 {
            return Err(Error::Invalid(format!("expected {} entries, got {}", group.n + 1, entries.len())));
        }
        for (i, x) in entries.iter().enumerate() {
            if x.group() != &group.level_ab(i as u32) {
                return Err(Error::Invalid(format!("entry {i} does not live over G_{i}^ab")));
            }
        }
        Ok(ThetaTuple { group, entries })
    }

    pub fn lp(&self) -> (u64, u64) {
        self.entries[0].lp()
    }

    pub fn mul(&self, other: &ThetaTuple) -> ThetaTuple {
        ThetaTuple {
            group: self.group,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.mul(b)).collect(),
        }
    }
}

/// Status of one condition at one level or pair of levels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionStatus {
    pub i: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<u32>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ConditionStatus {
    fn pass(i: u32, j: Option<u32>, witness: Option<String>) -> Self {
        ConditionStatus { i, j, passed: true, witness, failure: None }
    }

    fn fail(i: u32, j: Option<u32>, failure: String) -> Self {
        ConditionStatus { i, j, passed: false, witness: None, failure: Some(failure) }
    }

    fn check(i: u32, j: Option<u32>, ok: bool, failure: impl FnOnce() -> String) -> Self {
        if ok {
            Self::pass(i, j, None)
        } else {
            Self::fail(i, j, failure())
        }
    }
}

fn all(v: &[ConditionStatus]) -> bool {
    v.iter().all(|c| c.passed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MSelection {
    pub m1: bool,
    pub m2: bool,
    pub m3: bool,
}

impl MSelection {
    pub const ALL: MSelection = MSelection { m1: true, m2: true, m3: true };
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MReport {
    pub m1: Vec<ConditionStatus>,
    pub m2: Vec<ConditionStatus>,
    /// x_i − ver(x_{i−1}) ∈ T_i
    pub m3_additive: Vec<ConditionStatus>,
    /// x_i · ver(x_{i−1})^{-1} − 1 ∈ T_i
    pub m3_multiplicative: Vec<ConditionStatus>,
    /// p = 2 only: x_i + ver(x_{i−1}) ∈ T_i as well, so the sign of x_i is immaterial
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub m3_sign_free: Vec<ConditionStatus>,
}

impl MReport {
    pub fn m1_pass(&self) -> bool {
        all(&self.m1)
    }

    pub fn m2_pass(&self) -> bool {
        all(&self.m2)
    }

    pub fn m3_pass(&self) -> bool {
        all(&self.m3_additive) && all(&self.m3_multiplicative) && all(&self.m3_sign_free)
    }

    pub fn all_pass(&self) -> bool {
        self.m1_pass() && self.m2_pass() && self.m3_pass()
    }
}

pub fn check_m1_m2_m3(t: &ThetaTuple, sel: MSelection, exec: Exec) -> Result<MReport> {
    let g = &t.group;
    let n = g.n;
    let mut report = MReport::default();
    if sel.m1 {
        let pairs: Vec<(u32, u32)> = (0..=n).flat_map(|i| (i..=n).map(move |j| (i, j))).collect();
        report.m1 = map_collect(exec, &pairs, |&(i, j)| -> Result<ConditionStatus> {
            let lhs = tower_norm(g, &t.entries[i as usize], i, j)?;
            let rhs = pi_surjection(g, &t.entries[j as usize], i, j);
            Ok(ConditionStatus::check(i, Some(j), lhs == rhs, || format!("Nr = {lhs}, pi = {rhs}")))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    }
    if sel.m2 {
        for i in 0..=n {
            let x = &t.entries[i as usize];
            let moved = g.generators().into_iter().find(|&s| &conjugate(g, x, i, s) != x);
            report.m2.push(match moved {
                None => ConditionStatus::pass(i, None, None),
                Some(s) => ConditionStatus::fail(i, None, format!("conjugation by {s:?} moves x_{i}")),
            });
        }
    }
    if sel.m3 {
        for i in 1..=n {
            let x = &t.entries[i as usize];
            let v = ver_map(g, &t.entries[i as usize - 1], i)?;
            let status = |m: TiMembership| match m.member {
                true => ConditionStatus::pass(i, None, m.witness.map(|w| w.to_string())),
                false => ConditionStatus::fail(i, None, m.reason.unwrap_or_default()),
            };
            report.m3_additive.push(status(ti_membership(g, &x.sub(&v), i)));
            report.m3_multiplicative.push(match v.inverse() {
                Some(vi) => {
                    let y = x.mul(&vi).sub(&GroupRingElem::one(x.group(), x.lp().0, x.lp().1));
                    status(ti_membership(g, &y, i))
                }
                None => ConditionStatus::fail(i, None, "ver(x_{i-1}) is not invertible".into()),
            });
            if g.p == 2 {
                let plus = ti_membership(g, &x.add(&v), i);
                let twice = ti_membership(g, &v.scale_int(2), i);
                let ok = plus.member == report.m3_additive.last().unwrap().passed && twice.member;
                report.m3_sign_free.push(ConditionStatus::check(i, None, ok, || {
                    format!("x+ver in T: {}, 2 ver in T: {}", plus.member, twice.member)
                }));
            }
        }
    }
    Ok(report)
}

/// Sign attached to level i of the tuple.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSign {
    /// λ(K_i/K, ψ) = (−1)^{n(ψ)([K_i:K]−1)}, the product of the unramified
    /// closed forms over the characters of Gal(K_i/K)
    #[default]
    Lambda,
    /// (−1)^{[K_i:K]−1} regardless of n(ψ)
    Literal,
}

impl LevelSign {
    pub fn sign(self, degree: u64, n_psi: i64) -> i8 {
        let odd_degree_minus_one = (degree - 1) % 2 == 1;
        let flip = match self {
            LevelSign::Lambda => odd_degree_minus_one && n_psi.rem_euclid(2) == 1,
            LevelSign::Literal => odd_degree_minus_one,
        };
        if flip {
            -1
        } else {
            1
        }
    }
}

/// The tuple (sign_i · ε₀(K_i, ψ∘Tr_{K_i/K}))_i.
#[derive(Clone, Debug)]
pub struct EpsilonTuple {
    pub sign_convention: LevelSign,
    pub tuple: ThetaTuple,
    pub results: Vec<EpsilonResult>,
}

pub fn epsilon_tuple(tower: &TameTower, psi: &AdditiveCharSpec, sign: LevelSign, exec: Exec, cap: u64) -> Result<EpsilonTuple> {
    let mut results = Vec::new();
    for level in &tower.levels {
        let ring = level.datum.ring();
        let twist = level.base_embedding.apply(ring, &psi.unit_twist);
        let psi_i = AdditiveCharSpec::new(ring, psi.level, twist)?;
        let mut e = eps_abelian(&level.datum, &psi_i, exec, cap)?;
        e.lambda_sign = sign.sign(tower.group.p.pow(level.index), psi.level);
        if e.lambda_sign < 0 {
            e.element = e.element.neg();
        }
        results.push(e);
    }
    let tuple = ThetaTuple::new(tower.group, results.iter().map(|e| e.element.clone()).collect())?;
    Ok(EpsilonTuple { sign_convention: sign, tuple, results })
}

/// An element of J[G] for the nonabelian tower group.
#[derive(Clone, Debug)]
pub struct MetaGroupRingElem {
    pub group: MetabelianGroup,
    pub lp: (u64, u64),
    pub terms: BTreeMap<MetaElem, CycloElem>,
}

/// θ_{G,J}: the image of x under K_1(J[G]) → K_1(J[G_i]) → J[G_i^{ab}]^×,
/// i.e. the determinant of left multiplication by x on J[G] as a right
/// J[G_i]-module with basis {γ^k}, after abelianizing the entries.
pub fn theta(x: &MetaGroupRingElem) -> Result<ThetaTuple> {
    let g = &x.group;
    let (l, p) = x.lp;
    let mut entries = Vec::new();
    for i in 0..=g.n {
        let ab = g.level_ab(i);
        let r = g.p.pow(i) as usize;
        let mut m = vec![vec![GroupRingElem::zero(&ab, l, p); r]; r];
        for (&h, c) in &x.terms {
            for k in 0..r {
                let t = (0, k as u64 % g.gamma_order(), 0);
                let ht = g.mul(h, t);
                let k2 = (ht.1 % r as u64) as usize;
                let rest = g.mul(g.inv((0, k2 as u64, 0)), ht);
                debug_assert!(g.in_level(rest, i));
                m[k2][k].add_term(&g.ab_map(i, rest), c.clone());
            }
        }
        entries.push(det(&m, &ab, l, p));
    }
    ThetaTuple::new(*g, entries)
}

impl MetaGroupRingElem {
    pub fn one(group: &MetabelianGroup, l: u64, p: u64) -> Result<Self> {
        let c = CycloElem::one(CycloModulus::rational(l, p)?);
        Ok(MetaGroupRingElem { group: *group, lp: (l, p), terms: BTreeMap::from([(group.identity(), c)]) })
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<MetaElem, CycloElem> = BTreeMap::new();
        for (&g, a) in &self.terms {
            for (&h, b) in &other.terms {
                let k = self.group.mul(g, h);
                let v = a * b;
                match terms.get_mut(&k) {
                    Some(e) => *e = &*e + &v,
                    None => {
                        terms.insert(k, v);
                    }
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        MetaGroupRingElem { group: self.group, lp: self.lp, terms }
    }

    pub fn scale(&self, c: &CycloElem) -> Self {
        let terms = self.terms.iter().map(|(&g, a)| (g, a * c)).filter(|(_, a)| !a.is_zero()).collect();
        MetaGroupRingElem { group: self.group, lp: self.lp, terms }
    }

    pub fn augmentation(&self) -> CycloElem {
        let (l, p) = self.lp;
        let zero = CycloElem::zero(CycloModulus::rational(l, p).expect("valid l, p"));
        self.terms.values().fold(zero, |acc, c| acc + c)
    }

    pub fn reduce_mod_p_power(&self, w: u32) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&g, a)| (g, a.reduce_mod_p_power(w)))
            .filter(|(_, a)| !a.is_zero())
            .collect();
        MetaGroupRingElem { group: self.group, lp: self.lp, terms }
    }

    pub fn is_p_integral(&self) -> bool {
        self.terms.values().all(|c| c.p_divisible(0))
    }
}

/// Exponent of the unit group of (J/p)[Δ] for coefficients in `modulus`.
fn residue_unit_exponent(modulus: &CycloModulus, m_delta: u64, p: u64) -> u64 {
    let root_order = lcm(modulus.m() * modulus.l().pow(modulus.alpha()), m_delta);
    let f = if root_order <= 1 { 1 } else { mult_order(p % root_order, root_order) };
    p.pow(f as u32) - 1
}

/// Oliver's integral logarithm Γ(x) = τ(log x) − Φ(τ(log x))/p in
/// J[Conj(G)] modulo p^M, with Φ(Σ a_g g) = Σ φ(a_g) g^p, computed in the
/// noncommutative group ring after dividing x by its augmentation.
pub fn oliver_log(x: &MetaGroupRingElem, classes: &[Vec<MetaElem>], m: u32) -> Result<ConjClassElem> {
    let g = &x.group;
    let (l, p) = x.lp;
    let mut r = x.clone();
    if !r.is_p_integral() {
        return Err(Error::Convergence("element is not p-integral".into()));
    }
    let modulus = r.terms.values().fold(CycloModulus::rational(l, p)?, |acc, c| acc.join(c.modulus()));
    let power = residue_unit_exponent(&modulus, g.m_delta, p);
    let guess = m + 9;
    r = r.reduce_mod_p_power(guess);
    let mut rn = MetaGroupRingElem::one(g, l, p)?;
    let mut e = power;
    let mut base = r.clone();
    while e > 0 {
        if e & 1 == 1 {
            rn = rn.mul(&base).reduce_mod_p_power(guess);
        }
        base = base.mul(&base).reduce_mod_p_power(guess);
        e >>= 1;
    }
    let mut z = rn;
    let one = CycloElem::one(CycloModulus::rational(l, p)?);
    let c0 = z.terms.remove(&g.identity()).unwrap_or_else(|| one.clone() - &one);
    let c0 = c0 - &one;
    if !c0.is_zero() {
        z.terms.insert(g.identity(), c0);
    }
    let cap = 2 * g.order() + 2;
    let mut n0 = 1;
    let mut zk = z.reduce_mod_p_power(1);
    while !zk.terms.is_empty() {
        if n0 >= cap {
            return Err(Error::Convergence("r^N - 1 is not topologically nilpotent mod p".into()));
        }
        zk = zk.mul(&z).reduce_mod_p_power(1);
        n0 += 1;
    }
    let (big_k, e_exp) = series_length(n0, p, m + 1);
    let w = m + 1 + e_exp;
    if w > guess {
        return Err(Error::Convergence(format!("working precision {w} exceeds {guess}")));
    }
    let pe = BigInt::from(p).pow(e_exp);
    let mut acc: BTreeMap<MetaElem, CycloElem> = BTreeMap::new();
    let mut zk = MetaGroupRingElem::one(g, l, p)?;
    for k in 1..big_k {
        zk = zk.mul(&z).reduce_mod_p_power(w);
        let sign = if k % 2 == 1 { 1 } else { -1 };
        let coef = BigRational::new(&pe * sign, BigInt::from(k));
        for (&h, c) in &zk.terms {
            let v = c.scale(&coef);
            let e = acc.entry(h).or_insert_with(|| one.clone() - &one);
            *e = (&*e + &v).reduce_mod_p_power(w);
        }
    }
    let class_of: HashMap<MetaElem, usize> =
        classes.iter().enumerate().flat_map(|(k, cl)| cl.iter().map(move |&h| (h, k))).collect();
    let mut tau: BTreeMap<usize, CycloElem> = BTreeMap::new();
    let mut phi: BTreeMap<usize, CycloElem> = BTreeMap::new();
    for (h, c) in &acc {
        let k = class_of[h];
        let e = tau.entry(k).or_insert_with(|| one.clone() - &one);
        *e = &*e + c;
        let hp = (0..p).fold(g.identity(), |a, _| g.mul(a, *h));
        let e = phi.entry(class_of[&hp]).or_insert_with(|| one.clone() - &one);
        *e = &*e + &c.frobenius_p();
    }
    // Γ = (τ − Φ/p) / (p^E N)
    let scale_tau = BigRational::new(BigInt::one(), &pe * BigInt::from(power));
    let scale_phi = BigRational::new(BigInt::one(), &pe * BigInt::from(power) * BigInt::from(p));
    let mut coeffs: BTreeMap<usize, CycloElem> = BTreeMap::new();
    for (k, c) in tau {
        coeffs.insert(k, c.scale(&scale_tau));
    }
    for (k, c) in phi {
        let v = c.scale(&scale_phi);
        let e = coeffs.entry(k).or_insert_with(|| one.clone() - &one);
        *e = &*e - &v;
    }
    coeffs.retain(|_, c| !c.is_zero());
    Ok(ConjClassElem { group: *g, lp: (l, p), coeffs })
}

/// A random unit of J[G]: g₀ + (1 − h)·y + p·y′ with h in the p-part, so
/// that it is congruent to a group element modulo the radical.
pub fn random_unit(g: &MetabelianGroup, l: u64, p: u64, rng: &mut ChaCha8Rng) -> Result<MetaGroupRingElem> {
    let modulus = CycloModulus::rational(l, p)?;
    let elems = g.elements();
    let pick = |rng: &mut ChaCha8Rng| elems[rng.gen_range(0..elems.len())];
    let mut terms: BTreeMap<MetaElem, CycloElem> = BTreeMap::new();
    let mut add = |k: MetaElem, c: CycloElem| {
        let e = terms.entry(k).or_insert_with(|| CycloElem::zero(modulus));
        *e = &*e + &c;
    };
    let g0 = pick(rng);
    add(g0, CycloElem::one(modulus));
    for _ in 0..3 {
        let h = (rng.gen_range(0..g.n_order()), rng.gen_range(0..g.gamma_order()), 0);
        let y = pick(rng);
        let c = CycloElem::zeta(l, p, l, rng.gen_range(0..l as i64))?.scale_int(&BigInt::from(rng.gen_range(1..4)));
        add(y, c.clone());
        add(g.mul(h, y), -c);
        let y2 = pick(rng);
        add(y2, CycloElem::from_int(modulus, p as i64 * rng.gen_range(-2..3)));
    }
    let terms = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    Ok(MetaGroupRingElem { group: *g, lp: (l, p), terms })
}

/// Element of J[Conj(G)] in the basis of conj_classes.
#[derive(Clone, Debug)]
pub struct ConjClassElem {
    pub group: MetabelianGroup,
    pub lp: (u64, u64),
    pub coeffs: BTreeMap<usize, CycloElem>,
}

/// β_{G,J}: component i sends the class of g to Σ_{x ∈ G/G_i} x g x^{-1} in
/// J[G_i^{ab}] if g ∈ G_i, and to 0 otherwise.
pub fn beta_additive(x: &ConjClassElem, classes: &[Vec<MetaElem>]) -> Result<Vec<GroupRingElem>> {
    let g = &x.group;
    let (l, p) = x.lp;
    let mut out = Vec::new();
    for i in 0..=g.n {
        let ab = g.level_ab(i);
        let mut a = GroupRingElem::zero(&ab, l, p);
        for (&k, c) in &x.coeffs {
            let rep = *classes
                .get(k)
                .and_then(|cl| cl.first())
                .ok_or_else(|| Error::Invalid(format!("conjugacy class index {k} out of range")))?;
            if !g.in_level(rep, i) {
                continue;
            }
            for m in 0..g.p.pow(i) {
                let conj = g.conj((0, m % g.gamma_order(), 0), rep);
                a.add_term(&g.ab_map(i, conj), c.clone());
            }
        }
        out.push(a);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AReport {
    /// checked modulo p^precision when set, exactly otherwise
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    pub a1: Vec<ConditionStatus>,
    pub a2: Vec<ConditionStatus>,
    pub a3: Vec<ConditionStatus>,
}

impl AReport {
    pub fn all_pass(&self) -> bool {
        all(&self.a1) && all(&self.a2) && all(&self.a3)
    }
}

fn congruent(x: &GroupRingElem, y: &GroupRingElem, precision: Option<u32>) -> bool {
    match precision {
        None => x == y,
        Some(m) => x.sub(y).p_divisible(m as i64),
    }
}

pub fn check_a1_a2_a3(g: &MetabelianGroup, a: &[GroupRingElem], precision: Option<u32>) -> Result<AReport> {
    let n = g.n;
    let mut report = AReport { precision, ..Default::default() };
    for i in 0..=n {
        for j in i..=n {
            let lhs = tower_trace(g, &a[i as usize], i, j)?;
            let rhs = pi_surjection(g, &a[j as usize], i, j);
            report.a1.push(ConditionStatus::check(i, Some(j), congruent(&lhs, &rhs, precision), || {
                format!("Tr = {lhs}, pi = {rhs}")
            }));
        }
    }
    for i in 0..=n {
        let x = &a[i as usize];
        let moved = g.generators().into_iter().find(|&s| !congruent(&conjugate(g, x, i, s), x, precision));
        report.a2.push(match moved {
            None => ConditionStatus::pass(i, None, None),
            Some(s) => ConditionStatus::fail(i, None, format!("conjugation by {s:?} moves a_{i}")),
        });
        let m = match precision {
            None => ti_membership(g, x, i),
            Some(m) => ti_membership_mod(g, x, i, m),
        };
        report.a3.push(match m.member {
            true => ConditionStatus::pass(i, None, m.witness.map(|w| w.to_string())),
            false => ConditionStatus::fail(i, None, m.reason.unwrap_or_default()),
        });
    }
    Ok(report)
}

/// Series data for one component of the integral logarithm.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogSeries {
    pub i: u32,
    /// r^power ≡ 1 modulo the radical, with power prime to p
    pub power: u64,
    /// least k with z^k ≡ 0 mod p, z = r^power − 1
    pub nilpotency: u64,
    /// number of series terms summed
    pub terms: u64,
    /// working precision p^{M + denominator exponent}
    pub working_precision: u32,
    /// whether the truncated value is p-integral
    pub integral: bool,
}

#[derive(Clone, Debug)]
pub struct IntegralLog {
    pub precision: u32,
    pub values: Vec<GroupRingElem>,
    pub series: Vec<LogSeries>,
}

fn reduce(x: &GroupRingElem, w: u32) -> GroupRingElem {
    x.reduce_mod_p_power(w)
}

fn log_p(k: u64, p: u64) -> u32 {
    let mut t = 0;
    let mut x = k;
    while x >= p {
        x /= p;
        t += 1;
    }
    t
}

/// Number of terms K of Σ_{k<K} ±z^k/k needed modulo p^M when z^{n0} ≡ 0 mod p,
/// and the exponent E with p^E clearing every denominator p^{v_p(k)}, k < K.
/// Every k ≥ K satisfies ⌊k/n0⌋ − v_p(k) ≥ M once the bound holds on [K, pK] and K ≥ 4 n0.
fn series_length(n0: u64, p: u64, m: u32) -> (u64, u32) {
    let bound = |k: u64| (k / n0) as i64 - log_p(k, p) as i64;
    let mut big_k = 4 * n0;
    while !(big_k..=p * big_k).all(|k| bound(k) >= m as i64) {
        big_k += 1;
    }
    (big_k, log_p(big_k, p))
}

/// log(1 + z) mod p^M for z with z^{n0} ≡ 0 mod p, z p-integral.
fn truncated_log(z: &GroupRingElem, n0: u64, p: u64, m: u32) -> (GroupRingElem, u64, u32) {
    let (big_k, e) = series_length(n0, p, m);
    let w = m + e;
    let pe = BigInt::from(p).pow(e);
    let (l, _) = z.lp();
    let mut acc = GroupRingElem::zero(z.group(), l, p);
    let mut zk = GroupRingElem::one(z.group(), l, p);
    for k in 1..big_k {
        zk = reduce(&zk.mul(z), w);
        let sign = if k % 2 == 1 { 1 } else { -1 };
        let coef = BigRational::new(&pe * sign, BigInt::from(k));
        acc = reduce(&acc.add(&zk.scale_rational(&coef)), w);
    }
    (acc.scale_rational(&BigRational::new(BigInt::one(), pe)), big_k - 1, w)
}

/// log r mod p^M for a p-integral unit r of J[A], extended beyond 1 + rad by
/// log r = log(r^N)/N with N prime to p and r^N ≡ 1 modulo the radical.
fn unit_log(r: &GroupRingElem, m_delta: u64, m: u32, i: u32) -> Result<(GroupRingElem, LogSeries)> {
    let (l, p) = r.lp();
    if !r.is_p_integral() {
        return Err(Error::Convergence(format!("level {i}: argument is not p-integral")));
    }
    // exponent of the unit group of (J/p)[Δ]
    let power = residue_unit_exponent(&r.coefficient_modulus(), m_delta, p);
    let precision_guess = m + 8;
    let mut rn = GroupRingElem::one(r.group(), l, p);
    let mut base = reduce(r, precision_guess);
    let mut e = power;
    while e > 0 {
        if e & 1 == 1 {
            rn = reduce(&rn.mul(&base), precision_guess);
        }
        base = reduce(&base.mul(&base), precision_guess);
        e >>= 1;
    }
    let z = rn.sub(&GroupRingElem::one(r.group(), l, p));
    let cap = 2 * r.group().order() + 2;
    let mut zk = reduce(&z, 1);
    let mut n0 = 1;
    while !zk.is_zero() {
        if n0 >= cap {
            let (h, c) = zk.terms().next().map(|(h, c)| (h, c.to_string())).unwrap();
            return Err(Error::Convergence(format!(
                "level {i}: r^{power} - 1 is not topologically nilpotent mod p; z^{n0} has coefficient {c} at {h:?}"
            )));
        }
        zk = reduce(&zk.mul(&z), 1);
        n0 += 1;
    }
    let (log_rn, terms, w) = truncated_log(&z, n0, p, m);
    if w > precision_guess {
        return Err(Error::Convergence(format!("level {i}: working precision {w} exceeds {precision_guess}")));
    }
    let value = log_rn.scale_rational(&BigRational::new(BigInt::one(), BigInt::from(power)));
    let integral = value.is_p_integral();
    Ok((value, LogSeries { i, power, nilpotency: n0, terms, working_precision: w, integral }))
}

/// Which tuple-level formula realizes the integral logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogForm {
    /// 𝓛_0 = log x_0, 𝓛_i = log(x_i / ver_i(x_{i−1}))
    Ratio,
    /// 𝓛_0 = Γ(x_0), 𝓛_i = Γ(x_i) − ver_i(part of log x_{i−1} off the image of G_i),
    /// with Γ(y) = log y − Φ(log y)/p and Φ the p-power map with φ_p on coefficients.
    /// This is β_i∘Γ∘θ^{-1} exactly, for every p and every Δ.
    Oliver,
}

/// h ↦ h^p on the group, φ_p on coefficients, divided by p.
fn phi_over_p(y: &GroupRingElem) -> GroupRingElem {
    let (_, p) = y.lp();
    let ab = y.group().clone();
    y.frobenius_p()
        .map_group(&ab, |h| ab.scale(h, p as i64))
        .scale_rational(&BigRational::new(BigInt::one(), BigInt::from(p)))
}

/// The integral logarithm of a tuple, componentwise mod p^M. Entries need not
/// have augmentation 1; scalar factors are handled by the power trick.
pub fn integral_log(t: &ThetaTuple, m: u32) -> Result<IntegralLog> {
    integral_log_with(t, m, LogForm::Ratio)
}

pub fn integral_log_with(t: &ThetaTuple, m: u32, form: LogForm) -> Result<IntegralLog> {
    let g = &t.group;
    let mut values = Vec::new();
    let mut series = Vec::new();
    match form {
        LogForm::Ratio => {
            // reduce to θ(K_1'(J[G], I_G)): divide x_i by θ_i(c) = c^{p^i}, c = aug(x_0)
            let c_inv = t.entries[0]
                .augmentation()
                .inverse()
                .ok_or_else(|| Error::NotUnit("augmentation of x_0 is zero".into()))?;
            let mut scalar = c_inv;
            let mut stripped = Vec::new();
            for i in 0..=g.n {
                stripped.push(t.entries[i as usize].scale(&scalar));
                scalar = scalar.pow(g.p);
            }
            for i in 0..=g.n {
                let x = &stripped[i as usize];
                let r = if i == 0 {
                    x.clone()
                } else {
                    let v = ver_map(g, &stripped[i as usize - 1], i)?;
                    let vi = v.inverse().ok_or_else(|| Error::NotUnit(format!("ver(x_{}) is not invertible", i - 1)))?;
                    x.mul(&vi)
                };
                let (value, s) = unit_log(&r, g.m_delta, m, i)?;
                values.push(if s.integral { value.reduce_mod_p_power(m) } else { value });
                series.push(s);
            }
        }
        LogForm::Oliver => {
            // one extra digit absorbs the division by p
            let mut logs = Vec::new();
            for i in 0..=g.n {
                let (value, s) = unit_log(&t.entries[i as usize], g.m_delta, m + 1, i)?;
                logs.push(value);
                series.push(s);
            }
            for i in 0..=g.n {
                let y = &logs[i as usize];
                let mut value = y.sub(&phi_over_p(y));
                if i > 0 {
                    let prev = &logs[i as usize - 1];
                    let ab = g.level_ab(i - 1);
                    let off = GroupRingElem::from_terms(
                        &ab,
                        prev.lp().0,
                        g.p,
                        prev.terms().filter(|(h, _)| !g.in_level(g.ab_lift(i - 1, h), i)).map(|(h, c)| (h, c.clone())),
                    );
                    value = value.sub(&ver_map(g, &off, i)?);
                }
                let integral = value.is_p_integral();
                series[i as usize].integral = integral;
                values.push(if integral { value.reduce_mod_p_power(m) } else { value });
            }
        }
    }
    Ok(IntegralLog { precision: m, values, series })
}

/// Componentwise congruence of two log outputs modulo p^M.
pub fn logs_congruent(a: &[GroupRingElem], b: &[GroupRingElem], m: u32) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| congruent(x, y, Some(m)))
}

/// A random element of J[Conj(G)] with small integer and ζ_l coefficients.
pub fn random_class_elem(g: &MetabelianGroup, l: u64, p: u64, classes: usize, rng: &mut ChaCha8Rng) -> Result<ConjClassElem> {
    let mut coeffs = BTreeMap::new();
    for _ in 0..4 {
        let k = rng.gen_range(0..classes);
        let c = CycloElem::zeta(l, p, l, rng.gen_range(0..l as i64))?.scale_int(&BigInt::from(rng.gen_range(-3i64..4)));
        if !c.is_zero() {
            coeffs.insert(k, c);
        }
    }
    Ok(ConjClassElem { group: *g, lp: (l, p), coeffs })
}

/// l^{d_i (n−k)} ≡ l^{d_{i−1}(n−k)} mod p^i for d_i = d₀ p^i.
pub fn scalar_congruence(l: u64, d0: u32, p: u64, i: u32, exponent: i64) -> bool {
    let lq = |d: u64| -> BigRational {
        let e = d as i64 * exponent;
        let b = BigInt::from(l).pow(e.unsigned_abs() as u32);
        if e >= 0 {
            BigRational::from_integer(b)
        } else {
            BigRational::new(BigInt::one(), b)
        }
    };
    let diff = lq(d0 as u64 * p.pow(i)) - lq(d0 as u64 * p.pow(i - 1));
    if diff.is_zero() {
        return true;
    }
    let pb = BigInt::from(p);
    let (mut num, _) = (diff.numer().clone(), ());
    let mut v = 0;
    while (&num % &pb).is_zero() {
        num = num.div_floor(&pb);
        v += 1;
    }
    v >= i
}

/// Check that an entry is a certified unit.
pub fn certified(x: &GroupRingElem) -> bool {
    certify_unit(x).0.is_unit()
}
