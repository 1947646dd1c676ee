//! Reciprocity data: homomorphisms K^× → A through (O_K/π^a)^× × π^Z, both
//! synthetic (random surjections for testing) and the explicit tame maps of
//! a metabelian tower, with the tower's compatibilities checked on
//! construction.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{factor, gcd, pow_mod};
use crate::error::{Error, Result};
use crate::group::{Character, FinAbGroup, FinAbHom, GroupElem, MetabelianGroup};
use crate::linalg::smith;
use crate::residue::{Embedding, GaloisRing, GaloisRingElem, LocalFieldParams};

/// Finite abelian reciprocity datum: unit_map on (O/π^a)^× given on
/// generators, the image of π = l, and the full unit lookup table.
#[derive(Clone, Debug)]
pub struct RecDatum {
    ring: GaloisRing,
    target: FinAbGroup,
    unit_gens: Vec<GaloisRingElem>,
    /// filtration level of each generator: 0 for the residue-field generator, j for 1 + π^j ξ^k
    gen_levels: Vec<u32>,
    unit_images: Vec<GroupElem>,
    pi_image: GroupElem,
    table: Vec<Option<GroupElem>>,
}

/// Standard generators of (O/π^a)^×: a lift of the least primitive residue
/// and 1 + π^j ξ^k for 1 ≤ j < a, 0 ≤ k < d, with their filtration levels.
pub fn unit_generators(ring: &GaloisRing) -> (Vec<GaloisRingElem>, Vec<u32>) {
    let params = ring.params();
    let mut gens = vec![ring.residue_generator().clone()];
    let mut levels = vec![0];
    for j in 1..params.a {
        for k in 0..ring.d() {
            let mut x = ring.one();
            x.coeffs[k] = (x.coeffs[k] + params.l.pow(j)) % ring.char_modulus();
            gens.push(x);
            levels.push(j);
        }
    }
    (gens, levels)
}

/// Breadth-first closure of the unit group from generators, returning for
/// every unit its exponent vector in the generators, plus relations found
/// on revisits.
fn unit_bfs(ring: &GaloisRing, gens: &[GaloisRingElem], cap: u64) -> Result<(Vec<Option<Vec<i64>>>, Vec<Vec<i64>>)> {
    let a = ring.params().a;
    let total = ring.residue_count(a);
    if total > cap {
        return Err(Error::Resource {
            what: format!("unit group mod pi^{a}"),
            required: total as u128,
            cap: cap as u128,
        });
    }
    let mut vecs: Vec<Option<Vec<i64>>> = vec![None; total as usize];
    let mut relations = Vec::new();
    let one = ring.one();
    vecs[ring.index_of(&one, a) as usize] = Some(vec![0; gens.len()]);
    let mut queue = VecDeque::from([one]);
    while let Some(u) = queue.pop_front() {
        let uv = vecs[ring.index_of(&u, a) as usize].clone().unwrap();
        for (k, g) in gens.iter().enumerate() {
            let w = ring.mul(&u, g);
            let idx = ring.index_of(&w, a) as usize;
            let mut wv = uv.clone();
            wv[k] += 1;
            match &vecs[idx] {
                None => {
                    vecs[idx] = Some(wv);
                    queue.push_back(w);
                }
                Some(old) => {
                    let rel: Vec<i64> = wv.iter().zip(old).map(|(x, y)| x - y).collect();
                    if rel.iter().any(|&x| x != 0) {
                        relations.push(rel);
                    }
                }
            }
        }
    }
    Ok((vecs, relations))
}

/// Add a relation to a lattice basis kept in row-echelon form.
fn lattice_insert(basis: &mut Vec<Vec<i128>>, mut v: Vec<i128>) {
    let r = v.len();
    for col in 0..r {
        if v[col] == 0 {
            continue;
        }
        match basis.iter().position(|b| b.iter().take(col).all(|&x| x == 0) && b[col] != 0) {
            None => {
                basis.push(v);
                basis.sort_by_key(|b| b.iter().position(|&x| x != 0).unwrap_or(r));
                return;
            }
            Some(bi) => {
                // Euclid on the pivot column between basis[bi] and v
                let mut b = basis[bi].clone();
                while v[col] != 0 {
                    let q = b[col].div_euclid(v[col]);
                    for t in 0..r {
                        b[t] -= q * v[t];
                    }
                    std::mem::swap(&mut b, &mut v);
                }
                basis[bi] = b;
            }
        }
    }
}

/// Abstract structure of (O/π^a)^× in the standard generators: the
/// invariant decomposition and the change of basis.
#[derive(Clone, Debug)]
pub struct UnitStructure {
    /// cyclic orders d_k (all ≥ 2) of an SNF basis
    pub orders: Vec<u64>,
    /// `coords[i]` = generator i expressed in the SNF basis
    pub coords: Vec<Vec<i128>>,
}

pub fn unit_structure(ring: &GaloisRing, cap: u64) -> Result<UnitStructure> {
    let (gens, _) = unit_generators(ring);
    let (_, relations) = unit_bfs(ring, &gens, cap)?;
    let mut basis: Vec<Vec<i128>> = Vec::new();
    for rel in relations {
        lattice_insert(&mut basis, rel.into_iter().map(|x| x as i128).collect());
    }
    let snf = smith(&basis);
    let diag = snf.diagonal();
    let keep: Vec<usize> = (0..gens.len()).filter(|&k| diag[k] != 1).collect();
    Ok(UnitStructure {
        orders: keep.iter().map(|&k| diag[k] as u64).collect(),
        coords: (0..gens.len())
            .map(|i| keep.iter().map(|&k| snf.v[i][k].rem_euclid(diag[k])).collect())
            .collect(),
    })
}

impl RecDatum {
    /// Build from generator images, checking that they define a homomorphism.
    pub fn from_generators(
        ring: GaloisRing,
        target: FinAbGroup,
        unit_gens: Vec<GaloisRingElem>,
        gen_levels: Vec<u32>,
        unit_images: Vec<GroupElem>,
        pi_image: GroupElem,
        cap: u64,
    ) -> Result<Self> {
        if unit_gens.len() != unit_images.len() || unit_gens.len() != gen_levels.len() {
            return Err(Error::Invalid("one image per unit generator required".into()));
        }
        for g in unit_images.iter().chain(std::iter::once(&pi_image)) {
            if !target.contains(g) {
                return Err(Error::Invalid(format!("image {g:?} is not in the target group")));
            }
        }
        let (vecs, _) = unit_bfs(&ring, &unit_gens, cap)?;
        let a = ring.params().a;
        let mut table = vec![None; vecs.len()];
        for (idx, v) in vecs.iter().enumerate() {
            let u = ring.element_from_index(idx as u64, a);
            match v {
                Some(v) => {
                    let img = v.iter().zip(&unit_images).fold(target.identity(), |acc, (&c, g)| {
                        target.add(&acc, &target.scale(g, c))
                    });
                    table[idx] = Some(img);
                }
                None if ring.is_unit(&u) => {
                    return Err(Error::Invalid("unit generators do not generate the unit group".into()));
                }
                None => {}
            }
        }
        let datum = RecDatum { ring, target, unit_gens, gen_levels, unit_images, pi_image, table };
        datum.check_homomorphism()?;
        Ok(datum)
    }

    /// Every product of a unit with a generator must map to the sum of images.
    fn check_homomorphism(&self) -> Result<()> {
        let a = self.ring.params().a;
        for (idx, img) in self.table.iter().enumerate() {
            let Some(img) = img else { continue };
            let u = self.ring.element_from_index(idx as u64, a);
            for (g, gi) in self.unit_gens.iter().zip(&self.unit_images) {
                let w = self.ring.mul(&u, g);
                let expected = self.target.add(img, gi);
                if self.table[self.ring.index_of(&w, a) as usize].as_ref() != Some(&expected) {
                    return Err(Error::Invalid("unit images violate a relation of the unit group".into()));
                }
            }
        }
        Ok(())
    }

    pub fn ring(&self) -> &GaloisRing {
        &self.ring
    }

    pub fn params(&self) -> &LocalFieldParams {
        self.ring.params()
    }

    pub fn target(&self) -> &FinAbGroup {
        &self.target
    }

    pub fn pi_image(&self) -> &GroupElem {
        &self.pi_image
    }

    pub fn unit_gens(&self) -> &[GaloisRingElem] {
        &self.unit_gens
    }

    pub fn unit_images(&self) -> &[GroupElem] {
        &self.unit_images
    }

    pub fn level(&self) -> u32 {
        self.ring.params().a
    }

    /// unit_map(u) for a unit u (any representative mod π^a).
    pub fn unit_map(&self, u: &GaloisRingElem) -> Result<&GroupElem> {
        let a = self.level();
        let idx = self.ring.index_of(u, a) as usize;
        self.table[idx]
            .as_ref()
            .ok_or_else(|| Error::NotUnit(format!("{:?} is not a unit", u.coeffs)))
    }

    /// rec(u · π^k) = unit_map(u) + k · pi_image.
    pub fn rec_evaluate(&self, u: &GaloisRingElem, pi_exponent: i64) -> Result<GroupElem> {
        let base = self.unit_map(u)?;
        Ok(self.target.add(base, &self.target.scale(&self.pi_image, pi_exponent)))
    }

    pub fn is_surjective(&self) -> bool {
        let mut gens = self.unit_images.clone();
        gens.push(self.pi_image.clone());
        self.target.closure(&gens).len() as u64 == self.target.order()
    }

    /// Images of the generators of 1 + π^c O (all units for c = 0).
    pub fn filtration_images(&self, c: u32) -> Vec<GroupElem> {
        self.unit_images
            .iter()
            .zip(&self.gen_levels)
            .filter(|(_, &lv)| lv >= c)
            .map(|(g, _)| g.clone())
            .collect()
    }

    /// Conductor a(χ): least c ≥ 0 with χ ∘ rec trivial on 1 + π^c O.
    pub fn conductor(&self, chi: &Character) -> u32 {
        (0..=self.level())
            .find(|&c| self.filtration_images(c).iter().all(|g| chi.kills(g)))
            .unwrap_or(self.level())
    }

    /// Conductor of the whole datum, max over characters, at least 1.
    pub fn datum_conductor(&self) -> u32 {
        (1..=self.level())
            .find(|&c| self.filtration_images(c).iter().all(|g| self.target.is_identity(g)))
            .unwrap_or(self.level())
    }

    /// The datum for the quotient of the target by `map`, at its own level
    /// b = max(conductor of the quotient, 1).
    pub fn quotient(&self, map: &FinAbHom, cap: u64) -> Result<RecDatum> {
        if map.source != self.target {
            return Err(Error::Invalid("quotient map has the wrong source".into()));
        }
        let images: Vec<GroupElem> = self.unit_images.iter().map(|g| map.apply(g)).collect();
        let b = (1..=self.level())
            .find(|&c| {
                images
                    .iter()
                    .zip(&self.gen_levels)
                    .all(|(g, &lv)| lv < c || map.target.is_identity(g))
            })
            .unwrap_or(self.level());
        let ring = GaloisRing::new(self.params().with_level(b)?)?;
        let (gens, levels) = unit_generators(&ring);
        let gen_images = gens
            .iter()
            .map(|g| self.unit_map(g).map(|x| map.apply(x)))
            .collect::<Result<Vec<_>>>()?;
        RecDatum::from_generators(ring, map.target.clone(), gens, levels, gen_images, map.apply(&self.pi_image), cap)
    }

    /// Same homomorphism viewed at a deeper truncation level a' ≥ a.
    pub fn at_level(&self, a: u32, cap: u64) -> Result<RecDatum> {
        if a < self.level() {
            return Err(Error::Invalid("cannot lower the level of a datum".into()));
        }
        let ring = GaloisRing::new(self.params().with_level(a)?)?;
        let (gens, levels) = unit_generators(&ring);
        let lb = self.level();
        let images = gens
            .iter()
            .map(|g| self.unit_map(&ring.reduce(g, lb)).cloned())
            .collect::<Result<Vec<_>>>()?;
        RecDatum::from_generators(ring, self.target.clone(), gens, levels, images, self.pi_image.clone(), cap)
    }

    pub fn to_json(&self) -> RecDatumJson {
        let p = self.params();
        RecDatumJson {
            l: p.l,
            d: p.d,
            a: p.a,
            p: p.p,
            f: self.ring.defining_poly().to_vec(),
            target: self.target.orders().to_vec(),
            unit_generators: self.unit_gens.iter().map(|g| g.coeffs.clone()).collect(),
            unit_images: self.unit_images.clone(),
            pi_image: self.pi_image.clone(),
        }
    }

    pub fn from_json(j: &RecDatumJson, cap: u64) -> Result<Self> {
        let ring = GaloisRing::new(LocalFieldParams::new(j.l, j.d, j.a, j.p)?)?;
        if ring.defining_poly() != j.f.as_slice() {
            return Err(Error::Serialization(format!(
                "defining polynomial {:?} differs from the canonical {:?}",
                j.f,
                ring.defining_poly()
            )));
        }
        let target = FinAbGroup::new(j.target.clone())?;
        let gens = j
            .unit_generators
            .iter()
            .map(|c| ring.from_coeffs(&c.iter().map(|&x| x as i64).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        let (std_gens, std_levels) = unit_generators(&ring);
        if gens != std_gens {
            return Err(Error::Serialization("unit generators must be the standard generators".into()));
        }
        RecDatum::from_generators(ring, target, gens, std_levels, j.unit_images.clone(), j.pi_image.clone(), cap)
    }
}

/// Serialized reciprocity datum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecDatumJson {
    pub l: u64,
    pub d: u32,
    pub a: u32,
    pub p: u64,
    pub f: Vec<u64>,
    pub target: Vec<u64>,
    pub unit_generators: Vec<Vec<u64>>,
    pub unit_images: Vec<GroupElem>,
    pub pi_image: GroupElem,
}

/// Number of cyclic factors of order divisible by r^k.
fn count_divisible(orders: &[u64], rk: u64) -> usize {
    orders.iter().filter(|&&o| o % rk == 0).count()
}

/// Whether (O/π^a)^× × Z surjects onto `target`.
pub fn surjection_exists(units: &UnitStructure, target: &FinAbGroup) -> bool {
    let inv = target.invariant_factors();
    let primes: Vec<u64> = inv.iter().flat_map(|&o| factor(o).into_iter().map(|(r, _)| r)).collect();
    for r in primes {
        let mut rk = r;
        loop {
            let need = count_divisible(&inv, rk);
            if need == 0 {
                break;
            }
            if need > count_divisible(&units.orders, rk) + 1 {
                return false;
            }
            rk *= r;
        }
    }
    true
}

/// Random element of the d-torsion of a group.
fn random_torsion(rng: &mut ChaCha8Rng, target: &FinAbGroup, d: u64) -> GroupElem {
    target
        .orders()
        .iter()
        .map(|&o| {
            let g = gcd(o, d);
            rng.gen_range(0..g) * (o / g)
        })
        .collect()
}

/// A deterministic (per seed) random surjective datum onto `target`.
///
/// Draws that make the unit map alone surjective are preferred, so small
/// targets give fully ramified data; otherwise π is used to fill the rest.
pub fn synthetic_rec(params: LocalFieldParams, target: &FinAbGroup, seed: u64, cap: u64) -> Result<RecDatum> {
    let ring = GaloisRing::new(params)?;
    let units = unit_structure(&ring, cap)?;
    if !surjection_exists(&units, target) {
        return Err(Error::NoSurjection(format!(
            "(O/pi^{})^x x Z with unit invariants {:?} does not surject onto {:?}",
            params.a,
            units.orders,
            target.invariant_factors()
        )));
    }
    let (gens, levels) = unit_generators(&ring);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempts = 1000;
    let mut fallback = None;
    for _ in 0..attempts {
        let basis_images: Vec<GroupElem> = units.orders.iter().map(|&d| random_torsion(&mut rng, target, d)).collect();
        let pi_image = target.element(rng.gen_range(0..target.order()));
        let gen_images: Vec<GroupElem> = units
            .coords
            .iter()
            .map(|c| {
                c.iter().zip(&basis_images).fold(target.identity(), |acc, (&k, b)| {
                    target.add(&acc, &target.scale(b, k as i64))
                })
            })
            .collect();
        let unit_surj = target.closure(&gen_images).len() as u64 == target.order();
        let mut all = gen_images.clone();
        all.push(pi_image.clone());
        let surj = target.closure(&all).len() as u64 == target.order();
        if unit_surj {
            return RecDatum::from_generators(ring, target.clone(), gens, levels, gen_images, pi_image, cap);
        }
        if surj && fallback.is_none() {
            fallback = Some((gen_images, pi_image));
        }
    }
    match fallback {
        Some((imgs, pi)) => RecDatum::from_generators(ring, target.clone(), gens, levels, imgs, pi, cap),
        None => Err(Error::NoSurjection(format!("no surjection found in {attempts} random draws"))),
    }
}

/// Input specification of a tame tower.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerSpec {
    pub l: u64,
    pub d0: u32,
    pub p: u64,
    pub s: u32,
    pub n: u32,
    pub e: u64,
    pub m_delta: u64,
}

/// Sign σ of the tame unit part: rec(u) has N-coordinate σ · dlog(ū).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitNormalization {
    /// σ = −1, the classical convention
    Classical,
    /// σ = +1
    Reversed,
}

impl UnitNormalization {
    pub fn sign(self) -> i64 {
        match self {
            UnitNormalization::Classical => -1,
            UnitNormalization::Reversed => 1,
        }
    }
}

/// Outcome of one exhaustive compatibility check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckCount {
    pub checked: u64,
    pub failures: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceReport {
    /// rec_i(u) = ver(rec_{i-1}(u)) for units and π of K_{i-1}, per level i ≥ 1
    pub ver_compatibility: Vec<CheckCount>,
    /// rec_{i-1}(N(v)) = incl(rec_i(v)) for units and π of K_i, per level i ≥ 1
    pub norm_compatibility: Vec<CheckCount>,
    /// rec_i(Frob(u)) = γ · rec_i(u) · γ^{-1}, per level
    pub galois_equivariance: Vec<CheckCount>,
    pub surjective: Vec<bool>,
    pub tame_conductor: Vec<bool>,
}

impl CoherenceReport {
    pub fn all_pass(&self) -> bool {
        self.ver_compatibility
            .iter()
            .chain(&self.norm_compatibility)
            .chain(&self.galois_equivariance)
            .all(|c| c.failures == 0)
            && self.surjective.iter().all(|&b| b)
            && self.tame_conductor.iter().all(|&b| b)
    }
}

/// One level K_i of a tame tower.
#[derive(Clone, Debug)]
pub struct TowerLevel {
    pub index: u32,
    pub datum: RecDatum,
    /// embedding of the base ring O_K/π into this level
    pub base_embedding: Embedding,
}

/// Coherent reciprocity data for G = (N ⋊ Γ) × Δ over the unramified tower
/// K = K_0 ⊂ K_1 ⊂ ... ⊂ K_n, [K_i : K] = p^i.
#[derive(Clone, Debug)]
pub struct TameTower {
    pub spec: TowerSpec,
    pub group: MetabelianGroup,
    pub normalization: UnitNormalization,
    pub levels: Vec<TowerLevel>,
    pub coherence: CoherenceReport,
}

/// Check realizability of a tower spec, naming every violated condition.
pub fn check_realizability(spec: &TowerSpec) -> Result<MetabelianGroup> {
    let TowerSpec { l, d0, p, s, n, e, m_delta } = *spec;
    let group = MetabelianGroup::new(p, s, n, e, m_delta)
        .map_err(|err| Error::Realizability(err.to_string()))?;
    if l == p || !crate::arith::is_prime(l) {
        return Err(Error::Realizability(format!("l={l} must be a prime different from p={p}")));
    }
    if d0 == 0 {
        return Err(Error::Realizability("d0 must be positive".into()));
    }
    let ps = p.pow(s);
    let mut failed = Vec::new();
    let ld = pow_mod(l, d0 as u64, ps);
    if ld != e % ps {
        failed.push(format!("e = {e} is not congruent to l^d0 = {l}^{d0} = {ld} mod p^s = {ps}"));
    }
    if pow_mod(l, d0 as u64 * p.pow(n), ps) != 1 % ps {
        failed.push(format!("p^s = {ps} does not divide l^(d0 p^n) - 1 = {l}^{} - 1", d0 as u64 * p.pow(n)));
    }
    if failed.is_empty() {
        Ok(group)
    } else {
        Err(Error::Realizability(failed.join("; ")))
    }
}

impl TameTower {
    pub fn new(spec: TowerSpec, normalization: UnitNormalization, cap: u64) -> Result<Self> {
        let group = check_realizability(&spec)?;
        let TowerSpec { l, d0, p, n, .. } = spec;
        let rings = (0..=n)
            .map(|i| {
                let d = d0.checked_mul(p.pow(i) as u32).ok_or_else(|| Error::Invalid("degree overflow".into()))?;
                GaloisRing::new(LocalFieldParams::new(l, d, 1, p)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let top = &rings[n as usize];
        let q_top = top.params().q();
        if q_top > cap {
            return Err(Error::Resource {
                what: format!("residue field of the top level, {l}^{}", top.params().d),
                required: q_top as u128,
                cap: cap as u128,
            });
        }
        let to_top: Vec<Embedding> = rings.iter().map(|r| Embedding::new(r, top)).collect::<Result<_>>()?;
        let sigma = normalization.sign();
        let mut levels = Vec::new();
        for (i, ring) in rings.iter().enumerate() {
            let i = i as u32;
            let target = group.level_ab(i);
            let c = target.orders()[0];
            let m_i = (q_top - 1) / (ring.params().q() - 1);
            let (gens, gen_levels) = unit_generators(ring);
            let images = gens
                .iter()
                .map(|u| {
                    let t = top.residue_dlog(&to_top[i as usize].apply(top, u))?;
                    debug_assert_eq!(t % m_i, 0);
                    let x = (sigma * ((t / m_i) % c) as i64).rem_euclid(c as i64) as u64;
                    Ok(vec![x, 0, 0])
                })
                .collect::<Result<Vec<_>>>()?;
            let pi_image = target.normalize(&[0, -1, -(p.pow(i) as i64)]);
            let datum = RecDatum::from_generators(ring.clone(), target, gens, gen_levels, images, pi_image, cap)?;
            levels.push(TowerLevel {
                index: i,
                datum,
                base_embedding: Embedding::new(&rings[0], ring)?,
            });
        }
        let mut tower = TameTower {
            spec,
            group,
            normalization,
            levels,
            coherence: CoherenceReport {
                ver_compatibility: vec![],
                norm_compatibility: vec![],
                galois_equivariance: vec![],
                surjective: vec![],
                tame_conductor: vec![],
            },
        };
        tower.coherence = tower.check_coherence(cap)?;
        if !tower.coherence.all_pass() {
            return Err(Error::Coherence(format!("{:?}", tower.coherence)));
        }
        Ok(tower)
    }

    pub fn n(&self) -> u32 {
        self.spec.n
    }

    pub fn level(&self, i: u32) -> &TowerLevel {
        &self.levels[i as usize]
    }

    fn check_coherence(&self, cap: u64) -> Result<CoherenceReport> {
        let g = &self.group;
        let mut ver = Vec::new();
        let mut norm = Vec::new();
        for i in 1..=self.n() {
            let lo = &self.levels[i as usize - 1].datum;
            let hi = &self.levels[i as usize].datum;
            let emb = Embedding::new(lo.ring(), hi.ring())?;
            let lo_units = lo.ring().units(1, cap)?;
            // (a) ver-compatibility on units and on π
            let mut count = CheckCount { checked: 0, failures: 0 };
            for u in &lo_units {
                let lhs = hi.unit_map(&emb.apply(hi.ring(), u))?;
                let rhs = g.transfer(i, lo.unit_map(u)?)?;
                count.checked += 1;
                count.failures += u64::from(lhs != &rhs);
            }
            count.checked += 1;
            count.failures += u64::from(hi.pi_image() != &g.transfer(i, lo.pi_image())?);
            ver.push(count);
            // (b) norm-compatibility
            let preimage: HashMap<GaloisRingElem, GaloisRingElem> =
                lo_units.iter().map(|u| (emb.apply(hi.ring(), u), u.clone())).collect();
            let step = lo.params().d;
            let incl = |a: &[u64]| -> GroupElem {
                let src = g.level_ab(i - 1);
                src.normalize(&[a[0] as i64, (a[1] * g.p) as i64, a[2] as i64])
            };
            let mut count = CheckCount { checked: 0, failures: 0 };
            for v in hi.ring().units(1, cap)? {
                let nv = hi.ring().relative_norm(&v, step);
                let u = preimage
                    .get(&nv)
                    .ok_or_else(|| Error::Coherence("norm does not land in the subfield".into()))?;
                count.checked += 1;
                count.failures += u64::from(lo.unit_map(u)? != &incl(hi.unit_map(&v)?));
            }
            // N(l) = l^p
            count.checked += 1;
            count.failures += u64::from(lo.target().scale(lo.pi_image(), g.p as i64) != incl(hi.pi_image()));
            norm.push(count);
        }
        let gamma = (0, 1 % g.gamma_order(), 0);
        let mut equiv = Vec::new();
        let mut surj = Vec::new();
        let mut tame = Vec::new();
        for (i, level) in self.levels.iter().enumerate() {
            let d = &level.datum;
            let ring = d.ring();
            let frob_step = self.spec.d0;
            let mut count = CheckCount { checked: 0, failures: 0 };
            for u in ring.units(1, cap)? {
                let lhs = d.unit_map(&ring.frobenius_pow(&u, frob_step))?;
                let rhs = g.conj_ab(i as u32, gamma, d.unit_map(&u)?);
                count.checked += 1;
                count.failures += u64::from(lhs != &rhs);
            }
            equiv.push(count);
            surj.push(d.is_surjective());
            tame.push(d.datum_conductor() == 1);
        }
        Ok(CoherenceReport {
            ver_compatibility: ver,
            norm_compatibility: norm,
            galois_equivariance: equiv,
            surjective: surj,
            tame_conductor: tame,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residue::DEFAULT_CAP;

    fn params(l: u64, d: u32, a: u32) -> LocalFieldParams {
        LocalFieldParams::new(l, d, a, if l == 2 { 3 } else { 2 }).unwrap()
    }

    #[test]
    fn unit_structure_matches_known_groups() {
        let s = unit_structure(&GaloisRing::new(params(3, 1, 2)).unwrap(), DEFAULT_CAP).unwrap();
        assert_eq!(s.orders, vec![6]);
        let s = unit_structure(&GaloisRing::new(params(2, 1, 3)).unwrap(), DEFAULT_CAP).unwrap();
        assert_eq!(s.orders, vec![2, 2]);
        let s = unit_structure(&GaloisRing::new(params(3, 2, 2)).unwrap(), DEFAULT_CAP).unwrap();
        // F_9^× × (1 + 3O)/(1 + 9O) ≅ Z/8 × (Z/3)^2
        assert_eq!(s.orders, vec![3, 24]);
    }

    #[test]
    fn legendre_datum() {
        let d = synthetic_rec(params(3, 1, 1), &FinAbGroup::cyclic(2), 7, DEFAULT_CAP).unwrap();
        let r = d.ring();
        assert_eq!(d.rec_evaluate(&r.from_int(2), 0).unwrap(), vec![1]);
        assert_eq!(d.rec_evaluate(&r.from_int(1), 0).unwrap(), vec![0]);
    }

    #[test]
    fn trivial_target_maps_everything_to_identity() {
        let d = synthetic_rec(params(13, 1, 1), &FinAbGroup::trivial(), 1, DEFAULT_CAP).unwrap();
        for u in d.ring().units(1, DEFAULT_CAP).unwrap() {
            assert!(d.unit_map(&u).unwrap().is_empty());
        }
    }

    #[test]
    fn z3_datum_factors_through_principal_units() {
        let d = synthetic_rec(params(3, 1, 2), &FinAbGroup::cyclic(3), 3, DEFAULT_CAP).unwrap();
        let r = d.ring();
        // -1 generates the μ_2 part and must be killed
        assert_eq!(d.unit_map(&r.from_int(-1)).unwrap(), &vec![0]);
        assert_ne!(d.unit_map(&r.from_int(4)).unwrap(), &vec![0]);
        assert_eq!(d.datum_conductor(), 2);
    }

    #[test]
    fn impossible_surjection_is_reported() {
        // (Z/3)^× × Z has rank ≤ 2 at the prime 2 with one Z/2: no map onto (Z/2)^3
        let t = FinAbGroup::new(vec![2, 2, 2]).unwrap();
        assert!(matches!(synthetic_rec(params(3, 1, 1), &t, 0, DEFAULT_CAP), Err(Error::NoSurjection(_))));
        // exponent 4 not reachable from units, but π can carry it
        let t = FinAbGroup::new(vec![4]).unwrap();
        let d = synthetic_rec(params(3, 1, 1), &t, 0, DEFAULT_CAP).unwrap();
        assert!(d.is_surjective());
    }

    #[test]
    fn synthetic_is_deterministic_per_seed() {
        let t = FinAbGroup::new(vec![2, 3]).unwrap();
        let a = synthetic_rec(params(3, 1, 2), &t, 42, DEFAULT_CAP).unwrap();
        let b = synthetic_rec(params(3, 1, 2), &t, 42, DEFAULT_CAP).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn bad_images_rejected() {
        let ring = GaloisRing::new(params(3, 1, 2)).unwrap();
        let (gens, levels) = unit_generators(&ring);
        let n = gens.len();
        // generator 2 mod 9 has order 6; sending it to an element of order 4 is not a homomorphism
        let res = RecDatum::from_generators(ring, FinAbGroup::cyclic(4), gens, levels, vec![vec![1]; n], vec![0], DEFAULT_CAP);
        assert!(res.is_err());
    }

    #[test]
    fn homomorphism_on_random_pairs() {
        let t = FinAbGroup::new(vec![2, 3]).unwrap();
        let d = synthetic_rec(params(3, 1, 3), &t, 5, DEFAULT_CAP).unwrap();
        let r = d.ring();
        let units = r.units(3, DEFAULT_CAP).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let u = &units[rng.gen_range(0..units.len())];
            let v = &units[rng.gen_range(0..units.len())];
            let uv = r.mul(u, v);
            assert_eq!(
                d.rec_evaluate(&uv, 0).unwrap(),
                t.add(&d.rec_evaluate(u, 0).unwrap(), &d.rec_evaluate(v, 0).unwrap())
            );
        }
    }

    #[test]
    fn flagship_tower_is_coherent() {
        let spec = TowerSpec { l: 13, d0: 1, p: 3, s: 2, n: 1, e: 4, m_delta: 1 };
        for norm in [UnitNormalization::Classical, UnitNormalization::Reversed] {
            let t = TameTower::new(spec, norm, DEFAULT_CAP).unwrap();
            assert!(t.coherence.all_pass());
            assert_eq!(t.coherence.ver_compatibility[0].checked, 13);
            assert_eq!(t.coherence.norm_compatibility[0].checked, 2197);
            assert_eq!(t.level(0).datum.target().invariant_factors(), vec![3, 3]);
            assert_eq!(t.level(1).datum.target().invariant_factors(), vec![9]);
        }
    }

    #[test]
    fn p2_and_abelian_towers() {
        let spec = TowerSpec { l: 3, d0: 1, p: 2, s: 2, n: 1, e: 3, m_delta: 1 };
        let t = TameTower::new(spec, UnitNormalization::Classical, DEFAULT_CAP).unwrap();
        assert_eq!(t.level(0).datum.target().invariant_factors(), vec![2, 2]);
        assert_eq!(t.level(1).datum.target().invariant_factors(), vec![4]);
        let spec = TowerSpec { l: 13, d0: 1, p: 3, s: 1, n: 1, e: 1, m_delta: 1 };
        assert!(TameTower::new(spec, UnitNormalization::Classical, DEFAULT_CAP).is_ok());
        let spec = TowerSpec { l: 13, d0: 1, p: 3, s: 2, n: 1, e: 4, m_delta: 2 };
        assert!(TameTower::new(spec, UnitNormalization::Classical, DEFAULT_CAP).is_ok());
    }

    #[test]
    fn realizability_violations_named() {
        let spec = TowerSpec { l: 13, d0: 1, p: 3, s: 2, n: 1, e: 7, m_delta: 1 };
        let err = TameTower::new(spec, UnitNormalization::Classical, DEFAULT_CAP).unwrap_err();
        assert!(matches!(&err, Error::Realizability(m) if m.contains("congruent")));
        let spec = TowerSpec { l: 13, d0: 1, p: 3, s: 2, n: 1, e: 2, m_delta: 1 };
        let err = TameTower::new(spec, UnitNormalization::Classical, DEFAULT_CAP).unwrap_err();
        assert!(matches!(&err, Error::Realizability(m) if m.contains("e^(p^n)")));
    }
}
