//! Gauss sums, the abelian epsilon element ε₀ ∈ J[A], and the checks tying
//! them together: evaluation at characters, projection to quotients,
//! independence of the auxiliary elements c, the transformation laws in ψ
//! and Frobenius, the unramified twist law, and the change-of-rings map.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::lcm;
use crate::cyclo::{CycloElem, CycloModulus};
use crate::error::{Error, Result};
use crate::group::{Character, FinAbGroup, FinAbHom, GroupElem};
use crate::group_ring::{certify_unit, det, GroupRingElem, UnitCertificate};
use crate::par::{fold_reduce, Exec};
use crate::reciprocity::RecDatum;
use crate::residue::{psi_exponent, AdditiveCharSpec, GaloisRing, GaloisRingElem};

pub use crate::group_ring::{delta_component as delta_decompose, delta_reconstruct};

/// ε₀ of a datum together with its inputs and unit certificate.
#[derive(Clone, Debug)]
pub struct EpsilonResult {
    pub element: GroupRingElem,
    pub datum: RecDatum,
    pub psi: AdditiveCharSpec,
    /// (−1)^{[K_i:K]−1} when attached to a tower level, otherwise +1
    pub lambda_sign: i8,
    pub certificate: UnitCertificate,
}

/// l^k as an exact rational (k may be negative).
pub fn l_power(l: u64, k: i64) -> BigRational {
    let base = BigInt::from(l).pow(k.unsigned_abs() as u32);
    if k >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

/// ζ_{e1}^{x} · ζ_{e2}^{y} as a single root of unity.
#[cfg(test)]
fn root_product(l: u64, p: u64, e1: u64, x: u64, e2: u64, y: u64) -> Result<CycloElem> {
    let m = lcm(e1, e2);
    let k = (x as u128 * (m / e1) as u128 + y as u128 * (m / e2) as u128) % m as u128;
    CycloElem::zeta(l, p, m, k as i64)
}

/// ψ restricted to a coarser truncation of the same field.
pub fn psi_at_level(psi: &AdditiveCharSpec, ring: &GaloisRing) -> AdditiveCharSpec {
    let twist = GaloisRingElem {
        coeffs: psi.unit_twist.coeffs.iter().map(|c| c % ring.char_modulus()).collect(),
    };
    AdditiveCharSpec { level: psi.level, unit_twist: twist }
}

/// The raw ε₀ sum with chosen unit parts w_i of c_{a−i} = w_i · π^{a−i+n(ψ)}
/// (all 1 when `unit_parts` is None).
pub fn eps_abelian_sum(
    datum: &RecDatum,
    psi: &AdditiveCharSpec,
    unit_parts: Option<&[GaloisRingElem]>,
    exec: Exec,
    cap: u64,
) -> Result<GroupRingElem> {
    let ring = datum.ring();
    let params = *ring.params();
    let (l, d, a, p) = (params.l, params.d as i64, params.a, params.p);
    let n = psi.level;
    let target = datum.target();
    let ord = target.order() as usize;
    let la = l.pow(a);
    let units = ring.units(a, cap)?;
    let ones = vec![ring.one(); a as usize];
    let parts = unit_parts.unwrap_or(&ones);
    if parts.len() != a as usize {
        return Err(Error::Invalid(format!("need {a} unit parts, got {}", parts.len())));
    }
    // per i: twist W·w_i^{-1} and the group shift rec(c_{a-i}) = rec(w_i) + (a-i+n)·π
    let mut twists = Vec::new();
    let mut shifts = Vec::new();
    for (i, w) in parts.iter().enumerate() {
        let winv = ring.inverse(w).ok_or_else(|| Error::NotUnit("unit part of c is not a unit".into()))?;
        twists.push(AdditiveCharSpec { level: n, unit_twist: ring.mul(&psi.unit_twist, &winv) });
        shifts.push(datum.rec_evaluate(w, a as i64 - i as i64 + n)?);
    }
    let unit_images: Vec<usize> = units
        .iter()
        .map(|u| datum.unit_map(u).map(|g| target.index(g) as usize))
        .collect::<Result<_>>()?;
    let items: Vec<(usize, &GaloisRingElem)> = unit_images.into_iter().zip(&units).collect();
    let width = ord * la as usize;
    let counts = fold_reduce(
        exec,
        &items,
        || vec![0u64; a as usize * width],
        |mut acc, &(gi, u)| {
            let g = target.element(gi as u64);
            for i in 0..a as usize {
                let depth = a - i as u32;
                let e = psi_exponent(ring, &twists[i], u, depth).expect("depth within level");
                let h = target.sub(&shifts[i], &g);
                let slot = target.index(&h) as usize * la as usize + (e * l.pow(i as u32)) as usize;
                acc[i * width + slot] += 1;
            }
            acc
        },
        |mut x, y| {
            for (a, b) in x.iter_mut().zip(y) {
                *a += b;
            }
            x
        },
    );
    // l^{d(n-i)} = l^{d(n-i)+D} / l^D with D making every exponent non-negative
    let shift = (d * (a as i64 - 1 - n)).max(0);
    let modulus = CycloModulus::new(l, a, p, 0, 1)?;
    let mut out = GroupRingElem::zero(target, l, p);
    let lb = BigInt::from(l);
    for g in 0..ord {
        let mut terms: Vec<([u64; 3], BigInt)> = Vec::new();
        for e in 0..la as usize {
            let mut total = BigInt::zero();
            for i in 0..a as usize {
                let c = counts[i * width + g * la as usize + e];
                if c != 0 {
                    total += BigInt::from(c) * lb.pow((d * (n - i as i64) + shift) as u32);
                }
            }
            if !total.is_zero() {
                terms.push(([e as u64, 0, 0], total));
            }
        }
        let coeff = CycloElem::from_monomials(modulus, &terms).scale(&l_power(l, -shift));
        out.add_term(&target.element(g as u64), coeff);
    }
    Ok(out)
}

/// ε₀ with canonical c_{a−i} = π^{a−i+n(ψ)}, certified to be a unit of J[A].
pub fn eps_abelian(datum: &RecDatum, psi: &AdditiveCharSpec, exec: Exec, cap: u64) -> Result<EpsilonResult> {
    let element = eps_abelian_sum(datum, psi, None, exec, cap)?;
    let (certificate, _) = certify_unit(&element);
    if !certificate.is_unit() {
        return Err(Error::NotUnit(format!("epsilon element is not a unit: {certificate:?}")));
    }
    Ok(EpsilonResult { element, datum: datum.clone(), psi: psi.clone(), lambda_sign: 1, certificate })
}

/// Gauss sum l^{d n(ψ)} Σ_{u mod π^{a(χ)}} χ^{-1}(rec(u c^{-1})) ψ(u c^{-1}) for
/// ramified χ, with c = w · π^{n(ψ)+a(χ)}.
pub fn gauss_sum_with(datum: &RecDatum, chi: &Character, psi: &AdditiveCharSpec, w: &GaloisRingElem, cap: u64) -> Result<CycloElem> {
    let f = datum.conductor(chi);
    if f == 0 {
        return Err(Error::Unramified(format!("character {:?} kills all units", chi.exps)));
    }
    let ring = datum.ring();
    let params = ring.params();
    let (l, p) = (params.l, params.p);
    let n = psi.level;
    let e_chi = chi.group.exponent();
    let winv = ring.inverse(w).ok_or_else(|| Error::NotUnit("unit part of c is not a unit".into()))?;
    let twist = AdditiveCharSpec { level: n, unit_twist: ring.mul(&psi.unit_twist, &winv) };
    let shift = datum.rec_evaluate(w, n + f as i64)?;
    let lf = l.pow(f);
    let mut hist: HashMap<(u64, u64), i64> = HashMap::new();
    for u in ring.units(f, cap)? {
        // χ^{-1}(rec(u c^{-1})) = χ(rec(c) - rec(u))
        let g = datum.target().sub(&shift, datum.unit_map(&u)?);
        let x = chi.exponent_at(&g);
        let y = psi_exponent(ring, &twist, &u, f)?;
        *hist.entry((x, y)).or_default() += 1;
    }
    let mut keys: Vec<_> = hist.into_iter().collect();
    keys.sort();
    let m = lcm(e_chi, lf);
    let modulus = CycloModulus::for_root_order(l, p, m)?;
    let terms: Vec<_> = keys
        .into_iter()
        .map(|((x, y), c)| {
            let k = (x as u128 * (m / e_chi) as u128 + y as u128 * (m / lf) as u128) % m as u128;
            (modulus.root_exponents(m, k as i64), BigInt::from(c))
        })
        .collect();
    Ok(CycloElem::from_monomials(modulus, &terms).scale(&l_power(l, params.d as i64 * n)))
}

pub fn gauss_sum(datum: &RecDatum, chi: &Character, psi: &AdditiveCharSpec, cap: u64) -> Result<CycloElem> {
    gauss_sum_with(datum, chi, psi, &datum.ring().one(), cap)
}

/// −χ(π^{n(ψ)+1}) l^{d n(ψ)} for χ trivial on units.
pub fn eps_unramified(datum: &RecDatum, chi: &Character, psi: &AdditiveCharSpec) -> Result<CycloElem> {
    let params = datum.params();
    let g = datum.target().scale(datum.pi_image(), psi.level + 1);
    let v = chi.value(&g, params.l, params.p)?;
    Ok(-v.scale(&l_power(params.l, params.d as i64 * psi.level)))
}

/// ε₀(K, χ, ψ) by the closed form matching the conductor of χ.
pub fn closed_form(datum: &RecDatum, chi: &Character, psi: &AdditiveCharSpec, cap: u64) -> Result<CycloElem> {
    if datum.conductor(chi) == 0 {
        eps_unramified(datum, chi, psi)
    } else {
        gauss_sum(datum, chi, psi, cap)
    }
}

pub fn eps_evaluate(eps: &EpsilonResult, chi: &Character) -> CycloElem {
    eps.element.evaluate(chi)
}

/// Push ε₀ forward to a quotient of the target.
pub fn eps_project(eps: &EpsilonResult, quotient: &FinAbHom) -> Result<GroupRingElem> {
    if quotient.source != *eps.datum.target() {
        return Err(Error::Invalid("quotient map does not start at the datum's group".into()));
    }
    Ok(eps.element.push_forward(quotient))
}

/// Result of checking one identity over a family of instances.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawCheck {
    pub law: String,
    pub checked: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

impl LawCheck {
    fn new(law: &str) -> Self {
        LawCheck { law: law.into(), checked: 0, passed: true, counterexample: None }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.passed {
            self.passed = false;
            self.counterexample = Some(what());
        }
    }
}

/// χ(ε₀) against the closed form for every character of the datum's group.
pub fn check_evaluation(eps: &EpsilonResult, cap: u64) -> Result<LawCheck> {
    let mut law = LawCheck::new("evaluation: chi(eps0) equals the closed-form local constant");
    for chi in eps.datum.target().characters() {
        let lhs = eps_evaluate(eps, &chi);
        let rhs = closed_form(&eps.datum, &chi, &eps.psi, cap)?;
        law.record(lhs == rhs, || format!("chi={:?}: {} vs {}", chi.exps, lhs, rhs));
    }
    Ok(law)
}

/// Push-forward to every quotient equals ε₀ of the quotient datum.
pub fn check_projection(eps: &EpsilonResult, exec: Exec, cap: u64) -> Result<LawCheck> {
    let mut law = LawCheck::new("projection: push-forward equals eps0 of the quotient datum");
    let target = eps.datum.target();
    for sub in target.subgroups(cap)? {
        let (_, map) = target.quotient(&sub)?;
        let lhs = eps_project(eps, &map)?;
        let qd = eps.datum.quotient(&map, cap)?;
        let psi = psi_at_level(&eps.psi, qd.ring());
        let rhs = eps_abelian_sum(&qd, &psi, None, exec, cap)?;
        law.record(lhs == rhs, || format!("subgroup of order {}: {} vs {}", sub.len(), lhs, rhs));
    }
    Ok(law)
}

/// Random unit parts for every c_{a−i} leave ε₀ unchanged.
pub fn check_c_independence(eps: &EpsilonResult, trials: usize, seed: u64, exec: Exec, cap: u64) -> Result<LawCheck> {
    let mut law = LawCheck::new("c-independence: eps0 does not depend on the unit parts of c");
    let ring = eps.datum.ring();
    let units = ring.units(eps.datum.level(), cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let parts: Vec<_> = (0..eps.datum.level()).map(|_| units[rng.gen_range(0..units.len())].clone()).collect();
        let x = eps_abelian_sum(&eps.datum, &eps.psi, Some(&parts), exec, cap)?;
        law.record(x == eps.element, || format!("unit parts {:?}", parts.iter().map(|w| &w.coeffs).collect::<Vec<_>>()));
    }
    Ok(law)
}

/// All transformation laws of ε₀ in one report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    /// ε₀(ψ_c) = rec(c) · ε₀(ψ) for units c
    pub twist_by_unit: LawCheck,
    /// the same identity with rec(c)^{-1}, reported for comparison
    pub twist_by_unit_inverse_form: LawCheck,
    /// φ_p(ε₀) = rec(p) · ε₀
    pub frobenius: LawCheck,
    /// maximal unramified quotient: ε₀ = −l^{d n(ψ)} · rec(π)^{n(ψ)+1}
    pub unramified_closed_form: LawCheck,
    /// (χμ)(ε₀) = μ(rec π)^{max(a(χ),1)+n(ψ)} χ(ε₀) for unramified μ
    pub unramified_twist: LawCheck,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.twist_by_unit.passed && self.frobenius.passed && self.unramified_closed_form.passed && self.unramified_twist.passed
    }
}

pub fn property_suite(eps: &EpsilonResult, twists: usize, seed: u64, exec: Exec, cap: u64) -> Result<PropertyReport> {
    let datum = &eps.datum;
    let ring = datum.ring();
    let params = *ring.params();
    let target = datum.target();
    let (l, p) = (params.l, params.p);
    let units = ring.units(params.a, cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut iii = LawCheck::new("eps0(psi_c) = rec(c) * eps0(psi)");
    let mut iii_inv = LawCheck::new("eps0(psi_c) = rec(c)^-1 * eps0(psi)");
    let mut cs = vec![ring.one()];
    cs.extend((1..twists).map(|_| units[rng.gen_range(0..units.len())].clone()));
    for c in &cs {
        let twisted = eps_abelian_sum(datum, &eps.psi.twisted(ring, c), None, exec, cap)?;
        let rc = datum.unit_map(c)?;
        let one = CycloElem::one(CycloModulus::rational(l, p)?);
        let fwd = GroupRingElem::basis(target, rc, one.clone()).mul(&eps.element);
        let back = GroupRingElem::basis(target, &target.neg(rc), one).mul(&eps.element);
        iii.record(twisted == fwd, || format!("c={:?}", c.coeffs));
        iii_inv.record(twisted == back, || format!("c={:?}", c.coeffs));
    }

    let mut iv = LawCheck::new("frobenius_p(eps0) = rec(p) * eps0");
    let rp = datum.unit_map(&ring.from_int(p as i64))?;
    let rhs = GroupRingElem::basis(target, rp, CycloElem::one(CycloModulus::rational(l, p)?)).mul(&eps.element);
    let lhs = eps.element.frobenius_p();
    iv.record(lhs == rhs, || format!("{} vs {}", lhs, rhs));

    // maximal unramified quotient A / <unit images>
    let mut vi = LawCheck::new("unramified datum: eps0 = -l^(d n) * rec(pi)^(n+1)");
    let (_, map) = target.quotient(&datum.filtration_images(0))?;
    let qd = datum.quotient(&map, cap)?;
    let qpsi = psi_at_level(&eps.psi, qd.ring());
    let q_eps = eps_abelian_sum(&qd, &qpsi, None, exec, cap)?;
    let pi_pow = map.target.scale(qd.pi_image(), eps.psi.level + 1);
    let closed = GroupRingElem::basis(
        &map.target,
        &pi_pow,
        CycloElem::from_rational(CycloModulus::rational(l, p)?, &-l_power(l, params.d as i64 * eps.psi.level)),
    );
    vi.record(q_eps == closed, || format!("{} vs {}", q_eps, closed));

    let mut seven = LawCheck::new("(chi mu)(eps0) = mu(rec pi)^(max(a(chi),1)+n) chi(eps0)");
    let chars = target.characters();
    let unram: Vec<&Character> = chars.iter().filter(|mu| datum.conductor(mu) == 0).collect();
    for chi in &chars {
        let base = eps.element.evaluate(chi);
        let k = datum.conductor(chi).max(1) as i64 + eps.psi.level;
        for mu in &unram {
            let lhs = eps.element.evaluate(&chi.mul(mu));
            let factor = mu.value(&target.scale(datum.pi_image(), k), l, p)?;
            seven.record(lhs == &factor * &base, || format!("chi={:?}, mu={:?}", chi.exps, mu.exps));
        }
    }
    Ok(PropertyReport {
        twist_by_unit: iii,
        twist_by_unit_inverse_form: iii_inv,
        frobenius: iv,
        unramified_closed_form: vi,
        unramified_twist: seven,
    })
}

/// Change of rings through a free rank-r module Y over F[P] carrying
/// commuting matrices for the generators of G: x ↦ det(Σ c_g M(g)).
pub fn k1_change_of_rings(
    x: &GroupRingElem,
    target: &FinAbGroup,
    generator_matrices: &[Vec<Vec<GroupRingElem>>],
) -> Result<GroupRingElem> {
    let g = x.group();
    let (l, p) = x.lp();
    if generator_matrices.len() != g.rank() {
        return Err(Error::Invalid("one action matrix per generator of G required".into()));
    }
    let r = generator_matrices.first().map_or(0, |m| m.len());
    let identity: Vec<Vec<GroupRingElem>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| if i == j { GroupRingElem::one(target, l, p) } else { GroupRingElem::zero(target, l, p) })
                .collect()
        })
        .collect();
    let matmul = |a: &Vec<Vec<GroupRingElem>>, b: &Vec<Vec<GroupRingElem>>| -> Vec<Vec<GroupRingElem>> {
        (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| (0..r).fold(GroupRingElem::zero(target, l, p), |acc, k| acc.add(&a[i][k].mul(&b[k][j]))))
                    .collect()
            })
            .collect()
    };
    let matpow = |m: &Vec<Vec<GroupRingElem>>, e: u64| (0..e).fold(identity.clone(), |acc, _| matmul(&acc, m));
    for (k, m) in generator_matrices.iter().enumerate() {
        if m.len() != r || m.iter().any(|row| row.len() != r || row.iter().any(|c| c.group() != target)) {
            return Err(Error::Invalid(format!("action matrix {k} has the wrong shape")));
        }
        if matpow(m, g.orders()[k]) != identity {
            return Err(Error::Invalid(format!("action matrix {k} does not have order dividing {}", g.orders()[k])));
        }
        for m2 in &generator_matrices[..k] {
            if matmul(m, m2) != matmul(m2, m) {
                return Err(Error::Invalid("action matrices do not commute".into()));
            }
        }
    }
    let mut total: Vec<Vec<GroupRingElem>> = (0..r).map(|_| vec![GroupRingElem::zero(target, l, p); r]).collect();
    for (gv, c) in x.terms() {
        let mg = gv
            .iter()
            .zip(generator_matrices)
            .fold(identity.clone(), |acc, (&e, m)| matmul(&acc, &matpow(m, e)));
        for i in 0..r {
            for j in 0..r {
                total[i][j] = total[i][j].add(&mg[i][j].scale(c));
            }
        }
    }
    Ok(det(&total, target, l, p))
}

/// Helper used by the CLI and tests: the element as (group element, coefficient string) pairs.
pub fn describe(x: &GroupRingElem) -> Vec<(GroupElem, String)> {
    x.terms().map(|(g, c)| (g, c.to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reciprocity::{synthetic_rec, unit_generators};
    use crate::residue::{LocalFieldParams, DEFAULT_CAP};

    fn params(l: u64, d: u32, a: u32) -> LocalFieldParams {
        LocalFieldParams::new(l, d, a, if l == 2 { 3 } else { 2 }).unwrap()
    }

    // Legendre symbol on units, π ↦ identity
    fn legendre() -> RecDatum {
        let ring = GaloisRing::new(params(3, 1, 1)).unwrap();
        let (gens, levels) = unit_generators(&ring);
        RecDatum::from_generators(ring, FinAbGroup::cyclic(2), gens, levels, vec![vec![1]], vec![0], DEFAULT_CAP).unwrap()
    }

    fn zeta3(k: i64) -> CycloElem {
        CycloElem::zeta(3, 2, 3, k).unwrap()
    }

    #[test]
    fn legendre_gauss_sum() {
        let d = legendre();
        let psi = AdditiveCharSpec::standard(d.ring());
        let sign = Character { group: FinAbGroup::cyclic(2), exps: vec![1] };
        let g = gauss_sum(&d, &sign, &psi, DEFAULT_CAP).unwrap();
        assert_eq!(g, zeta3(1) - zeta3(2));
        let psi2 = AdditiveCharSpec::new(d.ring(), 0, d.ring().from_int(2)).unwrap();
        assert_eq!(gauss_sum(&d, &sign, &psi2, DEFAULT_CAP).unwrap(), zeta3(2) - zeta3(1));
        let triv = Character::trivial(&FinAbGroup::cyclic(2));
        assert!(matches!(gauss_sum(&d, &triv, &psi, DEFAULT_CAP), Err(Error::Unramified(_))));
    }

    #[test]
    fn unramified_closed_forms() {
        let d = legendre();
        let triv = Character::trivial(d.target());
        let m = CycloModulus::rational(3, 2).unwrap();
        let psi0 = AdditiveCharSpec::standard(d.ring());
        assert_eq!(eps_unramified(&d, &triv, &psi0).unwrap(), CycloElem::from_int(m, -1));
        let psi2 = AdditiveCharSpec::new(d.ring(), 2, d.ring().one()).unwrap();
        assert_eq!(eps_unramified(&d, &triv, &psi2).unwrap(), CycloElem::from_int(m, -9));
        // order-3 unramified character with χ(π) = ζ_3
        let ring = GaloisRing::new(params(3, 1, 1)).unwrap();
        let (gens, levels) = unit_generators(&ring);
        let z3 = FinAbGroup::cyclic(3);
        let ud = RecDatum::from_generators(ring, z3.clone(), gens, levels, vec![vec![0]], vec![1], DEFAULT_CAP).unwrap();
        let chi = Character { group: z3, exps: vec![1] };
        assert_eq!(eps_unramified(&ud, &chi, &psi0).unwrap(), -zeta3(1));
    }

    #[test]
    fn trivial_and_legendre_epsilon() {
        let ring = GaloisRing::new(params(3, 1, 1)).unwrap();
        let (gens, levels) = unit_generators(&ring);
        let trivial = RecDatum::from_generators(ring, FinAbGroup::trivial(), gens, levels, vec![vec![]], vec![], DEFAULT_CAP).unwrap();
        let psi = AdditiveCharSpec::standard(trivial.ring());
        let e = eps_abelian(&trivial, &psi, Exec::Sequential, DEFAULT_CAP).unwrap();
        assert_eq!(e.element.to_string(), "(-1)");
        let d = legendre();
        let e = eps_abelian(&d, &psi, Exec::Parallel, DEFAULT_CAP).unwrap();
        let sign = Character { group: FinAbGroup::cyclic(2), exps: vec![1] };
        assert_eq!(eps_evaluate(&e, &sign), zeta3(1) - zeta3(2));
        assert_eq!(e.element.augmentation(), CycloElem::from_int(*zeta3(1).modulus(), -1));
        assert!(e.certificate.is_unit());
    }

    #[test]
    fn functional_equation_by_double_sum() {
        // independent oracle: Σ_{u,v} χ(v/u) ψ(W(u - v)/π^f) l^{2dn}, compared against the gauss_sum product
        for (a, target) in [(1u32, vec![2u64]), (2, vec![6]), (3, vec![2, 9]), (4, vec![3])] {
            let d = synthetic_rec(params(3, 1, a), &FinAbGroup::new(target).unwrap(), 11, DEFAULT_CAP).unwrap();
            let ring = d.ring();
            for n in [0i64, 1] {
                let psi = AdditiveCharSpec::new(ring, n, ring.one()).unwrap();
                let psi_neg = AdditiveCharSpec::new(ring, n, ring.from_int(-1)).unwrap();
                for chi in d.target().characters() {
                    let f = d.conductor(&chi);
                    if f == 0 {
                        continue;
                    }
                    let prod = gauss_sum(&d, &chi, &psi, DEFAULT_CAP).unwrap() * gauss_sum(&d, &chi.inverse(), &psi_neg, DEFAULT_CAP).unwrap();
                    let units = ring.units(f, DEFAULT_CAP).unwrap();
                    let mut oracle = CycloElem::zero(CycloModulus::rational(3, 2).unwrap());
                    for u in &units {
                        for v in &units {
                            let g = d.target().sub(d.unit_map(v).unwrap(), d.unit_map(u).unwrap());
                            let diff = ring.sub(u, v);
                            let e = ring.trace(&diff) % 3u64.pow(f);
                            oracle = oracle + root_product(3, 2, chi.group.exponent(), chi.exponent_at(&g), 3u64.pow(f), e).unwrap();
                        }
                    }
                    let oracle = oracle.scale(&l_power(3, 2 * n));
                    assert_eq!(prod, oracle);
                    // frozen closed form: l^{d(a(χ) + 2n)}
                    let closed = CycloElem::from_rational(CycloModulus::rational(3, 2).unwrap(), &l_power(3, f as i64 + 2 * n));
                    assert_eq!(prod, closed, "a={a}, n={n}, chi={:?}", chi.exps);
                }
            }
        }
    }

    #[test]
    fn change_of_rings_examples() {
        let g = FinAbGroup::cyclic(4);
        let pq = FinAbGroup::cyclic(2);
        let (l, p) = (3, 2);
        let m = CycloModulus::rational(l, p).unwrap();
        let x = GroupRingElem::from_terms(&g, l, p, vec![(vec![0], CycloElem::from_int(m, 3)), (vec![1], CycloElem::from_int(m, 1))]);
        // rank 1 via the surjection Z/4 → Z/2
        let gen = vec![vec![GroupRingElem::basis(&pq, &[1], CycloElem::one(m))]];
        let surj = FinAbHom::new(g.clone(), pq.clone(), vec![vec![1]]).unwrap();
        assert_eq!(k1_change_of_rings(&x, &pq, &[gen]).unwrap(), x.push_forward(&surj));
        // scalar s acting on rank 2: s^2
        let s = GroupRingElem::one(&g, l, p).scale_int(5);
        let one = GroupRingElem::one(&pq, l, p);
        let zero = GroupRingElem::zero(&pq, l, p);
        let idm = vec![vec![one.clone(), zero.clone()], vec![zero.clone(), one.clone()]];
        assert_eq!(k1_change_of_rings(&s, &pq, &[idm.clone()]).unwrap(), one.scale_int(25));
        // non-involution for a Z/2 generator is rejected
        let bad = vec![vec![one.scale_int(2), zero.clone()], vec![zero, one]];
        let y = GroupRingElem::one(&pq, l, p);
        assert!(k1_change_of_rings(&y, &pq, &[bad]).is_err());
    }

    #[test]
    fn laws_hold_on_small_data() {
        let cases: Vec<(LocalFieldParams, Vec<u64>, i64)> = vec![
            (params(3, 1, 2), vec![6], 0),
            (params(3, 1, 2), vec![2, 3], 1),
            (params(3, 2, 1), vec![8], 0),
            (params(2, 1, 3), vec![2, 2], 0),
            (params(5, 1, 2), vec![4, 5], -1),
        ];
        for (k, (pr, orders, n)) in cases.into_iter().enumerate() {
            let d = synthetic_rec(pr, &FinAbGroup::new(orders).unwrap(), k as u64, DEFAULT_CAP).unwrap();
            let psi = AdditiveCharSpec::new(d.ring(), n, d.ring().one()).unwrap();
            let e = eps_abelian(&d, &psi, Exec::Parallel, DEFAULT_CAP).unwrap();
            assert!(check_evaluation(&e, DEFAULT_CAP).unwrap().passed, "case {k}");
            let proj = check_projection(&e, Exec::Parallel, DEFAULT_CAP).unwrap();
            assert!(proj.passed, "case {k}: {proj:?}");
            assert!(check_c_independence(&e, 3, 5, Exec::Parallel, DEFAULT_CAP).unwrap().passed, "case {k}");
            let rep = property_suite(&e, 4, 9, Exec::Parallel, DEFAULT_CAP).unwrap();
            assert!(rep.all_pass(), "case {k}: {rep:#?}");
            let seq = eps_abelian_sum(&d, &psi, None, Exec::Sequential, DEFAULT_CAP).unwrap();
            assert_eq!(seq, e.element);
        }
    }
}
