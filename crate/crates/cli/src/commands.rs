use std::path::Path;

use epsk1_core::cyclo::{CycloElem, CycloModulus};
use epsk1_core::epsilon::*;
use epsk1_core::group::{Character, FinAbGroup, MetabelianGroup};
use epsk1_core::group_ring::{GroupRingElem, GroupRingJson, UnitCertificate};
use epsk1_core::k1::*;
use epsk1_core::par::Exec;
use epsk1_core::reciprocity::{synthetic_rec, unit_generators, CoherenceReport, RecDatum, RecDatumJson, TameTower, UnitNormalization};
use epsk1_core::residue::{AdditiveCharSpec, GaloisRing, LocalFieldParams};
use epsk1_core::Error;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::input::*;
use crate::{Failure, Options, Outcome};

const EXEC: Exec = Exec::Parallel;

fn to_value<T: Serialize>(x: &T) -> Result<Value, Failure> {
    serde_json::to_value(x).map_err(|e| Failure::Core(Error::Serialization(e.to_string())))
}

fn outcome<I: Serialize, R: Serialize>(input: &I, format: Format, passed: bool, result: &R) -> Result<Outcome, Failure> {
    Ok(Outcome { input: to_value(input)?, format, passed, result: to_value(result)? })
}

/// A group ring element as readable text plus its exact serialization.
#[derive(Serialize)]
struct ElementReport {
    text: String,
    exact: GroupRingJson,
}

fn coeff_text(c: &CycloElem) -> String {
    let s = c.to_string();
    if s.contains(' ') {
        format!("({s})")
    } else {
        s
    }
}

/// Identity terms print as bare coefficients, others as coeff*[g].
fn render(x: &GroupRingElem) -> Result<ElementReport, Failure> {
    let text = if x.is_zero() {
        "0".to_string()
    } else {
        x.terms()
            .map(|(g, c)| {
                if x.group().is_identity(&g) {
                    coeff_text(c)
                } else if c.is_one() {
                    format!("{g:?}")
                } else {
                    format!("{}*{g:?}", coeff_text(c))
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    };
    Ok(ElementReport { text, exact: x.to_json()? })
}

fn build_datum(d: &DatumInput, opts: &Options) -> Result<RecDatum, Failure> {
    let params = LocalFieldParams::new(d.l, d.d, d.a, d.p)?;
    let target = FinAbGroup::new(d.target.clone())?;
    match (&d.unit_images, &d.pi_image) {
        (None, None) => Ok(synthetic_rec(params, &target, opts.seed, opts.cap)?),
        (Some(images), Some(pi)) => {
            let ring = GaloisRing::new(params)?;
            let (gens, levels) = unit_generators(&ring);
            if images.len() != gens.len() {
                return Err(Failure::Schema(format!(
                    "datum.unit_images: {} images given, the standard unit generators number {}",
                    images.len(),
                    gens.len()
                )));
            }
            Ok(RecDatum::from_generators(ring, target, gens, levels, images.clone(), pi.clone(), opts.cap)?)
        }
        _ => Err(Failure::Schema("datum: unit_images and pi_image must be given together".into())),
    }
}

fn build_psi(psi: &PsiInput, ring: &GaloisRing) -> Result<AdditiveCharSpec, Failure> {
    let twist = ring.from_coeffs(&psi.unit_twist)?;
    Ok(AdditiveCharSpec::new(ring, psi.level, twist)?)
}

#[derive(Serialize)]
struct CharacterReport {
    character: Vec<u64>,
    conductor: u32,
    ramified: bool,
    value: String,
    exact: CycloElem,
    /// g(χ, ψ) g(χ^{-1}, ψ(−·)) = l^{d(a(χ) + 2n(ψ))}, ramified characters only
    #[serde(skip_serializing_if = "Option::is_none")]
    functional_equation: Option<bool>,
}

#[derive(Serialize)]
struct GaussSumReport {
    datum: RecDatumJson,
    characters: Vec<CharacterReport>,
}

pub fn gauss_sum(path: &Path, opts: &Options) -> Result<Outcome, Failure> {
    let (input, format): (GaussSumInput, _) = load(path)?;
    let datum = build_datum(&input.datum, opts)?;
    let ring = datum.ring();
    let psi = build_psi(&input.psi, ring)?;
    let psi_neg = psi.twisted(ring, &ring.from_int(-1));
    let target = datum.target();
    let chars = match &input.characters {
        Some(list) => list
            .iter()
            .map(|exps| {
                if target.contains(exps) {
                    Ok(Character { group: target.clone(), exps: exps.clone() })
                } else {
                    Err(Failure::Schema(format!("character {exps:?} is not in the dual of {:?}", target.orders())))
                }
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => {
            if target.order() > opts.cap {
                return Err(Error::Resource { what: "characters".into(), required: target.order() as u128, cap: opts.cap as u128 }.into());
            }
            target.characters()
        }
    };
    let params = *ring.params();
    let m = CycloModulus::rational(params.l, params.p)?;
    let mut reports = Vec::new();
    for chi in chars {
        let f = datum.conductor(&chi);
        let (value, fe) = if f == 0 {
            (eps_unramified(&datum, &chi, &psi)?, None)
        } else {
            let g1 = epsk1_core::epsilon::gauss_sum(&datum, &chi, &psi, opts.cap)?;
            let g2 = epsk1_core::epsilon::gauss_sum(&datum, &chi.inverse(), &psi_neg, opts.cap)?;
            let expected = CycloElem::from_rational(m, &l_power(params.l, params.d as i64 * (f as i64 + 2 * psi.level)));
            (g1.clone(), Some(&g1 * &g2 == expected))
        };
        reports.push(CharacterReport {
            character: chi.exps.clone(),
            conductor: f,
            ramified: f > 0,
            value: value.to_string(),
            exact: value,
            functional_equation: fe,
        });
    }
    let passed = reports.iter().all(|r| r.functional_equation != Some(false));
    outcome(&input, format, passed, &GaussSumReport { datum: datum.to_json(), characters: reports })
}

#[derive(Serialize)]
struct EpsilonReport {
    datum: RecDatumJson,
    element: ElementReport,
    lambda_sign: i8,
    certificate: UnitCertificate,
    evaluation: LawCheck,
}

fn epsilon_report(eps: &EpsilonResult, opts: &Options) -> Result<EpsilonReport, Failure> {
    Ok(EpsilonReport {
        datum: eps.datum.to_json(),
        element: render(&eps.element)?,
        lambda_sign: eps.lambda_sign,
        certificate: eps.certificate.clone(),
        evaluation: check_evaluation(eps, opts.cap)?,
    })
}

pub fn eps_abelian(path: &Path, opts: &Options) -> Result<Outcome, Failure> {
    let (input, format): (EpsAbelianInput, _) = load(path)?;
    let datum = build_datum(&input.datum, opts)?;
    let psi = build_psi(&input.psi, datum.ring())?;
    let eps = epsk1_core::epsilon::eps_abelian(&datum, &psi, EXEC, opts.cap)?;
    let report = epsilon_report(&eps, opts)?;
    let passed = report.certificate.is_unit() && report.evaluation.passed;
    outcome(&input, format, passed, &report)
}

#[derive(Serialize)]
struct PropertySuiteReport {
    epsilon: EpsilonReport,
    projection: LawCheck,
    c_independence: LawCheck,
    laws: PropertyReport,
}

pub fn property_suite(path: &Path, opts: &Options) -> Result<Outcome, Failure> {
    let (input, format): (PropertySuiteInput, _) = load(path)?;
    let datum = build_datum(&input.datum, opts)?;
    let psi = build_psi(&input.psi, datum.ring())?;
    let eps = epsk1_core::epsilon::eps_abelian(&datum, &psi, EXEC, opts.cap)?;
    let report = PropertySuiteReport {
        epsilon: epsilon_report(&eps, opts)?,
        projection: check_projection(&eps, EXEC, opts.cap)?,
        c_independence: check_c_independence(&eps, input.c_trials, opts.seed, EXEC, opts.cap)?,
        laws: epsk1_core::epsilon::property_suite(&eps, input.twists, opts.seed, EXEC, opts.cap)?,
    };
    let passed = report.epsilon.certificate.is_unit()
        && report.epsilon.evaluation.passed
        && report.projection.passed
        && report.c_independence.passed
        && report.laws.all_pass();
    outcome(&input, format, passed, &report)
}

#[derive(Serialize)]
struct LevelReport {
    index: u32,
    degree: u64,
    lambda_sign: i8,
    element: ElementReport,
    certificate: UnitCertificate,
}

#[derive(Serialize)]
struct TowerReport {
    normalization: UnitNormalization,
    coherence: CoherenceReport,
    levels: Vec<LevelReport>,
    conditions: MReport,
    passed: bool,
}

fn build_tower(spec: epsk1_core::reciprocity::TowerSpec, norm: UnitNormalization, opts: &Options) -> Result<TameTower, Failure> {
    Ok(TameTower::new(spec, norm, opts.cap)?)
}

fn tower_epsilon(tower: &TameTower, psi_level: i64, sign: LevelSign, opts: &Options) -> Result<EpsilonTuple, Failure> {
    let ring = tower.level(0).datum.ring();
    let psi = AdditiveCharSpec::new(ring, psi_level, ring.one())?;
    Ok(epsilon_tuple(tower, &psi, sign, EXEC, opts.cap)?)
}

fn selected_pass(r: &MReport, sel: MSelection) -> bool {
    (!sel.m1 || r.m1_pass()) && (!sel.m2 || r.m2_pass()) && (!sel.m3 || r.m3_pass())
}

pub fn tower_verify(path: &Path, opts: &Options) -> Result<Outcome, Failure> {
    let (input, format): (TowerVerifyInput, _) = load(path)?;
    let mut reports = Vec::new();
    for norm in input.normalization.expand() {
        let tower = build_tower(input.tower, norm, opts)?;
        let et = tower_epsilon(&tower, input.psi_level, input.sign, opts)?;
        let conditions = check_m1_m2_m3(&et.tuple, opts.check, EXEC)?;
        let levels = et
            .results
            .iter()
            .zip(&tower.levels)
            .map(|(e, lv)| {
                Ok(LevelReport {
                    index: lv.index,
                    degree: tower.group.p.pow(lv.index),
                    lambda_sign: e.lambda_sign,
                    element: render(&e.element)?,
                    certificate: e.certificate.clone(),
                })
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let passed = tower.coherence.all_pass() && levels.iter().all(|l| l.certificate.is_unit()) && selected_pass(&conditions, opts.check);
        reports.push(TowerReport { normalization: norm, coherence: tower.coherence.clone(), levels, conditions, passed });
    }
    let passed = reports.iter().all(|r| r.passed);
    outcome(&input, format, passed, &reports)
}

#[derive(Serialize)]
struct ClassReport {
    index: usize,
    representative: (u64, u64, u64),
    size: usize,
}

#[derive(Serialize)]
struct BetaReport {
    coefficients: Vec<(usize, String)>,
    beta: Vec<ElementReport>,
    conditions: AReport,
}

#[derive(Serialize)]
struct BetaCheckReport {
    classes: Vec<ClassReport>,
    elements: Vec<BetaReport>,
}

pub fn beta_check(path: &Path, opts: &Options) -> Result<Outcome, Failure> {
    let (input, format): (BetaCheckInput, _) = load(path)?;
    let GroupInput { p, s, n, e, m_delta } = input.group;
    let g = MetabelianGroup::new(p, s, n, e, m_delta)?;
    let classes = g.conj_classes(opts.cap)?;
    let lp = (input.l, p);
    let modulus = CycloModulus::rational(input.l, p)?;
    let elems = match &input.elements {
        Some(list) => list
            .iter()
            .map(|terms| {
                let mut coeffs = std::collections::BTreeMap::new();
                for &(k, c) in terms {
                    if k >= classes.len() {
                        return Err(Failure::Schema(format!("class index {k} out of range, the group has {} classes", classes.len())));
                    }
                    let e = coeffs.entry(k).or_insert_with(|| CycloElem::zero(modulus));
                    *e = &*e + &CycloElem::from_int(modulus, c);
                }
                Ok(ConjClassElem { group: g, lp, coeffs })
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..input.random)
                .map(|_| random_class_elem(&g, input.l, p, classes.len(), &mut rng))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let mut elements = Vec::new();
    for x in &elems {
        let b = beta_additive(x, &classes)?;
        elements.push(BetaReport {
            coefficients: x.coeffs.iter().map(|(k, c)| (*k, c.to_string())).collect(),
            beta: b.iter().map(render).collect::<Result<_, _>>()?,
            conditions: check_a1_a2_a3(&g, &b, None)?,
        });
    }
    let passed = elements.iter().all(|r| r.conditions.all_pass());
    let classes = classes
        .iter()
        .enumerate()
        .map(|(index, c)| ClassReport { index, representative: c[0], size: c.len() })
        .collect();
    outcome(&input, format, passed, &BetaCheckReport { classes, elements })
}

#[derive(Serialize)]
struct LogReport {
    tuple: Vec<ElementReport>,
    log: Vec<ElementReport>,
    series: Vec<LogSeries>,
    conditions: AReport,
}

#[derive(Serialize)]
struct IntegralLogReport {
    precision: u32,
    form: LogForm,
    normalization: UnitNormalization,
    tuples: Vec<LogReport>,
    /// 𝓛(xy) ≡ 𝓛(x) + 𝓛(y) mod p^M on consecutive pairs of random tuples
    #[serde(skip_serializing_if = "Vec::is_empty")]
    additivity: Vec<bool>,
}

fn log_report(t: &ThetaTuple, m: u32, form: LogForm) -> Result<(LogReport, Vec<GroupRingElem>), Failure> {
    let lg = integral_log_with(t, m, form)?;
    let report = LogReport {
        tuple: t.entries.iter().map(render).collect::<Result<_, _>>()?,
        log: lg.values.iter().map(render).collect::<Result<_, _>>()?,
        series: lg.series.clone(),
        conditions: check_a1_a2_a3(&t.group, &lg.values, Some(m))?,
    };
    Ok((report, lg.values))
}

/// Random draws allowed per requested tuple before giving up on certification.
const DRAWS_PER_TUPLE: usize = 50;

pub fn integral_log(path: &Path, opts: &Options) -> Result<Outcome, Failure> {
    let (input, format): (IntegralLogInput, _) = load(path)?;
    let norm = match input.normalization {
        NormalizationChoice::Classical => UnitNormalization::Classical,
        NormalizationChoice::Reversed => UnitNormalization::Reversed,
        NormalizationChoice::Both => {
            return Err(Failure::Schema("integral-log: normalization must be classical or reversed".into()))
        }
    };
    let m = opts.precision;
    if m == 0 {
        return Err(Failure::Schema("--precision must be positive".into()));
    }
    let tower = build_tower(input.tower, norm, opts)?;
    let tuples = match input.source {
        LogSource::Epsilon => vec![tower_epsilon(&tower, input.psi_level, input.sign, opts)?.tuple],
        LogSource::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut out = Vec::new();
            let (l, p) = (input.tower.l, input.tower.p);
            let mut draws = 0;
            while out.len() < input.count {
                if draws == DRAWS_PER_TUPLE * input.count.max(1) {
                    return Err(Error::Resource {
                        what: "random draws for certified unit tuples".into(),
                        required: draws as u128 + 1,
                        cap: draws as u128,
                    }
                    .into());
                }
                draws += 1;
                let th = theta(&random_unit(&tower.group, l, p, &mut rng)?)?;
                if th.entries.iter().all(certified) {
                    out.push(th);
                }
            }
            out
        }
    };
    let mut reports = Vec::new();
    let mut logs = Vec::new();
    for t in &tuples {
        let (r, v) = log_report(t, m, input.form)?;
        reports.push(r);
        logs.push(v);
    }
    let mut additivity = Vec::new();
    if input.source == LogSource::Random {
        for k in 0..tuples.len() / 2 {
            let prod = integral_log_with(&tuples[2 * k].mul(&tuples[2 * k + 1]), m, input.form)?.values;
            let sum: Vec<_> = logs[2 * k].iter().zip(&logs[2 * k + 1]).map(|(x, y)| x.add(y)).collect();
            additivity.push(logs_congruent(&prod, &sum, m));
        }
    }
    let passed = reports.iter().all(|r| r.conditions.all_pass()) && additivity.iter().all(|&b| b);
    let report = IntegralLogReport { precision: m, form: input.form, normalization: norm, tuples: reports, additivity };
    outcome(&input, format, passed, &report)
}
