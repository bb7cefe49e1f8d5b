//! Closed-form resonances from fixed-point multipliers: eigenvalue sets,
//! traces, spectral determinants, decay rates, and the multiplier catalogue
//! of the maps `Ψ_{K,A}`.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::cone_geometry::{QuadrantWeight, Sigma};
use crate::dynamics_checks::{certify_cases, orientation, Case, MappingCase, DEFAULT_SAMPLES};
use crate::fixed_points::{all_fixed_point_data, FixedPointRecord};
use crate::map_algebra::{MapWord, C64};
use crate::{Error, Result};

const ONE: C64 = C64::new(1.0, 0.0);

/// Multipliers `λ_σ` in the order of [`Sigma::ALL`], the sign `ω_T` and the
/// mapping cases of `T` and `T⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda: [[C64; 2]; 4],
    pub omega: i8,
    pub l1: Case,
    pub lm1: Case,
}

impl Multipliers {
    pub fn get(&self, sigma: Sigma) -> [C64; 2] {
        self.lambda[sigma.index()]
    }

    pub fn from_records(records: &[FixedPointRecord], omega: i8, l1: Case, lm1: Case) -> Result<Self> {
        let mut lambda = [[C64::new(0.0, 0.0); 2]; 4];
        for s in Sigma::ALL {
            let r = records.iter().find(|r| r.sigma == s).ok_or(Error::Empty)?;
            lambda[s.index()] = r.multipliers;
        }
        Ok(Multipliers { lambda, omega, l1, lm1 })
    }

    /// Every multiplier vanishes (the linear case).
    pub fn trivial(omega: i8) -> Self {
        Multipliers { lambda: [[C64::new(0.0, 0.0); 2]; 4], omega, l1: Case::EP, lm1: Case::EP }
    }
}

fn prod_pow(a: &[C64], k: &[u32], pick: usize) -> C64 {
    a.iter().zip(k).skip(pick).step_by(2).fold(ONE, |acc, (&ai, &ki)| acc * ai.powu(ki))
}

/// The catalogue of multipliers of `Ψ_{K,A} = I11^s ∘ U(k1,a1) ∘ … ∘ U(kn,an)`.
pub fn closed_form_multipliers_psi(ks: &[u32], a: &[C64], s: bool) -> Result<Multipliers> {
    if ks.is_empty() || ks.len() != a.len() {
        return Err(Error::Empty);
    }
    let n = ks.len();
    let ao = prod_pow(a, ks, 0);
    let ae = prod_pow(a, ks, 1);
    let odd = n % 2 == 1;
    let conj2 = |p: [C64; 2]| [p[0].conj(), p[1].conj()];
    let (mm, pp, pm, mp) = match (s, odd) {
        (false, true) => {
            let r = (ao * ae).sqrt();
            let mm = [r, -r];
            // the period-two orbit through (∞, 0) and (0, ∞) gives the
            // product of all parameters, not Ā_o A_e
            let v = ao * ae;
            let mix = [v, v.conj()];
            (mm, conj2(mm), mix, mix)
        }
        (false, false) => {
            let mm = [ao, ae];
            let mp = [ao.conj(), ae];
            (mm, conj2(mm), conj2(mp), mp)
        }
        (true, true) => {
            let mm = [ao.conj() * ae, ao * ae.conj()];
            let r = (ao * ae.conj()).sqrt();
            let mp = [r, -r];
            (mm, mm, conj2(mp), mp)
        }
        (true, false) => {
            let v = [C64::new(ao.norm_sqr(), 0.0), C64::new(ae.norm_sqr(), 0.0)];
            (v, v, v, v)
        }
    };
    let sort = crate::fixed_points::sort_pair;
    let l1 = if s { Case::ER } else { Case::EP };
    let lm1 = if (n + s as usize) % 2 == 0 { Case::EP } else { Case::ER };
    let omega = if n % 2 == 0 { 1 } else { -1 };
    Ok(Multipliers { lambda: [sort(mm), sort(pp), sort(pm), sort(mp)], omega, l1, lm1 })
}

/// One term of `{1} ∪ E₁ ∪ E₋₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occurrence {
    pub value: C64,
    /// `None` for the eigenvalue `1` of the constants.
    pub sector: Option<Sigma>,
    pub n: [u32; 2],
    /// The `±` of a square-root branch, `1` otherwise.
    pub sign: i8,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: C64,
    pub mult: usize,
}

fn arg_key(z: C64) -> i64 {
    let mut a = z.arg();
    if a < 0.0 {
        a += TAU;
    }
    let q = (a * 1e9).round() as i64;
    if q >= (TAU * 1e9).round() as i64 {
        0
    } else {
        q
    }
}

fn sort_key(o: &Occurrence) -> (i64, i64, usize, [u32; 2], i8) {
    let m = (o.value.norm().ln() * 1e9).round() as i64;
    let s = o.sector.map_or(0, |s| 1 + s.index());
    (-m, arg_key(o.value), s, o.n, -o.sign)
}

fn cmp_occ(a: &Occurrence, b: &Occurrence) -> Ordering {
    sort_key(a).cmp(&sort_key(b))
}

/// Lattice points `n ≥ (start, start)` with `p^{n1} q^{n2} ≥ r` (moduli,
/// ties admitted up to `1e-9` in log space). A zero modulus pins its index
/// to `0`, which is empty when `start = 1`.
pub fn quadrant_lattice(p: f64, q: f64, r: f64, start: u32) -> Vec<[u32; 2]> {
    let lr = r.ln() - 1e-9;
    let bound = |m: f64| -> Option<u32> {
        if m <= 0.0 {
            None
        } else if m >= 1.0 {
            Some(u32::MAX)
        } else {
            Some((lr / m.ln()).floor().max(0.0).min(1e7) as u32)
        }
    };
    let (bp, bq) = (bound(p), bound(q));
    let range = |b: Option<u32>| if start == 0 { b.unwrap_or(0) } else { b.unwrap_or(0) };
    if start == 1 && (bp.is_none() || bq.is_none()) {
        return Vec::new();
    }
    let (lp, lq) = (if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }, if q > 0.0 { q.ln() } else { f64::NEG_INFINITY });
    let mut out = Vec::new();
    for n1 in start..=range(bp) {
        let a = if n1 == 0 { 0.0 } else { n1 as f64 * lp };
        if a < lr {
            break;
        }
        for n2 in start..=range(bq) {
            let b = if n2 == 0 { 0.0 } else { n2 as f64 * lq };
            if a + b < lr {
                break;
            }
            if n1 == 0 && n2 == 0 {
                continue;
            }
            out.push([n1, n2]);
        }
    }
    out
}

fn mono(l: [C64; 2], n: [u32; 2]) -> C64 {
    let f = |z: C64, k: u32| if k == 0 { ONE } else { z.powu(k) };
    f(l[0], n[0]) * f(l[1], n[1])
}

/// All occurrences with `|v| ≥ r`, unsorted.
pub fn occurrences_above(m: &Multipliers, r: f64) -> Vec<Occurrence> {
    let mut out = vec![Occurrence { value: ONE, sector: None, n: [0, 0], sign: 1 }];
    let abs = |l: [C64; 2]| (l[0].norm(), l[1].norm());
    for (ell, case, start) in [(1i8, m.l1, 0u32), (-1, m.lm1, 1)] {
        let [s0, s1] = Sigma::of_ell(ell);
        match case {
            Case::EP => {
                let w = if ell < 0 { m.omega as f64 } else { 1.0 };
                for s in [s0, s1] {
                    let l = m.get(s);
                    let (p, q) = abs(l);
                    for n in quadrant_lattice(p, q, r, start) {
                        out.push(Occurrence { value: mono(l, n) * w, sector: Some(s), n, sign: 1 });
                    }
                }
            }
            Case::ER => {
                let l = m.get(s0);
                let (p, q) = abs(l);
                for n in quadrant_lattice(p, q, r * r, start) {
                    let v = mono(l, n).sqrt();
                    out.push(Occurrence { value: v, sector: Some(s0), n, sign: 1 });
                    out.push(Occurrence { value: -v, sector: Some(s0), n, sign: -1 });
                }
            }
            Case::FAIL => {}
        }
    }
    out
}

/// Merge runs of equal values into multiplicities.
pub fn group(occ: &[Occurrence]) -> Vec<Eigenvalue> {
    let mut out: Vec<Eigenvalue> = Vec::new();
    for o in occ {
        match out.last_mut() {
            Some(e) if (e.value - o.value).norm() <= 1e-12 * e.value.norm().max(1e-300) + 1e-300 => e.mult += 1,
            _ => out.push(Eigenvalue { value: o.value, mult: 1 }),
        }
    }
    out
}

/// The `count` largest eigenvalues `{1} ∪ E₁ ∪ E₋₁`, counted with
/// multiplicity, sorted by modulus then argument. A tie at the cut is
/// completed, so the last multiplicity is never split.
pub fn resonance_set(m: &Multipliers, count: usize) -> Vec<Eigenvalue> {
    let mut r = 0.5;
    let mut occ = occurrences_above(m, r);
    while occ.len() < count && r > 1e-300 {
        r *= 0.5;
        occ = occurrences_above(m, r);
    }
    occ.sort_by(cmp_occ);
    if occ.len() > count {
        let cut = sort_key(&occ[count - 1]);
        let keep = occ.iter().position(|o| {
            let k = sort_key(o);
            (k.0, k.1) > (cut.0, cut.1)
        });
        occ.truncate(keep.unwrap_or(occ.len()).max(count));
    }
    group(&occ)
}

/// Every occurrence down to modulus `r`, sorted.
pub fn resonances_above(m: &Multipliers, r: f64) -> Vec<Occurrence> {
    let mut occ = occurrences_above(m, r);
    occ.sort_by(cmp_occ);
    occ
}

fn dd(a: C64, b: C64) -> C64 {
    ONE / ((ONE - a) * (ONE - b)) - ONE
}

fn off(mu: [C64; 2], k: u32) -> C64 {
    let (a, b) = (mu[0].powu(k), mu[1].powu(k));
    a * b / ((ONE - a) * (ONE - b))
}

/// `Tr C_T^k = S₁(k) + S₋₁(k)` from the closed case formulas.
pub fn trace_power(m: &Multipliers, k: u32) -> C64 {
    let pw = |l: [C64; 2], j: u32| (l[0].powu(j), l[1].powu(j));
    let s1 = match m.l1 {
        Case::EP => {
            let (a, b) = pw(m.get(Sigma::MM), k);
            let (c, d) = pw(m.get(Sigma::PP), k);
            ONE + dd(a, b) + dd(c, d)
        }
        Case::ER if k % 2 == 1 => ONE,
        Case::ER => {
            let (a, b) = pw(m.get(Sigma::MM), k / 2);
            ONE + 2.0 * dd(a, b)
        }
        Case::FAIL => ONE,
    };
    let sm1 = match m.lm1 {
        Case::EP => {
            let w = (m.omega as f64).powi(k as i32);
            (off(m.get(Sigma::MP), k) + off(m.get(Sigma::PM), k)) * w
        }
        Case::ER if k % 2 == 1 => C64::new(0.0, 0.0),
        Case::ER => 2.0 * off(m.get(Sigma::MP), k / 2),
        Case::FAIL => C64::new(0.0, 0.0),
    };
    s1 + sm1
}

/// Closed-form `Σ |v|` over one sector's occurrences.
fn sector_abs_sum(m: &Multipliers, ell: i8) -> f64 {
    let abs = |l: [C64; 2]| (l[0].norm(), l[1].norm());
    let n1 = |p: f64, q: f64| 1.0 / ((1.0 - p) * (1.0 - q)) - 1.0;
    let n2 = |p: f64, q: f64| p * q / ((1.0 - p) * (1.0 - q));
    let (case, f): (Case, &dyn Fn(f64, f64) -> f64) = if ell > 0 { (m.l1, &n1) } else { (m.lm1, &n2) };
    let [s0, s1] = Sigma::of_ell(ell);
    match case {
        Case::EP => {
            let (a, b) = abs(m.get(s0));
            let (c, d) = abs(m.get(s1));
            f(a, b) + f(c, d)
        }
        Case::ER => {
            let (a, b) = abs(m.get(s0));
            2.0 * f(a.sqrt(), b.sqrt())
        }
        Case::FAIL => 0.0,
    }
}

/// `(1 − z) χ_T(z)` as a product over occurrences with `|v| ≥ cutoff`,
/// with a bound on the omitted tail.
pub fn spectral_determinant(m: &Multipliers, z: C64, cutoff: f64) -> (C64, f64) {
    let occ = occurrences_above(m, cutoff);
    let mut value = ONE;
    let mut kept = 0.0;
    for o in &occ {
        value *= ONE - z * o.value;
        if o.sector.is_some() {
            kept += o.value.norm();
        }
    }
    let total = sector_abs_sum(m, 1) + sector_abs_sum(m, -1);
    let tail = (total - kept).max(0.0);
    let zc = z.norm() * cutoff;
    let bound = if zc < 1.0 {
        let b = z.norm() * tail / (1.0 - zc);
        value.norm() * (b.exp() - 1.0)
    } else {
        f64::INFINITY
    };
    (value, bound)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    pub d: u8,
    pub eta: Option<f64>,
}

/// Moduli governing the decay of eigenvalues built from `λ_σ`: `|λ|` for
/// an EP side, `|λ|^{1/2}` for an ER side.
fn effective_moduli(m: &Multipliers, sigma: Sigma) -> [f64; 2] {
    let case = if sigma.ell() > 0 { m.l1 } else { m.lm1 };
    let l = m.get(sigma);
    let f = |z: C64| if case == Case::ER { z.norm().sqrt() } else { z.norm() };
    [f(l[0]), f(l[1])]
}

/// Decay class `d` and rate: `η₂` for stretched-exponential decay, `η₁` for
/// exponential decay, none for super-exponential decay.
pub fn decay_classification(m: &Multipliers) -> Decay {
    let eps = 1e-300;
    let mut s2 = 0.0;
    let mut any2 = false;
    for s in Sigma::ALL {
        let r = effective_moduli(m, s);
        if r[0] > eps && r[1] > eps {
            any2 = true;
            s2 += 1.0 / (r[0].ln() * r[1].ln());
        }
    }
    if any2 {
        return Decay { d: 2, eta: Some((0.5 * s2).powf(-0.5)) };
    }
    let mut s1 = 0.0;
    let mut any1 = false;
    for s in Sigma::of_ell(1) {
        for r in effective_moduli(m, s) {
            if r > eps {
                any1 = true;
                s1 += 1.0 / (-r.ln());
            }
        }
    }
    if any1 {
        Decay { d: 1, eta: Some(1.0 / s1) }
    } else {
        Decay { d: 0, eta: None }
    }
}

/// `N(r) = #{n : |λ_n| ≥ r}`, by enumeration, including the eigenvalue `1`.
pub fn counting_function(m: &Multipliers, r: f64) -> usize {
    occurrences_above(m, r).len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub word: String,
    pub weight: Option<QuadrantWeight>,
    pub case: Option<MappingCase>,
    pub omega: i8,
    pub multipliers: Multipliers,
    pub records: Vec<FixedPointRecord>,
    pub eigenvalues: Vec<Eigenvalue>,
    pub decay: Decay,
    pub chi_samples: Option<Vec<(C64, C64)>>,
}

/// Resonance report for the multipliers `m` of the map `word`.
pub fn report_from_multipliers(word: &MapWord, m: Multipliers, count: usize) -> ResonanceReport {
    ResonanceReport {
        word: word.to_string(),
        weight: None,
        case: None,
        omega: m.omega,
        multipliers: m,
        records: Vec::new(),
        eigenvalues: resonance_set(&m, count),
        decay: decay_classification(&m),
        chi_samples: None,
    }
}

/// Predict resonances for a word with known mapping cases.
pub fn predict_with_case(word: &MapWord, case: &MappingCase, count: usize) -> Result<ResonanceReport> {
    let records = all_fixed_point_data(word, case)?;
    let m = Multipliers::from_records(&records, orientation(word), case.l1.case, case.lm1.case)?;
    let mut rep = report_from_multipliers(word, m, count);
    rep.case = Some(*case);
    if case.l1.margin.is_finite() {
        rep.weight = Some(QuadrantWeight::new(case.l1.delta, case.lm1.delta));
    }
    rep.records = records;
    Ok(rep)
}

/// Certify the mapping cases by sampling, locate the four fixed points and
/// return the `count` leading predicted eigenvalues.
pub fn predict(word: &MapWord, count: usize) -> Result<ResonanceReport> {
    let case = certify_cases(word, DEFAULT_SAMPLES)?;
    for (ell, e) in [(1, case.l1), (-1, case.lm1)] {
        if e.case == Case::FAIL {
            return Err(Error::CertificationFailed(format!("no EP/ER certificate for ℓ = {ell} (best margin {:.3e})", e.margin)));
        }
    }
    predict_with_case(word, &case, count)
}
