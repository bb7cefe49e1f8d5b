//! Hyperbolic matrices in `GL2(Z)`, their reduction to products of
//! `[[k,1],[1,0]]`, and nonlinear maps in a given homotopy class with a
//! prescribed resonance decay.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::dynamics_checks::{Case, MappingCase};
use crate::map_algebra::{inverse, Atom, IMat2, MapWord, C64};
use crate::resonance_theory::{
    closed_form_multipliers_psi, decay_classification, predict_with_case, report_from_multipliers, ResonanceReport,
};
use crate::{Error, Result};

const ID: IMat2 = [[1, 0], [0, 1]];
const BFS_DEPTH: usize = 20;
const BFS_STATES: usize = 200_000;
/// Eigenvalues listed in the report of a constructed map.
pub const REPORT_COUNT: usize = 64;

fn det(m: &IMat2) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn mul(a: &IMat2, b: &IMat2) -> Result<IMat2> {
    let mut out = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let x = a[i][0].checked_mul(b[0][j]).ok_or(Error::Overflow)?;
            let y = a[i][1].checked_mul(b[1][j]).ok_or(Error::Overflow)?;
            out[i][j] = x.checked_add(y).ok_or(Error::Overflow)?;
        }
    }
    Ok(out)
}

/// Inverse of a unimodular matrix.
pub fn inv(m: &IMat2) -> IMat2 {
    let d = det(m);
    [[m[1][1] * d, -m[0][1] * d], [-m[1][0] * d, m[0][0] * d]]
}

fn neg(m: &IMat2) -> IMat2 {
    [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]]
}

/// Eigenvalues real and off the unit circle.
pub fn is_hyperbolic(m: &IMat2) -> bool {
    let t = m[0][0] + m[1][1];
    match det(m) {
        1 => t.abs() > 2,
        -1 => t != 0,
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionResult {
    /// `s` in the factor `(−1)^s`.
    pub sign: bool,
    #[serde(rename = "K")]
    pub k: Vec<u32>,
    #[serde(rename = "Q")]
    pub q: IMat2,
    pub residual_check: bool,
}

/// `(−1)^s ∏ [[k_i,1],[1,0]]`.
pub fn standard_product(k: &[u32], s: bool) -> Result<IMat2> {
    let mut p = ID;
    for &ki in k {
        p = mul(&p, &[[ki as i64, 1], [1, 0]])?;
    }
    Ok(if s { neg(&p) } else { p })
}

/// Peel factors `[[k,1],[1,0]]` off the left of a nonnegative matrix.
fn peel(m: &IMat2) -> Option<Vec<u32>> {
    if m.iter().flatten().any(|&v| v < 0) {
        return None;
    }
    if m[0][1] == 1 && m[1][0] == 1 && m[1][1] == 0 && m[0][0] >= 1 {
        return Some(vec![m[0][0] as u32]);
    }
    let [[a, b], [c, d]] = *m;
    if c == 0 {
        return None;
    }
    for k in 1..=a / c {
        let rest = [[c, d], [a - k * c, b - k * d]];
        if rest[1][1] < 0 {
            continue;
        }
        if let Some(mut tail) = peel(&rest) {
            let mut out = vec![k as u32];
            out.append(&mut tail);
            return Some(out);
        }
    }
    None
}

fn isqrt(n: i64) -> i64 {
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Pre-period of the continued fraction of the expanding slope
/// `x = (p + √D) / q` of `m`, with `p = a − d`, `D = tr² − 4 det`, `q = 2c`.
fn preperiod(m: &IMat2) -> Option<Vec<i64>> {
    let [[a, _], [c, d]] = *m;
    if c == 0 {
        return None;
    }
    let big_d = (a + d) * (a + d) - 4 * det(m);
    let s = isqrt(big_d);
    let (mut p, mut q) = (a - d, 2 * c);
    let mut seen: HashMap<(i64, i64), usize> = HashMap::new();
    let mut digits = Vec::new();
    for i in 0..10_000 {
        if let Some(&j) = seen.get(&(p, q)) {
            let _ = i;
            return Some(digits[..j].to_vec());
        }
        seen.insert((p, q), i);
        let ai = if q > 0 { (p + s).div_euclid(q) } else { (-p - s - 1).div_euclid(-q) };
        digits.push(ai);
        let p2 = ai.checked_mul(q)? - p;
        let q2 = (big_d - p2 * p2) / q;
        p = p2;
        q = q2;
    }
    None
}

fn conj_by(q: &IMat2, m: &IMat2) -> Result<IMat2> {
    mul(&mul(q, m)?, &inv(q))
}

fn finish(m: &IMat2, sign: bool, k: Vec<u32>, q: IMat2) -> Result<ReductionResult> {
    let target = standard_product(&k, sign)?;
    let residual_check = conj_by(&q, m)? == target;
    if !residual_check {
        return Err(Error::ReductionFailed(*m));
    }
    Ok(ReductionResult { sign, k, q, residual_check })
}

/// Find `Q` and `(s, K)` with `Q M Q⁻¹ = (−1)^s ∏ [[k_i,1],[1,0]]`. The sign
/// is fixed so that the trace becomes positive; then `M` is factored
/// directly, or via the `M_a = [[a,1],[−1,0]]` conjugation, or after
/// conjugating by the continued-fraction pre-period of its expanding slope,
/// with a bounded search over generator conjugations as a last resort.
pub fn reduce_to_standard(m: &IMat2) -> Result<ReductionResult> {
    if det(m).abs() != 1 {
        return Err(Error::NotUnimodular(*m));
    }
    if !is_hyperbolic(m) {
        return Err(Error::NotHyperbolic(*m));
    }
    let sign = m[0][0] + m[1][1] < 0;
    let mp = if sign { neg(m) } else { *m };
    if let Some(k) = peel(&mp) {
        return finish(m, sign, k, ID);
    }
    if mp[0][1] == 1 && mp[1][0] == -1 && mp[1][1] == 0 && mp[0][0] >= 3 {
        return finish(m, sign, vec![1, (mp[0][0] - 2) as u32], [[1, 0], [1, 1]]);
    }
    if let Some(pre) = preperiod(&mp) {
        let mut c = ID;
        for &ai in &pre {
            c = mul(&c, &[[ai, 1], [1, 0]])?;
        }
        let qm = inv(&c);
        let reduced = conj_by(&qm, &mp)?;
        if let Some(k) = peel(&reduced) {
            return finish(m, sign, k, qm);
        }
    }
    // breadth-first search over conjugations by generator matrices
    let gens: [IMat2; 4] = [[[1, 1], [0, 1]], [[1, -1], [0, 1]], [[0, 1], [1, 0]], [[1, 0], [0, -1]]];
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([(mp, ID, 0usize)]);
    seen.insert(mp);
    while let Some((cur, q, depth)) = queue.pop_front() {
        if let Some(k) = peel(&cur) {
            return finish(m, sign, k, q);
        }
        if depth >= BFS_DEPTH || seen.len() > BFS_STATES {
            continue;
        }
        for g in &gens {
            let Ok(next) = conj_by(g, &cur) else { continue };
            if seen.insert(next) {
                queue.push_back((next, mul(g, &q)?, depth + 1));
            }
        }
    }
    Err(Error::ReductionFailed(*m))
}

/// A word in `F`, `Finv`, `R`, `I(0,1)`, `I(1,0)` whose linear part is `q`.
pub fn automorphism_word(q: &IMat2) -> Result<MapWord> {
    if det(q).abs() != 1 {
        return Err(Error::NotUnimodular(*q));
    }
    // left-multiply by elementary matrices until the identity is reached;
    // q is then the product of their inverses in order
    let mut m = *q;
    let mut ops: Vec<Atom> = Vec::new();
    let apply = |m: &IMat2, a: Atom| mul(&a.matrix(), m);
    while m[1][0] != 0 {
        let t = m[0][0].div_euclid(m[1][0]);
        for _ in 0..t.unsigned_abs() {
            let a = if t > 0 { Atom::Finv } else { Atom::F };
            m = apply(&m, a)?;
            ops.push(a);
        }
        m = apply(&m, Atom::R)?;
        ops.push(Atom::R);
    }
    if m[0][0] < 0 {
        m = apply(&m, Atom::I(1, 0))?;
        ops.push(Atom::I(1, 0));
    }
    if m[1][1] < 0 {
        m = apply(&m, Atom::I(0, 1))?;
        ops.push(Atom::I(0, 1));
    }
    let b = m[0][1];
    for _ in 0..b.unsigned_abs() {
        let a = if b > 0 { Atom::Finv } else { Atom::F };
        m = apply(&m, a)?;
        ops.push(a);
    }
    debug_assert_eq!(m, ID);
    Ok(MapWord::new(ops.into_iter().map(Atom::inverse).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DecayTarget {
    /// `−log|λ_n| / n^{1/2} → η`.
    Stretched(f64),
    /// `−log|λ_n| / n → η`.
    Exponential(f64),
    /// `χ_T = 1`.
    Trivial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopicMap {
    /// `τ_Q⁻¹ ∘ τ' ∘ τ_Q`, homotopic to `τ_B`.
    pub word: MapWord,
    /// `τ'`, in the reduced homotopy class.
    pub inner: MapWord,
    #[serde(rename = "Q")]
    pub q: IMat2,
    pub reduction: ReductionResult,
    /// Common parameter of the Moebius factors.
    pub a: f64,
    pub predicted: ResonanceReport,
}

fn bisect(f: impl Fn(f64) -> f64, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    let (flo, fhi) = (f(lo), f(hi));
    let (tmin, tmax) = (flo.min(fhi), flo.max(fhi));
    if !(target >= tmin && target <= tmax) {
        return Err(Error::TargetInfeasible(format!("rate {target} outside [{tmin:.3e}, {tmax:.3e}] reachable with a in [1e-6, 1-1e-6]")));
    }
    let decreasing = flo > fhi;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > target) == decreasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A nonlinear map homotopic to `τ_B` whose resonances decay as requested:
/// `Ψ_{K,A}` with all `a_i = a` (stretched), `Ψ_{K,A}` with `a_1 = 0` and the
/// other `a_i = a` (exponential, `n` even), or `Ξ_{K,1/2}` (trivial, `n > 1`),
/// conjugated back by the reduction matrix.
pub fn build_homotopic_map(b: &IMat2, target: DecayTarget) -> Result<HomotopicMap> {
    let red = reduce_to_standard(b)?;
    let n = red.k.len();
    let s = red.sign;
    let (inner, a, predicted) = match target {
        DecayTarget::Stretched(eta) | DecayTarget::Exponential(eta) => {
            let exponential = matches!(target, DecayTarget::Exponential(_));
            if exponential && n % 2 == 1 {
                return Err(Error::TargetInfeasible("exponential decay needs an orientation-preserving class".into()));
            }
            if !(eta > 0.0) {
                return Err(Error::TargetInfeasible(format!("rate must be positive, got {eta}")));
            }
            let params = |a: f64| -> Vec<C64> {
                (0..n).map(|i| if exponential && i == 0 { C64::new(0.0, 0.0) } else { C64::new(a, 0.0) }).collect()
            };
            let rate = |a: f64| {
                let m = closed_form_multipliers_psi(&red.k, &params(a), s).expect("nonempty K");
                decay_classification(&m).eta.unwrap_or(f64::NAN)
            };
            let a = bisect(rate, eta)?;
            let inner = MapWord::psi(&red.k, &params(a), s);
            let m = closed_form_multipliers_psi(&red.k, &params(a), s)?;
            let rep = report_from_multipliers(&inner, m, REPORT_COUNT);
            (inner, a, rep)
        }
        DecayTarget::Trivial => {
            if n == 1 {
                let why = if s {
                    "the reduced form has a single factor; the trivial-resonance family needs at least two"
                } else {
                    "the class contains a linear conjugate of (z1^k z2, z1)"
                };
                return Err(Error::TargetInfeasible(why.into()));
            }
            let a = 0.5;
            let inner = MapWord::xi(&red.k, C64::new(a, 0.0), s);
            let l1 = if s { Case::ER } else { Case::EP };
            let lm1 = if (n + s as usize) % 2 == 0 { Case::EP } else { Case::ER };
            let rep = predict_with_case(&inner, &MappingCase::assumed(l1, lm1), REPORT_COUNT)?;
            (inner, a, rep)
        }
    };
    let tq = automorphism_word(&red.q)?;
    let word = inverse(&tq).compose(&inner).compose(&tq);
    let mut predicted = predicted;
    predicted.word = word.to_string();
    Ok(HomotopicMap { word, inner, q: red.q, reduction: red, a, predicted })
}
