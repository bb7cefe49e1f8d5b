//! Sampled certificates for the hypotheses of the spectral theory: constant
//! cone fields, the EP/ER mapping alternative, connecting tori, area and
//! orientation, reversing symmetries.
//!
//! Nothing here is interval-verified. Reports carry the grid and the
//! worst margin so a caller can refine.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::cone_geometry::Sigma;
use crate::map_algebra::{evaluate, evaluate_angles, inverse, lifted_jacobian, linear_part, Ext, MapWord, RMat2, C64};
use crate::{Error, Result};

pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_SAMPLES: usize = 128;
const MAX_WITNESSES: usize = 32;

/// Evidence for a sampled inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub passed: bool,
    pub margin: f64,
    pub grid: usize,
    pub witnesses: Vec<[f64; 2]>,
    /// Which simple sufficient criterion for the forward cone holds, if any.
    pub criterion: Option<String>,
}

fn grid_points(grid: usize) -> impl Iterator<Item = [f64; 2]> {
    (0..grid * grid).map(move |k| [TAU * (k / grid) as f64 / grid as f64, TAU * (k % grid) as f64 / grid as f64])
}

/// Slack of the cone conditions at one sample point `x`: the quadrant
/// condition on `D_x T̃` and the shifted-apex conditions
/// `D_x T̃ δ ∈ K^u_δ`, `(D_x T̃)^{-1} ṽ ∈ K^s_δ̃` with `ṽ = (δ̃1, −δ̃2)`.
pub fn psec_slack_at(word: &MapWord, x: [f64; 2], delta: [f64; 2], delta_t: [f64; 2]) -> Result<f64> {
    let d = lifted_jacobian(word, x);
    psec_slack_matrix(&d, delta, delta_t).ok_or(Error::NonInvertible { x })
}

fn psec_slack_matrix(d: &RMat2, delta: [f64; 2], dt: [f64; 2]) -> Option<f64> {
    let e = [d[0][0], d[0][1], d[1][0], d[1][1]];
    let min_pos = e.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_neg = e.iter().map(|v| -v).fold(f64::INFINITY, f64::min);
    let quadrant = min_pos.max(min_neg);

    let u = [d[0][0] * delta[0] + d[0][1] * delta[1], d[1][0] * delta[0] + d[1][1] * delta[1]];
    let su = (u[0] - delta[0]).min(u[1] - delta[1]).max((-u[0] - delta[0]).min(-u[1] - delta[1]));

    let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
    if det.abs() < 1e-14 {
        return None;
    }
    let vt = [dt[0], -dt[1]];
    let s = [(d[1][1] * vt[0] - d[0][1] * vt[1]) / det, (-d[1][0] * vt[0] + d[0][0] * vt[1]) / det];
    let ss = (s[0] - dt[0]).min(-s[1] - dt[1]).max((-s[0] - dt[0]).min(s[1] - dt[1]));

    let cone = su.min(ss);
    Some(if quadrant > 0.0 { cone } else { cone.min(quadrant) })
}

/// Check the constant positive cone condition with `P = I` on a
/// `grid × grid` sample of `M = [0, 2π)²`.
pub fn check_psec(word: &MapWord, grid: usize, delta: [f64; 2], delta_t: [f64; 2]) -> Result<CertificateReport> {
    if grid < 16 {
        return Err(Error::GridTooSmall(grid, 16));
    }
    let mut margin = f64::INFINITY;
    let mut witnesses = Vec::new();
    let (mut inf_a, mut inf_d) = (f64::INFINITY, f64::INFINITY);
    let (mut sup_ab, mut sup_dc) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut positive = true;
    for x in grid_points(grid) {
        let d = lifted_jacobian(word, x);
        let s = psec_slack_matrix(&d, delta, delta_t).ok_or(Error::NonInvertible { x })?;
        margin = margin.min(s);
        if !(s > 0.0) && witnesses.len() < MAX_WITNESSES {
            witnesses.push(x);
        }
        // sufficient criteria, stated for entrywise positive Jacobians
        let m = if d[0][0] < 0.0 { [[-d[0][0], -d[0][1]], [-d[1][0], -d[1][1]]] } else { d };
        if m.iter().flatten().any(|&v| v <= 0.0) {
            positive = false;
        } else {
            inf_a = inf_a.min(m[0][0]);
            inf_d = inf_d.min(m[1][1]);
            sup_ab = sup_ab.max((1.0 - m[0][0]) / m[0][1]);
            sup_dc = sup_dc.max((1.0 - m[1][1]) / m[1][0]);
        }
    }
    let criterion = if !positive {
        None
    } else if inf_a >= 1.0 {
        Some("inf a_x >= 1".to_string())
    } else if inf_d >= 1.0 {
        Some("inf d_x >= 1".to_string())
    } else if sup_ab * sup_dc < 1.0 {
        Some("sup((1-a)/b) * sup((1-d)/c) < 1".to_string())
    } else {
        None
    };
    let passed = margin > 0.0 && witnesses.is_empty();
    Ok(CertificateReport { passed, margin, grid, witnesses, criterion })
}

/// Mapping alternative for `T^ℓ` on the bidisks `D^σ`, `σ ∈ Σ^ℓ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `T^ℓ(D^σ) ⊂⊂ D^σ`: expanding direction preserved.
    EP,
    /// `T^ℓ(D^σ) ⊂⊂ D^{−σ}`: expanding direction reversed.
    ER,
    FAIL,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub case: Case,
    pub delta: [f64; 2],
    pub big_delta: [f64; 2],
    pub margin: f64,
    /// Scale factor applied to the requested parameters, when searched.
    pub t: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingCase {
    pub l1: MappingEntry,
    pub lm1: MappingEntry,
}

impl MappingCase {
    pub fn get(&self, ell: i8) -> Case {
        if ell > 0 {
            self.l1.case
        } else {
            self.lm1.case
        }
    }

    /// Cases given directly, without certification data.
    pub fn assumed(l1: Case, lm1: Case) -> Self {
        let e = |case| MappingEntry { case, delta: [0.0; 2], big_delta: [0.0; 2], margin: f64::NAN, t: None };
        MappingCase { l1: e(l1), lm1: e(lm1) }
    }
}

/// Sample the tori `T^σ_δ = {log|z_i| = σ_i δ_i}`, `σ ∈ Σ^ℓ`, push them forward
/// by `T^ℓ` and test membership of the images in `D^σ_Δ` (EP) or `D^{−σ}_Δ` (ER).
pub fn classify_mapping(word: &MapWord, ell: i8, delta: [f64; 2], big_delta: [f64; 2], samples: usize) -> Result<MappingEntry> {
    let map = if ell > 0 { word.clone() } else { inverse(word) };
    let mut ep = f64::INFINITY;
    let mut er = f64::INFINITY;
    for sigma in Sigma::of_ell(ell) {
        let s = sigma.as_f64();
        let r = [(s[0] * delta[0]).exp(), (s[1] * delta[1]).exp()];
        for x in grid_points(samples) {
            let z = [Ext::Finite(C64::from_polar(r[0], x[0])), Ext::Finite(C64::from_polar(r[1], x[1]))];
            let img = evaluate(&map, z)?;
            if img.iter().any(|c| *c == Ext::Infinity) {
                return Err(Error::Pole { atom: 0 });
            }
            let l = [img[0].log_abs(), img[1].log_abs()];
            ep = ep.min((s[0] * l[0] - big_delta[0]).min(s[1] * l[1] - big_delta[1]));
            er = er.min((-s[0] * l[0] - big_delta[0]).min(-s[1] * l[1] - big_delta[1]));
        }
    }
    let (case, margin) = if ep > 0.0 {
        (Case::EP, ep)
    } else if er > 0.0 {
        (Case::ER, er)
    } else {
        (Case::FAIL, ep.max(er))
    };
    Ok(MappingEntry { case, delta, big_delta, margin, t: None })
}

/// Halve `t` from `0.5` (12 times at most) until `(tδ, tΔ)` certifies.
pub fn classify_scaled(word: &MapWord, ell: i8, delta: [f64; 2], big_delta: [f64; 2], samples: usize) -> Result<MappingEntry> {
    let mut t = 0.5;
    let mut last = None;
    for _ in 0..12 {
        let d = [t * delta[0], t * delta[1]];
        let bd = [t * big_delta[0], t * big_delta[1]];
        let mut e = classify_mapping(word, ell, d, bd, samples)?;
        e.t = Some(t);
        if e.case != Case::FAIL {
            return Ok(e);
        }
        last = Some(e);
        t *= 0.5;
    }
    Ok(last.unwrap())
}

/// Base weight scale and the aspect ratios tried by [`certify_cases`].
pub const BASE_WEIGHT: f64 = 0.2;
const RATIOS: [f64; 9] = [1.0, 1.02, 1.05, 1.1, 1.25, 1.5, 2.0, 4.0, 8.0];

fn shapes() -> impl Iterator<Item = [f64; 2]> {
    RATIOS.iter().flat_map(|&r| if r == 1.0 { vec![[1.0, 1.0]] } else { vec![[r, 1.0], [1.0, r]] })
}

/// Certify both mapping cases with tori at `δ = Δ = 0.2 t s` for the aspect
/// ratios `s` above and `t = 1, 1/2, …, 2^{-11}`. The image must lie strictly
/// inside `D^σ_δ` (or `D^{−σ}_δ`), which makes the inclusion compact.
pub fn certify_cases(word: &MapWord, samples: usize) -> Result<MappingCase> {
    let one = |ell: i8| -> Result<MappingEntry> {
        let mut best: Option<MappingEntry> = None;
        let mut t = 1.0;
        for _ in 0..12 {
            for s in shapes() {
                let d = [BASE_WEIGHT * t * s[0], BASE_WEIGHT * t * s[1]];
                let mut e = classify_mapping(word, ell, d, d, samples)?;
                e.t = Some(t);
                if e.case != Case::FAIL {
                    return Ok(e);
                }
                if best.map_or(true, |b| e.margin > b.margin) {
                    best = Some(e);
                }
            }
            t *= 0.5;
        }
        Ok(best.unwrap())
    };
    Ok(MappingCase { l1: one(1)?, lm1: one(-1)? })
}

/// A torus `T²_{e^q}` inside `D^σ̃_δ̃` whose image lies in `D^σ_Δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectingTorus {
    pub q: [f64; 2],
    pub t: f64,
    pub margin: f64,
}

/// Explicit `q` from entry bounds `lower < (D_x T̃)_{kl} < upper` of the
/// sampled Jacobians, then shrink `t` until the nonlinear image check passes.
pub fn find_connecting_torus(
    word: &MapWord,
    sigma_t: Sigma,
    sigma: Sigma,
    delta_t: [f64; 2],
    big_delta: [f64; 2],
) -> Result<ConnectingTorus> {
    if sigma_t.ell() > 0 || sigma.ell() < 0 {
        return Err(Error::NotApplicable("need σ̃ ∈ Σ⁻¹ and σ ∈ Σ¹".into()));
    }
    let mut sign = 0.0;
    let (mut lower, mut upper) = (f64::INFINITY, 0.0f64);
    for x in grid_points(DEFAULT_GRID) {
        let d = lifted_jacobian(word, x);
        let s = if d[0][0] > 0.0 { 1.0 } else { -1.0 };
        if sign == 0.0 {
            sign = s;
        }
        for v in d.iter().flatten() {
            let e = sign * v;
            if !(e > 0.0) {
                return Err(Error::NotApplicable("lifted Jacobian does not map the positive quadrant into a quadrant".into()));
            }
            lower = lower.min(e);
            upper = upper.max(e);
        }
    }
    let dbar = 1.01 * delta_t.iter().chain(&big_delta).cloned().fold(0.0, f64::max);
    let m = 1f64.max((1.0 + upper) / lower);
    // positive Jacobians, σ = (+,+): q ∈ R^{(−,+)} or R^{(+,−)}
    let base = |st: Sigma| if st == Sigma::MP { [-dbar, dbar * m] } else { [dbar * m, -dbar] };
    let positive = |sg: Sigma, st: Sigma| {
        if sg == Sigma::PP {
            base(st)
        } else {
            let b = base(st.neg());
            [-b[0], -b[1]]
        }
    };
    let q = if sign > 0.0 {
        positive(sigma, sigma_t)
    } else {
        let b = positive(sigma, sigma_t.neg());
        [-b[0], -b[1]]
    };
    let s = sigma.as_f64();
    let mut t = 1.0;
    while t >= 1e-4 {
        let r = [(t * q[0]).exp(), (t * q[1]).exp()];
        let mut margin = f64::INFINITY;
        for x in grid_points(DEFAULT_SAMPLES / 2) {
            let z = [Ext::Finite(C64::from_polar(r[0], x[0])), Ext::Finite(C64::from_polar(r[1], x[1]))];
            let img = evaluate(word, z)?;
            let l = [img[0].log_abs(), img[1].log_abs()];
            margin = margin.min((s[0] * l[0] - t * big_delta[0]).min(s[1] * l[1] - t * big_delta[1]));
        }
        if margin > 0.0 {
            return Ok(ConnectingTorus { q: [t * q[0], t * q[1]], t, margin });
        }
        t *= 0.5;
    }
    Err(Error::SearchExhausted("no scale t >= 1e-4 maps the torus into the target domain".into()))
}

/// `max_x ||det D_x T̃| − 1|` over the grid, compared with `tol`.
pub fn is_area_preserving(word: &MapWord, grid: usize, tol: f64) -> (bool, f64) {
    let mut dev: f64 = 0.0;
    for x in grid_points(grid) {
        let d = lifted_jacobian(word, x);
        dev = dev.max(((d[0][0] * d[1][1] - d[0][1] * d[1][0]).abs() - 1.0).abs());
    }
    (dev <= tol, dev)
}

/// `+1` for orientation preserving words, `−1` otherwise.
pub fn orientation(word: &MapWord) -> i8 {
    let m = linear_part(word);
    if m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0 {
        1
    } else {
        -1
    }
}

/// Low-discrepancy torus sample (additive recurrence with the plastic number).
pub fn torus_samples(count: usize) -> Vec<[f64; 2]> {
    let g = 1.324_717_957_244_746_f64;
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    (0..count).map(|j| [TAU * ((0.5 + a1 * j as f64).fract()), TAU * ((0.5 + a2 * j as f64).fract())]).collect()
}

/// Maximum torus distance between `h⁻¹ ∘ T ∘ h` and `T⁻¹` over `samples` points.
pub fn verify_reversing_symmetry(word: &MapWord, h: &MapWord, samples: usize, tol: f64) -> (bool, f64) {
    let lhs = inverse(h).compose(word).compose(h);
    let rhs = inverse(word);
    let mut dev: f64 = 0.0;
    for x in torus_samples(samples) {
        let a = evaluate_angles(&lhs, x);
        let b = evaluate_angles(&rhs, x);
        for i in 0..2 {
            dev = dev.max((C64::from_polar(1.0, a[i]) - C64::from_polar(1.0, b[i])).norm());
        }
    }
    (dev <= tol, dev)
}
