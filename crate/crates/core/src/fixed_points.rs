//! Attracting fixed points of `T^ℓ` or `T^{2ℓ}` in the bidisks `D^σ` and their
//! multipliers.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::cone_geometry::Sigma;
use crate::dynamics_checks::{Case, MappingCase};
use crate::map_algebra::{complex_jacobian, evaluate_finite, Atom, CMat2, Ext, MapWord, C64};
use crate::{Error, Result};

const MAX_ITER: usize = 200;
const STEP_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRecord {
    pub sigma: Sigma,
    pub power: i32,
    pub zstar: [Ext; 2],
    pub multipliers: [C64; 2],
    pub residual: f64,
    pub iterations: usize,
}

fn arg_2pi(z: C64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Total order on complex numbers: modulus descending, then argument in `[0, 2π)`.
pub fn modulus_arg_cmp(a: &C64, b: &C64) -> Ordering {
    b.norm().partial_cmp(&a.norm()).unwrap_or(Ordering::Equal).then(arg_2pi(*a).partial_cmp(&arg_2pi(*b)).unwrap_or(Ordering::Equal))
}

/// Order a multiplier pair by modulus (descending), then argument.
pub fn sort_pair(mut p: [C64; 2]) -> [C64; 2] {
    // snap noise relative to the pair so equal-modulus pairs sort stably
    let scale = p[0].norm().max(p[1].norm());
    let tiny = 1e-15 * scale;
    for z in p.iter_mut() {
        if z.re.abs() < tiny {
            z.re = 0.0;
        }
        if z.im.abs() < tiny {
            z.im = 0.0;
        }
    }
    let close = (p[0].norm() - p[1].norm()).abs() <= 1e-13 * scale;
    let swap = if close { arg_2pi(p[1]) < arg_2pi(p[0]) } else { p[1].norm() > p[0].norm() };
    if swap {
        p.swap(0, 1);
    }
    p
}

/// Eigenvalues of a 2×2 complex matrix, larger root first from the quadratic
/// formula and the smaller from `det / λ₁`.
pub fn eigenvalues2(m: &CMat2) -> [C64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = ((m[0][0] - m[1][1]).powi(2) + 4.0 * m[0][1] * m[1][0]).sqrt();
    let (p, q) = (tr + disc, tr - disc);
    let big = if p.norm() >= q.norm() { p * 0.5 } else { q * 0.5 };
    if big.norm() == 0.0 {
        return [C64::new(0.0, 0.0); 2];
    }
    [big, det / big]
}

/// `I_kl ∘ T^power ∘ I_kl`, the map seen in the unit-bidisk chart of `D^σ`.
pub fn conjugated_map(word: &MapWord, sigma: Sigma, power: i32) -> MapWord {
    let (k, l) = sigma.inversion_bits();
    let inner = word.signed_power(power);
    if (k, l) == (0, 0) {
        return inner;
    }
    let i = MapWord::new(vec![Atom::I(k, l)]);
    i.compose(&inner).compose(&i)
}

/// Iterate the conjugated map from the origin of the unit-bidisk chart and
/// read off the multipliers from its Jacobian at the limit.
pub fn attracting_fixed_point(word: &MapWord, sigma: Sigma, power: i32) -> Result<FixedPointRecord> {
    let hat = conjugated_map(word, sigma, power);
    let mut z = [C64::new(0.0, 0.0); 2];
    let mut iterations = 0;
    loop {
        let next = evaluate_finite(&hat, z).map_err(|_| Error::NoContraction)?;
        if next.iter().any(|w| !(w.norm() <= 1.0 + 1e-9)) {
            return Err(Error::NoContraction);
        }
        let step = (next[0] - z[0]).norm().max((next[1] - z[1]).norm());
        z = next;
        iterations += 1;
        if step < STEP_TOL {
            break;
        }
        if iterations >= MAX_ITER {
            return Err(Error::NonConvergence(MAX_ITER));
        }
    }
    let img = evaluate_finite(&hat, z)?;
    let residual = (img[0] - z[0]).norm().max((img[1] - z[1]).norm());
    let jac = complex_jacobian(&hat, z)?;
    let multipliers = sort_pair(eigenvalues2(&jac));
    let (k, l) = sigma.inversion_bits();
    let back = |w: C64, bit: u8| if bit == 1 { Ext::Finite(w).recip() } else { Ext::Finite(w) };
    Ok(FixedPointRecord { sigma, power, zstar: [back(z[0], k), back(z[1], l)], multipliers, residual, iterations })
}

/// One record per `σ ∈ Σ`, with power `ℓ` in the EP case and `2ℓ` in the ER case.
pub fn all_fixed_point_data(word: &MapWord, case: &MappingCase) -> Result<Vec<FixedPointRecord>> {
    Sigma::ALL
        .iter()
        .map(|&sigma| {
            let ell = sigma.ell() as i32;
            let power = match case.get(sigma.ell()) {
                Case::EP => ell,
                Case::ER => 2 * ell,
                Case::FAIL => return Err(Error::CertificationFailed(format!("mapping case for ℓ = {ell} is FAIL"))),
            };
            attracting_fixed_point(word, sigma, power)
        })
        .collect()
}

fn same_unordered(a: [C64; 2], b: [C64; 2], tol: f64) -> bool {
    let d = |x: C64, y: C64| (x - y).norm() <= tol;
    (d(a[0], b[0]) && d(a[1], b[1])) || (d(a[0], b[1]) && d(a[1], b[0]))
}

/// EP symmetry: `z*_σ = conj(1/z*_{−σ})` coordinatewise and `λ_σ = conj(λ_{−σ})`.
pub fn verify_conjugate_pairs(records: &[FixedPointRecord]) -> Result<bool> {
    if records.iter().any(|r| r.power.abs() != 1) {
        return Err(Error::NotApplicable("conjugate pairing holds in the EP case only".into()));
    }
    for r in records {
        let Some(o) = records.iter().find(|o| o.sigma == r.sigma.neg()) else { continue };
        for i in 0..2 {
            if r.zstar[i].dist(o.zstar[i].recip().conj()) > 1e-10 {
                return Ok(false);
            }
        }
        if !same_unordered(r.multipliers, [o.multipliers[0].conj(), o.multipliers[1].conj()], 1e-10) {
            return Ok(false);
        }
    }
    Ok(true)
}
