//! Quadrant cones, their polar lattices, log-conical bidisk domains and
//! cone-wise exponential weights.
//!
//! For a sign pair `σ` the quadrant `R^σ_δ = {x : σ_i x_i > δ_i}` is moved by
//! an invertible `P` to the cone `Λ^σ_{P,δ} = P(R^σ_δ)`. Its apex is
//! `v^σ_{P,δ} = P I^σ δ` where `I^σ = diag(σ)`. With `W = (P^T)^{-1}` and rows
//! `w_u, w_s` of `P^{-1}`, the associated Reinhardt domain is
//! `D^σ_{P,δ} = {z : σ_1 ⟨w_u, log|z|⟩ > δ_1, σ_2 ⟨w_s, log|z|⟩ > δ_2}`.

use serde::{Deserialize, Serialize};

use crate::map_algebra::{Ext, IMat2, RMat2};

/// A sign pair `σ = (σ1, σ2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sigma(pub i8, pub i8);

impl Sigma {
    pub const MM: Sigma = Sigma(-1, -1);
    pub const PP: Sigma = Sigma(1, 1);
    pub const PM: Sigma = Sigma(1, -1);
    pub const MP: Sigma = Sigma(-1, 1);

    /// The canonical order used throughout: `(−,−), (+,+), (+,−), (−,+)`.
    pub const ALL: [Sigma; 4] = [Sigma::MM, Sigma::PP, Sigma::PM, Sigma::MP];

    /// `ℓ = σ1 σ2`.
    pub fn ell(self) -> i8 {
        self.0 * self.1
    }

    pub fn neg(self) -> Sigma {
        Sigma(-self.0, -self.1)
    }

    /// `Σ^ℓ`.
    pub fn of_ell(ell: i8) -> [Sigma; 2] {
        if ell > 0 {
            [Sigma::MM, Sigma::PP]
        } else {
            [Sigma::PM, Sigma::MP]
        }
    }

    /// Position in [`Sigma::ALL`].
    pub fn index(self) -> usize {
        Sigma::ALL.iter().position(|&s| s == self).unwrap()
    }

    pub fn as_f64(self) -> [f64; 2] {
        [self.0 as f64, self.1 as f64]
    }

    /// Bits `(k, l)` of the involution `I_kl` realising `φ^σ(z) = z^{-σ}`.
    pub fn inversion_bits(self) -> (u8, u8) {
        ((self.0 > 0) as u8, (self.1 > 0) as u8)
    }

    pub fn label(self) -> &'static str {
        match (self.0 > 0, self.1 > 0) {
            (false, false) => "--",
            (true, true) => "++",
            (true, false) => "+-",
            (false, true) => "-+",
        }
    }
}

/// Cone data `(P, δ, σ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub p: RMat2,
    pub delta: [f64; 2],
    pub sigma: Sigma,
}

pub const IDENTITY: RMat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn det(p: &RMat2) -> f64 {
    p[0][0] * p[1][1] - p[0][1] * p[1][0]
}

pub fn inv(p: &RMat2) -> RMat2 {
    let d = det(p);
    [[p[1][1] / d, -p[0][1] / d], [-p[1][0] / d, p[0][0] / d]]
}

fn apply(p: &RMat2, x: [f64; 2]) -> [f64; 2] {
    [p[0][0] * x[0] + p[0][1] * x[1], p[1][0] * x[0] + p[1][1] * x[1]]
}

fn apply_t(p: &RMat2, x: [f64; 2]) -> [f64; 2] {
    [p[0][0] * x[0] + p[1][0] * x[1], p[0][1] * x[0] + p[1][1] * x[1]]
}

impl ConeSpec {
    pub fn new(p: RMat2, delta: [f64; 2], sigma: Sigma) -> Self {
        assert!(det(&p) != 0.0, "cone matrix must be invertible");
        ConeSpec { p, delta, sigma }
    }

    /// Apex `v^σ_{P,δ} = P I^σ δ`.
    pub fn apex(&self) -> [f64; 2] {
        let s = self.sigma.as_f64();
        apply(&self.p, [s[0] * self.delta[0], s[1] * self.delta[1]])
    }

    /// Slack of `x` in `Λ^σ_{P,δ}`: positive iff `x` is inside.
    pub fn cone_slack(&self, x: [f64; 2]) -> f64 {
        let y = apply(&inv(&self.p), x);
        let s = self.sigma.as_f64();
        (s[0] * y[0] - self.delta[0]).min(s[1] * y[1] - self.delta[1])
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.cone_slack(x) > 0.0
    }
}

/// Whether `z` lies in the Reinhardt domain `D^σ_{P,δ}`.
pub fn domain_membership(c: &ConeSpec, z: [Ext; 2]) -> bool {
    domain_slack(c, z) > 0.0
}

/// `min_i (σ_i ⟨w_i, log|z|⟩ − δ_i)`, with zero or infinite coordinates
/// handled through the sign of the exponent.
pub fn domain_slack(c: &ConeSpec, z: [Ext; 2]) -> f64 {
    let l = [z[0].log_abs(), z[1].log_abs()];
    let w = inv(&c.p);
    let s = c.sigma.as_f64();
    let mut slack = f64::INFINITY;
    for i in 0..2 {
        let mut acc = 0.0;
        for j in 0..2 {
            if w[i][j] != 0.0 {
                acc += w[i][j] * l[j];
            }
        }
        if acc.is_nan() {
            return f64::NAN;
        }
        slack = slack.min(s[i] * acc - c.delta[i]);
    }
    slack
}

/// The unique `σ` with `n ∈ Ẑ^σ_P`, i.e. `P^T n` in the partition piece
/// `R̂^{σ,o}` of the polar cone `{y : σ_i y_i ≤ 0}`: closed for `(−,−)`,
/// closed without the origin for `(+,+)`, open for the mixed signs.
pub fn sigma_of(p: &RMat2, n: [i64; 2]) -> Sigma {
    let y = apply_t(p, [n[0] as f64, n[1] as f64]);
    sigma_of_real(y)
}

fn sigma_of_real(y: [f64; 2]) -> Sigma {
    let tol = 1e-12 * (1.0 + y[0].abs().max(y[1].abs()));
    let y0 = if y[0].abs() <= tol { 0.0 } else { y[0] };
    let y1 = if y[1].abs() <= tol { 0.0 } else { y[1] };
    if y0 >= 0.0 && y1 >= 0.0 {
        Sigma::MM
    } else if y0 <= 0.0 && y1 <= 0.0 {
        Sigma::PP
    } else if y0 < 0.0 {
        Sigma::PM
    } else {
        Sigma::MP
    }
}

/// Parameters `(P, α, γ)` of the weight `ν_{P,α,−γ}`.
///
/// With `P = I` the weight is `exp(−α·|n|)` when `n1 n2 ≥ 0` and `exp(γ·|n|)`
/// when `n1 n2 < 0`. For general `P` it is `exp(⟨n, v^σ_{P,δ(σ)}⟩)` with
/// `σ = sigma_of(P, n)`, `δ = α` on `Σ¹` and `δ = −γ` on `Σ⁻¹`. The `dual` flag
/// selects the reciprocal weight `ν_{P,−α,γ}` of the dual space.
///
/// Other conventions for the `P`-twisted weight rescale the basis but leave
/// every truncated spectrum unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrantWeight {
    #[serde(rename = "P")]
    pub p: RMat2,
    pub alpha: [f64; 2],
    pub gamma: [f64; 2],
    #[serde(default)]
    pub dual: bool,
}

impl QuadrantWeight {
    pub fn new(alpha: [f64; 2], gamma: [f64; 2]) -> Self {
        assert!(alpha.iter().chain(&gamma).all(|&v| v > 0.0), "weight parameters must be positive");
        QuadrantWeight { p: IDENTITY, alpha, gamma, dual: false }
    }

    pub fn with_p(mut self, p: RMat2) -> Self {
        assert!(det(&p) != 0.0);
        self.p = p;
        self
    }

    pub fn dual(mut self) -> Self {
        self.dual = !self.dual;
        self
    }

    /// `log ν(n)`.
    pub fn log_value(&self, n: [i64; 2]) -> f64 {
        let sigma = sigma_of(&self.p, n);
        let delta = if sigma.ell() > 0 { self.alpha } else { [-self.gamma[0], -self.gamma[1]] };
        let v = ConeSpec { p: self.p, delta, sigma }.apex();
        let e = n[0] as f64 * v[0] + n[1] as f64 * v[1];
        if self.dual {
            -e
        } else {
            e
        }
    }
}

/// `ν(n)`.
pub fn weight(w: &QuadrantWeight, n: [i64; 2]) -> f64 {
    w.log_value(n).exp()
}

/// Factor `P = A P̃` with `A ∈ GL2(Z)` and `P̃` entrywise nonnegative.
///
/// Signed permutations are tried first. Otherwise the rows `b^u, b^s` of
/// `B = A^{-1}` are built as in the Bezout argument: `b^u` is the first
/// primitive lattice vector (by max-norm shells) in the open cone
/// `{v : ⟨v, p_u⟩ > 0, ⟨v, p_s⟩ > 0}` and `b^s = b̂^s + k b^u` with the smallest
/// admissible `k`.
pub fn factor_nonnegative(p: &RMat2) -> (IMat2, RMat2) {
    assert!(det(p) != 0.0);
    let signed_perms: [IMat2; 8] = [
        [[1, 0], [0, 1]],
        [[-1, 0], [0, 1]],
        [[1, 0], [0, -1]],
        [[-1, 0], [0, -1]],
        [[0, 1], [1, 0]],
        [[0, -1], [1, 0]],
        [[0, 1], [-1, 0]],
        [[0, -1], [-1, 0]],
    ];
    for b in signed_perms {
        let bp = mul_ir(&b, p);
        if bp.iter().flatten().all(|&v| v >= 0.0) {
            return (inv_int(&b), bp);
        }
    }
    // cone of admissible rows: Pᵀ v > 0
    let inside = |v: [i64; 2]| {
        let y = apply_t(p, [v[0] as f64, v[1] as f64]);
        y[0] > 0.0 && y[1] > 0.0
    };
    let mut bu = None;
    'shell: for m in 1i64.. {
        for x in -m..=m {
            for y in -m..=m {
                if x.abs().max(y.abs()) != m || gcd(x, y) != 1 {
                    continue;
                }
                if inside([x, y]) {
                    bu = Some([x, y]);
                    break 'shell;
                }
            }
        }
    }
    let bu = bu.unwrap();
    // b̂ with bu_1 b̂_2 − bu_2 b̂_1 = 1
    let (g, s, t) = ext_gcd(bu[0], bu[1]);
    debug_assert_eq!(g, 1);
    let bhat = [-t, s];
    let d = apply_t(p, [bu[0] as f64, bu[1] as f64]);
    let c = apply_t(p, [bhat[0] as f64, bhat[1] as f64]);
    let mut k = f64::NEG_INFINITY;
    for i in 0..2 {
        k = k.max(-c[i] / d[i]);
    }
    let mut k = k.ceil() as i64;
    loop {
        let bs = [bhat[0] + k * bu[0], bhat[1] + k * bu[1]];
        let y = apply_t(p, [bs[0] as f64, bs[1] as f64]);
        if y[0] >= 0.0 && y[1] >= 0.0 {
            let b = [bu, bs];
            return (inv_int(&b), mul_ir(&b, p));
        }
        k += 1;
    }
}

fn mul_ir(a: &IMat2, p: &RMat2) -> RMat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] as f64 * p[0][j] + a[i][1] as f64 * p[1][j];
        }
    }
    out
}

pub(crate) fn inv_int(b: &IMat2) -> IMat2 {
    let d = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    assert!(d == 1 || d == -1);
    [[b[1][1] * d, -b[0][1] * d], [-b[1][0] * d, b[0][0] * d]]
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `(g, s, t)` with `s a + t b = g = gcd(a, b) ≥ 0`.
pub(crate) fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}
