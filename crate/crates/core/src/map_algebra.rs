//! Generator words and their action on the torus and on bidisks.
//!
//! A [`MapWord`] is a finite composition of the atoms
//!
//! - `F(z1, z2) = (z1 z2, z2)` and its inverse `Finv(z1, z2) = (z1 / z2, z2)`,
//! - `R(z1, z2) = (z2, z1)`,
//! - `I(k, l)(z1, z2) = (z1^(1-2k), z2^(1-2l))`,
//! - `G(a, b)(z1, z2) = (b_a(z1), b_b(z2))` with the Moebius factor `b_a(z) = (z - a) / (1 - conj(a) z)`.
//!
//! Atoms are stored left to right and applied right to left, so the word
//! `[A, B, C]` is the map `A ∘ B ∘ C`.
//!
//! Points are carried on the Riemann sphere. Each coordinate lives in one of two
//! charts, `w = z` when `|z| <= 1` and `w = 1/z` otherwise, so evaluation and the
//! chain rule never divide by a pole. The only failure is a genuine `0 · ∞`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;

/// 2×2 complex matrix, row major.
pub type CMat2 = [[C64; 2]; 2];
/// 2×2 real matrix, row major.
pub type RMat2 = [[f64; 2]; 2];
/// 2×2 integer matrix, row major.
pub type IMat2 = [[i64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Ext {
    Finite(C64),
    Infinity,
}

impl Ext {
    pub fn finite(self) -> Option<C64> {
        match self {
            Ext::Finite(z) => Some(z),
            Ext::Infinity => None,
        }
    }

    /// `1/z` with `0 ↔ ∞`.
    pub fn recip(self) -> Ext {
        match self {
            Ext::Infinity => Ext::Finite(ZERO),
            Ext::Finite(z) if z == ZERO => Ext::Infinity,
            Ext::Finite(z) => Ext::Finite(z.inv()),
        }
    }

    pub fn conj(self) -> Ext {
        match self {
            Ext::Finite(z) => Ext::Finite(z.conj()),
            Ext::Infinity => Ext::Infinity,
        }
    }

    /// `log |z|` with `log 0 = -∞` and `log ∞ = +∞`.
    pub fn log_abs(self) -> f64 {
        match self {
            Ext::Finite(z) => z.norm().ln(),
            Ext::Infinity => f64::INFINITY,
        }
    }

    /// Chordal-style distance used for residuals: plain distance when both
    /// points are in the closed unit disk, distance of reciprocals otherwise.
    pub fn dist(self, other: Ext) -> f64 {
        match (self, other) {
            (Ext::Infinity, Ext::Infinity) => 0.0,
            (Ext::Finite(a), Ext::Finite(b)) if a.norm() <= 1.0 || b.norm() <= 1.0 => (a - b).norm(),
            _ => (self.recip().finite().unwrap() - other.recip().finite().unwrap()).norm(),
        }
    }
}

impl From<C64> for Ext {
    fn from(z: C64) -> Self {
        Ext::Finite(z)
    }
}

/// One generator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Atom {
    F,
    Finv,
    R,
    /// `I(k, l)`, both bits.
    I(u8, u8),
    /// Moebius factors with parameters strictly inside the unit disk.
    G(C64, C64),
}

impl Atom {
    pub fn inverse(self) -> Atom {
        match self {
            Atom::F => Atom::Finv,
            Atom::Finv => Atom::F,
            Atom::R => Atom::R,
            Atom::I(k, l) => Atom::I(k, l),
            Atom::G(a, b) => Atom::G(-a, -b),
        }
    }

    /// Integer matrix of the induced toral automorphism.
    pub fn matrix(self) -> IMat2 {
        match self {
            Atom::F => [[1, 1], [0, 1]],
            Atom::Finv => [[1, -1], [0, 1]],
            Atom::R => [[0, 1], [1, 0]],
            Atom::I(k, l) => [[1 - 2 * k as i64, 0], [0, 1 - 2 * l as i64]],
            Atom::G(..) => [[1, 0], [0, 1]],
        }
    }

    fn is_identity(self) -> bool {
        matches!(self, Atom::I(0, 0)) || self == Atom::G(ZERO, ZERO)
    }
}

/// A composition of atoms, applied right to left.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MapWord {
    pub atoms: Vec<Atom>,
}

impl MapWord {
    pub fn identity() -> Self {
        MapWord { atoms: Vec::new() }
    }

    pub fn new(atoms: Vec<Atom>) -> Self {
        MapWord { atoms }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MapWord) -> MapWord {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        MapWord { atoms }
    }

    /// `self` composed with itself `k` times.
    pub fn power(&self, k: usize) -> MapWord {
        let mut atoms = Vec::with_capacity(self.atoms.len() * k);
        for _ in 0..k {
            atoms.extend_from_slice(&self.atoms);
        }
        MapWord { atoms }
    }

    /// Word for `T^p`, using the inverse word for negative `p`.
    pub fn signed_power(&self, p: i32) -> MapWord {
        if p >= 0 {
            self.power(p as usize)
        } else {
            inverse(self).power(p.unsigned_abs() as usize)
        }
    }

    /// `U(k, a) = G(0, a) ∘ F^k ∘ R ∘ G(-a, 0)`, i.e. `(b_{-a}(z1)^k z2, z1)`.
    pub fn u(k: u32, a: C64) -> MapWord {
        let mut atoms = vec![Atom::G(ZERO, a)];
        atoms.extend(std::iter::repeat(Atom::F).take(k as usize));
        atoms.push(Atom::R);
        atoms.push(Atom::G(-a, ZERO));
        MapWord { atoms }
    }

    /// `W(k, a) = F^k ∘ R ∘ G(0, a)`, i.e. `(z1^k b_a(z2), z1)`.
    pub fn w(k: u32, a: C64) -> MapWord {
        let mut atoms: Vec<Atom> = std::iter::repeat(Atom::F).take(k as usize).collect();
        atoms.push(Atom::R);
        atoms.push(Atom::G(ZERO, a));
        MapWord { atoms }
    }

    /// `I11^s ∘ U(k1, a1) ∘ ... ∘ U(kn, an)`.
    pub fn psi(ks: &[u32], a: &[C64], s: bool) -> MapWord {
        assert_eq!(ks.len(), a.len());
        let mut word = if s { MapWord::new(vec![Atom::I(1, 1)]) } else { MapWord::identity() };
        for (&k, &ai) in ks.iter().zip(a) {
            word = word.compose(&MapWord::u(k, ai));
        }
        word
    }

    /// `I11^s ∘ W(k1, 0) ∘ ... ∘ W(k_{n-1}, 0) ∘ W(kn, a)`.
    pub fn xi(ks: &[u32], a: C64, s: bool) -> MapWord {
        let mut word = if s { MapWord::new(vec![Atom::I(1, 1)]) } else { MapWord::identity() };
        for (i, &k) in ks.iter().enumerate() {
            let ai = if i + 1 == ks.len() { a } else { ZERO };
            word = word.compose(&MapWord::w(k, ai));
        }
        word
    }
}

fn fmt_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::F => write!(f, "F"),
            Atom::Finv => write!(f, "Finv"),
            Atom::R => write!(f, "R"),
            Atom::I(k, l) => write!(f, "I{k}{l}"),
            Atom::G(a, b) => write!(f, "G({}, {})", fmt_complex(*a), fmt_complex(*b)),
        }
    }
}

impl fmt::Display for MapWord {
    /// Output parses back with [`parse_word`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "id");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " . ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// parsing

/// Parse a word.
///
/// ```text
/// word    := "id" | atom ("." atom)*
/// atom    := "F" | "Finv" | "R" | "I" bit bit
///          | "G(" complex "," complex ")"
///          | "U(" int "," complex ")"     expands to G(0,a) . F^k . R . G(-a,0)
///          | "W(" int "," complex ")"     expands to F^k . R . G(0,a)
/// complex := real | real "i" | real ("+"|"-") real "i" | ["+"|"-"] "i"
/// ```
///
/// Whitespace is ignored. The leftmost atom is applied last.
pub fn parse_word(text: &str) -> Result<MapWord> {
    let mut p = Parser { s: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.pos == p.s.len() {
        return Ok(MapWord::identity());
    }
    if p.eat_keyword("id") {
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("trailing input after 'id'"));
        }
        return Ok(MapWord::identity());
    }
    let mut atoms = Vec::new();
    loop {
        p.skip_ws();
        p.atom(&mut atoms)?;
        p.skip_ws();
        if p.pos == p.s.len() {
            break;
        }
        if !p.eat(b'.') {
            return Err(p.err("expected '.' between atoms"));
        }
    }
    Ok(MapWord { atoms })
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.s[self.pos..].starts_with(kw.as_bytes()) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn atom(&mut self, atoms: &mut Vec<Atom>) -> Result<()> {
        let start = self.pos;
        match self.peek() {
            Some(b'F') => {
                self.pos += 1;
                if self.eat_keyword("inv") {
                    atoms.push(Atom::Finv);
                } else {
                    atoms.push(Atom::F);
                }
            }
            Some(b'R') => {
                self.pos += 1;
                atoms.push(Atom::R);
            }
            Some(b'I') => {
                self.pos += 1;
                let k = self.bit()?;
                let l = self.bit()?;
                atoms.push(Atom::I(k, l));
            }
            Some(b'G') => {
                self.pos += 1;
                self.expect(b'(')?;
                let a = self.disk_param()?;
                self.expect(b',')?;
                let b = self.disk_param()?;
                self.expect(b')')?;
                atoms.push(Atom::G(a, b));
            }
            Some(c @ (b'U' | b'W')) => {
                self.pos += 1;
                self.expect(b'(')?;
                self.skip_ws();
                let k = self.integer()?;
                self.expect(b',')?;
                let a = self.disk_param()?;
                self.expect(b')')?;
                let w = if c == b'U' { MapWord::u(k, a) } else { MapWord::w(k, a) };
                atoms.extend(w.atoms);
            }
            _ => {
                self.pos = start;
                return Err(self.err("expected an atom (F, Finv, R, Ikl, G, U, W)"));
            }
        }
        Ok(())
    }

    fn bit(&mut self) -> Result<u8> {
        match self.peek() {
            Some(b'0') => {
                self.pos += 1;
                Ok(0)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(1)
            }
            _ => Err(self.err("expected bit 0 or 1")),
        }
    }

    fn integer(&mut self) -> Result<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        txt.parse::<u32>().map_err(|_| Error::Syntax { pos: start, msg: "expected a nonnegative integer".into() })
    }

    /// Unsigned decimal literal, no sign.
    fn unsigned_real(&mut self) -> Option<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'0'..=b'9')) {
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().ok()
    }

    fn sign(&mut self) -> f64 {
        self.skip_ws();
        if self.eat(b'-') {
            -1.0
        } else {
            self.eat(b'+');
            1.0
        }
    }

    fn complex(&mut self) -> Result<C64> {
        let start = self.pos;
        let s1 = self.sign();
        self.skip_ws();
        let first = self.unsigned_real();
        self.skip_ws();
        if self.eat(b'i') {
            return Ok(C64::new(0.0, s1 * first.unwrap_or(1.0)));
        }
        let re = match first {
            Some(v) => s1 * v,
            None => {
                self.pos = start;
                return Err(self.err("expected a complex number"));
            }
        };
        self.skip_ws();
        if matches!(self.peek(), Some(b'+' | b'-')) {
            let s2 = self.sign();
            self.skip_ws();
            let im = self.unsigned_real().unwrap_or(1.0);
            self.skip_ws();
            if !self.eat(b'i') {
                return Err(self.err("expected 'i' after imaginary part"));
            }
            return Ok(C64::new(re, s2 * im));
        }
        Ok(C64::new(re, 0.0))
    }

    fn disk_param(&mut self) -> Result<C64> {
        self.skip_ws();
        let start = self.pos;
        let z = self.complex()?;
        if !(z.norm() < 1.0) {
            return Err(Error::OutsideDisk { pos: start, value: z.norm() });
        }
        Ok(z)
    }
}

// ---------------------------------------------------------------------------
// chart arithmetic

/// One coordinate on the Riemann sphere: `z = w` if `!inv`, `z = 1/w` if `inv`,
/// with `|w| <= 1` except transiently.
#[derive(Clone, Copy, Debug)]
struct Chart {
    w: C64,
    inv: bool,
}

impl Chart {
    fn from_ext(z: Ext) -> Chart {
        match z {
            Ext::Infinity => Chart { w: ZERO, inv: true },
            Ext::Finite(z) if z.norm() <= 1.0 => Chart { w: z, inv: false },
            Ext::Finite(z) => Chart { w: z.inv(), inv: true },
        }
    }

    fn to_ext(self) -> Ext {
        if !self.inv {
            Ext::Finite(self.w)
        } else if self.w == ZERO {
            Ext::Infinity
        } else {
            Ext::Finite(self.w.inv())
        }
    }

    fn exponent(self) -> i32 {
        if self.inv {
            -1
        } else {
            1
        }
    }
}

/// Value of `w1^e1 * w2^e2` (exponents ±1) as a chart, with partial
/// derivatives in the chart coordinates.
fn monomial(c1: Chart, e1: i32, c2: Chart, e2: i32, atom: usize) -> Result<(Chart, C64, C64)> {
    let (w1, w2) = (c1.w, c2.w);
    if e1 == e2 {
        return Ok((Chart { w: w1 * w2, inv: e1 < 0 }, w2, w1));
    }
    // quotient a / b with a the positive-exponent factor
    let (a, b, a_is_first) = if e1 > 0 { (w1, w2, true) } else { (w2, w1, false) };
    if a == ZERO && b == ZERO {
        return Err(Error::Indeterminate { atom });
    }
    let (out, da, db) = if a.norm() <= b.norm() {
        (Chart { w: a / b, inv: false }, b.inv(), -a / (b * b))
    } else {
        (Chart { w: b / a, inv: true }, -b / (a * a), a.inv())
    };
    if a_is_first {
        Ok((out, da, db))
    } else {
        Ok((out, db, da))
    }
}

fn moebius_chart(a: C64, c: Chart) -> (Chart, C64) {
    let s = 1.0 - a.norm_sqr();
    if !c.inv {
        let den = ONE - a.conj() * c.w;
        (Chart { w: (c.w - a) / den, inv: false }, s / (den * den))
    } else {
        // 1 / b_a(1/u) = b_{conj a}(u)
        let den = ONE - a * c.w;
        (Chart { w: (c.w - a.conj()) / den, inv: true }, s / (den * den))
    }
}

/// Apply one atom in charts; returns the new point and its Jacobian with
/// respect to chart coordinates.
fn step(atom: Atom, p: [Chart; 2], idx: usize) -> Result<([Chart; 2], CMat2)> {
    match atom {
        Atom::F | Atom::Finv => {
            let e2 = if atom == Atom::F { p[1].exponent() } else { -p[1].exponent() };
            let (c, d1, d2) = monomial(p[0], p[0].exponent(), p[1], e2, idx)?;
            Ok(([c, p[1]], [[d1, d2], [ZERO, ONE]]))
        }
        Atom::R => Ok(([p[1], p[0]], [[ZERO, ONE], [ONE, ZERO]])),
        Atom::I(k, l) => {
            let mut q = p;
            if k == 1 {
                q[0].inv = !q[0].inv;
            }
            if l == 1 {
                q[1].inv = !q[1].inv;
            }
            Ok((q, [[ONE, ZERO], [ZERO, ONE]]))
        }
        Atom::G(a, b) => {
            let (c1, d1) = moebius_chart(a, p[0]);
            let (c2, d2) = moebius_chart(b, p[1]);
            Ok(([c1, c2], [[d1, ZERO], [ZERO, d2]]))
        }
    }
}

fn renormalize(c: Chart) -> (Chart, C64) {
    // switch chart when |w| > 1; derivative of the chart change w -> 1/w
    if c.w.norm() > 1.0 {
        (Chart { w: c.w.inv(), inv: !c.inv }, -(c.w * c.w).inv())
    } else {
        (c, ONE)
    }
}

pub(crate) fn cmul(a: &CMat2, b: &CMat2) -> CMat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Run the chain in charts, optionally accumulating the chart Jacobian.
fn run(word: &MapWord, z: [Ext; 2], with_jac: bool) -> Result<([Chart; 2], [Chart; 2], CMat2)> {
    let start = [Chart::from_ext(z[0]), Chart::from_ext(z[1])];
    let mut p = start;
    let mut jac = [[ONE, ZERO], [ZERO, ONE]];
    for (idx, &atom) in word.atoms.iter().enumerate().rev() {
        let (q, mut j) = step(atom, p, idx)?;
        let (q0, s0) = renormalize(q[0]);
        let (q1, s1) = renormalize(q[1]);
        if with_jac {
            for c in 0..2 {
                j[0][c] *= s0;
                j[1][c] *= s1;
            }
            jac = cmul(&j, &jac);
        }
        p = [q0, q1];
    }
    Ok((start, p, jac))
}

/// Image of `z` under the word.
pub fn evaluate(word: &MapWord, z: [Ext; 2]) -> Result<[Ext; 2]> {
    let (_, p, _) = run(word, z, false)?;
    Ok([p[0].to_ext(), p[1].to_ext()])
}

/// Image of a finite point, failing if the image has a pole.
pub fn evaluate_finite(word: &MapWord, z: [C64; 2]) -> Result<[C64; 2]> {
    let out = evaluate(word, [z[0].into(), z[1].into()])?;
    match (out[0], out[1]) {
        (Ext::Finite(a), Ext::Finite(b)) => Ok([a, b]),
        _ => Err(Error::Pole { atom: 0 }),
    }
}

/// Image of a torus point given by angles, returned as angles. Every
/// generator preserves the torus, so only the arguments are tracked.
pub fn evaluate_angles(word: &MapWord, x: [f64; 2]) -> [f64; 2] {
    let mut t = x;
    for &atom in word.atoms.iter().rev() {
        t = match atom {
            Atom::F => [t[0] + t[1], t[1]],
            Atom::Finv => [t[0] - t[1], t[1]],
            Atom::R => [t[1], t[0]],
            Atom::I(k, l) => [if k == 1 { -t[0] } else { t[0] }, if l == 1 { -t[1] } else { t[1] }],
            Atom::G(a, b) => [t[0] + moebius_lift(a, t[0]).0, t[1] + moebius_lift(b, t[1]).0],
        };
    }
    t
}

/// Holomorphic Jacobian `D_z T` at a finite point with finite image.
/// Intermediate points may pass through `∞`.
pub fn complex_jacobian(word: &MapWord, z: [C64; 2]) -> Result<CMat2> {
    if word.is_empty() {
        return Ok([[ONE, ZERO], [ZERO, ONE]]);
    }
    let (start, end, jac) = run(word, [z[0].into(), z[1].into()], true)?;
    // chart coordinates back to the plain coordinates
    let mut din = [ONE; 2];
    for i in 0..2 {
        if start[i].inv {
            din[i] = -(start[i].w * start[i].w);
        }
    }
    let mut dout = [ONE; 2];
    for i in 0..2 {
        if end[i].inv {
            if end[i].w == ZERO {
                return Err(Error::Pole { atom: 0 });
            }
            dout[i] = -(end[i].w * end[i].w).inv();
        }
    }
    let mut j = jac;
    for r in 0..2 {
        for c in 0..2 {
            j[r][c] = dout[r] * jac[r][c] * din[c];
        }
    }
    Ok(j)
}

/// Lifted Jacobian `D_x T̃` in angle coordinates.
pub fn lifted_jacobian(word: &MapWord, x: [f64; 2]) -> RMat2 {
    let mut t = x;
    let mut jac: RMat2 = [[1.0, 0.0], [0.0, 1.0]];
    for &atom in word.atoms.iter().rev() {
        let (next, j): ([f64; 2], RMat2) = match atom {
            Atom::F => ([t[0] + t[1], t[1]], [[1.0, 1.0], [0.0, 1.0]]),
            Atom::Finv => ([t[0] - t[1], t[1]], [[1.0, -1.0], [0.0, 1.0]]),
            Atom::R => ([t[1], t[0]], [[0.0, 1.0], [1.0, 0.0]]),
            Atom::I(k, l) => {
                let s1 = if k == 1 { -1.0 } else { 1.0 };
                let s2 = if l == 1 { -1.0 } else { 1.0 };
                ([s1 * t[0], s2 * t[1]], [[s1, 0.0], [0.0, s2]])
            }
            Atom::G(a, b) => {
                let (g1, d1) = moebius_lift(a, t[0]);
                let (g2, d2) = moebius_lift(b, t[1]);
                ([t[0] + g1, t[1] + g2], [[1.0 + d1, 0.0], [0.0, 1.0 + d2]])
            }
        };
        jac = rmul(&j, &jac);
        t = next;
    }
    jac
}

pub(crate) fn rmul(a: &RMat2, b: &RMat2) -> RMat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// `(g_a(θ), g_a'(θ))` where `b_a(e^{iθ}) = e^{i(θ + g_a(θ))}`.
pub fn moebius_lift(a: C64, theta: f64) -> (f64, f64) {
    let r = a.norm();
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let phi = theta - a.arg();
    let (s, c) = phi.sin_cos();
    let g = 2.0 * (r * s).atan2(1.0 - r * c);
    let gp = 2.0 * (r * c - r * r) / (1.0 - 2.0 * r * c + r * r);
    (g, gp)
}

/// Moebius factor `b_a(z)`.
pub fn blaschke(a: C64, z: C64) -> C64 {
    (z - a) / (ONE - a.conj() * z)
}

/// Reversed word with every atom inverted.
pub fn inverse(word: &MapWord) -> MapWord {
    MapWord { atoms: word.atoms.iter().rev().map(|a| a.inverse()).collect() }
}

/// Matrix of the homotopic toral automorphism.
pub fn linear_part(word: &MapWord) -> IMat2 {
    word.atoms.iter().fold([[1, 0], [0, 1]], |m, a| imul(&m, &a.matrix()))
}

pub(crate) fn imul(a: &IMat2, b: &IMat2) -> IMat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

// ---------------------------------------------------------------------------
// rewriting

/// Compose Moebius parameters: `b_a ∘ b_c = b_e` when no rotation factor
/// appears, which holds iff `conj(a) c` is real.
fn merge_moebius(a: C64, c: C64) -> Option<C64> {
    let den = ONE + a.conj() * c;
    let e = (a + c) / den;
    let probes = [ONE, C64::new(0.0, 1.0), C64::new(-0.6, 0.3)];
    let ok = probes.iter().all(|&z| (blaschke(a, blaschke(c, z)) - blaschke(e, z)).norm() < 1e-14);
    if ok && e.norm() < 1.0 {
        Some(if e.norm() < 1e-15 { ZERO } else { e })
    } else {
        None
    }
}

fn conj_if(bit: u8, z: C64) -> C64 {
    if bit == 1 {
        z.conj()
    } else {
        z
    }
}

/// One local rewrite of the pair `x ∘ y`; `None` if no rule applies.
fn rewrite_pair(x: Atom, y: Atom) -> Option<Vec<Atom>> {
    use Atom::*;
    match (x, y) {
        (F, Finv) | (Finv, F) | (R, R) => Some(vec![]),
        (I(k, l), I(m, n)) => Some(vec![I(k ^ m, l ^ n)]),
        (G(a, b), G(c, d)) => {
            let e = merge_moebius(a, c)?;
            let f = merge_moebius(b, d)?;
            Some(vec![G(e, f)])
        }
        // move involutions I_kl to the left
        (F, I(k, l)) if k != l => Some(vec![I(k, l), Finv]),
        (Finv, I(k, l)) if k != l => Some(vec![I(k, l), F]),
        (F, I(1, 1)) => Some(vec![I(1, 1), F]),
        (Finv, I(1, 1)) => Some(vec![I(1, 1), Finv]),
        (R, I(k, l)) => Some(vec![I(l, k), R]),
        (G(a, b), I(k, l)) => Some(vec![I(k, l), G(conj_if(k, a), conj_if(l, b))]),
        // move R to the left past Moebius factors
        (G(a, b), R) => Some(vec![R, G(b, a)]),
        _ => None,
    }
}

/// Best-effort simplification by the commutation relations and cancellation.
/// The result is pointwise equal to the input on the torus.
pub fn simplify(word: &MapWord) -> MapWord {
    let mut atoms: Vec<Atom> = word.atoms.iter().copied().filter(|a| !a.is_identity()).collect();
    loop {
        atoms = free_reduce(&atoms);
        let mut changed = false;
        let mut i = 0;
        while i + 1 < atoms.len() {
            if let Some(rep) = rewrite_pair(atoms[i], atoms[i + 1]) {
                let rep: Vec<Atom> = rep.into_iter().filter(|a| !a.is_identity()).collect();
                atoms.splice(i..i + 2, rep);
                changed = true;
                i = i.saturating_sub(1);
            } else {
                i += 1;
            }
        }
        if !changed {
            return MapWord { atoms };
        }
    }
}

/// Cancel adjacent mutually inverse atoms with a stack.
fn free_reduce(atoms: &[Atom]) -> Vec<Atom> {
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for &a in atoms {
        match out.last() {
            Some(&b) if b.inverse() == a => {
                out.pop();
            }
            _ => out.push(a),
        }
    }
    out
}

/// Point on the torus from angles.
pub fn torus_point(x: [f64; 2]) -> [C64; 2] {
    [C64::from_polar(1.0, x[0]), C64::from_polar(1.0, x[1])]
}

/// Checked torus point, both moduli within `1e-12` of one.
pub fn torus_point_checked(z: [C64; 2]) -> Result<[C64; 2]> {
    if (z[0].norm() - 1.0).abs() > 1e-12 || (z[1].norm() - 1.0).abs() > 1e-12 {
        return Err(Error::NotOnTorus);
    }
    Ok(z)
}
