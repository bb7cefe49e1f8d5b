#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torus_resonances::map_algebra::{Atom, MapWord, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn torus(rng: &mut impl Rng) -> [C64; 2] {
    let t: [f64; 2] = [rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU)];
    [C64::from_polar(1.0, t[0]), C64::from_polar(1.0, t[1])]
}

pub fn disk(rng: &mut impl Rng, r: f64) -> C64 {
    C64::from_polar(rng.gen_range(0.0..r), rng.gen_range(0.0..std::f64::consts::TAU))
}

pub fn random_atom(rng: &mut impl Rng) -> Atom {
    match rng.gen_range(0..5) {
        0 => Atom::F,
        1 => Atom::Finv,
        2 => Atom::R,
        3 => Atom::I(rng.gen_range(0..2), rng.gen_range(0..2)),
        _ => Atom::G(disk(rng, 0.9), disk(rng, 0.9)),
    }
}

pub fn random_word(rng: &mut impl Rng, len: usize) -> MapWord {
    MapWord::new((0..len).map(|_| random_atom(rng)).collect())
}

/// Random Ψ parameters with `n` factors, `k_i ≤ 3`, `|a_i| ≤ 0.8`.
pub fn random_psi(rng: &mut impl Rng, n: usize) -> (Vec<u32>, Vec<C64>, bool) {
    let ks = (0..n).map(|_| rng.gen_range(1..4)).collect();
    let a = (0..n).map(|_| disk(rng, 0.8)).collect();
    (ks, a, rng.gen_bool(0.5))
}

pub fn dist2(a: [C64; 2], b: [C64; 2]) -> f64 {
    (a[0] - b[0]).norm().max((a[1] - b[1]).norm())
}

pub fn same_unordered(a: [C64; 2], b: [C64; 2], tol: f64) -> bool {
    let d = |x: C64, y: C64| (x - y).norm() <= tol;
    (d(a[0], b[0]) && d(a[1], b[1])) || (d(a[0], b[1]) && d(a[1], b[0]))
}

/// Möbius factor written out independently of the library.
pub fn b(a: C64, z: C64) -> C64 {
    (z - a) / (C64::new(1.0, 0.0) - a.conj() * z)
}
