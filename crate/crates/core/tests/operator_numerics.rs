mod common;

use common::*;
use torus_resonances::cone_geometry::{weight, QuadrantWeight};
use torus_resonances::dynamics_checks::DEFAULT_SAMPLES;
use torus_resonances::map_algebra::*;
use torus_resonances::operator_numerics::*;
use torus_resonances::resonance_theory::{closed_form_multipliers_psi, resonance_set, trace_power};
use torus_resonances::Error;

fn w(text: &str) -> MapWord {
    parse_word(text).unwrap()
}

fn psi() -> MapWord {
    MapWord::psi(&[1, 1], &[c(0.5, 0.0), c(0.3, 0.0)], false)
}

fn big_entries(row: &[C64], band: usize, tol: f64) -> Vec<([i64; 2], C64)> {
    row.iter().enumerate().filter(|(_, v)| v.norm() > tol).map(|(i, v)| (band_point(i, band), *v)).collect()
}

#[test]
fn fourier_row_of_a_linear_word_is_a_monomial() {
    // p_n ∘ F = z1^{n1} z2^{n1 + n2}
    for n in [[1, 0], [0, 1], [2, -1], [-1, -1]] {
        let row = fourier_row(&w("F"), n, 64, 4).unwrap();
        let got = big_entries(&row, 4, 1e-13);
        assert_eq!(got.len(), 1, "{n:?}: {got:?}");
        assert_eq!(got[0].0, [n[0], n[0] + n[1]]);
        assert!((got[0].1 - 1.0).norm() < 1e-13);
    }
}

#[test]
fn fourier_row_of_the_identity_is_a_delta() {
    let row = fourier_row(&MapWord::identity(), [2, -1], 64, 4).unwrap();
    let got = big_entries(&row, 4, 1e-14);
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].0, [2, -1]);
    assert!((got[0].1 - 1.0).norm() < 1e-15);
}

#[test]
fn fourier_row_of_a_moebius_factor() {
    // b_{1/2}(z) = −1/2 + Σ_{k≥1} (3/4) 2^{1−k} z^k
    let band = 6;
    let row = fourier_row(&w("G(0.5, 0)"), [1, 0], 64, band).unwrap();
    for (i, v) in row.iter().enumerate() {
        let m = band_point(i, band);
        let want = match m {
            [0, 0] => -0.5,
            [k, 0] if k > 0 => 0.75 * 0.5f64.powi(k as i32 - 1),
            _ => 0.0,
        };
        assert!((v - want).norm() < 1e-14, "{m:?}: {v}");
    }
}

#[test]
fn fourier_row_needs_a_fine_grid() {
    assert!(matches!(fourier_row(&w("F"), [1, 0], 16, 4), Err(Error::GridTooSmall(16, 32))));
}

#[test]
fn linear_words_give_generalized_permutations() {
    // F.R.F.R(z) = (z1² z2, z1 z2), so p_n ∘ T = p_m with m = (2n1 + n2, n1 + n2)
    let wt = QuadrantWeight::new([0.1, 0.1], [0.1, 0.1]);
    let band = 4;
    let op = assemble_operator(&w("F . R . F . R"), &wt, band, OperatorKind::Composition).unwrap();
    let d = op.dim();
    assert_eq!(d, 81);
    for col in 0..d {
        let n = op.lattice(col);
        let m = [2 * n[0] + n[1], n[0] + n[1]];
        let inside = m.iter().all(|v| v.unsigned_abs() as usize <= band);
        let ratio = weight(&wt, m) / weight(&wt, n);
        let mut norm2 = 0.0;
        for row in 0..d {
            let v = op.get(row, col);
            norm2 += v.norm_sqr();
            if inside && row == op.index(m) {
                assert!((v - ratio).norm() < 1e-12 * ratio, "{n:?}: {v} vs {ratio}");
            } else {
                assert!(v.norm() < 1e-12, "{n:?} row {:?}: {v}", op.lattice(row));
            }
        }
        // column-norm law
        let want = if inside { ratio } else { 0.0 };
        assert!((norm2.sqrt() - want).abs() < 1e-12 * (1.0 + want));
    }
}

#[test]
fn identity_word_gives_the_identity_matrix() {
    let wt = QuadrantWeight::new([0.2, 0.2], [0.2, 0.2]);
    let op = assemble_operator(&MapWord::identity(), &wt, 3, OperatorKind::Composition).unwrap();
    for i in 0..op.dim() {
        for j in 0..op.dim() {
            let want = if i == j { 1.0 } else { 0.0 };
            // DFT rounding, scaled by weight ratios up to e^{2.4}
            assert!((op.get(i, j) - want).norm() < 1e-13);
        }
    }
    let spec = spectrum(&op).unwrap();
    assert_eq!(spec.len(), 49);
    assert!(spec.iter().all(|z| (z - 1.0).norm() < 1e-14));
    assert!((numeric_trace_power(&op, 3) - 49.0).norm() < 1e-12);
}

#[test]
fn cat_map_truncation_is_one_plus_nilpotent() {
    let wt = QuadrantWeight::new([0.1, 0.1], [0.1, 0.1]);
    let op = assemble_operator(&w("F . R . F . R"), &wt, 6, OperatorKind::Composition).unwrap();
    let spec = spectrum(&op).unwrap();
    assert!((spec[0] - 1.0).norm() < 1e-10);
    assert!(spec[1..].iter().all(|z| z.norm() < 1e-8), "{:?}", &spec[1..4]);
    for k in 1..6 {
        assert!((numeric_trace_power(&op, k) - 1.0).norm() < 1e-12);
    }
}

#[test]
fn psi_top_of_the_spectrum() {
    let word = psi();
    let (wt, _) = tune_weight(&word, DEFAULT_SAMPLES).unwrap();
    let op = assemble_operator(&word, &wt, 10, OperatorKind::Composition).unwrap();
    assert!(op.aliasing_estimate < 1e-8 && !op.aliasing_warning);
    let spec = spectrum(&op).unwrap();
    let want = [1.0, 0.5, 0.5, 0.3, 0.3, 0.25];
    for (z, m) in spec.iter().zip(want) {
        assert!((z.norm() - m).abs() < 1e-6, "{:?}", &spec[..6]);
    }
    // the dense solve agrees on the top of the spectrum
    let dense = spectrum_dense(&op).unwrap();
    let rep = match_spectra(&spec[..6], &dense, 0.2, 1e-6);
    assert!(rep.unmatched_predicted.is_empty(), "{rep:?}");
}

#[test]
fn psi_spectrum_is_stable_under_truncation() {
    let word = psi();
    let (wt, _) = tune_weight(&word, DEFAULT_SAMPLES).unwrap();
    let small = spectrum(&assemble_operator(&word, &wt, 10, OperatorKind::Composition).unwrap()).unwrap();
    let large = spectrum(&assemble_operator(&word, &wt, 14, OperatorKind::Composition).unwrap()).unwrap();
    let mut used = vec![false; large.len()];
    for z in small.iter().filter(|z| z.norm() >= 1e-3) {
        let (i, d) = large
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (y - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(d < 1e-7, "{z} moved by {d}");
        used[i] = true;
    }
}

#[test]
fn psi_spectrum_matches_the_closed_form() {
    let word = psi();
    let (wt, _) = tune_weight(&word, DEFAULT_SAMPLES).unwrap();
    let op = assemble_operator(&word, &wt, 10, OperatorKind::Composition).unwrap();
    let m = closed_form_multipliers_psi(&[1, 1], &[c(0.5, 0.0), c(0.3, 0.0)], false).unwrap();
    let predicted = expand(&resonance_set(&m, 200));
    let rep = match_spectra(&predicted, &spectrum(&op).unwrap(), 1e-2, 1e-6);
    assert!(rep.ok, "{rep:?}");
    for k in 2..6 {
        let t = numeric_trace_power(&op, k);
        assert!((t - trace_power(&m, k)).norm() < 1e-6, "k={k}: {t}");
    }
}

#[test]
fn transfer_operator_on_the_dual_weight_has_the_same_spectrum() {
    let word = psi();
    let (wt, _) = tune_weight(&word, DEFAULT_SAMPLES).unwrap();
    let c_t = spectrum(&assemble_operator(&word, &wt, 8, OperatorKind::Composition).unwrap()).unwrap();
    let l_t = spectrum(&assemble_operator(&word, &wt.dual(), 8, OperatorKind::Transfer).unwrap()).unwrap();
    let rep = match_spectra(&c_t, &l_t, 1e-2, 1e-6);
    assert!(rep.ok, "{rep:?}");
}

#[test]
fn large_bands_need_force() {
    let wt = QuadrantWeight::new([0.2, 0.2], [0.2, 0.2]);
    let r = assemble_operator(&MapWord::identity(), &wt, 17, OperatorKind::Composition);
    assert!(matches!(r, Err(Error::BandTooLarge(17, 16))));
}

#[test]
fn match_spectra_examples() {
    let a = [c(1.0, 0.0), c(0.5, 0.0)];
    assert!(match_spectra(&a, &a, 1e-3, 1e-6).ok);
    let r = match_spectra(&a, &[c(1.0, 0.0), c(0.5, 1e-9)], 1e-3, 1e-6);
    assert!(r.ok && r.max_rel_error < 3e-9);
    let r = match_spectra(&[c(0.5, 0.0)], &[c(0.4, 0.0)], 1e-3, 1e-6);
    assert!(!r.ok);
    assert_eq!(r.unmatched_predicted, vec![c(0.5, 0.0)]);
    assert_eq!(r.unmatched_computed, vec![c(0.4, 0.0)]);
    // values below the floor are ignored on both sides
    assert!(match_spectra(&[c(1.0, 0.0), c(1e-4, 0.0)], &[c(1.0, 0.0), c(2e-4, 0.0)], 1e-3, 1e-6).ok);
    // one computed value serves one predicted value
    let r = match_spectra(&[c(0.5, 0.0), c(0.5, 0.0)], &[c(0.5, 0.0)], 1e-3, 1e-6);
    assert_eq!(r.unmatched_predicted.len(), 1);
}

// least-squares slope and intercept
fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let b = sxy / sxx;
    (b, my - b * mx)
}

fn fitted_eta(inner: &QuadrantWeight, outer: &QuadrantWeight, band: usize, min_gap: f64) -> f64 {
    let s = embedding_singular_values(inner, outer, band);
    // every lattice point with −log s below the band edge value is inside the band
    let edge = min_gap * band as f64;
    let ranks: Vec<usize> = (0..s.len()).filter(|&i| -s[i].ln() < edge).collect();
    let lo = ranks.len() / 10;
    let xs: Vec<f64> = ranks[lo..].iter().map(|&i| ((i + 1) as f64).sqrt()).collect();
    let ys: Vec<f64> = ranks[lo..].iter().map(|&i| -s[i].ln()).collect();
    fit(&xs, &ys).0
}

#[test]
fn embedding_singular_values_examples() {
    let inner = QuadrantWeight::new([0.1, 0.1], [0.4, 0.4]);
    let outer = QuadrantWeight::new([0.3, 0.3], [0.2, 0.2]);
    assert_eq!(embedding_singular_values(&inner, &outer, 0), vec![1.0]);
    let s = embedding_singular_values(&inner, &outer, 5);
    assert_eq!(s.len(), 121);
    assert!(s.windows(2).all(|p| p[0] >= p[1]) && s[0] == 1.0 && s[1] < 1.0);
    // ν_outer / ν_inner is e^{−0.2} at n = (±1, 0), (0, ±1) and e^{−0.4} on
    // |n1| + |n2| = 2, three points in each closed quadrant and two mixed ones
    assert!((s[1] - (-0.2f64).exp()).abs() < 1e-15);
    assert_eq!(s.iter().filter(|v| (*v - (-0.4f64).exp()).abs() < 1e-15).count(), 8);
    let eta = embedding_eta(&inner, &outer);
    assert!((eta - (1.0 / 0.04 + 1.0 / 0.04f64).powf(-0.5)).abs() < 1e-15);
    let got = fitted_eta(&inner, &outer, 60, 0.2);
    assert!((got / eta - 1.0).abs() < 0.02, "{got} vs {eta}");
}

#[test]
fn embedding_rate_with_asymmetric_gaps() {
    let inner = QuadrantWeight::new([0.1, 0.2], [0.5, 0.6]);
    let outer = QuadrantWeight::new([0.2, 0.5], [0.3, 0.2]);
    let eta = embedding_eta(&inner, &outer);
    // gaps (0.1, 0.3) and (0.2, 0.4)
    let want = (1.0 / (0.1 * 0.3) + 1.0 / (0.2 * 0.4f64)).powf(-0.5);
    assert!((eta - want).abs() < 1e-12);
    let got = fitted_eta(&inner, &outer, 120, 0.1);
    assert!((got / eta - 1.0).abs() < 0.03, "{got} vs {eta}");
}

#[test]
fn hilbert_schmidt_margin() {
    let cat = [[2, 1], [1, 1]];
    let wt = QuadrantWeight::new([0.1, 0.1], [0.1, 0.1]);
    assert!(hs_margin(&cat, &wt, 20) < 0.0);
    assert_eq!(hs_margin(&[[1, 0], [0, 1]], &wt, 20), 0.0);
    assert!(hs_margin(&cat, &wt.dual(), 20) > 0.0);
    // direct evaluation along the expanding direction
    let phi = wt.log_value([3, 2]) - wt.log_value([1, 1]);
    assert!(hs_margin(&cat, &wt, 20) >= phi / 2.0);
}
