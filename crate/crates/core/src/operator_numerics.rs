//! Truncated matrices of composition and transfer operators on weighted
//! Fourier bases `e_n = p_n / ν(n)`, `|n1|, |n2| ≤ N`, and their spectra.

use std::f64::consts::TAU;
use std::sync::Arc;

use faer::Mat;
use petgraph::algo::tarjan_scc;
use petgraph::graph::Graph;
use petgraph::Directed;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::cone_geometry::QuadrantWeight;
use crate::dynamics_checks::{certify_cases, orientation, Case, MappingCase};
use crate::fixed_points::modulus_arg_cmp;
use crate::map_algebra::{complex_jacobian, evaluate_finite, inverse, torus_point, IMat2, MapWord, C64};
use crate::resonance_theory::Eigenvalue;
use crate::{Error, Result};

/// Largest band radius assembled without `force`.
pub const MAX_DENSE_N: usize = 16;
const ALIAS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// `C_T g = g ∘ T`.
    Composition,
    /// `L_T g = w · (g ∘ T⁻¹)` with `w = ω_T det DT⁻¹(z) · z1 z2 / (T⁻¹(z)_1 T⁻¹(z)_2)`.
    Transfer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssembleOptions {
    /// Starting DFT grid, `max(8N, 64)` when absent.
    pub grid: Option<usize>,
    /// Allow `N > 16`.
    pub force: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions { grid: None, force: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedOperator {
    pub n: usize,
    pub kind: OperatorKind,
    pub weight: QuadrantWeight,
    pub grid: usize,
    pub aliasing_estimate: f64,
    /// Set when grid doubling did not bring the aliasing estimate below `1e-8`.
    pub aliasing_warning: bool,
    /// Row-major, `dim × dim`.
    pub entries: Vec<C64>,
    /// `log ν(n)` in band order.
    pub log_weight: Vec<f64>,
}

impl TruncatedOperator {
    pub fn dim(&self) -> usize {
        (2 * self.n + 1) * (2 * self.n + 1)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn to_faer(&self) -> Mat<faer::c64> {
        let d = self.dim();
        Mat::from_fn(d, d, |i, j| {
            let z = self.entries[i * d + j];
            faer::c64::new(z.re, z.im)
        })
    }

    /// Basis position of the lattice point `n`.
    pub fn index(&self, n: [i64; 2]) -> usize {
        band_index(n, self.n)
    }

    pub fn lattice(&self, idx: usize) -> [i64; 2] {
        band_point(idx, self.n)
    }
}

/// `(n1 + N)(2N + 1) + (n2 + N)`.
pub fn band_index(n: [i64; 2], band: usize) -> usize {
    let b = band as i64;
    ((n[0] + b) * (2 * b + 1) + (n[1] + b)) as usize
}

pub fn band_point(idx: usize, band: usize) -> [i64; 2] {
    let w = 2 * band + 1;
    [(idx / w) as i64 - band as i64, (idx % w) as i64 - band as i64]
}

/// Samples on the `G × G` torus grid: angles of the image point and the
/// multiplicative symbol.
struct GridData {
    g: usize,
    angles: Vec<[f64; 2]>,
    symbol: Option<Vec<C64>>,
}

fn grid_x(g: usize, k: usize) -> [f64; 2] {
    [TAU * (k / g) as f64 / g as f64, TAU * (k % g) as f64 / g as f64]
}

fn sample_grid(word: &MapWord, g: usize, kind: OperatorKind) -> Result<GridData> {
    let map = match kind {
        OperatorKind::Composition => word.clone(),
        OperatorKind::Transfer => inverse(word),
    };
    let omega = orientation(word) as f64;
    let pts: Vec<Result<([f64; 2], Option<C64>)>> = (0..g * g)
        .into_par_iter()
        .map(|k| {
            let z = torus_point(grid_x(g, k));
            let w = evaluate_finite(&map, z)?;
            if w.iter().any(|c| (c.norm() - 1.0).abs() > 1e-12) {
                return Err(Error::NotOnTorus);
            }
            let sym = match kind {
                OperatorKind::Composition => None,
                OperatorKind::Transfer => {
                    let j = complex_jacobian(&map, z)?;
                    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                    Some(det * omega * z[0] * z[1] / (w[0] * w[1]))
                }
            };
            Ok(([w[0].arg(), w[1].arg()], sym))
        })
        .collect();
    let mut angles = Vec::with_capacity(g * g);
    let mut symbol = Vec::new();
    for p in pts {
        let (a, s) = p?;
        angles.push(a);
        if let Some(s) = s {
            symbol.push(s);
        }
    }
    let symbol = if kind == OperatorKind::Transfer { Some(symbol) } else { None };
    Ok(GridData { g, angles, symbol })
}

fn fft2(fft: &Arc<dyn Fft<f64>>, buf: &mut Vec<C64>, g: usize) {
    fft.process(buf);
    let mut t = vec![C64::new(0.0, 0.0); g * g];
    for i in 0..g {
        for j in 0..g {
            t[j * g + i] = buf[i * g + j];
        }
    }
    fft.process(&mut t);
    for i in 0..g {
        for j in 0..g {
            buf[i * g + j] = t[j * g + i];
        }
    }
}

/// Central `(2N+1)²` block of the Fourier coefficients of `s · p_n ∘ map`.
fn column(data: &GridData, fft: &Arc<dyn Fft<f64>>, n: [i64; 2], band: usize) -> Vec<C64> {
    let g = data.g;
    let mut buf: Vec<C64> = data
        .angles
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let v = C64::from_polar(1.0, n[0] as f64 * a[0] + n[1] as f64 * a[1]);
            match &data.symbol {
                Some(s) => v * s[k],
                None => v,
            }
        })
        .collect();
    fft2(fft, &mut buf, g);
    let scale = 1.0 / (g * g) as f64;
    let d = (2 * band + 1) * (2 * band + 1);
    (0..d)
        .map(|idx| {
            let m = band_point(idx, band);
            let k1 = m[0].rem_euclid(g as i64) as usize;
            let k2 = m[1].rem_euclid(g as i64) as usize;
            buf[k1 * g + k2] * scale
        })
        .collect()
}

fn planner(g: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(g)
}

/// Fourier coefficients `f_m`, `|m1|, |m2| ≤ N`, of `p_n ∘ T` from a `G × G` grid,
/// in band order.
pub fn fourier_row(word: &MapWord, n: [i64; 2], g: usize, band: usize) -> Result<Vec<C64>> {
    if g < 8 * band.max(1) {
        return Err(Error::GridTooSmall(g, 8 * band.max(1)));
    }
    let data = sample_grid(word, g, OperatorKind::Composition)?;
    Ok(column(&data, &planner(g), n, band))
}

fn probe_columns(band: usize) -> Vec<[i64; 2]> {
    let b = band as i64;
    vec![[b, b], [-b, -b], [b, -b], [-b, b], [b, 0], [0, b], [-b, 0], [0, -b]]
}

/// Assemble with default options.
pub fn assemble_operator(word: &MapWord, weight: &QuadrantWeight, band: usize, kind: OperatorKind) -> Result<TruncatedOperator> {
    assemble_operator_with(word, weight, band, kind, &AssembleOptions::default())
}

/// `A_{m,n} = f^{(n)}_m ν(m) / ν(n)` where `f^{(n)}` are the Fourier
/// coefficients of `p_n ∘ T` (or `w · p_n ∘ T⁻¹`). The grid doubles while the
/// extreme columns still change by more than `1e-8`.
pub fn assemble_operator_with(
    word: &MapWord,
    weight: &QuadrantWeight,
    band: usize,
    kind: OperatorKind,
    opts: &AssembleOptions,
) -> Result<TruncatedOperator> {
    if band > MAX_DENSE_N && !opts.force {
        return Err(Error::BandTooLarge(band, MAX_DENSE_N));
    }
    let g0 = opts.grid.unwrap_or((8 * band).max(64));
    let mut g = g0;
    let mut data = sample_grid(word, g, kind)?;
    let mut fft = planner(g);
    let (estimate, warning) = loop {
        let g2 = 2 * g;
        let data2 = sample_grid(word, g2, kind)?;
        let fft2 = planner(g2);
        let mut diff: f64 = 0.0;
        for n in probe_columns(band) {
            let a = column(&data, &fft, n, band);
            let b = column(&data2, &fft2, n, band);
            for (x, y) in a.iter().zip(&b) {
                diff = diff.max((x - y).norm());
            }
        }
        if diff < ALIAS_TOL {
            break (diff, false);
        }
        if g2 >= 8 * g0 {
            g = g2;
            data = data2;
            fft = fft2;
            break (diff, true);
        }
        g = g2;
        data = data2;
        fft = fft2;
    };
    let d = (2 * band + 1) * (2 * band + 1);
    let logw: Vec<f64> = (0..d).map(|i| weight.log_value(band_point(i, band))).collect();
    let cols: Vec<Vec<C64>> = (0..d).into_par_iter().map(|j| column(&data, &fft, band_point(j, band), band)).collect();
    let mut entries = vec![C64::new(0.0, 0.0); d * d];
    for (j, col) in cols.iter().enumerate() {
        for (i, f) in col.iter().enumerate() {
            if *f != C64::new(0.0, 0.0) {
                entries[i * d + j] = f * (logw[i] - logw[j]).exp();
            }
        }
    }
    Ok(TruncatedOperator {
        n: band,
        kind,
        weight: *weight,
        grid: g,
        aliasing_estimate: estimate,
        aliasing_warning: warning,
        entries,
        log_weight: logw,
    })
}

/// Certify the mapping cases and turn the certified tori into the weight
/// `ν_{α,−γ}` with `α = δ₁`, `γ = δ₋₁`.
pub fn tune_weight(word: &MapWord, samples: usize) -> Result<(QuadrantWeight, MappingCase)> {
    let case = certify_cases(word, samples)?;
    if case.l1.case == Case::FAIL || case.lm1.case == Case::FAIL {
        return Err(Error::CertificationFailed("no weight certified for this word".into()));
    }
    Ok((QuadrantWeight::new(case.l1.delta, case.lm1.delta), case))
}

/// Floor for the structural-zero threshold of [`diagonal_blocks`].
pub const STRUCTURE_TOL: f64 = 1e-14;

/// Unweighted coefficients below `max(1e-14, 10 · aliasing estimate)` cannot
/// be told apart from DFT error and count as structural zeros.
pub fn structure_threshold(op: &TruncatedOperator) -> f64 {
    STRUCTURE_TOL.max(10.0 * op.aliasing_estimate)
}

fn dense_eigenvalues(m: Mat<faer::c64>) -> Result<Vec<C64>> {
    let ev = m.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(ev.iter().map(|z| C64::new(z.re, z.im)).collect())
}

/// Index sets of the diagonal blocks of a block-triangular permutation of
/// the matrix, from the strongly connected components of its sparsity
/// graph. Entries whose unweighted coefficient `|A_{mn}| ν(n) / ν(m)` is
/// below [`structure_threshold`] are treated as zero.
pub fn diagonal_blocks(op: &TruncatedOperator) -> Vec<Vec<usize>> {
    let d = op.dim();
    let tol = structure_threshold(op);
    let mut edges = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let a = op.entries[i * d + j];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let raw = a.norm() * (op.log_weight[j] - op.log_weight[i]).exp();
            if raw >= tol {
                edges.push((j as u32, i as u32));
            }
        }
    }
    let mut graph: Graph<(), (), Directed, u32> = Graph::with_capacity(d, edges.len());
    for _ in 0..d {
        graph.add_node(());
    }
    graph.extend_with_edges(edges);
    let mut blocks: Vec<Vec<usize>> =
        tarjan_scc(&graph).into_iter().map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            v.sort_unstable();
            v
        }).collect();
    blocks.sort();
    blocks
}

/// All `(2N+1)²` eigenvalues, modulus descending then argument. The matrix
/// is first split into the diagonal blocks of [`diagonal_blocks`] and each
/// block is diagonalised on its own, which keeps the eigenvalues of the
/// strongly nonnormal truncations accurate.
pub fn spectrum(op: &TruncatedOperator) -> Result<Vec<C64>> {
    let d = op.dim();
    let mut out = Vec::with_capacity(d);
    for block in diagonal_blocks(op) {
        if block.len() == 1 {
            let i = block[0];
            out.push(op.entries[i * d + i]);
            continue;
        }
        let sub = Mat::from_fn(block.len(), block.len(), |r, c| {
            let z = op.entries[block[r] * d + block[c]];
            faer::c64::new(z.re, z.im)
        });
        out.extend(dense_eigenvalues(sub)?);
    }
    out.sort_by(modulus_arg_cmp);
    Ok(out)
}

/// Eigenvalues from one dense solve of the whole matrix, without block
/// splitting.
pub fn spectrum_dense(op: &TruncatedOperator) -> Result<Vec<C64>> {
    let mut out = dense_eigenvalues(op.to_faer())?;
    out.sort_by(modulus_arg_cmp);
    Ok(out)
}

/// `Tr A^k` by repeated multiplication.
pub fn numeric_trace_power(op: &TruncatedOperator, k: u32) -> C64 {
    assert!(k >= 1);
    let a = op.to_faer();
    let mut p = a.clone();
    for _ in 1..k {
        p = &p * &a;
    }
    let tr = (0..op.dim()).fold(faer::c64::new(0.0, 0.0), |acc, i| acc + p[(i, i)]);
    C64::new(tr.re, tr.im)
}

/// Values with multiplicity, in list order.
pub fn expand(eigs: &[Eigenvalue]) -> Vec<C64> {
    eigs.iter().flat_map(|e| std::iter::repeat(e.value).take(e.mult)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub matched: Vec<(C64, C64)>,
    pub unmatched_predicted: Vec<C64>,
    pub unmatched_computed: Vec<C64>,
    pub max_rel_error: f64,
    pub ok: bool,
}

/// Greedy one-to-one matching of predicted values above `floor` with the
/// nearest unused computed value within relative tolerance `tol`.
pub fn match_spectra(predicted: &[C64], computed: &[C64], floor: f64, tol: f64) -> MatchReport {
    let mut used = vec![false; computed.len()];
    let mut matched = Vec::new();
    let mut unmatched_predicted = Vec::new();
    let mut max_rel_error: f64 = 0.0;
    for &p in predicted.iter().filter(|p| p.norm() >= floor) {
        let scale = p.norm().max(f64::MIN_POSITIVE);
        let best = computed
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, c)| (i, (c - p).norm() / scale))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, e)) if e <= tol => {
                used[i] = true;
                matched.push((p, computed[i]));
                max_rel_error = max_rel_error.max(e);
            }
            _ => unmatched_predicted.push(p),
        }
    }
    let unmatched_computed: Vec<C64> =
        computed.iter().enumerate().filter(|(i, c)| !used[*i] && c.norm() >= floor).map(|(_, c)| *c).collect();
    let ok = unmatched_predicted.is_empty() && unmatched_computed.is_empty();
    MatchReport { matched, unmatched_predicted, unmatched_computed, max_rel_error, ok }
}

/// Singular values `ν_outer(n) / ν_inner(n)`, `|n1|, |n2| ≤ N`, of the
/// canonical embedding between two weighted spaces, sorted descending.
pub fn embedding_singular_values(inner: &QuadrantWeight, outer: &QuadrantWeight, band: usize) -> Vec<f64> {
    let d = (2 * band + 1) * (2 * band + 1);
    let mut v: Vec<f64> = (0..d)
        .map(|i| {
            let n = band_point(i, band);
            (outer.log_value(n) - inner.log_value(n)).exp()
        })
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Rate `η` for the embedding singular values, from the gaps
/// `A − α` and `γ − Γ`.
pub fn embedding_eta(inner: &QuadrantWeight, outer: &QuadrantWeight) -> f64 {
    let a = [outer.alpha[0] - inner.alpha[0], outer.alpha[1] - inner.alpha[1]];
    let c = [inner.gamma[0] - outer.gamma[0], inner.gamma[1] - outer.gamma[1]];
    (1.0 / (a[0] * a[1]) + 1.0 / (c[0] * c[1])).powf(-0.5)
}

/// `max (log ν(An) − log ν(n)) / ‖n‖₁` over `0 < max|n_i| ≤ range`; negative
/// values certify geometric column decay of the linear composition operator.
pub fn hs_margin(a: &IMat2, weight: &QuadrantWeight, range: i64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for n1 in -range..=range {
        for n2 in -range..=range {
            if n1 == 0 && n2 == 0 {
                continue;
            }
            let an = [a[0][0] * n1 + a[0][1] * n2, a[1][0] * n1 + a[1][1] * n2];
            let phi = weight.log_value(an) - weight.log_value([n1, n2]);
            worst = worst.max(phi / (n1.abs() + n2.abs()) as f64);
        }
    }
    worst
}
