//! Spectra, gap diagnostics and defectiveness analysis.
//!
//! Eigenvalues come from the dense Schur solver in [`crate::linalg`]. Near a
//! Jordan block an eigenvalue is only determined to about `ε^{1/m}`, so every
//! statement about defectiveness here goes through singular values instead.

use nalgebra::{DVector, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::svd::{singular_values, Svd};
use crate::linalg::{self, Eigen};
use crate::model::{build_bloch, Boundary, LatticeParams, Matrix};

type C = Complex64;

/// Eigenvalues closer than this multiple of `‖H‖₂` share a cluster.
pub const CLUSTER_RTOL: f64 = 1e-8;
/// A spectrum is real when `max |Im E|` is below this multiple of `‖H‖₂`.
pub const REALITY_RTOL: f64 = 1e-8;
/// Share of the weight an edge must hold to count as localized there.
pub const EDGE_WEIGHT: f64 = 0.9;

/// Default rank tolerance `dim · ε` relative to `σ_max`.
pub fn rank_tolerance(dim: usize) -> f64 {
    dim.max(1) as f64 * f64::EPSILON
}

/// Right eigenpairs of a dense matrix; see [`linalg::eig`].
pub fn eig(h: &Matrix) -> Result<Eigen> {
    linalg::eig(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Mean of the member eigenvalues.
    pub value: C,
    pub members: Vec<usize>,
    pub algebraic: usize,
    pub geometric: usize,
}

/// Single-linkage clustering: `i` and `j` are linked when
/// `|E_i − E_j| < tol`. Clusters are ordered by real then imaginary part of
/// their mean; members keep the input order.
pub fn cluster_eigenvalues(values: &[C], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    let mean = |g: &Vec<usize>| g.iter().map(|&i| values[i]).sum::<C>() / g.len() as f64;
    groups.sort_by(|a, b| {
        let (ma, mb) = (mean(a), mean(b));
        ma.re.total_cmp(&mb.re).then(ma.im.total_cmp(&mb.im))
    });
    groups
}

/// `dim null(H − λI)` at relative tolerance `tol`: the number of singular
/// values of `H − λI` at or below `tol · σ_max`.
pub fn geometric_multiplicity(h: &Matrix, lambda: C, tol: f64) -> Result<usize> {
    let n = h.nrows();
    let mut shifted = h.clone();
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    let s = singular_values(&shifted)?;
    let cut = tol * s.first().copied().unwrap_or(0.0);
    Ok(s.iter().filter(|&&x| x <= cut).count())
}

/// The `count` smallest singular values, ascending.
pub fn smallest_singular_values(h: &Matrix, count: usize) -> Result<Vec<f64>> {
    let mut s = singular_values(h)?;
    s.reverse();
    s.truncate(count);
    Ok(s)
}

/// The zero-energy Jordan data of a chiral matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroMode {
    /// Unit null direction, largest component real and positive.
    pub u0: DVector<C>,
    /// Minimum-norm solution of `H u0′ = u0`, orthogonal to `u0`.
    pub u0_prime: DVector<C>,
    /// Geometric multiplicity is 1 and the chain equation is consistent.
    pub defective: bool,
    pub geometric: usize,
    /// `σ_min / σ_max`.
    pub sigma_ratio: f64,
    /// `‖H u0′ − u0‖`.
    pub chain_residual: f64,
}

/// Extracts `u0` and the generalized eigenvector `u0′` when `H` has a zero
/// eigenvalue at relative tolerance `tol`.
///
/// Presence is decided by the backward-stable test `σ_min ≤ tol · σ_max`:
/// zero is then an exact eigenvalue of a matrix within `tol · ‖H‖₂` of `H`.
/// The individual eigenvalues of a degenerate zero pair coupled to large
/// Jordan blocks can sit far further from zero than that.
pub fn zero_mode_analysis(h: &Matrix, tol: f64) -> Result<ZeroMode> {
    let n = h.nrows();
    if n == 0 {
        return Err(Error::NoZeroMode { smallest: f64::NAN });
    }
    let svd = Svd::new(h)?;
    let smax = svd.max();
    let smin = svd.sigma[n - 1];
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if ratio > tol {
        return Err(Error::NoZeroMode { smallest: ratio });
    }
    let mut u0: DVector<C> = svd.v.column(n - 1).into_owned();
    fix_phase(&mut u0);
    let rank_tol = rank_tolerance(n).max(tol);
    let geometric = svd.nullity(rank_tol).max(1);
    let u0_prime = svd.solve_min_norm(&u0, rank_tol);
    let chain_residual = (h * &u0_prime - &u0).norm();
    let defective = geometric == 1 && chain_residual <= 1e-8 * u0_prime.norm().max(1.0);
    Ok(ZeroMode { u0, u0_prime, defective, geometric, sigma_ratio: ratio, chain_residual })
}

/// Normalizes `u` to unit norm and rotates its largest-magnitude component
/// onto the positive real axis.
pub fn fix_phase(u: &mut DVector<C>) {
    let norm = u.norm();
    if norm == 0.0 {
        return;
    }
    *u /= C::new(norm, 0.0);
    let pivot = u.iter().copied().fold(C::new(0.0, 0.0), |b, z| if z.norm() > b.norm() { z } else { b });
    *u *= pivot.conj() / pivot.norm();
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub eigenvalues: Vec<C>,
    pub clusters: Vec<Cluster>,
    /// `‖H‖₂`.
    pub norm: f64,
    /// Separation of the two bands across `Re E = 0`, ignoring the zero
    /// cluster.
    pub real_gap: f64,
    pub max_imag: f64,
    pub is_real: bool,
    pub zero_cluster: Option<ZeroMode>,
}

impl SpectralReport {
    pub fn cluster_near(&self, value: C) -> Option<&Cluster> {
        self.clusters.iter().min_by(|a, b| (a.value - value).norm().total_cmp(&(b.value - value).norm()))
    }
}

/// Full spectral analysis with the default tolerances.
pub fn analyze(h: &Matrix) -> Result<SpectralReport> {
    let n = h.nrows();
    let eigenvalues = linalg::eigenvalues(h)?;
    let norm = linalg::svd::spectral_norm(h)?;
    let groups = cluster_eigenvalues(&eigenvalues, CLUSTER_RTOL * norm);
    let rank_tol = rank_tolerance(n);
    let mut clusters = Vec::with_capacity(groups.len());
    for members in groups {
        let value = members.iter().map(|&i| eigenvalues[i]).sum::<C>() / members.len() as f64;
        let geometric = geometric_multiplicity(h, value, rank_tol)?.clamp(1, members.len());
        clusters.push(Cluster { value, algebraic: members.len(), geometric, members });
    }
    let zero_tol = CLUSTER_RTOL * norm;
    let real_gap = 2.0
        * eigenvalues
            .iter()
            .filter(|e| e.norm() >= zero_tol)
            .map(|e| e.re.abs())
            .fold(f64::INFINITY, f64::min);
    let max_imag = eigenvalues.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    let is_real = max_imag < REALITY_RTOL * norm;
    let zero_cluster = match zero_mode_analysis(h, CLUSTER_RTOL) {
        Ok(z) => Some(z),
        Err(Error::NoZeroMode { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SpectralReport { eigenvalues, clusters, norm, real_gap, max_imag, is_real, zero_cluster })
}

/// Twice the smallest `|Re E|` after dropping the `skip` eigenvalues closest
/// to zero: the bulk band separation with the edge pair excluded.
pub fn bulk_real_gap(values: &[C], skip: usize) -> f64 {
    let mut by_mag: Vec<C> = values.to_vec();
    by_mag.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    2.0 * by_mag.iter().skip(skip).map(|e| e.re.abs()).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Plus,
    Minus,
}

impl Band {
    pub fn other(self) -> Self {
        match self {
            Band::Plus => Band::Minus,
            Band::Minus => Band::Plus,
        }
    }

    fn index(self) -> usize {
        match self {
            Band::Plus => 0,
            Band::Minus => 1,
        }
    }
}

/// Closed-form eigensystem of one Bloch matrix.
///
/// With `a = h_z + iγ/2`, `b = h_x` and `E = √(a² + b²)` (principal root),
/// `cos θ = a/E`, `sin θ = −b/E` and
/// `u₊ = (cos θ/2, −sin θ/2)`, `u₋ = (sin θ/2, cos θ/2)`, each scaled to unit
/// norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochEigensystem {
    pub k: f64,
    pub phi: f64,
    /// `[E₊, E₋]` with `E₋ = −E₊`.
    pub energies: [C; 2],
    pub vectors: [Vector2<C>; 2],
    pub theta: C,
}

impl BlochEigensystem {
    pub fn energy(&self, band: Band) -> C {
        self.energies[band.index()]
    }

    pub fn vector(&self, band: Band) -> Vector2<C> {
        self.vectors[band.index()]
    }
}

/// Relative splitting below which a Bloch matrix counts as an exceptional
/// point. The splitting grows like the square root of the distance to the
/// EP, so rounding in `sin k` alone leaves about `√ε`.
pub const EP_RTOL: f64 = 1e-7;

pub fn bloch_eigensystem(params: &LatticeParams, k: f64, phi: f64) -> Result<BlochEigensystem> {
    let hk = build_bloch(params, k, phi);
    let a = hk.z_coefficient();
    let b = C::new(hk.h_x, 0.0);
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        let e = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
        return Ok(BlochEigensystem {
            k,
            phi,
            energies: [C::new(0.0, 0.0); 2],
            vectors: [Vector2::new(e[0], e[1]), Vector2::new(e[1], e[0])],
            theta: C::new(0.0, 0.0),
        });
    }
    let (an, bn) = (a / scale, b / scale);
    let en = (an * an + bn * bn).sqrt();
    if 2.0 * en.norm() < EP_RTOL {
        return Err(Error::ExceptionalPoint { splitting: 2.0 * en.norm() * scale });
    }
    let energy = en * scale;
    let (cos_t, sin_t) = (an / en, -bn / en);
    let one = C::new(1.0, 0.0);
    let (c, s) = {
        let c = ((one + cos_t) / 2.0).sqrt();
        if c.norm() > 0.5 {
            (c, sin_t / (c * 2.0))
        } else {
            let s = ((one - cos_t) / 2.0).sqrt();
            (sin_t / (s * 2.0), s)
        }
    };
    let unit = |v: Vector2<C>| v / C::new(v.norm(), 0.0);
    let plus = unit(Vector2::new(c, -s));
    let minus = unit(Vector2::new(s, c));
    let theta = C::new(0.0, -2.0) * (c + C::new(0.0, 1.0) * s).ln();
    Ok(BlochEigensystem { k, phi, energies: [energy, -energy], vectors: [plus, minus], theta })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    /// Closed form `||v| − r| > γ/2`.
    pub real_gap_open: bool,
    /// Closed form `|v| + r < γ/2`.
    pub imag_gap: bool,
    /// `2 min_k |Re E_k|` over the sampled Brillouin zone.
    pub numeric_real_gap: f64,
    /// `2 min_k |Im E_k|` over the sampled Brillouin zone.
    pub numeric_imag_gap: f64,
    /// For open chains, from the real-space spectrum; for periodic chains,
    /// from the sampled Bloch bands.
    pub spectrum_real: bool,
    pub max_imag: f64,
}

/// Numeric gaps at or below this value count as closed.
pub const GAP_ATOL: f64 = 1e-12;

impl GapReport {
    pub fn numeric_real_gap_open(&self) -> bool {
        self.numeric_real_gap > GAP_ATOL
    }

    pub fn numeric_imag_gap_open(&self) -> bool {
        self.numeric_imag_gap > GAP_ATOL
    }

    pub fn closed_form_agrees(&self) -> bool {
        self.real_gap_open == self.numeric_real_gap_open() && self.imag_gap == self.numeric_imag_gap_open()
    }
}

/// Default Brillouin-zone grid; even, so both `k = 0` and `k = π` are sampled.
pub const GAP_GRID: usize = 2048;

pub fn gap_report(params: &LatticeParams) -> Result<GapReport> {
    gap_report_on_grid(params, GAP_GRID)
}

pub fn gap_report_on_grid(params: &LatticeParams, samples: usize) -> Result<GapReport> {
    params.validate()?;
    let (v, r, g) = (params.v, params.r, params.gamma);
    let mut min_re = f64::INFINITY;
    let mut min_im = f64::INFINITY;
    let mut max_im_bloch: f64 = 0.0;
    let mut max_e: f64 = 0.0;
    for j in 0..samples.max(2) {
        let k = 2.0 * std::f64::consts::PI * j as f64 / samples.max(2) as f64;
        let hk = build_bloch(params, k, 0.0);
        let a = hk.z_coefficient();
        let e = (a * a + C::new(hk.h_x * hk.h_x, 0.0)).sqrt();
        min_re = min_re.min(e.re.abs());
        min_im = min_im.min(e.im.abs());
        max_im_bloch = max_im_bloch.max(e.im.abs());
        max_e = max_e.max(e.norm());
    }
    let (spectrum_real, max_imag) = match params.boundary {
        Boundary::Open => {
            let h = crate::model::build_real_space(params, None, 0.0)?.into_entries();
            let vals = linalg::eigenvalues(&h)?;
            let norm = linalg::svd::spectral_norm(&h)?;
            let mi = vals.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
            (mi < REALITY_RTOL * norm, mi)
        }
        Boundary::Periodic => (max_im_bloch < REALITY_RTOL * max_e.max(f64::MIN_POSITIVE), max_im_bloch),
    };
    Ok(GapReport {
        real_gap_open: (v.abs() - r).abs() > g / 2.0,
        imag_gap: v.abs() + r < g / 2.0,
        numeric_real_gap: 2.0 * min_re,
        numeric_imag_gap: 2.0 * min_im,
        spectrum_real,
        max_imag,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSide {
    Left,
    Right,
    Delocalized,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeProfile {
    pub side: EdgeSide,
    /// `|α_n|² + |β_n|²` per cell, normalized to sum to one.
    pub weights: Vec<f64>,
}

/// Classifies where a state lives: `Left`/`Right` when the first/last
/// `⌈N/4⌉` cells hold more than 90% of the weight.
pub fn edge_profile(u: &DVector<C>) -> EdgeProfile {
    let n = u.len() / 2;
    let mut weights: Vec<f64> = (0..n).map(|c| u[2 * c].norm_sqr() + u[2 * c + 1].norm_sqr()).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    let edge = n.div_ceil(4);
    let left: f64 = weights[..edge].iter().sum();
    let right: f64 = weights[n - edge..].iter().sum();
    let side = if left > EDGE_WEIGHT {
        EdgeSide::Left
    } else if right > EDGE_WEIGHT {
        EdgeSide::Right
    } else {
        EdgeSide::Delocalized
    };
    EdgeProfile { side, weights }
}
