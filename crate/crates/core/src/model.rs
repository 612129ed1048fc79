//! Bloch and real-space Hamiltonians of the two-sublattice gain/loss chain.
//!
//! Every unit cell `n` carries two amplitudes, `α_n` (gain) and `β_n` (loss).
//! Real-space matrices use the interleaved basis `α₁, β₁, α₂, β₂, …` and the
//! amplitude vector evolves as `dψ/dt = −iHψ`. With `α_n = Σ_k e^{ikn} α_k`
//! the chain diagonalises into
//!
//! ```text
//! H_k = h_x σ_x + (h_z + iγ/2) σ_z,   h_x = v + r cos(k+φ),   h_z = r sin(k+φ)
//! ```

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Model parameters shared by every builder.
///
/// `r` is fixed non-negative and `v` may take either sign. `r = 0` is
/// accepted as the decoupled-cell limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub v: f64,
    pub r: f64,
    pub gamma: f64,
    pub n_cells: usize,
    pub boundary: Boundary,
}

impl LatticeParams {
    pub fn new(v: f64, r: f64, gamma: f64, n_cells: usize, boundary: Boundary) -> Result<Self> {
        let p = Self { v, r, gamma, n_cells, boundary };
        p.validate()?;
        Ok(p)
    }

    pub fn open(v: f64, r: f64, gamma: f64, n_cells: usize) -> Result<Self> {
        Self::new(v, r, gamma, n_cells, Boundary::Open)
    }

    pub fn periodic(v: f64, r: f64, gamma: f64, n_cells: usize) -> Result<Self> {
        Self::new(v, r, gamma, n_cells, Boundary::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v.is_finite() && self.r.is_finite() && self.gamma.is_finite()) {
            return Err(Error::InvalidParams("v, r and gamma must be finite".into()));
        }
        if self.r < 0.0 {
            return Err(Error::InvalidParams(format!("r must be non-negative, got {}", self.r)));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if self.n_cells == 0 {
            return Err(Error::InvalidParams("n_cells must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * self.n_cells
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_n_cells(mut self, n_cells: usize) -> Self {
        self.n_cells = n_cells;
        self
    }
}

/// Which per-cell quantity a disorder realisation perturbs.
///
/// `OnSite` adds a real potential `d·ε_n` to both sites of cell `n`; it is
/// the only target that breaks chiral symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderTarget {
    HoppingR,
    HoppingV,
    GainLoss,
    OnSite,
}

impl DisorderTarget {
    pub fn label(&self) -> &'static str {
        match self {
            DisorderTarget::HoppingR => "r",
            DisorderTarget::HoppingV => "v",
            DisorderTarget::GainLoss => "gamma",
            DisorderTarget::OnSite => "onsite",
        }
    }

    pub fn preserves_chirality(&self) -> bool {
        !matches!(self, DisorderTarget::OnSite)
    }
}

/// One disorder realisation: per-cell uniform variates `ε_n ∈ [−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderConfig {
    pub target: DisorderTarget,
    pub strength: f64,
    pub seed: u64,
    pub draws: Vec<f64>,
    /// Independent variates for the cross-sublattice `r_n` hopping line.
    /// `None` means both hopping lines share `draws`.
    pub cross_draws: Option<Vec<f64>>,
}

impl DisorderConfig {
    /// Draws `n_cells` variates from a ChaCha8 stream seeded with `seed`.
    pub fn sample(target: DisorderTarget, strength: f64, seed: u64, n_cells: usize) -> Self {
        Self {
            target,
            strength,
            seed,
            draws: uniform_draws(seed, n_cells),
            cross_draws: None,
        }
    }

    /// Gives the cross-sublattice hopping line its own variates, drawn from
    /// the stream that follows the primary draws.
    pub fn with_independent_cross_hopping(mut self) -> Self {
        let n = self.draws.len();
        let all = uniform_draws(self.seed, 2 * n);
        self.cross_draws = Some(all[n..].to_vec());
        self
    }

    /// Same variates, different strength.
    pub fn with_strength(&self, strength: f64) -> Self {
        Self { strength, ..self.clone() }
    }

    fn check(&self, n_cells: usize) -> Result<()> {
        if self.draws.len() != n_cells {
            return Err(Error::DimensionMismatch { expected: n_cells, found: self.draws.len() });
        }
        if let Some(c) = &self.cross_draws {
            if c.len() != n_cells {
                return Err(Error::DimensionMismatch { expected: n_cells, found: c.len() });
            }
        }
        if !self.strength.is_finite() || self.strength < 0.0 {
            return Err(Error::InvalidParams(format!(
                "disorder strength must be finite and non-negative, got {}",
                self.strength
            )));
        }
        Ok(())
    }
}

fn uniform_draws(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Phase φ multiplying the inter-cell hoppings, optionally ramped in time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseModulation {
    pub phi: f64,
    /// Ramp rate Ω; `φ(t) = phi + Ω t`.
    pub ramp_rate: Option<f64>,
}

impl PhaseModulation {
    pub fn fixed(phi: f64) -> Self {
        Self { phi, ramp_rate: None }
    }

    pub fn ramp(phi: f64, rate: f64) -> Self {
        Self { phi, ramp_rate: Some(rate) }
    }

    pub fn phase_at(&self, t: f64) -> f64 {
        self.phi + self.ramp_rate.unwrap_or(0.0) * t
    }
}

/// Dense real-space Hamiltonian in the basis `α₁, β₁, …, α_N, β_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMatrix {
    n_cells: usize,
    boundary: Boundary,
    entries: Matrix,
}

impl LatticeMatrix {
    pub fn from_entries(n_cells: usize, boundary: Boundary, entries: Matrix) -> Result<Self> {
        if entries.nrows() != 2 * n_cells || entries.ncols() != 2 * n_cells {
            return Err(Error::DimensionMismatch { expected: 2 * n_cells, found: entries.nrows() });
        }
        Ok(Self { n_cells, boundary, entries })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dim(&self) -> usize {
        2 * self.n_cells
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn into_entries(self) -> Matrix {
        self.entries
    }

    /// Uniform background decay `H → H − iδ·1`, as in a passive realisation
    /// where both sublattices lose energy.
    pub fn with_background_decay(mut self, delta: f64) -> Self {
        for j in 0..self.dim() {
            self.entries[(j, j)] -= I * delta;
        }
        self
    }
}

impl AsRef<Matrix> for LatticeMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.entries
    }
}

/// The 2×2 momentum-space Hamiltonian at one crystal momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochMatrix {
    pub k: f64,
    pub phi: f64,
    pub h_x: f64,
    pub h_z: f64,
    pub gamma: f64,
    pub entries: Matrix2<Complex64>,
}

impl BlochMatrix {
    /// The complex σ_z coefficient `h_z + iγ/2`.
    pub fn z_coefficient(&self) -> Complex64 {
        Complex64::new(self.h_z, self.gamma / 2.0)
    }

    pub fn to_dense(&self) -> Matrix {
        DMatrix::from_fn(2, 2, |i, j| self.entries[(i, j)])
    }
}

pub fn build_bloch(params: &LatticeParams, k: f64, phi: f64) -> BlochMatrix {
    let q = k + phi;
    let h_x = params.v + params.r * q.cos();
    let h_z = params.r * q.sin();
    let z = Complex64::new(h_z, params.gamma / 2.0);
    let entries = Matrix2::new(z, re(h_x), re(h_x), -z);
    BlochMatrix { k, phi, h_x, h_z, gamma: params.gamma, entries }
}

/// Builder for real-space Hamiltonians with the optional extras.
#[derive(Debug, Clone)]
pub struct RealSpaceBuilder<'a> {
    params: LatticeParams,
    disorder: Option<&'a DisorderConfig>,
    phi: f64,
    background_decay: Option<f64>,
}

impl<'a> RealSpaceBuilder<'a> {
    pub fn new(params: LatticeParams) -> Self {
        Self { params, disorder: None, phi: 0.0, background_decay: None }
    }

    pub fn disorder(mut self, disorder: &'a DisorderConfig) -> Self {
        self.disorder = Some(disorder);
        self
    }

    pub fn phase(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn background_decay(mut self, delta: f64) -> Self {
        self.background_decay = Some(delta);
        self
    }

    pub fn build(self) -> Result<LatticeMatrix> {
        let h = assemble(&self.params, self.disorder, self.phi)?;
        Ok(match self.background_decay {
            Some(delta) => h.with_background_decay(delta),
            None => h,
        })
    }
}

/// Real-space Hamiltonian of the chain.
///
/// Row `α_n` carries `+iγ_n/2` on the diagonal, `v_n` to `β_n`, `+ir/2` to
/// `α_{n−1}`, `−ir/2` to `α_{n+1}` and `r/2` to `β_{n±1}`; row `β_n` is its
/// sublattice mirror with the signs of the imaginary terms flipped. A hop
/// from cell `n` into cell `n+1` picks up `e^{−iφ}` and the reverse hop
/// `e^{+iφ}`. The bond between cells `n` and `n+1` uses the hopping `r_n`.
pub fn build_real_space(
    params: &LatticeParams,
    disorder: Option<&DisorderConfig>,
    phi: f64,
) -> Result<LatticeMatrix> {
    assemble(params, disorder, phi)
}

fn assemble(params: &LatticeParams, disorder: Option<&DisorderConfig>, phi: f64) -> Result<LatticeMatrix> {
    params.validate()?;
    let n = params.n_cells;
    if let Some(d) = disorder {
        d.check(n)?;
    }

    let shifted = |base: f64, target: DisorderTarget, cell: usize| -> f64 {
        match disorder {
            Some(d) if d.target == target => base + d.strength * d.draws[cell],
            _ => base,
        }
    };
    let cross_r = |cell: usize| -> f64 {
        match disorder {
            Some(d) if d.target == DisorderTarget::HoppingR => {
                let eps = d.cross_draws.as_ref().map_or(d.draws[cell], |c| c[cell]);
                params.r + d.strength * eps
            }
            _ => params.r,
        }
    };

    let mut h = Matrix::zeros(2 * n, 2 * n);
    let a = |c: usize| 2 * c;
    let b = |c: usize| 2 * c + 1;

    for c in 0..n {
        let v = shifted(params.v, DisorderTarget::HoppingV, c);
        let g = shifted(params.gamma, DisorderTarget::GainLoss, c);
        let onsite = shifted(0.0, DisorderTarget::OnSite, c);
        h[(a(c), a(c))] = Complex64::new(onsite, g / 2.0);
        h[(b(c), b(c))] = Complex64::new(onsite, -g / 2.0);
        h[(a(c), b(c))] = re(v);
        h[(b(c), a(c))] = re(v);
    }

    let bonds = match params.boundary {
        Boundary::Open => n.saturating_sub(1),
        Boundary::Periodic => n,
    };
    let forward = Complex64::from_polar(1.0, -phi);
    let backward = Complex64::from_polar(1.0, phi);
    for c in 0..bonds {
        let d = (c + 1) % n;
        let r = shifted(params.r, DisorderTarget::HoppingR, c);
        let rx = cross_r(c);
        // c -> d (into the next cell)
        h[(a(d), a(c))] += I * (r / 2.0) * forward;
        h[(b(d), b(c))] += -I * (r / 2.0) * forward;
        h[(b(d), a(c))] += re(rx / 2.0) * forward;
        h[(a(d), b(c))] += re(rx / 2.0) * forward;
        // d -> c
        h[(a(c), a(d))] += -I * (r / 2.0) * backward;
        h[(b(c), b(d))] += I * (r / 2.0) * backward;
        h[(a(c), b(d))] += re(rx / 2.0) * backward;
        h[(b(c), a(d))] += re(rx / 2.0) * backward;
    }

    Ok(LatticeMatrix { n_cells: n, boundary: params.boundary, entries: h })
}

/// Γ = ⊕_n σ_y.
pub fn chiral_operator(n_cells: usize) -> LatticeMatrix {
    let mut g = Matrix::zeros(2 * n_cells, 2 * n_cells);
    for c in 0..n_cells {
        g[(2 * c, 2 * c + 1)] = -I;
        g[(2 * c + 1, 2 * c)] = I;
    }
    LatticeMatrix { n_cells, boundary: Boundary::Open, entries: g }
}

/// P = ⊕_n σ_x.
pub fn parity_operator(n_cells: usize) -> LatticeMatrix {
    let mut p = Matrix::zeros(2 * n_cells, 2 * n_cells);
    for c in 0..n_cells {
        p[(2 * c, 2 * c + 1)] = re(1.0);
        p[(2 * c + 1, 2 * c)] = re(1.0);
    }
    LatticeMatrix { n_cells, boundary: Boundary::Open, entries: p }
}

#[inline]
fn partner(i: usize) -> usize {
    i ^ 1
}

/// `max |ΓHΓ + H|`, evaluated entry-wise through the σ_y block structure.
pub fn chiral_residual(h: &Matrix) -> f64 {
    assert!(h.is_square() && h.nrows().is_multiple_of(2), "chiral residual needs an even square matrix");
    let n = h.nrows();
    let sign = |i: usize| if i.is_multiple_of(2) { -I } else { I };
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            // (ΓHΓ)_{ij} = Γ_{i,p(i)} H_{p(i),p(j)} Γ_{p(j),j}
            let g = sign(i) * h[(partner(i), partner(j))] * sign(partner(j));
            worst = worst.max((g + h[(i, j)]).norm());
        }
    }
    worst
}

/// `max |P·conj(H)·P − H|` with P = ⊕σ_x; zero iff H is PT symmetric.
pub fn pt_residual(h: &Matrix) -> f64 {
    assert!(h.is_square() && h.nrows().is_multiple_of(2), "PT residual needs an even square matrix");
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mirrored = h[(partner(i), partner(j))].conj();
            worst = worst.max((mirrored - h[(i, j)]).norm());
        }
    }
    worst
}
