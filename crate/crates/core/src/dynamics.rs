//! Time evolution `dψ/dt = −iHψ`, Fourier spectroscopy of a single site and
//! adiabatic phase sweeps of one Bloch mode.

use std::f64::consts::PI;

use nalgebra::{DVector, Matrix2, Vector2};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::expm::{expm, norm1};
use crate::linalg::svd::spectral_norm;
use crate::model::{build_bloch, build_real_space, LatticeParams, Matrix, PhaseModulation};
use crate::spectra::{bloch_eigensystem, Band};
use crate::topology::{biorthogonal_overlap, continue_band, overlap};

type C = Complex64;

/// Largest `‖Ht‖₁` a single propagator call accepts. `e^{709}` is the edge
/// of double precision, so the cap keeps gain from overflowing.
pub const PROPAGATOR_CAP: f64 = 700.0;
pub const DEFAULT_T_MAX: f64 = 60.0;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_ZERO_PEAK_THRESHOLD: f64 = 10.0;

/// `exp(−iHt)` by scaling and squaring.
pub fn propagator(h: &Matrix, t: f64) -> Result<Matrix> {
    propagator_with_cap(h, t, PROPAGATOR_CAP)
}

pub fn propagator_with_cap(h: &Matrix, t: f64, cap: f64) -> Result<Matrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!("propagation time must be finite and non-negative, got {t}")));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParams("matrix has non-finite entries".into()));
    }
    let norm = norm1(h) * t;
    if norm > cap {
        return Err(Error::ExponentTooLarge { norm, cap, substeps: (norm / cap).ceil() as usize });
    }
    Ok(expm(&(h * C::new(0.0, -t))))
}

#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<DVector<C>>,
    /// `|α_n|² + |β_n|²` per instant, per cell.
    pub cell_populations: Vec<Vec<f64>>,
    /// `‖H‖₂` of the generator; bounds every frequency in the signal.
    pub spectral_bound: f64,
}

impl TimeSeries {
    pub fn site(&self, index: usize) -> Vec<C> {
        self.states.iter().map(|s| s[index]).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub fn cell_populations(psi: &DVector<C>) -> Vec<f64> {
    (0..psi.len() / 2).map(|c| psi[2 * c].norm_sqr() + psi[2 * c + 1].norm_sqr()).collect()
}

fn step_count(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParams(format!("t_max must be finite and non-negative, got {t_max}")));
    }
    Ok((t_max / dt).round() as usize)
}

/// Samples `ψ(m·dt) = U(dt)^m ψ₀` for `m = 0..=round(t_max/dt)`.
pub fn evolve(h: &Matrix, psi0: &DVector<C>, t_max: f64, dt: f64) -> Result<TimeSeries> {
    if psi0.len() != h.nrows() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), found: psi0.len() });
    }
    let steps = step_count(t_max, dt)?;
    let u = propagator(h, dt)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(psi0.clone());
    for m in 0..steps {
        let next = &u * &states[m];
        states.push(next);
    }
    finish(states, dt, spectral_norm(h)?)
}

/// Evolution under a phase-modulated clean chain. Each step uses the
/// propagator of `H(φ)` evaluated at the step midpoint.
pub fn evolve_modulated(
    params: &LatticeParams,
    modulation: &PhaseModulation,
    psi0: &DVector<C>,
    t_max: f64,
    dt: f64,
) -> Result<TimeSeries> {
    if psi0.len() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), found: psi0.len() });
    }
    let steps = step_count(t_max, dt)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(psi0.clone());
    let mut bound: f64 = 0.0;
    let mut fixed = None;
    for m in 0..steps {
        let u = match (modulation.ramp_rate, &fixed) {
            (None, Some(u)) => u,
            _ => {
                let phi = modulation.phase_at((m as f64 + 0.5) * dt);
                let h = build_real_space(params, None, phi)?.into_entries();
                bound = bound.max(spectral_norm(&h)?);
                fixed = Some(propagator(&h, dt)?);
                fixed.as_ref().unwrap()
            }
        };
        let next = u * &states[m];
        states.push(next);
    }
    if steps == 0 {
        bound = spectral_norm(&build_real_space(params, None, modulation.phi)?.into_entries())?;
    }
    finish(states, dt, bound)
}

fn finish(states: Vec<DVector<C>>, dt: f64, spectral_bound: f64) -> Result<TimeSeries> {
    if states.iter().any(|s| s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(Error::ExponentTooLarge { norm: f64::INFINITY, cap: PROPAGATOR_CAP, substeps: 0 });
    }
    let times = (0..states.len()).map(|m| m as f64 * dt).collect();
    let cell_populations = states.iter().map(cell_populations).collect();
    Ok(TimeSeries { dt, times, states, cell_populations, spectral_bound })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumPeakReport {
    /// Angular frequencies in ascending order, symmetric about zero.
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub zero_peak: bool,
    /// Zero-bin magnitude over the median magnitude of the in-band bins.
    pub peak_ratio: f64,
    /// Half-width of the band the median is taken over.
    pub band_limit: f64,
    pub threshold: f64,
}

pub const MIN_SERIES_LEN: usize = 256;
/// The median is taken over `|ω| ≤ BAND_FACTOR · ‖H‖₂`.
pub const BAND_FACTOR: f64 = 2.0;
const MIN_BAND_BINS: usize = 8;

pub fn fourier_detect(series: &TimeSeries, site: usize) -> Result<SpectrumPeakReport> {
    fourier_detect_with(series, site, DEFAULT_ZERO_PEAK_THRESHOLD)
}

/// Spectrum `X(ω) = Σ_m x_m e^{iωt_m} dt` of one site amplitude, zero-padded
/// to the next power of two, so that a component `e^{−iEt}` peaks at
/// `ω = E`.
///
/// Zero padding and the finite record spread each line into sidelobes that
/// fill the whole Nyquist range, so a median over all bins mostly measures
/// the far tail. The median here is restricted to the band the dynamics can
/// actually populate, `|ω| ≤ 2‖H‖₂`.
pub fn fourier_detect_with(series: &TimeSeries, site: usize, threshold: f64) -> Result<SpectrumPeakReport> {
    let len = series.len();
    if len < MIN_SERIES_LEN {
        return Err(Error::InvalidParams(format!("Fourier detection needs at least {MIN_SERIES_LEN} samples, got {len}")));
    }
    let dim = series.states[0].len();
    if site >= dim {
        return Err(Error::DimensionMismatch { expected: dim, found: site });
    }
    let l = len.next_power_of_two();
    let mut buf: Vec<C> = series.site(site);
    buf.resize(l, C::new(0.0, 0.0));
    FftPlanner::new().plan_fft_inverse(l).process(&mut buf);
    let dt = series.dt;
    let dw = 2.0 * PI / (l as f64 * dt);
    let half = l / 2;
    let mut frequencies = Vec::with_capacity(l - 1);
    let mut magnitudes = Vec::with_capacity(l - 1);
    for j in (half + 1..l).chain(0..half) {
        let signed = if j > half { j as f64 - l as f64 } else { j as f64 };
        frequencies.push(signed * dw);
        magnitudes.push(buf[j].norm() * dt);
    }
    let zero = half - 1;
    let band_limit = (BAND_FACTOR * series.spectral_bound).max(MIN_BAND_BINS as f64 * dw);
    let mut band: Vec<f64> =
        frequencies.iter().zip(&magnitudes).filter(|(w, _)| w.abs() <= band_limit).map(|(_, m)| *m).collect();
    band.sort_by(f64::total_cmp);
    let median = if band.len() % 2 == 1 {
        band[band.len() / 2]
    } else {
        0.5 * (band[band.len() / 2 - 1] + band[band.len() / 2])
    };
    let peak = magnitudes[zero];
    let peak_ratio = if median > 0.0 { peak / median } else if peak > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(SpectrumPeakReport {
        frequencies,
        magnitudes,
        zero_peak: peak_ratio > threshold,
        peak_ratio,
        band_limit,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Transport,
    Dynamical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub k: f64,
    pub direction: Direction,
    pub mode: SweepMode,
    /// Ramp rate `Ω`; `None` picks a hundredth of the gap at `φ = 0`.
    /// Ignored in transport mode.
    pub omega: Option<f64>,
    /// Total phase advanced, normally `2π`.
    pub span: f64,
    /// Phase samples for transport, phase steps for the dynamical ramp.
    pub samples: usize,
}

impl SweepOptions {
    pub fn transport(k: f64) -> Self {
        Self { k, direction: Direction::Forward, mode: SweepMode::Transport, omega: None, span: 2.0 * PI, samples: 4001 }
    }

    pub fn dynamical(k: f64, omega: Option<f64>) -> Self {
        Self { mode: SweepMode::Dynamical, omega, ..Self::transport(k) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub initial_band: Band,
    /// `|⟨ψ_final, u_{k,±}(0)⟩|` for `[+, −]`, with `ψ_final` normalized.
    pub final_overlaps: [f64; 2],
    /// `|ψ_finalᵀ u_{k,±}(0)| / ‖·‖` for `[+, −]`.
    pub biorthogonal_overlaps: [f64; 2],
    pub omega: Option<f64>,
    pub duration: Option<f64>,
    #[serde(skip)]
    pub final_state: Vector2<C>,
}

/// Sweeps `φ` over `±span` starting from `u_{k,−}(0)`.
pub fn adiabatic_sweep(params: &LatticeParams, opts: &SweepOptions) -> Result<SweepOutcome> {
    let start = bloch_eigensystem(params, opts.k, 0.0)?;
    let initial_band = Band::Minus;
    let psi0 = start.vector(initial_band);
    let sign = opts.direction.sign();
    let (psi, omega, duration) = match opts.mode {
        SweepMode::Transport => (transport(params, opts, psi0, sign)?, None, None),
        SweepMode::Dynamical => {
            let omega = match opts.omega {
                Some(w) if w > 0.0 && w.is_finite() => w,
                Some(w) => return Err(Error::InvalidParams(format!("sweep rate must be positive, got {w}"))),
                None => (start.energy(Band::Plus) - start.energy(Band::Minus)).norm() / 100.0,
            };
            let (psi, duration) = ramp(params, opts, psi0, sign, omega)?;
            (psi, Some(omega), Some(duration))
        }
    };
    let ref_plus = start.vector(Band::Plus);
    let ref_minus = start.vector(Band::Minus);
    Ok(SweepOutcome {
        initial_band,
        final_overlaps: [overlap(&ref_plus, &psi), overlap(&ref_minus, &psi)],
        biorthogonal_overlaps: [biorthogonal_overlap(&ref_plus, &psi), biorthogonal_overlap(&ref_minus, &psi)],
        omega,
        duration,
        final_state: psi,
    })
}

fn transport(params: &LatticeParams, opts: &SweepOptions, psi0: Vector2<C>, sign: f64) -> Result<Vector2<C>> {
    if opts.span == 0.0 {
        return Ok(psi0);
    }
    let samples = opts.samples.max(2);
    let mut current = psi0;
    for j in 1..samples {
        let phi = sign * opts.span * j as f64 / (samples - 1) as f64;
        let next = bloch_eigensystem(params, opts.k, phi)?;
        let band = continue_band(&current, &next, phi)?;
        current = next.vector(band);
    }
    Ok(current)
}

/// `exp(−iHτ)` for a traceless 2×2 `H` with `H² = E²·I`.
fn bloch_step(h: &Matrix2<C>, tau: f64) -> Matrix2<C> {
    let e2 = h[(0, 0)] * h[(0, 0)] + h[(0, 1)] * h[(1, 0)];
    let e = e2.sqrt();
    let x = e * tau;
    let sinc = if x.norm() < 1e-8 { C::new(1.0, 0.0) - x * x / 6.0 } else { x.sin() / x };
    Matrix2::identity() * x.cos() - h * (C::new(0.0, tau) * sinc)
}

fn ramp(params: &LatticeParams, opts: &SweepOptions, psi0: Vector2<C>, sign: f64, omega: f64) -> Result<(Vector2<C>, f64)> {
    let duration = opts.span / omega;
    if duration == 0.0 {
        return Ok((psi0, 0.0));
    }
    let h0 = build_bloch(params, opts.k, 0.0).entries;
    let scale = h0.norm().max(params.v.abs() + params.r + params.gamma);
    let steps = (opts.samples.max(2) as f64).max(duration * scale / 0.05).ceil() as usize;
    let tau = duration / steps as f64;
    let mut psi = psi0;
    for m in 0..steps {
        let phi = sign * omega * (m as f64 + 0.5) * tau;
        let hk = build_bloch(params, opts.k, phi).entries;
        psi = bloch_step(&hk, tau) * psi;
        psi /= C::new(psi.norm(), 0.0);
    }
    Ok((psi, duration))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::zero_mode_analysis;

    fn chain(v: f64, r: f64, n: usize) -> Matrix {
        build_real_space(&LatticeParams::open(v, r, 1.0, n).unwrap(), None, 0.0).unwrap().into_entries()
    }

    fn alpha1(dim: usize) -> DVector<C> {
        let mut psi = DVector::zeros(dim);
        psi[0] = C::new(1.0, 0.0);
        psi
    }

    #[test]
    fn zero_generator_is_identity() {
        assert_eq!(propagator(&Matrix::zeros(4, 4), 3.0).unwrap(), Matrix::identity(4, 4));
    }

    #[test]
    fn cap_reports_substeps() {
        let h = chain(0.5, 0.5, 5);
        match propagator_with_cap(&h, 100.0, 10.0) {
            Err(Error::ExponentTooLarge { substeps, .. }) => assert!(substeps >= 10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn composition() {
        let h = chain(0.7, 0.4, 4);
        let a = propagator(&h, 0.3).unwrap() * propagator(&h, 1.1).unwrap();
        let b = propagator(&h, 1.4).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn stationary_zero_mode() {
        let h = chain(0.5, 0.5, 5);
        let z = zero_mode_analysis(&h, 1e-8).unwrap();
        let s = evolve(&h, &z.u0, 5.0, 0.05).unwrap();
        assert_eq!(s.states[0], z.u0);
        for st in &s.states {
            assert!((st - &z.u0).norm() < 1e-12);
        }
    }

    #[test]
    fn hermitian_norm_conserved() {
        let p = LatticeParams::open(0.4, 0.5, 0.0, 6).unwrap();
        let h = build_real_space(&p, None, 0.0).unwrap().into_entries();
        let s = evolve(&h, &alpha1(12), 20.0, 0.1).unwrap();
        assert!(s.states.iter().all(|st| (st.norm() - 1.0).abs() < 1e-10));
    }

    #[test]
    fn constant_series_has_zero_peak() {
        let states = vec![DVector::from_element(2, C::new(1.0, 0.0)); 512];
        let s = finish(states, 0.1, 1.0).unwrap();
        let rep = fourier_detect(&s, 0).unwrap();
        assert!(rep.zero_peak);
        let n = rep.frequencies.len();
        assert!((rep.frequencies[0] + rep.frequencies[n - 1]).abs() < 1e-12);
        assert_eq!(rep.frequencies[n / 2], 0.0);
    }

    #[test]
    fn single_line_peaks_at_its_energy() {
        let e = 1.3;
        let states: Vec<_> = (0..2048).map(|m| DVector::from_element(2, (C::new(0.0, -e * m as f64 * 0.01)).exp())).collect();
        let s = finish(states, 0.01, e).unwrap();
        let rep = fourier_detect(&s, 1).unwrap();
        let best = (0..rep.magnitudes.len()).max_by(|&a, &b| rep.magnitudes[a].total_cmp(&rep.magnitudes[b])).unwrap();
        assert!((rep.frequencies[best] - e).abs() < 2.0 * PI / (2048.0 * 0.01));
    }

    #[test]
    fn short_series_rejected() {
        let s = finish(vec![DVector::from_element(2, C::new(1.0, 0.0)); 100], 0.1, 1.0).unwrap();
        assert!(matches!(fourier_detect(&s, 0), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn bloch_step_matches_expm() {
        let p = LatticeParams::periodic(0.3, 0.4, 1.0, 1).unwrap();
        let hk = build_bloch(&p, 0.7, 0.2);
        let exact = expm(&(hk.to_dense() * C::new(0.0, -0.37)));
        let step = bloch_step(&hk.entries, 0.37);
        for i in 0..2 {
            for j in 0..2 {
                assert!((exact[(i, j)] - step[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_span_leaves_state() {
        let p = LatticeParams::periodic(0.3, 0.3, 1.0, 1).unwrap();
        let mut o = SweepOptions::transport(0.0);
        o.span = 0.0;
        let out = adiabatic_sweep(&p, &o).unwrap();
        assert!((out.final_overlaps[1] - 1.0).abs() < 1e-14);
        o.mode = SweepMode::Dynamical;
        let out = adiabatic_sweep(&p, &o).unwrap();
        assert!((out.final_overlaps[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn transport_swaps_bands_around_one_ep() {
        let p = LatticeParams::periodic(0.3, 0.3, 1.0, 1).unwrap();
        let out = adiabatic_sweep(&p, &SweepOptions::transport(0.0)).unwrap();
        assert!(out.final_overlaps[0] > 1.0 - 1e-6);
        assert!(out.biorthogonal_overlaps[1] < 1e-3);
        let p = LatticeParams::periodic(0.3, 0.18, 1.0, 1).unwrap();
        let out = adiabatic_sweep(&p, &SweepOptions::transport(0.0)).unwrap();
        assert!(out.final_overlaps[1] > 1.0 - 1e-6);
    }
}
