//! Disorder sweeps: spectra along a strength grid and per-seed transition
//! points for the zero-energy edge pair.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::linalg;
use crate::model::{build_real_space, DisorderConfig, DisorderTarget, LatticeParams};
use crate::spectra::{bulk_real_gap, edge_profile, zero_mode_analysis, EdgeSide};

type C = Complex64;

/// One disorder realisation at one strength.
#[derive(Debug, Clone)]
pub struct DisorderPoint {
    pub d: f64,
    /// Eigenvalues sorted by real then imaginary part.
    pub eigenvalues: Vec<C>,
    /// Largest `|E|` of the two eigenvalues closest to zero.
    pub pair_magnitude: f64,
    pub zero_mode_present: bool,
    /// Side of the null vector when one exists at the default tolerance.
    pub side: Option<EdgeSide>,
    /// Bulk real gap with the edge pair removed.
    pub bulk_gap: f64,
    pub u0: Option<DVector<C>>,
}

pub fn disorder_point(
    params: &LatticeParams,
    base: &DisorderConfig,
    d: f64,
    zero_tol: f64,
) -> Result<DisorderPoint> {
    let cfg = base.with_strength(d);
    let h = build_real_space(params, Some(&cfg), 0.0)?.into_entries();
    let mut eigenvalues = linalg::eigenvalues(&h)?;
    let mut by_mag: Vec<f64> = eigenvalues.iter().map(|e| e.norm()).collect();
    by_mag.sort_by(f64::total_cmp);
    let pair_magnitude = by_mag.get(1).copied().unwrap_or(by_mag[0]);
    let bulk_gap = bulk_real_gap(&eigenvalues, 2);
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let (side, u0) = match zero_mode_analysis(&h, 1e-8) {
        Ok(z) => (Some(edge_profile(&z.u0).side), Some(z.u0)),
        Err(_) => (None, None),
    };
    Ok(DisorderPoint {
        d,
        eigenvalues,
        pair_magnitude,
        zero_mode_present: pair_magnitude < zero_tol,
        side,
        bulk_gap,
        u0,
    })
}

/// First grid strengths at which the edge pair leaves zero and at which the
/// bulk real gap closes. `None` means it never happened on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub seed: u64,
    pub departure: Option<f64>,
    pub gap_closure: Option<f64>,
}

pub fn transition_for_seed(
    params: &LatticeParams,
    target: DisorderTarget,
    seed: u64,
    grid: &[f64],
    zero_tol: f64,
    gap_tol: f64,
) -> Result<Transition> {
    let base = DisorderConfig::sample(target, 0.0, seed, params.n_cells);
    let mut out = Transition { seed, departure: None, gap_closure: None };
    for &d in grid {
        let h = build_real_space(params, Some(&base.with_strength(d)), 0.0)?.into_entries();
        let vals = linalg::eigenvalues(&h)?;
        let mut mags: Vec<f64> = vals.iter().map(|e| e.norm()).collect();
        mags.sort_by(f64::total_cmp);
        if out.departure.is_none() && mags[1.min(mags.len() - 1)] >= zero_tol {
            out.departure = Some(d);
        }
        if out.gap_closure.is_none() && bulk_real_gap(&vals, 2) < gap_tol {
            out.gap_closure = Some(d);
        }
        if out.departure.is_some() && out.gap_closure.is_some() {
            break;
        }
    }
    Ok(out)
}

/// Transitions for `count` consecutive seeds starting at `first_seed`, in
/// seed order.
pub fn transitions(
    params: &LatticeParams,
    target: DisorderTarget,
    first_seed: u64,
    count: usize,
    grid: &[f64],
    zero_tol: f64,
    gap_tol: f64,
) -> Result<Vec<Transition>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| transition_for_seed(params, target, first_seed + i, grid, zero_tol, gap_tol))
        .collect()
}

/// Median with never-reached points counted as `+∞`; `None` when more than
/// half are missing.
pub fn median(points: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut v: Vec<f64> = points.map(|p| p.unwrap_or(f64::INFINITY)).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionSummary {
    pub target: DisorderTarget,
    pub seeds: usize,
    pub median_departure: Option<f64>,
    pub median_gap_closure: Option<f64>,
    pub never_departed: usize,
    pub never_closed: usize,
}

pub fn summarize(target: DisorderTarget, t: &[Transition]) -> TransitionSummary {
    TransitionSummary {
        target,
        seeds: t.len(),
        median_departure: median(t.iter().map(|x| x.departure)),
        median_gap_closure: median(t.iter().map(|x| x.gap_closure)),
        never_departed: t.iter().filter(|x| x.departure.is_none()).count(),
        never_closed: t.iter().filter(|x| x.gap_closure.is_none()).count(),
    }
}
