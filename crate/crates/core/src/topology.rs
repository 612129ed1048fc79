//! Exceptional points, band tracking over two Brillouin zones and the
//! (possibly half-integer) winding number of the Bloch eigenvectors.

use std::f64::consts::PI;

use nalgebra::Vector2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::LatticeParams;
use crate::spectra::{bloch_eigensystem, Band, BlochEigensystem};

type C = Complex64;

pub const DEFAULT_SAMPLES: usize = 4001;
pub const MIN_SAMPLES: usize = 400;
/// Overlap continuation gives up when the two candidates are this close.
pub const AMBIGUITY_GAP: f64 = 1e-3;
/// Relative distance of the EP circle from either EP below which the
/// enclosure count is undefined.
pub const BOUNDARY_RTOL: f64 = 1e-9;
/// Trajectory points closer than this to the origin make the winding
/// undefined.
pub const ORIGIN_ATOL: f64 = 1e-9;

/// Number of exceptional points `(±γ/2, 0)` strictly inside the circle of
/// radius `r` around `(v, 0)` traced by `(h_x, h_z)`.
pub fn count_enclosed_eps(params: &LatticeParams) -> Result<usize> {
    let scale = params.v.abs().max(params.r).max(params.gamma / 2.0).max(f64::MIN_POSITIVE);
    count_enclosed_eps_tol(params, BOUNDARY_RTOL * scale)
}

pub fn count_enclosed_eps_tol(params: &LatticeParams, tol: f64) -> Result<usize> {
    let mut count = 0;
    for s in [1.0, -1.0] {
        let d = (s * params.gamma / 2.0 - params.v).abs();
        if (d - params.r).abs() < tol {
            return Err(Error::OnBoundary { distance: (d - params.r).abs() });
        }
        if d < params.r {
            count += 1;
        }
    }
    Ok(count)
}

/// `|⟨a, b⟩|` for unit vectors.
pub fn overlap(a: &Vector2<C>, b: &Vector2<C>) -> f64 {
    a.dotc(b).norm()
}

/// `|uᵀ w| / (‖u‖ ‖w‖)`. Bloch matrices are complex symmetric, so `uᵀ` is
/// the left eigenvector and distinct bands are exactly orthogonal in this
/// product even though their ordinary overlap is not small.
pub fn biorthogonal_overlap(a: &Vector2<C>, b: &Vector2<C>) -> f64 {
    a.dot(b).norm() / (a.norm() * b.norm())
}

/// Picks the band of `next` that best continues `prev`.
pub(crate) fn continue_band(prev: &Vector2<C>, next: &BlochEigensystem, at: f64) -> Result<Band> {
    let op = overlap(prev, &next.vector(Band::Plus));
    let om = overlap(prev, &next.vector(Band::Minus));
    if (op - om).abs() < AMBIGUITY_GAP {
        return Err(Error::TrackingAmbiguity { k: at, first: op, second: om });
    }
    Ok(if op > om { Band::Plus } else { Band::Minus })
}

/// One band followed continuously in `k` from `0` to `4π` inclusive.
#[derive(Debug, Clone)]
pub struct TrackedBranch {
    pub params: LatticeParams,
    pub phi: f64,
    pub start: Band,
    pub points: Vec<BlochEigensystem>,
    pub bands: Vec<Band>,
    /// Tracked band evaluated at exactly `k = 2π`.
    pub band_at_two_pi: Band,
}

impl TrackedBranch {
    pub fn vector(&self, i: usize) -> Vector2<C> {
        self.points[i].vector(self.bands[i])
    }

    pub fn energy(&self, i: usize) -> C {
        self.points[i].energy(self.bands[i])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Follows the `u₊` band from `k = 0` over `samples` evenly spaced momenta
/// `k_j = 4πj/(samples − 1)` by overlap continuation.
pub fn track_band(params: &LatticeParams, phi: f64, samples: usize) -> Result<TrackedBranch> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParams(format!("band tracking needs at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let start = Band::Plus;
    let step = 4.0 * PI / (samples - 1) as f64;
    let mut points = Vec::with_capacity(samples);
    let mut bands = Vec::with_capacity(samples);
    let mut band_at_two_pi = None;
    let first = bloch_eigensystem(params, 0.0, phi)?;
    points.push(first);
    bands.push(start);
    for j in 1..samples {
        let k = if j == samples - 1 { 4.0 * PI } else { j as f64 * step };
        let prev = points[j - 1].vector(bands[j - 1]);
        if band_at_two_pi.is_none() && k >= 2.0 * PI {
            let mid = bloch_eigensystem(params, 2.0 * PI, phi)?;
            band_at_two_pi = Some(continue_band(&prev, &mid, 2.0 * PI)?);
        }
        let next = bloch_eigensystem(params, k, phi)?;
        let band = continue_band(&prev, &next, k)?;
        points.push(next);
        bands.push(band);
    }
    Ok(TrackedBranch { params: *params, phi, start, points, bands, band_at_two_pi: band_at_two_pi.unwrap_or(start) })
}

/// Complex `u†σ_x u / u†u` and `u†σ_z u / u†u`.
pub fn sigma_expectations(u: &Vector2<C>) -> (C, C) {
    let norm = u.norm_squared();
    let x = (u[0].conj() * u[1] + u[1].conj() * u[0]) / norm;
    let z = (u[0].conj() * u[0] - u[1].conj() * u[1]) / norm;
    (x, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClosurePeriod {
    TwoPi,
    FourPi,
}

impl ClosurePeriod {
    pub fn label(self) -> &'static str {
        match self {
            ClosurePeriod::TwoPi => "2pi",
            ClosurePeriod::FourPi => "4pi",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WindingResult {
    /// Multiple of one half.
    pub winding: f64,
    /// `2 · winding`, exact.
    pub winding_twice: i64,
    /// Accumulated signed angle over the full `4π` sweep.
    pub total_angle: f64,
    pub closure_period: ClosurePeriod,
    pub ks: Vec<f64>,
    /// `(⟨σ_x⟩, ⟨σ_z⟩)` at every tracked momentum.
    pub trajectory: Vec<(f64, f64)>,
    pub eps_enclosed: usize,
    /// `|⟨u(0), u(2π)⟩|` for the tracked band.
    pub overlap_two_pi: f64,
    /// `|⟨u_other(0), u(2π)⟩|`, against the band not started on.
    pub overlap_two_pi_other: f64,
    /// `|u(0)ᵀ u(2π)|`, zero when the bands have exchanged.
    pub biorthogonal_two_pi: f64,
    /// `|⟨u(0), u(4π)⟩|`.
    pub overlap_four_pi: f64,
}

/// Winding of the `(⟨σ_x⟩, ⟨σ_z⟩)` trajectory about the origin, normalized
/// per `4π` sweep so that the value per Brillouin zone may be half-integer.
pub fn winding_number(tracked: &TrackedBranch) -> Result<WindingResult> {
    let n = tracked.len();
    if n < 2 {
        return Err(Error::InvalidParams("tracked branch has fewer than two points".into()));
    }
    let mut trajectory = Vec::with_capacity(n);
    for i in 0..n {
        let (x, z) = sigma_expectations(&tracked.vector(i));
        let (x, z) = (x.re, z.re);
        let dist = x.hypot(z);
        if dist < ORIGIN_ATOL {
            return Err(Error::GaplessTrajectory { distance: dist });
        }
        trajectory.push((x, z));
    }
    let mut total = 0.0;
    for w in trajectory.windows(2) {
        let ((x0, z0), (x1, z1)) = (w[0], w[1]);
        total += (x0 * z1 - z0 * x1).atan2(x0 * x1 + z0 * z1);
    }
    let winding_twice = (total / (2.0 * PI)).round() as i64;
    let start = tracked.vector(0);
    let other = tracked.points[0].vector(tracked.bands[0].other());
    let at_two_pi = bloch_eigensystem(&tracked.params, 2.0 * PI, tracked.phi)?.vector(tracked.band_at_two_pi);
    let overlap_two_pi = overlap(&start, &at_two_pi);
    let overlap_two_pi_other = overlap(&other, &at_two_pi);
    let overlap_four_pi = overlap(&start, &tracked.vector(n - 1));
    // Labels from the principal root can flip while the vector moves
    // continuously, so closure is decided on the vectors themselves.
    let closure_period =
        if overlap_two_pi >= overlap_two_pi_other { ClosurePeriod::TwoPi } else { ClosurePeriod::FourPi };
    Ok(WindingResult {
        winding: winding_twice as f64 / 2.0,
        winding_twice,
        total_angle: total,
        closure_period,
        ks: tracked.points.iter().map(|p| p.k).collect(),
        trajectory,
        eps_enclosed: count_enclosed_eps(&tracked.params)?,
        overlap_two_pi,
        overlap_two_pi_other,
        biorthogonal_two_pi: biorthogonal_overlap(&start, &at_two_pi),
        overlap_four_pi,
    })
}

/// `track_band` with the default sampling followed by `winding_number`.
pub fn winding_for(params: &LatticeParams) -> Result<WindingResult> {
    winding_number(&track_band(params, 0.0, DEFAULT_SAMPLES)?)
}
