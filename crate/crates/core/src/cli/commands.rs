use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{section, ParamSet, RandomBatch, RunConfig};
use super::disorder::{disorder_point, summarize, transitions, Transition, TransitionSummary};
use super::output::{svg_plot, Cell, Csv, OutDir, Series, Style, Units};
use crate::dynamics::{adiabatic_sweep, evolve, fourier_detect_with, Direction, SweepMode, SweepOptions};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{build_real_space, Boundary, DisorderConfig, DisorderTarget, LatticeParams};
use crate::spectra::{edge_profile, smallest_singular_values, zero_mode_analysis, EdgeSide};
use crate::topology::{count_enclosed_eps, track_band, winding_number, ClosurePeriod};

type C = Complex64;

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub out: &'a mut OutDir,
    pub seed: Option<u64>,
    pub svg: bool,
}

fn side_label(side: Option<EdgeSide>) -> String {
    match side {
        Some(EdgeSide::Left) => "left".into(),
        Some(EdgeSide::Right) => "right".into(),
        Some(EdgeSide::Delocalized) => "delocalized".into(),
        None => "none".into(),
    }
}

fn sorted_eigenvalues(h: &crate::model::Matrix) -> Result<Vec<C>> {
    let mut vals = linalg::eigenvalues(h)?;
    vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(vals)
}

#[derive(Serialize)]
struct SpectrumPoint {
    v: f64,
    zero_mode_present: bool,
    /// Row index (within this `v`) of the eigenvalue closest to zero.
    zero_index: usize,
    min_abs_energy: f64,
    sigma_ratio: f64,
    zero_mode_side: String,
    max_abs_imag: f64,
}

#[derive(Serialize)]
struct SpectrumSummary {
    boundary: Boundary,
    n_cells: usize,
    r: f64,
    gamma: f64,
    phi: f64,
    energy_unit: &'static str,
    points: Vec<SpectrumPoint>,
}

pub fn spectrum(ctx: &mut Ctx) -> Result<()> {
    let sec = section(&ctx.cfg.spectrum, "spectrum")?;
    let base = ctx.cfg.model()?;
    let grid = sec.v_grid.values()?;
    let units = Units::for_gamma(base.gamma);
    let results: Vec<(Vec<C>, SpectrumPoint)> = grid
        .par_iter()
        .map(|&v| -> Result<_> {
            let p = LatticeParams { v, ..base };
            let h = build_real_space(&p, None, sec.phi)?.into_entries();
            let vals = sorted_eigenvalues(&h)?;
            let (zero_index, min_abs) = vals
                .iter()
                .enumerate()
                .map(|(i, e)| (i, e.norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((0, f64::NAN));
            let (present, ratio, side) = match zero_mode_analysis(&h, sec.zero_tol) {
                Ok(z) => (true, z.sigma_ratio, Some(edge_profile(&z.u0).side)),
                Err(Error::NoZeroMode { smallest }) => (false, smallest, None),
                Err(e) => return Err(e),
            };
            let max_imag = vals.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
            let point = SpectrumPoint {
                v: units.e(v),
                zero_mode_present: present,
                zero_index,
                min_abs_energy: units.e(min_abs),
                sigma_ratio: ratio,
                zero_mode_side: side_label(side),
                max_abs_imag: units.e(max_imag),
            };
            Ok((vals, point))
        })
        .collect::<Result<_>>()?;

    let mut csv = Csv::new(&[&units.col("v"), "index", &units.col("re_E"), &units.col("im_E")]);
    for (v, (vals, _)) in grid.iter().zip(&results) {
        for (i, e) in vals.iter().enumerate() {
            csv.row(&[Cell::F(units.e(*v)), Cell::U(i), Cell::F(units.e(e.re)), Cell::F(units.e(e.im))]);
        }
    }
    ctx.out.csv("spectrum.csv", &csv)?;
    if ctx.svg {
        for (part, name) in [(0, "spectrum_re.svg"), (1, "spectrum_im.svg")] {
            let mut band = Vec::new();
            let mut zero = Vec::new();
            for (v, (vals, pt)) in grid.iter().zip(&results) {
                for (i, e) in vals.iter().enumerate() {
                    let y = units.e(if part == 0 { e.re } else { e.im });
                    band.push((units.e(*v), y));
                    if pt.zero_mode_present && i == pt.zero_index {
                        zero.push((units.e(*v), y));
                    }
                }
            }
            let label = if part == 0 { "Re E" } else { "Im E" };
            let svg = svg_plot(
                &format!("{label}, {} chain, N = {}", boundary_label(base.boundary), base.n_cells),
                &units.col("v"),
                &units.col(label),
                &[
                    Series { label: "eigenvalues".into(), points: band, style: Style::Dots },
                    Series { label: "E = 0 mode".into(), points: zero, style: Style::Dots },
                ],
            );
            ctx.out.text(name, &svg)?;
        }
    }
    let summary = SpectrumSummary {
        boundary: base.boundary,
        n_cells: base.n_cells,
        r: units.e(base.r),
        gamma: base.gamma,
        phi: sec.phi,
        energy_unit: units.label,
        points: results.into_iter().map(|(_, p)| p).collect(),
    };
    ctx.out.json("spectrum.json", &summary)
}

fn boundary_label(b: Boundary) -> &'static str {
    match b {
        Boundary::Open => "open",
        Boundary::Periodic => "periodic",
    }
}

#[derive(Serialize)]
struct WindingSummary {
    index: usize,
    v: f64,
    r: f64,
    gamma: f64,
    winding: f64,
    closure_period: &'static str,
    eps_enclosed: usize,
    overlap_two_pi: f64,
    overlap_two_pi_other: f64,
    biorthogonal_two_pi: f64,
    overlap_four_pi: f64,
}

#[derive(Serialize)]
struct BatchSummary {
    count: usize,
    seed: u64,
    violations: usize,
}

fn draw_batch(b: &RandomBatch, seed: u64) -> Result<Vec<ParamSet>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = |r: [f64; 2], rng: &mut ChaCha8Rng| if r[1] > r[0] { rng.gen_range(r[0]..r[1]) } else { r[0] };
    let mut out = Vec::with_capacity(b.count);
    let mut tries = 0usize;
    while out.len() < b.count {
        tries += 1;
        if tries > 1000 * b.count.max(1) {
            return Err(Error::Config("random_batch ranges leave no admissible draws".into()));
        }
        let set = ParamSet { v: span(b.v_range, &mut rng), r: span(b.r_range, &mut rng), gamma: span(b.gamma_range, &mut rng) };
        if set.r <= 0.0 || set.gamma < 0.0 {
            continue;
        }
        let margin = [1.0, -1.0].iter().map(|s| ((s * set.gamma / 2.0 - set.v).abs() - set.r).abs()).fold(f64::INFINITY, f64::min);
        if margin >= b.min_margin {
            out.push(set);
        }
    }
    Ok(out)
}

pub fn winding(ctx: &mut Ctx) -> Result<()> {
    let sec = section(&ctx.cfg.winding, "winding")?;
    if sec.parameter_sets.is_empty() && sec.random_batch.is_none() {
        return Err(Error::Config("winding needs `parameter_sets` or `random_batch`".into()));
    }
    let params_of = |s: &ParamSet| LatticeParams::periodic(s.v, s.r, s.gamma, 1);
    let results = sec
        .parameter_sets
        .par_iter()
        .map(|s| winding_number(&track_band(&params_of(s)?, 0.0, sec.samples)?))
        .collect::<Result<Vec<_>>>()?;
    let mut summaries = Vec::new();
    let mut plot = Vec::new();
    for (i, (s, w)) in sec.parameter_sets.iter().zip(&results).enumerate() {
        let units = Units::for_gamma(s.gamma);
        let mut csv = Csv::new(&["k [rad]", "sigma_x", "sigma_z"]);
        for (k, (x, z)) in w.ks.iter().zip(&w.trajectory) {
            csv.row(&[Cell::F(*k), Cell::F(*x), Cell::F(*z)]);
        }
        ctx.out.csv(&format!("winding_{i:03}.csv"), &csv)?;
        summaries.push(WindingSummary {
            index: i,
            v: units.e(s.v),
            r: units.e(s.r),
            gamma: s.gamma,
            winding: w.winding,
            closure_period: w.closure_period.label(),
            eps_enclosed: w.eps_enclosed,
            overlap_two_pi: w.overlap_two_pi,
            overlap_two_pi_other: w.overlap_two_pi_other,
            biorthogonal_two_pi: w.biorthogonal_two_pi,
            overlap_four_pi: w.overlap_four_pi,
        });
        plot.push(Series {
            label: format!("r = {:.3}, W = {}", units.e(s.r), w.winding),
            points: w.trajectory.clone(),
            style: Style::Line,
        });
    }
    ctx.out.json("winding.json", &summaries)?;
    if ctx.svg && !plot.is_empty() {
        ctx.out.text("winding.svg", &svg_plot("Eigenvector trajectory over 4pi", "<sigma_x>", "<sigma_z>", &plot))?;
    }
    if let Some(b) = &sec.random_batch {
        let seed = ctx.seed.unwrap_or(b.seed);
        let sets = draw_batch(b, seed)?;
        let rows = sets
            .par_iter()
            .map(|s| -> Result<(usize, f64, ClosurePeriod)> {
                let p = params_of(s)?;
                let eps = count_enclosed_eps(&p)?;
                let w = winding_number(&track_band(&p, 0.0, sec.samples)?)?;
                Ok((eps, w.winding, w.closure_period))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut csv = Csv::new(&["index", "v [abs]", "r [abs]", "gamma [abs]", "eps_enclosed", "winding", "closure_period", "consistent"]);
        let mut violations = 0;
        for (i, (s, (eps, w, period))) in sets.iter().zip(&rows).enumerate() {
            let ok = (*w - *eps as f64 / 2.0).abs() < 1e-12 && ((*period == ClosurePeriod::FourPi) == (*eps == 1));
            violations += usize::from(!ok);
            csv.row(&[
                Cell::U(i),
                Cell::F(s.v),
                Cell::F(s.r),
                Cell::F(s.gamma),
                Cell::U(*eps),
                Cell::F(*w),
                Cell::S(period.label().into()),
                Cell::B(ok),
            ]);
        }
        ctx.out.csv("winding_batch.csv", &csv)?;
        ctx.out.json("winding_batch.json", &BatchSummary { count: sets.len(), seed, violations })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DisorderSummary {
    n_cells: usize,
    v: f64,
    r: f64,
    gamma: f64,
    seed: u64,
    zero_tol: f64,
    gap_tol: f64,
    batch: Vec<TransitionSummary>,
}

fn target_file_label(t: DisorderTarget) -> &'static str {
    t.label()
}

pub fn disorder(ctx: &mut Ctx) -> Result<()> {
    let sec = section(&ctx.cfg.disorder, "disorder")?;
    let params = ctx.cfg.model()?;
    if params.boundary != Boundary::Open {
        return Err(Error::Config("disorder sweeps use an open chain".into()));
    }
    if sec.targets.is_empty() {
        return Err(Error::Config("disorder needs at least one target".into()));
    }
    let grid = sec.d_grid.values()?;
    if grid.iter().any(|d| *d < 0.0) {
        return Err(Error::Config("disorder strengths must be non-negative".into()));
    }
    let seed = ctx.seed.unwrap_or(sec.seed);
    let units = Units::for_gamma(params.gamma);
    let mut batch = Vec::new();
    for &target in &sec.targets {
        let mut base = DisorderConfig::sample(target, 0.0, seed, params.n_cells);
        if sec.independent_cross_hopping {
            base = base.with_independent_cross_hopping();
        }
        let points = grid
            .par_iter()
            .map(|&d| disorder_point(&params, &base, d, sec.zero_tol))
            .collect::<Result<Vec<_>>>()?;
        let mut csv = Csv::new(&[
            &units.col("d"),
            "index",
            &units.col("re_E"),
            &units.col("im_E"),
            "zero_mode_present",
            "zero_mode_side",
        ]);
        for pt in &points {
            for (i, e) in pt.eigenvalues.iter().enumerate() {
                csv.row(&[
                    Cell::F(units.e(pt.d)),
                    Cell::U(i),
                    Cell::F(units.e(e.re)),
                    Cell::F(units.e(e.im)),
                    Cell::B(pt.zero_mode_present),
                    Cell::S(side_label(pt.side)),
                ]);
            }
        }
        let label = target_file_label(target);
        ctx.out.csv(&format!("disorder_{label}.csv"), &csv)?;
        if ctx.svg {
            let pts: Vec<(f64, f64)> =
                points.iter().flat_map(|p| p.eigenvalues.iter().map(move |e| (units.e(p.d), units.e(e.re)))).collect();
            let svg = svg_plot(
                &format!("Re E with {label} disorder, seed {seed}"),
                &units.col("d"),
                &units.col("Re E"),
                &[Series { label: "eigenvalues".into(), points: pts, style: Style::Dots }],
            );
            ctx.out.text(&format!("disorder_{label}.svg"), &svg)?;
        }
        if let Some(count) = sec.batch_seeds {
            let t: Vec<Transition> = transitions(&params, target, seed, count, &grid, sec.zero_tol, sec.gap_tol)?;
            let mut csv = Csv::new(&["seed", &units.col("departure_d"), &units.col("gap_closure_d")]);
            let opt = |x: Option<f64>| Cell::F(x.map_or(f64::INFINITY, |d| units.e(d)));
            for tr in &t {
                csv.row(&[Cell::S(tr.seed.to_string()), opt(tr.departure), opt(tr.gap_closure)]);
            }
            ctx.out.csv(&format!("disorder_{label}_transitions.csv"), &csv)?;
            batch.push(summarize(target, &t));
        }
    }
    ctx.out.json(
        "disorder.json",
        &DisorderSummary {
            n_cells: params.n_cells,
            v: units.e(params.v),
            r: units.e(params.r),
            gamma: params.gamma,
            seed,
            zero_tol: sec.zero_tol,
            gap_tol: sec.gap_tol,
            batch,
        },
    )
}

pub fn svd_scan(ctx: &mut Ctx) -> Result<()> {
    let sec = section(&ctx.cfg.svd_scan, "svd_scan")?;
    let base = ctx.cfg.model()?;
    if sec.n_list.is_empty() {
        return Err(Error::Config("svd_scan needs a non-empty n_list".into()));
    }
    let grid = sec.v_grid.values()?;
    let units = Units::for_gamma(base.gamma);
    let jobs: Vec<(usize, f64)> = sec.n_list.iter().flat_map(|&n| grid.iter().map(move |&v| (n, v))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, v)| -> Result<(f64, f64, f64)> {
            let p = LatticeParams { v, n_cells: n, boundary: Boundary::Open, ..base };
            p.validate()?;
            let h = build_real_space(&p, None, 0.0)?.into_entries();
            let all = linalg::svd::singular_values(&h)?;
            let s = smallest_singular_values(&h, 2)?;
            Ok((s[0], s.get(1).copied().unwrap_or(f64::NAN), all[0]))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["N", &units.col("v"), &units.col("sigma_min"), &units.col("sigma_2nd"), &units.col("sigma_max")]);
    for (&(n, v), &(s1, s2, smax)) in jobs.iter().zip(&rows) {
        csv.row(&[Cell::U(n), Cell::F(units.e(v)), Cell::F(units.e(s1)), Cell::F(units.e(s2)), Cell::F(units.e(smax))]);
    }
    ctx.out.csv("svd_scan.csv", &csv)?;
    if ctx.svg {
        let series: Vec<Series> = sec
            .n_list
            .iter()
            .map(|&n| Series {
                label: format!("N = {n}"),
                points: jobs
                    .iter()
                    .zip(&rows)
                    .filter(|((m, _), _)| *m == n)
                    .map(|((_, v), (s1, _, _))| (units.e(*v), units.e(*s1).max(1e-300).log10()))
                    .collect(),
                style: Style::Line,
            })
            .collect();
        ctx.out.text("svd_scan.svg", &svg_plot("Smallest singular value", &units.col("v"), "log10 sigma_min", &series))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvolveSummary {
    v: f64,
    r: f64,
    gamma: f64,
    n_cells: usize,
    t_max: f64,
    dt: f64,
    excite: usize,
    site: usize,
    samples: usize,
    zero_peak: bool,
    peak_ratio: f64,
    threshold: f64,
    band_limit: f64,
}

pub fn evolve_cmd(ctx: &mut Ctx) -> Result<()> {
    let sec = section(&ctx.cfg.evolve, "evolve")?;
    let params = match (sec.preset, &ctx.cfg.model) {
        (Some(p), None) => p.params(),
        (None, Some(_)) => ctx.cfg.model()?,
        (Some(_), Some(_)) => return Err(Error::Config("evolve takes either `preset` or `model`, not both".into())),
        (None, None) => return Err(Error::Config("evolve needs `preset` or `model`".into())),
    };
    let dim = params.dim();
    if sec.excite >= dim || sec.site >= dim {
        return Err(Error::Config(format!("excite and site must be below the dimension {dim}")));
    }
    let h = build_real_space(&params, None, 0.0)?.into_entries();
    let mut psi0 = DVector::<C>::zeros(dim);
    psi0[sec.excite] = C::new(1.0, 0.0);
    let series = evolve(&h, &psi0, sec.t_max, sec.dt)?;
    let report = fourier_detect_with(&series, sec.site, sec.threshold)?;
    let units = Units::for_gamma(params.gamma);

    let mut pop = Csv::new(&[&units.time_col("t"), "cell", "population"]);
    for (t, cells) in series.times.iter().zip(&series.cell_populations) {
        for (c, p) in cells.iter().enumerate() {
            pop.row(&[Cell::F(units.t(*t)), Cell::U(c + 1), Cell::F(*p)]);
        }
    }
    ctx.out.csv("evolve_populations.csv", &pop)?;
    let mut site = Csv::new(&[&units.time_col("t"), "re", "im"]);
    for (t, s) in series.times.iter().zip(&series.states) {
        site.row(&[Cell::F(units.t(*t)), Cell::F(s[sec.site].re), Cell::F(s[sec.site].im)]);
    }
    ctx.out.csv("evolve_site.csv", &site)?;
    let mut freq = Csv::new(&[&units.col("omega"), "magnitude"]);
    for (w, m) in report.frequencies.iter().zip(&report.magnitudes) {
        freq.row(&[Cell::F(units.e(*w)), Cell::F(*m)]);
    }
    ctx.out.csv("evolve_spectrum.csv", &freq)?;
    if ctx.svg {
        let lim = report.band_limit;
        let pts = report
            .frequencies
            .iter()
            .zip(&report.magnitudes)
            .filter(|(w, _)| w.abs() <= lim)
            .map(|(w, m)| (units.e(*w), *m))
            .collect();
        let svg = svg_plot(
            &format!("Spectrum of site {}, v = {}", sec.site, units.e(params.v)),
            &units.col("omega"),
            "|X(omega)|",
            &[Series { label: "magnitude".into(), points: pts, style: Style::Line }],
        );
        ctx.out.text("evolve_spectrum.svg", &svg)?;
    }
    ctx.out.json(
        "evolve.json",
        &EvolveSummary {
            v: units.e(params.v),
            r: units.e(params.r),
            gamma: params.gamma,
            n_cells: params.n_cells,
            t_max: units.t(sec.t_max),
            dt: units.t(sec.dt),
            excite: sec.excite,
            site: sec.site,
            samples: series.len(),
            zero_peak: report.zero_peak,
            peak_ratio: report.peak_ratio,
            threshold: report.threshold,
            band_limit: units.e(report.band_limit),
        },
    )
}

#[derive(Serialize)]
struct SweepRow {
    k: f64,
    direction: Direction,
    mode: SweepMode,
    eps_enclosed: usize,
    overlap_plus: f64,
    overlap_minus: f64,
    biorthogonal_plus: f64,
    biorthogonal_minus: f64,
    swapped: bool,
    omega: Option<f64>,
    duration: Option<f64>,
}

pub fn sweep_phase(ctx: &mut Ctx) -> Result<()> {
    let sec = section(&ctx.cfg.sweep_phase, "sweep_phase")?;
    let base = ctx.cfg.model()?;
    let p = LatticeParams { n_cells: 1, boundary: Boundary::Periodic, ..base };
    if sec.k_values.is_empty() || sec.directions.is_empty() {
        return Err(Error::Config("sweep_phase needs k_values and directions".into()));
    }
    let eps = count_enclosed_eps(&p)?;
    let jobs: Vec<(f64, Direction)> = sec.k_values.iter().flat_map(|&k| sec.directions.iter().map(move |&d| (k, d))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(k, direction)| -> Result<SweepRow> {
            let opts = SweepOptions { k, direction, mode: sec.mode, omega: sec.omega, span: sec.span, samples: sec.samples };
            let o = adiabatic_sweep(&p, &opts)?;
            Ok(SweepRow {
                k,
                direction,
                mode: sec.mode,
                eps_enclosed: eps,
                overlap_plus: o.final_overlaps[0],
                overlap_minus: o.final_overlaps[1],
                biorthogonal_plus: o.biorthogonal_overlaps[0],
                biorthogonal_minus: o.biorthogonal_overlaps[1],
                swapped: o.final_overlaps[0] > o.final_overlaps[1],
                omega: o.omega,
                duration: o.duration,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let units = Units::for_gamma(base.gamma);
    let mut csv = Csv::new(&[
        "k [rad]",
        "direction",
        "mode",
        "overlap_plus",
        "overlap_minus",
        "biorthogonal_plus",
        "biorthogonal_minus",
        "swapped",
    ]);
    for r in &rows {
        let dir = if r.direction == Direction::Forward { "forward" } else { "backward" };
        let mode = if r.mode == SweepMode::Transport { "transport" } else { "dynamical" };
        csv.row(&[
            Cell::F(r.k),
            Cell::S(dir.into()),
            Cell::S(mode.into()),
            Cell::F(r.overlap_plus),
            Cell::F(r.overlap_minus),
            Cell::F(r.biorthogonal_plus),
            Cell::F(r.biorthogonal_minus),
            Cell::B(r.swapped),
        ]);
    }
    ctx.out.csv("sweep_phase.csv", &csv)?;
    let rows: Vec<SweepRow> = rows
        .into_iter()
        .map(|r| SweepRow { omega: r.omega.map(|w| units.e(w)), duration: r.duration.map(|t| units.t(t)), ..r })
        .collect();
    if ctx.svg {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.k / PI, r.overlap_plus)).collect();
        let svg = svg_plot(
            "Final overlap with the other band",
            "k [pi]",
            "|<psi, u+(0)>|",
            &[Series { label: "overlap".into(), points: pts, style: Style::Dots }],
        );
        ctx.out.text("sweep_phase.svg", &svg)?;
    }
    ctx.out.json("sweep_phase.json", &rows)
}
