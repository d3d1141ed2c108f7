//! Feeder distance selection and RIS size sweeps for the pencil-beam design.
//!
//! Close to the RIS the principal excitation `sigma_1 |u_1|` breaks into
//! several peaks; far from it `sigma_1^2` keeps falling with distance. The
//! optimum is the smallest distance past the last multi-peaked profile.

use serde::{Deserialize, Serialize};

use crate::arrays::{rayleigh_distance, ElementPattern, LinearArray};
use crate::channel::{build_channel, Scene};
use crate::eigenmodes::{decompose_with, design1_pencil, PhaseConvention};
use crate::error::{Error, Result};
use crate::farfield::{array_factor_db, evaluate_pattern, pattern_metrics, ris_gain, taper_db};
use crate::report::{csv_table, fmt_sig};

pub const DEFAULT_PLATEAU_TOL: f64 = 1e-9;

/// Number of maximal plateaus that are strict local maxima. Adjacent samples
/// closer than `plateau_tol` (relative) belong to the same plateau; a plateau
/// touching an end of the profile only needs to exceed its one neighbor.
pub fn peak_count(profile: &[f64], plateau_tol: f64) -> usize {
    if profile.is_empty() {
        return 0;
    }
    let same = |a: f64, b: f64| (a - b).abs() <= plateau_tol * a.abs().max(b.abs());
    let mut plateaus: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..profile.len() {
        if !same(profile[i - 1], profile[i]) {
            plateaus.push((start, i - 1));
            start = i;
        }
    }
    plateaus.push((start, profile.len() - 1));

    plateaus
        .iter()
        .filter(|&&(s, e)| {
            let v = profile[s];
            let left = s == 0 || profile[s - 1] < v;
            let right = e + 1 == profile.len() || profile[e + 1] < v;
            left && right
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub d: f64,
    pub sigma1_sq_db: f64,
    pub peak_count: usize,
    pub unimodal: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceScan {
    pub records: Vec<DistanceRecord>,
}

impl DistanceScan {
    pub fn to_csv(&self) -> String {
        csv_table(
            &["d", "sigma1_sq_db", "peak_count", "unimodal"],
            self.records.iter().map(|r| {
                vec![
                    fmt_sig(r.d),
                    fmt_sig(r.sigma1_sq_db),
                    r.peak_count.to_string(),
                    r.unimodal.to_string(),
                ]
            }),
        )
    }

    pub fn record_at(&self, d: f64) -> Option<&DistanceRecord> {
        self.records.iter().find(|r| r.d == d)
    }

    /// Whether any scanned distance produced a multi-peaked profile.
    pub fn saw_multimodal(&self) -> bool {
        self.records.iter().any(|r| !r.unimodal)
    }
}

/// Geometry and search settings shared by the scan and the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub d_step: f64,
    pub ris_spacing: f64,
    pub amaf_spacing: f64,
    pub amaf_offset: f64,
    /// Consecutive unimodal steps after a multi-peaked one that end the scan.
    pub persist_steps: usize,
    pub plateau_tol: f64,
    pub convention: PhaseConvention,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            d_step: 1.0,
            ris_spacing: 1.0,
            amaf_spacing: 1.0,
            amaf_offset: 0.0,
            persist_steps: 10,
            plateau_tol: DEFAULT_PLATEAU_TOL,
            convention: PhaseConvention::default(),
        }
    }
}

fn make_scene(
    n_p: usize,
    n_a: usize,
    amaf_el: ElementPattern,
    ris_el: ElementPattern,
    d: f64,
    opts: &ScanOptions,
) -> Result<Scene> {
    Scene::new(
        LinearArray::new(n_p, opts.ris_spacing, ris_el)?,
        LinearArray::new(n_a, opts.amaf_spacing, amaf_el)?,
        d,
    )?
    .with_offset(opts.amaf_offset)
}

fn scan_record(scene: &Scene, opts: &ScanOptions) -> Result<DistanceRecord> {
    let dec = decompose_with(&build_channel(scene)?, opts.convention)?;
    let s1 = dec.sigmas[0];
    let profile: Vec<f64> = dec.u[0].iter().map(|z| s1 * z.norm()).collect();
    let peaks = peak_count(&profile, opts.plateau_tol);
    Ok(DistanceRecord {
        d: scene.distance,
        sigma1_sq_db: dec.sigma1_sq_db(),
        peak_count: peaks,
        unimodal: peaks == 1,
    })
}

/// Scans `d = d_step, 2 d_step, ...` below the Rayleigh distance and returns
/// the first distance after the last multi-peaked profile.
///
/// The scan ends once `persist_steps` unimodal distances follow a
/// multi-peaked one. When no multi-peaked profile occurs at all, every
/// candidate is unimodal and the smallest one is returned.
pub fn find_optimal_distance(
    n_p: usize,
    n_a: usize,
    amaf_el: ElementPattern,
    ris_el: ElementPattern,
    opts: &ScanOptions,
) -> Result<(f64, DistanceScan)> {
    if n_a == 0 || n_p < n_a {
        return Err(Error::InvalidArgument(format!(
            "need n_p >= n_a >= 1, got n_p = {n_p}, n_a = {n_a}"
        )));
    }
    if !(opts.d_step.is_finite() && opts.d_step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance step must be positive, got {}",
            opts.d_step
        )));
    }
    let rayleigh = rayleigh_distance(n_p, opts.ris_spacing);
    let mut scan = DistanceScan::default();
    let mut last_multimodal: Option<usize> = None;
    let mut run = 0;
    for k in 1.. {
        let d = k as f64 * opts.d_step;
        if d >= rayleigh {
            break;
        }
        let rec = scan_record(&make_scene(n_p, n_a, amaf_el, ris_el, d, opts)?, opts)?;
        scan.records.push(rec);
        if rec.unimodal {
            run += 1;
            if last_multimodal.is_some() && run >= opts.persist_steps {
                break;
            }
        } else {
            last_multimodal = Some(scan.records.len() - 1);
            run = 0;
        }
    }

    let chosen = match last_multimodal {
        Some(i) => scan.records.get(i + 1).map(|r| r.d),
        None => scan.records.first().map(|r| r.d),
    };
    match chosen {
        Some(d) => Ok((d, scan)),
        None => Err(Error::SearchFailure {
            rayleigh,
            scan: Box::new(scan),
        }),
    }
}

/// Pencil-beam figures of merit for one RIS size at its chosen distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_p: usize,
    pub d_opt: f64,
    pub gamma_dbi: f64,
    /// `E_R(0) (sum_k |u_1k|)^2` in dB.
    pub array_factor_db: f64,
    pub sigma1_sq_db: f64,
    /// Taper of `sigma_1 |u_1|`.
    pub taper_db: f64,
    pub sll_db: Option<f64>,
    pub v1_taper_db: f64,
    /// Feeder distance over RIS aperture.
    pub f_over_d: f64,
}

pub const SWEEP_COLUMNS: [&str; 9] = [
    "n_p",
    "d_opt",
    "gamma_dbi",
    "array_factor_db",
    "sigma1_sq_db",
    "taper_db",
    "sll_db",
    "v1_taper_db",
    "f_over_d",
];

impl SweepRow {
    pub fn cells(&self) -> Vec<String> {
        vec![
            self.n_p.to_string(),
            fmt_sig(self.d_opt),
            fmt_sig(self.gamma_dbi),
            fmt_sig(self.array_factor_db),
            fmt_sig(self.sigma1_sq_db),
            fmt_sig(self.taper_db),
            self.sll_db.map(fmt_sig).unwrap_or_default(),
            fmt_sig(self.v1_taper_db),
            fmt_sig(self.f_over_d),
        ]
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    csv_table(&SWEEP_COLUMNS, rows.iter().map(SweepRow::cells))
}

/// Evaluates the pencil design of `scene` and fills a sweep row.
pub fn evaluate_row(
    scene: &Scene,
    convention: PhaseConvention,
    grid_step_deg: f64,
) -> Result<SweepRow> {
    let t = build_channel(scene)?;
    let dec = decompose_with(&t, convention)?;
    let e_r0 = scene.ris.element.peak_gain;
    let design = design1_pencil(&dec)?;
    let pattern = evaluate_pattern(&design, &t, grid_step_deg)?;
    let metrics = pattern_metrics(&pattern);
    Ok(SweepRow {
        n_p: scene.ris.num_elements,
        d_opt: scene.distance,
        gamma_dbi: ris_gain(&dec, e_r0),
        array_factor_db: array_factor_db(&dec, e_r0),
        sigma1_sq_db: dec.sigma1_sq_db(),
        taper_db: metrics.taper_db,
        sll_db: metrics.sll_db,
        v1_taper_db: taper_db(&dec.v[0]),
        f_over_d: scene.distance / scene.ris.aperture(),
    })
}

/// One row per RIS size, each at its optimal feeder distance.
pub fn sweep_sizes(
    n_p_list: &[usize],
    n_a: usize,
    amaf_el: ElementPattern,
    ris_el: ElementPattern,
    opts: &ScanOptions,
    grid_step_deg: f64,
) -> Result<Vec<SweepRow>> {
    let mut sizes = n_p_list.to_vec();
    sizes.sort_unstable();
    sizes
        .into_iter()
        .map(|n_p| {
            let (d, _) = find_optimal_distance(n_p, n_a, amaf_el, ris_el, opts)?;
            let scene = make_scene(n_p, n_a, amaf_el, ris_el, d, opts)?;
            evaluate_row(&scene, opts.convention, grid_step_deg)
        })
        .collect()
}

/// Sweep rows at caller-chosen `(n_p, d)` pairs instead of optimized ones.
pub fn sweep_at_distances(
    points: &[(usize, f64)],
    n_a: usize,
    amaf_el: ElementPattern,
    ris_el: ElementPattern,
    opts: &ScanOptions,
    grid_step_deg: f64,
) -> Result<Vec<SweepRow>> {
    let mut points = points.to_vec();
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points
        .into_iter()
        .map(|(n_p, d)| {
            let scene = make_scene(n_p, n_a, amaf_el, ris_el, d, opts)?;
            evaluate_row(&scene, opts.convention, grid_step_deg)
        })
        .collect()
}
