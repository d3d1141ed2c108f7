use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use risfeed::farfield::{array_factor_db, MonopulseCurve};
use risfeed::optimizer::{self, ScanOptions, SweepRow};
use risfeed::power::{builtin_technologies, compare_architectures};
use risfeed::report::{csv_table, fmt_sig};
use risfeed::{
    build_channel, custom_design, decompose_with, design1_pencil, design2_flattop,
    design3_monopulse, evaluate_pattern, monopulse_curve, pattern_metrics, ris_gain, steer,
    BeamDesign, EigenDecomposition, Error, LinearArray, PropagationMatrix, Scene,
};

use crate::config::{DesignKind, Distance, RunConfig};
use crate::CliError;

/// Half width of the flat-top sector reported in the metrics.
const FLAT_SECTOR_DEG: f64 = 15.0;

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Self {
        Self {
            dir,
            written: Vec::new(),
        }
    }

    fn text(&mut self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body)
            .map_err(|e| CliError::Compute(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<PathBuf, CliError> {
        let mut body = serde_json::to_string_pretty(value).expect("json value serializes");
        body.push('\n');
        self.text(name, &body)
    }
}

fn scan_options(cfg: &RunConfig) -> ScanOptions {
    ScanOptions {
        d_step: cfg.optimizer.d_step,
        ris_spacing: cfg.scene.ris_spacing,
        amaf_spacing: cfg.scene.amaf_spacing,
        amaf_offset: cfg.scene.offset,
        persist_steps: cfg.optimizer.persist_steps,
        convention: cfg.phase_convention,
        ..ScanOptions::default()
    }
}

/// Runs the distance optimizer for one RIS size and always leaves the scan
/// record behind, also when the search fails.
fn optimize_distance(cfg: &RunConfig, n_p: usize, w: &mut Writer) -> Result<f64, CliError> {
    let name = format!("scan_np{n_p}.csv");
    let result = optimizer::find_optimal_distance(
        n_p,
        cfg.scene.n_a,
        cfg.amaf_element()?,
        cfg.ris_element()?,
        &scan_options(cfg),
    );
    match result {
        Ok((d, scan)) => {
            w.text(&name, &scan.to_csv())?;
            Ok(d)
        }
        Err(Error::SearchFailure { rayleigh, scan }) => {
            let path = w.text(&name, &scan.to_csv())?;
            Err(CliError::Compute(format!(
                "no unimodal feeder distance below the Rayleigh distance {rayleigh} for n_p = {n_p}; scan written to {}",
                path.display()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn build_scene(cfg: &RunConfig, n_p: usize, d: f64) -> Result<Scene, CliError> {
    let s = &cfg.scene;
    Ok(Scene::new(
        LinearArray::new(n_p, s.ris_spacing, cfg.ris_element()?)?,
        LinearArray::new(s.n_a, s.amaf_spacing, cfg.amaf_element()?)?,
        d,
    )?
    .with_offset(s.offset)?)
}

struct Deployed {
    scene: Scene,
    channel: PropagationMatrix,
    dec: EigenDecomposition,
    optimized: bool,
}

fn deploy(cfg: &RunConfig, w: &mut Writer) -> Result<Deployed, CliError> {
    let (d, optimized) = match cfg.scene.d {
        Distance::Fixed(d) => (d, false),
        Distance::Auto => (optimize_distance(cfg, cfg.scene.n_p, w)?, true),
    };
    let scene = build_scene(cfg, cfg.scene.n_p, d)?;
    let channel = build_channel(&scene)?;
    let dec = decompose_with(&channel, cfg.phase_convention)?;
    if cfg.export_channel {
        w.text("channel.csv", &channel.to_csv())?;
    }
    Ok(Deployed {
        scene,
        channel,
        dec,
        optimized,
    })
}

fn scene_json(cfg: &RunConfig, dep: &Deployed) -> Value {
    json!({
        "n_p": dep.scene.ris.num_elements,
        "n_a": dep.scene.amaf.num_elements,
        "d": dep.scene.distance,
        "distance_source": if dep.optimized { "optimizer" } else { "fixed" },
        "offset": dep.scene.amaf_offset,
        "ris_spacing": dep.scene.ris.spacing,
        "amaf_spacing": dep.scene.amaf.spacing,
        "ris_element": cfg.scene.ris_element,
        "amaf_element": cfg.scene.amaf_element,
    })
}

fn designs(cfg: &RunConfig, dec: &EigenDecomposition) -> Result<Vec<BeamDesign>, CliError> {
    Ok(match cfg.design.kind {
        DesignKind::Pencil => vec![design1_pencil(dec)?],
        DesignKind::Flattop => vec![design2_flattop(dec)?],
        DesignKind::Monopulse => {
            let (s, d) = design3_monopulse(dec)?;
            vec![s, d]
        }
        DesignKind::Custom => {
            let phases = if cfg.design.phases_deg.is_empty() {
                vec![0.0; dec.num_ris()]
            } else {
                cfg.design.phases_deg.clone()
            };
            let phases = risfeed::eigenmodes::phases_from_deg(&phases);
            let mut design = custom_design(dec, &cfg.design.betas, &phases)?;
            design.label = "custom".into();
            vec![design]
        }
    })
}

fn monopulse_json(curve: &MonopulseCurve, hpbw: Option<f64>, file: &Path) -> Value {
    let monotone = hpbw.map(|h| curve.strictly_monotone_over(-h / 2.0, h / 2.0));
    json!({
        "file": file_name(file),
        "null_depth_db": curve.null_depth_db,
        "null_angle_deg": curve.null_angle_deg,
        "monotone_over_sum_hpbw": monotone,
    })
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// `pattern` and `steer`: patterns, metrics and design exports of the
/// configured design at the configured scene.
pub fn pattern(cfg: &RunConfig, out: &Path, steered: bool) -> Result<Vec<PathBuf>, CliError> {
    let mut w = Writer::new(out);
    let dep = deploy(cfg, &mut w)?;
    let mut beams = designs(cfg, &dep.dec)?;
    if steered {
        beams = beams.iter().map(|b| steer(b, cfg.steer_deg)).collect();
    }
    let names: Vec<&str> = if beams.len() == 2 {
        vec!["pattern_sum.csv", "pattern_diff.csv"]
    } else {
        vec!["pattern.csv"]
    };

    let mut patterns = Vec::with_capacity(beams.len());
    let mut beam_json = Vec::with_capacity(beams.len());
    for (beam, name) in beams.iter().zip(&names) {
        let p = evaluate_pattern(beam, &dep.channel, cfg.grid_step_deg)?;
        let path = w.text(name, &p.to_csv())?;
        let mut m = pattern_metrics(&p);
        if cfg.design.kind == DesignKind::Flattop {
            m.flat_sector = Some(p.flat_sector(FLAT_SECTOR_DEG));
        }
        beam_json.push((beam.label.clone(), file_name(&path), m));
        patterns.push(p);
    }

    let mut monopulse = Value::Null;
    if cfg.design.kind == DesignKind::Monopulse {
        let curve = monopulse_curve(&patterns[0], &patterns[1])?;
        let path = w.text("monopulse.csv", &curve.to_csv())?;
        beam_json[1].2.null_depth_db = Some(curve.null_depth_db);
        monopulse = monopulse_json(&curve, beam_json[0].2.hpbw_deg, &path);
    }

    let e_r0 = dep.scene.ris.element.peak_gain;
    let metrics = json!({
        "command": if steered { "steer" } else { "pattern" },
        "design": cfg.design.kind,
        "scene": scene_json(cfg, &dep),
        "phase_convention": dep.dec.convention,
        "grid_step_deg": cfg.grid_step_deg,
        "steer_deg": if steered { cfg.steer_deg } else { 0.0 },
        "sigmas": dep.dec.sigmas,
        "degenerate_modes": dep.dec.degenerate,
        "sigma1_sq_db": dep.dec.sigma1_sq_db(),
        "array_factor_db": array_factor_db(&dep.dec, e_r0),
        "gamma_dbi": ris_gain(&dep.dec, e_r0),
        "beams": beam_json
            .iter()
            .map(|(label, file, m)| json!({
                "label": label,
                "file": file,
                "achieved_peak_deg": m.peak_angle_deg,
                "metrics": m,
            }))
            .collect::<Vec<_>>(),
        "monopulse": monopulse,
    });
    w.json("metrics.json", &metrics)?;
    let exports: Vec<_> = beams.iter().map(BeamDesign::export).collect();
    w.json("design.json", &json!({ "designs": exports }))?;
    Ok(w.written)
}

/// `sweep`: one pencil-beam row per RIS size, ordered by size.
pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut w = Writer::new(out);
    let mut points: Vec<(usize, Option<f64>)> = if cfg.sweep.n_p.is_empty() {
        vec![(cfg.scene.n_p, None)]
    } else {
        match &cfg.sweep.distances {
            Some(ds) => cfg
                .sweep
                .n_p
                .iter()
                .zip(ds)
                .map(|(&n, &d)| (n, Some(d)))
                .collect(),
            None => cfg.sweep.n_p.iter().map(|&n| (n, None)).collect(),
        }
    };
    points.sort_by_key(|p| p.0);

    let mut rows: Vec<SweepRow> = Vec::with_capacity(points.len());
    for (n_p, fixed) in points {
        let d = match (fixed, cfg.scene.d) {
            (Some(d), _) => d,
            (None, Distance::Fixed(d)) => d,
            (None, Distance::Auto) => optimize_distance(cfg, n_p, &mut w)?,
        };
        let scene = build_scene(cfg, n_p, d)?;
        rows.push(optimizer::evaluate_row(
            &scene,
            cfg.phase_convention,
            cfg.grid_step_deg,
        )?);
    }
    w.text("sweep.csv", &optimizer::sweep_csv(&rows))?;
    Ok(w.written)
}

/// `power`: link budget chain and the two-architecture DC comparison.
pub fn power(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let lb = cfg
        .link_budget
        .ok_or_else(|| CliError::Config("power needs a link_budget block".into()))?;
    let tech = cfg.amplifier_technology()?;
    let mut w = Writer::new(out);
    let dep = deploy(cfg, &mut w)?;
    let e_r0 = dep.scene.ris.element.peak_gain;
    let cmp = compare_architectures(&lb, &dep.dec, e_r0, &tech, cfg.amplifier.backoff_db)?;

    let mut survey = builtin_technologies();
    survey.extend(cfg.amplifier.custom.iter().cloned());
    let report = json!({
        "scene": scene_json(cfg, &dep),
        "link_budget": lb,
        "wideband_warning": lb.wideband_warning(),
        "chain": cmp.chain,
        "sigma1_sq_db": cmp.sigma1_sq_db,
        "array_factor_db": cmp.array_factor_db,
        "technology": cmp.technology,
        "backoff_db": cmp.backoff_db,
        "fed_ris": cmp.fed_ris,
        "phased_array": cmp.phased_array,
        "dc_ratio": cmp.phased_array.total_dc_w / cmp.fed_ris.total_dc_w,
        "technologies": survey,
    });
    w.json("power.json", &report)?;

    let rows = [
        ("fed-ris", &cmp.fed_ris),
        ("phased-array", &cmp.phased_array),
    ]
    .into_iter()
    .map(|(name, r)| {
        vec![
            name.to_string(),
            r.pa_count.to_string(),
            fmt_sig(r.per_pa_rf_dbm),
            r.feasible.to_string(),
            fmt_sig(r.drive_dbm),
            fmt_sig(r.dc_per_pa_w),
            fmt_sig(r.total_dc_w),
            fmt_sig(r.total_dc_rounded_w),
        ]
    });
    let csv = csv_table(
        &[
            "architecture",
            "pa_count",
            "per_pa_rf_dbm",
            "feasible",
            "drive_dbm",
            "dc_per_pa_w",
            "total_dc_w",
            "total_dc_rounded_w",
        ],
        rows,
    );
    w.text("power.csv", &csv)?;
    Ok(w.written)
}
