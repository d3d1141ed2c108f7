//! Far-field power pattern of the RIS and the metrics read off it.
//!
//! For an excitation `w = D T b` the pattern is
//! `P(theta) = |a(theta)^H w|^2 E_R(theta)`, evaluated on a uniform angular
//! grid over the visible region.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arrays::{ElementPattern, LinearArray};
use crate::channel::{build_channel, PropagationMatrix, Scene};
use crate::eigenmodes::{decompose, BeamDesign, EigenDecomposition};
use crate::error::{Error, Result};
use crate::report::{csv_table, fmt_sig};

/// Substituted for exact pattern nulls so outputs stay finite.
pub const FLOOR_DB: f64 = -400.0;

pub const DEFAULT_GRID_STEP_DEG: f64 = 0.01;

/// Depth below which grid minima are refined by golden-section search.
const REFINE_BELOW_DB: f64 = 60.0;

pub fn to_db(p: f64) -> f64 {
    if p > 0.0 && p.is_finite() {
        (10.0 * p.log10()).max(FLOOR_DB)
    } else {
        FLOOR_DB
    }
}

/// `a(theta)^H w = sum_k w_k exp(j pi k sin theta)`.
pub fn array_response(w: &[Complex64], theta_deg: f64) -> Complex64 {
    let z = Complex64::from_polar(1.0, std::f64::consts::PI * theta_deg.to_radians().sin());
    // Horner from the highest power down
    w.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, wk| acc * z + wk)
}

/// Linear power pattern at a single angle.
pub fn power_at(w: &[Complex64], element: &ElementPattern, theta_deg: f64) -> f64 {
    array_response(w, theta_deg).norm_sqr() * element.gain(theta_deg)
}

/// Symmetric grid over [-90, 90]: `k * step` for integer `k`, plus the end
/// points when `step` does not divide 90.
pub fn angle_grid(step_deg: f64) -> Result<Vec<f64>> {
    if !(step_deg.is_finite() && step_deg > 0.0 && step_deg <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "grid step must lie in (0, 1] degrees, got {step_deg}"
        )));
    }
    let half = (90.0 / step_deg + 1e-9).floor() as i64;
    let mut grid: Vec<f64> = (-half..=half)
        .map(|k| (k as f64 * step_deg).clamp(-90.0, 90.0))
        .collect();
    if grid[0] > -90.0 + 1e-9 {
        grid.insert(0, -90.0);
        grid.push(90.0);
    } else {
        grid[0] = -90.0;
        *grid.last_mut().expect("non-empty grid") = 90.0;
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldPattern {
    pub angles_deg: Vec<f64>,
    pub power_dbi: Vec<f64>,
    /// RIS excitation the pattern was computed from.
    pub excitation: Vec<Complex64>,
    /// RIS element pattern applied on top of the array factor.
    pub element: ElementPattern,
}

impl FarFieldPattern {
    /// Pattern value in dBi at an arbitrary angle, off the grid.
    pub fn dbi_at(&self, theta_deg: f64) -> f64 {
        to_db(power_at(&self.excitation, &self.element, theta_deg))
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    pub fn peak_index(&self) -> usize {
        self.power_dbi.iter().enumerate().fold(
            0,
            |best, (i, &p)| if p > self.power_dbi[best] { i } else { best },
        )
    }

    pub fn nearest_index(&self, theta_deg: f64) -> usize {
        let idx = self.angles_deg.partition_point(|&a| a < theta_deg);
        if idx == 0 {
            return 0;
        }
        if idx >= self.len() {
            return self.len() - 1;
        }
        if (self.angles_deg[idx] - theta_deg).abs() < (theta_deg - self.angles_deg[idx - 1]).abs() {
            idx
        } else {
            idx - 1
        }
    }

    /// Golden-section refinement of the grid local minimum at `index`,
    /// returning the refined angle and its value in dBi.
    pub fn refine_minimum(&self, index: usize) -> (f64, f64) {
        let lo = self.angles_deg[index.saturating_sub(1)];
        let hi = self.angles_deg[(index + 1).min(self.len() - 1)];
        let f = |t: f64| power_at(&self.excitation, &self.element, t);
        let (t, p) = golden_section_min(f, lo, hi);
        let (t, p) = if p <= f(self.angles_deg[index]) {
            (t, p)
        } else {
            (self.angles_deg[index], f(self.angles_deg[index]))
        };
        (t, to_db(p))
    }

    /// Mean, minimum and ripple of the pattern over `|theta| <= half_width`.
    pub fn flat_sector(&self, half_width_deg: f64) -> FlatSector {
        let values: Vec<f64> = self
            .angles_deg
            .iter()
            .zip(&self.power_dbi)
            .filter(|(a, _)| a.abs() <= half_width_deg + 1e-9)
            .map(|(_, &p)| p)
            .collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        FlatSector {
            half_width_deg,
            min_dbi: min,
            max_dbi: max,
            mean_dbi: mean,
            ripple_db: max - min,
        }
    }

    /// `angle_deg,power_dbi` table.
    pub fn to_csv(&self) -> String {
        csv_table(
            &["angle_deg", "power_dbi"],
            self.angles_deg
                .iter()
                .zip(&self.power_dbi)
                .map(|(a, p)| vec![fmt_sig(*a), fmt_sig(*p)]),
        )
    }
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

pub fn evaluate_pattern(
    design: &BeamDesign,
    t: &PropagationMatrix,
    grid_step_deg: f64,
) -> Result<FarFieldPattern> {
    let w = design.excitation(t)?;
    evaluate_excitation(w, t.scene().ris.element, grid_step_deg)
}

/// Pattern of a RIS excitation given directly.
pub fn evaluate_excitation(
    excitation: Vec<Complex64>,
    element: ElementPattern,
    grid_step_deg: f64,
) -> Result<FarFieldPattern> {
    let angles_deg = angle_grid(grid_step_deg)?;
    let power_dbi = angles_deg
        .iter()
        .map(|&a| to_db(power_at(&excitation, &element, a)))
        .collect();
    Ok(FarFieldPattern {
        angles_deg,
        power_dbi,
        excitation,
        element,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatSector {
    pub half_width_deg: f64,
    pub min_dbi: f64,
    pub max_dbi: f64,
    pub mean_dbi: f64,
    pub ripple_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMetrics {
    pub peak_dbi: f64,
    pub peak_angle_deg: f64,
    /// Highest sidelobe relative to the peak; `None` when the pattern has a
    /// single lobe.
    pub sll_db: Option<f64>,
    pub hpbw_deg: Option<f64>,
    /// `10 log10(max|w| / min|w|)` over the RIS excitation.
    pub taper_db: f64,
    pub broadside_dbi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null_depth_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flat_sector: Option<FlatSector>,
}

/// Taper of an excitation profile in dB, `10 log10(max / min)` of the
/// magnitudes.
pub fn taper_db(w: &[Complex64]) -> f64 {
    let max = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let min = w.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else if min == 0.0 {
        -FLOOR_DB
    } else {
        10.0 * (max / min).log10()
    }
}

/// Main lobe bounds: the first local minima on either side of `peak`.
fn main_lobe(p: &[f64], peak: usize) -> (usize, usize) {
    let mut l = peak;
    while l > 0 && p[l - 1] <= p[l] {
        l -= 1;
    }
    let mut r = peak;
    while r + 1 < p.len() && p[r + 1] <= p[r] {
        r += 1;
    }
    (l, r)
}

fn half_power_crossing(angles: &[f64], p: &[f64], peak: usize, step: isize) -> Option<f64> {
    let level = p[peak] - 3.0;
    let mut i = peak as isize;
    loop {
        let j = i + step;
        if j < 0 || j as usize >= p.len() {
            return None;
        }
        let (pi, pj) = (p[i as usize], p[j as usize]);
        if pj <= level {
            let frac = (pi - level) / (pi - pj);
            let (ai, aj) = (angles[i as usize], angles[j as usize]);
            return Some(ai + frac * (aj - ai));
        }
        i = j;
    }
}

pub fn pattern_metrics(p: &FarFieldPattern) -> PatternMetrics {
    let peak = p.peak_index();
    let (l, r) = main_lobe(&p.power_dbi, peak);
    let outside = p.power_dbi[..l]
        .iter()
        .chain(&p.power_dbi[r + 1..])
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let sll_db = outside.is_finite().then(|| outside - p.power_dbi[peak]);
    let hpbw_deg = match (
        half_power_crossing(&p.angles_deg, &p.power_dbi, peak, -1),
        half_power_crossing(&p.angles_deg, &p.power_dbi, peak, 1),
    ) {
        (Some(lo), Some(hi)) => Some(hi - lo),
        _ => None,
    };
    PatternMetrics {
        peak_dbi: p.power_dbi[peak],
        peak_angle_deg: p.angles_deg[peak],
        sll_db,
        hpbw_deg,
        taper_db: taper_db(&p.excitation),
        broadside_dbi: p.dbi_at(0.0),
        null_depth_db: None,
        flat_sector: None,
    }
}

/// Center-beam RIS gain `sigma_1^2 (sum_k |u_1k|)^2 E_R(0)` in dBi.
pub fn ris_gain(dec: &EigenDecomposition, e_r0: f64) -> f64 {
    let s1 = dec.sigmas[0];
    let coherent: f64 = dec.u[0].iter().map(|z| z.norm()).sum();
    to_db(s1 * s1 * coherent * coherent * e_r0)
}

/// Coherent aperture term `E_R(0) (sum_k |u_1k|)^2` in dB.
pub fn array_factor_db(dec: &EigenDecomposition, e_r0: f64) -> f64 {
    let coherent: f64 = dec.u[0].iter().map(|z| z.norm()).sum();
    to_db(coherent * coherent * e_r0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonopulseCurve {
    pub angles_deg: Vec<f64>,
    /// Difference over sum response, projected on its principal phase across
    /// the sum main lobe. NaN where the sum response vanishes.
    pub ratio: Vec<f64>,
    /// Sum peak minus the refined difference-pattern null, dB.
    pub null_depth_db: f64,
    pub null_angle_deg: f64,
}

impl MonopulseCurve {
    pub fn to_csv(&self) -> String {
        csv_table(
            &["angle_deg", "ratio"],
            self.angles_deg
                .iter()
                .zip(&self.ratio)
                .map(|(a, r)| vec![fmt_sig(*a), fmt_sig(*r)]),
        )
    }

    /// Whether the ratio is strictly monotone over `[lo, hi]` degrees.
    pub fn strictly_monotone_over(&self, lo: f64, hi: f64) -> bool {
        let seg: Vec<f64> = self
            .angles_deg
            .iter()
            .zip(&self.ratio)
            .filter(|(a, _)| **a >= lo && **a <= hi)
            .map(|(_, &r)| r)
            .collect();
        if seg.len() < 2 {
            return false;
        }
        let rising = seg.windows(2).all(|w| w[1] > w[0]);
        let falling = seg.windows(2).all(|w| w[1] < w[0]);
        rising || falling
    }
}

pub fn monopulse_curve(sum: &FarFieldPattern, diff: &FarFieldPattern) -> Result<MonopulseCurve> {
    if sum.angles_deg != diff.angles_deg {
        return Err(Error::InvalidArgument(
            "sum and difference patterns use different grids".into(),
        ));
    }
    let responses: Vec<(Complex64, Complex64)> = sum
        .angles_deg
        .iter()
        .map(|&a| {
            (
                array_response(&sum.excitation, a),
                array_response(&diff.excitation, a),
            )
        })
        .collect();

    // the difference null sought is the one inside the sum main lobe closest
    // to the sum peak
    let peak = sum.peak_index();
    let (l, r) = main_lobe(&sum.power_dbi, peak);
    let best = (l..=r)
        .filter(|&i| is_local_min(&diff.power_dbi, i))
        .min_by_key(|&i| i.abs_diff(peak))
        .unwrap_or_else(|| {
            (l..=r)
                .min_by(|&a, &b| diff.power_dbi[a].total_cmp(&diff.power_dbi[b]))
                .unwrap_or(peak)
        });

    // principal phase of D/S across the main lobe, weighted by |S|^4
    let axis: Complex64 = responses[l..=r]
        .iter()
        .map(|(s, d)| (d * s.conj()).powi(2))
        .sum();
    let rot = Complex64::from_polar(1.0, -axis.arg() / 2.0);
    let ratio = responses
        .iter()
        .map(|(s, d)| {
            if s.norm() == 0.0 {
                f64::NAN
            } else {
                (d / s * rot).re
            }
        })
        .collect();

    let sum_peak = sum.power_dbi[peak];
    let (null_angle_deg, null_dbi) = if sum_peak - diff.power_dbi[best] > REFINE_BELOW_DB {
        diff.refine_minimum(best)
    } else {
        (diff.angles_deg[best], diff.power_dbi[best])
    };
    Ok(MonopulseCurve {
        angles_deg: sum.angles_deg.clone(),
        ratio,
        null_depth_db: sum_peak - null_dbi,
        null_angle_deg,
    })
}

fn is_local_min(p: &[f64], i: usize) -> bool {
    (i == 0 || p[i] <= p[i - 1]) && (i + 1 == p.len() || p[i] <= p[i + 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub amaf_gain_db: f64,
    pub ris_gain_db: f64,
    pub gamma_dbi: f64,
    /// First-row gain shifted by `dE_A + 2 dE_R` (in dB).
    pub product_law_dbi: f64,
    pub residual_db: f64,
}

/// Center-beam gain for each `(feeder element, RIS element)` pair on an
/// otherwise fixed scene, compared with the `E_A(0) E_R(0)^2` law anchored at
/// the first pair.
pub fn element_gain_scaling_report(
    n_p: usize,
    n_a: usize,
    distance: f64,
    pairs: &[(ElementPattern, ElementPattern)],
) -> Result<Vec<ScalingRow>> {
    let mut rows: Vec<ScalingRow> = Vec::with_capacity(pairs.len());
    for &(amaf_el, ris_el) in pairs {
        let scene = Scene::new(
            LinearArray::standard(n_p, ris_el)?,
            LinearArray::standard(n_a, amaf_el)?,
            distance,
        )?;
        let dec = decompose(&build_channel(&scene)?)?;
        let gamma = ris_gain(&dec, ris_el.peak_gain);
        let (ea, er) = (amaf_el.peak_gain_dbi(), ris_el.peak_gain_dbi());
        let product_law = match rows.first() {
            Some(r0) => r0.gamma_dbi + (ea - r0.amaf_gain_db) + 2.0 * (er - r0.ris_gain_db),
            None => gamma,
        };
        rows.push(ScalingRow {
            amaf_gain_db: ea,
            ris_gain_db: er,
            gamma_dbi: gamma,
            product_law_dbi: product_law,
            residual_db: gamma - product_law,
        });
    }
    Ok(rows)
}
