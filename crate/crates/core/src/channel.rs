//! Over-the-air propagation matrix from the feeder to the RIS.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arrays::LinearArray;
use crate::error::{Error, Result};
use crate::report::fmt_sig;

/// Two facing, parallel linear arrays.
///
/// The RIS lies on the x axis at z = 0 looking towards +z; the feeder lies at
/// z = `distance` looking towards -z with its center at x = `amaf_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub ris: LinearArray,
    pub amaf: LinearArray,
    /// Feeder to RIS plane separation, half wavelengths.
    pub distance: f64,
    #[serde(default)]
    pub amaf_offset: f64,
}

impl Scene {
    pub fn new(ris: LinearArray, amaf: LinearArray, distance: f64) -> Result<Self> {
        let scene = Self {
            ris,
            amaf,
            distance,
            amaf_offset: 0.0,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn with_offset(mut self, offset: f64) -> Result<Self> {
        self.amaf_offset = offset;
        self.validate()?;
        Ok(self)
    }

    pub fn with_distance(mut self, distance: f64) -> Result<Self> {
        self.distance = distance;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return Err(Error::InvalidScene(format!(
                "feeder distance must be positive, got {}",
                self.distance
            )));
        }
        if !self.amaf_offset.is_finite() {
            return Err(Error::InvalidScene("feeder offset must be finite".into()));
        }
        Ok(())
    }

    pub fn amaf_positions(&self) -> Vec<f64> {
        self.amaf
            .positions()
            .into_iter()
            .map(|y| y + self.amaf_offset)
            .collect()
    }
}

/// Complex `N_p x N_a` channel from every feeder element to every RIS element.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix {
    entries: DMatrix<Complex64>,
    scene: Scene,
}

impl PropagationMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn num_ris(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_amaf(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[(n, m)]
    }

    /// `T b`, the field arriving at each RIS element.
    pub fn apply(&self, precoder: &[Complex64]) -> Result<Vec<Complex64>> {
        if precoder.len() != self.num_amaf() {
            return Err(Error::InvalidArgument(format!(
                "precoder has {} entries, feeder has {} elements",
                precoder.len(),
                self.num_amaf()
            )));
        }
        Ok((0..self.num_ris())
            .map(|n| {
                precoder
                    .iter()
                    .enumerate()
                    .map(|(m, b)| self.entries[(n, m)] * b)
                    .sum()
            })
            .collect())
    }

    /// One line per RIS element holding `re,im` for every feeder element.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.num_amaf())
            .map(|m| format!("re_{m},im_{m}"))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for n in 0..self.num_ris() {
            let row: Vec<String> = (0..self.num_amaf())
                .map(|m| {
                    let z = self.entries[(n, m)];
                    format!("{},{}", fmt_sig(z.re), fmt_sig(z.im))
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Friis coupling between every element pair, with the path phase `pi r`.
pub fn build_channel(scene: &Scene) -> Result<PropagationMatrix> {
    scene.validate()?;
    let d = scene.distance;
    let ris_x = scene.ris.positions();
    let amaf_x = scene.amaf_positions();
    let ris_el = scene.ris.element;
    let amaf_el = scene.amaf.element;

    let entries = DMatrix::from_fn(ris_x.len(), amaf_x.len(), |n, m| {
        let dx = ris_x[n] - amaf_x[m];
        let r = d.hypot(dx);
        // boresights face each other, so departure and arrival angles coincide
        let cos = d / r;
        let amp = (amaf_el.gain_from_cos(cos) * ris_el.gain_from_cos(cos)).sqrt() / (2.0 * PI * r);
        Complex64::from_polar(amp, PI * r)
    });
    Ok(PropagationMatrix {
        entries,
        scene: *scene,
    })
}

/// Total power captured by the RIS per unit feeder power spread over all
/// modes: the squared Frobenius norm of the channel.
pub fn free_space_coupling(scene: &Scene) -> Result<f64> {
    let t = build_channel(scene)?;
    Ok(t.entries.iter().map(|z| z.norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrays::ElementPattern;
    use approx::assert_relative_eq;

    fn scene(np: usize, na: usize, d: f64, el: ElementPattern) -> Scene {
        Scene::new(
            LinearArray::standard(np, el).unwrap(),
            LinearArray::standard(na, el).unwrap(),
            d,
        )
        .unwrap()
    }

    #[test]
    fn single_pair_on_axis() {
        let t = build_channel(&scene(1, 1, 10.0, ElementPattern::PATCH_6DBI)).unwrap();
        let z = t.get(0, 0);
        assert_relative_eq!(z.re, 4.0 / (20.0 * PI), max_relative = 1e-12);
        assert!(z.im.abs() < 1e-14);
        assert_relative_eq!(z.re, 0.063662, epsilon = 1e-6);
    }

    #[test]
    fn single_pair_offset() {
        let s = scene(1, 1, 10.0, ElementPattern::PATCH_6DBI)
            .with_offset(10.0)
            .unwrap();
        let t = build_channel(&s).unwrap();
        let expected = 2.0 / (20.0 * PI * 2f64.sqrt());
        assert_relative_eq!(t.get(0, 0).norm(), expected, max_relative = 1e-12);
        assert_relative_eq!(t.get(0, 0).norm(), 0.022508, epsilon = 1e-6);
    }

    #[test]
    fn rejects_non_positive_distance() {
        let arr = LinearArray::standard(2, ElementPattern::PATCH_6DBI).unwrap();
        assert!(matches!(
            Scene::new(arr, arr, 0.0),
            Err(Error::InvalidScene(_))
        ));
        assert!(Scene::new(arr, arr, -3.0).is_err());
    }

    #[test]
    fn coupling_single_entry_and_distance_law() {
        let c10 = free_space_coupling(&scene(1, 1, 10.0, ElementPattern::PATCH_6DBI)).unwrap();
        assert_relative_eq!(c10, 0.063662f64.powi(2), max_relative = 1e-5);
        let c20 = free_space_coupling(&scene(1, 1, 20.0, ElementPattern::PATCH_6DBI)).unwrap();
        assert_relative_eq!(c20, c10 / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn phases_follow_path_length() {
        let s = scene(16, 4, 7.3, ElementPattern::PATCH_8DBI);
        let t = build_channel(&s).unwrap();
        let ris = s.ris.positions();
        let amaf = s.amaf_positions();
        for n in 0..16 {
            for m in 0..4 {
                let r = s.distance.hypot(ris[n] - amaf[m]);
                let z = t.get(n, m);
                let diff = (z.arg() - PI * r).rem_euclid(2.0 * PI);
                let wrapped = diff.min(2.0 * PI - diff);
                assert!(wrapped < 1e-9, "phase mismatch at ({n},{m}): {wrapped}");
            }
        }
    }

    #[test]
    fn centro_symmetric_magnitudes() {
        let t = build_channel(&scene(37, 4, 19.0, ElementPattern::PATCH_6DBI)).unwrap();
        let (np, na) = (t.num_ris(), t.num_amaf());
        for n in 0..np {
            for m in 0..na {
                let a = t.get(n, m);
                let b = t.get(np - 1 - n, na - 1 - m);
                assert_relative_eq!(a.norm(), b.norm(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn magnitudes_bounded_by_broadside_link() {
        let el = ElementPattern::PATCH_6DBI;
        let s = scene(64, 4, 30.0, el);
        let t = build_channel(&s).unwrap();
        let bound = (el.peak_gain * el.peak_gain).sqrt() / (2.0 * PI * s.distance);
        for z in t.entries().iter() {
            assert!(z.norm() > 0.0);
            assert!(z.norm() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn columns_unimodal_in_far_zone() {
        let s = scene(64, 4, 64.0 * 64.0, ElementPattern::PATCH_6DBI);
        let t = build_channel(&s).unwrap();
        for m in 0..4 {
            let col: Vec<f64> = (0..64).map(|n| t.get(n, m).norm()).collect();
            let peak = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert!(col[..=peak].windows(2).all(|w| w[1] >= w[0]));
            assert!(col[peak..].windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn csv_layout() {
        let t = build_channel(&scene(3, 2, 5.0, ElementPattern::PATCH_6DBI)).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "re_0,im_0,re_1,im_1");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 4);
    }

    #[test]
    fn apply_checks_length() {
        let t = build_channel(&scene(3, 2, 5.0, ElementPattern::PATCH_6DBI)).unwrap();
        assert!(t.apply(&[Complex64::new(1.0, 0.0)]).is_err());
        let w = t
            .apply(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
            .unwrap();
        assert_eq!(w[2], t.get(2, 0));
    }
}
