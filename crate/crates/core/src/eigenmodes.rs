//! Singular value decomposition of the propagation matrix and the
//! eigenmode-based beam designs built from it.
//!
//! A design is a feeder precoder `b = sum beta_i v_i` together with a RIS
//! phase profile `D`. The RIS excitation is then `D T b = D sum sigma_i beta_i u_i`.

use std::f64::consts::PI;

use nalgebra::linalg::SVD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::PropagationMatrix;
use crate::error::{Error, Result};

const TIE_TOL: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-12;

/// How the arbitrary phase of each singular pair is fixed.
///
/// Designs that add modes with real weights depend on this choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConvention {
    /// The feeder-side vector `v_i` is real and non-negative at its
    /// center-most element (lowest index between two equidistant centers,
    /// skipping entries below 1e-3 of the vector's peak).
    #[default]
    AmafCenter,
    /// The largest-magnitude entry of `u_i` is real and non-negative (lowest
    /// index among entries within 1e-12 of the maximum).
    RisPeak,
}

impl PhaseConvention {
    fn reference_index(self, u: &[Complex64], v: &[Complex64]) -> usize {
        match self {
            PhaseConvention::RisPeak => peak_index(u),
            PhaseConvention::AmafCenter => center_index(v),
        }
    }
}

fn peak_index(x: &[Complex64]) -> usize {
    let max = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    x.iter()
        .position(|z| z.norm() >= max * (1.0 - TIE_TOL))
        .unwrap_or(0)
}

fn center_index(x: &[Complex64]) -> usize {
    let max = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let center = (x.len() as f64 - 1.0) / 2.0;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        let da = (a as f64 - center).abs();
        let db = (b as f64 - center).abs();
        da.total_cmp(&db).then(a.cmp(&b))
    });
    order
        .into_iter()
        .find(|&k| x[k].norm() >= 1e-3 * max)
        .unwrap_or(0)
}

/// Ordered singular triples of a propagation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub sigmas: Vec<f64>,
    /// RIS-side singular vectors, `u[i]` has one entry per RIS element.
    pub u: Vec<Vec<Complex64>>,
    /// Feeder-side singular vectors.
    pub v: Vec<Vec<Complex64>>,
    pub convention: PhaseConvention,
    /// Indices `i` where `sigma_i - sigma_{i+1} < 1e-12 sigma_1`; the
    /// corresponding vectors are not uniquely defined.
    pub degenerate: Vec<usize>,
}

impl EigenDecomposition {
    pub fn num_modes(&self) -> usize {
        self.sigmas.len()
    }

    pub fn num_ris(&self) -> usize {
        self.u.first().map_or(0, Vec::len)
    }

    pub fn num_amaf(&self) -> usize {
        self.v.first().map_or(0, Vec::len)
    }

    pub fn sigma1_sq_db(&self) -> f64 {
        10.0 * (self.sigmas[0] * self.sigmas[0]).log10()
    }

    /// `sum_i sigma_i^2`, which equals the squared Frobenius norm of `T`.
    pub fn energy(&self) -> f64 {
        self.sigmas.iter().map(|s| s * s).sum()
    }

    fn require_modes(&self, required: usize) -> Result<()> {
        if self.num_modes() < required {
            return Err(Error::InsufficientModes {
                required,
                available: self.num_modes(),
            });
        }
        Ok(())
    }
}

pub fn decompose(t: &PropagationMatrix) -> Result<EigenDecomposition> {
    decompose_with(t, PhaseConvention::default())
}

pub fn decompose_with(
    t: &PropagationMatrix,
    convention: PhaseConvention,
) -> Result<EigenDecomposition> {
    let m = t.entries();
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Decomposition("matrix has non-finite entries".into()));
    }
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Decomposition("iteration did not converge".into()))?;
    let u_mat = svd
        .u
        .ok_or_else(|| Error::Decomposition("left vectors missing".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Decomposition("right vectors missing".into()))?;

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let mut sigmas = Vec::with_capacity(order.len());
    let mut us = Vec::with_capacity(order.len());
    let mut vs = Vec::with_capacity(order.len());
    for &i in &order {
        let mut u: Vec<Complex64> = u_mat.column(i).iter().copied().collect();
        // T = U S V^H, so v_i is the conjugated i-th row of V^H
        let mut v: Vec<Complex64> = v_t.row(i).iter().map(|z| z.conj()).collect();
        let k = convention.reference_index(&u, &v);
        let reference = if convention == PhaseConvention::RisPeak {
            u[k]
        } else {
            v[k]
        };
        if reference.norm() > 0.0 {
            let rot = reference.conj() / reference.norm();
            u.iter_mut().for_each(|z| *z *= rot);
            v.iter_mut().for_each(|z| *z *= rot);
        }
        sigmas.push(svd.singular_values[i]);
        us.push(u);
        vs.push(v);
    }

    let degenerate = match sigmas.first() {
        Some(&s1) => (0..sigmas.len().saturating_sub(1))
            .filter(|&i| sigmas[i] - sigmas[i + 1] < DEGENERACY_TOL * s1)
            .collect(),
        None => Vec::new(),
    };

    Ok(EigenDecomposition {
        sigmas,
        u: us,
        v: vs,
        convention,
        degenerate,
    })
}

/// Feeder precoder plus RIS phase profile.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamDesign {
    pub label: String,
    pub precoder: Vec<Complex64>,
    /// Unit-modulus diagonal of the RIS phase matrix.
    pub ris_phases: Vec<Complex64>,
}

/// Serialized form of a design: precoder as `[re, im]` pairs and RIS phases
/// in degrees within `[-180, 180)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignExport {
    pub label: String,
    pub b: Vec<[f64; 2]>,
    pub ris_phases_deg: Vec<f64>,
}

impl BeamDesign {
    /// RIS excitation `D T b`.
    pub fn excitation(&self, t: &PropagationMatrix) -> Result<Vec<Complex64>> {
        if self.ris_phases.len() != t.num_ris() {
            return Err(Error::InvalidArgument(format!(
                "design has {} RIS phases, channel has {} RIS elements",
                self.ris_phases.len(),
                t.num_ris()
            )));
        }
        let tb = t.apply(&self.precoder)?;
        Ok(tb
            .iter()
            .zip(&self.ris_phases)
            .map(|(w, d)| w * d)
            .collect())
    }

    pub fn export(&self) -> DesignExport {
        DesignExport {
            label: self.label.clone(),
            b: self.precoder.iter().map(|z| [z.re, z.im]).collect(),
            ris_phases_deg: self.ris_phases.iter().map(|z| wrap_deg(z.arg())).collect(),
        }
    }
}

fn wrap_deg(rad: f64) -> f64 {
    let deg = rad.to_degrees();
    let wrapped = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if wrapped >= 180.0 {
        -180.0
    } else {
        wrapped
    }
}

fn identity_phases(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0); n]
}

fn scaled(v: &[Complex64], s: f64) -> Vec<Complex64> {
    v.iter().map(|z| z * s).collect()
}

/// Principal-mode pencil beam: `b = v_1` and RIS phases that make the
/// excitation `sigma_1 |u_1|` real and non-negative.
pub fn design1_pencil(dec: &EigenDecomposition) -> Result<BeamDesign> {
    dec.require_modes(1)?;
    let u1 = &dec.u[0];
    let mut ris_phases = Vec::with_capacity(u1.len());
    for (index, z) in u1.iter().enumerate() {
        let magnitude = z.norm();
        if magnitude < 1e-15 {
            return Err(Error::DegenerateExcitation { index, magnitude });
        }
        ris_phases.push(z.conj() / magnitude);
    }
    Ok(BeamDesign {
        label: "pencil".into(),
        precoder: dec.v[0].clone(),
        ris_phases,
    })
}

/// Flat-top sector beam: `b = 2 v_1 / sigma_1 + v_3 / sigma_3` with no RIS
/// phase correction, giving the excitation `2 u_1 + u_3`.
pub fn design2_flattop(dec: &EigenDecomposition) -> Result<BeamDesign> {
    dec.require_modes(3)?;
    let (s1, s3) = (dec.sigmas[0], dec.sigmas[2]);
    if s3 <= 0.0 {
        return Err(Error::InvalidArgument(
            "third singular value is zero".into(),
        ));
    }
    let precoder = dec.v[0]
        .iter()
        .zip(&dec.v[2])
        .map(|(a, c)| a * (2.0 / s1) + c / s3)
        .collect();
    Ok(BeamDesign {
        label: "flattop".into(),
        precoder,
        ris_phases: identity_phases(dec.num_ris()),
    })
}

/// Monopulse pair: sum `b = v_1`, difference `b = sigma_1 v_2 / sigma_2`,
/// both with identity RIS phases so the excitations share the scale `sigma_1`.
pub fn design3_monopulse(dec: &EigenDecomposition) -> Result<(BeamDesign, BeamDesign)> {
    dec.require_modes(2)?;
    let (s1, s2) = (dec.sigmas[0], dec.sigmas[1]);
    if s2 <= 0.0 {
        return Err(Error::InvalidArgument(
            "second singular value is zero".into(),
        ));
    }
    let sum = BeamDesign {
        label: "monopulse-sum".into(),
        precoder: dec.v[0].clone(),
        ris_phases: identity_phases(dec.num_ris()),
    };
    let diff = BeamDesign {
        label: "monopulse-diff".into(),
        precoder: scaled(&dec.v[1], s1 / s2),
        ris_phases: identity_phases(dec.num_ris()),
    };
    Ok((sum, diff))
}

/// Adds the linear phase gradient that moves the beam to `theta_s_deg`.
pub fn steer(design: &BeamDesign, theta_s_deg: f64) -> BeamDesign {
    let s = theta_s_deg.to_radians().sin();
    let ris_phases = design
        .ris_phases
        .iter()
        .enumerate()
        .map(|(k, d)| d * Complex64::from_polar(1.0, -PI * k as f64 * s))
        .collect();
    let label = if theta_s_deg == 0.0 {
        design.label.clone()
    } else {
        format!("{}@{}deg", design.label, theta_s_deg)
    };
    BeamDesign {
        label,
        precoder: design.precoder.clone(),
        ris_phases,
    }
}

/// Arbitrary member of the eigenmode design family, `b = sum beta_i v_i`.
pub fn custom_design(
    dec: &EigenDecomposition,
    betas: &[f64],
    ris_phases: &[Complex64],
) -> Result<BeamDesign> {
    if betas.len() > dec.num_modes() {
        return Err(Error::InvalidArgument(format!(
            "{} mode weights given, only {} modes exist",
            betas.len(),
            dec.num_modes()
        )));
    }
    if betas.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidArgument("mode weights must be finite".into()));
    }
    if ris_phases.len() != dec.num_ris() {
        return Err(Error::InvalidArgument(format!(
            "{} RIS phases given, RIS has {} elements",
            ris_phases.len(),
            dec.num_ris()
        )));
    }
    if let Some(k) = ris_phases
        .iter()
        .position(|z| (z.norm() - 1.0).abs() > 1e-9)
    {
        return Err(Error::InvalidArgument(format!(
            "RIS phase {k} is not unit modulus"
        )));
    }
    let mut precoder = vec![Complex64::new(0.0, 0.0); dec.num_amaf()];
    for (beta, v) in betas.iter().zip(&dec.v) {
        for (b, z) in precoder.iter_mut().zip(v) {
            *b += z * *beta;
        }
    }
    Ok(BeamDesign {
        label: "custom".into(),
        precoder,
        ris_phases: ris_phases.to_vec(),
    })
}

/// Unit-modulus phases from angles in degrees.
pub fn phases_from_deg(deg: &[f64]) -> Vec<Complex64> {
    deg.iter()
        .map(|d| Complex64::from_polar(1.0, d.to_radians()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrays::{ElementPattern, LinearArray};
    use crate::channel::{build_channel, free_space_coupling, Scene};
    use approx::assert_relative_eq;

    fn channel(np: usize, na: usize, d: f64) -> PropagationMatrix {
        let el = ElementPattern::PATCH_6DBI;
        let s = Scene::new(
            LinearArray::standard(np, el).unwrap(),
            LinearArray::standard(na, el).unwrap(),
            d,
        )
        .unwrap();
        build_channel(&s).unwrap()
    }

    fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn scalar_channel() {
        let dec = decompose(&channel(1, 1, 10.0)).unwrap();
        assert_relative_eq!(dec.sigmas[0], 0.063662, epsilon = 1e-6);
        assert!((dec.u[0][0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((dec.v[0][0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn orthonormal_and_reconstructs() {
        for convention in [PhaseConvention::AmafCenter, PhaseConvention::RisPeak] {
            let t = channel(64, 4, 30.0);
            let dec = decompose_with(&t, convention).unwrap();
            assert!(dec.sigmas.windows(2).all(|w| w[0] >= w[1]));
            for i in 0..4 {
                for j in 0..4 {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(&dec.u[i], &dec.u[j]) - expected).norm() < 1e-10);
                    assert!((dot(&dec.v[i], &dec.v[j]) - expected).norm() < 1e-10);
                }
            }
            let mut err = 0.0;
            let mut norm = 0.0;
            for n in 0..64 {
                for m in 0..4 {
                    let rec: Complex64 = (0..4)
                        .map(|i| dec.u[i][n] * dec.v[i][m].conj() * dec.sigmas[i])
                        .sum();
                    err += (rec - t.get(n, m)).norm_sqr();
                    norm += t.get(n, m).norm_sqr();
                }
            }
            assert!((err / norm).sqrt() < 1e-10);
        }
    }

    #[test]
    fn frobenius_identity() {
        let t = channel(128, 4, 80.0);
        let dec = decompose(&t).unwrap();
        let coupling = free_space_coupling(t.scene()).unwrap();
        assert_relative_eq!(dec.energy(), coupling, max_relative = 1e-10);
    }

    #[test]
    fn ris_peak_convention_holds() {
        let dec = decompose_with(&channel(48, 4, 20.0), PhaseConvention::RisPeak).unwrap();
        for u in &dec.u {
            let k = peak_index(u);
            assert!(u[k].im.abs() < 1e-14);
            assert!(u[k].re >= 0.0);
        }
    }

    #[test]
    fn amaf_center_convention_holds() {
        let dec = decompose(&channel(48, 4, 20.0)).unwrap();
        for v in &dec.v {
            let k = center_index(v);
            assert!(v[k].im.abs() < 1e-14);
            assert!(v[k].re >= 0.0);
        }
    }

    #[test]
    fn decomposition_is_deterministic() {
        let t = channel(96, 4, 50.0);
        let a = decompose(&t).unwrap();
        let b = decompose(&t).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pencil_excitation_is_real_positive() {
        let t = channel(128, 4, 80.0);
        let dec = decompose(&t).unwrap();
        let d1 = design1_pencil(&dec).unwrap();
        let w = d1.excitation(&t).unwrap();
        for (k, z) in w.iter().enumerate() {
            assert!(z.im.abs() < 1e-10);
            assert!(z.re >= 0.0);
            assert_relative_eq!(
                z.re,
                dec.sigmas[0] * dec.u[0][k].norm(),
                max_relative = 1e-9
            );
        }
        assert!(d1.ris_phases.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn flattop_excitation_is_mode_sum() {
        let t = channel(128, 4, 80.0);
        let dec = decompose(&t).unwrap();
        let d2 = design2_flattop(&dec).unwrap();
        let w = d2.excitation(&t).unwrap();
        let target: Vec<Complex64> = dec.u[0]
            .iter()
            .zip(&dec.u[2])
            .map(|(a, c)| a * 2.0 + c)
            .collect();
        let err: f64 = w.iter().zip(&target).map(|(a, b)| (a - b).norm_sqr()).sum();
        let norm: f64 = target.iter().map(|z| z.norm_sqr()).sum();
        assert!(err.sqrt() < 1e-10 * norm.sqrt());
    }

    #[test]
    fn insufficient_modes() {
        let dec = decompose(&channel(16, 2, 8.0)).unwrap();
        assert!(matches!(
            design2_flattop(&dec),
            Err(Error::InsufficientModes {
                required: 3,
                available: 2
            })
        ));
        let dec = decompose(&channel(16, 1, 8.0)).unwrap();
        assert!(matches!(
            design3_monopulse(&dec),
            Err(Error::InsufficientModes { required: 2, .. })
        ));
    }

    #[test]
    fn monopulse_scales_match() {
        let t = channel(128, 4, 80.0);
        let dec = decompose(&t).unwrap();
        let (sum, diff) = design3_monopulse(&dec).unwrap();
        let ws = sum.excitation(&t).unwrap();
        let wd = diff.excitation(&t).unwrap();
        let ns: f64 = ws.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nd: f64 = wd.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert_relative_eq!(ns, dec.sigmas[0], max_relative = 1e-9);
        assert_relative_eq!(nd, dec.sigmas[0], max_relative = 1e-9);
    }

    #[test]
    fn two_by_two_second_mode_is_odd() {
        let dec = decompose(&channel(2, 2, 3.0)).unwrap();
        let a0: Complex64 = dec.u[1].iter().sum();
        assert!(a0.norm() < 1e-10);
        assert!(dot(&dec.u[0], &dec.u[1]).norm() < 1e-12);
    }

    #[test]
    fn mode_symmetry() {
        let dec = decompose(&channel(128, 4, 80.0)).unwrap();
        let n = dec.num_ris();
        for k in 0..n {
            assert_relative_eq!(
                dec.u[0][k].norm(),
                dec.u[0][n - 1 - k].norm(),
                max_relative = 1e-9
            );
            assert_relative_eq!(
                dec.u[1][k].norm(),
                dec.u[1][n - 1 - k].norm(),
                max_relative = 1e-9
            );
        }
        let a0: Complex64 = dec.u[1].iter().sum();
        assert!(a0.norm() < 1e-9);
    }

    #[test]
    fn steering_zero_is_identity() {
        let dec = decompose(&channel(32, 4, 16.0)).unwrap();
        let d1 = design1_pencil(&dec).unwrap();
        assert_eq!(steer(&d1, 0.0), d1);
    }

    #[test]
    fn custom_reproduces_named_designs() {
        let t = channel(128, 4, 80.0);
        let dec = decompose(&t).unwrap();
        let d1 = design1_pencil(&dec).unwrap();
        let c1 = custom_design(&dec, &[1.0, 0.0, 0.0, 0.0], &d1.ris_phases).unwrap();
        assert_eq!(c1.precoder, d1.precoder);
        assert_eq!(c1.ris_phases, d1.ris_phases);

        let d2 = design2_flattop(&dec).unwrap();
        let betas = [2.0 / dec.sigmas[0], 0.0, 1.0 / dec.sigmas[2], 0.0];
        let c2 = custom_design(&dec, &betas, &d2.ris_phases).unwrap();
        for (a, b) in c2.precoder.iter().zip(&d2.precoder) {
            assert!((a - b).norm() < 1e-12 * b.norm().max(1.0));
        }

        let c0 = custom_design(&dec, &[0.0; 4], &d2.ris_phases).unwrap();
        assert!(c0.excitation(&t).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn custom_rejects_bad_input() {
        let dec = decompose(&channel(8, 2, 4.0)).unwrap();
        let ones = identity_phases(8);
        assert!(custom_design(&dec, &[1.0, 1.0, 1.0], &ones).is_err());
        assert!(custom_design(&dec, &[1.0], &ones[..7]).is_err());
        let mut bad = ones.clone();
        bad[3] = Complex64::new(0.5, 0.0);
        assert!(custom_design(&dec, &[1.0], &bad).is_err());
        assert!(custom_design(&dec, &[f64::NAN], &ones).is_err());
    }

    #[test]
    fn export_wraps_phases() {
        let design = BeamDesign {
            label: "x".into(),
            precoder: vec![Complex64::new(1.0, -2.0)],
            ris_phases: phases_from_deg(&[180.0, -180.0, 90.0, 0.0, 270.0]),
        };
        let e = design.export();
        assert_eq!(e.b, vec![[1.0, -2.0]]);
        let expected = [-180.0, -180.0, 90.0, 0.0, -90.0];
        for (a, b) in e.ris_phases_deg.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            assert!((-180.0..180.0).contains(a));
        }
    }
}
