//! Guided-mode model of the dielectric rod and its evanescent tail.
//!
//! The mode is reduced to its observable outside the rod: unit magnitude at
//! the rod surface, exponential decay with clearance from the surface, and
//! guided phase advance along the axis. The incident field inside a PA mesh
//! is the unperturbed evanescent field sampled at each voxel centroid
//! (first-order Born excitation).

use crate::constants::C0;
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::vec3::{CVec3, Vec3};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Propagation constants of the guided mode at one wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeConstants {
    /// Guided propagation constant, rad/m.
    pub beta_g: f64,
    /// Transverse attenuation constant of the evanescent tail, 1/m.
    pub alpha: f64,
    /// Guided wavelength, m.
    pub lambda_g: f64,
}

/// beta_g = 2*pi*n_g/lambda, alpha = (2*pi/lambda)*sqrt(n_g^2 - 1),
/// lambda_g = lambda/n_g. Rejects n_g < 1 (unguided).
pub fn mode_constants(n_g: f64, lambda: f64) -> Result<ModeConstants> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidWaveguide(format!(
            "wavelength must be positive, got {lambda}"
        )));
    }
    if !(n_g >= 1.0) {
        return Err(Error::InvalidWaveguide(format!(
            "effective index n_g must be >= 1 for a guided mode, got {n_g}"
        )));
    }
    let k0 = TAU / lambda;
    Ok(ModeConstants {
        beta_g: k0 * n_g,
        alpha: k0 * (n_g * n_g - 1.0).sqrt(),
        lambda_g: lambda / n_g,
    })
}

/// Carrier and modal amplitude of the fed signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    /// Carrier frequency, Hz.
    pub f_c: f64,
    /// Complex modal amplitude at the feed (field units).
    pub amplitude: Complex64,
}

impl SignalSpec {
    pub fn new(f_c: f64, amplitude: Complex64) -> Result<SignalSpec> {
        if !(f_c > 0.0) || !f_c.is_finite() {
            return Err(Error::InvalidWaveguide(format!(
                "carrier frequency must be positive, got {f_c}"
            )));
        }
        Ok(SignalSpec { f_c, amplitude })
    }

    pub fn wavelength(&self) -> f64 {
        C0 / self.f_c
    }

    pub fn omega(&self) -> f64 {
        TAU * self.f_c
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength()
    }
}

/// Rod waveguide: axis, surface radius, effective index, feed origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideModel {
    pub axis_point: Vec3,
    /// Unit vector; signal propagates this way.
    pub axis_direction: Vec3,
    pub surface_radius: f64,
    pub n_g: f64,
    /// Axial coordinate (relative to `axis_point`) of the feed; the guided
    /// arclength s is zero there.
    pub feed_offset: f64,
}

impl WaveguideModel {
    pub fn new(
        axis_point: Vec3,
        axis_direction: Vec3,
        surface_radius: f64,
        n_g: f64,
        feed_offset: f64,
    ) -> Result<WaveguideModel> {
        let dir = axis_direction
            .normalized()
            .ok_or_else(|| Error::InvalidWaveguide("axis_direction must be non-zero".into()))?;
        if !(surface_radius > 0.0) {
            return Err(Error::InvalidWaveguide(format!(
                "surface_radius must be positive, got {surface_radius}"
            )));
        }
        if !(n_g >= 1.0) {
            return Err(Error::InvalidWaveguide(format!(
                "effective index n_g must be >= 1, got {n_g}"
            )));
        }
        Ok(WaveguideModel {
            axis_point,
            axis_direction: dir,
            surface_radius,
            n_g,
            feed_offset,
        })
    }

    /// Arclength along the axis measured from the feed.
    pub fn arclength(&self, p: Vec3) -> f64 {
        (p - self.axis_point).dot(self.axis_direction) - self.feed_offset
    }

    /// Distance from the rod surface, clamped at zero inside the rod.
    pub fn clearance(&self, p: Vec3) -> f64 {
        let rel = p - self.axis_point;
        let axial = rel.dot(self.axis_direction);
        let radial = (rel - self.axis_direction * axial).norm();
        (radial - self.surface_radius).max(0.0)
    }
}

/// Complex evanescent field amplitude at a point outside the rod:
/// A0 * exp(-alpha*d) * exp(-j*beta_g*s).
pub fn evanescent_amplitude(
    point: Vec3,
    wg: &WaveguideModel,
    sig: &SignalSpec,
) -> Result<Complex64> {
    let mc = mode_constants(wg.n_g, sig.wavelength())?;
    let d = wg.clearance(point);
    let s = wg.arclength(point);
    Ok(sig.amplitude * (-mc.alpha * d).exp() * Complex64::new(0.0, -mc.beta_g * s).exp())
}

/// Per-voxel incident field samples, in mesh order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub samples: Vec<CVec3>,
}

/// Samples the evanescent field over a mesh with a fixed transverse
/// polarization, optionally depleting the modal amplitude along the contact
/// region with rate `kappa` (1/m); `kappa = 0` keeps A(z) constant.
pub fn incident_field(
    mesh: &Mesh,
    wg: &WaveguideModel,
    sig: &SignalSpec,
    polarization: Vec3,
    kappa: f64,
) -> Result<FieldSamples> {
    if mesh.voxels.is_empty() {
        return Err(Error::InvalidWaveguide("mesh has no voxels".into()));
    }
    let pol = polarization
        .normalized()
        .ok_or_else(|| Error::InvalidWaveguide("polarization must be non-zero".into()))?;
    if pol.dot(wg.axis_direction).abs() > 1e-9 {
        return Err(Error::InvalidWaveguide(
            "polarization must be perpendicular to the waveguide axis".into(),
        ));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidWaveguide(format!(
            "depletion rate must be non-negative, got {kappa}"
        )));
    }
    let s_start = mesh
        .voxels
        .iter()
        .map(|v| wg.arclength(v.centroid))
        .fold(f64::INFINITY, f64::min);
    let pol_c = CVec3::from_real(pol);
    let mut samples = Vec::with_capacity(mesh.voxels.len());
    for v in &mesh.voxels {
        let amp = evanescent_amplitude(v.centroid, wg, sig)?;
        let s = wg.arclength(v.centroid);
        let depletion = (-kappa * (s - s_start).max(0.0)).exp();
        samples.push(pol_c.scale(amp * depletion));
    }
    Ok(FieldSamples { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use approx::assert_relative_eq;

    fn test_wg() -> WaveguideModel {
        WaveguideModel::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 0.0015, 1.4, 0.0).unwrap()
    }

    fn test_sig() -> SignalSpec {
        SignalSpec::new(60e9, Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn free_space_limit_has_no_decay() {
        let mc = mode_constants(1.0, 0.005).unwrap();
        assert_eq!(mc.alpha, 0.0);
        assert_relative_eq!(mc.beta_g, TAU / 0.005, max_relative = 1e-15);
    }

    #[test]
    fn mode_constants_match_hand_calculation() {
        // n_g = sqrt(2.1) upper bound, lambda = 5 mm
        let n_g = 2.1f64.sqrt();
        let mc = mode_constants(n_g, 0.005).unwrap();
        // alpha = (2*pi/5mm) * sqrt(2.1 - 1) = 1.31788... mm^-1
        assert_relative_eq!(mc.alpha, 1317.88, max_relative = 1e-4);
        assert_relative_eq!(mc.lambda_g, 0.005 / n_g, max_relative = 1e-15);
        // lambda_g = 3.4503 mm
        assert_relative_eq!(mc.lambda_g, 3.4503e-3, max_relative = 1e-4);

        let mc = mode_constants(1.4, 0.005).unwrap();
        // beta_g = 2*pi*1.4/5mm = 1.7593 rad/mm
        assert_relative_eq!(mc.beta_g, 1759.3, max_relative = 1e-4);
    }

    #[test]
    fn rejects_unguided_index() {
        assert!(mode_constants(0.9, 0.005).is_err());
    }

    #[test]
    fn surface_at_feed_returns_a0() {
        let wg = test_wg();
        let sig = test_sig();
        // on the surface (d = 0) at s = 0
        let v = evanescent_amplitude(Vec3::new(0.0, 0.0, 0.0015), &wg, &sig).unwrap();
        assert_relative_eq!(v.re, 1.0, max_relative = 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn one_decay_length_gives_e_inverse() {
        let wg = test_wg();
        let sig = test_sig();
        let mc = mode_constants(wg.n_g, sig.wavelength()).unwrap();
        let p = Vec3::new(0.0, 0.0, wg.surface_radius + 1.0 / mc.alpha);
        let v = evanescent_amplitude(p, &wg, &sig).unwrap();
        assert_relative_eq!(v.norm(), (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn one_guided_wavelength_advances_phase_by_two_pi() {
        let wg = test_wg();
        let sig = test_sig();
        let mc = mode_constants(wg.n_g, sig.wavelength()).unwrap();
        let at_feed = evanescent_amplitude(Vec3::new(0.0, 0.0, 0.0015), &wg, &sig).unwrap();
        let one_lambda_g =
            evanescent_amplitude(Vec3::new(mc.lambda_g, 0.0, 0.0015), &wg, &sig).unwrap();
        assert!((one_lambda_g - at_feed).norm() / at_feed.norm() < 1e-12);
    }

    #[test]
    fn magnitude_depends_only_on_clearance_phase_only_on_arclength() {
        let wg = test_wg();
        let sig = test_sig();
        let a = evanescent_amplitude(Vec3::new(0.003, 0.0, 0.004), &wg, &sig).unwrap();
        let b = evanescent_amplitude(Vec3::new(0.003, 0.004, 0.0), &wg, &sig).unwrap();
        // same s, same d (radial distance 4 mm both)
        assert_relative_eq!(a.norm(), b.norm(), max_relative = 1e-12);
        assert!((a.arg() - b.arg()).abs() < 1e-12);
        // larger d, same s: magnitude strictly smaller, phase unchanged
        let c = evanescent_amplitude(Vec3::new(0.003, 0.0, 0.006), &wg, &sig).unwrap();
        assert!(c.norm() < a.norm());
        assert!((c.arg() - a.arg()).abs() < 1e-12);
    }

    #[test]
    fn incident_field_ratio_between_clearances() {
        let wg = test_wg();
        let sig = test_sig();
        let mc = mode_constants(wg.n_g, sig.wavelength()).unwrap();
        let d1 = 0.001;
        let d2 = 0.003;
        let p1 = Vec3::new(0.0, 0.0, wg.surface_radius + d1);
        let p2 = Vec3::new(0.0, 0.0, wg.surface_radius + d2);
        let a = evanescent_amplitude(p1, &wg, &sig).unwrap();
        let b = evanescent_amplitude(p2, &wg, &sig).unwrap();
        assert_relative_eq!(a.norm() / b.norm(), (mc.alpha * (d2 - d1)).exp(), max_relative = 1e-12);
    }

    #[test]
    fn half_guided_wavelength_flips_sign() {
        let wg = test_wg();
        let sig = test_sig();
        let mc = mode_constants(wg.n_g, sig.wavelength()).unwrap();
        let p1 = Vec3::new(0.001, 0.0, 0.004);
        let p2 = p1 + Vec3::new(mc.lambda_g / 2.0, 0.0, 0.0);
        let a = evanescent_amplitude(p1, &wg, &sig).unwrap();
        let b = evanescent_amplitude(p2, &wg, &sig).unwrap();
        assert!((a + b).norm() / a.norm() < 1e-9);
    }

    #[test]
    fn incident_field_rejects_axial_polarization() {
        let wg = test_wg();
        let sig = test_sig();
        let mesh = Shape::square(0.012, 0.003)
            .unwrap()
            .transformed(0.0, Vec3::new(0.0, 0.0, 0.0015))
            .mesh(0.001)
            .unwrap();
        assert!(incident_field(&mesh, &wg, &sig, Vec3::new(1.0, 0.0, 0.0), 0.0).is_err());
        assert!(incident_field(&mesh, &wg, &sig, Vec3::new(0.0, 1.0, 0.0), 0.0).is_ok());
    }

    #[test]
    fn incident_field_is_linear_in_amplitude() {
        let wg = test_wg();
        let mesh = Shape::square(0.012, 0.003)
            .unwrap()
            .transformed(0.0, Vec3::new(0.0, 0.0, 0.0015))
            .mesh(0.001)
            .unwrap();
        let base = SignalSpec::new(60e9, Complex64::new(1.0, 0.0)).unwrap();
        let c = Complex64::new(0.3, -1.7);
        let scaled = SignalSpec::new(60e9, c).unwrap();
        let fa = incident_field(&mesh, &wg, &base, Vec3::new(0.0, 1.0, 0.0), 0.0).unwrap();
        let fb = incident_field(&mesh, &wg, &scaled, Vec3::new(0.0, 1.0, 0.0), 0.0).unwrap();
        for (a, b) in fa.samples.iter().zip(&fb.samples) {
            let d = a.scale(c);
            for (u, v) in [(d.x, b.x), (d.y, b.y), (d.z, b.z)] {
                assert!((u - v).norm() <= 1e-12 * (1.0 + v.norm()), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn depletion_attenuates_downstream_voxels() {
        let wg = test_wg();
        let sig = test_sig();
        let mesh = Shape::square(0.012, 0.003)
            .unwrap()
            .transformed(0.0, Vec3::new(0.0, 0.0, 0.0015))
            .mesh(0.001)
            .unwrap();
        let no_dep = incident_field(&mesh, &wg, &sig, Vec3::new(0.0, 1.0, 0.0), 0.0).unwrap();
        let dep = incident_field(&mesh, &wg, &sig, Vec3::new(0.0, 1.0, 0.0), 50.0).unwrap();
        // the furthest-downstream voxels see extra attenuation
        let last = mesh.voxels.len() - 1;
        assert!(dep.samples[last].norm() < no_dep.samples[last].norm());
        // the first-contact voxel is untouched
        let s0: Vec<f64> = mesh.voxels.iter().map(|v| wg.arclength(v.centroid)).collect();
        let i_min = s0
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_relative_eq!(
            dep.samples[i_min].norm(),
            no_dep.samples[i_min].norm(),
            max_relative = 1e-12
        );
    }
}
