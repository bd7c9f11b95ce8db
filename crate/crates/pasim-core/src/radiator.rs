//! Equivalent polarization currents and the discretized far-field sum.
//!
//! The radiation vector N(r_hat) is the phase-weighted volume sum of the
//! per-voxel currents; the far field is its transverse part scaled by
//! -j*omega*mu_0/(4*pi) with the 1/r and exp(-j*k0*r) factors stripped.
//! Voxel sums run in fixed mesh order with compensated accumulation, so a
//! pattern is bit-identical regardless of how directions are parallelized.

use crate::constants::{C0, EPS_0, ETA_0, MU_0};
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::vec3::{CVec3, KahanComplex, Vec3};
use crate::waveguide::{FieldSamples, SignalSpec};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Per-voxel equivalent currents bound to their mesh.
#[derive(Debug, Clone)]
pub struct CurrentSet {
    pub mesh: Mesh,
    pub currents: Vec<CVec3>,
}

impl CurrentSet {
    pub fn new(mesh: Mesh, currents: Vec<CVec3>) -> Result<CurrentSet> {
        if currents.len() != mesh.voxels.len() {
            return Err(Error::InvalidRadiator(format!(
                "current count {} does not match voxel count {}",
                currents.len(),
                mesh.voxels.len()
            )));
        }
        if !currents.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("current set".into()));
        }
        Ok(CurrentSet { mesh, currents })
    }
}

/// J_eq = j*omega*(eps_r - 1)*eps_0 * E_inc, voxel by voxel.
pub fn equivalent_currents(
    mesh: &Mesh,
    fields: &FieldSamples,
    eps_r_pa: f64,
    sig: &SignalSpec,
) -> Result<CurrentSet> {
    if eps_r_pa < 1.0 {
        return Err(Error::InvalidRadiator(format!(
            "relative permittivity must be >= 1, got {eps_r_pa}"
        )));
    }
    if fields.samples.len() != mesh.voxels.len() {
        return Err(Error::InvalidRadiator(format!(
            "field sample count {} does not match voxel count {}",
            fields.samples.len(),
            mesh.voxels.len()
        )));
    }
    let factor = Complex64::new(0.0, sig.omega() * (eps_r_pa - 1.0) * EPS_0);
    let currents = fields.samples.iter().map(|e| e.scale(factor)).collect();
    CurrentSet::new(mesh.clone(), currents)
}

/// Far-field observation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    /// Polar angle in [0, pi].
    pub theta: f64,
    /// Azimuth in [0, 2*pi).
    pub phi: f64,
}

impl Direction {
    pub fn unit_radial(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vec3::new(st * cp, st * sp, ct)
    }

    pub fn unit_theta(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vec3::new(ct * cp, ct * sp, -st)
    }

    pub fn unit_phi(&self) -> Vec3 {
        let (sp, cp) = self.phi.sin_cos();
        Vec3::new(-sp, cp, 0.0)
    }
}

/// Transverse far-field components (E_theta, E_phi) for one direction, with
/// the 1/r spherical spreading and exp(-j*k0*r) factors stripped.
pub fn far_field_at(currents: &CurrentSet, dir: Direction, k0: f64) -> (Complex64, Complex64) {
    let r_hat = dir.unit_radial();
    let mut nx = KahanComplex::new();
    let mut ny = KahanComplex::new();
    let mut nz = KahanComplex::new();
    for (voxel, j) in currents.mesh.voxels.iter().zip(&currents.currents) {
        let phase = Complex64::new(0.0, k0 * voxel.centroid.dot(r_hat)).exp() * voxel.volume;
        nx.add(j.x * phase);
        ny.add(j.y * phase);
        nz.add(j.z * phase);
    }
    let n = CVec3 { x: nx.value(), y: ny.value(), z: nz.value() };
    let omega = k0 * C0;
    let scale = Complex64::new(0.0, -omega * MU_0 / (4.0 * PI));
    // radial component discarded: the physical far field is transverse
    (scale * n.dot_real(dir.unit_theta()), scale * n.dot_real(dir.unit_phi()))
}

/// Full-sphere pattern on the midpoint grid theta_i = (i+1/2)*pi/n_theta,
/// phi_j = j*2*pi/n_phi, row-major with theta outer.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub e_theta: Vec<Complex64>,
    pub e_phi: Vec<Complex64>,
}

impl Pattern {
    pub fn index(&self, i_theta: usize, i_phi: usize) -> usize {
        i_theta * self.phi.len() + i_phi
    }

    /// Radiation intensity U = (|E_theta|^2 + |E_phi|^2) / (2*eta_0), W/sr.
    pub fn intensity(&self, idx: usize) -> f64 {
        (self.e_theta[idx].norm_sqr() + self.e_phi[idx].norm_sqr()) / (2.0 * ETA_0)
    }
}

pub fn full_pattern(
    currents: &CurrentSet,
    sig: &SignalSpec,
    n_theta: usize,
    n_phi: usize,
) -> Result<Pattern> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::InvalidRadiator(format!(
            "angular grid must be at least 2 x 2, got {n_theta} x {n_phi}"
        )));
    }
    let theta: Vec<f64> = (0..n_theta).map(|i| (i as f64 + 0.5) * PI / n_theta as f64).collect();
    let phi: Vec<f64> = (0..n_phi).map(|j| j as f64 * 2.0 * PI / n_phi as f64).collect();
    let k0 = sig.wavenumber();

    let fields: Vec<(Complex64, Complex64)> = (0..n_theta * n_phi)
        .into_par_iter()
        .map(|idx| {
            let dir = Direction { theta: theta[idx / n_phi], phi: phi[idx % n_phi] };
            far_field_at(currents, dir, k0)
        })
        .collect();

    let (e_theta, e_phi) = fields.into_iter().unzip();
    Ok(Pattern { theta, phi, e_theta, e_phi })
}

/// Midpoint-rule sphere integral of the radiation intensity, W.
pub fn total_radiated_power(p: &Pattern) -> f64 {
    let d_theta = PI / p.theta.len() as f64;
    let d_phi = 2.0 * PI / p.phi.len() as f64;
    let mut sum = 0.0;
    for (i, &th) in p.theta.iter().enumerate() {
        let w = th.sin() * d_theta * d_phi;
        for j in 0..p.phi.len() {
            sum += p.intensity(p.index(i, j)) * w;
        }
    }
    sum
}

/// Directivity map over the same grid as its source pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectivityMap {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Linear directivity 4*pi*U/P_rad.
    pub linear: Vec<f64>,
    /// 10*log10 of the above.
    pub dbi: Vec<f64>,
}

impl DirectivityMap {
    pub fn index(&self, i_theta: usize, i_phi: usize) -> usize {
        i_theta * self.phi.len() + i_phi
    }

    /// Peak linear directivity and its direction.
    pub fn peak(&self) -> (f64, Direction) {
        let mut best = 0usize;
        for (i, &d) in self.linear.iter().enumerate() {
            if d > self.linear[best] {
                best = i;
            }
        }
        (
            self.linear[best],
            Direction {
                theta: self.theta[best / self.phi.len()],
                phi: self.phi[best % self.phi.len()],
            },
        )
    }

    /// CSV export: `theta_deg,phi_deg,directivity_dbi`, grid order, 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_deg,phi_deg,directivity_dbi\n");
        for (i, &th) in self.theta.iter().enumerate() {
            for (j, &ph) in self.phi.iter().enumerate() {
                out.push_str(&format!(
                    "{:.6},{:.6},{:.6}\n",
                    th.to_degrees(),
                    ph.to_degrees(),
                    self.dbi[self.index(i, j)]
                ));
            }
        }
        out
    }
}

/// D(theta, phi) = 4*pi*U/P_rad; errors when nothing radiates.
pub fn directivity_pattern(p: &Pattern) -> Result<DirectivityMap> {
    let p_rad = total_radiated_power(p);
    if !(p_rad > 0.0) {
        return Err(Error::ZeroRadiatedPower);
    }
    if !p_rad.is_finite() {
        return Err(Error::NonFinite("radiated power".into()));
    }
    let linear: Vec<f64> = (0..p.theta.len() * p.phi.len())
        .map(|idx| 4.0 * PI * p.intensity(idx) / p_rad)
        .collect();
    let dbi = linear.iter().map(|&d| 10.0 * d.max(f64::MIN_POSITIVE).log10()).collect();
    Ok(DirectivityMap { theta: p.theta.clone(), phi: p.phi.clone(), linear, dbi })
}

/// Nearest-row azimuth cut of a directivity map, as (phi_deg, dbi) pairs.
pub fn azimuth_cut(map: &DirectivityMap, theta_cut: f64) -> Result<crate::metrics::Cut1D> {
    let first = *map.theta.first().ok_or_else(|| {
        Error::InvalidRadiator("cannot cut an empty pattern".into())
    })?;
    let last = *map.theta.last().unwrap();
    let half = (map.theta[1] - map.theta[0]) / 2.0;
    if theta_cut < first - half || theta_cut > last + half {
        return Err(Error::InvalidRadiator(format!(
            "theta_cut {theta_cut} outside the pattern grid [{first}, {last}]"
        )));
    }
    let row = map
        .theta
        .iter()
        .enumerate()
        .min_by(|a, b| {
            ((a.1 - theta_cut).abs())
                .partial_cmp(&(b.1 - theta_cut).abs())
                .unwrap()
        })
        .unwrap()
        .0;
    let phi_deg: Vec<f64> = map.phi.iter().map(|p| p.to_degrees()).collect();
    let values: Vec<f64> = (0..map.phi.len()).map(|j| map.dbi[map.index(row, j)]).collect();
    crate::metrics::Cut1D::new(phi_deg, values, crate::metrics::CutLabel::Simulated)
}
