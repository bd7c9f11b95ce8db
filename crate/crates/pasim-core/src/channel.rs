//! Location-tuning beamforming: channel coefficients, equal-power transmit
//! weights with guided phase shifts, received power, and PA-placement search.
//!
//! Convention: the received amplitude is sum_m conj(h_m) * w_m (matched to
//! the h^H s form), so a PA is phase-compensated when its free-space phase
//! (2*pi/lambda)*r_m and its guided phase theta_m agree modulo 2*pi.

use crate::constants::C0;
use crate::error::{Error, Result};
use crate::vec3::Vec3;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

/// Activated PA locations along the waveguide plus the feed point.
#[derive(Debug, Clone, PartialEq)]
pub struct PaLayout {
    pub locations: Vec<Vec3>,
    pub feed: Vec3,
    /// Guided wavelength lambda/n_g, m.
    pub lambda_g: f64,
}

impl PaLayout {
    pub fn new(locations: Vec<Vec3>, feed: Vec3, lambda_g: f64) -> Result<PaLayout> {
        if locations.is_empty() {
            return Err(Error::InvalidChannel("need at least one PA location".into()));
        }
        if !(lambda_g > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "guided wavelength must be positive, got {lambda_g}"
            )));
        }
        Ok(PaLayout { locations, feed, lambda_g })
    }

    /// Guided phase shift theta_m = 2*pi*|feed - l_m| / lambda_g.
    pub fn guided_phases(&self) -> Vec<f64> {
        self.locations
            .iter()
            .map(|l| TAU * (*l - self.feed).norm() / self.lambda_g)
            .collect()
    }
}

/// Free-space link to one user.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub user: Vec3,
    pub f_c: f64,
    /// Total transmit power P, W.
    pub power: f64,
    /// Optional per-PA complex directional amplitude gain toward the user;
    /// `None` means isotropic (all ones).
    pub gains: Option<Vec<Complex64>>,
}

impl LinkSpec {
    pub fn new(user: Vec3, f_c: f64, power: f64) -> Result<LinkSpec> {
        if !(f_c > 0.0) {
            return Err(Error::InvalidChannel(format!("carrier must be positive, got {f_c}")));
        }
        if !(power > 0.0) {
            return Err(Error::InvalidChannel(format!("power must be positive, got {power}")));
        }
        Ok(LinkSpec { user, f_c, power, gains: None })
    }

    pub fn wavelength(&self) -> f64 {
        C0 / self.f_c
    }

    /// Path-loss constant eta = c^2 / (16*pi^2*f_c^2).
    pub fn eta(&self) -> f64 {
        let v = C0 / (4.0 * PI * self.f_c);
        v * v
    }
}

/// h_m = sqrt(eta) * exp(-j*(2*pi/lambda)*r_m) / r_m * g_m.
pub fn channel_vector(layout: &PaLayout, link: &LinkSpec) -> Result<Vec<Complex64>> {
    let m = layout.locations.len();
    if let Some(g) = &link.gains {
        if g.len() != m {
            return Err(Error::InvalidChannel(format!(
                "gain count {} does not match PA count {m}",
                g.len()
            )));
        }
    }
    let sqrt_eta = link.eta().sqrt();
    let k = TAU / link.wavelength();
    let mut h = Vec::with_capacity(m);
    for (i, l) in layout.locations.iter().enumerate() {
        let r = (link.user - *l).norm();
        if r == 0.0 {
            return Err(Error::InvalidChannel(
                "user coincides with a PA location".into(),
            ));
        }
        let g = link.gains.as_ref().map_or(Complex64::new(1.0, 0.0), |g| g[i]);
        h.push(Complex64::from_polar(sqrt_eta / r, -k * r) * g);
    }
    Ok(h)
}

/// Equal-power transmit weights w_m = sqrt(P/M) * exp(-j*theta_m).
pub fn transmit_vector(layout: &PaLayout, power: f64) -> Result<Vec<Complex64>> {
    if !(power > 0.0) {
        return Err(Error::InvalidChannel(format!("power must be positive, got {power}")));
    }
    let m = layout.locations.len() as f64;
    let amp = (power / m).sqrt();
    Ok(layout
        .guided_phases()
        .iter()
        .map(|&th| Complex64::from_polar(amp, -th))
        .collect())
}

/// Deterministic received signal power |sum_m conj(h_m) w_m|^2, W.
pub fn received_power(layout: &PaLayout, link: &LinkSpec) -> Result<f64> {
    let h = channel_vector(layout, link)?;
    let w = transmit_vector(layout, link.power)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (hm, wm) in h.iter().zip(&w) {
        sum += hm.conj() * wm;
    }
    Ok(sum.norm_sqr())
}

/// Straight axis segment holding candidate PA positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSegment {
    pub start: Vec3,
    pub end: Vec3,
}

impl AxisSegment {
    /// Candidate grid: start, start + step, ... up to the segment end.
    pub fn grid(&self, step: f64) -> Result<Vec<Vec3>> {
        if !(step > 0.0) {
            return Err(Error::InvalidChannel(format!("grid step must be positive, got {step}")));
        }
        let length = (self.end - self.start).norm();
        if length == 0.0 {
            return Err(Error::InvalidChannel("axis segment has zero length".into()));
        }
        let dir = (self.end - self.start) * (1.0 / length);
        let n = (length / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.start + dir * (i as f64 * step)).collect())
    }
}

/// Optimized layout plus the search diagnostics used in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult {
    pub layout: PaLayout,
    pub indices: Vec<usize>,
    pub received_power_w: f64,
}

fn layout_from_indices(
    grid: &[Vec3],
    indices: &[usize],
    feed: Vec3,
    lambda_g: f64,
) -> PaLayout {
    PaLayout {
        locations: indices.iter().map(|&i| grid[i]).collect(),
        feed,
        lambda_g,
    }
}

fn eval(grid: &[Vec3], indices: &[usize], feed: Vec3, lambda_g: f64, link: &LinkSpec) -> f64 {
    received_power(&layout_from_indices(grid, indices, feed, lambda_g), link)
        .unwrap_or(0.0)
}

/// `(power, indices)` ordering: higher power wins; ties go to the
/// lexicographically smallest sorted index tuple.
fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Places M PAs on the candidate grid to maximize received power.
///
/// Exhaustive search for M <= 2; greedy coordinate descent seeded from every
/// grid point for M > 2. Deterministic: candidate tuples are visited in a
/// fixed order and ties break toward the lexicographically smallest tuple.
pub fn optimize_placements(
    segment: AxisSegment,
    step: f64,
    m: usize,
    link: &LinkSpec,
    feed: Vec3,
    lambda_g: f64,
) -> Result<PlacementResult> {
    if m == 0 {
        return Err(Error::InvalidChannel("need at least one PA".into()));
    }
    if link.gains.is_some() {
        return Err(Error::InvalidChannel(
            "placement search assumes isotropic per-PA gains".into(),
        ));
    }
    let grid = segment.grid(step)?;
    let n = grid.len();
    if n < m {
        return Err(Error::InvalidChannel(format!(
            "segment supports only {n} grid points but {m} PAs were requested"
        )));
    }

    let best = if m == 1 {
        (0..n)
            .map(|i| (eval(&grid, &[i], feed, lambda_g, link), vec![i]))
            .reduce(|a, b| if better(&b, &a) { b } else { a })
            .unwrap()
    } else if m == 2 {
        let mut best = (f64::NEG_INFINITY, vec![]);
        for i in 0..n {
            for j in (i + 1)..n {
                let cand = (eval(&grid, &[i, j], feed, lambda_g, link), vec![i, j]);
                if better(&cand, &best) {
                    best = cand;
                }
            }
        }
        best
    } else {
        greedy_search(&grid, m, link, feed, lambda_g)
    };

    Ok(PlacementResult {
        layout: layout_from_indices(&grid, &best.1, feed, lambda_g),
        received_power_w: best.0,
        indices: best.1,
    })
}

/// Greedy search used for M > 2, exposed for oracle tests: seeded greedy
/// construction followed by coordinate-descent sweeps, restarted from every
/// grid point.
pub fn greedy_search(
    grid: &[Vec3],
    m: usize,
    link: &LinkSpec,
    feed: Vec3,
    lambda_g: f64,
) -> (f64, Vec<usize>) {
    let n = grid.len();
    (0..n)
        .into_par_iter()
        .map(|seed| {
            let mut indices = vec![seed];
            // greedy construction
            while indices.len() < m {
                let mut best: Option<(f64, usize)> = None;
                for cand in 0..n {
                    if indices.contains(&cand) {
                        continue;
                    }
                    let mut trial = indices.clone();
                    trial.push(cand);
                    trial.sort_unstable();
                    let p = eval(grid, &trial, feed, lambda_g, link);
                    if best.map_or(true, |(bp, bi)| p > bp || (p == bp && cand < bi)) {
                        best = Some((p, cand));
                    }
                }
                indices.push(best.unwrap().1);
            }
            indices.sort_unstable();
            // coordinate descent
            let mut power = eval(grid, &indices, feed, lambda_g, link);
            loop {
                let mut improved = false;
                for slot in 0..m {
                    for cand in 0..n {
                        if indices.contains(&cand) {
                            continue;
                        }
                        let mut trial = indices.clone();
                        trial[slot] = cand;
                        trial.sort_unstable();
                        let p = eval(grid, &trial, feed, lambda_g, link);
                        let cur = (power, indices.clone());
                        if better(&(p, trial.clone()), &cur) {
                            indices = trial;
                            power = p;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            (power, indices)
        })
        .reduce(
            || (f64::NEG_INFINITY, vec![usize::MAX; m]),
            |a, b| if better(&b, &a) { b } else { a },
        )
}

/// Structured-text placement report: locations, guided phases, and received
/// power relative to the transmit power.
pub fn placement_report(result: &PlacementResult, link: &LinkSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("m: {}\n", result.layout.locations.len()));
    out.push_str(&format!("lambda_g_m: {:.9}\n", result.layout.lambda_g));
    for (i, (l, th)) in result
        .layout
        .locations
        .iter()
        .zip(result.layout.guided_phases())
        .enumerate()
    {
        out.push_str(&format!(
            "location_{}_m: {:.6} {:.6} {:.6}\n",
            i + 1,
            l.x,
            l.y,
            l.z
        ));
        out.push_str(&format!("phase_{}_rad: {:.9}\n", i + 1, th));
    }
    out.push_str(&format!("p_rx_w: {:.6e}\n", result.received_power_w));
    out.push_str(&format!(
        "p_rx_rel_dbw: {:.6}\n",
        10.0 * (result.received_power_w / link.power).log10()
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn link_60ghz(user: Vec3) -> LinkSpec {
        LinkSpec::new(user, 60e9, 1.0).unwrap()
    }

    #[test]
    fn channel_magnitude_at_measurement_range() {
        // |h| = (c / (4*pi*f_c)) / r at r = 1.6 m, 60 GHz
        let layout = PaLayout::new(vec![Vec3::ZERO], Vec3::ZERO, 0.0035).unwrap();
        let link = link_60ghz(Vec3::new(0.0, 1.6, 0.0));
        let h = channel_vector(&layout, &link).unwrap();
        // reference values use the rounded lambda = 5 mm
        assert_relative_eq!(h[0].norm(), 3.9789e-4 / 1.6, max_relative = 2e-3);
        assert_relative_eq!(h[0].norm(), 2.487e-4, max_relative = 2e-3);
    }

    #[test]
    fn one_wavelength_range_has_unit_phase_factor() {
        let layout = PaLayout::new(vec![Vec3::ZERO], Vec3::ZERO, 0.0035).unwrap();
        let link = link_60ghz(Vec3::ZERO);
        // place the user exactly one wavelength away
        let lambda = link.wavelength();
        let link = link_60ghz(Vec3::new(lambda, 0.0, 0.0));
        let h = channel_vector(&layout, &link).unwrap();
        assert!(h[0].im.abs() < 1e-12 * h[0].norm());
        assert!(h[0].re > 0.0);
    }

    #[test]
    fn doubling_range_halves_magnitude() {
        let layout = PaLayout::new(vec![Vec3::ZERO], Vec3::ZERO, 0.0035).unwrap();
        let h1 = channel_vector(&layout, &link_60ghz(Vec3::new(0.0, 1.0, 0.0))).unwrap();
        let h2 = channel_vector(&layout, &link_60ghz(Vec3::new(0.0, 2.0, 0.0))).unwrap();
        assert_relative_eq!(h1[0].norm(), 2.0 * h2[0].norm(), max_relative = 1e-12);
    }

    #[test]
    fn user_on_pa_is_rejected() {
        let layout = PaLayout::new(vec![Vec3::ZERO], Vec3::ZERO, 0.0035).unwrap();
        assert!(channel_vector(&layout, &link_60ghz(Vec3::ZERO)).is_err());
    }

    #[test]
    fn transmit_weights_split_power_equally() {
        let lambda_g = 0.0035;
        let locs = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.1, 0.0, 0.0),
            Vec3::new(0.2, 0.0, 0.0),
            Vec3::new(0.3, 0.0, 0.0),
        ];
        let layout = PaLayout::new(locs, Vec3::ZERO, lambda_g).unwrap();
        let w = transmit_vector(&layout, 1.0).unwrap();
        for wm in &w {
            assert_relative_eq!(wm.norm(), 0.5, max_relative = 1e-12);
        }
        // PA at the feed has zero guided phase
        assert_relative_eq!(w[0].re, 0.5, max_relative = 1e-12);
        assert!(w[0].im.abs() < 1e-12);
    }

    #[test]
    fn full_guided_wavelength_restores_weight() {
        let lambda_g = 0.0035;
        let layout = PaLayout::new(
            vec![Vec3::ZERO, Vec3::new(lambda_g, 0.0, 0.0)],
            Vec3::ZERO,
            lambda_g,
        )
        .unwrap();
        let w = transmit_vector(&layout, 1.0).unwrap();
        assert!((w[0] - w[1]).norm() < 1e-12 * w[0].norm());
    }

    #[test]
    fn single_pa_power_is_phase_free() {
        let layout = PaLayout::new(vec![Vec3::new(0.3, 0.0, 0.0)], Vec3::ZERO, 0.0035).unwrap();
        let link = link_60ghz(Vec3::new(0.3, 1.2, 0.0));
        let p = received_power(&layout, &link).unwrap();
        let r: f64 = 1.2;
        assert_relative_eq!(p, link.eta() / (r * r), max_relative = 1e-12);
    }

    #[test]
    fn destructive_pair_cancels() {
        // two PAs symmetric about the user's axis projection (equal r), with
        // feed distances differing by lambda_g/2: net phase difference pi
        let d = 0.07;
        let la = Vec3::new(-d, 0.0, 0.0);
        let lb = Vec3::new(d, 0.0, 0.0);
        // lambda_g = 4*d and feed at la: guided phases 0 and pi
        let layout = PaLayout::new(vec![la, lb], la, 4.0 * d).unwrap();
        let link = link_60ghz(Vec3::new(0.0, 1.6, 0.0));
        // free-space phases equal (equal r); guided phases 0 and pi
        let p = received_power(&layout, &link).unwrap();
        assert!(p < 1e-20, "p = {p}");
    }

    #[test]
    fn coherent_upper_bound_holds() {
        let lambda_g = 0.0035;
        let mut state = 42u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        for _ in 0..50 {
            let m = 1 + (rng() * 5.0) as usize;
            let locs: Vec<Vec3> =
                (0..m).map(|_| Vec3::new(rng() * 0.5, 0.0, 0.0)).collect();
            let layout = PaLayout::new(locs, Vec3::ZERO, lambda_g).unwrap();
            let link = link_60ghz(Vec3::new(rng(), 1.0 + rng(), rng()));
            let h = channel_vector(&layout, &link).unwrap();
            let w = transmit_vector(&layout, link.power).unwrap();
            let p = received_power(&layout, &link).unwrap();
            let bound: f64 = h.iter().zip(&w).map(|(hm, wm)| hm.norm() * wm.norm()).sum();
            assert!(p <= bound * bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn upper_bound_tight_iff_phases_align() {
        // colocated PAs: all phases equal, bound achieved
        let lambda_g = 0.0035;
        let l = Vec3::new(0.2, 0.0, 0.0);
        let layout = PaLayout::new(vec![l, l, l], Vec3::ZERO, lambda_g).unwrap();
        let link = link_60ghz(Vec3::new(0.2, 1.0, 0.0));
        let h = channel_vector(&layout, &link).unwrap();
        let w = transmit_vector(&layout, link.power).unwrap();
        let p = received_power(&layout, &link).unwrap();
        let bound: f64 = h.iter().zip(&w).map(|(hm, wm)| hm.norm() * wm.norm()).sum();
        assert_relative_eq!(p, bound * bound, max_relative = 1e-12);
    }

    #[test]
    fn global_weight_phase_rotation_is_invisible() {
        let layout = PaLayout::new(
            vec![Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.4, 0.0, 0.0)],
            Vec3::ZERO,
            0.0035,
        )
        .unwrap();
        let link = link_60ghz(Vec3::new(0.3, 1.6, 0.0));
        let h = channel_vector(&layout, &link).unwrap();
        let w = transmit_vector(&layout, link.power).unwrap();
        let rot = Complex64::from_polar(1.0, 1.234);
        let p1: f64 = h
            .iter()
            .zip(&w)
            .map(|(hm, wm)| hm.conj() * wm)
            .sum::<Complex64>()
            .norm_sqr();
        let p2: f64 = h
            .iter()
            .zip(&w)
            .map(|(hm, wm)| hm.conj() * wm * rot)
            .sum::<Complex64>()
            .norm_sqr();
        assert_relative_eq!(p1, p2, max_relative = 1e-12);
    }

    #[test]
    fn rotation_about_axis_preserves_power() {
        // with isotropic gains the power depends only on distances
        let layout = PaLayout::new(
            vec![Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.35, 0.0, 0.0)],
            Vec3::ZERO,
            0.0035,
        )
        .unwrap();
        let user = Vec3::new(0.2, 1.3, 0.4);
        let p1 = received_power(&layout, &link_60ghz(user)).unwrap();
        // rotate the user about the x-axis (through each PA's axial position)
        let angle = 0.77f64;
        let (s, c) = angle.sin_cos();
        let rotated = Vec3::new(user.x, c * user.y - s * user.z, s * user.y + c * user.z);
        let p2 = received_power(&layout, &link_60ghz(rotated)).unwrap();
        assert_relative_eq!(p1, p2, max_relative = 1e-12);
    }

    #[test]
    fn single_pa_optimum_is_nearest_grid_point() {
        let segment = AxisSegment {
            start: Vec3::new(-0.25, 0.0, 0.0),
            end: Vec3::new(0.25, 0.0, 0.0),
        };
        let link = link_60ghz(Vec3::new(0.112, 1.0, 0.0));
        let r = optimize_placements(segment, 0.01, 1, &link, Vec3::ZERO, 0.0035).unwrap();
        assert_relative_eq!(r.layout.locations[0].x, 0.11, max_relative = 1e-9);
    }

    #[test]
    fn greedy_matches_exhaustive_for_two_pas() {
        let segment = AxisSegment {
            start: Vec3::new(0.0, 0.0, 0.0),
            end: Vec3::new(0.49, 0.0, 0.0),
        };
        let step = 0.01; // 50 grid points
        let link = link_60ghz(Vec3::new(0.2, 1.6, 0.3));
        let feed = Vec3::ZERO;
        let lambda_g = 0.0035;
        let grid = segment.grid(step).unwrap();
        assert_eq!(grid.len(), 50);

        // brute force over all C(50, 2) pairs
        let mut brute = (f64::NEG_INFINITY, vec![]);
        for i in 0..grid.len() {
            for j in (i + 1)..grid.len() {
                let cand = (eval(&grid, &[i, j], feed, lambda_g, &link), vec![i, j]);
                if better(&cand, &brute) {
                    brute = cand;
                }
            }
        }
        let greedy = greedy_search(&grid, 2, &link, feed, lambda_g);
        assert_eq!(greedy.1, brute.1);
        assert_eq!(greedy.0, brute.0);
        // and the public entry point (exhaustive for M = 2) agrees
        let opt = optimize_placements(segment, step, 2, &link, feed, lambda_g).unwrap();
        assert_eq!(opt.indices, brute.1);
        assert_eq!(opt.received_power_w, brute.0);
    }

    #[test]
    fn optimizer_beats_random_layouts() {
        let segment = AxisSegment {
            start: Vec3::new(0.0, 0.0, 0.0),
            end: Vec3::new(0.3, 0.0, 0.0),
        };
        let step = 0.005;
        let link = link_60ghz(Vec3::new(0.1, 1.2, 0.0));
        let feed = Vec3::ZERO;
        let lambda_g = 0.0035;
        let opt = optimize_placements(segment, step, 3, &link, feed, lambda_g).unwrap();
        let grid = segment.grid(step).unwrap();
        let n = grid.len();
        let mut state = 7u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as usize) % n
        };
        for _ in 0..100 {
            let mut idx: Vec<usize> = Vec::new();
            while idx.len() < 3 {
                let c = rng();
                if !idx.contains(&c) {
                    idx.push(c);
                }
            }
            idx.sort_unstable();
            let p = eval(&grid, &idx, feed, lambda_g, &link);
            assert!(opt.received_power_w >= p);
        }
    }

    #[test]
    fn multi_pa_optimum_at_least_single_pa_optimum() {
        let segment = AxisSegment {
            start: Vec3::new(0.0, 0.0, 0.0),
            end: Vec3::new(0.3, 0.0, 0.0),
        };
        let link = link_60ghz(Vec3::new(0.17, 1.0, 0.0));
        let one = optimize_placements(segment, 0.01, 1, &link, Vec3::ZERO, 0.0035).unwrap();
        let three = optimize_placements(segment, 0.01, 3, &link, Vec3::ZERO, 0.0035).unwrap();
        assert!(three.received_power_w >= one.received_power_w);
    }

    #[test]
    fn infeasible_segment_is_rejected() {
        let segment = AxisSegment {
            start: Vec3::ZERO,
            end: Vec3::new(0.02, 0.0, 0.0),
        };
        let link = link_60ghz(Vec3::new(0.0, 1.0, 0.0));
        assert!(optimize_placements(segment, 0.01, 5, &link, Vec3::ZERO, 0.0035).is_err());
    }
}
