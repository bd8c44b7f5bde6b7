//! Trajectory classification, transversal circles and attractor/repellor
//! certification of the point at infinity.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::{dot, norm, polar, Vec2, VectorField};
use crate::ode::{integrate, Direction, FlowControls, Termination, TimeScale, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum TrajectoryVerdict {
    GoesToInfinity,
    ComesFromInfinity,
    ConvergesToSingularRegion { point: Vec2, residual_speed: f64 },
    Periodic { period: f64, mean_radius: f64, min_radius: f64, max_radius: f64 },
    Undetermined { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    /// At most [`SUMMARY_POINTS`] points, evenly spaced in step index.
    pub samples: Vec<Vec2>,
    pub final_time: f64,
    pub final_radius: f64,
    pub steps: usize,
}

pub const SUMMARY_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryOutcome {
    pub verdict: TrajectoryVerdict,
    pub direction: Direction,
    pub path_summary: PathSummary,
}

fn summarize_path(tr: &Trajectory) -> PathSummary {
    let n = tr.points.len();
    let stride = n.div_ceil(SUMMARY_POINTS).max(1);
    let mut samples: Vec<Vec2> = tr.points.iter().step_by(stride).copied().collect();
    if !(n - 1).is_multiple_of(stride) {
        samples.push(tr.final_point());
    }
    PathSummary {
        samples,
        final_time: tr.final_time(),
        final_radius: norm(tr.final_point()),
        steps: tr.accepted_steps,
    }
}

/// Radius non-decreasing over the last quarter of the accepted points.
fn radius_monotone_at_end(tr: &Trajectory) -> bool {
    let n = tr.points.len();
    let start = n - (n / 4).max(2).min(n);
    tr.points[start..].windows(2).all(|w| norm(w[1]) >= norm(w[0]))
}

pub fn classify(field: &dyn VectorField, mu: f64, tr: &Trajectory) -> Result<TrajectoryOutcome> {
    let verdict = match tr.termination {
        Termination::Escaped => {
            if radius_monotone_at_end(tr) {
                match tr.direction {
                    Direction::Forward => TrajectoryVerdict::GoesToInfinity,
                    Direction::Backward => TrajectoryVerdict::ComesFromInfinity,
                }
            } else {
                TrajectoryVerdict::Undetermined {
                    reason: "escaped without monotone radius over the last quarter".into(),
                }
            }
        }
        Termination::LoopClosure { period, mean_radius, min_radius, max_radius } => {
            TrajectoryVerdict::Periodic { period, mean_radius, min_radius, max_radius }
        }
        Termination::InnerRadius | Termination::Stalled => {
            let p = tr.final_point();
            TrajectoryVerdict::ConvergesToSingularRegion { point: p, residual_speed: norm(field.eval(p, mu)?) }
        }
        Termination::TimeLimit => TrajectoryVerdict::Undetermined { reason: "time limit reached".into() },
        Termination::StepCollapse => TrajectoryVerdict::Undetermined { reason: "step size collapsed".into() },
        Termination::StepBudget => TrajectoryVerdict::Undetermined { reason: "step budget exhausted".into() },
    };
    Ok(TrajectoryOutcome { verdict, direction: tr.direction, path_summary: summarize_path(tr) })
}

pub fn classify_trajectory(
    field: &dyn VectorField,
    mu: f64,
    z0: Vec2,
    direction: Direction,
    controls: &FlowControls,
) -> Result<TrajectoryOutcome> {
    let tr = integrate(field, mu, z0, direction, controls)?;
    classify(field, mu, &tr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "sign")]
pub enum TransversalityCertificate {
    Inflow { radius: f64, margin: f64 },
    Outflow { radius: f64, margin: f64 },
    NotTransversal { radius: f64, witness_angle: f64, radial_component: f64 },
}

impl TransversalityCertificate {
    pub fn radius(&self) -> f64 {
        match *self {
            Self::Inflow { radius, .. } | Self::Outflow { radius, .. } | Self::NotTransversal { radius, .. } => {
                radius
            }
        }
    }

    /// +1 for outflow, -1 for inflow.
    pub fn sign(&self) -> Option<i8> {
        match self {
            Self::Outflow { .. } => Some(1),
            Self::Inflow { .. } => Some(-1),
            Self::NotTransversal { .. } => None,
        }
    }
}

pub fn tangency_tolerance(speed: f64) -> f64 {
    1e-9 * (1.0 + speed)
}

/// Certifies that `<X_mu, eta>` has constant sign on `|z| = r`. Uniform
/// samples are refined by bisection at sign changes and by golden-section
/// search around every local minimum of the modulus.
pub fn transversal_circle(
    field: &dyn VectorField,
    mu: f64,
    r: f64,
    angular_samples: usize,
) -> Result<TransversalityCertificate> {
    if angular_samples < 64 {
        return Err(invalid(format!("angular_samples must be >= 64, got {angular_samples}")));
    }
    let radial = |th: f64| -> Result<(f64, f64)> {
        let u = polar(1.0, th);
        let v = field.eval([r * u[0], r * u[1]], mu)?;
        Ok((dot(v, u), tangency_tolerance(norm(v))))
    };
    let n = angular_samples;
    let step = TAU / n as f64;
    let mut vals = Vec::with_capacity(n);
    for k in 0..n {
        let th = step * k as f64;
        let (v, tol) = radial(th)?;
        if v.abs() <= tol {
            return Ok(TransversalityCertificate::NotTransversal { radius: r, witness_angle: th, radial_component: v });
        }
        vals.push((th, v));
    }
    for k in 0..n {
        let (ta, va) = vals[k];
        let vb = vals[(k + 1) % n].1;
        if va.signum() != vb.signum() {
            let (mut lo, mut hi) = (ta, ta + step);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let (vm, _) = radial(mid)?;
                if vm.signum() == va.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (vl, _) = radial(lo)?;
            let (vh, _) = radial(hi)?;
            let (th, v) = if vl.abs() <= vh.abs() { (lo, vl) } else { (hi, vh) };
            return Ok(TransversalityCertificate::NotTransversal {
                radius: r,
                witness_angle: th.rem_euclid(TAU),
                radial_component: v,
            });
        }
    }
    let sign = vals[0].1.signum();
    let mut margin = f64::INFINITY;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for k in 0..n {
        let prev = vals[(k + n - 1) % n].1.abs();
        let next = vals[(k + 1) % n].1.abs();
        let (tk, vk) = vals[k];
        margin = margin.min(vk.abs());
        if vk.abs() > prev || vk.abs() > next {
            continue;
        }
        let f = |th: f64| -> Result<(f64, f64, f64)> {
            let (v, tol) = radial(th)?;
            Ok((v * sign, tol, th))
        };
        let (mut lo, mut hi) = (tk - step, tk + step);
        let mut c = hi - g * (hi - lo);
        let mut d = lo + g * (hi - lo);
        let mut fc = f(c)?;
        let mut fd = f(d)?;
        while hi - lo > 1e-12 {
            for probe in [fc, fd] {
                if probe.0 <= probe.1 {
                    return Ok(TransversalityCertificate::NotTransversal {
                        radius: r,
                        witness_angle: probe.2.rem_euclid(TAU),
                        radial_component: probe.0 * sign,
                    });
                }
            }
            if fc.0 < fd.0 {
                hi = d;
                d = c;
                fd = fc;
                c = hi - g * (hi - lo);
                fc = f(c)?;
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + g * (hi - lo);
                fd = f(d)?;
            }
        }
        margin = margin.min(fc.0).min(fd.0);
    }
    Ok(if sign > 0.0 {
        TransversalityCertificate::Outflow { radius: r, margin }
    } else {
        TransversalityCertificate::Inflow { radius: r, margin }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityControls {
    /// Innermost circle as a multiple of sigma.
    pub first_factor: f64,
    pub ratio: f64,
    pub circles: usize,
    pub min_circles: usize,
    pub angular_samples: usize,
    pub probe_count: usize,
    pub seed: u64,
    pub probe_rtol: f64,
    pub probe_atol: f64,
    /// In normalized time.
    pub probe_t_max: f64,
    pub probe_max_steps: usize,
}

impl Default for StabilityControls {
    fn default() -> Self {
        Self {
            first_factor: 2.0,
            ratio: 2.0,
            circles: 8,
            min_circles: 3,
            angular_samples: 256,
            probe_count: 16,
            seed: 0,
            probe_rtol: 1e-7,
            probe_atol: 1e-10,
            probe_t_max: 2000.0,
            probe_max_steps: 200_000,
        }
    }
}

impl StabilityControls {
    pub fn radii(&self, sigma: f64) -> Vec<f64> {
        let mut r = self.first_factor * sigma;
        (0..self.circles)
            .map(|_| {
                let cur = r;
                r *= self.ratio;
                cur
            })
            .collect()
    }

    fn validate(&self, sigma: f64) -> Result<()> {
        if !(self.first_factor * sigma > sigma && self.ratio > 1.0) {
            return Err(invalid("circle schedule must start beyond sigma and grow"));
        }
        if self.min_circles < 3 || self.circles < self.min_circles || self.probe_count == 0 {
            return Err(invalid("need circles >= min_circles >= 3 and at least one probe"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StabilityVerdict {
    Attractor,
    Repellor,
    Undetermined,
}

impl StabilityVerdict {
    pub fn sign(self) -> Option<i8> {
        match self {
            StabilityVerdict::Attractor => Some(1),
            StabilityVerdict::Repellor => Some(-1),
            StabilityVerdict::Undetermined => None,
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            StabilityVerdict::Attractor => StabilityVerdict::Repellor,
            StabilityVerdict::Repellor => StabilityVerdict::Attractor,
            StabilityVerdict::Undetermined => StabilityVerdict::Undetermined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub angle: f64,
    pub outcome: TrajectoryOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfinityStability {
    pub verdict: StabilityVerdict,
    pub reason: Option<String>,
    pub transversal_circles: Vec<TransversalityCertificate>,
    /// Radii of the outermost run of same-sign circles the verdict rests on.
    pub certified_radii: Vec<f64>,
    pub trajectory_evidence: Vec<Probe>,
}

/// Probe angles `2 pi (k + u) / n` with one seeded offset `u`.
pub fn probe_angles(count: usize, seed: u64) -> Vec<f64> {
    let u: f64 = ChaCha8Rng::seed_from_u64(seed).gen();
    (0..count).map(|k| TAU * (k as f64 + u) / count as f64).collect()
}

/// Attractor: an outermost run of at least `min_circles` outflow circles
/// and every forward probe from the innermost of them goes to infinity.
/// Repellor: the same with inflow circles and backward probes. Circles
/// inside the run may have either sign or be tangent; they bound no claim.
pub fn certify_infinity_stability(
    field: &dyn VectorField,
    mu: f64,
    controls: &StabilityControls,
) -> Result<InfinityStability> {
    let sigma = field.sigma();
    controls.validate(sigma)?;
    let radii = controls.radii(sigma);
    let certs: Vec<Result<TransversalityCertificate>> = radii
        .par_iter()
        .map(|&r| transversal_circle(field, mu, r, controls.angular_samples))
        .collect();
    let certs: Vec<TransversalityCertificate> = certs.into_iter().collect::<Result<_>>()?;
    let mut report = InfinityStability {
        verdict: StabilityVerdict::Undetermined,
        reason: None,
        transversal_circles: certs.clone(),
        certified_radii: vec![],
        trajectory_evidence: vec![],
    };
    let Some(sign) = certs.last().and_then(|c| c.sign()) else {
        report.reason = Some("outermost circle is not transversal".into());
        return Ok(report);
    };
    let run: Vec<&TransversalityCertificate> =
        certs.iter().rev().take_while(|c| c.sign() == Some(sign)).collect();
    report.certified_radii = run.iter().rev().map(|c| c.radius()).collect();
    if run.len() < controls.min_circles {
        report.reason = Some(format!(
            "only {} outermost same-sign transversal circles, need {}",
            run.len(),
            controls.min_circles
        ));
        return Ok(report);
    }
    let start = report.certified_radii[0];
    let outer = *report.certified_radii.last().expect("run is nonempty");
    let direction = if sign > 0 { Direction::Forward } else { Direction::Backward };
    let flow = FlowControls {
        rtol: controls.probe_rtol,
        atol: controls.probe_atol,
        t_max: controls.probe_t_max,
        escape_radius: 2.0 * outer,
        inner_radius: None,
        max_steps: controls.probe_max_steps,
        time_scale: TimeScale::Normalized,
        detect_loops: true,
    };
    let probes: Vec<Result<Probe>> = probe_angles(controls.probe_count, controls.seed)
        .into_par_iter()
        .map(|angle| {
            let outcome = classify_trajectory(field, mu, polar(start, angle), direction, &flow)?;
            Ok(Probe { angle, outcome })
        })
        .collect();
    report.trajectory_evidence = probes.into_iter().collect::<Result<_>>()?;
    let expected = if sign > 0 { TrajectoryVerdict::GoesToInfinity } else { TrajectoryVerdict::ComesFromInfinity };
    let failures = report.trajectory_evidence.iter().filter(|p| p.outcome.verdict != expected).count();
    if failures == 0 {
        report.verdict = if sign > 0 { StabilityVerdict::Attractor } else { StabilityVerdict::Repellor };
    } else {
        report.reason = Some(format!(
            "{failures} of {} probes did not {}",
            report.trajectory_evidence.len(),
            if sign > 0 { "go to infinity" } else { "come from infinity" }
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{catalog, catalog_family, parse_field, ScaledField};

    #[test]
    fn focus_converges_to_disk() {
        let focus = catalog_family("focus").unwrap();
        let out = classify_trajectory(&focus, 0.0, [4.0, 0.0], Direction::Forward, &FlowControls::default()).unwrap();
        match out.verdict {
            TrajectoryVerdict::ConvergesToSingularRegion { point, .. } => {
                assert!(norm(point) < 1.02 && norm(point) >= 1.0)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inverse_family_limit_cycle() {
        let inv = catalog_family("inv").unwrap();
        let out = classify_trajectory(&inv, 0.04, [5.0, 0.0], Direction::Forward, &FlowControls::default()).unwrap();
        match out.verdict {
            TrajectoryVerdict::Periodic { period, mean_radius, .. } => {
                assert!((mean_radius - 5.0).abs() < 0.05);
                assert!((period - TAU).abs() < 0.01 * TAU);
            }
            other => panic!("{other:?}"),
        }
        // r' = 0.24 - 1/6 > 0 at r = 6: the orbit leaves the cycle outward.
        let out = classify_trajectory(&inv, 0.04, [6.0, 0.0], Direction::Forward, &FlowControls::default()).unwrap();
        assert_eq!(out.verdict, TrajectoryVerdict::GoesToInfinity);
        let out = classify_trajectory(&inv, 0.04, [4.0, 0.0], Direction::Forward, &FlowControls::default()).unwrap();
        assert!(matches!(out.verdict, TrajectoryVerdict::ConvergesToSingularRegion { .. }));
    }

    #[test]
    fn rotation_is_periodic() {
        let rot = catalog("rot").unwrap();
        let out = classify_trajectory(&rot, 0.0, [2.0, 0.0], Direction::Forward, &FlowControls::default()).unwrap();
        match out.verdict {
            TrajectoryVerdict::Periodic { period, mean_radius, .. } => {
                assert!((period - TAU).abs() < 1e-6);
                assert!((mean_radius - 2.0).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        assert!(out.path_summary.samples.len() <= SUMMARY_POINTS + 1);
    }

    #[test]
    fn transversal_examples() {
        let rot = catalog_family("rot").unwrap();
        for r in [2.0, 7.5, 100.0] {
            match transversal_circle(&rot, 0.3, r, 64).unwrap() {
                TransversalityCertificate::Outflow { margin, .. } => assert!((margin - 0.3 * r).abs() < 1e-12 * r),
                other => panic!("{other:?}"),
            }
        }
        assert!(matches!(
            transversal_circle(&rot, 0.0, 3.0, 64).unwrap(),
            TransversalityCertificate::NotTransversal { .. }
        ));
        let inv = catalog_family("inv").unwrap();
        match transversal_circle(&inv, 0.04, 5.0, 128).unwrap() {
            TransversalityCertificate::NotTransversal { radial_component, .. } => {
                assert!(radial_component.abs() <= tangency_tolerance(5.0))
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            transversal_circle(&inv, 0.04, 10.0, 128).unwrap(),
            TransversalityCertificate::Outflow { .. }
        ));
        assert!(transversal_circle(&inv, 0.04, 10.0, 32).is_err());
    }

    #[test]
    fn sign_change_between_samples_is_found() {
        // radial component x/r * 1e-3 + ... changes sign on every circle
        let f = parse_field("f = -y + 0.001*x*cos(x); g = x", 1.0).unwrap();
        match transversal_circle(&f, 0.0, 3.0, 64).unwrap() {
            TransversalityCertificate::NotTransversal { witness_angle, radial_component, .. } => {
                let p = polar(3.0, witness_angle);
                let v = f.eval(p, 0.0).unwrap();
                assert!(radial_component.abs() <= tangency_tolerance(norm(v)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn narrow_dip_is_refined() {
        // Outflow except a notch near theta = 0.5 where the radial part touches
        // zero between two of the 64 samples.
        let f = parse_field(
            "f = -y + x*(1 - exp(-((atan2(y, x) - 0.5)^2)*1000)); g = x + y*(1 - exp(-((atan2(y, x) - 0.5)^2)*1000))",
            1.0,
        )
        .unwrap();
        let c = transversal_circle(&f, 0.0, 2.0, 64).unwrap();
        assert!(matches!(c, TransversalityCertificate::NotTransversal { .. }), "{c:?}");
    }

    #[test]
    fn linear_family_stability() {
        let rot = catalog_family("rot").unwrap();
        let c = StabilityControls::default();
        assert_eq!(certify_infinity_stability(&rot, 0.1, &c).unwrap().verdict, StabilityVerdict::Attractor);
        let s = certify_infinity_stability(&rot, -0.1, &c).unwrap();
        assert_eq!(s.verdict, StabilityVerdict::Repellor);
        assert_eq!(s.trajectory_evidence.len(), 16);
        assert!(s.trajectory_evidence.windows(2).all(|w| w[0].angle < w[1].angle));
        let s = certify_infinity_stability(&rot, 0.0, &c).unwrap();
        assert_eq!(s.verdict, StabilityVerdict::Undetermined);
        assert!(s.trajectory_evidence.is_empty());
    }

    #[test]
    fn inverse_family_stability_beyond_cycle() {
        let inv = catalog_family("inv").unwrap();
        let c = StabilityControls::default();
        let s = certify_infinity_stability(&inv, 0.04, &c).unwrap();
        assert_eq!(s.verdict, StabilityVerdict::Attractor);
        assert!(s.certified_radii[0] > 5.0);
        assert_eq!(certify_infinity_stability(&inv, -0.04, &c).unwrap().verdict, StabilityVerdict::Repellor);
    }

    #[test]
    fn time_reversal_swaps_verdict() {
        let focus = catalog_family("focus").unwrap();
        let c = StabilityControls::default();
        let fwd = certify_infinity_stability(&focus, 0.3, &c).unwrap().verdict;
        assert_eq!(fwd, StabilityVerdict::Repellor);
        let rev = ScaledField::reversed(&focus);
        assert_eq!(certify_infinity_stability(&rev, 0.3, &c).unwrap().verdict, StabilityVerdict::Attractor);
    }

    #[test]
    fn probe_angles_are_seeded() {
        assert_eq!(probe_angles(16, 7), probe_angles(16, 7));
        assert_ne!(probe_angles(16, 7), probe_angles(16, 8));
        let a = probe_angles(16, 3);
        assert!(a.windows(2).all(|w| (w[1] - w[0] - TAU / 16.0).abs() < 1e-12));
    }
}
