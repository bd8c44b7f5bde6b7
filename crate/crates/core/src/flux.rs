//! Boundary flux through circles, divergence integrals over annuli, the
//! index at infinity as a classified flux limit, minimum speed on circles
//! and winding numbers.
//!
//! By Green's theorem the divergence integral over an annulus `a < |z| < b`
//! equals `flux(b) - flux(a)`, so the limit of `flux(r)` as `r -> inf`
//! carries the integral of the divergence of any global extension that
//! agrees with the field outside some disk.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{dot, norm, polar, trace, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest number of angular nodes (a power of two).
    pub max_nodes: usize,
    /// Largest number of radial panels for annulus integrals.
    pub max_radial_nodes: usize,
}

impl Default for QuadratureControls {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 1e-12, max_nodes: 1 << 16, max_radial_nodes: 1 << 10 }
    }
}

/// An integral value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Adaptive periodic trapezoid rule on `[0, 2 pi)` with node doubling.
/// The error estimate is the difference of the last two levels, floored by
/// a roundoff bound. The integrand returns its value together with the
/// magnitude of the terms that cancel inside it.
fn periodic_trapezoid<F>(f: F, radius: f64, qc: &QuadratureControls) -> Result<Estimate>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let mut n = 16usize;
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for k in 0..n {
        let (v, m) = f(TAU * k as f64 / n as f64)?;
        sum += v;
        abs_sum += m.max(v.abs());
    }
    let mut prev = TAU * sum / n as f64;
    loop {
        let mut add = 0.0;
        for k in 0..n {
            let (v, m) = f(TAU * (k as f64 + 0.5) / n as f64)?;
            add += v;
            abs_sum += m.max(v.abs());
        }
        sum += add;
        n *= 2;
        let h = TAU / n as f64;
        let cur = h * sum;
        let roundoff = 4.0 * f64::EPSILON * h * abs_sum;
        let diff = (cur - prev).abs();
        let tol = qc.abs_tol.max(qc.rel_tol * cur.abs());
        if n >= 64 && diff <= tol.max(roundoff) {
            return Ok(Estimate { value: cur, error: diff.max(roundoff) });
        }
        if n >= qc.max_nodes {
            return Err(Error::QuadratureNonConvergence { radius, estimate: cur, error: diff });
        }
        prev = cur;
    }
}

/// Outward flux `r * integral <X_mu(r e^{it}), e^{it}> dt` through `|z| = r`.
pub fn flux(field: &dyn VectorField, mu: f64, r: f64, qc: &QuadratureControls) -> Result<Estimate> {
    if !(r > field.sigma()) {
        return Err(Error::DomainViolation { x: r, y: 0.0, sigma: field.sigma() });
    }
    let inner = periodic_trapezoid(
        |th| {
            let u = polar(1.0, th);
            let v = field.eval([r * u[0], r * u[1]], mu)?;
            Ok((dot(v, u), norm(v)))
        },
        r,
        qc,
    )?;
    Ok(Estimate { value: r * inner.value, error: r * inner.error })
}

/// Integral of `Trace(DX_mu)` over `r_in < |z| < r_out`.
///
/// Polar coordinates with `r = e^s`: the angular integral is an adaptive
/// periodic trapezoid rule, the radial one a composite midpoint rule in `s`
/// (interior nodes only, so `r_in = sigma` is allowed) accelerated by
/// Richardson extrapolation over panel doublings.
pub fn divergence_integral(
    field: &dyn VectorField,
    mu: f64,
    annulus: (f64, f64),
    qc: &QuadratureControls,
) -> Result<Estimate> {
    let (a, b) = annulus;
    if !(a >= field.sigma() && b > a && b.is_finite()) {
        return Err(invalid(format!("annulus ({a}, {b}) must satisfy sigma <= r_in < r_out")));
    }
    let (s0, s1) = (a.ln(), b.ln());
    // g(s) = e^{2s} * integral of the divergence over the circle r = e^s.
    let ring = |s: f64| -> Result<(f64, f64, f64)> {
        let r = s.exp();
        let est = periodic_trapezoid(
            |th| {
                let j = field.jet(polar(r, th), mu)?.jacobian;
                Ok((trace(&j), j[0][0].abs() + j[1][1].abs()))
            },
            r,
            qc,
        )?;
        Ok((r * r * est.value, r * r * est.error, r * r * est.value.abs()))
    };
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut n = 4usize;
    loop {
        let h = (s1 - s0) / n as f64;
        let rings: Vec<Result<(f64, f64, f64)>> =
            (0..n).into_par_iter().map(|k| ring(s0 + (k as f64 + 0.5) * h)).collect();
        let mut sum = 0.0;
        let mut inner_err = 0.0;
        let mut magnitude = 0.0;
        for v in rings {
            let (val, err, mag) = v?;
            sum += val;
            inner_err += err;
            magnitude += mag;
        }
        let mut row = vec![h * sum];
        let mut factor = 1.0;
        for j in 1..=table.len() {
            factor *= 4.0;
            let prev = table[table.len() - 1][j - 1];
            let last = row[j - 1];
            row.push(last + (last - prev) / (factor - 1.0));
        }
        let k = row.len() - 1;
        if let Some(prev_row) = table.last() {
            let best = row[k];
            let diff = (best - prev_row[k - 1]).abs();
            let roundoff = 64.0 * f64::EPSILON * h * magnitude;
            let error = diff + h * inner_err + roundoff;
            let tol = qc.abs_tol.max(qc.rel_tol * best.abs());
            if table.len() >= 2 && diff <= tol.max(roundoff) {
                return Ok(Estimate { value: best, error });
            }
            if n >= qc.max_radial_nodes {
                return Err(Error::QuadratureNonConvergence { radius: b, estimate: best, error: diff });
            }
        }
        table.push(row);
        n *= 2;
    }
}

/// Geometric radius schedule `first * ratio^k`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusSchedule {
    pub first: f64,
    pub ratio: f64,
    pub count: usize,
}

impl RadiusSchedule {
    pub fn new(first: f64, ratio: f64, count: usize) -> Self {
        Self { first, ratio, count }
    }

    pub fn radii(&self) -> Vec<f64> {
        let mut r = self.first;
        (0..self.count)
            .map(|_| {
                let cur = r;
                r *= self.ratio;
                cur
            })
            .collect()
    }

    pub fn last(&self) -> f64 {
        *self.radii().last().unwrap_or(&self.first)
    }

    pub fn validate(&self, sigma: f64) -> Result<()> {
        if self.count < 6 || !(self.ratio >= 1.5) || !(self.first > sigma) || !self.first.is_finite() {
            return Err(invalid(format!(
                "radius schedule needs >= 6 radii, ratio >= 1.5 and first radius > sigma = {sigma}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxProfile {
    pub radii: Vec<f64>,
    pub flux: Vec<f64>,
    pub quadrature_error: Vec<f64>,
}

impl FluxProfile {
    /// `r,phi,err` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,phi,err\n");
        for ((r, p), e) in self.radii.iter().zip(&self.flux).zip(&self.quadrature_error) {
            s.push_str(&format!("{r},{p},{e}\n"));
        }
        s
    }
}

pub fn flux_profile(
    field: &dyn VectorField,
    mu: f64,
    radii: &[f64],
    qc: &QuadratureControls,
) -> Result<FluxProfile> {
    let vals: Vec<Result<Estimate>> = radii.par_iter().map(|&r| flux(field, mu, r, qc)).collect();
    let mut profile = FluxProfile { radii: radii.to_vec(), flux: vec![], quadrature_error: vec![] };
    for v in vals {
        let v = v?;
        profile.flux.push(v.value);
        profile.quadrature_error.push(v.error);
    }
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum IndexClass {
    DivergesToPlusInfinity,
    DivergesToMinusInfinity,
    Finite { value: f64, uncertainty: f64 },
    Indeterminate,
}

impl IndexClass {
    /// Sign of the index when it is decided: +1, -1, or `None` for
    /// indeterminate limits and finite values within their uncertainty.
    pub fn sign(&self) -> Option<i8> {
        match *self {
            IndexClass::DivergesToPlusInfinity => Some(1),
            IndexClass::DivergesToMinusInfinity => Some(-1),
            IndexClass::Finite { value, uncertainty } if value.abs() > uncertainty => {
                Some(if value > 0.0 { 1 } else { -1 })
            }
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            IndexClass::DivergesToPlusInfinity => "DivergesToPlusInfinity",
            IndexClass::DivergesToMinusInfinity => "DivergesToMinusInfinity",
            IndexClass::Finite { .. } => "Finite",
            IndexClass::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexControls {
    /// First radius as a multiple of sigma.
    pub first_factor: f64,
    pub ratio: f64,
    pub count: usize,
    pub divergence_threshold: f64,
    pub tail_window: usize,
}

impl Default for IndexControls {
    fn default() -> Self {
        Self { first_factor: 2.0, ratio: 2.0, count: 12, divergence_threshold: 1e3, tail_window: 4 }
    }
}

impl IndexControls {
    pub fn schedule(&self, sigma: f64) -> RadiusSchedule {
        RadiusSchedule::new(self.first_factor * sigma, self.ratio, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexEstimate {
    pub classification: IndexClass,
    pub evidence: FluxProfile,
    pub fit: String,
}

/// Classifies the limit of `flux(r)` from its tail over the schedule.
///
/// * `DivergesTo(+/-)Infinity`: the last `tail_window` values move strictly
///   in one direction with non-shrinking increments and the last value is
///   beyond `+/- divergence_threshold`.
/// * `Finite`: increments shrink in magnitude (or vanish within quadrature
///   error); the uncertainty is a geometric tail bound.
/// * `Indeterminate` otherwise, including oscillation.
pub fn classify_profile(profile: FluxProfile, ic: &IndexControls) -> IndexEstimate {
    let n = profile.flux.len();
    let k = ic.tail_window.clamp(3, n.max(3)).min(n);
    let tail = &profile.flux[n - k..];
    let errs = &profile.quadrature_error[n - k..];
    let last = tail[k - 1];
    let diffs: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let noise: Vec<f64> = (0..k - 1)
        .map(|i| errs[i] + errs[i + 1] + 1e-12 * (1.0 + tail[i].abs().max(tail[i + 1].abs())))
        .collect();
    let nondecreasing = diffs.windows(2).all(|w| w[1].abs() >= w[0].abs());
    let rising = diffs.iter().zip(&noise).all(|(d, e)| *d > *e);
    let falling = diffs.iter().zip(&noise).all(|(d, e)| *d < -*e);

    let (classification, fit) = if rising && nondecreasing && last > ic.divergence_threshold {
        (
            IndexClass::DivergesToPlusInfinity,
            format!("tail of {k}: increasing with growing increments, flux(r_max) = {last} > {}", ic.divergence_threshold),
        )
    } else if falling && nondecreasing && last < -ic.divergence_threshold {
        (
            IndexClass::DivergesToMinusInfinity,
            format!("tail of {k}: decreasing with growing increments, flux(r_max) = {last} < -{}", ic.divergence_threshold),
        )
    } else {
        let shrinking = diffs
            .windows(2)
            .zip(noise.windows(2))
            .all(|(d, e)| d[1].abs() <= d[0].abs() || d[1].abs() <= e[1]);
        let same_sign = !(diffs.windows(2).zip(noise.windows(2)).any(|(d, e)| {
            d[0].abs() > e[0] && d[1].abs() > e[1] && d[0].signum() != d[1].signum()
        }));
        if shrinking && same_sign {
            let d_last = diffs[k - 2].abs();
            let d_prev = diffs[k - 3].abs();
            let rho = if d_prev > 0.0 { (d_last / d_prev).min(1.0) } else { 0.0 };
            let tail_bound = if d_last <= noise[k - 2] {
                noise[k - 2]
            } else if rho < 1.0 {
                d_last * rho / (1.0 - rho)
            } else {
                f64::INFINITY
            };
            let uncertainty = tail_bound.max(d_last).max(errs[k - 1]);
            if uncertainty.is_finite() {
                (
                    IndexClass::Finite { value: last, uncertainty },
                    format!("tail of {k}: increments shrink with ratio {rho:.3e}; geometric tail bound"),
                )
            } else {
                (IndexClass::Indeterminate, format!("tail of {k}: increments do not shrink"))
            }
        } else {
            (
                IndexClass::Indeterminate,
                format!("tail of {k}: neither divergent past threshold nor Cauchy-like"),
            )
        }
    };
    IndexEstimate { classification, evidence: profile, fit }
}

pub fn index_at_infinity(
    field: &dyn VectorField,
    mu: f64,
    schedule: &RadiusSchedule,
    ic: &IndexControls,
    qc: &QuadratureControls,
) -> Result<IndexEstimate> {
    schedule.validate(field.sigma())?;
    let profile = flux_profile(field, mu, &schedule.radii(), qc)?;
    Ok(classify_profile(profile, ic))
}

/// Minimum of `|X_mu|` on `|z| = r`: dense angular sampling, then
/// golden-section refinement around the best sample.
pub fn radial_min_speed(field: &dyn VectorField, mu: f64, r: f64) -> Result<f64> {
    Ok(min_speed_at(field, mu, r)?.0)
}

/// Minimum speed and the angle where it is attained.
pub fn min_speed_at(field: &dyn VectorField, mu: f64, r: f64) -> Result<(f64, f64)> {
    if !(r > field.sigma()) {
        return Err(Error::DomainViolation { x: r, y: 0.0, sigma: field.sigma() });
    }
    const N: usize = 720;
    let speed = |th: f64| -> Result<f64> { Ok(norm(field.eval(polar(r, th), mu)?)) };
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..N {
        let th = TAU * k as f64 / N as f64;
        let s = speed(th)?;
        if s < best.0 {
            best = (s, th);
        }
    }
    let step = TAU / N as f64;
    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let mut fc = speed(c)?;
    let mut fd = speed(d)?;
    while hi - lo > 1e-12 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = speed(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = speed(d)?;
        }
    }
    for (s, th) in [(fc, c), (fd, d)] {
        if s < best.0 {
            best = (s, th);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpeedVerdict {
    DivergenceSupported,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedIntegralCheck {
    /// Heuristic: finite data cannot certify that an improper integral
    /// diverges.
    pub verdict: SpeedVerdict,
    pub radii: Vec<f64>,
    pub min_speed: Vec<f64>,
    pub partial_sums: Vec<f64>,
}

pub const SPEED_FLOOR: f64 = 1e-3;

/// Trapezoid partial sums of the minimum speed over the schedule.
/// `DivergenceSupported` when the trailing increments do not decay (ratio
/// of successive increments >= 1) and the last minimum speed is at least
/// [`SPEED_FLOOR`]. On a geometric schedule, a power law `r^p` gives
/// increment ratios `ratio^(p+1)`, so the rule separates `p >= -1` from
/// integrable tails.
pub fn speed_integral_check(
    field: &dyn VectorField,
    mu: f64,
    schedule: &RadiusSchedule,
    tail_window: usize,
) -> Result<SpeedIntegralCheck> {
    schedule.validate(field.sigma())?;
    let radii = schedule.radii();
    let speeds: Vec<Result<f64>> = radii.par_iter().map(|&r| radial_min_speed(field, mu, r)).collect();
    let min_speed: Vec<f64> = speeds.into_iter().collect::<Result<_>>()?;
    let mut partial = vec![0.0];
    let mut increments = vec![];
    for i in 1..radii.len() {
        let inc = 0.5 * (min_speed[i] + min_speed[i - 1]) * (radii[i] - radii[i - 1]);
        increments.push(inc);
        partial.push(partial[i - 1] + inc);
    }
    let w = tail_window.clamp(2, increments.len());
    let tail = &increments[increments.len() - w..];
    let no_decay = tail.windows(2).all(|p| p[1] >= p[0] * (1.0 - 1e-9));
    let floor_ok = *min_speed.last().unwrap_or(&0.0) >= SPEED_FLOOR;
    Ok(SpeedIntegralCheck {
        verdict: if no_decay && floor_ok {
            SpeedVerdict::DivergenceSupported
        } else {
            SpeedVerdict::Inconclusive
        },
        radii,
        min_speed,
        partial_sums: partial,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Winding {
    pub radius: f64,
    pub winding: i64,
    /// `2 - winding`.
    pub poincare_index_at_infinity: i64,
    pub min_speed: f64,
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a > PI {
        a -= TAU;
    } else if a <= -PI {
        a += TAU;
    }
    a
}

/// Degree of `t -> X_mu(r e^{it}) / |X_mu|` by accumulating argument
/// increments; intervals are bisected until each increment is below pi/2.
pub fn winding_number(field: &dyn VectorField, mu: f64, r: f64) -> Result<Winding> {
    let (min_speed, th) = min_speed_at(field, mu, r)?;
    let scale = norm(field.eval(polar(r, 0.0), mu)?).max(1.0);
    if !(min_speed > 1e-12 * scale) {
        let p = polar(r, th);
        return Err(Error::ZeroSpeed { radius: r, x: p[0], y: p[1] });
    }
    let arg = |t: f64| -> Result<f64> {
        let v = field.eval(polar(r, t), mu)?;
        Ok(v[1].atan2(v[0]))
    };
    fn accumulate(
        arg: &dyn Fn(f64) -> Result<f64>,
        t0: f64,
        a0: f64,
        t1: f64,
        a1: f64,
        depth: u32,
    ) -> Result<f64> {
        let d = wrap_angle(a1 - a0);
        if d.abs() < PI / 2.0 {
            return Ok(d);
        }
        if depth == 0 {
            return Err(invalid("winding subdivision depth exceeded"));
        }
        let tm = 0.5 * (t0 + t1);
        let am = arg(tm)?;
        Ok(accumulate(arg, t0, a0, tm, am, depth - 1)? + accumulate(arg, tm, am, t1, a1, depth - 1)?)
    }
    const N: usize = 256;
    let mut total = 0.0;
    let mut t_prev = 0.0;
    let mut a_prev = arg(0.0)?;
    let a_start = a_prev;
    for k in 1..=N {
        let t = TAU * k as f64 / N as f64;
        let a = if k == N { a_start } else { arg(t)? };
        total += accumulate(&arg, t_prev, a_prev, t, a, 40)?;
        t_prev = t;
        a_prev = a;
    }
    let turns = total / TAU;
    let winding = turns.round();
    if (turns - winding).abs() > 1e-6 {
        return Err(invalid(format!("winding accumulation not integral: {turns}")));
    }
    let winding = winding as i64;
    Ok(Winding { radius: r, winding, poincare_index_at_infinity: 2 - winding, min_speed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{catalog, catalog_family, parse_field};

    fn qc() -> QuadratureControls {
        QuadratureControls::default()
    }

    #[test]
    fn rotation_has_zero_flux() {
        let rot = catalog("rot").unwrap();
        for r in [1.5, 3.0, 40.0] {
            assert!(flux(&rot, 0.0, r, &qc()).unwrap().value.abs() < 1e-14 * r * r);
        }
    }

    #[test]
    fn dilation_flux() {
        let dil = parse_field("f = x; g = y", 1.0).unwrap();
        let v = flux(&dil, 0.0, 2.0, &qc()).unwrap();
        assert!((v.value - 8.0 * PI).abs() < 1e-12 * 8.0 * PI);
    }

    #[test]
    fn inverse_field_flux_is_minus_two_pi() {
        // <-z/|z|^2, z/|z|> = -1/r on a circle of length 2 pi r.
        let inv = catalog("inv").unwrap();
        for r in [1.2, 2.0, 17.0, 300.0] {
            let v = flux(&inv, 0.0, r, &qc()).unwrap();
            assert!((v.value + TAU).abs() < 1e-13 * r, "r = {r}: {v:?}");
        }
    }

    #[test]
    fn flux_domain() {
        let rot = catalog("rot").unwrap();
        assert!(flux(&rot, 0.0, 1.0, &qc()).is_err());
    }

    #[test]
    fn constant_divergence_integral() {
        // mu z on (1, 2): 2 mu * pi (4 - 1) = 6 pi mu
        let zero = parse_field("f = 0; g = 0", 1.0).unwrap().into_family().unwrap();
        let v = divergence_integral(&zero, 0.5, (1.0, 2.0), &qc()).unwrap();
        assert!((v.value - 3.0 * PI).abs() < 1e-10, "{v:?}");
        let inv = catalog("inv").unwrap();
        let v = divergence_integral(&inv, 0.0, (1.1, 10.0), &qc()).unwrap();
        assert!(v.value.abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn green_identity_on_nonlinear_field() {
        let f = parse_field("f = -y + x*exp(-r2/50) + y^3/r2; g = x + sin(x)/r2", 1.0).unwrap();
        let (a, b) = (1.5, 6.0);
        let d = divergence_integral(&f, 0.3, (a, b), &qc()).unwrap();
        let fa = flux(&f, 0.3, a, &qc()).unwrap();
        let fb = flux(&f, 0.3, b, &qc()).unwrap();
        let gap = (d.value - (fb.value - fa.value)).abs();
        assert!(gap <= d.error + fa.error + fb.error, "gap {gap}, {d:?} {fa:?} {fb:?}");
    }

    #[test]
    fn index_of_linear_family() {
        let rot = catalog_family("rot").unwrap();
        let ic = IndexControls::default();
        let s = ic.schedule(1.0);
        let up = index_at_infinity(&rot, 0.1, &s, &ic, &qc()).unwrap();
        assert_eq!(up.classification, IndexClass::DivergesToPlusInfinity);
        let down = index_at_infinity(&rot, -0.1, &s, &ic, &qc()).unwrap();
        assert_eq!(down.classification, IndexClass::DivergesToMinusInfinity);
        let inv = catalog_family("inv").unwrap();
        match index_at_infinity(&inv, 0.0, &s, &ic, &qc()).unwrap().classification {
            IndexClass::Finite { value, uncertainty } => {
                assert!((value + TAU).abs() < 1e-9);
                assert!(uncertainty < 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oscillating_profile_is_indeterminate() {
        let p = FluxProfile {
            radii: (0..6).map(|k| 2f64.powi(k)).collect(),
            flux: vec![1.0, -2.0, 3.0, -4.0, 5.0, -6.0],
            quadrature_error: vec![0.0; 6],
        };
        let e = classify_profile(p, &IndexControls::default());
        assert_eq!(e.classification, IndexClass::Indeterminate);
    }

    #[test]
    fn slow_growth_below_threshold_is_indeterminate() {
        let p = FluxProfile {
            radii: (0..6).map(|k| 2f64.powi(k)).collect(),
            flux: (0..6).map(|k| 3f64.powi(k)).collect(),
            quadrature_error: vec![0.0; 6],
        };
        let e = classify_profile(p, &IndexControls::default());
        assert_eq!(e.classification, IndexClass::Indeterminate);
    }

    #[test]
    fn schedule_preconditions() {
        let rot = catalog("rot").unwrap();
        let ic = IndexControls::default();
        for s in [
            RadiusSchedule::new(2.0, 2.0, 5),
            RadiusSchedule::new(2.0, 1.2, 8),
            RadiusSchedule::new(1.0, 2.0, 8),
        ] {
            assert!(index_at_infinity(&rot, 0.0, &s, &ic, &qc()).is_err());
        }
    }

    #[test]
    fn min_speed_examples() {
        let rot = catalog("rot").unwrap();
        assert!((radial_min_speed(&rot, 0.0, 3.0).unwrap() - 3.0).abs() < 1e-12);
        let lin = catalog_family("rot").unwrap();
        let v = radial_min_speed(&lin, 0.5, 2.0).unwrap();
        assert!((v - 2.0 * 1.25f64.sqrt()).abs() < 1e-12);
        // |iz - z/r^2| = sqrt(r^2 + r^-2) because iz is orthogonal to z.
        let inv = catalog("inv").unwrap();
        let v = radial_min_speed(&inv, 0.0, 2.0).unwrap();
        assert!((v - 4.25f64.sqrt()).abs() < 1e-12);
        // min over an ellipse-like speed profile is found between samples
        let aniso = parse_field("f = -2*y; g = x + 0.001", 1.0).unwrap();
        let v = radial_min_speed(&aniso, 0.0, 2.0).unwrap();
        assert!((v - 1.999).abs() < 1e-9, "{v}");
    }

    #[test]
    fn speed_integral_examples() {
        let s = IndexControls::default().schedule(1.0);
        let rot = catalog("rot").unwrap();
        assert_eq!(speed_integral_check(&rot, 0.0, &s, 4).unwrap().verdict, SpeedVerdict::DivergenceSupported);
        let fam = catalog_family("rot").unwrap();
        assert_eq!(speed_integral_check(&fam, 0.2, &s, 4).unwrap().verdict, SpeedVerdict::DivergenceSupported);
        let decay = parse_field("f = -y/(r2*sqrt(r2)); g = x/(r2*sqrt(r2))", 1.0).unwrap();
        let chk = speed_integral_check(&decay, 0.0, &s, 4).unwrap();
        assert_eq!(chk.verdict, SpeedVerdict::Inconclusive);
        // 1/r is not integrable: increments stay constant on a geometric schedule
        let harmonic = parse_field("f = -y/r2; g = x/r2", 1.0).unwrap();
        let short = RadiusSchedule::new(2.0, 2.0, 6);
        assert_eq!(
            speed_integral_check(&harmonic, 0.0, &short, 4).unwrap().verdict,
            SpeedVerdict::DivergenceSupported
        );
    }

    #[test]
    fn winding_examples() {
        let rot = catalog("rot").unwrap();
        let w = winding_number(&rot, 0.0, 5.0).unwrap();
        assert_eq!((w.winding, w.poincare_index_at_infinity), (1, 1));
        let saddle = parse_field("f = x; g = -y", 1.0).unwrap();
        let w = winding_number(&saddle, 0.0, 5.0).unwrap();
        assert_eq!((w.winding, w.poincare_index_at_infinity), (-1, 3));
        let focus = catalog_family("focus").unwrap();
        assert_eq!(winding_number(&focus, 0.1, 10.0).unwrap().winding, 1);
        let quad = parse_field("f = x^2 - y^2; g = 2*x*y", 1.0).unwrap();
        assert_eq!(winding_number(&quad, 0.0, 3.0).unwrap().winding, 2);
    }

    #[test]
    fn winding_needs_nonvanishing_field() {
        let shifted = parse_field("f = x - 3; g = y", 1.0).unwrap();
        assert!(matches!(winding_number(&shifted, 0.0, 3.0), Err(Error::ZeroSpeed { .. })));
    }
}
