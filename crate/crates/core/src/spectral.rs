//! Eigenvalues of 2x2 Jacobians and sampled certification of spectral
//! classes over an annulus.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::field::{det, polar, trace, Mat2, Vec2, VectorField};

/// Eigenvalues of a real 2x2 matrix. Complex pairs are stored with the
/// positive imaginary part first; real pairs in decreasing order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum2 {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

impl Spectrum2 {
    pub fn is_real(&self) -> bool {
        self.lambda1.im == 0.0
    }
}

/// Roots of `l^2 - tr l + det`. The discriminant is formed as
/// `((a - d)/2)^2 + b c`, which avoids cancellation between `tr^2/4` and
/// `det`; real roots use the larger-magnitude root and `det / l1`.
pub fn eigs2(m: &Mat2) -> Result<Spectrum2> {
    let [[a, b], [c, d]] = *m;
    if ![a, b, c, d].iter().all(|v| v.is_finite()) {
        return Err(invalid("non-finite matrix entry"));
    }
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let big = if half_tr >= 0.0 { half_tr + s } else { half_tr - s };
        let small = if big == 0.0 { 0.0 } else { det(m) / big };
        let (l1, l2) = if big >= small { (big, small) } else { (small, big) };
        Ok(Spectrum2 { lambda1: Complex64::new(l1, 0.0), lambda2: Complex64::new(l2, 0.0) })
    } else {
        let s = (-disc).sqrt();
        Ok(Spectrum2 {
            lambda1: Complex64::new(half_tr, s),
            lambda2: Complex64::new(half_tr, -s),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SpectralClass {
    /// Trace < 0 and det > 0: the spectrum lies in `Re <= 0` minus the origin.
    Dissipative,
    PositiveDeterminant,
    /// Purely imaginary, nonzero eigenvalues.
    FreeRealEigenvalues,
    /// `det(DX_mu) > 0` for `mu` sampled in the open interval.
    DetPositiveOnInterval { mu_lo: f64, mu_hi: f64, samples: usize },
}

impl SpectralClass {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "dissipative" => Ok(Self::Dissipative),
            "positive-determinant" | "positive_determinant" => Ok(Self::PositiveDeterminant),
            "free-real-eigenvalues" | "free_real_eigenvalues" => Ok(Self::FreeRealEigenvalues),
            _ => Err(invalid(format!(
                "unknown spectral class `{name}` (dissipative, positive-determinant, free-real-eigenvalues)"
            ))),
        }
    }
}

/// Log-spaced radii `r_in * q^(i/n_r)` for `i = 1..=n_r` and uniform
/// angles `2 pi j / n_theta`. The inner circle is excluded so `r_in` may
/// equal `sigma`; integer refinements of both counts contain every
/// coarser point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleGrid {
    pub r_in: f64,
    pub r_out: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl SampleGrid {
    pub fn new(r_in: f64, r_out: f64, n_r: usize, n_theta: usize) -> Self {
        Self { r_in, r_out, n_r, n_theta }
    }

    pub fn validate(&self, sigma: f64) -> Result<()> {
        if !(self.r_in >= sigma && self.r_out > self.r_in && self.r_out.is_finite()) {
            return Err(invalid(format!(
                "annulus ({}, {}) must satisfy sigma = {sigma} <= r_in < r_out",
                self.r_in, self.r_out
            )));
        }
        if self.n_r < 8 || self.n_theta < 8 {
            return Err(invalid("grid counts must be at least 8"));
        }
        Ok(())
    }

    pub fn radius(&self, i: usize) -> f64 {
        if i == self.n_r {
            return self.r_out;
        }
        self.r_in * (self.r_out / self.r_in).powf(i as f64 / self.n_r as f64)
    }

    pub fn angle(&self, j: usize) -> f64 {
        std::f64::consts::TAU * j as f64 / self.n_theta as f64
    }

    /// Points in (radius, angle) order.
    pub fn points(&self) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(self.n_r * self.n_theta);
        for i in 1..=self.n_r {
            let r = self.radius(i);
            for j in 0..self.n_theta {
                out.push(polar(r, self.angle(j)));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "certified-on-sample")]
    CertifiedOnSample,
    #[serde(rename = "violated")]
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub x: f64,
    pub y: f64,
    pub mu: f64,
    pub re1: f64,
    pub im1: f64,
    pub re2: f64,
    pub im2: f64,
}

impl Witness {
    fn new(z: Vec2, mu: f64, s: &Spectrum2) -> Self {
        Self {
            x: z[0],
            y: z[1],
            mu,
            re1: s.lambda1.re,
            im1: s.lambda1.im,
            re2: s.lambda2.re,
            im2: s.lambda2.im,
        }
    }
}

pub const MAX_WITNESSES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub field: String,
    pub class: SpectralClass,
    pub mu: f64,
    pub verdict: Verdict,
    pub grid: SampleGrid,
    pub points_checked: usize,
    pub violation_count: usize,
    pub witnesses: Vec<Witness>,
}

/// Absolute tolerance for "real part is zero", scaled by the entries.
fn zero_tol(m: &Mat2) -> f64 {
    let scale = m.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    1e-10 * scale
}

/// `true` when the spectrum avoids the origin: eigenvalues with real part
/// within tolerance of zero must have modulus above 1e-10.
fn avoids_origin(s: &Spectrum2, tol: f64) -> bool {
    [s.lambda1, s.lambda2].iter().all(|l| l.re.abs() > tol || l.norm() > 1e-10)
}

/// Pointwise class predicate on a Jacobian. `Dissipative` is strict here:
/// a zero-trace sample has positive sampled area fraction, so it cannot be
/// part of a measure-zero exceptional set.
pub fn satisfies(class: &SpectralClass, m: &Mat2) -> Result<bool> {
    let s = eigs2(m)?;
    let tol = zero_tol(m);
    Ok(match class {
        SpectralClass::Dissipative => trace(m) < -tol && det(m) > 0.0 && avoids_origin(&s, tol),
        SpectralClass::PositiveDeterminant | SpectralClass::DetPositiveOnInterval { .. } => {
            det(m) > 0.0
        }
        SpectralClass::FreeRealEigenvalues => {
            [s.lambda1, s.lambda2].iter().all(|l| l.re.abs() <= tol) && avoids_origin(&s, tol)
        }
    })
}

fn class_mus(class: &SpectralClass, mu: f64) -> Result<Vec<f64>> {
    match *class {
        SpectralClass::DetPositiveOnInterval { mu_lo, mu_hi, samples } => {
            if !(mu_hi > mu_lo) || samples == 0 {
                return Err(invalid("mu interval must be nonempty with at least one sample"));
            }
            // Interior points of the open interval.
            Ok((1..=samples)
                .map(|k| mu_lo + (mu_hi - mu_lo) * k as f64 / (samples + 1) as f64)
                .collect())
        }
        _ => Ok(vec![mu]),
    }
}

/// Checks the class predicate at every grid point and collects violations
/// (at most [`MAX_WITNESSES`] kept, in (mu, radius, angle) order).
pub fn certify_class(
    field: &dyn VectorField,
    mu: f64,
    grid: &SampleGrid,
    class: SpectralClass,
) -> Result<SpectralReport> {
    grid.validate(field.sigma())?;
    let mus = class_mus(&class, mu)?;
    let points = grid.points();
    let mut witnesses = Vec::new();
    let mut violation_count = 0;
    for &m in &mus {
        let checked: Vec<Result<Option<Witness>>> = points
            .par_iter()
            .map(|&z| {
                let jet = field.jet(z, m)?;
                if satisfies(&class, &jet.jacobian)? {
                    Ok(None)
                } else {
                    Ok(Some(Witness::new(z, m, &eigs2(&jet.jacobian)?)))
                }
            })
            .collect();
        for w in checked {
            if let Some(w) = w? {
                violation_count += 1;
                if witnesses.len() < MAX_WITNESSES {
                    witnesses.push(w);
                }
            }
        }
    }
    Ok(SpectralReport {
        field: field.name().to_string(),
        class,
        mu,
        verdict: if violation_count == 0 { Verdict::CertifiedOnSample } else { Verdict::Violated },
        grid: *grid,
        points_checked: points.len() * mus.len(),
        violation_count,
        witnesses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftCheck {
    pub passed: bool,
    pub samples: usize,
    pub max_deviation: f64,
    /// `(x, y, mu)` of the largest deviation.
    pub worst: Option<[f64; 3]>,
}

pub const SHIFT_TOLERANCE: f64 = 1e-9;

fn pair_deviation(a: &Spectrum2, b: &Spectrum2) -> f64 {
    let direct = (a.lambda1 - b.lambda1).norm().max((a.lambda2 - b.lambda2).norm());
    let swapped = (a.lambda1 - b.lambda2).norm().max((a.lambda2 - b.lambda1).norm());
    direct.min(swapped)
}

/// Compares `Spc(DX_mu(z))` with `mu + Spc(DX_0(z))` at seeded random
/// `(z, mu)`, `sigma < |z| < 20 sigma`, `|mu| <= 2`.
pub fn spectrum_shift_check(field: &dyn VectorField, samples: usize, seed: u64) -> Result<ShiftCheck> {
    if samples == 0 {
        return Err(invalid("samples must be at least 1"));
    }
    let sigma = field.sigma();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(Vec2, f64)> = (0..samples)
        .map(|_| {
            let r = sigma * 1.05 * (20.0f64 / 1.05).powf(rng.gen());
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            let mu = rng.gen_range(-2.0..=2.0);
            (polar(r, th), mu)
        })
        .collect();
    let mut max_deviation = 0.0;
    let mut worst = None;
    for (z, mu) in draws {
        let shifted = eigs2(&field.jet(z, mu)?.jacobian)?;
        let base = eigs2(&field.jet(z, 0.0)?.jacobian)?;
        let moved = Spectrum2 {
            lambda1: base.lambda1 + mu,
            lambda2: base.lambda2 + mu,
        };
        let dev = pair_deviation(&shifted, &moved);
        if dev > max_deviation || worst.is_none() {
            max_deviation = dev;
            worst = Some([z[0], z[1], mu]);
        }
    }
    Ok(ShiftCheck { passed: max_deviation < SHIFT_TOLERANCE, samples, max_deviation, worst })
}

/// Compact per-sample summary used by parameter sweeps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub class: SpectralClass,
    pub verdict: Verdict,
    pub violation_count: usize,
    pub max_trace: f64,
    pub min_det: f64,
}

pub fn summarize(field: &dyn VectorField, mu: f64, grid: &SampleGrid) -> Result<SpectralSummary> {
    let report = certify_class(field, mu, grid, SpectralClass::PositiveDeterminant)?;
    let jac: Vec<Result<Mat2>> = grid
        .points()
        .par_iter()
        .map(|&z| Ok(field.jet(z, mu)?.jacobian))
        .collect();
    let mut max_trace = f64::NEG_INFINITY;
    let mut min_det = f64::INFINITY;
    for m in jac {
        let m = m?;
        max_trace = max_trace.max(trace(&m));
        min_det = min_det.min(det(&m));
    }
    Ok(SpectralSummary {
        class: report.class,
        verdict: report.verdict,
        violation_count: report.violation_count,
        max_trace,
        min_det,
    })
}
