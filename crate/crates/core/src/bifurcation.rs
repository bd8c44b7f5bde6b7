//! Parameter sweeps, reversal detection, bracket bisection, hypothesis
//! audits and verdict comparison under rescaling of the family.
//!
//! Sign rule: a positive index at infinity goes with an attractor at
//! infinity and a negative one with a repellor. A sweep that observes a
//! decided sample breaking the rule is reported `Inconsistent` as a whole.

use rayon::prelude::*;
use serde::Serialize;

use crate::controls::Controls;
use crate::error::{invalid, Error, Result};
use crate::field::{norm, Scale, ScaledField, VectorField};
use crate::flow::{certify_infinity_stability, StabilityVerdict};
use crate::flux::{flux, index_at_infinity, speed_integral_check, winding_number, IndexClass, SpeedVerdict};
use crate::spectral::{certify_class, summarize, SpectralClass, SpectralSummary, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSummary {
    pub class: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<f64>,
    pub sign: Option<i8>,
    pub flux_at_max_radius: f64,
    pub fit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySummary {
    pub verdict: StabilityVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub certified_radii: Vec<f64>,
    pub probes: usize,
}

/// Sampling certificate: minimum of `|X_mu|` over a dense polar grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityFree {
    pub annulus: [f64; 2],
    pub min_speed: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingSample {
    pub radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winding: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poincare_index_at_infinity: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuSample {
    pub mu: f64,
    pub index: Option<IndexSummary>,
    pub stability: Option<StabilitySummary>,
    pub spectral: Option<SpectralSummary>,
    pub singularity_free: Option<SingularityFree>,
    pub speed_integral: Option<SpeedVerdict>,
    pub winding: Vec<WindingSample>,
    /// Failures of individual analyses, prefixed by the analysis name.
    pub errors: Vec<String>,
}

impl MuSample {
    pub fn index_sign(&self) -> Option<i8> {
        self.index.as_ref().and_then(|i| i.sign)
    }

    pub fn verdict(&self) -> StabilityVerdict {
        self.stability.as_ref().map_or(StabilityVerdict::Undetermined, |s| s.verdict)
    }

    pub fn is_singularity_free(&self) -> bool {
        self.singularity_free.as_ref().is_some_and(|s| s.passed)
    }
}

fn record<T>(errors: &mut Vec<String>, what: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{what}: {e}"));
            None
        }
    }
}

pub fn singularity_free_check(field: &dyn VectorField, mu: f64, controls: &Controls) -> Result<SingularityFree> {
    let grid = controls.singularity.grid(field.sigma());
    grid.validate(field.sigma())?;
    let speeds: Vec<Result<f64>> =
        grid.points().par_iter().map(|&z| Ok(norm(field.eval(z, mu)?))).collect();
    let mut min_speed = f64::INFINITY;
    for s in speeds {
        min_speed = min_speed.min(s?);
    }
    Ok(SingularityFree { annulus: [grid.r_in, grid.r_out], min_speed, passed: min_speed > 0.0 })
}

pub fn evaluate_sample(field: &dyn VectorField, mu: f64, controls: &Controls) -> MuSample {
    let sigma = field.sigma();
    let mut errors = vec![];
    let schedule = controls.index.schedule(sigma);
    let index = record(
        &mut errors,
        "index",
        index_at_infinity(field, mu, &schedule, &controls.index, &controls.quadrature),
    )
    .map(|est| {
        let (value, uncertainty) = match est.classification {
            IndexClass::Finite { value, uncertainty } => (Some(value), Some(uncertainty)),
            _ => (None, None),
        };
        IndexSummary {
            class: est.classification.label(),
            value,
            uncertainty,
            sign: est.classification.sign(),
            flux_at_max_radius: *est.evidence.flux.last().unwrap_or(&f64::NAN),
            fit: est.fit,
        }
    });
    let stability = record(&mut errors, "stability", certify_infinity_stability(field, mu, &controls.stability)).map(
        |s| StabilitySummary {
            verdict: s.verdict,
            reason: s.reason,
            certified_radii: s.certified_radii,
            probes: s.trajectory_evidence.len(),
        },
    );
    let spectral = record(&mut errors, "spectral", summarize(field, mu, &controls.spectral.grid(sigma)));
    let singularity_free = record(&mut errors, "singularity_free", singularity_free_check(field, mu, controls));
    let speed_integral = record(
        &mut errors,
        "speed_integral",
        speed_integral_check(field, mu, &schedule, controls.speed_tail_window),
    )
    .map(|c| c.verdict);
    let winding = controls
        .winding_factors
        .iter()
        .map(|f| {
            let radius = f * sigma;
            match winding_number(field, mu, radius) {
                Ok(w) => WindingSample {
                    radius,
                    winding: Some(w.winding),
                    poincare_index_at_infinity: Some(w.poincare_index_at_infinity),
                    error: None,
                },
                Err(e) => WindingSample {
                    radius,
                    winding: None,
                    poincare_index_at_infinity: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    MuSample { mu, index, stability, spectral, singularity_free, speed_integral, winding, errors }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// Repellor below the bracket, attractor above.
    RepellorToAttractor,
    /// The reverse; flagged because the definition expects the other order.
    AttractorToRepellor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum SweepVerdict {
    HopfAtInfinityDetected { mu_star: f64, bracket: [f64; 2], width: f64, orientation: Orientation },
    NoReversalFound { reason: String },
    Inconsistent { details: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    CertifiedOnSample,
    Violated,
    Assumed,
    /// Numerically checked without a decision either way.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub theorem: &'static str,
    pub hypothesis: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationReport {
    pub field: String,
    pub mu_samples: Vec<MuSample>,
    pub verdict: SweepVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_star: Option<f64>,
    pub audit: Vec<AuditRow>,
}

impl BifurcationReport {
    /// `mu,index_sign,stability` lines with a header; undecided signs are 0.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mu,index_sign,stability\n");
        for m in &self.mu_samples {
            s.push_str(&format!("{},{},{:?}\n", m.mu, m.index_sign().unwrap_or(0), m.verdict()));
        }
        s
    }
}

fn sorted_mus(mu_values: &[f64]) -> Result<Vec<f64>> {
    if mu_values.iter().any(|m| !m.is_finite()) {
        return Err(invalid("mu values must be finite"));
    }
    let mut mus = mu_values.to_vec();
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    if mus.len() < 3 {
        return Err(invalid(format!("a sweep needs at least 3 distinct mu values, got {}", mus.len())));
    }
    Ok(mus)
}

/// Verdict from ordered samples: sign-rule contradictions first, then the
/// first sign flip between consecutive decided samples.
pub fn assess(samples: &[MuSample]) -> SweepVerdict {
    let details: Vec<String> = samples
        .iter()
        .filter_map(|s| {
            let (i, v) = (s.index_sign()?, s.verdict().sign()?);
            (i != v).then(|| format!("mu = {}: index sign {i:+} but stability {:?}", s.mu, s.verdict()))
        })
        .collect();
    if !details.is_empty() {
        return SweepVerdict::Inconsistent { details };
    }
    let decided: Vec<(usize, &MuSample)> =
        samples.iter().enumerate().filter(|(_, s)| s.verdict() != StabilityVerdict::Undetermined).collect();
    if decided.is_empty() {
        return SweepVerdict::NoReversalFound { reason: "no sample has a decided stability verdict".into() };
    }
    for w in decided.windows(2) {
        let ((ia, a), (ib, b)) = (w[0], w[1]);
        if a.verdict() == b.verdict() {
            continue;
        }
        if let Some(bad) = samples[ia..=ib].iter().find(|s| !s.is_singularity_free()) {
            return SweepVerdict::NoReversalFound {
                reason: format!(
                    "stability flips between mu = {} and mu = {} but mu = {} has no singularity-free certificate",
                    a.mu, b.mu, bad.mu
                ),
            };
        }
        let orientation = if a.verdict() == StabilityVerdict::Repellor {
            Orientation::RepellorToAttractor
        } else {
            Orientation::AttractorToRepellor
        };
        return SweepVerdict::HopfAtInfinityDetected {
            mu_star: 0.5 * (a.mu + b.mu),
            bracket: [a.mu, b.mu],
            width: b.mu - a.mu,
            orientation,
        };
    }
    SweepVerdict::NoReversalFound {
        reason: format!("every decided sample is {:?}", decided[0].1.verdict()),
    }
}

/// Evaluates every mu concurrently and assembles the report in mu order.
/// With `refine_tol`, a detected bracket is narrowed by
/// [`locate_bifurcation`].
pub fn sweep(
    field: &dyn VectorField,
    mu_values: &[f64],
    controls: &Controls,
    refine_tol: Option<f64>,
) -> Result<BifurcationReport> {
    controls.validate()?;
    let mus = sorted_mus(mu_values)?;
    let samples: Vec<MuSample> = mus.par_iter().map(|&mu| evaluate_sample(field, mu, controls)).collect();
    let mut verdict = assess(&samples);
    if let (Some(tol), SweepVerdict::HopfAtInfinityDetected { bracket, orientation, .. }) = (refine_tol, &verdict) {
        let loc = locate_bifurcation(field, (bracket[0], bracket[1]), tol, controls)?;
        verdict = SweepVerdict::HopfAtInfinityDetected {
            mu_star: loc.mu_star,
            bracket: loc.bracket,
            width: loc.width,
            orientation: *orientation,
        };
    }
    let mu_star = match verdict {
        SweepVerdict::HopfAtInfinityDetected { mu_star, .. } => Some(mu_star),
        _ => None,
    };
    let audit = index_criterion_rows(&samples);
    Ok(BifurcationReport { field: field.name().to_string(), mu_samples: samples, verdict, mu_star, audit })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionSource {
    Stability,
    FluxSign,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub mu: f64,
    pub sign: Option<i8>,
    pub source: DecisionSource,
}

/// Stability sign, else the sign of the flux at the largest index radius
/// when it exceeds twice its quadrature error.
pub fn decide(field: &dyn VectorField, mu: f64, controls: &Controls) -> Result<Decision> {
    let s = certify_infinity_stability(field, mu, &controls.stability)?;
    if let Some(sign) = s.verdict.sign() {
        return Ok(Decision { mu, sign: Some(sign), source: DecisionSource::Stability });
    }
    let r = controls.index.schedule(field.sigma()).last();
    let phi = flux(field, mu, r, &controls.quadrature)?;
    if phi.value.abs() > 2.0 * phi.error {
        let sign = if phi.value > 0.0 { 1 } else { -1 };
        return Ok(Decision { mu, sign: Some(sign), source: DecisionSource::FluxSign });
    }
    Ok(Decision { mu, sign: None, source: DecisionSource::Undecided })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocateStep {
    pub bracket: [f64; 2],
    pub decisions: Vec<Decision>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocateResult {
    pub field: String,
    pub mu_star: f64,
    pub bracket: [f64; 2],
    pub width: f64,
    pub iterations: usize,
    pub steps: Vec<LocateStep>,
}

/// Bisection on the stability verdict. An undecided midpoint falls back to
/// the flux sign; if that is undecided too, the quarter points are decided
/// and the tightest sign flip among the decided points is kept. The bracket
/// width strictly decreases every iteration.
pub fn locate_bifurcation(
    field: &dyn VectorField,
    bracket: (f64, f64),
    tol: f64,
    controls: &Controls,
) -> Result<LocateResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Bracket(format!("({lo}, {hi}) is not an increasing finite bracket")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    let ends = [lo, hi].map(|m| certify_infinity_stability(field, m, &controls.stability).map(|s| s.verdict));
    let [v_lo, v_hi] = ends;
    let (v_lo, v_hi) = (v_lo?, v_hi?);
    let (Some(s_lo), Some(s_hi)) = (v_lo.sign(), v_hi.sign()) else {
        return Err(Error::Bracket(format!("endpoint stability undecided: {v_lo:?} at {lo}, {v_hi:?} at {hi}")));
    };
    if s_lo == s_hi {
        return Err(Error::Bracket(format!("both endpoints are {v_lo:?}")));
    }
    let mut steps = vec![];
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations >= controls.locate_max_iter {
            return Err(Error::BudgetExhausted(format!(
                "bracket ({lo}, {hi}) after {iterations} iterations"
            )));
        }
        iterations += 1;
        let width = hi - lo;
        let mid = 0.5 * (lo + hi);
        let d = decide(field, mid, controls)?;
        let mut decisions = vec![d];
        match d.sign {
            Some(s) if s == s_lo => lo = mid,
            Some(_) => hi = mid,
            None => {
                let q1 = decide(field, 0.5 * (lo + mid), controls)?;
                let q3 = decide(field, 0.5 * (mid + hi), controls)?;
                decisions.extend([q1, q3]);
                let pts: Vec<(f64, i8)> = [(lo, Some(s_lo)), (q1.mu, q1.sign), (q3.mu, q3.sign), (hi, Some(s_hi))]
                    .into_iter()
                    .filter_map(|(m, s)| s.map(|s| (m, s)))
                    .collect();
                let best = pts
                    .windows(2)
                    .filter(|w| w[0].1 != w[1].1)
                    .min_by(|a, b| (a[1].0 - a[0].0).total_cmp(&(b[1].0 - b[0].0)))
                    .map(|w| (w[0].0, w[1].0));
                if let Some((a, b)) = best {
                    lo = a;
                    hi = b;
                }
            }
        }
        steps.push(LocateStep { bracket: [lo, hi], decisions });
        if !(hi - lo < width) {
            return Err(Error::BudgetExhausted(format!(
                "no decidable point in ({lo}, {hi}); bracket cannot shrink"
            )));
        }
    }
    Ok(LocateResult {
        field: field.name().to_string(),
        mu_star: 0.5 * (lo + hi),
        bracket: [lo, hi],
        width: hi - lo,
        iterations,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisSet {
    /// Almost-integrable divergence, divergent minimum-speed integral,
    /// `mu * I > 0`, no singularities near infinity and Poincare index at
    /// infinity at most 1.
    IndexCriterion,
    /// Dissipative field with positive Jacobian determinant, determinant
    /// positive for small positive mu, bounded extension radii, negative
    /// semi-flow and `mu * I > 0` for positive mu.
    DissipativeFamily,
    /// Purely imaginary nonzero spectrum plus bounded extension radii.
    FreeRealEigenvalues,
}

impl HypothesisSet {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "index-criterion" => Ok(Self::IndexCriterion),
            "dissipative-family" => Ok(Self::DissipativeFamily),
            "free-real-eigenvalues" => Ok(Self::FreeRealEigenvalues),
            _ => Err(invalid(format!(
                "unknown hypothesis set '{name}' (index-criterion, dissipative-family, free-real-eigenvalues)"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::IndexCriterion => "index-criterion",
            Self::DissipativeFamily => "dissipative-family",
            Self::FreeRealEigenvalues => "free-real-eigenvalues",
        }
    }
}

fn row(set: HypothesisSet, hypothesis: &str, mu: Option<f64>, status: Status, witness: Option<String>) -> AuditRow {
    AuditRow { theorem: set.label(), hypothesis: hypothesis.to_string(), mu, status, witness }
}

fn assumed(set: HypothesisSet, hypothesis: &str) -> AuditRow {
    row(set, hypothesis, None, Status::Assumed, Some("not numerically checkable".into()))
}

fn index_sign_row(set: HypothesisSet, s: &MuSample) -> AuditRow {
    let hyp = "mu * index at infinity > 0";
    match &s.index {
        Some(i) => match i.sign {
            Some(sign) if f64::from(sign) * s.mu > 0.0 => row(set, hyp, Some(s.mu), Status::CertifiedOnSample, None),
            Some(_) => row(
                set,
                hyp,
                Some(s.mu),
                Status::Violated,
                Some(format!("index {} with flux(r_max) = {}", i.class, i.flux_at_max_radius)),
            ),
            None => row(set, hyp, Some(s.mu), Status::Inconclusive, Some(format!("index {}", i.class))),
        },
        None => row(set, hyp, Some(s.mu), Status::Inconclusive, Some(s.errors.join("; "))),
    }
}

/// Index-criterion rows from already evaluated samples; `mu = 0` samples
/// are skipped since the sign condition concerns `mu != 0`.
pub fn index_criterion_rows(samples: &[MuSample]) -> Vec<AuditRow> {
    let set = HypothesisSet::IndexCriterion;
    let mut rows = vec![assumed(set, "divergence is almost-integrable outside the disk")];
    for s in samples.iter().filter(|s| s.mu != 0.0) {
        let hyp = "integral of the minimum speed over radii diverges";
        rows.push(match s.speed_integral {
            Some(SpeedVerdict::DivergenceSupported) => {
                row(set, hyp, Some(s.mu), Status::CertifiedOnSample, Some("heuristic tail test".into()))
            }
            Some(SpeedVerdict::Inconclusive) => row(set, hyp, Some(s.mu), Status::Inconclusive, None),
            None => row(set, hyp, Some(s.mu), Status::Inconclusive, Some(s.errors.join("; "))),
        });
        rows.push(index_sign_row(set, s));
        let hyp = "no singularities outside the disk";
        rows.push(match &s.singularity_free {
            Some(c) if c.passed => row(
                set,
                hyp,
                Some(s.mu),
                Status::CertifiedOnSample,
                Some(format!("min speed {} on annulus ({}, {})", c.min_speed, c.annulus[0], c.annulus[1])),
            ),
            Some(c) => row(set, hyp, Some(s.mu), Status::Violated, Some(format!("min speed {}", c.min_speed))),
            None => row(set, hyp, Some(s.mu), Status::Inconclusive, Some(s.errors.join("; "))),
        });
        let hyp = "Poincare index at infinity <= 1";
        let bad = s.winding.iter().find(|w| w.poincare_index_at_infinity.is_some_and(|p| p > 1));
        let undecided = s.winding.iter().find(|w| w.poincare_index_at_infinity.is_none());
        let listing = s
            .winding
            .iter()
            .map(|w| match w.poincare_index_at_infinity {
                Some(p) => format!("r = {}: {p}", w.radius),
                None => format!("r = {}: undefined", w.radius),
            })
            .collect::<Vec<_>>()
            .join(", ");
        rows.push(if bad.is_some() {
            row(set, hyp, Some(s.mu), Status::Violated, Some(listing))
        } else if undecided.is_some() || s.winding.is_empty() {
            row(set, hyp, Some(s.mu), Status::Inconclusive, Some(listing))
        } else {
            row(set, hyp, Some(s.mu), Status::CertifiedOnSample, Some(listing))
        });
    }
    rows
}

fn spectral_row(
    set: HypothesisSet,
    hypothesis: &str,
    field: &dyn VectorField,
    mu: f64,
    class: SpectralClass,
    controls: &Controls,
) -> Result<AuditRow> {
    let grid = controls.spectral.grid(field.sigma());
    let rep = certify_class(field, mu, &grid, class)?;
    let annulus = format!("annulus ({}, {}), {} points", grid.r_in, grid.r_out, rep.points_checked);
    Ok(match rep.verdict {
        Verdict::CertifiedOnSample => row(set, hypothesis, Some(mu), Status::CertifiedOnSample, Some(annulus)),
        Verdict::Violated => {
            let w = &rep.witnesses[0];
            row(
                set,
                hypothesis,
                Some(mu),
                Status::Violated,
                Some(format!(
                    "{} violations on {annulus}; first at ({}, {}) mu = {}: eigenvalues {}{:+}i, {}{:+}i",
                    rep.violation_count, w.x, w.y, w.mu, w.re1, w.im1, w.re2, w.im2
                )),
            )
        }
    })
}

/// Per-hypothesis status table. `mu_values` supplies the parameters for
/// sign conditions; the determinant interval is `(0, max positive mu)`.
pub fn audit_hypotheses(
    field: &dyn VectorField,
    mu_values: &[f64],
    set: HypothesisSet,
    controls: &Controls,
) -> Result<Vec<AuditRow>> {
    controls.validate()?;
    if mu_values.is_empty() || mu_values.iter().any(|m| !m.is_finite()) {
        return Err(invalid("audit needs at least one finite mu value"));
    }
    match set {
        HypothesisSet::IndexCriterion => {
            let samples: Vec<MuSample> =
                mu_values.par_iter().map(|&mu| evaluate_sample(field, mu, controls)).collect();
            Ok(index_criterion_rows(&samples))
        }
        HypothesisSet::DissipativeFamily => {
            let mut rows = vec![spectral_row(
                set,
                "X is dissipative with positive Jacobian determinant",
                field,
                0.0,
                SpectralClass::Dissipative,
                controls,
            )?];
            rows.push(assumed(set, "X has some singularity outside the disk"));
            let eps = mu_values.iter().copied().filter(|m| *m > 0.0).fold(f64::NAN, f64::max);
            if eps.is_nan() {
                rows.push(row(
                    set,
                    "det DX_mu > 0 for mu in (0, eps0)",
                    None,
                    Status::Inconclusive,
                    Some("no positive mu supplied".into()),
                ));
            } else {
                let class = SpectralClass::DetPositiveOnInterval {
                    mu_lo: 0.0,
                    mu_hi: eps,
                    samples: controls.interval_samples,
                };
                let mut r = spectral_row(set, "det DX_mu > 0 for mu in (0, eps0)", field, 0.0, class, controls)?;
                r.mu = None;
                r.witness = r.witness.map(|w| format!("eps0 = {eps}; {w}"));
                rows.push(r);
            }
            rows.push(assumed(set, "extension radii s_mu are bounded for small |mu|"));
            rows.push(assumed(set, "X_mu has a well defined negative semi-flow for mu > 0"));
            for &mu in mu_values.iter().filter(|m| **m > 0.0) {
                let s = evaluate_index_only(field, mu, controls);
                rows.push(index_sign_row(set, &s));
            }
            Ok(rows)
        }
        HypothesisSet::FreeRealEigenvalues => Ok(vec![
            spectral_row(
                set,
                "spectrum is purely imaginary and nonzero",
                field,
                0.0,
                SpectralClass::FreeRealEigenvalues,
                controls,
            )?,
            assumed(set, "X has some singularity outside the disk"),
            assumed(set, "extension radii s_mu are bounded for small |mu|"),
        ]),
    }
}

fn evaluate_index_only(field: &dyn VectorField, mu: f64, controls: &Controls) -> MuSample {
    let mut errors = vec![];
    let schedule = controls.index.schedule(field.sigma());
    let index = record(
        &mut errors,
        "index",
        index_at_infinity(field, mu, &schedule, &controls.index, &controls.quadrature),
    )
    .map(|est| IndexSummary {
        class: est.classification.label(),
        value: None,
        uncertainty: None,
        sign: est.classification.sign(),
        flux_at_max_radius: *est.evidence.flux.last().unwrap_or(&f64::NAN),
        fit: est.fit,
    });
    MuSample {
        mu,
        index,
        stability: None,
        spectral: None,
        singularity_free: None,
        speed_integral: None,
        winding: vec![],
        errors,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub mu: f64,
    pub h_sign: i8,
    pub base: StabilityVerdict,
    pub scaled: StabilityVerdict,
    pub expected: StabilityVerdict,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingComparison {
    pub field: String,
    pub scale: String,
    pub rows: Vec<ScalingRow>,
    pub base_verdict: SweepVerdict,
    pub scaled_verdict: SweepVerdict,
    pub bracket_unchanged: bool,
    pub passed: bool,
}

/// Sign of `h` on the singularity grid; an error if `h` vanishes or
/// changes sign there.
pub fn scale_sign(field: &dyn VectorField, scale: &Scale, mu: f64, controls: &Controls) -> Result<i8> {
    let grid = controls.singularity.grid(field.sigma());
    let mut sign = 0i8;
    for z in grid.points() {
        let h = scale.eval(z, mu);
        let s = if h > 0.0 {
            1
        } else if h < 0.0 {
            -1
        } else {
            0
        };
        if s == 0 || (sign != 0 && s != sign) {
            return Err(Error::DegenerateScale { x: z[0], y: z[1], mu });
        }
        sign = s;
    }
    Ok(sign)
}

/// Sweeps `h X_mu` and `X_mu`: decided verdicts agree where `h > 0` and
/// swap attractor and repellor where `h < 0`.
pub fn scaling_family_check(
    field: &dyn VectorField,
    scale: Scale,
    mu_values: &[f64],
    controls: &Controls,
) -> Result<ScalingComparison> {
    let mus = sorted_mus(mu_values)?;
    let signs: Vec<i8> = mus.iter().map(|&mu| scale_sign(field, &scale, mu, controls)).collect::<Result<_>>()?;
    let scaled = ScaledField::new(field, scale);
    let base = sweep(field, &mus, controls, None)?;
    let other = sweep(&scaled, &mus, controls, None)?;
    let rows: Vec<ScalingRow> = base
        .mu_samples
        .iter()
        .zip(&other.mu_samples)
        .zip(&signs)
        .map(|((b, s), &h_sign)| {
            let expected = if h_sign > 0 { b.verdict() } else { b.verdict().swapped() };
            ScalingRow { mu: b.mu, h_sign, base: b.verdict(), scaled: s.verdict(), expected, agrees: s.verdict() == expected }
        })
        .collect();
    let bracket = |v: &SweepVerdict| match v {
        SweepVerdict::HopfAtInfinityDetected { bracket, .. } => Some(*bracket),
        _ => None,
    };
    let bracket_unchanged = bracket(&base.verdict) == bracket(&other.verdict);
    let passed = rows.iter().all(|r| r.agrees);
    Ok(ScalingComparison {
        field: field.name().to_string(),
        scale: scaled.scale().label(),
        rows,
        base_verdict: base.verdict,
        scaled_verdict: other.verdict,
        bracket_unchanged,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{catalog_family, parse_field};

    fn grid6() -> Vec<f64> {
        vec![-0.2, -0.1, -0.01, 0.01, 0.1, 0.2]
    }

    #[test]
    fn linear_family_sweep_detects_reversal() {
        let rot = catalog_family("rot").unwrap();
        let rep = sweep(&rot, &grid6(), &Controls::default(), None).unwrap();
        match rep.verdict {
            SweepVerdict::HopfAtInfinityDetected { bracket, orientation, mu_star, .. } => {
                assert_eq!(bracket, [-0.01, 0.01]);
                assert_eq!(orientation, Orientation::RepellorToAttractor);
                assert_eq!(mu_star, 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(rep.mu_star, Some(0.0));
        assert!(rep.mu_samples.iter().all(|s| s.errors.is_empty()));
        assert!(rep.audit.iter().all(|r| r.status != Status::Violated));
    }

    #[test]
    fn focus_family_has_no_reversal() {
        let focus = catalog_family("focus").unwrap();
        let rep = sweep(&focus, &[-0.5, 0.0, 0.5], &Controls::default(), None).unwrap();
        assert!(matches!(rep.verdict, SweepVerdict::NoReversalFound { .. }), "{:?}", rep.verdict);
        assert!(rep.mu_samples.iter().all(|s| s.verdict() == StabilityVerdict::Repellor));
    }

    #[test]
    fn sweep_needs_three_values() {
        let rot = catalog_family("rot").unwrap();
        assert!(sweep(&rot, &[0.1, 0.1, -0.1], &Controls::default(), None).is_err());
    }

    fn sample(mu: f64, index: Option<i8>, verdict: StabilityVerdict) -> MuSample {
        MuSample {
            mu,
            index: Some(IndexSummary {
                class: "synthetic",
                value: None,
                uncertainty: None,
                sign: index,
                flux_at_max_radius: 0.0,
                fit: String::new(),
            }),
            stability: Some(StabilitySummary { verdict, reason: None, certified_radii: vec![], probes: 0 }),
            spectral: None,
            singularity_free: Some(SingularityFree { annulus: [2.0, 4.0], min_speed: 1.0, passed: true }),
            speed_integral: None,
            winding: vec![],
            errors: vec![],
        }
    }

    #[test]
    fn contradiction_is_inconsistent() {
        use StabilityVerdict::*;
        let s = vec![sample(-1.0, Some(-1), Repellor), sample(0.0, Some(1), Repellor), sample(1.0, Some(1), Attractor)];
        assert!(matches!(assess(&s), SweepVerdict::Inconsistent { details } if details.len() == 1));
    }

    #[test]
    fn reversed_orientation_is_flagged() {
        use StabilityVerdict::*;
        let s = vec![sample(-1.0, None, Attractor), sample(0.0, None, Undetermined), sample(1.0, None, Repellor)];
        match assess(&s) {
            SweepVerdict::HopfAtInfinityDetected { orientation, bracket, .. } => {
                assert_eq!(orientation, Orientation::AttractorToRepellor);
                assert_eq!(bracket, [-1.0, 1.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singular_sample_blocks_detection() {
        use StabilityVerdict::*;
        let mut s = vec![sample(-1.0, None, Repellor), sample(0.0, None, Undetermined), sample(1.0, None, Attractor)];
        s[1].singularity_free.as_mut().unwrap().passed = false;
        assert!(matches!(assess(&s), SweepVerdict::NoReversalFound { .. }));
    }

    #[test]
    fn locate_linear_family() {
        let rot = catalog_family("rot").unwrap();
        let c = Controls::default();
        let loc = locate_bifurcation(&rot, (-0.1, 0.1), 1e-6, &c).unwrap();
        assert!(loc.mu_star.abs() <= 1e-6);
        assert!(loc.width <= 1e-6);
        let widths: Vec<f64> = loc.steps.iter().map(|s| s.bracket[1] - s.bracket[0]).collect();
        assert!(widths.windows(2).all(|w| w[1] < w[0]));
        for s in &loc.steps {
            assert!(s.bracket[0] <= loc.mu_star && loc.mu_star <= s.bracket[1]);
        }
    }

    #[test]
    fn locate_shifted_family() {
        let f = parse_field("f = -y + (mu - 0.3)*x; g = x + (mu - 0.3)*y", 1.0).unwrap();
        let loc = locate_bifurcation(&f, (0.0, 1.0), 1e-6, &Controls::default()).unwrap();
        assert!((loc.mu_star - 0.3).abs() <= 1e-6, "{}", loc.mu_star);
    }

    #[test]
    fn locate_rejects_same_sign_endpoints() {
        let focus = catalog_family("focus").unwrap();
        assert!(matches!(
            locate_bifurcation(&focus, (-0.5, 0.5), 1e-6, &Controls::default()),
            Err(Error::Bracket(_))
        ));
    }

    #[test]
    fn dissipative_audit_negative_control() {
        let focus = catalog_family("focus").unwrap();
        let rows = audit_hypotheses(&focus, &[0.5], HypothesisSet::DissipativeFamily, &Controls::default()).unwrap();
        let sign = rows.iter().find(|r| r.hypothesis.starts_with("mu * index")).unwrap();
        assert_eq!(sign.status, Status::Violated);
        assert_eq!(rows[0].status, Status::CertifiedOnSample);
        assert_eq!(rows.iter().filter(|r| r.status == Status::Assumed).count(), 3);
    }

    #[test]
    fn rotinv_is_not_dissipative() {
        let f = catalog_family("rotinv").unwrap();
        let rows = audit_hypotheses(&f, &[0.1], HypothesisSet::DissipativeFamily, &Controls::default()).unwrap();
        assert_eq!(rows[0].status, Status::Violated);
        assert!(rows[0].witness.is_some());
    }

    #[test]
    fn scale_must_keep_sign() {
        let rot = catalog_family("rot").unwrap();
        let c = Controls::default();
        let h = Scale::Expr(crate::parse::parse_expr("x").unwrap());
        assert!(matches!(scale_sign(&rot, &h, 0.1, &c), Err(Error::DegenerateScale { .. })));
        assert_eq!(scale_sign(&rot, &Scale::InverseMu, -0.1, &c).unwrap(), -1);
        assert_eq!(scale_sign(&rot, &Scale::InverseMu, 0.0, &c).unwrap(), 1);
    }
}
