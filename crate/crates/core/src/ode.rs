//! Dormand-Prince 5(4) integration of `z' = +/- X_mu(z)` outside the disk,
//! with escape, inner-radius, stall and loop-closure termination.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{norm, Vec2, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Which vector field the integrator follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeScale {
    /// `X_mu` itself.
    True,
    /// `(1 + |z|) X_mu / |X_mu|`: same oriented orbits, speed comparable to
    /// the radius everywhere.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowControls {
    pub rtol: f64,
    pub atol: f64,
    pub t_max: f64,
    pub escape_radius: f64,
    /// `None` means `1.01 * sigma`.
    pub inner_radius: Option<f64>,
    pub max_steps: usize,
    pub time_scale: TimeScale,
    pub detect_loops: bool,
}

impl Default for FlowControls {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            t_max: 200.0,
            escape_radius: 1e3,
            inner_radius: None,
            max_steps: 1_000_000,
            time_scale: TimeScale::True,
            detect_loops: true,
        }
    }
}

impl FlowControls {
    pub fn inner_radius_for(&self, sigma: f64) -> f64 {
        self.inner_radius.unwrap_or(1.01 * sigma)
    }

    fn validate(&self, sigma: f64) -> Result<()> {
        let inner = self.inner_radius_for(sigma);
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.t_max > 0.0 && self.escape_radius > inner) {
            return Err(invalid("flow controls must be positive with escape_radius > inner_radius"));
        }
        if !(inner >= sigma) {
            return Err(invalid(format!("inner_radius {inner} must be >= sigma = {sigma}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "cause")]
pub enum Termination {
    Escaped,
    InnerRadius,
    Stalled,
    TimeLimit,
    LoopClosure { period: f64, mean_radius: f64, min_radius: f64, max_radius: f64 },
    StepCollapse,
    StepBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub direction: Direction,
    pub times: Vec<f64>,
    pub points: Vec<Vec2>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_point(&self) -> Vec2 {
        *self.points.last().expect("trajectory has its initial point")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has its initial time")
    }

    /// `t,x,y` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y\n");
        for (t, p) in self.times.iter().zip(&self.points) {
            s.push_str(&format!("{t},{},{}\n", p[0], p[1]));
        }
        s
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(z: Vec2, terms: &[(f64, Vec2)], h: f64) -> Vec2 {
    let mut out = z;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

struct Rhs<'a> {
    field: &'a dyn VectorField,
    mu: f64,
    sign: f64,
    scale: TimeScale,
}

impl Rhs<'_> {
    fn eval(&self, z: Vec2) -> Result<Vec2> {
        let v = self.field.eval(z, self.mu)?;
        let s = match self.scale {
            TimeScale::True => self.sign,
            TimeScale::Normalized => {
                let n = norm(v);
                if n == 0.0 {
                    return Ok([0.0, 0.0]);
                }
                self.sign * (1.0 + norm(z)) / n
            }
        };
        Ok([s * v[0], s * v[1]])
    }
}

fn wrap(a: f64) -> f64 {
    let a = a % TAU;
    if a > PI {
        a - TAU
    } else if a <= -PI {
        a + TAU
    } else {
        a
    }
}

fn hermite(z0: Vec2, f0: Vec2, z1: Vec2, f1: Vec2, h: f64, s: f64) -> Vec2 {
    let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
    let h10 = s.powi(3) - 2.0 * s * s + s;
    let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
    let h11 = s.powi(3) - s * s;
    [
        h00 * z0[0] + h10 * h * f0[0] + h01 * z1[0] + h11 * h * f1[0],
        h00 * z0[1] + h10 * h * f0[1] + h01 * z1[1] + h11 * h * f1[1],
    ]
}

/// Crossing state for loop closure: polar angle of `z0` is the section.
struct LoopTracker {
    theta0: f64,
    // Accumulated angle since z0 and the section level last crossed.
    unwrapped: f64,
    level: f64,
    eps: f64,
    last_point: Vec2,
    last_velocity: Vec2,
    last_time: f64,
    // Time integral of the radius, min and max radius since the last crossing.
    radius_integral: f64,
    min_r: f64,
    max_r: f64,
}

pub fn integrate(
    field: &dyn VectorField,
    mu: f64,
    z0: Vec2,
    direction: Direction,
    controls: &FlowControls,
) -> Result<Trajectory> {
    let sigma = field.sigma();
    controls.validate(sigma)?;
    let inner = controls.inner_radius_for(sigma);
    let r0 = norm(z0);
    if !(r0 > sigma) {
        return Err(Error::DomainViolation { x: z0[0], y: z0[1], sigma });
    }
    let rhs = Rhs { field, mu, sign: direction.sign(), scale: controls.time_scale };
    let mut traj = Trajectory {
        direction,
        times: vec![0.0],
        points: vec![z0],
        termination: Termination::TimeLimit,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    if r0 > controls.escape_radius {
        traj.termination = Termination::Escaped;
        return Ok(traj);
    }
    if r0 < inner {
        traj.termination = Termination::InnerRadius;
        return Ok(traj);
    }

    let mut z = z0;
    let mut t = 0.0;
    let mut k1 = rhs.eval(z)?;
    let mut loops = LoopTracker {
        theta0: z0[1].atan2(z0[0]),
        unwrapped: 0.0,
        level: 0.0,
        eps: 1e-6 * (1.0 + r0),
        last_point: z0,
        last_velocity: k1,
        last_time: 0.0,
        radius_integral: 0.0,
        min_r: r0,
        max_r: r0,
    };
    let speed0 = norm(k1);
    if speed0 < 1e-10 * (1.0 + r0) {
        traj.termination = Termination::Stalled;
        return Ok(traj);
    }
    let mut h = (0.01 * (1.0 + r0) / speed0).min(controls.t_max);
    let mut near_disk = false;

    loop {
        if traj.accepted_steps >= controls.max_steps {
            traj.termination = Termination::StepBudget;
            return Ok(traj);
        }
        if t >= controls.t_max {
            traj.termination = Termination::TimeLimit;
            return Ok(traj);
        }
        h = h.min(controls.t_max - t);
        if h <= 1e-13 * (1.0 + t.abs()) {
            traj.termination = if near_disk { Termination::InnerRadius } else { Termination::StepCollapse };
            return Ok(traj);
        }
        let step = (|| -> Result<(Vec2, Vec2, f64)> {
            let k2 = rhs.eval(axpy(z, &[(A21, k1)], h))?;
            let k3 = rhs.eval(axpy(z, &[(A31, k1), (A32, k2)], h))?;
            let k4 = rhs.eval(axpy(z, &[(A41, k1), (A42, k2), (A43, k3)], h))?;
            let k5 = rhs.eval(axpy(z, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h))?;
            let k6 = rhs.eval(axpy(z, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], h))?;
            let z1 = axpy(z, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)], h);
            let k7 = rhs.eval(z1)?;
            let mut acc = 0.0;
            for i in 0..2 {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = controls.atol + controls.rtol * z[i].abs().max(z1[i].abs());
                acc += (e / sc).powi(2);
            }
            Ok((z1, k7, (acc / 2.0).sqrt()))
        })();
        let (z1, k7, err) = match step {
            Ok(v) => v,
            Err(Error::DomainViolation { .. }) => {
                near_disk = true;
                traj.rejected_steps += 1;
                h *= 0.25;
                continue;
            }
            Err(e) => return Err(e),
        };
        let dtheta = wrap(z1[1].atan2(z1[0]) - z[1].atan2(z[0]));
        if !(err <= 1.0) || dtheta.abs() > PI / 4.0 {
            traj.rejected_steps += 1;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
            h *= if dtheta.abs() > PI / 4.0 { factor.min(0.5) } else { factor };
            continue;
        }

        // Accepted.
        near_disk = false;
        let t1 = t + h;
        let r1 = norm(z1);
        if controls.detect_loops {
            let unwrapped1 = loops.unwrapped + dtheta;
            let m = (unwrapped1 / TAU).round();
            let level = m * TAU;
            let ra = norm(z);
            let crossed = m != loops.level
                && loops.unwrapped != level
                && (loops.unwrapped - level) * (unwrapped1 - level) <= 0.0;
            if crossed {
                // Crossing of the section theta0 + 2 pi m inside this step.
                let g = |s: f64| {
                    let p = hermite(z, k1, z1, k7, h, s);
                    wrap(p[1].atan2(p[0]) - loops.theta0)
                };
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                let glo = g(lo);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if (g(mid) > 0.0) == (glo > 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let s = 0.5 * (lo + hi);
                let zc = hermite(z, k1, z1, k7, h, s);
                let vc = rhs.eval(zc).unwrap_or(k7);
                let tc = t + s * h;
                let rc = norm(zc);
                loops.radius_integral += 0.5 * (ra + rc) * s * h;
                loops.min_r = loops.min_r.min(rc);
                loops.max_r = loops.max_r.max(rc);
                let dist = norm([zc[0] - loops.last_point[0], zc[1] - loops.last_point[1]]);
                let cos = (vc[0] * loops.last_velocity[0] + vc[1] * loops.last_velocity[1])
                    / (norm(vc) * norm(loops.last_velocity));
                let period = tc - loops.last_time;
                if dist <= loops.eps && cos > 0.999 && period > 0.0 {
                    traj.times.push(tc);
                    traj.points.push(zc);
                    traj.accepted_steps += 1;
                    traj.termination = Termination::LoopClosure {
                        period,
                        mean_radius: loops.radius_integral / period,
                        min_radius: loops.min_r,
                        max_radius: loops.max_r,
                    };
                    return Ok(traj);
                }
                loops.level = m;
                loops.last_point = zc;
                loops.last_velocity = vc;
                loops.last_time = tc;
                loops.radius_integral = 0.5 * (rc + r1) * (1.0 - s) * h;
                loops.min_r = rc.min(r1);
                loops.max_r = rc.max(r1);
            } else {
                loops.radius_integral += 0.5 * (ra + r1) * h;
                loops.min_r = loops.min_r.min(r1);
                loops.max_r = loops.max_r.max(r1);
            }
            loops.unwrapped = unwrapped1;
        }
        t = t1;
        z = z1;
        k1 = k7;
        traj.times.push(t);
        traj.points.push(z);
        traj.accepted_steps += 1;

        if r1 > controls.escape_radius {
            traj.termination = Termination::Escaped;
            return Ok(traj);
        }
        if r1 < inner {
            traj.termination = Termination::InnerRadius;
            return Ok(traj);
        }
        if norm(k1) < 1e-10 * (1.0 + r1) {
            traj.termination = Termination::Stalled;
            return Ok(traj);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
}
