//! Planar vector fields on the exterior of a disk, and their families
//! `X_mu(z) = X(z) + mu z`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dual::Dual2;
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::parse;

pub type Vec2 = [f64; 2];
/// Row-major: `m[i][j] = d(component i) / d(coordinate j)`.
pub type Mat2 = [[f64; 2]; 2];

pub fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn polar(r: f64, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [r * c, r * s]
}

pub fn trace(m: &Mat2) -> f64 {
    m[0][0] + m[1][1]
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Field value and Jacobian at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jet {
    pub value: Vec2,
    pub jacobian: Mat2,
}

/// Anything that can be evaluated and differentiated on `||z|| > sigma`.
pub trait VectorField: Send + Sync {
    fn name(&self) -> &str;
    fn sigma(&self) -> f64;
    fn eval(&self, z: Vec2, mu: f64) -> Result<Vec2>;
    fn jet(&self, z: Vec2, mu: f64) -> Result<Jet>;
}

pub(crate) fn check_domain(z: Vec2, sigma: f64) -> Result<()> {
    // NaN coordinates fail the comparison and are rejected too.
    if norm(z) > sigma {
        Ok(())
    } else {
        Err(Error::DomainViolation { x: z[0], y: z[1], sigma })
    }
}

fn check_finite(z: Vec2, vals: &[f64]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { x: z[0], y: z[1] })
    }
}

/// A field given by two DSL expressions.
///
/// In family mode the expressions describe `X` alone and must not mention
/// `mu`; evaluation returns `X(z) + mu z`. In raw mode the expressions are
/// evaluated as written with `mu` substituted.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarField {
    name: String,
    sigma: f64,
    f: Expr,
    g: Expr,
    family: bool,
}

impl PlanarField {
    pub fn new(name: impl Into<String>, sigma: f64, f: Expr, g: Expr) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(Self { name: name.into(), sigma, f, g, family: false })
    }

    /// Switches to family mode, `X_mu = X + mu z`.
    pub fn into_family(mut self) -> Result<Self> {
        if self.f.uses(Var::Mu) || self.g.uses(Var::Mu) {
            return Err(Error::FamilyUsesMu(self.name));
        }
        self.family = true;
        Ok(self)
    }

    pub fn is_family(&self) -> bool {
        self.family
    }

    pub fn components(&self) -> (&Expr, &Expr) {
        (&self.f, &self.g)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// DSL source that parses back to an evaluation-identical field.
    pub fn to_source(&self) -> String {
        format!("f = {}; g = {}", self.f, self.g)
    }
}

impl VectorField for PlanarField {
    fn name(&self) -> &str {
        &self.name
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }

    fn eval(&self, z: Vec2, mu: f64) -> Result<Vec2> {
        check_domain(z, self.sigma)?;
        let m = if self.family { 0.0 } else { mu };
        let mut v = [self.f.eval(z[0], z[1], m), self.g.eval(z[0], z[1], m)];
        if self.family {
            v[0] += mu * z[0];
            v[1] += mu * z[1];
        }
        check_finite(z, &v)?;
        Ok(v)
    }

    fn jet(&self, z: Vec2, mu: f64) -> Result<Jet> {
        check_domain(z, self.sigma)?;
        let (x, y) = (Dual2::var_x(z[0]), Dual2::var_y(z[1]));
        let m = Dual2::new(if self.family { 0.0 } else { mu }, 0.0, 0.0);
        let f = self.f.eval(x, y, m);
        let g = self.g.eval(x, y, m);
        let mut jet = Jet { value: [f.re, g.re], jacobian: [[f.dx, f.dy], [g.dx, g.dy]] };
        if self.family {
            jet.value[0] += mu * z[0];
            jet.value[1] += mu * z[1];
            jet.jacobian[0][0] += mu;
            jet.jacobian[1][1] += mu;
        }
        check_finite(
            z,
            &[
                jet.value[0],
                jet.value[1],
                jet.jacobian[0][0],
                jet.jacobian[0][1],
                jet.jacobian[1][0],
                jet.jacobian[1][1],
            ],
        )?;
        Ok(jet)
    }
}

/// Parses `f = ...; g = ...` into a raw-mode field named `user`.
pub fn parse_field(source: &str, sigma: f64) -> Result<PlanarField> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSigma(sigma));
    }
    let (f, g) = parse::parse_components(source)?;
    PlanarField::new("user", sigma, f, g)
}

/// Reads the plain-text field format: `name=`, `sigma=`, `f=`, `g=` lines.
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_field_file(text: &str) -> Result<PlanarField> {
    let mut keys: BTreeMap<&str, &str> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::FieldFile(format!("line {}: expected key=value", lineno + 1)))?;
        let k = k.trim();
        if !matches!(k, "name" | "sigma" | "f" | "g") {
            return Err(Error::FieldFile(format!("line {}: unknown key `{k}`", lineno + 1)));
        }
        if keys.insert(k, v.trim()).is_some() {
            return Err(Error::FieldFile(format!("line {}: duplicate key `{k}`", lineno + 1)));
        }
    }
    let get = |k: &str| keys.get(k).copied().ok_or_else(|| Error::FieldFile(format!("missing `{k}`")));
    let sigma: f64 = get("sigma")?
        .parse()
        .map_err(|_| Error::FieldFile("sigma is not a number".into()))?;
    let f = parse::parse_expr(get("f")?)?;
    let g = parse::parse_expr(get("g")?)?;
    PlanarField::new(get("name")?, sigma, f, g)
}

/// Multiplier applied to a field: `h(z, mu) * X_mu(z)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Scale {
    /// Any DSL scalar in `x`, `y`, `mu`.
    Expr(Expr),
    /// `1/mu` for `mu != 0` and `1` at `mu = 0`; discontinuous in `mu`.
    InverseMu,
}

impl Scale {
    pub fn constant(c: f64) -> Self {
        Scale::Expr(Expr::Num(c))
    }

    pub fn eval(&self, z: Vec2, mu: f64) -> f64 {
        match self {
            Scale::Expr(e) => e.eval(z[0], z[1], mu),
            Scale::InverseMu => {
                if mu == 0.0 {
                    1.0
                } else {
                    1.0 / mu
                }
            }
        }
    }

    fn eval_dual(&self, z: Vec2, mu: f64) -> Dual2 {
        match self {
            Scale::Expr(e) => {
                e.eval(Dual2::var_x(z[0]), Dual2::var_y(z[1]), Dual2::new(mu, 0.0, 0.0))
            }
            Scale::InverseMu => Dual2::new(self.eval(z, mu), 0.0, 0.0),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Scale::Expr(e) => e.to_string(),
            Scale::InverseMu => "1/mu (mu != 0), 1 (mu = 0)".to_string(),
        }
    }
}

/// `h * X` for a borrowed field `X`. Negative constant `h` gives the
/// time-reversed field.
pub struct ScaledField<'a> {
    inner: &'a dyn VectorField,
    scale: Scale,
    name: String,
}

impl<'a> ScaledField<'a> {
    pub fn new(inner: &'a dyn VectorField, scale: Scale) -> Self {
        let name = format!("({}) * {}", scale.label(), inner.name());
        Self { inner, scale, name }
    }

    pub fn reversed(inner: &'a dyn VectorField) -> Self {
        Self::new(inner, Scale::constant(-1.0))
    }

    pub fn scale(&self) -> &Scale {
        &self.scale
    }
}

impl VectorField for ScaledField<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    fn eval(&self, z: Vec2, mu: f64) -> Result<Vec2> {
        let v = self.inner.eval(z, mu)?;
        let h = self.scale.eval(z, mu);
        let out = [h * v[0], h * v[1]];
        check_finite(z, &out)?;
        Ok(out)
    }

    fn jet(&self, z: Vec2, mu: f64) -> Result<Jet> {
        let j = self.inner.jet(z, mu)?;
        let h = self.scale.eval_dual(z, mu);
        let grad = [h.dx, h.dy];
        let mut out = Jet { value: [h.re * j.value[0], h.re * j.value[1]], jacobian: [[0.0; 2]; 2] };
        for (i, row) in out.jacobian.iter_mut().enumerate() {
            for (k, entry) in row.iter_mut().enumerate() {
                *entry = h.re * j.jacobian[i][k] + j.value[i] * grad[k];
            }
        }
        let flat = [
            out.value[0],
            out.value[1],
            out.jacobian[0][0],
            out.jacobian[0][1],
            out.jacobian[1][0],
            out.jacobian[1][1],
        ];
        check_finite(z, &flat)?;
        Ok(out)
    }
}

/// Built-in fields plus user registrations.
#[derive(Debug, Clone)]
pub struct Catalog {
    entries: BTreeMap<String, PlanarField>,
}

const BUILTINS: [(&str, &str); 4] = [
    ("rot", "f = -y; g = x"),
    ("focus", "f = -x - y; g = x - y"),
    ("inv", "f = -y - x/r2; g = x - y/r2"),
    ("rotinv", "f = -y + x/r2; g = x + y/r2"),
];

impl Catalog {
    pub fn with_builtins() -> Self {
        let entries = BUILTINS
            .iter()
            .map(|(name, src)| {
                let field = parse_field(src, 1.0).expect("builtin source parses").with_name(*name);
                (name.to_string(), field)
            })
            .collect();
        Self { entries }
    }

    pub fn register(&mut self, field: PlanarField) {
        self.entries.insert(field.name().to_string(), field);
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Result<PlanarField> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownField {
            name: name.to_string(),
            available: self.names(),
        })
    }
}

/// Looks up a built-in field. All built-ins use `sigma = 1`.
pub fn catalog(name: &str) -> Result<PlanarField> {
    Catalog::with_builtins().get(name)
}

/// Built-in field in family mode.
pub fn catalog_family(name: &str) -> Result<PlanarField> {
    catalog(name)?.into_family()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_eval() {
        // The unit circle is outside the domain only for sigma >= 1.
        let f = parse_field("f = -y; g = x", 0.5).unwrap();
        assert_eq!(f.eval([1.0, 0.0], 0.0).unwrap(), [0.0, 1.0]);
    }

    #[test]
    fn inverse_square_eval() {
        let f = parse_field("f = -y - x/r2; g = x - y/r2", 1.0).unwrap();
        assert_eq!(f.eval([2.0, 0.0], 0.0).unwrap(), [-0.5, 2.0]);
        let inv = catalog_family("inv").unwrap();
        assert_eq!(inv.eval([0.0, 2.0], 0.0).unwrap(), [-2.0, -0.5]);
    }

    #[test]
    fn family_eval() {
        let rot = parse_field("f = -y; g = x", 0.5).unwrap().into_family().unwrap();
        assert_eq!(rot.eval([1.0, 0.0], 0.5).unwrap(), [0.5, 1.0]);
        assert_eq!(catalog_family("rot").unwrap().eval([2.0, 0.0], 0.5).unwrap(), [1.0, 2.0]);
    }

    #[test]
    fn domain_violation() {
        let rot = catalog("rot").unwrap();
        assert!(matches!(rot.eval([0.0, 0.0], 0.0), Err(Error::DomainViolation { .. })));
        assert!(matches!(rot.eval([1.0, 0.0], 0.0), Err(Error::DomainViolation { .. })));
        assert!(matches!(rot.jet([0.5, 0.5], 0.0), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn non_finite_is_reported() {
        let f = parse_field("f = 1/(x - 3); g = y", 1.0).unwrap();
        assert_eq!(f.eval([3.0, 0.0], 0.0), Err(Error::NonFinite { x: 3.0, y: 0.0 }));
    }

    #[test]
    fn sigma_must_be_positive() {
        assert_eq!(parse_field("f = x; g = y", 0.0).unwrap_err(), Error::InvalidSigma(0.0));
        assert!(parse_field("f = x; g = y", -1.0).is_err());
    }

    #[test]
    fn linear_family_jacobian() {
        let rot = catalog_family("rot").unwrap();
        let j = rot.jet([3.0, -2.0], 0.25).unwrap();
        assert_eq!(j.jacobian, [[0.25, -1.0], [1.0, 0.25]]);
    }

    #[test]
    fn inv_trace_vanishes() {
        let inv = catalog("inv").unwrap();
        for r in [1.5, 2.0, 7.0] {
            let j = inv.jet([r, 0.0], 0.0).unwrap();
            assert!(trace(&j.jacobian).abs() < 1e-15);
        }
    }

    #[test]
    fn catalog_lookup() {
        assert!(catalog("focus").is_ok());
        match catalog("nosuch") {
            Err(Error::UnknownField { available, .. }) => {
                assert_eq!(available, vec!["focus", "inv", "rot", "rotinv"])
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut cat = Catalog::with_builtins();
        cat.register(parse_field("f = x; g = y", 2.0).unwrap().with_name("dilation"));
        assert_eq!(cat.get("dilation").unwrap().sigma(), 2.0);
    }

    #[test]
    fn family_rejects_mu() {
        let f = parse_field("f = mu*x - y; g = x", 1.0).unwrap();
        assert!(matches!(f.into_family(), Err(Error::FamilyUsesMu(_))));
    }

    #[test]
    fn field_file_roundtrip() {
        let text = "# shifted rotation\nname=shift\nsigma=1.5\nf=-y + (mu - 0.3)*x\ng=x + (mu-0.3)*y\n";
        let f = parse_field_file(text).unwrap();
        assert_eq!(f.name(), "shift");
        assert_eq!(f.sigma(), 1.5);
        assert_eq!(f.eval([2.0, 0.0], 0.3).unwrap()[1], 2.0);
        assert!(parse_field_file("name=a\nsigma=1\nf=x\n").is_err());
        assert!(parse_field_file("name=a\nsigma=1\nf=x\ng=y\nh=1\n").is_err());
    }

    #[test]
    fn scaled_jet_product_rule() {
        let rot = catalog_family("rot").unwrap();
        let h = Scale::Expr(parse::parse_expr("1/(1 + r2)").unwrap());
        let s = ScaledField::new(&rot, h);
        let z = [1.5, 0.7];
        let j = s.jet(z, 0.3).unwrap();
        let step = 1e-6;
        for k in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += step;
            zm[k] -= step;
            let vp = s.eval(zp, 0.3).unwrap();
            let vm = s.eval(zm, 0.3).unwrap();
            for i in 0..2 {
                let fd = (vp[i] - vm[i]) / (2.0 * step);
                assert!((fd - j.jacobian[i][k]).abs() < 1e-8);
            }
        }
    }
}
