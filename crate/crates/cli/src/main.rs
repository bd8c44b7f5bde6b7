mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hopfinf_core::flux::index_at_infinity;
use hopfinf_core::spectral::{certify_class, SampleGrid, SpectralClass, Verdict};
use hopfinf_core::{
    audit_hypotheses, catalog, certify_infinity_stability, integrate, locate_bifurcation,
    parse_field, parse_field_file, portrait_svg, scaling_family_check, sweep, Controls, Direction, HypothesisSet,
    PlanarField, Scale, Status, SweepVerdict, TrajectoryVerdict, VectorField,
};
use serde::Serialize;

/// Hopf bifurcation at infinity for planar families X_mu = X + mu z.
///
/// Exit status: 0 pass, 2 negative verdict (violated, no reversal,
/// inconsistent), 1 error.
#[derive(Parser)]
#[command(name = "hopfinf", version)]
struct Cli {
    /// Directory for JSON, text, CSV and SVG outputs.
    #[arg(long, global = true, default_value = "hopfinf-out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for probe angles; overrides `stability.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// File of `key=value` control overrides (see --print-config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective controls as `key=value` lines and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone)]
struct FieldArgs {
    /// Field as a catalog name, a field file, or inline `f = ...; g = ...`.
    /// Inline text may use `mu` directly.
    #[arg(long, conflicts_with = "family", allow_hyphen_values = true)]
    field: Option<String>,
    /// Like --field, but analysed as the family X + mu z.
    #[arg(long, allow_hyphen_values = true)]
    family: Option<String>,
    /// Excluded-disk radius for inline fields.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a spectral class of the Jacobian on an annulus.
    Spectral {
        #[command(flatten)]
        source: FieldArgs,
        /// dissipative, positive-determinant, free-real-eigenvalues or
        /// det-positive-on-interval.
        #[arg(long, default_value = "dissipative")]
        class: String,
        /// Annulus `r_in:r_out` (default: spectral.r_in_factor and
        /// spectral.r_out_factor times sigma).
        #[arg(long)]
        annulus: Option<String>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu: f64,
        /// `mu_lo:mu_hi` for det-positive-on-interval.
        #[arg(long, allow_hyphen_values = true)]
        interval: Option<String>,
    },
    /// Classify the index at infinity from the flux over a radius schedule.
    Index {
        #[command(flatten)]
        source: FieldArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu: f64,
    },
    /// Integrate and classify one trajectory.
    Classify {
        #[command(flatten)]
        source: FieldArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu: f64,
        /// Initial point `x,y`.
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
        #[arg(long, default_value = "forward")]
        direction: String,
    },
    /// Evaluate index, stability and spectra over mu and look for a reversal.
    Sweep {
        #[command(flatten)]
        source: FieldArgs,
        /// `a:b:n` (n evenly spaced values) or a comma-separated list.
        #[arg(long, allow_hyphen_values = true)]
        mu: String,
        /// Narrow a detected bracket to this width.
        #[arg(long)]
        refine_tol: Option<f64>,
        /// Also sweep h * X_mu and compare verdicts; a DSL scalar in x, y,
        /// mu, or `inverse-mu`.
        #[arg(long, allow_hyphen_values = true)]
        scale: Option<String>,
    },
    /// Bisect a bracket with opposite stability verdicts.
    Locate {
        #[command(flatten)]
        source: FieldArgs,
        /// `mu_lo:mu_hi`.
        #[arg(long, allow_hyphen_values = true)]
        bracket: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Audit a hypothesis set: index-criterion, dissipative-family or
    /// free-real-eigenvalues.
    Audit {
        #[command(flatten)]
        source: FieldArgs,
        #[arg(long)]
        theorem: String,
        /// Parameters for sign conditions, as for sweep.
        #[arg(long, allow_hyphen_values = true, default_value = "0.1")]
        mu: String,
    },
    /// Phase portrait as SVG.
    Portrait {
        #[command(flatten)]
        source: FieldArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu: f64,
        /// Half-width of the view (overrides portrait.window).
        #[arg(long)]
        window: Option<f64>,
    },
}

fn load_field(args: &FieldArgs) -> Result<PlanarField> {
    let (text, family) = match (&args.field, &args.family) {
        (Some(f), None) => (f, false),
        (None, Some(f)) => (f, true),
        _ => bail!("exactly one of --field or --family is required"),
    };
    let field = if text.contains('=') {
        parse_field(text, args.sigma)?
    } else if Path::new(text).is_file() {
        let src = std::fs::read_to_string(text).with_context(|| format!("reading {text}"))?;
        parse_field_file(&src)?
    } else {
        catalog(text)?
    };
    Ok(if family { field.into_family()? } else { field })
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let sep = if s.contains(':') { ':' } else { ',' };
    let (a, b) = s.split_once(sep).ok_or_else(|| anyhow!("{what} must be `a{sep}b`, got `{s}`"))?;
    Ok((a.trim().parse().context(what.to_string())?, b.trim().parse().context(what.to_string())?))
}

/// `a:b:n` gives n values from a to b inclusive; otherwise a comma list.
fn parse_mu_list(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, n] => {
            let (a, b): (f64, f64) = (a.parse()?, b.parse()?);
            let n: usize = n.parse()?;
            if n < 2 {
                bail!("a mu range needs at least 2 points");
            }
            let d = (n - 1) as f64;
            // Rounded to 12 significant digits so that `-0.2:0.2:9` yields
            // -0.15 rather than its nearest interpolation artifact.
            (0..n)
                .map(|k| {
                    let v = a * ((n - 1 - k) as f64 / d) + b * (k as f64 / d);
                    Ok(format!("{v:.11e}").parse::<f64>()?)
                })
                .collect()
        }
        [_] => s.split(',').map(|v| v.trim().parse().map_err(|e| anyhow!("mu `{v}`: {e}"))).collect(),
        _ => bail!("mu must be `a:b:n` or a comma-separated list"),
    }
}

struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), written: vec![] })
    }

    /// Temp file in the target directory, then rename.
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.persist(&path).map_err(|e| anyhow!("writing {}: {}", path.display(), e.error))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

const PASS: u8 = 0;
const NEGATIVE: u8 = 2;

fn run(cli: Cli) -> Result<u8> {
    let mut controls = Controls::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        controls = config::apply(&controls, &text)?;
    }
    if let Some(seed) = cli.seed {
        controls.stability.seed = seed;
    }
    if let Some(Command::Portrait { window: Some(w), .. }) = &cli.command {
        controls.portrait.window = *w;
    }
    if cli.print_config {
        print!("{}", config::render(&controls));
        return Ok(PASS);
    }
    let Some(command) = cli.command else {
        bail!("no subcommand given (try --help)");
    };
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut out = Output::new(&cli.out)?;
    let mut text = String::new();
    let code = match command {
        Command::Spectral { source, class, annulus, mu, interval } => {
            let field = load_field(&source)?;
            let sigma = field.sigma();
            let class = if class == "det-positive-on-interval" {
                let (lo, hi) = parse_pair(interval.as_deref().unwrap_or("0:0.1"), "interval")?;
                SpectralClass::DetPositiveOnInterval { mu_lo: lo, mu_hi: hi, samples: controls.interval_samples }
            } else {
                SpectralClass::parse(&class)?
            };
            let mut grid = controls.spectral.grid(sigma);
            if let Some(a) = annulus {
                let (r_in, r_out) = parse_pair(&a, "annulus")?;
                grid = SampleGrid::new(r_in, r_out, grid.n_r, grid.n_theta);
            }
            let rep = certify_class(&field, mu, &grid, class)?;
            out.json("spectral.json", &rep)?;
            let _ = writeln!(text, "field: {}\nclass: {:?}\nmu: {mu}", rep.field, rep.class);
            let _ = writeln!(text, "annulus: ({}, {}), {} points", grid.r_in, grid.r_out, rep.points_checked);
            let _ = writeln!(text, "verdict: {:?}\nviolations: {}", rep.verdict, rep.violation_count);
            for w in rep.witnesses.iter().take(5) {
                let _ = writeln!(text, "  witness ({}, {}): {}{:+}i, {}{:+}i", w.x, w.y, w.re1, w.im1, w.re2, w.im2);
            }
            out.write("spectral.txt", &text)?;
            if rep.verdict == Verdict::CertifiedOnSample { PASS } else { NEGATIVE }
        }
        Command::Index { source, mu } => {
            let field = load_field(&source)?;
            let schedule = controls.index.schedule(field.sigma());
            let est = index_at_infinity(&field, mu, &schedule, &controls.index, &controls.quadrature)?;
            out.json("index.json", &est)?;
            out.write("flux.csv", &est.evidence.to_csv())?;
            let _ = writeln!(text, "field: {}\nmu: {mu}\nindex: {:?}\nfit: {}", field.name(), est.classification, est.fit);
            out.write("index.txt", &text)?;
            PASS
        }
        Command::Classify { source, mu, z0, direction } => {
            let field = load_field(&source)?;
            let (x, y) = parse_pair(&z0, "z0")?;
            let direction = match direction.as_str() {
                "forward" => Direction::Forward,
                "backward" => Direction::Backward,
                other => bail!("direction must be forward or backward, got `{other}`"),
            };
            let tr = integrate(&field, mu, [x, y], direction, &controls.flow)?;
            let outcome = hopfinf_core::flow::classify(&field, mu, &tr)?;
            out.json("classify.json", &outcome)?;
            out.write("trajectory.csv", &tr.to_csv())?;
            let _ = writeln!(text, "field: {}\nmu: {mu}\nz0: ({x}, {y}) {direction:?}", field.name());
            let _ = writeln!(text, "verdict: {:?}\ntermination: {:?}", outcome.verdict, tr.termination);
            let _ = writeln!(text, "final time: {}\nfinal radius: {}", outcome.path_summary.final_time, outcome.path_summary.final_radius);
            out.write("classify.txt", &text)?;
            match outcome.verdict {
                TrajectoryVerdict::Undetermined { .. } => NEGATIVE,
                _ => PASS,
            }
        }
        Command::Sweep { source, mu, refine_tol, scale } => {
            let field = load_field(&source)?;
            let mus = parse_mu_list(&mu)?;
            let rep = sweep(&field, &mus, &controls, refine_tol)?;
            out.json("sweep.json", &rep)?;
            out.write("sweep.csv", &rep.to_csv())?;
            let _ = writeln!(text, "field: {}", rep.field);
            for s in &rep.mu_samples {
                let idx = s.index.as_ref().map_or("error", |i| i.class);
                let _ = writeln!(text, "  mu = {:<10} index {:<24} stability {:?}", s.mu, idx, s.verdict());
                for e in &s.errors {
                    let _ = writeln!(text, "      {e}");
                }
            }
            let _ = writeln!(text, "verdict: {:?}", rep.verdict);
            let mut code = match rep.verdict {
                SweepVerdict::HopfAtInfinityDetected { .. } => PASS,
                _ => NEGATIVE,
            };
            if let Some(h) = scale {
                let scale = if h == "inverse-mu" {
                    Scale::InverseMu
                } else {
                    Scale::Expr(hopfinf_core::parse::parse_expr(&h)?)
                };
                let cmp = scaling_family_check(&field, scale, &mus, &controls)?;
                out.json("scaling.json", &cmp)?;
                let _ = writeln!(text, "scaling by {}: passed = {}, bracket unchanged = {}", cmp.scale, cmp.passed, cmp.bracket_unchanged);
                if !cmp.passed {
                    code = NEGATIVE;
                }
            }
            out.write("sweep.txt", &text)?;
            code
        }
        Command::Locate { source, bracket, tol } => {
            let field = load_field(&source)?;
            let b = parse_pair(&bracket, "bracket")?;
            let loc = locate_bifurcation(&field, b, tol, &controls)?;
            out.json("locate.json", &loc)?;
            let _ = writeln!(text, "field: {}\nmu*: {}\nbracket: [{}, {}]\niterations: {}", loc.field, loc.mu_star, loc.bracket[0], loc.bracket[1], loc.iterations);
            out.write("locate.txt", &text)?;
            PASS
        }
        Command::Audit { source, theorem, mu } => {
            let field = load_field(&source)?;
            let set = HypothesisSet::parse(&theorem)?;
            let mus = parse_mu_list(&mu)?;
            let rows = audit_hypotheses(&field, &mus, set, &controls)?;
            out.json("audit.json", &rows)?;
            let _ = writeln!(text, "field: {}\nhypotheses: {}", field.name(), set.label());
            for r in &rows {
                let mu = r.mu.map(|m| format!(" (mu = {m})")).unwrap_or_default();
                let _ = writeln!(text, "  {:?}: {}{mu}", r.status, r.hypothesis);
                if let Some(w) = &r.witness {
                    let _ = writeln!(text, "      {w}");
                }
            }
            out.write("audit.txt", &text)?;
            if rows.iter().any(|r| r.status == Status::Violated) { NEGATIVE } else { PASS }
        }
        Command::Portrait { source, mu, .. } => {
            let field = load_field(&source)?;
            let svg = portrait_svg(&field, mu, &controls.portrait, &controls.stability)?;
            out.write("portrait.svg", &svg)?;
            let stab = certify_infinity_stability(&field, mu, &controls.stability)?;
            out.json("portrait.json", &stab)?;
            let _ = writeln!(text, "field: {}\nmu: {mu}\nwindow: {}\nstability: {:?}", field.name(), controls.portrait.window, stab.verdict);
            out.write("portrait.txt", &text)?;
            PASS
        }
    };
    for p in &out.written {
        eprintln!("wrote {}", p.display());
    }
    print!("{text}");
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_lists() {
        assert_eq!(parse_mu_list("-0.2:0.2:9").unwrap()[1], -0.15);
        assert_eq!(parse_mu_list("-0.1:0.1:9").unwrap()[4], 0.0);
        assert_eq!(parse_mu_list("-0.5, 0,0.5").unwrap(), vec![-0.5, 0.0, 0.5]);
        assert!(parse_mu_list("0:1:1").is_err());
        assert!(parse_mu_list("0:1").is_err());
    }

    #[test]
    fn pairs() {
        assert_eq!(parse_pair("-0.1:0.1", "b").unwrap(), (-0.1, 0.1));
        assert_eq!(parse_pair("3,-1", "z0").unwrap(), (3.0, -1.0));
        assert!(parse_pair("3", "z0").is_err());
    }
}
