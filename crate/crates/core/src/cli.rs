//! `dsq` command-line front end.
//!
//! Exit status: 0 when the analytical verdict passes, 1 when it fails, 2 on
//! usage or input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::affine::{build_conjugator, verify_conjugation};
use crate::crossing::analyze;
use crate::curve::{builtin_curve, load_curve, Curve};
use crate::density::{density_scan, example2_case, remark_line_case, stadium_case};
use crate::diffgeo::{satisfies_star, StarOptions};
use crate::dsq::{AnchorPair, Composition};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::report::{AffineCheck, ReportResult, RunReport};
use crate::search::{find_generic_anchors, ParamArc, SearchError};
use crate::svg::render_svg;
use crate::tol::Tolerances;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dsq", version, about = "Distance-squared mappings of plane curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether D_p ∘ γ is an immersion with normal crossings.
    Analyze {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_parser = parse_point)]
        p1: Vec2,
        #[arg(long, value_parser = parse_point)]
        p2: Vec2,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Search curve-anchored pairs on two arcs with a passing composition.
    Search {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_parser = parse_arc)]
        arc1: ParamArc,
        #[arg(long, value_parser = parse_arc)]
        arc2: ParamArc,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Perturbation attempts.
        #[arg(long, default_value_t = 64)]
        budget: usize,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Verdicts over an n×n grid of curve-anchored pairs.
    Density {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_parser = parse_arc)]
        arc1: ParamArc,
        #[arg(long, value_parser = parse_arc)]
        arc2: ParamArc,
        #[arg(long, default_value_t = 25)]
        grid: usize,
        /// Pass fraction at or above which the scan counts as passing.
        #[arg(long, default_value_t = 0.95)]
        min_pass: f64,
        /// Also write the verdict matrix as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Probe the curve for flat subarcs.
    Star {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        kappa_min: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Build and check the affine conjugator between two collinear pairs.
    AffineCheck {
        #[arg(long, value_parser = parse_point)]
        p1: Vec2,
        #[arg(long, value_parser = parse_point)]
        p2: Vec2,
        #[arg(long, value_parser = parse_point)]
        q1: Vec2,
        #[arg(long, value_parser = parse_point)]
        q2: Vec2,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long = "box", default_value_t = 10.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1e-8)]
        threshold: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a reproducible case study.
    Case {
        #[arg(value_enum)]
        which: CaseArg,
        /// Samples (example2, stadium) or grid size (remark_line).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Render a saved report as SVG.
    Render {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        svg: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CaseArg {
    RemarkLine,
    Example2,
    Stadium,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct CurveSource {
    /// Curve-spec JSON file.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Catalog curve name.
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    source: CurveSource,
    /// Catalog parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "builtin")]
    params: Vec<f64>,
}

impl CurveArgs {
    fn load(&self) -> Result<Curve> {
        match (&self.source.curve, &self.source.builtin) {
            (Some(path), _) => load_curve(&std::fs::read_to_string(path)?),
            (None, Some(name)) => builtin_curve(name, &self.params),
            (None, None) => Err(Error::Precondition("one of --curve or --builtin is required".into())),
        }
    }
}

#[derive(Debug, Args)]
struct TolArgs {
    #[arg(long)]
    tol_root_grid: Option<usize>,
    #[arg(long)]
    tol_singular_refine: Option<f64>,
    #[arg(long)]
    tol_singular_accept: Option<f64>,
    #[arg(long)]
    tol_cluster: Option<f64>,
    #[arg(long)]
    tol_image: Option<f64>,
    #[arg(long)]
    tol_transverse: Option<f64>,
    #[arg(long)]
    tol_multiplicity: Option<f64>,
    /// Multiplies every acceptance threshold before the overrides above.
    #[arg(long)]
    tol_scale: Option<f64>,
}

impl TolArgs {
    fn build(&self) -> Result<Tolerances> {
        let mut t = Tolerances::default();
        if let Some(s) = self.tol_scale {
            t = t.scaled(s);
        }
        macro_rules! set {
            ($field:ident, $src:ident) => {
                if let Some(v) = self.$src {
                    t.$field = v;
                }
            };
        }
        set!(root_grid, tol_root_grid);
        set!(singular_refine, tol_singular_refine);
        set!(singular_accept, tol_singular_accept);
        set!(cluster_radius_rel, tol_cluster);
        set!(image, tol_image);
        set!(transverse, tol_transverse);
        set!(multiplicity_image_rel, tol_multiplicity);
        let positive = [
            t.singular_refine,
            t.singular_accept,
            t.cluster_radius_rel,
            t.image,
            t.transverse,
            t.multiplicity_image_rel,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || t.root_grid < 16 || t.cluster_radius_rel >= 0.5 {
            return Err(Error::Precondition(
                "tolerances must be positive and finite, root grid >= 16, cluster radius < 0.5".into(),
            ));
        }
        Ok(t)
    }
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Record wall time in the report.
    #[arg(long)]
    timing: bool,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated numbers, got {s:?}"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("{v:?} is not a finite number"))
    };
    Ok((num(a)?, num(b)?))
}

fn parse_point(s: &str) -> std::result::Result<Vec2, String> {
    parse_pair(s).map(|(x, y)| Vec2::new(x, y))
}

/// `lo,hi` or `lo,hi:component`.
fn parse_arc(s: &str) -> std::result::Result<ParamArc, String> {
    let (range, component) = match s.rsplit_once(':') {
        Some((r, c)) => (
            r,
            c.trim().parse::<usize>().map_err(|_| format!("bad component {c:?}"))?,
        ),
        None => (s, 0),
    };
    let (lo, hi) = parse_pair(range)?;
    if lo >= hi {
        return Err(format!("arc needs lo < hi, got {lo},{hi}"));
    }
    Ok(ParamArc::new(component, lo, hi))
}

/// Sets the worker count from `DSQ_THREADS` when present.
pub fn configure_threads() {
    if let Some(n) = std::env::var("DSQ_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

struct Outcome {
    report: RunReport,
    out: Option<PathBuf>,
    svg: Option<PathBuf>,
    timing: bool,
}

/// Runs one invocation and returns the process exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let echo: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, echo) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(command: Command, echo: Vec<String>) -> Result<i32> {
    let start = Instant::now();
    let outcome = match command {
        Command::Render { report, svg } => {
            let r = RunReport::from_json(&std::fs::read_to_string(&report)?)?;
            render_svg(&r, &svg)?;
            return Ok(if r.passes() { EXIT_PASS } else { EXIT_FAIL });
        }
        Command::Analyze {
            curve,
            p1,
            p2,
            tol,
            out,
        } => {
            let c = curve.load()?;
            let t = tol.build()?;
            let r = analyze(&Composition::new(&c, AnchorPair::new(p1, p2)), &t);
            outcome(RunReport::new(echo, Some(&c), t, ReportResult::Composition(r)), out)
        }
        Command::Search {
            curve,
            arc1,
            arc2,
            seed,
            budget,
            tol,
            out,
        } => {
            let c = curve.load()?;
            let t = tol.build()?;
            let result = match find_generic_anchors(&c, &arc1, &arc2, seed, budget, &t) {
                Ok(r) => ReportResult::Search(Box::new(r)),
                Err(SearchError::Failed(f)) => ReportResult::SearchFailure(*f),
                Err(SearchError::Input(e)) => return Err(e),
            };
            outcome(RunReport::new(echo, Some(&c), t, result), out)
        }
        Command::Density {
            curve,
            arc1,
            arc2,
            grid,
            min_pass,
            csv,
            tol,
            out,
        } => {
            let c = curve.load()?;
            let t = tol.build()?;
            let g = density_scan(&c, &arc1, &arc2, grid, &t)?;
            if let Some(path) = csv {
                std::fs::write(path, g.to_csv())?;
            }
            let result = ReportResult::Density {
                grid: g,
                min_pass_fraction: min_pass,
            };
            outcome(RunReport::new(echo, Some(&c), t, result), out)
        }
        Command::Star {
            curve,
            window,
            kappa_min,
            samples,
            out,
        } => {
            let c = curve.load()?;
            let mut opts = StarOptions::for_curve(&c);
            opts.window = window.unwrap_or(opts.window);
            opts.kappa_min = kappa_min.unwrap_or(opts.kappa_min);
            opts.samples_per_window = samples.unwrap_or(opts.samples_per_window);
            let v = satisfies_star(&c, opts)?;
            outcome(
                RunReport::new(echo, Some(&c), Tolerances::default(), ReportResult::Star(v)),
                out,
            )
        }
        Command::AffineCheck {
            p1,
            p2,
            q1,
            q2,
            samples,
            half_width,
            threshold,
            out,
        } => {
            let p = AnchorPair::new(p1, p2);
            let pt = AnchorPair::new(q1, q2);
            let h = build_conjugator(&p, &pt)?;
            let residual = verify_conjugation(&h, &p, &pt, samples, half_width);
            let check = AffineCheck {
                p,
                p_tilde: pt,
                conjugator: h,
                samples,
                half_width,
                residual,
                threshold,
                passes: residual < threshold,
            };
            outcome(
                RunReport::new(echo, None, Tolerances::default(), ReportResult::AffineCheck(check)),
                out,
            )
        }
        Command::Case {
            which,
            samples,
            seed,
            tol,
            out,
        } => {
            let t = tol.build()?;
            let (study, curve) = match which {
                CaseArg::RemarkLine => (remark_line_case(samples.unwrap_or(20), &t)?, "line"),
                CaseArg::Example2 => (example2_case(samples.unwrap_or(10), seed, &t)?, "example2_segments"),
                CaseArg::Stadium => (
                    stadium_case(samples.unwrap_or(10), seed, &t)?,
                    crate::density::FLAT_CASE_CURVE,
                ),
            };
            let c = builtin_curve(curve, &[])?;
            outcome(RunReport::new(echo, Some(&c), t, ReportResult::CaseStudy(study)), out)
        }
    };
    let Outcome {
        mut report,
        out,
        svg,
        timing,
    } = outcome;
    if timing {
        report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    if let Some(path) = &svg {
        render_svg(&report, path)?;
    }
    let text = report.to_json();
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(if report.passes() { EXIT_PASS } else { EXIT_FAIL })
}

fn outcome(report: RunReport, out: OutArgs) -> Outcome {
    Outcome {
        report,
        out: out.out,
        svg: out.svg,
        timing: out.timing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_syntax() {
        assert_eq!(parse_arc("0.1,0.6").unwrap(), ParamArc::new(0, 0.1, 0.6));
        assert_eq!(parse_arc("-1,2.5:3").unwrap(), ParamArc::new(3, -1.0, 2.5));
        assert!(parse_arc("0.6,0.1").is_err());
        assert!(parse_arc("0.1").is_err());
        assert!(parse_arc("0,1:x").is_err());
    }

    #[test]
    fn point_syntax() {
        assert_eq!(parse_point("0.5,-2").unwrap(), Vec2::new(0.5, -2.0));
        assert!(parse_point("nan,1").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_cli(["dsq", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run_cli(["dsq", "analyze", "--builtin", "circle"]), EXIT_USAGE);
        assert_eq!(
            run_cli(["dsq", "analyze", "--builtin", "nope", "--p1", "0,0", "--p2", "1,0"]),
            EXIT_USAGE
        );
        assert_eq!(run_cli(["dsq", "--help"]), EXIT_PASS);
    }
}
