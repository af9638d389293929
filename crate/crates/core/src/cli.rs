//! Command-line front end: curve sweeps, certificates, zero atlases,
//! zero-parameter searches and approximation reports.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::approx::approx_partition;
use crate::certify::{certify_nonvanishing, Verdict};
use crate::dynamics::{
    critical_b, curve_rows, find_zero_param_in_arc, linspace, solve_alpha, theta_b, CircularInterval, DEFAULT_N_MAX,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::{ModelParams, DEFAULT_CAP};
use crate::zeros::{cayley_family, zero_atlas};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_OUT_OF_DOMAIN: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "isingzero",
    version,
    about = "Ising partition-function zeros, circle dynamics and zero-freeness certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate theta_b and alpha_b over a grid of b.
    Curves {
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// `lo:hi:n`, inclusive.
        #[arg(long, value_parser = parse_grid)]
        b_grid: Grid,
        #[command(flatten)]
        output: Output,
    },
    /// Certify that Z_G(r xi, b) is nonzero.
    Certify {
        graph: PathBuf,
        #[command(flatten)]
        point: Point,
        /// Include the per-node ratio trace.
        #[arg(long)]
        detail: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Zeros of Z_G(., b) over a family of graphs, with an argument histogram.
    Atlas {
        /// `cayley:d=2,kmax=8`, `random:n=10,count=20,maxdeg=3`, a directory, or a glob.
        family: String,
        #[arg(long)]
        b: f64,
        /// Degree bound used to flag roots inside the zero-free arc.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Search an arc for xi with f_xi^n(xi) = -1.
    Zeroparam {
        /// `lo:hi` in radians.
        #[arg(long, value_parser = parse_arc)]
        arc: (f64, f64),
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        n_max: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Relative epsilon-approximation of Z_G from the truncated log series.
    Approx {
        graph: PathBuf,
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Point {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub b: f64,
    /// Argument of xi in radians.
    #[arg(long, conflicts_with = "frac_theta")]
    pub theta: Option<f64>,
    /// Argument of xi as a fraction of theta_b (b < 1) or alpha_b (b > 1).
    #[arg(long)]
    pub frac_theta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: usize,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(format!("expected lo:hi:n, got {s:?}"));
    };
    let lo: f64 = lo.parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
    let n: usize = n.parse().map_err(|_| format!("bad count {n:?}"))?;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || n == 0 {
        return Err(format!("grid {s:?} must be finite with lo <= hi and n > 0"));
    }
    Ok(Grid { lo, hi, n })
}

fn parse_arc(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let lo: f64 = lo.parse().map_err(|_| format!("bad angle {lo:?}"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad angle {hi:?}"))?;
    if !(lo < hi) {
        return Err(format!("arc {s:?} needs lo < hi"));
    }
    Ok((lo, hi))
}

impl Point {
    /// Resolves `--theta` / `--frac-theta` into model parameters.
    pub fn params(&self) -> Result<ModelParams> {
        let angle = match (self.theta, self.frac_theta) {
            (Some(t), _) => t,
            (None, Some(frac)) => {
                let bound = if self.b < 1.0 {
                    theta_b(self.d, self.b)?
                } else {
                    solve_alpha(self.d, self.b)?
                };
                frac * bound
            }
            (None, None) => 0.0,
        };
        Ok(ModelParams::on_circle(angle, self.b)
            .with_scale(self.r)
            .with_cap(self.cap))
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_opt_exp(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

fn emit(output: &Output, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string())),
    }
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

/// Parses a family spec into labelled graphs, in deterministic order.
pub fn load_family(spec: &str, seed: u64) -> Result<Vec<(String, Graph)>> {
    if let Some(rest) = spec.strip_prefix("cayley:") {
        let kv = parse_kv(rest)?;
        let d = kv_get(&kv, "d")?.unwrap_or(2);
        let kmax = kv_get(&kv, "kmax")?.unwrap_or(8);
        return cayley_family(d, kmax);
    }
    if let Some(rest) = spec.strip_prefix("random:") {
        let kv = parse_kv(rest)?;
        let n = kv_get(&kv, "n")?.unwrap_or(10);
        let count = kv_get(&kv, "count")?.unwrap_or(10);
        let maxdeg = kv_get(&kv, "maxdeg")?.unwrap_or(3);
        let extra = kv_get(&kv, "extra")?.unwrap_or(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return (0..count)
            .map(|i| {
                Ok((
                    format!("random_n{n}_s{seed}_{i}"),
                    Graph::random_connected(n, maxdeg, extra, &mut rng)?,
                ))
            })
            .collect();
    }
    let pattern = if Path::new(spec).is_dir() {
        format!("{}/*", spec.trim_end_matches('/'))
    } else {
        spec.to_string()
    };
    let mut paths: Vec<PathBuf> = glob::glob(&pattern)
        .map_err(|e| Error::Validation(format!("family pattern {spec:?}: {e}")))?
        .filter_map(|p| p.ok())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Io(format!("no graph files match {spec:?}")));
    }
    paths
        .iter()
        .map(|p| {
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((id, Graph::load(p)?))
        })
        .collect()
}

fn parse_kv(s: &str) -> Result<Vec<(String, String)>> {
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Validation(format!("expected key=value, got {p:?}")))
        })
        .collect()
}

fn kv_get(kv: &[(String, String)], key: &str) -> Result<Option<usize>> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| {
            v.parse()
                .map_err(|_| Error::Validation(format!("{key}={v:?} is not an integer")))
        })
        .transpose()
}

/// Runs a parsed command, writing its main output to `stdout` or `--out`.
/// Returns the process exit code.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Curves { d, b_grid, output } => {
            let grid = linspace(b_grid.lo, b_grid.hi, b_grid.n);
            let rows = curve_rows(*d, &grid);
            let bc = critical_b(*d);
            let near_bc = theta_b(*d, bc + 1e-6).ok();
            let near_one = theta_b(*d, 1.0 - 1e-6).ok();
            let both: Vec<_> = rows.iter().filter_map(|r| Some((r.theta_b?, r.alpha_b?))).collect();
            let alpha_below = both.iter().filter(|(t, a)| a < t).count();
            let text = if output.format == Some(Format::Json) {
                json_text(&json!({
                    "d": d,
                    "rows": rows,
                    "endpoints": {"b_c": bc, "theta_near_b_c": near_bc, "theta_near_1": near_one},
                    "order": {"rows_with_both": both.len(), "alpha_below_theta": alpha_below},
                }))
            } else {
                let mut s = String::from("b,theta_b,alpha_b,parabolic_residual,alpha_residual\n");
                for r in &rows {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{}",
                        r.b,
                        fmt_opt(r.theta_b),
                        fmt_opt(r.alpha_b),
                        fmt_opt_exp(r.parabolic_residual),
                        fmt_opt_exp(r.alpha_residual)
                    );
                }
                s
            };
            emit(output, &text, stdout)?;
            let _ = writeln!(
                stderr,
                "# theta(b_c + 1e-6) = {}, theta(1 - 1e-6) = {}, alpha < theta on {alpha_below} of {} rows",
                fmt_opt_exp(near_bc),
                fmt_opt(near_one),
                both.len()
            );
            Ok(EXIT_OK)
        }
        Command::Certify {
            graph,
            point,
            detail,
            output,
        } => {
            let g = Graph::load(graph)?;
            let cert = certify_nonvanishing(&g, point.d, &point.params()?)?;
            emit(output, &json_text(&cert.to_json(*detail)), stdout)?;
            Ok(match cert.verdict {
                Verdict::Pass => EXIT_OK,
                Verdict::OutOfDomain => EXIT_OUT_OF_DOMAIN,
                Verdict::Fail => EXIT_FAIL,
            })
        }
        Command::Atlas {
            family,
            b,
            d,
            bins,
            seed,
            cap,
            output,
        } => {
            let graphs = load_family(family, *seed)?;
            let atlas = zero_atlas(&graphs, *b, *bins, *d, *cap)?;
            if output.format == Some(Format::Json) {
                let v = json!({
                    "b": atlas.b,
                    "theta_b": atlas.theta_b,
                    "roots": atlas.roots.iter().map(|r| json!({"graph_id": r.graph_id, "root": [r.root.re, r.root.im]})).collect::<Vec<_>>(),
                    "histogram": atlas.histogram,
                    "flagged": atlas.flagged.len(),
                    "lee_yang_max": atlas.lee_yang_max,
                    "max_residual": atlas.max_residual,
                });
                emit(output, &json_text(&v), stdout)?;
            } else {
                match &output.out {
                    Some(path) => {
                        let hist = path.with_extension("hist.csv");
                        std::fs::write(path, atlas.roots_csv())
                            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                        std::fs::write(&hist, atlas.histogram_csv())
                            .map_err(|e| Error::Io(format!("{}: {e}", hist.display())))?;
                    }
                    None => {
                        let text = format!("{}\n{}", atlas.roots_csv(), atlas.histogram_csv());
                        stdout
                            .write_all(text.as_bytes())
                            .map_err(|e| Error::Io(e.to_string()))?;
                    }
                }
            }
            let _ = writeln!(
                stderr,
                "# {} roots from {} graphs, {} inside the zero-free arc, max residual {:e}",
                atlas.roots.len(),
                graphs.len(),
                atlas.flagged.len(),
                atlas.max_residual
            );
            Ok(if atlas.flagged.is_empty() { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Zeroparam {
            arc,
            b,
            d,
            n_max,
            output,
        } => {
            let interval = CircularInterval::new(arc.0, arc.1 - arc.0)?;
            let found = find_zero_param_in_arc(&interval, *b, *d, *n_max)?;
            let v = match found {
                Some(z) => json!({
                    "found": true,
                    "xi": [z.xi.re, z.xi.im],
                    "arg": z.xi.arg(),
                    "n": z.n,
                    "residual": z.residual,
                }),
                None => json!({"found": false}),
            };
            emit(output, &json_text(&v), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Approx {
            graph,
            point,
            epsilon,
            output,
        } => {
            let g = Graph::load(graph)?;
            let a = approx_partition(&g, point.d, &point.params()?, *epsilon)?;
            emit(output, &json_text(&a.to_json()), stdout)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs; errors go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_FAIL } else { EXIT_OK };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Domain(_) => EXIT_OUT_OF_DOMAIN,
                _ => EXIT_FAIL,
            }
        }
    }
}
