//! `strebel` command line: surfaces, foliations, limit surfaces and limiting
//! distances as deterministic JSON reports.

use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use strebel::asymptotics::{detour_metric, limiting_distance, AsymptoticsError, Correspondence};
use strebel::extremal::{
    affine_glue_map, annulus_power_map, ext_bounds, kerckhoff_check, walsh_limit_check, AffineMapSpec, Curve,
    ExtremalError,
};
use strebel::foliation::{analyze, Budgets, FoliationError};
use strebel::iet::{birkhoff_deviation, natural_cells, rauzy_induct, Iet, BIRKHOFF_GRID};
use strebel::limitsurf::{gh_epsilon_check, limit_models, FlatPoint, GraphSpec, LimitError, LimitModel};
use strebel::numeric::Scalar;
use strebel::surface::{geodesic_flow, Surface};

#[derive(Parser)]
#[command(name = "strebel", version, about = "Half-translation surfaces and limiting Teichmüller distances")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Multiplies every search budget; overrides STREBEL_BUDGET_SCALE.
    #[arg(long, global = true)]
    budget_scale: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Check a surface and print its canonical form and invariants.
    Validate { surface: String },
    /// Critical graph and vertical decomposition.
    Decompose { surface: String },
    /// Stretch horizontally by LAMBDA; prints the surface.
    Flow {
        surface: String,
        #[arg(long)]
        lambda: String,
    },
    /// Rauzy induction certificate and Birkhoff deviations of an exchange.
    Iet {
        exchange: String,
        /// Birkhoff orbit lengths, comma separated.
        #[arg(long, value_delimiter = ',')]
        birkhoff: Vec<usize>,
        #[arg(long, default_value_t = BIRKHOFF_GRID)]
        grid: usize,
    },
    /// Half-plane limit models of a surface, or of a standalone ribbon graph.
    LimitSurface {
        surface: Option<String>,
        #[arg(long, conflicts_with = "surface")]
        graph: Option<String>,
    },
    /// Limiting Teichmüller distance between two vertical stretch rays.
    LimitDistance {
        a: String,
        b: String,
        #[arg(long)]
        correspondence: Option<String>,
    },
    /// Whether two vertical stretch rays are asymptotic.
    Asymptotic {
        a: String,
        b: String,
        #[arg(long)]
        correspondence: Option<String>,
    },
    /// Detour metric and optimal shift for a modulus ratio vector.
    Detour {
        #[arg(long, value_delimiter = ',', required = true)]
        ratios: Vec<String>,
    },
    /// Extremal length bounds; with --kerckhoff, compares against a stretch.
    Ext {
        surface: String,
        /// horizontal | vertical | torus:P,Q | core:I | hleaf:RECT,Y | vleaf:RECT,X
        #[arg(long, required = true)]
        curve: Vec<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        kerckhoff: Option<String>,
    },
    /// Three-band rectangle map (JSON) or annulus power map (--ratio).
    QcAffine {
        spec: Option<String>,
        #[arg(long, conflicts_with = "spec")]
        ratio: Option<String>,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Extremal length along the stretch ray against its limit.
    Walsh {
        surface: String,
        #[arg(long)]
        curve: String,
        /// Uses lambda = 2^k for k = 0..=MAX_K.
        #[arg(long, default_value_t = 10)]
        max_k: u32,
    },
    /// ε-relations between pointed balls along the ray and a far reference.
    GhCheck {
        surface: String,
        /// Singular basepoint as RECT,X,Y in unstretched coordinates.
        #[arg(long)]
        base: String,
        #[arg(long, default_value = "1/2")]
        radius: String,
        #[arg(long, default_value = "1/64")]
        step: String,
        #[arg(long, default_value_t = 4)]
        stride: i64,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
        lambdas: Vec<String>,
        #[arg(long, default_value = "256")]
        reference: String,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn domain(kind: &'static str, message: impl ToString) -> Failure {
        Failure { code: 2, kind, message: message.to_string() }
    }

    fn budget(message: impl ToString) -> Failure {
        Failure { code: 3, kind: "budget", message: message.to_string() }
    }
}

impl From<FoliationError> for Failure {
    fn from(e: FoliationError) -> Failure {
        Failure::budget(e)
    }
}

impl From<AsymptoticsError> for Failure {
    fn from(e: AsymptoticsError) -> Failure {
        match e {
            AsymptoticsError::Foliation(f) => f.into(),
            other => Failure::domain("asymptotics", other),
        }
    }
}

impl From<ExtremalError> for Failure {
    fn from(e: ExtremalError) -> Failure {
        match e {
            ExtremalError::Foliation(f) => f.into(),
            other => Failure::domain("extremal", other),
        }
    }
}

impl From<LimitError> for Failure {
    fn from(e: LimitError) -> Failure {
        Failure::domain("limitSurface", e)
    }
}

type Outcome = Result<Value, Failure>;

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::domain("io", e))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::domain("io", format!("{path}: {e}")))
    }
}

fn load_surface(path: &str) -> Result<Surface, Failure> {
    Surface::from_json(&read_input(path)?).map_err(|e| Failure::domain("surface", e))
}

fn scalar(text: &str) -> Result<Scalar, Failure> {
    text.trim().parse().map_err(|e| Failure::domain("scalar", format!("{text}: {e}")))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn budgets_value(b: &Budgets) -> Value {
    json!({ "traceScale": b.trace_scale, "returnSteps": b.return_steps, "rauzySteps": b.rauzy_steps })
}

fn exact(s: &Scalar) -> Value {
    json!({ "exact": s.to_string(), "decimal": s.to_decimal(12) })
}

fn parse_curve(text: &str) -> Result<Curve, Failure> {
    let bad = || Failure::domain("curve", format!("cannot parse curve {text:?}"));
    let (head, rest) = text.split_once(':').unwrap_or((text, ""));
    let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
    let int = |s: &str| s.parse::<i64>().map_err(|_| bad());
    let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
    match head {
        "horizontal" => Ok(Curve::horizontal()),
        "vertical" => Ok(Curve::vertical()),
        "torus" if parts.len() == 2 => Ok(Curve::TorusClass { p: int(parts[0])?, q: int(parts[1])? }),
        "core" if parts.len() == 1 => Ok(Curve::CylinderCore { component: idx(parts[0])? }),
        "hleaf" if parts.len() == 2 => Ok(Curve::HorizontalLeaf { rect: idx(parts[0])?, y: scalar(parts[1])? }),
        "vleaf" if parts.len() == 2 => Ok(Curve::VerticalLeaf { rect: idx(parts[0])?, x: scalar(parts[1])? }),
        _ if text.trim_start().starts_with('{') => serde_json::from_str(text).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

fn load_correspondence(path: &Option<String>) -> Result<Correspondence, Failure> {
    match path {
        None => Ok(Correspondence::identity()),
        Some(p) => Correspondence::from_json(&read_input(p)?).map_err(|e| Failure::domain("correspondence", e)),
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ExchangeInput {
    lengths: Vec<Scalar>,
    #[serde(default)]
    top: Option<Vec<usize>>,
    #[serde(default)]
    bottom: Option<Vec<usize>>,
    #[serde(default)]
    image_pos: Option<Vec<usize>>,
}

fn run(cli: Cli) -> Outcome {
    let scale = cli
        .budget_scale
        .or_else(|| std::env::var("STREBEL_BUDGET_SCALE").ok().and_then(|v| v.trim().parse().ok()))
        .unwrap_or(1);
    let budgets = Budgets::scaled(scale);
    match cli.command {
        Command::Validate { surface } => {
            let s = load_surface(&surface)?;
            let canonical: Value = serde_json::from_str(&s.to_json()).expect("canonical json");
            Ok(json!({
                "valid": true,
                "genus": s.genus(),
                "punctures": s.puncture_count(),
                "eulerCharacteristic": s.euler_characteristic(),
                "area": exact(&s.area()),
                "singularities": to_value(&s.singularities()),
                "canonical": canonical,
            }))
        }
        Command::Decompose { surface } => {
            let s = load_surface(&surface)?;
            let (graph, dec) = analyze(&s, &budgets)?;
            Ok(json!({
                "graph": to_value(&graph),
                "decomposition": to_value(&dec),
                "jenkinsStrebel": dec.is_jenkins_strebel(),
                "budgets": budgets_value(&budgets),
            }))
        }
        Command::Flow { surface, lambda } => {
            let s = load_surface(&surface)?;
            let out = geodesic_flow(&s, &scalar(&lambda)?).map_err(|e| Failure::domain("surface", e))?;
            Ok(serde_json::from_str(&out.to_json()).expect("canonical json"))
        }
        Command::Iet { exchange, birkhoff, grid } => {
            let input: ExchangeInput =
                serde_json::from_str(&read_input(&exchange)?).map_err(|e| Failure::domain("iet", e))?;
            let iet = match (input.top, input.bottom, input.image_pos) {
                (Some(t), Some(b), _) => Iet::new(input.lengths, t, b),
                (_, _, Some(p)) => Iet::from_positions(input.lengths, &p),
                _ => return Err(Failure::domain("iet", "need top and bottom, or imagePos")),
            }
            .map_err(|e| Failure::domain("iet", e))?;
            let certificate = rauzy_induct(&iet, budgets.rauzy_steps).map_err(|e| Failure::domain("iet", e))?;
            let (cells, shares) = natural_cells(&iet);
            let rows = if birkhoff.is_empty() {
                Vec::new()
            } else {
                birkhoff_deviation(&iet, &cells, &shares, &birkhoff, grid)
            };
            Ok(json!({
                "exchange": to_value(&iet),
                "certificate": to_value(&certificate),
                "birkhoff": to_value(&rows),
                "budgets": budgets_value(&budgets),
            }))
        }
        Command::LimitSurface { surface, graph } => {
            let models: Vec<LimitModel> = match (surface, graph) {
                (_, Some(g)) => {
                    let spec: GraphSpec =
                        serde_json::from_str(&read_input(&g)?).map_err(|e| Failure::domain("graph", e))?;
                    vec![LimitModel::from_spec(&spec)?]
                }
                (Some(s), None) => {
                    let s = load_surface(&s)?;
                    let (graph, dec) = analyze(&s, &budgets)?;
                    limit_models(&graph, Some(&dec))?
                }
                (None, None) => return Err(Failure::domain("input", "give a surface or --graph")),
            };
            let signatures: Vec<Value> = models
                .iter()
                .map(|m| {
                    let (g, n, marked) = m.signature();
                    json!({ "genus": g, "punctures": n, "marked": marked, "trivial": m.is_trivial() })
                })
                .collect();
            Ok(json!({ "models": to_value(&models), "signatures": signatures }))
        }
        Command::LimitDistance { a, b, correspondence } => {
            let (sa, sb) = (load_surface(&a)?, load_surface(&b)?);
            let corr = load_correspondence(&correspondence)?;
            let report = limiting_distance(&sa, &sb, &corr, &budgets)?;
            let mut v = to_value(&report);
            v["budgets"] = budgets_value(&budgets);
            Ok(v)
        }
        Command::Asymptotic { a, b, correspondence } => {
            let (sa, sb) = (load_surface(&a)?, load_surface(&b)?);
            let corr = load_correspondence(&correspondence)?;
            let report = limiting_distance(&sa, &sb, &corr, &budgets)?;
            Ok(json!({
                "asymptotic": to_value(&report.asymptotic),
                "verdict": to_value(&report.verdict),
                "modularlyEquivalent": report.modularly_equivalent,
                "limitingDistance": to_value(&report.limiting_distance),
                "reason": report.reason,
                "budgets": budgets_value(&budgets),
            }))
        }
        Command::Detour { ratios } => {
            let rs = ratios.iter().map(|r| scalar(r)).collect::<Result<Vec<_>, _>>()?;
            let d = detour_metric(&rs)?;
            Ok(json!({
                "delta": d.delta.render(),
                "deltaDecimal": d.delta.to_decimal(),
                "sigma": d.sigma_star.render(),
                "sigmaDecimal": d.sigma_star.to_decimal(),
                "shiftSquare": exact(&d.shift_square),
                "shiftedTerm": d.shifted_term.render(),
                "shiftedTermDecimal": d.shifted_term.to_decimal(),
            }))
        }
        Command::Ext { surface, curve, lambda, kerckhoff } => {
            let mut s = load_surface(&surface)?;
            if let Some(l) = lambda {
                s = geodesic_flow(&s, &scalar(&l)?).map_err(|e| Failure::domain("surface", e))?;
            }
            let curves = curve.iter().map(|c| parse_curve(c)).collect::<Result<Vec<_>, _>>()?;
            if let Some(k) = kerckhoff {
                let report = kerckhoff_check(&s, &scalar(&k)?, &curves, &budgets)?;
                return Ok(to_value(&report));
            }
            let mut rows = Vec::new();
            for c in &curves {
                let b = ext_bounds(&s, c, &budgets)?;
                rows.push(json!({ "curve": to_value(c), "bounds": to_value(&b), "lower": exact(&b.lower), "upper": exact(&b.upper) }));
            }
            Ok(json!({ "curves": rows }))
        }
        Command::QcAffine { spec, ratio, grid, samples } => match (spec, ratio) {
            (_, Some(r)) => Ok(to_value(&annulus_power_map(&scalar(&r)?, samples)?)),
            (Some(p), None) => {
                let spec: AffineMapSpec =
                    serde_json::from_str(&read_input(&p)?).map_err(|e| Failure::domain("affineSpec", e))?;
                Ok(to_value(&affine_glue_map(&spec, grid)?))
            }
            (None, None) => Err(Failure::domain("input", "give an affine map spec or --ratio")),
        },
        Command::Walsh { surface, curve, max_k } => {
            let s = load_surface(&surface)?;
            let lambdas: Vec<Scalar> = (0..=max_k.min(60)).map(|k| Scalar::from_int(1i64 << k)).collect();
            let report = walsh_limit_check(&s, &parse_curve(&curve)?, &lambdas, &budgets)?;
            Ok(to_value(&report))
        }
        Command::GhCheck { surface, base, radius, step, stride, lambdas, reference } => {
            let s = load_surface(&surface)?;
            let parts: Vec<&str> = base.split(',').collect();
            if parts.len() != 3 {
                return Err(Failure::domain("input", "base must be RECT,X,Y"));
            }
            let rect = parts[0].trim().parse().map_err(|_| Failure::domain("input", "bad rectangle index"))?;
            let point = FlatPoint { rect, x: scalar(parts[1])?, y: scalar(parts[2])? };
            let (r, h, reference) = (scalar(&radius)?, scalar(&step)?, scalar(&reference)?);
            let mut rows = Vec::new();
            for l in &lambdas {
                let lam = scalar(l)?;
                let w = gh_epsilon_check(&s, &lam, &reference, &point, &r, &h, stride)
                    .map_err(|e| Failure::domain("ghCheck", e))?;
                rows.push(json!({
                    "lambda": lam.to_string(),
                    "epsilon": w.epsilon,
                    "maxDeviation": w.max_deviation,
                    "gridError": w.grid_error,
                    "samples": [w.samples_a.len(), w.samples_b.len()],
                    "pairs": w.pairs.len(),
                }));
            }
            let eps: Vec<f64> = rows.iter().map(|r| r["epsilon"].as_f64().unwrap_or(f64::NAN)).collect();
            let non_increasing = eps.windows(2).all(|w| w[1] <= w[0] + 1e-12);
            Ok(json!({
                "reference": reference.to_string(),
                "radius": r.to_string(),
                "step": h.to_string(),
                "rows": rows,
                "nonIncreasing": non_increasing,
            }))
        }
    }
}

fn render_text(v: &Value) -> String {
    match v {
        Value::Object(map) => map
            .iter()
            .map(|(k, val)| match val {
                Value::String(s) => format!("{k}: {s}"),
                other => format!("{k}: {other}"),
            })
            .collect::<Vec<_>>()
            .join("\n"),
        other => other.to_string(),
    }
}

/// Writes a report; a closed pipe downstream is not an error.
fn emit(text: &str) {
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Ok(v) => {
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&v).expect("json"),
                Format::Text => render_text(&v),
            };
            emit(&text);
            ExitCode::SUCCESS
        }
        Err(f) => {
            let err = json!({ "error": { "kind": f.kind, "message": f.message, "exitCode": f.code } });
            emit(&serde_json::to_string_pretty(&err).expect("json"));
            ExitCode::from(f.code)
        }
    }
}
