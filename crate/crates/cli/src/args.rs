use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

#[derive(Parser, Debug)]
#[command(
    name = "anisoperim",
    version,
    about = "Volumes, perimeters and isoperimetric ratios of anisotropic half-spaces"
)]
pub struct Cli {
    /// Worker threads for K-sweeps and Monte Carlo runs; 0 picks the number of cores.
    #[arg(long, global = true, env = "ANISOPERIM_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Volume of A_K over a grid of K (CSV).
    Volume(VolumeArgs),
    /// Perimeter of A_K over a grid of K (CSV).
    Perimeter(PerimeterArgs),
    /// Lower and upper band integrals around the group perimeter (CSV).
    Bracket(BracketArgs),
    /// Fit ln F(K) + K^{2β} = a ln K + c to a CSV column (JSON).
    Fit(FitArgs),
    /// Ratio of the perimeter to the model profile at the volume (JSON or CSV).
    Ratio(RatioArgs),
    /// Monte Carlo check of the ε-enlargement inclusions (JSON).
    Mc(McArgs),
    /// Exact and asymptotic model isoperimetric profiles (CSV).
    Profile(ProfileArgs),
    /// Re-run the command recorded in a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// JSON file with configuration values; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest file; defaults to `<out>.manifest.json`, or stderr when writing to stdout.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SpecArgs {
    #[arg(long, value_enum)]
    pub setting: Option<SettingArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long = "p", allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long = "m")]
    pub m: Option<usize>,
    /// Skew-symmetric matrices as JSON, each flat row-major or a list of rows.
    #[arg(long = "B")]
    pub b: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SettingArg {
    Grushin,
    Group,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum FormArg {
    Exact,
    Literal,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum WhichArg {
    Outer,
    Inner,
    Delta,
}

#[derive(Args, Debug, Clone, Default)]
pub struct QuadratureArgs {
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_log_tol: Option<f64>,
    #[arg(long)]
    pub max_levels: Option<u32>,
}

#[derive(Args, Debug)]
pub struct VolumeArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Grid of K: `a..b` (integers, inclusive) or a comma list.
    #[arg(long = "K")]
    pub k: Option<String>,
    /// Constant c in A_K = {c|y| ≥ |x|^α + K}.
    #[arg(long = "c")]
    pub c: Option<f64>,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct PerimeterArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long = "K")]
    pub k: Option<String>,
    #[arg(long = "c")]
    pub c: Option<f64>,
    /// Integrand of the Grushin perimeter.
    #[arg(long, value_enum)]
    pub form: Option<FormArg>,
    /// Comma list of decreasing ε for the group bracket.
    #[arg(long)]
    pub epsilon_ladder: Option<String>,
    #[arg(long = "C0")]
    pub c0: Option<f64>,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BracketArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long = "K")]
    pub k: Option<String>,
    #[arg(long)]
    pub epsilon_ladder: Option<String>,
    #[arg(long = "C0")]
    pub c0: Option<f64>,
    #[arg(long = "C1")]
    pub c1: Option<f64>,
    #[arg(long = "C2")]
    pub c2: Option<f64>,
    #[arg(long = "C3")]
    pub c3: Option<f64>,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV file with a `K` column; stdin when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column to fit; the first column after `K` by default.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Exponent to report alongside the fit.
    #[arg(long, allow_hyphen_values = true)]
    pub predicted: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct RatioArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long = "K")]
    pub k: Option<String>,
    /// Profile exponent; the model exponent of the problem by default.
    #[arg(long = "r")]
    pub r: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_enum)]
    pub which: Option<WhichArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long = "C0")]
    pub c0: Option<f64>,
    #[arg(long = "C1")]
    pub c1: Option<f64>,
    #[arg(long = "C2")]
    pub c2: Option<f64>,
    #[arg(long = "C3")]
    pub c3: Option<f64>,
    #[arg(long)]
    pub x_radius: Option<f64>,
    #[arg(long)]
    pub z_slack: Option<f64>,
    /// Exit with status 4 when any violation is found.
    #[arg(long)]
    pub expect_clean: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[arg(long = "r")]
    pub r: Option<f64>,
    /// Comma list of t in (0, 1).
    #[arg(long = "t")]
    pub t: Option<String>,
    /// Comma list of ln t, for t below the double range.
    #[arg(long = "log-t", allow_hyphen_values = true)]
    pub log_t: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Also write the reproduced output here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Inserts `value` at `key` when present.
fn put<T: Into<Value>>(map: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.to_string(), v.into());
    }
}

impl SpecArgs {
    pub fn overrides(&self) -> Result<Map<String, Value>, String> {
        let mut m = Map::new();
        put(
            &mut m,
            "setting",
            self.setting.map(|s| match s {
                SettingArg::Grushin => "grushin",
                SettingArg::Group => "group",
            }),
        );
        put(&mut m, "gamma", self.gamma);
        put(&mut m, "p", self.p);
        put(&mut m, "n", self.n);
        put(&mut m, "m", self.m);
        if let Some(b) = &self.b {
            let parsed: Value = serde_json::from_str(b).map_err(|e| format!("--B is not valid JSON: {e}"))?;
            m.insert("B".into(), parsed);
        }
        Ok(m)
    }
}

impl QuadratureArgs {
    pub fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        put(&mut m, "rel_tol", self.rel_tol);
        put(&mut m, "abs_log_tol", self.abs_log_tol);
        put(&mut m, "max_levels", self.max_levels);
        m
    }
}

pub fn form_name(f: FormArg) -> &'static str {
    match f {
        FormArg::Exact => "exact",
        FormArg::Literal => "literal",
    }
}

pub fn format_name(f: FormatArg) -> &'static str {
    match f {
        FormatArg::Json => "json",
        FormatArg::Csv => "csv",
    }
}

pub fn which_name(w: WhichArg) -> &'static str {
    match w {
        WhichArg::Outer => "outer",
        WhichArg::Inner => "inner",
        WhichArg::Delta => "delta",
    }
}

/// Flags given on the command line, as a partial configuration.
pub fn flag_overrides(command: &Command) -> Result<Value, String> {
    let mut top = Map::new();
    let with_spec = |top: &mut Map<String, Value>, spec: &SpecArgs| -> Result<(), String> {
        let s = spec.overrides()?;
        if !s.is_empty() {
            top.insert("spec".into(), Value::Object(s));
        }
        Ok(())
    };
    let quadrature = |top: &mut Map<String, Value>, q: &QuadratureArgs| {
        let q = q.overrides();
        if !q.is_empty() {
            top.insert("quadrature".into(), Value::Object(q));
        }
    };
    match command {
        Command::Volume(a) => {
            with_spec(&mut top, &a.spec)?;
            put(&mut top, "K", a.k.clone());
            put(&mut top, "c", a.c);
            quadrature(&mut top, &a.quadrature);
        }
        Command::Perimeter(a) => {
            with_spec(&mut top, &a.spec)?;
            put(&mut top, "K", a.k.clone());
            put(&mut top, "c", a.c);
            put(&mut top, "form", a.form.map(form_name));
            put(&mut top, "epsilon_ladder", a.epsilon_ladder.clone());
            put(&mut top, "C0", a.c0);
            quadrature(&mut top, &a.quadrature);
        }
        Command::Bracket(a) => {
            with_spec(&mut top, &a.spec)?;
            put(&mut top, "K", a.k.clone());
            put(&mut top, "epsilon_ladder", a.epsilon_ladder.clone());
            put(&mut top, "C0", a.c0);
            put(&mut top, "C1", a.c1);
            put(&mut top, "C2", a.c2);
            put(&mut top, "C3", a.c3);
            quadrature(&mut top, &a.quadrature);
        }
        Command::Fit(a) => {
            put(&mut top, "input", a.input.as_ref().map(|p| p.display().to_string()));
            put(&mut top, "column", a.column.clone());
            put(&mut top, "beta", a.beta);
            put(&mut top, "predicted", a.predicted);
        }
        Command::Ratio(a) => {
            with_spec(&mut top, &a.spec)?;
            put(&mut top, "K", a.k.clone());
            put(&mut top, "r", a.r);
            put(&mut top, "format", a.format.map(format_name));
            quadrature(&mut top, &a.quadrature);
        }
        Command::Mc(a) => {
            with_spec(&mut top, &a.spec)?;
            put(&mut top, "which", a.which.map(which_name));
            if a.expect_clean {
                top.insert("expect_clean".into(), json!(true));
            }
            let mut mc = Map::new();
            put(&mut mc, "seed", a.seed);
            put(&mut mc, "samples", a.samples);
            put(&mut mc, "epsilon", a.epsilon);
            put(&mut mc, "K", a.k);
            put(&mut mc, "C0", a.c0);
            put(&mut mc, "C1", a.c1);
            put(&mut mc, "C2", a.c2);
            put(&mut mc, "C3", a.c3);
            put(&mut mc, "x_radius", a.x_radius);
            put(&mut mc, "z_slack", a.z_slack);
            if !mc.is_empty() {
                top.insert("mc".into(), Value::Object(mc));
            }
        }
        Command::Profile(a) => {
            put(&mut top, "r", a.r);
            put(&mut top, "t", a.t.clone());
            put(&mut top, "log_t", a.log_t.clone());
        }
        Command::Replay(_) => {}
    }
    Ok(Value::Object(top))
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Volume(_) => "volume",
            Command::Perimeter(_) => "perimeter",
            Command::Bracket(_) => "bracket",
            Command::Fit(_) => "fit",
            Command::Ratio(_) => "ratio",
            Command::Mc(_) => "mc",
            Command::Profile(_) => "profile",
            Command::Replay(_) => "replay",
        }
    }

    pub fn output(&self) -> Option<&OutputArgs> {
        match self {
            Command::Volume(a) => Some(&a.output),
            Command::Perimeter(a) => Some(&a.output),
            Command::Bracket(a) => Some(&a.output),
            Command::Fit(a) => Some(&a.output),
            Command::Ratio(a) => Some(&a.output),
            Command::Mc(a) => Some(&a.output),
            Command::Profile(a) => Some(&a.output),
            Command::Replay(_) => None,
        }
    }
}
