//! Each command maps a resolved configuration to the bytes of its output.

use serde::Serialize;
use serde_json::Value;

use anisoperim_core::asymptotics::{fit_exponent, ln_model_profile_asymptotic, ln_model_profile_exact, ratio_sweep};
use anisoperim_core::carnot::mc_inclusion_experiment;
use anisoperim_core::functionals::{
    perimeter_ak_grushin, perimeter_bracket_group, sweep_k, volume_sweep, BracketConstants, SetFamilyHandle,
};
use anisoperim_core::measures::normalization_constant;
use anisoperim_core::{GroupSpec, LogValue, ProblemSpec};

use crate::config::{
    load, BracketConfig, FitConfig, Format, McRunConfig, PerimeterConfig, ProfileConfig, RatioConfig, VolumeConfig,
};
use crate::error::CliError;

pub struct Outcome {
    pub bytes: Vec<u8>,
    /// Set when the run succeeded but an expectation of the config failed.
    pub expectation: Option<String>,
}

impl Outcome {
    fn ok(bytes: Vec<u8>) -> Self {
        Outcome {
            bytes,
            expectation: None,
        }
    }
}

pub fn execute(command: &str, config: &Value) -> Result<Outcome, CliError> {
    match command {
        "volume" => volume(load(config)?),
        "perimeter" => perimeter(load(config)?),
        "bracket" => bracket(load(config)?),
        "fit" => fit(load(config)?),
        "ratio" => ratio(load(config)?),
        "mc" => mc(load(config)?),
        "profile" => profile(load(config)?),
        other => Err(CliError::Invalid(format!("unknown command {other:?}"))),
    }
}

const LOG_NOTE: &str = "# logs are natural (base e)";

fn csv_table(note: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    out.extend_from_slice(LOG_NOTE.as_bytes());
    if !note.is_empty() {
        out.extend_from_slice(b"; ");
        out.extend_from_slice(note.as_bytes());
    }
    out.push(b'\n');
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s.into_bytes()
}

fn group_only(spec: &ProblemSpec, command: &str) -> Result<GroupSpec, CliError> {
    match spec {
        ProblemSpec::Group(g) => Ok(g.clone()),
        ProblemSpec::Grushin(_) => Err(CliError::Invalid(format!("{command} requires the group setting"))),
    }
}

fn family(spec: &ProblemSpec, k: f64, c: Option<f64>) -> anisoperim_core::Result<SetFamilyHandle> {
    let set = SetFamilyHandle::for_spec(spec, k)?;
    match c {
        Some(c) => set.with_normalisation(c),
        None => Ok(set),
    }
}

fn volume(cfg: VolumeConfig) -> Result<Outcome, CliError> {
    let q = cfg.quadrature;
    q.validate()?;
    let ln_z = normalization_constant(&cfg.spec, &q)?.ln();
    let values = volume_sweep(&cfg.spec, &cfg.k, cfg.c, &q)?;
    let rows: Vec<Vec<f64>> = values.iter().map(|(k, v)| vec![*k, v.ln(), v.ln() - ln_z]).collect();
    Ok(Outcome::ok(csv_table(
        "",
        &["K", "log_volume_unnormalized", "log_volume_normalized"],
        &rows,
    )?))
}

fn perimeter(cfg: PerimeterConfig) -> Result<Outcome, CliError> {
    let q = cfg.quadrature;
    q.validate()?;
    let ln_z = normalization_constant(&cfg.spec, &q)?.ln();
    let values: Vec<LogValue> = match &cfg.spec {
        ProblemSpec::Grushin(s) => sweep_k(&cfg.k, |k| {
            perimeter_ak_grushin(s, &family(&cfg.spec, k, cfg.c)?, cfg.form, &q)
        })?,
        ProblemSpec::Group(g) => sweep_k(&cfg.k, |k| {
            let set = family(&cfg.spec, k, cfg.c)?;
            let b = perimeter_bracket_group(g, &set, &cfg.epsilon_ladder, &BracketConstants::from_c0(cfg.c0), &q)?;
            Ok(b.extrapolated)
        })?,
    };
    let rows: Vec<Vec<f64>> = cfg
        .k
        .iter()
        .zip(&values)
        .map(|(k, v)| vec![*k, v.ln(), v.ln() - ln_z])
        .collect();
    Ok(Outcome::ok(csv_table(
        "",
        &["K", "log_perimeter_unnormalized", "log_perimeter_normalized"],
        &rows,
    )?))
}

fn bracket(cfg: BracketConfig) -> Result<Outcome, CliError> {
    let q = cfg.quadrature;
    q.validate()?;
    let group = group_only(&cfg.spec, "bracket")?;
    let base = BracketConstants::from_c0(cfg.c0);
    let constants = BracketConstants {
        c1: cfg.c1.unwrap_or(base.c1),
        c2: cfg.c2.unwrap_or(base.c2),
        c3: cfg.c3.unwrap_or(base.c3),
    };
    let brackets = sweep_k(&cfg.k, |k| {
        perimeter_bracket_group(&group, &SetFamilyHandle::group(k)?, &cfg.epsilon_ladder, &constants, &q)
    })?;
    let rows: Vec<Vec<f64>> = cfg
        .k
        .iter()
        .zip(&brackets)
        .map(|(k, b)| vec![*k, b.lower.ln(), b.upper.ln(), b.extrapolated.ln()])
        .collect();
    Ok(Outcome::ok(csv_table(
        "values are unnormalized, at the smallest epsilon",
        &[
            "K",
            "log_perimeter_lower",
            "log_perimeter_upper",
            "log_perimeter_extrapolated",
        ],
        &rows,
    )?))
}

fn fit(cfg: FitConfig) -> Result<Outcome, CliError> {
    let invalid = |e: csv::Error| CliError::Invalid(format!("reading the fit input: {e}"));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(cfg.data.as_bytes());
    let header: Vec<String> = reader.headers().map_err(invalid)?.iter().map(str::to_string).collect();
    let k_col = header
        .iter()
        .position(|h| h == "K")
        .ok_or_else(|| CliError::Invalid("the fit input has no K column".into()))?;
    let col = match &cfg.column {
        Some(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Invalid(format!("the fit input has no column {name:?}")))?,
        None => (0..header.len())
            .find(|&i| i != k_col)
            .ok_or_else(|| CliError::Invalid("the fit input has no column besides K".into()))?,
    };
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(invalid)?;
        let num = |i: usize| -> Result<f64, CliError> {
            let s = record.get(i).unwrap_or("");
            s.parse::<f64>()
                .map_err(|_| CliError::Invalid(format!("not a number in column {:?}: {s:?}", header[i])))
        };
        samples.push((num(k_col)?, LogValue::from_log(num(col)?)));
    }
    let mut result = fit_exponent(&samples, cfg.beta)?;
    if let Some(p) = cfg.predicted {
        result = result.with_prediction(p);
    }
    Ok(Outcome::ok(json_bytes(&result)))
}

fn ratio(cfg: RatioConfig) -> Result<Outcome, CliError> {
    cfg.quadrature.validate()?;
    let series = ratio_sweep(&cfg.spec, &cfg.k, cfg.r, &cfg.quadrature)?;
    let bytes = match cfg.format {
        Format::Json => json_bytes(&series),
        Format::Csv => {
            let rows: Vec<Vec<f64>> = series
                .rows()
                .iter()
                .map(|r| vec![r.k, r.log_volume, r.log_perimeter, r.log_ratio])
                .collect();
            csv_table(
                "volume and perimeter are normalized",
                &["K", "log_volume", "log_perimeter", "log_ratio"],
                &rows,
            )?
        }
    };
    Ok(Outcome::ok(bytes))
}

fn mc(cfg: McRunConfig) -> Result<Outcome, CliError> {
    let group = group_only(&cfg.spec, "mc")?;
    let report = mc_inclusion_experiment(&group, &cfg.mc, cfg.which)?;
    let expectation = (cfg.expect_clean && report.violations > 0).then(|| {
        format!(
            "{} of {} samples violate the inclusion",
            report.violations, report.checked
        )
    });
    Ok(Outcome {
        bytes: json_bytes(&report),
        expectation,
    })
}

/// `ln min(t, 1 - t)` from `ln t`.
fn ln_lower_half(ln_t: f64) -> f64 {
    if ln_t > -std::f64::consts::LN_2 {
        (-ln_t.exp_m1()).ln()
    } else {
        ln_t
    }
}

fn profile(cfg: ProfileConfig) -> Result<Outcome, CliError> {
    if cfg.t.is_empty() && cfg.log_t.is_empty() {
        return Err(CliError::Invalid("give at least one value of --t or --log-t".into()));
    }
    if let Some(t) = cfg.t.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(CliError::Invalid(format!("t must lie in (0, 1), got {t}")));
    }
    let mut rows = Vec::new();
    for ln_t in cfg.t.iter().map(|t| t.ln()).chain(cfg.log_t.iter().copied()) {
        let exact = ln_model_profile_exact(cfg.r, ln_t)?;
        let asymptotic = ln_model_profile_asymptotic(cfg.r, ln_lower_half(ln_t));
        rows.push(vec![ln_t.exp(), ln_t, exact.exp(), exact, asymptotic.exp(), asymptotic]);
    }
    Ok(Outcome::ok(csv_table(
        "the asymptotic form is taken at min(t, 1 - t)",
        &[
            "t",
            "log_t",
            "profile_exact",
            "log_profile_exact",
            "profile_asymptotic",
            "log_profile_asymptotic",
        ],
        &rows,
    )?))
}
