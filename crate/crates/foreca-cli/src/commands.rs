//! Subcommand implementations.

use foreca::spectrum::{normalize_density, sample_acf, wosa_univariate, WosaConfig};
use foreca::{omega_of_series, ForecaParams, SpectrumEstimator};
use serde_json::json;

use crate::csv_io::{atomic_write, read_dataset, resolve_column, resolve_columns, sci};
use crate::error::CliError;
use crate::model_file;
use crate::{FitArgs, Format, OmegaArgs, SpectrumArgs, TransformArgs};

fn wosa_config(segment_length: Option<usize>) -> WosaConfig {
    match segment_length {
        Some(s) => WosaConfig::with_segment_length(s),
        None => WosaConfig::default(),
    }
}

pub fn cmd_omega(args: &OmegaArgs) -> Result<(), CliError> {
    let data = read_dataset(&args.data.input, &args.data.read_options())?;
    let cfg = wosa_config(args.segment_length);
    let segment_length = cfg.resolve_segment_length(data.len())?;
    let estimator = SpectrumEstimator::Wosa(cfg);
    let selected = match &args.columns {
        Some(spec) => resolve_columns(data.column_names(), spec)?,
        None => (0..data.n_channels()).collect(),
    };

    struct Row {
        column: String,
        result: Result<foreca::OmegaValue, foreca::Error>,
    }
    let rows: Vec<Row> = selected
        .iter()
        .map(|&c| Row {
            column: data.column_names()[c].clone(),
            result: omega_of_series(&data.channel(c), &estimator),
        })
        .collect();
    let failures = rows.iter().filter(|r| r.result.is_err()).count();

    match args.format {
        Format::Table => {
            let width = rows
                .iter()
                .map(|r| r.column.len())
                .chain(["column".len()])
                .max()
                .unwrap();
            println!("{:width$}  {:>10}  {:>6}  {:>14}", "column", "omega", "n_bins", "segment_length");
            for row in &rows {
                match &row.result {
                    Ok(v) => println!(
                        "{:width$}  {:>10.6}  {:>6}  {:>14}",
                        row.column, v.omega, v.n_bins, segment_length
                    ),
                    Err(e) => println!("{:width$}  error: {e}", row.column),
                }
            }
        }
        Format::Json => {
            let entries: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| match &row.result {
                    Ok(v) => json!({
                        "column": row.column,
                        "omega": v.omega,
                        "n_bins": v.n_bins,
                        "segment_length": segment_length,
                    }),
                    Err(e) => json!({ "column": row.column, "error": e.to_string() }),
                })
                .collect();
            println!("{}", serde_json::Value::Array(entries));
        }
    }

    if args.strict && failures > 0 {
        return Err(CliError::Numerical(format!("{failures} column(s) failed")));
    }
    Ok(())
}

pub fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    if args.components == 0 {
        return Err(CliError::Input("--components must be at least 1".into()));
    }
    let data = read_dataset(&args.data.input, &args.data.read_options())?;
    let mut params = ForecaParams::new(args.components)
        .with_seed(args.seed)
        .with_restarts(args.restarts)
        .with_tol(args.tol)
        .with_max_iter(args.max_iter);
    if let Some(s) = args.segment_length {
        params = params.with_segment_length(s);
    }
    let model = params.fit(&data).map_err(|e| {
        if let foreca::Error::SingularCovariance { columns, .. } = &e {
            let names: Vec<&str> = columns
                .iter()
                .map(|&c| data.column_names()[c].as_str())
                .collect();
            CliError::Numerical(format!("{e}; affected columns: {}", names.join(", ")))
        } else {
            e.into()
        }
    })?;

    let file = model_file::from_model(&model);
    atomic_write(&args.output, &model_file::to_json_bytes(&file))?;

    match args.format {
        Format::Table => {
            println!(
                "{:>9}  {:>10}  {:>10}  {:>10}  {:>9}",
                "component", "omega", "lambda_min", "iterations", "converged"
            );
            for k in 0..model.n_components() {
                let trace = &model.traces()[k];
                println!(
                    "{:>9}  {:>10.6}  {:>10.6}  {:>10}  {:>9}",
                    k + 1,
                    model.omega()[k],
                    model.lambda_min()[k],
                    trace.iterations,
                    if trace.converged { "yes" } else { "no" }
                );
            }
        }
        Format::Json => {
            let entries: Vec<serde_json::Value> = (0..model.n_components())
                .map(|k| {
                    let trace = &model.traces()[k];
                    json!({
                        "component": k + 1,
                        "omega": model.omega()[k],
                        "lambda_min": model.lambda_min()[k],
                        "iterations": trace.iterations,
                        "converged": trace.converged,
                    })
                })
                .collect();
            println!("{}", serde_json::Value::Array(entries));
        }
    }
    Ok(())
}

pub fn cmd_transform(args: &TransformArgs) -> Result<(), CliError> {
    let model = model_file::into_model(model_file::load(&args.model)?)?;
    let data = read_dataset(&args.data.input, &args.data.read_options())?;
    let z = model.transform(&data).map_err(|e| match e {
        // A model/data shape disagreement is a degenerate pairing, not a
        // malformed input file.
        foreca::Error::DimensionMismatch { .. } => CliError::Numerical(e.to_string()),
        other => other.into(),
    })?;

    let mut out = String::new();
    out.push_str(&z.column_names().join(","));
    out.push('\n');
    for t in 0..z.len() {
        for k in 0..z.n_channels() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&sci(z.data().get(t, k)));
        }
        out.push('\n');
    }
    atomic_write(&args.output, out.as_bytes())
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let data = read_dataset(&args.data.input, &args.data.read_options())?;
    let column = resolve_column(data.column_names(), &args.column)?;
    let name = data.column_names()[column].clone();
    let y = data.channel(column);
    let cfg = wosa_config(args.segment_length);
    let max_lag = match args.acf_lags {
        Some(l) => l,
        None => 48.min(y.len() - 1),
    };

    let outcome = wosa_univariate(&y, &cfg)
        .and_then(|raw| normalize_density(&raw))
        .and_then(|density| sample_acf(&y, max_lag).map(|acf| (density, acf)));
    let (density, acf) = match outcome {
        Ok(pair) => pair,
        Err(e) if !e.is_input_error() => {
            eprintln!("column {name}: {e}");
            if args.strict {
                return Err(CliError::Numerical(format!("column {name} failed")));
            }
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };

    match args.format {
        Format::Table => {
            println!("frequency,density");
            for (bin, &v) in density.values().iter().enumerate() {
                println!("{},{}", sci(density.grid().frequency(bin)), sci(v));
            }
            println!();
            println!("lag,rho");
            for (lag, &r) in acf.rho.iter().enumerate() {
                println!("{lag},{}", sci(r));
            }
        }
        Format::Json => {
            let doc = json!({
                "column": name,
                "segment_length": density.grid().segment_length(),
                "n_bins": density.n_bins(),
                "frequency": density.grid().frequencies(),
                "density": density.values(),
                "lag": (0..acf.rho.len()).collect::<Vec<usize>>(),
                "rho": acf.rho,
            });
            println!("{doc}");
        }
    }
    Ok(())
}
