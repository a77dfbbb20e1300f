use std::path::PathBuf;

use anyhow::{anyhow, Result};
use lrdlab::arfima_figarch::{fit, simulate, ArfimaFigarchParams, FitOptions, FitResult};
use lrdlab::dfa::dfa_analysis;
use lrdlab::diagnostics::{histogram, moments, qq_pairs, MomentReport};
use lrdlab::ingest::{downsample, load_prices, log_returns};
use lrdlab::rs::rs_analysis;
use lrdlab::synth_eval::{
    evaluate, load_ensemble, save_ensemble, EvaluateOptions, EvaluationReport, Outcome,
    PathEnsemble,
};
use lrdlab::{
    Frequency, HurstAnalysis, HurstEstimate, HurstMethod, LrdError, PriceSeries, ReturnSeries,
};
use serde::Serialize;

use crate::config::{Config, ParamConfig};
use crate::output::{file_stem, histogram_csv, qq_csv, trace_csv, Output, Row};
use crate::{
    Cli, Command, DataArgs, DiagnoseArgs, EvaluateArgs, FitArgs, Format, HurstArgs, ReportArgs,
    SimulateArgs, Status,
};

const DEFAULT_OUT_DIR: &str = "lrdlab-out";
const OVERLAY_PATHS: usize = 50;

/// Parameters used by `simulate` unless overridden.
pub const DEFAULT_SIM_PARAMS: ArfimaFigarchParams = ArfimaFigarchParams {
    mu: 5e-4,
    phi: 0.0,
    theta: 0.0,
    d_m: 0.2,
    omega: 1e-6,
    alpha: 0.2,
    beta: 0.5,
    d_v: 0.4,
    nu: 6.0,
};

pub fn run(cli: Cli) -> Result<Status> {
    let config = Config::load(cli.config.as_deref())?;
    let format = match (cli.format, config.format.as_deref()) {
        (Some(f), _) => f,
        (None, Some("csv")) => Format::Csv,
        (None, Some("json")) | (None, None) => Format::Json,
        (None, Some(other)) => {
            return Err(anyhow!(
                "invalid format '{other}' in config (expected json or csv)"
            ))
        }
    };
    let out_dir = cli
        .out_dir
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let out = Output::new(out_dir, format)?;
    match cli.command {
        Command::Ingest(a) => ingest(&a, &config, &out),
        Command::Diagnose(a) => diagnose(&a, &config, &out),
        Command::Hurst(a) => hurst(&a, &config, &out),
        Command::Fit(a) => fit_cmd(&a, &config, &out),
        Command::Simulate(a) => simulate_cmd(&a, &config, &out),
        Command::Evaluate(a) => evaluate_cmd(&a, &config, &out),
        Command::ReportAll(a) => report_all(&a, &config, &out),
    }
}

struct Loaded {
    label: String,
    frequency: Frequency,
    prices: PriceSeries,
    returns: ReturnSeries,
}

impl Loaded {
    fn stem(&self) -> String {
        format!("{}_{}", self.label, self.frequency)
    }
}

fn load(args: &DataArgs, config: &Config) -> Result<Loaded> {
    let path = args
        .data
        .clone()
        .or_else(|| config.data.clone())
        .ok_or_else(|| anyhow!("missing --data (or `data` in the config file)"))?;
    let frequency = match args.frequency {
        Some(f) => f,
        None => config.frequency()?.unwrap_or(Frequency::Daily),
    };
    let label = args
        .label
        .clone()
        .or_else(|| config.label.clone())
        .unwrap_or_else(|| file_stem(&path));
    let daily = load_prices(&path, &label)?;
    let prices = match frequency {
        Frequency::Daily => daily,
        f => downsample(&daily, f)?,
    };
    let returns = log_returns(&prices)?;
    Ok(Loaded {
        label,
        frequency,
        prices,
        returns,
    })
}

fn truncation_lag(flag: Option<usize>, config: &Config) -> usize {
    flag.or(config.truncation_lag)
        .unwrap_or(lrdlab::arfima_figarch::DEFAULT_TRUNCATION_LAG)
}

fn returns_csv(r: &ReturnSeries) -> Result<String> {
    let mut buf = Vec::new();
    r.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn status_of(e: &LrdError) -> Status {
    if e.is_input_error() {
        Status::InputFailure
    } else {
        Status::NumericalFailure
    }
}

/// Record a section result, keeping the worst status seen.
fn section<T>(r: lrdlab::Result<T>, status: &mut Status) -> Outcome<T> {
    if let Err(e) = &r {
        log::error!("{e}");
        *status = (*status).max(status_of(e));
    }
    r.into()
}

fn fit_status(f: &FitResult) -> Status {
    if f.converged {
        Status::Ok
    } else {
        log::error!(
            "optimizer did not converge after {} iterations (gradient norm {:e})",
            f.iterations,
            f.gradient_norm
        );
        Status::NumericalFailure
    }
}

#[derive(Serialize)]
struct IngestSummary {
    label: String,
    frequency: Frequency,
    n_prices: usize,
    n_returns: usize,
    first_date: String,
    last_date: String,
    prices_file: String,
    returns_file: String,
}

fn ingest(args: &DataArgs, config: &Config, out: &Output) -> Result<Status> {
    let d = load(args, config)?;
    let stem = d.stem();
    let prices_file = format!("{stem}_prices.csv");
    let returns_file = format!("{stem}_returns.csv");
    let mut buf = Vec::new();
    d.prices.write_csv(&mut buf)?;
    out.write(&prices_file, &String::from_utf8(buf)?)?;
    out.write(&returns_file, &returns_csv(&d.returns)?)?;
    let dates = d.prices.dates();
    let summary = IngestSummary {
        label: d.label.clone(),
        frequency: d.frequency,
        n_prices: d.prices.len(),
        n_returns: d.returns.len(),
        first_date: dates.first().map(|x| x.to_string()).unwrap_or_default(),
        last_date: dates.last().map(|x| x.to_string()).unwrap_or_default(),
        prices_file,
        returns_file,
    };
    let json = out.write_json(&format!("{stem}_ingest.json"), &summary)?;
    let row = Row::default()
        .text("label", summary.label.as_str())
        .text("frequency", summary.frequency.as_str())
        .text("n_prices", summary.n_prices.to_string())
        .text("n_returns", summary.n_returns.to_string())
        .text("first_date", summary.first_date.as_str())
        .text("last_date", summary.last_date.as_str());
    out.print(&json, &row);
    Ok(Status::Ok)
}

fn write_distribution_plots(out: &Output, stem: &str, r: &ReturnSeries, bins: usize) -> Result<()> {
    out.write(
        &format!("{stem}_histogram.csv"),
        &histogram_csv(&histogram(&r.values, bins)?),
    )?;
    out.write(&format!("{stem}_qq.csv"), &qq_csv(&qq_pairs(&r.values)))?;
    Ok(())
}

#[derive(Serialize)]
struct Labelled<'a, T> {
    label: &'a str,
    frequency: Frequency,
    #[serde(flatten)]
    value: &'a T,
}

fn diagnose(args: &DiagnoseArgs, config: &Config, out: &Output) -> Result<Status> {
    let d = load(&args.data, config)?;
    let stem = d.stem();
    let m = moments(&d.returns)?;
    write_distribution_plots(out, &stem, &d.returns, args.bins)?;
    let json = out.write_json(
        &format!("{stem}_moments.json"),
        &Labelled {
            label: &d.label,
            frequency: d.frequency,
            value: &m,
        },
    )?;
    let row = table_row(&d).moments("", &m);
    out.write(&format!("{stem}_moments.csv"), &row.to_csv())?;
    out.print(&json, &row);
    Ok(Status::Ok)
}

fn table_row(d: &Loaded) -> Row {
    Row::default()
        .text("label", d.label.as_str())
        .text("frequency", d.frequency.as_str())
}

fn method_name(m: HurstMethod) -> &'static str {
    match m {
        HurstMethod::Rs => "rs",
        HurstMethod::Dfa => "dfa",
    }
}

fn run_hurst(r: &ReturnSeries, method: HurstMethod) -> lrdlab::Result<HurstAnalysis> {
    match method {
        HurstMethod::Rs => rs_analysis(r),
        HurstMethod::Dfa => dfa_analysis(r),
    }
}

fn hurst(args: &HurstArgs, config: &Config, out: &Output) -> Result<Status> {
    let d = load(&args.data, config)?;
    let method = match args.method {
        Some(m) => m,
        None => config.method()?.unwrap_or(HurstMethod::Rs),
    };
    let analysis = run_hurst(&d.returns, method)?;
    let stem = format!("{}_{}", d.stem(), method_name(method));
    out.write(&format!("{stem}_loglog.csv"), &analysis.fit.to_csv())?;
    let json = out.write_json(
        &format!("{stem}.json"),
        &Labelled {
            label: &d.label,
            frequency: d.frequency,
            value: &analysis.estimate,
        },
    )?;
    let row = table_row(&d)
        .text("method", method_name(method))
        .hurst("", &analysis.estimate);
    out.write(&format!("{stem}.csv"), &row.to_csv())?;
    out.print(&json, &row);
    Ok(Status::Ok)
}

fn fit_cmd(args: &FitArgs, config: &Config, out: &Output) -> Result<Status> {
    let d = load(&args.data, config)?;
    let options = FitOptions {
        truncation_lag: truncation_lag(args.truncation_lag, config),
        ..FitOptions::default()
    };
    let result = fit(&d.returns, None, &options)?;
    let stem = format!("{}_fit", d.stem());
    out.write(
        &format!("{stem}_trace.csv"),
        &trace_csv(&result.objective_trace),
    )?;
    let json = out.write_json(
        &format!("{stem}.json"),
        &Labelled {
            label: &d.label,
            frequency: d.frequency,
            value: &result,
        },
    )?;
    let row = table_row(&d).fit("", &result);
    out.write(&format!("{stem}.csv"), &row.to_csv())?;
    out.print(&json, &row);
    Ok(fit_status(&result))
}

#[derive(Serialize)]
struct SimulationRecord {
    seed: u64,
    n: usize,
    burn_in: usize,
    truncation_lag: usize,
    params: ArfimaFigarchParams,
    returns_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble_file: Option<String>,
}

fn simulate_cmd(args: &SimulateArgs, config: &Config, out: &Output) -> Result<Status> {
    let lag = truncation_lag(args.truncation_lag, config);
    let burn_in = args.burn_in.unwrap_or(lag);
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let from_flags = ParamConfig {
        mu: args.mu,
        phi: args.phi,
        theta: args.theta,
        d_m: args.d_m,
        omega: args.omega,
        alpha: args.alpha,
        beta: args.beta,
        d_v: args.d_v,
        nu: args.nu,
    };
    let base = config.params.unwrap_or_default().apply(DEFAULT_SIM_PARAMS);
    let params = from_flags.apply(base);

    let returns = simulate(&params, args.n, burn_in, seed, lag)?;
    let returns_file = "simulated_returns.csv".to_string();
    out.write(&returns_file, &returns_csv(&returns)?)?;

    let mut ensemble_file = None;
    if let Some(k) = args.paths {
        if k == 0 {
            return Err(anyhow!("--paths must be at least 1"));
        }
        let mut paths = Vec::with_capacity(k);
        for i in 0..k as u64 {
            let r = simulate(&params, args.n, burn_in, seed.wrapping_add(i), lag)?;
            let mut acc = 0.0;
            let mut path = Vec::with_capacity(args.n + 1);
            path.push(0.0);
            for v in &r.values {
                acc += v;
                path.push(acc);
            }
            paths.push(path);
        }
        let frequency = match args.frequency {
            Some(f) => Some(f),
            None => config.frequency()?,
        };
        let ensemble = PathEnsemble::new(paths, frequency, "arfima-figarch")?;
        let target = args
            .ensemble
            .clone()
            .unwrap_or_else(|| out.path("simulated_ensemble.csv"));
        save_ensemble(&ensemble, &target)?;
        ensemble_file = Some(
            target
                .file_name()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string(),
        );
    }

    let record = SimulationRecord {
        seed,
        n: args.n,
        burn_in,
        truncation_lag: lag,
        params,
        returns_file,
        paths: args.paths,
        ensemble_file,
    };
    let json = out.write_json("simulated_returns.json", &record)?;
    let mut row = Row::default()
        .text("seed", seed.to_string())
        .text("n", args.n.to_string())
        .text("burn_in", burn_in.to_string())
        .text("truncation_lag", lag.to_string());
    for (name, v) in lrdlab::arfima_figarch::PARAM_NAMES
        .iter()
        .zip(params.to_array())
    {
        row = row.number(name, v);
    }
    out.print(&json, &row);
    Ok(Status::Ok)
}

fn load_ensemble_for(
    flag: Option<&PathBuf>,
    config: &Config,
    frequency: Frequency,
) -> Result<PathEnsemble> {
    let path = flag
        .cloned()
        .or_else(|| config.ensemble.clone())
        .ok_or_else(|| anyhow!("missing --ensemble (or `ensemble` in the config file)"))?;
    let ensemble = load_ensemble(&path)?;
    Ok(match ensemble.frequency() {
        Some(_) => ensemble,
        None => ensemble.with_frequency(frequency),
    })
}

/// Empirical prices, the selected path and up to 50 evenly spaced paths,
/// all anchored at the first empirical price.
fn overlay_csv(d: &Loaded, ensemble: &PathEnsemble, selected: usize) -> String {
    let m = ensemble.len();
    let k = OVERLAY_PATHS.min(m);
    let picks: Vec<usize> = (0..k).map(|i| i * m / k).collect();
    let closes = d.prices.closes();
    let p0 = closes[0];
    let anchored = |i: usize, t: usize| {
        let p = &ensemble.paths()[i];
        p0 * (p[t] - p[0]).exp()
    };
    let mut out = String::from("date,real,selected");
    for i in &picks {
        out.push_str(&format!(",path_{i}"));
    }
    out.push('\n');
    for (t, date) in d.prices.dates().iter().enumerate() {
        out.push_str(&format!("{date},{},{}", closes[t], anchored(selected, t)));
        for &i in &picks {
            out.push_str(&format!(",{}", anchored(i, t)));
        }
        out.push('\n');
    }
    out
}

fn evaluation_status(report: &EvaluationReport) -> Status {
    match report.arfima_figarch.ok() {
        Some(f) if !f.converged => Status::NumericalFailure,
        _ if report.has_numerical_failure() => Status::NumericalFailure,
        _ => Status::Ok,
    }
}

fn evaluation_row(d: &Loaded, report: &EvaluationReport) -> Row {
    let mut row = table_row(d)
        .text("generator", report.generator_label.as_str())
        .text("selected_index", report.selected_index.to_string())
        .number("euclidean_distance", report.euclidean_distance);
    if let Some(dist) = report.distribution.ok() {
        row = row
            .moments("real", &dist.real)
            .moments("synthetic", &dist.synthetic);
    }
    if let Some(h) = report.rs.ok() {
        row = row.hurst("rs", h);
    }
    if let Some(h) = report.dfa.ok() {
        row = row.hurst("dfa", h);
    }
    if let Some(f) = report.arfima_figarch.ok() {
        row = row.fit("fit", f);
    }
    row
}

fn run_evaluation(
    d: &Loaded,
    ensemble_flag: Option<&PathBuf>,
    lag: usize,
    supplementary_paths: usize,
    config: &Config,
    out: &Output,
) -> Result<EvaluationReport> {
    let ensemble = load_ensemble_for(ensemble_flag, config, d.frequency)?;
    let options = EvaluateOptions {
        fit: FitOptions {
            truncation_lag: lag,
            ..FitOptions::default()
        },
        supplementary_paths,
    };
    let report = evaluate(&ensemble, &d.prices, &options)?;
    let stem = format!("{}_eval", d.stem());
    out.write(
        &format!("{stem}_overlay.csv"),
        &overlay_csv(d, &ensemble, report.selected_index),
    )?;
    let selected = ensemble.path_returns(report.selected_index);
    out.write(
        &format!("{stem}_selected_returns.csv"),
        &returns_csv(&selected)?,
    )?;
    for method in [HurstMethod::Rs, HurstMethod::Dfa] {
        if let Ok(a) = run_hurst(&selected, method) {
            out.write(
                &format!("{stem}_{}_loglog.csv", method_name(method)),
                &a.fit.to_csv(),
            )?;
        }
    }
    Ok(report)
}

fn evaluate_cmd(args: &EvaluateArgs, config: &Config, out: &Output) -> Result<Status> {
    let d = load(&args.data, config)?;
    let lag = truncation_lag(args.truncation_lag, config);
    let report = run_evaluation(
        &d,
        args.ensemble.as_ref(),
        lag,
        args.supplementary_paths,
        config,
        out,
    )?;
    let stem = format!("{}_eval", d.stem());
    let json = out.write_json(&format!("{stem}.json"), &report)?;
    let row = evaluation_row(&d, &report);
    out.write(&format!("{stem}.csv"), &row.to_csv())?;
    out.print(&json, &row);
    Ok(evaluation_status(&report))
}

#[derive(Serialize)]
struct FullReport {
    label: String,
    frequency: Frequency,
    n_prices: usize,
    n_returns: usize,
    first_date: String,
    last_date: String,
    moments: Outcome<MomentReport>,
    rs: Outcome<HurstEstimate>,
    dfa: Outcome<HurstEstimate>,
    arfima_figarch: Outcome<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluation: Option<Outcome<EvaluationReport>>,
}

fn report_all(args: &ReportArgs, config: &Config, out: &Output) -> Result<Status> {
    let d = load(&args.data, config)?;
    let stem = d.stem();
    let lag = truncation_lag(args.truncation_lag, config);
    let mut status = Status::Ok;

    let m = section(moments(&d.returns), &mut status);
    if let Err(e) = write_distribution_plots(out, &stem, &d.returns, args.bins) {
        log::warn!("distribution plot data not written: {e:#}");
    }
    let mut hurst_section = |method: HurstMethod| -> Result<Outcome<HurstEstimate>> {
        let r = run_hurst(&d.returns, method);
        if let Ok(a) = &r {
            out.write(
                &format!("{stem}_{}_loglog.csv", method_name(method)),
                &a.fit.to_csv(),
            )?;
        }
        Ok(section(r.map(|a| a.estimate), &mut status))
    };
    let rs = hurst_section(HurstMethod::Rs)?;
    let dfa = hurst_section(HurstMethod::Dfa)?;

    let options = FitOptions {
        truncation_lag: lag,
        ..FitOptions::default()
    };
    let fitted = fit(&d.returns, None, &options);
    if let Ok(f) = &fitted {
        out.write(
            &format!("{stem}_fit_trace.csv"),
            &trace_csv(&f.objective_trace),
        )?;
        status = status.max(fit_status(f));
    }
    let arfima_figarch = section(fitted, &mut status);

    let evaluation = match args.ensemble.as_ref().or(config.ensemble.as_ref()) {
        Some(path) => {
            let r = run_evaluation(
                &d,
                Some(path),
                lag,
                lrdlab::synth_eval::DEFAULT_SUPPLEMENTARY_PATHS,
                config,
                out,
            );
            match r {
                Ok(report) => {
                    status = status.max(evaluation_status(&report));
                    Some(Outcome::Ok(report))
                }
                Err(e) => {
                    let s = e
                        .downcast_ref::<LrdError>()
                        .map_or(Status::InputFailure, status_of);
                    status = status.max(s);
                    log::error!("{e:#}");
                    Some(Outcome::Error(format!("{e:#}")))
                }
            }
        }
        None => None,
    };

    let dates = d.prices.dates();
    let report = FullReport {
        label: d.label.clone(),
        frequency: d.frequency,
        n_prices: d.prices.len(),
        n_returns: d.returns.len(),
        first_date: dates.first().map(|x| x.to_string()).unwrap_or_default(),
        last_date: dates.last().map(|x| x.to_string()).unwrap_or_default(),
        moments: m,
        rs,
        dfa,
        arfima_figarch,
        evaluation,
    };
    let json = out.write_json(&format!("{stem}_report.json"), &report)?;

    let mut row = table_row(&d);
    if let Some(m) = report.moments.ok() {
        row = row.moments("returns", m);
    }
    if let Some(h) = report.rs.ok() {
        row = row.hurst("rs", h);
    }
    if let Some(h) = report.dfa.ok() {
        row = row.hurst("dfa", h);
    }
    if let Some(f) = report.arfima_figarch.ok() {
        row = row.fit("fit", f);
    }
    out.write(&format!("{stem}_report.csv"), &row.to_csv())?;
    if let Some(Outcome::Ok(e)) = &report.evaluation {
        out.write(&format!("{stem}_eval.csv"), &evaluation_row(&d, e).to_csv())?;
    }
    out.print(&json, &row);
    Ok(status)
}
