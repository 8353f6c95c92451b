use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Parser;
use serde::Serialize;
use serde_json::json;

use rnss_compat::aggregation::{run_scenario, AggregationResult};
use rnss_compat::basebandsim::{run_ramp_profile, RampProfile, RampResult, ScenarioConfig};
use rnss_compat::catalog::{load_catalog, AggregationScenario, Catalog, ModulationKind, SignalSpec};
use rnss_compat::interference::{build_report, pair_ssc, DegradationReport, PsdMethod, SscConfig, SscSource};
use rnss_compat::spectrum::{analytic_psd, efqpsk_reference_psd, occupied_bandwidth, FrequencyGrid, SampledPsd};

/// `println!` that ignores a closed stdout (e.g. output piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

use crate::manifest::{write_atomic, RunManifest};
use crate::{
    AggregateArgs, CatalogCommand, Cli, Command, DegradeArgs, Method, PsdArgs, ReplayArgs, ScenarioArg,
    SimulateArgs, SscArgs, SscSourceArg,
};

/// Invocation context shared by every subcommand.
struct Run {
    catalog_path: PathBuf,
    argv: Vec<String>,
}

impl Run {
    fn catalog(&self) -> Result<Catalog> {
        Ok(load_catalog(&self.catalog_path)?)
    }

    fn manifest(&self, command: &str, parameters: serde_json::Value, seed: u64, extra_configs: &[&Path]) -> RunManifest {
        let mut configs = vec![self.catalog_path.display().to_string()];
        configs.extend(extra_configs.iter().map(|p| p.display().to_string()));
        RunManifest::new(command, self.argv.clone(), configs, parameters, seed)
    }
}

/// Process argv with the resolved catalog made explicit and any user-supplied
/// `--catalog` removed.
fn normalized_argv(raw: impl IntoIterator<Item = OsString>, catalog: &Path) -> Vec<String> {
    let mut out = vec!["--catalog".to_string(), catalog.display().to_string()];
    let mut it = raw.into_iter().map(|s| s.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--catalog" {
            it.next();
        } else if !a.starts_with("--catalog=") {
            out.push(a);
        }
    }
    out
}

pub fn run(cli: Cli) -> Result<()> {
    let argv = normalized_argv(std::env::args_os().skip(1), &cli.catalog);
    dispatch(cli, argv)
}

fn dispatch(cli: Cli, argv: Vec<String>) -> Result<()> {
    let ctx = Run {
        catalog_path: cli.catalog,
        argv,
    };
    match cli.command {
        Command::Psd(a) => cmd_psd(&ctx, a),
        Command::Ssc(a) => cmd_ssc(&ctx, a),
        Command::Degrade(a) => cmd_degrade(&ctx, a),
        Command::Aggregate(a) => cmd_aggregate(&ctx, a),
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Catalog(CatalogCommand::Validate { path }) => cmd_validate(&ctx, path),
        Command::Replay(a) => cmd_replay(a),
    }
}

// ---------------------------------------------------------------------------

fn signal_on_grid(spec: &SignalSpec, method: Method, grid: FrequencyGrid) -> Result<SampledPsd> {
    Ok(match (spec.modulation, method) {
        (ModulationKind::Efqpsk { chip_rate_hz }, Method::Numeric) => {
            let reference = efqpsk_reference_psd(chip_rate_hz, &Default::default())?;
            let density = grid.freqs().into_iter().map(|f| reference.interp(f)).collect();
            SampledPsd::normalized(grid, density, None)?
        }
        (m, _) => analytic_psd(&m, &grid, None)?,
    })
}

fn psd_csv(psd: &SampledPsd) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    psd.write_csv(&mut bytes)?;
    Ok(bytes)
}

fn cmd_psd(ctx: &Run, a: PsdArgs) -> Result<()> {
    let catalog = ctx.catalog()?;
    let spec = catalog.signal(&a.signal)?;
    let grid = FrequencyGrid::symmetric(a.span_hz, a.step_hz)?;
    let psd = signal_on_grid(spec, a.method, grid)?;
    write_atomic(&a.out, &psd_csv(&psd)?)?;

    let obw = occupied_bandwidth(&psd, 0.995)?;
    let peak_at = psd.grid.freq(
        psd.density
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map_or(0, |(k, _)| k),
    );
    let mut m = ctx.manifest(
        "psd",
        json!({
            "signal": spec.id, "modulation": spec.modulation, "method": a.method,
            "half_span_hz": a.span_hz, "step_hz": a.step_hz, "points": psd.grid.len,
        }),
        rnss_compat::spectrum::EfqpskPsdConfig::default().seed,
        &[],
    );
    m.outputs.push(a.out.display().to_string());
    m.write_beside(&a.out)?;
    say!("signal            {}", spec.id);
    say!("points            {}", psd.grid.len);
    say!("peak offset       {peak_at:.0} Hz");
    say!("99.5% bandwidth   {:.4} MHz", obw / 1e6);
    say!("wrote             {}", a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------

fn ssc_config(step_hz: f64) -> SscConfig {
    SscConfig {
        grid_step_hz: step_hz,
        ..SscConfig::default()
    }
}

fn psd_method(m: Method) -> PsdMethod {
    match m {
        Method::Analytic => PsdMethod::Analytic,
        Method::Numeric => PsdMethod::Numeric,
    }
}

fn cmd_ssc(ctx: &Run, a: SscArgs) -> Result<()> {
    let catalog = ctx.catalog()?;
    let victim = catalog.signal(&a.victim)?;
    let interferer = catalog.signal(&a.interferer)?;
    let cfg = ssc_config(a.step_hz);
    let r = pair_ssc(victim, interferer, psd_method(a.method), &cfg)?;
    say!("{:.2}", r.value_db_hz);
    if let Some(out) = &a.out {
        let body = json!({
            "ssc_db_hz": r.value_db_hz,
            "victim_id": r.victim_id,
            "interferer_id": r.interferer_id,
            "frequency_offset_hz": r.frequency_offset_hz,
            "integration_band_hz": [r.integration_band_hz.0, r.integration_band_hz.1],
            "grid_spacing_hz": r.grid_spacing_hz,
            "method": a.method,
            "tabulated_db_hz": catalog.fixed_ssc(&interferer.id, &victim.id),
        });
        write_atomic(out, pretty(&body)?.as_bytes())?;
        let mut m = ctx.manifest("ssc", json!({ "method": a.method, "step_hz": a.step_hz }), cfg.efqpsk.seed, &[]);
        m.outputs.push(out.display().to_string());
        m.write_beside(out)?;
    }
    Ok(())
}

fn pretty(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

// ---------------------------------------------------------------------------

fn report_csv(report: &DegradationReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.into_inner().context("flushing CSV")
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.digits$}"))
}

fn print_report(r: &DegradationReport) {
    say!(
        "interferer {}  RIP {:.2} dBW  G_agg {:.2} dB  SSC source {}",
        r.interferer_id, r.rip_dbw, r.g_agg_db, r.ssc_source
    );
    say!("{:<12} {:>10} {:>12} {:>12} {:>8}", "victim", "SSC dB/Hz", "I_alt dBW/Hz", "N0 dBW/Hz", "dC/N0 dB");
    for row in &r.rows {
        // tables show the loss as a negative change
        let delta = row.delta_cn0_db.map(|d| if d == 0.0 { 0.0 } else { -d });
        say!(
            "{:<12} {:>10.2} {:>12.2} {:>12} {:>8}",
            row.victim_id,
            row.ssc_db_hz,
            row.i_alt_dbw_hz,
            fmt_opt(row.pre_noise_dbw_hz, 2),
            fmt_opt(delta, 2)
        );
    }
}

fn cmd_degrade(ctx: &Run, a: DegradeArgs) -> Result<()> {
    let catalog = ctx.catalog()?;
    let mut interferer = catalog.signal(&a.interferer)?.clone();
    if let Some(rip) = a.rip_dbw {
        interferer.max_single_sat_rip_dbw = Some(rip);
    }
    if let Some(g) = a.g_agg_db {
        interferer.aggregation_gain_db = Some(g);
    }
    let victims: Vec<&SignalSpec> = if a.victims == "paper" {
        catalog.tabulated_victims(&interferer.id)
    } else {
        a.victims
            .split(',')
            .map(|id| catalog.signal(id.trim()))
            .collect::<rnss_compat::Result<_>>()?
    };
    if victims.is_empty() {
        bail!("no victims selected for interferer `{}`", interferer.id);
    }
    let envs = match &a.env {
        Some(p) => load_catalog(p)?.noise_map(),
        None => catalog.noise_map(),
    };
    let cfg = SscConfig::default();
    let source = match a.ssc_source {
        SscSourceArg::Fixed => SscSource::Fixed(&catalog.ssc_table),
        SscSourceArg::Analytic => SscSource::Analytic(cfg),
        SscSourceArg::Numeric => SscSource::Numeric(cfg),
    };
    let report = build_report(&victims, &interferer, &envs, &source)?;
    print_report(&report);

    if let Some(out) = &a.out {
        let json_path = out.with_extension("json");
        write_atomic(out, &report_csv(&report)?)?;
        write_atomic(&json_path, pretty(&report)?.as_bytes())?;
        let extra: Vec<&Path> = a.env.iter().map(PathBuf::as_path).collect();
        let mut m = ctx.manifest(
            "degrade",
            json!({
                "interferer": interferer.id, "victims": victims.iter().map(|v| &v.id).collect::<Vec<_>>(),
                "ssc_source": a.ssc_source, "rip_dbw": report.rip_dbw, "g_agg_db": report.g_agg_db,
            }),
            cfg.efqpsk.seed,
            &extra,
        );
        m.outputs = vec![out.display().to_string(), json_path.display().to_string()];
        m.write_beside(out)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct AggregateOutput<'a> {
    scenario: &'a str,
    frequency_hz: f64,
    #[serde(flatten)]
    result: &'a AggregationResult,
    /// `10 log10(max_visible_count)`, an upper bound on the gain.
    visible_bound_db: f64,
    within_visible_bound: bool,
}

fn cmd_aggregate(ctx: &Run, a: AggregateArgs) -> Result<()> {
    let catalog = ctx.catalog()?;
    let scenario: AggregationScenario = match &a.scenario_file {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let s: AggregationScenario =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            s
        }
        None => catalog.aggregation_scenario(&a.scenario)?.clone(),
    };
    let freq = catalog.signal(&a.signal)?.center_frequency_hz;
    let result = run_scenario(&scenario, freq)?;
    let bound = 10.0 * (result.max_visible_count as f64).log10();
    let out = AggregateOutput {
        scenario: &scenario.name,
        frequency_hz: freq,
        result: &result,
        visible_bound_db: bound,
        within_visible_bound: result.g_agg_db <= bound + 1e-9,
    };
    say!("scenario        {}", scenario.name);
    say!("G_agg           {:.3} dB", result.g_agg_db);
    say!("max visible     {} (bound {:.3} dB)", result.max_visible_count, bound);
    say!(
        "worst case      lat {:.1} lon {:.1} t {:.0} s, {} visible",
        result.worst_user.0, result.worst_user.1, result.worst_time_s, result.visible_count
    );
    if let Some(path) = &a.out {
        write_atomic(path, pretty(&out)?.as_bytes())?;
        let extra: Vec<&Path> = a.scenario_file.iter().map(PathBuf::as_path).collect();
        let mut m = ctx.manifest(
            "aggregate",
            json!({ "scenario": scenario, "signal": a.signal, "frequency_hz": freq }),
            0,
            &extra,
        );
        m.outputs.push(path.display().to_string());
        m.write_beside(path)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------

fn ramp_csv(r: &RampResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stage", "t_start_s", "measured_cn0_dbhz", "predicted_cn0_dbhz"])?;
    for row in &r.rows {
        w.write_record([
            row.stage.clone(),
            row.t_start_s.to_string(),
            row.measured_cn0_dbhz.map_or_else(String::new, |v| v.to_string()),
            row.predicted_cn0_dbhz.to_string(),
        ])?;
    }
    w.into_inner().context("flushing CSV")
}

fn cmd_simulate(ctx: &Run, a: SimulateArgs) -> Result<()> {
    let catalog = ctx.catalog()?;
    let mut cfg = match a.scenario {
        ScenarioArg::L5X5 => ScenarioConfig::l5_vs_x5(&catalog)?,
        ScenarioArg::L1caX1 => ScenarioConfig::l1ca_vs_x1(&catalog)?,
    };
    cfg.seed = a.seed;
    if let Some(fs) = a.sample_rate {
        cfg.sample_rate_hz = fs;
    }
    if let Some(c) = a.victim_power_dbw {
        cfg.victim_power_dbw = c;
    }
    if let Some(n0) = a.noise_density_dbw_hz {
        cfg.noise_density_dbw_hz = n0;
    }
    let (profile, profile_file) = if a.profile == "default" {
        (RampProfile::default_ladder(a.dwell_s), None)
    } else {
        let p = PathBuf::from(&a.profile);
        let text = std::fs::read_to_string(&p).with_context(|| format!("reading profile {}", p.display()))?;
        let profile: RampProfile =
            serde_json::from_str(&text).with_context(|| format!("parsing profile {}", p.display()))?;
        (profile, Some(p))
    };
    let result = run_ramp_profile(&cfg, &profile)?;
    write_atomic(&a.out, &ramp_csv(&result)?)?;

    say!("victim {} vs {}  SSC {:.2} dB/Hz", cfg.victim.id, cfg.interferer.id, result.ssc_db_hz);
    say!("{:<16} {:>9} {:>10} {:>10}", "stage", "t_start_s", "measured", "predicted");
    for row in &result.rows {
        say!(
            "{:<16} {:>9.1} {:>10} {:>10.2}",
            row.stage,
            row.t_start_s,
            row.measured_cn0_dbhz.map_or_else(|| "floor".into(), |v| format!("{v:.2}")),
            row.predicted_cn0_dbhz
        );
    }
    if let Some(h) = result.hysteresis_db {
        say!("hysteresis {h:+.2} dB");
    }
    let extra: Vec<&Path> = profile_file.iter().map(PathBuf::as_path).collect();
    let mut m = ctx.manifest(
        "simulate",
        json!({ "scenario": cfg, "profile": profile, "ssc_db_hz": result.ssc_db_hz }),
        a.seed,
        &extra,
    );
    m.outputs.push(a.out.display().to_string());
    m.write_beside(&a.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------

fn cmd_validate(ctx: &Run, path: Option<PathBuf>) -> Result<()> {
    let path = path.unwrap_or_else(|| ctx.catalog_path.clone());
    let catalog = load_catalog(&path)?;
    say!(
        "{}: ok ({} signals, {} noise environments, {} SSC entries, {} aggregation scenarios)",
        path.display(),
        catalog.signals.len(),
        catalog.noise_environments.len(),
        catalog.ssc_table.len(),
        catalog.aggregation_scenarios.len()
    );
    Ok(())
}

fn replace_out(argv: &mut [String], new: &Path) -> Result<()> {
    let new = new.display().to_string();
    for k in 0..argv.len() {
        if argv[k] == "--out" && k + 1 < argv.len() {
            argv[k + 1] = new;
            return Ok(());
        }
        if argv[k].starts_with("--out=") {
            argv[k] = format!("--out={new}");
            return Ok(());
        }
    }
    bail!("the recorded command has no --out argument")
}

fn cmd_replay(a: ReplayArgs) -> Result<()> {
    let manifest = RunManifest::load(&a.manifest)?;
    let mut argv = manifest.argv;
    if let Some(out) = &a.out {
        replace_out(&mut argv, out)?;
    }
    if argv.iter().any(|s| s == "replay") {
        bail!("manifest records a replay; refusing to recurse");
    }
    let cli = Cli::try_parse_from(std::iter::once("rnss".to_string()).chain(argv.iter().cloned()))
        .context("manifest argv no longer parses")?;
    dispatch(cli, argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argv_normalization_pins_catalog() {
        let raw = ["--catalog", "a.json", "psd", "--catalog=b.json", "--signal", "X1"].map(OsString::from);
        let argv = normalized_argv(raw, Path::new("c.json"));
        assert_eq!(argv, ["--catalog", "c.json", "psd", "--signal", "X1"]);
    }

    #[test]
    fn out_replacement() {
        let mut v: Vec<String> = ["psd", "--out", "a.csv"].map(String::from).into();
        replace_out(&mut v, Path::new("b.csv")).unwrap();
        assert_eq!(v[2], "b.csv");
        let mut v: Vec<String> = ["psd", "--out=a.csv"].map(String::from).into();
        replace_out(&mut v, Path::new("b.csv")).unwrap();
        assert_eq!(v[1], "--out=b.csv");
        assert!(replace_out(&mut ["ssc".to_string()], Path::new("x")).is_err());
    }
}
