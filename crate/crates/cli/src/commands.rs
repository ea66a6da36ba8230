//! The subcommands. Each writes its artifacts into an output directory and
//! returns the manifest.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use bursty_core::bessel::bessel_zeros;
use bursty_core::fpt::{index_from, lamperti};
use bursty_core::returns::{simulate_returns, smoothed_abs_returns};
use bursty_core::sde::{run_ensemble, Observer, GENERATOR, SIGMA_T_SQ};
use bursty_core::spectrum::{resample_zoh, PsdAccumulator, Welch};
use bursty_core::stats::{binned_scatter, exponential_tail_rate, fit_power_law, fit_scatter, log_binned_density};
use bursty_core::{
    detect_bursts, Burst, BurstDetector, ClosedPdf, FptSpec, Model, PathMeta, PowerLawFit, PsdConfig, ReturnModelParams,
    ScatterBin, SeriesPdf, Spectrum, StopRule,
};
use serde::Serialize;

use crate::config::{AnalysisSection, Command, PsdSection, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{read_series, sha256_file, tables, Artifacts, Manifest, TimeUnit, CONFIG_FILE, MANIFEST_FILE};

/// Runs a resolved config into `out`.
pub fn execute(cfg: &RunConfig, out: &Path) -> CliResult<Manifest> {
    cfg.validate()?;
    match cfg.command() {
        Command::Simulate => simulate(cfg, out),
        Command::Analyze => analyze(cfg, out),
        Command::Fpt => fpt(cfg, out),
        Command::Returns => returns(cfg, out),
    }
}

#[derive(Serialize)]
struct RealizationSummary {
    stream: u64,
    steps: u64,
    samples: u64,
    t_end_s: f64,
    bursts_counted: u64,
    bursts_detected: u64,
}

#[derive(Serialize)]
struct SimulateSummary {
    config_hash: String,
    command: &'static str,
    model: String,
    generator: &'static str,
    total_bursts_counted: u64,
    realizations: Vec<RealizationSummary>,
}

/// Streams samples to an optional path file and an optional detector.
struct PathSink {
    model: Model,
    writer: Option<crate::io::TableWriter>,
    detector: Option<BurstDetector>,
    bursts: Vec<Burst>,
    err: Option<CliError>,
}

impl Observer for PathSink {
    fn observe(&mut self, t: f64, x: f64) {
        if let Some(w) = self.writer.as_mut() {
            if self.err.is_none() {
                if let Err(e) = w.row((t, x)) {
                    self.err = Some(e);
                }
            }
        }
        if let Some(d) = self.detector.as_mut() {
            if let Some(b) = d.push(t, self.model.level(x)) {
                self.bursts.push(b);
            }
        }
    }
}

fn simulate(cfg: &RunConfig, out: &Path) -> CliResult<Manifest> {
    let model = cfg.model.unwrap();
    let sim = cfg.sim.as_ref().unwrap();
    let stop = sim.stop.unwrap();
    let sc = sim.sim_config(stop);
    let mut art = Artifacts::create(out, cfg)?;
    let threshold = match stop {
        StopRule::Bursts { threshold, .. } => Some(threshold),
        _ => None,
    };

    // Path files are opened up front so that the workers only stream into
    // them; sidecars need the step count and are rewritten afterwards.
    let mut writers = Vec::new();
    for i in 0..sim.realizations {
        let w = if sim.write_path { Some(art.table::<()>(&format!("path_{i:03}.csv"), &tables::PATH, None)?) } else { None };
        writers.push(Mutex::new(w));
    }
    let runs = run_ensemble(&model, &sc, sim.realizations, |i| PathSink {
        model,
        writer: writers[i as usize].lock().unwrap().take(),
        detector: threshold.map(BurstDetector::new),
        bursts: Vec::new(),
        err: None,
    })?;

    let mut realizations = Vec::new();
    let mut all_bursts = Vec::new();
    for (i, (sink, s)) in runs.into_iter().enumerate() {
        if let Some(e) = sink.err {
            return Err(e);
        }
        if let Some(w) = sink.writer {
            w.finish()?;
            let meta = PathMeta {
                model,
                fingerprint: model.fingerprint(),
                kappa: sc.kappa,
                burn_in: sc.burn_in,
                seed: sc.seed,
                stream: s.stream,
                steps: s.steps,
                generator: GENERATOR.to_string(),
            };
            art.rewrite_meta(&format!("path_{i:03}.csv"), &tables::PATH, Some(meta))?;
        }
        realizations.push(RealizationSummary {
            stream: s.stream,
            steps: s.steps,
            samples: s.samples,
            t_end_s: s.t_end,
            bursts_counted: s.bursts,
            bursts_detected: sink.bursts.len() as u64,
        });
        all_bursts.extend(sink.bursts.into_iter().map(|b| (i as u64, b)));
    }
    if threshold.is_some() {
        write_bursts(&mut art, &all_bursts)?;
    }
    let summary = SimulateSummary {
        config_hash: art.config_hash().to_string(),
        command: "simulate",
        model: model.fingerprint(),
        generator: GENERATOR,
        total_bursts_counted: realizations.iter().map(|r| r.bursts_counted).sum(),
        realizations,
    };
    art.finish(&summary)
}

fn write_bursts(art: &mut Artifacts, bursts: &[(u64, Burst)]) -> CliResult<()> {
    let mut w = art.table::<()>(tables::BURSTS.file, &tables::BURSTS, None)?;
    for (r, b) in bursts {
        w.row((r, b.t_start, b.t_end, b.duration, b.peak, b.size))?;
    }
    w.finish()
}

#[derive(Serialize)]
struct FitReport {
    exponent: f64,
    stderr: f64,
    prefactor: f64,
    lo: f64,
    hi: f64,
    points: usize,
    r_squared: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected: Option<f64>,
}

impl FitReport {
    fn new(f: PowerLawFit, expected: Option<f64>) -> Self {
        Self {
            exponent: f.exponent,
            stderr: f.stderr,
            prefactor: f.prefactor,
            lo: f.lo,
            hi: f.hi,
            points: f.points,
            r_squared: f.r_squared,
            expected,
        }
    }
}

#[derive(Serialize)]
struct RateReport {
    from_s: f64,
    rate: f64,
    stderr: f64,
    bursts: usize,
    expected: f64,
}

#[derive(Serialize)]
struct OverlayReport {
    eta: f64,
    lambda: f64,
    nu: f64,
    h_y: f64,
    crossover_time_s: f64,
    series_terms: usize,
}

#[derive(Serialize)]
struct PsdReport {
    segments: usize,
    band: [f64; 2],
    beta: f64,
    fit: FitReport,
}

#[derive(Serialize)]
struct AnalyzeSummary {
    config_hash: String,
    command: &'static str,
    source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_unit: Option<TimeUnit>,
    threshold: f64,
    realizations: usize,
    bursts: usize,
    t_min_s: f64,
    bursts_above_t_min: usize,
    histogram_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    overlay: Option<OverlayReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_fit: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cutoff_rate: Option<RateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_vs_duration: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    size_vs_duration: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    size_vs_peak: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psd: Option<PsdReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

struct AnalysisSink {
    model: Model,
    detector: BurstDetector,
    bursts: Vec<Burst>,
    psd: Option<PsdAccumulator>,
}

impl Observer for AnalysisSink {
    fn observe(&mut self, t: f64, x: f64) {
        if let Some(b) = self.detector.push(t, self.model.level(x)) {
            self.bursts.push(b);
        }
        if let Some(p) = self.psd.as_mut() {
            p.observe(t, x);
        }
    }
}

fn psd_config(p: &PsdSection) -> PsdConfig {
    PsdConfig { band: p.band.map(|b| (b[0], b[1])), bins_per_decade: p.bins_per_decade, ..PsdConfig::new(p.dt, p.segment) }
}

struct Collected {
    bursts: Vec<(u64, Burst)>,
    spectrum: Option<CliResult<Spectrum>>,
    source: String,
    unit: Option<TimeUnit>,
    realizations: usize,
}

fn collect_from_inputs(a: &AnalysisSection, sigma: f64, art: &mut Artifacts) -> CliResult<Collected> {
    let psd_cfg = a.psd.as_ref().map(psd_config);
    let mut welch: Option<Welch> = psd_cfg.map(Welch::new).transpose()?;
    let mut bursts = Vec::new();
    let mut unit: Option<TimeUnit> = None;
    for (i, path) in a.inputs.iter().enumerate() {
        let s = read_series(path, sigma)?;
        art.record_input(path)?;
        if unit.is_some_and(|u| u != s.unit) {
            return Err(CliError::Validation("input files mix time units".into()));
        }
        unit = Some(s.unit);
        let level = |v: f64| if a.absolute { v.abs() } else { v };
        let seq = detect_bursts(s.t.iter().copied().zip(s.x.iter().map(|&v| level(v))), a.threshold)?;
        bursts.extend(seq.bursts.into_iter().map(|b| (i as u64, b)));
        if let (Some(w), Some(c)) = (welch.as_mut(), psd_cfg) {
            let mut part = Welch::new(c)?;
            for v in resample_zoh(&s.t, &s.x, c.dt)? {
                part.push(v);
            }
            w.merge(&part)?;
        }
    }
    Ok(Collected {
        bursts,
        spectrum: welch.map(|w| w.finish().map_err(CliError::from)),
        source: format!("{} input file(s)", a.inputs.len()),
        unit,
        realizations: a.inputs.len(),
    })
}

fn collect_from_simulation(cfg: &RunConfig, a: &AnalysisSection) -> CliResult<Collected> {
    let model = cfg.model.unwrap();
    let sim = cfg.sim.as_ref().unwrap();
    let sc = sim.sim_config(sim.stop.unwrap());
    let psd_cfg = a.psd.as_ref().map(psd_config);
    if let Some(c) = psd_cfg {
        c.validate()?;
    }
    let runs = run_ensemble(&model, &sc, sim.realizations, |_| AnalysisSink {
        model,
        detector: BurstDetector::new(a.threshold),
        bursts: Vec::new(),
        psd: psd_cfg.map(|c| PsdAccumulator::new(c).expect("validated")),
    })?;
    let mut bursts = Vec::new();
    let mut acc: Option<PsdAccumulator> = None;
    for (i, (sink, _)) in runs.into_iter().enumerate() {
        bursts.extend(sink.bursts.into_iter().map(|b| (i as u64, b)));
        match (acc.as_mut(), sink.psd) {
            (Some(a), Some(p)) => a.merge(&p)?,
            (None, Some(p)) => acc = Some(p),
            _ => {}
        }
    }
    Ok(Collected {
        bursts,
        spectrum: acc.map(|a| a.finish().map_err(CliError::from)),
        source: format!("simulated: {}", model.fingerprint()),
        unit: None,
        realizations: sim.realizations as usize,
    })
}

fn try_fit(notes: &mut Vec<String>, what: &str, r: CliResult<FitReport>) -> Option<FitReport> {
    match r {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    }
}

fn write_scatter(art: &mut Artifacts, table: &crate::io::Table, bins: &[ScatterBin]) -> CliResult<()> {
    let mut w = art.table::<()>(table.file, table, None)?;
    for b in bins {
        w.row((b.lo, b.hi, b.center, b.mean, b.std, b.count))?;
    }
    w.finish()
}

fn analyze(cfg: &RunConfig, out: &Path) -> CliResult<Manifest> {
    let a = cfg.analysis.as_ref().unwrap();
    let mut art = Artifacts::create(out, cfg)?;
    let sigma = a.sigma_t_sq.or(cfg.model.map(|m| m.sigma_t_sq())).unwrap_or(SIGMA_T_SQ);
    let collected =
        if a.inputs.is_empty() { collect_from_simulation(cfg, a)? } else { collect_from_inputs(a, sigma, &mut art)? };
    let mut notes = Vec::new();
    let h = a.threshold;
    write_bursts(&mut art, &collected.bursts)?;
    let bursts: Vec<Burst> = collected.bursts.iter().map(|(_, b)| *b).collect();
    if bursts.is_empty() {
        return Err(CliError::Numerical(format!("no complete bursts above {h}")));
    }

    let t_min = a.t_min.unwrap_or_else(|| bursts.iter().map(|b| b.duration).fold(f64::INFINITY, f64::min));
    let kept: Vec<f64> = bursts.iter().map(|b| b.duration).filter(|&d| d >= t_min).collect();

    let overlay = a.overlay.map(|o| (o.eta, o.lambda, o.k_terms)).or(match cfg.model {
        Some(Model::Simple(p)) => Some((p.eta, p.lambda, bursty_core::fpt::DEFAULT_K_TERMS)),
        _ => None,
    });
    let explicit_overlay = a.overlay.is_some();
    let pdfs = match overlay {
        Some((eta, lambda, k_terms)) => {
            let built = FptSpec::from_model(eta, lambda, h, t_min)
                .map(|s| FptSpec { k_terms, ..s })
                .and_then(|s| Ok((SeriesPdf::new(s)?, ClosedPdf::new(s)?, s.crossover_time()?)));
            match built {
                Ok((series, closed, tc)) => Some((eta, lambda, series, closed, tc)),
                Err(e) if explicit_overlay => return Err(e.into()),
                Err(e) => {
                    notes.push(format!("overlay unavailable: {e}"));
                    None
                }
            }
        }
        None => None,
    };

    let hist = log_binned_density(&kept, a.bins_per_decade)?;
    let mut w = art.table::<()>(tables::DURATION_PDF.file, &tables::DURATION_PDF, None)?;
    for i in 0..hist.bins() {
        let c = hist.center(i);
        let (ps, pc) = match &pdfs {
            Some((_, _, s, cl, _)) => (Some(s.density(c)?), Some(cl.density(c)?)),
            None => (None, None),
        };
        w.row((hist.edges[i], hist.edges[i + 1], c, hist.counts[i], hist.density(i), ps, pc))?;
    }
    w.finish()?;
    let histogram_mass = (0..hist.bins()).map(|i| hist.density(i) * hist.width(i)).sum();

    let duration_range = a.duration_fit.or(pdfs.as_ref().map(|p| [t_min, 0.1 * p.4]));
    let duration_fit = duration_range.and_then(|r| {
        let expected = pdfs.as_ref().map(|_| -1.5);
        try_fit(
            &mut notes,
            "duration fit",
            fit_power_law(&hist.points(), r[0], r[1]).map(|f| FitReport::new(f, expected)).map_err(Into::into),
        )
    });
    let cutoff_rate = match &pdfs {
        Some((_, _, s, _, tc)) => {
            let spec = s.spec();
            let j1 = bessel_zeros(spec.nu, 1)?[0];
            match exponential_tail_rate(&kept, 3.0 * tc) {
                Ok((rate, stderr, n)) => Some(RateReport {
                    from_s: 3.0 * tc,
                    rate,
                    stderr,
                    bursts: n,
                    expected: j1 * j1 / (2.0 * spec.h_y * spec.h_y),
                }),
                Err(e) => {
                    notes.push(format!("cutoff rate: {e}"));
                    None
                }
            }
        }
        None => None,
    };

    let scatter_range = a.scatter_fit.unwrap_or([0.0, f64::INFINITY]);
    let sp_range = a.size_peak_fit.unwrap_or([0.0, f64::INFINITY]);
    let pairs = |f: &dyn Fn(&Burst) -> (f64, f64)| -> Vec<(f64, f64)> {
        bursts.iter().map(f).filter(|(x, y)| *x > 0.0 && *y > 0.0).collect()
    };
    let scatter = |art: &mut Artifacts,
                       notes: &mut Vec<String>,
                       table: &crate::io::Table,
                       data: Vec<(f64, f64)>,
                       range: [f64; 2]|
     -> CliResult<Option<FitReport>> {
        match binned_scatter(&data, a.bins_per_decade) {
            Ok(bins) => {
                write_scatter(art, table, &bins)?;
                let fit = fit_scatter(&bins, range[0], range[1], a.min_count).map(|f| FitReport::new(f, None));
                Ok(try_fit(notes, table.file, fit.map_err(Into::into)))
            }
            Err(e) => {
                write_scatter(art, table, &[])?;
                notes.push(format!("{}: {e}", table.file));
                Ok(None)
            }
        }
    };
    let peak_vs_duration =
        scatter(&mut art, &mut notes, &tables::PEAK_VS_DURATION, pairs(&|b| (b.duration, b.peak - h)), scatter_range)?;
    let size_vs_duration =
        scatter(&mut art, &mut notes, &tables::SIZE_VS_DURATION, pairs(&|b| (b.duration, b.size)), scatter_range)?;
    let size_vs_peak = scatter(&mut art, &mut notes, &tables::SIZE_VS_PEAK, pairs(&|b| (b.peak - h, b.size)), sp_range)?;

    let psd = match collected.spectrum {
        Some(Ok(s)) => {
            let mut w = art.table::<()>(tables::PSD.file, &tables::PSD, None)?;
            for (f, p) in s.freq.iter().zip(&s.power) {
                w.row((f, p))?;
            }
            w.finish()?;
            let expected = match cfg.model {
                Some(Model::Simple(p)) if a.inputs.is_empty() => bursty_core::sde::spectral_beta(&p).ok(),
                _ => None,
            };
            Some(PsdReport {
                segments: s.segments,
                band: [s.band.0, s.band.1],
                beta: s.beta,
                fit: FitReport::new(s.fit, expected.map(|b| -b)),
            })
        }
        Some(Err(e)) => {
            notes.push(format!("psd: {e}"));
            None
        }
        None => None,
    };

    let summary = AnalyzeSummary {
        config_hash: art.config_hash().to_string(),
        command: "analyze",
        source: collected.source,
        time_unit: collected.unit,
        threshold: h,
        realizations: collected.realizations,
        bursts: bursts.len(),
        t_min_s: t_min,
        bursts_above_t_min: kept.len(),
        histogram_mass,
        overlay: pdfs.as_ref().map(|(eta, lambda, s, _, tc)| OverlayReport {
            eta: *eta,
            lambda: *lambda,
            nu: s.spec().nu,
            h_y: s.spec().h_y,
            crossover_time_s: *tc,
            series_terms: s.terms(),
        }),
        duration_fit,
        cutoff_rate,
        peak_vs_duration,
        size_vs_duration,
        size_vs_peak,
        psd,
        notes,
    };
    art.finish(&summary)
}

#[derive(Serialize)]
struct FptSummary {
    config_hash: String,
    command: &'static str,
    nu: f64,
    n_dim: f64,
    h_y: f64,
    t_min_s: f64,
    j_nu_1: f64,
    crossover_time_s: f64,
    cutoff_rate: f64,
    series_terms: usize,
    series_normalization: f64,
    closed_normalization: f64,
    points: usize,
}

fn fpt(cfg: &RunConfig, out: &Path) -> CliResult<Manifest> {
    let f = cfg.fpt.as_ref().unwrap();
    let spec = match (f.eta, f.lambda, f.h_x) {
        (Some(eta), Some(lambda), Some(h_x)) => {
            let idx = index_from(eta, lambda)?;
            FptSpec { k_terms: f.k_terms, ..FptSpec::new(idx.nu, lamperti(h_x, eta)?, f.t_min) }
        }
        _ => FptSpec { k_terms: f.k_terms, ..FptSpec::new(f.nu.unwrap(), f.h_y.unwrap(), f.t_min) },
    };
    let series = SeriesPdf::new(spec)?;
    let closed = ClosedPdf::new(spec)?;
    let tc = spec.crossover_time()?;
    let times: Vec<f64> = if f.times.is_empty() {
        let t_max = f.t_max.unwrap_or(10.0 * tc);
        if !(t_max > f.t_min) {
            return Err(CliError::Validation(format!("t_max = {t_max} must exceed t_min = {}", f.t_min)));
        }
        let ratio = (t_max / f.t_min).ln();
        (0..f.points).map(|i| f.t_min * (ratio * i as f64 / (f.points - 1) as f64).exp()).collect()
    } else {
        f.times.clone()
    };
    let rows = times
        .iter()
        .map(|&t| Ok((t, series.density(t)?, closed.density(t)?)))
        .collect::<Result<Vec<_>, bursty_core::Error>>()?;

    let mut art = Artifacts::create(out, cfg)?;
    let mut w = art.table::<()>(tables::BURST_PDF.file, &tables::BURST_PDF, None)?;
    for r in &rows {
        w.row(r)?;
    }
    w.finish()?;
    let j1 = bessel_zeros(spec.nu, 1)?[0];
    let summary = FptSummary {
        config_hash: art.config_hash().to_string(),
        command: "fpt",
        nu: spec.nu,
        n_dim: 2.0 * (spec.nu + 1.0),
        h_y: spec.h_y,
        t_min_s: spec.t_min,
        j_nu_1: j1,
        crossover_time_s: tc,
        cutoff_rate: j1 * j1 / (2.0 * spec.h_y * spec.h_y),
        series_terms: series.terms(),
        series_normalization: series.normalization(),
        closed_normalization: closed.normalization(),
        points: rows.len(),
    };
    art.finish(&summary)
}

#[derive(Serialize)]
struct ReturnsSummary {
    config_hash: String,
    command: &'static str,
    model: String,
    generator: &'static str,
    steps: u64,
    returns: usize,
    q_seed: u64,
    filter_window_seconds: f64,
    threshold: f64,
    bursts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    histogram_mass: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

fn returns(cfg: &RunConfig, out: &Path) -> CliResult<Manifest> {
    let r = cfg.returns.as_ref().unwrap();
    let complex = match cfg.model {
        Some(Model::Complex(c)) => c,
        _ => unreachable!("validated"),
    };
    let sim = cfg.sim.as_ref().unwrap();
    let params = ReturnModelParams::with_window(complex, r.r0_bar, r.sample_dt, r.lambda2);
    let duration = complex.sigma_t_sq * r.sample_dt * r.intervals as f64;
    let sc = sim.sim_config(StopRule::Duration(duration));
    let series = simulate_returns(&params, &sc, r.sample_dt, r.q_seed)?;
    let smoothed = smoothed_abs_returns(&series.r, r.filter_window, r.sample_dt)?;
    let k = series.r.len() + 1 - smoothed.len();
    let t_smooth = &series.t_seconds[k - 1..];

    let mut art = Artifacts::create(out, cfg)?;
    if r.write_returns {
        let mut w = art.table::<()>(tables::RETURNS.file, &tables::RETURNS, None)?;
        for i in 0..series.r.len() {
            w.row((series.t_seconds[i], series.r[i], series.r0[i]))?;
        }
        w.finish()?;
        let mut w = art.table::<()>(tables::SMOOTHED.file, &tables::SMOOTHED, None)?;
        for (t, v) in t_smooth.iter().zip(&smoothed) {
            w.row((t, v))?;
        }
        w.finish()?;
    }
    let seq = detect_bursts(t_smooth.iter().copied().zip(smoothed.iter().copied()), r.threshold)?;
    let mut w = art.table::<()>(tables::RETURN_BURSTS.file, &tables::RETURN_BURSTS, None)?;
    for b in &seq.bursts {
        w.row((b.t_start, b.t_end, b.duration, b.peak, b.size))?;
    }
    w.finish()?;

    let mut notes = Vec::new();
    let mut w = art.table::<()>(tables::RETURN_DURATION_PDF.file, &tables::RETURN_DURATION_PDF, None)?;
    let histogram_mass = match log_binned_density(&seq.durations(), r.bins_per_decade) {
        Ok(hist) => {
            for i in 0..hist.bins() {
                w.row((hist.edges[i], hist.edges[i + 1], hist.center(i), hist.counts[i], hist.density(i)))?;
            }
            Some((0..hist.bins()).map(|i| hist.density(i) * hist.width(i)).sum())
        }
        Err(e) => {
            notes.push(format!("duration histogram: {e}"));
            None
        }
    };
    w.finish()?;

    let summary = ReturnsSummary {
        config_hash: art.config_hash().to_string(),
        command: "returns",
        model: Model::Complex(complex).fingerprint(),
        generator: GENERATOR,
        steps: series.sde.steps,
        returns: series.r.len(),
        q_seed: series.q_seed,
        filter_window_seconds: r.filter_window,
        threshold: r.threshold,
        bursts: seq.len(),
        histogram_mass,
        notes,
    };
    art.finish(&summary)
}

/// Outcome of [`verify`].
#[derive(Debug)]
pub struct Verification {
    pub files: usize,
    pub config_hash: String,
}

fn scratch_dir() -> PathBuf {
    use std::sync::atomic::{AtomicU64, Ordering};
    static NEXT: AtomicU64 = AtomicU64::new(0);
    std::env::temp_dir().join(format!("bursty-verify-{}-{}", std::process::id(), NEXT.fetch_add(1, Ordering::Relaxed)))
}

/// Re-runs the config stored in `dir` and compares every file's checksum.
pub fn verify(dir: &Path) -> CliResult<Verification> {
    let cfg = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let manifest = Manifest::load(&dir.join(MANIFEST_FILE))?;
    let hash = cfg.hash()?;
    if hash != manifest.config_hash {
        return Err(CliError::Mismatch(format!(
            "{CONFIG_FILE} hashes to {hash}, manifest records {}",
            manifest.config_hash
        )));
    }
    for input in &manifest.inputs {
        let now = sha256_file(Path::new(&input.name))?;
        if now != input.sha256 {
            return Err(CliError::Mismatch(format!("input {} changed since the run", input.name)));
        }
    }
    let scratch = scratch_dir();
    let rerun = execute(&cfg, &scratch);
    let _ = std::fs::remove_dir_all(&scratch);
    let rerun = rerun?;

    let mut problems = Vec::new();
    for e in &manifest.files {
        match sha256_file(&dir.join(&e.name)) {
            Ok(h) if h == e.sha256 => {}
            Ok(_) => problems.push(format!("{} differs from its manifest entry", e.name)),
            Err(_) => problems.push(format!("{} is missing", e.name)),
        }
    }
    if rerun.files != manifest.files {
        let names = |m: &Manifest| m.files.iter().map(|e| e.name.clone()).collect::<Vec<_>>();
        for e in &rerun.files {
            match manifest.files.iter().find(|o| o.name == e.name) {
                Some(o) if o.sha256 != e.sha256 => problems.push(format!("{} differs on re-run", e.name)),
                None => problems.push(format!("{} only appears on re-run", e.name)),
                _ => {}
            }
        }
        for n in names(&manifest).into_iter().filter(|n| !names(&rerun).contains(n)) {
            problems.push(format!("{n} not produced on re-run"));
        }
    }
    if !problems.is_empty() {
        return Err(CliError::Mismatch(problems.join("; ")));
    }
    Ok(Verification { files: manifest.files.len(), config_hash: hash })
}
