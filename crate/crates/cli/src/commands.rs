use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use birdcall::enhance::{enhance, EnhancementResult, Method};
use birdcall::metrics::{
    extract_features, fit_gaussian, frechet_distance, isd, jsd_features, ndb, read_matrix_csv,
    snr_improvement, HistogramSpec, NdbConfig,
};
use birdcall::signal::{read_wav, write_wav, Waveform};
use birdcall::synth::corpus_clip;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{MetricId, RunConfig};
use crate::error::{exit, Error, Result};
use crate::report::{corpus_fingerprint, Failure, FileRow, Report};

/// File name of the report written by [`cmd_enhance`].
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.csv";

/// Sorted `*.wav` files directly inside `dir`.
pub fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::usage(format!("cannot start {jobs} workers: {e}")))
}

#[derive(Serialize)]
struct BandWeight {
    f_low: f64,
    f_high: f64,
    weight: f64,
    normalized: f64,
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    file_id: &'a str,
    method: &'a str,
    band_weights: Vec<BandWeight>,
    snr_est_db: Option<f64>,
    alpha_prime: Option<f64>,
    noise_ref_span: [usize; 2],
    clipped_samples: usize,
}

fn write_diagnostics(path: &Path, file_id: &str, r: &EnhancementResult, clipped: usize) -> Result<()> {
    let normalized = r.normalized_weights();
    let d = Diagnostics {
        file_id,
        method: r.method.id(),
        band_weights: r
            .band_weights
            .iter()
            .zip(normalized)
            .map(|((b, w), n)| BandWeight {
                f_low: b.f_low,
                f_high: b.f_high,
                weight: *w,
                normalized: n,
            })
            .collect(),
        snr_est_db: r.snr_est_db,
        alpha_prime: r.alpha_prime,
        noise_ref_span: [r.noise_ref_span.0, r.noise_ref_span.1],
        clipped_samples: clipped,
    };
    let text = serde_json::to_string_pretty(&d).expect("diagnostics serialise");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn enhance_clip(path: &Path, cfg: &RunConfig, methods: &[Method]) -> Result<Vec<FileRow>> {
    let x = read_wav(path)?;
    let file_id = stem(path);
    let mut rows = Vec::with_capacity(methods.len());
    for &m in methods {
        let t0 = Instant::now();
        let r = enhance(&x, m, &cfg.mabe)?;
        let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
        let out = cfg.output_dir.join(format!("{file_id}.{}.wav", m.id()));
        let clipped = write_wav(&out, &r.enhanced)?;
        write_diagnostics(&cfg.output_dir.join(format!("{file_id}.{}.json", m.id())), &file_id, &r, clipped)?;
        rows.push(FileRow {
            file_id: file_id.clone(),
            method: m.id().to_string(),
            snr_improvement_db: snr_improvement(&x, &r.enhanced)?,
            isd: isd(&x, &r.enhanced)?,
            runtime_ms,
        });
    }
    Ok(rows)
}

/// Result of a batch command: what was produced and the exit status.
#[derive(Debug)]
pub struct Outcome<T> {
    pub value: T,
    pub exit_code: i32,
}

/// Enhances every WAV in the input directory with each selected method,
/// writing `<stem>.<method>.wav`, a diagnostics JSON per output and
/// `report.json`. Unreadable clips are skipped and reported; the exit code
/// is then [`exit::PARTIAL`].
pub fn cmd_enhance(cfg: &RunConfig) -> Result<Outcome<Report>> {
    cfg.validate()?;
    let methods = cfg.method.methods();
    if methods.contains(&Method::Mabe) {
        // Catch bad overrides once instead of failing every clip.
        cfg.mabe.validate(birdcall::signal::CORPUS_SAMPLE_RATE)?;
    }
    let inputs = list_wavs(&cfg.input_dir)?;
    if inputs.is_empty() {
        return Err(Error::usage(format!("no WAV files in {}", cfg.input_dir.display())));
    }
    create_dir(&cfg.output_dir)?;
    info!("enhancing {} clips with {} method(s) on {} worker(s)", inputs.len(), methods.len(), cfg.jobs);

    let results: Vec<Result<Vec<FileRow>>> =
        thread_pool(cfg.jobs)?.install(|| inputs.par_iter().map(|p| enhance_clip(p, cfg, &methods)).collect());

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (path, res) in inputs.iter().zip(results) {
        match res {
            Ok(r) => rows.extend(r),
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                failures.push(Failure {
                    file: file_name(path),
                    error: e.to_string(),
                });
            }
        }
    }
    let names: Vec<String> = inputs.iter().map(|p| file_name(p)).collect();
    let report = Report::new(corpus_fingerprint(&names), cfg.seed, rows, failures);
    report.save(&cfg.output_dir.join(REPORT_FILE))?;
    let exit_code = if report.failures.is_empty() { exit::SUCCESS } else { exit::PARTIAL };
    Ok(Outcome { value: report, exit_code })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsOptions {
    pub metrics: Vec<MetricId>,
    pub embeddings: Option<(PathBuf, PathBuf)>,
    pub ndb_k: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            metrics: vec![MetricId::Isd, MetricId::Jsd, MetricId::Ndb],
            embeddings: None,
            ndb_k: NdbConfig::default().k,
            seed: 0,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub n_real: usize,
    pub n_gen: usize,
    pub isd: Option<f64>,
    pub jsd: Option<f64>,
    pub ndb: Option<usize>,
    pub ndb_k: Option<usize>,
    pub frechet: Option<f64>,
}

fn read_all(paths: &[PathBuf]) -> Result<Vec<Waveform>> {
    paths.par_iter().map(read_wav).collect::<birdcall::Result<_>>().map_err(Error::from)
}

/// Distributional and paired metrics between a real and a generated
/// directory. ISD pairs files by name (real is the reference); Fréchet needs
/// one embedding CSV per side.
pub fn cmd_metrics(real_dir: &Path, gen_dir: &Path, opts: &MetricsOptions) -> Result<MetricsSummary> {
    let real_paths = list_wavs(real_dir)?;
    let gen_paths = list_wavs(gen_dir)?;
    for (dir, list) in [(real_dir, &real_paths), (gen_dir, &gen_paths)] {
        if list.is_empty() {
            return Err(Error::usage(format!("no WAV files in {}", dir.display())));
        }
    }
    let wants = |m| opts.metrics.contains(&m);
    if wants(MetricId::Frechet) && opts.embeddings.is_none() {
        return Err(Error::usage("frechet requested but no embedding CSVs given"));
    }
    if wants(MetricId::Isd) {
        let real_names: Vec<String> = real_paths.iter().map(|p| file_name(p)).collect();
        let gen_names: Vec<String> = gen_paths.iter().map(|p| file_name(p)).collect();
        if let Some(n) = real_names.iter().find(|n| !gen_names.contains(n)) {
            return Err(Error::Unpaired(n.clone()));
        }
        if let Some(n) = gen_names.iter().find(|n| !real_names.contains(n)) {
            return Err(Error::Unpaired(n.clone()));
        }
    }

    let pool = thread_pool(opts.jobs)?;
    let (real, gen) = pool.install(|| -> Result<_> { Ok((read_all(&real_paths)?, read_all(&gen_paths)?)) })?;
    let mut summary = MetricsSummary {
        n_real: real.len(),
        n_gen: gen.len(),
        isd: None,
        jsd: None,
        ndb: None,
        ndb_k: None,
        frechet: None,
    };

    if wants(MetricId::Isd) {
        // Both lists are sorted by name and hold the same names.
        let per: Vec<f64> = pool.install(|| {
            real.par_iter().zip(&gen).map(|(r, g)| isd(r, g)).collect::<birdcall::Result<_>>()
        })?;
        summary.isd = Some(per.iter().sum::<f64>() / per.len() as f64);
    }
    if wants(MetricId::Jsd) || wants(MetricId::Ndb) {
        let (fr, fg) = pool.install(|| -> Result<_> {
            let fr: Vec<_> = real.par_iter().map(extract_features).collect::<birdcall::Result<_>>()?;
            let fg: Vec<_> = gen.par_iter().map(extract_features).collect::<birdcall::Result<_>>()?;
            Ok((fr, fg))
        })?;
        if wants(MetricId::Jsd) {
            summary.jsd = Some(jsd_features(&fr, &fg, HistogramSpec::default())?);
        }
        if wants(MetricId::Ndb) {
            // k-means cannot place more centroids than there are real points.
            let k = opts.ndb_k.min(fr.len());
            if k < opts.ndb_k {
                warn!("ndb: only {} real clips, using k = {k}", fr.len());
            }
            let cfg = NdbConfig {
                k,
                seed: opts.seed,
                ..NdbConfig::default()
            };
            summary.ndb = Some(ndb(&fr, &fg, &cfg)?);
            summary.ndb_k = Some(k);
        }
    }
    if let (true, Some((er, eg))) = (wants(MetricId::Frechet), &opts.embeddings) {
        let a = fit_gaussian(&read_matrix_csv(er)?)?;
        let b = fit_gaussian(&read_matrix_csv(eg)?)?;
        summary.frechet = Some(frechet_distance(&a, &b)?);
    }
    Ok(summary)
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ManifestRow {
    pub clip_id: String,
    pub preset: String,
    pub f_start: f64,
    pub f_end: f64,
    pub n_harmonics: u32,
    pub syllable_count: u32,
    pub syllable_len_s: f64,
    pub gap_len_s: f64,
    pub onset_s: f64,
    pub envelope: String,
    pub amplitude: f64,
    pub noise_kind: String,
    pub seed: u64,
    pub target_segsnr_db: f64,
    pub achieved_segsnr_db: f64,
    pub clean_path: String,
    pub noise_path: String,
    pub mix_path: String,
}

fn synth_clip(i: usize, out_dir: &Path, master_seed: u64, target: f64) -> Result<ManifestRow> {
    let clip = corpus_clip(i, master_seed, target)?;
    let id = clip.id();
    let mut paths = Vec::with_capacity(3);
    for (sub, w) in [("clean", &clip.mix.clean), ("noise", &clip.mix.noise), ("mix", &clip.mix.mix)] {
        let rel = format!("{sub}/{id}.wav");
        let clipped = write_wav(out_dir.join(&rel), w)?;
        if clipped > 0 {
            warn!("{rel}: {clipped} samples clipped");
        }
        paths.push(rel);
    }
    let s = &clip.spec;
    Ok(ManifestRow {
        clip_id: id,
        preset: s.name.clone(),
        f_start: s.f_start,
        f_end: s.f_end,
        n_harmonics: s.n_harmonics,
        syllable_count: s.syllable_count,
        syllable_len_s: s.syllable_len_s,
        gap_len_s: s.gap_len_s,
        onset_s: s.onset_s,
        envelope: s.envelope.name().to_string(),
        amplitude: s.amplitude,
        noise_kind: clip.noise_kind.to_string(),
        seed: clip.seed,
        target_segsnr_db: clip.mix.target_segsnr_db,
        achieved_segsnr_db: clip.mix.achieved_segsnr_db,
        mix_path: paths.pop().expect("three paths"),
        noise_path: paths.pop().expect("three paths"),
        clean_path: paths.pop().expect("three paths"),
    })
}

/// Writes `count` clean/noise/mix triples under `out_dir/{clean,noise,mix}`
/// cycling through the presets and `snr_list`, plus `manifest.csv`.
pub fn cmd_synth(count: usize, out_dir: &Path, master_seed: u64, snr_list: &[f64], jobs: usize) -> Result<Vec<ManifestRow>> {
    if count == 0 {
        return Err(Error::usage("count must be at least 1"));
    }
    if snr_list.is_empty() || snr_list.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage("snr list must hold at least one finite value"));
    }
    for sub in ["clean", "noise", "mix"] {
        create_dir(&out_dir.join(sub))?;
    }
    let rows: Vec<ManifestRow> = thread_pool(jobs)?.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| synth_clip(i, out_dir, master_seed, snr_list[i % snr_list.len()]))
            .collect::<Result<_>>()
    })?;
    let path = out_dir.join(MANIFEST_FILE);
    let csv_err = |source| Error::Csv { path: path.clone(), source };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    for r in &rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}

/// Merges reports of one corpus into a table; writes `<out>.md` and
/// `<out>.csv` when `out` is given.
pub fn cmd_report(report_paths: &[PathBuf], out: Option<&Path>) -> Result<Report> {
    if report_paths.is_empty() {
        return Err(Error::usage("at least one report is required"));
    }
    let reports: Vec<Report> = report_paths.iter().map(|p| Report::load(p)).collect::<Result<_>>()?;
    let merged = Report::merge(&reports)?;
    if let Some(prefix) = out {
        let md = prefix.with_extension("md");
        std::fs::write(&md, merged.markdown_table()).map_err(|e| Error::io(&md, e))?;
        merged.write_csv_table(&prefix.with_extension("csv"))?;
    }
    Ok(merged)
}

/// Counts of rows per method; used to check report completeness.
pub fn rows_per_method(report: &Report) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for r in &report.per_file {
        *m.entry(r.method.clone()).or_insert(0) += 1;
    }
    m
}
