use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use super::{BenchmarkRecord, EvalError};
use crate::molgraph::key_of;
use crate::predictor::{Predictor, PredictorSpec};
use crate::retrostar::{search, SearchConfig, Termination};
use crate::routes::Route;
use crate::stock::Stock;

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub workers: usize,
    /// Routes serialized per record.
    pub route_cap: usize,
    /// Optional sidecar receiving every extracted route per target.
    pub full_routes: Option<PathBuf>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions { workers: 1, route_cap: super::RECORD_ROUTE_CAP, full_routes: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct BatchSummary {
    /// Distinct targets after deduplication.
    pub targets: usize,
    pub duplicates: usize,
    /// Already present in the results file.
    pub skipped: usize,
    pub computed: usize,
    pub solved: usize,
    pub failed: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("workers must be at least 1")]
    Workers,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Results { path: PathBuf, source: EvalError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BatchError + '_ {
    move |source| BatchError::Io { path: path.to_owned(), source }
}

/// Target SMILES from a file: first token of each line, blank lines and
/// `#` comments skipped.
pub fn read_targets(path: &Path) -> std::io::Result<Vec<String>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.split_whitespace().next().unwrap_or_default().to_owned());
    }
    Ok(out)
}

/// Records already in a results file, plus the byte length of the valid
/// prefix. A final line that fails to parse (an interrupted write) is left
/// out; a bad line anywhere else is an error.
pub fn read_results(path: &Path) -> Result<(Vec<BenchmarkRecord>, u64), EvalError> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut records = Vec::new();
    let (mut good, mut offset) = (0u64, 0u64);
    for (i, line) in lines.iter().enumerate() {
        offset += line.len() as u64;
        if !line.trim().is_empty() {
            match serde_json::from_str::<BenchmarkRecord>(line) {
                Ok(r) => records.push(r),
                Err(_) if i + 1 == lines.len() => break,
                Err(e) => return Err(EvalError::Record { line: i + 1, message: e.to_string() }),
            }
        }
        good = offset;
    }
    Ok((records, good))
}

struct Job<'a> {
    smiles: &'a str,
    /// Canonical key, or the raw text when unparsable.
    id: String,
    parse_error: Option<String>,
}

/// Run every target not yet in `results`, appending one record per target
/// as it finishes. Each worker owns a predictor handle and reopens it after
/// a transport failure; failures become records and never stop the batch.
pub fn run_batch(
    targets: &[String],
    spec: &PredictorSpec,
    stock: &Stock,
    config: &SearchConfig,
    options: &BatchOptions,
    results: &Path,
) -> Result<BatchSummary, BatchError> {
    if options.workers == 0 {
        return Err(BatchError::Workers);
    }
    let mut summary = BatchSummary::default();
    let mut seen = HashSet::new();
    let mut jobs = Vec::new();
    for t in targets {
        let (id, parse_error) = match key_of(t) {
            Ok(k) => (k.as_str().to_owned(), None),
            Err(e) => (t.clone(), Some(e.to_string())),
        };
        if seen.insert(id.clone()) {
            jobs.push(Job { smiles: t, id, parse_error });
        } else {
            summary.duplicates += 1;
        }
    }
    summary.targets = jobs.len();

    let mut needs_newline = false;
    if results.exists() {
        let (done, good) =
            read_results(results).map_err(|source| BatchError::Results { path: results.to_owned(), source })?;
        let len = std::fs::metadata(results).map_err(io_err(results))?.len();
        if good < len {
            OpenOptions::new().write(true).open(results).and_then(|f| f.set_len(good)).map_err(io_err(results))?;
        } else if len > 0 {
            let mut last = [0u8];
            let mut f = File::open(results).map_err(io_err(results))?;
            std::io::Seek::seek(&mut f, std::io::SeekFrom::End(-1)).map_err(io_err(results))?;
            f.read_exact(&mut last).map_err(io_err(results))?;
            needs_newline = last[0] != b'\n';
        }
        let done: HashSet<String> = done.into_iter().map(|r| r.target).collect();
        let before = jobs.len();
        jobs.retain(|j| !done.contains(&j.id));
        summary.skipped = before - jobs.len();
    }

    let mut out = OpenOptions::new().create(true).append(true).open(results).map_err(io_err(results))?;
    if needs_newline {
        out.write_all(b"\n").map_err(io_err(results))?;
    }
    let mut sidecar = match &options.full_routes {
        Some(p) => Some((OpenOptions::new().create(true).append(true).open(p).map_err(io_err(p))?, p.as_path())),
        None => None,
    };

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(BenchmarkRecord, Option<Vec<Route>>)>();
    let want_full = sidecar.is_some();
    let mut write_error = None;
    std::thread::scope(|scope| {
        for _ in 0..options.workers.min(jobs.len()) {
            let tx = tx.clone();
            let (jobs, next) = (&jobs, &next);
            scope.spawn(move || {
                let mut handle: Option<Box<dyn Predictor>> = None;
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(job) = jobs.get(i) else { break };
                    let done = run_one(job, spec, stock, config, options.route_cap, want_full, &mut handle);
                    if tx.send(done).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        // the single writer: one line per record, flushed as it arrives
        for (record, full) in rx {
            summary.computed += 1;
            summary.solved += record.solved as usize;
            summary.failed += record.error.is_some() as usize;
            if write_error.is_some() {
                continue;
            }
            let line = record.to_line() + "\n";
            if let Err(e) = out.write_all(line.as_bytes()).and_then(|_| out.flush()) {
                write_error = Some(BatchError::Io { path: results.to_owned(), source: e });
                continue;
            }
            if let (Some((f, p)), Some(full)) = (sidecar.as_mut(), full) {
                let routes: Vec<_> = full.iter().map(Route::to_json_value).collect();
                let line = serde_json::json!({ "target": record.target, "routes": routes }).to_string() + "\n";
                if let Err(e) = f.write_all(line.as_bytes()).and_then(|_| f.flush()) {
                    write_error = Some(BatchError::Io { path: p.to_owned(), source: e });
                }
            }
        }
    });
    match write_error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

fn run_one(
    job: &Job,
    spec: &PredictorSpec,
    stock: &Stock,
    config: &SearchConfig,
    route_cap: usize,
    want_full: bool,
    handle: &mut Option<Box<dyn Predictor>>,
) -> (BenchmarkRecord, Option<Vec<Route>>) {
    if let Some(e) = &job.parse_error {
        return (BenchmarkRecord::failed(&job.id, job.smiles, Termination::Error, e.clone()), None);
    }
    if handle.as_ref().is_none_or(|h| h.is_failed()) {
        *handle = None;
        match spec.open() {
            Ok(h) => *handle = Some(h),
            Err(e) => {
                let msg = format!("cannot start predictor: {e}");
                return (BenchmarkRecord::failed(&job.id, job.smiles, Termination::TransportError, msg), None);
            }
        }
    }
    let predictor = handle.as_mut().expect("opened above");
    match search::<f64, _>(job.smiles, predictor.as_mut(), stock, config) {
        Ok(result) => {
            let full = want_full.then(|| result.route_list());
            (BenchmarkRecord::from_result(job.smiles, &result, route_cap), full)
        }
        Err(e) => (BenchmarkRecord::failed(&job.id, job.smiles, Termination::Error, e.to_string()), None),
    }
}
