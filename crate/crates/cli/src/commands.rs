use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::{anyhow, Context};
use serde_json::{json, Value};

use retroplan::evalharness::{
    aggregate_metrics, extract_prior_rank, predicted_routes, read_results, read_targets, route_statistics,
    run_batch, single_step_top_n, subsample_stats, BatchOptions, BenchmarkRecord, EvalError,
};
use retroplan::fingerprint::{cluster_fingerprints, morgan_fingerprint, DEFAULT_NBITS, DEFAULT_RADIUS};
use retroplan::molgraph::parse_smiles;
use retroplan::predictor::{PredictorSpec, SpecError};
use retroplan::retrostar::{search, SearchConfig};
use retroplan::routes::{cluster_overlap_counts, parse_route_file, AccuracyReport, LabeledRoute};
use retroplan::stock::{load_stock, write_stock, Stock};

use crate::{
    BatchArgs, ClusterMolsArgs, ClusterRoutesArgs, EvalRoutesArgs, EvalSingleStepArgs, ExportStockArgs, Failure,
    PlanArgs, PredictorArgs, SearchArgs, StatsArgs, SubsampleArgs,
};

type Result<T> = std::result::Result<T, Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(anyhow!("{}: no such file", path.display())))
    }
}

fn effective_config(a: &SearchArgs) -> Result<SearchConfig> {
    let mut c = match &a.config {
        Some(p) => {
            require_file(p)?;
            SearchConfig::from_path(p).map_err(|e| usage(anyhow!("{}: {e}", p.display())))?
        }
        None => SearchConfig::default(),
    };
    if a.paroutes {
        c.max_depth = SearchConfig::paroutes().max_depth;
    }
    if let Some(v) = a.iterations {
        c.iteration_limit = v;
    }
    if let Some(v) = a.time_limit {
        c.time_limit_s = v;
    }
    if let Some(v) = a.top_k {
        c.top_k = v;
    }
    if let Some(v) = a.max_depth {
        c.max_depth = v;
    }
    c.validate().map_err(usage)?;
    Ok(c)
}

fn timeout(secs: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(secs).map_err(|_| usage(anyhow!("--timeout must be a non-negative number of seconds")))
}

fn open_spec(uri: &str, secs: f64) -> Result<PredictorSpec> {
    if let Some(p) = uri.strip_prefix("table:") {
        require_file(Path::new(p))?;
    }
    match PredictorSpec::from_uri(uri, timeout(secs)?) {
        Ok(s) => Ok(s),
        Err(e @ SpecError::Syntax(_)) => Err(usage(e)),
        Err(e) => Err(Failure::Domain(e.into())),
    }
}

fn predictor_spec(a: &PredictorArgs) -> Result<PredictorSpec> {
    let uri = match (&a.predictor, &a.reactions) {
        (Some(u), _) => u.clone(),
        (None, Some(p)) => format!("table:{}", p.display()),
        (None, None) => return Err(usage(anyhow!("one of --predictor or --reactions is required"))),
    };
    open_spec(&uri, a.timeout)
}

fn stock(path: &Path, limit: Option<usize>) -> Result<Stock> {
    require_file(path)?;
    let s = load_stock(path, limit).with_context(|| format!("loading stock {}", path.display()))?;
    eprintln!("stock: {} molecules from {} lines ({} unparsable)", s.len(), s.lines_read(), s.unparsable());
    Ok(s)
}

fn records(path: &Path) -> Result<Vec<BenchmarkRecord>> {
    require_file(path)?;
    let (recs, _) = read_results(path).with_context(|| format!("reading results {}", path.display()))?;
    Ok(recs)
}

fn emit(out: Option<&Path>, report: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).context("writing standard output")?;
        }
    }
    Ok(())
}

pub fn plan(a: PlanArgs) -> Result<()> {
    let config = effective_config(&a.search)?;
    let spec = predictor_spec(&a.predictor)?;
    let stock = stock(&a.stock, None)?;
    let mut predictor = spec.open().context("starting predictor")?;
    let r = search::<f64, _>(&a.target, predictor.as_mut(), &stock, &config)
        .with_context(|| format!("target {:?}", a.target))?;
    let routes: Vec<Value> = r
        .routes
        .iter()
        .take(a.top_routes)
        .enumerate()
        .map(|(i, s)| {
            json!({
                "rank": i + 1,
                "cost": s.cost,
                "n_reactions": s.n_reactions,
                "hash": s.hash,
                "route": s.route.to_json_value(),
            })
        })
        .collect();
    emit(
        a.out.as_deref(),
        &json!({
            "config": config,
            "predictor": spec.describe(),
            "stock": { "path": a.stock, "molecules": stock.len() },
            "input": a.target,
            "target": r.target.as_str(),
            "solved": r.solved,
            "n_solved_routes": r.routes.len(),
            "best_cost": r.best_cost(),
            "termination": r.termination,
            "iterations": r.iterations,
            "model_calls": r.model_calls,
            "model_errors": r.model_errors,
            "tree_molecules": r.tree_molecules,
            "timing": r.timing,
            "error": r.error,
            "routes": routes,
        }),
    )
}

pub fn batch(a: BatchArgs) -> Result<()> {
    let config = effective_config(&a.search)?;
    if a.workers == 0 {
        return Err(usage(anyhow!("--workers must be at least 1")));
    }
    require_file(&a.targets)?;
    let targets = read_targets(&a.targets).with_context(|| format!("reading {}", a.targets.display()))?;
    let spec = predictor_spec(&a.predictor)?;
    let stock = stock(&a.stock, None)?;
    let options = BatchOptions { workers: a.workers, route_cap: a.top_routes, full_routes: a.full_routes.clone() };
    let summary = run_batch(&targets, &spec, &stock, &config, &options, &a.out)?;
    let all = records(&a.out)?;
    let metrics = aggregate_metrics(&all).ok();
    emit(
        None,
        &json!({
            "config": config,
            "predictor": spec.describe(),
            "stock": { "path": a.stock, "molecules": stock.len() },
            "workers": a.workers,
            "results": a.out,
            "summary": summary,
            "metrics": metrics,
        }),
    )
}

pub fn eval_routes(a: EvalRoutesArgs) -> Result<()> {
    let recs = records(&a.results)?;
    require_file(&a.gold)?;
    let text = std::fs::read_to_string(&a.gold).with_context(|| format!("reading {}", a.gold.display()))?;
    let gold = parse_route_file(&text).with_context(|| format!("parsing gold routes {}", a.gold.display()))?;
    let predicted = predicted_routes(&recs);
    let report = AccuracyReport::evaluate(&predicted, &gold, &a.top_n);
    emit(
        a.out.as_deref(),
        &json!({
            "results": a.results,
            "gold": a.gold,
            "top_n": a.top_n,
            "n_records": recs.len(),
            "metrics": aggregate_metrics(&recs).ok(),
            "accuracy": report,
        }),
    )
}

pub fn eval_single_step(a: EvalSingleStepArgs) -> Result<()> {
    let spec = open_spec(&a.predictor, a.timeout)?;
    require_file(&a.reactions)?;
    let file = File::open(&a.reactions).with_context(|| format!("opening {}", a.reactions.display()))?;
    let mut predictor = spec.open().context("starting predictor")?;
    let report = single_step_top_n(predictor.as_mut(), BufReader::new(file), &a.top_n)?;
    emit(
        a.out.as_deref(),
        &json!({
            "predictor": spec.describe(),
            "reactions": a.reactions,
            "top_n": a.top_n,
            "report": report,
        }),
    )
}

fn route_cluster_report(a: &ClusterRoutesArgs) -> Result<Value> {
    let mut models: Vec<(String, Vec<BenchmarkRecord>)> = Vec::new();
    for spec in &a.results {
        let Some((label, path)) = spec.split_once('=') else {
            return Err(usage(anyhow!("--results expects LABEL=PATH, got {spec:?}")));
        };
        if label.is_empty() || label.contains('+') {
            return Err(usage(anyhow!("model label {label:?} must be non-empty and must not contain '+'")));
        }
        if models.iter().any(|(l, _)| l == label) {
            return Err(usage(anyhow!("model label {label:?} given twice")));
        }
        models.push((label.to_owned(), records(Path::new(path))?));
    }
    let targets: BTreeSet<&str> =
        models.iter().flat_map(|(_, recs)| recs.iter().filter(|r| r.solved).map(|r| r.target.as_str())).collect();
    let mut per_target = Vec::new();
    let mut clusterings = Vec::new();
    for t in targets {
        let routes: Vec<LabeledRoute> = models
            .iter()
            .flat_map(|(label, recs)| {
                recs.iter()
                    .filter(move |r| r.target == t)
                    .flat_map(|r| r.routes.iter().take(a.top_routes))
                    .map(move |route| LabeledRoute { label: label.clone(), route: route.clone() })
            })
            .collect();
        let c = retroplan::routes::cluster_routes(&routes, a.cutoff);
        per_target.push(json!({ "target": t, "n_routes": routes.len(), "clustering": c }));
        clusterings.push(c);
    }
    Ok(json!({
        "cutoff": a.cutoff,
        "top_routes": a.top_routes,
        "models": models.iter().map(|(l, _)| l).collect::<Vec<_>>(),
        "targets": per_target,
        "overlap": cluster_overlap_counts(&clusterings),
    }))
}

pub fn cluster_routes(a: ClusterRoutesArgs) -> Result<()> {
    let report = route_cluster_report(&a)?;
    emit(a.out.as_deref(), &report)
}

pub fn cluster_mols(a: ClusterMolsArgs) -> Result<()> {
    require_file(&a.targets)?;
    let lines = read_targets(&a.targets).with_context(|| format!("reading {}", a.targets.display()))?;
    let mut smiles = Vec::new();
    let mut fps = Vec::new();
    let mut unparsable = 0;
    for s in lines {
        match parse_smiles(&s) {
            Ok(g) => {
                fps.push(morgan_fingerprint(&g, DEFAULT_RADIUS, DEFAULT_NBITS).expect("default width is valid"));
                smiles.push(s);
            }
            Err(_) => unparsable += 1,
        }
    }
    let clustering = cluster_fingerprints(&fps, a.cutoff)?;
    let clusters: Vec<Value> = clustering
        .clusters
        .iter()
        .map(|c| {
            json!({
                "centroid": smiles[c.centroid],
                "members": c.members.iter().map(|&m| &smiles[m]).collect::<Vec<_>>(),
            })
        })
        .collect();
    emit(
        a.out.as_deref(),
        &json!({
            "cutoff": a.cutoff,
            "radius": DEFAULT_RADIUS,
            "nbits": DEFAULT_NBITS,
            "n_molecules": smiles.len(),
            "unparsable": unparsable,
            "n_clusters": clusters.len(),
            "clusters": clusters,
        }),
    )
}

pub fn stats(a: StatsArgs) -> Result<()> {
    let recs = records(&a.results)?;
    let metrics = aggregate_metrics(&recs).map_err(|e| anyhow!("{}: {e}", a.results.display()))?;
    let mut terminations: BTreeMap<String, usize> = BTreeMap::new();
    for r in &recs {
        let name = serde_json::to_value(r.termination).expect("serializes");
        *terminations.entry(name.as_str().unwrap_or_default().to_owned()).or_default() += 1;
    }
    let mut report = json!({
        "results": a.results,
        "top_routes": a.top_routes,
        "metrics": metrics,
        "terminations": terminations,
        "route_stats": route_statistics(&recs, a.top_routes),
    });
    if a.prior_rank {
        report["seed"] = json!(a.seed);
        report["prior_rank"] = json!(extract_prior_rank(&recs, a.top_routes, a.sample, a.seed));
    }
    emit(a.out.as_deref(), &report)
}

pub fn subsample(a: SubsampleArgs) -> Result<()> {
    let recs = records(&a.results)?;
    let rep = match subsample_stats(&recs, a.size, a.repetitions, a.seed) {
        Ok(r) => r,
        Err(e @ (EvalError::SampleSize { .. } | EvalError::Repetitions)) => return Err(usage(e)),
        Err(e) => return Err(e.into()),
    };
    emit(a.out.as_deref(), &json!({ "results": a.results, "report": rep }))
}

pub fn export_stock(a: ExportStockArgs) -> Result<()> {
    let s = stock(&a.stock, a.size)?;
    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_stock(file, s.keys()).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!("wrote {} keys to {}", s.len(), a.out.display());
    Ok(())
}
