// Stand-in adapter for exercising the external predictor client.
//
// protocol-mock <table.tsv> [--max-top-k K] [--latency-ms MS] [--die-after N]
//               [--hang-at N] [--malformed-at N] [--error-at N] [--wrong-id-at N]
//               [--bad-hello] [--noise]
//
// Requests are counted from 1. --noise appends entries the client must drop.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use retroplan::molgraph::key_of;
use retroplan::predictor::wire::{Message, WireResult};
use retroplan::predictor::TablePredictor;

#[derive(Default)]
struct Opts {
    table: Option<PathBuf>,
    max_top_k: usize,
    latency_ms: u64,
    die_after: Option<u64>,
    hang_at: Option<u64>,
    malformed_at: Option<u64>,
    error_at: Option<u64>,
    wrong_id_at: Option<u64>,
    bad_hello: bool,
    noise: bool,
}

fn parse_args() -> Opts {
    let mut o = Opts { max_top_k: 50, ..Default::default() };
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        let mut num = || args.next().and_then(|v| v.parse::<u64>().ok()).expect("numeric argument");
        match a.as_str() {
            "--max-top-k" => o.max_top_k = num() as usize,
            "--latency-ms" => o.latency_ms = num(),
            "--die-after" => o.die_after = Some(num()),
            "--hang-at" => o.hang_at = Some(num()),
            "--malformed-at" => o.malformed_at = Some(num()),
            "--error-at" => o.error_at = Some(num()),
            "--wrong-id-at" => o.wrong_id_at = Some(num()),
            "--bad-hello" => o.bad_hello = true,
            "--noise" => o.noise = true,
            path => o.table = Some(PathBuf::from(path)),
        }
    }
    o
}

fn main() {
    let o = parse_args();
    let table = match &o.table {
        Some(p) => TablePredictor::from_path(p).expect("readable table"),
        None => TablePredictor::default(),
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let hello = if o.bad_hello {
        Message::Hello { version: 99, max_top_k: o.max_top_k }
    } else {
        Message::Hello { version: 1, max_top_k: o.max_top_k }
    };
    out.write_all(hello.to_line().as_bytes()).unwrap();
    out.flush().unwrap();

    let mut served = 0u64;
    for line in io::stdin().lock().lines() {
        let Ok(line) = line else { break };
        let Ok(Message::Predict { id, smiles, top_k }) = Message::from_line(&line) else {
            eprintln!("protocol-mock: unexpected input {line:?}");
            std::process::exit(3);
        };
        served += 1;
        if o.die_after.is_some_and(|n| served > n) {
            std::process::exit(1);
        }
        if o.hang_at == Some(served) {
            thread::sleep(Duration::from_secs(3600));
        }
        if o.latency_ms > 0 {
            thread::sleep(Duration::from_millis(o.latency_ms));
        }
        let reply = if o.malformed_at == Some(served) {
            "{\"type\":\"predictions\",\"id\":\n".to_owned()
        } else if o.error_at == Some(served) {
            Message::Error { id: Some(id), message: "model failure".into() }.to_line()
        } else {
            let id = if o.wrong_id_at == Some(served) { id + 100 } else { id };
            let mut results: Vec<WireResult> = match key_of(&smiles) {
                Ok(k) => table
                    .lookup(&k)
                    .iter()
                    .take(top_k)
                    .map(|p| WireResult {
                        reactants: p.reactants.iter().map(|r| r.as_str().to_owned()).collect(),
                        prob: p.prior,
                    })
                    .collect(),
                Err(_) => Vec::new(),
            };
            if o.noise {
                let dup = results.first().map(|r| WireResult { reactants: r.reactants.clone(), prob: r.prob / 2.0 });
                results.extend(dup);
                results.push(WireResult { reactants: vec!["C(".into()], prob: 0.5 });
                results.push(WireResult { reactants: vec![], prob: 0.5 });
                results.push(WireResult { reactants: vec!["C".into()], prob: 0.0 });
                results.push(WireResult { reactants: vec![smiles.clone(), "O".into()], prob: 0.9 });
            }
            Message::Predictions { id, results }.to_line()
        };
        out.write_all(reply.as_bytes()).unwrap();
        out.flush().unwrap();
    }
}
