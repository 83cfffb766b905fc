use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::wire::{Message, PROTOCOL_VERSION};
use super::{normalize_predictions, NormalizeStats, Prediction, Predictor, PredictorError};
use crate::molgraph::CanonicalKey;

/// Client for a model running in a child process. Requests are strictly
/// sequential; any timeout, exit, or protocol violation marks the handle as
/// failed and kills the child.
#[derive(Debug)]
pub struct ExternalPredictor {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    max_top_k: usize,
    timeout: Duration,
    failure: Option<String>,
    dropped: NormalizeStats,
}

/// Start `command` through `sh -c` and complete the handshake.
pub fn spawn_external(command: &str, timeout: Duration) -> Result<ExternalPredictor, PredictorError> {
    let mut cmd = Command::new("sh");
    cmd.arg("-c").arg(command).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::inherit());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        // own process group so a kill also reaches whatever the shell started
        cmd.process_group(0);
    }
    let mut child = cmd.spawn().map_err(PredictorError::Spawn)?;
    let stdin = child.stdin.take();
    let stdout = child.stdout.take().expect("stdout is piped");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });
    let mut p = ExternalPredictor {
        child,
        stdin,
        lines: rx,
        next_id: 0,
        max_top_k: 0,
        timeout,
        failure: None,
        dropped: NormalizeStats::default(),
    };
    match p.read_message()? {
        Message::Hello { version, max_top_k } if version == PROTOCOL_VERSION && max_top_k > 0 => {
            p.max_top_k = max_top_k;
            Ok(p)
        }
        Message::Hello { version, max_top_k } => {
            Err(p.fail(PredictorError::Protocol(format!("unsupported hello: version {version}, max_top_k {max_top_k}"))))
        }
        other => Err(p.fail(PredictorError::Protocol(format!("expected hello, got {other:?}")))),
    }
}

impl ExternalPredictor {
    /// Entries discarded while normalizing responses so far.
    pub fn dropped(&self) -> NormalizeStats {
        self.dropped
    }

    fn fail(&mut self, e: PredictorError) -> PredictorError {
        if self.failure.is_none() {
            self.failure = Some(e.to_string());
        }
        self.stdin = None;
        self.kill();
        e
    }

    fn kill(&mut self) {
        #[cfg(unix)]
        // SAFETY: plain syscall; the group was created for this child and it
        // has not been reaped yet, so the id cannot have been reused.
        unsafe {
            libc::killpg(self.child.id() as libc::pid_t, libc::SIGKILL);
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    fn read_message(&mut self) -> Result<Message, PredictorError> {
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(self.fail(PredictorError::Io(e))),
            Err(RecvTimeoutError::Timeout) => return Err(self.fail(PredictorError::Timeout(self.timeout))),
            Err(RecvTimeoutError::Disconnected) => return Err(self.fail(PredictorError::Exited)),
        };
        Message::from_line(&line)
            .map_err(|e| self.fail(PredictorError::Protocol(format!("malformed message {line:?}: {e}"))))
    }
}

impl Predictor for ExternalPredictor {
    fn predict(&mut self, product: &CanonicalKey, top_k: usize) -> Result<Vec<Prediction>, PredictorError> {
        if let Some(f) = &self.failure {
            return Err(PredictorError::Failed(f.clone()));
        }
        self.next_id += 1;
        let id = self.next_id;
        let req = Message::Predict { id, smiles: product.as_str().to_owned(), top_k: top_k.min(self.max_top_k) };
        let stdin = self.stdin.as_mut().expect("live handle has stdin");
        if let Err(e) = stdin.write_all(req.to_line().as_bytes()).and_then(|_| stdin.flush()) {
            return Err(self.fail(PredictorError::Io(e)));
        }
        match self.read_message()? {
            Message::Predictions { id: got, results } if got == id => {
                let raw = results.into_iter().map(|r| (r.reactants, r.prob));
                let (mut preds, stats) = normalize_predictions(product, raw);
                self.dropped.unparsable += stats.unparsable;
                self.dropped.empty += stats.empty;
                self.dropped.bad_prior += stats.bad_prior;
                self.dropped.identity_loop += stats.identity_loop;
                self.dropped.duplicate += stats.duplicate;
                preds.truncate(top_k);
                Ok(preds)
            }
            Message::Error { id: Some(got), message } if got == id => Err(PredictorError::Remote(message)),
            other => Err(self.fail(PredictorError::Protocol(format!("unexpected reply to request {id}: {other:?}")))),
        }
    }

    fn max_top_k(&self) -> Option<usize> {
        Some(self.max_top_k)
    }

    fn is_failed(&self) -> bool {
        self.failure.is_some()
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        // closing stdin lets a well-behaved adapter exit on its own
        if self.failure.is_some() {
            return; // already killed and reaped
        }
        self.stdin = None;
        for _ in 0..20 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        self.kill();
    }
}
