//! Fitness computed by external worker processes.
//!
//! Workers speak line-delimited JSON over stdin/stdout, one request in flight
//! per worker:
//!
//! ```text
//! -> {"id": 7, "params": {"batch_size": 8, "dropout_rate": 0.1, "neurons": 110}}
//! <- {"id": 7, "fitness": 0.42}
//! <- {"id": 7, "error": "out of memory"}
//! ```
//!
//! A worker that times out, exits, or answers with a malformed line or a
//! mismatched id is killed and replaced on the next request. A worker that
//! answers with an `error` object stays in the pool.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::gsa::Sense;
use crate::objectives::{EvalError, Objective};
use crate::space::ParamVector;

/// Program and arguments used to launch one worker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerCommand {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl WorkerCommand {
    pub fn new(
        program: impl Into<String>,
        args: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Self {
            program: program.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    /// Splits `argv[0]` from the rest; `None` for an empty list.
    pub fn from_argv(argv: &[String]) -> Option<Self> {
        let (program, args) = argv.split_first()?;
        Some(Self {
            program: program.clone(),
            args: args.to_vec(),
        })
    }
}

struct Worker {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

impl Worker {
    fn spawn(cmd: &WorkerCommand) -> Result<Self, EvalError> {
        let mut child = Command::new(&cmd.program)
            .args(&cmd.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| EvalError::Spawn(format!("{}: {e}", cmd.program)))?;
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
        Ok(Self {
            child,
            stdin,
            lines: rx,
        })
    }

    fn request(
        &mut self,
        id: u64,
        params: &ParamVector,
        timeout: Duration,
    ) -> Result<Value, EvalError> {
        let mut line = serde_json::to_string(&serde_json::json!({ "id": id, "params": params }))
            .map_err(|e| EvalError::Protocol(e.to_string()))?;
        line.push('\n');
        let stdin = self
            .stdin
            .as_mut()
            .expect("stdin open while worker is pooled");
        if let Err(e) = stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()) {
            return Err(self.exited(format!("write failed: {e}")));
        }
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(text)) => serde_json::from_str(&text)
                .map_err(|e| EvalError::Protocol(format!("unparseable response {text:?}: {e}"))),
            Ok(Err(e)) => Err(self.exited(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(EvalError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(self.exited("closed its output".into())),
        }
    }

    fn exited(&mut self, what: String) -> EvalError {
        match self.child.try_wait() {
            Ok(Some(status)) => EvalError::WorkerExited(format!("{what} ({status})")),
            _ => EvalError::WorkerExited(what),
        }
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        // Closing stdin asks the worker to exit; give it a moment before killing.
        drop(self.stdin.take());
        let deadline = Instant::now() + Duration::from_millis(500);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn parse_response(id: u64, value: &Value) -> Result<f64, EvalError> {
    let obj = value
        .as_object()
        .ok_or_else(|| EvalError::Protocol(format!("response is not an object: {value}")))?;
    match obj.get("id").and_then(Value::as_u64) {
        Some(got) if got == id => {}
        Some(got) => {
            return Err(EvalError::Protocol(format!(
                "id mismatch: sent {id}, got {got}"
            )))
        }
        None => {
            return Err(EvalError::Protocol(format!(
                "response without integer id: {value}"
            )))
        }
    }
    if let Some(f) = obj.get("fitness") {
        return match f.as_f64() {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(EvalError::Protocol(format!(
                "fitness is not a finite number: {f}"
            ))),
        };
    }
    match obj.get("error") {
        Some(Value::String(msg)) => Err(EvalError::Worker(msg.clone())),
        Some(other) => Err(EvalError::Worker(other.to_string())),
        None => Err(EvalError::Protocol(format!(
            "response has neither fitness nor error: {value}"
        ))),
    }
}

struct Pool {
    idle: Vec<Worker>,
    busy: usize,
}

/// An objective evaluated by a pool of up to `parallelism` worker processes.
pub struct ExternalObjective {
    name: String,
    sense: Sense,
    command: WorkerCommand,
    timeout: Duration,
    parallelism: usize,
    pool: Mutex<Pool>,
    slot_freed: Condvar,
    next_id: AtomicU64,
}

impl ExternalObjective {
    pub fn new(
        command: WorkerCommand,
        sense: Sense,
        timeout: Duration,
        parallelism: usize,
    ) -> Self {
        Self {
            name: format!("external:{}", command.program),
            sense,
            command,
            timeout,
            parallelism: parallelism.max(1),
            pool: Mutex::new(Pool {
                idle: Vec::new(),
                busy: 0,
            }),
            slot_freed: Condvar::new(),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Live worker processes, idle and busy.
    pub fn workers(&self) -> usize {
        let pool = self.pool.lock().expect("worker pool poisoned");
        pool.idle.len() + pool.busy
    }

    fn checkout(&self) -> Option<Worker> {
        let mut pool = self.pool.lock().expect("worker pool poisoned");
        while pool.busy >= self.parallelism {
            pool = self.slot_freed.wait(pool).expect("worker pool poisoned");
        }
        pool.busy += 1;
        pool.idle.pop()
    }

    fn checkin(&self, worker: Option<Worker>) {
        let mut pool = self.pool.lock().expect("worker pool poisoned");
        pool.busy -= 1;
        if let Some(w) = worker {
            pool.idle.push(w);
        }
        self.slot_freed.notify_one();
    }

    /// Sends one request and waits for the matching response.
    pub fn external_evaluate(&self, params: &ParamVector) -> Result<f64, EvalError> {
        let mut worker = match self.checkout() {
            Some(w) => w,
            None => match Worker::spawn(&self.command) {
                Ok(w) => w,
                Err(e) => {
                    self.checkin(None);
                    return Err(e);
                }
            },
        };
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let outcome = worker
            .request(id, params, self.timeout)
            .and_then(|v| parse_response(id, &v));
        // Only a well-formed answer leaves the worker in a known state.
        let reusable = matches!(outcome, Ok(_) | Err(EvalError::Worker(_)));
        self.checkin(reusable.then_some(worker));
        outcome
    }
}

impl Objective for ExternalObjective {
    fn name(&self) -> &str {
        &self.name
    }

    fn sense(&self) -> Sense {
        self.sense
    }

    fn evaluate(&self, params: &ParamVector) -> Result<f64, EvalError> {
        self.external_evaluate(params)
    }
}
