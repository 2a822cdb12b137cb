use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::benchmarks::{self, Benchmark};
use crate::{Error, Result};

/// Something that maps a batch of points (original coordinates) to responses.
pub trait Simulator {
    fn evaluate(&mut self, points: &[Vec<f64>]) -> Result<Vec<f64>>;
}

pub struct BuiltinSimulator {
    bench: Box<dyn Benchmark>,
}

impl BuiltinSimulator {
    pub fn new(name: &str) -> Result<Self> {
        Ok(BuiltinSimulator { bench: benchmarks::builtin(name)? })
    }
}

impl Simulator for BuiltinSimulator {
    fn evaluate(&mut self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(points.iter().map(|p| self.bench.value(p)).collect())
    }
}

/// Runs a shell command once per batch.
///
/// Each point is written to stdin as one line of comma-separated values,
/// then stdin is closed. The child must print one response per line in the
/// same order and exit with status 0.
pub struct ExternalSimulator {
    command: String,
    timeout: Duration,
}

impl ExternalSimulator {
    pub fn new(command: impl Into<String>, timeout: Duration) -> Self {
        ExternalSimulator { command: command.into(), timeout }
    }
}

/// Protocol encoding of one batch.
pub(crate) fn encode_batch(points: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for p in points {
        let row: Vec<String> = p.iter().map(|v| format!("{:?}", v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Parses the child's stdout; `raw` is attached to errors as-is.
pub(crate) fn decode_responses(stdout: &str, expected: usize, raw: &str) -> Result<Vec<f64>> {
    let mut lines: Vec<&str> = stdout.lines().map(str::trim).collect();
    while lines.last() == Some(&"") {
        lines.pop();
    }
    if lines.len() != expected {
        return Err(Error::Evaluation {
            message: format!("expected {} response lines, got {}", expected, lines.len()),
            output: raw.to_string(),
        });
    }
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| match l.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Evaluation {
                message: format!("malformed response on line {}: {:?}", i + 1, l),
                output: raw.to_string(),
            }),
        })
        .collect()
}

fn raw_output(stdout: &[u8], stderr: &[u8]) -> String {
    format!(
        "--- stdout ---\n{}--- stderr ---\n{}",
        String::from_utf8_lossy(stdout),
        String::from_utf8_lossy(stderr)
    )
}

fn kill_group(child: &mut std::process::Child) {
    #[cfg(unix)]
    {
        // SAFETY: plain syscall; the group id is the child's pid (set at spawn).
        unsafe {
            libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
        }
    }
    let _ = child.kill();
}

impl Simulator for ExternalSimulator {
    fn evaluate(&mut self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        if points.is_empty() {
            return Ok(Vec::new());
        }
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(&self.command).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
        // own process group, so a timeout also kills grandchildren holding the pipes
        #[cfg(unix)]
        std::os::unix::process::CommandExt::process_group(&mut cmd, 0);
        let mut child = cmd
            .spawn()
            .map_err(|e| Error::evaluation(format!("cannot start {:?}: {}", self.command, e)))?;

        let input = encode_batch(points);
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || {
            // A child that exits without reading stdin is reported by its
            // exit status, so a broken pipe here is not an error by itself.
            let _ = stdin.write_all(input.as_bytes());
        });
        let mut out_pipe = child.stdout.take().expect("piped stdout");
        let mut err_pipe = child.stderr.take().expect("piped stderr");
        let out_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = out_pipe.read_to_end(&mut buf);
            buf
        });
        let err_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = err_pipe.read_to_end(&mut buf);
            buf
        });

        let start = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break Some(status),
                Ok(None) if start.elapsed() >= self.timeout => {
                    kill_group(&mut child);
                    let _ = child.wait();
                    break None;
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err(Error::evaluation(format!("waiting for simulator: {}", e))),
            }
        };
        let _ = writer.join();
        let stdout = out_reader.join().unwrap_or_default();
        let stderr = err_reader.join().unwrap_or_default();
        let raw = raw_output(&stdout, &stderr);

        match status {
            None => Err(Error::Evaluation {
                message: format!("simulator timed out after {} s", self.timeout.as_secs_f64()),
                output: raw,
            }),
            Some(s) if !s.success() => Err(Error::Evaluation {
                message: format!("simulator exited with {}", s),
                output: raw,
            }),
            Some(_) => decode_responses(&String::from_utf8_lossy(&stdout), points.len(), &raw),
        }
    }
}
