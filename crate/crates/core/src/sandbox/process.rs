use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use super::assemble::ASSERTION_SENTINEL;
use super::{ExecutionLimits, Verdict};

/// Bytes of stderr kept in the result.
const STDERR_EXCERPT_BYTES: u64 = 2048;
/// Bytes of stderr scanned for the assertion sentinel.
const STDERR_SCAN_BYTES: u64 = 64 * 1024;
const SOURCE_FILE: &str = "main.py";
const FALLBACK_PATH: &str = "/usr/local/bin:/usr/bin:/bin";

/// Classified outcome of one execution.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub duration: Duration,
    pub stderr_excerpt: String,
}

impl Outcome {
    fn setup_failure(message: String, duration: Duration) -> Self {
        Outcome {
            verdict: Verdict::FailSetup,
            duration,
            stderr_excerpt: message,
        }
    }
}

/// Runs `source` once under `limits` and classifies the result.
pub fn execute_one(source: &str, limits: &ExecutionLimits) -> Outcome {
    let never = AtomicBool::new(false);
    execute_cancellable(source, limits, &never).expect("not cancelled")
}

/// Like [`execute_one`], but kills the process and returns `None` as soon as
/// `cancel` is set.
pub fn execute_cancellable(source: &str, limits: &ExecutionLimits, cancel: &AtomicBool) -> Option<Outcome> {
    let start = Instant::now();
    if let Err(e) = limits.validate() {
        return Some(Outcome::setup_failure(e.to_string(), start.elapsed()));
    }
    let workdir = match tempfile::Builder::new().prefix("budgeval-").tempdir() {
        Ok(dir) => dir,
        Err(e) => return Some(Outcome::setup_failure(format!("temp dir: {e}"), start.elapsed())),
    };
    let source_path = workdir.path().join(SOURCE_FILE);
    let stderr_path = workdir.path().join("stderr.txt");
    let stderr_file = match std::fs::write(&source_path, source).and_then(|_| File::create(&stderr_path)) {
        Ok(f) => f,
        Err(e) => return Some(Outcome::setup_failure(format!("write source: {e}"), start.elapsed())),
    };

    let mut command = build_command(limits, workdir.path(), &source_path);
    command.stderr(stderr_file);
    let start = Instant::now();
    let mut child = match command.spawn() {
        Ok(child) => child,
        Err(e) => {
            return Some(Outcome::setup_failure(
                format!("cannot start `{}`: {e}", limits.interpreter_command[0]),
                start.elapsed(),
            ))
        }
    };

    let mut poll = Duration::from_millis(1);
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) => {}
            Err(e) => {
                kill_group(&mut child);
                return Some(Outcome::setup_failure(format!("wait: {e}"), start.elapsed()));
            }
        }
        if cancel.load(Ordering::Relaxed) {
            kill_group(&mut child);
            return None;
        }
        if start.elapsed() >= limits.timeout {
            kill_group(&mut child);
            break None;
        }
        std::thread::sleep(poll.min(limits.timeout.saturating_sub(start.elapsed())));
        poll = (poll * 2).min(Duration::from_millis(10));
    };
    let duration = start.elapsed();
    // Reap anything the program left running in its group.
    signal_group(child.id());

    let stderr_tail = read_tail(&stderr_path, STDERR_SCAN_BYTES);
    let verdict = match status {
        None => Verdict::FailTimeout,
        Some(s) if s.success() => Verdict::Pass,
        Some(_) if stderr_tail.contains(ASSERTION_SENTINEL) => Verdict::FailAssertion,
        Some(_) => Verdict::FailRuntime,
    };
    Some(Outcome {
        verdict,
        duration,
        stderr_excerpt: excerpt(&stderr_tail),
    })
}

fn build_command(limits: &ExecutionLimits, workdir: &Path, source: &Path) -> Command {
    let mut command = Command::new(&limits.interpreter_command[0]);
    command
        .args(&limits.interpreter_command[1..])
        .arg(source)
        .current_dir(workdir)
        .env_clear()
        .env("PATH", std::env::var_os("PATH").unwrap_or_else(|| FALLBACK_PATH.into()))
        .env("HOME", workdir)
        .env("TMPDIR", workdir)
        .env("LANG", "C.UTF-8")
        .env("PYTHONDONTWRITEBYTECODE", "1")
        .env("PYTHONIOENCODING", "utf-8")
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .process_group(0);
    let memory_cap = limits.memory_cap;
    // SAFETY: only async-signal-safe libc calls run between fork and exec.
    unsafe {
        command.pre_exec(move || {
            let no_core = libc::rlimit {
                rlim_cur: 0,
                rlim_max: 0,
            };
            libc::setrlimit(libc::RLIMIT_CORE, &no_core);
            if let Some(cap) = memory_cap {
                let lim = libc::rlimit {
                    rlim_cur: cap as libc::rlim_t,
                    rlim_max: cap as libc::rlim_t,
                };
                if libc::setrlimit(libc::RLIMIT_AS, &lim) != 0 {
                    return Err(std::io::Error::last_os_error());
                }
            }
            Ok(())
        });
    }
    command
}

fn signal_group(pid: u32) {
    // The child leads its own process group, so its pid is the group id.
    unsafe {
        libc::kill(-(pid as libc::pid_t), libc::SIGKILL);
    }
}

fn kill_group(child: &mut Child) {
    signal_group(child.id());
    let _ = child.kill();
    let _ = child.wait();
}

fn read_tail(path: &Path, max: u64) -> String {
    let Ok(mut file) = File::open(path) else {
        return String::new();
    };
    let len = file.metadata().map(|m| m.len()).unwrap_or(0);
    if len > max {
        let _ = file.seek(SeekFrom::Start(len - max));
    }
    let mut buf = Vec::new();
    let _ = file.take(max).read_to_end(&mut buf);
    String::from_utf8_lossy(&buf).into_owned()
}

fn excerpt(stderr: &str) -> String {
    let keep = STDERR_EXCERPT_BYTES as usize;
    if stderr.len() <= keep {
        return stderr.to_string();
    }
    let mut cut = stderr.len() - keep;
    while !stderr.is_char_boundary(cut) {
        cut += 1;
    }
    format!("...{}", &stderr[cut..])
}
