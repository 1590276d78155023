use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use tempfile::TempDir;

/// Environment variable that relocates every per-invocation work directory.
pub const TMPDIR_ENV: &str = "DIFFHARNESS_TMPDIR";

const TRUNCATION_MARKER: &[u8] = b"\n[diffharness: output truncated]\n";

/// Creates a fresh private directory, honoring [`TMPDIR_ENV`].
pub fn fresh_workdir() -> io::Result<TempDir> {
    let mut builder = tempfile::Builder::new();
    builder.prefix("diffharness-");
    match std::env::var_os(TMPDIR_ENV) {
        Some(root) if !root.is_empty() => {
            std::fs::create_dir_all(&root)?;
            builder.tempdir_in(root)
        }
        _ => builder.tempdir(),
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Captured {
    pub exit_code: Option<i32>,
    pub signal: Option<i32>,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub wall_time: f64,
    pub timed_out: bool,
}

pub(crate) struct Spawn<'a> {
    pub argv: &'a [String],
    pub cwd: &'a Path,
    pub env: &'a BTreeMap<String, String>,
    pub stdin: &'a [u8],
    pub timeout: Duration,
    pub stdout_cap: usize,
    pub stderr_cap: usize,
}

/// Runs a command in its own process group, killing the whole group once the
/// timeout elapses. Output read before the kill is kept.
pub(crate) fn run_captured(spec: Spawn<'_>) -> io::Result<Captured> {
    let (program, args) = spec
        .argv
        .split_first()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "empty argv"))?;
    let mut cmd = Command::new(program);
    cmd.args(args)
        .current_dir(spec.cwd)
        .envs(spec.env)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);

    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let pid = child.id() as libc::pid_t;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = spec.stdin.to_vec();
    let feeder = thread::spawn(move || {
        // The child may exit without reading; a broken pipe is not an error here.
        let _ = stdin.write_all(&input);
    });
    let out_reader = spawn_reader(child.stdout.take().expect("piped stdout"), spec.stdout_cap);
    let err_reader = spawn_reader(child.stderr.take().expect("piped stderr"), spec.stderr_cap);

    let mut timed_out = false;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if start.elapsed() >= spec.timeout {
            timed_out = true;
            kill_group(pid);
            break child.wait()?;
        }
        thread::sleep(poll_interval(start.elapsed()));
    };
    let wall_time = start.elapsed().as_secs_f64();
    // Stragglers in the group may still hold the pipes open.
    kill_group(pid);

    let _ = feeder.join();
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();

    Ok(Captured {
        exit_code: status.code(),
        signal: status.signal(),
        stdout,
        stderr,
        wall_time,
        timed_out,
    })
}

fn poll_interval(elapsed: Duration) -> Duration {
    if elapsed < Duration::from_millis(50) {
        Duration::from_millis(1)
    } else {
        Duration::from_millis(10)
    }
}

fn kill_group(pid: libc::pid_t) {
    // SAFETY: plain syscall; a stale group id only yields ESRCH.
    unsafe {
        libc::kill(-pid, libc::SIGKILL);
    }
}

fn spawn_reader<R: Read + Send + 'static>(mut pipe: R, cap: usize) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut truncated = false;
        let mut buf = [0u8; 8192];
        loop {
            match pipe.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => {
                    let room = cap.saturating_sub(kept.len());
                    if n > room {
                        truncated = true;
                    }
                    kept.extend_from_slice(&buf[..n.min(room)]);
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(_) => break,
            }
        }
        if truncated {
            kept.extend_from_slice(TRUNCATION_MARKER);
        }
        kept
    })
}

pub(crate) fn is_not_found(err: &io::Error) -> bool {
    matches!(err.kind(), io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied)
}

pub(crate) fn path_string(path: &Path) -> String {
    path.to_string_lossy().into_owned()
}

pub(crate) fn absolute(path: &Path) -> io::Result<PathBuf> {
    if path.is_absolute() {
        Ok(path.to_path_buf())
    } else {
        Ok(std::env::current_dir()?.join(path))
    }
}
