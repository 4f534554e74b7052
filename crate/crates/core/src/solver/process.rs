//! Spawning solver processes in their own process group, with a deadline.

use std::io::Read;
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

pub(super) struct Run {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: Option<i32>,
    pub wall_time: Duration,
    pub killed: bool,
    pub pid: u32,
}

struct Slots {
    limit: Mutex<(usize, usize)>, // (in use, limit)
    freed: Condvar,
}

static SLOTS: Slots = Slots { limit: Mutex::new((0, 0)), freed: Condvar::new() };

/// Every process group we ever started, for the orphan check.
static GROUPS: Mutex<Vec<i32>> = Mutex::new(Vec::new());

/// Caps the number of solver processes running at once across threads.
/// Zero means the number of available CPUs.
pub fn set_process_limit(n: usize) {
    SLOTS.limit.lock().unwrap().1 = n;
    SLOTS.freed.notify_all();
}

struct Slot;

impl Slot {
    fn acquire() -> Slot {
        let mut g = SLOTS.limit.lock().unwrap();
        loop {
            let limit = match g.1 {
                0 => thread::available_parallelism().map(|n| n.get()).unwrap_or(4),
                n => n,
            };
            if g.0 < limit {
                g.0 += 1;
                return Slot;
            }
            g = SLOTS.freed.wait(g).unwrap();
        }
    }
}

impl Drop for Slot {
    fn drop(&mut self) {
        SLOTS.limit.lock().unwrap().0 -= 1;
        SLOTS.freed.notify_one();
    }
}

/// Number of live (non-zombie) processes left in groups started by this
/// process. Zero after every call to `run` has returned.
pub fn live_children() -> usize {
    let groups = GROUPS.lock().unwrap().clone();
    live_in_groups(&groups)
}

/// Number of live (non-zombie) processes in the given process groups.
pub fn live_in_groups(groups: &[i32]) -> usize {
    if groups.is_empty() {
        return 0;
    }
    let Ok(dir) = std::fs::read_dir("/proc") else { return 0 };
    dir.filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().bytes().all(|b| b.is_ascii_digit()))
        .filter_map(|e| std::fs::read_to_string(e.path().join("stat")).ok())
        .filter(|stat| {
            // fields after the parenthesised command name: state ppid pgrp
            let Some(rest) = stat.rfind(')').map(|i| &stat[i + 1..]) else { return false };
            let fields: Vec<&str> = rest.split_whitespace().collect();
            fields.len() > 2 && fields[0] != "Z" && fields[2].parse::<i32>().is_ok_and(|g| groups.contains(&g))
        })
        .count()
}

fn kill_group(pgid: i32) {
    // SAFETY: plain syscall on a process group we created
    unsafe {
        libc::killpg(pgid, libc::SIGKILL);
    }
}

pub(super) fn run(binary: &Path, args: &[String], deadline: Duration, memory_mib: Option<u64>) -> std::io::Result<Run> {
    let _slot = Slot::acquire();
    let mut cmd = Command::new(binary);
    cmd.args(args).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped()).process_group(0);
    if let Some(mib) = memory_mib {
        let bytes = mib.saturating_mul(1 << 20) as libc::rlim_t;
        // SAFETY: setrlimit is async-signal-safe
        unsafe {
            cmd.pre_exec(move || {
                let lim = libc::rlimit { rlim_cur: bytes, rlim_max: bytes };
                if libc::setrlimit(libc::RLIMIT_AS, &lim) != 0 {
                    return Err(std::io::Error::last_os_error());
                }
                Ok(())
            });
        }
    }
    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let pgid = child.id() as i32;
    GROUPS.lock().unwrap().push(pgid);

    let mut out = child.stdout.take().expect("piped stdout");
    let mut err = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = out.read_to_end(&mut buf);
        buf
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = err.read_to_end(&mut buf);
        buf
    });

    let mut killed = false;
    let mut pause = Duration::from_millis(1);
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        let elapsed = start.elapsed();
        if elapsed >= deadline {
            kill_group(pgid);
            killed = true;
            break child.wait()?;
        }
        thread::sleep(pause.min(deadline - elapsed));
        pause = (pause * 2).min(Duration::from_millis(20));
    };
    let wall_time = start.elapsed();
    // stragglers the solver left behind would otherwise keep the pipes open
    kill_group(pgid);
    let stdout = String::from_utf8_lossy(&out_reader.join().unwrap_or_default()).into_owned();
    let stderr = String::from_utf8_lossy(&err_reader.join().unwrap_or_default()).into_owned();
    Ok(Run { stdout, stderr, exit_code: status.code(), wall_time, killed, pid: pgid as u32 })
}
