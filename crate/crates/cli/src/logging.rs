//! Human-readable logs on stderr and, optionally, JSON lines in a file.

use std::io::IsTerminal;
use std::path::Path;
use std::sync::Mutex;

use anyhow::{Context, Result};
use tracing_subscriber::layer::SubscriberExt;
use tracing_subscriber::util::SubscriberInitExt;
use tracing_subscriber::{fmt, EnvFilter, Layer};

/// `filter` uses `RUST_LOG` syntax; `RUST_LOG` itself wins when set.
pub fn init(filter: &str, json_path: Option<&Path>) -> Result<()> {
    let console_filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(filter));
    let console = fmt::layer()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_target(false).with_filter(console_filter);
    let json = match json_path {
        Some(p) => {
            let file = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Some(fmt::layer().json().with_writer(Mutex::new(file)).with_filter(EnvFilter::new("debug")))
        }
        None => None,
    };
    tracing_subscriber::registry()
        .with(console)
        .with(json)
        .try_init()
        .context("installing the log subscriber")?;
    Ok(())
}
