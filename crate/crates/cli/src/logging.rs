//! Stderr logger, plain text or JSON lines.

use std::io::Write;

use log::{Level, LevelFilter, Log, Metadata, Record};

struct StderrLogger {
    json: bool,
    level: LevelFilter,
}

impl Log for StderrLogger {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= self.level
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let mut err = std::io::stderr().lock();
        let _ = if self.json {
            let line = serde_json::json!({
                "level": record.level().as_str().to_ascii_lowercase(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(err, "{line}")
        } else if record.level() <= Level::Warn {
            writeln!(err, "{}: {}", record.level().as_str().to_ascii_lowercase(), record.args())
        } else {
            writeln!(err, "{}", record.args())
        };
    }

    fn flush(&self) {
        let _ = std::io::stderr().flush();
    }
}

/// Installs the logger once; later calls are ignored.
pub fn init(json: bool, level: LevelFilter) {
    if log::set_boxed_logger(Box::new(StderrLogger { json, level })).is_ok() {
        log::set_max_level(level);
    }
}
