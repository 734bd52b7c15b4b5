use std::io::Write;

use log::LevelFilter;

use crate::LogFormat;

/// Human-readable or JSON-lines logging on stderr. `RUST_LOG` overrides
/// the default `info` level.
pub fn init(format: LogFormat) {
    let mut b = env_logger::Builder::new();
    b.filter_level(LevelFilter::Info).parse_default_env();
    if format == LogFormat::Json {
        b.format(|buf, rec| {
            let line = serde_json::json!({
                "level": rec.level().as_str().to_lowercase(),
                "target": rec.target(),
                "message": rec.args().to_string(),
            });
            writeln!(buf, "{line}")
        });
    }
    let _ = b.try_init();
}

/// One machine-readable error line on stderr, then the human form.
pub fn report_error(e: &anyhow::Error) {
    let chain: Vec<String> = e.chain().map(ToString::to_string).collect();
    let line = serde_json::json!({
        "level": "error",
        "event": "failure",
        "message": e.to_string(),
        "causes": &chain[1..],
    });
    eprintln!("{line}");
    // Causes already quoted by the message above them are not repeated.
    let mut human = chain[0].clone();
    for c in &chain[1..] {
        if !human.contains(c.as_str()) {
            human.push_str(": ");
            human.push_str(c);
        }
    }
    eprintln!("error: {human}");
}
