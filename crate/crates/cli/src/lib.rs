//! Configuration parsing and scenario execution behind the `twistlab` binary.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod run;

pub use config::{ConfigIssue, Plan, RawConfig, RunConfig, Scenario};
pub use error::CliError;
pub use run::{run, Outcome};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "TWISTLAB_THREADS";

/// Splits `--key value` / `--key=value` overrides into pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, Vec<ConfigIssue>> {
    let mut pairs = Vec::new();
    let mut issues = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            issues.push(ConfigIssue::new(a.clone(), "expected a `--key value` pair"));
            continue;
        };
        if let Some((k, v)) = flag.split_once('=') {
            pairs.push((k.to_string(), v.to_string()));
        } else if let Some(v) = it.next() {
            pairs.push((flag.to_string(), v.clone()));
        } else {
            issues.push(ConfigIssue::new(flag, "flag is missing its value"));
        }
    }
    if issues.is_empty() {
        Ok(pairs)
    } else {
        Err(issues)
    }
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>, ConfigIssue> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= 1)
            .map(Some)
            .ok_or_else(|| ConfigIssue::new(THREADS_ENV, format!("got '{v}', expected a positive integer"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn override_forms() {
        let p = parse_overrides(&s(&["--ell", "3", "--w=1e-4"])).unwrap();
        assert_eq!(p, [("ell".to_string(), "3".to_string()), ("w".to_string(), "1e-4".to_string())]);
        assert!(parse_overrides(&s(&["ell", "3"])).is_err());
        assert!(parse_overrides(&s(&["--ell"])).is_err());
    }
}
