//! The bounds-registry text format: one `<instance-id> <bound> <sources>`
//! line per instance, `#` comments, sources comma-separated.

use std::fs;
use std::path::{Path, PathBuf};

use maxtune_core::scoring::BoundsRegistry;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegistryFileError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub fn parse_registry(text: &str, path: &Path) -> Result<BoundsRegistry, RegistryFileError> {
    let mut registry = BoundsRegistry::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_ascii_whitespace();
        let err = |message: String| RegistryFileError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let instance = parts.next().ok_or_else(|| err("missing instance id".into()))?;
        let bound: u64 = parts
            .next()
            .ok_or_else(|| err("missing bound".into()))?
            .parse()
            .map_err(|e| err(format!("bad bound: {e}")))?;
        let sources = parts.next().unwrap_or("unspecified");
        if parts.next().is_some() {
            return Err(err("trailing tokens".into()));
        }
        for source in sources.split(',').filter(|s| !s.is_empty()) {
            registry.record(instance, bound, source);
        }
    }
    Ok(registry)
}

pub fn load_registry(path: &Path) -> Result<BoundsRegistry, RegistryFileError> {
    let text = fs::read_to_string(path).map_err(|source| RegistryFileError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_registry(&text, path)
}

pub fn render_registry(registry: &BoundsRegistry) -> String {
    let mut out = String::from("# instance-id bound sources\n");
    for (instance, bound) in registry.iter() {
        let sources = registry
            .sources(instance)
            .map(|s| s.iter().cloned().collect::<Vec<_>>().join(","))
            .unwrap_or_else(|| "unspecified".into());
        out.push_str(&format!("{instance} {bound} {sources}\n"));
    }
    out
}

pub fn save_registry(registry: &BoundsRegistry, path: &Path) -> Result<(), RegistryFileError> {
    fs::write(path, render_registry(registry)).map_err(|source| RegistryFileError::Read {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rerenders() {
        let text = "# comment\ninst-a.wcnf 41 mse,vbs\ninst-b.wcnf 7 lruns\n";
        let reg = parse_registry(text, Path::new("mem")).unwrap();
        assert_eq!(reg.bound("inst-a.wcnf"), Some(41));
        assert_eq!(reg.sources("inst-a.wcnf").unwrap().len(), 2);
        let rendered = render_registry(&reg);
        let back = parse_registry(&rendered, Path::new("mem")).unwrap();
        assert_eq!(back, reg);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_registry("ok 1 a\nbroken notanumber x\n", Path::new("r.txt")).unwrap_err();
        match err {
            RegistryFileError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sources_are_optional() {
        let reg = parse_registry("inst 12\n", Path::new("mem")).unwrap();
        assert_eq!(reg.bound("inst"), Some(12));
    }
}
