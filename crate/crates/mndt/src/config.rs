//! Flat `key = value` run configuration with `#` comments.

use std::collections::BTreeMap;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown configuration key `{key}` (line {line})")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: cannot parse `{value}` for `{key}`")]
    BadValue { key: String, value: String, line: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let key = k.trim().replace('-', "_");
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: "empty key".into(),
                });
            }
            if entries.insert(key.clone(), (v.trim().to_string(), line)).is_some() {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(ConfigFile { entries })
    }

    /// Rejects keys outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), ConfigError> {
        match self.entries.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            Some((k, (_, line))) => Err(ConfigError::UnknownKey {
                key: k.clone(),
                line: *line,
            }),
            None => Ok(()),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| ConfigError::BadValue {
                key: key.into(),
                value: v.clone(),
                line: *line,
            }),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let c = ConfigFile::parse("# run\nseed = 7\nmethod=ours  # inline\n\nlambda = 2.5\n").unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(c.raw("method"), Some("ours"));
        assert_eq!(c.get::<f64>("lambda").unwrap(), Some(2.5));
        assert_eq!(c.get::<f64>("missing").unwrap(), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(ConfigFile::parse("seed 7"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(ConfigFile::parse("a=1\na=2"), Err(ConfigError::Syntax { line: 2, .. })));
        let c = ConfigFile::parse("seed = x").unwrap();
        assert!(matches!(c.get::<u64>("seed"), Err(ConfigError::BadValue { .. })));
        let c = ConfigFile::parse("sede = 1").unwrap();
        assert!(c.check_keys(&["seed"]).is_err());
    }

    #[test]
    fn dashes_normalize() {
        let c = ConfigFile::parse("training-episodes = 3").unwrap();
        assert_eq!(c.get::<u32>("training_episodes").unwrap(), Some(3));
    }
}
