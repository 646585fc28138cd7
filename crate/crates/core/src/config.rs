//! Lexer and substructure settings loaded from TOML, plus the bundled
//! per-dataset profiles.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexer::{Lexer, LexerConfig};
use crate::substructure::SubstructureConfig;

/// Directory holding a default `config.toml`, consulted when neither a
/// config file nor a profile is given.
pub const CONFIG_DIR_ENV: &str = "STRUCTDIV_CONFIG_DIR";
pub const CONFIG_FILE_NAME: &str = "config.toml";
pub const DEFAULT_PROFILE: &str = "covr";

const PROFILES: &[(&str, &str)] = &[
    ("covr", include_str!("../profiles/covr.toml")),
    ("schema2qa", include_str!("../profiles/schema2qa.toml")),
    ("overnight", include_str!("../profiles/overnight.toml")),
    ("atis", include_str!("../profiles/atis.toml")),
    ("smcalflow", include_str!("../profiles/smcalflow.toml")),
];

pub fn profile_names() -> impl Iterator<Item = &'static str> {
    PROFILES.iter().map(|(name, _)| *name)
}

pub fn profile_source(name: &str) -> Option<&'static str> {
    PROFILES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub lexer: LexerConfig,
    pub substructure: SubstructureConfig,
}

/// Where a [`Config`] came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "kebab-case")]
pub enum ConfigSource {
    File { path: PathBuf },
    Profile { name: String },
    Builtin,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn profile(name: &str) -> Result<Config> {
        let text = profile_source(name).ok_or_else(|| {
            let known: Vec<_> = profile_names().collect();
            Error::Config(format!("unknown profile {name:?} (known: {})", known.join(", ")))
        })?;
        Config::from_toml_str(text)
    }

    /// An explicit file wins over a named profile, which wins over
    /// `$STRUCTDIV_CONFIG_DIR/config.toml`; otherwise the default profile.
    pub fn resolve(file: Option<&Path>, profile: Option<&str>) -> Result<(Config, ConfigSource)> {
        if let Some(path) = file {
            return Ok((
                Config::load(path)?,
                ConfigSource::File {
                    path: path.to_path_buf(),
                },
            ));
        }
        if let Some(name) = profile {
            return Ok((
                Config::profile(name)?,
                ConfigSource::Profile { name: name.into() },
            ));
        }
        if let Some(dir) = std::env::var_os(CONFIG_DIR_ENV) {
            let path = PathBuf::from(dir).join(CONFIG_FILE_NAME);
            if path.is_file() {
                return Ok((Config::load(&path)?, ConfigSource::File { path }));
            }
        }
        Ok((
            Config::profile(DEFAULT_PROFILE)?,
            ConfigSource::Profile {
                name: DEFAULT_PROFILE.into(),
            },
        ))
    }

    pub fn validate(&self) -> Result<()> {
        self.lexer.compile()?;
        self.substructure.validate()
    }

    pub fn lexer(&self) -> Result<Lexer> {
        self.lexer.compile()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }
}
