//! Declarative grammar configuration.
//!
//! A [`GrammarConfig`] names the node kinds that matter for one language:
//! which kinds are functions, blocks, statements, strippable tail clauses,
//! and comments, plus where that language keeps its doc comment. Configs
//! ship as TOML; the parser itself stays generic.

use crate::ExtractError;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Where a language puts function-level documentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocstringStyle {
    /// A string expression as the first statement of the body (Python).
    BodyFirstString,
    /// A comment immediately preceding the function (JSDoc-style).
    LeadingComment,
}

/// Node-kind allow-lists for one language.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrammarConfig {
    pub language: String,
    pub file_extensions: Vec<String>,
    pub docstring: DocstringStyle,
    pub function_kinds: Vec<String>,
    pub block_kinds: Vec<String>,
    pub statement_kinds: Vec<String>,
    /// Block children that may be stripped from the end of the block span
    /// to form shorter candidates (else/elif/except/finally and kin).
    pub tail_kinds: Vec<String>,
    pub comment_kinds: Vec<String>,
}

impl GrammarConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<GrammarConfig, ExtractError> {
        let cfg: GrammarConfig = toml::from_str(text).map_err(|e| ExtractError::GrammarConfig {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        if cfg.language.is_empty() || cfg.function_kinds.is_empty() {
            return Err(ExtractError::GrammarConfig {
                path: origin.to_string(),
                message: "language and function_kinds are required".into(),
            });
        }
        Ok(cfg)
    }

    pub fn is_function_kind(&self, kind: &str) -> bool {
        self.function_kinds.iter().any(|k| k == kind)
    }

    pub fn is_block_kind(&self, kind: &str) -> bool {
        self.block_kinds.iter().any(|k| k == kind)
    }

    pub fn is_statement_kind(&self, kind: &str) -> bool {
        self.statement_kinds.iter().any(|k| k == kind)
    }

    pub fn is_tail_kind(&self, kind: &str) -> bool {
        self.tail_kinds.iter().any(|k| k == kind)
    }

    pub fn is_comment_kind(&self, kind: &str) -> bool {
        self.comment_kinds.iter().any(|k| k == kind)
    }

    /// The compiled parser for this config's language.
    ///
    /// Grammars are compiled in; a config can reshape the allow-lists for a
    /// shipped language but cannot introduce a new parser at runtime.
    pub fn ts_language(&self) -> Result<tree_sitter::Language, ExtractError> {
        match self.language.as_str() {
            "python" => Ok(tree_sitter_python::LANGUAGE.into()),
            "javascript" => Ok(tree_sitter_javascript::LANGUAGE.into()),
            other => Err(ExtractError::UnsupportedLanguage(other.to_string())),
        }
    }
}

/// All known grammar configs, keyed by language tag.
#[derive(Debug, Clone)]
pub struct GrammarRegistry {
    configs: BTreeMap<String, GrammarConfig>,
}

impl GrammarRegistry {
    /// The built-in configs shipped with the crate.
    pub fn builtin() -> GrammarRegistry {
        let mut configs = BTreeMap::new();
        for (name, text) in [
            ("python", include_str!("../grammars/python.toml")),
            ("javascript", include_str!("../grammars/javascript.toml")),
        ] {
            let cfg = GrammarConfig::from_toml(text, name).expect("embedded grammar config");
            configs.insert(cfg.language.clone(), cfg);
        }
        GrammarRegistry { configs }
    }

    /// Loads every `*.toml` in a directory, overriding or extending the
    /// built-ins. Returns how many configs were loaded.
    pub fn load_dir(&mut self, dir: &Path) -> Result<usize, ExtractError> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| ExtractError::Io { path: dir.display().to_string(), source: e })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "toml"))
            .collect();
        entries.sort();
        let mut loaded = 0;
        for path in entries {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ExtractError::Io { path: path.display().to_string(), source: e })?;
            let cfg = GrammarConfig::from_toml(&text, &path.display().to_string())?;
            cfg.ts_language()?; // reject configs for languages we cannot parse
            self.configs.insert(cfg.language.clone(), cfg);
            loaded += 1;
        }
        Ok(loaded)
    }

    pub fn get(&self, language: &str) -> Result<&GrammarConfig, ExtractError> {
        self.configs
            .get(language)
            .ok_or_else(|| ExtractError::UnsupportedLanguage(language.to_string()))
    }

    /// Language tag whose config claims this file extension.
    pub fn language_for_extension(&self, ext: &str) -> Option<&str> {
        self.configs
            .values()
            .find(|c| c.file_extensions.iter().any(|e| e == ext))
            .map(|c| c.language.as_str())
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.configs.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_configs_parse_and_compile() {
        let reg = GrammarRegistry::builtin();
        let langs: Vec<&str> = reg.languages().collect();
        assert_eq!(langs, ["javascript", "python"]);
        for lang in langs {
            let cfg = reg.get(lang).unwrap();
            assert!(cfg.ts_language().is_ok());
            assert!(!cfg.block_kinds.is_empty());
            assert!(!cfg.statement_kinds.is_empty());
        }
    }

    #[test]
    fn extension_lookup() {
        let reg = GrammarRegistry::builtin();
        assert_eq!(reg.language_for_extension("py"), Some("python"));
        assert_eq!(reg.language_for_extension("js"), Some("javascript"));
        assert_eq!(reg.language_for_extension("rs"), None);
    }

    #[test]
    fn unknown_language_is_an_error() {
        let reg = GrammarRegistry::builtin();
        assert!(matches!(
            reg.get("cobol"),
            Err(ExtractError::UnsupportedLanguage(_))
        ));
    }

    #[test]
    fn config_rejects_unknown_fields_and_missing_language() {
        let bad = "language = \"python\"\nwhatever = 3";
        assert!(GrammarConfig::from_toml(bad, "test").is_err());
    }

    #[test]
    fn load_dir_overrides_builtin() {
        let dir = tempfile::tempdir().unwrap();
        let custom = r#"
language = "python"
file_extensions = ["py"]
docstring = "body_first_string"
function_kinds = ["function_definition"]
block_kinds = ["if_statement"]
statement_kinds = ["return_statement"]
tail_kinds = []
comment_kinds = ["comment"]
"#;
        std::fs::write(dir.path().join("py.toml"), custom).unwrap();
        let mut reg = GrammarRegistry::builtin();
        assert_eq!(reg.load_dir(dir.path()).unwrap(), 1);
        let cfg = reg.get("python").unwrap();
        assert_eq!(cfg.block_kinds, ["if_statement"]);
    }
}
