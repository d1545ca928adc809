//! Text normalization: lowercase, strip special characters, tokenize, drop
//! stopwords, lemmatize.
//!
//! The output of [`normalize`] feeds both scorers: the token set goes to
//! Jaccard and the rejoined lemmas go to the embedding provider.

pub mod porter;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::ingest::{compose_text, ComposePolicy, ComposedText, FeatureRecord};

/// Default stopword list. Stopword choice changes Jaccard values directly;
/// `always` is included so that short descriptive phrases like
/// "AI and human has always been our friends" reduce to content words.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "the", "is", "are", "as", "was", "were", "be", "been", "being", "it", "its", "of", "to", "in", "on",
    "for", "and", "or", "has", "have", "had", "our", "your", "their", "this", "that", "with", "by", "from", "at",
    "always",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemmatizer {
    #[default]
    Porter,
    None,
}

impl FromStr for Lemmatizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "porter" => Ok(Self::Porter),
            "none" => Ok(Self::None),
            other => Err(format!("unknown lemmatizer '{other}' (expected porter or none)")),
        }
    }
}

fn lowercase_set<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeSet<String>, D::Error> {
    let raw = Vec::<String>::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|s| s.trim().to_lowercase())
        .filter(|s| !s.is_empty())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    #[serde(deserialize_with = "lowercase_set")]
    pub stopwords: BTreeSet<String>,
    pub lemmatizer: Lemmatizer,
    pub keep_digits: bool,
    /// Consulted before the stemmer; maps a token to its lemma verbatim.
    pub lemma_exceptions: BTreeMap<String, String>,
    /// Embed the composed text as-is instead of the normalized lemmas.
    pub embed_raw: bool,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            lemmatizer: Lemmatizer::Porter,
            keep_digits: true,
            lemma_exceptions: BTreeMap::new(),
            embed_raw: false,
        }
    }
}

impl NormConfig {
    /// No stopwords, no lemmatization: a plain lowercase/strip/split pipeline.
    pub fn plain() -> Self {
        Self {
            stopwords: BTreeSet::new(),
            lemmatizer: Lemmatizer::None,
            ..Self::default()
        }
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        self
    }
}

/// Read a newline-delimited stopword file. Blank lines and `#` comments are skipped.
pub fn load_stopwords(path: &Path) -> io::Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}

/// A deduplicated set of normalized tokens, each matching `[a-z0-9]+`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSet(BTreeSet<String>);

impl TokenSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    /// Tokens in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.iter().map(String::as_str)
    }

    pub fn insert(&mut self, token: impl Into<String>) -> bool {
        self.0.insert(token.into())
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for TokenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, t) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            f.write_str(t)?;
        }
        write!(f, "}}")
    }
}

/// A feature after normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedFeature {
    pub composed: ComposedText,
    pub token_set: TokenSet,
    /// Lemmas in original order, duplicates kept, joined by single spaces.
    pub embedding_text: String,
}

impl NormalizedFeature {
    pub fn record(&self) -> &Arc<FeatureRecord> {
        &self.composed.record
    }

    pub fn name(&self) -> &str {
        &self.composed.record.name
    }
}

/// Lowercase, transliterate accented letters, and turn every run of
/// characters outside `[a-z0-9]` into a single space.
pub fn sanitize(text: &str) -> String {
    sanitize_with(text, true)
}

/// As [`sanitize`]; with `keep_digits = false` digits count as special characters.
pub fn sanitize_with(text: &str, keep_digits: bool) -> String {
    let mut out = String::with_capacity(text.len());
    let mut gap = false;
    for c in text.nfkd().flat_map(char::to_lowercase) {
        if is_combining_mark(c) {
            continue;
        }
        if c.is_ascii_lowercase() || (keep_digits && c.is_ascii_digit()) {
            if gap && !out.is_empty() {
                out.push(' ');
            }
            gap = false;
            out.push(c);
        } else {
            gap = true;
        }
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

pub fn remove_stopwords(tokens: Vec<String>, config: &NormConfig) -> Vec<String> {
    tokens.into_iter().filter(|t| !config.stopwords.contains(t)).collect()
}

/// Porter, reapplied until the stem stops changing, so that a lemma is its
/// own lemma ("release" -> "releas" -> "relea"). A lone "s" would stem to
/// nothing and is kept as is.
fn stem_to_fixpoint(token: &str) -> String {
    let mut current = token.to_string();
    loop {
        let next = porter::stem(&current);
        if next.is_empty() || next == current {
            return current;
        }
        current = next;
    }
}

pub fn lemmatize(token: &str, config: &NormConfig) -> String {
    if let Some(lemma) = config.lemma_exceptions.get(token) {
        return lemma.clone();
    }
    match config.lemmatizer {
        Lemmatizer::None => token.to_string(),
        Lemmatizer::Porter => stem_to_fixpoint(token),
    }
}

pub fn normalize(composed: &ComposedText, config: &NormConfig) -> NormalizedFeature {
    let sanitized = sanitize_with(&composed.text, config.keep_digits);
    let lemmas: Vec<String> = remove_stopwords(tokenize(&sanitized), config)
        .iter()
        .map(|t| lemmatize(t, config))
        // A stem can collide with a stopword ("ase" -> "as").
        .filter(|l| !l.is_empty() && !config.stopwords.contains(l))
        .collect();
    let token_set = lemmas.iter().cloned().collect();
    let embedding_text = if config.embed_raw {
        composed.text.clone()
    } else {
        lemmas.join(" ")
    };
    NormalizedFeature {
        composed: composed.clone(),
        token_set,
        embedding_text,
    }
}

/// Compose and normalize a whole feature list, keeping its order.
pub fn normalize_records(
    records: &[FeatureRecord],
    policy: ComposePolicy,
    config: &NormConfig,
) -> Vec<NormalizedFeature> {
    records
        .iter()
        .map(|r| normalize(&compose_text(&Arc::new(r.clone()), policy), config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn composed(text: &str) -> ComposedText {
        ComposedText {
            record: Arc::new(FeatureRecord::new("d", text)),
            text: text.to_string(),
        }
    }

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn sanitize_examples() {
        assert_eq!(sanitize("Series_Title & Rating%"), "series title rating");
        assert_eq!(sanitize("price"), "price");
        assert_eq!(sanitize("$$$"), "");
        assert_eq!(sanitize("  sqft_living15 "), "sqft living15");
    }

    #[test]
    fn sanitize_transliterates() {
        assert_eq!(sanitize("Café Crème"), "cafe creme");
        assert_eq!(sanitize("ÉCOLE"), "ecole");
        assert_eq!(sanitize("straße"), "stra e");
        assert_eq!(sanitize("数据 price"), "price");
    }

    #[test]
    fn sanitize_without_digits() {
        assert_eq!(sanitize_with("sqft_living15", false), "sqft living");
        assert_eq!(sanitize_with("Star1", false), "star");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("released year"), strings(&["released", "year"]));
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize(&sanitize("AI is our friend, and it has been our friend")),
            strings(&["ai", "is", "our", "friend", "and", "it", "has", "been", "our", "friend"])
        );
    }

    #[test]
    fn stopword_examples() {
        let cfg = NormConfig::default();
        assert_eq!(remove_stopwords(strings(&["is", "price"]), &cfg), strings(&["price"]));
        assert_eq!(
            remove_stopwords(
                strings(&["ai", "is", "our", "friend", "and", "it", "has", "been", "our", "friend"]),
                &cfg
            ),
            strings(&["ai", "friend", "friend"])
        );
        assert!(remove_stopwords(Vec::new(), &cfg).is_empty());
    }

    #[test]
    fn default_stopwords_contain_named_examples() {
        let cfg = NormConfig::default();
        for w in ["is", "a", "are", "as"] {
            assert!(cfg.stopwords.contains(w));
        }
        assert_eq!(cfg.stopwords.len(), DEFAULT_STOPWORDS.len());
    }

    #[test]
    fn lemmatize_examples() {
        let cfg = NormConfig::default();
        assert_eq!(lemmatize("pointing", &cfg), "point");
        assert_eq!(lemmatize("swimming", &cfg), "swim");
        assert_eq!(lemmatize("friends", &cfg), "friend");
        assert_eq!(lemmatize("price", &cfg), "price");
        assert_eq!(lemmatize("released", &cfg), lemmatize("release", &cfg));
        assert_eq!(lemmatize("release", &cfg), "relea");
        assert_eq!(lemmatize("agreed", &cfg), "agr");
        assert_eq!(lemmatize("s", &cfg), "s");
        assert_eq!(lemmatize("s", &cfg), "s");
    }

    #[test]
    fn lemma_exceptions_take_precedence() {
        let mut cfg = NormConfig::default();
        cfg.lemma_exceptions.insert("data".into(), "datum".into());
        assert_eq!(lemmatize("data", &cfg), "datum");
        cfg.lemmatizer = Lemmatizer::None;
        assert_eq!(lemmatize("pointing", &cfg), "pointing");
        assert_eq!(lemmatize("data", &cfg), "datum");
    }

    #[test]
    fn normalize_examples() {
        let cfg = NormConfig::default();
        let n = normalize(&composed("AI is our friend, and it has been our friend"), &cfg);
        assert_eq!(n.token_set, ["ai", "friend"].into_iter().collect());
        assert_eq!(n.embedding_text, "ai friend friend");

        let expected: TokenSet = ["relea", "year"].into_iter().collect();
        assert_eq!(normalize(&composed("Released Year"), &cfg).token_set, expected);
        assert_eq!(normalize(&composed("Release year"), &cfg).token_set, expected);
    }

    #[test]
    fn fully_stopworded_text_is_empty() {
        let n = normalize(&composed("it is"), &NormConfig::default());
        assert!(n.token_set.is_empty());
        assert_eq!(n.embedding_text, "");
    }

    #[test]
    fn stem_colliding_with_stopword_is_dropped() {
        let n = normalize(&composed("ase price"), &NormConfig::default());
        assert_eq!(n.token_set, ["price"].into_iter().collect());
    }

    #[test]
    fn embed_raw_keeps_composed_text() {
        let cfg = NormConfig {
            embed_raw: true,
            ..NormConfig::default()
        };
        let n = normalize(&composed("Released Year"), &cfg);
        assert_eq!(n.embedding_text, "Released Year");
        assert_eq!(n.token_set, ["relea", "year"].into_iter().collect());
    }

    #[test]
    fn stopword_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stop.txt");
        std::fs::write(&path, "# custom\nThe\n\n  price \n").unwrap();
        let words = load_stopwords(&path).unwrap();
        assert_eq!(words, ["price", "the"].into_iter().map(String::from).collect());
    }

    #[test]
    fn config_deserialization_lowercases_stopwords() {
        let cfg: NormConfig = toml::from_str("stopwords = [\"The\", \"IS\"]\nlemmatizer = \"none\"").unwrap();
        assert!(cfg.stopwords.contains("the") && cfg.stopwords.contains("is"));
        assert_eq!(cfg.lemmatizer, Lemmatizer::None);
        assert!(cfg.keep_digits);
    }

    /// Independent reference for the plain pipeline.
    fn plain_oracle(text: &str) -> (BTreeSet<String>, String) {
        let mut cleaned = String::new();
        for ch in text.chars() {
            let lower: String = ch.to_lowercase().collect();
            if lower.len() == 1 && lower.as_bytes()[0].is_ascii_alphanumeric() {
                cleaned.push_str(&lower);
            } else {
                cleaned.push(' ');
            }
        }
        let words: Vec<&str> = cleaned.split(' ').filter(|w| !w.is_empty()).collect();
        (words.iter().map(|w| w.to_string()).collect(), words.join(" "))
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn lemmatize_is_idempotent(t in "[a-z0-9]{1,16}") {
                let cfg = NormConfig::default();
                let once = lemmatize(&t, &cfg);
                prop_assert_eq!(lemmatize(&once, &cfg), once);
            }

            #[test]
            fn sanitize_is_idempotent(s in "\\PC{0,40}") {
                let once = sanitize(&s);
                prop_assert_eq!(sanitize(&once), once);
            }

            #[test]
            fn tokens_satisfy_charset(s in "\\PC{0,60}") {
                let n = normalize(&composed(&s), &NormConfig::default());
                for t in n.token_set.iter() {
                    prop_assert!(!t.is_empty());
                    prop_assert!(t.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()), "{}", t);
                    prop_assert!(!NormConfig::default().stopwords.contains(t));
                }
            }

            #[test]
            fn token_set_matches_embedding_text(s in "[ a-zA-Z0-9_&%$.,]{0,60}") {
                let n = normalize(&composed(&s), &NormConfig::default());
                let from_text: TokenSet = n.embedding_text.split_whitespace().collect();
                prop_assert_eq!(from_text, n.token_set.clone());
                prop_assert_eq!(normalize(&composed(&s), &NormConfig::default()), n);
            }

            #[test]
            fn plain_pipeline_matches_oracle(s in "[ a-zA-Z0-9_&%$.,;:'\"()-]{0,60}") {
                let n = normalize(&composed(&s), &NormConfig::plain());
                let (set, text) = plain_oracle(&s);
                prop_assert_eq!(n.token_set, set.into_iter().collect::<TokenSet>());
                prop_assert_eq!(n.embedding_text, text);
            }
        }
    }
}
