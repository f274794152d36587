//! Plain-text requirements corpora: one requirement per line.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tokenizer::{normalize, DEFAULT_FILTERS};

pub const DEFAULT_MAX_TOKENS: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RequirementsCorpus {
    pub entries: Vec<String>,
    pub source_path: String,
}

impl RequirementsCorpus {
    /// Trims each entry and drops blank ones.
    pub fn from_entries<S: AsRef<str>>(entries: &[S], source: &str) -> Self {
        RequirementsCorpus {
            entries: entries
                .iter()
                .map(|e| e.as_ref().trim())
                .filter(|e| !e.is_empty())
                .map(str::to_string)
                .collect(),
            source_path: source.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One entry per line, LF terminated, written atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.entries.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        crate::io::write_atomic(path, text.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub entry_count: usize,
    pub mean_token_length: f64,
    pub distinct_word_count: usize,
    pub max_token_length: usize,
}

impl std::fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "entries={} mean_length={:.2} max_length={} distinct_words={}",
            self.entry_count,
            self.mean_token_length,
            self.max_token_length,
            self.distinct_word_count
        )
    }
}

pub fn load_corpus(path: &Path) -> Result<RequirementsCorpus> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Encoding {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    // `lines` already strips a trailing '\r'.
    let lines: Vec<&str> = text.lines().collect();
    Ok(RequirementsCorpus::from_entries(
        &lines,
        &path.display().to_string(),
    ))
}

/// Splits at a period followed by whitespace and an uppercase letter.
pub fn split_sentences(entry: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = entry.char_indices().collect();
    let mut k = 0;
    while k < chars.len() {
        if chars[k].1 == '.' {
            let mut j = k + 1;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            if j > k + 1 && j < chars.len() && chars[j].1.is_uppercase() {
                let end = chars[k].0 + 1;
                out.push(entry[start..end].trim());
                start = chars[j].0;
                k = j;
                continue;
            }
        }
        k += 1;
    }
    out.push(entry[start..].trim());
    out.retain(|s| !s.is_empty());
    out
}

/// Key under which two entries count as duplicates.
pub fn dedup_key(entry: &str) -> String {
    normalize(entry, DEFAULT_FILTERS)
}

/// Splits multi-sentence entries, drops entries over `max_tokens`
/// whitespace tokens, then removes duplicates keeping the first occurrence.
pub fn clean_corpus(corpus: &RequirementsCorpus, max_tokens: usize) -> RequirementsCorpus {
    let mut seen = HashSet::new();
    let entries = corpus
        .entries
        .iter()
        .flat_map(|e| split_sentences(e))
        .filter(|s| s.split_whitespace().count() <= max_tokens)
        .filter(|s| seen.insert(dedup_key(s)))
        .map(str::to_string)
        .collect();
    RequirementsCorpus {
        entries,
        source_path: corpus.source_path.clone(),
    }
}

pub fn corpus_stats(corpus: &RequirementsCorpus) -> CorpusStats {
    if corpus.is_empty() {
        return CorpusStats {
            entry_count: 0,
            mean_token_length: 0.0,
            distinct_word_count: 0,
            max_token_length: 0,
        };
    }
    let lengths: Vec<usize> = corpus
        .entries
        .iter()
        .map(|e| e.split_whitespace().count())
        .collect();
    let mut distinct = HashSet::new();
    for e in &corpus.entries {
        for w in dedup_key(e).split(' ').filter(|w| !w.is_empty()) {
            distinct.insert(w.to_string());
        }
    }
    CorpusStats {
        entry_count: corpus.len(),
        mean_token_length: lengths.iter().sum::<usize>() as f64 / lengths.len() as f64,
        distinct_word_count: distinct.len(),
        max_token_length: lengths.into_iter().max().unwrap_or(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn corpus(entries: &[&str]) -> RequirementsCorpus {
        RequirementsCorpus::from_entries(entries, "test")
    }

    #[test]
    fn load_trims_and_drops_blanks() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "  The system shall X  \r\n\r\nSecond\nThird\n").unwrap();
        let c = load_corpus(f.path()).unwrap();
        assert_eq!(c.entries, vec!["The system shall X", "Second", "Third"]);

        let mut g = tempfile::NamedTempFile::new().unwrap();
        write!(g, "one\n\n").unwrap();
        assert_eq!(load_corpus(g.path()).unwrap().len(), 1);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            load_corpus(Path::new("/nonexistent/corpus.txt")),
            Err(Error::Io { .. })
        ));
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"ok line\nbad \xff byte\n").unwrap();
        match load_corpus(f.path()) {
            Err(Error::Encoding { offset, .. }) => assert_eq!(offset, 12),
            other => panic!("expected encoding error, got {other:?}"),
        }
    }

    #[test]
    fn dedup_under_normalization() {
        let c = clean_corpus(
            &corpus(&["The system shall log in.", "the system shall log in"]),
            60,
        );
        assert_eq!(c.entries, vec!["The system shall log in."]);
    }

    #[test]
    fn splits_at_sentence_boundary() {
        let c = clean_corpus(&corpus(&["The system shall X. The system shall Y."]), 60);
        assert_eq!(
            c.entries,
            vec!["The system shall X.", "The system shall Y."]
        );
    }

    #[test]
    fn keeps_abbreviations_and_decimals() {
        assert_eq!(
            split_sentences("Use v. 2.5 e.g. here. then more"),
            vec!["Use v. 2.5 e.g. here. then more"]
        );
        assert_eq!(split_sentences("A.B"), vec!["A.B"]);
    }

    #[test]
    fn drops_long_entries() {
        let long = vec!["word"; 80].join(" ");
        let c = clean_corpus(&corpus(&[&long, "short one"]), 60);
        assert_eq!(c.entries, vec!["short one"]);
    }

    #[test]
    fn stats_examples() {
        let twenty = vec!["w"; 20].join(" ");
        let twenty_two = vec!["w"; 22].join(" ");
        let s = corpus_stats(&corpus(&[&twenty, &twenty_two]));
        assert_eq!(s.mean_token_length, 21.0);
        assert_eq!(s.max_token_length, 22);
        assert_eq!(corpus_stats(&corpus(&["a b a"])).distinct_word_count, 2);
        let empty = corpus_stats(&RequirementsCorpus::default());
        assert_eq!(empty.entry_count, 0);
        assert_eq!(empty.mean_token_length, 0.0);
    }

    #[test]
    fn table_excerpt_stats() {
        let c = corpus(&[
            "The system should be able to create test environment of weborder system.",
            "The system hardware shall be fixed and patched via an internet connection.",
            "Yoggie shall coordinate on future enhancement and features with our organization.",
        ]);
        assert_eq!(corpus_stats(&c).entry_count, 3);
    }

    fn entry_strategy() -> impl Strategy<Value = String> {
        prop::collection::vec(
            prop::sample::select(vec![
                "The", "system", "shall", "log.", "Users", "must", "be", "able", "to", "X.",
                "e.g.", "2.5", "Admin", "the", "SYSTEM", "shall,",
            ]),
            1..10,
        )
        .prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn clean_is_idempotent_and_sound(entries in prop::collection::vec(entry_strategy(), 0..15), cap in 1usize..12) {
            let c = corpus(&entries.iter().map(String::as_str).collect::<Vec<_>>());
            let once = clean_corpus(&c, cap);
            prop_assert_eq!(clean_corpus(&once, cap), once.clone());
            for i in 0..once.len() {
                prop_assert!(!once.entries[i].trim().is_empty());
                prop_assert_eq!(split_sentences(&once.entries[i]).len(), 1);
                for j in i + 1..once.len() {
                    prop_assert_ne!(dedup_key(&once.entries[i]), dedup_key(&once.entries[j]));
                }
            }
        }

        #[test]
        fn splitting_preserves_content(entry in entry_strategy()) {
            let joined = split_sentences(&entry).join(" ");
            let collapse = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
            prop_assert_eq!(collapse(&joined), collapse(&entry));
        }
    }
}
