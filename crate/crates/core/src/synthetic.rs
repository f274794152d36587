//! Seeded generator of synthetic "shall" requirement statements, used for
//! desk-scale experiments when no real requirements corpus is at hand.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{dedup_key, RequirementsCorpus};

const ACTORS: &[&str] = &[
    "system",
    "application",
    "user interface",
    "server",
    "database",
    "administrator",
    "operator",
    "mobile client",
    "scheduler",
    "payment module",
    "report generator",
    "authentication service",
];

const VERBS: &[&str] = &[
    "display",
    "store",
    "validate",
    "encrypt",
    "export",
    "notify the user about",
    "record",
    "update",
    "delete",
    "archive",
    "allow the user to edit",
    "provide access to",
    "synchronize",
    "generate",
];

const OBJECTS: &[&str] = &[
    "the order history",
    "all customer records",
    "the login attempts",
    "each payment transaction",
    "the monthly report",
    "the audit log",
    "user passwords",
    "the product catalog",
    "the current inventory",
    "error messages",
    "the session data",
    "the configuration settings",
    "all incoming requests",
    "the account balance",
];

const QUALIFIERS: &[&str] = &[
    "within two seconds",
    "at least once per day",
    "after every successful login",
    "in less than five seconds",
    "when the user requests it",
    "before the end of each session",
    "using a secure connection",
    "on the main screen",
    "without data loss",
    "for a period of one year",
];

/// `n` distinct statements of the form "The <actor> shall <verb> <object>
/// [<qualifier>]." drawn with a generator seeded by `seed`.
///
/// Panics if `n` exceeds the number of distinct statements the templates
/// can produce (over 20 000).
pub fn shall_statements(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    let capacity = ACTORS.len() * VERBS.len() * OBJECTS.len() * (QUALIFIERS.len() + 1);
    assert!(n <= capacity, "at most {capacity} distinct statements");
    while out.len() < n {
        let actor = ACTORS.choose(&mut rng).unwrap();
        let verb = VERBS.choose(&mut rng).unwrap();
        let object = OBJECTS.choose(&mut rng).unwrap();
        let sentence = if rng.gen_bool(0.6) {
            let q = QUALIFIERS.choose(&mut rng).unwrap();
            format!("The {actor} shall {verb} {object} {q}.")
        } else {
            format!("The {actor} shall {verb} {object}.")
        };
        if seen.insert(dedup_key(&sentence)) {
            out.push(sentence);
        }
    }
    out
}

pub fn shall_corpus(n: usize, seed: u64) -> RequirementsCorpus {
    RequirementsCorpus::from_entries(&shall_statements(n, seed), "synthetic")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::build_vocab;

    #[test]
    fn deterministic_distinct_and_shaped() {
        let a = shall_statements(500, 3);
        assert_eq!(a, shall_statements(500, 3));
        assert_ne!(a, shall_statements(500, 4));
        let keys: HashSet<_> = a.iter().map(|s| dedup_key(s)).collect();
        assert_eq!(keys.len(), 500);
        assert!(a
            .iter()
            .all(|s| s.starts_with("The ") && s.contains(" shall ") && s.ends_with('.')));
    }

    #[test]
    fn vocabulary_stays_small() {
        let vocab = build_vocab(&shall_corpus(500, 0), 4000).unwrap();
        assert!(vocab.len() < 200, "{}", vocab.len());
    }
}
