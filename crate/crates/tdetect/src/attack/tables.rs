//! Pinned lexical tables shipped as TSV data files.

use std::collections::HashMap;
use std::sync::OnceLock;

const CONFUSABLES_TSV: &str = include_str!("../../data/confusables.tsv");
const THESAURUS_TSV: &str = include_str!("../../data/thesaurus.tsv");
const SPELLING_TSV: &str = include_str!("../../data/spelling_us_uk.tsv");

fn parse_pairs(tsv: &str) -> Vec<(String, String)> {
    tsv.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut parts = l.splitn(2, '\t');
            let src = parts.next().expect("tsv row missing source").to_string();
            let dst = parts.next().expect("tsv row missing target").to_string();
            (src, dst)
        })
        .collect()
}

/// ASCII character to its first confusable code point, used by the homoglyph
/// attack. Rows beyond the first per source character are defense-only.
pub fn confusables() -> &'static HashMap<char, char> {
    static TABLE: OnceLock<HashMap<char, char>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut map = HashMap::new();
        for (src, dst) in parse_pairs(CONFUSABLES_TSV) {
            let s = src.chars().next().expect("empty source");
            let d = dst.chars().next().expect("empty target");
            map.entry(s).or_insert(d);
        }
        map
    })
}

/// Confusable code point back to its ASCII source, used by the defense.
pub fn fold_table() -> &'static HashMap<char, char> {
    static TABLE: OnceLock<HashMap<char, char>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut map = HashMap::new();
        for (src, dst) in parse_pairs(CONFUSABLES_TSV) {
            let s = src.chars().next().expect("empty source");
            let d = dst.chars().next().expect("empty target");
            map.insert(d, s);
        }
        map
    })
}

/// Lowercase word to a static synonym.
pub fn thesaurus() -> &'static HashMap<String, String> {
    static TABLE: OnceLock<HashMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| parse_pairs(THESAURUS_TSV).into_iter().collect())
}

/// US spelling to UK spelling and back; the attack toggles whichever
/// direction matches.
pub fn us_uk_spelling() -> &'static HashMap<String, String> {
    static TABLE: OnceLock<HashMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut map = HashMap::new();
        for (us, uk) in parse_pairs(SPELLING_TSV) {
            map.insert(us.clone(), uk.clone());
            map.insert(uk, us);
        }
        map
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusables_cover_cyrillic_a() {
        assert_eq!(confusables()[&'a'], 'а');
        assert_eq!(fold_table()[&'а'], 'a');
    }

    #[test]
    fn fold_table_inverts_every_attack_mapping() {
        for (src, dst) in confusables() {
            assert_eq!(fold_table()[dst], *src);
        }
    }

    #[test]
    fn thesaurus_and_spelling_tables_nonempty() {
        assert!(thesaurus().len() >= 300);
        assert!(us_uk_spelling().len() >= 100);
        assert_eq!(us_uk_spelling()["color"], "colour");
        assert_eq!(us_uk_spelling()["colour"], "color");
    }
}
