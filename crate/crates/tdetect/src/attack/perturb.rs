//! Attack application. Site selection is driven by a PRNG derived from
//! `(seed, text hash)`, so identical inputs produce byte-identical outputs on
//! every platform and in any parallel order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::tables::{confusables, thesaurus, us_uk_spelling};
use super::{AttackError, AttackKind, AttackSpec};

/// A perturbed text; `noop` is set when nothing changed (no eligible sites,
/// or intensity selected none).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attacked {
    pub text: String,
    pub noop: bool,
}

fn site_rng(spec: &AttackSpec, text: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(spec.seed.to_le_bytes());
    hasher.update([spec.kind.as_str().len() as u8]);
    hasher.update(spec.kind.as_str().as_bytes());
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

fn selected(rng: &mut ChaCha8Rng, intensity: f64) -> bool {
    if intensity >= 1.0 {
        // Still consume a draw so site positions stay aligned across
        // intensities.
        let _ = rng.gen::<f64>();
        return true;
    }
    rng.gen::<f64>() < intensity
}

/// Applies the perturbation described by `spec` to `text`.
pub fn apply_attack(text: &str, spec: &AttackSpec) -> Result<Attacked, AttackError> {
    if text.is_empty() {
        return Err(AttackError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&spec.intensity) {
        return Err(AttackError::InvalidIntensity(spec.intensity));
    }
    if spec.intensity == 0.0 {
        return Ok(Attacked {
            text: text.to_string(),
            noop: true,
        });
    }
    let mut rng = site_rng(spec, text);
    let out = match spec.kind {
        AttackKind::ZeroWidthSpace => zero_width_space(text, spec.intensity, &mut rng),
        AttackKind::Homoglyph => homoglyph(text, spec.intensity, &mut rng),
        AttackKind::Whitespace => whitespace(text, spec.intensity, &mut rng),
        AttackKind::InsertParagraphs => insert_paragraphs(text, spec.intensity, &mut rng),
        AttackKind::Number => number(text, spec, &mut rng),
        AttackKind::AlternativeSpelling => alternative_spelling(text, spec.intensity, &mut rng),
        AttackKind::Synonym => synonym(text, spec.intensity, &mut rng),
        AttackKind::Misspelling => misspelling(text, spec.intensity, &mut rng),
        AttackKind::ArticleDeletion => article_deletion(text, spec.intensity, &mut rng),
        AttackKind::CaseFlip => case_flip(text, spec.intensity, &mut rng),
    };
    let noop = out == text;
    Ok(Attacked { text: out, noop })
}

fn zero_width_space(text: &str, intensity: f64, rng: &mut ChaCha8Rng) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() * 2);
    for (i, c) in chars.iter().enumerate() {
        out.push(*c);
        if i + 1 < chars.len() && selected(rng, intensity) {
            out.push('\u{200B}');
        }
    }
    out
}

fn homoglyph(text: &str, intensity: f64, rng: &mut ChaCha8Rng) -> String {
    let table = confusables();
    text.chars()
        .map(|c| match table.get(&c) {
            Some(&sub) if selected(rng, intensity) => sub,
            _ => c,
        })
        .collect()
}

fn whitespace(text: &str, intensity: f64, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        out.push(c);
        if c == ' ' && selected(rng, intensity) {
            out.push(' ');
        }
    }
    out
}

fn insert_paragraphs(text: &str, intensity: f64, rng: &mut ChaCha8Rng) -> String {
    // Sentence boundary rule: [.!?] followed by whitespace and an uppercase
    // letter.
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 8);
    for (i, c) in chars.iter().enumerate() {
        out.push(*c);
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            let mut saw_ws = false;
            while j < chars.len() && chars[j].is_whitespace() {
                saw_ws = true;
                j += 1;
            }
            if saw_ws && j < chars.len() && chars[j].is_uppercase() && selected(rng, intensity) {
                out.push_str("\n\n");
            }
        }
    }
    out
}

fn number(text: &str, spec: &AttackSpec, rng: &mut ChaCha8Rng) -> String {
    // Direction convention: even seed steps digits +1, odd seed -1 (mod 10).
    let step: i32 = if spec.seed.is_multiple_of(2) { 1 } else { -1 };
    text.chars()
        .map(|c| {
            if let Some(d) = c.to_digit(10) {
                if selected(rng, spec.intensity) {
                    let nd = ((d as i32 + step).rem_euclid(10)) as u32;
                    return char::from_digit(nd, 10).unwrap();
                }
            }
            c
        })
        .collect()
}

/// Splits into maximal alphabetic runs and the separators between them, then
/// rewrites each word through `f`.
fn map_words(text: &str, mut f: impl FnMut(&str) -> Option<String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphabetic() {
            word.push(c);
        } else {
            if !word.is_empty() {
                match f(&word) {
                    Some(repl) => out.push_str(&repl),
                    None => out.push_str(&word),
                }
                word.clear();
            }
            out.push(c);
        }
    }
    if !word.is_empty() {
        match f(&word) {
            Some(repl) => out.push_str(&repl),
            None => out.push_str(&word),
        }
    }
    out
}

fn match_case(template: &str, replacement: &str) -> String {
    let mut chars = template.chars();
    let first_upper = chars.next().map(|c| c.is_uppercase()).unwrap_or(false);
    let all_upper = first_upper && template.chars().all(|c| !c.is_lowercase());
    if all_upper && template.chars().count() > 1 {
        replacement.to_uppercase()
    } else if first_upper {
        let mut out = String::with_capacity(replacement.len());
        let mut rchars = replacement.chars();
        if let Some(c) = rchars.next() {
            out.extend(c.to_uppercase());
        }
        out.extend(rchars);
        out
    } else {
        replacement.to_string()
    }
}

fn substitute_from_table(
    text: &str,
    table: &std::collections::HashMap<String, String>,
    intensity: f64,
    rng: &mut ChaCha8Rng,
) -> String {
    map_words(text, |word| {
        let key = word.to_lowercase();
        let repl = table.get(&key)?;
        if selected(rng, intensity) {
            Some(match_case(word, repl))
        } else {
            None
        }
    })
}

fn alternative_spelling(text: &str, intensity: f64, rng: &mut ChaCha8Rng) -> String {
    substitute_from_table(text, us_uk_spelling(), intensity, rng)
}

fn synonym(text: &str, intensity: f64, rng: &mut ChaCha8Rng) -> String {
    substitute_from_table(text, thesaurus(), intensity, rng)
}

fn misspelling(text: &str, intensity: f64, rng: &mut ChaCha8Rng) -> String {
    map_words(text, |word| {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() < 4 || !selected(rng, intensity) {
            return None;
        }
        // Swap an interior adjacent pair, keeping first and last letters.
        let mut swapped = chars.clone();
        let j = rng.gen_range(1..chars.len() - 2);
        swapped.swap(j, j + 1);
        Some(swapped.into_iter().collect())
    })
}

fn article_deletion(text: &str, intensity: f64, rng: &mut ChaCha8Rng) -> String {
    // Delete the article and one adjacent space: the following space when one
    // exists, otherwise the preceding one.
    enum Seg {
        Word(String),
        Sep(String),
    }
    let mut segments: Vec<Seg> = Vec::new();
    for c in text.chars() {
        let is_word = c.is_alphabetic();
        match segments.last_mut() {
            Some(Seg::Word(w)) if is_word => w.push(c),
            Some(Seg::Sep(s)) if !is_word => s.push(c),
            _ => segments.push(if is_word {
                Seg::Word(c.to_string())
            } else {
                Seg::Sep(c.to_string())
            }),
        }
    }

    let mut delete = vec![false; segments.len()];
    for (i, seg) in segments.iter().enumerate() {
        if let Seg::Word(w) = seg {
            let is_article = matches!(w.to_lowercase().as_str(), "a" | "an" | "the");
            if is_article && selected(rng, intensity) {
                delete[i] = true;
            }
        }
    }

    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < segments.len() {
        if delete[i] {
            if let Some(Seg::Sep(s)) = segments.get(i + 1) {
                if let Some(rest) = s.strip_prefix(' ') {
                    out.push_str(rest);
                    i += 2;
                    continue;
                }
            } else if out.ends_with(' ') {
                out.pop();
            }
            i += 1;
            continue;
        }
        match &segments[i] {
            Seg::Word(w) => out.push_str(w),
            Seg::Sep(s) => out.push_str(s),
        }
        i += 1;
    }
    out
}

fn case_flip(text: &str, intensity: f64, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_alphabetic() && selected(rng, intensity) {
            if c.is_uppercase() {
                out.extend(c.to_lowercase());
            } else {
                out.extend(c.to_uppercase());
            }
        } else {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: AttackKind, intensity: f64, seed: u64) -> AttackSpec {
        AttackSpec::new(kind, intensity, seed).unwrap()
    }

    #[test]
    fn zero_width_single_forced_site() {
        let out = apply_attack("ab", &spec(AttackKind::ZeroWidthSpace, 1.0, 0)).unwrap();
        assert_eq!(out.text, "a\u{200B}b");
        assert!(!out.noop);
    }

    #[test]
    fn zero_width_removal_recovers_original() {
        let original = "The quick brown fox jumps over the lazy dog.";
        let out = apply_attack(original, &spec(AttackKind::ZeroWidthSpace, 0.5, 9)).unwrap();
        let stripped: String = out.text.chars().filter(|&c| c != '\u{200B}').collect();
        assert_eq!(stripped, original);
    }

    #[test]
    fn article_deletion_single_article() {
        let out = apply_attack("the cat", &spec(AttackKind::ArticleDeletion, 1.0, 0)).unwrap();
        assert_eq!(out.text, "cat");
    }

    #[test]
    fn article_deletion_mid_sentence() {
        let out = apply_attack(
            "I saw a bird on the roof",
            &spec(AttackKind::ArticleDeletion, 1.0, 0),
        )
        .unwrap();
        assert_eq!(out.text, "I saw bird on roof");
    }

    #[test]
    fn number_plus_one_with_even_seed() {
        let out = apply_attack("HELLO world 42", &spec(AttackKind::Number, 1.0, 0)).unwrap();
        assert_eq!(out.text, "HELLO world 53");
    }

    #[test]
    fn number_minus_one_with_odd_seed() {
        let out = apply_attack("42", &spec(AttackKind::Number, 1.0, 1)).unwrap();
        assert_eq!(out.text, "31");
    }

    #[test]
    fn number_wraps_mod_ten() {
        let out = apply_attack("90", &spec(AttackKind::Number, 1.0, 0)).unwrap();
        assert_eq!(out.text, "01");
    }

    #[test]
    fn homoglyph_substitutes_from_table() {
        let out = apply_attack("password", &spec(AttackKind::Homoglyph, 1.0, 0)).unwrap();
        assert_ne!(out.text, "password");
        assert_eq!(out.text.chars().count(), 8);
    }

    #[test]
    fn whitespace_doubles_spaces() {
        let out = apply_attack("a b c", &spec(AttackKind::Whitespace, 1.0, 0)).unwrap();
        assert_eq!(out.text, "a  b  c");
    }

    #[test]
    fn insert_paragraphs_at_sentence_boundary() {
        let out = apply_attack(
            "It rained. The road was wet.",
            &spec(AttackKind::InsertParagraphs, 1.0, 0),
        )
        .unwrap();
        assert_eq!(out.text, "It rained.\n\n The road was wet.");
    }

    #[test]
    fn misspelling_preserves_outer_letters() {
        let out = apply_attack("wonderful", &spec(AttackKind::Misspelling, 1.0, 3)).unwrap();
        assert_ne!(out.text, "wonderful");
        assert!(out.text.starts_with('w') && out.text.ends_with('l'));
        let mut a: Vec<char> = out.text.chars().collect();
        let mut b: Vec<char> = "wonderful".chars().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn case_flip_toggles() {
        let out = apply_attack("aB", &spec(AttackKind::CaseFlip, 1.0, 0)).unwrap();
        assert_eq!(out.text, "Ab");
    }

    #[test]
    fn synonym_preserves_capitalization() {
        let out = apply_attack("Big dogs", &spec(AttackKind::Synonym, 1.0, 0)).unwrap();
        assert!(out.text.starts_with("Large"));
    }

    #[test]
    fn intensity_zero_is_identity() {
        for kind in AttackKind::ALL {
            let out = apply_attack("The cat sat. On 42 mats.", &spec(kind, 0.0, 7)).unwrap();
            assert_eq!(out.text, "The cat sat. On 42 mats.");
            assert!(out.noop);
        }
    }

    #[test]
    fn no_eligible_sites_is_flagged_noop() {
        let out = apply_attack("zzz", &spec(AttackKind::Number, 1.0, 0)).unwrap();
        assert!(out.noop);
        assert_eq!(out.text, "zzz");
    }

    #[test]
    fn attacks_are_deterministic() {
        let text = "The old clock ticked 42 times. A cat slept nearby.";
        for kind in AttackKind::ALL {
            let s = spec(kind, 0.6, 123);
            let a = apply_attack(text, &s).unwrap();
            let b = apply_attack(text, &s).unwrap();
            assert_eq!(a, b, "{kind:?} not deterministic");
        }
    }

    #[test]
    fn empty_text_rejected() {
        assert!(matches!(
            apply_attack("", &spec(AttackKind::CaseFlip, 1.0, 0)),
            Err(AttackError::EmptyInput)
        ));
    }
}
