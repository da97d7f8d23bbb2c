//! Unicode normalization defense.
//!
//! Strips zero-width and format-class code points, folds fullwidth and
//! ligature forms via compatibility decomposition, maps confusables back to
//! ASCII through the shipped table, and collapses whitespace runs. Letter
//! case is preserved. Total function; idempotent.

use unicode_normalization::UnicodeNormalization;

use super::tables::fold_table;

fn is_zero_width(c: char) -> bool {
    matches!(c, '\u{200B}'..='\u{200D}' | '\u{FEFF}' | '\u{2060}')
}

pub fn normalize_defense(text: &str) -> String {
    let stripped: String = text.chars().filter(|&c| !is_zero_width(c)).collect();
    let folded: String = stripped
        .nfkc()
        .map(|c| fold_table().get(&c).copied().unwrap_or(c))
        .collect();

    let mut out = String::with_capacity(folded.len());
    let mut in_ws = false;
    for c in folded.chars() {
        if c.is_whitespace() {
            if !in_ws {
                out.push(' ');
            }
            in_ws = true;
        } else {
            out.push(c);
            in_ws = false;
        }
    }
    out
}
