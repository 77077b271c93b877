use crate::text::{is_whitespace, CharSequence};

/// A token and its character range in the text it was cut from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_edge_punct(c: char) -> bool {
    !c.is_alphanumeric() && !is_whitespace(c)
}

/// Whitespace split, then leading and trailing runs of non-alphanumeric
/// characters are cut off each chunk as separate tokens. Inner
/// punctuation stays, so `Lakers-Raptors` remains one token. Tokens are
/// exact slices of the input.
pub fn simple_tokenize(text: &CharSequence) -> Vec<Token> {
    let chars = text.chars();
    let mut tokens = Vec::new();
    let mut push = |start: usize, end: usize| {
        if start < end {
            tokens.push(Token {
                text: chars[start..end].iter().collect(),
                start,
                end,
            });
        }
    };
    let mut i = 0;
    while i < chars.len() {
        if is_whitespace(chars[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !is_whitespace(chars[i]) {
            i += 1;
        }
        let end = i;
        let mut lead = start;
        while lead < end && is_edge_punct(chars[lead]) {
            lead += 1;
        }
        if lead == end {
            push(start, end);
            continue;
        }
        let mut trail = end;
        while trail > lead && is_edge_punct(chars[trail - 1]) {
            trail -= 1;
        }
        push(start, lead);
        push(lead, trail);
        push(trail, end);
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<String> {
        simple_tokenize(&CharSequence::new(s))
            .into_iter()
            .map(|t| t.text)
            .collect()
    }

    #[test]
    fn keeps_hyphenated_compound_together() {
        assert_eq!(texts("Lakers-Raptors game!"), ["Lakers-Raptors", "game", "!"]);
    }

    #[test]
    fn offsets() {
        let toks = simple_tokenize(&CharSequence::new("a b"));
        assert_eq!((toks[0].start, toks[0].end), (0, 1));
        assert_eq!((toks[1].start, toks[1].end), (2, 3));
    }

    #[test]
    fn empty_and_punctuation_only() {
        assert!(texts("").is_empty());
        assert!(texts("   ").is_empty());
        assert_eq!(texts("(wow...) ..."), ["(", "wow", "...)", "..."]);
        assert_eq!(texts("@GeeksOUT #NBA"), ["@", "GeeksOUT", "#", "NBA"]);
    }

    #[test]
    fn tokens_are_exact_slices() {
        let s = CharSequence::new("  «Times»  Square, NY… ");
        for t in simple_tokenize(&s) {
            assert_eq!(s.slice(t.start..t.end), t.text);
        }
    }
}
