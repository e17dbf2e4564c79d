//! A tolerant C++ token scanner.
//!
//! Comments, string/char literals, and preprocessor lines are consumed but
//! not emitted; every remaining token carries its line number and byte span
//! so callers can slice original text back out verbatim.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Number,
    Punct,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    pub line: usize,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_ident(&self) -> bool {
        self.kind == TokKind::Ident
    }
}

pub fn lex(source: &str) -> Vec<Token> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut at_line_start = true;

    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'\n' => {
                line += 1;
                at_line_start = true;
                i += 1;
            }
            b' ' | b'\t' | b'\r' => i += 1,
            b'#' if at_line_start => {
                // Preprocessor directive: swallow the line, honoring `\` continuations.
                while i < bytes.len() {
                    if bytes[i] == b'\n' {
                        if i >= 1 && bytes[i - 1] == b'\\'
                            || (i >= 2 && bytes[i - 1] == b'\r' && bytes[i - 2] == b'\\')
                        {
                            line += 1;
                            i += 1;
                            continue;
                        }
                        break;
                    }
                    i += 1;
                }
            }
            b'/' if i + 1 < bytes.len() && bytes[i + 1] == b'/' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if i + 1 < bytes.len() && bytes[i + 1] == b'*' => {
                i += 2;
                while i < bytes.len() {
                    if bytes[i] == b'\n' {
                        line += 1;
                    } else if bytes[i] == b'*' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
                        i += 2;
                        break;
                    }
                    i += 1;
                }
            }
            b'"' => {
                at_line_start = false;
                i = skip_string(bytes, i, &mut line);
            }
            b'\'' => {
                at_line_start = false;
                i = skip_char(bytes, i);
            }
            b'R' if i + 1 < bytes.len() && bytes[i + 1] == b'"' => {
                at_line_start = false;
                i = skip_raw_string(bytes, i, &mut line);
            }
            _ if b.is_ascii_alphabetic() || b == b'_' => {
                at_line_start = false;
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokKind::Ident,
                    text: source[start..i].to_string(),
                    line,
                    start,
                    end: i,
                });
            }
            _ if b.is_ascii_digit() => {
                at_line_start = false;
                let start = i;
                while i < bytes.len() {
                    let c = bytes[i];
                    if c.is_ascii_alphanumeric() || c == b'.' || c == b'\'' {
                        i += 1;
                    } else if (c == b'+' || c == b'-')
                        && matches!(bytes[i - 1], b'e' | b'E' | b'p' | b'P')
                    {
                        // Exponent sign, as in 1.5e-3.
                        i += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokKind::Number,
                    text: source[start..i].to_string(),
                    line,
                    start,
                    end: i,
                });
            }
            _ => {
                at_line_start = false;
                let start = i;
                let c = match source[i..].chars().next() {
                    Some(c) => c,
                    None => break,
                };
                if c.is_ascii() {
                    // Two-character tokens the parser cares about.
                    let two = source.get(i..i + 2).unwrap_or("");
                    let len = if two == "::" || two == "->" { 2 } else { 1 };
                    i += len;
                } else {
                    i += c.len_utf8();
                }
                tokens.push(Token {
                    kind: TokKind::Punct,
                    text: source[start..i].to_string(),
                    line,
                    start,
                    end: i,
                });
            }
        }
    }
    tokens
}

fn skip_string(bytes: &[u8], mut i: usize, line: &mut usize) -> usize {
    i += 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => return i + 1,
            b'\n' => {
                *line += 1;
                i += 1;
            }
            _ => i += 1,
        }
    }
    i
}

fn skip_char(bytes: &[u8], mut i: usize) -> usize {
    i += 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'\'' => return i + 1,
            b'\n' => return i, // unterminated; stop at line end
            _ => i += 1,
        }
    }
    i
}

fn skip_raw_string(bytes: &[u8], mut i: usize, line: &mut usize) -> usize {
    // R"delim( ... )delim"
    i += 2;
    let delim_start = i;
    while i < bytes.len() && bytes[i] != b'(' {
        i += 1;
    }
    let delim = bytes[delim_start..i].to_vec();
    let mut closer = vec![b')'];
    closer.extend_from_slice(&delim);
    closer.push(b'"');
    while i < bytes.len() {
        if bytes[i] == b'\n' {
            *line += 1;
        }
        if bytes[i..].starts_with(&closer) {
            return i + closer.len();
        }
        i += 1;
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        lex(src).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn comments_and_strings_are_skipped() {
        let toks = texts("int x = 1; // trailing\n/* block */ char* s = \"a } b\";");
        assert!(toks.contains(&"x".to_string()));
        assert!(!toks.iter().any(|t| t.contains("trailing")));
        assert!(!toks.iter().any(|t| t.contains('}')));
    }

    #[test]
    fn preprocessor_lines_are_skipped() {
        let toks = texts("#include <vector>\n#define N 3 \\\n  + 4\nint y;");
        assert_eq!(toks, vec!["int", "y", ";"]);
    }

    #[test]
    fn scope_and_arrow_are_single_tokens() {
        let toks = texts("amrex::Real r = p->x;");
        assert!(toks.contains(&"::".to_string()));
        assert!(toks.contains(&"->".to_string()));
    }

    #[test]
    fn numbers_keep_dots_and_exponents() {
        let toks = texts("a = 0.5 + 1.5e-3 + 0x1F;");
        assert!(toks.contains(&"0.5".to_string()));
        assert!(toks.contains(&"1.5e-3".to_string()));
        assert!(toks.contains(&"0x1F".to_string()));
    }

    #[test]
    fn lines_are_tracked() {
        let toks = lex("int a;\nint b;\n\nint c;");
        let line_of = |name: &str| toks.iter().find(|t| t.text == name).unwrap().line;
        assert_eq!(line_of("a"), 1);
        assert_eq!(line_of("b"), 2);
        assert_eq!(line_of("c"), 4);
    }

    #[test]
    fn raw_strings_do_not_confuse_braces() {
        let toks = texts("auto s = R\"(unbalanced { here)\"; int z;");
        assert!(toks.contains(&"z".to_string()));
        assert!(!toks.iter().any(|t| t == "{"));
    }
}
