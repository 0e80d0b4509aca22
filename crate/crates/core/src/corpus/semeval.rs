//! Reader for the SemEval-2010 Task 8 distribution format:
//!
//! ```text
//! 1<TAB>"Financial <e1>stress</e1> is one of the main causes of <e2>divorce</e2>."
//! Cause-Effect(e1,e2)
//! Comment:
//!
//! ```

use std::io::BufRead;

use super::context::{context_at, NounPairContext};
use super::label::RelationLabel;
use super::vocab::{VocabCounter, Vocabulary};
use crate::error::{Error, Result};

/// A tokenized labeled sentence with each entity collapsed to its head
/// (last) token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemEvalRecord {
    pub id: u64,
    pub tokens: Vec<String>,
    /// Position of the first entity's head in `tokens`.
    pub e1: usize,
    /// Position of the second entity's head in `tokens`.
    pub e2: usize,
    pub label: RelationLabel,
}

impl SemEvalRecord {
    pub fn context(&self, vocab: &Vocabulary, m_out: usize) -> NounPairContext {
        let ids: Vec<u32> = self
            .tokens
            .iter()
            .map(|t| vocab.word_id(t) as u32)
            .collect();
        let n1 = vocab.noun_id(&self.tokens[self.e1]) as u32;
        let n2 = vocab.noun_id(&self.tokens[self.e2]) as u32;
        let mut ctx = context_at(&ids, n1, n2, self.e1, self.e2, m_out);
        ctx.sentence_ref = Some(self.id);
        ctx
    }

    pub fn to_instance(&self, vocab: &Vocabulary, m_out: usize) -> SemEvalInstance {
        SemEvalInstance {
            id: self.id,
            context: self.context(vocab, m_out),
            label: self.label,
        }
    }

    /// The words strictly between the two entity heads.
    pub fn between(&self) -> &[String] {
        &self.tokens[self.e1 + 1..self.e2]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemEvalInstance {
    pub id: u64,
    pub context: NounPairContext,
    pub label: RelationLabel,
}

const PUNCT_LEAD: &[char] = &['"', '(', '[', '\'', '`'];
const PUNCT_TRAIL: &[char] = &['.', ',', ';', ':', '!', '?', '"', ')', ']', '\''];

fn is_punct(tok: &str) -> bool {
    tok.chars().all(|c| c.is_ascii_punctuation())
}

/// Splits on whitespace and peels surrounding punctuation into separate
/// tokens. Possessive `'s` becomes its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut rest = chunk;
        while let Some(c) = rest.chars().next() {
            if PUNCT_LEAD.contains(&c) && rest.len() > c.len_utf8() {
                out.push(c.to_string());
                rest = &rest[c.len_utf8()..];
            } else {
                break;
            }
        }
        let mut trailing = Vec::new();
        while let Some(c) = rest.chars().last() {
            if PUNCT_TRAIL.contains(&c) && rest.len() > c.len_utf8() {
                trailing.push(c.to_string());
                rest = &rest[..rest.len() - c.len_utf8()];
            } else {
                break;
            }
        }
        if let Some(stem) = rest.strip_suffix("'s").filter(|s| !s.is_empty()) {
            out.push(stem.to_string());
            out.push("'s".to_string());
        } else if !rest.is_empty() {
            out.push(rest.to_string());
        }
        out.extend(trailing.into_iter().rev());
    }
    out
}

/// Tokenizes a marked-up sentence, collapsing each entity to its head.
/// Returns `(tokens, e1_position, e2_position)`.
pub fn parse_marked_sentence(
    sentence: &str,
) -> std::result::Result<(Vec<String>, usize, usize), String> {
    let spaced = sentence
        .replace("<e1>", " <e1> ")
        .replace("</e1>", " </e1> ")
        .replace("<e2>", " <e2> ")
        .replace("</e2>", " </e2> ");
    let mut tokens = Vec::new();
    let mut e1 = None;
    let mut e2 = None;
    let mut open: Option<(u8, Vec<String>)> = None;
    for raw in spaced.split_whitespace() {
        match raw {
            "<e1>" | "<e2>" => {
                if open.is_some() {
                    return Err("nested entity markup".into());
                }
                open = Some((if raw == "<e1>" { 1 } else { 2 }, Vec::new()));
            }
            "</e1>" | "</e2>" => {
                let which = if raw == "</e1>" { 1 } else { 2 };
                let (tag, span) = open.take().ok_or("unbalanced entity markup")?;
                if tag != which {
                    return Err("mismatched entity markup".into());
                }
                let head = span
                    .iter()
                    .rev()
                    .find(|t| !is_punct(t))
                    .or(span.last())
                    .ok_or("empty entity")?
                    .clone();
                let slot = if which == 1 { &mut e1 } else { &mut e2 };
                if slot.is_some() {
                    return Err(format!("duplicate <e{which}>"));
                }
                *slot = Some(tokens.len());
                tokens.push(head);
            }
            word => {
                let toks = tokenize(word);
                match open.as_mut() {
                    Some((_, span)) => span.extend(toks),
                    None => tokens.extend(toks),
                }
            }
        }
    }
    if open.is_some() {
        return Err("unclosed entity markup".into());
    }
    match (e1, e2) {
        (Some(a), Some(b)) if a < b => Ok((tokens, a, b)),
        (Some(_), Some(_)) => Err("<e2> precedes <e1>".into()),
        (None, _) => Err("missing <e1> markup".into()),
        (_, None) => Err("missing <e2> markup".into()),
    }
}

/// Result of reading a labeled file: good records plus per-instance errors.
#[derive(Debug, Default)]
pub struct ParsedSemEval {
    pub records: Vec<SemEvalRecord>,
    pub errors: Vec<Error>,
}

impl ParsedSemEval {
    /// Fails on the first per-instance error, if any.
    pub fn into_result(self) -> Result<Vec<SemEvalRecord>> {
        match self.errors.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(self.records),
        }
    }
}

fn split_sentence_line(line: &str) -> Option<(u64, &str)> {
    let (id, rest) = line.split_once('\t')?;
    let id = id.trim().parse().ok()?;
    let text = rest.trim();
    let text = text.strip_prefix('"').unwrap_or(text);
    let text = text.strip_suffix('"').unwrap_or(text);
    Some((id, text))
}

/// Reads labeled records. I/O and decoding failures abort; malformed
/// instances are collected in [`ParsedSemEval::errors`].
pub fn parse_semeval_records<R: BufRead>(reader: R) -> Result<ParsedSemEval> {
    let mut parsed = ParsedSemEval::default();
    let mut pending: Option<(
        u64,
        std::result::Result<(Vec<String>, usize, usize), String>,
    )> = None;

    let finish = |parsed: &mut ParsedSemEval,
                  pending: Option<(
        u64,
        std::result::Result<(Vec<String>, usize, usize), String>,
    )>,
                  label: Option<&str>| {
        let Some((id, sentence)) = pending else {
            return;
        };
        let result = sentence
            .map_err(|message| Error::Instance { id, message })
            .and_then(|(tokens, e1, e2)| {
                let label = label.ok_or_else(|| Error::Instance {
                    id,
                    message: "missing relation label".into(),
                })?;
                let label = label
                    .parse::<RelationLabel>()
                    .map_err(|_| Error::Instance {
                        id,
                        message: format!("unknown label `{label}`"),
                    })?;
                Ok(SemEvalRecord {
                    id,
                    tokens,
                    e1,
                    e2,
                    label,
                })
            });
        match result {
            Ok(r) => parsed.records.push(r),
            Err(e) => parsed.errors.push(e),
        }
    };

    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::Decode { line: line_no + 1 },
            _ => e.into(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with("Comment") {
            continue;
        }
        if let Some((id, text)) = split_sentence_line(line) {
            finish(&mut parsed, pending.take(), None);
            pending = Some((id, parse_marked_sentence(text)));
        } else if pending.is_some() {
            finish(&mut parsed, pending.take(), Some(line.trim()));
        } else {
            return Err(Error::format(
                "SemEval file",
                format!("line {}: unexpected `{line}`", line_no + 1),
            ));
        }
    }
    finish(&mut parsed, pending.take(), None);
    Ok(parsed)
}

/// Reads a labeled file and builds classification contexts.
pub fn parse_semeval<R: BufRead>(
    reader: R,
    vocab: &Vocabulary,
    m_out: usize,
) -> Result<(Vec<SemEvalInstance>, Vec<Error>)> {
    let parsed = parse_semeval_records(reader)?;
    let instances = parsed
        .records
        .iter()
        .map(|r| r.to_instance(vocab, m_out))
        .collect();
    Ok((instances, parsed.errors))
}

/// Builds a vocabulary from labeled records alone: every token counts as a
/// word and the entity heads count as nouns.
pub fn vocabulary_from_records(
    records: &[SemEvalRecord],
    max_words: usize,
    max_nouns: usize,
    lowercase: bool,
) -> Result<Vocabulary> {
    let mut counter = VocabCounter::new(lowercase);
    for (si, r) in records.iter().enumerate() {
        for (i, t) in r.tokens.iter().enumerate() {
            counter.add_token(si as u64, i as u32, t, i == r.e1 || i == r.e2);
        }
    }
    counter.finish(max_words, max_nouns)
}

/// Renders a record back into the distribution format, entities unmarked
/// except for their head tokens.
pub fn format_record(r: &SemEvalRecord) -> String {
    let mut s = String::new();
    for (i, t) in r.tokens.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        if i == r.e1 {
            s.push_str(&format!("<e1>{t}</e1>"));
        } else if i == r.e2 {
            s.push_str(&format!("<e2>{t}</e2>"));
        } else {
            s.push_str(t);
        }
    }
    format!("{}\t\"{}\"\n{}\nComment:\n\n", r.id, s, r.label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::label::{Direction, Family};

    const SAMPLE: &str =
        "1\t\"Financial <e1>stress</e1> is one of the main causes of <e2>divorce</e2>.\"\n\
Cause-Effect(e1,e2)\n\
Comment:\n\
\n\
2\t\"The <e1>burst</e1> has been caused by water hammer <e2>pressure</e2>.\"\n\
Cause-Effect(e2,e1)\n\
Comment:\n\
\n";

    fn records(text: &str) -> ParsedSemEval {
        parse_semeval_records(text.as_bytes()).unwrap()
    }

    #[test]
    fn distribution_examples() {
        let p = records(SAMPLE);
        assert!(p.errors.is_empty());
        let a = &p.records[0];
        assert_eq!(
            a.label,
            RelationLabel::Relation(Family::CauseEffect, Direction::Forward)
        );
        assert_eq!(a.tokens[a.e1], "stress");
        assert_eq!(a.tokens[a.e2], "divorce");
        assert_eq!(
            a.between(),
            ["is", "one", "of", "the", "main", "causes", "of"]
        );
        let b = &p.records[1];
        assert_eq!(
            b.label,
            RelationLabel::Relation(Family::CauseEffect, Direction::Backward)
        );
        assert_eq!(
            b.between(),
            ["has", "been", "caused", "by", "water", "hammer"]
        );
    }

    #[test]
    fn contexts_from_records() {
        let p = records(SAMPLE);
        let vocab = vocabulary_from_records(&p.records, 100, 100, true).unwrap();
        let (inst, errs) = parse_semeval(SAMPLE.as_bytes(), &vocab, 3).unwrap();
        assert!(errs.is_empty());
        let c = &inst[0].context;
        assert_eq!(c.n1 as usize, vocab.noun_id("stress"));
        assert_eq!(c.n2 as usize, vocab.noun_id("divorce"));
        assert_eq!(c.m_in(), 7);
        assert_eq!(c.w_aft[0] as usize, vocab.word_id("."));
        assert_eq!(inst[0].id, 1);
        assert_eq!(c.sentence_ref, Some(1));
    }

    #[test]
    fn multi_token_entity_uses_head() {
        let text =
            "7\t\"A <e1>word embedding</e1> of <e2>relation classification</e2>.\"\nOther\n\n";
        let r = &records(text).records[0];
        assert_eq!(r.tokens[r.e1], "embedding");
        assert_eq!(r.tokens[r.e2], "classification");
        assert_eq!(r.between(), ["of"]);
    }

    #[test]
    fn adjacent_entities_allowed() {
        let text = "9\t\"<e1>wine</e1> <e2>bottle</e2>\"\nOther\n\n";
        let p = records(text);
        let vocab = vocabulary_from_records(&p.records, 10, 10, true).unwrap();
        let inst = p.records[0].to_instance(&vocab, 2);
        assert_eq!(inst.context.m_in(), 0);
    }

    #[test]
    fn per_instance_errors_carry_id() {
        let text = "3\t\"no markup here\"\nOther\n\n4\t\"<e1>a</e1> x <e2>b</e2>\"\nFoo-Bar(e1,e2)\n\n5\t\"<e1>a</e1> x <e2>b</e2>\"\nOther\n";
        let p = records(text);
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.records[0].id, 5);
        assert!(matches!(p.errors[0], Error::Instance { id: 3, .. }));
        assert!(matches!(p.errors[1], Error::Instance { id: 4, .. }));
    }

    #[test]
    fn tokenizer_peels_punctuation() {
        assert_eq!(
            tokenize("(the cat's bowl), said."),
            ["(", "the", "cat", "'s", "bowl", ")", ",", "said", "."]
        );
    }

    #[test]
    fn format_round_trip() {
        let p = records(SAMPLE);
        for r in &p.records {
            let again = records(&format_record(r));
            assert_eq!(&again.records[0], r);
        }
    }
}
