//! Corpus ingestion: tagged text, vocabularies, noun-pair contexts and the
//! labeled SemEval format.

mod context;
mod label;
mod semeval;
mod tagged;
mod vocab;

pub use context::{
    context_at, extract_noun_pair_contexts, ContextFile, ContextFileIter, ContextStats,
    ContextWriter, NounPairContext, DEFAULT_MAX_BETWEEN,
};
pub use label::{Direction, Family, RelationLabel, NUM_FAMILIES, NUM_LABELS};
pub use semeval::{
    format_record, parse_marked_sentence, parse_semeval, parse_semeval_records, tokenize,
    vocabulary_from_records, ParsedSemEval, SemEvalInstance, SemEvalRecord,
};
pub use tagged::{
    is_noun_tag, parse_tagged_corpus, TaggedCorpusReader, TaggedSentence, Token, NOUN_TAGS,
};
pub use vocab::{
    build_vocabulary, Inventory, VocabCounter, Vocabulary, NOUN_UNK, NULL, UNK, WORD_NULL, WORD_UNK,
};
