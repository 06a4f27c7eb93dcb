use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::TokenId;

/// Which tokenizer to build at ingestion time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    /// One token per UTF-8 byte, vocabulary 256.
    #[default]
    Bytes,
    /// Lowercase whitespace-delimited words with a vocabulary fitted on the corpus.
    Words,
}

impl std::str::FromStr for TokenizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bytes" => Ok(TokenizerKind::Bytes),
            "words" => Ok(TokenizerKind::Words),
            other => Err(format!("unknown tokenizer `{other}` (expected bytes|words)")),
        }
    }
}

/// A fitted tokenizer. Word vocabularies reserve id 0 for unknown words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Tokenizer {
    Bytes,
    Words { vocab: Vec<String> },
}

pub const UNKNOWN_WORD: &str = "<unk>";

impl Tokenizer {
    /// Fits a tokenizer of the given kind on a set of texts.
    pub fn fit<'a>(kind: TokenizerKind, texts: impl IntoIterator<Item = &'a str>) -> Self {
        match kind {
            TokenizerKind::Bytes => Tokenizer::Bytes,
            TokenizerKind::Words => {
                let words: BTreeSet<String> = texts
                    .into_iter()
                    .flat_map(|t| t.split_whitespace().map(str::to_lowercase))
                    .collect();
                let vocab = std::iter::once(UNKNOWN_WORD.to_string())
                    .chain(words.into_iter().filter(|w| w != UNKNOWN_WORD))
                    .collect();
                Tokenizer::Words { vocab }
            }
        }
    }

    pub fn kind(&self) -> TokenizerKind {
        match self {
            Tokenizer::Bytes => TokenizerKind::Bytes,
            Tokenizer::Words { .. } => TokenizerKind::Words,
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            Tokenizer::Bytes => 256,
            Tokenizer::Words { vocab } => vocab.len(),
        }
    }

    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        match self {
            Tokenizer::Bytes => text.bytes().map(TokenId::from).collect(),
            Tokenizer::Words { vocab } => {
                let index: HashMap<&str, TokenId> = vocab
                    .iter()
                    .enumerate()
                    .map(|(i, w)| (w.as_str(), i as TokenId))
                    .collect();
                text.split_whitespace()
                    .map(|w| index.get(w.to_lowercase().as_str()).copied().unwrap_or(0))
                    .collect()
            }
        }
    }

    /// Best-effort inverse of [`Tokenizer::encode`]; words are joined by single spaces.
    pub fn decode(&self, tokens: &[TokenId]) -> String {
        match self {
            Tokenizer::Bytes => {
                let bytes: Vec<u8> = tokens.iter().map(|&t| t as u8).collect();
                String::from_utf8_lossy(&bytes).into_owned()
            }
            Tokenizer::Words { vocab } => tokens
                .iter()
                .map(|&t| vocab.get(t as usize).map_or(UNKNOWN_WORD, String::as_str))
                .collect::<Vec<_>>()
                .join(" "),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_tokens_are_bytes() {
        let tok = Tokenizer::fit(TokenizerKind::Bytes, ["ignored"]);
        assert_eq!(tok.encode("ab ab"), vec![97, 98, 32, 97, 98]);
        assert_eq!(tok.vocab_size(), 256);
    }

    #[test]
    fn words_are_lowercased_and_unknowns_map_to_zero() {
        let tok = Tokenizer::fit(TokenizerKind::Words, ["The cat", "the Dog"]);
        assert_eq!(tok.vocab_size(), 4);
        let ids = tok.encode("THE cat bird");
        assert_eq!(ids.len(), 3);
        assert_eq!(ids[0], ids[0].max(1));
        assert_eq!(ids[2], 0);
        assert_eq!(tok.decode(&ids), "the cat <unk>");
    }
}
