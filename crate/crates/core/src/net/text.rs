use serde::{Deserialize, Serialize};

use crate::motion::Transcript;

/// Word list for the text encoder's embedding table.
///
/// Row 0 is the padding row used for silent frames, rows `1..=V` hold known
/// words and the remaining `buckets` rows are shared by unknown words through
/// a stable hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    words: Vec<String>,
    buckets: usize,
}

fn normalize(w: &str) -> String {
    w.trim()
        .trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
        .to_lowercase()
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

impl Vocabulary {
    pub fn new<S: AsRef<str>>(words: impl IntoIterator<Item = S>, buckets: usize) -> Self {
        let mut words: Vec<String> = words
            .into_iter()
            .map(|w| normalize(w.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        words.sort();
        words.dedup();
        Self {
            words,
            buckets: buckets.max(1),
        }
    }

    pub fn from_transcripts<'a>(ts: impl IntoIterator<Item = &'a Transcript>, buckets: usize) -> Self {
        Self::new(
            ts.into_iter().flat_map(|t| t.words.iter().map(|w| w.text.as_str())),
            buckets,
        )
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Embedding table rows.
    pub fn rows(&self) -> usize {
        1 + self.words.len() + self.buckets
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.binary_search(&normalize(word)).is_ok()
    }

    pub fn row(&self, word: &str) -> usize {
        let w = normalize(word);
        match self.words.binary_search(&w) {
            Ok(i) => 1 + i,
            Err(_) => 1 + self.words.len() + (fnv1a(&w) % self.buckets as u64) as usize,
        }
    }

    /// Embedding row per frame; 0 where no word is spoken.
    pub fn frame_rows(&self, transcript: &Transcript, frames: usize) -> Vec<usize> {
        transcript
            .frame_words(frames)
            .into_iter()
            .map(|w| w.map_or(0, |i| self.row(&transcript.words[i].text)))
            .collect()
    }
}
