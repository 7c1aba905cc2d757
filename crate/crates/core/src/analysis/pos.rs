//! Coarse part-of-speech tagging and per-label tag distributions.
//!
//! The tagger is a deterministic heuristic over whitespace tokens:
//! punctuation and numeral patterns first, then closed-class lexicons,
//! then suffix rules, defaulting to NOUN (or OTHER for tokens that are not
//! alphabetic words).

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledCorpus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Det,
    Adp,
    Conj,
    Num,
    Part,
    Punct,
    Other,
}

impl PosTag {
    pub const ALL: [PosTag; 12] = [
        PosTag::Noun,
        PosTag::Verb,
        PosTag::Adj,
        PosTag::Adv,
        PosTag::Pron,
        PosTag::Det,
        PosTag::Adp,
        PosTag::Conj,
        PosTag::Num,
        PosTag::Part,
        PosTag::Punct,
        PosTag::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Pron => "PRON",
            PosTag::Det => "DET",
            PosTag::Adp => "ADP",
            PosTag::Conj => "CONJ",
            PosTag::Num => "NUM",
            PosTag::Part => "PART",
            PosTag::Punct => "PUNCT",
            PosTag::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<PosTag> {
        PosTag::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

const DET: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "every", "each", "some", "any", "no",
    "all", "both", "either", "neither", "another", "such", "several",
];

const PRON: &[&str] = &[
    "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "he", "him", "his",
    "himself", "she", "her", "hers", "herself", "it", "its", "itself", "we", "us", "our", "ours",
    "ourselves", "they", "them", "their", "theirs", "themselves", "who", "whom", "whose", "what",
    "which", "someone", "somebody", "something", "anyone", "anybody", "anything", "everyone",
    "everybody", "everything", "nobody", "nothing", "one", "i'm", "it's", "they're", "we're",
    "you're", "i've", "that's",
];

const ADP: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "from", "up", "down", "over", "under", "across",
    "among", "around", "without", "within", "toward", "towards", "upon", "like", "than", "via",
    "despite", "per",
];

const CONJ: &[&str] = &[
    "and", "or", "but", "nor", "because", "although", "though", "while", "whereas", "unless",
    "if", "whether", "yet", "so",
];

const PART: &[&str] = &["to", "not", "n't", "'s", "'"];

const VERB: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "have", "has", "had", "do", "does",
    "did", "will", "would", "can", "could", "shall", "should", "may", "might", "must", "get",
    "got", "make", "made", "go", "went", "say", "said", "see", "think", "know", "take", "come",
    "want", "use", "find", "give", "tell", "help", "keep", "let", "put", "seem", "feel", "become",
    "leave", "mean", "need", "allow", "provide", "ensure", "don't", "can't", "won't", "isn't",
    "doesn't", "didn't",
];

const ADV: &[&str] = &[
    "very", "also", "often", "always", "never", "too", "just", "now", "then", "here", "there",
    "however", "still", "already", "even", "ever", "quite", "rather", "soon", "again", "almost",
    "perhaps", "maybe", "why", "how", "when", "where", "furthermore", "moreover", "additionally",
    "overall", "therefore", "thus", "instead", "well", "sometimes", "together", "only", "much",
];

const ADJ: &[&str] = &[
    "good", "new", "old", "great", "big", "small", "important", "many", "more", "most", "other",
    "few", "same", "different", "long", "high", "low", "best", "better", "bad", "large", "little",
    "own", "right", "sure", "free", "whole", "real", "main", "key", "crucial", "significant",
    "essential",
];

const NUMBER_WORDS: &[&str] = &[
    "zero", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "twenty", "thirty", "forty", "fifty", "hundred", "thousand", "million", "billion",
];

/// Deterministic rule-based tagger. Stateless, so it can be shared freely.
#[derive(Debug, Clone)]
pub struct HeuristicTagger {
    lexicon: HashMap<&'static str, PosTag>,
}

impl Default for HeuristicTagger {
    fn default() -> Self {
        Self::new()
    }
}

impl HeuristicTagger {
    pub fn new() -> Self {
        let mut lexicon = HashMap::new();
        // Later tables win on overlap; ordered from least to most specific.
        for (words, tag) in [
            (ADJ, PosTag::Adj),
            (ADV, PosTag::Adv),
            (VERB, PosTag::Verb),
            (ADP, PosTag::Adp),
            (CONJ, PosTag::Conj),
            (PRON, PosTag::Pron),
            (DET, PosTag::Det),
            (PART, PosTag::Part),
            (NUMBER_WORDS, PosTag::Num),
        ] {
            for w in words {
                lexicon.insert(*w, tag);
            }
        }
        Self { lexicon }
    }

    pub fn tag(&self, token: &str) -> PosTag {
        if token.is_empty() || token.chars().all(|c| !c.is_alphanumeric()) {
            return PosTag::Punct;
        }
        let lower = token.to_lowercase();
        let word = lower.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'');
        if is_numeral(word) {
            return PosTag::Num;
        }
        if let Some(tag) = self.lexicon.get(word) {
            return *tag;
        }
        if !word
            .chars()
            .all(|c| c.is_alphabetic() || c == '-' || c == '\'')
        {
            return PosTag::Other;
        }
        suffix_tag(word)
    }

    pub fn tag_text(&self, text: &str) -> Vec<PosTag> {
        text.split_whitespace().map(|t| self.tag(t)).collect()
    }
}

fn is_numeral(word: &str) -> bool {
    let mut digits = 0;
    for c in word.chars() {
        if c.is_ascii_digit() {
            digits += 1;
        } else if !matches!(c, '.' | ',' | '%' | '$' | '-' | '/') {
            return false;
        }
    }
    digits > 0
}

fn suffix_tag(word: &str) -> PosTag {
    let n = word.chars().count();
    let ends = |s: &str| word.ends_with(s) && n > s.len() + 2;
    if ends("ly") {
        PosTag::Adv
    } else if ["ous", "ful", "ive", "able", "ible", "less", "ical", "ish", "ial", "ant", "ent"]
        .iter()
        .any(|s| ends(s))
    {
        PosTag::Adj
    } else if ["ing", "ed", "ize", "ise", "ify"].iter().any(|s| ends(s)) {
        PosTag::Verb
    } else {
        PosTag::Noun
    }
}

/// Relative tag frequencies per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosDistribution {
    /// Labels with at least one token; frequencies ordered as [`PosTag::ALL`].
    pub per_label: BTreeMap<Label, Vec<f64>>,
}

impl PosDistribution {
    pub fn frequency(&self, label: Label, tag: PosTag) -> f64 {
        self.per_label
            .get(&label)
            .map_or(0.0, |f| f[tag.index()])
    }
}

fn normalize(counts: &[u64; 12]) -> Option<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    (total > 0).then(|| counts.iter().map(|&c| c as f64 / total as f64).collect())
}

fn distribution_from<'a>(
    items: impl Iterator<Item = (Label, &'a [PosTag])>,
) -> PosDistribution {
    let mut counts: BTreeMap<Label, [u64; 12]> = BTreeMap::new();
    for (label, tags) in items {
        let c = counts.entry(label).or_insert([0; 12]);
        for t in tags {
            c[t.index()] += 1;
        }
    }
    PosDistribution {
        per_label: counts
            .into_iter()
            .filter_map(|(l, c)| normalize(&c).map(|f| (l, f)))
            .collect(),
    }
}

pub fn pos_distribution(corpus: &LabeledCorpus) -> Result<PosDistribution> {
    let tagger = HeuristicTagger::new();
    let labels = corpus.labels()?;
    let tagged: Vec<Vec<PosTag>> = corpus.iter().map(|d| tagger.tag_text(&d.text)).collect();
    Ok(distribution_from(
        labels.into_iter().zip(tagged.iter().map(Vec::as_slice)),
    ))
}

/// Tag distribution over every document regardless of label.
pub fn pooled_pos(corpus: &LabeledCorpus) -> Vec<f64> {
    let tagger = HeuristicTagger::new();
    let mut counts = [0u64; 12];
    for doc in corpus {
        for t in tagger.tag_text(&doc.text) {
            counts[t.index()] += 1;
        }
    }
    normalize(&counts).unwrap_or_else(|| vec![1.0 / 12.0; 12])
}

#[derive(Deserialize)]
struct RawTagged {
    id: String,
    tags: Vec<String>,
}

/// Read externally produced tags: one `{"id": str, "tags": [str]}` per line.
pub fn read_pretagged(reader: impl BufRead) -> Result<HashMap<String, Vec<PosTag>>> {
    let mut out = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawTagged = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let tags = raw
            .tags
            .iter()
            .map(|t| {
                PosTag::parse(t).ok_or_else(|| Error::Parse {
                    line: i + 1,
                    message: format!("unknown tag `{t}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if out.insert(raw.id.clone(), tags).is_some() {
            return Err(Error::DuplicateId(raw.id));
        }
    }
    Ok(out)
}

/// Like [`pos_distribution`] but with tags supplied per document id.
pub fn pos_distribution_pretagged(
    corpus: &LabeledCorpus,
    tags: &HashMap<String, Vec<PosTag>>,
) -> Result<PosDistribution> {
    let mut items = Vec::with_capacity(corpus.len());
    for doc in corpus {
        let label = doc.require_label()?;
        let t = tags
            .get(&doc.id)
            .ok_or_else(|| Error::Invalid(format!("no tags for document `{}`", doc.id)))?;
        items.push((label, t.as_slice()));
    }
    Ok(distribution_from(items.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use proptest::prelude::*;

    fn one(text: &str) -> LabeledCorpus {
        LabeledCorpus::new("t", vec![Document::new("a", text, Some(Label::Human))]).unwrap()
    }

    #[test]
    fn det_noun() {
        let d = pos_distribution(&one("the cat")).unwrap();
        assert_eq!(d.frequency(Label::Human, PosTag::Det), 0.5);
        assert_eq!(d.frequency(Label::Human, PosTag::Noun), 0.5);
    }

    #[test]
    fn numerals_and_punctuation() {
        let d = pos_distribution(&one("42 ,")).unwrap();
        assert_eq!(d.frequency(Label::Human, PosTag::Num), 0.5);
        assert_eq!(d.frequency(Label::Human, PosTag::Punct), 0.5);
    }

    #[test]
    fn rules() {
        let t = HeuristicTagger::new();
        assert_eq!(t.tag("quickly"), PosTag::Adv);
        assert_eq!(t.tag("Running,"), PosTag::Verb);
        assert_eq!(t.tag("beautiful"), PosTag::Adj);
        assert_eq!(t.tag("and"), PosTag::Conj);
        assert_eq!(t.tag("to"), PosTag::Part);
        assert_eq!(t.tag("into"), PosTag::Adp);
        assert_eq!(t.tag("They"), PosTag::Pron);
        assert_eq!(t.tag("3.5%"), PosTag::Num);
        assert_eq!(t.tag("abc123"), PosTag::Other);
        assert_eq!(t.tag("..."), PosTag::Punct);
        assert_eq!(t.tag("school."), PosTag::Noun);
    }

    #[test]
    fn unlabeled_is_an_error() {
        let c = LabeledCorpus::new("t", vec![Document::new("a", "x", None)]).unwrap();
        assert!(pos_distribution(&c).is_err());
    }

    #[test]
    fn pretagged_path() {
        let src = "{\"id\":\"a\",\"tags\":[\"NOUN\",\"VERB\",\"NOUN\",\"PUNCT\"]}\n";
        let tags = read_pretagged(src.as_bytes()).unwrap();
        let d = pos_distribution_pretagged(&one("ignored"), &tags).unwrap();
        assert_eq!(d.frequency(Label::Human, PosTag::Noun), 0.5);
        assert_eq!(d.frequency(Label::Human, PosTag::Punct), 0.25);
        assert!(read_pretagged("{\"id\":\"a\",\"tags\":[\"XYZ\"]}".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn tagger_is_total_and_normalized(words in prop::collection::vec("[a-zA-Z0-9.,!'-]{1,9}", 1..40)) {
            let text = words.join(" ");
            let t = HeuristicTagger::new();
            prop_assert_eq!(t.tag_text(&text).len(), words.len());
            let d = pos_distribution(&one(&text)).unwrap();
            let sum: f64 = d.per_label[&Label::Human].iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}
