//! Synthetic labeled corpora for desk-scale experiments.
//!
//! Human documents are sampled from a word-level bigram Markov chain over a
//! bundled seed text. LLM documents are built from sentence templates that
//! lean on a characteristic vocabulary. Every document mixes in some
//! sentences of the other style at a per-document rate, so the two classes
//! overlap and no classifier is perfect.
//!
//! The `ood` profile shifts topics (different seed text and slot fillers),
//! swaps part of the template set and produces much shorter documents.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Label, LabeledCorpus};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthProfile {
    #[default]
    Default,
    Ood,
}

impl SynthProfile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "default" | "in" | "in_dist" => Some(Self::Default),
            "ood" => Some(Self::Ood),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Default => "default",
            Self::Ood => "ood",
        }
    }
}

impl fmt::Display for SynthProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const ESSAY_SEED: &str = "\
Many students think that school should start later in the morning because they are tired. \
I think that is true for me and for most of my friends. When the bell rings at seven we are \
still half asleep and nobody is ready to learn math. My teacher says we should go to bed \
earlier but that is hard when you have homework and a job after school. Some people say \
that phones are the real problem because kids stay up late texting their friends. \
I do not agree with that completely. Phones can help you in class if you use them the right \
way, like looking up a word or checking the schedule for the bus. The school could make a \
rule that phones stay in your bag unless the teacher says it is fine. \
Community service is another thing people argue about. My older brother had to do forty hours \
at the food bank before he could graduate. At first he was mad about it but later he said it \
was the best part of the year because he met people he would never talk to otherwise. \
I think every student should try it even if it is not required, but making it a rule feels \
unfair to kids who already work to help their family pay rent. \
Cars are a big deal in my town because there is almost no bus after six. If you do not have a \
car you are stuck at home. My mom drives me to practice and then goes back to work, which is \
a lot of driving for one day. Some cities are trying to limit car usage and I can see why, \
the air is better and the streets are quieter, but here it would not work yet. \
Online classes were strange at first. You could sleep a little more and nobody saw if you \
wore pajamas. But it was really hard to ask questions and my grades went down. My friend did \
better online because she likes to work alone and go at her own speed. So maybe schools should \
let students pick what works for them instead of one plan for everybody. \
Summer projects are also a good idea if the student gets to choose the topic. Last year I built \
a small garden with my grandpa and wrote about how the tomatoes grew. If the teacher had picked \
the project I probably would have done the least amount of work possible. \
Honestly the most important thing is that adults listen to students before they decide. We are \
the ones sitting in the classroom every day and we know what helps and what does not. \
Sometimes it feels like the rules are made by people who forgot what it was like to be young. \
In the end I think a later start, fewer phone fights, and more choice would make school better \
for almost everyone I know.";

const NEWS_SEED: &str = "\
The storm moved up the coast overnight and knocked out power to about ten thousand homes near \
the harbor. Crews were out before dawn clearing branches from the main road into town. \
Fishermen said the boats were tied down early so most of the damage was on land. \
At the market on Saturday the bakery ran out of bread by nine, which the owner blamed on the \
cold weather keeping delivery trucks off the hill. She said people still lined up for coffee. \
The local team won its third game in a row on a late goal from the youngest player on the \
roster. The coach said the kid has been staying after practice all season to work on his shot. \
Fans rushed the field after the whistle and the ground crew did not seem to mind. \
Scientists at the university found a new species of beetle living under the bark of old oak \
trees in the park. The beetle is small and brown and easy to miss, one researcher said, \
which is probably why nobody noticed it before. They plan to count how many live in the park \
next spring. \
The city council voted to repair the bridge on river street after a long meeting that ran past \
midnight. Several neighbors spoke about the cracks they have watched grow over the years. \
The work should start in the summer and traffic will be moved to the old road for a few months. \
A chef from the north side opened a small noodle shop near the station last week. The menu is \
short and changes every day depending on what the farms bring in. The line went around the \
corner on opening night and the kitchen ran out of pork before eight. \
Weather forecasters expect more rain through the weekend with a chance of snow on the high \
roads. Drivers were told to keep extra water and a blanket in the car just in case.";

const LLM_VOCAB: &[&str] = &[
    "additionally", "furthermore", "moreover", "ultimately", "crucial", "essential",
    "significant", "numerous", "various", "comprehensive", "foster", "enhance", "ensure",
    "navigate", "landscape", "pivotal", "multifaceted", "valuable", "overall", "vital",
];

const LLM_TEMPLATES_SHARED: &[&str] = &[
    "Additionally, {topic} plays a crucial role in fostering {quality} among {group}.",
    "Furthermore, it is essential to consider how {topic} can enhance {quality} for {group}.",
    "Overall, {topic} offers numerous benefits that ensure a more {adj} experience.",
    "Moreover, {group} can navigate the {adj} landscape of {topic} with greater {quality}.",
    "Ultimately, embracing {topic} is a pivotal step toward a more {adj} future.",
];

const LLM_TEMPLATES_DEFAULT: &[&str] = &[
    "In conclusion, {topic} is a multifaceted issue that requires careful consideration.",
    "By prioritizing {topic}, {group} can develop valuable skills and significant {quality}.",
    "It is important to note that {topic} provides various opportunities for {group}.",
    "This comprehensive approach to {topic} ensures that {group} remain {adj} and engaged.",
    "There are several key reasons why {topic} is vital for {group} in today's society.",
];

const LLM_TEMPLATES_OOD: &[&str] = &[
    "Experts emphasize that {topic} represents a significant development for {group}.",
    "The impact of {topic} on {group} highlights the importance of {quality}.",
    "As a result, {topic} continues to shape a more {adj} environment for {group}.",
    "This underscores the vital need for {quality} when addressing {topic}.",
    "In summary, {topic} serves as a valuable reminder of the power of {quality}.",
];

struct Slots {
    topic: &'static [&'static str],
    group: &'static [&'static str],
    quality: &'static [&'static str],
    adj: &'static [&'static str],
}

const SLOTS_DEFAULT: Slots = Slots {
    topic: &[
        "community service", "online learning", "a later school start time", "limiting car usage",
        "the use of phones in class", "summer projects", "extracurricular activities",
    ],
    group: &["students", "teachers", "young people", "families", "communities"],
    quality: &["responsibility", "collaboration", "independence", "well-being", "engagement"],
    adj: &["balanced", "productive", "inclusive", "sustainable", "meaningful"],
};

const SLOTS_OOD: Slots = Slots {
    topic: &[
        "the new bridge repair", "coastal storm preparation", "the local food scene",
        "urban biodiversity research", "youth sports programs", "regional weather patterns",
    ],
    group: &["residents", "local businesses", "researchers", "city officials", "visitors"],
    quality: &["resilience", "innovation", "cooperation", "awareness", "safety"],
    adj: &["resilient", "vibrant", "informed", "connected", "thriving"],
};

struct Profile {
    seed_text: &'static str,
    templates: Vec<&'static str>,
    slots: &'static Slots,
    /// Inclusive range of sentences per document.
    sentences: (usize, usize),
    prefix: &'static str,
}

fn profile(p: SynthProfile) -> Profile {
    match p {
        SynthProfile::Default => Profile {
            seed_text: ESSAY_SEED,
            templates: LLM_TEMPLATES_SHARED.iter().chain(LLM_TEMPLATES_DEFAULT).copied().collect(),
            slots: &SLOTS_DEFAULT,
            sentences: (8, 14),
            prefix: "syn",
        },
        SynthProfile::Ood => Profile {
            seed_text: NEWS_SEED,
            templates: LLM_TEMPLATES_SHARED.iter().chain(LLM_TEMPLATES_OOD).copied().collect(),
            slots: &SLOTS_OOD,
            sentences: (3, 6),
            prefix: "ood",
        },
    }
}

/// Bigram successor table over whitespace tokens of the seed text.
struct MarkovChain<'a> {
    next: BTreeMap<&'a str, Vec<&'a str>>,
    starts: Vec<&'a str>,
}

fn ends_sentence(w: &str) -> bool {
    w.ends_with('.') || w.ends_with('?') || w.ends_with('!')
}

impl<'a> MarkovChain<'a> {
    fn new(text: &'a str) -> Self {
        let words: Vec<&str> = text.split_whitespace().collect();
        let mut next: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut starts = vec![words[0]];
        for pair in words.windows(2) {
            next.entry(pair[0]).or_default().push(pair[1]);
            if ends_sentence(pair[0]) {
                starts.push(pair[1]);
            }
        }
        Self { next, starts }
    }

    fn sentence(&self, rng: &mut SplitMix64) -> String {
        let mut w = self.starts[rng.below(self.starts.len())];
        let mut out = vec![w];
        while !ends_sentence(w) && out.len() < 30 {
            match self.next.get(w) {
                Some(succ) => w = succ[rng.below(succ.len())],
                None => break,
            }
            out.push(w);
        }
        let mut s = out.join(" ");
        if !ends_sentence(&s) {
            s.push('.');
        }
        s
    }
}

fn pick<'a>(rng: &mut SplitMix64, xs: &[&'a str]) -> &'a str {
    xs[rng.below(xs.len())]
}

fn template_sentence(p: &Profile, rng: &mut SplitMix64) -> String {
    let t = pick(rng, &p.templates);
    let mut s = t
        .replace("{topic}", pick(rng, p.slots.topic))
        .replace("{group}", pick(rng, p.slots.group))
        .replace("{quality}", pick(rng, p.slots.quality))
        .replace("{adj}", pick(rng, p.slots.adj));
    if rng.chance(0.3) {
        s.push(' ');
        let w = pick(rng, LLM_VOCAB);
        s.push_str(&format!("This is {w} to keep in mind."));
    }
    s
}

/// Upper bound of the per-document share of sentences written in the other
/// class's style. The share is drawn uniformly from `[0, FOREIGN_RATE_MAX)`.
pub const FOREIGN_RATE_MAX: f64 = 0.2;

fn document(p: &Profile, chain: &MarkovChain, label: Label, rng: &mut SplitMix64) -> String {
    let (lo, hi) = p.sentences;
    let n = lo + rng.below(hi - lo + 1);
    let rate = FOREIGN_RATE_MAX * rng.next_f64();
    let mut parts = Vec::with_capacity(n);
    for _ in 0..n {
        let human_style = (label == Label::Human) != rng.chance(rate);
        parts.push(if human_style {
            chain.sentence(rng)
        } else {
            template_sentence(p, rng)
        });
    }
    parts.join(" ")
}

/// A labeled corpus of `size` documents, `size / 3` of them LLM (rounded
/// down) and the rest human, in a seeded random order.
///
/// Document `i` depends only on `(seed, profile, i)`.
pub fn synth_corpus(size: usize, seed: u64, profile_kind: SynthProfile) -> Result<LabeledCorpus> {
    if size < 10 {
        return Err(Error::Invalid(format!("synthetic corpus size must be at least 10, got {size}")));
    }
    let p = profile(profile_kind);
    let chain = MarkovChain::new(p.seed_text);
    let n_llm = size / 3;
    let mut labels: Vec<Label> = (0..size)
        .map(|i| if i < n_llm { Label::Llm } else { Label::Human })
        .collect();
    SplitMix64::new(derive_seed(seed, u64::MAX)).shuffle(&mut labels);
    let documents = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let mut rng = SplitMix64::new(derive_seed(seed, i as u64));
            let text = document(&p, &chain, label, &mut rng);
            let mut d = Document::new(format!("{}-{i:05}", p.prefix), text, Some(label));
            d.source = Some(format!("synth-{profile_kind}"));
            d
        })
        .collect();
    LabeledCorpus::new(format!("synth-{profile_kind}"), documents)
}
