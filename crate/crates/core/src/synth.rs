//! Synthetic tweet stream with topic structure and quote/reply links,
//! written in the archive JSON-lines schema so the full pipeline can run
//! on it unchanged.
//!
//! Every tweet belongs to a topic. Its tokens are drawn from that topic's
//! private word pool, except a `noise` fraction drawn from a pool shared by
//! all topics. A response always belongs to its target's topic and reuses
//! one topic word of the target. Raw texts carry mentions, URLs and mixed
//! case so cleaning has work to do.
//!
//! `pairs_per_topic` single-response threads are generated per topic
//! (alternating quote and reply), plus `rich_targets` targets per relation
//! kind with [`RICH_RESPONSES`] responses each, which are the ones eligible
//! for ranking benchmarks.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::ingest::RelationKind;

pub const RICH_RESPONSES: usize = 6;
pub const MIN_TOKENS: usize = 8;
pub const MAX_TOKENS: usize = 16;
const ID_BASE: u64 = 1_330_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub topics: usize,
    pub pairs_per_topic: usize,
    pub vocab_size: usize,
    pub noise: f64,
    pub seed: u64,
    pub rich_targets: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            topics: 50,
            pairs_per_topic: 40,
            vocab_size: 5000,
            noise: 0.3,
            seed: 42,
            rich_targets: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        if self.topics < 2 {
            p.push(format!("topics must be at least 2, got {}", self.topics));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            p.push(format!("noise must lie in [0, 1], got {}", self.noise));
        }
        if self.vocab_size < 2 * self.topics.max(1) + 1 {
            p.push(format!(
                "vocab_size {} too small for {} topics (need at least {})",
                self.vocab_size,
                self.topics,
                2 * self.topics + 1
            ));
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Usage(p.join("; ")))
        }
    }

    /// Number of relation edges the generator emits.
    pub fn edge_count(&self) -> usize {
        self.topics * self.pairs_per_topic + 2 * self.rich_targets * RICH_RESPONSES
    }
}

/// One generated relation, for tests that need the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthEdge {
    pub kind: RelationKind,
    pub topic: usize,
    pub target_id: String,
    pub response_id: String,
    pub target_topic_words: Vec<String>,
    pub response_topic_words: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    /// Archive-schema JSON lines.
    pub lines: Vec<String>,
    pub edges: Vec<SynthEdge>,
}

fn make_words(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    const ONSETS: [&str; 16] = [
        "b", "c", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
    ];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=4);
        let w: String = (0..syllables)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS[rng.gen_range(0..16)],
                    VOWELS[rng.gen_range(0..5)]
                )
            })
            .collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
    noise_pool: Vec<String>,
    topic_pools: Vec<Vec<String>>,
    next_id: u64,
    next_user: u64,
    lines: Vec<String>,
    edges: Vec<SynthEdge>,
}

struct Tweet {
    id: String,
    text: String,
    topic_words: Vec<String>,
}

impl<'a> Generator<'a> {
    fn new(cfg: &'a SynthConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut words = make_words(cfg.vocab_size, &mut rng);
        words.shuffle(&mut rng);
        let noise_n = (cfg.vocab_size / 5).max(1);
        let noise_pool = words.split_off(words.len() - noise_n);
        let per_topic = words.len() / cfg.topics;
        let topic_pools = (0..cfg.topics)
            .map(|t| words[t * per_topic..(t + 1) * per_topic].to_vec())
            .collect();
        Self {
            cfg,
            rng,
            noise_pool,
            topic_pools,
            next_id: ID_BASE,
            next_user: 0,
            lines: Vec::new(),
            edges: Vec::new(),
        }
    }

    fn fresh_id(&mut self) -> String {
        self.next_id += 1;
        self.next_id.to_string()
    }

    /// Cleaned-content words and the raw text wrapped in tweet noise.
    fn compose(&mut self, topic: usize, echo: Option<&[String]>) -> (String, Vec<String>) {
        let len = self.rng.gen_range(MIN_TOKENS..=MAX_TOKENS);
        let n_noise = ((self.cfg.noise * len as f64).round() as usize).min(len);
        let mut slots: Vec<bool> = (0..len).map(|i| i < n_noise).collect();
        slots.shuffle(&mut self.rng);
        let mut words = Vec::with_capacity(len);
        let mut topic_words = Vec::new();
        let mut echoed = false;
        for is_noise in slots {
            let w = if is_noise {
                self.noise_pool[self.rng.gen_range(0..self.noise_pool.len())].clone()
            } else {
                let w = match echo {
                    Some(src) if !echoed && !src.is_empty() => {
                        echoed = true;
                        src[self.rng.gen_range(0..src.len())].clone()
                    }
                    _ => {
                        let pool = &self.topic_pools[topic];
                        pool[self.rng.gen_range(0..pool.len())].clone()
                    }
                };
                topic_words.push(w.clone());
                w
            };
            words.push(w);
        }
        let mut text = String::new();
        if self.rng.gen_bool(0.3) {
            self.next_user += 1;
            text.push_str(&format!("@user{} ", self.next_user));
        }
        for (i, w) in words.iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            if self.rng.gen_bool(0.1) {
                text.push_str(&w.to_uppercase());
            } else {
                text.push_str(w);
            }
        }
        if self.rng.gen_bool(0.2) {
            let tag: u32 = self.rng.gen();
            text.push_str(&format!(" https://t.co/{tag:x}"));
        }
        (text, topic_words)
    }

    fn original(&mut self, topic: usize) -> Tweet {
        let id = self.fresh_id();
        let (text, topic_words) = self.compose(topic, None);
        self.lines
            .push(json!({ "id_str": id, "text": text, "lang": "en" }).to_string());
        Tweet {
            id,
            text,
            topic_words,
        }
    }

    fn respond(&mut self, kind: RelationKind, topic: usize, target: &Tweet) {
        let id = self.fresh_id();
        let (text, topic_words) = self.compose(topic, Some(&target.topic_words));
        let line = match kind {
            RelationKind::Quote => json!({
                "id_str": id,
                "text": text,
                "lang": "en",
                "quoted_status": { "id_str": target.id, "text": target.text, "lang": "en" },
            }),
            RelationKind::Reply => json!({
                "id_str": id,
                "text": text,
                "lang": "en",
                "in_reply_to_status_id_str": target.id,
            }),
        };
        self.lines.push(line.to_string());
        self.edges.push(SynthEdge {
            kind,
            topic,
            target_id: target.id.clone(),
            response_id: id,
            target_topic_words: target.topic_words.clone(),
            response_topic_words: topic_words,
        });
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut g = Generator::new(cfg);
    let mut k = 0usize;
    for topic in 0..cfg.topics {
        for _ in 0..cfg.pairs_per_topic {
            let kind = if k.is_multiple_of(2) {
                RelationKind::Quote
            } else {
                RelationKind::Reply
            };
            k += 1;
            let target = g.original(topic);
            g.respond(kind, topic, &target);
        }
    }
    for kind in [RelationKind::Quote, RelationKind::Reply] {
        for r in 0..cfg.rich_targets {
            let topic = r % cfg.topics;
            let target = g.original(topic);
            for _ in 0..RICH_RESPONSES {
                g.respond(kind, topic, &target);
            }
        }
    }
    Ok(SynthOutput {
        lines: g.lines,
        edges: g.edges,
    })
}
