use std::fmt::Write as _;

use super::{tt_distance, RankingPermutation, TemplateError, TransitionTemplate};

/// Pooled visit statistics of one template, kept in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct TtVisitRecord {
    ordered_counts: Vec<u64>,
    reward_sum: f64,
}

impl TtVisitRecord {
    pub fn new(ordered_counts: Vec<u64>, reward_sum: f64) -> Self {
        Self {
            ordered_counts,
            reward_sum,
        }
    }

    pub fn ordered_counts(&self) -> &[u64] {
        &self.ordered_counts
    }

    pub fn reward_sum(&self) -> f64 {
        self.reward_sum
    }

    pub fn total(&self) -> u64 {
        self.ordered_counts.iter().sum()
    }

    /// Adds rank-ordered counts, zero-extending whichever side is shorter,
    /// then restores non-increasing order.
    fn add_ranked(&mut self, ranked: &[u64], reward_sum: f64) {
        if ranked.len() > self.ordered_counts.len() {
            self.ordered_counts.resize(ranked.len(), 0);
        }
        for (slot, c) in self.ordered_counts.iter_mut().zip(ranked) {
            *slot += c;
        }
        self.reward_sum += reward_sum;
        self.ordered_counts.sort_unstable_by(|a, b| b.cmp(a));
    }
}

/// The set of known templates together with their pooled visit records.
///
/// Templates are never merged or removed; indices are stable for the life of
/// the library.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateLibrary {
    templates: Vec<TransitionTemplate>,
    records: Vec<TtVisitRecord>,
}

impl TemplateLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn templates(&self) -> &[TransitionTemplate] {
        &self.templates
    }

    pub fn records(&self) -> &[TtVisitRecord] {
        &self.records
    }

    pub fn template(&self, index: usize) -> Result<&TransitionTemplate, TemplateError> {
        self.templates.get(index).ok_or(TemplateError::NoSuchTemplate {
            index,
            len: self.len(),
        })
    }

    pub fn record(&self, index: usize) -> Result<&TtVisitRecord, TemplateError> {
        self.records.get(index).ok_or(TemplateError::NoSuchTemplate {
            index,
            len: self.len(),
        })
    }

    /// Sum of pooled visit counts over all templates.
    pub fn total_pooled(&self) -> u64 {
        self.records.iter().map(TtVisitRecord::total).sum()
    }

    /// Appends a new template and returns its index.
    pub fn insert(&mut self, template: TransitionTemplate, record: TtVisitRecord) -> usize {
        self.templates.push(template);
        self.records.push(record);
        self.templates.len() - 1
    }

    /// Index of the template closest to `candidate`, if that distance is
    /// strictly below `gap`. Equidistant templates resolve to the lowest index.
    pub fn find_closest(&self, candidate: &TransitionTemplate, gap: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, g) in self.templates.iter().enumerate() {
            let d = tt_distance(g, candidate);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.filter(|&(_, d)| d < gap).map(|(i, _)| i)
    }

    /// Adds a pair's visit counts to a template after sorting them
    /// descending, then renormalises the template.
    pub fn tt_update(
        &mut self,
        index: usize,
        counts: &[u64],
        reward_sum: f64,
    ) -> Result<(), TemplateError> {
        let mut ranked = counts.to_vec();
        ranked.sort_unstable_by(|a, b| b.cmp(a));
        self.add_ranked(index, &ranked, reward_sum)
    }

    /// Adds counts to a template in the rank order fixed by `sigma`, rather
    /// than by sorting them. Used for visits gathered after a pair's ranking
    /// was frozen.
    pub fn contribute(
        &mut self,
        index: usize,
        counts: &[u64],
        reward_sum: f64,
        sigma: &RankingPermutation,
    ) -> Result<(), TemplateError> {
        let ranked = sigma.apply(counts);
        self.add_ranked(index, &ranked, reward_sum)
    }

    fn add_ranked(
        &mut self,
        index: usize,
        ranked: &[u64],
        reward_sum: f64,
    ) -> Result<(), TemplateError> {
        let len = self.len();
        let record = self
            .records
            .get_mut(index)
            .ok_or(TemplateError::NoSuchTemplate { index, len })?;
        if ranked.iter().all(|&c| c == 0) && reward_sum == 0.0 {
            return Ok(());
        }
        record.add_ranked(ranked, reward_sum);
        self.templates[index] =
            TransitionTemplate::from_ordered_counts(&record.ordered_counts, record.reward_sum)?;
        Ok(())
    }

    /// The template's pooled counts mapped back into a pair's state order via
    /// `sigma^-1`, together with the pooled reward.
    pub fn augment(
        &self,
        index: usize,
        sigma: &RankingPermutation,
    ) -> Result<(Vec<u64>, f64), TemplateError> {
        let record = self.record(index)?;
        let counts = sigma
            .apply_inverse(&record.ordered_counts)
            .ok_or_else(|| TemplateError::LengthMismatch {
                support: support_len(&record.ordered_counts),
                len: sigma.len(),
            })?;
        Ok((counts, record.reward_sum))
    }

    /// Serialises the library, one template per line:
    ///
    /// ```text
    /// # temple-templates v1
    /// # support<TAB>probs<TAB>reward<TAB>pooled_counts<TAB>pooled_reward
    /// 3	0.6 0.2 0.2	0	600 200 200	0
    /// ```
    ///
    /// The pooled columns are authoritative; the probability and reward
    /// columns are derived and only checked for shape on read.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# temple-templates v1\n");
        out.push_str("# support\tprobs\treward\tpooled_counts\tpooled_reward\n");
        for (g, r) in self.templates.iter().zip(&self.records) {
            let probs: Vec<String> = g.probs().iter().map(|p| p.to_string()).collect();
            let counts: Vec<String> = r.ordered_counts[..support_len(&r.ordered_counts)]
                .iter()
                .map(|c| c.to_string())
                .collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                g.support_len(),
                probs.join(" "),
                g.reward(),
                counts.join(" "),
                r.reward_sum
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TemplateError> {
        let mut library = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| TemplateError::Parse {
                line: i + 1,
                message: message.to_string(),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(err("expected 5 tab-separated fields"));
            }
            let support: usize = fields[0].trim().parse().map_err(|_| err("bad support length"))?;
            let probs = fields[1].split_whitespace().count();
            let counts = fields[3]
                .split_whitespace()
                .map(str::parse::<u64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| err("bad pooled count"))?;
            let reward_sum: f64 = fields[4].trim().parse().map_err(|_| err("bad pooled reward"))?;
            if probs != support || support_len(&counts) != support {
                return Err(err("support length disagrees with the listed values"));
            }
            if counts.windows(2).any(|w| w[0] < w[1]) {
                return Err(err("pooled counts must be non-increasing"));
            }
            let template = TransitionTemplate::from_ordered_counts(&counts, reward_sum)
                .map_err(|e| err(&e.to_string()))?;
            library.insert(template, TtVisitRecord::new(counts, reward_sum));
        }
        Ok(library)
    }
}

fn support_len(counts: &[u64]) -> usize {
    counts.iter().rposition(|&c| c > 0).map_or(1, |i| i + 1)
}
