//! Lemma-grouped train/dev/test splitting with frequency-aware test sampling,
//! plus random sentence-level splits.
//!
//! Words sharing a lemma always land in the same partition. Test (then dev)
//! words are drawn uniformly among words at or below the 95th-percentile
//! frequency, so the held-out sets are dominated by uncommon words while a
//! drawn word still pulls its whole lemma group along, common lemma-mates
//! included.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::core::{EntryKind, Locale, PronunciationEntry};

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("ratios must be positive and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("sentence test fraction {0} outside [0.01, 0.10]")]
    BadFraction(f64),
    #[error("no lemma groups to split")]
    NoGroups,
    #[error("eligible pool exhausted for {partition} with achieved fraction {achieved:.4} (quota {quota:.4})")]
    PoolExhausted { partition: Partition, achieved: f64, quota: f64 },
    #[error("manifest file: {0}")]
    BadManifest(String),
    #[error("mixed locales or non-word entries in split input")]
    BadInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Test => "test",
        }
    }

    fn parse(s: &str) -> Result<Self, SplitError> {
        match s {
            "train" => Ok(Partition::Train),
            "dev" => Ok(Partition::Dev),
            "test" => Ok(Partition::Test),
            other => Err(SplitError::BadManifest(format!("unknown partition `{other}`"))),
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All word entries sharing one lemma.
#[derive(Debug, Clone)]
pub struct LemmaGroup {
    pub lemma: String,
    pub members: Vec<PronunciationEntry>,
}

/// Word frequencies; lookups are total, absent words count 0.
#[derive(Debug, Clone, Default)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
}

impl FrequencyTable {
    pub fn new(counts: HashMap<String, u64>) -> Self {
        FrequencyTable { counts }
    }

    pub fn get(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn insert(&mut self, word: impl Into<String>, count: u64) {
        self.counts.insert(word.into(), count);
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Read `word<TAB>count` lines.
    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let contents = fs::read_to_string(path)?;
        let mut counts = HashMap::new();
        for line in contents.lines() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((word, count)) = line.split_once('\t') {
                if let Ok(count) = count.trim().parse::<u64>() {
                    counts.insert(word.to_string(), count);
                }
            }
        }
        Ok(FrequencyTable { counts })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let sorted: BTreeMap<_, _> = self.counts.iter().collect();
        let mut out = String::new();
        for (word, count) in sorted {
            out.push_str(&format!("{word}\t{count}\n"));
        }
        fs::write(path, out)
    }
}

/// Deterministic assignment of lemma groups to partitions.
#[derive(Debug, Clone)]
pub struct SplitManifest {
    pub locale: Locale,
    pub seed: u64,
    pub requested: [f64; 3],
    pub achieved: [f64; 3],
    pub assignment: BTreeMap<String, Partition>,
    /// Duplicate lemma lines found when reading a manifest file.
    pub duplicates: Vec<String>,
    /// Words drawn directly from the eligible pool (as opposed to pulled in
    /// as lemma-mates), per partition.
    pub drawn_test: Vec<String>,
    pub drawn_dev: Vec<String>,
}

impl SplitManifest {
    pub fn partition_of(&self, lemma: &str) -> Option<Partition> {
        self.assignment.get(lemma).copied()
    }
}

/// Group word entries by `lemmatize(text)`, falling back to the entry's own
/// lemma field when present. Groups come back sorted by lemma.
pub fn group_by_lemma(
    entries: &[PronunciationEntry],
    lemmatize: &dyn Fn(&str) -> String,
) -> Result<Vec<LemmaGroup>, SplitError> {
    let mut locale: Option<&Locale> = None;
    let mut groups: BTreeMap<String, Vec<PronunciationEntry>> = BTreeMap::new();
    for entry in entries {
        if entry.kind != EntryKind::Word {
            return Err(SplitError::BadInput);
        }
        match locale {
            None => locale = Some(&entry.locale),
            Some(l) if *l == entry.locale => {}
            Some(_) => return Err(SplitError::BadInput),
        }
        let lemma = entry.lemma.clone().unwrap_or_else(|| lemmatize(&entry.text));
        groups.entry(lemma).or_default().push(entry.clone());
    }
    Ok(groups
        .into_iter()
        .map(|(lemma, members)| LemmaGroup { lemma, members })
        .collect())
}

/// Heuristic lemmatizer: exact-map lookup first, then longest-suffix
/// stripping provided the stem keeps at least three characters.
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    map: HashMap<String, String>,
    suffixes: Vec<String>,
}

pub const DEFAULT_SUFFIXES: [&str; 6] = ["s", "es", "ed", "ing", "er", "est"];

impl Default for Lemmatizer {
    fn default() -> Self {
        Lemmatizer {
            map: HashMap::new(),
            suffixes: DEFAULT_SUFFIXES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Lemmatizer {
    pub fn with_suffixes(suffixes: Vec<String>) -> Self {
        Lemmatizer { map: HashMap::new(), suffixes }
    }

    /// Read a `word<TAB>lemma` exact map that takes precedence over suffix rules.
    pub fn load_map(&mut self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let contents = fs::read_to_string(path)?;
        for line in contents.lines() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((word, lemma)) = line.split_once('\t') {
                self.map.insert(word.to_string(), lemma.to_string());
            }
        }
        Ok(())
    }

    pub fn lemma_of(&self, word: &str) -> String {
        let lowered = word.to_lowercase();
        if let Some(lemma) = self.map.get(&lowered).or_else(|| self.map.get(word)) {
            return lemma.clone();
        }
        let mut best: Option<&str> = None;
        for suffix in &self.suffixes {
            if lowered.ends_with(suffix.as_str())
                && lowered.chars().count() >= suffix.chars().count() + 3
                && best.map_or(true, |b| suffix.len() > b.len())
            {
                best = Some(suffix);
            }
        }
        match best {
            Some(suffix) => lowered[..lowered.len() - suffix.len()].to_string(),
            None => lowered,
        }
    }
}

/// Nearest-rank percentile over a multiset of frequencies.
fn nearest_rank_percentile(mut values: Vec<u64>, pct: f64) -> u64 {
    values.sort_unstable();
    let n = values.len();
    let rank = ((pct * n as f64).ceil() as usize).clamp(1, n);
    values[rank - 1]
}

const FREQUENCY_PERCENTILE: f64 = 0.95;

struct Drawer<'a> {
    groups: &'a [LemmaGroup],
    group_of_word: HashMap<&'a str, usize>,
    eligible: Vec<&'a str>,
    /// Eligible words per group, decremented as groups are assigned.
    group_eligible: Vec<usize>,
    assigned_groups: HashSet<usize>,
    remaining_eligible: usize,
    total_words: usize,
}

impl<'a> Drawer<'a> {
    /// Assign whole lemma groups to `partition` until its word count reaches
    /// `quota` words, drawing seed words uniformly from the unassigned
    /// eligible pool. Stops at the first crossing; overshoot is recorded by
    /// the caller, not corrected.
    fn fill(
        &mut self,
        partition: Partition,
        quota: f64,
        rng: &mut ChaCha20Rng,
        assignment: &mut BTreeMap<String, Partition>,
        drawn: &mut Vec<String>,
    ) -> Result<usize, SplitError> {
        let mut count = 0usize;
        while (count as f64) < quota {
            if self.remaining_eligible == 0 {
                return Err(SplitError::PoolExhausted {
                    partition,
                    achieved: count as f64 / self.total_words as f64,
                    quota: quota / self.total_words as f64,
                });
            }
            // Rejection-sample an unassigned eligible word; the distribution
            // stays uniform over the remaining pool.
            let word = loop {
                let candidate = self.eligible[rng.gen_range(0..self.eligible.len())];
                if !self.assigned_groups.contains(&self.group_of_word[candidate]) {
                    break candidate;
                }
            };
            let group_idx = self.group_of_word[word];
            let group = &self.groups[group_idx];
            self.assigned_groups.insert(group_idx);
            self.remaining_eligible -= self.group_eligible[group_idx];
            assignment.insert(group.lemma.clone(), partition);
            drawn.push(word.to_string());
            count += group.members.len();
        }
        Ok(count)
    }
}

/// Sample a lemma-disjoint 3-way split.
///
/// The 95th-percentile frequency cap is computed over word types (each word
/// counted once); test and dev seed words are drawn uniformly among words at
/// or below the cap, and each draw assigns the word's entire lemma group.
pub fn sample_split(
    groups: &[LemmaGroup],
    freqs: &FrequencyTable,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitManifest, SplitError> {
    let ratio_arr = [ratios.0, ratios.1, ratios.2];
    if ratio_arr.iter().any(|&r| r <= 0.0) || (ratio_arr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SplitError::BadRatios(ratio_arr));
    }
    if groups.is_empty() {
        return Err(SplitError::NoGroups);
    }
    let locale = groups[0].members[0].locale.clone();

    let mut group_of_word = HashMap::new();
    let mut frequencies = Vec::new();
    for (idx, group) in groups.iter().enumerate() {
        for member in &group.members {
            group_of_word.insert(member.text.as_str(), idx);
            frequencies.push(freqs.get(&member.text));
        }
    }
    let total_words = frequencies.len();
    let cap = nearest_rank_percentile(frequencies, FREQUENCY_PERCENTILE);
    let mut eligible = Vec::new();
    let mut group_eligible = vec![0usize; groups.len()];
    for (idx, group) in groups.iter().enumerate() {
        for member in &group.members {
            if freqs.get(&member.text) <= cap {
                eligible.push(member.text.as_str());
                group_eligible[idx] += 1;
            }
        }
    }

    let remaining_eligible = eligible.len();
    let mut drawer = Drawer {
        groups,
        group_of_word,
        eligible,
        group_eligible,
        assigned_groups: HashSet::new(),
        remaining_eligible,
        total_words,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    let mut drawn_test = Vec::new();
    let mut drawn_dev = Vec::new();

    let test_count = drawer.fill(
        Partition::Test,
        ratios.2 * total_words as f64,
        &mut rng,
        &mut assignment,
        &mut drawn_test,
    )?;
    let dev_count = drawer.fill(
        Partition::Dev,
        ratios.1 * total_words as f64,
        &mut rng,
        &mut assignment,
        &mut drawn_dev,
    )?;

    let mut train_count = 0usize;
    for group in groups {
        assignment.entry(group.lemma.clone()).or_insert_with(|| {
            train_count += group.members.len();
            Partition::Train
        });
    }

    let total = total_words as f64;
    Ok(SplitManifest {
        locale,
        seed,
        requested: ratio_arr,
        achieved: [train_count as f64 / total, dev_count as f64 / total, test_count as f64 / total],
        assignment,
        duplicates: Vec::new(),
        drawn_test,
        drawn_dev,
    })
}

/// The frequency cap `sample_split` would use for these groups; exposed for
/// verification.
pub fn frequency_cap(groups: &[LemmaGroup], freqs: &FrequencyTable) -> u64 {
    let frequencies: Vec<u64> = groups
        .iter()
        .flat_map(|g| g.members.iter())
        .map(|m| freqs.get(&m.text))
        .collect();
    nearest_rank_percentile(frequencies, FREQUENCY_PERCENTILE)
}

/// Random sentence-level split: a seeded uniform sample of `test_fraction`
/// (1-10%) goes to test, an optional dev fraction next, the rest to train.
pub fn split_sentences(
    entries: &[PronunciationEntry],
    test_fraction: f64,
    dev_fraction: f64,
    seed: u64,
) -> Result<Vec<(usize, Partition)>, SplitError> {
    if !(0.01..=0.10).contains(&test_fraction) {
        return Err(SplitError::BadFraction(test_fraction));
    }
    let n = entries.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    // Fisher-Yates.
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    let test_count = (test_fraction * n as f64).round() as usize;
    let dev_count = (dev_fraction * n as f64).round() as usize;
    let mut out: Vec<(usize, Partition)> = Vec::with_capacity(n);
    for (rank, &idx) in indices.iter().enumerate() {
        let partition = if rank < test_count {
            Partition::Test
        } else if rank < test_count + dev_count {
            Partition::Dev
        } else {
            Partition::Train
        };
        out.push((idx, partition));
    }
    out.sort_unstable_by_key(|&(idx, _)| idx);
    Ok(out)
}

/// Check a manifest against the groups it should cover. Returns one message
/// per violation; empty means the split is sound.
pub fn verify_split(manifest: &SplitManifest, groups: &[LemmaGroup]) -> Vec<String> {
    let mut violations = Vec::new();
    for duplicate in &manifest.duplicates {
        violations.push(format!("lemma `{duplicate}` assigned more than once"));
    }
    for group in groups {
        if !manifest.assignment.contains_key(&group.lemma) {
            violations.push(format!("lemma `{}` missing from manifest", group.lemma));
        }
    }
    violations
}

/// Write a manifest: a header line with locale/seed/ratios, then
/// `lemma<TAB>partition` lines sorted by lemma.
pub fn write_manifest(path: impl AsRef<Path>, manifest: &SplitManifest) -> std::io::Result<()> {
    let mut out = format!(
        "# locale={} seed={} ratios={:.4},{:.4},{:.4} achieved={:.4},{:.4},{:.4}\n",
        manifest.locale,
        manifest.seed,
        manifest.requested[0],
        manifest.requested[1],
        manifest.requested[2],
        manifest.achieved[0],
        manifest.achieved[1],
        manifest.achieved[2],
    );
    for (lemma, partition) in &manifest.assignment {
        out.push_str(&format!("{lemma}\t{partition}\n"));
    }
    fs::write(path, out)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<SplitManifest, SplitError> {
    let contents =
        fs::read_to_string(path.as_ref()).map_err(|e| SplitError::BadManifest(e.to_string()))?;
    let mut lines = contents.lines();
    let header = lines.next().ok_or_else(|| SplitError::BadManifest("empty file".to_string()))?;
    let mut locale = None;
    let mut seed = 0u64;
    let mut requested = [0.0; 3];
    let mut achieved = [0.0; 3];
    for field in header.trim_start_matches('#').split_whitespace() {
        if let Some((key, value)) = field.split_once('=') {
            match key {
                "locale" => locale = Some(crate::core::parse_locale(value).map_err(|e| SplitError::BadManifest(e.to_string()))?),
                "seed" => seed = value.parse().map_err(|_| SplitError::BadManifest(format!("bad seed `{value}`")))?,
                "ratios" => requested = parse_triple(value)?,
                "achieved" => achieved = parse_triple(value)?,
                _ => {}
            }
        }
    }
    let locale = locale.ok_or_else(|| SplitError::BadManifest("header missing locale".to_string()))?;

    let mut assignment = BTreeMap::new();
    let mut duplicates = Vec::new();
    for line in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (lemma, partition) = line
            .split_once('\t')
            .ok_or_else(|| SplitError::BadManifest(format!("bad line `{line}`")))?;
        let partition = Partition::parse(partition)?;
        if assignment.insert(lemma.to_string(), partition).is_some() {
            duplicates.push(lemma.to_string());
        }
    }
    Ok(SplitManifest {
        locale,
        seed,
        requested,
        achieved,
        assignment,
        duplicates,
        drawn_test: Vec::new(),
        drawn_dev: Vec::new(),
    })
}

fn parse_triple(s: &str) -> Result<[f64; 3], SplitError> {
    let parts: Vec<f64> = s.split(',').filter_map(|p| p.parse().ok()).collect();
    if parts.len() != 3 {
        return Err(SplitError::BadManifest(format!("bad triple `{s}`")));
    }
    Ok([parts[0], parts[1], parts[2]])
}

#[cfg(test)]
mod tests;
