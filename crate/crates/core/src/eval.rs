//! Transcription-fidelity metrics (WER, WIL) from edit-distance alignment,
//! and stochastic-dominance significance analysis over per-utterance scores.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Counts from a minimal-edit alignment of a reference/hypothesis pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentCounts {
    /// Reference length.
    pub n: usize,
    /// Correct words.
    pub c: usize,
    /// Substitutions.
    pub s: usize,
    /// Deletions.
    pub d: usize,
    /// Insertions.
    pub i: usize,
    /// Hypothesis length.
    pub p: usize,
}

/// Lowercase, strip punctuation, collapse whitespace, split into words.
pub fn normalize_words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|w| {
            let cleaned: String = w
                .chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .flat_map(|c| c.to_lowercase())
                .collect();
            if cleaned.is_empty() {
                None
            } else {
                Some(cleaned)
            }
        })
        .collect()
}

/// Minimal-edit alignment with unit costs. Cost ties are broken by a fixed
/// preference order: match/substitution, then deletion, then insertion.
pub fn align(reference: &[String], hypothesis: &[String]) -> AlignmentCounts {
    let n = reference.len();
    let p = hypothesis.len();
    // cost[i][j]: edits to turn reference[..i] into hypothesis[..j]
    let mut cost = vec![vec![0usize; p + 1]; n + 1];
    // 0 = diagonal, 1 = deletion, 2 = insertion
    let mut step = vec![vec![0u8; p + 1]; n + 1];
    for i in 1..=n {
        cost[i][0] = i;
        step[i][0] = 1;
    }
    for j in 1..=p {
        cost[0][j] = j;
        step[0][j] = 2;
    }
    for i in 1..=n {
        for j in 1..=p {
            let sub = if reference[i - 1] == hypothesis[j - 1] { 0 } else { 1 };
            let diag = cost[i - 1][j - 1] + sub;
            let del = cost[i - 1][j] + 1;
            let ins = cost[i][j - 1] + 1;
            let (best, which) = if diag <= del && diag <= ins {
                (diag, 0)
            } else if del <= ins {
                (del, 1)
            } else {
                (ins, 2)
            };
            cost[i][j] = best;
            step[i][j] = which;
        }
    }
    let (mut i, mut j) = (n, p);
    let (mut c, mut s, mut d, mut ins) = (0usize, 0usize, 0usize, 0usize);
    while i > 0 || j > 0 {
        match step[i][j] {
            0 => {
                if reference[i - 1] == hypothesis[j - 1] {
                    c += 1;
                } else {
                    s += 1;
                }
                i -= 1;
                j -= 1;
            }
            1 => {
                d += 1;
                i -= 1;
            }
            _ => {
                ins += 1;
                j -= 1;
            }
        }
    }
    AlignmentCounts { n, c, s, d, i: ins, p }
}

/// Word error rate (S+D+I)/N.
pub fn wer(counts: &AlignmentCounts) -> Result<f64> {
    if counts.n == 0 {
        return Err(Error::domain("WER undefined for an empty reference"));
    }
    Ok((counts.s + counts.d + counts.i) as f64 / counts.n as f64)
}

/// Which WIL formula to apply. The published formula reduces to (S+D)/N with
/// S read as substitutions; the conventional definition is 1 - (C/N)(C/P).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilVariant {
    Paper,
    Standard,
}

impl WilVariant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "standard" => Ok(Self::Standard),
            _ => Err(Error::config(format!("unknown WIL variant `{s}`"))),
        }
    }
}

/// Word information lost.
pub fn wil(counts: &AlignmentCounts, variant: WilVariant) -> Result<f64> {
    if counts.n == 0 {
        return Err(Error::domain("WIL undefined for an empty reference"));
    }
    match variant {
        WilVariant::Paper => Ok((counts.s + counts.d) as f64 / counts.n as f64),
        WilVariant::Standard => {
            if counts.c == 0 {
                return Ok(1.0);
            }
            let c = counts.c as f64;
            Ok(1.0 - (c / counts.n as f64) * (c / counts.p as f64))
        }
    }
}

/// Paired per-utterance metric values for two systems.
#[derive(Debug, Clone)]
pub struct ScoreSample {
    pub system_a: Vec<f64>,
    pub system_b: Vec<f64>,
    pub metric_name: String,
    pub higher_is_better: bool,
}

impl ScoreSample {
    pub fn validate(&self) -> Result<()> {
        if self.system_a.len() != self.system_b.len() {
            return Err(Error::domain("score samples must have equal lengths"));
        }
        if self.system_a.len() < 2 {
            return Err(Error::domain("need at least 2 samples per system"));
        }
        if self.system_a.iter().chain(&self.system_b).any(|x| !x.is_finite()) {
            return Err(Error::data("scores contain non-finite values"));
        }
        Ok(())
    }
}

/// Almost-stochastic-order outcome categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominanceLabel {
    /// epsilon == 0
    Dominant,
    /// 0 < epsilon <= 0.5
    SignificantlyBetter,
    /// epsilon > 0.5
    NotSignificant,
}

impl DominanceLabel {
    pub fn from_epsilon(eps: f64) -> Self {
        if eps == 0.0 {
            Self::Dominant
        } else if eps <= 0.5 {
            Self::SignificantlyBetter
        } else {
            Self::NotSignificant
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Dominant => "dominant",
            Self::SignificantlyBetter => "significantly_better",
            Self::NotSignificant => "not_significant",
        }
    }

    /// Table cell glyph: filled check for dominance, check for significance,
    /// cross otherwise.
    pub fn glyph(&self) -> &'static str {
        match self {
            Self::Dominant => "✓✓",
            Self::SignificantlyBetter => "✓",
            Self::NotSignificant => "✗",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AsoResult {
    /// Bootstrap-corrected upper bound on the violation ratio.
    pub epsilon: f64,
    /// Uncorrected violation ratio from the empirical inverse CDFs.
    pub violation_ratio: f64,
    /// Standard deviation of the bootstrap violation ratios.
    pub bootstrap_std: f64,
    pub label: DominanceLabel,
}

/// Exact violation/total squared-difference integrals between the empirical
/// inverse CDFs of two sorted samples. Both quantile functions are step
/// functions, so the integral over (0, 1] is a finite sum over the merged
/// breakpoint grid.
fn quantile_integrals(a_sorted: &[f64], b_sorted: &[f64]) -> (f64, f64) {
    let n = a_sorted.len();
    let m = b_sorted.len();
    let mut grid: Vec<f64> = Vec::with_capacity(n + m + 1);
    grid.push(0.0);
    grid.extend((1..=n).map(|k| k as f64 / n as f64));
    grid.extend((1..=m).map(|k| k as f64 / m as f64));
    grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    grid.dedup();
    let mut violation = 0.0;
    let mut total = 0.0;
    for w in grid.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let width = hi - lo;
        if width <= 0.0 {
            continue;
        }
        let t_mid = 0.5 * (lo + hi);
        let ia = ((t_mid * n as f64).ceil() as usize).clamp(1, n) - 1;
        let ib = ((t_mid * m as f64).ceil() as usize).clamp(1, m) - 1;
        let diff = a_sorted[ia] - b_sorted[ib];
        let sq = diff * diff * width;
        total += sq;
        if diff < 0.0 {
            // B's quantile exceeds A's: violation of "A stochastically larger".
            violation += sq;
        }
    }
    (violation, total)
}

/// Violation ratio of "A is stochastically larger than B" computed from the
/// inverse CDFs. 0 = full dominance of A, 1 = full dominance of B, 0.5 when
/// the empirical distributions coincide.
pub fn violation_ratio(a: &[f64], b: &[f64]) -> f64 {
    let mut a_sorted = a.to_vec();
    let mut b_sorted = b.to_vec();
    a_sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b_sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (violation, total) = quantile_integrals(&a_sorted, &b_sorted);
    if total <= f64::EPSILON * f64::EPSILON {
        0.5
    } else {
        violation / total
    }
}

/// Almost-stochastic-order test of "system A is better than system B".
///
/// Scores are oriented so that larger is better before testing. The returned
/// epsilon is the violation ratio plus a one-sided normal bootstrap
/// correction at level `alpha`, clamped to [0, 1].
pub fn aso_epsilon(
    scores: &ScoreSample,
    alpha: f64,
    n_bootstrap: usize,
    seed: u64,
) -> Result<AsoResult> {
    scores.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha must lie in (0, 1)"));
    }
    if n_bootstrap == 0 {
        return Err(Error::domain("n_bootstrap must be positive"));
    }
    let orient = |v: &[f64]| -> Vec<f64> {
        if scores.higher_is_better {
            v.to_vec()
        } else {
            v.iter().map(|x| -x).collect()
        }
    };
    let a = orient(&scores.system_a);
    let b = orient(&scores.system_b);
    let eps_hat = violation_ratio(&a, &b);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boots = Vec::with_capacity(n_bootstrap);
    for _ in 0..n_bootstrap {
        let ra: Vec<f64> = (0..a.len()).map(|_| a[rng.random_range(0..a.len())]).collect();
        let rb: Vec<f64> = (0..b.len()).map(|_| b[rng.random_range(0..b.len())]).collect();
        boots.push(violation_ratio(&ra, &rb));
    }
    let mean = boots.iter().sum::<f64>() / boots.len() as f64;
    let var = boots.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / boots.len() as f64;
    let std = var.sqrt();
    let corrected = (eps_hat - normal_inverse_cdf(alpha) * std).clamp(0.0, 1.0);
    Ok(AsoResult {
        epsilon: corrected,
        violation_ratio: eps_hat,
        bootstrap_std: std,
        label: DominanceLabel::from_epsilon(corrected),
    })
}

/// Inverse CDF of the standard normal distribution (Acklam's rational
/// approximation, relative error below 1.2e-9).
pub fn normal_inverse_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Pairwise dominance table (rows compared against columns) plus per-system
/// mean and standard deviation.
#[derive(Debug, Clone)]
pub struct DominanceTable {
    pub metric_name: String,
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub epsilons: Vec<Vec<Option<f64>>>,
    pub labels: Vec<Vec<Option<DominanceLabel>>>,
}

/// Run ASO for every ordered system pair. Each cell tests "row better than
/// column" on the shared utterance set.
pub fn dominance_matrix(
    systems: &[(String, Vec<f64>)],
    metric_name: &str,
    higher_is_better: bool,
    alpha: f64,
    n_bootstrap: usize,
    seed: u64,
) -> Result<DominanceTable> {
    if systems.len() < 2 {
        return Err(Error::domain("dominance matrix needs at least two systems"));
    }
    let len = systems[0].1.len();
    for (name, scores) in systems {
        if scores.len() != len {
            return Err(Error::domain(format!(
                "system `{name}` has {} scores, expected {len}",
                scores.len()
            )));
        }
    }
    let names: Vec<String> = systems.iter().map(|(n, _)| n.clone()).collect();
    let means: Vec<f64> =
        systems.iter().map(|(_, v)| v.iter().sum::<f64>() / v.len() as f64).collect();
    let stds: Vec<f64> = systems
        .iter()
        .zip(&means)
        .map(|((_, v), &m)| {
            (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
        })
        .collect();
    let mut labels = vec![vec![None; systems.len()]; systems.len()];
    let mut epsilons = vec![vec![None; systems.len()]; systems.len()];
    for (r, (_, row_scores)) in systems.iter().enumerate() {
        for (c, (_, col_scores)) in systems.iter().enumerate() {
            if r == c {
                continue;
            }
            let sample = ScoreSample {
                system_a: row_scores.clone(),
                system_b: col_scores.clone(),
                metric_name: metric_name.to_string(),
                higher_is_better,
            };
            // Derive a per-cell seed so cell order never matters.
            let cell_seed = seed ^ ((r as u64) << 32) ^ (c as u64);
            let res = aso_epsilon(&sample, alpha, n_bootstrap, cell_seed)?;
            epsilons[r][c] = Some(res.epsilon);
            labels[r][c] = Some(res.label);
        }
    }
    Ok(DominanceTable {
        metric_name: metric_name.to_string(),
        names,
        means,
        stds,
        epsilons,
        labels,
    })
}

impl DominanceTable {
    /// Tab-separated rendering: one row per system with mean, std, and one
    /// cell per column system.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("metric\t{}\n", self.metric_name));
        out.push_str("system\tavg\tstd");
        for name in &self.names {
            out.push('\t');
            out.push_str(name);
        }
        out.push('\n');
        for (r, name) in self.names.iter().enumerate() {
            out.push_str(&format!("{name}\t{:.6}\t{:.6}", self.means[r], self.stds[r]));
            for c in 0..self.names.len() {
                out.push('\t');
                match self.labels[r][c] {
                    None => out.push('-'),
                    Some(l) => out.push_str(l.as_str()),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Human-readable report with glyph cells and epsilon values.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "Stochastic dominance ({}), rows compared against columns\n",
            self.metric_name
        ));
        for (r, name) in self.names.iter().enumerate() {
            out.push_str(&format!(
                "{:<16} avg={:<10.4} std={:<10.4}",
                name, self.means[r], self.stds[r]
            ));
            for c in 0..self.names.len() {
                let cell = match (self.labels[r][c], self.epsilons[r][c]) {
                    (Some(l), Some(e)) => format!("{} (eps={:.3})", l.glyph(), e),
                    _ => "-".to_string(),
                };
                out.push_str(&format!(" | {cell:<22}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Read a `utterance_id,score` CSV. Returns rows in file order.
pub fn read_score_file(path: &Path) -> Result<Vec<(String, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, value) = line.split_once(',').ok_or_else(|| {
            Error::data(format!("{}:{}: expected `id,score`", path.display(), lineno + 1))
        })?;
        let score: f64 = value.trim().parse().map_err(|_| {
            Error::data(format!("{}:{}: invalid score `{value}`", path.display(), lineno + 1))
        })?;
        rows.push((id.trim().to_string(), score));
    }
    if rows.is_empty() {
        return Err(Error::data(format!("{}: no scores", path.display())));
    }
    Ok(rows)
}

/// Pair score files by utterance id; every system must cover the same ids.
pub fn paired_scores(files: &[(String, Vec<(String, f64)>)]) -> Result<Vec<(String, Vec<f64>)>> {
    let reference: BTreeMap<&str, usize> =
        files[0].1.iter().enumerate().map(|(i, (id, _))| (id.as_str(), i)).collect();
    let mut out = Vec::with_capacity(files.len());
    for (name, rows) in files {
        let map: BTreeMap<&str, f64> =
            rows.iter().map(|(id, v)| (id.as_str(), *v)).collect();
        if map.len() != reference.len() {
            return Err(Error::data(format!(
                "system `{name}` does not cover the same utterances as `{}`",
                files[0].0
            )));
        }
        let mut scores = vec![0.0; reference.len()];
        for (id, &idx) in &reference {
            match map.get(id) {
                Some(v) => scores[idx] = *v,
                None => {
                    return Err(Error::data(format!("system `{name}` is missing utterance `{id}`")))
                }
            }
        }
        out.push((name.clone(), scores));
    }
    Ok(out)
}

/// Read a TSV of `utterance_id\tref\thyp` transcript pairs.
pub fn read_transcript_pairs(path: &Path) -> Result<Vec<(String, String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let mut parts = raw.splitn(3, '\t');
        let id = parts.next().unwrap_or_default();
        let reference = parts.next().ok_or_else(|| {
            Error::data(format!("{}:{}: expected id\\tref\\thyp", path.display(), lineno + 1))
        })?;
        let hypothesis = parts.next().unwrap_or("");
        rows.push((id.to_string(), reference.to_string(), hypothesis.to_string()));
    }
    if rows.is_empty() {
        return Err(Error::data(format!("{}: no transcript pairs", path.display())));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        normalize_words(s)
    }

    #[test]
    fn align_identity() {
        let r = words("the cat sat down");
        let counts = align(&r, &r);
        assert_eq!(counts, AlignmentCounts { n: 4, c: 4, s: 0, d: 0, i: 0, p: 4 });
        assert_eq!(wer(&counts).unwrap(), 0.0);
        assert_eq!(wil(&counts, WilVariant::Paper).unwrap(), 0.0);
        assert_eq!(wil(&counts, WilVariant::Standard).unwrap(), 0.0);
    }

    #[test]
    fn align_substitution_and_insertion() {
        let counts = align(&words("a b c d"), &words("a x c d"));
        assert_eq!((counts.s, counts.c, counts.d, counts.i), (1, 3, 0, 0));
        assert_eq!(wer(&counts).unwrap(), 0.25);
        assert_eq!(wil(&counts, WilVariant::Paper).unwrap(), 0.25);
        assert!((wil(&counts, WilVariant::Standard).unwrap() - 0.4375).abs() < 1e-12);

        let counts = align(&words("a b"), &words("a b c"));
        assert_eq!((counts.i, counts.c), (1, 2));
    }

    #[test]
    fn wer_total_deletion() {
        let counts = align(&words("a b c d e"), &[]);
        assert_eq!(counts.d, 5);
        assert_eq!(wer(&counts).unwrap(), 1.0);
        assert_eq!(wil(&counts, WilVariant::Paper).unwrap(), 1.0);
        assert_eq!(wil(&counts, WilVariant::Standard).unwrap(), 1.0);
    }

    #[test]
    fn empty_reference_is_domain_error() {
        let counts = align(&[], &words("a"));
        assert!(wer(&counts).is_err());
    }

    #[test]
    fn normalization_strips_punctuation_and_case() {
        assert_eq!(normalize_words("Hello,  WORLD! don't"), vec!["hello", "world", "don't"]);
    }

    #[test]
    fn counts_identities_hold() {
        let r = words("a b a c b a");
        let h = words("b a c c");
        let counts = align(&r, &h);
        assert_eq!(counts.n, counts.c + counts.s + counts.d);
        assert_eq!(counts.p, counts.c + counts.s + counts.i);
    }

    #[test]
    fn dominant_pair_has_zero_epsilon() {
        let sample = ScoreSample {
            system_a: (0..50).map(|i| 10.0 + i as f64).collect(),
            system_b: (0..50).map(|i| i as f64 * 0.1).collect(),
            metric_name: "quality".into(),
            higher_is_better: true,
        };
        let res = aso_epsilon(&sample, 0.05, 200, 7).unwrap();
        assert_eq!(res.epsilon, 0.0);
        assert_eq!(res.label, DominanceLabel::Dominant);
    }

    #[test]
    fn orientation_flips_for_lower_is_better() {
        // A has strictly lower (better) error scores.
        let sample = ScoreSample {
            system_a: (0..50).map(|i| 0.01 * i as f64).collect(),
            system_b: (0..50).map(|i| 1.0 + 0.01 * i as f64).collect(),
            metric_name: "wer".into(),
            higher_is_better: false,
        };
        let res = aso_epsilon(&sample, 0.05, 200, 7).unwrap();
        assert_eq!(res.label, DominanceLabel::Dominant);
    }

    #[test]
    fn violation_ratios_partition_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..80).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..80).map(|_| rng.random::<f64>() + 0.1).collect();
        let fwd = violation_ratio(&a, &b);
        let rev = violation_ratio(&b, &a);
        assert!((fwd + rev - 1.0).abs() < 1e-12, "{fwd} + {rev} != 1");
    }

    #[test]
    fn normal_inverse_cdf_reference_values() {
        assert!((normal_inverse_cdf(0.5)).abs() < 1e-9);
        assert!((normal_inverse_cdf(0.05) + 1.6448536269514722).abs() < 1e-7);
        assert!((normal_inverse_cdf(0.975) - 1.959963984540054).abs() < 1e-7);
    }

    #[test]
    fn identical_systems_are_not_significant() {
        let scores: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let systems = vec![("a".to_string(), scores.clone()), ("b".to_string(), scores)];
        let table = dominance_matrix(&systems, "m", true, 0.05, 300, 11).unwrap();
        assert_eq!(table.labels[0][1], Some(DominanceLabel::NotSignificant));
        assert_eq!(table.labels[1][0], Some(DominanceLabel::NotSignificant));
        assert!(table.labels[0][0].is_none());
    }

    #[test]
    fn table_means_match_direct_averages() {
        let a: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0];
        let b: Vec<f64> = vec![2.0, 2.0, 2.0, 2.0];
        let systems = vec![("a".to_string(), a.clone()), ("b".to_string(), b)];
        let table = dominance_matrix(&systems, "m", true, 0.05, 100, 5).unwrap();
        assert!((table.means[0] - 2.5).abs() < 1e-12);
        assert!((table.means[1] - 2.0).abs() < 1e-12);
        assert!((table.stds[1] - 0.0).abs() < 1e-12);
        let tsv = table.to_tsv();
        assert!(tsv.contains("system\tavg\tstd"));
    }

    #[test]
    fn score_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        std::fs::write(&path, "utt1,0.25\nutt2,0.5\n").unwrap();
        let rows = read_score_file(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, "utt1");
        assert_eq!(rows[1].1, 0.5);
    }
}
