//! Coherent versus thermal light discrimination from photon-count sequences.

use rayon::prelude::*;

use crate::error::{check_range, QpbError, Result};
use crate::gaussian::StateParams;
use crate::photon::{pmf, CountSampler, CutoffPolicy};
use crate::rng::{stream_rng, substream};

/// Number of disjoint subsets used for the error bars.
pub const SUBSETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Coherent,
    Thermal,
}

impl Source {
    pub fn name(&self) -> &'static str {
        match self {
            Source::Coherent => "coherent",
            Source::Thermal => "thermal",
        }
    }

    fn state(&self, n_bar: f64) -> StateParams {
        match self {
            Source::Coherent => StateParams::Coherent { alpha: n_bar.sqrt(), phi: 0.0 },
            Source::Thermal => StateParams::Thermal { n_th: n_bar },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountSequence {
    pub counts: Vec<u32>,
    /// `None` when the origin is unknown.
    pub source: Option<Source>,
    pub n_bar: f64,
}

impl CountSequence {
    pub fn new(counts: Vec<u32>, source: Option<Source>, n_bar: f64) -> Result<Self> {
        if counts.is_empty() {
            return Err(QpbError::Empty("count sequence"));
        }
        Ok(Self { counts, source, n_bar })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

fn positive_mean(n_bar: f64) -> Result<()> {
    if !(n_bar > 0.0 && n_bar.is_finite()) {
        return Err(QpbError::OutOfRange { name: "n_bar", value: n_bar });
    }
    Ok(())
}

/// I.i.d. counts of length `k` from the photon statistics of `source`.
pub fn generate_counts(source: Source, n_bar: f64, k: usize, seed: u64, stream: u64) -> Result<CountSequence> {
    positive_mean(n_bar)?;
    let dist = pmf(source.state(n_bar), CutoffPolicy::Adaptive)?;
    let sampler = CountSampler::new(&dist);
    let mut rng = stream_rng(seed, stream);
    CountSequence::new((0..k).map(|_| sampler.draw(&mut rng)).collect(), Some(source), n_bar)
}

/// Per-count log-likelihoods of one hypothesis; counts past the table share the tail mass.
#[derive(Debug, Clone)]
struct LogTable {
    logs: Vec<f64>,
    tail: f64,
}

impl LogTable {
    /// Tabulates `0..=cutoff`. The lumped tail is at least the first untabulated
    /// term, which keeps it meaningful when `1 − Σ` rounds to zero.
    fn new(source: Source, n_bar: f64, cutoff: usize) -> Result<Self> {
        let dist = pmf(source.state(n_bar), CutoffPolicy::Fixed(cutoff + 1))?;
        let tail = (dist.tail_mass + dist.probs[cutoff + 1]).max(f64::MIN_POSITIVE).ln();
        Ok(Self { logs: dist.probs[..=cutoff].iter().map(|p| p.max(f64::MIN_POSITIVE).ln()).collect(), tail })
    }

    fn log_likelihood(&self, counts: &[u32]) -> f64 {
        counts.iter().map(|&c| self.logs.get(c as usize).copied().unwrap_or(self.tail)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub source: Source,
    /// `log p(x|thermal) − log p(x|coherent)` including the prior ratio.
    pub gap: f64,
}

/// Naive Bayes classifier holding the two theoretical count distributions.
#[derive(Debug, Clone)]
pub struct NaiveBayes {
    n_bar: f64,
    coherent: LogTable,
    thermal: LogTable,
    log_prior_ratio: f64,
}

impl NaiveBayes {
    pub fn new(n_bar: f64) -> Result<Self> {
        Self::with_priors(n_bar, 0.5, 0.5)
    }

    /// Priors need not be normalized; only their ratio matters.
    pub fn with_priors(n_bar: f64, prior_coherent: f64, prior_thermal: f64) -> Result<Self> {
        positive_mean(n_bar)?;
        check_range("prior_coherent", prior_coherent, f64::MIN_POSITIVE, f64::MAX)?;
        check_range("prior_thermal", prior_thermal, f64::MIN_POSITIVE, f64::MAX)?;
        // Both tables share one cutoff so that lumped tails compare like with like.
        let cutoff = [Source::Coherent, Source::Thermal]
            .iter()
            .map(|s| pmf(s.state(n_bar), CutoffPolicy::Adaptive).map(|d| d.cutoff))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        Ok(Self {
            n_bar,
            coherent: LogTable::new(Source::Coherent, n_bar, cutoff)?,
            thermal: LogTable::new(Source::Thermal, n_bar, cutoff)?,
            log_prior_ratio: prior_thermal.ln() - prior_coherent.ln(),
        })
    }

    pub fn n_bar(&self) -> f64 {
        self.n_bar
    }

    /// Picks the larger posterior; an exact tie goes to coherent.
    pub fn classify(&self, counts: &[u32]) -> Decision {
        let gap = self.thermal.log_likelihood(counts) - self.coherent.log_likelihood(counts) + self.log_prior_ratio;
        let source = if gap > 0.0 { Source::Thermal } else { Source::Coherent };
        Decision { source, gap }
    }
}

/// Classifies a sequence with equal priors at the sequence's own mean photon number.
pub fn nb_classify(seq: &CountSequence, n_bar: f64) -> Result<Decision> {
    Ok(NaiveBayes::new(n_bar)?.classify(&seq.counts))
}

/// Rows are the true source, columns the decision, both ordered coherent, thermal.
pub type Confusion = [[usize; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCurve {
    pub n_bar: f64,
    pub sample_sizes: Vec<usize>,
    pub accuracy: Vec<f64>,
    pub errbar: Vec<f64>,
    pub confusion: Vec<Confusion>,
}

/// Runs `trials_per_size` trials per source for every sequence length. The
/// error bar is the standard deviation of the accuracy over ten disjoint
/// subsets of the trials.
pub fn accuracy_curve(n_bar: f64, sample_sizes: &[usize], trials_per_size: usize, seed: u64) -> Result<AccuracyCurve> {
    positive_mean(n_bar)?;
    if sample_sizes.contains(&0) {
        return Err(QpbError::OutOfRange { name: "sample size", value: 0.0 });
    }
    if trials_per_size < SUBSETS {
        return Err(QpbError::EnsembleTooSmall { found: trials_per_size, required: SUBSETS });
    }
    let classifier = NaiveBayes::new(n_bar)?;
    let samplers = [
        CountSampler::new(&pmf(Source::Coherent.state(n_bar), CutoffPolicy::Adaptive)?),
        CountSampler::new(&pmf(Source::Thermal.state(n_bar), CutoffPolicy::Adaptive)?),
    ];
    let mut curve = AccuracyCurve {
        n_bar,
        sample_sizes: sample_sizes.to_vec(),
        accuracy: Vec::with_capacity(sample_sizes.len()),
        errbar: Vec::with_capacity(sample_sizes.len()),
        confusion: Vec::with_capacity(sample_sizes.len()),
    };
    for (si, &k) in sample_sizes.iter().enumerate() {
        // outcomes[t][src]: whether trial t of source src was labelled thermal.
        let outcomes: Vec<[bool; 2]> = (0..trials_per_size)
            .into_par_iter()
            .map(|t| {
                let mut out = [false; 2];
                let mut counts = vec![0u32; k];
                for (src, sampler) in samplers.iter().enumerate() {
                    let mut rng = stream_rng(seed, substream(si as u64, (2 * t + src) as u64));
                    counts.iter_mut().for_each(|c| *c = sampler.draw(&mut rng));
                    out[src] = classifier.classify(&counts).source == Source::Thermal;
                }
                out
            })
            .collect();
        let mut confusion = [[0usize; 2]; 2];
        for o in &outcomes {
            for (src, &said_thermal) in o.iter().enumerate() {
                confusion[src][said_thermal as usize] += 1;
            }
        }
        let correct = |o: &[bool; 2]| (!o[0]) as usize + o[1] as usize;
        let total: usize = outcomes.iter().map(correct).sum();
        curve.accuracy.push(total as f64 / (2 * trials_per_size) as f64);
        let per = trials_per_size / SUBSETS;
        let subset_acc: Vec<f64> = outcomes
            .chunks_exact(per)
            .take(SUBSETS)
            .map(|c| c.iter().map(correct).sum::<usize>() as f64 / (2 * per) as f64)
            .collect();
        let m = subset_acc.iter().sum::<f64>() / SUBSETS as f64;
        let var = subset_acc.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (SUBSETS - 1) as f64;
        curve.errbar.push(var.sqrt());
        curve.confusion.push(confusion);
    }
    Ok(curve)
}
