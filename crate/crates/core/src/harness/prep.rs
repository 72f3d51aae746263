//! Data preparation: chimerical pairing, client-level splits, min-max
//! normalization, and synthetic score generation.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use crate::beta::draw_alpha;
use crate::data::{Label, Sample, ScoreDataset};
use crate::error::{Error, Result};
use crate::harness::config::{SplitSpec, SyntheticSpec};
use crate::rng::{domain, substream};
use crate::scalar::{to_f64, Real};

/// Pair two unimodal datasets into a bimodal one over virtual clients.
///
/// A random bijection is drawn between (subsets of) the two client sets;
/// each virtual client's genuine claims pair the k-th genuine score on each
/// side, and likewise for impostor claims. Claims beyond the shorter side's
/// count are dropped.
pub fn build_chimerical<F: Real>(
    set_a: &ScoreDataset<F>,
    set_b: &ScoreDataset<F>,
    seed: u64,
) -> Result<ScoreDataset<F>> {
    for (name, ds) in [("first", set_a), ("second", set_b)] {
        if ds.n_matchers() != 1 {
            return Err(Error::Config {
                message: format!("{name} dataset must be unimodal (1 matcher)"),
            });
        }
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
    }

    let mut clients_a: Vec<String> = set_a.client_ids().iter().map(|s| s.to_string()).collect();
    let mut clients_b: Vec<String> = set_b.client_ids().iter().map(|s| s.to_string()).collect();
    clients_a.sort();
    clients_b.sort();
    clients_a.shuffle(&mut substream(seed, &[domain::CHIMERA, 0]));
    clients_b.shuffle(&mut substream(seed, &[domain::CHIMERA, 1]));

    let scores_of = |ds: &ScoreDataset<F>, client: &str, label: Label| -> Vec<F> {
        ds.samples()
            .iter()
            .filter(|s| s.client_id == client && s.label == label)
            .map(|s| s.scores[0])
            .collect()
    };

    let mut samples = Vec::new();
    for (a, b) in clients_a.iter().zip(&clients_b) {
        let virtual_id = format!("{a}+{b}");
        for label in [Label::Genuine, Label::Impostor] {
            let sa = scores_of(set_a, a, label);
            let sb = scores_of(set_b, b, label);
            for (&x, &y) in sa.iter().zip(&sb) {
                samples.push(Sample::new(virtual_id.clone(), vec![x, y], label));
            }
        }
    }
    Ok(ScoreDataset::new(2, samples))
}

/// Client-disjoint (train, test) splits: `n_pairings * n_splits` runs, each a
/// fresh client shuffle with `floor(train_fraction * n)` training clients.
pub fn split_runs<F: Real>(
    dataset: &ScoreDataset<F>,
    spec: &SplitSpec<F>,
    seed: u64,
) -> Result<Vec<(ScoreDataset<F>, ScoreDataset<F>)>> {
    let mut clients: Vec<String> = dataset.client_ids().iter().map(|s| s.to_string()).collect();
    clients.sort();
    let n = clients.len();
    let train_n = (to_f64(spec.train_fraction) * n as f64).floor() as usize;
    if train_n == 0 || train_n >= n {
        return Err(Error::TooFewClients {
            clients: n,
            fraction: to_f64(spec.train_fraction),
        });
    }

    let mut runs = Vec::with_capacity(spec.n_pairings * spec.n_splits);
    for pairing in 0..spec.n_pairings {
        for split in 0..spec.n_splits {
            let mut shuffled = clients.clone();
            shuffled.shuffle(&mut substream(
                seed,
                &[domain::SPLIT, pairing as u64, split as u64],
            ));
            let train_set: BTreeSet<&String> = shuffled.iter().take(train_n).collect();
            let train = dataset.filtered(|s| train_set.contains(&s.client_id));
            let test = dataset.filtered(|s| !train_set.contains(&s.client_id));
            runs.push((train, test));
        }
    }
    Ok(runs)
}

/// Per-matcher affine map fitted on the training set (min -> 0, max -> 1),
/// applied to the training set and to every other set with clipping.
pub fn minmax_normalize<F: Real>(
    train: &ScoreDataset<F>,
    others: &[&ScoreDataset<F>],
) -> Result<(ScoreDataset<F>, Vec<ScoreDataset<F>>)> {
    let k = train.n_matchers();
    let mut lo = vec![F::infinity(); k];
    let mut hi = vec![F::neg_infinity(); k];
    for sample in train.samples() {
        for (m, &x) in sample.scores.iter().enumerate() {
            lo[m] = lo[m].min(x);
            hi[m] = hi[m].max(x);
        }
    }
    for m in 0..k {
        if !(hi[m] > lo[m]) {
            return Err(Error::ConstantColumn { matcher: m });
        }
    }

    let map = |m: usize, x: F| (x - lo[m]) / (hi[m] - lo[m]);
    let train_out = train.map_scores(|m, x| map(m, x));
    let others_out = others
        .iter()
        .map(|ds| ds.map_scores(|m, x| map(m, x).max(F::zero()).min(F::one())))
        .collect();
    Ok((train_out, others_out))
}

/// Draw a labeled synthetic dataset from per-matcher Beta shapes.
pub fn synth_scores<F: Real>(spec: &SyntheticSpec<F>, seed: u64) -> Result<ScoreDataset<F>> {
    spec.validate()?;
    let k = spec.matchers.len();
    let mut samples = Vec::with_capacity(spec.n_clients * (spec.genuine_claims + spec.impostor_claims));
    for client in 0..spec.n_clients {
        let client_id = format!("c{client:05}");
        let claims = [
            (Label::Genuine, 0usize, spec.genuine_claims),
            (Label::Impostor, spec.genuine_claims, spec.impostor_claims),
        ];
        for (label, offset, count) in claims {
            for claim in 0..count {
                let mut scores = Vec::with_capacity(k);
                for (m, matcher) in spec.matchers.iter().enumerate() {
                    let shape = match label {
                        Label::Genuine => &matcher.genuine,
                        Label::Impostor => &matcher.impostor,
                    };
                    let mut rng = substream(
                        seed,
                        &[
                            domain::SYNTH,
                            client as u64,
                            (offset + claim) as u64,
                            m as u64,
                        ],
                    );
                    scores.push(draw_alpha(shape, &mut rng));
                }
                samples.push(Sample::new(client_id.clone(), scores, label));
            }
        }
    }
    Ok(ScoreDataset::new(k, samples))
}

/// Where the experiment data comes from.
pub enum DataSource<F> {
    /// Generate from the config's synthetic spec.
    Synthetic,
    /// A single multimodal dataset.
    Single(ScoreDataset<F>),
    /// Two unimodal datasets paired chimerically, re-paired per repetition.
    Chimerical(ScoreDataset<F>, ScoreDataset<F>),
}

/// Produce the (train, test) runs for an experiment.
pub fn prepare_runs<F: Real>(
    config: &crate::harness::ExperimentConfig<F>,
    source: DataSource<F>,
) -> Result<Vec<(ScoreDataset<F>, ScoreDataset<F>)>> {
    match source {
        DataSource::Synthetic => {
            let spec = config.synthetic.clone().ok_or_else(|| Error::Config {
                message: "no synthetic spec in config".to_string(),
            })?;
            let dataset = synth_scores(&spec, crate::rng::mix(config.seed, &[domain::SYNTH]))?;
            dataset.validate()?;
            split_runs(&dataset, &config.split, config.seed)
        }
        DataSource::Single(dataset) => {
            dataset.validate()?;
            split_runs(&dataset, &config.split, config.seed)
        }
        DataSource::Chimerical(a, b) => {
            let mut runs = Vec::new();
            let per_pairing = SplitSpec {
                n_pairings: 1,
                ..config.split
            };
            for pairing in 0..config.split.n_pairings {
                let paired = build_chimerical(
                    &a,
                    &b,
                    crate::rng::mix(config.seed, &[domain::CHIMERA, pairing as u64]),
                )?;
                paired.validate()?;
                runs.extend(split_runs(
                    &paired,
                    &per_pairing,
                    crate::rng::mix(config.seed, &[domain::SPLIT, pairing as u64]),
                )?);
            }
            Ok(runs)
        }
    }
}
