//! Seeded extremal search for step sets with a small Riesz ratio.
//!
//! The float eigen path ranks candidates; the exact LDLᵀ certificate is run
//! once, on the final best set. All randomness comes from SplitMix64 (Steele,
//! Lea & Flood 2014; state increment `0x9E3779B97F4A7C15`), seeded directly by
//! the 64-bit seed, so results are reproducible bit for bit.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::riesz_constant;
use crate::error::{input, Result};
use crate::gram::{bessel_certificate, build_gram, eig_bounds, psd_certificate, GramMatrix};
use crate::haar::enumerate_family;
use crate::measure::{format_rational, rat, rational_str, Rational, StepSet};

/// Bits of the dyadic grid on which `certificate_lower` is bracketed.
pub const CERTIFICATE_BITS: u32 = 20;

/// Consecutive non-improving flips before greedy search restarts.
pub const STAGNATION_LIMIT: usize = 64;

/// Slack allowed between float spectral values and exact bounds.
pub const FLOAT_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Random,
    GreedyFlip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub p: Rational,
    pub depth: u32,
    /// Candidate sets are unions of level-`resolution` dyadic cells.
    pub resolution: u32,
    pub iterations: usize,
    pub seed: u64,
    pub mode: SearchMode,
    /// Cell inclusion probability; `None` draws one per random set from `[1/2, 1)`.
    pub density_bias: Option<f64>,
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return input("search needs at least one iteration");
        }
        if self.resolution == 0 || self.resolution > 16 {
            return input(format!("resolution must be in 1..=16, got {}", self.resolution));
        }
        if self.depth > 12 {
            return input(format!("depth {} too large for dense Gram matrices", self.depth));
        }
        if self.p <= Rational::zero() || self.p > Rational::one() {
            return input(format!("p must lie in (0, 1], got {}", format_rational(&self.p)));
        }
        if let Some(b) = self.density_bias {
            if !(b > 0.0 && b <= 1.0) {
                return input(format!("density bias must lie in (0, 1], got {b}"));
            }
        }
        Ok(())
    }
}

/// λ_min and λ_max of the normalized Gram matrix of the admissible family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinRatio {
    pub ratio: f64,
    pub lambda_max: f64,
    pub family_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub best_set: StepSet,
    pub best_ratio: f64,
    pub best_lambda_max: f64,
    pub family_size: usize,
    /// Largest `k·2^-20` with an exact certificate `G − c·D ⪰ 0`.
    #[serde(with = "rational_str")]
    pub certificate_lower: Rational,
    /// Exact certificate at `riesz_constant(p)`, when `p > 2/3`.
    pub floor_certified: Option<bool>,
    /// Exact certificate of `(1/p)·D − G ⪰ 0` on the best set.
    pub bessel_certified: bool,
    pub history: Vec<(usize, f64)>,
}

/// Cells of level `resolution`, each kept with probability `density_bias`.
pub fn random_stepset(resolution: u32, density_bias: f64, seed: u64) -> StepSet {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let cells = random_cells(resolution, density_bias, &mut rng);
    StepSet::from_cells(resolution, &cells).expect("mask length matches resolution")
}

fn random_cells(resolution: u32, density_bias: f64, rng: &mut SplitMix64) -> Vec<bool> {
    (0..1usize << resolution).map(|_| rng.gen::<f64>() < density_bias).collect()
}

fn draw_bias(cfg: &SearchConfig, rng: &mut SplitMix64) -> f64 {
    cfg.density_bias.unwrap_or_else(|| 0.5 + 0.5 * rng.gen::<f64>())
}

fn admissible_gram(set: &StepSet, p: &Rational, depth: u32) -> Result<GramMatrix> {
    let family = enumerate_family(depth, set, p);
    build_gram(&family, set, true)
}

fn ratio_of(gram: &GramMatrix) -> Result<MinRatio> {
    if gram.size() == 0 {
        return Ok(MinRatio { ratio: 1.0, lambda_max: 1.0, family_size: 0 });
    }
    let (lo, hi) = eig_bounds(gram)?;
    Ok(MinRatio { ratio: lo, lambda_max: hi, family_size: gram.size() })
}

/// Optimal Riesz constant of the admissible family of `E` up to `depth`, in floats.
/// An empty family reports ratio 1.
pub fn min_ratio(set: &StepSet, p: &Rational, depth: u32) -> Result<MinRatio> {
    ratio_of(&admissible_gram(set, p, depth)?)
}

/// Largest `c = k·2^-bits` for which `G − c·D ⪰ 0` holds exactly.
///
/// Returns `(c, true)`; the certificate fails at `c + 2^-bits`. For an empty
/// family every shift certifies and `(1, false)` is returned.
pub fn certified_lower_bound(gram: &GramMatrix, bits: u32) -> (Rational, bool) {
    if gram.size() == 0 {
        return (Rational::one(), false);
    }
    let diag = gram.diagonal();
    let unit = Rational::new(BigInt::one(), BigInt::one() << bits);
    // λ_min of the normalized matrix is at most 1 (its trace is m), so the
    // certificate fails strictly above 1.
    let (mut lo, mut hi) = (0u64, (1u64 << bits) + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if psd_certificate(gram, &(&unit * BigInt::from(mid)), &diag) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (&unit * BigInt::from(lo), true)
}

struct Candidate {
    iteration: usize,
    set: StepSet,
    ratio: MinRatio,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.ratio.ratio < b.ratio.ratio || (a.ratio.ratio == b.ratio.ratio && a.set < b.set)
}

fn evaluate(cfg: &SearchConfig, iteration: usize, cells: &[bool]) -> Result<Candidate> {
    let set = StepSet::from_cells(cfg.resolution, cells)?;
    let ratio = min_ratio(&set, &cfg.p, cfg.depth)?;
    Ok(Candidate { iteration, set, ratio })
}

fn search_random(cfg: &SearchConfig) -> Result<(Candidate, Vec<(usize, f64)>)> {
    let candidates = (0..cfg.iterations)
        .into_par_iter()
        .map(|it| {
            let mut rng = SplitMix64::seed_from_u64(cfg.seed ^ it as u64);
            let bias = draw_bias(cfg, &mut rng);
            evaluate(cfg, it, &random_cells(cfg.resolution, bias, &mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    let history = candidates.iter().map(|c| (c.iteration, c.ratio.ratio)).collect();
    let best = candidates
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("at least one iteration");
    Ok((best, history))
}

fn search_greedy(cfg: &SearchConfig) -> Result<(Candidate, Vec<(usize, f64)>)> {
    let mut rng = SplitMix64::seed_from_u64(cfg.seed);
    let n_cells = 1usize << cfg.resolution;
    let bias = draw_bias(cfg, &mut rng);
    let mut cells = random_cells(cfg.resolution, bias, &mut rng);
    let mut current = evaluate(cfg, 0, &cells)?;
    let mut history = vec![(0, current.ratio.ratio)];
    let mut best = Candidate { iteration: 0, set: current.set.clone(), ratio: current.ratio };
    let mut stale = 0;

    for it in 1..cfg.iterations {
        let trial = if stale >= STAGNATION_LIMIT {
            let bias = draw_bias(cfg, &mut rng);
            cells = random_cells(cfg.resolution, bias, &mut rng);
            stale = 0;
            current = evaluate(cfg, it, &cells)?;
            Candidate { iteration: it, set: current.set.clone(), ratio: current.ratio }
        } else {
            let flip = rng.gen_range(0..n_cells);
            cells[flip] = !cells[flip];
            let trial = evaluate(cfg, it, &cells)?;
            if trial.ratio.ratio < current.ratio.ratio {
                current = Candidate { iteration: it, set: trial.set.clone(), ratio: trial.ratio };
                stale = 0;
            } else {
                cells[flip] = !cells[flip];
                stale += 1;
            }
            trial
        };
        history.push((it, trial.ratio.ratio));
        if better(&trial, &best) {
            best = trial;
        }
    }
    Ok((best, history))
}

/// Searches for the step set minimizing the optimal Riesz ratio at `cfg.p`.
pub fn search_extremal(cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let (best, history) = match cfg.mode {
        SearchMode::Random => search_random(cfg)?,
        SearchMode::GreedyFlip => search_greedy(cfg)?,
    };
    let gram = admissible_gram(&best.set, &cfg.p, cfg.depth)?;
    let (certificate_lower, _) = certified_lower_bound(&gram, CERTIFICATE_BITS);
    let floor_certified = if cfg.p > rat(2, 3) {
        let c = riesz_constant(&cfg.p)?;
        Some(psd_certificate(&gram, &c, &gram.diagonal()))
    } else {
        None
    };
    let bessel_certified = bessel_certificate(&gram, &(Rational::one() / &cfg.p));
    Ok(SearchResult {
        best_set: best.set,
        best_ratio: best.ratio.ratio,
        best_lambda_max: best.ratio.lambda_max,
        family_size: best.ratio.family_size,
        certificate_lower,
        floor_certified,
        bessel_certified,
        history,
    })
}
