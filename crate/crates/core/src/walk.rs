//! Increasing random walks, their superposition into a marked Poisson
//! process, and the lazy "extend the lowest walk" generator used by the
//! estimators.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::distributions::{conditional_sample_exact, TargetDistribution};
use crate::error::{check_n, Error, Result};

/// Random number generator used for every simulation.
pub type SimRng = ChaCha8Rng;

/// One current state of a walk: its level and whatever the sampler needs to
/// continue from it (nothing for exact samplers, the input point for MCMC).
#[derive(Debug, Clone, PartialEq)]
pub struct Particle<P> {
    pub level: f64,
    pub point: P,
}

/// Source of unconditional and conditional draws of `X`.
pub trait LevelSampler {
    type Point: Clone;

    /// Unconditional draw.
    fn sample(&mut self, rng: &mut SimRng) -> Result<Particle<Self::Point>>;

    /// Draw above `population[replaced].level`. The other members of the
    /// population are the current states of the remaining walks.
    fn sample_above(
        &mut self,
        population: &[Particle<Self::Point>],
        replaced: usize,
        rng: &mut SimRng,
    ) -> Result<Particle<Self::Point>>;

    /// Number of calls to the X-generator (or integrand evaluations) so far.
    fn evaluations(&self) -> u64;

    /// Generator calls charged for one conditional draw.
    fn conditional_cost(&self) -> u64;

    /// Log-survival of a level, when the law is known in closed form.
    fn log_survival(&self, _level: f64) -> Option<f64> {
        None
    }
}

/// Conditional sampling by inverse transform of an analytic distribution.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    dist: Arc<dyn TargetDistribution>,
    evaluations: u64,
}

impl ExactSampler {
    pub fn new(dist: Arc<dyn TargetDistribution>) -> Self {
        Self { dist, evaluations: 0 }
    }

    pub fn distribution(&self) -> &Arc<dyn TargetDistribution> {
        &self.dist
    }

    fn draw_above(&mut self, level: f64, rng: &mut SimRng) -> Result<f64> {
        if self.dist.exhausted_at(level) {
            return Err(Error::ExhaustedSupport { level });
        }
        self.evaluations += 1;
        let u: f64 = 1.0 - rng.random::<f64>();
        conditional_sample_exact(self.dist.as_ref(), level, u)
    }
}

impl LevelSampler for ExactSampler {
    type Point = ();

    fn sample(&mut self, rng: &mut SimRng) -> Result<Particle<()>> {
        self.evaluations += 1;
        let u: f64 = 1.0 - rng.random::<f64>();
        let level = self.dist.inverse_log_survival(u.ln());
        Ok(Particle { level, point: () })
    }

    fn sample_above(&mut self, population: &[Particle<()>], replaced: usize, rng: &mut SimRng) -> Result<Particle<()>> {
        let level = self.draw_above(population[replaced].level, rng)?;
        Ok(Particle { level, point: () })
    }

    fn evaluations(&self) -> u64 {
        self.evaluations
    }

    fn conditional_cost(&self) -> u64 {
        1
    }

    fn log_survival(&self, level: f64) -> Option<f64> {
        Some(self.dist.log_survival(level))
    }
}

/// A single increasing random walk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Walk {
    pub levels: Vec<f64>,
    pub source: String,
    pub seed: u64,
    /// Number of generator calls made for this walk.
    pub draws: u64,
    /// Set once the support above the top level is exhausted.
    pub exhausted: bool,
}

impl Walk {
    pub fn new(source: impl Into<String>, seed: u64) -> Self {
        Self {
            levels: Vec::new(),
            source: source.into(),
            seed,
            draws: 0,
            exhausted: false,
        }
    }

    pub fn top(&self) -> Option<f64> {
        self.levels.last().copied()
    }
}

/// Appends `steps` levels to `walk`, each drawn above the current top (the
/// first one unconditionally). On exhaustion the walk keeps the levels
/// generated so far, is flagged, and the signal is returned.
pub fn extend_walk(walk: &mut Walk, dist: &dyn TargetDistribution, steps: usize, rng: &mut SimRng) -> Result<()> {
    for _ in 0..steps {
        let u: f64 = 1.0 - rng.random::<f64>();
        let next = match walk.top() {
            None => {
                walk.draws += 1;
                dist.inverse_log_survival(u.ln())
            }
            Some(level) => {
                if dist.exhausted_at(level) {
                    walk.exhausted = true;
                    return Err(Error::ExhaustedSupport { level });
                }
                walk.draws += 1;
                match conditional_sample_exact(dist, level, u) {
                    Ok(x) => x,
                    Err(e) => {
                        walk.exhausted = true;
                        return Err(e);
                    }
                }
            }
        };
        walk.levels.push(next);
    }
    Ok(())
}

/// Sorted superposition of the states of N walks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergedProcess {
    pub n_walks: usize,
    pub levels: Vec<f64>,
    /// Walk that produced each merged level.
    pub per_walk_index: Vec<usize>,
    /// Levels strictly below the frontier are complete: every walk state
    /// below it is present.
    pub frontier: f64,
}

/// Merges walks in level order; ties go to the lower walk index.
pub fn merge_walks(walks: &[Walk]) -> Result<MergedProcess> {
    check_n(walks.len())?;
    let mut tagged: Vec<(f64, usize)> = walks
        .iter()
        .enumerate()
        .flat_map(|(i, w)| w.levels.iter().map(move |&x| (x, i)))
        .collect();
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let frontier = walks
        .iter()
        .map(|w| if w.exhausted { f64::INFINITY } else { w.top().unwrap_or(f64::NEG_INFINITY) })
        .fold(f64::INFINITY, f64::min);
    Ok(MergedProcess {
        n_walks: walks.len(),
        levels: tagged.iter().map(|t| t.0).collect(),
        per_walk_index: tagged.iter().map(|t| t.1).collect(),
        frontier,
    })
}

impl MergedProcess {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `M_x`, the number of merged states `<= x`. Beyond the frontier the
    /// count is only a lower bound and is returned inside the error.
    pub fn count_before(&self, x: f64) -> Result<usize> {
        let count = self.levels.partition_point(|&l| l <= x);
        if x >= self.frontier {
            return Err(Error::BeyondFrontier {
                level: x,
                frontier: self.frontier,
                lower_bound: count,
            });
        }
        Ok(count)
    }

    /// `T_n = -log p_{X_n}`, a Poisson process with parameter N.
    pub fn poisson_times(&self, dist: &dyn TargetDistribution) -> Result<Vec<f64>> {
        self.levels
            .iter()
            .map(|&x| {
                let t = -dist.log_survival(x);
                if t.is_finite() {
                    Ok(t)
                } else {
                    Err(Error::InfiniteTime(x))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapKey {
    level: f64,
    walk: usize,
}

impl Eq for HeapKey {}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level.total_cmp(&other.level).then(self.walk.cmp(&other.walk))
    }
}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One event of the merged process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub level: f64,
    pub walk: usize,
}

/// Lazily generated merged process: each call to [`MergedStream::next_event`]
/// returns the lowest current state and extends that walk by one conditional
/// draw.
pub struct MergedStream<'a, S: LevelSampler> {
    sampler: &'a mut S,
    population: Vec<Particle<S::Point>>,
    heap: BinaryHeap<Reverse<HeapKey>>,
    emitted: usize,
}

impl<'a, S: LevelSampler> MergedStream<'a, S> {
    /// Draws the N initial states (N generator calls).
    pub fn new(sampler: &'a mut S, n: usize, rng: &mut SimRng) -> Result<Self> {
        check_n(n)?;
        let mut population = Vec::with_capacity(n);
        let mut heap = BinaryHeap::with_capacity(n);
        for walk in 0..n {
            let p = sampler.sample(rng)?;
            heap.push(Reverse(HeapKey { level: p.level, walk }));
            population.push(p);
        }
        Ok(Self {
            sampler,
            population,
            heap,
            emitted: 0,
        })
    }

    /// Level of the next event, without generating anything.
    pub fn peek_level(&self) -> f64 {
        self.heap.peek().map(|k| k.0.level).unwrap_or(f64::INFINITY)
    }

    /// Returns the next event without extending its walk. Call
    /// [`MergedStream::advance`] afterwards to replace it.
    pub fn current(&self) -> Event {
        let k = self.heap.peek().expect("population is never empty").0;
        Event { level: k.level, walk: k.walk }
    }

    /// Replaces the lowest state by a conditional draw above it.
    pub fn advance(&mut self, rng: &mut SimRng) -> Result<()> {
        let Reverse(key) = *self.heap.peek().expect("population is never empty");
        let next = self.sampler.sample_above(&self.population, key.walk, rng)?;
        if !(next.level > key.level) {
            return Err(Error::ExhaustedSupport { level: key.level });
        }
        self.heap.pop();
        self.heap.push(Reverse(HeapKey {
            level: next.level,
            walk: key.walk,
        }));
        self.population[key.walk] = next;
        self.emitted += 1;
        Ok(())
    }

    /// Returns the lowest state and extends its walk.
    pub fn next_event(&mut self, rng: &mut SimRng) -> Result<Event> {
        let e = self.current();
        self.advance(rng)?;
        Ok(e)
    }

    pub fn n_walks(&self) -> usize {
        self.population.len()
    }

    pub fn population(&self) -> &[Particle<S::Point>] {
        &self.population
    }

    pub fn sampler(&self) -> &S {
        self.sampler
    }
}

/// Generates the first `events` merged events with the lazy generator. The
/// returned process is complete up to its frontier, the level of the next
/// event.
pub fn generate_merged<S: LevelSampler>(sampler: &mut S, n: usize, events: usize, rng: &mut SimRng) -> Result<MergedProcess> {
    let mut stream = MergedStream::new(sampler, n, rng)?;
    let mut levels = Vec::with_capacity(events);
    let mut walks = Vec::with_capacity(events);
    for _ in 0..events {
        let e = stream.next_event(rng)?;
        levels.push(e.level);
        walks.push(e.walk);
    }
    Ok(MergedProcess {
        n_walks: n,
        levels,
        per_walk_index: walks,
        frontier: stream.peek_level(),
    })
}

/// One row of the walk debug dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DumpRow {
    pub replica: usize,
    pub walk_index: usize,
    pub event_index: usize,
    pub level: f64,
    pub log_survival: Option<f64>,
}

/// Flattens a set of walks into dump rows.
pub fn dump_rows(replica: usize, walks: &[Walk], dist: Option<&dyn TargetDistribution>) -> Vec<DumpRow> {
    walks
        .iter()
        .enumerate()
        .flat_map(|(walk_index, w)| {
            w.levels.iter().enumerate().map(move |(event_index, &level)| DumpRow {
                replica,
                walk_index,
                event_index,
                level,
                log_survival: dist.map(|d| d.log_survival(level)),
            })
        })
        .collect()
}
