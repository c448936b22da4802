//! Evaluation of the finite-dimensional map `φ = R ∘ Φ ∘ E` behind the
//! covering algorithms.
//!
//! The continuous extension `E` is never constructed. For lifted systems
//! every φ-evaluation starts from a stored phase-space state `u` whose
//! observation lies in the source box, so `φ(R(u)) = R(Φ(u))` holds exactly
//! by construction. Boxes without lifted representatives contribute no
//! images. Analytic test maps act on the observation space directly.

use std::collections::HashMap;

use crate::dynamics::{AnalyticMap, FlowMap};
use crate::error::{Error, Result};
use crate::exec;
use crate::observation::Observer;
use crate::state::{ObservedPoint, StateVector};

use super::BoxCollection;

/// One stored lift: a phase-space state together with its observation and
/// where it came from.
#[derive(Debug, Clone)]
pub struct LiftedPair {
    pub state: StateVector,
    pub observed: ObservedPoint,
    /// Seed of the trajectory this sample was drawn from.
    pub seed: u64,
    /// Iterate count along that trajectory.
    pub iterate: u64,
}

/// Lifted test points covering (a neighborhood of) the attractor.
#[derive(Debug, Clone, Default)]
pub struct LiftedEnsemble {
    pub pairs: Vec<LiftedPair>,
}

impl LiftedEnsemble {
    pub fn new(pairs: Vec<LiftedPair>) -> Self {
        Self { pairs }
    }

    /// Observe a batch of states, keeping the provenance tags.
    pub fn from_states(
        states: Vec<(StateVector, u64, u64)>,
        observer: &Observer,
    ) -> Result<Self> {
        let observed: Vec<ObservedPoint> = states
            .iter()
            .map(|(u, _, _)| observer.observe(u))
            .collect::<Result<_>>()?;
        let pairs = states
            .into_iter()
            .zip(observed)
            .map(|((state, seed, iterate), observed)| LiftedPair { state, observed, seed, iterate })
            .collect();
        Ok(Self { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// φ-evaluation strategy for one covering run.
pub enum CdsEvaluator {
    /// φ acts on `R^k` directly (analytic test maps).
    Direct { map: AnalyticMap },
    /// φ(R(u)) is evaluated as R(Φ(u)) on stored lifts; the images are
    /// precomputed once since the ensemble is fixed.
    Lifted {
        flow: FlowMap,
        observer: Observer,
        ensemble: LiftedEnsemble,
        images: Vec<ObservedPoint>,
    },
}

impl CdsEvaluator {
    pub fn direct(map: AnalyticMap) -> Self {
        CdsEvaluator::Direct { map }
    }

    /// Build a lifted evaluator, mapping every stored state through Φ and R.
    pub fn lifted(flow: FlowMap, observer: Observer, ensemble: LiftedEnsemble) -> Result<Self> {
        let results = exec::map_collect(&ensemble.pairs, |pair| {
            flow.step(&pair.state).and_then(|next| observer.observe(&next))
        });
        let images: Vec<ObservedPoint> = results.into_iter().collect::<Result<_>>()?;
        Ok(CdsEvaluator::Lifted { flow, observer, ensemble, images })
    }

    pub fn is_lifted(&self) -> bool {
        matches!(self, CdsEvaluator::Lifted { .. })
    }

    /// Apply φ to a raw observation-space point (direct maps only).
    pub fn map_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            CdsEvaluator::Direct { map } => Ok(map.apply_slice(x)),
            CdsEvaluator::Lifted { .. } => Err(Error::InvalidConfig(
                "lifted systems evaluate φ only on stored lifts".into(),
            )),
        }
    }

    /// Group lifted pair indices by the box containing their observation.
    /// Within each bucket, indices keep ensemble order, so truncating to the
    /// first `p` pairs yields nested sample sets.
    pub(crate) fn bucket_by_box(&self, coll: &BoxCollection) -> HashMap<u64, Vec<u32>> {
        let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
        if let CdsEvaluator::Lifted { ensemble, .. } = self {
            for (i, pair) in ensemble.pairs.iter().enumerate() {
                if let Some(key) = coll.box_of(&pair.observed) {
                    buckets.entry(key).or_default().push(i as u32);
                }
            }
        }
        buckets
    }

    pub(crate) fn image(&self, pair_index: u32) -> &ObservedPoint {
        match self {
            CdsEvaluator::Lifted { images, .. } => &images[pair_index as usize],
            CdsEvaluator::Direct { .. } => unreachable!("direct evaluators have no stored images"),
        }
    }
}
