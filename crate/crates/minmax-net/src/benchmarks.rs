//! End-to-end benchmark scenarios with fixed seeds and documented schedules.
//! The CLI `bench` command and the acceptance suite both run these.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{gen_corner, gen_polygon, Dataset};
use crate::error::Result;
use crate::model::{BasicNeuron, Network, Neuron, NeuronKind};
use crate::scalar::{lit, Real};
use crate::topology::{TopologyConfig, TopologyController};
use crate::trainer::{self, StepMode, TrainReport, TrainState, TrainerConfig};

/// Outcome of a benchmark training run.
pub struct BenchRun<T: Real> {
    pub state: TrainState<T>,
    pub report: TrainReport<T>,
    pub dataset: Dataset<T>,
}

impl<T: Real> BenchRun<T> {
    pub fn basics_by_kind(&self) -> (usize, usize) {
        let mut min_count = 0;
        let mut max_count = 0;
        for n in self.state.net.neurons() {
            match n.kind {
                NeuronKind::Min => min_count += n.basic_count(),
                NeuronKind::Max => max_count += n.basic_count(),
            }
        }
        (min_count, max_count)
    }
}

/// Trainer configuration for the polygon benchmark: certified step gains
/// with Chebyshev acceleration once topology growth settles.
pub fn polygon_trainer_config<T: Real>() -> TrainerConfig<T> {
    TrainerConfig {
        step_mode: StepMode::Auto { accelerate: true },
        max_iters: 1000,
        cost_tol: lit(1e-9),
        ..TrainerConfig::default()
    }
}

/// Topology schedule for the polygon benchmark: plateau- and period-driven
/// events (every 50 iterations), spawning allowed for absent kinds.
pub fn polygon_topology_config<T: Real>() -> TopologyConfig<T> {
    TopologyConfig {
        period: 50,
        allow_spawn: true,
        ..TopologyConfig::default()
    }
}

/// Polygon benchmark: one zero Min basic neuron grown to the 5-basic
/// (2 Min + 3 Max) topology on the eight-point dataset.
pub fn run_polygon<T: Real>() -> Result<BenchRun<T>> {
    let dataset = gen_polygon::<T>();
    let net = Network::single_zero(1, NeuronKind::Min);
    let config = polygon_trainer_config();
    let mut hooks = TopologyController::new(polygon_topology_config());
    let mut state = TrainState::new(net);
    let report = trainer::train(&mut state, &dataset, &config, &mut hooks)?;
    Ok(BenchRun {
        state,
        report,
        dataset,
    })
}

/// Trainer configuration for the corner benchmark: stationary certified
/// gains keep the trace non-increasing between insertion events.
pub fn corner8_trainer_config<T: Real>(max_iters: usize) -> TrainerConfig<T> {
    TrainerConfig {
        step_mode: StepMode::Auto { accelerate: false },
        max_iters,
        cost_tol: lit(1e-8),
        ..TrainerConfig::default()
    }
}

/// Topology schedule for the corner benchmark: insertions every 100
/// iterations, duplication only (the target is one Max neuron).
pub fn corner8_topology_config<T: Real>() -> TopologyConfig<T> {
    TopologyConfig {
        period: 100,
        plateau_window: usize::MAX / 2,
        allow_spawn: false,
        ..TopologyConfig::default()
    }
}

/// Corner benchmark: `y = max_n |x_n|` in 8 dimensions, grown from a single
/// random Max basic neuron to the 16 basic neurons of the 16 surfaces.
pub fn run_corner8<T: Real>(seed: u64, max_iters: usize) -> Result<BenchRun<T>> {
    let dataset = gen_corner::<T>(8, 9, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let weights: Vec<T> = (0..9).map(|_| lit(rng.random_range(-0.5..0.5))).collect();
    let net = Network::new(
        8,
        vec![Neuron::new(NeuronKind::Max, vec![BasicNeuron::new(weights)])],
    )?;
    let config = corner8_trainer_config(max_iters);
    let mut hooks = TopologyController::new(corner8_topology_config());
    let mut state = TrainState::new(net);
    let report = trainer::train(&mut state, &dataset, &config, &mut hooks)?;
    Ok(BenchRun {
        state,
        report,
        dataset,
    })
}
