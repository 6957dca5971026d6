use minmax_net::dataset::gen_polygon;
use minmax_net::model::{Network, NeuronKind};
use minmax_net::topology::{duplicate_basic, TopologyController};
use minmax_net::trainer::{self, SplitHint, TrainState, TrainHooks, HookSignal};
use minmax_net::benchmarks::{polygon_topology_config, polygon_trainer_config};

fn main() {
    let dataset = gen_polygon::<f64>();
    let net = Network::single_zero(1, NeuronKind::Min);
    let config = polygon_trainer_config::<f64>();
    let mut hooks = TopologyController::new(polygon_topology_config());
    let mut state = TrainState::new(net);
    for _ in 0..82 {
        let alphas = trainer::resolve_alphas(&state.net, &dataset);
        let v = trainer::cost(&state.net, &dataset, &alphas).unwrap();
        let resid = trainer::residuals(&state.net, &dataset).unwrap();
        let patterns: Vec<_> = dataset.measurements().iter()
            .map(|m| state.net.activation_pattern(&m.x).unwrap()).collect();
        let ctx = trainer::HookContext {
            dataset: &dataset, config: &config, iter: state.iter, cost: v,
            residuals: &resid, patterns: &patterns, alphas_base: &alphas,
        };
        let out = hooks.on_iteration(&mut state.net, &ctx);
        if out.signal == HookSignal::Mutated {
            state.invalidate_schedule();
            state.pending_hint = out.split_hint;
        }
        trainer::constrained_step(&mut state, &dataset, &config).unwrap();
    }
    for h in [30usize, 60, 100, 150, 250] {
        let mut noop = state.net.clone();
        trainer::run_steps(&mut noop, &dataset, &config, h, None).unwrap();
        let base = trainer::sse(&noop, &dataset).unwrap();
        let mut trial = state.net.clone();
        let copy = duplicate_basic(&mut trial, 0, 0);
        let mask = vec![true, true, true, true, false, false, false, false];
        let hint = SplitHint { neuron: 0, original: 0, copy, mask };
        trainer::run_steps(&mut trial, &dataset, &config, h, Some(hint)).unwrap();
        let dup = trainer::sse(&trial, &dataset).unwrap();
        println!("h={h:3}: baseline {base:.5e}  min-dup {dup:.5e}  ratio {:.3}", dup/base);
    }
}
