use minmax_net::dataset::gen_polygon;
use minmax_net::model::{Network, NeuronKind};
use minmax_net::topology::TopologyController;
use minmax_net::trainer::{self, TrainState, TrainHooks, HookSignal};
use minmax_net::benchmarks::{polygon_topology_config, polygon_trainer_config};

fn main() {
    let dataset = gen_polygon::<f64>();
    let net = Network::single_zero(1, NeuronKind::Min);
    let config = polygon_trainer_config::<f64>();
    let mut hooks = TopologyController::new(polygon_topology_config());
    let mut state = TrainState::new(net);
    for iter in 0..200 {
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
        match out.signal {
            HookSignal::Mutated => {
                println!("iter {iter}: MUTATED (v={v:.4e})");
                state.invalidate_schedule();
                state.pending_hint = out.split_hint;
            }
            HookSignal::NoInsertionNeeded => {
                println!("iter {iter}: no insertion (v={v:.4e}) sse={:.4e}",
                    trainer::sse(&state.net, &dataset).unwrap());
            }
            HookSignal::NotTriggered => {}
        }
        trainer::constrained_step(&mut state, &dataset, &config).unwrap();
        if iter == 50 || iter == 100 || iter == 150 {
            println!("  state at {iter}:");
            for n in state.net.neurons() {
                println!("    {:?} {:?}", n.kind,
                    n.basics.iter().map(|b| format!("[{:.3},{:.3}]", b.weights[0], b.weights[1])).collect::<Vec<_>>());
            }
        }
    }
}
