use minmax_net::constraints::{build_edge_constraints, stack_weights, StackedLayout};
use minmax_net::dataset::gen_polygon;
use minmax_net::model::{Network, NeuronKind};
use minmax_net::topology::TopologyController;
use minmax_net::trainer::{self, TrainState};
use minmax_net::benchmarks::{polygon_topology_config, polygon_trainer_config};

fn main() {
    let dataset = gen_polygon::<f64>();
    let net = Network::single_zero(1, NeuronKind::Min);
    let config = polygon_trainer_config::<f64>();
    let mut hooks = TopologyController::new(polygon_topology_config());
    let mut state = TrainState::new(net);
    // manual loop so we can inspect each step
    let mut shown = 0;
    for iter in 0..600 {
        let alphas = trainer::resolve_alphas(&state.net, &dataset);
        let v = trainer::cost(&state.net, &dataset, &alphas).unwrap();
        if v < 1e-9 { println!("converged at {iter}"); break; }
        let resid = trainer::residuals(&state.net, &dataset).unwrap();
        let patterns: Vec<_> = dataset.measurements().iter()
            .map(|m| state.net.activation_pattern(&m.x).unwrap()).collect();
        let ctx = trainer::HookContext {
            dataset: &dataset, config: &config, iter: state.iter, cost: v,
            residuals: &resid, patterns: &patterns, alphas_base: &alphas,
        };
        use minmax_net::trainer::{TrainHooks, HookSignal};
        let out = hooks.on_iteration(&mut state.net, &ctx);
        if out.signal == HookSignal::Mutated {
            state.invalidate_schedule();
            state.pending_hint = out.split_hint;
        }
        let step = trainer::constrained_step(&mut state, &dataset, &config).unwrap();
        if step.complementarity_violations > 0 && shown < 8 {
            shown += 1;
            let layout = StackedLayout::of(&state.net);
            let w = stack_weights(&state.net);
            let pats: Vec<_> = dataset.measurements().iter()
                .map(|m| state.net.activation_pattern(&m.x).unwrap()).collect();
            let cons = build_edge_constraints(&state.net, &dataset, &pats);
            println!("iter {iter}: {} viol; lambdas:", step.complementarity_violations);
            for (idx, l) in &step.multipliers {
                if *l < -1e-9 {
                    // note: constraint list in the step used the step's patterns;
                    // re-evaluate against its own stored indices
                    let val = if *idx < cons.len() { cons[*idx].value(&w, &layout, &dataset) } else { f64::NAN };
                    println!("   lambda={l:+.3e}  post value={val:+.3e}");
                }
            }
        }
    }
}
