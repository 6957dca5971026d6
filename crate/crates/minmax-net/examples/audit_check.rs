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
    for _iter in 0..82 {
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
    // now at iter 82 pre-event: audition by hand
    let alphas = trainer::resolve_alphas(&state.net, &dataset);
    let resid = trainer::residuals(&state.net, &dataset).unwrap();
    let wr: Vec<f64> = resid.iter().zip(alphas.iter()).map(|(r,a)| a*a*r*r).collect();
    let m_star = (0..wr.len()).max_by(|&a,&b| wr[a].partial_cmp(&wr[b]).unwrap()).unwrap();
    println!("m* = {m_star} x = {:?} resid = {:+.3}", dataset.measurements()[m_star].x.raw(), resid[m_star]);
    println!("residuals: {:?}", resid.iter().map(|r| format!("{r:+.3}")).collect::<Vec<_>>());
    // no-op baseline
    let mut noop = state.net.clone();
    trainer::run_steps(&mut noop, &dataset, &config, 30, None).unwrap();
    println!("baseline sse after 30: {:.5e}", trainer::sse(&noop, &dataset).unwrap());
    // dup candidates on each neuron with both side masks
    for j in 0..state.net.neuron_count() {
        let k = state.net.neurons()[j].active_index(&dataset.measurements()[m_star].x);
        for side in 0..2 {
            let mut trial = state.net.clone();
            let copy = duplicate_basic(&mut trial, j, k);
            // mask: split at x threshold between m* and centroid
            let xs: Vec<f64> = dataset.measurements().iter().map(|m| m.x.raw()[0]).collect();
            let cen = xs.iter().sum::<f64>() / xs.len() as f64;
            let star = xs[m_star];
            let mid = 0.5*(star + cen);
            let dir = if star >= cen { 1.0 } else { -1.0 };
            let mask: Vec<bool> = xs.iter().map(|&x| {
                let h = (x - mid) * dir;
                if side == 0 { h >= 0.0 } else { h < 0.0 }
            }).collect();
            let hint = SplitHint { neuron: j, original: k, copy, mask: mask.clone() };
            trainer::run_steps(&mut trial, &dataset, &config, 30, Some(hint)).unwrap();
            println!("dup j={j} k={k} side={side} mask={:?}: sse {:.5e}",
                mask.iter().map(|&b| b as u8).collect::<Vec<_>>(),
                trainer::sse(&trial, &dataset).unwrap());
            for n in trial.neurons() {
                println!("   {:?} {:?}", n.kind,
                    n.basics.iter().map(|b| format!("[{:+.3},{:+.3}]", b.weights[0], b.weights[1])).collect::<Vec<_>>());
            }
        }
    }
}
