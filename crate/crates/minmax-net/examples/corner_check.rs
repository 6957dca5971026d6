use minmax_net::benchmarks::run_corner8;
use minmax_net::topology::TopologyEvent;

fn main() {
    let t0 = std::time::Instant::now();
    let run = run_corner8::<f64>(7, 40_000).expect("run");
    println!("elapsed: {:?}", t0.elapsed());
    println!("stop: {:?}  iters: {}", run.report.stop, run.report.iterations);
    println!("final cost: {:.3e}", run.report.final_cost);
    let (min_b, max_b) = run.basics_by_kind();
    println!("neurons: {}  basics: min={min_b} max={max_b}", run.state.net.neuron_count());
    println!("max_violation: {:.3e}  max_lambda: {:.3e}  comp_viol: {}",
        run.report.max_violation, run.report.max_lambda, run.report.complementarity_violations);
    for (it, e) in &run.report.events {
        let tag = match e {
            TopologyEvent::Spawn { neuron, kind } => format!("spawn j={neuron} {kind:?}"),
            TopologyEvent::Duplicate { neuron, source, copy } => format!("dup j={neuron} {source}->{copy}"),
            TopologyEvent::PruneBasic { neuron, basic, reason } => format!("prune-basic j={neuron} k={basic} {}", reason.as_str()),
            TopologyEvent::PruneNeuron { neuron, reason } => format!("prune-neuron j={neuron} {}", reason.as_str()),
        };
        println!("  iter {it}: {tag}");
    }
    // monotonicity audit between events
    let mut event_iters: Vec<usize> = run.report.events.iter().map(|(i, _)| *i).collect();
    event_iters.dedup();
    let trace = &run.state.cost_trace;
    let mut bumps = 0;
    for w in trace.windows(2) {
        let crosses_event = event_iters.iter().any(|&e| w[1].iter == e + 1 || w[0].iter == e);
        if !crosses_event && w[1].cost > w[0].cost * (1.0 + 1e-12) {
            bumps += 1;
        }
    }
    println!("non-monotone steps outside events: {bumps} / {}", trace.len());
}
