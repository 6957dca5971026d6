use minmax_net::benchmarks::run_polygon;
use minmax_net::topology::TopologyEvent;

fn main() {
    let t0 = std::time::Instant::now();
    let run = run_polygon::<f64>().expect("run");
    println!("elapsed: {:?}", t0.elapsed());
    println!("stop: {:?}  iters: {}", run.report.stop, run.report.iterations);
    println!("final cost: {:.3e}", run.report.final_cost);
    let (min_b, max_b) = run.basics_by_kind();
    println!("basics: min={min_b} max={max_b}");
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
}
