// Communication graphs: generators, the root-set condition, the expanded
// Laplacian spectrum and the on-disk graph format.

use satsync::graph::{CommGraph, GraphKind};
use satsync::linalg;

pub struct GraphSummary {
    pub name: String,
    pub nodes: usize,
    pub rootset: bool,
    pub min_real_eigenvalue: f64,
    pub round_trip: bool,
}

pub fn run_example() -> satsync::Result<Vec<GraphSummary>> {
    let mut graphs = vec![
        ("example_a".to_string(), CommGraph::example_a()),
        ("example_b".to_string(), CommGraph::example_b()),
        ("path_6".to_string(), CommGraph::generate(GraphKind::Path, 6, &[0], 0)?),
        ("star_6".to_string(), CommGraph::generate(GraphKind::Star, 6, &[0], 0)?),
    ];
    for seed in 0..3 {
        graphs.push((format!("random_12_seed{seed}"), CommGraph::random(12, &[0, 5], seed)?));
    }
    let mut broken = CommGraph::example_a();
    broken.set_root(0, false);
    graphs.push(("example_a_without_roots".to_string(), broken));

    let mut out = Vec::new();
    for (name, g) in graphs {
        let lbar = g.laplacian()?.expanded;
        let spectrum = linalg::eigenvalues(&lbar)?;
        let min_re = spectrum.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let round_trip = CommGraph::parse(&g.serialize())? == g;
        let s = GraphSummary {
            name,
            nodes: g.len(),
            rootset: g.check_rootset(),
            min_real_eigenvalue: min_re,
            round_trip,
        };
        println!(
            "{:<24} n={:<3} root set={:<5} min Re λ(L̄)={:<10.4} file round trip={}",
            s.name, s.nodes, s.rootset, s.min_real_eigenvalue, s.round_trip
        );
        out.push(s);
    }
    println!("\nexample_b as a graph file:\n{}", CommGraph::example_b().serialize());
    Ok(out)
}

#[allow(dead_code)]
fn main() -> satsync::Result<()> {
    run_example().map(|_| ())
}
