//! Shared inputs for the solver benchmarks.

use clubx_core::gen::{
    gen_master_graph, sample_pool_with, thin_edges, GenConfig, MasterGraph, PoolSample,
};

/// Thinned master of 400 vertices from the default generator settings.
pub fn master(seed: u64) -> (MasterGraph, GenConfig) {
    let config = GenConfig {
        master_size: 400,
        seed,
        ..GenConfig::default()
    };
    let master = gen_master_graph(&config).expect("default config is valid");
    let thinned = MasterGraph {
        pool: thin_edges(&master.pool, config.edge_failure_rate, seed),
        ..master
    };
    (thinned, config)
}

pub fn pool(size: usize, seed: u64) -> PoolSample {
    let (master, config) = master(seed);
    sample_pool_with(&master, size, &config, seed).expect("master is large enough")
}
