//! Guide chapters, compiled so that their snippets run as doctests.

macro_rules! chapters {
    ($($name:ident => $file:literal),* $(,)?) => {
        $(
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            pub mod $name {}
        )*
    };
}

chapters! {
    index => "index.md",
    hypergraphs => "hypergraphs.md",
    partitioning => "partitioning.md",
    partition_state => "partition-state.md",
    refinement => "refinement.md",
    flows => "flows.md",
    determinism => "determinism.md",
    benchmarking => "benchmarking.md",
    cli => "cli.md",
}
