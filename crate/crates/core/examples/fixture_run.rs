//! Summarizes a topic from the committed fixture corpus and prints the
//! Markdown.
//!
//!     cargo run -p mmsum-core --example fixture_run -- "solar eclipse"

use std::sync::Arc;

use mmsum_core::retrieval::FixtureCorpus;
use mmsum_core::{default_fixture_dir, normalize_topic, Pipeline, SummaryConfig};

fn main() {
    let topic = std::env::args().nth(1).unwrap_or_else(|| "solar eclipse".into());
    let corpus = Arc::new(FixtureCorpus::load_dir(default_fixture_dir()).expect("fixture corpus"));
    let topic = normalize_topic(&topic).expect("topic");
    let bundle = Pipeline::offline(corpus, topic.seed)
        .run(&topic, SummaryConfig::default(), &mut |e| eprintln!("{e:?}"))
        .expect("run");
    println!("{}", bundle.rendered_markdown);
    for w in &bundle.warnings {
        eprintln!("warning: {w}");
    }
}
