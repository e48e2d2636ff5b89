//! Small Monte-Carlo sweep over the attack size, summarized per method.
use lasso_sse::harness::{run_batch_experiment, summarize, write_summary, ExperimentConfig, GroupKey, Method, Sweep};

fn main() -> lasso_sse::Result<()> {
    let config = ExperimentConfig {
        n: 8,
        p: 12,
        s: 1,
        trials: 10,
        sweep: Sweep::S { values: vec![1, 2, 3] },
        methods: vec![Method::Lasso, Method::Exact, Method::EtpgLike],
        ..Default::default()
    };
    let records = run_batch_experiment(&config)?;
    let summary = summarize(&records, &[GroupKey::Method, GroupKey::S])?;
    write_summary(&summary, std::io::stdout().lock())
}
