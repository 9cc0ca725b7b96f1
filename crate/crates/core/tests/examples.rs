macro_rules! example {
    ($name:ident, $path:literal) => {
        #[path = $path]
        mod $name;

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(
    disaggregated_metrics,
    "../examples/disaggregated_metrics.rs"
);
example!(correlation_remover, "../examples/correlation_remover.rs");
example!(threshold_optimizer, "../examples/threshold_optimizer.rs");
example!(
    exponentiated_gradient,
    "../examples/exponentiated_gradient.rs"
);
example!(model_comparison, "../examples/model_comparison.rs");
example!(csv_and_cli, "../examples/csv_and_cli.rs");
example!(synthetic_data, "../examples/synthetic_data.rs");
