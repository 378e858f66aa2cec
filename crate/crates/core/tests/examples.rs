//! Every example runs to completion.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::run_example();
        }
    };
}

example!(local_polytope);
example!(collapse_families);
example!(two_box_signaling);
example!(time_window);
example!(monte_carlo);
example!(channel_capacity);
example!(quadrature);
example!(cli_scenario);
