// Same rationale as the library: `!(x > 0.0)` rejects NaN, `x <= 0.0` lets
// it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cli;

fn main() {
    std::process::exit(cli::run());
}
