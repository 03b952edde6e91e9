//! Filter expressions: parsing, schema checks and exact selectivity.

use favor::bench::synth::synthesize_attributes;
use favor::filter::exact_selectivity;
use favor::parse_filter;

fn main() {
    let table = synthesize_attributes(10_000, 1, 2, 1, 3);
    let exprs = [
        "bool0 = true",
        "int0 = 3",
        "int0 in {0, 1, 2} and bool0 = true",
        "float0 in [0.0, 0.25]",
        "not (int1 = 0) or bool0 = false",
        "int7 = 1",
        "int0 = ",
    ];
    for e in exprs {
        match parse_filter(e).and_then(|f| exact_selectivity(&f, &table).map(|p| (f, p))) {
            Ok((f, p)) => println!("{e:<40} p = {p:.4}  {f:?}"),
            Err(err) => println!("{e:<40} error: {err}"),
        }
    }
}
