//! Regenerates the Johansen trace critical value table.
//!
//! cargo run --release --example critical_values

use peg_nexus::johansen::{
    critical_values_from_simulation, CRITICAL_VALUE_REPLICATIONS, CRITICAL_VALUE_SAMPLE,
    CRITICAL_VALUE_SEED,
};

fn main() {
    let table = critical_values_from_simulation(
        CRITICAL_VALUE_REPLICATIONS,
        CRITICAL_VALUE_SAMPLE,
        CRITICAL_VALUE_SEED,
    );
    println!("pub const TRACE_CRITICAL_VALUES: [[f64; 3]; 2] = [");
    for row in table {
        println!("    [{:.2}, {:.2}, {:.2}],", row[0], row[1], row[2]);
    }
    println!("];");
}
