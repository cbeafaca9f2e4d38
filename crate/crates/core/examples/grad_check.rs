//! Compares analytic gradients of the full training loss with central
//! finite differences for every message kind.
//!
//! cargo run --example grad_check

use evonet::model::MessageKind;
use evonet::train::{evonet_grad_check, group_errors};

fn main() -> evonet::Result<()> {
    for kind in [MessageKind::Pool, MessageKind::Ggnn, MessageKind::Gat] {
        let report = evonet_grad_check(0, kind)?;
        println!("{kind}: {} entries, max relative error {:.2e}", report.entries_checked, report.max_relative_error);
        for (group, err) in group_errors(&report) {
            println!("  {group:<10} {err:.2e}");
        }
    }
    Ok(())
}
