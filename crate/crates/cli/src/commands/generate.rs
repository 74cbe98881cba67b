//! `softpen generate`: export a zoo instance as a problem spec.

use std::path::Path;

use softpen::zoo::{make_entrywise_linear, make_entrywise_quadratic, make_inverse_kkt};

use super::emit;
use crate::error::CliResult;
use crate::FamilyArg;

pub fn run(
    family: FamilyArg,
    n: usize,
    m: usize,
    seed: u64,
    mu: f64,
    n_active: Option<usize>,
    out: Option<&Path>,
) -> CliResult<()> {
    let instance = match family {
        FamilyArg::EntrywiseLinear => make_entrywise_linear(n, m, None)?,
        FamilyArg::EntrywiseQuadratic => make_entrywise_quadratic(n, m)?,
        FamilyArg::InverseKkt => {
            make_inverse_kkt(seed, n, m, mu, n_active.unwrap_or(m.div_ceil(2)))?
        }
    };
    let mut json = instance.to_spec().to_json();
    json.push('\n');
    emit(out, json.as_bytes())
}
