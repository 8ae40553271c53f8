//! Named fixtures usable wherever the CLI expects an instance file.

use resilient_te::fixtures;
use resilient_te::prob::{ProbabilisticInstance, DEFAULT_CUTOFF};

use crate::error::{HarnessError, Result};
use crate::format::InstanceFile;

/// Names accepted by [`bundled`]; `generalized-P-N-M` is also accepted.
pub const BUNDLED: &[&str] = &[
    "four-tunnel",
    "four-tunnel-3",
    "parallel",
    "hint",
    "realization-m1",
    "realization-m2",
    "flow-example",
    "cvar-topo",
];

/// Availability target stored with the probabilistic fixtures.
pub const FIXTURE_BETA: f64 = 0.99;

fn probabilistic(inst: resilient_te::net::NetworkInstance) -> Result<InstanceFile> {
    let pinst = ProbabilisticInstance::from_link_probs(inst, FIXTURE_BETA, DEFAULT_CUTOFF)?;
    Ok(InstanceFile::from_prob_instance(pinst))
}

pub fn bundled(name: &str) -> Result<InstanceFile> {
    let plain = |i| Ok(InstanceFile::from_instance(i));
    match name {
        "four-tunnel" => plain(fixtures::four_tunnel()),
        "four-tunnel-3" => plain(fixtures::four_tunnel_first_three()),
        "parallel" => plain(fixtures::parallel()),
        "hint" => plain(fixtures::hint()),
        "realization-m1" => plain(fixtures::realization(false)),
        "realization-m2" => plain(fixtures::realization(true)),
        "flow-example" => probabilistic(fixtures::flow_example()),
        "cvar-topo" => probabilistic(fixtures::cvar_topo()),
        other => {
            let parts: Vec<&str> = other.split('-').collect();
            match parts.as_slice() {
                ["generalized", p, n, m] => {
                    let num = |s: &str| s.parse::<usize>().map_err(|_| HarnessError::UnknownFixture(other.to_string()));
                    plain(fixtures::generalized_family(num(p)?, num(n)?, num(m)?)?)
                }
                _ => Err(HarnessError::UnknownFixture(other.to_string())),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_fixture_is_valid() {
        for name in BUNDLED.iter().copied().chain(["generalized-9-3-3"]) {
            let f = bundled(name).unwrap();
            assert!(f.diagnostics().is_empty(), "{name}: {:?}", f.diagnostics());
        }
    }

    #[test]
    fn unknown_names_fail() {
        assert_eq!(bundled("nope").unwrap_err().code(), "UNKNOWN_FIXTURE");
        assert_eq!(bundled("generalized-x-3-3").unwrap_err().code(), "UNKNOWN_FIXTURE");
    }
}
