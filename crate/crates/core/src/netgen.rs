//! Seeded generation of valid random networks, used to exercise the
//! solver against the enumeration oracle and the partitioner at scale.
//!
//! Construction is pool-based: instances are created in a fixed order and
//! every input port draws its feeder from the pool of already-created
//! output ports, so the result is a DAG with all non-env inputs connected.
//! The same seed always yields the same network.

use std::collections::BTreeMap;

use crate::graph::{bind_instance, Channel, Instance, Network};
use crate::rand::SplitMix64;
use crate::registry::registry_spec;

struct Pool {
    outputs: Vec<(String, String)>,
}

impl Pool {
    fn take(&mut self, rng: &mut SplitMix64) -> (String, String) {
        let idx = rng.below(self.outputs.len() as u64) as usize;
        self.outputs.swap_remove(idx)
    }

    fn put(&mut self, instance: &str, port: &str) {
        self.outputs.push((instance.to_string(), port.to_string()));
    }

    fn len(&self) -> usize {
        self.outputs.len()
    }
}

fn make(kind: &str, name: &str, inputs: &[&str], outputs: &[&str], config: &[(&str, &str)]) -> Instance {
    let spec = registry_spec(
        kind,
        inputs.iter().map(|s| s.to_string()).collect(),
        outputs.iter().map(|s| s.to_string()).collect(),
    )
    .expect("registry kind");
    let config: BTreeMap<String, String> =
        config.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    bind_instance(&spec, name, config).expect("generated names are valid")
}

fn env_config(conf: bool, intg: bool) -> Vec<(&'static str, &'static str)> {
    let mut config = Vec::new();
    if conf {
        config.push(("confidentiality", "true"));
    }
    if intg {
        config.push(("integrity", "true"));
    }
    config
}

fn feed(net: &mut Network, pool: &mut Pool, rng: &mut SplitMix64, dst: &str, dst_port: &str) {
    let (src, src_port) = pool.take(rng);
    net.add_channel(Channel::new(&src, &src_port, dst, dst_port));
}

/// A small random network: one or two env sources, a few middle
/// primitives, one or two env sinks. Port atom counts stay within the
/// enumeration oracle's reach (at most 22 atoms). Env guarantee bits are
/// biased toward true so a healthy share of the networks is satisfiable
/// while mismatched demands still produce contradictions.
pub fn random_network(seed: u64) -> Network {
    let mut rng = SplitMix64::new(seed);
    let mut net = Network::new(format!("gen{seed}"));
    let mut pool = Pool { outputs: Vec::new() };
    let budget = 16 + rng.below(7) as usize;
    let mut atoms = 0usize;
    let bit = |rng: &mut SplitMix64| rng.below(10) < 7;

    let n_src = 1 + rng.below(2);
    for i in 0..n_src {
        let name = format!("in{}", i + 1);
        let (conf, intg) = (bit(&mut rng), bit(&mut rng));
        net.add_instance(make("env", &name, &[], &["o"], &env_config(conf, intg)))
            .expect("fresh name");
        pool.put(&name, "o");
        atoms += 2;
    }
    let n_const = rng.below(3);
    for i in 0..n_const {
        let name = format!("k{}", i + 1);
        let value = (1 + rng.below(250)).to_string();
        net.add_instance(make("const", &name, &[], &["Const"], &[("value", &value)]))
            .expect("fresh name");
        pool.put(&name, "Const");
        atoms += 2;
    }

    // (kind, inputs taken from the pool, atom cost)
    const MIDDLES: &[(&str, usize, usize)] = &[
        ("branch", 1, 6),
        ("concat", 2, 6),
        ("rng", 1, 4),
        ("hmac", 2, 6),
        ("enc_ctr", 3, 8),
    ];
    let mut middle = 0usize;
    loop {
        let feasible: Vec<&(&str, usize, usize)> = MIDDLES
            .iter()
            .filter(|(_, needs, cost)| pool.len() >= *needs && atoms + cost + 2 <= budget)
            .collect();
        if feasible.is_empty() {
            break;
        }
        let (kind, _, cost) = feasible[rng.below(feasible.len() as u64) as usize];
        middle += 1;
        let name = format!("p{middle}");
        match *kind {
            "branch" => {
                net.add_instance(make("transform", &name, &["v"], &["o1", "o2"], &[]))
                    .expect("fresh name");
                feed(&mut net, &mut pool, &mut rng, &name, "v");
                pool.put(&name, "o1");
                pool.put(&name, "o2");
            }
            "concat" => {
                net.add_instance(make("transform", &name, &["i1", "i2"], &["o"], &[("op", "concat")]))
                    .expect("fresh name");
                feed(&mut net, &mut pool, &mut rng, &name, "i1");
                feed(&mut net, &mut pool, &mut rng, &name, "i2");
                pool.put(&name, "o");
            }
            "rng" => {
                net.add_instance(make("rng", &name, &[], &[], &[])).expect("fresh name");
                feed(&mut net, &mut pool, &mut rng, &name, "len");
                pool.put(&name, "out");
            }
            "hmac" => {
                net.add_instance(make("hmac", &name, &[], &[], &[])).expect("fresh name");
                feed(&mut net, &mut pool, &mut rng, &name, "Key");
                feed(&mut net, &mut pool, &mut rng, &name, "Msg");
                pool.put(&name, "Tag");
            }
            "enc_ctr" => {
                net.add_instance(make("enc_ctr", &name, &[], &[], &[])).expect("fresh name");
                feed(&mut net, &mut pool, &mut rng, &name, "Key");
                feed(&mut net, &mut pool, &mut rng, &name, "Ctr");
                feed(&mut net, &mut pool, &mut rng, &name, "Plain");
                pool.put(&name, "Cipher");
            }
            _ => unreachable!(),
        }
        atoms += cost;
    }

    let n_snk = (1 + rng.below(2) as usize).min(pool.len());
    for i in 0..n_snk {
        if atoms + 2 > budget + 2 {
            break;
        }
        let name = format!("out{}", i + 1);
        let (conf, intg) = (bit(&mut rng), bit(&mut rng));
        net.add_instance(make("env", &name, &["i"], &[], &env_config(conf, intg)))
            .expect("fresh name");
        feed(&mut net, &mut pool, &mut rng, &name, "i");
        atoms += 2;
    }
    net
}

/// A network of exactly `instances` instances and `channels` channels:
/// two trusting env sources, a body of constants, fan-outs, joins and
/// counter-mode encryptions, and two trusting env sinks. Every env grants
/// both guarantees, so the network is satisfiable by construction.
///
/// Panics when no instance mix fits the requested sizes.
pub fn sized_network(seed: u64, instances: usize, channels: usize) -> Network {
    assert!(instances >= 6 && channels >= 3, "too small to build");
    let body = instances - 4;
    let wires = channels - 2;
    let encs = wires / 7;
    let concats = wires / 11;
    let branches = wires
        .checked_sub(3 * encs + 2 * concats)
        .expect("channel budget fits the mix");
    let consts = body
        .checked_sub(branches + concats + encs)
        .expect("instance budget fits the mix");
    assert!(
        2 + consts + branches >= concats + 2 * encs + 2,
        "pool would run dry before the sinks"
    );

    let mut rng = SplitMix64::new(seed);
    let mut net = Network::new(format!("sized{seed}"));
    let mut pool = Pool { outputs: Vec::new() };
    let trusting = env_config(true, true);

    for i in 0..2 {
        let name = format!("src{}", i + 1);
        net.add_instance(make("env", &name, &[], &["o"], &trusting)).expect("fresh name");
        pool.put(&name, "o");
    }
    for i in 0..consts {
        let name = format!("c{:03}", i + 1);
        let value = (1 + rng.below(250)).to_string();
        net.add_instance(make("const", &name, &[], &["Const"], &[("value", &value)]))
            .expect("fresh name");
        pool.put(&name, "Const");
    }
    for i in 0..branches {
        let name = format!("br{:03}", i + 1);
        net.add_instance(make("transform", &name, &["v"], &["o1", "o2"], &[]))
            .expect("fresh name");
        feed(&mut net, &mut pool, &mut rng, &name, "v");
        pool.put(&name, "o1");
        pool.put(&name, "o2");
    }
    for i in 0..concats {
        let name = format!("cat{:03}", i + 1);
        net.add_instance(make("transform", &name, &["i1", "i2"], &["o"], &[("op", "concat")]))
            .expect("fresh name");
        feed(&mut net, &mut pool, &mut rng, &name, "i1");
        feed(&mut net, &mut pool, &mut rng, &name, "i2");
        pool.put(&name, "o");
    }
    for i in 0..encs {
        let name = format!("enc{:03}", i + 1);
        net.add_instance(make("enc_ctr", &name, &[], &[], &[])).expect("fresh name");
        feed(&mut net, &mut pool, &mut rng, &name, "Key");
        feed(&mut net, &mut pool, &mut rng, &name, "Ctr");
        feed(&mut net, &mut pool, &mut rng, &name, "Plain");
        pool.put(&name, "Cipher");
    }
    for i in 0..2 {
        let name = format!("snk{}", i + 1);
        net.add_instance(make("env", &name, &["i"], &[], &trusting)).expect("fresh name");
        feed(&mut net, &mut pool, &mut rng, &name, "i");
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{solve_lexmin, Outcome};

    fn shape(net: &Network) -> (Vec<(String, String)>, Vec<Channel>) {
        let insts = net.instances().map(|i| (i.name.clone(), i.kind.clone())).collect();
        (insts, net.channels().to_vec())
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(shape(&random_network(42)), shape(&random_network(42)));
        assert_ne!(shape(&random_network(42)), shape(&random_network(43)));
        assert_eq!(shape(&sized_network(5, 20, 25)), shape(&sized_network(5, 20, 25)));
    }

    #[test]
    fn random_networks_validate_and_stay_within_oracle_reach() {
        let mut sat = 0;
        for seed in 0..60 {
            let net = random_network(seed);
            let report = net.validate();
            assert!(report.errors.is_empty(), "seed {seed}: {:?}", report.errors);
            assert!(net.atoms().len() <= 24, "seed {seed} has {} atoms", net.atoms().len());
            match solve_lexmin(&net).unwrap() {
                Outcome::Satisfiable(_) => sat += 1,
                Outcome::Contradiction(_) => {}
            }
        }
        assert!(sat >= 20, "only {sat} of 60 seeds were satisfiable");
    }

    #[test]
    fn sized_network_hits_exact_counts() {
        let net = sized_network(0, 186, 285);
        assert_eq!(net.instance_count(), 186);
        assert_eq!(net.channels().len(), 285);
        let report = net.validate();
        assert!(report.errors.is_empty(), "{:?}", report.errors);
        let envs = net.instances().filter(|i| i.kind == "env").count();
        assert_eq!(envs, 4);
        match solve_lexmin(&net).unwrap() {
            Outcome::Satisfiable(_) => {}
            Outcome::Contradiction(_) => panic!("trusting envs must be satisfiable"),
        }
    }

    #[test]
    fn sized_network_is_acyclic() {
        let net = sized_network(3, 40, 55);
        // Channels only point from earlier to later creations; a simple
        // longest-path sweep over name-sorted instances must terminate.
        let mut order: Vec<&str> = Vec::new();
        let mut remaining: std::collections::BTreeMap<&str, usize> = net
            .instances()
            .map(|i| {
                let fed = net.channels().iter().filter(|c| c.dst == i.name).count();
                (i.name.as_str(), fed)
            })
            .collect();
        let mut queue: Vec<&str> = remaining
            .iter()
            .filter(|(_, n)| **n == 0)
            .map(|(name, _)| *name)
            .collect();
        while let Some(name) = queue.pop() {
            order.push(name);
            for c in net.channels().iter().filter(|c| c.src == name) {
                let n = remaining.get_mut(c.dst.as_str()).unwrap();
                *n -= 1;
                if *n == 0 {
                    queue.push(c.dst.as_str());
                }
            }
        }
        assert_eq!(order.len(), net.instance_count(), "topological order covers everything");
    }
}
