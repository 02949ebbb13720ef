//! Randomized invariants checked against independent reference models.

mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regmap_core::cost::{estimate_registers, overhead, Calibration, DesignPoint};
use regmap_core::protocol::{BusMaster, Decoder, MasterEvent};
use regmap_core::sim::{check_coherence, violation_count, SimConfig, Simulator, TraceKind};
use regmap_core::spec::{address_map, parse_spec, serialize, validate, DiagCode, Topology};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spec_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let domains = r.random_range(1..=3);
        let mut spec = random_distributed_spec(&mut r, domains, 0);
        if r.random_bool(0.5) {
            spec.architecture.topology = [Topology::Global, Topology::GlobalRegistered, Topology::GlobalCdcDest][r.random_range(0..3)];
            spec.architecture.sync_length = r.random_range(2..=4);
            spec.architecture.global_width = Some(r.random_range(1..=64));
            spec.architecture.global_depth = Some(r.random_range(1..=1024));
        }
        let text = serialize(&spec);
        let back = parse_spec(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(serialize(&back), text);
    }

    #[test]
    fn decoder_agrees_with_linear_search(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = random_distributed_spec(&mut r, 1, 0);
        let map = address_map(&spec);
        let mut addrs: Vec<u64> = map.iter().map(|e| e.address).collect();
        addrs.dedup();
        prop_assert_eq!(addrs.len(), map.len(), "addresses collide");
        prop_assert_eq!(addrs, mapped_addresses(&spec));
        let decoder = Decoder::new(&spec);
        for addr in 0..(1u64 << spec.bus.addr_width) {
            let got = decoder.decode(addr).map(|h| (h.slave, h.offset));
            let want = brute_decode(&spec, addr).map(|(s, o, _)| (s, o));
            prop_assert_eq!(got, want, "addr {}", addr);
        }
    }

    #[test]
    fn validator_flags_exactly_the_broken_layouts(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut spec = random_distributed_spec(&mut r, 1, 2);
        let space = 1u64 << spec.bus.addr_width;
        for s in &mut spec.slaves {
            if r.random_bool(0.3) {
                s.base_addr = r.random_range(0..space);
            }
            if s.registers.len() >= 2 && r.random_bool(0.2) {
                let off = s.registers[0].offset;
                s.registers[1].offset = off;
            }
        }
        let window = 1u64 << spec.bus.offset_bits();
        let overlap = (0..spec.slaves.len()).any(|i| {
            (0..i).any(|j| {
                let (a, b) = (spec.slaves[i].base_addr, spec.slaves[j].base_addr);
                a < b + window && b < a + window
            })
        });
        let misaligned = spec.slaves.iter().any(|s| s.base_addr % window != 0);
        let duplicate = spec.slaves.iter().any(|s| {
            s.registers.iter().enumerate().any(|(i, a)| s.registers[..i].iter().any(|b| b.offset == a.offset))
        });
        let report = validate(&spec);
        prop_assert_eq!(report.contains(DiagCode::OverlappingSlaves), overlap);
        prop_assert_eq!(report.contains(DiagCode::MisalignedBase), misaligned);
        prop_assert_eq!(report.contains(DiagCode::DuplicateOffset), duplicate);
        prop_assert_eq!(report.is_empty(), !overlap && !misaligned && !duplicate);
    }

    #[test]
    fn master_accepts_in_order_and_only_when_ready(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = random_distributed_spec(&mut r, 1, 1);
        let addrs = mapped_addresses(&spec);
        prop_assume!(!addrs.is_empty());
        let decoder = Decoder::new(&spec);
        let mut master = BusMaster::new(None);
        let n = r.random_range(1..40);
        for i in 0..n {
            master.push(addrs[r.random_range(0..addrs.len())], i);
        }
        let mut next_seq = 0;
        for _ in 0..10_000 {
            if master.is_idle() {
                break;
            }
            let ready: Vec<bool> = (0..spec.slaves.len()).map(|_| r.random_bool(0.3)).collect();
            let out = master.step(&decoder, &ready);
            for e in out.events {
                if let MasterEvent::Accepted { tx, slave, .. } = e {
                    prop_assert!(ready[slave], "accepted while not ready");
                    prop_assert_eq!(out.signals.cfg_sel, Some(slave));
                    prop_assert_eq!(tx.seq, next_seq);
                    prop_assert_eq!(tx.data, next_seq);
                    next_seq += 1;
                }
            }
        }
        prop_assert_eq!(next_seq, n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = random_distributed_spec(&mut r, 2, 1);
        let script = random_script(&mut r, &spec, &ScriptShape { wild_addr: 0.05, ..Default::default() });
        let run = || {
            let mut sim = Simulator::new(&spec, SimConfig::default()).unwrap();
            sim.load(&script).unwrap();
            assert!(sim.run_until_idle(u64::MAX));
            (sim.trace().hash(), sim.state_hash())
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn final_state_is_the_fold_of_issued_writes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let domains = r.random_range(2..=3);
        let spec = random_distributed_spec(&mut r, domains, 1);
        let script = random_script(&mut r, &spec, &ScriptShape::default());
        let mut sim = Simulator::new(&spec, SimConfig::default()).unwrap();
        sim.load(&script).unwrap();
        prop_assert!(sim.run_until_idle(u64::MAX));
        for ((slave, offset), want) in fold_oracle(&spec, &script) {
            prop_assert_eq!(sim.backdoor_read(slave, offset).unwrap(), want);
        }
        let mut sorted = script.writes.clone();
        sorted.sort_by_key(|w| w.at_cycle);
        let accepted: Vec<(u64, u64)> = sim
            .trace()
            .of_kind(TraceKind::WriteAccepted)
            .map(|e| (e.addr.unwrap(), e.data.unwrap()))
            .collect();
        let issued: Vec<(u64, u64)> = sorted.iter().map(|w| (w.addr, w.data)).collect();
        prop_assert_eq!(accepted, issued);
        prop_assert!(check_coherence(sim.trace()).is_empty());
        prop_assert_eq!(violation_count(sim.trace()), 0);
    }

    #[test]
    fn swapping_one_slave_leaves_the_others_alone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = random_distributed_spec(&mut r, 2, 2);
        let script = random_script(&mut r, &spec, &ScriptShape { max_writes: 50, ..Default::default() });
        let mut sim = Simulator::new(&spec, SimConfig::default()).unwrap();
        sim.load(&script).unwrap();
        prop_assert!(sim.run_until_idle(u64::MAX));
        let target = r.random_range(0..spec.slaves.len());
        let before: Vec<String> = (0..spec.slaves.len()).map(|s| sim.slave_state_hash(s)).collect();
        let fragment = random_fragment(&mut r, &spec, 8);
        sim.swap_module(target, &fragment).unwrap();
        for (s, h) in before.iter().enumerate() {
            if s != target {
                prop_assert_eq!(&sim.slave_state_hash(s), h);
            }
        }
        for reg in &fragment.registers {
            prop_assert_eq!(sim.backdoor_read(target, reg.offset).unwrap(), reg.reset_value);
        }
    }

    #[test]
    fn register_estimate_is_structure_plus_overhead(p in design_point()) {
        let cal = Calibration::shipped();
        let flops = p.structure().unwrap().flipflops;
        prop_assert_eq!(estimate_registers(&p, &cal) as i64 - overhead(&p, &cal), flops as i64);
    }
}

fn design_point() -> impl Strategy<Value = DesignPoint> {
    (0usize..4, 1u32..=64, 1u32..=64, 1u32..=16, 2u32..=4, 1u32..=6, 0u32..=64).prop_map(
        |(t, depth, width, w, l, s, n)| {
            let topology = Topology::ALL[t];
            let mut p = DesignPoint::new(topology);
            p.depth = depth;
            p.width = width;
            p.target_width = w;
            p.sync_length = l;
            p.slaves = s;
            let capacity = depth * width / w;
            p.targets = if topology.is_global() { n.min(capacity) } else { n };
            p
        },
    )
}

proptest! {
    #[test]
    fn registers_are_affine_in_targets_and_slaves(p in design_point()) {
        let cal = Calibration::shipped();
        let regs = |q: &DesignPoint| estimate_registers(q, &cal) as i64;
        let mut series = Vec::new();
        for k in 0..4 {
            let mut q = p;
            if p.is_global() {
                q.depth = p.depth + 64;
                q.targets = p.targets + k;
            } else {
                q.slaves = p.slaves + k;
            }
            series.push(regs(&q));
        }
        let d: Vec<i64> = series.windows(2).map(|w| w[1] - w[0]).collect();
        prop_assert!(d.windows(2).all(|w| w[0] == w[1]), "{:?}", series);
        let stages = p.stages;
        let want = if p.is_global() {
            i64::from(p.target_width) * i64::from(p.sync_length * u32::from(stages.cdc) + u32::from(stages.dest_registers))
        } else {
            i64::from(p.targets * p.target_width) + cal.c_distributed_per_slave
        };
        prop_assert_eq!(d[0], want);
    }

    #[test]
    fn fmax_falls_when_the_bundle_doubles(bits in 1u64..1_000_000) {
        let fit = Calibration::shipped().fmax;
        prop_assert!(fit.evaluate(2 * bits) < fit.evaluate(bits));
    }
}
