//! Random machines for property tests, `verify` and benchmarks.
//!
//! Plain machines are accessible by construction: a random spanning
//! arborescence from the start, then extra arcs. Such machines rarely have
//! non-trivial modules, so [`modular_fsm`] plants some by expanding small
//! machines into states.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::decomposition::DecompTree;
use crate::fsm::{Fsm, StateId, StateSet, Symbol};
use crate::hfsm::Hfsm;
use crate::hierarchy::nest;
use crate::modules::overlapping;

/// Alphabet `a, b, c, …` of size `k` (at most 26).
pub fn alphabet(k: usize) -> Vec<Symbol> {
    assert!((1..=26).contains(&k));
    (0..k)
        .map(|i| Symbol::new(((b'a' + i as u8) as char).to_string()).unwrap())
        .collect()
}

fn build<R: Rng + ?Sized>(rng: &mut R, names: Vec<StateId>, k: usize, density: f64) -> Fsm {
    let n = names.len();
    let sigma = alphabet(k);
    let mut delta: Vec<Option<usize>> = vec![None; n * k];
    // Arborescence: each later state hangs off a free slot of an earlier one.
    for i in 1..n {
        let free: Vec<usize> = (0..i * k).filter(|&s| delta[s].is_none()).collect();
        let slot = *free.choose(rng).expect("k >= 1 leaves a free slot");
        delta[slot] = Some(i);
    }
    for slot in delta.iter_mut() {
        if slot.is_none() && rng.gen_bool(density.clamp(0.0, 1.0)) {
            *slot = Some(rng.gen_range(0..n));
        }
    }
    let arcs = delta
        .iter()
        .enumerate()
        .filter_map(|(s, t)| {
            t.map(|w| (names[s / k].clone(), sigma[s % k].clone(), names[w].clone()))
        })
        .collect();
    let start = names[0].clone();
    Fsm::assemble(names, sigma, arcs, start).expect("generated machine is valid")
}

/// An accessible machine on states `1..=n` over `k` symbols. Each slot left
/// free by the arborescence gets an arc with probability `density`.
pub fn random_fsm<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, density: f64) -> Fsm {
    assert!(n >= 1);
    let mut names: Vec<StateId> = (1..=n)
        .map(|i| StateId::new(i.to_string()).unwrap())
        .collect();
    // Random start, so the start is not always the smallest name.
    let s = rng.gen_range(0..n);
    names.swap(0, s);
    build(rng, names, k, density)
}

/// An accessible machine with about `n` states built by repeatedly
/// expanding small random machines into random states.
pub fn modular_fsm<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, density: f64) -> Fsm {
    assert!(n >= 1);
    let mut counter = 0usize;
    let mut fresh = |m: usize| -> Vec<StateId> {
        (0..m)
            .map(|_| {
                counter += 1;
                StateId::new(format!("s{counter}")).unwrap()
            })
            .collect()
    };
    let first = rng.gen_range(1..=n.min(4));
    let mut z = build(rng, fresh(first), k, density);
    while z.num_states() < n {
        let room = n - z.num_states() + 1;
        let size = rng.gen_range(2..=room.min(4));
        let inner = build(rng, fresh(size), k, density);
        let host = rng.gen_range(0..z.num_states());
        // An exit the inner machine never takes cuts off part of z.
        z = z
            .expand(host, &inner)
            .expect("fresh names never collide")
            .accessible_part();
    }
    // Renumber to 1..=n so generated machines look alike.
    let order: Vec<String> = z.states().iter().map(|s| s.to_string()).collect();
    z.rename_states(|s| {
        let i = order.iter().position(|o| o == s.as_str()).unwrap();
        StateId::new((i + 1).to_string()).unwrap()
    })
    .unwrap()
}

/// A machine from either generator, chosen at random.
pub fn mixed_fsm<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Fsm {
    if rng.gen_bool(0.5) {
        let density = rng.gen_range(0.0..0.6);
        random_fsm(rng, n, k, density)
    } else {
        let density = rng.gen_range(0.0..0.5);
        modular_fsm(rng, n, k, density)
    }
}

/// Thin modules of `z` to nest: tree nodes other than the whole set, and
/// unions of overlapping pairs of them.
fn nestable(z: &Fsm) -> Vec<StateSet> {
    let Ok(tree) = DecompTree::build(z) else {
        return Vec::new();
    };
    let nodes: Vec<StateSet> = tree
        .modules()
        .into_iter()
        .filter(|m| m.len() < z.num_states())
        .collect();
    let mut out = nodes.clone();
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if overlapping(a, b) {
                let u: StateSet = a.union(b).copied().collect();
                if u.len() < z.num_states() && !out.contains(&u) {
                    out.push(u);
                }
            }
        }
    }
    out
}

/// A thin HFSM whose flattening has between 4 and `max_states` states, made
/// by nesting randomly chosen thin modules of a random machine. Every
/// machine has at least two states.
pub fn thin_hfsm<R: Rng + ?Sized>(rng: &mut R, max_states: usize, k: usize) -> Hfsm {
    assert!(max_states >= 4);
    loop {
        let n = rng.gen_range(4..=max_states);
        let density = rng.gen_range(0.0..0.4);
        let mut z = Hfsm::flat("Z", modular_fsm(rng, n, k, density)).unwrap();
        let rounds = rng.gen_range(0..=5);
        for _ in 0..rounds {
            let names: Vec<String> = z
                .machines()
                .filter(|(_, m)| m.num_states() >= 3)
                .map(|(n, _)| n.to_string())
                .collect();
            let Some(name) = names.choose(rng) else {
                break;
            };
            let options = nestable(z.machine(name).unwrap());
            let Some(set) = options.choose(rng) else {
                continue;
            };
            if let Ok((next, _)) = nest(&z, name, set) {
                z = next;
            }
        }
        if z.is_thin() && z.machines().all(|(_, m)| m.num_states() >= 2) {
            return z;
        }
    }
}

/// A word of length at most `max_len` over `sigma`.
pub fn random_word<R: Rng + ?Sized>(rng: &mut R, sigma: &[Symbol], max_len: usize) -> Vec<Symbol> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| sigma.choose(rng).unwrap().clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_machines_are_accessible() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..12 {
            for k in 1..4 {
                let z = random_fsm(&mut rng, n, k, 0.3);
                assert_eq!(z.num_states(), n);
                assert!(z.is_accessible());
                let z = modular_fsm(&mut rng, n, k, 0.3);
                assert_eq!(z.num_states(), n);
                assert!(z.is_accessible());
            }
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let a = random_fsm(&mut ChaCha8Rng::seed_from_u64(9), 10, 3, 0.5);
        let b = random_fsm(&mut ChaCha8Rng::seed_from_u64(9), 10, 3, 0.5);
        assert_eq!(a, b);
    }

    #[test]
    fn thin_hfsms_are_thin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut nested = 0;
        for _ in 0..20 {
            let z = thin_hfsm(&mut rng, 12, 2);
            assert!(z.is_thin());
            assert!(z.flatten().num_states() <= 12);
            nested += z.order() - 1;
        }
        assert!(nested > 0);
    }
}
