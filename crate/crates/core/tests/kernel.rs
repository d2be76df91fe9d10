use std::collections::{HashSet, VecDeque};

use mmk::{ObjId, Registry, Value};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn class_is_its_own_class() {
    let reg = Registry::bootstrap();
    let class = reg.k.class;
    assert_eq!(reg.of(&Value::Obj(class)), class);
    assert!(reg.is_kind_of(&Value::Obj(class), reg.k.object));
    assert!(reg.is_subclass(class, reg.k.object));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn new_classes_are_instances_of_class(parent_picks in prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 0..3), 20)) {
        let mut reg = Registry::bootstrap();
        let mut made = vec![reg.k.object];
        for (i, picks) in parent_picks.iter().enumerate() {
            let mut parents: Vec<ObjId> = picks.iter().map(|ix| made[ix.index(made.len())]).collect();
            parents.dedup();
            let k = reg.new_class(&format!("K{i}"), &parents, Some(reg.root));
            prop_assert_eq!(reg.of(&Value::Obj(k)), reg.k.class);
            prop_assert!(reg.is_subclass(k, reg.k.object));
            made.push(k);
        }
    }
}

/// Nodes with an `out` sequence; edges are given by index.
fn graph(reg: &mut Registry, edges: &[Vec<usize>]) -> Vec<ObjId> {
    reg.load_str("@Class Node @Attribute out : Seq(Node) end end").unwrap();
    let c = reg.class_by_path("Node").unwrap();
    let nodes: Vec<ObjId> = edges.iter().map(|_| reg.make_object(c, vec![]).unwrap()).collect();
    for (i, es) in edges.iter().enumerate() {
        let out = Value::seq(es.iter().map(|j| Value::Obj(nodes[*j])).collect());
        reg.set_slot(nodes[i], "out", out).unwrap();
    }
    nodes
}

fn reachable(edges: &[Vec<usize>], from: usize) -> usize {
    let mut seen = HashSet::from([from]);
    let mut q = VecDeque::from([from]);
    while let Some(n) = q.pop_front() {
        for m in &edges[n] {
            if seen.insert(*m) {
                q.push_back(*m);
            }
        }
    }
    seen.len()
}

fn random_edges(n: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut es = Vec::new();
            if i + 1 < n && rng.gen_bool(0.9) {
                es.push(i + 1);
            }
            for _ in 0..rng.gen_range(0..3) {
                es.push(rng.gen_range(0..n));
            }
            es
        })
        .collect()
}

#[test]
fn walk_two_cycle() {
    let mut reg = Registry::bootstrap();
    let nodes = graph(&mut reg, &[vec![1], vec![0]]);
    let stats = reg.walk(&Value::Obj(nodes[0]), |_, _| {});
    assert_eq!(stats.visited, 2);
    assert_eq!(stats.references, 1);
}

#[test]
fn walk_large_random_graph() {
    let edges = random_edges(1000, 7);
    let mut reg = Registry::bootstrap();
    let nodes = graph(&mut reg, &edges);
    let stats = reg.walk(&Value::Obj(nodes[0]), |_, _| {});
    assert_eq!(stats.visited, reachable(&edges, 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn walk_visits_each_reachable_object_once(n in 1usize..60, seed in any::<u64>()) {
        let edges = random_edges(n, seed);
        let mut reg = Registry::bootstrap();
        let nodes = graph(&mut reg, &edges);
        let mut objects = Vec::new();
        let stats = reg.walk(&Value::Obj(nodes[0]), |_, v| if let Value::Obj(o) = v { objects.push(*o) });
        let distinct: HashSet<_> = objects.iter().collect();
        prop_assert_eq!(distinct.len(), objects.len());
        prop_assert_eq!(stats.visited, reachable(&edges, 0));

        let reversed: Vec<Vec<usize>> = edges.iter().map(|es| es.iter().rev().copied().collect()).collect();
        let mut reg2 = Registry::bootstrap();
        let nodes2 = graph(&mut reg2, &reversed);
        prop_assert_eq!(reg2.walk(&Value::Obj(nodes2[0]), |_, _| {}).visited, stats.visited);
    }
}
